//! Gromov products, four-point δ, visibility, Bowditch's guessing-geodesics
//! certificate and the coarse Cartan–Hadamard arithmetic.

use crate::error::{pre, Error, Result};
use crate::graph::{DistanceMatrix, Graph};
use crate::half::Half;
use crate::report::{Report, Verdict};
use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub type Q = Ratio<i64>;

/// (x|y)_w = ½(d(x,w) + d(y,w) − d(x,y)).
pub fn gromov_product(g: &Graph, x: u32, y: u32, w: u32) -> Result<Half> {
    let f = g.distances(&[w])?;
    let (dx, dy) = match (f.get(x), f.get(y)) {
        (Some(a), Some(b)) => (a as i64, b as i64),
        _ => return Err(Error::Disconnected("gromov product of points in different components".into())),
    };
    let dxy = g.distances(&[x])?.get(y).expect("same component") as i64;
    Ok(Half::from_twice(dx + dy - dxy))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum DeltaPolicy {
    Exact,
    Sample { n: u64, seed: u64 },
}

impl std::str::FromStr for DeltaPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<DeltaPolicy> {
        if s == "exact" {
            return Ok(DeltaPolicy::Exact);
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["sample", n, seed] => {
                let bad = || Error::Invalid(format!("bad sample policy '{s}'"));
                Ok(DeltaPolicy::Sample { n: n.parse().map_err(|_| bad())?, seed: seed.parse().map_err(|_| bad())? })
            }
            _ => Err(Error::Invalid(format!("unknown delta policy '{s}' (exact | sample:N:SEED)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub delta: Half,
    pub policy: DeltaPolicy,
    pub quadruples: u64,
    /// True for sampled estimates, which only bound δ from below.
    pub lower_bound: bool,
    pub witness: Option<[u32; 4]>,
}

/// Twice the four-point defect: the largest of the three pair sums minus the
/// middle one.
#[inline]
pub(crate) fn defect2(dm: &DistanceMatrix, q: [u32; 4]) -> i64 {
    let [x, y, z, w] = q;
    let mut s = [
        dm.get(x, y) as i64 + dm.get(z, w) as i64,
        dm.get(x, z) as i64 + dm.get(y, w) as i64,
        dm.get(x, w) as i64 + dm.get(y, z) as i64,
    ];
    s.sort_unstable();
    s[2] - s[1]
}

fn better(a: (i64, [u32; 4]), b: (i64, [u32; 4])) -> (i64, [u32; 4]) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Four-point δ of the whole graph.
pub fn four_point_delta(g: &Graph, policy: DeltaPolicy) -> Result<DeltaEstimate> {
    let dm = DistanceMatrix::new(g)?;
    let all: Vec<u32> = (0..g.n() as u32).collect();
    Ok(delta_on(&dm, &all, policy))
}

/// Four-point δ over quadruples drawn from `subset`, measured in the ambient metric.
pub fn delta_on(dm: &DistanceMatrix, subset: &[u32], policy: DeltaPolicy) -> DeltaEstimate {
    let n = subset.len();
    match policy {
        DeltaPolicy::Exact => {
            let (best, count) = (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut best = (0i64, [u32::MAX; 4]);
                    let mut count = 0u64;
                    for j in i + 1..n {
                        for k in j + 1..n {
                            for l in k + 1..n {
                                let q = [subset[i], subset[j], subset[k], subset[l]];
                                let d = defect2(dm, q);
                                count += 1;
                                if d > best.0 || (d == best.0 && best.1[0] == u32::MAX) {
                                    best = (d, q);
                                }
                            }
                        }
                    }
                    (best, count)
                })
                .reduce(|| ((0, [u32::MAX; 4]), 0), |a, b| (better(a.0, b.0), a.1 + b.1));
            DeltaEstimate {
                delta: Half::from_twice(best.0),
                policy,
                quadruples: count,
                lower_bound: false,
                witness: (best.1[0] != u32::MAX).then_some(best.1),
            }
        }
        DeltaPolicy::Sample { n: samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut best = (0i64, [u32::MAX; 4]);
            if n > 0 {
                for _ in 0..samples {
                    let q = [0; 4].map(|_| subset[rng.random_range(0..n)]);
                    let d = defect2(dm, q);
                    if d > best.0 || best.1[0] == u32::MAX {
                        best = (d, q);
                    }
                }
            }
            DeltaEstimate {
                delta: Half::from_twice(best.0),
                policy,
                quadruples: samples,
                lower_bound: true,
                witness: (best.1[0] != u32::MAX).then_some(best.1),
            }
        }
    }
}

fn floor_q(x: Q) -> i64 {
    x.floor().to_integer()
}

fn ceil_q(x: Q) -> i64 {
    x.ceil().to_integer()
}

/// For all interior p,q with d(p,q) ≤ 100ν, looks for a geodesic [p,q′] of
/// length ≥ 200ν passing within ν of q.
pub fn visibility_check(g: &Graph, nu: Q, interior: &[u32]) -> Result<Report> {
    if nu <= Q::zero() {
        return Err(pre("visibility needs ν > 0"));
    }
    let near = floor_q(nu * 100);
    let long = ceil_q(nu * 200);
    let slack = floor_q(nu);
    let base = Report::new("visibility", Verdict::Inconclusive)
        .with("nu", nu.to_string())
        .with("interior", interior.len())
        .with("required_length", long);
    if interior.is_empty() {
        return Ok(base.note("empty interior"));
    }
    let failures: Vec<(u32, u32, i64)> = interior
        .par_iter()
        .map(|&p| {
            let mut dp = Vec::new();
            g.bfs_into(&[p], &mut dp);
            // reach[r]: farthest distance from p of a vertex whose p-geodesics can pass through r
            let mut order: Vec<u32> = (0..g.n() as u32).filter(|&v| dp[v as usize] != u32::MAX).collect();
            order.sort_by_key(|&v| std::cmp::Reverse(dp[v as usize]));
            let mut reach = vec![0i64; g.n()];
            for &v in &order {
                let dv = dp[v as usize];
                let mut r = dv as i64;
                for &w in g.neighbors(v) {
                    if dp[w as usize] == dv + 1 {
                        r = r.max(reach[w as usize]);
                    }
                }
                reach[v as usize] = r;
            }
            let mut worst: Option<(u32, u32, i64)> = None;
            for &q in interior {
                if dp[q as usize] as i64 > near {
                    continue;
                }
                let ball = g.ball_order(q, slack as u32);
                let best = ball.iter().map(|&(r, _)| reach[r as usize]).max().unwrap_or(0);
                if best < long && worst.is_none_or(|w| best < w.2) {
                    worst = Some((p, q, best));
                }
            }
            worst
        })
        .flatten()
        .collect();
    let worst = failures.into_iter().min_by_key(|w| (w.2, w.0, w.1));
    Ok(match worst {
        None => Report { verdict: Verdict::Pass, ..base }.with("visible_constant", (nu * 5).to_string()),
        Some((p, q, len)) => Report { verdict: Verdict::Fail, ..base }.witness(serde_json::json!({"p": p, "q": q, "longest": len})),
    })
}

/// Assigns to each ordered pair (x,y) a connected vertex set containing x and y.
pub trait PathFamily: Sync {
    fn path(&self, x: u32, y: u32) -> Vec<u32>;
}

/// Canonical geodesics (smallest-id next step).
pub struct GeodesicFamily<'a> {
    pub graph: &'a Graph,
    pub dm: &'a DistanceMatrix,
}

impl PathFamily for GeodesicFamily<'_> {
    fn path(&self, x: u32, y: u32) -> Vec<u32> {
        self.dm.geodesic(self.graph, x, y)
    }
}

/// An explicit table, `paths[x·n + y]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableFamily {
    pub n: usize,
    pub paths: Vec<Vec<u32>>,
}

impl TableFamily {
    pub fn from_family(n: usize, f: &dyn PathFamily) -> TableFamily {
        let mut paths = Vec::with_capacity(n * n);
        for x in 0..n as u32 {
            for y in 0..n as u32 {
                paths.push(f.path(x, y));
            }
        }
        TableFamily { n, paths }
    }

    /// Seeded random simple paths between pairs (a deliberately bad family).
    pub fn random_walks(g: &Graph, seed: u64) -> TableFamily {
        let n = g.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut paths = Vec::with_capacity(n * n);
        for x in 0..n as u32 {
            for y in 0..n as u32 {
                // random walk from x until y, loop-erased
                let mut walk = vec![x];
                let mut v = x;
                while v != y {
                    let nb = g.neighbors(v);
                    v = nb[rng.random_range(0..nb.len())];
                    if let Some(i) = walk.iter().position(|&u| u == v) {
                        walk.truncate(i + 1);
                    } else {
                        walk.push(v);
                    }
                }
                paths.push(walk);
            }
        }
        TableFamily { n, paths }
    }
}

impl PathFamily for TableFamily {
    fn path(&self, x: u32, y: u32) -> Vec<u32> {
        self.paths[x as usize * self.n + y as usize].clone()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub h: Q,
    pub m: u64,
    pub k: Q,
    /// True when h = 0 and m = 1 is taken by convention.
    pub degenerate: bool,
    /// Max over triples and x∈Path(x,y) of d(x, Path(x,z) ∪ Path(z,y)).
    pub max_defect: u32,
    /// Max diameter of Path(x,y) over pairs with d(x,y) ≤ 1.
    pub max_short_diameter: u32,
    /// Max Hausdorff distance between Path(x,y) and the canonical geodesic.
    pub hausdorff: u32,
}

#[derive(Clone, Debug)]
pub struct Certification {
    pub report: Report,
    pub certificate: Option<Certificate>,
}

/// 2h(6 + log₂(m+2)) ≤ m, decided exactly: with h = a/b this is
/// (m+2)^{2a} ≤ 2^{mb − 12a}.
pub fn bowditch_holds(h: Q, m: u64) -> bool {
    let (a, b) = (*h.numer(), *h.denom());
    if a == 0 {
        return true;
    }
    let e = m as i128 * b as i128 - 12 * a as i128;
    if e < 0 {
        return false;
    }
    let lhs = BigUint::from(m + 2).pow(2 * a as u32);
    let rhs = BigUint::one() << (e as u64);
    lhs <= rhs
}

/// Least positive integer m satisfying the certificate inequality; h = 0 gives
/// m = 1 with the degenerate flag.
pub fn m_min(h: Q) -> Result<(u64, bool)> {
    if h < Q::zero() {
        return Err(pre("h must be non-negative"));
    }
    if h.is_zero() {
        return Ok((1, true));
    }
    let start = ceil_q(h * 12).max(1) as u64;
    let mut m = start;
    while !bowditch_holds(h, m) {
        m += 1;
    }
    Ok((m, false))
}

pub fn k_of(h: Q, m: u64) -> Q {
    (Q::from_integer(3 * m as i64) - h * 10) / 2
}

/// Checks both conditions of the guessing-geodesics criterion over all
/// triples and pairs.
pub fn certify_guess_geodesics(g: &Graph, family: &dyn PathFamily, h: Q) -> Result<Certification> {
    let dm = DistanceMatrix::new(g)?;
    certify_with(g, &dm, family, h)
}

pub(crate) fn certify_with(g: &Graph, dm: &DistanceMatrix, family: &dyn PathFamily, h: Q) -> Result<Certification> {
    let m = measure_family(g, dm, family)?;
    conclude(g, dm, &m, h)
}

/// Runs the criterion with h set to the smallest integer the family allows,
/// max(largest slim-triangle defect, largest short-pair diameter).
pub fn certify_measured(g: &Graph, family: &dyn PathFamily) -> Result<Certification> {
    let dm = DistanceMatrix::new(g)?;
    let m = measure_family(g, &dm, family)?;
    let h = Q::from_integer(m.defect.0.max(m.short.0) as i64);
    let mut c = conclude(g, &dm, &m, h)?;
    c.report.set("h_measured", true);
    Ok(c)
}

pub(crate) struct FamilyMeasure {
    paths: Vec<Vec<u32>>,
    /// Largest d(v, Path(x,z) ∪ Path(z,y)) with witness [x,y,z,v].
    defect: (u32, [u32; 4]),
    /// Largest diameter of Path(x,y) with d(x,y) ≤ 1.
    short: (u32, (u32, u32)),
}

pub(crate) fn measure_family(g: &Graph, dm: &DistanceMatrix, family: &dyn PathFamily) -> Result<FamilyMeasure> {
    let n = g.n();
    let mut paths = Vec::with_capacity(n * n);
    for x in 0..n as u32 {
        for y in 0..n as u32 {
            let p = family.path(x, y);
            if !p.contains(&x) || !p.contains(&y) {
                return Err(Error::Invalid(format!("Path({x},{y}) misses an endpoint")));
            }
            let (sub, _) = g.induced(&p);
            if !sub.is_connected() {
                return Err(Error::Invalid(format!("Path({x},{y}) is not connected")));
            }
            paths.push(p);
        }
    }
    let path = |x: usize, y: usize| &paths[x * n + y];
    // condition (2)
    let mut short = (0u32, (0u32, 0u32));
    for x in 0..n {
        for y in 0..n {
            if dm.get(x as u32, y as u32) <= 1 {
                let p = path(x, y);
                let diam = p.iter().flat_map(|&a| p.iter().map(move |&b| (a, b))).map(|(a, b)| dm.get(a, b)).max().unwrap_or(0);
                if diam > short.0 {
                    short = (diam, (x as u32, y as u32));
                }
            }
        }
    }
    // condition (1): per z, distance fields to Path(x,z) and Path(z,y)
    let defect = (0..n)
        .into_par_iter()
        .map(|z| {
            let mut to_xz = Vec::with_capacity(n);
            let mut to_zy = Vec::with_capacity(n);
            for x in 0..n {
                let mut buf = Vec::new();
                g.bfs_into(path(x, z), &mut buf);
                to_xz.push(buf);
                let mut buf = Vec::new();
                g.bfs_into(path(z, x), &mut buf);
                to_zy.push(buf);
            }
            let mut best = (0u32, [0u32; 4]);
            for x in 0..n {
                for y in 0..n {
                    for &v in path(x, y) {
                        let d = to_xz[x][v as usize].min(to_zy[y][v as usize]);
                        if d > best.0 {
                            best = (d, [x as u32, y as u32, z as u32, v]);
                        }
                    }
                }
            }
            best
        })
        .reduce(|| (0, [0; 4]), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1[2] < a.1[2] && b.0 > 0) { b } else { a });
    Ok(FamilyMeasure { paths, defect, short })
}

fn conclude(g: &Graph, dm: &DistanceMatrix, fm: &FamilyMeasure, h: Q) -> Result<Certification> {
    let n = g.n();
    let path = |x: usize, y: usize| &fm.paths[x * n + y];
    let (defect, short) = (fm.defect, fm.short);
    let hf = floor_q(h);
    let ok1 = defect.0 as i64 <= hf;
    let ok2 = short.0 as i64 <= hf;
    let mut report = Report::new("guessing-geodesics", Verdict::from_bool(ok1 && ok2))
        .with("h", h.to_string())
        .with("max_defect", defect.0)
        .with("max_short_diameter", short.0);
    if !ok1 {
        let [x, y, z, v] = defect.1;
        report = report.witness(serde_json::json!({"condition": 1, "x": x, "y": y, "z": z, "vertex": v, "distance": defect.0}));
        return Ok(Certification { report, certificate: None });
    }
    if !ok2 {
        report = report.witness(serde_json::json!({"condition": 2, "x": short.1 .0, "y": short.1 .1, "diameter": short.0}));
        return Ok(Certification { report, certificate: None });
    }
    let (m, degenerate) = m_min(h)?;
    let k = k_of(h, m);
    let hausdorff = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut worst = 0u32;
            for y in 0..n {
                let p = path(x, y);
                let geo = dm.geodesic(g, x as u32, y as u32);
                let one = |a: &[u32], b: &[u32]| a.iter().map(|&u| b.iter().map(|&v| dm.get(u, v)).min().unwrap_or(0)).max().unwrap_or(0);
                worst = worst.max(one(p, &geo)).max(one(&geo, p));
            }
            worst
        })
        .max()
        .unwrap_or(0);
    report.set("m", m);
    report.set("k", k.to_string());
    report.set("hausdorff", hausdorff);
    report.set("hausdorff_bound", (Q::from_integer(m as i64) - h * 4).to_string());
    if degenerate {
        report = report.note("h = 0: m = 1 by convention");
    }
    Ok(Certification {
        report,
        certificate: Some(Certificate { h, m, k, degenerate, max_defect: defect.0, max_short_diameter: short.0, hausdorff }),
    })
}

/// Arithmetic side of coarse Cartan–Hadamard: σ ≥ 10⁷ν and scale ≤ 10⁻⁵σ.
pub fn cch_verdict(nu: Q, sigma: Q, scale: Q) -> Result<Report> {
    if nu < Q::zero() {
        return Err(pre("ν must be non-negative"));
    }
    let h1 = sigma >= nu * 10_000_000;
    let h2 = scale * 100_000 <= sigma;
    Ok(Report::new("coarse-cartan-hadamard", Verdict::from_bool(h1 && h2))
        .with("nu", nu.to_string())
        .with("sigma", sigma.to_string())
        .with("scale", scale.to_string())
        .with("sigma_hypothesis", h1)
        .with("scale_hypothesis", h2)
        .with("bound", (nu * 300).to_string())
        .note("assumed: every σ-ball is ν-hyperbolic and the space is scale-simply-connected"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{cycle_graph, path_graph, random_tree, star_graph};

    fn q(a: i64) -> Q {
        Q::from_integer(a)
    }

    #[test]
    fn products_on_paths() {
        let g = path_graph(7);
        assert_eq!(gromov_product(&g, 0, 6, 3).unwrap(), Half::from_int(0));
        assert_eq!(gromov_product(&g, 2, 2, 5).unwrap(), Half::from_int(3));
    }

    #[test]
    fn delta_of_trees_and_cycles() {
        for s in 0..5 {
            assert_eq!(four_point_delta(&random_tree(30, s), DeltaPolicy::Exact).unwrap().delta, Half::from_int(0));
        }
        let c = four_point_delta(&cycle_graph(8), DeltaPolicy::Exact).unwrap();
        assert_eq!(c.delta, Half::from_int(2));
        assert!(!c.lower_bound);
        let s = four_point_delta(&cycle_graph(8), DeltaPolicy::Sample { n: 50, seed: 3 }).unwrap();
        assert!(s.delta <= c.delta && s.lower_bound);
    }

    #[test]
    fn m_min_values() {
        assert_eq!(m_min(q(1)).unwrap(), (22, false));
        assert_eq!(k_of(q(1), 22), q(28));
        assert_eq!(m_min(q(0)).unwrap(), (1, true));
        assert!(!bowditch_holds(q(1), 21));
    }

    #[test]
    fn cch_thresholds() {
        assert!(cch_verdict(q(1), q(10_000_000), q(100)).unwrap().verdict.is_pass());
        assert!(!cch_verdict(q(1), q(1_000_000), q(1)).unwrap().verdict.is_pass());
        assert!(cch_verdict(q(0), q(1), q(0)).unwrap().verdict.is_pass());
    }

    #[test]
    fn visibility_on_star_and_path() {
        let s = star_graph(6);
        assert_eq!(visibility_check(&s, q(1), &[0]).unwrap().verdict, Verdict::Fail);
        let p = path_graph(1300);
        let mid: Vec<u32> = (433..866).collect();
        assert!(visibility_check(&p, q(1), &mid).unwrap().verdict.is_pass());
        assert_eq!(visibility_check(&p, q(1), &[]).unwrap().verdict, Verdict::Inconclusive);
    }
}
