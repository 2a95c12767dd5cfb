//! Finite-horizon boundary samples: δ-adapted visual brackets, fine-chain
//! estimates of linear connectedness, spherical connectivity and rebasing.

use crate::error::{pre, Error, Result};
use crate::graph::Graph;
use crate::half::Half;
use crate::hyperbolicity::Q;
use crate::interval::Interval;
use crate::report::{Report, Verdict};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

fn iv(q: Q) -> Interval {
    Interval::ratio(*q.numer(), *q.denom())
}

/// κ = (3 − 2e^{1/3})⁻¹.
pub fn kappa() -> Interval {
    Interval::int(1) / (Interval::int(3) - Interval::int(2) * Interval::ratio(1, 3).exp())
}

/// ε = 1/(6δ) and κ for a δ-adapted visual metric.
pub fn adapted_params(delta: Q) -> Result<(Q, Interval)> {
    if delta <= Q::from_integer(0) {
        return Err(pre("δ must be positive"));
    }
    Ok((Q::from_integer(1) / (delta * 6), kappa()))
}

/// Far points seen from a basepoint with their Gromov products, stored as
/// twice-values; the diagonal holds 2·d(x,w).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundarySample {
    pub basepoint: u32,
    pub points: Vec<u32>,
    pub gromov_matrix: Vec<Vec<Half>>,
    pub delta: Q,
    pub epsilon: Q,
}

impl BoundarySample {
    pub fn from_graph(g: &Graph, w: u32, points: &[u32], delta: Q) -> Result<BoundarySample> {
        let (epsilon, _) = adapted_params(delta)?;
        let mut from_w = Vec::new();
        g.bfs_into(&[w], &mut from_w);
        if points.iter().any(|&p| from_w.get(p as usize).is_none_or(|&d| d == u32::MAX)) {
            return Err(Error::Disconnected("sample point unreachable from the basepoint".into()));
        }
        let rows: Vec<Vec<Half>> = points
            .par_iter()
            .map(|&p| {
                let mut f = Vec::new();
                g.bfs_into(&[p], &mut f);
                points.iter().map(|&q| Half::from_twice(from_w[p as usize] as i64 + from_w[q as usize] as i64 - f[q as usize] as i64)).collect()
            })
            .collect();
        Ok(BoundarySample { basepoint: w, points: points.to_vec(), gromov_matrix: rows, delta, epsilon })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn product(&self, i: usize, j: usize) -> Half {
        self.gromov_matrix[i][j]
    }

    /// Largest violation of (i|k) ≥ min((i|j),(j|k)) − δ, as a twice-value.
    pub fn ultrametric_defect(&self) -> Half {
        let n = self.len();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut worst = Half::from_int(0);
                for j in 0..n {
                    for k in 0..n {
                        let m = self.product(i, j).min(self.product(j, k));
                        if m - self.product(i, k) > worst {
                            worst = m - self.product(i, k);
                        }
                    }
                }
                worst
            })
            .max()
            .unwrap_or_default()
    }
}

/// Representative e^{−ε(i|j)_w} and the κ-bracket around it.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct VisualBracket {
    pub value: Interval,
    pub lower: Interval,
    pub upper: Interval,
}

pub fn visual_distance(s: &BoundarySample, i: usize, j: usize) -> Result<VisualBracket> {
    if i == j || i >= s.len() || j >= s.len() {
        return Err(pre("visual distance needs two distinct sample indices"));
    }
    let k = kappa();
    let value = (-(iv(s.epsilon) * iv(s.product(i, j).to_ratio()))).exp();
    Ok(VisualBracket { value, lower: value / k, upper: value * k })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PairPolicy {
    All,
    Sample { n: usize, seed: u64 },
}

/// Outcome of the fine-chain search. `gap` is the largest, over checked pairs,
/// of 2((p|q) − min product along the witness chain); L = e^{ε·gap/2}.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainVerdict {
    pub l_max: Q,
    pub verdict: Verdict,
    pub pairs_checked: usize,
    pub pairs_unresolved: usize,
    pub gap: Option<i64>,
    pub l: Option<Interval>,
    pub threshold_5l: Option<Interval>,
    pub worst_pair: Option<(u32, u32)>,
    pub chainless: Vec<(u32, u32)>,
    pub witness_chain: Option<Vec<u32>>,
    pub note: Option<String>,
}

impl ChainVerdict {
    pub fn is_none(&self) -> bool {
        self.verdict == Verdict::Fail
    }

    pub fn to_report(&self) -> Report {
        let mut r = Report::new("linear-connectedness", self.verdict)
            .with("L_max", self.l_max.to_string())
            .with("pairs", self.pairs_checked)
            .with("pairs_unresolved", self.pairs_unresolved)
            .with("gap_twice", self.gap)
            .with("L", self.l.map(|l| [l.lo, l.hi]))
            .with("threshold_5L", self.threshold_5l.map(|l| [l.lo, l.hi]))
            .with("chainless_pairs", self.chainless.len());
        if let Some(n) = &self.note {
            r = r.note(n.clone());
        }
        if let Some(p) = self.worst_pair {
            r = r.witness(serde_json::json!({"pair": p, "chain": self.witness_chain}));
        }
        r
    }
}

/// Smallest usable horizon margin: one unit above the halving step 6δ·ln 2.
pub fn default_resolution(delta: Q) -> Half {
    let step = iv(delta * 6) * Interval::int(2).ln();
    Half::from_int(step.hi.ceil() as i64 + 1)
}

/// Seeded subsample of S(w, r), sorted.
pub fn sphere_points(g: &Graph, w: u32, r: u32, max: usize, seed: u64) -> Result<Vec<u32>> {
    let sphere = g.distances(&[w])?.level(r);
    if sphere.len() <= max {
        return Ok(sphere);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pick: Vec<u32> = sample(&mut rng, sphere.len(), max).into_iter().map(|i| sphere[i]).collect();
    pick.sort_unstable();
    Ok(pick)
}

/// Chain from p to q inside {x : P[c][x] ≥ r} with steps P[a][b] ≥ floor_step.
fn chain_within(p2: &[Vec<i64>], c: usize, r: i64, p: usize, q: usize, floor_step: i64) -> Option<Vec<usize>> {
    let n = p2.len();
    let inside = |x: usize| p2[c][x] >= r;
    if !inside(p) || !inside(q) {
        return None;
    }
    let mut prev = vec![usize::MAX; n];
    prev[p] = p;
    let mut queue = std::collections::VecDeque::from([p]);
    while let Some(a) = queue.pop_front() {
        if a == q {
            let mut path = vec![q];
            let mut x = q;
            while x != p {
                x = prev[x];
                path.push(x);
            }
            path.reverse();
            return Some(path);
        }
        for b in 0..n {
            if prev[b] == usize::MAX && inside(b) && p2[a][b] >= floor_step {
                prev[b] = a;
                queue.push_back(b);
            }
        }
    }
    None
}

/// Searches, for each checked pair, a fine chain (steps at most half the pair
/// distance) of small diameter in the representative visual metric. Candidate
/// chains live in nested product-balls about p and q; the reported L is an
/// upper bound for the minimal L certified by explicit chains.
///
/// Pairs with (p|q)_w > horizon − `resolution` are skipped: the horizon is too
/// close to separate them at the required scale. The horizon is the smallest
/// distance from the basepoint to a sample point.
pub fn linear_connectedness_estimate(s: &BoundarySample, l_max: Q, pairs: PairPolicy, resolution: Half) -> Result<ChainVerdict> {
    let n = s.len();
    if n < 2 {
        return Err(pre("need at least two sample points"));
    }
    let p2: Vec<Vec<i64>> = s.gromov_matrix.iter().map(|r| r.iter().map(|h| h.twice()).collect()).collect();
    // steps need 2(a|b) − 2(p|q) ≥ 12δ·ln 2
    let thr = iv(s.delta * 12) * Interval::int(2).ln();
    let (lo, hi) = (thr.lo.ceil() as i64, thr.hi.ceil() as i64);
    let base = ChainVerdict {
        l_max,
        verdict: Verdict::Inconclusive,
        pairs_checked: 0,
        pairs_unresolved: 0,
        gap: None,
        l: None,
        threshold_5l: None,
        worst_pair: None,
        chainless: vec![],
        witness_chain: None,
        note: None,
    };
    if lo != hi {
        return Ok(ChainVerdict { note: Some("numerically inconclusive step threshold".into()), ..base });
    }
    let step = lo;
    let horizon = (0..n).map(|i| p2[i][i]).min().unwrap_or(0);
    let cutoff = horizon - resolution.twice();
    let all_pairs = n * (n - 1) / 2;
    let mut list: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| p2[i][j] <= cutoff).collect();
    let skipped = all_pairs - list.len();
    if let PairPolicy::Sample { n: m, seed } = pairs {
        if m < list.len() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx = sample(&mut rng, list.len(), m).into_vec();
            idx.sort_unstable();
            list = idx.into_iter().map(|i| list[i]).collect();
        }
    }
    let results: Vec<(usize, usize, Option<(i64, Vec<usize>)>)> = list
        .par_iter()
        .map(|&(p, q)| {
            let pq = p2[p][q];
            let floor_step = pq + step;
            let mut best: Option<(i64, Vec<usize>)> = None;
            for c in [p, q] {
                let mut cands: Vec<i64> = p2[c].iter().copied().filter(|&v| v <= pq).collect();
                cands.sort_unstable();
                cands.dedup();
                if cands.is_empty() || chain_within(&p2, c, cands[0], p, q, floor_step).is_none() {
                    continue;
                }
                let (mut a, mut b) = (0usize, cands.len() - 1);
                while a < b {
                    let mid = (a + b).div_ceil(2);
                    if chain_within(&p2, c, cands[mid], p, q, floor_step).is_some() {
                        a = mid;
                    } else {
                        b = mid - 1;
                    }
                }
                let chain = chain_within(&p2, c, cands[a], p, q, floor_step).expect("monotone");
                let min_prod = chain.iter().flat_map(|&x| chain.iter().map(move |&y| (x, y))).map(|(x, y)| p2[x][y]).min().unwrap();
                let gap = pq - min_prod;
                if best.as_ref().is_none_or(|b| gap < b.0) {
                    best = Some((gap, chain));
                }
            }
            (p, q, best)
        })
        .collect();
    let chainless: Vec<(u32, u32)> = results.iter().filter(|r| r.2.is_none()).map(|r| (s.points[r.0], s.points[r.1])).collect();
    let pairs_checked = results.len();
    if pairs_checked == 0 {
        return Ok(ChainVerdict { pairs_unresolved: skipped, note: Some("no pair is resolvable at this horizon".into()), ..base });
    }
    let base = ChainVerdict { pairs_unresolved: skipped, ..base };
    if !chainless.is_empty() {
        return Ok(ChainVerdict {
            verdict: Verdict::Fail,
            pairs_checked,
            worst_pair: chainless.first().copied(),
            chainless,
            note: Some(format!("none ≤ {l_max}: some pairs admit no fine chain in the sample")),
            ..base
        });
    }
    let worst = results.iter().max_by_key(|r| (r.2.as_ref().unwrap().0, std::cmp::Reverse((r.0, r.1)))).unwrap();
    let gap = worst.2.as_ref().unwrap().0;
    let exponent = iv(s.epsilon * Q::new(gap, 2));
    let l = exponent.exp();
    let within = exponent.le(iv(l_max).ln());
    let (verdict, note) = match within {
        Some(true) => (Verdict::Pass, None),
        Some(false) => (Verdict::Fail, Some(format!("none ≤ {l_max}: chains found but wider than allowed"))),
        None => (Verdict::Inconclusive, Some("numerically inconclusive".into())),
    };
    Ok(ChainVerdict {
        verdict,
        pairs_checked,
        gap: Some(gap),
        l: Some(l),
        threshold_5l: Some(l * Interval::int(5)),
        worst_pair: Some((s.points[worst.0], s.points[worst.1])),
        witness_chain: Some(worst.2.as_ref().unwrap().1.iter().map(|&i| s.points[i]).collect()),
        note,
        ..base
    })
}

/// (Δ,R)-spherical connectivity at y: every pair on S(y,R) is joined by a
/// sphere sequence with consecutive products ≥ R − 5δ that keeps
/// (p|p_i) ≥ (p|q) − Δ.
pub fn spherical_connectivity_check(g: &Graph, y: u32, r: u32, big_delta: Q, delta: Half) -> Result<Report> {
    let from_y = g.distances(&[y])?;
    let sphere = from_y.level(r);
    if sphere.is_empty() {
        return Err(pre(format!("the sphere of radius {r} is empty")));
    }
    let m = sphere.len();
    let dist: Vec<Vec<u32>> = sphere
        .par_iter()
        .map(|&p| {
            let mut f = Vec::new();
            g.bfs_into(&[p], &mut f);
            sphere.iter().map(|&q| f[q as usize]).collect()
        })
        .collect();
    // (a|b)_y ≥ R − 5δ  ⇔  d(a,b) ≤ 10δ
    let step: Vec<Vec<usize>> = (0..m).map(|a| (0..m).filter(|&b| b != a && Half::from_int(dist[a][b] as i64) <= delta.times(10)).collect()).collect();
    let two_delta = big_delta * 2;
    let failures: Vec<(usize, usize)> = (0..m)
        .into_par_iter()
        .flat_map_iter(|p| {
            let (dist, step) = (&dist, &step);
            (p + 1..m).filter_map(move |q| {
                // (p|x) ≥ (p|q) − Δ  ⇔  d(p,x) − d(p,q) ≤ 2Δ
                let ok = |x: usize| Q::from_integer(dist[p][x] as i64 - dist[p][q] as i64) <= two_delta;
                let mut seen = vec![false; m];
                seen[p] = true;
                let mut stack = vec![p];
                while let Some(a) = stack.pop() {
                    if a == q {
                        return None;
                    }
                    for &b in &step[a] {
                        if !seen[b] && ok(b) {
                            seen[b] = true;
                            stack.push(b);
                        }
                    }
                }
                Some((p, q))
            })
        })
        .collect();
    let pairs = m * (m - 1) / 2;
    let mut rep = Report::new("spherical-connectivity", Verdict::from_bool(failures.is_empty()))
        .with("R", r)
        .with("Delta", big_delta.to_string())
        .with("delta", delta)
        .with("sphere", m)
        .with("pairs", pairs)
        .with("failing_pairs", failures.len());
    if let Some(&(p, q)) = failures.first() {
        let prod = Half::from_twice(2 * r as i64 - dist[p][q] as i64);
        rep = rep.witness(serde_json::json!({"p": sphere[p], "q": sphere[q], "product": prod}));
    }
    Ok(rep)
}

/// Point at distance ⌊(x|y)_w⌋ from w on the canonical geodesic towards x.
pub fn rebase(g: &Graph, w: u32, x: u32, y: u32) -> Result<u32> {
    let p = crate::hyperbolicity::gromov_product(g, x, y, w)?;
    let path = g.geodesic(w, x)?;
    let t = p.floor() as usize;
    path.get(t).copied().ok_or_else(|| Error::Truncation("geodesic towards x is shorter than the Gromov product".into()))
}

/// Constants attached to a δ₀-hyperbolic space with L₀-linearly connected
/// boundary: Δ₀, C₀ and the spherical connectivity constant Δ.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BoundaryConstants {
    pub big_delta_0: Interval,
    pub c0: Interval,
    pub big_delta_lemma: Interval,
}

pub fn section6_constants(delta0: Q, l0: Q, kappa: Interval, epsilon: Interval) -> Result<BoundaryConstants> {
    let zero = Q::from_integer(0);
    if delta0 <= zero || l0 <= zero || kappa.lo <= 0.0 || epsilon.lo <= 0.0 {
        return Err(pre("all inputs must be positive"));
    }
    let (d, l) = (iv(delta0), iv(l0));
    let two = Interval::int(2);
    let big_delta_0 = (two * kappa * kappa * l).ln() / epsilon + Interval::int(20) * d;
    let c0 = two * ((two * kappa.ln() + l.ln()) / epsilon + Interval::int(29) * d) + Interval::int(20) * d;
    let big_delta_lemma = (kappa * kappa * l).ln() / epsilon + Interval::int(5) * d;
    Ok(BoundaryConstants { big_delta_0, c0, big_delta_lemma })
}
