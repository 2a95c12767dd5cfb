//! Combinatorial horoballs, their exponential distortion and the bounded
//! valence variant built from nested nets.

use crate::error::{Error, Result};
use crate::graph::{DistanceMatrix, Graph, GraphJson};
use crate::report::{Report, Verdict};
use crate::topology::csc_check;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Truncated horoball; vertex (x,n) has id n·base_n + x.
#[derive(Clone, Debug)]
pub struct Horoball {
    pub base_n: usize,
    pub depth_max: u32,
    pub graph: Graph,
    pub depth: Vec<u32>,
    pub base_of: Vec<u32>,
}

#[derive(Serialize)]
struct HoroballJson<'a> {
    #[serde(flatten)]
    graph: GraphJson,
    depth: &'a [u32],
    base: &'a [u32],
}

/// Smallest depth for which no geodesic between depth-0 points at base
/// distance ≤ `diam` is cut off: ⌈log₂ diam⌉ + 2.
pub fn depth_needed(diam: u32) -> u32 {
    if diam <= 1 {
        return 2;
    }
    32 - (diam - 1).leading_zeros() + 2
}

impl Horoball {
    pub fn id(&self, x: u32, n: u32) -> u32 {
        n * self.base_n as u32 + x
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(HoroballJson { graph: self.graph.to_json(), depth: &self.depth, base: &self.base_of }).expect("serializable")
    }

    /// Whether the truncation is deep enough for base pairs at distance ≤ d.
    pub fn exact_for(&self, d: u32) -> bool {
        self.depth_max >= depth_needed(d)
    }
}

/// Horoball over `n` base vertices with a metric given as a function; pairs at
/// `None` distance are never joined.
pub fn horoball_with_metric(n: usize, depth_max: u32, metric: &(dyn Fn(u32, u32) -> Option<u32> + Sync)) -> Result<Horoball> {
    let levels = depth_max as usize + 1;
    let mut edges: Vec<(u32, u32)> = (0..n as u32)
        .into_par_iter()
        .flat_map_iter(|x| {
            let mut out = Vec::new();
            for y in x + 1..n as u32 {
                if let Some(d) = metric(x, y) {
                    for lvl in 0..levels as u32 {
                        if lvl >= 32 || (d as u64) <= 1u64 << lvl {
                            out.push((lvl * n as u32 + x, lvl * n as u32 + y));
                        }
                    }
                }
            }
            out
        })
        .collect();
    for lvl in 0..depth_max {
        for x in 0..n as u32 {
            edges.push((lvl * n as u32 + x, (lvl + 1) * n as u32 + x));
        }
    }
    let graph = Graph::from_edges(n * levels, &edges)?;
    let depth = (0..n * levels).map(|i| (i / n.max(1)) as u32).collect();
    let base_of = (0..n * levels).map(|i| (i % n.max(1)) as u32).collect();
    Ok(Horoball { base_n: n, depth_max, graph, depth, base_of })
}

/// H(Γ) truncated at `depth_max`.
pub fn build_horoball(base: &Graph, depth_max: u32) -> Result<Horoball> {
    let dm = DistanceMatrix::new(base)?;
    horoball_with_metric(base.n(), depth_max, &|x, y| Some(dm.get(x, y)))
}

/// Checks ½d_H − 2 < log₂ d_Γ < ½d_H + 1 for all distinct base pairs, i.e.
/// 2^{d_H} < 16·d_Γ² and d_Γ² < 4·2^{d_H}; also records whether d_H = d_Γ
/// whenever d_Γ < 6.
pub fn distortion_audit(h: &Horoball, base: &Graph) -> Result<Report> {
    let dm = DistanceMatrix::new(base)?;
    let diam = dm.diameter();
    let needed = depth_needed(diam);
    let report = Report::new("horoball-distortion", Verdict::Inconclusive)
        .with("base_vertices", base.n())
        .with("depth_max", h.depth_max)
        .with("depth_needed", needed);
    if h.depth_max < needed {
        return Ok(report.note("truncation too shallow: geodesics may be cut off"));
    }
    let n = base.n() as u32;
    let rows: Vec<(Option<(u32, u32, u32)>, Option<(u32, u32, u32)>, u64)> = (0..n)
        .into_par_iter()
        .map(|v| {
            let mut dh = Vec::new();
            h.graph.bfs_into(&[h.id(v, 0)], &mut dh);
            let (mut bad, mut short_bad, mut pairs) = (None, None, 0u64);
            for w in 0..n {
                if w == v {
                    continue;
                }
                pairs += 1;
                let dg = dm.get(v, w) as u128;
                let dhv = dh[h.id(w, 0) as usize];
                let ok = (1u128 << dhv.min(120)) < 16 * dg * dg && dg * dg < 4 * (1u128 << dhv.min(120));
                if !ok && bad.is_none() {
                    bad = Some((v, w, dhv));
                }
                if dg < 6 && dhv as u128 != dg && short_bad.is_none() {
                    short_bad = Some((v, w, dhv));
                }
            }
            (bad, short_bad, pairs)
        })
        .collect();
    let bad = rows.iter().find_map(|r| r.0);
    let short_bad = rows.iter().find_map(|r| r.1);
    let pairs: u64 = rows.iter().map(|r| r.2).sum();
    let mut r = Report { verdict: Verdict::from_bool(bad.is_none()), ..report }
        .with("pairs", pairs)
        .with("short_pairs_isometric", short_bad.is_none());
    if let Some((v, w, dhv)) = bad.or(short_bad) {
        r = r.witness(serde_json::json!({"v": v, "w": w, "d_gamma": dm.get(v, w), "d_h": dhv}));
    }
    Ok(r)
}

/// π₁^D of the truncated horoball, expected trivial for D ≥ 5.
pub fn horoball_csc_audit(h: &Horoball, d: u32) -> Result<Report> {
    if d < 5 {
        return Err(crate::error::pre("the horoball audit needs D ≥ 5"));
    }
    let mut r = csc_check(&h.graph, d)?;
    r.kind = "horoball-simple-connectivity".into();
    r.set("depth_max", h.depth_max);
    Ok(r)
}

/// Bounded valence horoball: level n is a net V_n of Γ with separation and
/// covering radius 2^{n−1}; horizontal edges join v,w ∈ V_n with d_Γ < 2^{n+1},
/// vertical edges join v ∈ V_n and w ∈ V_{n+1} with d_Γ < 2^{n+1}.
#[derive(Clone, Debug)]
pub struct BvHoroball {
    pub graph: Graph,
    /// (base vertex, level) of each vertex.
    pub points: Vec<(u32, u32)>,
    pub nets: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BvData {
    pub max_valence: usize,
    pub level_valence: Vec<usize>,
    /// Max over edges of H_bv of d_H(φa, φb).
    pub phi_lipschitz: u32,
    /// Max over edges of H of d_bv(ψa, ψb).
    pub psi_lipschitz: u32,
    /// Max over H of d_H(φψ(x), x).
    pub phi_psi_displacement: u32,
    pub psi_phi_identity: bool,
}

pub fn build_bv_horoball(base: &Graph, depth_max: u32, net_seed: Option<u64>) -> Result<(BvHoroball, BvData)> {
    if !base.is_connected() {
        return Err(Error::Disconnected("base graph must be connected".into()));
    }
    let dm = DistanceMatrix::new(base)?;
    let n = base.n() as u32;
    let mut order: Vec<u32> = (0..n).collect();
    if let Some(seed) = net_seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let half = |lvl: u32| -> u32 { if lvl == 0 { 0 } else { 1 << (lvl - 1) } };
    let mut nets: Vec<Vec<u32>> = Vec::new();
    for lvl in 0..=depth_max {
        let sep = half(lvl);
        let mut net: Vec<u32> = Vec::new();
        for &v in &order {
            if lvl == 0 || net.iter().all(|&w| dm.get(v, w) >= sep) {
                net.push(v);
            }
        }
        net.sort_unstable();
        nets.push(net);
    }
    let mut points = Vec::new();
    let mut offset = Vec::new();
    for (lvl, net) in nets.iter().enumerate() {
        offset.push(points.len() as u32);
        points.extend(net.iter().map(|&v| (v, lvl as u32)));
    }
    let mut edges = Vec::new();
    for (lvl, net) in nets.iter().enumerate() {
        let reach = 2u64 << lvl;
        for (i, &v) in net.iter().enumerate() {
            for (j, &w) in net.iter().enumerate().skip(i + 1) {
                if (dm.get(v, w) as u64) < reach {
                    edges.push((offset[lvl] + i as u32, offset[lvl] + j as u32));
                }
            }
            if let Some(up) = nets.get(lvl + 1) {
                for (j, &w) in up.iter().enumerate() {
                    if (dm.get(v, w) as u64) < reach {
                        edges.push((offset[lvl] + i as u32, offset[lvl + 1] + j as u32));
                    }
                }
            }
        }
    }
    let graph = Graph::from_edges(points.len(), &edges)?;
    let bv = BvHoroball { graph, points, nets };
    let h = build_horoball(base, depth_max)?;
    let hdm = DistanceMatrix::new(&h.graph)?;
    let bdm = DistanceMatrix::new(&bv.graph)?;
    let phi = |i: u32| -> u32 { let (v, l) = bv.points[i as usize]; h.id(v, l) };
    // ψ(v,n): nearest net point of level n, smallest id on ties
    let psi: Vec<u32> = (0..h.graph.n() as u32)
        .map(|x| {
            let (v, l) = (h.base_of[x as usize], h.depth[x as usize]);
            let net = &bv.nets[l as usize];
            let (j, _) = net.iter().enumerate().min_by_key(|&(_, &w)| (dm.get(v, w), w)).expect("nets are nonempty");
            offset[l as usize] + j as u32
        })
        .collect();
    let phi_lipschitz = bv.graph.edges().into_iter().map(|(a, b)| hdm.get(phi(a), phi(b))).max().unwrap_or(0);
    let psi_lipschitz = h.graph.edges().into_iter().map(|(a, b)| bdm.get(psi[a as usize], psi[b as usize])).max().unwrap_or(0);
    let phi_psi_displacement = (0..h.graph.n() as u32).map(|x| hdm.get(phi(psi[x as usize]), x)).max().unwrap_or(0);
    let psi_phi_identity = (0..bv.graph.n() as u32).all(|i| psi[phi(i) as usize] == i);
    let mut level_valence = vec![0; nets_len(&bv)];
    for i in 0..bv.graph.n() as u32 {
        let l = bv.points[i as usize].1 as usize;
        level_valence[l] = level_valence[l].max(bv.graph.degree(i));
    }
    let data = BvData {
        max_valence: bv.graph.max_degree(),
        level_valence,
        phi_lipschitz,
        psi_lipschitz,
        phi_psi_displacement,
        psi_phi_identity,
    };
    Ok((bv, data))
}

fn nets_len(bv: &BvHoroball) -> usize {
    bv.nets.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{cycle_graph, path_graph};

    #[test]
    fn single_edge_horoball() {
        let h = build_horoball(&path_graph(2), 1).unwrap();
        assert_eq!((h.graph.n(), h.graph.m()), (4, 4));
    }

    #[test]
    fn path_distortion() {
        let base = path_graph(9);
        let h = build_horoball(&base, 3).unwrap();
        assert_eq!(h.graph.distances(&[h.id(0, 0)]).unwrap().get(h.id(8, 0)), Some(6));
        let h = build_horoball(&path_graph(40), 9).unwrap();
        let r = distortion_audit(&h, &path_graph(40)).unwrap();
        assert!(r.verdict.is_pass());
        let shallow = build_horoball(&path_graph(40), 1).unwrap();
        assert_eq!(distortion_audit(&shallow, &path_graph(40)).unwrap().verdict, Verdict::Inconclusive);
    }

    #[test]
    fn horoball_over_cycle_is_simply_connected() {
        let h = build_horoball(&cycle_graph(12), 4).unwrap();
        assert!(horoball_csc_audit(&h, 5).unwrap().verdict.is_pass());
        let h = build_horoball(&Graph::empty(1), 3).unwrap();
        assert!(horoball_csc_audit(&h, 5).unwrap().verdict.is_pass());
    }

    #[test]
    fn bv_on_a_path() {
        let (bv, data) = build_bv_horoball(&path_graph(20), 5, None).unwrap();
        assert_eq!(bv.nets[0].len(), 20);
        assert!(data.phi_lipschitz <= 2 && data.psi_lipschitz <= 6 && data.phi_psi_displacement <= 1);
        assert!(data.psi_phi_identity);
        let (bv, _) = build_bv_horoball(&Graph::empty(1), 3, Some(1)).unwrap();
        assert_eq!((bv.graph.n(), bv.graph.m()), (4, 3));
    }
}
