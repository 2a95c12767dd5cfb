//! Shells and tubes about a vertex set, their completions, projections from a
//! far sphere onto a shell, and comparison of tube neighborhoods.

use crate::error::{pre, Error, Result};
use crate::graph::{sphere_and_tube, DistanceMatrix, Graph, GraphJson, MatchOutcome, Matcher};
use crate::half::Half;
use crate::report::{Report, Verdict};
use crate::topology::Retraction;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Ambient,
    Shell,
    Arc,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Ambient => "ambient",
            Provenance::Shell => "shell",
            Provenance::Arc => "arc",
        }
    }
}

/// Completion arc between two shell vertices; `ends` and `interior` are
/// completed-shell ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShellArc {
    pub ends: (u32, u32),
    pub length: u32,
    pub interior: Vec<u32>,
}

/// Vertices 0..shell.len() are the shell (in ambient id order), the rest are
/// interior vertices of completion arcs.
#[derive(Clone, Debug)]
pub struct CompletedShell {
    pub graph: Graph,
    pub shell: Vec<u32>,
    pub arcs: Vec<ShellArc>,
    pub k: u32,
    pub s: u32,
    pub components: usize,
}

impl CompletedShell {
    pub fn provenance(&self, v: u32) -> Provenance {
        if (v as usize) < self.shell.len() {
            Provenance::Shell
        } else {
            Provenance::Arc
        }
    }

    pub fn is_connected(&self) -> bool {
        self.components == 1
    }

    /// Completed-shell id of an ambient shell vertex.
    pub fn local(&self, ambient: u32) -> Option<u32> {
        self.shell.binary_search(&ambient).ok().map(|i| i as u32)
    }

    pub fn to_json(&self) -> GraphJson {
        let mut j = self.graph.to_json();
        for v in 0..self.graph.n() as u32 {
            j.labels.insert(v, self.provenance(v).as_str().to_string());
        }
        j
    }
}

/// Scale used when the measured δ is zero: s = max(1, ⌈8δ⌉).
pub fn scale_floor(delta: Half) -> u32 {
    delta.times(8).ceil().max(1) as u32
}

/// CS_{K,s}(W): the K-shell with every pair at ambient distance ≤ s joined by
/// a fresh path of that length.
pub fn completed_shell(g: &Graph, w: &[u32], k: u32, s: u32) -> Result<CompletedShell> {
    if s < 1 {
        return Err(pre("scale s must be at least 1"));
    }
    let split = sphere_and_tube(g, w, k)?;
    let shell = split.shell;
    let mut local = vec![NONE; g.n()];
    for (i, &v) in shell.iter().enumerate() {
        local[v as usize] = i as u32;
    }
    let pairs: Vec<(u32, u32, u32)> = shell
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, &a)| {
            let local = &local;
            g.ball_order(a, s).into_iter().filter_map(move |(b, d)| {
                let j = local[b as usize];
                (j != NONE && j > i as u32).then_some((i as u32, j, d))
            })
        })
        .collect();
    let mut edges = Vec::new();
    let mut arcs = Vec::with_capacity(pairs.len());
    let mut next = shell.len() as u32;
    for (a, b, d) in pairs {
        let interior: Vec<u32> = (next..next + d - 1).collect();
        next += d - 1;
        let mut prev = a;
        for &x in &interior {
            edges.push((prev, x));
            prev = x;
        }
        edges.push((prev, b));
        arcs.push(ShellArc { ends: (a, b), length: d, interior });
    }
    let graph = Graph::from_edges(next as usize, &edges)?;
    let components = if graph.n() == 0 { 0 } else { graph.components().1 };
    Ok(CompletedShell { graph, shell, arcs, k, s, components })
}

/// CTC_{K,s}(W): ambient vertices outside the open tube (in ambient id order)
/// followed by the arc interiors of the completed shell.
#[derive(Clone, Debug)]
pub struct CompletedTubeComplement {
    pub graph: Graph,
    pub ambient_of: Vec<Option<u32>>,
    pub provenance: Vec<Provenance>,
    pub cs: CompletedShell,
    pub cs_to_ctc: Vec<u32>,
    pub components: usize,
    ambient_to: Vec<u32>,
}

impl CompletedTubeComplement {
    pub fn local(&self, ambient: u32) -> Option<u32> {
        self.ambient_to.get(ambient as usize).copied().filter(|&x| x != NONE)
    }

    pub fn is_connected(&self) -> bool {
        self.components == 1
    }

    /// CTC ids of the completed shell.
    pub fn shell_part(&self) -> Vec<bool> {
        let mut part = vec![false; self.graph.n()];
        for &x in &self.cs_to_ctc {
            part[x as usize] = true;
        }
        part
    }

    pub fn to_json(&self) -> GraphJson {
        let mut j = self.graph.to_json();
        for (v, p) in self.provenance.iter().enumerate() {
            j.labels.insert(v as u32, p.as_str().to_string());
        }
        j
    }

    pub fn connectivity_report(&self) -> Report {
        Report::new("ctc-connectivity", Verdict::from_bool(self.is_connected()))
            .with("components", self.components)
            .with("vertices", self.graph.n())
            .with("shell_vertices", self.cs.shell.len())
            .with("K", self.cs.k)
            .with("s", self.cs.s)
    }
}

pub fn completed_tube_complement(g: &Graph, w: &[u32], k: u32, s: u32) -> Result<CompletedTubeComplement> {
    let cs = completed_shell(g, w, k, s)?;
    let split = sphere_and_tube(g, w, k)?;
    let mut in_tube = vec![false; g.n()];
    for &v in &split.tube {
        in_tube[v as usize] = true;
    }
    let mut ambient_to = vec![NONE; g.n()];
    let mut ambient_of = Vec::new();
    let mut provenance = Vec::new();
    for v in 0..g.n() as u32 {
        if !in_tube[v as usize] {
            ambient_to[v as usize] = ambient_of.len() as u32;
            ambient_of.push(Some(v));
            provenance.push(if cs.local(v).is_some() { Provenance::Shell } else { Provenance::Ambient });
        }
    }
    let base = ambient_of.len() as u32;
    let cs_to_ctc: Vec<u32> = (0..cs.graph.n() as u32)
        .map(|x| if (x as usize) < cs.shell.len() { ambient_to[cs.shell[x as usize] as usize] } else { base + x - cs.shell.len() as u32 })
        .collect();
    for _ in cs.shell.len()..cs.graph.n() {
        ambient_of.push(None);
        provenance.push(Provenance::Arc);
    }
    let mut edges: Vec<(u32, u32)> = g
        .edges()
        .into_iter()
        .filter(|&(u, v)| !in_tube[u as usize] && !in_tube[v as usize])
        .map(|(u, v)| (ambient_to[u as usize], ambient_to[v as usize]))
        .collect();
    for (a, b) in cs.graph.edges() {
        let (x, y) = (cs_to_ctc[a as usize], cs_to_ctc[b as usize]);
        if x >= base || y >= base {
            edges.push((x, y));
        }
    }
    let graph = Graph::from_edges(ambient_of.len(), &edges)?;
    let components = if graph.n() == 0 { 0 } else { graph.components().1 };
    Ok(CompletedTubeComplement { graph, ambient_of, provenance, cs, cs_to_ctc, components, ambient_to })
}

/// Vertices of S(w0, horizon) at distance ≥ `min_dist` from W, the desk-scale
/// stand-ins for boundary points off the limit set of W.
pub fn far_samples(g: &Graph, w: &[u32], w0: u32, horizon: u32, min_dist: u32) -> Result<Vec<u32>> {
    let to_w = g.distances(w)?;
    let from = g.distances(&[w0])?;
    Ok((0..g.n() as u32).filter(|&v| from.get(v) == Some(horizon) && to_w.get(v).is_some_and(|d| d >= min_dist)).collect())
}

/// Π_K from a basepoint w₀ ∈ W along canonical geodesics η_p.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShellProjection {
    pub w0: u32,
    pub k: u32,
    pub samples: Vec<u32>,
    pub rays: Vec<Vec<u32>>,
    pub values: Vec<u32>,
    #[serde(skip)]
    to_w: Vec<u32>,
}

fn last_at(ray: &[u32], to_w: &[u32], k: u32) -> u32 {
    *ray.iter().rev().find(|&&v| to_w[v as usize] == k).expect("a ray from W to a point beyond the shell crosses it")
}

impl ShellProjection {
    pub fn new(g: &Graph, w: &[u32], k: u32, w0: u32, samples: &[u32]) -> Result<ShellProjection> {
        if !w.contains(&w0) {
            return Err(pre("the basepoint w₀ must lie on W"));
        }
        let mut to_w = Vec::new();
        g.bfs_into(w, &mut to_w);
        let mut proj = ShellProjection { w0, k, samples: samples.to_vec(), rays: Vec::new(), values: Vec::new(), to_w };
        let computed: Vec<Result<(Vec<u32>, u32)>> = samples.par_iter().map(|&p| proj.ray_and_value(g, p)).collect();
        for c in computed {
            let (ray, value) = c?;
            proj.rays.push(ray);
            proj.values.push(value);
        }
        Ok(proj)
    }

    fn ray_and_value(&self, g: &Graph, p: u32) -> Result<(Vec<u32>, u32)> {
        let d = *self.to_w.get(p as usize).ok_or_else(|| pre("vertex out of range"))?;
        if d == NONE {
            return Err(Error::Disconnected(format!("vertex {p} is not connected to W")));
        }
        if d < self.k {
            return Err(pre(format!("vertex {p} lies inside the tube (distance {d} < K={})", self.k)));
        }
        let mut to_p = Vec::new();
        g.bfs_into(&[p], &mut to_p);
        let ray = g.geodesic_with(self.w0, &to_p);
        let v = last_at(&ray, &self.to_w, self.k);
        Ok((ray, v))
    }

    pub fn distance_to_w(&self, v: u32) -> u32 {
        self.to_w[v as usize]
    }

    pub fn value_of(&self, p: u32) -> Option<u32> {
        self.samples.iter().position(|&x| x == p).map(|i| self.values[i])
    }
}

/// Π_K(p): the last vertex of η_p at distance K from W.
pub fn project_far_point(g: &Graph, proj: &ShellProjection, p: u32) -> Result<u32> {
    if let Some(v) = proj.value_of(p) {
        return Ok(v);
    }
    proj.ray_and_value(g, p).map(|(_, v)| v)
}

/// Every vertex that is the last K-point of some geodesic from `b` to `p`.
fn projection_candidates(g: &Graph, from_b: &[u32], to_p: &[u32], to_w: &[u32], k: u32, p: u32) -> Vec<u32> {
    let total = to_p.iter().zip(from_b).find(|(&tp, _)| tp == 0).map(|(_, &fb)| fb).unwrap_or(0);
    let mut on: Vec<u32> = (0..g.n() as u32).filter(|&v| from_b[v as usize] != NONE && to_p[v as usize] != NONE && from_b[v as usize] + to_p[v as usize] == total).collect();
    on.sort_by_key(|&v| std::cmp::Reverse(from_b[v as usize]));
    let mut good = vec![false; g.n()];
    let mut out = Vec::new();
    for &v in &on {
        let succ_good = v == p || g.neighbors(v).iter().any(|&z| to_p[z as usize] + 1 == to_p[v as usize] && from_b[z as usize] == from_b[v as usize] + 1 && good[z as usize]);
        if to_w[v as usize] == k {
            if succ_good {
                out.push(v);
            }
        } else {
            good[v as usize] = succ_good;
        }
    }
    out.sort_unstable();
    out
}

/// Spread of Π_K over all basepoints on W and all geodesics to each sample,
/// and the coarse surjectivity slack over `check_shell`; both against 8δ.
pub fn projection_audit(g: &Graph, proj: &ShellProjection, basepoints: &[u32], check_shell: &[u32], delta: Half) -> Result<Report> {
    let dm = DistanceMatrix::new(g)?;
    let k = proj.k;
    let fields: Vec<Vec<u32>> = basepoints
        .iter()
        .map(|&b| {
            if proj.to_w[b as usize] != 0 {
                return Err(pre("basepoints must lie on W"));
            }
            let mut f = Vec::new();
            g.bfs_into(&[b], &mut f);
            Ok(f)
        })
        .collect::<Result<_>>()?;
    let spreads: Vec<(u32, u32, Vec<u32>)> = proj
        .samples
        .par_iter()
        .map(|&p| {
            let mut to_p = Vec::new();
            g.bfs_into(&[p], &mut to_p);
            let mut all: Vec<u32> = vec![proj.value_of(p).expect("sample")];
            for f in &fields {
                all.extend(projection_candidates(g, f, &to_p, &proj.to_w, k, p));
            }
            all.sort_unstable();
            all.dedup();
            let spread = all.iter().flat_map(|&a| all.iter().map(move |&b| (a, b))).map(|(a, b)| dm.get(a, b)).max().unwrap_or(0);
            (spread, p, all)
        })
        .collect();
    let bound = delta.times(8);
    let worst = spreads.iter().max_by_key(|(s, p, _)| (*s, std::cmp::Reverse(*p)));
    let spread = worst.map(|w| w.0).unwrap_or(0);
    let slack_rows: Vec<(u32, u32)> = check_shell
        .par_iter()
        .map(|&x| (proj.values.iter().map(|&v| dm.get(x, v)).min().unwrap_or(NONE), x))
        .collect();
    let slack = slack_rows.iter().max().copied();
    let stable = Half::from_int(spread as i64) <= bound;
    let surjective = slack.is_none_or(|(s, _)| s != NONE && Half::from_int(s as i64) <= bound);
    let mut r = Report::new("shell-projection", Verdict::from_bool(stable && surjective))
        .with("K", k)
        .with("delta", delta)
        .with("bound", bound)
        .with("samples", proj.samples.len())
        .with("basepoints", basepoints.len())
        .with("stability_spread", spread)
        .with("surjectivity_slack", slack.map(|s| s.0))
        .with("shell_checked", check_shell.len());
    if !stable {
        let w = worst.unwrap();
        r = r.witness(serde_json::json!({"sample": w.1, "projections": w.2}));
    } else if !surjective {
        r = r.witness(serde_json::json!({"shell_vertex": slack.unwrap().1}));
    }
    Ok(r)
}

/// Every geodesic between two tube vertices stays within 2δ of the tube.
pub fn tube_quasiconvexity_audit(g: &Graph, w: &[u32], k: u32, delta: Half) -> Result<Report> {
    if k < 1 {
        return Err(pre("K must be at least 1"));
    }
    let split = sphere_and_tube(g, w, k)?;
    let dm = DistanceMatrix::new(g)?;
    let mut to_w = Vec::new();
    g.bfs_into(w, &mut to_w);
    let tube = &split.tube;
    let worst: Vec<(u32, u32, u32, u32)> = (0..tube.len())
        .into_par_iter()
        .map(|i| {
            let x = tube[i];
            let mut best = (0, x, x, x);
            for &y in &tube[i + 1..] {
                let d = dm.get(x, y);
                for v in 0..g.n() as u32 {
                    if dm.get(x, v) + dm.get(v, y) == d {
                        let off = to_w[v as usize].saturating_sub(k - 1);
                        if off > best.0 {
                            best = (off, x, y, v);
                        }
                    }
                }
            }
            best
        })
        .collect();
    let w = worst.into_iter().max_by_key(|b| b.0).unwrap_or((0, 0, 0, 0));
    let ok = Half::from_int(w.0 as i64) <= delta.times(2);
    let r = Report::new("tube-quasiconvexity", Verdict::from_bool(ok)).with("K", k).with("max_excursion", w.0).with("tube_vertices", tube.len());
    Ok(if ok { r } else { r.witness(serde_json::json!({"x": w.1, "y": w.2, "vertex": w.3})) })
}

/// Along each ray η_p, any vertex within 2δ of the shell is within 6δ of
/// every shell crossing.
pub fn straightness_audit(g: &Graph, proj: &ShellProjection, delta: Half) -> Result<Report> {
    let shell: Vec<u32> = (0..g.n() as u32).filter(|&v| proj.to_w[v as usize] == proj.k).collect();
    if shell.is_empty() {
        return Ok(Report::new("shell-straightness", Verdict::Inconclusive).note("empty shell"));
    }
    let near = g.distances(&shell)?;
    let rows: Vec<(u32, u32)> = proj
        .rays
        .par_iter()
        .enumerate()
        .map(|(i, ray)| {
            let mut worst = 0u32;
            for (a, &y) in ray.iter().enumerate() {
                if proj.to_w[y as usize] != proj.k {
                    continue;
                }
                for (b, &z) in ray.iter().enumerate() {
                    if Half::from_int(near.get(z).unwrap_or(NONE) as i64) <= delta.times(2) {
                        worst = worst.max(a.abs_diff(b) as u32);
                    }
                }
            }
            (worst, i as u32)
        })
        .collect();
    let (worst, at) = rows.into_iter().max().unwrap_or((0, 0));
    let ok = Half::from_int(worst as i64) <= delta.times(6);
    let r = Report::new("shell-straightness", Verdict::from_bool(ok)).with("K", proj.k).with("max_offset", worst).with("rays", proj.rays.len());
    Ok(if ok { r } else { r.witness(serde_json::json!({"sample": proj.samples[at as usize]})) })
}

/// s-path-connectedness of the raw shell (recomputed from ambient balls) and
/// connectivity of the completed shell.
pub fn shell_connectivity_audit(g: &Graph, cs: &CompletedShell) -> Result<Report> {
    let n = cs.shell.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for (i, &a) in cs.shell.iter().enumerate() {
        for (b, _) in g.ball_order(a, cs.s) {
            if let Some(j) = cs.local(b) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j as usize));
                parent[ri] = rj;
            }
        }
    }
    let raw = (0..n).filter(|&i| find(&mut parent, i) == i).count();
    let (comp, cc) = cs.graph.components();
    let ok = raw <= 1 && cc <= 1;
    let mut r = Report::new("shell-connectivity", Verdict::from_bool(ok))
        .with("K", cs.k)
        .with("s", cs.s)
        .with("shell_vertices", n)
        .with("raw_components", raw)
        .with("completed_components", cc);
    if n == 0 {
        r = r.note("empty shell");
    }
    if !ok {
        let mut sizes = vec![0usize; cc];
        let mut reps = vec![None; cc];
        for (i, &a) in cs.shell.iter().enumerate() {
            let c = comp[i] as usize;
            sizes[c] += 1;
            reps[c].get_or_insert(a);
        }
        r = r.witness(serde_json::json!({"component_sizes": sizes, "representatives": reps}));
    }
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PhiEstimate {
    Finite { value: u32, pairs: usize },
    Unbounded { a: u32, b: u32 },
    NoPairs,
}

/// Largest completed-shell distance between shell vertices at ambient
/// distance ≤ C.
pub fn phi_estimate(g: &Graph, cs: &CompletedShell, c: u32) -> Result<PhiEstimate> {
    let rows: Vec<(u32, usize, Option<(u32, u32)>)> = (0..cs.shell.len() as u32)
        .into_par_iter()
        .map(|i| {
            let mut local = Vec::new();
            cs.graph.bfs_into(&[i], &mut local);
            let (mut best, mut pairs, mut cut) = (0u32, 0usize, None);
            for (b, d) in g.ball_order(cs.shell[i as usize], c) {
                match cs.local(b) {
                    Some(j) if j > i && d >= 1 => {
                        pairs += 1;
                        let l = local[j as usize];
                        if l == NONE {
                            cut.get_or_insert((cs.shell[i as usize], b));
                        } else {
                            best = best.max(l);
                        }
                    }
                    _ => {}
                }
            }
            (best, pairs, cut)
        })
        .collect();
    if let Some((a, b)) = rows.iter().find_map(|r| r.2) {
        return Ok(PhiEstimate::Unbounded { a, b });
    }
    let pairs = rows.iter().map(|r| r.1).sum();
    if pairs == 0 {
        return Ok(PhiEstimate::NoPairs);
    }
    Ok(PhiEstimate::Finite { value: rows.iter().map(|r| r.0).max().unwrap_or(0), pairs })
}

#[derive(Clone, Debug)]
pub struct TubeComparison {
    pub report: Report,
    /// Ambient pairs (a-vertex, b-vertex) of the isomorphism N_α(W_a) → N_α(W_b).
    pub iso: Option<Vec<(u32, u32)>>,
}

/// Searches for a graph isomorphism N_α(W_a) → N_α(W_b) taking W_a onto W_b.
pub fn tube_comparable(a: (&Graph, &[u32]), b: (&Graph, &[u32]), alpha: u32) -> Result<TubeComparison> {
    if alpha < 1 {
        return Err(pre("α must be at least 1"));
    }
    let side = |(g, w): (&Graph, &[u32])| -> Result<(Graph, Vec<u32>, Vec<u64>)> {
        let split = sphere_and_tube(g, w, alpha)?;
        let (sub, origin) = g.induced(&split.nbhd);
        let mut to_w = Vec::new();
        g.bfs_into(w, &mut to_w);
        let colors = origin.iter().map(|&v| to_w[v as usize] as u64).collect();
        Ok((sub, origin, colors))
    };
    let (ga, oa, ca) = side(a)?;
    let (gb, ob, cb) = side(b)?;
    let mut m = Matcher::new(&ga, &gb);
    m.colors_a = ca;
    m.colors_b = cb;
    let base = Report::new("tube-comparable", Verdict::Fail).with("alpha", alpha).with("vertices", [ga.n(), gb.n()]).with("edges", [ga.m(), gb.m()]);
    Ok(match m.solve(None) {
        MatchOutcome::Found(map) => {
            let iso: Vec<(u32, u32)> = map.iter().enumerate().map(|(i, &j)| (oa[i], ob[j as usize])).collect();
            TubeComparison { report: Report { verdict: Verdict::Pass, ..base }, iso: Some(iso) }
        }
        MatchOutcome::None => TubeComparison { report: base, iso: None },
        MatchOutcome::Budget => TubeComparison { report: Report { verdict: Verdict::Inconclusive, ..base }.note("search budget exhausted"), iso: None },
    })
}

/// Projection of a sampled boundary path: shell points Π_K(p_i) (ambient ids)
/// joined by canonical completed-shell geodesics (completed-shell ids).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShellPath {
    pub projections: Vec<u32>,
    pub path: Vec<u32>,
}

pub fn project_boundary_path(g: &Graph, cs: &CompletedShell, proj: &ShellProjection, samples: &[u32], delta: Half) -> Result<ShellPath> {
    if samples.is_empty() {
        return Err(pre("empty sample path"));
    }
    let projections: Vec<u32> = samples.iter().map(|&p| project_freeze(g, proj, p)).collect::<Result<_>>()?;
    let bound = delta.times(8);
    let reach = bound.floor().max(0) as u32;
    let mut path = vec![cs.local(projections[0]).ok_or_else(|| Error::Invalid("projection off the shell".into()))?];
    for (i, pair) in projections.windows(2).enumerate() {
        let (x, y) = (pair[0], pair[1]);
        if !g.ball_order(x, reach).iter().any(|&(v, _)| v == y) {
            return Err(pre(format!("samples {i} and {} project more than 8δ = {bound} apart; refine the sampling", i + 1)));
        }
        let (a, b) = (cs.local(x).expect("on shell"), cs.local(y).expect("on shell"));
        let seg = cs.graph.geodesic(a, b)?;
        path.extend_from_slice(&seg[1..]);
    }
    Ok(ShellPath { projections, path })
}

fn project_freeze(g: &Graph, proj: &ShellProjection, p: u32) -> Result<u32> {
    project_far_point(g, proj, p)
}

/// Hausdorff distance between two vertex sets in a graph.
pub fn hausdorff(g: &Graph, a: &[u32], b: &[u32]) -> Result<u32> {
    if a.is_empty() || b.is_empty() {
        return Err(pre("Hausdorff distance needs nonempty sets"));
    }
    let (mut fa, mut fb) = (Vec::new(), Vec::new());
    g.bfs_into(a, &mut fa);
    g.bfs_into(b, &mut fb);
    let one = b.iter().map(|&v| fa[v as usize]).max().unwrap();
    let two = a.iter().map(|&v| fb[v as usize]).max().unwrap();
    let h = one.max(two);
    if h == NONE {
        return Err(Error::Disconnected("sets lie in different components".into()));
    }
    Ok(h)
}

/// Deformation retraction of the CTC onto its completed shell: shell and arc
/// vertices stay put, ambient vertices follow the canonical geodesic towards W
/// until they reach the shell.
pub fn ctc_retraction(g: &Graph, ctc: &CompletedTubeComplement, w: &[u32], q: u32) -> Result<Retraction> {
    let mut to_w = Vec::new();
    g.bfs_into(w, &mut to_w);
    let k = ctc.cs.k;
    let target = ctc.shell_part();
    let paths: Vec<Vec<u32>> = (0..ctc.graph.n() as u32)
        .map(|x| match ctc.ambient_of[x as usize] {
            Some(y) if !target[x as usize] => {
                let t = to_w[y as usize];
                let mut p = g.geodesic_with(y, &to_w);
                p.truncate((t - k) as usize + 1);
                p.into_iter().map(|v| ctc.local(v).expect("outside the open tube")).collect()
            }
            _ => vec![x],
        })
        .collect();
    Ok(Retraction::from_paths(target, &paths, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{cycle_graph, path_graph, SpaceGenerator, SpaceKind};

    #[test]
    fn cycle_shell_completion() {
        let g = cycle_graph(6);
        let cs = completed_shell(&g, &[0], 1, 2).unwrap();
        assert_eq!(cs.shell, vec![1, 5]);
        assert!(cs.is_connected());
        assert_eq!((cs.graph.n(), cs.graph.m()), (3, 2));
        let cs = completed_shell(&g, &[0], 1, 1).unwrap();
        assert_eq!(cs.components, 2);
        let ctc = completed_tube_complement(&cycle_graph(10), &[0], 2, 1).unwrap();
        assert!(ctc.is_connected());
        assert_eq!(ctc.graph.n(), 7);
    }

    #[test]
    fn tree_axis_shell_splits() {
        let g = SpaceGenerator::new(SpaceKind::Tree { valence: 4 }).generate_ball(5).unwrap().graph;
        // a geodesic through the root: 1 - 0 - 2
        let w = g.geodesic(1, 2).unwrap();
        let cs = completed_shell(&g, &w, 2, 1).unwrap();
        assert!(cs.components > 1);
        let r = shell_connectivity_audit(&g, &cs).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(matches!(phi_estimate(&g, &cs, 4).unwrap(), PhiEstimate::Unbounded { .. }));
    }

    #[test]
    fn zero_shell_is_the_set() {
        let g = path_graph(5);
        let cs = completed_shell(&g, &[1, 2, 3], 0, 1).unwrap();
        assert_eq!(cs.shell, vec![1, 2, 3]);
        assert!(shell_connectivity_audit(&g, &cs).unwrap().verdict.is_pass());
    }

    #[test]
    fn tree_projection_is_unique() {
        let g = SpaceGenerator::new(SpaceKind::Tree { valence: 3 }).generate_ball(6).unwrap().graph;
        let w = g.geodesic(1, 2).unwrap();
        let samples = far_samples(&g, &w, 0, 6, 4).unwrap();
        let proj = ShellProjection::new(&g, &w, 2, 0, &samples).unwrap();
        let r = projection_audit(&g, &proj, &w, &[], Half::from_int(0)).unwrap();
        assert!(r.verdict.is_pass(), "{r:?}");
        assert_eq!(r.get("stability_spread"), Some(&serde_json::json!(0)));
        assert!(project_far_point(&g, &proj, 0).is_err());
        let constant = project_boundary_path(&g, &completed_shell(&g, &w, 2, 1).unwrap(), &proj, &[samples[0]; 3], Half::from_int(0)).unwrap();
        assert_eq!(constant.path.len(), 1);
    }

    #[test]
    fn tube_comparison_of_itself() {
        let g = cycle_graph(8);
        let t = tube_comparable((&g, &[0, 1]), (&g, &[3, 4]), 2).unwrap();
        assert!(t.report.verdict.is_pass());
        let t = tube_comparable((&g, &[0, 1]), (&path_graph(8), &[3, 4]), 3).unwrap();
        assert_eq!(t.report.verdict, Verdict::Fail);
    }

    #[test]
    fn ctc_retracts_onto_shell() {
        let g = path_graph(9);
        let ctc = completed_tube_complement(&g, &[4], 2, 4).unwrap();
        assert_eq!((ctc.graph.n(), ctc.graph.m()), (9, 8));
        let r = ctc_retraction(&g, &ctc, &[4], 1).unwrap();
        assert!(r.verify(&ctc.graph).unwrap().verdict.is_pass());
        // on a cycle the antipodal edge is torn apart
        let g = cycle_graph(12);
        let ctc = completed_tube_complement(&g, &[0], 2, 8).unwrap();
        assert!(ctc_retraction(&g, &ctc, &[0], 2).unwrap().verify(&ctc.graph).is_err());
    }
}
