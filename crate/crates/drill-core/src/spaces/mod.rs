//! Model spaces: tilings, regular trees, the square grid and Cayley balls of
//! free and surface groups, plus periodic axes and their translates.

pub mod region;
pub mod surface;

use crate::error::{pre, Error, Result};
use crate::graph::{Graph, PointedBall};
use crate::report::{Report, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub use region::Region;
pub use surface::Dehn;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpaceKind {
    Tiling { p: u32, q: u32 },
    Tree { valence: u32 },
    Grid,
    Free { rank: u32 },
    Surface { genus: u32 },
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceKind::Tiling { p, q } => write!(f, "tiling:{p},{q}"),
            SpaceKind::Tree { valence } => write!(f, "tree:{valence}"),
            SpaceKind::Grid => write!(f, "grid"),
            SpaceKind::Free { rank } => write!(f, "free:{rank}"),
            SpaceKind::Surface { genus } => write!(f, "surface:{genus}"),
        }
    }
}

impl FromStr for SpaceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<SpaceKind> {
        let (head, tail) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<u32> = if tail.is_empty() {
            vec![]
        } else {
            tail.split(',').map(|t| t.trim().parse::<u32>().map_err(|_| Error::Invalid(format!("bad number in space kind '{s}'")))).collect::<Result<_>>()?
        };
        match (head, nums.as_slice()) {
            ("tiling", [p, q]) => Ok(SpaceKind::Tiling { p: *p, q: *q }),
            ("tree", [v]) => Ok(SpaceKind::Tree { valence: *v }),
            ("grid", []) => Ok(SpaceKind::Grid),
            ("free", [r]) => Ok(SpaceKind::Free { rank: *r }),
            ("surface", [g]) => Ok(SpaceKind::Surface { genus: *g }),
            _ => Err(Error::Invalid(format!("unknown space kind '{s}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpaceGenerator {
    pub kind: SpaceKind,
}

/// A materialized piece of a model space with its rotation system:
/// `slots[v][k]` is the neighbor in direction k (None past the truncation).
/// `core` is the set the patch was grown from (the center for balls).
#[derive(Clone, Debug)]
pub struct ModelPatch {
    pub kind: SpaceKind,
    pub graph: Graph,
    pub slots: Vec<Vec<Option<u32>>>,
    pub core: Vec<u32>,
    pub radius: u32,
    /// Distance of each vertex from the core.
    pub depth: Vec<u32>,
}

impl ModelPatch {
    pub(crate) fn from_slots(kind: SpaceKind, slots: Vec<Vec<Option<u32>>>, core: Vec<u32>, _region_ids: Vec<u32>) -> ModelPatch {
        let adj = slots.iter().map(|row| row.iter().flatten().copied().collect()).collect();
        let graph = Graph::from_adjacency(adj);
        let mut depth = Vec::new();
        graph.bfs_into(&core, &mut depth);
        let radius = depth.iter().copied().filter(|&d| d != u32::MAX).max().unwrap_or(0);
        ModelPatch { kind, graph, slots, core, radius, depth }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn degree(&self) -> usize {
        self.slots.first().map(|s| s.len()).unwrap_or(0)
    }

    /// Slot of `v` pointing to `w`.
    pub fn slot_to(&self, v: u32, w: u32) -> Option<usize> {
        self.slots[v as usize].iter().position(|&x| x == Some(w))
    }

    /// The patch as a pointed ball about its first core vertex.
    pub fn pointed(&self) -> PointedBall {
        PointedBall::of(&self.graph, self.core[0], self.radius)
    }

    /// Vertices whose full neighborhood is present.
    pub fn is_interior(&self, v: u32) -> bool {
        self.slots[v as usize].iter().all(|s| s.is_some())
    }
}

fn inverse_letter(kind: SpaceKind, deg: usize, s: usize) -> usize {
    match kind {
        SpaceKind::Grid => (s + 2) % 4,
        _ => (s + deg / 2) % deg,
    }
}

fn supports_letters(kind: SpaceKind) -> bool {
    matches!(kind, SpaceKind::Grid | SpaceKind::Free { .. } | SpaceKind::Surface { .. })
}

impl SpaceGenerator {
    pub fn new(kind: SpaceKind) -> SpaceGenerator {
        SpaceGenerator { kind }
    }

    pub fn region(&self) -> Result<Region> {
        Region::new(self.kind)
    }

    /// Ball of radius `r` about the origin. All supported spaces are
    /// vertex-transitive, so the origin stands for any center.
    pub fn generate_ball(&self, r: u32) -> Result<ModelPatch> {
        let mut region = Region::new(self.kind)?;
        let order: Vec<u32> = region.grow(&[0], r).into_iter().map(|(v, _)| v).collect();
        let mut sorted = order;
        sorted.sort_unstable();
        Ok(region.patch(&sorted, &[0]))
    }
}

/// Period word of an axis: relative turns (next slot = back slot + m mod deg)
/// or absolute generator slots for Cayley graphs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisWord {
    Turns(Vec<u32>),
    Letters(Vec<u32>),
}

/// Where an axis passes: a vertex and the slot it leaves through.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisStart {
    pub vertex: u32,
    pub slot: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Axis {
    pub word: AxisWord,
    pub start: AxisStart,
    pub window: u32,
    /// Vertex trace, index i ↔ position i − window.
    pub vertices: Vec<u32>,
    /// Max distance from the axis of a vertex on a geodesic between axis points.
    pub lambda0: u32,
    /// Max of |i−j| / d(a_i,a_j), as (num, den).
    pub stretch: (u32, u32),
    /// Max of |i−j| − d(a_i,a_j).
    pub additive: u32,
}

impl Axis {
    pub fn center(&self) -> u32 {
        self.vertices[self.window as usize]
    }

    /// Sub-window of positions −w..=w.
    pub fn window_vertices(&self, w: u32) -> &[u32] {
        let c = self.window as usize;
        let w = w.min(self.window) as usize;
        &self.vertices[c - w..=c + w]
    }
}

/// Walks `steps` edges of the periodic word from `start`, forwards or
/// backwards. `step(v, k)` returns the neighbor of v in slot k.
fn walk(
    kind: SpaceKind,
    deg: usize,
    word: &AxisWord,
    start: AxisStart,
    steps: u32,
    forward: bool,
    step: &mut dyn FnMut(u32, usize) -> Option<u32>,
    back_slot: &mut dyn FnMut(u32, u32) -> usize,
) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    let leave = |v: u32| Error::Truncation(format!("axis leaves the materialized region at vertex {v}"));
    match word {
        AxisWord::Turns(t) => {
            if t.is_empty() || t.iter().any(|&m| m == 0 || m as usize >= deg) {
                return Err(Error::Invalid("turn values must lie in 1..degree".into()));
            }
            let len = t.len() as i64;
            // the out-slot at word position i was produced by turn t[i mod len]
            let mut v = start.vertex;
            let mut out_slot = start.slot as usize;
            let mut i: i64 = 0;
            for _ in 0..steps {
                if forward {
                    let w = step(v, out_slot).ok_or_else(|| leave(v))?;
                    let back = back_slot(w, v);
                    i += 1;
                    out_slot = (back + t[i.rem_euclid(len) as usize] as usize) % deg;
                    v = w;
                } else {
                    let m = t[i.rem_euclid(len) as usize] as usize;
                    let back = (out_slot + deg - m) % deg;
                    let w = step(v, back).ok_or_else(|| leave(v))?;
                    out_slot = back_slot(w, v);
                    i -= 1;
                    v = w;
                }
                out.push(v);
            }
        }
        AxisWord::Letters(l) => {
            if !supports_letters(kind) {
                return Err(Error::Invalid(format!("{kind} has no generator slots; use turns")));
            }
            if l.is_empty() || l.iter().any(|&s| s as usize >= deg) {
                return Err(Error::Invalid("letter slot out of range".into()));
            }
            let len = l.len() as i64;
            let mut v = start.vertex;
            let mut i: i64 = 0;
            for _ in 0..steps {
                let s = if forward {
                    let s = l[i.rem_euclid(len) as usize] as usize;
                    i += 1;
                    s
                } else {
                    i -= 1;
                    inverse_letter(kind, deg, l[i.rem_euclid(len) as usize] as usize)
                };
                v = step(v, s).ok_or_else(|| leave(v))?;
                out.push(v);
            }
        }
    }
    Ok(out)
}

fn check_start(kind: SpaceKind, deg: usize, word: &AxisWord, start: AxisStart) -> Result<()> {
    if start.slot as usize >= deg {
        return Err(pre("axis start slot out of range"));
    }
    if let AxisWord::Letters(l) = word {
        if !supports_letters(kind) {
            return Err(Error::Invalid(format!("{kind} has no generator slots; use turns")));
        }
        if l.first() != Some(&start.slot) {
            return Err(pre("for letter words the start slot must be the first letter"));
        }
    }
    Ok(())
}

fn assemble(bwd: Vec<u32>, center: u32, fwd: Vec<u32>) -> Result<Vec<u32>> {
    let mut vertices: Vec<u32> = bwd.into_iter().rev().collect();
    vertices.push(center);
    vertices.extend(fwd);
    for i in 2..vertices.len() {
        if vertices[i] == vertices[i - 2] {
            return Err(Error::Invalid("axis word backtracks".into()));
        }
    }
    Ok(vertices)
}

/// Traces positions −window..=window of an axis inside a region, creating
/// vertices as needed.
pub fn trace_axis(region: &mut Region, word: &AxisWord, start: AxisStart, window: u32) -> Result<Vec<u32>> {
    let (kind, deg) = (region.kind, region.deg);
    check_start(kind, deg, word, start)?;
    let cell = std::cell::RefCell::new(region);
    let mut step = |v: u32, k: usize| cell.borrow_mut().neighbor(v, k, true);
    let mut back = |w: u32, v: u32| cell.borrow().slots[w as usize].iter().position(|&x| x == Some(v)).expect("symmetric slots");
    let fwd = walk(kind, deg, word, start, window, true, &mut step, &mut back)?;
    let bwd = walk(kind, deg, word, start, window, false, &mut step, &mut back)?;
    assemble(bwd, start.vertex, fwd)
}

/// Traces an axis inside an already materialized patch (no growth).
pub fn trace_axis_in_patch(patch: &ModelPatch, word: &AxisWord, start: AxisStart, window: u32) -> Result<Vec<u32>> {
    let deg = patch.degree();
    check_start(patch.kind, deg, word, start)?;
    if start.vertex as usize >= patch.graph.n() {
        return Err(pre("axis start outside the patch"));
    }
    let mut step = |v: u32, k: usize| patch.slots[v as usize][k];
    let mut back = |w: u32, v: u32| patch.slot_to(w, v).expect("symmetric slots");
    let fwd = walk(patch.kind, deg, word, start, window, true, &mut step, &mut back)?;
    let bwd = walk(patch.kind, deg, word, start, window, false, &mut step, &mut back)?;
    assemble(bwd, start.vertex, fwd)
}

/// Quasi-convexity and quasi-geodesic constants of an axis trace, measured in `g`.
pub fn measure_axis(g: &Graph, word: &AxisWord, start: AxisStart, window: u32, vertices: Vec<u32>) -> Result<Axis> {
    let mut rows = Vec::with_capacity(vertices.len());
    let mut buf = Vec::new();
    for &a in &vertices {
        g.bfs_into(&[a], &mut buf);
        rows.push(buf.clone());
    }
    let mut to_axis = Vec::new();
    g.bfs_into(&vertices, &mut to_axis);
    let (mut lambda0, mut snum, mut sden, mut additive) = (0u32, 1u32, 1u32, 0u32);
    for i in 0..vertices.len() {
        for j in i + 1..vertices.len() {
            let d = rows[i][vertices[j] as usize];
            if d == 0 {
                return Err(Error::Invalid("axis revisits a vertex inside the window".into()));
            }
            let span = (j - i) as u32;
            if (span as u64) * (sden as u64) > (snum as u64) * (d as u64) {
                snum = span;
                sden = d;
            }
            additive = additive.max(span.saturating_sub(d));
            for v in 0..g.n() {
                if rows[i][v] != u32::MAX && rows[i][v] + rows[j][v] == d {
                    lambda0 = lambda0.max(to_axis[v]);
                }
            }
        }
    }
    let gcd = num_integer::gcd(snum, sden);
    Ok(Axis { word: word.clone(), start, window, vertices, lambda0, stretch: (snum / gcd, sden / gcd), additive })
}

/// Axis of the given word through the origin, materialized with an
/// `margin`-neighborhood; λ₀ and quasi-geodesic constants measured there.
pub fn axis_in(gen: &SpaceGenerator, word: &AxisWord, window: u32, margin: u32) -> Result<(ModelPatch, Axis)> {
    let mut region = Region::new(gen.kind)?;
    let slot = match word {
        AxisWord::Letters(l) => *l.first().ok_or_else(|| Error::Invalid("empty word".into()))?,
        AxisWord::Turns(_) => 0,
    };
    let start = AxisStart { vertex: 0, slot };
    let trace = trace_axis(&mut region, word, start, window)?;
    let mut verts: Vec<u32> = region.grow(&trace, margin).into_iter().map(|(v, _)| v).collect();
    verts.sort_unstable();
    let patch = region.patch(&verts, &trace);
    let index: std::collections::HashMap<u32, u32> = verts.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
    let local: Vec<u32> = trace.iter().map(|v| index[v]).collect();
    let axis = measure_axis(&patch.graph, word, AxisStart { vertex: index[&0], slot }, window, local)?;
    Ok((patch, axis))
}

/// Sphere S(center, r) of a tiling patch in cyclic order, read off a
/// depth-first walk of the BFS tree that visits children in rotation order.
pub fn sphere_cycle(patch: &ModelPatch, center: u32, r: u32) -> Result<Vec<u32>> {
    if !matches!(patch.kind, SpaceKind::Tiling { .. } | SpaceKind::Tree { .. }) {
        return Err(Error::Unsupported("cyclic sphere order needs a planar tiling".into()));
    }
    let g = &patch.graph;
    let n = g.n();
    let mut parent = vec![u32::MAX; n];
    let mut dist = vec![u32::MAX; n];
    dist[center as usize] = 0;
    let mut queue = std::collections::VecDeque::from([center]);
    while let Some(v) = queue.pop_front() {
        for slot in patch.slots[v as usize].iter().flatten() {
            let w = *slot;
            if dist[w as usize] == u32::MAX {
                dist[w as usize] = dist[v as usize] + 1;
                parent[w as usize] = v;
                queue.push_back(w);
            }
        }
    }
    let deg = patch.degree();
    let mut out = Vec::new();
    let mut stack = vec![(center, 0usize, 0usize)];
    while let Some((v, first, done)) = stack.pop() {
        if done == 0 && dist[v as usize] == r {
            out.push(v);
            continue;
        }
        if done == deg {
            continue;
        }
        stack.push((v, first, done + 1));
        let k = (first + done) % deg;
        if let Some(w) = patch.slots[v as usize][k] {
            if parent[w as usize] == v && dist[w as usize] <= r {
                let back = patch.slot_to(w, v).expect("symmetric slots");
                stack.push((w, back + 1, 0));
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TranslateFamily {
    pub axes: Vec<Vec<u32>>,
    /// Pairwise set distances.
    pub distances: Vec<Vec<u32>>,
}

impl TranslateFamily {
    pub fn new(g: &Graph, axes: Vec<Vec<u32>>) -> Result<TranslateFamily> {
        let mut distances = vec![vec![0; axes.len()]; axes.len()];
        let mut buf = Vec::new();
        for i in 0..axes.len() {
            g.bfs_into(&axes[i], &mut buf);
            for j in 0..axes.len() {
                let d = axes[j].iter().map(|&v| buf[v as usize]).min().unwrap_or(u32::MAX);
                if d == u32::MAX {
                    return Err(Error::Disconnected(format!("axes {i} and {j} lie in different components")));
                }
                distances[i][j] = d;
            }
        }
        Ok(TranslateFamily { axes, distances })
    }
}

/// Passes iff every two distinct axes are at least Σ apart.
pub fn separation_audit(fam: &TranslateFamily, sigma: u32) -> Result<Report> {
    if fam.axes.len() < 2 {
        return Err(pre("separation audit needs at least two axes"));
    }
    let mut best = (u32::MAX, 0, 0);
    for i in 0..fam.axes.len() {
        for j in i + 1..fam.axes.len() {
            if fam.distances[i][j] < best.0 {
                best = (fam.distances[i][j], i, j);
            }
        }
    }
    Ok(Report::new("separation", Verdict::from_bool(best.0 >= sigma))
        .with("sigma", sigma)
        .with("min_distance", best.0)
        .witness([best.1, best.2]))
}

/// Seeded random connected graph: random recursive tree plus `extra` chords.
pub fn random_connected(n: usize, extra: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for v in 1..n as u32 {
        edges.push((rng.random_range(0..v), v));
    }
    let mut tries = 0;
    let mut added = 0;
    while added < extra && tries < 100 * (extra + 1) && n > 2 {
        tries += 1;
        let u = rng.random_range(0..n as u32);
        let v = rng.random_range(0..n as u32);
        if u != v && !edges.contains(&(u.min(v), u.max(v))) && !edges.contains(&(u.max(v), u.min(v))) {
            edges.push((u.min(v), u.max(v)));
            added += 1;
        }
    }
    Graph::from_edges(n, &edges).expect("valid random graph")
}

/// Seeded random tree on n vertices.
pub fn random_tree(n: usize, seed: u64) -> Graph {
    random_connected(n, 0, seed)
}

pub fn path_graph(n: usize) -> Graph {
    let e: Vec<(u32, u32)> = (1..n as u32).map(|i| (i - 1, i)).collect();
    Graph::from_edges(n, &e).expect("path")
}

pub fn cycle_graph(n: usize) -> Graph {
    assert!(n >= 3, "cycle needs at least 3 vertices");
    let e: Vec<(u32, u32)> = (0..n as u32).map(|i| (i, (i + 1) % n as u32)).collect();
    Graph::from_edges(n, &e).expect("cycle")
}

/// Two vertices joined by internally disjoint paths of the given lengths.
pub fn theta_graph(lengths: &[usize]) -> Graph {
    let mut edges = Vec::new();
    let mut next = 2u32;
    for &l in lengths {
        assert!(l >= 1);
        let mut prev = 0u32;
        for _ in 1..l {
            edges.push((prev, next));
            prev = next;
            next += 1;
        }
        edges.push((prev, 1));
    }
    Graph::from_edges(next as usize, &edges).expect("theta")
}

/// C_n × P_h; vertex (i,j) has id j·n + i.
pub fn cylinder_graph(n: usize, h: usize) -> Graph {
    let mut edges = Vec::new();
    for j in 0..h {
        for i in 0..n {
            let v = (j * n + i) as u32;
            edges.push((v, (j * n + (i + 1) % n) as u32));
            if j + 1 < h {
                edges.push((v, v + n as u32));
            }
        }
    }
    Graph::from_edges(n * h, &edges).expect("cylinder")
}

pub fn star_graph(leaves: usize) -> Graph {
    let e: Vec<(u32, u32)> = (1..=leaves as u32).map(|i| (0, i)).collect();
    Graph::from_edges(leaves + 1, &e).expect("star")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_and_grid_counts() {
        let t = SpaceGenerator::new(SpaceKind::Tree { valence: 4 }).generate_ball(3).unwrap();
        assert_eq!(t.graph().n(), 53);
        assert_eq!(t.graph().m(), 52);
        let g = SpaceGenerator::new(SpaceKind::Grid).generate_ball(2).unwrap();
        assert_eq!(g.graph().n(), 13);
    }

    #[test]
    fn genus_two_ball_sizes() {
        // no relation shorter than 8, so spheres grow by 7 until radius 3
        let b = SpaceGenerator::new(SpaceKind::Surface { genus: 2 }).generate_ball(3).unwrap();
        let mut sizes = vec![0; 4];
        for &d in &b.depth {
            sizes[d as usize] += 1;
        }
        assert_eq!(sizes, vec![1, 8, 56, 392]);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("tiling:7,3".parse::<SpaceKind>().unwrap(), SpaceKind::Tiling { p: 7, q: 3 });
        assert_eq!("grid".parse::<SpaceKind>().unwrap(), SpaceKind::Grid);
        assert!("torus:1".parse::<SpaceKind>().is_err());
        assert_eq!(SpaceKind::Surface { genus: 2 }.to_string(), "surface:2");
    }

    #[test]
    fn unsupported_kinds() {
        assert!(SpaceGenerator::new(SpaceKind::Surface { genus: 1 }).generate_ball(2).is_err());
        assert!(SpaceGenerator::new(SpaceKind::Tiling { p: 4, q: 4 }).generate_ball(2).is_err());
    }

    #[test]
    fn tree_axis_is_geodesic() {
        let gen = SpaceGenerator::new(SpaceKind::Tree { valence: 4 });
        let (patch, a) = axis_in(&gen, &AxisWord::Turns(vec![2]), 20, 2).unwrap();
        assert_eq!(a.vertices.len(), 41);
        assert_eq!(a.lambda0, 0);
        assert_eq!(a.stretch, (1, 1));
        assert_eq!(a.additive, 0);
        // 41 axis vertices with two side branches of 1 + 3 vertices each, plus
        // the two continuations past the window ends
        assert_eq!(patch.graph.n(), 41 + 41 * 2 * 4 + 2 * 4);
    }

    #[test]
    fn grid_axis_and_separation() {
        let gen = SpaceGenerator::new(SpaceKind::Grid);
        let mb = gen.generate_ball(12).unwrap();
        let a = trace_axis_in_patch(&mb, &AxisWord::Letters(vec![0]), AxisStart { vertex: 0, slot: 0 }, 3).unwrap();
        let mut v = 0u32;
        for _ in 0..5 {
            v = mb.slots[v as usize][1].unwrap();
        }
        let b = trace_axis_in_patch(&mb, &AxisWord::Letters(vec![0]), AxisStart { vertex: v, slot: 0 }, 3).unwrap();
        let fam = TranslateFamily::new(mb.graph(), vec![a, b]).unwrap();
        assert!(separation_audit(&fam, 5).unwrap().verdict.is_pass());
        let r = separation_audit(&fam, 6).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.witness.is_some());
    }

    #[test]
    fn letter_axes_need_cayley_slots() {
        let gen = SpaceGenerator::new(SpaceKind::Tiling { p: 7, q: 3 });
        assert!(axis_in(&gen, &AxisWord::Letters(vec![0]), 3, 1).is_err());
        let gen = SpaceGenerator::new(SpaceKind::Free { rank: 2 });
        let (_, a) = axis_in(&gen, &AxisWord::Letters(vec![0, 1]), 5, 1).unwrap();
        assert_eq!(a.lambda0, 0);
        assert!(axis_in(&gen, &AxisWord::Letters(vec![0, 2]), 5, 1).is_err());
    }

    #[test]
    fn theta_and_cylinder_shapes() {
        let t = theta_graph(&[3, 3, 3]);
        assert_eq!((t.n(), t.m()), (8, 9));
        let c = cylinder_graph(10, 4);
        assert_eq!((c.n(), c.m()), (40, 70));
        assert!(random_connected(20, 5, 1).is_connected());
        assert!(random_tree(30, 2).is_connected());
        assert_eq!(random_tree(30, 2).m(), 29);
    }
}
