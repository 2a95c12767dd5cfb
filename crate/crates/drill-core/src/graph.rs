//! Finite simple graphs with unit edge lengths, BFS metrics, balls, shells and
//! pointed isomorphism search.

use crate::error::{pre, Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

const UNSEEN: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Graph {
    adj: Vec<Vec<u32>>,
    labels: BTreeMap<u32, String>,
}

impl Graph {
    pub fn empty(n: usize) -> Graph {
        Graph { adj: vec![Vec::new(); n], labels: BTreeMap::new() }
    }

    /// Builds a simple graph; loops and out-of-range endpoints are rejected,
    /// repeated edges are merged.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Graph> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::Invalid(format!("edge ({u},{v}) out of range for {n} vertices")));
            }
            if u == v {
                return Err(Error::Invalid(format!("loop at vertex {u}")));
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        Ok(Graph::from_adjacency(adj))
    }

    /// Sorts and deduplicates neighbor lists. Caller guarantees symmetry and no loops.
    pub(crate) fn from_adjacency(mut adj: Vec<Vec<u32>>) -> Graph {
        for row in adj.iter_mut() {
            row.sort_unstable();
            row.dedup();
        }
        Graph { adj, labels: BTreeMap::new() }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn m(&self) -> usize {
        self.adj.iter().map(|r| r.len()).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adj[v as usize]
    }

    pub fn degree(&self, v: u32) -> usize {
        self.adj[v as usize].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(|r| r.len()).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.adj[u as usize].binary_search(&v).is_ok()
    }

    /// Edges as (u,v) with u < v, in lexicographic order.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.m());
        for (u, row) in self.adj.iter().enumerate() {
            for &v in row {
                if (u as u32) < v {
                    out.push((u as u32, v));
                }
            }
        }
        out
    }

    pub fn labels(&self) -> &BTreeMap<u32, String> {
        &self.labels
    }

    pub fn label(&self, v: u32) -> Option<&str> {
        self.labels.get(&v).map(|s| s.as_str())
    }

    pub fn set_label(&mut self, v: u32, label: impl Into<String>) {
        self.labels.insert(v, label.into());
    }

    /// Induced subgraph on `vertices` (in the given order). Returns the graph and
    /// the old id of each new vertex.
    pub fn induced(&self, vertices: &[u32]) -> (Graph, Vec<u32>) {
        let mut index = vec![UNSEEN; self.n()];
        for (i, &v) in vertices.iter().enumerate() {
            index[v as usize] = i as u32;
        }
        let adj = vertices
            .iter()
            .map(|&v| {
                self.adj[v as usize].iter().filter_map(|&w| (index[w as usize] != UNSEEN).then(|| index[w as usize])).collect()
            })
            .collect();
        let mut g = Graph::from_adjacency(adj);
        for (i, &v) in vertices.iter().enumerate() {
            if let Some(l) = self.labels.get(&v) {
                g.labels.insert(i as u32, l.clone());
            }
        }
        (g, vertices.to_vec())
    }

    /// Component id per vertex (ids in order of smallest member) and the count.
    pub fn components(&self) -> (Vec<u32>, usize) {
        let mut comp = vec![UNSEEN; self.n()];
        let mut count = 0u32;
        let mut queue = VecDeque::new();
        for s in 0..self.n() {
            if comp[s] != UNSEEN {
                continue;
            }
            comp[s] = count;
            queue.push_back(s as u32);
            while let Some(u) = queue.pop_front() {
                for &w in &self.adj[u as usize] {
                    if comp[w as usize] == UNSEEN {
                        comp[w as usize] = count;
                        queue.push_back(w);
                    }
                }
            }
            count += 1;
        }
        (comp, count as usize)
    }

    pub fn is_connected(&self) -> bool {
        self.n() <= 1 || self.components().1 == 1
    }

    /// Raw BFS into `out`, with `u32::MAX` for unreachable vertices.
    pub(crate) fn bfs_into(&self, sources: &[u32], out: &mut Vec<u32>) {
        out.clear();
        out.resize(self.n(), UNSEEN);
        let mut queue = VecDeque::with_capacity(self.n());
        for &s in sources {
            if out[s as usize] != 0 {
                out[s as usize] = 0;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let du = out[u as usize] + 1;
            for &w in &self.adj[u as usize] {
                if out[w as usize] == UNSEEN {
                    out[w as usize] = du;
                    queue.push_back(w);
                }
            }
        }
    }

    /// BFS limited to radius `r`; returns visited vertices in BFS order (by
    /// distance, ties by discovery from smaller ids) with their distances.
    pub fn ball_order(&self, center: u32, r: u32) -> Vec<(u32, u32)> {
        let mut seen = BTreeMap::new();
        let mut order = vec![(center, 0u32)];
        seen.insert(center, 0u32);
        let mut i = 0;
        while i < order.len() {
            let (u, d) = order[i];
            i += 1;
            if d == r {
                continue;
            }
            for &w in &self.adj[u as usize] {
                if !seen.contains_key(&w) {
                    seen.insert(w, d + 1);
                    order.push((w, d + 1));
                }
            }
        }
        order
    }

    pub fn distances(&self, sources: &[u32]) -> Result<DistanceField> {
        DistanceField::new(self, sources)
    }

    /// Canonical geodesic from `u` to `v`: at each step the smallest-id neighbor
    /// one step closer to `v`. `to_v` must be the BFS field from `v`.
    pub(crate) fn geodesic_with(&self, u: u32, to_v: &[u32]) -> Vec<u32> {
        let mut path = vec![u];
        let mut cur = u;
        while to_v[cur as usize] > 0 {
            let d = to_v[cur as usize];
            cur = *self.adj[cur as usize].iter().find(|&&w| to_v[w as usize] == d - 1).expect("BFS field consistent");
            path.push(cur);
        }
        path
    }

    pub fn geodesic(&self, u: u32, v: u32) -> Result<Vec<u32>> {
        let mut d = Vec::new();
        self.bfs_into(&[v], &mut d);
        if d[u as usize] == UNSEEN {
            return Err(Error::Disconnected(format!("no path from {u} to {v}")));
        }
        Ok(self.geodesic_with(u, &d))
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            vertices: self.n(),
            edges: self.edges().into_iter().map(|(u, v)| [u, v]).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn from_json(j: &GraphJson) -> Result<Graph> {
        let edges: Vec<(u32, u32)> = j.edges.iter().map(|e| (e[0], e[1])).collect();
        let mut g = Graph::from_edges(j.vertices, &edges)?;
        for (&v, l) in &j.labels {
            if v as usize >= j.vertices {
                return Err(Error::Invalid(format!("label for missing vertex {v}")));
            }
            g.labels.insert(v, l.clone());
        }
        Ok(g)
    }

    pub fn to_dot(&self, name: &str) -> String {
        let mut s = format!("graph {name} {{\n");
        for (v, l) in &self.labels {
            let _ = writeln!(s, "  {v} [label=\"{v}:{l}\"];");
        }
        for (u, v) in self.edges() {
            let _ = writeln!(s, "  {u} -- {v};");
        }
        s.push_str("}\n");
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub vertices: usize,
    pub edges: Vec<[u32; 2]>,
    #[serde(default)]
    pub labels: BTreeMap<u32, String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceField {
    pub sources: Vec<u32>,
    /// `None` marks unreachable vertices.
    pub dist: Vec<Option<u32>>,
}

impl DistanceField {
    pub fn new(g: &Graph, sources: &[u32]) -> Result<DistanceField> {
        if sources.is_empty() {
            return Err(pre("distance sources must be nonempty"));
        }
        if let Some(&s) = sources.iter().find(|&&s| s as usize >= g.n()) {
            return Err(pre(format!("source {s} not in graph")));
        }
        let mut raw = Vec::new();
        g.bfs_into(sources, &mut raw);
        let mut src = sources.to_vec();
        src.sort_unstable();
        src.dedup();
        Ok(DistanceField { sources: src, dist: raw.into_iter().map(|d| (d != UNSEEN).then_some(d)).collect() })
    }

    pub fn get(&self, v: u32) -> Option<u32> {
        self.dist[v as usize]
    }

    pub fn max_finite(&self) -> Option<u32> {
        self.dist.iter().flatten().copied().max()
    }

    pub fn level(&self, k: u32) -> Vec<u32> {
        (0..self.dist.len() as u32).filter(|&v| self.dist[v as usize] == Some(k)).collect()
    }

    /// Sizes of the spheres of radius 0..=max.
    pub fn sphere_sizes(&self) -> Vec<usize> {
        let max = self.max_finite().unwrap_or(0) as usize;
        let mut sizes = vec![0; max + 1];
        for d in self.dist.iter().flatten() {
            sizes[*d as usize] += 1;
        }
        sizes
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("vertex,distance\n");
        for (v, d) in self.dist.iter().enumerate() {
            match d {
                Some(d) => {
                    let _ = writeln!(s, "{v},{d}");
                }
                None => {
                    let _ = writeln!(s, "{v},inf");
                }
            }
        }
        s
    }
}

/// All-pairs distances of a connected graph.
#[derive(Clone, Debug)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<u16>,
}

impl DistanceMatrix {
    pub fn new(g: &Graph) -> Result<DistanceMatrix> {
        let n = g.n();
        if !g.is_connected() {
            return Err(Error::Disconnected("distance matrix needs a connected graph".into()));
        }
        if n > 0 && n >= u16::MAX as usize {
            return Err(pre("graph too large for a dense distance matrix"));
        }
        let rows: Vec<Vec<u16>> = (0..n as u32)
            .into_par_iter()
            .map_init(Vec::new, |buf, s| {
                g.bfs_into(&[s], buf);
                buf.iter().map(|&x| x as u16).collect()
            })
            .collect();
        Ok(DistanceMatrix { n, d: rows.concat() })
    }

    /// Distances in `g` among the points of `subset`, indexed by position in it.
    pub fn among(g: &Graph, subset: &[u32]) -> Result<DistanceMatrix> {
        let n = subset.len();
        let rows: Vec<Vec<u16>> = subset
            .par_iter()
            .map_init(Vec::new, |buf, &s| {
                g.bfs_into(&[s], buf);
                subset.iter().map(|&t| buf[t as usize]).collect::<Vec<u32>>()
            })
            .map(|row| row.into_iter().map(|x| if x == UNSEEN { Err(()) } else { Ok(x.min(u16::MAX as u32 - 1) as u16) }).collect::<std::result::Result<Vec<u16>, ()>>())
            .collect::<std::result::Result<_, ()>>()
            .map_err(|_| Error::Disconnected("subset meets several components".into()))?;
        Ok(DistanceMatrix { n, d: rows.concat() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, u: u32, v: u32) -> u32 {
        self.d[u as usize * self.n + v as usize] as u32
    }

    pub fn row(&self, u: u32) -> &[u16] {
        &self.d[u as usize * self.n..(u as usize + 1) * self.n]
    }

    pub fn diameter(&self) -> u32 {
        self.d.iter().copied().max().unwrap_or(0) as u32
    }

    /// Canonical geodesic (smallest-id next step) from u to v.
    pub fn geodesic(&self, g: &Graph, u: u32, v: u32) -> Vec<u32> {
        let mut path = vec![u];
        let mut cur = u;
        while cur != v {
            let d = self.get(cur, v);
            cur = *g.neighbors(cur).iter().find(|&&w| self.get(w, v) + 1 == d).expect("metric consistent");
            path.push(cur);
        }
        path
    }

    /// Distance between two vertex sets.
    pub fn set_distance(&self, a: &[u32], b: &[u32]) -> Option<(u32, u32, u32)> {
        let mut best: Option<(u32, u32, u32)> = None;
        for &x in a {
            for &y in b {
                let d = self.get(x, y);
                if best.map_or(true, |(bd, _, _)| d < bd) {
                    best = Some((d, x, y));
                }
            }
        }
        best
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for u in 0..self.n {
            let row: Vec<String> = self.row(u as u32).iter().map(|d| d.to_string()).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Shell, open tube and closed neighborhood of a vertex set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShellSplit {
    pub shell: Vec<u32>,
    pub tube: Vec<u32>,
    pub nbhd: Vec<u32>,
}

pub fn sphere_and_tube(g: &Graph, w: &[u32], k: u32) -> Result<ShellSplit> {
    if w.is_empty() {
        return Err(pre("W must be nonempty"));
    }
    let f = DistanceField::new(g, w)?;
    let mut s = ShellSplit { shell: vec![], tube: vec![], nbhd: vec![] };
    for v in 0..g.n() as u32 {
        if let Some(d) = f.get(v) {
            if d < k {
                s.tube.push(v);
            }
            if d == k {
                s.shell.push(v);
            }
            if d <= k {
                s.nbhd.push(v);
            }
        }
    }
    Ok(s)
}

/// A ball materialized as its own graph; `origin[i]` is the source id of vertex i.
/// The center is always vertex 0.
#[derive(Clone, Debug)]
pub struct PointedBall {
    pub graph: Graph,
    pub radius: u32,
    pub origin: Vec<u32>,
}

impl PointedBall {
    pub fn center(&self) -> u32 {
        0
    }

    /// Induced ball B(center, r) of `g`.
    pub fn of(g: &Graph, center: u32, r: u32) -> PointedBall {
        let order: Vec<u32> = g.ball_order(center, r).into_iter().map(|(v, _)| v).collect();
        let (graph, origin) = g.induced(&order);
        PointedBall { graph, radius: r, origin }
    }

    /// Distances from the center measured inside the ball.
    pub fn center_distances(&self) -> Vec<u32> {
        let mut d = Vec::new();
        self.graph.bfs_into(&[0], &mut d);
        d
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MatchOutcome {
    Found(Vec<u32>),
    None,
    Budget,
}

/// Isomorphism search between two graphs under vertex colors, optional anchor
/// pair and optional metric constraint (dense row-major distance tables).
pub struct Matcher<'a> {
    pub a: &'a Graph,
    pub b: &'a Graph,
    pub colors_a: Vec<u64>,
    pub colors_b: Vec<u64>,
    pub metric_a: Option<&'a [u32]>,
    pub metric_b: Option<&'a [u32]>,
    pub budget: u64,
}

impl<'a> Matcher<'a> {
    pub fn new(a: &'a Graph, b: &'a Graph) -> Matcher<'a> {
        Matcher { a, b, colors_a: vec![0; a.n()], colors_b: vec![0; b.n()], metric_a: None, metric_b: None, budget: 20_000_000 }
    }

    /// Joint colour refinement over the disjoint union.
    fn refine(&self, ca: &[u64], cb: &[u64]) -> (Vec<u32>, Vec<u32>) {
        let na = self.a.n();
        let mut col: Vec<u32> = {
            let mut ids = BTreeMap::new();
            ca.iter().chain(cb.iter()).map(|c| {
                let l = ids.len() as u32;
                *ids.entry(*c).or_insert(l)
            }).collect()
        };
        let neigh = |v: usize| -> &[u32] {
            if v < na {
                self.a.neighbors(v as u32)
            } else {
                self.b.neighbors((v - na) as u32)
            }
        };
        let off = |v: usize, w: u32| if v < na { w as usize } else { w as usize + na };
        let mut classes = col.iter().collect::<std::collections::BTreeSet<_>>().len();
        loop {
            let mut ids: BTreeMap<(u32, Vec<u32>), u32> = BTreeMap::new();
            let sigs: Vec<(u32, Vec<u32>)> = (0..col.len())
                .map(|v| {
                    let mut s: Vec<u32> = neigh(v).iter().map(|&w| col[off(v, w)]).collect();
                    s.sort_unstable();
                    (col[v], s)
                })
                .collect();
            for s in &sigs {
                let l = ids.len() as u32;
                ids.entry(s.clone()).or_insert(l);
            }
            let next: Vec<u32> = sigs.iter().map(|s| ids[s]).collect();
            let nc = ids.len();
            col = next;
            if nc == classes {
                break;
            }
            classes = nc;
        }
        (col[..na].to_vec(), col[na..].to_vec())
    }

    /// Searches for an isomorphism a → b sending `anchor.0` to `anchor.1` (if given).
    pub fn solve(&self, anchor: Option<(u32, u32)>) -> MatchOutcome {
        let (na, nb) = (self.a.n(), self.b.n());
        if na != nb || self.a.m() != self.b.m() {
            return MatchOutcome::None;
        }
        if na == 0 {
            return MatchOutcome::Found(vec![]);
        }
        let mut ca = self.colors_a.clone();
        let mut cb = self.colors_b.clone();
        if let Some((x, y)) = anchor {
            ca[x as usize] = ca[x as usize].wrapping_mul(31).wrapping_add(0x9e37_79b9_7f4a_7c15);
            cb[y as usize] = cb[y as usize].wrapping_mul(31).wrapping_add(0x9e37_79b9_7f4a_7c15);
        }
        let (ra, rb) = self.refine(&ca, &cb);
        let mut hist_a: BTreeMap<u32, usize> = BTreeMap::new();
        let mut hist_b: BTreeMap<u32, usize> = BTreeMap::new();
        for &c in &ra {
            *hist_a.entry(c).or_default() += 1;
        }
        for &c in &rb {
            *hist_b.entry(c).or_default() += 1;
        }
        if hist_a != hist_b {
            return MatchOutcome::None;
        }
        // search order: BFS from the anchor (or vertex 0), restarting per component
        let start = anchor.map(|p| p.0).unwrap_or(0);
        let mut order = Vec::with_capacity(na);
        let mut parent = vec![UNSEEN; na];
        let mut seen = vec![false; na];
        let mut roots = std::iter::once(start).chain(0..na as u32);
        while order.len() < na {
            let r = roots.find(|&r| !seen[r as usize]).expect("unvisited root");
            seen[r as usize] = true;
            let base = order.len();
            order.push(r);
            let mut i = base;
            while i < order.len() {
                let u = order[i];
                i += 1;
                for &w in self.a.neighbors(u) {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        parent[w as usize] = u;
                        order.push(w);
                    }
                }
            }
        }
        let mut by_color_b: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for v in 0..nb as u32 {
            by_color_b.entry(rb[v as usize]).or_default().push(v);
        }
        let mut st = Search {
            m: self,
            order,
            parent,
            ra,
            rb,
            by_color_b,
            map: vec![UNSEEN; na],
            used: vec![false; nb],
            nodes: 0,
            anchor,
        };
        match st.go(0) {
            Some(true) => MatchOutcome::Found(st.map),
            Some(false) => MatchOutcome::None,
            None => MatchOutcome::Budget,
        }
    }
}

struct Search<'m, 'a> {
    m: &'m Matcher<'a>,
    order: Vec<u32>,
    parent: Vec<u32>,
    ra: Vec<u32>,
    rb: Vec<u32>,
    by_color_b: BTreeMap<u32, Vec<u32>>,
    map: Vec<u32>,
    used: Vec<bool>,
    nodes: u64,
    anchor: Option<(u32, u32)>,
}

impl Search<'_, '_> {
    fn feasible(&self, v: u32, c: u32) -> bool {
        if self.used[c as usize] || self.ra[v as usize] != self.rb[c as usize] {
            return false;
        }
        let (a, b) = (self.m.a, self.m.b);
        let mut mapped_nb = 0;
        for &w in a.neighbors(v) {
            let mw = self.map[w as usize];
            if mw != UNSEEN {
                mapped_nb += 1;
                if !b.has_edge(c, mw) {
                    return false;
                }
            }
        }
        let used_nb = b.neighbors(c).iter().filter(|&&w| self.used[w as usize]).count();
        if used_nb != mapped_nb {
            return false;
        }
        if let (Some(ma), Some(mb)) = (self.m.metric_a, self.m.metric_b) {
            let n = a.n();
            for &u in &self.order {
                let mu = self.map[u as usize];
                if mu == UNSEEN {
                    continue;
                }
                if ma[v as usize * n + u as usize] != mb[c as usize * n + mu as usize] {
                    return false;
                }
            }
        }
        true
    }

    /// Some(true) found, Some(false) exhausted, None budget.
    fn go(&mut self, i: usize) -> Option<bool> {
        if i == self.order.len() {
            return Some(true);
        }
        self.nodes += 1;
        if self.nodes > self.m.budget {
            return None;
        }
        let v = self.order[i];
        let cands: Vec<u32> = if i == 0 && self.anchor.is_some() {
            vec![self.anchor.unwrap().1]
        } else if self.parent[v as usize] != UNSEEN {
            self.m.b.neighbors(self.map[self.parent[v as usize] as usize]).to_vec()
        } else {
            self.by_color_b.get(&self.ra[v as usize]).cloned().unwrap_or_default()
        };
        for c in cands {
            if !self.feasible(v, c) {
                continue;
            }
            self.map[v as usize] = c;
            self.used[c as usize] = true;
            match self.go(i + 1) {
                Some(true) => return Some(true),
                None => return None,
                Some(false) => {}
            }
            self.map[v as usize] = UNSEEN;
            self.used[c as usize] = false;
        }
        Some(false)
    }
}

/// Pointed isomorphism of two balls (center 0 to center 0), optionally also
/// matching labels. Err on radius mismatch or exhausted search budget.
pub fn pointed_isomorphic(a: &PointedBall, b: &PointedBall, labels: Option<(&[u64], &[u64])>) -> Result<Option<Vec<u32>>> {
    if a.radius != b.radius {
        return Err(pre(format!("radius mismatch {} vs {}", a.radius, b.radius)));
    }
    let da = a.center_distances();
    let db = b.center_distances();
    let mut m = Matcher::new(&a.graph, &b.graph);
    m.colors_a = da.iter().map(|&d| d as u64).collect();
    m.colors_b = db.iter().map(|&d| d as u64).collect();
    if let Some((la, lb)) = labels {
        if la.len() != a.graph.n() || lb.len() != b.graph.n() {
            return Err(pre("label vectors must cover the balls"));
        }
        for (c, l) in m.colors_a.iter_mut().zip(la) {
            *c = *c * 1_000_003 + l;
        }
        for (c, l) in m.colors_b.iter_mut().zip(lb) {
            *c = *c * 1_000_003 + l;
        }
    }
    match m.solve(Some((0, 0))) {
        MatchOutcome::Found(map) => Ok(Some(map)),
        MatchOutcome::None => Ok(None),
        MatchOutcome::Budget => Err(Error::Verification("isomorphism search budget exhausted".into())),
    }
}
