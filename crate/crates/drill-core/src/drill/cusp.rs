//! Cusped spaces: a tube complement with a horoball glued over its completed
//! shell, the path family used to certify their hyperbolicity.

use crate::error::{pre, Error, Result};
use crate::graph::{DistanceMatrix, Graph, GraphJson};
use crate::half::Half;
use crate::horoball::{horoball_with_metric, Horoball};
use crate::hyperbolicity::{certify_measured, delta_on, Certificate, DeltaPolicy, PathFamily, Q};
use crate::report::{Report, Verdict};
use crate::shells::{completed_tube_complement, CompletedTubeComplement, Provenance};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "part", rename_all = "lowercase")]
pub enum CuspProvenance {
    Complement,
    /// Completed-shell vertex: the depth-0 layer of the horoball.
    Shell,
    Horoball { depth: u32 },
}

impl CuspProvenance {
    pub fn label(self) -> String {
        match self {
            CuspProvenance::Complement => "complement".into(),
            CuspProvenance::Shell => "shell".into(),
            CuspProvenance::Horoball { depth } => format!("horoball:{depth}"),
        }
    }

    pub fn depth(self) -> u32 {
        match self {
            CuspProvenance::Horoball { depth } => depth,
            _ => 0,
        }
    }

    /// Whether the vertex lies in the (closed) horoball.
    pub fn in_horoball(self) -> bool {
        !matches!(self, CuspProvenance::Complement)
    }
}

/// CTC ids come first (same numbering as the tube complement); horoball
/// vertex (x,n) with n ≥ 1 is `ctc.graph.n() + (n−1)·|CS| + x`.
#[derive(Clone, Debug)]
pub struct CuspedSpace {
    pub ambient: Graph,
    pub w: Vec<u32>,
    pub ctc: CompletedTubeComplement,
    pub horoball: Horoball,
    pub graph: Graph,
    pub provenance: Vec<CuspProvenance>,
    /// Cusp id of each horoball vertex.
    pub from_horoball: Vec<u32>,
    /// Horoball id of each cusp vertex in the closed horoball.
    pub to_horoball: Vec<Option<u32>>,
}

impl CuspedSpace {
    pub fn depth_max(&self) -> u32 {
        self.horoball.depth_max
    }

    pub fn depth(&self, v: u32) -> u32 {
        self.provenance[v as usize].depth()
    }

    /// Cusp id of completed-shell vertex `x` at depth `n`.
    pub fn id(&self, x: u32, n: u32) -> u32 {
        self.from_horoball[self.horoball.id(x, n) as usize]
    }

    pub fn to_json(&self) -> GraphJson {
        let mut j = self.graph.to_json();
        for (v, p) in self.provenance.iter().enumerate() {
            j.labels.insert(v as u32, p.label());
        }
        j
    }

    /// Vertex and edge counts of the parts and of the glued space.
    pub fn counts_report(&self) -> Report {
        let (vc, ec) = (self.ctc.graph.n(), self.ctc.graph.m());
        let (vh, eh) = (self.horoball.graph.n(), self.horoball.graph.m());
        let (vs, es) = (self.ctc.cs.graph.n(), self.ctc.cs.graph.m());
        let ok = self.graph.n() == vc + vh - vs && self.graph.m() == ec + eh - es;
        Report::new("cusp-counts", Verdict::from_bool(ok))
            .with("vertices", self.graph.n())
            .with("edges", self.graph.m())
            .with("ctc", [vc, ec])
            .with("horoball", [vh, eh])
            .with("interface", [vs, es])
            .with("depth_max", self.depth_max())
    }
}

/// X^cusp(K): the completed tube complement with a horoball of depth
/// `depth_max` glued along its completed shell.
pub fn cusp(g: &Graph, w: &[u32], k: u32, s: u32, depth_max: u32) -> Result<CuspedSpace> {
    let ctc = completed_tube_complement(g, w, k, s)?;
    cusp_over(g, w, ctc, depth_max)
}

pub(crate) fn cusp_over(g: &Graph, w: &[u32], ctc: CompletedTubeComplement, depth_max: u32) -> Result<CuspedSpace> {
    if !ctc.cs.is_connected() {
        return Err(Error::Disconnected(format!("completed shell has {} components", ctc.cs.components)));
    }
    let glued = glue_horoball(&ctc.graph, &ctc.cs_to_ctc, depth_max)?;
    let provenance = (0..glued.graph.n())
        .map(|v| match (v < glued.base_n, glued.to_horoball[v]) {
            (true, Some(_)) => CuspProvenance::Shell,
            (true, None) => CuspProvenance::Complement,
            (false, _) => CuspProvenance::Horoball { depth: glued.depth[v] },
        })
        .collect();
    debug_assert!(ctc.provenance.iter().zip(&glued.to_horoball).all(|(p, t)| (*p == Provenance::Ambient) == t.is_none()));
    let Glued { graph, horoball, from_horoball, to_horoball, .. } = glued;
    Ok(CuspedSpace { ambient: g.clone(), w: w.to_vec(), ctc, horoball, graph, provenance, from_horoball, to_horoball })
}

/// A horoball glued to `base` along `interface` (strictly increasing base
/// ids). The interface metric is the path metric of the induced subgraph.
/// Base ids are kept; (i,n) with n ≥ 1 gets `base_n + (n−1)·|interface| + i`.
#[derive(Clone, Debug)]
pub struct Glued {
    pub graph: Graph,
    pub base_n: usize,
    pub interface: Vec<u32>,
    pub horoball: Horoball,
    pub depth: Vec<u32>,
    pub from_horoball: Vec<u32>,
    pub to_horoball: Vec<Option<u32>>,
}

impl Glued {
    pub fn id(&self, i: u32, n: u32) -> u32 {
        if n == 0 {
            self.interface[i as usize]
        } else {
            (self.base_n + (n as usize - 1) * self.interface.len()) as u32 + i
        }
    }

    /// Interface index under a horoball vertex.
    pub fn base_index(&self, v: u32) -> Option<u32> {
        self.to_horoball[v as usize].map(|h| self.horoball.base_of[h as usize])
    }
}

/// Rows of the path metric of `g`, `u32::MAX` between components.
pub(crate) fn metric_rows(g: &Graph) -> Vec<Vec<u32>> {
    use rayon::prelude::*;
    (0..g.n() as u32)
        .into_par_iter()
        .map(|s| {
            let mut row = Vec::new();
            g.bfs_into(&[s], &mut row);
            row
        })
        .collect()
}

pub fn glue_horoball(base: &Graph, interface: &[u32], depth_max: u32) -> Result<Glued> {
    if interface.windows(2).any(|p| p[0] >= p[1]) || interface.last().is_some_and(|&x| x as usize >= base.n()) {
        return Err(pre("interface must be strictly increasing base ids"));
    }
    let (sub, _) = base.induced(interface);
    let rows = metric_rows(&sub);
    let horoball = horoball_with_metric(interface.len(), depth_max, &|x, y| Some(rows[x as usize][y as usize]).filter(|&d| d != u32::MAX))?;
    let (nb, ns) = (base.n() as u32, interface.len() as u32);
    let from_horoball: Vec<u32> = (0..horoball.graph.n())
        .map(|h| {
            let (x, n) = (horoball.base_of[h], horoball.depth[h]);
            if n == 0 {
                interface[x as usize]
            } else {
                nb + (n - 1) * ns + x
            }
        })
        .collect();
    let total = (nb + depth_max * ns) as usize;
    let mut to_horoball = vec![None; total];
    for (h, &c) in from_horoball.iter().enumerate() {
        to_horoball[c as usize] = Some(h as u32);
    }
    let mut edges = base.edges();
    edges.extend(horoball.graph.edges().into_iter().map(|(a, b)| (from_horoball[a as usize], from_horoball[b as usize])));
    let graph = Graph::from_edges(total, &edges)?;
    let depth = (0..total).map(|v| to_horoball[v].map_or(0, |h| horoball.depth[h as usize])).collect();
    Ok(Glued { graph, base_n: base.n(), interface: interface.to_vec(), horoball, depth, from_horoball, to_horoball })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathCase {
    /// Adjacent endpoints: the edge itself.
    Edge,
    /// Both outside the horoball, ambient geodesic misses the tube.
    Geodesic,
    /// Both outside, through the nearest shell points and the horoball.
    Detour,
    /// One endpoint in the closed horoball.
    Mixed,
    /// Both in the closed horoball.
    Horoball,
}

/// 𝒫(x,y) on a cusped space, with canonical (smallest-id) geodesic choices.
pub struct CuspPathFamily<'a> {
    pub cusp: &'a CuspedSpace,
    ambient_dm: DistanceMatrix,
    h_dm: DistanceMatrix,
    to_w: Vec<u32>,
    /// [x, …, x′] in cusp ids for complement vertices.
    to_shell: Vec<Vec<u32>>,
}

pub fn cusp_path_family(c: &CuspedSpace) -> Result<CuspPathFamily<'_>> {
    let ambient_dm = DistanceMatrix::new(&c.ambient)?;
    let h_dm = DistanceMatrix::new(&c.horoball.graph)?;
    let mut to_w = Vec::new();
    c.ambient.bfs_into(&c.w, &mut to_w);
    let k = c.ctc.cs.k;
    let to_shell = (0..c.graph.n() as u32)
        .map(|v| match (c.provenance[v as usize], c.ctc.ambient_of.get(v as usize).copied().flatten()) {
            (CuspProvenance::Complement, Some(a)) => {
                let mut p = c.ambient.geodesic_with(a, &to_w);
                p.truncate((to_w[a as usize] - k) as usize + 1);
                p.into_iter().map(|y| c.ctc.local(y).expect("outside the open tube")).collect()
            }
            _ => Vec::new(),
        })
        .collect();
    Ok(CuspPathFamily { cusp: c, ambient_dm, h_dm, to_w, to_shell })
}

impl CuspPathFamily<'_> {
    pub fn case(&self, x: u32, y: u32) -> PathCase {
        let c = self.cusp;
        if x == y || c.graph.has_edge(x, y) {
            return PathCase::Edge;
        }
        match (c.provenance[x as usize].in_horoball(), c.provenance[y as usize].in_horoball()) {
            (true, true) => PathCase::Horoball,
            (false, false) => {
                let (a, b) = (self.ambient(x), self.ambient(y));
                let k = c.ctc.cs.k;
                if self.ambient_dm.geodesic(&c.ambient, a, b).iter().any(|&v| self.to_w[v as usize] < k) {
                    PathCase::Detour
                } else {
                    PathCase::Geodesic
                }
            }
            _ => PathCase::Mixed,
        }
    }

    fn ambient(&self, x: u32) -> u32 {
        self.cusp.ctc.ambient_of[x as usize].expect("complement vertex")
    }

    fn horoball_path(&self, a: u32, b: u32) -> Vec<u32> {
        let c = self.cusp;
        let (ha, hb) = (c.to_horoball[a as usize].expect("in horoball"), c.to_horoball[b as usize].expect("in horoball"));
        self.h_dm.geodesic(&c.horoball.graph, ha, hb).into_iter().map(|h| c.from_horoball[h as usize]).collect()
    }
}

impl PathFamily for CuspPathFamily<'_> {
    fn path(&self, x: u32, y: u32) -> Vec<u32> {
        let c = self.cusp;
        match self.case(x, y) {
            PathCase::Edge => {
                if x == y {
                    vec![x]
                } else {
                    vec![x, y]
                }
            }
            PathCase::Geodesic => self.ambient_dm.geodesic(&c.ambient, self.ambient(x), self.ambient(y)).into_iter().map(|v| c.ctc.local(v).expect("outside the open tube")).collect(),
            PathCase::Horoball => self.horoball_path(x, y),
            PathCase::Mixed => {
                let (out, inside) = if c.provenance[x as usize].in_horoball() { (y, x) } else { (x, y) };
                let lead = &self.to_shell[out as usize];
                let mut p = lead.clone();
                p.extend(self.horoball_path(*lead.last().expect("nonempty"), inside).into_iter().skip(1));
                if out == y {
                    p.reverse();
                }
                p
            }
            PathCase::Detour => {
                let (lx, ly) = (&self.to_shell[x as usize], &self.to_shell[y as usize]);
                let mut p = lx.clone();
                p.extend(self.horoball_path(*lx.last().unwrap(), *ly.last().unwrap()).into_iter().skip(1));
                p.extend(ly.iter().rev().skip(1));
                p
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct CuspCertification {
    pub report: Report,
    pub certificate: Option<Certificate>,
    /// Exact four-point δ of the central ball, in the cusped metric.
    pub delta: Half,
}

/// Vertices of the ball about the first completed-shell vertex, grown while
/// it has at most `cap` vertices.
pub fn central_ball(c: &CuspedSpace, cap: usize) -> Vec<u32> {
    let center = c.id(0, 0);
    let order = c.graph.ball_order(center, u32::MAX);
    let mut r = 0;
    while order.iter().filter(|&&(_, d)| d <= r + 1).count() <= cap && order.iter().any(|&(_, d)| d > r) {
        r += 1;
    }
    order.into_iter().filter(|&(_, d)| d <= r).map(|(v, _)| v).collect()
}

/// Guessing-geodesics certificate for 𝒫 with the measured h, compared with
/// the exact δ of a central ball (the certificate's k must dominate it).
pub fn certify_cusp(c: &CuspedSpace, ball_cap: usize) -> Result<CuspCertification> {
    let fam = cusp_path_family(c)?;
    let cert = certify_measured(&c.graph, &fam)?;
    let dm = DistanceMatrix::new(&c.graph)?;
    let ball = central_ball(c, ball_cap);
    let delta = delta_on(&dm, &ball, DeltaPolicy::Exact).delta;
    let mut report = cert.report;
    report.kind = "cusp-certificate".into();
    report.set("vertices", c.graph.n());
    report.set("central_ball", ball.len());
    report.set("delta_central_ball", delta);
    if let Some(ct) = &cert.certificate {
        let dominates = ct.k >= delta.to_ratio();
        report.set("k_dominates_delta", dominates);
        if !dominates {
            report.verdict = Verdict::Fail;
        }
    }
    Ok(CuspCertification { report, certificate: cert.certificate, delta })
}

/// Rational h for callers that want a fixed threshold rather than the measured one.
pub fn certify_cusp_at(c: &CuspedSpace, h: Q) -> Result<Report> {
    let fam = cusp_path_family(c)?;
    Ok(crate::hyperbolicity::certify_guess_geodesics(&c.graph, &fam, h)?.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{cycle_graph, SpaceGenerator, SpaceKind};

    #[test]
    fn cycle_cusp_counts() {
        let c = cusp(&cycle_graph(10), &[0], 2, 4, 2).unwrap();
        // CTC is again a 10-cycle, CS a path on 5 vertices
        let (vs, es) = (5usize, 4usize);
        let vh = vs * 3;
        let eh = es + (4 + 3) + (4 + 3 + 2 + 1) + 2 * vs;
        assert_eq!(c.graph.n(), 10 + vh - vs);
        assert_eq!(c.graph.m(), 10 + eh - es);
        assert!(c.counts_report().verdict.is_pass());
        let flat = cusp(&cycle_graph(10), &[0], 2, 4, 0).unwrap();
        assert_eq!(flat.graph, flat.ctc.graph);
        assert!(cusp(&cycle_graph(10), &[0], 2, 3, 2).is_err());
    }

    #[test]
    fn path_family_cases() {
        let g = SpaceGenerator::new(SpaceKind::Tree { valence: 3 }).generate_ball(4).unwrap().graph;
        let c = cusp(&g, &[0], 1, 2, 2).unwrap();
        let fam = cusp_path_family(&c).unwrap();
        let n = c.graph.n() as u32;
        for x in 0..n {
            for y in 0..n {
                let p = fam.path(x, y);
                assert!(p.contains(&x) && p.contains(&y));
                if c.graph.has_edge(x, y) {
                    assert_eq!(p.len(), 2);
                }
            }
        }
        let deep = c.id(0, 2);
        let far = (0..n).find(|&v| c.provenance[v as usize] == CuspProvenance::Complement && !c.graph.neighbors(v).iter().any(|&w| c.provenance[w as usize].in_horoball())).unwrap();
        assert_eq!(fam.case(far, deep), PathCase::Mixed);
    }

    #[test]
    fn tree_cusp_certifies() {
        let g = SpaceGenerator::new(SpaceKind::Tree { valence: 3 }).generate_ball(3).unwrap().graph;
        let c = cusp(&g, &[0], 1, 2, 2).unwrap();
        let cert = certify_cusp(&c, 200).unwrap();
        assert!(cert.report.verdict.is_pass(), "{:?}", cert.report);
        let k = cert.certificate.unwrap().k;
        assert!(k >= cert.delta.to_ratio());
    }
}
