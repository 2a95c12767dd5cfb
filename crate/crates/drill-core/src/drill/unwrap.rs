//! Unwrap and glue: the ℤ-cover of a tube complement with a horoball glued
//! over the full preimage of its completed shell, and the quotient map back
//! to the cusped space.

use super::cusp::{glue_horoball, Glued};
use crate::error::{pre, Result};
use crate::graph::Graph;
use crate::report::{Report, Verdict};
use crate::shells::completed_tube_complement;
use crate::topology::{classify_small, embedded_cycles, pi1d_presentation, z_cover_cocycle, CoverTruncation, GroupClass, GroupVerdict};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnwrapParams {
    pub k: u32,
    pub s: u32,
    pub d: u32,
    pub window: u32,
    pub depth_max: u32,
}

/// UG(Υ,γ) at truncation. Cover ids come first (as in the cover), then the
/// new horoball levels n ≥ 1.
#[derive(Clone, Debug)]
pub struct UnwrappedSpace {
    pub params: UnwrapParams,
    /// The tube complement (or stand-in) that is unwrapped.
    pub base: Graph,
    /// Input-graph vertex under each base vertex (None for arc interiors).
    pub base_ambient: Vec<Option<u32>>,
    /// Base ids of the completed shell, increasing.
    pub shell: Vec<u32>,
    pub cs_class: GroupVerdict,
    pub ctc_class: GroupVerdict,
    pub cover: CoverTruncation,
    /// The base with a horoball over its shell: the target of q.
    pub cusp: Glued,
    /// Cover ids over the shell, increasing.
    pub lifted_shell: Vec<u32>,
    /// The unwrapped space with its glued horoball.
    pub glued: Glued,
    pub q: Vec<u32>,
    /// Base vertices inside horoballs glued at earlier steps.
    pub frozen: Vec<bool>,
}

impl UnwrappedSpace {
    pub fn graph(&self) -> &Graph {
        &self.glued.graph
    }

    pub fn n(&self) -> usize {
        self.glued.graph.n()
    }

    pub fn cover_n(&self) -> usize {
        self.cover.graph.n()
    }

    pub fn depth(&self, v: u32) -> u32 {
        self.glued.depth[v as usize]
    }

    /// Base vertex under a cover vertex, or under the foot of a horoball vertex.
    pub fn base_of(&self, v: u32) -> u32 {
        let c = if (v as usize) < self.cover_n() { v } else { self.lifted_shell[self.glued.base_index(v).expect("horoball vertex") as usize] };
        self.cover.projection[c as usize]
    }

    pub fn fiber(&self, v: u32) -> i64 {
        let c = if (v as usize) < self.cover_n() { v } else { self.lifted_shell[self.glued.base_index(v).expect("horoball vertex") as usize] };
        self.cover.fiber[c as usize]
    }

    /// Input-graph vertex under a cover vertex.
    pub fn ambient_of(&self, v: u32) -> Option<u32> {
        if (v as usize) < self.cover_n() {
            self.base_ambient[self.cover.projection[v as usize] as usize]
        } else {
            None
        }
    }

    /// Lift of input vertex `a` in fiber `k`.
    pub fn lift(&self, a: u32, k: i64) -> Option<u32> {
        let b = self.base_ambient.iter().position(|&x| x == Some(a))?;
        self.cover.id(b as u32, k)
    }

    /// Deck translation by +1, induced level-wise on the horoball.
    pub fn deck(&self, v: u32) -> Option<u32> {
        if (v as usize) < self.cover_n() {
            return self.cover.deck(v);
        }
        let i = self.glued.base_index(v)?;
        let t = self.cover.deck(self.lifted_shell[i as usize])?;
        let j = self.lifted_shell.binary_search(&t).ok()? as u32;
        Some(self.glued.id(j, self.depth(v)))
    }

    /// Deck translation by `m` (any sign).
    pub fn deck_power(&self, v: u32, m: i64) -> Option<u32> {
        let shift = |c: u32| self.cover.id(self.cover.projection[c as usize], self.cover.fiber[c as usize] + m);
        if (v as usize) < self.cover_n() {
            return shift(v);
        }
        let i = self.glued.base_index(v)?;
        let t = shift(self.lifted_shell[i as usize])?;
        let j = self.lifted_shell.binary_search(&t).ok()? as u32;
        Some(self.glued.id(j, self.depth(v)))
    }

    /// Graph-morphism, depth, deck-equivariance and short-loop lifting checks.
    pub fn structure_report(&self) -> Result<Report> {
        let g = self.graph();
        let t = &self.cusp.graph;
        let mut bad_edge = None;
        let mut collapsed = 0usize;
        for (a, b) in g.edges() {
            let (x, y) = (self.q[a as usize], self.q[b as usize]);
            if x == y {
                collapsed += 1;
            } else if !t.has_edge(x, y) && bad_edge.is_none() {
                bad_edge = Some((a, b));
            }
        }
        let depth_ok = (0..g.n() as u32).all(|v| self.cusp.depth[self.q[v as usize] as usize] == self.depth(v));
        let deck_ok = (0..g.n() as u32).all(|v| self.deck(v).is_none_or(|w| self.q[w as usize] == self.q[v as usize] && self.depth(w) == self.depth(v)));
        let mut open_lift = None;
        let cycles = embedded_cycles(&self.base, self.params.d, crate::topology::CYCLE_BUDGET)?;
        'cycles: for c in &cycles {
            let mut walk = c.clone();
            walk.push(c[0]);
            for k in -self.cover.window..=self.cover.window {
                let Some(x) = self.cover.id(c[0], k) else { continue };
                if !self.cover.interior[x as usize] {
                    continue;
                }
                if let Some(l) = self.cover.lift_walk(x, &walk) {
                    if l.last() != Some(&x) {
                        open_lift = Some((k, c.clone()));
                        break 'cycles;
                    }
                }
            }
        }
        let ok = bad_edge.is_none() && depth_ok && deck_ok && open_lift.is_none();
        let mut r = Report::new("unwrap-structure", Verdict::from_bool(ok))
            .with("vertices", g.n())
            .with("edges", g.m())
            .with("collapsed_edges", collapsed)
            .with("q_morphism", bad_edge.is_none())
            .with("depth_preserving", depth_ok)
            .with("deck_equivariant", deck_ok)
            .with("short_cycles_checked", cycles.len())
            .with("short_cycles_lift_closed", open_lift.is_none());
        if let Some(e) = bad_edge {
            r = r.witness(serde_json::json!({ "edge": e }));
        } else if let Some((k, c)) = open_lift {
            r = r.witness(serde_json::json!({ "fiber": k, "cycle": c }));
        }
        Ok(r)
    }

    pub fn summary(&self) -> Report {
        Report::new("unwrap", Verdict::Pass)
            .with("params", self.params)
            .with("base_vertices", self.base.n())
            .with("shell_vertices", self.shell.len())
            .with("cover_vertices", self.cover_n())
            .with("lifted_shell", self.lifted_shell.len())
            .with("vertices", self.n())
            .with("edges", self.graph().m())
            .with("cs_class", &self.cs_class.class)
            .with("ctc_class", &self.ctc_class.class)
            .with("hom_support", self.cover.hom.iter().filter(|&&h| h != 0).count())
            .with("frozen", self.frozen.iter().filter(|&&f| f).count())
    }
}

/// Unwraps CTC_{K,s}(W) of `g` along its ℤ-valued π₁^D and glues a horoball
/// over the preimage of the completed shell.
pub fn unwrap_and_glue(g: &Graph, w: &[u32], k: u32, s: u32, d: u32, window: u32, depth_max: u32) -> Result<UnwrappedSpace> {
    unwrap_frozen(g, w, UnwrapParams { k, s, d, window, depth_max }, &vec![false; g.n()])
}

/// Same construction with `g` itself taken as the tube complement and
/// `shell` (increasing ids) as its completed shell.
pub fn unwrap_stand_in(g: &Graph, shell: &[u32], d: u32, window: u32, depth_max: u32) -> Result<UnwrappedSpace> {
    let params = UnwrapParams { k: 0, s: 0, d, window, depth_max };
    unwrap_core(g.clone(), (0..g.n() as u32).map(Some).collect(), shell.to_vec(), vec![false; g.n()], params)
}

/// Unwrap in a space that already carries glued horoballs: `frozen` marks
/// their open parts, which are left out of the π₁^D computation; the cocycle
/// is extended over them through nearest-point shadows.
pub(crate) fn unwrap_frozen(g: &Graph, w: &[u32], p: UnwrapParams, frozen: &[bool]) -> Result<UnwrappedSpace> {
    let ctc = completed_tube_complement(g, w, p.k, p.s)?;
    if !ctc.cs.is_connected() {
        return Err(pre(format!("completed shell has {} components", ctc.cs.components)));
    }
    let frozen_base = ctc.ambient_of.iter().map(|a| a.is_some_and(|a| frozen[a as usize])).collect();
    unwrap_core(ctc.graph, ctc.ambient_of, ctc.cs_to_ctc, frozen_base, p)
}

fn classify_z(g: &Graph, d: u32, what: &str) -> Result<GroupVerdict> {
    let v = classify_small(&pi1d_presentation(g, d, 0)?);
    if v.class != GroupClass::InfiniteCyclic {
        return Err(pre(format!("π₁^{d} of the {what} is {:?}, not ℤ", v.class)));
    }
    Ok(v)
}

fn unwrap_core(base: Graph, base_ambient: Vec<Option<u32>>, shell: Vec<u32>, frozen: Vec<bool>, p: UnwrapParams) -> Result<UnwrappedSpace> {
    if shell.windows(2).any(|x| x[0] >= x[1]) || shell.iter().any(|&x| frozen[x as usize]) {
        return Err(pre("shell must be increasing and outside earlier horoballs"));
    }
    let (cs, _) = base.induced(&shell);
    let cs_class = classify_z(&cs, p.d, "completed shell")?;
    let keep: Vec<u32> = (0..base.n() as u32).filter(|&v| !frozen[v as usize]).collect();
    let (ho, _) = base.induced(&keep);
    let mut ho_id = vec![u32::MAX; base.n()];
    for (i, &v) in keep.iter().enumerate() {
        ho_id[v as usize] = i as u32;
    }
    let pres = pi1d_presentation(&ho, p.d, 0)?;
    let ctc_class = classify_z(&ho, p.d, "tube complement")?;
    let hom = ctc_class.z_hom().ok_or_else(|| pre("no ℤ map for the tube complement"))?;
    let val = |a: u32, b: u32| -> i64 {
        let l = pres.letter(a, b);
        if l == 0 {
            0
        } else {
            l.signum() as i64 * hom[l.unsigned_abs() as usize - 1]
        }
    };
    let extended = extend_over_frozen(&base, &ho, &ho_id, &frozen, &val)?;
    let shift = |u: u32, v: u32| -> i64 {
        match (ho_id[u as usize], ho_id[v as usize]) {
            (a, b) if a != u32::MAX && b != u32::MAX => val(a, b),
            _ => extended[&(u, v)],
        }
    };
    let mut cover = z_cover_cocycle(&base, p.d, &shift, p.window)?;
    cover.hom = hom;
    let in_shell = {
        let mut f = vec![false; base.n()];
        for &x in &shell {
            f[x as usize] = true;
        }
        f
    };
    let lifted_shell: Vec<u32> = (0..cover.graph.n() as u32).filter(|&x| in_shell[cover.projection[x as usize] as usize]).collect();
    let cusp = glue_horoball(&base, &shell, p.depth_max)?;
    let glued = glue_horoball(&cover.graph, &lifted_shell, p.depth_max)?;
    let nc = cover.graph.n();
    let q = (0..glued.graph.n() as u32)
        .map(|v| {
            if (v as usize) < nc {
                cover.projection[v as usize]
            } else {
                let i = glued.base_index(v).expect("horoball vertex");
                let b = cover.projection[lifted_shell[i as usize] as usize];
                cusp.id(shell.binary_search(&b).expect("shell vertex") as u32, glued.depth[v as usize])
            }
        })
        .collect();
    Ok(UnwrappedSpace { params: p, base, base_ambient, shell, cs_class, ctc_class, cover, cusp, lifted_shell, glued, q, frozen })
}

/// Cocycle values on edges touching frozen vertices: the value along the
/// canonical geodesic (in the unfrozen part) between the endpoints' shadows.
fn extend_over_frozen(base: &Graph, ho: &Graph, ho_id: &[u32], frozen: &[bool], val: &dyn Fn(u32, u32) -> i64) -> Result<BTreeMap<(u32, u32), i64>> {
    let mut out = BTreeMap::new();
    if !frozen.iter().any(|&f| f) {
        return Ok(out);
    }
    let sources: Vec<u32> = (0..base.n() as u32).filter(|&v| !frozen[v as usize]).collect();
    let mut to_free = Vec::new();
    base.bfs_into(&sources, &mut to_free);
    let shadow = |v: u32| -> u32 { ho_id[*base.geodesic_with(v, &to_free).last().expect("nonempty") as usize] };
    let mut by_target: BTreeMap<u32, Vec<(u32, u32, u32)>> = BTreeMap::new();
    for (u, v) in base.edges() {
        if frozen[u as usize] || frozen[v as usize] {
            by_target.entry(shadow(v)).or_default().push((u, v, shadow(u)));
        }
    }
    let mut field = Vec::new();
    for (t, es) in by_target {
        ho.bfs_into(&[t], &mut field);
        for (u, v, su) in es {
            if field[su as usize] == u32::MAX {
                return Err(pre("unfrozen part is disconnected"));
            }
            let path = ho.geodesic_with(su, &field);
            out.insert((u, v), path.windows(2).map(|e| val(e[0], e[1])).sum());
        }
    }
    Ok(out)
}
