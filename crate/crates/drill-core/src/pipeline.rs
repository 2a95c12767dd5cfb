//! Declarative pipelines: a JSON config names a space, an axis, a constant
//! profile and a list of stages; running it yields one report per stage.

use crate::boundary::{default_resolution, linear_connectedness_estimate, spherical_connectivity_check, sphere_points, BoundarySample, PairPolicy};
use crate::drill::audits::{ball_isometry_audit, local_model_audit, standard_models, systoles, very_translating_check};
use crate::drill::family::{iterate_unwrap, separated_family_audit, FamilyReference, IterParams, SeparatedFamily};
use crate::drill::ledger::{constants_ledger, ConstantsLedger, LedgerInputs, PhiSpec, Profile};
use crate::drill::unwrap::UnwrapParams;
use crate::drill::{certify_cusp, cusp, unwrap_and_glue, CuspedSpace, UnwrappedSpace};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::half::Half;
use crate::hyperbolicity::{four_point_delta, DeltaPolicy, Q};
use crate::report::{Report, Verdict};
use crate::shells::{completed_shell, shell_connectivity_audit};
use crate::spaces::{cycle_graph, cylinder_graph, path_graph, random_connected, random_tree, trace_axis_in_patch, AxisStart, AxisWord, ModelPatch, SpaceGenerator, SpaceKind};
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Generate,
    MeasureDelta,
    Shell,
    Cusp,
    Certify,
    Unwrap,
    Audit,
    Drill,
    Constants,
    BoundaryReport,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Generate => "generate",
            Stage::MeasureDelta => "measure-delta",
            Stage::Shell => "shell",
            Stage::Cusp => "cusp",
            Stage::Certify => "certify",
            Stage::Unwrap => "unwrap",
            Stage::Audit => "audit",
            Stage::Drill => "drill",
            Stage::Constants => "constants",
            Stage::BoundaryReport => "boundary-report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `kind` is a model space (`tiling:p,q`, `tree:v`, `grid`, `free:r`,
/// `surface:g`, grown to `radius`) or a small graph (`cycle:n`, `path:n`,
/// `cylinder:n,h`, `random:n,extra`, `random-tree:n`, seeded by the config).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub kind: String,
    #[serde(default)]
    pub radius: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub word: AxisWord,
    pub vertex: u32,
    #[serde(default)]
    pub slot: u32,
    pub window: u32,
}

/// Runnable parameters. Under the surrogate profile they are taken as given;
/// under the exact profile K, s, D and σ come from the ledger.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub k: u32,
    pub s: u32,
    pub d: u32,
    pub cover_window: u32,
    pub depth_max: u32,
    pub sigma: u32,
    pub samples: usize,
    pub ball_cap: usize,
    pub theta: String,
    pub delta_policy: String,
}

impl Default for Params {
    fn default() -> Params {
        Params { k: 3, s: 3, d: 7, cover_window: 2, depth_max: 1, sigma: 1, samples: 20, ball_cap: 200, theta: "1/10000".into(), delta_policy: "exact".into() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    pub k: Option<u32>,
    pub s: Option<u32>,
    pub d: Option<u32>,
    pub cover_window: Option<u32>,
    pub depth_max: Option<u32>,
    pub sigma: Option<u32>,
    pub samples: Option<usize>,
    pub ball_cap: Option<usize>,
    pub theta: Option<String>,
    pub delta_policy: Option<String>,
}

impl ParamOverrides {
    pub fn apply(&self, p: &mut Params) {
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = &self.$f { p.$f = v.clone(); } )* };
        }
        take!(k, s, d, cover_window, depth_max, sigma, samples, ball_cap, theta, delta_policy);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub kind: Profile,
    #[serde(default)]
    pub overrides: ParamOverrides,
    #[serde(default)]
    pub ledger: Option<LedgerInputs>,
    #[serde(default)]
    pub phi: Option<PhiSpec>,
}

impl Default for ProfileSpec {
    fn default() -> ProfileSpec {
        ProfileSpec { kind: Profile::Surrogate, overrides: ParamOverrides::default(), ledger: None, phi: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrillSpec {
    pub tubes: Vec<AxisSpec>,
    pub chi: u32,
    pub basepoint: u32,
    pub schedule: Vec<usize>,
    #[serde(default = "default_stab")]
    pub stabilization_radius: u32,
    #[serde(default = "default_delta2")]
    pub delta2: u32,
    #[serde(default = "default_delta_ball")]
    pub delta_ball: usize,
}

fn default_stab() -> u32 {
    4
}
fn default_delta2() -> u32 {
    50
}
fn default_delta_ball() -> usize {
    120
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub radius: u32,
    pub points: usize,
    pub pairs: usize,
    pub delta: String,
    #[serde(default = "default_l_max")]
    pub l_max: String,
    pub sphere_radius: u32,
    pub big_delta: String,
}

fn default_l_max() -> String {
    "50".into()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditKind {
    Balls,
    Models,
    Separation,
    Vtc,
}

impl FromStr for AuditKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<AuditKind> {
        serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| field("audit kind", format!("unknown {s:?} (balls | models | separation | vtc)")))
    }
}

fn default_audits() -> Vec<AuditKind> {
    vec![AuditKind::Balls, AuditKind::Models, AuditKind::Vtc]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub name: String,
    pub seed: u64,
    pub space: SpaceSpec,
    #[serde(default)]
    pub axis: Option<AxisSpec>,
    #[serde(default)]
    pub profile: ProfileSpec,
    #[serde(default)]
    pub drill: Option<DrillSpec>,
    #[serde(default)]
    pub boundary: Option<BoundarySpec>,
    #[serde(default = "default_audits")]
    pub audits: Vec<AuditKind>,
    pub stages: Vec<Stage>,
    #[serde(default)]
    pub output: Option<String>,
}

fn field(path: &str, msg: impl fmt::Display) -> Error {
    Error::Invalid(format!("{path}: {msg}"))
}

enum Source {
    Model(SpaceKind, u32),
    Cycle(usize),
    Path(usize),
    Cylinder(usize, usize),
    Random(usize, usize),
    RandomTree(usize),
}

fn parse_source(s: &SpaceSpec) -> Result<Source> {
    let (head, tail) = s.kind.split_once(':').unwrap_or((&s.kind, ""));
    let nums = || -> Result<Vec<usize>> { tail.split(',').map(|t| t.trim().parse::<usize>().map_err(|_| field("space.kind", format!("bad number in {:?}", s.kind)))).collect() };
    let need_radius = || s.radius.ok_or_else(|| field("space.radius", "required for model spaces"));
    match head {
        "cycle" | "path" | "random-tree" => {
            let n = nums()?;
            let [n] = n.as_slice() else { return Err(field("space.kind", format!("{head} takes one number"))) };
            Ok(match head {
                "cycle" => Source::Cycle(*n),
                "path" => Source::Path(*n),
                _ => Source::RandomTree(*n),
            })
        }
        "cylinder" | "random" => {
            let n = nums()?;
            let [a, b] = n.as_slice() else { return Err(field("space.kind", format!("{head} takes two numbers"))) };
            Ok(if head == "cylinder" { Source::Cylinder(*a, *b) } else { Source::Random(*a, *b) })
        }
        _ => {
            let kind = SpaceKind::from_str(&s.kind).map_err(|e| field("space.kind", e))?;
            Ok(Source::Model(kind, need_radius()?))
        }
    }
}

impl PipelineConfig {
    /// Parses and validates; errors name the offending field.
    pub fn from_json(text: &str) -> Result<PipelineConfig> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: PipelineConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            field(if path.is_empty() || path == "." { "config" } else { &path }, e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        parse_source(&self.space)?;
        if self.stages.is_empty() {
            return Err(field("stages", "at least one stage is required"));
        }
        let p = self.params_surrogate();
        Q::from_str(&p.theta).map_err(|_| field("profile.overrides.theta", format!("not a rational: {:?}", p.theta)))?;
        DeltaPolicy::from_str(&p.delta_policy).map_err(|e| field("profile.overrides.delta_policy", e))?;
        let unwrap_audit = self.audits.iter().any(|&a| a != AuditKind::Separation);
        let needs_axis = |s: &Stage| matches!(s, Stage::Shell | Stage::Cusp | Stage::Certify | Stage::Unwrap) || (*s == Stage::Audit && unwrap_audit);
        if self.axis.is_none() {
            if let Some(s) = self.stages.iter().find(|s| needs_axis(s)) {
                return Err(field("axis", format!("stage {s} needs an axis")));
            }
        }
        let wants_family = self.stages.contains(&Stage::Drill) || (self.stages.contains(&Stage::Audit) && self.audits.contains(&AuditKind::Separation));
        if wants_family {
            let d = self.drill.as_ref().ok_or_else(|| field("drill", "drilling and the separation audit need a drill section"))?;
            if let Some(&j) = d.schedule.iter().find(|&&j| j >= d.tubes.len()) {
                return Err(field("drill.schedule", format!("tube {j} does not exist")));
            }
        }
        if self.stages.contains(&Stage::BoundaryReport) {
            let b = self.boundary.as_ref().ok_or_else(|| field("boundary", "stage boundary-report needs a boundary section"))?;
            for (name, v) in [("delta", &b.delta), ("l_max", &b.l_max), ("big_delta", &b.big_delta)] {
                Q::from_str(v).map_err(|_| field(&format!("boundary.{name}"), format!("not a rational: {v:?}")))?;
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON of the config without its output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    fn params_surrogate(&self) -> Params {
        let mut p = Params::default();
        self.profile.overrides.apply(&mut p);
        p
    }
}

fn ceil_u32(x: &crate::drill::ledger::BigQ) -> u32 {
    let c = x.ceil().to_integer();
    c.to_u32().unwrap_or(u32::MAX)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Bundle {
    pub name: String,
    pub config_hash: String,
    pub profile: Profile,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halted_at: Option<String>,
    pub reports: Vec<Report>,
    /// Extra files (DOT, CSV) keyed by file name.
    #[serde(skip)]
    pub artifacts: Vec<(String, String)>,
}

impl Bundle {
    /// Writes `NN-stage.json` per report, `bundle.json` and the artifacts.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (i, r) in self.reports.iter().enumerate() {
            let stage = r.get("stage").and_then(|s| s.as_str()).unwrap_or("report");
            std::fs::write(dir.join(format!("{:02}-{stage}.json", i + 1)), serde_json::to_string_pretty(r)? + "\n")?;
        }
        std::fs::write(dir.join("bundle.json"), serde_json::to_string_pretty(self)? + "\n")?;
        for (name, body) in &self.artifacts {
            std::fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

struct Run<'a> {
    cfg: &'a PipelineConfig,
    params: Params,
    ledger: Option<ConstantsLedger>,
    graph: Option<Graph>,
    patch: Option<crate::spaces::ModelPatch>,
    core: Option<Vec<u32>>,
    cusped: Option<CuspedSpace>,
    unwrapped: Option<UnwrappedSpace>,
    artifacts: Vec<(String, String)>,
}

/// The graph a space spec describes, with its model patch when it has one.
pub fn build_space(spec: &SpaceSpec, seed: u64) -> Result<(Graph, Option<ModelPatch>)> {
    Ok(match parse_source(spec)? {
        Source::Model(kind, r) => {
            let p = SpaceGenerator::new(kind).generate_ball(r)?;
            (p.graph.clone(), Some(p))
        }
        Source::Cycle(n) => (cycle_graph(n), None),
        Source::Path(n) => (path_graph(n), None),
        Source::Cylinder(n, h) => (cylinder_graph(n, h), None),
        Source::Random(n, extra) => (random_connected(n, extra, seed), None),
        Source::RandomTree(n) => (random_tree(n, seed), None),
    })
}

fn ledger_for(cfg: &PipelineConfig) -> Result<ConstantsLedger> {
    let inputs = cfg.profile.ledger.clone().unwrap_or_else(LedgerInputs::toy);
    let phi = cfg.profile.phi.clone().unwrap_or(PhiSpec::Identity);
    constants_ledger(cfg.profile.kind, &inputs, &|x| phi.eval(x)).map_err(|e| field("profile", e))
}

impl Run<'_> {
    fn graph(&mut self) -> Result<&Graph> {
        if self.graph.is_none() {
            let (g, patch) = build_space(&self.cfg.space, self.cfg.seed)?;
            self.patch = patch;
            self.graph = Some(g);
        }
        Ok(self.graph.as_ref().expect("set"))
    }

    fn core(&mut self) -> Result<Vec<u32>> {
        if self.core.is_none() {
            self.graph()?;
            let a = self.cfg.axis.as_ref().ok_or_else(|| field("axis", "missing"))?;
            let patch = self.patch.as_ref().ok_or_else(|| field("space.kind", "axes need a model space"))?;
            let core = trace_axis_in_patch(patch, &a.word, AxisStart { vertex: a.vertex, slot: a.slot }, a.window).map_err(|e| field("axis", e))?;
            self.core = Some(core);
        }
        Ok(self.core.clone().expect("set"))
    }

    /// Inconclusive report when the parameters do not fit the truncation.
    fn fits(&mut self) -> Result<Option<Report>> {
        let k = self.params.k;
        let radius = match &self.patch {
            Some(p) => p.radius,
            None => self.graph()?.n() as u32,
        };
        if k >= radius {
            let mut r = Report::new("truncation", Verdict::Inconclusive).with("K", k).with("patch_radius", radius);
            if let Some(l) = &self.ledger {
                r.set("R0", l.r0.to_string());
            }
            return Ok(Some(r.note("the tube radius does not fit inside the generated patch")));
        }
        Ok(None)
    }

    fn cusped(&mut self) -> Result<&CuspedSpace> {
        if self.cusped.is_none() {
            let core = self.core()?;
            let p = &self.params;
            let c = cusp(self.graph.as_ref().expect("set"), &core, p.k, p.s, p.depth_max)?;
            self.cusped = Some(c);
        }
        Ok(self.cusped.as_ref().expect("set"))
    }

    fn unwrapped(&mut self) -> Result<&UnwrappedSpace> {
        if self.unwrapped.is_none() {
            let core = self.core()?;
            let p = &self.params;
            let u = unwrap_and_glue(self.graph.as_ref().expect("set"), &core, p.k, p.s, p.d, p.cover_window, p.depth_max)?;
            self.unwrapped = Some(u);
        }
        Ok(self.unwrapped.as_ref().expect("set"))
    }

    fn family(&mut self) -> Result<SeparatedFamily> {
        let d = self.cfg.drill.clone().ok_or_else(|| field("drill", "missing"))?;
        self.graph()?;
        let patch = self.patch.as_ref().ok_or_else(|| field("space.kind", "tubes need a model space"))?;
        let mut tubes = Vec::new();
        for (i, a) in d.tubes.iter().enumerate() {
            let core = trace_axis_in_patch(patch, &a.word, AxisStart { vertex: a.vertex, slot: a.slot }, a.window).map_err(|e| field(&format!("drill.tubes[{i}]"), e))?;
            tubes.push(core);
        }
        Ok(SeparatedFamily { k: self.params.k, chi: d.chi, tubes, horoballs: vec![] })
    }

    fn audit(&mut self, kind: AuditKind) -> Result<Report> {
        let p = self.params.clone();
        let seed = self.cfg.seed;
        if kind == AuditKind::Separation {
            let fam = self.family()?;
            let g = self.graph.as_ref().expect("set");
            let core = fam.tubes.first().cloned().unwrap_or_default();
            return separated_family_audit(g, &vec![u32::MAX; g.n()], &fam, FamilyReference { space: g, core: &core, horoball: None });
        }
        self.graph()?;
        self.unwrapped()?;
        let g = self.graph.as_ref().expect("set");
        let u = self.unwrapped.as_ref().expect("set");
        Ok(match kind {
            AuditKind::Balls => {
                let (sys, _) = systoles(u);
                ball_isometry_audit(u, p.sigma, p.samples, seed).with("shell_systole", sys)
            }
            AuditKind::Models => {
                let models = standard_models(u, Some(g));
                local_model_audit(u, p.sigma, &models, true, p.samples, seed, usize::MAX)?
            }
            AuditKind::Vtc => {
                let theta = Q::from_str(&p.theta).map_err(|_| field("profile.overrides.theta", "not a rational"))?;
                very_translating_check(u, theta, &[1, -1, 2], p.samples, seed)
            }
            AuditKind::Separation => unreachable!(),
        })
    }

    fn stage(&mut self, s: Stage) -> Result<Report> {
        let p = self.params.clone();
        let seed = self.cfg.seed;
        let geometric = [Stage::Shell, Stage::Cusp, Stage::Certify, Stage::Unwrap, Stage::Audit, Stage::Drill];
        if geometric.contains(&s) {
            if let Some(r) = self.fits()? {
                return Ok(r);
            }
        }
        Ok(match s {
            Stage::Generate => {
                let g = self.graph()?.clone();
                let name = self.cfg.name.clone();
                self.artifacts.push(("space.dot".into(), g.to_dot(&name)));
                let mut r = Report::new("space", Verdict::from_bool(g.is_connected()))
                    .with("kind", &self.cfg.space.kind)
                    .with("vertices", g.n())
                    .with("edges", g.m())
                    .with("max_degree", g.max_degree());
                if let Some(pt) = &self.patch {
                    r.set("radius", pt.radius);
                    let spheres = g.distances(&pt.core)?.sphere_sizes();
                    r.set("sphere_sizes", &spheres);
                }
                r
            }
            Stage::MeasureDelta => {
                let policy = DeltaPolicy::from_str(&p.delta_policy)?;
                let g = self.graph()?;
                let est = four_point_delta(g, policy)?;
                let verdict = if est.lower_bound { Verdict::Inconclusive } else { Verdict::Pass };
                let mut r = Report::new("delta", verdict).with("delta", est.delta).with("delta_twice", est.delta.twice()).with("estimate", &est);
                if let Some(w) = est.witness {
                    r = r.witness(w);
                }
                r
            }
            Stage::Shell => {
                let core = self.core()?;
                let g = self.graph.as_ref().expect("set");
                let cs = completed_shell(g, &core, p.k, p.s)?;
                let mut r = shell_connectivity_audit(g, &cs)?;
                r.set("core", &core);
                r.set("shell_vertices", cs.graph.n());
                r.set("shell_edges", cs.graph.m());
                r
            }
            Stage::Cusp => self.cusped()?.counts_report(),
            Stage::Certify => certify_cusp(self.cusped()?, p.ball_cap)?.report,
            Stage::Unwrap => {
                let u = self.unwrapped()?;
                let st = u.structure_report()?;
                let mut r = u.summary();
                r.verdict = st.verdict;
                r.set("structure", st);
                r
            }
            Stage::Audit => {
                let mut parts = Vec::new();
                for &kind in &self.cfg.audits {
                    parts.push((kind, self.audit(kind)?));
                }
                let verdict = parts.iter().fold(Verdict::Pass, |v, (_, r)| v.and(r.verdict));
                let mut r = Report::new("unwrap-audits", verdict).with("sigma", p.sigma);
                for (k, sub) in parts {
                    r.set(serde_json::to_value(k)?.as_str().unwrap_or("audit"), sub);
                }
                r
            }
            Stage::Drill => {
                let d = self.cfg.drill.clone().ok_or_else(|| field("drill", "missing"))?;
                let fam = self.family()?;
                let ip = IterParams {
                    unwrap: UnwrapParams { k: p.k, s: p.s, d: p.d, window: p.cover_window, depth_max: p.depth_max },
                    stabilization_radius: d.stabilization_radius,
                    sigma: p.sigma,
                    model_samples: p.samples,
                    delta2: Half::from_int(d.delta2 as i64),
                    delta_ball: d.delta_ball,
                    seed,
                };
                let g = self.graph.as_ref().expect("set");
                iterate_unwrap(g, &fam, d.basepoint, &d.schedule, &ip)?.report
            }
            Stage::Constants => {
                let l = match &self.ledger {
                    Some(l) => l.clone(),
                    None => ledger_for(self.cfg)?,
                };
                l.report()
            }
            Stage::BoundaryReport => {
                let b = self.cfg.boundary.clone().ok_or_else(|| field("boundary", "missing"))?;
                let delta = Q::from_str(&b.delta).map_err(|_| field("boundary.delta", "not a rational"))?;
                let l_max = Q::from_str(&b.l_max).map_err(|_| field("boundary.l_max", "not a rational"))?;
                let big = Q::from_str(&b.big_delta).map_err(|_| field("boundary.big_delta", "not a rational"))?;
                let g = self.graph()?.clone();
                let w = self.patch.as_ref().map_or(0, |pt| pt.core[0]);
                let pts = sphere_points(&g, w, b.radius, b.points, seed)?;
                let sample = BoundarySample::from_graph(&g, w, &pts, delta)?;
                let lc = linear_connectedness_estimate(&sample, l_max, PairPolicy::Sample { n: b.pairs, seed }, default_resolution(delta))?.to_report();
                let sc = spherical_connectivity_check(&g, w, b.sphere_radius, big, Half::from_twice((delta * 2).to_integer()))?;
                let verdict = if lc.verdict == Verdict::Inconclusive { Verdict::Inconclusive } else { Verdict::Pass };
                Report::new("boundary", verdict).with("points", pts.len()).with("linear_connectedness", lc).with("spherical_connectivity", sc)
            }
        })
    }
}

/// Runs the stages in order. A failing stage halts the run; errors carry the
/// stage name.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Bundle> {
    cfg.validate()?;
    let hash = cfg.hash();
    let mut params = cfg.params_surrogate();
    let mut ledger = None;
    if cfg.profile.kind == Profile::Exact {
        let l = ledger_for(cfg)?;
        params.k = ceil_u32(&l.r0);
        params.s = ceil_u32(&l.s0);
        params.d = ceil_u32(&l.d1);
        params.sigma = ceil_u32(&l.sigma0);
        ledger = Some(l);
    }
    let mut run = Run { cfg, params: params.clone(), ledger, graph: None, patch: None, core: None, cusped: None, unwrapped: None, artifacts: Vec::new() };
    let mut reports = Vec::new();
    let mut verdict = Verdict::Pass;
    let mut halted_at = None;
    for (i, &s) in cfg.stages.iter().enumerate() {
        let mut r = run.stage(s).map_err(|e| Error::Verification(format!("stage {s}: {e}")))?;
        r.set("stage", s.as_str());
        r.set("index", i + 1);
        r.set("config_hash", &hash);
        r.set("profile", cfg.profile.kind.as_str());
        r.set("params", &params);
        verdict = verdict.and(r.verdict);
        let failed = r.verdict == Verdict::Fail;
        reports.push(r);
        if failed {
            halted_at = Some(s.as_str().to_string());
            break;
        }
    }
    Ok(Bundle { name: cfg.name.clone(), config_hash: hash, profile: cfg.profile.kind, verdict, halted_at, reports, artifacts: run.artifacts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_tree_config_measures_zero() {
        let cfg = PipelineConfig::from_json(r#"{"name":"t","seed":0,"space":{"kind":"tree:3","radius":3},"stages":["generate","measure-delta"]}"#).unwrap();
        let b = run_pipeline(&cfg).unwrap();
        assert_eq!(b.reports.len(), 2);
        assert_eq!(b.reports[1].get("delta_twice"), Some(&serde_json::json!(0)));
        assert_eq!(b.verdict, Verdict::Pass);
        assert!(b.reports.iter().all(|r| r.get("config_hash") == Some(&serde_json::json!(b.config_hash))));
    }

    #[test]
    fn schema_errors_name_the_field() {
        let e = PipelineConfig::from_json(r#"{"name":"t","seed":0,"space":{"kind":"sphere:2","radius":3},"stages":["generate"]}"#).unwrap_err();
        assert!(e.to_string().contains("space.kind"), "{e}");
        let e = PipelineConfig::from_json(r#"{"name":"t","seed":0,"space":{"kind":"grid","radius":3},"stages":["explode"]}"#).unwrap_err();
        assert!(e.to_string().contains("stages"), "{e}");
        let e = PipelineConfig::from_json(r#"{"name":"t","seed":0,"space":{"kind":"grid","radius":3},"stages":["shell"]}"#).unwrap_err();
        assert!(e.to_string().contains("axis"), "{e}");
        let e = PipelineConfig::from_json(r#"{"name":"t","seed":0,"space":{"kind":"grid","radius":3,"colour":1},"stages":["generate"]}"#).unwrap_err();
        assert!(e.to_string().contains("space"), "{e}");
    }

    #[test]
    fn hash_ignores_output() {
        let mut cfg = PipelineConfig::from_json(r#"{"name":"t","seed":0,"space":{"kind":"cycle:6"},"stages":["generate"]}"#).unwrap();
        let h = cfg.hash();
        cfg.output = Some("elsewhere".into());
        assert_eq!(cfg.hash(), h);
        cfg.seed = 1;
        assert_ne!(cfg.hash(), h);
    }

    #[test]
    fn exact_profile_is_inconclusive_on_geometry() {
        let cfg = PipelineConfig::from_json(
            r#"{"name":"x","seed":0,"space":{"kind":"tiling:7,3","radius":6},"axis":{"word":{"turns":[1,2]},"vertex":0,"window":2},
                "profile":{"kind":"exact"},"stages":["constants","cusp"]}"#,
        )
        .unwrap();
        let b = run_pipeline(&cfg).unwrap();
        assert_eq!(b.reports[0].verdict, Verdict::Pass);
        assert_eq!(b.reports[1].verdict, Verdict::Inconclusive);
        assert_eq!(b.reports[1].get("profile"), Some(&serde_json::json!("exact")));
    }
}
