use clap::{Args, Parser, Subcommand};
use drill_core::drill::ledger::{constants_ledger, LedgerInputs, PhiSpec, Profile};
use drill_core::pipeline::{run_pipeline, AuditKind, AxisSpec, Bundle, DrillSpec, PipelineConfig, SpaceSpec, Stage};
use drill_core::spaces::AxisWord;
use drill_core::{Report, Verdict};
use std::path::PathBuf;
use std::process::ExitCode;

/// Workbench for horoballs, cusped spaces and unwrap-and-glue constructions.
///
/// Every command prints its reports as JSON and exits with 0 (pass),
/// 1 (fail), 2 (inconclusive) or 3 (invalid input or runtime error).
#[derive(Parser)]
#[command(name = "drillbench", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Pipeline config to start from.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Directory for the report bundle.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Constant profile: exact or surrogate.
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Space kind, e.g. tiling:7,3, tree:3, grid, cycle:10.
    #[arg(long)]
    space: Option<String>,
    #[arg(long)]
    radius: Option<u32>,
    /// Axis period as relative turns, e.g. 1,2.
    #[arg(long, value_delimiter = ',')]
    turns: Option<Vec<u32>>,
    #[arg(long)]
    axis_vertex: Option<u32>,
    #[arg(long)]
    axis_slot: Option<u32>,
    #[arg(long)]
    axis_window: Option<u32>,
    /// Tube radius K.
    #[arg(long)]
    k: Option<u32>,
    /// Shell completion scale s.
    #[arg(long)]
    s: Option<u32>,
    /// Loop scale D.
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    sigma: Option<u32>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every stage of a config.
    Run(Common),
    /// Generate a model space (DOT written to the bundle).
    GenSpace(Common),
    /// Four-point δ of the space.
    MeasureDelta {
        #[command(flatten)]
        c: Common,
        /// exact or sample:N:SEED
        #[arg(long)]
        policy: Option<String>,
    },
    /// Guessing-geodesics certificate for the cusped space.
    Certify(Common),
    /// Completed shell around the axis and its connectivity.
    Shell(Common),
    /// Glue a horoball onto the completed shell.
    Cusp(Common),
    /// Iterated unwrapping of a family of tubes.
    Drill {
        #[command(flatten)]
        c: Common,
        #[arg(long)]
        steps: Option<usize>,
        /// JSON: a list of tube indices or a full drill section.
        #[arg(long)]
        schedule: Option<PathBuf>,
        /// Cover window of each unwrap.
        #[arg(long)]
        window: Option<u32>,
    },
    /// Visual-boundary testers on far-sphere samples.
    BoundaryReport(Common),
    /// The constants ledger.
    Constants {
        #[command(flatten)]
        c: Common,
        /// JSON description of Φ (identity, affine or table).
        #[arg(long)]
        phi: Option<PathBuf>,
        /// JSON ledger inputs (δ₀, λ₀, L₀, A₀, ...).
        #[arg(long)]
        inputs: Option<PathBuf>,
    },
    /// Audits of the unwrapped space or of the tube family.
    Audit {
        #[command(flatten)]
        c: Common,
        /// balls, models, separation or vtc
        #[arg(long)]
        kind: String,
    },
}

fn read(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn base_config(c: &Common, name: &str) -> Result<PipelineConfig, String> {
    let mut cfg = match &c.input {
        Some(p) => PipelineConfig::from_json(&read(p)?).map_err(|e| e.to_string())?,
        None => PipelineConfig {
            name: name.into(),
            seed: 0,
            space: SpaceSpec { kind: "tiling:7,3".into(), radius: Some(8) },
            axis: None,
            profile: Default::default(),
            drill: None,
            boundary: None,
            audits: vec![AuditKind::Balls, AuditKind::Models, AuditKind::Vtc],
            stages: vec![],
            output: None,
        },
    };
    if let Some(s) = &c.space {
        cfg.space.kind = s.clone();
    }
    if c.radius.is_some() {
        cfg.space.radius = c.radius;
    }
    if let Some(p) = &c.profile {
        cfg.profile.kind = p.parse().map_err(|e: drill_core::Error| e.to_string())?;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if c.turns.is_some() || c.axis_vertex.is_some() || c.axis_window.is_some() || c.axis_slot.is_some() {
        let a = cfg.axis.get_or_insert(AxisSpec { word: AxisWord::Turns(vec![1, 2]), vertex: 0, slot: 0, window: 2 });
        if let Some(t) = &c.turns {
            a.word = AxisWord::Turns(t.clone());
        }
        if let Some(v) = c.axis_vertex {
            a.vertex = v;
        }
        if let Some(v) = c.axis_slot {
            a.slot = v;
        }
        if let Some(v) = c.axis_window {
            a.window = v;
        }
    }
    let o = &mut cfg.profile.overrides;
    macro_rules! over {
        ($($a:ident => $f:ident),*) => { $( if c.$a.is_some() { o.$f = c.$a; } )* };
    }
    over!(k => k, s => s, d => d, depth => depth_max, sigma => sigma, samples => samples);
    if let Some(out) = &c.out {
        cfg.output = Some(out.display().to_string());
    }
    Ok(cfg)
}

fn needs_axis(cfg: &mut PipelineConfig) {
    if cfg.axis.is_none() {
        cfg.axis = Some(AxisSpec { word: AxisWord::Turns(vec![1, 2]), vertex: 0, slot: 0, window: 2 });
    }
}

/// Prints to stdout, tolerating a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
}

fn finish(bundle: Bundle, cfg: &PipelineConfig) -> Result<Verdict, String> {
    if let Some(dir) = &cfg.output {
        bundle.write(std::path::Path::new(dir)).map_err(|e| e.to_string())?;
    }
    emit(&serde_json::to_string_pretty(&bundle).map_err(|e| e.to_string())?);
    Ok(bundle.verdict)
}

fn single(c: &Common, name: &str, stages: Vec<Stage>, axis: bool) -> Result<Verdict, String> {
    let mut cfg = base_config(c, name)?;
    if axis {
        needs_axis(&mut cfg);
    }
    cfg.stages = stages;
    let bundle = run_pipeline(&cfg).map_err(|e| e.to_string())?;
    finish(bundle, &cfg)
}

fn workers(cmd: &Cmd) -> Option<usize> {
    match cmd {
        Cmd::Run(c) | Cmd::GenSpace(c) | Cmd::Certify(c) | Cmd::Shell(c) | Cmd::Cusp(c) | Cmd::BoundaryReport(c) => c.workers,
        Cmd::MeasureDelta { c, .. } | Cmd::Drill { c, .. } | Cmd::Constants { c, .. } | Cmd::Audit { c, .. } => c.workers,
    }
}

fn run(cli: Cli) -> Result<Verdict, String> {
    if let Some(n) = workers(&cli.cmd) {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global().map_err(|e| e.to_string())?;
    }
    match cli.cmd {
        Cmd::Run(c) => {
            let cfg = base_config(&c, "run")?;
            let bundle = run_pipeline(&cfg).map_err(|e| e.to_string())?;
            finish(bundle, &cfg)
        }
        Cmd::GenSpace(c) => single(&c, "gen-space", vec![Stage::Generate], false),
        Cmd::MeasureDelta { c, policy } => {
            let mut cfg = base_config(&c, "measure-delta")?;
            if let Some(p) = policy {
                cfg.profile.overrides.delta_policy = Some(p);
            }
            cfg.stages = vec![Stage::MeasureDelta];
            let bundle = run_pipeline(&cfg).map_err(|e| e.to_string())?;
            finish(bundle, &cfg)
        }
        Cmd::Certify(c) => single(&c, "certify", vec![Stage::Certify], true),
        Cmd::Shell(c) => single(&c, "shell", vec![Stage::Shell], true),
        Cmd::Cusp(c) => single(&c, "cusp", vec![Stage::Cusp], true),
        Cmd::BoundaryReport(c) => single(&c, "boundary-report", vec![Stage::BoundaryReport], false),
        Cmd::Drill { c, steps, schedule, window } => {
            let mut cfg = base_config(&c, "drill")?;
            if let Some(p) = schedule {
                let v: serde_json::Value = serde_json::from_str(&read(&p)?).map_err(|e| format!("{}: {e}", p.display()))?;
                if v.is_array() {
                    let list: Vec<usize> = serde_json::from_value(v).map_err(|e| format!("{}: {e}", p.display()))?;
                    cfg.drill.as_mut().ok_or("the config has no drill section to schedule")?.schedule = list;
                } else {
                    cfg.drill = Some(serde_json::from_value::<DrillSpec>(v).map_err(|e| format!("{}: {e}", p.display()))?);
                }
            }
            if let Some(n) = steps {
                let d = cfg.drill.as_mut().ok_or("no drill section")?;
                if n > d.schedule.len() {
                    return Err(format!("--steps {n} exceeds the schedule length {}", d.schedule.len()));
                }
                d.schedule.truncate(n);
            }
            if window.is_some() {
                cfg.profile.overrides.cover_window = window;
            }
            cfg.stages = vec![Stage::Drill];
            let bundle = run_pipeline(&cfg).map_err(|e| e.to_string())?;
            finish(bundle, &cfg)
        }
        Cmd::Constants { c, phi, inputs } => {
            let cfg = base_config(&c, "constants")?;
            let phi = match phi {
                Some(p) => serde_json::from_str::<PhiSpec>(&read(&p)?).map_err(|e| format!("{}: {e}", p.display()))?,
                None => cfg.profile.phi.clone().unwrap_or(PhiSpec::Identity),
            };
            let inputs = match inputs {
                Some(p) => serde_json::from_str::<LedgerInputs>(&read(&p)?).map_err(|e| format!("{}: {e}", p.display()))?,
                None => cfg.profile.ledger.clone().unwrap_or_else(LedgerInputs::toy),
            };
            let profile: Profile = cfg.profile.kind;
            let ledger = constants_ledger(profile, &inputs, &|x| phi.eval(x)).map_err(|e| e.to_string())?;
            let report: Report = ledger.report();
            if let Some(dir) = &cfg.output {
                std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
                std::fs::write(std::path::Path::new(dir).join("constants.json"), serde_json::to_string_pretty(&report).map_err(|e| e.to_string())? + "\n").map_err(|e| e.to_string())?;
            }
            emit(&serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?);
            Ok(report.verdict)
        }
        Cmd::Audit { c, kind } => {
            let mut cfg = base_config(&c, "audit")?;
            let kind: AuditKind = kind.parse().map_err(|e: drill_core::Error| e.to_string())?;
            if kind != AuditKind::Separation {
                needs_axis(&mut cfg);
            }
            cfg.audits = vec![kind];
            cfg.stages = vec![Stage::Audit];
            let bundle = run_pipeline(&cfg).map_err(|e| e.to_string())?;
            finish(bundle, &cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(v) => ExitCode::from(v.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
