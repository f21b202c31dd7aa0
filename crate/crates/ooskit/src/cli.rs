//! Command-line surface: synthetic data generation, training, evaluation,
//! geometry checks, and decision-map rendering.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
//! Every JSON output embeds the resolved configuration and a timestamp;
//! rerunning a seeded command reproduces everything except the timestamp.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::detectors::{LcboEncoding, LcboScorer};
use crate::episodes::{load_dataset, sample_episode, synth_radial, EpisodeConfig};
use crate::error::Error;
use crate::geometry::{
    adjacency_witness, classify_cell, region_nonempty, viable_system, RegionStatus, ViabilityMode,
    BOUNDARY_TOL,
};
use crate::metric::{AffineHead, ClassId, Point, PrototypeContext};
use crate::metrics::{collect_scores, report_from_scores, DetectorConfig, EvalConfig};
use crate::params::ParamsDoc;
use crate::render::{render_decision_map, Bounds};
use crate::rng::{stream, Purpose};
use crate::training::{head_checkpoint, scorer_checkpoint, train, TrainConfig, TrainMode};

#[derive(Parser)]
#[command(
    name = "ooskit",
    version,
    about = "Few-shot out-of-support detection toolkit"
)]
struct Cli {
    /// Worker threads (falls back to OOSKIT_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic radial embedding dataset as CSV.
    Synth(SynthArgs),
    /// Evaluate a detector episodically and write a metrics report.
    Eval(EvalArgs),
    /// Run feature-space geometry checks and write a report.
    Geometry(GeometryArgs),
    /// Render a 2-D decision map to a binary PPM.
    Render(RenderArgs),
    /// Train the affine head (or the LCBO scorer) episodically.
    Train(TrainArgs),
}

#[derive(Args, Serialize)]
struct SynthArgs {
    #[arg(long)]
    classes: usize,
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    radius: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long = "per-class")]
    per_class: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(short = 'o', long = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum DetectorArg {
    Mindist,
    Lcbo,
    Background,
    Groos,
    CenteredGroos,
}

#[derive(Args, Serialize)]
struct EvalArgs {
    /// Embedding CSV to evaluate on.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    detector: DetectorArg,
    #[arg(long, default_value_t = 5)]
    shots: usize,
    #[arg(long, default_value_t = 5)]
    ways: usize,
    #[arg(long, default_value_t = 8)]
    qin: usize,
    #[arg(long, default_value_t = 40)]
    qout: usize,
    /// Restrict OOS queries to this many held-out classes per episode.
    #[arg(long = "oos-ways")]
    oos_ways: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Generic point: `origin` or comma-separated coordinates.
    #[arg(
        long = "gamma-oos",
        default_value = "origin",
        allow_hyphen_values = true
    )]
    gamma_oos: String,
    /// Background constant.
    #[arg(long = "M")]
    background: Option<f64>,
    /// Decision threshold, recorded in the config echo.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Affine-head checkpoint (params JSON); identity when absent.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// LCBO scorer checkpoint (params JSON); required for --detector lcbo.
    #[arg(long = "lcbo-checkpoint")]
    lcbo_checkpoint: Option<PathBuf>,
    #[arg(long = "lcbo-encoding", value_enum, default_value_t = EncodingArg::Concat)]
    lcbo_encoding: EncodingArg,
    /// Also report per-episode metric means and standard errors.
    #[arg(long = "per-episode", default_value_t = false)]
    per_episode: bool,
    /// Dump every sampled episode to a JSON file (debugging).
    #[arg(long = "dump-episodes")]
    dump_episodes: Option<PathBuf>,
    /// Output report path (stdout when absent).
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum EncodingArg {
    Concat,
    Diff,
    Both,
}

impl From<EncodingArg> for LcboEncoding {
    fn from(e: EncodingArg) -> Self {
        match e {
            EncodingArg::Concat => LcboEncoding::Concat,
            EncodingArg::Diff => LcboEncoding::Diff,
            EncodingArg::Both => LcboEncoding::Both,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum CheckArg {
    Partition,
    Viable,
    Adjacency,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ModeArg {
    Standard,
    Generic,
}

impl From<ModeArg> for ViabilityMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Standard => ViabilityMode::Standard,
            ModeArg::Generic => ViabilityMode::Generic,
        }
    }
}

#[derive(Args, Serialize)]
struct GeometryArgs {
    /// Which check to run.
    #[arg(long, value_enum)]
    check: CheckArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Generic)]
    mode: ModeArg,
    /// Prototypes inline: `x,y;x,y;...` (class ids 1..k in order).
    #[arg(long, allow_hyphen_values = true)]
    prototypes: Option<String>,
    /// JSON config file: {"prototypes": [[...], ...], "gamma_oos": [...]}.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Generic point: `origin` or comma-separated coordinates.
    #[arg(long = "gamma-oos", allow_hyphen_values = true)]
    gamma_oos: Option<String>,
    /// Sample count for the partition check.
    #[arg(long, default_value_t = 10000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct RenderArgs {
    #[arg(long, allow_hyphen_values = true)]
    prototypes: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "gamma-oos", allow_hyphen_values = true)]
    gamma_oos: Option<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::Generic)]
    mode: ModeArg,
    /// View rectangle `xmin,ymin,xmax,ymax`; auto-fit when absent.
    #[arg(long, allow_hyphen_values = true)]
    bounds: Option<String>,
    #[arg(long, default_value_t = 512)]
    width: usize,
    #[arg(long, default_value_t = 512)]
    height: usize,
    /// Output PPM path.
    #[arg(short = 'o', long = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum TrainModeArg {
    Standard,
    Groos,
    Background,
    Lcbo,
}

impl From<TrainModeArg> for TrainMode {
    fn from(m: TrainModeArg) -> Self {
        match m {
            TrainModeArg::Standard => TrainMode::Standard,
            TrainModeArg::Groos => TrainMode::Groos,
            TrainModeArg::Background => TrainMode::Background,
            TrainModeArg::Lcbo => TrainMode::Lcbo,
        }
    }
}

#[derive(Args, Serialize)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    mode: TrainModeArg,
    #[arg(long, default_value_t = 2000)]
    episodes: usize,
    #[arg(long, default_value_t = 5)]
    shots: usize,
    #[arg(long, default_value_t = 5)]
    ways: usize,
    #[arg(long, default_value_t = 8)]
    qin: usize,
    #[arg(long, default_value_t = 40)]
    qout: usize,
    #[arg(long = "oos-ways")]
    oos_ways: Option<usize>,
    #[arg(long, default_value_t = 1e-5)]
    lr: f64,
    #[arg(long = "weight-decay", default_value_t = 5e-5)]
    weight_decay: f64,
    #[arg(long, default_value_t = 0.9)]
    beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    beta2: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(
        long = "gamma-oos",
        default_value = "origin",
        allow_hyphen_values = true
    )]
    gamma_oos: String,
    #[arg(long = "M")]
    background: Option<f64>,
    /// Ablation: stop gradients at the prototypes.
    #[arg(long = "detach-prototypes", default_value_t = false)]
    detach_prototypes: bool,
    /// LCBO hidden widths, comma-separated (input/output added
    /// automatically), e.g. `64` or `64,32`.
    #[arg(long = "lcbo-hidden")]
    lcbo_hidden: Option<String>,
    #[arg(long = "lcbo-encoding", value_enum, default_value_t = EncodingArg::Concat)]
    lcbo_encoding: EncodingArg,
    /// Continue from an existing head checkpoint.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Output checkpoint path.
    #[arg(short = 'o', long = "out")]
    out: PathBuf,
    /// Loss curve CSV path (`episode,loss`).
    #[arg(long = "loss-curve")]
    loss_curve: Option<PathBuf>,
}

/// Error carrying the process exit code.
enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::DuplicatePrototypes(..)
            | Error::InvalidThreshold(_)
            | Error::InvalidBackground(_)
            | Error::MissingGeneric
            | Error::MissingBackground => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Entry point used by the binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };

    let threads = cli.threads.or_else(|| {
        std::env::var("OOSKIT_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    let run = || match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Geometry(args) => cmd_geometry(args),
        Command::Render(args) => cmd_render(args),
        Command::Train(args) => cmd_train(args),
    };
    let outcome = match threads {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(e) => Err(CliError::Runtime(format!("thread pool: {e}"))),
        },
        _ => run(),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Prints to stdout, treating a closed pipe as a normal early exit.
fn print_stdout(text: &str) -> CliResult<()> {
    use std::io::Write;
    match writeln!(std::io::stdout(), "{text}") {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(CliError::Runtime(e.to_string())),
    }
}

fn write_json(out: Option<&Path>, value: &serde_json::Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display()))),
        None => print_stdout(&text),
    }
}

/// Per-axis sampling range covering every slot point with a margin of
/// twice the largest axis spread; works in any dimension.
fn sampling_box(ctx: &PrototypeContext) -> Vec<(f64, f64)> {
    let points: Vec<&Point> = ctx.prototypes().values().chain(ctx.generic()).collect();
    let dim = ctx.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in &points {
        for (axis, &c) in p.coords().iter().enumerate() {
            lo[axis] = lo[axis].min(c);
            hi[axis] = hi[axis].max(c);
        }
    }
    let spread = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| h - l)
        .fold(1e-6_f64, f64::max);
    lo.into_iter()
        .zip(hi)
        .map(|(l, h)| (l - 2.0 * spread, h + 2.0 * spread))
        .collect()
}

fn parse_vector(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("not a float: '{t}'")))
        })
        .collect()
}

fn parse_gamma_oos(text: &str, dim: usize) -> CliResult<Point> {
    if text == "origin" {
        return Ok(Point::origin(dim));
    }
    let coords = parse_vector(text)?;
    if coords.len() != dim {
        return Err(CliError::Usage(format!(
            "gamma-oos has {} coordinates, expected {dim}",
            coords.len()
        )));
    }
    Point::new(coords).map_err(|e| CliError::Usage(e.to_string()))
}

fn cmd_synth(args: SynthArgs) -> CliResult<()> {
    let ds = synth_radial(
        args.classes,
        args.dim,
        args.radius,
        args.sigma,
        args.per_class,
        args.seed,
    )?;
    ds.save(&args.out)?;
    let config = serde_json::to_value(&args).map_err(|e| CliError::Runtime(e.to_string()))?;
    print_stdout(
        &json!({
            "written": args.out.display().to_string(),
            "records": ds.len(),
            "classes": ds.num_classes(),
            "dim": ds.dim(),
            "config": config,
        })
        .to_string(),
    )
}

fn load_head(checkpoint: Option<&Path>, dim: usize) -> CliResult<AffineHead> {
    match checkpoint {
        None => Ok(AffineHead::identity(dim)),
        Some(path) => {
            let head = ParamsDoc::load(path)?.as_affine_head()?;
            if head.dim() != dim {
                return Err(CliError::Usage(format!(
                    "checkpoint dimension {} does not match dataset dimension {dim}",
                    head.dim()
                )));
            }
            Ok(head)
        }
    }
}

fn cmd_eval(args: EvalArgs) -> CliResult<()> {
    if args.qout == 0 {
        return Err(CliError::Usage(
            "qout must be positive: AUROC/AUPR need OOS queries as positives".into(),
        ));
    }
    let ds = load_dataset(&args.data)?;
    let head = load_head(args.checkpoint.as_deref(), ds.dim())?;
    let detector = match args.detector {
        DetectorArg::Mindist => DetectorConfig::MinDist,
        DetectorArg::Groos => DetectorConfig::Groos {
            generic: parse_gamma_oos(&args.gamma_oos, ds.dim())?,
        },
        DetectorArg::CenteredGroos => DetectorConfig::CenteredGroos,
        DetectorArg::Background => DetectorConfig::Background {
            background: args
                .background
                .ok_or_else(|| CliError::Usage("--detector background requires --M".into()))?,
        },
        DetectorArg::Lcbo => {
            let path = args.lcbo_checkpoint.as_deref().ok_or_else(|| {
                CliError::Usage("--detector lcbo requires --lcbo-checkpoint".into())
            })?;
            let scorer = LcboScorer::from_doc(&ParamsDoc::load(path)?, args.lcbo_encoding.into())?;
            DetectorConfig::Lcbo { scorer }
        }
    };
    let cfg = EvalConfig {
        episodes: args.episodes,
        shape: EpisodeConfig {
            shots: args.shots,
            ways: args.ways,
            queries_per_class: args.qin,
            oos_queries: args.qout,
            oos_ways: args.oos_ways,
        },
        seed: args.seed,
        per_episode: args.per_episode,
    };

    if let Some(path) = &args.dump_episodes {
        let episodes: Vec<_> = (0..cfg.episodes)
            .map(|e| sample_episode(&ds, &cfg.shape, cfg.seed, e as u64))
            .collect::<Result<_, _>>()?;
        let text = serde_json::to_string_pretty(&episodes)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| CliError::Runtime(e.to_string()))?;
    }

    let scored = collect_scores(&ds, &detector, &head, &cfg)?;
    let report = report_from_scores(&scored, &detector, &cfg)?;
    let mut value = serde_json::to_value(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
    let config = serde_json::to_value(&args).map_err(|e| CliError::Runtime(e.to_string()))?;
    value["config"] = config;
    value["timestamp"] = json!(timestamp());
    write_json(args.out.as_deref(), &value)
}

/// Prototype configuration file schema.
#[derive(serde::Deserialize)]
struct GeometryFile {
    prototypes: Vec<Vec<f64>>,
    #[serde(default)]
    gamma_oos: Option<Vec<f64>>,
}

fn parse_prototypes(
    inline: Option<&str>,
    file: Option<&Path>,
    gamma_oos: Option<&str>,
    mode: ViabilityMode,
) -> CliResult<PrototypeContext> {
    let (coords, file_gamma): (Vec<Vec<f64>>, Option<Vec<f64>>) = match (inline, file) {
        (Some(text), None) => (
            text.split(';')
                .map(parse_vector)
                .collect::<CliResult<Vec<_>>>()?,
            None,
        ),
        (None, Some(path)) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::Runtime(e.to_string()))?;
            let parsed: GeometryFile =
                serde_json::from_str(&text).map_err(|e| CliError::Usage(e.to_string()))?;
            (parsed.prototypes, parsed.gamma_oos)
        }
        _ => {
            return Err(CliError::Usage(
                "provide exactly one of --prototypes or --config".into(),
            ))
        }
    };
    if coords.is_empty() {
        return Err(CliError::Usage("no prototypes given".into()));
    }
    let dim = coords[0].len();
    let mut prototypes: BTreeMap<ClassId, Point> = BTreeMap::new();
    for (i, c) in coords.into_iter().enumerate() {
        let point = Point::new(c).map_err(|e| CliError::Usage(e.to_string()))?;
        if point.dim() != dim {
            return Err(CliError::Usage("prototypes must share a dimension".into()));
        }
        prototypes.insert(i + 1, point);
    }
    let mut ctx = PrototypeContext::new(prototypes).map_err(|e| CliError::Usage(e.to_string()))?;
    if matches!(mode, ViabilityMode::Generic) {
        let generic = match (gamma_oos, file_gamma) {
            (Some(text), _) => parse_gamma_oos(text, dim)?,
            (None, Some(coords)) => {
                Point::new(coords).map_err(|e| CliError::Usage(e.to_string()))?
            }
            (None, None) => Point::origin(dim),
        };
        ctx = ctx
            .with_generic(generic)
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    // Surface duplicate prototypes as a usage error up front.
    classify_cell(&Point::origin(dim), &ctx, BOUNDARY_TOL).map_err(CliError::from)?;
    Ok(ctx)
}

fn cmd_geometry(args: GeometryArgs) -> CliResult<()> {
    let mode: ViabilityMode = args.mode.into();
    let ctx = parse_prototypes(
        args.prototypes.as_deref(),
        args.config.as_deref(),
        args.gamma_oos.as_deref(),
        mode,
    )?;
    let eff = crate::render::effective_context(&ctx, mode)?;

    let body = match args.check {
        CheckArg::Viable => {
            let mut results = Vec::new();
            let mut all_checked = true;
            for class in ctx.class_ids() {
                let sys = viable_system(class, &ctx, mode)?;
                match region_nonempty(&sys)? {
                    RegionStatus::Nonempty(witness) => {
                        let ok = sys.contains(witness.coords());
                        all_checked &= ok;
                        results.push(json!({
                            "class": class,
                            "status": "nonempty",
                            "witness": witness.coords(),
                            "witness_satisfies_system": ok,
                            "inequalities": sys.constraints.len(),
                        }));
                    }
                    RegionStatus::Empty => results.push(json!({
                        "class": class,
                        "status": "empty",
                        "inequalities": sys.constraints.len(),
                    })),
                }
            }
            json!({ "check": "viable", "results": results, "passed": all_checked })
        }
        CheckArg::Partition => {
            let box_axes = sampling_box(&eff);
            let mut rng = stream(args.seed, Purpose::GeometryCheck, 0);
            use rand::Rng;
            let mut boundary_hits = 0usize;
            let mut unique = 0usize;
            for _ in 0..args.samples {
                let coords: Vec<f64> = box_axes
                    .iter()
                    .map(|&(lo, hi)| rng.random_range(lo..hi))
                    .collect();
                let label = classify_cell(&Point::new(coords)?, &eff, BOUNDARY_TOL)?;
                if label.on_boundary {
                    boundary_hits += 1;
                } else {
                    unique += 1;
                }
            }
            json!({
                "check": "partition",
                "samples": args.samples,
                "uniquely_classified": unique,
                "boundary_hits": boundary_hits,
                "passed": unique == args.samples,
            })
        }
        CheckArg::Adjacency => {
            if matches!(mode, ViabilityMode::Standard) {
                return Err(CliError::Usage(
                    "adjacency is defined for the generic-point problem; use --mode generic".into(),
                ));
            }
            let mut results = Vec::new();
            let mut passed = true;
            for class in ctx.class_ids() {
                let sys = viable_system(class, &ctx, mode)?;
                match region_nonempty(&sys)? {
                    RegionStatus::Empty => results.push(json!({
                        "class": class,
                        "status": "empty",
                    })),
                    RegionStatus::Nonempty(witness) => {
                        match adjacency_witness(&witness, class, &ctx) {
                            Ok(w) => results.push(json!({
                                "class": class,
                                "status": "nonempty",
                                "viable_witness": witness.coords(),
                                "boundary_point": w.boundary_point.coords(),
                                "delta": w.delta,
                                "adjacent": true,
                            })),
                            Err(e) => {
                                passed = false;
                                results.push(json!({
                                    "class": class,
                                    "status": "nonempty",
                                    "viable_witness": witness.coords(),
                                    "adjacent": false,
                                    "error": e.to_string(),
                                }));
                            }
                        }
                    }
                }
            }
            json!({ "check": "adjacency", "results": results, "passed": passed })
        }
    };

    let mut value = body;
    value["prototypes"] = json!(ctx
        .prototypes()
        .iter()
        .map(|(c, p)| (c.to_string(), p.coords().to_vec()))
        .collect::<BTreeMap<String, Vec<f64>>>());
    if let Some(g) = ctx.generic() {
        value["gamma_oos"] = json!(g.coords());
    }
    value["mode"] = serde_json::to_value(mode).map_err(|e| CliError::Runtime(e.to_string()))?;
    let config = serde_json::to_value(&args).map_err(|e| CliError::Runtime(e.to_string()))?;
    value["config"] = config;
    value["timestamp"] = json!(timestamp());
    write_json(args.out.as_deref(), &value)
}

fn cmd_render(args: RenderArgs) -> CliResult<()> {
    let mode: ViabilityMode = args.mode.into();
    let ctx = parse_prototypes(
        args.prototypes.as_deref(),
        args.config.as_deref(),
        args.gamma_oos.as_deref(),
        mode,
    )?;
    if ctx.dim() != 2 {
        return Err(CliError::Usage(format!(
            "render needs 2-D prototypes, got dimension {}",
            ctx.dim()
        )));
    }
    let bounds = match &args.bounds {
        Some(text) => {
            let v = parse_vector(text)?;
            if v.len() != 4 {
                return Err(CliError::Usage("bounds must be xmin,ymin,xmax,ymax".into()));
            }
            Bounds::new(v[0], v[1], v[2], v[3]).map_err(|e| CliError::Usage(e.to_string()))?
        }
        None => Bounds::covering(&ctx, 1.0).map_err(|e| CliError::Usage(e.to_string()))?,
    };
    let image = render_decision_map(&ctx, mode, &bounds, args.width, args.height)?;
    image.write_ppm(&args.out)?;
    let config = serde_json::to_value(&args).map_err(|e| CliError::Runtime(e.to_string()))?;
    print_stdout(
        &json!({
            "written": args.out.display().to_string(),
            "width": image.width,
            "height": image.height,
            "config": config,
        })
        .to_string(),
    )
}

fn cmd_train(args: TrainArgs) -> CliResult<()> {
    let ds = load_dataset(&args.data)?;
    let mode: TrainMode = args.mode.into();
    let mut cfg = TrainConfig::new(mode, args.episodes, args.seed);
    cfg.shape = EpisodeConfig {
        shots: args.shots,
        ways: args.ways,
        queries_per_class: args.qin,
        oos_queries: args.qout,
        oos_ways: args.oos_ways,
    };
    cfg.adam.lr = args.lr;
    cfg.adam.weight_decay = args.weight_decay;
    cfg.adam.beta1 = args.beta1;
    cfg.adam.beta2 = args.beta2;
    cfg.detach_prototypes = args.detach_prototypes;
    cfg.lcbo_encoding = args.lcbo_encoding.into();
    if matches!(mode, TrainMode::Groos) {
        cfg.generic = Some(parse_gamma_oos(&args.gamma_oos, ds.dim())?);
    }
    if matches!(mode, TrainMode::Background) {
        cfg.background = Some(
            args.background
                .ok_or_else(|| CliError::Usage("--mode background requires --M".into()))?,
        );
    }
    if let Some(hidden) = &args.lcbo_hidden {
        let mut widths = vec![cfg.lcbo_encoding.input_width(ds.dim())];
        for h in hidden.split(',') {
            widths.push(
                h.trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("bad hidden width '{h}'")))?,
            );
        }
        widths.push(1);
        cfg.lcbo_widths = Some(widths);
    }
    if let Some(path) = &args.checkpoint {
        cfg.init_head = Some(load_head(Some(path), ds.dim())?);
    }

    let outcome = train(&ds, &cfg)?;

    if let Some(path) = &args.loss_curve {
        let mut text = String::from("episode,loss\n");
        for (e, loss) in outcome.losses.iter().enumerate() {
            text.push_str(&format!("{e},{loss}\n"));
        }
        std::fs::write(path, text).map_err(|e| CliError::Runtime(e.to_string()))?;
    }

    let doc = match (&outcome.scorer, mode) {
        (Some(scorer), TrainMode::Lcbo) => {
            scorer_checkpoint(scorer, Some(outcome.optimizer.clone()))
        }
        _ => head_checkpoint(&outcome.head, Some(outcome.optimizer.clone())),
    };
    let mut value = serde_json::to_value(&doc).map_err(|e| CliError::Runtime(e.to_string()))?;
    let config = serde_json::to_value(&args).map_err(|e| CliError::Runtime(e.to_string()))?;
    value["config"] = config;
    std::fs::write(
        &args.out,
        serde_json::to_string_pretty(&value).map_err(|e| CliError::Runtime(e.to_string()))? + "\n",
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;

    let first = outcome.losses.first().copied().unwrap_or(f64::NAN);
    let last = outcome.losses.last().copied().unwrap_or(f64::NAN);
    print_stdout(
        &json!({
            "written": args.out.display().to_string(),
            "episodes": outcome.losses.len(),
            "first_loss": first,
            "final_loss": last,
        })
        .to_string(),
    )
}
