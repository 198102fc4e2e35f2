//! `spf`: fit semantic progress curves and emit retiming artifacts.
//!
//! Every subcommand reads and writes explicit files. Exit codes: 0 success,
//! 2 invalid input or arguments, 3 unreadable or malformed files, 4 solver
//! failure to converge.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spf_core::artifact::{read_artifact, write_artifact};
use spf_core::fit::{fit_embeddings, linearity_score};
use spf_core::format::{read_embedding_file, write_embedding_file};
use spf_core::graph::{GraphConfig, DEFAULT_POWER, DEFAULT_SIGMA, DEFAULT_WINDOW};
use spf_core::model::{
    FitConfig, PacingTarget, Profile, RegenPlan, SegmentationResult, SpfCurve, WarpSchedule,
    DEFAULT_ALPHA_HIGH, DEFAULT_ALPHA_LOW, DEFAULT_KAPPA, DEFAULT_LAMBDA,
    DEFAULT_MAX_SOLVER_ITERATIONS, DEFAULT_SOLVER_TOLERANCE,
};
use spf_core::synth::{self, RefineConfig, RefineTrace};
use spf_core::warp::{build_schedule, ScheduleConfig, DEFAULT_COMPRESSION};
use spf_core::{plot, segment, Error};

/// Temporal frequency bands of a 128-wide attention head split 3-ways, the
/// common layout for video diffusion transformers.
const DEFAULT_BANDS: usize = 22;

#[derive(Parser)]
#[command(name = "spf", version, about = "Semantic progress analysis and retiming for video sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a progress curve to an SPF1 embedding file.
    Fit(FitArgs),
    /// Build a warped position schedule from a fitted curve.
    Warp(WarpArgs),
    /// Split a fitted curve into piecewise-linear segments.
    Segment(SegmentArgs),
    /// Turn a segmentation into a keyframe or clip regeneration plan.
    Plan(PlanArgs),
    /// Generate a synthetic rotation with known pacing.
    Synth(SynthArgs),
    /// Run the simulated measure-and-retime loop on a synthetic rotation.
    RefineSim(RefineArgs),
    /// Print the linearity score of a fitted curve, optionally with recovery metrics.
    Score(ScoreArgs),
    /// Render diagnostics as SVG.
    #[command(subcommand)]
    Plot(PlotCommand),
}

#[derive(Args)]
struct GraphArgs {
    /// Largest frame gap with a distance constraint.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    /// Gaussian locality scale, in frames.
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    sigma: f64,
    /// Ridge regularization strength.
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    /// Exponent applied to angular distances.
    #[arg(long, default_value_t = DEFAULT_POWER)]
    power: f64,
    /// Relative residual the linear solve must reach.
    #[arg(long, default_value_t = DEFAULT_SOLVER_TOLERANCE)]
    tolerance: f64,
    /// Solver iteration budget.
    #[arg(long, default_value_t = DEFAULT_MAX_SOLVER_ITERATIONS)]
    max_iterations: usize,
}

impl GraphArgs {
    fn configs(&self) -> Result<(GraphConfig, FitConfig), Error> {
        let graph = GraphConfig {
            window: self.window,
            sigma: self.sigma,
            power: self.power,
        };
        graph.validate()?;
        Ok((graph, FitConfig::new(self.lambda, self.tolerance, self.max_iterations)?))
    }
}

#[derive(Args)]
struct FitArgs {
    /// SPF1 embedding file.
    #[arg(long)]
    embeddings: PathBuf,
    #[command(flatten)]
    graph: GraphArgs,
    /// Output curve (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct WarpArgs {
    /// Fitted curve (JSON).
    #[arg(long)]
    spf: PathBuf,
    /// Desired pacing: linear, exp-rise:RATE, exp-fall:RATE or table:PATH (CSV with u,v columns).
    #[arg(long, default_value = "linear")]
    target: TargetSpec,
    /// Number of temporal frequency bands.
    #[arg(long, default_value_t = DEFAULT_BANDS)]
    bands: usize,
    /// Warp strength of the lowest-frequency band.
    #[arg(long, default_value_t = DEFAULT_ALPHA_LOW)]
    alpha_low: f64,
    /// Strength the highest bands approach.
    #[arg(long, default_value_t = DEFAULT_ALPHA_HIGH)]
    alpha_high: f64,
    /// Decay rate of strength across bands.
    #[arg(long, default_value_t = DEFAULT_KAPPA)]
    kappa: f64,
    /// Comma-separated normalized diffusion timesteps in [0, 1], 1 being pure noise.
    #[arg(long, default_value = "1.0", value_delimiter = ',')]
    steps: Vec<f64>,
    /// Temporal compression of the latent grid (frame count must be 1 mod this).
    #[arg(long, default_value_t = DEFAULT_COMPRESSION)]
    compression: usize,
    /// Output schedule (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Debug)]
enum TargetSpec {
    Linear,
    ExpRise(f64),
    ExpFall(f64),
    Table(PathBuf),
}

impl FromStr for TargetSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let rate = |r: &str| {
            r.parse::<f64>()
                .map_err(|_| format!("invalid rate {r:?} in target {s:?}"))
        };
        match s.split_once(':') {
            None if s == "linear" => Ok(TargetSpec::Linear),
            Some(("exp-rise", r)) => Ok(TargetSpec::ExpRise(rate(r)?)),
            Some(("exp-fall", r)) => Ok(TargetSpec::ExpFall(rate(r)?)),
            Some(("table", p)) if !p.is_empty() => Ok(TargetSpec::Table(PathBuf::from(p))),
            _ => Err(format!(
                "unknown target {s:?}; expected linear, exp-rise:R, exp-fall:R or table:PATH"
            )),
        }
    }
}

impl TargetSpec {
    fn resolve(&self) -> Result<PacingTarget, Error> {
        match self {
            TargetSpec::Linear => Ok(PacingTarget::Linear),
            TargetSpec::ExpRise(r) => PacingTarget::exp_rise(*r),
            TargetSpec::ExpFall(r) => PacingTarget::exp_fall(*r),
            TargetSpec::Table(p) => PacingTarget::read_table(p).map_err(at(p)),
        }
    }
}

#[derive(Args)]
struct SegmentArgs {
    /// Fitted curve (JSON); refit with --power 2 for sharper segments.
    #[arg(long)]
    spf: PathBuf,
    /// Cost per segment, or "auto" for twice the variance of the curve's increments.
    #[arg(long, default_value = "auto")]
    penalty: Penalty,
    /// Output segmentation (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug)]
enum Penalty {
    Auto,
    Fixed(f64),
}

impl FromStr for Penalty {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Penalty::Auto);
        }
        s.parse()
            .map(Penalty::Fixed)
            .map_err(|_| format!("penalty must be a number or \"auto\", got {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Keyframes,
    Clips,
}

#[derive(Args)]
struct PlanArgs {
    /// Segmentation (JSON).
    #[arg(long)]
    segments: PathBuf,
    /// Fitted curve (JSON) the segmentation was computed from.
    #[arg(long)]
    spf: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Keyframes)]
    mode: Mode,
    /// Output frame count.
    #[arg(long)]
    frames: usize,
    /// Output plan (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProfileKind {
    Constant,
    ExpRise,
    ExpFall,
}

#[derive(Args)]
struct ProfileArgs {
    /// Angular velocity profile.
    #[arg(long, value_enum, default_value_t = ProfileKind::Constant)]
    profile: ProfileKind,
    /// Rate of the exponential profiles.
    #[arg(long, default_value_t = synth::DEFAULT_RATE)]
    rate: f64,
    /// Total rotation in radians, at most pi.
    #[arg(long, default_value_t = synth::DEFAULT_TOTAL_ANGLE)]
    angle: f64,
    /// Number of frames.
    #[arg(long, default_value_t = 100)]
    frames: usize,
    /// Embedding dimension.
    #[arg(long, default_value_t = 8)]
    dim: usize,
}

impl ProfileArgs {
    fn profile(&self) -> Profile {
        match self.profile {
            ProfileKind::Constant => Profile::Constant,
            ProfileKind::ExpRise => Profile::ExpRise { rate: self.rate },
            ProfileKind::ExpFall => Profile::ExpFall { rate: self.rate },
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    /// Standard deviation of per-component Gaussian noise (0 disables it).
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Noise seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output SPF1 embedding file.
    #[arg(long)]
    out: PathBuf,
    /// Optional ground-truth angle table (CSV with k,theta columns).
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct RefineArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    /// Number of correction passes.
    #[arg(long, default_value_t = spf_core::warp::DEFAULT_REFINE_ITERATIONS)]
    iterations: usize,
    /// How closely the simulated generator follows its warp, in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    gain: f64,
    /// Fraction of each measured correction applied to the warp.
    #[arg(long, default_value_t = 1.0)]
    strength: f64,
    #[command(flatten)]
    graph: GraphArgs,
    /// Output trace (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    /// Fitted curve (JSON).
    #[arg(long)]
    spf: PathBuf,
    /// Ground-truth angle table (CSV with k,theta columns).
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PlotCommand {
    /// Fitted curves, with optional ground truth and segment fits.
    Curve {
        /// Fitted curve (JSON); repeat to overlay several.
        #[arg(long, required = true)]
        spf: Vec<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        segments: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Band positions of a warp schedule at one timestep.
    Schedule {
        #[arg(long)]
        schedule: PathBuf,
        /// Index into the schedule's timesteps.
        #[arg(long, default_value_t = 0)]
        step: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Linearity score per pass of a refinement trace.
    Trace {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Domain(_) | Error::DegenerateCurve { .. } | Error::Planning(_) => 2,
        Error::Io(_) | Error::Format(_) | Error::Json(_) => 3,
        Error::Convergence { .. } => 4,
    }
}

/// Prefixes I/O failures with the path involved.
fn at(path: &Path) -> impl FnOnce(Error) -> Error + '_ {
    move |err| match err {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| at(path)(e.into()))
}

fn load<T: spf_core::artifact::Artifact>(path: &Path) -> Result<T, Error> {
    read_artifact(path).map_err(at(path))
}

fn save<T: spf_core::artifact::Artifact>(value: &T, path: &Path) -> Result<(), Error> {
    write_artifact(value, path).map_err(at(path))
}

fn fit(args: FitArgs) -> Result<(), Error> {
    let (graph, cfg) = args.graph.configs()?;
    let seq = read_embedding_file(&args.embeddings).map_err(at(&args.embeddings))?;
    let curve = fit_embeddings(&seq, &graph, &cfg)?;
    save(&curve, &args.out)?;
    println!("linearity_score={}", curve.linearity_score());
    Ok(())
}

fn warp(args: WarpArgs) -> Result<(), Error> {
    let target = args.target.resolve()?;
    let curve: SpfCurve = load(&args.spf)?;
    let cfg = ScheduleConfig {
        band_count: args.bands,
        alpha_low: args.alpha_low,
        alpha_high: args.alpha_high,
        kappa: args.kappa,
        timesteps: args.steps,
        compression: Some(args.compression),
    };
    let schedule = build_schedule(curve.normalized(), &target, &cfg)?;
    save(&schedule, &args.out)
}

fn segment_cmd(args: SegmentArgs) -> Result<(), Error> {
    let curve: SpfCurve = load(&args.spf)?;
    let values = curve.normalized().values();
    let penalty = match args.penalty {
        Penalty::Auto => segment::auto_penalty(values)?,
        Penalty::Fixed(c) => c,
    };
    let seg = segment::segmented_least_squares(values, penalty)?;
    save(&seg, &args.out)?;
    println!("segments={}", seg.segment_count());
    Ok(())
}

fn plan(args: PlanArgs) -> Result<(), Error> {
    let seg: SegmentationResult = load(&args.segments)?;
    let curve: SpfCurve = load(&args.spf)?;
    let plan: RegenPlan = match args.mode {
        Mode::Keyframes => segment::plan_keyframes(curve.normalized(), &seg, args.frames)?,
        Mode::Clips => segment::plan_clips(curve.normalized(), &seg, args.frames)?,
    };
    save(&plan, &args.out)
}

fn synth_cmd(args: SynthArgs) -> Result<(), Error> {
    let p = &args.profile;
    let (seq, truth) = synth::generate_rotation(p.frames, p.dim, p.profile(), p.angle)?;
    let seq = if args.noise > 0.0 {
        synth::add_noise(&seq, args.noise, args.seed)?
    } else if args.noise == 0.0 {
        seq
    } else {
        return Err(Error::Domain(format!("noise level must be nonnegative, got {}", args.noise)));
    };
    write_embedding_file(&seq, &args.out).map_err(at(&args.out))?;
    if let Some(path) = &args.truth {
        synth::write_truth_csv(&truth, path).map_err(at(path))?;
    }
    Ok(())
}

fn refine_sim(args: RefineArgs) -> Result<(), Error> {
    let (graph, fit) = args.graph.configs()?;
    let p = &args.profile;
    let (_, truth) = synth::generate_rotation(p.frames, p.dim, p.profile(), p.angle)?;
    let cfg = RefineConfig {
        iterations: args.iterations,
        gain: args.gain,
        strength: args.strength,
        dim: p.dim,
        graph,
        fit,
    };
    let trace = synth::refine_loop(&truth, &cfg)?;
    let mut text = serde_json::to_string(&trace)?;
    text.push('\n');
    write_text(&args.out, &text)?;
    for (i, s) in trace.linearity_scores.iter().enumerate() {
        println!("iteration={i} linearity_score={s}");
    }
    Ok(())
}

fn score(args: ScoreArgs) -> Result<(), Error> {
    let curve: SpfCurve = load(&args.spf)?;
    println!("linearity_score={}", linearity_score(curve.normalized()));
    if let Some(path) = &args.truth {
        let truth = synth::read_truth_csv(path).map_err(at(path))?;
        let r = synth::evaluate_recovery(curve.normalized().values(), &truth)?;
        println!("rmse={}", r.rmse);
        println!("pearson={}", r.pearson);
    }
    Ok(())
}

fn plot_cmd(cmd: PlotCommand) -> Result<(), Error> {
    match cmd {
        PlotCommand::Curve {
            spf,
            truth,
            segments,
            out,
        } => {
            let curves = spf
                .iter()
                .map(|p| load::<SpfCurve>(p))
                .collect::<Result<Vec<_>, _>>()?;
            let labels: Vec<String> = spf
                .iter()
                .map(|p| p.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned()))
                .collect();
            let truth = truth
                .map(|p| synth::read_truth_csv(&p).map_err(at(&p)))
                .transpose()?;
            let seg = segments
                .map(|p| load::<SegmentationResult>(&p))
                .transpose()?;
            let labeled: Vec<_> = labels
                .iter()
                .zip(&curves)
                .map(|(l, c)| (l.as_str(), c.normalized()))
                .collect();
            write_text(&out, &plot::plot_spf(&labeled, truth.as_ref(), seg.as_ref())?)
        }
        PlotCommand::Schedule {
            schedule,
            step,
            out,
        } => {
            let s: WarpSchedule = load(&schedule)?;
            write_text(&out, &plot::plot_schedule(&s, step)?)
        }
        PlotCommand::Trace { trace, out } => {
            let text = fs::read_to_string(&trace).map_err(|e| at(&trace)(e.into()))?;
            let t: RefineTrace = serde_json::from_str(&text)?;
            write_text(&out, &plot::plot_trace(&t.linearity_scores)?)
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Fit(a) => fit(a),
        Command::Warp(a) => warp(a),
        Command::Segment(a) => segment_cmd(a),
        Command::Plan(a) => plan(a),
        Command::Synth(a) => synth_cmd(a),
        Command::RefineSim(a) => refine_sim(a),
        Command::Score(a) => score(a),
        Command::Plot(c) => plot_cmd(c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
