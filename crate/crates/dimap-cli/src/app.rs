//! Argument grammar, subcommand dispatch, and exit-code policy.
//!
//! Exit codes: 0 on success, 1 on validation failure (bad files, flags,
//! or parameters, reported as one line on standard error), 2 on solver
//! failure. The environment variable `ARRANGE_THREADS` caps how many
//! worker threads multi-trial solves use (default 1); threading never
//! changes the output.

use std::env;
use std::fmt::Write as _;
use std::io::Read as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use dimap::bounded::place_bounded_opts;
use dimap::exact::solve_exact;
use dimap::generators::{
    gen_3partition_bounded, gen_3partition_unbounded, gen_bounded_gap, gen_unbounded_gap,
    HardnessParams,
};
use dimap::lp::solve_lp_default;
use dimap::model::{GridMode, Instance, Placement};
use dimap::unbounded::{place_eps_violation_opts, place_unbounded_opts, TrialOpts};

use crate::fmt;
use crate::svg;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: malformed files, incompatible flags, invalid parameters.
    #[error("{0}")]
    Validation(String),
    /// The pipeline itself failed (hard size caps, no progress, budget).
    #[error("{0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Solver(_) => 2,
        }
    }
}

impl From<fmt::FormatError> for CliError {
    fn from(e: fmt::FormatError) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "dimap", version, about = "Arrangement solver for pinned graphs on grids")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Solve an instance; write the instance back followed by the placement.
    Solve(SolveArgs),
    /// Solve only the distance relaxation; write its objective and table.
    Lp(IoArgs),
    /// Exhaustively find the true optimum of a tiny instance.
    Exact(ExactArgs),
    /// Generate a benchmark-family instance.
    Gen(GenArgs),
    /// Evaluate the cost of a placement against its instance.
    Eval(IoArgs),
    /// Sweep a gap family and write one record per instance.
    Bench(BenchArgs),
    /// Render an instance + placement stream as a static SVG.
    Plot(PlotArgs),
}

#[derive(Args)]
pub struct IoArgs {
    /// Input path ('-' or omitted: standard input).
    #[arg(long = "in", value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Output path ('-' or omitted: standard output).
    #[arg(long = "out", value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
pub enum Mode {
    Unbounded,
    Bounded,
    Eps,
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Unbounded => "unbounded",
        Mode::Bounded => "bounded",
        Mode::Eps => "eps",
    }
}

fn grid_name(grid: GridMode) -> &'static str {
    match grid {
        GridMode::Unbounded => "unbounded",
        GridMode::Bounded { .. } => "bounded",
        GridMode::EpsViolation { .. } => "eps",
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
pub enum Pipeline {
    /// Cluster through the random tree embedding.
    Hst,
    /// Cluster with the direct random-radius partition.
    Ckr,
}

#[derive(Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Which grid the placement must live on; must match the instance.
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Box inflation for eps mode, in (0, 1/2]. Required when the input
    /// declares an unbounded grid; overrides the value in an eps grid.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Master seed; trial i derives its own seed as master + i.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of randomized trials; the cheapest placement wins.
    #[arg(long, default_value_t = 8)]
    pub trials: usize,
    /// Clustering pipeline (unbounded mode only; the others are fixed).
    #[arg(long, value_enum, default_value_t = Pipeline::Hst)]
    pub pipeline: Pipeline,
}

#[derive(Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Largest number of candidate cells the enumeration may consider.
    #[arg(long = "cell-budget", default_value_t = 65536)]
    pub cell_budget: usize,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
pub enum Family {
    /// Complete pinned grid with two free corners and one unit edge.
    #[value(name = "bounded-gap")]
    BoundedGap,
    /// Matched net pairs with weak anchors on an unbounded grid.
    #[value(name = "unbounded-gap")]
    UnboundedGap,
    /// Star packing into carved grid holes (bounded).
    #[value(name = "3part")]
    ThreePart,
    /// The star-packing instance padded into a large pinned frame.
    #[value(name = "3part-unbounded")]
    ThreePartUnbounded,
}

#[derive(Args)]
pub struct GenArgs {
    /// Output path ('-' or omitted: standard output).
    #[arg(long = "out", value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub family: Family,
    /// Vertex-count parameter of the gap families.
    #[arg(long)]
    pub n: Option<usize>,
    /// Net spacing of the unbounded gap family (default 2).
    #[arg(long)]
    pub t: Option<i64>,
    /// Anchor-edge weight of the unbounded gap family (default 1/t).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Comma-separated star sizes for the partition families.
    #[arg(long)]
    pub a: Option<String>,
    /// Per-group sum B of the partition families.
    #[arg(long)]
    pub b: Option<u64>,
    /// Grid side of the partition families.
    #[arg(long)]
    pub side: Option<i64>,
    /// Net spacing of the partition families.
    #[arg(long)]
    pub spacing: Option<i64>,
}

#[derive(Args)]
pub struct BenchArgs {
    /// Output path ('-' or omitted: standard output).
    #[arg(long = "out", value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Family to sweep (the gap families; partition instances have no
    /// size axis — generate those with 'gen' and solve them directly).
    #[arg(long, value_enum)]
    pub family: Family,
    /// Comma-separated sizes (default: bounded-gap 16,64,144;
    /// unbounded-gap 16).
    #[arg(long)]
    pub sizes: Option<String>,
    /// Net spacing for unbounded-gap instances.
    #[arg(long, default_value_t = 2)]
    pub t: i64,
    /// Anchor weight for unbounded-gap instances (default 1/t).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Placement mode (default: the family's natural grid).
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Box inflation when benching in eps mode.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub trials: usize,
    #[arg(long, value_enum, default_value_t = Pipeline::Hst)]
    pub pipeline: Pipeline,
    /// Also run the exhaustive oracle; its optimum is included whenever
    /// the enumeration fits the default cell budget.
    #[arg(long, default_value_t = false)]
    pub exact: bool,
}

#[derive(Args)]
pub struct PlotArgs {
    /// Input stream holding the instance and its placement
    /// ('-' or omitted: standard input).
    #[arg(long = "in", value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Path of the SVG file to write.
    #[arg(long, value_name = "PATH")]
    pub svg: PathBuf,
}

/// Parse the process arguments, dispatch, report errors; returns the
/// process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{err}");
                    0
                }
                _ => {
                    let rendered = err.render().to_string();
                    let first = rendered
                        .lines()
                        .find(|l| !l.trim().is_empty())
                        .unwrap_or("invalid arguments");
                    eprintln!("{}", first.trim());
                    1
                }
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{err}");
            err.exit_code()
        }
    }
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Lp(a) => cmd_lp(a),
        Cmd::Exact(a) => cmd_exact(a),
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Plot(a) => cmd_plot(a),
    }
}

fn read_input(path: &Option<PathBuf>) -> Result<String, CliError> {
    match path {
        Some(p) if p.as_os_str() != "-" => std::fs::read_to_string(p)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", p.display()))),
        _ => {
            let mut text = String::new();
            std::io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| CliError::Validation(format!("cannot read standard input: {e}")))?;
            Ok(text)
        }
    }
}

fn write_output(path: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) if p.as_os_str() != "-" => std::fs::write(p, text)
            .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", p.display()))),
        _ => {
            print!("{text}");
            Ok(())
        }
    }
}

fn worker_threads(trials: usize) -> usize {
    let cap = env::var("ARRANGE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or(1);
    cap.min(trials.max(1))
}

/// Check the instance grid against the requested mode, re-wrapping an
/// unbounded grid when an explicit --eps asks for the inflated box.
fn prepare(inst: Instance, mode: Mode, eps_flag: Option<f64>) -> Result<Instance, CliError> {
    let mismatch = |grid| {
        CliError::Validation(format!(
            "--mode {} does not match the instance grid ({})",
            mode_name(mode),
            grid_name(grid),
        ))
    };
    match mode {
        Mode::Bounded => match inst.grid {
            GridMode::Bounded { .. } => Ok(inst),
            g => Err(mismatch(g)),
        },
        Mode::Unbounded => match inst.grid {
            GridMode::Unbounded => Ok(inst),
            g => Err(mismatch(g)),
        },
        Mode::Eps => {
            let eps = match (eps_flag, inst.grid) {
                (Some(e), GridMode::EpsViolation { .. } | GridMode::Unbounded) => e,
                (None, GridMode::EpsViolation { eps }) => eps,
                (None, GridMode::Unbounded) => {
                    return Err(CliError::Validation(
                        "--eps is required to solve an unbounded instance in eps mode".into(),
                    ))
                }
                (_, g @ GridMode::Bounded { .. }) => return Err(mismatch(g)),
            };
            if !(eps > 0.0 && eps <= 0.5) {
                return Err(CliError::Validation(format!("--eps must lie in (0, 1/2], got {eps}")));
            }
            let out = Instance { grid: GridMode::EpsViolation { eps }, ..inst };
            out.validate().map_err(|e| CliError::Validation(e.to_string()))?;
            Ok(out)
        }
    }
}

/// Run the placement pipeline matching `mode` on an already-prepared
/// instance.
fn solve_prepared(
    inst: &Instance,
    mode: Mode,
    seed: u64,
    trials: usize,
    pipeline: Pipeline,
) -> Result<Placement, CliError> {
    let opts = TrialOpts {
        trials,
        use_ckr: pipeline == Pipeline::Ckr,
        threads: worker_threads(trials),
    };
    let res = match mode {
        Mode::Bounded => place_bounded_opts(inst, seed, &opts),
        Mode::Unbounded => place_unbounded_opts(inst, seed, &opts),
        Mode::Eps => {
            let GridMode::EpsViolation { eps } = inst.grid else {
                unreachable!("prepare() pinned the grid mode")
            };
            place_eps_violation_opts(inst, eps, seed, &opts)
        }
    };
    res.map_err(|e| CliError::Solver(e.to_string()))
}

fn cmd_solve(a: SolveArgs) -> Result<(), CliError> {
    let stream = fmt::parse_stream(&read_input(&a.io.input)?)?;
    let inst = prepare(stream.only_instance()?.clone(), a.mode, a.eps)?;
    let placement = solve_prepared(&inst, a.mode, a.seed, a.trials, a.pipeline)?;
    let text = format!(
        "{}\n{}",
        fmt::serialize_instance(&inst),
        fmt::serialize_placement(&placement.positions),
    );
    write_output(&a.io.output, &text)
}

fn cmd_lp(a: IoArgs) -> Result<(), CliError> {
    let stream = fmt::parse_stream(&read_input(&a.input)?)?;
    let inst = stream.only_instance()?;
    let (metric, report) =
        solve_lp_default(inst).map_err(|e| CliError::Solver(e.to_string()))?;
    let mut text = String::new();
    writeln!(text, "# objective {}", metric.objective).unwrap();
    writeln!(text, "# rounds {}", report.rounds).unwrap();
    writeln!(text, "# final-violation {}", report.final_violation).unwrap();
    text.push_str(&fmt::serialize_metric(&metric.table));
    write_output(&a.output, &text)
}

fn cmd_exact(a: ExactArgs) -> Result<(), CliError> {
    let stream = fmt::parse_stream(&read_input(&a.io.input)?)?;
    let inst = stream.only_instance()?;
    let res = solve_exact(inst, a.cell_budget).map_err(|e| CliError::Solver(e.to_string()))?;
    let mut text = String::new();
    writeln!(text, "# optimum {}", res.optimum).unwrap();
    writeln!(text, "# enumerated {}", res.enumerated).unwrap();
    text.push_str(&fmt::serialize_instance(inst));
    text.push('\n');
    text.push_str(&fmt::serialize_placement(&res.argmin.positions));
    write_output(&a.io.output, &text)
}

fn parse_star_sizes(s: &str) -> Result<Vec<u64>, CliError> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<u64>()
                .map_err(|_| CliError::Validation(format!("cannot parse star size '{x}'")))
        })
        .collect()
}

fn parse_sizes(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Validation(format!("cannot parse size '{x}'")))
        })
        .collect()
}

fn require_n(n: Option<usize>, family: &str) -> Result<usize, CliError> {
    n.ok_or_else(|| CliError::Validation(format!("--n is required for {family}")))
}

fn build_family(a: &GenArgs) -> Result<Instance, CliError> {
    let gen_err = |e: dimap::generators::GenError| CliError::Validation(e.to_string());
    match a.family {
        Family::BoundedGap => {
            let n = require_n(a.n, "bounded-gap")?;
            Ok(gen_bounded_gap(n).map_err(gen_err)?.instance)
        }
        Family::UnboundedGap => {
            let n = require_n(a.n, "unbounded-gap")?;
            let t = a.t.unwrap_or(2);
            let alpha = a.alpha.unwrap_or(1.0 / t.max(1) as f64);
            Ok(gen_unbounded_gap(n, t, alpha).map_err(gen_err)?.instance)
        }
        Family::ThreePart => {
            let params = HardnessParams {
                a: a.a.as_deref().map(parse_star_sizes).transpose()?.unwrap_or_else(|| vec![2; 6]),
                b: a.b.unwrap_or(6),
                side: a.side.unwrap_or(25),
                spacing: a.spacing.unwrap_or(8),
            };
            Ok(gen_3partition_bounded(&params).map_err(gen_err)?.0)
        }
        Family::ThreePartUnbounded => {
            let params = HardnessParams {
                a: a.a.as_deref().map(parse_star_sizes).transpose()?.unwrap_or_else(|| vec![2; 3]),
                b: a.b.unwrap_or(6),
                side: a.side.unwrap_or(5),
                spacing: a.spacing.unwrap_or(2),
            };
            Ok(gen_3partition_unbounded(&params).map_err(gen_err)?.0)
        }
    }
}

fn cmd_gen(a: GenArgs) -> Result<(), CliError> {
    let inst = build_family(&a)?;
    write_output(&a.output, &fmt::serialize_instance(&inst))
}

fn cmd_eval(a: IoArgs) -> Result<(), CliError> {
    let stream = fmt::parse_stream(&read_input(&a.input)?)?;
    let inst = stream.only_instance()?;
    let positions = stream.only_placement()?;
    if positions.len() != inst.n {
        return Err(CliError::Validation(format!(
            "placement covers {} vertices, instance has {}",
            positions.len(),
            inst.n,
        )));
    }
    let placement = Placement::from_positions(inst, positions.clone());
    placement.validate(inst).map_err(|e| CliError::Validation(e.to_string()))?;
    write_output(&a.output, &format!("{}\n", placement.cost))
}

fn cmd_bench(a: BenchArgs) -> Result<(), CliError> {
    let gen_err = |e: dimap::generators::GenError| CliError::Validation(e.to_string());
    let (default_mode, default_sizes): (Mode, &str) = match a.family {
        Family::BoundedGap => (Mode::Bounded, "16,64,144"),
        Family::UnboundedGap => (Mode::Unbounded, "16"),
        _ => {
            return Err(CliError::Validation(
                "bench sweeps the gap families; generate the partition instances with 'gen' \
                 and solve them directly"
                    .into(),
            ))
        }
    };
    let sizes = parse_sizes(a.sizes.as_deref().unwrap_or(default_sizes))?;
    let mode = a.mode.unwrap_or(default_mode);
    let mut out = String::new();
    for &n in &sizes {
        let (id, inst) = match a.family {
            Family::BoundedGap => {
                (format!("bounded-gap-{n}"), gen_bounded_gap(n).map_err(gen_err)?.instance)
            }
            Family::UnboundedGap => {
                let alpha = a.alpha.unwrap_or(1.0 / a.t.max(1) as f64);
                (
                    format!("unbounded-gap-{n}-t{}", a.t),
                    gen_unbounded_gap(n, a.t, alpha).map_err(gen_err)?.instance,
                )
            }
            _ => unreachable!("rejected above"),
        };
        let inst = prepare(inst, mode, a.eps)?;
        let start = Instant::now();
        let (metric, _) = solve_lp_default(&inst).map_err(|e| CliError::Solver(e.to_string()))?;
        let placement = solve_prepared(&inst, mode, a.seed, a.trials, a.pipeline)?;
        let wall = start.elapsed().as_secs_f64();
        let ratio =
            if metric.objective > 0.0 { placement.cost / metric.objective } else { f64::INFINITY };
        write!(
            out,
            "instance={id} mode={} seed={} trials={} lp={} cost={} ratio={}",
            mode_name(mode),
            a.seed,
            a.trials,
            metric.objective,
            placement.cost,
            ratio,
        )
        .unwrap();
        if a.exact {
            if let Ok(res) = solve_exact(&inst, 65536) {
                write!(out, " exact={}", res.optimum).unwrap();
            }
        }
        writeln!(out, " wall={wall:.3}").unwrap();
    }
    write_output(&a.output, &out)
}

fn cmd_plot(a: PlotArgs) -> Result<(), CliError> {
    let stream = fmt::parse_stream(&read_input(&a.input)?)?;
    let inst = stream.only_instance()?;
    let positions = stream.only_placement()?;
    if positions.len() != inst.n {
        return Err(CliError::Validation(format!(
            "placement covers {} vertices, instance has {}",
            positions.len(),
            inst.n,
        )));
    }
    let rendered = svg::render(inst, positions);
    std::fs::write(&a.svg, rendered)
        .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", a.svg.display())))
}
