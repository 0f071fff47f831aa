//! Command-line front end. Parses one subcommand, runs it, writes the
//! requested artifacts, and maps errors onto a fixed exit-code taxonomy:
//! 0 success, 2 malformed input or configuration, 3 inadequate data,
//! 4 a rule hypothesis failed its gate or check.

mod commands;
mod emit;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use heavytail::simulate::MinRuleKind;
use heavytail::Error;

use commands::{
    cmd_analyze, cmd_compare, cmd_fit_scale, cmd_simulate, cmd_verify, AnalyzeRequest,
    CompareRequest, FitScaleRequest, GridOverrides, InputRef, SimulateRequest, VerifyMode,
    VerifyRequest,
};
use emit::Emitter;

#[derive(Parser)]
#[command(
    name = "heavytail",
    version,
    about = "Hazard-based tail analysis of closed-form models and samples"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Indices, fitted natural scale, and determinacy for one input
    Analyze(AnalyzeArgs),
    /// Hazard-ratio comparison of two inputs
    Compare(CompareArgs),
    /// Fit a concave scale to the hazard of one input
    FitScale(FitScaleArgs),
    /// Draw realizations of a stochastic process description
    Simulate(SimulateArgs),
    /// Check a tail bound or a min-rule hypothesis by simulation
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Lowest evaluation grid point (default depends on the input)
    #[arg(long = "grid-min")]
    grid_min: Option<f64>,
    /// Highest evaluation grid point (default depends on the input)
    #[arg(long = "grid-max")]
    grid_max: Option<f64>,
    /// Geometric spacing ratio of the evaluation grid
    #[arg(long = "grid-ratio", default_value_t = 1.05)]
    grid_ratio: f64,
    /// Tail fraction of the grid that liminf windows are taken over
    #[arg(long, default_value_t = 0.25)]
    window: f64,
}

impl GridArgs {
    fn overrides(&self) -> GridOverrides {
        GridOverrides {
            x_min: self.grid_min,
            x_max: self.grid_max,
            ratio: self.grid_ratio,
            window: self.window,
        }
    }
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Directory the report and curves are written into
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Artifact kinds to write (comma separated)
    #[arg(long, value_enum, value_delimiter = ',', default_value = "json")]
    emit: Vec<EmitKind>,
}

#[derive(ValueEnum, Clone, Copy, PartialEq)]
enum EmitKind {
    Json,
    Csv,
    Svg,
}

impl OutArgs {
    fn emitter(&self) -> Result<Emitter, Error> {
        Emitter::new(
            &self.out,
            self.emit.contains(&EmitKind::Json),
            self.emit.contains(&EmitKind::Csv),
            self.emit.contains(&EmitKind::Svg),
        )
    }
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
struct InputArgs {
    /// Closed-form model description (JSON)
    #[arg(long)]
    model: Option<PathBuf>,
    /// Sample CSV, one value per line
    #[arg(long)]
    sample: Option<PathBuf>,
}

impl InputArgs {
    fn as_ref(&self) -> InputRef<'_> {
        match (&self.model, &self.sample) {
            (Some(m), None) => InputRef::Model(m),
            (None, Some(s)) => InputRef::Sample(s),
            _ => unreachable!("clap enforces exactly one input"),
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutArgs,
    /// RNG seed; enables the Hardy-type moment cross-check on a model
    #[arg(long, requires = "mc_n")]
    seed: Option<u64>,
    /// Draw count for the moment cross-check
    #[arg(long = "mc-n", requires = "seed")]
    mc_n: Option<usize>,
}

#[derive(Args)]
struct CompareArgs {
    /// Closed-form model description (repeat the flag for two models)
    #[arg(long = "model")]
    models: Vec<PathBuf>,
    /// Sample CSV (repeat the flag for two samples)
    #[arg(long = "sample")]
    samples: Vec<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct FitScaleArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Process description (JSON)
    #[arg(long)]
    process: PathBuf,
    /// Number of realizations to draw
    #[arg(long = "mc-n", default_value_t = 1_000_000)]
    mc_n: usize,
    /// RNG seed; required so every run is reproducible
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Transform description (JSON); runs the tail-bound check
    #[arg(long, conflicts_with_all = ["min_rule", "scale"])]
    transform: Option<PathBuf>,
    /// Slack exponent of the tail bound, in (0, 1)
    #[arg(long, requires = "transform")]
    epsilon: Option<f64>,
    /// Min-rule to check: sum, product, or running-max:N
    #[arg(long = "min-rule", value_parser = parse_rule)]
    min_rule: Option<MinRuleKind>,
    /// Scale function (JSON) the min-rule is gated and measured under
    #[arg(long, requires = "min_rule")]
    scale: Option<PathBuf>,
    /// Closed-form model description; one for --transform, two for --min-rule
    #[arg(long = "model", required = true)]
    models: Vec<PathBuf>,
    /// RNG seed; required so every run is reproducible
    #[arg(long)]
    seed: u64,
    /// Number of Monte Carlo draws
    #[arg(long = "mc-n", default_value_t = 1_000_000)]
    mc_n: usize,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutArgs,
}

fn parse_rule(s: &str) -> Result<MinRuleKind, String> {
    match s {
        "sum" => Ok(MinRuleKind::Sum),
        "product" => Ok(MinRuleKind::Product),
        _ => match s.strip_prefix("running-max:") {
            Some(n) => {
                let n: usize = n
                    .parse()
                    .map_err(|_| format!("bad horizon in {s:?}; use running-max:N"))?;
                Ok(MinRuleKind::RunningMax { n })
            }
            None => Err(format!(
                "unknown rule {s:?}; use sum, product, or running-max:N"
            )),
        },
    }
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, Error> {
    match cli.cmd {
        Cmd::Analyze(a) => {
            let mut em = a.out.emitter()?;
            cmd_analyze(
                &AnalyzeRequest {
                    input: a.input.as_ref(),
                    ov: a.grid.overrides(),
                    seed: a.seed,
                    mc_n: a.mc_n,
                },
                &mut em,
            )?;
            Ok(em.written)
        }
        Cmd::Compare(a) => {
            let refs: Vec<InputRef> = a
                .models
                .iter()
                .map(|p| InputRef::Model(p))
                .chain(a.samples.iter().map(|p| InputRef::Sample(p)))
                .collect();
            if refs.len() != 2 {
                return Err(Error::InvalidParameter(format!(
                    "compare needs exactly two inputs (models first, then samples), got {}",
                    refs.len()
                )));
            }
            let mut em = a.out.emitter()?;
            cmd_compare(
                &CompareRequest {
                    x: refs[0],
                    y: refs[1],
                    ov: a.grid.overrides(),
                },
                &mut em,
            )?;
            Ok(em.written)
        }
        Cmd::FitScale(a) => {
            let mut em = a.out.emitter()?;
            cmd_fit_scale(
                &FitScaleRequest {
                    input: a.input.as_ref(),
                    ov: a.grid.overrides(),
                },
                &mut em,
            )?;
            Ok(em.written)
        }
        Cmd::Simulate(a) => {
            let mut em = a.out.emitter()?;
            cmd_simulate(
                &SimulateRequest {
                    process: &a.process,
                    mc_n: a.mc_n,
                    seed: a.seed,
                },
                &mut em,
            )?;
            Ok(em.written)
        }
        Cmd::Verify(a) => {
            let mode = match (&a.transform, &a.min_rule, &a.scale) {
                (Some(spec), None, None) => VerifyMode::TransformBound {
                    spec,
                    epsilon: a.epsilon.ok_or_else(|| {
                        Error::InvalidParameter(
                            "--transform needs --epsilon for the bound exponent".into(),
                        )
                    })?,
                },
                (None, Some(rule), Some(scale)) => VerifyMode::MinRule {
                    rule: *rule,
                    scale,
                },
                (None, Some(_), None) => {
                    return Err(Error::InvalidParameter(
                        "--min-rule needs --scale with the comparison scale function".into(),
                    ))
                }
                _ => {
                    return Err(Error::InvalidParameter(
                        "verify needs exactly one of --transform or --min-rule".into(),
                    ))
                }
            };
            let models: Vec<&std::path::Path> = a.models.iter().map(|p| p.as_path()).collect();
            let mut em = a.out.emitter()?;
            let result = cmd_verify(
                &VerifyRequest {
                    models,
                    mode,
                    ov: a.grid.overrides(),
                    mc_n: a.mc_n,
                    seed: a.seed,
                },
                &mut em,
            );
            // the bound check writes its report before failing the run
            for path in &em.written {
                println!("wrote {}", path.display());
            }
            result?;
            return Ok(Vec::new());
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. }
        | Error::InvalidParameter(_)
        | Error::NotAScaleFunction(_)
        | Error::NotInvertible(_) => 2,
        Error::HypothesisFailed { .. } => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(written) => {
            for path in &written {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
