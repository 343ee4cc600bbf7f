use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};

use memeflow::dynamics::{
    exponential_solution, integrate_in_context, run_stages, EnergyContext, LogisticParams, StageSpec, DEFAULT_EPSILON,
};
use memeflow::fitting::FitError;
use memeflow::io::{self, BubbleVerdictJson, FeatureScoreJson, FitReportJson, IoError, Sig17};
use memeflow::ode::uniform_grid;
use memeflow::noise::{add_gaussian_noise, add_relative_noise};
use memeflow::{
    activation_energy, classify, fit_exponential, fit_logistic, integrate_competition,
    interior_equilibrium, normalize, triage, BubbleConfig, CompetitionError, StateVector,
    TimeSeries, TriageThresholds,
};

const EXIT_FAILURE: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 4;
const EXIT_MALFORMED: u8 = 5;

#[derive(Debug, Parser)]
#[command(name = "memeflow", version, about = "Logistic meme dynamics: simulate, fit, detect bubbles, compete, score")]
struct Cli {
    /// Flat key=value file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Seed for synthetic noise.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    Logistic,
    Exponential,
}

impl FromStr for Model {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the logistic equation (or a chain of stages) and write `t,y`.
    Simulate(SimulateArgs),
    /// Fit a logistic or exponential model to a `t,y` file.
    Fit {
        input: PathBuf,
        #[arg(long, value_enum)]
        model: Option<Model>,
    },
    /// Classify a `t,y` file as Stable (exit 0), Bubble (2) or Indeterminate (3).
    Detect {
        input: PathBuf,
        #[arg(long)]
        disparity_threshold: Option<f64>,
        #[arg(long)]
        aic_margin: Option<f64>,
        #[arg(long)]
        window_fraction: Option<f64>,
    },
    /// Integrate a competition system and write `t,y1,...,yN`.
    Compete {
        system: PathBuf,
        /// Comma-separated initial amplitudes (default 0.1 each).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y0: Option<Vec<f64>>,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        /// Also report the interior equilibrium on stderr.
        #[arg(long)]
        equilibrium: bool,
    },
    /// Activation energy of an `id,dof_index,energy` file.
    Energy { input: PathBuf },
    /// Entropy triage of every column of a CSV table.
    Features {
        input: PathBuf,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        low: Option<f64>,
        #[arg(long)]
        high: Option<f64>,
        /// Also write a CSV summary here.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

#[derive(Debug, clap::Args)]
struct SimulateArgs {
    #[arg(long = "A", allow_hyphen_values = true)]
    affinity: Option<f64>,
    /// `exponential` samples `y0 exp(A t)` on the same grid and ignores deltaE.
    #[arg(long, value_enum)]
    model: Option<Model>,
    #[arg(long = "deltaE")]
    delta_e: Option<f64>,
    #[arg(long)]
    y0: Option<f64>,
    /// Starting offset as a fraction of deltaE, used when --y0 is absent.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    /// Standard deviation of additive Gaussian noise.
    #[arg(long)]
    noise: Option<f64>,
    /// Scale the noise by each sample's value instead of adding it.
    #[arg(long)]
    relative: bool,
    /// `A,deltaE,y0,completion`; repeat for a chain of stages.
    #[arg(long = "stage")]
    stages: Vec<String>,
    #[arg(long)]
    applied_energy: Option<f64>,
    /// `lo,hi` interval of applied energies where the model holds.
    #[arg(long)]
    validity: Option<String>,
}

#[derive(Debug)]
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self::new(EXIT_FAILURE, format!("{}: {e}", path.display()))
    }

    fn input(path: &Path, e: IoError) -> Self {
        let code = match e {
            IoError::Malformed { .. } => EXIT_MALFORMED,
            _ => EXIT_FAILURE,
        };
        Self::new(code, format!("{}: {e}", path.display()))
    }
}

type Outcome = Result<u8, CliError>;

/// Config-file values, looked up under the long flag name.
struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let values = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                io::parse_config(&text).map_err(|e| CliError::new(EXIT_FAILURE, format!("{}: {e}", p.display())))?
            }
            None => BTreeMap::new(),
        };
        Ok(Self { values })
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::new(EXIT_FAILURE, format!("config: invalid value `{v}` for `{key}`"))),
            None => Ok(None),
        }
    }

    fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }
}

struct Sink {
    path: Option<PathBuf>,
}

impl Sink {
    fn write(&self, content: &str) -> Result<(), CliError> {
        match &self.path {
            Some(p) => fs::write(p, content).map_err(|e| CliError::io(p, e)),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(content.as_bytes())
                    .and_then(|_| out.flush())
                    .map_err(|e| CliError::new(EXIT_FAILURE, format!("stdout: {e}")))
            }
        }
    }
}

fn open(path: &Path) -> Result<fs::File, CliError> {
    fs::File::open(path).map_err(|e| CliError::io(path, e))
}

fn read_series(path: &Path) -> Result<TimeSeries<f64>, CliError> {
    io::read_series_csv(open(path)?).map_err(|e| CliError::input(path, e))
}

fn usage(message: impl Into<String>) -> CliError {
    CliError::new(EXIT_FAILURE, message)
}

fn series_output(series: &TimeSeries<f64>, format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            io::write_series_csv(series, &mut buf).map_err(|e| usage(e.to_string()))?;
            Ok(String::from_utf8(buf).expect("ascii"))
        }
        Format::Json => io::series_json(series).map_err(|e| usage(e.to_string())),
    }
}

fn parse_numbers(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| usage(format!("{what}: `{v}` is not a number"))))
        .collect()
}

fn simulate(args: SimulateArgs, cfg: &Settings, format: Format, seed: u64, sink: &Sink) -> Outcome {
    let step = cfg.or(args.step, "step", 0.01)?;
    let mut warnings = Vec::new();
    let model = cfg.or(args.model, "model", Model::Logistic)?;
    let series = if model == Model::Exponential {
        if !args.stages.is_empty() {
            return Err(usage("--stage applies to the logistic model only"));
        }
        let affinity = cfg.or(args.affinity, "A", 1.0)?;
        let y0 = cfg.or(args.y0, "y0", DEFAULT_EPSILON)?;
        let t_end = cfg.or(args.t_end, "t-end", 20.0)?;
        if !(t_end > 0.0 && step > 0.0 && step <= t_end && y0 > 0.0 && affinity.is_finite()) {
            return Err(usage("need 0 < step <= t-end, y0 > 0 and a finite A"));
        }
        let grid = uniform_grid(t_end, step);
        let y = grid.iter().map(|&t| exponential_solution(t, affinity, y0)).collect();
        TimeSeries::new(grid, y).map_err(|e| usage(e.to_string()))?
    } else if args.stages.is_empty() {
        let affinity = cfg.or(args.affinity, "A", 1.0)?;
        let delta_e = cfg.or(args.delta_e, "deltaE", 1.0)?;
        let epsilon = cfg.or(args.epsilon, "epsilon", DEFAULT_EPSILON)?;
        let y0 = cfg.or(args.y0, "y0", epsilon * delta_e)?;
        let t_end = cfg.or(args.t_end, "t-end", 20.0)?;
        let p = LogisticParams::new(affinity, delta_e, y0).map_err(|e| usage(e.to_string()))?;
        let applied = cfg.get(args.applied_energy, "applied-energy")?;
        let validity = cfg.get(args.validity, "validity")?;
        let ctx = match (applied, validity) {
            (Some(a), Some(v)) => {
                let bounds = parse_numbers(&v, "validity")?;
                let [lo, hi] = bounds[..] else {
                    return Err(usage("validity must be `lo,hi`"));
                };
                EnergyContext::new(a, lo, hi).map_err(|e| usage(e.to_string()))?
            }
            (None, None) => EnergyContext::new(0.0, 0.0, f64::INFINITY).expect("valid"),
            _ => return Err(usage("--applied-energy and --validity go together")),
        };
        let sim = integrate_in_context(&p, &ctx, t_end, step).map_err(|e| usage(e.to_string()))?;
        warnings.extend(sim.warnings);
        sim.series
    } else {
        let stages = args
            .stages
            .iter()
            .map(|s| {
                let v = parse_numbers(s, "stage")?;
                let [a, de, y0, frac] = v[..] else {
                    return Err(usage(format!("stage `{s}` must be A,deltaE,y0,completion")));
                };
                let p = LogisticParams::new(a, de, y0).map_err(|e| usage(e.to_string()))?;
                StageSpec::new(p, frac).map_err(|e| usage(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        run_stages(&stages, step).map_err(|e| usage(e.to_string()))?.series
    };
    let sigma = cfg.or(args.noise, "noise", 0.0)?;
    let relative = args.relative || cfg.or(None, "relative", false)?;
    let series = if sigma > 0.0 {
        let noisy = if relative {
            add_relative_noise(&series, sigma, seed)
        } else {
            add_gaussian_noise(&series, sigma, seed)
        };
        noisy.map_err(|e| usage(e.to_string()))?
    } else {
        series
    };
    for w in warnings {
        eprintln!("warning: {w}");
    }
    sink.write(&series_output(&series, format)?)?;
    Ok(0)
}

fn fit(input: &Path, model: Model, format: Format, sink: &Sink) -> Outcome {
    let series = read_series(input)?;
    let result = match model {
        Model::Logistic => fit_logistic(&series),
        Model::Exponential => fit_exponential(&series),
    };
    let report = match result {
        Ok(r) => r,
        Err(e @ (FitError::DegenerateSeries
        | FitError::NonPositiveData { .. }
        | FitError::TooFewSamples { .. }
        | FitError::Unrepresentable(_)
        | FitError::PerfectFit)) => {
            return Err(CliError::new(EXIT_NOT_CONVERGED, format!("{}: {e}", input.display())))
        }
    };
    let text = match format {
        Format::Json => io::to_json(&FitReportJson::from(&report)).map_err(|e| usage(e.to_string()))?,
        Format::Csv => io::fit_report_csv(&report),
    };
    sink.write(&text)?;
    if report.converged {
        Ok(0)
    } else {
        eprintln!("warning: fit did not converge after {} iterations", report.iterations);
        Ok(EXIT_NOT_CONVERGED)
    }
}

fn detect(input: &Path, bubble: BubbleConfig<f64>, sink: &Sink) -> Outcome {
    let series = read_series(input)?;
    let verdict = classify(&series, &bubble);
    let text = io::to_json(&BubbleVerdictJson::from(&verdict)).map_err(|e| usage(e.to_string()))?;
    sink.write(&text)?;
    Ok(verdict.label.exit_code() as u8)
}

fn compete(
    system: &Path,
    y0: Option<Vec<f64>>,
    t_end: f64,
    step: f64,
    equilibrium: bool,
    format: Format,
    sink: &Sink,
) -> Outcome {
    let raw = io::read_system_json(open(system)?).map_err(|e| CliError::input(system, e))?;
    let sys = normalize(&raw).map_err(|e| usage(e.to_string()))?;
    let y0 = y0.unwrap_or_else(|| vec![0.1; sys.len()]);
    if y0.len() != sys.len() {
        return Err(usage(format!(
            "--y0 has {} values but the system has {} memes",
            y0.len(),
            sys.len()
        )));
    }
    let state = StateVector::new(y0).map_err(|e| usage(e.to_string()))?;
    let paths = integrate_competition(&sys, &state, t_end, step).map_err(|e| usage(e.to_string()))?;
    let text = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            io::write_wide_csv(&paths, &mut buf).map_err(|e| usage(e.to_string()))?;
            String::from_utf8(buf).expect("ascii")
        }
        Format::Json => {
            #[derive(serde::Serialize)]
            struct Row {
                t: Sig17,
                y: Vec<Sig17>,
            }
            let rows: Vec<Row> = (0..paths[0].len())
                .map(|k| Row {
                    t: Sig17(paths[0].times()[k]),
                    y: paths.iter().map(|p| Sig17(p.values()[k])).collect(),
                })
                .collect();
            io::to_json(&rows).map_err(|e| usage(e.to_string()))?
        }
    };
    sink.write(&text)?;
    if equilibrium {
        match interior_equilibrium(&sys) {
            Ok(Some(y)) => {
                let v: Vec<Sig17> = y.as_slice().iter().map(|&v| Sig17(v)).collect();
                eprint!("{}", io::to_json(&v).map_err(|e| usage(e.to_string()))?);
            }
            Ok(None) => eprintln!("none"),
            Err(e @ CompetitionError::SingularMatrix { .. }) => eprintln!("none\nnote: {e}"),
            Err(e) => return Err(usage(e.to_string())),
        }
    }
    Ok(0)
}

fn energy(input: &Path, sink: &Sink) -> Outcome {
    let set = io::read_constituents_csv(open(input)?).map_err(|e| CliError::input(input, e))?;
    let total = activation_energy(&set).map_err(|e| usage(format!("{}: {e}", input.display())))?;
    #[derive(serde::Serialize)]
    struct Report {
        activation_energy: Sig17,
    }
    let text = io::to_json(&Report {
        activation_energy: Sig17(total),
    })
    .map_err(|e| usage(e.to_string()))?;
    sink.write(&text)?;
    Ok(0)
}

fn features(
    input: &Path,
    bins: usize,
    thresholds: TriageThresholds<f64>,
    format: Format,
    summary: Option<&Path>,
    sink: &Sink,
) -> Outcome {
    let data = io::read_dataset_csv(open(input)?).map_err(|e| CliError::input(input, e))?;
    if data.dropped_rows > 0 {
        eprintln!("note: dropped {} incomplete rows", data.dropped_rows);
    }
    let scores = triage(&data, bins, thresholds).map_err(|e| usage(e.to_string()))?;
    let csv = io::feature_scores_csv(&scores);
    let text = match format {
        Format::Json => {
            let json: Vec<FeatureScoreJson> = scores.iter().map(FeatureScoreJson::from).collect();
            io::to_json(&json).map_err(|e| usage(e.to_string()))?
        }
        Format::Csv => csv.clone(),
    };
    sink.write(&text)?;
    if let Some(p) = summary {
        fs::write(p, csv).map_err(|e| CliError::io(p, e))?;
    }
    Ok(0)
}

fn run(cli: Cli) -> Outcome {
    let cfg = Settings::load(cli.config.as_deref())?;
    let sink = Sink {
        path: cfg.get(cli.output, "output")?,
    };
    let format = cfg.get(cli.format, "format")?;
    let seed = cfg.or(cli.seed, "seed", 0u64)?;
    match cli.command {
        Command::Simulate(args) => simulate(args, &cfg, format.unwrap_or(Format::Csv), seed, &sink),
        Command::Fit { input, model } => {
            let model = cfg.or(model, "model", Model::Logistic)?;
            fit(&input, model, format.unwrap_or(Format::Json), &sink)
        }
        Command::Detect {
            input,
            disparity_threshold,
            aic_margin,
            window_fraction,
        } => {
            let d = BubbleConfig::default();
            let bubble = BubbleConfig {
                disparity_threshold: cfg.or(disparity_threshold, "disparity-threshold", d.disparity_threshold)?,
                aic_margin: cfg.or(aic_margin, "aic-margin", d.aic_margin)?,
                inflection_window_fraction: cfg.or(window_fraction, "window-fraction", d.inflection_window_fraction)?,
                ..d
            };
            bubble.validate().map_err(|e| usage(e.to_string()))?;
            detect(&input, bubble, &sink)
        }
        Command::Compete {
            system,
            y0,
            t_end,
            step,
            equilibrium,
        } => {
            let y0 = match (y0, cfg.values.get("y0")) {
                (Some(v), _) => Some(v),
                (None, Some(text)) => Some(parse_numbers(text, "y0")?),
                (None, None) => None,
            };
            let t_end = cfg.or(t_end, "t-end", 200.0)?;
            let step = cfg.or(step, "step", 0.01)?;
            compete(&system, y0, t_end, step, equilibrium, format.unwrap_or(Format::Csv), &sink)
        }
        Command::Energy { input } => energy(&input, &sink),
        Command::Features {
            input,
            bins,
            low,
            high,
            summary,
        } => {
            let bins = cfg.or(bins, "bins", 16)?;
            let d = TriageThresholds::<f64>::default();
            let thresholds = TriageThresholds::new(cfg.or(low, "low", d.low)?, cfg.or(high, "high", d.high)?)
                .map_err(|e| usage(e.to_string()))?;
            features(&input, bins, thresholds, format.unwrap_or(Format::Json), summary.as_deref(), &sink)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_FAILURE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
