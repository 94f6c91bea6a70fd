//! `qsot`: quantum states over time from the command line.
//!
//! Subcommands: `tables` (Pauli correlation tables), `invert` (Bayesian
//! inverse of a channel document against a state document), `region`
//! (invertibility scan of the noisy damping family), `bloch` (Bloch-ball
//! image data) and `circuit` (measurement-circuit simulation).
//!
//! Exit codes: 0 success, 2 domain refusal (no completely positive
//! inverse), 3 rank-deficient prediction state, 64 usage error, 65 input
//! parse error. `QSOT_TOL` overrides the numerical tolerance globally.

mod output;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use output::{bloch_header, bloch_row, region_header, region_row, table_csv};
use qsot_core::adc::{self, AdcError, AdcMap};
use qsot_core::bayes::{self, BayesError};
use qsot_core::channel::{ChannelDocument, ChannelError, ChoiMap, DensityMatrix, Process};
use qsot_core::circuit::{self, CircuitError};
use qsot_core::linalg::Matrix;
use qsot_core::EPS_NUM;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_DOMAIN: u8 = 2;
const EXIT_RANK: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_PARSE: u8 = 65;

#[derive(Debug)]
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn parse(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_PARSE,
            message: message.into(),
        }
    }

    fn domain(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_DOMAIN,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<AdcError> for CliError {
    fn from(e: AdcError) -> Self {
        match e {
            AdcError::NotInvertible { .. } => CliError::domain(e.to_string()),
            AdcError::ParamOutOfRange(_) => CliError::usage(e.to_string()),
            AdcError::Bayes(inner) => inner.into(),
            AdcError::Channel(inner) => inner.into(),
        }
    }
}

impl From<BayesError> for CliError {
    fn from(e: BayesError) -> Self {
        match e {
            BayesError::RankDeficientPrediction { .. } => CliError {
                code: EXIT_RANK,
                message: e.to_string(),
            },
            other => CliError {
                code: 1,
                message: other.to_string(),
            },
        }
    }
}

impl From<ChannelError> for CliError {
    fn from(e: ChannelError) -> Self {
        CliError::parse(e.to_string())
    }
}

impl From<CircuitError> for CliError {
    fn from(e: CircuitError) -> Self {
        match e {
            CircuitError::Adc(inner) => inner.into(),
            CircuitError::BadIndex(_) | CircuitError::NoShots => CliError::usage(e.to_string()),
            CircuitError::Channel(inner) => inner.into(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "qsot",
    version,
    about = "Quantum states over time: correlation tables, Bayesian inverses, region scans, Bloch images and circuit simulation",
    after_help = "Exit codes: 0 ok, 2 no completely positive inverse, 3 rank-deficient \
                  prediction, 64 usage, 65 parse. Set QSOT_TOL to override the numerical \
                  tolerance (default 1e-9)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit Pauli two-time correlation tables for the damping process.
    Tables(TablesArgs),
    /// Compute the Bayesian inverse of a channel document for a state document.
    Invert(InvertArgs),
    /// Scan the invertibility region of the noisy damping family.
    Region(RegionArgs),
    /// Sample the Bloch-ball image of a channel or named map.
    Bloch(BlochArgs),
    /// Simulate the forward or reverse measurement circuit.
    Circuit(CircuitArgs),
}

#[derive(Args)]
struct TablesArgs {
    /// Prior Bloch z-coordinate, in (-1, 1).
    #[arg(long, allow_hyphen_values = true)]
    r3: f64,
    /// Damping parameter, in [0, 1].
    #[arg(long)]
    gamma: f64,
    /// Which table(s) to emit.
    #[arg(long, value_enum, default_value_t = Which::All)]
    which: Which,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output path; stdout when omitted. With `--which all` in CSV mode the
    /// path stem fans out into one file per table.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Forward,
    Bayes,
    Petz,
    Ls,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct InvertArgs {
    /// Channel document: {"dim_in", "dim_out", "kraus": [...]} or {"choi": ...}.
    #[arg(long)]
    channel: PathBuf,
    /// State document: a matrix {"rows", "cols", "data"}.
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RegionArgs {
    #[arg(long, default_value_t = 0.0)]
    eps_min: f64,
    #[arg(long, default_value_t = 1.0)]
    eps_max: f64,
    #[arg(long, default_value_t = 21)]
    eps_steps: usize,
    #[arg(long, default_value_t = 0.0)]
    gamma_min: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma_max: f64,
    #[arg(long, default_value_t = 21)]
    gamma_steps: usize,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    r3_min: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    r3_max: f64,
    #[arg(long, default_value_t = 21)]
    r3_steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BlochArgs {
    /// Channel document to sample; mutually exclusive with --map.
    #[arg(long, conflicts_with_all = ["map", "r3", "gamma"])]
    channel: Option<PathBuf>,
    /// Named map of the damping example.
    #[arg(long, value_enum, requires = "gamma")]
    map: Option<MapKind>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    r3: f64,
    #[arg(long)]
    gamma: Option<f64>,
    /// Number of sampled input points.
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MapKind {
    Forward,
    Bayes,
    Petz,
}

#[derive(Args)]
struct CircuitArgs {
    /// First-measured Pauli observable: 0-3 or I/X/Y/Z (I omits the stage).
    #[arg(long)]
    alpha: String,
    /// Second-measured Pauli observable: 0-3 or I/X/Y/Z (I omits the stage).
    #[arg(long)]
    beta: String,
    #[arg(long, allow_hyphen_values = true)]
    r3: f64,
    #[arg(long)]
    gamma: f64,
    #[arg(long, value_enum, default_value_t = Direction::Forward)]
    direction: Direction,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Direction {
    Forward,
    Reverse,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Shots,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version are not usage errors
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let tol = match tolerance() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}", e.message);
            return ExitCode::from(e.code);
        }
    };
    let result = match cli.command {
        Command::Tables(args) => cmd_tables(args),
        Command::Invert(args) => cmd_invert(args, tol),
        Command::Region(args) => cmd_region(args),
        Command::Bloch(args) => cmd_bloch(args, tol),
        Command::Circuit(args) => cmd_circuit(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

/// Numerical tolerance, overridable through `QSOT_TOL`.
fn tolerance() -> Result<f64, CliError> {
    match std::env::var("QSOT_TOL") {
        Ok(raw) => raw
            .parse::<f64>()
            .ok()
            .filter(|t| t.is_finite() && *t > 0.0)
            .ok_or_else(|| CliError::usage(format!("QSOT_TOL must be a positive float, got {raw:?}"))),
        Err(_) => Ok(EPS_NUM),
    }
}

fn check_range(name: &str, v: f64, lo: f64, hi: f64) -> Result<(), CliError> {
    if !v.is_finite() || v < lo || v > hi {
        return Err(CliError::usage(format!(
            "--{name} = {v} must lie in [{lo}, {hi}]"
        )));
    }
    Ok(())
}

fn check_open_range(name: &str, v: f64, lo: f64, hi: f64) -> Result<(), CliError> {
    if !v.is_finite() || v <= lo || v >= hi {
        return Err(CliError::usage(format!(
            "--{name} = {v} must lie in ({lo}, {hi})"
        )));
    }
    Ok(())
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_tables(args: TablesArgs) -> Result<(), CliError> {
    check_open_range("r3", args.r3, -1.0, 1.0)?;
    check_range("gamma", args.gamma, 0.0, 1.0)?;
    let (r3, gamma) = (args.r3, args.gamma);

    let named: Vec<(&str, [[f64; 4]; 4])> = match args.which {
        Which::Forward => vec![("forward", adc::table_forward(r3, gamma)?)],
        Which::Bayes => vec![("bayes", adc::table_bayes(r3, gamma)?)],
        Which::Petz => vec![("petz", adc::table_petz(r3, gamma)?)],
        Which::Ls => vec![("ls", adc::table_ls(r3, gamma)?)],
        Which::All => {
            let set = adc::tables(r3, gamma)?;
            vec![
                ("forward", set.forward),
                ("bayes", set.bayes),
                ("petz", set.petz),
                ("ls", set.ls),
            ]
        }
    };

    match args.format {
        Format::Json => {
            let obj: serde_json::Map<String, serde_json::Value> = named
                .iter()
                .map(|(name, table)| {
                    (
                        name.to_string(),
                        serde_json::to_value(table).expect("tables serialize"),
                    )
                })
                .collect();
            let mut text = serde_json::to_string_pretty(&obj).expect("tables serialize");
            text.push('\n');
            emit(&args.out, &text)
        }
        Format::Csv => {
            if named.len() > 1 {
                if let Some(path) = &args.out {
                    for (name, table) in &named {
                        let fanned = fan_out_path(path, name);
                        std::fs::write(&fanned, table_csv(table)).map_err(|e| {
                            CliError::io(format!("cannot write {}: {e}", fanned.display()))
                        })?;
                    }
                    return Ok(());
                }
                let mut text = String::new();
                for (name, table) in &named {
                    text.push_str(&format!("# {name}\n"));
                    text.push_str(&table_csv(table));
                }
                emit(&None, &text)
            } else {
                emit(&args.out, &table_csv(&named[0].1))
            }
        }
    }
}

/// `tables.csv` + `forward` -> `tables_forward.csv`.
fn fan_out_path(path: &Path, name: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("tables");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_{name}.{ext}"))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&raw)
        .map_err(|e| CliError::parse(format!("cannot parse {}: {e}", path.display())))
}

fn cmd_invert(args: InvertArgs, tol: f64) -> Result<(), CliError> {
    let doc: ChannelDocument = read_json(&args.channel)?;
    let channel = doc.into_channel(tol)?;
    let mat: Matrix = read_json(&args.state)?;
    let prior = DensityMatrix::new(mat, tol)
        .map_err(|e| CliError::parse(format!("invalid state document: {e}")))?;
    let process = Process::new(channel, prior)
        .map_err(|e| CliError::parse(format!("incompatible documents: {e}")))?;

    let candidate = bayes::bayes_candidate_eigen(&process).map_err(CliError::from)?;
    let report = bayes::verify_bayes_map(&process, &candidate, tol).map_err(CliError::from)?;
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    emit(&args.out, &text)
}

fn cmd_region(args: RegionArgs) -> Result<(), CliError> {
    check_range("eps-min", args.eps_min, 0.0, 1.0)?;
    check_range("eps-max", args.eps_max, 0.0, 1.0)?;
    check_range("gamma-min", args.gamma_min, 0.0, 1.0)?;
    check_range("gamma-max", args.gamma_max, 0.0, 1.0)?;
    check_range("r3-min", args.r3_min, -1.0, 1.0)?;
    check_range("r3-max", args.r3_max, -1.0, 1.0)?;
    for (name, lo, hi) in [
        ("eps", args.eps_min, args.eps_max),
        ("gamma", args.gamma_min, args.gamma_max),
        ("r3", args.r3_min, args.r3_max),
    ] {
        if lo > hi {
            return Err(CliError::usage(format!("--{name}-min exceeds --{name}-max")));
        }
    }

    // interior grid: `steps` points strictly inside each range
    let axis = |lo: f64, hi: f64, steps: usize| -> Vec<f64> {
        (0..steps)
            .map(|i| lo + (hi - lo) * (i + 1) as f64 / (steps + 1) as f64)
            .collect()
    };
    let eps_axis = axis(args.eps_min, args.eps_max, args.eps_steps);
    let gamma_axis = axis(args.gamma_min, args.gamma_max, args.gamma_steps);
    let r3_axis = axis(args.r3_min, args.r3_max, args.r3_steps);

    let mut text = String::from(region_header());
    for &eps in &eps_axis {
        for &gamma in &gamma_axis {
            for &r3 in &r3_axis {
                let inside = adc::robustness_indicator(eps, gamma, r3);
                text.push_str(&region_row(eps, gamma, r3, inside));
            }
        }
    }
    emit(&args.out, &text)
}

fn cmd_bloch(args: BlochArgs, tol: f64) -> Result<(), CliError> {
    let map: ChoiMap = if let Some(path) = &args.channel {
        let doc: ChannelDocument = read_json(path)?;
        let channel = doc.into_channel(tol)?;
        if channel.dim_in() != 2 || channel.dim_out() != 2 {
            return Err(CliError::parse(
                "Bloch sampling needs a qubit channel document".to_string(),
            ));
        }
        ChoiMap::from_channel(&channel)
    } else {
        let Some(kind) = args.map else {
            return Err(CliError::usage(
                "either --channel or --map (with --r3/--gamma) is required",
            ));
        };
        let Some(gamma) = args.gamma else {
            return Err(CliError::usage("--map requires --gamma"));
        };
        check_open_range("r3", args.r3, -1.0, 1.0)?;
        check_range("gamma", gamma, 0.0, 1.0)?;
        let which = match kind {
            MapKind::Forward => AdcMap::Forward,
            MapKind::Bayes => AdcMap::Bayes,
            MapKind::Petz => AdcMap::Petz,
        };
        adc::adc_map(which, args.r3, gamma)?
    };

    let pairs = adc::bloch_image_map(&map, args.n, args.seed)?;
    let mut text = String::from(bloch_header());
    for (inp, out) in &pairs {
        text.push_str(&bloch_row(inp, out));
    }
    emit(&args.out, &text)
}

fn parse_pauli_flag(name: &str, raw: &str) -> Result<usize, CliError> {
    qsot_core::observable::parse_pauli_label(raw).ok_or_else(|| {
        CliError::usage(format!(
            "--{name} must be 0..=3 or one of I, X, Y, Z (got {raw:?})"
        ))
    })
}

fn cmd_circuit(args: CircuitArgs) -> Result<(), CliError> {
    check_open_range("r3", args.r3, -1.0, 1.0)?;
    check_range("gamma", args.gamma, 0.0, 1.0)?;
    let alpha = parse_pauli_flag("alpha", &args.alpha)?;
    let beta = parse_pauli_flag("beta", &args.beta)?;
    let circuit = match args.direction {
        Direction::Forward => circuit::forward_circuit(alpha, beta, args.r3, args.gamma),
        Direction::Reverse => circuit::reverse_circuit(beta, alpha, args.r3, args.gamma),
    }
    .map_err(CliError::from)?;
    let result = match args.mode {
        Mode::Exact => circuit::simulate_exact(&circuit),
        Mode::Shots => {
            circuit::simulate_shots(&circuit, args.shots, args.seed).map_err(CliError::from)?
        }
    };
    let mut text = serde_json::to_string_pretty(&result).expect("result serializes");
    text.push('\n');
    emit(&args.out, &text)
}
