//! Command-line front end for the protocol library: closed-form analysis of
//! a channel operating point, figure-ready parameter sweeps, seeded Monte
//! Carlo sessions, and security-threshold solving.
//!
//! Output is CSV or JSON only; plotting is left to external tools. Every
//! output is a deterministic function of the configuration and seed, and
//! every number is reproducible by calling the underlying library operation
//! with the same arguments.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cvqkd::adversary::{eve_max_info, AttackConfig, KPolicy};
use cvqkd::analysis::{self, EnvelopeBin, RatePoint};
use cvqkd::protocol::{run_session, ProtocolParams, RunRecord};
use cvqkd::Error as LibError;

const DEFAULT_R: f64 = 3.0;
const DEFAULT_SIGMA_PRIME2: f64 = 100.0;
const DEFAULT_ETA: f64 = 1.0;
const DEFAULT_GRID_N: usize = 200;
const DEFAULT_BINS: usize = 50;
const DEFAULT_N_RUNS: usize = 100_000;
const DEFAULT_DISCLOSURE_FRACTION: f64 = 0.2;
const DEFAULT_SEED: u64 = 42;
/// Bisection tolerance used for the transmittance threshold.
const THRESHOLD_TOL: f64 = 1e-4;
/// Smallest Monte Carlo session the CLI accepts.
const MIN_SIMULATE_RUNS: usize = 100;

const EXIT_CODE_HELP: &str = "Exit codes:
  0  success (a Monte Carlo abort decision is a result, not a failure)
  2  parameter, usage, or config error
  3  I/O error
  4  estimation error (too few disclosed runs)
  5  solver error (no bracketed root or zero crossing)";

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Thresholds(args) => cmd_thresholds(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

#[derive(Parser)]
#[command(
    name = "cvqkd",
    version,
    about = "Simulator and security analysis for a deterministic two-way \
             continuous-variable QKD protocol",
    after_help = EXIT_CODE_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form rates, output variances, and fidelity at one operating point
    Analyze(AnalyzeArgs),
    /// Rate or envelope tables over a transmittance grid, written as CSV
    Sweep(SweepArgs),
    /// Seeded Monte Carlo session: JSON summary plus optional per-run dump
    Simulate(SimulateArgs),
    /// Security thresholds: transmittance root and critical fidelity
    Thresholds(ThresholdsArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Squeezing factor
    #[arg(long)]
    r: Option<f64>,
    /// Variance of the encoded key symbols
    #[arg(long)]
    sigma_prime2: Option<f64>,
    /// Forward-channel transmittance
    #[arg(long)]
    eta1: Option<f64>,
    /// Backward-channel transmittance
    #[arg(long)]
    eta2: Option<f64>,
    /// Shorthand setting both transmittances at once
    #[arg(long, conflicts_with_all = ["eta1", "eta2"])]
    eta: Option<f64>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Key=value file supplying defaults for any flag; flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Squeezing factor
    #[arg(long)]
    r: Option<f64>,
    /// Variance of the encoded key symbols
    #[arg(long)]
    sigma_prime2: Option<f64>,
    /// Grid resolution per transmittance axis
    #[arg(long)]
    grid_n: Option<usize>,
    /// Number of fidelity bins for the envelope table
    #[arg(long)]
    bins: Option<usize>,
    /// Which table to produce: 2 or 3 = rate and fidelity over the
    /// transmittance grid, 4 = worst secret rate per fidelity bin
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=4))]
    fig: Option<u8>,
    /// Output CSV path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Key=value file supplying defaults for any flag; flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Squeezing factor
    #[arg(long)]
    r: Option<f64>,
    /// Variance of the encoded key symbols
    #[arg(long)]
    sigma_prime2: Option<f64>,
    /// Forward-channel transmittance
    #[arg(long)]
    eta1: Option<f64>,
    /// Backward-channel transmittance
    #[arg(long)]
    eta2: Option<f64>,
    /// Shorthand setting both transmittances at once
    #[arg(long, conflicts_with_all = ["eta1", "eta2"])]
    eta: Option<f64>,
    /// Number of protocol runs in the session
    #[arg(long)]
    n_runs: Option<usize>,
    /// Fraction of runs disclosed for estimation
    #[arg(long)]
    disclosure_fraction: Option<f64>,
    /// Seed for the session generator
    #[arg(long)]
    seed: Option<u64>,
    /// Optional per-run CSV dump path (summary always goes to stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Key=value file supplying defaults for any flag; flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ThresholdsArgs {
    /// Squeezing factor
    #[arg(long)]
    r: Option<f64>,
    /// Variance of the encoded key symbols
    #[arg(long)]
    sigma_prime2: Option<f64>,
    /// Grid resolution for the envelope behind the critical fidelity
    #[arg(long)]
    grid_n: Option<usize>,
    /// Number of fidelity bins for that envelope
    #[arg(long)]
    bins: Option<usize>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Key=value file supplying defaults for any flag; flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(format!("expected json or csv, got {other:?}")),
        }
    }
}

#[derive(Debug)]
enum CliError {
    Lib(LibError),
    Io(std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(LibError::Domain(_))
            | CliError::Lib(LibError::Usage(_))
            | CliError::Lib(LibError::Integrity(_)) => 2,
            CliError::Io(_) => 3,
            CliError::Lib(LibError::Estimation { .. }) => 4,
            CliError::Lib(LibError::Solver(_)) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Lib(err) => err.fmt(f),
            CliError::Io(err) => write!(f, "I/O error: {err}"),
        }
    }
}

impl From<LibError> for CliError {
    fn from(err: LibError) -> Self {
        CliError::Lib(err)
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err)
    }
}

/// Settings loaded from a `--config` file; command-line flags take
/// precedence over them, and they take precedence over the defaults.
#[derive(Debug, Default)]
struct FileConfig(BTreeMap<String, String>);

/// Accepted config keys, spelled like the long flags they stand in for.
const CONFIG_KEYS: &[&str] = &[
    "r",
    "sigma-prime2",
    "eta1",
    "eta2",
    "eta",
    "grid-n",
    "bins",
    "n-runs",
    "disclosure-fraction",
    "seed",
    "out",
    "format",
    "fig",
];

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(path) => {
                let text = fs::read_to_string(path)?;
                Self::parse(&text).map_err(CliError::Lib)
            }
        }
    }

    /// Parses `key = value` lines; `#` starts a comment, blank lines are
    /// skipped. Values are kept as text and parsed when a command asks for
    /// them, so an unused malformed value cannot fail an unrelated command.
    fn parse(text: &str) -> Result<Self, LibError> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                LibError::Usage(format!(
                    "config line {}: expected key=value, got {line:?}",
                    idx + 1
                ))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !CONFIG_KEYS.contains(&key) {
                return Err(LibError::Usage(format!(
                    "config line {}: unknown key {key:?}",
                    idx + 1
                )));
            }
            if map.insert(key.to_string(), value.to_string()).is_some() {
                return Err(LibError::Usage(format!(
                    "config line {}: duplicate key {key:?}",
                    idx + 1
                )));
            }
        }
        Ok(Self(map))
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, LibError>
    where
        T::Err: fmt::Display,
    {
        self.raw(key)
            .map(|value| {
                value.parse().map_err(|err| {
                    LibError::Usage(format!("config key {key}: invalid value {value:?} ({err})"))
                })
            })
            .transpose()
    }
}

/// Flag value if given, else the config value, else the default.
fn pick<T: FromStr>(flag: Option<T>, cfg: &FileConfig, key: &str, default: T) -> Result<T, LibError>
where
    T::Err: fmt::Display,
{
    match flag {
        Some(value) => Ok(value),
        None => Ok(cfg.parsed(key)?.unwrap_or(default)),
    }
}

fn pick_out(flag: Option<PathBuf>, cfg: &FileConfig) -> Option<PathBuf> {
    flag.or_else(|| cfg.raw("out").map(PathBuf::from))
}

/// Resolves the two transmittances. The `eta` shorthand expands to both
/// components within its own precedence layer, then flags beat the config
/// file component-wise and anything still unset falls back to 1.
fn resolve_etas(
    flag_eta: Option<f64>,
    flag_eta1: Option<f64>,
    flag_eta2: Option<f64>,
    cfg: &FileConfig,
) -> Result<(f64, f64), LibError> {
    // clap already rejects --eta next to --eta1/--eta2; hold the config
    // file to the same exclusivity.
    let cfg_eta: Option<f64> = cfg.parsed("eta")?;
    let cfg_eta1: Option<f64> = cfg.parsed("eta1")?;
    let cfg_eta2: Option<f64> = cfg.parsed("eta2")?;
    if cfg_eta.is_some() && (cfg_eta1.is_some() || cfg_eta2.is_some()) {
        return Err(LibError::Usage(
            "config file sets eta together with eta1/eta2".into(),
        ));
    }
    let (flag1, flag2) = match flag_eta {
        Some(eta) => (Some(eta), Some(eta)),
        None => (flag_eta1, flag_eta2),
    };
    let (cfg1, cfg2) = match cfg_eta {
        Some(eta) => (Some(eta), Some(eta)),
        None => (cfg_eta1, cfg_eta2),
    };
    Ok((
        flag1.or(cfg1).unwrap_or(DEFAULT_ETA),
        flag2.or(cfg2).unwrap_or(DEFAULT_ETA),
    ))
}

/// Nine significant digits, exponent notation; used for every float cell.
fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|err| {
        CliError::Lib(LibError::Integrity(format!("JSON encoding failed: {err}")))
    })?;
    text.push('\n');
    Ok(text)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => Ok(fs::write(path, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct AnalyzeReport {
    eta1: f64,
    eta2: f64,
    i_ab_bits: f64,
    i_ae_bits: f64,
    delta_i_bits: f64,
    v1: f64,
    v2: f64,
    fidelity: f64,
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let cfg = FileConfig::load(args.config.as_deref())?;
    let r = pick(args.r, &cfg, "r", DEFAULT_R)?;
    let sigma_prime2 = pick(
        args.sigma_prime2,
        &cfg,
        "sigma-prime2",
        DEFAULT_SIGMA_PRIME2,
    )?;
    let (eta1, eta2) = resolve_etas(args.eta, args.eta1, args.eta2, &cfg)?;
    let format = pick(args.format, &cfg, "format", OutputFormat::Json)?;

    let params = ProtocolParams::new(r, sigma_prime2)?;
    let residual = analysis::masking_condition_residual(r, params.sigma2)?;
    if residual > 1e-6 {
        eprintln!(
            "warning: mask variance misses the indistinguishability condition \
             by a relative {residual:e}"
        );
    }
    let i_ab_bits = analysis::info_ab(r, sigma_prime2, eta1, eta2)?;
    let i_ae_bits = eve_max_info(&params, eta1, eta2);
    let (v1, v2) = analysis::output_variances(r, params.sigma2, sigma_prime2, eta1, eta2)?;
    let fidelity = analysis::fidelity_closed_form(v1, v2)?;
    if fidelity > 1.0 {
        eprintln!(
            "warning: fidelity {fidelity} exceeds 1; the inputs lie outside \
             the physical operating regime"
        );
    }
    let report = AnalyzeReport {
        eta1,
        eta2,
        i_ab_bits,
        i_ae_bits,
        delta_i_bits: i_ab_bits - i_ae_bits,
        v1,
        v2,
        fidelity,
    };
    let text = match format {
        OutputFormat::Json => to_json(&report)?,
        OutputFormat::Csv => {
            let mut s = String::from("eta1,eta2,i_ab_bits,i_ae_bits,delta_i_bits,v1,v2,fidelity\n");
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                fmt_float(report.eta1),
                fmt_float(report.eta2),
                fmt_float(report.i_ab_bits),
                fmt_float(report.i_ae_bits),
                fmt_float(report.delta_i_bits),
                fmt_float(report.v1),
                fmt_float(report.v2),
                fmt_float(report.fidelity)
            ));
            s
        }
    };
    emit(pick_out(args.out, &cfg).as_deref(), &text)
}

fn rate_grid_csv(points: &[RatePoint]) -> String {
    let mut s = String::from("eta1,eta2,i_ab_bits,i_ae_bits,delta_i_bits,fidelity\n");
    for p in points {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_float(p.eta1),
            fmt_float(p.eta2),
            fmt_float(p.i_ab_bits),
            fmt_float(p.i_ae_bits),
            fmt_float(p.delta_i_bits),
            fmt_float(p.fidelity)
        ));
    }
    s
}

fn envelope_csv(bins: &[EnvelopeBin]) -> String {
    let mut s = String::from("fidelity_bin,delta_i_min_bits\n");
    for bin in bins {
        s.push_str(&format!(
            "{},{}\n",
            fmt_float(bin.fidelity_bin),
            fmt_float(bin.delta_i_min_bits)
        ));
    }
    s
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let cfg = FileConfig::load(args.config.as_deref())?;
    let r = pick(args.r, &cfg, "r", DEFAULT_R)?;
    let sigma_prime2 = pick(
        args.sigma_prime2,
        &cfg,
        "sigma-prime2",
        DEFAULT_SIGMA_PRIME2,
    )?;
    let grid_n = pick(args.grid_n, &cfg, "grid-n", DEFAULT_GRID_N)?;
    let bins = pick(args.bins, &cfg, "bins", DEFAULT_BINS)?;
    let fig = pick(args.fig, &cfg, "fig", 2u8)?;
    if !(2..=4).contains(&fig) {
        return Err(LibError::Usage(format!("fig must be 2, 3, or 4, got {fig}")).into());
    }
    let out = pick_out(args.out, &cfg)
        .ok_or_else(|| LibError::Usage("sweep requires an output path (--out)".into()))?;
    // Tables 2 and 3 share one grid: rate and fidelity are columns of the
    // same rows, so both requests produce the identical file.
    let text = if fig == 4 {
        envelope_csv(&analysis::delta_i_vs_fidelity(
            r,
            sigma_prime2,
            grid_n,
            bins,
        )?)
    } else {
        rate_grid_csv(&analysis::sweep_rate_grid(r, sigma_prime2, grid_n)?)
    };
    fs::write(&out, text)?;
    Ok(())
}

#[derive(Serialize)]
struct SimulateSummary {
    empirical_snr: f64,
    empirical_mutual_info_bits: f64,
    empirical_fidelity: f64,
    analytic_snr: f64,
    analytic_fidelity: f64,
    n_runs: usize,
    seed: u64,
    abort: bool,
}

fn run_dump_csv(records: &[RunRecord]) -> String {
    let mut s = String::from("run,basis,alpha,x,bob_measurement,disclosed\n");
    for (i, rec) in records.iter().enumerate() {
        s.push_str(&format!(
            "{i},{},{},{},{},{}\n",
            rec.basis,
            fmt_float(rec.alpha),
            fmt_float(rec.x),
            fmt_float(rec.bob_measurement),
            rec.disclosed
        ));
    }
    s
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let cfg = FileConfig::load(args.config.as_deref())?;
    let r = pick(args.r, &cfg, "r", DEFAULT_R)?;
    let sigma_prime2 = pick(
        args.sigma_prime2,
        &cfg,
        "sigma-prime2",
        DEFAULT_SIGMA_PRIME2,
    )?;
    let (eta1, eta2) = resolve_etas(args.eta, args.eta1, args.eta2, &cfg)?;
    let n_runs = pick(args.n_runs, &cfg, "n-runs", DEFAULT_N_RUNS)?;
    let disclosure_fraction = pick(
        args.disclosure_fraction,
        &cfg,
        "disclosure-fraction",
        DEFAULT_DISCLOSURE_FRACTION,
    )?;
    let seed = pick(args.seed, &cfg, "seed", DEFAULT_SEED)?;
    if n_runs < MIN_SIMULATE_RUNS {
        return Err(LibError::Domain(format!(
            "simulate needs at least {MIN_SIMULATE_RUNS} runs, got {n_runs}"
        ))
        .into());
    }

    let params = ProtocolParams::new(r, sigma_prime2)?
        .with_n_runs(n_runs)?
        .with_disclosure_fraction(disclosure_fraction)?;
    // Unit transmittance on both lines is exactly the honest channel; the
    // library produces identical sessions for the two descriptions.
    let attack = if eta1 == 1.0 && eta2 == 1.0 {
        AttackConfig::None
    } else {
        AttackConfig::BeamSplitters {
            eta1,
            eta2,
            k_policy: KPolicy::Optimal,
        }
    };
    let session = run_session(&params, &attack, seed)?;

    let analytic_snr = analysis::snr_ab(r, sigma_prime2, eta1, eta2)?;
    let analytic_fidelity = analysis::fidelity_at(r, sigma_prime2, eta1, eta2)?;
    let envelope = analysis::delta_i_vs_fidelity(r, sigma_prime2, DEFAULT_GRID_N, DEFAULT_BINS)?;
    let f_critical = analysis::critical_fidelity(&envelope)?;
    let summary = SimulateSummary {
        empirical_snr: session.empirical_snr,
        empirical_mutual_info_bits: analysis::shannon_bits(session.empirical_snr)?,
        empirical_fidelity: session.empirical_fidelity,
        analytic_snr,
        analytic_fidelity,
        n_runs,
        seed,
        // Abort on any session whose estimated fidelity falls below the
        // critical value; the decision is reported, not treated as failure.
        abort: session.empirical_fidelity < f_critical,
    };
    print!("{}", to_json(&summary)?);
    if let Some(path) = pick_out(args.out, &cfg) {
        fs::write(&path, run_dump_csv(&session.records))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ThresholdReport {
    eta_star: f64,
    f_critical: f64,
    grid_resolution: usize,
    bins: usize,
    tolerance: f64,
}

fn cmd_thresholds(args: ThresholdsArgs) -> Result<(), CliError> {
    let cfg = FileConfig::load(args.config.as_deref())?;
    let r = pick(args.r, &cfg, "r", DEFAULT_R)?;
    let sigma_prime2 = pick(
        args.sigma_prime2,
        &cfg,
        "sigma-prime2",
        DEFAULT_SIGMA_PRIME2,
    )?;
    let grid_n = pick(args.grid_n, &cfg, "grid-n", DEFAULT_GRID_N)?;
    let bins = pick(args.bins, &cfg, "bins", DEFAULT_BINS)?;
    let format = pick(args.format, &cfg, "format", OutputFormat::Json)?;

    let result = analysis::thresholds(r, sigma_prime2, grid_n, bins, THRESHOLD_TOL)?;
    let report = ThresholdReport {
        eta_star: result.eta_star,
        f_critical: result.f_critical,
        grid_resolution: result.grid_resolution,
        bins: result.bins,
        tolerance: result.tolerance,
    };
    let text = match format {
        OutputFormat::Json => to_json(&report)?,
        OutputFormat::Csv => format!(
            "eta_star,f_critical,grid_resolution,bins,tolerance\n{},{},{},{},{}\n",
            fmt_float(report.eta_star),
            fmt_float(report.f_critical),
            report.grid_resolution,
            report.bins,
            fmt_float(report.tolerance)
        ),
    };
    emit(pick_out(args.out, &cfg).as_deref(), &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parses_comments_blanks_and_spacing() {
        let cfg = FileConfig::parse("# comment\n\n r = 2.5 \nseed=7\n").unwrap();
        assert_eq!(cfg.raw("r"), Some("2.5"));
        assert_eq!(cfg.parsed::<f64>("r").unwrap(), Some(2.5));
        assert_eq!(cfg.parsed::<u64>("seed").unwrap(), Some(7));
        assert_eq!(cfg.raw("bins"), None);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let err = FileConfig::parse("squeeze = 3\n").unwrap_err();
        assert!(err.to_string().contains("unknown key"), "{err}");
    }

    #[test]
    fn config_rejects_malformed_and_duplicate_lines() {
        assert!(FileConfig::parse("r 3\n").is_err());
        assert!(FileConfig::parse("r = 1\nr = 2\n").is_err());
    }

    #[test]
    fn config_values_are_parsed_lazily_per_key() {
        let cfg = FileConfig::parse("r = abc\nbins = 40\n").unwrap();
        assert!(cfg.parsed::<f64>("r").is_err());
        assert_eq!(cfg.parsed::<usize>("bins").unwrap(), Some(40));
    }

    #[test]
    fn flags_override_config_which_overrides_defaults() {
        let cfg = FileConfig::parse("r = 2\n").unwrap();
        assert_eq!(pick(Some(3.0), &cfg, "r", 1.0).unwrap(), 3.0);
        assert_eq!(pick(None, &cfg, "r", 1.0).unwrap(), 2.0);
        assert_eq!(
            pick::<f64>(None, &cfg, "sigma-prime2", 100.0).unwrap(),
            100.0
        );
    }

    #[test]
    fn eta_shorthand_expands_within_its_own_layer() {
        let cfg = FileConfig::parse("eta = 0.9\n").unwrap();
        assert_eq!(resolve_etas(None, None, None, &cfg).unwrap(), (0.9, 0.9));
        // A flag overrides only its own component of the expanded pair.
        assert_eq!(
            resolve_etas(None, Some(0.5), None, &cfg).unwrap(),
            (0.5, 0.9)
        );
        assert_eq!(
            resolve_etas(Some(0.7), None, None, &cfg).unwrap(),
            (0.7, 0.7)
        );
        let empty = FileConfig::default();
        assert_eq!(resolve_etas(None, None, None, &empty).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn config_rejects_eta_alongside_its_components() {
        let cfg = FileConfig::parse("eta = 0.9\neta1 = 0.5\n").unwrap();
        let err = resolve_etas(None, None, None, &cfg).unwrap_err();
        assert!(err.to_string().contains("eta"), "{err}");
    }

    #[test]
    fn floats_print_nine_significant_digits() {
        assert_eq!(fmt_float(8.650017687644743), "8.65001769e0");
        assert_eq!(fmt_float(0.0001), "1.00000000e-4");
        assert_eq!(fmt_float(-1.0), "-1.00000000e0");
        assert_eq!(fmt_float(0.0), "0.00000000e0");
    }

    #[test]
    fn format_names_parse() {
        assert_eq!("json".parse::<OutputFormat>().unwrap(), OutputFormat::Json);
        assert_eq!("csv".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
        assert!("yaml".parse::<OutputFormat>().is_err());
    }

    #[test]
    fn exit_codes_map_error_kinds() {
        let domain = CliError::Lib(LibError::Domain("x".into()));
        let usage = CliError::Lib(LibError::Usage("x".into()));
        let io = CliError::Io(std::io::Error::other("x"));
        let estimation = CliError::Lib(LibError::Estimation {
            context: "x".into(),
            required: 30,
            got: 1,
        });
        let solver = CliError::Lib(LibError::Solver("x".into()));
        assert_eq!(domain.exit_code(), 2);
        assert_eq!(usage.exit_code(), 2);
        assert_eq!(io.exit_code(), 3);
        assert_eq!(estimation.exit_code(), 4);
        assert_eq!(solver.exit_code(), 5);
    }

    #[test]
    fn command_line_parses() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
