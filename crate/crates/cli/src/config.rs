//! Command-line parsing and resolution into a [`RunManifest`].
//!
//! Precedence, highest first: command-line flags, the `--config` file, the
//! `SBHE_OUT_DIR` environment variable (output directory only), built-in defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sbhe_core::nonlinear::{InitialCondition, ModelParams, MONOTONICITY_THRESHOLD};

pub const OUT_DIR_ENV: &str = "SBHE_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "sbhe-output";
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_SAMPLES: usize = 100_000;
const DEFAULT_MODES: [usize; 4] = [16, 32, 64, 128];

#[derive(Debug, Parser)]
#[command(
    name = "sbhe",
    version,
    about = "Tamed exponential spectral-Galerkin solver for the stochastic Burgers-Huxley equation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate strong errors and convergence rates over a list of mode counts.
    Convergence(CommonArgs),
    /// Run one trajectory and write grid snapshots.
    Simulate(CommonArgs),
    /// Run the built-in property checks.
    Check {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        check: CheckArgs,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat `key = value` file; keys mirror the long flag names.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Reaction strength ν (> 0).
    #[arg(long)]
    pub nu: Option<f64>,
    /// Reaction threshold θ, in (0, 1).
    #[arg(long)]
    pub theta: Option<f64>,
    /// Final time T.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Comma-separated mode counts N (powers of two for `convergence`).
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub modes: Option<Vec<usize>>,
    /// Time steps M, one per mode count; default M = N².
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub steps: Option<Vec<usize>>,
    /// Number of Monte-Carlo trajectories.
    #[arg(long)]
    pub mtraj: Option<usize>,
    /// Master seed, decimal or 0x-prefixed hexadecimal.
    #[arg(long, value_parser = parse_seed)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Record moment statistics along the trajectories.
    #[arg(long)]
    pub probe: bool,
    /// Reject ν ≤ 1/6 instead of warning.
    #[arg(long)]
    pub strict_monotonicity: bool,
    /// Comma-separated snapshot times for `simulate`.
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub snapshots: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CheckArgs {
    /// Restrict to one group of checks.
    #[arg(long = "check", value_enum, value_name = "GROUP")]
    pub group: Option<CheckGroup>,
    /// Sample count for the statistical noise checks.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Deliberately break an operator to confirm the checks notice.
    #[arg(long, value_enum)]
    pub inject_fault: Option<Fault>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckGroup {
    Basis,
    Nonlinear,
    Noise,
    Integrator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    /// Flip the sign of the exact Burgers projection.
    BurgersSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Convergence,
    Simulate,
    Check,
}

/// Fully resolved run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: CommandKind,
    pub nu: f64,
    pub theta: f64,
    pub horizon: f64,
    pub initial_condition: InitialCondition,
    pub mode_counts: Vec<usize>,
    pub steps: Option<Vec<usize>>,
    pub n_trajectories: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub probe: bool,
    pub strict_monotonicity: bool,
    pub snapshots: Option<Vec<f64>>,
    pub check_group: Option<CheckGroup>,
    pub samples: usize,
    pub fault: Option<Fault>,
    /// Non-fatal notices produced while resolving.
    pub warnings: Vec<String>,
}

impl RunManifest {
    /// Model parameters; fails for `T = 0`, which only `simulate` accepts.
    pub fn params(&self) -> sbhe_core::Result<ModelParams> {
        ModelParams::new(
            self.nu,
            self.theta,
            self.horizon,
            self.initial_condition.clone(),
        )
    }

    /// Explicit step counts, or `N²`.
    pub fn step_counts(&self) -> Vec<usize> {
        match &self.steps {
            Some(s) => s.clone(),
            None => self.mode_counts.iter().map(|n| n * n).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

pub fn parse_seed(s: &str) -> Result<u64, String> {
    let t = s.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

fn parse_list<T: std::str::FromStr>(key: &str, s: &str) -> Result<Vec<T>, UsageError>
where
    T::Err: fmt::Display,
{
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|e| usage(format!("config key {key}: invalid entry {p:?}: {e}")))
        })
        .collect()
}

fn parse_value<T: std::str::FromStr>(key: &str, s: &str) -> Result<T, UsageError>
where
    T::Err: fmt::Display,
{
    s.parse()
        .map_err(|e| usage(format!("config key {key}: invalid value {s:?}: {e}")))
}

fn parse_bool(key: &str, s: &str) -> Result<bool, UsageError> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(usage(format!(
            "config key {key}: expected true or false, got {s:?}"
        ))),
    }
}

const CONFIG_KEYS: [&str; 14] = [
    "nu",
    "theta",
    "horizon",
    "modes",
    "steps",
    "mtraj",
    "seed",
    "out",
    "probe",
    "strict-monotonicity",
    "snapshots",
    "check",
    "samples",
    "inject-fault",
];

/// Reads `key = value` lines. `#` starts a comment; blank lines are skipped;
/// unknown and repeated keys are errors.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config file {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, UsageError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("line {}: expected key = value", i + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(usage(format!("line {}: unknown key {key:?}", i + 1)));
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(usage(format!("line {}: key {key:?} given twice", i + 1)));
        }
    }
    Ok(out)
}

/// Merges flags, config file, environment and defaults, then validates.
pub fn resolve(
    command: CommandKind,
    args: &CommonArgs,
    check: &CheckArgs,
    env_out_dir: Option<PathBuf>,
) -> Result<RunManifest, UsageError> {
    let file = match &args.config {
        Some(p) => read_config_file(p)?,
        None => BTreeMap::new(),
    };
    let get = |k: &str| file.get(k).map(String::as_str);

    macro_rules! pick {
        ($flag:expr, $key:literal, $parse:expr, $default:expr) => {
            match ($flag, get($key)) {
                (Some(v), _) => v,
                (None, Some(s)) => $parse($key, s)?,
                (None, None) => $default,
            }
        };
    }

    let nu: f64 = pick!(args.nu, "nu", parse_value, 1.0);
    let theta: f64 = pick!(args.theta, "theta", parse_value, 0.5);
    let horizon: f64 = pick!(args.horizon, "horizon", parse_value, 1.0);
    let mode_counts: Vec<usize> = pick!(
        args.modes.clone(),
        "modes",
        parse_list,
        DEFAULT_MODES.to_vec()
    );
    let steps: Option<Vec<usize>> = pick!(
        args.steps.clone().map(Some),
        "steps",
        |k, s| parse_list(k, s).map(Some),
        None
    );
    let n_trajectories: usize = pick!(args.mtraj, "mtraj", parse_value, 100);
    let seed: u64 = pick!(
        args.seed,
        "seed",
        |k: &str, s: &str| parse_seed(s).map_err(|e| usage(format!("config key {k}: {e}"))),
        DEFAULT_SEED
    );
    let out_dir: PathBuf = pick!(
        args.out.clone(),
        "out",
        |_: &str, s: &str| Ok::<_, UsageError>(PathBuf::from(s)),
        env_out_dir.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    );
    let probe = args.probe
        || get("probe")
            .map(|s| parse_bool("probe", s))
            .transpose()?
            .unwrap_or(false);
    let strict_monotonicity = args.strict_monotonicity
        || get("strict-monotonicity")
            .map(|s| parse_bool("strict-monotonicity", s))
            .transpose()?
            .unwrap_or(false);
    let snapshots: Option<Vec<f64>> = pick!(
        args.snapshots.clone().map(Some),
        "snapshots",
        |k, s| parse_list(k, s).map(Some),
        None
    );
    let check_group: Option<CheckGroup> = pick!(
        check.group.map(Some),
        "check",
        |k: &str, s: &str| {
            CheckGroup::from_str(s, true)
                .map(Some)
                .map_err(|e| usage(format!("config key {k}: {e}")))
        },
        None
    );
    let samples: usize = pick!(check.samples, "samples", parse_value, DEFAULT_SAMPLES);
    let fault: Option<Fault> = pick!(
        check.inject_fault.map(Some),
        "inject-fault",
        |k: &str, s: &str| {
            Fault::from_str(s, true)
                .map(Some)
                .map_err(|e| usage(format!("config key {k}: {e}")))
        },
        None
    );

    let mut warnings = Vec::new();
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(usage(format!("--nu must be positive, got {nu}")));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(usage(format!("--theta must lie in (0, 1), got {theta}")));
    }
    let horizon_ok = if command == CommandKind::Simulate {
        horizon >= 0.0
    } else {
        horizon > 0.0
    };
    if !horizon_ok || !horizon.is_finite() {
        return Err(usage(format!("--horizon must be positive, got {horizon}")));
    }
    if nu <= MONOTONICITY_THRESHOLD {
        if strict_monotonicity {
            return Err(usage(format!(
                "--nu {nu} is not above 1/6, required under --strict-monotonicity"
            )));
        }
        warnings.push(format!(
            "nu = {nu} is not above 1/6; the scheme runs but the monotonicity-based guarantees do not apply"
        ));
    }
    if mode_counts.is_empty() || mode_counts.contains(&0) {
        return Err(usage("--modes needs at least one positive mode count"));
    }
    if let Some(s) = &steps {
        if s.len() != mode_counts.len() {
            return Err(usage(format!(
                "--steps has {} entries but --modes has {}",
                s.len(),
                mode_counts.len()
            )));
        }
        if s.contains(&0) {
            return Err(usage("--steps entries must be positive"));
        }
    }
    if command == CommandKind::Convergence {
        if mode_counts.len() < 2 {
            return Err(usage("convergence needs at least two mode counts"));
        }
        if let Some(n) = mode_counts.iter().find(|n| **n < 2 || !n.is_power_of_two()) {
            return Err(usage(format!(
                "mode count {n} is not a power of two of at least 2"
            )));
        }
        if mode_counts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(usage("mode counts must be strictly ascending"));
        }
        if let Some(s) = &steps {
            if let Some(m) = s.iter().find(|m| *m % 2 != 0) {
                return Err(usage(format!("step count {m} must be even")));
            }
        }
    }
    if n_trajectories == 0 {
        return Err(usage("--mtraj must be at least 1"));
    }
    if samples < 2 {
        return Err(usage("--samples must be at least 2"));
    }
    if let Some(times) = &snapshots {
        if let Some(t) = times.iter().find(|t| !(**t >= 0.0 && **t <= horizon)) {
            return Err(usage(format!("snapshot time {t} outside [0, {horizon}]")));
        }
    }

    Ok(RunManifest {
        command,
        nu,
        theta,
        horizon,
        initial_condition: InitialCondition::SinePi,
        mode_counts,
        steps,
        n_trajectories,
        seed,
        out_dir,
        probe,
        strict_monotonicity,
        snapshots,
        check_group,
        samples,
        fault,
        warnings,
    })
}

/// Resolves a parsed command line, reading the environment.
pub fn manifest_from_cli(cli: &Cli) -> Result<RunManifest, UsageError> {
    let env_out = std::env::var_os(OUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from);
    match &cli.command {
        Command::Convergence(a) => {
            resolve(CommandKind::Convergence, a, &CheckArgs::default(), env_out)
        }
        Command::Simulate(a) => resolve(CommandKind::Simulate, a, &CheckArgs::default(), env_out),
        Command::Check { common, check } => resolve(CommandKind::Check, common, check, env_out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(cmd: CommandKind, args: &[&str]) -> Result<RunManifest, UsageError> {
        let mut argv = vec!["sbhe", "convergence"];
        argv.extend_from_slice(args);
        let cli = Cli::try_parse_from(argv).unwrap();
        let Command::Convergence(a) = cli.command else {
            unreachable!()
        };
        resolve(cmd, &a, &CheckArgs::default(), None)
    }

    #[test]
    fn defaults_are_the_reference_experiment() {
        let m = manifest(CommandKind::Convergence, &[]).unwrap();
        assert_eq!((m.nu, m.theta, m.horizon), (1.0, 0.5, 1.0));
        assert_eq!(m.initial_condition, InitialCondition::SinePi);
        assert_eq!(m.mode_counts, vec![16, 32, 64, 128]);
        assert_eq!(m.step_counts(), vec![256, 1024, 4096, 16384]);
        assert_eq!(m.n_trajectories, 100);
        assert_eq!(m.out_dir, PathBuf::from(DEFAULT_OUT_DIR));
        assert!(m.warnings.is_empty());
    }

    #[test]
    fn seed_radix_equivalence() {
        let a = manifest(CommandKind::Convergence, &["--seed", "0xDEADBEEF"]).unwrap();
        let b = manifest(CommandKind::Convergence, &["--seed", "3735928559"]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.seed, 3735928559);
        assert!(parse_seed("0xZZ").is_err());
        assert!(parse_seed("-3").is_err());
    }

    #[test]
    fn small_nu_warns_or_fails() {
        let m = manifest(CommandKind::Convergence, &["--nu", "0.1"]).unwrap();
        assert_eq!(m.warnings.len(), 1);
        assert!(manifest(
            CommandKind::Convergence,
            &["--nu", "0.1", "--strict-monotonicity"]
        )
        .is_err());
        assert!(manifest(
            CommandKind::Convergence,
            &["--nu", "0.2", "--strict-monotonicity"]
        )
        .is_ok());
    }

    #[test]
    fn range_checks() {
        for bad in [
            &["--nu", "0"][..],
            &["--theta", "1"],
            &["--horizon", "0"],
            &["--modes", "16"],
            &["--modes", "16,24"],
            &["--modes", "32,16"],
            &["--modes", "4,8", "--steps", "16"],
            &["--mtraj", "0"],
        ] {
            assert!(manifest(CommandKind::Convergence, bad).is_err(), "{bad:?}");
        }
        assert!(manifest(CommandKind::Simulate, &["--horizon", "0"]).is_ok());
        assert!(manifest(CommandKind::Simulate, &["--modes", "12"]).is_ok());
    }

    #[test]
    fn config_file_sits_between_flags_and_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(
            &path,
            "# study\nnu = 2\ntheta=0.25\nmodes = 8, 16\nseed = 0x10\nprobe = true\n",
        )
        .unwrap();
        let p = path.to_str().unwrap();
        let m = manifest(CommandKind::Convergence, &["--config", p, "--nu", "3"]).unwrap();
        assert_eq!((m.nu, m.theta, m.seed), (3.0, 0.25, 16));
        assert_eq!(m.mode_counts, vec![8, 16]);
        assert!(m.probe);
        assert_eq!(m.n_trajectories, 100);
    }

    #[test]
    fn env_out_dir_below_config_and_flag() {
        let cli = Cli::try_parse_from(["sbhe", "simulate"]).unwrap();
        let Command::Simulate(a) = cli.command else {
            unreachable!()
        };
        let m = resolve(
            CommandKind::Simulate,
            &a,
            &CheckArgs::default(),
            Some("envdir".into()),
        )
        .unwrap();
        assert_eq!(m.out_dir, PathBuf::from("envdir"));
        let a = CommonArgs {
            out: Some("flagdir".into()),
            ..a
        };
        let m = resolve(
            CommandKind::Simulate,
            &a,
            &CheckArgs::default(),
            Some("envdir".into()),
        )
        .unwrap();
        assert_eq!(m.out_dir, PathBuf::from("flagdir"));
    }

    #[test]
    fn config_parser_rejects_garbage() {
        assert!(parse_config("nu 1").is_err());
        assert!(parse_config("viscosity = 1").is_err());
        assert!(parse_config("nu = 1\nnu = 2").is_err());
        let ok = parse_config("  # only a comment\n\n--strict_monotonicity = yes\n").unwrap();
        assert_eq!(
            ok.get("strict-monotonicity").map(String::as_str),
            Some("yes")
        );
    }

    #[test]
    fn unknown_flags_are_rejected() {
        assert!(Cli::try_parse_from(["sbhe", "convergence", "--viscosity", "1"]).is_err());
        assert!(Cli::try_parse_from(["sbhe", "convergence", "--samples", "10"]).is_err());
        assert!(
            Cli::try_parse_from(["sbhe", "check", "--samples", "10", "--check", "noise"]).is_ok()
        );
    }
}
