//! Command-line front end: analytic S values, θ sweeps, emulated
//! experiments and optical-circuit verification.
//!
//! Angles cross the command line in degrees and are converted once, in
//! [`radians`], before reaching the library.

pub mod format;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

use weakbell::bell::{default_settings, predicted_svalues, sweep, SValues};
use weakbell::montecarlo::{run_experiment, ExperimentConfig, ExperimentConfigDocument};
use weakbell::optics::{
    build_fig2a_circuit, build_fig2b_circuit, compile_to_kraus, target_kraus_pair, verify_equivalence, Circuit,
    CircuitDescription, ElementKind,
};
use weakbell::qcore::{singlet, BlochDirection, Outcome};
use weakbell::weakmeas::WeakMeasurement;

use format::sig;

pub const SWEEP_HEADER: [&str; 7] = ["theta_deg", "F", "G", "S_AB1_analytic", "S_AB2_analytic", "S_AB1_sim", "S_AB2_sim"];
pub const SIMULATE_HEADER: [&str; 8] = [
    "theta_deg",
    "S_AB1",
    "S_AB1_sigma",
    "S_AB2",
    "S_AB2_sigma",
    "sigmas_above_2_AB1",
    "sigmas_above_2_AB2",
    "seed",
];

/// Largest compiled-vs-abstract deviation `verify-circuit` accepts.
pub const VERIFY_TOL: f64 = 1e-9;

const CSV_DIGITS: usize = 10;
const REPORT_DIGITS: usize = 6;

#[derive(Debug, Parser)]
#[command(name = "weakbell", version, about = "Sequential weak-measurement CHSH simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form F, G and both S values at one measurement angle.
    Svalues {
        #[arg(long, allow_negative_numbers = true)]
        theta_deg: f64,
    },
    /// Analytic and exactly simulated S values over a range of angles, as CSV.
    Sweep {
        #[arg(long, allow_negative_numbers = true)]
        from_deg: f64,
        #[arg(long, allow_negative_numbers = true)]
        to_deg: f64,
        #[arg(long, allow_negative_numbers = true)]
        step_deg: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emulated photon-counting experiment from a JSON config, as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compares the compiled optical circuits with the abstract Kraus pair.
    VerifyCircuit {
        #[arg(long, allow_negative_numbers = true)]
        theta_deg: f64,
        #[arg(long, allow_negative_numbers = true)]
        phi_deg: f64,
        /// Writes the two-output circuit as JSON.
        #[arg(long)]
        dump_circuit: Option<PathBuf>,
        /// Verifies a JSON circuit in place of the built two-output one.
        #[arg(long)]
        load_circuit: Option<PathBuf>,
        /// Debug: rotates HWP3 by this many degrees in every circuit.
        #[arg(long, hide = true, allow_negative_numbers = true)]
        perturb_deg: Option<f64>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config {path}: {reason}")]
    Config { path: String, reason: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] weakbell::Error),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

fn radians(deg: f64) -> f64 {
    deg.to_radians()
}

/// `(F, G)` of the optimal pointer at `theta`.
fn quality_and_precision(theta: f64) -> Result<(f64, f64), CliError> {
    let wm = WeakMeasurement::new(theta, BlochDirection::Z)?;
    Ok((wm.quality_factor(), wm.precision()))
}

fn check_theta_deg(name: &str, deg: f64) -> Result<(), CliError> {
    if !(0.0..=90.0).contains(&deg) {
        return Err(CliError::Usage(format!("--{name} must lie in [0, 90], got {deg}")));
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                1
            } else {
                let _ = write!(out, "{}", e.render());
                0
            };
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Svalues { theta_deg } => cmd_svalues(*theta_deg, out),
        Command::Sweep { from_deg, to_deg, step_deg, out: path } => cmd_sweep(*from_deg, *to_deg, *step_deg, path),
        Command::Simulate { config, out: path, seed } => cmd_simulate(config, path, *seed),
        Command::VerifyCircuit {
            theta_deg,
            phi_deg,
            dump_circuit,
            load_circuit,
            perturb_deg,
        } => cmd_verify_circuit(
            *theta_deg,
            *phi_deg,
            VerifyOptions {
                dump: dump_circuit.as_deref(),
                load: load_circuit.as_deref(),
                perturb_deg: *perturb_deg,
            },
            out,
        ),
    }
}

pub fn cmd_svalues(theta_deg: f64, out: &mut dyn Write) -> Result<(), CliError> {
    check_theta_deg("theta-deg", theta_deg)?;
    let theta = radians(theta_deg);
    let s = predicted_svalues(theta)?;
    let (f, g) = quality_and_precision(theta)?;
    let (v1, v2) = s.violations();
    let lines = [
        ("theta_deg", sig(theta_deg, CSV_DIGITS)),
        ("F", sig(f, REPORT_DIGITS)),
        ("G", sig(g, REPORT_DIGITS)),
        ("S_AB1", sig(s.s_ab1, REPORT_DIGITS)),
        ("S_AB2", sig(s.s_ab2, REPORT_DIGITS)),
        ("violation_AB1", v1.to_string()),
        ("violation_AB2", v2.to_string()),
        ("double_violation", s.is_double_violation().to_string()),
    ];
    for (k, v) in lines {
        writeln!(out, "{k:<17}{v}").map_err(io_err(Path::new("<stdout>")))?;
    }
    Ok(())
}

/// Angles `from, from + step, …` not exceeding `to`.
pub fn sweep_angles_deg(from: f64, to: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step.is_finite() && step > 0.0) {
        return Err(CliError::Usage(format!("--step-deg must be positive, got {step}")));
    }
    if from > to {
        return Err(CliError::Usage(format!("--from-deg ({from}) exceeds --to-deg ({to})")));
    }
    check_theta_deg("from-deg", from)?;
    check_theta_deg("to-deg", to)?;
    let n = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| from + i as f64 * step).collect())
}

pub fn cmd_sweep(from: f64, to: f64, step: f64, path: &Path) -> Result<(), CliError> {
    let degs = sweep_angles_deg(from, to, step)?;
    let thetas: Vec<f64> = degs.iter().map(|&d| radians(d)).collect();
    let points = sweep(&thetas, &default_settings(), &singlet())?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SWEEP_HEADER)?;
    for (deg, p) in degs.iter().zip(&points) {
        let SValues { s_ab1, s_ab2 } = p.analytic;
        let (f, g) = quality_and_precision(p.theta)?;
        w.write_record([
            sig(*deg, CSV_DIGITS),
            sig(f, CSV_DIGITS),
            sig(g, CSV_DIGITS),
            sig(s_ab1, CSV_DIGITS),
            sig(s_ab2, CSV_DIGITS),
            sig(p.simulated.s_ab1, CSV_DIGITS),
            sig(p.simulated.s_ab2, CSV_DIGITS),
        ])?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Reads and validates a config document; errors name the offending field.
pub fn load_config(path: &Path) -> Result<(ExperimentConfigDocument, ExperimentConfig), CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let config_err = |reason: String| CliError::Config {
        path: path.display().to_string(),
        reason,
    };
    let mut de = serde_json::Deserializer::from_str(&text);
    let doc: ExperimentConfigDocument = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        if field == "." {
            e.inner().to_string()
        } else {
            format!("field `{field}`: {}", e.inner())
        }
    })
    .map_err(config_err)?;
    let cfg = ExperimentConfig::try_from(doc.clone()).map_err(|e| config_err(e.to_string()))?;
    Ok((doc, cfg))
}

pub fn cmd_simulate(config: &Path, path: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let (doc, mut cfg) = load_config(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let points = run_experiment(&cfg)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SIMULATE_HEADER)?;
    for (deg, p) in doc.thetas_deg.iter().zip(&points) {
        w.write_record([
            sig(*deg, CSV_DIGITS),
            sig(p.ab1.s, CSV_DIGITS),
            sig(p.ab1.sigma, CSV_DIGITS),
            sig(p.ab2.s, CSV_DIGITS),
            sig(p.ab2.sigma, CSV_DIGITS),
            sig(p.ab1.sigmas_above_2, CSV_DIGITS),
            sig(p.ab2.sigmas_above_2, CSV_DIGITS),
            cfg.seed.to_string(),
        ])?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

#[derive(Clone, Copy, Debug, Default)]
pub struct VerifyOptions<'a> {
    pub dump: Option<&'a Path>,
    pub load: Option<&'a Path>,
    pub perturb_deg: Option<f64>,
}

fn perturb(circuit: Circuit, offset_deg: Option<f64>) -> Result<Circuit, CliError> {
    let Some(offset) = offset_deg else {
        return Ok(circuit);
    };
    let angle = circuit
        .elements
        .iter()
        .find_map(|e| match (&e.kind, e.label.as_str()) {
            (ElementKind::Hwp { angle, .. }, "HWP3") => Some(*angle),
            _ => None,
        })
        .ok_or_else(|| CliError::Usage("circuit has no HWP3 to perturb".into()))?;
    Ok(circuit.with_plate_angle("HWP3", angle + radians(offset))?)
}

/// Max deviation per circuit, in report order.
pub fn verify_deviations(theta_deg: f64, phi_deg: f64, opts: VerifyOptions<'_>) -> Result<Vec<(String, f64)>, CliError> {
    check_theta_deg("theta-deg", theta_deg)?;
    if !phi_deg.is_finite() {
        return Err(CliError::Usage(format!("--phi-deg must be finite, got {phi_deg}")));
    }
    let (theta, phi) = (radians(theta_deg), radians(phi_deg));
    let target = target_kraus_pair(theta, phi)?;

    let two_output = match opts.load {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            let desc: CircuitDescription = serde_json::from_str(&text).map_err(|e| CliError::Config {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?;
            Circuit::from_description(&desc)?
        }
        None => build_fig2a_circuit(theta, phi)?,
    };
    if let Some(path) = opts.dump {
        let json = serde_json::to_string_pretty(&two_output.to_description()).expect("circuit serializes");
        fs::write(path, json).map_err(io_err(path))?;
    }

    let mut circuits = vec![("fig2a".to_string(), two_output)];
    for o in Outcome::BOTH {
        circuits.push((format!("fig2b({:+})", o.value()), build_fig2b_circuit(theta, phi, o)?));
    }
    circuits
        .into_iter()
        .map(|(name, circuit)| {
            let circuit = perturb(circuit, opts.perturb_deg)?;
            let dev = match compile_to_kraus(&circuit) {
                Ok(compiled) => verify_equivalence(&compiled, &target),
                Err(e) => return Err(CliError::Verification(format!("{name}: {e}"))),
            };
            Ok((name, dev))
        })
        .collect()
}

pub fn cmd_verify_circuit(theta_deg: f64, phi_deg: f64, opts: VerifyOptions<'_>, out: &mut dyn Write) -> Result<(), CliError> {
    let devs = verify_deviations(theta_deg, phi_deg, opts)?;
    let stdout = Path::new("<stdout>");
    for (name, dev) in &devs {
        writeln!(out, "{name:<10} max_deviation {}", sig(*dev, 3)).map_err(io_err(stdout))?;
    }
    let worst = devs.iter().map(|(_, d)| *d).fold(0.0, f64::max);
    if worst > VERIFY_TOL {
        writeln!(out, "result     FAIL").map_err(io_err(stdout))?;
        return Err(CliError::Verification(format!(
            "max deviation {} exceeds {}",
            sig(worst, 3),
            sig(VERIFY_TOL, 3)
        )));
    }
    writeln!(out, "result     PASS").map_err(io_err(stdout))?;
    Ok(())
}
