//! `derive`, `verify` and `evolve` subcommands.
//!
//! Every flag has a config-file key of the same name (dashes become
//! underscores). Flags override file values.
//!
//! Exit codes: 0 success, 1 a check failed, 2 invalid input, 3 caustic or
//! degenerate kernel.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::grid::{gaussian_packet, GridSpec, WaveFunctionGrid};
use crate::kernel_builder::{build_kernel, GaussianKernel};
use crate::phase_dynamics::{QuadraticHamiltonian, Representation};
use crate::reference_evolver::{apply_kernel, evolve};
use crate::verification::{run_suite, SuiteConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SINGULAR: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "schwinger", version, about = "Propagators of quadratic Hamiltonians")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the kernel and print its coefficients as JSON.
    Derive(RunConfig),
    /// Run the verification suite and print the report as JSON.
    Verify(RunConfig),
    /// Evolve a Gaussian packet and print the final state as JSON.
    Evolve(RunConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Kernel,
    Oracle,
}

/// Every setting, optional so that file and flags can be merged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Mass; sets the kinetic coefficient 1/(2m) unless --kinetic is given.
    #[arg(long)]
    pub m: Option<f64>,
    /// Oscillator frequency; sets the potential coefficient mω²/2 unless --potential is given.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Reduced Planck constant
    #[arg(long)]
    pub hbar: Option<f64>,
    /// Coefficient of P².
    #[arg(long)]
    pub kinetic: Option<f64>,
    /// Coefficient of X².
    #[arg(long)]
    pub potential: Option<f64>,
    /// Coefficient of (XP + PX)/2.
    #[arg(long)]
    pub cross: Option<f64>,
    /// Coefficient of P.
    #[arg(long = "linear-p")]
    pub linear_p: Option<f64>,
    /// Coefficient of X.
    #[arg(long = "linear-x")]
    pub linear_x: Option<f64>,
    /// Elapsed time.
    #[arg(long)]
    pub t: Option<f64>,
    /// Times checked by `verify`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    /// momentum (p) or position (x).
    #[arg(long)]
    pub rep: Option<Representation>,
    /// Seed for the sampled checks of `verify`
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also print the exponent in readable form.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub pretty: Option<bool>,
    /// Kernel JSON to check in place of the built one.
    #[arg(long = "kernel-file")]
    pub kernel_file: Option<PathBuf>,
    /// Propagate with the built kernel or with the split-step oracle
    #[arg(long, value_enum)]
    pub engine: Option<Engine>,
    /// Split-step count; defaults to ceil(t/1e-3).
    #[arg(long)]
    pub steps: Option<usize>,
    /// Packet centre in position.
    #[arg(long = "center-x")]
    pub center_x: Option<f64>,
    /// Packet centre in momentum.
    #[arg(long = "center-p")]
    pub center_p: Option<f64>,
    /// Packet width in the variable of the chosen representation.
    #[arg(long)]
    pub width: Option<f64>,
    /// Left end of the grid
    #[arg(long = "grid-min")]
    pub grid_min: Option<f64>,
    /// Right end of the grid (excluded)
    #[arg(long = "grid-max")]
    pub grid_max: Option<f64>,
    /// Number of grid samples (power of two).
    #[arg(long)]
    pub n: Option<usize>,
    /// Report zero runtimes so that repeated runs are byte-identical.
    #[arg(long = "omit-timing", num_args = 0..=1, default_missing_value = "true")]
    pub omit_timing: Option<bool>,
    /// JSON file with any of the keys above.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl RunConfig {
    /// `self` with every value set in `flags` replaced.
    pub fn merged(mut self, flags: &RunConfig) -> RunConfig {
        overlay!(self, flags; m, omega, hbar, kinetic, potential, cross, linear_p, linear_x, t, times, rep,
            seed, output, pretty, kernel_file, engine, steps, center_x, center_p, width, grid_min, grid_max, n,
            omit_timing);
        self
    }

    pub fn hamiltonian(&self) -> Result<QuadraticHamiltonian, Error> {
        let m = self.m.unwrap_or(1.0);
        let omega = self.omega.unwrap_or(1.0);
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::InvalidArgument(format!("mass must be positive, got {m}")));
        }
        if !omega.is_finite() || omega < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "omega must be non-negative, got {omega}"
            )));
        }
        QuadraticHamiltonian::new(
            self.kinetic.unwrap_or(1.0 / (2.0 * m)),
            self.potential.unwrap_or(0.5 * m * omega * omega),
            self.cross.unwrap_or(0.0),
            self.linear_p.unwrap_or(0.0),
            self.linear_x.unwrap_or(0.0),
            self.hbar.unwrap_or(1.0),
        )
    }

    pub fn time(&self) -> Result<f64, Error> {
        let t = self.t.unwrap_or(1.0);
        if !t.is_finite() || t <= 0.0 {
            return Err(Error::InvalidArgument(format!("time must be positive, got {t}")));
        }
        Ok(t)
    }

    pub fn rep(&self) -> Representation {
        self.rep.unwrap_or(Representation::Momentum)
    }

    pub fn grid(&self) -> GridSpec {
        let d = GridSpec::default();
        GridSpec {
            q_min: self.grid_min.unwrap_or(d.q_min),
            q_max: self.grid_max.unwrap_or(d.q_max),
            n: self.n.unwrap_or(d.n),
        }
    }
}

/// Outcome of one subcommand: the JSON to emit, extra lines, and exit code.
struct Outcome {
    json: String,
    extra: Vec<String>,
    code: i32,
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Caustic(_) | Error::DegenerateMap { .. } | Error::DegenerateKernel | Error::Unsupported(_) => {
            EXIT_SINGULAR
        }
        Error::Quadrature { .. } | Error::Inconsistent(_) => EXIT_CHECK_FAILED,
        _ => EXIT_INVALID,
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Error> {
    serde_json::to_string(value).map_err(|e| Error::InvalidArgument(e.to_string()))
}

fn load_config(flags: &RunConfig) -> Result<RunConfig, Error> {
    let base = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<RunConfig>(&text)
                .map_err(|e| Error::InvalidArgument(format!("bad config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    Ok(base.merged(flags))
}

fn derive(cfg: &RunConfig) -> Result<Outcome, Error> {
    let h = cfg.hamiltonian()?;
    let t = cfg.time()?;
    let k = build_kernel(&h, t, cfg.rep())?;
    let mut extra = Vec::new();
    if cfg.pretty.unwrap_or(false) {
        extra.push(k.pretty());
    }
    let code = if k.degenerate {
        let [a, b] = k.delta_energy.unwrap_or([0.0, 0.0]);
        extra.push(format!(
            "degenerate kernel: the momentum is conserved, so K(p',p) = δ(p' − p)·delta_phase(p) with \
             delta_phase(p) = exp(−i·({a}·p² + {b}·p)·{t}/{})",
            h.hbar
        ));
        EXIT_SINGULAR
    } else {
        EXIT_OK
    };
    Ok(Outcome {
        json: to_json(&k)?,
        extra,
        code,
    })
}

fn verify(cfg: &RunConfig) -> Result<Outcome, Error> {
    let h = cfg.hamiltonian()?;
    let supplied: Option<GaussianKernel> = match &cfg.kernel_file {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
            Some(
                serde_json::from_str(&text)
                    .map_err(|e| Error::InvalidArgument(format!("bad kernel file {}: {e}", path.display())))?,
            )
        }
        None => None,
    };
    let mut suite = SuiteConfig {
        rep: cfg.rep(),
        seed: cfg.seed.unwrap_or(0),
        grid: cfg.grid(),
        omit_timing: cfg.omit_timing.unwrap_or(false),
        ..SuiteConfig::default()
    };
    if let Some(times) = &cfg.times {
        suite.times = times.clone();
    } else if cfg.t.is_some() {
        suite.times = vec![cfg.time()?];
    }
    if let Some(steps) = cfg.steps {
        suite.oracle_steps = steps;
    }
    let report = run_suite(&h, &suite, supplied.as_ref())?;
    let extra = report
        .failures()
        .map(|e| {
            format!(
                "failed: {} residual {} threshold {}",
                e.check_name, e.residual, e.threshold
            )
        })
        .collect();
    Ok(Outcome {
        json: to_json(&report)?,
        extra,
        code: if report.overall { EXIT_OK } else { EXIT_CHECK_FAILED },
    })
}

#[derive(Debug, Serialize)]
struct EvolveRecord {
    engine: Engine,
    hamiltonian: QuadraticHamiltonian,
    time: f64,
    steps: Option<usize>,
    initial_norm: f64,
    final_norm: f64,
    /// `|⟨ψ(0)|ψ(t)⟩|`
    fidelity: f64,
    state: WaveFunctionGrid,
}

fn evolve_cmd(cfg: &RunConfig) -> Result<Outcome, Error> {
    let h = cfg.hamiltonian()?;
    let t = cfg.time()?;
    let rep = cfg.rep();
    let engine = cfg.engine.unwrap_or(Engine::Oracle);
    let center = (cfg.center_x.unwrap_or(0.0), cfg.center_p.unwrap_or(0.0));
    let psi = gaussian_packet(rep, center, cfg.width.unwrap_or(1.0), cfg.grid(), h.hbar)?;
    let (out, steps) = match engine {
        Engine::Oracle => {
            let steps = cfg
                .steps
                .unwrap_or_else(|| (t / crate::reference_evolver::DEFAULT_DT).ceil() as usize);
            (evolve(&psi, &h, t, Some(steps))?, Some(steps))
        }
        Engine::Kernel => {
            if cfg.steps == Some(0) {
                return Err(Error::StepCount { steps: 0, minimum: 1 });
            }
            (apply_kernel(&build_kernel(&h, t, rep)?, &psi)?, None)
        }
    };
    let overlap: Complex64 = psi.inner(&out)?;
    let record = EvolveRecord {
        engine,
        hamiltonian: h,
        time: t,
        steps,
        initial_norm: psi.norm_squared(),
        final_norm: out.norm_squared(),
        fidelity: overlap.norm(),
        state: out,
    };
    Ok(Outcome {
        json: to_json(&record)?,
        extra: Vec::new(),
        code: EXIT_OK,
    })
}

type Action = fn(&RunConfig) -> Result<Outcome, Error>;

/// Parses `args` (program name first), runs, writes, and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let (flags, action): (&RunConfig, Action) = match &cli.command {
        Command::Derive(a) => (a, derive),
        Command::Verify(a) => (a, verify),
        Command::Evolve(a) => (a, evolve_cmd),
    };
    let cfg = match load_config(flags) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_INVALID;
        }
    };
    let outcome = match action(&cfg) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return exit_code(&e);
        }
    };
    let written = match &cfg.output {
        Some(path) => fs::write(path, format!("{}\n", outcome.json)),
        None => writeln!(stdout, "{}", outcome.json),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: cannot write output: {e}");
        return EXIT_INVALID;
    }
    for line in &outcome.extra {
        // readable extras go to stdout for derive --pretty, diagnostics to stderr
        if outcome.code == EXIT_OK && cfg.pretty.unwrap_or(false) {
            let _ = writeln!(stdout, "{line}");
        } else {
            let _ = writeln!(stderr, "{line}");
        }
    }
    outcome.code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv: Vec<&str> = std::iter::once("schwinger").chain(args.iter().copied()).collect();
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn derive_quarter_period() {
        let (code, out, _) = run_capture(&[
            "derive", "--m", "1", "--omega", "1", "--t", "0.785398", "--rep", "momentum",
        ]);
        assert_eq!(code, 0);
        let k: GaussianKernel = serde_json::from_str(out.trim()).unwrap();
        assert!((k.a_t0.re + std::f64::consts::SQRT_2).abs() < 1e-6);
    }

    #[test]
    fn derive_free_momentum_is_degenerate() {
        let (code, _, err) = run_capture(&["derive", "--omega", "0", "--rep", "momentum"]);
        assert_eq!(code, 3);
        assert!(err.contains("delta_phase"), "{err}");
    }

    #[test]
    fn derive_rejects_zero_time() {
        let (code, _, err) = run_capture(&["derive", "--t", "0"]);
        assert_eq!(code, 2);
        assert!(err.contains("time must be positive"));
    }

    #[test]
    fn derive_at_caustic() {
        let (code, _, err) = run_capture(&["derive", "--t", "3.2"]);
        assert_eq!(code, 3);
        assert!(err.contains("caustic"));
    }

    #[test]
    fn pretty_output() {
        let (code, out, _) = run_capture(&["derive", "--t", "0.785398163397448", "--pretty"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].contains("(p'² + p²)"));
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(&path, r#"{"omega": 2.0, "t": 0.5, "rep": "position"}"#).unwrap();
        let file_only = RunConfig {
            config: Some(path.clone()),
            ..RunConfig::default()
        };
        let cfg = load_config(&file_only).unwrap();
        assert_eq!(cfg.omega, Some(2.0));
        assert_eq!(cfg.rep(), Representation::Position);
        let flags = RunConfig {
            config: Some(path),
            t: Some(0.25),
            ..RunConfig::default()
        };
        let cfg = load_config(&flags).unwrap();
        assert_eq!(cfg.t, Some(0.25));
        assert_eq!(cfg.omega, Some(2.0));
    }

    #[test]
    fn unknown_config_key_is_invalid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(&path, r#"{"omgea": 2.0}"#).unwrap();
        let (code, _, _) = run_capture(&["derive", "--config", path.to_str().unwrap()]);
        assert_eq!(code, 2);
    }

    #[test]
    fn zero_steps_is_invalid() {
        let (code, _, _) = run_capture(&["evolve", "--t", "0.5", "--steps", "0"]);
        assert_eq!(code, 2);
    }
}
