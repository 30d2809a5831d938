//! Command-line front end.
//!
//! [`run`] takes the full argument vector and two sinks, so the binary and
//! the tests drive exactly the same code. Data goes to `out`, diagnostics to
//! `err`. Exit codes: 0 success, 1 validation error, 2 parse error.

use std::ffi::OsString;
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, ParseError};
use crate::medium::{self, CrossSection, JumpClosure, MediumSpec, Resonance, TransitRequest};
use crate::particles::{self, MassHierarchy, TiePolicy};
use crate::temporal::{self, DiffOptions, MassiveState, TabulatedResponse, DEFAULT_POLE_EPSILON};
use crate::transport::{self, ExitRule, TransportResult, WalkConfig};
use crate::uncertainty::{self, OperatorPairState, ProcessKind, WavepacketGrid};

/// Environment variable holding the default output format.
pub const FORMAT_ENV: &str = "EVANESCENT_FORMAT";

/// Every library operation and the one subcommand that exposes it.
pub const OPERATIONS: &[(&str, &str)] = &[
    ("temporal::temporal_pair", "tau pair"),
    ("temporal::photon_propagator_times", "tau propagator"),
    ("temporal::mixed_formation_time", "tau mixed"),
    ("temporal::renormalized_formation_time", "tau renorm"),
    ("temporal::formation_path", "tau path"),
    ("temporal::massive_temporal", "tau massive"),
    ("temporal::massive_formation_leading", "tau leading"),
    ("medium::free_path", "medium free-path"),
    ("medium::tunneling_condition", "medium tunneling"),
    ("medium::marginal_detuning", "medium tunneling"),
    ("medium::wavelength_condition", "medium wavelength"),
    ("medium::resonant_cross_section", "medium resonant-sigma"),
    ("medium::resonance_condition", "medium resonance"),
    ("medium::transit_prediction", "transit"),
    ("medium::closure_speed_ratio", "transit"),
    ("transport::simulate", "mc"),
    ("transport::sweep", "mc"),
    ("uncertainty::minimal_time", "bounds min-time"),
    ("uncertainty::transition_probability", "bounds probability"),
    ("uncertainty::transition_maxima", "bounds maxima"),
    ("uncertainty::rs_bound", "bounds rs"),
    ("uncertainty::mt_projector_bound", "bounds projector"),
    ("uncertainty::wigner_spreads", "bounds spreads"),
    ("particles::load_particle_table", "particles"),
    ("particles::uncertainty_product", "particles"),
    ("particles::lifetime_bound", "particles"),
    ("particles::allowed_transmutations", "particles transmute"),
    ("particles::neutrino_mass_estimate", "particles neutrino"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Parser)]
#[command(
    name = "evanescent",
    version,
    about = "Scattering time functions, superluminal transit and energy-time bounds"
)]
pub struct Cli {
    /// Output format (default from EVANESCENT_FORMAT, else json).
    #[arg(long, global = true, value_enum, env = FORMAT_ENV, default_value = "json")]
    format: Format,
    /// key = value file applied to the selected subcommand; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Delay and formation times.
    Tau {
        #[command(subcommand)]
        op: TauOp,
    },
    /// Feasibility conditions for tunneling in a medium.
    Medium {
        #[command(subcommand)]
        op: MediumOp,
    },
    /// Deterministic transit prediction.
    Transit(TransitArgs),
    /// Monte Carlo transit simulation.
    Mc(McArgs),
    /// Energy-time uncertainty relations.
    Bounds {
        #[command(subcommand)]
        op: BoundsOp,
    },
    /// Transmutation products, lifetime bounds, transmutation graph and the
    /// neutrino estimate.
    Particles(ParticlesArgs),
}

#[derive(Debug, Clone, Copy, Args)]
struct PoleArg {
    /// Distance from a pole or mass shell inside which evaluation is refused.
    #[arg(long, default_value_t = DEFAULT_POLE_EPSILON)]
    pole_epsilon: f64,
}

#[derive(Debug, Subcommand)]
enum TauOp {
    /// τ of a tabulated response (rows: omega re im).
    Pair {
        #[arg(long, value_name = "FILE")]
        response: PathBuf,
        /// Angular frequency, rad/s.
        #[arg(long)]
        omega: f64,
        /// Wavenumber passed through to the response, rad/m.
        #[arg(long)]
        k: Option<f64>,
        /// Finite-difference half-width, rad/s (default 1e-6·|omega|).
        #[arg(long)]
        step: Option<f64>,
        /// Richardson-extrapolate the derivative.
        #[arg(long)]
        richardson: bool,
    },
    /// Photon propagator off the light cone.
    Propagator {
        #[arg(long)]
        omega: f64,
        /// |k|, rad/m.
        #[arg(long)]
        k: f64,
        #[command(flatten)]
        pole: PoleArg,
    },
    /// Formation time −(r/c)·cot(ωr/c).
    Mixed {
        #[arg(long)]
        omega: f64,
        /// Distance, m.
        #[arg(long)]
        r: f64,
        #[command(flatten)]
        pole: PoleArg,
    },
    /// Coulomb-subtracted series for the formation time.
    Renorm {
        #[arg(long)]
        omega: f64,
        #[arg(long)]
        r: f64,
        /// Number of explicit terms before the tail estimate.
        #[arg(long, default_value_t = 1000)]
        terms: u64,
        #[command(flatten)]
        pole: PoleArg,
    },
    /// Formation path πc/|Δω|.
    Path {
        /// Detuning, rad/s.
        #[arg(long)]
        delta_omega: f64,
    },
    /// Massive Green function, natural units.
    Massive {
        #[arg(long)]
        energy: f64,
        #[arg(long)]
        mass: f64,
        #[arg(long)]
        r: f64,
        #[command(flatten)]
        pole: PoleArg,
    },
    /// Leading massive formation term −E/(E² − m²), natural units.
    Leading {
        #[arg(long)]
        energy: f64,
        #[arg(long)]
        mass: f64,
        #[command(flatten)]
        pole: PoleArg,
    },
}

#[derive(Debug, Subcommand)]
enum MediumOp {
    /// ℓ = 1/(ρσ); σ defaults to Thomson.
    FreePath {
        /// Scatterer density, m⁻³.
        #[arg(long)]
        rho: f64,
        /// Cross-section, m².
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Formation path against free path, with the marginal detuning.
    Tunneling {
        #[arg(long)]
        delta_omega: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Off-resonance test λ > 2/(ρσ_T).
    Wavelength {
        /// Wavelength, m.
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        rho: f64,
    },
    /// Resonant cross-section λ²Γ²/(π(Δω² + Γ²/4)).
    ResonantSigma {
        #[arg(long)]
        lambda: f64,
        /// Line width, rad/s.
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        delta_omega: f64,
    },
    /// |Δω| ≤ cρλ² test.
    Resonance {
        #[arg(long)]
        delta_omega: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        lambda: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClosureArg {
    /// Δℓ/ℓ = 2π(n − 1).
    #[value(name = "paper")]
    PhaseIndex,
    /// Δℓ = πc/|Δω|.
    Formation,
    /// Δℓ from --jump.
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SigmaModel {
    Thomson,
    Resonant,
}

#[derive(Debug, Args)]
struct TransitArgs {
    /// Phase refractive index.
    #[arg(long)]
    n: Option<f64>,
    #[arg(long, value_enum, default_value = "paper")]
    closure: ClosureArg,
    /// Delay per scattering, s.
    #[arg(long, default_value_t = 0.0)]
    tau1: f64,
    /// Jump per scattering for the explicit closure, m.
    #[arg(long)]
    jump: Option<f64>,
    /// Detuning for the formation closure, rad/s.
    #[arg(long)]
    delta_omega: Option<f64>,
    /// Path length, m.
    #[arg(long, visible_alias = "L")]
    length: Option<f64>,
    /// Probe angular frequency, rad/s.
    #[arg(long)]
    omega: Option<f64>,
    /// Scatterer density, m⁻³.
    #[arg(long)]
    rho: Option<f64>,
    /// Cross-section, m².
    #[arg(long, conflicts_with = "sigma_model")]
    sigma: Option<f64>,
    #[arg(long, value_enum)]
    sigma_model: Option<SigmaModel>,
    /// Resonance centre, rad/s.
    #[arg(long)]
    omega0: Option<f64>,
    /// Resonance width, rad/s.
    #[arg(long)]
    gamma: Option<f64>,
    /// Medium description file (rho, sigma, sigma_model, n, omega0, gamma).
    #[arg(long, value_name = "FILE")]
    medium: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct McArgs {
    /// Mean free path ℓ, m.
    #[arg(long)]
    ell: f64,
    /// Jump per scattering Δℓ, m.
    #[arg(long, default_value_t = 0.0)]
    jump: f64,
    /// Delay per scattering τ₁, s.
    #[arg(long, default_value_t = 0.0)]
    tau1: f64,
    /// Slab length, m.
    #[arg(long = "L")]
    length: f64,
    #[arg(long, default_value_t = 100_000)]
    walkers: u64,
    /// Master seed (required for reproducibility).
    #[arg(long)]
    seed: u64,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Treatment of the cycle that crosses the exit: complete-cycle or clip.
    #[arg(long, default_value = "complete-cycle")]
    boundary: ExitRule,
    /// Run once per index n with the closure Δℓ = 2π(n − 1)ℓ (overrides --jump).
    #[arg(long, value_delimiter = ',')]
    sweep_n: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
enum BoundsOp {
    /// Minimal time for an energy spread (all process kinds by default).
    MinTime {
        /// Energy spread, eV.
        #[arg(long)]
        delta_e: f64,
        /// stable, decay or transmutation.
        #[arg(long)]
        kind: Option<ProcessKind>,
    },
    /// Transition density sin²(ΔEτ/2ħ)/ΔE².
    Probability {
        #[arg(long)]
        delta_e: f64,
        /// Time, s.
        #[arg(long)]
        tau: f64,
    },
    /// First maxima of the transition density in τ.
    Maxima {
        #[arg(long)]
        delta_e: f64,
        #[arg(long, default_value_t = 6)]
        count: usize,
    },
    /// Robertson–Schrödinger inequality for operators and a state in a JSON file.
    Rs {
        /// {"a": [[...]], "b": [[...]], "psi": [...]}; entries are numbers or [re, im].
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
    },
    /// Projector bound of the Mandelstam–Tamm relation.
    Projector {
        /// Energy spread ΔH, eV.
        #[arg(long)]
        delta_h: f64,
        /// Time, s.
        #[arg(long)]
        t: f64,
        #[arg(long)]
        kind: ProcessKind,
    },
    /// Time and energy spreads of sampled wave packets at one z slice.
    Spreads {
        #[arg(long, value_name = "FILE")]
        time_grid: PathBuf,
        #[arg(long, value_name = "FILE")]
        energy_grid: PathBuf,
        #[arg(long, default_value_t = 0)]
        z_index: usize,
    },
}

#[derive(Debug, Args)]
struct ParticlesArgs {
    /// Particle table (pair_name | delta_m_MeV | tau_s | tau_kind); the
    /// bundled meson table by default.
    #[arg(long, value_name = "FILE")]
    table: Option<PathBuf>,
    /// Half-width of the "near ½" window.
    #[arg(long, default_value_t = particles::DEFAULT_PRODUCT_WINDOW)]
    window: f64,
    #[command(subcommand)]
    op: Option<ParticlesOp>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TieArg {
    Error,
    NoEdge,
}

#[derive(Debug, Subcommand)]
enum ParticlesOp {
    /// Allowed (mass-raising) and suppressed transmutations.
    Transmute {
        /// name:mass,... or names lightest first.
        #[arg(long)]
        species: String,
        #[arg(long, value_enum, default_value = "error")]
        ties: TieArg,
    },
    /// Atmospheric-neutrino mass estimate with its audit log.
    Neutrino {
        #[arg(long = "L-km")]
        l_km: f64,
        #[arg(long = "E-GeV")]
        e_gev: f64,
    },
}

#[derive(Debug)]
enum CliError {
    Parse(String),
    Validation(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            Self::Validation(_) => 1,
            Self::Parse(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Parse(m) | Self::Validation(m) => m,
        }
    }
}

impl<E: Into<Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        match e.into() {
            Error::Parse(p) => Self::Parse(p.to_string()),
            other => Self::Validation(other.to_string()),
        }
    }
}

fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| validation(format!("cannot read {}: {e}", path.display())))
}

/// Result of one command before rendering.
struct Report {
    value: Value,
    /// Pre-rendered CSV that replaces the generic flattening.
    csv: Option<String>,
}

impl Report {
    fn new<T: Serialize>(value: T) -> Self {
        Self {
            value: serde_json::to_value(value).expect("report types serialize"),
            csv: None,
        }
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let matches = match parse_with_config(argv) {
        Ok(m) => m,
        Err(ParseFailure::Clap(e)) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    2
                }
            };
        }
        Err(ParseFailure::Cli(e)) => {
            let _ = writeln!(err, "error: {}", e.message());
            return e.code();
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return 2;
        }
    };
    match execute(&cli.command).and_then(|report| render(&report, cli.format)) {
        Ok(text) => match out.write_all(text.as_bytes()) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(err, "error: cannot write output: {e}");
                1
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.code()
        }
    }
}

enum ParseFailure {
    Clap(clap::Error),
    Cli(CliError),
}

/// The parser, with hyphen-led values (negative numbers in any notation)
/// accepted by every value-taking option.
pub fn command() -> clap::Command {
    fn adjust(cmd: clap::Command) -> clap::Command {
        cmd.mut_args(|a| {
            if a.get_action().takes_values() && !a.is_global_set() {
                a.allow_hyphen_values(true)
            } else {
                a
            }
        })
        .mut_subcommands(adjust)
    }
    adjust(Cli::command())
}

/// Parses `argv`, then appends `--key=value` for every config-file key that
/// names an option of the selected (innermost) subcommand and was not given
/// on the command line, and parses again.
fn parse_with_config(argv: Vec<OsString>) -> Result<ArgMatches, ParseFailure> {
    fn relax(cmd: clap::Command) -> clap::Command {
        cmd.mut_args(|a| a.required(false)).mut_subcommands(relax)
    }
    let mut cmd = command();
    cmd.build();
    // options supplied only by the config file must not fail the first pass
    let mut relaxed = relax(cmd.clone());
    relaxed.build();
    let matches = match relaxed.clone().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(_) => return cmd.try_get_matches_from(&argv).map_err(ParseFailure::Clap),
    };
    let Some(path) = matches.get_one::<PathBuf>("config").cloned() else {
        return cmd.try_get_matches_from(&argv).map_err(ParseFailure::Clap);
    };
    let text = read_file(&path).map_err(ParseFailure::Cli)?;
    let entries = medium::parse_key_values(&text).map_err(|e| ParseFailure::Cli(config_error(&path, e)))?;

    let mut leaf_cmd = &relaxed;
    let mut leaf = &matches;
    while let Some((name, sub)) = leaf.subcommand() {
        leaf_cmd = leaf_cmd.find_subcommand(name).expect("matched subcommand exists");
        leaf = sub;
    }

    let mut merged = argv;
    for (key, (line, value)) in entries {
        if key == "config" {
            continue;
        }
        let wanted = key.replace('_', "-");
        let arg = leaf_cmd
            .get_arguments()
            .find(|a| a.get_long().is_some_and(|l| l.eq_ignore_ascii_case(&wanted)))
            .ok_or_else(|| {
                ParseFailure::Cli(config_error(
                    &path,
                    ParseError::new(line, Some(1), format!("key {key:?} is not an option of this subcommand")),
                ))
            })?;
        if leaf.value_source(arg.get_id().as_str()) == Some(ValueSource::CommandLine) {
            continue;
        }
        let long = arg.get_long().expect("matched by long name");
        if arg.get_action().takes_values() {
            merged.push(format!("--{long}={value}").into());
        } else {
            match value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => merged.push(format!("--{long}").into()),
                "false" | "no" | "0" => {}
                _ => {
                    return Err(ParseFailure::Cli(config_error(
                        &path,
                        ParseError::new(line, Some(2), format!("{key} expects true or false")),
                    )))
                }
            }
        }
    }
    cmd.try_get_matches_from(merged).map_err(ParseFailure::Clap)
}

fn config_error(path: &Path, e: ParseError) -> CliError {
    CliError::Parse(format!("{}: {e}", path.display()))
}

fn execute(command: &Command) -> Result<Report, CliError> {
    match command {
        Command::Tau { op } => tau(op),
        Command::Medium { op } => medium_cmd(op),
        Command::Transit(args) => transit(args),
        Command::Mc(args) => mc(args),
        Command::Bounds { op } => bounds(op),
        Command::Particles(args) => particles_cmd(args),
    }
}

fn tau(op: &TauOp) -> Result<Report, CliError> {
    Ok(match *op {
        TauOp::Pair {
            ref response,
            omega,
            k,
            step,
            richardson,
        } => {
            let table = TabulatedResponse::parse(&read_file(response)?)?;
            let opts = DiffOptions {
                step,
                richardson,
                ..DiffOptions::default()
            };
            let pair = temporal::temporal_pair(&table, omega, k, &opts)?;
            Report::new(json!({ "omega": omega, "tau1": pair.tau1, "tau2": pair.tau2 }))
        }
        TauOp::Propagator { omega, k, pole } => {
            match temporal::photon_propagator_times(omega, k, pole.pole_epsilon) {
                Ok(t) => Report::new(json!({
                    "omega": omega,
                    "k": k,
                    "on_shell": false,
                    "tau1": t.pair.tau1,
                    "tau2": t.pair.tau2,
                    "tau2_exact": t.tau2_exact,
                    "retarded": t.retarded,
                })),
                // the on-shell delay is a distribution; report its weight
                Err(temporal::TemporalError::OnShell { delta_weight }) => Report::new(json!({
                    "omega": omega,
                    "k": k,
                    "on_shell": true,
                    "tau1_delta_weight": delta_weight,
                })),
                Err(e) => return Err(e.into()),
            }
        }
        TauOp::Mixed { omega, r, pole } => {
            let tau2 = temporal::mixed_formation_time(omega, r, pole.pole_epsilon)?;
            Report::new(json!({ "omega": omega, "r": r, "tau2": tau2 }))
        }
        TauOp::Renorm { omega, r, terms, pole } => {
            let tau2 = temporal::renormalized_formation_time(omega, r, terms, pole.pole_epsilon)?;
            Report::new(json!({ "omega": omega, "r": r, "terms": terms, "tau2": tau2 }))
        }
        TauOp::Path { delta_omega } => {
            let path = temporal::formation_path(delta_omega)?;
            Report::new(json!({ "delta_omega": delta_omega, "formation_path": path }))
        }
        TauOp::Massive { energy, mass, r, pole } => {
            let state = MassiveState::new(energy, mass, r)?;
            let m = temporal::massive_temporal(&state, pole.pole_epsilon)?;
            Report::new(json!({
                "energy": energy,
                "mass": mass,
                "r": r,
                "branch": m.branch,
                "kappa": m.kappa,
                "tau1": m.pair.tau1,
                "tau2": m.pair.tau2,
            }))
        }
        TauOp::Leading { energy, mass, pole } => {
            let tau2 = temporal::massive_formation_leading(energy, mass, pole.pole_epsilon)?;
            Report::new(json!({ "energy": energy, "mass": mass, "tau2_leading": tau2 }))
        }
    })
}

fn sigma_or_thomson(sigma: Option<f64>) -> (f64, &'static str) {
    match sigma {
        Some(s) => (s, "explicit"),
        None => (crate::constants::THOMSON_CROSS_SECTION, "thomson"),
    }
}

fn medium_cmd(op: &MediumOp) -> Result<Report, CliError> {
    Ok(match *op {
        MediumOp::FreePath { rho, sigma } => {
            let (sigma, model) = sigma_or_thomson(sigma);
            let ell = medium::free_path(rho, sigma)?;
            Report::new(json!({ "rho": rho, "sigma": sigma, "sigma_model": model, "free_path": ell }))
        }
        MediumOp::Tunneling { delta_omega, rho, sigma } => {
            let (sigma, model) = sigma_or_thomson(sigma);
            let check = medium::tunneling_condition(delta_omega, rho, sigma)?;
            let marginal = medium::marginal_detuning(rho, sigma)?;
            Report::new(json!({
                "delta_omega": delta_omega,
                "rho": rho,
                "sigma": sigma,
                "sigma_model": model,
                "satisfied": check.satisfied,
                "formation_path": check.formation_path,
                "free_path": check.free_path,
                "margin": check.margin,
                "marginal_delta_omega": marginal,
            }))
        }
        MediumOp::Wavelength { lambda, rho } => {
            let check = medium::wavelength_condition(lambda, rho)?;
            Report::new(json!({
                "lambda": lambda,
                "rho": rho,
                "satisfied": check.satisfied,
                "threshold": check.threshold,
            }))
        }
        MediumOp::ResonantSigma {
            lambda,
            gamma,
            delta_omega,
        } => {
            let sigma = medium::resonant_cross_section(lambda, gamma, delta_omega)?;
            Report::new(json!({ "lambda": lambda, "gamma": gamma, "delta_omega": delta_omega, "sigma": sigma }))
        }
        MediumOp::Resonance {
            delta_omega,
            rho,
            lambda,
        } => {
            let check = medium::resonance_condition(delta_omega, rho, lambda)?;
            Report::new(json!({
                "delta_omega": delta_omega,
                "rho": rho,
                "lambda": lambda,
                "satisfied": check.satisfied,
                "threshold": check.threshold,
            }))
        }
    })
}

fn transit(args: &TransitArgs) -> Result<Report, CliError> {
    let mut spec = match &args.medium {
        Some(path) => MediumSpec::parse(&read_file(path)?)?,
        None => MediumSpec::default(),
    };
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(rho) = args.rho {
        spec.rho = Some(rho);
    }
    if let Some(sigma) = args.sigma {
        spec.cross_section = Some(CrossSection::Explicit { sigma });
    }
    match args.sigma_model {
        Some(SigmaModel::Thomson) => spec.cross_section = Some(CrossSection::Thomson),
        Some(SigmaModel::Resonant) => spec.cross_section = Some(CrossSection::Resonant),
        None => {}
    }
    match (args.omega0, args.gamma) {
        (Some(omega0), Some(gamma)) => spec.resonance = Some(Resonance { omega0, gamma }),
        (None, None) => {}
        _ => return Err(validation("--omega0 and --gamma must be given together")),
    }

    let closure = match args.closure {
        ClosureArg::PhaseIndex => JumpClosure::PhaseIndex,
        ClosureArg::Formation => JumpClosure::FormationPath {
            delta_omega: args
                .delta_omega
                .ok_or_else(|| validation("the formation closure needs --delta-omega"))?,
        },
        ClosureArg::Explicit => JumpClosure::Explicit {
            jump: args.jump.ok_or_else(|| validation("the explicit closure needs --jump"))?,
        },
    };

    let has_free_path = (spec.rho.is_some() && spec.cross_section.is_some()) || args.omega.is_some();
    if closure == JumpClosure::PhaseIndex && !has_free_path {
        // the 2π(n − 1) closure fixes u/c from n alone
        let speed_ratio = medium::closure_speed_ratio(spec.n)?;
        return Ok(Report::new(json!({
            "n": spec.n,
            "closure": "paper",
            "jump_ratio": speed_ratio - 1.0,
            "speed_ratio": speed_ratio,
        })));
    }
    let length = args
        .length
        .ok_or_else(|| validation("a full transit prediction needs --length"))?;
    let request = TransitRequest {
        tau1: args.tau1,
        closure,
        length,
        omega: args.omega,
    };
    let prediction = medium::transit_prediction(&spec, &request)?;
    let mut value = serde_json::to_value(prediction).expect("serializable");
    if let Value::Object(map) = &mut value {
        let mut head = Map::new();
        head.insert("n".into(), json!(spec.n));
        head.insert("length".into(), json!(length));
        head.insert("tau1".into(), json!(args.tau1));
        head.extend(std::mem::take(map));
        *map = head;
    }
    Ok(Report { value, csv: None })
}

fn mc(args: &McArgs) -> Result<Report, CliError> {
    let base = WalkConfig {
        mean_free_path: args.ell,
        jump: args.jump,
        delay: args.tau1,
        length: args.length,
        n_walkers: args.walkers,
        master_seed: args.seed,
        exit_rule: args.boundary,
    };
    let configs: Vec<WalkConfig> = match &args.sweep_n {
        Some(ns) => ns
            .iter()
            .map(|&n| WalkConfig {
                jump: 2.0 * PI * (n - 1.0) * args.ell,
                ..base
            })
            .collect(),
        None => vec![base],
    };
    let run_all = || -> Result<Vec<TransportResult>, CliError> {
        match args.sweep_n {
            Some(_) => transport::sweep(&configs)
                .into_iter()
                .map(|r| r.map_err(CliError::from))
                .collect(),
            None => Ok(vec![transport::simulate(&configs[0])?]),
        }
    };
    let results = match args.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| validation(format!("cannot build thread pool: {e}")))?;
            pool.install(run_all)?
        }
        None => run_all()?,
    };

    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_result: csv::Result<()> = (|| {
        w.write_record(TransportResult::CSV_HEADER)?;
        for r in &results {
            w.write_record(r.csv_row())?;
        }
        w.flush()?;
        Ok(())
    })();
    csv_result.map_err(|e| validation(format!("csv output: {e}")))?;
    let csv_text = String::from_utf8(w.into_inner().map_err(|e| validation(e.to_string()))?)
        .expect("csv output is UTF-8");

    let value = match (&args.sweep_n, results.as_slice()) {
        (None, [single]) => serde_json::to_value(single),
        _ => serde_json::to_value(&results),
    }
    .expect("serializable");
    Ok(Report {
        value,
        csv: Some(csv_text),
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn complex(&self) -> Complex64 {
        match *self {
            Self::Real(re) => Complex64::new(re, 0.0),
            Self::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Deserialize)]
struct RsInput {
    a: Vec<Vec<Entry>>,
    b: Vec<Vec<Entry>>,
    psi: Vec<Entry>,
}

fn square(rows: &[Vec<Entry>], name: &str) -> Result<DMatrix<Complex64>, CliError> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(validation(format!("operator {name} is not square")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j].complex()))
}

fn bounds(op: &BoundsOp) -> Result<Report, CliError> {
    Ok(match *op {
        BoundsOp::MinTime { delta_e, kind } => {
            let kinds: Vec<ProcessKind> = kind.map_or_else(|| ProcessKind::ALL.to_vec(), |k| vec![k]);
            let rows = kinds
                .into_iter()
                .map(|k| {
                    uncertainty::minimal_time(delta_e, k).map(|t| {
                        json!({
                            "kind": t.kind,
                            "bound_in_hbar": k.bound_in_hbar(),
                            "seconds": t.seconds,
                            "advanced": t.advanced,
                        })
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Report::new(json!({ "delta_e": delta_e, "minimal_times": rows }))
        }
        BoundsOp::Probability { delta_e, tau } => {
            if tau < 0.0 {
                return Err(uncertainty::UncertaintyError::NegativeTime(tau).into());
            }
            Report::new(json!({
                "delta_e": delta_e,
                "tau": tau,
                "density": uncertainty::transition_probability(delta_e, tau),
                "phase": uncertainty::transition_phase(delta_e, tau),
            }))
        }
        BoundsOp::Maxima { delta_e, count } => {
            let taus = uncertainty::transition_maxima(delta_e, count)?;
            let rows: Vec<Value> = taus
                .iter()
                .enumerate()
                .map(|(n, &tau)| {
                    let phase = uncertainty::transition_phase(delta_e, tau);
                    json!({
                        "n": n,
                        "tau": tau,
                        "phase": phase,
                        "expected_phase": PI / 2.0 + n as f64 * PI,
                    })
                })
                .collect();
            Report::new(json!({ "delta_e": delta_e, "maxima": rows }))
        }
        BoundsOp::Rs { ref input } => {
            let parsed: RsInput = serde_json::from_str(&read_file(input)?).map_err(|e| {
                CliError::Parse(
                    ParseError::new(e.line(), Some(e.column()), format!("{}: {e}", input.display())).to_string(),
                )
            })?;
            let psi = DVector::from_iterator(parsed.psi.len(), parsed.psi.iter().map(Entry::complex));
            let state = OperatorPairState::new(square(&parsed.a, "A")?, square(&parsed.b, "B")?, psi)?;
            let b = uncertainty::rs_bound(&state);
            Report::new(json!({
                "lhs": b.lhs,
                "commutator_term": b.commutator_term,
                "covariance_term": b.covariance_term,
                "rhs": b.rhs(),
                "robertson_rhs": b.robertson_rhs(),
                "slack": b.slack(),
                "satisfied": b.slack() >= -1e-12 * b.lhs.max(1.0),
            }))
        }
        BoundsOp::Projector { delta_h, t, kind } => {
            let b = uncertainty::mt_projector_bound(delta_h, t, kind)?;
            let mut value = serde_json::to_value(b).expect("serializable");
            if let Value::Object(map) = &mut value {
                map.insert("kind".into(), json!(kind));
            }
            Report { value, csv: None }
        }
        BoundsOp::Spreads {
            ref time_grid,
            ref energy_grid,
            z_index,
        } => {
            let tg = WavepacketGrid::parse(&read_file(time_grid)?)?;
            let eg = WavepacketGrid::parse(&read_file(energy_grid)?)?;
            let s = uncertainty::wigner_spreads(&tg, &eg, z_index)?;
            Report::new(json!({
                "z_index": z_index,
                "delta_t": s.delta_t,
                "delta_e": s.delta_e,
                "product": s.delta_t * s.delta_e,
            }))
        }
    })
}

fn particles_cmd(args: &ParticlesArgs) -> Result<Report, CliError> {
    match &args.op {
        None => {
            let (source, text) = match &args.table {
                Some(path) => (path.display().to_string(), read_file(path)?),
                None => ("bundled".to_string(), particles::BUNDLED_TABLE.to_string()),
            };
            let records = particles::load_particle_table(&text)?;
            let analysis = particles::analyze_table(&records, args.window)?;
            Ok(Report::new(json!({
                "table": source,
                "window": args.window,
                "products": analysis.products,
                "bounds": analysis.bounds,
            })))
        }
        Some(ParticlesOp::Transmute { species, ties }) => {
            let h = MassHierarchy::parse(species)?;
            let policy = match ties {
                TieArg::Error => TiePolicy::Error,
                TieArg::NoEdge => TiePolicy::NoEdge,
            };
            let edges = particles::allowed_transmutations(&h, policy)?;
            let species: Vec<Value> = h
                .species()
                .iter()
                .map(|(name, mass)| json!({ "name": name, "mass": mass }))
                .collect();
            Ok(Report::new(json!({ "species": species, "edges": edges })))
        }
        Some(ParticlesOp::Neutrino { l_km, e_gev }) => {
            let est = particles::neutrino_mass_estimate(*l_km, *e_gev)?;
            let mut value = serde_json::to_value(&est).expect("serializable");
            if let Value::Object(map) = &mut value {
                let mut head = Map::new();
                head.insert("L_km".into(), json!(l_km));
                head.insert("E_GeV".into(), json!(e_gev));
                head.extend(std::mem::take(map));
                *map = head;
            }
            Ok(Report { value, csv: None })
        }
    }
}

/// Shortest round-trip decimal; exponent form outside `[1e-4, 1e15)`.
fn format_number(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn scalar_text(v: &Value, empty: &str) -> String {
    match v {
        Value::Null => empty.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) if n.is_f64() => format_number(n.as_f64().expect("f64 number")),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(|i| scalar_text(i, empty)).collect::<Vec<_>>().join(";"),
        Value::Object(_) => v.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, Value)>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, child, out);
            }
        }
        other => out.push((prefix.to_string(), other.clone())),
    }
}

fn is_record_list(v: &Value) -> bool {
    matches!(v, Value::Array(items) if !items.is_empty() && items.iter().all(Value::is_object))
}

/// A titled table of flattened records.
struct Table {
    title: Option<String>,
    header: Vec<String>,
    rows: Vec<Vec<Value>>,
}

fn records_table(title: Option<String>, items: &[Value]) -> Table {
    let mut header: Vec<String> = Vec::new();
    let flat: Vec<Vec<(String, Value)>> = items
        .iter()
        .map(|item| {
            let mut cells = Vec::new();
            flatten("", item, &mut cells);
            for (k, _) in &cells {
                if !header.contains(k) {
                    header.push(k.clone());
                }
            }
            cells
        })
        .collect();
    let rows = flat
        .into_iter()
        .map(|cells| {
            header
                .iter()
                .map(|h| cells.iter().find(|(k, _)| k == h).map_or(Value::Null, |(_, v)| v.clone()))
                .collect()
        })
        .collect();
    Table { title, header, rows }
}

/// Splits a report into a table of its scalar fields plus one table per
/// field that holds a list of records.
fn tables(value: &Value) -> Vec<Table> {
    match value {
        Value::Array(items) => vec![records_table(None, items)],
        Value::Object(map) => {
            let mut scalars = Map::new();
            let mut lists = Vec::new();
            for (k, v) in map {
                if is_record_list(v) {
                    lists.push(records_table(Some(k.clone()), v.as_array().expect("checked")));
                } else if !matches!(v, Value::Array(a) if a.is_empty()) || !map.values().any(is_record_list) {
                    scalars.insert(k.clone(), v.clone());
                }
            }
            let mut out = Vec::new();
            if !scalars.is_empty() {
                out.push(records_table(None, &[Value::Object(scalars)]));
            }
            out.extend(lists);
            out
        }
        other => vec![Table {
            title: None,
            header: vec!["value".into()],
            rows: vec![vec![other.clone()]],
        }],
    }
}

fn render(report: &Report, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report.value).map_err(|e| validation(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => match &report.csv {
            Some(csv) => Ok(csv.clone()),
            None => render_csv(&tables(&report.value)),
        },
        Format::Text => Ok(render_text(&tables(&report.value))),
    }
}

fn render_csv(tables: &[Table]) -> Result<String, CliError> {
    let mut out = String::new();
    for (i, t) in tables.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        if let Some(title) = &t.title {
            out.push_str(&format!("# {title}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let written: csv::Result<()> = (|| {
            w.write_record(&t.header)?;
            for row in &t.rows {
                w.write_record(row.iter().map(|v| scalar_text(v, "")))?;
            }
            w.flush()?;
            Ok(())
        })();
        written.map_err(|e| validation(format!("csv output: {e}")))?;
        let bytes = w.into_inner().map_err(|e| validation(e.to_string()))?;
        out.push_str(&String::from_utf8(bytes).expect("csv output is UTF-8"));
    }
    Ok(out)
}

fn render_text(tables: &[Table]) -> String {
    let mut out = String::new();
    for (i, t) in tables.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        if let Some(title) = &t.title {
            out.push_str(&format!("[{title}]\n"));
        }
        if t.title.is_none() && t.rows.len() == 1 {
            let width = t.header.iter().map(|h| h.chars().count()).max().unwrap_or(0);
            for (h, v) in t.header.iter().zip(&t.rows[0]) {
                out.push_str(&format!("{h:<width$}  {}\n", scalar_text(v, "-")));
            }
            continue;
        }
        let cells: Vec<Vec<String>> = t
            .rows
            .iter()
            .map(|r| r.iter().map(|v| scalar_text(v, "-")).collect())
            .collect();
        let widths: Vec<usize> = t
            .header
            .iter()
            .enumerate()
            .map(|(j, h)| {
                cells
                    .iter()
                    .map(|r| r[j].chars().count())
                    .chain([h.chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |items: &[String]| -> String {
            let parts: Vec<String> = items
                .iter()
                .zip(&widths)
                .map(|(s, &w)| format!("{s:<w$}"))
                .collect();
            format!("{}\n", parts.join("  ").trim_end())
        };
        out.push_str(&line(&t.header));
        for r in &cells {
            out.push_str(&line(r));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_ok(args: &[&str]) -> String {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("evanescent").chain(args.iter().copied());
        let code = run(argv, &mut out, &mut err);
        assert_eq!(code, 0, "{}", String::from_utf8_lossy(&err));
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn number_format() {
        assert_eq!(format_number(4.5), "4.5");
        assert_eq!(format_number(3.47e-14), "3.47e-14");
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(2e20), "2e20");
    }

    #[test]
    fn nested_tables() {
        let v = json!({ "a": 1.5, "inner": { "b": true }, "list": [{ "x": 1 }, { "x": 2, "y": "z" }] });
        let t = tables(&v);
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].header, ["a", "inner.b"]);
        assert_eq!(t[1].header, ["x", "y"]);
        assert_eq!(t[1].rows[0][1], Value::Null);
    }

    #[test]
    fn text_is_aligned() {
        let s = run_ok(&["--format", "text", "tau", "path", "--delta-omega", "1e9"]);
        assert!(s.starts_with("delta_omega     1000000000\nformation_path  "), "{s}");
    }

    #[test]
    fn csv_quotes_commas() {
        let s = run_ok(&["--format", "csv", "particles", "neutrino", "--L-km", "1000", "--E-GeV", "1"]);
        assert!(s.contains("# step_log"));
        assert!(s.contains('"'));
    }
}
