//! Delay and formation times of scattering.
//!
//! The complex temporal function of a response `S` is the frequency
//! log-derivative `τ = (1/i) ∂ω ln S`. Its real part is the Wigner–Smith
//! delay `τ₁`, its imaginary part the formation ("dressing") time `τ₂`.
//! Every closed form in this module is obtained from that one definition
//! applied to the corresponding Green function:
//!
//! | response                     | τ₁                         | τ₂                        |
//! |------------------------------|----------------------------|---------------------------|
//! | `4π/(ω² − k² + iη)`          | on-shell weight only       | `1/(ω − |k|c)` near shell |
//! | `sin(ωr/c)`                  | 0                          | `−(r/c) cot(ωr/c)`        |
//! | `sin(κr)/r`, `E > m`         | 0                          | `−(rE/κ) cot(κr)`         |
//! | continued to `E < m`         | `(rE/κ′) coth(κ′r)`        | 0                         |
//!
//! The massive branch works in natural units (ħ = c = 1); everything else
//! takes SI inputs and returns seconds.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::constants::SPEED_OF_LIGHT;
use crate::error::{parse_f64, split_fields, strip_comment, ParseError};

/// Coefficient of `δ(ω − |k|c)` in the photon delay time.
pub const ON_SHELL_DELAY_WEIGHT: f64 = -PI;

/// Default distance, in the relevant dimensionless argument, inside which a
/// pole or mass shell is reported instead of evaluated.
pub const DEFAULT_POLE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TemporalError {
    #[error("response magnitude {magnitude:e} at omega = {omega:e} is below the zero floor")]
    ZeroResponse { omega: f64, magnitude: f64 },
    #[error("stencil omega = {omega:e} ± {step:e} leaves the declared domain [{lo:e}, {hi:e}]")]
    Domain { omega: f64, step: f64, lo: f64, hi: f64 },
    #[error("response is not finite at omega = {omega:e}")]
    NonFinite { omega: f64 },
    #[error("evaluation point is on shell; the delay is delta-supported")]
    OnShell {
        /// Weight of the delta distribution carried by `τ₁`, when one exists.
        delta_weight: Option<f64>,
    },
    #[error("argument {argument} is within epsilon of the pole n = {n} (n·π)")]
    Pole { n: i64, argument: f64 },
    #[error("detuning must be non-zero")]
    ZeroDetuning,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// The two components of the complex temporal function, in seconds (or in
/// natural units for the massive branch).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TemporalPair {
    /// Delay time.
    pub tau1: f64,
    /// Formation time.
    pub tau2: f64,
}

impl TemporalPair {
    pub fn new(tau1: f64, tau2: f64) -> Self {
        Self { tau1, tau2 }
    }

    fn from_complex(tau: Complex64) -> Self {
        Self::new(tau.re, tau.im)
    }
}

/// A complex amplitude sampled as a function of angular frequency.
pub trait SpectralResponse {
    fn eval(&self, omega: f64, k: Option<f64>) -> Complex64;

    /// Closed interval of `omega` on which `eval` is trusted.
    fn domain(&self) -> (f64, f64);
}

/// A response backed by a closure.
pub struct FnResponse<F> {
    f: F,
    domain: (f64, f64),
}

impl<F> FnResponse<F>
where
    F: Fn(f64, Option<f64>) -> Complex64,
{
    pub fn new(f: F, domain: (f64, f64)) -> Self {
        Self { f, domain }
    }
}

impl<F> SpectralResponse for FnResponse<F>
where
    F: Fn(f64, Option<f64>) -> Complex64,
{
    fn eval(&self, omega: f64, k: Option<f64>) -> Complex64 {
        (self.f)(omega, k)
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }
}

/// Tabulated `(ω, Re S, Im S)` samples with linear interpolation in the
/// complex plane. The wavenumber argument is ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedResponse {
    omega: Vec<f64>,
    values: Vec<Complex64>,
}

impl TabulatedResponse {
    pub fn new(samples: Vec<(f64, Complex64)>) -> Result<Self, TemporalError> {
        if samples.len() < 2 {
            return Err(TemporalError::InvalidInput(
                "a tabulated response needs at least two samples".into(),
            ));
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(TemporalError::InvalidInput(
                "tabulated frequencies must be strictly increasing".into(),
            ));
        }
        let (omega, values) = samples.into_iter().unzip();
        Ok(Self { omega, values })
    }

    /// Reads whitespace- or comma-delimited `omega re im` rows; `#` starts a
    /// comment.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut samples = Vec::new();
        let mut last_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            last_line = line;
            let body = strip_comment(raw);
            if body.is_empty() {
                continue;
            }
            let fields: Vec<&str> = split_fields(body).collect();
            if fields.len() != 3 {
                return Err(ParseError::new(
                    line,
                    None,
                    format!("expected 3 fields (omega, re, im), found {}", fields.len()),
                ));
            }
            let omega = parse_f64(fields[0], line, 1)?;
            let re = parse_f64(fields[1], line, 2)?;
            let im = parse_f64(fields[2], line, 3)?;
            if let Some(&(prev, _)) = samples.last() {
                if omega <= prev {
                    return Err(ParseError::new(
                        line,
                        Some(1),
                        "frequencies must be strictly increasing",
                    ));
                }
            }
            samples.push((omega, Complex64::new(re, im)));
        }
        Self::new(samples).map_err(|e| ParseError::new(last_line, None, e.to_string()))
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
}

impl SpectralResponse for TabulatedResponse {
    fn eval(&self, omega: f64, _k: Option<f64>) -> Complex64 {
        let n = self.omega.len();
        if omega <= self.omega[0] {
            return self.values[0];
        }
        if omega >= self.omega[n - 1] {
            return self.values[n - 1];
        }
        let hi = self.omega.partition_point(|&w| w <= omega);
        let lo = hi - 1;
        let t = (omega - self.omega[lo]) / (self.omega[hi] - self.omega[lo]);
        self.values[lo] * (1.0 - t) + self.values[hi] * t
    }

    fn domain(&self) -> (f64, f64) {
        (self.omega[0], self.omega[self.omega.len() - 1])
    }
}

/// Finite-difference settings for [`temporal_pair`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffOptions {
    /// Central-difference half-width in rad/s; `None` uses `1e-6·|ω|`.
    pub step: Option<f64>,
    /// Combine steps `h` and `h/2` to cancel the `O(h²)` error term.
    pub richardson: bool,
    /// Magnitudes below this are treated as zeros of the response.
    pub zero_floor: f64,
}

impl Default for DiffOptions {
    fn default() -> Self {
        Self {
            step: None,
            richardson: false,
            zero_floor: 1e-300,
        }
    }
}

impl DiffOptions {
    pub fn with_step(step: f64) -> Self {
        Self {
            step: Some(step),
            ..Self::default()
        }
    }

    fn resolve_step(&self, omega: f64) -> f64 {
        self.step.unwrap_or_else(|| {
            if omega == 0.0 {
                1e-6
            } else {
                1e-6 * omega.abs()
            }
        })
    }
}

/// Delay and formation times of a black-box response at `omega`.
///
/// Uses a central difference of `ln S`. The phase is differenced through the
/// ratios `S(ω±h)/S(ω)`, so the result is continuous across branch cuts of
/// `arg` as long as the phase moves by less than π over one step.
pub fn temporal_pair<S: SpectralResponse + ?Sized>(
    response: &S,
    omega: f64,
    k: Option<f64>,
    opts: &DiffOptions,
) -> Result<TemporalPair, TemporalError> {
    let step = opts.resolve_step(omega);
    if !(step.is_finite() && step > 0.0) || !omega.is_finite() {
        return Err(TemporalError::InvalidInput(format!(
            "step must be positive and finite, got {step}"
        )));
    }
    let (lo, hi) = response.domain();
    if omega - step < lo || omega + step > hi {
        return Err(TemporalError::Domain { omega, step, lo, hi });
    }

    let sample = |w: f64| -> Result<Complex64, TemporalError> {
        let s = response.eval(w, k);
        if !(s.re.is_finite() && s.im.is_finite()) {
            return Err(TemporalError::NonFinite { omega: w });
        }
        let magnitude = s.norm();
        if magnitude < opts.zero_floor {
            return Err(TemporalError::ZeroResponse { omega: w, magnitude });
        }
        Ok(s)
    };

    let center = sample(omega)?;
    let central = |h: f64| -> Result<Complex64, TemporalError> {
        let plus = (sample(omega + h)? / center).ln();
        let minus = (sample(omega - h)? / center).ln();
        Ok((plus - minus) / (2.0 * h))
    };

    let dlog = if opts.richardson {
        let coarse = central(step)?;
        let fine = central(0.5 * step)?;
        (fine * 4.0 - coarse) / 3.0
    } else {
        central(step)?
    };
    Ok(TemporalPair::from_complex(dlog / Complex64::i()))
}

/// Temporal functions of the causal photon propagator at an off-shell point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagatorTimes {
    /// `τ₁ = 0`, `τ₂ = 1/(ω − |k|c)`.
    pub pair: TemporalPair,
    /// `2ω/(ω² − k²c²)` before the near-shell reduction.
    pub tau2_exact: f64,
    /// `true` above the light cone (`ω > |k|c`), `false` for advanced emission.
    pub retarded: bool,
}

/// Delay and formation times of the photon propagator `4π/(ω² − k²c² + iη)`.
///
/// On the light cone the delay is the distribution
/// `ON_SHELL_DELAY_WEIGHT · δ(ω − |k|c)`; that case is returned as
/// [`TemporalError::OnShell`] carrying the weight.
pub fn photon_propagator_times(
    omega: f64,
    k_abs: f64,
    pole_epsilon: f64,
) -> Result<PropagatorTimes, TemporalError> {
    if !omega.is_finite() || !k_abs.is_finite() {
        return Err(TemporalError::InvalidInput("non-finite argument".into()));
    }
    let kc = k_abs.abs() * SPEED_OF_LIGHT;
    let detuning = omega - kc;
    let scale = omega.abs().max(kc);
    if scale == 0.0 || detuning.abs() <= pole_epsilon * scale {
        return Err(TemporalError::OnShell {
            delta_weight: Some(ON_SHELL_DELAY_WEIGHT),
        });
    }
    Ok(PropagatorTimes {
        pair: TemporalPair::new(0.0, 1.0 / detuning),
        tau2_exact: 2.0 * omega / (detuning * (omega + kc)),
        retarded: detuning > 0.0,
    })
}

/// Nearest multiple of π to `x` if `x` lies within `eps` of it.
fn near_pole(x: f64, eps: f64) -> Option<i64> {
    let n = (x / PI).round();
    ((x - n * PI).abs() < eps).then_some(n as i64)
}

fn dimensionless_phase(omega: f64, r: f64) -> Result<f64, TemporalError> {
    if !omega.is_finite() || !r.is_finite() {
        return Err(TemporalError::InvalidInput("non-finite argument".into()));
    }
    if r <= 0.0 {
        return Err(TemporalError::InvalidInput(format!("r must be positive, got {r}")));
    }
    Ok(omega * r / SPEED_OF_LIGHT)
}

/// Formation time `−(r/c)·cot(ωr/c)` of the off-cone propagator part
/// `sin(ωr/c)` in the mixed `(ω, r)` representation.
pub fn mixed_formation_time(omega: f64, r: f64, pole_epsilon: f64) -> Result<f64, TemporalError> {
    let x = dimensionless_phase(omega, r)?;
    if let Some(n) = near_pole(x, pole_epsilon) {
        return Err(TemporalError::Pole { n, argument: x });
    }
    Ok(-(r / SPEED_OF_LIGHT) * x.cos() / x.sin())
}

fn series_term(x: f64, n: f64) -> f64 {
    1.0 / (x - PI * n) + 1.0 / (x + PI * n)
}

/// `k`-th derivative in `n` of `1/(x − πn) + 1/(x + πn)`.
fn series_term_derivative(x: f64, n: f64, k: i32) -> f64 {
    let fact: f64 = (1..=k).map(f64::from).product();
    let pk = PI.powi(k);
    let minus = fact * pk / (x - PI * n).powi(k + 1);
    let plus = fact * pk * if k % 2 == 0 { 1.0 } else { -1.0 } / (x + PI * n).powi(k + 1);
    minus + plus
}

/// Euler–Maclaurin estimate of `Σ_{n>N} 2x/(x² − π²n²)`.
///
/// Returns `None` when `πN ≤ |x|`, where the remaining terms are not yet
/// monotone and no tail is added.
pub fn cotangent_series_tail(x: f64, n_terms: u64) -> Option<f64> {
    let n = n_terms as f64;
    if PI * n <= x.abs() {
        return None;
    }
    let integral = ((PI * n - x) / (PI * n + x)).ln() / PI;
    Some(
        integral - 0.5 * series_term(x, n) - series_term_derivative(x, n, 1) / 12.0
            + series_term_derivative(x, n, 3) / 720.0
            - series_term_derivative(x, n, 5) / 30240.0,
    )
}

/// Coulomb-subtracted formation time: `−(r/c)·Σ_{n=1}^{N} 2x/(x² − π²n²)`
/// with `x = ωr/c`, plus an Euler–Maclaurin tail for the omitted terms.
///
/// In the limit this equals `−(r/c)·[cot(x) − 1/x]`. The static pole at
/// `x = 0` is absent, so the first pole sits at `x = π`.
pub fn renormalized_formation_time(
    omega: f64,
    r: f64,
    n_terms: u64,
    pole_epsilon: f64,
) -> Result<f64, TemporalError> {
    if n_terms == 0 {
        return Err(TemporalError::InvalidInput("n_terms must be at least 1".into()));
    }
    let x = dimensionless_phase(omega, r)?;
    if let Some(n) = near_pole(x, pole_epsilon) {
        if n != 0 {
            return Err(TemporalError::Pole { n, argument: x });
        }
    }
    // smallest terms first
    let partial: f64 = (1..=n_terms).rev().map(|n| series_term(x, n as f64)).sum();
    let tail = cotangent_series_tail(x, n_terms).unwrap_or(0.0);
    Ok(-(r / SPEED_OF_LIGHT) * (partial + tail))
}

/// Minimal formation path `πc/|Δω|`, in metres, over which an evanescent
/// photon is transferred instantaneously.
pub fn formation_path(delta_omega: f64) -> Result<f64, TemporalError> {
    if delta_omega == 0.0 {
        return Err(TemporalError::ZeroDetuning);
    }
    if !delta_omega.is_finite() {
        return Err(TemporalError::InvalidInput("non-finite detuning".into()));
    }
    Ok(PI * SPEED_OF_LIGHT / delta_omega.abs())
}

/// Which side of the mass shell a massive state lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `E > m`: free propagation.
    AboveThreshold,
    /// `E < m`: bound or virtual state.
    BelowThreshold,
}

/// Energy, mass and distance in natural units (ħ = c = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassiveState {
    energy: f64,
    mass: f64,
    r: f64,
}

impl MassiveState {
    pub fn new(energy: f64, mass: f64, r: f64) -> Result<Self, TemporalError> {
        if !(energy.is_finite() && energy > 0.0) {
            return Err(TemporalError::InvalidInput(format!("E must be positive, got {energy}")));
        }
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(TemporalError::InvalidInput(format!("m must be non-negative, got {mass}")));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(TemporalError::InvalidInput(format!("r must be positive, got {r}")));
        }
        Ok(Self { energy, mass, r })
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn branch(&self) -> Branch {
        if self.energy > self.mass {
            Branch::AboveThreshold
        } else {
            Branch::BelowThreshold
        }
    }

    /// `|E² − m²|^{1/2}`, computed as a product to keep precision near threshold.
    pub fn kappa(&self) -> f64 {
        ((self.energy - self.mass).abs() * (self.energy + self.mass)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassiveTemporal {
    pub pair: TemporalPair,
    pub branch: Branch,
    /// `κ = √(E² − m²)` above threshold, `κ′ = √(m² − E²)` below.
    pub kappa: f64,
}

fn check_mass_shell(energy: f64, mass: f64, pole_epsilon: f64) -> Result<(), TemporalError> {
    if (energy - mass).abs() <= pole_epsilon * energy.abs().max(mass.abs()) {
        return Err(TemporalError::OnShell { delta_weight: None });
    }
    Ok(())
}

/// Temporal functions of the massive Green function `sin(κr)/(2r)`.
///
/// Above threshold the pair is `(0, −(rE/κ) cot(κr))`. Below threshold the
/// same expression continued to `κ = iκ′` is real and is reported as the
/// delay, `((rE/κ′) coth(κ′r), 0)`.
pub fn massive_temporal(state: &MassiveState, pole_epsilon: f64) -> Result<MassiveTemporal, TemporalError> {
    let (energy, r) = (state.energy, state.r);
    check_mass_shell(energy, state.mass, pole_epsilon)?;
    let kappa = state.kappa();
    let branch = state.branch();
    let pair = match branch {
        Branch::AboveThreshold => {
            let x = kappa * r;
            if let Some(n) = near_pole(x, pole_epsilon) {
                return Err(TemporalError::Pole { n, argument: x });
            }
            TemporalPair::new(0.0, -(r * energy / kappa) * x.cos() / x.sin())
        }
        Branch::BelowThreshold => {
            let y = kappa * r;
            TemporalPair::new((r * energy / kappa) / y.tanh(), 0.0)
        }
    };
    Ok(MassiveTemporal { pair, branch, kappa })
}

/// The above-threshold formation time `−(rE/κ)·cot(κr)` evaluated at an
/// arbitrary complex `κ`.
pub fn above_threshold_formation(energy: f64, kappa: Complex64, r: f64) -> Complex64 {
    let z = kappa * r;
    -(Complex64::new(r * energy, 0.0) / kappa) / z.tan()
}

/// Leading term `−E/(E² − m²)` of the massive formation time; negative for
/// every `E > m`.
pub fn massive_formation_leading(energy: f64, mass: f64, pole_epsilon: f64) -> Result<f64, TemporalError> {
    if !energy.is_finite() || !mass.is_finite() {
        return Err(TemporalError::InvalidInput("non-finite argument".into()));
    }
    check_mass_shell(energy, mass, pole_epsilon)?;
    Ok(-energy / ((energy - mass) * (energy + mass)))
}
