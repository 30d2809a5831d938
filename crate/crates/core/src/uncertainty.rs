//! Energy–time uncertainty relations.
//!
//! Covers the process-dependent minimal times, the transition-probability
//! density and its maxima, the Robertson–Schrödinger inequality on finite
//! operators, the projector bounds of the Mandelstam–Tamm construction and
//! position-resolved spreads of sampled wave packets.
//!
//! Energies are in eV and times in seconds throughout.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::HBAR_EV_S;
use crate::error::{split_fields, strip_comment, ParseError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UncertaintyError {
    #[error("energy spread must be non-zero")]
    ZeroEnergy,
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operator {0} is not Hermitian")]
    NonHermitian(&'static str),
    #[error("state norm is {0}, expected 1")]
    NonUnitState(f64),
    #[error("z-slice {0} carries no weight")]
    EmptySlice(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Kind of process an energy–time relation is written for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    /// Transfer between stable states, `ΔE·Δτ ≥ πħ`.
    StableTransfer,
    /// Decay, `ΔE·Δt ≥ πħ/4`.
    Decay,
    /// Transmutation into a partner, `ΔE·Δt ≥ ħ/2`.
    Transmutation,
}

impl ProcessKind {
    pub const ALL: [ProcessKind; 3] = [Self::StableTransfer, Self::Decay, Self::Transmutation];

    /// The bound in units of ħ.
    pub fn bound_in_hbar(self) -> f64 {
        match self {
            Self::StableTransfer => PI,
            Self::Decay => PI / 4.0,
            Self::Transmutation => 0.5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::StableTransfer => "stable_transfer",
            Self::Decay => "decay",
            Self::Transmutation => "transmutation",
        }
    }
}

impl std::str::FromStr for ProcessKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "stable_transfer" | "stable" => Ok(Self::StableTransfer),
            "decay" => Ok(Self::Decay),
            "transmutation" | "transmut" => Ok(Self::Transmutation),
            other => Err(format!("unknown process kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimalTime {
    /// `bound·ħ/|ΔE|`, seconds.
    pub seconds: f64,
    pub kind: ProcessKind,
    /// The energy deviation was negative, so the time deviation is negative
    /// too: an advanced (tunneling) transition.
    pub advanced: bool,
}

/// Smallest time compatible with an energy spread for the given process.
pub fn minimal_time(delta_e: f64, kind: ProcessKind) -> Result<MinimalTime, UncertaintyError> {
    if delta_e == 0.0 {
        return Err(UncertaintyError::ZeroEnergy);
    }
    if !delta_e.is_finite() {
        return Err(UncertaintyError::InvalidInput("non-finite energy".into()));
    }
    Ok(MinimalTime {
        seconds: kind.bound_in_hbar() * HBAR_EV_S / delta_e.abs(),
        kind,
        advanced: delta_e < 0.0,
    })
}

fn sinc(p: f64) -> f64 {
    if p.abs() < 1e-4 {
        1.0 - p * p / 6.0
    } else {
        p.sin() / p
    }
}

/// Unnormalised transition density `sin²(ΔE·τ/2ħ)/ΔE²`, in eV⁻².
///
/// Written as `(τ/2ħ)²·sinc²` so that `ΔE → 0` returns `τ²/4ħ²` smoothly.
pub fn transition_probability(delta_e: f64, tau: f64) -> f64 {
    let half = tau / (2.0 * HBAR_EV_S);
    let s = sinc(delta_e * half);
    half * half * s * s
}

/// `∂W/∂τ` for the density above.
pub fn transition_probability_slope(delta_e: f64, tau: f64) -> f64 {
    let half = tau / (2.0 * HBAR_EV_S);
    if delta_e == 0.0 {
        return tau / (2.0 * HBAR_EV_S * HBAR_EV_S);
    }
    (2.0 * delta_e * half).sin() / (2.0 * HBAR_EV_S * delta_e)
}

/// Golden-section search for the maximum of `f` on `[a, b]`, stopped once the
/// bracket is narrower than `tol`. Returns the final bracket.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a, b)
}

/// Bisects a sign change of `slope` (positive on the left) down to adjacent
/// floats.
fn bisect_slope<F: Fn(f64) -> f64>(slope: F, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if slope(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Times at which the transition density peaks, for the first `count`
/// maxima at fixed `ΔE`.
///
/// Each maximum is bracketed between consecutive zeros of the density,
/// narrowed by golden-section search, then polished by bisection on the
/// analytic slope (comparisons of `W` alone stall at `√ε` relative accuracy
/// on a quadratic peak).
pub fn transition_maxima(delta_e: f64, count: usize) -> Result<Vec<f64>, UncertaintyError> {
    if delta_e == 0.0 {
        return Err(UncertaintyError::ZeroEnergy);
    }
    let de = delta_e.abs();
    let tau_of_phase = |p: f64| 2.0 * HBAR_EV_S * p / de;
    let maxima = (0..count)
        .map(|n| {
            let lo = tau_of_phase(n as f64 * PI);
            let hi = tau_of_phase((n + 1) as f64 * PI);
            let w = |t: f64| transition_probability(de, t);
            let (a, b) = golden_section_max(w, lo, hi, 1e-6 * (hi - lo));
            // widen slightly so the polish bracket certainly straddles the root
            let pad = b - a;
            let a = (a - pad).max(lo);
            let b = (b + pad).min(hi);
            let tau = bisect_slope(|t| transition_probability_slope(de, t), a, b);
            tau.copysign(delta_e)
        })
        .collect();
    Ok(maxima)
}

/// Phase `ΔE·τ/2ħ` of a transition.
pub fn transition_phase(delta_e: f64, tau: f64) -> f64 {
    delta_e * tau / (2.0 * HBAR_EV_S)
}

/// Two Hermitian observables and a normalised state.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorPairState {
    a: DMatrix<Complex64>,
    b: DMatrix<Complex64>,
    psi: DVector<Complex64>,
}

const HERMITIAN_TOL: f64 = 1e-10;

fn check_hermitian(m: &DMatrix<Complex64>, name: &'static str) -> Result<(), UncertaintyError> {
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let asym = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if asym > HERMITIAN_TOL * scale {
        return Err(UncertaintyError::NonHermitian(name));
    }
    Ok(())
}

impl OperatorPairState {
    pub fn new(
        a: DMatrix<Complex64>,
        b: DMatrix<Complex64>,
        psi: DVector<Complex64>,
    ) -> Result<Self, UncertaintyError> {
        let n = psi.len();
        if !a.is_square() || !b.is_square() || a.nrows() != n || b.nrows() != n {
            return Err(UncertaintyError::DimensionMismatch(format!(
                "A is {}x{}, B is {}x{}, psi has {} components",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                n
            )));
        }
        if n == 0 {
            return Err(UncertaintyError::DimensionMismatch("empty state".into()));
        }
        check_hermitian(&a, "A")?;
        check_hermitian(&b, "B")?;
        let norm = psi.norm();
        if (norm - 1.0).abs() > HERMITIAN_TOL {
            return Err(UncertaintyError::NonUnitState(norm));
        }
        Ok(Self { a, b, psi })
    }

    pub fn a(&self) -> &DMatrix<Complex64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<Complex64> {
        &self.b
    }

    pub fn psi(&self) -> &DVector<Complex64> {
        &self.psi
    }
}

/// Both sides of `(ΔA)²(ΔB)² ≥ ¼|⟨[A,B]⟩|² + ¼[⟨{A,B}⟩ − 2⟨A⟩⟨B⟩]²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RsBound {
    /// `Var(A)·Var(B)`.
    pub lhs: f64,
    /// `¼|⟨AB − BA⟩|²`.
    pub commutator_term: f64,
    /// `¼[⟨AB + BA⟩ − 2⟨A⟩⟨B⟩]²`.
    pub covariance_term: f64,
}

impl RsBound {
    pub fn rhs(&self) -> f64 {
        self.commutator_term + self.covariance_term
    }

    /// Right-hand side without the covariance term.
    pub fn robertson_rhs(&self) -> f64 {
        self.commutator_term
    }

    /// Slack `lhs − rhs`; non-negative up to rounding.
    pub fn slack(&self) -> f64 {
        self.lhs - self.rhs()
    }
}

/// Evaluates the Robertson–Schrödinger inequality for a state.
///
/// With centred vectors `a = (A − ⟨A⟩)ψ` and `b = (B − ⟨B⟩)ψ` and
/// `z = ⟨a, b⟩`, the commutator term is `(Im z)²`, the covariance term is
/// `(Re z)²` and the left side is `‖a‖²‖b‖²`, so the inequality is
/// Cauchy–Schwarz and holds to rounding.
pub fn rs_bound(state: &OperatorPairState) -> RsBound {
    let psi = &state.psi;
    let centred = |op: &DMatrix<Complex64>| {
        let applied = op * psi;
        let mean = psi.dotc(&applied).re;
        applied - psi * Complex64::new(mean, 0.0)
    };
    let a = centred(&state.a);
    let b = centred(&state.b);
    let z = a.dotc(&b);
    RsBound {
        lhs: a.norm_squared() * b.norm_squared(),
        commutator_term: z.im * z.im,
        covariance_term: z.re * z.re,
    }
}

/// Which solution family of the projector relation applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpreadBranch {
    /// Real `ΔH`: `⟨P(t)⟩ ≥ cos²(αt)`.
    Real,
    /// Purely imaginary `ΔH` (below threshold): `sinh²(αt) ≤ ⟨P(t)⟩ ≤ 1`.
    Virtual,
}

impl SpreadBranch {
    /// Transmutations proceed through the virtual branch; transfers between
    /// stable states and decays through the real one.
    pub fn for_process(kind: ProcessKind) -> Self {
        match kind {
            ProcessKind::Transmutation => Self::Virtual,
            ProcessKind::StableTransfer | ProcessKind::Decay => Self::Real,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectorBound {
    pub branch: SpreadBranch,
    /// Lower bound on `⟨P(t)⟩`, capped at 1.
    pub lower: f64,
    pub upper: f64,
    /// `cos²(αt)` or `sinh²(αt)` before capping.
    pub raw: f64,
    /// The virtual-branch bound has reached 1.
    pub saturated: bool,
    /// Completion time `πħ/|ΔH|` (stable transfer), half-decay time
    /// `πħ/4|ΔH|` (decay) or saturation time `arcsinh(1)·ħ/|ΔH|` (virtual).
    pub characteristic_time: Option<f64>,
}

/// Projector bound of the Mandelstam–Tamm relation with `α = |ΔH|/ħ`.
pub fn mt_projector_bound(delta_h: f64, t: f64, kind: ProcessKind) -> Result<ProjectorBound, UncertaintyError> {
    if t < 0.0 {
        return Err(UncertaintyError::NegativeTime(t));
    }
    if !delta_h.is_finite() || !t.is_finite() {
        return Err(UncertaintyError::InvalidInput("non-finite argument".into()));
    }
    let magnitude = delta_h.abs();
    let alpha = magnitude / HBAR_EV_S;
    let branch = SpreadBranch::for_process(kind);
    let per_alpha = |x: f64| (magnitude > 0.0).then(|| x * HBAR_EV_S / magnitude);
    Ok(match branch {
        SpreadBranch::Real => {
            let raw = (alpha * t).cos().powi(2);
            let completion = match kind {
                ProcessKind::Decay => per_alpha(PI / 4.0),
                _ => per_alpha(PI),
            };
            ProjectorBound {
                branch,
                lower: raw,
                upper: 1.0,
                raw,
                saturated: false,
                characteristic_time: completion,
            }
        }
        SpreadBranch::Virtual => {
            let raw = (alpha * t).sinh().powi(2);
            ProjectorBound {
                branch,
                lower: raw.min(1.0),
                upper: 1.0,
                raw,
                saturated: raw >= 1.0,
                characteristic_time: per_alpha(1f64.asinh()),
            }
        }
    })
}

/// `|ψ|²` sampled on a rectangular `(x, y, z, s)` grid, where `s` is time or
/// energy. Samples are stored row-major with `s` varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct WavepacketGrid {
    axes: [Vec<f64>; 4],
    samples: Vec<f64>,
    reference: Option<f64>,
}

impl WavepacketGrid {
    pub fn new(axes: [Vec<f64>; 4], samples: Vec<f64>, reference: Option<f64>) -> Result<Self, UncertaintyError> {
        for (name, axis) in ["x", "y", "z", "s"].iter().zip(&axes) {
            if axis.is_empty() {
                return Err(UncertaintyError::InvalidInput(format!("axis {name} is empty")));
            }
            if axis.iter().any(|v| !v.is_finite()) || axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(UncertaintyError::InvalidInput(format!(
                    "axis {name} must be finite and strictly increasing"
                )));
            }
        }
        let expected: usize = axes.iter().map(Vec::len).product();
        if samples.len() != expected {
            return Err(UncertaintyError::DimensionMismatch(format!(
                "{} samples for a grid of {expected} points",
                samples.len()
            )));
        }
        if samples.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(UncertaintyError::InvalidInput("samples must be finite and non-negative".into()));
        }
        Ok(Self { axes, samples, reference })
    }

    /// Reads the text form: a header `nx ny nz ns [reference]`, then the
    /// `nx + ny + nz + ns` axis coordinates, then the samples, all as
    /// whitespace- or comma-separated tokens across any number of lines.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, strip_comment(l)))
            .filter(|(_, l)| !l.is_empty());
        let (header_line, header) = lines
            .next()
            .ok_or_else(|| ParseError::new(1, None, "missing header row of axis sizes"))?;
        let head: Vec<&str> = split_fields(header).collect();
        if head.len() != 4 && head.len() != 5 {
            return Err(ParseError::new(
                header_line,
                None,
                "header must hold nx ny nz ns and an optional reference value",
            ));
        }
        let mut sizes = [0usize; 4];
        for (i, tok) in head[..4].iter().enumerate() {
            sizes[i] = tok
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| ParseError::new(header_line, Some(i + 1), format!("bad axis size {tok:?}")))?;
        }
        let reference = match head.get(4) {
            Some(tok) => Some(crate::error::parse_f64(tok, header_line, 5)?),
            None => None,
        };

        let mut values = Vec::new();
        let mut last = header_line;
        for (line, body) in lines {
            last = line;
            for (col, tok) in split_fields(body).enumerate() {
                values.push(crate::error::parse_f64(tok, line, col + 1)?);
            }
        }
        let n_coords: usize = sizes.iter().sum();
        let n_samples: usize = sizes.iter().product();
        if values.len() != n_coords + n_samples {
            return Err(ParseError::new(
                last,
                None,
                format!(
                    "expected {} values ({n_coords} coordinates + {n_samples} samples), found {}",
                    n_coords + n_samples,
                    values.len()
                ),
            ));
        }
        let samples = values.split_off(n_coords);
        let mut rest = values.as_slice();
        let mut axes: [Vec<f64>; 4] = Default::default();
        for (axis, &n) in axes.iter_mut().zip(&sizes) {
            let (head, tail) = rest.split_at(n);
            *axis = head.to_vec();
            rest = tail;
        }
        Self::new(axes, samples, reference).map_err(|e| ParseError::new(header_line, None, e.to_string()))
    }

    pub fn axes(&self) -> &[Vec<f64>; 4] {
        &self.axes
    }

    pub fn reference(&self) -> Option<f64> {
        self.reference
    }

    pub fn with_reference(mut self, reference: Option<f64>) -> Self {
        self.reference = reference;
        self
    }

    fn at(&self, ix: usize, iy: usize, iz: usize, is: usize) -> f64 {
        let [x, y, z, s] = &self.axes;
        let _ = x;
        self.samples[((ix * y.len() + iy) * z.len() + iz) * s.len() + is]
    }
}

/// Trapezoidal weights; a single-sample axis gets weight 1.
fn trapezoid_weights(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| {
            let left = if i > 0 { axis[i] - axis[i - 1] } else { 0.0 };
            let right = if i + 1 < n { axis[i + 1] - axis[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// Standard deviation of the last axis over the slice at `z_index`, taken
/// about the grid's reference value or, without one, about the slice mean.
pub fn slice_spread(grid: &WavepacketGrid, z_index: usize) -> Result<f64, UncertaintyError> {
    let [x, y, z, s] = &grid.axes;
    if z_index >= z.len() {
        return Err(UncertaintyError::DimensionMismatch(format!(
            "z index {z_index} outside an axis of {}",
            z.len()
        )));
    }
    let (wx, wy, ws) = (trapezoid_weights(x), trapezoid_weights(y), trapezoid_weights(s));
    let mut mass = 0.0;
    let mut first = 0.0;
    let mut marginal = vec![0.0; s.len()];
    for (ix, &wxi) in wx.iter().enumerate() {
        for (iy, &wyi) in wy.iter().enumerate() {
            for (is, &wsi) in ws.iter().enumerate() {
                let w = wxi * wyi * wsi * grid.at(ix, iy, z_index, is);
                marginal[is] += w;
                mass += w;
                first += w * s[is];
            }
        }
    }
    if mass.is_nan() || mass <= 0.0 {
        return Err(UncertaintyError::EmptySlice(z_index));
    }
    let centre = grid.reference.unwrap_or(first / mass);
    let second: f64 = marginal.iter().zip(s).map(|(w, v)| w * (v - centre).powi(2)).sum();
    Ok((second / mass).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WignerSpreads {
    pub delta_t: f64,
    pub delta_e: f64,
}

/// Time and energy spreads at one position along the propagation axis.
pub fn wigner_spreads(
    time_grid: &WavepacketGrid,
    energy_grid: &WavepacketGrid,
    z_index: usize,
) -> Result<WignerSpreads, UncertaintyError> {
    Ok(WignerSpreads {
        delta_t: slice_spread(time_grid, z_index)?,
        delta_e: slice_spread(energy_grid, z_index)?,
    })
}
