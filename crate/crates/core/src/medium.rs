//! Feasibility conditions for superluminal transfer in a scattering medium
//! and the deterministic group-index / jump-corrected transit model.
//!
//! All inputs are SI: densities in m⁻³, cross-sections in m², lengths in m,
//! angular frequencies in rad/s.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::constants::{wavelength_from_omega, SPEED_OF_LIGHT, THOMSON_CROSS_SECTION};
use crate::error::{parse_f64, strip_comment, ParseError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MediumError {
    #[error("{0} must be positive and finite, got {1}")]
    NonPositive(&'static str, f64),
    #[error("free path is underdetermined: supply rho and sigma, or omega and n")]
    Underdetermined,
    #[error("{0}")]
    InvalidInput(String),
}

fn positive(name: &'static str, v: f64) -> Result<f64, MediumError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(MediumError::NonPositive(name, v))
    }
}

/// Mean free path `ℓ = 1/(ρσ)`.
pub fn free_path(rho: f64, sigma: f64) -> Result<f64, MediumError> {
    Ok(1.0 / (positive("rho", rho)? * positive("sigma", sigma)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TunnelingCheck {
    pub satisfied: bool,
    /// `πc/|Δω|`.
    pub formation_path: f64,
    pub free_path: f64,
    /// `formation_path / free_path`; the condition holds iff this exceeds 1.
    pub margin: f64,
}

/// Necessary condition for tunneling: the formation path `πc/|Δω|` must
/// exceed the free path `1/(ρσ)`. A zero detuning gives an infinite path.
pub fn tunneling_condition(delta_omega: f64, rho: f64, sigma: f64) -> Result<TunnelingCheck, MediumError> {
    if !delta_omega.is_finite() {
        return Err(MediumError::NonPositive("delta_omega", delta_omega));
    }
    let ell = free_path(rho, sigma)?;
    let path = PI * SPEED_OF_LIGHT / delta_omega.abs();
    let margin = path / ell;
    Ok(TunnelingCheck {
        satisfied: margin > 1.0,
        formation_path: path,
        free_path: ell,
        margin,
    })
}

/// Detuning at which the tunneling condition is marginal, `πcρσ`.
pub fn marginal_detuning(rho: f64, sigma: f64) -> Result<f64, MediumError> {
    Ok(PI * SPEED_OF_LIGHT / free_path(rho, sigma)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdCheck {
    pub satisfied: bool,
    pub threshold: f64,
}

/// Far from resonance (Thomson scattering, `Δω → ω`): `λ > 2/(ρσ_T)`.
pub fn wavelength_condition(lambda: f64, rho: f64) -> Result<ThresholdCheck, MediumError> {
    let lambda = positive("lambda", lambda)?;
    let threshold = 2.0 * free_path(rho, THOMSON_CROSS_SECTION)?;
    Ok(ThresholdCheck {
        satisfied: lambda > threshold,
        threshold,
    })
}

/// Resonant cross-section `λ²Γ²/(π[Δω² + Γ²/4])`, angular factors omitted.
pub fn resonant_cross_section(lambda: f64, gamma: f64, delta_omega: f64) -> Result<f64, MediumError> {
    let lambda = positive("lambda", lambda)?;
    let gamma = positive("gamma", gamma)?;
    if !delta_omega.is_finite() {
        return Err(MediumError::NonPositive("delta_omega", delta_omega));
    }
    Ok(lambda * lambda * gamma * gamma / (PI * (delta_omega * delta_omega + 0.25 * gamma * gamma)))
}

/// Near resonance (`|Δω| < Γ`): `|Δω| ≤ cρλ²`. The caller is responsible
/// for the `|Δω| < Γ` applicability condition.
pub fn resonance_condition(delta_omega: f64, rho: f64, lambda: f64) -> Result<ThresholdCheck, MediumError> {
    let rho = positive("rho", rho)?;
    let lambda = positive("lambda", lambda)?;
    if !delta_omega.is_finite() {
        return Err(MediumError::NonPositive("delta_omega", delta_omega));
    }
    let threshold = SPEED_OF_LIGHT * rho * lambda * lambda;
    Ok(ThresholdCheck {
        satisfied: delta_omega.abs() <= threshold,
        threshold,
    })
}

/// How the scattering cross-section of a medium is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "model")]
pub enum CrossSection {
    Explicit { sigma: f64 },
    Thomson,
    /// Evaluated at the probe frequency from the medium's resonance.
    Resonant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resonance {
    pub omega0: f64,
    pub gamma: f64,
}

/// Scatterer density, cross-section model, refractive index and optional
/// resonance of a medium.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MediumSpec {
    pub rho: Option<f64>,
    pub cross_section: Option<CrossSection>,
    pub n: f64,
    pub resonance: Option<Resonance>,
}

impl Default for MediumSpec {
    fn default() -> Self {
        Self {
            rho: None,
            cross_section: None,
            n: 1.0,
            resonance: None,
        }
    }
}

impl MediumSpec {
    pub fn validate(&self) -> Result<(), MediumError> {
        if let Some(rho) = self.rho {
            positive("rho", rho)?;
        }
        positive("n", self.n)?;
        if let Some(CrossSection::Explicit { sigma }) = self.cross_section {
            positive("sigma", sigma)?;
        }
        if let Some(res) = self.resonance {
            positive("omega0", res.omega0)?;
            positive("gamma", res.gamma)?;
        }
        if matches!(self.cross_section, Some(CrossSection::Resonant)) && self.resonance.is_none() {
            return Err(MediumError::InvalidInput(
                "resonant cross-section needs omega0 and gamma".into(),
            ));
        }
        Ok(())
    }

    /// Cross-section at angular frequency `omega` (needed only by the
    /// resonant model).
    pub fn sigma_at(&self, omega: Option<f64>) -> Result<Option<f64>, MediumError> {
        Ok(match self.cross_section {
            None => None,
            Some(CrossSection::Explicit { sigma }) => Some(positive("sigma", sigma)?),
            Some(CrossSection::Thomson) => Some(THOMSON_CROSS_SECTION),
            Some(CrossSection::Resonant) => {
                let res = self.resonance.ok_or_else(|| {
                    MediumError::InvalidInput("resonant cross-section needs omega0 and gamma".into())
                })?;
                let omega = omega.ok_or_else(|| {
                    MediumError::InvalidInput("resonant cross-section needs a probe omega".into())
                })?;
                let omega = positive("omega", omega)?;
                Some(resonant_cross_section(wavelength_from_omega(omega), res.gamma, omega - res.omega0)?)
            }
        })
    }

    /// Reads `key = value` lines. Keys: `rho` (m⁻³), `sigma` (m²) or
    /// `sigma_model` (`thomson`, `resonant`, `explicit`), `n`, `omega0`
    /// (rad/s), `gamma` (rad/s). Unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let map = parse_key_values(text)?;
        let mut spec = MediumSpec::default();
        let mut model: Option<(usize, String)> = None;
        let mut sigma: Option<f64> = None;
        let mut omega0 = None;
        let mut gamma = None;
        let mut last_line = 1;
        for (key, (line, value)) in &map {
            last_line = last_line.max(*line);
            let num = || parse_f64(value, *line, 2);
            match key.as_str() {
                "rho" => spec.rho = Some(num()?),
                "sigma" => sigma = Some(num()?),
                "sigma_model" => model = Some((*line, value.to_ascii_lowercase())),
                "n" => spec.n = num()?,
                "omega0" => omega0 = Some(num()?),
                "gamma" => gamma = Some(num()?),
                other => {
                    return Err(ParseError::new(*line, Some(1), format!("unknown medium key {other:?}")));
                }
            }
        }
        spec.cross_section = match (model, sigma) {
            (None, None) => None,
            (None, Some(s)) => Some(CrossSection::Explicit { sigma: s }),
            (Some((line, m)), s) => Some(match (m.as_str(), s) {
                ("thomson", None) => CrossSection::Thomson,
                ("resonant", None) => CrossSection::Resonant,
                ("explicit", Some(s)) => CrossSection::Explicit { sigma: s },
                ("explicit", None) => {
                    return Err(ParseError::new(line, Some(2), "sigma_model = explicit needs sigma"));
                }
                (_, Some(_)) => {
                    return Err(ParseError::new(line, Some(2), "sigma conflicts with sigma_model"));
                }
                (other, None) => {
                    return Err(ParseError::new(line, Some(2), format!("unknown sigma_model {other:?}")));
                }
            }),
        };
        spec.resonance = match (omega0, gamma) {
            (Some(omega0), Some(gamma)) => Some(Resonance { omega0, gamma }),
            (None, None) => None,
            _ => return Err(ParseError::new(last_line, None, "omega0 and gamma must be given together")),
        };
        spec.validate()
            .map_err(|e| ParseError::new(last_line, None, e.to_string()))?;
        Ok(spec)
    }
}

/// Parses `key = value` (or `key: value`) lines, `#` comments allowed.
/// Returns each key with its line number. Duplicate keys are an error.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, (usize, String)>, ParseError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = strip_comment(raw);
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .or_else(|| body.split_once(':'))
            .ok_or_else(|| ParseError::new(line, None, "expected key = value"))?;
        let key = key.trim().to_ascii_lowercase();
        if key.is_empty() {
            return Err(ParseError::new(line, Some(1), "empty key"));
        }
        if map.insert(key.clone(), (line, value.trim().to_string())).is_some() {
            return Err(ParseError::new(line, Some(1), format!("duplicate key {key:?}")));
        }
    }
    Ok(map)
}

/// How the instantaneous jump per scattering act is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "closure")]
pub enum JumpClosure {
    /// A given jump length in metres.
    Explicit { jump: f64 },
    /// The formation path `πc/|Δω|` (`λ/2` when `Δω → ω`).
    FormationPath { delta_omega: f64 },
    /// `Δℓ/ℓ = 2π(n − 1)`, which makes `u/c = 1 + 2π(n − 1)`.
    #[serde(rename = "paper")]
    PhaseIndex,
}

impl JumpClosure {
    /// Jump-to-free-path ratio for a medium of phase index `n`, or `None`
    /// when the ratio needs the free path itself.
    pub fn ratio_without_free_path(&self, n: f64) -> Option<f64> {
        match self {
            Self::PhaseIndex => Some(2.0 * PI * (n - 1.0)),
            _ => None,
        }
    }
}

/// Where the free path comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FreePathSource {
    /// `1/(ρσ)`.
    Scatterers,
    /// Rough estimate `c/(2ω(n − 1))` from the phase index.
    PhaseIndexEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitRequest {
    /// Delay per scattering act, seconds.
    pub tau1: f64,
    pub closure: JumpClosure,
    /// Path length `L`, metres.
    pub length: f64,
    /// Probe angular frequency; needed for the phase-index free path and
    /// the resonant cross-section.
    pub omega: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitPrediction {
    pub free_path: f64,
    pub free_path_source: FreePathSource,
    pub jump: f64,
    /// `N = L/ℓ`.
    pub scatter_count: f64,
    /// `N′ = L/(ℓ + Δℓ)`.
    pub corrected_scatter_count: f64,
    /// `n_g = 1 + cτ₁/ℓ`.
    pub group_index: f64,
    /// `n_g′ = 1 + (n_g − 1)/(1 + Δℓ/ℓ)`.
    pub corrected_index: f64,
    /// `T₁ = L/c + Nτ₁`.
    pub transit_time: f64,
    /// `L_eff = L − N′Δℓ`.
    pub effective_length: f64,
    /// `u/c = L/L_eff = 1 + Δℓ/ℓ`.
    pub speed_ratio: f64,
    /// The free path came from the rough phase-index estimate.
    pub estimate: bool,
    /// A group index came out negative (anomalous dispersion); reported
    /// as-is.
    pub negative_index: bool,
}

/// Deterministic transit through length `L` of a medium.
///
/// The free path comes from `ρσ` when both are available, otherwise from the
/// phase-index estimate `c/(2ω(n − 1))`. Delay and jump enter separate
/// indices: `n_g` uses the uncorrected count `N`, and the jump correction is
/// applied only in `n_g′`.
pub fn transit_prediction(spec: &MediumSpec, req: &TransitRequest) -> Result<TransitPrediction, MediumError> {
    spec.validate()?;
    let length = positive("L", req.length)?;
    if !req.tau1.is_finite() {
        return Err(MediumError::InvalidInput("tau1 must be finite".into()));
    }
    let sigma = spec.sigma_at(req.omega)?;
    let (ell, source) = match (spec.rho, sigma, req.omega) {
        (Some(rho), Some(sigma), _) => (free_path(rho, sigma)?, FreePathSource::Scatterers),
        (_, _, Some(omega)) => {
            let omega = positive("omega", omega)?;
            let excess = positive("n - 1", spec.n - 1.0)?;
            (SPEED_OF_LIGHT / (2.0 * omega * excess), FreePathSource::PhaseIndexEstimate)
        }
        _ => return Err(MediumError::Underdetermined),
    };
    let jump = match req.closure {
        JumpClosure::Explicit { jump } => {
            if !(jump.is_finite() && jump >= 0.0) {
                return Err(MediumError::InvalidInput(format!("jump must be non-negative, got {jump}")));
            }
            jump
        }
        JumpClosure::FormationPath { delta_omega } => PI * SPEED_OF_LIGHT / positive("delta_omega", delta_omega.abs())?,
        JumpClosure::PhaseIndex => 2.0 * PI * (spec.n - 1.0) * ell,
    };
    let ratio = jump / ell;
    let scatter_count = length / ell;
    let corrected_scatter_count = length / (ell + jump);
    let group_index = 1.0 + SPEED_OF_LIGHT * req.tau1 / ell;
    let corrected_index = 1.0 + (group_index - 1.0) / (1.0 + ratio);
    let effective_length = length - corrected_scatter_count * jump;
    Ok(TransitPrediction {
        free_path: ell,
        free_path_source: source,
        jump,
        scatter_count,
        corrected_scatter_count,
        group_index,
        corrected_index,
        transit_time: length / SPEED_OF_LIGHT + scatter_count * req.tau1,
        effective_length,
        speed_ratio: 1.0 + ratio,
        estimate: source == FreePathSource::PhaseIndexEstimate,
        negative_index: group_index < 0.0 || corrected_index < 0.0,
    })
}

/// Speed ratio under the `Δℓ/ℓ = 2π(n − 1)` closure, which needs no free path.
pub fn closure_speed_ratio(n: f64) -> Result<f64, MediumError> {
    positive("n", n)?;
    Ok(1.0 + 2.0 * PI * (n - 1.0))
}
