//! Transmutation products `Δm·τ/ħ`, lifetime bounds, the mass-raising
//! transmutation graph and the atmospheric-neutrino mass estimate.
//!
//! Mass splittings are stored as positive magnitudes in MeV. The physical
//! convention `Δm = m_i − m_f < 0` for a transition into the heavier partner
//! is available through [`TransmutationRecord::signed_delta_m`].

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::constants::{GEV, HBAR_EV_S, HBAR_MEV_S, KM, SPEED_OF_LIGHT};
use crate::error::{ParseError, parse_f64, strip_comment};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParticleError {
    #[error("record {pair:?} has no {field}")]
    MissingField { pair: String, field: &'static str },
    #[error("{0} must be positive, got {1}")]
    NonPositive(&'static str, f64),
    #[error("species {0:?} and {1:?} have equal mass; no direction can be assigned")]
    Tie(String, String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// What the lifetime column of a record means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TauKind {
    /// Lifetime of the lighter, short-lived partner.
    #[serde(rename = "short_lived")]
    ShortLivedPartner,
    /// Only the mean lifetime of the pair is known.
    #[serde(rename = "mean")]
    MeanLifetime,
    /// `Δm` is a lower bound and no lifetime is given; the record feeds a
    /// lifetime bound instead of a product.
    #[serde(rename = "lower_bound_dm")]
    LowerBoundOnDeltaM,
}

impl TauKind {
    pub fn token(self) -> &'static str {
        match self {
            Self::ShortLivedPartner => "short_lived",
            Self::MeanLifetime => "mean",
            Self::LowerBoundOnDeltaM => "lower_bound_dm",
        }
    }
}

impl FromStr for TauKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "short_lived" => Ok(Self::ShortLivedPartner),
            "mean" => Ok(Self::MeanLifetime),
            "lower_bound_dm" => Ok(Self::LowerBoundOnDeltaM),
            other => Err(format!(
                "unknown tau_kind {other:?} (expected short_lived, mean or lower_bound_dm)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransmutationRecord {
    pub pair_name: String,
    /// Magnitude of the mass splitting, MeV.
    pub delta_m: f64,
    /// Seconds; absent for bound-only records.
    pub tau: Option<f64>,
    pub tau_kind: TauKind,
}

impl TransmutationRecord {
    /// `m_i − m_f` for the transition into the heavier partner (negative).
    pub fn signed_delta_m(&self) -> f64 {
        -self.delta_m
    }
}

/// Position of a product relative to `½`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductClass {
    Below,
    Near,
    Above,
}

pub const DEFAULT_PRODUCT_WINDOW: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UncertaintyProduct {
    /// `Δm·τ/ħ`.
    pub value: f64,
    pub class: ProductClass,
}

/// `Δm·τ/ħ`, classified against `½ ± window`.
pub fn uncertainty_product(
    record: &TransmutationRecord,
    window: f64,
) -> Result<UncertaintyProduct, ParticleError> {
    let tau = record.tau.ok_or_else(|| ParticleError::MissingField {
        pair: record.pair_name.clone(),
        field: "tau",
    })?;
    if record.delta_m.is_nan() || record.delta_m <= 0.0 {
        return Err(ParticleError::NonPositive("delta_m", record.delta_m));
    }
    if tau.is_nan() || tau <= 0.0 {
        return Err(ParticleError::NonPositive("tau", tau));
    }
    if window.is_nan() || window < 0.0 {
        return Err(ParticleError::NonPositive("window", window));
    }
    let value = record.delta_m * tau / HBAR_MEV_S;
    let class = if value < 0.5 - window {
        ProductClass::Below
    } else if value > 0.5 + window {
        ProductClass::Above
    } else {
        ProductClass::Near
    };
    Ok(UncertaintyProduct { value, class })
}

pub const DEFAULT_BOUND_FACTOR: f64 = 0.5;
/// The factor that reproduces the published B_s⁰ lifetime bound.
pub const PUBLISHED_BOUND_FACTOR: f64 = 0.775;

/// Upper bound `τ < factor·ħ/Δm` in seconds, with `Δm` a lower bound in MeV.
pub fn lifetime_bound(delta_m_lower: f64, factor: f64) -> Result<f64, ParticleError> {
    if !(delta_m_lower > 0.0 && delta_m_lower.is_finite()) {
        return Err(ParticleError::NonPositive("delta_m_lower", delta_m_lower));
    }
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(ParticleError::NonPositive("factor", factor));
    }
    Ok(factor * HBAR_MEV_S / delta_m_lower)
}

/// Species with a mass or mass rank, kept sorted by increasing mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassHierarchy {
    species: Vec<(String, f64)>,
}

impl MassHierarchy {
    /// Accepts species in any order. Names must be unique and masses finite;
    /// equal masses are allowed here and handled by [`TiePolicy`].
    pub fn new(species: Vec<(String, f64)>) -> Result<Self, ParticleError> {
        let mut species = species;
        for (name, m) in &species {
            if name.is_empty() {
                return Err(ParticleError::InvalidInput("empty species name".into()));
            }
            if !m.is_finite() {
                return Err(ParticleError::InvalidInput(format!("mass of {name:?} is not finite")));
            }
        }
        species.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut names: Vec<&str> = species.iter().map(|(n, _)| n.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(ParticleError::InvalidInput(format!("duplicate species {:?}", w[0])));
        }
        Ok(Self { species })
    }

    /// Species listed lightest first, ranked 0, 1, 2, ...
    pub fn from_ordered<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self, ParticleError> {
        Self::new(
            names
                .into_iter()
                .enumerate()
                .map(|(i, n)| (n.into(), i as f64))
                .collect(),
        )
    }

    /// Parses `name:mass,name:mass,...`; a bare `name` takes its list position
    /// as rank.
    pub fn parse(spec: &str) -> Result<Self, ParticleError> {
        let mut species = Vec::new();
        for (i, item) in spec.split(',').map(str::trim).filter(|s| !s.is_empty()).enumerate() {
            match item.split_once(':') {
                Some((name, mass)) => {
                    let m: f64 = mass.trim().parse().map_err(|_| {
                        ParticleError::InvalidInput(format!("bad mass {mass:?} for {name:?}"))
                    })?;
                    species.push((name.trim().to_string(), m));
                }
                None => species.push((item.to_string(), i as f64)),
            }
        }
        Self::new(species)
    }

    pub fn species(&self) -> &[(String, f64)] {
        &self.species
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum TiePolicy {
    /// Equal masses are an error.
    #[default]
    Error,
    /// Equal masses are connected by no edge in either direction.
    NoEdge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeStatus {
    Allowed,
    Suppressed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransmutationEdge {
    pub from: String,
    pub to: String,
    pub status: EdgeStatus,
}

/// Every lighter→heavier pair is allowed; each reverse edge is listed as
/// suppressed. Allowed edges come first, ordered by (from, to) rank.
pub fn allowed_transmutations(
    hierarchy: &MassHierarchy,
    ties: TiePolicy,
) -> Result<Vec<TransmutationEdge>, ParticleError> {
    let s = hierarchy.species();
    let mut allowed = Vec::new();
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            if s[i].1 == s[j].1 {
                match ties {
                    TiePolicy::Error => return Err(ParticleError::Tie(s[i].0.clone(), s[j].0.clone())),
                    TiePolicy::NoEdge => continue,
                }
            }
            allowed.push((i, j));
        }
    }
    let edge = |from: usize, to: usize, status| TransmutationEdge {
        from: s[from].0.clone(),
        to: s[to].0.clone(),
        status,
    };
    let mut edges: Vec<_> = allowed.iter().map(|&(i, j)| edge(i, j, EdgeStatus::Allowed)).collect();
    edges.extend(allowed.iter().map(|&(i, j)| edge(j, i, EdgeStatus::Suppressed)));
    Ok(edges)
}

/// `Δm²·τ` as printed for the unit-phase condition, eV²·s.
pub const PRINTED_DM2_TAU: f64 = 2.0 / 3.0 * 1e-11;
/// `Δm·τ` as printed for the half-ħ product, eV·s.
pub const PRINTED_DM_TAU: f64 = 2.0 / 3.0 * 1e-15;
/// Published headline neutrino mass splitting, eV.
pub const PRINTED_DELTA_M: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepLogEntry {
    pub step: &'static str,
    pub value: f64,
    pub unit: &'static str,
    pub assumption: String,
    /// Set when the step disagrees with an independent evaluation.
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeutrinoEstimate {
    /// From the unit-phase condition `Δm²·L/(2E) = 1`, eV².
    pub delta_m2: f64,
    /// Flight time `L/c`, seconds.
    pub tau: f64,
    /// Published-pipeline headline: the printed `Δm·τ` over the printed
    /// `Δm²·τ`, eV (strictly eV⁻¹, see the step log).
    pub delta_m: f64,
    /// `ħ/(2τ)`: the half-ħ product applied to the computed flight time, eV.
    pub audited_delta_m: f64,
    /// `√Δm²` from the phase condition, eV.
    pub audited_delta_m_from_splitting: f64,
    pub step_log: Vec<StepLogEntry>,
}

impl NeutrinoEstimate {
    pub fn flags(&self) -> impl Iterator<Item = &str> {
        self.step_log.iter().filter_map(|s| s.flag.as_deref())
    }
}

fn rel_mismatch(a: f64, b: f64) -> bool {
    (a - b).abs() > 0.05 * a.abs().max(b.abs())
}

/// Runs the published estimate step by step and, alongside it, a
/// dimensionally explicit evaluation with pinned `ħ` and `c`.
pub fn neutrino_mass_estimate(l_km: f64, e_gev: f64) -> Result<NeutrinoEstimate, ParticleError> {
    if !(l_km > 0.0 && l_km.is_finite()) {
        return Err(ParticleError::NonPositive("L_km", l_km));
    }
    if !(e_gev > 0.0 && e_gev.is_finite()) {
        return Err(ParticleError::NonPositive("E_GeV", e_gev));
    }
    let delta_m2 = 2.0 * e_gev / l_km;
    let tau = l_km * KM / SPEED_OF_LIGHT;
    let computed_dm2_tau = delta_m2 * tau;
    let half_hbar = 0.5 * HBAR_EV_S;
    let headline = PRINTED_DM_TAU / PRINTED_DM2_TAU;
    let consistent_division = PRINTED_DM2_TAU / PRINTED_DM_TAU;
    let audited = half_hbar / tau;
    let from_splitting = delta_m2.sqrt();
    let e_ev = e_gev * GEV;

    let mut log = Vec::new();
    log.push(StepLogEntry {
        step: "phase_condition",
        value: delta_m2,
        unit: "eV^2",
        assumption: format!(
            "Δm²(eV²)·L(km)/(2E(GeV)) = 1 taken literally with L = {l_km} km, E = {e_gev} GeV; \
             no oscillation phase factor"
        ),
        flag: None,
    });
    log.push(StepLogEntry {
        step: "flight_time",
        value: tau,
        unit: "s",
        assumption: "τ = L/c".into(),
        flag: None,
    });
    log.push(StepLogEntry {
        step: "dm2_tau_printed",
        value: PRINTED_DM2_TAU,
        unit: "eV^2*s",
        assumption: "published rewrite of the phase condition".into(),
        flag: rel_mismatch(PRINTED_DM2_TAU, computed_dm2_tau).then(|| {
            format!(
                "printed Δm²·τ = {PRINTED_DM2_TAU:e} but the phase condition gives \
                 Δm²·τ = 2E/c = {computed_dm2_tau:e} eV²·s (E in GeV, c in km/s)"
            )
        }),
    });
    log.push(StepLogEntry {
        step: "dm_tau_printed",
        value: PRINTED_DM_TAU,
        unit: "eV*s",
        assumption: "published half-ħ product in eV·s".into(),
        flag: rel_mismatch(PRINTED_DM_TAU, half_hbar).then(|| {
            format!(
                "printed Δm·τ = {PRINTED_DM_TAU:e} eV·s equals ħ = {HBAR_EV_S:e}, not ħ/2 = {half_hbar:e}"
            )
        }),
    });
    log.push(StepLogEntry {
        step: "headline_division",
        value: headline,
        unit: "1/eV",
        assumption: "published headline, reproduced as (Δm·τ)/(Δm²·τ)".into(),
        flag: Some(format!(
            "(Δm·τ)/(Δm²·τ) has units of 1/eV; the consistent division (Δm²·τ)/(Δm·τ) \
             gives {consistent_division:e} eV"
        )),
    });
    log.push(StepLogEntry {
        step: "audited_delta_m",
        value: audited,
        unit: "eV",
        assumption: "Δm·τ = ħ/2 with ħ = 6.582119569e-16 eV·s and τ = L/c".into(),
        flag: rel_mismatch(audited, headline)
            .then(|| format!("audited Δm = {audited:e} eV differs from the headline {headline:e}")),
    });
    log.push(StepLogEntry {
        step: "audited_splitting",
        value: from_splitting,
        unit: "eV",
        assumption: format!("√Δm² from the phase condition (E = {e_ev:e} eV)"),
        flag: None,
    });

    Ok(NeutrinoEstimate {
        delta_m2,
        tau,
        delta_m: headline,
        audited_delta_m: audited,
        audited_delta_m_from_splitting: from_splitting,
        step_log: log,
    })
}

/// The table shipped with the crate.
pub const BUNDLED_TABLE: &str = include_str!("../../../data/mesons.tbl");

/// Reads `pair_name | delta_m_MeV | tau_s | tau_kind` records. `#` starts a
/// comment, blank lines are ignored and `-` marks an absent lifetime.
pub fn load_particle_table(source: &str) -> Result<Vec<TransmutationRecord>, ParseError> {
    let mut records = Vec::new();
    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('|').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(ParseError::new(
                line_no,
                None,
                format!("expected 4 '|'-separated fields, found {}", fields.len()),
            ));
        }
        if fields[0].is_empty() {
            return Err(ParseError::new(line_no, Some(1), "empty pair name"));
        }
        let delta_m = parse_f64(fields[1], line_no, 2)?;
        if delta_m <= 0.0 {
            return Err(ParseError::new(
                line_no,
                Some(2),
                format!("delta_m must be positive, got {delta_m}"),
            ));
        }
        let tau = match fields[2] {
            "-" => None,
            token => {
                let t = parse_f64(token, line_no, 3)?;
                if t <= 0.0 {
                    return Err(ParseError::new(line_no, Some(3), format!("tau must be positive, got {t}")));
                }
                Some(t)
            }
        };
        let tau_kind: TauKind = fields[3].parse().map_err(|e: String| ParseError::new(line_no, Some(4), e))?;
        if tau.is_none() && tau_kind != TauKind::LowerBoundOnDeltaM {
            return Err(ParseError::new(
                line_no,
                Some(3),
                format!("tau is required for tau_kind {}", tau_kind.token()),
            ));
        }
        records.push(TransmutationRecord {
            pair_name: fields[0].to_string(),
            delta_m,
            tau,
            tau_kind,
        });
    }
    Ok(records)
}

/// Writes records in the format read by [`load_particle_table`], with
/// shortest round-trip float formatting.
pub fn write_particle_table(records: &[TransmutationRecord]) -> String {
    let mut out = String::from("# pair_name | delta_m_MeV | tau_s | tau_kind\n");
    for r in records {
        let tau = r.tau.map_or_else(|| "-".to_string(), |t| format!("{t:e}"));
        let _ = writeln!(out, "{} | {:e} | {} | {}", r.pair_name, r.delta_m, tau, r.tau_kind.token());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductRow {
    pub pair_name: String,
    pub delta_m: f64,
    pub tau: f64,
    pub tau_kind: TauKind,
    pub product: f64,
    pub class: ProductClass,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub pair_name: String,
    pub delta_m_lower: f64,
    /// Bound with the half-ħ factor.
    pub tau_bound: f64,
    /// Bound with [`PUBLISHED_BOUND_FACTOR`].
    pub tau_bound_published_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableAnalysis {
    pub products: Vec<ProductRow>,
    pub bounds: Vec<BoundRow>,
}

/// Products for records with a lifetime and both lifetime bounds for
/// bound-only records.
pub fn analyze_table(records: &[TransmutationRecord], window: f64) -> Result<TableAnalysis, ParticleError> {
    let mut analysis = TableAnalysis {
        products: Vec::new(),
        bounds: Vec::new(),
    };
    for r in records {
        match (r.tau_kind, r.tau) {
            (TauKind::LowerBoundOnDeltaM, _) => analysis.bounds.push(BoundRow {
                pair_name: r.pair_name.clone(),
                delta_m_lower: r.delta_m,
                tau_bound: lifetime_bound(r.delta_m, DEFAULT_BOUND_FACTOR)?,
                tau_bound_published_factor: lifetime_bound(r.delta_m, PUBLISHED_BOUND_FACTOR)?,
            }),
            (kind, Some(tau)) => {
                let p = uncertainty_product(r, window)?;
                analysis.products.push(ProductRow {
                    pair_name: r.pair_name.clone(),
                    delta_m: r.delta_m,
                    tau,
                    tau_kind: kind,
                    product: p.value,
                    class: p.class,
                });
            }
            (_, None) => {
                return Err(ParticleError::MissingField {
                    pair: r.pair_name.clone(),
                    field: "tau",
                })
            }
        }
    }
    Ok(analysis)
}
