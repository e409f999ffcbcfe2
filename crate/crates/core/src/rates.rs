//! Finite-size secret-key rates for the three proof techniques, plus their
//! common asymptotic limits.
//!
//! All rates are per *transmitted* signal. Every technique shares the same
//! skeleton — sacrifice `f` of the detected signals, widen the observed
//! QBER by a Hoeffding deviation, correct errors at `γ·h₂(q_eff)` bits per
//! key signal, amplify privacy — and they differ only in the entropy bound:
//!
//! * **FME**: `η(1−f)·[−log₂ P_g(q_eff) − γ·h₂(q_eff)] + (2/N)·log₂(√2·ε_h)`
//! * **EUR**: `η(1−f)·[1 − (1+γ)·h₂(q_eff)] + (2/N)·log₂(√2·ε_h)`
//! * **AEP**: the EUR rate minus `sqrt(η(1−f)/N)·Δ(ε_s)` with [`delta_aep`]
//!
//! A widened QBER above 1/2 makes a technique's bound vacuous; that is
//! reported as [`RateOutcome::Infeasible`], never silently clamped to zero.
//! Negative rates of feasible runs are preserved in
//! [`RatePoint::raw_rate`], with [`RatePoint::clamped_rate`] alongside.

use std::fmt;

use crate::guessing::pg_closed_form;
use crate::model::{
    binary_entropy, check_epsilon, ChannelModel, EstimationOutcome, ModelError, ProtocolConfig,
    SecurityBudget,
};

/// The proof technique used to bound the extractable key length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodId {
    /// Fidelity bound on the min-entropy via the guessing probability.
    Fme,
    /// Smooth min-entropy via the asymptotic equipartition property.
    Aep,
    /// Entropic uncertainty relation.
    Eur,
}

impl MethodId {
    pub const ALL: [MethodId; 3] = [MethodId::Fme, MethodId::Aep, MethodId::Eur];

    /// Lower-case identifier used in CSV output and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            MethodId::Fme => "fme",
            MethodId::Aep => "aep",
            MethodId::Eur => "eur",
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A feasible finite-size rate evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub method: MethodId,
    /// Secret bits per transmitted signal; may be negative.
    pub raw_rate: f64,
    /// `max(raw_rate, 0)` — what a deployment would actually distill.
    pub clamped_rate: f64,
    /// Worst-case QBER after statistical widening.
    pub effective_qber: f64,
    /// The Hoeffding widening applied to the observed QBER.
    pub delta: f64,
    /// Error-correction leakage per transmitted signal,
    /// `γ·η·(1−f)·h₂(q_eff)`.
    pub leak_per_signal: f64,
    /// Sum of the security parameters consumed by this technique.
    pub epsilon_total: f64,
    /// Expected number of detected key signals, `η·(1−f)·N`.
    pub n_key: f64,
}

/// Result of evaluating one technique on one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateOutcome {
    Feasible(RatePoint),
    /// The widened QBER exceeds 1/2: parameter estimation cannot rule out a
    /// fully insecure channel, so the bound is vacuous at any rate.
    Infeasible {
        effective_qber: f64,
        delta: f64,
    },
}

impl RateOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, RateOutcome::Feasible(_))
    }

    pub fn rate_point(&self) -> Option<&RatePoint> {
        match self {
            RateOutcome::Feasible(point) => Some(point),
            RateOutcome::Infeasible { .. } => None,
        }
    }

    /// Distillable rate: clamped at zero, and zero for infeasible runs.
    pub fn clamped_rate(&self) -> f64 {
        match self {
            RateOutcome::Feasible(point) => point.clamped_rate,
            RateOutcome::Infeasible { .. } => 0.0,
        }
    }
}

/// Finite-size correction per key signal consumed by the AEP technique,
/// `Δ(ε_s) = 4·log₂(2 + √2)·sqrt(log₂(2/ε_s²))`.
///
/// The domain is `(0, √2]`: the correction vanishes at `ε_s = √2` (useful
/// as a sanity limit) and grows without bound as `ε_s → 0`. Protocol
/// budgets additionally require `ε_s < 1`; that stricter check lives in
/// [`SecurityBudget`] validation.
pub fn delta_aep(eps_s: f64) -> Result<f64, ModelError> {
    if !(eps_s.is_finite() && eps_s > 0.0 && eps_s <= std::f64::consts::SQRT_2) {
        return Err(ModelError::InvalidSmoothingParameter(eps_s));
    }
    // At eps_s = √2 the log term is an exact zero in ℝ but round-off can
    // land a hair below; clamp so the square root stays real.
    let log_term = (2.0 / (eps_s * eps_s)).log2().max(0.0);
    Ok(4.0 * (2.0 + std::f64::consts::SQRT_2).log2() * log_term.sqrt())
}

/// Total error-correction leakage in bits for a block of `key_signals`
/// signals at error rate `qber`, `γ·n·h₂(q)`.
pub fn ec_leakage(ec_efficiency: f64, key_signals: f64, qber: f64) -> Result<f64, ModelError> {
    if !(ec_efficiency.is_finite() && ec_efficiency >= 1.0) {
        return Err(ModelError::InvalidEcEfficiency(ec_efficiency));
    }
    if !(key_signals.is_finite() && key_signals >= 0.0) {
        return Err(ModelError::InvalidKeySignals(key_signals));
    }
    if !(0.0..=1.0).contains(&qber) {
        return Err(ModelError::InvalidQber(qber));
    }
    Ok(ec_efficiency * key_signals * binary_entropy(qber))
}

/// Total failure probability consumed by `method` under `budget`.
///
/// Validates each consumed component individually and the composable sum
/// (which must stay below 1 for the security statement to say anything).
pub fn epsilon_total(method: MethodId, budget: &SecurityBudget) -> Result<f64, ModelError> {
    check_epsilon("eps_pe", budget.eps_pe)?;
    check_epsilon("eps_ec", budget.eps_ec)?;
    check_epsilon("eps_h", budget.eps_h)?;
    if method != MethodId::Fme {
        check_epsilon("eps_s", budget.eps_s)?;
    }
    let sum = raw_epsilon_total(method, budget);
    if sum >= 1.0 {
        return Err(ModelError::EpsilonBudgetExceeded(sum));
    }
    Ok(sum)
}

/// The plain sum, without domain checks; used to fill [`RatePoint`] so that
/// limiting configurations remain evaluable.
fn raw_epsilon_total(method: MethodId, budget: &SecurityBudget) -> f64 {
    let base = budget.eps_h + budget.eps_ec + budget.eps_pe;
    match method {
        MethodId::Fme => base,
        MethodId::Aep | MethodId::Eur => budget.eps_s + base,
    }
}

struct FiniteSizeParts {
    /// `η·(1−f)`: detected key signals per transmitted signal.
    key_fraction: f64,
    n_key: f64,
    estimation: EstimationOutcome,
    h2_qeff: f64,
    /// Privacy-amplification term `(2/N)·log₂(√2·ε_h)`.
    pa_term: f64,
}

enum Prepared {
    Feasible(FiniteSizeParts),
    Infeasible { effective_qber: f64, delta: f64 },
}

fn prepare(cfg: &ProtocolConfig) -> Result<Prepared, ModelError> {
    let estimation = cfg.estimate()?;
    if estimation.effective_qber > 0.5 {
        return Ok(Prepared::Infeasible {
            effective_qber: estimation.effective_qber,
            delta: estimation.delta,
        });
    }
    let key_fraction = cfg.transmittance() * (1.0 - cfg.sacrifice_fraction);
    Ok(Prepared::Feasible(FiniteSizeParts {
        key_fraction,
        n_key: cfg.key_signals(),
        h2_qeff: binary_entropy(estimation.effective_qber),
        pa_term: 2.0 / cfg.block_size * (std::f64::consts::SQRT_2 * cfg.budget.eps_h).log2(),
        estimation,
    }))
}

fn feasible(
    method: MethodId,
    raw_rate: f64,
    parts: &FiniteSizeParts,
    cfg: &ProtocolConfig,
) -> RateOutcome {
    RateOutcome::Feasible(RatePoint {
        method,
        raw_rate,
        clamped_rate: raw_rate.max(0.0),
        effective_qber: parts.estimation.effective_qber,
        delta: parts.estimation.delta,
        leak_per_signal: cfg.ec_efficiency * parts.key_fraction * parts.h2_qeff,
        epsilon_total: raw_epsilon_total(method, &cfg.budget),
        n_key: parts.n_key,
    })
}

fn eur_raw(parts: &FiniteSizeParts, cfg: &ProtocolConfig) -> f64 {
    parts.key_fraction * (1.0 - (1.0 + cfg.ec_efficiency) * parts.h2_qeff) + parts.pa_term
}

/// Finite-size rate from the entropic uncertainty relation.
pub fn rate_eur(cfg: &ProtocolConfig) -> Result<RateOutcome, ModelError> {
    Ok(match prepare(cfg)? {
        Prepared::Infeasible {
            effective_qber,
            delta,
        } => RateOutcome::Infeasible {
            effective_qber,
            delta,
        },
        Prepared::Feasible(parts) => feasible(MethodId::Eur, eur_raw(&parts, cfg), &parts, cfg),
    })
}

/// Finite-size rate from the asymptotic equipartition property: the EUR
/// rate minus an explicit smoothing correction. The identity
/// `rate_aep = rate_eur − sqrt(η(1−f)/N)·Δ(ε_s)` holds exactly, by
/// construction.
pub fn rate_aep(cfg: &ProtocolConfig) -> Result<RateOutcome, ModelError> {
    Ok(match prepare(cfg)? {
        Prepared::Infeasible {
            effective_qber,
            delta,
        } => RateOutcome::Infeasible {
            effective_qber,
            delta,
        },
        Prepared::Feasible(parts) => {
            let correction = (parts.key_fraction / cfg.block_size).sqrt()
                * delta_aep(cfg.budget.eps_s).expect("eps_s validated by prepare");
            let raw = eur_raw(&parts, cfg) - correction;
            feasible(MethodId::Aep, raw, &parts, cfg)
        }
    })
}

/// Finite-size rate from the fidelity (guessing-probability) bound.
pub fn rate_fme(cfg: &ProtocolConfig) -> Result<RateOutcome, ModelError> {
    Ok(match prepare(cfg)? {
        Prepared::Infeasible {
            effective_qber,
            delta,
        } => RateOutcome::Infeasible {
            effective_qber,
            delta,
        },
        Prepared::Feasible(parts) => {
            let q_eff = parts.estimation.effective_qber;
            let raw = parts.key_fraction
                * (-pg_closed_form(q_eff).log2() - cfg.ec_efficiency * parts.h2_qeff)
                + parts.pa_term;
            feasible(MethodId::Fme, raw, &parts, cfg)
        }
    })
}

/// Evaluates the technique selected by `method`.
pub fn rate(method: MethodId, cfg: &ProtocolConfig) -> Result<RateOutcome, ModelError> {
    match method {
        MethodId::Fme => rate_fme(cfg),
        MethodId::Aep => rate_aep(cfg),
        MethodId::Eur => rate_eur(cfg),
    }
}

/// Key rate per transmitted signal in the infinite-block limit, where the
/// observed QBER is the true one and every finite-size correction vanishes.
///
/// AEP and EUR coincide here; FME keeps its guessing-probability entropy
/// bound. May be negative; the caller decides whether to clamp.
pub fn rate_asymptotic(
    method: MethodId,
    qber: f64,
    ec_efficiency: f64,
    channel: &ChannelModel,
) -> Result<f64, ModelError> {
    if !(0.0..=0.5).contains(&qber) {
        return Err(ModelError::InvalidObservedQber(qber));
    }
    if !(ec_efficiency.is_finite() && ec_efficiency >= 1.0) {
        return Err(ModelError::InvalidEcEfficiency(ec_efficiency));
    }
    channel.validate()?;
    let eta = channel.transmittance();
    let h2 = binary_entropy(qber);
    Ok(match method {
        MethodId::Eur | MethodId::Aep => eta * (1.0 - (1.0 + ec_efficiency) * h2),
        MethodId::Fme => eta * (-pg_closed_form(qber).log2() - ec_efficiency * h2),
    })
}
