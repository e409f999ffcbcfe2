//! Protocol, channel and security-budget modelling.
//!
//! A [`ProtocolConfig`] bundles everything the rate formulas need: the block
//! size, the fraction of detected signals sacrificed for parameter
//! estimation, the observed QBER, the error-correction efficiency, a lossy
//! channel and the composable security budget. Validation is deliberately
//! separate from computation so callers can probe limiting configurations
//! (for instance a failure probability within one ulp of 1) without
//! tripping assertions meant for production use.

use thiserror::Error;

/// Errors produced when a model parameter is outside its domain.
#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("block size must be a positive finite signal count (got {0})")]
    InvalidBlockSize(f64),
    #[error("sacrifice fraction must lie strictly inside (0, 1) (got {0})")]
    InvalidSacrificeFraction(f64),
    #[error("observed QBER must lie in [0, 0.5] (got {0})")]
    InvalidObservedQber(f64),
    #[error("error-correction efficiency must be finite and at least 1 (got {0})")]
    InvalidEcEfficiency(f64),
    #[error("channel attenuation and distance must be finite and non-negative (got {attenuation_db_per_km} dB/km over {distance_km} km)")]
    InvalidChannel {
        attenuation_db_per_km: f64,
        distance_km: f64,
    },
    #[error("security parameter {name} must lie strictly inside (0, 1) (got {value})")]
    InvalidEpsilon { name: &'static str, value: f64 },
    #[error("parameter estimation needs at least one expected sample, got ηfN = {0}")]
    SampleTooSmall(f64),
    #[error("sample size must be positive and finite (got {0})")]
    InvalidSampleSize(f64),
    #[error("error count {errors} exceeds sample size {samples}")]
    ErrorCountExceedsSample { errors: u64, samples: u64 },
    #[error("smoothing parameter must lie in (0, √2] (got {0})")]
    InvalidSmoothingParameter(f64),
    #[error("key-signal count must be finite and non-negative (got {0})")]
    InvalidKeySignals(f64),
    #[error("QBER must lie in [0, 1] for entropy evaluation (got {0})")]
    InvalidQber(f64),
    #[error("total failure probability must stay below 1 (got {0})")]
    EpsilonBudgetExceeded(f64),
}

/// Fibre channel with exponential loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    /// Attenuation coefficient in dB/km (0.2 is typical telecom fibre).
    pub attenuation_db_per_km: f64,
    /// Fibre length in km.
    pub distance_km: f64,
}

impl ChannelModel {
    /// Probability that a transmitted signal is detected,
    /// `η = 10^(−a·d/10)`.
    pub fn transmittance(&self) -> f64 {
        10f64.powf(-self.attenuation_db_per_km * self.distance_km / 10.0)
    }

    pub(crate) fn validate(&self) -> Result<(), ModelError> {
        let ok = self.attenuation_db_per_km.is_finite()
            && self.attenuation_db_per_km >= 0.0
            && self.distance_km.is_finite()
            && self.distance_km >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(ModelError::InvalidChannel {
                attenuation_db_per_km: self.attenuation_db_per_km,
                distance_km: self.distance_km,
            })
        }
    }
}

/// Composable security budget.
///
/// The total failure probability of a run is bounded by the sum of the
/// parameters consumed by the proof technique in use: parameter estimation
/// (`eps_pe`), error-correction verification (`eps_ec`), privacy
/// amplification (`eps_h`) and, for smooth-entropy techniques, smoothing
/// (`eps_s`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityBudget {
    pub eps_pe: f64,
    pub eps_ec: f64,
    pub eps_h: f64,
    pub eps_s: f64,
}

impl SecurityBudget {
    /// Budget with every component set to the same value.
    pub fn uniform(eps: f64) -> Self {
        Self {
            eps_pe: eps,
            eps_ec: eps,
            eps_h: eps,
            eps_s: eps,
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in [
            ("eps_pe", self.eps_pe),
            ("eps_ec", self.eps_ec),
            ("eps_h", self.eps_h),
            ("eps_s", self.eps_s),
        ] {
            check_epsilon(name, value)?;
        }
        Ok(())
    }
}

pub(crate) fn check_epsilon(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() && value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidEpsilon { name, value })
    }
}

/// Which Hoeffding tail constant widens the observed QBER.
///
/// Both variants appear in the literature for the same one-sided estimation
/// step; they differ by a factor √2 in the deviation term. `MainText` is the
/// conservative choice and the library default, `Appendix` the sharper one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeltaVariant {
    /// `δ = sqrt(ln(1/ε_PE) / m)`.
    #[default]
    MainText,
    /// `δ = sqrt(ln(1/ε_PE) / (2m))`, i.e. the main-text value divided by √2.
    Appendix,
}

/// Statistical widening of the observed QBER after sampling `m` signals.
///
/// Returns the deviation `δ` such that the true error rate exceeds the
/// observed one by more than `δ` with probability at most `eps_pe`. The
/// sample size is treated as a real number (expected counts are used
/// throughout; no rounding).
pub fn hoeffding_delta(
    sample_size: f64,
    eps_pe: f64,
    variant: DeltaVariant,
) -> Result<f64, ModelError> {
    if !(sample_size.is_finite() && sample_size > 0.0) {
        return Err(ModelError::InvalidSampleSize(sample_size));
    }
    check_epsilon("eps_pe", eps_pe)?;
    let log_term = -eps_pe.ln();
    let delta = match variant {
        DeltaVariant::MainText => (log_term / sample_size).sqrt(),
        DeltaVariant::Appendix => (log_term / (2.0 * sample_size)).sqrt(),
    };
    Ok(delta)
}

/// Binary entropy `h2(x) = −x·log2(x) − (1−x)·log2(1−x)` in bits.
///
/// The endpoints are handled exactly: `h2(0) = h2(1) = 0`.
///
/// # Panics
///
/// Panics if `x` is outside `[0, 1]`.
pub fn binary_entropy(x: f64) -> f64 {
    assert!(
        (0.0..=1.0).contains(&x),
        "binary_entropy domain is [0, 1], got {x}"
    );
    if x == 0.0 || x == 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Empirical QBER from raw counts, `errors / samples`.
pub fn qber_estimate(errors: u64, samples: u64) -> Result<f64, ModelError> {
    if samples == 0 {
        return Err(ModelError::InvalidSampleSize(0.0));
    }
    if errors > samples {
        return Err(ModelError::ErrorCountExceedsSample { errors, samples });
    }
    Ok(errors as f64 / samples as f64)
}

/// Everything the parameter-estimation step of one run produces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationOutcome {
    /// Expected number of sampled (detected, sacrificed) signals, `ηfN`.
    pub sample_size: f64,
    /// QBER observed on the sample.
    pub empirical_qber: f64,
    /// Hoeffding widening `δ` at confidence `1 − ε_PE`.
    pub delta: f64,
    /// Worst-case QBER consistent with the sample, `empirical + δ`.
    ///
    /// Deliberately not clamped: a value above 1/2 signals an infeasible
    /// run, which the rate layer reports explicitly.
    pub effective_qber: f64,
}

/// Full description of one protocol run at fixed sacrifice fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    /// Number of transmitted signals `N` (expected counts; real-valued).
    pub block_size: f64,
    /// Fraction `f` of detected signals sacrificed for parameter estimation.
    pub sacrifice_fraction: f64,
    /// QBER observed on the sacrificed sample.
    pub observed_qber: f64,
    /// Error-correction efficiency `γ ≥ 1` multiplying the Shannon limit.
    pub ec_efficiency: f64,
    pub channel: ChannelModel,
    pub budget: SecurityBudget,
    pub delta_variant: DeltaVariant,
}

impl ProtocolConfig {
    /// Checks every parameter domain. Computation methods assume this has
    /// passed; they are kept separate so limiting cases remain probeable.
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.block_size.is_finite() && self.block_size > 0.0) {
            return Err(ModelError::InvalidBlockSize(self.block_size));
        }
        if !(self.sacrifice_fraction > 0.0 && self.sacrifice_fraction < 1.0) {
            return Err(ModelError::InvalidSacrificeFraction(
                self.sacrifice_fraction,
            ));
        }
        if !(self.observed_qber >= 0.0 && self.observed_qber <= 0.5) {
            return Err(ModelError::InvalidObservedQber(self.observed_qber));
        }
        if !(self.ec_efficiency.is_finite() && self.ec_efficiency >= 1.0) {
            return Err(ModelError::InvalidEcEfficiency(self.ec_efficiency));
        }
        self.channel.validate()?;
        self.budget.validate()?;
        let m = self.sample_size();
        if m < 1.0 {
            return Err(ModelError::SampleTooSmall(m));
        }
        Ok(())
    }

    /// Channel transmittance `η`.
    pub fn transmittance(&self) -> f64 {
        self.channel.transmittance()
    }

    /// Expected parameter-estimation sample size, `m = η·f·N`.
    pub fn sample_size(&self) -> f64 {
        self.transmittance() * self.sacrifice_fraction * self.block_size
    }

    /// Expected number of detected signals kept for the key,
    /// `n = η·(1−f)·N`.
    pub fn key_signals(&self) -> f64 {
        self.transmittance() * (1.0 - self.sacrifice_fraction) * self.block_size
    }

    /// Runs the statistical layer: sample size, Hoeffding widening and the
    /// worst-case effective QBER.
    pub fn estimate(&self) -> Result<EstimationOutcome, ModelError> {
        self.validate()?;
        let sample_size = self.sample_size();
        let delta = hoeffding_delta(sample_size, self.budget.eps_pe, self.delta_variant)?;
        Ok(EstimationOutcome {
            sample_size,
            empirical_qber: self.observed_qber,
            delta,
            effective_qber: self.observed_qber + delta,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_config() -> ProtocolConfig {
        ProtocolConfig {
            block_size: 1e8,
            sacrifice_fraction: 0.01,
            observed_qber: 0.03,
            ec_efficiency: 1.0,
            channel: ChannelModel {
                attenuation_db_per_km: 0.2,
                distance_km: 10.0,
            },
            budget: SecurityBudget::uniform(1e-10),
            delta_variant: DeltaVariant::MainText,
        }
    }

    #[test]
    fn transmittance_reference_values() {
        let ch = ChannelModel {
            attenuation_db_per_km: 0.2,
            distance_km: 10.0,
        };
        assert_relative_eq!(
            ch.transmittance(),
            0.63095734448019325,
            max_relative = 1e-15
        );
        let far = ChannelModel {
            attenuation_db_per_km: 0.2,
            distance_km: 50.0,
        };
        assert_relative_eq!(far.transmittance(), 0.1, max_relative = 1e-15);
        let free = ChannelModel {
            attenuation_db_per_km: 0.2,
            distance_km: 0.0,
        };
        assert_eq!(free.transmittance(), 1.0);
    }

    #[test]
    fn binary_entropy_reference_values() {
        assert_relative_eq!(
            binary_entropy(0.11),
            0.499915958164528,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            binary_entropy(0.03),
            0.19439185783157616,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            binary_entropy(0.06),
            0.3274449191544762,
            max_relative = 1e-14
        );
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert_eq!(binary_entropy(0.5), 1.0);
    }

    #[test]
    fn binary_entropy_is_symmetric() {
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            assert!(
                (binary_entropy(x) - binary_entropy(1.0 - x)).abs() <= 1e-12,
                "asymmetry at x = {x}"
            );
        }
    }

    #[test]
    #[should_panic(expected = "binary_entropy domain")]
    fn binary_entropy_rejects_out_of_range() {
        binary_entropy(1.0001);
    }

    #[test]
    fn hoeffding_delta_reference_values() {
        let main = hoeffding_delta(1e4, 1e-10, DeltaVariant::MainText).unwrap();
        assert_relative_eq!(main, 0.047985259121880812, max_relative = 1e-15);
        let appendix = hoeffding_delta(1e4, 1e-10, DeltaVariant::Appendix).unwrap();
        assert_relative_eq!(appendix, 0.033930702122075559, max_relative = 1e-15);
        assert_relative_eq!(main, appendix * 2f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn hoeffding_delta_quadruple_sample_halves_delta() {
        for &m in &[10.0, 1e3, 1e6, 3.7e8] {
            let d1 = hoeffding_delta(m, 1e-10, DeltaVariant::MainText).unwrap();
            let d4 = hoeffding_delta(4.0 * m, 1e-10, DeltaVariant::MainText).unwrap();
            assert_relative_eq!(d4, d1 / 2.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn hoeffding_delta_epsilon_domain() {
        for bad in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                hoeffding_delta(1e4, bad, DeltaVariant::MainText),
                Err(ModelError::InvalidEpsilon { name: "eps_pe", .. })
            ));
        }
        // One ulp below 1 is still a valid (if useless) confidence level and
        // sends the widening to ~0.
        let nearly_one = 1.0 - 1e-16;
        assert!(nearly_one < 1.0);
        let delta = hoeffding_delta(1e6, nearly_one, DeltaVariant::MainText).unwrap();
        assert!(delta > 0.0 && delta < 1e-10, "delta = {delta}");

        assert!(matches!(
            hoeffding_delta(0.0, 1e-10, DeltaVariant::MainText),
            Err(ModelError::InvalidSampleSize(_))
        ));
    }

    #[test]
    fn qber_estimate_counts() {
        assert_eq!(qber_estimate(3, 100).unwrap(), 0.03);
        assert_eq!(qber_estimate(0, 7).unwrap(), 0.0);
        assert_eq!(qber_estimate(7, 7).unwrap(), 1.0);
        assert!(matches!(
            qber_estimate(1, 0),
            Err(ModelError::InvalidSampleSize(_))
        ));
        assert!(matches!(
            qber_estimate(8, 7),
            Err(ModelError::ErrorCountExceedsSample {
                errors: 8,
                samples: 7
            })
        ));
    }

    #[test]
    fn estimate_reference_chain() {
        let out = reference_config().estimate().unwrap();
        assert_relative_eq!(out.sample_size, 630957.34448019325, max_relative = 1e-14);
        assert_relative_eq!(out.delta, 0.006040986210006362, max_relative = 1e-14);
        assert_relative_eq!(
            out.effective_qber,
            0.036040986210006362,
            max_relative = 1e-14
        );
        assert_eq!(out.empirical_qber, 0.03);
    }

    #[test]
    fn key_signals_and_sample_size_split_detections() {
        let cfg = reference_config();
        let detected = cfg.transmittance() * cfg.block_size;
        assert_relative_eq!(
            cfg.sample_size() + cfg.key_signals(),
            detected,
            max_relative = 1e-15
        );
    }

    #[test]
    fn validate_rejects_each_bad_field() {
        let good = reference_config();
        assert!(good.validate().is_ok());

        let mut c = good;
        c.block_size = 0.0;
        assert!(matches!(c.validate(), Err(ModelError::InvalidBlockSize(_))));

        c = good;
        c.sacrifice_fraction = 1.0;
        assert!(matches!(
            c.validate(),
            Err(ModelError::InvalidSacrificeFraction(_))
        ));

        c = good;
        c.observed_qber = 0.51;
        assert!(matches!(
            c.validate(),
            Err(ModelError::InvalidObservedQber(_))
        ));

        c = good;
        c.ec_efficiency = 0.99;
        assert!(matches!(
            c.validate(),
            Err(ModelError::InvalidEcEfficiency(_))
        ));

        c = good;
        c.channel.distance_km = -1.0;
        assert!(matches!(
            c.validate(),
            Err(ModelError::InvalidChannel { .. })
        ));

        c = good;
        c.budget.eps_s = 0.0;
        assert!(matches!(
            c.validate(),
            Err(ModelError::InvalidEpsilon { name: "eps_s", .. })
        ));

        // ηfN < 1: one expected sample is the floor for the tail bound.
        c = good;
        c.block_size = 1e3;
        c.sacrifice_fraction = 1e-3;
        assert!(matches!(c.validate(), Err(ModelError::SampleTooSmall(_))));
    }

    #[test]
    fn default_delta_variant_is_main_text() {
        assert_eq!(DeltaVariant::default(), DeltaVariant::MainText);
    }
}
