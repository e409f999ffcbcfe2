//! Sacrifice-fraction optimization and the derived protocol diagnostics:
//! zero-rate QBER thresholds, parameter sweeps and the FME/AEP crossover
//! scan.
//!
//! The sacrifice fraction trades estimation confidence against key length:
//! sampling more signals tightens the Hoeffding widening but leaves fewer
//! signals for the key. [`optimize_f`] resolves that trade-off with a
//! 200-point logarithmic scan of `f ∈ [1e-4, 0.5]` followed by
//! golden-section refinement around the best grid point. Everything else in
//! this module is a search driven by that optimizer.

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{ChannelModel, DeltaVariant, ModelError, ProtocolConfig, SecurityBudget};
use crate::rates::{rate, MethodId, RateOutcome, RatePoint};
use crate::search::golden_max;

/// Lower edge of the sacrifice-fraction scan.
pub const SACRIFICE_MIN: f64 = 1e-4;
/// Upper edge of the sacrifice-fraction scan.
pub const SACRIFICE_MAX: f64 = 0.5;
/// Number of points in the logarithmic sacrifice-fraction grid.
pub const SACRIFICE_GRID_POINTS: usize = 200;
/// Final bracket width of the QBER-threshold bisection.
pub const THRESHOLD_BRACKET: f64 = 1e-4;

const GOLDEN_ITERS: usize = 60;
/// Objective value assigned to invalid or infeasible probes; any feasible
/// clamped rate (which is ≥ 0) beats it.
const INFEASIBLE_SENTINEL: f64 = -1.0;

/// Errors from the optimization and search layer.
#[derive(Debug, Error, PartialEq)]
pub enum OptimizeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no sacrifice fraction in [{SACRIFICE_MIN}, {SACRIFICE_MAX}] gives a feasible run")]
    AllInfeasible,
    #[error("the optimized key rate is zero even at zero observed error")]
    NoKey,
    #[error("a sweep needs at least two grid points (got {0})")]
    InvalidSweepPoints(usize),
    #[error(
        "sweep range must be finite and increasing, within the axis domain (got [{start}, {stop}])"
    )]
    InvalidSweepRange { start: f64, stop: f64 },
}

/// A [`ProtocolConfig`] with the sacrifice fraction left open for the
/// optimizer to choose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfigTemplate {
    pub block_size: f64,
    pub observed_qber: f64,
    pub ec_efficiency: f64,
    pub channel: ChannelModel,
    pub budget: SecurityBudget,
    pub delta_variant: DeltaVariant,
}

impl ConfigTemplate {
    /// Closes the template into a full configuration.
    pub fn with_sacrifice_fraction(&self, sacrifice_fraction: f64) -> ProtocolConfig {
        ProtocolConfig {
            block_size: self.block_size,
            sacrifice_fraction,
            observed_qber: self.observed_qber,
            ec_efficiency: self.ec_efficiency,
            channel: self.channel,
            budget: self.budget,
            delta_variant: self.delta_variant,
        }
    }
}

impl From<ProtocolConfig> for ConfigTemplate {
    /// Drops the sacrifice fraction, keeping everything else.
    fn from(cfg: ProtocolConfig) -> Self {
        Self {
            block_size: cfg.block_size,
            observed_qber: cfg.observed_qber,
            ec_efficiency: cfg.ec_efficiency,
            channel: cfg.channel,
            budget: cfg.budget,
            delta_variant: cfg.delta_variant,
        }
    }
}

/// The winning sacrifice fraction and the full rate evaluation there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizedRate {
    pub sacrifice_fraction: f64,
    pub point: RatePoint,
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let ratio = hi / lo;
    let last = (points - 1) as f64;
    (0..points)
        .map(|i| lo * ratio.powf(i as f64 / last))
        .collect()
}

fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let last = (points - 1) as f64;
    (0..points)
        .map(|i| lo + (hi - lo) * (i as f64 / last))
        .collect()
}

/// Maximizes the clamped key rate of `method` over the sacrifice fraction.
///
/// Scans [`SACRIFICE_GRID_POINTS`] logarithmic points, then refines with a
/// golden-section search between the grid neighbours of the best point; the
/// better of the coarse and refined candidates wins. Grid points where the
/// estimation sample is too small or the widened QBER is vacuous simply
/// drop out of the scan; if every point drops out the result is
/// [`OptimizeError::AllInfeasible`]. Configuration problems that no choice
/// of `f` can repair are reported as the underlying [`ModelError`].
pub fn optimize_f(
    method: MethodId,
    template: &ConfigTemplate,
) -> Result<OptimizedRate, OptimizeError> {
    // Screen f-independent configuration problems at the top of the grid,
    // where the estimation sample is largest: a sample-size failure there
    // means every smaller f fails too, which is infeasibility rather than
    // a malformed configuration.
    if let Err(err) = template.with_sacrifice_fraction(SACRIFICE_MAX).validate() {
        return match err {
            ModelError::SampleTooSmall(_) => Err(OptimizeError::AllInfeasible),
            other => Err(OptimizeError::Model(other)),
        };
    }

    let objective = |f: f64| match rate(method, &template.with_sacrifice_fraction(f)) {
        Ok(RateOutcome::Feasible(point)) => point.clamped_rate,
        _ => INFEASIBLE_SENTINEL,
    };

    let grid = log_grid(SACRIFICE_MIN, SACRIFICE_MAX, SACRIFICE_GRID_POINTS);
    let mut coarse: Option<(usize, f64, f64)> = None;
    for (index, &f) in grid.iter().enumerate() {
        let value = objective(f);
        if value >= 0.0 && coarse.is_none_or(|(_, _, best)| value > best) {
            coarse = Some((index, f, value));
        }
    }
    let (index, coarse_f, coarse_value) = coarse.ok_or(OptimizeError::AllInfeasible)?;

    let bracket_lo = grid[index.saturating_sub(1)];
    let bracket_hi = grid[(index + 1).min(grid.len() - 1)];
    let (refined_f, refined_value) = golden_max(objective, bracket_lo, bracket_hi, GOLDEN_ITERS);

    let (winner_f, _) = if refined_value > coarse_value {
        (refined_f, refined_value)
    } else {
        (coarse_f, coarse_value)
    };
    match rate(method, &template.with_sacrifice_fraction(winner_f))? {
        RateOutcome::Feasible(point) => Ok(OptimizedRate {
            sacrifice_fraction: winner_f,
            point,
        }),
        RateOutcome::Infeasible { .. } => {
            unreachable!("the winning sacrifice fraction was evaluated as feasible")
        }
    }
}

/// Zero-rate threshold in observed QBER, located by bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QberThreshold {
    /// Largest probed QBER whose optimized rate is positive — the lower
    /// edge of the final bisection bracket.
    pub qber: f64,
    /// Width of that bracket: the true threshold lies in
    /// `[qber, qber + bracket_width]`.
    pub bracket_width: f64,
}

/// Finds the observed QBER above which the optimized rate of `method`
/// hits zero, bisecting `[0, 0.5]` down to [`THRESHOLD_BRACKET`].
///
/// Returns [`OptimizeError::NoKey`] when the rate is already zero at zero
/// observed error, and [`OptimizeError::AllInfeasible`] when not even a
/// zero-error run is feasible.
pub fn qber_threshold(
    method: MethodId,
    template: &ConfigTemplate,
) -> Result<QberThreshold, OptimizeError> {
    let mut probe = *template;
    probe.observed_qber = 0.0;
    if optimize_f(method, &probe)?.point.clamped_rate <= 0.0 {
        return Err(OptimizeError::NoKey);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > THRESHOLD_BRACKET {
        let mid = 0.5 * (lo + hi);
        probe.observed_qber = mid;
        let positive = match optimize_f(method, &probe) {
            Ok(result) => result.point.clamped_rate > 0.0,
            Err(OptimizeError::AllInfeasible) => false,
            Err(err) => return Err(err),
        };
        if positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(QberThreshold {
        qber: lo,
        bracket_width: hi - lo,
    })
}

/// Quantity varied along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Block size `N`, usually on a logarithmic grid.
    BlockSize,
    /// Observed QBER, usually on a linear grid.
    ObservedQber,
}

/// How the sacrifice fraction is chosen at each sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SacrificePolicy {
    /// Run [`optimize_f`] at every grid point.
    Optimize,
    /// Hold the sacrifice fraction fixed.
    Fixed(f64),
}

/// A one-dimensional parameter sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub log_spaced: bool,
    pub policy: SacrificePolicy,
}

impl SweepSpec {
    fn validate(&self) -> Result<(), OptimizeError> {
        if self.points < 2 {
            return Err(OptimizeError::InvalidSweepPoints(self.points));
        }
        let range_err = OptimizeError::InvalidSweepRange {
            start: self.start,
            stop: self.stop,
        };
        if !(self.start.is_finite() && self.stop.is_finite() && self.start < self.stop) {
            return Err(range_err);
        }
        let domain_ok = match self.axis {
            SweepAxis::BlockSize => self.start > 0.0,
            SweepAxis::ObservedQber => {
                self.start >= 0.0 && self.stop <= 0.5 && !(self.log_spaced && self.start == 0.0)
            }
        };
        if !domain_ok {
            return Err(range_err);
        }
        Ok(())
    }

    fn grid(&self) -> Vec<f64> {
        if self.log_spaced {
            log_grid(self.start, self.stop, self.points)
        } else {
            linear_grid(self.start, self.stop, self.points)
        }
    }
}

/// One `(grid point, method)` evaluation of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub method: MethodId,
    /// `None` when no sacrifice fraction gives a feasible run here.
    pub result: Option<OptimizedRate>,
}

/// Evaluates `methods` across the sweep grid.
///
/// Rows come back grid-major — all methods at the first grid point, then
/// all methods at the second — with methods in the order given. Grid points
/// are evaluated in parallel; the row order is nevertheless deterministic.
pub fn sweep(
    spec: &SweepSpec,
    template: &ConfigTemplate,
    methods: &[MethodId],
) -> Result<Vec<SweepRow>, OptimizeError> {
    spec.validate()?;
    let grid = spec.grid();
    let rows: Result<Vec<Vec<SweepRow>>, OptimizeError> = grid
        .par_iter()
        .map(|&axis_value| {
            let mut probe = *template;
            match spec.axis {
                SweepAxis::BlockSize => probe.block_size = axis_value,
                SweepAxis::ObservedQber => probe.observed_qber = axis_value,
            }
            methods
                .iter()
                .map(|&method| {
                    let result = match spec.policy {
                        SacrificePolicy::Optimize => match optimize_f(method, &probe) {
                            Ok(opt) => Some(opt),
                            Err(OptimizeError::AllInfeasible) => None,
                            Err(err) => return Err(err),
                        },
                        SacrificePolicy::Fixed(f) => {
                            match rate(method, &probe.with_sacrifice_fraction(f)) {
                                Ok(RateOutcome::Feasible(point)) => Some(OptimizedRate {
                                    sacrifice_fraction: f,
                                    point,
                                }),
                                Ok(RateOutcome::Infeasible { .. }) => None,
                                Err(ModelError::SampleTooSmall(_)) => None,
                                Err(err) => return Err(OptimizeError::Model(err)),
                            }
                        }
                    };
                    Ok(SweepRow {
                        axis_value,
                        method,
                        result,
                    })
                })
                .collect()
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

/// Scans block sizes for the finite-size window where the FME rate beats
/// the AEP rate, both at their optimal sacrifice fractions.
///
/// The scan runs over `points` logarithmic block sizes in
/// `[block_lo, block_hi]`; a point counts as a win when the optimized
/// clamped FME rate strictly exceeds the optimized clamped AEP rate, with
/// infeasible points contributing zero on both sides. Returns the first
/// and last grid value of the longest winning run, or `None` when FME
/// never wins.
pub fn crossover_window(
    template: &ConfigTemplate,
    block_lo: f64,
    block_hi: f64,
    points: usize,
) -> Result<Option<(f64, f64)>, OptimizeError> {
    if points < 2 {
        return Err(OptimizeError::InvalidSweepPoints(points));
    }
    if !(block_lo.is_finite() && block_hi.is_finite() && block_lo > 0.0 && block_lo < block_hi) {
        return Err(OptimizeError::InvalidSweepRange {
            start: block_lo,
            stop: block_hi,
        });
    }
    let grid = log_grid(block_lo, block_hi, points);
    let flags: Result<Vec<bool>, OptimizeError> = grid
        .par_iter()
        .map(|&block_size| {
            let mut probe = *template;
            probe.block_size = block_size;
            let clamped = |method| match optimize_f(method, &probe) {
                Ok(opt) => Ok(opt.point.clamped_rate),
                Err(OptimizeError::AllInfeasible) => Ok(0.0),
                Err(err) => Err(err),
            };
            Ok(clamped(MethodId::Fme)? > clamped(MethodId::Aep)?)
        })
        .collect();
    let flags = flags?;

    let mut best_run: Option<(usize, usize)> = None;
    let mut run_start: Option<usize> = None;
    for i in 0..=flags.len() {
        let winning = i < flags.len() && flags[i];
        match (winning, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(start)) => {
                let run = (start, i - 1);
                if best_run.is_none_or(|(s, e)| run.1 - run.0 > e - s) {
                    best_run = Some(run);
                }
                run_start = None;
            }
            _ => {}
        }
    }
    Ok(best_run.map(|(start, end)| (grid[start], grid[end])))
}
