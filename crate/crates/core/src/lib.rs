//! Finite-size secret-key rates for entanglement-based BB84.
//!
//! This crate certifies how many secret bits per transmitted signal an
//! entanglement-based BB84 protocol can extract from a finite block of `N`
//! signals under collective attacks, with composable security against an
//! adversary holding a quantum memory. Three interchangeable bounds on the
//! extractable randomness are implemented:
//!
//! * **FME** — a fidelity-based bound: the conditional min-entropy is
//!   controlled through the adversary's guessing probability, which for
//!   Bell-diagonal attacks reduces to a closed form in the phase-error rate
//!   ([`guessing::pg_closed_form`]). The reduction is backed by a
//!   variational ansatz, a brute-force maximizer over the attack set, and a
//!   verifiable semidefinite certificate ([`guessing::certificate`]).
//! * **AEP** — the smooth-min-entropy bound obtained from the asymptotic
//!   equipartition property, i.e. the EUR rate minus an explicit
//!   finite-size correction ([`rates::delta_aep`]).
//! * **EUR** — the entropic uncertainty relation bound, which needs no
//!   smoothing correction and is the strongest of the three at finite block
//!   sizes.
//!
//! All three share the same parameter-estimation layer: a fraction `f` of
//! the detected signals is sacrificed to estimate the QBER, and a Hoeffding
//! tail bound widens the observed value to an effective QBER
//! ([`model::hoeffding_delta`]). Rates are reported per *transmitted*
//! signal, so channel loss enters both the key length and the statistics.
//!
//! # Layout
//!
//! * [`model`] — channel, security budget, protocol configuration, entropy
//!   and estimation primitives.
//! * [`guessing`] — Bell-diagonal states, guessing probability, Uhlmann
//!   fidelity, the brute-force oracle and the semidefinite certificate.
//! * [`rates`] — the three finite-size rate formulas and their common
//!   asymptotic limits.
//! * [`optimize`] — sacrifice-fraction optimization, QBER thresholds,
//!   parameter sweeps and rate-crossing detection.
//!
//! # Example
//!
//! ```
//! use finkey::model::{ChannelModel, DeltaVariant, ProtocolConfig, SecurityBudget};
//! use finkey::rates::{rate_eur, RateOutcome};
//!
//! let cfg = ProtocolConfig {
//!     block_size: 1e8,
//!     sacrifice_fraction: 0.01,
//!     observed_qber: 0.03,
//!     ec_efficiency: 1.0,
//!     channel: ChannelModel { attenuation_db_per_km: 0.2, distance_km: 10.0 },
//!     budget: SecurityBudget::uniform(1e-10),
//!     delta_variant: DeltaVariant::MainText,
//! };
//! match rate_eur(&cfg).unwrap() {
//!     RateOutcome::Feasible(pt) => assert!(pt.raw_rate > 0.34 && pt.raw_rate < 0.35),
//!     RateOutcome::Infeasible { .. } => unreachable!(),
//! }
//! ```

// Unit tests pin results against external-oracle output pasted verbatim at
// its printed precision, which can exceed f64's shortest round-trip form.
#![cfg_attr(test, allow(clippy::excessive_precision))]

mod linalg;
mod search;
#[cfg(test)]
pub(crate) mod testutil;

pub mod guessing;
pub mod model;
pub mod optimize;
pub mod rates;

pub use guessing::{BellDiagonalState, DensityMatrix, PinchedAnsatz};
pub use model::{ChannelModel, DeltaVariant, ProtocolConfig, SecurityBudget};
pub use rates::{MethodId, RateOutcome, RatePoint};
