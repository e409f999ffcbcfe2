//! Guessing probability of the sifted key bit under Bell-diagonal
//! collective attacks.
//!
//! The FME technique bounds the extractable key through Eve's probability of
//! guessing Alice's key bit. For attacks diagonal in the Bell basis — the
//! worst case after sifting and symmetrization — the guessing probability at
//! phase-error rate `p` has the closed form
//! `P_g(p) = 1/2 + sqrt(p(1−p))` ([`pg_closed_form`]).
//!
//! Because the whole FME rate stands on that one formula, this module pins
//! it down three independent ways:
//!
//! 1. **Variational ansatz** — a one-parameter family of dephased states
//!    ([`PinchedAnsatz`]) whose fidelity to the attack state is available in
//!    closed form ([`ansatz_fidelity`]); its maximum over the parameter is
//!    analytic ([`stationary_s`]) and squares exactly to `P_g`.
//! 2. **Brute force** — a grid oracle ([`oracle::restricted_pg_oracle`])
//!    that maximizes the Uhlmann fidelity over the feasible attack set using
//!    only the generic matrix engine, with no knowledge of any closed form.
//! 3. **Certificates** — for each fidelity value, a standalone semidefinite
//!    witness ([`certificate::FidelityCertificate`]) that a third party can
//!    check with a single 8×8 eigendecomposition.
//!
//! Basis conventions: two-qubit matrices are written in the computational
//! basis ordered |00⟩, |01⟩, |10⟩, |11⟩; Bell weights are ordered
//! (Φ⁺, Φ⁻, Ψ⁺, Ψ⁻), so the Z-basis error rate is `w₂ + w₃` and the X-basis
//! (phase) error rate is `w₁ + w₃`.

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{self, CMat};

pub mod certificate;
pub mod oracle;

pub use certificate::{
    build_certificate, verify_certificate, CertificateCheck, FidelityCertificate,
};
pub use oracle::{
    extended_pg_oracle, restricted_pg_oracle, ExtendedPgOracleResult, PgOracleResult,
};

/// Errors produced when state or oracle inputs are outside their domains.
#[derive(Debug, Error, PartialEq)]
pub enum GuessingError {
    #[error("matrix is not Hermitian (largest defect {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix trace must be 1 (got {0})")]
    NotUnitTrace(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositiveSemidefinite(f64),
    #[error("Bell weight w{index} must be non-negative (got {value})")]
    NegativeWeight { index: usize, value: f64 },
    #[error("Bell weights must sum to 1 (got {0})")]
    WeightSum(f64),
    #[error("{name} must lie in [{lo}, {hi}] (got {value})")]
    OutOfRange {
        name: &'static str,
        lo: f64,
        hi: f64,
        value: f64,
    },
    #[error("oracle grid needs at least two points per axis (got {0})")]
    ResolutionTooSmall(usize),
    #[error("extended oracle is a four-parameter scan; resolution is capped at {max} (got {got})")]
    ResolutionTooLarge { got: usize, max: usize },
}

fn check_range(name: &'static str, lo: f64, hi: f64, value: f64) -> Result<(), GuessingError> {
    if value >= lo && value <= hi {
        Ok(())
    } else {
        Err(GuessingError::OutOfRange {
            name,
            lo,
            hi,
            value,
        })
    }
}

/// Eigenvalues of internally formed products (e.g. `√ρ·τ·√ρ`) may go
/// slightly negative through round-off; below this floor they are treated
/// as genuinely negative.
pub(crate) const PRODUCT_EIG_FLOOR: f64 = -1e-8;

/// A validated two-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: CMat<4>,
}

impl DensityMatrix {
    /// Largest tolerated deviation from exact Hermitian symmetry.
    pub const HERMITICITY_TOL: f64 = 1e-12;
    /// Largest tolerated deviation of the trace from 1.
    pub const TRACE_TOL: f64 = 1e-10;
    /// Most negative eigenvalue still accepted as round-off from zero.
    pub const EIGENVALUE_FLOOR: f64 = -1e-10;

    /// Validates Hermitian symmetry, unit trace and positive semidefiniteness.
    pub fn try_new(data: [[Complex64; 4]; 4]) -> Result<Self, GuessingError> {
        let defect = linalg::hermiticity_defect(&data);
        if defect > Self::HERMITICITY_TOL {
            return Err(GuessingError::NotHermitian(defect));
        }
        let trace = linalg::trace(&data);
        if (trace.re - 1.0).abs() > Self::TRACE_TOL {
            return Err(GuessingError::NotUnitTrace(trace.re));
        }
        let min_eig = linalg::eigh_values(&data)[0];
        if min_eig < Self::EIGENVALUE_FLOOR {
            return Err(GuessingError::NotPositiveSemidefinite(min_eig));
        }
        Ok(Self { data })
    }

    /// Constructor for matrices that are density matrices by construction.
    pub(crate) fn new_unchecked(data: CMat<4>) -> Self {
        debug_assert!(linalg::hermiticity_defect(&data) <= Self::HERMITICITY_TOL);
        debug_assert!((linalg::trace(&data).re - 1.0).abs() <= Self::TRACE_TOL);
        Self { data }
    }

    /// Matrix entries in the computational basis |00⟩, |01⟩, |10⟩, |11⟩.
    pub fn as_array(&self) -> &[[Complex64; 4]; 4] {
        &self.data
    }
}

/// A two-qubit state diagonal in the Bell basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellDiagonalState {
    weights: [f64; 4],
}

impl BellDiagonalState {
    /// Builds a state from Bell weights (Φ⁺, Φ⁻, Ψ⁺, Ψ⁻).
    ///
    /// Weights within `1e-12` below zero are treated as round-off and
    /// clamped; the total must be 1 within `1e-10`.
    pub fn new(mut weights: [f64; 4]) -> Result<Self, GuessingError> {
        for (index, w) in weights.iter_mut().enumerate() {
            if *w < 0.0 {
                if *w < -1e-12 {
                    return Err(GuessingError::NegativeWeight { index, value: *w });
                }
                *w = 0.0;
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(GuessingError::WeightSum(sum));
        }
        Ok(Self { weights })
    }

    /// The attack saturating the closed-form guessing probability at
    /// phase-error rate `p`: weights `((1−p)², p(1−p), p(1−p), p²)`.
    ///
    /// Within the symmetric feasible set (equal error rates in both bases)
    /// this is the state the brute-force oracle converges to.
    ///
    /// # Panics
    ///
    /// Panics if `p` is outside `[0, 0.5]`.
    pub fn pg_maximizer(p: f64) -> Self {
        assert!(
            (0.0..=0.5).contains(&p),
            "phase-error rate domain is [0, 0.5], got {p}"
        );
        let q = 1.0 - p;
        Self {
            weights: [q * q, p * q, p * q, p * p],
        }
    }

    pub fn weights(&self) -> [f64; 4] {
        self.weights
    }

    /// Error rate of a Z-basis (key) measurement, `w₂ + w₃`.
    pub fn qber_z(&self) -> f64 {
        self.weights[2] + self.weights[3]
    }

    /// Error rate of an X-basis (check) measurement, `w₁ + w₃`.
    pub fn qber_x(&self) -> f64 {
        self.weights[1] + self.weights[3]
    }

    /// Matrix form in the computational basis: a direct sum of 2×2 blocks on
    /// span{|00⟩, |11⟩} and span{|01⟩, |10⟩}.
    pub fn to_density_matrix(&self) -> DensityMatrix {
        DensityMatrix::new_unchecked(bell_matrix(&self.weights))
    }

    /// Closed-form Uhlmann fidelity to the pinched ansatz `σ(s)`.
    ///
    /// Both states are diagonal in the Bell basis, so the fidelity reduces
    /// to the classical Bhattacharyya overlap
    /// `F = (√s·(√w₀+√w₁) + √(1−s)·(√w₂+√w₃)) / √2`.
    pub fn fidelity_to_ansatz(&self, s: f64) -> f64 {
        assert!(
            (0.0..=1.0).contains(&s),
            "ansatz parameter domain is [0, 1], got {s}"
        );
        let [w0, w1, w2, w3] = self.weights;
        (s.sqrt() * (w0.sqrt() + w1.sqrt()) + (1.0 - s).sqrt() * (w2.sqrt() + w3.sqrt()))
            / std::f64::consts::SQRT_2
    }
}

pub(crate) fn bell_matrix(w: &[f64; 4]) -> CMat<4> {
    let mut m = linalg::zeros();
    let phi_sum = Complex64::from(0.5 * (w[0] + w[1]));
    let phi_diff = Complex64::from(0.5 * (w[0] - w[1]));
    let psi_sum = Complex64::from(0.5 * (w[2] + w[3]));
    let psi_diff = Complex64::from(0.5 * (w[2] - w[3]));
    m[0][0] = phi_sum;
    m[3][3] = phi_sum;
    m[0][3] = phi_diff;
    m[3][0] = phi_diff;
    m[1][1] = psi_sum;
    m[2][2] = psi_sum;
    m[1][2] = psi_diff;
    m[2][1] = psi_diff;
    m
}

/// One-parameter family of dephased two-qubit states,
/// `σ(s) = ½·diag(s, 1−s, 1−s, s)` in the computational basis.
///
/// These are exactly the states reachable by dephasing a Bell-diagonal state
/// in the key basis ([`pinch_z`]); `s` is the total weight on the agreeing
/// outcomes 00 and 11.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinchedAnsatz {
    s: f64,
}

impl PinchedAnsatz {
    pub fn new(s: f64) -> Result<Self, GuessingError> {
        check_range("ansatz parameter s", 0.0, 1.0, s)?;
        Ok(Self { s })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Diagonal entries `(s/2, (1−s)/2, (1−s)/2, s/2)`.
    pub fn diagonal(&self) -> [f64; 4] {
        let half_s = 0.5 * self.s;
        let half_r = 0.5 * (1.0 - self.s);
        [half_s, half_r, half_r, half_s]
    }

    pub fn to_density_matrix(&self) -> DensityMatrix {
        let mut m = linalg::zeros();
        for (i, d) in self.diagonal().into_iter().enumerate() {
            m[i][i] = Complex64::from(d);
        }
        DensityMatrix::new_unchecked(m)
    }
}

/// Dephasing (pinching) map in the computational basis of the measured
/// qubit: every entry connecting different key-bit outcomes is zeroed.
///
/// Idempotent by construction; maps any Bell-diagonal state onto the
/// [`PinchedAnsatz`] family with `s = w₀ + w₁`.
#[allow(clippy::needless_range_loop)] // the index parity IS the selection rule
pub fn pinch_z(rho: &DensityMatrix) -> DensityMatrix {
    let mut out = *rho.as_array();
    for i in 0..4 {
        for j in 0..4 {
            if i % 2 != j % 2 {
                out[i][j] = Complex64::ZERO;
            }
        }
    }
    DensityMatrix::new_unchecked(out)
}

/// Closed-form guessing probability of the key bit at phase-error rate `p`,
/// `P_g(p) = 1/2 + sqrt(p(1−p))`.
///
/// # Panics
///
/// Panics if `p` is outside `[0, 0.5]`.
pub fn pg_closed_form(p: f64) -> f64 {
    assert!(
        (0.0..=0.5).contains(&p),
        "phase-error rate domain is [0, 0.5], got {p}"
    );
    0.5 + (p * (1.0 - p)).sqrt()
}

/// Fidelity between the optimal attack at phase-error rate `p` and the
/// pinched ansatz `σ(s)`:
///
/// `√2·F = sqrt((1−p)p(1−s)) + p·sqrt(1−s) + (1−p)·sqrt(s) + sqrt((1−p)p·s)`.
///
/// Maximizing over `s` (see [`stationary_s`]) gives `max_s F² = P_g(p)`
/// exactly.
///
/// # Panics
///
/// Panics if `p` is outside `[0, 0.5]` or `s` outside `[0, 1]`.
pub fn ansatz_fidelity(p: f64, s: f64) -> f64 {
    assert!(
        (0.0..=0.5).contains(&p),
        "phase-error rate domain is [0, 0.5], got {p}"
    );
    assert!(
        (0.0..=1.0).contains(&s),
        "ansatz parameter domain is [0, 1], got {s}"
    );
    let cross = (1.0 - p) * p;
    ((cross * (1.0 - s)).sqrt() + p * (1.0 - s).sqrt() + (1.0 - p) * s.sqrt() + (cross * s).sqrt())
        / std::f64::consts::SQRT_2
}

/// The ansatz parameter maximizing [`ansatz_fidelity`] at fixed `p`.
///
/// Setting the `s`-derivative to zero gives `s* = A²/(A² + B²)` with
/// `A = (1−p) + sqrt(p(1−p))` and `B = p + sqrt(p(1−p))`; both squares share
/// the factor `1 + 2·sqrt(p(1−p))`, so the stationary point collapses to
/// `s* = 1 − p` exactly.
///
/// # Panics
///
/// Panics if `p` is outside `[0, 0.5]`.
pub fn stationary_s(p: f64) -> f64 {
    assert!(
        (0.0..=0.5).contains(&p),
        "phase-error rate domain is [0, 0.5], got {p}"
    );
    1.0 - p
}

/// Uhlmann fidelity `F(ρ, τ) = Tr sqrt(√ρ·τ·√ρ)` between two density
/// matrices, evaluated by exact Hermitian eigendecomposition.
pub fn uhlmann_fidelity(rho: &DensityMatrix, tau: &DensityMatrix) -> f64 {
    let sqrt_rho = linalg::psd_sqrt(rho.as_array(), PRODUCT_EIG_FLOOR)
        .expect("a validated density matrix is positive semidefinite");
    fidelity_from_sqrt(&sqrt_rho, tau.as_array())
}

/// Fidelity given a precomputed `√ρ`; shared with the brute-force oracle,
/// which reuses one matrix square root across a whole grid row.
pub(crate) fn fidelity_from_sqrt(sqrt_rho: &CMat<4>, tau: &CMat<4>) -> f64 {
    let m = linalg::matmul(&linalg::matmul(sqrt_rho, tau), sqrt_rho);
    sum_sqrt_eigs(&m)
}

/// Same as [`fidelity_from_sqrt`] for a diagonal `τ`, skipping one full
/// matrix product.
pub(crate) fn fidelity_sqrt_diag(sqrt_rho: &CMat<4>, diag: &[f64; 4]) -> f64 {
    let mut m = linalg::zeros::<4>();
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = Complex64::ZERO;
            for (k, d) in diag.iter().enumerate() {
                acc += sqrt_rho[i][k] * *d * sqrt_rho[k][j];
            }
            m[i][j] = acc;
        }
    }
    sum_sqrt_eigs(&m)
}

fn sum_sqrt_eigs(m: &CMat<4>) -> f64 {
    let eigs = linalg::eigh_values(m);
    debug_assert!(
        eigs[0] >= PRODUCT_EIG_FLOOR,
        "product eigenvalue {}",
        eigs[0]
    );
    eigs.iter().map(|&l| l.max(0.0).sqrt()).sum()
}
