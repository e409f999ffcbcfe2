//! Standalone semidefinite certificates for fidelity values.
//!
//! The Uhlmann fidelity is the optimum of a semidefinite program:
//!
//! ```text
//! F(ρ, τ) = max { Re Tr X  :  [[ρ, X], [X†, τ]] ⪰ 0 }.
//! ```
//!
//! Any feasible `X` therefore certifies `F ≥ Re Tr X`, and a witness
//! attaining the engine's value certifies it exactly. Crucially,
//! verification is independent of how the witness was produced: it needs
//! one 8×8 eigendecomposition (feasibility) and one trace (the objective).
//!
//! The builder takes `X = √ρ · U† · √τ`, with `U` the unitary factor of the
//! polar decomposition `√τ·√ρ = U·|√τ·√ρ|`. That choice makes the block
//! matrix equal to `K·K†` for `K = [√ρ; √τ·U]` — manifestly positive — and
//! the objective `Re Tr X = Tr |√τ·√ρ| = F`.

// Index loops here mirror the 4×4 block algebra; see the note in linalg.rs.
#![allow(clippy::needless_range_loop)]

use num_complex::Complex64;

use super::{uhlmann_fidelity, DensityMatrix, PRODUCT_EIG_FLOOR};
use crate::linalg::{self, CMat};

/// Singular values below this are treated as null directions of `√τ·√ρ`;
/// the unitary factor is completed on them by Gram–Schmidt.
const NULL_SPACE_TOL: f64 = 1e-7;

/// A fidelity value together with a witness any third party can check.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityCertificate {
    pub rho: DensityMatrix,
    pub tau: DensityMatrix,
    /// Off-diagonal block `X` of the feasible point.
    pub witness: [[Complex64; 4]; 4],
    /// Fidelity value the witness claims to attain.
    pub claimed_fidelity: f64,
}

/// Outcome of [`verify_certificate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateCheck {
    /// `Re Tr X`, the value the witness actually attains.
    pub objective: f64,
    /// Smallest eigenvalue of the 8×8 block matrix.
    pub min_block_eigenvalue: f64,
    /// `objective − claimed_fidelity`.
    pub claim_gap: f64,
}

impl CertificateCheck {
    /// Most negative block eigenvalue still accepted as round-off.
    pub const EIGENVALUE_FLOOR: f64 = -1e-9;
    /// Largest tolerated mismatch between objective and claim.
    pub const CLAIM_TOL: f64 = 1e-8;

    /// True when the block matrix is positive semidefinite within
    /// [`Self::EIGENVALUE_FLOOR`] and the objective matches the claim within
    /// [`Self::CLAIM_TOL`].
    pub fn is_valid(&self) -> bool {
        self.min_block_eigenvalue >= Self::EIGENVALUE_FLOOR
            && self.claim_gap.abs() <= Self::CLAIM_TOL
    }
}

/// Builds a certificate for `F(ρ, τ)` as computed by the fidelity engine.
pub fn build_certificate(rho: &DensityMatrix, tau: &DensityMatrix) -> FidelityCertificate {
    let sqrt_rho = linalg::psd_sqrt(rho.as_array(), PRODUCT_EIG_FLOOR)
        .expect("a validated density matrix is positive semidefinite");
    let sqrt_tau = linalg::psd_sqrt(tau.as_array(), PRODUCT_EIG_FLOOR)
        .expect("a validated density matrix is positive semidefinite");

    // Polar decomposition √τ·√ρ = U·|√τ·√ρ| via the eigensystem of
    // A†A = √ρ·τ·√ρ: right singular vectors w_i, singular values √λ_i,
    // left singular vectors A·w_i/√λ_i.
    let a = linalg::matmul(&sqrt_tau, &sqrt_rho);
    let gram = linalg::matmul(&linalg::adjoint(&a), &a);
    let eig = linalg::eigh(&gram);

    let mut left: Vec<[Complex64; 4]> = Vec::with_capacity(4);
    let mut kept = [false; 4];
    for (idx, &lambda) in eig.values.iter().enumerate() {
        let sigma = lambda.max(0.0).sqrt();
        if sigma <= NULL_SPACE_TOL {
            continue;
        }
        let mut u = [Complex64::ZERO; 4];
        for (row, u_row) in u.iter_mut().enumerate() {
            let mut acc = Complex64::ZERO;
            for k in 0..4 {
                acc += a[row][k] * eig.vectors[k][idx];
            }
            *u_row = acc / sigma;
        }
        left.push(u);
        kept[idx] = true;
    }

    // Gram–Schmidt completion of the left singular basis on the null
    // directions, scanning the standard basis for vectors with a healthy
    // residual.
    let mut completion: Vec<[Complex64; 4]> = Vec::new();
    let mut basis_probe = 0;
    while left.len() + completion.len() < 4 {
        let mut v = [Complex64::ZERO; 4];
        v[basis_probe] = Complex64::ONE;
        for u in left.iter().chain(completion.iter()) {
            let overlap: Complex64 = (0..4).map(|k| u[k].conj() * v[k]).sum();
            for k in 0..4 {
                v[k] -= overlap * u[k];
            }
        }
        let norm = (0..4).map(|k| v[k].norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.3 {
            for entry in v.iter_mut() {
                *entry /= norm;
            }
            completion.push(v);
        }
        basis_probe += 1;
        assert!(basis_probe <= 4, "orthonormal completion must exist");
    }

    // U = Σ_i u_i · w_i†, with completion vectors paired to null directions.
    let mut unitary = linalg::zeros::<4>();
    let mut kept_iter = left.into_iter();
    let mut completion_iter = completion.into_iter();
    for idx in 0..4 {
        let u = if kept[idx] {
            kept_iter
                .next()
                .expect("one left vector per kept direction")
        } else {
            completion_iter
                .next()
                .expect("one completion per null direction")
        };
        for row in 0..4 {
            for col in 0..4 {
                unitary[row][col] += u[row] * eig.vectors[col][idx].conj();
            }
        }
    }

    let witness = linalg::matmul(
        &linalg::matmul(&sqrt_rho, &linalg::adjoint(&unitary)),
        &sqrt_tau,
    );

    FidelityCertificate {
        rho: rho.clone(),
        tau: tau.clone(),
        witness,
        claimed_fidelity: uhlmann_fidelity(rho, tau),
    }
}

/// Checks a certificate from scratch: assembles the 8×8 block matrix,
/// eigendecomposes it, and compares the objective against the claim.
pub fn verify_certificate(cert: &FidelityCertificate) -> CertificateCheck {
    let mut block: CMat<8> = linalg::zeros();
    let rho = cert.rho.as_array();
    let tau = cert.tau.as_array();
    for i in 0..4 {
        for j in 0..4 {
            block[i][j] = rho[i][j];
            block[i][j + 4] = cert.witness[i][j];
            block[i + 4][j] = cert.witness[j][i].conj();
            block[i + 4][j + 4] = tau[i][j];
        }
    }
    let min_block_eigenvalue = linalg::eigh_values(&block)[0];
    let objective = (0..4).map(|i| cert.witness[i][i].re).sum();
    CertificateCheck {
        objective,
        min_block_eigenvalue,
        claim_gap: objective - cert.claimed_fidelity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guessing::{pg_closed_form, stationary_s, BellDiagonalState, PinchedAnsatz};
    use approx::assert_relative_eq;

    fn optimal_pair(p: f64) -> (DensityMatrix, DensityMatrix) {
        let rho = BellDiagonalState::pg_maximizer(p).to_density_matrix();
        let tau = PinchedAnsatz::new(stationary_s(p))
            .unwrap()
            .to_density_matrix();
        (rho, tau)
    }

    #[test]
    fn certificate_attains_the_closed_form() {
        for &p in &[0.0, 0.01, 0.1, 0.25, 0.5] {
            let (rho, tau) = optimal_pair(p);
            let cert = build_certificate(&rho, &tau);
            assert_relative_eq!(
                cert.claimed_fidelity * cert.claimed_fidelity,
                pg_closed_form(p),
                max_relative = 1e-12
            );
            let check = verify_certificate(&cert);
            assert!(
                check.is_valid(),
                "p = {p}: gap {} min eig {}",
                check.claim_gap,
                check.min_block_eigenvalue
            );
            assert!(
                check.claim_gap.abs() < 1e-12,
                "p = {p}: {}",
                check.claim_gap
            );
        }
    }

    #[test]
    fn certificate_for_orthogonal_states_certifies_zero() {
        // Fully null polar factor: the witness is ~0 and the block matrix
        // block-diagonal.
        let rho = BellDiagonalState::new([1.0, 0.0, 0.0, 0.0])
            .unwrap()
            .to_density_matrix();
        let tau = BellDiagonalState::new([0.0, 0.0, 0.0, 1.0])
            .unwrap()
            .to_density_matrix();
        let cert = build_certificate(&rho, &tau);
        assert!(cert.claimed_fidelity.abs() < 1e-12);
        let check = verify_certificate(&cert);
        assert!(check.is_valid());
        assert!(check.objective.abs() < 1e-12);
    }

    #[test]
    fn inflated_witness_breaks_feasibility() {
        let (rho, tau) = optimal_pair(0.05);
        let mut cert = build_certificate(&rho, &tau);
        for row in cert.witness.iter_mut() {
            for entry in row.iter_mut() {
                *entry *= 1.5;
            }
        }
        cert.claimed_fidelity *= 1.5; // keep the claim consistent on purpose
        let check = verify_certificate(&cert);
        assert!(
            check.min_block_eigenvalue < CertificateCheck::EIGENVALUE_FLOOR,
            "min eig = {}",
            check.min_block_eigenvalue
        );
        assert!(!check.is_valid());
    }

    #[test]
    fn deflated_witness_stays_feasible_but_misses_the_claim() {
        let (rho, tau) = optimal_pair(0.05);
        let mut cert = build_certificate(&rho, &tau);
        for row in cert.witness.iter_mut() {
            for entry in row.iter_mut() {
                *entry *= 0.5;
            }
        }
        let check = verify_certificate(&cert);
        assert!(check.min_block_eigenvalue >= CertificateCheck::EIGENVALUE_FLOOR);
        assert!(check.claim_gap < -0.1, "gap = {}", check.claim_gap);
        assert!(!check.is_valid());
    }

    #[test]
    fn certificate_on_generic_states() {
        // Full-rank pair away from any special structure.
        let rho = BellDiagonalState::new([0.4, 0.3, 0.2, 0.1])
            .unwrap()
            .to_density_matrix();
        let tau = PinchedAnsatz::new(0.37).unwrap().to_density_matrix();
        let cert = build_certificate(&rho, &tau);
        let check = verify_certificate(&cert);
        assert!(
            check.is_valid(),
            "gap {} eig {}",
            check.claim_gap,
            check.min_block_eigenvalue
        );
        assert_relative_eq!(check.objective, cert.claimed_fidelity, epsilon = 1e-12);
    }
}
