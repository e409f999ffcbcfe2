//! Minimal dense linear algebra for small complex Hermitian matrices.
//!
//! Everything in this crate works on 4×4 (two-qubit states) or 8×8 (block
//! certificates) Hermitian matrices, so instead of pulling in a LAPACK
//! binding we use stack-allocated const-generic arrays and a cyclic Jacobi
//! eigensolver. Jacobi is unconditionally stable for Hermitian input,
//! converges quadratically once the off-diagonal mass is small, and at these
//! sizes is competitive with anything a BLAS round-trip could offer.

// The kernels below are written in i/j/k index form to line up with the
// matrix algebra they implement; iterator form obscures the symmetry
// structure (upper triangles, pivot pairs) these loops rely on.
#![allow(clippy::needless_range_loop)]

use num_complex::Complex64;
use thiserror::Error;

/// Square complex matrix; `m[i][j]` is the entry in row `i`, column `j`.
pub(crate) type CMat<const N: usize> = [[Complex64; N]; N];

/// Maximum number of full Jacobi sweeps before we accept the current
/// diagonal. Hermitian Jacobi needs ~log2(N) + a handful of sweeps; 60 is
/// far beyond anything reachable for N ≤ 8 and only guards against NaN input.
const MAX_SWEEPS: usize = 60;

/// Relative off-diagonal mass at which the iteration stops: the sum of
/// squared off-diagonal moduli must drop below `1e-30 * max(1, ‖A‖_F²)`.
const OFF_DIAG_TOL: f64 = 1e-30;

#[derive(Debug, Error, PartialEq)]
pub(crate) enum LinalgError {
    /// The matrix has an eigenvalue below the caller's rejection floor and
    /// cannot be treated as positive semidefinite.
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },
}

pub(crate) fn zeros<const N: usize>() -> CMat<N> {
    [[Complex64::ZERO; N]; N]
}

pub(crate) fn identity<const N: usize>() -> CMat<N> {
    let mut m = zeros();
    for i in 0..N {
        m[i][i] = Complex64::ONE;
    }
    m
}

pub(crate) fn matmul<const N: usize>(a: &CMat<N>, b: &CMat<N>) -> CMat<N> {
    let mut out = zeros();
    for i in 0..N {
        for k in 0..N {
            let aik = a[i][k];
            if aik == Complex64::ZERO {
                continue;
            }
            for j in 0..N {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub(crate) fn adjoint<const N: usize>(a: &CMat<N>) -> CMat<N> {
    let mut out = zeros();
    for i in 0..N {
        for j in 0..N {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

pub(crate) fn trace<const N: usize>(a: &CMat<N>) -> Complex64 {
    (0..N).map(|i| a[i][i]).sum()
}

/// Largest deviation from Hermitian symmetry, `max_ij |a_ij - conj(a_ji)|`.
pub(crate) fn hermiticity_defect<const N: usize>(a: &CMat<N>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..N {
        for j in i..N {
            worst = worst.max((a[i][j] - a[j][i].conj()).norm());
        }
    }
    worst
}

fn frobenius_sq<const N: usize>(a: &CMat<N>) -> f64 {
    a.iter().flatten().map(|z| z.norm_sqr()).sum()
}

fn off_diagonal_sq<const N: usize>(a: &CMat<N>) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        for j in 0..N {
            if i != j {
                s += a[i][j].norm_sqr();
            }
        }
    }
    s
}

/// Eigendecomposition of a Hermitian matrix.
pub(crate) struct Eigh<const N: usize> {
    /// Eigenvalues in ascending order.
    pub values: [f64; N],
    /// Unitary matrix whose `j`-th column is the eigenvector for `values[j]`.
    pub vectors: CMat<N>,
}

/// Full eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Only the Hermitian part of `a` is used: the input is symmetrized once up
/// front, so tiny round-off asymmetry in the caller's matrix is harmless.
pub(crate) fn eigh<const N: usize>(a: &CMat<N>) -> Eigh<N> {
    let (values, vectors) = jacobi(a, true);
    Eigh {
        values,
        vectors: vectors.expect("vectors requested"),
    }
}

/// Eigenvalues only (ascending). Skips accumulating the eigenvector matrix,
/// which roughly halves the work per rotation — worthwhile inside the
/// brute-force guessing-probability oracle.
pub(crate) fn eigh_values<const N: usize>(a: &CMat<N>) -> [f64; N] {
    jacobi(a, false).0
}

fn jacobi<const N: usize>(input: &CMat<N>, want_vectors: bool) -> ([f64; N], Option<CMat<N>>) {
    // Work on the Hermitian part with an exactly real diagonal.
    let mut a = *input;
    for i in 0..N {
        a[i][i] = Complex64::new(a[i][i].re, 0.0);
        for j in (i + 1)..N {
            let avg = 0.5 * (a[i][j] + a[j][i].conj());
            a[i][j] = avg;
            a[j][i] = avg.conj();
        }
    }

    let mut v = want_vectors.then(identity::<N>);
    let tol = OFF_DIAG_TOL * frobenius_sq(&a).max(1.0);

    for _sweep in 0..MAX_SWEEPS {
        if off_diagonal_sq(&a) <= tol {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let r = a[p][q].norm();
                if r == 0.0 {
                    continue;
                }
                // Unitary rotation in the (p, q) plane chosen to zero a_pq:
                // with tau = (a_qq - a_pp) / (2r) the tangent solves
                // t² + 2·tau·t − 1 = 0; the smaller root keeps the rotation
                // angle below 45° for stability.
                let phase = a[p][q] / r;
                let tau = (a[q][q].re - a[p][p].re) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let s_ph = s * phase;

                // Columns p and q of A (rows follow by Hermitian symmetry).
                for k in 0..N {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s_ph.conj() * akq;
                    a[k][q] = s_ph * akp + c * akq;
                    a[p][k] = a[k][p].conj();
                    a[q][k] = a[k][q].conj();
                }
                // The 2×2 pivot block has a closed-form update.
                let app = a[p][p].re;
                let aqq = a[q][q].re;
                a[p][p] = Complex64::new(app - t * r, 0.0);
                a[q][q] = Complex64::new(aqq + t * r, 0.0);
                a[p][q] = Complex64::ZERO;
                a[q][p] = Complex64::ZERO;

                if let Some(v) = v.as_mut() {
                    for row in v.iter_mut() {
                        let vp = row[p];
                        let vq = row[q];
                        row[p] = c * vp - s_ph.conj() * vq;
                        row[q] = s_ph * vp + c * vq;
                    }
                }
            }
        }
    }

    // Ascending sort, carrying eigenvector columns along.
    let mut order: [usize; N] = core::array::from_fn(|i| i);
    order.sort_by(|&i, &j| a[i][i].re.total_cmp(&a[j][j].re));
    let values = order.map(|i| a[i][i].re);
    let vectors = v.map(|v| {
        let mut sorted = zeros::<N>();
        for (dst, &src) in order.iter().enumerate() {
            for row in 0..N {
                sorted[row][dst] = v[row][src];
            }
        }
        sorted
    });
    (values, vectors)
}

/// Principal square root of a positive semidefinite Hermitian matrix.
///
/// Eigenvalues below `floor` are rejected as genuinely indefinite; values in
/// `[floor, 0)` are treated as round-off from an exact zero and clamped
/// before the square root.
pub(crate) fn psd_sqrt<const N: usize>(a: &CMat<N>, floor: f64) -> Result<CMat<N>, LinalgError> {
    debug_assert!(floor <= 0.0);
    let Eigh { values, vectors } = eigh(a);
    if values[0] < floor {
        return Err(LinalgError::NotPositiveSemidefinite {
            min_eigenvalue: values[0],
        });
    }
    let roots = values.map(|l| l.max(0.0).sqrt());
    // U · diag(sqrt λ) · U†
    let mut out = zeros();
    for i in 0..N {
        for j in 0..N {
            let mut acc = Complex64::ZERO;
            for (k, &root) in roots.iter().enumerate() {
                acc += vectors[i][k] * root * vectors[j][k].conj();
            }
            out[i][j] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Reference decompositions computed offline with numpy/scipy on matrices
    // drawn from a splitmix64 stream (seed 42); regenerating the stream
    // reproduces these literals bit for bit.
    const H4: [[[f64; 2]; 4]; 4] = [
        [
            [-5.57673521159589569e-02, 0.00000000000000000e+00],
            [7.70964099246462253e-01, 5.59293619604966485e-01],
            [6.41643278888980984e-01, -2.96227600805238800e-01],
            [-1.88336457232410881e-01, -8.41607088546445392e-01],
        ],
        [
            [7.70964099246462253e-01, -5.59293619604966485e-01],
            [-3.46646271262715411e-01, 0.00000000000000000e+00],
            [1.69006063975441934e-01, -3.49182905300267632e-01],
            [5.07538274504558684e-02, 4.61054486647575312e-01],
        ],
        [
            [6.41643278888980984e-01, 2.96227600805238800e-01],
            [1.69006063975441934e-01, 3.49182905300267632e-01],
            [8.85781866428592801e-01, 0.00000000000000000e+00],
            [-2.08954196667923475e-01, -1.02936888592109366e-01],
        ],
        [
            [-1.88336457232410881e-01, 8.41607088546445392e-01],
            [5.07538274504558684e-02, -4.61054486647575312e-01],
            [-2.08954196667923475e-01, 1.02936888592109366e-01],
            [-6.81855046841066459e-01, 0.00000000000000000e+00],
        ],
    ];
    const H4_EIGS: [f64; 4] = [
        -1.86346474524076222e+00,
        -2.04795643173228098e-01,
        1.44006172667856536e-01,
        1.72576741195498595e+00,
    ];
    const H8: [[[f64; 2]; 8]; 8] = [
        [
            [2.47095230631999341e-01, 0.00000000000000000e+00],
            [1.46125555452220057e-02, -4.25465311388163681e-01],
            [1.84851080645571653e-01, -5.64320566057933126e-01],
            [4.47210308423265590e-01, 3.75343800771580360e-01],
            [6.22561318857292045e-01, -7.09272423917291950e-01],
            [4.02284298952499619e-01, -5.24575091713196162e-01],
            [-3.53741601696752284e-01, 1.16539569168346180e-01],
            [5.02196355167438768e-01, 1.39329272787549030e-01],
        ],
        [
            [1.46125555452220057e-02, 4.25465311388163681e-01],
            [5.60923538030324353e-01, 0.00000000000000000e+00],
            [-4.66433108649809802e-01, -4.44961305574322896e-02],
            [1.09695174558297803e-01, -2.60746836774510271e-02],
            [-4.64148489328841785e-01, -4.53590539423399552e-01],
            [-3.34800466299919219e-01, 2.11280466570701431e-01],
            [-4.68134697346388240e-01, -3.93930906590244767e-01],
            [8.78186855741735939e-01, -1.58946954587880551e-01],
        ],
        [
            [1.84851080645571653e-01, 5.64320566057933126e-01],
            [-4.66433108649809802e-01, 4.44961305574322896e-02],
            [1.30856825056563375e-01, 0.00000000000000000e+00],
            [4.97294647347054308e-01, 2.35272029786350978e-01],
            [-8.33930306082425798e-01, 3.53609398050927060e-01],
            [-3.52614803202106031e-01, -7.90201418436298320e-01],
            [1.00342094965228945e-01, -8.42862320994220093e-01],
            [1.51747621746623595e-01, -3.14000369741743834e-01],
        ],
        [
            [4.47210308423265590e-01, -3.75343800771580360e-01],
            [1.09695174558297803e-01, 2.60746836774510271e-02],
            [4.97294647347054308e-01, -2.35272029786350978e-01],
            [2.91416955630688701e-01, 0.00000000000000000e+00],
            [-4.84878798085366935e-01, -3.49536222526466656e-01],
            [1.97455287402747981e-02, -7.29677512375094262e-02],
            [-7.46319481907599336e-01, 8.64177909462200411e-02],
            [6.48779729060968258e-01, 2.83123829103293367e-01],
        ],
        [
            [6.22561318857292045e-01, 7.09272423917291950e-01],
            [-4.64148489328841785e-01, 4.53590539423399552e-01],
            [-8.33930306082425798e-01, -3.53609398050927060e-01],
            [-4.84878798085366935e-01, 3.49536222526466656e-01],
            [7.35217170826792055e-01, 0.00000000000000000e+00],
            [-7.93167017592962820e-02, 3.31574432160564370e-01],
            [-7.59990658816899978e-01, 7.64640721499694753e-01],
            [-7.29123369581859082e-01, -7.04573840148036479e-01],
        ],
        [
            [4.02284298952499619e-01, 5.24575091713196162e-01],
            [-3.34800466299919219e-01, -2.11280466570701431e-01],
            [-3.52614803202106031e-01, 7.90201418436298320e-01],
            [1.97455287402747981e-02, 7.29677512375094262e-02],
            [-7.93167017592962820e-02, -3.31574432160564370e-01],
            [6.24426568602977516e-01, 0.00000000000000000e+00],
            [-5.16215627650212561e-01, 3.01646074718563417e-01],
            [-1.13671275903160507e-01, 5.13636233579231050e-02],
        ],
        [
            [-3.53741601696752284e-01, -1.16539569168346180e-01],
            [-4.68134697346388240e-01, 3.93930906590244767e-01],
            [1.00342094965228945e-01, 8.42862320994220093e-01],
            [-7.46319481907599336e-01, -8.64177909462200411e-02],
            [-7.59990658816899978e-01, -7.64640721499694753e-01],
            [-5.16215627650212561e-01, -3.01646074718563417e-01],
            [-7.89588393882504569e-01, 0.00000000000000000e+00],
            [6.01437371357988693e-01, -1.47080966581892625e-01],
        ],
        [
            [5.02196355167438768e-01, -1.39329272787549030e-01],
            [8.78186855741735939e-01, 1.58946954587880551e-01],
            [1.51747621746623595e-01, 3.14000369741743834e-01],
            [6.48779729060968258e-01, -2.83123829103293367e-01],
            [-7.29123369581859082e-01, 7.04573840148036479e-01],
            [-1.13671275903160507e-01, -5.13636233579231050e-02],
            [6.01437371357988693e-01, 1.47080966581892625e-01],
            [3.29765271670358961e-01, 0.00000000000000000e+00],
        ],
    ];
    const H8_EIGS: [f64; 8] = [
        -2.74398081850597064e+00,
        -1.76408426576677746e+00,
        -3.99777157886357093e-01,
        -4.76594960411289154e-02,
        7.10480491484438481e-01,
        1.64950493327910785e+00,
        1.84139713560834783e+00,
        2.88423234439553999e+00,
    ];
    const P4: [[[f64; 2]; 4]; 4] = [
        [
            [8.97878386808791173e-01, 0.00000000000000000e+00],
            [3.42110005494561803e-02, -7.04905654928190795e-01],
            [-2.09676447902157025e-02, -1.17828593871535534e-01],
            [2.25957182876463970e-02, -2.62731917402675597e-01],
        ],
        [
            [3.42110005494561803e-02, 7.04905654928190795e-01],
            [1.06916384236181750e+00, 0.00000000000000000e+00],
            [5.38178057028505963e-01, -1.47502744496848220e-01],
            [-7.10830564834640660e-02, -2.73027302022134488e-01],
        ],
        [
            [-2.09676447902157025e-02, 1.17828593871535534e-01],
            [5.38178057028505963e-01, 1.47502744496848220e-01],
            [1.02537358377364285e+00, 0.00000000000000000e+00],
            [1.46263580974657276e-01, -3.33803026054410090e-01],
        ],
        [
            [2.25957182876463970e-02, 2.62731917402675597e-01],
            [-7.10830564834640660e-02, 2.73027302022134488e-01],
            [1.46263580974657276e-01, 3.33803026054410090e-01],
            [1.00758418705574848e+00, 0.00000000000000000e+00],
        ],
    ];
    const P4_SQRT_EIGS: [f64; 4] = [
        2.90527721704919861e-01,
        8.02236105936492749e-01,
        1.07706639882556510e+00,
        1.45325112963098380e+00,
    ];

    use crate::testutil::from_parts;

    fn assert_unitary<const N: usize>(u: &CMat<N>, tol: f64) {
        let gram = matmul(&adjoint(u), u);
        for i in 0..N {
            for j in 0..N {
                let expect = if i == j {
                    Complex64::ONE
                } else {
                    Complex64::ZERO
                };
                assert!(
                    (gram[i][j] - expect).norm() <= tol,
                    "U†U deviates from identity at ({i},{j}): {:?}",
                    gram[i][j]
                );
            }
        }
    }

    fn assert_reconstructs<const N: usize>(a: &CMat<N>, eig: &Eigh<N>, tol: f64) {
        // A == U · diag(λ) · U†
        let mut lambda = zeros::<N>();
        for i in 0..N {
            lambda[i][i] = Complex64::new(eig.values[i], 0.0);
        }
        let rebuilt = matmul(&matmul(&eig.vectors, &lambda), &adjoint(&eig.vectors));
        for i in 0..N {
            for j in 0..N {
                assert!(
                    (rebuilt[i][j] - a[i][j]).norm() < tol,
                    "reconstruction off at ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn eigh_4x4_matches_reference() {
        let a = from_parts(&H4);
        let eig = eigh(&a);
        for (got, want) in eig.values.iter().zip(H4_EIGS) {
            assert_relative_eq!(*got, want, max_relative = 1e-13);
        }
        assert_unitary(&eig.vectors, 1e-13);
        assert_reconstructs(&a, &eig, 1e-12);
    }

    #[test]
    fn eigh_8x8_matches_reference() {
        let a = from_parts(&H8);
        let eig = eigh(&a);
        for (got, want) in eig.values.iter().zip(H8_EIGS) {
            assert_relative_eq!(*got, want, max_relative = 1e-13);
        }
        assert_unitary(&eig.vectors, 1e-13);
        assert_reconstructs(&a, &eig, 1e-12);
    }

    #[test]
    fn eigh_values_agrees_with_full_decomposition() {
        let a = from_parts(&H8);
        let fast = eigh_values(&a);
        let full = eigh(&a).values;
        for (f, g) in fast.iter().zip(full) {
            assert_relative_eq!(*f, g, max_relative = 1e-14);
        }
    }

    #[test]
    fn eigh_handles_diagonal_and_zero_input() {
        let mut d = zeros::<4>();
        d[0][0] = Complex64::new(3.0, 0.0);
        d[1][1] = Complex64::new(-1.0, 0.0);
        d[2][2] = Complex64::new(0.5, 0.0);
        d[3][3] = Complex64::new(2.0, 0.0);
        let eig = eigh(&d);
        assert_eq!(eig.values, [-1.0, 0.5, 2.0, 3.0]);
        assert_unitary(&eig.vectors, 0.0);

        let z = zeros::<4>();
        assert_eq!(eigh_values(&z), [0.0; 4]);
    }

    #[test]
    fn eigh_trace_is_preserved() {
        let a = from_parts(&H8);
        let sum: f64 = eigh_values(&a).iter().sum();
        assert_relative_eq!(sum, trace(&a).re, max_relative = 1e-13);
    }

    #[test]
    fn psd_sqrt_matches_reference_and_squares_back() {
        let p = from_parts(&P4);
        let root = psd_sqrt(&p, -1e-10).expect("P4 is positive definite");
        let root_eigs = eigh_values(&root);
        for (got, want) in root_eigs.iter().zip(P4_SQRT_EIGS) {
            assert_relative_eq!(*got, want, max_relative = 1e-12);
        }
        assert!(hermiticity_defect(&root) < 1e-14);
        let squared = matmul(&root, &root);
        for i in 0..4 {
            for j in 0..4 {
                assert!((squared[i][j] - p[i][j]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn psd_sqrt_clamps_roundoff_but_rejects_indefinite() {
        let mut nearly = zeros::<4>();
        nearly[0][0] = Complex64::new(1.0, 0.0);
        nearly[1][1] = Complex64::new(-5e-11, 0.0); // round-off scale
        let root = psd_sqrt(&nearly, -1e-10).expect("within clamp floor");
        assert_eq!(root[1][1], Complex64::ZERO);

        let mut bad = zeros::<4>();
        bad[0][0] = Complex64::new(1.0, 0.0);
        bad[1][1] = Complex64::new(-1e-3, 0.0);
        let err = psd_sqrt(&bad, -1e-10).unwrap_err();
        assert_eq!(
            err,
            LinalgError::NotPositiveSemidefinite {
                min_eigenvalue: -1e-3
            }
        );
    }

    #[test]
    fn matmul_adjoint_identity_sanity() {
        let a = from_parts(&H4);
        let id = identity::<4>();
        assert_eq!(matmul(&a, &id), a);
        assert_eq!(matmul(&id, &a), a);
        assert_eq!(adjoint(&adjoint(&a)), a);
        assert_eq!(hermiticity_defect(&a), 0.0);
        let mut skew = a;
        skew[0][1] += Complex64::new(0.0, 1e-3);
        assert!(hermiticity_defect(&skew) > 5e-4);
    }
}
