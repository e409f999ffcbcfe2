//! Brute-force maximization of the guessing probability.
//!
//! These oracles know nothing about the closed form in
//! [`pg_closed_form`](super::pg_closed_form): they scan the feasible attack
//! set on a grid, evaluate every fidelity through the generic matrix engine
//! (matrix square root plus eigendecomposition), and polish the grid
//! maximum with golden-section refinement. Agreement with the analytic
//! formula is therefore evidence, not circularity.
//!
//! The feasible set at phase-error rate `p` is the symmetric one: Bell
//! weights `(w₀, w₁, w₂, w₃)` with equal error rates in both bases,
//! `w₂ + w₃ = p` and `w₁ + w₃ = p`. Eliminating `w₁, w₂` leaves the singlet
//! weight `w₃` free on `[max(0, 2p−1), p]`, with
//! `w₀ = 1 − 2p + w₃`, `w₁ = w₂ = p − w₃`.

use rayon::prelude::*;

use super::{bell_matrix, check_range, fidelity_sqrt_diag, GuessingError, PRODUCT_EIG_FLOOR};
use crate::linalg::{self, CMat};
use crate::search::golden_max;

/// Grid cap for [`extended_pg_oracle`]: the scan is four-dimensional, so the
/// work grows with the fourth power of the resolution.
pub const EXTENDED_RESOLUTION_CAP: usize = 128;

const REFINE_ITERS: usize = 64;

/// Result of [`restricted_pg_oracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgOracleResult {
    /// Largest fidelity-squared found over the scan.
    pub pg: f64,
    /// Singlet weight `w₃` at the maximum.
    pub p3: f64,
    /// Ansatz parameter `s` at the maximum.
    pub s: f64,
}

/// Result of [`extended_pg_oracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedPgOracleResult {
    /// Largest fidelity-squared found over the scan.
    pub pg: f64,
    /// Singlet weight `w₃` at the maximum.
    pub p3: f64,
    /// Diagonal of the maximizing comparison state.
    pub diagonal: [f64; 4],
}

fn feasible_weights(p: f64, p3: f64) -> [f64; 4] {
    [
        (1.0 - 2.0 * p + p3).max(0.0),
        (p - p3).max(0.0),
        (p - p3).max(0.0),
        p3.max(0.0),
    ]
}

fn sqrt_attack_state(p: f64, p3: f64) -> CMat<4> {
    let rho = bell_matrix(&feasible_weights(p, p3));
    linalg::psd_sqrt(&rho, PRODUCT_EIG_FLOOR)
        .expect("feasible Bell weights give a positive semidefinite state")
}

fn ansatz_diag(s: f64) -> [f64; 4] {
    let half_s = 0.5 * s;
    let half_r = 0.5 * (1.0 - s);
    [half_s, half_r, half_r, half_s]
}

fn pg_restricted(p: f64, p3: f64, s: f64) -> f64 {
    let f = fidelity_sqrt_diag(&sqrt_attack_state(p, p3), &ansatz_diag(s));
    f * f
}

/// Grid of `n` points spanning `[lo, hi]`; collapses to a single point when
/// the interval is degenerate.
fn axis_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if hi > lo {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    } else {
        vec![lo]
    }
}

/// Brute-force maximum of `F(ρ, σ(s))²` over the symmetric feasible set at
/// phase-error rate `p` and the pinched-ansatz parameter `s ∈ [0, 1]`.
///
/// Scans a `resolution × resolution` grid (singlet weight × ansatz
/// parameter), evaluating every fidelity through the matrix engine, then
/// polishes the winner by coordinate-wise golden-section refinement within
/// one grid cell. Rows are processed in parallel; the reduction is a total
/// order (value, then smallest grid indices), so the result is deterministic
/// regardless of thread scheduling.
pub fn restricted_pg_oracle(p: f64, resolution: usize) -> Result<PgOracleResult, GuessingError> {
    check_range("phase-error rate p", 0.0, 0.5, p)?;
    if resolution < 2 {
        return Err(GuessingError::ResolutionTooSmall(resolution));
    }

    let p3_lo = (2.0 * p - 1.0).max(0.0);
    let p3_hi = p;
    let p3_grid = axis_grid(p3_lo, p3_hi, resolution);
    let s_step = 1.0 / (resolution - 1) as f64;

    let (grid_pg, best_i, best_j) = p3_grid
        .par_iter()
        .enumerate()
        .map(|(i, &p3)| {
            let sqrt_rho = sqrt_attack_state(p, p3);
            let mut best = (f64::NEG_INFINITY, 0usize);
            for j in 0..resolution {
                let s = j as f64 * s_step;
                let f = fidelity_sqrt_diag(&sqrt_rho, &ansatz_diag(s));
                let pg = f * f;
                if pg > best.0 {
                    best = (pg, j);
                }
            }
            (best.0, i, best.1)
        })
        .max_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then_with(|| b.1.cmp(&a.1))
                .then_with(|| b.2.cmp(&a.2))
        })
        .expect("grid is non-empty");

    // Polish within one grid cell: s at fixed w₃, then w₃ at the refined s,
    // then s once more. Keep the best point seen anywhere.
    let mut best = PgOracleResult {
        pg: grid_pg,
        p3: p3_grid[best_i],
        s: best_j as f64 * s_step,
    };

    let s_bracket = ((best.s - s_step).max(0.0), (best.s + s_step).min(1.0));
    let sqrt_rho = sqrt_attack_state(p, best.p3);
    let (s1, pg1) = golden_max(
        |s| {
            let f = fidelity_sqrt_diag(&sqrt_rho, &ansatz_diag(s));
            f * f
        },
        s_bracket.0,
        s_bracket.1,
        REFINE_ITERS,
    );
    if pg1 > best.pg {
        best = PgOracleResult {
            pg: pg1,
            p3: best.p3,
            s: s1,
        };
    }

    if p3_hi > p3_lo {
        let p3_step = (p3_hi - p3_lo) / (resolution - 1) as f64;
        let bracket = (
            (best.p3 - p3_step).max(p3_lo),
            (best.p3 + p3_step).min(p3_hi),
        );
        let s_fixed = best.s;
        let (p3_ref, pg2) = golden_max(
            |p3| pg_restricted(p, p3, s_fixed),
            bracket.0,
            bracket.1,
            REFINE_ITERS,
        );
        if pg2 > best.pg {
            best = PgOracleResult {
                pg: pg2,
                p3: p3_ref,
                s: s_fixed,
            };
        }

        let sqrt_rho = sqrt_attack_state(p, best.p3);
        let (s2, pg3) = golden_max(
            |s| {
                let f = fidelity_sqrt_diag(&sqrt_rho, &ansatz_diag(s));
                f * f
            },
            (best.s - s_step).max(0.0),
            (best.s + s_step).min(1.0),
            REFINE_ITERS,
        );
        if pg3 > best.pg {
            best = PgOracleResult {
                pg: pg3,
                p3: best.p3,
                s: s2,
            };
        }
    }

    Ok(best)
}

/// Cube coordinates `(t, u, v) ∈ [0, 1]³` covering every diagonal state:
/// `d = (t·u, (1−t)·v, (1−t)·(1−v), t·(1−u))`.
fn cube_diag(t: f64, u: f64, v: f64) -> [f64; 4] {
    [t * u, (1.0 - t) * v, (1.0 - t) * (1.0 - v), t * (1.0 - u)]
}

/// Brute-force maximum of `F(ρ, diag(d))²` with the comparison state ranging
/// over **all** diagonal states, not just the pinched-ansatz family.
///
/// The attack set is the same symmetric one as in
/// [`restricted_pg_oracle`]; the diagonal simplex is parameterized by a unit
/// cube (`t` the weight on the agreeing outcomes, `u`, `v` the splits within
/// each pair), scanned at `resolution` points per axis and refined by two
/// rounds of coordinate-wise golden section. Agreement with the restricted
/// oracle confirms the one-parameter ansatz loses nothing.
pub fn extended_pg_oracle(
    p: f64,
    resolution: usize,
) -> Result<ExtendedPgOracleResult, GuessingError> {
    check_range("phase-error rate p", 0.0, 0.5, p)?;
    if resolution < 2 {
        return Err(GuessingError::ResolutionTooSmall(resolution));
    }
    if resolution > EXTENDED_RESOLUTION_CAP {
        return Err(GuessingError::ResolutionTooLarge {
            got: resolution,
            max: EXTENDED_RESOLUTION_CAP,
        });
    }

    let p3_lo = (2.0 * p - 1.0).max(0.0);
    let p3_hi = p;
    let p3_grid = axis_grid(p3_lo, p3_hi, resolution);
    let step = 1.0 / (resolution - 1) as f64;

    let (grid_pg, best_i, best_jkl) = p3_grid
        .par_iter()
        .enumerate()
        .map(|(i, &p3)| {
            let sqrt_rho = sqrt_attack_state(p, p3);
            let mut best = (f64::NEG_INFINITY, [0usize; 3]);
            for j in 0..resolution {
                let t = j as f64 * step;
                for k in 0..resolution {
                    let u = k as f64 * step;
                    for l in 0..resolution {
                        let v = l as f64 * step;
                        let f = fidelity_sqrt_diag(&sqrt_rho, &cube_diag(t, u, v));
                        let pg = f * f;
                        if pg > best.0 {
                            best = (pg, [j, k, l]);
                        }
                    }
                }
            }
            (best.0, i, best.1)
        })
        .max_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then_with(|| b.1.cmp(&a.1))
                .then_with(|| b.2.cmp(&a.2))
        })
        .expect("grid is non-empty");

    let mut p3 = p3_grid[best_i];
    let mut coords = best_jkl.map(|idx| idx as f64 * step);
    let mut best_pg = grid_pg;

    let p3_step = if p3_hi > p3_lo {
        (p3_hi - p3_lo) / (resolution - 1) as f64
    } else {
        0.0
    };
    for _round in 0..2 {
        if p3_step > 0.0 {
            let [t, u, v] = coords;
            let (p3_ref, pg) = golden_max(
                |x| {
                    let f = fidelity_sqrt_diag(&sqrt_attack_state(p, x), &cube_diag(t, u, v));
                    f * f
                },
                (p3 - p3_step).max(p3_lo),
                (p3 + p3_step).min(p3_hi),
                REFINE_ITERS,
            );
            if pg > best_pg {
                best_pg = pg;
                p3 = p3_ref;
            }
        }
        let sqrt_rho = sqrt_attack_state(p, p3);
        for axis in 0..3 {
            let frozen = coords;
            let (x_ref, pg) = golden_max(
                |x| {
                    let mut c = frozen;
                    c[axis] = x;
                    let f = fidelity_sqrt_diag(&sqrt_rho, &cube_diag(c[0], c[1], c[2]));
                    f * f
                },
                (coords[axis] - step).max(0.0),
                (coords[axis] + step).min(1.0),
                REFINE_ITERS,
            );
            if pg > best_pg {
                best_pg = pg;
                coords[axis] = x_ref;
            }
        }
    }

    Ok(ExtendedPgOracleResult {
        pg: best_pg,
        p3,
        diagonal: cube_diag(coords[0], coords[1], coords[2]),
    })
}
