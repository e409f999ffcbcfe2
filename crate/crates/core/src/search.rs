//! Scalar search primitives shared by the guessing-probability oracle and
//! the sacrifice-fraction optimizer.

/// Golden ratio conjugate, `(√5 − 1) / 2`.
pub(crate) const GOLD: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
///
/// Returns the best `(x, f(x))` among all evaluated interior points. The
/// endpoints themselves are never evaluated; a maximum sitting exactly on
/// the boundary is approached to within `(hi − lo)·GOLD^iters`.
pub(crate) fn golden_max(
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    iters: usize,
) -> (f64, f64) {
    debug_assert!(lo <= hi);
    let (mut lo, mut hi) = (lo, hi);
    let mut a = hi - GOLD * (hi - lo);
    let mut b = lo + GOLD * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    let mut best = if fa >= fb { (a, fa) } else { (b, fb) };
    for _ in 0..iters {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - GOLD * (hi - lo);
            fa = f(a);
            if fa > best.1 {
                best = (a, fa);
            }
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + GOLD * (hi - lo);
            fb = f(b);
            if fb > best.1 {
                best = (b, fb);
            }
        }
    }
    best
}
