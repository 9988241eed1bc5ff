//! Exact integrals of polynomial-times-exponential integrands.
//!
//! Every closed-form kernel in the crate bottoms out here, so the routines
//! are written to stay accurate when the exponential rate is tiny, large, or
//! when one integration limit is infinite.

use super::poly::Poly;

/// `∫_0^len u^k e^{-m u} du` for `m >= 0` and `len` in `[0, ∞]`.
pub fn moment(k: usize, m: f64, len: f64) -> f64 {
    debug_assert!(m >= 0.0, "moment needs a non-negative decay rate");
    if len <= 0.0 {
        return 0.0;
    }
    if len.is_infinite() {
        debug_assert!(m > 0.0, "infinite range needs decay");
        return factorial(k) / m.powi(k as i32 + 1);
    }
    let z = m * len;
    if z <= k as f64 + 25.0 {
        // len^{k+1} e^{-z} Σ_j z^j / ((k+1)(k+2)...(k+1+j))
        let mut term = 1.0 / (k as f64 + 1.0);
        let mut sum = term;
        let mut j = 1.0;
        loop {
            term *= z / (k as f64 + 1.0 + j);
            sum += term;
            if term < 1e-17 * sum || j > 400.0 {
                break;
            }
            j += 1.0;
        }
        len.powi(k as i32 + 1) * (-z).exp() * sum
    } else {
        // k!/m^{k+1} (1 - e^{-z} Σ_{j<=k} z^j/j!)
        let mut term = 1.0;
        let mut partial = 1.0;
        for j in 1..=k {
            term *= z / j as f64;
            partial += term;
        }
        factorial(k) / m.powi(k as i32 + 1) * (1.0 - (-z).exp() * partial)
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * j as f64)
}

/// `∫_lo^hi p(y) e^{rate (y - anchor)} dy`.
///
/// Integrates away from the end where the exponential is largest, so the
/// prefactor `e^{rate (end - anchor)}` carries all of the magnitude. `hi` may
/// be `+∞` when `rate < 0`, and `lo` may be `-∞` when `rate > 0`.
pub fn poly_exp_integral(p: &Poly, rate: f64, lo: f64, hi: f64, anchor: f64) -> f64 {
    integrate_with_prefactor(p, rate, lo, hi, |end| rate * (end - anchor))
}

/// `∫_lo^hi p(y) e^{rate y + offset} dy`.
///
/// Same as [`poly_exp_integral`] but with the exponent offset supplied
/// directly, for callers whose anchor would otherwise be astronomically far
/// away (convolutions whose two exponentials nearly cancel).
pub fn poly_exp_integral_offset(p: &Poly, rate: f64, lo: f64, hi: f64, offset: f64) -> f64 {
    integrate_with_prefactor(p, rate, lo, hi, |end| rate * end + offset)
}

fn integrate_with_prefactor(p: &Poly, rate: f64, lo: f64, hi: f64, log_pref: impl Fn(f64) -> f64) -> f64 {
    if !(hi > lo) || p.is_zero() {
        return 0.0;
    }
    let len = hi - lo;
    let (end, sign, decay) = if rate > 0.0 || (rate == 0.0 && hi.is_finite()) {
        debug_assert!(hi.is_finite());
        // y = hi - u
        (hi, -1.0, rate)
    } else {
        debug_assert!(lo.is_finite());
        // y = lo + u
        (lo, 1.0, -rate)
    };
    let pref = log_pref(end).exp();
    if pref == 0.0 {
        return 0.0;
    }
    let local = p.recentred(end, sign);
    pref * local
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, &c)| if c == 0.0 { 0.0 } else { c * moment(k, decay, len) })
        .sum::<f64>()
}
