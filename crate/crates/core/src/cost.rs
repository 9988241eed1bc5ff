//! Running cost, control prices and the thresholds derived from them.

use crate::error::{Error, Result};
use crate::numerics::{PiecewisePoly, Poly};

/// Half-width of the window in which thresholds are searched.
pub const THRESHOLD_WINDOW: f64 = 1e6;

/// Running cost `f`, control prices and the two rates.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    f: PiecewisePoly,
    f_prime: PiecewisePoly,
    f_tilde: PiecewisePoly,
    f_tilde_prime: PiecewisePoly,
    c_u: f64,
    c_d: f64,
    q: f64,
    r: f64,
}

/// `ā = inf{f̃' >= 0}` and `ā̄ = inf{f' - q C_D > 0}`; `None` for `ā̄ = +∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostThresholds {
    pub a_bar: f64,
    pub a_bbar: Option<f64>,
}

impl CostSpec {
    pub fn new(f: PiecewisePoly, c_u: f64, c_d: f64, q: f64, r: f64) -> Result<Self> {
        for (name, v) in [("C_U", c_u), ("C_D", c_d)] {
            if !v.is_finite() {
                return Err(Error::Assumption(format!("{name} must be finite")));
            }
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::Assumption(format!("discount rate q must be positive, got {q}")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Assumption(format!("observation rate r must be positive, got {r}")));
        }
        if !(c_u + c_d > 0.0) {
            return Err(Error::Assumption(format!(
                "C_U + C_D must be positive (got {c_u} + {c_d}); otherwise pushing up and down is a money pump"
            )));
        }
        let f_prime = f.derivative();
        let shift = Poly::linear(0.0, q * c_u);
        let f_tilde = f.add_poly(&shift);
        let f_tilde_prime = f_tilde.derivative();
        let spec = Self { f, f_prime, f_tilde, f_tilde_prime, c_u, c_d, q, r };
        spec.check_continuity()?;
        spec.check_convexity()?;
        spec.thresholds()?;
        Ok(spec)
    }

    /// `f(x) = x^2`.
    pub fn quadratic(c_u: f64, c_d: f64, q: f64, r: f64) -> Result<Self> {
        Self::new(PiecewisePoly::polynomial(Poly::new(vec![0.0, 0.0, 1.0])), c_u, c_d, q, r)
    }

    /// Same cost with a different observation rate.
    pub fn with_r(&self, r: f64) -> Result<Self> {
        Self::new(self.f.clone(), self.c_u, self.c_d, self.q, r)
    }

    pub fn c_u(&self) -> f64 {
        self.c_u
    }

    pub fn c_d(&self) -> f64 {
        self.c_d
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn f_pp(&self) -> &PiecewisePoly {
        &self.f
    }

    pub fn f_prime_pp(&self) -> &PiecewisePoly {
        &self.f_prime
    }

    pub fn f_tilde_pp(&self) -> &PiecewisePoly {
        &self.f_tilde
    }

    pub fn f_tilde_prime_pp(&self) -> &PiecewisePoly {
        &self.f_tilde_prime
    }

    pub fn f(&self, x: f64) -> f64 {
        self.f.eval(x)
    }

    /// Right derivative.
    pub fn f_prime(&self, x: f64) -> f64 {
        self.f_prime.eval(x)
    }

    /// `f(x) + q C_U x`.
    pub fn f_tilde(&self, x: f64) -> f64 {
        self.f_tilde.eval(x)
    }

    pub fn f_tilde_prime(&self, x: f64) -> f64 {
        self.f_tilde_prime.eval(x)
    }

    fn check_continuity(&self) -> Result<()> {
        for &b in self.f.breakpoints() {
            let (l, r) = (self.f.eval_left(b), self.f.eval(b));
            if (l - r).abs() > 1e-9 * l.abs().max(r.abs()).max(1.0) {
                return Err(Error::Assumption(format!(
                    "f must be continuous; it jumps from {l} to {r} at {b}"
                )));
            }
        }
        Ok(())
    }

    fn check_convexity(&self) -> Result<()> {
        let second = self.f_prime.derivative();
        for (i, p) in second.pieces().iter().enumerate() {
            let (lo, hi) = self.f.piece_domain(i);
            let (s, e) = (lo.max(-THRESHOLD_WINDOW), hi.min(THRESHOLD_WINDOW));
            let scale = p.coeffs().iter().fold(1.0f64, |m, c| m.max(c.abs()));
            let n = 256;
            for k in 0..=n {
                let x = s + (e - s) * k as f64 / n as f64;
                if p.eval(x) < -1e-12 * scale {
                    return Err(Error::Assumption(format!("f must be convex; f'' < 0 at {x}")));
                }
            }
            // sign at the unbounded ends is fixed by the leading coefficient
            let deg = p.degree();
            let lead = p.coeffs()[deg];
            if hi.is_infinite() && lead < 0.0 {
                return Err(Error::Assumption("f must be convex; f'' < 0 near +inf".into()));
            }
            if lo.is_infinite() && lead * if deg % 2 == 0 { 1.0 } else { -1.0 } < 0.0 {
                return Err(Error::Assumption("f must be convex; f'' < 0 near -inf".into()));
            }
        }
        for &b in self.f.breakpoints() {
            let (l, r) = (self.f_prime.eval_left(b), self.f_prime.eval(b));
            if r < l - 1e-12 * l.abs().max(1.0) {
                return Err(Error::Assumption(format!(
                    "f must be convex; f' drops from {l} to {r} at {b}"
                )));
            }
        }
        Ok(())
    }

    pub fn thresholds(&self) -> Result<CostThresholds> {
        let w = THRESHOLD_WINDOW;
        let g = |x: f64| self.f_tilde_prime(x);
        if g(-w) >= 0.0 {
            return Err(Error::Assumption(format!(
                "f'(x) + q C_U must be negative for very negative x (f'(-inf) < -q C_U); it is {} at {}",
                g(-w),
                -w
            )));
        }
        if g(w) < 0.0 {
            return Err(Error::Assumption(format!(
                "f'(x) + q C_U must become non-negative; it is still {} at {}",
                g(w),
                w
            )));
        }
        let a_bar = first_pass(g, -w, w, |v| v >= 0.0);

        let h = |x: f64| self.f_prime(x) - self.q * self.c_d;
        if h(-w) > 0.0 {
            return Err(Error::Assumption(format!(
                "f'(x) - q C_D must be non-positive for very negative x; it is {} at {}",
                h(-w),
                -w
            )));
        }
        let a_bbar = (h(w) > 0.0).then(|| first_pass(h, -w, w, |v| v > 0.0));
        Ok(CostThresholds { a_bar, a_bbar })
    }
}

/// Smallest representable `x` in `(lo, hi]` with `pass(g(x))`, for monotone `g`.
pub(crate) fn first_pass(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, pass: impl Fn(f64) -> bool) -> f64 {
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return hi;
        }
        if pass(g(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> CostSpec {
        CostSpec::quadratic(200.0, 200.0, 0.05, 0.1).unwrap()
    }

    #[test]
    fn shifted_cost() {
        let c = example();
        for &x in &[-7.0, 0.0, 2.5] {
            assert!((c.f_tilde(x) - (x * x + 10.0 * x)).abs() < 1e-12);
            assert!((c.f_tilde_prime(x) - (2.0 * x + 10.0)).abs() < 1e-12);
        }
        assert_eq!(c.f_tilde_prime(-5.0), 0.0);
    }

    #[test]
    fn example_thresholds() {
        let t = example().thresholds().unwrap();
        assert_eq!(t.a_bar, -5.0);
        // strict inequality: the infimum is found to within one ulp
        assert!((t.a_bbar.unwrap() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn capped_slope_has_no_upper_threshold() {
        // x^2 up to 1000 then tangent line; q C_D = 5e4 exceeds the slope cap
        let f = PiecewisePoly::new(
            vec![1000.0],
            vec![Poly::new(vec![0.0, 0.0, 1.0]), Poly::linear(-1e6, 2000.0)],
        )
        .unwrap();
        let c = CostSpec::new(f, 200.0, 1e6, 0.05, 0.1).unwrap();
        let t = c.thresholds().unwrap();
        assert_eq!(t.a_bar, -5.0);
        assert_eq!(t.a_bbar, None);
    }

    #[test]
    fn linear_cost_rejected() {
        let f = PiecewisePoly::polynomial(Poly::linear(0.0, 1.0));
        assert!(matches!(CostSpec::new(f, 200.0, 200.0, 0.05, 0.1), Err(Error::Assumption(_))));
    }

    #[test]
    fn price_sum_must_be_positive() {
        let e = CostSpec::quadratic(5.0, -5.0, 0.05, 0.1).unwrap_err();
        assert!(matches!(e, Error::Assumption(ref m) if m.contains("C_U + C_D")));
    }

    #[test]
    fn non_convex_rejected() {
        let f = PiecewisePoly::polynomial(Poly::new(vec![0.0, 0.0, 0.0, 1.0]));
        assert!(CostSpec::new(f, 1.0, 1.0, 0.05, 0.1).is_err());
        // kink the wrong way
        let f = PiecewisePoly::new(vec![0.0], vec![Poly::linear(0.0, 1.0), Poly::linear(0.0, -1.0)]).unwrap();
        assert!(CostSpec::new(f, 1.0, 1.0, 0.05, 0.1).is_err());
    }

    #[test]
    fn discontinuous_rejected() {
        let f = PiecewisePoly::new(
            vec![0.0],
            vec![Poly::new(vec![0.0, 0.0, 1.0]), Poly::new(vec![1.0, 0.0, 1.0])],
        )
        .unwrap();
        assert!(CostSpec::new(f, 1.0, 1.0, 0.05, 0.1).is_err());
    }

    #[test]
    fn kinked_cost_uses_right_derivative() {
        // |x| - like kink at 2: slopes jump from 2x to 2x + 6
        let f = PiecewisePoly::new(
            vec![2.0],
            vec![Poly::new(vec![0.0, 0.0, 1.0]), Poly::new(vec![-12.0, 6.0, 1.0])],
        )
        .unwrap();
        let c = CostSpec::new(f, 0.0, 100.0, 0.05, 0.1).unwrap();
        // f' - q C_D = f' - 5 crosses inside the jump at x = 2
        let t = c.thresholds().unwrap();
        assert!((t.a_bbar.unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(t.a_bar, 0.0);
    }
}
