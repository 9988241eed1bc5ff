//! NPV of costs of a double-barrier strategy and its derivatives.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernels::{Integrand, KernelContext, PairKernels, Split};

/// A lower barrier `a` and an upper barrier `b` (`+∞` for the single-barrier regime).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarrierPair {
    pub a: f64,
    pub b: f64,
    pub diagnostics: Option<PairDiagnostics>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairDiagnostics {
    pub gamma_big: f64,
    pub gamma_small: f64,
    /// `v'(a+) + C_U`.
    pub vprime_a_residual: f64,
    /// `v'(b) - C_D`.
    pub vprime_b_residual: f64,
}

impl BarrierPair {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || b.is_nan() || b == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument(format!("invalid barriers ({a}, {b})")));
        }
        if a >= b {
            return Err(Error::InvalidArgument(format!("need a < b, got ({a}, {b})")));
        }
        Ok(Self { a, b, diagnostics: None })
    }

    pub fn is_single_barrier(&self) -> bool {
        self.b.is_infinite()
    }
}

/// Largest accepted `ε e^{Φ_q (x - a)}`. Above `a` the closed form is a
/// difference of terms growing like `e^{Φ_q (x - a)}` (the `e^{Φ_{q+r} s}`
/// modes above `b` cancel exactly); the observed relative error stays within
/// about ten times this bound. See [`Valuation::reliable_limit`].
pub const PRECISION_LIMIT: f64 = 1e-8;

pub const VALUE_GRID_HEADER: [&str; 6] = ["x", "v", "v_prime", "v_second", "v_lr", "v_f"];

/// `v`, `v'`, `v''` and the two cost components over a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueGrid {
    pub xs: Vec<f64>,
    pub v: Vec<f64>,
    pub v_prime: Vec<f64>,
    /// Absent for bounded-variation models.
    pub v_second: Option<Vec<f64>>,
    pub v_lr: Option<Vec<f64>>,
    pub v_f: Option<Vec<f64>>,
}

impl ValueGrid {
    /// Rows in [`VALUE_GRID_HEADER`] order; absent columns are `None`.
    pub fn rows(&self) -> impl Iterator<Item = [Option<f64>; 6]> + '_ {
        (0..self.xs.len()).map(move |i| {
            let opt = |c: &Option<Vec<f64>>| c.as_ref().map(|v| v[i]);
            [
                Some(self.xs[i]),
                Some(self.v[i]),
                Some(self.v_prime[i]),
                opt(&self.v_second),
                opt(&self.v_lr),
                opt(&self.v_f),
            ]
        })
    }
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// 401 points on `[a - 5, b + 10]`.
pub fn default_grid(a: f64, b: f64) -> Vec<f64> {
    linspace(a - 5.0, b + 10.0, 401)
}

/// `ln(PRECISION_LIMIT / ε) / Φ_q`.
pub fn reliable_span(ctx: &KernelContext) -> f64 {
    (PRECISION_LIMIT / f64::EPSILON).ln() / ctx.scale().phi_q()
}

/// Closed-form value of the strategy with barriers `a < b`.
#[derive(Debug, Clone)]
pub struct Valuation<'a> {
    pk: PairKernels<'a>,
    mean_over_q: f64,
    /// `(f̃(a) + Γ/Zφ)/q`.
    coef_v: f64,
    /// `(f(a) + ∫ f' Zφ / Zφ)/q`.
    coef_f: f64,
    coef_lr: f64,
    vf_at_b: f64,
    /// `γ / (q Zφ)`.
    coef_fp: f64,
    rho_b_ft: f64,
    rho_b_ftp: f64,
}

impl<'a> Valuation<'a> {
    pub fn new(ctx: &'a KernelContext, a: f64, b: f64) -> Result<Self> {
        if b.is_infinite() {
            return Err(Error::Unsupported(
                "closed-form value is only available for finite b; use the simulator".into(),
            ));
        }
        let span = reliable_span(ctx);
        if b - a > span {
            return Err(Error::Domain(format!(
                "b - a = {} exceeds {span:.4}, the largest width at which the closed form keeps \
                 its precision (Φ_q = {:.4})",
                b - a,
                ctx.scale().phi_q()
            )));
        }
        let pk = PairKernels::new(ctx, a, b)?;
        let q = ctx.q();
        let r = ctx.r();
        let phi = pk.phi_qr();
        let cost = ctx.cost();
        let (c_u, c_d) = (cost.c_u(), cost.c_d());
        let zphi = pk.zphi_ba;
        let coef_v = (cost.f_tilde(a) + pk.gamma_big / zphi) / q;
        let coef_f = (cost.f(a) + ctx.zphi_weighted(cost.f_prime_pp(), a, b) / zphi) / q;
        let coef_lr = r / (q * phi) * (c_u * pk.z_ba + c_d) / zphi + c_u / phi;
        let rho_b_f = pk.rho_at_b(Integrand::F);
        let vf_at_b = -rho_b_f + coef_f * pk.z_ba;
        let coef_fp = pk.gamma_small / (q * zphi);
        Ok(Self {
            mean_over_q: ctx.model().mean() / q,
            coef_v,
            coef_f,
            coef_lr,
            vf_at_b,
            coef_fp,
            rho_b_ft: pk.rho_at_b(Integrand::FTilde),
            rho_b_ftp: pk.rho_at_b(Integrand::FTildePrime),
            pk,
        })
    }

    pub fn a(&self) -> f64 {
        self.pk.a
    }

    pub fn b(&self) -> f64 {
        self.pk.b
    }

    /// Largest `x` at which evaluations are trusted; scalar evaluations
    /// beyond it return NaN.
    pub fn reliable_limit(&self) -> f64 {
        self.pk.a + reliable_span(self.ctx())
    }

    fn guard(&self, x: f64, v: f64) -> f64 {
        if x > self.reliable_limit() {
            f64::NAN
        } else {
            v
        }
    }

    pub fn kernels(&self) -> &PairKernels<'a> {
        &self.pk
    }

    fn ctx(&self) -> &KernelContext {
        self.pk.ctx()
    }

    fn s(&self, x: f64) -> f64 {
        x - self.pk.b
    }

    fn c_u(&self) -> f64 {
        self.ctx().cost().c_u()
    }

    fn c_d(&self) -> f64 {
        self.ctx().cost().c_d()
    }

    pub fn value_split(&self, x: f64) -> Split {
        let pk = &self.pk;
        let r = self.ctx().r();
        let s = self.s(x);
        let wb = pk.wr_bar(s);
        let cost = self.ctx().cost();
        (pk.z_ab(x) - wb * (r * pk.z_ba)) * self.coef_v - pk.wr_bar_bar(s) * (r * (self.c_u() + self.c_d()))
            + Split::stable(-self.c_u() * x - self.c_u() * self.mean_over_q)
            + wb * (r * self.rho_b_ft - cost.f_tilde(pk.b))
            - pk.rho_r_split(pk.ft_pp(), x)
            - pk.tail_conv_wbar(Integrand::FTildePrime, x)
    }

    /// `v_{a,b}(x)`.
    pub fn value(&self, x: f64) -> f64 {
        self.guard(x, self.value_split(x).stable)
    }

    pub fn value_prime_split(&self, x: f64) -> Split {
        let pk = &self.pk;
        let r = self.ctx().r();
        pk.w_ab(x) * (pk.gamma_big / pk.zphi_ba)
            - pk.rho_r_split(pk.ftp_pp(), x)
            - pk.tail_conv_w(Integrand::FTildePrime, x)
            - pk.wr_bar(self.s(x)) * (r * (self.c_u() + self.c_d()))
            + Split::stable(-self.c_u())
    }

    /// `v'_{a,b}(x)`; the right derivative at `x = a`.
    pub fn value_prime(&self, x: f64) -> f64 {
        self.guard(x, self.value_prime_split(x).stable)
    }

    /// `(v'(a-), v'(a+))`.
    pub fn value_prime_at_a(&self) -> (f64, f64) {
        (-self.c_u(), self.value_prime(self.pk.a))
    }

    /// `v'` at the optimum, with `Γ = 0` substituted.
    pub fn value_prime_reduced(&self, x: f64) -> f64 {
        let pk = &self.pk;
        let r = self.ctx().r();
        let v = (-pk.rho_r_split(pk.ftp_pp(), x)
            - pk.tail_conv_w(Integrand::FTildePrime, x)
            - pk.wr_bar(self.s(x)) * (r * (self.c_u() + self.c_d()))
            + Split::stable(-self.c_u()))
        .stable;
        self.guard(x, v)
    }

    pub fn value_second_split(&self, x: f64) -> Result<Split> {
        if !self.ctx().model().has_unbounded_variation() {
            return Err(Error::Unsupported(
                "v'' is only defined for unbounded-variation models".into(),
            ));
        }
        let pk = &self.pk;
        if x < pk.a {
            return Ok(Split::stable(0.0));
        }
        let r = self.ctx().r();
        Ok(pk.w_ab_prime(x) * (pk.gamma_big / pk.zphi_ba)
            - pk.rho_r_prime_ftp(x)
            - pk.tail_conv_wp(Integrand::FTildePrime, x)
            - pk.wr(self.s(x)) * (r * (self.c_u() + self.c_d())))
    }

    /// `v''_{a,b}(x)`; the right limit at `x = a`.
    pub fn value_second(&self, x: f64) -> Result<f64> {
        Ok(self.guard(x, self.value_second_split(x)?.stable))
    }

    /// `(v''(a-), v''(a+))`.
    pub fn value_second_at_a(&self) -> Result<(f64, f64)> {
        Ok((0.0, self.value_second(self.pk.a)?))
    }

    pub fn value_lr_split(&self, x: f64) -> Split {
        let pk = &self.pk;
        let r = self.ctx().r();
        let wb = pk.wr_bar(self.s(x));
        (pk.z_ab(x) - wb * (r * pk.z_ba)) * self.coef_lr
            - pk.wr_bar_bar(self.s(x)) * (r * self.c_d())
            - (pk.zbar_ab(x) + Split::stable(self.mean_over_q) - wb * (r * pk.zbar_ba)) * self.c_u()
    }

    /// Discounted control costs `v^{LR}_{a,b}(x)`.
    pub fn value_lr(&self, x: f64) -> f64 {
        self.guard(x, self.value_lr_split(x).stable)
    }

    pub fn value_f_split(&self, x: f64) -> Split {
        let pk = &self.pk;
        let r = self.ctx().r();
        pk.z_ab(x) * self.coef_f
            - pk.rho_r_split(pk.f_pp(), x)
            - pk.wr_bar(self.s(x)) * (r * self.vf_at_b)
            - pk.tail_conv_w(Integrand::F, x)
    }

    /// Discounted running cost `v^f_{a,b}(x)`.
    pub fn value_f(&self, x: f64) -> f64 {
        self.guard(x, self.value_f_split(x).stable)
    }

    /// `v^f_{a,b}(b)` from its standalone formula.
    pub fn value_f_at_b(&self) -> f64 {
        self.vf_at_b
    }

    pub fn vfprime_split(&self, x: f64) -> Split {
        let pk = &self.pk;
        let r = self.ctx().r();
        pk.z_ab(x) * self.coef_fp
            - pk.rho_r_split(pk.ftp_pp(), x)
            - pk.tail_conv_w(Integrand::FTildePrime, x)
            - pk.wr_bar(self.s(x)) * (r * (-self.rho_b_ftp + pk.z_ba * self.coef_fp))
            + Split::stable(-self.c_u())
    }

    /// `v^{f'}_{a,b}(x) = E_x ∫ e^{-qt} f'(Y(t)) dt`.
    pub fn vfprime(&self, x: f64) -> f64 {
        self.guard(x, self.vfprime_split(x).stable)
    }

    /// `(v^{f'}(a), v^{f'}(b))` from the barrier formulas.
    pub fn vfprime_at_barriers(&self) -> (f64, f64) {
        let pk = &self.pk;
        (
            self.coef_fp - self.c_u(),
            pk.z_ba * self.coef_fp - self.rho_b_ftp - self.c_u(),
        )
    }

    /// Largest relative size of the dropped growing-mode coefficient at `x`.
    pub fn growth_residual(&self, x: f64) -> f64 {
        let mut worst = [
            self.value_split(x),
            self.value_prime_split(x),
            self.value_lr_split(x),
            self.value_f_split(x),
            self.vfprime_split(x),
        ]
        .iter()
        .map(Split::relative_growth)
        .fold(0.0, f64::max);
        if let Ok(s) = self.value_second_split(x) {
            worst = worst.max(s.relative_growth());
        }
        worst
    }

    pub fn diagnostics(&self) -> PairDiagnostics {
        PairDiagnostics {
            gamma_big: self.pk.gamma_big,
            gamma_small: self.pk.gamma_small,
            vprime_a_residual: self.value_prime(self.pk.a) + self.c_u(),
            vprime_b_residual: self.value_prime(self.pk.b) - self.c_d(),
        }
    }

    /// Evaluates every column at each `x`; components only when asked.
    pub fn grid(&self, xs: &[f64], components: bool, exec: Execution) -> ValueGrid {
        let uv = self.ctx().model().has_unbounded_variation();
        let rows = exec.map(xs, |&x| {
            (
                self.value(x),
                self.value_prime(x),
                if uv { self.value_second(x).ok() } else { None },
                components.then(|| (self.value_lr(x), self.value_f(x))),
            )
        });
        ValueGrid {
            xs: xs.to_vec(),
            v: rows.iter().map(|r| r.0).collect(),
            v_prime: rows.iter().map(|r| r.1).collect(),
            v_second: uv.then(|| rows.iter().map(|r| r.2.unwrap_or(f64::NAN)).collect()),
            v_lr: components.then(|| rows.iter().map(|r| r.3.unwrap().0).collect()),
            v_f: components.then(|| rows.iter().map(|r| r.3.unwrap().1).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostSpec;
    use crate::levy::{JumpPhase, LevyModel};
    use crate::numerics::{integrate, QuadratureSettings};

    fn model() -> LevyModel {
        LevyModel::new(1.0, 1.0, vec![JumpPhase { lambda: 0.2, eta: 1.0 }]).unwrap()
    }

    fn ctx(r: f64) -> KernelContext {
        KernelContext::new(model(), CostSpec::quadratic(200.0, 200.0, 0.05, r).unwrap()).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1.0)
    }

    #[test]
    fn rejects_ill_conditioned_widths() {
        let m = LevyModel::new(-0.44, 0.2, vec![]).unwrap();
        let c = KernelContext::new(m, CostSpec::quadratic(1.0, 1.0, 0.02, 0.05).unwrap()).unwrap();
        let span = reliable_span(&c);
        assert!(span > 0.7 && span < 0.9, "{span}");
        let v = Valuation::new(&c, 0.0, 0.9 * span).unwrap();
        assert!(v.value(0.95 * span).is_finite());
        assert!(v.value(1.01 * span).is_nan());
        assert!(v.value_prime(2.0).is_nan() && v.value_lr(2.0).is_nan() && v.value_f(2.0).is_nan());
        assert!(v.value(-3.0).is_finite());
        match Valuation::new(&c, 0.0, 5.5) {
            Err(Error::Domain(m)) => assert!(m.contains("largest width"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn decomposition() {
        let c = ctx(0.1);
        let val = Valuation::new(&c, -6.0, 0.0).unwrap();
        for x in linspace(-9.0, 6.0, 20) {
            let v = val.value(x);
            let sum = val.value_lr(x) + val.value_f(x);
            assert!(rel(sum, v) < 1e-9, "x={x}: {v} vs {sum}");
        }
    }

    #[test]
    fn affine_below_a() {
        let c = ctx(0.1);
        let val = Valuation::new(&c, -6.0, 0.0).unwrap();
        let (v1, v2) = (val.value(-10.0), val.value(-8.0));
        assert!(((v2 - v1) / 2.0 + 200.0).abs() < 1e-9);
        assert_eq!(val.value_prime(-7.0), -200.0);
        assert_eq!(val.value_second(-7.0).unwrap(), 0.0);
        let lr = (val.value_lr(-8.0) - val.value_lr(-10.0)) / 2.0;
        assert!((lr + 200.0).abs() < 1e-9);
    }

    #[test]
    fn continuity_at_b() {
        for &r in &[0.1, 5.0, 300.0] {
            let c = ctx(r);
            let val = Valuation::new(&c, -6.0, 0.0).unwrap();
            let eps = 1e-10;
            for f in [
                &|x| val.value(x),
                &|x| val.value_lr(x),
                &|x| val.value_f(x),
                &|x| val.vfprime(x),
                &|x| val.value_prime(x),
            ] as [&dyn Fn(f64) -> f64; 5]
            {
                let (l, rr) = (f(-eps), f(eps));
                assert!((l - rr).abs() < 1e-7 * l.abs().max(1.0), "r={r}: {l} vs {rr}");
            }
        }
    }

    #[test]
    fn derivatives_by_differences() {
        let c = ctx(0.1);
        let val = Valuation::new(&c, -6.0, 0.0).unwrap();
        for &x in &[-5.0, -2.0, 0.0, 2.0, 7.0] {
            let h = 1e-4;
            let fd = (val.value(x + h) - val.value(x - h)) / (2.0 * h);
            let d = val.value_prime(x);
            assert!((fd - d).abs() < 1e-5 * d.abs().max(1.0), "x={x}: {fd} vs {d}");
            let fd2 = (val.value_prime(x + h) - val.value_prime(x - h)) / (2.0 * h);
            let d2 = val.value_second(x).unwrap();
            assert!((fd2 - d2).abs() < 1e-5 * d2.abs().max(1.0), "x={x}: {fd2} vs {d2}");
        }
    }

    #[test]
    fn right_derivative_at_a_matches_lemma() {
        let c = ctx(0.1);
        let val = Valuation::new(&c, -6.0, 0.0).unwrap();
        let (l, r) = val.value_prime_at_a();
        assert_eq!(l, -200.0);
        let pk = val.kernels();
        let expect = -200.0 + pk.gamma_big / pk.zphi_ba * c.scale().w(0.0);
        assert!((r - expect).abs() < 1e-9);
        let (l2, r2) = val.value_second_at_a().unwrap();
        assert_eq!(l2, 0.0);
        let expect2 = pk.gamma_big / pk.zphi_ba * c.scale().w_prime(0.0);
        assert!((r2 - expect2).abs() < 1e-9 * expect2.abs().max(1.0));
    }

    #[test]
    fn inventory_value_at_b_self_consistent() {
        let c = ctx(0.1);
        let val = Valuation::new(&c, -6.0, 0.0).unwrap();
        assert!(rel(val.value_f(0.0), val.value_f_at_b()) < 1e-12);
    }

    #[test]
    fn constant_cost_gives_constant_inventory_value() {
        // v^f for f = c is c/q; uses a cost with a constant added
        use crate::numerics::{PiecewisePoly, Poly};
        let f = PiecewisePoly::polynomial(Poly::new(vec![3.0, 0.0, 1.0]));
        let c2 = KernelContext::new(model(), CostSpec::new(f, 200.0, 200.0, 0.05, 0.1).unwrap()).unwrap();
        let c1 = ctx(0.1);
        let v1 = Valuation::new(&c1, -6.0, 0.0).unwrap();
        let v2 = Valuation::new(&c2, -6.0, 0.0).unwrap();
        for &x in &[-8.0, -3.0, 0.5, 4.0] {
            let d = v2.value_f(x) - v1.value_f(x);
            assert!((d - 3.0 / 0.05).abs() < 1e-8, "x={x}: {d}");
        }
    }

    #[test]
    fn vfprime_matches_barrier_formulas() {
        let c = ctx(0.1);
        let val = Valuation::new(&c, -6.0, 0.0).unwrap();
        let (fa, fb) = val.vfprime_at_barriers();
        assert!((val.vfprime(-6.0) - fa).abs() < 1e-10 * fa.abs().max(1.0));
        assert!((val.vfprime(0.0) - fb).abs() < 1e-10 * fb.abs().max(1.0));
    }

    #[test]
    fn vfprime_matches_inventory_formula_for_f_prime() {
        // inventory formula with f replaced by f'; its leading constant is
        // γ/(q Zφ) - C_U after integrating by parts
        let c = ctx(0.1);
        let (a, b) = (-6.0, 0.0);
        let val = Valuation::new(&c, a, b).unwrap();
        let sc = c.scale();
        let lead = val.coef_fp - 200.0;
        let (_, fb) = val.vfprime_at_barriers();
        let s = QuadratureSettings::default();
        for &x in &[-7.0, -3.0, 0.0, 1.5, 4.0] {
            let (_, z, _) = c.wzk(a, b, x).unwrap();
            let rho = c.rho_r(a, b, x, Integrand::FPrime).unwrap();
            let conv = if x > b {
                integrate(|y| 2.0 * y * sc.scale_qr().w(x - y), b, x, &s).value
            } else {
                0.0
            };
            let oracle = lead * z - rho - c.r() * sc.scale_qr().w_bar(x - b) * fb - conv;
            assert!(rel(val.vfprime(x), oracle) < 1e-9, "x={x}: {} vs {oracle}", val.vfprime(x));
        }
    }

    #[test]
    fn growth_mode_cancels() {
        for &r in &[0.1, 10.0, 900.0] {
            let c = ctx(r);
            let val = Valuation::new(&c, -6.0, 0.0).unwrap();
            for &x in &[0.5, 3.0, 10.0] {
                let g = val.growth_residual(x);
                assert!(g < 1e-9, "r={r} x={x}: {g}");
            }
        }
    }

    #[test]
    fn large_r_values_are_finite_and_smooth() {
        let c = ctx(900.0);
        let val = Valuation::new(&c, -6.0, 0.0).unwrap();
        let xs = linspace(-11.0, 10.0, 211);
        let vs: Vec<f64> = xs.iter().map(|&x| val.value(x)).collect();
        assert!(vs.iter().all(|v| v.is_finite()));
        for &x in &[2.0, 8.0] {
            let h = 1e-4;
            let fd = (val.value(x + h) - val.value(x - h)) / (2.0 * h);
            assert!((fd - val.value_prime(x)).abs() < 1e-5 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn inventory_value_above_b_against_quadrature() {
        // v^f(x) for x > b from the paper's convolution form, by quadrature
        let c = ctx(0.1);
        let val = Valuation::new(&c, -6.0, 0.0).unwrap();
        let sc = c.scale();
        let x = 2.0;
        let s = QuadratureSettings::default();
        let rho_r = c.rho_r(-6.0, 0.0, x, Integrand::F).unwrap();
        let (_, z, _) = c.wzk(-6.0, 0.0, x).unwrap();
        let conv = integrate(|y| y * y * sc.scale_qr().w(x - y), 0.0, x, &s).value;
        let oracle = val.coef_f * z - rho_r - c.r() * sc.scale_qr().w_bar(x) * val.value_f_at_b() - conv;
        assert!(rel(val.value_f(x), oracle) < 1e-9);
    }

    #[test]
    fn bounded_variation_has_no_second_derivative() {
        let m = LevyModel::new(2.0, 0.0, vec![JumpPhase { lambda: 0.5, eta: 2.0 }]).unwrap();
        let c = KernelContext::new(m, CostSpec::quadratic(200.0, 200.0, 0.05, 0.1).unwrap()).unwrap();
        let val = Valuation::new(&c, -6.0, 0.0).unwrap();
        assert!(matches!(val.value_second(1.0), Err(Error::Unsupported(_))));
        let g = val.grid(&[-7.0, -3.0, 1.0], true, Execution::Sequential);
        assert!(g.v_second.is_none());
        // jump in v' at a of size Γ W(0)/Zφ
        let (l, r) = val.value_prime_at_a();
        let pk = val.kernels();
        assert!((r - l - pk.gamma_big / pk.zphi_ba / 2.0).abs() < 1e-9 * r.abs().max(1.0));
        // decomposition still holds
        for &x in &[-7.0, -3.0, 1.0] {
            assert!(rel(val.value_lr(x) + val.value_f(x), val.value(x)) < 1e-9);
        }
    }

    #[test]
    fn grid_modes_agree() {
        let c = ctx(0.1);
        let val = Valuation::new(&c, -6.0, 0.0).unwrap();
        let xs = default_grid(-6.0, 0.0);
        assert_eq!(xs.len(), 401);
        let a = val.grid(&xs, true, Execution::Parallel);
        let b = val.grid(&xs, true, Execution::Sequential);
        assert_eq!(a, b);
        assert_eq!(a.rows().count(), 401);
    }

    #[test]
    fn infinite_b_unsupported() {
        let c = ctx(0.1);
        assert!(matches!(Valuation::new(&c, -6.0, f64::INFINITY), Err(Error::Unsupported(_))));
        assert!(BarrierPair::new(1.0, 0.0).is_err());
        assert!(BarrierPair::new(1.0, f64::INFINITY).unwrap().is_single_barrier());
    }
}
