//! Composite kernels built from the scale functions and the cost.
//!
//! Everything here is an exact integral of (piecewise polynomial) times
//! (exponential sum). Above the upper barrier the `(q+r)`-convolutions are
//! split into the coefficient of the growing mode `e^{Φ_{q+r}(x-b)}` and a
//! bounded remainder; see [`Split`].

use std::ops::{Add, Mul, Neg, Sub};

use crate::cost::{first_pass, CostSpec, CostThresholds, THRESHOLD_WINDOW};
use crate::error::{Error, Result};
use crate::levy::LevyModel;
use crate::numerics::expint::poly_exp_integral_offset;
use crate::numerics::{PiecewisePoly, Poly};
use crate::scale::{expm1_minus_z, ScaleContext};

/// Integrands accepted by [`KernelContext::rho`] and friends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrand {
    F,
    FPrime,
    FTilde,
    FTildePrime,
    One,
    Identity,
}

/// A value of the form `grow · e^{Φ_{q+r} s} + stable` for `s = x - b >= 0`.
///
/// `grow_mag` accumulates the absolute size of every contribution to
/// `grow`, so a cancelling combination can be checked relative to it.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Split {
    pub grow: f64,
    pub stable: f64,
    pub grow_mag: f64,
}

impl Split {
    pub fn stable(v: f64) -> Self {
        Self { grow: 0.0, stable: v, grow_mag: 0.0 }
    }

    fn new(grow: f64, stable: f64) -> Self {
        Self { grow, stable, grow_mag: grow.abs() }
    }

    /// `grow · e^{phi s} + stable`.
    pub fn total(&self, phi: f64, s: f64) -> f64 {
        if self.grow == 0.0 {
            self.stable
        } else {
            self.grow * (phi * s).exp() + self.stable
        }
    }

    /// `|grow|` relative to the size of its contributions.
    pub fn relative_growth(&self) -> f64 {
        if self.grow_mag == 0.0 {
            0.0
        } else {
            self.grow.abs() / self.grow_mag
        }
    }
}

impl Add for Split {
    type Output = Split;
    fn add(self, o: Split) -> Split {
        Split {
            grow: self.grow + o.grow,
            stable: self.stable + o.stable,
            grow_mag: self.grow_mag + o.grow_mag,
        }
    }
}

impl Sub for Split {
    type Output = Split;
    fn sub(self, o: Split) -> Split {
        self + (-o)
    }
}

impl Neg for Split {
    type Output = Split;
    fn neg(self) -> Split {
        Split { grow: -self.grow, stable: -self.stable, grow_mag: self.grow_mag }
    }
}

impl Mul<f64> for Split {
    type Output = Split;
    fn mul(self, c: f64) -> Split {
        Split { grow: self.grow * c, stable: self.stable * c, grow_mag: self.grow_mag * c.abs() }
    }
}

/// Piecewise quasi-polynomial in `t >= 0`: on each `[lo, hi)` a sum of
/// `p(t) e^{λ t}` terms.
#[derive(Debug, Clone, Default)]
pub(crate) struct Source {
    segments: Vec<(f64, f64, Vec<(Poly, f64)>)>,
}

impl Source {
    fn exp_sum(terms: impl IntoIterator<Item = (Poly, f64)>) -> Self {
        Self { segments: vec![(0.0, f64::INFINITY, terms.into_iter().collect())] }
    }

    fn tail(h: &PiecewisePoly, origin: f64) -> Self {
        Self {
            segments: h
                .shifted_tail(origin)
                .into_iter()
                .map(|(lo, hi, p)| (lo, hi, vec![(p, 0.0)]))
                .collect(),
        }
    }

    pub(crate) fn eval(&self, t: f64) -> f64 {
        self.segments
            .iter()
            .find(|(lo, hi, _)| t >= *lo && t < *hi)
            .map(|(_, _, terms)| terms.iter().map(|(p, l)| p.eval(t) * (l * t).exp()).sum())
            .unwrap_or(0.0)
    }
}

/// `∫_0^s K(s - t) g(t) dt` for an exponential-sum kernel `K` whose first
/// term is the only growing one.
pub(crate) fn conv_split(kernel: &[(f64, f64)], source: &Source, s: f64) -> Split {
    let (d0, th0) = kernel[0];
    let mut out = Split::default();
    for (lo, hi, terms) in &source.segments {
        for (p, lam) in terms {
            let g = d0 * poly_exp_integral_offset(p, lam - th0, *lo, *hi, 0.0);
            let start = lo.max(s);
            let tail = if *hi > start {
                d0 * poly_exp_integral_offset(p, lam - th0, start, *hi, th0 * s)
            } else {
                0.0
            };
            let end = hi.min(s);
            let mut rest = 0.0;
            if end > *lo {
                for &(d, th) in &kernel[1..] {
                    rest += d * poly_exp_integral_offset(p, lam - th, *lo, end, th * s);
                }
            }
            out = out + Split::new(g, rest - tail);
        }
    }
    out
}

/// Model, scale functions and cost for one `(q, r)`.
#[derive(Debug, Clone)]
pub struct KernelContext {
    scale: ScaleContext,
    cost: CostSpec,
    thresholds: CostThresholds,
}

/// `a̲1` (`None` for `-∞`) and `a̲2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerThresholds {
    pub a1: Option<f64>,
    pub a2: f64,
}

impl LowerThresholds {
    /// `a̲1 ∨ a̲2`.
    pub fn max(&self) -> f64 {
        self.a1.map_or(self.a2, |a1| a1.max(self.a2))
    }
}

impl KernelContext {
    pub fn new(model: LevyModel, cost: CostSpec) -> Result<Self> {
        let scale = ScaleContext::new(model, cost.q(), cost.r())?;
        let thresholds = cost.thresholds()?;
        Ok(Self { scale, cost, thresholds })
    }

    /// Same model and cost at another observation rate.
    pub fn with_r(&self, r: f64) -> Result<Self> {
        Self::new(self.scale.model().clone(), self.cost.with_r(r)?)
    }

    pub fn scale(&self) -> &ScaleContext {
        &self.scale
    }

    pub fn cost(&self) -> &CostSpec {
        &self.cost
    }

    pub fn model(&self) -> &LevyModel {
        self.scale.model()
    }

    pub fn thresholds(&self) -> CostThresholds {
        self.thresholds
    }

    pub fn q(&self) -> f64 {
        self.scale.q()
    }

    pub fn r(&self) -> f64 {
        self.scale.r()
    }

    /// `r (C_U + C_D) / Φ_{q+r}`, the natural size of `Γ`.
    pub fn gamma_scale(&self) -> f64 {
        (self.r() * (self.cost.c_u() + self.cost.c_d()) / self.scale.phi_qr()).max(1.0)
    }

    pub(crate) fn integrand(&self, h: Integrand) -> PiecewisePoly {
        match h {
            Integrand::F => self.cost.f_pp().clone(),
            Integrand::FPrime => self.cost.f_prime_pp().clone(),
            Integrand::FTilde => self.cost.f_tilde_pp().clone(),
            Integrand::FTildePrime => self.cost.f_tilde_prime_pp().clone(),
            Integrand::One => PiecewisePoly::polynomial(Poly::constant(1.0)),
            Integrand::Identity => PiecewisePoly::polynomial(Poly::linear(0.0, 1.0)),
        }
    }

    fn check_pair(a: f64, b: f64) -> Result<()> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidArgument(format!("barriers must be finite, got ({a}, {b})")));
        }
        if a >= b {
            return Err(Error::InvalidArgument(format!("need a < b, got ({a}, {b})")));
        }
        Ok(())
    }

    /// `K_i(h) = ∫_a^b h(z) e^{ρ_i (b - z)} dz` for each `W^{(q)}` exponent.
    fn k_coeffs(&self, h: &PiecewisePoly, a: f64, b: f64) -> Vec<f64> {
        self.scale
            .scale_q()
            .terms()
            .iter()
            .map(|&(_, rho)| h.exp_integral(-rho, a, b, b))
            .collect()
    }

    /// `Σ_i c_i ∫_lo^hi h(y) e^{λ_i (x - y)} dy`.
    fn exp_sum_integral(terms: &[(f64, f64)], h: &PiecewisePoly, lo: f64, hi: f64, x: f64) -> f64 {
        terms.iter().map(|&(c, lam)| c * h.exp_integral(-lam, lo, hi, x)).sum()
    }

    pub(crate) fn rho_pp(&self, h: &PiecewisePoly, a: f64, b: f64, x: f64) -> f64 {
        let hi = b.min(x);
        if hi <= a {
            return 0.0;
        }
        Self::exp_sum_integral(self.scale.scale_q().terms(), h, a, hi, x)
    }

    /// `∫_a^{min(b,x)} W^{(q)'}(x - y) h(y) dy`.
    pub(crate) fn rho_prime_pp(&self, h: &PiecewisePoly, a: f64, b: f64, x: f64) -> f64 {
        let hi = b.min(x);
        if hi <= a {
            return 0.0;
        }
        let terms: Vec<_> = self.scale.scale_q().terms().iter().map(|&(c, r)| (c * r, r)).collect();
        Self::exp_sum_integral(&terms, h, a, hi, x)
    }

    /// `ρ^{(q)}_{a,b}(x; h)`.
    pub fn rho(&self, a: f64, b: f64, x: f64, h: Integrand) -> Result<f64> {
        Self::check_pair(a, b)?;
        Ok(self.rho_pp(&self.integrand(h), a, b, x))
    }

    /// `ρ^{(q,r)}_{a,b}(x; h)`.
    pub fn rho_r(&self, a: f64, b: f64, x: f64, h: Integrand) -> Result<f64> {
        let pk = PairKernels::new(self, a, b)?;
        let hp = self.integrand(h);
        Ok(pk.rho_r_split(&hp, x).total(self.scale.phi_qr(), x - b))
    }

    /// `(W^{(q,r)}_{a,b}(x), Z^{(q,r)}_{a,b}(x), Z̄^{(q,r)}_{a,b}(x))`.
    pub fn wzk(&self, a: f64, b: f64, x: f64) -> Result<(f64, f64, f64)> {
        let pk = PairKernels::new(self, a, b)?;
        let phi = self.scale.phi_qr();
        let s = x - b;
        Ok((pk.w_ab(x).total(phi, s), pk.z_ab(x).total(phi, s), pk.zbar_ab(x).total(phi, s)))
    }

    /// `∫_a^∞ h(y) Z^{(q)}(b - y, Φ_{q+r}) dy`.
    pub(crate) fn zphi_weighted(&self, h: &PiecewisePoly, a: f64, b: f64) -> f64 {
        let phi = self.scale.phi_qr();
        let r = self.r();
        let inner: f64 = self
            .scale
            .scale_q()
            .terms()
            .iter()
            .map(|&(c, rho)| c / (phi - rho) * h.exp_integral(-rho, a, b, b))
            .sum();
        r * inner + h.exp_integral(-phi, b, f64::INFINITY, b)
    }

    /// `Γ(a, b)`.
    pub fn gamma_big(&self, a: f64, b: f64) -> Result<f64> {
        Self::check_pair(a, b)?;
        Ok(self.zphi_weighted(self.cost.f_tilde_prime_pp(), a, b) + self.price_term())
    }

    fn price_term(&self) -> f64 {
        self.r() * (self.cost.c_u() + self.cost.c_d()) / self.scale.phi_qr()
    }

    /// `γ(a, b) = ∂Γ/∂b`, written without the `r (C_U + C_D)` cancellation.
    pub fn gamma_small(&self, a: f64, b: f64) -> Result<f64> {
        Self::check_pair(a, b)?;
        let h = self.cost.f_tilde_prime_pp();
        let phi = self.scale.phi_qr();
        let r = self.r();
        let inner: f64 = self
            .scale
            .scale_q()
            .terms()
            .iter()
            .map(|&(c, rho)| c * rho / (phi - rho) * h.exp_integral(-rho, a, b, b))
            .sum();
        Ok(r * inner + phi * h.exp_integral(-phi, b, f64::INFINITY, b))
    }

    /// `γ(a, b)` as `Φ_{q+r} Γ(a, b) - r (C_U + C_D + ρ^{(q)}_{a,b}(b; f̃'))`.
    pub fn gamma_small_alt(&self, a: f64, b: f64) -> Result<f64> {
        let g = self.gamma_big(a, b)?;
        let rho = self.rho_pp(self.cost.f_tilde_prime_pp(), a, b, b);
        Ok(self.scale.phi_qr() * g - self.r() * (self.cost.c_u() + self.cost.c_d() + rho))
    }

    /// `(Γ(a, b), γ(a, b))` sharing the `K_i` integrals.
    pub fn gamma_pair(&self, a: f64, b: f64) -> Result<(f64, f64)> {
        Self::check_pair(a, b)?;
        let h = self.cost.f_tilde_prime_pp();
        let phi = self.scale.phi_qr();
        let r = self.r();
        let tail = h.exp_integral(-phi, b, f64::INFINITY, b);
        let (mut big, mut small) = (0.0, 0.0);
        for &(c, rho) in self.scale.scale_q().terms() {
            let k = c / (phi - rho) * h.exp_integral(-rho, a, b, b);
            big += k;
            small += k * rho;
        }
        Ok((r * big + tail + self.price_term(), r * small + phi * tail))
    }

    /// `Γ1(a) = Γ(a, a+)`.
    pub fn gamma1(&self, a: f64) -> f64 {
        let phi = self.scale.phi_qr();
        self.cost.f_tilde_prime_pp().exp_integral(-phi, a, f64::INFINITY, a) + self.price_term()
    }

    /// `Γ2(a) = ∫_0^∞ e^{-Φ_q y} f̃'(y + a) dy`.
    pub fn gamma2(&self, a: f64) -> f64 {
        let phi = self.scale.phi_q();
        self.cost.f_tilde_prime_pp().exp_integral(-phi, a, f64::INFINITY, a)
    }

    /// `γ(a, a+) = Φ_{q+r} Γ1(a) - r (C_U + C_D)`.
    pub fn gamma_small_at_diagonal(&self, a: f64) -> f64 {
        let phi = self.scale.phi_qr();
        phi * self.cost.f_tilde_prime_pp().exp_integral(-phi, a, f64::INFINITY, a)
    }

    /// `(a̲1, a̲2)`, the left inverses of `Γ1` and `Γ2` below `ā`.
    pub fn a_under(&self) -> Result<LowerThresholds> {
        let a_bar = self.thresholds.a_bar;
        let a1 = left_inverse(|a| self.gamma1(a), a_bar);
        let a2 = left_inverse(|a| self.gamma2(a), a_bar).ok_or_else(|| {
            Error::Internal("Γ2 stays non-negative over the whole search window".into())
        })?;
        for (name, g) in [("Γ1", self.gamma1(a_bar)), ("Γ2", self.gamma2(a_bar))] {
            if !(g > 0.0) {
                return Err(Error::Internal(format!("{name}(ā) = {g} is not positive")));
            }
        }
        Ok(LowerThresholds { a1, a2 })
    }
}

/// `inf{a : g(a) >= 0}` for `g` increasing below `hi` with `g(hi) > 0`;
/// `None` when no negative value is found within the search window.
fn left_inverse(g: impl Fn(f64) -> f64, hi: f64) -> Option<f64> {
    let mut step = 1.0;
    let mut lo = hi - step;
    while g(lo) >= 0.0 {
        step *= 2.0;
        lo = hi - step;
        if step > 4.0 * THRESHOLD_WINDOW {
            return None;
        }
    }
    Some(first_pass(g, lo, hi, |v| v >= 0.0))
}

/// Everything about a fixed pair `a < b` that does not depend on `x`.
#[derive(Debug, Clone)]
pub struct PairKernels<'a> {
    ctx: &'a KernelContext,
    pub a: f64,
    pub b: f64,
    /// `Z^{(q)}(b - a)`.
    pub z_ba: f64,
    /// `Z̄^{(q)}(b - a)`.
    pub zbar_ba: f64,
    /// `Z^{(q)}(b - a, Φ_{q+r})`.
    pub zphi_ba: f64,
    pub gamma_big: f64,
    pub gamma_small: f64,
    f: PiecewisePoly,
    ft: PiecewisePoly,
    ftp: PiecewisePoly,
    kr_w: Vec<(f64, f64)>,
    kr_wp: Vec<(f64, f64)>,
    kr_wbar: Vec<(f64, f64)>,
    w_src: Source,
    wp_src: Source,
    z_src: Source,
    zbar_src: Source,
    rho_f: Source,
    rho_ft: Source,
    rho_ftp: Source,
    tail_f: Source,
    tail_ft: Source,
    tail_ftp: Source,
}

impl<'a> PairKernels<'a> {
    pub fn new(ctx: &'a KernelContext, a: f64, b: f64) -> Result<Self> {
        KernelContext::check_pair(a, b)?;
        let sc = ctx.scale();
        let q = sc.q();
        let len = b - a;
        let wq = sc.scale_q().terms();
        let wr = sc.scale_qr().terms();

        let kr_w = wr.to_vec();
        let kr_wp: Vec<_> = wr.iter().map(|&(d, th)| (d * th, th)).collect();
        let mut kr_wbar: Vec<_> = wr.iter().map(|&(d, th)| (d / th, th)).collect();
        kr_wbar.push((-wr.iter().map(|&(d, th)| d / th).sum::<f64>(), 0.0));

        let c = |v: f64| Poly::constant(v);
        let w_src = Source::exp_sum(wq.iter().map(|&(ci, r)| (c(ci * (r * len).exp()), r)));
        let wp_src = Source::exp_sum(wq.iter().map(|&(ci, r)| (c(ci * r * (r * len).exp()), r)));
        let z_const = 1.0 - q * wq.iter().map(|&(ci, r)| ci / r).sum::<f64>();
        let z_src = Source::exp_sum(
            std::iter::once((c(z_const), 0.0))
                .chain(wq.iter().map(|&(ci, r)| (c(q * ci / r * (r * len).exp()), r))),
        );
        // (len + t) - q Σ c (1 + r len + r t)/r^2 + Σ q c e^{r len}/r^2 e^{r t}
        let mut zbar_poly = Poly::linear(len, 1.0);
        for &(ci, r) in wq {
            zbar_poly = &zbar_poly - &Poly::linear(q * ci * (1.0 + r * len) / (r * r), q * ci / r);
        }
        let zbar_src = Source::exp_sum(
            std::iter::once((zbar_poly, 0.0))
                .chain(wq.iter().map(|&(ci, r)| (c(q * ci / (r * r) * (r * len).exp()), r))),
        );

        let cost = ctx.cost();
        let f = cost.f_pp().clone();
        let ft = cost.f_tilde_pp().clone();
        let ftp = cost.f_tilde_prime_pp().clone();
        let rho_src = |h: &PiecewisePoly| {
            let k = ctx.k_coeffs(h, a, b);
            Source::exp_sum(wq.iter().zip(k).map(|(&(ci, r), ki)| (c(ci * ki), r)))
        };
        let (gamma_big, gamma_small) = ctx.gamma_pair(a, b)?;
        Ok(Self {
            ctx,
            a,
            b,
            z_ba: sc.z(len),
            zbar_ba: sc.z_bar(len),
            zphi_ba: sc.z_phi(len),
            gamma_big,
            gamma_small,
            rho_f: rho_src(&f),
            rho_ft: rho_src(&ft),
            rho_ftp: rho_src(&ftp),
            tail_f: Source::tail(&f, b),
            tail_ft: Source::tail(&ft, b),
            tail_ftp: Source::tail(&ftp, b),
            f,
            ft,
            ftp,
            kr_w,
            kr_wp,
            kr_wbar,
            w_src,
            wp_src,
            z_src,
            zbar_src,
        })
    }

    pub fn ctx(&self) -> &KernelContext {
        self.ctx
    }

    fn sc(&self) -> &ScaleContext {
        self.ctx.scale()
    }

    pub fn phi_qr(&self) -> f64 {
        self.sc().phi_qr()
    }

    pub(crate) fn f_pp(&self) -> &PiecewisePoly {
        &self.f
    }

    pub(crate) fn ft_pp(&self) -> &PiecewisePoly {
        &self.ft
    }

    pub(crate) fn ftp_pp(&self) -> &PiecewisePoly {
        &self.ftp
    }

    /// `W^{(q+r)}(s)`.
    pub fn wr(&self, s: f64) -> Split {
        if s <= 0.0 {
            return Split::stable(if s < 0.0 { 0.0 } else { self.sc().scale_qr().w(0.0) });
        }
        let t = self.sc().scale_qr().terms();
        Split::new(t[0].0, t[1..].iter().map(|&(d, th)| d * (th * s).exp()).sum())
    }

    /// `W̄^{(q+r)}(s)`.
    pub fn wr_bar(&self, s: f64) -> Split {
        if s <= 0.0 {
            return Split::default();
        }
        let t = self.sc().scale_qr().terms();
        let (d0, th0) = t[0];
        Split::new(
            d0 / th0,
            -d0 / th0 + t[1..].iter().map(|&(d, th)| d * (th * s).exp_m1() / th).sum::<f64>(),
        )
    }

    /// `W̄̄^{(q+r)}(s)`.
    pub fn wr_bar_bar(&self, s: f64) -> Split {
        if s <= 0.0 {
            return Split::default();
        }
        let t = self.sc().scale_qr().terms();
        let (d0, th0) = t[0];
        Split::new(
            d0 / (th0 * th0),
            -d0 * (1.0 + th0 * s) / (th0 * th0)
                + t[1..].iter().map(|&(d, th)| d * expm1_minus_z(th * s) / (th * th)).sum::<f64>(),
        )
    }

    fn above(&self, x: f64) -> Option<f64> {
        (x > self.b).then_some(x - self.b)
    }

    /// `W^{(q,r)}_{a,b}(x)`.
    pub fn w_ab(&self, x: f64) -> Split {
        match self.above(x) {
            None => Split::stable(self.sc().w(x - self.a)),
            Some(s) => Split::stable(self.w_src.eval(s)) + conv_split(&self.kr_w, &self.w_src, s) * self.ctx.r(),
        }
    }

    /// `d/dx W^{(q,r)}_{a,b}(x)` for `x != a`.
    pub fn w_ab_prime(&self, x: f64) -> Split {
        match self.above(x) {
            None => Split::stable(self.sc().w_prime(x - self.a)),
            Some(s) => {
                let w0 = self.sc().scale_qr().w(0.0);
                Split::stable(self.wp_src.eval(s) + self.ctx.r() * w0 * self.w_src.eval(s))
                    + conv_split(&self.kr_wp, &self.w_src, s) * self.ctx.r()
            }
        }
    }

    /// `Z^{(q,r)}_{a,b}(x)`.
    pub fn z_ab(&self, x: f64) -> Split {
        match self.above(x) {
            None => Split::stable(self.sc().z(x - self.a)),
            Some(s) => Split::stable(self.z_src.eval(s)) + conv_split(&self.kr_w, &self.z_src, s) * self.ctx.r(),
        }
    }

    /// `Z̄^{(q,r)}_{a,b}(x)`.
    pub fn zbar_ab(&self, x: f64) -> Split {
        match self.above(x) {
            None => Split::stable(self.sc().z_bar(x - self.a)),
            Some(s) => {
                Split::stable(self.zbar_src.eval(s)) + conv_split(&self.kr_w, &self.zbar_src, s) * self.ctx.r()
            }
        }
    }

    fn rho_source(&self, h: &PiecewisePoly) -> Option<&Source> {
        if h == &self.f {
            Some(&self.rho_f)
        } else if h == &self.ft {
            Some(&self.rho_ft)
        } else if h == &self.ftp {
            Some(&self.rho_ftp)
        } else {
            None
        }
    }

    /// `ρ^{(q,r)}_{a,b}(x; h)`.
    pub fn rho_r_split(&self, h: &PiecewisePoly, x: f64) -> Split {
        let inner = self.ctx.rho_pp(h, self.a, self.b, x);
        match self.above(x) {
            None => Split::stable(inner),
            Some(s) => {
                let owned;
                let src = match self.rho_source(h) {
                    Some(src) => src,
                    None => {
                        let k = self.ctx.k_coeffs(h, self.a, self.b);
                        owned = Source::exp_sum(
                            self.sc()
                                .scale_q()
                                .terms()
                                .iter()
                                .zip(k)
                                .map(|(&(ci, r), ki)| (Poly::constant(ci * ki), r)),
                        );
                        &owned
                    }
                };
                Split::stable(inner) + conv_split(&self.kr_w, src, s) * self.ctx.r()
            }
        }
    }

    /// `∫_a^{min(b,x)} W'(x-y) f̃'(y) dy + r ∫_b^x W^{(q+r)'}(x-y) ρ(y; f̃') dy`.
    pub(crate) fn rho_r_prime_ftp(&self, x: f64) -> Split {
        let inner = self.ctx.rho_prime_pp(&self.ftp, self.a, self.b, x);
        match self.above(x) {
            None => Split::stable(inner),
            Some(s) => Split::stable(inner) + conv_split(&self.kr_wp, &self.rho_ftp, s) * self.ctx.r(),
        }
    }

    /// `ρ^{(q)}_{a,b}(b; h)` for the three cached integrands, via the source at `t = 0`.
    pub fn rho_at_b(&self, h: Integrand) -> f64 {
        match h {
            Integrand::F => self.rho_f.eval(0.0),
            Integrand::FTilde => self.rho_ft.eval(0.0),
            Integrand::FTildePrime => self.rho_ftp.eval(0.0),
            other => self.ctx.rho_pp(&self.ctx.integrand(other), self.a, self.b, self.b),
        }
    }

    /// `∫_b^x W^{(q+r)}(x-y) h(y) dy` for `h ∈ {f, f̃'}`.
    pub(crate) fn tail_conv_w(&self, h: Integrand, x: f64) -> Split {
        match self.above(x) {
            None => Split::default(),
            Some(s) => conv_split(&self.kr_w, self.tail(h), s),
        }
    }

    /// `∫_b^x W^{(q+r)'}(x-y) h(y) dy`.
    pub(crate) fn tail_conv_wp(&self, h: Integrand, x: f64) -> Split {
        match self.above(x) {
            None => Split::default(),
            Some(s) => conv_split(&self.kr_wp, self.tail(h), s),
        }
    }

    /// `∫_b^x W̄^{(q+r)}(x-y) h(y) dy`.
    pub(crate) fn tail_conv_wbar(&self, h: Integrand, x: f64) -> Split {
        match self.above(x) {
            None => Split::default(),
            Some(s) => conv_split(&self.kr_wbar, self.tail(h), s),
        }
    }

    fn tail(&self, h: Integrand) -> &Source {
        match h {
            Integrand::F => &self.tail_f,
            Integrand::FTilde => &self.tail_ft,
            Integrand::FTildePrime => &self.tail_ftp,
            _ => unreachable!("tail convolutions are only taken of f, f̃ and f̃'"),
        }
    }
}
