//! Search for the optimal barriers `(a*, b*)`.
//!
//! Outer bisection on `a ↦ Γ̲(a) = inf_{b>a} Γ(a, b)` over
//! `(a̲1 ∨ a̲2, ā)`, inner bracket-and-bisect on the sign change of
//! `γ(a, ·)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernels::KernelContext;
use crate::valuation::{BarrierPair, Valuation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Relative bracket width at which the outer bisection on `a` stops.
    pub tol_root: f64,
    /// Relative bracket width at which the inner bisection on `b` stops.
    pub tol_min: f64,
    /// Search ceiling for `b`; defaults to `ā̄ + 50`.
    pub b_max: Option<f64>,
    pub max_iter: usize,
    /// First offset `b - a` of the geometric scan.
    pub b_start: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tol_root: 1e-10, tol_min: 1e-10, b_max: None, max_iter: 200, b_start: 1e-3 }
    }
}

impl SolverSettings {
    fn validate(&self) -> Result<()> {
        if !(self.tol_root > 0.0 && self.tol_min > 0.0 && self.b_start > 0.0 && self.max_iter > 0) {
            return Err(Error::InvalidArgument("solver tolerances, b_start and max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Location and value of `inf_{b > a} Γ(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinOverB {
    /// Minimiser; equals `a` when the infimum is the limit `b ↓ a`.
    pub b: f64,
    pub value: f64,
    pub boundary: bool,
}

fn b_ceiling(ctx: &KernelContext, settings: &SolverSettings) -> Result<f64> {
    match (settings.b_max, ctx.thresholds().a_bbar) {
        (Some(b), Some(abb)) if b <= abb => {
            Err(Error::InvalidArgument(format!("b_max = {b} must exceed ā̄ = {abb}")))
        }
        (Some(b), _) => Ok(b),
        (None, Some(abb)) => Ok(abb + 50.0),
        (None, None) => Err(Error::Unsupported(
            "ā̄ is infinite: the double-barrier solve does not apply; use the single-barrier fallback".into(),
        )),
    }
}

fn bisect_width(lo: f64, hi: f64, tol: f64) -> bool {
    hi - lo <= tol * lo.abs().max(hi.abs()).max(1.0)
}

enum Scan {
    /// `γ` turned positive between the two offsets.
    Bracket(f64, f64),
    /// `γ(a, a+) >= 0`.
    Boundary,
    /// Some `Γ(a, b) < 0` was seen and the caller only wanted the sign.
    Negative,
}

fn scan(ctx: &KernelContext, a: f64, b_max: f64, settings: &SolverSettings, sign_only: bool) -> Result<Scan> {
    if ctx.gamma_small_at_diagonal(a) >= 0.0 {
        return Ok(Scan::Boundary);
    }
    if sign_only && ctx.gamma1(a) < 0.0 {
        return Ok(Scan::Negative);
    }
    let mut prev = a;
    let mut d = settings.b_start;
    loop {
        let b = (a + d).min(b_max);
        let (g, gs) = ctx.gamma_pair(a, b)?;
        if sign_only && g < 0.0 {
            return Ok(Scan::Negative);
        }
        if gs > 0.0 {
            return Ok(Scan::Bracket(prev, b));
        }
        if b >= b_max {
            if g < 0.0 {
                return Ok(Scan::Negative);
            }
            return Err(Error::Ceiling(format!(
                "γ({a}, ·) is still negative at b_max = {b_max}; raise the ceiling"
            )));
        }
        prev = b;
        d *= 2.0;
    }
}

fn refine(ctx: &KernelContext, a: f64, mut lo: f64, mut hi: f64, settings: &SolverSettings) -> Result<f64> {
    for _ in 0..settings.max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || bisect_width(lo, hi, settings.tol_min) {
            break;
        }
        if ctx.gamma_small(a, mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // the end with the smaller |γ|
    let (gl, gh) = (
        if lo > a { ctx.gamma_small(a, lo)?.abs() } else { f64::INFINITY },
        ctx.gamma_small(a, hi)?.abs(),
    );
    Ok(if gl < gh { lo } else { hi })
}

/// `(b_min, Γ̲(a))`.
pub fn min_over_b(ctx: &KernelContext, a: f64, settings: &SolverSettings) -> Result<MinOverB> {
    settings.validate()?;
    let b_max = b_ceiling(ctx, settings)?;
    if !(a < b_max) {
        return Err(Error::InvalidArgument(format!("a = {a} is not below b_max = {b_max}")));
    }
    match scan(ctx, a, b_max, settings, false)? {
        Scan::Boundary => Ok(MinOverB { b: a, value: ctx.gamma1(a), boundary: true }),
        Scan::Bracket(lo, hi) => {
            let b = refine(ctx, a, lo, hi, settings)?;
            Ok(MinOverB { b, value: ctx.gamma_big(a, b)?, boundary: false })
        }
        Scan::Negative => Err(Error::Ceiling(format!(
            "no minimiser of Γ({a}, ·) below b_max = {b_max}"
        ))),
    }
}

/// Whether `Γ̲(a) >= 0`.
fn lower_envelope_nonnegative(ctx: &KernelContext, a: f64, b_max: f64, settings: &SolverSettings) -> Result<bool> {
    match scan(ctx, a, b_max, settings, true)? {
        Scan::Negative => Ok(false),
        Scan::Boundary => Ok(ctx.gamma1(a) >= 0.0),
        Scan::Bracket(lo, hi) => {
            let b = refine(ctx, a, lo, hi, settings)?;
            Ok(ctx.gamma_big(a, b)? >= 0.0)
        }
    }
}

/// `(a̲1 ∨ a̲2 + 1e-9, ā)`, the bracket on which `Γ̲` changes sign.
pub fn a_bracket(ctx: &KernelContext) -> Result<(f64, f64)> {
    let lower = ctx.a_under()?.max() + 1e-9;
    Ok((lower, ctx.thresholds().a_bar))
}

/// The unique `(a*, b*)` with `Γ = γ = 0`.
pub fn solve(ctx: &KernelContext, settings: &SolverSettings) -> Result<BarrierPair> {
    let (lo, hi) = a_bracket(ctx)?;
    solve_in(ctx, settings, lo, hi)
}

/// [`solve`] with an explicit outer bracket `(lo, hi)` for `a`.
pub fn solve_in(ctx: &KernelContext, settings: &SolverSettings, mut lo: f64, mut hi: f64) -> Result<BarrierPair> {
    settings.validate()?;
    let b_max = b_ceiling(ctx, settings)?;
    if !(lo < hi) {
        return Err(Error::Internal(format!("empty bracket for a: ({lo}, {hi})")));
    }
    if lower_envelope_nonnegative(ctx, lo, b_max, settings)? {
        return Err(Error::RootSearch(format!("Γ̲ is not negative at the lower end a = {lo}")));
    }
    if !lower_envelope_nonnegative(ctx, hi, b_max, settings)? {
        return Err(Error::RootSearch(format!("Γ̲ is not positive at the upper end a = {hi}")));
    }
    for _ in 0..settings.max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || bisect_width(lo, hi, settings.tol_root) {
            break;
        }
        if lower_envelope_nonnegative(ctx, mid, b_max, settings)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // Γ̲(hi) >= 0 > Γ̲(lo); keep the end whose minimum is closer to zero
    let m_hi = min_over_b(ctx, hi, settings)?;
    let (a, m) = match min_over_b(ctx, lo, settings) {
        Ok(m_lo) => polish(ctx, settings, (lo, m_lo), (hi, m_hi))?,
        Err(_) => (hi, m_hi),
    };
    if m.boundary {
        return Err(Error::RootSearch(format!(
            "the minimum of Γ({a}, ·) sits at b = a+; no interior optimum"
        )));
    }
    let mut pair = BarrierPair::new(a, m.b)?;
    pair.diagnostics = Some(Valuation::new(ctx, a, m.b)?.diagnostics());
    Ok(pair)
}

/// Illinois steps on `Γ̲` inside the final bracket. Where `Γ̲` is steep in
/// `a` (close to `a̲2`) a bracket of relative width `tol_root` still leaves a
/// sizeable `Γ`.
fn polish(
    ctx: &KernelContext,
    settings: &SolverSettings,
    (mut a0, lo): (f64, MinOverB),
    (mut a1, hi): (f64, MinOverB),
) -> Result<(f64, MinOverB)> {
    let target = 1e-12 * ctx.gamma_scale();
    let better = |x: &(f64, MinOverB), y: &(f64, MinOverB)| match (x.1.boundary, y.1.boundary) {
        (false, true) => true,
        (true, false) => false,
        _ => x.1.value.abs() < y.1.value.abs(),
    };
    let mut best = if better(&(a0, lo), &(a1, hi)) { (a0, lo) } else { (a1, hi) };
    let (mut f0, mut f1) = (lo.value, hi.value);
    if !(f0 < 0.0 && f1 >= 0.0) {
        return Ok(best);
    }
    let mut last = 0;
    for _ in 0..60 {
        if !best.1.boundary && best.1.value.abs() <= target {
            break;
        }
        let mut a = (a0 * f1 - a1 * f0) / (f1 - f0);
        if !(a > a0 && a < a1) {
            a = 0.5 * (a0 + a1);
        }
        if a <= a0 || a >= a1 {
            break;
        }
        let m = min_over_b(ctx, a, settings)?;
        if m.value >= 0.0 {
            (a1, f1) = (a, m.value);
            if last == 1 {
                f0 *= 0.5;
            }
            last = 1;
        } else {
            (a0, f0) = (a, m.value);
            if last == -1 {
                f1 *= 0.5;
            }
            last = -1;
        }
        if better(&(a, m), &best) {
            best = (a, m);
        }
    }
    Ok(best)
}

/// `(a̲2, +∞)` when `ā̄` is infinite, otherwise [`solve`].
pub fn solve_or_fallback(ctx: &KernelContext, settings: &SolverSettings) -> Result<BarrierPair> {
    if ctx.thresholds().a_bbar.is_none() && settings.b_max.is_none() {
        let a2 = ctx.a_under()?.a2;
        return BarrierPair::new(a2, f64::INFINITY);
    }
    solve(ctx, settings)
}

/// One solve per observation rate, each on its own context.
pub fn sweep_r(
    ctx: &KernelContext,
    rs: &[f64],
    settings: &SolverSettings,
    exec: Execution,
) -> Vec<Result<BarrierPair>> {
    exec.map(rs, |&r| ctx.with_r(r).and_then(|c| solve_or_fallback(&c, settings)))
}
