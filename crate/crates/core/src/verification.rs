//! Numerical audit of the optimality conditions for a barrier pair: the
//! generator `(𝓛 - q)v`, the intervention operator `𝓜v`, and the QVI residual
//! `(𝓛 - q)v + r(𝓜v - v) + f`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernels::KernelContext;
use crate::numerics::{integrate, QuadratureSettings};
use crate::valuation::Valuation;

/// Relative threshold below which a QVI residual counts as a violation.
pub const VIOLATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    BelowA,
    Interior,
    AboveB,
}

impl Region {
    pub fn of(x: f64, a: f64, b: f64) -> Self {
        if x <= a {
            Region::BelowA
        } else if x < b {
            Region::Interior
        } else {
            Region::AboveB
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Region::BelowA => "below-a",
            Region::Interior => "interior",
            Region::AboveB => "above-b",
        }
    }
}

/// Evaluates `𝓛`, `𝓜` and the QVI residual for one pair.
pub struct Verifier<'a> {
    val: Valuation<'a>,
    ctx: &'a KernelContext,
    quad: QuadratureSettings,
}

impl<'a> Verifier<'a> {
    pub fn new(ctx: &'a KernelContext, a: f64, b: f64) -> Result<Self> {
        let quad = QuadratureSettings { abs_tol: 1e-11, rel_tol: 1e-13, max_subdivisions: 4000 };
        Ok(Self { val: Valuation::new(ctx, a, b)?, ctx, quad })
    }

    pub fn valuation(&self) -> &Valuation<'a> {
        &self.val
    }

    fn a(&self) -> f64 {
        self.val.a()
    }

    fn b(&self) -> f64 {
        self.val.b()
    }

    /// `∫_{-∞}^0 v(x + z) η e^{ηz} dz`, exact on the affine part below `a`.
    fn jump_average(&self, x: f64, eta: f64) -> Result<f64> {
        let (a, b) = (self.a(), self.b());
        let c_u = self.ctx.cost().c_u();
        let c = (a - x).min(0.0);
        // v(y) = v(a) - C_U (y - a) for y <= a
        let affine = (eta * c).exp() * (self.val.value(a) - c_u * (x - a) - c_u * (c - 1.0 / eta));
        if x <= a {
            return Ok(affine);
        }
        let g = |z: f64| self.val.value(x + z) * (eta * z).exp() * eta;
        let mut cuts = vec![a - x];
        if b - x > a - x && b - x < 0.0 {
            cuts.push(b - x);
        }
        cuts.push(0.0);
        let mut total = affine;
        for w in cuts.windows(2) {
            let q = integrate(g, w[0], w[1], &self.quad);
            if !q.converged {
                return Err(Error::Internal(format!("jump integral at x = {x} did not converge")));
            }
            total += q.value;
        }
        Ok(total)
    }

    /// `(𝓛 - q) v(x)` with the Lévy–Khintchine drift and the small-jump
    /// compensator on `(-1, 0)`. At `x = a` the right derivatives are used.
    pub fn generator(&self, x: f64) -> Result<f64> {
        let model = self.ctx.model();
        let q = self.ctx.q();
        let v = self.val.value(x);
        let vp = self.val.value_prime(x);
        let vpp = if model.has_unbounded_variation() { self.val.value_second(x)? } else { 0.0 };
        let mut out = model.gamma_coefficient() * vp + 0.5 * model.sigma * model.sigma * vpp - q * v;
        for p in &model.jumps {
            // ∫_{-1}^0 z η e^{ηz} dz
            let m1 = -(1.0 - (-p.eta).exp() * (1.0 + p.eta)) / p.eta;
            out += p.lambda * (self.jump_average(x, p.eta)? - v - vp * m1);
        }
        Ok(out)
    }

    /// Closed form of `𝓜v(x) = inf_{l >= 0} {C_D l + v(x - l)}` at the optimum.
    pub fn m_operator(&self, x: f64) -> f64 {
        let b = self.b();
        if x < b {
            self.val.value(x)
        } else {
            self.ctx.cost().c_d() * (x - b) + self.val.value(b)
        }
    }

    /// `𝓜v(x)` for any pair: the infimum is attained where `v'(x - l) = C_D`,
    /// found by bisection, or at `l = 0` when `v'(x) <= C_D`. Assumes `v'` is
    /// non-decreasing on `[a, x]`.
    pub fn m_operator_numeric(&self, x: f64) -> f64 {
        let c_d = self.ctx.cost().c_d();
        if x <= self.a() || self.val.value_prime(x) <= c_d {
            return self.val.value(x);
        }
        let (mut lo, mut hi) = (self.a(), x);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.val.value_prime(mid) > c_d {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        c_d * (x - lo) + self.val.value(lo)
    }

    /// Grid minimisation of `C_D l + v(x - l)` over `l ∈ [0, x - a + 5]`;
    /// returns `(minimum, argmin)`.
    pub fn m_operator_brute(&self, x: f64, n: usize) -> (f64, f64) {
        let c_d = self.ctx.cost().c_d();
        let hi = (x - self.a() + 5.0).max(0.0);
        let n = n.max(2);
        (0..n)
            .map(|k| {
                let l = hi * k as f64 / (n - 1) as f64;
                (c_d * l + self.val.value(x - l), l)
            })
            .fold((f64::INFINITY, 0.0), |best, c| if c.0 < best.0 { c } else { best })
    }

    /// The value the paper's identities predict for `(𝓛 - q)v + f` at `x`.
    pub fn predicted_generator_plus_f(&self, x: f64) -> f64 {
        let cost = self.ctx.cost();
        let (a, b) = (self.a(), self.b());
        match Region::of(x, a, b) {
            Region::BelowA => cost.f_tilde(x) - cost.f_tilde(a),
            Region::Interior => 0.0,
            Region::AboveB => {
                -self.ctx.r() * (self.val.value(b) - self.val.value(x) + cost.c_d() * (x - b))
            }
        }
    }

    pub fn node(&self, x: f64) -> Result<QviNode> {
        let f = self.ctx.cost().f(x);
        let gen = self.generator(x)?;
        let v = self.val.value(x);
        let mv = self.m_operator_numeric(x);
        Ok(QviNode {
            x,
            region: Region::of(x, self.a(), self.b()),
            generator_plus_f: gen + f,
            predicted: self.predicted_generator_plus_f(x),
            residual: gen + self.ctx.r() * (mv - v) + f,
            v_prime: self.val.value_prime(x),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QviNode {
    pub x: f64,
    pub region: Region,
    /// `(𝓛 - q)v(x) + f(x)`
    pub generator_plus_f: f64,
    /// What the generator identities predict for `generator_plus_f`.
    pub predicted: f64,
    /// `(𝓛 - q)v + r(𝓜v - v) + f`
    pub residual: f64,
    pub v_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QviReport {
    pub a: f64,
    pub b: f64,
    pub nodes: Vec<QviNode>,
    /// Most negative residual (0 if none is negative).
    pub max_violation: f64,
    /// `VIOLATION_TOL · max(1, max |f|)` over the grid.
    pub threshold: f64,
    /// Indices of nodes with residual below `-threshold`.
    pub flagged: Vec<usize>,
    /// Largest `|generator_plus_f - predicted|`.
    pub max_identity_error: f64,
    /// Whether `v' >= -C_U` (up to `threshold`) at every node.
    pub slope_ok: bool,
}

impl QviReport {
    pub fn passed(&self) -> bool {
        self.flagged.is_empty() && self.slope_ok
    }
}

pub const QVI_HEADER: [&str; 6] = ["x", "region", "residual", "generator_plus_f", "predicted", "v_prime"];

/// Audits the pair on `grid`. Grid points equal to `a` use right limits.
pub fn qvi_audit(ctx: &KernelContext, a: f64, b: f64, grid: &[f64], exec: Execution) -> Result<QviReport> {
    let ver = Verifier::new(ctx, a, b)?;
    let limit = ver.valuation().reliable_limit();
    if let Some(x) = grid.iter().find(|&&x| !(x <= limit)) {
        return Err(Error::Domain(format!("audit node {x} lies beyond the reliable range x <= {limit:.4}")));
    }
    let nodes = exec.map(grid, |&x| ver.node(x)).into_iter().collect::<Result<Vec<_>>>()?;
    let fmax = grid.iter().map(|&x| ctx.cost().f(x).abs()).fold(1.0, f64::max);
    let threshold = VIOLATION_TOL * fmax;
    let flagged = nodes.iter().enumerate().filter(|(_, n)| !(n.residual >= -threshold)).map(|(i, _)| i).collect();
    let max_violation = nodes.iter().map(|n| n.residual).fold(0.0, f64::min);
    let max_identity_error = nodes.iter().map(|n| (n.generator_plus_f - n.predicted).abs()).fold(0.0, f64::max);
    let c_u = ctx.cost().c_u();
    let slope_ok = nodes.iter().all(|n| n.v_prime >= -c_u - threshold);
    Ok(QviReport { a, b, nodes, max_violation, threshold, flagged, max_identity_error, slope_ok })
}
