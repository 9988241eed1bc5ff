//! Scale functions of a hyperexponential spectrally negative Lévy process.
//!
//! For every rate `θ > 0` the scale function is the exponential sum
//! `W^{(θ)}(x) = Σ_ρ e^{ρ x} / ψ'(ρ)` over the roots `ρ` of `ψ(ρ) = θ`
//! (one positive root `Φ_θ` and the negative roots `-ξ_i`), extended by zero
//! on the negative half-line. Antiderivatives and the second scale function
//! are exact term-by-term operations on that sum.

use crate::error::{Error, Result};
use crate::levy::{LevyModel, RootSet};

/// `e^z - 1 - z`, accurate for small `z`.
pub(crate) fn expm1_minus_z(z: f64) -> f64 {
    if z.abs() < 0.1 {
        let mut term = z * z / 2.0;
        let mut sum = term;
        for k in 3..12 {
            term *= z / k as f64;
            sum += term;
        }
        sum
    } else {
        z.exp_m1() - z
    }
}

/// `W^{(θ)}` at one fixed rate, stored as `(coefficient, exponent)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleFunction {
    roots: RootSet,
    terms: Vec<(f64, f64)>,
}

impl ScaleFunction {
    pub fn new(roots: RootSet) -> Self {
        let terms = roots.exp_terms();
        Self { roots, terms }
    }

    pub fn rate(&self) -> f64 {
        self.roots.q
    }

    pub fn phi(&self) -> f64 {
        self.roots.phi
    }

    pub fn roots(&self) -> &RootSet {
        &self.roots
    }

    /// `(coefficient, exponent)` pairs; the first one carries `Φ_θ`.
    pub fn terms(&self) -> &[(f64, f64)] {
        &self.terms
    }

    /// `W(x)`, with `W(0) = W(0+)`.
    pub fn w(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.terms.iter().map(|&(c, r)| c * (r * x).exp()).sum()
    }

    /// `W'(x)` for `x > 0`, right derivative at zero.
    pub fn w_prime(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.terms.iter().map(|&(c, r)| c * r * (r * x).exp()).sum()
    }

    pub fn w_second(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.terms.iter().map(|&(c, r)| c * r * r * (r * x).exp()).sum()
    }

    /// `W̄(x) = ∫_0^x W`.
    pub fn w_bar(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.terms.iter().map(|&(c, r)| c * (r * x).exp_m1() / r).sum()
    }

    /// `W̄̄(x) = ∫_0^x W̄`.
    pub fn w_bar_bar(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.terms
            .iter()
            .map(|&(c, r)| c * expm1_minus_z(r * x) / (r * r))
            .sum()
    }

    /// `e^{-Φ x} W(x)`, finite for arbitrarily large `x`.
    pub fn w_scaled(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let phi = self.phi();
        self.terms
            .iter()
            .map(|&(c, r)| c * ((r - phi) * x).exp())
            .sum()
    }

    /// `log W(x)` for `x > 0`, usable where `W` itself overflows.
    pub fn ln_w(&self, x: f64) -> f64 {
        self.phi() * x + self.w_scaled(x).ln()
    }

    pub fn w_at_zero(&self) -> f64 {
        self.roots.w_at_zero()
    }
}

/// A model paired with the discount rate `q` and observation rate `r`.
#[derive(Debug, Clone)]
pub struct ScaleContext {
    model: LevyModel,
    q: f64,
    r: f64,
    scale_q: ScaleFunction,
    scale_qr: ScaleFunction,
}

impl ScaleContext {
    pub fn new(model: LevyModel, q: f64, r: f64) -> Result<Self> {
        model.validate()?;
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::Assumption(format!("discount rate q must be positive, got {q}")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Assumption(format!("observation rate r must be positive, got {r}")));
        }
        let scale_q = ScaleFunction::new(model.root_set(q)?);
        let scale_qr = ScaleFunction::new(model.root_set(q + r)?);
        if !(scale_qr.phi() > scale_q.phi()) {
            return Err(Error::Internal("right inverse not increasing in the rate".into()));
        }
        Ok(Self { model, q, r, scale_q, scale_qr })
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `W^{(q)}`.
    pub fn scale_q(&self) -> &ScaleFunction {
        &self.scale_q
    }

    /// `W^{(q+r)}`.
    pub fn scale_qr(&self) -> &ScaleFunction {
        &self.scale_qr
    }

    pub fn phi_q(&self) -> f64 {
        self.scale_q.phi()
    }

    pub fn phi_qr(&self) -> f64 {
        self.scale_qr.phi()
    }

    pub fn w(&self, x: f64) -> f64 {
        self.scale_q.w(x)
    }

    pub fn w_prime(&self, x: f64) -> f64 {
        self.scale_q.w_prime(x)
    }

    pub fn w_bar(&self, x: f64) -> f64 {
        self.scale_q.w_bar(x)
    }

    pub fn w_bar_bar(&self, x: f64) -> f64 {
        self.scale_q.w_bar_bar(x)
    }

    /// `W^{(θ)}` at an arbitrary rate, built on demand.
    pub fn w_at(&self, rate: f64, x: f64) -> Result<f64> {
        Ok(ScaleFunction::new(self.model.root_set(rate)?).w(x))
    }

    /// `Z^{(q)}(x) = 1 + q W̄^{(q)}(x)`.
    pub fn z(&self, x: f64) -> f64 {
        1.0 + self.q * self.w_bar(x)
    }

    /// `Z̄^{(q)}(x) = x + q W̄̄^{(q)}(x)`.
    pub fn z_bar(&self, x: f64) -> f64 {
        x + self.q * self.w_bar_bar(x)
    }

    /// Second scale function `Z^{(q)}(x, Φ_{q+r})`.
    ///
    /// Evaluated through `r ∫_0^∞ e^{-Φ_{q+r} z} W^{(q)}(z + x) dz`, which
    /// for an exponential sum collapses to `r Σ c e^{ρ x} / (Φ_{q+r} - ρ)`.
    /// Every term is bounded by the `e^{Φ_q x}` growth, so no cancellation
    /// occurs even when `Φ_{q+r}` is large.
    pub fn z_phi(&self, x: f64) -> f64 {
        let phi = self.phi_qr();
        if x <= 0.0 {
            return (phi * x).exp();
        }
        self.r
            * self
                .scale_q
                .terms()
                .iter()
                .map(|&(c, rho)| c * (rho * x).exp() / (phi - rho))
                .sum::<f64>()
    }

    /// `∂_x Z^{(q)}(x, Φ_{q+r}) = Φ_{q+r} Z^{(q)}(x, Φ_{q+r}) - r W^{(q)}(x)`.
    pub fn z_phi_prime(&self, x: f64) -> f64 {
        let phi = self.phi_qr();
        if x < 0.0 {
            return phi * (phi * x).exp();
        }
        self.r
            * self
                .scale_q
                .terms()
                .iter()
                .map(|&(c, rho)| c * rho * (rho * x).exp() / (phi - rho))
                .sum::<f64>()
    }

    /// `∫_a^∞ Z^{(q)}(b - y, Φ_{q+r}) dy` in closed form.
    pub fn z_phi_integral(&self, a: f64, b: f64) -> f64 {
        (self.z_phi(b - a) + self.r * self.w_bar(b - a)) / self.phi_qr()
    }
}
