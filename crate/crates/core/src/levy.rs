//! Spectrally negative Lévy processes of Brownian-plus-hyperexponential type.
//!
//! The process is `X(t) = drift·t + sigma·B(t) - Σ_{n ≤ N(t)} E_n`, where the
//! downward jump sizes `E_n` are drawn from a finite mixture of exponential
//! laws. Its Laplace exponent is a rational function of `s`, which makes the
//! roots of `ψ(s) = q` (and hence the scale functions) available in closed
//! form as exponential sums.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::roots::newton_bracketed;

/// Relative distance to a pole below which `ψ` refuses to evaluate.
const POLE_GUARD: f64 = 1e-9;

/// One exponential jump phase: intensity `lambda`, size law `Exp(eta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpPhase {
    pub lambda: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyModel {
    /// Linear drift of the paths (the coefficient of `s` in the closed-form
    /// exponent below). For zero `sigma` this is the bounded-variation drift.
    pub drift: f64,
    pub sigma: f64,
    #[serde(default)]
    pub jumps: Vec<JumpPhase>,
}

impl LevyModel {
    pub fn new(drift: f64, sigma: f64, jumps: Vec<JumpPhase>) -> Result<Self> {
        let model = Self { drift, sigma, jumps };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.drift.is_finite() {
            return Err(Error::Assumption("drift must be finite".into()));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Assumption("sigma must be finite and non-negative".into()));
        }
        for (j, phase) in self.jumps.iter().enumerate() {
            if !(phase.lambda > 0.0 && phase.lambda.is_finite()) {
                return Err(Error::Assumption(format!("jump phase {j}: lambda must be positive")));
            }
            if !(phase.eta > 0.0 && phase.eta.is_finite()) {
                return Err(Error::Assumption(format!("jump phase {j}: eta must be positive")));
            }
        }
        let etas = self.sorted_etas();
        if etas.windows(2).any(|w| (w[1] - w[0]) <= 1e-12 * w[1]) {
            return Err(Error::Assumption("jump rates eta must be pairwise distinct".into()));
        }
        if self.sigma == 0.0 && self.drift <= 0.0 {
            return Err(Error::Assumption(
                "X must not be the negative of a subordinator: need sigma > 0 or drift > 0".into(),
            ));
        }
        Ok(())
    }

    fn sorted_etas(&self) -> Vec<f64> {
        let mut etas: Vec<f64> = self.jumps.iter().map(|p| p.eta).collect();
        etas.sort_by(f64::total_cmp);
        etas
    }

    pub fn has_unbounded_variation(&self) -> bool {
        self.sigma > 0.0
    }

    /// Total jump intensity.
    pub fn jump_intensity(&self) -> f64 {
        self.jumps.iter().map(|p| p.lambda).sum()
    }

    /// `δ` of the bounded-variation decomposition `X(t) = δ t - S(t)`.
    pub fn bv_drift(&self) -> Option<f64> {
        (self.sigma == 0.0).then_some(self.drift)
    }

    /// The Lévy–Khintchine drift `γ`, i.e. the linear drift corrected by the
    /// compensator of jumps in `(-1, 0)`.
    pub fn gamma_coefficient(&self) -> f64 {
        self.drift + self.small_jump_compensator()
    }

    /// `∫_{(-1,0)} z μ(dz)` (negative).
    pub fn small_jump_compensator(&self) -> f64 {
        self.jumps
            .iter()
            .map(|p| -p.lambda * (1.0 - (-p.eta).exp() * (1.0 + p.eta)) / p.eta)
            .sum()
    }

    fn check_pole(&self, s: f64) -> Result<()> {
        for p in &self.jumps {
            if (s + p.eta).abs() <= POLE_GUARD * p.eta {
                return Err(Error::Domain(format!("psi evaluated at pole s = -{}", p.eta)));
            }
        }
        Ok(())
    }

    /// Laplace exponent `ψ(s) = log E e^{s X(1)}`.
    pub fn laplace_exponent(&self, s: f64) -> Result<f64> {
        self.check_pole(s)?;
        Ok(self.psi_unchecked(s))
    }

    pub fn laplace_exponent_prime(&self, s: f64) -> Result<f64> {
        self.check_pole(s)?;
        Ok(self.psi_prime_unchecked(s))
    }

    fn psi_unchecked(&self, s: f64) -> f64 {
        let jumps: f64 = self
            .jumps
            .iter()
            .map(|p| p.lambda * (p.eta / (p.eta + s) - 1.0))
            .sum();
        self.drift * s + 0.5 * self.sigma * self.sigma * s * s + jumps
    }

    fn psi_prime_unchecked(&self, s: f64) -> f64 {
        let jumps: f64 = self
            .jumps
            .iter()
            .map(|p| {
                let d = p.eta + s;
                p.lambda * p.eta / (d * d)
            })
            .sum();
        self.drift + self.sigma * self.sigma * s - jumps
    }

    /// `ψ'(0+) = E X(1)`.
    pub fn mean(&self) -> f64 {
        self.psi_prime_unchecked(0.0)
    }

    /// Right inverse `Φ(rate)`: the unique positive root of `ψ(s) = rate`.
    pub fn phi(&self, rate: f64) -> Result<f64> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("phi needs a positive rate, got {rate}")));
        }
        let mut hi = 1.0;
        while self.psi_unchecked(hi) <= rate {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::Internal("phi bracket expansion diverged".into()));
            }
        }
        let tol = 1e-14 * rate.max(1.0);
        newton_bracketed(
            |s| (self.psi_unchecked(s) - rate, self.psi_prime_unchecked(s)),
            0.0,
            hi,
            tol,
            200,
        )
    }

    /// All roots of `ψ(s) = rate` together with their residues.
    pub fn root_set(&self, rate: f64) -> Result<RootSet> {
        let phi = self.phi(rate)?;
        let etas = self.sorted_etas();
        let tol = 1e-14 * rate.max(1.0);
        let g = |s: f64| (self.psi_unchecked(s) - rate, self.psi_prime_unchecked(s));

        let mut brackets: Vec<(f64, f64)> = Vec::new();
        let mut right = 0.0;
        for &eta in &etas {
            let left = -eta * (1.0 - POLE_GUARD * 2.0);
            brackets.push((left, right));
            right = -eta * (1.0 + POLE_GUARD * 2.0);
        }
        if self.sigma > 0.0 {
            let r = right;
            let mut left = if r == 0.0 { -1.0 } else { 2.0 * r - 1.0 };
            while self.psi_unchecked(left) - rate <= 0.0 {
                left = 2.0 * left - 1.0;
                if left < -1e12 {
                    return Err(Error::Internal("negative root bracket expansion diverged".into()));
                }
            }
            brackets.push((left, r));
        }

        let mut neg_roots = Vec::with_capacity(brackets.len());
        for (lo, hi) in brackets {
            let s = newton_bracketed(g, lo, hi, tol, 400)
                .map_err(|e| Error::Internal(format!("negative root bracketing failed: {e}")))?;
            neg_roots.push(-s);
        }
        let expected = etas.len() + usize::from(self.sigma > 0.0);
        if neg_roots.len() != expected {
            return Err(Error::Internal(format!(
                "found {} negative roots, expected {expected}",
                neg_roots.len()
            )));
        }
        let residues = neg_roots
            .iter()
            .map(|&xi| -1.0 / self.psi_prime_unchecked(-xi))
            .collect();
        Ok(RootSet {
            q: rate,
            phi,
            neg_roots,
            residues,
            lead_coeff: 1.0 / self.psi_prime_unchecked(phi),
        })
    }
}

/// Roots of `ψ(s) = q` at a fixed rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub q: f64,
    /// `Φ_q`.
    pub phi: f64,
    /// The `ξ_i > 0` with `ψ(-ξ_i) = q`, increasing.
    pub neg_roots: Vec<f64>,
    /// `B_i = -1/ψ'(-ξ_i)`.
    pub residues: Vec<f64>,
    /// `1/ψ'(Φ_q)`.
    pub lead_coeff: f64,
}

impl RootSet {
    /// `W^{(q)}` as `(coefficient, exponent)` pairs, leading term first.
    pub fn exp_terms(&self) -> Vec<(f64, f64)> {
        std::iter::once((self.lead_coeff, self.phi))
            .chain(
                self.neg_roots
                    .iter()
                    .zip(&self.residues)
                    .map(|(&xi, &b)| (-b, -xi)),
            )
            .collect()
    }

    /// `W^{(q)}(0+)` reconstructed from the residue expansion.
    pub fn w_at_zero(&self) -> f64 {
        self.lead_coeff - self.residues.iter().sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_model() -> LevyModel {
        LevyModel::new(1.0, 1.0, vec![JumpPhase { lambda: 0.2, eta: 1.0 }]).unwrap()
    }

    #[test]
    fn exponent_values() {
        let m = paper_model();
        assert_eq!(m.laplace_exponent(0.0).unwrap(), 0.0);
        assert!((m.laplace_exponent(1.0).unwrap() - 1.4).abs() < 1e-15);
        assert!((m.mean() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn exponent_jump_term_matches_levy_measure_integral() {
        // ∫_{-∞}^0 (e^{sz} - 1) λ η e^{η z} dz by quadrature
        let m = paper_model();
        let s = 1.0;
        let q = crate::numerics::integrate(
            |z: f64| ((s * z).exp() - 1.0) * 0.2 * (z).exp(),
            -60.0,
            0.0,
            &Default::default(),
        );
        let closed = m.laplace_exponent(s).unwrap() - 1.0 - 0.5;
        assert!((q.value - closed).abs() < 1e-12);
    }

    #[test]
    fn pole_is_a_domain_error() {
        let m = paper_model();
        assert!(matches!(m.laplace_exponent(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn phi_residuals_and_order() {
        let m = paper_model();
        let p1 = m.phi(0.05).unwrap();
        let p2 = m.phi(0.15).unwrap();
        assert!((m.laplace_exponent(p1).unwrap() - 0.05).abs() < 1e-12);
        assert!((m.laplace_exponent(p2).unwrap() - 0.15).abs() < 1e-12);
        assert!(p2 > p1 && p1 > 0.0);
        // Φ_{0+} = 0 when ψ'(0+) > 0
        assert!(m.phi(1e-12).unwrap() < 1e-11);
    }

    #[test]
    fn root_set_structure() {
        let m = paper_model();
        let rs = m.root_set(0.05).unwrap();
        assert_eq!(rs.neg_roots.len(), 2);
        assert!(rs.neg_roots[0] > 0.0 && rs.neg_roots[0] < 1.0);
        assert!(rs.neg_roots[1] > 1.0);
        for &xi in &rs.neg_roots {
            assert!((m.laplace_exponent(-xi).unwrap() - 0.05).abs() < 1e-10);
        }
        assert!(rs.w_at_zero().abs() < 1e-12);
    }

    #[test]
    fn bounded_variation_root_count_and_w0() {
        let m = LevyModel::new(2.0, 0.0, vec![JumpPhase { lambda: 0.5, eta: 3.0 }]).unwrap();
        for &rate in &[0.01, 0.3, 7.0] {
            let rs = m.root_set(rate).unwrap();
            assert_eq!(rs.neg_roots.len(), 1);
            assert!((rs.w_at_zero() - 0.5).abs() < 1e-12, "W(0) = 1/δ");
        }
    }

    #[test]
    fn hyperexponential_roots_interlace_poles() {
        let m = LevyModel::new(
            0.5,
            0.7,
            vec![
                JumpPhase { lambda: 0.3, eta: 2.0 },
                JumpPhase { lambda: 1.1, eta: 0.5 },
                JumpPhase { lambda: 0.2, eta: 6.0 },
            ],
        )
        .unwrap();
        let rs = m.root_set(0.4).unwrap();
        assert_eq!(rs.neg_roots.len(), 4);
        let poles = [0.5, 2.0, 6.0];
        assert!(rs.neg_roots[0] < poles[0]);
        for i in 1..3 {
            assert!(rs.neg_roots[i] > poles[i - 1] && rs.neg_roots[i] < poles[i]);
        }
        assert!(rs.neg_roots[3] > poles[2]);
        for &xi in &rs.neg_roots {
            assert!((m.laplace_exponent(-xi).unwrap() - 0.4).abs() < 1e-10);
        }
        assert!(rs.w_at_zero().abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_subordinator() {
        assert!(LevyModel::new(-1.0, 0.0, vec![JumpPhase { lambda: 1.0, eta: 1.0 }]).is_err());
        assert!(LevyModel::new(1.0, 0.0, vec![JumpPhase { lambda: 1.0, eta: 1.0 }, JumpPhase { lambda: 1.0, eta: 1.0 }]).is_err());
    }
}
