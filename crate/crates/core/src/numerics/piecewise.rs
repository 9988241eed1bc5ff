//! Piecewise polynomials on the real line.
//!
//! Pieces are right-continuous: at a breakpoint the piece to its right is
//! used, which makes [`PiecewisePoly::derivative`] a right derivative.

use serde::{Deserialize, Serialize};

use super::expint::poly_exp_integral;
use super::poly::Poly;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePoly {
    breakpoints: Vec<f64>,
    pieces: Vec<Poly>,
}

impl PiecewisePoly {
    /// `pieces[i]` applies on `[breakpoints[i-1], breakpoints[i])`.
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Poly>) -> Result<Self> {
        if pieces.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                pieces.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument("breakpoints must be finite".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("breakpoints must be strictly increasing".into()));
        }
        if pieces.iter().any(|p| p.coeffs().iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidArgument("polynomial coefficients must be finite".into()));
        }
        Ok(Self { breakpoints, pieces })
    }

    pub fn polynomial(p: Poly) -> Self {
        Self { breakpoints: Vec::new(), pieces: vec![p] }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Poly] {
        &self.pieces
    }

    fn index(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= x)
    }

    /// Domain `[lo, hi)` of piece `i`.
    pub fn piece_domain(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 { f64::NEG_INFINITY } else { self.breakpoints[i - 1] };
        let hi = self.breakpoints.get(i).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.pieces[self.index(x)].eval(x)
    }

    /// Limit from the left.
    pub fn eval_left(&self, x: f64) -> f64 {
        let i = self.breakpoints.partition_point(|&b| b < x);
        self.pieces[i].eval(x)
    }

    pub fn map(&self, f: impl Fn(&Poly) -> Poly) -> Self {
        Self { breakpoints: self.breakpoints.clone(), pieces: self.pieces.iter().map(f).collect() }
    }

    pub fn derivative(&self) -> Self {
        self.map(Poly::derivative)
    }

    /// Adds the same polynomial to every piece.
    pub fn add_poly(&self, p: &Poly) -> Self {
        self.map(|piece| piece + p)
    }

    /// Pieces clipped to `[lo, hi]`, skipping empty overlaps.
    pub fn segments(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64, &Poly)> + '_ {
        (0..self.pieces.len()).filter_map(move |i| {
            let (plo, phi) = self.piece_domain(i);
            let (s, e) = (plo.max(lo), phi.min(hi));
            (e > s).then_some((s, e, &self.pieces[i]))
        })
    }

    /// `∫_lo^hi self(y) e^{rate (y - anchor)} dy`, exactly.
    pub fn exp_integral(&self, rate: f64, lo: f64, hi: f64, anchor: f64) -> f64 {
        self.segments(lo, hi)
            .map(|(s, e, p)| poly_exp_integral(p, rate, s, e, anchor))
            .sum()
    }

    /// Pieces expressed in `t = y - origin`, clipped to `t >= 0`.
    pub fn shifted_tail(&self, origin: f64) -> Vec<(f64, f64, Poly)> {
        self.segments(origin, f64::INFINITY)
            .map(|(s, e, p)| (s - origin, e - origin, p.recentred(origin, 1.0)))
            .collect()
    }
}
