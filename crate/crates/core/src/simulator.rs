//! Monte-Carlo simulation of the controlled process `Y^{a,b}`.
//!
//! Between events the free process is Brownian motion with drift, sampled on
//! a grid of step `dt`. Reflection at `a` uses the exact minimum of the
//! Brownian bridge over each step, so `Y` and `R` are exact in law at the grid
//! points; only the time integrals of `f` and `f'` carry a (trapezoid) error.
//! Jump times and observation times are exact and are inserted into the grid.
//!
//! Each sample draws from two sub-streams derived from `(seed, index)`, one
//! for Gaussian increments and one for event clocks. Bridge uniforms are a
//! hash of `(seed, index, step)` and are only computed when a path may touch
//! `a`. None of these depend on the barriers, so two simulations with the
//! same seed but different `(a, b)` see identical random inputs.

use rand::{Rng, SeedableRng};
use rand_distr::{Exp1, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::cost::CostSpec;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::levy::LevyModel;
use crate::numerics::PiecewisePoly;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub x0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Pair each path with its mirrored Brownian increments. Jumps and
    /// observation times are shared within a pair.
    pub antithetic: bool,
}

impl PathConfig {
    /// `10^5` antithetic paths, `dt = 1e-3`, horizon `ln(10^4)/q`.
    pub fn new(x0: f64, q: f64) -> Self {
        Self { x0, horizon: default_horizon(q), dt: 1e-3, n_paths: 100_000, seed: 0, antithetic: true }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.x0.is_finite() {
            return Err(Error::InvalidArgument("x0 must be finite".into()));
        }
        if !(self.dt > 0.0 && self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidArgument("dt and horizon must be positive".into()));
        }
        if self.n_paths == 0 || (self.antithetic && !self.n_paths.is_multiple_of(2)) {
            return Err(Error::InvalidArgument("n_paths must be positive (and even when antithetic)".into()));
        }
        Ok(())
    }

    fn n_samples(&self) -> usize {
        if self.antithetic { self.n_paths / 2 } else { self.n_paths }
    }
}

/// `T` with `e^{-qT} = 10^{-4}`.
pub fn default_horizon(q: f64) -> f64 {
    (1e4f64).ln() / q
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ControlledPath {
    pub times: Vec<f64>,
    pub y: Vec<f64>,
    pub r_cum: Vec<f64>,
    pub l_cum: Vec<f64>,
    pub obs_times: Vec<f64>,
    pub totals: PathTotals,
}

impl ControlledPath {
    fn push<const N: usize>(&mut self, t: f64, lanes: &Lanes<N>) {
        self.times.push(t);
        self.y.push(lanes.y[0]);
        self.r_cum.push(lanes.r_cum[0]);
        self.l_cum.push(lanes.l_cum[0]);
    }
}

/// Discounted functionals of one path up to the horizon.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PathTotals {
    /// `∫ e^{-qt} f(Y) dt`
    pub f: f64,
    /// `∫ e^{-qt} f'(Y) dt`
    pub f_prime: f64,
    /// `∫ e^{-qt} dR`
    pub r: f64,
    /// `∫ e^{-qt} dL`
    pub l: f64,
    /// `f(Y(T))`, `f'(Y(T))` and undiscounted control totals, for the tail estimate.
    pub f_end: f64,
    pub f_prime_end: f64,
    pub r_cum: f64,
    pub l_cum: f64,
}

impl PathTotals {
    fn lr(&self, c_u: f64, c_d: f64) -> f64 {
        c_u * self.r + c_d * self.l
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComponentEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
    /// First-order estimate of the contribution beyond the horizon:
    /// `e^{-qT}/q` times the mean running rate at the end of the paths.
    pub horizon_tail_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NpvEstimate {
    pub total: ComponentEstimate,
    pub lr: ComponentEstimate,
    pub f: ComponentEstimate,
    pub fprime: ComponentEstimate,
    pub config: PathConfig,
    pub a: f64,
    pub b: f64,
}

/// Running cost and prices for simulation. Unlike [`CostSpec`] this only
/// needs `q > 0` and `r >= 0`; convexity and the threshold assumptions are not
/// required to simulate.
#[derive(Debug, Clone, PartialEq)]
pub struct SimCost {
    pub f: PiecewisePoly,
    pub f_prime: PiecewisePoly,
    pub c_u: f64,
    pub c_d: f64,
    pub q: f64,
    pub r: f64,
}

impl SimCost {
    pub fn new(f: PiecewisePoly, c_u: f64, c_d: f64, q: f64, r: f64) -> Result<Self> {
        if !(q > 0.0 && q.is_finite() && r >= 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument("need q > 0 and r >= 0".into()));
        }
        if !(c_u.is_finite() && c_d.is_finite()) {
            return Err(Error::InvalidArgument("C_U and C_D must be finite".into()));
        }
        Ok(Self { f_prime: f.derivative(), f, c_u, c_d, q, r })
    }
}

impl From<&CostSpec> for SimCost {
    fn from(c: &CostSpec) -> Self {
        Self {
            f: c.f_pp().clone(),
            f_prime: c.f_prime_pp().clone(),
            c_u: c.c_u(),
            c_d: c.c_d(),
            q: c.q(),
            r: c.r(),
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Streams {
    gauss: Xoshiro256PlusPlus,
    events: Xoshiro256PlusPlus,
    bridge_key: u64,
}

impl Streams {
    fn new(seed: u64, index: u64) -> Self {
        let gauss = Xoshiro256PlusPlus::seed_from_u64(splitmix(seed) ^ splitmix(index.wrapping_add(0x5851_F42D)));
        let mut events = gauss.clone();
        events.jump();
        let bridge_key = splitmix(splitmix(seed ^ 0xB81D_6E5A) ^ index);
        Self { gauss, events, bridge_key }
    }

    /// Uniform in `(0, 1]` for grid step `step`, a pure function of the key
    /// and the step number.
    fn bridge_uniform(&self, step: u64) -> f64 {
        let bits = splitmix(self.bridge_key ^ step.wrapping_mul(0xD1B5_4A32_D192_ED03)) >> 11;
        (bits as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
    }
}

/// `f` and `f'` flattened for the inner loop: one piece lookup, two
/// Horner evaluations. Cubic and lower pieces use fixed-width rows.
struct CostEval {
    breaks: Vec<f64>,
    small: Vec<[[f64; 4]; 2]>,
    /// rows for higher degrees: `n` coefficients of `f` (highest first), then of `f'`
    general: Vec<f64>,
    n: usize,
}

impl CostEval {
    fn new(f: &PiecewisePoly, fp: &PiecewisePoly) -> Self {
        let mut breaks: Vec<f64> = f.breakpoints().iter().chain(fp.breakpoints()).copied().collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let n = f.pieces().iter().chain(fp.pieces()).map(|p| p.coeffs().len()).max().unwrap_or(1).max(1);
        let mut general = Vec::new();
        let mut small = Vec::new();
        for i in 0..=breaks.len() {
            // a point inside piece i of the merged partition
            let x = match (i.checked_sub(1).map(|j| breaks[j]), breaks.get(i)) {
                (None, None) => 0.0,
                (None, Some(&hi)) => hi - 1.0,
                (Some(lo), None) => lo + 1.0,
                (Some(lo), Some(&hi)) => 0.5 * (lo + hi),
            };
            let mut row = [[0.0; 4]; 2];
            for (slot, g) in [f, fp].into_iter().enumerate() {
                let c = g.pieces()[g.breakpoints().partition_point(|&b| b <= x)].coeffs();
                let padded = (0..n).rev().map(|k| c.get(k).copied().unwrap_or(0.0));
                if n <= 4 {
                    for (k, v) in padded.enumerate() {
                        row[slot][4 - n + k] = v;
                    }
                } else {
                    general.extend(padded);
                }
            }
            small.push(row);
        }
        Self { breaks, small, general, n }
    }

    fn eval_into(&self, ys: &[f64], f: &mut [f64], fp: &mut [f64]) {
        if self.breaks.is_empty() && self.n <= 4 {
            let [cf, cp] = self.small[0];
            for ((&x, a), b) in ys.iter().zip(f.iter_mut()).zip(fp.iter_mut()) {
                *a = ((cf[0] * x + cf[1]) * x + cf[2]) * x + cf[3];
                *b = ((cp[0] * x + cp[1]) * x + cp[2]) * x + cp[3];
            }
        } else {
            for ((&x, a), b) in ys.iter().zip(f.iter_mut()).zip(fp.iter_mut()) {
                (*a, *b) = self.eval(x);
            }
        }
    }

    #[inline]
    fn eval(&self, x: f64) -> (f64, f64) {
        let i = if self.breaks.is_empty() { 0 } else { self.breaks.partition_point(|&b| b <= x) };
        if self.n <= 4 {
            let [cf, cp] = &self.small[i];
            let a = ((cf[0] * x + cf[1]) * x + cf[2]) * x + cf[3];
            let b = ((cp[0] * x + cp[1]) * x + cp[2]) * x + cp[3];
            return (a, b);
        }
        let row = &self.general[2 * self.n * i..2 * self.n * (i + 1)];
        let (cf, cp) = row.split_at(self.n);
        let a = cf.iter().fold(0.0, |acc, &c| acc * x + c);
        let b = cp.iter().fold(0.0, |acc, &c| acc * x + c);
        (a, b)
    }
}

struct Setup {
    mu: f64,
    sigma: f64,
    a: f64,
    b: f64,
    q: f64,
    r: f64,
    lambda: f64,
    /// cumulative phase intensities and rates
    phases: Vec<(f64, f64)>,
    cost: CostEval,
}

impl Setup {
    fn new(model: &LevyModel, cost: &SimCost, a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || b.is_nan() || a >= b {
            return Err(Error::InvalidArgument(format!("need finite a < b, got ({a}, {b})")));
        }
        let mut acc = 0.0;
        let phases = model
            .jumps
            .iter()
            .map(|p| {
                acc += p.lambda;
                (acc, p.eta)
            })
            .collect();
        Ok(Self {
            mu: model.drift,
            sigma: model.sigma,
            a,
            b,
            q: cost.q,
            r: cost.r,
            lambda: model.jump_intensity(),
            phases,
            cost: CostEval::new(&cost.f, &cost.f_prime),
        })
    }

    fn next_exp(rng: &mut Xoshiro256PlusPlus, rate: f64) -> f64 {
        if rate > 0.0 {
            let e: f64 = rng.sample(Exp1);
            e / rate
        } else {
            f64::INFINITY
        }
    }

    fn jump_size(&self, rng: &mut Xoshiro256PlusPlus) -> f64 {
        let u: f64 = rng.gen::<f64>() * self.lambda;
        let eta = self.phases.iter().find(|(c, _)| u < *c).unwrap_or(self.phases.last().unwrap()).1;
        let e: f64 = rng.sample(Exp1);
        e / eta
    }
}

/// Paths of one sample in struct-of-arrays form with a fixed lane count, so
/// the per-step arithmetic unrolls over lanes.
struct Lanes<const N: usize> {
    sign: [f64; N],
    y: [f64; N],
    f: [f64; N],
    fp: [f64; N],
    r_cum: [f64; N],
    l_cum: [f64; N],
    acc_f: [f64; N],
    acc_fp: [f64; N],
    acc_r: [f64; N],
    acc_l: [f64; N],
}

impl<const N: usize> Lanes<N> {
    /// Lane `i` starts at `starts[i]` (padded with the last entry) with
    /// Brownian sign `signs[i]`.
    fn new(s: &Setup, starts: &[f64], signs: &[f64]) -> Self {
        let pick = |v: &[f64], i: usize| v[i.min(v.len() - 1)];
        let start: [f64; N] = std::array::from_fn(|i| pick(starts, i));
        let r_cum = start.map(|x| (s.a - x).max(0.0));
        let mut lanes = Self {
            sign: std::array::from_fn(|i| pick(signs, i)),
            y: start.map(|x| x.max(s.a)),
            f: [0.0; N],
            fp: [0.0; N],
            r_cum,
            l_cum: [0.0; N],
            acc_f: [0.0; N],
            acc_fp: [0.0; N],
            acc_r: r_cum,
            acc_l: [0.0; N],
        };
        s.cost.eval_into(&lanes.y, &mut lanes.f, &mut lanes.fp);
        lanes
    }

    /// Advance the free part over one step with standard normal `z`,
    /// reflecting at `a`. `u` supplies the bridge uniform in `(0, 1]` and is
    /// only called when some lane may have touched `a`.
    #[inline]
    fn step(&mut self, s: &Setup, g: &StepGeom, z: f64, u: impl FnOnce() -> f64) {
        let dz = g.sd * z;
        let mut y1 = [0.0; N];
        let mut near = f64::INFINITY;
        for i in 0..N {
            y1[i] = self.y[i] + g.mu_h + self.sign[i] * dz;
            // negative when the lane ends below a
            let p = (self.y[i] - s.a) * (y1[i] - s.a);
            near = if p < near { p } else { near };
        }
        let may_touch = if g.sd > 0.0 { 2.0 * near * g.inv_var < 60.0 } else { near < 0.0 };
        if may_touch {
            self.reflect(s, g, &mut y1, u);
        }
        let mut f1 = [0.0; N];
        let mut fp1 = [0.0; N];
        s.cost.eval_into(&y1, &mut f1, &mut fp1);
        let (w0, w1) = (g.half_h * g.d0, g.half_h * g.d1);
        for i in 0..N {
            self.acc_f[i] += w0 * self.f[i] + w1 * f1[i];
            self.acc_fp[i] += w0 * self.fp[i] + w1 * fp1[i];
        }
        self.y = y1;
        self.f = f1;
        self.fp = fp1;
    }

    #[cold]
    fn reflect(&mut self, s: &Setup, g: &StepGeom, y1: &mut [f64; N], u: impl FnOnce() -> f64) {
        let ln_u = if g.sd > 0.0 { u().ln() } else { 0.0 };
        for i in 0..N {
            let y0 = self.y[i];
            let (x0, x1) = (y0 - s.a, y1[i] - s.a);
            let push = if g.sd > 0.0 {
                // P(min < a | ends) = exp(-2 x0 x1 / (σ² h))
                if x1 < 0.0 || ln_u < -2.0 * x0 * x1 * g.inv_var {
                    let m = 0.5 * (y0 + y1[i] - ((y1[i] - y0).powi(2) - 2.0 * g.sd * g.sd * ln_u).sqrt());
                    (s.a - m).max(0.0)
                } else {
                    0.0
                }
            } else {
                (-x1).max(0.0)
            };
            if push > 0.0 {
                y1[i] += push;
                self.r_cum[i] += push;
                // the push happens somewhere inside the step; charge it at the midpoint
                self.acc_r[i] += push * (0.5 * (g.d0 + g.d1));
            }
        }
    }

    fn jump(&mut self, s: &Setup, size: f64, d: f64) {
        for i in 0..N {
            let y = self.y[i] - size;
            if y < s.a {
                self.r_cum[i] += s.a - y;
                self.acc_r[i] += d * (s.a - y);
            }
            self.y[i] = y.max(s.a);
        }
        s.cost.eval_into(&self.y, &mut self.f, &mut self.fp);
    }

    fn observe(&mut self, s: &Setup, d: f64) {
        for i in 0..N {
            if self.y[i] > s.b {
                let push = self.y[i] - s.b;
                self.l_cum[i] += push;
                self.acc_l[i] += d * push;
                self.y[i] = s.b;
            }
        }
        s.cost.eval_into(&self.y, &mut self.f, &mut self.fp);
    }

    fn totals(&self, n: usize) -> Vec<PathTotals> {
        (0..n)
            .map(|i| PathTotals {
                f: self.acc_f[i],
                f_prime: self.acc_fp[i],
                r: self.acc_r[i],
                l: self.acc_l[i],
                f_end: self.f[i],
                f_prime_end: self.fp[i],
                r_cum: self.r_cum[i],
                l_cum: self.l_cum[i],
            })
            .collect()
    }
}

/// Runs one sample for the given lanes, padded to a supported width.
fn run_lanes(s: &Setup, cfg: &PathConfig, index: u64, starts: &[f64], signs: &[f64]) -> Vec<PathTotals> {
    macro_rules! go {
        ($n:literal) => {{
            let mut lanes = Lanes::<$n>::new(s, starts, signs);
            run(s, cfg, index, &mut lanes, None);
            lanes.totals(starts.len())
        }};
    }
    match starts.len() {
        1 => go!(1),
        2 => go!(2),
        3..=4 => go!(4),
        5..=8 => go!(8),
        9..=16 => go!(16),
        n => {
            // larger sets in chunks; every chunk sees the same random inputs
            let mut out = Vec::with_capacity(n);
            for (st, sg) in starts.chunks(16).zip(signs.chunks(16)) {
                out.extend(run_lanes(s, cfg, index, st, sg));
            }
            out
        }
    }
}

/// Step length data shared by all paths of a sample; `d0`, `d1` are the
/// discount factors at the ends of the step.
struct StepGeom {
    mu_h: f64,
    sd: f64,
    inv_var: f64,
    half_h: f64,
    d0: f64,
    d1: f64,
}

impl StepGeom {
    fn new(s: &Setup, h: f64, d0: f64, d1: f64) -> Self {
        let sd = s.sigma * h.sqrt();
        Self { mu_h: s.mu * h, sd, inv_var: 1.0 / (sd * sd), half_h: 0.5 * h, d0, d1 }
    }
}

enum Event {
    Jump,
    Obs,
    End,
}

/// Runs one sample, sharing every random input across lanes. `record`
/// receives every step and event of lane 0.
fn run<const N: usize>(s: &Setup, cfg: &PathConfig, index: u64, lanes: &mut Lanes<N>, mut record: Option<&mut ControlledPath>) {
    let mut rng = Streams::new(cfg.seed, index);
    let mut t = 0.0;
    let mut disc = 1.0;
    let mut step_no: u64 = 0;
    let step_disc = (-s.q * cfg.dt).exp();
    let mut full = StepGeom::new(s, cfg.dt, 1.0, step_disc);
    let mut next_jump = Setup::next_exp(&mut rng.events, s.lambda);
    let mut next_obs = Setup::next_exp(&mut rng.events, s.r);
    if let Some(rec) = record.as_deref_mut() {
        rec.push(0.0, lanes);
    }
    loop {
        let (t_event, kind) = if next_jump <= next_obs && next_jump < cfg.horizon {
            (next_jump, Event::Jump)
        } else if next_obs < cfg.horizon {
            (next_obs, Event::Obs)
        } else {
            (cfg.horizon, Event::End)
        };
        // full grid steps up to the event, then a partial step
        while t < t_event {
            let partial;
            let g = if t + cfg.dt < t_event {
                full.d0 = disc;
                full.d1 = disc * step_disc;
                t += cfg.dt;
                &full
            } else {
                partial = StepGeom::new(s, t_event - t, disc, (-s.q * t_event).exp());
                t = t_event;
                &partial
            };
            let z: f64 = rng.gauss.sample(StandardNormal);
            lanes.step(s, g, z, || rng.bridge_uniform(step_no));
            step_no += 1;
            disc = g.d1;
            if let Some(rec) = record.as_deref_mut() {
                rec.push(t, lanes);
            }
        }
        match kind {
            Event::End => break,
            Event::Jump => {
                let size = s.jump_size(&mut rng.events);
                lanes.jump(s, size, disc);
                next_jump = t + Setup::next_exp(&mut rng.events, s.lambda);
            }
            Event::Obs => {
                lanes.observe(s, disc);
                if let Some(rec) = record.as_deref_mut() {
                    rec.obs_times.push(t);
                }
                next_obs = t + Setup::next_exp(&mut rng.events, s.r);
            }
        }
        if let Some(rec) = record.as_deref_mut() {
            rec.push(t, lanes);
        }
    }
}

/// One path (no antithetic partner) from the sub-streams of `index`, recorded
/// at every grid step and event.
pub fn simulate_path(
    model: &LevyModel,
    cost: &SimCost,
    a: f64,
    b: f64,
    config: &PathConfig,
    index: u64,
) -> Result<ControlledPath> {
    config.validate()?;
    let s = Setup::new(model, cost, a, b)?;
    let mut lanes = Lanes::<1>::new(&s, &[config.x0], &[1.0]);
    let mut rec = ControlledPath::default();
    run(&s, config, index, &mut lanes, Some(&mut rec));
    rec.totals = lanes.totals(1)[0];
    Ok(rec)
}

/// Per-sample totals for each start point in `x0s` (overriding
/// `config.x0`): `result[k][i]` holds the one or two (antithetic) paths of
/// sample `i` started at `x0s[k]`. Start points share random inputs.
pub fn simulate_totals(
    model: &LevyModel,
    cost: &SimCost,
    a: f64,
    b: f64,
    x0s: &[f64],
    config: &PathConfig,
    exec: Execution,
) -> Result<Vec<Vec<Vec<PathTotals>>>> {
    config.validate()?;
    if let Some(x) = x0s.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("start point {x} is not finite")));
    }
    let s = Setup::new(model, cost, a, b)?;
    let width = if config.antithetic { 2 } else { 1 };
    let starts: Vec<f64> = x0s.iter().flat_map(|&x| std::iter::repeat_n(x, width)).collect();
    let signs: Vec<f64> = (0..starts.len()).map(|i| if i % width == 1 { -1.0 } else { 1.0 }).collect();
    let per_sample = exec.map_range(config.n_samples(), |i| run_lanes(&s, config, i as u64, &starts, &signs));
    Ok((0..x0s.len())
        .map(|k| per_sample.iter().map(|row| row[k * width..(k + 1) * width].to_vec()).collect())
        .collect())
}

fn component(samples: &[f64], tail: f64) -> ComponentEstimate {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    ComponentEstimate { mean, se: (var / n as f64).sqrt(), n, horizon_tail_bound: tail }
}

/// Means and standard errors of the NPV and its parts at `config.x0`.
/// Antithetic pairs are averaged first and treated as one sample.
pub fn estimate_npv(
    model: &LevyModel,
    cost: &SimCost,
    a: f64,
    b: f64,
    config: &PathConfig,
    exec: Execution,
) -> Result<NpvEstimate> {
    Ok(estimate_npv_many(model, cost, a, b, &[config.x0], config, exec)?.remove(0))
}

/// [`estimate_npv`] at several start points in one pass with common random
/// numbers; each estimate on its own is the same as a separate run would give
/// with the same seed.
pub fn estimate_npv_many(
    model: &LevyModel,
    cost: &SimCost,
    a: f64,
    b: f64,
    x0s: &[f64],
    config: &PathConfig,
    exec: Execution,
) -> Result<Vec<NpvEstimate>> {
    let all = simulate_totals(model, cost, a, b, x0s, config, exec)?;
    let (c_u, c_d, q) = (cost.c_u, cost.c_d, cost.q);
    let tail_factor = (-q * config.horizon).exp() / q;
    Ok(all
        .iter()
        .zip(x0s)
        .map(|(samples, &x0)| {
            let avg = |g: &dyn Fn(&PathTotals) -> f64| -> Vec<f64> {
                samples.iter().map(|s| s.iter().map(g).sum::<f64>() / s.len() as f64).collect()
            };
            let lr = avg(&|p| p.lr(c_u, c_d));
            let f = avg(&|p| p.f);
            let fp = avg(&|p| p.f_prime);
            let total: Vec<f64> = lr.iter().zip(&f).map(|(x, y)| x + y).collect();
            let mean_of = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
            let t_f = tail_factor * mean_of(avg(&|p| p.f_end.abs()));
            let t_fp = tail_factor * mean_of(avg(&|p| p.f_prime_end.abs()));
            let t_lr = tail_factor * mean_of(avg(&|p| (c_u * p.r_cum + c_d * p.l_cum) / config.horizon));
            NpvEstimate {
                total: component(&total, t_f + t_lr),
                lr: component(&lr, t_lr),
                f: component(&f, t_f),
                fprime: component(&fp, t_fp),
                config: PathConfig { x0, ..*config },
                a,
                b,
            }
        })
        .collect())
}
