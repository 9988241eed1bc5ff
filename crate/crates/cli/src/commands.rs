use std::fs;
use std::path::{Path, PathBuf};

use poisson_barrier::config::{Format, RunConfig};
use poisson_barrier::exec::Execution;
use poisson_barrier::kernels::KernelContext;
use poisson_barrier::simulator::{estimate_npv_many, simulate_totals, ComponentEstimate};
use poisson_barrier::solver::{a_bracket, solve_or_fallback, sweep_r as solve_sweep};
use poisson_barrier::valuation::{linspace, BarrierPair, Valuation, VALUE_GRID_HEADER};
use poisson_barrier::verification::{qvi_audit, QVI_HEADER};
use poisson_barrier::Error;
use serde::Serialize;

use crate::svg::{Marker, MarkerKind, Plot, Series};

pub enum Outcome {
    Ok,
    Violation,
}

#[derive(Debug)]
pub enum Failure {
    /// Bad configuration, violated assumption or unusable output directory.
    Invalid(String),
    Numerical(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Invalid(m) | Failure::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Assumption(_) | Error::InvalidArgument(_) | Error::Config(_) => Failure::Invalid(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Invalid(format!("cannot write {}: {e}", path.display()))
}

type Result<T> = std::result::Result<T, Failure>;

pub struct Run {
    pub cfg: RunConfig,
    exec: Execution,
}

impl Run {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        fs::create_dir_all(&cfg.output.dir).map_err(|e| io_err(&cfg.output.dir, e))?;
        Ok(Self { exec: cfg.output.execution, cfg })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.cfg.output.dir.join(name)
    }

    fn wants(&self, f: Format) -> bool {
        self.cfg.output.formats.contains(&f)
    }

    /// Writes `rows` under `header` when CSV output is enabled.
    fn csv<R: AsRef<[String]>>(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<()> {
        if !self.wants(Format::Csv) {
            return Ok(());
        }
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
        w.write_record(header).map_err(|e| io_err(&path, e))?;
        for row in rows {
            w.write_record(row.as_ref()).map_err(|e| io_err(&path, e))?;
        }
        w.flush().map_err(|e| io_err(&path, e))
    }

    fn svg(&self, name: &str, plot: &Plot) -> Result<()> {
        if !self.wants(Format::Svg) {
            return Ok(());
        }
        let path = self.path(name);
        fs::write(&path, plot.render()).map_err(|e| io_err(&path, e))
    }

    fn solved(&self, ctx: &KernelContext) -> Result<BarrierPair> {
        Ok(solve_or_fallback(ctx, &self.cfg.solver)?)
    }
}

fn num(x: f64) -> String {
    x.to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

const BARRIER_HEADER: [&str; 7] = ["r", "a", "b", "gamma_big", "gamma_small", "vprime_a_residual", "vprime_b_residual"];

fn barrier_rows(rs: &[f64], pairs: &[BarrierPair]) -> Vec<Vec<String>> {
    rs.iter()
        .zip(pairs)
        .map(|(&r, p)| {
            let d = p.diagnostics;
            vec![
                num(r),
                num(p.a),
                num(p.b),
                opt(d.map(|d| d.gamma_big)),
                opt(d.map(|d| d.gamma_small)),
                opt(d.map(|d| d.vprime_a_residual)),
                opt(d.map(|d| d.vprime_b_residual)),
            ]
        })
        .collect()
}

/// First index where `xs` decreases by more than `slack`.
fn first_decrease(xs: &[f64], slack: f64) -> Option<usize> {
    xs.windows(2).position(|w| w[1] < w[0] - slack).map(|i| i + 1)
}

fn solve_all(run: &Run) -> Result<(Vec<f64>, Vec<BarrierPair>)> {
    let ctx = run.cfg.context()?;
    let rs = run.cfg.rates();
    let pairs = solve_sweep(&ctx, &rs, &run.cfg.solver, run.exec).into_iter().collect::<std::result::Result<Vec<_>, _>>()?;
    run.csv("barriers.csv", &BARRIER_HEADER, barrier_rows(&rs, &pairs))?;
    for (r, p) in rs.iter().zip(&pairs) {
        match p.diagnostics {
            Some(d) => println!(
                "r = {r}: a* = {:.10}, b* = {:.10}, |Γ| = {:.2e}, |γ| = {:.2e}, v'(a*) + C_U = {:.2e}, v'(b*) - C_D = {:.2e}",
                p.a,
                p.b,
                d.gamma_big.abs(),
                d.gamma_small.abs(),
                d.vprime_a_residual,
                d.vprime_b_residual
            ),
            None => println!("r = {r}: single barrier a = {:.10}, b = {}", p.a, p.b),
        }
    }
    if rs.len() > 1 {
        let ordered = rs.windows(2).all(|w| w[0] < w[1]);
        for (name, xs) in [("a*", pairs.iter().map(|p| p.a).collect::<Vec<_>>()), ("b*", pairs.iter().map(|p| p.b).collect())] {
            match (ordered, first_decrease(&xs, 0.0)) {
                (false, _) => println!("{name} trend: r list is not increasing, not assessed"),
                (true, None) => println!("{name} trend: non-decreasing in r"),
                (true, Some(i)) => println!("{name} trend: decreases between r = {} and r = {}", rs[i - 1], rs[i]),
            }
        }
    }
    Ok((rs, pairs))
}

pub fn solve(run: &Run) -> Result<Outcome> {
    let (rs, pairs) = solve_all(run)?;
    if rs.len() > 1 {
        run.svg("barriers.svg", &barrier_plot(&rs, &pairs))?;
    }
    Ok(Outcome::Ok)
}

fn barrier_plot(rs: &[f64], pairs: &[BarrierPair]) -> Plot {
    let pts = |g: fn(&BarrierPair) -> f64| rs.iter().zip(pairs).map(|(r, p)| (r.log10(), g(p))).collect();
    Plot {
        title: "Optimal barriers against r".into(),
        x_label: "log10 r".into(),
        y_label: "barrier".into(),
        series: vec![Series { label: "a*".into(), points: pts(|p| p.a) }, Series { label: "b*".into(), points: pts(|p| p.b) }],
        markers: Vec::new(),
    }
}

fn value_plot(title: &str, xs: &[f64], curves: &[(String, Vec<f64>, f64, f64, f64, f64)]) -> Plot {
    Plot {
        title: title.into(),
        x_label: "x".into(),
        y_label: "v(x)".into(),
        series: curves
            .iter()
            .map(|(label, v, ..)| Series { label: label.clone(), points: xs.iter().copied().zip(v.iter().copied()).collect() })
            .collect(),
        markers: curves
            .iter()
            .enumerate()
            .flat_map(|(i, &(_, _, a, va, b, vb))| {
                [
                    Marker { x: a, y: va, kind: MarkerKind::Lower, series: i },
                    Marker { x: b, y: vb, kind: MarkerKind::Upper, series: i },
                ]
            })
            .collect(),
    }
}

fn grid(spec: Option<[f64; 2]>, n: usize, a: f64, b: f64) -> Vec<f64> {
    let [lo, hi] = spec.unwrap_or([a - 5.0, if b.is_finite() { b + 10.0 } else { a + 20.0 }]);
    linspace(lo, hi, n)
}

pub fn sweep_r(run: &Run) -> Result<Outcome> {
    let (rs, pairs) = solve_all(run)?;
    let finite: Vec<(f64, &BarrierPair)> = rs.iter().copied().zip(&pairs).filter(|(_, p)| p.b.is_finite()).collect();
    if finite.is_empty() {
        println!("no finite upper barrier; value comparison skipped");
        run.svg("barriers.svg", &barrier_plot(&rs, &pairs))?;
        return Ok(Outcome::Ok);
    }
    let lo = finite.iter().map(|(_, p)| p.a).fold(f64::INFINITY, f64::min);
    let hi = finite.iter().map(|(_, p)| p.b).fold(f64::NEG_INFINITY, f64::max);
    let xs = grid(run.cfg.value.grid, run.cfg.value.n, lo, hi);
    let base = run.cfg.context()?;
    let mut curves = Vec::new();
    for &(r, p) in &finite {
        let ctx = base.with_r(r)?;
        let val = Valuation::new(&ctx, p.a, p.b)?;
        let v = run.exec.map(&xs, |&x| val.value(x));
        curves.push((format!("r = {r}"), v, p.a, val.value(p.a), p.b, val.value(p.b)));
    }
    let header: Vec<String> = std::iter::once("x".to_string()).chain(finite.iter().map(|(r, _)| format!("v_r{r}"))).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = xs.iter().enumerate().map(|(i, &x)| std::iter::once(num(x)).chain(curves.iter().map(|c| num(c.1[i]))).collect::<Vec<_>>());
    run.csv("sweep_values.csv", &header, rows)?;

    // Pointwise monotonicity in r, with a relative slack at the rounding level.
    let ordered = finite.windows(2).all(|w| w[0].0 < w[1].0);
    if ordered && finite.len() > 1 {
        let mut worst = (0.0f64, 0.0);
        for w in curves.windows(2) {
            for (i, (&v0, &v1)) in w[0].1.iter().zip(&w[1].1).enumerate() {
                let rise = (v1 - v0) / v0.abs().max(1.0);
                if rise > worst.0 {
                    worst = (rise, xs[i]);
                }
            }
        }
        if worst.0 <= 1e-8 {
            println!("value non-increasing in r at all {} nodes", xs.len());
        } else {
            println!("value increases with r somewhere: largest relative rise {:.3e} at x = {}", worst.0, worst.1);
        }
    }
    run.svg("barriers.svg", &barrier_plot(&rs, &pairs))?;
    run.svg("sweep_values.svg", &value_plot("Value functions across r", &xs, &curves))?;
    Ok(Outcome::Ok)
}

pub fn value(run: &Run) -> Result<Outcome> {
    let ctx = run.cfg.context()?;
    let vb = &run.cfg.value;
    let mut pairs: Vec<(String, f64, f64)> = Vec::new();
    let mut optimal = None;
    if vb.include_optimal {
        let p = run.solved(&ctx)?;
        optimal = Some(p);
        pairs.push(("optimal".into(), p.a, p.b));
        for &k in &vb.offsets_a {
            pairs.push((format!("a*{k:+}"), p.a + k, p.b));
        }
        for &k in &vb.offsets_b {
            pairs.push((format!("b*{k:+}"), p.a, p.b + k));
        }
    }
    pairs.extend(vb.pairs.iter().map(|&[a, b]| (format!("({a}, {b})"), a, b)));
    if pairs.is_empty() {
        return Err(Failure::Invalid("no pairs to evaluate: set value.pairs or value.include_optimal".into()));
    }
    if let Some((label, a, b)) = pairs.iter().find(|(_, a, b)| !(a < b)) {
        return Err(Failure::Invalid(format!("pair {label} = ({a}, {b}) must satisfy a < b")));
    }
    let (_, a0, b0) = pairs[0];
    let xs = grid(vb.grid, vb.n, a0, b0);

    let mut index = Vec::new();
    let mut curves = Vec::new();
    for (i, (label, a, b)) in pairs.iter().enumerate() {
        let val = Valuation::new(&ctx, *a, *b)?;
        let g = val.grid(&xs, vb.components, run.exec);
        let rows: Vec<Vec<String>> = g.rows().map(|r| r.iter().map(|c| opt(*c)).collect()).collect();
        run.csv(&format!("value_grid_{i}.csv"), &VALUE_GRID_HEADER, &rows)?;
        if i == 0 {
            run.csv("value_grid.csv", &VALUE_GRID_HEADER, &rows)?;
        }
        index.push(vec![i.to_string(), label.clone(), num(*a), num(*b)]);
        curves.push((label.clone(), g.v, *a, val.value(*a), *b, val.value(*b)));
    }
    run.csv("pairs.csv", &["index", "label", "a", "b"], index)?;

    if optimal.is_some() && curves.len() > 1 {
        let best = &curves[0].1;
        let mut worst = (f64::NEG_INFINITY, 0.0, String::new());
        for c in &curves[1..] {
            for (i, (&v0, &v)) in best.iter().zip(&c.1).enumerate() {
                let excess = (v0 - v) / v.abs().max(1.0);
                if excess > worst.0 {
                    worst = (excess, xs[i], c.0.clone());
                }
            }
        }
        if worst.0 <= 1e-6 {
            println!("optimal pair is below all {} other pairs at every node (largest relative excess {:.3e})", curves.len() - 1, worst.0);
        } else {
            println!("optimal pair exceeds {} at x = {} by a relative {:.3e}", worst.2, worst.1, worst.0);
        }
    }
    for (label, _, a, va, b, vb) in &curves {
        println!("{label}: a = {a}, b = {b}, v(a) = {va:.8}, v(b) = {vb:.8}");
    }
    run.svg("value_grid.svg", &value_plot("Value functions", &xs, &curves))?;
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct ClosedForm {
    total: f64,
    lr: f64,
    f: f64,
    fprime: f64,
}

#[derive(Serialize)]
struct PointSummary {
    x0: f64,
    total: ComponentEstimate,
    lr: ComponentEstimate,
    f: ComponentEstimate,
    fprime: ComponentEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form: Option<ClosedForm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    z: Option<ClosedForm>,
}

#[derive(Serialize)]
struct SimSummary {
    a: f64,
    b: f64,
    n_paths: usize,
    dt: f64,
    horizon: f64,
    seed: u64,
    antithetic: bool,
    points: Vec<PointSummary>,
}

fn pair_or_solved(run: &Run, ctx: &KernelContext, pair: Option<[f64; 2]>) -> Result<(f64, f64)> {
    match pair {
        Some([a, b]) => Ok((a, b)),
        None => {
            let p = run.solved(ctx)?;
            Ok((p.a, p.b))
        }
    }
}

pub fn simulate(run: &Run, per_path: bool) -> Result<Outcome> {
    let cfg = &run.cfg;
    let ctx = cfg.context()?;
    let (a, b) = pair_or_solved(run, &ctx, cfg.sim.pair)?;
    let x0s = if cfg.sim.x0.is_empty() {
        let mut v = vec![a, 0.5 * (a + b), b, b + 2.0];
        v.retain(|x| x.is_finite());
        v
    } else {
        cfg.sim.x0.clone()
    };
    let model = cfg.levy_model()?;
    let cost = cfg.sim_cost()?;
    let pc = cfg.path_config(x0s[0])?;
    let est = estimate_npv_many(&model, &cost, a, b, &x0s, &pc, run.exec)?;
    let val = if b.is_finite() { Valuation::new(&ctx, a, b).ok() } else { None };

    let mut points = Vec::new();
    println!("pair (a, b) = ({a}, {b}), {} paths, dt = {}, horizon = {:.4}", pc.n_paths, pc.dt, pc.horizon);
    for (e, &x) in est.iter().zip(&x0s) {
        let cf = val.as_ref().map(|v| ClosedForm { total: v.value(x), lr: v.value_lr(x), f: v.value_f(x), fprime: v.vfprime(x) });
        let z = cf.as_ref().map(|c| ClosedForm {
            total: (e.total.mean - c.total) / e.total.se,
            lr: (e.lr.mean - c.lr) / e.lr.se,
            f: (e.f.mean - c.f) / e.f.se,
            fprime: (e.fprime.mean - c.fprime) / e.fprime.se,
        });
        println!("x0 = {x}");
        for (name, c, exact, zz) in [
            ("v", e.total, cf.as_ref().map(|c| c.total), z.as_ref().map(|z| z.total)),
            ("v_lr", e.lr, cf.as_ref().map(|c| c.lr), z.as_ref().map(|z| z.lr)),
            ("v_f", e.f, cf.as_ref().map(|c| c.f), z.as_ref().map(|z| z.f)),
            ("v_fprime", e.fprime, cf.as_ref().map(|c| c.fprime), z.as_ref().map(|z| z.fprime)),
        ] {
            match (exact, zz) {
                (Some(ex), Some(zz)) => {
                    println!("  {name:9} {:>16.8} ± {:.3e}   closed form {ex:>16.8}   z = {zz:+.2}", c.mean, c.se)
                }
                _ => println!("  {name:9} {:>16.8} ± {:.3e}", c.mean, c.se),
            }
        }
        points.push(PointSummary { x0: x, total: e.total, lr: e.lr, f: e.f, fprime: e.fprime, closed_form: cf, z });
    }
    let summary = SimSummary {
        a,
        b,
        n_paths: pc.n_paths,
        dt: pc.dt,
        horizon: pc.horizon,
        seed: pc.seed,
        antithetic: pc.antithetic,
        points,
    };
    let path = run.path("sim_summary.json");
    let json = serde_json::to_string_pretty(&summary).map_err(|e| io_err(&path, e))?;
    fs::write(&path, json + "\n").map_err(|e| io_err(&path, e))?;

    if per_path {
        let totals = simulate_totals(&model, &cost, a, b, &x0s, &pc, run.exec)?;
        let mut rows = Vec::new();
        for (k, per_x) in totals.iter().enumerate() {
            for (i, sample) in per_x.iter().enumerate() {
                for (j, t) in sample.iter().enumerate() {
                    rows.push(vec![num(x0s[k]), i.to_string(), j.to_string(), num(t.f), num(t.f_prime), num(t.r), num(t.l)]);
                }
            }
        }
        run.csv("sim_paths.csv", &["x0", "sample", "antithetic", "f", "f_prime", "r", "l"], rows)?;
    }
    Ok(Outcome::Ok)
}

pub fn verify(run: &Run) -> Result<Outcome> {
    let ctx = run.cfg.context()?;
    let (a, b) = pair_or_solved(run, &ctx, run.cfg.verify.pair)?;
    if !b.is_finite() {
        return Err(Failure::Numerical(format!("cannot audit the single-barrier pair ({a}, {b}) in closed form")));
    }
    let xs = grid(run.cfg.verify.grid, run.cfg.verify.n, a, b);
    let report = qvi_audit(&ctx, a, b, &xs, run.exec)?;
    let rows = report.nodes.iter().map(|n| {
        vec![num(n.x), n.region.as_str().to_string(), num(n.residual), num(n.generator_plus_f), num(n.predicted), num(n.v_prime)]
    });
    run.csv("qvi.csv", &QVI_HEADER, rows)?;
    run.svg(
        "qvi.svg",
        &Plot {
            title: format!("QVI residual for (a, b) = ({a:.4}, {b:.4})"),
            x_label: "x".into(),
            y_label: "residual".into(),
            series: vec![Series { label: "residual".into(), points: report.nodes.iter().map(|n| (n.x, n.residual)).collect() }],
            markers: Vec::new(),
        },
    )?;
    println!(
        "pair ({a}, {b}): {} nodes, most negative residual {:.3e} (threshold {:.3e}), identity error {:.3e}, slope condition {}",
        report.nodes.len(),
        report.max_violation,
        report.threshold,
        report.max_identity_error,
        if report.slope_ok { "holds" } else { "fails" }
    );
    if report.passed() {
        println!("audit passed");
        Ok(Outcome::Ok)
    } else {
        for &i in report.flagged.iter().take(10) {
            let n = &report.nodes[i];
            println!("  violation at x = {} ({}): residual {:.3e}", n.x, n.region.as_str(), n.residual);
        }
        println!("audit failed: {} flagged nodes", report.flagged.len());
        Ok(Outcome::Violation)
    }
}

pub fn dump_scale(run: &Run) -> Result<Outcome> {
    let ctx = run.cfg.context()?;
    let sc = ctx.scale();
    let [lo, hi] = run.cfg.value.grid.unwrap_or([-2.0, 10.0]);
    let xs = linspace(lo, hi, run.cfg.value.n);
    let rows = run.exec.map(&xs, |&x| vec![num(x), num(sc.w(x)), num(sc.w_bar(x)), num(sc.z(x)), num(sc.z_phi(x))]);
    run.csv("scale.csv", &["x", "w", "w_bar", "z", "z_phi"], rows)?;
    println!("q = {}, r = {}, Φ(q) = {}, Φ(q + r) = {}", sc.q(), sc.r(), sc.phi_q(), sc.phi_qr());
    Ok(Outcome::Ok)
}

pub fn dump_gamma(run: &Run) -> Result<Outcome> {
    let ctx = run.cfg.context()?;
    let (lo, hi) = a_bracket(&ctx)?;
    let mut a_values = linspace(lo, hi, 5);
    if let Ok(p) = run.solved(&ctx) {
        a_values.push(p.a);
    }
    let n = run.cfg.value.n;
    let top = ctx.thresholds().a_bbar.map_or(hi + 20.0, |abb| abb + 10.0);
    let mut rows = Vec::new();
    for &a in &a_values {
        let bs = linspace(a + 1e-3, top.max(a + 1.0), n);
        let vals = run.exec.map(&bs, |&b| ctx.gamma_pair(a, b).unwrap_or((f64::NAN, f64::NAN)));
        for (&b, (g, s)) in bs.iter().zip(vals) {
            rows.push(vec![num(a), num(b), num(g), num(s)]);
        }
    }
    run.csv("gamma_curves.csv", &["a", "b", "gamma_big", "gamma_small"], rows)?;
    println!("a bracket [{lo}, {hi}], {} curves of {n} points", a_values.len());
    Ok(Outcome::Ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::from(Error::Assumption("C_U + C_D must be positive".into())).code(), 2);
        assert_eq!(Failure::from(Error::Config("x".into())).code(), 2);
        assert_eq!(Failure::from(Error::InvalidArgument("x".into())).code(), 2);
        assert_eq!(Failure::from(Error::Ceiling("x".into())).code(), 3);
        assert_eq!(Failure::from(Error::RootSearch("x".into())).code(), 3);
    }

    #[test]
    fn decrease_detection() {
        assert_eq!(first_decrease(&[1.0, 2.0, 2.0, 3.0], 0.0), None);
        assert_eq!(first_decrease(&[1.0, 2.0, 1.5], 0.0), Some(2));
        assert_eq!(first_decrease(&[1.0, 2.0, 1.5], 1.0), None);
    }
}
