//! Acceptance suite. Runs every criterion in sequence at its stated
//! tolerance and runtime budget, printing one PASS/FAIL line each, and exits
//! non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use poisson_barrier::cost::CostSpec;
use poisson_barrier::exec::Execution;
use poisson_barrier::kernels::KernelContext;
use poisson_barrier::levy::{JumpPhase, LevyModel};
use poisson_barrier::numerics::{integrate, integrate_to_infinity, PiecewisePoly, Poly, QuadratureSettings};
use poisson_barrier::simulator::{estimate_npv_many, PathConfig};
use poisson_barrier::solver::{solve, solve_or_fallback, SolverSettings};
use poisson_barrier::valuation::{default_grid, linspace, Valuation};
use poisson_barrier::verification::{qvi_audit, Region};

type Check = Result<String, String>;

fn model() -> LevyModel {
    LevyModel::new(1.0, 1.0, vec![JumpPhase { lambda: 0.2, eta: 1.0 }]).unwrap()
}

fn ctx(r: f64) -> KernelContext {
    KernelContext::new(model(), CostSpec::quadratic(200.0, 200.0, 0.05, r).unwrap()).unwrap()
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok { Ok(()) } else { Err(msg) }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn c1_transform() -> Check {
    let c = ctx(0.1);
    let s = c.scale();
    let m = model();
    let settings = QuadratureSettings { max_subdivisions: 20_000, ..Default::default() };
    let mut worst: f64 = 0.0;
    for d in [0.5, 1.0, 2.0] {
        let theta = s.phi_q() + d;
        let quad = integrate_to_infinity(|x| (-theta * x).exp() * s.w(x), 0.0, &settings);
        let exact = 1.0 / (m.laplace_exponent(theta).unwrap() - 0.05);
        worst = worst.max(rel(quad.value, exact));
    }
    ensure(worst < 1e-6, format!("max rel err {worst:.2e}"))?;
    Ok(format!("max rel err {worst:.2e}"))
}

fn c2_roots() -> Check {
    let m = model();
    let mut worst: f64 = 0.0;
    for q in [0.05, 0.15] {
        let rs = m.root_set(q).map_err(|e| e.to_string())?;
        worst = worst.max((m.laplace_exponent(rs.phi).unwrap() - q).abs());
        for xi in &rs.neg_roots {
            worst = worst.max((m.laplace_exponent(-xi).unwrap() - q).abs());
        }
    }
    ensure(worst < 1e-10, format!("max residual {worst:.2e}"))?;
    Ok(format!("max residual {worst:.2e}"))
}

fn c3_z_integral() -> Check {
    let c = ctx(0.1);
    let s = c.scale();
    let settings = QuadratureSettings { abs_tol: 0.0, rel_tol: 1e-14, max_subdivisions: 20_000 };
    let mut worst: f64 = 0.0;
    for (a, b) in [(-2.0, 3.0), (-6.0, 0.0), (0.0, 10.0)] {
        let inner = integrate(|y| s.z_phi(b - y), a, b, &settings).value;
        let tail = integrate_to_infinity(|y| s.z_phi(b - y), b, &settings).value;
        worst = worst.max(rel(inner + tail, s.z_phi_integral(a, b)));
    }
    ensure(worst < 1e-8, format!("max rel err {worst:.2e}"))?;
    Ok(format!("max rel err {worst:.2e}"))
}

fn c4_decomposition() -> Check {
    let c = ctx(0.1);
    let v = Valuation::new(&c, -6.0, 0.0).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for x in linspace(-10.0, 6.0, 20) {
        worst = worst.max(rel(v.value_lr(x) + v.value_f(x), v.value(x)));
    }
    ensure(worst < 1e-6, format!("max rel err {worst:.2e}"))?;
    Ok(format!("max rel err {worst:.2e}"))
}

fn c5_solved_pair() -> Check {
    let c = ctx(0.1);
    let p = solve(&c, &SolverSettings::default()).map_err(|e| e.to_string())?;
    let scale = c.gamma_scale();
    let (g, gs) = c.gamma_pair(p.a, p.b).map_err(|e| e.to_string())?;
    ensure(g.abs() < 1e-8 * scale && gs.abs() < 1e-8 * scale, format!("Γ = {g:.2e}, γ = {gs:.2e}"))?;
    let v = Valuation::new(&c, p.a, p.b).map_err(|e| e.to_string())?;
    let (lm, lp) = v.value_prime_at_a();
    let vb = v.value_prime(p.b);
    let dv = (lm + 200.0).abs().max((lp + 200.0).abs()).max((vb - 200.0).abs());
    ensure(dv < 1e-6, format!("v' residual {dv:.2e}"))?;
    let (sm, sp) = v.value_second_at_a().map_err(|e| e.to_string())?;
    ensure((sp - sm).abs() < 1e-6, format!("v'' gap at a* {:.2e}", (sp - sm).abs()))?;
    let (fa, fb) = v.vfprime_at_barriers();
    let df = (fa + 200.0).abs().max((fb - 200.0).abs());
    ensure(df < 1e-6, format!("v^f' residual {df:.2e}"))?;
    Ok(format!(
        "a* = {:.6}, b* = {:.6}, |Γ| = {:.1e}, |γ| = {:.1e} (scale {scale:.1}), v' {dv:.1e}, v'' gap {:.1e}, v^f' {df:.1e}",
        p.a,
        p.b,
        g.abs(),
        gs.abs(),
        (sp - sm).abs()
    ))
}

fn c6_envelope() -> Check {
    let c = ctx(0.1);
    let p = solve(&c, &SolverSettings::default()).map_err(|e| e.to_string())?;
    let scale = c.gamma_scale();
    let grid = default_grid(p.a, p.b);
    let best = Valuation::new(&c, p.a, p.b).map_err(|e| e.to_string())?;
    let v_star: Vec<f64> = grid.iter().map(|&x| best.value(x)).collect();
    let mut pairs = Vec::new();
    for k in 1..=5 {
        let k = k as f64;
        pairs.extend([(p.a + k, p.b), (p.a - k, p.b), (p.a, p.b + k), (p.a, p.b - k)]);
    }
    let mut worst = f64::NEG_INFINITY;
    for (a, b) in &pairs {
        let v = Valuation::new(&c, *a, *b).map_err(|e| e.to_string())?;
        for (x, vs) in grid.iter().zip(&v_star) {
            worst = worst.max(vs - v.value(*x));
        }
    }
    ensure(worst <= 1e-6 * scale, format!("max v* - v = {worst:.2e} (scale {scale:.1})"))?;
    Ok(format!("{} pairs, max v* - v = {worst:.2e}", pairs.len()))
}

fn c7_monte_carlo() -> Check {
    let c = ctx(0.1);
    let p = solve(&c, &SolverSettings::default()).map_err(|e| e.to_string())?;
    let v = Valuation::new(&c, p.a, p.b).map_err(|e| e.to_string())?;
    let xs = [p.a, 0.5 * (p.a + p.b), p.b, p.b + 2.0];
    let cfg = PathConfig::new(xs[0], 0.05);
    let est = estimate_npv_many(&model(), &c.cost().into(), p.a, p.b, &xs, &cfg, Execution::Parallel)
        .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut fails = Vec::new();
    for (e, &x) in est.iter().zip(&xs) {
        for (name, mc, exact) in [
            ("v", e.total, v.value(x)),
            ("v_lr", e.lr, v.value_lr(x)),
            ("v_f", e.f, v.value_f(x)),
            ("v_fprime", e.fprime, v.vfprime(x)),
        ] {
            let z = (mc.mean - exact) / mc.se;
            worst = worst.max(z.abs());
            if z.abs() > 3.0 {
                fails.push(format!("{name}({x:.3}): z = {z:.2}"));
            }
        }
    }
    ensure(fails.is_empty(), fails.join(", "))?;
    Ok(format!("{} paths per point, max |z| = {worst:.2}", cfg.n_paths))
}

fn c8_qvi() -> Check {
    let c = ctx(0.1);
    let p = solve(&c, &SolverSettings::default()).map_err(|e| e.to_string())?;
    let grid = default_grid(p.a, p.b);
    let rep = qvi_audit(&c, p.a, p.b, &grid, Execution::Parallel).map_err(|e| e.to_string())?;
    ensure(rep.flagged.is_empty(), format!("{} flagged, min residual {:.2e}", rep.flagged.len(), rep.max_violation))?;
    ensure(rep.slope_ok, "v' < -C_U somewhere".into())?;
    let cost = c.cost();
    let (mut e_in, mut e_below, mut e_above): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for n in &rep.nodes {
        match n.region {
            Region::Interior => e_in = e_in.max(n.generator_plus_f.abs()),
            Region::BelowA => {
                e_below = e_below.max((n.residual - (cost.f_tilde(n.x) - cost.f_tilde(p.a))).abs())
            }
            Region::AboveB => {
                e_above = e_above.max((n.generator_plus_f - n.predicted).abs() / n.predicted.abs().max(1.0))
            }
        }
    }
    ensure(e_in < 1e-4, format!("interior |(L-q)v + f| = {e_in:.2e}"))?;
    ensure(e_below < 1e-4, format!("below-a* error {e_below:.2e}"))?;
    ensure(e_above < 1e-4, format!("above-b* rel error {e_above:.2e}"))?;
    Ok(format!(
        "{} nodes, min residual {:.2e} (threshold -{:.1e}), interior {e_in:.1e}, below {e_below:.1e}, above {e_above:.1e}",
        rep.nodes.len(),
        rep.max_violation,
        rep.threshold
    ))
}

fn c9_sweep() -> Check {
    let settings = SolverSettings::default();
    let rs = [0.1, 1.0, 10.0, 100.0, 900.0];
    let ctxs: Vec<KernelContext> = rs.iter().map(|&r| ctx(r)).collect();
    let pairs = ctxs
        .iter()
        .map(|c| solve(c, &settings).map_err(|e| format!("r = {}: {e}", c.r())))
        .collect::<Result<Vec<_>, _>>()?;
    let lo = pairs.iter().map(|p| p.a).fold(f64::INFINITY, f64::min) - 5.0;
    let hi = pairs.iter().map(|p| p.b).fold(f64::NEG_INFINITY, f64::max) + 10.0;
    let grid = linspace(lo, hi, 401);
    let values: Vec<Vec<f64>> = ctxs[..4]
        .iter()
        .zip(&pairs)
        .map(|(c, p)| {
            let v = Valuation::new(c, p.a, p.b).unwrap();
            grid.iter().map(|&x| v.value(x)).collect()
        })
        .collect();
    let mut worst = f64::NEG_INFINITY;
    for w in values.windows(2) {
        for (v0, v1) in w[0].iter().zip(&w[1]) {
            worst = worst.max(v1 - v0);
        }
    }
    ensure(worst <= 1e-8, format!("v increased with r by {worst:.2e}"))?;
    let (p100, p900) = (&pairs[3], &pairs[4]);
    let d = (p100.a - p900.a).abs().max((p100.b - p900.b).abs());
    ensure(d < 0.05, format!("pairs at r = 100 and 900 differ by {d:.3}"))?;
    let summary: Vec<String> = rs.iter().zip(&pairs).map(|(r, p)| format!("r={r}: ({:.3}, {:.3})", p.a, p.b)).collect();
    Ok(format!("max increase {worst:.1e}, |Δ(100, 900)| = {d:.4}; {}", summary.join(" ")))
}

fn c10_fallback() -> Check {
    let f = PiecewisePoly::new(vec![1000.0], vec![Poly::new(vec![0.0, 0.0, 1.0]), Poly::linear(-1e6, 2000.0)])
        .map_err(|e| e.to_string())?;
    let cost = CostSpec::new(f, 200.0, 1e6, 0.05, 0.1).map_err(|e| e.to_string())?;
    let c = KernelContext::new(model(), cost).map_err(|e| e.to_string())?;
    ensure(c.thresholds().a_bbar.is_none(), "ā̄ is finite".into())?;
    let p = solve_or_fallback(&c, &SolverSettings::default()).map_err(|e| e.to_string())?;
    let exact = -5.0 - 1.0 / c.scale().phi_q();
    ensure(p.is_single_barrier(), "not routed to the single-barrier strategy".into())?;
    let err = (p.a - exact).abs();
    ensure(err < 1e-8, format!("a̲2 = {}, closed form {exact}, err {err:.2e}", p.a))?;
    Ok(format!("(a̲2, ∞) with a̲2 = {:.10}, err {err:.1e}", p.a))
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Check); 10] = [
        ("1 scale-function transform", Duration::from_secs(1), c1_transform),
        ("2 root residuals", Duration::from_secs(1), c2_roots),
        ("3 Z-integral identity", Duration::from_secs(5), c3_z_integral),
        ("4 decomposition v = v_LR + v_f", Duration::from_secs(10), c4_decomposition),
        ("5 solved-pair conditions", Duration::from_secs(30), c5_solved_pair),
        ("6 optimality envelope", Duration::from_secs(120), c6_envelope),
        ("7 Monte-Carlo agreement", Duration::from_secs(300), c7_monte_carlo),
        ("8 QVI audit", Duration::from_secs(120), c8_qvi),
        ("9 r-sweep monotonicity", Duration::from_secs(180), c9_sweep),
        ("10 single-barrier fallback", Duration::from_secs(1), c10_fallback),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let id = name.split(' ').next().unwrap();
        if !only.is_empty() && !only.iter().any(|o| o == id) {
            continue;
        }
        let start = Instant::now();
        let out = check();
        let took = start.elapsed();
        let (ok, detail) = match out {
            Ok(d) if took <= budget => (true, d),
            Ok(d) => (false, format!("{d}; over budget")),
            Err(e) => (false, e),
        };
        failed += usize::from(!ok);
        println!(
            "{} criterion {name}: {detail} [{:.2}s / {}s]",
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 { ExitCode::FAILURE } else { ExitCode::SUCCESS }
}
