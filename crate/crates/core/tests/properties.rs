use poisson_barrier::cost::CostSpec;
use poisson_barrier::kernels::KernelContext;
use poisson_barrier::levy::{JumpPhase, LevyModel};
use poisson_barrier::scale::ScaleContext;
use poisson_barrier::solver::{solve, SolverSettings};
use poisson_barrier::simulator::{simulate_path, PathConfig, SimCost};
use poisson_barrier::valuation::{reliable_span, Valuation};
use poisson_barrier::Error;
use proptest::prelude::*;

fn model() -> impl Strategy<Value = LevyModel> {
    (-1.0..2.0f64, 0.2..2.0f64, 0.0..1.0f64, 0.5..3.0f64).prop_map(|(drift, sigma, lambda, eta)| {
        // small intensities stand in for the pure-diffusion case
        let jumps = if lambda < 0.05 { Vec::new() } else { vec![JumpPhase { lambda, eta }] };
        LevyModel::new(drift, sigma, jumps).unwrap()
    })
}

fn context() -> impl Strategy<Value = KernelContext> {
    (model(), 1.0..300.0f64, 1.0..300.0f64, 0.02..0.5f64, 0.05..5.0f64).prop_filter_map(
        "cost assumptions",
        |(m, c_u, c_d, q, r)| KernelContext::new(m, CostSpec::quadratic(c_u, c_d, q, r).ok()?).ok(),
    )
}

/// `None` when the pair is rejected as ill-conditioned, which must agree
/// with the documented limit.
fn valuation(ctx: &KernelContext, a: f64, b: f64) -> Result<Option<Valuation<'_>>, TestCaseError> {
    let expect_ok = b - a <= reliable_span(ctx);
    match Valuation::new(ctx, a, b) {
        Ok(v) if expect_ok => Ok(Some(v)),
        Err(Error::Domain(_)) if !expect_ok => Ok(None),
        other => Err(TestCaseError::fail(format!("({a}, {b}): {:?}", other.err()))),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn laplace_exponent_convex(m in model(), s in 0.0..10.0f64, t in 0.0..10.0f64) {
        let mid = m.laplace_exponent(0.5 * (s + t)).unwrap();
        let avg = 0.5 * (m.laplace_exponent(s).unwrap() + m.laplace_exponent(t).unwrap());
        prop_assert!(mid <= avg + 1e-12 * avg.abs().max(1.0));
    }

    #[test]
    fn phi_inverts_and_increases(m in model(), q in 0.01..5.0f64, dq in 0.01..5.0f64) {
        let p = m.phi(q).unwrap();
        let p2 = m.phi(q + dq).unwrap();
        prop_assert!(p > 0.0 && p2 > p);
        prop_assert!(rel(m.laplace_exponent(p).unwrap(), q) < 1e-10);
    }

    #[test]
    fn scale_function_shape(m in model(), q in 0.02..0.5f64, r in 0.05..5.0f64, x in 0.0..8.0f64, dx in 0.01..2.0f64) {
        let sc = ScaleContext::new(m, q, r).unwrap();
        let w = sc.scale_q();
        prop_assert_eq!(w.w(-dx), 0.0);
        prop_assert!(w.w(x) >= 0.0);
        prop_assert!(w.w(x + dx) > w.w(x));
        prop_assert!(w.w_prime(x) > 0.0);
        prop_assert!(sc.z_phi(x - 4.0) > 0.0);
        prop_assert!(sc.z(x) >= 1.0);
    }

    #[test]
    fn gamma_forms_agree(ctx in context(), a in -15.0..5.0f64, len in 0.05..8.0f64) {
        let b = a + len;
        let g = ctx.gamma_small(a, b).unwrap();
        let h = ctx.gamma_small_alt(a, b).unwrap();
        prop_assert!((g - h).abs() <= 1e-6 * ctx.gamma_scale().max(g.abs()), "{} vs {}", g, h);
    }

    #[test]
    fn value_is_affine_below_a(ctx in context(), a in -10.0..2.0f64, len in 0.1..6.0f64, d in 0.01..5.0f64) {
        let Some(v) = valuation(&ctx, a, a + len)? else { return Ok(()) };
        let expected = v.value(a) + ctx.cost().c_u() * d;
        prop_assert!(rel(v.value(a - d), expected) < 1e-9, "{} vs {}", v.value(a - d), expected);
    }

    #[test]
    fn value_splits_into_components(ctx in context(), a in -10.0..2.0f64, len in 0.1..6.0f64, t in -0.5..1.5f64) {
        let Some(v) = valuation(&ctx, a, a + len)? else { return Ok(()) };
        let x = a + t * len;
        if x > v.reliable_limit() {
            prop_assert!(v.value(x).is_nan());
            return Ok(());
        }
        let sum = v.value_lr(x) + v.value_f(x);
        prop_assert!(rel(v.value(x), sum) < 1e-6, "{} vs {}", v.value(x), sum);
    }

    #[test]
    fn value_prime_matches_difference_quotient(ctx in context(), a in -10.0..2.0f64, frac in 0.05..1.0f64, t in 0.1..0.9f64) {
        // finite differences amplify rounding by 1/h, so stay well conditioned
        let len = frac * (0.5 * reliable_span(&ctx)).min(6.0);
        let v = Valuation::new(&ctx, a, a + len).unwrap();
        let x = a + t * len;
        let h = 1e-5;
        let fd = (v.value(x + h) - v.value(x - h)) / (2.0 * h);
        let scale = v.value(x).abs().max(1.0);
        prop_assert!((fd - v.value_prime(x)).abs() < 1e-5 * scale, "{} vs {}", fd, v.value_prime(x));
    }

    #[test]
    fn simulated_path_stays_above_a(m in model(), seed in any::<u64>(), a in -3.0..0.0f64, len in 0.2..3.0f64) {
        let cost = SimCost::new(
            poisson_barrier::numerics::PiecewisePoly::polynomial(poisson_barrier::numerics::Poly::new(vec![0.0, 0.0, 1.0])),
            1.0, 1.0, 0.1, 1.0,
        ).unwrap();
        let cfg = PathConfig { x0: a + 0.5 * len, horizon: 2.0, dt: 1e-2, n_paths: 1, seed, antithetic: false };
        let p = simulate_path(&m, &cost, a, a + len, &cfg, 0).unwrap();
        prop_assert!(p.y.iter().all(|&y| y >= a - 1e-12));
        prop_assert!(p.r_cum.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(p.l_cum.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(p.totals.r >= 0.0 && p.totals.l >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solved_pairs_meet_the_smooth_fit_conditions(ctx in context()) {
        let Ok(p) = solve(&ctx, &SolverSettings::default()) else { return Ok(()) };
        let d = p.diagnostics.unwrap();
        let scale = ctx.gamma_scale();
        let (c_u, c_d) = (ctx.cost().c_u(), ctx.cost().c_d());
        prop_assert!(p.a < p.b);
        prop_assert!(d.gamma_big.abs() < 1e-6 * scale && d.gamma_small.abs() < 1e-6 * scale, "{:?}", d);
        prop_assert!(d.vprime_a_residual.abs() < 1e-5 * c_u.max(1.0), "{:?}", d);
        prop_assert!(d.vprime_b_residual.abs() < 1e-5 * c_d.max(1.0), "{:?}", d);
    }
}
