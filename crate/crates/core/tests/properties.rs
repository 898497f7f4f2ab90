//! Property tests for densities, activations, entropy estimators and the
//! variational checks.

use eafo_core::activation::{crrelu_eval, crrelu_grad_eps, inverse_branch};
use eafo_core::density::linspace;
use eafo_core::entropy::{entropy_mc, entropy_quadrature, entropy_spacing, pushforward, sample_density};
use eafo_core::quadrature::integrate;
use eafo_core::variational::{
    correction_term, el_residual, entropy_descent_check, numeric_invert, prop2_check, WafbcSpec, DEFAULT_INVERT_TOL,
};
use eafo_core::{Activation, ActivationKind, ActivationParams, Density1D, Interval, InverseRepr, Provenance};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mixture() -> Density1D {
    Density1D::gaussian_mixture(&[0.3, 0.7], &[-1.0, 1.5], &[0.5, 1.0]).unwrap()
}

fn bases() -> Vec<Density1D> {
    vec![
        Density1D::standard_normal(),
        Density1D::gaussian(1.0, 2.0).unwrap(),
        Density1D::uniform(0.0, 1.0).unwrap(),
        mixture(),
    ]
}

fn every_density() -> Vec<Density1D> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let samples: Vec<f64> = (0..200).map(|_| rng.random::<f64>() * 3.0 - 1.0).collect();
    let mut all = bases();
    all.push(Density1D::empirical_kde(&samples, None).unwrap());
    all.push(Density1D::truncated(Density1D::standard_normal(), 0.0, 8.0).unwrap());
    all
}

fn branch_for(p: &Density1D) -> Interval {
    let s = p.support();
    if s.is_bounded() {
        s
    } else {
        Interval::real_line()
    }
}

fn phi_affine(a: f64, b: f64) -> Activation {
    let spec = WafbcSpec::new(Density1D::standard_normal(), 1.0, 0.0).unwrap();
    Activation::wafbc(spec).rescaled(a, b, 1.0, 0.0)
}

fn unit_range_family() -> Vec<(&'static str, Activation)> {
    vec![
        ("sigmoid", Activation::Sigmoid),
        ("rescaled tanh", Activation::Tanh.rescaled(1.0, 0.0, 0.5, 0.5)),
        ("phi(2x)", phi_affine(2.0, 0.0)),
        ("phi(x/2)", phi_affine(0.5, 0.0)),
        ("phi(x+0.5)", phi_affine(1.0, 0.5)),
    ]
}

fn relative(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

// density

#[test]
fn every_density_integrates_to_one() {
    for p in every_density() {
        let s = p.support();
        let (lo, hi) = if s.is_bounded() {
            (s.lo, s.hi)
        } else {
            let e = p.effective_support();
            (e.lo - 1.0, e.hi + 1.0)
        };
        let mass = integrate(|x| p.pdf(x), lo, hi).unwrap().value;
        assert!((mass - 1.0).abs() < 1e-6, "{}: mass {mass}", p.describe());
    }
}

#[test]
fn cdf_inverts_quantile_on_percentiles() {
    for p in every_density() {
        for k in 1..=99 {
            let u = k as f64 / 100.0;
            let back = p.cdf(p.quantile(u));
            assert!((back - u).abs() < 1e-9, "{}: cdf(quantile({u})) = {back}", p.describe());
        }
    }
}

#[test]
fn pdf_vanishes_outside_support_and_cdf_is_monotone() {
    for p in every_density() {
        let s = p.support();
        if s.is_bounded() {
            assert_eq!(p.pdf(s.lo - 0.5), 0.0);
            assert_eq!(p.pdf(s.hi + 0.5), 0.0);
        }
        let e = p.effective_support();
        let grid = linspace(e.lo - 1.0, e.hi + 1.0, 2001);
        let mut last = 0.0;
        for x in grid {
            let c = p.cdf(x);
            assert!(p.pdf(x) >= 0.0);
            assert!((0.0..=1.0).contains(&c) && c >= last, "{}: cdf not monotone at {x}", p.describe());
            last = c;
        }
    }
}

#[test]
fn gaussian_analytic_entropy_matches_quadrature() {
    for (mu, sigma) in [(0.0, 1.0), (1.0, 2.0), (-3.0, 0.25)] {
        let p = Density1D::gaussian(mu, sigma).unwrap();
        let inv = InverseRepr::identity(Interval::real_line());
        let quad = entropy_quadrature(&p, &inv).unwrap().value;
        let exact = p.entropy_analytic().unwrap();
        assert!((quad - exact).abs() < 1e-4, "N({mu},{sigma}): {quad} vs {exact}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dpdf_matches_finite_differences(
        mu in -3.0..3.0f64,
        sigma in 0.3..3.0f64,
        w in 0.1..0.9f64,
        t in 0.02..0.98f64,
    ) {
        let densities = [
            Density1D::gaussian(mu, sigma).unwrap(),
            Density1D::gaussian_mixture(&[w, 1.0 - w], &[mu, mu + 2.0], &[sigma, 1.0]).unwrap(),
        ];
        for p in densities {
            let x = p.quantile(t);
            let h = 1e-5;
            let fd = (p.pdf(x + h) - p.pdf(x - h)) / (2.0 * h);
            let d = p.dpdf(x);
            // Near a mode the derivative crosses zero, so compare against the pdf scale.
            let floor = p.pdf(x) / sigma.max(1.0) * 1e-2;
            prop_assert!(relative(d, fd, floor) <= 1e-5, "{}: dpdf {d} vs fd {fd} at {x}", p.describe());
        }
    }

    #[test]
    fn quantile_inverts_cdf_in_the_interior(mu in -3.0..3.0f64, sigma in 0.3..3.0f64, t in 0.01..0.99f64) {
        let p = Density1D::gaussian(mu, sigma).unwrap();
        let x = mu + sigma * (4.0 * t - 2.0);
        prop_assert!((p.quantile(p.cdf(x)) - x).abs() < 1e-9);
        let u = Density1D::uniform(mu, mu + sigma).unwrap();
        let x = mu + sigma * t;
        prop_assert!((u.quantile(u.cdf(x)) - x).abs() < 1e-9);
    }
}

// activation

fn learnable_kinds() -> Vec<ActivationKind> {
    ActivationKind::ALL.iter().copied().filter(|k| k.has_learnable_param()).collect()
}

fn smooth_activations(param: f64) -> Vec<Activation> {
    ActivationKind::ALL
        .iter()
        .filter(|k| **k != ActivationKind::Wafbc)
        .map(|&k| {
            let mut params = ActivationParams::for_kind(k);
            params.epsilon = param - 1.0;
            params.alpha = param;
            Activation::from_kind(k, params).unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn dvalue_matches_finite_differences(x in -6.0..6.0f64, param in 0.2..1.8f64) {
        for a in smooth_activations(param) {
            if a.kinks().iter().any(|k| (x - k).abs() < 1e-4) {
                continue;
            }
            let h = 1e-6;
            let fd = (a.value(x + h) - a.value(x - h)) / (2.0 * h);
            let d = a.dvalue(x);
            prop_assert!(relative(d, fd, 1e-3) <= 1e-6, "{}: {d} vs {fd} at {x}", a.describe());
        }
    }

    #[test]
    fn dparam_matches_finite_differences(x in -6.0..6.0f64, param in 0.2..1.8f64) {
        for k in learnable_kinds() {
            let params = ActivationParams { epsilon: param - 1.0, alpha: param };
            let a = Activation::from_kind(k, params).unwrap();
            let theta = a.learnable_param().unwrap();
            let h = 1e-6;
            let fd = (a.with_learnable_param(theta + h).value(x) - a.with_learnable_param(theta - h).value(x)) / (2.0 * h);
            let d = a.dparam(x).unwrap();
            prop_assert!(relative(d, fd, 1e-3) <= 1e-6, "{}: {d} vs {fd} at {x}", a.describe());
        }
    }

    #[test]
    fn crrelu_stays_near_relu(x in -50.0..50.0f64, eps in -1.0..1.0f64) {
        let gap = (crrelu_eval(x, eps) - x.max(0.0)).abs();
        prop_assert!(gap <= eps.abs() * (-0.5f64).exp() + 1e-15);
    }

    #[test]
    fn crrelu_splits_into_relu_plus_correction(x in -20.0..20.0f64, eps in -1.0..1.0f64) {
        prop_assert_eq!(crrelu_eval(x, eps), x.max(0.0) + eps * crrelu_grad_eps(x, eps));
    }
}

#[test]
fn crrelu_correction_dies_in_the_tails() {
    for eps in [0.01, 0.5, -0.9] {
        assert!(crrelu_eval(-10.0, eps).abs() < 1e-20);
        assert!((crrelu_eval(10.0, eps) - 10.0).abs() < 1e-20);
    }
}

#[test]
fn crrelu_with_zero_epsilon_is_relu() {
    let c = Activation::CrRelu { epsilon: 0.0 };
    for x in linspace(-6.0, 6.0, 1201) {
        assert_eq!(c.value(x), Activation::Relu.value(x));
    }
}

fn invertible_branches() -> Vec<(Activation, Interval)> {
    let pos = Interval::non_negative();
    let line = Interval::real_line();
    vec![
        (Activation::Relu, pos),
        (Activation::CrRelu { epsilon: 0.01 }, pos),
        (Activation::Gelu, pos),
        (Activation::Silu, pos),
        (Activation::Mish, pos),
        (Activation::Elu { alpha: 1.0 }, line),
        (Activation::Celu { alpha: 0.7 }, line),
        (Activation::Prelu { alpha: 0.25 }, line),
        (Activation::Sigmoid, line),
        (Activation::Tanh, line),
        (phi_affine(1.0, 0.0), line),
    ]
}

#[test]
fn inverse_round_trips_on_every_branch() {
    for (a, branch) in invertible_branches() {
        let inv = inverse_branch(&a, branch).unwrap();
        let tol = match inv.provenance() {
            Provenance::Analytic => 1e-8,
            Provenance::Numeric => 1e-6,
        };
        for t in linspace(branch.lo.max(-8.0), branch.hi.min(8.0), 401) {
            let x = a.value(t);
            if !inv.domain().contains(x) {
                continue;
            }
            let back = inv.y(x);
            // rounding x to a float already moves the preimage by ulp(x)·y′(x)
            let conditioning = 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) * inv.dy(x);
            let allowed = tol * t.abs().max(1.0) + conditioning;
            assert!((back - t).abs() <= allowed, "{}: y(f({t})) = {back}", a.describe());
            if t > branch.lo {
                assert!(inv.dy(x) > 0.0, "{}: dy not positive at {x}", a.describe());
            }
        }
    }
}

// entropy

#[test]
fn estimators_agree_on_smooth_branches() {
    let n01 = Density1D::standard_normal();
    let half = Density1D::truncated(Density1D::standard_normal(), 0.0, f64::INFINITY).unwrap();
    let cases = [
        (n01.clone(), Activation::Identity, Interval::real_line()),
        (n01.clone(), Activation::Sigmoid, Interval::real_line()),
        (n01, Activation::Tanh, Interval::real_line()),
        (half, Activation::CrRelu { epsilon: 0.01 }, Interval::non_negative()),
    ];
    for (p, a, branch) in cases {
        let inv = inverse_branch(&a, branch).unwrap();
        let quad = entropy_quadrature(&p, &inv).unwrap().value;
        let mc = entropy_mc(&p, &a, 1_000_000, 7, 4).unwrap().value;
        assert!((quad - mc).abs() <= 0.01, "{}: quad {quad} vs mc {mc}", a.describe());
        let samples: Vec<f64> = sample_density(&p, 100_000, 11, 1).into_iter().map(|z| a.value(z)).collect();
        let sp = entropy_spacing(&samples, None).unwrap().value;
        assert!((quad - sp).abs() <= 0.05, "{}: quad {quad} vs spacing {sp}", a.describe());
    }
}

#[test]
fn affine_maps_shift_entropy_by_log_scale() {
    let p = Density1D::standard_normal();
    let h0 = entropy_quadrature(&p, &InverseRepr::identity(Interval::real_line())).unwrap().value;
    for a in [0.5, 2.0, 10.0] {
        let f = Activation::affine(a, 1.5);
        let inv = inverse_branch(&f, Interval::real_line()).unwrap();
        let h = entropy_quadrature(&p, &inv).unwrap().value;
        assert!((h - h0 - a.ln()).abs() < 1e-3, "a = {a}: {h} vs {}", h0 + a.ln());
    }
}

#[test]
fn spacing_estimate_ignores_shifts() {
    let samples = sample_density(&Density1D::standard_normal(), 10_000, 3, 1);
    let shifted: Vec<f64> = samples.iter().map(|x| x + 0.5).collect();
    let a = entropy_spacing(&samples, None).unwrap().value;
    let b = entropy_spacing(&shifted, None).unwrap().value;
    assert!((a - b).abs() < 1e-9);
}

#[test]
fn pushforward_integrates_to_one() {
    let n01 = Density1D::standard_normal();
    let half = Density1D::truncated(Density1D::standard_normal(), 0.0, f64::INFINITY).unwrap();
    let line = Interval::real_line();
    let cases = [
        (n01.clone(), Activation::Identity, line),
        (n01.clone(), Activation::affine(3.0, -1.0), line),
        (n01.clone(), Activation::Sigmoid, line),
        (n01.clone(), Activation::Tanh, line),
        (n01, Activation::Elu { alpha: 1.0 }, line),
        (mixture(), Activation::Sigmoid, line),
        (Density1D::uniform(0.0, 1.0).unwrap(), phi_affine(2.0, 0.0), Interval::new(0.0, 1.0).unwrap()),
        (half.clone(), Activation::CrRelu { epsilon: 0.01 }, Interval::non_negative()),
        (half, Activation::Gelu, Interval::non_negative()),
    ];
    for (p, a, branch) in cases {
        let q = pushforward(&p, &inverse_branch(&a, branch).unwrap()).unwrap();
        let s = q.support();
        let mass = integrate(|x| q.pdf(x), s.lo, s.hi).unwrap().value;
        assert!((mass - 1.0).abs() < 1e-5, "{} over {}: mass {mass}", a.describe(), p.describe());
    }
}

fn wafbc_unit(p: &Density1D) -> Activation {
    Activation::wafbc(WafbcSpec::new(p.clone(), 1.0, 0.0).unwrap())
}

#[test]
fn wafbc_pushforward_has_the_largest_entropy() {
    for p in bases() {
        let branch = branch_for(&p);
        let w = wafbc_unit(&p);
        let h_w = entropy_quadrature(&p, &inverse_branch(&w, branch).unwrap()).unwrap().value;
        assert!(h_w.abs() < 1e-3, "{}: WAFBC entropy {h_w}", p.describe());
        let mut family = unit_range_family();
        family.push(("phi", phi_affine(1.0, 0.0)));
        for (name, a) in family {
            let same = linspace(-3.0, 3.0, 61).iter().all(|&x| (a.value(x) - w.value(x)).abs() < 1e-12);
            let h = entropy_quadrature(&p, &inverse_branch(&a, branch).unwrap()).unwrap().value;
            if same {
                assert!((h - h_w).abs() < 1e-3, "{name} over {}", p.describe());
            } else {
                assert!(h < h_w - 1e-3, "{name} over {}: {h} vs {h_w}", p.describe());
            }
        }
    }
}

// variational

#[test]
fn wafbc_inverses_are_stationary() {
    for p in bases() {
        let inv = inverse_branch(&wafbc_unit(&p), branch_for(&p)).unwrap();
        for x in linspace(0.001, 0.999, 999) {
            let r = el_residual(&p, &inv, x).unwrap();
            assert!(r.abs() <= 1e-5, "{}: residual {r} at {x}", p.describe());
        }
        let field = correction_term(&p, &inv).unwrap();
        assert!(field.l2_norm_sq() <= 1e-5, "{}: ∫η² = {}", p.describe(), field.l2_norm_sq());
        let d = entropy_descent_check(&p, &inv, 1e-3).unwrap();
        assert!(d.slope_fd.abs() <= 1e-5, "{}: slope {}", p.describe(), d.slope_fd);
        assert!(d.first_order_consistent);
    }
}

#[test]
fn descent_slope_matches_correction_norm() {
    // Perturbations keep the ends of the branch fixed, so every case has η
    // vanishing at the boundary of the support.
    let n01 = Density1D::standard_normal();
    let cases = [
        (n01.clone(), Activation::Relu, Interval::non_negative()),
        (n01.clone(), Activation::Identity, Interval::real_line()),
        (n01.clone(), Activation::Tanh, Interval::real_line()),
        (n01.clone(), Activation::affine(2.0, 0.0), Interval::real_line()),
        (n01, Activation::Sigmoid, Interval::real_line()),
        (Density1D::gaussian(1.0, 2.0).unwrap(), Activation::Sigmoid, Interval::real_line()),
        (mixture(), Activation::Identity, Interval::real_line()),
        (mixture(), Activation::Sigmoid, Interval::real_line()),
    ];
    for (p, a, branch) in cases {
        let inv = inverse_branch(&a, branch).unwrap();
        let d = entropy_descent_check(&p, &inv, 1e-3)
            .unwrap_or_else(|e| panic!("{} over {}: {e}", a.describe(), p.describe()));
        assert!(d.first_order_consistent, "{} over {}: {d:?}", a.describe(), p.describe());
    }
}

#[test]
fn approximation_error_is_quadratic_in_epsilon() {
    for eps in [1e-3, 1e-2, 1e-1, 0.5] {
        assert!(prop2_check(eps, 0.0, 10.0, 100_001).unwrap().holds);
    }
    for eps in [0.001, 0.002, 0.005, 0.01] {
        let a = prop2_check(eps, 0.0, 10.0, 100_001).unwrap().max_error;
        let b = prop2_check(2.0 * eps, 0.0, 10.0, 100_001).unwrap().max_error;
        assert!((3.5..=4.5).contains(&(b / a)), "eps {eps}: ratio {}", b / a);
    }
}

#[test]
fn numeric_inversion_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let branches = [
        inverse_branch(&Activation::Tanh, Interval::real_line()).unwrap(),
        inverse_branch(&Activation::Silu, Interval::non_negative()).unwrap(),
        inverse_branch(&Activation::CrRelu { epsilon: 0.3 }, Interval::non_negative()).unwrap(),
        inverse_branch(&Activation::Celu { alpha: 0.5 }, Interval::real_line()).unwrap(),
    ];
    let tol = DEFAULT_INVERT_TOL;
    for _ in 0..1000 {
        let g = &branches[rng.random_range(0..branches.len())];
        let b = g.branch();
        let z = rng.random_range(b.lo.max(-4.0)..b.hi.min(4.0));
        let t = g.forward(z);
        let back = numeric_invert(g, g.y(t), tol).unwrap();
        assert!((back - t).abs() <= 2.0 * tol * t.abs().max(1.0), "t = {t}: {back}");
    }
}
