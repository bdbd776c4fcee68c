mod common;

use std::f64::consts::PI;

use common::{random_field, rel};
use fraclog::model::energy::penalized_source;
use fraclog::model::{
    crossover, g1_prime, g2_prime, g_densities, limiting_energy, limiting_residual, nehari_projection,
    penalized_energy, penalized_residual, relative_residual, ModelParams, PenalizationRegion, PotentialSpec,
    RayParts, Shape, WellPolicy,
};
use fraclog::{Field, FractionalOrder, Grid};
use proptest::prelude::*;

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, depth)
}

fn g2_by_quadrature(t: f64) -> f64 {
    let integrand = |tau: f64| {
        if tau <= 0.0 {
            0.0
        } else {
            (4.0 * tau).max(-2.0 * tau * (1.0 + (tau * tau).ln()))
        }
    };
    let t0 = crossover();
    // Split at the kink so each piece is smooth.
    if t <= t0 {
        0.5 * simpson(&integrand, 0.0, t, 1e-15, 50)
    } else {
        0.5 * (simpson(&integrand, 0.0, t0, 1e-15, 50) + simpson(&integrand, t0, t, 1e-15, 50))
    }
}

#[test]
fn g2_closed_form_matches_quadrature() {
    let t0 = crossover();
    let at_crossover = g_densities(t0).1;
    assert!((at_crossover - 1.5 * (-3.0f64).exp()).abs() < 1e-15);
    assert!((at_crossover - g2_by_quadrature(t0)).abs() < 1e-10);
    for &t in &[1e-4, 0.01, 0.1, 0.2, 0.3, 0.7, 1.0, 2.5] {
        assert!((g_densities(t).1 - g2_by_quadrature(t)).abs() < 1e-10, "t = {t}");
    }
}

#[test]
fn g2_prime_continuous_and_nondecreasing_on_dense_sample() {
    let t0 = crossover();
    let mut ts: Vec<f64> = (0..20000).map(|i| -0.5 + 2.5 * i as f64 / 19999.0).collect();
    ts.extend([t0, t0 * (1.0 - 1e-12), t0 * (1.0 + 1e-12), 0.0]);
    ts.sort_by(f64::total_cmp);
    for w in ts.windows(2) {
        assert!(g2_prime(w[1]) >= g2_prime(w[0]) - 1e-15, "at {}", w[0]);
    }
    assert!((g2_prime(t0 * (1.0 - 1e-12)) - g2_prime(t0 * (1.0 + 1e-12))).abs() < 1e-11);
    assert!(g2_prime(1e-300).abs() < 1e-290);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn g2_midpoint_convex(a in -1.0f64..3.0, b in -1.0f64..3.0) {
        let mid = g_densities(0.5 * (a + b)).1;
        let avg = 0.5 * (g_densities(a).1 + g_densities(b).1);
        prop_assert!(mid <= avg + 1e-15);
        prop_assert!(g_densities(a).1 >= 0.0);
    }

    #[test]
    fn routing_matches_region(t in -2.0f64..3.0) {
        prop_assert_eq!(penalized_source(t, true), g1_prime(t));
        prop_assert_eq!(penalized_source(t, false), -g2_prime(t));
    }
}

fn gausson_model(s: f64) -> (ModelParams, Field) {
    let g = Grid::new(1, 20.0, 512).unwrap();
    let region = PenalizationRegion::new(
        Shape::Box { lo: vec![-4.0], hi: vec![4.0] },
        Shape::Box { lo: vec![-6.0], hi: vec![6.0] },
    )
    .unwrap();
    let p = ModelParams::with_policy(
        1.0,
        FractionalOrder::new(s).unwrap(),
        PotentialSpec::Constant(0.0),
        region,
        &g,
        WellPolicy::AllowFlat,
    )
    .unwrap();
    let u = Field::from_fn(&g, |x| (0.5 - 0.5 * x[0] * x[0]).exp()).unwrap();
    (p, u)
}

#[test]
fn gausson_energies_and_residual() {
    let (p, u) = gausson_model(1.0);
    let s = p.order();
    let exact = 0.5 * PI.sqrt() * 1f64.exp();
    let l0 = limiting_energy(&u, 0.0, s).unwrap();
    assert!(rel(l0, exact) < 1e-6);
    let j = penalized_energy(&u, &p).unwrap();
    assert!((j.j - l0).abs() < 1e-6);
    assert_eq!(j.j, j.phi + j.psi);
    let r = penalized_residual(&u, &p).unwrap();
    assert!(relative_residual(&r, &u) < 1e-6);
    assert!(limiting_residual(&u, 0.0, s).unwrap().norm() < 1e-6 * u.norm());
}

#[test]
fn energy_parts_add_exactly_on_random_fields() {
    let (p, _) = gausson_model(0.5);
    for seed in 0..20 {
        let u = random_field(p.grid(), seed).map(|v| v.abs()).unwrap();
        let e = penalized_energy(&u, &p).unwrap();
        assert_eq!(e.j, e.phi + e.psi);
        assert!(e.psi >= 0.0);
    }
}

/// `d/dt ℒ(t u) = ⟨ℒ'(t u), u⟩`, evaluated through the residual field.
fn ray_derivative(u: &Field, t: f64, lambda: f64, s: FractionalOrder) -> f64 {
    limiting_residual(&u.scaled(t).unwrap(), lambda, s).unwrap().dot(u).unwrap()
}

/// Golden-section bracket on `ℒ(t u)` over log t, then bisection on the
/// sign of the ray derivative.
fn line_search_maximizer(u: &Field, lambda: f64, s: FractionalOrder) -> f64 {
    let energy = |y: f64| limiting_energy(&u.scaled(y.exp()).unwrap(), lambda, s).unwrap();
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (1e-3f64.ln(), 1e3f64.ln());
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let (mut fc, mut fd) = (energy(c), energy(d));
    for _ in 0..40 {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = energy(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = energy(d);
        }
    }
    let (mut a, mut b) = (lo - 0.1, hi + 0.1);
    assert!(ray_derivative(u, a.exp(), lambda, s) > 0.0);
    assert!(ray_derivative(u, b.exp(), lambda, s) < 0.0);
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if ray_derivative(u, m.exp(), lambda, s) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    (0.5 * (a + b)).exp()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn nehari_projection_is_stationary_and_matches_line_search(
        seed in any::<u64>(),
        lambda in -0.9f64..2.0,
        s in 0.1f64..=1.0,
    ) {
        let g = Grid::new(1, 6.0, 64).unwrap();
        let u = random_field(&g, seed);
        let s = FractionalOrder::new(s).unwrap();
        let proj = nehari_projection(&u, lambda, s).unwrap();
        prop_assume!(proj.t_star > 1e-3 && proj.t_star < 1e3);
        let parts = RayParts::new(&proj.projected, lambda, s).unwrap();
        prop_assert!(parts.stationarity().abs() < 1e-10 * parts.scale());
        let oracle = line_search_maximizer(&u, lambda, s);
        prop_assert!(rel(proj.t_star, oracle) < 1e-8, "closed form {} vs search {}", proj.t_star, oracle);
    }
}

#[test]
fn ray_derivative_changes_sign_once() {
    let g = Grid::new(1, 6.0, 64).unwrap();
    let s = FractionalOrder::new(0.5).unwrap();
    for seed in 0..5 {
        let u = random_field(&g, seed);
        let t_star = nehari_projection(&u, 0.3, s).unwrap().t_star;
        let ts: Vec<f64> = (0..400).map(|i| t_star * (10f64).powf(-3.0 + 6.0 * i as f64 / 399.0)).collect();
        let signs: Vec<bool> = ts.iter().map(|&t| ray_derivative(&u, t, 0.3, s) > 0.0).collect();
        let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(changes, 1);
        assert!(signs[0] && !signs[signs.len() - 1]);
    }
}

#[test]
fn nehari_rejects_zero() {
    let g = Grid::new(1, 6.0, 64).unwrap();
    let s = FractionalOrder::new(0.5).unwrap();
    assert!(nehari_projection(&Field::zeros(&g), 0.0, s).is_err());
    assert_eq!(limiting_energy(&Field::zeros(&g), 0.0, s).unwrap(), 0.0);
    assert!(limiting_energy(&Field::zeros(&g), -1.0, s).is_err());
}
