mod common;

use common::{grid_for, random_field, rel};
use fraclog::spectral::{
    apply_fractional_power, forward, gagliardo_seminorm_sq, solve_shifted, weighted_spectral_energy,
};
use fraclog::{Field, FractionalOrder, Grid, Power};
use proptest::prelude::*;

fn order() -> impl Strategy<Value = FractionalOrder> {
    prop_oneof![Just(0.25), Just(0.5), Just(0.75), Just(1.0), 0.05f64..1.0]
        .prop_map(|s| FractionalOrder::new(s).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn plancherel(seed in any::<u64>(), dim in 1usize..=3) {
        let g = grid_for(dim);
        let u = random_field(&g, seed);
        let spectral = weighted_spectral_energy(&g, &forward(&u), |_| 1.0);
        prop_assert!(rel(spectral, u.norm_sq()) < 1e-12);
    }

    #[test]
    fn seminorm_matches_half_power(seed in any::<u64>(), dim in 1usize..=3, s in order()) {
        let g = grid_for(dim);
        let u = random_field(&g, seed);
        let direct = apply_fractional_power(&u, s, Power::Half).unwrap().norm_sq();
        prop_assert!(rel(gagliardo_seminorm_sq(&u, s).unwrap(), direct) < 1e-12);
    }

    #[test]
    fn full_power_is_half_power_twice(seed in any::<u64>(), dim in 1usize..=3, s in order()) {
        let g = grid_for(dim);
        let u = random_field(&g, seed);
        let full = apply_fractional_power(&u, s, Power::Full).unwrap();
        let half = apply_fractional_power(&u, s, Power::Half).unwrap();
        let twice = apply_fractional_power(&half, s, Power::Half).unwrap();
        prop_assert!(full.sub(&twice).unwrap().norm() <= 1e-11 * full.norm());
    }

    #[test]
    fn self_adjoint(a in any::<u64>(), b in any::<u64>(), dim in 1usize..=3, s in order()) {
        let g = grid_for(dim);
        let u = random_field(&g, a);
        let v = random_field(&g, b);
        let au = apply_fractional_power(&u, s, Power::Full).unwrap();
        let av = apply_fractional_power(&v, s, Power::Full).unwrap();
        let lhs = au.dot(&v).unwrap();
        let rhs = u.dot(&av).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-11 * au.norm() * v.norm());
    }

    #[test]
    fn resolvent_inverts_shifted_operator(
        seed in any::<u64>(),
        dim in 1usize..=3,
        s in order(),
        eps2s in 1e-3f64..10.0,
        c in 1e-2f64..100.0,
    ) {
        let g = grid_for(dim);
        let u = random_field(&g, seed);
        let w = solve_shifted(&u, s, eps2s, c).unwrap();
        let lap = apply_fractional_power(&w, s, Power::Full).unwrap();
        let back = lap.scaled(eps2s).unwrap().add(&w.scaled(c).unwrap()).unwrap();
        prop_assert!(back.sub(&u).unwrap().norm() <= 1e-11 * u.norm());
    }

    #[test]
    fn lp_norm_is_homogeneous(seed in any::<u64>(), p in 1.0f64..8.0, c in -1e3f64..1e3) {
        let g = grid_for(1);
        let u = random_field(&g, seed);
        let scaled = u.scaled(c).unwrap().lp_norm(p).unwrap();
        prop_assert!((scaled - c.abs() * u.lp_norm(p).unwrap()).abs() <= 1e-12 * scaled.max(1e-300));
    }
}

#[test]
fn constant_solves_to_constant_over_shift() {
    let g = Grid::new(2, 3.0, 16).unwrap();
    let u = Field::constant(&g, 1.5).unwrap();
    let s = FractionalOrder::new(0.3).unwrap();
    let w = solve_shifted(&u, s, 0.7, 4.0).unwrap();
    assert!(w.values().iter().all(|v| (v - 0.375).abs() < 1e-15));
    assert!(solve_shifted(&u, s, 0.7, 0.0).is_err());
    assert!(solve_shifted(&u, s, 0.0, 1.0).is_err());
}

#[test]
fn multipliers_on_plane_waves_in_every_dimension() {
    for dim in 1..=3 {
        let g = grid_for(dim);
        let k = std::f64::consts::PI / g.half_extent();
        // cos(k(x₁ + 2x₂ + ...)) has |k|² = k²(1 + 4 + ...).
        let weights: Vec<f64> = (1..=dim).map(|d| d as f64).collect();
        let kk = k * weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        let u = Field::from_fn(&g, |x| (k * x.iter().zip(&weights).map(|(a, w)| a * w).sum::<f64>()).cos()).unwrap();
        for s in [0.25, 0.5, 0.75, 1.0] {
            let order = FractionalOrder::new(s).unwrap();
            let out = apply_fractional_power(&u, order, Power::Full).unwrap();
            let want = u.scaled(kk.powf(2.0 * s)).unwrap();
            assert!(out.sub(&want).unwrap().norm() < 1e-12 * want.norm(), "dim {dim} s {s}");
        }
    }
}
