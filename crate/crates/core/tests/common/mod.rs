#![allow(dead_code)]

use fraclog::inequalities::{sample_test_field, FieldKind, TestFieldSpec};
use fraclog::{Field, Grid};

pub fn grid_for(dim: usize) -> Grid {
    match dim {
        1 => Grid::new(1, 6.0, 128).unwrap(),
        2 => Grid::new(2, 5.0, 32).unwrap(),
        _ => Grid::new(3, 4.0, 16).unwrap(),
    }
}

/// Seeded random trigonometric polynomial with a few low modes.
pub fn random_field(grid: &Grid, seed: u64) -> Field {
    let spec = TestFieldSpec {
        seed,
        kind: FieldKind::BandLimitedRandom { max_mode: 4, decay: 1.0 },
        normalize: false,
    };
    sample_test_field(&spec, grid).unwrap()
}

/// Seeded localized field, normalized.
pub fn random_bumps(grid: &Grid, seed: u64) -> Field {
    sample_test_field(&TestFieldSpec::normalized(seed, FieldKind::BumpMixture { count: 3 }), grid).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
