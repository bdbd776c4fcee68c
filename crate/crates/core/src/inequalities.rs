//! Seeded numerical checks of the fractional Gagliardo–Nirenberg,
//! logarithmic Sobolev and Hardy inequalities.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{FractionalOrder, Grid};
use crate::model::nonlinearity::entropy_density;
use crate::spectral::{forward, gagliardo_seminorm_sq, trig_interpolate};

/// Log-Sobolev slack below `−SLACK_FLOOR·‖u‖₂²` counts as a violation.
pub const SLACK_FLOOR: f64 = 1e-10;

/// Levels of 3^N subdivision used for the Hardy origin cell.
pub const HARDY_ORIGIN_LEVELS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    /// Random trigonometric polynomial with `|j|_∞ ≤ max_mode`, mode
    /// amplitudes damped by `(1 + |j|)^{-decay}`.
    BandLimitedRandom { max_mode: usize, decay: f64 },
    /// `exp(−|x − center|² / (2 width²))`.
    GaussianBump { center: Vec<f64>, width: f64 },
    /// Sum of `count` Gaussian bumps with seed-drawn centers in
    /// `[−L/2, L/2]^N`, widths in `[0.05L, 0.15L]` and amplitudes in `[−1, 1]`.
    BumpMixture { count: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFieldSpec {
    pub seed: u64,
    pub kind: FieldKind,
    /// Scale to `‖u‖₂ = 1`.
    pub normalize: bool,
}

impl TestFieldSpec {
    pub fn normalized(seed: u64, kind: FieldKind) -> Self {
        Self {
            seed,
            kind,
            normalize: true,
        }
    }
}

/// Lattice points of `[−m, m]^N` whose first nonzero entry is positive.
fn half_lattice(dim: usize, m: i64) -> Vec<Vec<i64>> {
    let side = (2 * m + 1) as usize;
    let total = side.pow(dim as u32);
    let mut out = Vec::new();
    for flat in 0..total {
        let mut rest = flat;
        let mut j = vec![0i64; dim];
        for d in (0..dim).rev() {
            j[d] = (rest % side) as i64 - m;
            rest /= side;
        }
        if j.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0) {
            out.push(j);
        }
    }
    out
}

pub fn sample_test_field(spec: &TestFieldSpec, grid: &Grid) -> Result<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dim = grid.dim();
    let l = grid.half_extent();
    let field = match &spec.kind {
        FieldKind::BandLimitedRandom { max_mode, decay } => {
            if *max_mode >= grid.points() / 2 {
                return Err(Error::InvalidArgument(format!(
                    "band limit {max_mode} reaches the Nyquist index {}",
                    grid.points() / 2
                )));
            }
            if !decay.is_finite() {
                return Err(Error::InvalidArgument("band decay must be finite".into()));
            }
            let modes = half_lattice(dim, *max_mode as i64);
            let mean: f64 = rng.gen_range(-1.0..1.0);
            let coeffs: Vec<(f64, f64, f64)> = modes
                .iter()
                .map(|j| {
                    let norm = j.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
                    let damp = (1.0 + norm).powf(-decay);
                    (damp, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                })
                .collect();
            // e^{i c π (x + L)/L} per axis, mode index c and node index.
            let m = *max_mode as i64;
            let table: Vec<Vec<Complex64>> = (-m..=m)
                .map(|c| {
                    (0..grid.points())
                        .map(|k| Complex64::from_polar(1.0, c as f64 * PI / l * (grid.axis_coordinate(k) + l)))
                        .collect()
                })
                .collect();
            let mut values = vec![mean; grid.node_count()];
            for (flat, v) in values.iter_mut().enumerate() {
                let idx = grid.unravel(flat);
                for (j, &(damp, a, b)) in modes.iter().zip(&coeffs) {
                    let z = j
                        .iter()
                        .zip(&idx)
                        .fold(Complex64::new(1.0, 0.0), |z, (&c, &k)| z * table[(c + m) as usize][k]);
                    *v += damp * (a * z.re + b * z.im);
                }
            }
            Field::new(grid, values)?
        }
        FieldKind::GaussianBump { center, width } => {
            if center.len() != dim {
                return Err(Error::InvalidArgument("bump center dimension differs from the grid".into()));
            }
            if !(*width > 0.0) {
                return Err(Error::InvalidArgument("bump width must be positive".into()));
            }
            bump_sum(grid, &[(center.clone(), *width, 1.0)])?
        }
        FieldKind::BumpMixture { count } => {
            if *count == 0 {
                return Err(Error::InvalidArgument("bump mixture needs at least one bump".into()));
            }
            let bumps: Vec<(Vec<f64>, f64, f64)> = (0..*count)
                .map(|_| {
                    let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.5 * l..0.5 * l)).collect();
                    let w = rng.gen_range(0.05 * l..0.15 * l);
                    let a = rng.gen_range(-1.0..1.0);
                    (c, w, a)
                })
                .collect();
            bump_sum(grid, &bumps)?
        }
    };
    if spec.normalize {
        let n = field.norm();
        if n == 0.0 {
            return Err(Error::InvalidArgument("generated field vanishes; cannot normalize".into()));
        }
        field.scaled(1.0 / n)
    } else {
        Ok(field)
    }
}

fn bump_sum(grid: &Grid, bumps: &[(Vec<f64>, f64, f64)]) -> Result<Field> {
    Field::from_fn(grid, |x| {
        bumps
            .iter()
            .map(|(c, w, a)| {
                let r = grid.periodic_distance(x, c);
                a * (-r * r / (2.0 * w * w)).exp()
            })
            .sum()
    })
}

fn require_nonzero(u: &Field) -> Result<()> {
    if u.is_zero() {
        Err(Error::InvalidArgument("inequality checks need u ≠ 0".into()))
    } else {
        Ok(())
    }
}

/// `2N/(N − 2s)`, or `None` when `N ≤ 2s`.
pub fn critical_exponent(dim: usize, s: FractionalOrder) -> Option<f64> {
    let n = dim as f64;
    let two_s = 2.0 * s.value();
    (n > two_s).then(|| 2.0 * n / (n - two_s))
}

/// Interpolation exponent `θ = N(1/2 − 1/q)/s`.
pub fn gn_theta(dim: usize, q: f64, s: FractionalOrder) -> f64 {
    dim as f64 * (0.5 - 1.0 / q) / s.value()
}

/// `‖u‖_q / (‖(−Δ)^{s/2}u‖₂^θ ‖u‖₂^{1−θ})`.
pub fn check_gagliardo_nirenberg(u: &Field, q: f64, s: FractionalOrder) -> Result<f64> {
    let dim = u.grid().dim();
    let Some(crit) = critical_exponent(dim, s) else {
        return Err(Error::Admissibility(format!(
            "Gagliardo–Nirenberg needs N > 2s, got N = {dim}, s = {}",
            s.value()
        )));
    };
    if !(2.0..=crit).contains(&q) {
        return Err(Error::Admissibility(format!("q = {q} outside [2, {crit}]")));
    }
    require_nonzero(u)?;
    let theta = gn_theta(dim, q, s);
    let l2 = u.norm();
    let lq = if q == 2.0 { l2 } else { u.lp_norm(q)? };
    let seminorm = gagliardo_seminorm_sq(u, s)?.sqrt();
    Ok(lq / (seminorm.powf(theta) * l2.powf(1.0 - theta)))
}

/// `N + (N/s) log a + log(sΓ(N/2)/Γ(N/(2s)))`.
pub fn log_sobolev_constant(dim: usize, s: FractionalOrder, a: f64) -> f64 {
    let n = dim as f64;
    let s = s.value();
    n + n / s * a.ln() + s.ln() + ln_gamma(n / 2.0) - ln_gamma(n / (2.0 * s))
}

/// `(a²/π^s)‖(−Δ)^{s/2}u‖₂² − ∫u² log(u²/‖u‖₂²) − K(N, s, a)‖u‖₂²`;
/// the inequality holds when this is nonnegative.
pub fn check_log_sobolev(u: &Field, s: FractionalOrder, a: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidArgument(format!("log-Sobolev parameter a must be positive, got {a}")));
    }
    require_nonzero(u)?;
    let m = u.norm_sq();
    let entropy = u.grid().cell_volume() * u.values().iter().map(|&v| entropy_density(v)).sum::<f64>() - m * m.ln();
    let kinetic = a * a / PI.powf(s.value()) * gagliardo_seminorm_sq(u, s)?;
    Ok(kinetic - entropy - log_sobolev_constant(u.grid().dim(), s, a) * m)
}

/// `∫ u²/|x|^{2s} / ‖(−Δ)^{s/2}u‖₂²`.
///
/// The origin cell is integrated by repeated 3^N subdivision with `u`
/// evaluated by trigonometric interpolation; the innermost cell is treated
/// as a ball of equal volume carrying `u(0)²`.
pub fn check_hardy(u: &Field, s: FractionalOrder) -> Result<f64> {
    let grid = u.grid();
    let dim = grid.dim();
    if critical_exponent(dim, s).is_none() {
        return Err(Error::Admissibility(format!(
            "Hardy needs N > 2s, got N = {dim}, s = {}",
            s.value()
        )));
    }
    require_nonzero(u)?;
    let two_s = 2.0 * s.value();
    let values = u.values();
    let mut bulk = 0.0;
    let mut origin = None;
    grid.for_each_node(|i, x| {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        if r2 == 0.0 {
            origin = Some(i);
        } else {
            bulk += values[i] * values[i] / r2.powf(s.value());
        }
    });
    bulk *= grid.cell_volume();
    let origin_cell = match origin {
        Some(i) => hardy_origin_cell(u, values[i], two_s),
        None => 0.0,
    };
    let seminorm = gagliardo_seminorm_sq(u, s)?;
    if seminorm == 0.0 {
        return Err(Error::InvalidArgument("Hardy ratio undefined: seminorm vanishes".into()));
    }
    Ok((bulk + origin_cell) / seminorm)
}

fn hardy_origin_cell(u: &Field, u0: f64, two_s: f64) -> f64 {
    let grid = u.grid();
    let dim = grid.dim();
    let spectrum = forward(u);
    let offsets = stencil_offsets(dim);
    let mut side = grid.spacing();
    let mut total = 0.0;
    for _ in 0..HARDY_ORIGIN_LEVELS {
        let sub = side / 3.0;
        let vol = sub.powi(dim as i32);
        for off in &offsets {
            let y: Vec<f64> = off.iter().map(|&o| o as f64 * sub).collect();
            let r2: f64 = y.iter().map(|c| c * c).sum();
            let v = trig_interpolate(grid, &spectrum, &y);
            total += vol * v * v / r2.powf(0.5 * two_s);
        }
        side = sub;
    }
    // Equal-volume ball: |S^{N-1}| ρ^{N−2s}/(N − 2s), with ω_N ρ^N = side^N.
    let n = dim as f64;
    let ln_sphere = n.ln() + 0.5 * n * PI.ln() - ln_gamma(0.5 * n + 1.0);
    let rho = (side.powf(n) / ln_sphere.exp()).powf(1.0 / n);
    total + u0 * u0 * ln_sphere.exp() * rho.powf(n - two_s) / (n - two_s)
}

/// `{−1, 0, 1}^N` without the zero vector.
fn stencil_offsets(dim: usize) -> Vec<Vec<i32>> {
    let total = 3usize.pow(dim as u32);
    (0..total)
        .map(|mut flat| {
            let mut o = vec![0i32; dim];
            for d in (0..dim).rev() {
                o[d] = (flat % 3) as i32 - 1;
                flat /= 3;
            }
            o
        })
        .filter(|o| o.iter().any(|&c| c != 0))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Check {
    /// One row per exponent `q`.
    GagliardoNirenberg { exponents: Vec<f64> },
    /// One row per parameter `a`.
    LogSobolev { a_values: Vec<f64> },
    Hardy,
}

impl Check {
    pub fn name(&self) -> &'static str {
        match self {
            Check::GagliardoNirenberg { .. } => "gagliardo_nirenberg",
            Check::LogSobolev { .. } => "log_sobolev",
            Check::Hardy => "hardy",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Suite {
    pub check: Check,
    pub grid: Grid,
    pub order: FractionalOrder,
    pub kind: FieldKind,
}

#[derive(Debug, Clone)]
pub struct CorpusConfig {
    pub seeds: Vec<u64>,
    pub suites: Vec<Suite>,
}

impl CorpusConfig {
    /// GN on `N = 2`, log-Sobolev on `N = 1` and Hardy on `N = 2`, all at
    /// `s = 1/2` over localized bump mixtures.
    pub fn standard(seeds: impl IntoIterator<Item = u64>) -> Result<Self> {
        let half = FractionalOrder::new(0.5)?;
        let plane = Grid::new(2, 10.0, 128)?;
        let line = Grid::new(1, 20.0, 1024)?;
        let kind = FieldKind::BumpMixture { count: 3 };
        Ok(Self {
            seeds: seeds.into_iter().collect(),
            suites: vec![
                Suite {
                    check: Check::GagliardoNirenberg {
                        exponents: vec![2.0, 2.5, 3.0, 3.5, 4.0],
                    },
                    grid: plane.clone(),
                    order: half,
                    kind: kind.clone(),
                },
                Suite {
                    check: Check::LogSobolev {
                        a_values: vec![0.25, 0.5, 1.0, 2.0, 4.0],
                    },
                    grid: line,
                    order: half,
                    kind: kind.clone(),
                },
                Suite {
                    check: Check::Hardy,
                    grid: plane,
                    order: half,
                    kind,
                },
            ],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub check_name: &'static str,
    pub seed: u64,
    /// `q` for GN, `a` for log-Sobolev, none for Hardy.
    pub parameter: Option<f64>,
    pub value: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerificationReport {
    pub records: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn violations(&self) -> usize {
        self.records.iter().filter(|r| !r.pass).count()
    }

    /// Largest value recorded for `check_name`.
    pub fn max_value(&self, check_name: &str) -> Option<f64> {
        self.records
            .iter()
            .filter(|r| r.check_name == check_name)
            .map(|r| r.value)
            .fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check_name,seed,parameter,value,pass\n");
        for r in &self.records {
            let p = r.parameter.map_or_else(String::new, |p| format!("{p}"));
            let _ = writeln!(out, "{},{},{},{:e},{}", r.check_name, r.seed, p, r.value, u8::from(r.pass));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

fn finite_positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

fn run_suite(suite: &Suite, seed: u64) -> Result<Vec<CheckRecord>> {
    let u = sample_test_field(&TestFieldSpec::normalized(seed, suite.kind.clone()), &suite.grid)?;
    let name = suite.check.name();
    let mut out = Vec::new();
    match &suite.check {
        Check::GagliardoNirenberg { exponents } => {
            for &q in exponents {
                let ratio = check_gagliardo_nirenberg(&u, q, suite.order)?;
                out.push(CheckRecord {
                    check_name: name,
                    seed,
                    parameter: Some(q),
                    value: ratio,
                    pass: finite_positive(ratio),
                });
            }
        }
        Check::LogSobolev { a_values } => {
            let floor = -SLACK_FLOOR * u.norm_sq();
            for &a in a_values {
                let slack = check_log_sobolev(&u, suite.order, a)?;
                out.push(CheckRecord {
                    check_name: name,
                    seed,
                    parameter: Some(a),
                    value: slack,
                    pass: slack.is_finite() && slack >= floor,
                });
            }
        }
        Check::Hardy => {
            let ratio = check_hardy(&u, suite.order)?;
            out.push(CheckRecord {
                check_name: name,
                seed,
                parameter: None,
                value: ratio,
                pass: finite_positive(ratio),
            });
        }
    }
    Ok(out)
}

/// Every suite over every seed, in that order; seeds run on scoped threads
/// and are reassembled in input order.
pub fn run_corpus(config: &CorpusConfig) -> Result<VerificationReport> {
    let mut records = Vec::new();
    for suite in &config.suites {
        let per_seed: Vec<Result<Vec<CheckRecord>>> = std::thread::scope(|scope| {
            let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
            let chunk = config.seeds.len().div_ceil(workers).max(1);
            let handles: Vec<_> = config
                .seeds
                .chunks(chunk)
                .map(|seeds| scope.spawn(move || seeds.iter().map(|&s| run_suite(suite, s)).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("corpus worker panicked"))
                .collect()
        });
        for r in per_seed {
            records.extend(r?);
        }
    }
    Ok(VerificationReport { records })
}
