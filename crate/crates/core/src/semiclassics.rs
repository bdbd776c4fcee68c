//! ε-sweeps of the penalized problem and the observables tracked along
//! them: the maximum point, the rescaled energy, the far-field decay rate
//! and whether the penalized solution solves the original equation.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::model::nonlinearity::crossover;
use crate::model::{ModelParams, PenalizationRegion};
use crate::solver::{solve_limiting, solve_penalized, InitialGuess, SolveResult, SolverConfig};

/// Values at or below this are left out of the decay fit.
pub const DECAY_FLOOR: f64 = 1e-300;

/// Minimum number of nodes a decay fit needs.
pub const MIN_FIT_NODES: usize = 16;

/// Coordinates of the largest node value; ties go to the lowest index.
pub fn locate_maximum(u: &Field) -> Result<Vec<f64>> {
    if u.is_zero() {
        return Err(Error::InvalidArgument("cannot locate the maximum of u ≡ 0".into()));
    }
    Ok(u.grid().coordinates(u.argmax()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in `log u`.
    pub fit_residual: f64,
    pub used: usize,
    /// Nodes in the annulus with `u ≤ DECAY_FLOOR`.
    pub excluded: usize,
}

/// Least-squares slope of `log u` against `log |x − center|` over the
/// annulus `r1 ≤ |x − center| ≤ r2` (periodic distance, physical units).
pub fn fit_decay_exponent(u: &Field, center: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (r1, r2) = window;
    if !(r1 > 0.0 && r1 < r2 && r2.is_finite()) {
        return Err(Error::InvalidArgument(format!("decay window needs 0 < r1 < r2, got ({r1}, {r2})")));
    }
    let grid = u.grid();
    if center.len() != grid.dim() {
        return Err(Error::InvalidArgument("center dimension differs from the grid".into()));
    }
    let values = u.values();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = 0;
    grid.for_each_node(|i, x| {
        let r = grid.periodic_distance(x, center);
        if r < r1 || r > r2 {
            return;
        }
        if values[i] > DECAY_FLOOR {
            xs.push(r.ln());
            ys.push(values[i].ln());
        } else {
            excluded += 1;
        }
    });
    if xs.len() < MIN_FIT_NODES {
        return Err(Error::InvalidArgument(format!(
            "decay window ({r1}, {r2}) holds {} usable nodes, need {MIN_FIT_NODES} ({excluded} excluded)",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidArgument("decay window nodes share a single radius".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    Ok(DecayFit {
        slope,
        intercept,
        fit_residual: (ss / n).sqrt(),
        used: xs.len(),
        excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recovery {
    pub recovered: bool,
    /// `e^{-3/2} − max_{x ∉ Λ} u`; infinite when no node lies outside Λ.
    pub margin: f64,
}

/// Whether `u ≤ e^{-3/2}` at every node outside Λ, where the penalized and
/// original nonlinearities agree.
pub fn check_origin_recovery(u: &Field, region: &PenalizationRegion) -> Recovery {
    let grid = u.grid();
    let values = u.values();
    let mut outside_max = f64::NEG_INFINITY;
    grid.for_each_node(|i, x| {
        if !region.in_lambda(x) {
            outside_max = outside_max.max(values[i]);
        }
    });
    let margin = crossover() - outside_max;
    Recovery {
        recovered: margin >= 0.0,
        margin,
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Model whose `ε` is replaced by each sweep value.
    pub base: ModelParams,
    /// Strictly decreasing, positive.
    pub epsilons: Vec<f64>,
    pub solver: SolverConfig,
    /// Decay annulus `(r1, r2)` in units of `ε`.
    pub farfield_window: (f64, f64),
    /// Start each solve from the previous solution rescaled about its maximum.
    pub warm_start: bool,
    /// Grid for the limiting problem at `V(x*)`.
    pub limiting_grid: Grid,
}

impl SweepConfig {
    /// Warm-started sweep with default solver settings and a limiting grid
    /// of half-width 20.
    pub fn new(base: ModelParams, epsilons: Vec<f64>, farfield_window: (f64, f64)) -> Result<Self> {
        let dim = base.grid().dim();
        let points = match dim {
            1 => 1024,
            2 => 128,
            _ => 48,
        };
        let limiting_grid = Grid::new(dim, 20.0, points)?;
        let config = Self {
            base,
            epsilons,
            solver: SolverConfig::default(),
            farfield_window,
            warm_start: true,
            limiting_grid,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() {
            return Err(Error::InvalidArgument("sweep needs at least one ε".into()));
        }
        if self.epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidArgument("sweep ε values must be positive".into()));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument("sweep ε values must be strictly decreasing".into()));
        }
        let (r1, r2) = self.farfield_window;
        if !(r1 > 0.0 && r1 < r2 && r2.is_finite()) {
            return Err(Error::InvalidArgument(format!("decay window needs 0 < r1 < r2, got ({r1}, {r2})")));
        }
        let half = 0.5 * self.base.grid().half_extent();
        for &e in &self.epsilons {
            if r2 * e > half {
                return Err(Error::InvalidArgument(format!(
                    "decay window reaches {} at ε = {e}, beyond L/2 = {half}",
                    r2 * e
                )));
            }
        }
        if self.limiting_grid.dim() != self.base.grid().dim() {
            return Err(Error::InvalidArgument("limiting grid dimension differs from the model grid".into()));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub epsilon: f64,
    pub x_eps: Vec<f64>,
    /// `J_ε(u_ε) / ε^N`.
    pub c_eps_scaled: f64,
    /// `None` when the window held too few positive nodes.
    pub decay: Option<DecayFit>,
    pub origin_recovered: bool,
    pub recovery_margin: f64,
    pub converged: bool,
    pub iterations: usize,
    pub v_at_x_eps: f64,
    /// `max u` over `U ∖ B(x_ε, ε r2)`; `None` when that set has no nodes.
    pub tail_max: Option<f64>,
    pub min_value: f64,
    pub residual_relative: f64,
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub x_star: Vec<f64>,
    pub v_star: f64,
    pub c_at_xstar: f64,
    pub limiting_converged: bool,
    pub limiting_residual: f64,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Solution for each row, same order.
    pub solutions: Vec<Field>,
    pub summary: SweepSummary,
    pub farfield_window: (f64, f64),
    pub warm_start: bool,
}

impl SweepReport {
    /// Smallest-ε row among the converged ones.
    pub fn smallest_converged(&self) -> Option<&SweepRow> {
        self.rows.iter().filter(|r| r.converged).last()
    }

    pub fn to_csv(&self) -> String {
        let dim = self.summary.x_star.len();
        let mut out = String::from("epsilon");
        for d in 1..=dim {
            let _ = write!(out, ",x_eps_{d}");
        }
        out.push_str(
            ",c_eps_scaled,decay_slope,decay_fit_residual,origin_recovered,recovery_margin,converged,iterations\n",
        );
        for r in &self.rows {
            let _ = write!(out, "{:e}", r.epsilon);
            for x in &r.x_eps {
                let _ = write!(out, ",{x:e}");
            }
            let (slope, res) = r.decay.map_or((f64::NAN, f64::NAN), |d| (d.slope, d.fit_residual));
            let _ = writeln!(
                out,
                ",{:e},{:e},{:e},{},{:e},{},{}",
                r.c_eps_scaled,
                slope,
                res,
                u8::from(r.origin_recovered),
                r.recovery_margin,
                u8::from(r.converged),
                r.iterations
            );
        }
        let s = &self.summary;
        let coords: Vec<String> = s.x_star.iter().map(|x| format!("{x:e}")).collect();
        let _ = writeln!(out, "# x_star = {}", coords.join(" "));
        let _ = writeln!(out, "# v_star = {:e}", s.v_star);
        let _ = writeln!(out, "# C_at_xstar = {:e}", s.c_at_xstar);
        let _ = writeln!(out, "# limiting_converged = {}", s.limiting_converged);
        let _ = writeln!(out, "# limiting_residual = {:e}", s.limiting_residual);
        let _ = writeln!(
            out,
            "# farfield_window = {:e} {:e} (units of epsilon)",
            self.farfield_window.0, self.farfield_window.1
        );
        let _ = writeln!(out, "# warm_start = {}", self.warm_start);
        let _ = writeln!(
            out,
            "# c_eps_scaled is the energy of the descent critical point, taken as the mountain-pass level"
        );
        for r in &self.rows {
            let tail = r.tail_max.map_or_else(|| "none".to_string(), |t| format!("{t:e}"));
            let _ = writeln!(
                out,
                "# row epsilon = {:e}: v_at_x_eps = {:e}, tail_max = {tail}, min_value = {:e}, residual = {:e}",
                r.epsilon, r.v_at_x_eps, r.min_value, r.residual_relative
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// `u(x_m + (x − x_m)·ratio)` with `x_m` the maximum of `u`; samples that
/// would wrap past the box edge are set to zero.
pub fn rescale_about_max(u: &Field, ratio: f64) -> Result<Field> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidArgument(format!("rescale ratio must be positive, got {ratio}")));
    }
    let grid = u.grid().clone();
    let center = locate_maximum(u)?;
    let l = grid.half_extent();
    let mut y = vec![0.0; grid.dim()];
    Field::from_fn(&grid, |x| {
        let mut inside = true;
        for d in 0..x.len() {
            let dx = grid.periodic_delta(x[d], center[d]) * ratio;
            inside &= dx.abs() < l;
            y[d] = center[d] + dx;
        }
        if inside {
            u.interpolate_linear(&y)
        } else {
            0.0
        }
    })
}

fn build_row(params: &ModelParams, result: &SolveResult, window: (f64, f64)) -> Result<SweepRow> {
    let eps = params.epsilon();
    let grid = params.grid();
    let u = &result.solution;
    let (x_eps, v_at_x_eps) = if u.is_zero() {
        (vec![f64::NAN; grid.dim()], f64::NAN)
    } else {
        let i = u.argmax();
        (grid.coordinates(i), params.potential_field().values()[i])
    };
    let decay = if u.is_zero() {
        None
    } else {
        fit_decay_exponent(u, &x_eps, (window.0 * eps, window.1 * eps)).ok()
    };
    let recovery = check_origin_recovery(u, params.region());
    let mut tail_max: Option<f64> = None;
    let radius = window.1 * eps;
    let values = u.values();
    grid.for_each_node(|i, x| {
        if params.region().in_outer(x) && !(grid.periodic_distance(x, &x_eps) < radius) {
            tail_max = Some(tail_max.map_or(values[i], |m| m.max(values[i])));
        }
    });
    Ok(SweepRow {
        epsilon: eps,
        x_eps,
        c_eps_scaled: result.energy / eps.powi(grid.dim() as i32),
        decay,
        origin_recovered: recovery.recovered,
        recovery_margin: recovery.margin,
        converged: result.converged,
        iterations: result.iterations,
        v_at_x_eps,
        tail_max,
        min_value: result.min_value,
        residual_relative: result.residual_relative,
    })
}

/// One penalized solve per `ε`, then the limiting energy at `V(x*)`.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    config.validate()?;
    let models: Vec<ModelParams> = config
        .epsilons
        .iter()
        .map(|&e| config.base.with_epsilon(e))
        .collect::<Result<_>>()?;

    let results: Vec<SolveResult> = if config.warm_start {
        let mut out: Vec<SolveResult> = Vec::with_capacity(models.len());
        for (k, params) in models.iter().enumerate() {
            let mut solver = config.solver.clone();
            if let Some(prev) = out.last() {
                if !prev.solution.is_zero() {
                    let ratio = config.epsilons[k - 1] / config.epsilons[k];
                    solver.initial_guess = InitialGuess::Field(rescale_about_max(&prev.solution, ratio)?);
                }
            }
            out.push(solve_penalized(params, &solver)?);
        }
        out
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = models
                .iter()
                .map(|params| scope.spawn(move || solve_penalized(params, &config.solver)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sweep worker panicked"))
                .collect::<Result<Vec<_>>>()
        })?
    };

    let rows = models
        .iter()
        .zip(&results)
        .map(|(p, r)| build_row(p, r, config.farfield_window))
        .collect::<Result<Vec<_>>>()?;

    let base = &config.base;
    let i_star = base.argmin_in_lambda();
    let v_star = base.potential_field().values()[i_star];
    let mut limiting_config = config.solver.clone();
    limiting_config.initial_guess = InitialGuess::Auto;
    let (limit, c_at_xstar) = solve_limiting(v_star, base.order(), &config.limiting_grid, &limiting_config)?;

    Ok(SweepReport {
        rows,
        solutions: results.into_iter().map(|r| r.solution).collect(),
        summary: SweepSummary {
            x_star: base.grid().coordinates(i_star),
            v_star,
            c_at_xstar,
            limiting_converged: limit.converged,
            limiting_residual: limit.residual_relative,
        },
        farfield_window: config.farfield_window,
        warm_start: config.warm_start,
    })
}
