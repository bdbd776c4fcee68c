//! Semi-implicit descent for the penalized and limiting problems.
//!
//! One step treats the stiff linear part implicitly through the spectral
//! resolvent and the nonlinearity explicitly:
//!
//! ```text
//! u⁺ = (I + dt(κ(−Δ)^s + c))⁻¹ (u + dt(c u − w u + f(u)))
//! ```
//!
//! with `κ = ε^{2s}`, `w = V + 1` and `f` the routed source. Fixed points are
//! exactly the discrete solutions. After each step the iterate is rescaled
//! onto the maximizer of the energy along its ray, which removes the single
//! unstable (mountain-pass) direction.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{FractionalOrder, Grid};
use crate::model::energy::{
    limiting_residual, nehari_scale, penalized_energy, penalized_residual, penalized_source, relative_residual,
    PenalizedRay, RayParts,
};
use crate::model::nonlinearity::{g1_second, g2_second, log_source};
use crate::model::params::ModelParams;
use crate::spectral::solve_shifted;

/// Energy increases below `ENERGY_SLACK·max(1, |E|)` count as flat.
pub const ENERGY_SLACK: f64 = 1e-12;
/// Window over which convergence demands a nonincreasing energy.
pub const MONOTONE_WINDOW: usize = 10;
/// Consecutive energy increases that mark a run as diverged.
pub const DIVERGENCE_RUN: usize = 25;
/// Nodes below this fraction of `max|u|` do not set the stabilizing shift.
pub const STIFFNESS_CUTOFF: f64 = 1e-14;

#[derive(Debug, Clone)]
pub enum InitialGuess {
    /// `amplitude · exp(−|x − center|² / (2 width²))`.
    GaussonAt {
        center: Vec<f64>,
        width: f64,
        amplitude: f64,
    },
    Field(Field),
    /// Penalized: bump of width ε and amplitude `e^{(1 + min_Λ V)/2}` at the
    /// argmin of `V` over `Λ`. Limiting: unit-width bump of amplitude
    /// `e^{(1+λ)/2}` at the origin.
    Auto,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub time_step: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub initial_guess: InitialGuess,
    /// Resolvent shift `c`; `None` means `max(V + 1) + 1`.
    pub implicit_shift: Option<f64>,
    /// Raise `c` each step to the local stiffness of the source.
    pub adaptive_shift: bool,
    /// Rescale each iterate onto its ray maximizer.
    pub ray_projection: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            time_step: 100.0,
            tolerance: 1e-8,
            max_iterations: 20_000,
            initial_guess: InitialGuess::Auto,
            implicit_shift: None,
            adaptive_shift: true,
            ray_projection: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.time_step > 0.0 && self.time_step.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "time step must be positive, got {}",
                self.time_step
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        if let Some(c) = self.implicit_shift {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidArgument(format!("implicit shift must be positive, got {c}")));
            }
        }
        if let InitialGuess::GaussonAt { width, .. } = &self.initial_guess {
            if !(*width > 0.0) {
                return Err(Error::InvalidArgument("initial bump width must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    Diverged,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub solution: Field,
    pub energy: f64,
    pub residual_relative: f64,
    pub iterations: usize,
    pub converged: bool,
    pub min_value: f64,
    pub termination: Termination,
    /// Energy after every accepted iterate, starting with the initial guess.
    pub energy_history: Vec<f64>,
    /// Resolvent shift used by the last step.
    pub shift: f64,
}

/// What the descent loop needs from a functional.
trait Problem {
    fn grid(&self) -> &Grid;
    fn order(&self) -> FractionalOrder;
    fn diffusion(&self) -> f64;
    /// Linear weight `w_i` (`V + 1` or `λ + 1`).
    fn weight(&self, i: usize) -> f64;
    fn max_weight(&self) -> f64;
    fn source(&self, i: usize, x: f64) -> f64;
    fn source_slope(&self, i: usize, x: f64) -> f64;
    fn energy(&self, u: &Field) -> Result<f64>;
    fn residual(&self, u: &Field) -> Result<Field>;
    fn ray_scale(&self, u: &Field) -> Result<f64>;
}

struct Penalized<'a>(&'a ModelParams);

impl Problem for Penalized<'_> {
    fn grid(&self) -> &Grid {
        self.0.grid()
    }
    fn order(&self) -> FractionalOrder {
        self.0.order()
    }
    fn diffusion(&self) -> f64 {
        self.0.diffusion_weight()
    }
    fn weight(&self, i: usize) -> f64 {
        self.0.potential_field().values()[i] + 1.0
    }
    fn max_weight(&self) -> f64 {
        self.0.potential_field().max_value() + 1.0
    }
    fn source(&self, i: usize, x: f64) -> f64 {
        penalized_source(x, self.0.lambda_mask()[i])
    }
    fn source_slope(&self, i: usize, x: f64) -> f64 {
        if self.0.lambda_mask()[i] {
            g1_second(x)
        } else {
            -g2_second(x)
        }
    }
    fn energy(&self, u: &Field) -> Result<f64> {
        Ok(penalized_energy(u, self.0)?.j)
    }
    fn residual(&self, u: &Field) -> Result<Field> {
        penalized_residual(u, self.0)
    }
    fn ray_scale(&self, u: &Field) -> Result<f64> {
        PenalizedRay::new(u, self.0)?.maximizer()
    }
}

struct Limiting {
    lambda: f64,
    order: FractionalOrder,
    grid: Grid,
}

impl Problem for Limiting {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn order(&self) -> FractionalOrder {
        self.order
    }
    fn diffusion(&self) -> f64 {
        1.0
    }
    fn weight(&self, _: usize) -> f64 {
        self.lambda + 1.0
    }
    fn max_weight(&self) -> f64 {
        self.lambda + 1.0
    }
    fn source(&self, _: usize, x: f64) -> f64 {
        log_source(x)
    }
    fn source_slope(&self, _: usize, x: f64) -> f64 {
        if x.abs() > crate::model::nonlinearity::LOG_FLOOR {
            3.0 + 2.0 * x.abs().ln()
        } else {
            0.0
        }
    }
    fn energy(&self, u: &Field) -> Result<f64> {
        Ok(RayParts::new(u, self.lambda, self.order)?.energy())
    }
    fn residual(&self, u: &Field) -> Result<Field> {
        limiting_residual(u, self.lambda, self.order)
    }
    fn ray_scale(&self, u: &Field) -> Result<f64> {
        nehari_scale(&RayParts::new(u, self.lambda, self.order)?)
    }
}

fn configured_shift<P: Problem>(p: &P, config: &SolverConfig) -> f64 {
    config.implicit_shift.unwrap_or(p.max_weight() + 1.0)
}

/// Smallest shift making `x ↦ c x − w x + f(x)` nondecreasing at every
/// significant node.
fn stiffness_shift<P: Problem>(p: &P, u: &Field) -> f64 {
    let cutoff = STIFFNESS_CUTOFF * u.max_abs();
    let mut c = f64::NEG_INFINITY;
    for (i, &x) in u.values().iter().enumerate() {
        if x.abs() >= cutoff && x != 0.0 {
            c = c.max(p.weight(i) - p.source_slope(i, x));
        }
    }
    c
}

fn step_shift<P: Problem>(p: &P, u: &Field, config: &SolverConfig) -> f64 {
    let base = configured_shift(p, config);
    if config.adaptive_shift {
        base.max(stiffness_shift(p, u))
    } else {
        base
    }
}

fn step<P: Problem>(p: &P, u: &Field, dt: f64, shift: f64, with_source: bool) -> Result<Field> {
    let values: Vec<f64> = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = if with_source { p.source(i, x) } else { 0.0 };
            x + dt * (shift * x - p.weight(i) * x + f)
        })
        .collect();
    let explicit = Field::new(p.grid(), values)?;
    solve_shifted(&explicit, p.order(), dt * p.diffusion(), 1.0 + dt * shift)
}

/// One semi-implicit step of the penalized flow (no ray projection).
pub fn descent_step(u: &Field, params: &ModelParams, config: &SolverConfig) -> Result<Field> {
    config.validate()?;
    let p = Penalized(params);
    let shift = step_shift(&p, u, config);
    step(&p, u, config.time_step, shift, true)
}

/// Linear part of [`descent_step`] alone, with the configured shift.
///
/// Diagnostic hook: on a single Fourier mode with constant `V = λ` it
/// multiplies the amplitude by `(1 + dt(c − λ − 1)) / (1 + dt(ε^{2s}|k|^{2s} + c))`.
pub fn descent_step_linear(u: &Field, params: &ModelParams, config: &SolverConfig) -> Result<Field> {
    config.validate()?;
    let p = Penalized(params);
    let shift = configured_shift(&p, config);
    step(&p, u, config.time_step, shift, false)
}

/// Resolvent shift the penalized flow would use from `u`.
pub fn effective_shift(u: &Field, params: &ModelParams, config: &SolverConfig) -> f64 {
    step_shift(&Penalized(params), u, config)
}

fn gaussian_bump(grid: &Grid, center: &[f64], width: f64, amplitude: f64) -> Result<Field> {
    if center.len() != grid.dim() {
        return Err(Error::InvalidArgument(format!(
            "initial bump center has {} coordinates, grid has dimension {}",
            center.len(),
            grid.dim()
        )));
    }
    Field::from_fn(grid, |x| {
        let r = grid.periodic_distance(x, center);
        amplitude * (-0.5 * r * r / (width * width)).exp()
    })
}

fn explicit_guess(grid: &Grid, guess: &InitialGuess) -> Result<Option<Field>> {
    match guess {
        InitialGuess::GaussonAt {
            center,
            width,
            amplitude,
        } => Ok(Some(gaussian_bump(grid, center, *width, *amplitude)?)),
        InitialGuess::Field(f) => {
            if f.grid().same_as(grid) {
                Ok(Some(f.clone()))
            } else {
                Err(Error::GridMismatch)
            }
        }
        InitialGuess::Auto => Ok(None),
    }
}

/// Initial iterate for the penalized problem.
pub fn penalized_initial_guess(params: &ModelParams, guess: &InitialGuess) -> Result<Field> {
    if let Some(f) = explicit_guess(params.grid(), guess)? {
        return Ok(f);
    }
    let center = params.grid().coordinates(params.argmin_in_lambda());
    let amplitude = (0.5 * (1.0 + params.min_v_in_lambda())).exp();
    gaussian_bump(params.grid(), &center, params.epsilon(), amplitude)
}

fn limiting_initial_guess(grid: &Grid, lambda: f64, guess: &InitialGuess) -> Result<Field> {
    if let Some(f) = explicit_guess(grid, guess)? {
        return Ok(f);
    }
    gaussian_bump(grid, &vec![0.0; grid.dim()], 1.0, (0.5 * (1.0 + lambda)).exp())
}

fn project<P: Problem>(p: &P, u: Field, enabled: bool) -> Result<Field> {
    if !enabled || u.is_zero() {
        return Ok(u);
    }
    match p.ray_scale(&u) {
        Ok(t) => u.scaled(t),
        // no maximizer along this ray; leave the iterate to the flow
        Err(Error::Projection(_)) => Ok(u),
        Err(e) => Err(e),
    }
}

fn monotone_tail(history: &[f64]) -> bool {
    let start = history.len().saturating_sub(MONOTONE_WINDOW + 1);
    history[start..]
        .windows(2)
        .all(|w| w[1] <= w[0] + ENERGY_SLACK * w[0].abs().max(1.0))
}

fn run<P: Problem>(p: &P, initial: Field, config: &SolverConfig) -> Result<SolveResult> {
    config.validate()?;
    let abort = |iteration: usize, e: Error| match e {
        Error::NonFinite { .. } => Error::SolverAbort {
            iteration,
            reason: e.to_string(),
        },
        other => other,
    };
    let mut u = project(p, initial, config.ray_projection).map_err(|e| abort(0, e))?;
    let mut energy = p.energy(&u)?;
    let mut history = vec![energy];
    let mut rising = 0usize;
    let mut iterations = 0usize;
    let mut shift = configured_shift(p, config);
    let termination;
    let mut residual_relative;

    loop {
        let residual = p.residual(&u).map_err(|e| abort(iterations, e))?;
        residual_relative = relative_residual(&residual, &u);
        if residual_relative <= config.tolerance && monotone_tail(&history) {
            termination = Termination::Converged;
            break;
        }
        if iterations >= config.max_iterations {
            termination = Termination::MaxIterations;
            break;
        }
        shift = step_shift(p, &u, config);
        let next = step(p, &u, config.time_step, shift, true).map_err(|e| abort(iterations + 1, e))?;
        let next = project(p, next, config.ray_projection).map_err(|e| abort(iterations + 1, e))?;
        let next_energy = p.energy(&next)?;
        iterations += 1;
        if !next_energy.is_finite() {
            return Err(Error::SolverAbort {
                iteration: iterations,
                reason: "energy became non-finite".into(),
            });
        }
        if next_energy > energy + ENERGY_SLACK * energy.abs().max(1.0) {
            rising += 1;
        } else {
            rising = 0;
        }
        u = next;
        energy = next_energy;
        history.push(energy);
        if rising >= DIVERGENCE_RUN {
            residual_relative = relative_residual(&p.residual(&u)?, &u);
            termination = Termination::Diverged;
            break;
        }
    }

    Ok(SolveResult {
        min_value: u.min_value(),
        solution: u,
        energy,
        residual_relative,
        iterations,
        converged: termination == Termination::Converged,
        termination,
        energy_history: history,
        shift,
    })
}

/// Positive solution of the penalized equation by projected descent.
pub fn solve_penalized(params: &ModelParams, config: &SolverConfig) -> Result<SolveResult> {
    config.validate()?;
    let initial = penalized_initial_guess(params, &config.initial_guess)?;
    run(&Penalized(params), initial, config)
}

/// Ground state of `(−Δ)^s u + λu = u log u²` by Nehari-projected descent.
/// Returns the result and `C_λ = ℒ_λ(solution)`.
pub fn solve_limiting(
    lambda: f64,
    s: FractionalOrder,
    grid: &Grid,
    config: &SolverConfig,
) -> Result<(SolveResult, f64)> {
    if !(lambda > -1.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "limiting problem needs λ > −1, got {lambda}"
        )));
    }
    config.validate()?;
    let problem = Limiting {
        lambda,
        order: s,
        grid: grid.clone(),
    };
    let initial = limiting_initial_guess(grid, lambda, &config.initial_guess)?;
    let result = run(&problem, initial, config)?;
    let c = result.energy;
    Ok((result, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::potential::PotentialSpec;
    use crate::model::region::{PenalizationRegion, Shape};
    use crate::model::WellPolicy;

    fn flat(grid: &Grid, s: f64) -> ModelParams {
        let region = PenalizationRegion::new(
            Shape::Box { lo: vec![-4.0], hi: vec![4.0] },
            Shape::Box { lo: vec![-6.0], hi: vec![6.0] },
        )
        .unwrap();
        ModelParams::with_policy(
            1.0,
            FractionalOrder::new(s).unwrap(),
            PotentialSpec::Constant(0.0),
            region,
            grid,
            WellPolicy::AllowFlat,
        )
        .unwrap()
    }

    #[test]
    fn config_validation() {
        let mut c = SolverConfig::default();
        assert!(c.validate().is_ok());
        c.time_step = 0.0;
        assert!(c.validate().is_err());
        let c = SolverConfig {
            max_iterations: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = SolverConfig {
            implicit_shift: Some(-1.0),
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let g = Grid::new(1, 20.0, 128).unwrap();
        let p = flat(&g, 0.5);
        let z = Field::zeros(&g);
        let cfg = SolverConfig::default();
        assert!(descent_step(&z, &p, &cfg).unwrap().is_zero());
        let cfg = SolverConfig {
            initial_guess: InitialGuess::Field(z),
            ..Default::default()
        };
        let r = solve_penalized(&p, &cfg).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.energy, 0.0);
        assert_eq!(r.min_value, 0.0);
        assert_eq!(r.residual_relative, 0.0);
    }

    #[test]
    fn auto_guess_sits_at_potential_minimum() {
        let g = Grid::new(1, 8.0, 128).unwrap();
        let region = PenalizationRegion::new(
            Shape::Box { lo: vec![-2.0], hi: vec![3.0] },
            Shape::Box { lo: vec![-3.0], hi: vec![4.0] },
        )
        .unwrap();
        let p = ModelParams::new(
            0.5,
            FractionalOrder::new(0.5).unwrap(),
            PotentialSpec::QuadraticWell {
                center: vec![1.0],
                curvature: 1.0,
                cap: 3.0,
            },
            region,
            &g,
        )
        .unwrap();
        let u = penalized_initial_guess(&p, &InitialGuess::Auto).unwrap();
        assert_eq!(g.coordinates(u.argmax()), vec![1.0]);
        assert!((u.max_value() - 0.5f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn nan_guess_is_rejected_up_front() {
        let g = Grid::new(1, 8.0, 64).unwrap();
        assert!(Field::new(&g, vec![f64::NAN; 64]).is_err());
    }

    #[test]
    fn limiting_rejects_floor() {
        let g = Grid::new(1, 8.0, 64).unwrap();
        let s = FractionalOrder::new(1.0).unwrap();
        assert!(solve_limiting(-1.0, s, &g, &SolverConfig::default()).is_err());
    }
}
