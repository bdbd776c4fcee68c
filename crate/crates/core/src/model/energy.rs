//! Energies, Euler–Lagrange residuals and ray (Nehari) projections.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{FractionalOrder, Power};
use crate::model::nonlinearity::{entropy_density, g1_prime, g2_prime, g_densities, log_source};
use crate::model::params::ModelParams;
use crate::spectral::{apply_fractional_power, gagliardo_seminorm_sq};

/// `J_ε = Φ_ε + Ψ`, the smooth part and the convex penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenalizedEnergy {
    pub j: f64,
    pub phi: f64,
    pub psi: f64,
}

fn check_grid(u: &Field, params: &ModelParams) -> Result<()> {
    if u.grid().same_as(params.grid()) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// `‖u‖²_{V,ε} = ∫ ε^{2s}|(−Δ)^{s/2}u|² + (V+1)u²`.
pub fn weighted_norm_sq(u: &Field, params: &ModelParams) -> Result<f64> {
    check_grid(u, params)?;
    let kinetic = params.diffusion_weight() * gagliardo_seminorm_sq(u, params.order())?;
    let w = u.grid().cell_volume();
    let potential: f64 = u
        .values()
        .iter()
        .zip(params.potential_field().values())
        .map(|(x, v)| (v + 1.0) * x * x)
        .sum();
    Ok(kinetic + w * potential)
}

pub fn penalized_energy(u: &Field, params: &ModelParams) -> Result<PenalizedEnergy> {
    let norm_sq = weighted_norm_sq(u, params)?;
    let mut g1 = 0.0;
    let mut g2 = 0.0;
    for (&x, &inside) in u.values().iter().zip(params.lambda_mask()) {
        let (a, b) = g_densities(x);
        if inside {
            g1 += a;
        } else {
            g2 += b;
        }
    }
    let w = u.grid().cell_volume();
    let phi = 0.5 * norm_sq - w * g1;
    let psi = w * g2;
    Ok(PenalizedEnergy {
        j: phi + psi,
        phi,
        psi,
    })
}

/// Right side of the penalized equation at one node.
#[inline]
pub fn penalized_source(x: f64, inside_lambda: bool) -> f64 {
    if inside_lambda {
        g1_prime(x)
    } else {
        -g2_prime(x)
    }
}

/// `ε^{2s}(−Δ)^s u + (V+1)u − χ_Λ G1'(u) + χ_{Λᶜ} G2'(u)`.
pub fn penalized_residual(u: &Field, params: &ModelParams) -> Result<Field> {
    check_grid(u, params)?;
    let lap = apply_fractional_power(u, params.order(), Power::Full)?;
    let eps2s = params.diffusion_weight();
    let values = lap
        .values()
        .iter()
        .zip(u.values())
        .zip(params.potential_field().values())
        .zip(params.lambda_mask())
        .map(|(((l, &x), v), &inside)| eps2s * l + (v + 1.0) * x - penalized_source(x, inside))
        .collect();
    Field::new(u.grid(), values)
}

/// `‖residual‖₂ / ‖u‖₂`, with the convention 0 for `u ≡ 0`.
pub fn relative_residual(residual: &Field, u: &Field) -> f64 {
    let n = u.norm();
    if n == 0.0 {
        residual.norm()
    } else {
        residual.norm() / n
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > -1.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "limiting problem needs λ > −1, got {lambda}"
        )))
    }
}

/// Scalar ingredients of `ℒ_λ` along rays: `a = ‖(−Δ)^{s/2}u‖² + λ‖u‖²`,
/// `b = ∫u² log u²`, `m = ‖u‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayParts {
    pub a: f64,
    pub b: f64,
    pub m: f64,
}

impl RayParts {
    pub fn new(u: &Field, lambda: f64, s: FractionalOrder) -> Result<Self> {
        check_lambda(lambda)?;
        let m = u.norm_sq();
        let a = gagliardo_seminorm_sq(u, s)? + lambda * m;
        let b = u.grid().cell_volume() * u.values().iter().map(|&x| entropy_density(x)).sum::<f64>();
        Ok(Self { a, b, m })
    }

    /// `ℒ_λ(u) = ½(a + m) − ½ b`.
    pub fn energy(&self) -> f64 {
        0.5 * (self.a + self.m) - 0.5 * self.b
    }

    /// `⟨ℒ'_λ(u), u⟩ = a − b`.
    pub fn stationarity(&self) -> f64 {
        self.a - self.b
    }

    /// `ℒ_λ(t u)` without touching the field again.
    pub fn energy_along_ray(&self, t: f64) -> f64 {
        let t2 = t * t;
        0.5 * t2 * (self.a + self.m - self.b) - 0.5 * t2 * t2.ln() * self.m
    }

    pub fn scale(&self) -> f64 {
        self.a.abs() + self.b.abs() + self.m
    }
}

/// `ℒ_λ(u) = ½∫|(−Δ)^{s/2}u|² + (λ+1)u² − ½∫u² log u²`.
pub fn limiting_energy(u: &Field, lambda: f64, s: FractionalOrder) -> Result<f64> {
    Ok(RayParts::new(u, lambda, s)?.energy())
}

/// `(−Δ)^s u + λu − u log u²`.
pub fn limiting_residual(u: &Field, lambda: f64, s: FractionalOrder) -> Result<Field> {
    check_lambda(lambda)?;
    let lap = apply_fractional_power(u, s, Power::Full)?;
    let values = lap
        .values()
        .iter()
        .zip(u.values())
        .map(|(l, &x)| l + (lambda + 1.0) * x - log_source(x))
        .collect();
    Field::new(u.grid(), values)
}

#[derive(Debug, Clone)]
pub struct NehariProjection {
    pub t_star: f64,
    pub projected: Field,
}

/// Unique maximizer `t*` of `t ↦ ℒ_λ(t u)`: `log t*² = (a − b)/m`.
pub fn nehari_scale(parts: &RayParts) -> Result<f64> {
    if !(parts.m > 0.0) {
        return Err(Error::Projection("ray through u = 0".into()));
    }
    let t = (0.5 * (parts.a - parts.b) / parts.m).exp();
    if t.is_finite() && t > 0.0 {
        Ok(t)
    } else {
        Err(Error::Projection(format!("ray maximizer overflowed (t* = {t})")))
    }
}

pub fn nehari_projection(u: &Field, lambda: f64, s: FractionalOrder) -> Result<NehariProjection> {
    let parts = RayParts::new(u, lambda, s)?;
    let t_star = nehari_scale(&parts)?;
    Ok(NehariProjection {
        t_star,
        projected: u.scaled(t_star)?,
    })
}

/// Ray data for `t ↦ J_ε(t u)`.
///
/// `(1/t) d/dt J_ε(t u) = A − ∫_Λ u₊²(1 + log t²u₊²) + ∫_{Λᶜ} u₊ G2'(t u₊)/t`,
/// strictly decreasing in `t` whenever `u₊` has mass in `Λ`.
#[derive(Debug, Clone)]
pub struct PenalizedRay {
    quadratic: f64,
    inner_mass: f64,
    inner_entropy: f64,
    outer: Vec<f64>,
    weight: f64,
}

impl PenalizedRay {
    pub fn new(u: &Field, params: &ModelParams) -> Result<Self> {
        let quadratic = weighted_norm_sq(u, params)?;
        let w = u.grid().cell_volume();
        let mut inner_mass = 0.0;
        let mut inner_entropy = 0.0;
        let mut outer = Vec::new();
        for (&x, &inside) in u.values().iter().zip(params.lambda_mask()) {
            if x <= 0.0 {
                continue;
            }
            if inside {
                inner_mass += x * x;
                inner_entropy += entropy_density(x);
            } else {
                outer.push(x);
            }
        }
        Ok(Self {
            quadratic,
            inner_mass: w * inner_mass,
            inner_entropy: w * inner_entropy,
            outer,
            weight: w,
        })
    }

    /// `(1/t) d/dt J_ε(t u)` at `t = e^τ`, and its τ-derivative.
    fn reduced_derivative(&self, tau: f64) -> (f64, f64) {
        let t = tau.exp();
        let mut value = self.quadratic - self.inner_mass * (1.0 + 2.0 * tau) - self.inner_entropy;
        let mut slope = -2.0 * self.inner_mass;
        let mut outer = 0.0;
        let mut outer_slope = 0.0;
        for &x in &self.outer {
            outer += x * g2_prime(t * x) / t;
            if t * x < crate::model::nonlinearity::crossover() {
                outer_slope -= 2.0 * x * x;
            }
        }
        value += self.weight * outer;
        slope += self.weight * outer_slope;
        (value, slope)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        t * self.reduced_derivative(t.ln()).0
    }

    /// The unique `t* > 0` with `d/dt J_ε(t u) = 0`.
    pub fn maximizer(&self) -> Result<f64> {
        if !(self.inner_mass > 0.0) {
            return Err(Error::Projection(
                "u₊ has no mass in Λ, so J(t u) has no interior maximum".into(),
            ));
        }
        let f = |tau: f64| self.reduced_derivative(tau);
        let (mut lo, mut hi) = (-1.0, 1.0);
        let mut guard = 0;
        while f(lo).0 <= 0.0 {
            lo = 2.0 * lo - 1.0;
            guard += 1;
            if guard > 60 {
                return Err(Error::Projection("no lower bracket for the ray maximizer".into()));
            }
        }
        while f(hi).0 >= 0.0 {
            hi = 2.0 * hi + 1.0;
            guard += 1;
            if guard > 120 {
                return Err(Error::Projection("no upper bracket for the ray maximizer".into()));
            }
        }
        let scale = self.quadratic.abs() + self.inner_mass + self.inner_entropy.abs();
        let mut tau = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (val, slope) = f(tau);
            if val.abs() <= 1e-15 * scale {
                break;
            }
            if val > 0.0 {
                lo = tau;
            } else {
                hi = tau;
            }
            let newton = tau - val / slope;
            tau = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-15 * (1.0 + tau.abs()) {
                break;
            }
        }
        Ok(tau.exp())
    }
}

/// Rescales `u` onto the maximizer of `t ↦ J_ε(t u)`.
pub fn penalized_ray_projection(u: &Field, params: &ModelParams) -> Result<(f64, Field)> {
    let t = PenalizedRay::new(u, params)?.maximizer()?;
    Ok((t, u.scaled(t)?))
}
