//! Real scalar samples on a [`Grid`] with box quadrature.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Real field sampled at every node of a grid, row-major.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    /// Wraps `values`, rejecting wrong lengths and non-finite entries.
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::LengthMismatch {
                expected: grid.node_count(),
                found: values.len(),
            });
        }
        check_finite(&values, "field construction")?;
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub(crate) fn from_raw(grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.node_count());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::from_raw(grid, vec![0.0; grid.node_count()])
    }

    pub fn constant(grid: &Grid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.node_count()])
    }

    /// Samples `f` at the node coordinates.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let mut values = vec![0.0; grid.node_count()];
        grid.for_each_node(|i, x| values[i] = f(x));
        Self::new(grid, values)
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Applies `f` nodewise, rechecking finiteness.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Box quadrature `h^N Σ u`.
    pub fn integrate(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().sum::<f64>()
    }

    /// `(h^N Σ |u|^p)^{1/p}` for `p >= 1`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::InvalidArgument(format!("L^p norm needs p >= 1, got {p}")));
        }
        let w = self.grid.cell_volume();
        if p == 2.0 {
            return Ok(self.norm_sq().sqrt());
        }
        if p.is_infinite() {
            return Ok(self.max_abs());
        }
        // Factor out the max to keep |u|^p in range.
        let scale = self.max_abs();
        if scale == 0.0 {
            return Ok(0.0);
        }
        let sum: f64 = self.values.iter().map(|v| (v.abs() / scale).powf(p)).sum();
        Ok(scale * (w * sum).powf(1.0 / p))
    }

    /// `‖u‖₂²` with box quadrature.
    pub fn norm_sq(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `∫ u v` with box quadrature.
    pub fn dot(&self, other: &Field) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self.grid.cell_volume()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>())
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.same_grid(other)?;
        Ok(Field::from_raw(
            &self.grid,
            self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.same_grid(other)?;
        Ok(Field::from_raw(
            &self.grid,
            self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        ))
    }

    pub(crate) fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Index of the largest value; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Periodic multilinear interpolation at an arbitrary point.
    pub fn interpolate_linear(&self, x: &[f64]) -> f64 {
        let g = &self.grid;
        let m = g.points();
        let n = g.dim();
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for d in 0..n {
            let t = (x[d] + g.half_extent()) / g.spacing();
            let fl = t.floor();
            frac[d] = t - fl;
            base[d] = (fl as i64).rem_euclid(m as i64) as usize;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut weight = 1.0;
            let mut flat = 0;
            for d in 0..n {
                let up = (corner >> (n - 1 - d)) & 1 == 1;
                weight *= if up { frac[d] } else { 1.0 - frac[d] };
                let j = if up { (base[d] + 1) % m } else { base[d] };
                flat = flat * m + j;
            }
            if weight != 0.0 {
                acc += weight * self.values[flat];
            }
        }
        acc
    }
}

pub(crate) fn check_finite(values: &[f64], context: &'static str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index, context }),
        None => Ok(()),
    }
}
