//! Uniform periodic box `[-L, L)^N` standing in for `R^N`.

use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Largest admissible node count `M^N`.
pub const MAX_NODES: usize = 1 << 27;

/// Fractional order `s` in `(0, 1]`; `s = 1` is the classical Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(s: f64) -> Result<Self> {
        if s.is_finite() && s > 0.0 && s <= 1.0 {
            Ok(Self(s))
        } else {
            Err(Error::InvalidOrder(s))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Which power of the Laplacian a multiplier realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Power {
    /// `(-Δ)^{s/2}`, symbol `|k|^s`.
    Half,
    /// `(-Δ)^s`, symbol `|k|^{2s}`.
    Full,
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

struct GridData {
    dim: usize,
    half_extent: f64,
    points: usize,
    spacing: f64,
    wavenumbers: Vec<f64>,
    k_magnitude: Vec<f64>,
    plans: Plans,
}

/// Discretization of `[-L, L)^N` with `M` points per axis.
///
/// Cloning is cheap: the wavenumber tables and FFT plans are shared.
#[derive(Clone)]
pub struct Grid {
    data: Arc<GridData>,
}

impl Grid {
    pub fn new(dim: usize, half_extent: f64, points: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if !(half_extent.is_finite() && half_extent > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half extent {half_extent} must be positive and finite"
            )));
        }
        if points < 16 || points % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis {points} must be even and >= 16"
            )));
        }
        let nodes = (0..dim).try_fold(1usize, |acc, _| acc.checked_mul(points));
        match nodes {
            Some(n) if n <= MAX_NODES => {}
            _ => {
                return Err(Error::InvalidGrid(format!(
                    "{points}^{dim} nodes exceeds the limit of {MAX_NODES}"
                )))
            }
        }

        let spacing = 2.0 * half_extent / points as f64;
        let half = points as i64 / 2;
        let wavenumbers: Vec<f64> = (0..points as i64)
            .map(|j| {
                let signed = if j < half { j } else { j - points as i64 };
                std::f64::consts::PI * signed as f64 / half_extent
            })
            .collect();

        let total = points.pow(dim as u32);
        let mut k_magnitude = vec![0.0; total];
        let mut idx = vec![0usize; dim];
        for slot in k_magnitude.iter_mut() {
            let k2: f64 = idx.iter().map(|&j| wavenumbers[j] * wavenumbers[j]).sum();
            *slot = k2.sqrt();
            advance(&mut idx, points);
        }

        let mut planner = FftPlanner::new();
        let plans = Plans {
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
        };

        Ok(Self {
            data: Arc::new(GridData {
                dim,
                half_extent,
                points,
                spacing,
                wavenumbers,
                k_magnitude,
                plans,
            }),
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.data.dim
    }

    #[inline]
    pub fn half_extent(&self) -> f64 {
        self.data.half_extent
    }

    #[inline]
    pub fn points(&self) -> usize {
        self.data.points
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.data.spacing
    }

    /// Quadrature weight `h^N` of one cell.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.data.spacing.powi(self.data.dim as i32)
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.data.k_magnitude.len()
    }

    /// Per-axis wavenumbers `π j / L` in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.data.wavenumbers
    }

    /// `|k|` for every node of the (row-major) spectral array.
    pub fn k_magnitude(&self) -> &[f64] {
        &self.data.k_magnitude
    }

    /// Coordinate of index `j` along any axis.
    #[inline]
    pub fn axis_coordinate(&self, j: usize) -> f64 {
        -self.data.half_extent + j as f64 * self.data.spacing
    }

    /// Per-axis indices of a flat node index.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let m = self.points();
        let mut idx = vec![0; self.dim()];
        for slot in idx.iter_mut().rev() {
            *slot = flat % m;
            flat /= m;
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &j| acc * self.points() + j)
    }

    pub fn coordinates(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat)
            .into_iter()
            .map(|j| self.axis_coordinate(j))
            .collect()
    }

    /// Calls `f(flat_index, coordinates)` for each node in row-major order.
    pub fn for_each_node(&self, mut f: impl FnMut(usize, &[f64])) {
        let mut idx = vec![0usize; self.dim()];
        let mut x = vec![-self.half_extent(); self.dim()];
        for flat in 0..self.node_count() {
            for (xi, &j) in x.iter_mut().zip(&idx) {
                *xi = self.axis_coordinate(j);
            }
            f(flat, &x);
            advance(&mut idx, self.points());
        }
    }

    /// Minimum-image displacement `x - y` on the periodic box.
    pub fn periodic_delta(&self, x: f64, y: f64) -> f64 {
        let period = 2.0 * self.half_extent();
        let mut d = (x - y) % period;
        if d >= 0.5 * period {
            d -= period;
        } else if d < -0.5 * period {
            d += period;
        }
        d
    }

    /// Minimum-image Euclidean distance between two points.
    pub fn periodic_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .map(|(&a, &b)| {
                let d = self.periodic_delta(a, b);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn forward_plan(&self) -> &Arc<dyn Fft<f64>> {
        &self.data.plans.forward
    }

    pub(crate) fn inverse_plan(&self) -> &Arc<dyn Fft<f64>> {
        &self.data.plans.inverse
    }

    /// Same discretization (dimension, extent, resolution).
    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.data, &other.data)
            || (self.dim() == other.dim()
                && self.points() == other.points()
                && self.half_extent() == other.half_extent())
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim())
            .field("half_extent", &self.half_extent())
            .field("points", &self.points())
            .field("spacing", &self.spacing())
            .finish()
    }
}

/// Odometer increment of a row-major multi-index.
pub(crate) fn advance(idx: &mut [usize], m: usize) {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < m {
            return;
        }
        *slot = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_times_points_is_box_length() {
        for &(l, m) in &[(1.0, 16), (20.0, 512), (3.7, 98)] {
            let g = Grid::new(1, l, m).unwrap();
            assert_eq!(g.spacing() * m as f64, 2.0 * l);
        }
    }

    #[test]
    fn wavenumbers_symmetric() {
        let g = Grid::new(1, 5.0, 64).unwrap();
        let k = g.wavenumbers();
        for j in 1..32 {
            assert_eq!(k[j].abs(), k[64 - j].abs());
        }
        assert_eq!(k[0], 0.0);
        assert!((k[1] - std::f64::consts::PI / 5.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid::new(0, 1.0, 16).is_err());
        assert!(Grid::new(4, 1.0, 16).is_err());
        assert!(Grid::new(1, 0.0, 16).is_err());
        assert!(Grid::new(1, 1.0, 15).is_err());
        assert!(Grid::new(1, 1.0, 14).is_err());
        assert!(Grid::new(3, 1.0, 1024).is_err());
        assert!(FractionalOrder::new(0.0).is_err());
        assert!(FractionalOrder::new(1.5).is_err());
        assert!(FractionalOrder::new(1.0).is_ok());
    }

    #[test]
    fn ravel_roundtrip() {
        let g = Grid::new(3, 1.0, 16).unwrap();
        for flat in [0, 1, 17, 300, 4095] {
            assert_eq!(g.ravel(&g.unravel(flat)), flat);
        }
        let mut seen = 0;
        g.for_each_node(|flat, x| {
            assert_eq!(g.coordinates(flat), x);
            seen += 1;
        });
        assert_eq!(seen, g.node_count());
    }

    #[test]
    fn periodic_delta_wraps() {
        let g = Grid::new(1, 2.0, 16).unwrap();
        assert!((g.periodic_delta(1.9, -1.9) + 0.2).abs() < 1e-12);
        assert!((g.periodic_delta(0.5, 0.1) - 0.4).abs() < 1e-12);
    }
}
