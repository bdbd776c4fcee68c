use crate::error::{Error, Result};
use crate::grid::Grid;

/// Axis-aligned box or Euclidean ball. Both are closed for node membership.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Shape {
    pub fn dim(&self) -> usize {
        match self {
            Shape::Box { lo, .. } => lo.len(),
            Shape::Ball { center, .. } => center.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Shape::Box { lo, hi } => {
                if lo.len() != hi.len() || lo.is_empty() {
                    return Err(Error::InvalidRegion("box corners differ in dimension".into()));
                }
                if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                    return Err(Error::InvalidRegion("box needs lo < hi on every axis".into()));
                }
            }
            Shape::Ball { center, radius } => {
                if center.is_empty() || !(*radius > 0.0) {
                    return Err(Error::InvalidRegion("ball needs a center and a positive radius".into()));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Shape::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| a <= v && v <= b),
            Shape::Ball { center, radius } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                r2 <= radius * radius
            }
        }
    }

    /// Distance from `self` to the complement of `outer` (negative if `self`
    /// pokes out).
    fn margin_inside(&self, outer: &Shape) -> f64 {
        match (self, outer) {
            (Shape::Box { lo, hi }, Shape::Box { lo: olo, hi: ohi }) => (0..lo.len())
                .map(|d| (lo[d] - olo[d]).min(ohi[d] - hi[d]))
                .fold(f64::INFINITY, f64::min),
            (Shape::Ball { center, radius }, Shape::Ball { center: oc, radius: orad }) => {
                orad - radius - dist(center, oc)
            }
            (Shape::Ball { center, radius }, Shape::Box { lo, hi }) => (0..center.len())
                .map(|d| (center[d] - radius - lo[d]).min(hi[d] - center[d] - radius))
                .fold(f64::INFINITY, f64::min),
            (Shape::Box { lo, hi }, Shape::Ball { center, radius }) => {
                // farthest corner
                let far: f64 = (0..lo.len())
                    .map(|d| {
                        let a = (lo[d] - center[d]).abs().max((hi[d] - center[d]).abs());
                        a * a
                    })
                    .sum();
                radius - far.sqrt()
            }
        }
    }

    fn margin_in_grid(&self, grid: &Grid) -> f64 {
        let l = grid.half_extent();
        let bbox = Shape::Box {
            lo: vec![-l; grid.dim()],
            hi: vec![l; grid.dim()],
        };
        self.margin_inside(&bbox)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Pair `Λ ⊂⊂ U` of the penalization scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct PenalizationRegion {
    lambda_set: Shape,
    outer_set: Shape,
}

impl PenalizationRegion {
    /// Checks shapes and the strict inclusion `Λ ⊂⊂ U` with a positive margin.
    pub fn new(lambda_set: Shape, outer_set: Shape) -> Result<Self> {
        lambda_set.validate()?;
        outer_set.validate()?;
        if lambda_set.dim() != outer_set.dim() {
            return Err(Error::InvalidRegion("Λ and U differ in dimension".into()));
        }
        let margin = lambda_set.margin_inside(&outer_set);
        if !(margin > 0.0) {
            return Err(Error::InvalidRegion(format!(
                "Λ is not compactly contained in U (margin {margin:.3e})"
            )));
        }
        Ok(Self {
            lambda_set,
            outer_set,
        })
    }

    pub fn lambda_set(&self) -> &Shape {
        &self.lambda_set
    }

    pub fn outer_set(&self) -> &Shape {
        &self.outer_set
    }

    pub fn dim(&self) -> usize {
        self.lambda_set.dim()
    }

    /// Checks `U ⊂⊂ (−L, L)^N` for the given grid.
    pub fn check_fits(&self, grid: &Grid) -> Result<()> {
        if self.dim() != grid.dim() {
            return Err(Error::InvalidRegion(format!(
                "region has dimension {}, grid has {}",
                self.dim(),
                grid.dim()
            )));
        }
        let margin = self.outer_set.margin_in_grid(grid);
        if !(margin > 0.0) {
            return Err(Error::InvalidRegion(format!(
                "U is not compactly contained in the computational box (margin {margin:.3e})"
            )));
        }
        Ok(())
    }

    pub fn in_lambda(&self, x: &[f64]) -> bool {
        self.lambda_set.contains(x)
    }

    pub fn in_outer(&self, x: &[f64]) -> bool {
        self.outer_set.contains(x)
    }

    /// Nodewise indicator of `Λ`.
    pub fn lambda_mask(&self, grid: &Grid) -> Vec<bool> {
        let mut mask = vec![false; grid.node_count()];
        grid.for_each_node(|i, x| mask[i] = self.in_lambda(x));
        mask
    }
}
