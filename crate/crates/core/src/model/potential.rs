use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;

/// Families of trapping potentials `V`.
///
/// Wells are measured from their minimum; distances use the periodic
/// minimum image so every family is continuous on the torus.
#[derive(Debug, Clone)]
pub enum PotentialSpec {
    Constant(f64),
    /// `min(curvature·|x − center|², cap)`.
    QuadraticWell {
        center: Vec<f64>,
        curvature: f64,
        cap: f64,
    },
    /// `min(cap, min_i |x − c_i|² − depth_i)`.
    DoubleWell {
        centers: [Vec<f64>; 2],
        depths: [f64; 2],
        cap: f64,
    },
    /// `−depth·(1 − |x − center|²/radius²)₊²`, zero outside the ball.
    CompactWell {
        center: Vec<f64>,
        radius: f64,
        depth: f64,
    },
    Sampled(Field),
}

impl PotentialSpec {
    fn check_dims(&self, grid: &Grid) -> Result<()> {
        let n = grid.dim();
        let bad = |what: &str, len: usize| {
            Err(Error::InvalidArgument(format!(
                "potential {what} has {len} coordinates, grid has dimension {n}"
            )))
        };
        match self {
            PotentialSpec::QuadraticWell { center, .. } | PotentialSpec::CompactWell { center, .. } => {
                if center.len() != n {
                    return bad("center", center.len());
                }
            }
            PotentialSpec::DoubleWell { centers, .. } => {
                for c in centers {
                    if c.len() != n {
                        return bad("center", c.len());
                    }
                }
            }
            PotentialSpec::Sampled(f) => {
                if !f.grid().same_as(grid) {
                    return Err(Error::GridMismatch);
                }
            }
            PotentialSpec::Constant(_) => {}
        }
        Ok(())
    }

    /// Samples `V` on the grid and checks `V + 1 >= 0` at every node.
    pub fn sample(&self, grid: &Grid) -> Result<Field> {
        self.check_dims(grid)?;
        let field = match self {
            PotentialSpec::Constant(lambda) => Field::constant(grid, *lambda)?,
            PotentialSpec::QuadraticWell {
                center,
                curvature,
                cap,
            } => {
                if !(*curvature > 0.0) {
                    return Err(Error::InvalidArgument("well curvature must be positive".into()));
                }
                Field::from_fn(grid, |x| {
                    let r = grid.periodic_distance(x, center);
                    (curvature * r * r).min(*cap)
                })?
            }
            PotentialSpec::DoubleWell { centers, depths, cap } => Field::from_fn(grid, |x| {
                centers
                    .iter()
                    .zip(depths)
                    .map(|(c, d)| {
                        let r = grid.periodic_distance(x, c);
                        r * r - d
                    })
                    .fold(*cap, f64::min)
            })?,
            PotentialSpec::CompactWell {
                center,
                radius,
                depth,
            } => {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidArgument("well radius must be positive".into()));
                }
                Field::from_fn(grid, |x| {
                    let r = grid.periodic_distance(x, center) / radius;
                    let bump = (1.0 - r * r).max(0.0);
                    -depth * bump * bump
                })?
            }
            PotentialSpec::Sampled(f) => f.clone(),
        };
        if let Some(index) = field.values().iter().position(|&v| v + 1.0 < 0.0) {
            return Err(Error::PotentialBelowFloor {
                index,
                value: field.values()[index],
            });
        }
        Ok(field)
    }
}
