use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{FractionalOrder, Grid};
use crate::model::potential::PotentialSpec;
use crate::model::region::PenalizationRegion;

/// How strictly the well condition `inf_Λ(V+1) < inf_{U∖Λ}(V+1)` is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WellPolicy {
    /// Strict inequality, as required for concentration.
    #[default]
    Strict,
    /// Allows equality, so flat potentials can serve as closed-form oracles.
    AllowFlat,
}

/// One instance of the penalized problem on a grid.
#[derive(Debug, Clone)]
pub struct ModelParams {
    epsilon: f64,
    order: FractionalOrder,
    potential: PotentialSpec,
    region: PenalizationRegion,
    grid: Grid,
    v: Field,
    lambda_mask: Vec<bool>,
    policy: WellPolicy,
}

impl ModelParams {
    pub fn new(
        epsilon: f64,
        order: FractionalOrder,
        potential: PotentialSpec,
        region: PenalizationRegion,
        grid: &Grid,
    ) -> Result<Self> {
        Self::with_policy(epsilon, order, potential, region, grid, WellPolicy::Strict)
    }

    pub fn with_policy(
        epsilon: f64,
        order: FractionalOrder,
        potential: PotentialSpec,
        region: PenalizationRegion,
        grid: &Grid,
        policy: WellPolicy,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("ε must be positive, got {epsilon}")));
        }
        region.check_fits(grid)?;
        let v = potential.sample(grid)?;
        let lambda_mask = region.lambda_mask(grid);
        check_well(&v, &region, &lambda_mask, policy)?;
        Ok(Self {
            epsilon,
            order,
            potential,
            region,
            grid: grid.clone(),
            v,
            lambda_mask,
            policy,
        })
    }

    /// Same model at a different `ε`.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("ε must be positive, got {epsilon}")));
        }
        Ok(Self {
            epsilon,
            ..self.clone()
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn order(&self) -> FractionalOrder {
        self.order
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    pub fn region(&self) -> &PenalizationRegion {
        &self.region
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn policy(&self) -> WellPolicy {
        self.policy
    }

    /// Sampled potential `V`.
    pub fn potential_field(&self) -> &Field {
        &self.v
    }

    pub fn lambda_mask(&self) -> &[bool] {
        &self.lambda_mask
    }

    /// `ε^{2s}`, the weight of the fractional term.
    pub fn diffusion_weight(&self) -> f64 {
        self.epsilon.powf(2.0 * self.order.value())
    }

    /// Grid argmin of `V` over `Λ`; lowest index on ties.
    pub fn argmin_in_lambda(&self) -> usize {
        let v = self.v.values();
        let mut best: Option<usize> = None;
        for (i, &inside) in self.lambda_mask.iter().enumerate() {
            if inside && best.map_or(true, |b| v[i] < v[b]) {
                best = Some(i);
            }
        }
        // check_well guarantees Λ holds at least one node
        best.unwrap_or(0)
    }

    pub fn min_v_in_lambda(&self) -> f64 {
        self.v.values()[self.argmin_in_lambda()]
    }
}

fn check_well(v: &Field, region: &PenalizationRegion, mask: &[bool], policy: WellPolicy) -> Result<()> {
    let grid = v.grid();
    let mut inf_lambda = f64::INFINITY;
    let mut inf_shell = f64::INFINITY;
    grid.for_each_node(|i, x| {
        let w = v.values()[i] + 1.0;
        if mask[i] {
            inf_lambda = inf_lambda.min(w);
        } else if region.in_outer(x) {
            inf_shell = inf_shell.min(w);
        }
    });
    if inf_lambda.is_infinite() {
        return Err(Error::InvalidRegion("Λ contains no grid node".into()));
    }
    if !(inf_lambda > 0.0) {
        return Err(Error::WellCondition(format!(
            "inf over Λ of V+1 is {inf_lambda}, must be positive"
        )));
    }
    let ok = match policy {
        WellPolicy::Strict => inf_lambda < inf_shell,
        WellPolicy::AllowFlat => inf_lambda <= inf_shell,
    };
    if !ok {
        return Err(Error::WellCondition(format!(
            "inf over Λ of V+1 = {inf_lambda} is not below inf over U∖Λ = {inf_shell}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::region::Shape;

    fn region(a: f64, b: f64) -> PenalizationRegion {
        PenalizationRegion::new(
            Shape::Box { lo: vec![-a], hi: vec![a] },
            Shape::Box { lo: vec![-b], hi: vec![b] },
        )
        .unwrap()
    }

    #[test]
    fn well_condition_strict_and_flat() {
        let g = Grid::new(1, 10.0, 128).unwrap();
        let s = FractionalOrder::new(0.5).unwrap();
        let flat = PotentialSpec::Constant(0.0);
        assert!(matches!(
            ModelParams::new(1.0, s, flat.clone(), region(2.0, 4.0), &g),
            Err(Error::WellCondition(_))
        ));
        assert!(ModelParams::with_policy(1.0, s, flat, region(2.0, 4.0), &g, WellPolicy::AllowFlat).is_ok());
        let well = PotentialSpec::QuadraticWell {
            center: vec![0.0],
            curvature: 1.0,
            cap: 2.0,
        };
        let p = ModelParams::new(0.5, s, well, region(2.0, 4.0), &g).unwrap();
        assert_eq!(p.grid().coordinates(p.argmin_in_lambda()), vec![0.0]);
        assert_eq!(p.min_v_in_lambda(), 0.0);
        assert!((p.diffusion_weight() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_epsilon_and_placement() {
        let g = Grid::new(1, 3.0, 64).unwrap();
        let s = FractionalOrder::new(0.5).unwrap();
        let flat = PotentialSpec::Constant(0.0);
        let r = region(1.0, 2.0);
        assert!(ModelParams::with_policy(0.0, s, flat.clone(), r.clone(), &g, WellPolicy::AllowFlat).is_err());
        assert!(ModelParams::with_policy(1.0, s, flat, region(1.0, 3.5), &g, WellPolicy::AllowFlat).is_err());
    }

    #[test]
    fn argmin_tie_breaks_lexicographically() {
        let g = Grid::new(2, 4.0, 16).unwrap();
        let s = FractionalOrder::new(0.5).unwrap();
        let r = PenalizationRegion::new(
            Shape::Box { lo: vec![-1.0, -1.0], hi: vec![1.0, 1.0] },
            Shape::Box { lo: vec![-2.0, -2.0], hi: vec![2.0, 2.0] },
        )
        .unwrap();
        let p = ModelParams::with_policy(1.0, s, PotentialSpec::Constant(0.5), r, &g, WellPolicy::AllowFlat).unwrap();
        // first node of Λ in row-major order is (-1, -1)
        assert_eq!(p.grid().coordinates(p.argmin_in_lambda()), vec![-1.0, -1.0]);
    }
}
