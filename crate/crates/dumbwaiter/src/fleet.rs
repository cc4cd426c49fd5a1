//! Load balancing across a fleet of identical cars.
//!
//! Passengers split as evenly as integers allow, counts differing by at
//! most one, and the split is feasible exactly when the largest share fits the
//! per-car capacity. Each car then runs as an independent single-car
//! system, so fleet statistics are pooled single-car statistics.

use thiserror::Error;

use crate::rng::derive_subseed;
use crate::spatial::{pooled_leg_moments, CallSequence, LegMoments, LegSeries, SpatialError};

#[derive(Debug, Error, PartialEq)]
pub enum FleetError {
    #[error("fleet parameter {name} must be at least 1")]
    ZeroParameter { name: &'static str },
    #[error("infeasible fleet: {passengers} passengers exceed {elevators} cars x capacity {capacity} = {max}")]
    Infeasible {
        passengers: u32,
        elevators: u32,
        capacity: u32,
        max: u64,
    },
    #[error(transparent)]
    Spatial(#[from] SpatialError),
}

/// `m` cars of capacity `n` facing `A` passengers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FleetSpec {
    pub elevators: u32,
    pub capacity: u32,
    pub passengers: u32,
}

impl FleetSpec {
    pub fn validate(&self) -> Result<(), FleetError> {
        if self.elevators == 0 {
            return Err(FleetError::ZeroParameter { name: "elevators" });
        }
        if self.capacity == 0 {
            return Err(FleetError::ZeroParameter { name: "capacity" });
        }
        Ok(())
    }
}

/// Balanced per-car passenger counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FleetAssignment {
    /// `A mod m` cars carry `ceil(A / m)`, the rest `floor(A / m)`.
    pub counts: Vec<u32>,
    /// Whether every count fits the capacity.
    pub feasible: bool,
}

/// Max-min-fair integer split of the passengers over the cars.
/// Infeasibility is reported, not raised: the split is returned either way.
pub fn distribute(spec: &FleetSpec) -> Result<FleetAssignment, FleetError> {
    spec.validate()?;
    let m = spec.elevators;
    let base = spec.passengers / m;
    let remainder = spec.passengers % m;
    let counts: Vec<u32> = (0..m)
        .map(|i| if i < remainder { base + 1 } else { base })
        .collect();
    let largest = counts.first().copied().unwrap_or(0);
    Ok(FleetAssignment {
        counts,
        feasible: largest <= spec.capacity,
    })
}

/// Statistics of one car's run within a fleet simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ElevatorMetrics {
    pub sub_seed: u64,
    pub total_distance: f64,
    pub moments: LegMoments,
}

/// Aggregate outcome of a fleet simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct FleetMetrics {
    pub assignment: FleetAssignment,
    pub per_elevator: Vec<ElevatorMetrics>,
    /// Moments over all cars' legs pooled together (lag pairs never cross
    /// car boundaries).
    pub pooled_moments: LegMoments,
    pub pooled_total_distance: f64,
}

/// Runs `m` independent single-car simulations of `legs_per_elevator` legs
/// each. Car `k` uses `derive_subseed(seed, k)`, so per-car results do not
/// depend on how many cars run or in which order. Needs a feasible spec
/// and at least 3 legs per car.
pub fn fleet_simulation(
    spec: &FleetSpec,
    legs_per_elevator: usize,
    seed: u64,
) -> Result<FleetMetrics, FleetError> {
    let assignment = distribute(spec)?;
    if !assignment.feasible {
        return Err(FleetError::Infeasible {
            passengers: spec.passengers,
            elevators: spec.elevators,
            capacity: spec.capacity,
            max: u64::from(spec.elevators) * u64::from(spec.capacity),
        });
    }
    let mut per_elevator = Vec::with_capacity(spec.elevators as usize);
    let mut all_series: Vec<LegSeries> = Vec::with_capacity(spec.elevators as usize);
    for car in 0..u64::from(spec.elevators) {
        let sub_seed = derive_subseed(seed, car);
        let legs = CallSequence::generate(legs_per_elevator, sub_seed)?.leg_series()?;
        per_elevator.push(ElevatorMetrics {
            sub_seed,
            total_distance: legs.total_distance(),
            moments: legs.empirical_moments()?,
        });
        all_series.push(legs);
    }
    let pooled_moments = pooled_leg_moments(&all_series)?;
    let pooled_total_distance = per_elevator.iter().map(|c| c.total_distance).sum();
    Ok(FleetMetrics {
        assignment,
        per_elevator,
        pooled_moments,
        pooled_total_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(m: u32, n: u32, a: u32) -> FleetSpec {
        FleetSpec {
            elevators: m,
            capacity: n,
            passengers: a,
        }
    }

    #[test]
    fn ceiling_floor_split() {
        let assignment = distribute(&spec(3, 10, 10)).unwrap();
        assert_eq!(assignment.counts, vec![4, 3, 3]);
        assert!(assignment.feasible);
    }

    #[test]
    fn overfull_split_reported_infeasible() {
        let assignment = distribute(&spec(2, 3, 10)).unwrap();
        assert_eq!(assignment.counts, vec![5, 5]);
        assert!(!assignment.feasible);
    }

    #[test]
    fn empty_load_is_feasible() {
        let assignment = distribute(&spec(4, 5, 0)).unwrap();
        assert_eq!(assignment.counts, vec![0, 0, 0, 0]);
        assert!(assignment.feasible);
    }

    #[test]
    fn zero_elevators_rejected() {
        assert_eq!(
            distribute(&spec(0, 5, 3)),
            Err(FleetError::ZeroParameter { name: "elevators" })
        );
    }

    #[test]
    fn single_car_fleet_reduces_to_one_spatial_run() {
        let metrics = fleet_simulation(&spec(1, 10, 5), 5000, 99).unwrap();
        let sub_seed = derive_subseed(99, 0);
        let legs = CallSequence::generate(5000, sub_seed)
            .unwrap()
            .leg_series()
            .unwrap();
        assert_eq!(metrics.per_elevator.len(), 1);
        assert_eq!(metrics.per_elevator[0].sub_seed, sub_seed);
        assert_eq!(metrics.pooled_moments, legs.empirical_moments().unwrap());
        assert_eq!(metrics.pooled_total_distance, legs.total_distance());
    }

    #[test]
    fn pooled_mean_close_to_one_third() {
        let metrics = fleet_simulation(&spec(4, 5, 8), 250_000, 2).unwrap();
        assert!(
            (metrics.pooled_moments.mean - 1.0 / 3.0).abs() < 0.002,
            "pooled mean {}",
            metrics.pooled_moments.mean
        );
    }

    #[test]
    fn simulation_is_deterministic() {
        let a = fleet_simulation(&spec(3, 4, 9), 1000, 7).unwrap();
        let b = fleet_simulation(&spec(3, 4, 9), 1000, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn infeasible_simulation_is_an_error() {
        assert!(matches!(
            fleet_simulation(&spec(2, 3, 10), 100, 0),
            Err(FleetError::Infeasible { max: 6, .. })
        ));
    }

    proptest! {
        #[test]
        fn split_is_balanced_and_conserving(m in 1u32..=100, a in 0u32..=10_000) {
            let assignment = distribute(&spec(m, u32::MAX, a)).unwrap();
            let total: u64 = assignment.counts.iter().map(|&c| u64::from(c)).sum();
            prop_assert_eq!(total, u64::from(a));
            let max = assignment.counts.iter().copied().max().unwrap();
            let min = assignment.counts.iter().copied().min().unwrap();
            prop_assert!(max - min <= 1);
        }

        #[test]
        fn feasibility_flips_exactly_at_capacity(m in 1u32..=100, n in 1u32..=100) {
            let boundary = m * n;
            prop_assert!(distribute(&spec(m, n, boundary)).unwrap().feasible);
            prop_assert!(!distribute(&spec(m, n, boundary + 1)).unwrap().feasible);
        }
    }
}
