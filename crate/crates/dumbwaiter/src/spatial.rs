//! Continuous single-car model on a normalized `[0, 1]` shaft.
//!
//! Call positions are i.i.d. standard uniform, the car visits them in
//! arrival order, and a *leg* is the absolute distance between two
//! consecutive stops. Leg lengths follow the density `2(1 - r)` on
//! `[0, 1]`, giving mean `1/3`, variance `1/18`, a lag-1 product moment of
//! `7/60` (autocorrelation `0.1`), and exact independence at lag 2 and
//! beyond. The module pairs those closed forms with seeded simulation and
//! empirical estimators, plus the three-call batching rule whose route
//! length (the batch range) never exceeds in-order service.

use thiserror::Error;

use crate::rng::SplitMix64;

#[derive(Debug, Error, PartialEq)]
pub enum SpatialError {
    #[error("n_legs must be at least 1")]
    ZeroLegs,
    #[error("need at least {needed} positions, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("position {value} at index {index} is outside [0, 1]")]
    PositionOutOfRange { index: usize, value: f64 },
    #[error("leg {value} at index {index} is outside [0, 1]")]
    LegOutOfRange { index: usize, value: f64 },
    #[error("mean leg fraction {0} is outside [0, 1]")]
    FractionOutOfRange(f64),
    #[error("building parameter {name} must be positive and finite, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("n_batches must be at least 1")]
    ZeroBatches,
}

/// Ordered stop positions of one service trajectory, normalized to
/// building height. A sequence of `n + 1` positions yields `n` legs.
#[derive(Debug, Clone, PartialEq)]
pub struct CallSequence {
    positions: Vec<f64>,
    seed: Option<u64>,
}

impl CallSequence {
    /// Draws `n_legs + 1` i.i.d. uniform positions from the given seed.
    /// Identical `(n_legs, seed)` inputs produce bit-identical sequences
    /// on every platform.
    pub fn generate(n_legs: usize, seed: u64) -> Result<Self, SpatialError> {
        if n_legs == 0 {
            return Err(SpatialError::ZeroLegs);
        }
        let mut rng = SplitMix64::new(seed);
        let positions = (0..=n_legs).map(|_| rng.next_f64()).collect();
        Ok(Self {
            positions,
            seed: Some(seed),
        })
    }

    /// Wraps user-supplied positions, validating the `[0, 1]` range.
    pub fn from_positions(positions: Vec<f64>) -> Result<Self, SpatialError> {
        if positions.is_empty() {
            return Err(SpatialError::TooShort { needed: 1, got: 0 });
        }
        for (index, &value) in positions.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(SpatialError::PositionOutOfRange { index, value });
            }
        }
        Ok(Self {
            positions,
            seed: None,
        })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Seed the sequence was generated from; `None` for user-supplied data.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Absolute successive differences: `legs[k] = |positions[k+1] - positions[k]|`.
    pub fn leg_series(&self) -> Result<LegSeries, SpatialError> {
        if self.positions.len() < 2 {
            return Err(SpatialError::TooShort {
                needed: 2,
                got: self.positions.len(),
            });
        }
        let legs = self
            .positions
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .collect();
        Ok(LegSeries { legs })
    }

    /// Signed successive differences, in `[-1, 1]`. Not retained by
    /// [`LegSeries`]; exposed for distribution checks.
    pub fn signed_differences(&self) -> Vec<f64> {
        self.positions.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Per-leg travel distances of a trajectory, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LegSeries {
    legs: Vec<f64>,
}

impl LegSeries {
    pub fn new(legs: Vec<f64>) -> Result<Self, SpatialError> {
        for (index, &value) in legs.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(SpatialError::LegOutOfRange { index, value });
            }
        }
        Ok(Self { legs })
    }

    pub fn legs(&self) -> &[f64] {
        &self.legs
    }

    pub fn len(&self) -> usize {
        self.legs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.legs.is_empty()
    }

    /// Total traversed distance in building-height units (the empty sum is 0).
    pub fn total_distance(&self) -> f64 {
        self.legs.iter().sum()
    }

    /// Sample statistics over this series; needs at least 3 legs so the
    /// lag-2 estimator is defined.
    pub fn empirical_moments(&self) -> Result<LegMoments, SpatialError> {
        pooled_leg_moments(std::slice::from_ref(self))
    }
}

/// First and second-order statistics of a leg series, analytic or sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegMoments {
    pub mean: f64,
    pub variance: f64,
    /// `E[R_k R_{k-1}]`, the uncentered product of adjacent legs.
    pub lag1_product_moment: f64,
    pub lag1_autocovariance: f64,
    pub lag1_autocorrelation: f64,
    pub lag2_autocorrelation: f64,
}

/// Exact closed-form moments of the leg distribution under uniform calls.
pub fn analytic_leg_moments() -> LegMoments {
    LegMoments {
        mean: 1.0 / 3.0,
        variance: 1.0 / 18.0,
        lag1_product_moment: 7.0 / 60.0,
        lag1_autocovariance: 1.0 / 180.0,
        lag1_autocorrelation: 0.1,
        lag2_autocorrelation: 0.0,
    }
}

/// Density of a single leg length: `2(1 - r)` on `[0, 1]`, zero elsewhere.
pub fn leg_pdf(r: f64) -> f64 {
    if (0.0..=1.0).contains(&r) {
        2.0 * (1.0 - r)
    } else {
        0.0
    }
}

/// Pools sample moments across several independent leg series. Mean and
/// variance treat the pooled legs as one sample; lag statistics pair legs
/// only within a series, never across the seam between two series.
/// Every series must contribute at least 3 legs.
///
/// Variance uses the `n - 1` denominator. Autocovariances are the biased
/// lag-product estimator (denominator `n`), and autocorrelations divide
/// the centered lag sums by the centered sum of squares, so a constant
/// series reports autocorrelation 0 rather than 0/0.
pub fn pooled_leg_moments(group: &[LegSeries]) -> Result<LegMoments, SpatialError> {
    let mut n = 0usize;
    let mut sum = 0.0;
    for series in group {
        if series.len() < 3 {
            return Err(SpatialError::TooShort {
                needed: 3,
                got: series.len(),
            });
        }
        n += series.len();
        sum += series.legs.iter().sum::<f64>();
    }
    if group.is_empty() {
        return Err(SpatialError::TooShort { needed: 3, got: 0 });
    }
    let mean = sum / n as f64;

    let mut centered_sq = 0.0;
    let mut centered_lag = [0.0f64; 2];
    let mut raw_lag1 = 0.0;
    let mut raw_lag1_count = 0usize;
    for series in group {
        let x = &series.legs;
        for &v in x {
            centered_sq += (v - mean) * (v - mean);
        }
        for lag in 1..=2 {
            for t in 0..(x.len() - lag) {
                centered_lag[lag - 1] += (x[t] - mean) * (x[t + lag] - mean);
            }
        }
        for t in 0..(x.len() - 1) {
            raw_lag1 += x[t] * x[t + 1];
        }
        raw_lag1_count += x.len() - 1;
    }

    let variance = centered_sq / (n - 1) as f64;
    let (lag1_autocorrelation, lag2_autocorrelation) = if centered_sq == 0.0 {
        (0.0, 0.0)
    } else {
        (centered_lag[0] / centered_sq, centered_lag[1] / centered_sq)
    };
    Ok(LegMoments {
        mean,
        variance,
        lag1_product_moment: raw_lag1 / raw_lag1_count as f64,
        lag1_autocovariance: centered_lag[0] / n as f64,
        lag1_autocorrelation,
        lag2_autocorrelation,
    })
}

/// Route lengths for one batch of three calls: the batching car sweeps the
/// batch range once, the in-order car walks the calls as they came.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaitressRoute {
    /// `max(batch) - min(batch)`: one sweep covering all three stops.
    pub waitress_length: f64,
    /// `|x_c - x_b| + |x_b - x_a|`: in-order service, visit order preserved.
    pub dumbwaiter_length: f64,
}

/// Compares batched service against in-order service for three calls
/// `(x_a, x_b, x_c)` given in arrival order. By the triangle inequality
/// the batched length never exceeds the in-order length.
pub fn waitress_route(batch: [f64; 3]) -> Result<WaitressRoute, SpatialError> {
    for (index, &value) in batch.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(SpatialError::PositionOutOfRange { index, value });
        }
    }
    let [a, b, c] = batch;
    let lo = a.min(b).min(c);
    let hi = a.max(b).max(c);
    let dumbwaiter_length = (c - b).abs() + (b - a).abs();
    // Exact for positions on the 2^-53 grid; for arbitrary inputs the two
    // subtractions plus the add can land a fraction of an ulp below the
    // range, so pin the invariant.
    let waitress_length = (hi - lo).min(dumbwaiter_length);
    Ok(WaitressRoute {
        waitress_length,
        dumbwaiter_length,
    })
}

/// Monte Carlo summary over i.i.d. uniform three-call batches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaitressSummary {
    pub batches: usize,
    /// Mean of `waitress_length / dumbwaiter_length`; a degenerate 0/0
    /// batch counts as ratio 1.
    pub mean_improvement_ratio: f64,
    /// Batches where the batched route was strictly shorter.
    pub strict_improvements: usize,
    /// Batches where the batched route came out longer. Always 0.
    pub violations: usize,
}

pub fn waitress_summary(n_batches: usize, seed: u64) -> Result<WaitressSummary, SpatialError> {
    if n_batches == 0 {
        return Err(SpatialError::ZeroBatches);
    }
    let mut rng = SplitMix64::new(seed);
    let mut ratio_sum = 0.0;
    let mut strict_improvements = 0usize;
    let mut violations = 0usize;
    for _ in 0..n_batches {
        let batch = [rng.next_f64(), rng.next_f64(), rng.next_f64()];
        let route = waitress_route(batch).expect("generated positions are in [0, 1]");
        ratio_sum += improvement_ratio(&route);
        if route.waitress_length < route.dumbwaiter_length {
            strict_improvements += 1;
        }
        if route.waitress_length > route.dumbwaiter_length {
            violations += 1;
        }
    }
    Ok(WaitressSummary {
        batches: n_batches,
        mean_improvement_ratio: ratio_sum / n_batches as f64,
        strict_improvements,
        violations,
    })
}

/// `waitress_length / dumbwaiter_length`, with the 0/0 batch (all three
/// calls at the same position) defined as 1.
pub fn improvement_ratio(route: &WaitressRoute) -> f64 {
    if route.dumbwaiter_length == 0.0 {
        1.0
    } else {
        route.waitress_length / route.dumbwaiter_length
    }
}

/// Mean batching improvement ratio over `n_batches` seeded uniform triples.
pub fn mean_improvement_ratio(n_batches: usize, seed: u64) -> Result<f64, SpatialError> {
    Ok(waitress_summary(n_batches, seed)?.mean_improvement_ratio)
}

/// Physical building parameters for converting normalized distances into
/// travel time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildingSpec {
    floors: u32,
    floor_height_m: f64,
    elevator_speed_m_per_min: f64,
}

impl BuildingSpec {
    pub fn new(
        floors: u32,
        floor_height_m: f64,
        elevator_speed_m_per_min: f64,
    ) -> Result<Self, SpatialError> {
        if floors == 0 {
            return Err(SpatialError::NonPositiveParameter {
                name: "floors",
                value: 0.0,
            });
        }
        if !(floor_height_m > 0.0 && floor_height_m.is_finite()) {
            return Err(SpatialError::NonPositiveParameter {
                name: "floor_height_m",
                value: floor_height_m,
            });
        }
        if !(elevator_speed_m_per_min > 0.0 && elevator_speed_m_per_min.is_finite()) {
            return Err(SpatialError::NonPositiveParameter {
                name: "elevator_speed_m_per_min",
                value: elevator_speed_m_per_min,
            });
        }
        Ok(Self {
            floors,
            floor_height_m,
            elevator_speed_m_per_min,
        })
    }

    pub fn floors(&self) -> u32 {
        self.floors
    }

    pub fn floor_height_m(&self) -> f64 {
        self.floor_height_m
    }

    pub fn elevator_speed_m_per_min(&self) -> f64 {
        self.elevator_speed_m_per_min
    }

    pub fn total_height_m(&self) -> f64 {
        f64::from(self.floors) * self.floor_height_m
    }
}

/// Exact mean service time per call, in seconds, for a car that travels
/// `mean_leg_fraction` of the building height per call at constant speed.
pub fn seconds_per_call(
    building: &BuildingSpec,
    mean_leg_fraction: f64,
) -> Result<f64, SpatialError> {
    if !(0.0..=1.0).contains(&mean_leg_fraction) {
        return Err(SpatialError::FractionOutOfRange(mean_leg_fraction));
    }
    Ok(mean_leg_fraction * building.total_height_m() / building.elevator_speed_m_per_min() * 60.0)
}

/// Same conversion but with the minute figure rounded to one decimal place
/// before scaling to seconds: the back-of-envelope variant (e.g. 14/45 min
/// rounds to 0.3 min = 18 s where the exact value is 18.67 s).
pub fn seconds_per_call_rounded(
    building: &BuildingSpec,
    mean_leg_fraction: f64,
) -> Result<f64, SpatialError> {
    if !(0.0..=1.0).contains(&mean_leg_fraction) {
        return Err(SpatialError::FractionOutOfRange(mean_leg_fraction));
    }
    let minutes = mean_leg_fraction * building.total_height_m() / building.elevator_speed_m_per_min();
    Ok((minutes * 10.0).round() / 10.0 * 60.0)
}
