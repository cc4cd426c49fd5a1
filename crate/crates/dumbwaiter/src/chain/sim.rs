//! Seeded trajectory sampling: the Monte Carlo oracle the exact solver is
//! checked against.

use crate::rng::{derive_subseed, SplitMix64};

use super::{ChainError, CompositeState, TransitionMatrix};

/// Per-episode step budget; valid chains hit their targets many orders of
/// magnitude sooner.
pub const EPISODE_STEP_CAP: u64 = 10_000_000;

/// Sample mean and standard error of a hitting time estimated from
/// independent episodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McHittingEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub episodes: usize,
}

impl TransitionMatrix {
    /// Samples a path of `steps` transitions starting at `start`, using
    /// each row as a categorical distribution. The returned trajectory has
    /// `steps + 1` states and is a pure function of
    /// `(matrix, start, steps, seed)`.
    pub fn simulate(
        &self,
        start: CompositeState,
        steps: usize,
        seed: u64,
    ) -> Result<Vec<CompositeState>, ChainError> {
        let mut current = self
            .state_index(start)
            .ok_or(ChainError::UnknownState { state: start })?;
        let mut rng = SplitMix64::new(seed);
        let mut trajectory = Vec::with_capacity(steps + 1);
        trajectory.push(self.state_at(current));
        for _ in 0..steps {
            current = self.step(current, &mut rng);
            trajectory.push(self.state_at(current));
        }
        Ok(trajectory)
    }

    #[inline]
    fn step(&self, from: usize, rng: &mut SplitMix64) -> usize {
        let row = self.row(from);
        let u = rng.next_f64();
        let mut cumulative = 0.0;
        for &(col, p) in row {
            cumulative += p;
            if u < cumulative {
                return col;
            }
        }
        // Row sums can fall a few ulp short of 1; land on the last entry.
        row.last().map(|&(col, _)| col).unwrap_or(from)
    }

    /// Estimates the expected first hitting time from `start` to `target`
    /// over `episodes` independent runs. Episode `k` draws from the
    /// sub-seed `derive_subseed(seed, k)`, so the estimate does not depend
    /// on evaluation order or parallelism.
    pub fn monte_carlo_hitting_time(
        &self,
        start: CompositeState,
        target: CompositeState,
        episodes: usize,
        seed: u64,
    ) -> Result<McHittingEstimate, ChainError> {
        if episodes == 0 {
            return Err(ChainError::ZeroEpisodes);
        }
        let start_idx = self
            .state_index(start)
            .ok_or(ChainError::UnknownState { state: start })?;
        let target_idx = self
            .state_index(target)
            .ok_or(ChainError::UnknownState { state: target })?;

        let mut mean = 0.0;
        let mut m2 = 0.0;
        for episode in 0..episodes {
            let mut rng = SplitMix64::new(derive_subseed(seed, episode as u64));
            let mut current = start_idx;
            let mut steps = 0u64;
            while current != target_idx {
                current = self.step(current, &mut rng);
                steps += 1;
                if steps > EPISODE_STEP_CAP {
                    return Err(ChainError::EpisodeCap {
                        cap: EPISODE_STEP_CAP,
                    });
                }
            }
            // Welford update keeps a single pass numerically stable.
            let x = steps as f64;
            let delta = x - mean;
            mean += delta / (episode + 1) as f64;
            m2 += delta * (x - mean);
        }
        let std_error = if episodes > 1 {
            (m2 / (episodes - 1) as f64 / episodes as f64).sqrt()
        } else {
            0.0
        };
        Ok(McHittingEstimate {
            mean,
            std_error,
            episodes,
        })
    }
}

/// Monte Carlo counterpart of the exact per-target report: estimates each
/// target floor's expected hitting time under the same start convention
/// (average over the other empty states, or one fixed start floor).
/// Per-start estimates combine by averaging means and pooling standard
/// errors in quadrature; episode counts are totals over the starts.
pub fn monte_carlo_objective_estimates(
    matrix: &TransitionMatrix,
    episodes: usize,
    seed: u64,
    start_floor: Option<usize>,
) -> Result<Vec<(usize, McHittingEstimate)>, ChainError> {
    let n = matrix.n_floors();
    if let Some(floor) = start_floor {
        if floor == 0 || floor > n {
            return Err(ChainError::FloorOutOfRange { floor, floors: n });
        }
    }
    let mut estimates = Vec::with_capacity(n);
    for i in 1..=n {
        let target = CompositeState::empty(i);
        let starts: Vec<CompositeState> = match start_floor {
            Some(floor) => vec![CompositeState::empty(floor)],
            None => (1..=n)
                .filter(|&j| j != i)
                .map(CompositeState::empty)
                .collect(),
        };
        let mut mean = 0.0;
        let mut variance = 0.0;
        let mut total_episodes = 0;
        for start in &starts {
            let pair = (i * (n + 1) + start.floor()) as u64;
            let estimate = matrix.monte_carlo_hitting_time(
                *start,
                target,
                episodes,
                derive_subseed(seed, pair),
            )?;
            mean += estimate.mean / starts.len() as f64;
            variance += (estimate.std_error / starts.len() as f64).powi(2);
            total_episodes += estimate.episodes;
        }
        estimates.push((
            i,
            McHittingEstimate {
                mean,
                std_error: variance.sqrt(),
                episodes: total_episodes,
            },
        ));
    }
    Ok(estimates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{two_floor_shuttle, ChainSpec, MovementPolicy};

    fn shuttle_matrix() -> TransitionMatrix {
        TransitionMatrix::build(&ChainSpec {
            floors: 2,
            call_probabilities: vec![0.0, 0.0],
            policy: two_floor_shuttle(),
        })
        .unwrap()
    }

    #[test]
    fn zero_steps_returns_start_only() {
        let matrix = shuttle_matrix();
        let start = CompositeState::empty(1);
        assert_eq!(matrix.simulate(start, 0, 9).unwrap(), vec![start]);
    }

    #[test]
    fn shuttle_trajectory_alternates() {
        let matrix = shuttle_matrix();
        let trajectory = matrix.simulate(CompositeState::empty(1), 10, 3).unwrap();
        for (t, state) in trajectory.iter().enumerate() {
            let expected = if t % 2 == 0 { 1 } else { 2 };
            assert_eq!(state.floor(), expected);
            assert_eq!(state.waiting(), 0);
        }
    }

    #[test]
    fn simulate_is_deterministic() {
        let spec = ChainSpec {
            floors: 3,
            call_probabilities: vec![0.1, 0.1, 0.1],
            policy: MovementPolicy::Uniform,
        };
        let matrix = TransitionMatrix::build(&spec).unwrap();
        let a = matrix.simulate(CompositeState::empty(2), 5000, 77).unwrap();
        let b = matrix.simulate(CompositeState::empty(2), 5000, 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_start_rejected() {
        let matrix = shuttle_matrix();
        let bogus = CompositeState::empty(7);
        assert!(matches!(
            matrix.simulate(bogus, 1, 0),
            Err(ChainError::UnknownState { .. })
        ));
    }

    #[test]
    fn visit_frequencies_match_stationary_distribution() {
        let spec = ChainSpec {
            floors: 3,
            call_probabilities: vec![0.1, 0.1, 0.1],
            policy: MovementPolicy::Uniform,
        };
        let matrix = TransitionMatrix::build(&spec).unwrap();
        let pi = matrix.stationary_distribution().unwrap();
        let steps = 1_000_000;
        let trajectory = matrix.simulate(CompositeState::empty(1), steps, 123).unwrap();
        let mut counts = vec![0usize; matrix.dimension()];
        for state in &trajectory[1..] {
            counts[matrix.state_index(*state).unwrap()] += 1;
        }
        let tv: f64 = counts
            .iter()
            .zip(&pi)
            .map(|(&c, &p)| (c as f64 / steps as f64 - p).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.01, "total variation {tv}");
    }

    #[test]
    fn monte_carlo_agrees_with_exact_solve_on_shuttle() {
        let matrix = shuttle_matrix();
        let estimate = matrix
            .monte_carlo_hitting_time(CompositeState::empty(1), CompositeState::empty(2), 100, 5)
            .unwrap();
        // Deterministic chain: every episode takes exactly one step.
        assert_eq!(estimate.mean, 1.0);
        assert_eq!(estimate.std_error, 0.0);
    }
}
