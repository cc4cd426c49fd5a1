//! Exact first-hitting-time computation via the absorbing-chain linear
//! system: `h(target) = 0` and `h(s) = 1 + sum_s' P(s, s') h(s')` for
//! every other state, solved by dense LU factorization with a residual
//! check and one round of iterative refinement.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::{ChainError, CompositeState, TransitionMatrix};

/// Maximum acceptable infinity-norm residual of the hitting-time solve.
pub const SOLVER_RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Expected hitting times to each empty-building target, plus their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingTimeReport {
    /// Target floor `i` mapped to `E[tau_i]` averaged over the other
    /// empty-building start states.
    pub per_target: BTreeMap<usize, f64>,
    /// Sum of the per-target values: the quantity policy search minimizes.
    pub objective: f64,
}

impl TransitionMatrix {
    /// Expected number of steps to first reach `target` from each state in
    /// `starts`. Errors when a start cannot reach the target, or can with
    /// positive probability wander somewhere the target is unreachable
    /// from (which makes the expectation infinite).
    pub fn expected_hitting_times(
        &self,
        target: CompositeState,
        starts: &[CompositeState],
    ) -> Result<BTreeMap<CompositeState, f64>, ChainError> {
        let target_idx = self
            .state_index(target)
            .ok_or(ChainError::UnknownState { state: target })?;
        let mut start_indices = Vec::with_capacity(starts.len());
        for &start in starts {
            start_indices.push(
                self.state_index(start)
                    .ok_or(ChainError::UnknownState { state: start })?,
            );
        }

        let can_reach = self.reverse_reachable(target_idx);
        for (&start, &idx) in starts.iter().zip(&start_indices) {
            if !can_reach[idx] {
                return Err(ChainError::UnreachableTarget { start, target });
            }
        }
        if can_reach.iter().any(|&r| !r) {
            // Some state cannot reach the target at all. Any start that can
            // stray into that region before hitting the target has an
            // infinite expected hitting time.
            let divergent = self.divergent_states(target_idx, &can_reach);
            for (&start, &idx) in starts.iter().zip(&start_indices) {
                if divergent[idx] {
                    return Err(ChainError::UnreachableTarget { start, target });
                }
            }
        }

        // Unknowns: states that can reach the target, minus the target.
        let unknowns: Vec<usize> = (0..self.dimension())
            .filter(|&i| can_reach[i] && i != target_idx)
            .collect();
        let mut position = vec![usize::MAX; self.dimension()];
        for (pos, &i) in unknowns.iter().enumerate() {
            position[i] = pos;
        }

        let n = unknowns.len();
        let mut h = DVector::zeros(0);
        if n > 0 {
            let mut a = DMatrix::<f64>::identity(n, n);
            for (row_pos, &i) in unknowns.iter().enumerate() {
                for &(j, p) in self.row(i) {
                    if j != target_idx && position[j] != usize::MAX {
                        a[(row_pos, position[j])] -= p;
                    }
                }
            }
            // (b - A h) computed from the sparse rows, so the dense matrix
            // can be handed to the factorization instead of cloned.
            let residual_vector = |h: &DVector<f64>| -> DVector<f64> {
                let mut r = DVector::from_element(n, 1.0);
                for (row_pos, &i) in unknowns.iter().enumerate() {
                    r[row_pos] -= h[row_pos];
                    for &(j, p) in self.row(i) {
                        if j != target_idx && position[j] != usize::MAX {
                            r[row_pos] += p * h[position[j]];
                        }
                    }
                }
                r
            };
            let b = DVector::from_element(n, 1.0);
            let lu = a.lu();
            let mut solution = lu
                .solve(&b)
                .ok_or(ChainError::SolverResidual {
                    residual: f64::INFINITY,
                    tolerance: SOLVER_RESIDUAL_TOLERANCE,
                })?;
            let mut residual = residual_vector(&solution).abs().max();
            if residual > SOLVER_RESIDUAL_TOLERANCE {
                if let Some(correction) = lu.solve(&residual_vector(&solution)) {
                    solution += correction;
                    residual = residual_vector(&solution).abs().max();
                }
                if residual > SOLVER_RESIDUAL_TOLERANCE {
                    return Err(ChainError::SolverResidual {
                        residual,
                        tolerance: SOLVER_RESIDUAL_TOLERANCE,
                    });
                }
            }
            h = solution;
        }

        let mut result = BTreeMap::new();
        for (&start, &idx) in starts.iter().zip(&start_indices) {
            let value = if idx == target_idx {
                0.0
            } else {
                h[position[idx]]
            };
            result.insert(start, value);
        }
        Ok(result)
    }

    /// States that, avoiding the target, can still reach somewhere the
    /// target is unreachable from.
    fn divergent_states(&self, target_idx: usize, can_reach: &[bool]) -> Vec<bool> {
        let n = self.dimension();
        let mut rev = vec![Vec::new(); n];
        for (i, row) in (0..n).map(|i| (i, self.row(i))) {
            if i == target_idx {
                continue;
            }
            for &(j, v) in row {
                if v > 0.0 && j != target_idx {
                    rev[j].push(i);
                }
            }
        }
        let mut divergent = vec![false; n];
        let mut queue: Vec<usize> = (0..n).filter(|&i| !can_reach[i]).collect();
        for &i in &queue {
            divergent[i] = true;
        }
        while let Some(node) = queue.pop() {
            for &prev in &rev[node] {
                if !divergent[prev] {
                    divergent[prev] = true;
                    queue.push(prev);
                }
            }
        }
        divergent
    }

    /// Unique stationary distribution of the chain, solved from
    /// `pi P = pi` with the normalization `sum pi = 1`. Requires a single
    /// recurrent class.
    pub fn stationary_distribution(&self) -> Result<Vec<f64>, ChainError> {
        let n = self.dimension();
        // A = P^T - I with the last row replaced by the normalization row.
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for &(j, p) in self.row(i) {
                a[(j, i)] += p;
            }
            a[(i, i)] -= 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut b = DVector::zeros(n);
        b[n - 1] = 1.0;
        let pi = a.lu().solve(&b).ok_or(ChainError::NoStationaryDistribution)?;
        // Transient states solve to exact zeros up to rounding; clamp and
        // renormalize so the result is a distribution.
        let mut out: Vec<f64> = pi.iter().map(|&x| x.max(0.0)).collect();
        let total: f64 = out.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(ChainError::NoStationaryDistribution);
        }
        for x in &mut out {
            *x /= total;
        }
        // A chain with several closed classes can slip past LU as a
        // nearly singular system; reject anything that is not actually a
        // fixed point of the kernel.
        let mut propagated = vec![0.0; n];
        for (i, &mass) in out.iter().enumerate() {
            for &(j, p) in self.row(i) {
                propagated[j] += mass * p;
            }
        }
        let residual = propagated
            .iter()
            .zip(&out)
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if residual > SOLVER_RESIDUAL_TOLERANCE {
            return Err(ChainError::NoStationaryDistribution);
        }
        Ok(out)
    }
}

/// The summed-hitting-time objective for a built kernel: for every target
/// floor `i`, the expected time to reach the empty-building state on floor
/// `i`, averaged over starts at the other empty-building states, all summed.
/// A single-floor building scores 0.
pub fn objective_from_matrix(matrix: &TransitionMatrix) -> Result<HittingTimeReport, ChainError> {
    hitting_time_report(matrix, None)
}

/// Like [`objective_from_matrix`], but with a fixed start: every target's
/// expectation is taken from the empty-building state on `start_floor`
/// instead of averaging over the other empty states.
pub fn hitting_time_report(
    matrix: &TransitionMatrix,
    start_floor: Option<usize>,
) -> Result<HittingTimeReport, ChainError> {
    let n = matrix.n_floors();
    if let Some(floor) = start_floor {
        if floor == 0 || floor > n {
            return Err(ChainError::FloorOutOfRange { floor, floors: n });
        }
    }
    let mut per_target = BTreeMap::new();
    let mut objective = 0.0;
    for i in 1..=n {
        let target = CompositeState::empty(i);
        let starts: Vec<CompositeState> = match start_floor {
            Some(floor) => vec![CompositeState::empty(floor)],
            None => (1..=n)
                .filter(|&j| j != i)
                .map(CompositeState::empty)
                .collect(),
        };
        let value = if starts.is_empty() {
            0.0
        } else {
            let times = matrix.expected_hitting_times(target, &starts)?;
            times.values().sum::<f64>() / starts.len() as f64
        };
        per_target.insert(i, value);
        objective += value;
    }
    Ok(HittingTimeReport {
        per_target,
        objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{
        objective, two_floor_shuttle, ChainSpec, MoveDistribution, MovementPolicy,
    };
    use approx::assert_relative_eq;

    #[test]
    fn two_state_geometric_hitting_time() {
        // From floor 1 the car moves up with probability q, else stays;
        // reaching floor 2 is geometric with mean 1/q.
        let q = 0.25;
        let table = vec![
            MoveDistribution { up: q, down: 0.0, stay: 1.0 - q },
            MoveDistribution { up: q, down: 0.0, stay: 1.0 - q },
            MoveDistribution { up: 0.0, down: 0.6, stay: 0.4 },
            MoveDistribution { up: 0.0, down: 0.6, stay: 0.4 },
        ];
        let spec = ChainSpec {
            floors: 2,
            call_probabilities: vec![0.0, 0.0],
            policy: MovementPolicy::Explicit(table),
        };
        let matrix = TransitionMatrix::build(&spec).unwrap();
        let start = CompositeState::empty(1);
        let target = CompositeState::empty(2);
        let times = matrix.expected_hitting_times(target, &[start]).unwrap();
        assert_relative_eq!(times[&start], 1.0 / q, epsilon = 1e-9);
    }

    #[test]
    fn hitting_time_to_self_is_zero() {
        let spec = ChainSpec {
            floors: 1,
            call_probabilities: vec![0.0],
            policy: MovementPolicy::Uniform,
        };
        let matrix = TransitionMatrix::build(&spec).unwrap();
        let s = CompositeState::empty(1);
        let times = matrix.expected_hitting_times(s, &[s]).unwrap();
        assert_eq!(times[&s], 0.0);
    }

    #[test]
    fn shuttle_objective_is_two() {
        let spec = ChainSpec {
            floors: 2,
            call_probabilities: vec![0.0, 0.0],
            policy: two_floor_shuttle(),
        };
        let report = objective(&spec).unwrap();
        assert_relative_eq!(report.per_target[&1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(report.per_target[&2], 1.0, epsilon = 1e-12);
        assert_relative_eq!(report.objective, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn single_floor_objective_is_zero() {
        let spec = ChainSpec {
            floors: 1,
            call_probabilities: vec![0.0],
            policy: MovementPolicy::Uniform,
        };
        assert_eq!(objective(&spec).unwrap().objective, 0.0);
    }

    /// Gaussian elimination on a tiny dense system, independent of the
    /// production solver.
    #[allow(clippy::needless_range_loop)]
    fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                .unwrap();
            a.swap(col, pivot);
            b.swap(col, pivot);
            for row in col + 1..n {
                let factor = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let mut sum = b[row];
            for k in row + 1..n {
                sum -= a[row][k] * x[k];
            }
            x[row] = sum / a[row][row];
        }
        x
    }

    #[test]
    fn uniform_walk_matches_three_state_brute_force_solve() {
        // With no calls the composite chain collapses to a reflected walk
        // on three floors: floor 1 moves up or stays (1/2 each), floor 2
        // spreads 1/3 over up/down/stay. Solve h = 1 + Q h for targets
        // h(3) = 0 directly on that 2x2 system.
        let q = [[0.5, 0.5], [1.0 / 3.0, 1.0 / 3.0]];
        let a = vec![
            vec![1.0 - q[0][0], -q[0][1]],
            vec![-q[1][0], 1.0 - q[1][1]],
        ];
        let expected = solve_dense(a, vec![1.0, 1.0]);

        let spec = ChainSpec {
            floors: 3,
            call_probabilities: vec![0.0; 3],
            policy: MovementPolicy::Uniform,
        };
        let matrix = TransitionMatrix::build(&spec).unwrap();
        let start = CompositeState::empty(1);
        let times = matrix
            .expected_hitting_times(CompositeState::empty(3), &[start, CompositeState::empty(2)])
            .unwrap();
        assert_relative_eq!(times[&start], expected[0], epsilon = 1e-9);
        assert_relative_eq!(times[&CompositeState::empty(2)], expected[1], epsilon = 1e-9);
        // The classic reflected-walk value.
        assert_relative_eq!(times[&start], 7.0, epsilon = 1e-9);
    }

    #[test]
    fn unreachable_target_names_the_start() {
        // With p = 0 nobody ever calls, so a state with a waiting bit set
        // can never be entered.
        let spec = ChainSpec {
            floors: 2,
            call_probabilities: vec![0.0, 0.0],
            policy: two_floor_shuttle(),
        };
        let matrix = TransitionMatrix::build(&spec).unwrap();
        let start = CompositeState::empty(2);
        let target = CompositeState::new(1, 0b10).unwrap();
        match matrix.expected_hitting_times(target, &[start]) {
            Err(ChainError::UnreachableTarget { start: s, target: t }) => {
                assert_eq!(s, start);
                assert_eq!(t, target);
            }
            other => panic!("expected unreachable-target error, got {other:?}"),
        }
    }

    #[test]
    fn start_that_can_strand_itself_is_rejected() {
        // Hand-built kernel: from (1,00) the chain moves to the target
        // (2,00) or to the absorbing state (1,01) with equal probability.
        // The target is reachable from (1,00), but the expectation is
        // infinite because half of all runs never get there.
        let spec = ChainSpec {
            floors: 2,
            call_probabilities: vec![0.0, 0.0],
            policy: two_floor_shuttle(),
        };
        let mut doc = TransitionMatrix::build(&spec).unwrap().to_json_value();
        doc["rows"] = serde_json::json!([
            [[1, "5.0000000000000000e-1"], [2, "5.0000000000000000e-1"]],
            [[1, "1.0000000000000000e0"]],
            [[2, "1.0000000000000000e0"]],
            [[3, "1.0000000000000000e0"]]
        ]);
        let matrix = TransitionMatrix::from_json_value(&doc).unwrap();
        let start = CompositeState::empty(1);
        let target = CompositeState::empty(2);
        assert_eq!(matrix.probability(0, 1), 0.5);
        match matrix.expected_hitting_times(target, &[start]) {
            Err(ChainError::UnreachableTarget { start: s, .. }) => assert_eq!(s, start),
            other => panic!("expected divergence rejection, got {other:?}"),
        }
    }

    #[test]
    fn stationary_distribution_rejects_multiple_closed_classes() {
        // An identity kernel (every state absorbing) has no unique
        // stationary distribution. Load it through the JSON form, the one
        // way to hold a kernel the builder would never produce.
        let spec = ChainSpec {
            floors: 2,
            call_probabilities: vec![0.0, 0.0],
            policy: two_floor_shuttle(),
        };
        let mut doc = TransitionMatrix::build(&spec).unwrap().to_json_value();
        let dim = doc["rows"].as_array().unwrap().len();
        doc["rows"] = serde_json::Value::Array(
            (0..dim)
                .map(|i| serde_json::json!([[i, "1.0000000000000000e0"]]))
                .collect(),
        );
        let identity = TransitionMatrix::from_json_value(&doc).unwrap();
        assert!(!identity.validate().irreducible);
        assert_eq!(
            identity.stationary_distribution(),
            Err(ChainError::NoStationaryDistribution)
        );
    }

    #[test]
    fn stationary_distribution_of_shuttle_is_uniform_on_empty_states() {
        let spec = ChainSpec {
            floors: 2,
            call_probabilities: vec![0.0, 0.0],
            policy: two_floor_shuttle(),
        };
        let matrix = TransitionMatrix::build(&spec).unwrap();
        let pi = matrix.stationary_distribution().unwrap();
        let s1 = matrix.state_index(CompositeState::empty(1)).unwrap();
        let s2 = matrix.state_index(CompositeState::empty(2)).unwrap();
        assert_relative_eq!(pi[s1], 0.5, epsilon = 1e-9);
        assert_relative_eq!(pi[s2], 0.5, epsilon = 1e-9);
        assert!(pi.iter().sum::<f64>() - 1.0 < 1e-12);
    }
}
