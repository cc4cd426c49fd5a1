//! Discrete-time Markov chain model of one elevator in an `N`-floor
//! building.
//!
//! A composite state pairs the elevator's floor `c` with a bitmask `w` of
//! floors that have a pending call. One time step is, in order:
//!
//! 1. the elevator moves up, down, or stays, per its movement policy;
//! 2. the arrival floor's waiting bit clears (passengers board and any
//!    pending call there is serviced);
//! 3. every other floor without a pending call independently gains one
//!    with its per-floor probability `p_i`.
//!
//! States where the elevator's own floor has a waiting bit can never occur
//! (a call is serviced the moment the car is there), so they are pruned
//! from the state space: an `N`-floor building has `N * 2^(N-1)` states.
//!
//! Movement is reflective at floors `1` and `N`, and every allowed
//! directional move must carry at least the irreducibility floor
//! [`DEFAULT_IRREDUCIBILITY_FLOOR`] of probability so the recurrent part
//! of the chain stays a single communicating class.

mod json;
mod sim;
mod solve;

pub use sim::{monte_carlo_objective_estimates, McHittingEstimate, EPISODE_STEP_CAP};
pub use solve::{hitting_time_report, HittingTimeReport, SOLVER_RESIDUAL_TOLERANCE};

use std::fmt;

use thiserror::Error;

/// Enumeration ceiling: `20 * 2^19` is about 10.5M states, the most this
/// representation is meant to hold in memory.
pub const MAX_FLOORS: usize = 20;

/// Minimum probability of each allowed up/down move. Keeps every movement
/// policy's floor graph strongly connected.
pub const DEFAULT_IRREDUCIBILITY_FLOOR: f64 = 1e-3;

/// Row sums of a built kernel must match 1 within this tolerance.
pub const ROW_SUM_TOLERANCE: f64 = 1e-10;

/// Per-state movement distributions must sum to 1 within this tolerance.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ChainError {
    #[error("floor count must be at least 1")]
    ZeroFloors,
    #[error(
        "{floors} floors would take {state_count} composite states; \
         the supported ceiling is {max_floors} floors"
    )]
    StateCountLimit {
        floors: usize,
        state_count: u128,
        max_floors: usize,
    },
    #[error("expected {expected} call probabilities, got {got}")]
    CallProbabilityCount { expected: usize, got: usize },
    #[error("call probability {value} at index {index} is outside [0, 1)")]
    CallProbabilityOutOfRange { index: usize, value: f64 },
    #[error("invalid movement policy: {reason}")]
    InvalidPolicy { reason: String },
    #[error("floor {floor} must lie in [1, {floors}]")]
    FloorOutOfRange { floor: usize, floors: usize },
    #[error("waiting mask sets the elevator's own floor {floor}")]
    OwnFloorWaiting { floor: usize },
    #[error("state {state} is not a state of this chain")]
    UnknownState { state: CompositeState },
    #[error("target {target} cannot be reached from start {start}")]
    UnreachableTarget {
        start: CompositeState,
        target: CompositeState,
    },
    #[error("linear solve residual {residual} exceeds tolerance {tolerance}")]
    SolverResidual { residual: f64, tolerance: f64 },
    #[error("stationary distribution undefined: no unique recurrent class")]
    NoStationaryDistribution,
    #[error("episode exceeded {cap} steps without hitting the target")]
    EpisodeCap { cap: u64 },
    #[error("episodes must be at least 1")]
    ZeroEpisodes,
    #[error("malformed transition matrix document: {reason}")]
    MalformedMatrixJson { reason: String },
}

/// One Markov state: elevator floor `c` (1-based) plus the waiting bitmask
/// `w`, where bit `i - 1` set means floor `i` has a pending call. The
/// elevator's own bit is always clear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CompositeState {
    floor: usize,
    waiting: u32,
}

impl CompositeState {
    pub fn new(floor: usize, waiting: u32) -> Result<Self, ChainError> {
        if floor == 0 {
            return Err(ChainError::FloorOutOfRange { floor, floors: 0 });
        }
        if floor <= 32 && waiting & (1 << (floor - 1)) != 0 {
            return Err(ChainError::OwnFloorWaiting { floor });
        }
        Ok(Self { floor, waiting })
    }

    /// The empty-building state `(floor, 0...0)`.
    pub fn empty(floor: usize) -> Self {
        Self { floor, waiting: 0 }
    }

    pub fn floor(&self) -> usize {
        self.floor
    }

    pub fn waiting(&self) -> u32 {
        self.waiting
    }

    pub fn is_waiting(&self, floor: usize) -> bool {
        (1..=32).contains(&floor) && self.waiting & (1 << (floor - 1)) != 0
    }

    /// Waiting mask rendered floor-1-first, e.g. `(2, w=01)` for a
    /// two-floor building is floor 2 occupied by the car, floor 1 calling.
    pub fn waiting_bits(&self, n_floors: usize) -> String {
        (1..=n_floors)
            .map(|f| if self.is_waiting(f) { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Display for CompositeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(floor {}, waiting {:#b})", self.floor, self.waiting)
    }
}

/// Probabilities of the three possible moves from one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveDistribution {
    pub up: f64,
    pub down: f64,
    pub stay: f64,
}

/// Movement policy of the elevator. May depend on the full composite
/// state; a policy that ignores the waiting mask recovers the plain
/// floor-only chain.
#[derive(Debug, Clone, PartialEq)]
pub enum MovementPolicy {
    /// Equal probability over the moves allowed at the current floor
    /// (stay plus whichever of up/down the boundaries permit).
    Uniform,
    /// One distribution per composite state, in [`enumerate_states`] order.
    Explicit(Vec<MoveDistribution>),
}

impl MovementPolicy {
    /// Moves allowed at `floor`: (up, down) availability.
    fn allowed(floor: usize, n_floors: usize) -> (bool, bool) {
        (floor < n_floors, floor > 1)
    }

    pub fn distribution(&self, state_index: usize, floor: usize, n_floors: usize) -> MoveDistribution {
        match self {
            MovementPolicy::Uniform => {
                let (up_ok, down_ok) = Self::allowed(floor, n_floors);
                let share = 1.0 / (1 + usize::from(up_ok) + usize::from(down_ok)) as f64;
                MoveDistribution {
                    up: if up_ok { share } else { 0.0 },
                    down: if down_ok { share } else { 0.0 },
                    stay: share,
                }
            }
            MovementPolicy::Explicit(table) => table[state_index],
        }
    }

    /// Checks simplex, reflective-boundary, and irreducibility-floor
    /// constraints for every state of an `n_floors` building.
    pub fn validate(&self, n_floors: usize, epsilon: f64) -> Result<(), ChainError> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(ChainError::InvalidPolicy {
                reason: format!("irreducibility floor must be positive, got {epsilon}"),
            });
        }
        let states = enumerate_states(n_floors)?;
        if let MovementPolicy::Explicit(table) = self {
            if table.len() != states.len() {
                return Err(ChainError::InvalidPolicy {
                    reason: format!(
                        "explicit policy has {} entries, {} floors need {}",
                        table.len(),
                        n_floors,
                        states.len()
                    ),
                });
            }
        }
        for (idx, state) in states.iter().enumerate() {
            let d = self.distribution(idx, state.floor(), n_floors);
            let label = format!("state {idx} {state}");
            for (name, value) in [("up", d.up), ("down", d.down), ("stay", d.stay)] {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(ChainError::InvalidPolicy {
                        reason: format!("{label}: {name} probability {value} is not in [0, 1]"),
                    });
                }
            }
            if (d.up + d.down + d.stay - 1.0).abs() > SIMPLEX_TOLERANCE {
                return Err(ChainError::InvalidPolicy {
                    reason: format!(
                        "{label}: probabilities sum to {}, not 1",
                        d.up + d.down + d.stay
                    ),
                });
            }
            let (up_ok, down_ok) = Self::allowed(state.floor(), n_floors);
            if !up_ok && d.up != 0.0 {
                return Err(ChainError::InvalidPolicy {
                    reason: format!("{label}: up probability {} at the top floor", d.up),
                });
            }
            if !down_ok && d.down != 0.0 {
                return Err(ChainError::InvalidPolicy {
                    reason: format!("{label}: down probability {} at the bottom floor", d.down),
                });
            }
            if up_ok && d.up < epsilon {
                return Err(ChainError::InvalidPolicy {
                    reason: format!(
                        "{label}: up probability {} is below the irreducibility floor {epsilon}",
                        d.up
                    ),
                });
            }
            if down_ok && d.down < epsilon {
                return Err(ChainError::InvalidPolicy {
                    reason: format!(
                        "{label}: down probability {} is below the irreducibility floor {epsilon}",
                        d.down
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Full specification of one chain: floor count, per-floor per-step call
/// probabilities (each in `[0, 1)`), and the movement policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub floors: usize,
    pub call_probabilities: Vec<f64>,
    pub policy: MovementPolicy,
}

impl ChainSpec {
    pub fn validate(&self) -> Result<(), ChainError> {
        check_floor_count(self.floors)?;
        if self.call_probabilities.len() != self.floors {
            return Err(ChainError::CallProbabilityCount {
                expected: self.floors,
                got: self.call_probabilities.len(),
            });
        }
        for (index, &value) in self.call_probabilities.iter().enumerate() {
            if !(0.0..1.0).contains(&value) {
                return Err(ChainError::CallProbabilityOutOfRange { index, value });
            }
        }
        self.policy.validate(self.floors, DEFAULT_IRREDUCIBILITY_FLOOR)
    }
}

fn check_floor_count(floors: usize) -> Result<(), ChainError> {
    if floors == 0 {
        return Err(ChainError::ZeroFloors);
    }
    if floors > MAX_FLOORS {
        let state_count = floors as u128 * (1u128 << (floors.min(126) - 1));
        return Err(ChainError::StateCountLimit {
            floors,
            state_count,
            max_floors: MAX_FLOORS,
        });
    }
    Ok(())
}

/// Drops bit `bit` from `w`, compacting the higher bits down one place.
fn remove_bit(w: u32, bit: usize) -> u32 {
    (w & ((1 << bit) - 1)) | ((w >> (bit + 1)) << bit)
}

/// Inverse of [`remove_bit`]: re-opens position `bit` as a zero bit.
fn insert_zero_bit(rank: u32, bit: usize) -> u32 {
    ((rank >> bit) << (bit + 1)) | (rank & ((1 << bit) - 1))
}

/// All composite states of an `n_floors` building in canonical order:
/// floor-major, waiting mask (as an integer, floor 1 = bit 0) minor.
/// Exactly `n_floors * 2^(n_floors - 1)` states.
pub fn enumerate_states(n_floors: usize) -> Result<Vec<CompositeState>, ChainError> {
    check_floor_count(n_floors)?;
    let per_floor = 1u32 << (n_floors - 1);
    let mut states = Vec::with_capacity(n_floors << (n_floors - 1));
    for floor in 1..=n_floors {
        for rank in 0..per_floor {
            states.push(CompositeState {
                floor,
                waiting: insert_zero_bit(rank, floor - 1),
            });
        }
    }
    Ok(states)
}

/// Row index of a state in the canonical enumeration, or `None` when the
/// state does not belong to an `n_floors` building.
pub fn state_index(n_floors: usize, state: CompositeState) -> Option<usize> {
    if state.floor == 0 || state.floor > n_floors {
        return None;
    }
    if n_floors < 32 && state.waiting >> n_floors != 0 {
        return None;
    }
    if state.is_waiting(state.floor) {
        return None;
    }
    let rank = remove_bit(state.waiting, state.floor - 1) as usize;
    Some((state.floor - 1) * (1usize << (n_floors - 1)) + rank)
}

/// Validation report for a transition kernel: stochasticity violations and
/// whether the recurrent part of the chain is a single communicating class.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainValidation {
    /// Rows whose probabilities do not sum to 1 within [`ROW_SUM_TOLERANCE`].
    pub row_sum_violations: Vec<(usize, f64)>,
    /// `(row, column, value)` triples with negative probability.
    pub negative_entries: Vec<(usize, usize, f64)>,
    /// True when exactly one strongly connected component is closed, i.e.
    /// all stationary mass lives on a single communicating class.
    pub irreducible: bool,
}

impl ChainValidation {
    pub fn is_clean(&self) -> bool {
        self.row_sum_violations.is_empty() && self.negative_entries.is_empty() && self.irreducible
    }
}

/// Row-stochastic sparse transition kernel over the pruned composite
/// state space, in canonical state order.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n_floors: usize,
    states: Vec<CompositeState>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl TransitionMatrix {
    /// Builds the one-step kernel for a validated spec. Each row composes
    /// the three sub-steps (move, clear arrival bit, independent new
    /// calls) over every subset of floors that may gain a call.
    pub fn build(spec: &ChainSpec) -> Result<Self, ChainError> {
        spec.validate()?;
        let n = spec.floors;
        let states = enumerate_states(n)?;
        let p = &spec.call_probabilities;
        // Floors with p = 0 never gain a call; skip them when expanding
        // arrival subsets.
        let mut rows = Vec::with_capacity(states.len());
        for (idx, state) in states.iter().enumerate() {
            let dist = spec.policy.distribution(idx, state.floor(), n);
            let mut row: Vec<(usize, f64)> = Vec::new();
            let moves = [
                (dist.up, state.floor() + 1),
                (dist.down, state.floor().wrapping_sub(1)),
                (dist.stay, state.floor()),
            ];
            for (move_prob, arrival) in moves {
                if move_prob == 0.0 {
                    continue;
                }
                let cleared = state.waiting() & !(1u32 << (arrival - 1));
                let gainers: Vec<usize> = (1..=n)
                    .filter(|&j| j != arrival && cleared & (1 << (j - 1)) == 0 && p[j - 1] > 0.0)
                    .collect();
                for subset in 0u32..(1 << gainers.len()) {
                    let mut mask = cleared;
                    let mut prob = move_prob;
                    for (bit, &j) in gainers.iter().enumerate() {
                        if subset & (1 << bit) != 0 {
                            mask |= 1 << (j - 1);
                            prob *= p[j - 1];
                        } else {
                            prob *= 1.0 - p[j - 1];
                        }
                    }
                    let col = state_index(n, CompositeState {
                        floor: arrival,
                        waiting: mask,
                    })
                    .expect("constructed state is always in range");
                    row.push((col, prob));
                }
            }
            row.sort_by_key(|&(col, _)| col);
            // Distinct (move, subset) pairs land on distinct columns, so
            // no merging is needed; assert that in debug builds.
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            rows.push(row);
        }
        Ok(Self {
            n_floors: n,
            states,
            rows,
        })
    }

    pub fn n_floors(&self) -> usize {
        self.n_floors
    }

    /// Number of composite states (matrix dimension).
    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[CompositeState] {
        &self.states
    }

    pub fn state_at(&self, index: usize) -> CompositeState {
        self.states[index]
    }

    pub fn state_index(&self, state: CompositeState) -> Option<usize> {
        state_index(self.n_floors, state)
    }

    /// Sparse row `index`: `(column, probability)` pairs sorted by column.
    pub fn row(&self, index: usize) -> &[(usize, f64)] {
        &self.rows[index]
    }

    /// Probability of moving from `from` to `to` in one step.
    pub fn probability(&self, from: usize, to: usize) -> f64 {
        self.rows[from]
            .binary_search_by_key(&to, |&(col, _)| col)
            .map(|pos| self.rows[from][pos].1)
            .unwrap_or(0.0)
    }

    /// Checks row stochasticity and irreducibility of the recurrent class.
    pub fn validate(&self) -> ChainValidation {
        let mut row_sum_violations = Vec::new();
        let mut negative_entries = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            let sum: f64 = row.iter().map(|&(_, v)| v).sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                row_sum_violations.push((i, sum));
            }
            for &(j, v) in row {
                if v < 0.0 {
                    negative_entries.push((i, j, v));
                }
            }
        }
        ChainValidation {
            row_sum_violations,
            negative_entries,
            irreducible: self.closed_class_count() == 1,
        }
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        self.rows
            .iter()
            .map(|row| row.iter().filter(|&&(_, v)| v > 0.0).map(|&(j, _)| j).collect())
            .collect()
    }

    fn transpose_adjacency(&self) -> Vec<Vec<usize>> {
        let mut rev = vec![Vec::new(); self.dimension()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                if v > 0.0 {
                    rev[j].push(i);
                }
            }
        }
        rev
    }

    /// Number of strongly connected components with no outgoing edges.
    /// Exactly one closed class means a unique recurrent class, which is
    /// what hitting-time and stationary computations need.
    fn closed_class_count(&self) -> usize {
        let component = self.strongly_connected_components();
        let n_components = component.iter().copied().max().map_or(0, |m| m + 1);
        let mut closed = vec![true; n_components];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                if v > 0.0 && component[i] != component[j] {
                    closed[component[i]] = false;
                }
            }
        }
        closed.iter().filter(|&&c| c).count()
    }

    /// Kosaraju's algorithm with iterative DFS; returns a component id
    /// per state.
    fn strongly_connected_components(&self) -> Vec<usize> {
        let n = self.dimension();
        let adj = self.adjacency();
        let mut visited = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for root in 0..n {
            if visited[root] {
                continue;
            }
            visited[root] = true;
            stack.push((root, 0));
            while let Some((node, child)) = stack.pop() {
                if child < adj[node].len() {
                    stack.push((node, child + 1));
                    let next = adj[node][child];
                    if !visited[next] {
                        visited[next] = true;
                        stack.push((next, 0));
                    }
                } else {
                    order.push(node);
                }
            }
        }

        let rev = self.transpose_adjacency();
        let mut component = vec![usize::MAX; n];
        let mut current = 0;
        let mut dfs = Vec::new();
        for &root in order.iter().rev() {
            if component[root] != usize::MAX {
                continue;
            }
            component[root] = current;
            dfs.push(root);
            while let Some(node) = dfs.pop() {
                for &prev in &rev[node] {
                    if component[prev] == usize::MAX {
                        component[prev] = current;
                        dfs.push(prev);
                    }
                }
            }
            current += 1;
        }
        component
    }

    /// States that can reach `target`, found by BFS on the transpose graph.
    pub(crate) fn reverse_reachable(&self, target: usize) -> Vec<bool> {
        let rev = self.transpose_adjacency();
        let mut seen = vec![false; self.dimension()];
        seen[target] = true;
        let mut queue = vec![target];
        while let Some(node) = queue.pop() {
            for &prev in &rev[node] {
                if !seen[prev] {
                    seen[prev] = true;
                    queue.push(prev);
                }
            }
        }
        seen
    }
}

/// Builds the transition kernel for a spec; alias for [`TransitionMatrix::build`].
pub fn build_transition_matrix(spec: &ChainSpec) -> Result<TransitionMatrix, ChainError> {
    TransitionMatrix::build(spec)
}

/// Per-target expected hitting times from a spec, averaged over the other
/// empty-building start states; see [`solve::objective_from_matrix`].
pub fn objective(spec: &ChainSpec) -> Result<HittingTimeReport, ChainError> {
    let matrix = TransitionMatrix::build(spec)?;
    solve::objective_from_matrix(&matrix)
}

pub use solve::objective_from_matrix;

/// A stay-free deterministic shuttle for two floors, useful in tests and
/// docs: the car alternates between the floors every step.
pub fn two_floor_shuttle() -> MovementPolicy {
    MovementPolicy::Explicit(vec![
        MoveDistribution { up: 1.0, down: 0.0, stay: 0.0 },
        MoveDistribution { up: 1.0, down: 0.0, stay: 0.0 },
        MoveDistribution { up: 0.0, down: 1.0, stay: 0.0 },
        MoveDistribution { up: 0.0, down: 1.0, stay: 0.0 },
    ])
}

pub(crate) fn waiting_mask_from_bits(bits: &str) -> Result<u32, ChainError> {
    let mut mask = 0u32;
    for (i, ch) in bits.chars().enumerate() {
        match ch {
            '1' if i < 32 => mask |= 1 << i,
            '0' => {}
            _ => {
                return Err(ChainError::MalformedMatrixJson {
                    reason: format!("waiting mask invalid at position {i}"),
                })
            }
        }
    }
    Ok(mask)
}
