//! A* planning over Sokoban states: plans, the distance function used as a
//! shaping potential, and static deadlock detection.

mod astar;
mod deadlock;
mod heuristic;

use std::sync::atomic::{AtomicU64, Ordering};

use dashmap::DashMap;
use log::warn;

use crate::game::{Direction, Level, State};

pub use astar::{plan_string, solve_astar, PlanResult, PlanStatus};
pub use deadlock::{is_deadlocked_static, DeadCells};
pub use heuristic::{heuristic, min_cost_assignment, HeuristicMode};

/// Node budget for distance queries issued during training.
pub const TRAINING_NODE_BUDGET: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Distance {
    Steps(u32),
    Unsolvable,
}

impl Distance {
    pub fn steps(self) -> Option<u32> {
        match self {
            Distance::Steps(d) => Some(d),
            Distance::Unsolvable => None,
        }
    }

    pub fn is_solvable(self) -> bool {
        matches!(self, Distance::Steps(_))
    }
}

/// Player cell of the reachable region representative: the smallest cell
/// index the player can walk to without pushing.
pub fn region_representative(level: &Level, state: &State) -> usize {
    let mut seen = vec![false; level.n_cells()];
    let start = level.index(state.player);
    seen[start] = true;
    let mut stack = vec![state.player];
    let mut best = start;
    while let Some(p) = stack.pop() {
        for d in Direction::ALL {
            let Some(n) = p.step(d) else { continue };
            if level.is_wall(n) || state.has_box(n) {
                continue;
            }
            let i = level.index(n);
            if !seen[i] {
                seen[i] = true;
                best = best.min(i);
                stack.push(n);
            }
        }
    }
    best
}

type CacheKey = (u64, Box<[u16]>);

/// Memoized distances, shareable across worker threads.
///
/// Solved distances are keyed by the exact placement (the walk to a push
/// costs steps, so two player cells of one region can differ in distance).
/// Unsolvability does not depend on where in its region the player stands,
/// so unsolvable verdicts are also recorded under the region-normalized key.
#[derive(Debug)]
pub struct DistanceCache {
    mode: HeuristicMode,
    node_budget: Option<usize>,
    exact: DashMap<CacheKey, Distance>,
    unsolvable_regions: DashMap<CacheKey, ()>,
    hits: AtomicU64,
    misses: AtomicU64,
    budget_hits: AtomicU64,
}

impl DistanceCache {
    pub fn new(mode: HeuristicMode, node_budget: Option<usize>) -> Self {
        Self {
            mode,
            node_budget,
            exact: DashMap::new(),
            unsolvable_regions: DashMap::new(),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
            budget_hits: AtomicU64::new(0),
        }
    }

    /// AllPairs heuristic with the training budget.
    pub fn for_training() -> Self {
        Self::new(HeuristicMode::AllPairs, Some(TRAINING_NODE_BUDGET))
    }

    pub fn mode(&self) -> HeuristicMode {
        self.mode
    }

    pub fn node_budget(&self) -> Option<usize> {
        self.node_budget
    }

    pub fn len(&self) -> usize {
        self.exact.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exact.is_empty()
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    /// Number of queries whose search ran out of budget (reported as unsolvable).
    pub fn budget_exhaustions(&self) -> u64 {
        self.budget_hits.load(Ordering::Relaxed)
    }
}

fn region_key(level: &Level, state: &State) -> CacheKey {
    let mut key = astar::pack(level, state);
    key[0] = region_representative(level, state) as u16;
    (level.fingerprint(), key)
}

/// `d(s)`: length of the plan A* finds from `state`, memoized in `cache`.
/// Budget exhaustion is reported as [`Distance::Unsolvable`].
pub fn distance(level: &Level, state: &State, cache: &DistanceCache) -> Distance {
    let key = (level.fingerprint(), astar::pack(level, state));
    if let Some(d) = cache.exact.get(&key) {
        cache.hits.fetch_add(1, Ordering::Relaxed);
        return *d;
    }
    let region = region_key(level, state);
    if cache.unsolvable_regions.contains_key(&region) {
        cache.hits.fetch_add(1, Ordering::Relaxed);
        cache.exact.insert(key, Distance::Unsolvable);
        return Distance::Unsolvable;
    }
    cache.misses.fetch_add(1, Ordering::Relaxed);
    let d = if is_deadlocked_static(level, state) {
        Distance::Unsolvable
    } else {
        let result = solve_astar(level, state, cache.mode, cache.node_budget);
        match result.status {
            PlanStatus::Solved { length, .. } => Distance::Steps(length as u32),
            PlanStatus::Unsolvable => Distance::Unsolvable,
            PlanStatus::Budget => {
                cache.budget_hits.fetch_add(1, Ordering::Relaxed);
                warn!(
                    "A* budget of {:?} nodes exhausted on level {}; treating state as unsolvable",
                    cache.node_budget,
                    level.id()
                );
                Distance::Unsolvable
            }
        }
    };
    if d == Distance::Unsolvable {
        cache.unsolvable_regions.insert(region, ());
    }
    cache.exact.insert(key, d);
    d
}
