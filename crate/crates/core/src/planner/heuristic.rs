use serde::{Deserialize, Serialize};

use crate::game::{Level, Pos, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum HeuristicMode {
    /// Sum of Manhattan distances over every (untargeted box, free target)
    /// pair. Overestimates once two or more boxes are off target.
    #[default]
    AllPairs,
    /// Each untargeted box to its nearest free target.
    NearestTarget,
    /// Minimum-cost assignment of untargeted boxes to free targets.
    MinMatching,
}

impl HeuristicMode {
    pub fn is_admissible(self) -> bool {
        !matches!(self, HeuristicMode::AllPairs)
    }

    pub fn name(self) -> &'static str {
        match self {
            HeuristicMode::AllPairs => "all-pairs",
            HeuristicMode::NearestTarget => "nearest-target",
            HeuristicMode::MinMatching => "min-matching",
        }
    }
}

impl std::str::FromStr for HeuristicMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "all-pairs" | "allpairs" => Ok(HeuristicMode::AllPairs),
            "nearest-target" | "nearesttarget" | "nearest" => Ok(HeuristicMode::NearestTarget),
            "min-matching" | "minmatching" | "matching" => Ok(HeuristicMode::MinMatching),
            other => Err(format!(
                "unknown heuristic `{other}` (expected all-pairs, nearest-target or min-matching)"
            )),
        }
    }
}

/// Heuristic estimate of the remaining steps from `state`.
pub fn heuristic(level: &Level, state: &State, mode: HeuristicMode) -> usize {
    let boxes: Vec<Pos> = state
        .boxes
        .iter()
        .copied()
        .filter(|b| !level.is_target(*b))
        .collect();
    let targets: Vec<Pos> = level
        .targets()
        .iter()
        .copied()
        .filter(|t| !state.has_box(*t))
        .collect();
    heuristic_from(&boxes, &targets, mode)
}

pub(crate) fn heuristic_from(boxes: &[Pos], targets: &[Pos], mode: HeuristicMode) -> usize {
    if boxes.is_empty() || targets.is_empty() {
        return 0;
    }
    match mode {
        HeuristicMode::AllPairs => boxes
            .iter()
            .flat_map(|b| targets.iter().map(move |t| b.manhattan(*t)))
            .sum(),
        HeuristicMode::NearestTarget => boxes
            .iter()
            .map(|b| targets.iter().map(|t| b.manhattan(*t)).min().unwrap_or(0))
            .sum(),
        HeuristicMode::MinMatching => {
            let cost: Vec<Vec<i64>> = boxes
                .iter()
                .map(|b| targets.iter().map(|t| b.manhattan(*t) as i64).collect())
                .collect();
            min_cost_assignment(&cost) as usize
        }
    }
}

/// Hungarian algorithm (shortest augmenting paths with potentials) on an
/// `n x m` cost matrix with `n <= m`. Returns the minimum total cost of
/// assigning every row to a distinct column.
pub fn min_cost_assignment(cost: &[Vec<i64>]) -> i64 {
    let n = cost.len();
    if n == 0 {
        return 0;
    }
    let m = cost[0].len();
    assert!(n <= m, "more rows than columns");
    const INF: i64 = i64::MAX / 4;
    // 1-based arrays; column 0 is the virtual start.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![INF; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=m)
        .filter(|&j| owner[j] != 0)
        .map(|j| cost[owner[j] - 1][j - 1])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(r: usize, c: usize) -> Pos {
        Pos::new(r, c)
    }

    #[test]
    fn single_pair_all_modes() {
        for mode in [HeuristicMode::AllPairs, HeuristicMode::NearestTarget, HeuristicMode::MinMatching] {
            assert_eq!(heuristic_from(&[p(2, 3)], &[p(2, 5)], mode), 2);
            assert_eq!(heuristic_from(&[], &[], mode), 0);
        }
    }

    #[test]
    fn crossed_pairs() {
        let boxes = [p(1, 1), p(2, 2)];
        let targets = [p(1, 2), p(2, 1)];
        assert_eq!(heuristic_from(&boxes, &targets, HeuristicMode::AllPairs), 4);
        assert_eq!(heuristic_from(&boxes, &targets, HeuristicMode::MinMatching), 2);
        assert_eq!(heuristic_from(&boxes, &targets, HeuristicMode::NearestTarget), 2);
    }

    #[test]
    fn matching_beats_greedy() {
        // greedy nearest would send both boxes to t0
        let boxes = [p(0, 0), p(0, 1)];
        let targets = [p(0, 2), p(0, 9)];
        assert_eq!(heuristic_from(&boxes, &targets, HeuristicMode::NearestTarget), 3);
        assert_eq!(heuristic_from(&boxes, &targets, HeuristicMode::MinMatching), 10);
    }

    fn brute_force(cost: &[Vec<i64>]) -> i64 {
        fn go(cost: &[Vec<i64>], row: usize, used: &mut Vec<bool>) -> i64 {
            if row == cost.len() {
                return 0;
            }
            let mut best = i64::MAX;
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[row][j] + go(cost, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        go(cost, 0, &mut vec![false; cost[0].len()])
    }

    proptest! {
        #[test]
        fn hungarian_matches_enumeration(
            n in 1usize..6,
            extra in 0usize..3,
            seed in proptest::collection::vec(0i64..30, 64),
        ) {
            let m = n + extra;
            let cost: Vec<Vec<i64>> = (0..n)
                .map(|i| (0..m).map(|j| seed[(i * m + j) % seed.len()] + (i * 7 + j * 3) as i64 % 5).collect())
                .collect();
            prop_assert_eq!(min_cost_assignment(&cost), brute_force(&cost));
        }
    }
}
