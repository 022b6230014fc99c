use std::collections::BTreeMap;
use std::fmt::Write;

use crate::level_io::LevelSet;
use crate::planner::{solve_astar, HeuristicMode, PlanStatus};

use super::HarnessError;

/// Node budget for optimal-length queries.
pub const STATS_NODE_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PathStats {
    /// `(level id, optimal length)` in set order.
    pub lengths: Vec<(String, usize)>,
    pub mean: f64,
    /// length -> number of levels
    pub histogram: BTreeMap<usize, usize>,
}

impl PathStats {
    /// `level_id,length` rows followed by a `# mean` comment line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level_id,length\n");
        for (id, len) in &self.lengths {
            let _ = writeln!(out, "{id},{len}");
        }
        let _ = writeln!(out, "# mean = {:.4}", self.mean);
        out
    }
}

/// Optimal solution lengths with the admissible MinMatching heuristic.
pub fn shortest_path_stats(set: &LevelSet) -> Result<PathStats, HarnessError> {
    let mut lengths = Vec::with_capacity(set.len());
    let mut histogram = BTreeMap::new();
    for level in &set.levels {
        let result = solve_astar(level, &level.initial_state(), HeuristicMode::MinMatching, Some(STATS_NODE_BUDGET));
        let len = match result.status {
            PlanStatus::Solved { length, .. } => length,
            PlanStatus::Unsolvable => return Err(HarnessError::Unsolvable(level.id().to_string())),
            PlanStatus::Budget => {
                return Err(HarnessError::Budget(format!(
                    "level {} exceeded {STATS_NODE_BUDGET} nodes",
                    level.id()
                )))
            }
        };
        *histogram.entry(len).or_insert(0) += 1;
        lengths.push((level.id().to_string(), len));
    }
    if lengths.is_empty() {
        return Err(HarnessError::Validation("level set is empty".into()));
    }
    let mean = lengths.iter().map(|(_, l)| *l as f64).sum::<f64>() / lengths.len() as f64;
    Ok(PathStats { lengths, mean, histogram })
}
