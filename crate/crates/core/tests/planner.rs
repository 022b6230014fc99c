mod common;

use common::bfs::bfs_length;
use common::corpus::micro_corpus;
use sokoshape::game::{apply_move, is_solved};
use sokoshape::planner::{distance, solve_astar, DistanceCache, HeuristicMode};

#[test]
fn min_matching_is_optimal_on_micro_corpus() {
    for level in micro_corpus() {
        let start = level.initial_state();
        let want = bfs_length(&level, &start);
        let got = solve_astar(&level, &start, HeuristicMode::MinMatching, None);
        assert_eq!(got.length(), want, "level {}", level.id());
    }
}

#[test]
fn every_mode_returns_replayable_plans() {
    for level in micro_corpus() {
        let start = level.initial_state();
        let solvable = bfs_length(&level, &start).is_some();
        for mode in [HeuristicMode::AllPairs, HeuristicMode::NearestTarget, HeuristicMode::MinMatching] {
            let r = solve_astar(&level, &start, mode, None);
            assert_eq!(r.plan().is_some(), solvable, "level {} mode {}", level.id(), mode.name());
            if let Some(plan) = r.plan() {
                let end = plan.iter().fold(start.clone(), |s, d| apply_move(&level, &s, d.action()).0);
                assert!(is_solved(&level, &end), "level {} mode {}", level.id(), mode.name());
            }
        }
    }
}

#[test]
fn single_box_distances_are_exact() {
    // with one box every heuristic is admissible, so d(s) equals the BFS length
    let cache = DistanceCache::for_training();
    for level in micro_corpus().into_iter().filter(|l| l.n_boxes() == 1) {
        let s = level.initial_state();
        assert_eq!(distance(&level, &s, &cache).steps().map(|d| d as usize), bfs_length(&level, &s));
    }
}
