//! Breadth-first search over exact states: the ground truth for plan lengths.

use std::collections::{HashMap, VecDeque};

use sokoshape::game::{apply_move, is_solved, Action, Level, State};

type Key = (sokoshape::Pos, Vec<sokoshape::Pos>);

fn key(s: &State) -> Key {
    (s.player, s.boxes.clone())
}

/// Length of a shortest solution from `start`, or `None` if no solution exists.
pub fn bfs_length(level: &Level, start: &State) -> Option<usize> {
    if is_solved(level, start) {
        return Some(0);
    }
    let mut seen: HashMap<Key, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    seen.insert(key(start), 0);
    queue.push_back(start.clone());
    while let Some(s) = queue.pop_front() {
        let d = seen[&key(&s)];
        for a in &Action::ALL[1..] {
            let (next, _) = apply_move(level, &s, *a);
            let k = key(&next);
            if seen.contains_key(&k) {
                continue;
            }
            if is_solved(level, &next) {
                return Some(d + 1);
            }
            seen.insert(k, d + 1);
            queue.push_back(next);
        }
    }
    None
}

/// Every state reachable from the initial state, in BFS order.
pub fn reachable_states(level: &Level) -> Vec<State> {
    let start = level.initial_state();
    let mut seen = std::collections::HashSet::new();
    let mut out = vec![start.clone()];
    seen.insert(key(&start));
    let mut i = 0;
    while i < out.len() {
        let s = out[i].clone();
        i += 1;
        if is_solved(level, &s) {
            continue;
        }
        for a in &Action::ALL[1..] {
            let (next, _) = apply_move(level, &s, *a);
            if seen.insert(key(&next)) {
                out.push(next);
            }
        }
    }
    out
}
