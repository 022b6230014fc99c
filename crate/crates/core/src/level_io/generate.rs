use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::{Direction, Level, Pos, State};

use super::LevelIoError;

const MAX_ATTEMPTS: usize = 200;
const CHANGE_DIRECTION_PROB: f64 = 0.35;

// 3x3 carving stamps, centred on the walker.
const STAMPS: [[[bool; 3]; 3]; 5] = [
    [[false, false, false], [false, true, false], [false, false, false]],
    [[false, false, false], [true, true, true], [false, false, false]],
    [[false, true, false], [false, true, false], [false, true, false]],
    [[false, false, false], [true, true, false], [true, true, false]],
    [[false, false, false], [false, true, true], [false, true, false]],
];

/// Builds a solvable level by reverse play.
///
/// A random walk carves a room inside a `height x width` board (the outer ring
/// stays wall), boxes start on their targets, and up to `max_pulls` random
/// pulls, each preceded by a walk of the player, scatter them. Every pull is
/// the inverse of a legal push, so the result is solvable by construction.
pub fn generate(
    seed: u64,
    n_boxes: usize,
    height: usize,
    width: usize,
    max_pulls: usize,
) -> Result<Level, LevelIoError> {
    if height < 5 || width < 5 {
        return Err(LevelIoError::Generation(format!(
            "board {height}x{width} is smaller than 5x5"
        )));
    }
    if n_boxes == 0 {
        return Err(LevelIoError::Generation("n_boxes must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        if let Some((floor, targets, state)) = attempt(&mut rng, n_boxes, height, width, max_pulls)
        {
            let walls = (0..height)
                .flat_map(|r| (0..width).map(move |c| Pos::new(r, c)))
                .filter(|p| !floor[p.row * width + p.col]);
            let level = Level::new(
                format!("gen-{seed}-{n_boxes}b-{height}x{width}"),
                height,
                width,
                walls,
                targets,
                state.player,
                state.boxes,
            )?;
            debug_assert!(matches!(
                crate::planner::solve_astar(
                    &level,
                    &level.initial_state(),
                    crate::planner::HeuristicMode::MinMatching,
                    None
                )
                .status,
                crate::planner::PlanStatus::Solved { .. }
            ));
            return Ok(level);
        }
    }
    Err(LevelIoError::Generation(format!(
        "no usable room after {MAX_ATTEMPTS} attempts (seed {seed}, {n_boxes} boxes, {height}x{width})"
    )))
}

fn carve(rng: &mut ChaCha8Rng, height: usize, width: usize) -> Vec<bool> {
    let mut floor = vec![false; height * width];
    let steps = (1.5 * (height + width) as f64) as usize;
    let mut pos = Pos::new(rng.gen_range(1..height - 1), rng.gen_range(1..width - 1));
    let mut dir = *Direction::ALL.choose(rng).unwrap();
    for _ in 0..steps {
        if rng.gen_bool(CHANGE_DIRECTION_PROB) {
            dir = *Direction::ALL.choose(rng).unwrap();
        }
        let stamp = STAMPS.choose(rng).unwrap();
        for (dr, row) in stamp.iter().enumerate() {
            for (dc, on) in row.iter().enumerate() {
                let (r, c) = (pos.row + dr, pos.col + dc);
                // stamp offset is -1..=1 around pos
                if *on && r >= 2 && c >= 2 && r - 1 < height - 1 && c - 1 < width - 1 {
                    floor[(r - 1) * width + (c - 1)] = true;
                }
            }
        }
        let (dr, dc) = dir.delta();
        let r = (pos.row as isize + dr).clamp(1, height as isize - 2) as usize;
        let c = (pos.col as isize + dc).clamp(1, width as isize - 2) as usize;
        pos = Pos::new(r, c);
    }
    floor
}

fn reachable(floor: &[bool], width: usize, state: &State) -> Vec<Pos> {
    let mut seen = vec![false; floor.len()];
    let mut queue = VecDeque::from([state.player]);
    seen[state.player.row * width + state.player.col] = true;
    let mut out = Vec::new();
    while let Some(p) = queue.pop_front() {
        out.push(p);
        for d in Direction::ALL {
            let Some(n) = p.step(d) else { continue };
            let i = n.row * width + n.col;
            if n.col < width && i < floor.len() && floor[i] && !seen[i] && !state.has_box(n) {
                seen[i] = true;
                queue.push_back(n);
            }
        }
    }
    out
}

type Attempt = (Vec<bool>, Vec<Pos>, State);

fn attempt(
    rng: &mut ChaCha8Rng,
    n_boxes: usize,
    height: usize,
    width: usize,
    max_pulls: usize,
) -> Option<Attempt> {
    let floor = carve(rng, height, width);
    let mut cells: Vec<Pos> = (0..floor.len())
        .filter(|&i| floor[i])
        .map(|i| Pos::new(i / width, i % width))
        .collect();
    if cells.len() < n_boxes + 2 {
        return None;
    }
    cells.shuffle(rng);
    let targets: Vec<Pos> = cells[..n_boxes].to_vec();
    let mut state = State::new(cells[n_boxes], targets.clone());
    let is_free = |s: &State, p: Pos| {
        p.row < height && p.col < width && floor[p.row * width + p.col] && !s.has_box(p)
    };

    for _ in 0..max_pulls {
        let region = reachable(&floor, width, &state);
        let mut pulls = Vec::new();
        for &p in &region {
            for d in Direction::ALL {
                let (Some(b), Some(back)) = (p.step(d), p.step(d.opposite())) else {
                    continue;
                };
                if state.has_box(b) && is_free(&state, back) {
                    pulls.push((p, d, b, back));
                }
            }
        }
        let Some(&(p, _, b, back)) = pulls.choose(rng) else {
            break;
        };
        let mut boxes = state.boxes.clone();
        let slot = boxes.binary_search(&b).ok()?;
        boxes[slot] = p;
        state = State::new(back, boxes);
    }
    let region = reachable(&floor, width, &state);
    state.player = *region.choose(rng)?;

    let mut sorted_targets = targets.clone();
    sorted_targets.sort_unstable();
    if state.boxes == sorted_targets {
        return None;
    }
    Some((floor, targets, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::is_solved;
    use crate::planner::{solve_astar, HeuristicMode, PlanStatus};

    #[test]
    fn generated_level_is_solvable_and_unsolved() {
        for seed in 0..20 {
            let level = generate(seed, 1, 7, 7, 20).unwrap();
            assert!(!is_solved(&level, &level.initial_state()));
            let res = solve_astar(&level, &level.initial_state(), HeuristicMode::MinMatching, None);
            assert!(matches!(res.status, PlanStatus::Solved { .. }), "seed {seed}");
            // outer ring is wall
            for c in 0..7 {
                assert!(level.is_wall(Pos::new(0, c)) && level.is_wall(Pos::new(6, c)));
            }
        }
    }

    #[test]
    fn same_seed_same_level() {
        let a = generate(42, 2, 7, 7, 20).unwrap();
        let b = generate(42, 2, 7, 7, 20).unwrap();
        assert_eq!(a, b);
        let c = generate(43, 2, 7, 7, 20).unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn rejects_tiny_boards() {
        assert!(matches!(generate(0, 1, 4, 7, 20), Err(LevelIoError::Generation(_))));
        assert!(matches!(generate(0, 0, 7, 7, 20), Err(LevelIoError::Generation(_))));
    }

    #[test]
    fn crowded_board_fails_cleanly() {
        // a 5x5 board has at most 9 floor cells
        assert!(matches!(generate(0, 9, 5, 5, 10), Err(LevelIoError::Generation(_))));
    }
}
