use std::collections::VecDeque;

use crate::game::{Direction, Level, State};

/// Cells from which a lone box can never reach any target.
///
/// Computed by pulling a box backwards from every target: a cell is live if
/// some target is reachable from it by pushes with no other boxes around.
/// Everything else that is floor is dead. This covers corners and wall-hugging
/// runs without a target.
#[derive(Debug, Clone)]
pub struct DeadCells {
    dead: Vec<bool>,
}

impl DeadCells {
    pub fn new(level: &Level) -> Self {
        let n = level.n_cells();
        let mut live = vec![false; n];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for t in level.targets() {
            let i = level.index(*t);
            if !live[i] {
                live[i] = true;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            let b = level.pos_of(i);
            for d in Direction::ALL {
                // box moves b -> b+d, player moves b+d -> b+2d
                let Some(next) = b.step(d) else { continue };
                let Some(stand) = next.step(d) else { continue };
                if level.is_wall(next) || level.is_wall(stand) {
                    continue;
                }
                let j = level.index(next);
                if !live[j] {
                    live[j] = true;
                    queue.push_back(j);
                }
            }
        }
        let dead = (0..n)
            .map(|i| !live[i] && !level.is_wall(level.pos_of(i)))
            .collect();
        Self { dead }
    }

    pub fn is_dead(&self, index: usize) -> bool {
        self.dead[index]
    }
}

/// Sound but incomplete: `true` means the state cannot be solved.
pub fn is_deadlocked_static(level: &Level, state: &State) -> bool {
    let dead = DeadCells::new(level);
    state
        .boxes
        .iter()
        .any(|b| !level.is_target(*b) && dead.is_dead(level.index(*b)))
}
