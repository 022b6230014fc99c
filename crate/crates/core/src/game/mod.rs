//! Deterministic Sokoban engine: board model, push dynamics, rewards and
//! observation encoding.

mod level;
mod observation;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use level::Level;
pub use observation::{decode_symbolic, encode, encode_into, Encoding, Observation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("invalid level: {0}")]
    InvalidLevel(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("episode already terminated")]
    EpisodeOver,
}

/// Grid coordinate, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub row: usize,
    pub col: usize,
}

impl Pos {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// Neighbour in `dir`, or `None` when it would leave the non-negative quadrant.
    pub fn step(self, dir: Direction) -> Option<Pos> {
        let (dr, dc) = dir.delta();
        let row = self.row.checked_add_signed(dr)?;
        let col = self.col.checked_add_signed(dc)?;
        Some(Pos { row, col })
    }

    pub fn manhattan(self, other: Pos) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Up,
        Direction::Down,
        Direction::Left,
        Direction::Right,
    ];

    pub fn delta(self) -> (isize, isize) {
        match self {
            Direction::Up => (-1, 0),
            Direction::Down => (1, 0),
            Direction::Left => (0, -1),
            Direction::Right => (0, 1),
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }

    pub fn action(self) -> Action {
        match self {
            Direction::Up => Action::Up,
            Direction::Down => Action::Down,
            Direction::Left => Action::Left,
            Direction::Right => Action::Right,
        }
    }

    /// Plan letter: `U`, `D`, `L` or `R`.
    pub fn letter(self) -> char {
        match self {
            Direction::Up => 'U',
            Direction::Down => 'D',
            Direction::Left => 'L',
            Direction::Right => 'R',
        }
    }
}

/// Agent action. The discriminants fix the argmax tie-breaking order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Action {
    NoOp = 0,
    Up = 1,
    Down = 2,
    Left = 3,
    Right = 4,
}

impl Action {
    pub const COUNT: usize = 5;
    pub const ALL: [Action; 5] = [
        Action::NoOp,
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }

    pub fn direction(self) -> Option<Direction> {
        match self {
            Action::NoOp => None,
            Action::Up => Some(Direction::Up),
            Action::Down => Some(Direction::Down),
            Action::Left => Some(Direction::Left),
            Action::Right => Some(Direction::Right),
        }
    }
}

/// Dynamic configuration over a [`Level`]. `boxes` is kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State {
    pub player: Pos,
    pub boxes: Vec<Pos>,
    pub steps_taken: u32,
}

impl State {
    pub fn new(player: Pos, mut boxes: Vec<Pos>) -> Self {
        boxes.sort_unstable();
        Self {
            player,
            boxes,
            steps_taken: 0,
        }
    }

    pub fn has_box(&self, p: Pos) -> bool {
        self.boxes.binary_search(&p).is_ok()
    }

    /// Same placement, step counter ignored.
    pub fn same_placement(&self, other: &State) -> bool {
        self.player == other.player && self.boxes == other.boxes
    }
}

/// Reward events emitted by one transition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Events {
    pub box_on_target: bool,
    pub box_off_target: bool,
    pub solved: bool,
}

impl Events {
    pub fn is_empty(&self) -> bool {
        !(self.box_on_target || self.box_off_target || self.solved)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub solved: f64,
    pub box_on_target: f64,
    pub box_off_target: f64,
    pub per_step: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            solved: 10.0,
            box_on_target: 1.0,
            box_off_target: -1.0,
            per_step: -0.1,
        }
    }
}

impl RewardConfig {
    pub fn compute(&self, events: Events, per_step: bool) -> f64 {
        let mut r = 0.0;
        if events.solved {
            r += self.solved;
        }
        if events.box_on_target {
            r += self.box_on_target;
        }
        if events.box_off_target {
            r += self.box_off_target;
        }
        if per_step {
            r += self.per_step;
        }
        r
    }
}

/// Reward of a transition under the default reward table.
pub fn compute_reward(events: Events, per_step: bool) -> f64 {
    RewardConfig::default().compute(events, per_step)
}

pub const DEFAULT_STEP_CAP: u32 = 120;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub step_cap: u32,
    pub rewards: RewardConfig,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            step_cap: DEFAULT_STEP_CAP,
            rewards: RewardConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: State,
    pub reward: f64,
    pub solved: bool,
    pub truncated: bool,
    pub events: Events,
}

impl StepOutcome {
    pub fn done(&self) -> bool {
        self.solved || self.truncated
    }
}

pub fn is_solved(level: &Level, state: &State) -> bool {
    state.boxes.as_slice() == level.targets()
}

/// Applies the move rules only: no validation, no reward, no step counting.
/// Returns the next placement and the events it produced.
pub fn apply_move(level: &Level, state: &State, action: Action) -> (State, Events) {
    let mut next = state.clone();
    let mut events = Events::default();
    let Some(dir) = action.direction() else {
        return (next, events);
    };
    let Some(dest) = state.player.step(dir).filter(|d| !level.is_wall(*d)) else {
        return (next, events);
    };
    match state.boxes.binary_search(&dest) {
        Err(_) => next.player = dest,
        Ok(slot) => {
            let Some(beyond) = dest.step(dir) else {
                return (next, events);
            };
            if level.is_wall(beyond) || state.has_box(beyond) {
                return (next, events);
            }
            next.boxes.remove(slot);
            let at = next.boxes.binary_search(&beyond).unwrap_err();
            next.boxes.insert(at, beyond);
            next.player = dest;
            let was_on = level.is_target(dest);
            let now_on = level.is_target(beyond);
            events.box_on_target = now_on && !was_on;
            events.box_off_target = was_on && !now_on;
        }
    }
    events.solved = is_solved(level, &next);
    (next, events)
}

/// One environment transition.
pub fn step(
    level: &Level,
    state: &State,
    action: Action,
    config: &EnvConfig,
) -> Result<StepOutcome, GameError> {
    level.validate_state(state)?;
    if is_solved(level, state) || state.steps_taken >= config.step_cap {
        return Err(GameError::EpisodeOver);
    }
    let (mut next_state, events) = apply_move(level, state, action);
    next_state.steps_taken = state.steps_taken + 1;
    let solved = events.solved;
    let truncated = !solved && next_state.steps_taken >= config.step_cap;
    Ok(StepOutcome {
        reward: config.rewards.compute(events, true),
        next_state,
        solved,
        truncated,
        events,
    })
}
