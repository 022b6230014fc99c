use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeSet;
use std::hash::{Hash, Hasher};

use super::{GameError, Pos, State};

/// Board geometry plus the initial placement of the player and boxes.
///
/// Levels are immutable once built; every constructor path goes through
/// [`Level::new`], which enforces the board invariants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Level {
    id: String,
    height: usize,
    width: usize,
    walls: Vec<bool>,
    target_mask: Vec<bool>,
    targets: Vec<Pos>,
    initial_player: Pos,
    initial_boxes: Vec<Pos>,
    fingerprint: u64,
}

impl Level {
    pub fn new(
        id: impl Into<String>,
        height: usize,
        width: usize,
        walls: impl IntoIterator<Item = Pos>,
        targets: impl IntoIterator<Item = Pos>,
        initial_player: Pos,
        initial_boxes: impl IntoIterator<Item = Pos>,
    ) -> Result<Self, GameError> {
        if height == 0 || width == 0 {
            return Err(GameError::InvalidLevel("empty board".into()));
        }
        let in_bounds = |p: Pos| p.row < height && p.col < width;
        let mut wall_grid = vec![false; height * width];
        for w in walls {
            if !in_bounds(w) {
                return Err(GameError::InvalidLevel(format!("wall {w} out of bounds")));
            }
            wall_grid[w.row * width + w.col] = true;
        }
        let targets: BTreeSet<Pos> = targets.into_iter().collect();
        let boxes: BTreeSet<Pos> = initial_boxes.into_iter().collect();
        if targets.is_empty() {
            return Err(GameError::InvalidLevel("level has no targets".into()));
        }
        if targets.len() != boxes.len() {
            return Err(GameError::InvalidLevel(format!(
                "{} boxes but {} targets",
                boxes.len(),
                targets.len()
            )));
        }
        for (what, p) in targets
            .iter()
            .map(|p| ("target", *p))
            .chain(boxes.iter().map(|p| ("box", *p)))
            .chain(std::iter::once(("player", initial_player)))
        {
            if !in_bounds(p) {
                return Err(GameError::InvalidLevel(format!("{what} {p} out of bounds")));
            }
            if wall_grid[p.row * width + p.col] {
                return Err(GameError::InvalidLevel(format!("{what} {p} on a wall")));
            }
        }
        if boxes.contains(&initial_player) {
            return Err(GameError::InvalidLevel(format!(
                "player {initial_player} on a box"
            )));
        }
        let mut target_mask = vec![false; height * width];
        for t in &targets {
            target_mask[t.row * width + t.col] = true;
        }
        let targets: Vec<Pos> = targets.into_iter().collect();
        let initial_boxes: Vec<Pos> = boxes.into_iter().collect();

        let mut hasher = DefaultHasher::new();
        (height, width, &wall_grid, &targets, initial_player, &initial_boxes).hash(&mut hasher);
        let fingerprint = hasher.finish();

        Ok(Self {
            id: id.into(),
            height,
            width,
            walls: wall_grid,
            target_mask,
            targets,
            initial_player,
            initial_boxes,
            fingerprint,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n_cells(&self) -> usize {
        self.height * self.width
    }

    pub fn n_boxes(&self) -> usize {
        self.targets.len()
    }

    /// Sorted target cells.
    pub fn targets(&self) -> &[Pos] {
        &self.targets
    }

    pub fn initial_player(&self) -> Pos {
        self.initial_player
    }

    /// Sorted initial box cells.
    pub fn initial_boxes(&self) -> &[Pos] {
        &self.initial_boxes
    }

    /// Content hash of the geometry and initial placement (the id is excluded).
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn in_bounds(&self, p: Pos) -> bool {
        p.row < self.height && p.col < self.width
    }

    pub fn index(&self, p: Pos) -> usize {
        p.row * self.width + p.col
    }

    pub fn pos_of(&self, index: usize) -> Pos {
        Pos::new(index / self.width, index % self.width)
    }

    /// Out-of-bounds cells count as walls.
    pub fn is_wall(&self, p: Pos) -> bool {
        !self.in_bounds(p) || self.walls[self.index(p)]
    }

    pub fn is_target(&self, p: Pos) -> bool {
        self.in_bounds(p) && self.target_mask[self.index(p)]
    }

    pub fn walls(&self) -> impl Iterator<Item = Pos> + '_ {
        self.walls
            .iter()
            .enumerate()
            .filter(|(_, w)| **w)
            .map(|(i, _)| self.pos_of(i))
    }

    pub fn initial_state(&self) -> State {
        State {
            player: self.initial_player,
            boxes: self.initial_boxes.clone(),
            steps_taken: 0,
        }
    }

    /// Checks the dynamic-state invariants against this board.
    pub fn validate_state(&self, state: &State) -> Result<(), GameError> {
        if state.boxes.len() != self.targets.len() {
            return Err(GameError::InvalidState(format!(
                "{} boxes on a {}-target board",
                state.boxes.len(),
                self.targets.len()
            )));
        }
        if state.boxes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GameError::InvalidState(
                "boxes must be sorted and pairwise distinct".into(),
            ));
        }
        if self.is_wall(state.player) {
            return Err(GameError::InvalidState(format!(
                "player {} on a wall",
                state.player
            )));
        }
        for b in &state.boxes {
            if self.is_wall(*b) {
                return Err(GameError::InvalidState(format!("box {b} on a wall")));
            }
            if *b == state.player {
                return Err(GameError::InvalidState(format!("player on box {b}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(r: usize, c: usize) -> Pos {
        Pos::new(r, c)
    }

    fn border(h: usize, w: usize) -> Vec<Pos> {
        let mut v = Vec::new();
        for r in 0..h {
            for c in 0..w {
                if r == 0 || c == 0 || r == h - 1 || c == w - 1 {
                    v.push(p(r, c));
                }
            }
        }
        v
    }

    #[test]
    fn rejects_box_target_mismatch() {
        let err = Level::new("x", 3, 5, border(3, 5), [p(1, 3)], p(1, 1), []).unwrap_err();
        assert!(matches!(err, GameError::InvalidLevel(_)));
    }

    #[test]
    fn rejects_entity_on_wall() {
        let err = Level::new("x", 3, 5, border(3, 5), [p(0, 3)], p(1, 1), [p(1, 2)]).unwrap_err();
        assert!(err.to_string().contains("wall"));
    }

    #[test]
    fn rejects_player_on_box() {
        assert!(Level::new("x", 3, 5, border(3, 5), [p(1, 3)], p(1, 2), [p(1, 2)]).is_err());
    }

    #[test]
    fn fingerprint_ignores_id() {
        let a = Level::new("a", 3, 5, border(3, 5), [p(1, 3)], p(1, 1), [p(1, 2)]).unwrap();
        let b = a.clone().with_id("b");
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = Level::new("a", 3, 5, border(3, 5), [p(1, 2)], p(1, 1), [p(1, 3)]).unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }
}
