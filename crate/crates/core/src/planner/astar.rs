use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};

use crate::game::{is_solved, Direction, Level, Pos, State};

use super::deadlock::DeadCells;
use super::heuristic::{heuristic_from, HeuristicMode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanStatus {
    Solved { plan: Vec<Direction>, length: usize },
    Unsolvable,
    Budget,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanResult {
    pub status: PlanStatus,
    pub nodes_expanded: usize,
}

impl PlanResult {
    pub fn length(&self) -> Option<usize> {
        match &self.status {
            PlanStatus::Solved { length, .. } => Some(*length),
            _ => None,
        }
    }

    pub fn plan(&self) -> Option<&[Direction]> {
        match &self.status {
            PlanStatus::Solved { plan, .. } => Some(plan),
            _ => None,
        }
    }
}

/// Plan as a string over `U`, `D`, `L`, `R`.
pub fn plan_string(plan: &[Direction]) -> String {
    plan.iter().map(|d| d.letter()).collect()
}

/// Packed search key: player cell index followed by sorted box indices.
type Key = Box<[u16]>;

struct Node {
    key: Key,
    g: u32,
    parent: u32,
    via: Option<Direction>,
}

struct Board<'a> {
    level: &'a Level,
    dead: DeadCells,
    width: usize,
}

impl Board<'_> {
    fn neighbour(&self, cell: u16, dir: Direction) -> Option<u16> {
        let p = self.level.pos_of(cell as usize).step(dir)?;
        (!self.level.is_wall(p)).then(|| self.level.index(p) as u16)
    }

    fn h(&self, key: &[u16], mode: HeuristicMode, scratch: &mut (Vec<Pos>, Vec<Pos>)) -> u32 {
        let (boxes, targets) = scratch;
        boxes.clear();
        targets.clear();
        let w = self.width;
        let pos = |i: u16| Pos::new(i as usize / w, i as usize % w);
        for &b in &key[1..] {
            if !self.level.is_target(pos(b)) {
                boxes.push(pos(b));
            }
        }
        for t in self.level.targets() {
            let i = self.level.index(*t) as u16;
            if key[1..].binary_search(&i).is_err() {
                targets.push(*t);
            }
        }
        heuristic_from(boxes, targets, mode) as u32
    }

    fn is_goal(&self, key: &[u16]) -> bool {
        let w = self.width;
        key[1..]
            .iter()
            .all(|&b| self.level.is_target(Pos::new(b as usize / w, b as usize % w)))
    }

    /// Successor under one move, or `None` if the move is blocked or pushes a
    /// box onto a dead cell.
    fn successor(&self, key: &[u16], dir: Direction) -> Option<Key> {
        let dest = self.neighbour(key[0], dir)?;
        let boxes = &key[1..];
        match boxes.binary_search(&dest) {
            Err(_) => {
                let mut next: Key = key.into();
                next[0] = dest;
                Some(next)
            }
            Ok(slot) => {
                let beyond = self.neighbour(dest, dir)?;
                if boxes.binary_search(&beyond).is_ok() {
                    return None;
                }
                let beyond_pos = self.level.pos_of(beyond as usize);
                if self.dead.is_dead(beyond as usize) && !self.level.is_target(beyond_pos) {
                    return None;
                }
                let mut moved: Vec<u16> = boxes.to_vec();
                moved[slot] = beyond;
                moved.sort_unstable();
                let mut next = Vec::with_capacity(key.len());
                next.push(dest);
                next.extend(moved);
                Some(next.into_boxed_slice())
            }
        }
    }
}

pub(crate) fn pack(level: &Level, state: &State) -> Key {
    std::iter::once(level.index(state.player) as u16)
        .chain(state.boxes.iter().map(|b| level.index(*b) as u16))
        .collect()
}

/// Best-first search on `f = g + h` over exact (player, boxes) states with
/// unit cost per move. `node_budget = None` means unlimited.
pub fn solve_astar(
    level: &Level,
    state: &State,
    mode: HeuristicMode,
    node_budget: Option<usize>,
) -> PlanResult {
    if is_solved(level, state) {
        return PlanResult {
            status: PlanStatus::Solved {
                plan: Vec::new(),
                length: 0,
            },
            nodes_expanded: 0,
        };
    }
    let board = Board {
        level,
        dead: DeadCells::new(level),
        width: level.width(),
    };
    let root = pack(level, state);
    let unsolvable = PlanResult {
        status: PlanStatus::Unsolvable,
        nodes_expanded: 0,
    };
    if root[1..].iter().any(|&b| {
        board.dead.is_dead(b as usize) && !level.is_target(level.pos_of(b as usize))
    }) {
        return unsolvable;
    }

    let mut scratch = (Vec::new(), Vec::new());
    let mut nodes: Vec<Node> = Vec::new();
    let mut index: HashMap<Key, u32> = HashMap::new();
    // (f, h, insertion order, node)
    let mut open: BinaryHeap<Reverse<(u32, u32, u64, u32)>> = BinaryHeap::new();
    let mut seq = 0u64;

    let h0 = board.h(&root, mode, &mut scratch);
    index.insert(root.clone(), 0);
    nodes.push(Node {
        key: root,
        g: 0,
        parent: u32::MAX,
        via: None,
    });
    open.push(Reverse((h0, h0, seq, 0)));

    let mut expanded = 0usize;
    while let Some(Reverse((f, h, _, id))) = open.pop() {
        let g = nodes[id as usize].g;
        if g + h != f {
            continue; // stale entry, a cheaper path was found later
        }
        if board.is_goal(&nodes[id as usize].key) {
            return PlanResult {
                status: solved(&nodes, id),
                nodes_expanded: expanded,
            };
        }
        if node_budget.is_some_and(|b| expanded >= b) {
            return PlanResult {
                status: PlanStatus::Budget,
                nodes_expanded: expanded,
            };
        }
        expanded += 1;
        for dir in Direction::ALL {
            let Some(next) = board.successor(&nodes[id as usize].key, dir) else {
                continue;
            };
            let g2 = g + 1;
            let target = match index.entry(next) {
                Entry::Vacant(slot) => {
                    let nid = nodes.len() as u32;
                    let key = slot.key().clone();
                    slot.insert(nid);
                    nodes.push(Node {
                        key,
                        g: g2,
                        parent: id,
                        via: Some(dir),
                    });
                    nid
                }
                Entry::Occupied(slot) => {
                    let nid = *slot.get();
                    let node = &mut nodes[nid as usize];
                    if g2 >= node.g {
                        continue;
                    }
                    node.g = g2;
                    node.parent = id;
                    node.via = Some(dir);
                    nid
                }
            };
            let h2 = board.h(&nodes[target as usize].key, mode, &mut scratch);
            seq += 1;
            open.push(Reverse((g2 + h2, h2, seq, target)));
        }
    }
    PlanResult {
        nodes_expanded: expanded,
        ..unsolvable
    }
}

fn solved(nodes: &[Node], goal: u32) -> PlanStatus {
    let mut plan = Vec::new();
    let mut cur = goal;
    while let Some(dir) = nodes[cur as usize].via {
        plan.push(dir);
        cur = nodes[cur as usize].parent;
    }
    plan.reverse();
    let length = plan.len();
    PlanStatus::Solved { plan, length }
}
