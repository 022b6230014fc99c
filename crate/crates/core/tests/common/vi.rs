//! Exact value iteration over the reachable states of a small level.

use std::collections::HashMap;

use sokoshape::game::{apply_move, compute_reward, is_solved, Action, Level, State};

use super::bfs::reachable_states;

pub struct Mdp {
    pub states: Vec<State>,
    /// `next[s][a]` index of the successor
    pub next: Vec<[usize; Action::COUNT]>,
    /// raw reward of `(s, a)`
    pub reward: Vec<[f64; Action::COUNT]>,
    pub terminal: Vec<bool>,
}

impl Mdp {
    pub fn build(level: &Level) -> Mdp {
        let states = reachable_states(level);
        let index: HashMap<_, _> = states.iter().enumerate().map(|(i, s)| ((s.player, s.boxes.clone()), i)).collect();
        let mut next = Vec::with_capacity(states.len());
        let mut reward = Vec::with_capacity(states.len());
        let mut terminal = Vec::with_capacity(states.len());
        for (i, s) in states.iter().enumerate() {
            let mut n = [i; Action::COUNT];
            let mut r = [0.0; Action::COUNT];
            let solved = is_solved(level, s);
            for a in Action::ALL.into_iter().filter(|_| !solved) {
                let (sp, events) = apply_move(level, s, a);
                n[a.index()] = index[&(sp.player, sp.boxes.clone())];
                r[a.index()] = compute_reward(events, true);
            }
            next.push(n);
            reward.push(r);
            terminal.push(solved);
        }
        Mdp { states, next, reward, terminal }
    }

    /// Optimal action values with `bonus(s, a)` added to every reward.
    pub fn q_values(&self, gamma: f64, bonus: &dyn Fn(usize, usize) -> f64) -> Vec<[f64; Action::COUNT]> {
        let n = self.states.len();
        let mut v = vec![0.0; n];
        let mut q = vec![[0.0; Action::COUNT]; n];
        loop {
            let mut delta: f64 = 0.0;
            for s in 0..n {
                if self.terminal[s] {
                    continue;
                }
                let mut best = f64::NEG_INFINITY;
                for a in 0..Action::COUNT {
                    let sp = self.next[s][a];
                    let value = self.reward[s][a] + bonus(s, a) + gamma * v[sp];
                    q[s][a] = value;
                    best = best.max(value);
                }
                delta = delta.max((best - v[s]).abs());
                v[s] = best;
            }
            if delta < 1e-11 {
                return q;
            }
        }
    }
}

/// Actions whose value is within `tol` of the best.
pub fn argmax_set(q: &[f64; Action::COUNT], tol: f64) -> Vec<usize> {
    let best = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (0..Action::COUNT).filter(|&a| q[a] >= best - tol).collect()
}
