use serde::{Deserialize, Serialize};

use super::{Level, Pos, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Encoding {
    /// One-hot planes: wall, floor, target, box, box-on-target, player, player-on-target.
    Symbolic,
    /// Flat-colour RGB image, 8x8 pixels per cell.
    Pixel,
}

pub const SYMBOLIC_CHANNELS: usize = 7;
pub const PIXEL_CHANNELS: usize = 3;
pub const PIXELS_PER_CELL: usize = 8;

const CH_WALL: usize = 0;
const CH_FLOOR: usize = 1;
const CH_TARGET: usize = 2;
const CH_BOX: usize = 3;
const CH_BOX_ON_TARGET: usize = 4;
const CH_PLAYER: usize = 5;
const CH_PLAYER_ON_TARGET: usize = 6;

// RGB in [0,1], indexed by symbolic channel.
const PALETTE: [[f64; 3]; SYMBOLIC_CHANNELS] = [
    [0.45, 0.45, 0.45],
    [0.0, 0.0, 0.0],
    [0.85, 0.2, 0.2],
    [0.75, 0.55, 0.2],
    [0.3, 0.85, 0.3],
    [0.2, 0.4, 0.95],
    [0.6, 0.3, 0.95],
];

impl Encoding {
    pub fn channels(self) -> usize {
        match self {
            Encoding::Symbolic => SYMBOLIC_CHANNELS,
            Encoding::Pixel => PIXEL_CHANNELS,
        }
    }

    /// Output `(channels, height, width)` for a board of the given size.
    pub fn shape(self, height: usize, width: usize) -> (usize, usize, usize) {
        match self {
            Encoding::Symbolic => (SYMBOLIC_CHANNELS, height, width),
            Encoding::Pixel => (PIXEL_CHANNELS, height * PIXELS_PER_CELL, width * PIXELS_PER_CELL),
        }
    }
}

/// Channel-major `(channels, height, width)` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub encoding: Encoding,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Observation {
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn at(&self, c: usize, r: usize, col: usize) -> f64 {
        self.data[(c * self.height + r) * self.width + col]
    }
}

fn cell_channel(level: &Level, state: &State, p: Pos) -> usize {
    let target = level.is_target(p);
    if level.is_wall(p) {
        CH_WALL
    } else if state.player == p {
        if target {
            CH_PLAYER_ON_TARGET
        } else {
            CH_PLAYER
        }
    } else if state.has_box(p) {
        if target {
            CH_BOX_ON_TARGET
        } else {
            CH_BOX
        }
    } else if target {
        CH_TARGET
    } else {
        CH_FLOOR
    }
}

/// Writes the encoding into `out`, which must hold exactly `channels * h * w` values.
pub fn encode_into(level: &Level, state: &State, mode: Encoding, out: &mut [f64]) {
    let (channels, oh, ow) = mode.shape(level.height(), level.width());
    assert_eq!(out.len(), channels * oh * ow, "observation buffer size");
    out.fill(0.0);
    let (h, w) = (level.height(), level.width());
    for r in 0..h {
        for c in 0..w {
            let ch = cell_channel(level, state, Pos::new(r, c));
            match mode {
                Encoding::Symbolic => out[(ch * h + r) * w + c] = 1.0,
                Encoding::Pixel => {
                    let rgb = PALETTE[ch];
                    for (k, v) in rgb.iter().enumerate() {
                        for dy in 0..PIXELS_PER_CELL {
                            let row = r * PIXELS_PER_CELL + dy;
                            let base = (k * oh + row) * ow + c * PIXELS_PER_CELL;
                            out[base..base + PIXELS_PER_CELL].fill(*v);
                        }
                    }
                }
            }
        }
    }
}

pub fn encode(level: &Level, state: &State, mode: Encoding) -> Observation {
    let (channels, height, width) = mode.shape(level.height(), level.width());
    let mut data = vec![0.0; channels * height * width];
    encode_into(level, state, mode, &mut data);
    Observation {
        encoding: mode,
        channels,
        height,
        width,
        data,
    }
}

/// Decoded symbolic planes: `(walls, targets, player, boxes)`, each sorted.
pub type DecodedBoard = (Vec<Pos>, Vec<Pos>, Pos, Vec<Pos>);

/// Inverse of the symbolic encoding. Returns `None` if some cell is not one-hot
/// or the board does not hold exactly one player.
pub fn decode_symbolic(obs: &Observation) -> Option<DecodedBoard> {
    if obs.encoding != Encoding::Symbolic || obs.channels != SYMBOLIC_CHANNELS {
        return None;
    }
    let (mut walls, mut targets, mut boxes) = (Vec::new(), Vec::new(), Vec::new());
    let mut player = None;
    for r in 0..obs.height {
        for c in 0..obs.width {
            let hot: Vec<usize> = (0..SYMBOLIC_CHANNELS)
                .filter(|&ch| obs.at(ch, r, c) == 1.0)
                .collect();
            let total: f64 = (0..SYMBOLIC_CHANNELS).map(|ch| obs.at(ch, r, c)).sum();
            if hot.len() != 1 || total != 1.0 {
                return None;
            }
            let p = Pos::new(r, c);
            match hot[0] {
                CH_WALL => walls.push(p),
                CH_FLOOR => {}
                CH_TARGET => targets.push(p),
                CH_BOX => boxes.push(p),
                CH_BOX_ON_TARGET => {
                    boxes.push(p);
                    targets.push(p);
                }
                CH_PLAYER | CH_PLAYER_ON_TARGET => {
                    if player.replace(p).is_some() {
                        return None;
                    }
                    if hot[0] == CH_PLAYER_ON_TARGET {
                        targets.push(p);
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    targets.sort_unstable();
    Some((walls, targets, player?, boxes))
}
