//! Micro corpus: boards of at most 6x6 with one or two boxes.

use sokoshape::level_io::{generate, parse_xsb};
use sokoshape::Level;

const HANDWRITTEN: &[&str] = &[
    "#####\n#@$.#\n#####",
    "######\n#@$ .#\n######",
    "######\n#.  @#\n# $  #\n#    #\n######",
    "######\n#.$@ #\n# $ .#\n#    #\n######",
    "######\n#    #\n#.*$@#\n#    #\n######",
    "######\n#$  .#\n# @  #\n######",
    "######\n#.$$.#\n#  @ #\n######",
    "#####\n#. .#\n#$$ #\n# @ #\n#####",
    "######\n# .  #\n# $$ #\n#. @ #\n######",
    "######\n#@   #\n# $# #\n#  . #\n######",
];

pub fn micro_corpus() -> Vec<Level> {
    let mut levels: Vec<Level> = HANDWRITTEN
        .iter()
        .enumerate()
        .map(|(i, t)| parse_xsb(t).unwrap().with_id(format!("hand-{i}")))
        .collect();
    let mut seed = 0;
    while levels.len() < 50 {
        let (boxes, size) = match levels.len() % 4 {
            0 => (1, 5),
            1 => (1, 6),
            2 => (2, 6),
            _ => (2, 5),
        };
        if let Ok(level) = generate(1000 + seed, boxes, size, size, 20) {
            levels.push(level);
        }
        seed += 1;
    }
    levels
}
