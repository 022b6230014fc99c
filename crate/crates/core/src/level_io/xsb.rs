use crate::game::{Level, Pos};

use super::LevelIoError;

/// Parses a single level. Lines starting with `;` are comments.
pub fn parse_xsb(text: &str) -> Result<Level, LevelIoError> {
    let mut levels = parse_xsb_many(text)?;
    match levels.len() {
        1 => Ok(levels.remove(0)),
        0 => Err(LevelIoError::Validation("no level found".into())),
        n => Err(LevelIoError::Validation(format!(
            "expected one level, found {n}"
        ))),
    }
}

/// Parses every level in `text`; levels are separated by blank lines.
pub fn parse_xsb_many(text: &str) -> Result<Vec<Level>, LevelIoError> {
    let mut levels = Vec::new();
    let mut block: Vec<(usize, &str)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if !block.is_empty() {
                levels.push(parse_block(&block, levels.len())?);
                block.clear();
            }
        } else if !line.starts_with(';') {
            block.push((i + 1, line));
        }
    }
    if !block.is_empty() {
        levels.push(parse_block(&block, levels.len())?);
    }
    Ok(levels)
}

fn parse_block(rows: &[(usize, &str)], ordinal: usize) -> Result<Level, LevelIoError> {
    let height = rows.len();
    let width = rows
        .iter()
        .map(|(_, l)| l.trim_end().chars().count())
        .max()
        .unwrap_or(0);
    let (mut walls, mut targets, mut boxes, mut players) = (vec![], vec![], vec![], vec![]);
    for (r, (line_no, line)) in rows.iter().enumerate() {
        for (c, ch) in line.trim_end().chars().enumerate() {
            let p = Pos::new(r, c);
            match ch {
                '#' => walls.push(p),
                '@' => players.push(p),
                '+' => {
                    players.push(p);
                    targets.push(p);
                }
                '$' => boxes.push(p),
                '*' => {
                    boxes.push(p);
                    targets.push(p);
                }
                '.' => targets.push(p),
                ' ' | '-' | '_' => {}
                other => {
                    return Err(LevelIoError::Parse {
                        line: *line_no,
                        column: c + 1,
                        found: other,
                    })
                }
            }
        }
    }
    let player = match players.as_slice() {
        [p] => *p,
        [] => return Err(LevelIoError::Validation("level has no player".into())),
        _ => {
            return Err(LevelIoError::Validation(format!(
                "level has {} players",
                players.len()
            )))
        }
    };
    if boxes.len() != targets.len() {
        return Err(LevelIoError::Validation(format!(
            "{} boxes but {} targets",
            boxes.len(),
            targets.len()
        )));
    }
    Ok(Level::new(
        format!("xsb-{ordinal}"),
        height,
        width,
        walls,
        targets,
        player,
        boxes,
    )?)
}

/// Serializes a level in its initial configuration. Trailing spaces are
/// trimmed and every row ends with `\n`.
pub fn serialize_xsb(level: &Level) -> String {
    let mut out = String::with_capacity((level.width() + 1) * level.height());
    let boxes = level.initial_boxes();
    for r in 0..level.height() {
        let mut row = String::with_capacity(level.width());
        for c in 0..level.width() {
            let p = Pos::new(r, c);
            let target = level.is_target(p);
            let ch = if level.is_wall(p) {
                '#'
            } else if level.initial_player() == p {
                if target {
                    '+'
                } else {
                    '@'
                }
            } else if boxes.binary_search(&p).is_ok() {
                if target {
                    '*'
                } else {
                    '$'
                }
            } else if target {
                '.'
            } else {
                ' '
            };
            row.push(ch);
        }
        out.push_str(row.trim_end());
        out.push('\n');
    }
    out
}

/// Canonical text form: trailing whitespace removed per row, comment and
/// surrounding blank lines dropped, LF endings, one final newline.
pub fn canonical(text: &str) -> String {
    let rows: Vec<&str> = text
        .lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .filter(|l| !l.starts_with(';'))
        .map(str::trim_end)
        .collect();
    let start = rows.iter().position(|l| !l.is_empty()).unwrap_or(rows.len());
    let end = rows.iter().rposition(|l| !l.is_empty()).map_or(start, |e| e + 1);
    let mut out = String::new();
    for row in &rows[start..end] {
        out.push_str(&row.replace(['-', '_'], " "));
        out.push('\n');
    }
    out
}
