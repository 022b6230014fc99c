//! XSB parsing/serialization, procedural generation and level-set manifests.

mod generate;
mod xsb;

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::game::{GameError, Level};

pub use generate::generate;
pub use xsb::{canonical, parse_xsb, parse_xsb_many, serialize_xsb};

#[derive(Debug, Error)]
pub enum LevelIoError {
    #[error("parse error at line {line}, column {column}: unexpected character {found:?}")]
    Parse {
        line: usize,
        column: usize,
        found: char,
    },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("generation error: {0}")]
    Generation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl From<GameError> for LevelIoError {
    fn from(e: GameError) -> Self {
        LevelIoError::Validation(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LevelSource {
    File(PathBuf),
    Generated { seed: u64 },
}

#[derive(Debug, Clone)]
pub struct LevelSet {
    pub levels: Vec<Level>,
    pub n_boxes: usize,
    pub source: LevelSource,
}

/// Generation parameters for a whole set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerateSpec {
    pub count: usize,
    pub n_boxes: usize,
    pub height: usize,
    pub width: usize,
    pub max_pulls: usize,
}

impl Default for GenerateSpec {
    fn default() -> Self {
        Self {
            count: 20,
            n_boxes: 1,
            height: 7,
            width: 7,
            max_pulls: 20,
        }
    }
}

/// Seed of the `index`-th level of a generated set.
pub fn level_seed(set_seed: u64, index: usize) -> u64 {
    // splitmix64 finaliser over (seed, index)
    let mut z = set_seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index as u64 + 1);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl LevelSet {
    pub fn new(levels: Vec<Level>, source: LevelSource) -> Result<Self, LevelIoError> {
        let Some(first) = levels.first() else {
            return Err(LevelIoError::Validation("level set is empty".into()));
        };
        let n_boxes = first.n_boxes();
        if let Some(bad) = levels.iter().find(|l| l.n_boxes() != n_boxes) {
            return Err(LevelIoError::Validation(format!(
                "level {} has {} boxes, set has {n_boxes}",
                bad.id(),
                bad.n_boxes()
            )));
        }
        Ok(Self {
            levels,
            n_boxes,
            source,
        })
    }

    pub fn generate(seed: u64, spec: GenerateSpec) -> Result<Self, LevelIoError> {
        let levels = (0..spec.count)
            .map(|i| {
                generate(
                    level_seed(seed, i),
                    spec.n_boxes,
                    spec.height,
                    spec.width,
                    spec.max_pulls,
                )
                .map(|l| l.with_id(format!("s{seed}-b{}-{i:03}", spec.n_boxes)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(levels, LevelSource::Generated { seed })
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Loads either a manifest (first meaningful line is `n_boxes = k`) or a
    /// plain XSB file holding one or more levels.
    pub fn load(path: &Path) -> Result<Self, LevelIoError> {
        let text = read(path)?;
        let first = text
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty() && !l.starts_with('#') && !l.starts_with(';'));
        if first.is_some_and(|l| l.starts_with("n_boxes")) {
            return Self::load_manifest(path, &text);
        }
        let levels = named(parse_xsb_many(&text)?, path);
        Self::new(levels, LevelSource::File(path.to_path_buf()))
    }

    fn load_manifest(path: &Path, text: &str) -> Result<Self, LevelIoError> {
        let base = path.parent().unwrap_or(Path::new("."));
        let mut n_boxes = None;
        let mut levels = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("n_boxes") {
                let value = rest.trim_start().strip_prefix('=').map(str::trim);
                n_boxes = Some(value.and_then(|v| v.parse::<usize>().ok()).ok_or_else(|| {
                    LevelIoError::Validation(format!(
                        "{}:{}: expected `n_boxes = <count>`",
                        path.display(),
                        i + 1
                    ))
                })?);
                continue;
            }
            let file = base.join(line);
            levels.extend(named(parse_xsb_many(&read(&file)?)?, &file));
        }
        let set = Self::new(levels, LevelSource::File(path.to_path_buf()))?;
        match n_boxes {
            Some(n) if n != set.n_boxes => Err(LevelIoError::Validation(format!(
                "manifest declares {n} boxes but levels have {}",
                set.n_boxes
            ))),
            _ => Ok(set),
        }
    }

    /// Writes one XSB file per level plus `levels.manifest` into `dir`.
    /// Returns the manifest path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, LevelIoError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| LevelIoError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let mut manifest = format!("# level set\nn_boxes = {}\n", self.n_boxes);
        for (i, level) in self.levels.iter().enumerate() {
            let name = format!("level_{i:03}.xsb");
            let file = dir.join(&name);
            let body = format!("; {}\n{}", level.id(), serialize_xsb(level));
            fs::write(&file, body).map_err(io(&file))?;
            manifest.push_str(&name);
            manifest.push('\n');
        }
        let path = dir.join("levels.manifest");
        fs::write(&path, manifest).map_err(io(&path))?;
        Ok(path)
    }
}

fn read(path: &Path) -> Result<String, LevelIoError> {
    fs::read_to_string(path).map_err(|source| LevelIoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn named(levels: Vec<Level>, path: &Path) -> Vec<Level> {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let many = levels.len() > 1;
    levels
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            if many {
                l.with_id(format!("{stem}#{i}"))
            } else {
                l.with_id(stem.clone())
            }
        })
        .collect()
}
