use std::fs;
use std::io::{BufRead, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AgentError, ArchSpec, PolicyParams};

pub const CHECKPOINT_MAGIC: &str = "SOKOSHAPE-CKPT 1";

#[derive(Serialize, Deserialize)]
struct Header {
    arch: ArchSpec,
    n_params: usize,
}

/// Layout: the magic line, one JSON line with the architecture, then the
/// weights and the RMSprop accumulators as little-endian `f64`.
pub fn save_checkpoint(params: &PolicyParams, path: &Path) -> Result<(), AgentError> {
    let io = |source| AgentError::Io { path: path.to_path_buf(), source };
    let header = Header { arch: params.arch().clone(), n_params: params.len() };
    let mut buf = Vec::with_capacity(64 + 16 * params.len());
    writeln!(buf, "{CHECKPOINT_MAGIC}").map_err(io)?;
    serde_json::to_writer(&mut buf, &header).map_err(|e| AgentError::Checkpoint(e.to_string()))?;
    buf.push(b'\n');
    for v in params.theta.iter().chain(&params.accum) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, buf).map_err(io)
}

pub fn load_checkpoint(path: &Path) -> Result<PolicyParams, AgentError> {
    let io = |source| AgentError::Io { path: path.to_path_buf(), source };
    let bytes = fs::read(path).map_err(io)?;
    let mut reader = bytes.as_slice();
    let mut magic = String::new();
    reader.read_line(&mut magic).map_err(io)?;
    if magic.trim_end() != CHECKPOINT_MAGIC {
        return Err(AgentError::Checkpoint(format!(
            "{} does not start with {CHECKPOINT_MAGIC:?}",
            path.display()
        )));
    }
    let mut line = String::new();
    reader.read_line(&mut line).map_err(io)?;
    let header: Header = serde_json::from_str(&line).map_err(|e| AgentError::Checkpoint(e.to_string()))?;
    let mut read_array = |n: usize| -> Result<Vec<f64>, AgentError> {
        let mut raw = vec![0u8; 8 * n];
        reader
            .read_exact(&mut raw)
            .map_err(|_| AgentError::Checkpoint(format!("{} is truncated", path.display())))?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    };
    let theta = read_array(header.n_params)?;
    let accum = read_array(header.n_params)?;
    if !reader.is_empty() {
        return Err(AgentError::Checkpoint(format!("{} has trailing bytes", path.display())));
    }
    PolicyParams::from_parts(header.arch, theta, accum)
}
