//! Plain-text parameter checkpoints.
//!
//! ```text
//! VARORDER-NET 1
//! embed 32
//! rounds 3
//! hidden 128
//! var_features 2
//! con_features 2
//! scalar f64
//! count 58369
//! <one value per line>
//! ```

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use super::features::{CON_FEATURES, VAR_FEATURES};
use super::net::{NetParams, NetShape};
use super::Scalar;

const MAGIC: &str = "VARORDER-NET 1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("checkpoint shape {found:?} does not match expected {expected:?}")]
    ShapeMismatch { found: NetShape, expected: NetShape },
}

fn fmt_err(line: usize, msg: impl Into<String>) -> CheckpointError {
    CheckpointError::Format { line, msg: msg.into() }
}

pub fn write_checkpoint<T: Scalar>(params: &NetParams<T>) -> String {
    let s = params.shape();
    let mut out = format!(
        "{MAGIC}\nembed {}\nrounds {}\nhidden {}\nvar_features {VAR_FEATURES}\ncon_features {CON_FEATURES}\nscalar {}\ncount {}\n",
        s.embed,
        s.rounds,
        s.hidden,
        T::NAME,
        params.len()
    );
    for x in params.data() {
        // `{:e}` on Rust floats prints the shortest round-tripping form.
        out.push_str(&format!("{x:e}\n"));
    }
    out
}

pub fn save_checkpoint<T: Scalar>(params: &NetParams<T>, path: impl AsRef<Path>) -> io::Result<()> {
    fs::write(path, write_checkpoint(params))
}

/// Parses a checkpoint. Values stored in the other precision are converted.
pub fn parse_checkpoint<T: Scalar>(text: &str) -> Result<NetParams<T>, CheckpointError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, MAGIC)) => {}
        _ => return Err(fmt_err(1, format!("expected `{MAGIC}`"))),
    }
    let mut header = |key: &str| -> Result<String, CheckpointError> {
        let (no, line) = lines.next().ok_or_else(|| fmt_err(0, format!("missing `{key}`")))?;
        let rest = line
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| fmt_err(no, format!("expected `{key} <value>`")))?;
        Ok(rest.trim().to_string())
    };
    let num = |key: &str, v: String| -> Result<usize, CheckpointError> {
        v.parse().map_err(|_| fmt_err(0, format!("bad {key} `{v}`")))
    };
    let embed = num("embed", header("embed")?)?;
    let rounds = num("rounds", header("rounds")?)?;
    let hidden = num("hidden", header("hidden")?)?;
    let vf = num("var_features", header("var_features")?)?;
    let cf = num("con_features", header("con_features")?)?;
    let scalar = header("scalar")?;
    let count = num("count", header("count")?)?;
    if vf != VAR_FEATURES || cf != CON_FEATURES {
        return Err(fmt_err(0, format!("feature widths {vf}/{cf} unsupported")));
    }
    if scalar != "f64" && scalar != "f32" {
        return Err(fmt_err(7, format!("unknown scalar `{scalar}`")));
    }
    let shape = NetShape { embed, rounds, hidden };
    let mut data = Vec::with_capacity(count);
    for (no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let x: f64 = line.parse().map_err(|_| fmt_err(no, format!("bad value `{line}`")))?;
        data.push(T::from_f64_lossy(x));
    }
    if data.len() != count {
        return Err(fmt_err(0, format!("expected {count} values, found {}", data.len())));
    }
    NetParams::from_data(shape, data)
        .ok_or_else(|| fmt_err(0, format!("count {count} does not fit shape {shape:?}")))
}

pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<NetParams<T>, CheckpointError> {
    parse_checkpoint(&fs::read_to_string(path)?)
}

/// Loads a checkpoint and checks it has the expected shape.
pub fn load_checkpoint_as<T: Scalar>(
    path: impl AsRef<Path>,
    expected: NetShape,
) -> Result<NetParams<T>, CheckpointError> {
    let params = load_checkpoint(path)?;
    if params.shape() != expected {
        return Err(CheckpointError::ShapeMismatch { found: params.shape(), expected });
    }
    Ok(params)
}
