//! Line-delimited JSON record of simulated frames.
//!
//! Line 1 is a header `{"format":"ilm-frames","version":1,"dt":…,"frames":N}`;
//! each following line is one [`SimFrame`].

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simulator::SimFrame;

pub const FORMAT: &str = "ilm-frames";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("no frames")]
    Empty,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("unsupported record {format:?} version {version}")]
    Unsupported { format: String, version: u32 },
    #[error("line {line}: record truncated, header announces {expected} frames but the file ends after {found}")]
    Truncated { line: usize, expected: usize, found: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordHeader {
    pub format: String,
    pub version: u32,
    pub dt: f64,
    pub frames: usize,
}

pub fn write_record<W: Write>(mut w: W, dt: f64, frames: &[SimFrame]) -> Result<(), RecordError> {
    let header = RecordHeader { format: FORMAT.into(), version: VERSION, dt, frames: frames.len() };
    serde_json::to_writer(&mut w, &header).map_err(std::io::Error::from)?;
    writeln!(w)?;
    for f in frames {
        serde_json::to_writer(&mut w, f).map_err(std::io::Error::from)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_record<R: BufRead>(r: R) -> Result<(RecordHeader, Vec<SimFrame>), RecordError> {
    let mut lines = r.lines().enumerate();
    let header: RecordHeader = loop {
        match lines.next() {
            None => return Err(RecordError::Empty),
            Some((_, line)) if line.as_ref().is_ok_and(|l| l.trim().is_empty()) => continue,
            Some((i, line)) => {
                break serde_json::from_str(&line?)
                    .map_err(|e| RecordError::Malformed { line: i + 1, message: e.to_string() })?
            }
        }
    };
    if header.format != FORMAT || header.version != VERSION {
        return Err(RecordError::Unsupported { format: header.format, version: header.version });
    }
    let mut frames = Vec::with_capacity(header.frames);
    let mut last = 1;
    for (i, line) in lines {
        last = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let frame = serde_json::from_str(&line).map_err(|e| RecordError::Malformed { line: i + 1, message: e.to_string() })?;
        frames.push(frame);
    }
    if frames.is_empty() {
        return Err(RecordError::Empty);
    }
    if frames.len() != header.frames {
        return Err(RecordError::Truncated { line: last, expected: header.frames, found: frames.len() });
    }
    Ok((header, frames))
}
