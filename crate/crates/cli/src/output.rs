use std::path::Path;

use anyhow::Context;
use serde::Serialize;

/// Top-level shape of every `*_summary.json`.
#[derive(Debug, Serialize)]
pub struct Summary<P, M> {
    pub command: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub params: P,
    pub metrics: M,
}

pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    for r in rows {
        w.serialize(r).with_context(|| format!("writing {}", path.display()))?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

pub fn write_summary<P: Serialize, M: Serialize>(path: &Path, s: &Summary<P, M>) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(s)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}
