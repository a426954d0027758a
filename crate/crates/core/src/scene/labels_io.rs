use std::path::Path;

use super::write_atomic;
use crate::error::{Error, Result};
use crate::refine::PseudoLabel;

/// One JSON object per line, in the given order.
pub fn write_pseudo_labels(labels: &[PseudoLabel], path: &Path) -> Result<()> {
    let mut out = Vec::new();
    for label in labels {
        serde_json::to_writer(&mut out, label).map_err(|e| Error::Config(e.to_string()))?;
        out.push(b'\n');
    }
    write_atomic(path, &out)
}

pub fn parse_pseudo_labels(text: &str) -> Result<Vec<PseudoLabel>> {
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = format!("line {}", i + 1);
        let label: PseudoLabel = serde_json::from_str(line).map_err(|e| Error::parse(&at, e.to_string()))?;
        if !label.kept && label.drop_reason.is_none() {
            return Err(Error::parse(&at, "dropped label without drop_reason"));
        }
        labels.push(label);
    }
    Ok(labels)
}

pub fn read_pseudo_labels(path: &Path) -> Result<Vec<PseudoLabel>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pseudo_labels(&text)
}
