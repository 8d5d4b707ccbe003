//! Atomic file output.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde_json::Value;

/// Writes `contents` to `dir/name` through a temporary file in `dir`, so
/// readers never observe a partial file.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    let target = dir.join(name);
    tmp.persist(&target).with_context(|| format!("writing {}", target.display()))?;
    Ok(())
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> anyhow::Result<()> {
    write_atomic(dir, name, &format!("{}\n", serde_json::to_string_pretty(value)?))
}
