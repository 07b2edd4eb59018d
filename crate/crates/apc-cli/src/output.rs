//! Output helpers: fixed-width numeric formatting and atomic file writes.

use std::io::Write;
use std::path::Path;

use crate::CliError;

/// Fixed six-fractional-digit formatting for diffable numeric output.
pub fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

/// Write `contents` to `path` via a temp file in the same directory plus a
/// rename, so readers never observe a partially written file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path)
        .map_err(|e| CliError::Data(format!("cannot persist {}: {}", path.display(), e.error)))?;
    Ok(())
}

/// Write to the given path atomically, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => {
            print!("{contents}");
            std::io::stdout().flush()?;
            Ok(())
        }
    }
}
