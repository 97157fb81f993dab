use std::io::Write;
use std::path::Path;

use crate::error::CliError;

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let fail = |e: std::io::Error| CliError::Runtime(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(contents).map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

/// Refuses to reuse a directory that already holds results unless `force`.
pub fn guard_output(dir: &Path, force: bool, is_result: impl Fn(&str) -> bool) -> Result<(), CliError> {
    let Ok(entries) = std::fs::read_dir(dir) else {
        return Ok(());
    };
    if force {
        return Ok(());
    }
    for entry in entries.flatten() {
        let name = entry.file_name();
        if is_result(&name.to_string_lossy()) {
            return Err(CliError::Usage(format!(
                "{} already contains results ({}); pass --force to overwrite",
                dir.display(),
                name.to_string_lossy()
            )));
        }
    }
    Ok(())
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}
