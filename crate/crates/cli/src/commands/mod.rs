pub mod analyze;
pub mod compare;
pub mod energy;
pub mod evaluate;
pub mod genres;
pub mod render;
pub mod schedule;

use std::path::Path;

use serde::Serialize;

use crate::CliError;

/// Write a JSON report to `out`, or to stdout when asked. Progress chatter
/// goes to stderr so piped stdout stays machine-readable.
pub(crate) fn emit<T: Serialize>(
    value: &T,
    out: &Path,
    stdout: bool,
    what: &str,
) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::input(format!("serializing {what}: {e}")))?;
    if stdout {
        use std::io::Write;
        let mut handle = std::io::stdout().lock();
        if let Err(e) = writeln!(handle, "{json}") {
            // A closed pipe (e.g. `vizsync ... | head`) is not our error.
            if e.kind() != std::io::ErrorKind::BrokenPipe {
                return Err(CliError::input(format!("stdout: {e}")));
            }
        }
    } else {
        if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::input(format!("{}: {e}", parent.display())))?;
        }
        std::fs::write(out, format!("{json}\n"))
            .map_err(|e| CliError::input(format!("{}: {e}", out.display())))?;
        eprintln!("{what} written to {}", out.display());
    }
    Ok(())
}
