use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::Failure;

pub(crate) fn is_stdout(path: Option<&Path>) -> bool {
    path.is_some_and(|p| p.as_os_str() == "-")
}

pub(crate) fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::io(path, e))
}

/// Writes `text` to `path`, or to `out` for `-`.
pub(crate) fn emit(path: &Path, text: &str, out: &mut dyn Write) -> Result<(), Failure> {
    if path.as_os_str() == "-" {
        out.write_all(text.as_bytes())
            .map_err(|e| Failure::io(Path::new("<stdout>"), e))
    } else {
        write_file(path, text.as_bytes())
    }
}

pub(crate) fn emit_json<T: Serialize>(
    path: Option<&Path>,
    value: &T,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let Some(path) = path else {
        return Ok(());
    };
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    emit(path, &text, out)
}

/// Where human-readable summaries go: stdout unless stdout carries JSON.
pub(crate) fn summary_sink<'a>(
    json_path: Option<&Path>,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
) -> &'a mut dyn Write {
    if is_stdout(json_path) {
        err
    } else {
        out
    }
}
