use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::config::{CliError, Format};
use crate::experiments::GridResult;

pub const CSV_HEADER: &str = "x,z,n,value,flags";

fn io(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// A closed downstream pipe (`qsep ... | head`) ends output quietly.
fn stdout_result(r: std::io::Result<()>) -> Result<(), CliError> {
    match r {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => r.map_err(io),
    }
}

fn print_stdout(text: &str) -> Result<(), CliError> {
    stdout_result(writeln!(std::io::stdout().lock(), "{text}"))
}

pub fn write_csv(w: &mut impl Write, result: &GridResult) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in &result.rows {
        let value = r.value.map(|v| v.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{},{}", r.x, r.z, r.n, value, r.flags)?;
    }
    Ok(())
}

pub fn csv_string(result: &GridResult) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, result).expect("writing to memory");
    String::from_utf8(buf).expect("ASCII output")
}

pub fn grid_json(results: &[GridResult]) -> String {
    let panels: Vec<_> = results.iter().map(|r| json!({ "label": r.label, "rows": r.rows })).collect();
    serde_json::to_string_pretty(&json!({ "panels": panels })).expect("serializable rows")
}

/// `fig1.csv` with label `input` becomes `fig1_input.csv`.
pub fn panel_path(base: &Path, label: &str) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}_{label}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{label}"),
    };
    base.with_file_name(name)
}

/// Writes grid panels to `out` (one CSV file per panel when there are
/// several) or to stdout, where CSV panels are separated by `# panel=` lines.
pub fn emit_grids(results: &[GridResult], format: Format, out: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    match (format, out) {
        (Format::Json, Some(path)) => {
            std::fs::write(path, grid_json(results) + "\n").map_err(io)?;
            Ok(vec![path.to_path_buf()])
        }
        (Format::Json, None) => {
            print_stdout(&grid_json(results))?;
            Ok(Vec::new())
        }
        (Format::Csv, Some(path)) => {
            let mut written = Vec::new();
            for r in results {
                let p = if results.len() == 1 { path.to_path_buf() } else { panel_path(path, &r.label) };
                std::fs::write(&p, csv_string(r)).map_err(io)?;
                written.push(p);
            }
            Ok(written)
        }
        (Format::Csv, None) => {
            let mut lock = std::io::stdout().lock();
            stdout_result(results.iter().try_for_each(|r| {
                if results.len() > 1 {
                    writeln!(lock, "# panel={}", r.label)?;
                }
                write_csv(&mut lock, r)
            }))?;
            Ok(Vec::new())
        }
    }
}

pub fn emit_text(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, format!("{text}\n")).map_err(io),
        None => print_stdout(text),
    }
}
