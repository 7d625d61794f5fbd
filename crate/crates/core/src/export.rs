//! CSV and JSON artifacts.
//!
//! CSV files start with a `# trapdoor-csv v1` comment line followed by a
//! header row. Columns are `z` and `value`, then `delta,gamma` when a policy
//! is attached and `frequency` when a histogram is attached.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::dp::{PolicyTable, ValueFunction};
use crate::error::{Error, Result};

pub const CSV_SCHEMA: &str = "# trapdoor-csv v1";

/// Write one row per grid point.
pub fn write_value_csv<W: Write>(
    mut out: W,
    value: &ValueFunction,
    policy: Option<&PolicyTable>,
    histogram: Option<&[f64]>,
) -> Result<()> {
    let n = value.grid_size();
    if policy.is_some_and(|p| p.grid_size() != n) || histogram.is_some_and(|h| h.len() != n) {
        return Err(Error::InvalidParameter(
            "columns must share the value grid".into(),
        ));
    }
    writeln!(out, "{CSV_SCHEMA}")?;
    let mut header = String::from("z,value");
    if policy.is_some() {
        header.push_str(",delta,gamma");
    }
    if histogram.is_some() {
        header.push_str(",frequency");
    }
    writeln!(out, "{header}")?;
    for i in 0..n {
        write!(out, "{},{}", value.point(i), value.values()[i])?;
        if let Some(p) = policy {
            let a = p.actions()[i];
            write!(out, ",{},{}", a.delta, a.gamma)?;
        }
        if let Some(h) = histogram {
            write!(out, ",{}", h[i])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Iterates `h_0..h_K` side by side: `z,h_0,h_1,...`.
pub fn write_iterates_csv<W: Write>(mut out: W, iterates: &[ValueFunction]) -> Result<()> {
    let Some(first) = iterates.first() else {
        return Err(Error::InvalidParameter("no iterates".into()));
    };
    writeln!(out, "{CSV_SCHEMA}")?;
    let cols: Vec<String> = (0..iterates.len()).map(|k| format!("h_{k}")).collect();
    writeln!(out, "z,{}", cols.join(","))?;
    for i in 0..first.grid_size() {
        write!(out, "{}", first.point(i))?;
        for h in iterates {
            write!(out, ",{}", h.values()[i])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_csv_file<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut std::io::BufWriter<std::fs::File>) -> Result<()>,
{
    let file =
        std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut w = std::io::BufWriter::new(file);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = to_json(value)?;
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))
}
