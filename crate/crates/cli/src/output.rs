//! CSV and metadata emission.
//!
//! Every table goes through [`Table`]: numeric cells are normalized to
//! `{:.8e}`, blank cells mark quantities that do not exist for a row (an
//! infeasible point has no rate), and lines end with a bare line feed on
//! every platform. When a table is written to a file, a `<file>.meta.json`
//! sidecar records the fully resolved inputs so any result can be
//! reproduced without the shell history. Output is deterministic: running
//! the same command twice produces identical bytes.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Formats a numeric cell.
pub fn num(x: f64) -> String {
    format!("{x:.8e}")
}

/// Formats a boolean cell.
pub fn flag(b: bool) -> String {
    if b { "true" } else { "false" }.to_string()
}

/// An in-memory CSV table with a fixed header.
pub struct Table {
    columns: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &'static [&'static str]) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    fn render(&self) -> String {
        let mut text = self.columns.join(",");
        text.push('\n');
        for row in &self.rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        text
    }
}

/// Run description written next to every output file.
#[derive(Serialize)]
pub struct RunMeta<T: Serialize> {
    pub command: &'static str,
    pub columns: &'static [&'static str],
    pub parameters: T,
}

/// `foo.csv` gets its metadata at `foo.csv.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Writes the table to `out`, or to stdout when no path is given. File
/// destinations also get the metadata sidecar.
pub fn emit<T: Serialize>(table: &Table, out: Option<&Path>, meta: &RunMeta<T>) -> Result<()> {
    let csv = table.render();
    match out {
        None => {
            print!("{csv}");
            Ok(())
        }
        Some(path) => {
            std::fs::write(path, csv)
                .with_context(|| format!("cannot write {}", path.display()))?;
            let sidecar = sidecar_path(path);
            let json =
                serde_json::to_string_pretty(meta).context("cannot serialize run metadata")?;
            std::fs::write(&sidecar, json + "\n")
                .with_context(|| format!("cannot write {}", sidecar.display()))?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_cells_use_a_pinned_scientific_format() {
        assert_eq!(num(0.6309573444801932), "6.30957344e-1");
        assert_eq!(num(6.103515625e-5), "6.10351562e-5");
        assert_eq!(num(0.0), "0.00000000e0");
        assert_eq!(num(-0.244387220), "-2.44387220e-1");
        assert_eq!(num(3e-10), "3.00000000e-10");
    }

    #[test]
    fn tables_render_headers_rows_and_blank_cells() {
        let mut table = Table::new(&["a", "b", "c"]);
        table.push(vec!["x".to_string(), num(1.0), flag(true)]);
        table.push(vec!["y".to_string(), String::new(), flag(false)]);
        assert_eq!(table.render(), "a,b,c\nx,1.00000000e0,true\ny,,false\n");
    }

    #[test]
    fn sidecars_append_to_the_full_file_name() {
        assert_eq!(
            sidecar_path(Path::new("out/fig1.csv")),
            PathBuf::from("out/fig1.csv.meta.json"),
            "the CSV extension stays visible in the sidecar name"
        );
    }
}
