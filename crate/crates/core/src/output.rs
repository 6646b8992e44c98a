//! CSV emission.
//!
//! Every file starts with one `#` comment line carrying the normalized
//! configuration and the generator name, followed by an RFC 4180 table
//! with a header row. Floats use scientific notation with six significant
//! digits. Files are written to a temporary sibling and renamed into place.

use std::io::Write;
use std::path::Path;

use crate::analysis::{CauchyRow, ConvergenceRow};
use crate::error::{Error, Result};
use crate::femsolve::StageSolution;
use crate::upscale::HomogenizedSolution;

/// Six significant digits in scientific notation.
pub fn sci(x: f64) -> String {
    format!("{x:.5e}")
}

/// An in-memory CSV document.
pub struct CsvDoc {
    comment: String,
    writer: csv::Writer<Vec<u8>>,
}

impl CsvDoc {
    pub fn new(comment: &str, header: &[&str]) -> Result<Self> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        writer.write_record(header).map_err(csv_err)?;
        Ok(CsvDoc {
            comment: comment.replace(['\r', '\n'], " "),
            writer,
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(csv_err)
    }

    pub fn into_bytes(self) -> Result<Vec<u8>> {
        let body = self
            .writer
            .into_inner()
            .map_err(|e| Error::invalid(format!("csv flush failed: {e}")))?;
        let mut out = format!("# {}\r\n", self.comment).into_bytes();
        out.extend(body);
        Ok(out)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::invalid(format!("csv encoding failed: {e}"))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn table_csv(comment: &str, rows: &[ConvergenceRow], timing: bool) -> Result<Vec<u8>> {
    let mut header = vec![
        "n",
        "group",
        "l2_error",
        "h1_error",
        "center_value",
        "reference",
        "mesh",
        "seed",
    ];
    if timing {
        header.push("wall_ms");
    }
    let mut doc = CsvDoc::new(comment, &header)?;
    for r in rows {
        let mut fields = vec![
            r.n.to_string(),
            r.group.to_string(),
            sci(r.l2_error),
            sci(r.h1_error),
            sci(r.center_value),
            r.reference.clone(),
            r.m.to_string(),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
        ];
        if timing {
            fields.push(format!("{:.3}", r.wall_ms));
        }
        doc.row(fields)?;
    }
    doc.into_bytes()
}

pub fn cauchy_csv(comment: &str, rows: &[CauchyRow]) -> Result<Vec<u8>> {
    let mut doc = CsvDoc::new(comment, &["n", "group", "epsilon", "delta", "window"])?;
    for r in rows {
        doc.row([
            r.n.to_string(),
            r.group.to_string(),
            sci(r.epsilon),
            sci(r.delta),
            r.window.to_string(),
        ])?;
    }
    doc.into_bytes()
}

/// Columns `edge_index, node_index, t, value`; node 0 is the center.
pub fn solution_csv(comment: &str, solution: &StageSolution) -> Result<Vec<u8>> {
    let mut doc = CsvDoc::new(comment, &["edge_index", "node_index", "t", "value"])?;
    for (e, grid) in solution.edges().iter().enumerate() {
        for (j, v) in grid.values().iter().enumerate() {
            doc.row([
                (e + 1).to_string(),
                j.to_string(),
                sci(grid.node(j)),
                sci(*v),
            ])?;
        }
    }
    doc.into_bytes()
}

/// Plot-ready `(t, value)` series, one block per group.
pub fn upscaled_csv(comment: &str, solution: &HomogenizedSolution) -> Result<Vec<u8>> {
    let mut doc = CsvDoc::new(comment, &["group", "node_index", "t", "value"])?;
    for (g, grid) in solution.groups().iter().enumerate() {
        for (j, v) in grid.values().iter().enumerate() {
            doc.row([
                (g + 1).to_string(),
                j.to_string(),
                sci(grid.node(j)),
                sci(*v),
            ])?;
        }
    }
    doc.into_bytes()
}
