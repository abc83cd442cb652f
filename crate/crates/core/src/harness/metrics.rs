//! Per-round telemetry and its CSV encoding.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const METRICS_HEADER: &str = "round,loss_F,train_acc,test_acc,sum_g_norm,delta0_norm,wall_ms";

/// One row per communication round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRecord {
    pub round: usize,
    /// Penalized objective over the reliable workers' full shards.
    pub loss_f: f64,
    /// NaN when the problem has no classification data.
    pub train_acc: f64,
    pub test_acc: f64,
    /// Norm of the sum of everything the server received this round.
    pub sum_g_norm: f64,
    /// Norm of the sum of the faulty workers' uploads.
    pub delta0_norm: f64,
    /// Elapsed wall-clock time; zero unless wall-clock recording is enabled.
    pub wall_ms: u64,
}

/// Streams records to any writer; nothing is buffered beyond the writer's own
/// buffer.
pub struct MetricsWriter<W: Write> {
    out: W,
    path: PathBuf,
    rows: usize,
}

impl MetricsWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Self::new(BufWriter::new(file), path)
    }
}

impl<W: Write> MetricsWriter<W> {
    /// `path` is only used in error messages.
    pub fn new(mut out: W, path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        writeln!(out, "{METRICS_HEADER}").map_err(|e| Error::io(&path, e))?;
        Ok(MetricsWriter { out, path, rows: 0 })
    }

    pub fn write(&mut self, r: &MetricsRecord) -> Result<()> {
        writeln!(
            self.out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.round, r.loss_f, r.train_acc, r.test_acc, r.sum_g_norm, r.delta0_norm, r.wall_ms
        )
        .map_err(|e| Error::io(&self.path, e))?;
        self.rows += 1;
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.out)
    }
}

/// Writes `records` to `path`; at least one record is required.
pub fn write_metrics<'a>(
    records: impl IntoIterator<Item = &'a MetricsRecord>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut w = MetricsWriter::create(path.as_ref())?;
    for r in records {
        w.write(r)?;
    }
    if w.rows() == 0 {
        return Err(Error::Config("write_metrics needs at least one record".into()));
    }
    w.finish()?;
    Ok(())
}

pub fn read_metrics(path: impl AsRef<Path>) -> Result<Vec<MetricsRecord>> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let header = rdr
        .headers()
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != METRICS_HEADER {
        return Err(Error::Data(format!(
            "{}: unexpected metrics header {header:?}",
            path.display()
        )));
    }
    let bad = |line: usize, what: &str| {
        Error::Data(format!("{}: line {line}: bad {what}", path.display()))
    };
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        if row.len() != 7 {
            return Err(bad(line, "column count"));
        }
        let float = |j: usize| row[j].parse::<f64>().map_err(|_| bad(line, "number"));
        out.push(MetricsRecord {
            round: row[0].parse().map_err(|_| bad(line, "round"))?,
            loss_f: float(1)?,
            train_acc: float(2)?,
            test_acc: float(3)?,
            sum_g_norm: float(4)?,
            delta0_norm: float(5)?,
            wall_ms: row[6].parse().map_err(|_| bad(line, "wall_ms"))?,
        });
    }
    Ok(out)
}
