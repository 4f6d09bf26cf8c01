//! Files in and out: speed and graph CSVs, the synthetic benchmark, run
//! configuration, seeding, and atomically published output directories.
//!
//! Speed files are laid out rows = time steps, columns = nodes, with a header
//! row of node ids. Empty, `NA`/`NaN` and zero cells count as missing and are
//! filled by carrying the previous step's value forward; a column that starts
//! with missing cells takes its first observed value for those steps.

pub mod config;
pub mod seed;
pub mod synthetic;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::Graph;

pub use config::{parse_key_values, RunConfig};
pub use seed::{derive_indexed, derive_seed, rng_for};
pub use synthetic::{generate_synthetic, synthetic_graph, GraphModel, SyntheticSpec};

/// Speed observations in km/h, `total_steps × N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedDataset {
    pub speeds: Array2<f64>,
    pub interval_minutes: u32,
    pub node_ids: Vec<String>,
}

impl SpeedDataset {
    pub fn new(speeds: Array2<f64>, interval_minutes: u32, node_ids: Vec<String>) -> Result<Self> {
        if node_ids.len() != speeds.ncols() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} node ids", speeds.ncols()),
                actual: node_ids.len().to_string(),
            });
        }
        if let Some(((t, i), v)) = speeds.indexed_iter().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "speed at step {t}, node {i} must be finite and non-negative, got {v}"
            )));
        }
        Ok(Self {
            speeds,
            interval_minutes,
            node_ids,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.speeds.ncols()
    }

    pub fn total_steps(&self) -> usize {
        self.speeds.nrows()
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn csv_reader(text: &str, has_headers: bool) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(has_headers)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan")
}

/// Reads a speed CSV, imputing missing and zero cells by carry-forward.
pub fn load_speed_csv(path: &Path) -> Result<SpeedDataset> {
    parse_speed_csv(&read_to_string(path)?, path)
}

/// [`load_speed_csv`] on in-memory text; `path` is only used in messages.
pub fn parse_speed_csv(text: &str, path: &Path) -> Result<SpeedDataset> {
    let mut reader = csv_reader(text, true);
    let header = reader
        .headers()
        .map_err(|e| Error::parse(path, e.to_string()))?
        .clone();
    if header.is_empty() || header.iter().all(str::is_empty) {
        return Err(Error::parse(path, "empty file"));
    }
    let node_ids: Vec<String> = header.iter().map(str::to_string).collect();
    let n = node_ids.len();

    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, e.to_string()))?;
        // row numbers in messages are 1-based file lines, header included
        let line = r + 2;
        if record.len() != n {
            return Err(Error::parse(
                path,
                format!("row {line}: expected {n} columns, found {}", record.len()),
            ));
        }
        let mut row = Vec::with_capacity(n);
        for (c, cell) in record.iter().enumerate() {
            if is_missing(cell) {
                row.push(None);
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::parse(path, format!("row {line}, column {}: not a number: {cell:?}", c + 1)))?;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::parse(
                    path,
                    format!("row {line}, column {} ({}): speed must be non-negative, got {cell}", c + 1, node_ids[c]),
                ));
            }
            row.push(if v == 0.0 { None } else { Some(v) });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(path, "no data rows"));
    }

    let steps = rows.len();
    let mut speeds = Array2::zeros((steps, n));
    for c in 0..n {
        let first = rows.iter().find_map(|row| row[c]).ok_or_else(|| {
            Error::parse(path, format!("column {} ({}) has no observed speeds", c + 1, node_ids[c]))
        })?;
        let mut last = first;
        for (t, row) in rows.iter().enumerate() {
            if let Some(v) = row[c] {
                last = v;
            }
            speeds[[t, c]] = last;
        }
    }
    SpeedDataset::new(speeds, 5, node_ids)
}

/// Writes speeds with full-precision decimals, LF endings.
pub fn speed_csv_string(data: &SpeedDataset) -> String {
    let mut out = data.node_ids.join(",");
    out.push('\n');
    for row in data.speeds.rows() {
        push_row(&mut out, row.iter());
    }
    out
}

pub fn write_speed_csv(path: &Path, data: &SpeedDataset) -> Result<()> {
    write_file(path, &speed_csv_string(data))
}

fn push_row<'a>(out: &mut String, values: impl Iterator<Item = &'a f64>) {
    for (k, v) in values.enumerate() {
        if k > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

/// Dense `N × N` matrix of 0/1 cells, no header. Symmetric input yields an
/// undirected graph.
pub fn load_adjacency_csv(path: &Path) -> Result<Graph> {
    parse_adjacency_csv(&read_to_string(path)?, path)
}

pub fn parse_adjacency_csv(text: &str, path: &Path) -> Result<Graph> {
    let mut reader = csv_reader(text, false);
    let mut cells: Vec<u8> = Vec::new();
    let mut n = 0;
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, e.to_string()))?;
        if r == 0 {
            n = record.len();
        } else if record.len() != n {
            return Err(Error::parse(
                path,
                format!("row {}: expected {n} columns, found {}", r + 1, record.len()),
            ));
        }
        for (c, cell) in record.iter().enumerate() {
            match cell {
                "0" => cells.push(0),
                "1" => cells.push(1),
                _ => {
                    return Err(Error::parse(
                        path,
                        format!("row {}, column {}: adjacency entries must be 0 or 1, got {cell:?}", r + 1, c + 1),
                    ))
                }
            }
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::parse(path, "empty file"));
    }
    if rows != n {
        return Err(Error::parse(path, format!("adjacency must be square, got {rows}×{n}")));
    }
    let adjacency = Array2::from_shape_vec((n, n), cells).map_err(|e| Error::parse(path, e.to_string()))?;
    Graph::from_adjacency(adjacency)
}

pub fn adjacency_csv_string(graph: &Graph) -> String {
    let mut out = String::new();
    for row in graph.adjacency().rows() {
        let line: Vec<&str> = row.iter().map(|&v| if v == 1 { "1" } else { "0" }).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Node coordinates with a `lon,lat` header, one row per node.
pub fn load_positions_csv(path: &Path) -> Result<Vec<[f64; 2]>> {
    let text = read_to_string(path)?;
    let mut reader = csv_reader(&text, true);
    let mut out = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, e.to_string()))?;
        if record.len() != 2 {
            return Err(Error::parse(path, format!("row {}: expected 2 columns", r + 2)));
        }
        let mut xy = [0.0; 2];
        for (k, cell) in record.iter().enumerate() {
            xy[k] = cell
                .parse()
                .map_err(|_| Error::parse(path, format!("row {}: not a number: {cell:?}", r + 2)))?;
        }
        out.push(xy);
    }
    Ok(out)
}

pub fn positions_csv_string(positions: &[[f64; 2]]) -> String {
    let mut out = String::from("lon,lat\n");
    for p in positions {
        push_row(&mut out, p.iter());
    }
    out
}

/// Loads the adjacency and, when given, attaches node positions.
pub fn load_graph(adjacency: &Path, positions: Option<&Path>) -> Result<Graph> {
    let graph = load_adjacency_csv(adjacency)?;
    match positions {
        Some(p) => graph.with_positions(load_positions_csv(p)?),
        None => Ok(graph),
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// A staging directory next to `target` that replaces it in one rename.
///
/// Files are written into the staging directory; nothing appears at `target`
/// until [`OutputDir::commit`]. Dropping without committing discards the
/// staged files.
pub struct OutputDir {
    staging: tempfile::TempDir,
    target: PathBuf,
}

impl OutputDir {
    pub fn stage(target: &Path) -> Result<Self> {
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(|e| Error::io(&parent, e))?;
        let staging = tempfile::Builder::new()
            .prefix(".diffattack-staging-")
            .tempdir_in(&parent)
            .map_err(|e| Error::io(&parent, e))?;
        Ok(Self {
            staging,
            target: target.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        self.staging.path()
    }

    pub fn target(&self) -> &Path {
        &self.target
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<()> {
        write_file(&self.staging.path().join(name), contents)
    }

    /// Moves the staged directory into place, replacing any previous output.
    pub fn commit(self) -> Result<PathBuf> {
        let staged = self.staging.keep();
        let target = self.target;
        if target.exists() {
            let old = staged.with_file_name(format!(
                ".diffattack-old-{}",
                staged.file_name().map(|s| s.to_string_lossy()).unwrap_or_default()
            ));
            fs::rename(&target, &old).map_err(|e| Error::io(&target, e))?;
            if let Err(e) = fs::rename(&staged, &target) {
                let _ = fs::rename(&old, &target);
                return Err(Error::io(&target, e));
            }
            let _ = fs::remove_dir_all(&old);
        } else {
            fs::rename(&staged, &target).map_err(|e| Error::io(&target, e))?;
        }
        Ok(target)
    }
}
