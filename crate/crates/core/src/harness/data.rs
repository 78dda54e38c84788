//! Wide-CSV ingestion, z-score normalization, chronological splits and
//! sliding windows.

use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attention::EdgeSet;
use crate::error::{GnlError, Result};
use crate::model::WindowSample;

/// Node values over time. Row `t` holds `N * d_x` values, node-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub timestamps: Vec<String>,
    pub node_ids: Vec<String>,
    pub d_x: usize,
    pub rows: Vec<Vec<f64>>,
    pub prior_edges: Option<EdgeSet>,
}

impl Dataset {
    pub fn new(timestamps: Vec<String>, node_ids: Vec<String>, d_x: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        if d_x == 0 {
            return Err(GnlError::Config("d_x must be positive".into()));
        }
        if timestamps.len() != rows.len() {
            return Err(GnlError::shape("dataset rows", &[timestamps.len()], &[rows.len()]));
        }
        let width = node_ids.len() * d_x;
        for (t, r) in rows.iter().enumerate() {
            if r.len() != width {
                return Err(GnlError::shape(format!("dataset row {t}"), &[r.len()], &[width]));
            }
            if let Some(v) = r.iter().find(|v| !v.is_finite()) {
                return Err(GnlError::Argument(format!("non-finite value {v} in row {t}")));
            }
        }
        Ok(Dataset {
            timestamps,
            node_ids,
            d_x,
            rows,
            prior_edges: None,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    /// Reads an edge list, one `source target` pair per line, naming nodes
    /// by id or by 0-based index. `#` starts a comment.
    pub fn load_prior_edges(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| GnlError::io(path, e))?;
        let n = self.node_count();
        let lookup = |tok: &str, line: usize, column: usize| -> Result<usize> {
            if let Some(pos) = self.node_ids.iter().position(|id| id == tok) {
                return Ok(pos);
            }
            match tok.parse::<usize>() {
                Ok(idx) if idx < n => Ok(idx),
                _ => Err(GnlError::Load {
                    path: path.display().to_string(),
                    line,
                    column,
                    message: format!("unknown node `{tok}`"),
                }),
            }
        };
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(GnlError::Load {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    column: 1,
                    message: "expected `source target`".into(),
                });
            }
            pairs.push((lookup(toks[0], lineno + 1, 1)?, lookup(toks[1], lineno + 1, 2)?));
        }
        self.prior_edges = Some(EdgeSet::from_pairs(n, pairs, false)?);
        Ok(())
    }
}

/// Reads a wide CSV: header `timestamp,<col>...`, one row per timestamp.
/// With `d_x > 1` every node spans `d_x` consecutive columns and takes the
/// id of the first one.
pub fn load_csv(path: &Path, d_x: usize) -> Result<Dataset> {
    let display = path.display().to_string();
    let load_err = |line: usize, column: usize, message: String| GnlError::Load {
        path: display.clone(),
        line,
        column,
        message,
    };
    let file = std::fs::File::open(path).map_err(|e| GnlError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut records = reader.records();

    let header = match records.next() {
        Some(r) => r.map_err(|e| load_err(1, 1, e.to_string()))?,
        None => return Err(load_err(1, 1, "empty file".into())),
    };
    let columns: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if columns.is_empty() || d_x == 0 || !columns.len().is_multiple_of(d_x) {
        return Err(load_err(
            1,
            1,
            format!("{} value columns do not split into nodes of width {d_x}", columns.len()),
        ));
    }
    let node_ids: Vec<String> = columns.iter().step_by(d_x).cloned().collect();
    for (k, id) in node_ids.iter().enumerate() {
        if node_ids[..k].contains(id) {
            return Err(load_err(1, k * d_x + 2, format!("duplicate node id `{id}`")));
        }
    }

    let mut timestamps = Vec::new();
    let mut rows = Vec::new();
    for (r, rec) in records.enumerate() {
        let line = r + 2;
        let rec = rec.map_err(|e| load_err(line, 1, e.to_string()))?;
        if rec.len() != columns.len() + 1 {
            return Err(load_err(line, 1, format!("expected {} cells, found {}", columns.len() + 1, rec.len())));
        }
        let mut row = Vec::with_capacity(columns.len());
        for (c, cell) in rec.iter().enumerate().skip(1) {
            if cell.is_empty() {
                return Err(load_err(line, c + 1, format!("missing value for `{}`", columns[c - 1])));
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| load_err(line, c + 1, format!("non-numeric value `{cell}`")))?;
            if !v.is_finite() {
                return Err(load_err(line, c + 1, format!("non-finite value `{cell}`")));
            }
            row.push(v);
        }
        timestamps.push(rec[0].to_string());
        rows.push(row);
    }
    Dataset::new(timestamps, node_ids, d_x, rows)
}

/// Per-column mean and population standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn normalize(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    pub fn denormalize(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(z, (m, s))| z * s + m)
            .collect()
    }
}

/// Fits statistics on `fit_range` rows and standardizes every row.
pub fn zscore(dataset: &Dataset, fit_range: Range<usize>) -> Result<(Dataset, NormStats)> {
    if fit_range.is_empty() || fit_range.end > dataset.len() {
        return Err(GnlError::Argument(format!(
            "fit range {fit_range:?} invalid for {} rows",
            dataset.len()
        )));
    }
    let width = dataset.node_count() * dataset.d_x;
    let count = fit_range.len() as f64;
    let fit = &dataset.rows[fit_range];
    let mut mean = vec![0.0; width];
    for row in fit {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);
    let mut std = vec![0.0; width];
    for row in fit {
        for (s, (v, m)) in std.iter_mut().zip(row.iter().zip(&mean)) {
            *s += (v - m).powi(2);
        }
    }
    for (c, s) in std.iter_mut().enumerate() {
        *s = (*s / count).sqrt();
        if !(*s > 0.0) {
            return Err(GnlError::Normalization {
                node: dataset.node_ids[c / dataset.d_x].clone(),
            });
        }
    }
    let stats = NormStats { mean, std };
    let mut normalized = dataset.clone();
    normalized.rows = dataset.rows.iter().map(|r| stats.normalize(r)).collect();
    Ok((normalized, stats))
}

/// Contiguous chronological row ranges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

impl Split {
    pub const DEFAULT_FRACTIONS: (f64, f64) = (0.7, 0.1);

    /// First `floor(train * T)` rows train, next `floor(val * T)` validate,
    /// the rest test.
    pub fn chronological(total: usize, train: f64, val: f64) -> Result<Self> {
        if !(train > 0.0 && val >= 0.0 && train + val < 1.0) {
            return Err(GnlError::Argument(format!("bad split fractions {train}, {val}")));
        }
        let n_train = (train * total as f64).floor() as usize;
        let n_val = (val * total as f64).floor() as usize;
        Ok(Split {
            train: 0..n_train,
            val: n_train..n_train + n_val,
            test: n_train + n_val..total,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SplitWindows {
    pub train: Vec<WindowSample>,
    pub val: Vec<WindowSample>,
    pub test: Vec<WindowSample>,
}

fn window_at(rows: &[Vec<f64>], start: usize, window: usize, horizon: usize) -> WindowSample {
    WindowSample {
        start,
        inputs: rows[start..start + window].to_vec(),
        targets: rows[start + window..start + window + horizon].to_vec(),
    }
}

/// Every window of `window` inputs and `horizon` targets, by start row.
pub fn all_windows(rows: &[Vec<f64>], window: usize, horizon: usize) -> Result<Vec<WindowSample>> {
    if window == 0 || horizon == 0 {
        return Err(GnlError::Argument("window and horizon must be at least 1".into()));
    }
    if rows.len() < window + horizon {
        return Err(GnlError::Argument(format!(
            "{} rows cannot hold a window of {window} plus horizon {horizon}",
            rows.len()
        )));
    }
    Ok((0..=rows.len() - window - horizon)
        .map(|s| window_at(rows, s, window, horizon))
        .collect())
}

/// Assigns each window to the split containing all of its target rows.
/// Training windows lie entirely inside the training rows; validation and
/// test windows may read earlier rows as inputs. Windows whose targets
/// straddle a boundary are dropped.
pub fn make_windows(rows: &[Vec<f64>], window: usize, horizon: usize, split: &Split) -> Result<SplitWindows> {
    let mut out = SplitWindows::default();
    for w in all_windows(rows, window, horizon)? {
        let targets = w.start + window..w.start + window + horizon;
        let inside = |r: &Range<usize>| r.start <= targets.start && targets.end <= r.end;
        if inside(&split.train) {
            out.train.push(w);
        } else if inside(&split.val) {
            out.val.push(w);
        } else if inside(&split.test) {
            out.test.push(w);
        }
    }
    Ok(out)
}
