use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::attention::InfluenceMatrix;
use crate::error::{GnlError, Result};
use crate::model::GnlModel;

/// Delimited text with node-id headers: rows are sources, columns targets.
pub fn matrix_to_csv(matrix: &InfluenceMatrix, node_ids: &[String]) -> Result<String> {
    let n = matrix.size();
    if node_ids.len() != n {
        return Err(GnlError::shape("attention export ids", &[node_ids.len()], &[n]));
    }
    let mut out = String::from("source");
    for id in node_ids {
        let _ = write!(out, ",{id}");
    }
    out.push('\n');
    for (j, id) in node_ids.iter().enumerate() {
        out.push_str(id);
        for v in matrix.row(j) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    Ok(out)
}

/// Parses the output of [`matrix_to_csv`].
pub fn matrix_from_csv(text: &str) -> Result<(Vec<String>, InfluenceMatrix)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| GnlError::Format("empty attention file".into()))?;
    let ids: Vec<String> = header.split(',').skip(1).map(str::to_string).collect();
    let n = ids.len();
    let mut values = Vec::with_capacity(n * n);
    for (r, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n + 1 {
            return Err(GnlError::Format(format!("attention row {} has {} cells", r + 1, cells.len())));
        }
        for c in &cells[1..] {
            values.push(c.parse::<f64>().map_err(|e| GnlError::Format(format!("`{c}`: {e}")))?);
        }
    }
    Ok((ids, InfluenceMatrix::from_dense(n, values)?))
}

/// Writes one file per influence matrix of the window, `attention_step1.csv`
/// through `attention_step{tau+1}.csv`, the last from the final states.
pub fn export_attention(model: &GnlModel, inputs: &[Vec<f64>], node_ids: &[String], dir: &Path) -> Result<Vec<PathBuf>> {
    let history = model.forward_window(inputs)?.attention;
    std::fs::create_dir_all(dir).map_err(|e| GnlError::io(dir, e))?;
    let mut written = Vec::with_capacity(history.len());
    for (k, m) in history.iter().enumerate() {
        let path = dir.join(format!("attention_step{}.csv", k + 1));
        std::fs::write(&path, matrix_to_csv(m, node_ids)?).map_err(|e| GnlError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
