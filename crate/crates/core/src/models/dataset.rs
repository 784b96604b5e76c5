//! CSV dataset ingestion: feature columns followed by one integer label
//! column. A header row is detected and skipped; ragged rows are errors.

use std::path::Path;

use crate::error::{Error, Result};

pub fn load_csv_dataset(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let text = std::fs::read_to_string(path)?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() < 2 {
            return Err(Error::Dataset(format!(
                "line {}: need at least one feature and a label",
                line_no + 1
            )));
        }
        if line_no == 0 && cells.iter().any(|c| c.parse::<f64>().is_err()) {
            continue; // header row
        }
        match width {
            None => width = Some(cells.len()),
            Some(w) if w != cells.len() => {
                return Err(Error::Dataset(format!(
                    "line {}: ragged row, expected {} columns, got {}",
                    line_no + 1,
                    w,
                    cells.len()
                )));
            }
            _ => {}
        }
        let (feat_cells, label_cell) = cells.split_at(cells.len() - 1);
        let row: Vec<f64> = feat_cells
            .iter()
            .map(|c| {
                c.parse::<f64>().map_err(|_| {
                    Error::Dataset(format!("line {}: bad feature '{c}'", line_no + 1))
                })
            })
            .collect::<Result<_>>()?;
        let label = label_cell[0].parse::<usize>().map_err(|_| {
            Error::Dataset(format!(
                "line {}: bad integer label '{}'",
                line_no + 1,
                label_cell[0]
            ))
        })?;
        features.push(row);
        labels.push(label);
    }
    if features.is_empty() {
        return Err(Error::Dataset("empty dataset".into()));
    }
    Ok((features, labels))
}
