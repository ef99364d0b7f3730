//! CSV ingestion for user data.
//!
//! The file has a header row naming a `y` column and any number of
//! predictor columns (conventionally `x1..xq`). Row `t` holds the
//! response `y_t` and the predictors used to forecast it one step
//! ahead, so the predictor columns are already lagged by one period.
//! Lines starting with `#` are ignored.

use std::io::Read;
use std::path::Path;

use forecast_instability::dgp::SimulatedPath;

use crate::error::{CliError, CliResult};

/// Parsed data set with the predictor names in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub path: SimulatedPath<f64>,
    pub predictors: Vec<String>,
}

pub fn read_dataset(path: &Path) -> CliResult<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_dataset(file)
}

/// Parses from any reader; row numbers in errors count data rows from 1
/// after the header.
pub fn parse_dataset<R: Read>(input: R) -> CliResult<Dataset> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).flexible(true).from_reader(input);
    let malformed = |row: usize, column: &str, reason: String| CliError::MalformedCsv { row, column: column.to_string(), reason };
    let header: Vec<String> = reader.headers().map_err(|e| malformed(0, "", e.to_string()))?.iter().map(str::to_string).collect();
    let y_col = header
        .iter()
        .position(|h| h.eq_ignore_ascii_case("y"))
        .ok_or_else(|| malformed(0, "y", "header has no `y` column".into()))?;
    let predictors: Vec<String> = header.iter().enumerate().filter(|(i, _)| *i != y_col).map(|(_, h)| h.clone()).collect();

    let mut y = Vec::new();
    let mut x = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| malformed(row, "", e.to_string()))?;
        if record.len() != header.len() {
            return Err(malformed(row, "", format!("{} fields, header has {}", record.len(), header.len())));
        }
        let mut xs = Vec::with_capacity(predictors.len());
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| malformed(row, &header[c], format!("`{cell}` is not a number")))?;
            if !v.is_finite() {
                return Err(malformed(row, &header[c], format!("`{cell}` is not finite")));
            }
            if c == y_col {
                y.push(v);
            } else {
                xs.push(v);
            }
        }
        x.push(xs);
    }
    let path = SimulatedPath::from_data(y, x)?;
    Ok(Dataset { path, predictors })
}

/// Writes a path in the format read by [`parse_dataset`].
pub fn write_dataset<W: std::io::Write>(path: &SimulatedPath<f64>, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let q = path.n_predictors();
    let mut header = vec!["y".to_string()];
    header.extend((1..=q).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for (y, xs) in path.y.iter().zip(&path.x) {
        let mut rec = vec![y.to_string()];
        rec.extend(xs.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
