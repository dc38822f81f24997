use std::path::Path;

use tempered_coint::{Error, Result};

/// Reads two named numeric columns from a headed CSV file.
pub fn read_xy(path: &Path, x_col: &str, y_col: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let cols = read_columns(path, &[x_col, y_col])?;
    let mut it = cols.into_iter();
    Ok((it.next().unwrap(), it.next().unwrap()))
}

pub fn read_column(path: &Path, col: &str) -> Result<Vec<f64>> {
    Ok(read_columns(path, &[col])?.remove(0))
}

fn read_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|name| {
            headers.iter().position(|h| h == *name).ok_or_else(|| {
                Error::Invalid(format!(
                    "{}: no column '{name}' (found: {})",
                    path.display(),
                    headers.iter().collect::<Vec<_>>().join(",")
                ))
            })
        })
        .collect::<Result<_>>()?;
    let mut out = vec![Vec::new(); names.len()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        for (c, &j) in idx.iter().enumerate() {
            let text = rec.get(j).unwrap_or("");
            let v: f64 = text
                .parse()
                .map_err(|_| Error::Row { row, message: format!("{} '{text}' is not a number", names[c]) })?;
            if !v.is_finite() {
                return Err(Error::Row { row, message: format!("{} is not finite", names[c]) });
            }
            out[c].push(v);
        }
    }
    if out[0].is_empty() {
        return Err(Error::Invalid(format!("{}: no data rows", path.display())));
    }
    Ok(out)
}
