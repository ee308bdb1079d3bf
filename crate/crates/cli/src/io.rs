//! CSV ingestion, table emission and atomic file writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use hdlp::lp::{LpEstimate, TimeSeriesMatrix};
use hdlp::lpdid::PanelDataset;
use hdlp::montecarlo::format_float;

use crate::error::CliError;

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so `path` either keeps its old content or gets the full new one.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    tmp.write_all(bytes).map_err(|e| CliError::Io(e.to_string()))?;
    tmp.as_file().sync_all().map_err(|e| CliError::Io(e.to_string()))?;
    tmp.persist(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// `dir/name.ext` -> `dir/name.<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn open(path: &Path) -> Result<csv::Reader<fs::File>, CliError> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn parse_f64(field: &str, row: usize, col: &str) -> Result<f64, CliError> {
    if field.is_empty() {
        return Err(CliError::Data(format!("missing value in column {col}, data row {row}")));
    }
    let v: f64 = field
        .parse()
        .map_err(|_| CliError::Data(format!("unparseable value {field:?} in column {col}, data row {row}")))?;
    if !v.is_finite() {
        return Err(CliError::Data(format!("non-finite value in column {col}, data row {row}")));
    }
    Ok(v)
}

/// Wide CSV: a header row of series names, one period per row.
pub fn read_wide_csv(path: &Path) -> Result<TimeSeriesMatrix, CliError> {
    let mut rdr = open(path)?;
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        for (j, field) in rec.iter().enumerate() {
            columns[j].push(parse_f64(field, i + 1, &names[j])?);
        }
    }
    if columns.first().is_none_or(Vec::is_empty) {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    TimeSeriesMatrix::from_columns(names, &columns).map_err(|e| CliError::Data(e.to_string()))
}

/// Column names of a long-format panel file.
#[derive(Debug, Clone)]
pub struct PanelColumns<'a> {
    pub unit: &'a str,
    pub time: &'a str,
    pub outcome: &'a str,
    pub treatment: &'a str,
}

/// Long CSV: one row per (unit, period); every other column is a covariate.
pub fn read_panel_csv(path: &Path, cols: &PanelColumns<'_>) -> Result<PanelDataset, CliError> {
    let mut rdr = open(path)?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Data(format!("{}: missing column {name}", path.display())))
    };
    let (iu, it, iy, id) = (find(cols.unit)?, find(cols.time)?, find(cols.outcome)?, find(cols.treatment)?);
    let cov_idx: Vec<usize> = (0..header.len()).filter(|j| ![iu, it, iy, id].contains(j)).collect();
    let mut units = Vec::new();
    let mut times = Vec::new();
    let mut y = Vec::new();
    let mut d = Vec::new();
    let mut covs: Vec<Vec<f64>> = vec![Vec::new(); cov_idx.len()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let unit = &rec[iu];
        if unit.is_empty() {
            return Err(CliError::Data(format!("missing unit id, data row {}", i + 1)));
        }
        units.push(unit.to_string());
        times.push(
            rec[it]
                .parse::<i64>()
                .map_err(|_| CliError::Data(format!("time must be an integer, data row {}", i + 1)))?,
        );
        y.push(parse_f64(&rec[iy], i + 1, cols.outcome)?);
        d.push(parse_f64(&rec[id], i + 1, cols.treatment)?);
        for (c, &j) in covs.iter_mut().zip(&cov_idx) {
            c.push(parse_f64(&rec[j], i + 1, &header[j])?);
        }
    }
    if units.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    let covariates = cov_idx.iter().map(|&j| header[j].clone()).zip(covs).collect();
    PanelDataset::new(units, times, y, d, covariates).map_err(|e| CliError::Data(e.to_string()))
}

pub fn wide_csv(data: &TimeSeriesMatrix) -> String {
    let mut out = data.names().join(",");
    out.push('\n');
    let v = data.values();
    for i in 0..v.rows() {
        let row: Vec<String> = v.row(i).iter().map(|x| format_float(*x)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn level_label(level: f64) -> String {
    format!("{level}")
}

pub fn estimate_header(levels: &[f64]) -> String {
    let mut cols: Vec<String> = vec!["horizon".into(), "method".into(), "beta".into(), "se".into()];
    for l in levels {
        cols.push(format!("ci_low_{}", level_label(*l)));
        cols.push(format!("ci_high_{}", level_label(*l)));
    }
    cols.extend(
        ["n_selected_y", "n_selected_x", "n_union", "bandwidth", "c_star_y", "c_star_x", "effective_t"]
            .map(String::from),
    );
    cols.join(",")
}

pub fn estimate_row(e: &LpEstimate) -> String {
    let mut cols = vec![e.horizon.to_string(), e.method.to_string(), format_float(e.beta), format_float(e.se)];
    for ci in &e.intervals {
        cols.push(format_float(ci.low));
        cols.push(format_float(ci.high));
    }
    cols.push(e.selected_y.len().to_string());
    cols.push(e.selected_x.len().to_string());
    cols.push(e.union_set.len().to_string());
    cols.push(e.bandwidth.to_string());
    cols.push(format_float(e.c_star_y.unwrap_or(f64::NAN)));
    cols.push(format_float(e.c_star_x.unwrap_or(f64::NAN)));
    cols.push(e.effective_t.to_string());
    cols.join(",")
}

pub fn horizon_csv(values: &[(usize, f64)], column: &str) -> String {
    let mut out = format!("horizon,{column}\n");
    for (h, v) in values {
        out.push_str(&format!("{h},{}\n", format_float(*v)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sibling_paths() {
        assert_eq!(sibling(Path::new("out/sim.csv"), "true_irf.csv"), PathBuf::from("out/sim.true_irf.csv"));
        assert_eq!(sibling(Path::new("irf.csv"), "log"), PathBuf::from("irf.log"));
    }

    #[test]
    fn header_lists_each_level() {
        let h = estimate_header(&[0.68, 0.95]);
        assert!(h.starts_with("horizon,method,beta,se,ci_low_0.68,ci_high_0.68,ci_low_0.95,ci_high_0.95,"));
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn malformed_values_are_data_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "a,b\n1,2\n3,\n").unwrap();
        assert!(matches!(read_wide_csv(&p), Err(CliError::Data(_))));
        fs::write(&p, "a,b\n1,x\n").unwrap();
        assert!(matches!(read_wide_csv(&p), Err(CliError::Data(_))));
        fs::write(&p, "a,b\n1,2,3\n").unwrap();
        assert!(matches!(read_wide_csv(&p), Err(CliError::Data(_))));
    }
}
