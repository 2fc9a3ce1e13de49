//! Wide and long CSV panels.
//!
//! Wide format: header `series_id,v1,…,vt`, then one row per series.
//! Long format: header `timestamp,series_id,value`, pivoted to wide with
//! series and timestamps in order of first appearance. Missing cells are an
//! error, never imputed. Row and column numbers in errors are 1-based and
//! count data rows (header excluded) and value columns (id excluded).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::DatasetMatrix;

/// A panel loaded from disk along with the ids of its rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledPanel {
    pub data: DatasetMatrix,
    pub series_ids: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    pub delimiter: u8,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self { delimiter: b',' }
    }
}

/// Contents of the sidecar index file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesIndex {
    pub series_ids: Vec<String>,
}

fn reader(path: &Path, options: LoadOptions) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?)
}

fn parse_value(raw: &str, row: usize, col: usize) -> Result<f64> {
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::ParseError {
            row,
            col,
            value: raw.to_string(),
        })
}

pub fn load_wide_csv(path: impl AsRef<Path>, options: LoadOptions) -> Result<LabelledPanel> {
    let mut records = reader(path.as_ref(), options)?.into_records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(Error::EmptyFile),
    };
    let t = header.len().saturating_sub(1);
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (r, rec) in records.enumerate() {
        let rec = rec?;
        let row = r + 1;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let got = rec.len().saturating_sub(1);
        if got != t {
            return Err(Error::RaggedRows { row, expected: t, got });
        }
        ids.push(rec[0].to_string());
        for (c, raw) in rec.iter().skip(1).enumerate() {
            values.push(parse_value(raw, row, c + 1)?);
        }
    }
    if ids.is_empty() || t == 0 {
        return Err(Error::EmptyFile);
    }
    Ok(LabelledPanel {
        data: DatasetMatrix::new(ids.len(), t, values)?,
        series_ids: ids,
    })
}

/// Writes a wide CSV. Values use the shortest representation that parses
/// back to the same `f64`, so load → write → load is lossless.
pub fn write_wide_csv(path: impl AsRef<Path>, data: &DatasetMatrix, series_ids: &[String]) -> Result<()> {
    if series_ids.len() != data.n() {
        return Err(Error::DimensionMismatch {
            expected: data.n(),
            got: series_ids.len(),
        });
    }
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "series_id")?;
    for c in 1..=data.t() {
        write!(w, ",v{c}")?;
    }
    writeln!(w)?;
    for (id, row) in series_ids.iter().zip(data.rows()) {
        write!(w, "{id}")?;
        for v in row {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Default series ids `s1, s2, …`.
pub fn default_series_ids(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("s{i}")).collect()
}

/// `<csv path>.index.json`
pub fn sidecar_path(csv_path: impl AsRef<Path>) -> PathBuf {
    let mut s = csv_path.as_ref().as_os_str().to_owned();
    s.push(".index.json");
    PathBuf::from(s)
}

pub fn write_series_index(path: impl AsRef<Path>, series_ids: &[String]) -> Result<()> {
    let index = SeriesIndex {
        series_ids: series_ids.to_vec(),
    };
    std::fs::write(path, serde_json::to_string(&index)?)?;
    Ok(())
}

pub fn read_series_index(path: impl AsRef<Path>) -> Result<SeriesIndex> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Loads `timestamp,series_id,value` rows and pivots them to wide form.
pub fn load_long_csv(path: impl AsRef<Path>, options: LoadOptions) -> Result<LabelledPanel> {
    let mut records = reader(path.as_ref(), options)?.into_records();
    match records.next() {
        Some(h) => {
            let h = h?;
            if h.len() != 3 {
                return Err(Error::RaggedRows { row: 0, expected: 3, got: h.len() });
            }
        }
        None => return Err(Error::EmptyFile),
    }
    let mut series: Vec<String> = Vec::new();
    let mut series_pos: HashMap<String, usize> = HashMap::new();
    let mut stamps: Vec<String> = Vec::new();
    let mut stamp_pos: HashMap<String, usize> = HashMap::new();
    let mut cells: HashMap<(usize, usize), f64> = HashMap::new();
    for (r, rec) in records.enumerate() {
        let rec = rec?;
        let row = r + 1;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 3 {
            return Err(Error::RaggedRows { row, expected: 3, got: rec.len() });
        }
        let s = *series_pos.entry(rec[1].to_string()).or_insert_with(|| {
            series.push(rec[1].to_string());
            series.len() - 1
        });
        let ts = *stamp_pos.entry(rec[0].to_string()).or_insert_with(|| {
            stamps.push(rec[0].to_string());
            stamps.len() - 1
        });
        let v = parse_value(&rec[2], row, 3)?;
        if cells.insert((s, ts), v).is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate cell for series {:?} at {:?}",
                &rec[1], &rec[0]
            )));
        }
    }
    if series.is_empty() {
        return Err(Error::EmptyFile);
    }
    let mut values = Vec::with_capacity(series.len() * stamps.len());
    for (s, id) in series.iter().enumerate() {
        for (ts, stamp) in stamps.iter().enumerate() {
            match cells.get(&(s, ts)) {
                Some(v) => values.push(*v),
                None => {
                    return Err(Error::MissingCell {
                        series: id.clone(),
                        timestamp: stamp.clone(),
                    })
                }
            }
        }
    }
    Ok(LabelledPanel {
        data: DatasetMatrix::new(series.len(), stamps.len(), values)?,
        series_ids: series,
    })
}

/// Output of [`resample_sum`].
#[derive(Debug, Clone, PartialEq)]
pub struct Resampled {
    pub data: DatasetMatrix,
    /// Trailing instants that did not fill a whole window.
    pub dropped: usize,
}

/// Sums each run of `factor` consecutive instants (energy per window).
pub fn resample_sum(data: &DatasetMatrix, factor: usize) -> Result<Resampled> {
    if factor == 0 {
        return Err(Error::InvalidArgument("resampling factor must be at least 1".into()));
    }
    let t_out = data.t() / factor;
    if t_out == 0 {
        return Err(Error::HorizonShorterThanPeriod {
            horizon: data.t(),
            period: factor,
        });
    }
    let values = data
        .rows()
        .flat_map(|r| r.chunks_exact(factor).map(|w| w.iter().sum::<f64>()))
        .collect();
    Ok(Resampled {
        data: DatasetMatrix::new(data.n(), t_out, values)?,
        dropped: data.t() - t_out * factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::validate_dataset;
    use proptest::prelude::*;

    fn file_with(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_wide_file() {
        let f = file_with("series_id,v1,v2,v3,v4\nh1,1,2,3,4\nh2,0.5,-1,2e-3,7\n");
        let p = load_wide_csv(f.path(), LoadOptions::default()).unwrap();
        assert_eq!((p.data.n(), p.data.t()), (2, 4));
        assert_eq!(p.series_ids, vec!["h1", "h2"]);
        assert_eq!(p.data.row(1), &[0.5, -1.0, 0.002, 7.0]);
    }

    #[test]
    fn ragged_row() {
        let f = file_with("series_id,v1,v2,v3,v4\nh1,1,2,3,4\nh2,1,2,3\n");
        assert_eq!(
            load_wide_csv(f.path(), LoadOptions::default()).unwrap_err(),
            Error::RaggedRows { row: 2, expected: 4, got: 3 }
        );
    }

    #[test]
    fn bad_value() {
        let f = file_with("series_id,v1,v2,v3\nh1,1,2,3\nh2,1,2,abc\n");
        assert_eq!(
            load_wide_csv(f.path(), LoadOptions::default()).unwrap_err(),
            Error::ParseError { row: 2, col: 3, value: "abc".into() }
        );
        let f = file_with("series_id,v1\nh1,NaN\n");
        assert!(matches!(load_wide_csv(f.path(), LoadOptions::default()), Err(Error::ParseError { .. })));
    }

    #[test]
    fn empty_file() {
        let f = file_with("");
        assert_eq!(load_wide_csv(f.path(), LoadOptions::default()).unwrap_err(), Error::EmptyFile);
        let f = file_with("series_id,v1\n");
        assert_eq!(load_wide_csv(f.path(), LoadOptions::default()).unwrap_err(), Error::EmptyFile);
    }

    #[test]
    fn long_format_pivots() {
        let f = file_with("timestamp,series_id,value\n00:00,a,1\n00:00,b,2\n00:30,a,3\n00:30,b,4\n");
        let p = load_long_csv(f.path(), LoadOptions::default()).unwrap();
        assert_eq!(p.series_ids, vec!["a", "b"]);
        assert_eq!(p.data.row(0), &[1.0, 3.0]);
        assert_eq!(p.data.row(1), &[2.0, 4.0]);
    }

    #[test]
    fn long_format_missing_cell() {
        let f = file_with("timestamp,series_id,value\n00:00,a,1\n00:00,b,2\n00:30,a,3\n");
        assert_eq!(
            load_long_csv(f.path(), LoadOptions::default()).unwrap_err(),
            Error::MissingCell { series: "b".into(), timestamp: "00:30".into() }
        );
    }

    #[test]
    fn resample_shapes_and_sums() {
        let minutely = validate_dataset(&[(0..60).map(|v| v as f64).collect::<Vec<_>>()]).unwrap();
        let r = resample_sum(&minutely, 30).unwrap();
        assert_eq!(r.data.row(0), &[435.0, 1335.0]);
        assert_eq!(r.dropped, 0);

        let ones = validate_dataset(&[vec![1.0; 95]]).unwrap();
        let r = resample_sum(&ones, 30).unwrap();
        assert_eq!(r.data.row(0), &[30.0, 30.0, 30.0]);
        assert_eq!(r.dropped, 5);

        assert_eq!(resample_sum(&ones, 1).unwrap().data, ones);
        assert!(resample_sum(&ones, 0).is_err());
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("d.csv");
        let side = sidecar_path(&csv);
        assert!(side.to_string_lossy().ends_with("d.csv.index.json"));
        write_series_index(&side, &default_series_ids(3)).unwrap();
        let raw = std::fs::read_to_string(&side).unwrap();
        assert_eq!(raw, r#"{"series_ids":["s1","s2","s3"]}"#);
        assert_eq!(read_series_index(&side).unwrap().series_ids.len(), 3);
    }

    proptest! {
        #[test]
        fn resample_conserves_energy(n in 1usize..4, windows in 1usize..8, factor in 1usize..6, vals in proptest::collection::vec(0.0f64..10.0, 200)) {
            let t = windows * factor;
            let data = DatasetMatrix::new(n, t, vals[..n * t].to_vec()).unwrap();
            let r = resample_sum(&data, factor).unwrap();
            let before: f64 = data.values().iter().sum();
            let after: f64 = r.data.values().iter().sum();
            prop_assert!((before - after).abs() <= 1e-9 * before.abs().max(1.0));
        }

        #[test]
        fn wide_round_trip_is_bit_exact(n in 1usize..4, t in 1usize..6, vals in proptest::collection::vec(proptest::num::f64::NORMAL, 24)) {
            let data = DatasetMatrix::new(n, t, vals[..n * t].to_vec()).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("p.csv");
            write_wide_csv(&path, &data, &default_series_ids(n)).unwrap();
            let back = load_wide_csv(&path, LoadOptions::default()).unwrap();
            prop_assert_eq!(back.data, data);
        }
    }
}
