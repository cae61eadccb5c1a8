//! CSV and JSON ingestion and export.
//!
//! Every CSV writer emits a header row; metadata goes to a separate JSON
//! document carrying [`SCHEMA_VERSION`].

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::binning::BinnedSample;
use crate::cde::DensityEstimate;
use crate::error::{Error, Result};
use crate::monitor::MonitorReport;
use crate::rank::DDPlot;
use crate::sim::Trajectory;
use crate::window::Observation;

/// Version stamped into every metadata document and report line.
pub const SCHEMA_VERSION: u32 = 1;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Columns of simulator output that annotate rather than measure.
const ANNOTATIONS: [&str; 2] = ["regime", "contaminated"];

/// Streaming reader for `index,time,v1..vd` files (`time` optional).
/// `regime` and `contaminated` columns are skipped, so trajectory files
/// read as scalar streams. Line numbers in errors count the header as line 1.
pub struct StreamReader<R: Read> {
    records: csv::StringRecordsIntoIter<R>,
    has_time: bool,
    columns: Vec<usize>,
    width: usize,
}

impl<R: Read> StreamReader<R> {
    pub fn new(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
        if header.get(0) != Some("index") {
            return Err(parse_err(1, "first column must be `index`"));
        }
        let has_time = header.get(1) == Some("time");
        let columns: Vec<usize> = (1 + usize::from(has_time)..header.len())
            .filter(|&j| !ANNOTATIONS.contains(&&header[j]))
            .collect();
        if columns.is_empty() {
            return Err(parse_err(1, "no value columns"));
        }
        Ok(Self { records: rdr.into_records(), has_time, columns, width: header.len() })
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn has_time(&self) -> bool {
        self.has_time
    }

    fn parse(&self, rec: &csv::StringRecord) -> Result<Observation> {
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let expected = self.width;
        if rec.len() != expected {
            return Err(parse_err(line, format!("expected {expected} fields, found {}", rec.len())));
        }
        let index: u64 = rec[0].parse().map_err(|_| parse_err(line, format!("index `{}` is not an integer", &rec[0])))?;
        let number = |col: usize| -> Result<f64> {
            let v: f64 =
                rec[col].parse().map_err(|_| parse_err(line, format!("field {} `{}` is not numeric", col + 1, &rec[col])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(line, format!("field {} is not finite", col + 1)))
            }
        };
        let value = self.columns.iter().map(|&j| number(j)).collect::<Result<Vec<_>>>()?;
        let mut obs = Observation::new(index, value);
        if self.has_time {
            obs = obs.with_time(number(1)?);
        }
        Ok(obs)
    }
}

impl<R: Read> Iterator for StreamReader<R> {
    type Item = Result<Observation>;

    fn next(&mut self) -> Option<Self::Item> {
        let rec = self.records.next()?;
        Some(match rec {
            Ok(rec) => self.parse(&rec),
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                Err(parse_err(line, e.to_string()))
            }
        })
    }
}

/// Attach the path to an I/O error.
pub fn with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn read_to_string(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    std::fs::read_to_string(path).map_err(|e| with_path(path, e))
}

pub fn open_stream(path: impl AsRef<Path>) -> Result<StreamReader<BufReader<File>>> {
    let path = path.as_ref();
    StreamReader::new(BufReader::new(File::open(path).map_err(|e| with_path(path, e))?))
}

/// Read a whole stream file.
pub fn read_observations(path: impl AsRef<Path>) -> Result<Vec<Observation>> {
    open_stream(path)?.collect()
}

pub fn write_observations<W: Write>(out: W, obs: &[Observation]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let dim = obs.first().map_or(1, Observation::dim);
    let has_time = obs.iter().any(|o| o.time.is_some());
    let mut header = vec!["index".to_string()];
    if has_time {
        header.push("time".into());
    }
    header.extend((1..=dim).map(|j| format!("v{j}")));
    w.write_record(&header)?;
    for o in obs {
        let mut row = vec![o.index.to_string()];
        if has_time {
            row.push(o.time.map_or(String::new(), |t| t.to_string()));
        }
        row.extend(o.value.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_depths<W: Write>(out: W, indices: &[u64], depths: &[f64]) -> Result<()> {
    if indices.len() != depths.len() {
        return Err(Error::LengthMismatch(format!("{} indices vs {} depths", indices.len(), depths.len())));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "depth"])?;
    for (i, d) in indices.iter().zip(depths) {
        w.write_record([i.to_string(), d.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Two columns: depth w.r.t. the first sample, depth w.r.t. the second.
pub fn write_dd_plot<W: Write>(out: W, dd: &DDPlot) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["depth_first", "depth_second"])?;
    for (a, b) in &dd.points {
        w.write_record([a.to_string(), b.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Nonempty cells as `(mid_x, mid_y, count)`.
pub fn write_binned<W: Write>(out: W, binned: &BinnedSample) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mid_x", "mid_y", "count"])?;
    for (x, y, c) in binned.cells().filter(|c| c.2 > 0) {
        w.write_record([x.to_string(), y.to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn binned_meta(binned: &BinnedSample) -> serde_json::Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "beta": binned.meta.as_ref().map(|m| m.beta),
        "m": binned.grid.m(),
        "beta_mode": binned.meta.as_ref().map(|m| m.beta_mode),
        "trimmed_count": binned.trimmed_count,
        "total_interior": binned.total_interior,
        "grid": [binned.grid.lo(), binned.grid.hi()],
    })
}

/// Matrix layout: the header row holds the y grid after a `condition`
/// cell, each following row a condition point and its density row.
pub fn write_density<W: Write>(out: W, est: &DensityEstimate) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["condition".to_string()];
    header.extend(est.y_grid.iter().map(f64::to_string));
    w.write_record(&header)?;
    for (a, row) in est.condition_points.iter().zip(&est.values) {
        let mut rec = vec![a.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_density<R: Read>(input: R) -> Result<DensityEstimate> {
    let mut lines = BufReader::new(input).lines();
    let cells = |s: &str, line: usize| -> Result<Vec<f64>> {
        s.split(',')
            .skip(1)
            .map(|c| c.trim().parse::<f64>().map_err(|_| parse_err(line, format!("`{c}` is not numeric"))))
            .collect()
    };
    let header = lines.next().ok_or_else(|| parse_err(1, "empty density file"))??;
    if !header.starts_with("condition") {
        return Err(parse_err(1, "first header cell must be `condition`"));
    }
    let y_grid = cells(&header, 1)?;
    let (mut conds, mut values) = (Vec::new(), Vec::new());
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 2;
        let first = line.split(',').next().unwrap_or("");
        conds.push(first.trim().parse::<f64>().map_err(|_| parse_err(lineno, format!("`{first}` is not numeric")))?);
        let row = cells(&line, lineno)?;
        if row.len() != y_grid.len() {
            return Err(parse_err(lineno, format!("{} values for a {}-point grid", row.len(), y_grid.len())));
        }
        values.push(row);
    }
    DensityEstimate::new(conds, y_grid, values)
}

pub fn density_meta(est: &DensityEstimate) -> serde_json::Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "normalized": est.normalized,
        "conditions": est.condition_points.len(),
        "grid_points": est.y_grid.len(),
        "estimate": est.meta,
    })
}

pub fn write_trajectory<W: Write>(out: W, traj: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "value", "regime", "contaminated"])?;
    for i in 0..traj.len() {
        w.write_record([
            i.to_string(),
            traj.values[i].to_string(),
            traj.regimes[i].to_string(),
            u8::from(traj.contaminated[i]).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON object per report.
pub fn write_reports_jsonl<W: Write>(mut out: W, reports: &[MonitorReport]) -> Result<()> {
    for r in reports {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Plot-ready statistic series. Rank reports give
/// `window_end_index,S,zscore,threshold,alert`; density reports give
/// `window_end_index,psi,regime,d0..dM,threshold,alert`.
pub fn write_statistic_series<W: Write>(out: W, reports: &[MonitorReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let rank = reports.first().is_some_and(|r| r.zscore.is_some());
    if rank {
        w.write_record(["window_end_index", "S", "zscore", "threshold", "alert"])?;
        for r in reports {
            w.write_record([
                r.end_index.to_string(),
                opt(r.rank_sum),
                opt(r.zscore),
                r.threshold.to_string(),
                u8::from(r.alert).to_string(),
            ])?;
        }
    } else {
        let k = reports.first().map_or(0, |r| r.distances.len());
        let mut header = vec!["window_end_index".to_string(), "psi".into(), "regime".into()];
        header.extend((0..k).map(|i| format!("d{i}")));
        header.extend(["threshold".to_string(), "alert".into()]);
        w.write_record(&header)?;
        for r in reports {
            let mut rec = vec![r.end_index.to_string(), opt(r.psi), opt(r.regime)];
            rec.extend(r.distances.iter().map(f64::to_string));
            rec.extend([r.threshold.to_string(), u8::from(r.alert).to_string()]);
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(s: &str) -> Result<Vec<Observation>> {
        StreamReader::new(s.as_bytes())?.collect()
    }

    #[test]
    fn reads_with_and_without_time() {
        let obs = read("index,time,v1,v2\n0,0.5,1,2\n1,1.5,3,4\n").unwrap();
        assert_eq!(obs.len(), 2);
        assert_eq!(obs[1].time, Some(1.5));
        assert_eq!(obs[1].value, vec![3.0, 4.0]);
        let obs = read("index,value,regime,contaminated\n0,2.5,1,0\n").unwrap();
        assert_eq!(obs[0].value, vec![2.5]);
        let obs = read("index,v1\n7,-1e3\n").unwrap();
        assert_eq!(obs[0].index, 7);
        assert_eq!(obs[0].time, None);
    }

    #[test]
    fn non_numeric_row_reports_line() {
        let err = read("index,v1\n0,1\n1,2\n2,abc\n").unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 4);
                assert!(message.contains("abc"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(read("index,v1\n0,\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(read("index,v1\n0,NaN\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(read("idx,v1\n0,1\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn observation_round_trip() {
        let obs = vec![Observation::new(0, vec![1.25, -2.0]), Observation::new(1, vec![0.0, 3.5])];
        let mut buf = Vec::new();
        write_observations(&mut buf, &obs).unwrap();
        assert_eq!(read(std::str::from_utf8(&buf).unwrap()).unwrap(), obs);
    }

    #[test]
    fn density_round_trip() {
        let est =
            DensityEstimate::new(vec![-1.0, 1.0], vec![0.0, 0.5, 1.0], vec![vec![0.1, 0.2, 0.3], vec![1.0, 1.5, 2.0]])
                .unwrap();
        let mut buf = Vec::new();
        write_density(&mut buf, &est).unwrap();
        let back = read_density(&buf[..]).unwrap();
        assert_eq!(back.values, est.values);
        assert_eq!(back.y_grid, est.y_grid);
        assert_eq!(back.condition_points, est.condition_points);
    }

    #[test]
    fn rank_series_columns() {
        let r = MonitorReport {
            end_index: 99,
            psi: None,
            regime: None,
            distances: vec![],
            zscore: Some(1.5),
            rank_sum: Some(10.0),
            threshold: 2.0,
            alert: false,
            elapsed: 0.0,
        };
        let mut buf = Vec::new();
        write_statistic_series(&mut buf, &[r.clone()]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "window_end_index,S,zscore,threshold,alert\n99,10,1.5,2,0\n");
        let mut buf = Vec::new();
        write_reports_jsonl(&mut buf, &[r]).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["end_index"], 99);
    }
}
