//! Per-evaluation run records and their CSV / JSON encodings.
//!
//! CSV layout: a header `iter,y,best_y,step_seconds,xc0,…,xd0,…` followed by
//! one row per evaluation. Coordinates are the evaluated point in `[xc; xd]`
//! layout. The best point is not stored in CSV; it is recovered on read as the
//! first point attaining the running minimum. The JSON encoding is the serde
//! form of [`RunTrace`] and keeps every field.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::MixedPoint;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed trace: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// 1-based evaluation index.
    pub iter: usize,
    pub point: MixedPoint,
    pub y: f64,
    pub best_y: f64,
    pub best_point: MixedPoint,
    /// Algorithm time attributed to this evaluation, objective excluded.
    pub step_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
}

impl RunTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Appends an evaluation and updates the running best.
    pub fn push(&mut self, point: MixedPoint, y: f64, step_seconds: f64) {
        let (best_y, best_point) = match self.records.last() {
            Some(last) if last.best_y <= y => (last.best_y, last.best_point.clone()),
            _ => (y, point.clone()),
        };
        self.records.push(TraceRecord {
            iter: self.records.len() + 1,
            point,
            y,
            best_y,
            best_point,
            step_seconds,
        });
    }

    pub fn best_y(&self) -> Option<f64> {
        self.records.last().map(|r| r.best_y)
    }

    pub fn best_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.best_y).collect()
    }

    /// Copy with timing zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> RunTrace {
        let mut t = self.clone();
        t.records.iter_mut().for_each(|r| r.step_seconds = 0.0);
        t
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), TraceError> {
        let mut out = csv::Writer::from_writer(w);
        let (d_c, d_d) = self
            .records
            .first()
            .map_or((0, 0), |r| (r.point.xc.len(), r.point.xd.len()));
        let mut header: Vec<String> = ["iter", "y", "best_y", "step_seconds"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((0..d_c).map(|i| format!("xc{i}")));
        header.extend((0..d_d).map(|i| format!("xd{i}")));
        out.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![
                r.iter.to_string(),
                r.y.to_string(),
                r.best_y.to_string(),
                r.step_seconds.to_string(),
            ];
            row.extend(r.point.xc.iter().chain(&r.point.xd).map(|v| v.to_string()));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, TraceError> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        let cols: Vec<&str> = header.iter().collect();
        if cols.len() < 4 || cols[..4] != ["iter", "y", "best_y", "step_seconds"] {
            return Err(TraceError::Malformed(format!("unexpected header {cols:?}")));
        }
        let d_c = cols.iter().filter(|c| c.starts_with("xc")).count();
        let d_d = cols.iter().filter(|c| c.starts_with("xd")).count();
        if 4 + d_c + d_d != cols.len() {
            return Err(TraceError::Malformed("unknown columns".into()));
        }
        let mut trace = RunTrace::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64, TraceError> {
                rec.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| TraceError::Malformed(format!("row {}: column {}", line + 2, i)))
            };
            let iter = num(0)? as usize;
            let y = num(1)?;
            let best_y = num(2)?;
            let step = num(3)?;
            let xc = (0..d_c).map(|i| num(4 + i)).collect::<Result<_, _>>()?;
            let xd = (0..d_d).map(|i| num(4 + d_c + i)).collect::<Result<_, _>>()?;
            trace.push(MixedPoint::new(xc, xd), y, step);
            let last = trace.records.last().expect("just pushed");
            if last.iter != iter || last.best_y != best_y {
                return Err(TraceError::Malformed(format!(
                    "row {}: inconsistent iter or best_y",
                    line + 2
                )));
            }
        }
        Ok(trace)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, TraceError> {
        Ok(serde_json::from_str(s)?)
    }
}
