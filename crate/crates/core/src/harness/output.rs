//! CSV encoding of trial records and their per-point aggregates. Floats are
//! written in shortest round-trip form so aggregates recomputed from
//! `raw.csv` match the emitted ones bit for bit.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::benchmarks::Scheme;
use crate::error::{Error, Result};

use super::TrialRecord;

pub const RAW_HEADER: [&str; 8] =
    ["sweep_value", "placement", "fading", "scheme", "maxmin_bps_hz", "sum_bps_hz", "status", "wall_ms"];

const AGGREGATE_HEADER: [&str; 8] =
    ["sweep_value", "scheme", "trials", "failed", "maxmin_mean", "maxmin_stderr", "sum_mean", "sum_stderr"];

/// Mean and standard error of one scheme at one sweep value, over the
/// trials that solved to optimality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub sweep_value: f64,
    pub scheme: Scheme,
    pub trials: usize,
    pub failed: usize,
    pub maxmin_mean: f64,
    pub maxmin_stderr: f64,
    pub sum_mean: f64,
    pub sum_stderr: f64,
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Group by (sweep value, scheme) in order of first appearance and reduce
/// each group in record order.
pub fn aggregate(records: &[TrialRecord]) -> Vec<Aggregate> {
    let mut keys: Vec<(u64, Scheme)> = Vec::new();
    for r in records {
        let k = (r.sweep_value.to_bits(), r.scheme);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(bits, scheme)| {
            let group: Vec<&TrialRecord> =
                records.iter().filter(|r| r.sweep_value.to_bits() == bits && r.scheme == scheme).collect();
            let ok: Vec<&&TrialRecord> = group.iter().filter(|r| r.succeeded()).collect();
            let (maxmin_mean, maxmin_stderr) = mean_stderr(&ok.iter().map(|r| r.maxmin_bps_hz).collect::<Vec<_>>());
            let (sum_mean, sum_stderr) = mean_stderr(&ok.iter().map(|r| r.sum_bps_hz).collect::<Vec<_>>());
            Aggregate {
                sweep_value: f64::from_bits(bits),
                scheme,
                trials: group.len(),
                failed: group.len() - ok.len(),
                maxmin_mean,
                maxmin_stderr,
                sum_mean,
                sum_stderr,
            }
        })
        .collect()
}

pub fn write_raw_csv<W: Write>(out: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RAW_HEADER)?;
    for r in records {
        w.write_record([
            r.sweep_value.to_string(),
            r.placement.to_string(),
            r.fading.to_string(),
            r.scheme.tag().to_string(),
            r.maxmin_bps_hz.to_string(),
            r.sum_bps_hz.to_string(),
            r.status.clone(),
            r.wall_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate_csv<W: Write>(out: W, aggregates: &[Aggregate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_HEADER)?;
    for a in aggregates {
        w.write_record([
            a.sweep_value.to_string(),
            a.scheme.tag().to_string(),
            a.trials.to_string(),
            a.failed.to_string(),
            a.maxmin_mean.to_string(),
            a.maxmin_stderr.to_string(),
            a.sum_mean.to_string(),
            a.sum_stderr.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let s = rec.get(i).ok_or_else(|| Error::Config(format!("CSV row has no column {i}")))?;
    s.parse().map_err(|_| Error::Config(format!("cannot parse CSV field '{s}'")))
}

fn check_header<R: Read>(r: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let header = r.headers()?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Config(format!("unexpected CSV header {header:?}")));
    }
    Ok(())
}

/// Records of a `raw.csv`; per-WD rates are not stored there and come back
/// empty.
pub fn read_raw_csv<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &RAW_HEADER)?;
    r.records()
        .map(|row| {
            let row = row?;
            Ok(TrialRecord {
                sweep_value: field(&row, 0)?,
                placement: field(&row, 1)?,
                fading: field(&row, 2)?,
                scheme: field(&row, 3)?,
                maxmin_bps_hz: field(&row, 4)?,
                sum_bps_hz: field(&row, 5)?,
                rates: Vec::new(),
                status: field(&row, 6)?,
                wall_ms: field(&row, 7)?,
            })
        })
        .collect()
}

pub fn read_aggregate_csv<R: Read>(input: R) -> Result<Vec<Aggregate>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &AGGREGATE_HEADER)?;
    r.records()
        .map(|row| {
            let row = row?;
            Ok(Aggregate {
                sweep_value: field(&row, 0)?,
                scheme: field(&row, 1)?,
                trials: field(&row, 2)?,
                failed: field(&row, 3)?,
                maxmin_mean: field(&row, 4)?,
                maxmin_stderr: field(&row, 5)?,
                sum_mean: field(&row, 6)?,
                sum_stderr: field(&row, 7)?,
            })
        })
        .collect()
}
