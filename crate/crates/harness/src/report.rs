//! Long-format result rows and the ensemble summary.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// Version of the `results.csv` column layout.
pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: [&str; 8] = ["seed", "kappa", "horizon", "steps", "name", "index", "value", "error"];

/// One observable of one seed. Failed pipelines produce a single row with
/// `value = None` and the message in `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub seed: u64,
    pub kappa: f64,
    pub horizon: f64,
    pub steps: usize,
    pub name: String,
    pub index: usize,
    pub value: Option<f64>,
    pub error: String,
}

pub fn write_csv<W: std::io::Write>(rows: &[ReportRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_bytes(rows: &[ReportRow]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    buf
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<ReportRow>, HarnessError> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd
        .headers()
        .map_err(|e| HarnessError::Usage(format!("csv: {e}")))?
        .iter()
        .map(String::from)
        .collect();
    if header != CSV_HEADER {
        return Err(HarnessError::Usage(format!("unexpected csv header {header:?}")));
    }
    rd.deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::Usage(format!("csv: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub count: usize,
    pub mean: f64,
    /// Standard error of the mean (0 for a single value).
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub config_hash: String,
    pub task: String,
    pub seeds: usize,
    pub failed_seeds: usize,
    /// Keyed by `name[index]`.
    pub observables: BTreeMap<String, Stat>,
}

impl Summary {
    pub fn from_rows(rows: &[ReportRow], task: &str, config_hash: &str, seeds: usize) -> Self {
        let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut failed = std::collections::BTreeSet::new();
        for r in rows {
            match r.value {
                Some(v) if r.error.is_empty() => groups.entry(format!("{}[{}]", r.name, r.index)).or_default().push(v),
                _ => {
                    failed.insert(r.seed);
                }
            }
        }
        let observables = groups
            .into_iter()
            .map(|(k, v)| {
                let n = v.len() as f64;
                let mean = v.iter().sum::<f64>() / n;
                let stderr = if v.len() > 1 {
                    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
                } else {
                    0.0
                };
                (
                    k,
                    Stat {
                        count: v.len(),
                        mean,
                        stderr,
                    },
                )
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            config_hash: config_hash.to_string(),
            task: task.to_string(),
            seeds,
            failed_seeds: failed.len(),
            observables,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes") + "\n"
    }
}
