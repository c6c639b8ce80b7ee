//! CSV export of value grids and admission tables.
//!
//! Layout: the header row holds the `n2` indices, the first column the `n1`
//! indices, and the corner cell is `n1/n2`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{ThresholdPolicy, ValueGrid};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    /// Two decimals, the layout of the published tables.
    #[default]
    TwoDecimals,
    /// Shortest representation that round-trips exactly.
    Full,
}

impl Precision {
    fn format(self, v: f64) -> String {
        match self {
            Precision::TwoDecimals => {
                let s = format!("{v:.2}");
                // Avoid printing "-0.00".
                if s == "-0.00" { "0.00".to_string() } else { s }
            }
            Precision::Full => format!("{v:?}"),
        }
    }
}

fn header(n2_size: usize) -> String {
    let mut s = String::from("n1/n2");
    for n2 in 0..n2_size {
        let _ = write!(s, ",{n2}");
    }
    s.push('\n');
    s
}

pub fn grid_to_csv(grid: &ValueGrid, precision: Precision) -> String {
    let mut s = header(grid.n2_size());
    for n1 in 0..grid.n1_size() {
        let _ = write!(s, "{n1}");
        for &v in grid.row(n1) {
            s.push(',');
            s.push_str(&precision.format(v));
        }
        s.push('\n');
    }
    s
}

/// 0/1 admission table over `n2 = 0..=cap`.
pub fn actions_to_csv(policy: &ThresholdPolicy, cap: usize) -> String {
    let mut s = header(cap + 1);
    for (n1, t) in policy.thresholds.iter().enumerate() {
        let _ = write!(s, "{n1}");
        for n2 in 0..=cap {
            s.push_str(if t.admits(n2) { ",1" } else { ",0" });
        }
        s.push('\n');
    }
    s
}

pub fn grid_from_csv(text: &str) -> Result<ValueGrid> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.get(0) != Some("n1/n2") {
        return Err(Error::Config("grid CSV must start with an n1/n2 corner cell".into()));
    }
    let width = header.len() - 1;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.get(0).and_then(|c| c.trim().parse::<usize>().ok()) != Some(i) {
            return Err(Error::Config(format!("grid CSV row {i} has a bad n1 label")));
        }
        let row = (1..=width)
            .map(|j| {
                rec[j]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad grid cell {:?}: {e}", &rec[j])))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    ValueGrid::from_rows(rows)
}
