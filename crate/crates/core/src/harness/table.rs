use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{HarnessError, RunRecord};
use crate::integrators::Scheme;

pub const TABLE_FORMAT: u32 = 1;

const MISSING: &str = "-";
const NO_TIMING: &str = "na";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableLayout {
    /// obj, iter, time, delta per scheme.
    Table1,
    /// obj, avgiter, tt, delta per scheme plus the exact optimum.
    Table3,
    /// Table3 with the relative objective error per scheme.
    Table4,
}

impl TableLayout {
    pub fn name(self) -> &'static str {
        match self {
            TableLayout::Table1 => "table1",
            TableLayout::Table3 => "table3",
            TableLayout::Table4 => "table4",
        }
    }

    fn columns(self) -> &'static [Col] {
        match self {
            TableLayout::Table1 => &[Col::Obj, Col::Iter, Col::Time, Col::Delta],
            TableLayout::Table3 => &[Col::Obj, Col::AvgIter, Col::TotalTime, Col::Delta],
            TableLayout::Table4 => &[
                Col::Obj,
                Col::AvgIter,
                Col::TotalTime,
                Col::Delta,
                Col::ErrObj,
            ],
        }
    }
}

impl FromStr for TableLayout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "table1" | "1" => Ok(TableLayout::Table1),
            "table3" | "3" => Ok(TableLayout::Table3),
            "table4" | "4" => Ok(TableLayout::Table4),
            _ => Err(format!("unknown layout `{s}` (table1, table3, table4)")),
        }
    }
}

#[derive(Clone, Copy)]
enum Col {
    Obj,
    Iter,
    AvgIter,
    Time,
    TotalTime,
    Delta,
    ErrObj,
}

impl Col {
    fn name(self) -> &'static str {
        match self {
            Col::Obj => "obj",
            Col::Iter => "iter",
            Col::AvgIter => "avgiter",
            Col::Time => "time",
            Col::TotalTime => "tt",
            Col::Delta => "delta",
            Col::ErrObj => "errobj",
        }
    }

    fn value(self, r: &RunRecord) -> Option<f64> {
        match self {
            Col::Obj => Some(r.objective),
            Col::Iter => Some(r.iterations as f64),
            Col::AvgIter => Some(r.avg_iterations),
            Col::Time => r.time,
            Col::TotalTime => r.total_time,
            Col::Delta => Some(r.delta),
            Col::ErrObj => r.errobj,
        }
    }

    fn format(self, x: f64) -> String {
        match self {
            Col::Obj => format!("{x:.2}"),
            Col::Iter => format!("{x:.0}"),
            Col::AvgIter => format!("{x:.1}"),
            Col::Time | Col::TotalTime => format!("{x:.3}"),
            Col::Delta | Col::ErrObj => format!("{x:.3e}"),
        }
    }

    fn is_timing(self) -> bool {
        matches!(self, Col::Time | Col::TotalTime)
    }
}

/// Renders records of a single ε as CSV under a `#` version line, one row
/// per instance and a trailing row of column means.
pub fn emit_table(records: &[RunRecord], layout: TableLayout) -> Result<String, HarnessError> {
    let first = records
        .first()
        .ok_or_else(|| HarnessError::Table("no records".into()))?;
    let eps = first.epsilon;
    if records.iter().any(|r| r.epsilon != eps) {
        return Err(HarnessError::Table(
            "records mix several epsilons; filter to one first".into(),
        ));
    }
    let schemes: Vec<Scheme> = Scheme::ALL
        .into_iter()
        .filter(|s| records.iter().any(|r| r.scheme == *s))
        .collect();
    let mut rows: Vec<(usize, u32, &str)> = Vec::new();
    for r in records {
        let key = (r.n, r.d, r.instance_hash.as_str());
        if !rows.contains(&key) {
            rows.push(key);
        }
    }
    let cols = layout.columns();
    let with_opt = layout != TableLayout::Table1;

    let mut head = vec!["n".to_string(), "d".to_string()];
    for s in &schemes {
        for c in cols {
            head.push(format!("{}_{}", s.name(), c.name()));
        }
    }
    if with_opt {
        head.push("opt_obj".into());
    }

    let ncols = head.len() - 2;
    let mut sums = vec![0.0; ncols];
    let mut counts = vec![0usize; ncols];
    let mut body = Vec::new();
    for &(n, d, hash) in &rows {
        let mut cells = vec![n.to_string(), d.to_string()];
        let mut j = 0;
        let mut opt = None;
        for &s in &schemes {
            let rec = records
                .iter()
                .find(|r| r.instance_hash == hash && r.scheme == s);
            if rec.is_none() {
                log::warn!("table: no {s} record for n={n} d={d} instance {hash}");
            }
            for &c in cols {
                let v = rec.and_then(|r| c.value(r));
                cells.push(match (v, rec) {
                    (Some(x), _) => {
                        sums[j] += x;
                        counts[j] += 1;
                        c.format(x)
                    }
                    (None, Some(_)) if c.is_timing() => NO_TIMING.into(),
                    (None, Some(_)) => {
                        log::warn!("table: {s} n={n} d={d} has no {}", c.name());
                        MISSING.into()
                    }
                    (None, None) => MISSING.into(),
                });
                j += 1;
            }
            opt = opt.or(rec.and_then(|r| r.oracle_value));
        }
        if with_opt {
            cells.push(match opt {
                Some(x) => {
                    sums[j] += x;
                    counts[j] += 1;
                    Col::Obj.format(x)
                }
                None => {
                    log::warn!("table: no exact optimum for n={n} d={d}");
                    MISSING.into()
                }
            });
        }
        body.push(cells);
    }

    let mut avg = vec!["avg".to_string(), String::new()];
    let mut fmts: Vec<Col> = schemes.iter().flat_map(|_| cols.iter().copied()).collect();
    if with_opt {
        fmts.push(Col::Obj);
    }
    for (j, c) in fmts.iter().enumerate() {
        avg.push(if counts[j] > 0 {
            let mean = sums[j] / counts[j] as f64;
            match c {
                Col::Iter => Col::AvgIter.format(mean),
                _ => c.format(mean),
            }
        } else if c.is_timing() {
            NO_TIMING.into()
        } else {
            MISSING.into()
        });
    }

    let mut out = String::new();
    writeln!(
        out,
        "# boolflow-table v{TABLE_FORMAT} layout={} eps={eps:e} rows={}",
        layout.name(),
        rows.len()
    )
    .unwrap();
    for cells in std::iter::once(&head)
        .chain(&body)
        .chain(std::iter::once(&avg))
    {
        writeln!(out, "{}", cells.join(",")).unwrap();
    }
    Ok(out)
}
