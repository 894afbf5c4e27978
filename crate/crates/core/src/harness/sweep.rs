use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{run_experiment, ExperimentConfig, HarnessError, RunRecord, SweepTag};
use crate::integrators::Scheme;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Epsilon,
    Gamma,
    M,
    C,
    /// Initial step `τ0` of every scheme.
    Tau,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::Gamma => "gamma",
            SweepAxis::M => "m",
            SweepAxis::C => "c",
            SweepAxis::Tau => "tau",
        }
    }

    fn apply(self, cfg: &mut ExperimentConfig, value: f64) {
        match self {
            SweepAxis::Epsilon => cfg.epsilons = vec![value],
            SweepAxis::Gamma => cfg.params.gamma = value,
            SweepAxis::M => cfg.params.m = value,
            SweepAxis::C => cfg.c = value,
            SweepAxis::Tau => {
                cfg.params.tau0 = Some(value);
                for o in [&mut cfg.houbolt, &mut cfg.lie, &mut cfg.rk45] {
                    o.tau0 = None;
                }
            }
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "epsilon" | "eps" => Ok(SweepAxis::Epsilon),
            "gamma" => Ok(SweepAxis::Gamma),
            "m" => Ok(SweepAxis::M),
            "c" => Ok(SweepAxis::C),
            "tau" | "tau0" => Ok(SweepAxis::Tau),
            _ => Err(format!(
                "unknown sweep axis `{s}` (epsilon, gamma, m, c, tau)"
            )),
        }
    }
}

/// Shape of a statistic as the swept value increases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Increasing,
    Decreasing,
    Flat,
    Mixed,
}

impl Trend {
    pub fn of(values: &[f64]) -> Trend {
        let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
        if diffs.iter().all(|d| *d == 0.0) {
            Trend::Flat
        } else if diffs.iter().all(|d| *d >= 0.0) {
            Trend::Increasing
        } else if diffs.iter().all(|d| *d <= 0.0) {
            Trend::Decreasing
        } else {
            Trend::Mixed
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub scheme: Scheme,
    pub value: f64,
    pub runs: usize,
    pub median_delta: f64,
    pub mean_iterations: f64,
    /// Run count per status name.
    pub statuses: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub points: Vec<SweepPoint>,
    /// Per scheme, trend of the median δ over the values sorted ascending.
    pub delta_trend: Vec<(Scheme, Trend)>,
    pub iteration_trend: Vec<(Scheme, Trend)>,
    #[serde(skip)]
    pub records: Vec<RunRecord>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let k = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[k]
    } else {
        0.5 * (xs[k - 1] + xs[k])
    }
}

/// Reruns `cfg` once per value of `axis`, everything else held fixed.
pub fn parameter_sweep(
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<SweepOutput, HarnessError> {
    if values.is_empty() {
        return Err(HarnessError::Config(
            "sweep needs at least one value".into(),
        ));
    }
    let mut records = Vec::new();
    let mut points = Vec::new();
    for &value in values {
        let mut c = cfg.clone();
        axis.apply(&mut c, value);
        let recs = run_experiment(&c)?;
        for &scheme in &c.schemes {
            let mine: Vec<&RunRecord> = recs.iter().filter(|r| r.scheme == scheme).collect();
            let mut statuses = BTreeMap::new();
            for r in &mine {
                *statuses.entry(r.status.to_string()).or_insert(0) += 1;
            }
            points.push(SweepPoint {
                scheme,
                value,
                runs: mine.len(),
                median_delta: median(mine.iter().map(|r| r.delta).collect()),
                mean_iterations: mine.iter().map(|r| r.iterations as f64).sum::<f64>()
                    / mine.len().max(1) as f64,
                statuses,
            });
        }
        records.extend(recs.into_iter().map(|mut r| {
            r.sweep = Some(SweepTag {
                axis: axis.name().into(),
                value,
            });
            r
        }));
    }

    let mut delta_trend = Vec::new();
    let mut iteration_trend = Vec::new();
    for &scheme in &cfg.schemes {
        let mut pts: Vec<&SweepPoint> = points.iter().filter(|p| p.scheme == scheme).collect();
        pts.sort_by(|a, b| a.value.total_cmp(&b.value));
        let d: Vec<f64> = pts.iter().map(|p| p.median_delta).collect();
        let it: Vec<f64> = pts.iter().map(|p| p.mean_iterations).collect();
        delta_trend.push((scheme, Trend::of(&d)));
        iteration_trend.push((scheme, Trend::of(&it)));
    }

    Ok(SweepOutput {
        axis,
        values: values.to_vec(),
        points,
        delta_trend,
        iteration_trend,
        records,
    })
}
