use std::fmt::Write as _;

use nalgebra::DVector;

use crate::{Error, Result};

/// `√(mean_{i ∈ nodes} ‖est_i − truth_i‖²)`.
pub fn rmse(estimates: &[DVector<f64>], truths: &[DVector<f64>], nodes: &[usize]) -> Result<f64> {
    if estimates.len() != truths.len() {
        return Err(Error::dims(format!(
            "{} estimates but {} truths",
            estimates.len(),
            truths.len()
        )));
    }
    if nodes.is_empty() {
        return Err(Error::dims("empty node set"));
    }
    let mut acc = 0.0;
    for &i in nodes {
        let (e, t) = (
            estimates.get(i).ok_or(Error::NodeOutOfRange { index: i, nodes: estimates.len() })?,
            &truths[i],
        );
        if e.len() != t.len() {
            return Err(Error::dims("estimate and truth lengths differ"));
        }
        acc += (e - t).norm_squared();
    }
    Ok((acc / nodes.len() as f64).sqrt())
}

/// [`rmse`] at every time of aligned histories.
pub fn rmse_series(
    estimates: &[Vec<DVector<f64>>],
    truths: &[Vec<DVector<f64>>],
    nodes: &[usize],
) -> Result<Vec<f64>> {
    if estimates.len() != truths.len() {
        return Err(Error::dims("estimate and truth histories differ in length"));
    }
    estimates.iter().zip(truths).map(|(e, t)| rmse(e, t, nodes)).collect()
}

/// How per-replicate, per-node samples become a reported value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduce {
    /// Samples are squared errors; report `√mean`.
    Rms,
    /// Report the plain mean.
    Mean,
}

/// One metric of one replicate: `values[k][i]` is the sample of node `i` at
/// the `k`-th recorded time (a single entry when the metric is not per node).
#[derive(Debug, Clone, PartialEq)]
pub struct RawMetric {
    pub name: &'static str,
    pub reduce: Reduce,
    pub per_node: bool,
    /// Node of `values[k][0]`; later entries follow consecutively.
    pub first_node: usize,
    pub values: Vec<Vec<f64>>,
}

impl RawMetric {
    pub fn new(name: &'static str, reduce: Reduce, per_node: bool) -> Self {
        Self { name, reduce, per_node, first_node: 0, values: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub metric: String,
    /// `None` for the network-wide aggregate.
    pub node: Option<usize>,
    pub values: Vec<f64>,
}

/// Replicate-aggregated time series of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSeries {
    pub scenario: String,
    pub replicates: usize,
    pub times: Vec<usize>,
    pub series: Vec<Series>,
}

/// Sum after sorting, so the result does not depend on replicate order.
fn ordered_mean(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.into_iter().sum::<f64>() / n
}

fn reduce(kind: Reduce, xs: Vec<f64>) -> f64 {
    let m = ordered_mean(xs);
    match kind {
        Reduce::Rms => m.sqrt(),
        Reduce::Mean => m,
    }
}

impl MetricsSeries {
    /// Combine per-replicate metrics. Every replicate must report the same
    /// metrics in the same order with the same shapes.
    pub fn aggregate(scenario: &str, times: Vec<usize>, replicates: &[Vec<RawMetric>]) -> Result<Self> {
        let Some(first) = replicates.first() else {
            return Err(Error::dims("no replicates to aggregate"));
        };
        let mut series = Vec::new();
        for (m, proto) in first.iter().enumerate() {
            let runs: Vec<&RawMetric> = replicates.iter().map(|r| &r[m]).collect();
            if runs.iter().any(|r| r.name != proto.name || r.values.len() != times.len()) {
                return Err(Error::dims(format!("replicates disagree on metric {}", proto.name)));
            }
            let nodes = proto.values.first().map_or(0, Vec::len);
            let aggregate = (0..times.len())
                .map(|k| reduce(proto.reduce, runs.iter().flat_map(|r| r.values[k].iter().copied()).collect()))
                .collect();
            series.push(Series { metric: proto.name.to_string(), node: None, values: aggregate });
            if proto.per_node {
                for i in 0..nodes {
                    let values = (0..times.len())
                        .map(|k| reduce(proto.reduce, runs.iter().map(|r| r.values[k][i]).collect()))
                        .collect();
                    series.push(Series { metric: proto.name.to_string(), node: Some(proto.first_node + i), values });
                }
            }
        }
        Ok(Self { scenario: scenario.to_string(), replicates: replicates.len(), times, series })
    }

    pub fn get(&self, metric: &str, node: Option<usize>) -> Option<&Series> {
        self.series.iter().find(|s| s.metric == metric && s.node == node)
    }

    /// Value of `metric` (aggregate) at the last recorded time.
    pub fn last(&self, metric: &str) -> Option<f64> {
        self.get(metric, None).and_then(|s| s.values.last().copied())
    }

    pub fn metric_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for s in &self.series {
            if !names.contains(&s.metric.as_str()) {
                names.push(&s.metric);
            }
        }
        names
    }

    /// Long-format CSV: `scenario,replicates,t,metric,node,value`, with
    /// 1-based node numbers and an empty node field for aggregates.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,replicates,t,metric,node,value\n");
        for s in &self.series {
            let node = s.node.map(|i| (i + 1).to_string()).unwrap_or_default();
            for (t, v) in self.times.iter().zip(&s.values) {
                let _ = writeln!(out, "{},{},{},{},{},{:.12e}", self.scenario, self.replicates, t, s.metric, node, v);
            }
        }
        out
    }

    /// Gnuplot script drawing every aggregate series from `metrics.csv`.
    pub fn plot_script(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "set datafile separator ','");
        let _ = writeln!(out, "set key outside right");
        let _ = writeln!(out, "set xlabel 't'");
        let _ = writeln!(out, "set logscale y");
        let _ = writeln!(out, "set title '{} ({} replicates)'", self.scenario, self.replicates);
        let plots: Vec<String> = self
            .metric_names()
            .iter()
            .map(|m| {
                format!(
                    "'metrics.csv' using 3:(strcol(4) eq '{m}' && strcol(5) eq '' ? $6 : 1/0) with lines title '{m}'"
                )
            })
            .collect();
        let _ = writeln!(out, "plot {}", plots.join(", \\\n     "));
        out
    }
}
