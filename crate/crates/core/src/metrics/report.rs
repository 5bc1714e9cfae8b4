//! Per-group, averaged and pooled metric tables.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    bayes_threshold, confusion_rates, cross_entropy, decide_all, expected_cost, normalized_ec,
    normalized_xe, standard_metrics, CostMatrix,
};
use crate::data_model::{empirical_priors, EvalSet, GroupKey, Priors, ScoredSample};
use crate::error::{Error, Result};
use crate::resampling::{bootstrap_many, BootstrapEstimate, BootstrapSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricName {
    Acc,
    Uar,
    Nter,
    Nber,
    Nec,
    Nxe,
}

impl MetricName {
    pub const ALL: [MetricName; 6] = [
        MetricName::Acc,
        MetricName::Uar,
        MetricName::Nter,
        MetricName::Nber,
        MetricName::Nec,
        MetricName::Nxe,
    ];

    /// Column label; the cost-based metric is `NEC3` for costs (1, 3).
    pub fn label(self, cost: CostMatrix) -> String {
        match self {
            MetricName::Acc => "ACC".into(),
            MetricName::Uar => "UAR".into(),
            MetricName::Nter => "NTER".into(),
            MetricName::Nber => "NBER".into(),
            MetricName::Nec if cost.c_fp == 1.0 && cost.c_fn.fract() == 0.0 => {
                format!("NEC{}", cost.c_fn)
            }
            MetricName::Nec => "NEC".into(),
            MetricName::Nxe => "NXE".into(),
        }
    }

    /// Whether lower is better.
    pub fn is_normalized_cost(self) -> bool {
        !matches!(self, MetricName::Acc | MetricName::Uar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub ci_low: f64,
    pub ci_high: f64,
    pub b_effective: usize,
}

/// One table entry. `value` is `None` when the metric is undefined for the
/// subset (for instance a single-class group).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub value: Option<f64>,
    #[serde(flatten, default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<Interval>,
}

impl Cell {
    fn plain(value: Option<f64>) -> Self {
        Cell {
            value,
            interval: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupCell {
    pub group: GroupKey,
    #[serde(flatten)]
    pub cell: Cell,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: String,
    pub groups: Vec<GroupCell>,
    pub average: Cell,
    pub pooled: Cell,
}

impl MetricRow {
    pub fn group(&self, group: GroupKey) -> Option<&Cell> {
        self.groups
            .iter()
            .find(|g| g.group == group)
            .map(|g| &g.cell)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupInfo {
    pub group: GroupKey,
    pub n: usize,
    pub n_h: usize,
    pub n_d: usize,
    pub priors: Priors,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PooledInfo {
    pub n: usize,
    pub n_h: usize,
    pub n_d: usize,
    pub priors: Priors,
}

/// Error rates at the Bayes threshold of the report's cost matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateRow {
    /// Group name or `pooled`.
    pub subset: String,
    pub threshold: f64,
    pub r_fp: Option<f64>,
    pub r_fn: Option<f64>,
    pub n_h: usize,
    pub n_d: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub cost: CostMatrix,
    pub groups: Vec<GroupInfo>,
    pub pooled: PooledInfo,
    pub rows: Vec<MetricRow>,
    pub rates: Vec<RateRow>,
}

impl MetricReport {
    pub fn row(&self, metric: MetricName) -> &MetricRow {
        let idx = MetricName::ALL.iter().position(|m| *m == metric).unwrap();
        &self.rows[idx]
    }

    pub fn rate(&self, subset: &str) -> Option<&RateRow> {
        self.rates.iter().find(|r| r.subset == subset)
    }

    /// Aligned plain-text table, one metric per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "costs: c_fp={} c_fn={}",
            self.cost.c_fp, self.cost.c_fn
        );
        let mut header = format!("{:<8}", "metric");
        for g in &self.groups {
            let _ = write!(header, "{:>9}", g.group.name());
        }
        let _ = write!(header, "{:>9}{:>9}", "avg", "pooled");
        out.push_str(header.trim_end());
        out.push('\n');

        let mut counts = format!("{:<8}", "count");
        for g in &self.groups {
            let _ = write!(counts, "{:>9}", g.n);
        }
        let _ = write!(counts, "{:>9}{:>9}", "-", self.pooled.n);
        out.push_str(&counts);
        out.push('\n');

        let mut prior = format!("{:<8}", "prior_h");
        for g in &self.groups {
            let _ = write!(prior, "{:>9.3}", g.priors.p_h);
        }
        let _ = write!(prior, "{:>9}{:>9.3}", "-", self.pooled.priors.p_h);
        out.push_str(&prior);
        out.push('\n');

        for row in &self.rows {
            let mut line = format!("{:<8}", row.metric);
            for c in &row.groups {
                line.push_str(&fmt_value(c.cell.value));
            }
            line.push_str(&fmt_value(row.average.value));
            line.push_str(&fmt_value(row.pooled.value));
            out.push_str(&line);
            out.push('\n');

            let cells = row
                .groups
                .iter()
                .map(|c| &c.cell)
                .chain([&row.average, &row.pooled]);
            if row.groups.iter().any(|c| c.cell.interval.is_some()) {
                let (mut lo, mut hi) = (format!("{:<8}", "  lo"), format!("{:<8}", "  hi"));
                for c in cells {
                    lo.push_str(&fmt_value(c.interval.map(|i| i.ci_low)));
                    hi.push_str(&fmt_value(c.interval.map(|i| i.ci_high)));
                }
                out.push_str(&lo);
                out.push('\n');
                out.push_str(&hi);
                out.push('\n');
            }
        }

        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<8}{:>9}{:>9}{:>9}",
            "rates", "thresh", "R_FP", "R_FN"
        );
        for r in &self.rates {
            let _ = writeln!(
                out,
                "{:<8}{:>9.3}{}{}",
                r.subset,
                r.threshold,
                fmt_value(r.r_fp),
                fmt_value(r.r_fn)
            );
        }
        out
    }
}

fn fmt_value(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:>9.3}"),
        None => format!("{:>9}", "undef"),
    }
}

/// All six metric values of one subset, in [`MetricName::ALL`] order.
pub(crate) fn metric_values(
    samples: &[ScoredSample],
    cost: CostMatrix,
) -> Result<[Option<f64>; 6]> {
    let priors = empirical_priors(samples)?;

    let acc_decisions = decide_all(samples, bayes_threshold(CostMatrix::unit()));
    let acc_metrics = standard_metrics(samples, &acc_decisions)?;

    let (uar, nber) = match CostMatrix::balanced(priors) {
        Ok(balanced) => {
            let decisions = decide_all(samples, bayes_threshold(balanced));
            let m = standard_metrics(samples, &decisions)?;
            (m.uar, m.nber)
        }
        Err(_) => (None, None),
    };

    let decisions = decide_all(samples, bayes_threshold(cost));
    let rates = confusion_rates(samples, &decisions)?;
    let nec = normalized_ec(expected_cost(&rates, priors, cost)?, priors, cost);

    let nxe = normalized_xe(cross_entropy(samples)?, priors);

    Ok([Some(acc_metrics.acc), uar, acc_metrics.nter, nber, nec, nxe])
}

/// One cell of the table: a canonical group, the unweighted group average,
/// or the pooled set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subset {
    Group(GroupKey),
    Average,
    Pooled,
}

impl std::fmt::Display for Subset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Subset::Group(g) => write!(f, "{g}"),
            Subset::Average => f.write_str("average"),
            Subset::Pooled => f.write_str("pooled"),
        }
    }
}

impl std::str::FromStr for Subset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" | "avg" => Ok(Subset::Average),
            "pooled" => Ok(Subset::Pooled),
            other => other.parse().map(Subset::Group).map_err(Error::Invalid),
        }
    }
}

/// Value of one metric on one cell. An average over a set that lacks a group
/// is undefined; an empty group is an error.
pub fn subset_metric(
    samples: &[ScoredSample],
    metric: MetricName,
    cost: CostMatrix,
    subset: Subset,
) -> Result<Option<f64>> {
    let m = MetricName::ALL.iter().position(|&x| x == metric).unwrap();
    match subset {
        Subset::Pooled => Ok(metric_values(samples, cost)?[m]),
        Subset::Group(g) => {
            let part: Vec<ScoredSample> =
                samples.iter().filter(|s| s.group() == g).cloned().collect();
            if part.is_empty() {
                return Err(Error::Degenerate(format!("group {g} has no samples")));
            }
            Ok(metric_values(&part, cost)?[m])
        }
        Subset::Average => match table_values(samples, cost) {
            Ok(t) => Ok(t[m * 8 + 6]),
            Err(Error::Degenerate(_)) => Ok(None),
            Err(e) => Err(e),
        },
    }
}

/// Metric values for each canonical group, then the unweighted group
/// average, then the pooled set: 6 x 8 values, metric-major.
fn table_values(samples: &[ScoredSample], cost: CostMatrix) -> Result<Vec<Option<f64>>> {
    let mut per_group = Vec::with_capacity(6);
    for g in GroupKey::ALL {
        let subset: Vec<ScoredSample> =
            samples.iter().filter(|s| s.group() == g).cloned().collect();
        if subset.is_empty() {
            return Err(Error::Degenerate(format!("group {g} has no samples")));
        }
        per_group.push(metric_values(&subset, cost)?);
    }
    let pooled = metric_values(samples, cost)?;
    let mut out = Vec::with_capacity(6 * 8);
    for m in 0..6 {
        let column: Vec<Option<f64>> = per_group.iter().map(|v| v[m]).collect();
        out.extend(&column);
        out.push(average(&column));
        out.push(pooled[m]);
    }
    Ok(out)
}

/// Arithmetic mean, undefined when any input is.
fn average(values: &[Option<f64>]) -> Option<f64> {
    let sum = values.iter().copied().sum::<Option<f64>>()?;
    Some(sum / values.len() as f64)
}

fn counts(samples: &[ScoredSample]) -> Result<(usize, usize, Priors)> {
    let priors = empirical_priors(samples)?;
    let n_d = samples.iter().filter(|s| s.label().is_disordered()).count();
    Ok((samples.len() - n_d, n_d, priors))
}

fn rate_row(subset: String, samples: &[ScoredSample], cost: CostMatrix) -> Result<RateRow> {
    let threshold = bayes_threshold(cost);
    let rates = confusion_rates(samples, &decide_all(samples, threshold))?;
    Ok(RateRow {
        subset,
        threshold,
        r_fp: rates.r_fp(),
        r_fn: rates.r_fn(),
        n_h: rates.n_h,
        n_d: rates.n_d,
    })
}

/// Builds the full table from the posteriors stored in `eval`. Every
/// normalizer and data-dependent threshold uses the priors of the subset
/// being scored.
pub fn summarize(eval: &EvalSet, cost: CostMatrix) -> Result<MetricReport> {
    let values = table_values(eval, cost)?;
    let cells: Vec<Cell> = values.into_iter().map(Cell::plain).collect();
    assemble(eval, cost, cells)
}

/// Like [`summarize`], with a speaker-level bootstrap interval on every cell.
/// Group cells resample speakers within the group; average and pooled cells
/// resample speakers of the whole set.
pub fn summarize_with_bootstrap(
    eval: &EvalSet,
    cost: CostMatrix,
    settings: &BootstrapSettings,
) -> Result<MetricReport> {
    let point = table_values(eval, cost)?;
    let mut cells: Vec<Cell> = point.iter().copied().map(Cell::plain).collect();

    let attach = |cells: &mut Vec<Cell>, idx: usize, est: &BootstrapEstimate| {
        cells[idx].interval = Some(Interval {
            ci_low: est.ci_low,
            ci_high: est.ci_high,
            b_effective: est.b_effective,
        });
    };

    for (gi, g) in GroupKey::ALL.iter().enumerate() {
        let subset = eval.group(*g);
        let estimates = bootstrap_many(&subset, 6, settings, |s| {
            Ok(metric_values(s, cost)?.to_vec())
        })?;
        for (m, est) in estimates.iter().enumerate() {
            if let Some(est) = est {
                attach(&mut cells, m * 8 + gi, est);
            }
        }
    }

    let estimates = bootstrap_many(eval, 12, settings, |s| {
        // Resamples may drop a whole group; the average is then undefined.
        let table = match table_values(s, cost) {
            Ok(t) => t,
            Err(Error::Degenerate(_)) => {
                let pooled = metric_values(s, cost)?;
                let mut t = vec![None; 48];
                for m in 0..6 {
                    t[m * 8 + 7] = pooled[m];
                }
                t
            }
            Err(e) => return Err(e),
        };
        Ok((0..6)
            .flat_map(|m| [table[m * 8 + 6], table[m * 8 + 7]])
            .collect())
    })?;
    for m in 0..6 {
        for (k, offset) in [6, 7].into_iter().enumerate() {
            if let Some(est) = &estimates[m * 2 + k] {
                attach(&mut cells, m * 8 + offset, est);
            }
        }
    }

    assemble(eval, cost, cells)
}

fn assemble(eval: &EvalSet, cost: CostMatrix, cells: Vec<Cell>) -> Result<MetricReport> {
    let mut groups = Vec::with_capacity(6);
    let mut rates = Vec::with_capacity(7);
    for g in GroupKey::ALL {
        let subset = eval.group(g);
        let (n_h, n_d, priors) = counts(&subset)?;
        groups.push(GroupInfo {
            group: g,
            n: subset.len(),
            n_h,
            n_d,
            priors,
        });
        rates.push(rate_row(g.name().to_string(), &subset, cost)?);
    }
    let (n_h, n_d, priors) = counts(eval)?;
    rates.push(rate_row("pooled".to_string(), eval, cost)?);

    let rows = MetricName::ALL
        .iter()
        .enumerate()
        .map(|(m, name)| MetricRow {
            metric: name.label(cost),
            groups: GroupKey::ALL
                .iter()
                .enumerate()
                .map(|(gi, &group)| GroupCell {
                    group,
                    cell: cells[m * 8 + gi],
                })
                .collect(),
            average: cells[m * 8 + 6],
            pooled: cells[m * 8 + 7],
        })
        .collect();

    Ok(MetricReport {
        cost,
        groups,
        pooled: PooledInfo {
            n: eval.len(),
            n_h,
            n_d,
            priors,
        },
        rows,
        rates,
    })
}
