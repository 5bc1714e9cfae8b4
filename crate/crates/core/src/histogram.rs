//! Per-group, per-class densities of log-odds or LLRs.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data_model::{empirical_priors, filter_severity, ClassLabel, EvalSet, GroupKey};
use crate::error::Result;
use crate::metrics::{llr, log_odds};

pub const BINS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    LogOdds,
    /// Log-odds minus the group's prior log-odds.
    Llr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSeries {
    pub group: GroupKey,
    pub class: ClassLabel,
    pub count: usize,
    /// `BINS` densities; each nonempty series integrates to 1.
    pub densities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramTable {
    /// Bins span `[-half_range, half_range]`.
    pub half_range: f64,
    pub series: Vec<HistogramSeries>,
}

impl HistogramTable {
    pub fn bin_width(&self) -> f64 {
        2.0 * self.half_range / BINS as f64
    }

    pub fn bin_edges(&self, bin: usize) -> (f64, f64) {
        let edge = |b: usize| self.half_range * (2.0 * b as f64 / BINS as f64 - 1.0);
        (edge(bin), edge(bin + 1))
    }

    pub fn series(&self, group: GroupKey, class: ClassLabel) -> Option<&HistogramSeries> {
        self.series
            .iter()
            .find(|s| s.group == group && s.class == class)
    }

    /// `group,class,bin_low,bin_high,density`, one line per bin.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["group", "class", "bin_low", "bin_high", "density"])?;
        for s in &self.series {
            for (bin, d) in s.densities.iter().enumerate() {
                let (low, high) = self.bin_edges(bin);
                w.write_record([
                    s.group.name(),
                    s.class.as_str(),
                    &low.to_string(),
                    &high.to_string(),
                    &d.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Builds one series per (group, class) over 50 bins on `[-L, L]`, with `L`
/// the largest absolute transformed value rounded up to an integer (at least
/// 1). LLRs use the priors of the unfiltered group. `min_g` restricts the
/// disordered series to annotated grades of at least `min_g`.
///
/// Returns the table and a warning per empty series.
pub fn histogram_table(
    eval: &EvalSet,
    transform: Transform,
    min_g: Option<u8>,
) -> Result<(HistogramTable, Vec<String>)> {
    let mut raw: Vec<(GroupKey, ClassLabel, Vec<f64>)> = Vec::new();
    for g in GroupKey::ALL {
        let full = eval.group(g);
        let shown = match min_g {
            Some(m) => filter_severity(&full, m),
            None => full.clone(),
        };
        let priors = match transform {
            Transform::Llr if !full.is_empty() => Some(empirical_priors(&full)?),
            _ => None,
        };
        for class in [ClassLabel::Healthy, ClassLabel::Disordered] {
            let values = shown
                .iter()
                .filter(|s| s.label() == class)
                .map(|s| match priors {
                    Some(p) => llr(s.posterior(), p),
                    None => Ok(log_odds(s.posterior())),
                })
                .collect::<Result<Vec<f64>>>()?;
            raw.push((g, class, values));
        }
    }

    let max_abs = raw
        .iter()
        .flat_map(|(_, _, v)| v.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let half_range = max_abs.ceil().max(1.0);
    let width = 2.0 * half_range / BINS as f64;

    let mut warnings = Vec::new();
    let series = raw
        .into_iter()
        .map(|(group, class, values)| {
            let mut counts = vec![0usize; BINS];
            for v in &values {
                let bin = ((v + half_range) / (2.0 * half_range) * BINS as f64).floor() as usize;
                counts[bin.min(BINS - 1)] += 1;
            }
            if values.is_empty() {
                warnings.push(format!("empty series: group {group}, class {class}"));
            }
            let n = values.len().max(1) as f64;
            HistogramSeries {
                group,
                class,
                count: values.len(),
                densities: counts.iter().map(|&c| c as f64 / (n * width)).collect(),
            }
        })
        .collect();
    Ok((HistogramTable { half_range, series }, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{generate, reference_eval_set, reference_groups, SyntheticSpec};

    fn area(table: &HistogramTable, s: &HistogramSeries) -> f64 {
        s.densities.iter().sum::<f64>() * table.bin_width()
    }

    #[test]
    fn series_integrate_to_one() {
        let eval = generate(&SyntheticSpec::reference(
            2.0,
            [0.0, 1.0, -1.0, 2.0, 0.5, -2.0],
            5,
        ))
        .unwrap();
        let (table, warnings) = histogram_table(&eval, Transform::LogOdds, None).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(table.series.len(), 12);
        for s in &table.series {
            assert!((area(&table, s) - 1.0).abs() < 1e-9);
        }
        assert_eq!(table.half_range.fract(), 0.0);
    }

    #[test]
    fn prior_system_llr_is_a_spike_at_zero() {
        let t = reference_groups();
        let eval = reference_eval_set(|g| t.row(g).priors().p_d);
        let (table, _) = histogram_table(&eval, Transform::Llr, None).unwrap();
        assert_eq!(table.half_range, 1.0);
        for s in &table.series {
            let nonzero: Vec<usize> = (0..BINS).filter(|&b| s.densities[b] > 0.0).collect();
            assert_eq!(nonzero.len(), 1);
            let (lo, hi) = table.bin_edges(nonzero[0]);
            assert!(lo <= 0.0 && 0.0 <= hi, "{lo} {hi}");
        }
    }

    #[test]
    fn severity_band_restricts_disordered() {
        let eval = reference_eval_set(|_| 0.7);
        let (table, _) = histogram_table(&eval, Transform::LogOdds, Some(2)).unwrap();
        let t = reference_groups();
        for row in &t.rows {
            let d = table.series(row.group, ClassLabel::Disordered).unwrap();
            assert_eq!(d.count, row.grade_counts[2] + row.grade_counts[3]);
            let h = table.series(row.group, ClassLabel::Healthy).unwrap();
            assert_eq!(h.count, row.n_h);
        }
    }

    #[test]
    fn empty_series_warns() {
        let eval = reference_eval_set(|_| 0.7).group(GroupKey::AM);
        let (table, warnings) = histogram_table(&eval, Transform::LogOdds, None).unwrap();
        assert_eq!(warnings.len(), 10);
        let empty = table.series(GroupKey::YF, ClassLabel::Healthy).unwrap();
        assert!(empty.densities.iter().all(|&d| d == 0.0));
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("group,class,bin_low,bin_high,density\n"));
        assert_eq!(text.lines().count(), 1 + 12 * BINS);
    }
}
