//! Cost-based decision metrics and cross-entropy for binary posteriors.
//!
//! The disordered class is positive. Every log is natural; posteriors are
//! clamped to `[EPS, 1 - EPS]` before any log is taken.

mod report;

pub use report::{
    subset_metric, summarize, summarize_with_bootstrap, Cell, GroupInfo, Interval, MetricName,
    MetricReport, MetricRow, PooledInfo, RateRow, Subset,
};

use serde::{Deserialize, Serialize};

use crate::data_model::{ClassLabel, Priors, ScoredSample};
use crate::error::{Error, Result};

/// Clamp applied to posteriors before taking logs.
pub const EPS: f64 = 1e-6;

pub fn clamp_posterior(p: f64) -> f64 {
    p.clamp(EPS, 1.0 - EPS)
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(p / (1 - p))` of the clamped posterior.
pub fn log_odds(p: f64) -> f64 {
    let p = clamp_posterior(p);
    (p / (1.0 - p)).ln()
}

/// Posterior log-odds minus prior log-odds of the disordered class.
pub fn llr(p: f64, priors: Priors) -> Result<f64> {
    if priors.is_degenerate() {
        return Err(Error::Degenerate(format!(
            "llr needs both priors positive, got ({}, {})",
            priors.p_h, priors.p_d
        )));
    }
    Ok(log_odds(p) - (priors.p_d / priors.p_h).ln())
}

/// Costs of the two errors; correct decisions cost nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    /// Deciding disordered for a healthy sample.
    pub c_fp: f64,
    /// Deciding healthy for a disordered sample.
    pub c_fn: f64,
}

impl CostMatrix {
    pub fn new(c_fp: f64, c_fn: f64) -> Result<Self> {
        if !(c_fp > 0.0 && c_fn > 0.0 && c_fp.is_finite() && c_fn.is_finite()) {
            return Err(Error::Invalid(format!(
                "costs must be positive and finite, got c_fp={c_fp}, c_fn={c_fn}"
            )));
        }
        Ok(CostMatrix { c_fp, c_fn })
    }

    pub const fn unit() -> Self {
        CostMatrix {
            c_fp: 1.0,
            c_fn: 1.0,
        }
    }

    /// False negatives three times as costly as false positives.
    pub const fn ec3() -> Self {
        CostMatrix {
            c_fp: 1.0,
            c_fn: 3.0,
        }
    }

    /// Costs under which the expected cost is the balanced error rate.
    pub fn balanced(priors: Priors) -> Result<Self> {
        if priors.is_degenerate() {
            return Err(Error::Degenerate(
                "balanced costs need both classes present".to_string(),
            ));
        }
        Ok(CostMatrix {
            c_fp: 1.0 / (2.0 * priors.p_h),
            c_fn: 1.0 / (2.0 * priors.p_d),
        })
    }
}

/// Posterior threshold of the Bayes decision for `cost`.
pub fn bayes_threshold(cost: CostMatrix) -> f64 {
    cost.c_fp / (cost.c_fp + cost.c_fn)
}

/// Disordered iff `p >= threshold`.
pub fn decide(p: f64, threshold: f64) -> ClassLabel {
    if p >= threshold {
        ClassLabel::Disordered
    } else {
        ClassLabel::Healthy
    }
}

pub fn decide_all(samples: &[ScoredSample], threshold: f64) -> Vec<ClassLabel> {
    samples
        .iter()
        .map(|s| decide(s.posterior(), threshold))
        .collect()
}

/// Error counts per true class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionRates {
    pub false_positives: usize,
    pub false_negatives: usize,
    pub n_h: usize,
    pub n_d: usize,
}

impl ConfusionRates {
    /// `None` when there are no healthy samples.
    pub fn r_fp(&self) -> Option<f64> {
        (self.n_h > 0).then(|| self.false_positives as f64 / self.n_h as f64)
    }

    /// `None` when there are no disordered samples.
    pub fn r_fn(&self) -> Option<f64> {
        (self.n_d > 0).then(|| self.false_negatives as f64 / self.n_d as f64)
    }
}

pub fn confusion_rates(
    samples: &[ScoredSample],
    decisions: &[ClassLabel],
) -> Result<ConfusionRates> {
    check_aligned(samples, decisions.len())?;
    let mut rates = ConfusionRates {
        false_positives: 0,
        false_negatives: 0,
        n_h: 0,
        n_d: 0,
    };
    for (s, &d) in samples.iter().zip(decisions) {
        match s.label() {
            ClassLabel::Healthy => {
                rates.n_h += 1;
                rates.false_positives += usize::from(d == ClassLabel::Disordered);
            }
            ClassLabel::Disordered => {
                rates.n_d += 1;
                rates.false_negatives += usize::from(d == ClassLabel::Healthy);
            }
        }
    }
    Ok(rates)
}

fn check_aligned(samples: &[ScoredSample], n: usize) -> Result<()> {
    if samples.len() != n {
        return Err(Error::Invalid(format!(
            "{n} values for {} samples",
            samples.len()
        )));
    }
    Ok(())
}

/// `c_fn * p_d * r_fn + c_fp * p_h * r_fp`. A class with zero prior
/// contributes nothing even when its rate is undefined.
pub fn expected_cost(rates: &ConfusionRates, priors: Priors, cost: CostMatrix) -> Result<f64> {
    let term = |prior: f64, rate: Option<f64>, c: f64, what: &str| -> Result<f64> {
        if prior == 0.0 {
            return Ok(0.0);
        }
        rate.map(|r| c * prior * r).ok_or_else(|| {
            Error::Degenerate(format!(
                "{what} rate undefined but its class prior is {prior}"
            ))
        })
    };
    let miss = term(priors.p_d, rates.r_fn(), cost.c_fn, "false negative")?;
    let false_alarm = term(priors.p_h, rates.r_fp(), cost.c_fp, "false positive")?;
    Ok(miss + false_alarm)
}

/// Expected cost of the best input-blind system.
pub fn naive_ec(priors: Priors, cost: CostMatrix) -> f64 {
    (cost.c_fn * priors.p_d).min(cost.c_fp * priors.p_h)
}

/// `ec / naive_ec`, or `None` when the naive system is already perfect.
pub fn normalized_ec(ec: f64, priors: Priors, cost: CostMatrix) -> Option<f64> {
    let naive = naive_ec(priors, cost);
    (naive > 0.0).then(|| ec / naive)
}

/// Decision metrics of one decision set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardMetrics {
    pub acc: f64,
    pub ter: f64,
    /// Undefined on single-class sets.
    pub nter: Option<f64>,
    pub uar: Option<f64>,
    pub ber: Option<f64>,
    pub nber: Option<f64>,
}

pub fn standard_metrics(
    samples: &[ScoredSample],
    decisions: &[ClassLabel],
) -> Result<StandardMetrics> {
    check_aligned(samples, decisions.len())?;
    if samples.is_empty() {
        return Err(Error::Degenerate("metrics of an empty set".to_string()));
    }
    let correct = samples
        .iter()
        .zip(decisions)
        .filter(|(s, &d)| s.label() == d)
        .count();
    let acc = correct as f64 / samples.len() as f64;
    let ter = 1.0 - acc;
    let priors = crate::data_model::empirical_priors(samples)?;
    let nter = normalized_ec(ter, priors, CostMatrix::unit());

    let (uar, ber, nber) = match CostMatrix::balanced(priors) {
        Ok(cost) => {
            let rates = confusion_rates(samples, decisions)?;
            let ber = expected_cost(&rates, priors, cost)?;
            (Some(1.0 - ber), Some(ber), Some(2.0 * ber))
        }
        Err(_) => (None, None, None),
    };
    Ok(StandardMetrics {
        acc,
        ter,
        nter,
        uar,
        ber,
        nber,
    })
}

/// Mean negative log of the (clamped) posterior of each true class.
pub fn cross_entropy_of(posteriors: &[f64], labels: &[ClassLabel]) -> Result<f64> {
    if posteriors.len() != labels.len() {
        return Err(Error::Invalid(format!(
            "{} posteriors for {} labels",
            posteriors.len(),
            labels.len()
        )));
    }
    if posteriors.is_empty() {
        return Err(Error::Degenerate(
            "cross-entropy of an empty set".to_string(),
        ));
    }
    let total: f64 = posteriors
        .iter()
        .zip(labels)
        .map(|(&p, &label)| {
            let p = clamp_posterior(p);
            match label {
                ClassLabel::Disordered => -p.ln(),
                ClassLabel::Healthy => -(1.0 - p).ln(),
            }
        })
        .sum();
    Ok(total / posteriors.len() as f64)
}

pub fn cross_entropy(samples: &[ScoredSample]) -> Result<f64> {
    let posteriors: Vec<f64> = samples.iter().map(|s| s.posterior()).collect();
    let labels: Vec<ClassLabel> = samples.iter().map(|s| s.label()).collect();
    cross_entropy_of(&posteriors, &labels)
}

/// Cross-entropy of the system that always outputs the priors.
pub fn prior_entropy(priors: Priors) -> f64 {
    [priors.p_h, priors.p_d]
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}

/// `xe / prior_entropy`, or `None` for a single-class prior.
pub fn normalized_xe(xe: f64, priors: Priors) -> Option<f64> {
    let h = prior_entropy(priors);
    (h > 0.0).then(|| xe / h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::{EvalSet, Gender};
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn set(labels: &[ClassLabel], posteriors: &[f64]) -> EvalSet {
        let samples = labels
            .iter()
            .zip(posteriors)
            .enumerate()
            .map(|(i, (&l, &p))| {
                ScoredSample::new(format!("s{i}"), format!("p{i}"), Gender::M, 40, p, l, None)
                    .unwrap()
            })
            .collect();
        EvalSet::new(samples).unwrap()
    }

    use ClassLabel::{Disordered as D, Healthy as H};

    #[test]
    fn log_odds_values() {
        assert_eq!(log_odds(0.5), 0.0);
        assert!(close(log_odds(0.8), 4f64.ln(), 1e-12));
        assert!(close(log_odds(1.0), 13.8155, 1e-4));
        assert!(close(log_odds(0.0), -13.8155, 1e-4));
    }

    #[test]
    fn llr_values() {
        let even = Priors::new(0.5, 0.5).unwrap();
        assert!(close(llr(0.8, even).unwrap(), 1.3863, 1e-4));
        let yf = Priors::from_counts(318, 102).unwrap();
        assert!(close(llr(yf.p_d, yf).unwrap(), 0.0, 1e-12));
        // 0.9 against a disordered prior of 102/420; 3.333 with priors
        // rounded to 0.243/0.757.
        assert!(close(llr(0.9, yf).unwrap(), 2.1972 + 1.1371, 1e-4));
        assert!(close(llr(0.9, yf).unwrap(), 3.333, 2e-3));
        assert!(llr(0.5, Priors::new(0.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn thresholds() {
        assert_eq!(bayes_threshold(CostMatrix::unit()), 0.5);
        assert_eq!(bayes_threshold(CostMatrix::ec3()), 0.25);
        let pooled = Priors::from_counts(633, 1341).unwrap();
        let t = bayes_threshold(CostMatrix::balanced(pooled).unwrap());
        assert!(close(t, 0.6793, 1e-4));
    }

    #[test]
    fn decisions_tie_to_positive() {
        assert_eq!(decide(0.25, 0.25), D);
        assert_eq!(decide(0.24, 0.25), H);
        assert_eq!(decide(0.9, 0.5), D);
    }

    #[test]
    fn rates_examples() {
        let s = set(&[H, H, D, D, D, D], &[0.5; 6]);
        let r = confusion_rates(&s, &[H, H, D, D, D, D]).unwrap();
        assert_eq!((r.r_fp(), r.r_fn()), (Some(0.0), Some(0.0)));
        let r = confusion_rates(&s, &[D; 6]).unwrap();
        assert_eq!((r.r_fp(), r.r_fn()), (Some(1.0), Some(0.0)));
        let r = confusion_rates(&s, &[D, H, H, D, D, D]).unwrap();
        assert_eq!((r.r_fp(), r.r_fn()), (Some(0.5), Some(0.25)));

        let only_d = set(&[D, D], &[0.5; 2]);
        let r = confusion_rates(&only_d, &[D, H]).unwrap();
        assert_eq!(r.r_fp(), None);
        assert_eq!(r.r_fn(), Some(0.5));
        assert!(confusion_rates(&only_d, &[D]).is_err());
    }

    #[test]
    fn expected_cost_examples() {
        let priors = Priors::new(1.0 / 3.0, 2.0 / 3.0).unwrap();
        let rates = ConfusionRates {
            false_positives: 1,
            false_negatives: 1,
            n_h: 2,
            n_d: 4,
        };
        let perfect = ConfusionRates {
            false_positives: 0,
            false_negatives: 0,
            ..rates
        };
        assert_eq!(
            expected_cost(&perfect, priors, CostMatrix::unit()).unwrap(),
            0.0
        );
        // 2 errors out of 6
        assert!(close(
            expected_cost(&rates, priors, CostMatrix::unit()).unwrap(),
            1.0 / 3.0,
            1e-12
        ));
        let c = CostMatrix::new(1.0, 3.0).unwrap();
        assert!(close(
            expected_cost(&rates, priors, c).unwrap(),
            0.6667,
            1e-4
        ));

        let missing = ConfusionRates {
            n_h: 0,
            false_positives: 0,
            ..rates
        };
        assert!(expected_cost(&missing, priors, c).is_err());
    }

    #[test]
    fn naive_and_normalized() {
        let pooled = Priors::from_counts(633, 1341).unwrap();
        assert!(close(naive_ec(pooled, CostMatrix::ec3()), 0.3207, 1e-4));
        let any = Priors::new(0.2, 0.8).unwrap();
        assert!(close(
            naive_ec(any, CostMatrix::balanced(any).unwrap()),
            0.5,
            1e-12
        ));
        let af = Priors::new(0.11, 0.89).unwrap();
        assert!(close(naive_ec(af, CostMatrix::unit()), 0.11, 1e-12));

        assert_eq!(normalized_ec(0.11, af, CostMatrix::unit()), Some(1.0));
        assert_eq!(normalized_ec(0.0, af, CostMatrix::unit()), Some(0.0));
        let af_counts = Priors::from_counts(44, 358).unwrap();
        let nter = normalized_ec(0.19, af_counts, CostMatrix::unit()).unwrap();
        assert!(close(nter, 1.74, 0.01));
        let single = Priors::new(0.0, 1.0).unwrap();
        assert_eq!(normalized_ec(0.0, single, CostMatrix::unit()), None);
    }

    #[test]
    fn cost_validation() {
        assert!(CostMatrix::new(0.0, 1.0).is_err());
        assert!(CostMatrix::new(1.0, f64::INFINITY).is_err());
        assert!(CostMatrix::new(-1.0, 1.0).is_err());
    }

    #[test]
    fn standard_metrics_perfect() {
        let s = set(&[H, D, D], &[0.1, 0.9, 0.8]);
        let m = standard_metrics(&s, &[H, D, D]).unwrap();
        assert_eq!(m.acc, 1.0);
        assert_eq!(m.uar, Some(1.0));
        assert_eq!(m.nter, Some(0.0));
        assert_eq!(m.nber, Some(0.0));
    }

    #[test]
    fn standard_metrics_single_class() {
        let s = set(&[D, D], &[0.9, 0.1]);
        let m = standard_metrics(&s, &[D, H]).unwrap();
        assert_eq!(m.acc, 0.5);
        assert_eq!(m.uar, None);
        assert_eq!(m.nter, None);
    }

    #[test]
    fn cross_entropy_examples() {
        let s = set(&[H, D, D, H], &[0.5; 4]);
        assert!(close(cross_entropy(&s).unwrap(), 2f64.ln(), 1e-15));
        let s = set(&[H, D], &[0.0, 1.0]);
        assert!(close(cross_entropy(&s).unwrap(), 1e-6, 1e-9));
        let pooled = Priors::from_counts(633, 1341).unwrap();
        assert!(close(prior_entropy(pooled), 0.6274, 1e-4));
        assert!(cross_entropy(&[]).is_err());
    }

    #[test]
    fn normalized_xe_examples() {
        let pooled = Priors::from_counts(633, 1341).unwrap();
        let h = prior_entropy(pooled);
        assert!(close(normalized_xe(h, pooled).unwrap(), 1.0, 1e-15));
        assert_eq!(normalized_xe(0.0, pooled), Some(0.0));
        assert!(close(normalized_xe(0.65 * h, pooled).unwrap(), 0.65, 1e-12));
        assert_eq!(normalized_xe(0.3, Priors::new(1.0, 0.0).unwrap()), None);
    }

    fn labels_and_decisions(max: usize) -> impl Strategy<Value = Vec<(bool, bool)>> {
        prop::collection::vec((any::<bool>(), any::<bool>()), 1..=max)
    }

    fn split(pairs: &[(bool, bool)]) -> (EvalSet, Vec<ClassLabel>) {
        let label = |b: bool| if b { D } else { H };
        let labels: Vec<_> = pairs.iter().map(|p| label(p.0)).collect();
        let decisions = pairs.iter().map(|p| label(p.1)).collect();
        (set(&labels, &vec![0.5; labels.len()]), decisions)
    }

    /// Every label/decision pattern up to 8 samples.
    #[test]
    fn unit_cost_ec_is_total_error_exhaustive() {
        for n in 1..=8usize {
            for labels in 0u32..(1 << n) {
                for decisions in 0u32..(1 << n) {
                    let pairs: Vec<(bool, bool)> = (0..n)
                        .map(|i| (labels >> i & 1 == 1, decisions >> i & 1 == 1))
                        .collect();
                    let (s, d) = split(&pairs);
                    let m = standard_metrics(&s, &d).unwrap();
                    let priors = crate::data_model::empirical_priors(&s).unwrap();
                    let rates = confusion_rates(&s, &d).unwrap();
                    let ec = expected_cost(&rates, priors, CostMatrix::unit()).unwrap();
                    let errors = pairs.iter().filter(|p| p.0 != p.1).count();
                    assert!(close(ec, errors as f64 / n as f64, 1e-12));
                    assert!(close(ec, m.ter, 1e-12));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn decision_identities(pairs in labels_and_decisions(40)) {
            let (s, d) = split(&pairs);
            let m = standard_metrics(&s, &d).unwrap();
            prop_assert!(close(m.ter, 1.0 - m.acc, 1e-12));
            if let (Some(uar), Some(ber), Some(nber)) = (m.uar, m.ber, m.nber) {
                prop_assert!(close(uar, 1.0 - ber, 1e-12));
                prop_assert!(close(nber, 2.0 * ber, 1e-12));
            }
        }

        #[test]
        fn threshold_monotone(a in 0.01f64..100.0, b in 0.01f64..100.0, bump in 0.01f64..10.0) {
            let c = CostMatrix::new(a, b).unwrap();
            let t = bayes_threshold(c);
            prop_assert!(t > 0.0 && t < 1.0);
            prop_assert!(bayes_threshold(CostMatrix::new(a + bump, b).unwrap()) > t);
            prop_assert!(bayes_threshold(CostMatrix::new(a, b + bump).unwrap()) < t);
        }

        #[test]
        fn naive_rule_normalizes_to_one(p_h in 0.001f64..0.999, c_fp in 0.1f64..10.0, c_fn in 0.1f64..10.0) {
            let priors = Priors::new(p_h, 1.0 - p_h).unwrap();
            let cost = CostMatrix::new(c_fp, c_fn).unwrap();
            // Always-healthy misses every disordered sample; always-disordered
            // flags every healthy one.
            let always_h = ConfusionRates { false_positives: 0, false_negatives: 10, n_h: 10, n_d: 10 };
            let always_d = ConfusionRates { false_positives: 10, false_negatives: 0, n_h: 10, n_d: 10 };
            let best = expected_cost(&always_h, priors, cost).unwrap()
                .min(expected_cost(&always_d, priors, cost).unwrap());
            prop_assert!(close(normalized_ec(best, priors, cost).unwrap(), 1.0, 1e-12));
        }

        #[test]
        fn llr_offset_is_constant(p1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0, p_h in 0.01f64..0.99) {
            let priors = Priors::new(p_h, 1.0 - p_h).unwrap();
            let o1 = llr(p1, priors).unwrap() - log_odds(p1);
            let o2 = llr(p2, priors).unwrap() - log_odds(p2);
            prop_assert!(close(o1, o2, 1e-12));
        }

        #[test]
        fn cross_entropy_weighted_under_concatenation(
            a in prop::collection::vec((any::<bool>(), 0.0f64..=1.0), 1..30),
            b in prop::collection::vec((any::<bool>(), 0.0f64..=1.0), 1..30),
        ) {
            let lab = |v: &[(bool, f64)]| v.iter().map(|x| if x.0 { D } else { H }).collect::<Vec<_>>();
            let post = |v: &[(bool, f64)]| v.iter().map(|x| x.1).collect::<Vec<_>>();
            let xa = cross_entropy_of(&post(&a), &lab(&a)).unwrap();
            let xb = cross_entropy_of(&post(&b), &lab(&b)).unwrap();
            let ab: Vec<_> = a.iter().chain(&b).copied().collect();
            let xab = cross_entropy_of(&post(&ab), &lab(&ab)).unwrap();
            let (na, nb) = (a.len() as f64, b.len() as f64);
            prop_assert!(close(xab, (na * xa + nb * xb) / (na + nb), 1e-9));

            let mut rev = ab.clone();
            rev.reverse();
            let xrev = cross_entropy_of(&post(&rev), &lab(&rev)).unwrap();
            prop_assert!(close(xab, xrev, 1e-12));
        }
    }
}
