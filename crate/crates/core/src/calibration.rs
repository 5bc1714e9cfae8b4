//! Posterior calibration.
//!
//! The affine (Platt) calibrator maps the log-odds `lo` of an input posterior
//! to `sigmoid(a * lo + b)`, with `(a, b)` minimizing cross-entropy on the
//! training data. Pool Adjacent Violators gives the cross-entropy optimal
//! monotone map; it is only used to measure calibration loss, never inside
//! the cross-validated pipelines.

use serde::{Deserialize, Serialize};

use crate::data_model::{assign_folds, ClassLabel, EvalSet, FoldAssignment, GroupKey};
use crate::error::{Error, Result};
use crate::metrics::{cross_entropy_of, log_odds, sigmoid};

/// Stop once every gradient component is this small.
pub const GRADIENT_TOLERANCE: f64 = 1e-9;
pub const MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineCalibrator {
    pub a: f64,
    pub b: f64,
}

impl AffineCalibrator {
    pub const IDENTITY: AffineCalibrator = AffineCalibrator { a: 1.0, b: 0.0 };

    pub fn apply(&self, log_odds: f64) -> f64 {
        sigmoid(self.a * log_odds + self.b)
    }

    /// A negative scale reverses the ranking of the input scores.
    pub fn is_inverted(&self) -> bool {
        self.a < 0.0
    }
}

pub fn apply_affine(cal: &AffineCalibrator, log_odds: f64) -> f64 {
    cal.apply(log_odds)
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Mean cross-entropy of `sigmoid(a * lo + b)` against the labels, without
/// clamping.
pub fn affine_objective(cal: &AffineCalibrator, log_odds: &[f64], labels: &[ClassLabel]) -> f64 {
    let total: f64 = log_odds
        .iter()
        .zip(labels)
        .map(|(&x, &label)| {
            let z = cal.a * x + cal.b;
            match label {
                ClassLabel::Disordered => softplus(-z),
                ClassLabel::Healthy => softplus(z),
            }
        })
        .sum();
    total / log_odds.len() as f64
}

fn gradient_hessian(
    cal: &AffineCalibrator,
    log_odds: &[f64],
    labels: &[ClassLabel],
) -> ([f64; 2], [f64; 3]) {
    let (mut ga, mut gb) = (0.0, 0.0);
    let (mut haa, mut hab, mut hbb) = (0.0, 0.0, 0.0);
    for (&x, &label) in log_odds.iter().zip(labels) {
        let p = sigmoid(cal.a * x + cal.b);
        let y = if label.is_disordered() { 1.0 } else { 0.0 };
        let r = p - y;
        let w = p * (1.0 - p);
        ga += r * x;
        gb += r;
        haa += w * x * x;
        hab += w * x;
        hbb += w;
    }
    let n = log_odds.len() as f64;
    ([ga / n, gb / n], [haa / n, hab / n, hbb / n])
}

fn check_training(log_odds: &[f64], labels: &[ClassLabel]) -> Result<()> {
    if log_odds.len() != labels.len() {
        return Err(Error::Invalid(format!(
            "{} scores for {} labels",
            log_odds.len(),
            labels.len()
        )));
    }
    if log_odds.iter().any(|x| !x.is_finite()) {
        return Err(Error::Invalid("non-finite score".to_string()));
    }
    Ok(())
}

/// Maximum-likelihood affine calibration by damped Newton iterations.
///
/// Each step solves `(H + lambda I) d = -g` and backtracks until the
/// objective decreases. `lambda` grows when the Hessian is singular or a step
/// fails, which also covers constant scores, where `a` is left at its start.
pub fn fit_affine(log_odds: &[f64], labels: &[ClassLabel]) -> Result<AffineCalibrator> {
    check_training(log_odds, labels)?;
    let n_d = labels.iter().filter(|l| l.is_disordered()).count();
    if log_odds.len() < 2 || n_d == 0 || n_d == labels.len() {
        return Err(Error::Degenerate(
            "affine calibration needs both classes".to_string(),
        ));
    }

    let mut cal = AffineCalibrator::IDENTITY;
    let mut objective = affine_objective(&cal, log_odds, labels);
    let mut lambda = 0.0f64;

    for _ in 0..MAX_ITERATIONS {
        let (g, [haa, hab, hbb]) = gradient_hessian(&cal, log_odds, labels);
        if g[0].abs().max(g[1].abs()) <= GRADIENT_TOLERANCE {
            break;
        }

        let scale = haa + hbb;
        let mut stepped = false;
        while lambda <= 1e12 * (1.0 + scale) {
            let (m00, m11) = (haa + lambda, hbb + lambda);
            let det = m00 * m11 - hab * hab;
            if det <= 1e-14 * (1.0 + scale * scale) {
                lambda = (lambda * 10.0).max(1e-10 * (1.0 + scale));
                continue;
            }
            let da = -(m11 * g[0] - hab * g[1]) / det;
            let db = -(m00 * g[1] - hab * g[0]) / det;
            let slope = g[0] * da + g[1] * db;

            let mut t = 1.0;
            for _ in 0..60 {
                let trial = AffineCalibrator {
                    a: cal.a + t * da,
                    b: cal.b + t * db,
                };
                let value = affine_objective(&trial, log_odds, labels);
                if value <= objective + 1e-4 * t * slope {
                    cal = trial;
                    objective = value;
                    stepped = true;
                    break;
                }
                t *= 0.5;
            }
            if stepped {
                lambda *= 0.1;
                if lambda < 1e-12 {
                    lambda = 0.0;
                }
                break;
            }
            lambda = (lambda * 10.0).max(1e-10 * (1.0 + scale));
        }
        if !stepped {
            // No descent direction left at machine precision.
            break;
        }
    }
    Ok(cal)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PavBin {
    /// Largest training score in the bin.
    pub upper: f64,
    pub posterior: f64,
}

/// Step function from scores to posteriors with nondecreasing bin
/// posteriors and strictly increasing bin upper bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PavBin>", into = "Vec<PavBin>")]
pub struct PavCalibrator {
    bins: Vec<PavBin>,
}

impl PavCalibrator {
    pub fn from_bins(bins: Vec<PavBin>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::Invalid("PAV calibrator without bins".to_string()));
        }
        for b in &bins {
            if !b.upper.is_finite() || !(0.0..=1.0).contains(&b.posterior) {
                return Err(Error::Invalid(format!("invalid PAV bin {b:?}")));
            }
        }
        for w in bins.windows(2) {
            if w[1].upper <= w[0].upper || w[1].posterior < w[0].posterior {
                return Err(Error::Invalid(format!(
                    "PAV bins out of order: {:?} then {:?}",
                    w[0], w[1]
                )));
            }
        }
        Ok(PavCalibrator { bins })
    }

    pub fn bins(&self) -> &[PavBin] {
        &self.bins
    }

    /// Posterior of the first bin whose upper bound reaches `score`; scores
    /// past the last bound take the last bin.
    pub fn apply(&self, score: f64) -> f64 {
        let idx = self.bins.partition_point(|b| b.upper < score);
        self.bins[idx.min(self.bins.len() - 1)].posterior
    }
}

impl TryFrom<Vec<PavBin>> for PavCalibrator {
    type Error = Error;

    fn try_from(bins: Vec<PavBin>) -> Result<Self> {
        PavCalibrator::from_bins(bins)
    }
}

impl From<PavCalibrator> for Vec<PavBin> {
    fn from(c: PavCalibrator) -> Self {
        c.bins
    }
}

pub fn apply_pav(cal: &PavCalibrator, score: f64) -> f64 {
    cal.apply(score)
}

/// Isotonic regression of the disordered indicator on the score. Equal scores
/// always share a bin.
pub fn fit_pav(scores: &[f64], labels: &[ClassLabel]) -> Result<PavCalibrator> {
    check_training(scores, labels)?;
    if scores.is_empty() {
        return Err(Error::Degenerate(
            "PAV needs at least one sample".to_string(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));

    struct Block {
        upper: f64,
        positives: f64,
        weight: f64,
    }
    let mut ties: Vec<Block> = Vec::new();
    for i in order {
        let y = if labels[i].is_disordered() { 1.0 } else { 0.0 };
        match ties.last_mut() {
            Some(last) if last.upper == scores[i] => {
                last.positives += y;
                last.weight += 1.0;
            }
            _ => ties.push(Block {
                upper: scores[i],
                positives: y,
                weight: 1.0,
            }),
        }
    }

    let mut blocks: Vec<Block> = Vec::with_capacity(ties.len());
    for block in ties {
        blocks.push(block);
        // Pool while the previous block mean is not below the last one.
        while blocks.len() >= 2 {
            let last = &blocks[blocks.len() - 1];
            let prev = &blocks[blocks.len() - 2];
            if prev.positives * last.weight < last.positives * prev.weight {
                break;
            }
            let last = blocks.pop().unwrap();
            let prev = blocks.last_mut().unwrap();
            prev.upper = last.upper;
            prev.positives += last.positives;
            prev.weight += last.weight;
        }
    }
    let bins = blocks
        .into_iter()
        .map(|b| PavBin {
            upper: b.upper,
            posterior: b.positives / b.weight,
        })
        .collect();
    PavCalibrator::from_bins(bins)
}

/// Exported calibrator: `{"type": "affine", "parameters": {"a", "b"}}` or
/// `{"type": "pav", "parameters": [{"upper", "posterior"}, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "parameters", rename_all = "lowercase")]
pub enum Calibrator {
    Affine(AffineCalibrator),
    Pav(PavCalibrator),
}

impl Calibrator {
    /// Calibrated posterior from an input posterior. Both kinds act on the
    /// input's log-odds.
    pub fn calibrate(&self, posterior: f64) -> f64 {
        let lo = log_odds(posterior);
        match self {
            Calibrator::Affine(c) => c.apply(lo),
            Calibrator::Pav(c) => c.apply(lo),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationFamily {
    Affine,
    Monotone,
}

/// Cross-entropy of the posteriors minus that of the same posteriors refitted
/// on themselves with the chosen family.
pub fn calibration_loss(
    posteriors: &[f64],
    labels: &[ClassLabel],
    family: CalibrationFamily,
) -> Result<f64> {
    let n_d = labels.iter().filter(|l| l.is_disordered()).count();
    if posteriors.is_empty() || n_d == 0 || n_d == labels.len() {
        return Err(Error::Degenerate(
            "calibration loss needs both classes".to_string(),
        ));
    }
    let raw = cross_entropy_of(posteriors, labels)?;
    let lo: Vec<f64> = posteriors.iter().map(|&p| log_odds(p)).collect();
    let refit: Vec<f64> = match family {
        CalibrationFamily::Affine => {
            let cal = fit_affine(&lo, labels)?;
            lo.iter().map(|&x| cal.apply(x)).collect()
        }
        CalibrationFamily::Monotone => {
            let cal = fit_pav(&lo, labels)?;
            lo.iter().map(|&x| cal.apply(x)).collect()
        }
    };
    Ok(raw - cross_entropy_of(&refit, labels)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationScope {
    /// One calibrator for all samples.
    Global,
    /// One calibrator per demographic group.
    GroupWise,
}

/// A calibrator trained on the complement of one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldCalibrator {
    pub fold: usize,
    /// `None` for global calibration.
    pub group: Option<GroupKey>,
    pub calibrator: AffineCalibrator,
}

#[derive(Debug, Clone)]
pub struct CvCalibration {
    /// Input samples with posteriors replaced, in input order.
    pub eval: EvalSet,
    pub calibrators: Vec<FoldCalibrator>,
}

impl CvCalibration {
    pub fn inverted(&self) -> impl Iterator<Item = &FoldCalibrator> {
        self.calibrators
            .iter()
            .filter(|c| c.calibrator.is_inverted())
    }
}

/// Cross-validated affine calibration over speaker-disjoint folds.
pub fn cv_calibrate(
    eval: &EvalSet,
    k: usize,
    scope: CalibrationScope,
    seed: u64,
) -> Result<CvCalibration> {
    let folds = assign_folds(eval, k, seed)?;
    cv_calibrate_with_folds(eval, &folds, scope)
}

/// Each fold is calibrated by a transform fitted on all other folds (per
/// group when `scope` is group-wise).
pub fn cv_calibrate_with_folds(
    eval: &EvalSet,
    folds: &FoldAssignment,
    scope: CalibrationScope,
) -> Result<CvCalibration> {
    let sample_folds = folds.sample_folds(eval)?;
    let lo: Vec<f64> = eval.iter().map(|s| log_odds(s.posterior())).collect();
    let cells: Vec<Option<GroupKey>> = match scope {
        CalibrationScope::Global => vec![None],
        CalibrationScope::GroupWise => eval
            .partition_by_group()
            .into_iter()
            .map(|(g, _)| Some(g))
            .collect(),
    };

    let mut posteriors = vec![f64::NAN; eval.len()];
    let mut calibrators = Vec::new();
    for fold in 0..folds.k() {
        for &cell in &cells {
            let in_cell = |i: usize| cell.is_none_or(|g| eval[i].group() == g);
            let test: Vec<usize> = (0..eval.len())
                .filter(|&i| sample_folds[i] == fold && in_cell(i))
                .collect();
            if test.is_empty() {
                continue;
            }
            let train: Vec<usize> = (0..eval.len())
                .filter(|&i| sample_folds[i] != fold && in_cell(i))
                .collect();
            let train_lo: Vec<f64> = train.iter().map(|&i| lo[i]).collect();
            let train_labels: Vec<ClassLabel> = train.iter().map(|&i| eval[i].label()).collect();
            let n_d = train_labels.iter().filter(|l| l.is_disordered()).count();
            let missing = if n_d == 0 {
                Some("disordered")
            } else if n_d == train_labels.len() {
                Some("healthy")
            } else {
                None
            };
            if let Some(missing) = missing {
                return Err(Error::MissingClass {
                    group: cell.map_or_else(|| "all".to_string(), |g| g.to_string()),
                    fold,
                    missing,
                });
            }
            let cal = fit_affine(&train_lo, &train_labels)?;
            for &i in &test {
                posteriors[i] = cal.apply(lo[i]);
            }
            calibrators.push(FoldCalibrator {
                fold,
                group: cell,
                calibrator: cal,
            });
        }
    }
    Ok(CvCalibration {
        eval: eval.with_posteriors(&posteriors)?,
        calibrators,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use ClassLabel::{Disordered as D, Healthy as H};

    /// Pooled-mean closed form of isotonic regression over tie-collapsed
    /// blocks: value at block i is max over j <= i of min over k >= i of the
    /// mean of blocks j..=k.
    fn isotonic_minmax(scores: &[f64], labels: &[ClassLabel]) -> Vec<(f64, f64)> {
        let mut pairs: Vec<(f64, f64)> = scores
            .iter()
            .zip(labels)
            .map(|(&s, l)| (s, if l.is_disordered() { 1.0 } else { 0.0 }))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut blocks: Vec<(f64, f64, f64)> = Vec::new();
        for (s, y) in pairs {
            match blocks.last_mut() {
                Some(b) if b.0 == s => {
                    b.1 += y;
                    b.2 += 1.0;
                }
                _ => blocks.push((s, y, 1.0)),
            }
        }
        let n = blocks.len();
        (0..n)
            .map(|i| {
                let mut best = f64::NEG_INFINITY;
                for j in 0..=i {
                    let mut worst = f64::INFINITY;
                    for k in i..n {
                        let (sy, w) = blocks[j..=k]
                            .iter()
                            .fold((0.0, 0.0), |acc, b| (acc.0 + b.1, acc.1 + b.2));
                        worst = worst.min(sy / w);
                    }
                    best = best.max(worst);
                }
                (blocks[i].0, best)
            })
            .collect()
    }

    #[test]
    fn pav_hand_example() {
        let scores = [0.1, 0.35, 0.4, 0.9];
        let cal = fit_pav(&scores, &[H, D, H, D]).unwrap();
        let out: Vec<f64> = scores.iter().map(|&s| cal.apply(s)).collect();
        assert_eq!(out, [0.0, 0.5, 0.5, 1.0]);
        assert_eq!(cal.bins().len(), 3);
        assert_eq!(apply_pav(&cal, 0.37), 0.5);
        assert_eq!(cal.apply(-5.0), 0.0);
        assert_eq!(cal.apply(5.0), 1.0);
    }

    #[test]
    fn pav_separated_and_single_class() {
        let cal = fit_pav(&[1.0, 2.0, 3.0, 4.0], &[H, H, D, D]).unwrap();
        let posts: Vec<f64> = cal.bins().iter().map(|b| b.posterior).collect();
        assert_eq!(posts, [0.0, 1.0]);
        let cal = fit_pav(&[1.0, 5.0, 3.0], &[D, D, D]).unwrap();
        assert_eq!(cal.bins().len(), 1);
        assert_eq!(cal.bins()[0].posterior, 1.0);
        assert!(fit_pav(&[f64::NAN], &[D]).is_err());
        assert!(fit_pav(&[], &[]).is_err());
    }

    #[test]
    fn pav_ties_share_a_bin() {
        let cal = fit_pav(&[1.0, 1.0, 2.0], &[D, H, D]).unwrap();
        assert_eq!(cal.apply(1.0), 0.5);
        assert_eq!(cal.apply(2.0), 1.0);
    }

    #[test]
    fn pav_rejects_unordered_bins() {
        let bins = vec![
            PavBin {
                upper: 1.0,
                posterior: 0.6,
            },
            PavBin {
                upper: 2.0,
                posterior: 0.4,
            },
        ];
        assert!(PavCalibrator::from_bins(bins).is_err());
        let json = r#"{"type":"pav","parameters":[{"upper":2.0,"posterior":0.1},{"upper":1.0,"posterior":0.2}]}"#;
        assert!(Calibrator::from_json(json).is_err());
    }

    #[test]
    fn affine_identity_examples() {
        let id = AffineCalibrator::IDENTITY;
        assert_eq!(apply_affine(&id, 0.0), 0.5);
        assert!((id.apply(4f64.ln()) - 0.8).abs() < 1e-12);
        let constant = AffineCalibrator {
            a: 0.0,
            b: (0.3f64 / 0.7).ln(),
        };
        assert!((constant.apply(123.0) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn affine_constant_scores_recover_frequency() {
        let lo = vec![0.0; 10];
        let labels = [D, D, D, H, H, H, H, H, H, H];
        let cal = fit_affine(&lo, &labels).unwrap();
        assert!((cal.b - (-0.8473)).abs() < 1e-4, "{cal:?}");
        assert!((cal.apply(0.0) - 0.3).abs() < 1e-9);
    }

    #[test]
    fn affine_rejects_bad_input() {
        assert!(fit_affine(&[0.1, 0.2], &[D, D]).is_err());
        assert!(fit_affine(&[0.1], &[D]).is_err());
        assert!(fit_affine(&[0.1, f64::INFINITY], &[D, H]).is_err());
        assert!(fit_affine(&[0.1, 0.2], &[D]).is_err());
    }

    #[test]
    fn affine_separable_data_stays_finite() {
        let lo = [-2.0, -1.0, 1.0, 2.0];
        let cal = fit_affine(&lo, &[H, H, D, D]).unwrap();
        assert!(cal.a.is_finite() && cal.b.is_finite());
        assert!(cal.a > 0.0);
    }

    #[test]
    fn calibrator_json_is_exact() {
        let affine = Calibrator::Affine(AffineCalibrator {
            a: 0.1 + 0.2,
            b: -1.0 / 3.0,
        });
        let back = Calibrator::from_json(&affine.to_json().unwrap()).unwrap();
        assert_eq!(back, affine);
        let json = affine.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["type"], "affine");
        assert!(v["parameters"]["a"].is_number());

        let pav = Calibrator::Pav(fit_pav(&[0.13, 0.7, 0.31, 2.9], &[H, D, H, D]).unwrap());
        let json = pav.to_json().unwrap();
        assert_eq!(Calibrator::from_json(&json).unwrap(), pav);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["type"], "pav");
        assert!(v["parameters"][0]["upper"].is_number());
    }

    #[test]
    fn pav_loss_is_zero_on_pav_output() {
        let scores = [0.1, 0.2, 0.35, 0.4, 0.6, 0.9, 0.95];
        let labels = [D, H, H, D, H, D, H];
        let cal = fit_pav(&scores, &labels).unwrap();
        // Bins with posterior 0 or 1 would be clamped; keep this fixture mixed.
        let calibrated: Vec<f64> = scores.iter().map(|&s| cal.apply(s)).collect();
        assert!(calibrated.iter().all(|&p| p > 0.0 && p < 1.0));
        let loss = calibration_loss(&calibrated, &labels, CalibrationFamily::Monotone).unwrap();
        assert!(loss.abs() < 1e-12, "{loss}");
    }

    #[test]
    fn anti_calibrated_posteriors_have_loss() {
        let labels: Vec<ClassLabel> = (0..40).map(|i| if i % 4 == 0 { D } else { H }).collect();
        // True frequency 0.25; report the complement.
        let posteriors = vec![0.75; 40];
        let loss = calibration_loss(&posteriors, &labels, CalibrationFamily::Affine).unwrap();
        assert!(loss > 0.3, "{loss}");
        assert!(calibration_loss(&[0.4, 0.5], &[D, D], CalibrationFamily::Affine).is_err());
    }

    proptest! {
        #[test]
        fn pav_matches_minmax_oracle(
            data in prop::collection::vec((0u8..12, any::<bool>()), 1..25)
        ) {
            let scores: Vec<f64> = data.iter().map(|d| d.0 as f64 / 4.0).collect();
            let labels: Vec<ClassLabel> = data.iter().map(|d| if d.1 { D } else { H }).collect();
            let cal = fit_pav(&scores, &labels).unwrap();
            for w in cal.bins().windows(2) {
                prop_assert!(w[0].posterior <= w[1].posterior);
                prop_assert!(w[0].upper < w[1].upper);
            }
            for (s, expected) in isotonic_minmax(&scores, &labels) {
                prop_assert!((cal.apply(s) - expected).abs() < 1e-12);
            }
        }

        #[test]
        fn affine_beats_random_probes(
            data in prop::collection::vec((-4.0f64..4.0, any::<bool>()), 8..40),
            probes in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 100),
        ) {
            let lo: Vec<f64> = data.iter().map(|d| d.0).collect();
            let labels: Vec<ClassLabel> = data.iter().map(|d| if d.1 { D } else { H }).collect();
            prop_assume!(labels.contains(&D) && labels.contains(&H));
            let cal = fit_affine(&lo, &labels).unwrap();
            let best = affine_objective(&cal, &lo, &labels);
            for (a, b) in probes {
                let other = affine_objective(&AffineCalibrator { a, b }, &lo, &labels);
                prop_assert!(best <= other + 1e-12);
            }
        }

        #[test]
        fn positive_scale_preserves_ranking(
            lo in prop::collection::vec(-10.0f64..10.0, 2..30),
            a in 0.01f64..5.0,
            b in -3.0f64..3.0,
        ) {
            let cal = AffineCalibrator { a, b };
            for i in 0..lo.len() {
                for j in 0..lo.len() {
                    if lo[i] < lo[j] {
                        prop_assert!(cal.apply(lo[i]) <= cal.apply(lo[j]));
                    }
                }
            }
        }
    }
}
