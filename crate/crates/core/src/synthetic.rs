//! Deterministic grouped score datasets.
//!
//! Within a group, each sample gets a latent score `z` with unit variance,
//! centred at `-d'/2` for healthy samples and `d'/2 + 0.5 (G - 1)` for
//! disordered samples of grade `G`. The clean log-odds is the exact Bayes
//! log-odds for grade 1, `d' z + ln(n_d / n_h)`, and the reported posterior
//! is `sigmoid(scale * lo + offset)`. With `d' = 0` the clean posterior is
//! the group prior.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data_model::{ClassLabel, EvalSet, FoldAssignment, GroupKey, Priors, ScoredSample};
use crate::error::{Error, Result};
use crate::metrics::{log_odds, sigmoid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupScenario {
    pub group: GroupKey,
    pub n_h: usize,
    pub n_d: usize,
    /// Separation of the class-conditional latent means.
    pub d_prime: f64,
    #[serde(default = "one")]
    pub miscal_scale: f64,
    #[serde(default)]
    pub miscal_offset: f64,
    /// Share of disordered samples at each grade 0..=3.
    pub severity_mix: [f64; 4],
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub scenarios: Vec<GroupScenario>,
    pub seed: u64,
    #[serde(default = "one_usize")]
    pub samples_per_speaker: usize,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_speaker == 0 {
            return Err(Error::Invalid(
                "samples_per_speaker must be positive".to_string(),
            ));
        }
        let mut seen = Vec::new();
        for s in &self.scenarios {
            let g = s.group;
            if seen.contains(&g) {
                return Err(Error::Invalid(format!("group {g}: duplicate scenario")));
            }
            seen.push(g);
            if s.n_h + s.n_d == 0 {
                return Err(Error::Invalid(format!("group {g}: no samples")));
            }
            if !(s.d_prime >= 0.0 && s.d_prime.is_finite()) {
                return Err(Error::Invalid(format!(
                    "group {g}: invalid d_prime {}",
                    s.d_prime
                )));
            }
            if !s.miscal_scale.is_finite() || !s.miscal_offset.is_finite() {
                return Err(Error::Invalid(format!(
                    "group {g}: non-finite miscalibration"
                )));
            }
            let sum: f64 = s.severity_mix.iter().sum();
            if s.severity_mix.iter().any(|&p| p.is_nan() || p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Invalid(format!(
                    "group {g}: severity_mix {:?} must be nonnegative and sum to 1",
                    s.severity_mix
                )));
            }
        }
        Ok(())
    }

    /// All six groups at the reference group sizes and severity mixes, one sample per
    /// speaker, with the given separation and per-group offsets.
    pub fn reference(d_prime: f64, offsets: [f64; 6], seed: u64) -> Self {
        let fixture = reference_groups();
        let scenarios = fixture
            .rows
            .iter()
            .zip(offsets)
            .map(|(row, offset)| GroupScenario {
                group: row.group,
                n_h: row.n_h,
                n_d: row.n_d,
                d_prime,
                miscal_scale: 1.0,
                miscal_offset: offset,
                severity_mix: row.severity_mix(),
            })
            .collect();
        SyntheticSpec {
            scenarios,
            seed,
            samples_per_speaker: 1,
        }
    }
}

/// Splits `total` over `weights` by largest remainder, so counts are exact
/// and sum to `total`.
fn apportion(total: usize, weights: &[f64; 4]) -> [usize; 4] {
    let raw: Vec<f64> = weights.iter().map(|w| w * total as f64).collect();
    let mut counts = [0usize; 4];
    for (c, r) in counts.iter_mut().zip(&raw) {
        *c = r.floor() as usize;
    }
    let mut left = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| {
        let fa = raw[a] - raw[a].floor();
        let fb = raw[b] - raw[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for i in order {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

/// Generates the dataset described by `spec`; the same spec always yields the
/// same samples.
pub fn generate(spec: &SyntheticSpec) -> Result<EvalSet> {
    spec.validate()?;
    let mut samples = Vec::new();
    for scenario in &spec.scenarios {
        generate_group(scenario, spec, &mut samples)?;
    }
    EvalSet::new(samples)
}

fn generate_group(
    scenario: &GroupScenario,
    spec: &SyntheticSpec,
    out: &mut Vec<ScoredSample>,
) -> Result<()> {
    let g = scenario.group;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(g.index() as u64);

    let prior_lo = log_odds(scenario.n_d as f64 / (scenario.n_h + scenario.n_d) as f64);
    let d = scenario.d_prime;

    let counts = apportion(scenario.n_d, &scenario.severity_mix);
    let mut grades: Vec<u8> = counts
        .iter()
        .enumerate()
        .flat_map(|(grade, &c)| std::iter::repeat_n(grade as u8, c))
        .collect();
    grades.shuffle(&mut rng);

    let (min_age, max_age) = g.age_band.age_range();
    let spp = spec.samples_per_speaker;
    for (label, n) in [
        (ClassLabel::Healthy, scenario.n_h),
        (ClassLabel::Disordered, scenario.n_d),
    ] {
        let tag = match label {
            ClassLabel::Healthy => 'h',
            ClassLabel::Disordered => 'd',
        };
        let mut age = min_age;
        for i in 0..n {
            let speaker = i / spp;
            if i % spp == 0 {
                age = rng.gen_range(min_age..=max_age);
            }
            let noise: f64 = rng.sample(StandardNormal);
            let (mean, severity) = match label {
                ClassLabel::Healthy => (-d / 2.0, None),
                ClassLabel::Disordered => {
                    let grade = grades[i];
                    (d / 2.0 + 0.5 * (f64::from(grade) - 1.0), Some(grade))
                }
            };
            let clean = d * (mean + noise) + prior_lo;
            let posterior = sigmoid(scenario.miscal_scale * clean + scenario.miscal_offset);
            out.push(ScoredSample::new(
                format!("{g}-{tag}{speaker:05}-{}", i % spp),
                format!("{g}-{tag}{speaker:05}"),
                g.gender,
                age,
                posterior,
                label,
                severity,
            )?);
        }
    }
    Ok(())
}

/// One row of the per-group speaker counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReferenceRow {
    pub group: GroupKey,
    pub n_h: usize,
    pub n_d: usize,
    /// Disordered speakers annotated with grade 0..=3; the rest are
    /// unannotated.
    pub grade_counts: [usize; 4],
}

impl ReferenceRow {
    pub fn total(&self) -> usize {
        self.n_h + self.n_d
    }

    pub fn priors(&self) -> Priors {
        Priors::from_counts(self.n_h, self.n_d).expect("nonempty row")
    }

    /// Grade shares among annotated disordered speakers.
    pub fn severity_mix(&self) -> [f64; 4] {
        let annotated: usize = self.grade_counts.iter().sum();
        self.grade_counts.map(|c| c as f64 / annotated as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceGroups {
    /// In canonical group order.
    pub rows: [ReferenceRow; 6],
}

impl ReferenceGroups {
    pub fn row(&self, group: GroupKey) -> &ReferenceRow {
        &self.rows[group.index()]
    }

    pub fn pooled(&self) -> ReferenceRow {
        let mut grade_counts = [0; 4];
        for r in &self.rows {
            for (acc, c) in grade_counts.iter_mut().zip(r.grade_counts) {
                *acc += c;
            }
        }
        ReferenceRow {
            // Placeholder key; the pooled row spans every group.
            group: GroupKey::YF,
            n_h: self.rows.iter().map(|r| r.n_h).sum(),
            n_d: self.rows.iter().map(|r| r.n_d).sum(),
            grade_counts,
        }
    }
}

/// Speaker counts of the six cohorts in the reference corpus.
pub fn reference_groups() -> ReferenceGroups {
    let row = |group, n_h, n_d, grade_counts| ReferenceRow {
        group,
        n_h,
        n_d,
        grade_counts,
    };
    ReferenceGroups {
        rows: [
            row(GroupKey::YF, 318, 102, [32, 30, 15, 2]),
            row(GroupKey::AF, 44, 358, [84, 83, 128, 27]),
            row(GroupKey::OF, 19, 261, [43, 25, 99, 41]),
            row(GroupKey::YM, 137, 58, [20, 6, 6, 3]),
            row(GroupKey::AM, 99, 217, [57, 35, 56, 35]),
            row(GroupKey::OM, 16, 345, [32, 40, 113, 98]),
        ],
    }
}

/// One sample per speaker at the reference group counts, with grades assigned from the
/// grade columns and the remaining disordered speakers unannotated. Every
/// sample of a group gets `posterior(group)`.
pub fn reference_eval_set(posterior: impl Fn(GroupKey) -> f64) -> EvalSet {
    let fixture = reference_groups();
    let mut samples = Vec::with_capacity(1974);
    for row in &fixture.rows {
        let g = row.group;
        let (lo, hi) = g.age_band.age_range();
        let age = (lo + hi) / 2;
        let p = posterior(g);
        let grades = row
            .grade_counts
            .iter()
            .enumerate()
            .flat_map(|(grade, &c)| std::iter::repeat_n(Some(grade as u8), c))
            .chain(std::iter::repeat(None));
        let healthy = (0..row.n_h).map(|_| (ClassLabel::Healthy, None));
        let disordered = grades
            .take(row.n_d)
            .map(|grade| (ClassLabel::Disordered, grade));
        for (i, (label, grade)) in healthy.chain(disordered).enumerate() {
            let id = format!("{g}-{i:04}");
            samples.push(
                ScoredSample::new(id.clone(), id, g.gender, age, p, label, grade)
                    .expect("fixture sample is valid"),
            );
        }
    }
    EvalSet::new(samples).expect("fixture ids are unique")
}

/// Replaces each posterior with the disordered prior of the sample's group,
/// estimated on the other folds.
pub fn metadata_baseline(eval: &EvalSet, folds: &FoldAssignment) -> Result<EvalSet> {
    let sample_folds = folds.sample_folds(eval)?;
    let k = folds.k();
    // [fold][group] -> (total, disordered)
    let mut cells = vec![[(0usize, 0usize); 6]; k];
    let mut totals = [(0usize, 0usize); 6];
    for (s, &f) in eval.iter().zip(&sample_folds) {
        let gi = s.group().index();
        let d = usize::from(s.label().is_disordered());
        cells[f][gi].0 += 1;
        cells[f][gi].1 += d;
        totals[gi].0 += 1;
        totals[gi].1 += d;
    }
    let posteriors = eval
        .iter()
        .zip(&sample_folds)
        .map(|(s, &f)| {
            let gi = s.group().index();
            let n = totals[gi].0 - cells[f][gi].0;
            let d = totals[gi].1 - cells[f][gi].1;
            if n == 0 {
                return Err(Error::Degenerate(format!(
                    "group {} has no training samples outside fold {f}",
                    s.group()
                )));
            }
            Ok(d as f64 / n as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    eval.with_posteriors(&posteriors)
}
