//! Scored evaluation samples, demographic grouping, speaker folds and
//! the CSV exchange format.
//!
//! The CSV header is fixed:
//!
//! ```text
//! sample_id,speaker_id,gender,age,posterior_disordered,label,severity
//! ```
//!
//! `severity` is the perceptual G grade (0..=3) and may only be filled in for
//! disordered rows.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::ops::Deref;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 7] = [
    "sample_id",
    "speaker_id",
    "gender",
    "age",
    "posterior_disordered",
    "label",
    "severity",
];

/// Youngest age admitted at ingestion.
pub const MIN_AGE: u32 = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Healthy,
    /// The positive class.
    Disordered,
}

impl ClassLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Healthy => "healthy",
            ClassLabel::Disordered => "disordered",
        }
    }

    pub fn is_disordered(self) -> bool {
        self == ClassLabel::Disordered
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "healthy" => Ok(ClassLabel::Healthy),
            "disordered" => Ok(ClassLabel::Disordered),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    F,
    M,
}

impl FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "F" => Ok(Gender::F),
            "M" => Ok(Gender::M),
            other => Err(format!("unknown gender `{other}`")),
        }
    }
}

/// Young 14-30, adult 31-55, older 56+.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgeBand {
    Y,
    A,
    O,
}

impl AgeBand {
    pub fn of_age(age: u32) -> Option<AgeBand> {
        match age {
            0..=13 => None,
            14..=30 => Some(AgeBand::Y),
            31..=55 => Some(AgeBand::A),
            _ => Some(AgeBand::O),
        }
    }

    /// Inclusive age range of the band; the older band is capped at 90 for
    /// synthesis.
    pub fn age_range(self) -> (u32, u32) {
        match self {
            AgeBand::Y => (14, 30),
            AgeBand::A => (31, 55),
            AgeBand::O => (56, 90),
        }
    }
}

/// One of the six gender/age cohorts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupKey {
    pub gender: Gender,
    pub age_band: AgeBand,
}

impl GroupKey {
    pub const YF: GroupKey = GroupKey::new(Gender::F, AgeBand::Y);
    pub const AF: GroupKey = GroupKey::new(Gender::F, AgeBand::A);
    pub const OF: GroupKey = GroupKey::new(Gender::F, AgeBand::O);
    pub const YM: GroupKey = GroupKey::new(Gender::M, AgeBand::Y);
    pub const AM: GroupKey = GroupKey::new(Gender::M, AgeBand::A);
    pub const OM: GroupKey = GroupKey::new(Gender::M, AgeBand::O);

    /// Canonical reporting order.
    pub const ALL: [GroupKey; 6] = [
        GroupKey::YF,
        GroupKey::AF,
        GroupKey::OF,
        GroupKey::YM,
        GroupKey::AM,
        GroupKey::OM,
    ];

    pub const fn new(gender: Gender, age_band: AgeBand) -> Self {
        GroupKey { gender, age_band }
    }

    pub fn name(self) -> &'static str {
        match (self.age_band, self.gender) {
            (AgeBand::Y, Gender::F) => "YF",
            (AgeBand::A, Gender::F) => "AF",
            (AgeBand::O, Gender::F) => "OF",
            (AgeBand::Y, Gender::M) => "YM",
            (AgeBand::A, Gender::M) => "AM",
            (AgeBand::O, Gender::M) => "OM",
        }
    }

    pub fn index(self) -> usize {
        GroupKey::ALL.iter().position(|g| *g == self).unwrap()
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GroupKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GroupKey::ALL
            .iter()
            .copied()
            .find(|g| g.name() == s)
            .ok_or_else(|| format!("unknown group `{s}`"))
    }
}

impl Serialize for GroupKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for GroupKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Maps a speaker's gender and age to its cohort. Ages below 14 are rejected.
pub fn derive_group(gender: Gender, age: u32) -> Result<GroupKey> {
    AgeBand::of_age(age)
        .map(|band| GroupKey::new(gender, band))
        .ok_or_else(|| Error::Invalid(format!("age {age} is below the minimum of {MIN_AGE}")))
}

/// One evaluated utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSample {
    sample_id: Arc<str>,
    speaker_id: Arc<str>,
    gender: Gender,
    age: u32,
    group: GroupKey,
    posterior: f64,
    label: ClassLabel,
    severity: Option<u8>,
}

impl ScoredSample {
    pub fn new(
        sample_id: impl Into<Arc<str>>,
        speaker_id: impl Into<Arc<str>>,
        gender: Gender,
        age: u32,
        posterior: f64,
        label: ClassLabel,
        severity: Option<u8>,
    ) -> Result<Self> {
        let group = derive_group(gender, age)?;
        check_posterior(posterior)?;
        check_severity(label, severity)?;
        Ok(ScoredSample {
            sample_id: sample_id.into(),
            speaker_id: speaker_id.into(),
            gender,
            age,
            group,
            posterior,
            label,
            severity,
        })
    }

    pub fn sample_id(&self) -> &str {
        &self.sample_id
    }

    pub fn speaker_id(&self) -> &str {
        &self.speaker_id
    }

    pub(crate) fn speaker_arc(&self) -> &Arc<str> {
        &self.speaker_id
    }

    pub fn gender(&self) -> Gender {
        self.gender
    }

    pub fn age(&self) -> u32 {
        self.age
    }

    pub fn group(&self) -> GroupKey {
        self.group
    }

    /// Posterior probability of the disordered class.
    pub fn posterior(&self) -> f64 {
        self.posterior
    }

    pub fn label(&self) -> ClassLabel {
        self.label
    }

    pub fn severity(&self) -> Option<u8> {
        self.severity
    }

    /// Same sample with a replaced posterior.
    pub fn with_posterior(&self, posterior: f64) -> Result<Self> {
        check_posterior(posterior)?;
        Ok(ScoredSample {
            posterior,
            ..self.clone()
        })
    }
}

fn check_posterior(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Invalid(format!("posterior {p} outside [0, 1]")))
    }
}

fn check_severity(label: ClassLabel, severity: Option<u8>) -> Result<()> {
    match severity {
        None => Ok(()),
        Some(g) if g > 3 => Err(Error::Invalid(format!("severity {g} outside 0..=3"))),
        Some(_) if label == ClassLabel::Healthy => Err(Error::Invalid(
            "severity given for a healthy sample".to_string(),
        )),
        Some(_) => Ok(()),
    }
}

/// Ordered collection of samples with unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalSet {
    samples: Vec<ScoredSample>,
}

impl EvalSet {
    pub fn new(samples: Vec<ScoredSample>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            if !seen.insert(s.sample_id.clone()) {
                return Err(Error::Invalid(format!(
                    "duplicate sample_id `{}`",
                    s.sample_id
                )));
            }
        }
        Ok(EvalSet { samples })
    }

    pub fn samples(&self) -> &[ScoredSample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<ScoredSample> {
        self.samples
    }

    /// Samples of one cohort, in input order.
    pub fn group(&self, group: GroupKey) -> EvalSet {
        self.filter(|s| s.group == group)
    }

    pub fn filter(&self, keep: impl Fn(&ScoredSample) -> bool) -> EvalSet {
        EvalSet {
            samples: self.samples.iter().filter(|s| keep(s)).cloned().collect(),
        }
    }

    /// Disjoint per-cohort subsets in canonical order; absent cohorts are
    /// skipped.
    pub fn partition_by_group(&self) -> Vec<(GroupKey, EvalSet)> {
        GroupKey::ALL
            .iter()
            .map(|&g| (g, self.group(g)))
            .filter(|(_, set)| !set.is_empty())
            .collect()
    }

    /// Replaces every posterior, keeping everything else.
    pub fn with_posteriors(&self, posteriors: &[f64]) -> Result<EvalSet> {
        if posteriors.len() != self.samples.len() {
            return Err(Error::Invalid(format!(
                "{} posteriors for {} samples",
                posteriors.len(),
                self.samples.len()
            )));
        }
        let samples = self
            .samples
            .iter()
            .zip(posteriors)
            .map(|(s, &p)| s.with_posterior(p))
            .collect::<Result<Vec<_>>>()?;
        Ok(EvalSet { samples })
    }

    /// Distinct speaker ids in lexicographic order.
    pub fn speakers(&self) -> Vec<Arc<str>> {
        self.samples
            .iter()
            .map(|s| s.speaker_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn posteriors(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.posterior).collect()
    }

    pub fn labels(&self) -> Vec<ClassLabel> {
        self.samples.iter().map(|s| s.label).collect()
    }
}

impl Deref for EvalSet {
    type Target = [ScoredSample];

    fn deref(&self) -> &[ScoredSample] {
        &self.samples
    }
}

/// Class priors; `p_h + p_d = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Priors {
    pub p_h: f64,
    pub p_d: f64,
}

impl Priors {
    pub fn new(p_h: f64, p_d: f64) -> Result<Self> {
        if !(p_h >= 0.0 && p_d >= 0.0) || (p_h + p_d - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!("invalid priors ({p_h}, {p_d})")));
        }
        Ok(Priors { p_h, p_d })
    }

    pub fn from_counts(n_h: usize, n_d: usize) -> Result<Self> {
        let n = n_h + n_d;
        if n == 0 {
            return Err(Error::Degenerate("priors of an empty set".to_string()));
        }
        let p_h = n_h as f64 / n as f64;
        Ok(Priors {
            p_h,
            p_d: 1.0 - p_h,
        })
    }

    pub fn of(self, label: ClassLabel) -> f64 {
        match label {
            ClassLabel::Healthy => self.p_h,
            ClassLabel::Disordered => self.p_d,
        }
    }

    /// True when either class has zero prior.
    pub fn is_degenerate(self) -> bool {
        self.p_h <= 0.0 || self.p_d <= 0.0
    }
}

/// Class frequencies of a set of samples.
pub fn empirical_priors(samples: &[ScoredSample]) -> Result<Priors> {
    let n_h = samples
        .iter()
        .filter(|s| s.label == ClassLabel::Healthy)
        .count();
    Priors::from_counts(n_h, samples.len() - n_h)
}

/// Keeps healthy samples and disordered samples whose annotated grade is at
/// least `min_g`. Unannotated disordered samples are dropped.
pub fn filter_severity(samples: &EvalSet, min_g: u8) -> EvalSet {
    samples.filter(|s| match s.label {
        ClassLabel::Healthy => true,
        ClassLabel::Disordered => s.severity.is_some_and(|g| g >= min_g),
    })
}

/// Speaker-disjoint fold assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldAssignment {
    k: usize,
    folds: HashMap<Arc<str>, usize>,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self, speaker_id: &str) -> Option<usize> {
        self.folds.get(speaker_id).copied()
    }

    /// Fold index of every sample, in sample order.
    pub fn sample_folds(&self, eval: &EvalSet) -> Result<Vec<usize>> {
        eval.iter()
            .map(|s| {
                self.fold_of(s.speaker_id()).ok_or_else(|| {
                    Error::Invalid(format!("speaker `{}` has no fold", s.speaker_id()))
                })
            })
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.folds.values() {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffles the sorted speaker list with `seed` and deals speakers
/// round-robin into `k` folds.
pub fn assign_folds(eval: &EvalSet, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Invalid(format!("need at least 2 folds, got {k}")));
    }
    let mut speakers = eval.speakers();
    if speakers.len() < k {
        return Err(Error::Degenerate(format!(
            "{} speakers cannot fill {k} folds",
            speakers.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    speakers.shuffle(&mut rng);
    let folds = speakers
        .into_iter()
        .enumerate()
        .map(|(i, spk)| (spk, i % k))
        .collect();
    Ok(FoldAssignment { k, folds })
}

struct RawRow<'a> {
    line: u64,
    fields: Vec<&'a str>,
}

impl RawRow<'_> {
    fn get(&self, idx: usize) -> &str {
        self.fields[idx]
    }

    fn parse<T: FromStr>(&self, idx: usize) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        self.get(idx)
            .parse::<T>()
            .map_err(|e| Error::row(self.line, CSV_HEADER[idx], e.to_string()))
    }
}

/// Reads the CSV exchange format. Row order is preserved; the first offending
/// row aborts parsing with its line number.
pub fn parse_eval_csv(input: impl Read) -> Result<EvalSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);

    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::row(
            1,
            "header",
            format!("expected `{}`", CSV_HEADER.join(",")),
        ));
    }

    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let row = RawRow {
            line,
            fields: record.iter().collect(),
        };
        if row.fields.len() != CSV_HEADER.len() {
            return Err(Error::row(
                line,
                "row",
                format!("expected 7 fields, found {}", row.fields.len()),
            ));
        }
        let sample = parse_row(&row)?;
        if !seen.insert(sample.sample_id.clone()) {
            return Err(Error::row(
                line,
                "sample_id",
                format!("duplicate sample_id `{}`", sample.sample_id),
            ));
        }
        samples.push(sample);
    }
    Ok(EvalSet { samples })
}

fn parse_row(row: &RawRow<'_>) -> Result<ScoredSample> {
    let sample_id = row.get(0);
    let speaker_id = row.get(1);
    if sample_id.is_empty() {
        return Err(Error::row(row.line, "sample_id", "empty"));
    }
    if speaker_id.is_empty() {
        return Err(Error::row(row.line, "speaker_id", "empty"));
    }
    let gender: Gender = row.parse(2)?;
    let age: u32 = row.parse(3)?;
    if age < MIN_AGE {
        return Err(Error::row(
            row.line,
            "age",
            format!("age {age} is below the minimum of {MIN_AGE}"),
        ));
    }
    let posterior: f64 = row.parse(4)?;
    if !(0.0..=1.0).contains(&posterior) {
        return Err(Error::row(
            row.line,
            "posterior_disordered",
            format!("{posterior} outside [0, 1]"),
        ));
    }
    let label: ClassLabel = row.parse(5)?;
    let severity = match row.get(6) {
        "" => None,
        _ => Some(row.parse::<u8>(6)?),
    };
    check_severity(label, severity).map_err(|e| {
        let msg = match e {
            Error::Invalid(m) => m,
            other => other.to_string(),
        };
        Error::row(row.line, "severity", msg)
    })?;
    ScoredSample::new(
        sample_id, speaker_id, gender, age, posterior, label, severity,
    )
}

/// Writes the CSV exchange format. Posteriors use the shortest decimal that
/// parses back to the same `f64`.
pub fn write_eval_csv(eval: &EvalSet, out: impl Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for s in eval.iter() {
        let gender = match s.gender {
            Gender::F => "F",
            Gender::M => "M",
        };
        let severity = s.severity.map(|g| g.to_string()).unwrap_or_default();
        writer.write_record([
            s.sample_id(),
            s.speaker_id(),
            gender,
            &s.age.to_string(),
            &s.posterior.to_string(),
            s.label.as_str(),
            &severity,
        ])?;
    }
    writer.flush()?;
    Ok(())
}
