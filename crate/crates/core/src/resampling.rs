//! Speaker-level bootstrap for scalar metrics.
//!
//! Replicate `r` draws speakers with replacement from a ChaCha8 stream seeded
//! by `seed` on stream `r`, so every replicate is reproducible on its own.
//! Speakers are enumerated in sorted order and each drawn speaker contributes
//! all of its samples (sorted by sample id), which makes replicate values
//! independent of input sample order.
//!
//! Intervals use the percentile method with linear interpolation between
//! order statistics: the `q` quantile of sorted values `v[0..n]` is
//! `v[floor(h)] + (h - floor(h)) * (v[floor(h)+1] - v[floor(h)])` with
//! `h = (n - 1) q`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data_model::ScoredSample;
use crate::error::{Error, Result};

pub const DEFAULT_REPLICATES: usize = 1000;
pub const DEFAULT_CONFIDENCE: f64 = 0.95;
pub const MIN_REPLICATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSettings {
    pub replicates: usize,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        BootstrapSettings {
            replicates: DEFAULT_REPLICATES,
            confidence: DEFAULT_CONFIDENCE,
            seed: 42,
        }
    }
}

impl BootstrapSettings {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < MIN_REPLICATES {
            return Err(Error::Invalid(format!(
                "need at least {MIN_REPLICATES} replicates, got {}",
                self.replicates
            )));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::Invalid(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapEstimate {
    /// Metric on the original set.
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Requested replicates.
    pub replicates: usize,
    /// Replicates on which the metric was defined.
    pub b_effective: usize,
    pub confidence: f64,
    pub seed: u64,
}

/// Linear-interpolation quantile of sorted values.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

struct SpeakerIndex<'a> {
    samples: &'a [ScoredSample],
    by_speaker: Vec<Vec<usize>>,
}

impl<'a> SpeakerIndex<'a> {
    fn new(samples: &'a [ScoredSample]) -> Self {
        let mut map: BTreeMap<&Arc<str>, Vec<usize>> = BTreeMap::new();
        for (i, s) in samples.iter().enumerate() {
            map.entry(s.speaker_arc()).or_default().push(i);
        }
        let by_speaker = map
            .into_values()
            .map(|mut idx| {
                idx.sort_by(|&a, &b| samples[a].sample_id().cmp(samples[b].sample_id()));
                idx
            })
            .collect();
        SpeakerIndex {
            samples,
            by_speaker,
        }
    }

    fn replicate(&self, seed: u64, r: usize) -> Vec<ScoredSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let n = self.by_speaker.len();
        let mut out = Vec::with_capacity(self.samples.len());
        for _ in 0..n {
            let spk = rng.gen_range(0..n);
            out.extend(
                self.by_speaker[spk]
                    .iter()
                    .map(|&i| self.samples[i].clone()),
            );
        }
        out
    }
}

/// Bootstraps a vector-valued metric; entry `i` of the result is `None` when
/// output `i` is undefined on the original set or on every replicate.
pub fn bootstrap_many<F>(
    samples: &[ScoredSample],
    outputs: usize,
    settings: &BootstrapSettings,
    metric: F,
) -> Result<Vec<Option<BootstrapEstimate>>>
where
    F: Fn(&[ScoredSample]) -> Result<Vec<Option<f64>>>,
{
    settings.validate()?;
    if samples.is_empty() {
        return Err(Error::Degenerate("bootstrap of an empty set".to_string()));
    }
    let point = metric(samples)?;
    if point.len() != outputs {
        return Err(Error::Invalid(format!(
            "metric returned {} values, expected {outputs}",
            point.len()
        )));
    }

    let index = SpeakerIndex::new(samples);
    let mut draws: Vec<Vec<f64>> = vec![Vec::with_capacity(settings.replicates); outputs];
    for r in 0..settings.replicates {
        let values = metric(&index.replicate(settings.seed, r))?;
        for (slot, v) in draws.iter_mut().zip(values) {
            if let Some(v) = v.filter(|v| v.is_finite()) {
                slot.push(v);
            }
        }
    }

    let alpha = (1.0 - settings.confidence) / 2.0;
    Ok(point
        .into_iter()
        .zip(draws)
        .map(|(point, mut values)| {
            let point = point?;
            if values.is_empty() {
                return None;
            }
            values.sort_by(f64::total_cmp);
            Some(BootstrapEstimate {
                point,
                ci_low: quantile_sorted(&values, alpha),
                ci_high: quantile_sorted(&values, 1.0 - alpha),
                replicates: settings.replicates,
                b_effective: values.len(),
                confidence: settings.confidence,
                seed: settings.seed,
            })
        })
        .collect())
}

/// Percentile bootstrap of one scalar metric, resampling speakers.
/// Replicates where the metric is undefined are dropped and counted.
pub fn bootstrap_metric<F>(
    samples: &[ScoredSample],
    metric: F,
    settings: &BootstrapSettings,
) -> Result<BootstrapEstimate>
where
    F: Fn(&[ScoredSample]) -> Option<f64>,
{
    if metric(samples).is_none() {
        return Err(Error::Degenerate(
            "metric undefined on the original set".to_string(),
        ));
    }
    bootstrap_many(samples, 1, settings, |s| Ok(vec![metric(s)]))?
        .pop()
        .flatten()
        .ok_or_else(|| Error::Degenerate("metric undefined on every replicate".to_string()))
}
