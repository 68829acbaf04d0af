//! Slowness statistic and sliding-window spike detection.
//!
//! The slowness of a window is the variance of its first differences after
//! scaling the window to unit variance. White noise sits near 2, smooth
//! waveforms near 0, and the statistic is invariant to the amplitude of the
//! window, so low-power spikes are treated like loud ones.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numeric::{mean, population_variance};
use crate::series::{is_degenerate, TimeSeries, TimeSeriesSet};

/// Value reported for constant windows.
pub const DEGENERATE_SLOWNESS: f64 = 2.0;

/// Slowness of a sequence: `Var(x_t - x_{t-1}) / Var(x_t)`, population variances.
pub fn slowness(x: &[f64]) -> Result<f64> {
    if x.len() < 3 {
        return Err(Error::SeriesTooShort { len: x.len(), min: 3 });
    }
    if is_degenerate(x) {
        return Err(Error::ZeroVarianceSeries);
    }
    Ok(slowness_unchecked(x))
}

fn slowness_unchecked(x: &[f64]) -> f64 {
    let n_diff = (x.len() - 1) as f64;
    let diff_mean = (x[x.len() - 1] - x[0]) / n_diff;
    let diff_var = x
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0] - diff_mean;
            d * d
        })
        .sum::<f64>()
        / n_diff;
    diff_var / population_variance(x)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Recording {
    samples: Vec<f64>,
    pub sample_rate: Option<f64>,
}

impl Recording {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            samples,
            sample_rate: None,
        })
    }

    pub fn with_sample_rate(mut self, rate: f64) -> Self {
        self.sample_rate = Some(rate);
        self
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Slowness of every length-`T` window of a recording.
#[derive(Debug, Clone, PartialEq)]
pub struct RollingSlowness {
    pub values: Vec<f64>,
    /// Windows that were constant and received [`DEGENERATE_SLOWNESS`].
    pub degenerate: Vec<bool>,
}

pub fn rolling_slowness(rec: &Recording, window_len: usize) -> Result<RollingSlowness> {
    if window_len < 3 {
        return Err(Error::InvalidConfig(format!("window length {window_len} is below 3")));
    }
    if rec.len() < window_len {
        return Err(Error::RecordingTooShort {
            len: rec.len(),
            min: window_len,
        });
    }
    let (values, degenerate) = rec
        .samples
        .windows(window_len)
        .map(|w| {
            if is_degenerate(w) {
                (DEGENERATE_SLOWNESS, true)
            } else {
                (slowness_unchecked(w), false)
            }
        })
        .unzip();
    Ok(RollingSlowness { values, degenerate })
}

/// How the peak used for alignment is located.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum PeakPolarity {
    /// Largest value of the mean-removed window.
    #[default]
    Positive,
    /// Largest absolute value of the mean-removed window.
    Absolute,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetectorConfig {
    pub window_len: usize,
    pub tol: f64,
    /// Defaults to `window_len / 2`.
    pub min_separation: Option<usize>,
    /// Defaults to `window_len / 2`.
    pub align_index: Option<usize>,
    pub polarity: PeakPolarity,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            window_len: 55,
            tol: 0.25,
            min_separation: None,
            align_index: None,
            polarity: PeakPolarity::Positive,
        }
    }
}

impl DetectorConfig {
    pub fn min_separation(&self) -> usize {
        self.min_separation.unwrap_or(self.window_len / 2)
    }

    pub fn align_index(&self) -> usize {
        self.align_index.unwrap_or(self.window_len / 2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_len < 8 {
            return Err(Error::InvalidConfig(format!(
                "window length must be at least 8, got {}",
                self.window_len
            )));
        }
        if !(self.tol > 0.0 && self.tol < 2.0) {
            return Err(Error::InvalidConfig(format!("tol must lie in (0, 2), got {}", self.tol)));
        }
        if self.align_index() >= self.window_len {
            return Err(Error::InvalidConfig("align index outside the window".into()));
        }
        Ok(())
    }
}

/// Detected, aligned spike windows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpikeCatalog {
    pub onsets: Vec<usize>,
    /// Standardized windows, one per onset.
    pub windows: Vec<TimeSeries>,
    pub slowness: Vec<f64>,
}

impl SpikeCatalog {
    pub fn len(&self) -> usize {
        self.onsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.onsets.is_empty()
    }

    /// Windows as a set; `None` for an empty catalog.
    pub fn window_set(&self) -> Option<TimeSeriesSet> {
        TimeSeriesSet::new(self.windows.clone()).ok()
    }
}

fn peak_index(window: &[f64], polarity: PeakPolarity) -> usize {
    let m = mean(window);
    let score = |v: f64| match polarity {
        PeakPolarity::Positive => v - m,
        PeakPolarity::Absolute => (v - m).abs(),
    };
    let mut best = 0;
    for (i, &v) in window.iter().enumerate().skip(1) {
        if score(v) > score(window[best]) {
            best = i;
        }
    }
    best
}

/// Shift a window start so its peak lands on `align`; `None` if that leaves the recording.
fn align(samples: &[f64], start: usize, cfg: &DetectorConfig) -> Option<usize> {
    let t = cfg.window_len;
    let target = cfg.align_index();
    let mut start = start;
    // A shift can pull a larger sample into view; iterate until the peak is stable.
    for _ in 0..4 {
        let p = peak_index(&samples[start..start + t], cfg.polarity);
        if p == target {
            return Some(start);
        }
        let abs_peak = start + p;
        if abs_peak < target || abs_peak - target + t > samples.len() {
            return None;
        }
        start = abs_peak - target;
    }
    None
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    start: usize,
    slowness: f64,
}

/// Keep candidates at least `min_sep` apart, preferring slower (smaller) values.
fn suppress(candidates: &[Candidate], min_sep: usize) -> Vec<Candidate> {
    let mut kept: Vec<Candidate> = Vec::new();
    for &c in candidates {
        let mut keep = true;
        while let Some(last) = kept.last() {
            if c.start - last.start >= min_sep {
                break;
            }
            if c.slowness < last.slowness {
                kept.pop();
            } else {
                keep = false;
                break;
            }
        }
        if keep {
            kept.push(c);
        }
    }
    kept
}

/// Find slow windows, collapse them to one onset per spike and align on the peak.
pub fn detect_spikes(rec: &Recording, cfg: &DetectorConfig) -> Result<SpikeCatalog> {
    cfg.validate()?;
    let t = cfg.window_len;
    if rec.len() < 2 * t {
        return Err(Error::RecordingTooShort {
            len: rec.len(),
            min: 2 * t,
        });
    }
    let rolling = rolling_slowness(rec, t)?;

    // One candidate per run of below-threshold positions: the run's minimum.
    let mut candidates = Vec::new();
    let mut run: Option<Candidate> = None;
    for (i, (&v, &deg)) in rolling.values.iter().zip(&rolling.degenerate).enumerate() {
        if !deg && v < cfg.tol {
            match run {
                Some(c) if c.slowness <= v => {}
                _ => {
                    run = Some(Candidate { start: i, slowness: v });
                }
            }
        } else if let Some(c) = run.take() {
            candidates.push(c);
        }
    }
    candidates.extend(run);

    let min_sep = cfg.min_separation();
    let candidates = suppress(&candidates, min_sep);

    let samples = rec.samples();
    let mut aligned: Vec<Candidate> = candidates
        .iter()
        .filter_map(|c| align(samples, c.start, cfg))
        .filter_map(|start| {
            let w = &samples[start..start + t];
            (!is_degenerate(w)).then(|| Candidate {
                start,
                slowness: slowness_unchecked(w),
            })
        })
        .collect();
    aligned.sort_by_key(|c| c.start);
    aligned.dedup_by_key(|c| c.start);
    let accepted = suppress(&aligned, min_sep.max(1));

    let mut catalog = SpikeCatalog::default();
    for c in accepted {
        let window = TimeSeries::new(samples[c.start..c.start + t].to_vec())?.standardize()?;
        catalog.onsets.push(c.start);
        catalog.windows.push(window);
        catalog.slowness.push(c.slowness);
    }
    Ok(catalog)
}
