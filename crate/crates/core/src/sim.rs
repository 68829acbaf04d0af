//! Seeded generators: white noise, AR(1) and noisy sines, plus synthetic spike recordings.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::series::{TimeSeries, TimeSeriesSet};
use crate::spikes::Recording;

/// Samples discarded before an AR(1) series is recorded.
pub const AR_BURN_IN: usize = 100;

/// Default sine noise level: the RMS of a unit sine, i.e. signal-to-noise 1.
pub const SINE_RMS: f64 = core::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ClassSpec {
    WhiteNoise,
    Ar1 {
        phi: f64,
    },
    /// `sin(2 pi freq t)` plus Gaussian noise; `freq` in cycles per sample.
    NoisySine {
        freq: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        noise_sd: Option<f64>,
    },
}

impl ClassSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ClassSpec::WhiteNoise => Ok(()),
            ClassSpec::Ar1 { phi } if phi.abs() < 1.0 => Ok(()),
            ClassSpec::Ar1 { phi } => Err(Error::InvalidSpec(format!("AR(1) needs |phi| < 1, got {phi}"))),
            ClassSpec::NoisySine { freq, noise_sd } => {
                if !(freq > 0.0 && freq < 0.5) {
                    return Err(Error::InvalidSpec(format!("sine frequency {freq} outside (0, 0.5)")));
                }
                match noise_sd {
                    Some(sd) if !(sd >= 0.0 && sd.is_finite()) => {
                        Err(Error::InvalidSpec(format!("noise sd {sd} is invalid")))
                    }
                    _ => Ok(()),
                }
            }
        }
    }

    /// One raw (unstandardized) realisation of length `len`.
    pub fn sample(&self, len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut normal = || -> f64 { StandardNormal.sample(rng) };
        match *self {
            ClassSpec::WhiteNoise => (0..len).map(|_| normal()).collect(),
            ClassSpec::Ar1 { phi } => {
                let mut x = 0.0;
                for _ in 0..AR_BURN_IN {
                    x = phi * x + normal();
                }
                (0..len)
                    .map(|_| {
                        x = phi * x + normal();
                        x
                    })
                    .collect()
            }
            ClassSpec::NoisySine { freq, noise_sd } => {
                let sd = noise_sd.unwrap_or(SINE_RMS);
                (0..len)
                    .map(|t| libm::sin(2.0 * PI * freq * t as f64) + sd * normal())
                    .collect()
            }
        }
    }

    pub fn name(&self) -> String {
        match *self {
            ClassSpec::WhiteNoise => "white_noise".into(),
            ClassSpec::Ar1 { phi } => format!("ar1({phi})"),
            ClassSpec::NoisySine { freq, .. } => format!("sine({freq})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimSpec {
    pub classes: Vec<ClassSpec>,
    pub n_per_class: usize,
    pub series_len: usize,
    pub seed: u64,
}

impl SimSpec {
    /// White noise, AR(1) with phi 0.5 and 0.75, sines at 0.1 and 0.2; 100 series of length 50 each.
    pub fn five_class(seed: u64) -> Self {
        Self {
            classes: vec![
                ClassSpec::WhiteNoise,
                ClassSpec::Ar1 { phi: 0.5 },
                ClassSpec::Ar1 { phi: 0.75 },
                ClassSpec::NoisySine { freq: 0.1, noise_sd: None },
                ClassSpec::NoisySine { freq: 0.2, noise_sd: None },
            ],
            n_per_class: 100,
            series_len: 50,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::InvalidSpec("no classes".into()));
        }
        if self.n_per_class == 0 {
            return Err(Error::InvalidSpec("n_per_class must be at least 1".into()));
        }
        if self.series_len < 8 {
            return Err(Error::InvalidSpec(format!("series length {} is below 8", self.series_len)));
        }
        self.classes.iter().try_for_each(ClassSpec::validate)
    }
}

/// Generator for series number `index` under a master seed.
pub fn series_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// A set of series with the class each was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub set: TimeSeriesSet,
    pub labels: Vec<usize>,
}

/// Draw `n_per_class` standardized series from every class, class-major order.
pub fn generate(spec: &SimSpec) -> Result<LabeledSet> {
    spec.validate()?;
    let mut series = Vec::with_capacity(spec.classes.len() * spec.n_per_class);
    let mut labels = Vec::with_capacity(series.capacity());
    let mut names = Vec::with_capacity(series.capacity());
    for (c, class) in spec.classes.iter().enumerate() {
        for i in 0..spec.n_per_class {
            let index = c * spec.n_per_class + i;
            let mut rng = series_rng(spec.seed, index);
            let raw = class.sample(spec.series_len, &mut rng);
            series.push(TimeSeries::new(raw)?.standardize()?);
            labels.push(c);
            names.push(format!("c{c}_{i}"));
        }
    }
    let set = TimeSeriesSet::new(series)?.with_labels(names)?;
    Ok(LabeledSet { set, labels })
}

/// Where a template was embedded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Placement {
    pub onset: usize,
    pub template: usize,
}

/// Add templates at the given onsets to iid Gaussian noise of standard deviation `noise_sd`.
///
/// Placements must be sorted by onset and must not overlap.
pub fn synth_recording(
    templates: &[TimeSeries],
    placements: &[Placement],
    noise_sd: f64,
    length: usize,
    seed: u64,
) -> Result<Recording> {
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::InvalidSpec(format!("noise sd {noise_sd} is invalid")));
    }
    let mut end_of_previous = 0;
    for (index, p) in placements.iter().enumerate() {
        let tpl = templates
            .get(p.template)
            .ok_or_else(|| Error::InvalidSpec(format!("placement {index} names missing template {}", p.template)))?;
        if index > 0 && p.onset < end_of_previous {
            return Err(Error::OverlapError { index });
        }
        end_of_previous = p.onset + tpl.len();
        if end_of_previous > length {
            return Err(Error::InvalidSpec(format!("placement {index} runs past the recording end")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples: Vec<f64> = if noise_sd > 0.0 {
        (0..length)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                noise_sd * z
            })
            .collect()
    } else {
        vec![0.0; length]
    };
    for p in placements {
        for (s, v) in samples[p.onset..].iter_mut().zip(templates[p.template].values()) {
            *s += v;
        }
    }
    Recording::new(samples)
}

/// Three spike-like shapes of length `len`, each scaled to unit RMS with its
/// maximum at `len / 2`: a broad bump, a narrow bump and a slow damped
/// oscillation. All are slow enough to pass a slowness threshold of 0.25
/// under moderate noise, and their spectra peak in different places.
pub fn builtin_templates(len: usize) -> Result<Vec<TimeSeries>> {
    let c = (len / 2) as f64;
    let gauss = |t: f64, mu: f64, w: f64| {
        let d = (t - mu) / w;
        libm::exp(-0.5 * d * d)
    };
    let shapes: [fn(f64, f64, &dyn Fn(f64, f64, f64) -> f64) -> f64; 3] = [
        |t, c, g| g(t, c, 6.0),
        |t, c, g| g(t, c, 2.0),
        |t, c, g| g(t, c, 8.0) * libm::cos(2.0 * PI * 0.055 * (t - c)),
    ];
    shapes
        .iter()
        .map(|shape| {
            let raw: Vec<f64> = (0..len).map(|t| shape(t as f64, c, &gauss)).collect();
            let rms = libm::sqrt(raw.iter().map(|v| v * v).sum::<f64>() / len as f64);
            TimeSeries::new(raw.into_iter().map(|v| v / rms).collect())
        })
        .collect()
}

/// Layout and noise of a synthetic recording built from [`builtin_templates`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RecordingSpec {
    pub window_len: usize,
    pub occurrences_per_template: usize,
    /// Onset-to-onset distance.
    pub spacing: usize,
    /// Template RMS over noise standard deviation.
    pub snr: f64,
    pub seed: u64,
}

impl Default for RecordingSpec {
    fn default() -> Self {
        Self {
            window_len: 55,
            occurrences_per_template: 40,
            spacing: 200,
            snr: 5.0,
            seed: 0,
        }
    }
}

/// Recording with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRecording {
    pub recording: Recording,
    pub truth: Vec<Placement>,
    pub templates: Vec<TimeSeries>,
}

/// Round-robin template order shuffled deterministically, evenly spaced onsets.
pub fn simulate_recording(spec: &RecordingSpec) -> Result<SyntheticRecording> {
    if spec.spacing < spec.window_len {
        return Err(Error::InvalidSpec("spacing must be at least the window length".into()));
    }
    if !(spec.snr > 0.0) {
        return Err(Error::InvalidSpec("snr must be positive".into()));
    }
    let templates = builtin_templates(spec.window_len)?;
    let total = templates.len() * spec.occurrences_per_template;
    let mut order: Vec<usize> = (0..total).map(|i| i % templates.len()).collect();
    let mut rng = series_rng(spec.seed, usize::MAX);
    use rand::seq::SliceRandom;
    order.shuffle(&mut rng);

    let margin = spec.spacing;
    let truth: Vec<Placement> = order
        .iter()
        .enumerate()
        .map(|(i, &template)| Placement {
            onset: margin + i * spec.spacing,
            template,
        })
        .collect();
    let length = 2 * margin + total * spec.spacing;
    let recording = synth_recording(&templates, &truth, 1.0 / spec.snr, length, spec.seed)?;
    Ok(SyntheticRecording {
        recording,
        truth,
        templates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::argmax;

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(ClassSpec::Ar1 { phi: 1.0 }.validate().is_err());
        assert!(ClassSpec::NoisySine { freq: 0.5, noise_sd: None }.validate().is_err());
        let mut spec = SimSpec::five_class(0);
        spec.n_per_class = 0;
        assert!(matches!(generate(&spec), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SimSpec { n_per_class: 3, ..SimSpec::five_class(9) };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = SimSpec { seed: 10, ..spec.clone() };
        assert_ne!(generate(&spec).unwrap().set, generate(&other).unwrap().set);
    }

    #[test]
    fn labels_follow_class_order() {
        let spec = SimSpec { n_per_class: 2, ..SimSpec::five_class(1) };
        let out = generate(&spec).unwrap();
        assert_eq!(out.labels, vec![0, 0, 1, 1, 2, 2, 3, 3, 4, 4]);
        assert!(out.set.iter().all(TimeSeries::is_standardized));
    }

    #[test]
    fn noiseless_embedding_is_exact() {
        let tpl = builtin_templates(55).unwrap();
        let rec = synth_recording(&tpl, &[Placement { onset: 100, template: 1 }], 0.0, 400, 0).unwrap();
        assert_eq!(&rec.samples()[100..155], tpl[1].values());
        assert!(rec.samples()[..100].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_placements_give_pure_noise() {
        let rec = synth_recording(&[], &[], 1.0, 500, 3).unwrap();
        assert_eq!(rec.len(), 500);
        let var = crate::numeric::population_variance(rec.samples());
        assert!((var - 1.0).abs() < 0.2);
    }

    #[test]
    fn overlapping_placements_error() {
        let tpl = builtin_templates(55).unwrap();
        let p = [Placement { onset: 0, template: 0 }, Placement { onset: 30, template: 1 }];
        assert_eq!(synth_recording(&tpl, &p, 0.1, 400, 0), Err(Error::OverlapError { index: 1 }));
    }

    #[test]
    fn templates_peak_in_the_middle() {
        for t in builtin_templates(55).unwrap() {
            assert_eq!(argmax(t.values()), 27);
            let rms = libm::sqrt(t.values().iter().map(|v| v * v).sum::<f64>() / 55.0);
            assert!((rms - 1.0).abs() < 1e-12);
        }
    }
}
