//! Discrete Fourier transform, periodograms and spectral averages.
//!
//! The transform uses the unitary scaling `X(w_k) = T^{-1/2} sum_t x_t e^{-2 pi i k t / T}`
//! with `t = 0..T-1`, so `sum_k |X(w_k)|^2 = sum_t x_t^2`.
//!
//! Spectra keep the half grid `j = 1..=floor(T/2)`: a standardized series has
//! no DC power and real input makes bins `j` and `T - j` mirror images.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::PMF_FLOOR;
use crate::series::{TimeSeries, TimeSeriesSet};

const PMF_SUM_TOL: f64 = 1e-10;

/// DFT of a real sequence; radix-2 FFT for powers of two, direct sum otherwise.
pub fn dft(x: &[f64]) -> Vec<Complex64> {
    if x.len().is_power_of_two() {
        fft_radix2(x)
    } else {
        dft_direct(x)
    }
}

/// O(T^2) evaluation of the DFT sum.
pub fn dft_direct(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let scale = 1.0 / libm::sqrt(n as f64);
    // Twiddles indexed by (k * t) mod n keep the angle argument small.
    let twiddles: Vec<Complex64> = (0..n)
        .map(|m| {
            let angle = -2.0 * PI * m as f64 / n as f64;
            Complex64::new(libm::cos(angle), libm::sin(angle))
        })
        .collect();
    (0..n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, &xt) in x.iter().enumerate() {
                acc += twiddles[(k * t) % n] * xt;
            }
            acc * scale
        })
        .collect()
}

/// Iterative radix-2 Cooley-Tukey transform.
///
/// # Panics
/// If `x.len()` is not a power of two.
pub fn fft_radix2(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    assert!(n.is_power_of_two(), "fft_radix2 needs a power-of-two length");
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    if n <= 1 {
        return buf;
    }

    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }

    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let twiddles: Vec<Complex64> = (0..half)
            .map(|m| {
                let angle = -2.0 * PI * m as f64 / len as f64;
                Complex64::new(libm::cos(angle), libm::sin(angle))
            })
            .collect();
        for start in (0..n).step_by(len) {
            for m in 0..half {
                let u = buf[start + m];
                let v = buf[start + m + half] * twiddles[m];
                buf[start + m] = u + v;
                buf[start + m + half] = u - v;
            }
        }
        len <<= 1;
    }

    let scale = 1.0 / libm::sqrt(n as f64);
    for v in &mut buf {
        *v *= scale;
    }
    buf
}

/// Whether a [`Spectrum`] holds raw power or a normalized pmf.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SpectrumKind {
    Raw,
    Pmf,
}

/// Power on the Fourier grid `w_j = j / T`, `j = 1..=floor(T/2)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Spectrum {
    power: Vec<f64>,
    series_len: usize,
    kind: SpectrumKind,
}

/// Number of retained bins for a series of length `t`.
pub fn bin_count(series_len: usize) -> usize {
    series_len / 2
}

impl Spectrum {
    /// Raw spectrum; values must be finite and non-negative.
    pub fn raw(power: Vec<f64>, series_len: usize) -> Result<Self> {
        Self::check_values(&power, series_len)?;
        Ok(Self {
            power,
            series_len,
            kind: SpectrumKind::Raw,
        })
    }

    /// Pmf spectrum; values must additionally sum to one.
    pub fn pmf(power: Vec<f64>, series_len: usize) -> Result<Self> {
        Self::check_values(&power, series_len)?;
        let total: f64 = power.iter().sum();
        if (total - 1.0).abs() > PMF_SUM_TOL {
            return Err(Error::InvalidSpectrum(format!("pmf sums to {total}")));
        }
        Ok(Self {
            power,
            series_len,
            kind: SpectrumKind::Pmf,
        })
    }

    fn check_values(power: &[f64], series_len: usize) -> Result<()> {
        let expected = bin_count(series_len);
        if power.len() != expected || expected == 0 {
            return Err(Error::LengthMismatch {
                expected,
                found: power.len(),
            });
        }
        if let Some(j) = power.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidSpectrum(format!(
                "bin {} has power {}",
                j + 1,
                power[j]
            )));
        }
        Ok(())
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    pub fn is_pmf(&self) -> bool {
        self.kind == SpectrumKind::Pmf
    }

    /// Length `T` of the series this spectrum was computed from.
    pub fn series_len(&self) -> usize {
        self.series_len
    }

    /// Number of bins `B`.
    pub fn bins(&self) -> usize {
        self.power.len()
    }

    /// Fourier index `j` of the bin at position `idx`.
    pub fn bin_index(&self, idx: usize) -> usize {
        idx + 1
    }

    /// Frequency in cycles per sample of the bin at position `idx`.
    pub fn frequency(&self, idx: usize) -> f64 {
        (idx + 1) as f64 / self.series_len as f64
    }

    pub fn same_grid(&self, other: &Spectrum) -> bool {
        self.series_len == other.series_len && self.power.len() == other.power.len()
    }

    /// Floor every bin at [`PMF_FLOOR`] and renormalize to sum one.
    pub fn to_pmf(&self) -> Result<Spectrum> {
        if self.is_pmf() {
            return Ok(self.clone());
        }
        if !self.power.iter().any(|&p| p > 0.0) {
            return Err(Error::EmptySpectrum);
        }
        let floored: Vec<f64> = self.power.iter().map(|&p| p.max(PMF_FLOOR)).collect();
        let total: f64 = floored.iter().sum();
        Ok(Spectrum {
            power: floored.into_iter().map(|p| p / total).collect(),
            series_len: self.series_len,
            kind: SpectrumKind::Pmf,
        })
    }
}

/// Raw periodogram `|X(w_j)|^2` on bins `j = 1..=floor(T/2)`.
///
/// Series not flagged as standardized are standardized first.
pub fn periodogram(x: &TimeSeries) -> Result<Spectrum> {
    let standardized;
    let values = if x.is_standardized() {
        x.values()
    } else {
        standardized = x.standardize()?;
        standardized.values()
    };
    let n = values.len();
    let coeffs = dft(values);
    let power = coeffs[1..=bin_count(n)].iter().map(|c| c.norm_sqr()).collect();
    Spectrum::raw(power, n)
}

/// Standardize, take the periodogram and normalize: the representation EM works on.
pub fn pmf_spectrum(x: &TimeSeries) -> Result<Spectrum> {
    periodogram(x)?.to_pmf()
}

pub fn pmf_spectra(set: &TimeSeriesSet) -> Result<Vec<Spectrum>> {
    set.iter().map(pmf_spectrum).collect()
}

pub fn periodograms(set: &TimeSeriesSet) -> Result<Vec<Spectrum>> {
    set.iter().map(periodogram).collect()
}

/// Weighted bin-wise mean `sum_i w_i s_i / sum_i w_i`.
pub fn average_spectra(spectra: &[Spectrum], weights: &[f64]) -> Result<Spectrum> {
    if spectra.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: spectra.len(),
            found: weights.len(),
        });
    }
    let first = spectra.first().ok_or(Error::ZeroTotalWeight)?;
    if spectra.iter().any(|s| !s.same_grid(first)) {
        return Err(Error::MixedGrids);
    }
    if spectra.iter().any(|s| s.kind != first.kind) {
        return Err(Error::MixedKinds);
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidConfig(format!("weights must be non-negative: {weights:?}")));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    let mut power = vec![0.0; first.bins()];
    for (s, &w) in spectra.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for (acc, &p) in power.iter_mut().zip(&s.power) {
            *acc += w * p;
        }
    }
    for p in &mut power {
        *p /= total;
    }
    Ok(Spectrum {
        power,
        series_len: first.series_len,
        kind: first.kind,
    })
}
