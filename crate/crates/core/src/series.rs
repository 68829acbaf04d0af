//! Time series containers and standardization.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numeric::{mean, population_variance};

/// Shortest series accepted anywhere in the crate.
pub const MIN_SERIES_LEN: usize = 4;

/// Relative variance threshold below which a series counts as constant.
const ZERO_VARIANCE_REL: f64 = 1e-14;

/// A finite, real-valued series of length at least [`MIN_SERIES_LEN`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimeSeries {
    values: Vec<f64>,
    standardized: bool,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < MIN_SERIES_LEN {
            return Err(Error::SeriesTooShort {
                len: values.len(),
                min: MIN_SERIES_LEN,
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            values,
            standardized: false,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Rescale to zero mean and unit population variance.
    pub fn standardize(&self) -> Result<TimeSeries> {
        Ok(TimeSeries {
            values: standardize_values(&self.values)?,
            standardized: true,
        })
    }
}

/// True when the population variance is zero relative to the signal energy.
pub(crate) fn is_degenerate(values: &[f64]) -> bool {
    let var = population_variance(values);
    let energy = values.iter().map(|v| v * v).sum::<f64>() / values.len().max(1) as f64;
    !(var > ZERO_VARIANCE_REL * energy)
}

pub(crate) fn standardize_values(values: &[f64]) -> Result<Vec<f64>> {
    if is_degenerate(values) {
        return Err(Error::ZeroVarianceSeries);
    }
    let m = mean(values);
    let sd = libm::sqrt(population_variance(values));
    Ok(values.iter().map(|v| (v - m) / sd).collect())
}

/// `N >= 1` series sharing one length, with optional names.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimeSeriesSet {
    series: Vec<TimeSeries>,
    labels: Option<Vec<String>>,
}

impl TimeSeriesSet {
    pub fn new(series: Vec<TimeSeries>) -> Result<Self> {
        let first = series.first().ok_or(Error::EmptySet)?;
        let expected = first.len();
        if let Some((index, s)) = series.iter().enumerate().find(|(_, s)| s.len() != expected) {
            return Err(Error::RaggedSet {
                index,
                expected,
                found: s.len(),
            });
        }
        Ok(Self {
            series,
            labels: None,
        })
    }

    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let series = columns
            .into_iter()
            .map(TimeSeries::new)
            .collect::<Result<Vec<_>>>()?;
        Self::new(series)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.series.len() {
            return Err(Error::LabelMismatch {
                labels: labels.len(),
                series: self.series.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn series(&self) -> &[TimeSeries] {
        &self.series
    }

    pub fn iter(&self) -> core::slice::Iter<'_, TimeSeries> {
        self.series.iter()
    }

    /// Number of series `N`.
    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    /// Common length `T`.
    pub fn series_len(&self) -> usize {
        self.series[0].len()
    }

    pub fn standardized(&self) -> Result<Self> {
        let series = self
            .series
            .iter()
            .map(TimeSeries::standardize)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            series,
            labels: self.labels.clone(),
        })
    }
}

impl<'a> IntoIterator for &'a TimeSeriesSet {
    type Item = &'a TimeSeries;
    type IntoIter = core::slice::Iter<'a, TimeSeries>;

    fn into_iter(self) -> Self::IntoIter {
        self.series.iter()
    }
}
