//! Clustering families of short time series by their dynamics.
//!
//! Each series is standardized, turned into a periodogram and normalized to a
//! probability mass function over the Fourier frequencies. An EM algorithm
//! then fits a mixture of cluster spectra, using the Kullback-Leibler
//! divergence plus entropy as the per-series log-likelihood.
//!
//! Around that core the crate provides:
//! - [`spectral`]: DFT/FFT, periodograms and spectral averages
//! - [`em`]: the frequency-domain EM itself
//! - [`selection`]: NEC and elbow-based choice of the cluster count
//! - [`spikes`]: slowness statistic and sliding-window spike detection
//! - [`gmm`]: a univariate Gaussian mixture baseline with BIC
//! - [`sim`]: seeded generators for test and demo data
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod em;
pub mod error;
pub mod gmm;
pub mod metrics;
pub mod numeric;
pub mod selection;
pub mod series;
pub mod sim;
pub mod spectral;
pub mod spikes;

pub use em::{run_em, EmConfig, EmResult, EmState, LikelihoodScale, Responsibilities};
pub use error::{Error, Result};
pub use gmm::{fit_gmm1d, Gmm1dModel};
pub use selection::{select_k, SelectionReport};
pub use series::{TimeSeries, TimeSeriesSet};
pub use spectral::{Spectrum, SpectrumKind};
pub use spikes::{detect_spikes, DetectorConfig, Recording, SpikeCatalog};
