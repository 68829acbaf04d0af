//! Frequency-domain EM: mixture clustering of series through their normalized periodograms.
//!
//! Each series is represented by its periodogram pmf `p_i` over `B` Fourier
//! bins. A cluster is a pmf `f_k` on the same bins. The log-likelihood of
//! series `i` under cluster `k` is
//!
//! ```text
//! l_ik = -s * [ KL(p_i || f_k) + H(p_i) ] = s * sum_j p_ij ln f_kj
//! ```
//!
//! where `s` is the likelihood scale (the number of bins by default, i.e. the
//! number of unobserved Fourier frequencies). The E-step is a softmax of
//! `ln pi_k + l_ik` over `k`; the M-step sets `f_k` to the responsibility
//! weighted mean of the `p_i`, which maximizes the expected complete-data
//! log-likelihood, so the overall likelihood never decreases.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numeric::{argmax, log_sum_exp, softmax_in_place};
use crate::series::TimeSeriesSet;
use crate::spectral::{average_spectra, pmf_spectra, Spectrum};

/// Mass below which a cluster counts as empty.
const EMPTY_CLUSTER_MASS: f64 = 1e-12;
/// Empty-cluster rescues allowed per restart.
const MAX_RESCUES: usize = 3;

/// Multiplier turning KL + entropy into a log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum LikelihoodScale {
    /// Number of frequency bins `B`.
    #[default]
    Auto,
    Fixed(f64),
}

impl LikelihoodScale {
    pub fn resolve(self, bins: usize) -> f64 {
        match self {
            LikelihoodScale::Auto => bins as f64,
            LikelihoodScale::Fixed(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmConfig {
    pub k: usize,
    pub max_iter: usize,
    /// Relative change of the total log-likelihood that counts as converged.
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
    pub likelihood_scale: LikelihoodScale,
    /// Weight the E-step softmax by the mixing weights.
    pub use_mixing_weights_in_estep: bool,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            k: 2,
            max_iter: 500,
            tol: 1e-8,
            restarts: 10,
            seed: 0,
            likelihood_scale: LikelihoodScale::Auto,
            use_mixing_weights_in_estep: true,
        }
    }
}

impl EmConfig {
    pub fn with_k(k: usize) -> Self {
        Self {
            k,
            ..Self::default()
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.max_iter == 0 || self.restarts == 0 {
            return Err(Error::InvalidConfig(
                "max_iter and restarts must be positive".into(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if let LikelihoodScale::Fixed(s) = self.likelihood_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidConfig(format!("likelihood scale must be positive, got {s}")));
            }
        }
        if self.k > n {
            return Err(Error::InvalidConfig(format!(
                "k = {} exceeds the number of series {n}",
                self.k
            )));
        }
        Ok(())
    }
}

/// Row-stochastic `N x K` matrix of cluster responsibilities.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Responsibilities {
    rows: Vec<Vec<f64>>,
}

impl Responsibilities {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || k == 0 {
            return Err(Error::EmptySet);
        }
        for row in &rows {
            if row.len() != k {
                return Err(Error::LengthMismatch {
                    expected: k,
                    found: row.len(),
                });
            }
            let sum: f64 = row.iter().sum();
            if row.iter().any(|g| !(0.0..=1.0 + 1e-12).contains(g)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "responsibility row {row:?} is not a probability vector"
                )));
            }
        }
        Ok(Self { rows })
    }

    /// One-hot rows from hard labels.
    pub fn from_assignment(labels: &[usize], k: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::InvalidConfig(format!("label {bad} out of range for k = {k}")));
        }
        let rows = labels
            .iter()
            .map(|&l| {
                let mut row = vec![0.0; k];
                row[l] = 1.0;
                row
            })
            .collect();
        Ok(Self { rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn k(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.rows[i][k]
    }

    /// Effective cluster sizes `N_k`.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.k()];
        for row in &self.rows {
            for (s, g) in sums.iter_mut().zip(row) {
                *s += g;
            }
        }
        sums
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[k]).collect()
    }

    pub fn mixing_weights(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.column_sums().into_iter().map(|s| s / n).collect()
    }

    /// Argmax per row, ties toward the smaller cluster index.
    pub fn hard_assignment(&self) -> Vec<usize> {
        self.rows.iter().map(|r| argmax(r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmState {
    pub gamma: Responsibilities,
    pub pi: Vec<f64>,
    pub cluster_spectra: Vec<Spectrum>,
    pub loglik: f64,
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmResult {
    pub state: EmState,
    /// Total log-likelihood after every M-step (since the last rescue, if any).
    pub loglik_trace: Vec<f64>,
    pub converged: bool,
    pub hard_assignment: Vec<usize>,
    /// Restart that produced this result.
    pub restart: usize,
    /// Empty-cluster rescues performed during the winning restart.
    pub rescues: usize,
}

fn check_pmf_pair(p: &Spectrum, q: &Spectrum) -> Result<()> {
    if !p.same_grid(q) {
        return Err(Error::MixedGrids);
    }
    if !p.is_pmf() || !q.is_pmf() {
        return Err(Error::MixedKinds);
    }
    Ok(())
}

/// `KL(p || q) = sum_j p_j ln(p_j / q_j)` in nats.
pub fn kl_divergence(p: &Spectrum, q: &Spectrum) -> Result<f64> {
    check_pmf_pair(p, q)?;
    Ok(p.power()
        .iter()
        .zip(q.power())
        .filter(|(&pj, _)| pj > 0.0)
        .map(|(&pj, &qj)| pj * libm::log(pj / qj))
        .sum())
}

/// Shannon entropy in nats.
pub fn entropy(p: &Spectrum) -> f64 {
    -p.power()
        .iter()
        .filter(|&&pj| pj > 0.0)
        .map(|&pj| pj * libm::log(pj))
        .sum::<f64>()
}

/// `sum_j p_j ln q_j`, the negative cross-entropy.
pub fn expected_log(p: &Spectrum, q: &Spectrum) -> Result<f64> {
    check_pmf_pair(p, q)?;
    Ok(expected_log_unchecked(p.power(), q.power()))
}

fn expected_log_unchecked(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(&pj, &qj)| pj * libm::log(qj)).sum()
}

/// Log-likelihood of an observed pmf under a model pmf: `-scale * (KL + H)`.
pub fn spectral_loglik(obs: &Spectrum, model: &Spectrum, scale: f64) -> Result<f64> {
    Ok(-scale * (kl_divergence(obs, model)? + entropy(obs)))
}

fn check_spectra(spectra: &[Spectrum]) -> Result<()> {
    let first = spectra.first().ok_or(Error::EmptySet)?;
    for s in spectra {
        if !s.same_grid(first) {
            return Err(Error::MixedGrids);
        }
        if !s.is_pmf() {
            return Err(Error::MixedKinds);
        }
    }
    Ok(())
}

/// `l_ik` for every series/cluster pair.
fn loglik_matrix(spectra: &[Spectrum], clusters: &[Spectrum], scale: f64) -> Vec<Vec<f64>> {
    // Precompute ln f_k once per cluster.
    let log_clusters: Vec<Vec<f64>> = clusters
        .iter()
        .map(|c| c.power().iter().map(|&v| libm::log(v)).collect())
        .collect();
    spectra
        .iter()
        .map(|s| {
            log_clusters
                .iter()
                .map(|lf| scale * s.power().iter().zip(lf).map(|(p, l)| p * l).sum::<f64>())
                .collect()
        })
        .collect()
}

/// Per-series log-likelihood of every cluster, `l_ik`.
pub fn cluster_logliks(spectra: &[Spectrum], clusters: &[Spectrum], scale: f64) -> Result<Vec<Vec<f64>>> {
    check_spectra(spectra)?;
    for c in clusters {
        check_pmf_pair(&spectra[0], c)?;
    }
    Ok(loglik_matrix(spectra, clusters, scale))
}

fn log_weights(pi: &[f64]) -> Vec<f64> {
    pi.iter()
        .map(|&p| if p > 0.0 { libm::log(p) } else { f64::NEG_INFINITY })
        .collect()
}

/// E-step: responsibilities from the current cluster spectra, then mixing weights `N_k / N`.
pub fn e_step(spectra: &[Spectrum], state: &EmState, cfg: &EmConfig) -> Result<(Responsibilities, Vec<f64>)> {
    let scale = cfg.likelihood_scale.resolve(spectra.first().ok_or(Error::EmptySet)?.bins());
    let ll = cluster_logliks(spectra, &state.cluster_spectra, scale)?;
    let gamma = e_step_from_logliks(ll, &state.pi, cfg.use_mixing_weights_in_estep);
    let pi = gamma.mixing_weights();
    Ok((gamma, pi))
}

fn e_step_from_logliks(mut ll: Vec<Vec<f64>>, pi: &[f64], use_weights: bool) -> Responsibilities {
    let lw = log_weights(pi);
    for row in &mut ll {
        if use_weights {
            for (v, w) in row.iter_mut().zip(&lw) {
                *v += w;
            }
        }
        softmax_in_place(row);
    }
    Responsibilities { rows: ll }
}

/// M-step: responsibility-weighted average pmf per cluster.
pub fn m_step(spectra: &[Spectrum], gamma: &Responsibilities) -> Result<Vec<Spectrum>> {
    check_spectra(spectra)?;
    if gamma.n() != spectra.len() {
        return Err(Error::LengthMismatch {
            expected: spectra.len(),
            found: gamma.n(),
        });
    }
    let sizes = gamma.column_sums();
    if let Some(cluster) = sizes.iter().position(|&s| !(s > EMPTY_CLUSTER_MASS)) {
        return Err(Error::EmptyCluster { cluster });
    }
    (0..gamma.k())
        .map(|k| average_spectra(spectra, &gamma.column(k)))
        .collect()
}

/// `sum_i ln sum_k pi_k exp(l_ik)`.
pub fn total_loglik(spectra: &[Spectrum], state: &EmState, cfg: &EmConfig) -> Result<f64> {
    let scale = cfg.likelihood_scale.resolve(spectra.first().ok_or(Error::EmptySet)?.bins());
    let ll = cluster_logliks(spectra, &state.cluster_spectra, scale)?;
    Ok(total_from_logliks(&ll, &state.pi))
}

fn total_from_logliks(ll: &[Vec<f64>], pi: &[f64]) -> f64 {
    let lw = log_weights(pi);
    let mut buf = vec![0.0; pi.len()];
    ll.iter()
        .map(|row| {
            for ((b, l), w) in buf.iter_mut().zip(row).zip(&lw) {
                *b = l + w;
            }
            log_sum_exp(&buf)
        })
        .sum()
}

/// Series whose largest responsibility is smallest; ties go to members of the biggest cluster.
fn rescue_candidate(gamma: &Responsibilities) -> usize {
    let sizes = gamma.column_sums();
    let mut best = 0;
    let mut best_key = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, row) in gamma.rows.iter().enumerate() {
        let home = argmax(row);
        let key = (row[home], sizes[home]);
        if key.0 < best_key.0 || (key.0 == best_key.0 && key.1 > best_key.1) {
            best = i;
            best_key = key;
        }
    }
    best
}

fn rescue(gamma: &mut Responsibilities, cluster: usize) {
    let i = rescue_candidate(gamma);
    for (k, g) in gamma.rows[i].iter_mut().enumerate() {
        *g = if k == cluster { 1.0 } else { 0.0 };
    }
}

/// One EM run from the given responsibilities.
fn run_single(
    spectra: &[Spectrum],
    mut gamma: Responsibilities,
    cfg: &EmConfig,
    scale: f64,
    restart: usize,
) -> Result<EmResult> {
    let mut rescues = 0;
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iteration = 0;

    loop {
        let clusters = match m_step(spectra, &gamma) {
            Ok(c) => c,
            Err(Error::EmptyCluster { cluster }) => {
                if rescues == MAX_RESCUES {
                    return Err(Error::EmptyCluster { cluster });
                }
                rescues += 1;
                rescue(&mut gamma, cluster);
                trace.clear();
                continue;
            }
            Err(e) => return Err(e),
        };
        let pi = gamma.mixing_weights();
        let ll = loglik_matrix(spectra, &clusters, scale);
        let total = total_from_logliks(&ll, &pi);
        if let Some(&prev) = trace.last() {
            let rel = (total - prev).abs() / prev.abs().max(f64::MIN_POSITIVE);
            if rel < cfg.tol {
                converged = true;
            }
        }
        trace.push(total);

        if converged || iteration == cfg.max_iter {
            let hard_assignment = gamma.hard_assignment();
            return Ok(EmResult {
                state: EmState {
                    gamma,
                    pi,
                    cluster_spectra: clusters,
                    loglik: total,
                    iteration,
                },
                loglik_trace: trace,
                converged,
                hard_assignment,
                restart,
                rescues,
            });
        }

        gamma = e_step_from_logliks(ll, &pi, cfg.use_mixing_weights_in_estep);
        iteration += 1;
    }
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

/// Uniform random hard assignment of `n` series to `k` clusters.
pub fn random_assignment(n: usize, k: usize, seed: u64, restart: usize) -> Vec<usize> {
    let mut rng = restart_rng(seed, restart);
    (0..n).map(|_| rng.random_range(0..k)).collect()
}

/// Single EM run started from a hard assignment.
pub fn run_em_from_assignment(spectra: &[Spectrum], init: &[usize], cfg: &EmConfig) -> Result<EmResult> {
    check_spectra(spectra)?;
    cfg.validate(spectra.len())?;
    if init.len() != spectra.len() {
        return Err(Error::LengthMismatch {
            expected: spectra.len(),
            found: init.len(),
        });
    }
    let gamma = Responsibilities::from_assignment(init, cfg.k)?;
    run_single(spectra, gamma, cfg, cfg.likelihood_scale.resolve(spectra[0].bins()), 0)
}

/// Best of `cfg.restarts` random-start EM runs on precomputed pmf spectra.
pub fn run_em_spectra(spectra: &[Spectrum], cfg: &EmConfig) -> Result<EmResult> {
    check_spectra(spectra)?;
    let n = spectra.len();
    if cfg.k > n {
        return Err(Error::DegenerateRun);
    }
    cfg.validate(n)?;
    let scale = cfg.likelihood_scale.resolve(spectra[0].bins());

    let mut best: Option<EmResult> = None;
    for restart in 0..cfg.restarts {
        let init = random_assignment(n, cfg.k, cfg.seed, restart);
        let gamma = Responsibilities::from_assignment(&init, cfg.k)?;
        let result = match run_single(spectra, gamma, cfg, scale, restart) {
            Ok(r) => r,
            Err(Error::EmptyCluster { .. }) => continue,
            Err(e) => return Err(e),
        };
        let better = best
            .as_ref()
            .is_none_or(|b| result.state.loglik > b.state.loglik);
        if better {
            best = Some(result);
        }
    }
    best.ok_or(Error::DegenerateRun)
}

/// Standardize, transform and cluster a set of series.
pub fn run_em(data: &TimeSeriesSet, cfg: &EmConfig) -> Result<EmResult> {
    let spectra = pmf_spectra(data)?;
    run_em_spectra(&spectra, cfg)
}
