//! Univariate Gaussian mixtures fitted by EM, with BIC order selection.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numeric::{log_sum_exp, mean, population_variance};

pub const VARIANCE_FLOOR: f64 = 1e-6;
const MIN_COMPONENT_MASS: f64 = 1e-8;
const MAX_ITER: usize = 1000;
const REL_TOL: f64 = 1e-10;
const MAX_RESCUES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Gmm1dModel {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub loglik: f64,
    /// Number of points the model was fitted on.
    pub n: usize,
}

impl Gmm1dModel {
    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn bic(&self) -> f64 {
        bic(self, self.n)
    }

    fn log_joint(&self, x: f64, out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = libm::log(self.weights[k]) + log_normal(x, self.means[k], self.variances[k]);
        }
    }

    /// Log-likelihood of `x` under the mixture.
    pub fn log_likelihood(&self, x: &[f64]) -> f64 {
        let mut buf = vec![0.0; self.k()];
        x.iter()
            .map(|&v| {
                self.log_joint(v, &mut buf);
                log_sum_exp(&buf)
            })
            .sum()
    }

    /// Posterior component probabilities for each point.
    pub fn responsibilities(&self, x: &[f64]) -> Vec<Vec<f64>> {
        x.iter()
            .map(|&v| {
                let mut row = vec![0.0; self.k()];
                self.log_joint(v, &mut row);
                crate::numeric::softmax_in_place(&mut row);
                row
            })
            .collect()
    }

    fn sort_by_mean(&mut self) {
        let mut idx: Vec<usize> = (0..self.k()).collect();
        idx.sort_by(|&a, &b| self.means[a].total_cmp(&self.means[b]));
        self.weights = idx.iter().map(|&i| self.weights[i]).collect();
        self.means = idx.iter().map(|&i| self.means[i]).collect();
        self.variances = idx.iter().map(|&i| self.variances[i]).collect();
    }
}

fn log_normal(x: f64, mu: f64, var: f64) -> f64 {
    let d = x - mu;
    -0.5 * (libm::log(2.0 * PI * var) + d * d / var)
}

/// `2 loglik - (3K - 1) ln n`; larger is better.
pub fn bic(model: &Gmm1dModel, n: usize) -> f64 {
    let params = (3 * model.k() - 1) as f64;
    2.0 * model.loglik - params * libm::log(n as f64)
}

/// Maximum a posteriori component per point, ties toward the smaller index.
pub fn assign(model: &Gmm1dModel, x: &[f64]) -> Vec<usize> {
    let mut buf = vec![0.0; model.k()];
    x.iter()
        .map(|&v| {
            model.log_joint(v, &mut buf);
            crate::numeric::argmax(&buf)
        })
        .collect()
}

/// A fitted model with its optimisation history.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    pub model: Gmm1dModel,
    pub loglik_trace: Vec<f64>,
    pub restart: usize,
    pub converged: bool,
}

struct Params {
    weights: Vec<f64>,
    means: Vec<f64>,
    variances: Vec<f64>,
}

fn quantile_init(sorted: &[f64], k: usize) -> Params {
    let n = sorted.len();
    let means = (0..k)
        .map(|i| {
            let q = (i as f64 + 0.5) / k as f64;
            sorted[((q * n as f64) as usize).min(n - 1)]
        })
        .collect();
    let pooled = (0..k)
        .map(|i| population_variance(&sorted[i * n / k..(i + 1) * n / k]))
        .sum::<f64>()
        / k as f64;
    Params {
        weights: vec![1.0 / k as f64; k],
        means,
        variances: vec![pooled.max(VARIANCE_FLOOR); k],
    }
}

fn run_em(x: &[f64], mut p: Params, pooled: f64) -> Result<(Params, Vec<f64>, bool)> {
    let n = x.len();
    let k = p.weights.len();
    // Row-major n x k responsibilities.
    let mut resp = vec![0.0; n * k];
    let mut point_ll = vec![0.0; n];
    let mut offset = vec![0.0; k];
    let mut inv_var = vec![0.0; k];
    let mut trace = Vec::new();
    let mut rescues = 0;

    for _ in 0..=MAX_ITER {
        // E-step and log-likelihood under the current parameters.
        for c in 0..k {
            offset[c] = libm::log(p.weights[c]) - 0.5 * libm::log(2.0 * PI * p.variances[c]);
            inv_var[c] = 1.0 / p.variances[c];
        }
        let mut total = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            let row = &mut resp[i * k..(i + 1) * k];
            let mut max = f64::NEG_INFINITY;
            for c in 0..k {
                let d = xi - p.means[c];
                row[c] = offset[c] - 0.5 * d * d * inv_var[c];
                max = max.max(row[c]);
            }
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = libm::exp(*v - max);
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
            let lse = max + libm::log(sum);
            point_ll[i] = lse;
            total += lse;
        }
        if let Some(&prev) = trace.last() {
            let rel: f64 = (total - prev) / f64::abs(prev).max(1.0);
            trace.push(total);
            if rel.abs() < REL_TOL {
                return Ok((p, trace, true));
            }
        } else {
            trace.push(total);
        }

        // M-step.
        let mut mass = vec![0.0; k];
        let mut sx = vec![0.0; k];
        for (row, &xi) in resp.chunks_exact(k).zip(x) {
            for c in 0..k {
                mass[c] += row[c];
                sx[c] += row[c] * xi;
            }
        }
        if let Some(c) = mass.iter().position(|&m| m < MIN_COMPONENT_MASS) {
            if rescues == MAX_RESCUES {
                return Err(Error::DegenerateComponent { component: c });
            }
            rescues += 1;
            // Re-seed on the worst-explained point.
            let worst = point_ll
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map_or(0, |(i, _)| i);
            p.means[c] = x[worst];
            p.variances[c] = pooled;
            p.weights[c] = 1.0 / n as f64;
            let s: f64 = p.weights.iter().sum();
            p.weights.iter_mut().for_each(|w| *w /= s);
            trace.clear();
            continue;
        }
        for c in 0..k {
            p.means[c] = sx[c] / mass[c];
        }
        let mut sq = vec![0.0; k];
        for (row, &xi) in resp.chunks_exact(k).zip(x) {
            for c in 0..k {
                let d = xi - p.means[c];
                sq[c] += row[c] * d * d;
            }
        }
        for c in 0..k {
            p.variances[c] = (sq[c] / mass[c]).max(VARIANCE_FLOOR);
            p.weights[c] = mass[c] / n as f64;
        }
    }
    Ok((p, trace, false))
}

/// Fit a `k`-component mixture, keeping the best of `restarts` runs.
///
/// Restart 0 starts from quantile means; later restarts jitter those means
/// by the pooled within-group standard deviation.
pub fn fit_gmm1d_detailed(x: &[f64], k: usize, restarts: usize, seed: u64) -> Result<GmmFit> {
    if k == 0 || restarts == 0 {
        return Err(Error::InvalidConfig("k and restarts must be positive".into()));
    }
    if x.len() < 2 * k {
        return Err(Error::TooFewPoints {
            needed: 2 * k,
            found: x.len(),
        });
    }
    if let Some(index) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let n = x.len();

    if k == 1 {
        let model = Gmm1dModel {
            weights: vec![1.0],
            means: vec![mean(x)],
            variances: vec![population_variance(x).max(VARIANCE_FLOOR)],
            loglik: 0.0,
            n,
        };
        let loglik = model.log_likelihood(x);
        return Ok(GmmFit {
            model: Gmm1dModel { loglik, ..model },
            loglik_trace: vec![loglik],
            restart: 0,
            converged: true,
        });
    }

    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let base = quantile_init(&sorted, k);
    let pooled = base.variances[0];
    let jitter_sd = libm::sqrt(pooled);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<GmmFit> = None;
    let mut last_err = None;
    for restart in 0..restarts {
        let mut init = Params {
            weights: base.weights.clone(),
            means: base.means.clone(),
            variances: base.variances.clone(),
        };
        if restart > 0 {
            for m in &mut init.means {
                let z: f64 = StandardNormal.sample(&mut rng);
                *m += jitter_sd * z;
            }
        }
        match run_em(x, init, pooled) {
            Ok((p, trace, converged)) => {
                let loglik = *trace.last().unwrap_or(&f64::NEG_INFINITY);
                let better = best.as_ref().is_none_or(|b| loglik > b.model.loglik);
                if better {
                    let mut model = Gmm1dModel {
                        weights: p.weights,
                        means: p.means,
                        variances: p.variances,
                        loglik,
                        n,
                    };
                    model.sort_by_mean();
                    best = Some(GmmFit {
                        model,
                        loglik_trace: trace,
                        restart,
                        converged,
                    });
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::DegenerateComponent { component: 0 }))
}

pub fn fit_gmm1d(x: &[f64], k: usize, restarts: usize, seed: u64) -> Result<Gmm1dModel> {
    fit_gmm1d_detailed(x, k, restarts, seed).map(|f| f.model)
}

/// BIC scan over `k = 1..=k_max`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BicScan {
    pub entries: Vec<BicEntry>,
    pub best_k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BicEntry {
    pub k: usize,
    pub bic: Option<f64>,
    pub model: Option<Gmm1dModel>,
    pub error: Option<String>,
}

impl BicScan {
    pub fn best_model(&self) -> Option<&Gmm1dModel> {
        let k = self.best_k?;
        self.entries.iter().find(|e| e.k == k)?.model.as_ref()
    }
}

pub fn scan_bic(x: &[f64], k_max: usize, restarts: usize, seed: u64) -> BicScan {
    let entries: Vec<BicEntry> = (1..=k_max)
        .map(|k| match fit_gmm1d(x, k, restarts, seed) {
            Ok(m) => BicEntry {
                k,
                bic: Some(m.bic()),
                model: Some(m),
                error: None,
            },
            Err(e) => BicEntry {
                k,
                bic: None,
                model: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let best_k = entries
        .iter()
        .filter_map(|e| e.bic.map(|b| (e.k, b)))
        .fold(None::<(usize, f64)>, |best, (k, b)| match best {
            Some((_, bb)) if bb >= b => best,
            _ => Some((k, b)),
        })
        .map(|(k, _)| k);
    BicScan { entries, best_k }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_component_is_closed_form() {
        let x = [1.0, 2.0, 4.0, 7.0, -3.0, 0.5];
        let m = fit_gmm1d(&x, 1, 3, 0).unwrap();
        assert_eq!(m.means[0], mean(&x));
        assert_eq!(m.variances[0], population_variance(&x));
        assert_eq!(m.weights, vec![1.0]);
    }

    #[test]
    fn bic_penalty_grows_with_log_n() {
        let m = Gmm1dModel {
            weights: vec![0.5, 0.5],
            means: vec![0.0, 1.0],
            variances: vec![1.0, 1.0],
            loglik: -100.0,
            n: 100,
        };
        let a = bic(&m, 100);
        let b = bic(&Gmm1dModel { loglik: -200.0, ..m.clone() }, 200);
        assert!((a - (-200.0 - 5.0 * libm::log(100.0))).abs() < 1e-12);
        assert!(((2.0 * a - b) - 5.0 * (libm::log(200.0) - 2.0 * libm::log(100.0))).abs() < 1e-9);
    }

    #[test]
    fn assign_examples() {
        let m = Gmm1dModel {
            weights: vec![0.5, 0.5],
            means: vec![-5.0, 5.0],
            variances: vec![1.0, 1.0],
            loglik: 0.0,
            n: 10,
        };
        assert_eq!(assign(&m, &[-5.0, 5.0, 0.0]), vec![0, 1, 0]);
        let one = Gmm1dModel {
            weights: vec![1.0],
            means: vec![0.0],
            variances: vec![1.0],
            loglik: 0.0,
            n: 10,
        };
        assert_eq!(assign(&one, &[-3.0, 0.0, 8.0]), vec![0, 0, 0]);
    }

    #[test]
    fn rejects_too_few_points() {
        assert_eq!(
            fit_gmm1d(&[1.0, 2.0, 3.0], 2, 1, 0),
            Err(Error::TooFewPoints { needed: 4, found: 3 })
        );
    }

    #[test]
    fn two_point_clouds_recover_proportions() {
        // 300 points near 0 and 100 near 10, spread deterministically.
        let mut x = Vec::new();
        for i in 0..300 {
            x.push((i as f64 / 299.0 - 0.5) * 0.4);
        }
        for i in 0..100 {
            x.push(10.0 + (i as f64 / 99.0 - 0.5) * 0.4);
        }
        let m = fit_gmm1d(&x, 2, 5, 1).unwrap();
        assert!((m.weights[0] - 0.75).abs() < 1e-3);
        assert!((m.weights[1] - 0.25).abs() < 1e-3);
        assert!(m.means[0] < m.means[1]);
    }
}
