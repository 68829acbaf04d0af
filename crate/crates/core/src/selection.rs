//! Choosing the number of clusters: normalized entropy criterion and the likelihood elbow.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::em::{run_em_spectra, EmConfig, EmResult, Responsibilities};
use crate::error::{Error, Result};
use crate::numeric::PMF_FLOOR;
use crate::series::TimeSeriesSet;
use crate::spectral::{pmf_spectra, Spectrum};

/// `E(K) = -sum_i sum_k g_ik ln g_ik`; entries at or below the pmf floor contribute nothing.
pub fn classification_entropy(gamma: &Responsibilities) -> f64 {
    gamma
        .rows()
        .iter()
        .flat_map(|row| row.iter())
        .filter(|&&g| g > PMF_FLOOR)
        .fold(0.0, |acc, &g| acc - g * libm::log(g))
}

/// `NEC(K) = E(K) / (l*(K) - l(1))`.
pub fn nec(k: usize, entropy: f64, loglik_k: f64, loglik_1: f64) -> Result<f64> {
    let gain = loglik_k - loglik_1;
    if k < 2 || !(gain > 0.0) {
        return Err(Error::UndefinedNec { k });
    }
    Ok(entropy / gain)
}

/// Elbow of a likelihood curve indexed from `K = 1`.
///
/// Picks the interior `K` with the largest drop in marginal gain
/// `(l(K) - l(K-1)) - (l(K+1) - l(K))`; ties go to the smaller `K`.
pub fn elbow(logliks: &[f64]) -> Result<usize> {
    if logliks.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            found: logliks.len(),
        });
    }
    let mut best_k = 2;
    let mut best_drop = f64::NEG_INFINITY;
    for idx in 1..logliks.len() - 1 {
        let drop = (logliks[idx] - logliks[idx - 1]) - (logliks[idx + 1] - logliks[idx]);
        if drop > best_drop {
            best_drop = drop;
            best_k = idx + 1;
        }
    }
    Ok(best_k)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KRecord {
    pub k: usize,
    pub best_loglik: Option<f64>,
    pub entropy: Option<f64>,
    pub nec: Option<f64>,
    /// Why this `K` has no result, if it failed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SelectionReport {
    pub records: Vec<KRecord>,
    pub nec_global_min: Option<usize>,
    pub nec_local_minima: Vec<usize>,
    pub elbow_k: Option<usize>,
    pub recommended_k: Option<usize>,
}

impl SelectionReport {
    /// Assemble the report from per-`K` EM outcomes, `outcomes[0]` being `K = 1`.
    pub fn from_outcomes(outcomes: &[Result<EmResult>]) -> Self {
        let loglik_1 = outcomes
            .first()
            .and_then(|r| r.as_ref().ok())
            .map(|r| r.state.loglik);

        let records: Vec<KRecord> = outcomes
            .iter()
            .enumerate()
            .map(|(idx, outcome)| {
                let k = idx + 1;
                match outcome {
                    Ok(r) => {
                        let e = classification_entropy(&r.state.gamma);
                        let nec = loglik_1.and_then(|l1| nec(k, e, r.state.loglik, l1).ok());
                        KRecord {
                            k,
                            best_loglik: Some(r.state.loglik),
                            entropy: Some(e),
                            nec,
                            error: None,
                        }
                    }
                    Err(e) => KRecord {
                        k,
                        best_loglik: None,
                        entropy: None,
                        nec: None,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect();

        let nec_global_min = records
            .iter()
            .filter_map(|r| r.nec.map(|v| (r.k, v)))
            .fold(None::<(usize, f64)>, |best, (k, v)| match best {
                Some((_, bv)) if bv <= v => best,
                _ => Some((k, v)),
            })
            .map(|(k, _)| k);

        let nec_local_minima = local_minima(&records);

        let logliks: Option<Vec<f64>> = records.iter().map(|r| r.best_loglik).collect();
        let elbow_k = logliks.and_then(|l| elbow(&l).ok());

        let recommended_k = match elbow_k {
            Some(e) => Some(
                nec_local_minima
                    .iter()
                    .copied()
                    .find(|&k| k >= e)
                    .unwrap_or(e),
            ),
            None => nec_global_min,
        };

        Self {
            records,
            nec_global_min,
            nec_local_minima,
            elbow_k,
            recommended_k,
        }
    }
}

/// Interior `K` whose NEC is strictly below both neighbours.
fn local_minima(records: &[KRecord]) -> Vec<usize> {
    records
        .windows(3)
        .filter_map(|w| match (w[0].nec, w[1].nec, w[2].nec) {
            (Some(a), Some(b), Some(c)) if b < a && b < c => Some(w[1].k),
            _ => None,
        })
        .collect()
}

/// Run EM for `K = 1..=k_max` on pmf spectra and summarize.
pub fn select_k_spectra(spectra: &[Spectrum], k_max: usize, template: &EmConfig) -> Result<SelectionReport> {
    if k_max < 2 {
        return Err(Error::InvalidConfig("k_max must be at least 2".into()));
    }
    let outcomes: Vec<Result<EmResult>> = (1..=k_max)
        .map(|k| run_em_spectra(spectra, &EmConfig { k, ..template.clone() }))
        .collect();
    Ok(SelectionReport::from_outcomes(&outcomes))
}

pub fn select_k(data: &TimeSeriesSet, k_max: usize, template: &EmConfig) -> Result<SelectionReport> {
    let spectra = pmf_spectra(data)?;
    select_k_spectra(&spectra, k_max, template)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn entropy_examples() {
        let binary = Responsibilities::from_assignment(&[0, 1, 1, 0], 2).unwrap();
        assert_eq!(classification_entropy(&binary), 0.0);

        let half = Responsibilities::from_rows(vec![vec![0.5, 0.5]]).unwrap();
        assert!((classification_entropy(&half) - core::f64::consts::LN_2).abs() < 1e-15);

        let uniform = Responsibilities::from_rows(vec![vec![0.25; 4]; 6]).unwrap();
        assert!((classification_entropy(&uniform) - 6.0 * libm::log(4.0)).abs() < 1e-12);
    }

    #[test]
    fn nec_examples() {
        assert_eq!(nec(2, 0.0, -5.0, -20.0).unwrap(), 0.0);
        let v = nec(3, core::f64::consts::LN_2, 10.0, 0.0).unwrap();
        assert!((v - 0.069_314_718_055_994_53).abs() < 1e-9);
        assert_eq!(nec(2, 0.3, -7.0, -7.0), Err(Error::UndefinedNec { k: 2 }));
        assert_eq!(nec(1, 0.0, 1.0, 0.0), Err(Error::UndefinedNec { k: 1 }));
    }

    #[test]
    fn elbow_examples() {
        assert_eq!(elbow(&[0.0, 100.0, 101.0, 102.0]).unwrap(), 2);
        // Drops: K=2: 50-50=0, K=3: 50-1=49, K=4: 1-1=0.
        assert_eq!(elbow(&[0.0, 50.0, 100.0, 101.0, 102.0]).unwrap(), 3);
        assert_eq!(elbow(&[0.0, 1.0, 2.0, 3.0, 4.0]).unwrap(), 2);
        assert_eq!(elbow(&[0.0, 1.0]), Err(Error::TooFewPoints { needed: 3, found: 2 }));
    }

    fn record(k: usize, nec: Option<f64>) -> KRecord {
        KRecord {
            k,
            best_loglik: Some(0.0),
            entropy: Some(0.0),
            nec,
            error: None,
        }
    }

    #[test]
    fn local_minima_are_strict_and_interior() {
        let recs = vec![
            record(1, None),
            record(2, Some(0.1)),
            record(3, Some(0.5)),
            record(4, Some(0.3)),
            record(5, Some(0.3)),
            record(6, Some(0.2)),
            record(7, Some(0.4)),
        ];
        assert_eq!(local_minima(&recs), vec![6]);
    }
}
