use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use specem_core::em::LikelihoodScale;
use specem_core::spikes::PeakPolarity;

#[derive(Debug, Parser)]
#[command(name = "specem", version, about = "Frequency-domain EM clustering of short time series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Raw periodogram of every series, in long format.
    Periodogram {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster series at a fixed K.
    Cluster {
        input: PathBuf,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        em: EmArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit K = 1..k-max and report NEC, entropy and the elbow.
    SelectK {
        input: PathBuf,
        #[arg(long, default_value_t = 9)]
        k_max: usize,
        #[command(flatten)]
        em: EmArgs,
        #[arg(long)]
        out: PathBuf,
        /// Plot-ready table of K, loglik, NEC.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Find slow (spike-like) windows in a recording.
    DetectSpikes {
        input: PathBuf,
        #[arg(long, default_value_t = 55)]
        window: usize,
        #[arg(long, default_value_t = 0.25)]
        tol: f64,
        /// Defaults to half the window.
        #[arg(long)]
        min_separation: Option<usize>,
        /// Defaults to half the window.
        #[arg(long)]
        align_index: Option<usize>,
        #[arg(long, value_enum, default_value_t = Polarity::Positive)]
        polarity: Polarity,
        #[arg(long)]
        out_catalog: PathBuf,
        #[arg(long)]
        out_onsets: PathBuf,
    },
    /// Mixture model of log-slowness over catalog windows, order chosen by BIC.
    GmmSlowness {
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        k_max: usize,
        #[arg(long, default_value_t = 100)]
        restarts: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
        /// Per-spike component assignments.
        #[arg(long)]
        assignments: Option<PathBuf>,
    },
    /// Draw a labelled set of series; without a spec, the five-class design.
    Simulate {
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Overrides the seed in the spec.
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        labels: PathBuf,
    },
    /// Synthetic recording with known spike onsets.
    SimulateRecording {
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Overrides the seed in the spec.
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Five-class simulation, model-order scan and K = 5 clustering against truth.
    ReproSim4 {
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, default_value_t = 6)]
        k_max: usize,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-execute the command recorded in a manifest.
    Rerun { manifest: PathBuf },
}

#[derive(Debug, Clone, Copy, Args)]
pub struct SeedArg {
    /// Master seed; falls back to SPECEM_SEED, then 0.
    #[arg(long, env = "SPECEM_SEED")]
    pub seed: Option<u64>,
}

impl SeedArg {
    pub fn resolve(self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[derive(Debug, Clone, Args)]
pub struct EmArgs {
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// `auto` (number of bins) or a positive number.
    #[arg(long, default_value = "auto", value_parser = parse_scale)]
    pub scale: LikelihoodScale,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub mixing_weights: bool,
}

fn parse_scale(s: &str) -> Result<LikelihoodScale, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(LikelihoodScale::Auto);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(LikelihoodScale::Fixed(v)),
        _ => Err(format!("expected `auto` or a positive number, got {s:?}")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Absolute,
}

impl From<Polarity> for PeakPolarity {
    fn from(p: Polarity) -> Self {
        match p {
            Polarity::Positive => PeakPolarity::Positive,
            Polarity::Absolute => PeakPolarity::Absolute,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn scale_values() {
        assert_eq!(parse_scale("auto"), Ok(LikelihoodScale::Auto));
        assert_eq!(parse_scale("12.5"), Ok(LikelihoodScale::Fixed(12.5)));
        assert!(parse_scale("-1").is_err());
        assert!(parse_scale("x").is_err());
    }

    #[test]
    fn mixing_weights_takes_a_value() {
        let cli = Cli::try_parse_from(["specem", "cluster", "a.csv", "--k", "2", "--out", "o.json", "--mixing-weights", "false"]).unwrap();
        match cli.command {
            Command::Cluster { em, .. } => assert!(!em.mixing_weights),
            _ => unreachable!(),
        }
    }
}
