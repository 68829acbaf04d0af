//! Subcommand implementations and their JSON output documents.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use clap::Parser;
use serde::{Deserialize, Serialize};
use serde_json::json;
use specem_core::gmm::{self, Gmm1dModel};
use specem_core::metrics::{adjusted_rand_index, ConfusionMatrix};
use specem_core::sim::{self, ClassSpec, RecordingSpec, SimSpec};
use specem_core::spectral::periodograms;
use specem_core::spikes::slowness;
use specem_core::{detect_spikes, run_em, select_k, DetectorConfig, EmConfig, SelectionReport};

use crate::cli::{Cli, Command, EmArgs};
use crate::error::IoError;
use crate::io;
use crate::manifest::{sidecar_path, RunManifest};

/// Failure of a command, split by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] IoError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl From<specem_core::Error> for CliError {
    fn from(e: specem_core::Error) -> Self {
        match e {
            specem_core::Error::InvalidConfig(msg) => CliError::Usage(msg),
            other => CliError::Data(IoError::Core(other)),
        }
    }
}

/// Attach the file name to a data error.
fn in_file(path: &Path) -> impl Fn(IoError) -> CliError + '_ {
    move |e| match e {
        IoError::Open { .. } => CliError::Data(e),
        other => CliError::Data(IoError::InFile {
            path: path.display().to_string(),
            source: Box::new(other),
        }),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ClusterOutput {
    pub manifest: RunManifest,
    pub series: Vec<String>,
    pub k: usize,
    /// Frequencies `j / T` of the spectral bins.
    pub frequencies: Vec<f64>,
    pub gamma: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
    /// One normalized spectrum per cluster.
    pub cluster_spectra: Vec<Vec<f64>>,
    pub hard_assignment: Vec<usize>,
    pub loglik: f64,
    pub loglik_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub restart: usize,
    pub rescues: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SelectKOutput {
    pub manifest: RunManifest,
    #[serde(flatten)]
    pub report: SelectionReport,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BicRow {
    pub k: usize,
    pub bic: Option<f64>,
    pub loglik: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GmmOutput {
    pub manifest: RunManifest,
    /// Natural log of each window's slowness.
    pub features: Vec<f64>,
    pub scan: Vec<BicRow>,
    pub best_k: Option<usize>,
    pub model: Option<Gmm1dModel>,
    pub assignments: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReproOutput {
    pub manifest: RunManifest,
    pub selection: SelectionReport,
    pub k: usize,
    pub class_names: Vec<String>,
    /// Rows are true classes, columns clusters.
    pub confusion: Vec<Vec<usize>>,
    /// Share of each class in its plurality cluster.
    pub class_recall: Vec<f64>,
    /// Share of that cluster belonging to the class.
    pub cluster_precision: Vec<f64>,
    pub purity: f64,
    pub adjusted_rand_index: f64,
    pub loglik: f64,
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| IoError::Open {
            path: path.display().to_string(),
            source,
        })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Open {
        path: path.display().to_string(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn em_config(k: usize, em: &EmArgs) -> EmConfig {
    EmConfig {
        k,
        max_iter: em.max_iter,
        tol: em.tol,
        restarts: em.restarts,
        seed: em.seed.resolve(),
        likelihood_scale: em.scale,
        use_mixing_weights_in_estep: em.mixing_weights,
    }
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

/// Record the resolved seed in the argument list so a rerun does not depend on the environment.
fn pin_seed(mut args: Vec<String>, seed: Option<u64>) -> Vec<String> {
    if let Some(s) = seed {
        if !args.iter().any(|a| a == "--seed" || a.starts_with("--seed=")) {
            args.push("--seed".into());
            args.push(s.to_string());
        }
    }
    args
}

/// Run a parsed command line. `args` are the arguments after the program name.
pub fn run(cli: Cli, args: Vec<String>) -> Result<(), CliError> {
    match cli.command {
        Command::Periodogram { input, out } => {
            let set = io::read_series_csv(&input).map_err(in_file(&input))?;
            let spectra = periodograms(&set)?;
            io::write_spectra_csv(&io::series_names(&set), &spectra, create(&out)?)?;
            let mut m = RunManifest::new("periodogram", json!({}), args);
            m.add_input(&input)?;
            write_json(&sidecar_path(&out), &m)?;
        }
        Command::Cluster { input, k, em, out } => {
            let cfg = em_config(k, &em);
            let args = pin_seed(args, Some(cfg.seed));
            let set = io::read_series_csv(&input).map_err(in_file(&input))?;
            let result = run_em(&set, &cfg)?;
            let mut manifest = RunManifest::new("cluster", to_value(&cfg), args);
            manifest.add_input(&input)?;
            let first = &result.state.cluster_spectra[0];
            let output = ClusterOutput {
                manifest,
                series: io::series_names(&set),
                k,
                frequencies: (0..first.bins()).map(|i| first.frequency(i)).collect(),
                gamma: result.state.gamma.rows().to_vec(),
                pi: result.state.pi.clone(),
                cluster_spectra: result.state.cluster_spectra.iter().map(|s| s.power().to_vec()).collect(),
                hard_assignment: result.hard_assignment.clone(),
                loglik: result.state.loglik,
                loglik_trace: result.loglik_trace.clone(),
                converged: result.converged,
                iterations: result.state.iteration,
                restart: result.restart,
                rescues: result.rescues,
            };
            write_json(&out, &output)?;
        }
        Command::SelectK {
            input,
            k_max,
            em,
            out,
            curve,
        } => {
            let cfg = em_config(1, &em);
            let args = pin_seed(args, Some(cfg.seed));
            let set = io::read_series_csv(&input).map_err(in_file(&input))?;
            let report = select_k(&set, k_max, &cfg)?;
            let mut config = to_value(&cfg);
            config["k_max"] = json!(k_max);
            if let Some(obj) = config.as_object_mut() {
                obj.remove("k");
            }
            let mut manifest = RunManifest::new("select-k", config, args);
            manifest.add_input(&input)?;
            if let Some(curve) = curve {
                let fmt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
                let rows: Vec<Vec<String>> = report
                    .records
                    .iter()
                    .map(|r| vec![r.k.to_string(), fmt(r.best_loglik), fmt(r.entropy), fmt(r.nec)])
                    .collect();
                io::write_columns_csv(&["k", "loglik", "entropy", "nec"], &rows, create(&curve)?)?;
            }
            write_json(&out, &SelectKOutput { manifest, report })?;
        }
        Command::DetectSpikes {
            input,
            window,
            tol,
            min_separation,
            align_index,
            polarity,
            out_catalog,
            out_onsets,
        } => {
            let cfg = DetectorConfig {
                window_len: window,
                tol,
                min_separation,
                align_index,
                polarity: polarity.into(),
            };
            cfg.validate()?;
            let rec = io::read_recording(&input).map_err(in_file(&input))?;
            let catalog = detect_spikes(&rec, &cfg)?;
            match catalog.window_set() {
                Some(set) => io::write_series_csv(&set, &io::catalog_names(&catalog), create(&out_catalog)?)?,
                None => create(&out_catalog)?.write_all(b"t\n").map_err(IoError::from)?,
            }
            io::write_onsets_csv(&catalog, create(&out_onsets)?)?;
            let mut config = to_value(&cfg);
            config["min_separation"] = json!(cfg.min_separation());
            config["align_index"] = json!(cfg.align_index());
            let mut m = RunManifest::new("detect-spikes", config, args);
            m.add_input(&input)?;
            write_json(&sidecar_path(&out_catalog), &m)?;
        }
        Command::GmmSlowness {
            input,
            k_max,
            restarts,
            seed,
            out,
            assignments,
        } => {
            if k_max == 0 || restarts == 0 {
                return Err(CliError::Usage("k-max and restarts must be positive".into()));
            }
            let seed_value = seed.resolve();
            let args = pin_seed(args, Some(seed_value));
            let set = io::read_series_csv(&input).map_err(in_file(&input))?;
            let features = set
                .iter()
                .map(|s| slowness(s.values()).map(f64::ln))
                .collect::<Result<Vec<f64>, _>>()?;
            let scan = gmm::scan_bic(&features, k_max, restarts, seed_value);
            let model = scan.best_model().cloned();
            let labels = model.as_ref().map_or_else(Vec::new, |m| gmm::assign(m, &features));
            if let Some(path) = assignments {
                let rows: Vec<Vec<String>> = io::series_names(&set)
                    .into_iter()
                    .zip(&features)
                    .zip(&labels)
                    .map(|((n, f), l)| vec![n, f.to_string(), l.to_string()])
                    .collect();
                io::write_columns_csv(&["spike", "log_slowness", "component"], &rows, create(&path)?)?;
            }
            let config = json!({ "k_max": k_max, "restarts": restarts, "seed": seed_value });
            let mut manifest = RunManifest::new("gmm-slowness", config, args);
            manifest.add_input(&input)?;
            let output = GmmOutput {
                manifest,
                features,
                scan: scan
                    .entries
                    .iter()
                    .map(|e| BicRow {
                        k: e.k,
                        bic: e.bic,
                        loglik: e.model.as_ref().map(|m| m.loglik),
                        error: e.error.clone(),
                    })
                    .collect(),
                best_k: scan.best_k,
                model,
                assignments: labels,
            };
            write_json(&out, &output)?;
        }
        Command::Simulate { spec, seed, out, labels } => {
            let mut sim_spec = match &spec {
                Some(p) => read_json::<SimSpec>(p).map_err(in_file(p))?,
                None => SimSpec::five_class(0),
            };
            if let Some(s) = seed.seed {
                sim_spec.seed = s;
            }
            let args = pin_seed(args, Some(sim_spec.seed));
            sim_spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let data = sim::generate(&sim_spec)?;
            let names = io::series_names(&data.set);
            io::write_series_csv(&data.set, &names, create(&out)?)?;
            let class_names: Vec<String> = sim_spec.classes.iter().map(|c| c.name()).collect();
            io::write_labels_csv(&names, &data.labels, &class_names, create(&labels)?)?;
            let mut resolved = sim_spec.clone();
            for c in &mut resolved.classes {
                if let ClassSpec::NoisySine { noise_sd, .. } = c {
                    noise_sd.get_or_insert(sim::SINE_RMS);
                }
            }
            let mut m = RunManifest::new("simulate", to_value(&resolved), args);
            if let Some(p) = &spec {
                m.add_input(p)?;
            }
            write_json(&sidecar_path(&out), &m)?;
        }
        Command::SimulateRecording { spec, seed, out, truth } => {
            let mut rec_spec = match &spec {
                Some(p) => read_json::<RecordingSpec>(p).map_err(in_file(p))?,
                None => RecordingSpec::default(),
            };
            if let Some(s) = seed.seed {
                rec_spec.seed = s;
            }
            let args = pin_seed(args, Some(rec_spec.seed));
            let synthetic = sim::simulate_recording(&rec_spec).map_err(|e| CliError::Usage(e.to_string()))?;
            io::write_recording_csv(&synthetic.recording, create(&out)?)?;
            io::write_truth_csv(&synthetic.truth, create(&truth)?)?;
            let mut m = RunManifest::new("simulate-recording", to_value(&rec_spec), args);
            if let Some(p) = &spec {
                m.add_input(p)?;
            }
            write_json(&sidecar_path(&out), &m)?;
        }
        Command::ReproSim4 {
            seed,
            k_max,
            k,
            restarts,
            out,
        } => {
            let seed_value = seed.resolve();
            let args = pin_seed(args, Some(seed_value));
            let output = repro_sim4(seed_value, k_max, k, restarts, args)?;
            match out {
                Some(path) => write_json(&path, &output)?,
                None => {
                    let mut stdout = std::io::stdout().lock();
                    serde_json::to_writer_pretty(&mut stdout, &output).map_err(IoError::from)?;
                    writeln!(stdout).map_err(IoError::from)?;
                }
            }
        }
        Command::Rerun { manifest } => {
            let m: RunManifest = read_json(&manifest).map_err(in_file(&manifest))?;
            let argv = std::iter::once("specem".to_string()).chain(m.args.iter().cloned());
            let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Usage(e.to_string()))?;
            if matches!(cli.command, Command::Rerun { .. }) {
                return Err(CliError::Usage("a manifest cannot rerun another manifest".into()));
            }
            return run(cli, m.args);
        }
    }
    Ok(())
}

/// Simulate the five-class design, scan `K = 1..=k_max`, then cluster at `k` and score against truth.
pub fn repro_sim4(seed: u64, k_max: usize, k: usize, restarts: usize, args: Vec<String>) -> Result<ReproOutput, CliError> {
    let spec = SimSpec::five_class(seed);
    let data = sim::generate(&spec)?;
    let template = EmConfig {
        restarts,
        seed,
        ..EmConfig::default()
    };
    let selection = select_k(&data.set, k_max, &template)?;
    let cfg = EmConfig { k, ..template };
    let result = run_em(&data.set, &cfg)?;
    let classes = spec.classes.len();
    let cm = ConfusionMatrix::with_dims(&data.labels, &result.hard_assignment, classes, k);
    let config = json!({ "simulation": spec, "k_max": k_max, "em": cfg });
    Ok(ReproOutput {
        manifest: RunManifest::new("repro-sim4", config, args),
        selection,
        k,
        class_names: spec.classes.iter().map(|c| c.name()).collect(),
        class_recall: (0..classes).map(|c| cm.class_recall(c)).collect(),
        cluster_precision: (0..classes).map(|c| cm.plurality_precision(c)).collect(),
        purity: cm.purity(),
        adjusted_rand_index: adjusted_rand_index(&data.labels, &result.hard_assignment),
        confusion: cm.counts,
        loglik: result.state.loglik,
    })
}
