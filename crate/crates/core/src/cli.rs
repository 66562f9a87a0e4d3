//! Command-line front end. Each command validates the whole configuration
//! and every input path before reading data, and writes its outputs only
//! after all computation succeeded.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{require_file, ExperimentConfig, ExtractorKind};
use crate::error::{Error, Result};
use crate::features::{extract_all, ConvPipelineWeights, FeatureExtractor, FeatureTensor};
use crate::federation::{run_training, write_artifacts, Mode};
use crate::fsutil::write_atomic;
use crate::gnn::{decode_checkpoint, evaluate};
use crate::graph::{assemble_dataset, CorrKind, GraphDataset, GraphMeta, GENERATOR_VERSION};
use crate::numerics::RngStream;
use crate::signal::{
    decode_recording, load_recording, read_labels, read_positions, split_train_test, write_labels,
    write_positions, write_recording, LabelSet,
};
use crate::synthetic::generate;

#[derive(Debug, Parser)]
#[command(name = "fedgraph", version, about = "Federated graph classification of multichannel recordings")]
pub struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    /// Dotted config override, e.g. `--set federation.epochs=3`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic recording, labels and electrode positions.
    GenSynthetic,
    /// Compute the per-epoch node feature tensor.
    Extract,
    /// Build one graph per epoch with the configured correlation.
    BuildGraphs,
    /// Train and write metrics.json, losses.csv and a checkpoint.
    Train {
        #[arg(long, default_value = "federated")]
        mode: Mode,
    },
    /// Score a checkpoint on the held-out split.
    Evaluate,
    /// Summarize any artifact file.
    Inspect { path: PathBuf },
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(summary) => {
            print!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs the parsed command and returns its human-readable summary.
pub fn run(cli: &Cli) -> Result<String> {
    let mut cfg = ExperimentConfig::load(cli.config.as_deref(), &cli.overrides)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let workers = match cli.workers {
        Some(0) => return Err(Error::Config("--workers must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| match &cli.command {
        Command::GenSynthetic => cmd_gen_synthetic(&cfg),
        Command::Extract => cmd_extract(&cfg),
        Command::BuildGraphs => cmd_build_graphs(&cfg),
        Command::Train { mode } => cmd_train(&cfg, *mode, workers),
        Command::Evaluate => cmd_evaluate(&cfg),
        Command::Inspect { path } => cmd_inspect(path),
    })
}

pub fn cmd_gen_synthetic(cfg: &ExperimentConfig) -> Result<String> {
    let data = generate(&cfg.synthetic, cfg.n_classes, cfg.seed)?;
    let p = &cfg.paths;
    write_recording(p.recording(), &data.recording)?;
    write_labels(p.labels(), &data.labels)?;
    write_positions(p.positions(), &data.positions)?;
    cfg.archive()?;
    Ok(format!(
        "wrote {} ({} channels × {} epochs × {} samples), {}, {}\n",
        p.recording().display(),
        data.recording.n_channels(),
        data.recording.n_epochs(),
        data.recording.samples_per_epoch(),
        p.labels().display(),
        p.positions().display()
    ))
}

pub fn cmd_extract(cfg: &ExperimentConfig) -> Result<String> {
    let p = &cfg.paths;
    require_file(&p.recording(), "recording")?;
    require_file(&p.labels(), "labels")?;
    let weights_path = match cfg.extractor.kind {
        ExtractorKind::Conv => {
            let w = p.conv_weights.clone().ok_or_else(|| {
                Error::Config("the conv extractor needs paths.conv_weights".into())
            })?;
            require_file(&w, "conv weights")?;
            Some(w)
        }
        ExtractorKind::Stat => None,
    };

    let rec = load_recording(p.recording())?;
    read_labels(p.labels(), cfg.n_classes)?.check_matches(&rec)?;
    let extractor = match weights_path {
        Some(w) => FeatureExtractor::Conv(Box::new(ConvPipelineWeights::load(w)?)),
        None => FeatureExtractor::Stat {
            n_bands: cfg.extractor.n_bands,
        },
    };
    let features = extract_all(&rec, &extractor)?;
    features.save(p.features())?;
    cfg.archive()?;
    let (t, n, d) = features.shape();
    Ok(format!(
        "wrote {} ({} features, {t} epochs × {n} nodes × {d})\n",
        p.features().display(),
        features.extractor()
    ))
}

pub fn cmd_build_graphs(cfg: &ExperimentConfig) -> Result<String> {
    let p = &cfg.paths;
    require_file(&p.features(), "features")?;
    require_file(&p.labels(), "labels")?;
    let needs_positions = cfg.correlation.kind == CorrKind::Db;
    if needs_positions {
        require_file(&p.positions(), "electrode positions")?;
    }

    let features = FeatureTensor::load(p.features())?;
    let labels = read_labels(p.labels(), cfg.n_classes)?;
    let positions = if needs_positions {
        let pos = read_positions(p.positions())?;
        // Align to the recording's channel order when it is available.
        if p.recording().is_file() {
            Some(pos.aligned_to(load_recording(p.recording())?.channel_names())?)
        } else {
            Some(pos)
        }
    } else {
        None
    };
    let samples = assemble_dataset(&features, &labels, &cfg.correlation, positions.as_ref())?;
    let meta = GraphMeta {
        corr_kind: cfg.correlation.kind,
        extractor_kind: features.extractor().to_string(),
        n: features.n_nodes(),
        d: features.dim(),
        n_classes: cfg.n_classes,
        generator_version: GENERATOR_VERSION,
    };
    let ds = GraphDataset::new(meta, samples)?;
    ds.save(p.graphs())?;
    cfg.archive()?;
    Ok(format!(
        "wrote {} ({} graphs, {} adjacency)\n",
        p.graphs().display(),
        ds.samples.len(),
        cfg.correlation.kind
    ))
}

fn load_graphs(cfg: &ExperimentConfig) -> Result<GraphDataset> {
    let ds = GraphDataset::load(cfg.paths.graphs())?;
    if ds.meta.n_classes != cfg.n_classes {
        return Err(Error::Config(format!(
            "{} was built for {} classes but the config has {}",
            cfg.paths.graphs().display(),
            ds.meta.n_classes,
            cfg.n_classes
        )));
    }
    Ok(ds)
}

pub fn cmd_train(cfg: &ExperimentConfig, mode: Mode, workers: usize) -> Result<String> {
    require_file(&cfg.paths.graphs(), "graph dataset")?;
    let ds = load_graphs(cfg)?;
    let model = cfg.model_config(ds.meta.d);
    let outcome = run_training(
        &ds.samples,
        cfg.n_classes,
        ds.meta.corr_kind,
        mode,
        &model,
        &cfg.federation,
        cfg.seed,
        workers,
    )?;
    write_artifacts(&outcome, &cfg.paths.output_dir, &cfg.paths.checkpoint())?;
    cfg.archive()?;
    let m = &outcome.final_metrics;
    Ok(format!(
        "{mode} training, {} rounds: accuracy {:.4}, macro F1 {:.4}, test loss {:.4}\nwrote {}\n",
        outcome.reports.len(),
        m.accuracy,
        m.macro_f1,
        m.mean_loss,
        cfg.paths.output_dir.display()
    ))
}

/// Scores the checkpoint on the same held-out split `train` used (same
/// seed and test ratio) and writes `eval.json`.
pub fn cmd_evaluate(cfg: &ExperimentConfig) -> Result<String> {
    require_file(&cfg.paths.graphs(), "graph dataset")?;
    require_file(&cfg.paths.checkpoint(), "checkpoint")?;
    let ds = load_graphs(cfg)?;
    let bytes = std::fs::read(cfg.paths.checkpoint()).map_err(|e| Error::io(cfg.paths.checkpoint(), e))?;
    let (model, weights) = decode_checkpoint(&bytes, &cfg.paths.checkpoint().display().to_string())?;
    if model.in_dim != ds.meta.d || model.n_classes != ds.meta.n_classes {
        return Err(Error::Config(format!(
            "checkpoint expects {} features and {} classes; the graphs have {} and {}",
            model.in_dim, model.n_classes, ds.meta.d, ds.meta.n_classes
        )));
    }
    let labels = LabelSet::new(ds.samples.iter().map(|g| g.y).collect(), ds.meta.n_classes)?;
    let split = split_train_test(
        &labels,
        cfg.federation.test_ratio,
        &mut RngStream::derived(cfg.seed, "split", 0),
    )?;
    let test: Vec<_> = split.test.iter().map(|&i| ds.samples[i].clone()).collect();
    let m = evaluate(&weights, &test, &model)?;
    let mut json = serde_json::to_string_pretty(&m).expect("metrics serialize");
    json.push('\n');
    let out = cfg.paths.output_dir.join("eval.json");
    write_atomic(&out, json.as_bytes())?;
    Ok(format!(
        "{} test graphs: accuracy {:.4}, macro F1 {:.4}, loss {:.4}\nwrote {}\n",
        test.len(),
        m.accuracy,
        m.macro_f1,
        m.mean_loss,
        out.display()
    ))
}

/// Identifies an artifact by its leading bytes and describes it.
pub fn cmd_inspect(path: &Path) -> Result<String> {
    require_file(path, "input")?;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let origin = path.display().to_string();
    let mut s = String::new();
    if bytes.starts_with(b"STSQ") {
        let rec = decode_recording(&bytes, &origin)?;
        writeln!(s, "recording {origin}").unwrap();
        writeln!(
            s,
            "  {} channels × {} epochs × {} samples at {} Hz",
            rec.n_channels(),
            rec.n_epochs(),
            rec.samples_per_epoch(),
            rec.sample_rate()
        )
        .unwrap();
        writeln!(s, "  channels: {}", rec.channel_names().join(", ")).unwrap();
    } else if bytes.starts_with(b"FTR") {
        let f = FeatureTensor::decode(&bytes, &origin)?;
        let (t, n, d) = f.shape();
        writeln!(s, "features {origin}\n  extractor {}, {t} epochs × {n} nodes × {d}", f.extractor()).unwrap();
    } else if bytes.starts_with(b"CPW") {
        let w = ConvPipelineWeights::decode(&bytes, &origin)?;
        writeln!(s, "conv extractor weights {origin}").unwrap();
        for (i, l) in w.layers().iter().enumerate() {
            writeln!(s, "  layer {i}: {} output channels, {} kernel weights", l.bias.len(), l.kernel.len())
                .unwrap();
        }
    } else if bytes.starts_with(b"MWT") {
        let (m, w) = decode_checkpoint(&bytes, &origin)?;
        writeln!(
            s,
            "checkpoint {origin}\n  {} layers, {} → {} hidden → {} classes, dropout {}, {} parameters",
            m.n_layers,
            m.in_dim,
            m.hidden_dim,
            m.n_classes,
            m.dropout_rate,
            w.n_params()
        )
        .unwrap();
    } else if bytes.first() == Some(&b'{') {
        let text = String::from_utf8(bytes).map_err(|e| Error::InvalidInput(format!("{origin}: {e}")))?;
        let ds = GraphDataset::from_json(&text, &origin)?;
        let mut counts = vec![0usize; ds.meta.n_classes];
        for g in &ds.samples {
            counts[g.y] += 1;
        }
        let m = &ds.meta;
        writeln!(
            s,
            "graph dataset {origin}\n  {} graphs, {} nodes × {} features, {} adjacency from {} features\n  class counts: {counts:?}",
            ds.samples.len(),
            m.n,
            m.d,
            m.corr_kind,
            m.extractor_kind
        )
        .unwrap();
    } else {
        return Err(Error::BadMagic {
            path: origin,
            expected: "STSQ1, FTR1, CPW1, MWT1 or a JSON graph dataset",
        });
    }
    Ok(s)
}
