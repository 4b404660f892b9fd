//! The `a2gnn` command line.
//!
//! ```text
//! a2gnn synth      --out data.jsonl [--classes wave_left,still] [--per-class 15] [--seed 0]
//! a2gnn train      --dataset data.jsonl [--config run.cfg] [--set k=v]... [--out runs/a]
//! a2gnn eval       --checkpoint runs/a/checkpoint.txt --dataset data.jsonl [--split test] [--out dir]
//! a2gnn inspect-au --checkpoint ckpt --dataset data.jsonl --sequence wave_right_002 --out dir
//! a2gnn ksweep     --dataset data.jsonl [--K 2,4,6,8,10,12,14] [--out dir]
//! a2gnn gradcheck  [--tol 1e-4] [--set k=v]...
//! ```
//!
//! Failures print one line, `error: <kind>: <message>`, and exit with
//! status 1.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::TrainConfig;
use crate::data::synth::{synth_dataset, SynthClass};
use crate::data::{load_jsonl, save_jsonl, Dataset, Split};
use crate::diff::GradcheckOptions;
use crate::error::{Error, Result};
use crate::model::{toy_gradcheck, A2gnnModel};
use crate::train::{evaluate, load_training_checkpoint, preprocess, train, Metrics, TrainOptions, CHECKPOINT_FILE, LOG_FILE};
use crate::viz::{saliency_csv, skeleton_svg};

#[derive(Debug, Parser)]
#[command(name = "a2gnn", version, about = "Attention-pooled graph networks for skeleton action recognition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic JSONL dataset.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated class names; all classes when omitted.
        #[arg(long)]
        classes: Option<String>,
        #[arg(long, default_value_t = 15)]
        per_class: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train on the train split, evaluating the test split every epoch.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Directory for the checkpoint and per-epoch log.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Accuracy, per-class precision/recall and the confusion matrix.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "test")]
        split: Split,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-frame joint saliency of one sequence, as CSV and SVG.
    InspectAu {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        sequence: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and evaluate once per receptive field K.
    Ksweep {
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long = "K", default_value = "2,4,6,8,10,12,14")]
        k_list: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite-difference gradient check on a six-joint toy model.
    Gradcheck {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
        /// Check at most this many sampled entries per parameter.
        #[arg(long)]
        max_entries: Option<usize>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Flat `key=value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub temporal_agg: Option<String>,
}

impl ConfigArgs {
    /// Defaults, then the config file, then `--set`, then dedicated flags.
    pub fn resolve(&self) -> Result<TrainConfig> {
        let mut cfg = match &self.config {
            Some(p) => TrainConfig::load(p)?,
            None => TrainConfig::default(),
        };
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("--set expects key=value, got `{kv}`")))?;
            cfg.set(k, v)?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(agg) = &self.temporal_agg {
            cfg.temporal_agg = agg.parse()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
}

fn parse_k_list(s: &str) -> Result<Vec<usize>> {
    let ks = s
        .split(',')
        .map(|p| {
            let k: usize = p
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad K `{p}`")))?;
            if k == 0 {
                return Err(Error::InvalidArgument("K must be >= 1".into()));
            }
            Ok(k)
        })
        .collect::<Result<Vec<_>>>()?;
    if ks.is_empty() {
        return Err(Error::InvalidArgument("empty K list".into()));
    }
    Ok(ks)
}

/// First line of every training run.
pub fn run_header(cfg: &TrainConfig) -> String {
    format!(
        "# a2gnn train K={} lr={} momentum={} | {}\n",
        cfg.k,
        cfg.lr,
        cfg.momentum,
        cfg.to_inline()
    )
}

pub fn metrics_report(m: &Metrics, classes: &[String]) -> String {
    let mut s = format!("accuracy {:.4}\n", m.accuracy);
    let _ = writeln!(s, "class,precision,recall,support");
    for (c, name) in classes.iter().enumerate() {
        let _ = writeln!(
            s,
            "{name},{:.4},{:.4},{}",
            m.precision[c],
            m.recall[c],
            m.confusion.row(c).sum()
        );
    }
    s
}

pub fn cmd_synth(out_path: &Path, classes: Option<&str>, per_class: usize, seed: u64) -> Result<Dataset> {
    let classes: Vec<SynthClass> = match classes {
        Some(list) => list.split(',').map(|c| c.trim().parse()).collect::<Result<_>>()?,
        None => SynthClass::ALL.to_vec(),
    };
    if classes.len() < 2 {
        return Err(Error::InvalidArgument("need at least two classes".into()));
    }
    let dataset = synth_dataset(&classes, per_class, &mut ChaCha8Rng::seed_from_u64(seed));
    save_jsonl(out_path, &dataset)?;
    Ok(dataset)
}

fn cmd_train(
    dataset: &Path,
    config: &ConfigArgs,
    out_dir: Option<&Path>,
    resume: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    let data = load_jsonl(dataset)?;
    if data.sequences.is_empty() {
        return Err(Error::Dataset(format!("{} has no sequences", dataset.display())));
    }
    let (mut model, ckpt, cfg) = match resume {
        Some(path) => {
            let (model, ckpt) = load_training_checkpoint(path)?;
            // explicit overrides such as a larger epoch budget still apply
            let mut cfg = model.config().clone();
            for kv in &config.overrides {
                if let Some((k, v)) = kv.split_once('=') {
                    cfg.set(k, v)?;
                }
            }
            (model, Some(ckpt), cfg)
        }
        None => {
            let cfg = config.resolve()?;
            (A2gnnModel::for_manifest(&cfg, &data.manifest)?, None, cfg)
        }
    };
    emit(out, &run_header(&cfg))?;
    let opts = TrainOptions {
        out_dir: out_dir.map(Path::to_path_buf),
        resume: ckpt,
        verbose: false,
    };
    let report = train(&mut model, &data, &cfg, &opts)?;
    let mut text = String::from("epoch,train_loss,train_acc,test_acc\n");
    for row in &report.epochs {
        text.push_str(&row.csv_row());
        text.push('\n');
    }
    emit(out, &text)?;
    if let Some(dir) = out_dir {
        emit(
            out,
            &format!(
                "checkpoint {}\nlog {}\n",
                dir.join(CHECKPOINT_FILE).display(),
                dir.join(LOG_FILE).display()
            ),
        )?;
    }
    if !data.split(Split::Test).is_empty() {
        let m = evaluate(&model, &data, Split::Test)?;
        emit(out, &metrics_report(&m, &data.manifest.classes))?;
    }
    Ok(())
}

fn cmd_eval(checkpoint: &Path, dataset: &Path, split: Split, out_dir: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let model = A2gnnModel::load(checkpoint)?;
    let data = load_jsonl(dataset)?;
    let m = evaluate(&model, &data, split)?;
    let report = metrics_report(&m, &data.manifest.classes);
    let confusion = m.confusion_csv(&data.manifest.classes);
    if let Some(dir) = out_dir {
        write_file(&dir.join("metrics.txt"), &report)?;
        write_file(&dir.join("confusion.csv"), &confusion)?;
    }
    emit(out, &report)?;
    emit(out, &confusion)
}

fn cmd_inspect_au(checkpoint: &Path, dataset: &Path, sequence: &str, out_dir: &Path, out: &mut dyn Write) -> Result<()> {
    let model = A2gnnModel::load(checkpoint)?;
    let data = load_jsonl(dataset)?;
    let seq = data
        .get(sequence)
        .ok_or_else(|| Error::Dataset(format!("no sequence `{sequence}`")))?;
    let prepared = preprocess::<ChaCha8Rng>(seq, &data.manifest, model.config(), None)?;
    let weights = model.extract_au_weights(&prepared.frames)?;
    let csv = saliency_csv(&weights, &data.manifest.joints);
    let svg = skeleton_svg(&prepared.frames[0], model.edges(), &weights, sequence);
    let (csv_path, svg_path) = (out_dir.join("saliency.csv"), out_dir.join("skeleton.svg"));
    write_file(&csv_path, &csv)?;
    write_file(&svg_path, &svg)?;
    emit(
        out,
        &format!("saliency {}\nsvg {}\n", csv_path.display(), svg_path.display()),
    )
}

/// One `K,test_accuracy,final_train_loss,epochs` row per K.
pub fn ksweep(data: &Dataset, base: &TrainConfig, ks: &[usize]) -> Result<String> {
    let mut csv = String::from("K,test_accuracy,final_train_loss,epochs\n");
    for &k in ks {
        let mut cfg = base.clone();
        cfg.k = k;
        let mut model = A2gnnModel::for_manifest(&cfg, &data.manifest)?;
        let report = train(&mut model, data, &cfg, &TrainOptions::default())?;
        let acc = evaluate(&model, data, Split::Test)?.accuracy;
        let _ = writeln!(
            csv,
            "{k},{acc:.4},{:.6},{}",
            report.final_loss().unwrap_or(f64::NAN),
            report.completed_epochs
        );
    }
    Ok(csv)
}

fn cmd_ksweep(dataset: &Path, config: &ConfigArgs, k_list: &str, out_dir: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let ks = parse_k_list(k_list)?;
    let cfg = config.resolve()?;
    let data = load_jsonl(dataset)?;
    let csv = ksweep(&data, &cfg, &ks)?;
    if let Some(dir) = out_dir {
        write_file(&dir.join("ksweep.csv"), &csv)?;
    }
    emit(out, &csv)
}

fn cmd_gradcheck(config: &ConfigArgs, tol: f64, step: f64, max_entries: Option<usize>, out: &mut dyn Write) -> Result<()> {
    let cfg = config.resolve()?;
    let opts = GradcheckOptions {
        step,
        tol,
        max_entries,
        seed: cfg.seed,
    };
    let report = toy_gradcheck(&cfg, &opts)?;
    let mut text = format!("# gradcheck loss={:.6} tol={tol:e} step={step:e}\n", report.loss);
    text.push_str("param,checked,total,max_rel_err,max_abs_err,status\n");
    for p in &report.params {
        let _ = writeln!(
            text,
            "{},{},{},{:.3e},{:.3e},{}",
            p.name,
            p.checked,
            p.total,
            p.max_rel_err,
            p.max_abs_err,
            if p.passed { "PASS" } else { "FAIL" }
        );
    }
    emit(out, &text)?;
    let failed = report.params.iter().filter(|p| !p.passed).count();
    if failed > 0 {
        return Err(Error::GradcheckFailed {
            failed,
            total: report.params.len(),
        });
    }
    Ok(())
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Synth {
            out: path,
            classes,
            per_class,
            seed,
        } => {
            let d = cmd_synth(&path, classes.as_deref(), per_class, seed)?;
            emit(out, &format!("wrote {} sequences to {}\n", d.sequences.len(), path.display()))
        }
        Command::Train {
            dataset,
            config,
            out: dir,
            resume,
        } => cmd_train(&dataset, &config, dir.as_deref(), resume.as_deref(), out),
        Command::Eval {
            checkpoint,
            dataset,
            split,
            out: dir,
        } => cmd_eval(&checkpoint, &dataset, split, dir.as_deref(), out),
        Command::InspectAu {
            checkpoint,
            dataset,
            sequence,
            out: dir,
        } => cmd_inspect_au(&checkpoint, &dataset, &sequence, &dir, out),
        Command::Ksweep {
            dataset,
            config,
            k_list,
            out: dir,
        } => cmd_ksweep(&dataset, &config, &k_list, dir.as_deref(), out),
        Command::Gradcheck {
            config,
            tol,
            step,
            max_entries,
        } => cmd_gradcheck(&config, tol, step, max_entries, out),
    }
}

/// Parses `std::env::args`, runs, and maps errors to the one-line format.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {msg}", e.kind());
            ExitCode::FAILURE
        }
    }
}
