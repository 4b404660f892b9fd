//! Optimization and evaluation: heavy-ball SGD, the training loop, and
//! classification metrics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use crate::config::{TemporalAgg, TrainConfig};
use crate::data::{augment, center_frames, rotate_align, sample_segments, Dataset, DatasetManifest, SkeletonSequence, Split};
use crate::diff::{Checkpoint, ParamStore};
use crate::error::{Error, Result};
use crate::model::{A2gnnModel, OPTIMIZER_PREFIX};

pub const CHECKPOINT_FILE: &str = "checkpoint.txt";
pub const LOG_FILE: &str = "train_log.csv";

/// `v ← momentum·v + g; p ← p − lr·v`.
pub fn sgd_momentum_step(params: &mut ParamStore, grads: &ParamStore, velocity: &mut ParamStore, lr: f64, momentum: f64) -> Result<()> {
    for (name, v) in velocity.iter_mut() {
        let g = grads.get(name)?;
        if g.dim() != v.dim() {
            return Err(Error::Shape {
                op: "sgd_momentum_step",
                lhs: v.dim(),
                rhs: g.dim(),
            });
        }
        *v *= momentum;
        *v += g;
    }
    params.axpy(-lr, velocity)
}

/// Centering, optional body-frame rotation, then either random segment
/// sampling with scale jitter (`rng` given) or deterministic mid-segment
/// sampling.
pub fn preprocess<R: Rng + ?Sized>(
    seq: &SkeletonSequence,
    manifest: &DatasetManifest,
    config: &TrainConfig,
    rng: Option<&mut R>,
) -> Result<SkeletonSequence> {
    let mut s = center_frames(seq);
    if config.rotate_align {
        if let Some(refs) = manifest.reference_joints {
            s = rotate_align(&s, refs)?;
        }
    }
    Ok(match rng {
        Some(rng) if config.augment => augment(&s, &config.augment_options(), rng),
        _ => sample_segments(&s, config.segments),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    /// `confusion[true][predicted]` counts.
    pub confusion: Array2<u64>,
}

impl Metrics {
    pub fn from_confusion(confusion: Array2<u64>) -> Self {
        let c = confusion.nrows();
        let total: u64 = confusion.sum();
        let trace: u64 = (0..c).map(|i| confusion[[i, i]]).sum();
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = (0..c)
            .map(|j| ratio(confusion[[j, j]], confusion.column(j).sum()))
            .collect();
        let recall = (0..c).map(|i| ratio(confusion[[i, i]], confusion.row(i).sum())).collect();
        Self {
            accuracy: ratio(trace, total),
            precision,
            recall,
            confusion,
        }
    }

    pub fn from_predictions(num_classes: usize, pairs: &[(usize, usize)]) -> Self {
        let mut confusion = Array2::zeros((num_classes, num_classes));
        for &(truth, pred) in pairs {
            confusion[[truth, pred]] += 1;
        }
        Self::from_confusion(confusion)
    }

    pub fn confusion_csv(&self, class_names: &[String]) -> String {
        let c = self.confusion.nrows();
        let name = |i: usize| class_names.get(i).cloned().unwrap_or_else(|| i.to_string());
        let mut out = String::from("true\\pred");
        for j in 0..c {
            let _ = write!(out, ",{}", name(j));
        }
        out.push('\n');
        for i in 0..c {
            out.push_str(&name(i));
            for j in 0..c {
                let _ = write!(out, ",{}", self.confusion[[i, j]]);
            }
            out.push('\n');
        }
        out
    }
}

pub fn evaluate(model: &A2gnnModel, dataset: &Dataset, split: Split) -> Result<Metrics> {
    let seqs = dataset.split(split);
    evaluate_sequences(model, &dataset.manifest, &seqs)
}

pub fn evaluate_sequences(model: &A2gnnModel, manifest: &DatasetManifest, seqs: &[&SkeletonSequence]) -> Result<Metrics> {
    if seqs.is_empty() {
        return Err(Error::Dataset("cannot evaluate an empty split".into()));
    }
    let mut pairs = Vec::with_capacity(seqs.len());
    for s in seqs {
        let prepared = preprocess::<ChaCha8Rng>(s, manifest, model.config(), None)?;
        pairs.push((s.label, model.predict(&prepared.frames)?));
    }
    Ok(Metrics::from_predictions(model.num_classes(), &pairs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    /// `NaN` when the dataset has no test split.
    pub test_acc: f64,
}

impl EpochLog {
    pub const CSV_HEADER: &'static str = "epoch,train_loss,train_acc,test_acc";

    pub fn csv_row(&self) -> String {
        format!("{},{:.6},{:.4},{:.4}", self.epoch, self.train_loss, self.train_acc, self.test_acc)
    }
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    /// Where the per-epoch checkpoint and log are written.
    pub out_dir: Option<PathBuf>,
    /// Optimizer state and epoch counter from an earlier run.
    pub resume: Option<Checkpoint>,
    pub verbose: bool,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub epochs: Vec<EpochLog>,
    /// Number of epochs completed in total, including resumed ones.
    pub completed_epochs: usize,
    pub stopped_early: bool,
}

impl TrainReport {
    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.train_loss)
    }

    pub fn final_test_acc(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.test_acc)
    }
}

fn epoch_rng(seed: u64, epoch: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Full training state as a checkpoint: weights, velocity and epoch.
pub fn training_checkpoint(model: &A2gnnModel, velocity: &ParamStore, epoch: usize) -> Checkpoint {
    let mut meta = BTreeMap::new();
    meta.insert("epoch".to_string(), epoch.to_string());
    let mut ckpt = model.to_checkpoint(&meta);
    for (name, v) in velocity.iter() {
        ckpt.params.insert(format!("{OPTIMIZER_PREFIX}velocity.{name}"), v.clone());
    }
    ckpt
}

fn restore_velocity(ckpt: &Checkpoint, velocity: &mut ParamStore) -> Result<usize> {
    for (name, v) in velocity.iter_mut() {
        let stored = ckpt.params.get(&format!("{OPTIMIZER_PREFIX}velocity.{name}"))?;
        if stored.dim() != v.dim() {
            return Err(Error::Shape {
                op: "resume",
                lhs: v.dim(),
                rhs: stored.dim(),
            });
        }
        v.assign(stored);
    }
    ckpt.meta
        .get("epoch")
        .ok_or_else(|| Error::Config("checkpoint has no epoch counter".into()))?
        .parse()
        .map_err(|_| Error::Config("bad epoch counter".into()))
}

/// Trains `model` in place on the train split. Per-sequence gradients are
/// averaged over mini-batches of `config.batch_size`; the test split, when
/// present, is evaluated after every epoch.
pub fn train(model: &mut A2gnnModel, dataset: &Dataset, config: &TrainConfig, opts: &TrainOptions) -> Result<TrainReport> {
    config.validate()?;
    let train_set = dataset.split(Split::Train);
    if train_set.is_empty() && config.epochs > 0 {
        return Err(Error::Dataset("no training sequences".into()));
    }
    let test_set = dataset.split(Split::Test);
    let mut velocity = model.params.zeros_like();
    let start_epoch = match &opts.resume {
        Some(ckpt) => restore_velocity(ckpt, &mut velocity)?,
        None => 0,
    };

    let mut log_file = match &opts.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join(LOG_FILE);
            let fresh = opts.resume.is_none() || !path.exists();
            let mut f = std::fs::OpenOptions::new()
                .create(true)
                .append(!fresh)
                .write(true)
                .truncate(fresh)
                .open(&path)
                .map_err(|e| Error::io(&path, e))?;
            if fresh {
                writeln!(f, "{}", EpochLog::CSV_HEADER).map_err(|e| Error::io(&path, e))?;
            }
            Some((f, path))
        }
        None => None,
    };

    let mut report = TrainReport {
        epochs: Vec::new(),
        completed_epochs: start_epoch,
        stopped_early: false,
    };
    for epoch in start_epoch..config.epochs {
        let mut rng = epoch_rng(config.seed, epoch);
        let lr = config.lr * config.lr_decay.powi(epoch as i32);
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        order.shuffle(&mut rng);

        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for batch in order.chunks(config.batch_size) {
            let mut grads: Option<ParamStore> = None;
            for &i in batch {
                let seq = train_set[i];
                let prepared = preprocess(seq, &dataset.manifest, config, Some(&mut rng))?;
                let (loss, g, probs) = model.loss_and_grad(&prepared.frames, seq.label)?;
                if !loss.is_finite() {
                    let culprit = model
                        .params
                        .first_non_finite()
                        .or_else(|| g.first_non_finite())
                        .unwrap_or("<none>");
                    return Err(Error::NonFiniteParameter(format!(
                        "{culprit} (non-finite loss at epoch {epoch}, sequence {})",
                        seq.id
                    )));
                }
                loss_sum += loss;
                let pred = (0..probs.len()).max_by(|&a, &b| probs[a].total_cmp(&probs[b])).unwrap_or(0);
                correct += usize::from(pred == seq.label);
                match grads.as_mut() {
                    None => grads = Some(g),
                    Some(acc) => acc.axpy(1.0, &g)?,
                }
            }
            let mut grads = grads.expect("batches are non-empty");
            if batch.len() > 1 {
                grads.scale(1.0 / batch.len() as f64);
            }
            if let Some(max_norm) = config.grad_clip {
                let norm = grads.global_norm();
                if norm > max_norm {
                    grads.scale(max_norm / norm);
                }
            }
            sgd_momentum_step(&mut model.params, &grads, &mut velocity, lr, config.momentum)?;
            if let Some(name) = model.params.first_non_finite() {
                return Err(Error::NonFiniteParameter(format!("{name} after update at epoch {epoch}")));
            }
        }

        let test_acc = if test_set.is_empty() {
            f64::NAN
        } else {
            evaluate_sequences(model, &dataset.manifest, &test_set)?.accuracy
        };
        let row = EpochLog {
            epoch: epoch + 1,
            train_loss: loss_sum / train_set.len() as f64,
            train_acc: correct as f64 / train_set.len() as f64,
            test_acc,
        };
        if opts.verbose {
            eprintln!("{}", row.csv_row());
        }
        if let Some((f, path)) = log_file.as_mut() {
            writeln!(f, "{}", row.csv_row()).map_err(|e| Error::io(path.as_path(), e))?;
        }
        report.epochs.push(row);
        report.completed_epochs = epoch + 1;
        if let Some(dir) = &opts.out_dir {
            training_checkpoint(model, &velocity, epoch + 1).save(dir.join(CHECKPOINT_FILE))?;
        }
        if config.target_accuracy.is_some_and(|t| test_acc >= t) {
            report.stopped_early = true;
            break;
        }
    }
    Ok(report)
}

/// Loads a checkpoint written by [`train`], returning the model and the raw
/// checkpoint for resuming.
pub fn load_training_checkpoint(path: impl AsRef<Path>) -> Result<(A2gnnModel, Checkpoint)> {
    let ckpt = Checkpoint::load(path)?;
    let model = A2gnnModel::from_checkpoint(&ckpt)?;
    Ok((model, ckpt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn single(name: &str, v: Array2<f64>) -> ParamStore {
        let mut p = ParamStore::new();
        p.insert(name, v);
        p
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = single("w", array![[1.0, 2.0]]);
        let g = p.zeros_like();
        let mut v = p.zeros_like();
        sgd_momentum_step(&mut p, &g, &mut v, 0.02, 0.9).unwrap();
        assert_eq!(p.get("w").unwrap(), &array![[1.0, 2.0]]);
    }

    #[test]
    fn two_momentum_steps() {
        let (lr, m) = (0.02, 0.9);
        let mut p = single("w", array![[1.0]]);
        let g = single("w", array![[3.0]]);
        let mut v = p.zeros_like();
        sgd_momentum_step(&mut p, &g, &mut v, lr, m).unwrap();
        assert!((p.get("w").unwrap()[[0, 0]] - (1.0 - lr * 3.0)).abs() < 1e-15);
        sgd_momentum_step(&mut p, &g, &mut v, lr, m).unwrap();
        let expected = 1.0 - lr * 3.0 * (2.0 + m);
        assert!((p.get("w").unwrap()[[0, 0]] - expected).abs() < 1e-15);
    }

    #[test]
    fn mismatched_shapes_rejected() {
        let mut p = single("w", array![[1.0]]);
        let g = single("w", array![[1.0, 2.0]]);
        let mut v = p.zeros_like();
        assert!(sgd_momentum_step(&mut p, &g, &mut v, 0.1, 0.0).is_err());
    }

    #[test]
    fn quadratic_descends_below_curvature_bound() {
        // f(w) = 0.5 * c * w², curvature c = 4, any lr < 2/c reduces f.
        let c = 4.0;
        for lr in [0.01, 0.1, 0.3, 0.49] {
            let mut p = single("w", array![[1.5]]);
            let w0 = p.get("w").unwrap()[[0, 0]];
            let g = single("w", array![[c * w0]]);
            let mut v = p.zeros_like();
            sgd_momentum_step(&mut p, &g, &mut v, lr, 0.0).unwrap();
            let w1 = p.get("w").unwrap()[[0, 0]];
            assert!(0.5 * c * w1 * w1 < 0.5 * c * w0 * w0);
        }
    }

    #[test]
    fn hand_built_metrics() {
        // rows: truth, cols: prediction
        let conf = array![[5u64, 1, 0], [2, 3, 1], [0, 0, 4]];
        let m = Metrics::from_confusion(conf);
        assert!((m.accuracy - 12.0 / 16.0).abs() < 1e-15);
        let precision = [5.0 / 7.0, 3.0 / 4.0, 4.0 / 5.0];
        let recall = [5.0 / 6.0, 3.0 / 6.0, 4.0 / 4.0];
        for c in 0..3 {
            assert!((m.precision[c] - precision[c]).abs() < 1e-15);
            assert!((m.recall[c] - recall[c]).abs() < 1e-15);
        }
    }

    #[test]
    fn perfect_predictions() {
        let pairs: Vec<_> = (0..9).map(|i| (i % 3, i % 3)).collect();
        let m = Metrics::from_predictions(3, &pairs);
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.confusion, Array2::from_diag(&ndarray::arr1(&[3u64, 3, 3])));
        assert_eq!(m.confusion.sum(), 9);
    }

    #[test]
    fn random_predictions_near_chance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = 5;
        let pairs: Vec<_> = (0..20_000).map(|_| (rng.random_range(0..c), rng.random_range(0..c))).collect();
        let m = Metrics::from_predictions(c, &pairs);
        assert!((m.accuracy - 0.2).abs() < 0.02);
        for i in 0..c {
            assert_eq!(m.confusion.row(i).sum(), pairs.iter().filter(|p| p.0 == i).count() as u64);
        }
    }
}
