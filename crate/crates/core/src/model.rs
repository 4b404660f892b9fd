//! The assembled network:
//!
//! ```text
//! frame ─ spectral(3→c1) ─ attend ─ spectral(c1→c2, pooled graph) ─ attend ─ flatten ─┐
//!                                                                                     LSTM(d_h) ─ head ─ softmax
//! ```
//!
//! With `attend = false` both attending layers are dropped and the second
//! filter runs on the input graph.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{TemporalAgg, TrainConfig};
use crate::data::DatasetManifest;
use crate::diff::{gradcheck, Bindings, Checkpoint, GradcheckOptions, GradcheckReport, ParamStore, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::{adjacency_from_edges, LaplacianPair};
use crate::layers::{
    attend_on_tape, head_logits_on_tape, lstm_project_inputs, lstm_step_projected, spectral_filter_on_tape,
    AttendParams, AttendVars, HeadParams, HeadVars, LstmParams, LstmVars, SpectralFilterParams,
};

/// Checkpoint entries with this prefix hold optimizer state, not weights.
pub const OPTIMIZER_PREFIX: &str = "opt.";

#[derive(Debug, Clone, PartialEq)]
pub struct A2gnnModel {
    config: TrainConfig,
    num_classes: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Array2<f64>,
    laplacian: LaplacianPair,
    pub params: ParamStore,
}

/// Tape handles produced by one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub logits: Var,
    pub log_probs: Var,
    /// First attending layer weights, one `N × N` matrix per frame.
    pub attention: Vec<Var>,
}

/// Values of one forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub probabilities: Array1<f64>,
    pub attention: Vec<Array2<f64>>,
}

fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

impl A2gnnModel {
    /// Initializes a model for a skeleton template with `num_nodes` joints.
    pub fn build(config: &TrainConfig, num_nodes: usize, edges: &[(usize, usize)], num_classes: usize) -> Result<Self> {
        config.validate()?;
        if num_classes < 2 {
            return Err(Error::InvalidArgument(format!("need at least two classes, got {num_classes}")));
        }
        if num_nodes == 0 {
            return Err(Error::InvalidArgument("template has no joints".into()));
        }
        let adjacency = adjacency_from_edges(num_nodes, edges)?;
        if !is_connected(num_nodes, edges) {
            return Err(Error::InvalidArgument("skeleton template is not connected".into()));
        }
        let laplacian = LaplacianPair::from_adjacency(&adjacency, config.lambda_max)?;

        let (c1, c2) = config.channels;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = ParamStore::new();
        SpectralFilterParams::init(3, c1, config.k, &mut rng).store("spectral1", &mut params);
        if config.attend {
            AttendParams::init(c1, c1, num_nodes, &mut rng).store("attend1", &mut params);
        }
        SpectralFilterParams::init(c1, c2, config.k, &mut rng).store("spectral2", &mut params);
        if config.attend {
            AttendParams::init(c2, c2, num_nodes, &mut rng).store("attend2", &mut params);
        }
        LstmParams::init(num_nodes * c2, config.hidden, &mut rng).store("lstm", &mut params);
        HeadParams::init(config.hidden, num_classes, &mut rng).store("head", &mut params);

        Ok(Self {
            config: config.clone(),
            num_classes,
            edges: edges.to_vec(),
            adjacency,
            laplacian,
            params,
        })
    }

    /// Model sized for the joints, bones and classes of a dataset manifest.
    pub fn for_manifest(config: &TrainConfig, manifest: &DatasetManifest) -> Result<Self> {
        Self::build(config, manifest.num_joints(), &manifest.edges, manifest.num_classes())
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn laplacian(&self) -> &LaplacianPair {
        &self.laplacian
    }

    /// Width of the flattened per-frame feature fed to the LSTM.
    pub fn lstm_input_width(&self) -> usize {
        self.num_nodes() * self.config.channels.1
    }

    fn check_frames(&self, frames: &[Array2<f64>]) -> Result<()> {
        if frames.is_empty() {
            return Err(Error::InvalidArgument("sequence has no frames".into()));
        }
        for (t, f) in frames.iter().enumerate() {
            if f.dim() != (self.num_nodes(), 3) {
                return Err(Error::InvalidArgument(format!(
                    "frame {t} has shape {:?}, model expects ({}, 3)",
                    f.dim(),
                    self.num_nodes()
                )));
            }
        }
        Ok(())
    }

    /// Records the forward pass of one sequence on `tape`.
    pub fn forward_on_tape(&self, tape: &mut Tape, b: &Bindings, frames: &[Array2<f64>]) -> Result<ForwardTrace> {
        self.check_frames(frames)?;
        let k = self.config.k;
        let theta1 = b.get("spectral1.theta")?;
        let theta2 = b.get("spectral2.theta")?;
        let attend = if self.config.attend {
            Some((AttendVars::bind(b, "attend1")?, AttendVars::bind(b, "attend2")?))
        } else {
            None
        };
        let lstm = LstmVars::bind(b, "lstm")?;
        let head = HeadVars::bind(b, "head")?;

        let scaled = tape.constant(self.laplacian.scaled.clone());
        let adjacency = tape.constant(self.adjacency.clone());
        let mut attention = Vec::with_capacity(frames.len());
        let mut features = Vec::with_capacity(frames.len());
        for frame in frames {
            let x = tape.constant(frame.clone());
            let z1 = spectral_filter_on_tape(tape, scaled, x, theta1, k)?;
            let flat = match &attend {
                Some((a1, a2)) => {
                    let first = attend_on_tape(tape, z1, Some(adjacency), a1, self.config.pooled_lambda_max)?;
                    attention.push(first.weights);
                    let pooled = first.pooled_graph.expect("adjacency supplied");
                    let z2 = spectral_filter_on_tape(tape, pooled.scaled_laplacian, first.pooled_signal, theta2, k)?;
                    let second = attend_on_tape(tape, z2, None, a2, self.config.pooled_lambda_max)?;
                    tape.flatten(second.pooled_signal)
                }
                None => {
                    let z2 = spectral_filter_on_tape(tape, scaled, z1, theta2, k)?;
                    tape.flatten(z2)
                }
            };
            features.push(flat);
        }

        let stacked = tape.concat_rows(&features)?;
        let proj = lstm_project_inputs(tape, stacked, &lstm)?;
        let zeros = tape.constant(Array2::zeros((1, self.config.hidden)));
        let (mut h, mut c) = (zeros, zeros);
        let mut outputs = Vec::with_capacity(frames.len());
        for t in 0..frames.len() {
            let step_proj = [
                tape.select_row(proj[0], t)?,
                tape.select_row(proj[1], t)?,
                tape.select_row(proj[2], t)?,
                tape.select_row(proj[3], t)?,
            ];
            let s = lstm_step_projected(tape, step_proj, h, c, &lstm)?;
            h = s.h;
            c = s.c;
            outputs.push(s.o);
        }
        let response = match self.config.temporal_agg {
            TemporalAgg::Mean => {
                let all = tape.concat_rows(&outputs)?;
                tape.mean_rows(all)
            }
            TemporalAgg::Last => *outputs.last().expect("at least one frame"),
        };
        let logits = head_logits_on_tape(tape, response, &head)?;
        let log_probs = tape.log_softmax_rows(logits);
        Ok(ForwardTrace {
            logits,
            log_probs,
            attention,
        })
    }

    /// Cross-entropy `−log p(label)` on the tape.
    pub fn loss_on_tape(&self, tape: &mut Tape, b: &Bindings, frames: &[Array2<f64>], label: usize) -> Result<(Var, ForwardTrace)> {
        if label >= self.num_classes {
            return Err(Error::InvalidArgument(format!(
                "label {label} out of range for {} classes",
                self.num_classes
            )));
        }
        let trace = self.forward_on_tape(tape, b, frames)?;
        let mut onehot = Array2::zeros((1, self.num_classes));
        onehot[[0, label]] = -1.0;
        let mask = tape.constant(onehot);
        let picked = tape.hadamard(trace.log_probs, mask)?;
        Ok((tape.sum(picked), trace))
    }

    pub fn forward(&self, frames: &[Array2<f64>]) -> Result<Forward> {
        let mut tape = Tape::new();
        let b = tape.bind(&self.params, false);
        let trace = self.forward_on_tape(&mut tape, &b, frames)?;
        let probabilities = tape.value(trace.log_probs).row(0).mapv(f64::exp);
        let attention = trace.attention.iter().map(|&w| tape.value(w).clone()).collect();
        Ok(Forward {
            probabilities,
            attention,
        })
    }

    pub fn predict(&self, frames: &[Array2<f64>]) -> Result<usize> {
        let p = self.forward(frames)?.probabilities;
        Ok((0..p.len()).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap_or(0))
    }

    pub fn loss(&self, frames: &[Array2<f64>], label: usize) -> Result<f64> {
        let mut tape = Tape::new();
        let b = tape.bind(&self.params, false);
        let (l, _) = self.loss_on_tape(&mut tape, &b, frames, label)?;
        Ok(tape.scalar(l))
    }

    /// Loss, parameter gradients and class probabilities for one sequence.
    pub fn loss_and_grad(&self, frames: &[Array2<f64>], label: usize) -> Result<(f64, ParamStore, Array1<f64>)> {
        let mut tape = Tape::new();
        let b = tape.bind(&self.params, true);
        let (l, trace) = self.loss_on_tape(&mut tape, &b, frames, label)?;
        tape.backward(l)?;
        let probs = tape.value(trace.log_probs).row(0).mapv(f64::exp);
        let loss = tape.scalar(l);
        Ok((loss, tape.into_gradients(&b), probs))
    }

    /// Per-frame joint saliency from the first attending layer: column means
    /// of the row-stochastic weighting, so each row sums to one.
    pub fn extract_au_weights(&self, frames: &[Array2<f64>]) -> Result<Array2<f64>> {
        if !self.config.attend {
            return Err(Error::InvalidArgument("model has no attending layers".into()));
        }
        let fwd = self.forward(frames)?;
        let n = self.num_nodes();
        let mut out = Array2::zeros((frames.len(), n));
        for (t, w) in fwd.attention.iter().enumerate() {
            let means = w.mean_axis(ndarray::Axis(0)).expect("non-empty");
            out.row_mut(t).assign(&means);
        }
        Ok(out)
    }

    /// Checkpoint with model metadata; `extra` adds further header entries.
    pub fn to_checkpoint(&self, extra: &BTreeMap<String, String>) -> Checkpoint {
        let mut meta = extra.clone();
        meta.insert("config".into(), self.config.to_inline());
        meta.insert("num_classes".into(), self.num_classes.to_string());
        meta.insert("num_nodes".into(), self.num_nodes().to_string());
        let edges: Vec<String> = self.edges.iter().map(|(i, j)| format!("{i}-{j}")).collect();
        meta.insert("edges".into(), edges.join(","));
        Checkpoint {
            meta,
            params: self.params.clone(),
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let field = |k: &str| {
            ckpt.meta
                .get(k)
                .ok_or_else(|| Error::Config(format!("checkpoint missing `{k}`")))
        };
        let config = TrainConfig::from_inline(field("config")?)?;
        let num_classes: usize = field("num_classes")?
            .parse()
            .map_err(|_| Error::Config("bad num_classes".into()))?;
        let num_nodes: usize = field("num_nodes")?
            .parse()
            .map_err(|_| Error::Config("bad num_nodes".into()))?;
        let edges = field("edges")?
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|e| {
                let (i, j) = e.split_once('-').ok_or_else(|| Error::Config(format!("bad edge `{e}`")))?;
                let parse = |s: &str| s.parse::<usize>().map_err(|_| Error::Config(format!("bad edge `{e}`")));
                Ok((parse(i)?, parse(j)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut model = Self::build(&config, num_nodes, &edges, num_classes)?;
        for (name, value) in model.params.iter_mut() {
            let stored = ckpt.params.get(name)?;
            if stored.dim() != value.dim() {
                return Err(Error::Shape {
                    op: "from_checkpoint",
                    lhs: value.dim(),
                    rhs: stored.dim(),
                });
            }
            value.assign(stored);
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_checkpoint(&BTreeMap::new()).save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }

    /// Finite-difference check of every parameter on one labelled sequence.
    pub fn gradcheck(&self, frames: &[Array2<f64>], label: usize, opts: &GradcheckOptions) -> Result<GradcheckReport> {
        gradcheck(
            &self.params,
            |tape, b| self.loss_on_tape(tape, b, frames, label).map(|(l, _)| l),
            opts,
        )
    }
}

/// Six-joint template used for quick gradient checks.
pub const TOY_EDGES: [(usize, usize); 5] = [(0, 1), (1, 2), (1, 3), (2, 4), (2, 5)];
pub const TOY_HIDDEN: usize = 16;
pub const TOY_FRAMES: usize = 4;
pub const TOY_CLASSES: usize = 3;

/// Builds the toy model from `config` with `hidden` reduced to
/// [`TOY_HIDDEN`], draws a random sequence from `opts.seed`, and checks
/// every parameter.
pub fn toy_gradcheck(config: &TrainConfig, opts: &GradcheckOptions) -> Result<GradcheckReport> {
    let mut cfg = config.clone();
    cfg.hidden = TOY_HIDDEN;
    let model = A2gnnModel::build(&cfg, 6, &TOY_EDGES, TOY_CLASSES)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let frames: Vec<Array2<f64>> = (0..TOY_FRAMES)
        .map(|_| Array2::from_shape_fn((6, 3), |_| rng.random_range(-1.0..1.0)))
        .collect();
    model.gradcheck(&frames, 1, opts)
}
