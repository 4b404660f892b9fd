//! The learnable layers: Chebyshev spectral filtering, the action-attending
//! pooling layer, a peephole LSTM cell and the classifier head.
//!
//! Each layer comes in two forms. The tape functions (`*_on_tape`) take
//! [`Var`] handles and are what the model uses for training. The plain
//! functions take owned parameter bundles, evaluate on a throwaway tape, and
//! return values; they exist for inspection and testing.

use ndarray::Array2;
use rand::Rng;

use crate::diff::{glorot_uniform, Bindings, ParamStore, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::LambdaMax;

/// Chebyshev filter weights, `(d_in·K) × d_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFilterParams {
    pub theta: Array2<f64>,
    pub k: usize,
}

impl SpectralFilterParams {
    pub fn new(theta: Array2<f64>, k: usize) -> Result<Self> {
        if k == 0 || !theta.nrows().is_multiple_of(k) {
            return Err(Error::InvalidArgument(format!(
                "theta with {} rows is not a multiple of K={k}",
                theta.nrows()
            )));
        }
        Ok(Self { theta, k })
    }

    pub fn init<R: Rng + ?Sized>(d_in: usize, d_out: usize, k: usize, rng: &mut R) -> Self {
        Self {
            theta: glorot_uniform(d_in * k, d_out, rng),
            k,
        }
    }

    pub fn d_in(&self) -> usize {
        self.theta.nrows() / self.k
    }

    pub fn d_out(&self) -> usize {
        self.theta.ncols()
    }

    pub fn store(&self, prefix: &str, params: &mut ParamStore) {
        params.insert(format!("{prefix}.theta"), self.theta.clone());
    }
}

/// Attending-layer weights: `Q: d_z × d'`, `V: d' × N'`, `b: 1 × d'`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttendParams {
    pub q: Array2<f64>,
    pub v: Array2<f64>,
    pub b: Array2<f64>,
}

impl AttendParams {
    pub fn init<R: Rng + ?Sized>(d_z: usize, d_hidden: usize, n_out: usize, rng: &mut R) -> Self {
        Self {
            q: glorot_uniform(d_z, d_hidden, rng),
            v: glorot_uniform(d_hidden, n_out, rng),
            b: Array2::zeros((1, d_hidden)),
        }
    }

    pub fn store(&self, prefix: &str, params: &mut ParamStore) {
        params.insert(format!("{prefix}.q"), self.q.clone());
        params.insert(format!("{prefix}.v"), self.v.clone());
        params.insert(format!("{prefix}.b"), self.b.clone());
    }
}

pub const LSTM_GATES: [&str; 4] = ["i", "f", "c", "o"];

/// Peephole LSTM weights. Input weights are `d_h × d_in`, recurrent weights
/// `d_h × d_h`; peepholes and biases are `1 × d_h` rows. Gate order is
/// input, forget, cell, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w_z: [Array2<f64>; 4],
    pub w_h: [Array2<f64>; 4],
    /// Peepholes for the input, forget and output gates.
    pub w_c: [Array2<f64>; 3],
    pub bias: [Array2<f64>; 4],
}

impl LstmParams {
    pub fn init<R: Rng + ?Sized>(d_in: usize, d_h: usize, rng: &mut R) -> Self {
        Self {
            w_z: std::array::from_fn(|_| glorot_uniform(d_h, d_in, rng)),
            w_h: std::array::from_fn(|_| glorot_uniform(d_h, d_h, rng)),
            w_c: std::array::from_fn(|_| glorot_uniform(1, d_h, rng)),
            bias: std::array::from_fn(|_| Array2::zeros((1, d_h))),
        }
    }

    pub fn zeros(d_in: usize, d_h: usize) -> Self {
        Self {
            w_z: std::array::from_fn(|_| Array2::zeros((d_h, d_in))),
            w_h: std::array::from_fn(|_| Array2::zeros((d_h, d_h))),
            w_c: std::array::from_fn(|_| Array2::zeros((1, d_h))),
            bias: std::array::from_fn(|_| Array2::zeros((1, d_h))),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_h[0].nrows()
    }

    pub fn store(&self, prefix: &str, params: &mut ParamStore) {
        for (g, gate) in LSTM_GATES.iter().enumerate() {
            params.insert(format!("{prefix}.w_z{gate}"), self.w_z[g].clone());
            params.insert(format!("{prefix}.w_h{gate}"), self.w_h[g].clone());
            params.insert(format!("{prefix}.b_{gate}"), self.bias[g].clone());
        }
        for (p, gate) in ["i", "f", "o"].iter().enumerate() {
            params.insert(format!("{prefix}.w_c{gate}"), self.w_c[p].clone());
        }
    }
}

/// Classifier head: `d_h → d_h` tanh layer followed by `d_h → C` logits.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    pub fc1: Array2<f64>,
    pub b1: Array2<f64>,
    pub fc2: Array2<f64>,
    pub b2: Array2<f64>,
}

impl HeadParams {
    pub fn init<R: Rng + ?Sized>(d_h: usize, classes: usize, rng: &mut R) -> Self {
        Self {
            fc1: glorot_uniform(d_h, d_h, rng),
            b1: Array2::zeros((1, d_h)),
            fc2: glorot_uniform(classes, d_h, rng),
            b2: Array2::zeros((1, classes)),
        }
    }

    pub fn store(&self, prefix: &str, params: &mut ParamStore) {
        params.insert(format!("{prefix}.fc1"), self.fc1.clone());
        params.insert(format!("{prefix}.b1"), self.b1.clone());
        params.insert(format!("{prefix}.fc2"), self.fc2.clone());
        params.insert(format!("{prefix}.b2"), self.b2.clone());
    }
}

/// `[T_0(L)X | T_1(L)X | ... | T_{K-1}(L)X] · Θ`.
pub fn spectral_filter_on_tape(tape: &mut Tape, scaled: Var, x: Var, theta: Var, k: usize) -> Result<Var> {
    if k == 0 {
        return Err(Error::InvalidArgument("Chebyshev order K must be >= 1".into()));
    }
    let d_in = tape.shape(x).1;
    if tape.shape(theta).0 != d_in * k {
        return Err(Error::Shape {
            op: "spectral_filter",
            lhs: tape.shape(theta),
            rhs: (d_in * k, tape.shape(theta).1),
        });
    }
    let mut terms = Vec::with_capacity(k);
    terms.push(x);
    if k > 1 {
        terms.push(tape.matmul(scaled, x)?);
    }
    for i in 2..k {
        let lt = tape.matmul(scaled, terms[i - 1])?;
        let twice = tape.scale(lt, 2.0);
        terms.push(tape.sub(twice, terms[i - 2])?);
    }
    let basis = tape.concat_cols(&terms)?;
    tape.matmul(basis, theta)
}

pub fn spectral_filter_forward(scaled: &Array2<f64>, x: &Array2<f64>, params: &SpectralFilterParams) -> Result<Array2<f64>> {
    let mut tape = Tape::new();
    let l = tape.constant(scaled.clone());
    let xv = tape.constant(x.clone());
    let th = tape.constant(params.theta.clone());
    let z = spectral_filter_on_tape(&mut tape, l, xv, th, params.k)?;
    Ok(tape.value(z).clone())
}

#[derive(Debug, Clone, Copy)]
pub struct AttendVars {
    pub q: Var,
    pub v: Var,
    pub b: Var,
}

impl AttendVars {
    pub fn bind(b: &Bindings, prefix: &str) -> Result<Self> {
        Ok(Self {
            q: b.get(&format!("{prefix}.q"))?,
            v: b.get(&format!("{prefix}.v"))?,
            b: b.get(&format!("{prefix}.b"))?,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AttendOutput {
    /// Row-stochastic `N' × N` weighting.
    pub weights: Var,
    /// `W · Z`, shape `N' × d_z`.
    pub pooled_signal: Var,
    /// `W A Wᵀ` and its rescaled normalized Laplacian, when requested.
    pub pooled_graph: Option<PooledGraph>,
}

#[derive(Debug, Clone, Copy)]
pub struct PooledGraph {
    pub adjacency: Var,
    pub scaled_laplacian: Var,
    pub lambda_max: f64,
}

/// Dynamic weighting `W = softmax_rows((tanh(ZQ + 1bᵀ) V)ᵀ)`, pooled signal
/// `W Z` and, when `adjacency` is given, the pooled graph `W A Wᵀ`.
pub fn attend_on_tape(
    tape: &mut Tape,
    z: Var,
    adjacency: Option<Var>,
    p: &AttendVars,
    lambda: LambdaMax,
) -> Result<AttendOutput> {
    let zq = tape.matmul(z, p.q)?;
    let pre = tape.add_broadcast_row(zq, p.b)?;
    let act = tape.tanh(pre);
    let scores = tape.matmul(act, p.v)?;
    let raw = tape.transpose(scores);
    let weights = tape.softmax_rows(raw);
    let pooled_signal = tape.matmul(weights, z)?;
    let pooled_graph = match adjacency {
        Some(a) => Some(pool_graph(tape, weights, a, lambda)?),
        None => None,
    };
    Ok(AttendOutput {
        weights,
        pooled_signal,
        pooled_graph,
    })
}

fn pool_graph(tape: &mut Tape, weights: Var, adjacency: Var, lambda: LambdaMax) -> Result<PooledGraph> {
    let wa = tape.matmul(weights, adjacency)?;
    let pooled = tape.matmul_t(wa, weights)?;
    let deg = tape.row_sums(pooled);
    if let Some(i) = tape.value(deg).iter().position(|&d| !(d > 0.0)) {
        return Err(Error::PooledIsolatedNode(i));
    }
    let n = tape.shape(pooled).0;
    let inv_sqrt = tape.powf(deg, -0.5);
    let outer = tape.matmul_t(inv_sqrt, inv_sqrt)?;
    let normalized_adj = tape.hadamard(outer, pooled)?;
    let eye = tape.constant(Array2::eye(n));
    let normalized = tape.sub(eye, normalized_adj)?;
    // Power iteration runs on values only; lambda_max is a constant here.
    let lambda_max = lambda.resolve(tape.value(normalized))?;
    let stretched = tape.scale(normalized, 2.0 / lambda_max);
    let scaled_laplacian = tape.sub(stretched, eye)?;
    Ok(PooledGraph {
        adjacency: pooled,
        scaled_laplacian,
        lambda_max,
    })
}

/// Values produced by [`attend_forward`].
#[derive(Debug, Clone)]
pub struct AttendResult {
    pub weights: Array2<f64>,
    pub pooled_signal: Array2<f64>,
    pub pooled_adjacency: Array2<f64>,
    pub pooled_scaled_laplacian: Array2<f64>,
}

pub fn attend_forward(z: &Array2<f64>, adjacency: &Array2<f64>, params: &AttendParams, lambda: LambdaMax) -> Result<AttendResult> {
    let mut tape = Tape::new();
    let zv = tape.constant(z.clone());
    let av = tape.constant(adjacency.clone());
    let vars = AttendVars {
        q: tape.constant(params.q.clone()),
        v: tape.constant(params.v.clone()),
        b: tape.constant(params.b.clone()),
    };
    let out = attend_on_tape(&mut tape, zv, Some(av), &vars, lambda)?;
    let pg = out.pooled_graph.expect("adjacency supplied");
    Ok(AttendResult {
        weights: tape.value(out.weights).clone(),
        pooled_signal: tape.value(out.pooled_signal).clone(),
        pooled_adjacency: tape.value(pg.adjacency).clone(),
        pooled_scaled_laplacian: tape.value(pg.scaled_laplacian).clone(),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct LstmVars {
    pub w_z: [Var; 4],
    pub w_h: [Var; 4],
    pub w_c: [Var; 3],
    pub bias: [Var; 4],
}

impl LstmVars {
    pub fn bind(b: &Bindings, prefix: &str) -> Result<Self> {
        let gate = |kind: &str, g: &str| b.get(&format!("{prefix}.{kind}{g}"));
        Ok(Self {
            w_z: [gate("w_z", "i")?, gate("w_z", "f")?, gate("w_z", "c")?, gate("w_z", "o")?],
            w_h: [gate("w_h", "i")?, gate("w_h", "f")?, gate("w_h", "c")?, gate("w_h", "o")?],
            w_c: [gate("w_c", "i")?, gate("w_c", "f")?, gate("w_c", "o")?],
            bias: [gate("b_", "i")?, gate("b_", "f")?, gate("b_", "c")?, gate("b_", "o")?],
        })
    }

    fn constants(tape: &mut Tape, p: &LstmParams) -> Self {
        Self {
            w_z: std::array::from_fn(|g| tape.constant(p.w_z[g].clone())),
            w_h: std::array::from_fn(|g| tape.constant(p.w_h[g].clone())),
            w_c: std::array::from_fn(|g| tape.constant(p.w_c[g].clone())),
            bias: std::array::from_fn(|g| tape.constant(p.bias[g].clone())),
        }
    }
}

/// Input projections `W_z· z_t` for every frame at once: one `T × d_h`
/// matrix per gate from the `T × d_in` stacked inputs.
pub fn lstm_project_inputs(tape: &mut Tape, inputs: Var, p: &LstmVars) -> Result<[Var; 4]> {
    Ok([
        tape.matmul_t(inputs, p.w_z[0])?,
        tape.matmul_t(inputs, p.w_z[1])?,
        tape.matmul_t(inputs, p.w_z[2])?,
        tape.matmul_t(inputs, p.w_z[3])?,
    ])
}

#[derive(Debug, Clone, Copy)]
pub struct LstmState {
    pub h: Var,
    pub c: Var,
    pub o: Var,
}

/// One peephole LSTM step given the precomputed input projections (`1 × d_h`
/// each, gate order i, f, c, o).
pub fn lstm_step_projected(tape: &mut Tape, proj: [Var; 4], h_prev: Var, c_prev: Var, p: &LstmVars) -> Result<LstmState> {
    let gate_pre = |tape: &mut Tape, g: usize| -> Result<Var> {
        let rec = tape.matmul_t(h_prev, p.w_h[g])?;
        let s = tape.add(proj[g], rec)?;
        tape.add(s, p.bias[g])
    };
    let pi = gate_pre(tape, 0)?;
    let peep_i = tape.hadamard(p.w_c[0], c_prev)?;
    let pi = tape.add(pi, peep_i)?;
    let i = tape.sigmoid(pi);

    let pf = gate_pre(tape, 1)?;
    let peep_f = tape.hadamard(p.w_c[1], c_prev)?;
    let pf = tape.add(pf, peep_f)?;
    let f = tape.sigmoid(pf);

    let pc = gate_pre(tape, 2)?;
    let cand = tape.tanh(pc);
    let keep = tape.hadamard(f, c_prev)?;
    let write = tape.hadamard(i, cand)?;
    let c = tape.add(keep, write)?;

    let po = gate_pre(tape, 3)?;
    let peep_o = tape.hadamard(p.w_c[2], c)?;
    let po = tape.add(po, peep_o)?;
    let o = tape.sigmoid(po);

    let ct = tape.tanh(c);
    let h = tape.hadamard(o, ct)?;
    Ok(LstmState { h, c, o })
}

pub fn lstm_step_on_tape(tape: &mut Tape, z: Var, h_prev: Var, c_prev: Var, p: &LstmVars) -> Result<LstmState> {
    let proj = lstm_project_inputs(tape, z, p)?;
    lstm_step_projected(tape, proj, h_prev, c_prev, p)
}

/// Values `(h_t, c_t, o_t)` of one step; all arguments are `1 × len` rows.
pub fn lstm_step(
    z: &Array2<f64>,
    h_prev: &Array2<f64>,
    c_prev: &Array2<f64>,
    params: &LstmParams,
) -> Result<(Array2<f64>, Array2<f64>, Array2<f64>)> {
    let mut tape = Tape::new();
    let vars = LstmVars::constants(&mut tape, params);
    let zv = tape.constant(z.clone());
    let hv = tape.constant(h_prev.clone());
    let cv = tape.constant(c_prev.clone());
    let s = lstm_step_on_tape(&mut tape, zv, hv, cv, &vars)?;
    Ok((tape.value(s.h).clone(), tape.value(s.c).clone(), tape.value(s.o).clone()))
}

#[derive(Debug, Clone, Copy)]
pub struct HeadVars {
    pub fc1: Var,
    pub b1: Var,
    pub fc2: Var,
    pub b2: Var,
}

impl HeadVars {
    pub fn bind(b: &Bindings, prefix: &str) -> Result<Self> {
        Ok(Self {
            fc1: b.get(&format!("{prefix}.fc1"))?,
            b1: b.get(&format!("{prefix}.b1"))?,
            fc2: b.get(&format!("{prefix}.fc2"))?,
            b2: b.get(&format!("{prefix}.b2"))?,
        })
    }
}

/// Class logits for a `1 × d_h` feature row.
pub fn head_logits_on_tape(tape: &mut Tape, features: Var, p: &HeadVars) -> Result<Var> {
    let a = tape.matmul_t(features, p.fc1)?;
    let a = tape.add_broadcast_row(a, p.b1)?;
    let hidden = tape.tanh(a);
    let logits = tape.matmul_t(hidden, p.fc2)?;
    tape.add_broadcast_row(logits, p.b2)
}

/// Class probabilities for a `1 × d_h` feature row.
pub fn classify(features: &Array2<f64>, params: &HeadParams) -> Result<Array2<f64>> {
    if params.fc2.nrows() < 2 {
        return Err(Error::InvalidArgument("classifier needs at least two classes".into()));
    }
    let mut tape = Tape::new();
    let vars = HeadVars {
        fc1: tape.constant(params.fc1.clone()),
        b1: tape.constant(params.b1.clone()),
        fc2: tape.constant(params.fc2.clone()),
        b2: tape.constant(params.b2.clone()),
    };
    let f = tape.constant(features.clone());
    let logits = head_logits_on_tape(&mut tape, f, &vars)?;
    let probs = tape.softmax_rows(logits);
    Ok(tape.value(probs).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{adjacency_from_edges, normalized_laplacian, scaled_laplacian};
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn path(n: usize) -> Array2<f64> {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        adjacency_from_edges(n, &edges).unwrap()
    }

    #[test]
    fn k1_identity_theta_is_passthrough() {
        let a = path(4);
        let l = scaled_laplacian(&normalized_laplacian(&a).unwrap(), 2.0).unwrap();
        let x = array![[1.0, 2.0, 3.0], [0.0, 1.0, 0.0], [-1.0, 0.5, 2.0], [4.0, 0.0, 1.0]];
        let p = SpectralFilterParams::new(Array2::eye(3), 1).unwrap();
        assert_eq!(spectral_filter_forward(&l, &x, &p).unwrap(), x);
    }

    #[test]
    fn spectral_output_widths() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = path(15);
        let l = scaled_laplacian(&normalized_laplacian(&a).unwrap(), 2.0).unwrap();
        let x = Array2::from_shape_simple_fn((15, 3), || rng.random_range(-1.0..1.0));
        let p1 = SpectralFilterParams::init(3, 32, 10, &mut rng);
        let z1 = spectral_filter_forward(&l, &x, &p1).unwrap();
        assert_eq!(z1.dim(), (15, 32));
        let p2 = SpectralFilterParams::init(32, 64, 10, &mut rng);
        assert_eq!(spectral_filter_forward(&l, &z1, &p2).unwrap().dim(), (15, 64));
        assert!(SpectralFilterParams::new(Array2::zeros((7, 2)), 2).is_err());
    }

    #[test]
    fn zero_attention_is_uniform_mean() {
        let a = path(5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let z = Array2::from_shape_simple_fn((5, 4), || rng.random_range(-1.0..1.0));
        let mut p = AttendParams::init(4, 4, 5, &mut rng);
        p.v.fill(0.0);
        let r = attend_forward(&z, &a, &p, LambdaMax::Fixed(2.0)).unwrap();
        assert!(r.weights.iter().all(|w| (w - 0.2).abs() < 1e-15));
        let mean = z.mean_axis(ndarray::Axis(0)).unwrap();
        for row in r.pooled_signal.rows() {
            for (a, b) in row.iter().zip(mean.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn attention_is_row_stochastic_and_pooled_graph_symmetric() {
        let a = path(6);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = Array2::from_shape_simple_fn((6, 3), || rng.random_range(-2.0..2.0));
        let p = AttendParams::init(3, 3, 6, &mut rng);
        let r = attend_forward(&z, &a, &p, LambdaMax::Fixed(2.0)).unwrap();
        for row in r.weights.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&w| w >= 0.0));
        }
        let asym = &r.pooled_adjacency - &r.pooled_adjacency.t();
        assert!(asym.iter().all(|v| v.abs() < 1e-12));
        // rescaled spectrum stays inside [-1, 1]
        let eig = crate::oracles::eig_symmetric(&r.pooled_scaled_laplacian).unwrap();
        assert!(eig.eigenvalues.iter().all(|&l| (-1.0 - 1e-9..=1.0 + 1e-9).contains(&l)));
    }

    #[test]
    fn pooled_power_iteration_policy() {
        let a = path(6);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let z = Array2::from_shape_simple_fn((6, 3), || rng.random_range(-2.0..2.0));
        let p = AttendParams::init(3, 3, 6, &mut rng);
        let policy = LambdaMax::PowerIteration { tol: 1e-10, max_iters: 100_000 };
        let r = attend_forward(&z, &a, &p, policy).unwrap();
        let eig = crate::oracles::eig_symmetric(&r.pooled_scaled_laplacian).unwrap();
        let top = *eig.eigenvalues.last().unwrap();
        assert!((top - 1.0).abs() < 1e-6, "top eigenvalue {top}");
    }

    #[test]
    fn zero_lstm_gates_half() {
        let p = LstmParams::zeros(6, 4);
        let zeros = |n| Array2::<f64>::zeros((1, n));
        let (h, c, o) = lstm_step(&zeros(6), &zeros(4), &zeros(4), &p).unwrap();
        assert!(h.iter().all(|&v| v == 0.0));
        assert!(c.iter().all(|&v| v == 0.0));
        assert!(o.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn lstm_hidden_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut p = LstmParams::init(8, 6, &mut rng);
        for w in p.w_z.iter_mut() {
            *w *= 40.0;
        }
        let mut h = Array2::zeros((1, 6));
        let mut c = Array2::zeros((1, 6));
        for _ in 0..20 {
            let z = Array2::from_shape_simple_fn((1, 8), || rng.random_range(-3.0..3.0));
            let (h2, c2, _) = lstm_step(&z, &h, &c, &p).unwrap();
            assert!(h2.iter().all(|v| v.abs() < 1.0));
            h = h2;
            c = c2;
        }
        assert!(lstm_step(&Array2::zeros((1, 7)), &h, &c, &p).is_err());
    }

    #[test]
    fn classifier_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut head = HeadParams::init(5, 3, &mut rng);
        let f = Array2::from_shape_simple_fn((1, 5), || rng.random_range(-1.0..1.0));
        let p = classify(&f, &head).unwrap();
        assert!((p.sum() - 1.0).abs() < 1e-12);
        let argmax = |p: &Array2<f64>| (0..3).max_by(|&a, &b| p[[0, a]].total_cmp(&p[[0, b]])).unwrap();
        let before = argmax(&p);
        head.b2 += 17.0;
        let shifted = classify(&f, &head).unwrap();
        assert_eq!(argmax(&shifted), before);
        for (a, b) in p.iter().zip(shifted.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        head.fc2.fill(0.0);
        head.b2.fill(0.0);
        let u = classify(&f, &head).unwrap();
        assert!(u.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
    }
}
