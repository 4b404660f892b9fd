//! Non-learnable graph math: skeleton graphs, normalized and rescaled
//! Laplacians, and the Chebyshev basis applied to node signals.
//!
//! Everything here is plain `f64` linear algebra on dense matrices; the
//! skeletons we deal with have at most a few dozen joints.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Symmetric tolerance used when validating adjacency matrices.
const SYMMETRY_TOL: f64 = 1e-12;

/// How the largest eigenvalue of a normalized Laplacian is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaMax {
    /// Use a fixed value. `Fixed(2.0)` is exact for bipartite graphs (trees).
    Fixed(f64),
    /// Power iteration with the given relative tolerance, capped at 2.
    PowerIteration { tol: f64, max_iters: usize },
}

impl Default for LambdaMax {
    fn default() -> Self {
        LambdaMax::Fixed(2.0)
    }
}

impl LambdaMax {
    pub fn resolve(&self, normalized: &Array2<f64>) -> Result<f64> {
        match *self {
            LambdaMax::Fixed(v) => Ok(v),
            LambdaMax::PowerIteration { tol, max_iters } => {
                estimate_lambda_max(normalized, tol, max_iters).map(|v| v.min(2.0))
            }
        }
    }
}

/// Undirected attribute graph: bone adjacency plus one 3D signal per joint.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonGraph {
    adjacency: Array2<f64>,
    signals: Array2<f64>,
}

impl SkeletonGraph {
    /// Builds a graph from an undirected edge list with unit weights.
    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize)], signals: Array2<f64>) -> Result<Self> {
        let adjacency = adjacency_from_edges(num_nodes, edges)?;
        Self::new(adjacency, signals)
    }

    pub fn new(adjacency: Array2<f64>, signals: Array2<f64>) -> Result<Self> {
        let n = adjacency.nrows();
        if adjacency.ncols() != n || signals.nrows() != n {
            return Err(Error::Shape {
                op: "SkeletonGraph::new",
                lhs: adjacency.dim(),
                rhs: signals.dim(),
            });
        }
        check_symmetric(&adjacency)?;
        for i in 0..n {
            if adjacency[[i, i]] != 0.0 {
                return Err(Error::InvalidArgument(format!("self-loop on node {i}")));
            }
        }
        degrees(&adjacency)?;
        Ok(Self { adjacency, signals })
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &Array2<f64> {
        &self.adjacency
    }

    pub fn signals(&self) -> &Array2<f64> {
        &self.signals
    }

    pub fn laplacians(&self, policy: LambdaMax) -> Result<LaplacianPair> {
        LaplacianPair::from_adjacency(&self.adjacency, policy)
    }
}

/// Normalized Laplacian together with its rescaled version for Chebyshev
/// filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianPair {
    pub normalized: Array2<f64>,
    pub scaled: Array2<f64>,
    pub lambda_max: f64,
}

impl LaplacianPair {
    pub fn from_adjacency(adjacency: &Array2<f64>, policy: LambdaMax) -> Result<Self> {
        let normalized = normalized_laplacian(adjacency)?;
        let lambda_max = policy.resolve(&normalized)?;
        let scaled = scaled_laplacian(&normalized, lambda_max)?;
        Ok(Self {
            normalized,
            scaled,
            lambda_max,
        })
    }
}

/// Dense unit-weight adjacency from an undirected edge list.
pub fn adjacency_from_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Array2<f64>> {
    let mut a = Array2::zeros((num_nodes, num_nodes));
    for &(i, j) in edges {
        if i >= num_nodes || j >= num_nodes {
            return Err(Error::InvalidArgument(format!(
                "edge ({i}, {j}) out of range for {num_nodes} nodes"
            )));
        }
        if i == j {
            return Err(Error::InvalidArgument(format!("self-loop edge ({i}, {i})")));
        }
        if a[[i, j]] != 0.0 {
            return Err(Error::InvalidArgument(format!("duplicate edge ({i}, {j})")));
        }
        a[[i, j]] = 1.0;
        a[[j, i]] = 1.0;
    }
    Ok(a)
}

fn check_symmetric(a: &Array2<f64>) -> Result<()> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape {
            op: "symmetric",
            lhs: a.dim(),
            rhs: (n, n),
        });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[[i, j]] - a[[j, i]]).abs() > SYMMETRY_TOL {
                return Err(Error::Asymmetric(i, j));
            }
        }
    }
    Ok(())
}

fn degrees(a: &Array2<f64>) -> Result<Array1<f64>> {
    let d = a.sum_axis(ndarray::Axis(1));
    if let Some(i) = d.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::IsolatedNode(i));
    }
    if a.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidArgument("negative edge weight".into()));
    }
    Ok(d)
}

/// `I - D^{-1/2} A D^{-1/2}` with `D` the diagonal of row sums.
pub fn normalized_laplacian(adjacency: &Array2<f64>) -> Result<Array2<f64>> {
    check_symmetric(adjacency)?;
    let d = degrees(adjacency)?;
    let inv_sqrt = d.mapv(|v| 1.0 / v.sqrt());
    let n = adjacency.nrows();
    let mut l = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            l[[i, j]] = delta - inv_sqrt[i] * adjacency[[i, j]] * inv_sqrt[j];
        }
    }
    Ok(l)
}

/// `(2 / lambda_max) L - I`, which maps the spectrum of `L` into `[-1, 1]`.
pub fn scaled_laplacian(normalized: &Array2<f64>, lambda_max: f64) -> Result<Array2<f64>> {
    if !(lambda_max > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda_max must be positive, got {lambda_max}"
        )));
    }
    let mut s = normalized * (2.0 / lambda_max);
    s.diag_mut().mapv_inplace(|v| v - 1.0);
    Ok(s)
}

/// Dominant eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration on the Rayleigh quotient.
pub fn estimate_lambda_max(m: &Array2<f64>, tol: f64, max_iters: usize) -> Result<f64> {
    let n = m.nrows();
    if m.ncols() != n || n == 0 {
        return Err(Error::Shape {
            op: "estimate_lambda_max",
            lhs: m.dim(),
            rhs: (n, n),
        });
    }
    // Start away from any structured eigenvector (constant, alternating).
    let mut v = Array1::from_iter((0..n).map(|i| 1.0 + ((i * 7 + 3) % 11) as f64 / 11.0));
    v /= v.dot(&v).sqrt();
    let mut estimate = 0.0;
    for iter in 0..max_iters {
        let w = m.dot(&v);
        let norm = w.dot(&w).sqrt();
        if !(norm > f64::MIN_POSITIVE) {
            return Err(Error::NoConvergence {
                iters: iter,
                estimate: 0.0,
            });
        }
        let next = v.dot(&w);
        v = w / norm;
        if iter > 0 && (next - estimate).abs() <= tol * next.abs() {
            return Ok(next);
        }
        estimate = next;
    }
    Err(Error::NoConvergence {
        iters: max_iters,
        estimate,
    })
}

/// Chebyshev basis `[T_0(L)X, ..., T_{K-1}(L)X]` through the three-term
/// recurrence; no eigendecomposition involved.
pub fn chebyshev_apply(scaled: &Array2<f64>, x: &Array2<f64>, k: usize) -> Result<Vec<Array2<f64>>> {
    if k < 1 {
        return Err(Error::InvalidArgument("Chebyshev order K must be >= 1".into()));
    }
    if scaled.ncols() != x.nrows() || scaled.nrows() != scaled.ncols() {
        return Err(Error::Shape {
            op: "chebyshev_apply",
            lhs: scaled.dim(),
            rhs: x.dim(),
        });
    }
    let mut terms = Vec::with_capacity(k);
    terms.push(x.clone());
    if k > 1 {
        terms.push(scaled.dot(x));
    }
    for i in 2..k {
        let next = scaled.dot(&terms[i - 1]) * 2.0 - &terms[i - 2];
        terms.push(next);
    }
    Ok(terms)
}

/// Scalar Chebyshev polynomial of the first kind.
pub fn chebyshev_scalar(k: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    match k {
        0 => 1.0,
        _ => {
            for _ in 1..k {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn path3() -> Array2<f64> {
        adjacency_from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn two_node_laplacian() {
        let a = adjacency_from_edges(2, &[(0, 1)]).unwrap();
        let l = normalized_laplacian(&a).unwrap();
        assert_eq!(l, array![[1.0, -1.0], [-1.0, 1.0]]);
        let s = scaled_laplacian(&l, 2.0).unwrap();
        assert_eq!(s, array![[0.0, -1.0], [-1.0, 0.0]]);
        assert!((estimate_lambda_max(&l, 1e-12, 1000).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn path_laplacian() {
        let l = normalized_laplacian(&path3()).unwrap();
        let r = 1.0 / 2f64.sqrt();
        let expected = array![[1.0, -r, 0.0], [-r, 1.0, -r], [0.0, -r, 1.0]];
        for (a, b) in l.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
        let lm = estimate_lambda_max(&l, 1e-12, 10_000).unwrap();
        assert!((lm - 2.0).abs() < 1e-6);
    }

    #[test]
    fn scaled_identity_is_zero() {
        let eye = Array2::<f64>::eye(3);
        assert_eq!(scaled_laplacian(&eye, 2.0).unwrap(), Array2::<f64>::zeros((3, 3)));
        assert!(scaled_laplacian(&eye, 0.0).is_err());
        assert!(scaled_laplacian(&eye, -1.0).is_err());
    }

    #[test]
    fn zero_matrix_power_iteration_fails() {
        let z = Array2::<f64>::zeros((3, 3));
        assert!(matches!(estimate_lambda_max(&z, 1e-6, 100), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn rejects_bad_adjacency() {
        let a = array![[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        assert!(matches!(normalized_laplacian(&a), Err(Error::IsolatedNode(2))));
        let b = array![[0.0, 1.0], [0.5, 0.0]];
        assert!(matches!(normalized_laplacian(&b), Err(Error::Asymmetric(0, 1))));
        assert!(adjacency_from_edges(3, &[(0, 1), (1, 0)]).is_err());
        assert!(adjacency_from_edges(3, &[(0, 3)]).is_err());
    }

    #[test]
    fn chebyshev_small_orders() {
        let l = scaled_laplacian(&normalized_laplacian(&path3()).unwrap(), 2.0).unwrap();
        let x = array![[1.0, 2.0], [0.5, -1.0], [3.0, 0.0]];
        let t1 = chebyshev_apply(&l, &x, 1).unwrap();
        assert_eq!(t1, vec![x.clone()]);
        let t3 = chebyshev_apply(&l, &x, 3).unwrap();
        let expected = l.dot(&l.dot(&x)) * 2.0 - &x;
        assert_eq!(t3[2], expected);
        assert!(chebyshev_apply(&l, &x, 0).is_err());
    }

    #[test]
    fn chebyshev_scalar_anchor() {
        assert_eq!(chebyshev_scalar(2, 0.5), -0.5);
        assert_eq!(chebyshev_scalar(0, 0.3), 1.0);
        assert_eq!(chebyshev_scalar(1, 0.3), 0.3);
        // T_k(cos t) = cos(k t)
        let t: f64 = 0.7;
        for k in 0..12 {
            assert!((chebyshev_scalar(k, t.cos()) - (k as f64 * t).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn skeleton_graph_validation() {
        let x = Array2::zeros((3, 3));
        let g = SkeletonGraph::from_edges(3, &[(0, 1), (1, 2)], x.clone()).unwrap();
        assert_eq!(g.num_nodes(), 3);
        let lp = g.laplacians(LambdaMax::default()).unwrap();
        assert_eq!(lp.lambda_max, 2.0);
        assert!(SkeletonGraph::from_edges(3, &[(0, 1)], x).is_err());
    }
}
