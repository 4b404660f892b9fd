//! Independent reference computations used to check the fast paths:
//! a cyclic Jacobi eigensolver, exact spectral filtering through the
//! eigendecomposition, and central finite differences.
//!
//! None of this is on the training path.

use ndarray::Array2;

use crate::diff::ParamStore;
use crate::error::{Error, Result};
use crate::graph::chebyshev_scalar;

const SYMMETRY_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues in nondecreasing order with matching orthonormal eigenvector
/// columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Array2<f64>,
}

impl EigenDecomposition {
    /// `U diag(f(λ)) Uᵀ`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> Array2<f64> {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (mut col, &lam) in scaled.columns_mut().into_iter().zip(&self.eigenvalues) {
            col *= f(lam);
        }
        scaled.dot(&u.t())
    }
}

/// Cyclic Jacobi rotations on a symmetric matrix.
pub fn eig_symmetric(m: &Array2<f64>) -> Result<EigenDecomposition> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Shape {
            op: "eig_symmetric",
            lhs: m.dim(),
            rhs: (n, n),
        });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[[i, j]] - m[[j, i]]).abs() > SYMMETRY_TOL {
                return Err(Error::Asymmetric(i, j));
            }
        }
    }
    let mut a = m.clone();
    let mut v = Array2::<f64>::eye(n);
    let scale = m.iter().fold(0.0f64, |s, x| s.max(x.abs())).max(f64::MIN_POSITIVE);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[[i, j]] * a[[i, j]])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iters: MAX_SWEEPS,
            estimate: f64::NAN,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[i, i]].total_cmp(&a[[j, j]]));
    let eigenvalues = order.iter().map(|&i| a[[i, i]]).collect();
    let mut eigenvectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.column_mut(dst).assign(&v.column(src));
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Spectral filtering evaluated in the graph Fourier domain.
///
/// For every (input channel, output channel) pair the filter response
/// `g(λ) = Σ_k θ_k T_k(2λ/λ_max − 1)` is evaluated on each eigenvalue, and
/// the filtered channel is `U diag(g(λ)) Uᵀ x`. `theta` has the same
/// `(d_in·K) × d_out` layout as the Chebyshev path: row `k·d_in + c`.
pub fn spectral_filter_oracle(
    normalized: &Array2<f64>,
    x: &Array2<f64>,
    theta: &Array2<f64>,
    k: usize,
    lambda_max: f64,
) -> Result<Array2<f64>> {
    let d_in = x.ncols();
    if theta.nrows() != d_in * k || normalized.nrows() != x.nrows() {
        return Err(Error::Shape {
            op: "spectral_filter_oracle",
            lhs: theta.dim(),
            rhs: x.dim(),
        });
    }
    let eig = eig_symmetric(normalized)?;
    let u = &eig.eigenvectors;
    let x_hat = u.t().dot(x);
    let n = x.nrows();
    let d_out = theta.ncols();
    let mut z = Array2::zeros((n, d_out));
    for o in 0..d_out {
        for c in 0..d_in {
            let response: Vec<f64> = eig
                .eigenvalues
                .iter()
                .map(|&lam| {
                    let scaled = 2.0 * lam / lambda_max - 1.0;
                    (0..k).map(|kk| theta[[kk * d_in + c, o]] * chebyshev_scalar(kk, scaled)).sum()
                })
                .collect();
            for i in 0..n {
                let mut acc = 0.0;
                for (l, g) in response.iter().enumerate() {
                    acc += u[[i, l]] * g * x_hat[[l, c]];
                }
                z[[i, o]] += acc;
            }
        }
    }
    Ok(z)
}

/// Central differences of `loss` with respect to chosen flat (row-major)
/// entries of one parameter.
pub fn finite_diff_entries<F>(loss: F, store: &ParamStore, name: &str, step: f64, entries: &[usize]) -> Result<Vec<f64>>
where
    F: Fn(&ParamStore) -> Result<f64>,
{
    if !(step > 0.0) {
        return Err(Error::DegenerateStep);
    }
    let mut work = store.clone();
    let cols = store.get(name)?.ncols();
    let mut out = Vec::with_capacity(entries.len());
    for &flat in entries {
        let idx = [flat / cols, flat % cols];
        let orig = work.get(name)?[idx];
        work.get_mut(name)?[idx] = orig + step;
        let up = loss(&work)?;
        work.get_mut(name)?[idx] = orig - step;
        let down = loss(&work)?;
        work.get_mut(name)?[idx] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFiniteLoss);
        }
        out.push((up - down) / (2.0 * step));
    }
    Ok(out)
}

/// Full central-difference gradient of one parameter.
pub fn finite_diff_grad<F>(loss: F, store: &ParamStore, name: &str, step: f64) -> Result<Array2<f64>>
where
    F: Fn(&ParamStore) -> Result<f64>,
{
    let dim = store.get(name)?.dim();
    let entries: Vec<usize> = (0..dim.0 * dim.1).collect();
    let values = finite_diff_entries(loss, store, name, step, &entries)?;
    Ok(Array2::from_shape_vec(dim, values).expect("one value per entry"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{adjacency_from_edges, normalized_laplacian};
    use ndarray::array;

    #[test]
    fn diagonal_matrix() {
        let m = Array2::from_diag(&ndarray::arr1(&[3.0, -1.0, 2.0]));
        let e = eig_symmetric(&m).unwrap();
        assert_eq!(e.eigenvalues, vec![-1.0, 2.0, 3.0]);
        for v in e.eigenvectors.iter() {
            assert!(*v == 0.0 || v.abs() == 1.0);
        }
    }

    #[test]
    fn two_node_laplacian_spectrum() {
        let l = normalized_laplacian(&adjacency_from_edges(2, &[(0, 1)]).unwrap()).unwrap();
        let e = eig_symmetric(&l).unwrap();
        assert!(e.eigenvalues[0].abs() < 1e-14);
        assert!((e.eigenvalues[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        // deterministic pseudo-random symmetric 8x8
        let n = 8;
        let mut m = Array2::zeros((n, n));
        let mut s = 12345u64;
        for i in 0..n {
            for j in i..n {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let v = ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
                m[[i, j]] = v;
                m[[j, i]] = v;
            }
        }
        let e = eig_symmetric(&m).unwrap();
        let u = &e.eigenvectors;
        let utu = u.t().dot(u) - Array2::<f64>::eye(n);
        assert!(utu.iter().all(|v| v.abs() < 1e-9));
        let rec = e.apply_fn(|l| l) - &m;
        assert!(rec.iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn oracle_trivial_cases() {
        let l = normalized_laplacian(&adjacency_from_edges(3, &[(0, 1), (1, 2)]).unwrap()).unwrap();
        let x = array![[1.0, 2.0], [0.0, -1.0], [0.5, 0.25]];
        let theta = array![[1.0, 0.0, 2.0], [0.0, 1.0, -1.0]];
        let z = spectral_filter_oracle(&l, &x, &theta, 1, 2.0).unwrap();
        let direct = x.dot(&theta);
        assert!((z - direct).iter().all(|v| v.abs() < 1e-12));
        let z0 = spectral_filter_oracle(&l, &x, &Array2::zeros((4, 3)), 2, 2.0).unwrap();
        assert!(z0.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn finite_diff_rejects_zero_step() {
        let mut p = ParamStore::new();
        p.insert("w", array![[1.0]]);
        let r = finite_diff_grad(|s| Ok(s.get("w")?[[0, 0]]), &p, "w", 0.0);
        assert!(matches!(r, Err(Error::DegenerateStep)));
    }

    #[test]
    fn finite_diff_quadratic() {
        let mut p = ParamStore::new();
        p.insert("w", array![[1.0, -2.0, 0.5]]);
        let g = finite_diff_grad(|s| Ok(s.get("w")?.mapv(|v| v * v).sum()), &p, "w", 1e-5).unwrap();
        for (a, b) in g.iter().zip([2.0, -4.0, 1.0]) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
