//! Chebyshev spectral filtering on the 15-joint skeleton, checked against the
//! eigendecomposition oracle.

use a2gnn::data::synth::EDGES;
use a2gnn::graph::{adjacency_from_edges, estimate_lambda_max, normalized_laplacian, scaled_laplacian};
use a2gnn::layers::{spectral_filter_forward, SpectralFilterParams};
use a2gnn::oracles::{eig_symmetric, spectral_filter_oracle};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> a2gnn::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let a = adjacency_from_edges(15, &EDGES)?;
    let l = normalized_laplacian(&a)?;

    let eig = eig_symmetric(&l)?;
    let power = estimate_lambda_max(&l, 1e-10, 1000)?;
    println!("spectrum: min {:.4} max {:.4} (power iteration {:.4})", eig.eigenvalues[0], eig.eigenvalues[14], power);

    let k = 6;
    let x = Array2::from_shape_fn((15, 3), |_| rng.random_range(-1.0..1.0));
    let theta = Array2::from_shape_fn((3 * k, 4), |_| rng.random_range(-0.5..0.5));
    let scaled = scaled_laplacian(&l, 2.0)?;
    let fast = spectral_filter_forward(&scaled, &x, &SpectralFilterParams::new(theta.clone(), k)?)?;
    let exact = spectral_filter_oracle(&l, &x, &theta, k, 2.0)?;
    let err = (&fast - &exact).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!("K={k}: output {:?}, max |recurrence - oracle| = {err:.2e}", fast.dim());
    Ok(())
}
