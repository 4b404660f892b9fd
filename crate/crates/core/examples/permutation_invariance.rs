//! Relabelling the joints of a skeleton does not change the attending layer's
//! pooled output or the model's class probabilities.

use a2gnn::config::TrainConfig;
use a2gnn::data::synth::EDGES;
use a2gnn::graph::{adjacency_from_edges, LambdaMax};
use a2gnn::layers::{attend_forward, AttendParams};
use a2gnn::model::A2gnnModel;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> a2gnn::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = EDGES.len() + 1;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    // perm[i] = old index placed at new position i
    let mut pos = vec![0; n];
    for (i, &j) in perm.iter().enumerate() {
        pos[j] = i;
    }
    let p = Array2::from_shape_fn((n, n), |(i, j)| f64::from(u8::from(perm[i] == j)));

    let a = adjacency_from_edges(n, &EDGES)?;
    let z = Array2::from_shape_fn((n, 5), |_| rng.random_range(-1.0..1.0));
    let params = AttendParams::init(5, 8, 6, &mut rng);
    let base = attend_forward(&z, &a, &params, LambdaMax::default())?;
    let moved = attend_forward(&p.dot(&z), &p.dot(&a).dot(&p.t()), &params, LambdaMax::default())?;
    let dz = (&base.pooled_signal - &moved.pooled_signal).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!("attend: max pooled-signal deviation {dz:.2e}");

    let cfg = TrainConfig::default();
    let model = A2gnnModel::build(&cfg, n, &EDGES, 4)?;
    let edges: Vec<_> = EDGES.iter().map(|&(u, v)| (pos[u], pos[v])).collect();
    let mut relabelled = A2gnnModel::build(&cfg, n, &edges, 4)?;
    relabelled.params = model.params.clone();
    let frames: Vec<_> = (0..12).map(|_| Array2::from_shape_fn((n, 3), |_| rng.random_range(-1.0..1.0))).collect();
    let moved: Vec<_> = frames.iter().map(|f| p.dot(f)).collect();
    let pa = model.forward(&frames)?.probabilities;
    let pb = relabelled.forward(&moved)?.probabilities;
    println!("model: probabilities {pa:.4}");
    println!("       relabelled    {pb:.4}");
    Ok(())
}
