//! Train briefly, then print the per-joint saliency of the first attending
//! layer for a wave_right sequence and write an SVG rendering.
//!
//! cargo run --release --example au_saliency [out.svg]

use a2gnn::config::TrainConfig;
use a2gnn::data::synth::{synth_dataset, SynthClass, EDGES, JOINTS};
use a2gnn::data::Split;
use a2gnn::model::A2gnnModel;
use a2gnn::train::{preprocess, train, TrainOptions};
use a2gnn::viz::skeleton_svg;
use ndarray::Axis;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> a2gnn::Result<()> {
    let data = synth_dataset(&SynthClass::ALL, 15, &mut ChaCha8Rng::seed_from_u64(0));
    let cfg = TrainConfig {
        batch_size: 4,
        epochs: 60,
        target_accuracy: Some(0.95),
        ..TrainConfig::default()
    };
    let mut model = A2gnnModel::for_manifest(&cfg, &data.manifest)?;
    train(&mut model, &data, &cfg, &TrainOptions::default())?;

    let label = data.manifest.class_index("wave_right").unwrap();
    let seq = data.split(Split::Test).into_iter().find(|s| s.label == label).unwrap();
    let prepared = preprocess::<ChaCha8Rng>(seq, &data.manifest, &cfg, None)?;
    let w = model.extract_au_weights(&prepared.frames)?;
    let per_joint = w.mean_axis(Axis(0)).unwrap();
    for (name, s) in JOINTS.iter().zip(per_joint.iter()) {
        println!("{name:<12} {s:.4} {}", "#".repeat((s * 300.0) as usize));
    }
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, skeleton_svg(&prepared.frames[0], &EDGES, &w, &seq.id)).expect("write svg");
        println!("wrote {path}");
    }
    Ok(())
}
