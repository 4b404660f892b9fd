//! Train on the four-class synthetic dataset and print per-epoch metrics.
//!
//! cargo run --release --example train_synthetic [epochs]

use a2gnn::config::TrainConfig;
use a2gnn::data::synth::{synth_dataset, SynthClass};
use a2gnn::data::Split;
use a2gnn::model::A2gnnModel;
use a2gnn::train::{evaluate, train, TrainOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> a2gnn::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(60);
    let data = synth_dataset(&SynthClass::ALL, 15, &mut ChaCha8Rng::seed_from_u64(0));
    let cfg = TrainConfig {
        batch_size: 4,
        epochs,
        target_accuracy: Some(0.95),
        ..TrainConfig::default()
    };
    let mut model = A2gnnModel::for_manifest(&cfg, &data.manifest)?;
    let opts = TrainOptions {
        verbose: true,
        ..TrainOptions::default()
    };
    let report = train(&mut model, &data, &cfg, &opts)?;
    let m = evaluate(&model, &data, Split::Test)?;
    println!("stopped after {} epochs, test accuracy {:.3}", report.completed_epochs, m.accuracy);
    print!("{}", m.confusion_csv(&data.manifest.classes));
    Ok(())
}
