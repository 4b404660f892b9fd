//! Test accuracy as a function of the Chebyshev order K on a small budget.

use a2gnn::cli::ksweep;
use a2gnn::config::TrainConfig;
use a2gnn::data::synth::{synth_dataset, SynthClass};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> a2gnn::Result<()> {
    let data = synth_dataset(&SynthClass::ALL, 6, &mut ChaCha8Rng::seed_from_u64(0));
    let base = TrainConfig {
        channels: (8, 8),
        hidden: 32,
        batch_size: 4,
        epochs: 10,
        ..TrainConfig::default()
    };
    print!("{}", ksweep(&data, &base, &[2, 4, 6])?);
    Ok(())
}
