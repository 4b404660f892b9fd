//! Centering, rotation alignment, segment augmentation and evaluation-time
//! sampling on one synthetic sequence.

use a2gnn::data::synth::{synth_generate, SynthClass};
use a2gnn::data::{augment, center_frames, sample_segments, AugmentOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let seq = synth_generate(SynthClass::Squat, 1, &mut rng).remove(0);
    println!("{}: {} frames x {} joints", seq.id, seq.num_frames(), seq.num_joints());

    let centered = center_frames(&seq);
    let c = centered.frames[0].mean_axis(ndarray::Axis(0)).unwrap();
    println!("centered frame 0 mean: [{:.2e}, {:.2e}, {:.2e}]", c[0], c[1], c[2]);

    let aug = augment(&centered, &AugmentOptions::default(), &mut rng);
    let eval = sample_segments(&centered, 12);
    println!("augmented: {} frames, evaluation sample: {} frames", aug.num_frames(), eval.num_frames());
}
