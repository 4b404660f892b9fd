//! Finite-difference check of every parameter group on a 6-joint toy model.

use a2gnn::config::TrainConfig;
use a2gnn::diff::GradcheckOptions;
use a2gnn::model::toy_gradcheck;

fn main() -> a2gnn::Result<()> {
    let cfg = TrainConfig {
        k: 3,
        channels: (4, 4),
        ..TrainConfig::default()
    };
    let opts = GradcheckOptions {
        max_entries: Some(16),
        ..GradcheckOptions::default()
    };
    let report = toy_gradcheck(&cfg, &opts)?;
    for p in &report.params {
        println!("{:<24} {:>4}/{:<4} rel {:.2e}", p.name, p.checked, p.total, p.max_rel_err);
    }
    println!("passed: {}", report.passed());
    Ok(())
}
