// Compare the analytic gradient of the training objective with central
// finite differences on a toy model.

use std::error::Error;

use attrec::corpus::TrainingInstance;
use attrec::model::{Gradients, ModelConfig, ModelParams};
use attrec::numerics::Rng;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let config = ModelConfig {
        dim: 4,
        window: 3,
        targets: 2,
        omega: 0.3,
        l2: 0.01,
        ..ModelConfig::default()
    };
    let mut rng = Rng::seed(9);
    let params = ModelParams::init(config, 3, 8, &mut rng)?;
    let inst = TrainingInstance {
        user: 1,
        context: vec![0, 4, 2],
        positives: vec![5, 7],
    };
    let negatives = vec![vec![1, 3]];

    let mut grads = Gradients::zeros_like(&params);
    let loss = params.batch_gradient(&[&inst], &negatives, &mut grads)?;
    println!("loss {loss:.6}");

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut probe = params.clone();
    for idx in 0..grads.w_query.as_slice().len() {
        let orig = probe.attention.w_query.as_slice()[idx];
        probe.attention.w_query.as_mut_slice()[idx] = orig + h;
        let up = probe.batch_loss(&[&inst], &negatives)?;
        probe.attention.w_query.as_mut_slice()[idx] = orig - h;
        let down = probe.batch_loss(&[&inst], &negatives)?;
        probe.attention.w_query.as_mut_slice()[idx] = orig;
        let numeric = (up - down) / (2.0 * h);
        let analytic = grads.w_query.as_slice()[idx];
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3);
        worst = worst.max(rel);
    }
    println!("W: worst relative error {worst:.2e}");
    for (name, analytic) in [("U", &grads.user), ("V", &grads.item_long), ("X", &grads.item_short)] {
        println!("{name}: max |grad| {:.4}", analytic.max_abs());
    }
    assert!(worst < 1e-5);
    Ok(())
}

fn main() {
    run_example().expect("gradient check failed");
}
