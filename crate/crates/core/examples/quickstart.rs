// Train on a small synthetic log and rank each user's held-out item.
//
//     cargo run --release --example quickstart

use std::error::Error;

use attrec::corpus::{chronological_split, synthetic_sequences, InteractionLog, Target};
use attrec::eval::{evaluate, pop_baseline, CandidatePolicy, Popularity};
use attrec::model::ModelConfig;
use attrec::optim::{train, TrainConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let log = InteractionLog::from_sequences(60, synthetic_sequences(80, 60, 25, 3));
    let split = chronological_split(&log)?;

    let config = TrainConfig {
        model: ModelConfig {
            dim: 16,
            ..ModelConfig::default()
        },
        epochs: 8,
        batch_size: 100,
        eval_k: 10,
        ..TrainConfig::default()
    };
    let outcome = train(&log, &split, &config)?;
    for r in &outcome.trace {
        println!("epoch {:>2}  loss {:.4}  val hr@10 {:.3}", r.epoch, r.loss, r.val_hr);
    }

    let policy = CandidatePolicy::ExcludeSeen;
    let model = evaluate(&outcome.params, &split, 5, 10, policy, Target::Test)?;
    let pop = Popularity::from_order(pop_baseline(&split.train, log.num_items()));
    let base = evaluate(&pop, &split, 5, 10, policy, Target::Test)?;
    println!("best epoch {}", outcome.best_epoch);
    println!("attrec  hr@10 {:.3}  mrr {:.3}", model.hr_at_k, model.mrr);
    println!("pop     hr@10 {:.3}  mrr {:.3}", base.hr_at_k, base.mrr);
    Ok(())
}

fn main() {
    run_example().expect("quickstart failed");
}
