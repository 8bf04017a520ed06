// Rank held-out items by global popularity under both candidate
// policies.

use std::error::Error;

use attrec::corpus::{chronological_split, synthetic_sequences, InteractionLog, Target};
use attrec::eval::{evaluate, pop_baseline, CandidatePolicy, Popularity};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let log = InteractionLog::from_sequences(100, synthetic_sequences(200, 100, 20, 8));
    let split = chronological_split(&log)?;
    let order = pop_baseline(&split.train, log.num_items());
    println!("five most popular items: {:?}", &order[..5]);
    let pop = Popularity::from_order(order);
    for policy in [CandidatePolicy::ExcludeSeen, CandidatePolicy::RankAll] {
        for k in [10, 50] {
            let r = evaluate(&pop, &split, 5, k, policy, Target::Test)?;
            println!("{policy:<12} hr@{k:<2} {:.3}  mrr {:.4}", r.hr_at_k, r.mrr);
        }
    }
    Ok(())
}

fn main() {
    run_example().expect("popularity example failed");
}
