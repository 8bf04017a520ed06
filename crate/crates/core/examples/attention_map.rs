// Run the self-attention block on one window and print the affinity
// matrix, the attended rows and the sinusoidal time encodings.

use std::error::Error;

use attrec::attention::{attend, time_encoding_table, Aggregation, AttentionParams};
use attrec::numerics::{Matrix, Rng};

fn show(name: &str, m: &Matrix) {
    println!("{name}:");
    for r in 0..m.rows() {
        let cells: Vec<String> = m.row(r).iter().map(|x| format!("{x:>7.3}")).collect();
        println!("  {}", cells.join(" "));
    }
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let (window, dim) = (5, 8);
    let mut rng = Rng::seed(42);
    let items = Matrix::uniform(window, dim, 1.0, &mut rng);
    let params = AttentionParams {
        w_query: Matrix::uniform(dim, dim, 0.5, &mut rng),
        w_key: None,
        window,
        use_time_encoding: true,
        aggregation: Aggregation::Mean,
    };
    let out = attend(&items, &params)?;
    show("affinity (rows sum to 1, zero diagonal)", &out.affinity);
    for r in 0..window {
        let sum: f64 = out.affinity.row(r).iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }
    show("attended", &out.attended);
    println!("intent: {:?}", out.intent.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>());
    show("time encoding", &time_encoding_table(window, dim)?);
    Ok(())
}

fn main() {
    run_example().expect("attention example failed");
}
