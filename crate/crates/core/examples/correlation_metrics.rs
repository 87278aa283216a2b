//! SRCC and PLCC on a few hand-made prediction vectors.
//!
//! ```text
//! cargo run --example correlation_metrics
//! ```

use aigiqa::metrics::{correlations, srcc_closed_form, ScorePairSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = [1.2, 2.5, 3.1, 3.9, 4.6];
    let cases: [(&str, [f64; 5]); 4] = [
        ("identical", truth),
        ("monotone, nonlinear", truth.map(|x: f64| x.exp())),
        ("one swap", [1.2, 3.1, 2.5, 3.9, 4.6]),
        ("reversed", [4.6, 3.9, 3.1, 2.5, 1.2]),
    ];
    for (name, pred) in &cases {
        let c = correlations(&truth, pred)?;
        println!("{name:<20} SRCC {:+.4} PLCC {:+.4}", c.srcc, c.plcc);
    }

    let tied = [1.0, 2.0, 2.0, 4.0, 5.0];
    let pairs = ScorePairSet::new(&truth, &tied)?;
    println!("with ties: {:+.4}", correlations(&truth, &tied)?.srcc);
    println!("closed form on ties: {}", srcc_closed_form(pairs).unwrap_err());
    Ok(())
}
