//! Reduces raw ratings to MOS labels with outlier rejection.
//!
//! ```text
//! cargo run --example compute_mos
//! ```

use aigiqa::subjective::{compute_all_mos, compute_mos, Dimension};
use aigiqa::synth::{generate, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // one image, four evaluators, one of them far off
    let ratings: Vec<(String, f64)> = [("e1", 1.0), ("e2", 2.0), ("e3", 3.0), ("e4", 10.0)]
        .into_iter()
        .map(|(e, s)| (e.to_string(), s))
        .collect();
    let l = compute_mos("img-1", Dimension::Quality, &ratings)?;
    println!(
        "mean {:.3} sd {:.3} eps {:.4} -> kept {} discarded {:?} mos {:.3}",
        l.mean, l.stddev, l.epsilon, l.kept_count, l.discarded_ids, l.mos
    );

    // a whole database rated by fifteen noisy evaluators
    let dir = tempfile::tempdir()?;
    let synth = generate(&SynthSpec { per_group: 1, side: 16, ..SynthSpec::default() }, dir.path())?;
    let events = synth.rating_events(15, 0.6, 1);
    let labels = compute_all_mos(&events)?;
    for l in labels.iter().filter(|l| l.dimension == Dimension::Quality) {
        let latent = synth.latent(&l.image_id, l.dimension).unwrap_or(f64::NAN);
        println!("{:<22} latent {latent:.2} mos {:.2} ({} discarded)", l.image_id, l.mos, l.discarded_ids.len());
    }
    Ok(())
}
