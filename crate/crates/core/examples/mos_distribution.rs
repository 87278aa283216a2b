//! Histogram of MOS values per dimension, split by subset, plus the mean
//! score of each generator.
//!
//! ```text
//! cargo run --example mos_distribution -- [bins]
//! ```

use aigiqa::harness::mos_summary;
use aigiqa::subjective::compute_all_mos;
use aigiqa::synth::{generate, SynthSpec};

fn bar(count: usize) -> String {
    "#".repeat(count)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bins = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(10);
    let dir = tempfile::tempdir()?;
    let synth = generate(&SynthSpec { per_group: 10, side: 16, ..SynthSpec::default() }, dir.path())?;
    let labels = compute_all_mos(&synth.rating_events(15, 0.5, 4))?;
    let summary = mos_summary(&labels, &synth.corpus, bins)?;

    for d in &summary.dimensions {
        println!("== {}", d.dimension);
        for (i, count) in d.global.counts.iter().enumerate() {
            println!("  [{:.1}, {:.1}) {:>3} {}", d.global.edges[i], d.global.edges[i + 1], count, bar(*count));
        }
        for (subset, h) in &d.per_subset {
            println!("  {subset}: {} images", h.total());
        }
        for (g, mean) in &d.generator_means {
            println!("  {g} mean {mean:.3}");
        }
    }
    Ok(())
}
