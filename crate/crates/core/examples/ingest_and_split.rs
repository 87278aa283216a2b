//! Generates a small database, ingests its manifest, and writes a
//! stratified 3:1 split.
//!
//! ```text
//! cargo run --example ingest_and_split -- [seed]
//! ```

use std::collections::BTreeMap;

use aigiqa::corpus::{ingest, stratified_split, write_split, Fold, SplitRatio};
use aigiqa::synth::{generate, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let dir = tempfile::tempdir()?;
    let synth = generate(&SynthSpec::default(), dir.path())?;

    let corpus = ingest(&synth.manifest)?;
    println!("ingested {} images from {}", corpus.len(), synth.manifest.display());

    let split = stratified_split(&corpus, SplitRatio::THREE_TO_ONE, seed)?;
    let mut groups: BTreeMap<(String, String), [usize; 2]> = BTreeMap::new();
    for a in &split {
        let r = corpus.get(&a.image_id).expect("split ids come from the corpus");
        groups.entry((r.generator.clone(), r.category.clone())).or_default()[(a.fold == Fold::Test) as usize] += 1;
    }
    for ((g, c), [train, test]) in &groups {
        println!("{g:>6} {c:<8} train {train} test {test}");
    }

    let mut out = Vec::new();
    write_split(&mut out, &split)?;
    print!("{}", String::from_utf8(out)?.lines().take(3).map(|l| format!("{l}\n")).collect::<String>());
    Ok(())
}
