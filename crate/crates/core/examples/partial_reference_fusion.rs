//! Partial-reference fusion on a batch that mixes images with and without
//! a source image. Padded rows score exactly like the no-reference model.
//!
//! ```text
//! cargo run --example partial_reference_fusion
//! ```

use aigiqa::assessor::{predict_nr, predict_pr, ImageTensor, PrSample, RegressionHead, StubBackbone, StubConfig};
use ndarray::Array3;

fn image(seed: f32) -> ImageTensor {
    ImageTensor(Array3::from_shape_fn((3, 32, 32), |(c, y, x)| {
        (seed * (c as f32 + 1.0) + 0.05 * y as f32 - 0.02 * x as f32).sin()
    }))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let stub = StubBackbone::new(StubConfig { feature_dim: 64, input_size: 32, grid: 4, seed: 3, bias: 1.0 });
    let head = RegressionHead::new(64, 9);

    let generated: Vec<ImageTensor> = (0..4).map(|i| image(0.3 + i as f32)).collect();
    let sources: Vec<ImageTensor> = (0..4).map(|i| image(2.0 - i as f32)).collect();
    let samples: Vec<PrSample<'_>> = generated
        .iter()
        .zip(&sources)
        .enumerate()
        .map(|(i, (g, r))| PrSample::new(g, (i % 2 == 0).then_some(r)))
        .collect();

    let pr = predict_pr(&stub, &head, &samples)?;
    let nr = predict_nr(&stub, &head, &generated)?;
    for (i, (p, n)) in pr.iter().zip(&nr).enumerate() {
        let kind = if i % 2 == 0 { "with source" } else { "padded" };
        println!("row {i} {kind:<12} PR {p:+.6} NR {n:+.6}");
    }
    Ok(())
}
