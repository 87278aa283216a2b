//! Feature fusion for the three assessor variants, plus text concatenation.

use std::fmt;
use std::str::FromStr;

use ndarray::{concatenate, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::AssessorError;

/// How generated-image and reference features are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    /// Generated image only.
    Nr,
    /// Concatenation of generated and reference features; every sample
    /// needs a reference.
    Fr,
    /// Masked mean of generated and (possibly absent) reference features.
    Pr,
}

impl FusionMode {
    /// Head input width for a backbone of width `feature_dim`.
    pub fn fused_dim(self, feature_dim: usize) -> usize {
        match self {
            FusionMode::Fr => 2 * feature_dim,
            FusionMode::Nr | FusionMode::Pr => feature_dim,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FusionMode::Nr => "nr",
            FusionMode::Fr => "fr",
            FusionMode::Pr => "pr",
        }
    }
}

impl fmt::Display for FusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FusionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nr" => Ok(FusionMode::Nr),
            "fr" => Ok(FusionMode::Fr),
            "pr" => Ok(FusionMode::Pr),
            other => Err(format!("unknown fusion mode `{other}` (expected nr, fr or pr)")),
        }
    }
}

/// `(p0, p1)`: `p0` is always 1, `p1` marks a real reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PaddingMask {
    /// (1, 1)
    Present,
    /// (1, 0)
    Padded,
}

impl PaddingMask {
    pub fn from_presence(has_reference: bool) -> Self {
        if has_reference {
            PaddingMask::Present
        } else {
            PaddingMask::Padded
        }
    }

    pub fn weights(self) -> (f64, f64) {
        match self {
            PaddingMask::Present => (1.0, 1.0),
            PaddingMask::Padded => (1.0, 0.0),
        }
    }
}

/// Generated-image feature, reference feature (zeros when padded), and mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBundle {
    generated: Array1<f64>,
    reference: Array1<f64>,
    mask: PaddingMask,
}

impl FeatureBundle {
    pub fn new(generated: Array1<f64>, reference: Array1<f64>, mask: PaddingMask) -> Result<Self, AssessorError> {
        if generated.len() != reference.len() {
            return Err(AssessorError::DimensionMismatch {
                expected: generated.len(),
                found: reference.len(),
                what: "reference feature",
            });
        }
        if mask == PaddingMask::Padded && reference.iter().any(|&v| v != 0.0) {
            return Err(AssessorError::MaskConflict);
        }
        Ok(Self { generated, reference, mask })
    }

    /// Pads a missing reference with zeros and sets the mask accordingly.
    pub fn from_optional(generated: Array1<f64>, reference: Option<Array1<f64>>) -> Result<Self, AssessorError> {
        match reference {
            Some(r) => Self::new(generated, r, PaddingMask::Present),
            None => {
                let zeros = Array1::zeros(generated.len());
                Self::new(generated, zeros, PaddingMask::Padded)
            }
        }
    }

    pub fn generated(&self) -> ArrayView1<'_, f64> {
        self.generated.view()
    }

    pub fn reference(&self) -> ArrayView1<'_, f64> {
        self.reference.view()
    }

    pub fn mask(&self) -> PaddingMask {
        self.mask
    }
}

/// Masked mean pooling `(f_g·p0 + f_p·p1) / (p0 + p1)`.
pub fn masked_mean(generated: ArrayView1<'_, f64>, reference: ArrayView1<'_, f64>, mask: PaddingMask) -> Array1<f64> {
    let (p0, p1) = mask.weights();
    let denom = p0 + p1;
    ndarray::Zip::from(&generated)
        .and(&reference)
        .map_collect(|&g, &r| (g * p0 + r * p1) / denom)
}

pub fn fuse_pr(bundle: &FeatureBundle) -> Array1<f64> {
    masked_mean(bundle.generated(), bundle.reference(), bundle.mask())
}

/// Row-wise concatenation of visual and text features.
pub fn fuse_text(visual: ArrayView2<'_, f64>, text: ArrayView2<'_, f64>) -> Result<Array2<f64>, AssessorError> {
    if visual.nrows() != text.nrows() {
        return Err(AssessorError::BatchMismatch {
            generated: visual.nrows(),
            reference: text.nrows(),
        });
    }
    Ok(concatenate(Axis(1), &[visual, text]).expect("row counts checked"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn pooling_examples() {
        let b = FeatureBundle::new(array![2.0, 4.0], array![4.0, 8.0], PaddingMask::Present).unwrap();
        assert_eq!(fuse_pr(&b), array![3.0, 6.0]);
        let b = FeatureBundle::new(array![2.0, 4.0], array![0.0, 0.0], PaddingMask::Padded).unwrap();
        assert_eq!(fuse_pr(&b), array![2.0, 4.0]);
        let b = FeatureBundle::from_optional(array![2.0, 4.0], None).unwrap();
        assert_eq!(b.mask(), PaddingMask::Padded);
        assert_eq!(fuse_pr(&b), array![2.0, 4.0]);
    }

    #[test]
    fn bundle_invariants() {
        assert!(matches!(
            FeatureBundle::new(array![1.0], array![1.0], PaddingMask::Padded),
            Err(AssessorError::MaskConflict)
        ));
        assert!(FeatureBundle::new(array![1.0, 2.0], array![1.0], PaddingMask::Present).is_err());
    }

    #[test]
    fn padded_slot_content_is_inert_in_the_formula() {
        let g = array![0.3, -1.2, 7.0];
        let junk = array![100.0, -55.0, 3.5];
        assert_eq!(masked_mean(g.view(), junk.view(), PaddingMask::Padded), g);
    }

    #[test]
    fn text_fusion() {
        let v = Array2::<f64>::ones((2, 512));
        let t = Array2::<f64>::zeros((2, 768));
        let f = fuse_text(v.view(), t.view()).unwrap();
        assert_eq!(f.dim(), (2, 1280));
        assert!(f.slice(ndarray::s![.., 512..]).iter().all(|&x| x == 0.0));

        let f = fuse_text(array![[1.0, 2.0]].view(), array![[3.0]].view()).unwrap();
        assert_eq!(f, array![[1.0, 2.0, 3.0]]);
        assert!(fuse_text(array![[1.0]].view(), array![[1.0], [2.0]].view()).is_err());
    }

    #[test]
    fn fused_widths() {
        assert_eq!(FusionMode::Nr.fused_dim(512), 512);
        assert_eq!(FusionMode::Fr.fused_dim(512), 1024);
        assert_eq!(FusionMode::Pr.fused_dim(512), 512);
        assert_eq!("PR".parse::<FusionMode>().unwrap(), FusionMode::Pr);
    }
}
