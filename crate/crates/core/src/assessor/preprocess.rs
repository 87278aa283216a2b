//! Image preprocessing: resize, crop, flip, normalize.

use image::imageops::{self, FilterType};
use image::RgbImage;
use ndarray::Array3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AssessorError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessPolicy {
    pub resize_to: u32,
    pub crop_to: u32,
    pub random_crop: bool,
    pub hflip_prob: f64,
}

impl PreprocessPolicy {
    /// 256 → random 224 crop, 50% horizontal flip.
    pub const DEFAULT: PreprocessPolicy = PreprocessPolicy {
        resize_to: 256,
        crop_to: 224,
        random_crop: true,
        hflip_prob: 0.5,
    };

    /// 320 → random 299 crop, 50% horizontal flip.
    pub const INCEPTION: PreprocessPolicy = PreprocessPolicy {
        resize_to: 320,
        crop_to: 299,
        random_crop: true,
        hflip_prob: 0.5,
    };

    pub fn validate(&self) -> Result<(), AssessorError> {
        if self.crop_to == 0 || self.crop_to > self.resize_to {
            return Err(AssessorError::InvalidPolicy(format!(
                "crop_to {} must be in 1..={}",
                self.crop_to, self.resize_to
            )));
        }
        if !(0.0..=1.0).contains(&self.hflip_prob) {
            return Err(AssessorError::InvalidPolicy(format!(
                "hflip_prob {} is not a probability",
                self.hflip_prob
            )));
        }
        Ok(())
    }
}

impl Default for PreprocessPolicy {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Per-channel normalization statistics of a backbone's pretraining data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: [f32; 3],
    pub std: [f32; 3],
}

impl Normalization {
    pub const IMAGENET: Normalization = Normalization {
        mean: [0.485, 0.456, 0.406],
        std: [0.229, 0.224, 0.225],
    };

    /// Maps [0, 1] to [-1, 1]; used by Inception-style and ViT checkpoints.
    pub const SYMMETRIC: Normalization = Normalization {
        mean: [0.5, 0.5, 0.5],
        std: [0.5, 0.5, 0.5],
    };
}

/// Normalized CHW image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor(pub Array3<f32>);

impl ImageTensor {
    pub fn channels(&self) -> usize {
        self.0.dim().0
    }

    /// (height, width)
    pub fn size(&self) -> (usize, usize) {
        let (_, h, w) = self.0.dim();
        (h, w)
    }
}

/// First, deterministic stage: square resize. Callers may cache its output
/// across epochs since only the crop and flip are random.
pub fn resize(image: &RgbImage, policy: &PreprocessPolicy) -> RgbImage {
    if image.dimensions() == (policy.resize_to, policy.resize_to) {
        return image.clone();
    }
    imageops::resize(image, policy.resize_to, policy.resize_to, FilterType::Triangle)
}

/// Second stage on an already resized image.
pub fn crop_flip_normalize<R: Rng + ?Sized>(
    resized: &RgbImage,
    policy: &PreprocessPolicy,
    norm: &Normalization,
    mode: Mode,
    rng: &mut R,
) -> ImageTensor {
    let side = policy.resize_to;
    let crop = policy.crop_to;
    let span = side - crop;
    let (x0, y0, flip) = match mode {
        Mode::Train => {
            let (x0, y0) = if policy.random_crop && span > 0 {
                (rng.random_range(0..=span), rng.random_range(0..=span))
            } else {
                (span / 2, span / 2)
            };
            let flip = policy.hflip_prob > 0.0 && rng.random_bool(policy.hflip_prob);
            (x0, y0, flip)
        }
        Mode::Eval => (span / 2, span / 2, false),
    };

    let c = crop as usize;
    let mut out = Array3::<f32>::zeros((3, c, c));
    for y in 0..c {
        for x in 0..c {
            let sx = if flip { c - 1 - x } else { x };
            let px = resized.get_pixel(x0 + sx as u32, y0 + y as u32);
            for ch in 0..3 {
                let v = px[ch] as f32 / 255.0;
                out[[ch, y, x]] = (v - norm.mean[ch]) / norm.std[ch];
            }
        }
    }
    ImageTensor(out)
}

/// Full pipeline. Train: resize, random crop, random flip. Eval: resize,
/// center crop.
pub fn preprocess<R: Rng + ?Sized>(
    image: &RgbImage,
    policy: &PreprocessPolicy,
    norm: &Normalization,
    mode: Mode,
    rng: &mut R,
) -> Result<ImageTensor, AssessorError> {
    policy.validate()?;
    Ok(crop_flip_normalize(&resize(image, policy), policy, norm, mode, rng))
}

pub fn load_rgb(path: &std::path::Path) -> Result<RgbImage, AssessorError> {
    image::open(path)
        .map(|img| img.to_rgb8())
        .map_err(|e| AssessorError::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gradient_image(side: u32) -> RgbImage {
        RgbImage::from_fn(side, side, |x, y| image::Rgb([(x * 7 % 256) as u8, (y * 3 % 256) as u8, 128]))
    }

    #[test]
    fn policy_defaults() {
        assert_eq!((PreprocessPolicy::DEFAULT.resize_to, PreprocessPolicy::DEFAULT.crop_to), (256, 224));
        assert_eq!((PreprocessPolicy::INCEPTION.resize_to, PreprocessPolicy::INCEPTION.crop_to), (320, 299));
        assert_eq!(PreprocessPolicy::DEFAULT.hflip_prob, 0.5);
        let bad = PreprocessPolicy { crop_to: 300, ..PreprocessPolicy::DEFAULT };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn output_shapes() {
        let img = gradient_image(512);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for policy in [PreprocessPolicy::DEFAULT, PreprocessPolicy::INCEPTION] {
            for mode in [Mode::Train, Mode::Eval] {
                let t = preprocess(&img, &policy, &Normalization::IMAGENET, mode, &mut rng).unwrap();
                assert_eq!(t.0.dim(), (3, policy.crop_to as usize, policy.crop_to as usize));
            }
        }
    }

    #[test]
    fn eval_is_deterministic_and_centered() {
        let img = gradient_image(64);
        let policy = PreprocessPolicy { resize_to: 64, crop_to: 32, random_crop: true, hflip_prob: 0.5 };
        let a = preprocess(&img, &policy, &Normalization::SYMMETRIC, Mode::Eval, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = preprocess(&img, &policy, &Normalization::SYMMETRIC, Mode::Eval, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(a, b);
        // center crop starts at 16
        let expected = (img.get_pixel(16, 16)[0] as f32 / 255.0 - 0.5) / 0.5;
        assert_eq!(a.0[[0, 0, 0]], expected);
    }

    #[test]
    fn train_flip_mirrors_rows() {
        let img = gradient_image(8);
        let policy = PreprocessPolicy { resize_to: 8, crop_to: 8, random_crop: false, hflip_prob: 1.0 };
        let t = preprocess(&img, &policy, &Normalization::SYMMETRIC, Mode::Train, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let e = preprocess(&img, &policy, &Normalization::SYMMETRIC, Mode::Eval, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        for x in 0..8 {
            assert_eq!(t.0[[0, 3, x]], e.0[[0, 3, 7 - x]]);
        }
    }
}
