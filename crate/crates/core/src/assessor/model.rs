//! Predictors built from a backbone and a regression head.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use super::backbone::Backbone;
use super::fusion::{fuse_text, masked_mean, FusionMode, PaddingMask};
use super::head::RegressionHead;
use super::loss::{mse_gradient, mse_loss};
use super::preprocess::{ImageTensor, PreprocessPolicy};
use super::text::TextEncoder;
use super::AssessorError;

fn check_head(head: &RegressionHead, expected: usize) -> Result<(), AssessorError> {
    if head.input_dim() != expected {
        return Err(AssessorError::DimensionMismatch {
            expected,
            found: head.input_dim(),
            what: "regression head input",
        });
    }
    Ok(())
}

/// `ŝ = R(F(I_g))`
pub fn predict_nr(backbone: &dyn Backbone, head: &RegressionHead, images: &[ImageTensor]) -> Result<Vec<f64>, AssessorError> {
    check_head(head, backbone.spec().feature_dim)?;
    let feats = backbone.extract(images)?;
    Ok(head.forward(feats.view())?.to_vec())
}

/// `ŝ = R(concat(F(I_g), F(I_p)))` with one shared backbone.
pub fn predict_fr(
    backbone: &dyn Backbone,
    head: &RegressionHead,
    generated: &[ImageTensor],
    references: &[ImageTensor],
) -> Result<Vec<f64>, AssessorError> {
    if generated.len() != references.len() {
        return Err(AssessorError::BatchMismatch {
            generated: generated.len(),
            reference: references.len(),
        });
    }
    check_head(head, 2 * backbone.spec().feature_dim)?;
    let fg = backbone.extract(generated)?;
    let fp = backbone.extract(references)?;
    let fused = ndarray::concatenate(Axis(1), &[fg.view(), fp.view()]).expect("equal rows");
    Ok(head.forward(fused.view())?.to_vec())
}

/// One partial-reference input with its explicit padding mask.
#[derive(Debug, Clone, Copy)]
pub struct PrSample<'a> {
    pub generated: &'a ImageTensor,
    pub reference: Option<&'a ImageTensor>,
    pub mask: PaddingMask,
}

impl<'a> PrSample<'a> {
    pub fn new(generated: &'a ImageTensor, reference: Option<&'a ImageTensor>) -> Self {
        Self {
            generated,
            reference,
            mask: PaddingMask::from_presence(reference.is_some()),
        }
    }
}

/// Masked mean pooling of the shared-backbone features, then the head.
/// Padded references never reach the backbone; their slot is a zero vector.
pub fn predict_pr(backbone: &dyn Backbone, head: &RegressionHead, samples: &[PrSample<'_>]) -> Result<Vec<f64>, AssessorError> {
    check_head(head, backbone.spec().feature_dim)?;
    let generated: Vec<ImageTensor> = samples.iter().map(|s| s.generated.clone()).collect();
    let (references, rows) = reference_rows(samples)?;
    let fg = backbone.extract(&generated)?;
    let fp = backbone.extract(&references)?;
    let fused = pool_rows(&fg, &fp, &rows);
    Ok(head.forward(fused.view())?.to_vec())
}

fn reference_rows(samples: &[PrSample<'_>]) -> Result<(Vec<ImageTensor>, Vec<Option<usize>>), AssessorError> {
    let mut refs = Vec::new();
    let mut rows = Vec::with_capacity(samples.len());
    for s in samples {
        match (s.mask, s.reference) {
            (PaddingMask::Present, Some(r)) => {
                rows.push(Some(refs.len()));
                refs.push(r.clone());
            }
            (PaddingMask::Padded, None) => rows.push(None),
            (PaddingMask::Padded, Some(_)) => return Err(AssessorError::MaskConflict),
            (PaddingMask::Present, None) => return Err(AssessorError::MissingReference),
        }
    }
    Ok((refs, rows))
}

fn pool_rows(fg: &Array2<f64>, fp: &Array2<f64>, rows: &[Option<usize>]) -> Array2<f64> {
    let mut fused = Array2::zeros(fg.dim());
    let zeros = Array1::zeros(fg.ncols());
    for (i, row) in rows.iter().enumerate() {
        let (reference, mask) = match row {
            Some(j) => (fp.row(*j), PaddingMask::Present),
            None => (zeros.view(), PaddingMask::Padded),
        };
        fused.row_mut(i).assign(&masked_mean(fg.row(i), reference, mask));
    }
    fused
}

/// One sample as seen by an [`Assessor`].
#[derive(Debug, Clone, PartialEq)]
pub struct AssessorInput {
    pub generated: ImageTensor,
    pub reference: Option<ImageTensor>,
    pub text_prompt: Option<String>,
}

/// Gradients aligned with [`Assessor::parameter_groups_mut`].
#[derive(Debug, Clone)]
pub struct Gradients {
    pub groups: Vec<Vec<f64>>,
}

/// A full predictor: shared backbone, fusion, optional text branch, head.
pub struct Assessor {
    backbone: Box<dyn Backbone>,
    head: RegressionHead,
    fusion: FusionMode,
    text: Option<Box<dyn TextEncoder>>,
    policy: PreprocessPolicy,
    train_backbone: bool,
}

impl std::fmt::Debug for Assessor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Assessor")
            .field("backbone", self.backbone.spec())
            .field("fusion", &self.fusion)
            .field("text", &self.text.as_ref().map(|t| t.spec()))
            .field("head_input", &self.head.input_dim())
            .finish()
    }
}

struct Forward {
    head_input: Array2<f64>,
    references: Vec<ImageTensor>,
    rows: Vec<Option<usize>>,
    visual_dim: usize,
}

impl Assessor {
    /// Head input width is the fused visual width plus the text width, if any.
    pub fn new(
        backbone: Box<dyn Backbone>,
        fusion: FusionMode,
        text: Option<Box<dyn TextEncoder>>,
        head_seed: u64,
    ) -> Self {
        let visual = fusion.fused_dim(backbone.spec().feature_dim);
        let text_dim = text.as_ref().map_or(0, |t| t.spec().dim);
        let head = RegressionHead::new(visual + text_dim, head_seed);
        let policy = backbone.spec().preprocess_policy();
        Self {
            backbone,
            head,
            fusion,
            text,
            policy,
            train_backbone: true,
        }
    }

    pub fn from_parts(
        backbone: Box<dyn Backbone>,
        head: RegressionHead,
        fusion: FusionMode,
        text: Option<Box<dyn TextEncoder>>,
        policy: PreprocessPolicy,
    ) -> Result<Self, AssessorError> {
        let expected = fusion.fused_dim(backbone.spec().feature_dim) + text.as_ref().map_or(0, |t| t.spec().dim);
        check_head(&head, expected)?;
        policy.validate()?;
        Ok(Self {
            backbone,
            head,
            fusion,
            text,
            policy,
            train_backbone: true,
        })
    }

    pub fn with_policy(mut self, policy: PreprocessPolicy) -> Self {
        self.policy = policy;
        self
    }

    /// Excludes backbone parameters from training.
    pub fn freeze_backbone(&mut self, frozen: bool) {
        self.train_backbone = !frozen;
    }

    pub fn backbone_frozen(&self) -> bool {
        !self.train_backbone || self.backbone.parameters().is_empty()
    }

    pub fn backbone(&self) -> &dyn Backbone {
        self.backbone.as_ref()
    }

    pub fn backbone_mut(&mut self) -> &mut dyn Backbone {
        self.backbone.as_mut()
    }

    pub fn head(&self) -> &RegressionHead {
        &self.head
    }

    pub fn head_mut(&mut self) -> &mut RegressionHead {
        &mut self.head
    }

    pub fn fusion(&self) -> FusionMode {
        self.fusion
    }

    pub fn text_encoder(&self) -> Option<&dyn TextEncoder> {
        self.text.as_deref()
    }

    pub fn policy(&self) -> &PreprocessPolicy {
        &self.policy
    }

    fn text_features(&self, batch: &[AssessorInput]) -> Result<Option<Array2<f64>>, AssessorError> {
        let Some(enc) = &self.text else { return Ok(None) };
        let dim = enc.spec().dim;
        let mut m = Array2::zeros((batch.len(), dim));
        for (i, s) in batch.iter().enumerate() {
            let prompt = s.text_prompt.as_deref().ok_or(AssessorError::MissingTextPrompt)?;
            let v = enc.encode(prompt);
            m.row_mut(i).assign(&ndarray::ArrayView1::from(&v[..]));
        }
        Ok(Some(m))
    }

    fn forward(&self, batch: &[AssessorInput]) -> Result<Forward, AssessorError> {
        let generated: Vec<ImageTensor> = batch.iter().map(|s| s.generated.clone()).collect();
        let fg = self.backbone.extract(&generated)?;
        let (references, rows) = match self.fusion {
            FusionMode::Nr => (Vec::new(), vec![None; batch.len()]),
            FusionMode::Fr | FusionMode::Pr => {
                let samples: Vec<PrSample<'_>> =
                    batch.iter().map(|s| PrSample::new(&s.generated, s.reference.as_ref())).collect();
                reference_rows(&samples)?
            }
        };
        let visual = match self.fusion {
            FusionMode::Nr => fg,
            FusionMode::Fr => {
                if references.len() != batch.len() {
                    return Err(AssessorError::MissingReference);
                }
                let fp = self.backbone.extract(&references)?;
                ndarray::concatenate(Axis(1), &[fg.view(), fp.view()]).expect("equal rows")
            }
            FusionMode::Pr => {
                let fp = self.backbone.extract(&references)?;
                pool_rows(&fg, &fp, &rows)
            }
        };
        let visual_dim = visual.ncols();
        let head_input = match self.text_features(batch)? {
            Some(t) => fuse_text(visual.view(), t.view())?,
            None => visual,
        };
        Ok(Forward {
            head_input,
            references,
            rows,
            visual_dim,
        })
    }

    /// One score per sample.
    pub fn predict(&self, batch: &[AssessorInput]) -> Result<Vec<f64>, AssessorError> {
        let fwd = self.forward(batch)?;
        Ok(self.head.forward(fwd.head_input.view())?.to_vec())
    }

    /// Fused head inputs, useful for caching features of a frozen model.
    pub fn features(&self, batch: &[AssessorInput]) -> Result<Array2<f64>, AssessorError> {
        Ok(self.forward(batch)?.head_input)
    }

    pub fn predict_from_features(&self, features: ArrayView2<'_, f64>) -> Result<Vec<f64>, AssessorError> {
        Ok(self.head.forward(features)?.to_vec())
    }

    pub fn loss(&self, batch: &[AssessorInput], labels: &[f64]) -> Result<f64, AssessorError> {
        mse_loss(&self.predict(batch)?, labels)
    }

    /// Mean squared error and its gradient for every trainable group.
    pub fn loss_and_gradients(&self, batch: &[AssessorInput], labels: &[f64]) -> Result<(f64, Gradients), AssessorError> {
        let fwd = self.forward(batch)?;
        let (scores, cache) = self.head.forward_cached(fwd.head_input.view())?;
        let scores = scores.to_vec();
        let loss = mse_loss(&scores, labels)?;
        let d_scores = mse_gradient(&scores, labels)?;
        let (head_grads, d_input) = self.head.backward(fwd.head_input.view(), &cache, &d_scores);
        let mut groups: Vec<Vec<f64>> = head_grads.into_groups().into();

        if !self.backbone_frozen() {
            // text features are frozen; only the visual slice flows back
            let d_visual = d_input.slice(s![.., ..fwd.visual_dim]);
            let d = self.backbone.spec().feature_dim;
            let (d_fg, d_fp) = match self.fusion {
                FusionMode::Nr => (d_visual.to_owned(), Array2::zeros((0, d))),
                FusionMode::Fr => (
                    d_visual.slice(s![.., ..d]).to_owned(),
                    d_visual.slice(s![.., d..]).to_owned(),
                ),
                FusionMode::Pr => {
                    let mut d_fg = Array2::zeros((batch.len(), d));
                    let mut d_fp = Array2::zeros((fwd.references.len(), d));
                    for (i, row) in fwd.rows.iter().enumerate() {
                        match row {
                            Some(j) => {
                                d_fg.row_mut(i).assign(&(&d_visual.row(i) * 0.5));
                                d_fp.row_mut(*j).assign(&(&d_visual.row(i) * 0.5));
                            }
                            None => d_fg.row_mut(i).assign(&d_visual.row(i)),
                        }
                    }
                    (d_fg, d_fp)
                }
            };
            let generated: Vec<ImageTensor> = batch.iter().map(|s| s.generated.clone()).collect();
            let mut grad = vec![0.0; self.backbone.parameters().len()];
            self.backbone.accumulate_gradient(&generated, d_fg.view(), &mut grad)?;
            if !fwd.references.is_empty() {
                self.backbone.accumulate_gradient(&fwd.references, d_fp.view(), &mut grad)?;
            }
            groups.push(grad);
        }
        Ok((loss, Gradients { groups }))
    }

    /// Trainable parameters: the four head groups, then the backbone when
    /// it is not frozen.
    pub fn parameter_groups_mut(&mut self) -> Vec<&mut [f64]> {
        let frozen = self.backbone_frozen();
        let mut groups: Vec<&mut [f64]> = self.head.parameter_slices_mut().into_iter().collect();
        if !frozen {
            groups.push(self.backbone.parameters_mut());
        }
        groups
    }
}
