//! The five OOS confidence scores and the threshold decision rule.
//!
//! Raw scores keep each method's native orientation: MinDist and LCBO flag
//! OOS below the threshold, the softmax-based scores (background, generic,
//! centered generic) flag OOS above it. [`canonical_score`] negates the
//! first two so that "larger = more OOS-like" holds everywhere and one
//! AUROC/AUPR code path serves all detectors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{
    centroid, distance_vector, softmax_neg, ClassId, DistanceMode, Point, PrototypeContext,
};
use crate::params::{LayerParams, ParamsDoc};

/// How the prototype/query pair is fed to the LCBO network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LcboEncoding {
    /// `[prototype ; query]`, input width 2d.
    #[default]
    Concat,
    /// `prototype - query`, input width d.
    Diff,
    /// `[prototype ; query ; prototype - query]`, input width 3d.
    Both,
}

impl LcboEncoding {
    pub fn input_width(self, dim: usize) -> usize {
        match self {
            LcboEncoding::Concat => 2 * dim,
            LcboEncoding::Diff => dim,
            LcboEncoding::Both => 3 * dim,
        }
    }

    pub fn encode(self, proto: &Point, query: &Point) -> Vec<f64> {
        let (p, q) = (proto.coords(), query.coords());
        match self {
            LcboEncoding::Concat => p.iter().chain(q).copied().collect(),
            LcboEncoding::Diff => p.iter().zip(q).map(|(a, b)| a - b).collect(),
            LcboEncoding::Both => p
                .iter()
                .chain(q)
                .copied()
                .chain(p.iter().zip(q).map(|(a, b)| a - b))
                .collect(),
        }
    }
}

/// Small fully-connected network scoring one prototype/query pair:
/// rectifier on hidden layers, linear output of width 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LcboScorer {
    widths: Vec<usize>,
    layers: Vec<LayerParams>,
    encoding: LcboEncoding,
}

impl LcboScorer {
    /// Default hidden stack for embeddings of dimension `dim`: one hidden
    /// layer of width 64.
    pub fn default_widths(dim: usize, encoding: LcboEncoding) -> Vec<usize> {
        vec![encoding.input_width(dim), 64, 1]
    }

    pub fn from_layers(
        widths: Vec<usize>,
        layers: Vec<LayerParams>,
        encoding: LcboEncoding,
    ) -> Result<Self> {
        let doc = ParamsDoc {
            dims: widths.clone(),
            layers,
            optimizer: None,
        };
        doc.validate()?;
        if *doc.dims.last().unwrap() != 1 {
            return Err(Error::Params("LCBO output width must be 1".into()));
        }
        Ok(LcboScorer {
            widths: doc.dims,
            layers: doc.layers,
            encoding,
        })
    }

    /// All-zero parameters for the given widths.
    pub fn zeros(widths: Vec<usize>, encoding: LcboEncoding) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::Params("widths must list at least [in, out]".into()));
        }
        let layers = widths
            .windows(2)
            .map(|w| LayerParams {
                w: vec![vec![0.0; w[0]]; w[1]],
                b: vec![0.0; w[1]],
            })
            .collect();
        Self::from_layers(widths, layers, encoding)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn encoding(&self) -> LcboEncoding {
        self.encoding
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    /// Forward pass; also returns the post-activation hidden vectors, which
    /// the training module reuses for backpropagation.
    pub(crate) fn forward_trace(&self, input: &[f64]) -> Result<(f64, Vec<Vec<f64>>)> {
        if input.len() != self.input_width() {
            return Err(Error::DimensionMismatch {
                expected: self.input_width(),
                got: input.len(),
            });
        }
        let mut activations = vec![input.to_vec()];
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let prev = activations.last().unwrap();
            let mut out: Vec<f64> = layer
                .b
                .iter()
                .zip(&layer.w)
                .map(|(b, row)| b + row.iter().zip(prev).map(|(w, x)| w * x).sum::<f64>())
                .collect();
            if i < last {
                for v in &mut out {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            activations.push(out);
        }
        let score = activations.last().unwrap()[0];
        Ok((score, activations))
    }

    pub fn forward(&self, input: &[f64]) -> Result<f64> {
        Ok(self.forward_trace(input)?.0)
    }

    /// Scores one prototype/query pair under the configured encoding.
    pub fn score_pair(&self, proto: &Point, query: &Point) -> Result<f64> {
        self.forward(&self.encoding.encode(proto, query))
    }

    pub fn to_doc(&self) -> ParamsDoc {
        ParamsDoc {
            dims: self.widths.clone(),
            layers: self.layers.clone(),
            optimizer: None,
        }
    }

    pub fn from_doc(doc: &ParamsDoc, encoding: LcboEncoding) -> Result<Self> {
        Self::from_layers(doc.dims.clone(), doc.layers.clone(), encoding)
    }
}

/// Detector selector, matching the CLI names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    MinDist,
    Lcbo,
    Background,
    Groos,
    CenteredGroos,
}

impl DetectorKind {
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::MinDist => "mindist",
            DetectorKind::Lcbo => "lcbo",
            DetectorKind::Background => "background",
            DetectorKind::Groos => "groos",
            DetectorKind::CenteredGroos => "centered-groos",
        }
    }

    /// True for the scores that already read "larger = more OOS-like".
    pub fn oos_is_high(self) -> bool {
        !matches!(self, DetectorKind::MinDist | DetectorKind::Lcbo)
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mindist" => Ok(DetectorKind::MinDist),
            "lcbo" => Ok(DetectorKind::Lcbo),
            "background" => Ok(DetectorKind::Background),
            "groos" => Ok(DetectorKind::Groos),
            "centered-groos" => Ok(DetectorKind::CenteredGroos),
            other => Err(Error::InvalidParameter(format!(
                "unknown detector '{other}'"
            ))),
        }
    }
}

/// Maps a raw score to the canonical orientation (larger = more OOS-like).
pub fn canonical_score(kind: DetectorKind, raw: f64) -> f64 {
    if kind.oos_is_high() {
        raw
    } else {
        -raw
    }
}

/// Minimum-distance confidence: the negated distance to the nearest
/// prototype. OOS is flagged when this falls below the threshold.
pub fn score_min_dist(q: &Point, ctx: &PrototypeContext) -> Result<f64> {
    let dists = distance_vector(q, ctx, DistanceMode::Standard)?;
    Ok(-dists.iter().fold(f64::INFINITY, |a, &d| a.min(d)))
}

/// LCBO confidence: the maximum network score over prototype/query pairs.
pub fn score_lcbo(q: &Point, ctx: &PrototypeContext, scorer: &LcboScorer) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for proto in ctx.prototypes().values() {
        best = best.max(scorer.score_pair(proto, q)?);
    }
    Ok(best)
}

/// Background confidence: last softmax coordinate of -(d_1..d_k, M).
pub fn score_background(q: &Point, ctx: &PrototypeContext) -> Result<f64> {
    let dists = distance_vector(q, ctx, DistanceMode::Background)?;
    Ok(*softmax_neg(&dists)?.last().unwrap())
}

/// Generic-representation confidence: last softmax coordinate of
/// -(d_1..d_k, d_oos).
pub fn score_groos(q: &Point, ctx: &PrototypeContext) -> Result<f64> {
    let dists = distance_vector(q, ctx, DistanceMode::Generic)?;
    Ok(*softmax_neg(&dists)?.last().unwrap())
}

/// Generic-representation confidence with the generic point replaced by the
/// centroid of all encoded episode points.
pub fn score_centered_groos(
    q: &Point,
    episode_points: &[Point],
    ctx: &PrototypeContext,
) -> Result<f64> {
    let center = centroid(episode_points)?;
    score_groos(q, &ctx.replacing_generic(center)?)
}

/// Outcome of thresholding one query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    /// Score in the detector's native orientation.
    pub raw_score: f64,
    /// Score in the canonical orientation (larger = more OOS-like).
    pub score: f64,
    pub is_oos_pred: bool,
    /// Present exactly when the query is predicted in-support.
    pub class_pred: Option<ClassId>,
    /// In-support class probabilities (softmax-based detectors only),
    /// normalized over the k class slots.
    pub class_probs: Option<Vec<(ClassId, f64)>>,
}

/// Applies a detector's threshold rule to one query.
///
/// `threshold` is in the detector's native orientation: MinDist/LCBO predict
/// OOS when the raw score is below it, the softmax-based detectors when the
/// raw score is above it (for those the threshold must lie in [0, 1]).
/// In-support predictions take the nearest prototype, ties going to the
/// lowest class id.
pub fn predict(
    q: &Point,
    ctx: &PrototypeContext,
    kind: DetectorKind,
    threshold: f64,
    lcbo: Option<&LcboScorer>,
    episode_points: Option<&[Point]>,
) -> Result<Verdict> {
    if kind.oos_is_high() && !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidThreshold(threshold));
    }
    let raw = match kind {
        DetectorKind::MinDist => score_min_dist(q, ctx)?,
        DetectorKind::Lcbo => {
            let scorer = lcbo.ok_or(Error::InvalidParameter(
                "lcbo detector needs a scorer".into(),
            ))?;
            score_lcbo(q, ctx, scorer)?
        }
        DetectorKind::Background => score_background(q, ctx)?,
        DetectorKind::Groos => score_groos(q, ctx)?,
        DetectorKind::CenteredGroos => {
            let points = episode_points.ok_or(Error::InvalidParameter(
                "centered-groos detector needs the episode points".into(),
            ))?;
            score_centered_groos(q, points, ctx)?
        }
    };
    let score = canonical_score(kind, raw);
    let is_oos_pred = score > canonical_score(kind, threshold);

    let class_pred = if is_oos_pred {
        None
    } else {
        Some(nearest_class(q, ctx)?)
    };
    let class_probs = if kind.oos_is_high() {
        let dists = distance_vector(q, ctx, DistanceMode::Standard)?;
        let probs = softmax_neg(&dists)?;
        Some(ctx.class_ids().zip(probs).collect())
    } else {
        None
    };
    Ok(Verdict {
        raw_score: raw,
        score,
        is_oos_pred,
        class_pred,
        class_probs,
    })
}

/// Argmin over in-support prototype distances; ties to the lowest class id.
pub fn nearest_class(q: &Point, ctx: &PrototypeContext) -> Result<ClassId> {
    let dists = distance_vector(q, ctx, DistanceMode::Standard)?;
    let mut best = (f64::INFINITY, 0);
    for (class, d) in ctx.class_ids().zip(dists) {
        if d < best.0 {
            best = (d, class);
        }
    }
    Ok(best.1)
}
