//! Episodic training of the affine head and the LCBO scorer over fixed
//! embeddings: cross-entropy losses, hand-derived gradients that flow
//! through the prototype centroids, and an Adam optimizer.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::detectors::{LcboEncoding, LcboScorer};
use crate::episodes::{sample_episode, EmbeddingDataset, Episode, EpisodeConfig};
use crate::error::{Error, Result};
use crate::metric::{centroid, neg_log_softmax_neg, softmax_neg, AffineHead, ClassId, Point};
use crate::params::{LayerParams, OptimizerDoc, ParamsDoc};
use crate::rng::{stream, Purpose};

/// Which target distribution the episodic loss uses.
#[derive(Debug, Clone, PartialEq)]
pub enum LossMode {
    /// k-way cross-entropy over class slots; OOS queries are dropped.
    Standard,
    /// (k+1)-way cross-entropy with the generic-point slot as OOS target.
    Groos { generic: Point },
    /// (k+1)-way cross-entropy with the constant background slot as target.
    Background { background: f64 },
}

struct EpisodeTensors {
    /// Ascending in-support class ids; slot `i` of the distance vector.
    class_order: Vec<ClassId>,
    /// Mean raw support input per class (order matches `class_order`).
    support_means: Vec<Point>,
    /// Encoded prototypes.
    prototypes: Vec<Point>,
    /// (raw query point, encoded query, target slot).
    queries: Vec<(Point, Point, usize)>,
}

fn episode_tensors(
    episode: &Episode,
    head: &AffineHead,
    mode: &LossMode,
) -> Result<EpisodeTensors> {
    if let LossMode::Background { background } = mode {
        if !background.is_finite() || *background < 0.0 {
            return Err(Error::InvalidBackground(*background));
        }
    }
    let support = episode.support_points();
    let class_order: Vec<ClassId> = support.keys().copied().collect();
    let mut support_means = Vec::with_capacity(class_order.len());
    let mut prototypes = Vec::with_capacity(class_order.len());
    for points in support.values() {
        support_means.push(centroid(points)?);
        let encoded: Vec<Point> = points
            .iter()
            .map(|p| head.apply(p))
            .collect::<Result<_>>()?;
        prototypes.push(centroid(&encoded)?);
    }
    if let LossMode::Groos { generic } = mode {
        if generic.dim() != head.dim() {
            return Err(Error::DimensionMismatch {
                expected: head.dim(),
                got: generic.dim(),
            });
        }
    }

    let mut queries = Vec::new();
    for q in &episode.queries {
        let target = if q.is_oos {
            match mode {
                LossMode::Standard => continue,
                _ => class_order.len(),
            }
        } else {
            class_order
                .iter()
                .position(|&c| c == q.true_label)
                .ok_or(Error::UnknownClass(q.true_label))?
        };
        queries.push((q.point.clone(), head.apply(&q.point)?, target));
    }
    if queries.is_empty() {
        return Err(Error::EmptyInput("episode queries after mode filtering"));
    }
    Ok(EpisodeTensors {
        class_order,
        support_means,
        prototypes,
        queries,
    })
}

fn query_distances(t: &EpisodeTensors, encoded: &Point, mode: &LossMode) -> Result<Vec<f64>> {
    let mut dists = Vec::with_capacity(t.prototypes.len() + 1);
    for proto in &t.prototypes {
        dists.push(crate::metric::euclidean_distance(proto, encoded)?);
    }
    match mode {
        LossMode::Standard => {}
        LossMode::Groos { generic } => {
            dists.push(crate::metric::euclidean_distance(generic, encoded)?);
        }
        LossMode::Background { background } => dists.push(*background),
    }
    Ok(dists)
}

/// Mean negative log-likelihood over the episode's queries, with each
/// query's probabilities alongside.
pub fn episodic_loss(
    episode: &Episode,
    head: &AffineHead,
    mode: &LossMode,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let t = episode_tensors(episode, head, mode)?;
    let mut total = 0.0;
    let mut probs = Vec::with_capacity(t.queries.len());
    for (_, encoded, target) in &t.queries {
        let dists = query_distances(&t, encoded, mode)?;
        total += neg_log_softmax_neg(&dists, *target)?;
        probs.push(softmax_neg(&dists)?);
    }
    Ok((total / t.queries.len() as f64, probs))
}

/// Gradient of [`episodic_loss`] with respect to the head parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGrad {
    pub weight: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl HeadGrad {
    fn zeros(dim: usize) -> Self {
        HeadGrad {
            weight: vec![vec![0.0; dim]; dim],
            bias: vec![0.0; dim],
        }
    }

    fn add_outer(&mut self, out_grad: &[f64], input: &Point) {
        for (row, &g) in self.weight.iter_mut().zip(out_grad) {
            for (w, &x) in row.iter_mut().zip(input.coords()) {
                *w += g * x;
            }
        }
        for (b, &g) in self.bias.iter_mut().zip(out_grad) {
            *b += g;
        }
    }
}

/// Exact analytic gradient of the episodic loss. Gradients flow through the
/// prototypes (centroids of the transformed support) unless
/// `detach_prototypes` is set.
pub fn grad_episodic_loss(
    episode: &Episode,
    head: &AffineHead,
    mode: &LossMode,
    detach_prototypes: bool,
) -> Result<(f64, HeadGrad)> {
    let t = episode_tensors(episode, head, mode)?;
    let dim = head.dim();
    let k = t.prototypes.len();
    let scale = 1.0 / t.queries.len() as f64;

    let mut grad = HeadGrad::zeros(dim);
    let mut proto_grads = vec![vec![0.0; dim]; k];
    let mut total = 0.0;

    for (raw_query, encoded, target) in &t.queries {
        let dists = query_distances(&t, encoded, mode)?;
        total += neg_log_softmax_neg(&dists, *target)?;
        let probs = softmax_neg(&dists)?;

        let mut encoded_grad = vec![0.0; dim];
        for (slot, (&d, &p)) in dists.iter().zip(&probs).enumerate() {
            let residual = (if slot == *target { 1.0 } else { 0.0 } - p) * scale;
            if slot < k {
                if d > 0.0 {
                    let proto = &t.prototypes[slot];
                    for j in 0..dim {
                        let dir = (encoded.coords()[j] - proto.coords()[j]) / d;
                        encoded_grad[j] += residual * dir;
                        proto_grads[slot][j] -= residual * dir;
                    }
                }
            } else if let LossMode::Groos { generic } = mode {
                // The generic point is a constant, so only the query side
                // receives gradient; the background slot has none at all.
                if d > 0.0 {
                    for j in 0..dim {
                        encoded_grad[j] +=
                            residual * (encoded.coords()[j] - generic.coords()[j]) / d;
                    }
                }
            }
        }
        grad.add_outer(&encoded_grad, raw_query);
    }

    if !detach_prototypes {
        // A class centroid of affine images is the affine image of the mean
        // raw input, so the whole class's support gradient collapses onto
        // that mean.
        for (proto_grad, mean) in proto_grads.iter().zip(&t.support_means) {
            grad.add_outer(proto_grad, mean);
        }
    }
    Ok((total / t.queries.len() as f64, grad))
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
    let exps: Vec<f64> = logits.iter().map(|v| (v - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// LCBO episodic loss: binary logistic loss on the max pair score with
/// label "in-support", plus per-class cross-entropy over the pairwise
/// scores for in-support queries. Experimental.
pub fn lcbo_episodic_loss(
    episode: &Episode,
    head: &AffineHead,
    scorer: &LcboScorer,
) -> Result<f64> {
    let t = episode_tensors(episode, head, &LossMode::Standard)?;
    let mut total = 0.0;
    let mut count = 0usize;
    // Standard tensors drop OOS queries; re-walk the raw query list so the
    // binary term sees them.
    for q in &episode.queries {
        let encoded = head.apply(&q.point)?;
        let scores: Vec<f64> = t
            .prototypes
            .iter()
            .map(|proto| scorer.score_pair(proto, &encoded))
            .collect::<Result<_>>()?;
        let phi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        total += if q.is_oos {
            softplus(phi)
        } else {
            softplus(-phi)
        };
        if !q.is_oos {
            let slot = t
                .class_order
                .iter()
                .position(|&c| c == q.true_label)
                .ok_or(Error::UnknownClass(q.true_label))?;
            let probs = softmax(&scores);
            total += -probs[slot].ln();
        }
        count += 1;
    }
    Ok(total / count as f64)
}

/// Parameter-shaped gradient of the LCBO scorer.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorerGrad {
    pub layers: Vec<LayerParams>,
}

impl ScorerGrad {
    fn zeros(scorer: &LcboScorer) -> Self {
        ScorerGrad {
            layers: scorer
                .layers()
                .iter()
                .map(|l| LayerParams {
                    w: vec![vec![0.0; l.w[0].len()]; l.w.len()],
                    b: vec![0.0; l.b.len()],
                })
                .collect(),
        }
    }
}

/// Backpropagates `out_grad` through the scorer for one input, accumulating
/// parameter gradients and returning the input gradient.
fn scorer_backward(
    scorer: &LcboScorer,
    activations: &[Vec<f64>],
    out_grad: f64,
    grad: &mut ScorerGrad,
) -> Vec<f64> {
    let layers = scorer.layers();
    let mut delta = vec![out_grad];
    for l in (0..layers.len()).rev() {
        let input = &activations[l];
        for (row, &d) in grad.layers[l].w.iter_mut().zip(&delta) {
            for (w, &x) in row.iter_mut().zip(input) {
                *w += d * x;
            }
        }
        for (b, &d) in grad.layers[l].b.iter_mut().zip(&delta) {
            *b += d;
        }
        let mut prev = vec![0.0; input.len()];
        for (row, &d) in layers[l].w.iter().zip(&delta) {
            for (p, &w) in prev.iter_mut().zip(row) {
                *p += d * w;
            }
        }
        if l > 0 {
            // Hidden activations are post-rectifier.
            for (p, &a) in prev.iter_mut().zip(input) {
                if a <= 0.0 {
                    *p = 0.0;
                }
            }
        }
        delta = prev;
    }
    delta
}

/// Joint gradient of the LCBO loss with respect to the head parameters and
/// the scorer parameters.
pub fn grad_lcbo_loss(
    episode: &Episode,
    head: &AffineHead,
    scorer: &LcboScorer,
    detach_prototypes: bool,
) -> Result<(f64, HeadGrad, ScorerGrad)> {
    let t = episode_tensors(episode, head, &LossMode::Standard)?;
    let dim = head.dim();
    let k = t.prototypes.len();
    let encoding = scorer.encoding();

    let mut head_grad = HeadGrad::zeros(dim);
    let mut scorer_grad = ScorerGrad::zeros(scorer);
    let mut proto_grads = vec![vec![0.0; dim]; k];
    let mut total = 0.0;
    let count = episode.queries.len() as f64;
    let scale = 1.0 / count;

    for q in &episode.queries {
        let encoded = head.apply(&q.point)?;
        let mut scores = Vec::with_capacity(k);
        let mut traces = Vec::with_capacity(k);
        for proto in &t.prototypes {
            let (score, acts) = scorer.forward_trace(&encoding.encode(proto, &encoded))?;
            scores.push(score);
            traces.push(acts);
        }
        let argmax = scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let phi = scores[argmax];

        let label = if q.is_oos { 0.0 } else { 1.0 };
        total += if q.is_oos {
            softplus(phi)
        } else {
            softplus(-phi)
        };
        let mut score_grads = vec![0.0; k];
        score_grads[argmax] += (sigmoid(phi) - label) * scale;

        if !q.is_oos {
            let slot = t
                .class_order
                .iter()
                .position(|&c| c == q.true_label)
                .ok_or(Error::UnknownClass(q.true_label))?;
            let probs = softmax(&scores);
            total += -probs[slot].ln();
            for (c, &p) in probs.iter().enumerate() {
                score_grads[c] += (p - if c == slot { 1.0 } else { 0.0 }) * scale;
            }
        }

        let mut encoded_grad = vec![0.0; dim];
        for (c, &g) in score_grads.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let input_grad = scorer_backward(scorer, &traces[c], g, &mut scorer_grad);
            let (proto_part, query_part) = split_encoding_grad(encoding, dim, &input_grad);
            for j in 0..dim {
                proto_grads[c][j] += proto_part[j];
                encoded_grad[j] += query_part[j];
            }
        }
        head_grad.add_outer(&encoded_grad, &q.point);
    }

    if !detach_prototypes {
        for (proto_grad, mean) in proto_grads.iter().zip(&t.support_means) {
            head_grad.add_outer(proto_grad, mean);
        }
    }
    Ok((total / count, head_grad, scorer_grad))
}

/// Splits the gradient at the scorer input into prototype and query parts
/// according to the pair encoding.
fn split_encoding_grad(
    encoding: LcboEncoding,
    dim: usize,
    input_grad: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    match encoding {
        LcboEncoding::Concat => (
            input_grad[..dim].to_vec(),
            input_grad[dim..2 * dim].to_vec(),
        ),
        LcboEncoding::Diff => (input_grad.to_vec(), input_grad.iter().map(|g| -g).collect()),
        LcboEncoding::Both => {
            let mut proto = input_grad[..dim].to_vec();
            let mut query = input_grad[dim..2 * dim].to_vec();
            for j in 0..dim {
                proto[j] += input_grad[2 * dim + j];
                query[j] -= input_grad[2 * dim + j];
            }
            (proto, query)
        }
    }
}

/// Adam hyperparameters. Weight decay is the coupled form (added to the
/// gradient before the moment updates).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            lr: 1e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 5e-5,
        }
    }
}

/// Per-parameter Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    params: AdamParams,
    m: Vec<f64>,
    v: Vec<f64>,
    step: usize,
}

impl AdamState {
    pub fn new(len: usize, params: AdamParams) -> Self {
        AdamState {
            params,
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn apply(&mut self, theta: &mut [f64], grad: &[f64]) {
        assert_eq!(theta.len(), grad.len());
        assert_eq!(theta.len(), self.m.len());
        self.step += 1;
        let p = self.params;
        let bc1 = 1.0 - p.beta1.powi(self.step as i32);
        let bc2 = 1.0 - p.beta2.powi(self.step as i32);
        for i in 0..theta.len() {
            let g = grad[i] + p.weight_decay * theta[i];
            self.m[i] = p.beta1 * self.m[i] + (1.0 - p.beta1) * g;
            self.v[i] = p.beta2 * self.v[i] + (1.0 - p.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            theta[i] -= p.lr * m_hat / (v_hat.sqrt() + p.eps);
        }
    }

    pub fn to_doc(&self) -> OptimizerDoc {
        OptimizerDoc {
            step: self.step,
            lr: self.params.lr,
            beta1: self.params.beta1,
            beta2: self.params.beta2,
            eps: self.params.eps,
            weight_decay: self.params.weight_decay,
            m: self.m.clone(),
            v: self.v.clone(),
        }
    }
}

/// What to optimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    Standard,
    Groos,
    Background,
    Lcbo,
}

/// Full training run configuration.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub episodes: usize,
    pub shape: EpisodeConfig,
    pub mode: TrainMode,
    pub seed: u64,
    pub adam: AdamParams,
    /// Generic point for groos mode; defaults to the origin.
    pub generic: Option<Point>,
    /// Background constant for background mode.
    pub background: Option<f64>,
    /// Ablation: stop gradients at the prototypes.
    pub detach_prototypes: bool,
    pub lcbo_widths: Option<Vec<usize>>,
    pub lcbo_encoding: LcboEncoding,
    /// Continue from an existing head instead of the identity.
    pub init_head: Option<AffineHead>,
}

impl TrainConfig {
    pub fn new(mode: TrainMode, episodes: usize, seed: u64) -> Self {
        TrainConfig {
            episodes,
            shape: EpisodeConfig::default(),
            mode,
            seed,
            adam: AdamParams::default(),
            generic: None,
            background: None,
            detach_prototypes: false,
            lcbo_widths: None,
            lcbo_encoding: LcboEncoding::default(),
            init_head: None,
        }
    }
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub head: AffineHead,
    pub scorer: Option<LcboScorer>,
    pub losses: Vec<f64>,
    pub optimizer: OptimizerDoc,
}

pub(crate) fn flatten_head(head: &AffineHead) -> Vec<f64> {
    head.weight()
        .iter()
        .flatten()
        .chain(head.bias())
        .copied()
        .collect()
}

pub(crate) fn head_from_flat(dim: usize, flat: &[f64]) -> AffineHead {
    let weight: Vec<Vec<f64>> = (0..dim)
        .map(|i| flat[i * dim..(i + 1) * dim].to_vec())
        .collect();
    let bias = flat[dim * dim..dim * dim + dim].to_vec();
    AffineHead::new(weight, bias).expect("flat head has valid shape")
}

fn flatten_layers(layers: &[LayerParams]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.w.iter().flatten().chain(&l.b).copied())
        .collect()
}

fn layers_from_flat(widths: &[usize], flat: &[f64]) -> Vec<LayerParams> {
    let mut layers = Vec::new();
    let mut at = 0;
    for pair in widths.windows(2) {
        let (n_in, n_out) = (pair[0], pair[1]);
        let w: Vec<Vec<f64>> = (0..n_out)
            .map(|i| flat[at + i * n_in..at + (i + 1) * n_in].to_vec())
            .collect();
        at += n_out * n_in;
        let b = flat[at..at + n_out].to_vec();
        at += n_out;
        layers.push(LayerParams { w, b });
    }
    layers
}

fn random_scorer(
    dim: usize,
    widths: Option<Vec<usize>>,
    encoding: LcboEncoding,
    seed: u64,
) -> Result<LcboScorer> {
    let widths = widths.unwrap_or_else(|| LcboScorer::default_widths(dim, encoding));
    if widths[0] != encoding.input_width(dim) {
        return Err(Error::InvalidParameter(format!(
            "LCBO input width {} does not match encoding width {}",
            widths[0],
            encoding.input_width(dim)
        )));
    }
    let mut rng = stream(seed, Purpose::ParamInit, 0);
    let layers = widths
        .windows(2)
        .map(|pair| {
            let scale = (2.0 / pair[0] as f64).sqrt();
            LayerParams {
                w: (0..pair[1])
                    .map(|_| {
                        (0..pair[0])
                            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                            .collect()
                    })
                    .collect(),
                b: vec![0.0; pair[1]],
            }
        })
        .collect();
    LcboScorer::from_layers(widths, layers, encoding)
}

/// Runs `cfg.episodes` episodes of sample / loss / gradient / Adam step.
/// Deterministic given the seed: the loss curve is bitwise reproducible.
pub fn train(ds: &EmbeddingDataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let dim = ds.dim();
    let head = cfg
        .init_head
        .clone()
        .unwrap_or_else(|| AffineHead::identity(dim));
    if head.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: head.dim(),
        });
    }
    let loss_mode = match cfg.mode {
        TrainMode::Standard | TrainMode::Lcbo => LossMode::Standard,
        TrainMode::Groos => LossMode::Groos {
            generic: cfg.generic.clone().unwrap_or_else(|| Point::origin(dim)),
        },
        TrainMode::Background => LossMode::Background {
            background: cfg.background.ok_or(Error::MissingBackground)?,
        },
    };
    let mut scorer = match cfg.mode {
        TrainMode::Lcbo => Some(random_scorer(
            dim,
            cfg.lcbo_widths.clone(),
            cfg.lcbo_encoding,
            cfg.seed,
        )?),
        _ => None,
    };

    let mut theta = flatten_head(&head);
    let head_len = theta.len();
    if let Some(s) = &scorer {
        theta.extend(flatten_layers(s.layers()));
    }
    let mut adam = AdamState::new(theta.len(), cfg.adam);
    let mut losses = Vec::with_capacity(cfg.episodes);

    let mut current_head = head;
    for e in 0..cfg.episodes {
        let episode = sample_episode(ds, &cfg.shape, cfg.seed, e as u64)?;
        let step = match (&cfg.mode, &mut scorer) {
            (TrainMode::Lcbo, Some(s)) => {
                grad_lcbo_loss(&episode, &current_head, s, cfg.detach_prototypes).map(
                    |(loss, head_grad, scorer_grad)| {
                        let mut flat: Vec<f64> = head_grad
                            .weight
                            .iter()
                            .flatten()
                            .chain(&head_grad.bias)
                            .copied()
                            .collect();
                        flat.extend(flatten_layers(&scorer_grad.layers));
                        (loss, flat)
                    },
                )
            }
            _ => grad_episodic_loss(&episode, &current_head, &loss_mode, cfg.detach_prototypes)
                .map(|(loss, head_grad)| {
                    let flat: Vec<f64> = head_grad
                        .weight
                        .iter()
                        .flatten()
                        .chain(&head_grad.bias)
                        .copied()
                        .collect();
                    (loss, flat)
                }),
        };
        // Diverged parameters surface either as a non-finite loss or as a
        // non-finite intermediate; both abort with the episode index.
        let (loss, grad) = match step {
            Ok(pair) => pair,
            Err(Error::NonFinite(what)) => {
                return Err(Error::Training(format!("non-finite {what} at episode {e}")))
            }
            Err(other) => return Err(other),
        };
        if !loss.is_finite() {
            return Err(Error::Training(format!(
                "non-finite loss {loss} at episode {e}"
            )));
        }
        adam.apply(&mut theta, &grad);
        current_head = head_from_flat(dim, &theta[..head_len]);
        if let Some(s) = &mut scorer {
            let widths = s.widths().to_vec();
            let layers = layers_from_flat(&widths, &theta[head_len..]);
            *s = LcboScorer::from_layers(widths, layers, cfg.lcbo_encoding)?;
        }
        losses.push(loss);
    }

    Ok(TrainOutcome {
        head: current_head,
        scorer,
        losses,
        optimizer: adam.to_doc(),
    })
}

/// Checkpoint document for a trained head (optionally carrying the
/// optimizer state).
pub fn head_checkpoint(head: &AffineHead, optimizer: Option<OptimizerDoc>) -> ParamsDoc {
    let mut doc = ParamsDoc::from(head);
    doc.optimizer = optimizer;
    doc
}

/// Checkpoint document for a trained scorer.
pub fn scorer_checkpoint(scorer: &LcboScorer, optimizer: Option<OptimizerDoc>) -> ParamsDoc {
    let mut doc = scorer.to_doc();
    doc.optimizer = optimizer;
    doc
}

/// Loads a scorer back from a checkpoint, reusing [`LcboScorer::from_doc`].
pub fn scorer_from_checkpoint(doc: &ParamsDoc, encoding: LcboEncoding) -> Result<LcboScorer> {
    LcboScorer::from_doc(doc, encoding)
}

#[cfg(test)]
pub(crate) fn synthetic_episode(
    dim: usize,
    ways: usize,
    shots: usize,
    queries_per_class: usize,
    oos_queries: usize,
    seed: u64,
) -> Episode {
    use crate::episodes::{Query, SupportExample};
    use std::collections::{BTreeMap, BTreeSet};

    let mut rng = stream(seed, Purpose::GeometryCheck, 7);
    let mut point = |scale: f64| {
        Point::new(
            (0..dim)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect(),
        )
        .unwrap()
    };
    let mut support = BTreeMap::new();
    let mut queries = Vec::new();
    let mut c_in = BTreeSet::new();
    for c in 0..ways {
        c_in.insert(c);
        let center = point(2.0);
        let examples = (0..shots)
            .map(|i| SupportExample {
                id: format!("s{c}-{i}"),
                point: center.translated(point(0.5).coords()),
            })
            .collect();
        support.insert(c, examples);
        for i in 0..queries_per_class {
            queries.push(Query {
                id: format!("q{c}-{i}"),
                point: center.translated(point(0.5).coords()),
                true_label: c,
                is_oos: false,
            });
        }
    }
    let mut c_out = BTreeSet::new();
    for i in 0..oos_queries {
        c_out.insert(ways);
        queries.push(Query {
            id: format!("o-{i}"),
            point: point(2.5),
            true_label: ways,
            is_oos: true,
        });
    }
    Episode {
        support,
        queries,
        c_in,
        c_out,
    }
}
