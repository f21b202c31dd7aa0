//! Exact AUROC/AUPR over canonical OOS scores and episodic evaluation.
//!
//! AUROC is the Mann-Whitney statistic (ties get half credit) computed by
//! sort-and-rank; AUPR is average precision with OOS as the positive class,
//! tied scores processed as one block at block-end precision. Both are
//! platform-exact given identical inputs.

use rayon::prelude::*;
use serde::Serialize;

use crate::detectors::{
    canonical_score, nearest_class, score_background, score_centered_groos, score_groos,
    score_lcbo, score_min_dist, DetectorKind, LcboScorer,
};
use crate::episodes::{sample_episode, EmbeddingDataset, EpisodeConfig};
use crate::error::{Error, Result};
use crate::metric::{AffineHead, Point, PrototypeContext};

/// One scored query: canonical orientation plus ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredQuery {
    pub episode: usize,
    pub raw_score: f64,
    /// Canonical orientation: larger = more OOS-like.
    pub score: f64,
    pub is_oos: bool,
    /// For in-support queries: whether the nearest-prototype class matched.
    pub correct_in_support: Option<bool>,
}

/// AUROC of OOS-vs-in-support separation over canonical scores:
/// P(score_oos > score_in) + 0.5 P(tie).
pub fn auroc(scores: &[(f64, bool)]) -> Result<f64> {
    if scores.iter().any(|(s, _)| s.is_nan()) {
        return Err(Error::NonFinite("scores"));
    }
    let positives = scores.iter().filter(|(_, oos)| *oos).count();
    let negatives = scores.len() - positives;
    if positives == 0 {
        return Err(Error::SingleClassScores("no OOS entries"));
    }
    if negatives == 0 {
        return Err(Error::SingleClassScores("no in-support entries"));
    }
    let mut sorted: Vec<(f64, bool)> = scores.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    // Average ranks over tie blocks, then the rank-sum form of U.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0; // mean of ranks i+1 ..= j
        for entry in &sorted[i..j] {
            if entry.1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let u = rank_sum_pos - (positives * (positives + 1)) as f64 / 2.0;
    Ok(u / (positives as f64 * negatives as f64))
}

/// Average precision with OOS as the positive class; tied scores are
/// processed as one block using the precision at the block's end.
pub fn aupr(scores: &[(f64, bool)]) -> Result<f64> {
    if scores.iter().any(|(s, _)| s.is_nan()) {
        return Err(Error::NonFinite("scores"));
    }
    let positives = scores.iter().filter(|(_, oos)| *oos).count();
    if positives == 0 {
        return Err(Error::SingleClassScores("no OOS entries"));
    }
    let mut sorted: Vec<(f64, bool)> = scores.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let mut ap = 0.0;
    let mut seen = 0usize;
    let mut true_pos = 0usize;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        let mut block_pos = 0usize;
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            if sorted[j].1 {
                block_pos += 1;
            }
            j += 1;
        }
        seen += j - i;
        true_pos += block_pos;
        if block_pos > 0 {
            let precision = true_pos as f64 / seen as f64;
            ap += precision * block_pos as f64 / positives as f64;
        }
        i = j;
    }
    Ok(ap)
}

/// Detector plus whatever extras it needs at evaluation time.
#[derive(Debug, Clone)]
pub enum DetectorConfig {
    MinDist,
    Lcbo { scorer: LcboScorer },
    Background { background: f64 },
    Groos { generic: Point },
    CenteredGroos,
}

impl DetectorConfig {
    pub fn kind(&self) -> DetectorKind {
        match self {
            DetectorConfig::MinDist => DetectorKind::MinDist,
            DetectorConfig::Lcbo { .. } => DetectorKind::Lcbo,
            DetectorConfig::Background { .. } => DetectorKind::Background,
            DetectorConfig::Groos { .. } => DetectorKind::Groos,
            DetectorConfig::CenteredGroos => DetectorKind::CenteredGroos,
        }
    }
}

/// Evaluation protocol settings.
#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub episodes: usize,
    pub shape: EpisodeConfig,
    pub seed: u64,
    /// Also compute per-episode metric means and standard errors.
    pub per_episode: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            episodes: 1000,
            shape: EpisodeConfig::default(),
            seed: 0,
            per_episode: false,
        }
    }
}

/// Per-episode mean and standard error of the x100 metrics, reported to
/// mirror the usual "mean +/- err" columns. The error is the standard error
/// over episodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerEpisodeStats {
    pub auroc_mean: f64,
    pub auroc_stderr: f64,
    pub aupr_mean: f64,
    pub aupr_stderr: f64,
}

/// Evaluation report. `auroc_x100`/`aupr_x100` are null when the episode
/// shape has no OOS queries; in-support accuracy is always present.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub detector: String,
    pub episodes: usize,
    pub n: usize,
    pub k: usize,
    pub q_in: usize,
    pub q_out: usize,
    pub auroc_x100: Option<f64>,
    pub aupr_x100: Option<f64>,
    pub accuracy_in_support: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_episode: Option<PerEpisodeStats>,
    pub seed: u64,
}

fn score_episode(
    ds: &EmbeddingDataset,
    detector: &DetectorConfig,
    head: &AffineHead,
    cfg: &EvalConfig,
    index: usize,
) -> Result<Vec<ScoredQuery>> {
    let episode = sample_episode(ds, &cfg.shape, cfg.seed, index as u64)?;
    let support = episode.support_points();
    let mut encoded_support = std::collections::BTreeMap::new();
    for (&class, points) in &support {
        let encoded: Vec<Point> = points
            .iter()
            .map(|p| head.apply(p))
            .collect::<Result<_>>()?;
        encoded_support.insert(class, encoded);
    }
    let mut ctx = PrototypeContext::from_support(&encoded_support)?;
    match detector {
        DetectorConfig::Groos { generic } => {
            ctx = ctx.with_generic(generic.clone())?;
        }
        DetectorConfig::Background { background } => {
            ctx = ctx.with_background_constant(*background)?;
        }
        _ => {}
    }
    let episode_points: Vec<Point> = episode
        .all_points()
        .iter()
        .map(|p| head.apply(p))
        .collect::<Result<_>>()?;

    let kind = detector.kind();
    let mut out = Vec::with_capacity(episode.queries.len());
    for q in &episode.queries {
        let encoded = head.apply(&q.point)?;
        let raw = match detector {
            DetectorConfig::MinDist => score_min_dist(&encoded, &ctx)?,
            DetectorConfig::Lcbo { scorer } => score_lcbo(&encoded, &ctx, scorer)?,
            DetectorConfig::Background { .. } => score_background(&encoded, &ctx)?,
            DetectorConfig::Groos { .. } => score_groos(&encoded, &ctx)?,
            DetectorConfig::CenteredGroos => score_centered_groos(&encoded, &episode_points, &ctx)?,
        };
        let correct_in_support = if q.is_oos {
            None
        } else {
            Some(nearest_class(&encoded, &ctx)? == q.true_label)
        };
        out.push(ScoredQuery {
            episode: index,
            raw_score: raw,
            score: canonical_score(kind, raw),
            is_oos: q.is_oos,
            correct_in_support,
        });
    }
    Ok(out)
}

/// Scores every query of every episode. Episodes are processed in parallel
/// and merged in index order, so the output is schedule-independent.
pub fn collect_scores(
    ds: &EmbeddingDataset,
    detector: &DetectorConfig,
    head: &AffineHead,
    cfg: &EvalConfig,
) -> Result<Vec<ScoredQuery>> {
    if cfg.episodes == 0 {
        return Err(Error::InvalidParameter("need at least one episode".into()));
    }
    let per_episode: Vec<Vec<ScoredQuery>> = (0..cfg.episodes)
        .into_par_iter()
        .map(|e| score_episode(ds, detector, head, cfg, e))
        .collect::<Result<_>>()?;
    Ok(per_episode.into_iter().flatten().collect())
}

/// Pools all query scores across episodes and reports AUROC/AUPR x100 plus
/// in-support accuracy.
pub fn evaluate(
    ds: &EmbeddingDataset,
    detector: &DetectorConfig,
    head: &AffineHead,
    cfg: &EvalConfig,
) -> Result<MetricsReport> {
    let scored = collect_scores(ds, detector, head, cfg)?;
    report_from_scores(&scored, detector, cfg)
}

/// Builds the report from already-collected scores.
pub fn report_from_scores(
    scored: &[ScoredQuery],
    detector: &DetectorConfig,
    cfg: &EvalConfig,
) -> Result<MetricsReport> {
    let pooled: Vec<(f64, bool)> = scored.iter().map(|s| (s.score, s.is_oos)).collect();
    let has_oos = scored.iter().any(|s| s.is_oos);
    let (auroc_x100, aupr_x100) = if has_oos {
        (Some(auroc(&pooled)? * 100.0), Some(aupr(&pooled)? * 100.0))
    } else {
        (None, None)
    };

    let in_support: Vec<&ScoredQuery> = scored.iter().filter(|s| !s.is_oos).collect();
    let correct = in_support
        .iter()
        .filter(|s| s.correct_in_support == Some(true))
        .count();
    let accuracy_in_support = if in_support.is_empty() {
        0.0
    } else {
        correct as f64 / in_support.len() as f64
    };

    let per_episode = if cfg.per_episode && has_oos {
        let mut aurocs = Vec::with_capacity(cfg.episodes);
        let mut auprs = Vec::with_capacity(cfg.episodes);
        for e in 0..cfg.episodes {
            let ep: Vec<(f64, bool)> = scored
                .iter()
                .filter(|s| s.episode == e)
                .map(|s| (s.score, s.is_oos))
                .collect();
            aurocs.push(auroc(&ep)? * 100.0);
            auprs.push(aupr(&ep)? * 100.0);
        }
        let stats = |v: &[f64]| {
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
            (mean, (var / n).sqrt())
        };
        let (am, ae) = stats(&aurocs);
        let (pm, pe) = stats(&auprs);
        Some(PerEpisodeStats {
            auroc_mean: am,
            auroc_stderr: ae,
            aupr_mean: pm,
            aupr_stderr: pe,
        })
    } else {
        None
    };

    Ok(MetricsReport {
        detector: detector.kind().name().to_string(),
        episodes: cfg.episodes,
        n: cfg.shape.shots,
        k: cfg.shape.ways,
        q_in: cfg.shape.queries_per_class,
        q_out: cfg.shape.oos_queries,
        auroc_x100,
        aupr_x100,
        accuracy_in_support,
        per_episode,
        seed: cfg.seed,
    })
}
