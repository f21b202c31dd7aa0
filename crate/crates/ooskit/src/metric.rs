//! Embedding-space primitives: points, Euclidean distance, class prototypes,
//! the affine head, and the stabilized softmax over negated distances.
//!
//! Everything here is a pure function over immutable inputs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense class identifier. Ordering of distance-vector slots is always
/// ascending class id, so the slot after the last class is the OOS slot.
pub type ClassId = usize;

/// A point in the embedding space R^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    /// Builds a point, rejecting empty or non-finite coordinates.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyInput("point coordinates"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        Ok(Point(coords))
    }

    /// Origin of R^d.
    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn translated(&self, shift: &[f64]) -> Self {
        assert_eq!(self.0.len(), shift.len(), "shift dimension mismatch");
        Point(self.0.iter().zip(shift).map(|(a, b)| a + b).collect())
    }
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Euclidean distance ||a - b||.
pub fn euclidean_distance(a: &Point, b: &Point) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    Ok(a.coords()
        .iter()
        .zip(b.coords())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// Coordinate-wise mean of a non-empty set of points.
pub fn centroid(points: &[Point]) -> Result<Point> {
    let first = points.first().ok_or(Error::EmptyInput("centroid points"))?;
    let dim = first.dim();
    let mut sum = vec![0.0; dim];
    for p in points {
        check_dims(dim, p.dim())?;
        for (s, c) in sum.iter_mut().zip(p.coords()) {
            *s += c;
        }
    }
    let n = points.len() as f64;
    Ok(Point(sum.into_iter().map(|s| s / n).collect()))
}

/// One prototype per class: the centroid of the class's support points.
pub fn compute_prototypes(
    support: &BTreeMap<ClassId, Vec<Point>>,
) -> Result<BTreeMap<ClassId, Point>> {
    if support.is_empty() {
        return Err(Error::EmptyInput("support set"));
    }
    let mut out = BTreeMap::new();
    let mut dim = None;
    for (&class, points) in support {
        if points.is_empty() {
            return Err(Error::EmptyInput("support class"));
        }
        let proto = centroid(points)?;
        if let Some(d) = dim {
            check_dims(d, proto.dim())?;
        }
        dim = Some(proto.dim());
        out.insert(class, proto);
    }
    Ok(out)
}

/// The trainable map L(x) = Wx + b composed onto a fixed encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineHead {
    /// Row-major d x d weight matrix: `weight[i]` holds the weights of output i.
    weight: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl AffineHead {
    pub fn new(weight: Vec<Vec<f64>>, bias: Vec<f64>) -> Result<Self> {
        let d = bias.len();
        if d == 0 {
            return Err(Error::EmptyInput("affine head bias"));
        }
        if weight.len() != d || weight.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidParameter(format!(
                "affine head weight must be {d}x{d}"
            )));
        }
        let finite =
            weight.iter().flatten().all(|w| w.is_finite()) && bias.iter().all(|b| b.is_finite());
        if !finite {
            return Err(Error::NonFinite("affine head parameters"));
        }
        Ok(AffineHead { weight, bias })
    }

    /// W = I, b = 0: the head that leaves embeddings untouched.
    pub fn identity(dim: usize) -> Self {
        let mut weight = vec![vec![0.0; dim]; dim];
        for (i, row) in weight.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        AffineHead {
            weight,
            bias: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.bias.len()
    }

    pub fn weight(&self) -> &[Vec<f64>] {
        &self.weight
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Wx + b.
    pub fn apply(&self, x: &Point) -> Result<Point> {
        check_dims(self.dim(), x.dim())?;
        let mut out = self.bias.clone();
        for (o, row) in out.iter_mut().zip(&self.weight) {
            *o += row.iter().zip(x.coords()).map(|(w, c)| w * c).sum::<f64>();
        }
        Ok(Point(out))
    }
}

/// Applies the head to a point (free-function form of [`AffineHead::apply`]).
pub fn apply_affine(head: &AffineHead, x: &Point) -> Result<Point> {
    head.apply(x)
}

/// Class prototypes plus the optional generic representation and the
/// optional background constant. Which extras a detector needs is up to
/// the detector; storing both is legal.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeContext {
    prototypes: BTreeMap<ClassId, Point>,
    generic: Option<Point>,
    background_constant: Option<f64>,
}

impl PrototypeContext {
    pub fn new(prototypes: BTreeMap<ClassId, Point>) -> Result<Self> {
        let mut dims = prototypes.values().map(Point::dim);
        let dim = dims.next().ok_or(Error::EmptyInput("prototypes"))?;
        for d in dims {
            check_dims(dim, d)?;
        }
        Ok(PrototypeContext {
            prototypes,
            generic: None,
            background_constant: None,
        })
    }

    /// Builds the context directly from a support set.
    pub fn from_support(support: &BTreeMap<ClassId, Vec<Point>>) -> Result<Self> {
        Self::new(compute_prototypes(support)?)
    }

    pub fn with_generic(mut self, generic: Point) -> Result<Self> {
        check_dims(self.dim(), generic.dim())?;
        self.generic = Some(generic);
        Ok(self)
    }

    pub fn with_background_constant(mut self, m: f64) -> Result<Self> {
        if !m.is_finite() || m < 0.0 {
            return Err(Error::InvalidBackground(m));
        }
        self.background_constant = Some(m);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.prototypes.values().next().map(Point::dim).unwrap_or(0)
    }

    /// Number of in-support classes k.
    pub fn num_classes(&self) -> usize {
        self.prototypes.len()
    }

    pub fn prototypes(&self) -> &BTreeMap<ClassId, Point> {
        &self.prototypes
    }

    pub fn class_ids(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.prototypes.keys().copied()
    }

    pub fn generic(&self) -> Option<&Point> {
        self.generic.as_ref()
    }

    pub fn background_constant(&self) -> Option<f64> {
        self.background_constant
    }

    /// Replaces the generic representation, keeping everything else.
    pub fn replacing_generic(&self, generic: Point) -> Result<Self> {
        self.clone().with_generic(generic)
    }
}

/// Which slots the distance vector carries beyond the per-class distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMode {
    /// (d_1, ..., d_k)
    Standard,
    /// (d_1, ..., d_k, d_oos) with d_oos the distance to the generic point.
    Generic,
    /// (d_1, ..., d_k, M) with the background constant appended verbatim.
    Background,
}

/// Distances from a query to each prototype (ascending class id), plus the
/// mode-dependent final slot.
pub fn distance_vector(q: &Point, ctx: &PrototypeContext, mode: DistanceMode) -> Result<Vec<f64>> {
    let mut dists = Vec::with_capacity(ctx.num_classes() + 1);
    for proto in ctx.prototypes.values() {
        dists.push(euclidean_distance(q, proto)?);
    }
    match mode {
        DistanceMode::Standard => {}
        DistanceMode::Generic => {
            let generic = ctx.generic().ok_or(Error::MissingGeneric)?;
            dists.push(euclidean_distance(q, generic)?);
        }
        DistanceMode::Background => {
            let m = ctx.background_constant().ok_or(Error::MissingBackground)?;
            dists.push(m);
        }
    }
    Ok(dists)
}

/// softmax(-d): probabilities proportional to exp(-d_i), computed with
/// max-subtraction so large distances cannot overflow.
pub fn softmax_neg(dists: &[f64]) -> Result<Vec<f64>> {
    if dists.is_empty() {
        return Err(Error::EmptyInput("softmax distances"));
    }
    if dists.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite("softmax distances"));
    }
    let m = dists.iter().fold(f64::INFINITY, |a, &d| a.min(d));
    let exps: Vec<f64> = dists.iter().map(|d| (-(d - m)).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Negative log of softmax(-d) at `target`, evaluated in log-sum-exp form so
/// degenerate all-equal geometries give exactly ln(len).
pub fn neg_log_softmax_neg(dists: &[f64], target: usize) -> Result<f64> {
    if target >= dists.len() {
        return Err(Error::InvalidParameter(format!(
            "softmax target {target} out of range for {} slots",
            dists.len()
        )));
    }
    if dists.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite("softmax distances"));
    }
    let m = dists.iter().fold(f64::INFINITY, |a, &d| a.min(d));
    let sum: f64 = dists.iter().map(|d| (-(d - m)).exp()).sum();
    Ok(dists[target] - m + sum.ln())
}
