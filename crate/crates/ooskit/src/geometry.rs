//! Feature-space geometry: bisector hyperplanes, the distance-ordering cell
//! decomposition, viable-region feasibility via linear programming, the
//! OOS core, and constructive adjacency witnesses.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{euclidean_distance, ClassId, Point, PrototypeContext};
use crate::simplex::{self, LpOutcome};

/// Default tolerance for treating two distances as tied.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// Minimum interior slack for a half-space system to count as nonempty.
pub const REGION_SLACK_TOL: f64 = 1e-7;

/// The affine hyperplane `{w : <w, normal> = offset}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Hyperplane {
    /// Perpendicular bisector of two distinct points: normal `x1 - x2`,
    /// offset `(||x1||^2 - ||x2||^2) / 2`. Points equidistant from `x1` and
    /// `x2` satisfy the plane equation; points strictly closer to `x2` lie
    /// in the open half-space `<w, normal> < offset`.
    pub fn bisector(x1: &Point, x2: &Point) -> Result<Self> {
        if x1.dim() != x2.dim() {
            return Err(Error::DimensionMismatch {
                expected: x1.dim(),
                got: x2.dim(),
            });
        }
        if x1 == x2 {
            return Err(Error::CoincidentPoints);
        }
        let normal: Vec<f64> = x1
            .coords()
            .iter()
            .zip(x2.coords())
            .map(|(a, b)| a - b)
            .collect();
        let sq = |p: &Point| p.coords().iter().map(|c| c * c).sum::<f64>();
        let offset = 0.5 * (sq(x1) - sq(x2));
        Ok(Hyperplane { normal, offset })
    }

    /// Signed slack `<x, normal> - offset`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.normal.iter().zip(x).map(|(n, c)| n * c).sum::<f64>() - self.offset
    }

    /// Euclidean distance from `x` to the plane.
    pub fn distance_to(&self, x: &[f64]) -> f64 {
        let norm = self.normal.iter().map(|n| n * n).sum::<f64>().sqrt();
        self.eval(x).abs() / norm
    }
}

/// One slot of the cell ordering: a class prototype or the generic point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CellIndex {
    Class(ClassId),
    Generic,
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellIndex::Class(c) => write!(f, "{c}"),
            CellIndex::Generic => f.write_str("oos"),
        }
    }
}

impl Serialize for CellIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Which cell of the distance-ordering decomposition a point falls in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellLabel {
    /// Slots sorted by ascending distance; a strict total order when
    /// `on_boundary` is false.
    pub ordering: Vec<CellIndex>,
    /// True when some adjacent pair of sorted distances ties within the
    /// tolerance, i.e. the point sits on (or within tolerance of) the
    /// boundary set.
    pub on_boundary: bool,
}

fn slots(ctx: &PrototypeContext) -> Vec<(CellIndex, &Point)> {
    let mut out: Vec<(CellIndex, &Point)> = ctx
        .prototypes()
        .iter()
        .map(|(&c, p)| (CellIndex::Class(c), p))
        .collect();
    if let Some(g) = ctx.generic() {
        out.push((CellIndex::Generic, g));
    }
    out
}

fn check_distinct(ctx: &PrototypeContext) -> Result<()> {
    let slots = slots(ctx);
    for i in 0..slots.len() {
        for j in (i + 1)..slots.len() {
            if slots[i].1 == slots[j].1 {
                return Err(Error::DuplicatePrototypes(
                    slots[i].0.to_string(),
                    slots[j].0.to_string(),
                ));
            }
        }
    }
    Ok(())
}

/// Sorts the context's slots (prototypes plus the generic point when
/// present) by distance from `x`. Adjacent distances within `tol` mark the
/// point as on the boundary set.
pub fn classify_cell(x: &Point, ctx: &PrototypeContext, tol: f64) -> Result<CellLabel> {
    if tol < 0.0 {
        return Err(Error::InvalidParameter("tolerance must be >= 0".into()));
    }
    check_distinct(ctx)?;
    let mut labeled: Vec<(CellIndex, f64)> = slots(ctx)
        .into_iter()
        .map(|(idx, p)| Ok((idx, euclidean_distance(x, p)?)))
        .collect::<Result<_>>()?;
    labeled.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    let on_boundary = labeled.windows(2).any(|w| (w[1].1 - w[0].1).abs() <= tol);
    Ok(CellLabel {
        ordering: labeled.into_iter().map(|(idx, _)| idx).collect(),
        on_boundary,
    })
}

/// A conjunction of strict linear inequalities `<x, normal> < bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfSpaceSystem {
    pub constraints: Vec<StrictHalfSpace>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrictHalfSpace {
    pub normal: Vec<f64>,
    pub bound: f64,
}

impl HalfSpaceSystem {
    pub fn new(constraints: Vec<StrictHalfSpace>) -> Result<Self> {
        if constraints.is_empty() {
            return Err(Error::EmptyInput("half-space constraints"));
        }
        let dim = constraints[0].normal.len();
        for c in &constraints {
            if c.normal.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.normal.len(),
                });
            }
            if c.normal.iter().all(|&n| n == 0.0) {
                return Err(Error::InvalidParameter(
                    "half-space normal must be nonzero".into(),
                ));
            }
        }
        Ok(HalfSpaceSystem { constraints })
    }

    pub fn dim(&self) -> usize {
        self.constraints[0].normal.len()
    }

    /// Strict membership test.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.constraints
            .iter()
            .all(|c| c.normal.iter().zip(x).map(|(n, v)| n * v).sum::<f64>() < c.bound)
    }
}

/// Whether viability is judged against prototypes only or against
/// prototypes plus the generic point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViabilityMode {
    Standard,
    Generic,
}

/// "Strictly closer to `near` than to `far`" as one strict half-space,
/// derived from the bisector of the pair.
fn closer_constraint(near: &Point, far: &Point) -> Result<StrictHalfSpace> {
    // H_{far,near}: <x, far - near> < (||far||^2 - ||near||^2)/2.
    let plane = Hyperplane::bisector(far, near)?;
    Ok(StrictHalfSpace {
        normal: plane.normal,
        bound: plane.offset,
    })
}

/// The inequality system cutting out the `class`-viable region.
///
/// Standard mode: strictly closer to the class prototype than to every other
/// prototype (k-1 inequalities). Generic mode: the class prototype first,
/// the generic point second (k inequalities).
pub fn viable_system(
    class: ClassId,
    ctx: &PrototypeContext,
    mode: ViabilityMode,
) -> Result<HalfSpaceSystem> {
    check_distinct(ctx)?;
    let target = ctx
        .prototypes()
        .get(&class)
        .ok_or(Error::UnknownClass(class))?;
    let mut constraints = Vec::new();
    match mode {
        ViabilityMode::Standard => {
            for (&other, proto) in ctx.prototypes() {
                if other != class {
                    constraints.push(closer_constraint(target, proto)?);
                }
            }
            if constraints.is_empty() {
                // k = 1: the whole space, encoded as one trivially true
                // inequality against a phantom far point is not available;
                // a single class has no competing prototype.
                return Err(Error::InvalidParameter(
                    "standard-mode viability needs at least two classes".into(),
                ));
            }
        }
        ViabilityMode::Generic => {
            let generic = ctx.generic().ok_or(Error::MissingGeneric)?;
            constraints.push(closer_constraint(target, generic)?);
            for (&other, proto) in ctx.prototypes() {
                if other != class {
                    constraints.push(closer_constraint(generic, proto)?);
                }
            }
        }
    }
    HalfSpaceSystem::new(constraints)
}

/// Outcome of the open-feasibility decision.
#[derive(Debug, Clone, PartialEq)]
pub enum RegionStatus {
    /// The open polyhedron has interior; the witness satisfies every
    /// inequality with strict slack.
    Nonempty(Point),
    Empty,
}

impl RegionStatus {
    pub fn is_nonempty(&self) -> bool {
        matches!(self, RegionStatus::Nonempty(_))
    }
}

/// Decides whether the open polyhedron of a strict system has an interior
/// point, by maximizing a slack `s` subject to `<x, n_i> + s <= b_i` and
/// `s <= 1`. The region is nonempty exactly when the optimal slack clears
/// [`REGION_SLACK_TOL`]; the cap keeps the program bounded.
pub fn region_nonempty(sys: &HalfSpaceSystem) -> Result<RegionStatus> {
    let d = sys.dim();
    // Free x is split as x = u - v with u, v >= 0; the final column is s.
    let ncols = 2 * d + 1;
    let mut objective = vec![0.0; ncols];
    objective[2 * d] = 1.0;

    let mut constraints = Vec::with_capacity(sys.constraints.len() + 1);
    for c in &sys.constraints {
        // Scaling each row by its normal's length keeps the half-space
        // identical while making the slack a Euclidean margin, so the
        // tolerances hold regardless of the coordinate scale.
        let scale = 1.0 / c.normal.iter().map(|n| n * n).sum::<f64>().sqrt();
        let mut row = vec![0.0; ncols];
        for (j, &n) in c.normal.iter().enumerate() {
            row[j] = scale * n;
            row[d + j] = -scale * n;
        }
        row[2 * d] = 1.0;
        constraints.push((row, scale * c.bound));
    }
    let mut cap = vec![0.0; ncols];
    cap[2 * d] = 1.0;
    constraints.push((cap, 1.0));

    match simplex::maximize(&objective, &constraints)? {
        LpOutcome::Infeasible => Ok(RegionStatus::Empty),
        LpOutcome::Unbounded => Err(Error::LpIndeterminate(
            "slack program reported unbounded despite the cap".into(),
        )),
        LpOutcome::Optimal { x, objective } => {
            if objective > REGION_SLACK_TOL {
                let coords: Vec<f64> = (0..d).map(|j| x[j] - x[d + j]).collect();
                Ok(RegionStatus::Nonempty(Point::new(coords)?))
            } else {
                Ok(RegionStatus::Empty)
            }
        }
    }
}

/// True when `x` is strictly closer to the generic point than to every
/// prototype.
pub fn oos_core_contains(x: &Point, ctx: &PrototypeContext) -> Result<bool> {
    let generic = ctx.generic().ok_or(Error::MissingGeneric)?;
    let d_oos = euclidean_distance(x, generic)?;
    for proto in ctx.prototypes().values() {
        if d_oos >= euclidean_distance(x, proto)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn is_viable(x: &Point, class: ClassId, ctx: &PrototypeContext) -> Result<bool> {
    let generic = ctx.generic().ok_or(Error::MissingGeneric)?;
    let target = ctx
        .prototypes()
        .get(&class)
        .ok_or(Error::UnknownClass(class))?;
    let d_class = euclidean_distance(x, target)?;
    let d_oos = euclidean_distance(x, generic)?;
    if d_class >= d_oos {
        return Ok(false);
    }
    for (&other, proto) in ctx.prototypes() {
        if other != class && d_oos >= euclidean_distance(x, proto)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The point where the segment from a viable point to the generic point
/// crosses the class/generic bisector, plus a verified two-sided margin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjacencyWitness {
    /// Equidistant crossing point on the segment.
    pub boundary_point: Point,
    /// Margin in segment-parameter units: stepping `delta` back from the
    /// crossing stays viable, stepping `delta` forward lands in the OOS core.
    pub delta: f64,
}

/// Constructively verifies that the `class`-viable region touches the OOS
/// core, walking the segment from `x` (which must be viable for `class` in
/// generic mode) to the generic point.
pub fn adjacency_witness(
    x: &Point,
    class: ClassId,
    ctx: &PrototypeContext,
) -> Result<AdjacencyWitness> {
    check_distinct(ctx)?;
    let generic = ctx.generic().ok_or(Error::MissingGeneric)?.clone();
    if !is_viable(x, class, ctx)? {
        return Err(Error::NotViable {
            class,
            reason: "the starting point must satisfy the strict viability ordering".into(),
        });
    }
    let target = &ctx.prototypes()[&class];

    // p(t) = x + t (g - x); solve <p(t), n> = b on the class/generic bisector.
    let plane = Hyperplane::bisector(target, &generic)?;
    let direction: Vec<f64> = generic
        .coords()
        .iter()
        .zip(x.coords())
        .map(|(g, a)| g - a)
        .collect();
    let drift: f64 = direction
        .iter()
        .zip(&plane.normal)
        .map(|(u, n)| u * n)
        .sum();
    if drift.abs() < 1e-300 {
        return Err(Error::WitnessSearch(
            "segment is parallel to the class/generic bisector".into(),
        ));
    }
    let t = -plane.eval(x.coords()) / drift;
    if !(0.0 < t && t < 1.0) {
        return Err(Error::WitnessSearch(format!(
            "bisector crossing parameter {t} left the segment"
        )));
    }
    let at = |s: f64| -> Point {
        Point::from_raw(
            x.coords()
                .iter()
                .zip(&direction)
                .map(|(a, u)| a + s * u)
                .collect(),
        )
    };
    let z = at(t);

    // Initial margin: half the distance from z to the nearest of the other
    // generic/prototype bisectors (those are the planes whose crossing could
    // end viability or core membership), converted to parameter units and
    // kept inside the segment.
    let seg_len = direction.iter().map(|u| u * u).sum::<f64>().sqrt();
    let mut spatial = f64::INFINITY;
    for (&other, proto) in ctx.prototypes() {
        if other == class {
            continue;
        }
        let plane = Hyperplane::bisector(&generic, proto)?;
        spatial = spatial.min(plane.distance_to(z.coords()));
    }
    let mut delta = if spatial.is_finite() {
        0.5 * spatial / seg_len
    } else {
        f64::INFINITY
    };
    delta = delta.min(0.5 * t).min(0.5 * (1.0 - t));

    for _ in 0..60 {
        let back = at(t - delta);
        let forward = at(t + delta);
        if is_viable(&back, class, ctx)? && oos_core_contains(&forward, ctx)? {
            return Ok(AdjacencyWitness {
                boundary_point: z,
                delta,
            });
        }
        delta *= 0.5;
    }
    Err(Error::WitnessSearch(
        "no verified margin after 60 halvings".into(),
    ))
}
