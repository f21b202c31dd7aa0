//! 2-D decision-map rasterizer with binary PPM (P6) output.
//!
//! Every pixel is classified at its center: class cells get a per-class hue
//! (saturated when the pixel is viable, washed out otherwise), the OOS core
//! gets its own color, and pixels whose cell ordering differs from a right
//! or down neighbor are drawn black to trace the boundary set.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{classify_cell, CellIndex, CellLabel, ViabilityMode, BOUNDARY_TOL};
use crate::metric::{ClassId, Point, PrototypeContext};

pub const BOUNDARY_COLOR: [u8; 3] = [0, 0, 0];
pub const OOS_CORE_COLOR: [u8; 3] = [108, 108, 120];

/// Axis-aligned view rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Bounds {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        if !(x_min < x_max && y_min < y_max)
            || [x_min, y_min, x_max, y_max].iter().any(|v| !v.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "degenerate bounds [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Bounds {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    /// Square box covering the 2-D prototypes (and generic point) with
    /// margin proportional to their spread.
    pub fn covering(ctx: &PrototypeContext, margin_factor: f64) -> Result<Self> {
        if ctx.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: ctx.dim(),
            });
        }
        let mut points: Vec<&Point> = ctx.prototypes().values().collect();
        if let Some(g) = ctx.generic() {
            points.push(g);
        }
        let xs: Vec<f64> = points.iter().map(|p| p.coords()[0]).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.coords()[1]).collect();
        let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let spread = ((max(&xs) - min(&xs)).max(max(&ys) - min(&ys))).max(1.0);
        let m = margin_factor * spread;
        Bounds::new(min(&xs) - m, min(&ys) - m, max(&xs) + m, max(&ys) + m)
    }
}

/// Row-major RGB8 raster.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    pixels: Vec<u8>,
}

impl RasterImage {
    pub fn pixel(&self, px: usize, py: usize) -> [u8; 3] {
        let base = 3 * (py * self.width + px);
        [
            self.pixels[base],
            self.pixels[base + 1],
            self.pixels[base + 2],
        ]
    }

    /// Binary PPM: `P6\n<w> <h>\n255\n` followed by raw RGB bytes.
    pub fn ppm_bytes(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(&self.ppm_bytes())?;
        Ok(())
    }
}

/// Embedding-space point at the center of pixel `(px, py)`; row 0 is the top
/// of the view rectangle.
pub fn pixel_center(bounds: &Bounds, width: usize, height: usize, px: usize, py: usize) -> Point {
    let x = bounds.x_min + (px as f64 + 0.5) / width as f64 * (bounds.x_max - bounds.x_min);
    let y = bounds.y_max - (py as f64 + 0.5) / height as f64 * (bounds.y_max - bounds.y_min);
    Point::new(vec![x, y]).expect("finite bounds give finite pixel centers")
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let h = h.rem_euclid(360.0) / 60.0;
    let c = v * s;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let to_u8 = |f: f64| ((f + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    [to_u8(r), to_u8(g), to_u8(b)]
}

fn class_hue(rank: usize) -> f64 {
    (rank as f64 * 0.618033988749895).fract() * 360.0
}

/// Fill color of a class cell; `rank` is the class's position in ascending
/// class-id order.
pub fn class_color(rank: usize, viable: bool) -> [u8; 3] {
    if viable {
        hsv_to_rgb(class_hue(rank), 0.8, 0.95)
    } else {
        hsv_to_rgb(class_hue(rank), 0.22, 0.97)
    }
}

/// Base color (before boundary overdraw) of the cell a pixel falls in.
pub fn cell_color(label: &CellLabel, mode: ViabilityMode, class_ranks: &[ClassId]) -> [u8; 3] {
    if label.on_boundary {
        return BOUNDARY_COLOR;
    }
    match label.ordering[0] {
        CellIndex::Generic => OOS_CORE_COLOR,
        CellIndex::Class(c) => {
            let rank = class_ranks.iter().position(|&r| r == c).unwrap_or(0);
            let viable = match mode {
                ViabilityMode::Standard => true,
                ViabilityMode::Generic => label.ordering.get(1) == Some(&CellIndex::Generic),
            };
            class_color(rank, viable)
        }
    }
}

/// Rasterizes the cell decomposition over `bounds`. Requires d = 2; in
/// standard mode the generic point is ignored even when present.
pub fn render_decision_map(
    ctx: &PrototypeContext,
    mode: ViabilityMode,
    bounds: &Bounds,
    width: usize,
    height: usize,
) -> Result<RasterImage> {
    if ctx.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: ctx.dim(),
        });
    }
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter(
            "resolution must be positive".into(),
        ));
    }
    let ctx = effective_context(ctx, mode)?;
    let class_ranks: Vec<ClassId> = ctx.class_ids().collect();

    // Pass 1: per-pixel labels, row-parallel; output depends only on the
    // pixel's own coordinates, so the schedule cannot change it.
    let labels: Vec<Vec<CellLabel>> = (0..height)
        .into_par_iter()
        .map(|py| {
            (0..width)
                .map(|px| {
                    let p = pixel_center(bounds, width, height, px, py);
                    classify_cell(&p, &ctx, BOUNDARY_TOL)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    // Pass 2: colors with boundary overdraw against right/down neighbors.
    let mut pixels = vec![0u8; width * height * 3];
    for py in 0..height {
        for px in 0..width {
            let label = &labels[py][px];
            let boundary = (px + 1 < width && labels[py][px + 1].ordering != label.ordering)
                || (py + 1 < height && labels[py + 1][px].ordering != label.ordering);
            let color = if boundary {
                BOUNDARY_COLOR
            } else {
                cell_color(label, mode, &class_ranks)
            };
            let base = 3 * (py * width + px);
            pixels[base..base + 3].copy_from_slice(&color);
        }
    }
    Ok(RasterImage {
        width,
        height,
        pixels,
    })
}

/// Strips the generic slot in standard mode so classification matches the
/// requested problem.
pub fn effective_context(ctx: &PrototypeContext, mode: ViabilityMode) -> Result<PrototypeContext> {
    match mode {
        ViabilityMode::Generic => {
            if ctx.generic().is_none() {
                return Err(Error::MissingGeneric);
            }
            Ok(ctx.clone())
        }
        ViabilityMode::Standard => PrototypeContext::new(ctx.prototypes().clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn pt(coords: &[f64]) -> Point {
        Point::new(coords.to_vec()).unwrap()
    }

    fn two_class_ctx() -> PrototypeContext {
        let mut protos = BTreeMap::new();
        protos.insert(1, pt(&[-1.0, 0.0]));
        protos.insert(2, pt(&[1.0, 0.0]));
        PrototypeContext::new(protos).unwrap()
    }

    #[test]
    fn single_bisector_split() {
        let bounds = Bounds::new(-2.0, -2.0, 2.0, 2.0).unwrap();
        let img = render_decision_map(&two_class_ctx(), ViabilityMode::Standard, &bounds, 64, 64)
            .unwrap();
        // Left and right halves carry the two class colors.
        assert_eq!(img.pixel(4, 32), class_color(0, true));
        assert_eq!(img.pixel(60, 32), class_color(1, true));
        // The vertical boundary shows up within a pixel of the center.
        let mid_colors: Vec<[u8; 3]> = (30..34).map(|px| img.pixel(px, 10)).collect();
        assert!(mid_colors.contains(&BOUNDARY_COLOR));
    }

    #[test]
    fn standard_mode_saturates_every_region() {
        let mut protos = BTreeMap::new();
        protos.insert(1, pt(&[0.0, 1.0]));
        protos.insert(2, pt(&[-1.0, -0.5]));
        protos.insert(3, pt(&[1.0, -0.5]));
        let ctx = PrototypeContext::new(protos).unwrap();
        let bounds = Bounds::new(-2.0, -2.0, 2.0, 2.0).unwrap();
        let img = render_decision_map(&ctx, ViabilityMode::Standard, &bounds, 96, 96).unwrap();
        let mut seen = [false; 3];
        for py in 0..96 {
            for px in 0..96 {
                let c = img.pixel(px, py);
                for rank in 0..3 {
                    if c == class_color(rank, true) {
                        seen[rank] = true;
                    }
                    assert_ne!(
                        c,
                        class_color(rank, false),
                        "desaturated pixel in standard mode"
                    );
                }
            }
        }
        assert_eq!(seen, [true; 3]);
    }

    #[test]
    fn render_requires_two_dims() {
        let mut protos = BTreeMap::new();
        protos.insert(1, pt(&[0.0, 0.0, 1.0]));
        let ctx = PrototypeContext::new(protos).unwrap();
        let bounds = Bounds::new(-1.0, -1.0, 1.0, 1.0).unwrap();
        assert!(render_decision_map(&ctx, ViabilityMode::Standard, &bounds, 8, 8).is_err());
    }

    #[test]
    fn ppm_header_and_size() {
        let bounds = Bounds::new(-2.0, -2.0, 2.0, 2.0).unwrap();
        let img =
            render_decision_map(&two_class_ctx(), ViabilityMode::Standard, &bounds, 17, 9).unwrap();
        let bytes = img.ppm_bytes();
        assert!(bytes.starts_with(b"P6\n17 9\n255\n"));
        assert_eq!(bytes.len(), b"P6\n17 9\n255\n".len() + 17 * 9 * 3);
    }

    #[test]
    fn bounds_validation() {
        assert!(Bounds::new(1.0, 0.0, -1.0, 2.0).is_err());
        assert!(Bounds::new(0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn output_is_schedule_independent() {
        let bounds = Bounds::new(-2.0, -2.0, 2.0, 2.0).unwrap();
        let reference =
            render_decision_map(&two_class_ctx(), ViabilityMode::Standard, &bounds, 40, 40)
                .unwrap();
        for threads in [1, 4] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let image = pool
                .install(|| {
                    render_decision_map(&two_class_ctx(), ViabilityMode::Standard, &bounds, 40, 40)
                })
                .unwrap();
            assert_eq!(image, reference);
        }
    }
}
