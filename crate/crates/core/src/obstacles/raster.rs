//! Rasterized obstacle regions and their greedy decomposition into disjoint
//! balls.

use std::path::Path;

use super::MovingBall;
use crate::error::{PlanError, Result};

/// A dense occupancy grid over a 2D or 3D box. `true` cells are obstacle.
///
/// Cell `(i, j[, k])` has its center at `origin + (i + ½, j + ½[, k + ½]) · cell_size`.
/// Storage is x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterRegion {
    origin: Vec<f64>,
    cell_size: f64,
    dims: Vec<usize>,
    occupancy: Vec<bool>,
}

impl RasterRegion {
    pub fn new(
        origin: Vec<f64>,
        cell_size: f64,
        dims: Vec<usize>,
        occupancy: Vec<bool>,
    ) -> Result<Self> {
        if !(2..=3).contains(&dims.len()) {
            return Err(PlanError::InvalidParameter(format!(
                "raster regions are 2D or 3D, got {} axes",
                dims.len()
            )));
        }
        if origin.len() != dims.len() {
            return Err(PlanError::DimensionMismatch {
                what: "raster origin",
                expected: dims.len(),
                got: origin.len(),
            });
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(PlanError::InvalidParameter(format!(
                "cell size must be positive, got {cell_size}"
            )));
        }
        let cells: usize = dims.iter().product();
        if occupancy.len() != cells {
            return Err(PlanError::DimensionMismatch {
                what: "raster occupancy",
                expected: cells,
                got: occupancy.len(),
            });
        }
        Ok(RasterRegion {
            origin,
            cell_size,
            dims,
            occupancy,
        })
    }

    /// Rasterizes a predicate by sampling it at every cell center.
    pub fn from_fn(
        origin: Vec<f64>,
        cell_size: f64,
        dims: Vec<usize>,
        inside: impl Fn(&[f64]) -> bool,
    ) -> Result<Self> {
        let cells: usize = dims.iter().product();
        let mut occupancy = Vec::with_capacity(cells);
        let mut p = vec![0.0; dims.len()];
        for idx in 0..cells {
            let mut rem = idx;
            for (axis, &n) in dims.iter().enumerate() {
                p[axis] = origin[axis] + ((rem % n) as f64 + 0.5) * cell_size;
                rem /= n;
            }
            occupancy.push(inside(&p));
        }
        Self::new(origin, cell_size, dims, occupancy)
    }

    /// Parses a plain-text grid: one row of `0`/`1` characters per line, the
    /// first line being the row with the largest y.
    pub fn from_text(text: &str, origin: Vec<f64>, cell_size: f64) -> Result<Self> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        if rows.is_empty() {
            return Err(PlanError::InvalidParameter("empty raster grid".into()));
        }
        let nx = rows[0].chars().count();
        let ny = rows.len();
        let mut occupancy = vec![false; nx * ny];
        for (r, line) in rows.iter().enumerate() {
            if line.chars().count() != nx {
                return Err(PlanError::InvalidParameter(format!(
                    "raster row {} has {} cells, expected {nx}",
                    r + 1,
                    line.chars().count()
                )));
            }
            let iy = ny - 1 - r;
            for (ix, ch) in line.chars().enumerate() {
                occupancy[ix + nx * iy] = match ch {
                    '1' => true,
                    '0' => false,
                    other => {
                        return Err(PlanError::InvalidParameter(format!(
                            "unexpected raster character {other:?} in row {}",
                            r + 1
                        )))
                    }
                };
            }
        }
        Self::new(origin, cell_size, vec![nx, ny], occupancy)
    }

    /// Loads a grayscale image (PGM/PNG). Pixels darker than mid-gray are
    /// obstacle; the top image row is the row with the largest y.
    pub fn from_image(path: &Path, origin: Vec<f64>, cell_size: f64) -> Result<Self> {
        let img = image::open(path)
            .map_err(|e| PlanError::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?
            .into_luma8();
        let (nx, ny) = (img.width() as usize, img.height() as usize);
        let mut occupancy = vec![false; nx * ny];
        for (x, y, px) in img.enumerate_pixels() {
            let iy = ny - 1 - y as usize;
            occupancy[x as usize + nx * iy] = px.0[0] < 128;
        }
        Self::new(origin, cell_size, vec![nx, ny], occupancy)
    }

    /// Loads a raster from disk, choosing the text parser for `.txt`/`.grid`
    /// files and the image decoder otherwise.
    pub fn load(path: &Path, origin: Vec<f64>, cell_size: f64) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("txt") | Some("grid") => {
                let text = std::fs::read_to_string(path)?;
                Self::from_text(&text, origin, cell_size)
            }
            _ => Self::from_image(path, origin, cell_size),
        }
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn spatial_dim(&self) -> usize {
        self.dims.len()
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    pub fn cell_center(&self, idx: usize) -> Vec<f64> {
        let mut rem = idx;
        self.dims
            .iter()
            .enumerate()
            .map(|(axis, &n)| {
                let i = rem % n;
                rem /= n;
                self.origin[axis] + (i as f64 + 0.5) * self.cell_size
            })
            .collect()
    }

    /// Whether the point falls in an occupied cell.
    pub fn contains(&self, p: &[f64]) -> bool {
        let mut idx = 0;
        let mut stride = 1;
        for (axis, &n) in self.dims.iter().enumerate() {
            let f = ((p[axis] - self.origin[axis]) / self.cell_size).floor();
            if f < 0.0 || f >= n as f64 {
                return false;
            }
            idx += f as usize * stride;
            stride *= n;
        }
        self.occupancy[idx]
    }
}

/// Squared Euclidean distance transform of a 1D sampled function
/// (lower envelope of parabolas). Infinite samples contribute no parabola.
fn distance_transform_1d(f: &[f64], out: &mut [f64], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    v.clear();
    z.clear();
    for q in 0..f.len() {
        if !f[q].is_finite() {
            continue;
        }
        let fq = f[q] + (q * q) as f64;
        let mut s = f64::NEG_INFINITY;
        while let Some(&p) = v.last() {
            s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= *z.last().unwrap() {
                v.pop();
                z.pop();
                s = f64::NEG_INFINITY;
            } else {
                break;
            }
        }
        v.push(q);
        z.push(s);
    }
    if v.is_empty() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while k + 1 < v.len() && z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// For every cell of a padded grid, the squared distance (in cell units) to
/// the nearest free cell center.
fn squared_distance_to_free(mask: &[bool], dims: &[usize]) -> Vec<f64> {
    let total: usize = dims.iter().product();
    let mut field: Vec<f64> = mask
        .iter()
        .map(|&occ| if occ { f64::INFINITY } else { 0.0 })
        .collect();
    debug_assert_eq!(field.len(), total);
    let (mut v, mut z) = (Vec::new(), Vec::new());
    let mut stride = 1;
    for &n in dims {
        let mut line = vec![0.0; n];
        let mut out = vec![0.0; n];
        let outer = total / n;
        for l in 0..outer {
            // base index of the l-th line along this axis
            let base = (l / stride) * stride * n + l % stride;
            for (i, x) in line.iter_mut().enumerate() {
                *x = field[base + i * stride];
            }
            distance_transform_1d(&line, &mut out, &mut v, &mut z);
            for (i, x) in out.iter().enumerate() {
                field[base + i * stride] = *x;
            }
        }
        stride *= n;
    }
    field
}

/// Greedily fills the obstacle region with disjoint balls of maximal radius.
///
/// Each round computes the interior distance of the residual region (distance
/// from a cell center to the nearest free cell center, less half a cell),
/// places a ball at its maximizer, and removes the covered cells. The loop
/// stops once the best available radius drops below `r_min`.
pub fn decompose_region(region: &RasterRegion, r_min: f64) -> Result<Vec<MovingBall>> {
    let h = region.cell_size;
    if !(r_min > h) {
        return Err(PlanError::InvalidParameter(format!(
            "r_min ({r_min}) must exceed the cell size ({h})"
        )));
    }
    let dim = region.spatial_dim();
    let padded: Vec<usize> = region.dims.iter().map(|n| n + 2).collect();
    let total: usize = padded.iter().product();

    let to_padded = |idx: usize| -> usize {
        let mut rem = idx;
        let mut out = 0;
        let mut stride = 1;
        for (axis, &n) in region.dims.iter().enumerate() {
            out += (rem % n + 1) * stride;
            rem /= n;
            stride *= padded[axis];
        }
        out
    };
    let mut mask = vec![false; total];
    let mut cells = Vec::new();
    for (idx, &occ) in region.occupancy.iter().enumerate() {
        if occ {
            mask[to_padded(idx)] = true;
            cells.push(idx);
        }
    }
    let centers: Vec<Vec<f64>> = cells.iter().map(|&c| region.cell_center(c)).collect();
    let padded_of: Vec<usize> = cells.iter().map(|&c| to_padded(c)).collect();

    let mut balls = Vec::new();
    loop {
        let field = squared_distance_to_free(&mask, &padded);
        let mut best: Option<(usize, f64)> = None;
        for (k, &pi) in padded_of.iter().enumerate() {
            if !mask[pi] {
                continue;
            }
            let d = field[pi];
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((k, d));
            }
        }
        let Some((k, sq)) = best else { break };
        let radius = sq.sqrt() * h - 0.5 * h;
        if radius < r_min {
            break;
        }
        let center = centers[k].clone();
        for (j, &pi) in padded_of.iter().enumerate() {
            if mask[pi] {
                let dist2: f64 = (0..dim).map(|a| (centers[j][a] - center[a]).powi(2)).sum();
                if dist2 <= radius * radius {
                    mask[pi] = false;
                }
            }
        }
        balls.push(MovingBall::fixed(center, radius));
    }
    Ok(balls)
}
