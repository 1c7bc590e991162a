//! Orthonormal 2D Haar wavelet pyramid with viewpoint indexing, multiscale
//! visual-field extraction and partial reconstruction.
//!
//! Each analysis step consumes the previous approximation in 2x2 blocks
//! `[[a,b],[c,d]]` and emits one approximation coefficient `(a+b+c+d)/2`
//! plus a detail triplet (horizontal `(a+b-c-d)/2`, vertical `(a-b+c-d)/2`,
//! oblique `(a-b-c+d)/2`). Odd-sized approximations are zero-padded to even
//! size first and the padding is recorded, so a 28x28 input yields detail
//! grids of 14x14, 7x7, 4x4, 2x2 and 1x1 — 266 viewpoints in total — plus a
//! single root scaling coefficient.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magnitude below which a detail coefficient counts as zero. Blank image
/// regions and padding produce exact zeros; the epsilon only guards float
/// round-off.
pub const NULL_EPS: f64 = 1e-9;

/// A (level, row, col) coordinate addressing one coefficient triplet.
/// Level 1 is the coarsest detail grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Viewpoint {
    pub level: usize,
    pub row: usize,
    pub col: usize,
}

/// Horizontal / vertical / oblique detail coefficients at one viewpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoeffTriplet {
    pub horizontal: f64,
    pub vertical: f64,
    pub oblique: f64,
}

impl CoeffTriplet {
    pub const ZERO: CoeffTriplet = CoeffTriplet {
        horizontal: 0.0,
        vertical: 0.0,
        oblique: 0.0,
    };

    pub fn new(horizontal: f64, vertical: f64, oblique: f64) -> Self {
        CoeffTriplet {
            horizontal,
            vertical,
            oblique,
        }
    }

    /// True when all three magnitudes fall below [`NULL_EPS`].
    pub fn is_null(&self) -> bool {
        self.horizontal.abs() < NULL_EPS
            && self.vertical.abs() < NULL_EPS
            && self.oblique.abs() < NULL_EPS
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.horizontal, self.vertical, self.oblique]
    }

    pub fn energy(&self) -> f64 {
        self.horizontal * self.horizontal
            + self.vertical * self.vertical
            + self.oblique * self.oblique
    }
}

/// Pyramid shape: input size, level count, per-level detail grid sizes and
/// the zero-padding applied before each analysis step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Geometry {
    rows: usize,
    cols: usize,
    levels: usize,
    detail_dims: Vec<(usize, usize)>, // indexed by level-1 (coarsest first)
    pads: Vec<(usize, usize)>,        // padding applied before analysis at each level
    offsets: Vec<usize>,              // viewpoint id offset per level
    total_viewpoints: usize,
}

impl Geometry {
    /// Builds the geometry for a `rows` x `cols` input decomposed over
    /// `levels` levels. The repeated ceil-halving must end at a single
    /// scaling coefficient.
    pub fn new(rows: usize, cols: usize, levels: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || levels == 0 {
            return Err(Error::Argument(
                "geometry needs positive dimensions and at least one level".into(),
            ));
        }
        let mut r = rows;
        let mut c = cols;
        let mut detail_dims = vec![(0, 0); levels];
        let mut pads = vec![(0, 0); levels];
        for level in (1..=levels).rev() {
            let pad = (r % 2, c % 2);
            pads[level - 1] = pad;
            r = (r + pad.0) / 2;
            c = (c + pad.1) / 2;
            detail_dims[level - 1] = (r, c);
        }
        if (r, c) != (1, 1) {
            return Err(Error::Argument(format!(
                "{rows}x{cols} does not reduce to a 1x1 root in {levels} levels"
            )));
        }
        let mut offsets = Vec::with_capacity(levels);
        let mut total = 0;
        for &(dr, dc) in &detail_dims {
            offsets.push(total);
            total += dr * dc;
        }
        Ok(Geometry {
            rows,
            cols,
            levels,
            detail_dims,
            pads,
            offsets,
            total_viewpoints: total,
        })
    }

    /// The 28x28, 5-level decomposition used for MNIST (266 viewpoints).
    pub fn mnist() -> Self {
        Geometry::new(28, 28, 5).expect("28x28/5 is a valid geometry")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn viewpoint_count(&self) -> usize {
        self.total_viewpoints
    }

    /// Detail grid size at `level` (1 = coarsest).
    pub fn level_dims(&self, level: usize) -> (usize, usize) {
        self.detail_dims[level - 1]
    }

    /// Gaze positions live on the finest detail grid.
    pub fn gaze_dims(&self) -> (usize, usize) {
        self.detail_dims[self.levels - 1]
    }

    pub fn gaze_count(&self) -> usize {
        let (r, c) = self.gaze_dims();
        r * c
    }

    pub fn contains(&self, vp: Viewpoint) -> bool {
        if vp.level < 1 || vp.level > self.levels {
            return false;
        }
        let (dr, dc) = self.level_dims(vp.level);
        vp.row < dr && vp.col < dc
    }

    /// Dense id of a viewpoint: levels ordered coarse to fine, row-major
    /// within a level.
    pub fn viewpoint_id(&self, vp: Viewpoint) -> Result<usize> {
        if !self.contains(vp) {
            return Err(Error::ViewpointLookup(vp));
        }
        let (_, dc) = self.level_dims(vp.level);
        Ok(self.offsets[vp.level - 1] + vp.row * dc + vp.col)
    }

    pub fn viewpoint_from_id(&self, id: usize) -> Result<Viewpoint> {
        for level in (1..=self.levels).rev() {
            if id >= self.offsets[level - 1] {
                let rel = id - self.offsets[level - 1];
                let (dr, dc) = self.level_dims(level);
                if rel < dr * dc {
                    return Ok(Viewpoint {
                        level,
                        row: rel / dc,
                        col: rel % dc,
                    });
                }
            }
        }
        Err(Error::Argument(format!("viewpoint id {id} out of range")))
    }

    /// Iterates all viewpoints in id order.
    pub fn viewpoints(&self) -> impl Iterator<Item = Viewpoint> + '_ {
        (1..=self.levels).flat_map(move |level| {
            let (dr, dc) = self.level_dims(level);
            (0..dr).flat_map(move |row| (0..dc).map(move |col| Viewpoint { level, row, col }))
        })
    }

    /// The ancestor chain of a finest-grid gaze, finest level first: the
    /// gaze itself, then floor-halved coordinates at each coarser level,
    /// clamped to the (ceiling-padded) grid bounds.
    pub fn ancestors(&self, row: usize, col: usize) -> Result<Vec<Viewpoint>> {
        let (gr, gc) = self.gaze_dims();
        if row >= gr || col >= gc {
            return Err(Error::GazeBounds {
                row,
                col,
                rows: gr,
                cols: gc,
            });
        }
        let mut out = Vec::with_capacity(self.levels);
        for shift in 0..self.levels {
            let level = self.levels - shift;
            let (dr, dc) = self.level_dims(level);
            out.push(Viewpoint {
                level,
                row: (row >> shift).min(dr - 1),
                col: (col >> shift).min(dc - 1),
            });
        }
        Ok(out)
    }
}

/// A raster of pixels, `rows` x `cols`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<f64>,
}

impl Raster {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.cols + col]
    }

    pub fn energy(&self) -> f64 {
        self.pixels.iter().map(|p| p * p).sum()
    }
}

/// Full wavelet decomposition of one image: a root scaling coefficient plus
/// one triplet grid per level.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPyramid {
    geometry: Geometry,
    root: f64,
    levels: Vec<Vec<CoeffTriplet>>, // indexed by level-1, row-major grids
    pad_log: Vec<(usize, usize)>,
}

/// The 5 coefficient triplets (15 coefficients) visible from one gaze.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualField {
    pub gaze: (usize, usize),
    pub entries: Vec<(Viewpoint, CoeffTriplet)>,
}

impl WaveletPyramid {
    /// Forward transform. Fails if the pixel buffer does not match the
    /// geometry's input size.
    pub fn forward(geometry: &Geometry, pixels: &[f64]) -> Result<Self> {
        let expected = geometry.rows * geometry.cols;
        if pixels.len() != expected {
            return Err(Error::Dimension {
                expected,
                found: pixels.len(),
            });
        }
        let mut approx = pixels.to_vec();
        let mut r = geometry.rows;
        let mut c = geometry.cols;
        let mut levels = vec![Vec::new(); geometry.levels];
        for level in (1..=geometry.levels).rev() {
            let (pr, pc) = geometry.pads[level - 1];
            if pr > 0 || pc > 0 {
                approx = pad_zero(&approx, r, c, pr, pc);
                r += pr;
                c += pc;
            }
            let hr = r / 2;
            let hc = c / 2;
            let mut next = vec![0.0; hr * hc];
            let mut details = vec![CoeffTriplet::ZERO; hr * hc];
            for bi in 0..hr {
                for bj in 0..hc {
                    let a = approx[(2 * bi) * c + 2 * bj];
                    let b = approx[(2 * bi) * c + 2 * bj + 1];
                    let d0 = approx[(2 * bi + 1) * c + 2 * bj];
                    let d1 = approx[(2 * bi + 1) * c + 2 * bj + 1];
                    next[bi * hc + bj] = (a + b + d0 + d1) / 2.0;
                    details[bi * hc + bj] = CoeffTriplet {
                        horizontal: (a + b - d0 - d1) / 2.0,
                        vertical: (a - b + d0 - d1) / 2.0,
                        oblique: (a - b - d0 + d1) / 2.0,
                    };
                }
            }
            levels[level - 1] = details;
            approx = next;
            r = hr;
            c = hc;
        }
        Ok(WaveletPyramid {
            geometry: geometry.clone(),
            root: approx[0],
            levels,
            pad_log: geometry.pads.clone(),
        })
    }

    /// Assembles a pyramid from explicit coefficients. Grids are indexed
    /// coarsest level first and must match the geometry's level sizes.
    pub fn from_parts(
        geometry: Geometry,
        root: f64,
        levels: Vec<Vec<CoeffTriplet>>,
    ) -> Result<Self> {
        if levels.len() != geometry.levels {
            return Err(Error::Structure(format!(
                "got {} level grids, geometry expects {}",
                levels.len(),
                geometry.levels
            )));
        }
        for (k, grid) in levels.iter().enumerate() {
            let (dr, dc) = geometry.level_dims(k + 1);
            if grid.len() != dr * dc {
                return Err(Error::Structure(format!(
                    "level {} holds {} triplets, expected {}",
                    k + 1,
                    grid.len(),
                    dr * dc
                )));
            }
        }
        let pad_log = geometry.pads.clone();
        Ok(WaveletPyramid {
            geometry,
            root,
            levels,
            pad_log,
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn root(&self) -> f64 {
        self.root
    }

    pub fn pad_log(&self) -> &[(usize, usize)] {
        &self.pad_log
    }

    pub fn triplet(&self, vp: Viewpoint) -> Result<CoeffTriplet> {
        let id = self.geometry.viewpoint_id(vp)?;
        Ok(self.triplet_by_id(id))
    }

    pub(crate) fn triplet_by_id(&self, id: usize) -> CoeffTriplet {
        let vp = self
            .geometry
            .viewpoint_from_id(id)
            .expect("id produced by geometry");
        let (_, dc) = self.geometry.level_dims(vp.level);
        self.levels[vp.level - 1][vp.row * dc + vp.col]
    }

    /// Sum of squared coefficients; equals the input energy under the
    /// orthonormal convention.
    pub fn coeff_energy(&self) -> f64 {
        self.root * self.root
            + self
                .levels
                .iter()
                .flatten()
                .map(CoeffTriplet::energy)
                .sum::<f64>()
    }

    /// The multiscale visual field owned by a finest-grid gaze.
    pub fn visual_field(&self, row: usize, col: usize) -> Result<VisualField> {
        let ancestors = self.geometry.ancestors(row, col)?;
        let entries = ancestors
            .into_iter()
            .map(|vp| {
                let (_, dc) = self.geometry.level_dims(vp.level);
                (vp, self.levels[vp.level - 1][vp.row * dc + vp.col])
            })
            .collect();
        Ok(VisualField {
            gaze: (row, col),
            entries,
        })
    }

    /// Exact inverse transform (up to float round-off).
    pub fn inverse(&self) -> Result<Raster> {
        self.reconstruct_filtered(|_| true)
    }

    /// Inverse transform with every triplet outside `read` zeroed. The root
    /// coefficient is always included.
    pub fn partial_reconstruct(&self, read: &HashSet<Viewpoint>) -> Result<Raster> {
        for vp in read {
            if !self.geometry.contains(*vp) {
                return Err(Error::ViewpointLookup(*vp));
            }
        }
        self.reconstruct_filtered(|vp| read.contains(&vp))
    }

    fn reconstruct_filtered(&self, keep: impl Fn(Viewpoint) -> bool) -> Result<Raster> {
        if self.levels.len() != self.geometry.levels {
            return Err(Error::Structure(format!(
                "pyramid has {} levels, geometry expects {}",
                self.levels.len(),
                self.geometry.levels
            )));
        }
        let mut approx = vec![self.root];
        let mut r = 1usize;
        let mut c = 1usize;
        for level in 1..=self.geometry.levels {
            let (dr, dc) = self.geometry.level_dims(level);
            let details = &self.levels[level - 1];
            if details.len() != dr * dc {
                return Err(Error::Structure(format!(
                    "level {level} holds {} triplets, expected {}",
                    details.len(),
                    dr * dc
                )));
            }
            if (r, c) != (dr, dc) {
                return Err(Error::Structure(format!(
                    "approximation is {r}x{c} at level {level}, expected {dr}x{dc}"
                )));
            }
            let nr = 2 * dr;
            let nc = 2 * dc;
            let mut next = vec![0.0; nr * nc];
            for bi in 0..dr {
                for bj in 0..dc {
                    let s = approx[bi * dc + bj];
                    let t = if keep(Viewpoint {
                        level,
                        row: bi,
                        col: bj,
                    }) {
                        details[bi * dc + bj]
                    } else {
                        CoeffTriplet::ZERO
                    };
                    let (h, v, o) = (t.horizontal, t.vertical, t.oblique);
                    next[(2 * bi) * nc + 2 * bj] = (s + h + v + o) / 2.0;
                    next[(2 * bi) * nc + 2 * bj + 1] = (s + h - v - o) / 2.0;
                    next[(2 * bi + 1) * nc + 2 * bj] = (s - h + v - o) / 2.0;
                    next[(2 * bi + 1) * nc + 2 * bj + 1] = (s - h - v + o) / 2.0;
                }
            }
            // drop the rows/cols added by zero-padding before this level
            let (pr, pc) = self.pad_log[level - 1];
            let (cr, cc) = (nr - pr, nc - pc);
            if pr > 0 || pc > 0 {
                let mut cropped = vec![0.0; cr * cc];
                for i in 0..cr {
                    cropped[i * cc..(i + 1) * cc].copy_from_slice(&next[i * nc..i * nc + cc]);
                }
                next = cropped;
            }
            approx = next;
            r = cr;
            c = cc;
        }
        Ok(Raster {
            rows: self.geometry.rows,
            cols: self.geometry.cols,
            pixels: approx,
        })
    }
}

fn pad_zero(data: &[f64], rows: usize, cols: usize, pad_rows: usize, pad_cols: usize) -> Vec<f64> {
    let nr = rows + pad_rows;
    let nc = cols + pad_cols;
    let mut out = vec![0.0; nr * nc];
    for i in 0..rows {
        out[i * nc..i * nc + cols].copy_from_slice(&data[i * cols..(i + 1) * cols]);
    }
    out
}
