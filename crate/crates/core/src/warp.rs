//! Forward warping expressed as a sparse partial-permutation operator.
//!
//! A [`MotionField`] says where every source pixel of the reference view
//! lands in a target view. [`build_operator`] turns it into the matrix `A`
//! whose row `r` (a target pixel) holds a single one in the column of the
//! source pixel that ends up there, and the diagonal mask `M` that zeroes
//! rows nobody wrote to (holes).

use crate::camera::{PixelTransfer, Projection};
use crate::depth::{DepthField, Geometry};
use crate::error::{Error, Result};
use crate::image::{Image, ImageVector};

const NONE: u32 = u32::MAX;

/// Per-pixel integer displacement: source `(m, n)` is sent to
/// `(m + vertical, n + horizontal)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotionField {
    height: usize,
    width: usize,
    horizontal: Vec<i32>,
    vertical: Vec<i32>,
    /// `false` where the projection was degenerate; such pixels write nothing.
    valid: Vec<bool>,
}

impl MotionField {
    pub fn new(height: usize, width: usize, horizontal: Vec<i32>, vertical: Vec<i32>) -> Result<Self> {
        let n = height * width;
        if horizontal.len() != n || vertical.len() != n {
            return Err(Error::dims(n, format!("{}/{}", horizontal.len(), vertical.len())));
        }
        Ok(Self {
            height,
            width,
            horizontal,
            vertical,
            valid: vec![true; n],
        })
    }

    pub fn zero(height: usize, width: usize) -> Self {
        let n = height * width;
        Self {
            height,
            width,
            horizontal: vec![0; n],
            vertical: vec![0; n],
            valid: vec![true; n],
        }
    }

    /// Uniform horizontal shift.
    pub fn uniform(height: usize, width: usize, horizontal: i32, vertical: i32) -> Self {
        let n = height * width;
        Self {
            height,
            width,
            horizontal: vec![horizontal; n],
            vertical: vec![vertical; n],
            valid: vec![true; n],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn horizontal(&self) -> &[i32] {
        &self.horizontal
    }

    pub fn vertical(&self) -> &[i32] {
        &self.vertical
    }

    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.valid[row * self.width + col]
    }

    pub fn mark_invalid(&mut self, row: usize, col: usize) {
        self.valid[row * self.width + col] = false;
    }

    /// Destination of source `(row, col)`, or `None` when it leaves the
    /// frame or the projection was degenerate. Never wraps.
    pub fn destination(&self, row: usize, col: usize) -> Option<(usize, usize)> {
        let i = row * self.width + col;
        if !self.valid[i] {
            return None;
        }
        let r = row as i64 + self.vertical[i] as i64;
        let c = col as i64 + self.horizontal[i] as i64;
        if r < 0 || c < 0 || r >= self.height as i64 || c >= self.width as i64 {
            return None;
        }
        Some((r as usize, c as usize))
    }
}

/// Motion of each reference pixel into one target view.
///
/// `target` indexes the non-reference views of `geometry` (0 is the second
/// view). In rectified mode a disparity `d` moves a pixel by
/// `-round(scale * d)` columns.
pub fn motion_from_depth(depth: &DepthField, geometry: &Geometry, target: usize) -> Result<MotionField> {
    let (h, w) = (depth.height(), depth.width());
    let mut motion = MotionField::zero(h, w);
    match geometry {
        Geometry::Rectified { scales, .. } => {
            let scale = *scales
                .get(target)
                .ok_or_else(|| Error::InvalidParameter(format!("no view {target} in rig")))?;
            for i in 0..h * w {
                motion.horizontal[i] = -(scale * depth.value_at_index(i)).round() as i32;
            }
        }
        Geometry::Calibrated { cameras, .. } => {
            let dst = cameras
                .get(target + 1)
                .ok_or_else(|| Error::InvalidParameter(format!("no camera for view {target}")))?;
            let transfer = PixelTransfer::new(&cameras[0], dst);
            for row in 0..h {
                for col in 0..w {
                    let i = row * w + col;
                    match transfer.project(row, col, depth.value_at_index(i)) {
                        Projection::Pixel { row: r, col: c } => {
                            motion.vertical[i] = (r - row as i64).clamp(i32::MIN as i64, i32::MAX as i64) as i32;
                            motion.horizontal[i] = (c - col as i64).clamp(i32::MIN as i64, i32::MAX as i64) as i32;
                        }
                        Projection::Degenerate => motion.valid[i] = false,
                    }
                }
            }
        }
    }
    Ok(motion)
}

/// Sparse `N x N` 0/1 matrix with at most one entry per row and per column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WarpOperator {
    height: usize,
    width: usize,
    /// Column index of the entry in each row, or `NONE`.
    source_of_row: Vec<u32>,
    hole_rows: Vec<usize>,
}

/// Diagonal 0/1 mask `M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OcclusionMask {
    diagonal: Vec<bool>,
}

impl OcclusionMask {
    pub fn identity(n: usize) -> Self {
        Self {
            diagonal: vec![true; n],
        }
    }

    pub fn from_operator(op: &WarpOperator) -> Self {
        Self {
            diagonal: op.source_of_row.iter().map(|&s| s != NONE).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }

    pub fn diagonal(&self) -> &[bool] {
        &self.diagonal
    }

    #[inline]
    pub fn keeps(&self, i: usize) -> bool {
        self.diagonal[i]
    }

    pub fn apply(&self, x: &ImageVector) -> Result<ImageVector> {
        check_len(self.len(), x.len())?;
        Ok(ImageVector(
            x.0.iter()
                .zip(&self.diagonal)
                .map(|(&v, &keep)| if keep { v } else { 0.0 })
                .collect(),
        ))
    }

    /// One `0`/`1` per line.
    pub fn to_text(&self) -> String {
        self.diagonal.iter().map(|&k| if k { "1\n" } else { "0\n" }).collect()
    }

    pub fn zero_count(&self) -> usize {
        self.diagonal.iter().filter(|&&k| !k).count()
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::dims(expected, actual));
    }
    Ok(())
}

impl WarpOperator {
    pub fn identity(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            source_of_row: (0..(height * width) as u32).collect(),
            hole_rows: Vec::new(),
        }
    }

    /// Build from explicit `(row, col)` entries, rejecting anything that is
    /// not a partial permutation.
    pub fn from_entries(height: usize, width: usize, entries: &[(usize, usize)]) -> Result<Self> {
        let n = height * width;
        let mut source_of_row = vec![NONE; n];
        let mut used = vec![false; n];
        for &(r, c) in entries {
            if r >= n || c >= n {
                return Err(Error::InvalidParameter(format!("entry ({r}, {c}) out of range")));
            }
            if source_of_row[r] != NONE || used[c] {
                return Err(Error::InvalidParameter(format!(
                    "entry ({r}, {c}) breaks the partial permutation"
                )));
            }
            source_of_row[r] = c as u32;
            used[c] = true;
        }
        Ok(Self::from_rows(height, width, source_of_row))
    }

    fn from_rows(height: usize, width: usize, source_of_row: Vec<u32>) -> Self {
        let hole_rows = source_of_row
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == NONE)
            .map(|(i, _)| i)
            .collect();
        Self {
            height,
            width,
            source_of_row,
            hole_rows,
        }
    }

    /// `N = N1 * N2`.
    pub fn size(&self) -> usize {
        self.source_of_row.len()
    }

    pub fn source_dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Sorted rows with no entry.
    pub fn hole_rows(&self) -> &[usize] {
        &self.hole_rows
    }

    pub fn source_of(&self, row: usize) -> Option<usize> {
        match self.source_of_row[row] {
            NONE => None,
            s => Some(s as usize),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.source_of_row
            .iter()
            .enumerate()
            .filter(|(_, &s)| s != NONE)
            .map(|(r, &s)| (r, s as usize))
    }

    pub fn entry_count(&self) -> usize {
        self.size() - self.hole_rows.len()
    }

    /// Source pixels that reach no destination (column without an entry).
    pub fn unused_columns(&self) -> Vec<usize> {
        let mut used = vec![false; self.size()];
        for (_, c) in self.entries() {
            used[c] = true;
        }
        used.iter()
            .enumerate()
            .filter(|(_, &u)| !u)
            .map(|(i, _)| i)
            .collect()
    }

    /// `y = A x` into a preallocated buffer.
    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.size());
        debug_assert_eq!(y.len(), self.size());
        for (out, &s) in y.iter_mut().zip(&self.source_of_row) {
            *out = if s == NONE { 0.0 } else { x[s as usize] };
        }
    }

    /// `x += scale * A^T y`.
    pub fn apply_transpose_add(&self, y: &[f64], scale: f64, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.size());
        for (&v, &s) in y.iter().zip(&self.source_of_row) {
            if s != NONE {
                x[s as usize] += scale * v;
            }
        }
    }

    pub fn apply(&self, x: &ImageVector) -> Result<ImageVector> {
        check_len(self.size(), x.len())?;
        let mut y = vec![0.0; self.size()];
        self.apply_into(&x.0, &mut y);
        Ok(ImageVector(y))
    }

    pub fn apply_transpose(&self, y: &ImageVector) -> Result<ImageVector> {
        check_len(self.size(), y.len())?;
        let mut x = vec![0.0; self.size()];
        self.apply_transpose_add(&y.0, 1.0, &mut x);
        Ok(ImageVector(x))
    }

    /// Text export: header `N nnz`, then one `row col` pair per line.
    pub fn to_triplet_text(&self) -> String {
        let mut out = format!("{} {}\n", self.size(), self.entry_count());
        for (r, c) in self.entries() {
            out.push_str(&format!("{r} {c}\n"));
        }
        out
    }

    /// Inverse of [`WarpOperator::to_triplet_text`] for an `height x width` grid.
    pub fn from_triplet_text(height: usize, width: usize, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let parse_pair = |line: &str| -> Result<(usize, usize)> {
            let mut it = line.split_whitespace().map(|t| t.parse::<usize>());
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
                _ => Err(Error::Malformed(format!("bad triplet line {line:?}"))),
            }
        };
        let (n, nnz) = parse_pair(lines.next().ok_or_else(|| Error::Malformed("empty operator file".into()))?)?;
        check_len(height * width, n)?;
        let entries = lines.map(parse_pair).collect::<Result<Vec<_>>>()?;
        check_len(nnz, entries.len())?;
        Self::from_entries(height, width, &entries)
    }

    /// Warp a whole image, leaving holes at zero.
    pub fn warp_image(&self, image: &Image) -> Result<Image> {
        if image.dims() != (self.height, self.width) {
            return Err(Error::dims(
                format!("{}x{}", self.height, self.width),
                format!("{}x{}", image.height(), image.width()),
            ));
        }
        let mut out = vec![0.0; self.size()];
        self.apply_into(image.as_slice(), &mut out);
        Image::new(self.width, self.height, out)
    }
}

/// Build `A` and `M` from a motion field.
///
/// Sources are scanned left to right, top to bottom; a later source landing
/// on an already written destination replaces the earlier one.
/// Destinations outside the frame are dropped.
pub fn build_operator(motion: &MotionField) -> (WarpOperator, OcclusionMask) {
    let (h, w) = (motion.height, motion.width);
    let mut source_of_row = vec![NONE; h * w];
    for row in 0..h {
        for col in 0..w {
            if let Some((r, c)) = motion.destination(row, col) {
                source_of_row[r * w + c] = (row * w + col) as u32;
            }
        }
    }
    let op = WarpOperator::from_rows(h, w, source_of_row);
    let mask = OcclusionMask::from_operator(&op);
    (op, mask)
}
