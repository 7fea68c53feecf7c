//! Dense depth / disparity estimation from decoded views.
//!
//! The energy is a squared-difference data term summed over the
//! non-reference views plus a truncated-linear smoothness term on label
//! indices over the 4-neighborhood, minimized with alpha-expansion.

mod expansion;
pub mod maxflow;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{CameraParams, PixelTransfer, Projection};
use crate::error::{Error, Result};
use crate::image::Image;

pub use expansion::{alpha_expansion, labeling_energy, winner_take_all, ExpansionOptions, ExpansionOutcome};

/// How views relate geometrically.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    /// Calibrated cameras (reference first); labels sample inverse depth
    /// uniformly in `[1/max_depth, 1/min_depth]`.
    Calibrated {
        cameras: Vec<CameraParams>,
        min_depth: f64,
        max_depth: f64,
        labels: usize,
    },
    /// Rectified rig: labels are the integer disparities
    /// `min_disparity..=max_disparity`; a pixel of the reference with
    /// disparity `d` appears in non-reference view `k` at column
    /// `col - round(scales[k] * d)`.
    Rectified {
        min_disparity: i32,
        max_disparity: i32,
        scales: Vec<f64>,
    },
}

impl Geometry {
    /// Two-view rectified rig with unit baseline.
    pub fn rectified(min_disparity: i32, max_disparity: i32) -> Self {
        Geometry::Rectified {
            min_disparity,
            max_disparity,
            scales: vec![1.0],
        }
    }

    pub fn label_count(&self) -> usize {
        match self {
            Geometry::Calibrated { labels, .. } => *labels,
            Geometry::Rectified {
                min_disparity,
                max_disparity,
                ..
            } => (max_disparity - min_disparity + 1).max(0) as usize,
        }
    }

    /// Number of views the geometry describes.
    pub fn view_count(&self) -> usize {
        match self {
            Geometry::Calibrated { cameras, .. } => cameras.len(),
            Geometry::Rectified { scales, .. } => scales.len() + 1,
        }
    }

    pub fn label_table(&self) -> Vec<f64> {
        match self {
            Geometry::Calibrated {
                min_depth,
                max_depth,
                labels,
                ..
            } => inverse_depth_table(*min_depth, *max_depth, *labels),
            Geometry::Rectified {
                min_disparity,
                max_disparity,
                ..
            } => (*min_disparity..=*max_disparity).map(f64::from).collect(),
        }
    }

    pub fn kind(&self) -> LabelKind {
        match self {
            Geometry::Calibrated { .. } => LabelKind::Depth,
            Geometry::Rectified { .. } => LabelKind::Disparity,
        }
    }

    /// The same rig restricted to the reference and one other view.
    pub fn pair(&self, target: usize) -> Result<Geometry> {
        match self {
            Geometry::Calibrated {
                cameras,
                min_depth,
                max_depth,
                labels,
            } => {
                let other = cameras
                    .get(target + 1)
                    .ok_or_else(|| Error::InvalidParameter(format!("no view {target}")))?;
                Ok(Geometry::Calibrated {
                    cameras: vec![cameras[0].clone(), other.clone()],
                    min_depth: *min_depth,
                    max_depth: *max_depth,
                    labels: *labels,
                })
            }
            Geometry::Rectified {
                min_disparity,
                max_disparity,
                scales,
            } => {
                let s = *scales
                    .get(target)
                    .ok_or_else(|| Error::InvalidParameter(format!("no view {target}")))?;
                Ok(Geometry::Rectified {
                    min_disparity: *min_disparity,
                    max_disparity: *max_disparity,
                    scales: vec![s],
                })
            }
        }
    }
}

/// Depths whose inverses are evenly spaced from `1/max` (label 0) to
/// `1/min` (last label).
pub fn inverse_depth_table(min_depth: f64, max_depth: f64, labels: usize) -> Vec<f64> {
    let (lo, hi) = (1.0 / max_depth, 1.0 / min_depth);
    if labels == 1 {
        return vec![1.0 / lo];
    }
    (0..labels)
        .map(|l| 1.0 / (lo + (hi - lo) * l as f64 / (labels - 1) as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    /// Table values are depths in world units.
    Depth,
    /// Table values are disparities in pixels.
    Disparity,
}

/// Per-pixel label indices plus the label-to-value table.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthField {
    height: usize,
    width: usize,
    labels: Vec<u16>,
    table: Vec<f64>,
    kind: LabelKind,
    lambda: f64,
    tau: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct DepthSidecar {
    #[serde(rename = "labelTable")]
    label_table: Vec<f64>,
    kind: LabelKind,
    lambda: f64,
    tau: f64,
    #[serde(rename = "L")]
    label_count: usize,
}

impl DepthField {
    pub fn new(height: usize, width: usize, labels: Vec<u16>, table: Vec<f64>, kind: LabelKind) -> Result<Self> {
        if labels.len() != height * width {
            return Err(Error::dims(height * width, labels.len()));
        }
        if table.is_empty() {
            return Err(Error::InvalidParameter("empty label table".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= table.len()) {
            return Err(Error::InvalidParameter(format!(
                "label {bad} outside table of {}",
                table.len()
            )));
        }
        let inverse = |v: f64| match kind {
            LabelKind::Depth => 1.0 / v,
            LabelKind::Disparity => v,
        };
        if table.windows(2).any(|p| !(inverse(p[1]) > inverse(p[0]))) {
            return Err(Error::InvalidParameter(
                "label table must be strictly monotone in inverse depth".into(),
            ));
        }
        Ok(Self {
            height,
            width,
            labels,
            table,
            kind,
            lambda: 0.0,
            tau: 0.0,
        })
    }

    /// A rectified disparity map from integer disparities in `[min, max]`.
    pub fn from_disparities(height: usize, width: usize, disparities: &[i32], min: i32, max: i32) -> Result<Self> {
        let labels = disparities
            .iter()
            .map(|&d| {
                if d < min || d > max {
                    Err(Error::InvalidParameter(format!("disparity {d} outside [{min}, {max}]")))
                } else {
                    Ok((d - min) as u16)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(height, width, labels, (min..=max).map(f64::from).collect(), LabelKind::Disparity)
    }

    pub fn with_params(mut self, lambda: f64, tau: f64) -> Self {
        self.lambda = lambda;
        self.tau = tau;
        self
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn kind(&self) -> LabelKind {
        self.kind
    }

    pub fn label_count(&self) -> usize {
        self.table.len()
    }

    #[inline]
    pub fn label(&self, row: usize, col: usize) -> usize {
        self.labels[row * self.width + col] as usize
    }

    /// Depth (or disparity) value at a raster index.
    #[inline]
    pub fn value_at_index(&self, i: usize) -> f64 {
        self.table[self.labels[i] as usize]
    }

    /// Disparity `s / D` per pixel; for disparity maps `s` is ignored.
    pub fn disparities(&self, s: f64) -> Vec<f64> {
        (0..self.labels.len())
            .map(|i| match self.kind {
                LabelKind::Disparity => self.value_at_index(i),
                LabelKind::Depth => s / self.value_at_index(i),
            })
            .collect()
    }

    /// 8-bit visualization of `s / D`, stretched so the largest table value
    /// maps to 255.
    pub fn disparity_image(&self, s: f64) -> Image {
        let d = self.disparities(s);
        let max = match self.kind {
            LabelKind::Disparity => self.table.iter().cloned().fold(0.0, f64::max),
            LabelKind::Depth => self.table.iter().map(|&z| s / z).fold(0.0, f64::max),
        };
        let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
        Image::new(self.width, self.height, d.iter().map(|v| (v * scale).clamp(0.0, 255.0)).collect())
            .expect("finite disparities")
    }

    /// Write labels as 16-bit PGM plus a JSON sidecar next to it
    /// (`<path>.json`).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        crate::io::save_pgm16(self.width, self.height, &self.labels, path)?;
        let sidecar = DepthSidecar {
            label_table: self.table.clone(),
            kind: self.kind,
            lambda: self.lambda,
            tau: self.tau,
            label_count: self.table.len(),
        };
        let side = sidecar_path(path);
        std::fs::write(&side, serde_json::to_string_pretty(&sidecar)?).map_err(|e| Error::io(&side, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let (w, h, labels) = crate::io::load_pgm_raw(path)?;
        let side = sidecar_path(path);
        let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let meta: DepthSidecar = serde_json::from_str(&text)?;
        Ok(Self::new(h, w, labels, meta.label_table, meta.kind)?.with_params(meta.lambda, meta.tau))
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

/// Fraction of pixels (optionally restricted to `mask`) whose disparity
/// differs from the truth by more than `threshold`.
pub fn bad_pixel_rate(estimate: &[f64], truth: &[f64], mask: Option<&[bool]>, threshold: f64) -> f64 {
    let mut bad = 0usize;
    let mut total = 0usize;
    for (i, (e, t)) in estimate.iter().zip(truth).enumerate() {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        total += 1;
        if (e - t).abs() > threshold {
            bad += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        bad as f64 / total as f64
    }
}

/// Inputs to depth estimation: decoded views (reference first), geometry
/// and the smoothness parameters.
#[derive(Debug, Clone)]
pub struct DepthProblem {
    pub views: Vec<Image>,
    pub geometry: Geometry,
    pub lambda: f64,
    pub tau: f64,
    pub max_sweeps: usize,
}

pub const DEFAULT_LABELS: usize = 64;
pub const DEFAULT_MAX_SWEEPS: usize = 4;

impl DepthProblem {
    pub fn new(views: Vec<Image>, geometry: Geometry, lambda: f64, tau: f64) -> Result<Self> {
        let p = Self {
            views,
            geometry,
            lambda,
            tau,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.views.len() < 2 {
            return Err(Error::InvalidParameter("depth estimation needs at least two views".into()));
        }
        for v in &self.views[1..] {
            self.views[0].same_dims(v)?;
        }
        if self.geometry.view_count() != self.views.len() {
            return Err(Error::dims(
                format!("{} views in geometry", self.geometry.view_count()),
                format!("{} images", self.views.len()),
            ));
        }
        if !(self.lambda >= 0.0) || !(self.tau > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need lambda >= 0 and tau > 0 (got {}, {})",
                self.lambda, self.tau
            )));
        }
        if let Geometry::Calibrated {
            min_depth, max_depth, ..
        } = &self.geometry
        {
            if !(*min_depth > 0.0 && max_depth > min_depth) {
                return Err(Error::InvalidParameter("need 0 < min_depth < max_depth".into()));
            }
        }
        Ok(())
    }
}

/// Truncated-linear penalty on label indices.
#[inline]
pub fn smoothness_cost(a: usize, b: usize, tau: f64) -> f64 {
    (a.abs_diff(b) as f64).min(tau)
}

/// Data cost `C(p, l)` for every pixel and label, stored pixel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    height: usize,
    width: usize,
    labels: usize,
    costs: Vec<f64>,
}

impl CostVolume {
    pub fn from_costs(height: usize, width: usize, labels: usize, costs: Vec<f64>) -> Result<Self> {
        if costs.len() != height * width * labels {
            return Err(Error::dims(height * width * labels, costs.len()));
        }
        if costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::InvalidParameter("costs must be finite and non-negative".into()));
        }
        Ok(Self {
            height,
            width,
            labels,
            costs,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn cost(&self, pixel: usize, label: usize) -> f64 {
        self.costs[pixel * self.labels + label]
    }

    pub fn set_cost(&mut self, pixel: usize, label: usize, value: f64) {
        self.costs[pixel * self.labels + label] = value;
    }

    pub fn pixel_costs(&self, pixel: usize) -> &[f64] {
        &self.costs[pixel * self.labels..(pixel + 1) * self.labels]
    }
}

enum Transfer {
    Shift(Vec<i64>),
    Camera(PixelTransfer, Vec<f64>),
}

impl Transfer {
    fn project(&self, row: usize, col: usize, label: usize) -> Projection {
        match self {
            Transfer::Shift(shifts) => Projection::Pixel {
                row: row as i64,
                col: col as i64 - shifts[label],
            },
            Transfer::Camera(t, depths) => t.project(row, col, depths[label]),
        }
    }
}

fn transfers(geometry: &Geometry) -> Vec<Transfer> {
    let table = geometry.label_table();
    match geometry {
        Geometry::Rectified { scales, .. } => scales
            .iter()
            .map(|s| Transfer::Shift(table.iter().map(|d| (s * d).round() as i64).collect()))
            .collect(),
        Geometry::Calibrated { cameras, .. } => cameras[1..]
            .iter()
            .map(|c| Transfer::Camera(PixelTransfer::new(&cameras[0], c), table.clone()))
            .collect(),
    }
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Squared-difference data cost summed over the non-reference views.
///
/// Each reference pixel is transferred into view `j` with the label's
/// depth and compared with the value found there. Transfers that leave the
/// frame (or are degenerate) cost `tau * lambda` plus the median of that
/// pixel's in-frame costs for the same view.
pub fn build_cost_volume(problem: &DepthProblem) -> Result<CostVolume> {
    problem.validate()?;
    let reference = &problem.views[0];
    let (h, w) = reference.dims();
    let l = problem.geometry.label_count();
    let transfers = transfers(&problem.geometry);
    let base_penalty = problem.tau * problem.lambda;
    let mut costs = vec![0.0; h * w * l];
    costs.par_chunks_mut(w * l).enumerate().for_each(|(row, out)| {
        let mut finite = Vec::with_capacity(l);
        let mut view_cost = vec![None; l];
        for col in 0..w {
            let v1 = reference.get(row, col);
            let cell = &mut out[col * l..(col + 1) * l];
            for (view, transfer) in problem.views[1..].iter().zip(&transfers) {
                finite.clear();
                for (label, slot) in view_cost.iter_mut().enumerate() {
                    *slot = transfer.project(row, col, label).in_frame(h, w).map(|(r, c)| {
                        let d = view.get(r, c) - v1;
                        d * d
                    });
                    if let Some(c) = *slot {
                        finite.push(c);
                    }
                }
                let penalty = base_penalty + median(&mut finite);
                for (acc, slot) in cell.iter_mut().zip(&view_cost) {
                    *acc += slot.unwrap_or(penalty);
                }
            }
        }
    });
    CostVolume::from_costs(h, w, l, costs)
}

/// Estimate a depth field by alpha-expansion on the cost volume.
pub fn estimate_depth(problem: &DepthProblem) -> Result<DepthField> {
    Ok(estimate_depth_detailed(problem)?.0)
}

/// Like [`estimate_depth`], also returning the expansion trace.
pub fn estimate_depth_detailed(problem: &DepthProblem) -> Result<(DepthField, ExpansionOutcome)> {
    let volume = build_cost_volume(problem)?;
    let table = problem.geometry.label_table();
    if volume.labels() < 2 {
        log::warn!("fewer than two depth labels; returning the trivial labeling");
    }
    if volume.labels() == 0 {
        return Err(Error::InvalidParameter("no depth labels".into()));
    }
    let opts = ExpansionOptions {
        lambda: problem.lambda,
        tau: problem.tau,
        max_sweeps: problem.max_sweeps,
    };
    let outcome = alpha_expansion(&volume, &opts);
    log::debug!(
        "alpha-expansion: {} sweeps, energy {:.1} -> {:.1}",
        outcome.sweeps,
        outcome.move_energies[0],
        outcome.energy
    );
    let labels = outcome.labels.iter().map(|&l| l as u16).collect();
    let field = DepthField::new(volume.height(), volume.width(), labels, table, problem.geometry.kind())?
        .with_params(problem.lambda, problem.tau);
    Ok((field, outcome))
}
