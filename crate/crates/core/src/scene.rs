//! Synthetic rectified scenes with exact ground truth.
//!
//! View `k` (0 is the reference) sees a reference pixel with disparity `d`
//! at column `col - k * d`. Textures are smooth value noise with a few
//! constant patches, defined on an extended column range so every view is
//! fully covered.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::depth::{DepthField, Geometry};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::warp::{build_operator, MotionField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneKind {
    /// One fronto-parallel plane at disparity `shift`.
    TranslatedPlane,
    /// Background at `shift`, a centered square at `foreground_shift`.
    TwoPlaneOcclusion,
    /// Disparity grows in bands from `shift` (top) to `foreground_shift`
    /// (bottom).
    TexturedRamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub kind: SceneKind,
    pub width: usize,
    pub height: usize,
    #[serde(default = "default_views")]
    pub views: usize,
    pub shift: i32,
    #[serde(default)]
    pub foreground_shift: i32,
    #[serde(default)]
    pub seed: u64,
}

fn default_views() -> usize {
    2
}

impl SceneSpec {
    pub fn new(kind: SceneKind, width: usize, height: usize, shift: i32, foreground_shift: i32, seed: u64) -> Self {
        Self {
            kind,
            width,
            height,
            views: 2,
            shift,
            foreground_shift,
            seed,
        }
    }

    pub fn with_views(mut self, views: usize) -> Self {
        self.views = views;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 8 || self.height < 8 {
            return Err(Error::InvalidParameter("scene must be at least 8x8".into()));
        }
        if self.views < 2 {
            return Err(Error::InvalidParameter("scene needs at least two views".into()));
        }
        if self.shift < 0 || self.foreground_shift < 0 {
            return Err(Error::InvalidParameter("shifts must be non-negative".into()));
        }
        let max = self.shift.max(self.foreground_shift) as usize * (self.views - 1);
        if max >= self.width {
            return Err(Error::InvalidParameter("shifts exceed the image width".into()));
        }
        Ok(())
    }
}

/// Generated views plus ground truth.
#[derive(Debug, Clone)]
pub struct Scene {
    pub spec: SceneSpec,
    pub views: Vec<Image>,
    /// Reference-view disparity per pixel.
    pub disparity: Vec<i32>,
    /// Hole masks of the forward warp into each non-reference view
    /// (`true` = hole).
    pub holes: Vec<Vec<bool>>,
}

impl Scene {
    pub fn min_disparity(&self) -> i32 {
        *self.disparity.iter().min().expect("nonempty scene")
    }

    pub fn max_disparity(&self) -> i32 {
        *self.disparity.iter().max().expect("nonempty scene")
    }

    /// Rectified rig with view `k` at baseline `k`, searching disparities
    /// in `[min, max]`.
    pub fn geometry(&self, min: i32, max: i32) -> Geometry {
        Geometry::Rectified {
            min_disparity: min,
            max_disparity: max,
            scales: (1..self.views.len()).map(|k| k as f64).collect(),
        }
    }

    /// Ground truth as a disparity field over the label range `[min, max]`.
    pub fn truth_field(&self, min: i32, max: i32) -> Result<DepthField> {
        DepthField::from_disparities(self.spec.height, self.spec.width, &self.disparity, min, max)
    }

    /// Reference pixels that stay visible in non-reference view `target`
    /// (0-based among the non-reference views) under the true disparity.
    pub fn non_occluded(&self, target: usize) -> Vec<bool> {
        let (op, _) = build_operator(&self.true_motion(target));
        let mut used = vec![false; op.size()];
        for (_, c) in op.entries() {
            used[c] = true;
        }
        used
    }

    pub fn true_motion(&self, target: usize) -> MotionField {
        let (h, w) = (self.spec.height, self.spec.width);
        let k = (target + 1) as i32;
        MotionField::new(h, w, self.disparity.iter().map(|d| -k * d).collect(), vec![0; h * w])
            .expect("consistent dimensions")
    }

    pub fn hole_image(&self, target: usize) -> Image {
        Image::new(
            self.spec.width,
            self.spec.height,
            self.holes[target].iter().map(|&h| if h { 255.0 } else { 0.0 }).collect(),
        )
        .expect("finite mask")
    }

    pub fn disparity_image(&self) -> Image {
        let max = self.max_disparity().max(1) as f64;
        Image::new(
            self.spec.width,
            self.spec.height,
            self.disparity.iter().map(|&d| d as f64 * 255.0 / max).collect(),
        )
        .expect("finite disparity")
    }
}

/// Smooth value noise plus constant rectangles over columns
/// `[-margin, width + margin)`.
struct Texture {
    rows: usize,
    margin: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Texture {
    fn new(rng: &mut ChaCha8Rng, rows: usize, width: usize, margin: usize, base: f64) -> Self {
        let cols = width + 2 * margin;
        let mut values = vec![base; rows * cols];
        for (cell, amp) in [(16usize, 55.0), (6, 30.0), (3, 12.0)] {
            let lr = rows / cell + 2;
            let lc = cols / cell + 2;
            let lattice: Vec<f64> = (0..lr * lc).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for r in 0..rows {
                let fr = r as f64 / cell as f64;
                let (r0, tr) = (fr.floor() as usize, smooth(fr.fract()));
                for c in 0..cols {
                    let fc = c as f64 / cell as f64;
                    let (c0, tc) = (fc.floor() as usize, smooth(fc.fract()));
                    let at = |i: usize, j: usize| lattice[i * lc + j];
                    let top = at(r0, c0) * (1.0 - tc) + at(r0, c0 + 1) * tc;
                    let bottom = at(r0 + 1, c0) * (1.0 - tc) + at(r0 + 1, c0 + 1) * tc;
                    values[r * cols + c] += amp * (top * (1.0 - tr) + bottom * tr);
                }
            }
        }
        let patches = rows * cols / 256;
        for _ in 0..patches {
            let h = rng.gen_range(3..=rows.clamp(4, 12));
            let w = rng.gen_range(3..=12usize);
            let r0 = rng.gen_range(0..rows);
            let c0 = rng.gen_range(0..cols);
            let offset = rng.gen_range(-50.0..50.0);
            for r in r0..(r0 + h).min(rows) {
                for c in c0..(c0 + w).min(cols) {
                    values[r * cols + c] += offset;
                }
            }
        }
        values.iter_mut().for_each(|v| *v = v.clamp(0.0, 255.0));
        Self {
            rows,
            margin,
            cols,
            values,
        }
    }

    /// Value at row `r`, reference column `u` (may be negative).
    fn at(&self, r: usize, u: i64) -> f64 {
        let c = (u + self.margin as i64).clamp(0, self.cols as i64 - 1) as usize;
        self.values[r.min(self.rows - 1) * self.cols + c]
    }
}

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Render a scene from its spec. Same spec, same pixels.
pub fn generate(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let (h, w) = (spec.height, spec.width);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let margin = spec.shift.max(spec.foreground_shift) as usize * spec.views + 8;
    let background = Texture::new(&mut rng, h, w, margin, 110.0);
    let foreground = Texture::new(&mut rng, h, w, margin, 150.0);

    let square_rows = h / 4..h - h / 4;
    let square_cols = w / 4..w - w / 4;
    let in_square = |r: usize, u: i64| square_rows.contains(&r) && u >= square_cols.start as i64 && u < square_cols.end as i64;
    let ramp = |r: usize| -> i32 {
        let bands = (spec.foreground_shift - spec.shift).abs() + 1;
        let band = (r * bands as usize / h) as i32;
        if spec.foreground_shift >= spec.shift {
            spec.shift + band
        } else {
            spec.shift - band
        }
    };

    let mut disparity = vec![0; h * w];
    for r in 0..h {
        for c in 0..w {
            disparity[r * w + c] = match spec.kind {
                SceneKind::TranslatedPlane => spec.shift,
                SceneKind::TwoPlaneOcclusion if in_square(r, c as i64) => spec.foreground_shift,
                SceneKind::TwoPlaneOcclusion => spec.shift,
                SceneKind::TexturedRamp => ramp(r),
            };
        }
    }

    let views = (0..spec.views)
        .map(|k| {
            let k = k as i64;
            Image::from_fn(w, h, |r, c| {
                let c = c as i64;
                match spec.kind {
                    SceneKind::TranslatedPlane => background.at(r, c + k * spec.shift as i64),
                    SceneKind::TwoPlaneOcclusion => {
                        let u = c + k * spec.foreground_shift as i64;
                        if in_square(r, u) {
                            foreground.at(r, u)
                        } else {
                            background.at(r, c + k * spec.shift as i64)
                        }
                    }
                    SceneKind::TexturedRamp => background.at(r, c + k * ramp(r) as i64),
                }
            })
        })
        .collect();

    let mut scene = Scene {
        spec: spec.clone(),
        views,
        disparity,
        holes: Vec::new(),
    };
    scene.holes = (0..spec.views - 1)
        .map(|t| {
            let (op, _) = build_operator(&scene.true_motion(t));
            let mut holes = vec![false; op.size()];
            for &r in op.hole_rows() {
                holes[r] = true;
            }
            holes
        })
        .collect();
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_shift_gives_identical_views() {
        let s = generate(&SceneSpec::new(SceneKind::TranslatedPlane, 16, 12, 0, 0, 3).with_views(3)).unwrap();
        assert_eq!(s.views[0], s.views[1]);
        assert_eq!(s.views[0], s.views[2]);
        assert!(s.holes.iter().all(|h| h.iter().all(|&x| !x)));
    }

    #[test]
    fn translated_plane_is_a_shift() {
        let s = generate(&SceneSpec::new(SceneKind::TranslatedPlane, 20, 10, 3, 0, 1)).unwrap();
        for r in 0..10 {
            for c in 3..20 {
                assert_eq!(s.views[1].get(r, c - 3), s.views[0].get(r, c));
            }
        }
        // the last three columns of view 2 receive nothing
        let hole_cols: Vec<usize> = (0..20).filter(|&c| s.holes[0][c]).collect();
        assert_eq!(hole_cols, vec![17, 18, 19]);
    }

    #[test]
    fn occlusion_strip_width_is_shift_difference() {
        let spec = SceneSpec::new(SceneKind::TwoPlaneOcclusion, 64, 64, 1, 4, 9);
        let s = generate(&spec).unwrap();
        // interior holes on a row through the square, ignoring the frame border
        let r = 32;
        let interior: Vec<usize> = (0..63).filter(|&c| s.holes[0][r * 64 + c]).collect();
        assert_eq!(interior.len(), 3);
        assert_eq!(interior, vec![44, 45, 46]);
        // rows outside the square only have the border hole
        assert_eq!((0..64).filter(|&c| s.holes[0][5 * 64 + c]).count(), 1);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SceneSpec::new(SceneKind::TexturedRamp, 24, 16, 1, 3, 42);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.views, b.views);
        assert_eq!(a.disparity, b.disparity);
        let c = generate(&SceneSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a.views, c.views);
    }

    #[test]
    fn ramp_rows_are_uniform_shifts() {
        let s = generate(&SceneSpec::new(SceneKind::TexturedRamp, 32, 16, 1, 3, 5)).unwrap();
        assert_eq!(s.min_disparity(), 1);
        assert_eq!(s.max_disparity(), 3);
        for r in 0..16 {
            let d = s.disparity[r * 32] as usize;
            for c in d..32 {
                assert_eq!(s.views[1].get(r, c - d), s.views[0].get(r, c));
            }
        }
    }

    #[test]
    fn scene_spec_parses_from_json() {
        let spec: SceneSpec = serde_json::from_str(
            r#"{"kind": "two-plane-occlusion", "width": 32, "height": 32, "shift": 1, "foreground_shift": 4}"#,
        )
        .unwrap();
        assert_eq!(spec.kind, SceneKind::TwoPlaneOcclusion);
        assert_eq!(spec.views, 2);
        assert!(SceneSpec { width: 4, ..spec }.validate().is_err());
    }
}
