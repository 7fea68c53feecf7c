//! Pinhole camera parameters and pixel transfer between calibrated views.
//!
//! A pixel `(row, col)` is lifted with the homogeneous vector
//! `[row, col, 1]`, i.e. the first image coordinate pairs with the row
//! index. Camera files must use the same convention.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Condition numbers above this are treated as singular.
const MAX_CONDITION: f64 = 1e12;

/// Projections with `z'` at or below this are degenerate.
const Z_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CameraParams {
    intrinsic: Matrix3<f64>,
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
    intrinsic_inv: Matrix3<f64>,
    rotation_inv: Matrix3<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CameraFile {
    #[serde(rename = "P")]
    p: [f64; 9],
    #[serde(rename = "R")]
    r: [f64; 9],
    #[serde(rename = "T")]
    t: [f64; 3],
}

fn invert_checked(m: &Matrix3<f64>, what: &str) -> Result<Matrix3<f64>> {
    let svd = m.svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 0.0 && smax / smin < MAX_CONDITION) {
        return Err(Error::InvalidParameter(format!("{what} matrix is singular")));
    }
    m.try_inverse()
        .ok_or_else(|| Error::InvalidParameter(format!("{what} matrix is singular")))
}

impl CameraParams {
    pub fn new(intrinsic: Matrix3<f64>, rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let all_finite = intrinsic.iter().chain(rotation.iter()).chain(translation.iter()).all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidParameter("camera parameters must be finite".into()));
        }
        let intrinsic_inv = invert_checked(&intrinsic, "intrinsic")?;
        let rotation_inv = invert_checked(&rotation, "rotation")?;
        Ok(Self {
            intrinsic,
            rotation,
            translation,
            intrinsic_inv,
            rotation_inv,
        })
    }

    /// Camera with intrinsic `diag(focal, focal, 1)`, identity rotation and
    /// the given translation.
    pub fn simple(focal: f64, translation: Vector3<f64>) -> Result<Self> {
        Self::new(
            Matrix3::from_diagonal(&Vector3::new(focal, focal, 1.0)),
            Matrix3::identity(),
            translation,
        )
    }

    pub fn intrinsic(&self) -> &Matrix3<f64> {
        &self.intrinsic
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: CameraFile = serde_json::from_str(text)?;
        Self::new(
            Matrix3::from_row_slice(&f.p),
            Matrix3::from_row_slice(&f.r),
            Vector3::from_column_slice(&f.t),
        )
    }

    pub fn to_json(&self) -> String {
        let row_major = |m: &Matrix3<f64>| {
            let mut a = [0.0; 9];
            for r in 0..3 {
                for c in 0..3 {
                    a[r * 3 + c] = m[(r, c)];
                }
            }
            a
        };
        let f = CameraFile {
            p: row_major(&self.intrinsic),
            r: row_major(&self.rotation),
            t: [self.translation.x, self.translation.y, self.translation.z],
        };
        serde_json::to_string_pretty(&f).expect("camera serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Outcome of transferring one pixel into another view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    Pixel { row: i64, col: i64 },
    Degenerate,
}

impl Projection {
    /// The destination if it lies inside a `height x width` frame.
    pub fn in_frame(self, height: usize, width: usize) -> Option<(usize, usize)> {
        match self {
            Projection::Pixel { row, col }
                if row >= 0 && col >= 0 && (row as usize) < height && (col as usize) < width =>
            {
                Some((row as usize, col as usize))
            }
            _ => None,
        }
    }
}

/// Precomputed transfer from a source camera to a destination camera.
///
/// Lifting and re-projection compose into `x' = depth * K [m, n, 1]^T + c`
/// with `K = P2 R2^-1 R1 P1^-1` and `c = P2 R2^-1 (T1 - T2)`.
#[derive(Debug, Clone)]
pub struct PixelTransfer {
    k: Matrix3<f64>,
    c: Vector3<f64>,
}

impl PixelTransfer {
    pub fn new(src: &CameraParams, dst: &CameraParams) -> Self {
        let back = dst.intrinsic * dst.rotation_inv;
        Self {
            k: back * src.rotation * src.intrinsic_inv,
            c: back * (src.translation - dst.translation),
        }
    }

    pub fn project(&self, row: usize, col: usize, depth: f64) -> Projection {
        let h = Vector3::new(row as f64, col as f64, 1.0);
        let x = self.k * h * depth + self.c;
        if !(x.z > Z_TOLERANCE) || !x.x.is_finite() || !x.y.is_finite() {
            return Projection::Degenerate;
        }
        Projection::Pixel {
            row: (x.x / x.z).round() as i64,
            col: (x.y / x.z).round() as i64,
        }
    }
}

/// Transfer `(row, col)` at `depth` from `src` into `dst`.
pub fn project_pixel(
    pixel: (usize, usize),
    depth: f64,
    src: &CameraParams,
    dst: &CameraParams,
) -> Result<Projection> {
    if !(depth > 0.0) {
        return Err(Error::InvalidParameter(format!("depth must be positive, got {depth}")));
    }
    Ok(PixelTransfer::new(src, dst).project(pixel.0, pixel.1, depth))
}
