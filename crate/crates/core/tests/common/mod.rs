//! Independent reference implementations shared by the integration tests.
//! None of them call the code paths they check.

#![allow(dead_code)]

use mvjoint::depth::{smoothness_cost, CostVolume};
use mvjoint::image::Image;
use mvjoint::warp::MotionField;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_image(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Image {
    Image::from_fn(w, h, |_, _| rng.gen_range(0.0..255.0))
}

pub fn random_motion(rng: &mut ChaCha8Rng, h: usize, w: usize, reach: i32) -> MotionField {
    let n = h * w;
    MotionField::new(
        h,
        w,
        (0..n).map(|_| rng.gen_range(-reach..=reach)).collect(),
        (0..n).map(|_| rng.gen_range(-reach..=reach)).collect(),
    )
    .unwrap()
}

/// Forward warping done pixel by pixel in image coordinates: every source
/// pixel, in raster order, paints its destination; unpainted pixels stay 0.
pub fn forward_warp(image: &Image, motion: &MotionField) -> Image {
    let (h, w) = (image.height(), image.width());
    let mut out = Image::filled(w, h, 0.0);
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let dr = r as i64 + motion.vertical()[i] as i64;
            let dc = c as i64 + motion.horizontal()[i] as i64;
            if motion.is_valid(r, c) && (0..h as i64).contains(&dr) && (0..w as i64).contains(&dc) {
                out.set(dr as usize, dc as usize, image.get(r, c));
            }
        }
    }
    out
}

/// Dense matrix of a linear map probed on the standard basis.
pub fn dense_from_fn(n_in: usize, n_out: usize, apply: impl Fn(&[f64]) -> Vec<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n_out, n_in);
    let mut e = vec![0.0; n_in];
    for j in 0..n_in {
        e[j] = 1.0;
        let col = apply(&e);
        for (i, v) in col.iter().enumerate() {
            m[(i, j)] = *v;
        }
        e[j] = 0.0;
    }
    m
}

/// Exhaustive minimum of the truncated-linear labeling energy.
pub fn brute_force_energy(vol: &CostVolume, lambda: f64, tau: f64) -> f64 {
    let (h, w, l) = (vol.height(), vol.width(), vol.labels());
    let n = h * w;
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let mut e = 0.0;
        for r in 0..h {
            for c in 0..w {
                let p = r * w + c;
                e += vol.cost(p, labels[p]);
                if c + 1 < w {
                    e += lambda * smoothness_cost(labels[p], labels[p + 1], tau);
                }
                if r + 1 < h {
                    e += lambda * smoothness_cost(labels[p], labels[p + w], tau);
                }
            }
        }
        best = best.min(e);
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            labels[i] += 1;
            if labels[i] < l {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

/// Projection of `x` onto `{z : ||B z - c|| <= r}` from the optimality
/// conditions: `z(mu) = (I + mu B^T B)^-1 (x + mu B^T c)`, with the
/// multiplier `mu >= 0` found by bisection on `||B z(mu) - c|| = r`.
pub fn project_affine_ball(x: &[f64], b: &DMatrix<f64>, c: &[f64], r: f64) -> Vec<f64> {
    let n = x.len();
    let xv = DVector::from_column_slice(x);
    let cv = DVector::from_column_slice(c);
    let btb = b.transpose() * b;
    let btc = b.transpose() * &cv;
    let z_of = |mu: f64| -> DVector<f64> {
        let m = DMatrix::identity(n, n) + &btb * mu;
        m.lu().solve(&(&xv + &btc * mu)).expect("positive definite")
    };
    let dist = |z: &DVector<f64>| (b * z - &cv).norm();
    if dist(&xv) <= r {
        return x.to_vec();
    }
    let mut hi = 1.0;
    while dist(&z_of(hi)) > r {
        hi *= 2.0;
        assert!(hi < 1e30, "empty constraint set");
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dist(&z_of(mid)) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    z_of(hi).as_slice().to_vec()
}

/// Isotropic TV with forward differences, written from its definition.
pub fn tv(u: &[f64], h: usize, w: usize) -> f64 {
    let at = |r: usize, c: usize| u[r * w + c];
    let mut sum = 0.0;
    for r in 0..h {
        for c in 0..w {
            let dx = if c + 1 < w { at(r, c + 1) - at(r, c) } else { 0.0 };
            let dy = if r + 1 < h { at(r + 1, c) - at(r, c) } else { 0.0 };
            sum += (dx * dx + dy * dy).sqrt();
        }
    }
    sum
}

/// A subgradient of [`tv`].
pub fn tv_subgradient(u: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut g = vec![0.0; u.len()];
    for r in 0..h {
        for c in 0..w {
            let p = r * w + c;
            let dx = if c + 1 < w { u[p + 1] - u[p] } else { 0.0 };
            let dy = if r + 1 < h { u[p + w] - u[p] } else { 0.0 };
            let n = (dx * dx + dy * dy).sqrt();
            if n < 1e-12 {
                continue;
            }
            if c + 1 < w {
                g[p + 1] += dx / n;
                g[p] -= dx / n;
            }
            if r + 1 < h {
                g[p + w] += dy / n;
                g[p] -= dy / n;
            }
        }
    }
    g
}

/// A two-view problem in dense form: minimize `tv(x1) + tv(x2)` subject to
/// `||x_j - y_j|| <= fid_radius` and `||H x||^2 <= corr_radius_sq`.
pub struct DenseToy {
    pub h: usize,
    pub w: usize,
    pub y: Vec<f64>,
    pub hmat: DMatrix<f64>,
    pub fid_radius: f64,
    pub corr_radius_sq: f64,
}

impl DenseToy {
    pub fn objective(&self, x: &[f64]) -> f64 {
        let n = self.h * self.w;
        tv(&x[..n], self.h, self.w) + tv(&x[n..], self.h, self.w)
    }

    pub fn correlation(&self, x: &[f64]) -> f64 {
        (&self.hmat * DVector::from_column_slice(x)).norm_squared()
    }

    pub fn fidelity(&self, x: &[f64], j: usize) -> f64 {
        let n = self.h * self.w;
        x[j * n..(j + 1) * n]
            .iter()
            .zip(&self.y[j * n..(j + 1) * n])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Switching subgradient method: step on the correlation constraint
    /// when it is violated, on the objective otherwise, with normalized
    /// steps `scale / sqrt(k + 1)`; the fidelity balls are kept by exact
    /// projection. Returns the best objective among iterates that satisfy
    /// the correlation constraint within a relative `1e-9`.
    pub fn switching_subgradient(&self, iterations: usize, scale: f64) -> f64 {
        let n = self.h * self.w;
        let mut x = self.y.clone();
        let hth = self.hmat.transpose() * &self.hmat;
        let mut best = f64::INFINITY;
        for k in 0..iterations {
            let xv = DVector::from_column_slice(&x);
            let corr = (&self.hmat * &xv).norm_squared();
            let g: Vec<f64> = if corr <= self.corr_radius_sq * (1.0 + 1e-9) {
                best = best.min(self.objective(&x));
                let mut g = tv_subgradient(&x[..n], self.h, self.w);
                g.extend(tv_subgradient(&x[n..], self.h, self.w));
                g
            } else {
                (&hth * xv * 2.0).as_slice().to_vec()
            };
            let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if gn > 0.0 {
                let step = scale / ((k + 1) as f64).sqrt() / gn;
                x.iter_mut().zip(&g).for_each(|(a, b)| *a -= step * b);
            }
            for j in 0..2 {
                let d = self.fidelity(&x, j);
                if d > self.fid_radius {
                    let s = self.fid_radius / d;
                    for i in j * n..(j + 1) * n {
                        x[i] = self.y[i] + s * (x[i] - self.y[i]);
                    }
                }
            }
        }
        best
    }
}

/// Delta rate from its definition, with different numerics: log-rate as the
/// Lagrange interpolant through four points, integrated by composite
/// Simpson.
pub fn bd_rate_simpson(reference: &[(f64, f64)], test: &[(f64, f64)]) -> f64 {
    let lagrange = |pts: &[(f64, f64)], q: f64| -> f64 {
        let mut sum = 0.0;
        for (i, &(ri, qi)) in pts.iter().enumerate() {
            let mut l = 1.0;
            for (j, &(_, qj)) in pts.iter().enumerate() {
                if i != j {
                    l *= (q - qj) / (qi - qj);
                }
            }
            sum += ri.log10() * l;
        }
        sum
    };
    let range = |pts: &[(f64, f64)]| {
        pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)))
    };
    let (r0, r1) = range(reference);
    let (t0, t1) = range(test);
    let (lo, hi) = (r0.max(t0), r1.min(t1));
    let steps = 2000;
    let h = (hi - lo) / steps as f64;
    let f = |q: f64| lagrange(test, q) - lagrange(reference, q);
    let mut s = f(lo) + f(hi);
    for k in 1..steps {
        s += f(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    let mean = s * h / 3.0 / (hi - lo);
    (10f64.powf(mean) - 1.0) * 100.0
}
