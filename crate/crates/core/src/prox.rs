//! Proximity operators: isotropic TV (Chambolle), l2-ball projection, and
//! the indicator of a ball composed with a selector or a general linear map.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::linop::{dot, norm, LinearOperator};

/// Parameters of Chambolle's dual projection iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvConfig {
    pub inner_iterations: usize,
    pub dual_step: f64,
}

impl Default for TvConfig {
    fn default() -> Self {
        Self {
            inner_iterations: 30,
            dual_step: 0.248,
        }
    }
}

impl TvConfig {
    pub fn new(inner_iterations: usize, dual_step: f64) -> Result<Self> {
        if !(dual_step > 0.0 && dual_step <= 0.25) {
            return Err(Error::InvalidParameter(format!("dual step {dual_step} outside (0, 0.25]")));
        }
        Ok(Self {
            inner_iterations,
            dual_step,
        })
    }
}

/// Forward differences with a zero difference past the last row / column.
fn gradient(u: &[f64], h: usize, w: usize, gx: &mut [f64], gy: &mut [f64]) {
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            gx[i] = if c + 1 < w { u[i + 1] - u[i] } else { 0.0 };
            gy[i] = if r + 1 < h { u[i + w] - u[i] } else { 0.0 };
        }
    }
}

/// Negative adjoint of [`gradient`].
fn divergence(px: &[f64], py: &[f64], h: usize, w: usize, out: &mut [f64]) {
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let mut d = 0.0;
            if c + 1 < w {
                d += px[i];
            }
            if c > 0 {
                d -= px[i - 1];
            }
            if r + 1 < h {
                d += py[i];
            }
            if r > 0 {
                d -= py[i - w];
            }
            out[i] = d;
        }
    }
}

/// Isotropic total variation of a row-major `h x w` array.
pub fn tv_norm_slice(u: &[f64], h: usize, w: usize) -> f64 {
    let mut total = 0.0;
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let dx = if c + 1 < w { u[i + 1] - u[i] } else { 0.0 };
            let dy = if r + 1 < h { u[i + w] - u[i] } else { 0.0 };
            total += dx.hypot(dy);
        }
    }
    total
}

pub fn tv_norm(image: &Image) -> f64 {
    tv_norm_slice(image.as_slice(), image.height(), image.width())
}

/// Dual field of Chambolle's iteration, kept between calls for warm starts.
#[derive(Debug, Clone, PartialEq)]
pub struct TvDual {
    px: Vec<f64>,
    py: Vec<f64>,
}

impl TvDual {
    pub fn zeros(len: usize) -> Self {
        Self {
            px: vec![0.0; len],
            py: vec![0.0; len],
        }
    }
}

/// `argmin_z weight * TV(z) + 0.5 * ||z - x||^2` for an image.
pub fn prox_tv(x: &Image, weight: f64, config: &TvConfig) -> Image {
    let mut dual = TvDual::zeros(x.as_slice().len());
    let out = prox_tv_warm(x.as_slice(), x.height(), x.width(), weight, config, &mut dual);
    Image::new(x.width(), x.height(), out).expect("prox output is finite")
}

/// [`prox_tv`] on a raw `h x w` array, starting from (and updating) `dual`.
pub fn prox_tv_warm(x: &[f64], h: usize, w: usize, weight: f64, config: &TvConfig, dual: &mut TvDual) -> Vec<f64> {
    let n = h * w;
    assert_eq!(x.len(), n, "prox_tv: length mismatch");
    if weight <= 0.0 {
        return x.to_vec();
    }
    let tau = config.dual_step;
    let mut div = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    let inv = 1.0 / weight;
    for _ in 0..config.inner_iterations {
        divergence(&dual.px, &dual.py, h, w, &mut div);
        for i in 0..n {
            g[i] = div[i] - x[i] * inv;
        }
        gradient(&g, h, w, &mut gx, &mut gy);
        for i in 0..n {
            let mag = gx[i].hypot(gy[i]);
            let denom = 1.0 + tau * mag;
            dual.px[i] = (dual.px[i] + tau * gx[i]) / denom;
            dual.py[i] = (dual.py[i] + tau * gy[i]) / denom;
        }
    }
    divergence(&dual.px, &dual.py, h, w, &mut div);
    x.iter().zip(&div).map(|(xi, d)| xi - weight * d).collect()
}

/// Euclidean projection onto the centered ball of the given radius.
pub fn project_ball(y: &[f64], radius: f64) -> Vec<f64> {
    let mut out = y.to_vec();
    project_ball_in_place(&mut out, radius);
    out
}

pub fn project_ball_in_place(y: &mut [f64], radius: f64) {
    let n = norm(y);
    if n > radius {
        y.iter_mut().for_each(|v| *v = radius * *v / n);
    }
}

/// Projection of a stacked vector onto `{X : ||X_j - Y_j|| <= radius}`,
/// where block `j` has length `block_len`. Only block `j` moves.
pub fn prox_selector_ball(x: &[f64], block: usize, block_len: usize, center: &[f64], radius: f64) -> Vec<f64> {
    let mut out = x.to_vec();
    prox_selector_ball_in_place(&mut out, block, block_len, center, radius);
    out
}

pub fn prox_selector_ball_in_place(x: &mut [f64], block: usize, block_len: usize, center: &[f64], radius: f64) {
    let range = block * block_len..(block + 1) * block_len;
    let xs = &mut x[range.clone()];
    let ys = &center[range];
    let dist = xs.iter().zip(ys).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if dist > radius {
        let s = radius / dist;
        for (a, b) in xs.iter_mut().zip(ys) {
            *a = b + s * (*a - b);
        }
    }
}

/// Frame constants `gamma1 I <= B B* <= gamma2 I`.
///
/// `range_gamma1` is the smallest nonzero eigenvalue of `B B*`, i.e. the
/// lower bound on the range of `B`, where the dual iterates of
/// [`prox_affine_ball`] live. It sets the step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameBounds {
    pub gamma1: f64,
    pub gamma2: f64,
    pub range_gamma1: f64,
}

impl FrameBounds {
    pub fn new(gamma1: f64, gamma2: f64) -> Result<Self> {
        if !(gamma1 >= 0.0 && gamma2 > 0.0 && gamma1 <= gamma2) {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= gamma1 <= gamma2, gamma2 > 0 (got {gamma1}, {gamma2})"
            )));
        }
        Ok(Self {
            gamma1,
            gamma2,
            range_gamma1: gamma1,
        })
    }

    /// Dual step `2 / (range_gamma1 + gamma2)`.
    pub fn step(&self) -> f64 {
        2.0 / (self.range_gamma1 + self.gamma2)
    }
}

const POWER_ITERATIONS: usize = 100;
const LANCZOS_STEPS: usize = 60;
const FRAME_SEED: u64 = 0x5eed_f4a3;
const GAMMA2_FLOOR: f64 = 1e-12;

fn random_unit(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n = norm(&v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

fn gram_apply<B: LinearOperator + ?Sized>(op: &B, v: &[f64], tmp: &mut [f64], out: &mut [f64]) {
    op.apply_adjoint(v, tmp);
    op.apply(tmp, out);
}

/// Frame bounds of `B`: `gamma2` is 1.01 times a 100-step power-iteration
/// estimate of the largest eigenvalue of `B B*`; `gamma1` is reported as 0.
/// `range_gamma1` comes from a Lanczos run started inside the range of `B`.
pub fn estimate_frame_bounds<B: LinearOperator + ?Sized>(op: &B) -> FrameBounds {
    let (m, n) = (op.output_len(), op.input_len());
    let mut rng = ChaCha8Rng::seed_from_u64(FRAME_SEED);
    let mut tmp = vec![0.0; n];
    let mut v = random_unit(&mut rng, m);
    let mut next = vec![0.0; m];
    let mut lambda = 0.0;
    for _ in 0..POWER_ITERATIONS {
        gram_apply(op, &v, &mut tmp, &mut next);
        lambda = dot(&v, &next);
        let nn = norm(&next);
        if nn == 0.0 {
            break;
        }
        v.iter_mut().zip(&next).for_each(|(a, b)| *a = b / nn);
    }
    let gamma2 = (1.01 * lambda).max(GAMMA2_FLOOR);
    let range = lanczos_range_lower(op, &mut rng, gamma2).unwrap_or(0.0).min(gamma2);
    FrameBounds {
        gamma1: 0.0,
        gamma2,
        range_gamma1: range,
    }
}

/// Smallest Ritz value of `B B*` above `1e-8 * scale` from a Lanczos run
/// with full reorthogonalization, started at `B r` for random `r`.
fn lanczos_range_lower<B: LinearOperator + ?Sized>(op: &B, rng: &mut ChaCha8Rng, scale: f64) -> Option<f64> {
    let (m, n) = (op.output_len(), op.input_len());
    let r = random_unit(rng, n);
    let mut q = op.apply_vec(&r);
    let q_norm = norm(&q);
    if q_norm == 0.0 {
        return None;
    }
    q.iter_mut().for_each(|x| *x /= q_norm);
    let steps = LANCZOS_STEPS.min(m);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut alphas = Vec::with_capacity(steps);
    let mut betas: Vec<f64> = Vec::with_capacity(steps);
    let mut tmp = vec![0.0; n];
    let mut w = vec![0.0; m];
    basis.push(q);
    for k in 0..steps {
        gram_apply(op, &basis[k], &mut tmp, &mut w);
        let a = dot(&w, &basis[k]);
        alphas.push(a);
        // full reorthogonalization, twice for stability
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let beta = norm(&w);
        if k + 1 == steps || beta <= 1e-10 * scale {
            break;
        }
        betas.push(beta);
        basis.push(w.iter().map(|x| x / beta).collect());
    }
    let k = alphas.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    SymmetricEigen::new(t)
        .eigenvalues
        .iter()
        .cloned()
        .filter(|&l| l > 1e-8 * scale)
        .min_by(|a, b| a.total_cmp(b))
}

/// Projection of `x` onto `{z : ||B z||^2 <= radius_sq}` by the dual
/// iteration
///
/// ```text
/// u <- mu (v - P(v)),  v = u / mu + B p
/// p <- x - B* u
/// ```
///
/// with `P` the projection onto the ball of radius `sqrt(radius_sq)` and
/// `mu = bounds.step()`, starting from `u = 0`.
pub fn prox_affine_ball<B: LinearOperator + ?Sized>(
    x: &[f64],
    op: &B,
    radius_sq: f64,
    bounds: &FrameBounds,
    iterations: usize,
) -> Vec<f64> {
    let mut dual = vec![0.0; op.output_len()];
    prox_affine_ball_warm(x, op, radius_sq, bounds, iterations, &mut dual, |_| {})
}

/// [`prox_affine_ball`] starting from the dual point `dual` (updated in
/// place); `observe` sees the primal point after every iteration.
pub fn prox_affine_ball_warm<B: LinearOperator + ?Sized>(
    x: &[f64],
    op: &B,
    radius_sq: f64,
    bounds: &FrameBounds,
    iterations: usize,
    dual: &mut [f64],
    mut observe: impl FnMut(&[f64]),
) -> Vec<f64> {
    let (m, n) = (op.output_len(), op.input_len());
    assert_eq!(x.len(), n, "prox_affine_ball: length mismatch");
    assert_eq!(dual.len(), m, "prox_affine_ball: dual length mismatch");
    let radius = radius_sq.max(0.0).sqrt();
    let mu = bounds.step();
    let mut bu = vec![0.0; n];
    op.apply_adjoint(dual, &mut bu);
    let mut p: Vec<f64> = x.iter().zip(&bu).map(|(a, b)| a - b).collect();
    let mut v = vec![0.0; m];
    for _ in 0..iterations {
        op.apply(&p, &mut v);
        for (vi, ui) in v.iter_mut().zip(dual.iter()) {
            *vi += ui / mu;
        }
        let vn = norm(&v);
        let shrink = if vn > radius { 1.0 - radius / vn } else { 0.0 };
        for (ui, vi) in dual.iter_mut().zip(&v) {
            *ui = mu * shrink * vi;
        }
        op.apply_adjoint(dual, &mut bu);
        for ((pi, xi), bi) in p.iter_mut().zip(x).zip(&bu) {
            *pi = xi - bi;
        }
        observe(&p);
    }
    p
}
