//! Joint reconstruction: minimize the summed TV of all views subject to a
//! fidelity ball around each decoded view and one ball on the masked
//! inter-view warping residual, solved with the parallel proximal
//! algorithm (PPXA).

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::depth::{DepthField, Geometry};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::linop::{norm, LinearOperator};
use crate::prox::{
    estimate_frame_bounds, prox_affine_ball_warm, prox_selector_ball_in_place, prox_tv_warm, tv_norm_slice,
    FrameBounds, TvConfig, TvDual,
};
use crate::warp::{build_operator, motion_from_depth, OcclusionMask, WarpOperator};

/// Decoded views (reference first), one warp `A_j` and mask `M_j` per
/// non-reference view, and the constraint radii.
///
/// `epsilon1` is a per-pixel RMS distance to each decoded view; `epsilon2`
/// bounds the mean squared masked warping residual per pixel, summed over
/// the non-reference views.
#[derive(Debug, Clone)]
pub struct JointProblem {
    views: Vec<Image>,
    warps: Vec<(WarpOperator, OcclusionMask)>,
    epsilon1: f64,
    epsilon2: f64,
}

impl JointProblem {
    pub fn new(
        views: Vec<Image>,
        warps: Vec<(WarpOperator, OcclusionMask)>,
        epsilon1: f64,
        epsilon2: f64,
    ) -> Result<Self> {
        if views.len() < 2 {
            return Err(Error::InvalidParameter("joint reconstruction needs at least two views".into()));
        }
        if warps.len() != views.len() - 1 {
            return Err(Error::dims(
                format!("{} warps", views.len() - 1),
                format!("{} warps", warps.len()),
            ));
        }
        for v in &views[1..] {
            views[0].same_dims(v)?;
        }
        let n = views[0].len();
        for (a, m) in &warps {
            if a.size() != n || m.len() != n {
                return Err(Error::dims(n, a.size()));
            }
        }
        if !(epsilon1 > 0.0 && epsilon2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "radii must be positive (got {epsilon1}, {epsilon2})"
            )));
        }
        Ok(Self {
            views,
            warps,
            epsilon1,
            epsilon2,
        })
    }

    /// Build `A_j` and `M_j` for every non-reference view from a depth field
    /// estimated on the reference view.
    pub fn assemble(
        views: Vec<Image>,
        depth: &DepthField,
        geometry: &Geometry,
        epsilon1: f64,
        epsilon2: f64,
    ) -> Result<Self> {
        if let Some(v) = views.first() {
            if v.dims() != (depth.height(), depth.width()) {
                return Err(Error::dims(
                    format!("{}x{}", depth.height(), depth.width()),
                    format!("{}x{}", v.height(), v.width()),
                ));
            }
        }
        let warps = (0..views.len().saturating_sub(1))
            .map(|j| Ok(build_operator(&motion_from_depth(depth, geometry, j)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(views, warps, epsilon1, epsilon2)
    }

    /// The same problem with every mask replaced by the identity.
    pub fn without_masks(mut self) -> Self {
        for (a, m) in &mut self.warps {
            *m = OcclusionMask::identity(a.size());
        }
        self
    }

    pub fn views(&self) -> &[Image] {
        &self.views
    }

    pub fn warps(&self) -> &[(WarpOperator, OcclusionMask)] {
        &self.warps
    }

    pub fn view_count(&self) -> usize {
        self.views.len()
    }

    pub fn pixels(&self) -> usize {
        self.views[0].len()
    }

    pub fn epsilon1(&self) -> f64 {
        self.epsilon1
    }

    pub fn epsilon2(&self) -> f64 {
        self.epsilon2
    }

    /// l2 radius of each fidelity ball, `epsilon1 * sqrt(N)`.
    pub fn fidelity_radius(&self) -> f64 {
        self.epsilon1 * (self.pixels() as f64).sqrt()
    }

    /// Squared l2 radius of the correlation ball, `epsilon2 * N`.
    pub fn correlation_radius_sq(&self) -> f64 {
        self.epsilon2 * self.pixels() as f64
    }

    pub fn correlation(&self) -> CorrelationOperator<'_> {
        CorrelationOperator {
            warps: &self.warps,
            n: self.pixels(),
        }
    }

    /// RMS over unmasked pixels of the decoded views' warping residual
    /// `M_j (y_j - A_j y_1)`, pooled over all non-reference views.
    pub fn decoded_residual_rms(&self) -> f64 {
        let hy = self.correlation().apply_vec(&self.stacked_views());
        let kept: usize = self.warps.iter().map(|(_, m)| m.len() - m.zero_count()).sum();
        if kept == 0 {
            return 0.0;
        }
        (hy.iter().map(|v| v * v).sum::<f64>() / kept as f64).sqrt()
    }

    /// The same problem with new radii.
    pub fn with_radii(self, epsilon1: f64, epsilon2: f64) -> Result<Self> {
        Self::new(self.views, self.warps, epsilon1, epsilon2)
    }

    /// Decoded views stacked into one vector.
    pub fn stacked_views(&self) -> Vec<f64> {
        self.views.iter().flat_map(|v| v.as_slice().iter().copied()).collect()
    }
}

/// The stacked operator `H` with block rows `[-M_j A_j, 0, .., M_j, .., 0]`,
/// applied without forming a matrix. Input is `J` stacked views, output is
/// `J - 1` stacked residual images.
#[derive(Debug, Clone, Copy)]
pub struct CorrelationOperator<'a> {
    warps: &'a [(WarpOperator, OcclusionMask)],
    n: usize,
}

impl LinearOperator for CorrelationOperator<'_> {
    fn input_len(&self) -> usize {
        self.n * (self.warps.len() + 1)
    }

    fn output_len(&self) -> usize {
        self.n * self.warps.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        let reference = &x[..n];
        for (j, (a, m)) in self.warps.iter().enumerate() {
            let out = &mut y[j * n..(j + 1) * n];
            a.apply_into(reference, out);
            let xj = &x[(j + 1) * n..(j + 2) * n];
            for i in 0..n {
                out[i] = if m.keeps(i) { xj[i] - out[i] } else { 0.0 };
            }
        }
    }

    fn apply_adjoint(&self, y: &[f64], x: &mut [f64]) {
        let n = self.n;
        x.iter_mut().for_each(|v| *v = 0.0);
        let mut masked = vec![0.0; n];
        for (j, (a, m)) in self.warps.iter().enumerate() {
            let yj = &y[j * n..(j + 1) * n];
            for i in 0..n {
                masked[i] = if m.keeps(i) { yj[i] } else { 0.0 };
            }
            x[(j + 1) * n..(j + 2) * n].copy_from_slice(&masked);
            a.apply_transpose_add(&masked, -1.0, &mut x[..n]);
        }
    }
}

/// PPXA settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub outer_iterations: usize,
    pub gamma: f64,
    /// One weight per term (J TV terms, J fidelity balls, the correlation
    /// ball, in that order); `None` means equal weights.
    pub weights: Option<Vec<f64>>,
    pub relaxation: f64,
    pub log_every: usize,
    pub tv: TvConfig,
    pub correlation_iterations: usize,
    /// Stop early once the iterate moves less than this (RMS gray levels).
    pub tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            outer_iterations: 100,
            gamma: 1.0,
            weights: None,
            relaxation: 1.0,
            log_every: 1,
            tv: TvConfig::default(),
            correlation_iterations: 50,
            tolerance: 1e-4,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, views: usize) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "relaxation must lie in (0, 2), got {}",
                self.relaxation
            )));
        }
        if let Some(w) = &self.weights {
            if w.len() != 2 * views + 1 {
                return Err(Error::dims(2 * views + 1, w.len()));
            }
            if w.iter().any(|&v| !(v > 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter("weights must be positive and sum to 1".into()));
            }
        }
        Ok(())
    }

    fn term_weights(&self, views: usize) -> Vec<f64> {
        self.weights
            .clone()
            .unwrap_or_else(|| vec![1.0 / (2 * views + 1) as f64; 2 * views + 1])
    }
}

/// One logged PPXA iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Sum of the views' TV.
    pub objective: f64,
    /// RMS distance of each view to its decoded version.
    pub fidelity: Vec<f64>,
    /// `||H x||^2 / N`.
    pub correlation: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub records: Vec<IterationRecord>,
    pub iterations: usize,
    pub fidelity_feasible: Vec<bool>,
    pub correlation_feasible: bool,
    pub frame_bounds: FrameBounds,
    pub wall_seconds: f64,
}

/// Wall time is excluded.
impl PartialEq for SolveReport {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records
            && self.iterations == other.iterations
            && self.fidelity_feasible == other.fidelity_feasible
            && self.correlation_feasible == other.correlation_feasible
            && self.frame_bounds == other.frame_bounds
    }
}

/// Constraints count as met within this factor of their radius.
pub const FEASIBILITY_SLACK: f64 = 1.05;

impl SolveReport {
    pub fn final_record(&self) -> &IterationRecord {
        self.records.last().expect("report has at least one record")
    }

    pub fn feasible(&self) -> bool {
        self.correlation_feasible && self.fidelity_feasible.iter().all(|&f| f)
    }

    /// CSV with header `iteration,objective,residual_fid_1..J,residual_corr`.
    pub fn to_csv(&self) -> String {
        let j = self.fidelity_feasible.len();
        let mut out = String::from("iteration,objective");
        for v in 1..=j {
            let _ = write!(out, ",residual_fid_{v}");
        }
        out.push_str(",residual_corr\n");
        for r in &self.records {
            let _ = write!(out, "{},{}", r.iteration, r.objective);
            for f in &r.fidelity {
                let _ = write!(out, ",{f}");
            }
            let _ = writeln!(out, ",{}", r.correlation);
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

enum Term {
    Tv { view: usize, dual: TvDual },
    Fidelity { view: usize },
    Correlation { dual: Vec<f64> },
}

impl Term {
    fn name(&self) -> String {
        match self {
            Term::Tv { view, .. } => format!("prox_tv(view {})", view + 1),
            Term::Fidelity { view } => format!("prox_selector_ball(view {})", view + 1),
            Term::Correlation { .. } => "prox_affine_ball".into(),
        }
    }
}

fn record(problem: &JointProblem, op: &CorrelationOperator, x: &[f64], iteration: usize) -> IterationRecord {
    let n = problem.pixels();
    let (h, w) = problem.views[0].dims();
    let objective = x.chunks(n).map(|v| tv_norm_slice(v, h, w)).sum();
    let fidelity = x
        .chunks(n)
        .zip(&problem.views)
        .map(|(v, y)| {
            let d: f64 = v.iter().zip(y.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
            (d / n as f64).sqrt()
        })
        .collect();
    let hx = op.apply_vec(x);
    let correlation = norm(&hx).powi(2) / n as f64;
    IterationRecord {
        iteration,
        objective,
        fidelity,
        correlation,
    }
}

/// Run PPXA from the decoded views and return the reconstructed views
/// (clamped to `[0, 255]`) with the iteration report.
pub fn solve(problem: &JointProblem, config: &SolverConfig) -> Result<(Vec<Image>, SolveReport)> {
    let start = Instant::now();
    let j = problem.view_count();
    config.validate(j)?;
    let n = problem.pixels();
    let (h, w) = problem.views[0].dims();
    let op = problem.correlation();
    let bounds = estimate_frame_bounds(&op);
    log::debug!(
        "frame bounds: gamma2 {:.4}, range lower {:.4}",
        bounds.gamma2,
        bounds.range_gamma1
    );
    let weights = config.term_weights(j);
    let center = problem.stacked_views();
    let fid_radius = problem.fidelity_radius();
    let corr_radius_sq = problem.correlation_radius_sq();

    let mut terms: Vec<Term> = (0..j)
        .map(|v| Term::Tv {
            view: v,
            dual: TvDual::zeros(n),
        })
        .chain((0..j).map(|v| Term::Fidelity { view: v }))
        .chain(std::iter::once(Term::Correlation {
            dual: vec![0.0; op.output_len()],
        }))
        .collect();

    let mut x = center.clone();
    let mut aux: Vec<Vec<f64>> = vec![x.clone(); terms.len()];
    let mut records = vec![record(problem, &op, &x, 0)];
    let mut iterations = 0;
    let lambda = config.relaxation;

    for it in 1..=config.outer_iterations {
        let proxes: Vec<Vec<f64>> = terms
            .par_iter_mut()
            .zip(aux.par_iter())
            .zip(weights.par_iter())
            .map(|((term, y), &omega)| match term {
                Term::Tv { view, dual } => {
                    let mut p = y.clone();
                    let block = *view * n..(*view + 1) * n;
                    let out = prox_tv_warm(&y[block.clone()], h, w, config.gamma / omega, &config.tv, dual);
                    p[block].copy_from_slice(&out);
                    p
                }
                Term::Fidelity { view } => {
                    let mut p = y.clone();
                    prox_selector_ball_in_place(&mut p, *view, n, &center, fid_radius);
                    p
                }
                Term::Correlation { dual } => prox_affine_ball_warm(
                    y,
                    &op,
                    corr_radius_sq,
                    &bounds,
                    config.correlation_iterations,
                    dual,
                    |_| {},
                ),
            })
            .collect();
        for (term, p) in terms.iter().zip(&proxes) {
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    stage: term.name(),
                    iteration: it,
                });
            }
        }
        let mut avg = vec![0.0; x.len()];
        for (p, &omega) in proxes.iter().zip(&weights) {
            avg.iter_mut().zip(p).for_each(|(a, v)| *a += omega * v);
        }
        for (y, p) in aux.iter_mut().zip(&proxes) {
            for i in 0..y.len() {
                y[i] += lambda * (2.0 * avg[i] - x[i] - p[i]);
            }
        }
        let mut change = 0.0;
        for i in 0..x.len() {
            let step = lambda * (avg[i] - x[i]);
            change += step * step;
            x[i] += step;
        }
        iterations = it;
        let rms_change = (change / x.len() as f64).sqrt();
        let done = rms_change < config.tolerance || it == config.outer_iterations;
        if done || (config.log_every > 0 && it % config.log_every == 0) {
            let r = record(problem, &op, &x, it);
            log::debug!(
                "ppxa {it}: tv {:.1}, corr {:.4}, change {:.2e}",
                r.objective,
                r.correlation,
                rms_change
            );
            records.push(r);
        }
        if done {
            break;
        }
    }

    let last = records.last().expect("initial record");
    let fidelity_feasible: Vec<bool> = last
        .fidelity
        .iter()
        .map(|&f| f <= FEASIBILITY_SLACK * problem.epsilon1)
        .collect();
    let correlation_feasible = last.correlation <= FEASIBILITY_SLACK * problem.epsilon2;
    // An empty constraint intersection leaves the average drifting between
    // the sets; pull each stray view back into its fidelity ball.
    for (v, &ok) in fidelity_feasible.iter().enumerate() {
        if !ok {
            log::info!("view {v} ended outside its fidelity ball; projecting back");
            prox_selector_ball_in_place(&mut x, v, n, &center, fid_radius);
        }
    }
    let views = x
        .chunks(n)
        .map(|v| Image::new(w, h, v.to_vec()).map(|img| img.clamped()))
        .collect::<Result<Vec<_>>>()?;
    Ok((
        views,
        SolveReport {
            records,
            iterations,
            fidelity_feasible,
            correlation_feasible,
            frame_bounds: bounds,
            wall_seconds: start.elapsed().as_secs_f64(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{generate, SceneKind, SceneSpec};
    use crate::warp::MotionField;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Image {
        Image::from_fn(w, h, |_, _| rng.gen_range(0.0..255.0))
    }

    fn dense(op: &WarpOperator, m: &OcclusionMask) -> DMatrix<f64> {
        let n = op.size();
        let mut a = DMatrix::zeros(n, n);
        for (r, c) in op.entries() {
            if m.keeps(r) {
                a[(r, c)] = 1.0;
            }
        }
        a
    }

    #[test]
    fn correlation_operator_matches_dense_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (h, w) = (4, 4);
        let n = h * w;
        let warps: Vec<_> = (0..2)
            .map(|_| {
                let motion = MotionField::new(
                    h,
                    w,
                    (0..n).map(|_| rng.gen_range(-2..=2)).collect(),
                    (0..n).map(|_| rng.gen_range(-1..=1)).collect(),
                )
                .unwrap();
                build_operator(&motion)
            })
            .collect();
        let views: Vec<_> = (0..3).map(|_| random_image(&mut rng, h, w)).collect();
        let problem = JointProblem::new(views, warps, 1.0, 1.0).unwrap();
        let op = problem.correlation();
        let mut big = DMatrix::zeros(2 * n, 3 * n);
        for (j, (a, m)) in problem.warps().iter().enumerate() {
            let ma = dense(a, m);
            for r in 0..n {
                for c in 0..n {
                    big[(j * n + r, c)] = -ma[(r, c)];
                }
                big[(j * n + r, (j + 1) * n + r)] = if m.keeps(r) { 1.0 } else { 0.0 };
            }
        }
        let x: Vec<f64> = (0..3 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let hx = op.apply_vec(&x);
        let hty = op.apply_adjoint_vec(&y);
        let dx = big.apply_vec(&x);
        let dty = big.apply_adjoint_vec(&y);
        for (a, b) in hx.iter().zip(&dx).chain(hty.iter().zip(&dty)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_views_are_perfectly_correlated() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = random_image(&mut rng, 5, 6);
        let warps = vec![(WarpOperator::identity(5, 6), OcclusionMask::identity(30)); 2];
        let problem = JointProblem::new(vec![v.clone(), v.clone(), v], warps, 1.0, 1.0).unwrap();
        let x = problem.stacked_views();
        assert!(problem.correlation().apply_vec(&x).iter().all(|&r| r == 0.0));
    }

    #[test]
    fn stereo_frame_bound_is_two() {
        let motion = MotionField::uniform(6, 8, -2, 0);
        let (a, m) = build_operator(&motion);
        let views = vec![Image::filled(8, 6, 0.0), Image::filled(8, 6, 0.0)];
        let problem = JointProblem::new(views, vec![(a, m)], 1.0, 1.0).unwrap();
        let fb = estimate_frame_bounds(&problem.correlation());
        assert!(fb.gamma2 >= 2.0 && fb.gamma2 <= 2.02 + 1e-12, "{fb:?}");
        assert!((fb.range_gamma1 - 2.0).abs() < 1e-6);
    }

    #[test]
    fn tiny_fidelity_radius_pins_the_views() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_image(&mut rng, 8, 8);
        let (op, mask) = build_operator(&MotionField::uniform(8, 8, -1, 0));
        let b = op.warp_image(&a).unwrap();
        let problem = JointProblem::new(vec![a.clone(), b.clone()], vec![(op, mask)], 1e-6, 1.0).unwrap();
        let (out, _) = solve(&problem, &SolverConfig::default()).unwrap();
        for (o, d) in out.iter().zip([&a, &b]) {
            let rms = crate::image::mse(o, d).unwrap().sqrt();
            assert!(rms < 0.1, "rms {rms}");
        }
    }

    #[test]
    fn identical_views_lose_tv() {
        let spec = SceneSpec::new(SceneKind::TranslatedPlane, 32, 32, 0, 0, 4);
        let v = generate(&spec).unwrap().views.remove(0);
        let problem = JointProblem::new(
            vec![v.clone(), v],
            vec![build_operator(&MotionField::zero(32, 32))],
            200.0,
            50.0,
        )
        .unwrap();
        let (_, report) = solve(&problem, &SolverConfig::default()).unwrap();
        let obj: Vec<f64> = report.records.iter().map(|r| r.objective).collect();
        for p in obj.windows(2) {
            assert!(p[1] <= p[0] * (1.0 + 1e-9), "{obj:?}");
        }
        assert!(obj.last().unwrap() < &obj[0]);
    }

    #[test]
    fn empty_intersection_still_keeps_fidelity() {
        // unrelated views with a tiny correlation ball: no point satisfies both
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let views: Vec<_> = (0..2).map(|_| random_image(&mut rng, 8, 8)).collect();
        let problem = JointProblem::new(
            views.clone(),
            vec![build_operator(&MotionField::zero(8, 8))],
            0.5,
            0.01,
        )
        .unwrap();
        let (out, report) = solve(&problem, &SolverConfig::default()).unwrap();
        assert!(!report.feasible());
        for (x, y) in out.iter().zip(&views) {
            let rms = (x.as_slice().iter().zip(y.as_slice()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / 64.0).sqrt();
            assert!(rms <= 0.5 + 1e-9, "{rms}");
        }
    }

    #[test]
    fn solve_is_deterministic_and_csv_has_header() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_image(&mut rng, 8, 8);
        let b = random_image(&mut rng, 8, 8);
        let problem = JointProblem::new(
            vec![a, b],
            vec![build_operator(&MotionField::uniform(8, 8, -1, 0))],
            5.0,
            2.0,
        )
        .unwrap();
        let cfg = SolverConfig {
            outer_iterations: 20,
            ..SolverConfig::default()
        };
        let (x1, r1) = solve(&problem, &cfg).unwrap();
        let (x2, r2) = solve(&problem, &cfg).unwrap();
        assert_eq!(x1, x2);
        assert_eq!(r1, r2);
        let csv = r1.to_csv();
        assert!(csv.starts_with("iteration,objective,residual_fid_1,residual_fid_2,residual_corr\n"));
        assert_eq!(csv.lines().count(), r1.records.len() + 1);
    }

    #[test]
    fn rejects_bad_configs() {
        let v = Image::filled(4, 4, 1.0);
        let warps = vec![build_operator(&MotionField::zero(4, 4))];
        assert!(JointProblem::new(vec![v.clone()], vec![], 1.0, 1.0).is_err());
        assert!(JointProblem::new(vec![v.clone(), v.clone()], warps.clone(), 0.0, 1.0).is_err());
        let p = JointProblem::new(vec![v.clone(), v], warps, 1.0, 1.0).unwrap();
        let bad = SolverConfig {
            relaxation: 2.0,
            ..SolverConfig::default()
        };
        assert!(solve(&p, &bad).is_err());
        let bad = SolverConfig {
            weights: Some(vec![0.5, 0.5, 0.0, 0.0, 0.0]),
            ..SolverConfig::default()
        };
        assert!(solve(&p, &bad).is_err());
    }
}
