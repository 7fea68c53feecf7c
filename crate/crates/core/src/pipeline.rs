//! End-to-end decoding: independent compression, depth estimation on the
//! decoded views, then joint reconstruction.

use serde::{Deserialize, Serialize};

use crate::codec::{compress_view, CodecConfig};
use crate::depth::{estimate_depth, DepthField, DepthProblem, Geometry, DEFAULT_MAX_SWEEPS};
use crate::error::{Error, Result};
use crate::image::{psnr, Image};
use crate::solver::{solve, JointProblem, SolveReport, SolverConfig};

/// Smoothness parameters of the depth energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DepthParams {
    pub lambda: f64,
    pub tau: f64,
    pub max_sweeps: usize,
}

impl Default for DepthParams {
    fn default() -> Self {
        Self {
            lambda: 190.0,
            tau: 4.0,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }
}

/// Fidelity radius of the joint reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FidelityRadius {
    /// A fixed per-pixel RMS radius in gray levels.
    Fixed(f64),
    /// `factor` times the RMS error of a uniform quantizer with the codec's
    /// step, `step / sqrt(12)`.
    QuantizerScaled(f64),
    /// `factor` times the coding-noise RMS estimated from the decoded views:
    /// the masked warping residual RMS divided by `sqrt(2)`.
    ResidualScaled(f64),
    /// The smaller of the two scaled estimates above.
    Auto { quantizer: f64, residual: f64 },
}

impl FidelityRadius {
    /// Radius in gray levels for `problem`, whose own `epsilon1` is ignored.
    pub fn resolve(&self, codec: CodecConfig, problem: &JointProblem) -> f64 {
        let radius = match *self {
            FidelityRadius::Fixed(v) => v,
            FidelityRadius::QuantizerScaled(f) => f * codec.step() / 12f64.sqrt(),
            FidelityRadius::ResidualScaled(f) => f * problem.decoded_residual_rms() / 2f64.sqrt(),
            FidelityRadius::Auto { quantizer, residual } => FidelityRadius::QuantizerScaled(quantizer)
                .resolve(codec, problem)
                .min(FidelityRadius::ResidualScaled(residual).resolve(codec, problem)),
        };
        radius.max(MIN_FIDELITY_RADIUS)
    }
}

/// Floor on the fidelity radius, in gray levels.
pub const MIN_FIDELITY_RADIUS: f64 = 1e-3;

/// Joint reconstruction settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionParams {
    pub epsilon1: FidelityRadius,
    pub epsilon2: f64,
    pub use_masks: bool,
    pub solver: SolverConfig,
}

impl Default for ReconstructionParams {
    fn default() -> Self {
        Self {
            epsilon1: FidelityRadius::Auto { quantizer: 0.2, residual: 0.75 },
            epsilon2: 2.0,
            use_masks: true,
            solver: SolverConfig::default(),
        }
    }
}

/// Everything one pipeline run produces.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub decoded: Vec<Image>,
    pub reconstructed: Vec<Image>,
    pub depth: DepthField,
    pub independent_psnr: Vec<f64>,
    pub joint_psnr: Vec<f64>,
    /// Estimated bits per view.
    pub bits: Vec<f64>,
    pub report: SolveReport,
}

impl PipelineOutcome {
    pub fn total_bits(&self) -> f64 {
        self.bits.iter().sum()
    }

    pub fn mean_independent_psnr(&self) -> f64 {
        mean(&self.independent_psnr)
    }

    pub fn mean_joint_psnr(&self) -> f64 {
        mean(&self.joint_psnr)
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Compress every view independently at the same quality.
pub fn compress_views(raw: &[Image], codec: CodecConfig) -> (Vec<Image>, Vec<f64>) {
    raw.iter().map(|v| compress_view(v, codec)).unzip()
}

fn psnrs(originals: &[Image], images: &[Image]) -> Result<Vec<f64>> {
    originals.iter().zip(images).map(|(o, i)| psnr(o, i)).collect()
}

/// Estimate depth from the decoded views.
pub fn estimate_from_decoded(decoded: &[Image], geometry: &Geometry, params: &DepthParams) -> Result<DepthField> {
    let mut problem = DepthProblem::new(decoded.to_vec(), geometry.clone(), params.lambda, params.tau)?;
    problem.max_sweeps = params.max_sweeps;
    estimate_depth(&problem)
}

/// Jointly reconstruct already decoded views with a given depth field.
pub fn reconstruct_with_depth(
    decoded: &[Image],
    depth: &DepthField,
    geometry: &Geometry,
    codec: CodecConfig,
    params: &ReconstructionParams,
) -> Result<(Vec<Image>, SolveReport)> {
    let mut problem = JointProblem::assemble(decoded.to_vec(), depth, geometry, 1.0, params.epsilon2)?;
    if !params.use_masks {
        problem = problem.without_masks();
    }
    let eps1 = params.epsilon1.resolve(codec, &problem);
    let problem = problem.with_radii(eps1, params.epsilon2)?;
    log::info!("joint reconstruction with epsilon1 {eps1:.3}, epsilon2 {:.3}", params.epsilon2);
    solve(&problem, &params.solver)
}

/// Compress, estimate depth, reconstruct jointly and score both decodings
/// against the originals.
pub fn reconstruct_pipeline(
    raw: &[Image],
    codec: CodecConfig,
    geometry: &Geometry,
    depth_params: &DepthParams,
    params: &ReconstructionParams,
) -> Result<PipelineOutcome> {
    if raw.len() < 2 {
        return Err(Error::InvalidParameter("the pipeline needs at least two views".into()));
    }
    let (decoded, bits) = compress_views(raw, codec);
    let depth = estimate_from_decoded(&decoded, geometry, depth_params)?;
    finish(raw, decoded, bits, depth, geometry, codec, params)
}

/// Like [`reconstruct_pipeline`] but with a known depth field.
pub fn reconstruct_pipeline_with_depth(
    raw: &[Image],
    codec: CodecConfig,
    geometry: &Geometry,
    depth: DepthField,
    params: &ReconstructionParams,
) -> Result<PipelineOutcome> {
    let (decoded, bits) = compress_views(raw, codec);
    finish(raw, decoded, bits, depth, geometry, codec, params)
}

fn finish(
    raw: &[Image],
    decoded: Vec<Image>,
    bits: Vec<f64>,
    depth: DepthField,
    geometry: &Geometry,
    codec: CodecConfig,
    params: &ReconstructionParams,
) -> Result<PipelineOutcome> {
    let (reconstructed, report) = reconstruct_with_depth(&decoded, &depth, geometry, codec, params)?;
    Ok(PipelineOutcome {
        independent_psnr: psnrs(raw, &decoded)?,
        joint_psnr: psnrs(raw, &reconstructed)?,
        decoded,
        reconstructed,
        depth,
        bits,
        report,
    })
}

/// Result of decoding a multi-view set pair by pair.
#[derive(Debug, Clone)]
pub struct PairwiseOutcome {
    pub reconstructed: Vec<Image>,
    pub psnr: Vec<f64>,
}

impl PairwiseOutcome {
    pub fn mean_psnr(&self) -> f64 {
        mean(&self.psnr)
    }
}

/// Stereo protocol for `J > 2` views: estimate depth and reconstruct the
/// reference together with each other view in turn; keep every
/// non-reference reconstruction and the best of the reference ones.
pub fn pairwise_reconstruction(
    raw: &[Image],
    decoded: &[Image],
    geometry: &Geometry,
    codec: CodecConfig,
    depth_params: &DepthParams,
    params: &ReconstructionParams,
) -> Result<PairwiseOutcome> {
    let mut best_reference: Option<(f64, Image)> = None;
    let mut others = Vec::with_capacity(decoded.len() - 1);
    for j in 1..decoded.len() {
        let pair = [decoded[0].clone(), decoded[j].clone()];
        let pair_geometry = geometry.pair(j - 1)?;
        let depth = estimate_from_decoded(&pair, &pair_geometry, depth_params)?;
        let (rec, _) = reconstruct_with_depth(&pair, &depth, &pair_geometry, codec, params)?;
        let mut rec = rec.into_iter();
        let reference = rec.next().expect("two views");
        let q = psnr(&raw[0], &reference)?;
        if best_reference.as_ref().is_none_or(|(b, _)| q > *b) {
            best_reference = Some((q, reference));
        }
        others.push(rec.next().expect("two views"));
    }
    let (_, reference) = best_reference.ok_or_else(|| Error::InvalidParameter("need at least two views".into()))?;
    let reconstructed: Vec<Image> = std::iter::once(reference).chain(others).collect();
    Ok(PairwiseOutcome {
        psnr: psnrs(raw, &reconstructed)?,
        reconstructed,
    })
}
