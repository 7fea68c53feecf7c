//! JSON run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::depth::{DEFAULT_LABELS, DEFAULT_MAX_SWEEPS};
use crate::error::{Error, Result};
use crate::pipeline::{DepthParams, FidelityRadius, ReconstructionParams};
use crate::prox::TvConfig;
use crate::scene::SceneSpec;
use crate::solver::SolverConfig;

/// Every section is optional; a minimal config lists the view paths.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Image paths, reference first.
    pub views: Option<Vec<PathBuf>>,
    /// Synthetic scene used instead of `views`.
    pub scene: Option<SceneSpec>,
    /// Camera JSON files, one per view; their presence selects calibrated mode.
    pub cameras: Option<Vec<PathBuf>>,
    /// Disparity search range for rectified views.
    pub rectified: Option<Range<i32>>,
    /// Depth search range for calibrated views.
    pub depth_range: Option<Range<f64>>,
    #[serde(default)]
    pub codec: CodecSection,
    #[serde(default)]
    pub depth: DepthSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub eval: EvalSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range<T> {
    pub min: T,
    pub max: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodecSection {
    /// QP' for single-rate commands.
    pub qp: u32,
}

impl Default for CodecSection {
    fn default() -> Self {
        Self { qp: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DepthSection {
    pub lambda: f64,
    pub tau: f64,
    /// Label count in calibrated mode.
    pub labels: usize,
    pub max_sweeps: usize,
}

impl Default for DepthSection {
    fn default() -> Self {
        let d = DepthParams::default();
        Self {
            lambda: d.lambda,
            tau: d.tau,
            labels: DEFAULT_LABELS,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }
}

impl DepthSection {
    pub fn params(&self) -> DepthParams {
        DepthParams {
            lambda: self.lambda,
            tau: self.tau,
            max_sweeps: self.max_sweeps,
        }
    }
}

/// `epsilon1` is a number (fixed RMS radius), `"auto"`, or one of
/// `{"quantizer": f}`, `{"residual": f}`, `{"quantizer": f, "residual": g}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Epsilon1 {
    Fixed(f64),
    Named(AutoName),
    Scaled {
        #[serde(default)]
        quantizer: Option<f64>,
        #[serde(default)]
        residual: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoName {
    Auto,
}

impl Default for Epsilon1 {
    fn default() -> Self {
        Epsilon1::Named(AutoName::Auto)
    }
}

impl Epsilon1 {
    pub fn radius(&self) -> Result<FidelityRadius> {
        Ok(match *self {
            Epsilon1::Fixed(v) => FidelityRadius::Fixed(v),
            Epsilon1::Named(AutoName::Auto) => ReconstructionParams::default().epsilon1,
            Epsilon1::Scaled {
                quantizer: Some(q),
                residual: Some(r),
            } => FidelityRadius::Auto {
                quantizer: q,
                residual: r,
            },
            Epsilon1::Scaled {
                quantizer: Some(q),
                residual: None,
            } => FidelityRadius::QuantizerScaled(q),
            Epsilon1::Scaled {
                quantizer: None,
                residual: Some(r),
            } => FidelityRadius::ResidualScaled(r),
            Epsilon1::Scaled { .. } => {
                return Err(Error::Config("solver.epsilon1: give `quantizer` and/or `residual`".into()))
            }
        })
    }

    fn describe(&self) -> String {
        match self {
            Epsilon1::Fixed(v) => format!("{v}"),
            Epsilon1::Named(_) => "auto".into(),
            Epsilon1::Scaled { quantizer, residual } => {
                let mut parts = Vec::new();
                if let Some(q) = quantizer {
                    parts.push(format!("{q} x quantizer RMS"));
                }
                if let Some(r) = residual {
                    parts.push(format!("{r} x residual RMS"));
                }
                format!("min({})", parts.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub epsilon1: Epsilon1,
    pub epsilon2: f64,
    pub iterations: usize,
    pub gamma: f64,
    pub relaxation: f64,
    pub weights: Option<Vec<f64>>,
    pub tolerance: f64,
    pub tv_iterations: usize,
    pub correlation_iterations: usize,
    pub use_masks: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverConfig::default();
        let r = ReconstructionParams::default();
        Self {
            epsilon1: Epsilon1::default(),
            epsilon2: r.epsilon2,
            iterations: s.outer_iterations,
            gamma: s.gamma,
            relaxation: s.relaxation,
            weights: None,
            tolerance: s.tolerance,
            tv_iterations: s.tv.inner_iterations,
            correlation_iterations: s.correlation_iterations,
            use_masks: r.use_masks,
        }
    }
}

impl SolverSection {
    pub fn params(&self) -> Result<ReconstructionParams> {
        let defaults = SolverConfig::default();
        Ok(ReconstructionParams {
            epsilon1: self.epsilon1.radius()?,
            epsilon2: self.epsilon2,
            use_masks: self.use_masks,
            solver: SolverConfig {
                outer_iterations: self.iterations,
                gamma: self.gamma,
                weights: self.weights.clone(),
                relaxation: self.relaxation,
                log_every: defaults.log_every,
                tv: TvConfig::new(self.tv_iterations, defaults.tv.dual_step)?,
                correlation_iterations: self.correlation_iterations,
                tolerance: self.tolerance,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// QP' values of a sweep.
    pub qp: Vec<u32>,
    pub workers: Option<usize>,
    /// Also sweep with the ground-truth depth of a synthetic scene.
    pub true_depth: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            qp: vec![50, 45, 40, 35, 30, 25],
            workers: None,
            true_depth: false,
        }
    }
}

impl Config {
    /// Parse and check a config; relative paths are taken relative to
    /// `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: Config = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.views.iter_mut().flatten().for_each(fix);
        cfg.cameras.iter_mut().flatten().for_each(fix);
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Field-level checks serde cannot express.
    pub fn check(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::Config(format!("field `{field}`: {why}")));
        if let Some(v) = &self.views {
            if v.len() < 2 {
                return bad("views", "at least two views are needed");
            }
        }
        if self.views.is_some() && self.scene.is_some() {
            return bad("scene", "give either `views` or `scene`, not both");
        }
        if let Some(s) = &self.scene {
            s.validate().map_err(|e| Error::Config(format!("field `scene`: {e}")))?;
        }
        if let Some(r) = self.rectified {
            if r.min > r.max {
                return bad("rectified", "min exceeds max");
            }
        }
        if let Some(r) = self.depth_range {
            if !(r.min > 0.0 && r.max > r.min) {
                return bad("depth_range", "need 0 < min < max");
            }
        }
        if !(self.depth.lambda >= 0.0) {
            return bad("depth.lambda", "must be non-negative");
        }
        if !(self.depth.tau >= 0.0) {
            return bad("depth.tau", "must be non-negative");
        }
        if self.depth.labels < 2 {
            return bad("depth.labels", "need at least two labels");
        }
        if let Epsilon1::Fixed(v) = self.solver.epsilon1 {
            if !(v > 0.0) {
                return bad("solver.epsilon1", "must be positive");
            }
        }
        if !(self.solver.epsilon2 > 0.0) {
            return bad("solver.epsilon2", "must be positive");
        }
        self.solver
            .params()
            .and_then(|p| p.solver.validate(2).map(|_| p))
            .map_err(|e| Error::Config(format!("section `solver`: {e}")))?;
        if self.eval.workers == Some(0) {
            return bad("eval.workers", "must be positive");
        }
        Ok(())
    }

    /// The required input: `views` or a `scene`.
    pub fn require_input(&self) -> Result<()> {
        if self.views.is_none() && self.scene.is_none() {
            return Err(Error::Config("missing required field `views` (or a `scene`)".into()));
        }
        Ok(())
    }

    /// Human-readable parameter block for report headers.
    pub fn parameter_block(&self) -> String {
        format!(
            "lambda = {}\ntau = {}\nepsilon1 = {}\nepsilon2 = {}\niterations = {}\ngamma = {}\n",
            self.depth.lambda,
            self.depth.tau,
            self.solver.epsilon1.describe(),
            self.solver.epsilon2,
            self.solver.iterations,
            self.solver.gamma
        )
    }
}
