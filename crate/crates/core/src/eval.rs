//! Rate–distortion curves, Bjontegaard delta rate and plot output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::CodecConfig;
use crate::depth::{DepthField, Geometry};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::pipeline::{reconstruct_pipeline, reconstruct_pipeline_with_depth, DepthParams, PipelineOutcome, ReconstructionParams};

/// Number of lowest-rate points the delta rate is computed over.
pub const BD_POINTS: usize = 4;

pub const CSV_HEADER: &str = "rate_bits,psnr_db,label";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    /// Bits summed over all views.
    pub total_bits: f64,
    /// PSNR averaged over views, in dB.
    pub mean_psnr: f64,
}

impl RdPoint {
    pub fn new(total_bits: f64, mean_psnr: f64) -> Result<Self> {
        if !(total_bits > 0.0 && total_bits.is_finite()) {
            return Err(Error::InvalidParameter(format!("rate must be positive and finite, got {total_bits}")));
        }
        if !mean_psnr.is_finite() {
            return Err(Error::InvalidParameter(format!("PSNR must be finite, got {mean_psnr}")));
        }
        Ok(Self { total_bits, mean_psnr })
    }
}

/// Points of one decoding scheme, sorted by strictly increasing rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdCurve {
    label: String,
    points: Vec<RdPoint>,
}

impl RdCurve {
    /// Sorts the points by rate. Repeated rates are rejected; a PSNR that
    /// drops as the rate grows is only logged.
    pub fn new(label: impl Into<String>, mut points: Vec<RdPoint>) -> Result<Self> {
        let label = label.into();
        if label.is_empty() || label.contains([',', '\n', '\r', '"']) {
            return Err(Error::InvalidParameter(format!("bad curve label {label:?}")));
        }
        if points.is_empty() {
            return Err(Error::InvalidParameter(format!("curve {label} has no points")));
        }
        for p in &points {
            RdPoint::new(p.total_bits, p.mean_psnr)?;
        }
        points.sort_by(|a, b| a.total_bits.total_cmp(&b.total_bits));
        for w in points.windows(2) {
            if w[1].total_bits <= w[0].total_bits {
                return Err(Error::InvalidParameter(format!("curve {label} repeats rate {}", w[0].total_bits)));
            }
            if w[1].mean_psnr < w[0].mean_psnr {
                log::warn!(
                    "curve {label}: PSNR drops from {:.3} to {:.3} dB as rate grows",
                    w[0].mean_psnr,
                    w[1].mean_psnr
                );
            }
        }
        Ok(Self { label, points })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn points(&self) -> &[RdPoint] {
        &self.points
    }
}

fn psnr_range(points: &[RdPoint]) -> (f64, f64) {
    points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.mean_psnr), hi.max(p.mean_psnr))
    })
}

/// log10(rate) as a cubic in PSNR, fitted in coordinates centred on `shift`.
struct LogRateFit {
    coeffs: [f64; 4],
    shift: f64,
}

impl LogRateFit {
    fn fit(points: &[RdPoint]) -> Result<Self> {
        let shift = points.iter().map(|p| p.mean_psnr).sum::<f64>() / points.len() as f64;
        let a = DMatrix::from_fn(points.len(), 4, |r, c| (points[r].mean_psnr - shift).powi(c as i32));
        let b = DVector::from_iterator(points.len(), points.iter().map(|p| p.total_bits.log10()));
        let sol = a
            .svd(true, true)
            .solve(&b, 1e-12)
            .map_err(|e| Error::InvalidParameter(format!("cubic fit failed: {e}")))?;
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("cubic fit is degenerate".into()));
        }
        Ok(Self {
            coeffs: [sol[0], sol[1], sol[2], sol[3]],
            shift,
        })
    }

    fn antiderivative(&self, psnr: f64) -> f64 {
        let t = psnr - self.shift;
        self.coeffs.iter().enumerate().map(|(k, c)| c * t.powi(k as i32 + 1) / (k + 1) as f64).sum()
    }

    fn integral(&self, lo: f64, hi: f64) -> f64 {
        self.antiderivative(hi) - self.antiderivative(lo)
    }
}

/// Average rate difference of `test` against `reference` at equal quality,
/// in percent; negative means `test` needs fewer bits.
pub fn bjontegaard_rate(reference: &RdCurve, test: &RdCurve) -> Result<f64> {
    for c in [reference, test] {
        if c.points.len() < BD_POINTS {
            return Err(Error::InvalidParameter(format!(
                "curve {} has {} points, delta rate needs {BD_POINTS}",
                c.label,
                c.points.len()
            )));
        }
    }
    let r = &reference.points[..BD_POINTS];
    let t = &test.points[..BD_POINTS];
    let (r_lo, r_hi) = psnr_range(r);
    let (t_lo, t_hi) = psnr_range(t);
    let lo = r_lo.max(t_lo);
    let hi = r_hi.min(t_hi);
    if hi <= lo {
        return Err(Error::NoOverlap(r_lo, r_hi, t_lo, t_hi));
    }
    let r_fit = LogRateFit::fit(r)?;
    let t_fit = LogRateFit::fit(t)?;
    let mean_diff = (t_fit.integral(lo, hi) - r_fit.integral(lo, hi)) / (hi - lo);
    Ok((10f64.powf(mean_diff) - 1.0) * 100.0)
}

/// One rate point of a sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub qp: u32,
    pub outcome: PipelineOutcome,
}

/// Independent and joint curves over the same rate points.
#[derive(Debug, Clone)]
pub struct RdSweep {
    pub independent: RdCurve,
    pub joint: RdCurve,
    /// Sweep points in the order of the QP list.
    pub runs: Vec<SweepPoint>,
}

impl RdSweep {
    fn from_runs(runs: Vec<SweepPoint>, joint_label: &str) -> Result<Self> {
        let independent = runs
            .iter()
            .map(|r| RdPoint::new(r.outcome.total_bits(), r.outcome.mean_independent_psnr()))
            .collect::<Result<Vec<_>>>()?;
        let joint = runs
            .iter()
            .map(|r| RdPoint::new(r.outcome.total_bits(), r.outcome.mean_joint_psnr()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            independent: RdCurve::new("independent", independent)?,
            joint: RdCurve::new(joint_label, joint)?,
            runs,
        })
    }

    /// Delta rate of joint decoding against independent decoding.
    pub fn bd_rate(&self) -> Result<f64> {
        bjontegaard_rate(&self.independent, &self.joint)
    }
}

fn check_qps(qps: &[u32]) -> Result<Vec<CodecConfig>> {
    if qps.len() < BD_POINTS {
        return Err(Error::InvalidParameter(format!(
            "a sweep needs at least {BD_POINTS} QP values, got {}",
            qps.len()
        )));
    }
    let mut seen = qps.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != qps.len() {
        return Err(Error::InvalidParameter("repeated QP in sweep".into()));
    }
    qps.iter().map(|&q| CodecConfig::new(q)).collect()
}

/// Run the full pipeline once per QP, every view at the same QP. Points run
/// concurrently on the current rayon pool.
pub fn run_rd_sweep(
    views: &[Image],
    qps: &[u32],
    geometry: &Geometry,
    depth_params: &DepthParams,
    params: &ReconstructionParams,
) -> Result<RdSweep> {
    let codecs = check_qps(qps)?;
    let runs = codecs
        .par_iter()
        .map(|&codec| {
            log::info!("sweep point QP' {}", codec.qp());
            let outcome = reconstruct_pipeline(views, codec, geometry, depth_params, params)?;
            Ok(SweepPoint { qp: codec.qp(), outcome })
        })
        .collect::<Result<Vec<_>>>()?;
    RdSweep::from_runs(runs, "joint")
}

/// Like [`run_rd_sweep`] but reconstructing with a fixed, typically
/// ground-truth, depth field.
pub fn run_rd_sweep_with_depth(
    views: &[Image],
    qps: &[u32],
    geometry: &Geometry,
    depth: &DepthField,
    params: &ReconstructionParams,
) -> Result<RdSweep> {
    let codecs = check_qps(qps)?;
    let runs = codecs
        .par_iter()
        .map(|&codec| {
            let outcome = reconstruct_pipeline_with_depth(views, codec, geometry, depth.clone(), params)?;
            Ok(SweepPoint { qp: codec.qp(), outcome })
        })
        .collect::<Result<Vec<_>>>()?;
    RdSweep::from_runs(runs, "joint-true-depth")
}

/// CSV text with one row per point.
pub fn curves_to_csv(curves: &[RdCurve]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for c in curves {
        for p in &c.points {
            writeln!(out, "{},{},{}", p.total_bits, p.mean_psnr, c.label).expect("write to string");
        }
    }
    out
}

/// Parse CSV written by [`curves_to_csv`]; curves keep their first-seen order.
pub fn parse_curves_csv(text: &str) -> Result<Vec<RdCurve>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::Malformed(format!("expected header {CSV_HEADER:?}"))),
    }
    let mut groups: Vec<(String, Vec<RdPoint>)> = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Malformed(format!("line {}: {line:?}", n + 1));
        let mut fields = line.splitn(3, ',');
        let rate: f64 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
        let psnr: f64 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
        let label = fields.next().ok_or_else(bad)?.to_string();
        let point = RdPoint::new(rate, psnr)?;
        match groups.iter_mut().find(|(l, _)| *l == label) {
            Some((_, pts)) => pts.push(point),
            None => groups.push((label, vec![point])),
        }
    }
    groups.into_iter().map(|(l, p)| RdCurve::new(l, p)).collect()
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 480.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// A standalone SVG line chart, one polyline per curve.
pub fn render_svg(curves: &[RdCurve]) -> Result<String> {
    if curves.is_empty() {
        return Err(Error::InvalidParameter("nothing to plot".into()));
    }
    let pts = curves.iter().flat_map(|c| &c.points);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        x0 = x0.min(p.total_bits);
        x1 = x1.max(p.total_bits);
        y0 = y0.min(p.mean_psnr);
        y1 = y1.max(p.mean_psnr);
    }
    if x1 - x0 < 1e-9 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    if y1 - y0 < 1e-9 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (SVG_W - 2.0 * MARGIN);
    let sy = |y: f64| SVG_H - MARGIN - (y - y0) / (y1 - y0) * (SVG_H - 2.0 * MARGIN);

    let mut s = String::new();
    let w = &mut s;
    let bottom = SVG_H - MARGIN;
    let right = SVG_W - MARGIN;
    writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    )
    .unwrap();
    writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(w, r#"<line x1="{MARGIN}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>"#).unwrap();
    writeln!(w, r#"<line x1="{MARGIN}" y1="{bottom}" x2="{MARGIN}" y2="{MARGIN}" stroke="black"/>"#).unwrap();
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let (px, py) = (sx(xv), sy(yv));
        writeln!(w, r#"<line x1="{px:.2}" y1="{bottom}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, bottom + 5.0).unwrap();
        writeln!(
            w,
            r#"<text x="{px:.2}" y="{:.2}" font-size="11" text-anchor="middle">{xv:.0}</text>"#,
            bottom + 18.0
        )
        .unwrap();
        writeln!(w, r#"<line x1="{:.2}" y1="{py:.2}" x2="{MARGIN}" y2="{py:.2}" stroke="black"/>"#, MARGIN - 5.0).unwrap();
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{yv:.2}</text>"#,
            MARGIN - 8.0,
            py + 4.0
        )
        .unwrap();
    }
    writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">total bits</text>"#,
        SVG_W / 2.0,
        SVG_H - 15.0
    )
    .unwrap();
    writeln!(
        w,
        r#"<text x="15" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 15 {:.2})">mean PSNR (dB)</text>"#,
        SVG_H / 2.0,
        SVG_H / 2.0
    )
    .unwrap();
    for (i, c) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let vertices: Vec<String> =
            c.points.iter().map(|p| format!("{:.2},{:.2}", sx(p.total_bits), sy(p.mean_psnr))).collect();
        writeln!(
            w,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            vertices.join(" ")
        )
        .unwrap();
        let ly = MARGIN + 16.0 * i as f64;
        writeln!(
            w,
            r#"<text x="{:.2}" y="{ly:.2}" font-size="12" fill="{color}" text-anchor="end">{}</text>"#,
            right,
            c.label
        )
        .unwrap();
    }
    writeln!(w, "</svg>").unwrap();
    Ok(s)
}

/// Files written by [`emit_plot`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotFiles {
    pub csv: PathBuf,
    pub svg: PathBuf,
}

/// Write `<path>.csv` and `<path>.svg`.
pub fn emit_plot(curves: &[RdCurve], path: impl AsRef<Path>) -> Result<PlotFiles> {
    let svg_text = render_svg(curves)?;
    let path = path.as_ref();
    let files = PlotFiles {
        csv: path.with_extension("csv"),
        svg: path.with_extension("svg"),
    };
    std::fs::write(&files.csv, curves_to_csv(curves)).map_err(|e| Error::io(&files.csv, e))?;
    std::fs::write(&files.svg, svg_text).map_err(|e| Error::io(&files.svg, e))?;
    Ok(files)
}
