//! Fixed-point drivers for the three-component (structures + textures +
//! noise) and two-component (structures + textures) decompositions.
//!
//! Per iteration the three-component driver runs, in order:
//!   w-step: shrink the directional coefficients of f - u - v at threshold
//!           2*delta and keep the removed part as noise;
//!   v-step: project f - u - w onto the G-ball of radius mu;
//!   u-step: subtract from f - v - w its projection onto the G-ball of
//!           radius lambda (the projection itself is the residual);
//! and stops when the largest per-pixel change of u, v and w falls to eps,
//! or after n_step iterations.

use std::io::Write;

use crate::contourlet::{ct_analyze, ct_synthesize, soft_threshold_coeffs, ContourletCoeffs};
use crate::dfb::DirectionalSubbands;
use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::tv::{project_g, ChambolleOpts, DualField};
use crate::wavelet::{dwt_analyze, dwt_synthesize, WaveletCoeffs};

/// Which transform models the noise component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseModel {
    /// Directional (contourlet) coefficient shrinkage.
    Contourlet,
    /// Separable wavelet coefficient shrinkage.
    Wavelet,
}

/// Driver parameters. The defaults are tuned starting points for 0-255
/// intensity data, not normative values.
#[derive(Debug, Clone)]
pub struct DecompParams {
    /// Fidelity-side ball radius of the structure step.
    pub lambda: f64,
    /// Texture G-ball radius.
    pub mu: f64,
    /// Noise ball radius; the shrinkage threshold is `2 * delta`.
    pub delta: f64,
    /// Stop threshold on max-abs component change.
    pub eps: f64,
    /// Iteration cap.
    pub n_step: usize,
    /// Directions per pyramid scale, finest first.
    pub level_spec: Vec<usize>,
    /// Inner projector controls.
    pub inner: ChambolleOpts,
    pub noise_model: NoiseModel,
}

impl Default for DecompParams {
    fn default() -> Self {
        DecompParams {
            lambda: 10.0,
            mu: 100.0,
            delta: 20.0,
            eps: 0.5,
            n_step: 50,
            level_spec: vec![3, 3, 4],
            inner: ChambolleOpts::default(),
            noise_model: NoiseModel::Contourlet,
        }
    }
}

impl DecompParams {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("delta", self.delta),
            ("eps", self.eps),
        ] {
            if !(v > 0.0) && !(name == "delta" && v == 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.n_step == 0 {
            return Err(Error::invalid("n_step must be positive".to_string()));
        }
        if self.level_spec.is_empty() {
            return Err(Error::invalid("level spec must not be empty".to_string()));
        }
        Ok(())
    }
}

/// Per-iteration trace record.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub du: f64,
    pub dv: f64,
    pub dw: f64,
    /// Inner projector convergence flags for the v- and u-steps.
    pub inner_v_converged: bool,
    pub inner_u_converged: bool,
}

/// Result of the three-component decomposition.
#[derive(Debug, Clone)]
pub struct DecompResult {
    pub u: ImageGrid,
    pub v: ImageGrid,
    pub w: ImageGrid,
    /// `f - u - v - w`, the projection returned by the final u-step; it
    /// lies in the G-ball of radius lambda by construction.
    pub residual: ImageGrid,
    pub trace: Vec<IterationRecord>,
    pub iterations: usize,
    pub converged: bool,
    /// Dual witness of `v` (in the mu-ball).
    pub witness_v: DualField,
    /// Dual witness of the residual (in the lambda-ball).
    pub witness_residual: DualField,
    /// Largest |coefficient| in the shrinkage set that synthesizes `w`;
    /// bounded by `2 * delta` exactly.
    pub w_coeff_max: f64,
}

/// Step-5 stop test: all three max-abs differences at or below `eps`.
/// Always returns the three metrics alongside the verdict.
pub fn convergence_check(
    prev: (&ImageGrid, &ImageGrid, &ImageGrid),
    next: (&ImageGrid, &ImageGrid, &ImageGrid),
    eps: f64,
) -> Result<(bool, [f64; 3])> {
    for (a, b) in [(prev.0, next.0), (prev.1, next.1), (prev.2, next.2)] {
        if !a.same_shape(b) {
            return Err(Error::dimension(format!(
                "convergence_check shapes {}x{} vs {}x{}",
                a.width(),
                a.height(),
                b.width(),
                b.height()
            )));
        }
    }
    let metrics = [
        prev.0.max_abs_diff(next.0),
        prev.1.max_abs_diff(next.1),
        prev.2.max_abs_diff(next.2),
    ];
    Ok((metrics.iter().all(|&m| m <= eps), metrics))
}

/// The noise step: removes from `g` whatever soft thresholding at
/// `threshold` keeps. Returns (w, max |shrunk coefficient|).
fn noise_step(g: &ImageGrid, threshold: f64, params: &DecompParams) -> Result<(ImageGrid, f64)> {
    match params.noise_model {
        NoiseModel::Contourlet => {
            let coeffs = ct_analyze(g, &params.level_spec)?;
            let kept = soft_threshold_coeffs(&coeffs, threshold);
            let removed = clamp_residual_ct(&coeffs, &kept);
            let w = ct_synthesize(&removed)?;
            Ok((w, removed_max_ct(&removed)))
        }
        NoiseModel::Wavelet => {
            let depth = params.level_spec.len();
            let coeffs = dwt_analyze(g, depth, "db4")?;
            let removed = clamp_residual_dwt(&coeffs, threshold);
            let w = dwt_synthesize(&removed)?;
            Ok((w, removed_max_dwt(&removed)))
        }
    }
}

/// Coefficient set `c - soft(c, t)` (clamped coefficients, zero lowpass):
/// exactly the coefficients that synthesize the noise component.
fn clamp_residual_ct(orig: &ContourletCoeffs, kept: &ContourletCoeffs) -> ContourletCoeffs {
    ContourletCoeffs {
        lowpass: ImageGrid::new(orig.lowpass.width(), orig.lowpass.height()),
        scales: orig
            .scales
            .iter()
            .zip(&kept.scales)
            .map(|(o, k)| DirectionalSubbands {
                levels: o.levels,
                bands: o
                    .bands
                    .iter()
                    .zip(&k.bands)
                    .map(|(bo, bk)| bo.zip_map(bk, |c, s| c - s))
                    .collect(),
            })
            .collect(),
        level_spec: orig.level_spec.clone(),
        source_shape: orig.source_shape,
    }
}

fn removed_max_ct(removed: &ContourletCoeffs) -> f64 {
    removed.max_abs_directional()
}

fn clamp_residual_dwt(orig: &WaveletCoeffs, threshold: f64) -> WaveletCoeffs {
    WaveletCoeffs {
        approximation: ImageGrid::new(orig.approximation.width(), orig.approximation.height()),
        details: orig
            .details
            .iter()
            .map(|t| {
                [
                    t[0].map(|c| c.clamp(-threshold, threshold)),
                    t[1].map(|c| c.clamp(-threshold, threshold)),
                    t[2].map(|c| c.clamp(-threshold, threshold)),
                ]
            })
            .collect(),
        depth: orig.depth,
        filter_id: orig.filter_id,
    }
}

fn removed_max_dwt(removed: &WaveletCoeffs) -> f64 {
    removed.max_abs_detail()
}

/// Three-component decomposition by the boxed fixed-point alternation.
pub fn decompose_uvw(f: &ImageGrid, params: &DecompParams) -> Result<DecompResult> {
    params.validate()?;
    let (w_px, h_px) = (f.width(), f.height());
    let threshold = 2.0 * params.delta;

    let mut u = ImageGrid::new(w_px, h_px);
    let mut v = ImageGrid::new(w_px, h_px);
    let mut w = ImageGrid::new(w_px, h_px);
    let mut residual = ImageGrid::new(w_px, h_px);
    let mut witness_v = DualField::zeros(w_px, h_px, params.mu);
    let mut witness_residual = DualField::zeros(w_px, h_px, params.lambda);
    let mut w_coeff_max = 0.0;

    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..params.n_step {
        iterations += 1;
        let (u_prev, v_prev, w_prev) = (u.clone(), v.clone(), w.clone());

        // (2) noise step on g = f - u_n - v_n
        let g = f.sub(&u).sub(&v);
        let (w_next, coeff_max) = noise_step(&g, threshold, params)?;
        w = w_next;
        w_coeff_max = coeff_max;

        // (3) texture step: v = P_{G_mu}(f - u_n - w_{n+1})
        let (v_next, wit_v) = project_g(&f.sub(&u).sub(&w), params.mu, &params.inner)?;
        v = v_next;
        witness_v = wit_v;

        // (4) structure step: u = (f - v - w) - P_{G_lambda}(f - v - w)
        let r = f.sub(&v).sub(&w);
        let (proj, wit_r) = project_g(&r, params.lambda, &params.inner)?;
        u = r.sub(&proj);
        residual = proj;
        witness_residual = wit_r;

        debug_assert!(
            f.sub(&u).sub(&v).sub(&w).max_abs_diff(&residual) <= 1e-10,
            "additivity broken"
        );

        // (5) stop rule
        let (stop, metrics) =
            convergence_check((&u_prev, &v_prev, &w_prev), (&u, &v, &w), params.eps)?;
        trace.push(IterationRecord {
            du: metrics[0],
            dv: metrics[1],
            dw: metrics[2],
            inner_v_converged: witness_v.converged,
            inner_u_converged: witness_residual.converged,
        });
        if stop {
            converged = true;
            break;
        }
    }

    Ok(DecompResult {
        u,
        v,
        w,
        residual,
        trace,
        iterations,
        converged,
        witness_v,
        witness_residual,
        w_coeff_max,
    })
}

/// Result of the two-component decomposition.
#[derive(Debug, Clone)]
pub struct UvResult {
    pub u: ImageGrid,
    pub v: ImageGrid,
    pub residual: ImageGrid,
    pub trace: Vec<IterationRecord>,
    pub iterations: usize,
    pub converged: bool,
    pub witness_v: DualField,
    pub witness_residual: DualField,
}

/// Two-component (structures + textures) decomposition: the same alternation
/// without the noise step.
pub fn decompose_uv(
    f: &ImageGrid,
    lambda: f64,
    mu: f64,
    eps: f64,
    n_step: usize,
    inner: &ChambolleOpts,
) -> Result<UvResult> {
    if !(lambda > 0.0) || !(mu > 0.0) || !(eps > 0.0) {
        return Err(Error::invalid(
            "lambda, mu and eps must be positive".to_string(),
        ));
    }
    if n_step == 0 {
        return Err(Error::invalid("n_step must be positive".to_string()));
    }
    let (w_px, h_px) = (f.width(), f.height());
    let mut u = ImageGrid::new(w_px, h_px);
    let mut v = ImageGrid::new(w_px, h_px);
    let mut residual = ImageGrid::new(w_px, h_px);
    let mut witness_v = DualField::zeros(w_px, h_px, mu);
    let mut witness_residual = DualField::zeros(w_px, h_px, lambda);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let zero = ImageGrid::new(w_px, h_px);

    for _ in 0..n_step {
        iterations += 1;
        let (u_prev, v_prev) = (u.clone(), v.clone());

        let (v_next, wit_v) = project_g(&f.sub(&u), mu, inner)?;
        v = v_next;
        witness_v = wit_v;

        let r = f.sub(&v);
        let (proj, wit_r) = project_g(&r, lambda, inner)?;
        u = r.sub(&proj);
        residual = proj;
        witness_residual = wit_r;

        let (stop, metrics) = convergence_check((&u_prev, &v_prev, &zero), (&u, &v, &zero), eps)?;
        trace.push(IterationRecord {
            du: metrics[0],
            dv: metrics[1],
            dw: 0.0,
            inner_v_converged: witness_v.converged,
            inner_u_converged: witness_residual.converged,
        });
        if stop {
            converged = true;
            break;
        }
    }

    Ok(UvResult {
        u,
        v,
        residual,
        trace,
        iterations,
        converged,
        witness_v,
        witness_residual,
    })
}

/// Writes the per-iteration trace as CSV:
/// `iteration,du,dv,dw,inner_v_converged,inner_u_converged`.
pub fn write_trace_csv<W: Write>(trace: &[IterationRecord], mut out: W) -> Result<()> {
    writeln!(out, "iteration,du,dv,dw,inner_v_converged,inner_u_converged")?;
    for (i, rec) in trace.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            i + 1,
            rec.du,
            rec.dv,
            rec.dw,
            rec.inner_v_converged as u8,
            rec.inner_u_converged as u8
        )?;
    }
    Ok(())
}
