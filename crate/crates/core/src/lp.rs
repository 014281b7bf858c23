//! Laplacian pyramid: the multiscale front end of the contourlet transform.
//!
//! Analysis repeatedly lowpass-filters (separable, periodic extension),
//! downsamples by 2 per axis, re-expands and subtracts, so reconstruction is
//! exact by construction for any registered filter pair. The default pair is
//! the 9/7 biorthogonal lowpass set; a Haar orthogonal pair is registered for
//! stricter Parseval behavior, and synthesis switches to the dual-frame
//! (pseudo-inverse) rule for orthogonal-class filters.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::ImageGrid;

/// Analysis/synthesis lowpass pair used by the pyramid.
#[derive(Debug, Clone)]
pub struct PyramidFilter {
    pub id: &'static str,
    pub analysis: Vec<f64>,
    pub analysis_origin: usize,
    pub synthesis: Vec<f64>,
    pub synthesis_origin: usize,
    /// When true the pair satisfies filter-then-expand-then-filter = identity
    /// on the coarse grid, enabling the dual-frame reconstruction rule.
    pub orthogonal: bool,
}

/// 9/7 biorthogonal lowpass pair, sqrt(2) DC normalization. The DC gain is
/// what keeps the lowpass chain energy-exact for the mean component that
/// dominates real images; the l2 norm of the analysis filter (1.02) then
/// inflates zero-mean noise energy by ~3% at depth 3, the measured
/// deviation from an ideal tight frame.
const ANALYSIS_97: [f64; 9] = [
    0.037828455506995,
    -0.023849465019380,
    -0.110624404418423,
    0.377402855612654,
    0.852698679009403,
    0.377402855612654,
    -0.110624404418423,
    -0.023849465019380,
    0.037828455506995,
];
const SYNTHESIS_97: [f64; 7] = [
    -0.064538882628938,
    -0.040689417609558,
    0.418092273222212,
    0.788485616405664,
    0.418092273222212,
    -0.040689417609558,
    -0.064538882628938,
];

/// Looks up a registered filter pair by identifier.
pub fn pyramid_filter(id: &str) -> Result<&'static PyramidFilter> {
    static F97: OnceLock<PyramidFilter> = OnceLock::new();
    static FHAAR: OnceLock<PyramidFilter> = OnceLock::new();
    match id {
        "9-7" | "9/7" => Ok(F97.get_or_init(|| PyramidFilter {
            id: "9-7",
            analysis: ANALYSIS_97.to_vec(),
            analysis_origin: 4,
            synthesis: SYNTHESIS_97.to_vec(),
            synthesis_origin: 3,
            orthogonal: false,
        })),
        "haar" => Ok(FHAAR.get_or_init(|| {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            PyramidFilter {
                id: "haar",
                analysis: vec![s, s],
                analysis_origin: 1,
                synthesis: vec![s, s],
                synthesis_origin: 0,
                orthogonal: true,
            }
        })),
        other => Err(Error::invalid(format!("unknown pyramid filter {other:?}"))),
    }
}

/// Pyramid output: coarsest lowpass plus bandpass levels, finest first.
#[derive(Debug, Clone)]
pub struct PyramidLevels {
    pub lowpass: ImageGrid,
    pub bandpass: Vec<ImageGrid>,
    pub filter_id: &'static str,
}

impl PyramidLevels {
    pub fn depth(&self) -> usize {
        self.bandpass.len()
    }

    /// Total energy over all stored levels.
    pub fn energy(&self) -> f64 {
        self.lowpass.energy() + self.bandpass.iter().map(|b| b.energy()).sum::<f64>()
    }
}

/// Decomposes `img` into `depth` bandpass levels plus a lowpass residual.
/// Both dimensions must be divisible by `2^depth`.
pub fn lp_analyze(img: &ImageGrid, depth: usize, filter_id: &str) -> Result<PyramidLevels> {
    if depth == 0 {
        return Err(Error::invalid("pyramid depth must be >= 1".to_string()));
    }
    let factor = 1usize << depth;
    if img.width() % factor != 0 || img.height() % factor != 0 {
        return Err(Error::dimension(format!(
            "{}x{} not divisible by 2^{depth}",
            img.width(),
            img.height()
        )));
    }
    let filter = pyramid_filter(filter_id)?;
    let mut bandpass = Vec::with_capacity(depth);
    let mut current = img.clone();
    for _ in 0..depth {
        let coarse = lowpass_down(&current, filter);
        let expanded = expand_up(&coarse, filter, current.width(), current.height());
        bandpass.push(current.sub(&expanded));
        current = coarse;
    }
    Ok(PyramidLevels {
        lowpass: current,
        bandpass,
        filter_id: filter.id,
    })
}

/// Inverse of [`lp_analyze`]. For orthogonal-class filters the dual-frame
/// rule `x = b + expand(c - reduce(b))` is used; otherwise the direct rule
/// `x = b + expand(c)`.
pub fn lp_synthesize(levels: &PyramidLevels) -> Result<ImageGrid> {
    let filter = pyramid_filter(levels.filter_id)?;
    let mut current = levels.lowpass.clone();
    for band in levels.bandpass.iter().rev() {
        if band.width() != current.width() * 2 || band.height() != current.height() * 2 {
            return Err(Error::dimension(format!(
                "bandpass {}x{} inconsistent with coarse {}x{}",
                band.width(),
                band.height(),
                current.width(),
                current.height()
            )));
        }
        let coarse = if filter.orthogonal {
            current.sub(&lowpass_down(band, filter))
        } else {
            current
        };
        current = band.add(&expand_up(&coarse, filter, band.width(), band.height()));
    }
    Ok(current)
}

// ------------------------------------------------------- separable kernels

/// Periodic lowpass + 2x decimation along rows; output width is halved.
fn filter_down_rows(img: &ImageGrid, f: &[f64], origin: usize) -> ImageGrid {
    let (w, h) = (img.width(), img.height());
    let w2 = w / 2;
    let mut data = vec![0.0f64; w2 * h];
    data.par_chunks_mut(w2).enumerate().for_each(|(i, out_row)| {
        let row = img.row(i);
        for (m, out) in out_row.iter_mut().enumerate() {
            let base = 2 * m + origin;
            let mut acc = 0.0;
            for (k, &fk) in f.iter().enumerate() {
                let idx = (base + w * f.len() - k) % w;
                acc += fk * row[idx];
            }
            *out = acc;
        }
    });
    ImageGrid::from_vec(w2, h, data).expect("filter_down_rows shape")
}

/// Zero-stuffing 2x expansion + periodic filter along rows; output width is
/// doubled.
fn filter_up_rows(img: &ImageGrid, f: &[f64], origin: usize) -> ImageGrid {
    let (w, h) = (img.width(), img.height());
    let w2 = w * 2;
    let mut data = vec![0.0f64; w2 * h];
    data.par_chunks_mut(w2).enumerate().for_each(|(i, out_row)| {
        let row = img.row(i);
        for (n, out) in out_row.iter_mut().enumerate() {
            let mut acc = 0.0;
            // Only taps aligned with the even (stuffed) phase contribute.
            for (k, &fk) in f.iter().enumerate() {
                let idx = (n + origin + w2 * f.len()).wrapping_sub(k) % w2;
                if idx % 2 == 0 {
                    acc += fk * row[idx / 2];
                }
            }
            *out = acc;
        }
    });
    ImageGrid::from_vec(w2, h, data).expect("filter_up_rows shape")
}

fn transpose(img: &ImageGrid) -> ImageGrid {
    let (w, h) = (img.width(), img.height());
    let mut out = ImageGrid::new(h, w);
    for i in 0..h {
        for j in 0..w {
            out.set(j, i, img.get(i, j));
        }
    }
    out
}

/// Separable lowpass + decimation in both axes.
pub(crate) fn lowpass_down(img: &ImageGrid, filter: &PyramidFilter) -> ImageGrid {
    let rows = filter_down_rows(img, &filter.analysis, filter.analysis_origin);
    let cols = filter_down_rows(&transpose(&rows), &filter.analysis, filter.analysis_origin);
    transpose(&cols)
}

/// Separable expansion + synthesis filtering back to `out_w` x `out_h`.
pub(crate) fn expand_up(
    img: &ImageGrid,
    filter: &PyramidFilter,
    out_w: usize,
    out_h: usize,
) -> ImageGrid {
    debug_assert_eq!(out_w, img.width() * 2);
    debug_assert_eq!(out_h, img.height() * 2);
    let rows = filter_up_rows(img, &filter.synthesis, filter.synthesis_origin);
    let cols = filter_up_rows(&transpose(&rows), &filter.synthesis, filter.synthesis_origin);
    transpose(&cols)
}
