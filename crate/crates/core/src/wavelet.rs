//! Separable orthogonal wavelet transform and detail-band soft thresholding,
//! the comparison baseline for the directional noise model. Periodic
//! extension, exact Parseval for the orthogonal families.

use std::sync::OnceLock;

use crate::contourlet::soft_threshold_scalar;
use crate::error::{Error, Result};
use crate::grid::ImageGrid;

fn wavelet_filter(id: &str) -> Result<&'static [f64]> {
    static DB4: OnceLock<Vec<f64>> = OnceLock::new();
    static HAAR: OnceLock<Vec<f64>> = OnceLock::new();
    match id {
        "db4" => Ok(DB4.get_or_init(|| {
            let s3 = 3.0f64.sqrt();
            let d = 4.0 * 2.0f64.sqrt();
            vec![(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d]
        })),
        "haar" => Ok(HAAR.get_or_init(|| {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            vec![s, s]
        })),
        other => Err(Error::invalid(format!("unknown wavelet filter {other:?}"))),
    }
}

/// Highpass companion by alternating-sign reversal of the lowpass.
fn highpass_of(lowpass: &[f64]) -> Vec<f64> {
    let l = lowpass.len();
    (0..l)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * lowpass[l - 1 - k]
        })
        .collect()
}

/// Separable DWT output: approximation plus per-level detail triplets
/// (horizontal, vertical, diagonal), finest level first.
#[derive(Debug, Clone)]
pub struct WaveletCoeffs {
    pub approximation: ImageGrid,
    pub details: Vec<[ImageGrid; 3]>,
    pub depth: usize,
    pub filter_id: &'static str,
}

impl WaveletCoeffs {
    pub fn total_samples(&self) -> usize {
        self.approximation.len()
            + self
                .details
                .iter()
                .map(|d| d.iter().map(|b| b.len()).sum::<usize>())
                .sum::<usize>()
    }

    pub fn energy(&self) -> f64 {
        self.approximation.energy()
            + self
                .details
                .iter()
                .map(|d| d.iter().map(|b| b.energy()).sum::<f64>())
                .sum::<f64>()
    }

    pub fn max_abs_detail(&self) -> f64 {
        self.details
            .iter()
            .flat_map(|d| d.iter())
            .fold(0.0, |m, b| m.max(b.max_abs()))
    }
}

/// 1-D periodic analysis along each row; returns (approx, detail), each of
/// half width.
fn dwt_rows(img: &ImageGrid, low: &[f64], high: &[f64]) -> (ImageGrid, ImageGrid) {
    let (w, h) = (img.width(), img.height());
    let w2 = w / 2;
    let mut a = ImageGrid::new(w2, h);
    let mut d = ImageGrid::new(w2, h);
    for i in 0..h {
        let row = img.row(i);
        for m in 0..w2 {
            let mut sa = 0.0;
            let mut sd = 0.0;
            for (k, (&lo, &hi)) in low.iter().zip(high).enumerate() {
                let v = row[(2 * m + k) % w];
                sa += lo * v;
                sd += hi * v;
            }
            a.set(i, m, sa);
            d.set(i, m, sd);
        }
    }
    (a, d)
}

/// Inverse of [`dwt_rows`].
fn idwt_rows(a: &ImageGrid, d: &ImageGrid, low: &[f64], high: &[f64]) -> ImageGrid {
    let (w2, h) = (a.width(), a.height());
    let w = w2 * 2;
    let mut out = ImageGrid::new(w, h);
    for i in 0..h {
        for m in 0..w2 {
            let av = a.get(i, m);
            let dv = d.get(i, m);
            for (k, (&lo, &hi)) in low.iter().zip(high).enumerate() {
                let idx = (2 * m + k) % w;
                out.set(i, idx, out.get(i, idx) + lo * av + hi * dv);
            }
        }
    }
    out
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

/// Standard separable orthogonal DWT with periodic extension. Dimensions
/// must be divisible by `2^depth`.
pub fn dwt_analyze(img: &ImageGrid, depth: usize, filter_id: &str) -> Result<WaveletCoeffs> {
    if depth == 0 {
        return Err(Error::invalid("wavelet depth must be >= 1".to_string()));
    }
    let factor = 1usize << depth;
    if img.width() % factor != 0 || img.height() % factor != 0 {
        return Err(Error::dimension(format!(
            "{}x{} not divisible by 2^{depth}",
            img.width(),
            img.height()
        )));
    }
    let low = wavelet_filter(filter_id)?;
    let high = highpass_of(low);
    let filter_id = match filter_id {
        "db4" => "db4",
        _ => "haar",
    };
    let mut details = Vec::with_capacity(depth);
    let mut approx = img.clone();
    for _ in 0..depth {
        // rows first, then columns of both outputs
        let (lo_r, hi_r) = dwt_rows(&approx, low, &high);
        let (ll_t, lh_t) = dwt_rows(&transpose(&lo_r), low, &high);
        let (hl_t, hh_t) = dwt_rows(&transpose(&hi_r), low, &high);
        let ll = transpose(&ll_t);
        let lh = transpose(&lh_t); // low cols of detail rows: horizontal edges
        let hl = transpose(&hl_t);
        let hh = transpose(&hh_t);
        details.push([hl, lh, hh]);
        approx = ll;
    }
    Ok(WaveletCoeffs {
        approximation: approx,
        details,
        depth,
        filter_id,
    })
}

/// Inverse of [`dwt_analyze`].
pub fn dwt_synthesize(coeffs: &WaveletCoeffs) -> Result<ImageGrid> {
    let low = wavelet_filter(coeffs.filter_id)?;
    let high = highpass_of(low);
    let mut approx = coeffs.approximation.clone();
    for triple in coeffs.details.iter().rev() {
        let [hl, lh, hh] = triple;
        if !hl.same_shape(&approx) || !lh.same_shape(&approx) || !hh.same_shape(&approx) {
            return Err(Error::dimension(
                "detail bands inconsistent with approximation".to_string(),
            ));
        }
        let lo_r = transpose(&idwt_rows(&transpose(&approx), &transpose(lh), low, &high));
        let hi_r = transpose(&idwt_rows(&transpose(hl), &transpose(hh), low, &high));
        approx = idwt_rows(&lo_r, &hi_r, low, &high);
    }
    Ok(approx)
}

/// Wavelet soft thresholding: detail bands shrunk by `threshold`, the
/// approximation untouched.
pub fn wst(img: &ImageGrid, threshold: f64, depth: usize) -> Result<ImageGrid> {
    let (out, _) = wst_with_coeffs(img, threshold, depth)?;
    Ok(out)
}

/// As [`wst`] but also returns the thresholded coefficients.
pub fn wst_with_coeffs(
    img: &ImageGrid,
    threshold: f64,
    depth: usize,
) -> Result<(ImageGrid, WaveletCoeffs)> {
    if !(threshold >= 0.0) {
        return Err(Error::invalid(format!(
            "threshold must be >= 0, got {threshold}"
        )));
    }
    let coeffs = dwt_analyze(img, depth, "db4")?;
    let kept = WaveletCoeffs {
        approximation: coeffs.approximation.clone(),
        details: coeffs
            .details
            .iter()
            .map(|t| {
                [
                    t[0].map(|c| soft_threshold_scalar(c, threshold)),
                    t[1].map(|c| soft_threshold_scalar(c, threshold)),
                    t[2].map(|c| soft_threshold_scalar(c, threshold)),
                ]
            })
            .collect(),
        depth: coeffs.depth,
        filter_id: coeffs.filter_id,
    };
    let out = dwt_synthesize(&kept)?;
    Ok((out, kept))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Xoshiro256pp;

    #[test]
    fn roundtrip_depth_3() {
        let mut rng = Xoshiro256pp::new(60);
        for filter in ["db4", "haar"] {
            let img = ImageGrid::random_uniform(64, 64, 0.0, 255.0, rng.next_u64());
            let coeffs = dwt_analyze(&img, 3, filter).unwrap();
            assert_eq!(coeffs.total_samples(), img.len());
            let back = dwt_synthesize(&coeffs).unwrap();
            let err = back.max_abs_diff(&img);
            assert!(err <= 1e-10, "{filter}: PR error {err}");
        }
    }

    #[test]
    fn parseval_for_orthogonal_filters() {
        let mut rng = Xoshiro256pp::new(61);
        for filter in ["db4", "haar"] {
            let img = ImageGrid::random_uniform(64, 64, -1.0, 1.0, rng.next_u64());
            let coeffs = dwt_analyze(&img, 3, filter).unwrap();
            let ratio = coeffs.energy() / img.energy();
            assert!(
                (ratio - 1.0).abs() <= 1e-10,
                "{filter}: energy ratio {ratio}"
            );
        }
    }

    #[test]
    fn constant_image_has_zero_details() {
        let img = ImageGrid::constant(32, 32, 120.0);
        let coeffs = dwt_analyze(&img, 3, "db4").unwrap();
        assert!(coeffs.max_abs_detail() <= 1e-10);
    }

    #[test]
    fn wst_zero_threshold_is_identity() {
        let img = ImageGrid::random_uniform(64, 64, 0.0, 255.0, 62);
        let out = wst(&img, 0.0, 3).unwrap();
        assert!(out.max_abs_diff(&img) <= 1e-10);
    }

    #[test]
    fn wst_huge_threshold_leaves_approximation_only() {
        let img = ImageGrid::random_uniform(64, 64, 0.0, 255.0, 63);
        let coeffs = dwt_analyze(&img, 3, "db4").unwrap();
        let t = coeffs.max_abs_detail();
        let (out, kept) = wst_with_coeffs(&img, t, 3).unwrap();
        assert_eq!(kept.max_abs_detail(), 0.0);
        let approx_only = WaveletCoeffs {
            approximation: coeffs.approximation.clone(),
            details: coeffs
                .details
                .iter()
                .map(|t| {
                    [
                        ImageGrid::new(t[0].width(), t[0].height()),
                        ImageGrid::new(t[1].width(), t[1].height()),
                        ImageGrid::new(t[2].width(), t[2].height()),
                    ]
                })
                .collect(),
            depth: coeffs.depth,
            filter_id: coeffs.filter_id,
        };
        let reference = dwt_synthesize(&approx_only).unwrap();
        assert!(out.max_abs_diff(&reference) <= 1e-10);
    }

    #[test]
    fn wst_clamp_identity() {
        let img = ImageGrid::random_uniform(64, 64, 0.0, 255.0, 64);
        let t = 9.0;
        let coeffs = dwt_analyze(&img, 2, "db4").unwrap();
        let (_, kept) = wst_with_coeffs(&img, t, 2).unwrap();
        for (orig, thr) in coeffs.details.iter().zip(&kept.details) {
            for (bo, bt) in orig.iter().zip(thr) {
                for (&c, &k) in bo.as_slice().iter().zip(bt.as_slice()) {
                    assert_eq!(c - k, c.clamp(-t, t));
                    assert!(k.abs() <= c.abs());
                }
            }
        }
    }

    #[test]
    fn rejects_indivisible_dimensions() {
        assert!(dwt_analyze(&ImageGrid::new(48, 48), 5, "db4").is_err());
        assert!(dwt_analyze(&ImageGrid::new(48, 48), 4, "db4").is_ok());
    }
}
