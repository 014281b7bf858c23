//! Full contourlet transform (pyramid + directional filter bank), coefficient
//! soft thresholding, contourlet-space norms, and a binary coefficient dump.

use std::io::{Read, Write};

use crate::dfb::{dfb_analyze, dfb_synthesize, DirectionalSubbands};
use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::lp::{lp_analyze, lp_synthesize, PyramidLevels};

/// Pyramid filter used by the transform compositions in this module.
const LP_FILTER: &str = "9-7";

/// Contourlet coefficients: lowpass approximation plus, per pyramid scale
/// (finest first), `2^{l_j}` directional subbands.
#[derive(Debug, Clone)]
pub struct ContourletCoeffs {
    pub lowpass: ImageGrid,
    /// Finest scale first, matching `level_spec`.
    pub scales: Vec<DirectionalSubbands>,
    pub level_spec: Vec<usize>,
    /// (width, height) of the analyzed image.
    pub source_shape: (usize, usize),
}

impl ContourletCoeffs {
    /// Total number of stored coefficients (directional + lowpass).
    pub fn total_samples(&self) -> usize {
        self.lowpass.len() + self.scales.iter().map(|s| s.total_samples()).sum::<usize>()
    }

    pub fn energy(&self) -> f64 {
        self.lowpass.energy() + self.scales.iter().map(|s| s.energy()).sum::<f64>()
    }

    /// Largest |coefficient| over all directional subbands.
    pub fn max_abs_directional(&self) -> f64 {
        self.scales
            .iter()
            .flat_map(|s| s.bands.iter())
            .fold(0.0, |m, b| m.max(b.max_abs()))
    }

    fn validate(&self) -> Result<()> {
        if self.scales.len() != self.level_spec.len() {
            return Err(Error::dimension(format!(
                "{} scales vs level spec of length {}",
                self.scales.len(),
                self.level_spec.len()
            )));
        }
        for (t, (scale, &lj)) in self.scales.iter().zip(&self.level_spec).enumerate() {
            if scale.bands.len() != (1usize << lj) {
                return Err(Error::dimension(format!(
                    "scale {t}: {} bands but l_j={lj}",
                    scale.bands.len()
                )));
            }
        }
        Ok(())
    }
}

/// Contourlet analysis: pyramid of depth `level_spec.len()`, then a
/// directional split of every bandpass level with its direction count
/// (finest scale first).
pub fn ct_analyze(img: &ImageGrid, level_spec: &[usize]) -> Result<ContourletCoeffs> {
    if level_spec.is_empty() {
        return Err(Error::invalid("level spec must not be empty".to_string()));
    }
    let pyramid = lp_analyze(img, level_spec.len(), LP_FILTER)?;
    let mut scales = Vec::with_capacity(level_spec.len());
    for (band, &lj) in pyramid.bandpass.iter().zip(level_spec) {
        scales.push(dfb_analyze(band, lj)?);
    }
    Ok(ContourletCoeffs {
        lowpass: pyramid.lowpass,
        scales,
        level_spec: level_spec.to_vec(),
        source_shape: (img.width(), img.height()),
    })
}

/// Contourlet synthesis: reassemble every scale's directional subbands,
/// then invert the pyramid.
pub fn ct_synthesize(coeffs: &ContourletCoeffs) -> Result<ImageGrid> {
    coeffs.validate()?;
    let (w, h) = coeffs.source_shape;
    let mut bandpass = Vec::with_capacity(coeffs.scales.len());
    for (t, scale) in coeffs.scales.iter().enumerate() {
        let shape = (w >> t, h >> t);
        bandpass.push(dfb_synthesize(scale, shape)?);
    }
    let levels = PyramidLevels {
        lowpass: coeffs.lowpass.clone(),
        bandpass,
        filter_id: LP_FILTER,
    };
    lp_synthesize(&levels)
}

/// Soft thresholding of a scalar: `sign(c) * max(|c| - t, 0)`.
pub fn soft_threshold_scalar(c: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    let mag = c.abs() - t;
    if mag > 0.0 {
        mag * c.signum()
    } else {
        0.0
    }
}

/// Applies soft thresholding to every directional coefficient; the lowpass
/// band is never thresholded.
pub fn soft_threshold_coeffs(coeffs: &ContourletCoeffs, threshold: f64) -> ContourletCoeffs {
    let scales = coeffs
        .scales
        .iter()
        .map(|scale| DirectionalSubbands {
            levels: scale.levels,
            bands: scale
                .bands
                .iter()
                .map(|b| b.map(|c| soft_threshold_scalar(c, threshold)))
                .collect(),
        })
        .collect();
    ContourletCoeffs {
        lowpass: coeffs.lowpass.clone(),
        scales,
        level_spec: coeffs.level_spec.clone(),
        source_shape: coeffs.source_shape,
    }
}

/// Contourlet soft thresholding: analyze, shrink every directional
/// coefficient by `threshold`, synthesize. Returns the image and the
/// thresholded ("kept") coefficients.
pub fn cst(
    img: &ImageGrid,
    threshold: f64,
    level_spec: &[usize],
) -> Result<(ImageGrid, ContourletCoeffs)> {
    if !(threshold >= 0.0) {
        return Err(Error::invalid(format!(
            "threshold must be >= 0, got {threshold}"
        )));
    }
    let coeffs = ct_analyze(img, level_spec)?;
    let kept = soft_threshold_coeffs(&coeffs, threshold);
    let result = ct_synthesize(&kept)?;
    Ok((result, kept))
}

/// Smallest side multiple a square image must have so that the pyramid and
/// every scale's directional split are well defined for `level_spec`.
pub fn required_side_multiple(level_spec: &[usize]) -> usize {
    let mut exp = level_spec.len();
    for (t, &lj) in level_spec.iter().enumerate() {
        exp = exp.max(t + lj.max(2));
    }
    1usize << exp
}

// ------------------------------------------------------------- Co norms

/// Parameters of the contourlet-space norms.
///
/// The discrete transform's scales map to j = `j_finest`, `j_finest - 1`,
/// ... with the finest stored scale first; relative to a unit-scale input
/// the conventional value is `j_finest = -1`.
#[derive(Debug, Clone, Copy)]
pub struct CoNormSpec {
    /// Smoothness index.
    pub s: f64,
    /// Inner exponent; in (0, inf], `f64::INFINITY` for the supremum form.
    pub p: f64,
    /// Outer exponent across scales; in (0, inf].
    pub q: f64,
    /// When true, evaluate the homogeneous form (no lowpass term).
    pub homogeneous: bool,
    /// Scale index assigned to the finest stored scale.
    pub j_finest: i32,
}

impl CoNormSpec {
    pub fn new(s: f64, p: f64, q: f64, homogeneous: bool) -> Self {
        CoNormSpec {
            s,
            p,
            q,
            homogeneous,
            j_finest: -1,
        }
    }
}

/// Weighted sequence norm of the coefficients: per scale j the directional
/// coefficients enter as `2^{j/2} |beta|` through an inner p-(quasi)norm,
/// scales combine through a q-(quasi)norm with weight `2^{j(d/2 - 1/p + s)}`
/// (d = 2), and the inhomogeneous form adds the unweighted p-norm of the
/// lowpass band. `p = inf` / `q = inf` take the supremum limit form.
pub fn co_norm(coeffs: &ContourletCoeffs, spec: &CoNormSpec) -> Result<f64> {
    if coeffs.scales.is_empty() {
        return Err(Error::invalid("empty coefficient structure".to_string()));
    }
    if !(spec.p > 0.0) || !(spec.q > 0.0) {
        return Err(Error::invalid(format!(
            "p and q must be positive, got p={} q={}",
            spec.p, spec.q
        )));
    }
    let inv_p = if spec.p.is_infinite() { 0.0 } else { 1.0 / spec.p };

    // Inner p-norm per scale of the weighted magnitudes 2^{j/2} |beta|.
    let mut scale_terms = Vec::with_capacity(coeffs.scales.len());
    for (t, scale) in coeffs.scales.iter().enumerate() {
        let j = spec.j_finest - t as i32;
        let coeff_weight = (2.0f64).powf(j as f64 / 2.0);
        let inner = if spec.p.is_infinite() {
            scale
                .bands
                .iter()
                .fold(0.0f64, |m, b| m.max(b.max_abs()))
                * coeff_weight
        } else {
            let mut acc = 0.0f64;
            for band in &scale.bands {
                for &c in band.as_slice() {
                    acc += (coeff_weight * c.abs()).powf(spec.p);
                }
            }
            acc.powf(inv_p)
        };
        let scale_weight = (2.0f64).powf(j as f64 * (1.0 - inv_p + spec.s));
        scale_terms.push(scale_weight * inner);
    }

    let directional = if spec.q.is_infinite() {
        scale_terms.iter().fold(0.0f64, |m, &x| m.max(x))
    } else {
        scale_terms
            .iter()
            .map(|x| x.powf(spec.q))
            .sum::<f64>()
            .powf(1.0 / spec.q)
    };

    if spec.homogeneous {
        return Ok(directional);
    }

    let lowpass = if spec.p.is_infinite() {
        coeffs.lowpass.max_abs()
    } else {
        coeffs
            .lowpass
            .as_slice()
            .iter()
            .map(|c| c.abs().powf(spec.p))
            .sum::<f64>()
            .powf(inv_p)
    };
    Ok(lowpass + directional)
}

// ----------------------------------------------------- coefficient dump

const COEFF_MAGIC: &[u8; 4] = b"CTC1";

/// Writes the coefficients in the bit-exact `CTC1` dump format:
/// magic, little-endian u32 width/height/scale count, per-scale `l_j`,
/// then per-band u32 dims + f64 samples, lowpass last.
pub fn write_coeffs<W: Write>(coeffs: &ContourletCoeffs, mut out: W) -> Result<()> {
    coeffs.validate()?;
    out.write_all(COEFF_MAGIC)?;
    let (w, h) = coeffs.source_shape;
    write_u32(&mut out, w as u32)?;
    write_u32(&mut out, h as u32)?;
    write_u32(&mut out, coeffs.scales.len() as u32)?;
    for &lj in &coeffs.level_spec {
        write_u32(&mut out, lj as u32)?;
    }
    for scale in &coeffs.scales {
        for band in &scale.bands {
            write_grid(&mut out, band)?;
        }
    }
    write_grid(&mut out, &coeffs.lowpass)?;
    Ok(())
}

/// Reads a `CTC1` dump written by [`write_coeffs`].
pub fn read_coeffs<R: Read>(mut input: R) -> Result<ContourletCoeffs> {
    let mut magic = [0u8; 4];
    input
        .read_exact(&mut magic)
        .map_err(|_| Error::format("unexpected end of data".to_string()))?;
    if &magic != COEFF_MAGIC {
        return Err(Error::format("not a CTC1 coefficient dump".to_string()));
    }
    let w = read_u32(&mut input)? as usize;
    let h = read_u32(&mut input)? as usize;
    let scale_count = read_u32(&mut input)? as usize;
    if scale_count > 64 {
        return Err(Error::format(format!("implausible scale count {scale_count}")));
    }
    let mut level_spec = Vec::with_capacity(scale_count);
    for _ in 0..scale_count {
        level_spec.push(read_u32(&mut input)? as usize);
    }
    let mut scales = Vec::with_capacity(scale_count);
    for &lj in &level_spec {
        let mut bands = Vec::with_capacity(1 << lj);
        for _ in 0..(1usize << lj) {
            bands.push(read_grid(&mut input)?);
        }
        scales.push(DirectionalSubbands { levels: lj, bands });
    }
    let lowpass = read_grid(&mut input)?;
    let coeffs = ContourletCoeffs {
        lowpass,
        scales,
        level_spec,
        source_shape: (w, h),
    };
    coeffs.validate()?;
    Ok(coeffs)
}

fn write_u32<W: Write>(out: &mut W, v: u32) -> Result<()> {
    out.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    input
        .read_exact(&mut buf)
        .map_err(|_| Error::format("unexpected end of data".to_string()))?;
    Ok(u32::from_le_bytes(buf))
}

fn write_grid<W: Write>(out: &mut W, grid: &ImageGrid) -> Result<()> {
    write_u32(out, grid.width() as u32)?;
    write_u32(out, grid.height() as u32)?;
    for &v in grid.as_slice() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_grid<R: Read>(input: &mut R) -> Result<ImageGrid> {
    let w = read_u32(input)? as usize;
    let h = read_u32(input)? as usize;
    if w * h > (1usize << 28) {
        return Err(Error::format(format!("implausible band size {w}x{h}")));
    }
    let mut data = Vec::with_capacity(w * h);
    let mut buf = [0u8; 8];
    for _ in 0..w * h {
        input
            .read_exact(&mut buf)
            .map_err(|_| Error::format("unexpected end of data".to_string()))?;
        data.push(f64::from_le_bytes(buf));
    }
    ImageGrid::from_vec(w, h, data)
}
