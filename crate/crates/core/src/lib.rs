//! Grayscale image decomposition into structures + textures + noise.
//!
//! The decomposition minimizes a three-term variational model by a
//! fixed-point alternation built on three kernels: a dual-ascent projector
//! onto G-norm balls (structures/textures), a perfect-reconstruction
//! contourlet transform (multiscale directional analysis), and soft
//! thresholding of directional coefficients (noise). A separable wavelet
//! baseline is included for comparison, plus PGM/PNG I/O, seeded noise
//! injection, and quality metrics.

pub mod contourlet;
pub mod decompose;
pub mod dfb;
pub mod error;
pub mod grid;
pub mod io;
pub mod lp;
pub mod rng;
pub mod tv;
pub mod wavelet;

pub use contourlet::{
    co_norm, ct_analyze, ct_synthesize, cst, read_coeffs, soft_threshold_coeffs,
    soft_threshold_scalar, write_coeffs, CoNormSpec, ContourletCoeffs,
};
pub use decompose::{
    convergence_check, decompose_uv, decompose_uvw, write_trace_csv, DecompParams, DecompResult,
    IterationRecord, NoiseModel, UvResult,
};
pub use dfb::{dfb_analyze, dfb_synthesize, DirectionalSubbands};
pub use error::{Error, Result};
pub use grid::{add_gaussian_noise, psnr, ImageGrid, NoiseSpec};
pub use io::{load_image, save_image};
pub use lp::{lp_analyze, lp_synthesize, pyramid_filter, PyramidFilter, PyramidLevels};
pub use tv::{divergence, gradient, project_g, ChambolleOpts, DualField};
pub use wavelet::{dwt_analyze, dwt_synthesize, wst, WaveletCoeffs};
