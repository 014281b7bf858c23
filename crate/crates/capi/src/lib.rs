//! C ABI over the decomposition library: opaque handles, status codes, and
//! plain-old-data parameter structs. The header is generated into
//! `include/ctdecomp.h` by the build script.
//!
//! Ownership rules: every `*mut` handle returned through an out-parameter
//! is owned by the caller and must be released with the matching `_free`
//! function; input handles are borrowed and never freed by the library.

use std::ffi::CStr;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use ctdecomp::decompose::{decompose_uvw, DecompParams, NoiseModel};
use ctdecomp::grid::{add_gaussian_noise, psnr, ImageGrid, NoiseSpec};
use ctdecomp::io::{load_image, save_image};
use ctdecomp::tv::ChambolleOpts;
use ctdecomp::{ct_analyze, ct_synthesize, Error};

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtdStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A parameter was out of range or structurally invalid.
    InvalidArgument = 2,
    /// File could not be read or written.
    IoError = 3,
    /// File contents or dimensions were not understood.
    FormatError = 4,
    /// Shapes are incompatible with the requested operation.
    DimensionError = 5,
    /// A computation produced a non-finite value or panicked.
    NumericalError = 6,
}

fn status_of(err: &Error) -> CtdStatus {
    match err {
        Error::Io(_) => CtdStatus::IoError,
        Error::Format(_) => CtdStatus::FormatError,
        Error::Dimension(_) => CtdStatus::DimensionError,
        Error::InvalidArgument(_) => CtdStatus::InvalidArgument,
    }
}

/// Opaque grayscale image handle (row-major f64 samples).
pub struct CtdImage(ImageGrid);

/// Which transform models the noise component.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtdNoiseModel {
    Contourlet = 0,
    Wavelet = 1,
}

/// Decomposition parameters. `levels` points at `levels_len` direction
/// exponents (finest scale first); pass null/0 for the default 3,3,4.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CtdDecompParams {
    pub lambda: f64,
    pub mu: f64,
    pub delta: f64,
    pub eps: f64,
    pub n_step: u32,
    pub levels: *const u32,
    pub levels_len: usize,
    pub noise_model: CtdNoiseModel,
}

/// Opaque result handle of a decomposition.
pub struct CtdDecomposition {
    result: ctdecomp::DecompResult,
}

/// Component selector for [`ctd_decomposition_component`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtdComponent {
    Structures = 0,
    Textures = 1,
    Noise = 2,
    Residual = 3,
}

// ------------------------------------------------------------- images

/// Creates an image from `width * height` row-major samples.
/// Returns null when `data` is null or the sizes are zero.
#[no_mangle]
pub unsafe extern "C" fn ctd_image_create(
    width: usize,
    height: usize,
    data: *const f64,
) -> *mut CtdImage {
    if data.is_null() || width == 0 || height == 0 {
        return std::ptr::null_mut();
    }
    let slice = std::slice::from_raw_parts(data, width * height);
    match ImageGrid::from_vec(width, height, slice.to_vec()) {
        Ok(img) => Box::into_raw(Box::new(CtdImage(img))),
        Err(_) => std::ptr::null_mut(),
    }
}

/// Creates an all-zero image. Returns null when a size is zero.
#[no_mangle]
pub extern "C" fn ctd_image_zeros(width: usize, height: usize) -> *mut CtdImage {
    if width == 0 || height == 0 {
        return std::ptr::null_mut();
    }
    Box::into_raw(Box::new(CtdImage(ImageGrid::new(width, height))))
}

#[no_mangle]
pub unsafe extern "C" fn ctd_image_width(img: *const CtdImage) -> usize {
    img.as_ref().map_or(0, |i| i.0.width())
}

#[no_mangle]
pub unsafe extern "C" fn ctd_image_height(img: *const CtdImage) -> usize {
    img.as_ref().map_or(0, |i| i.0.height())
}

/// Copies the samples into `out`, which must hold `width * height` values.
#[no_mangle]
pub unsafe extern "C" fn ctd_image_copy_data(
    img: *const CtdImage,
    out: *mut f64,
    out_len: usize,
) -> CtdStatus {
    let Some(img) = img.as_ref() else {
        return CtdStatus::NullArgument;
    };
    if out.is_null() {
        return CtdStatus::NullArgument;
    }
    if out_len != img.0.len() {
        return CtdStatus::DimensionError;
    }
    std::ptr::copy_nonoverlapping(img.0.as_slice().as_ptr(), out, out_len);
    CtdStatus::Ok
}

#[no_mangle]
pub unsafe extern "C" fn ctd_image_free(img: *mut CtdImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// Loads an 8-bit grayscale PGM or PNG file.
#[no_mangle]
pub unsafe extern "C" fn ctd_image_load(
    path: *const c_char,
    out: *mut *mut CtdImage,
) -> CtdStatus {
    if path.is_null() || out.is_null() {
        return CtdStatus::NullArgument;
    }
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        return CtdStatus::InvalidArgument;
    };
    match catch_unwind(|| load_image(path)) {
        Ok(Ok(img)) => {
            *out = Box::into_raw(Box::new(CtdImage(img)));
            CtdStatus::Ok
        }
        Ok(Err(e)) => status_of(&e),
        Err(_) => CtdStatus::NumericalError,
    }
}

/// Saves as 8-bit grayscale, quantizing to `round(clamp(x + offset, 0, 255))`;
/// the format follows the file extension (.pgm or .png).
#[no_mangle]
pub unsafe extern "C" fn ctd_image_save(
    img: *const CtdImage,
    path: *const c_char,
    offset: f64,
) -> CtdStatus {
    let Some(img) = img.as_ref() else {
        return CtdStatus::NullArgument;
    };
    if path.is_null() {
        return CtdStatus::NullArgument;
    }
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        return CtdStatus::InvalidArgument;
    };
    match catch_unwind(AssertUnwindSafe(|| save_image(&img.0, path, offset))) {
        Ok(Ok(())) => CtdStatus::Ok,
        Ok(Err(e)) => status_of(&e),
        Err(_) => CtdStatus::NumericalError,
    }
}

// ---------------------------------------------------------- operations

/// Adds seeded Gaussian noise (standard deviation `sigma`); the stream is
/// fixed, so identical arguments produce bit-identical images.
#[no_mangle]
pub unsafe extern "C" fn ctd_add_gaussian_noise(
    img: *const CtdImage,
    sigma: f64,
    seed: u64,
    out: *mut *mut CtdImage,
) -> CtdStatus {
    let Some(img) = img.as_ref() else {
        return CtdStatus::NullArgument;
    };
    if out.is_null() {
        return CtdStatus::NullArgument;
    }
    let spec = match NoiseSpec::new(sigma, seed) {
        Ok(s) => s,
        Err(e) => return status_of(&e),
    };
    *out = Box::into_raw(Box::new(CtdImage(add_gaussian_noise(&img.0, &spec))));
    CtdStatus::Ok
}

/// Peak signal-to-noise ratio in dB; equal images yield +infinity.
#[no_mangle]
pub unsafe extern "C" fn ctd_psnr(
    a: *const CtdImage,
    b: *const CtdImage,
    peak: f64,
    out: *mut f64,
) -> CtdStatus {
    let (Some(a), Some(b)) = (a.as_ref(), b.as_ref()) else {
        return CtdStatus::NullArgument;
    };
    if out.is_null() {
        return CtdStatus::NullArgument;
    }
    match psnr(&a.0, &b.0, peak) {
        Ok(v) => {
            *out = v;
            CtdStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Transform self-test on a seeded random image: writes the perfect
/// reconstruction error and the coefficient/image energy ratio.
#[no_mangle]
pub unsafe extern "C" fn ctd_check_transform(
    size: usize,
    levels: *const u32,
    levels_len: usize,
    seed: u64,
    out_pr_error: *mut f64,
    out_energy_ratio: *mut f64,
) -> CtdStatus {
    if levels.is_null() || out_pr_error.is_null() || out_energy_ratio.is_null() {
        return CtdStatus::NullArgument;
    }
    let spec: Vec<usize> = std::slice::from_raw_parts(levels, levels_len)
        .iter()
        .map(|&l| l as usize)
        .collect();
    let go = || -> Result<(f64, f64), Error> {
        let img = ImageGrid::random_uniform(size, size, 0.0, 255.0, seed);
        let coeffs = ct_analyze(&img, &spec)?;
        let back = ct_synthesize(&coeffs)?;
        Ok((back.max_abs_diff(&img), coeffs.energy() / img.energy()))
    };
    match catch_unwind(go) {
        Ok(Ok((pr, ratio))) => {
            *out_pr_error = pr;
            *out_energy_ratio = ratio;
            CtdStatus::Ok
        }
        Ok(Err(e)) => status_of(&e),
        Err(_) => CtdStatus::NumericalError,
    }
}

/// Runs the structures + textures + noise decomposition.
#[no_mangle]
pub unsafe extern "C" fn ctd_decompose(
    img: *const CtdImage,
    params: *const CtdDecompParams,
    out: *mut *mut CtdDecomposition,
) -> CtdStatus {
    let Some(img) = img.as_ref() else {
        return CtdStatus::NullArgument;
    };
    let Some(params) = params.as_ref() else {
        return CtdStatus::NullArgument;
    };
    if out.is_null() {
        return CtdStatus::NullArgument;
    }
    let level_spec: Vec<usize> = if params.levels.is_null() || params.levels_len == 0 {
        vec![3, 3, 4]
    } else {
        std::slice::from_raw_parts(params.levels, params.levels_len)
            .iter()
            .map(|&l| l as usize)
            .collect()
    };
    let rust_params = DecompParams {
        lambda: params.lambda,
        mu: params.mu,
        delta: params.delta,
        eps: params.eps,
        n_step: params.n_step as usize,
        level_spec,
        inner: ChambolleOpts::default(),
        noise_model: match params.noise_model {
            CtdNoiseModel::Contourlet => NoiseModel::Contourlet,
            CtdNoiseModel::Wavelet => NoiseModel::Wavelet,
        },
    };
    match catch_unwind(AssertUnwindSafe(|| decompose_uvw(&img.0, &rust_params))) {
        Ok(Ok(result)) => {
            if [&result.u, &result.v, &result.w, &result.residual]
                .iter()
                .any(|g| g.has_non_finite())
            {
                return CtdStatus::NumericalError;
            }
            *out = Box::into_raw(Box::new(CtdDecomposition { result }));
            CtdStatus::Ok
        }
        Ok(Err(e)) => status_of(&e),
        Err(_) => CtdStatus::NumericalError,
    }
}

/// Clones one component out of a decomposition.
#[no_mangle]
pub unsafe extern "C" fn ctd_decomposition_component(
    dec: *const CtdDecomposition,
    which: CtdComponent,
    out: *mut *mut CtdImage,
) -> CtdStatus {
    let Some(dec) = dec.as_ref() else {
        return CtdStatus::NullArgument;
    };
    if out.is_null() {
        return CtdStatus::NullArgument;
    }
    let img = match which {
        CtdComponent::Structures => &dec.result.u,
        CtdComponent::Textures => &dec.result.v,
        CtdComponent::Noise => &dec.result.w,
        CtdComponent::Residual => &dec.result.residual,
    };
    *out = Box::into_raw(Box::new(CtdImage(img.clone())));
    CtdStatus::Ok
}

#[no_mangle]
pub unsafe extern "C" fn ctd_decomposition_iterations(dec: *const CtdDecomposition) -> u32 {
    dec.as_ref().map_or(0, |d| d.result.iterations as u32)
}

#[no_mangle]
pub unsafe extern "C" fn ctd_decomposition_converged(dec: *const CtdDecomposition) -> bool {
    dec.as_ref().is_some_and(|d| d.result.converged)
}

#[no_mangle]
pub unsafe extern "C" fn ctd_decomposition_free(dec: *mut CtdDecomposition) {
    if !dec.is_null() {
        drop(Box::from_raw(dec));
    }
}
