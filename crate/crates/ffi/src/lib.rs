//! C ABI over `siqa-core`.
//!
//! Every function returns a [`SiqaStatus`]; on failure a message for the
//! calling thread is available from [`siqa_last_error_message`]. Objects are
//! opaque handles created by `siqa_*_load` / `siqa_*_create` style calls and
//! released with the matching `siqa_*_free`. Images are row-major `double`
//! buffers with values in `[0, 1]`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use siqa::fusion::DisparityMethod;
use siqa::model::load_model;
use siqa::{
    extract_contrast_features, extract_phase_features, predict, synthesize_pair, Error, FeatureKind, FeatureVector,
    FusedImages, FusionParams, GrayImage, Matrix, StackedModel,
};

/// Number of phase features written by [`siqa_extract_features`].
pub const SIQA_PHASE_FEATURES: usize = 40;
/// Number of contrast features written by [`siqa_extract_features`].
pub const SIQA_CONTRAST_FEATURES: usize = 36;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiqaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Degenerate = 3,
    Io = 4,
    Parse = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiqaDisparity {
    Phase = 0,
    Block = 1,
}

/// Fusion settings. A `mu_sigma` of zero or less selects the default of one
/// grating period.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SiqaFusionParams {
    pub g: f64,
    pub f_s: f64,
    pub pixels_per_degree: f64,
    pub mu_sigma: f64,
    pub c1: f64,
    pub disparity: SiqaDisparity,
}

impl From<FusionParams> for SiqaFusionParams {
    fn from(p: FusionParams) -> Self {
        SiqaFusionParams {
            g: p.g,
            f_s: p.f_s,
            pixels_per_degree: p.pixels_per_degree,
            mu_sigma: p.mu_sigma.unwrap_or(0.0),
            c1: p.c1,
            disparity: match p.disparity {
                DisparityMethod::Phase => SiqaDisparity::Phase,
                DisparityMethod::Block => SiqaDisparity::Block,
            },
        }
    }
}

impl From<&SiqaFusionParams> for FusionParams {
    fn from(p: &SiqaFusionParams) -> Self {
        FusionParams {
            g: p.g,
            f_s: p.f_s,
            pixels_per_degree: p.pixels_per_degree,
            mu_sigma: (p.mu_sigma > 0.0).then_some(p.mu_sigma),
            c1: p.c1,
            disparity: match p.disparity {
                SiqaDisparity::Phase => DisparityMethod::Phase,
                SiqaDisparity::Block => DisparityMethod::Block,
            },
        }
    }
}

/// Grayscale image handle.
pub struct SiqaImage(GrayImage);

/// Fused contrast and phase images.
pub struct SiqaFused(FusedImages);

/// Trained stacked model.
pub struct SiqaModel(StackedModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(SiqaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidArgument(_) => SiqaStatus::InvalidArgument,
            Error::Degenerate(_) => SiqaStatus::Degenerate,
            Error::Io { .. } | Error::Image { .. } => SiqaStatus::Io,
            Error::Parse { .. } => SiqaStatus::Parse,
        };
        Failure(status, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(SiqaStatus::NullPointer, format!("{name} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SiqaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SiqaStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SiqaStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    unsafe { p.as_ref() }.ok_or_else(|| null(name))
}

unsafe fn path_arg(p: *const c_char) -> Result<String, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Failure(SiqaStatus::InvalidArgument, "path is not UTF-8".into()))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

/// Message describing the last failed call on this thread, or null. Valid
/// until the next call on the same thread.
#[no_mangle]
pub extern "C" fn siqa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub unsafe extern "C" fn siqa_fusion_params_default(out: *mut SiqaFusionParams) -> SiqaStatus {
    guard(|| {
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = FusionParams::default().into();
        Ok(())
    })
}

/// Copies `width * height` values from `data` into a new image.
#[no_mangle]
pub unsafe extern "C" fn siqa_image_from_buffer(
    data: *const f64,
    width: usize,
    height: usize,
    out: *mut *mut SiqaImage,
) -> SiqaStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        let n = width.checked_mul(height).ok_or_else(|| Failure(SiqaStatus::InvalidArgument, "size overflows".into()))?;
        let values = unsafe { std::slice::from_raw_parts(data, n) }.to_vec();
        let img = GrayImage::new(Matrix::from_vec(height, width, values)?)?;
        unsafe { put(out, SiqaImage(img)) }
    })
}

/// Loads an 8- or 16-bit PNG, converting to grayscale.
#[no_mangle]
pub unsafe extern "C" fn siqa_image_load(path: *const c_char, out: *mut *mut SiqaImage) -> SiqaStatus {
    guard(|| {
        let path = unsafe { path_arg(path) }?;
        let img = GrayImage::load(path)?;
        unsafe { put(out, SiqaImage(img)) }
    })
}

#[no_mangle]
pub unsafe extern "C" fn siqa_image_size(image: *const SiqaImage, width: *mut usize, height: *mut usize) -> SiqaStatus {
    guard(|| {
        let img = unsafe { as_ref(image, "image") }?;
        if width.is_null() || height.is_null() {
            return Err(null("width/height"));
        }
        unsafe {
            *width = img.0.width();
            *height = img.0.height();
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn siqa_image_free(image: *mut SiqaImage) {
    if !image.is_null() {
        drop(unsafe { Box::from_raw(image) });
    }
}

/// Fuses a stereo pair. `params` may be null for the defaults.
#[no_mangle]
pub unsafe extern "C" fn siqa_synthesize(
    left: *const SiqaImage,
    right: *const SiqaImage,
    params: *const SiqaFusionParams,
    out: *mut *mut SiqaFused,
) -> SiqaStatus {
    guard(|| {
        let l = unsafe { as_ref(left, "left") }?;
        let r = unsafe { as_ref(right, "right") }?;
        let p = unsafe { params.as_ref() }.map(FusionParams::from).unwrap_or_default();
        let fused = synthesize_pair(&l.0, &r.0, &p)?;
        unsafe { put(out, SiqaFused(fused)) }
    })
}

#[no_mangle]
pub unsafe extern "C" fn siqa_fused_size(fused: *const SiqaFused, width: *mut usize, height: *mut usize) -> SiqaStatus {
    guard(|| {
        let f = unsafe { as_ref(fused, "fused") }?;
        if width.is_null() || height.is_null() {
            return Err(null("width/height"));
        }
        let (h, w) = f.0.contrast.shape();
        unsafe {
            *width = w;
            *height = h;
        }
        Ok(())
    })
}

fn copy_out(m: &Matrix, out: *mut f64, len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    let src = m.as_slice();
    if len < src.len() {
        return Err(Failure(SiqaStatus::BufferTooSmall, format!("buffer holds {len} values, need {}", src.len())));
    }
    unsafe { ptr::copy_nonoverlapping(src.as_ptr(), out, src.len()) };
    Ok(())
}

/// Copies the fused contrast image (row-major) into `out`.
#[no_mangle]
pub unsafe extern "C" fn siqa_fused_contrast(fused: *const SiqaFused, out: *mut f64, len: usize) -> SiqaStatus {
    guard(|| copy_out(&unsafe { as_ref(fused, "fused") }?.0.contrast, out, len))
}

/// Copies the fused phase image (row-major, radians) into `out`.
#[no_mangle]
pub unsafe extern "C" fn siqa_fused_phase(fused: *const SiqaFused, out: *mut f64, len: usize) -> SiqaStatus {
    guard(|| copy_out(&unsafe { as_ref(fused, "fused") }?.0.phase, out, len))
}

#[no_mangle]
pub unsafe extern "C" fn siqa_fused_free(fused: *mut SiqaFused) {
    if !fused.is_null() {
        drop(unsafe { Box::from_raw(fused) });
    }
}

/// Writes `SIQA_PHASE_FEATURES` values to `phase_out` and
/// `SIQA_CONTRAST_FEATURES` values to `contrast_out`.
#[no_mangle]
pub unsafe extern "C" fn siqa_extract_features(
    fused: *const SiqaFused,
    phase_out: *mut f64,
    contrast_out: *mut f64,
) -> SiqaStatus {
    guard(|| {
        let f = unsafe { as_ref(fused, "fused") }?;
        if phase_out.is_null() || contrast_out.is_null() {
            return Err(null("feature buffer"));
        }
        let ph = extract_phase_features(&f.0.phase)?;
        let co = extract_contrast_features(&f.0.contrast)?;
        unsafe {
            ptr::copy_nonoverlapping(ph.values().as_ptr(), phase_out, SIQA_PHASE_FEATURES);
            ptr::copy_nonoverlapping(co.values().as_ptr(), contrast_out, SIQA_CONTRAST_FEATURES);
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn siqa_model_load(path: *const c_char, out: *mut *mut SiqaModel) -> SiqaStatus {
    guard(|| {
        let path = unsafe { path_arg(path) }?;
        let model = load_model(path)?;
        unsafe { put(out, SiqaModel(model)) }
    })
}

/// Predicts a quality score from precomputed features.
#[no_mangle]
pub unsafe extern "C" fn siqa_model_predict(
    model: *const SiqaModel,
    phase: *const f64,
    contrast: *const f64,
    out: *mut f64,
) -> SiqaStatus {
    guard(|| {
        let m = unsafe { as_ref(model, "model") }?;
        if phase.is_null() || contrast.is_null() || out.is_null() {
            return Err(null("feature or output pointer"));
        }
        let ph = unsafe { std::slice::from_raw_parts(phase, SIQA_PHASE_FEATURES) }.to_vec();
        let co = unsafe { std::slice::from_raw_parts(contrast, SIQA_CONTRAST_FEATURES) }.to_vec();
        let score = predict(
            &m.0,
            &FeatureVector::new(FeatureKind::Phase, ph)?,
            &FeatureVector::new(FeatureKind::Contrast, co)?,
        )?;
        unsafe { *out = score };
        Ok(())
    })
}

/// Fuses, extracts and predicts in one call. `params` may be null.
#[no_mangle]
pub unsafe extern "C" fn siqa_model_score_pair(
    model: *const SiqaModel,
    left: *const SiqaImage,
    right: *const SiqaImage,
    params: *const SiqaFusionParams,
    out: *mut f64,
) -> SiqaStatus {
    guard(|| {
        let m = unsafe { as_ref(model, "model") }?;
        let l = unsafe { as_ref(left, "left") }?;
        let r = unsafe { as_ref(right, "right") }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = unsafe { params.as_ref() }.map(FusionParams::from).unwrap_or_default();
        let fused = synthesize_pair(&l.0, &r.0, &p)?;
        let score = predict(&m.0, &extract_phase_features(&fused.phase)?, &extract_contrast_features(&fused.contrast)?)?;
        unsafe { *out = score };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn siqa_model_free(model: *mut SiqaModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}
