//! C ABI over `crackrestore`.
//!
//! Images and masks cross the boundary as opaque handles owned by the
//! caller and released with `cr_image_free` / `cr_mask_free`. Every
//! fallible call returns a [`CrStatus`]; on failure a message is available
//! from [`cr_last_error_message`] on the same thread. Panics never unwind
//! into C: they are caught and reported as `CR_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use crackrestore::image::{load_mask_png, load_png, save_mask_png, save_png};
use crackrestore::inpaint::{fill, DiffusionConfig, FillMethod};
use crackrestore::metrics::{confusion, detection_metrics, mae, psnr, ssim};
use crackrestore::morph::{detect, DetectorConfig, StructuringElement, Variant};
use crackrestore::synth::{generate_triplet, CrackSpec};
use crackrestore::{BinaryMask, Error, RasterImage};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Decode = 4,
    DimensionMismatch = 5,
    NoBoundary = 6,
    Internal = 7,
    Panic = 8,
}

/// Opaque image handle: 8-bit, 1 or 3 channels, row-major interleaved.
pub struct CrImage(RasterImage);

/// Opaque binary mask handle.
pub struct CrMask(BinaryMask);

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrVariant {
    Black = 0,
    White = 1,
    Both = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrShape {
    Square3 = 0,
    Disk2 = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct CrDetectorConfig {
    pub variant: CrVariant,
    pub se: CrShape,
    pub threshold: u8,
    pub dilation_iters: u32,
    pub min_component: u32,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrFillMethod {
    Mtm = 0,
    Ad = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct CrDiffusionConfig {
    pub lambda: f64,
    pub kappa: f64,
    pub iterations: u32,
}

/// Detection scores as fractions (not percent).
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct CrDetectionMetrics {
    pub accuracy: f64,
    pub f1: f64,
    pub iou: f64,
    pub dice: f64,
    pub mcc: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CrStatus {
    match e {
        Error::Io { .. } => CrStatus::Io,
        Error::Decode { .. } | Error::UnsupportedFormat { .. } => CrStatus::Decode,
        Error::DimensionMismatch { .. } => CrStatus::DimensionMismatch,
        Error::NoBoundary => CrStatus::NoBoundary,
        Error::InvalidImage(_) | Error::NotGrayscale(_) | Error::InvalidParameter(_) | Error::Config(_) => {
            CrStatus::InvalidArgument
        }
        _ => CrStatus::Internal,
    }
}

/// Internal failure: a status plus its message.
struct Fail(CrStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CrStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CrStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CrStatus::Panic
        }
    }
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(CrStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message describing why the most recent status-returning call on this
/// thread failed, or NULL if it succeeded. The pointer stays valid until
/// the next such call on the same thread.
#[no_mangle]
pub extern "C" fn cr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Loads an 8-bit PNG; alpha is dropped.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cr_image_load(path: *const c_char, out: *mut *mut CrImage) -> CrStatus {
    guard(|| {
        let img = load_png(path_arg(path)?)?;
        put(out, CrImage(img))
    })
}

/// # Safety
/// `image` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cr_image_save(image: *const CrImage, path: *const c_char) -> CrStatus {
    guard(|| {
        let img = deref(image, "image")?;
        save_png(&img.0, path_arg(path)?)?;
        Ok(())
    })
}

/// Copies `len` bytes of interleaved pixels into a new image.
///
/// # Safety
/// `data` must point to at least `len` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn cr_image_from_buffer(
    width: u32,
    height: u32,
    channels: u32,
    data: *const u8,
    len: usize,
    out: *mut *mut CrImage,
) -> CrStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        let bytes = std::slice::from_raw_parts(data, len).to_vec();
        let img = RasterImage::new(width as usize, height as usize, channels as usize, bytes)?;
        put(out, CrImage(img))
    })
}

/// # Safety
/// `image` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cr_image_free(image: *mut CrImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// # Safety
/// `image` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cr_image_width(image: *const CrImage) -> u32 {
    image.as_ref().map_or(0, |i| i.0.width() as u32)
}

/// # Safety
/// `image` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cr_image_height(image: *const CrImage) -> u32 {
    image.as_ref().map_or(0, |i| i.0.height() as u32)
}

/// # Safety
/// `image` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cr_image_channels(image: *const CrImage) -> u32 {
    image.as_ref().map_or(0, |i| i.0.channels() as u32)
}

/// Borrowed pixel bytes, valid while the handle lives. Writes the length
/// to `len` when it is not NULL.
///
/// # Safety
/// `image` must be NULL or a live handle; `len` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn cr_image_data(image: *const CrImage, len: *mut usize) -> *const u8 {
    match image.as_ref() {
        Some(i) => {
            if !len.is_null() {
                *len = i.0.data().len();
            }
            i.0.data().as_ptr()
        }
        None => ptr::null(),
    }
}

/// Loads a mask PNG; any nonzero luma is crack.
///
/// # Safety
/// `path` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cr_mask_load(path: *const c_char, out: *mut *mut CrMask) -> CrStatus {
    guard(|| {
        let m = load_mask_png(path_arg(path)?)?;
        put(out, CrMask(m))
    })
}

/// Writes an 8-bit single-channel PNG with 255 = crack.
///
/// # Safety
/// `mask` must be a live handle; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cr_mask_save(mask: *const CrMask, path: *const c_char) -> CrStatus {
    guard(|| {
        let m = deref(mask, "mask")?;
        save_mask_png(&m.0, path_arg(path)?)?;
        Ok(())
    })
}

/// Builds a mask from `width * height` bytes; nonzero is crack.
///
/// # Safety
/// `data` must point to at least `len` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn cr_mask_from_buffer(
    width: u32,
    height: u32,
    data: *const u8,
    len: usize,
    out: *mut *mut CrMask,
) -> CrStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        let bytes = std::slice::from_raw_parts(data, len);
        let m = BinaryMask::new(width as usize, height as usize, bytes.iter().map(|&b| b != 0).collect())?;
        put(out, CrMask(m))
    })
}

/// Copies the mask as 0/255 bytes into `dst`, which must hold exactly
/// `width * height` bytes.
///
/// # Safety
/// `dst` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cr_mask_copy_to(mask: *const CrMask, dst: *mut u8, len: usize) -> CrStatus {
    guard(|| {
        let m = deref(mask, "mask")?;
        if dst.is_null() {
            return Err(null("dst"));
        }
        if len != m.0.data().len() {
            return Err(Fail(
                CrStatus::InvalidArgument,
                format!("buffer holds {len} bytes, mask has {}", m.0.data().len()),
            ));
        }
        let out = std::slice::from_raw_parts_mut(dst, len);
        for (o, &v) in out.iter_mut().zip(m.0.data()) {
            *o = if v { 255 } else { 0 };
        }
        Ok(())
    })
}

/// # Safety
/// `mask` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cr_mask_free(mask: *mut CrMask) {
    if !mask.is_null() {
        drop(Box::from_raw(mask));
    }
}

/// # Safety
/// `mask` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cr_mask_width(mask: *const CrMask) -> u32 {
    mask.as_ref().map_or(0, |m| m.0.width() as u32)
}

/// # Safety
/// `mask` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cr_mask_height(mask: *const CrMask) -> u32 {
    mask.as_ref().map_or(0, |m| m.0.height() as u32)
}

/// Number of crack pixels.
///
/// # Safety
/// `mask` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cr_mask_count(mask: *const CrMask) -> usize {
    mask.as_ref().map_or(0, |m| m.0.count())
}

#[no_mangle]
pub extern "C" fn cr_detector_config_default() -> CrDetectorConfig {
    let d = DetectorConfig::default();
    CrDetectorConfig {
        variant: CrVariant::Black,
        se: CrShape::Disk2,
        threshold: d.threshold,
        dilation_iters: d.dilation_iters as u32,
        min_component: d.min_component as u32,
    }
}

impl From<&CrDetectorConfig> for DetectorConfig {
    fn from(c: &CrDetectorConfig) -> Self {
        DetectorConfig {
            variant: match c.variant {
                CrVariant::Black => Variant::Black,
                CrVariant::White => Variant::White,
                CrVariant::Both => Variant::Both,
            },
            se: match c.se {
                CrShape::Square3 => StructuringElement::square3(),
                CrShape::Disk2 => StructuringElement::disk2(),
            },
            threshold: c.threshold,
            dilation_iters: c.dilation_iters as usize,
            min_component: c.min_component as usize,
        }
    }
}

/// Top-hat crack detection. A NULL `config` uses the defaults.
///
/// # Safety
/// `image` must be live, `config` NULL or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cr_detect(
    image: *const CrImage,
    config: *const CrDetectorConfig,
    out: *mut *mut CrMask,
) -> CrStatus {
    guard(|| {
        let img = deref(image, "image")?;
        let cfg = config.as_ref().map_or_else(DetectorConfig::default, DetectorConfig::from);
        let m = detect(&img.0, &cfg)?;
        put(out, CrMask(m))
    })
}

#[no_mangle]
pub extern "C" fn cr_diffusion_config_default() -> CrDiffusionConfig {
    let d = DiffusionConfig::default();
    CrDiffusionConfig { lambda: d.lambda, kappa: d.kappa, iterations: d.iterations as u32 }
}

/// Fills masked pixels. A NULL `config` uses the diffusion defaults; it is
/// ignored by the trimmed-mean method.
///
/// # Safety
/// `image` and `mask` must be live, `config` NULL or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cr_fill(
    image: *const CrImage,
    mask: *const CrMask,
    method: CrFillMethod,
    config: *const CrDiffusionConfig,
    out: *mut *mut CrImage,
) -> CrStatus {
    guard(|| {
        let img = deref(image, "image")?;
        let m = deref(mask, "mask")?;
        let cfg = config.as_ref().map_or_else(DiffusionConfig::default, |c| DiffusionConfig {
            lambda: c.lambda,
            kappa: c.kappa,
            iterations: c.iterations as usize,
        });
        let method = match method {
            CrFillMethod::Mtm => FillMethod::Mtm,
            CrFillMethod::Ad => FillMethod::Ad,
        };
        let restored = fill(&img.0, &m.0, method, &cfg)?;
        put(out, CrImage(restored))
    })
}

unsafe fn pair_metric(
    a: *const CrImage,
    b: *const CrImage,
    out: *mut f64,
    f: fn(&RasterImage, &RasterImage) -> crackrestore::Result<f64>,
) -> CrStatus {
    guard(|| {
        let (a, b) = (deref(a, "image a")?, deref(b, "image b")?);
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = f(&a.0, &b.0)?;
        Ok(())
    })
}

/// Mean SSIM on luma, as a fraction in [-1, 1].
///
/// # Safety
/// `a`, `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cr_ssim(a: *const CrImage, b: *const CrImage, out: *mut f64) -> CrStatus {
    pair_metric(a, b, out, ssim)
}

/// PSNR in dB, capped at 99 for identical images.
///
/// # Safety
/// `a`, `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cr_psnr(a: *const CrImage, b: *const CrImage, out: *mut f64) -> CrStatus {
    pair_metric(a, b, out, psnr)
}

/// Mean absolute error over all samples.
///
/// # Safety
/// `a`, `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cr_mae(a: *const CrImage, b: *const CrImage, out: *mut f64) -> CrStatus {
    pair_metric(a, b, out, mae)
}

/// # Safety
/// `pred` and `truth` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cr_detection_metrics(
    pred: *const CrMask,
    truth: *const CrMask,
    out: *mut CrDetectionMetrics,
) -> CrStatus {
    guard(|| {
        let (p, t) = (deref(pred, "pred")?, deref(truth, "truth")?);
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        let m = detection_metrics(&confusion(&p.0, &t.0)?)?;
        *out = CrDetectionMetrics { accuracy: m.accuracy, f1: m.f1, iou: m.iou, dice: m.dice, mcc: m.mcc };
        Ok(())
    })
}

/// Synthesizes a damaged/clean/mask triplet from `source` with the default
/// crack parameters, `seed`, and the given output size.
///
/// # Safety
/// `source` must be live; the three output pointers writable.
#[no_mangle]
pub unsafe extern "C" fn cr_generate_triplet(
    source: *const CrImage,
    seed: u64,
    target_width: u32,
    target_height: u32,
    clean: *mut *mut CrImage,
    mask: *mut *mut CrMask,
    damaged: *mut *mut CrImage,
) -> CrStatus {
    guard(|| {
        let src = deref(source, "source")?;
        if clean.is_null() || mask.is_null() || damaged.is_null() {
            return Err(null("output pointer"));
        }
        let spec = CrackSpec {
            seed,
            target_size: [target_width as usize, target_height as usize],
            ..CrackSpec::default()
        };
        let t = generate_triplet(&src.0, &spec)?;
        put(clean, CrImage(t.clean))?;
        put(mask, CrMask(t.mask))?;
        put(damaged, CrImage(t.damaged))
    })
}
