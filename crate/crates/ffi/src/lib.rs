//! C ABI surface for the homography observer. All functions return a status
//! code; results come back through out-pointers. The tracker handle is
//! opaque and single-threaded (wrap it in your own lock if shared).

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::path::Path;
use std::ptr;

use nalgebra::Vector3;

use sl3_observer::camera::CameraIntrinsics;
use sl3_observer::error::Error;
use sl3_observer::image::{build_region_samples, PixelImage, PixelRect, RegionSamples, SphereImage};
use sl3_observer::io::load_image;
use sl3_observer::lie::{project_sl3, Sl3};
use sl3_observer::observer::{
    correction_delta, excitation_check, step_known_velocity, step_partial_velocity, ObserverGains,
    ObserverState, Reduction,
};

/// Status codes returned by every API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sl3Status {
    Ok = 0,
    InvalidArgument = 1,
    ConfigError = 2,
    Diverged = 3,
    IoError = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> Sl3Status {
    match err {
        Error::NoOverlap { .. } | Error::Diverged { .. } => Sl3Status::Diverged,
        Error::Io(_) | Error::ImageDecode(_) => Sl3Status::IoError,
        Error::Config(_) | Error::EmptyRegion(_) => Sl3Status::ConfigError,
        _ => Sl3Status::InvalidArgument,
    }
}

/// Opaque observer handle: reference image, quadrature region, gains, state.
pub struct Sl3Tracker {
    reference: PixelImage,
    region: RegionSamples,
    state: ObserverState,
    last_eps_i: f64,
}

/// Copies the most recent error message (UTF-8, NUL terminated) into `buf`.
/// Returns the full message length, regardless of truncation.
///
/// # Safety
/// `buf` must point to `len` writable bytes (or be null with `len` 0).
#[no_mangle]
pub unsafe extern "C" fn sl3_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

unsafe fn path_from(ptr: *const c_char) -> Result<&'static Path, Sl3Status> {
    if ptr.is_null() {
        set_error("null path".into());
        return Err(Sl3Status::InvalidArgument);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => {
            set_error("path is not valid UTF-8".into());
            Err(Sl3Status::InvalidArgument)
        }
    }
}

fn build_tracker(
    reference: PixelImage,
    region: &[usize; 4],
    k_delta: f64,
    k_gamma: f64,
) -> Result<Sl3Tracker, Error> {
    let k = *reference.intrinsics();
    let rect = if region[2] == 0 || region[3] == 0 {
        PixelRect::full(&k)
    } else {
        PixelRect {
            u_min: region[0],
            v_min: region[1],
            width: region[2],
            height: region[3],
        }
    };
    let samples = build_region_samples(&k, &rect)?;
    Ok(Sl3Tracker {
        reference,
        region: samples,
        state: ObserverState::new(ObserverGains { k_delta, k_gamma }),
        last_eps_i: f64::NAN,
    })
}

/// Creates a tracker from a reference image file (PGM P5 or grayscale PNG).
/// `fu <= 0` selects default intrinsics (fu = fv = width/2, centered).
/// `region` is u,v,width,height; width 0 selects the full frame.
///
/// # Safety
/// `path` must be a NUL-terminated string; `region` must point to 4 values;
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl3_tracker_create_from_file(
    path: *const c_char,
    fu: f64,
    fv: f64,
    u0: f64,
    v0: f64,
    region: *const usize,
    k_delta: f64,
    k_gamma: f64,
    out: *mut *mut Sl3Tracker,
) -> Sl3Status {
    if out.is_null() || region.is_null() {
        set_error("null out pointer".into());
        return Sl3Status::InvalidArgument;
    }
    *out = ptr::null_mut();
    let path = match path_from(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let load = || -> Result<Sl3Tracker, Error> {
        let reference = load_image(path, None)?;
        let reference = if fu > 0.0 {
            let base = *reference.intrinsics();
            let k = CameraIntrinsics::new(fu, fv, u0, v0, base.width, base.height)?;
            PixelImage::new(reference.pixels().to_vec(), k)?
        } else {
            reference
        };
        let rect = [*region, *region.add(1), *region.add(2), *region.add(3)];
        build_tracker(reference, &rect, k_delta, k_gamma)
    };
    match load() {
        Ok(t) => {
            *out = Box::into_raw(Box::new(t));
            Sl3Status::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Destroys a tracker. Passing null is a no-op.
///
/// # Safety
/// `tracker` must come from `sl3_tracker_create_from_file` and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn sl3_tracker_destroy(tracker: *mut Sl3Tracker) {
    if !tracker.is_null() {
        drop(Box::from_raw(tracker));
    }
}

unsafe fn frame_from_gray8(
    tracker: &Sl3Tracker,
    pixels: *const u8,
    width: usize,
    height: usize,
) -> Result<PixelImage, Error> {
    let k = *tracker.reference.intrinsics();
    if width != k.width || height != k.height {
        return Err(Error::Config(format!(
            "frame is {width}x{height}, reference is {}x{}",
            k.width, k.height
        )));
    }
    let data = std::slice::from_raw_parts(pixels, width * height)
        .iter()
        .map(|&b| b as f64 / 255.0)
        .collect();
    PixelImage::new(data, k)
}

fn process(
    tracker: &mut Sl3Tracker,
    frame: &PixelImage,
    velocity: Velocity,
    dt: f64,
) -> Result<(), Error> {
    let delta = correction_delta(
        &tracker.reference,
        frame,
        &tracker.state.h_hat,
        &tracker.region,
        tracker.state.gains.k_delta,
        Reduction::Sequential,
    )?;
    tracker.state.last_delta = delta;
    let ie = sl3_observer::image::warped_error_image(frame, &tracker.state.h_hat);
    let mut acc = 0.0;
    let mut valid = 0usize;
    for s in tracker.region.samples() {
        if let (Some(ve), Some(v0)) = (ie.value(&s.x), tracker.reference.value(&s.x)) {
            acc += (ve - v0) * (ve - v0);
            valid += 1;
        }
    }
    tracker.last_eps_i = if valid > 0 { acc / valid as f64 } else { f64::NAN };
    if dt > 0.0 {
        tracker.state = match velocity {
            Velocity::Known(u) => step_known_velocity(&tracker.state, &u, &delta, dt),
            Velocity::Gyro(w) => step_partial_velocity(&tracker.state, &w, &delta, dt),
        };
    }
    Ok(())
}

enum Velocity {
    Known(Sl3),
    Gyro(Vector3<f64>),
}

/// Feeds one 8-bit grayscale frame with a known group velocity `u`
/// (row-major 3x3, projected onto sl(3)). `dt <= 0` updates the correction
/// without stepping.
///
/// # Safety
/// `pixels` must hold width*height bytes; `u` must point to 9 doubles.
#[no_mangle]
pub unsafe extern "C" fn sl3_tracker_feed_known(
    tracker: *mut Sl3Tracker,
    pixels: *const u8,
    width: usize,
    height: usize,
    u: *const f64,
    dt: f64,
) -> Sl3Status {
    let Some(tracker) = tracker.as_mut() else {
        set_error("null tracker".into());
        return Sl3Status::InvalidArgument;
    };
    if pixels.is_null() || u.is_null() {
        set_error("null input pointer".into());
        return Sl3Status::InvalidArgument;
    }
    let m = nalgebra::Matrix3::from_row_slice(std::slice::from_raw_parts(u, 9));
    let mut run = || -> Result<(), Error> {
        let frame = frame_from_gray8(tracker, pixels, width, height)?;
        process(tracker, &frame, Velocity::Known(project_sl3(&m)), dt)
    };
    match run() {
        Ok(()) => Sl3Status::Ok,
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Feeds one frame with only the angular velocity measured; the unmeasured
/// velocity component is estimated online.
///
/// # Safety
/// `pixels` must hold width*height bytes; `omega` must point to 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn sl3_tracker_feed_gyro(
    tracker: *mut Sl3Tracker,
    pixels: *const u8,
    width: usize,
    height: usize,
    omega: *const f64,
    dt: f64,
) -> Sl3Status {
    let Some(tracker) = tracker.as_mut() else {
        set_error("null tracker".into());
        return Sl3Status::InvalidArgument;
    };
    if pixels.is_null() || omega.is_null() {
        set_error("null input pointer".into());
        return Sl3Status::InvalidArgument;
    }
    let w = Vector3::new(*omega, *omega.add(1), *omega.add(2));
    let mut run = || -> Result<(), Error> {
        let frame = frame_from_gray8(tracker, pixels, width, height)?;
        process(tracker, &frame, Velocity::Gyro(w), dt)
    };
    match run() {
        Ok(()) => Sl3Status::Ok,
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Copies the current homography estimate (row-major 3x3) into `out`.
///
/// # Safety
/// `out` must point to 9 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sl3_tracker_homography(
    tracker: *const Sl3Tracker,
    out: *mut f64,
) -> Sl3Status {
    let Some(tracker) = tracker.as_ref() else {
        set_error("null tracker".into());
        return Sl3Status::InvalidArgument;
    };
    if out.is_null() {
        set_error("null out pointer".into());
        return Sl3Status::InvalidArgument;
    }
    let m = tracker.state.h_hat.matrix();
    for r in 0..3 {
        for c in 0..3 {
            *out.add(r * 3 + c) = m[(r, c)];
        }
    }
    Sl3Status::Ok
}

/// Copies the estimated unmeasured velocity component (row-major 3x3).
///
/// # Safety
/// `out` must point to 9 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sl3_tracker_velocity_estimate(
    tracker: *const Sl3Tracker,
    out: *mut f64,
) -> Sl3Status {
    let Some(tracker) = tracker.as_ref() else {
        set_error("null tracker".into());
        return Sl3Status::InvalidArgument;
    };
    if out.is_null() {
        set_error("null out pointer".into());
        return Sl3Status::InvalidArgument;
    }
    let m = tracker.state.gamma_hat.matrix();
    for r in 0..3 {
        for c in 0..3 {
            *out.add(r * 3 + c) = m[(r, c)];
        }
    }
    Sl3Status::Ok
}

/// Reports |Delta| of the last correction and the last per-pixel residual.
///
/// # Safety
/// Out pointers may be null to skip a value.
#[no_mangle]
pub unsafe extern "C" fn sl3_tracker_metrics(
    tracker: *const Sl3Tracker,
    out_delta_norm: *mut f64,
    out_eps_i: *mut f64,
) -> Sl3Status {
    let Some(tracker) = tracker.as_ref() else {
        set_error("null tracker".into());
        return Sl3Status::InvalidArgument;
    };
    if !out_delta_norm.is_null() {
        *out_delta_norm = tracker.state.last_delta.norm();
    }
    if !out_eps_i.is_null() {
        *out_eps_i = tracker.last_eps_i;
    }
    Sl3Status::Ok
}

/// Runs the excitation analysis of a reference image file: writes the 8
/// ascending Gram eigenvalues into `out_eigenvalues`.
///
/// # Safety
/// `path` must be NUL-terminated; `out_eigenvalues` must point to 8 doubles.
#[no_mangle]
pub unsafe extern "C" fn sl3_check_excitation(
    path: *const c_char,
    out_eigenvalues: *mut f64,
) -> Sl3Status {
    let path = match path_from(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    if out_eigenvalues.is_null() {
        set_error("null out pointer".into());
        return Sl3Status::InvalidArgument;
    }
    let run = || -> Result<[f64; 8], Error> {
        let img = load_image(path, None)?;
        let k = *img.intrinsics();
        let region = build_region_samples(&k, &PixelRect::full(&k))?;
        Ok(excitation_check(&img, &region).eigenvalues)
    };
    match run() {
        Ok(eigs) => {
            for (i, e) in eigs.iter().enumerate() {
                *out_eigenvalues.add(i) = *e;
            }
            Sl3Status::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    fn write_test_pgm(dir: &Path, name: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        let (w, h) = (64usize, 62usize);
        let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
        for v in 0..h {
            for u in 0..w {
                let x = u as f64 / w as f64 * 12.0;
                let y = v as f64 / h as f64 * 11.0;
                let val = 0.5 + 0.3 * (x.sin() * y.cos()) + 0.15 * ((x * 0.7 + y * 1.3).sin());
                bytes.push((val.clamp(0.0, 1.0) * 255.0) as u8);
            }
        }
        std::fs::write(&path, bytes).unwrap();
        path
    }

    #[test]
    fn create_feed_destroy_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_test_pgm(dir.path(), "ref.pgm");
        let cpath = CString::new(path.to_str().unwrap()).unwrap();
        let region = [0usize, 0, 0, 0];
        let mut handle: *mut Sl3Tracker = ptr::null_mut();
        let status = unsafe {
            sl3_tracker_create_from_file(
                cpath.as_ptr(),
                0.0,
                0.0,
                0.0,
                0.0,
                region.as_ptr(),
                0.1,
                2.0,
                &mut handle,
            )
        };
        assert_eq!(status, Sl3Status::Ok);
        assert!(!handle.is_null());

        // same frame, zero velocity: estimate stays at identity
        let bytes = std::fs::read(&path).unwrap();
        let pixels = &bytes[bytes.len() - 64 * 62..];
        let u = [0.0f64; 9];
        let status = unsafe {
            sl3_tracker_feed_known(handle, pixels.as_ptr(), 64, 62, u.as_ptr(), 0.02)
        };
        assert_eq!(status, Sl3Status::Ok);

        let mut h = [0.0f64; 9];
        unsafe { sl3_tracker_homography(handle, h.as_mut_ptr()) };
        for r in 0..3 {
            for c in 0..3 {
                let expected = if r == c { 1.0 } else { 0.0 };
                assert!((h[r * 3 + c] - expected).abs() < 1e-9);
            }
        }

        let mut dn = 0.0;
        let mut ei = 0.0;
        unsafe { sl3_tracker_metrics(handle, &mut dn, &mut ei) };
        assert!(ei < 1e-12);

        unsafe { sl3_tracker_destroy(handle) };
    }

    #[test]
    fn errors_are_reported() {
        let cpath = CString::new("/nonexistent/nope.pgm").unwrap();
        let region = [0usize, 0, 0, 0];
        let mut handle: *mut Sl3Tracker = ptr::null_mut();
        let status = unsafe {
            sl3_tracker_create_from_file(
                cpath.as_ptr(),
                0.0,
                0.0,
                0.0,
                0.0,
                region.as_ptr(),
                0.1,
                2.0,
                &mut handle,
            )
        };
        assert_eq!(status, Sl3Status::IoError);
        let mut buf = [0i8; 256];
        let n = unsafe { sl3_last_error_message(buf.as_mut_ptr(), buf.len()) };
        assert!(n > 0);
    }

    #[test]
    fn excitation_via_ffi() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_test_pgm(dir.path(), "tex.pgm");
        let cpath = CString::new(path.to_str().unwrap()).unwrap();
        let mut eigs = [0.0f64; 8];
        let status = unsafe { sl3_check_excitation(cpath.as_ptr(), eigs.as_mut_ptr()) };
        assert_eq!(status, Sl3Status::Ok);
        assert!(eigs[0] > 0.0);
        assert!(eigs.windows(2).all(|w| w[0] <= w[1]));
    }
}
