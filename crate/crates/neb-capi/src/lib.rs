//! C ABI for the renderer: opaque handles, plain status codes, and a
//! cbindgen-generated header in `include/neb.h`.
//!
//! Objects returned through out-pointers are owned by the caller and must be
//! released with the matching `*_free`. Status codes carry the category of a
//! failure; the full message is kept per thread and read with
//! [`neb_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use neb::config::{Budget, IntegratorKind, RenderConfig};
use neb::film::Image;
use neb::integrator::{render, RenderError};
use neb::io::write_pfm;
use neb::scene::{load_scene, Scene};

/// Outcome of a C API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NebStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A parameter value was out of range or inconsistent.
    InvalidArgument = 2,
    /// The scene failed to load or validate.
    SceneError = 3,
    /// The vertex store cannot hold the requested resolution and depth.
    CapacityError = 4,
    /// Rendering failed for another reason.
    RenderError = 5,
    /// Writing an output file failed.
    IoError = 6,
    /// A bug: the library panicked and the panic was contained.
    Internal = 7,
}

/// Opaque handle to a loaded scene.
pub struct NebScene {
    scene: Scene,
}

/// Opaque handle to a finished render.
pub struct NebRenderResult {
    image: Image,
    pixels: Vec<f64>,
    iterations: u64,
    seconds: f64,
}

/// Render settings; fill with [`neb_render_params_default`] first.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NebRenderParams {
    /// One of `"pt"`, `"neb"`, `"neb+lp"`; NULL selects `"neb"`.
    pub integrator: *const c_char,
    pub width: u32,
    pub height: u32,
    /// Iteration budget; set to 0 to use `time_seconds` instead.
    pub iterations: u32,
    /// Wall-clock budget; exactly one of the two budgets must be set.
    pub time_seconds: f64,
    pub seed: u64,
    /// Worker threads; 0 means all cores.
    pub threads: u32,
    /// Maximum path length in segments.
    pub max_depth: u32,
    /// Merge radius as a fraction of the scene diagonal.
    pub radius_scale: f64,
    /// Node budget of the density octree.
    pub octree_capacity: u32,
    /// Light photons per iteration (neb+lp only); 0 means one per pixel.
    pub n_light_photons: u64,
    /// Whether shadowed next-event vertices still count toward density.
    pub count_occluded: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: NebStatus, msg: impl Into<Vec<u8>>) -> NebStatus {
    let c = CString::new(msg).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
    status
}

/// The message of the most recent failure on this thread; empty if none.
/// Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn neb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Fill `out` with the library defaults (512×512, 16 iterations, `"neb"`).
#[no_mangle]
pub extern "C" fn neb_render_params_default(out: *mut NebRenderParams) -> NebStatus {
    if out.is_null() {
        return fail(NebStatus::NullArgument, "out is NULL");
    }
    let defaults = RenderConfig::new(IntegratorKind::Neb, 512, 512, Budget::Iterations(16));
    unsafe {
        *out = NebRenderParams {
            integrator: std::ptr::null(),
            width: defaults.width,
            height: defaults.height,
            iterations: 16,
            time_seconds: 0.0,
            seed: defaults.seed,
            threads: 0,
            max_depth: defaults.max_depth,
            radius_scale: defaults.radius_scale,
            octree_capacity: defaults.octree_capacity,
            n_light_photons: 0,
            count_occluded: defaults.count_occluded,
        };
    }
    NebStatus::Ok
}

/// Load a scene from a file path or a `builtin:<name>` spec.
#[no_mangle]
pub extern "C" fn neb_scene_load(spec: *const c_char, out: *mut *mut NebScene) -> NebStatus {
    if spec.is_null() || out.is_null() {
        return fail(NebStatus::NullArgument, "spec or out is NULL");
    }
    let spec = match unsafe { CStr::from_ptr(spec) }.to_str() {
        Ok(s) => s.to_string(),
        Err(_) => return fail(NebStatus::InvalidArgument, "scene spec is not UTF-8"),
    };
    match catch_unwind(move || load_scene(&spec)) {
        Ok(Ok(scene)) => {
            unsafe { *out = Box::into_raw(Box::new(NebScene { scene })) };
            NebStatus::Ok
        }
        Ok(Err(e)) => fail(NebStatus::SceneError, e.to_string()),
        Err(_) => fail(NebStatus::Internal, "panic while loading the scene"),
    }
}

#[no_mangle]
pub extern "C" fn neb_scene_free(scene: *mut NebScene) {
    if !scene.is_null() {
        drop(unsafe { Box::from_raw(scene) });
    }
}

fn config_from(params: &NebRenderParams) -> Result<RenderConfig, String> {
    let integrator = if params.integrator.is_null() {
        "neb"
    } else {
        unsafe { CStr::from_ptr(params.integrator) }
            .to_str()
            .map_err(|_| "integrator name is not UTF-8".to_string())?
    };
    let kind = IntegratorKind::parse(integrator)
        .ok_or_else(|| format!("unknown integrator {integrator:?}; expected pt, neb or neb+lp"))?;
    let budget = match (params.iterations, params.time_seconds) {
        (n, t) if n > 0 && t == 0.0 => Budget::Iterations(n),
        (0, t) if t > 0.0 => Budget::Seconds(t),
        _ => return Err("set exactly one of iterations and time_seconds".into()),
    };
    let mut config = RenderConfig::new(kind, params.width, params.height, budget);
    config.seed = params.seed;
    config.threads = match params.threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        t => t as usize,
    };
    config.max_depth = params.max_depth;
    config.radius_scale = params.radius_scale;
    config.octree_capacity = params.octree_capacity;
    config.n_light_photons = match params.n_light_photons {
        0 => None,
        n => Some(n as usize),
    };
    config.count_occluded = params.count_occluded;
    config.validate()?;
    Ok(config)
}

/// Render `scene` with `params` and hand back an owned result.
#[no_mangle]
pub extern "C" fn neb_render(
    scene: *const NebScene,
    params: *const NebRenderParams,
    out: *mut *mut NebRenderResult,
) -> NebStatus {
    if scene.is_null() || params.is_null() || out.is_null() {
        return fail(NebStatus::NullArgument, "scene, params or out is NULL");
    }
    let config = match config_from(unsafe { &*params }) {
        Ok(c) => c,
        Err(e) => return fail(NebStatus::InvalidArgument, e),
    };
    let scene = unsafe { &(*scene).scene };
    match catch_unwind(AssertUnwindSafe(|| render(scene, &config))) {
        Ok(Ok((film, stats))) => {
            let image = film.mean_image();
            let pixels = image.data.iter().flat_map(|c| [c.r, c.g, c.b]).collect();
            let result = NebRenderResult {
                image,
                pixels,
                iterations: stats.iterations,
                seconds: stats.seconds,
            };
            unsafe { *out = Box::into_raw(Box::new(result)) };
            NebStatus::Ok
        }
        Ok(Err(e @ RenderError::StoreCapacity { .. })) => {
            fail(NebStatus::CapacityError, e.to_string())
        }
        Ok(Err(e @ RenderError::Config(_))) => fail(NebStatus::InvalidArgument, e.to_string()),
        Err(_) => fail(NebStatus::Internal, "panic while rendering"),
    }
}

#[no_mangle]
pub extern "C" fn neb_result_free(result: *mut NebRenderResult) {
    if !result.is_null() {
        drop(unsafe { Box::from_raw(result) });
    }
}

#[no_mangle]
pub extern "C" fn neb_result_width(result: *const NebRenderResult) -> u32 {
    if result.is_null() { 0 } else { unsafe { &*result }.image.width }
}

#[no_mangle]
pub extern "C" fn neb_result_height(result: *const NebRenderResult) -> u32 {
    if result.is_null() { 0 } else { unsafe { &*result }.image.height }
}

/// Completed iterations (camera samples per pixel).
#[no_mangle]
pub extern "C" fn neb_result_iterations(result: *const NebRenderResult) -> u64 {
    if result.is_null() { 0 } else { unsafe { &*result }.iterations }
}

/// Wall-clock render time in seconds.
#[no_mangle]
pub extern "C" fn neb_result_seconds(result: *const NebRenderResult) -> f64 {
    if result.is_null() { 0.0 } else { unsafe { &*result }.seconds }
}

/// Linear RGB triples, row major, `3 * width * height` doubles.
/// Valid until the result is freed.
#[no_mangle]
pub extern "C" fn neb_result_pixels(result: *const NebRenderResult) -> *const f64 {
    if result.is_null() {
        std::ptr::null()
    } else {
        unsafe { &*result }.pixels.as_ptr()
    }
}

/// Write the result as a little-endian PFM file.
#[no_mangle]
pub extern "C" fn neb_result_write_pfm(
    result: *const NebRenderResult,
    path: *const c_char,
) -> NebStatus {
    if result.is_null() || path.is_null() {
        return fail(NebStatus::NullArgument, "result or path is NULL");
    }
    let path = match unsafe { CStr::from_ptr(path) }.to_str() {
        Ok(p) => Path::new(p),
        Err(_) => return fail(NebStatus::InvalidArgument, "path is not UTF-8"),
    };
    match write_pfm(&unsafe { &*result }.image, path) {
        Ok(()) => NebStatus::Ok,
        Err(e) => fail(NebStatus::IoError, e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_params() -> NebRenderParams {
        let mut p = std::mem::MaybeUninit::uninit();
        assert_eq!(neb_render_params_default(p.as_mut_ptr()), NebStatus::Ok);
        unsafe { p.assume_init() }
    }

    #[test]
    fn defaults_pass_config_building() {
        let p = default_params();
        let config = config_from(&p).unwrap();
        assert_eq!(config.integrator, IntegratorKind::Neb);
        assert_eq!(config.budget, Budget::Iterations(16));
        assert!(config.threads >= 1);
    }

    #[test]
    fn budget_must_be_exactly_one_of_two() {
        let mut p = default_params();
        p.time_seconds = 5.0; // iterations still 16
        assert!(config_from(&p).unwrap_err().contains("exactly one"));
        p.iterations = 0;
        assert_eq!(config_from(&p).unwrap().budget, Budget::Seconds(5.0));
        p.time_seconds = 0.0;
        assert!(config_from(&p).is_err());
    }

    #[test]
    fn integrator_strings_resolve() {
        let mut p = default_params();
        let name = CString::new("neb+lp").unwrap();
        p.integrator = name.as_ptr();
        assert_eq!(config_from(&p).unwrap().integrator, IntegratorKind::NebLp);
        let bad = CString::new("vcm").unwrap();
        p.integrator = bad.as_ptr();
        assert!(config_from(&p).unwrap_err().contains("vcm"));
    }

    #[test]
    fn frees_accept_null() {
        neb_scene_free(std::ptr::null_mut());
        neb_result_free(std::ptr::null_mut());
        assert!(neb_result_pixels(std::ptr::null()).is_null());
        assert_eq!(neb_result_width(std::ptr::null()), 0);
    }
}
