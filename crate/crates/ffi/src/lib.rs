//! C ABI for `mrsk-core`.
//!
//! Scenarios are opaque heap handles created by [`mrsk_scenario_new`] and
//! released by [`mrsk_scenario_free`]. Every fallible call returns an
//! [`MrskStatus`]; on failure [`mrsk_last_error`] describes the problem for
//! the calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use mrsk_core::analysis::ftd_ber;
use mrsk_core::ratio_stats::{solid_ratio_cdf, SolidParams};
use mrsk_core::simulate::{run_link, Engine, Scenario, SimConfig, SweepParam};
use mrsk_core::{Coding, DetectorKind, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrskStatus {
    Ok = 0,
    InvalidArgument = 1,
    CapExceeded = 2,
    NullPointer = 3,
    Unsupported = 4,
    Panic = 5,
}

/// Numeric scenario settings.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrskParam {
    BitTime = 0,
    ReferenceCount = 1,
    Distance = 2,
    Omega = 3,
    MoleculeTypes = 4,
    BitsPerRatio = 5,
    Radius = 6,
    Diffusion = 7,
    Memory = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrskDetector {
    Ftd = 0,
    Admc = 1,
    Mlsd = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrskCoding {
    Binary = 0,
    Gray = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrskEngine {
    Statistical = 0,
    Binomial = 1,
    Particle = 2,
}

/// Monte Carlo result with its 95% confidence interval.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MrskBerEstimate {
    pub errors: u64,
    pub bits: u64,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub degenerate_frames: u64,
}

/// Opaque link scenario.
pub struct MrskScenario {
    inner: Scenario,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> MrskStatus {
    match e {
        Error::CapExceeded { .. } => MrskStatus::CapExceeded,
        Error::Unsupported(_) => MrskStatus::Unsupported,
        _ => MrskStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), (MrskStatus, String)>>(f: F) -> MrskStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            MrskStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MrskStatus::Panic
        }
    }
}

fn core_err(e: Error) -> (MrskStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (MrskStatus, String) {
    (MrskStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `ptr` must be null or valid for the duration of the call.
unsafe fn scenario<'a>(ptr: *const MrskScenario) -> Result<&'a MrskScenario, (MrskStatus, String)> {
    unsafe { ptr.as_ref() }.ok_or_else(|| null("scenario"))
}

/// Message for the last failed call on this thread; empty after success.
/// The pointer stays valid until the next call from the same thread.
#[no_mangle]
pub extern "C" fn mrsk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mrsk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a scenario with the default parameters.
///
/// # Safety
/// `out` must be null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn mrsk_scenario_new(out: *mut *mut MrskScenario) -> MrskStatus {
    guard(|| {
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = Box::into_raw(Box::new(MrskScenario {
            inner: Scenario::default(),
        }));
        Ok(())
    })
}

/// Releases a scenario; null is ignored.
///
/// # Safety
/// `s` must be null or a handle from [`mrsk_scenario_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mrsk_scenario_free(s: *mut MrskScenario) {
    if !s.is_null() {
        drop(unsafe { Box::from_raw(s) });
    }
}

/// Sets one numeric parameter. The scenario is unchanged on failure.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mrsk_scenario_set(s: *mut MrskScenario, param: MrskParam, value: f64) -> MrskStatus {
    guard(|| {
        let s = unsafe { s.as_mut() }.ok_or_else(|| null("scenario"))?;
        let swept = match param {
            MrskParam::BitTime => Some(SweepParam::BitTime),
            MrskParam::ReferenceCount => Some(SweepParam::ReferenceCount),
            MrskParam::Distance => Some(SweepParam::Distance),
            MrskParam::Omega => Some(SweepParam::Omega),
            MrskParam::MoleculeTypes => Some(SweepParam::MoleculeTypes),
            MrskParam::BitsPerRatio => Some(SweepParam::BitsPerRatio),
            _ => None,
        };
        let next = match swept {
            Some(p) => p.apply(&s.inner, value).map_err(core_err)?,
            None => {
                let mut next = s.inner.clone();
                match param {
                    MrskParam::Radius => next.channel.radius = value,
                    MrskParam::Diffusion => next.channel.diffusion = value,
                    _ => {
                        if !(value >= 1.0 && value.fract() == 0.0 && value <= 64.0) {
                            return Err((MrskStatus::InvalidArgument, format!("memory must be an integer in 1..=64, got {value}")));
                        }
                        next.channel.memory = value as usize;
                    }
                }
                next.validate().map_err(core_err)?;
                next
            }
        };
        s.inner = next;
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mrsk_scenario_set_detector(s: *mut MrskScenario, detector: MrskDetector) -> MrskStatus {
    guard(|| {
        let s = unsafe { s.as_mut() }.ok_or_else(|| null("scenario"))?;
        s.inner.modem.detector = match detector {
            MrskDetector::Ftd => DetectorKind::Ftd,
            MrskDetector::Admc => DetectorKind::Admc,
            MrskDetector::Mlsd => DetectorKind::Mlsd,
        };
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mrsk_scenario_set_coding(s: *mut MrskScenario, coding: MrskCoding) -> MrskStatus {
    guard(|| {
        let s = unsafe { s.as_mut() }.ok_or_else(|| null("scenario"))?;
        s.inner.modem.coding = match coding {
            MrskCoding::Binary => Coding::Binary,
            MrskCoding::Gray => Coding::Gray,
        };
        Ok(())
    })
}

/// Closed-form BER of fixed-threshold detection.
///
/// # Safety
/// `s` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn mrsk_ftd_ber(s: *const MrskScenario, out: *mut f64) -> MrskStatus {
    guard(|| {
        let s = unsafe { scenario(s) }?;
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        let r = ftd_ber(&s.inner.modem, &s.inner.channel()).map_err(core_err)?;
        *out = r.ber;
        Ok(())
    })
}

/// Monte Carlo BER with the scenario's detector.
///
/// # Safety
/// `s` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn mrsk_simulate(
    s: *const MrskScenario,
    n_bits: u64,
    seed: u64,
    engine: MrskEngine,
    out: *mut MrskBerEstimate,
) -> MrskStatus {
    guard(|| {
        let s = unsafe { scenario(s) }?;
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        let sim = SimConfig {
            n_bits,
            seed,
            engine: match engine {
                MrskEngine::Statistical => Engine::Statistical,
                MrskEngine::Binomial => Engine::Binomial,
                MrskEngine::Particle => Engine::Particle,
            },
            ..SimConfig::default()
        };
        let e = run_link(&s.inner.modem, &s.inner.channel(), &sim).map_err(core_err)?;
        *out = MrskBerEstimate {
            errors: e.errors,
            bits: e.bits,
            ber: e.ber,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            degenerate_frames: e.degenerate_frames,
        };
        Ok(())
    })
}

/// Fraction of released molecules absorbed by time `t`.
///
/// # Safety
/// `s` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn mrsk_hit_fraction(s: *const MrskScenario, t: f64, out: *mut f64) -> MrskStatus {
    guard(|| {
        let s = unsafe { scenario(s) }?;
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        if !(t >= 0.0) {
            return Err((MrskStatus::InvalidArgument, format!("time must be nonnegative, got {t}")));
        }
        *out = s.inner.channel.hit_fraction(t);
        Ok(())
    })
}

/// Solid-approximation CDF of a ratio of Gaussians with shape `p`, `q`, `r`.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn mrsk_solid_cdf(eta0: f64, p: f64, q: f64, r: f64, out: *mut f64) -> MrskStatus {
    guard(|| {
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        let sp = SolidParams::new(p, q, r).map_err(core_err)?;
        *out = solid_ratio_cdf(eta0, &sp);
        Ok(())
    })
}
