//! Single-bit reference schemes over the same diffusion channel.
//!
//! OOK, binary CSK and binary MoSK use the Gaussian arrival model with
//! exhaustive enumeration of the `2^L` bit histories. RTSK detects the first
//! arrival of a single molecule whose delay is Lévy distributed, and is
//! evaluated by Monte Carlo.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analysis::DEFAULT_SEQUENCE_CAP;
use crate::channel::{moments_unchecked, ArrivalMoments, ChannelParams};
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::simulate::BerEstimate;
use crate::special::{erfc, erfc_inv, norm_sf};

/// On-off keying: `Q` molecules for a one, none for a zero; decide one
/// when the count reaches `αQ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OokConfig {
    pub q: f64,
    pub alpha: f64,
}

impl Default for OokConfig {
    fn default() -> Self {
        OokConfig { q: 1000.0, alpha: 0.78 }
    }
}

/// Binary concentration keying with levels `Q` and `ΓQ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CskConfig {
    pub q: f64,
    pub gamma: f64,
}

impl Default for CskConfig {
    fn default() -> Self {
        CskConfig { q: 1000.0, gamma: 2.0 }
    }
}

/// Binary molecule-type keying; a type is "present" when its count
/// exceeds `Λ` molecules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoskConfig {
    pub q: f64,
    pub lambda: f64,
}

impl Default for MoskConfig {
    fn default() -> Self {
        MoskConfig { q: 1000.0, lambda: 340.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RtskDetector {
    /// Likelihood comparison of the two shifted Lévy densities.
    Ml,
    /// Threshold at the midpoint of the two conditional medians.
    Linear,
}

impl std::str::FromStr for RtskDetector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ml" => Ok(RtskDetector::Ml),
            "linear" => Ok(RtskDetector::Linear),
            _ => Err(Error::invalid(format!("unknown RTSK detector '{s}' (expected ml or linear)"))),
        }
    }
}

/// Release-time keying: a zero is released at the start of the bit
/// interval, a one `Δ` later.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtskConfig {
    pub delta: f64,
    pub detector: RtskDetector,
    pub levy_scale: f64,
}

impl RtskConfig {
    /// `Δ = t_b/2` and the Lévy scale of `channel`.
    pub fn for_channel(channel: &ChannelParams, bit_time: f64, detector: RtskDetector) -> Self {
        RtskConfig {
            delta: bit_time / 2.0,
            detector,
            levy_scale: channel.levy_scale(),
        }
    }
}

fn bit_channel(channel: &ChannelParams, bit_time: f64) -> Result<ChannelParams> {
    let ch = channel.with_symbol_time(bit_time);
    ch.validate()?;
    let total = 1u128.checked_shl(ch.memory as u32).unwrap_or(u128::MAX);
    if ch.memory >= 128 || total > DEFAULT_SEQUENCE_CAP {
        return Err(Error::CapExceeded {
            what: "baseline bit-history enumeration",
            required: if ch.memory >= 128 { u128::MAX } else { total },
            cap: DEFAULT_SEQUENCE_CAP,
        });
    }
    Ok(ch)
}

/// `P(count ≥ threshold)` under the Gaussian model. Counts are physically
/// nonnegative, so a threshold at or below zero is always reached.
fn reach_prob(threshold: f64, m: ArrivalMoments) -> f64 {
    if threshold <= 0.0 {
        1.0
    } else if m.var <= 0.0 {
        f64::from(u8::from(m.mu >= threshold))
    } else {
        norm_sf((threshold - m.mu) / m.var.sqrt())
    }
}

/// Averages `error(history)` over all `2^L` bit histories; bit `k` of the
/// history word is the bit sent `k` intervals before the current one.
fn average_over_histories<F: Fn(u64) -> f64>(memory: usize, error: F) -> f64 {
    let total = 1u64 << memory;
    (0..total).map(error).sum::<f64>() / total as f64
}

fn history_moments(history: u64, memory: usize, taps: &[f64], emit: impl Fn(bool) -> f64) -> ArrivalMoments {
    moments_unchecked((0..memory).map(|k| emit(history >> k & 1 == 1)), taps)
}

pub fn ook_ber(cfg: &OokConfig, channel: &ChannelParams, bit_time: f64) -> Result<f64> {
    if !(cfg.q > 0.0) || !(cfg.alpha >= 0.0) {
        return Err(Error::invalid(format!("OOK needs Q > 0 and alpha ≥ 0, got {cfg:?}")));
    }
    let ch = bit_channel(channel, bit_time)?;
    let cir = ch.cir();
    let th = cfg.alpha * cfg.q;
    Ok(average_over_histories(ch.memory, |h| {
        let m = history_moments(h, ch.memory, cir.taps(), |b| if b { cfg.q } else { 0.0 });
        let one = reach_prob(th, m);
        if h & 1 == 1 {
            1.0 - one
        } else {
            one
        }
    }))
}

/// Threshold between the ISI-free expected counts of the two levels.
pub fn csk_threshold(cfg: &CskConfig, channel: &ChannelParams, bit_time: f64) -> f64 {
    let p1 = channel.with_symbol_time(bit_time).cir().tap(1);
    (cfg.q * p1 * cfg.gamma * cfg.q * p1).sqrt()
}

pub fn csk_ber(cfg: &CskConfig, channel: &ChannelParams, bit_time: f64) -> Result<f64> {
    if !(cfg.q > 0.0) || !(cfg.gamma >= 1.0) {
        return Err(Error::invalid(format!("CSK needs Q > 0 and Gamma ≥ 1, got {cfg:?}")));
    }
    let ch = bit_channel(channel, bit_time)?;
    let cir = ch.cir();
    let th = csk_threshold(cfg, &ch, bit_time);
    Ok(average_over_histories(ch.memory, |h| {
        let m = history_moments(h, ch.memory, cir.taps(), |b| if b { cfg.gamma * cfg.q } else { cfg.q });
        let high = reach_prob(th, m);
        if h & 1 == 1 {
            1.0 - high
        } else {
            high
        }
    }))
}

/// Detection is correct when only the sent type exceeds `Λ`, wrong when
/// only the other one does; the ambiguous cases are settled by a fair coin.
pub fn mosk_ber(cfg: &MoskConfig, channel: &ChannelParams, bit_time: f64) -> Result<f64> {
    if !(cfg.q > 0.0) || !(cfg.lambda > 0.0) {
        return Err(Error::invalid(format!("MoSK needs Q > 0 and Lambda > 0, got {cfg:?}")));
    }
    let ch = bit_channel(channel, bit_time)?;
    let cir = ch.cir();
    Ok(average_over_histories(ch.memory, |h| {
        let current = h & 1 == 1;
        let sent = history_moments(h, ch.memory, cir.taps(), |b| if b == current { cfg.q } else { 0.0 });
        let other = history_moments(h, ch.memory, cir.taps(), |b| if b != current { cfg.q } else { 0.0 });
        // Strictly above the threshold; the Gaussian tail is continuous.
        let above = |m: ArrivalMoments| {
            if m.var <= 0.0 {
                f64::from(u8::from(m.mu > cfg.lambda))
            } else {
                norm_sf((cfg.lambda - m.mu) / m.var.sqrt())
            }
        };
        let (ps, po) = (above(sent), above(other));
        (1.0 - ps) * po + 0.5 * (ps * po + (1.0 - ps) * (1.0 - po))
    }))
}

/// Lévy density with scale `c`.
pub fn levy_pdf(t: f64, c: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    (c / (2.0 * std::f64::consts::PI)).sqrt() * t.powf(-1.5) * (-c / (2.0 * t)).exp()
}

pub fn levy_cdf(t: f64, c: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    erfc((c / (2.0 * t)).sqrt())
}

pub fn levy_median(c: f64) -> f64 {
    let k = erfc_inv(0.5);
    c / (2.0 * k * k)
}

/// Draws a Lévy variate as `c/Z²` with `Z` standard normal.
pub fn sample_levy<R: Rng + ?Sized>(c: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    c / (z * z)
}

const RTSK_DOMAIN: u64 = 3;
const RTSK_CHUNK: u64 = 65_536;

/// Monte Carlo RTSK bit error rate over `n_bits` bits.
///
/// An arrival later than the end of the bit interval is an erasure and is
/// decided by a fair coin.
pub fn rtsk_ber(cfg: &RtskConfig, bit_time: f64, n_bits: u64, seed: u64) -> Result<BerEstimate> {
    if !(cfg.delta > 0.0 && cfg.delta < bit_time) {
        return Err(Error::invalid(format!(
            "RTSK offset must lie in (0, t_b), got {} with t_b = {bit_time}",
            cfg.delta
        )));
    }
    if !(cfg.levy_scale > 0.0) {
        return Err(Error::invalid("Lévy scale must be positive"));
    }
    let c = cfg.levy_scale;
    let boundary = cfg.delta / 2.0 + levy_median(c);
    let errors: Vec<u64> = (0..n_bits.div_ceil(RTSK_CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream(seed, RTSK_DOMAIN, chunk);
            let n = (n_bits - chunk * RTSK_CHUNK).min(RTSK_CHUNK);
            let mut errs = 0;
            for _ in 0..n {
                let bit = rng.random::<bool>();
                let t = if bit { cfg.delta } else { 0.0 } + sample_levy(c, &mut rng);
                let decided = if t > bit_time {
                    rng.random::<bool>()
                } else {
                    match cfg.detector {
                        RtskDetector::Linear => t > boundary,
                        RtskDetector::Ml => levy_pdf(t - cfg.delta, c) > levy_pdf(t, c),
                    }
                };
                errs += u64::from(decided != bit);
            }
            errs
        })
        .collect();
    Ok(BerEstimate::from_counts(errors.iter().sum(), n_bits))
}

/// Grid minimiser of `ber(x)`; returns the best point and the whole curve.
fn grid_minimum<F: Fn(f64) -> Result<f64>>(grid: &[f64], ber: F) -> Result<(f64, Vec<(f64, f64)>)> {
    if grid.is_empty() {
        return Err(Error::invalid("threshold sweep needs a nonempty grid"));
    }
    let curve = grid.iter().map(|&x| Ok((x, ber(x)?))).collect::<Result<Vec<_>>>()?;
    let best = curve.iter().copied().fold((grid[0], f64::INFINITY), |b, p| if p.1 < b.1 { p } else { b });
    Ok((best.0, curve))
}

/// Sweeps `α` over `grid` and returns the minimising value.
pub fn optimize_ook_alpha(
    q: f64,
    channel: &ChannelParams,
    bit_time: f64,
    grid: &[f64],
) -> Result<(f64, Vec<(f64, f64)>)> {
    grid_minimum(grid, |alpha| ook_ber(&OokConfig { q, alpha }, channel, bit_time))
}

/// Sweeps `Λ/Q` over `grid` and returns the minimising fraction.
pub fn optimize_mosk_lambda(
    q: f64,
    channel: &ChannelParams,
    bit_time: f64,
    grid: &[f64],
) -> Result<(f64, Vec<(f64, f64)>)> {
    grid_minimum(grid, |f| mosk_ber(&MoskConfig { q, lambda: f * q }, channel, bit_time))
}
