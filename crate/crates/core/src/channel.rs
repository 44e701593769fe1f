//! Unbounded 3D diffusive channel between a point transmitter and an
//! absorbing spherical receiver.
//!
//! Units are micrometres and seconds throughout. Arrival counts use the
//! Gaussian approximation of the per-interval binomial absorption process;
//! the exact binomial sampler is kept alongside as an oracle.

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::special::erfc;

/// Geometry and physics of the diffusive link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Transmitter to receiver-centre distance `d` (µm).
    pub distance: f64,
    /// Receiver radius `r` (µm).
    pub radius: f64,
    /// Diffusion coefficient `D` (µm²/s).
    pub diffusion: f64,
    /// Symbol interval `Ts` (s).
    pub symbol_time: f64,
    /// Channel memory `L`, in symbol intervals.
    pub memory: usize,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            distance: 10.0,
            radius: 5.0,
            diffusion: 79.4,
            symbol_time: 0.5,
            memory: 5,
        }
    }
}

impl ChannelParams {
    pub fn new(distance: f64, radius: f64, diffusion: f64, symbol_time: f64, memory: usize) -> Result<Self> {
        let p = ChannelParams {
            distance,
            radius,
            diffusion,
            symbol_time,
            memory,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.distance, self.radius, self.diffusion, self.symbol_time]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("channel parameters must be finite"));
        }
        if !(self.radius > 0.0 && self.distance > self.radius) {
            return Err(Error::invalid(format!(
                "need d > r > 0, got d = {}, r = {}",
                self.distance, self.radius
            )));
        }
        if self.diffusion <= 0.0 {
            return Err(Error::invalid(format!("diffusion coefficient must be positive, got {}", self.diffusion)));
        }
        if self.symbol_time <= 0.0 {
            return Err(Error::invalid(format!("symbol time must be positive, got {}", self.symbol_time)));
        }
        if self.memory == 0 {
            return Err(Error::invalid("channel memory L must be at least 1"));
        }
        Ok(())
    }

    pub fn with_symbol_time(mut self, symbol_time: f64) -> Self {
        self.symbol_time = symbol_time;
        self
    }

    pub fn with_memory(mut self, memory: usize) -> Self {
        self.memory = memory;
        self
    }

    /// Fraction of released molecules absorbed by time `t`:
    /// `(r/d)·erfc((d − r)/√(4Dt))`.
    pub fn hit_fraction(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t.is_infinite() {
            return self.radius / self.distance;
        }
        let z = (self.distance - self.radius) / (4.0 * self.diffusion * t).sqrt();
        self.radius / self.distance * erfc(z)
    }

    /// Per-interval absorption probabilities `P_hit[k] = F(k·Ts) − F((k−1)·Ts)`.
    pub fn cir(&self) -> Cir {
        let ts = self.symbol_time;
        let mut prev = 0.0;
        let p_hit = (1..=self.memory)
            .map(|k| {
                let f = self.hit_fraction(k as f64 * ts);
                let p = f - prev;
                prev = f;
                p
            })
            .collect();
        Cir { p_hit }
    }

    /// Scale of the Lévy first-hitting-time law, `(d − r)²/(2D)` seconds.
    pub fn levy_scale(&self) -> f64 {
        let gap = self.distance - self.radius;
        gap * gap / (2.0 * self.diffusion)
    }
}

/// Free-function form of [`ChannelParams::hit_fraction`].
pub fn hit_fraction(t: f64, params: &ChannelParams) -> f64 {
    params.hit_fraction(t)
}

/// Free-function form of [`ChannelParams::cir`].
pub fn cir(params: &ChannelParams) -> Cir {
    params.cir()
}

/// Channel impulse response: `p_hit[0]` is the probability that a molecule
/// is absorbed in the interval it was released in, `p_hit[k]` that it is
/// absorbed `k` intervals later.
#[derive(Debug, Clone, PartialEq)]
pub struct Cir {
    p_hit: Vec<f64>,
}

impl Cir {
    /// Builds a CIR from explicit taps. Taps must lie in `[0, 1)`.
    pub fn from_taps(p_hit: Vec<f64>) -> Result<Self> {
        if p_hit.is_empty() {
            return Err(Error::invalid("a CIR needs at least one tap"));
        }
        if let Some(bad) = p_hit.iter().find(|p| !(0.0..1.0).contains(*p)) {
            return Err(Error::invalid(format!("CIR tap {bad} outside [0, 1)")));
        }
        Ok(Cir { p_hit })
    }

    pub fn taps(&self) -> &[f64] {
        &self.p_hit
    }

    pub fn len(&self) -> usize {
        self.p_hit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_hit.is_empty()
    }

    /// `P_hit[k]` with the 1-based index used for interval offsets.
    pub fn tap(&self, k: usize) -> f64 {
        assert!(k >= 1, "CIR taps are indexed from 1");
        self.p_hit.get(k - 1).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.p_hit.iter().sum()
    }

    /// Keeps only the first tap, zeroing the ISI contribution.
    pub fn first_tap_only(&self) -> Cir {
        let mut p_hit = vec![0.0; self.p_hit.len()];
        p_hit[0] = self.p_hit[0];
        Cir { p_hit }
    }
}

/// Mean and variance of the absorbed count in one interval.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ArrivalMoments {
    pub mu: f64,
    pub var: f64,
}

/// Moments of the count absorbed in the current interval.
///
/// `history` lists emissions oldest first with the current interval's
/// emission last; entries older than the history are taken as zero.
pub fn arrival_moments(history: &[f64], cir: &Cir) -> Result<ArrivalMoments> {
    if history.len() > cir.len() {
        return Err(Error::invalid(format!(
            "emission history of length {} exceeds channel memory {}",
            history.len(),
            cir.len()
        )));
    }
    if let Some(bad) = history.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
        return Err(Error::invalid(format!("emission count {bad} is not a nonnegative number")));
    }
    Ok(moments_unchecked(history.iter().rev().copied(), cir.taps()))
}

/// Moments from emissions ordered newest first (no validation).
#[inline]
pub(crate) fn moments_unchecked<I: IntoIterator<Item = f64>>(newest_first: I, taps: &[f64]) -> ArrivalMoments {
    let mut mu = 0.0;
    let mut var = 0.0;
    for (s, &p) in newest_first.into_iter().zip(taps) {
        mu += p * s;
        var += p * (1.0 - p) * s;
    }
    ArrivalMoments { mu, var }
}

/// One real-valued draw from `Normal(mu, var)`; negative values are kept.
pub fn sample_arrival<R: Rng + ?Sized>(moments: ArrivalMoments, rng: &mut R) -> f64 {
    if moments.var <= 0.0 {
        return moments.mu;
    }
    let z: f64 = rng.sample(StandardNormal);
    moments.mu + moments.var.sqrt() * z
}

/// Exact-model draw: the sum over taps of `Binomial(s, P_hit)`.
///
/// `history` is ordered like [`arrival_moments`].
pub fn sample_arrival_binomial<R: Rng + ?Sized>(history: &[u64], cir: &Cir, rng: &mut R) -> Result<u64> {
    if history.len() > cir.len() {
        return Err(Error::invalid(format!(
            "emission history of length {} exceeds channel memory {}",
            history.len(),
            cir.len()
        )));
    }
    Ok(binomial_unchecked(history.iter().rev().copied(), cir.taps(), rng))
}

#[inline]
pub(crate) fn binomial_unchecked<R: Rng + ?Sized, I: IntoIterator<Item = u64>>(newest_first: I, taps: &[f64], rng: &mut R) -> u64 {
    let mut total = 0;
    for (s, &p) in newest_first.into_iter().zip(taps) {
        if s == 0 || p <= 0.0 {
            continue;
        }
        // p < 1 is a Cir invariant, so construction cannot fail.
        total += Binomial::new(s, p).expect("valid binomial").sample(rng);
    }
    total
}
