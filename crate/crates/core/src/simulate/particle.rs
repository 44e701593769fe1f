//! Brownian-dynamics ground truth for the absorbing receiver.
//!
//! The receiver sits at the origin; molecules start at `(d, 0, 0)`. Each
//! step adds an independent `Normal(0, 2D·dt)` displacement per axis. A
//! molecule ending a step inside the sphere is absorbed; with the crossing
//! correction on, a molecule that stays outside is still absorbed with the
//! Brownian-bridge probability `exp(−h₀h₁/(D·dt))` of having touched the
//! surface in between, where `h` are the distances to the surface.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::ChannelParams;
use crate::error::{Error, Result};

/// Per-molecule stepping kernel.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Walker {
    sigma: f64,
    radius: f64,
    start: f64,
    bridge_scale: Option<f64>,
}

impl Walker {
    pub(crate) fn new(channel: &ChannelParams, dt: f64, crossing_correction: bool) -> Self {
        let d_dt = channel.diffusion * dt;
        Walker {
            sigma: (2.0 * d_dt).sqrt(),
            radius: channel.radius,
            start: channel.distance,
            bridge_scale: (crossing_correction && d_dt > 0.0).then(|| 1.0 / d_dt),
        }
    }

    /// Moves `pos` one step; returns whether the molecule was absorbed.
    #[inline]
    fn step<R: Rng + ?Sized>(&self, pos: &mut [f64; 3], rng: &mut R) -> bool {
        let before = norm(pos);
        for x in pos.iter_mut() {
            *x += self.sigma * rng.sample::<f64, _>(StandardNormal);
        }
        let after = norm(pos);
        if after <= self.radius {
            return true;
        }
        match self.bridge_scale {
            Some(scale) => {
                let p = (-(before - self.radius) * (after - self.radius) * scale).exp();
                rng.random::<f64>() < p
            }
            None => false,
        }
    }

    /// Step (0-based) at which a fresh molecule is absorbed, if within
    /// `horizon` steps.
    pub(crate) fn first_passage<R: Rng + ?Sized>(&self, horizon: usize, rng: &mut R) -> Option<usize> {
        let mut pos = [self.start, 0.0, 0.0];
        (0..horizon).find(|_| self.step(&mut pos, rng))
    }
}

#[inline]
fn norm(p: &[f64; 3]) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

/// Free molecules around one absorbing receiver.
#[derive(Debug, Clone)]
pub struct ParticleCloud {
    pub positions: Vec<[f64; 3]>,
    pub kinds: Vec<usize>,
    /// Absorptions tallied per molecule type since the last [`Self::take_interval`].
    pub interval_hits: Vec<u64>,
    pub total_hits: Vec<u64>,
    pub diffusion: f64,
    pub radius: f64,
    pub crossing_correction: bool,
    pub elapsed: f64,
}

impl ParticleCloud {
    pub fn new(channel: &ChannelParams, molecule_types: usize, crossing_correction: bool) -> Self {
        ParticleCloud {
            positions: Vec::new(),
            kinds: Vec::new(),
            interval_hits: vec![0; molecule_types],
            total_hits: vec![0; molecule_types],
            diffusion: channel.diffusion,
            radius: channel.radius,
            crossing_correction,
            elapsed: 0.0,
        }
    }

    /// Releases `count` molecules of `kind` at `at`.
    pub fn release(&mut self, kind: usize, count: usize, at: [f64; 3]) {
        self.positions.extend(std::iter::repeat_n(at, count));
        self.kinds.extend(std::iter::repeat_n(kind, count));
    }

    pub fn live(&self) -> usize {
        self.positions.len()
    }

    /// Advances every live molecule by `dt`, removing absorbed ones.
    /// Returns the number absorbed in this step.
    pub fn step<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) -> Result<usize> {
        if !(dt > 0.0) {
            return Err(Error::invalid(format!("time step must be positive, got {dt}")));
        }
        let d_dt = self.diffusion * dt;
        let walker = Walker {
            sigma: (2.0 * d_dt).sqrt(),
            radius: self.radius,
            start: 0.0,
            bridge_scale: (self.crossing_correction && d_dt > 0.0).then(|| 1.0 / d_dt),
        };
        let mut absorbed = 0;
        let mut i = 0;
        while i < self.positions.len() {
            if walker.step(&mut self.positions[i], rng) {
                let kind = self.kinds[i];
                self.interval_hits[kind] += 1;
                self.total_hits[kind] += 1;
                self.positions.swap_remove(i);
                self.kinds.swap_remove(i);
                absorbed += 1;
            } else {
                i += 1;
            }
        }
        self.elapsed += dt;
        Ok(absorbed)
    }

    /// Returns and resets the per-type hits of the current interval.
    pub fn take_interval(&mut self) -> Vec<u64> {
        let n = self.interval_hits.len();
        std::mem::replace(&mut self.interval_hits, vec![0; n])
    }
}

const FRACTION_CHUNK: usize = 10_000;

/// Fraction of `molecules` released at distance `d` that the receiver has
/// absorbed by time `t`, estimated by random walks with step `dt`.
pub fn absorbed_fraction(
    channel: &ChannelParams,
    molecules: usize,
    t: f64,
    dt: f64,
    crossing_correction: bool,
    seed: u64,
) -> Result<f64> {
    channel.validate()?;
    if !(dt > 0.0 && t > 0.0) || molecules == 0 {
        return Err(Error::invalid("absorbed_fraction needs t > 0, dt > 0 and molecules > 0"));
    }
    let steps = (t / dt).round().max(1.0) as usize;
    let walker = Walker::new(channel, t / steps as f64, crossing_correction);
    let hits: Vec<usize> = (0..molecules.div_ceil(FRACTION_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = super::particle_stream(seed, c as u64);
            let n = (molecules - c * FRACTION_CHUNK).min(FRACTION_CHUNK);
            (0..n).filter(|_| walker.first_passage(steps, &mut rng).is_some()).count()
        })
        .collect();
    Ok(hits.iter().sum::<usize>() as f64 / molecules as f64)
}
