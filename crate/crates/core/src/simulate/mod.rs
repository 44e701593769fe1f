//! Monte Carlo link simulation.
//!
//! Bits are sent in independent bursts of [`BURST_SYMBOLS`] symbols, each
//! preceded by `L − 1` training symbols that are transmitted (so the first
//! counted symbol already sees full ISI) and known to the receiver. Every
//! burst draws from its own random stream, so results do not depend on how
//! bursts are scheduled across threads.

pub mod particle;
pub mod sweep;

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{binomial_unchecked, moments_unchecked, sample_arrival, ChannelParams, Cir};
use crate::error::{Error, Result};
use crate::mlsd::detect_mlsd;
use crate::modem::{
    decode_bits, detect_admc_with, detect_ftd_with, physical_type, quantity_table, thresholds, DetectionStats,
    DetectorKind, MrskConfig, RatioSymbol, ReceivedFrame,
};
use crate::rng::{stream, Stream};

pub use particle::{absorbed_fraction, ParticleCloud};
pub use sweep::{evaluate, sweep, BerCurve, Evaluation, Scenario, SweepParam};

/// Symbols per independently seeded burst.
pub const BURST_SYMBOLS: usize = 4096;

const DOMAIN_LINK: u64 = 1;
const DOMAIN_PARTICLE: u64 = 2;

/// Source of the per-interval arrival counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    /// Gaussian counts with the superposed binomial moments.
    Statistical,
    /// Independent binomial counts per emission and tap.
    Binomial,
    /// Brownian random walks of every released molecule.
    Particle,
}

impl Engine {
    pub fn label(&self) -> &'static str {
        match self {
            Engine::Statistical => "statistical",
            Engine::Binomial => "binomial",
            Engine::Particle => "particle",
        }
    }
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "statistical" => Ok(Engine::Statistical),
            "binomial" => Ok(Engine::Binomial),
            "particle" => Ok(Engine::Particle),
            _ => Err(Error::invalid(format!(
                "unknown engine '{s}' (expected statistical, binomial or particle)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Requested bit count; rounded up to whole symbols.
    pub n_bits: u64,
    pub seed: u64,
    pub engine: Engine,
    /// Particle time step in seconds, shrunk so it divides the symbol time.
    pub particle_dt: f64,
    /// Largest number of symbols a single run may simulate.
    pub trials_cap: u64,
    /// Account for excursions into the receiver between particle steps.
    pub crossing_correction: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_bits: 100_000,
            seed: 1,
            engine: Engine::Statistical,
            particle_dt: 1e-3,
            trials_cap: 100_000_000,
            crossing_correction: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bits < 1000 {
            return Err(Error::invalid(format!("n_bits must be at least 1000, got {}", self.n_bits)));
        }
        if !(self.particle_dt > 0.0 && self.particle_dt.is_finite()) {
            return Err(Error::invalid(format!("particle_dt must be positive, got {}", self.particle_dt)));
        }
        Ok(())
    }
}

/// Bit error count with a 95% confidence interval.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BerEstimate {
    pub errors: u64,
    pub bits: u64,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub degenerate_frames: u64,
    pub clamped_counts: u64,
    pub warnings: Vec<String>,
}

impl BerEstimate {
    pub fn from_counts(errors: u64, bits: u64) -> Self {
        let (ci_low, ci_high) = confidence_interval(errors, bits);
        BerEstimate {
            errors,
            bits,
            ber: if bits == 0 { 0.0 } else { errors as f64 / bits as f64 },
            ci_low,
            ci_high,
            ..Default::default()
        }
    }

    /// A closed-form value: the interval collapses onto it.
    pub fn exact(ber: f64) -> Self {
        BerEstimate {
            ber,
            ci_low: ber,
            ci_high: ber,
            ..Default::default()
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.bits == 0 {
            return 0.0;
        }
        (self.ber * (1.0 - self.ber) / self.bits as f64).sqrt()
    }
}

const Z95: f64 = 1.959_963_984_540_054;

/// 95% interval: rule of three at zero errors, Wilson below 30 errors,
/// normal approximation otherwise.
pub fn confidence_interval(errors: u64, bits: u64) -> (f64, f64) {
    if bits == 0 {
        return (0.0, 1.0);
    }
    let n = bits as f64;
    let p = errors as f64 / n;
    if errors == 0 {
        return (0.0, (3.0 / n).min(1.0));
    }
    if errors < 30 {
        let z2 = Z95 * Z95;
        let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
        let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
        return ((centre - half).clamp(0.0, p), (centre + half).clamp(p, 1.0));
    }
    let half = Z95 * (p * (1.0 - p) / n).sqrt();
    ((p - half).max(0.0), (p + half).min(1.0))
}

/// Warning text when the particle step is too coarse for the receiver.
pub fn particle_step_warning(channel: &ChannelParams, dt: f64) -> Option<String> {
    let rms = (2.0 * channel.diffusion * dt).sqrt();
    (rms > channel.radius / 5.0).then(|| {
        format!(
            "particle step too coarse: rms step {rms:.4} exceeds r/5 = {:.4}",
            channel.radius / 5.0
        )
    })
}

/// Simulates the MRSK link and counts bit errors.
pub fn run_link(cfg: &MrskConfig, channel: &ChannelParams, sim: &SimConfig) -> Result<BerEstimate> {
    channel.validate()?;
    run_link_with_cir(cfg, channel, channel.cir(), sim)
}

/// [`run_link`] with explicit CIR taps for the statistical and binomial
/// engines. The particle engine takes only the tap count from `cir`.
pub fn run_link_with_cir(cfg: &MrskConfig, channel: &ChannelParams, cir: Cir, sim: &SimConfig) -> Result<BerEstimate> {
    cfg.validate()?;
    channel.validate()?;
    sim.validate()?;
    let bps = cfg.bits_per_symbol() as u64;
    let symbols = sim.n_bits.div_ceil(bps);
    if symbols > sim.trials_cap {
        return Err(Error::CapExceeded {
            what: "simulated symbols",
            required: symbols as u128,
            cap: sim.trials_cap as u128,
        });
    }
    match cfg.detector {
        DetectorKind::Admc if cir.len() < 2 => {
            return Err(Error::invalid("memory cancellation needs a CIR with at least two taps"));
        }
        DetectorKind::Mlsd if cfg.role_rotation => {
            return Err(Error::Unsupported("sequence detection with role rotation".into()));
        }
        DetectorKind::Mlsd => {
            // Surfaces a state-cap refusal before any simulation work.
            crate::mlsd::Trellis::new(cfg, &cir)?;
        }
        _ => {}
    }
    let ctx = LinkContext::new(cfg, channel, sim, cir);
    let bursts = symbols.div_ceil(BURST_SYMBOLS as u64);
    let results: Vec<Result<(u64, u64, DetectionStats)>> = (0..bursts)
        .into_par_iter()
        .map(|b| {
            let len = (symbols - b * BURST_SYMBOLS as u64).min(BURST_SYMBOLS as u64) as usize;
            ctx.burst(b, len)
        })
        .collect();
    let mut errors = 0;
    let mut bits = 0;
    let mut stats = DetectionStats::default();
    for r in results {
        let (e, n, s) = r?;
        errors += e;
        bits += n;
        stats.merge(s);
    }
    let mut est = BerEstimate::from_counts(errors, bits);
    est.degenerate_frames = stats.degenerate_frames;
    est.clamped_counts = stats.clamped_counts;
    if sim.engine == Engine::Particle {
        est.warnings.extend(particle_step_warning(channel, ctx.dt));
    }
    Ok(est)
}

struct LinkContext<'a> {
    cfg: &'a MrskConfig,
    channel: &'a ChannelParams,
    sim: &'a SimConfig,
    cir: Cir,
    table: Vec<Vec<f64>>,
    thresholds: Vec<f64>,
    dt: f64,
    steps_per_symbol: usize,
}

impl<'a> LinkContext<'a> {
    fn new(cfg: &'a MrskConfig, channel: &'a ChannelParams, sim: &'a SimConfig, cir: Cir) -> Self {
        let steps_per_symbol = (channel.symbol_time / sim.particle_dt).ceil().max(1.0) as usize;
        LinkContext {
            cfg,
            channel,
            sim,
            cir,
            table: quantity_table(cfg),
            thresholds: thresholds(cfg),
            dt: channel.symbol_time / steps_per_symbol as f64,
            steps_per_symbol,
        }
    }

    /// Physical-type emission of `symbol` sent in slot `k`.
    fn emission(&self, symbol: usize, k: usize) -> Vec<f64> {
        let row = &self.table[symbol];
        let mut out = vec![0.0; row.len()];
        for (role, &q) in row.iter().enumerate() {
            out[physical_type(role, k, self.cfg)] = q;
        }
        out
    }

    fn burst(&self, index: u64, len: usize) -> Result<(u64, u64, DetectionStats)> {
        let cfg = self.cfg;
        let n = cfg.molecule_types;
        let memory = self.cir.len();
        let pre = memory - 1;
        let total = pre + len;
        let mut rng = stream(self.sim.seed, DOMAIN_LINK, index);
        let s = cfg.symbol_count() as usize;
        let sent: Vec<usize> = (0..total).map(|_| rng.random_range(0..s)).collect();
        let emissions: Vec<Vec<f64>> = sent.iter().enumerate().map(|(k, &id)| self.emission(id, k)).collect();
        let counts = match self.sim.engine {
            Engine::Statistical => self.statistical_counts(&emissions, &mut rng),
            Engine::Binomial => self.binomial_counts(&emissions, &mut rng),
            Engine::Particle => self.particle_counts(&emissions, &mut rng),
        };

        let mut stats = DetectionStats::default();
        let to_role = |k: usize, physical: &[f64]| -> ReceivedFrame {
            ReceivedFrame::new((0..n).map(|role| physical[physical_type(role, k, cfg)]).collect())
        };
        let training: Vec<RatioSymbol> = sent[..pre].iter().map(|&id| RatioSymbol::from_id(id, cfg)).collect();
        let detected: Vec<RatioSymbol> = match cfg.detector {
            DetectorKind::Ftd => (pre..total)
                .map(|k| detect_ftd_with(&to_role(k, &counts[k]), &self.thresholds, cfg, &mut stats))
                .collect(),
            DetectorKind::Admc => {
                let p2 = self.cir.tap(2);
                let mut previous = training.last().map(|sym| sym.id(cfg.levels()));
                let mut out = Vec::with_capacity(len);
                for k in pre..total {
                    let frame = to_role(k, &counts[k]);
                    // ISI estimate per physical type, then viewed by role.
                    let isi = match previous {
                        Some(id) => self.emission(id, k - 1).iter().map(|&q| p2 * q).collect(),
                        None => vec![0.0; n],
                    };
                    let isi_roles: Vec<f64> = (0..n).map(|role| isi[physical_type(role, k, cfg)]).collect();
                    let sym = detect_admc_with(&frame, &isi_roles, &self.thresholds, cfg, &mut stats);
                    previous = Some(sym.id(cfg.levels()));
                    out.push(sym);
                }
                out
            }
            DetectorKind::Mlsd => {
                let eps = cfg.epsilon();
                let frames: Vec<Vec<f64>> = (pre..total)
                    .map(|k| {
                        let frame = to_role(k, &counts[k]);
                        if frame.ratios(eps).is_none() {
                            stats.degenerate_frames += 1;
                        }
                        frame.floored_ratios(eps)
                    })
                    .collect();
                let mut history = training.clone();
                let mut out = Vec::with_capacity(len);
                for block in frames.chunks(cfg.mlsd_window) {
                    let decided = detect_mlsd(block, &history, &self.cir, cfg)?;
                    history.extend(decided.iter().cloned());
                    let keep = history.len().saturating_sub(pre);
                    history.drain(..keep);
                    out.extend(decided);
                }
                out
            }
        };
        let sent_syms: Vec<RatioSymbol> = sent[pre..].iter().map(|&id| RatioSymbol::from_id(id, cfg)).collect();
        let tx_bits = decode_bits(&sent_syms, cfg);
        let rx_bits = decode_bits(&detected, cfg);
        let errors = tx_bits.iter().zip(&rx_bits).filter(|(a, b)| a != b).count() as u64;
        Ok((errors, tx_bits.len() as u64, stats))
    }

    fn statistical_counts(&self, emissions: &[Vec<f64>], rng: &mut Stream) -> Vec<Vec<f64>> {
        let taps = self.cir.taps();
        (0..emissions.len())
            .map(|k| {
                (0..self.cfg.molecule_types)
                    .map(|t| {
                        let m = moments_unchecked((0..=k).rev().map(|j| emissions[j][t]), taps);
                        sample_arrival(m, rng)
                    })
                    .collect()
            })
            .collect()
    }

    fn binomial_counts(&self, emissions: &[Vec<f64>], rng: &mut Stream) -> Vec<Vec<f64>> {
        let taps = self.cir.taps();
        (0..emissions.len())
            .map(|k| {
                (0..self.cfg.molecule_types)
                    .map(|t| {
                        let newest_first = (0..=k).rev().map(|j| emissions[j][t].round() as u64);
                        binomial_unchecked(newest_first, taps, rng) as f64
                    })
                    .collect()
            })
            .collect()
    }

    fn particle_counts(&self, emissions: &[Vec<f64>], rng: &mut Stream) -> Vec<Vec<f64>> {
        let memory = self.cir.len();
        let horizon = memory * self.steps_per_symbol;
        let walker = particle::Walker::new(self.channel, self.dt, self.sim.crossing_correction);
        let mut counts = vec![vec![0.0; self.cfg.molecule_types]; emissions.len()];
        for (k, emission) in emissions.iter().enumerate() {
            for (t, &q) in emission.iter().enumerate() {
                for _ in 0..q.round() as u64 {
                    if let Some(step) = walker.first_passage(horizon, rng) {
                        let slot = k + step / self.steps_per_symbol;
                        if slot < counts.len() {
                            counts[slot][t] += 1.0;
                        }
                    }
                }
            }
        }
        counts
    }
}

/// Domain tag for particle-only experiments outside the link simulator.
pub(crate) fn particle_stream(seed: u64, index: u64) -> Stream {
    stream(seed, DOMAIN_PARTICLE, index)
}
