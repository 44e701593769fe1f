//! MRSK symbol construction and the per-symbol detectors.
//!
//! A symbol is a vector of `N − 1` ratio indices. Index `i` (0-based here)
//! selects the ratio `Ω^(−1 + 2i/(2^M − 1))`; the emitted quantities are the
//! running product of the ratios starting from the reference count `Q`.

use std::fmt;
use std::str::FromStr;

use crate::channel::Cir;
use crate::error::{Error, Result};

/// Bit-to-index mapping inside one ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Coding {
    #[default]
    Binary,
    Gray,
}

/// Per-symbol or sequence detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DetectorKind {
    /// Fixed thresholds on the received ratios.
    #[default]
    Ftd,
    /// One-symbol memory cancellation followed by fixed thresholds.
    Admc,
    /// Maximum-likelihood sequence detection over a trellis.
    Mlsd,
}

/// Branch metric used by the sequence detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BranchMetric {
    /// Log of the solid-approximation ratio density.
    #[default]
    Solid,
    /// Log of the Gaussian ratio approximation.
    Gaussian,
}

macro_rules! label_enum {
    ($t:ty, $what:literal, $($variant:path => $label:literal),+) => {
        impl $t {
            pub fn label(&self) -> &'static str {
                match self { $($variant => $label),+ }
            }
        }
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.label())
            }
        }
        impl FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().as_str() {
                    $($label => Ok($variant),)+
                    other => Err(Error::invalid(format!(
                        concat!("unknown ", $what, " '{}' (expected one of: {})"),
                        other,
                        [$($label),+].join(", ")
                    ))),
                }
            }
        }
    };
}

label_enum!(Coding, "coding", Coding::Binary => "binary", Coding::Gray => "gray");
label_enum!(DetectorKind, "detector", DetectorKind::Ftd => "ftd", DetectorKind::Admc => "admc", DetectorKind::Mlsd => "mlsd");
label_enum!(BranchMetric, "branch metric", BranchMetric::Solid => "solid", BranchMetric::Gaussian => "gaussian");

/// Modulation and detection parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MrskConfig {
    /// Number of molecule types `N`.
    pub molecule_types: usize,
    /// Bits carried by each ratio, `M`.
    pub bits_per_ratio: u32,
    /// Ratio-range base `Ω`; ratios lie in `[Ω⁻¹, Ω]`.
    pub omega: f64,
    /// Reference count `Q` released for the first molecule type.
    pub reference_count: f64,
    pub coding: Coding,
    pub detector: DetectorKind,
    /// Symbols decided jointly by one trellis pass.
    pub mlsd_window: usize,
    pub mlsd_metric: BranchMetric,
    /// Largest trellis state count the sequence detector will build.
    pub mlsd_state_cap: u64,
    /// Denominator floor as a fraction of `Q`.
    pub epsilon_rel: f64,
    /// Rotate which physical molecule plays each role, symbol by symbol.
    pub role_rotation: bool,
}

impl Default for MrskConfig {
    fn default() -> Self {
        MrskConfig {
            molecule_types: 2,
            bits_per_ratio: 1,
            omega: std::f64::consts::E,
            reference_count: 1000.0,
            coding: Coding::Binary,
            detector: DetectorKind::Ftd,
            mlsd_window: 64,
            mlsd_metric: BranchMetric::Solid,
            mlsd_state_cap: 1 << 16,
            epsilon_rel: 1e-6,
            role_rotation: false,
        }
    }
}

impl MrskConfig {
    pub fn validate(&self) -> Result<()> {
        if self.molecule_types < 2 {
            return Err(Error::invalid(format!("need at least 2 molecule types, got {}", self.molecule_types)));
        }
        if !(1..=15).contains(&self.bits_per_ratio) {
            return Err(Error::invalid(format!("bits per ratio must be in 1..=15, got {}", self.bits_per_ratio)));
        }
        if !(self.omega > 1.0 && self.omega.is_finite()) {
            return Err(Error::invalid(format!("Omega must be a finite value above 1, got {}", self.omega)));
        }
        if !(self.reference_count > 0.0 && self.reference_count.is_finite()) {
            return Err(Error::invalid(format!("Q must be positive, got {}", self.reference_count)));
        }
        if self.mlsd_window == 0 {
            return Err(Error::invalid("MLSD window must be at least 1"));
        }
        if !(self.epsilon_rel > 0.0) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        if self.bits_per_symbol() > 62 {
            return Err(Error::invalid("symbols wider than 62 bits are not supported"));
        }
        Ok(())
    }

    pub fn ratios_per_symbol(&self) -> usize {
        self.molecule_types - 1
    }

    /// Alphabet size `2^M` of one ratio.
    pub fn levels(&self) -> usize {
        1usize << self.bits_per_ratio
    }

    /// `M·(N − 1)`.
    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_ratio as usize * self.ratios_per_symbol()
    }

    /// Number of distinct symbols, `(2^M)^(N−1)`.
    pub fn symbol_count(&self) -> u128 {
        1u128 << self.bits_per_symbol()
    }

    /// Absolute denominator floor used by the detectors.
    pub fn epsilon(&self) -> f64 {
        self.epsilon_rel * self.reference_count
    }
}

/// Ratio indices of one symbol, each in `0..2^M`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RatioSymbol {
    pub indices: Vec<u16>,
}

impl RatioSymbol {
    pub fn new(indices: Vec<u16>) -> Self {
        RatioSymbol { indices }
    }

    /// The all-lowest-index symbol emitted for degenerate frames.
    pub fn lowest(cfg: &MrskConfig) -> Self {
        RatioSymbol {
            indices: vec![0; cfg.ratios_per_symbol()],
        }
    }

    /// Mixed-radix id, first ratio most significant.
    pub fn id(&self, levels: usize) -> usize {
        self.indices.iter().fold(0, |acc, &i| acc * levels + i as usize)
    }

    pub fn from_id(mut id: usize, cfg: &MrskConfig) -> Self {
        let levels = cfg.levels();
        let mut indices = vec![0u16; cfg.ratios_per_symbol()];
        for slot in indices.iter_mut().rev() {
            *slot = (id % levels) as u16;
            id /= levels;
        }
        RatioSymbol { indices }
    }

    fn check(&self, cfg: &MrskConfig) -> Result<()> {
        if self.indices.len() != cfg.ratios_per_symbol() {
            return Err(Error::invalid(format!(
                "symbol has {} ratios, expected {}",
                self.indices.len(),
                cfg.ratios_per_symbol()
            )));
        }
        if let Some(i) = self.indices.iter().find(|&&i| i as usize >= cfg.levels()) {
            return Err(Error::invalid(format!("ratio index {i} outside 0..{}", cfg.levels())));
        }
        Ok(())
    }
}

/// Molecule counts released for one symbol, in role order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionVector(pub Vec<f64>);

impl EmissionVector {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Per-type counts received in one symbol interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedFrame {
    pub counts: Vec<f64>,
}

impl ReceivedFrame {
    pub fn new(counts: Vec<f64>) -> Self {
        ReceivedFrame { counts }
    }

    /// `counts[i+1]/counts[i]`, or `None` if any denominator is at or
    /// below `epsilon`.
    pub fn ratios(&self, epsilon: f64) -> Option<Vec<f64>> {
        if self.counts[..self.counts.len() - 1].iter().any(|&c| c <= epsilon) {
            return None;
        }
        Some(self.counts.windows(2).map(|w| w[1] / w[0]).collect())
    }

    /// Ratios with each denominator floored at `epsilon`; always defined.
    pub fn floored_ratios(&self, epsilon: f64) -> Vec<f64> {
        self.counts.windows(2).map(|w| w[1] / w[0].max(epsilon)).collect()
    }
}

/// Diagnostics accumulated by the detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DetectionStats {
    /// Frames whose ratios were undefined.
    pub degenerate_frames: u64,
    /// Adjusted counts that memory cancellation pushed to or below epsilon.
    pub clamped_counts: u64,
}

impl DetectionStats {
    pub fn merge(&mut self, other: DetectionStats) {
        self.degenerate_frames += other.degenerate_frames;
        self.clamped_counts += other.clamped_counts;
    }
}

/// The `2^M` predefined ratios, increasing from `Ω⁻¹` to `Ω`.
pub fn ratio_alphabet(cfg: &MrskConfig) -> Vec<f64> {
    let n = cfg.levels();
    let span = (n - 1) as f64;
    (0..n)
        .map(|i| match i {
            0 => 1.0 / cfg.omega,
            _ if i == n - 1 => cfg.omega,
            _ => cfg.omega.powf(-1.0 + 2.0 * i as f64 / span),
        })
        .collect()
}

/// The `2^M − 1` thresholds `Ω^(−1 + (2i − 1)/(2^M − 1))`, i.e. the
/// geometric means of neighbouring alphabet entries.
pub fn thresholds(cfg: &MrskConfig) -> Vec<f64> {
    let n = cfg.levels();
    let span = (n - 1) as f64;
    (1..n)
        .map(|i| {
            let e = -1.0 + (2 * i - 1) as f64 / span;
            if e == 0.0 {
                1.0
            } else {
                cfg.omega.powf(e)
            }
        })
        .collect()
}

/// Codeword carried by alphabet index `index`.
#[inline]
pub fn codeword(index: u32, coding: Coding) -> u32 {
    match coding {
        Coding::Binary => index,
        Coding::Gray => index ^ (index >> 1),
    }
}

/// Alphabet index that carries `word`.
#[inline]
pub fn index_for_codeword(word: u32, coding: Coding) -> u32 {
    match coding {
        Coding::Binary => word,
        Coding::Gray => {
            let mut x = word;
            let mut shift = x >> 1;
            while shift != 0 {
                x ^= shift;
                shift >>= 1;
            }
            x
        }
    }
}

/// Bit differences between the codewords of two alphabet indices.
pub fn hamming(a: u32, b: u32, coding: Coding) -> u32 {
    (codeword(a, coding) ^ codeword(b, coding)).count_ones()
}

/// Groups bits (most significant first) into symbols.
pub fn encode_bits(bits: &[bool], cfg: &MrskConfig) -> Result<Vec<RatioSymbol>> {
    let m = cfg.bits_per_ratio as usize;
    let per_symbol = cfg.bits_per_symbol();
    if !bits.len().is_multiple_of(per_symbol) {
        return Err(Error::BitLength {
            len: bits.len(),
            symbol_bits: per_symbol,
        });
    }
    Ok(bits
        .chunks(per_symbol)
        .map(|chunk| {
            let indices = chunk
                .chunks(m)
                .map(|group| {
                    let word = group.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
                    index_for_codeword(word, cfg.coding) as u16
                })
                .collect();
            RatioSymbol { indices }
        })
        .collect())
}

/// Inverse of [`encode_bits`].
pub fn decode_bits(symbols: &[RatioSymbol], cfg: &MrskConfig) -> Vec<bool> {
    let m = cfg.bits_per_ratio;
    let mut out = Vec::with_capacity(symbols.len() * cfg.bits_per_symbol());
    for sym in symbols {
        for &i in &sym.indices {
            let word = codeword(i as u32, cfg.coding);
            out.extend((0..m).rev().map(|b| (word >> b) & 1 == 1));
        }
    }
    out
}

/// Emitted counts: `Q` for the first type, then the running product of ratios.
pub fn quantities(symbol: &RatioSymbol, cfg: &MrskConfig) -> Result<EmissionVector> {
    symbol.check(cfg)?;
    let alphabet = ratio_alphabet(cfg);
    Ok(quantities_with(symbol, &alphabet, cfg.reference_count))
}

pub(crate) fn quantities_with(symbol: &RatioSymbol, alphabet: &[f64], q: f64) -> EmissionVector {
    let mut out = Vec::with_capacity(symbol.indices.len() + 1);
    let mut cur = q;
    out.push(cur);
    for &i in &symbol.indices {
        cur *= alphabet[i as usize];
        out.push(cur);
    }
    EmissionVector(out)
}

/// Quantities for every symbol id, row `id` holding `N` counts.
pub(crate) fn quantity_table(cfg: &MrskConfig) -> Vec<Vec<f64>> {
    let alphabet = ratio_alphabet(cfg);
    (0..cfg.symbol_count() as usize)
        .map(|id| quantities_with(&RatioSymbol::from_id(id, cfg), &alphabet, cfg.reference_count).0)
        .collect()
}

/// Expected molecules released per bit under uniformly random symbols.
pub fn average_molecules_per_bit(cfg: &MrskConfig) -> f64 {
    let alphabet = ratio_alphabet(cfg);
    let mean_ratio = alphabet.iter().sum::<f64>() / alphabet.len() as f64;
    // Ratios are independent, so E[Q_i] = Q·(mean ratio)^(i−1).
    let per_symbol: f64 = (0..cfg.molecule_types)
        .map(|i| cfg.reference_count * mean_ratio.powi(i as i32))
        .sum();
    per_symbol / cfg.bits_per_symbol() as f64
}

/// Physical molecule type that plays role `role` during symbol `k`.
///
/// Identity unless role rotation is on, in which case roles advance by one
/// type per symbol.
#[inline]
pub fn physical_type(role: usize, k: usize, cfg: &MrskConfig) -> usize {
    if cfg.role_rotation {
        (role + k) % cfg.molecule_types
    } else {
        role
    }
}

/// Bucket index of `z`: the number of thresholds at or below it.
#[inline]
pub(crate) fn classify(z: f64, thresholds: &[f64]) -> u16 {
    thresholds.partition_point(|&e| e <= z) as u16
}

/// Fixed-threshold detection. A degenerate frame yields the all-lowest
/// symbol and is counted in `stats`.
pub fn detect_ftd(frame: &ReceivedFrame, cfg: &MrskConfig, stats: &mut DetectionStats) -> RatioSymbol {
    let th = thresholds(cfg);
    detect_ftd_with(frame, &th, cfg, stats)
}

pub(crate) fn detect_ftd_with(
    frame: &ReceivedFrame,
    th: &[f64],
    cfg: &MrskConfig,
    stats: &mut DetectionStats,
) -> RatioSymbol {
    match frame.ratios(cfg.epsilon()) {
        Some(z) => RatioSymbol {
            indices: z.iter().map(|&v| classify(v, th)).collect(),
        },
        None => {
            stats.degenerate_frames += 1;
            RatioSymbol::lowest(cfg)
        }
    }
}

/// Adaptive detection with one-symbol memory cancellation.
///
/// Subtracts `P_hit[2]` times the quantities of the previously detected
/// symbol before thresholding. `previous` is `None` for the first symbol of
/// a burst.
pub fn detect_admc(
    frame: &ReceivedFrame,
    previous: Option<&RatioSymbol>,
    cir: &Cir,
    cfg: &MrskConfig,
    stats: &mut DetectionStats,
) -> Result<RatioSymbol> {
    if cir.len() < 2 {
        return Err(Error::invalid("memory cancellation needs a CIR with at least two taps"));
    }
    let estimate = match previous {
        Some(sym) => {
            let q = quantities(sym, cfg)?;
            q.0.iter().map(|&v| cir.tap(2) * v).collect()
        }
        None => vec![0.0; cfg.molecule_types],
    };
    Ok(detect_admc_with(frame, &estimate, &thresholds(cfg), cfg, stats))
}

/// Memory cancellation with an explicit per-role ISI estimate.
pub(crate) fn detect_admc_with(
    frame: &ReceivedFrame,
    isi_estimate: &[f64],
    th: &[f64],
    cfg: &MrskConfig,
    stats: &mut DetectionStats,
) -> RatioSymbol {
    let eps = cfg.epsilon();
    let adjusted = frame
        .counts
        .iter()
        .zip(isi_estimate)
        .map(|(&c, &isi)| {
            let a = c - isi;
            if a <= eps {
                stats.clamped_counts += 1;
                eps
            } else {
                a
            }
        })
        .collect();
    detect_ftd_with(&ReceivedFrame::new(adjusted), th, cfg, stats)
}
