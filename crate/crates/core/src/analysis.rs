//! Closed-form BER of MRSK with fixed-threshold detection.
//!
//! Every length-`L` symbol sequence is enumerated; for the newest symbol the
//! probability that ratio `j` lands in each threshold bucket comes from the
//! solid-approximation CDF evaluated with the sequence's arrival moments.
//! Memory cancellation has no analytic counterpart here: its BER is
//! obtained from [`crate::simulate::run_link`] only.

use rayon::prelude::*;

use crate::channel::{moments_unchecked, ArrivalMoments, ChannelParams, Cir};
use crate::error::{Error, Result};
use crate::modem::{hamming as index_hamming, quantity_table, thresholds, Coding, MrskConfig, RatioSymbol};
use crate::ratio_stats::solid_ratio_cdf_moments;

/// Default bound on the number of enumerated sequences.
pub const DEFAULT_SEQUENCE_CAP: u128 = 1 << 24;

const CHUNK: usize = 4096;

/// The set of symbol sequences the analytic BER averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SequenceSpace {
    pub memory: usize,
    pub symbol_count: u128,
    pub total: u128,
}

impl SequenceSpace {
    pub fn new(cfg: &MrskConfig, memory: usize, cap: u128) -> Result<Self> {
        let symbol_count = cfg.symbol_count();
        let total = symbol_count.checked_pow(memory as u32).unwrap_or(u128::MAX);
        if total > cap {
            return Err(Error::CapExceeded {
                what: "BER sequence enumeration",
                required: total,
                cap,
            });
        }
        Ok(SequenceSpace {
            memory,
            symbol_count,
            total,
        })
    }
}

/// Analytic BER and, on request, the error probability of every sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct BerResult {
    pub ber: f64,
    /// Indexed by sequence id: digit `m` (base symbol count) is the symbol
    /// `m` intervals before the current one.
    pub per_sequence: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub sequence_cap: u128,
    pub keep_per_sequence: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            sequence_cap: DEFAULT_SEQUENCE_CAP,
            keep_per_sequence: false,
        }
    }
}

/// Bit differences between the codewords of alphabet indices `a` and `b`.
pub fn hamming(a: u32, b: u32, coding: Coding) -> u32 {
    index_hamming(a, b, coding)
}

/// Arrival moments of every molecule type for a sequence given oldest first.
fn sequence_moments(table: &[Vec<f64>], ids_newest_first: &[usize], taps: &[f64], out: &mut [ArrivalMoments]) {
    for (t, slot) in out.iter_mut().enumerate() {
        *slot = moments_unchecked(ids_newest_first.iter().map(|&id| table[id][t]), taps);
    }
}

/// Probability that ratio `j` (0-based) of the newest symbol in `sequence`
/// is detected as alphabet index `i`, i.e. `P(E_i ≤ z_j < E_{i+1})` with
/// `E_0 = −∞` and `E_{2^M} = +∞`.
///
/// `sequence` lists the last `L` transmitted symbols, oldest first.
pub fn ftd_detection_prob(j: usize, i: usize, sequence: &[RatioSymbol], cir: &Cir, cfg: &MrskConfig) -> Result<f64> {
    cfg.validate()?;
    if j >= cfg.ratios_per_symbol() || i >= cfg.levels() {
        return Err(Error::invalid(format!("ratio {j} / index {i} out of range")));
    }
    if sequence.is_empty() || sequence.len() > cir.len() {
        return Err(Error::invalid(format!(
            "sequence length {} must be in 1..={}",
            sequence.len(),
            cir.len()
        )));
    }
    let table = quantity_table(cfg);
    let levels = cfg.levels();
    let ids: Vec<usize> = sequence.iter().rev().map(|s| s.id(levels)).collect();
    let mut moments = vec![ArrivalMoments::default(); cfg.molecule_types];
    sequence_moments(&table, &ids, cir.taps(), &mut moments);
    let th = thresholds(cfg);
    let lower = if i == 0 { f64::NEG_INFINITY } else { th[i - 1] };
    let upper = if i == levels - 1 { f64::INFINITY } else { th[i] };
    let (num, den) = (moments[j + 1], moments[j]);
    Ok(solid_ratio_cdf_moments(upper, num, den) - solid_ratio_cdf_moments(lower, num, den))
}

/// Analytic FTD bit error rate with default options.
pub fn ftd_ber(cfg: &MrskConfig, channel: &ChannelParams) -> Result<BerResult> {
    ftd_ber_with(cfg, channel, AnalysisOptions::default())
}

pub fn ftd_ber_with(cfg: &MrskConfig, channel: &ChannelParams, opts: AnalysisOptions) -> Result<BerResult> {
    cfg.validate()?;
    channel.validate()?;
    if cfg.role_rotation {
        return Err(Error::Unsupported(
            "the analytic BER does not model molecule-role rotation; use a simulation engine".into(),
        ));
    }
    let space = SequenceSpace::new(cfg, channel.memory, opts.sequence_cap)?;
    let cir = channel.cir();
    let table = quantity_table(cfg);
    let th = thresholds(cfg);
    let total = space.total as usize;
    let s = space.symbol_count as usize;
    let memory = channel.memory;
    let taps = cir.taps();

    let error_prob = |seq: usize, ids: &mut [usize], moments: &mut [ArrivalMoments], cdf: &mut [f64]| -> f64 {
        let mut rest = seq;
        for slot in ids.iter_mut() {
            *slot = rest % s;
            rest /= s;
        }
        sequence_moments(&table, ids, taps, moments);
        let current = RatioSymbol::from_id(ids[0], cfg);
        let mut bit_errors = 0.0;
        for j in 0..cfg.ratios_per_symbol() {
            let (num, den) = (moments[j + 1], moments[j]);
            for (slot, &e) in cdf.iter_mut().zip(&th) {
                *slot = solid_ratio_cdf_moments(e, num, den);
            }
            let sent = current.indices[j] as u32;
            let mut below = 0.0;
            for i in 0..cfg.levels() {
                let upto = if i < th.len() { cdf[i] } else { 1.0 };
                let p = upto - below;
                below = upto;
                if i as u32 != sent {
                    bit_errors += index_hamming(i as u32, sent, cfg.coding) as f64 * p;
                }
            }
        }
        bit_errors / cfg.bits_per_symbol() as f64
    };

    let chunks: Vec<(f64, Option<Vec<f64>>)> = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut ids = vec![0usize; memory];
            let mut moments = vec![ArrivalMoments::default(); cfg.molecule_types];
            let mut cdf = vec![0.0; th.len()];
            let range = c * CHUNK..((c + 1) * CHUNK).min(total);
            let mut sum = 0.0;
            let mut kept = opts.keep_per_sequence.then(|| Vec::with_capacity(range.len()));
            for seq in range {
                let pe = error_prob(seq, &mut ids, &mut moments, &mut cdf);
                sum += pe;
                if let Some(k) = kept.as_mut() {
                    k.push(pe);
                }
            }
            (sum, kept)
        })
        .collect();

    // Chunk sums are combined in index order so the result does not depend
    // on the worker count.
    let sum: f64 = chunks.iter().map(|(s, _)| s).sum();
    let per_sequence = opts
        .keep_per_sequence
        .then(|| chunks.into_iter().flat_map(|(_, k)| k.unwrap_or_default()).collect());
    Ok(BerResult {
        ber: (sum / total as f64).clamp(0.0, 1.0),
        per_sequence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    fn seq(cfg: &MrskConfig, ids: &[usize]) -> Vec<RatioSymbol> {
        ids.iter().map(|&i| RatioSymbol::from_id(i, cfg)).collect()
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming(2, 2, Coding::Binary), 0);
        assert_eq!(hamming(0, 3, Coding::Binary), 2);
        assert_eq!(hamming(1, 2, Coding::Gray), 1);
    }

    #[test]
    fn detection_probabilities_partition_unity() {
        let cfg = MrskConfig {
            molecule_types: 3,
            bits_per_ratio: 2,
            ..MrskConfig::default()
        };
        let ch = ChannelParams::default().with_symbol_time(1.0).with_memory(4);
        let cir = ch.cir();
        let mut rng = stream(2, 0, 0);
        for _ in 0..100 {
            let ids: Vec<usize> = (0..4).map(|_| rng.random_range(0..16)).collect();
            let s = seq(&cfg, &ids);
            for j in 0..2 {
                let total: f64 = (0..4).map(|i| ftd_detection_prob(j, i, &s, &cir, &cfg).unwrap()).sum();
                assert!((total - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn huge_q_detects_sent_index() {
        let cfg = MrskConfig {
            reference_count: 1e9,
            bits_per_ratio: 2,
            ..MrskConfig::default()
        };
        let ch = ChannelParams::default().with_memory(1);
        for i in 0..4 {
            let p = ftd_detection_prob(0, i, &seq(&cfg, &[i]), &ch.cir(), &cfg).unwrap();
            assert!(p > 1.0 - 1e-9);
        }
    }

    #[test]
    fn memoryless_high_q_ber_vanishes() {
        let cfg = MrskConfig {
            reference_count: 1e6,
            ..MrskConfig::default()
        };
        let ch = ChannelParams::default().with_memory(1);
        assert!(ftd_ber(&cfg, &ch).unwrap().ber < 1e-12);
    }

    #[test]
    fn two_symbol_case_matches_direct_cdf() {
        use crate::ratio_stats::{solid_ratio_cdf, GaussPair, SolidParams};
        let cfg = MrskConfig::default();
        let ch = ChannelParams::default().with_memory(1);
        let p1 = ch.cir().tap(1);
        let sp = |q2: f64| {
            let pair = GaussPair::new(q2 * p1, 1000.0 * p1, (q2 * p1 * (1.0 - p1)).sqrt(), (1000.0 * p1 * (1.0 - p1)).sqrt()).unwrap();
            SolidParams::from_pair(&pair).unwrap()
        };
        let e = std::f64::consts::E;
        let err_one = solid_ratio_cdf(1.0, &sp(1000.0 * e));
        let err_zero = 1.0 - solid_ratio_cdf(1.0, &sp(1000.0 / e));
        let res = ftd_ber_with(&cfg, &ch, AnalysisOptions { keep_per_sequence: true, ..Default::default() }).unwrap();
        let per = res.per_sequence.unwrap();
        assert!((per[0] - err_zero).abs() < 1e-15);
        assert!((per[1] - err_one).abs() < 1e-15);
        assert!((res.ber - 0.5 * (err_zero + err_one)).abs() < 1e-15);
    }

    #[test]
    fn cap_refusal() {
        let cfg = MrskConfig {
            molecule_types: 6,
            ..MrskConfig::default()
        };
        let ch = ChannelParams::default();
        match ftd_ber(&cfg, &ch) {
            Err(e @ Error::CapExceeded { .. }) => {
                assert!(e.is_capability_refusal());
                assert!(e.to_string().contains("33554432"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rotation_is_refused() {
        let cfg = MrskConfig {
            role_rotation: true,
            ..MrskConfig::default()
        };
        assert!(matches!(ftd_ber(&cfg, &ChannelParams::default()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn partition_independent_result() {
        let cfg = MrskConfig {
            bits_per_ratio: 3,
            ..MrskConfig::default()
        };
        let ch = ChannelParams::default();
        let a = ftd_ber(&cfg, &ch).unwrap().ber;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| ftd_ber(&cfg, &ch).unwrap().ber);
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
