//! MLSD oracle shared by the integration tests.

use mrsk_core::channel::{arrival_moments, sample_arrival, ChannelParams};
use mrsk_core::mlsd::{detect_mlsd, Trellis};
use mrsk_core::modem::{quantities, BranchMetric, MrskConfig, RatioSymbol, ReceivedFrame};
use mrsk_core::rng::stream;
use rand::Rng;

/// Ratio frames for a random symbol stream, sent after `history`.
pub fn noisy_frames(cfg: &MrskConfig, ch: &ChannelParams, history: &[usize], ids: &[usize], seed: u64) -> Vec<Vec<f64>> {
    let cir = ch.cir();
    let mut rng = stream(seed, 0, 0);
    let all: Vec<usize> = history.iter().chain(ids).copied().collect();
    let emitted: Vec<Vec<f64>> = all
        .iter()
        .map(|&id| quantities(&RatioSymbol::from_id(id, cfg), cfg).unwrap().0)
        .collect();
    (history.len()..all.len())
        .map(|k| {
            let lo = (k + 1).saturating_sub(cir.len());
            let counts: Vec<f64> = (0..cfg.molecule_types)
                .map(|t| {
                    let h: Vec<f64> = emitted[lo..=k].iter().map(|e| e[t]).collect();
                    sample_arrival(arrival_moments(&h, &cir).unwrap(), &mut rng)
                })
                .collect();
            ReceivedFrame::new(counts).floored_ratios(cfg.epsilon())
        })
        .collect()
}

pub fn brute_force(trellis: &Trellis<'_>, frames: &[Vec<f64>], history: &[usize], symbols: usize) -> Vec<usize> {
    let k = frames.len();
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    for code in 0..symbols.pow(k as u32) {
        let cand: Vec<usize> = (0..k).map(|i| code / symbols.pow(i as u32) % symbols).collect();
        let m = trellis.sequence_metric(frames, history, &cand);
        if m > best.1 {
            best = (cand, m);
        }
    }
    best.0
}

/// Compares trellis, exhaustive search and the public detector on 100
/// frames; returns how many decisions differ from the sent symbols.
pub fn check(metric: BranchMetric, bit_time: f64, reference_count: f64, seed: u64) -> usize {
    let cfg = MrskConfig {
        mlsd_metric: metric,
        reference_count,
        ..MrskConfig::default()
    };
    let ch = ChannelParams::default().with_memory(3).with_symbol_time(bit_time);
    let cir = ch.cir();
    let trellis = Trellis::new(&cfg, &cir).unwrap();
    let mut rng = stream(seed, 1, 0);
    let mut history: Vec<usize> = Vec::new();
    let mut frames_checked = 0;
    let mut disagreements_with_truth = 0;
    for block in 0..10u64 {
        let ids: Vec<usize> = (0..10).map(|_| rng.random_range(0..2)).collect();
        let frames = noisy_frames(&cfg, &ch, &history, &ids, seed * 100 + block);
        let viterbi = trellis.viterbi(&frames, &history);
        let exhaustive = brute_force(&trellis, &frames, &history, 2);
        assert_eq!(viterbi, exhaustive, "block {block}");
        let via_api: Vec<usize> = detect_mlsd(&frames, &history.iter().map(|&i| RatioSymbol::from_id(i, &cfg)).collect::<Vec<_>>(), &cir, &cfg)
            .unwrap()
            .iter()
            .map(|s| s.id(2))
            .collect();
        assert_eq!(via_api, viterbi);
        disagreements_with_truth += viterbi.iter().zip(&ids).filter(|(a, b)| a != b).count();
        frames_checked += frames.len();
        history = viterbi[viterbi.len() - 2..].to_vec();
    }
    assert_eq!(frames_checked, 100);
    disagreements_with_truth
}
