//! Maximum-likelihood sequence detection over the ISI trellis.
//!
//! A trellis state is the last `L − 1` symbols. Each branch adds the
//! log-likelihood of the received ratios given the signal-dependent arrival
//! moments implied by the `L` symbols in the window. Symbols before the start
//! of the burst are either supplied as `history` (earlier decisions) or taken
//! as silence.

use std::f64::consts::PI;

use crate::channel::{moments_unchecked, ArrivalMoments, Cir};
use crate::error::{Error, Result};
use crate::modem::{quantity_table, BranchMetric, MrskConfig, RatioSymbol};
use crate::special::erf;

/// Log-density of ratio `z` of a `numerator / denominator` arrival pair.
///
/// `Solid` is the logarithm of the solid-approximation density in moment
/// form,
/// `(µy σx² + µx σy² z) / (√(2π) erf(µy/√(2σy²)) (σx² + σy² z²)^{3/2})
///  · exp(−(µy z − µx)² / (2(σx² + σy² z²)))`;
/// `Gaussian` is the log of `N(z; β, λ²)`. A nonpositive prefactor (far
/// negative ratios) is floored at the smallest positive double so that the
/// exponent still ranks the hypotheses.
pub fn branch_metric(z: f64, num: ArrivalMoments, den: ArrivalMoments, metric: BranchMetric) -> f64 {
    let vx = num.var.max(f64::MIN_POSITIVE);
    let vy = den.var.max(f64::MIN_POSITIVE);
    match metric {
        BranchMetric::Solid => {
            let w = vx + vy * z * z;
            let lead = (den.mu * vx + num.mu * vy * z).max(f64::MIN_POSITIVE);
            let q = den.mu / (2.0 * vy).sqrt();
            let norm = erf(q).max(f64::MIN_POSITIVE);
            lead.ln() - 0.5 * (2.0 * PI).ln() - norm.ln() - 1.5 * w.ln() - (den.mu * z - num.mu).powi(2) / (2.0 * w)
        }
        BranchMetric::Gaussian => {
            let mu_y = den.mu.max(f64::MIN_POSITIVE);
            let mu_x = num.mu.max(f64::MIN_POSITIVE);
            let beta = mu_x / mu_y;
            let lambda2 = (beta * beta * (vx / (mu_x * mu_x) + vy / (mu_y * mu_y))).max(f64::MIN_POSITIVE);
            -0.5 * (2.0 * PI * lambda2).ln() - (z - beta).powi(2) / (2.0 * lambda2)
        }
    }
}

/// Precomputed per-symbol quantities and CIR for one detector configuration.
pub struct Trellis<'a> {
    cfg: &'a MrskConfig,
    taps: &'a [f64],
    /// `table[id]` holds the `N` emitted counts of symbol `id`.
    table: Vec<Vec<f64>>,
    symbols: usize,
    memory: usize,
}

impl<'a> Trellis<'a> {
    pub fn new(cfg: &'a MrskConfig, cir: &'a Cir) -> Result<Self> {
        cfg.validate()?;
        let symbols = cfg.symbol_count();
        let memory = cir.len();
        let states = symbols
            .checked_pow(memory as u32 - 1)
            .unwrap_or(u128::MAX);
        if states > cfg.mlsd_state_cap as u128 {
            return Err(Error::CapExceeded {
                what: "MLSD trellis states",
                required: states,
                cap: cfg.mlsd_state_cap as u128,
            });
        }
        Ok(Trellis {
            cfg,
            taps: cir.taps(),
            table: quantity_table(cfg),
            symbols: symbols as usize,
            memory,
        })
    }

    pub fn state_count(&self) -> usize {
        self.symbols.pow(self.memory as u32 - 1)
    }

    /// Summed branch metric of one interval. `window[0]` is the current
    /// symbol id, `window[m]` the symbol `m` intervals earlier; `None` is
    /// silence.
    pub fn interval_metric(&self, ratios: &[f64], window: &[Option<usize>]) -> f64 {
        let n = self.cfg.molecule_types;
        let mut total = 0.0;
        let mut den = self.type_moments(window, 0);
        for (j, &z) in ratios.iter().enumerate().take(n - 1) {
            let num = self.type_moments(window, j + 1);
            total += branch_metric(z, num, den, self.cfg.mlsd_metric);
            den = num;
        }
        total
    }

    fn type_moments(&self, window: &[Option<usize>], t: usize) -> ArrivalMoments {
        moments_unchecked(
            window.iter().map(|s| s.map_or(0.0, |id| self.table[id][t])),
            self.taps,
        )
    }

    /// Log-likelihood of a candidate symbol-id sequence.
    pub fn sequence_metric(&self, frames: &[Vec<f64>], history: &[usize], candidate: &[usize]) -> f64 {
        let mut window = vec![None; self.memory];
        let mut acc = 0.0;
        for (t, ratios) in frames.iter().enumerate() {
            for (m, slot) in window.iter_mut().enumerate() {
                *slot = symbol_back(t, m, candidate, history);
            }
            acc += self.interval_metric(ratios, &window);
        }
        acc
    }

    /// Viterbi search; returns the best symbol-id sequence. Needs `L ≥ 2`.
    pub fn viterbi(&self, frames: &[Vec<f64>], history: &[usize]) -> Vec<usize> {
        assert!(self.memory >= 2, "a memoryless channel has no trellis");
        let s = self.symbols;
        let lm1 = self.memory - 1;
        let n_states = self.state_count();
        let steps = frames.len();
        if steps == 0 {
            return Vec::new();
        }
        // digit m−1 of a state (base s) is the symbol m intervals back.
        let weights: Vec<usize> = (0..lm1).map(|m| s.pow(m as u32)).collect();
        let mut score = vec![f64::NEG_INFINITY; n_states];
        score[0] = 0.0;
        let mut back = vec![u32::MAX; steps * n_states];
        let mut window = vec![None; self.memory];
        let mut next = vec![f64::NEG_INFINITY; n_states];

        for (t, ratios) in frames.iter().enumerate() {
            next.iter_mut().for_each(|v| *v = f64::NEG_INFINITY);
            // Digits at positions ≥ t refer to symbols before the window and stay 0.
            let live_digits = t.min(lm1);
            let reachable = s.pow(live_digits as u32);
            for state in 0..reachable {
                let base = score[state];
                if base == f64::NEG_INFINITY {
                    continue;
                }
                for m in 1..self.memory {
                    window[m] = if m <= t {
                        Some((state / weights[m - 1]) % s)
                    } else {
                        history_back(m - t, history)
                    };
                }
                // Shift: new digit 0 is the current symbol, older digits move up.
                let shifted = (state % weights[lm1 - 1]) * s;
                for sym in 0..s {
                    window[0] = Some(sym);
                    let cand = base + self.interval_metric(ratios, &window);
                    let ns = shifted + sym;
                    if cand > next[ns] {
                        next[ns] = cand;
                        back[t * n_states + ns] = state as u32;
                    }
                }
            }
            std::mem::swap(&mut score, &mut next);
        }

        let mut best = 0;
        for (i, &v) in score.iter().enumerate() {
            if v > score[best] {
                best = i;
            }
        }
        let mut out = vec![0; steps];
        let mut state = best;
        for t in (0..steps).rev() {
            out[t] = state % s;
            state = back[t * n_states + state] as usize;
        }
        out
    }
}

fn history_back(k: usize, history: &[usize]) -> Option<usize> {
    // k ≥ 1 intervals before the window start.
    history.len().checked_sub(k).map(|i| history[i])
}

fn symbol_back(t: usize, m: usize, candidate: &[usize], history: &[usize]) -> Option<usize> {
    if m <= t {
        Some(candidate[t - m])
    } else {
        history_back(m - t, history)
    }
}

/// Decides a block of symbols jointly.
///
/// `ratio_frames[t]` holds the `N − 1` received ratios of interval `t`;
/// `history` lists earlier decided symbols, oldest first (missing entries
/// mean the channel was silent).
pub fn detect_mlsd(
    ratio_frames: &[Vec<f64>],
    history: &[RatioSymbol],
    cir: &Cir,
    cfg: &MrskConfig,
) -> Result<Vec<RatioSymbol>> {
    if ratio_frames.len() > cfg.mlsd_window {
        return Err(Error::invalid(format!(
            "{} frames exceed the MLSD window of {}",
            ratio_frames.len(),
            cfg.mlsd_window
        )));
    }
    if let Some(f) = ratio_frames.iter().find(|f| f.len() != cfg.ratios_per_symbol()) {
        return Err(Error::invalid(format!(
            "frame has {} ratios, expected {}",
            f.len(),
            cfg.ratios_per_symbol()
        )));
    }
    let trellis = Trellis::new(cfg, cir)?;
    let levels = cfg.levels();
    let hist: Vec<usize> = history.iter().map(|s| s.id(levels)).collect();
    let ids = if trellis.memory == 1 {
        per_symbol_ml(&trellis, ratio_frames)
    } else {
        trellis.viterbi(ratio_frames, &hist)
    };
    Ok(ids.into_iter().map(|id| RatioSymbol::from_id(id, cfg)).collect())
}

fn per_symbol_ml(trellis: &Trellis<'_>, frames: &[Vec<f64>]) -> Vec<usize> {
    frames
        .iter()
        .map(|ratios| {
            let mut best = (0, f64::NEG_INFINITY);
            for sym in 0..trellis.symbols {
                let v = trellis.interval_metric(ratios, &[Some(sym)]);
                if v > best.1 {
                    best = (sym, v);
                }
            }
            best.0
        })
        .collect()
}
