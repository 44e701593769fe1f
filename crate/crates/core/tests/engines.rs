//! Cross-engine consistency checks.

use mrsk_core::analysis::ftd_ber;
use mrsk_core::baselines::levy_cdf;
use mrsk_core::channel::{arrival_moments, sample_arrival, ChannelParams, Cir};
use mrsk_core::modem::{detect_admc, quantities, DetectionStats, MrskConfig, RatioSymbol, ReceivedFrame};
use mrsk_core::ratio_stats::ks_statistic;
use mrsk_core::rng::stream;
use mrsk_core::simulate::{run_link, run_link_with_cir, BerEstimate, Engine, ParticleCloud, SimConfig};
use rand::Rng;
use rand_distr::StandardNormal;

fn sim(n_bits: u64, engine: Engine, seed: u64) -> SimConfig {
    SimConfig {
        n_bits,
        engine,
        seed,
        ..SimConfig::default()
    }
}

fn overlap(a: &BerEstimate, b: &BerEstimate) -> bool {
    a.ci_low <= b.ci_high && b.ci_low <= a.ci_high
}

/// Five random link setups drawn from a fixed stream.
fn random_configs(max_space: u128, seed: u64) -> Vec<(MrskConfig, ChannelParams)> {
    let mut rng = stream(seed, 0, 0);
    let mut out = Vec::new();
    while out.len() < 5 {
        let n = rng.random_range(2..=3);
        let m = rng.random_range(1..=2);
        let l = rng.random_range(1..=6);
        let cfg = MrskConfig {
            molecule_types: n,
            bits_per_ratio: m,
            reference_count: rng.random_range(500.0..1000.0),
            omega: rng.random_range(1.8..3.0),
            ..MrskConfig::default()
        };
        if cfg.symbol_count().pow(l as u32) > max_space {
            continue;
        }
        let tb = rng.random_range(0.3..1.0);
        let ch = ChannelParams::default()
            .with_memory(l)
            .with_symbol_time(tb * cfg.bits_per_symbol() as f64);
        out.push((cfg, ch));
    }
    out
}

#[test]
fn statistical_and_binomial_engines_agree() {
    for (i, (cfg, ch)) in random_configs(1 << 12, 11).into_iter().enumerate() {
        let a = run_link(&cfg, &ch, &sim(200_000, Engine::Statistical, i as u64)).unwrap();
        let b = run_link(&cfg, &ch, &sim(200_000, Engine::Binomial, 100 + i as u64)).unwrap();
        assert!(overlap(&a, &b), "config {i}: {cfg:?} {} vs {}", a.ber, b.ber);
    }
}

#[test]
fn analytic_matches_monte_carlo_on_random_configs() {
    for (i, (cfg, ch)) in random_configs(1 << 12, 12).into_iter().enumerate() {
        let analytic = ftd_ber(&cfg, &ch).unwrap().ber;
        let est = run_link(&cfg, &ch, &sim(1_000_000, Engine::Statistical, i as u64)).unwrap();
        let se = (analytic * (1.0 - analytic) / est.bits as f64).sqrt();
        assert!(
            (est.ber - analytic).abs() <= 3.0 * se,
            "config {i}: {cfg:?} L={} mc {} analytic {analytic}",
            ch.memory,
            est.ber
        );
    }
}

#[test]
fn single_tap_simulation_reproduces_memoryless_analysis() {
    let cfg = MrskConfig {
        reference_count: 200.0,
        ..MrskConfig::default()
    };
    let ch = ChannelParams::default();
    let analytic = ftd_ber(&cfg, &ch.with_memory(1)).unwrap().ber;
    let est = run_link_with_cir(&cfg, &ch, ch.cir().first_tap_only(), &sim(400_000, Engine::Statistical, 5)).unwrap();
    assert!(est.ci_low <= analytic && analytic <= est.ci_high, "{} vs {analytic}", est.ber);
    // With all taps the ISI is visible.
    let full = run_link(&cfg, &ch, &sim(400_000, Engine::Statistical, 5)).unwrap();
    assert!(full.ci_low > est.ci_high);
}

#[test]
fn particle_interval_counts_match_tap_means() {
    let ch = ChannelParams::default().with_memory(3);
    let cir: Cir = ch.cir();
    let per_emission = 10_000;
    let emissions = 4;
    let dt = 1e-3;
    let steps = (ch.symbol_time / dt).round() as usize;
    let mut totals = vec![0u64; cir.len()];
    let mut rng = stream(21, 0, 0);
    for _ in 0..emissions {
        let mut cloud = ParticleCloud::new(&ch, 1, true);
        cloud.release(0, per_emission, [ch.distance, 0.0, 0.0]);
        for slot in totals.iter_mut() {
            for _ in 0..steps {
                cloud.step(dt, &mut rng).unwrap();
            }
            *slot += cloud.take_interval()[0];
        }
    }
    let n = (per_emission * emissions) as f64;
    for (k, &got) in totals.iter().enumerate() {
        let p = cir.taps()[k];
        let expect = n * p;
        // 5% of the mean, or three binomial standard errors for thin taps.
        let tol = (0.05 * expect).max(3.0 * (n * p * (1.0 - p)).sqrt());
        assert!((got as f64 - expect).abs() <= tol, "tap {}: {got} vs {expect:.1}", k + 1);
    }
    let first = totals[0] as f64 / (n * cir.taps()[0]);
    assert!((first - 1.0).abs() < 0.05, "{first}");
}

#[test]
fn memory_cancellation_reduces_ratio_spread() {
    let cfg = MrskConfig::default();
    let ch = ChannelParams::default();
    let cir = ch.cir();
    let mut rng = stream(31, 0, 0);
    let n: usize = 10_000;
    let ids: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
    let emitted: Vec<Vec<f64>> = ids
        .iter()
        .map(|&i| quantities(&RatioSymbol::from_id(i, &cfg), &cfg).unwrap().0)
        .collect();
    let sent_ratio = |i: usize| emitted[i][1] / emitted[i][0];
    let mut stats = DetectionStats::default();
    let mut prev: Option<RatioSymbol> = None;
    let (mut raw, mut cancelled) = (Vec::new(), Vec::new());
    for k in 0..n {
        let lo = (k + 1).saturating_sub(cir.len());
        let counts: Vec<f64> = (0..2)
            .map(|t| {
                let h: Vec<f64> = emitted[lo..=k].iter().map(|e| e[t]).collect();
                sample_arrival(arrival_moments(&h, &cir).unwrap(), &mut rng)
            })
            .collect();
        let isi: Vec<f64> = match &prev {
            Some(s) => quantities(s, &cfg).unwrap().0.iter().map(|q| cir.tap(2) * q).collect(),
            None => vec![0.0; 2],
        };
        raw.push(counts[1] / counts[0] - sent_ratio(k));
        let adj: Vec<f64> = counts.iter().zip(&isi).map(|(c, i)| (c - i).max(cfg.epsilon())).collect();
        cancelled.push(adj[1] / adj[0] - sent_ratio(k));
        let frame = ReceivedFrame::new(counts);
        prev = Some(detect_admc(&frame, prev.as_ref(), &cir, &cfg, &mut stats).unwrap());
    }
    let var = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
    };
    assert!(var(&cancelled) <= var(&raw), "{} > {}", var(&cancelled), var(&raw));
}

#[test]
fn first_passage_in_one_dimension_is_levy() {
    // A 1-D walker started d − r from an absorbing plane has a Lévy
    // first-passage time with scale (d − r)²/(2D).
    let ch = ChannelParams::default();
    let c = ch.levy_scale();
    let (dt, horizon) = (1e-4, 2.0);
    let sigma = (2.0 * ch.diffusion * dt).sqrt();
    let mut rng = stream(41, 0, 0);
    let mut times = Vec::new();
    for _ in 0..4000 {
        let mut x = ch.distance - ch.radius;
        let mut t = 0.0;
        while t < horizon {
            let before = x;
            x += sigma * rng.sample::<f64, _>(StandardNormal);
            t += dt;
            let bridge = (x > 0.0) && rng.random::<f64>() < (-before * x / (ch.diffusion * dt)).exp();
            if x <= 0.0 || bridge {
                times.push(t);
                break;
            }
        }
    }
    // Compare against the Lévy law conditioned on arrival before the horizon.
    let cap = levy_cdf(horizon, c);
    let ks = ks_statistic(&times, |t| levy_cdf(t, c) / cap);
    assert!(ks < 0.05, "KS {ks}");
    let frac = times.len() as f64 / 4000.0;
    assert!((frac - cap).abs() < 0.03, "{frac} vs {cap}");
}
