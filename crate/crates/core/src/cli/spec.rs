//! Fully resolved experiment description and its flat `key=value` form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::modem::{BranchMetric, Coding, DetectorKind};
use crate::simulate::{Engine, Scenario, SimConfig, SweepParam};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Pdf,
    BerAnalytic,
    BerSim,
    BerParticle,
    Compare,
    Sweep,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Pdf,
        Command::BerAnalytic,
        Command::BerSim,
        Command::BerParticle,
        Command::Compare,
        Command::Sweep,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Pdf => "pdf",
            Command::BerAnalytic => "ber-analytic",
            Command::BerSim => "ber-sim",
            Command::BerParticle => "ber-particle",
            Command::Compare => "compare",
            Command::Sweep => "sweep",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown command '{s}'")))
    }
}

/// How BER values are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Analytic,
    Simulated(Engine),
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::Simulated(e) => e.label(),
        }
    }

    fn parse(s: &str) -> Result<Self> {
        if s == "analytic" {
            Ok(Method::Analytic)
        } else {
            s.parse().map(Method::Simulated)
        }
    }
}

/// Ratio-density table settings.
#[derive(Debug, Clone, PartialEq)]
pub struct PdfSpec {
    /// Transmitted ratio.
    pub ratio: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    pub eta_points: usize,
    /// Monte Carlo draws behind the empirical column.
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineSpec {
    pub ook_alpha: f64,
    pub csk_gamma: f64,
    /// MoSK threshold as a fraction of `Q`.
    pub mosk_lambda: f64,
    pub rtsk_bits: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub command: Command,
    pub scenario: Scenario,
    pub sim: SimConfig,
    pub method: Method,
    pub param: SweepParam,
    /// Swept values in their written form, `start:step:stop` or a list.
    pub values: Option<String>,
    pub pdf: PdfSpec,
    pub baselines: BaselineSpec,
}

/// Keys accepted in config files, `--set` and the CSV header.
pub const KEYS: &[&str] = &[
    "distance",
    "radius",
    "diffusion",
    "memory",
    "bit_time",
    "molecule_types",
    "bits_per_ratio",
    "omega",
    "reference_count",
    "coding",
    "detector",
    "mlsd_window",
    "mlsd_metric",
    "mlsd_state_cap",
    "epsilon_rel",
    "role_rotation",
    "method",
    "n_bits",
    "seed",
    "particle_dt",
    "trials_cap",
    "crossing_correction",
    "param",
    "values",
    "ratio",
    "eta_min",
    "eta_max",
    "eta_points",
    "samples",
    "ook_alpha",
    "csk_gamma",
    "mosk_lambda",
    "rtsk_bits",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::invalid(format!("invalid value '{v}' for key '{key}'")))
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::invalid(format!("invalid value '{v}' for key '{key}' (expected true or false)"))),
    }
}

/// Parses a flat `key = value` text; `#` starts a comment line.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("config line {}: expected key=value", n + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Expands `start:step:stop` (inclusive) or a comma list.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::invalid(format!("invalid value list '{text}'"));
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop): (f64, f64, f64) = (
                start.trim().parse().map_err(|_| bad())?,
                step.trim().parse().map_err(|_| bad())?,
                stop.trim().parse().map_err(|_| bad())?,
            );
            if !(step > 0.0) || stop < start || !start.is_finite() || !stop.is_finite() {
                return Err(bad());
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            if count > 100_000 {
                return Err(Error::invalid(format!("value range '{text}' has {count} points")));
            }
            Ok((0..count).map(|i| start + i as f64 * step).collect())
        }
        [_] => text
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect(),
        _ => Err(bad()),
    }
}

impl ExperimentSpec {
    /// Resolves a spec from keys, applying defaults for missing ones.
    pub fn from_map(command: Command, map: &BTreeMap<String, String>) -> Result<Self> {
        if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::invalid(format!("unknown key '{k}'; valid keys: {}", KEYS.join(", "))));
        }
        let mut s = Scenario::default();
        let mut sim = SimConfig::default();
        let mut method = None;
        let mut param = SweepParam::BitTime;
        let mut values = None;
        let mut pdf = PdfSpec {
            ratio: std::f64::consts::E,
            eta_min: 0.0,
            eta_max: 8.0,
            eta_points: 401,
            samples: 100_000,
        };
        let mut baselines = BaselineSpec {
            ook_alpha: 0.78,
            csk_gamma: 2.0,
            mosk_lambda: 0.34,
            rtsk_bits: 1_000_000,
        };
        for (k, v) in map {
            let v = v.as_str();
            match k.as_str() {
                "distance" => s.channel.distance = num(k, v)?,
                "radius" => s.channel.radius = num(k, v)?,
                "diffusion" => s.channel.diffusion = num(k, v)?,
                "memory" => s.channel.memory = num(k, v)?,
                "bit_time" => s.bit_time = num(k, v)?,
                "molecule_types" => s.modem.molecule_types = num(k, v)?,
                "bits_per_ratio" => s.modem.bits_per_ratio = num(k, v)?,
                "omega" => s.modem.omega = num(k, v)?,
                "reference_count" => s.modem.reference_count = num(k, v)?,
                "coding" => s.modem.coding = v.parse::<Coding>()?,
                "detector" => s.modem.detector = v.parse::<DetectorKind>()?,
                "mlsd_window" => s.modem.mlsd_window = num(k, v)?,
                "mlsd_metric" => s.modem.mlsd_metric = v.parse::<BranchMetric>()?,
                "mlsd_state_cap" => s.modem.mlsd_state_cap = num(k, v)?,
                "epsilon_rel" => s.modem.epsilon_rel = num(k, v)?,
                "role_rotation" => s.modem.role_rotation = boolean(k, v)?,
                "method" => method = Some(Method::parse(v)?),
                "n_bits" => sim.n_bits = num(k, v)?,
                "seed" => sim.seed = num(k, v)?,
                "particle_dt" => sim.particle_dt = num(k, v)?,
                "trials_cap" => sim.trials_cap = num(k, v)?,
                "crossing_correction" => sim.crossing_correction = boolean(k, v)?,
                "param" => param = v.parse()?,
                "values" => values = Some(v.to_string()),
                "ratio" => pdf.ratio = num(k, v)?,
                "eta_min" => pdf.eta_min = num(k, v)?,
                "eta_max" => pdf.eta_max = num(k, v)?,
                "eta_points" => pdf.eta_points = num(k, v)?,
                "samples" => pdf.samples = num(k, v)?,
                "ook_alpha" => baselines.ook_alpha = num(k, v)?,
                "csk_gamma" => baselines.csk_gamma = num(k, v)?,
                "mosk_lambda" => baselines.mosk_lambda = num(k, v)?,
                "rtsk_bits" => baselines.rtsk_bits = num(k, v)?,
                _ => unreachable!(),
            }
        }
        let method = match command {
            Command::BerAnalytic => Method::Analytic,
            Command::BerParticle => Method::Simulated(Engine::Particle),
            Command::BerSim => match method {
                Some(Method::Analytic) => {
                    return Err(Error::invalid("ber-sim needs a simulation method"));
                }
                Some(m) => m,
                None => Method::Simulated(Engine::Statistical),
            },
            _ => method.unwrap_or(if s.modem.detector == DetectorKind::Ftd {
                Method::Analytic
            } else {
                Method::Simulated(Engine::Statistical)
            }),
        };
        if command == Command::Sweep && values.is_none() {
            return Err(Error::invalid("sweep needs --values"));
        }
        if let Some(v) = &values {
            parse_values(v)?;
        }
        if pdf.eta_points < 2 || !(pdf.eta_max > pdf.eta_min) {
            return Err(Error::invalid("pdf grid needs eta_max > eta_min and at least 2 points"));
        }
        s.validate()?;
        if matches!(method, Method::Simulated(_)) {
            sim.validate()?;
        }
        if let Method::Simulated(e) = method {
            sim.engine = e;
        }
        Ok(ExperimentSpec {
            command,
            scenario: s,
            sim,
            method,
            param,
            values,
            pdf,
            baselines,
        })
    }

    /// Every key with its resolved value, in [`KEYS`] order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let s = &self.scenario;
        let m = &s.modem;
        let c = &s.channel;
        let values = self.values.clone().unwrap_or_else(|| "-".into());
        let all = vec![
            c.distance.to_string(),
            c.radius.to_string(),
            c.diffusion.to_string(),
            c.memory.to_string(),
            s.bit_time.to_string(),
            m.molecule_types.to_string(),
            m.bits_per_ratio.to_string(),
            m.omega.to_string(),
            m.reference_count.to_string(),
            m.coding.to_string(),
            m.detector.to_string(),
            m.mlsd_window.to_string(),
            m.mlsd_metric.to_string(),
            m.mlsd_state_cap.to_string(),
            m.epsilon_rel.to_string(),
            m.role_rotation.to_string(),
            self.method.label().to_string(),
            self.sim.n_bits.to_string(),
            self.sim.seed.to_string(),
            self.sim.particle_dt.to_string(),
            self.sim.trials_cap.to_string(),
            self.sim.crossing_correction.to_string(),
            self.param.to_string(),
            values,
            self.pdf.ratio.to_string(),
            self.pdf.eta_min.to_string(),
            self.pdf.eta_max.to_string(),
            self.pdf.eta_points.to_string(),
            self.pdf.samples.to_string(),
            self.baselines.ook_alpha.to_string(),
            self.baselines.csk_gamma.to_string(),
            self.baselines.mosk_lambda.to_string(),
            self.baselines.rtsk_bits.to_string(),
        ];
        KEYS.iter().copied().zip(all).collect()
    }

    /// The `#` comment line heading every CSV this spec produces.
    pub fn header_line(&self) -> String {
        let mut out = format!("# mrsk {}", self.command.name());
        for (k, v) in self.to_pairs() {
            let _ = write!(out, " {k}={v}");
        }
        out
    }

    /// Inverse of [`Self::header_line`].
    pub fn from_header_line(line: &str) -> Result<Self> {
        let bad = || Error::invalid("first line is not an mrsk experiment header");
        let mut tokens = line.strip_prefix('#').ok_or_else(bad)?.split_whitespace();
        if tokens.next() != Some("mrsk") {
            return Err(bad());
        }
        let command = Command::parse(tokens.next().ok_or_else(bad)?)?;
        let mut map = BTreeMap::new();
        for t in tokens {
            let (k, v) = t.split_once('=').ok_or_else(bad)?;
            if !(k == "values" && v == "-") {
                map.insert(k.to_string(), v.to_string());
            }
        }
        Self::from_map(command, &map)
    }
}
