//! One-parameter BER sweeps.

use crate::analysis::ftd_ber;
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::modem::{DetectorKind, MrskConfig};

use super::{run_link, BerEstimate, SimConfig};

/// A link setup in terms of the bit time; the symbol time follows as
/// `T_s = M(N−1)·t_b` so that schemes with different `N`, `M` are compared
/// at equal bit rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Channel geometry and memory; its `symbol_time` is overridden.
    pub channel: ChannelParams,
    pub bit_time: f64,
    pub modem: MrskConfig,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            channel: ChannelParams::default(),
            bit_time: 0.5,
            modem: MrskConfig::default(),
        }
    }
}

impl Scenario {
    pub fn symbol_time(&self) -> f64 {
        self.bit_time * self.modem.bits_per_symbol() as f64
    }

    pub fn channel(&self) -> ChannelParams {
        self.channel.with_symbol_time(self.symbol_time())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bit_time > 0.0 && self.bit_time.is_finite()) {
            return Err(Error::invalid(format!("bit time must be positive, got {}", self.bit_time)));
        }
        self.modem.validate()?;
        self.channel().validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    BitTime,
    ReferenceCount,
    Distance,
    Omega,
    MoleculeTypes,
    BitsPerRatio,
}

impl SweepParam {
    pub const ALL: [SweepParam; 6] = [
        SweepParam::BitTime,
        SweepParam::ReferenceCount,
        SweepParam::Distance,
        SweepParam::Omega,
        SweepParam::MoleculeTypes,
        SweepParam::BitsPerRatio,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::BitTime => "t_b",
            SweepParam::ReferenceCount => "Q",
            SweepParam::Distance => "d",
            SweepParam::Omega => "Omega",
            SweepParam::MoleculeTypes => "N",
            SweepParam::BitsPerRatio => "M",
        }
    }

    /// `base` with this parameter set to `value`.
    pub fn apply(&self, base: &Scenario, value: f64) -> Result<Scenario> {
        let mut s = base.clone();
        let whole = |v: f64| -> Result<u64> {
            if v >= 1.0 && v.fract() == 0.0 && v < u32::MAX as f64 {
                Ok(v as u64)
            } else {
                Err(Error::invalid(format!("{} must be a positive integer, got {v}", self.name())))
            }
        };
        match self {
            SweepParam::BitTime => s.bit_time = value,
            SweepParam::ReferenceCount => s.modem.reference_count = value,
            SweepParam::Distance => s.channel.distance = value,
            SweepParam::Omega => s.modem.omega = value,
            SweepParam::MoleculeTypes => s.modem.molecule_types = whole(value)? as usize,
            SweepParam::BitsPerRatio => s.modem.bits_per_ratio = whole(value)? as u32,
        }
        s.validate()?;
        Ok(s)
    }
}

impl std::fmt::Display for SweepParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SweepParam::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<_> = SweepParam::ALL.iter().map(|p| p.name()).collect();
            Error::invalid(format!("unknown sweep parameter '{s}'; valid names: {}", names.join(", ")))
        })
    }
}

/// How each sweep point is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum Evaluation {
    /// Closed form; fixed-threshold detection only.
    Analytic,
    Simulated(SimConfig),
}

/// BER against one swept parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub param_name: String,
    pub param_values: Vec<f64>,
    pub estimates: Vec<BerEstimate>,
    pub scheme: String,
    pub detector: String,
    pub coding: String,
}

impl BerCurve {
    pub fn new(param_name: &str, scheme: &str, detector: &str, coding: &str) -> Self {
        BerCurve {
            param_name: param_name.to_string(),
            param_values: Vec::new(),
            estimates: Vec::new(),
            scheme: scheme.to_string(),
            detector: detector.to_string(),
            coding: coding.to_string(),
        }
    }

    pub fn push(&mut self, value: f64, estimate: BerEstimate) {
        self.param_values.push(value);
        self.estimates.push(estimate);
    }

    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }
}

/// BER of one scenario.
pub fn evaluate(scenario: &Scenario, eval: &Evaluation) -> Result<BerEstimate> {
    scenario.validate()?;
    let channel = scenario.channel();
    match eval {
        Evaluation::Analytic => {
            if scenario.modem.detector != DetectorKind::Ftd {
                return Err(Error::Unsupported(format!(
                    "no closed-form BER for the {} detector; use a simulation engine",
                    scenario.modem.detector
                )));
            }
            Ok(BerEstimate::exact(ftd_ber(&scenario.modem, &channel)?.ber))
        }
        // Every point reuses the same seed, so neighbouring points share
        // their random inputs and trends are not masked by sampling noise.
        Evaluation::Simulated(sim) => run_link(&scenario.modem, &channel, sim),
    }
}

/// Evaluates `base` with `param` set to each of `values` in turn.
pub fn sweep(param: SweepParam, values: &[f64], base: &Scenario, eval: &Evaluation) -> Result<BerCurve> {
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one value"));
    }
    let mut curve = BerCurve::new(
        param.name(),
        "MRSK",
        base.modem.detector.label(),
        base.modem.coding.label(),
    );
    for &v in values {
        let s = param.apply(base, v)?;
        curve.push(v, evaluate(&s, eval)?);
    }
    Ok(curve)
}
