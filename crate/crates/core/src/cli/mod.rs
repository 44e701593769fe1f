//! Batch experiment runner behind the `mrsk` binary.
//!
//! Settings come from built-in defaults, then an optional flat `key=value`
//! config file, then `--set key=value` pairs and dedicated flags. The fully
//! resolved settings are written as the first CSV line, and `mrsk rerun`
//! regenerates a CSV byte for byte from that line.

pub mod csv;
pub mod spec;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::baselines::{csk_ber, mosk_ber, ook_ber, rtsk_ber, CskConfig, MoskConfig, OokConfig, RtskConfig, RtskDetector};
use crate::error::Error;
use crate::ratio_stats::{exact_ratio_pdf, gaussian_ratio_pdf, sample_ratio, solid_ratio_pdf, GaussPair, SolidParams};
use crate::rng::stream;
use crate::simulate::{evaluate, sweep, BerCurve, BerEstimate, Evaluation, Scenario, SweepParam};

pub use csv::{read_ber_csv, write_ber_csv, write_pdf_csv, BerRow, PdfTable, BER_HEADER, PDF_HEADER};
pub use spec::{parse_config, parse_values, Command, ExperimentSpec, Method};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "MRSK_OUT_DIR";

const PDF_DOMAIN: u64 = 4;

#[derive(Parser, Debug)]
#[command(name = "mrsk", version, about = "Ratio-shift-keying molecular link experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Exact, solid, Gaussian and empirical ratio densities.
    Pdf(Common),
    /// Closed-form BER of fixed-threshold detection.
    BerAnalytic(Common),
    /// Monte Carlo BER with the statistical or binomial engine.
    BerSim(Common),
    /// Monte Carlo BER with Brownian particle transport.
    BerParticle(Common),
    /// MRSK against OOK, CSK, MoSK and RTSK.
    Compare(Common),
    /// BER while one parameter varies.
    Sweep(Common),
    /// Regenerates a CSV from its header line.
    Rerun {
        /// CSV written by an earlier run.
        csv: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Flat key=value settings file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sets any config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output CSV path (default: $MRSK_OUT_DIR/<command>.csv, else stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<String>,
    /// Swept parameter: t_b, Q, d, Omega, N or M.
    #[arg(long)]
    param: Option<String>,
    /// start:step:stop or a comma-separated list.
    #[arg(long)]
    values: Option<String>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    distance: Option<String>,
    #[arg(long)]
    radius: Option<String>,
    #[arg(long)]
    diffusion: Option<String>,
    #[arg(long)]
    memory: Option<String>,
    #[arg(long)]
    bit_time: Option<String>,
    #[arg(long)]
    molecule_types: Option<String>,
    #[arg(long)]
    bits_per_ratio: Option<String>,
    #[arg(long)]
    omega: Option<String>,
    #[arg(long)]
    reference_count: Option<String>,
    #[arg(long)]
    coding: Option<String>,
    #[arg(long)]
    detector: Option<String>,
    #[arg(long)]
    n_bits: Option<String>,
    #[arg(long)]
    particle_dt: Option<String>,
    #[arg(long)]
    ratio: Option<String>,
}

impl Common {
    fn flags(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("seed", &self.seed),
            ("param", &self.param),
            ("values", &self.values),
            ("method", &self.method),
            ("distance", &self.distance),
            ("radius", &self.radius),
            ("diffusion", &self.diffusion),
            ("memory", &self.memory),
            ("bit_time", &self.bit_time),
            ("molecule_types", &self.molecule_types),
            ("bits_per_ratio", &self.bits_per_ratio),
            ("omega", &self.omega),
            ("reference_count", &self.reference_count),
            ("coding", &self.coding),
            ("detector", &self.detector),
            ("n_bits", &self.n_bits),
            ("particle_dt", &self.particle_dt),
            ("ratio", &self.ratio),
        ]
    }

    fn resolve(&self, command: Command) -> Result<ExperimentSpec, CliError> {
        let mut map = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
                parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("--set expects KEY=VALUE, got '{kv}'")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        for (k, v) in self.flags() {
            if let Some(v) = v {
                map.insert(k.to_string(), v.clone());
            }
        }
        Ok(ExperimentSpec::from_map(command, &map)?)
    }
}

/// Failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: String) -> Self {
        CliError { code: 1, message }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            code: if e.is_capability_refusal() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

/// Result of running an experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Curves(Vec<BerCurve>),
    Pdf(PdfTable),
}

/// Runs the CLI and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run_cli`] with explicit output streams.
pub fn run_cli_with<I, T, O, E>(args: I, out: &mut O, err: &mut E) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    O: Write,
    E: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return 1;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn set_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        // The global pool can only be configured once per process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn dispatch<O: Write>(cli: Cli, out: &mut O) -> Result<(), CliError> {
    let (common, command) = match cli.command {
        Sub::Rerun { csv, out: dest, threads } => {
            set_threads(threads);
            let text = std::fs::read_to_string(&csv)
                .map_err(|e| CliError::usage(format!("cannot read {}: {e}", csv.display())))?;
            let first = text.lines().next().unwrap_or_default();
            let spec = ExperimentSpec::from_header_line(first)?;
            return emit(&spec, dest, out);
        }
        Sub::Pdf(c) => (c, Command::Pdf),
        Sub::BerAnalytic(c) => (c, Command::BerAnalytic),
        Sub::BerSim(c) => (c, Command::BerSim),
        Sub::BerParticle(c) => (c, Command::BerParticle),
        Sub::Compare(c) => (c, Command::Compare),
        Sub::Sweep(c) => (c, Command::Sweep),
    };
    set_threads(common.threads);
    let spec = common.resolve(command)?;
    let dest = common
        .out
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(|d| Path::new(&d).join(format!("{}.csv", command.name()))));
    emit(&spec, dest, out)
}

fn emit<O: Write>(spec: &ExperimentSpec, dest: Option<PathBuf>, out: &mut O) -> Result<(), CliError> {
    let result = execute(spec)?;
    let mut buf = Vec::new();
    let header = spec.header_line();
    match &result {
        Output::Curves(c) => write_ber_csv(&mut buf, &header, c),
        Output::Pdf(t) => write_pdf_csv(&mut buf, &header, t),
    }
    .expect("writing to memory");
    match dest {
        Some(path) => std::fs::write(&path, &buf)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display()))),
        None => out
            .write_all(&buf)
            .map_err(|e| CliError::usage(format!("cannot write to stdout: {e}"))),
    }
}

/// Runs the experiment a spec describes.
pub fn execute(spec: &ExperimentSpec) -> Result<Output, Error> {
    let eval = match spec.method {
        Method::Analytic => Evaluation::Analytic,
        Method::Simulated(_) => Evaluation::Simulated(spec.sim.clone()),
    };
    let base = &spec.scenario;
    match spec.command {
        Command::Pdf => pdf_table(spec).map(Output::Pdf),
        Command::BerAnalytic | Command::BerSim | Command::BerParticle => {
            let mut c = BerCurve::new(
                SweepParam::BitTime.name(),
                "MRSK",
                base.modem.detector.label(),
                base.modem.coding.label(),
            );
            c.push(base.bit_time, evaluate(base, &eval)?);
            Ok(Output::Curves(vec![c]))
        }
        Command::Sweep => {
            let values = parse_values(spec.values.as_deref().unwrap_or_default())?;
            Ok(Output::Curves(vec![sweep(spec.param, &values, base, &eval)?]))
        }
        Command::Compare => compare(spec, &eval).map(Output::Curves),
    }
}

fn compare(spec: &ExperimentSpec, eval: &Evaluation) -> Result<Vec<BerCurve>, Error> {
    let param = spec.param;
    if !matches!(param, SweepParam::BitTime | SweepParam::ReferenceCount | SweepParam::Distance) {
        return Err(Error::invalid(format!(
            "compare varies t_b, Q or d, not {}",
            param.name()
        )));
    }
    let base = &spec.scenario;
    if base.modem.bits_per_symbol() != 1 {
        return Err(Error::invalid("compare needs the single-bit MRSK configuration (N=2, M=1)"));
    }
    let values = match &spec.values {
        Some(v) => parse_values(v)?,
        None => vec![match param {
            SweepParam::BitTime => base.bit_time,
            SweepParam::ReferenceCount => base.modem.reference_count,
            _ => base.channel.distance,
        }],
    };
    let b = &spec.baselines;
    let name = param.name();
    let mut mrsk = BerCurve::new(name, "MRSK", base.modem.detector.label(), base.modem.coding.label());
    let mut ook = BerCurve::new(name, "OOK", "threshold", "none");
    let mut csk = BerCurve::new(name, "CSK", "threshold", "none");
    let mut mosk = BerCurve::new(name, "MoSK", "threshold", "none");
    let mut rtsk_ml = BerCurve::new(name, "RTSK", "ml", "none");
    let mut rtsk_lin = BerCurve::new(name, "RTSK", "linear", "none");
    for &v in &values {
        let s: Scenario = param.apply(base, v)?;
        let q = s.modem.reference_count;
        let ch = s.channel();
        mrsk.push(v, evaluate(&s, eval)?);
        let exact = |ber: f64| BerEstimate::exact(ber);
        ook.push(v, exact(ook_ber(&OokConfig { q, alpha: b.ook_alpha }, &ch, s.bit_time)?));
        csk.push(v, exact(csk_ber(&CskConfig { q, gamma: b.csk_gamma }, &ch, s.bit_time)?));
        mosk.push(v, exact(mosk_ber(&MoskConfig { q, lambda: b.mosk_lambda * q }, &ch, s.bit_time)?));
        for (curve, det) in [(&mut rtsk_ml, RtskDetector::Ml), (&mut rtsk_lin, RtskDetector::Linear)] {
            let cfg = RtskConfig::for_channel(&ch, s.bit_time, det);
            curve.push(v, rtsk_ber(&cfg, s.bit_time, b.rtsk_bits, spec.sim.seed)?);
        }
    }
    Ok(vec![mrsk, ook, csk, mosk, rtsk_ml, rtsk_lin])
}

/// Densities of the received ratio when `ratio` is sent without ISI.
pub fn pdf_table(spec: &ExperimentSpec) -> Result<PdfTable, Error> {
    let s = &spec.scenario;
    let p = &spec.pdf;
    let p1 = s.channel().cir().tap(1);
    let q = s.modem.reference_count;
    let (mu_y, mu_x) = (q * p1, p.ratio * q * p1);
    let pair = GaussPair::new(mu_x, mu_y, (mu_x * (1.0 - p1)).sqrt(), (mu_y * (1.0 - p1)).sqrt())?;
    let solid = SolidParams::from_pair(&pair)?;
    let step = (p.eta_max - p.eta_min) / (p.eta_points - 1) as f64;
    let eta: Vec<f64> = (0..p.eta_points).map(|i| p.eta_min + i as f64 * step).collect();
    let mut rng = stream(spec.sim.seed, PDF_DOMAIN, 0);
    let draws = sample_ratio(&pair, p.samples, s.modem.epsilon(), &mut rng)?;
    let mut bins = vec![0u64; p.eta_points];
    for &z in &draws.values {
        let k = ((z - p.eta_min) / step + 0.5).floor();
        if k >= 0.0 && (k as usize) < bins.len() {
            bins[k as usize] += 1;
        }
    }
    let norm = p.samples.max(1) as f64 * step;
    Ok(PdfTable {
        exact: eta.iter().map(|&e| exact_ratio_pdf(e, &pair)).collect(),
        solid: eta.iter().map(|&e| solid_ratio_pdf(e, &solid)).collect(),
        gaussian: eta.iter().map(|&e| gaussian_ratio_pdf(e, &pair)).collect(),
        empirical: bins.iter().map(|&b| b as f64 / norm).collect(),
        eta,
    })
}
