//! Scenario files.
//!
//! A scenario is a TOML document with a handful of top-level keys and the
//! optional sections `[architecture]`, `[channel]`, `[sweep]` and
//! `[multiuser]`. Unknown keys are errors; every omitted key takes a default
//! that is reported through `log::info!`. Diagnostics carry the 1-based line
//! of the offending key.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use beamkit::{PhaseResolution, Structure};
use log::info;
use serde::Deserialize;
use toml::Spanned;

/// Version of both the scenario format and the CSV schema.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    AtLine { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// SNR axis in dB on a fixed Nt × Nr link.
    SuSweepSnr,
    /// Transmit-array size on the axis, receive array fixed.
    SuSweepAntennas,
    /// Square N × N link with N on the axis.
    AsymptoticSweep,
    /// Transmit PSD in dBm/Hz on the axis.
    MuSumRate,
    /// Per-user long-term rates under adaptive weights at one PSD.
    MuCdf,
}

impl Mode {
    pub fn is_multiuser(self) -> bool {
        matches!(self, Mode::MuSumRate | Mode::MuCdf)
    }

    fn axis_is_antennas(self) -> bool {
        matches!(self, Mode::SuSweepAntennas | Mode::AsymptoticSweep)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::SuSweepSnr => "su_sweep_snr",
            Mode::SuSweepAntennas => "su_sweep_antennas",
            Mode::AsymptoticSweep => "asymptotic_sweep",
            Mode::MuSumRate => "mu_sum_rate",
            Mode::MuCdf => "mu_cdf",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "su_sweep_snr" => Mode::SuSweepSnr,
            "su_sweep_antennas" => Mode::SuSweepAntennas,
            "asymptotic_sweep" => Mode::AsymptoticSweep,
            "mu_sum_rate" => Mode::MuSumRate,
            "mu_cdf" => Mode::MuCdf,
            other => return Err(format!("unknown mode `{other}`")),
        })
    }
}

/// A method tag such as `hybrid_full:b2` or `wmmse_hybrid:rf8:partial`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    FullyDigital,
    Asymptotic,
    Hybrid { structure: Structure, bits: Option<u8> },
    /// Fully-digital WMMSE, optionally on the first `antennas` elements only.
    WmmseDigital { antennas: Option<usize> },
    WmmseHybrid { num_rf: usize, structure: Structure, bits: Option<u8> },
}

impl Method {
    pub fn is_multiuser(self) -> bool {
        matches!(self, Method::WmmseDigital { .. } | Method::WmmseHybrid { .. })
    }

    pub fn phase(bits: Option<u8>) -> PhaseResolution {
        bits.map_or(PhaseResolution::Unbounded, PhaseResolution::Bits)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits = |b: &Option<u8>| b.map(|b| format!(":b{b}")).unwrap_or_default();
        match self {
            Method::FullyDigital => f.write_str("fully_digital"),
            Method::Asymptotic => f.write_str("asymptotic"),
            Method::Hybrid { structure, bits: b } => {
                let s = match structure {
                    Structure::FullyConnected => "hybrid_full",
                    Structure::PartiallyConnected => "hybrid_partial",
                };
                write!(f, "{s}{}", bits(b))
            }
            Method::WmmseDigital { antennas } => match antennas {
                Some(n) => write!(f, "wmmse_digital:nt{n}"),
                None => f.write_str("wmmse_digital"),
            },
            Method::WmmseHybrid { num_rf, structure, bits: b } => {
                write!(f, "wmmse_hybrid:rf{num_rf}")?;
                if *structure == Structure::PartiallyConnected {
                    f.write_str(":partial")?;
                }
                write!(f, "{}", bits(b))
            }
        }
    }
}

fn parse_suffix<T: FromStr>(part: &str, prefix: &str, tag: &str) -> Result<T, String> {
    part.strip_prefix(prefix)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| format!("bad option `{part}` in method `{tag}`"))
}

impl FromStr for Method {
    type Err = String;

    fn from_str(tag: &str) -> Result<Self, String> {
        let mut parts = tag.split(':');
        let head = parts.next().unwrap_or_default();
        let rest: Vec<&str> = parts.collect();
        let bits_only = |rest: &[&str]| -> Result<Option<u8>, String> {
            match rest {
                [] => Ok(None),
                [b] => parse_suffix(b, "b", tag).map(Some),
                _ => Err(format!("too many options in method `{tag}`")),
            }
        };
        let method = match head {
            "fully_digital" | "asymptotic" if !rest.is_empty() => {
                return Err(format!("method `{head}` takes no options"))
            }
            "fully_digital" => Method::FullyDigital,
            "asymptotic" => Method::Asymptotic,
            "hybrid_full" => Method::Hybrid {
                structure: Structure::FullyConnected,
                bits: bits_only(&rest)?,
            },
            "hybrid_partial" => Method::Hybrid {
                structure: Structure::PartiallyConnected,
                bits: bits_only(&rest)?,
            },
            "wmmse_digital" => match rest.as_slice() {
                [] => Method::WmmseDigital { antennas: None },
                [n] => Method::WmmseDigital { antennas: Some(parse_suffix(n, "nt", tag)?) },
                _ => return Err(format!("too many options in method `{tag}`")),
            },
            "wmmse_hybrid" => {
                let (rf, opts) = rest
                    .split_first()
                    .ok_or_else(|| format!("method `{tag}` needs an `rf<N>` option"))?;
                let num_rf = parse_suffix(rf, "rf", tag)?;
                let (structure, opts) = match opts.first() {
                    Some(&"partial") => (Structure::PartiallyConnected, &opts[1..]),
                    _ => (Structure::FullyConnected, opts),
                };
                Method::WmmseHybrid { num_rf, structure, bits: bits_only(opts)? }
            }
            other => return Err(format!("unknown method `{other}`")),
        };
        if let Method::Hybrid { bits: Some(b), .. } | Method::WmmseHybrid { bits: Some(b), .. } =
            method
        {
            PhaseResolution::Bits(b)
                .validate()
                .map_err(|e| format!("method `{tag}`: {e}"))?;
        }
        // Canonical spelling only, so that tags round-trip.
        if method.to_string() != tag {
            return Err(format!("method `{tag}` should be written `{method}`"));
        }
        Ok(method)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightProtocol {
    Equal,
    /// ∝ 1 / expected single-user rate at the reference PSD.
    Static,
    /// ∝ 1 / long-term average rate, updated every slot.
    Adaptive,
}

impl fmt::Display for WeightProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightProtocol::Equal => "equal",
            WeightProtocol::Static => "static",
            WeightProtocol::Adaptive => "adaptive",
        })
    }
}

impl FromStr for WeightProtocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "equal" => Ok(WeightProtocol::Equal),
            "static" => Ok(WeightProtocol::Static),
            "adaptive" => Ok(WeightProtocol::Adaptive),
            other => Err(format!("unknown weight protocol `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    pub nt: usize,
    pub nr: usize,
    pub num_rf: usize,
    pub num_streams: usize,
    pub num_subcarriers: usize,
    pub power: f64,
    pub equal_power: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub num_clusters: usize,
    pub scatterers_per_cluster: usize,
    pub angular_spread_deg: f64,
    pub max_delay_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub values: Vec<f64>,
    /// SNR of the antenna sweeps, in dB.
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Multiuser {
    pub num_users: usize,
    pub cell_clusters: usize,
    pub radius_km: f64,
    pub min_distance_km: f64,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub weights: WeightProtocol,
    pub reference_psd_dbm_hz: f64,
    pub weight_samples: usize,
    pub cdf_psd_dbm_hz: f64,
    pub cell_users: usize,
    pub slots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub mode: Mode,
    pub seed: u64,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub architecture: Architecture,
    pub channel: ChannelConfig,
    pub sweep: Sweep,
    pub multiuser: Multiuser,
}

type Field<T> = Option<Spanned<T>>;

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    format_version: Field<i64>,
    name: Field<String>,
    mode: Field<String>,
    seed: Field<i64>,
    trials: Field<i64>,
    methods: Field<Vec<Spanned<String>>>,
    architecture: Option<RawArchitecture>,
    channel: Option<RawChannel>,
    sweep: Option<RawSweep>,
    multiuser: Option<RawMultiuser>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawArchitecture {
    nt: Field<i64>,
    nr: Field<i64>,
    num_rf: Field<i64>,
    num_streams: Field<i64>,
    num_subcarriers: Field<i64>,
    power: Field<f64>,
    equal_power: Field<bool>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    num_clusters: Field<i64>,
    scatterers_per_cluster: Field<i64>,
    angular_spread_deg: Field<f64>,
    max_delay_fraction: Field<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    values: Field<Vec<Spanned<f64>>>,
    snr_db: Field<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawMultiuser {
    num_users: Field<i64>,
    cell_clusters: Field<i64>,
    radius_km: Field<f64>,
    min_distance_km: Field<f64>,
    bandwidth_hz: Field<f64>,
    noise_psd_dbm_hz: Field<f64>,
    weights: Field<String>,
    reference_psd_dbm_hz: Field<f64>,
    weight_samples: Field<i64>,
    cdf_psd_dbm_hz: Field<f64>,
    cell_users: Field<i64>,
    slots: Field<i64>,
}

/// Maps byte offsets to 1-based line numbers.
struct Lines<'a>(&'a str);

impl Lines<'_> {
    fn line(&self, span: &Range<usize>) -> usize {
        let end = span.start.min(self.0.len());
        self.0[..end].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn err<T>(&self, span: &Range<usize>, message: impl Into<String>) -> Result<T, ConfigError> {
        Err(ConfigError::AtLine { line: self.line(span), message: message.into() })
    }
}

/// Resolves one optional field, logging the default when it is absent.
fn take<T: Clone + fmt::Debug>(key: &str, field: &Field<T>, default: T) -> (T, Option<Range<usize>>) {
    match field {
        Some(s) => (s.get_ref().clone(), Some(s.span())),
        None => {
            info!("{key} not set, using default {default:?}");
            (default, None)
        }
    }
}

fn check(
    lines: &Lines,
    span: &Option<Range<usize>>,
    ok: bool,
    message: impl Into<String>,
) -> Result<(), ConfigError> {
    if ok {
        return Ok(());
    }
    match span {
        Some(s) => lines.err(s, message),
        None => Err(ConfigError::Invalid(message.into())),
    }
}

fn count(
    lines: &Lines,
    key: &str,
    field: &Field<i64>,
    default: usize,
) -> Result<usize, ConfigError> {
    let (v, span) = take(key, field, default as i64);
    check(lines, &span, v > 0, format!("{key} must be positive, got {v}"))?;
    Ok(v as usize)
}

fn real(lines: &Lines, key: &str, field: &Field<f64>, default: f64) -> Result<f64, ConfigError> {
    let (v, span) = take(key, field, default);
    check(lines, &span, v.is_finite(), format!("{key} must be finite"))?;
    Ok(v)
}

fn positive(lines: &Lines, key: &str, field: &Field<f64>, default: f64) -> Result<f64, ConfigError> {
    let (v, span) = take(key, field, default);
    check(lines, &span, v.is_finite() && v > 0.0, format!("{key} must be positive, got {v}"))?;
    Ok(v)
}

fn default_methods(mode: Mode, num_rf: usize) -> Vec<Method> {
    match mode {
        Mode::SuSweepSnr => vec![
            Method::Asymptotic,
            Method::FullyDigital,
            Method::Hybrid { structure: Structure::FullyConnected, bits: None },
            Method::Hybrid { structure: Structure::PartiallyConnected, bits: None },
        ],
        Mode::SuSweepAntennas | Mode::AsymptoticSweep => {
            vec![Method::Asymptotic, Method::FullyDigital]
        }
        Mode::MuSumRate | Mode::MuCdf => vec![
            Method::WmmseDigital { antennas: None },
            Method::WmmseHybrid { num_rf, structure: Structure::FullyConnected, bits: None },
        ],
    }
}

fn default_axis(mode: Mode) -> Vec<f64> {
    match mode {
        Mode::SuSweepSnr => vec![-10.0, -5.0, 0.0, 5.0, 10.0],
        Mode::SuSweepAntennas | Mode::AsymptoticSweep => vec![16.0, 32.0, 64.0, 128.0],
        Mode::MuSumRate => vec![-60.0, -55.0, -50.0, -45.0, -40.0],
        Mode::MuCdf => vec![-45.0],
    }
}

/// Parses and validates a scenario.
pub fn parse_config(text: &str) -> Result<Scenario, ConfigError> {
    let lines = Lines(text);
    let raw: RawScenario = toml::from_str(text).map_err(|e| match e.span() {
        Some(span) => ConfigError::AtLine {
            line: lines.line(&span),
            message: e.message().to_string(),
        },
        None => ConfigError::Invalid(e.message().to_string()),
    })?;

    let (version, span) = take("format_version", &raw.format_version, FORMAT_VERSION as i64);
    check(
        &lines,
        &span,
        version == FORMAT_VERSION as i64,
        format!("unsupported format_version {version}, expected {FORMAT_VERSION}"),
    )?;
    let (name, _) = take("name", &raw.name, "custom".to_string());
    let mode: Mode = match &raw.mode {
        Some(m) => m.get_ref().parse().or_else(|e: String| lines.err(&m.span(), e))?,
        None => return Err(ConfigError::Invalid("missing required key `mode`".into())),
    };
    let seed = match &raw.seed {
        Some(s) if *s.get_ref() >= 0 => *s.get_ref() as u64,
        Some(s) => return lines.err(&s.span(), "seed must be nonnegative"),
        None => return Err(ConfigError::Invalid("missing required key `seed`".into())),
    };
    let trials = count(&lines, "trials", &raw.trials, 100)?;

    let a = raw.architecture.unwrap_or_default();
    let architecture = Architecture {
        nt: count(&lines, "architecture.nt", &a.nt, 64)?,
        nr: count(&lines, "architecture.nr", &a.nr, 32)?,
        num_rf: count(&lines, "architecture.num_rf", &a.num_rf, 4)?,
        num_streams: count(&lines, "architecture.num_streams", &a.num_streams, 2)?,
        num_subcarriers: count(&lines, "architecture.num_subcarriers", &a.num_subcarriers, 64)?,
        power: positive(&lines, "architecture.power", &a.power, 1.0)?,
        equal_power: take("architecture.equal_power", &a.equal_power, false).0,
    };

    let c = raw.channel.unwrap_or_default();
    let channel = ChannelConfig {
        num_clusters: count(&lines, "channel.num_clusters", &c.num_clusters, 5)?,
        scatterers_per_cluster: count(
            &lines,
            "channel.scatterers_per_cluster",
            &c.scatterers_per_cluster,
            10,
        )?,
        angular_spread_deg: {
            let (v, span) = take("channel.angular_spread_deg", &c.angular_spread_deg, 10.0);
            check(&lines, &span, v.is_finite() && v >= 0.0, "channel.angular_spread_deg must be nonnegative")?;
            v
        },
        max_delay_fraction: {
            let (v, span) = take("channel.max_delay_fraction", &c.max_delay_fraction, 0.25);
            check(&lines, &span, v.is_finite() && v >= 0.0, "channel.max_delay_fraction must be nonnegative")?;
            v
        },
    };

    let s = raw.sweep.unwrap_or_default();
    let values = match &s.values {
        Some(v) => {
            if v.get_ref().is_empty() {
                return lines.err(&v.span(), "sweep.values must not be empty");
            }
            for x in v.get_ref() {
                let val = *x.get_ref();
                if !val.is_finite() {
                    return lines.err(&x.span(), "sweep values must be finite");
                }
                if mode.axis_is_antennas() && !(val >= 1.0 && val.fract() == 0.0) {
                    return lines.err(&x.span(), format!("antenna count {val} must be a positive integer"));
                }
            }
            v.get_ref().iter().map(|x| *x.get_ref()).collect()
        }
        None => {
            let d = default_axis(mode);
            info!("sweep.values not set, using default {d:?}");
            d
        }
    };
    let sweep = Sweep { values, snr_db: real(&lines, "sweep.snr_db", &s.snr_db, 20.0)? };

    let m = raw.multiuser.unwrap_or_default();
    let default_weights = if mode == Mode::MuCdf { WeightProtocol::Adaptive } else { WeightProtocol::Static };
    let weights = match &m.weights {
        Some(w) => w.get_ref().parse().or_else(|e: String| lines.err(&w.span(), e))?,
        None => {
            info!("multiuser.weights not set, using default {default_weights}");
            default_weights
        }
    };
    if weights == WeightProtocol::Adaptive && mode != Mode::MuCdf {
        let span = m.weights.as_ref().map(|w| w.span());
        check(&lines, &span, false, "adaptive weights need mode = \"mu_cdf\"")?;
    }
    let multiuser = Multiuser {
        num_users: count(&lines, "multiuser.num_users", &m.num_users, 4)?,
        cell_clusters: count(&lines, "multiuser.cell_clusters", &m.cell_clusters, 10)?,
        radius_km: positive(&lines, "multiuser.radius_km", &m.radius_km, 0.2)?,
        min_distance_km: positive(&lines, "multiuser.min_distance_km", &m.min_distance_km, 0.01)?,
        bandwidth_hz: positive(&lines, "multiuser.bandwidth_hz", &m.bandwidth_hz, 32e6)?,
        noise_psd_dbm_hz: real(&lines, "multiuser.noise_psd_dbm_hz", &m.noise_psd_dbm_hz, -139.0)?,
        weights,
        reference_psd_dbm_hz: real(&lines, "multiuser.reference_psd_dbm_hz", &m.reference_psd_dbm_hz, -55.0)?,
        weight_samples: count(&lines, "multiuser.weight_samples", &m.weight_samples, 20)?,
        cdf_psd_dbm_hz: real(&lines, "multiuser.cdf_psd_dbm_hz", &m.cdf_psd_dbm_hz, -45.0)?,
        cell_users: count(&lines, "multiuser.cell_users", &m.cell_users, 20)?,
        slots: count(&lines, "multiuser.slots", &m.slots, 50)?,
    };

    let methods = match &raw.methods {
        Some(list) => {
            if list.get_ref().is_empty() {
                return lines.err(&list.span(), "methods must not be empty");
            }
            let mut out: Vec<Method> = Vec::new();
            for tag in list.get_ref() {
                let method: Method =
                    tag.get_ref().parse().or_else(|e: String| lines.err(&tag.span(), e))?;
                if method.is_multiuser() != mode.is_multiuser() {
                    return lines.err(&tag.span(), format!("method `{method}` does not apply to mode {mode}"));
                }
                if out.contains(&method) {
                    return lines.err(&tag.span(), format!("method `{method}` listed twice"));
                }
                out.push(method);
            }
            out
        }
        None => {
            let d = default_methods(mode, architecture.num_rf);
            info!("methods not set, using default {:?}", d.iter().map(|m| m.to_string()).collect::<Vec<_>>());
            d
        }
    };

    let scenario = Scenario { name, mode, seed, trials, methods, architecture, channel, sweep, multiuser };
    scenario.validate().map_err(|e| {
        let span = raw.methods.as_ref().map(|m| m.span());
        match span {
            Some(s) => ConfigError::AtLine { line: lines.line(&s), message: e },
            None => ConfigError::Invalid(e),
        }
    })?;
    Ok(scenario)
}

impl Scenario {
    /// Architecture of the SU link at one axis value.
    pub fn su_spec(&self, axis: f64, method: Method) -> beamkit::ArchitectureSpec {
        let a = &self.architecture;
        let (nt, nr, snr_db) = match self.mode {
            Mode::SuSweepAntennas => (axis as usize, a.nr, self.sweep.snr_db),
            Mode::AsymptoticSweep => (axis as usize, axis as usize, self.sweep.snr_db),
            _ => (a.nt, a.nr, axis),
        };
        let (structure, phase) = match method {
            Method::Hybrid { structure, bits } => (structure, Method::phase(bits)),
            _ => (Structure::FullyConnected, PhaseResolution::Unbounded),
        };
        beamkit::ArchitectureSpec {
            nt,
            nr,
            num_rf: a.num_rf,
            num_streams: a.num_streams,
            num_subcarriers: a.num_subcarriers,
            structure,
            phase,
            power: a.power,
            noise_power: a.power * 10f64.powf(-snr_db / 10.0),
        }
    }

    /// Cross-field checks that depend on the mode and method list.
    fn validate(&self) -> Result<(), String> {
        if self.mode.is_multiuser() {
            let nt = self.architecture.nt;
            let nu = self.multiuser.num_users;
            for m in &self.methods {
                match *m {
                    Method::WmmseDigital { antennas: Some(n) } if n == 0 || n > nt => {
                        return Err(format!("method `{m}` needs 1..={nt} antennas"));
                    }
                    Method::WmmseHybrid { num_rf, structure, .. } => {
                        if num_rf < nu || num_rf > nt {
                            return Err(format!("method `{m}` needs {nu} <= N_RF <= {nt}"));
                        }
                        if structure == Structure::PartiallyConnected && nt % num_rf != 0 {
                            return Err(format!("method `{m}`: N_RF must divide Nt = {nt}"));
                        }
                    }
                    _ => {}
                }
            }
            if self.mode == Mode::MuCdf && self.multiuser.cell_users < nu {
                return Err(format!("multiuser.cell_users must be at least num_users = {nu}"));
            }
            return Ok(());
        }
        let paths = self.channel.num_clusters * self.channel.scatterers_per_cluster;
        for &axis in &self.sweep.values {
            for &m in &self.methods {
                let spec = self.su_spec(axis, m);
                spec.validate().map_err(|e| format!("method `{m}` at axis value {axis}: {e}"))?;
                if m == Method::Asymptotic && paths < spec.num_rf {
                    return Err(format!("asymptotic design needs at least N_RF = {} paths, channel has {paths}", spec.num_rf));
                }
            }
        }
        Ok(())
    }

    /// Canonical TOML text; `parse_config(&s.emit())` reproduces `s`.
    pub fn emit(&self) -> String {
        let a = &self.architecture;
        let c = &self.channel;
        let m = &self.multiuser;
        let list = |items: Vec<String>| format!("[{}]", items.join(", "));
        format!(
            "format_version = {FORMAT_VERSION}\n\
             name = {name:?}\n\
             mode = \"{mode}\"\n\
             seed = {seed}\n\
             trials = {trials}\n\
             methods = {methods}\n\
             \n[architecture]\n\
             nt = {nt}\nnr = {nr}\nnum_rf = {num_rf}\nnum_streams = {ns}\nnum_subcarriers = {k}\n\
             power = {power:?}\nequal_power = {eq}\n\
             \n[channel]\n\
             num_clusters = {nc}\nscatterers_per_cluster = {nsc}\n\
             angular_spread_deg = {spread:?}\nmax_delay_fraction = {delay:?}\n\
             \n[sweep]\n\
             values = {values}\nsnr_db = {snr:?}\n\
             \n[multiuser]\n\
             num_users = {nu}\ncell_clusters = {cc}\nradius_km = {radius:?}\n\
             min_distance_km = {dmin:?}\nbandwidth_hz = {bw:?}\nnoise_psd_dbm_hz = {noise:?}\n\
             weights = \"{weights}\"\nreference_psd_dbm_hz = {refpsd:?}\nweight_samples = {ws}\n\
             cdf_psd_dbm_hz = {cdf:?}\ncell_users = {cu}\nslots = {slots}\n",
            name = self.name,
            mode = self.mode,
            seed = self.seed,
            trials = self.trials,
            methods = list(self.methods.iter().map(|m| format!("\"{m}\"")).collect()),
            nt = a.nt,
            nr = a.nr,
            num_rf = a.num_rf,
            ns = a.num_streams,
            k = a.num_subcarriers,
            power = a.power,
            eq = a.equal_power,
            nc = c.num_clusters,
            nsc = c.scatterers_per_cluster,
            spread = c.angular_spread_deg,
            delay = c.max_delay_fraction,
            values = list(self.sweep.values.iter().map(|v| format!("{v:?}")).collect()),
            snr = self.sweep.snr_db,
            nu = m.num_users,
            cc = m.cell_clusters,
            radius = m.radius_km,
            dmin = m.min_distance_km,
            bw = m.bandwidth_hz,
            noise = m.noise_psd_dbm_hz,
            weights = m.weights,
            refpsd = m.reference_psd_dbm_hz,
            ws = m.weight_samples,
            cdf = m.cdf_psd_dbm_hz,
            cu = m.cell_users,
            slots = m.slots,
        )
    }
}

/// Built-in scenarios, one per reproduced figure.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig3a", include_str!("../presets/fig3a.toml")),
    ("fig3b", include_str!("../presets/fig3b.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("fig5", include_str!("../presets/fig5.toml")),
    ("fig6", include_str!("../presets/fig6.toml")),
    ("fig7", include_str!("../presets/fig7.toml")),
    ("fig8", include_str!("../presets/fig8.toml")),
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn preset(name: &str) -> Result<Scenario, ConfigError> {
    let text = preset_text(name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        ConfigError::Invalid(format!("unknown preset `{name}`; available: {}", names.join(", ")))
    })?;
    parse_config(text)
}
