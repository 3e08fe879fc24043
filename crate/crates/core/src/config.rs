//! Run configuration: flat `section.key = value` lines with `#` comments.
//!
//! Relative paths are resolved against the directory holding the config
//! file. Unknown and repeated keys are errors.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::compile::CompileOptions;
use crate::error::{ConfigError, Error, Result};
use crate::models::{read_matrix_file, ChannelSpec, DimerParams, GammaConvention, InitialState, ModelSpec};
use crate::propagate::{DriveFunction, DriveKind};

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "model.type",
    "model.n",
    "model.j",
    "model.u",
    "model.e",
    "model.a",
    "model.period",
    "model.gamma",
    "model.drive",
    "model.gamma_convention",
    "model.initial",
    "model.h0",
    "model.h1",
    "model.channels",
    "model.rates",
    "integration.steps_per_period",
    "integration.periods",
    "integration.stride",
    "scan.parameter",
    "scan.min",
    "scan.max",
    "scan.count",
    "output.trajectory",
    "output.final_state",
    "output.scan",
    "output.bench",
    "cache.dir",
    "cache.on_the_fly",
    "compile.epsilon",
    "compile.k_includes_rate",
    "bench.sizes",
    "bench.steps",
    "bench.repeats",
    "bench.profile",
];

const DIMER_ONLY: &[&str] = &[
    "model.j",
    "model.u",
    "model.e",
    "model.a",
    "model.gamma",
    "model.gamma_convention",
];
const GENERIC_ONLY: &[&str] = &["model.h0", "model.h1", "model.channels", "model.rates"];

/// Initial state as written in the config.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialSpec {
    Fock(usize),
    Mixed,
    File(PathBuf),
}

impl InitialSpec {
    fn resolve(&self, n: usize) -> Result<InitialState> {
        Ok(match self {
            InitialSpec::Fock(k) => InitialState::Fock(*k),
            InitialSpec::Mixed => InitialState::MaximallyMixed,
            InitialSpec::File(path) => InitialState::Density(read_matrix_file(path, n)?.to_dense()),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenericModel {
    pub n: usize,
    pub h0: PathBuf,
    pub h1: Option<PathBuf>,
    pub channels: Vec<PathBuf>,
    pub rates: Vec<f64>,
    pub drive: DriveKind,
    pub period: f64,
    pub initial: InitialSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelConfig {
    Dimer { params: DimerParams, initial: InitialSpec },
    Generic(GenericModel),
}

impl ModelConfig {
    pub fn n(&self) -> usize {
        match self {
            ModelConfig::Dimer { params, .. } => params.n,
            ModelConfig::Generic(g) => g.n,
        }
    }

    pub fn period(&self) -> f64 {
        match self {
            ModelConfig::Dimer { params, .. } => params.period,
            ModelConfig::Generic(g) => g.period,
        }
    }

    /// Builds and validates the model, reading matrix files as needed.
    pub fn build(&self) -> Result<ModelSpec> {
        match self {
            ModelConfig::Dimer { params, initial } => ModelSpec::dimer(params, initial.resolve(params.n)?),
            ModelConfig::Generic(g) => {
                let h0 = read_matrix_file(&g.h0, g.n)?;
                let h1 = match &g.h1 {
                    Some(p) => read_matrix_file(p, g.n)?,
                    None => crate::sparse::SparseComplexMatrix::zeros(g.n, g.n),
                };
                let channels = g
                    .channels
                    .iter()
                    .zip(&g.rates)
                    .map(|(p, &rate)| {
                        Ok(ChannelSpec {
                            l: read_matrix_file(p, g.n)?,
                            rate,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let spec = ModelSpec {
                    n: g.n,
                    h0,
                    h1,
                    drive: DriveFunction::new(g.drive, g.period)?,
                    channels,
                    initial: g.initial.resolve(g.n)?,
                };
                spec.validate()?;
                Ok(spec)
            }
        }
    }

    /// Copy with one dimer parameter replaced, for scans.
    pub fn with_parameter(&self, parameter: ScanParameter, value: f64) -> Result<ModelConfig> {
        match self {
            ModelConfig::Dimer { params, initial } => {
                let mut p = *params;
                match parameter {
                    ScanParameter::U => p.u = value,
                    ScanParameter::E => p.e = value,
                    ScanParameter::A => p.a = value,
                    ScanParameter::J => p.j = value,
                    ScanParameter::Gamma => p.gamma = value,
                }
                p.validate()?;
                Ok(ModelConfig::Dimer {
                    params: p,
                    initial: initial.clone(),
                })
            }
            ModelConfig::Generic(_) => Err(ConfigError::InvalidValue {
                key: "scan.parameter".into(),
                message: "scans are only available for the dimer model".into(),
            }
            .into()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanParameter {
    U,
    E,
    A,
    J,
    Gamma,
}

impl ScanParameter {
    pub fn name(self) -> &'static str {
        match self {
            ScanParameter::U => "U",
            ScanParameter::E => "E",
            ScanParameter::A => "A",
            ScanParameter::J => "J",
            ScanParameter::Gamma => "gamma",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrationConfig {
    pub steps_per_period: usize,
    pub periods: f64,
    /// Observer stride in steps; 0 records only the first and last state.
    pub stride: usize,
}

impl IntegrationConfig {
    pub fn dt(&self, period: f64) -> f64 {
        period / self.steps_per_period as f64
    }

    pub fn t_end(&self, period: f64) -> f64 {
        self.periods * period
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanConfig {
    pub parameter: ScanParameter,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl ScanConfig {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.min + step * i as f64).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub trajectory: PathBuf,
    pub final_state: PathBuf,
    pub scan: PathBuf,
    pub bench: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CacheConfig {
    pub dir: Option<PathBuf>,
    pub on_the_fly: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchProfile {
    Desk,
    /// Adds N = 1000, recorded but not checked.
    Extended,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    /// RK4 steps timed per size; per-period time is extrapolated.
    pub steps: usize,
    pub repeats: usize,
    pub profile: BenchProfile,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub base_dir: PathBuf,
    pub model: ModelConfig,
    pub integration: IntegrationConfig,
    pub scan: Option<ScanConfig>,
    pub output: OutputConfig,
    pub cache: CacheConfig,
    pub compile: CompileOptions,
    pub bench: BenchConfig,
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> std::result::Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected `section.key = value`, found `{content}`"),
            })?;
            let key = key.trim();
            if !key.contains('.') {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("key `{key}` must have the form `section.key`"),
                });
            }
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            if map.insert(key.to_string(), (line, value.trim().to_string())).is_some() {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
        }
        Ok(Self { map })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|(_, v)| v.as_str())
    }

    fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn required(&self, key: &str) -> std::result::Result<&str, ConfigError> {
        self.raw(key).ok_or_else(|| ConfigError::MissingKey { key: key.into() })
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> std::result::Result<T, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => parse_value(key, v),
        }
    }

    fn real(&self, key: &str, default: f64) -> std::result::Result<f64, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => parse_real(key, v),
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.into(),
        message: message.into(),
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, ConfigError> {
    v.parse().map_err(|_| invalid(key, format!("cannot parse `{v}`")))
}

/// A finite real; `pi`, `2pi` and `2*pi` are accepted as well.
fn parse_real(key: &str, v: &str) -> std::result::Result<f64, ConfigError> {
    let compact: String = v.chars().filter(|c| !c.is_whitespace()).collect();
    let value = if let Some(head) = compact.strip_suffix("pi") {
        let head = head.strip_suffix('*').unwrap_or(head);
        let factor = if head.is_empty() {
            1.0
        } else {
            parse_value::<f64>(key, head)?
        };
        factor * PI
    } else {
        parse_value::<f64>(key, &compact)?
    };
    if !value.is_finite() {
        return Err(invalid(key, format!("must be finite, got `{v}`")));
    }
    Ok(value)
}

fn parse_bool(key: &str, v: &str) -> std::result::Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(invalid(key, format!("expected true or false, got `{v}`"))),
    }
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> std::result::Result<Vec<T>, ConfigError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        Ok(Self::parse_inner(text, base_dir)?)
    }

    fn parse_inner(text: &str, base_dir: &Path) -> std::result::Result<Self, ConfigError> {
        let e = Entries::parse(text)?;
        let resolve = |p: &str| -> PathBuf {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base_dir.join(p)
            }
        };

        let kind = e.required("model.type")?;
        let n: usize = parse_value("model.n", e.required("model.n")?)?;
        if n < 2 {
            return Err(invalid("model.n", format!("must be at least 2, got {n}")));
        }
        let period = e.real("model.period", 2.0 * PI)?;
        if period <= 0.0 {
            return Err(invalid("model.period", "must be positive"));
        }
        let drive = match e.raw("model.drive") {
            None => DriveKind::PiecewiseConstant,
            Some(v) => DriveKind::parse(v).ok_or_else(|| {
                invalid(
                    "model.drive",
                    format!("unknown drive kind `{v}`, expected piecewise or sinusoidal"),
                )
            })?,
        };
        let initial = match e.raw("model.initial") {
            None => InitialSpec::Fock(0),
            Some("mixed") => InitialSpec::Mixed,
            Some(v) => {
                if let Some(k) = v.strip_prefix("fock:") {
                    let k: usize = parse_value("model.initial", k.trim())?;
                    if k >= n {
                        return Err(invalid(
                            "model.initial",
                            format!("Fock state {k} out of range for N = {n}"),
                        ));
                    }
                    InitialSpec::Fock(k)
                } else if let Some(p) = v.strip_prefix("file:") {
                    InitialSpec::File(resolve(p.trim()))
                } else {
                    return Err(invalid(
                        "model.initial",
                        format!("expected fock:K, mixed or file:PATH, got `{v}`"),
                    ));
                }
            }
        };

        let model = match kind {
            "dimer" => {
                if let Some(k) = GENERIC_ONLY.iter().find(|k| e.has(k)) {
                    return Err(invalid(k, "only valid for generic models"));
                }
                let r = DimerParams::reference(n);
                let gamma = e.real("model.gamma", r.gamma)?;
                if gamma < 0.0 {
                    return Err(invalid("model.gamma", "must be non-negative"));
                }
                let convention = match e.raw("model.gamma_convention") {
                    None => GammaConvention::default(),
                    Some(v) => GammaConvention::parse(v).ok_or_else(|| {
                        invalid(
                            "model.gamma_convention",
                            format!("expected in_operator, squared_rate or linear_rate, got `{v}`"),
                        )
                    })?,
                };
                ModelConfig::Dimer {
                    params: DimerParams {
                        n,
                        j: e.real("model.j", r.j)?,
                        u: e.real("model.u", r.u)?,
                        e: e.real("model.e", r.e)?,
                        a: e.real("model.a", r.a)?,
                        period,
                        gamma,
                        drive,
                        convention,
                    },
                    initial,
                }
            }
            "generic" => {
                if let Some(k) = DIMER_ONLY.iter().find(|k| e.has(k)) {
                    return Err(invalid(k, "only valid for the dimer model"));
                }
                let channels: Vec<PathBuf> = e
                    .raw("model.channels")
                    .map(|v| {
                        v.split(',')
                            .map(str::trim)
                            .filter(|s| !s.is_empty())
                            .map(resolve)
                            .collect()
                    })
                    .unwrap_or_default();
                let rates: Vec<f64> = match e.raw("model.rates") {
                    Some(v) => v
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| parse_real("model.rates", s))
                        .collect::<std::result::Result<_, _>>()?,
                    None => vec![1.0; channels.len()],
                };
                if rates.len() != channels.len() {
                    return Err(invalid(
                        "model.rates",
                        format!("{} rates for {} channels", rates.len(), channels.len()),
                    ));
                }
                if let Some(r) = rates.iter().find(|r| **r < 0.0) {
                    return Err(invalid("model.rates", format!("rates must be non-negative, got {r}")));
                }
                ModelConfig::Generic(GenericModel {
                    n,
                    h0: resolve(e.required("model.h0")?),
                    h1: e.raw("model.h1").map(resolve),
                    channels,
                    rates,
                    drive,
                    period,
                    initial,
                })
            }
            other => {
                return Err(invalid(
                    "model.type",
                    format!("expected dimer or generic, got `{other}`"),
                ));
            }
        };

        let steps_per_period: usize = e.get("integration.steps_per_period", 1000)?;
        if steps_per_period == 0 {
            return Err(invalid("integration.steps_per_period", "must be positive"));
        }
        if drive == DriveKind::PiecewiseConstant && !steps_per_period.is_multiple_of(2) {
            return Err(invalid(
                "integration.steps_per_period",
                "must be even so that steps align with the half-period switch",
            ));
        }
        let periods = e.real("integration.periods", 10.0)?;
        let total = periods * steps_per_period as f64;
        if periods < 0.0 || (total - total.round()).abs() > 1e-9 * total.max(1.0) {
            return Err(invalid(
                "integration.periods",
                "must be non-negative and span a whole number of steps",
            ));
        }
        let integration = IntegrationConfig {
            steps_per_period,
            periods,
            stride: e.get("integration.stride", steps_per_period)?,
        };

        let scan_keys = ["scan.parameter", "scan.min", "scan.max", "scan.count"];
        let scan = if scan_keys.iter().any(|k| e.has(k)) {
            let parameter = match e.raw("scan.parameter").unwrap_or("u") {
                "u" | "U" => ScanParameter::U,
                "e" | "E" => ScanParameter::E,
                "a" | "A" => ScanParameter::A,
                "j" | "J" => ScanParameter::J,
                "gamma" => ScanParameter::Gamma,
                other => return Err(invalid("scan.parameter", format!("unknown parameter `{other}`"))),
            };
            let min = parse_real("scan.min", e.required("scan.min")?)?;
            let max = parse_real("scan.max", e.required("scan.max")?)?;
            let count: usize = parse_value("scan.count", e.required("scan.count")?)?;
            if count == 0 {
                return Err(invalid("scan.count", "must be positive"));
            }
            if max < min {
                return Err(invalid("scan.max", "must not be below scan.min"));
            }
            Some(ScanConfig {
                parameter,
                min,
                max,
                count,
            })
        } else {
            None
        };

        let out = |key: &str, default: &str| resolve(e.raw(key).unwrap_or(default));
        let output = OutputConfig {
            trajectory: out("output.trajectory", "trajectory.csv"),
            final_state: out("output.final_state", "final_state.csv"),
            scan: out("output.scan", "scan.csv"),
            bench: out("output.bench", "bench.csv"),
        };

        let cache = CacheConfig {
            dir: e.raw("cache.dir").map(resolve),
            on_the_fly: match e.raw("cache.on_the_fly") {
                Some(v) => parse_bool("cache.on_the_fly", v)?,
                None => false,
            },
        };

        let epsilon = e.real("compile.epsilon", 0.0)?;
        if epsilon < 0.0 {
            return Err(invalid("compile.epsilon", "must be non-negative"));
        }
        let compile = CompileOptions {
            epsilon,
            k_includes_rate: match e.raw("compile.k_includes_rate") {
                Some(v) => parse_bool("compile.k_includes_rate", v)?,
                None => true,
            },
        };

        let bench = BenchConfig {
            sizes: match e.raw("bench.sizes") {
                Some(v) => parse_list("bench.sizes", v)?,
                None => vec![100, 141, 200, 283, 400],
            },
            steps: e.get("bench.steps", 20)?,
            repeats: e.get("bench.repeats", 3)?,
            profile: match e.raw("bench.profile") {
                None | Some("desk") => BenchProfile::Desk,
                Some("extended") => BenchProfile::Extended,
                Some(v) => {
                    return Err(invalid(
                        "bench.profile",
                        format!("expected desk or extended, got `{v}`"),
                    ))
                }
            },
        };
        if bench.sizes.iter().any(|&s| s < 2) || bench.steps == 0 || bench.repeats == 0 {
            return Err(invalid(
                "bench.sizes",
                "sizes must be at least 2; steps and repeats positive",
            ));
        }

        Ok(RunConfig {
            base_dir: base_dir.to_path_buf(),
            model,
            integration,
            scan,
            output,
            cache,
            compile,
            bench,
        })
    }
}
