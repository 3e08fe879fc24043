//! Subcommand implementations behind the `sunbloch` binary.
//!
//! Every command follows the same four steps: initialization (config and
//! model), data preparation (basis expansion and assembly), integration and
//! finalization (observables and files).

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::alloc;
use crate::basis::GeneratorBasis;
use crate::cache::{self, CacheReport};
use crate::compile::{compile, CompiledBloch, TensorSource};
use crate::config::{BenchProfile, RunConfig};
use crate::error::{Error, Result};
use crate::models::{DimerParams, InitialState, ModelSpec};
use crate::oracle::{compile_oracle, oracle_propagate, positivity_check};
use crate::propagate::{observables, propagate, CoherenceVector, PropagationOptions, PropagationReport, Propagator};
use crate::structure::{self, BruteForce, MaterializedTensors, TensorKind};

/// Largest N accepted by `validate`.
pub const VALIDATE_LIMIT: usize = 16;

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Cache(_) => 4,
        Error::NonFinite { .. } => 3,
        Error::Io { .. } => 1,
        _ => 2,
    }
}

/// Settings given on the command line that override the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub cache_dir: Option<PathBuf>,
    pub on_the_fly: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(dir) = &self.cache_dir {
            cfg.cache.dir = Some(dir.clone());
        }
        if self.on_the_fly {
            cfg.cache.on_the_fly = true;
        }
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Structure constants as selected by the cache settings.
pub enum Tensors {
    OnTheFly,
    Materialized(MaterializedTensors),
}

impl Tensors {
    pub fn prepare(cfg: &RunConfig, n: usize) -> Result<Self> {
        if cfg.cache.on_the_fly {
            return Ok(Tensors::OnTheFly);
        }
        Ok(Tensors::Materialized(match &cfg.cache.dir {
            Some(dir) => cache::load_materialized(dir, n)?,
            None => MaterializedTensors::build(&GeneratorBasis::new(n)?),
        }))
    }

    pub fn source(&self) -> TensorSource<'_> {
        match self {
            Tensors::OnTheFly => TensorSource::OnTheFly,
            Tensors::Materialized(t) => TensorSource::Materialized(t),
        }
    }
}

/// A model compiled and ready to propagate.
pub struct Prepared {
    pub basis: GeneratorBasis,
    pub model: ModelSpec,
    pub compiled: CompiledBloch,
    pub v0: CoherenceVector,
}

pub fn prepare(model: ModelSpec, tensors: &Tensors, cfg: &RunConfig) -> Result<Prepared> {
    let basis = GeneratorBasis::new(model.n)?;
    let (ham, channels) = model.decompose(&basis)?;
    let compiled = compile(&basis, &ham, &channels, tensors.source(), cfg.compile)?;
    let v0 = model.initial.coherence(&basis)?;
    Ok(Prepared {
        basis,
        model,
        compiled,
        v0,
    })
}

fn propagation_options(cfg: &RunConfig) -> PropagationOptions {
    let period = cfg.model.period();
    PropagationOptions::new(
        cfg.integration.dt(period),
        cfg.integration.t_end(period),
        cfg.integration.stride,
    )
}

#[derive(Clone, Debug)]
pub struct PropagateSummary {
    pub final_state: CoherenceVector,
    pub probabilities: Vec<f64>,
    pub trajectory_rows: usize,
    pub report: PropagationReport,
}

/// Runs one propagation and writes the trajectory and final-state files.
pub fn cmd_propagate(cfg: &RunConfig) -> Result<PropagateSummary> {
    let model = cfg.model.build()?;
    let tensors = Tensors::prepare(cfg, model.n)?;
    let p = prepare(model, &tensors, cfg)?;
    drop(tensors);

    let mut rows: Vec<(f64, Vec<f64>)> = Vec::new();
    let (state, report) = propagate(&p.compiled, p.model.drive, &p.v0, propagation_options(cfg), |t, v| {
        rows.push((t, p.basis.diagonal_from_coherence(v)));
    })?;

    let n = p.basis.n();
    let mut w = create(&cfg.output.trajectory)?;
    let mut line = String::from("t");
    for k in 0..n {
        write!(line, ",p_{k}").unwrap();
    }
    let io = |e| Error::io(&cfg.output.trajectory, e);
    writeln!(w, "{line}").map_err(io)?;
    for (t, probs) in &rows {
        line.clear();
        line.push_str(&fmt_f64(*t));
        for x in probs {
            line.push(',');
            line.push_str(&fmt_f64(*x));
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)?;

    let rho = state.to_density(&p.basis)?;
    let mut w = create(&cfg.output.final_state)?;
    let io = |e| Error::io(&cfg.output.final_state, e);
    writeln!(w, "i,j,re,im").map_err(io)?;
    for i in 0..n {
        for j in 0..n {
            let z = rho[(i, j)];
            writeln!(w, "{i},{j},{},{}", fmt_f64(z.re), fmt_f64(z.im)).map_err(io)?;
        }
    }
    w.flush().map_err(io)?;

    Ok(PropagateSummary {
        probabilities: observables(&p.basis, &state.v)?,
        final_state: state,
        trajectory_rows: rows.len(),
        report,
    })
}

#[derive(Clone, Debug)]
pub struct ScanSummary {
    pub values: Vec<f64>,
    /// Final probabilities per scan point, before normalization.
    pub probabilities: Vec<Vec<f64>>,
    /// Each column divided by its maximum.
    pub normalized: Vec<Vec<f64>>,
}

/// Parameter scan: propagate every grid point over the configured
/// transient and record the stroboscopic diagonal, normalized per point.
pub fn cmd_scan(cfg: &RunConfig) -> Result<ScanSummary> {
    let scan = cfg
        .scan
        .ok_or_else(|| Error::from(crate::error::ConfigError::MissingKey { key: "scan.min".into() }))?;
    let values = scan.values();
    let n = cfg.model.n();
    let tensors = Tensors::prepare(cfg, n)?;
    let options = propagation_options(cfg);
    let probabilities = values
        .par_iter()
        .map(|&value| {
            let model = cfg.model.with_parameter(scan.parameter, value)?.build()?;
            let p = prepare(model, &tensors, cfg)?;
            let (state, _) = propagate(&p.compiled, p.model.drive, &p.v0, options, |_, _| {})?;
            observables(&p.basis, &state.v)
        })
        .collect::<Result<Vec<_>>>()?;
    let normalized: Vec<Vec<f64>> = probabilities
        .iter()
        .map(|col| {
            let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            col.iter().map(|x| x / max).collect()
        })
        .collect();

    let mut w = create(&cfg.output.scan)?;
    let io = |e| Error::io(&cfg.output.scan, e);
    writeln!(w, "{},n,p_normalized", scan.parameter.name()).map_err(io)?;
    for (value, col) in values.iter().zip(&normalized) {
        for (k, x) in col.iter().enumerate() {
            writeln!(w, "{},{k},{}", fmt_f64(*value), fmt_f64(*x)).map_err(io)?;
        }
    }
    w.flush().map_err(io)?;
    Ok(ScanSummary {
        values,
        probabilities,
        normalized,
    })
}

/// One validation check.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ValidateReport {
    pub checks: Vec<Check>,
}

impl ValidateReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn max_abs(a: impl Iterator<Item = f64>) -> f64 {
    a.fold(0.0, |m, x| m.max(x.abs()))
}

/// Oracle comparison of every pipeline stage for a small model.
pub fn cmd_validate(cfg: &RunConfig) -> Result<ValidateReport> {
    let n = cfg.model.n();
    if n > VALIDATE_LIMIT {
        return Err(Error::SizeGuard {
            what: "validate",
            n,
            limit: VALIDATE_LIMIT,
        });
    }
    let mut checks = Vec::new();
    let basis = GeneratorBasis::new(n)?;

    // Structure constants: counts and trace-formula agreement.
    let f = structure::f_nonzeros(&basis);
    let d = structure::d_nonzeros(&basis);
    let counts_ok = f.nnz() as u64 == structure::nz_f(n) && d.nnz() as u64 == structure::nz_d(n);
    checks.push(Check::new(
        "structure constant counts",
        counts_ok,
        format!(
            "f {} / {}, d {} / {}",
            f.nnz(),
            structure::nz_f(n),
            d.nnz(),
            structure::nz_d(n)
        ),
    ));
    let brute = BruteForce::new(&basis)?;
    let err_f = max_abs(
        f.iter()
            .map(|(i, v)| v - brute.f(i[0] as usize, i[1] as usize, i[2] as usize)),
    );
    let err_d = max_abs(
        d.iter()
            .map(|(i, v)| v - brute.d(i[0] as usize, i[1] as usize, i[2] as usize)),
    );
    checks.push(Check::new(
        "structure constants vs trace formula",
        err_f < 1e-12 && err_d < 1e-12,
        format!("max error f {err_f:.3e}, d {err_d:.3e}"),
    ));

    // Cache files, when a cache directory is configured.
    if let Some(dir) = &cfg.cache.dir {
        for kind in [TensorKind::F, TensorKind::D, TensorKind::Z] {
            let path = cache::cache_path(dir, n, kind);
            if !path.exists() {
                continue;
            }
            let result = match kind {
                TensorKind::Z => cache::load::<num_complex::Complex64>(&path, n, kind).map(|_| ()),
                _ => cache::load::<f64>(&path, n, kind).map(|_| ()),
            };
            let name = format!("cache file {}", path.display());
            checks.push(match result {
                Ok(()) => Check::new(&name, true, "intact".into()),
                Err(e) => Check::new(&name, false, e.to_string()),
            });
        }
    }

    // Assembly against dense projections.
    let model = cfg.model.build()?;
    let tensors = Tensors::OnTheFly;
    let p = prepare(model, &tensors, cfg)?;
    let oracle = compile_oracle(&basis, &p.model)?;
    let c = &p.compiled;
    let eq = c.q0.max_abs_diff_dense(&oracle.q0);
    let eq1 = c.q1.max_abs_diff_dense(&oracle.q1);
    let er = c.r.max_abs_diff_dense(&oracle.r);
    let ek = max_abs(c.k.iter().zip(&oracle.k).map(|(a, b)| a - b));
    checks.push(Check::new(
        "compiled Q/R/K vs dense projection",
        eq.max(eq1).max(er).max(ek) < 1e-10,
        format!("max error Q0 {eq:.3e}, Q1 {eq1:.3e}, R {er:.3e}, K {ek:.3e}"),
    ));
    checks.push(Check::new(
        "Q0 and Q1 skew-symmetric",
        c.q0.is_exactly_skew_symmetric() && c.q1.is_exactly_skew_symmetric(),
        String::new(),
    ));

    // Propagation against dense RK4.
    let options = propagation_options(cfg);
    let (state, report) = propagate(c, p.model.drive, &p.v0, options, |_, _| {})?;
    let rho = state.to_density(&basis)?;
    let dense = oracle_propagate(
        &p.model,
        &p.model.initial.density(n),
        options.t_end,
        options.dt,
        |_, _| {},
    )?;
    let ep = (&rho - &dense).iter().map(|z| z.norm()).fold(0.0, f64::max);
    checks.push(Check::new(
        "propagation vs dense master equation",
        ep < 1e-8,
        format!("max entry difference {ep:.3e}"),
    ));
    checks.push(Check::new(
        "purity bound",
        report.max_purity_excess <= 1e-8,
        format!("max excess {:.3e}", report.max_purity_excess),
    ));
    let min_eig = positivity_check(&rho)?;
    checks.push(Check::new(
        "final state positivity",
        min_eig >= -1e-8,
        format!("min eigenvalue {min_eig:.3e}"),
    ));
    Ok(ValidateReport { checks })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub step: &'static str,
    pub seconds: f64,
    pub peak_bytes: usize,
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Sizes reported but excluded from exponent checks.
    pub ungated: Vec<usize>,
}

impl BenchReport {
    pub fn get(&self, n: usize, step: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.n == n && r.step == step)
    }

    /// Log-ratio exponents between consecutive gated sizes.
    pub fn exponents(&self, step: &str, memory: bool) -> Vec<(usize, usize, f64)> {
        let mut sizes: Vec<usize> = self
            .rows
            .iter()
            .filter(|r| r.step == step && !self.ungated.contains(&r.n))
            .map(|r| r.n)
            .collect();
        sizes.dedup();
        sizes
            .windows(2)
            .map(|w| {
                let (a, b) = (self.get(w[0], step).unwrap(), self.get(w[1], step).unwrap());
                let (x, y) = if memory {
                    (a.peak_bytes as f64, b.peak_bytes as f64)
                } else {
                    (a.seconds, b.seconds)
                };
                (w[0], w[1], (y / x).ln() / (w[1] as f64 / w[0] as f64).ln())
            })
            .collect()
    }
}

/// Integration is timed over at least `bench.steps` steps and at least
/// this long, so small sizes are not dominated by timer noise.
const MIN_TIMED_SECONDS: f64 = 0.25;

pub const BENCH_STEPS: [&str; 4] = ["initialization", "preparation", "integration", "finalization"];

/// Times one measured closure, returning its result, seconds and the heap
/// peak reached while it ran.
fn measure<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64, usize)> {
    alloc::reset_peak();
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64(), alloc::peak_bytes()))
}

/// Dimer benchmark over the configured sizes, always assembling on the fly.
///
/// Integration time is per drive period, extrapolated from a run of timed
/// RK4 steps (see [`MIN_TIMED_SECONDS`]).
pub fn cmd_bench(cfg: &RunConfig) -> Result<BenchReport> {
    let base = match &cfg.model {
        crate::config::ModelConfig::Dimer { params, .. } => *params,
        _ => DimerParams::reference(2),
    };
    let mut sizes = cfg.bench.sizes.clone();
    let mut ungated = Vec::new();
    if cfg.bench.profile == BenchProfile::Extended && !sizes.contains(&1000) {
        sizes.push(1000);
        ungated.push(1000);
    }
    let steps_per_period = cfg.integration.steps_per_period;
    let mut rows = Vec::new();
    for &n in &sizes {
        let mut best: Option<[(f64, usize); 4]> = None;
        for _ in 0..cfg.bench.repeats {
            let sample = bench_once(&base, n, steps_per_period, cfg.bench.steps, cfg)?;
            best = Some(match best {
                None => sample,
                Some(b) => std::array::from_fn(|i| (b[i].0.min(sample[i].0), b[i].1.min(sample[i].1))),
            });
        }
        for (step, (seconds, peak)) in BENCH_STEPS.iter().zip(best.unwrap()) {
            rows.push(BenchRow {
                n,
                step,
                seconds,
                peak_bytes: peak,
            });
        }
        log::info!("bench N = {n} done");
    }
    let report = BenchReport { rows, ungated };

    let mut w = create(&cfg.output.bench)?;
    let io = |e| Error::io(&cfg.output.bench, e);
    writeln!(w, "N,step,seconds,peak_bytes").map_err(io)?;
    for r in &report.rows {
        writeln!(w, "{},{},{},{}", r.n, r.step, fmt_f64(r.seconds), r.peak_bytes).map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(report)
}

fn bench_once(
    base: &DimerParams,
    n: usize,
    steps_per_period: usize,
    timed_steps: usize,
    cfg: &RunConfig,
) -> Result<[(f64, usize); 4]> {
    let (model, t_init, m_init) = measure(|| {
        let params = DimerParams { n, ..*base };
        ModelSpec::dimer(&params, InitialState::Fock(0))
    })?;
    let (prepared, t_prep, m_prep) = measure(|| prepare(model, &Tensors::OnTheFly, cfg))?;
    let dt = prepared.model.drive.period / steps_per_period as f64;
    let (state, t_int, m_int) = measure(|| {
        let mut v = prepared.v0.v.clone();
        let mut stepper = Propagator::new(&prepared.compiled, prepared.model.drive);
        let start = Instant::now();
        let mut steps = 0;
        while steps < timed_steps || start.elapsed().as_secs_f64() < MIN_TIMED_SECONDS {
            stepper.step(&mut v, steps as f64 * dt, dt);
            steps += 1;
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                time: steps as f64 * dt,
            });
        }
        Ok((v, steps))
    })?;
    let (state, steps) = state;
    let per_period = t_int / steps as f64 * steps_per_period as f64;
    let (_, t_fin, m_fin) = measure(|| {
        let rho = prepared.basis.reconstruct_density(&state)?;
        let probs = prepared.basis.diagonal_from_coherence(&state);
        let mut out = String::with_capacity(n * n * 48);
        for i in 0..n {
            for j in 0..n {
                let z = rho[(i, j)];
                writeln!(out, "{i},{j},{},{}", fmt_f64(z.re), fmt_f64(z.im)).unwrap();
            }
        }
        for p in probs {
            out.push_str(&fmt_f64(p));
        }
        Ok(out.len())
    })?;
    Ok([(t_init, m_init), (t_prep, m_prep), (per_period, m_int), (t_fin, m_fin)])
}

/// Writes (or reuses) cache files for `N`.
pub fn cmd_cache(n: usize, kinds: &[TensorKind], dir: &Path) -> Result<CacheReport> {
    cache::ensure(dir, n, kinds)
}
