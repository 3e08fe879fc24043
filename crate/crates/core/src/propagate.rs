//! Fixed-step RK4 integration of the compiled coherence-vector equation.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basis::{diag_weight, GeneratorBasis};
use crate::compile::CompiledBloch;
use crate::error::{Error, Result};
use crate::sparse::SparseRealMatrix;

/// Relative slack when checking that step sizes tile an interval.
const ALIGN_TOL: f64 = 1e-9;

/// Real coefficients `v` of `rho = I/N + sum_s v_s F_s` at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherenceVector {
    pub t: f64,
    pub v: Vec<f64>,
}

impl CoherenceVector {
    /// The maximally mixed state `I/N`.
    pub fn maximally_mixed(basis: &GeneratorBasis) -> Self {
        Self {
            t: 0.0,
            v: vec![0.0; basis.m()],
        }
    }

    /// `|k><k|`, touching only the diagonal generators.
    pub fn fock(basis: &GeneratorBasis, k: usize) -> Result<Self> {
        if k >= basis.n() {
            return Err(Error::IndexOutOfRange {
                what: "Fock state",
                index: k,
                bound: basis.n(),
            });
        }
        let mut v = vec![0.0; basis.m()];
        for l in k.max(1)..basis.n() {
            v[basis.diag_index(l)] = diag_weight(l, k);
        }
        Ok(Self { t: 0.0, v })
    }

    /// `v_j = Tr(F_j rho)` for a Hermitian, unit-trace `rho`.
    pub fn from_density(basis: &GeneratorBasis, rho: &DMatrix<Complex64>) -> Result<Self> {
        let n = basis.n();
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rho.nrows(),
            });
        }
        let trace = rho.trace();
        if (trace - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::NotUnitTrace { trace });
        }
        for r in 0..n {
            for c in r..n {
                let dev = (rho[(r, c)] - rho[(c, r)].conj()).norm();
                if dev > 1e-10 {
                    return Err(Error::NotHermitian {
                        row: r,
                        col: c,
                        deviation: dev,
                    });
                }
            }
        }
        let v = basis.project_dense(rho)?.into_iter().map(|z| z.re).collect();
        Ok(Self { t: 0.0, v })
    }

    pub fn to_density(&self, basis: &GeneratorBasis) -> Result<DMatrix<Complex64>> {
        basis.reconstruct_density(&self.v)
    }

    /// `Tr rho^2 = 1/N + |v|^2`.
    pub fn purity(&self, n: usize) -> f64 {
        1.0 / n as f64 + self.v.iter().map(|x| x * x).sum::<f64>()
    }
}

/// Diagonal of `rho`, `O(N)` from the `D(l)` components.
pub fn observables(basis: &GeneratorBasis, v: &[f64]) -> Result<Vec<f64>> {
    basis.check_len(v.len())?;
    Ok(basis.diagonal_from_coherence(v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DriveKind {
    /// `+1` on `[0, T/2)`, `-1` on `[T/2, T)`.
    PiecewiseConstant,
    /// `sin(2 pi t / T)`.
    Sinusoidal,
}

impl DriveKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "piecewise" | "piecewise_constant" => Some(Self::PiecewiseConstant),
            "sinusoidal" | "sin" => Some(Self::Sinusoidal),
            _ => None,
        }
    }
}

/// Periodic drive `theta(t)` multiplying `Q1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveFunction {
    pub kind: DriveKind,
    pub period: f64,
}

impl DriveFunction {
    pub fn new(kind: DriveKind, period: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidParameter {
                name: "period",
                reason: format!("must be positive, got {period}"),
            });
        }
        Ok(Self { kind, period })
    }

    pub fn theta(&self, t: f64) -> f64 {
        match self.kind {
            DriveKind::PiecewiseConstant => {
                if t.rem_euclid(self.period) < 0.5 * self.period {
                    1.0
                } else {
                    -1.0
                }
            }
            DriveKind::Sinusoidal => (2.0 * PI * t / self.period).sin(),
        }
    }

    /// Drive values at the RK4 stage times `t`, `t + dt/2` and `t + dt`.
    ///
    /// A piecewise drive is constant across an aligned step, so the
    /// mid-step value is used for every stage. Sampling the endpoint
    /// directly would read the next half-period at a switch.
    pub fn stage_thetas(&self, t: f64, dt: f64) -> [f64; 3] {
        match self.kind {
            DriveKind::PiecewiseConstant => [self.theta(t + 0.5 * dt); 3],
            DriveKind::Sinusoidal => [self.theta(t), self.theta(t + 0.5 * dt), self.theta(t + dt)],
        }
    }

    /// A piecewise drive requires `dt` to divide `T/2`.
    pub fn check_step(&self, dt: f64) -> Result<()> {
        if self.kind == DriveKind::PiecewiseConstant {
            let ratio = 0.5 * self.period / dt;
            if (ratio - ratio.round()).abs() > ALIGN_TOL * ratio.max(1.0) || ratio.round() < 1.0 {
                return Err(Error::StepIncompatible(format!(
                    "dt = {dt} does not divide the half period {}",
                    0.5 * self.period
                )));
            }
        }
        Ok(())
    }
}

/// Number of `dt` steps spanning `t_end`.
pub fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("must be positive, got {dt}"),
        });
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "t_end",
            reason: format!("must be non-negative, got {t_end}"),
        });
    }
    let ratio = t_end / dt;
    if (ratio - ratio.round()).abs() > ALIGN_TOL * ratio.max(1.0) {
        return Err(Error::StepIncompatible(format!(
            "t_end = {t_end} is not a multiple of dt = {dt}"
        )));
    }
    Ok(ratio.round() as usize)
}

/// RK4 stepper holding `A0 = Q0 + R` and the stage buffers.
pub struct Propagator<'a> {
    a0: SparseRealMatrix,
    q1: &'a SparseRealMatrix,
    k: &'a [f64],
    drive: DriveFunction,
    stages: [Vec<f64>; 4],
    scratch: Vec<f64>,
}

impl<'a> Propagator<'a> {
    pub fn new(sys: &'a CompiledBloch, drive: DriveFunction) -> Self {
        let m = sys.dim();
        Self {
            a0: sys.q0.add(&sys.r),
            q1: &sys.q1,
            k: &sys.k,
            drive,
            stages: std::array::from_fn(|_| vec![0.0; m]),
            scratch: vec![0.0; m],
        }
    }

    fn rhs(a0: &SparseRealMatrix, q1: &SparseRealMatrix, k: &[f64], theta: f64, v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(k);
        a0.mul_vec_add(1.0, v, out);
        if theta != 0.0 {
            q1.mul_vec_add(theta, v, out);
        }
    }

    /// Advances `v` from `t` to `t + dt`.
    pub fn step(&mut self, v: &mut [f64], t: f64, dt: f64) {
        let [th0, th_mid, th1] = self.drive.stage_thetas(t, dt);
        let [k1, k2, k3, k4] = &mut self.stages;
        let x = &mut self.scratch;
        Self::rhs(&self.a0, self.q1, self.k, th0, v, k1);
        for i in 0..v.len() {
            x[i] = v[i] + 0.5 * dt * k1[i];
        }
        Self::rhs(&self.a0, self.q1, self.k, th_mid, x, k2);
        for i in 0..v.len() {
            x[i] = v[i] + 0.5 * dt * k2[i];
        }
        Self::rhs(&self.a0, self.q1, self.k, th_mid, x, k3);
        for i in 0..v.len() {
            x[i] = v[i] + dt * k3[i];
        }
        Self::rhs(&self.a0, self.q1, self.k, th1, x, k4);
        let w = dt / 6.0;
        for i in 0..v.len() {
            v[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

/// One RK4 step from `state.t` to `state.t + dt`.
pub fn rk4_step(
    sys: &CompiledBloch,
    drive: DriveFunction,
    state: &CoherenceVector,
    dt: f64,
) -> Result<CoherenceVector> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("must be positive, got {dt}"),
        });
    }
    let mut v = state.v.clone();
    Propagator::new(sys, drive).step(&mut v, state.t, dt);
    let t = state.t + dt;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { time: t });
    }
    Ok(CoherenceVector { t, v })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagationOptions {
    pub dt: f64,
    /// Integration length, measured from the initial state's time.
    pub t_end: f64,
    /// Observer fires every `stride` steps (0: only at the end).
    pub stride: usize,
    /// Allowed excess of `1/N + |v|^2` over 1 before warning.
    pub purity_tolerance: f64,
}

impl PropagationOptions {
    pub fn new(dt: f64, t_end: f64, stride: usize) -> Self {
        Self {
            dt,
            t_end,
            stride,
            purity_tolerance: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PropagationReport {
    pub steps: usize,
    pub observations: usize,
    /// Largest `1/N + |v|^2 - 1` seen (negative when always strictly mixed).
    pub max_purity_excess: f64,
    pub purity_violations: usize,
    pub elapsed: Duration,
}

/// Integrates from `v0` over `options.t_end`. The observer receives
/// `(t, v)` at step 0, every `stride` steps, and at the final step.
pub fn propagate(
    sys: &CompiledBloch,
    drive: DriveFunction,
    v0: &CoherenceVector,
    options: PropagationOptions,
    mut observer: impl FnMut(f64, &[f64]),
) -> Result<(CoherenceVector, PropagationReport)> {
    let start = Instant::now();
    let steps = step_count(options.t_end, options.dt)?;
    if sys.dim() != v0.v.len() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: v0.v.len(),
        });
    }
    // Without a drive coupling the switch times are irrelevant.
    if sys.q1.nnz() > 0 {
        drive.check_step(options.dt)?;
    }
    let n = sys.n;
    let purity_excess = |v: &[f64]| 1.0 / n as f64 + v.iter().map(|x| x * x).sum::<f64>() - 1.0;

    let mut report = PropagationReport {
        max_purity_excess: purity_excess(&v0.v),
        ..Default::default()
    };
    let mut v = v0.v.clone();
    observer(v0.t, &v);
    report.observations += 1;

    let mut stepper = Propagator::new(sys, drive);
    for step in 1..=steps {
        let t_prev = v0.t + (step - 1) as f64 * options.dt;
        stepper.step(&mut v, t_prev, options.dt);
        let t = v0.t + step as f64 * options.dt;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { time: t });
        }
        let excess = purity_excess(&v);
        report.max_purity_excess = report.max_purity_excess.max(excess);
        if excess > options.purity_tolerance {
            if report.purity_violations == 0 {
                log::warn!("purity bound exceeded by {excess:e} at t = {t}; the step size is likely too large");
            }
            report.purity_violations += 1;
        }
        if step == steps || (options.stride > 0 && step % options.stride == 0) {
            observer(t, &v);
            report.observations += 1;
        }
    }
    report.steps = steps;
    report.elapsed = start.elapsed();
    let t = v0.t + steps as f64 * options.dt;
    Ok((CoherenceVector { t, v }, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn piecewise_drive_values() {
        let d = DriveFunction::new(DriveKind::PiecewiseConstant, 2.0).unwrap();
        assert_eq!(d.theta(0.0), 1.0);
        assert_eq!(d.theta(0.999), 1.0);
        assert_eq!(d.theta(1.0), -1.0);
        assert_eq!(d.theta(2.5), 1.0);
        assert_eq!(d.stage_thetas(0.9, 0.1), [1.0; 3]);
        assert_eq!(d.stage_thetas(1.0, 0.1), [-1.0; 3]);
    }

    #[test]
    fn sinusoidal_drive_is_periodic() {
        let d = DriveFunction::new(DriveKind::Sinusoidal, 3.0).unwrap();
        assert_abs_diff_eq!(d.theta(0.75), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.theta(0.4), d.theta(3.4), epsilon = 1e-14);
    }

    #[test]
    fn step_alignment() {
        let d = DriveFunction::new(DriveKind::PiecewiseConstant, 2.0 * PI).unwrap();
        assert!(d.check_step(2.0 * PI / 1000.0).is_ok());
        assert!(matches!(d.check_step(0.3), Err(Error::StepIncompatible(_))));
        assert_eq!(step_count(1.0, 0.001).unwrap(), 1000);
        assert_eq!(step_count(0.0, 0.1).unwrap(), 0);
        assert!(step_count(1.0, 0.3).is_err());
    }

    #[test]
    fn fock_state_matches_projection() {
        let b = GeneratorBasis::new(5).unwrap();
        for k in 0..5 {
            let direct = CoherenceVector::fock(&b, k).unwrap();
            let mut rho = DMatrix::<Complex64>::zeros(5, 5);
            rho[(k, k)] = Complex64::new(1.0, 0.0);
            let projected = CoherenceVector::from_density(&b, &rho).unwrap();
            for (a, p) in direct.v.iter().zip(&projected.v) {
                assert_abs_diff_eq!(a, p, epsilon = 1e-15);
            }
            assert_abs_diff_eq!(direct.purity(5), 1.0, epsilon = 1e-14);
            let p = observables(&b, &direct.v).unwrap();
            assert_abs_diff_eq!(p[k], 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn density_input_is_validated() {
        let b = GeneratorBasis::new(2).unwrap();
        let rho = DMatrix::<Complex64>::identity(2, 2);
        assert!(matches!(
            CoherenceVector::from_density(&b, &rho),
            Err(Error::NotUnitTrace { .. })
        ));
        let mut rho = DMatrix::<Complex64>::identity(2, 2) * Complex64::new(0.5, 0.0);
        rho[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(matches!(
            CoherenceVector::from_density(&b, &rho),
            Err(Error::NotHermitian { .. })
        ));
    }
}
