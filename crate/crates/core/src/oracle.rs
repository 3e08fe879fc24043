//! Dense reference implementations used to validate the sparse pipeline.
//! Deliberately naive and size-guarded.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basis::GeneratorBasis;
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::propagate::{step_count, DriveFunction};

/// Largest N accepted by the dense Liouvillian paths.
pub const DENSE_LIMIT: usize = 32;
/// Largest N accepted by the dense eigensolver.
pub const EIGEN_LIMIT: usize = 256;

type Dense = DMatrix<Complex64>;

fn guard(what: &'static str, n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::SizeGuard { what, n, limit });
    }
    Ok(())
}

/// Dense form of a model's master equation.
#[derive(Clone, Debug)]
pub struct DenseLiouvillian {
    pub n: usize,
    pub h0: Dense,
    pub h1: Dense,
    pub drive: DriveFunction,
    /// `(L, L^+, L^+ L, rate)` per channel.
    channels: Vec<(Dense, Dense, Dense, f64)>,
}

impl DenseLiouvillian {
    pub fn from_model(model: &ModelSpec) -> Result<Self> {
        guard("dense Liouvillian", model.n, DENSE_LIMIT)?;
        let channels = model
            .channels
            .iter()
            .map(|c| {
                let l = c.l.to_dense();
                let ld = l.adjoint();
                let ldl = &ld * &l;
                (l, ld, ldl, c.rate)
            })
            .collect();
        Ok(Self {
            n: model.n,
            h0: model.h0.to_dense(),
            h1: model.h1.to_dense(),
            drive: model.drive,
            channels,
        })
    }

    /// `-i [H0 + theta H1, rho]`.
    pub fn hamiltonian_part(&self, theta: f64, rho: &Dense) -> Dense {
        let h = &self.h0 + &self.h1 * Complex64::new(theta, 0.0);
        let comm = &h * rho - rho * &h;
        comm * Complex64::new(0.0, -1.0)
    }

    /// `sum_p rate_p (L rho L^+ - 1/2 {L^+ L, rho})`.
    pub fn dissipative_part(&self, rho: &Dense) -> Dense {
        let mut out = Dense::zeros(self.n, self.n);
        for (l, ld, ldl, rate) in &self.channels {
            let jump = l * rho * ld;
            let anti = ldl * rho + rho * ldl;
            out += (jump - anti * Complex64::new(0.5, 0.0)) * Complex64::new(*rate, 0.0);
        }
        out
    }

    pub fn apply(&self, theta: f64, rho: &Dense) -> Dense {
        self.hamiltonian_part(theta, rho) + self.dissipative_part(rho)
    }

    pub fn apply_at(&self, t: f64, rho: &Dense) -> Dense {
        self.apply(self.drive.theta(t), rho)
    }
}

/// `L(t) rho` evaluated densely.
pub fn apply_liouvillian(model: &ModelSpec, t: f64, rho: &Dense) -> Result<Dense> {
    Ok(DenseLiouvillian::from_model(model)?.apply_at(t, rho))
}

/// RK4 on the dense master equation with the stage convention of the
/// coherence-vector integrator. The observer sees `(t, rho)` after each step.
pub fn oracle_propagate(
    model: &ModelSpec,
    rho0: &Dense,
    t_end: f64,
    dt: f64,
    mut observer: impl FnMut(f64, &Dense),
) -> Result<Dense> {
    let liou = DenseLiouvillian::from_model(model)?;
    let steps = step_count(t_end, dt)?;
    if model.h1.nnz() > 0 {
        model.drive.check_step(dt)?;
    }
    let mut rho = rho0.clone();
    let half = Complex64::new(0.5 * dt, 0.0);
    let full = Complex64::new(dt, 0.0);
    let sixth = Complex64::new(dt / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);
    for step in 0..steps {
        let t = step as f64 * dt;
        let [th0, th_mid, th1] = liou.drive.stage_thetas(t, dt);
        let k1 = liou.apply(th0, &rho);
        let k2 = liou.apply(th_mid, &(&rho + &k1 * half));
        let k3 = liou.apply(th_mid, &(&rho + &k2 * half));
        let k4 = liou.apply(th1, &(&rho + &k3 * full));
        rho += (k1 + k2 * two + k3 * two + k4) * sixth;
        let t_next = (step + 1) as f64 * dt;
        if rho.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite { time: t_next });
        }
        observer(t_next, &rho);
    }
    Ok(rho)
}

/// Smallest eigenvalue of the Hermitian part of `rho`.
pub fn positivity_check(rho: &Dense) -> Result<f64> {
    guard("eigen decomposition", rho.nrows(), EIGEN_LIMIT)?;
    let herm = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Dense projections of the model onto the generator basis.
#[derive(Clone, Debug)]
pub struct OracleProjection {
    pub q0: DMatrix<f64>,
    pub q1: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub k: Vec<f64>,
    /// Largest imaginary part seen in any projection; zero up to rounding.
    pub max_imag: f64,
}

/// `(Q+R)_sm = Tr(F_s L(F_m))` and `K_s = Tr(F_s L_D(I/N))`, split into
/// the static, drive-coupled and dissipative parts.
pub fn compile_oracle(basis: &GeneratorBasis, model: &ModelSpec) -> Result<OracleProjection> {
    guard("dense compile oracle", basis.n(), DENSE_LIMIT)?;
    if basis.n() != model.n {
        return Err(Error::DimensionMismatch {
            expected: basis.n(),
            found: model.n,
        });
    }
    let liou = DenseLiouvillian::from_model(model)?;
    let m = basis.m();
    let n = basis.n();
    let mut q0 = DMatrix::zeros(m, m);
    let mut q1 = DMatrix::zeros(m, m);
    let mut r = DMatrix::zeros(m, m);
    let mut max_imag: f64 = 0.0;
    let static_only = DenseLiouvillian {
        h1: Dense::zeros(n, n),
        channels: Vec::new(),
        ..liou.clone()
    };
    let drive_only = DenseLiouvillian {
        h0: Dense::zeros(n, n),
        channels: Vec::new(),
        ..liou.clone()
    };
    let mut project_into = |out: &mut DMatrix<f64>, col: usize, x: &Dense| -> Result<()> {
        for (s, z) in basis.project_dense(x)?.into_iter().enumerate() {
            out[(s, col)] = z.re;
            max_imag = max_imag.max(z.im.abs());
        }
        Ok(())
    };
    for mi in 0..m {
        let f = basis.generator(mi)?.to_dense();
        project_into(&mut q0, mi, &static_only.hamiltonian_part(0.0, &f))?;
        project_into(&mut q1, mi, &drive_only.hamiltonian_part(1.0, &f))?;
        project_into(&mut r, mi, &liou.dissipative_part(&f))?;
    }
    let mixed = Dense::identity(n, n) * Complex64::new(1.0 / n as f64, 0.0);
    let kc = basis.project_dense(&liou.dissipative_part(&mixed))?;
    let k = kc
        .iter()
        .map(|z| {
            max_imag = max_imag.max(z.im.abs());
            z.re
        })
        .collect();
    Ok(OracleProjection { q0, q1, r, k, max_imag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ChannelSpec, InitialState};
    use crate::propagate::DriveKind;
    use crate::sparse::SparseComplexMatrix;

    fn amplitude_damping() -> ModelSpec {
        let l = SparseComplexMatrix::from_triplets(2, 2, vec![(0, 1, Complex64::new(1.0, 0.0))]).unwrap();
        ModelSpec {
            n: 2,
            h0: SparseComplexMatrix::zeros(2, 2),
            h1: SparseComplexMatrix::zeros(2, 2),
            drive: DriveFunction::new(DriveKind::Sinusoidal, 1.0).unwrap(),
            channels: vec![ChannelSpec { l, rate: 1.0 }],
            initial: InitialState::Fock(1),
        }
    }

    #[test]
    fn amplitude_damping_on_excited_state() {
        let model = amplitude_damping();
        let rho = InitialState::Fock(1).density(2);
        let out = apply_liouvillian(&model, 0.0, &rho).unwrap();
        assert_eq!(out[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(out[(1, 1)], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn size_guards() {
        let big = DMatrix::<Complex64>::identity(300, 300);
        assert!(matches!(positivity_check(&big), Err(Error::SizeGuard { .. })));
        let b = GeneratorBasis::new(40).unwrap();
        let mut model = amplitude_damping();
        model.n = 40;
        assert!(matches!(compile_oracle(&b, &model), Err(Error::SizeGuard { .. })));
    }

    #[test]
    fn positivity_of_simple_states() {
        let mixed = DMatrix::<Complex64>::identity(4, 4) * Complex64::new(0.25, 0.0);
        assert!((positivity_check(&mixed).unwrap() - 0.25).abs() < 1e-14);
        let pure = InitialState::Fock(2).density(4);
        assert!(positivity_check(&pure).unwrap().abs() < 1e-12);
    }
}
