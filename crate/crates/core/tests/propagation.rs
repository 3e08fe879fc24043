use std::f64::consts::PI;

use num_complex::Complex64;
use sunbloch::basis::GeneratorBasis;
use sunbloch::compile::{compile, CompileOptions, CompiledBloch, TensorSource};
use sunbloch::models::{ChannelSpec, DimerParams, InitialState, ModelSpec};
use sunbloch::oracle::{oracle_propagate, positivity_check};
use sunbloch::propagate::{
    observables, propagate, rk4_step, CoherenceVector, DriveFunction, DriveKind, PropagationOptions,
};
use sunbloch::sparse::SparseComplexMatrix;

fn compiled(model: &ModelSpec) -> (GeneratorBasis, CompiledBloch) {
    let basis = GeneratorBasis::new(model.n).unwrap();
    let (ham, channels) = model.decompose(&basis).unwrap();
    let c = compile(
        &basis,
        &ham,
        &channels,
        TensorSource::OnTheFly,
        CompileOptions::default(),
    )
    .unwrap();
    (basis, c)
}

fn amplitude_damping() -> ModelSpec {
    let l = SparseComplexMatrix::from_triplets(2, 2, vec![(0, 1, Complex64::new(1.0, 0.0))]).unwrap();
    ModelSpec {
        n: 2,
        h0: SparseComplexMatrix::zeros(2, 2),
        h1: SparseComplexMatrix::zeros(2, 2),
        drive: DriveFunction::new(DriveKind::PiecewiseConstant, 2.0 * PI).unwrap(),
        channels: vec![ChannelSpec { l, rate: 1.0 }],
        initial: InitialState::Fock(1),
    }
}

#[test]
fn amplitude_damping_population() {
    let model = amplitude_damping();
    let (basis, sys) = compiled(&model);
    let v0 = model.initial.coherence(&basis).unwrap();
    let (v, report) = propagate(&sys, model.drive, &v0, PropagationOptions::new(1e-3, 1.0, 0), |_, _| {}).unwrap();
    let p = observables(&basis, &v.v).unwrap();
    assert!((p[1] - (-1.0f64).exp()).abs() < 1e-8, "{}", p[1]);
    assert_eq!(report.steps, 1000);
    assert_eq!(report.observations, 2);

    let rho = oracle_propagate(&model, &model.initial.density(2), 1.0, 1e-3, |_, _| {}).unwrap();
    assert!((rho[(1, 1)].re - p[1]).abs() < 1e-12);
}

#[test]
fn fixed_point_residual_decreases() {
    let model = amplitude_damping();
    let (basis, sys) = compiled(&model);
    let a = sys.q0.add(&sys.r);
    let residual = |v: &[f64]| {
        let mut y = sys.k.clone();
        a.mul_vec_add(1.0, v, &mut y);
        y.iter().map(|x| x * x).sum::<f64>().sqrt()
    };
    let mut v = model.initial.coherence(&basis).unwrap();
    let mut last = residual(&v.v);
    for _ in 0..10 {
        let (next, _) = propagate(&sys, model.drive, &v, PropagationOptions::new(1e-2, 1.0, 0), |_, _| {}).unwrap();
        let r = residual(&next.v);
        assert!(r < last);
        last = r;
        v = next;
    }
}

#[test]
fn zero_system_stays_zero() {
    let model = ModelSpec {
        n: 3,
        h0: SparseComplexMatrix::zeros(3, 3),
        h1: SparseComplexMatrix::zeros(3, 3),
        drive: DriveFunction::new(DriveKind::Sinusoidal, 1.0).unwrap(),
        channels: vec![],
        initial: InitialState::MaximallyMixed,
    };
    let (basis, sys) = compiled(&model);
    let v0 = CoherenceVector::maximally_mixed(&basis);
    let v = rk4_step(&sys, model.drive, &v0, 0.1).unwrap();
    assert!(v.v.iter().all(|&x| x == 0.0));
    let (same, report) = propagate(&sys, model.drive, &v0, PropagationOptions::new(0.1, 0.0, 1), |_, _| {}).unwrap();
    assert_eq!(same.v, v0.v);
    assert_eq!(report.observations, 1);
}

#[test]
fn dimer_matches_dense_propagation() {
    let p = DimerParams::reference(6);
    let model = ModelSpec::dimer(&p, InitialState::Fock(0)).unwrap();
    let (basis, sys) = compiled(&model);
    let dt = p.period / 2000.0;
    let t_end = 2.0 * p.period;
    let v0 = model.initial.coherence(&basis).unwrap();
    let mut traces = Vec::new();
    let (v, report) = propagate(
        &sys,
        model.drive,
        &v0,
        PropagationOptions::new(dt, t_end, 500),
        |_, v| {
            traces.push(observables(&basis, v).unwrap().iter().sum::<f64>());
        },
    )
    .unwrap();
    assert_eq!(report.purity_violations, 0);
    assert!(traces.iter().all(|t| (t - 1.0).abs() < 1e-13));
    let rho_bloch = v.to_density(&basis).unwrap();
    let rho_dense = oracle_propagate(&model, &model.initial.density(6), t_end, dt, |_, _| {}).unwrap();
    let diff = (&rho_bloch - &rho_dense).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(diff < 1e-8, "{diff:e}");
    assert!(positivity_check(&rho_bloch).unwrap() > -1e-8);
}

#[test]
fn misaligned_step_is_rejected() {
    let model = ModelSpec::dimer(&DimerParams::reference(3), InitialState::Fock(0)).unwrap();
    let (basis, sys) = compiled(&model);
    let v0 = model.initial.coherence(&basis).unwrap();
    let err = propagate(&sys, model.drive, &v0, PropagationOptions::new(0.3, 3.0, 0), |_, _| {}).unwrap_err();
    assert!(matches!(err, sunbloch::error::Error::StepIncompatible(_)));
}

#[test]
fn closed_system_conserves_norm() {
    let mut p = DimerParams::reference(5);
    p.gamma = 0.0;
    let model = ModelSpec::dimer(&p, InitialState::Fock(0)).unwrap();
    let (basis, sys) = compiled(&model);
    let v0 = model.initial.coherence(&basis).unwrap();
    let drift = |steps: f64| {
        let opts = PropagationOptions::new(p.period / steps, p.period, 0);
        let (v, _) = propagate(&sys, model.drive, &v0, opts, |_, _| {}).unwrap();
        (v.purity(5) - 1.0).abs()
    };
    let coarse = drift(1000.0);
    let fine = drift(2000.0);
    assert!(coarse < 1e-6, "{coarse:e}");
    assert!(fine < coarse / 16.0, "{coarse:e} -> {fine:e}");
}

#[test]
fn rk4_global_error_is_fourth_order() {
    let mut p = DimerParams::reference(4);
    p.gamma = 0.5;
    let model = ModelSpec::dimer(&p, InitialState::Fock(0)).unwrap();
    let (_, sys) = compiled(&model);
    let v0 = CoherenceVector::fock(&GeneratorBasis::new(4).unwrap(), 0).unwrap();
    let run = |steps: f64| {
        let opts = PropagationOptions::new(p.period / steps, p.period, 0);
        propagate(&sys, model.drive, &v0, opts, |_, _| {}).unwrap().0.v
    };
    let reference = run(12800.0);
    let err = |v: Vec<f64>| v.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let coarse = err(run(200.0));
    let fine = err(run(400.0));
    let ratio = coarse / fine;
    assert!((12.0..=20.0).contains(&ratio), "{coarse:e} / {fine:e} = {ratio}");
}
