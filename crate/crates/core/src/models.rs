//! Model systems: the driven dissipative bosonic dimer and file-defined
//! generic models.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basis::GeneratorBasis;
use crate::compile::{DissipatorChannel, HamiltonianDecomposition};
use crate::error::{ConfigError, Error, Result};
use crate::propagate::{CoherenceVector, DriveFunction, DriveKind};
use crate::sparse::{Scalar, SparseComplexMatrix};

/// Where the dimer's dissipation strength lives.
///
/// The dissipator is quadratic in `L`, so `InOperator` and `SquaredRate`
/// describe the same dynamics; `LinearRate` is the weaker alternative
/// reading.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GammaConvention {
    /// `L` carries `gamma/(N-1)`, channel rate 1.
    #[default]
    InOperator,
    /// `L` carries `1/(N-1)`, channel rate `gamma^2`.
    SquaredRate,
    /// `L` carries `1/(N-1)`, channel rate `gamma`.
    LinearRate,
}

impl GammaConvention {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "in_operator" => Some(Self::InOperator),
            "squared_rate" => Some(Self::SquaredRate),
            "linear_rate" => Some(Self::LinearRate),
            _ => None,
        }
    }
}

/// Parameters of the two-site Bose-Hubbard dimer with `N - 1` bosons.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DimerParams {
    pub n: usize,
    pub j: f64,
    pub u: f64,
    pub e: f64,
    pub a: f64,
    pub period: f64,
    pub gamma: f64,
    pub drive: DriveKind,
    pub convention: GammaConvention,
}

impl DimerParams {
    /// `J = -1, U = 1, E = 1, A = 1.5, T = 2 pi, gamma = 0.1`, piecewise drive.
    pub fn reference(n: usize) -> Self {
        Self {
            n,
            j: -1.0,
            u: 1.0,
            e: 1.0,
            a: 1.5,
            period: 2.0 * PI,
            gamma: 0.1,
            drive: DriveKind::PiecewiseConstant,
            convention: GammaConvention::InOperator,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: format!("dimer needs N >= 2, got {}", self.n),
            });
        }
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::InvalidParameter {
                name: "period",
                reason: format!("must be positive, got {}", self.period),
            });
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("must be non-negative, got {}", self.gamma),
            });
        }
        for (name, v) in [("j", self.j), ("u", self.u), ("e", self.e), ("a", self.a)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        Ok(())
    }

    pub fn drive_function(&self) -> Result<DriveFunction> {
        DriveFunction::new(self.drive, self.period)
    }
}

/// `sqrt((k+1)(N-1-k))`, the matrix element of `b1^+ b2` from `|k>` to `|k+1>`.
fn hop(n: usize, k: usize) -> f64 {
    (((k + 1) * (n - 1 - k)) as f64).sqrt()
}

/// Static and drive-coupled Hamiltonian parts in the Fock basis `|n1>`,
/// `n2 = N - 1 - n1`.
pub fn dimer_hamiltonian_parts(p: &DimerParams) -> Result<(SparseComplexMatrix, SparseComplexMatrix)> {
    p.validate()?;
    let n = p.n;
    let scale = 2.0 * p.u / (n - 1) as f64;
    let mut h0 = Vec::with_capacity(3 * n);
    let mut h1 = Vec::with_capacity(n);
    for k in 0..n {
        let n1 = k as f64;
        let n2 = (n - 1 - k) as f64;
        let diag = scale * (n1 * (n1 - 1.0) + n2 * (n2 - 1.0)) + p.e * (n2 - n1);
        h0.push((k, k, Complex64::new(diag, 0.0)));
        h1.push((k, k, Complex64::new(p.a * (n2 - n1), 0.0)));
        if k + 1 < n {
            let t = Complex64::new(p.j * hop(n, k), 0.0);
            h0.push((k + 1, k, t));
            h0.push((k, k + 1, t));
        }
    }
    Ok((
        SparseComplexMatrix::from_triplets(n, n, h0)?,
        SparseComplexMatrix::from_triplets(n, n, h1)?,
    ))
}

/// The dimer's jump operator `pref (n1 - n2 - b1^+ b2 + b2^+ b1)` and its
/// channel rate under the chosen convention.
pub fn dimer_dissipator(p: &DimerParams) -> Result<ChannelSpec> {
    p.validate()?;
    let n = p.n;
    let inv = 1.0 / (n - 1) as f64;
    let (pref, rate) = match p.convention {
        GammaConvention::InOperator => (p.gamma * inv, 1.0),
        GammaConvention::SquaredRate => (inv, p.gamma * p.gamma),
        GammaConvention::LinearRate => (inv, p.gamma),
    };
    let mut t = Vec::with_capacity(3 * n);
    for k in 0..n {
        let n1 = k as f64;
        let n2 = (n - 1 - k) as f64;
        t.push((k, k, Complex64::new(pref * (n1 - n2), 0.0)));
        if k + 1 < n {
            let h = pref * hop(n, k);
            t.push((k + 1, k, Complex64::new(-h, 0.0)));
            t.push((k, k + 1, Complex64::new(h, 0.0)));
        }
    }
    Ok(ChannelSpec {
        l: SparseComplexMatrix::from_triplets(n, n, t)?,
        rate,
    })
}

/// A jump operator and its rate, before expansion.
#[derive(Clone, Debug)]
pub struct ChannelSpec {
    pub l: SparseComplexMatrix,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    Fock(usize),
    MaximallyMixed,
    Density(DMatrix<Complex64>),
}

impl InitialState {
    pub fn coherence(&self, basis: &GeneratorBasis) -> Result<CoherenceVector> {
        match self {
            InitialState::Fock(k) => CoherenceVector::fock(basis, *k),
            InitialState::MaximallyMixed => Ok(CoherenceVector::maximally_mixed(basis)),
            InitialState::Density(rho) => CoherenceVector::from_density(basis, rho),
        }
    }

    pub fn density(&self, n: usize) -> DMatrix<Complex64> {
        match self {
            InitialState::Fock(k) => {
                let mut rho = DMatrix::zeros(n, n);
                rho[(*k, *k)] = Complex64::new(1.0, 0.0);
                rho
            }
            InitialState::MaximallyMixed => DMatrix::identity(n, n) * Complex64::new(1.0 / n as f64, 0.0),
            InitialState::Density(rho) => rho.clone(),
        }
    }
}

/// Everything needed to compile and propagate one model.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub n: usize,
    pub h0: SparseComplexMatrix,
    pub h1: SparseComplexMatrix,
    pub drive: DriveFunction,
    pub channels: Vec<ChannelSpec>,
    pub initial: InitialState,
}

impl ModelSpec {
    pub fn dimer(p: &DimerParams, initial: InitialState) -> Result<Self> {
        let (h0, h1) = dimer_hamiltonian_parts(p)?;
        let spec = Self {
            n: p.n,
            h0,
            h1,
            drive: p.drive_function()?,
            channels: vec![dimer_dissipator(p)?],
            initial,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks shapes, Hermiticity of both Hamiltonian parts, tracelessness
    /// of every jump operator, rates and the initial state.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        let shape = |what: &str, m: &SparseComplexMatrix| -> Result<()> {
            if m.nrows() != n || m.ncols() != n {
                return Err(ConfigError::Validation(format!(
                    "{what} is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                ))
                .into());
            }
            Ok(())
        };
        shape("h0", &self.h0)?;
        shape("h1", &self.h1)?;
        for (name, h) in [("h0", &self.h0), ("h1", &self.h1)] {
            h.check_hermitian(1e-12)
                .map_err(|e| ConfigError::Validation(format!("{name} must be Hermitian: {e}")))?;
        }
        for (p, ch) in self.channels.iter().enumerate() {
            shape(&format!("channel {p}"), &ch.l)?;
            let tr = ch.l.trace();
            if tr.modulus() > 1e-10 {
                return Err(ConfigError::Validation(format!("channel {p} must be traceless, trace = {tr}")).into());
            }
            if !(ch.rate.is_finite() && ch.rate >= 0.0) {
                return Err(
                    ConfigError::Validation(format!("channel {p} rate must be non-negative, got {}", ch.rate)).into(),
                );
            }
        }
        match &self.initial {
            InitialState::Fock(k) if *k >= n => {
                Err(ConfigError::Validation(format!("initial Fock state {k} out of range for N = {n}")).into())
            }
            InitialState::Density(rho) => {
                let basis = GeneratorBasis::new(n)?;
                CoherenceVector::from_density(&basis, rho)
                    .map(|_| ())
                    .map_err(|e| ConfigError::Validation(format!("initial state: {e}")).into())
            }
            _ => Ok(()),
        }
    }

    /// Generator coordinates of the Hamiltonian and the channels.
    pub fn decompose(&self, basis: &GeneratorBasis) -> Result<(HamiltonianDecomposition, Vec<DissipatorChannel>)> {
        let ham = HamiltonianDecomposition::from_matrices(basis, &self.h0, &self.h1)?;
        let channels = self
            .channels
            .iter()
            .map(|c| DissipatorChannel::from_matrix(basis, &c.l, c.rate))
            .collect::<Result<Vec<_>>>()?;
        Ok((ham, channels))
    }
}

/// Reads a run configuration and builds its validated model.
pub fn load_model(path: &Path) -> Result<ModelSpec> {
    crate::config::RunConfig::load(path)?.model.build()
}

/// Reads a sparse `N x N` matrix from `row,col,re,im` lines (zero-based).
/// Blank lines, `#` comments and a leading header row are skipped; repeated
/// coordinates are summed.
pub fn read_matrix_file(path: &Path, n: usize) -> Result<SparseComplexMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text, n).map_err(|(line, message)| {
        ConfigError::MatrixFile {
            path: path.to_path_buf(),
            line,
            message,
        }
        .into()
    })
}

fn parse_matrix(text: &str, n: usize) -> std::result::Result<SparseComplexMatrix, (usize, String)> {
    let mut triplets = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err((
                line_no,
                format!("expected 4 fields `row,col,re,im`, found {}", fields.len()),
            ));
        }
        if triplets.is_empty() && matches!(fields[0], "i" | "row") {
            continue;
        }
        let index = |s: &str, what: &str| -> std::result::Result<usize, (usize, String)> {
            let v: usize = s
                .parse()
                .map_err(|_| (line_no, format!("invalid {what} index `{s}`")))?;
            if v >= n {
                return Err((line_no, format!("{what} index {v} out of range for N = {n}")));
            }
            Ok(v)
        };
        let number = |s: &str| -> std::result::Result<f64, (usize, String)> {
            let v: f64 = s.parse().map_err(|_| (line_no, format!("invalid number `{s}`")))?;
            if !v.is_finite() {
                return Err((line_no, format!("non-finite number `{s}`")));
            }
            Ok(v)
        };
        let r = index(fields[0], "row")?;
        let c = index(fields[1], "column")?;
        triplets.push((r, c, Complex64::new(number(fields[2])?, number(fields[3])?)));
    }
    SparseComplexMatrix::from_triplets(n, n, triplets).map_err(|e| (0, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn three_state_dimer_entries() {
        let mut p = DimerParams::reference(3);
        p.u = 0.0;
        p.e = 0.0;
        let (h0, _) = dimer_hamiltonian_parts(&p).unwrap();
        assert_abs_diff_eq!(h0.get(1, 0).re, -2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(h0.get(2, 1).re, -2f64.sqrt(), epsilon = 1e-15);

        let mut p = DimerParams::reference(3);
        p.j = 0.0;
        p.e = 0.0;
        let (h0, _) = dimer_hamiltonian_parts(&p).unwrap();
        let d: Vec<f64> = (0..3).map(|k| h0.get(k, k).re).collect();
        assert_eq!(d, vec![2.0, 0.0, 2.0]);

        let mut p = DimerParams::reference(3);
        p.j = 0.0;
        p.u = 0.0;
        let (h0, _) = dimer_hamiltonian_parts(&p).unwrap();
        let d: Vec<f64> = (0..3).map(|k| h0.get(k, k).re).collect();
        assert_eq!(d, vec![2.0, 0.0, -2.0]);
    }

    #[test]
    fn three_state_dissipator() {
        let mut p = DimerParams::reference(3);
        p.gamma = 1.0;
        let ch = dimer_dissipator(&p).unwrap();
        let h = 0.5 * 2f64.sqrt();
        assert_abs_diff_eq!(ch.l.get(1, 0).re, -h, epsilon = 1e-15);
        assert_abs_diff_eq!(ch.l.get(0, 1).re, h, epsilon = 1e-15);
        assert_eq!(ch.l.trace(), Complex64::new(0.0, 0.0));
        assert_eq!(ch.rate, 1.0);
    }

    #[test]
    fn zero_gamma_gives_zero_operator() {
        let mut p = DimerParams::reference(5);
        p.gamma = 0.0;
        assert_eq!(dimer_dissipator(&p).unwrap().l.nnz(), 0);
    }

    #[test]
    fn matrix_file_errors_carry_lines() {
        let err = parse_matrix("i,j,re,im\n0,0,1,0\n0,5,1,0\n", 3).unwrap_err();
        assert_eq!(err.0, 3);
        let err = parse_matrix("0,0,1\n", 3).unwrap_err();
        assert_eq!(err.0, 1);
        let m = parse_matrix("# comment\n0,1,1.5,-2\n\n", 2).unwrap();
        assert_eq!(m.get(0, 1), Complex64::new(1.5, -2.0));
    }
}
