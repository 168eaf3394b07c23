//! Unitary evolution under a time-independent Hamiltonian.
//!
//! States, observables and events live in a fixed measurement basis. The
//! propagator `U(t) = V diag(e^{−iλ_k t/ħ}) V†` is built from the spectral
//! decomposition of `H` in that basis.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::probability::{Basis, DensityOperator, Event, Indicator, RouteComparison};
use crate::tolerance::{check_condition, HERMITICITY};
use crate::{Error, Result};

/// Largest dimension accepted for dense eigendecomposition.
pub const MAX_DENSE_DIM: usize = 4096;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 0;

/// Hermitian Hamiltonian in the measurement basis.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    h: DMatrix<Complex64>,
}

impl HamiltonianMatrix {
    /// Accepts `h` when `max |H − H†| ≤ 1e-12 · max(1, max |H_ij|)`.
    pub fn new(h: DMatrix<Complex64>) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::DimensionMismatch { expected: h.nrows(), found: h.ncols() });
        }
        let n = h.nrows();
        if n == 0 {
            return Err(Error::InvalidState("Hamiltonian must have at least one row".into()));
        }
        if n > MAX_DENSE_DIM {
            return Err(Error::MatrixTooLarge { n, max: MAX_DENSE_DIM });
        }
        if h.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidState("Hamiltonian entries must be finite".into()));
        }
        let scale = h.iter().map(|c| c.norm()).fold(1.0, f64::max);
        let deviation = (&h - h.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if deviation > HERMITICITY * scale {
            return Err(Error::NonHermitian { deviation });
        }
        Ok(Self { h })
    }

    pub fn from_real(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: entries.len() });
        }
        Self::new(DMatrix::from_row_iterator(n, n, entries.iter().map(|&v| Complex64::new(v, 0.0))))
    }

    pub fn diagonal(energies: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(energies.len(), energies.iter().map(|&e| Complex64::new(e, 0.0)));
        Self::new(DMatrix::from_diagonal(&d))
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.h
    }

    /// `⟨Ψ|H|Ψ⟩` for a unit-norm `psi`.
    pub fn energy(&self, psi: &[Complex64]) -> Result<f64> {
        check_dim(self.dim(), psi.len())?;
        let v = DVector::from_column_slice(psi);
        Ok(v.dotc(&(&self.h * &v)).re)
    }
}

/// Spectral decomposition of `H`, from which `U(t)` is formed for any `t`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    vectors: DMatrix<Complex64>,
    hbar: f64,
}

impl Spectrum {
    pub fn new(h: &HamiltonianMatrix, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidState(format!("hbar must be positive, got {hbar}")));
        }
        let eig = SymmetricEigen::try_new(h.h.clone(), EIGEN_EPS, EIGEN_MAX_ITER).ok_or(Error::EigenDecompositionFailure)?;
        if eig.eigenvalues.iter().any(|l| !l.is_finite()) {
            return Err(Error::EigenDecompositionFailure);
        }
        Ok(Self { eigenvalues: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors, hbar })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn propagator(&self, t: f64) -> Propagator {
        let phases = DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, -l * t / self.hbar)),
        );
        let u = &self.vectors * DMatrix::from_diagonal(&phases) * self.vectors.adjoint();
        Propagator { eigenvalues: self.eigenvalues.clone(), u, t }
    }
}

/// `U(t)` for a fixed time.
#[derive(Debug, Clone)]
pub struct Propagator {
    eigenvalues: Vec<f64>,
    u: DMatrix<Complex64>,
    t: f64,
}

impl Propagator {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.u
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    /// `max |U†U − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        (self.u.adjoint() * &self.u - DMatrix::<Complex64>::identity(n, n)).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

pub fn build_propagator(h: &HamiltonianMatrix, t: f64, hbar: f64) -> Result<Propagator> {
    Ok(Spectrum::new(h, hbar)?.propagator(t))
}

/// `|Ψ(t)⟩ = U(t)|Ψ(0)⟩`.
pub fn evolve(psi: &[Complex64], u: &Propagator) -> Result<Vec<Complex64>> {
    check_dim(u.dim(), psi.len())?;
    Ok((&u.u * DVector::from_column_slice(psi)).iter().copied().collect())
}

/// Initial state, Hamiltonian and observable bundled for repeated
/// time-indexed queries.
#[derive(Debug, Clone)]
pub struct TimeEvolution {
    psi0: Vec<Complex64>,
    observable: Vec<f64>,
    spectrum: Spectrum,
    h: HamiltonianMatrix,
}

impl TimeEvolution {
    /// Normalizes `psi0`; `observable` holds the diagonal of `Ô` in the measurement basis.
    pub fn new(psi0: Vec<Complex64>, h: HamiltonianMatrix, observable: Vec<f64>, hbar: f64) -> Result<Self> {
        let rho = DensityOperator::new(Basis::Discrete { dim: h.dim() }, psi0)?;
        check_dim(h.dim(), observable.len())?;
        if observable.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidState("observable values must be finite".into()));
        }
        let spectrum = Spectrum::new(&h, hbar)?;
        Ok(Self { psi0: rho.amplitudes().to_vec(), observable, spectrum, h })
    }

    pub fn dim(&self) -> usize {
        self.psi0.len()
    }

    pub fn initial_state(&self) -> &[Complex64] {
        &self.psi0
    }

    pub fn hamiltonian(&self) -> &HamiltonianMatrix {
        &self.h
    }

    pub fn propagator(&self, t: f64) -> Propagator {
        self.spectrum.propagator(t)
    }

    pub fn state_at(&self, t: f64) -> Vec<Complex64> {
        evolve(&self.psi0, &self.propagator(t)).expect("dimension fixed at construction")
    }

    /// `ρ(t)` as a rank-1 operator on the measurement basis.
    pub fn density_at(&self, t: f64) -> DensityOperator {
        DensityOperator::from_raw(Basis::Discrete { dim: self.dim() }, self.state_at(t))
    }

    pub fn ce(&self, a: &Event, t: f64) -> Result<f64> {
        Ok(self.ce_routes(a, t)?.definition)
    }

    /// Populations of `|Ψ(t)⟩` against the dense `Tr{Ô ρ(t) I_A} / Tr{ρ(t) I_A}`.
    pub fn ce_routes(&self, a: &Event, t: f64) -> Result<RouteComparison> {
        let psi = self.state_at(t);
        let ind = Indicator::new(a, &Basis::Discrete { dim: self.dim() })?;
        let (mut num, mut den) = (0.0, 0.0);
        for ((c, o), &m) in psi.iter().zip(&self.observable).zip(ind.mask()) {
            if m {
                num += o * c.norm_sqr();
                den += c.norm_sqr();
            }
        }
        let definition = num / check_condition(den)?;

        let rho = outer(&psi);
        let o = diag(&self.observable);
        let i_a = diag_mask(ind.mask());
        let trace_a = check_condition((&rho * &i_a).trace().re)?;
        let trace = (o * &rho * &i_a).trace().re / trace_a;
        Ok(RouteComparison { definition, trace })
    }

    pub fn ap(&self, a: &Event, t: f64) -> Result<f64> {
        let ind = Indicator::new(a, &Basis::Discrete { dim: self.dim() })?;
        self.density_at(t).trace_indicator(&ind)
    }

    pub fn cp(&self, a: &Event, b: &Event, t: f64) -> Result<f64> {
        Ok(self.cp_routes(a, b, t)?.definition)
    }

    /// `P(A∩B, t) / P(B, t)` against the dense `Tr[ρ(t) I_A I_B] / Tr[ρ(t) I_B]`.
    pub fn cp_routes(&self, a: &Event, b: &Event, t: f64) -> Result<RouteComparison> {
        let given = check_condition(self.ap(b, t)?)?;
        let definition = self.ap(&a.intersect(b)?, t)? / given;

        let basis = Basis::Discrete { dim: self.dim() };
        let rho = outer(&self.state_at(t));
        let i_a = diag_mask(Indicator::new(a, &basis)?.mask());
        let i_b = diag_mask(Indicator::new(b, &basis)?.mask());
        let trace_b = check_condition((&rho * &i_b).trace().re)?;
        let trace = (&rho * i_a * &i_b).trace().re / trace_b;
        Ok(RouteComparison { definition, trace })
    }

    /// `⟨Ô⟩(t)`.
    pub fn expectation(&self, t: f64) -> f64 {
        self.state_at(t).iter().zip(&self.observable).map(|(c, o)| o * c.norm_sqr()).sum()
    }

    /// `⟨H⟩(t)`.
    pub fn energy(&self, t: f64) -> f64 {
        self.h.energy(&self.state_at(t)).expect("dimension fixed at construction")
    }
}

/// `E[Ô|A](t)`.
pub fn ce_t(s0: &[Complex64], h: &HamiltonianMatrix, obs: &[f64], a: &Event, t: f64, hbar: f64) -> Result<f64> {
    TimeEvolution::new(s0.to_vec(), h.clone(), obs.to_vec(), hbar)?.ce(a, t)
}

/// `P(A, t)`.
pub fn ap_t(s0: &[Complex64], h: &HamiltonianMatrix, a: &Event, t: f64, hbar: f64) -> Result<f64> {
    TimeEvolution::new(s0.to_vec(), h.clone(), vec![0.0; h.dim()], hbar)?.ap(a, t)
}

/// `P(A|B, t)`.
pub fn cp_t(s0: &[Complex64], h: &HamiltonianMatrix, a: &Event, b: &Event, t: f64, hbar: f64) -> Result<f64> {
    TimeEvolution::new(s0.to_vec(), h.clone(), vec![0.0; h.dim()], hbar)?.cp(a, b, t)
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn outer(psi: &[Complex64]) -> DMatrix<Complex64> {
    let v = DVector::from_column_slice(psi);
    &v * v.adjoint()
}

fn diag(values: &[f64]) -> DMatrix<Complex64> {
    DMatrix::from_diagonal(&DVector::from_iterator(values.len(), values.iter().map(|&v| Complex64::new(v, 0.0))))
}

fn diag_mask(mask: &[bool]) -> DMatrix<Complex64> {
    diag(&mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect::<Vec<_>>())
}
