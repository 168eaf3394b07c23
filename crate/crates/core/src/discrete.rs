//! One observable with a discrete spectrum (e.g. the energy levels of a
//! bound particle), represented in its own orthonormal eigenbasis.
//!
//! Events are sets of basis indices, not sets of eigenvalues, so degenerate
//! levels need no special treatment. [`DiscreteState::event_in_range`] builds
//! an index set from an eigenvalue window.

use num_complex::Complex64;

use crate::probability::{cdo, event_intersect, indicator_trace, normalized_cdo_trace, Basis, DensityOperator, Event, RouteComparison};
use crate::tolerance::check_condition;
use crate::{Error, Result};

/// Eigenvalues `ε_i` and amplitudes `c_i = ⟨ε_i|Ψ⟩`, normalized on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteState {
    eigenvalues: Vec<f64>,
    rho: DensityOperator,
}

impl DiscreteState {
    pub fn new(eigenvalues: Vec<f64>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidState("a discrete state needs at least one level".into()));
        }
        if eigenvalues.len() != amplitudes.len() {
            return Err(Error::DimensionMismatch { expected: eigenvalues.len(), found: amplitudes.len() });
        }
        if let Some(bad) = eigenvalues.iter().find(|e| !e.is_finite()) {
            return Err(Error::InvalidState(format!("eigenvalue {bad} is not finite")));
        }
        let rho = DensityOperator::new(Basis::Discrete { dim: eigenvalues.len() }, amplitudes)?;
        Ok(Self { eigenvalues, rho })
    }

    /// Real amplitudes.
    pub fn from_real(eigenvalues: Vec<f64>, amplitudes: &[f64]) -> Result<Self> {
        Self::new(eigenvalues, amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    /// The eigenstate `|ε_k⟩`.
    pub fn eigenstate(eigenvalues: Vec<f64>, k: usize) -> Result<Self> {
        let dim = eigenvalues.len();
        if k >= dim {
            return Err(Error::IndexOutOfRange { index: k, dim });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[k] = Complex64::new(1.0, 0.0);
        Self::new(eigenvalues, amps)
    }

    /// Wraps amplitudes without renormalizing. Used by sabotage hooks in verification.
    pub(crate) fn from_raw(eigenvalues: Vec<f64>, amplitudes: Vec<Complex64>) -> Self {
        let rho = DensityOperator::from_raw(Basis::Discrete { dim: eigenvalues.len() }, amplitudes);
        Self { eigenvalues, rho }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        self.rho.amplitudes()
    }

    pub fn density(&self) -> &DensityOperator {
        &self.rho
    }

    /// `P(ε_i) = |c_i|²`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.rho.probabilities()
    }

    /// Ω.
    pub fn omega(&self) -> Event {
        Event::full_discrete(self.dim())
    }

    /// Indices whose eigenvalue lies in the closed window `[lo, hi]`.
    pub fn event_in_range(&self, lo: f64, hi: f64) -> Event {
        Event::discrete(self.eigenvalues.iter().enumerate().filter(|(_, &e)| lo <= e && e <= hi).map(|(i, _)| i))
    }

    /// `max(1, max_i |ε_i|)`, the scale for absolute tolerances on values of `Ĥ`.
    pub fn value_scale(&self) -> f64 {
        self.eigenvalues.iter().fold(1.0_f64, |m, e| m.max(e.abs()))
    }
}

/// `E[Ĥ] = Σ ε_i |c_i|²`.
pub fn expectation(s: &DiscreteState) -> f64 {
    expectation_routes(s).definition
}

/// `Σ ε_i P(ε_i)` against `Tr[Ĥρ] / Tr ρ`.
pub fn expectation_routes(s: &DiscreteState) -> RouteComparison {
    let definition = s.eigenvalues.iter().zip(s.probabilities()).map(|(e, p)| e * p).sum();
    let omega = Basis::Discrete { dim: s.dim() }.omega();
    let numerator = s
        .rho
        .trace_observable(&s.eigenvalues, &omega)
        .expect("observable length matches the state");
    RouteComparison { definition, trace: numerator.re / s.rho.trace() }
}

/// `E[Ĥ|A] = Σ_{i∈A} ε_i |c_i|² / Σ_{k∈A} |c_k|²`.
pub fn conditional_expectation(s: &DiscreteState, a: &Event) -> Result<f64> {
    conditional_expectation_definition(s, a)
}

/// Both routes for `E[Ĥ|A]`: conditional distribution `P(ε_i|A)` averaged
/// over `A`, and `Tr[Ĥ ρ_A] / Tr[ρ_A]`.
pub fn conditional_expectation_routes(s: &DiscreteState, a: &Event) -> Result<RouteComparison> {
    let definition = conditional_expectation_definition(s, a)?;
    let trace = cdo(&s.rho, a)?.conditional_expectation(&s.eigenvalues)?;
    Ok(RouteComparison { definition, trace })
}

fn conditional_expectation_definition(s: &DiscreteState, a: &Event) -> Result<f64> {
    let members = member_indices(s, a)?;
    let probs = s.probabilities();
    let mass = check_condition(members.iter().map(|&i| probs[i]).sum())?;
    Ok(members.iter().map(|&i| s.eigenvalues[i] * (probs[i] / mass)).sum())
}

/// `P(A) = Σ_{k∈A} |c_k|² = Tr[ρ I_A]`.
pub fn absolute_probability(s: &DiscreteState, a: &Event) -> Result<f64> {
    indicator_trace(&s.rho, a)
}

/// `P(A|B) = P(A∩B) / P(B)`.
pub fn conditional_probability(s: &DiscreteState, a: &Event, b: &Event) -> Result<f64> {
    Ok(conditional_probability_routes(s, a, b)?.definition)
}

/// Definition route through the event intersection `A∩B`, trace route
/// through the composed indicators `Tr[ρ I_A I_B] / Tr[ρ I_B]`.
pub fn conditional_probability_routes(s: &DiscreteState, a: &Event, b: &Event) -> Result<RouteComparison> {
    let given = check_condition(absolute_probability(s, b)?)?;
    let joint = absolute_probability(s, &event_intersect(a, b)?)?;
    let trace = normalized_cdo_trace(&s.rho, a, b)?;
    Ok(RouteComparison { definition: joint / given, trace })
}

fn member_indices(s: &DiscreteState, a: &Event) -> Result<Vec<usize>> {
    let ind = crate::probability::Indicator::new(a, s.rho.basis())?;
    Ok((0..s.dim()).filter(|&i| ind.contains(i)).collect())
}
