use num_complex::Complex64;

use super::event::Event;
use super::indicator::{Basis, Indicator};
use crate::tolerance::check_condition;
use crate::{Error, Result};

/// Pure-state density operator `ρ = |Ψ⟩⟨Ψ|`, stored as its amplitude vector.
///
/// Traces are quadrature sums: `Tr[ρ O] = w Σ_i O_i |c_i|²` for diagonal `O`,
/// with `w` the basis cell measure (1 for discrete bases, `dx` or `dx·dy` on grids).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    basis: Basis,
    amplitudes: Vec<Complex64>,
}

impl DensityOperator {
    /// Builds `ρ` from raw amplitudes, rescaling them to unit trace.
    pub fn new(basis: Basis, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), found: amplitudes.len() });
        }
        if amplitudes.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidState("amplitudes must be finite".into()));
        }
        let norm2 = basis.cell_measure() * amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>();
        if !(norm2 > 0.0 && norm2.is_finite()) {
            return Err(Error::InvalidState(format!("state norm² = {norm2} cannot be normalized")));
        }
        let scale = 1.0 / norm2.sqrt();
        let amplitudes = amplitudes.into_iter().map(|c| c * scale).collect();
        Ok(Self { basis, amplitudes })
    }

    /// Wraps amplitudes as given, without rescaling.
    pub(crate) fn from_raw(basis: Basis, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(basis.len(), amplitudes.len());
        Self { basis, amplitudes }
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// `Tr ρ = ⟨Ψ|Ψ⟩`.
    pub fn trace(&self) -> f64 {
        self.basis.cell_measure() * self.amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// `Tr[ρ²]`. For the rank-1 operator this is `⟨Ψ|Ψ⟩²`.
    pub fn purity(&self) -> f64 {
        let t = self.trace();
        t * t
    }

    /// Born-rule weight of each basis element, `w |c_i|²`.
    pub fn probabilities(&self) -> Vec<f64> {
        let w = self.basis.cell_measure();
        self.amplitudes.iter().map(|c| w * c.norm_sqr()).collect()
    }

    /// `Tr[ρ I_A]`.
    pub fn trace_indicator(&self, indicator: &Indicator) -> Result<f64> {
        self.check_indicator(indicator)?;
        let w = self.basis.cell_measure();
        Ok(w * self
            .amplitudes
            .iter()
            .zip(indicator.mask())
            .filter(|(_, &m)| m)
            .map(|(c, _)| c.norm_sqr())
            .sum::<f64>())
    }

    /// `Tr[Ô ρ I_A]` for an observable diagonal in this basis.
    ///
    /// Evaluated as `Σ_i ⟨i|Ô|Ψ⟩⟨Ψ|I_A|i⟩`, keeping the complex products; the
    /// imaginary part is rounding noise for a real observable.
    pub fn trace_observable(&self, observable: &[f64], indicator: &Indicator) -> Result<Complex64> {
        self.check_indicator(indicator)?;
        if observable.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: observable.len() });
        }
        let projected = indicator.apply(&self.amplitudes)?;
        let w = self.basis.cell_measure();
        let sum: Complex64 = observable
            .iter()
            .zip(&self.amplitudes)
            .zip(&projected)
            .map(|((&o, &c), &pc)| o * c * pc.conj())
            .sum();
        Ok(sum * w)
    }

    fn check_indicator(&self, indicator: &Indicator) -> Result<()> {
        if indicator.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: indicator.len() });
        }
        Ok(())
    }
}

/// `ρ_A = ρ I_A`. Not unit-trace: `Tr ρ_A = P(A)`.
#[derive(Debug, Clone)]
pub struct ConditionalDensityOperator<'a> {
    rho: &'a DensityOperator,
    event: Event,
    indicator: Indicator,
    trace: f64,
}

impl<'a> ConditionalDensityOperator<'a> {
    pub fn new(rho: &'a DensityOperator, event: &Event) -> Result<Self> {
        let indicator = Indicator::new(event, rho.basis())?;
        let trace = rho.trace_indicator(&indicator)?;
        Ok(Self { rho, event: event.clone(), indicator, trace })
    }

    pub fn base(&self) -> &DensityOperator {
        self.rho
    }

    pub fn event(&self) -> &Event {
        &self.event
    }

    pub fn indicator(&self) -> &Indicator {
        &self.indicator
    }

    /// `Tr ρ_A`, the absolute probability of the event.
    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// `Tr[Ô ρ_A]`.
    pub fn trace_observable(&self, observable: &[f64]) -> Result<Complex64> {
        self.rho.trace_observable(observable, &self.indicator)
    }

    /// `Tr[Ô ρ_A] / Tr[ρ_A]`, real part.
    pub fn conditional_expectation(&self, observable: &[f64]) -> Result<f64> {
        let denom = check_condition(self.trace)?;
        Ok(self.trace_observable(observable)?.re / denom)
    }

    /// `Tr[ρ I_A I_X]`, the joint mass of `A` and the event behind `other`.
    pub fn joint_trace(&self, other: &Indicator) -> Result<f64> {
        self.rho.trace_indicator(&self.indicator.compose(other)?)
    }

    /// Trace of `I_X` against the unit-trace operator `ρ I_A / Tr[ρ I_A]`.
    pub fn normalized_trace(&self, other: &Indicator) -> Result<f64> {
        let denom = check_condition(self.trace)?;
        let joint = self.joint_trace(other)?;
        Ok(joint / denom)
    }
}

/// `Tr[ρ I_A]`, the absolute probability of `a`.
pub fn indicator_trace(rho: &DensityOperator, a: &Event) -> Result<f64> {
    rho.trace_indicator(&Indicator::new(a, rho.basis())?)
}

/// Builds the conditional density operator `ρ_A = ρ I_A`.
pub fn cdo<'a>(rho: &'a DensityOperator, a: &Event) -> Result<ConditionalDensityOperator<'a>> {
    ConditionalDensityOperator::new(rho, a)
}

/// `Tr[ρ I_X I_Y] / Tr[ρ I_Y]`: the probability of `x` given `y` via mask composition.
pub fn normalized_cdo_trace(rho: &DensityOperator, x: &Event, y: &Event) -> Result<f64> {
    let given = cdo(rho, y)?;
    given.normalized_trace(&Indicator::new(x, rho.basis())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn three_level() -> DensityOperator {
        // |c|² = (0.5, 0.3, 0.2)
        let amps = vec![c(0.5f64.sqrt()), Complex64::new(0.0, 0.3f64.sqrt()), c(-(0.2f64.sqrt()))];
        DensityOperator::new(Basis::Discrete { dim: 3 }, amps).unwrap()
    }

    #[test]
    fn construction_normalizes() {
        let rho = DensityOperator::new(Basis::Discrete { dim: 2 }, vec![c(3.0), c(4.0)]).unwrap();
        assert_abs_diff_eq!(rho.trace(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.amplitudes()[0].re, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn construction_errors() {
        let b = Basis::Discrete { dim: 2 };
        assert!(DensityOperator::new(b, vec![c(0.0), c(0.0)]).is_err());
        assert!(DensityOperator::new(b, vec![c(1.0)]).is_err());
        assert!(DensityOperator::new(b, vec![c(f64::NAN), c(1.0)]).is_err());
    }

    #[test]
    fn indicator_trace_examples() {
        let rho = three_level();
        assert_abs_diff_eq!(indicator_trace(&rho, &Event::full_discrete(3)).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(indicator_trace(&rho, &Event::empty_discrete()).unwrap(), 0.0);
        // oracle: 0.5 + 0.2
        assert_abs_diff_eq!(indicator_trace(&rho, &Event::discrete([0, 2])).unwrap(), 0.7, epsilon = 1e-12);
    }

    #[test]
    fn cdo_examples() {
        let rho = three_level();
        assert_abs_diff_eq!(cdo(&rho, &Event::full_discrete(3)).unwrap().trace(), 1.0, epsilon = 1e-12);
        assert_eq!(cdo(&rho, &Event::empty_discrete()).unwrap().trace(), 0.0);
        assert_abs_diff_eq!(cdo(&rho, &Event::discrete([1])).unwrap().trace(), 0.3, epsilon = 1e-12);
    }

    #[test]
    fn cdo_over_omega_reproduces_rho() {
        let rho = three_level();
        let obs = [1.0, -2.0, 5.0];
        let full = cdo(&rho, &Event::full_discrete(3)).unwrap();
        let direct: f64 = rho.probabilities().iter().zip(obs).map(|(p, o)| p * o).sum();
        assert_abs_diff_eq!(full.trace_observable(&obs).unwrap().re, direct, epsilon = 1e-12);
    }

    #[test]
    fn normalized_cdo_trace_examples() {
        let rho = three_level();
        let y = Event::discrete([0, 1]);
        assert_abs_diff_eq!(normalized_cdo_trace(&rho, &Event::full_discrete(3), &y).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(normalized_cdo_trace(&rho, &Event::discrete([2]), &y).unwrap(), 0.0);
        let v = normalized_cdo_trace(&rho, &Event::discrete([1, 2]), &y).unwrap();
        assert_abs_diff_eq!(v, 0.3 / 0.8, epsilon = 1e-12);
    }

    #[test]
    fn zero_condition_is_an_error() {
        let rho = three_level();
        let err = normalized_cdo_trace(&rho, &Event::discrete([0]), &Event::empty_discrete()).unwrap_err();
        assert!(matches!(err, Error::ZeroConditionEvent { .. }));
    }
}
