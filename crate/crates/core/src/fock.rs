//! Grand-canonical statistics of non-interacting particles in Fock space.
//!
//! Each mode `j` contributes a factor `Z_j = Σ_n exp(−x_j n)` with
//! `x_j = β(ε_j − μ)`, so the grand partition function factorizes and the
//! occupation probabilities are independent across modes. Bosons are
//! truncated at `n_max` quanta per mode.

use num_complex::Complex64;

use crate::probability::{Basis, DensityOperator, Event, EventKind, FockPredicate, Indicator, RouteComparison};
use crate::tolerance::check_condition;
use crate::{Error, Result};

/// Upper bound on the number of occupation vectors an enumeration may visit.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistics {
    Boson { n_max: u32 },
    Fermion,
}

impl Statistics {
    /// Largest occupation a single mode can hold.
    pub fn cap(self) -> u32 {
        match self {
            Statistics::Boson { n_max } => n_max,
            Statistics::Fermion => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockEnsemble {
    mode_energies: Vec<f64>,
    beta: f64,
    mu: f64,
    statistics: Statistics,
}

impl FockEnsemble {
    pub fn new(mode_energies: Vec<f64>, beta: f64, mu: f64, statistics: Statistics) -> Result<Self> {
        if mode_energies.is_empty() {
            return Err(Error::InvalidEnsemble("at least one mode is required".into()));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidEnsemble(format!("beta must be positive and finite, got {beta}")));
        }
        if !mu.is_finite() || mode_energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidEnsemble("mode energies and mu must be finite".into()));
        }
        if let Statistics::Boson { n_max } = statistics {
            if n_max == 0 {
                return Err(Error::InvalidEnsemble("boson n_max must be at least 1".into()));
            }
            if let Some((j, e)) = mode_energies.iter().enumerate().find(|(_, &e)| beta * (e - mu) <= 0.0) {
                return Err(Error::InvalidEnsemble(format!(
                    "boson mode {j} has beta*(eps - mu) = {} <= 0",
                    beta * (e - mu)
                )));
            }
        }
        Ok(Self { mode_energies, beta, mu, statistics })
    }

    /// Builds the ensemble from a temperature, `β = 1/(k T)`.
    pub fn from_temperature(mode_energies: Vec<f64>, temperature: f64, boltzmann: f64, mu: f64, statistics: Statistics) -> Result<Self> {
        if !(temperature > 0.0 && boltzmann > 0.0) {
            return Err(Error::InvalidEnsemble(format!("need T > 0 and k > 0, got T = {temperature}, k = {boltzmann}")));
        }
        Self::new(mode_energies, 1.0 / (boltzmann * temperature), mu, statistics)
    }

    pub fn mode_energies(&self) -> &[f64] {
        &self.mode_energies
    }

    pub fn modes(&self) -> usize {
        self.mode_energies.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    /// `β(ε_j − μ)`.
    pub fn reduced_energy(&self, j: usize) -> f64 {
        self.beta * (self.mode_energies[j] - self.mu)
    }

    fn check_mode(&self, j: usize) -> Result<()> {
        if j < self.modes() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: j, dim: self.modes() })
        }
    }
}

/// Occupation vector `|n_1, …, n_t⟩`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OccupationVector(Vec<u32>);

impl OccupationVector {
    pub fn new(e: &FockEnsemble, counts: Vec<u32>) -> Result<Self> {
        if counts.len() != e.modes() {
            return Err(Error::DimensionMismatch { expected: e.modes(), found: counts.len() });
        }
        let cap = e.statistics.cap();
        if let Some(&n) = counts.iter().find(|&&n| n > cap) {
            return Err(Error::InvalidState(format!("occupation {n} exceeds the per-mode cap {cap}")));
        }
        Ok(Self(counts))
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    /// Total particle number `N = Σ n_j`.
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `E = Σ n_j ε_j`.
    pub fn energy(&self, e: &FockEnsemble) -> f64 {
        self.0.iter().zip(&e.mode_energies).map(|(&n, eps)| n as f64 * eps).sum()
    }

    /// `Σ a_j n_j`.
    pub fn linear(&self, a: &[f64]) -> f64 {
        self.0.iter().zip(a).map(|(&n, a)| n as f64 * a).sum()
    }
}

/// `ln Z_j`.
pub fn log_mode_partition(e: &FockEnsemble, j: usize) -> Result<f64> {
    e.check_mode(j)?;
    let x = e.reduced_energy(j);
    Ok(match e.statistics {
        Statistics::Fermion => log1p_exp(-x),
        // Geometric series (1 − e^{−x(n+1)}) / (1 − e^{−x}), x > 0.
        Statistics::Boson { n_max } => {
            let top = -(-x * (n_max as f64 + 1.0)).exp_m1();
            let bottom = -(-x).exp_m1();
            top.ln() - bottom.ln()
        }
    })
}

/// `Z_j = Σ_{n=0}^{cap} exp(−β(ε_j − μ) n)`.
pub fn mode_partition(e: &FockEnsemble, j: usize) -> Result<f64> {
    Ok(log_mode_partition(e, j)?.exp())
}

/// `ln Z_G = Σ_j ln Z_j`.
pub fn log_grand_partition(e: &FockEnsemble) -> f64 {
    (0..e.modes()).map(|j| log_mode_partition(e, j).expect("mode in range")).sum()
}

pub fn grand_partition(e: &FockEnsemble) -> f64 {
    log_grand_partition(e).exp()
}

/// `ln Σ_N̄ exp[−β(E(N̄) − μ N(N̄))]`, summed over every truncated occupation vector.
pub fn log_grand_partition_enumerated(e: &FockEnsemble) -> Result<f64> {
    let logs: Vec<f64> = enumerate_occupations(e)?.iter().map(|n| log_weight(e, n)).collect();
    Ok(log_sum_exp(&logs))
}

/// Number of occupation vectors in the truncated Fock space, `(cap + 1)^t`.
pub fn fock_space_size(e: &FockEnsemble) -> u128 {
    let base = e.statistics.cap() as u128 + 1;
    (0..e.modes()).fold(1u128, |acc, _| acc.saturating_mul(base))
}

/// All occupation vectors, mode 0 varying slowest.
pub fn enumerate_occupations(e: &FockEnsemble) -> Result<Vec<OccupationVector>> {
    let count = fock_space_size(e);
    if count > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge { count, limit: ENUMERATION_LIMIT });
    }
    let cap = e.statistics.cap();
    let t = e.modes();
    let mut out = Vec::with_capacity(count as usize);
    let mut n = vec![0u32; t];
    loop {
        out.push(OccupationVector(n.clone()));
        let mut j = t;
        loop {
            if j == 0 {
                return Ok(out);
            }
            j -= 1;
            if n[j] < cap {
                n[j] += 1;
                break;
            }
            n[j] = 0;
        }
    }
}

/// `P(n_j = n) = exp(−β(ε_j − μ) n) / Z_j`, zero outside the allowed range.
pub fn occupation_probability(e: &FockEnsemble, j: usize, n: u32) -> Result<f64> {
    let log_z = log_mode_partition(e, j)?;
    if n > e.statistics.cap() {
        return Ok(0.0);
    }
    Ok((-e.reduced_energy(j) * n as f64 - log_z).exp())
}

/// `⟨n_j⟩ = Σ_n n P(n_j = n)`.
pub fn mean_occupation(e: &FockEnsemble, j: usize) -> Result<f64> {
    let mut total = 0.0;
    for n in 1..=e.statistics.cap() {
        total += n as f64 * occupation_probability(e, j, n)?;
    }
    Ok(total)
}

/// `⟨Σ a_j n̂_j⟩ = Σ a_j ⟨n_j⟩`.
pub fn linear_observable_expectation(e: &FockEnsemble, a: &[f64]) -> Result<f64> {
    check_observable(e, a)?;
    let mut total = 0.0;
    for (j, &aj) in a.iter().enumerate() {
        if aj != 0.0 {
            total += aj * mean_occupation(e, j)?;
        }
    }
    Ok(total)
}

/// The same expectation as a Boltzmann-weighted sum over occupation vectors.
pub fn linear_observable_expectation_enumerated(e: &FockEnsemble, a: &[f64]) -> Result<f64> {
    check_observable(e, a)?;
    let states = enumerate_occupations(e)?;
    let log_z = log_grand_partition_enumerated(e)?;
    Ok(states.iter().map(|n| n.linear(a) * (log_weight(e, n) - log_z).exp()).sum())
}

/// Equilibrium state over the enumerated Fock basis, with real nonnegative
/// coefficients `C(N̄) = Π_j sqrt(P(n_j))`.
#[derive(Debug, Clone)]
pub struct EquilibriumState {
    pub occupations: Vec<OccupationVector>,
    pub rho: DensityOperator,
}

impl EquilibriumState {
    pub fn new(e: &FockEnsemble) -> Result<Self> {
        let occupations = enumerate_occupations(e)?;
        let logp: Vec<Vec<f64>> = (0..e.modes())
            .map(|j| {
                let log_z = log_mode_partition(e, j).expect("mode in range");
                (0..=e.statistics.cap()).map(|n| -e.reduced_energy(j) * n as f64 - log_z).collect()
            })
            .collect();
        let amplitudes = occupations
            .iter()
            .map(|occ| {
                let log_p: f64 = occ.counts().iter().enumerate().map(|(j, &n)| logp[j][n as usize]).sum();
                Complex64::new((0.5 * log_p).exp(), 0.0)
            })
            .collect();
        let rho = DensityOperator::from_raw(Basis::Discrete { dim: occupations.len() }, amplitudes);
        Ok(Self { occupations, rho })
    }

    /// `P(N̄) = C(N̄)²`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.rho.probabilities()
    }

    /// Values of `Σ a_j n_j` on each basis vector.
    pub fn observable(&self, a: &[f64]) -> Vec<f64> {
        self.occupations.iter().map(|n| n.linear(a)).collect()
    }

    /// Indicator of a Fock predicate over the enumerated basis.
    pub fn indicator(&self, predicate: &FockPredicate) -> Indicator {
        Indicator::from_mask(self.occupations.iter().map(|n| predicate.matches(n.counts())).collect())
    }
}

/// `Σ_{N̄∈A} O(N̄) P(N̄) / Σ_{N̄∈A} P(N̄)` for the linear observable `O = Σ o_j n_j`.
pub fn fock_conditional_expectation(e: &FockEnsemble, o: &[f64], a: &Event) -> Result<f64> {
    Ok(fock_conditional_expectation_routes(e, o, a)?.definition)
}

/// Enumerated conditional average against `Tr{Ô ρ_A} / Tr{ρ_A}` on the
/// equilibrium state.
pub fn fock_conditional_expectation_routes(e: &FockEnsemble, o: &[f64], a: &Event) -> Result<RouteComparison> {
    check_observable(e, o)?;
    let predicate = fock_predicate(e, a)?;
    let state = EquilibriumState::new(e)?;
    let probs = state.probabilities();
    let values = state.observable(o);
    let ind = state.indicator(predicate);

    let (mut num, mut den) = (0.0, 0.0);
    for ((p, v), &m) in probs.iter().zip(&values).zip(ind.mask()) {
        if m {
            num += v * p;
            den += p;
        }
    }
    let definition = num / check_condition(den)?;
    let mass = check_condition(state.rho.trace_indicator(&ind)?)?;
    let trace = state.rho.trace_observable(&values, &ind)?.re / mass;
    Ok(RouteComparison { definition, trace })
}

/// `P(A) = Σ_{N̄∈A} P(N̄)`.
pub fn fock_absolute_probability(e: &FockEnsemble, a: &Event) -> Result<f64> {
    let predicate = fock_predicate(e, a)?;
    let state = EquilibriumState::new(e)?;
    state.rho.trace_indicator(&state.indicator(predicate))
}

/// `P(A|B) = P(A ∩ B) / P(B)`.
pub fn fock_conditional_probability(e: &FockEnsemble, a: &Event, b: &Event) -> Result<f64> {
    let given = check_condition(fock_absolute_probability(e, b)?)?;
    Ok(fock_absolute_probability(e, &a.intersect(b)?)? / given)
}

fn fock_predicate<'a>(e: &FockEnsemble, a: &'a Event) -> Result<&'a FockPredicate> {
    match a.kind() {
        EventKind::FockPredicate(p) => {
            if let Some(m) = p.max_mode() {
                e.check_mode(m)?;
            }
            Ok(p)
        }
        _ => Err(Error::UnsupportedEvent { event: a.variant_name(), basis: "a Fock space" }),
    }
}

fn check_observable(e: &FockEnsemble, a: &[f64]) -> Result<()> {
    if a.len() != e.modes() {
        return Err(Error::DimensionMismatch { expected: e.modes(), found: a.len() });
    }
    Ok(())
}

/// `−β(E(N̄) − μ N(N̄))`.
fn log_weight(e: &FockEnsemble, n: &OccupationVector) -> f64 {
    -e.beta * (n.energy(e) - e.mu * n.total() as f64)
}

/// `ln(1 + e^y)` without overflow.
fn log1p_exp(y: f64) -> f64 {
    if y > 0.0 {
        y + (-y).exp().ln_1p()
    } else {
        y.exp().ln_1p()
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::OccupationRange;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn fermions(x: &[f64]) -> FockEnsemble {
        FockEnsemble::new(x.to_vec(), 1.0, 0.0, Statistics::Fermion).unwrap()
    }

    fn bosons(x: &[f64], n_max: u32) -> FockEnsemble {
        FockEnsemble::new(x.to_vec(), 1.0, 0.0, Statistics::Boson { n_max }).unwrap()
    }

    // Independent oracle: nested loops over every occupation vector of a 2-mode system.
    fn two_mode_oracle(x: [f64; 2], cap: u32, keep: impl Fn(u32, u32) -> bool, obs: impl Fn(u32, u32) -> f64) -> (f64, f64) {
        let (mut num, mut den) = (0.0, 0.0);
        for a in 0..=cap {
            for b in 0..=cap {
                if keep(a, b) {
                    let w = (-x[0] * a as f64 - x[1] * b as f64).exp();
                    num += obs(a, b) * w;
                    den += w;
                }
            }
        }
        (num, den)
    }

    #[test]
    fn construction_rules() {
        assert!(FockEnsemble::new(vec![], 1.0, 0.0, Statistics::Fermion).is_err());
        assert!(FockEnsemble::new(vec![1.0], 0.0, 0.0, Statistics::Fermion).is_err());
        assert!(FockEnsemble::new(vec![1.0], 1.0, 1.0, Statistics::Boson { n_max: 5 }).is_err());
        assert!(FockEnsemble::new(vec![1.0], 1.0, 0.0, Statistics::Boson { n_max: 0 }).is_err());
        assert!(FockEnsemble::new(vec![1.0], 1.0, 1.0, Statistics::Fermion).is_ok());
        let t = FockEnsemble::from_temperature(vec![1.0], 2.0, 1.0, 0.0, Statistics::Fermion).unwrap();
        assert_eq!(t.beta(), 0.5);
    }

    #[test]
    fn mode_partition_examples() {
        assert_abs_diff_eq!(mode_partition(&fermions(&[0.0]), 0).unwrap(), 2.0, epsilon = 1e-15);
        let z = mode_partition(&bosons(&[1.0], 50), 0).unwrap();
        let oracle = (1.0 - (-51.0f64).exp()) / (1.0 - (-1.0f64).exp());
        assert_relative_eq!(z, oracle, max_relative = 1e-14);
        assert_abs_diff_eq!(z, 1.5819767068693265, epsilon = 1e-12);
        let cold = FockEnsemble::new(vec![1.0], 1e4, 0.0, Statistics::Boson { n_max: 20 }).unwrap();
        assert_abs_diff_eq!(mode_partition(&cold, 0).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mode_partition(&FockEnsemble::new(vec![1.0], 1e4, 0.0, Statistics::Fermion).unwrap(), 0).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn grand_partition_examples() {
        let single = bosons(&[0.7], 9);
        assert_eq!(grand_partition(&single), mode_partition(&single, 0).unwrap());

        let e = fermions(&[0.0, 1.0, 2.0]);
        let e1 = (-1.0f64).exp();
        let e2 = (-2.0f64).exp();
        let oracle = 2.0 * (1.0 + e1) * (1.0 + e2);
        assert_relative_eq!(grand_partition(&e), oracle, max_relative = 1e-12);
        assert_relative_eq!(log_grand_partition_enumerated(&e).unwrap().exp(), oracle, max_relative = 1e-12);

        let b = bosons(&[0.5, 1.3], 4);
        assert_eq!(enumerate_occupations(&b).unwrap().len(), 25);
        let (_, den) = two_mode_oracle([0.5, 1.3], 4, |_, _| true, |_, _| 0.0);
        assert_relative_eq!(grand_partition(&b), den, max_relative = 1e-12);
    }

    #[test]
    fn log_space_survives_large_systems() {
        let e = FockEnsemble::new(vec![0.001; 2000], 1.0, -1.0, Statistics::Fermion).unwrap();
        let log_z = log_grand_partition(&e);
        assert!(log_z.is_finite());
        assert_relative_eq!(log_z, 2000.0 * (1.0 + (-1.001f64).exp()).ln(), max_relative = 1e-12);
        assert!(matches!(enumerate_occupations(&e), Err(Error::EnumerationTooLarge { .. })));
    }

    #[test]
    fn occupation_probability_examples() {
        let f = fermions(&[0.0]);
        assert_eq!(occupation_probability(&f, 0, 0).unwrap(), 0.5);
        assert_eq!(occupation_probability(&f, 0, 1).unwrap(), 0.5);
        assert_eq!(occupation_probability(&f, 0, 2).unwrap(), 0.0);
        let b = bosons(&[1.0], 50);
        for n in [0u32, 1, 7, 50] {
            let oracle = (-(n as f64)).exp() * (1.0 - (-1.0f64).exp()) / (1.0 - (-51.0f64).exp());
            assert_relative_eq!(occupation_probability(&b, 0, n).unwrap(), oracle, max_relative = 1e-12);
        }
        assert!(occupation_probability(&b, 1, 0).is_err());
    }

    #[test]
    fn linear_observable_examples() {
        let f = fermions(&[0.0, 0.0]);
        assert_eq!(linear_observable_expectation(&f, &[0.0, 0.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(mean_occupation(&f, 1).unwrap(), 0.5, epsilon = 1e-15);

        let eps = [0.4, 1.1, 2.5];
        let e = FockEnsemble::new(eps.to_vec(), 1.3, 0.1, Statistics::Boson { n_max: 5 }).unwrap();
        // oracle: triple loop over 6^3 vectors
        let (mut num, mut den) = (0.0, 0.0);
        for a in 0..=5u32 {
            for b in 0..=5u32 {
                for c in 0..=5u32 {
                    let energy = a as f64 * eps[0] + b as f64 * eps[1] + c as f64 * eps[2];
                    let w = (-1.3 * (energy - 0.1 * (a + b + c) as f64)).exp();
                    num += energy * w;
                    den += w;
                }
            }
        }
        let mean_energy = linear_observable_expectation(&e, &eps).unwrap();
        assert_relative_eq!(mean_energy, num / den, max_relative = 1e-12);
        assert_relative_eq!(linear_observable_expectation_enumerated(&e, &eps).unwrap(), num / den, max_relative = 1e-12);
        assert!(linear_observable_expectation(&e, &[1.0]).is_err());
    }

    #[test]
    fn conditional_expectation_over_everything() {
        let e = bosons(&[0.6, 1.4], 6);
        let o = [2.0, -1.0];
        let all = Event::fock(FockPredicate::any());
        assert_abs_diff_eq!(
            fock_conditional_expectation(&e, &o, &all).unwrap(),
            linear_observable_expectation(&e, &o).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn conditioning_pins_a_fermion_mode() {
        let e = fermions(&[0.3, -0.2, 1.0]);
        let a = Event::fock(FockPredicate::any().with_mode(0, OccupationRange::exactly(1)));
        assert_eq!(fock_conditional_expectation(&e, &[1.0, 0.0, 0.0], &a).unwrap(), 1.0);
        let r = fock_conditional_expectation_routes(&e, &[1.0, 0.0, 0.0], &a).unwrap();
        assert_eq!(r.trace, 1.0);
    }

    #[test]
    fn total_number_shell_matches_oracle() {
        let x = [0.8, 1.5];
        let e = bosons(&x, 3);
        assert_eq!(enumerate_occupations(&e).unwrap().len(), 16);
        let a = Event::fock(FockPredicate::any().with_total(OccupationRange::exactly(2)));
        let (num, den) = two_mode_oracle(x, 3, |a, b| a + b == 2, |a, _| a as f64);
        let r = fock_conditional_expectation_routes(&e, &[1.0, 0.0], &a).unwrap();
        assert_relative_eq!(r.definition, num / den, max_relative = 1e-12);
        assert_relative_eq!(r.trace, num / den, max_relative = 1e-12);
    }

    #[test]
    fn conditioning_errors() {
        let e = fermions(&[0.0, 1.0]);
        let impossible = Event::fock(FockPredicate::any().with_total(OccupationRange::exactly(3)));
        assert!(matches!(fock_conditional_expectation(&e, &[1.0, 1.0], &impossible), Err(Error::ZeroConditionEvent { .. })));
        let bad_mode = Event::fock(FockPredicate::any().with_mode(2, OccupationRange::exactly(0)));
        assert!(fock_conditional_expectation(&e, &[1.0, 1.0], &bad_mode).is_err());
        assert!(fock_conditional_expectation(&e, &[1.0, 1.0], &Event::discrete([0])).is_err());
        let huge = FockEnsemble::new(vec![1.0; 8], 1.0, 0.0, Statistics::Boson { n_max: 10 }).unwrap();
        assert!(matches!(
            fock_conditional_expectation(&huge, &[1.0; 8], &Event::fock(FockPredicate::any())),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn fock_probabilities() {
        let e = fermions(&[0.0, 0.0]);
        let n0 = Event::fock(FockPredicate::any().with_mode(0, OccupationRange::exactly(1)));
        let n_total = Event::fock(FockPredicate::any().with_total(OccupationRange::new(1, 2)));
        assert_abs_diff_eq!(fock_absolute_probability(&e, &n0).unwrap(), 0.5, epsilon = 1e-15);
        // oracle: four equally likely vectors, B keeps three, A∩B keeps two
        assert_abs_diff_eq!(fock_conditional_probability(&e, &n0, &n_total).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn boson_truncation_convergence() {
        for x in [0.5, 1.0, 3.0] {
            let lo = bosons(&[x], 50);
            let hi = bosons(&[x], 100);
            assert!(mode_partition(&hi, 0).unwrap() >= mode_partition(&lo, 0).unwrap());
            assert!(mean_occupation(&hi, 0).unwrap() >= mean_occupation(&lo, 0).unwrap());
            assert!((mode_partition(&hi, 0).unwrap() - mode_partition(&lo, 0).unwrap()).abs() < 1e-10);
            // oracle: truncated geometric mean 1/(e^x − 1) − (N+1)/(e^{x(N+1)} − 1)
            for (e, n_max) in [(&lo, 50.0), (&hi, 100.0)] {
                let oracle = 1.0 / x.exp_m1() - (n_max + 1.0) / (x * (n_max + 1.0)).exp_m1();
                assert_relative_eq!(mean_occupation(e, 0).unwrap(), oracle, max_relative = 1e-12);
            }
        }
        let mut prev = (0.0, 0.0);
        for n_max in 1..=12 {
            let e = bosons(&[0.3], n_max);
            let cur = (mode_partition(&e, 0).unwrap(), mean_occupation(&e, 0).unwrap());
            assert!(cur.0 > prev.0 && cur.1 > prev.1);
            prev = cur;
        }
    }

    fn ensemble() -> impl Strategy<Value = FockEnsemble> {
        (prop::collection::vec(0.05f64..3.0, 1..=3), 0.2f64..3.0, prop::bool::ANY, 1u32..=5).prop_map(|(eps, beta, fermi, n_max)| {
            let stats = if fermi { Statistics::Fermion } else { Statistics::Boson { n_max } };
            FockEnsemble::new(eps, beta, 0.0, stats).unwrap()
        })
    }

    proptest! {
        #[test]
        fn factorization_matches_enumeration(e in ensemble()) {
            let lhs = log_grand_partition(&e);
            let rhs = log_grand_partition_enumerated(&e).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }

        #[test]
        fn occupation_probabilities_normalize(e in ensemble()) {
            for j in 0..e.modes() {
                let total: f64 = (0..=e.statistics().cap()).map(|n| occupation_probability(&e, j, n).unwrap()).sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn equilibrium_state_reproduces_expectation(e in ensemble(), a in prop::collection::vec(-2.0f64..2.0, 3)) {
            let a = &a[..e.modes()];
            let state = EquilibriumState::new(&e).unwrap();
            prop_assert!((state.rho.trace() - 1.0).abs() < 1e-12);
            let via_state: f64 = state.observable(a).iter().zip(state.probabilities()).map(|(o, p)| o * p).sum();
            prop_assert!((via_state - linear_observable_expectation(&e, a).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn fermion_occupancy_is_bounded(eps in prop::collection::vec(-5.0f64..5.0, 1..4), beta in 0.01f64..20.0) {
            let e = FockEnsemble::new(eps, beta, 0.0, Statistics::Fermion).unwrap();
            for j in 0..e.modes() {
                let n = mean_occupation(&e, j).unwrap();
                prop_assert!((0.0..=1.0).contains(&n));
            }
        }

        #[test]
        fn fock_routes_agree(e in ensemble(), total in 0u32..4) {
            let a = Event::fock(FockPredicate::any().with_total(OccupationRange::new(0, total)));
            let o: Vec<f64> = (0..e.modes()).map(|j| j as f64 + 0.5).collect();
            let r = fock_conditional_expectation_routes(&e, &o, &a).unwrap();
            prop_assert!(r.discrepancy() < 1e-12);
        }
    }
}
