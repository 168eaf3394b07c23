//! The conditional density operator ρ_A = ρ I_A and the traces built on it.

use num_complex::Complex64;
use qprob::probability::{cdo, Basis, DensityOperator, Event, Indicator};

fn main() -> qprob::Result<()> {
    let amps = vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.48), Complex64::new(0.64, 0.0)];
    let rho = DensityOperator::new(Basis::Discrete { dim: 3 }, amps)?;
    let energies = [1.0, 2.0, 3.0];

    let a = Event::discrete([1, 2]);
    let b = Event::discrete([0, 1]);
    let rho_a = cdo(&rho, &a)?;
    let ib = Indicator::new(&b, rho.basis())?;

    println!("Tr ρ = {:.6}, Tr ρ² = {:.6}", rho.trace(), rho.purity());
    println!("Tr ρ_A = P(A) = {:.6}", rho_a.trace());
    println!("E[H | A] = Tr[H ρ_A] / Tr ρ_A = {:.6}", rho_a.conditional_expectation(&energies)?);
    println!("P(B | A) = Tr[ρ_A I_B] / Tr ρ_A = {:.6}", rho_a.normalized_trace(&ib)?);
    Ok(())
}
