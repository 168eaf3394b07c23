//! Two-level Rabi oscillation: excited-state probability against sin²t.

use num_complex::Complex64;
use qprob::evolution::{HamiltonianMatrix, TimeEvolution};
use qprob::Event;

fn main() -> qprob::Result<()> {
    let h = HamiltonianMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0])?;
    let psi0 = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let evo = TimeEvolution::new(psi0, h, vec![0.0, 1.0], 1.0)?;
    let excited = Event::discrete([1]);

    println!("{:>6} {:>12} {:>12} {:>10}", "t", "AP(excited)", "sin^2 t", "purity");
    for k in 0..=10 {
        let t = 0.5 * k as f64;
        println!("{t:>6.2} {:>12.9} {:>12.9} {:>10.6}", evo.ap(&excited, t)?, t.sin().powi(2), evo.density_at(t).purity());
    }
    Ok(())
}
