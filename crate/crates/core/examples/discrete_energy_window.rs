//! Conditional energy of a truncated coherent state, given an energy window.

use num_complex::Complex64;
use qprob::discrete::{self, DiscreteState};

fn main() -> qprob::Result<()> {
    let levels = 30;
    let alpha = Complex64::new(1.5, 0.0);
    let eps: Vec<f64> = (0..levels).map(|n| n as f64 + 0.5).collect();
    let mut c = Complex64::new(1.0, 0.0);
    let amps: Vec<Complex64> = (0..levels)
        .map(|n| {
            if n > 0 {
                c = c * alpha / (n as f64).sqrt();
            }
            c
        })
        .collect();
    let s = DiscreteState::new(eps, amps)?;

    println!("E[H] = {:.6}", discrete::expectation(&s));
    for (lo, hi) in [(0.0, 2.0), (2.0, 5.0), (5.0, 100.0)] {
        let a = s.event_in_range(lo, hi);
        let routes = discrete::conditional_expectation_routes(&s, &a)?;
        println!(
            "window [{lo}, {hi}]: P = {:.6}, E[H|A] = {:.6} (trace route {:.6})",
            discrete::absolute_probability(&s, &a)?,
            routes.definition,
            routes.trace
        );
    }
    Ok(())
}
