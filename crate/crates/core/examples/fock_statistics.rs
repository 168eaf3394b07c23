//! Grand-canonical occupation statistics for fermions and bosons.

use qprob::fock::{self, FockEnsemble, Statistics};
use qprob::probability::{FockPredicate, OccupationRange};
use qprob::Event;

fn main() -> qprob::Result<()> {
    let eps = vec![0.5, 1.0, 1.5];
    for (name, stats, mu) in [("fermions", Statistics::Fermion, 0.8), ("bosons", Statistics::Boson { n_max: 12 }, 0.2)] {
        let e = FockEnsemble::new(eps.clone(), 1.0, mu, stats)?;
        println!("{name}: Z_G = {:.9} (enumerated {:.9})", fock::grand_partition(&e), fock::log_grand_partition_enumerated(&e)?.exp());
        for j in 0..e.modes() {
            println!("  <n_{j}> = {:.6}", fock::mean_occupation(&e, j)?);
        }
        let total = vec![1.0; e.modes()];
        for shell in 0..=2 {
            let a = Event::fock(FockPredicate::any().with_total(OccupationRange::exactly(shell)));
            let n0 = fock::fock_conditional_expectation(&e, &[1.0, 0.0, 0.0], &a)?;
            println!("  P(N = {shell}) = {:.6}, E[n_0 | N = {shell}] = {n0:.6}", fock::fock_absolute_probability(&e, &a)?);
        }
        println!("  E[N] = {:.6}", fock::linear_observable_expectation(&e, &total)?);
    }
    Ok(())
}
