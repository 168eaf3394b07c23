//! Conditioning momentum on a sharp position: divergence study and the
//! complex quasi-conditional momentum distribution.

use qprob::grid::{self, GridState1D, UniformGrid};
use qprob::noncommutative::{self as nc, Boundary};

fn main() -> qprob::Result<()> {
    let base = UniformGrid::spanning(-10.0, 10.0, 257)?;
    let psi = grid::gaussian_amplitude(0.0, 1.0, 0.0);
    for x in [0.0, 1.0] {
        let report = nc::ce_momentum_given_position(&psi, base, x, 4, 1.0, Boundary::Zero)?;
        println!("x = {x}: {:?}", report.verdict);
        for r in &report.refinements {
            println!("  dx = {:.5}  |value| = {:.6e}  finite part = {:.6}", r.dx, r.magnitude, r.finite_part);
        }
    }

    let s = GridState1D::from_fn(UniformGrid::cell_centered(-12.0, 12.0, 1024)?, grid::gaussian_amplitude(0.0, 1.0, 1.0))?;
    for x in [-1.0, 0.0, 0.5] {
        let q = nc::quasi_cp_momentum_given_position(&s, x, 1.0)?;
        println!("x = {:.4}: sum of P(p|x) dp = {:.12}", q.x, q.total());
    }
    Ok(())
}
