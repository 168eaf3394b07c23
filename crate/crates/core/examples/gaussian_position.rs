//! Position statistics of a Gaussian wave packet on a uniform grid.

use qprob::grid::{self, GridState1D, UniformGrid};
use qprob::Event;

fn main() -> qprob::Result<()> {
    let g = UniformGrid::cell_centered(-8.0, 8.0, 4096)?;
    let s = GridState1D::gaussian(g, 0.0, 1.0, 0.0)?;
    let right = Event::interval(0.0, 8.0)?;

    let ce = grid::conditional_expectation_1d_routes(&s, &right)?;
    println!("E[X | X >= 0] = {:.9} (exact {:.9})", ce.definition, (2.0 / std::f64::consts::PI).sqrt());
    println!("route discrepancy = {:.2e}", ce.discrepancy());
    println!("P(X >= 0) = {:.12}", grid::absolute_probability_1d(&s, &right)?);
    println!("P(X <= 1 | X >= 0) = {:.9}", grid::conditional_probability_1d(&s, &Event::interval(0.0, 1.0)?, &right)?);
    Ok(())
}
