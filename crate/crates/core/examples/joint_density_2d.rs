//! Correlated and independent joint position distributions.

use qprob::grid::{self, GridState2D, UniformGrid};

fn main() -> qprob::Result<()> {
    let g = UniformGrid::spanning(-8.0, 8.0, 257)?;
    let correlated = GridState2D::bivariate_normal(g, g, 1.0, 1.0, 0.5)?;
    let independent = GridState2D::separable(g, g, grid::gaussian_amplitude(0.0, 1.0, 0.0), grid::gaussian_amplitude(0.0, 1.0, 0.0))?;

    for (name, s) in [("correlated", &correlated), ("independent", &independent)] {
        let report = grid::independence_check(s, 1e-10);
        println!("{name}: independent = {}, max deviation = {:.3e}", report.independent, report.max_deviation);
        println!("  E[XY] = {:.6}", grid::ce_borel_2d(s, |x, y| x * y, &qprob::Event::whole_plane())?);
        for y in [-1.0, 0.0, 1.0] {
            println!("  E[X | Y = {y}] = {:.6}", grid::ce_given_point(s, y)?);
        }
    }
    Ok(())
}
