//! Position-space states sampled on uniform grids, in one and two dimensions.

mod axis;
mod state1d;
mod state2d;

pub use axis::UniformGrid;
pub use state1d::{
    absolute_probability_1d, conditional_expectation_1d, conditional_expectation_1d_routes, conditional_probability_1d,
    conditional_probability_1d_routes, expectation_1d, gaussian_amplitude, GridState1D,
};
pub use state2d::{
    absolute_probability_2d, apply_coordinate, axis_conditional_expectation, ce_borel_2d, ce_borel_2d_routes,
    ce_given_point, ce_given_point_routes, conditional_probability_2d, cp_given_point, independence_check,
    marginals_2d, point_marginal_density, row_conditional_density, Axis, GridState2D, IndependenceReport,
};
