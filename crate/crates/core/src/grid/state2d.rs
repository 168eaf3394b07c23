use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use super::state1d::masked_sum;
use super::UniformGrid;
use crate::probability::{cdo, event_intersect, indicator_trace, normalized_cdo_trace, Basis, DensityOperator, Event, Indicator, RouteComparison};
use crate::tolerance::check_condition;
use crate::{Error, Result};

/// Coordinate axis of a two-dimensional grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Joint wavefunction samples `ψ_{jk} = Ψ(x_j, y_k)`, normalized so that
/// `ΣΣ |ψ_{jk}|² dx dy = 1`. Stored row-major with `x` as the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState2D {
    gx: UniformGrid,
    gy: UniformGrid,
    rho: DensityOperator,
}

impl GridState2D {
    pub fn from_samples(gx: UniformGrid, gy: UniformGrid, psi: Array2<Complex64>) -> Result<Self> {
        if psi.dim() != (gx.len(), gy.len()) {
            return Err(Error::DimensionMismatch { expected: gx.len() * gy.len(), found: psi.len() });
        }
        let flat: Vec<Complex64> = psi.iter().copied().collect();
        let rho = DensityOperator::new(Basis::Grid2D(gx, gy), flat)?;
        Ok(Self { gx, gy, rho })
    }

    pub fn from_fn<F: Fn(f64, f64) -> Complex64>(gx: UniformGrid, gy: UniformGrid, f: F) -> Result<Self> {
        let psi = Array2::from_shape_fn((gx.len(), gy.len()), |(j, k)| f(gx.point(j), gy.point(k)));
        Self::from_samples(gx, gy, psi)
    }

    /// Product state `Ψ₁(x) Ψ₂(y)`.
    pub fn separable<F, G>(gx: UniformGrid, gy: UniformGrid, f: F, g: G) -> Result<Self>
    where
        F: Fn(f64) -> Complex64,
        G: Fn(f64) -> Complex64,
    {
        let fx: Vec<Complex64> = gx.points().map(f).collect();
        let gy_vals: Vec<Complex64> = gy.points().map(g).collect();
        let psi = Array2::from_shape_fn((gx.len(), gy.len()), |(j, k)| fx[j] * gy_vals[k]);
        Self::from_samples(gx, gy, psi)
    }

    /// Real amplitude `sqrt(N₂(x, y))` of a zero-mean bivariate normal with
    /// standard deviations `sx`, `sy` and correlation `corr`.
    pub fn bivariate_normal(gx: UniformGrid, gy: UniformGrid, sx: f64, sy: f64, corr: f64) -> Result<Self> {
        if sx.is_nan() || sy.is_nan() || corr.is_nan() || sx <= 0.0 || sy <= 0.0 || corr.abs() >= 1.0 {
            return Err(Error::InvalidState(format!("bivariate normal needs sx, sy > 0 and |corr| < 1 (got {sx}, {sy}, {corr})")));
        }
        let q = 1.0 - corr * corr;
        Self::from_fn(gx, gy, move |x, y| {
            let (u, v) = (x / sx, y / sy);
            let exponent = -(u * u - 2.0 * corr * u * v + v * v) / (2.0 * q);
            Complex64::new((0.5 * exponent).exp(), 0.0)
        })
    }

    /// Particle in the box `[0, lx] × [0, ly]` with quantum numbers `(qx, qy)`.
    pub fn box_eigenstate(gx: UniformGrid, gy: UniformGrid, lx: f64, ly: f64, qx: u32, qy: u32) -> Result<Self> {
        if qx == 0 || qy == 0 {
            return Err(Error::InvalidState("box quantum numbers start at 1".into()));
        }
        let inside = move |x: f64, l: f64| (0.0..=l).contains(&x);
        Self::from_fn(gx, gy, move |x, y| {
            if inside(x, lx) && inside(y, ly) {
                let v = (qx as f64 * std::f64::consts::PI * x / lx).sin() * (qy as f64 * std::f64::consts::PI * y / ly).sin();
                Complex64::new(v, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn grid_x(&self) -> &UniformGrid {
        &self.gx
    }

    pub fn grid_y(&self) -> &UniformGrid {
        &self.gy
    }

    pub fn grid(&self, axis: Axis) -> &UniformGrid {
        match axis {
            Axis::X => &self.gx,
            Axis::Y => &self.gy,
        }
    }

    pub fn density(&self) -> &DensityOperator {
        &self.rho
    }

    pub fn psi(&self) -> ArrayView2<'_, Complex64> {
        ArrayView2::from_shape((self.gx.len(), self.gy.len()), self.rho.amplitudes()).expect("shape fixed at construction")
    }

    /// Joint density `P(x_j, y_k) = |ψ_{jk}|²`.
    pub fn joint_density(&self) -> Array2<f64> {
        self.psi().mapv(|c| c.norm_sqr())
    }

    /// Values of `g(x_j, y_k)` on the grid, flattened in storage order.
    fn sample_observable<G: Fn(f64, f64) -> f64>(&self, g: G, within: &Indicator) -> Result<Vec<f64>> {
        let mut values = Vec::with_capacity(self.rho.dim());
        for j in 0..self.gx.len() {
            let x = self.gx.point(j);
            for k in 0..self.gy.len() {
                let y = self.gy.point(k);
                let v = g(x, y);
                if !v.is_finite() && within.contains(j * self.gy.len() + k) {
                    return Err(Error::NonFiniteObservable { x, y });
                }
                values.push(if v.is_finite() { v } else { 0.0 });
            }
        }
        Ok(values)
    }
}

/// Multiplies the amplitudes by the chosen coordinate, `X̂ψ` or `Ŷψ`.
pub fn apply_coordinate(s: &GridState2D, psi: &Array2<Complex64>, axis: Axis) -> Array2<Complex64> {
    let mut out = psi.clone();
    for ((j, k), c) in out.indexed_iter_mut() {
        *c *= match axis {
            Axis::X => s.gx.point(j),
            Axis::Y => s.gy.point(k),
        };
    }
    out
}

/// `E[g(X̂,Ŷ)|A] = ∬_A g |Ψ|² / ∬_A |Ψ|²`.
pub fn ce_borel_2d<G: Fn(f64, f64) -> f64>(s: &GridState2D, g: G, a: &Event) -> Result<f64> {
    Ok(ce_borel_2d_routes(s, g, a)?.definition)
}

/// Joint conditional density `P(x,y|A)` integrated against `g`, against
/// `Tr{g(X̂,Ŷ) ρ_A} / Tr{ρ_A}`.
pub fn ce_borel_2d_routes<G: Fn(f64, f64) -> f64>(s: &GridState2D, g: G, a: &Event) -> Result<RouteComparison> {
    let ind = Indicator::new(a, s.rho.basis())?;
    let values = s.sample_observable(g, &ind)?;
    let weights = s.rho.probabilities();
    let mass = check_condition(masked_sum(&weights, &ind))?;
    let definition = values
        .iter()
        .zip(&weights)
        .zip(ind.mask())
        .filter(|(_, &m)| m)
        .map(|((v, w), _)| v * (w / mass))
        .sum();
    let trace = cdo(&s.rho, a)?.conditional_expectation(&values)?;
    Ok(RouteComparison { definition, trace })
}

pub fn absolute_probability_2d(s: &GridState2D, a: &Event) -> Result<f64> {
    indicator_trace(&s.rho, a)
}

pub fn conditional_probability_2d(s: &GridState2D, a: &Event, b: &Event) -> Result<RouteComparison> {
    let given = check_condition(absolute_probability_2d(s, b)?)?;
    let joint = absolute_probability_2d(s, &event_intersect(a, b)?)?;
    Ok(RouteComparison { definition: joint / given, trace: normalized_cdo_trace(&s.rho, a, b)? })
}

/// Marginal densities `P(x) = ∫ dy |Ψ|²` and `P(y) = ∫ dx |Ψ|²`.
pub fn marginals_2d(s: &GridState2D) -> (Vec<f64>, Vec<f64>) {
    let p = s.joint_density();
    let px = p.sum_axis(ndarray::Axis(1)).mapv(|v| v * s.gy.dx()).to_vec();
    let py = p.sum_axis(ndarray::Axis(0)).mapv(|v| v * s.gx.dx()).to_vec();
    (px, py)
}

/// Outcome of [`independence_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndependenceReport {
    pub independent: bool,
    /// `max_{j,k} |P(x_j,y_k) − P(x_j) P(y_k)|`.
    pub max_deviation: f64,
}

/// Tests whether the joint density factorizes into its marginals.
pub fn independence_check(s: &GridState2D, tol: f64) -> IndependenceReport {
    let p = s.joint_density();
    let (px, py) = marginals_2d(s);
    let max_deviation = p
        .indexed_iter()
        .map(|((j, k), &v)| (v - px[j] * py[k]).abs())
        .fold(0.0, f64::max);
    IndependenceReport { independent: max_deviation <= tol, max_deviation }
}

/// `E[X̂|A]` or `E[Ŷ|A]` from the joint density.
pub fn axis_conditional_expectation(s: &GridState2D, axis: Axis, a: &Event) -> Result<f64> {
    match axis {
        Axis::X => ce_borel_2d(s, |x, _| x, a),
        Axis::Y => ce_borel_2d(s, |_, y| y, a),
    }
}

/// `E[X|Y=y] = ∫ x |Ψ(x,y)|² dx / ∫ |Ψ(x,y)|² dx` on the grid row nearest to `y`.
pub fn ce_given_point(s: &GridState2D, y: f64) -> Result<f64> {
    Ok(ce_given_point_routes(s, y)?.definition)
}

/// Row conditional density against `Tr{X̂ ρ_Y} / Tr{ρ_Y}` with `I_Y` the
/// single-row indicator (the `1/dy` point weight cancels in the ratio).
pub fn ce_given_point_routes(s: &GridState2D, y: f64) -> Result<RouteComparison> {
    let k = s.gy.nearest_index(y);
    let cond = row_conditional_density(s, k)?;
    let dx = s.gx.dx();
    let definition = s.gx.points().zip(&cond).map(|(x, p)| x * p * dx).sum();
    let row = Event::product(vec![Event::whole_line(), Event::discrete([k])])?;
    let xs: Vec<f64> = (0..s.rho.dim()).map(|i| s.gx.point(i / s.gy.len())).collect();
    let trace = cdo(&s.rho, &row)?.conditional_expectation(&xs)?;
    Ok(RouteComparison { definition, trace })
}

/// Conditional density `P(x|Y=y) = |Ψ(x,y)|² / ∫ |Ψ(x',y)|² dx'`, both
/// coordinates snapped to the nearest grid point.
pub fn cp_given_point(s: &GridState2D, x: f64, y: f64) -> Result<f64> {
    let cond = row_conditional_density(s, s.gy.nearest_index(y))?;
    Ok(cond[s.gx.nearest_index(x)])
}

/// Full conditional density row `P(x_j|Y=y_k)`.
pub fn row_conditional_density(s: &GridState2D, k: usize) -> Result<Vec<f64>> {
    let col = s.psi().column(k).mapv(|c| c.norm_sqr());
    let row_mass = check_condition(col.sum() * s.gx.dx())?;
    Ok(col.iter().map(|p| p / row_mass).collect())
}

/// Marginal density of `Y` at the row nearest `y`, `∫ dx |Ψ(x,y)|²`.
pub fn point_marginal_density(s: &GridState2D, y: f64) -> f64 {
    let k = s.gy.nearest_index(y);
    s.psi().column(k).iter().map(|c| c.norm_sqr()).sum::<f64>() * s.gx.dx()
}
