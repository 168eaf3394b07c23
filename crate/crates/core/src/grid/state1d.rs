use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use super::UniformGrid;
use crate::probability::{cdo, event_intersect, indicator_trace, normalized_cdo_trace, Basis, DensityOperator, Event, Indicator, RouteComparison};
use crate::tolerance::check_condition;
use crate::{Error, Result};

/// Wavefunction samples `ψ_j = Ψ(x_j)` on a uniform grid, normalized so that
/// `Σ |ψ_j|² dx = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState1D {
    grid: UniformGrid,
    rho: DensityOperator,
}

impl GridState1D {
    pub fn from_samples(grid: UniformGrid, psi: Vec<Complex64>) -> Result<Self> {
        let rho = DensityOperator::new(Basis::Grid1D(grid), psi)?;
        Ok(Self { grid, rho })
    }

    /// Samples a closed-form wavefunction and renormalizes on the grid.
    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: UniformGrid, f: F) -> Result<Self> {
        Self::from_samples(grid, grid.points().map(f).collect())
    }

    /// Gaussian packet whose density `|ψ|²` is normal with mean `center`
    /// and standard deviation `sigma`, carrying wavenumber `k0`.
    pub fn gaussian(grid: UniformGrid, center: f64, sigma: f64, k0: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidState(format!("gaussian sigma = {sigma} must be positive")));
        }
        Self::from_fn(grid, gaussian_amplitude(center, sigma, k0))
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn psi(&self) -> &[Complex64] {
        self.rho.amplitudes()
    }

    pub fn density(&self) -> &DensityOperator {
        &self.rho
    }

    /// Probability density `|ψ_j|²` at each sample point.
    pub fn probability_density(&self) -> Vec<f64> {
        self.psi().iter().map(|c| c.norm_sqr()).collect()
    }

    /// Position values `x_j`, the diagonal of `X̂`.
    pub fn positions(&self) -> Vec<f64> {
        self.grid.points().collect()
    }

    /// The same samples on a grid translated by `delta`.
    pub fn shifted(&self, delta: f64) -> Self {
        let grid = self.grid.shifted(delta);
        Self { grid, rho: DensityOperator::from_raw(Basis::Grid1D(grid), self.psi().to_vec()) }
    }

    /// Reads a state file: `key = value` header lines for `x0`, `dx`, `n`,
    /// followed by `index re im` rows. Lines starting with `#` are comments.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut x0 = None;
        let mut dx = None;
        let mut n: Option<usize> = None;
        let mut psi: Vec<Option<Complex64>> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let perr = |message: String| Error::Parse { line, message };
            if let Some((key, value)) = content.split_once('=') {
                if !psi.is_empty() {
                    return Err(perr("header line after data rows".into()));
                }
                let value = value.trim();
                match key.trim() {
                    "x0" => x0 = Some(parse_f64(value).map_err(perr)?),
                    "dx" => dx = Some(parse_f64(value).map_err(perr)?),
                    "n" => {
                        let count: usize = value.parse().map_err(|_| perr(format!("n = {value:?} is not a count")))?;
                        n = Some(count);
                    }
                    other => return Err(perr(format!("unknown header key {other:?}"))),
                }
                continue;
            }
            let count = n.ok_or_else(|| perr("data row before `n = ...` header".into()))?;
            if psi.is_empty() {
                psi = vec![None; count];
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(perr(format!("expected `index re im`, found {} fields", fields.len())));
            }
            let idx: usize = fields[0].parse().map_err(|_| perr(format!("bad index {:?}", fields[0])))?;
            let re = parse_f64(fields[1]).map_err(perr)?;
            let im = parse_f64(fields[2]).map_err(perr)?;
            let slot = psi.get_mut(idx).ok_or_else(|| perr(format!("index {idx} out of range for n = {count}")))?;
            if slot.is_some() {
                return Err(perr(format!("duplicate index {idx}")));
            }
            *slot = Some(Complex64::new(re, im));
        }
        let missing = |k: &str| Error::Parse { line: 0, message: format!("missing header `{k} = ...`") };
        let grid = UniformGrid::new(x0.ok_or_else(|| missing("x0"))?, dx.ok_or_else(|| missing("dx"))?, n.ok_or_else(|| missing("n"))?)?;
        if psi.is_empty() {
            return Err(Error::Parse { line: 0, message: "no data rows".into() });
        }
        let samples = psi
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.ok_or(Error::Parse { line: 0, message: format!("missing row for index {i}") }))
            .collect::<Result<Vec<_>>>()?;
        Self::from_samples(grid, samples)
    }

    /// Inverse of [`GridState1D::parse`].
    pub fn to_file_string(&self) -> String {
        let mut out = String::from("# qprob grid state: header then `index re im` rows\n");
        let _ = writeln!(out, "x0 = {}", self.grid.x0());
        let _ = writeln!(out, "dx = {}", self.grid.dx());
        let _ = writeln!(out, "n = {}", self.grid.len());
        for (j, c) in self.psi().iter().enumerate() {
            let _ = writeln!(out, "{j} {} {}", c.re, c.im);
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_file_string())?;
        Ok(())
    }
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("{s:?} is not a finite number")),
    }
}

/// `exp(-(x - center)² / (4σ²) + i k0 x)`, unnormalized.
pub fn gaussian_amplitude(center: f64, sigma: f64, k0: f64) -> impl Fn(f64) -> Complex64 + Clone {
    move |x| {
        let d = x - center;
        Complex64::from_polar((-d * d / (4.0 * sigma * sigma)).exp(), k0 * x)
    }
}

/// `E[X̂] = ∫ x |Ψ(x)|² dx` by midpoint quadrature.
pub fn expectation_1d(s: &GridState1D) -> f64 {
    s.rho.probabilities().iter().zip(s.grid.points()).map(|(p, x)| x * p).sum()
}

/// `E[X̂|A] = ∫_A x |Ψ|² dx / ∫_A |Ψ|² dx`.
pub fn conditional_expectation_1d(s: &GridState1D, a: &Event) -> Result<f64> {
    Ok(conditional_expectation_1d_routes(s, a)?.definition)
}

/// Conditional density `P(x|A)` integrated against `x`, against `Tr[X̂ ρ_A] / Tr[ρ_A]`.
pub fn conditional_expectation_1d_routes(s: &GridState1D, a: &Event) -> Result<RouteComparison> {
    let ind = Indicator::new(a, s.rho.basis())?;
    let density = s.probability_density();
    let dx = s.grid.dx();
    let mass = check_condition(dx * masked_sum(&density, &ind))?;
    let definition = s
        .grid
        .points()
        .zip(&density)
        .zip(ind.mask())
        .filter(|(_, &m)| m)
        .map(|((x, &p), _)| dx * x * (p / mass))
        .sum();
    let trace = cdo(&s.rho, a)?.conditional_expectation(&s.positions())?;
    Ok(RouteComparison { definition, trace })
}

/// `P(A) = ∫_A |Ψ|² dx = Tr[ρ_A]`.
pub fn absolute_probability_1d(s: &GridState1D, a: &Event) -> Result<f64> {
    indicator_trace(&s.rho, a)
}

/// `P(A|B) = Tr[ρ_{A∩B}] / Tr[ρ_B]`.
pub fn conditional_probability_1d(s: &GridState1D, a: &Event, b: &Event) -> Result<f64> {
    Ok(conditional_probability_1d_routes(s, a, b)?.definition)
}

pub fn conditional_probability_1d_routes(s: &GridState1D, a: &Event, b: &Event) -> Result<RouteComparison> {
    let given = check_condition(absolute_probability_1d(s, b)?)?;
    let joint = absolute_probability_1d(s, &event_intersect(a, b)?)?;
    Ok(RouteComparison { definition: joint / given, trace: normalized_cdo_trace(&s.rho, a, b)? })
}

pub(crate) fn masked_sum(values: &[f64], ind: &Indicator) -> f64 {
    values.iter().zip(ind.mask()).filter(|(_, &m)| m).map(|(v, _)| v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn std_normal(n: usize) -> GridState1D {
        GridState1D::gaussian(UniformGrid::cell_centered(-8.0, 8.0, n).unwrap(), 0.0, 1.0, 0.0).unwrap()
    }

    /// Independent composite-Simpson oracle for ∫ f over [lo, hi].
    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
        let h = (hi - lo) / panels as f64;
        let mut s = f(lo) + f(hi);
        for i in 1..panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(lo + i as f64 * h);
        }
        s * h / 3.0
    }

    fn phi(x: f64) -> f64 {
        (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    #[test]
    fn normalized_on_grid() {
        let s = std_normal(1000);
        assert_abs_diff_eq!(s.density().trace(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn centered_gaussian_mean_is_zero() {
        assert_abs_diff_eq!(expectation_1d(&std_normal(4096)), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn shifted_gaussian_mean() {
        let g = UniformGrid::cell_centered(1.5 - 8.0, 1.5 + 8.0, 4096).unwrap();
        let s = GridState1D::gaussian(g, 1.5, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(expectation_1d(&s), 1.5, epsilon = 1e-6);
    }

    #[test]
    fn translation_covariance() {
        let s = GridState1D::gaussian(UniformGrid::cell_centered(-6.0, 7.0, 900).unwrap(), 0.3, 0.8, 1.0).unwrap();
        let moved = s.shifted(2.25);
        assert_abs_diff_eq!(expectation_1d(&moved), expectation_1d(&s) + 2.25, epsilon = 1e-8);
    }

    #[test]
    fn ce_on_symmetric_interval() {
        let s = std_normal(4096);
        let a = Event::interval(-1.3, 1.3).unwrap();
        assert_abs_diff_eq!(conditional_expectation_1d(&s, &a).unwrap(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn half_normal_mean() {
        let s = std_normal(4096);
        let a = Event::interval(0.0, 8.0).unwrap();
        let oracle = simpson(|x| x * phi(x), 0.0, 8.0, 20_000) / simpson(phi, 0.0, 8.0, 20_000);
        let ce = conditional_expectation_1d(&s, &a).unwrap();
        assert_abs_diff_eq!(ce, oracle, epsilon = 5e-4);
        assert_abs_diff_eq!(ce, (2.0 / std::f64::consts::PI).sqrt(), epsilon = 5e-4);
    }

    #[test]
    fn ce_over_omega_is_expectation() {
        let s = GridState1D::gaussian(UniformGrid::cell_centered(-8.0, 9.0, 2000).unwrap(), 0.7, 1.1, 2.0).unwrap();
        assert_abs_diff_eq!(conditional_expectation_1d(&s, &Event::whole_line()).unwrap(), expectation_1d(&s), epsilon = 1e-12);
    }

    #[test]
    fn ap_examples() {
        let s = std_normal(4096);
        assert_abs_diff_eq!(absolute_probability_1d(&s, &Event::whole_line()).unwrap(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(absolute_probability_1d(&s, &Event::interval(0.0, f64::INFINITY).unwrap()).unwrap(), 0.5, epsilon = 1e-6);
        let oracle = simpson(phi, -1.0, 1.0, 2000);
        let ap = absolute_probability_1d(&s, &Event::interval(-1.0, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(ap, oracle, epsilon = 5e-4);
        assert_abs_diff_eq!(ap, 0.682_689_492_137_085_9, epsilon = 5e-4);
    }

    #[test]
    fn cp_examples() {
        let s = std_normal(4096);
        let b = Event::interval(0.0, 2.0).unwrap();
        assert_abs_diff_eq!(conditional_probability_1d(&s, &Event::interval(-1.0, 3.0).unwrap(), &b).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(conditional_probability_1d(&s, &Event::interval(-3.0, -1.0).unwrap(), &b).unwrap(), 0.0);
        let oracle = simpson(phi, 0.0, 1.0, 2000) / simpson(phi, 0.0, 2.0, 2000);
        let cp = conditional_probability_1d(&s, &Event::interval(0.0, 1.0).unwrap(), &b).unwrap();
        assert_abs_diff_eq!(cp, oracle, epsilon = 1e-3);
    }

    #[test]
    fn empty_interval_condition_fails() {
        let s = std_normal(256);
        let err = conditional_expectation_1d(&s, &Event::interval(20.0, 30.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::ZeroConditionEvent { .. }));
    }

    #[test]
    fn routes_agree_on_modulated_packet() {
        let s = GridState1D::gaussian(UniformGrid::cell_centered(-10.0, 10.0, 4096).unwrap(), -0.4, 1.7, 3.0).unwrap();
        for (lo, hi) in [(-3.0, 0.5), (1.0, 9.0), (-9.9, -2.0)] {
            let r = conditional_expectation_1d_routes(&s, &Event::interval(lo, hi).unwrap()).unwrap();
            assert!(r.discrepancy() <= 1e-10, "{r:?}");
        }
    }

    #[test]
    fn file_round_trip() {
        let s = GridState1D::gaussian(UniformGrid::cell_centered(-4.0, 4.0, 64).unwrap(), 0.2, 0.9, 1.5).unwrap();
        let parsed = GridState1D::parse(&s.to_file_string()).unwrap();
        assert_eq!(parsed.grid(), s.grid());
        for (a, b) in parsed.psi().iter().zip(s.psi()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-15);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-15);
        }
    }

    #[test]
    fn file_errors_name_the_line() {
        let bad = "x0 = 0\ndx = 0.5\nn = 2\n0 1 0\n0 1 0\n";
        assert!(matches!(GridState1D::parse(bad), Err(Error::Parse { line: 5, .. })));
        let missing = "x0 = 0\ndx = 0.5\nn = 3\n0 1 0\n1 1 0\n";
        assert!(matches!(GridState1D::parse(missing), Err(Error::Parse { .. })));
        let no_header = "0 1 0\n";
        assert!(matches!(GridState1D::parse(no_header), Err(Error::Parse { line: 1, .. })));
        let bad_key = "x1 = 0\n";
        assert!(matches!(GridState1D::parse(bad_key), Err(Error::Parse { line: 1, .. })));
    }
}
