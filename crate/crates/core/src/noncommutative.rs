//! Position/momentum diagnostics on a uniform grid.
//!
//! `p̂ = (ħ/i) D` with `D` a central difference (or, optionally, a spectral
//! derivative). Conditioning `p̂` on a sharp position has no finite limit;
//! [`ce_momentum_given_position`] reports the refinement sequence instead of
//! a number. The quasi-conditional probability `P(p|x)` is complex but
//! integrates to one.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::grid::{GridState1D, UniformGrid};
use crate::probability::{cdo, Event};
use crate::tolerance::check_condition;
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Amplitude floor below which `P(p|x)` is not formed.
pub const QUASI_CP_AMPLITUDE_FLOOR: f64 = 1e-12;

/// Values at or below this magnitude count as zero in a divergence verdict.
pub const CONDITIONAL_ZERO: f64 = 1e-8;

/// Minimum growth per halving that marks a refinement sequence as divergent.
pub const DIVERGENCE_GROWTH: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Neighbours wrap around the ends of the grid.
    Periodic,
    /// Amplitude is taken as zero outside the grid.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Derivative {
    /// Second-order central difference.
    Central,
    /// Exact derivative of the trigonometric interpolant (periodic only).
    Spectral,
}

/// Momentum operator on a grid. Applied matrix-free; [`Self::to_dense`]
/// materializes it when a matrix is needed.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumOperator {
    grid: UniformGrid,
    hbar: f64,
    boundary: Boundary,
    derivative: Derivative,
}

/// Central-difference momentum operator.
pub fn build_momentum(grid: UniformGrid, hbar: f64, boundary: Boundary) -> Result<MomentumOperator> {
    MomentumOperator::new(grid, hbar, boundary, Derivative::Central)
}

impl MomentumOperator {
    pub fn new(grid: UniformGrid, hbar: f64, boundary: Boundary, derivative: Derivative) -> Result<Self> {
        if grid.len() < 3 {
            return Err(Error::GridTooSmall { n: grid.len(), min: 3 });
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidState(format!("hbar must be positive, got {hbar}")));
        }
        if derivative == Derivative::Spectral && boundary != Boundary::Periodic {
            return Err(Error::InvalidGrid("spectral derivative requires a periodic boundary".into()));
        }
        Ok(Self { grid, hbar, boundary, derivative })
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn derivative(&self) -> Derivative {
        self.derivative
    }

    /// `(Dψ)_j`.
    pub fn differentiate(&self, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.grid.len();
        if psi.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: psi.len() });
        }
        Ok(match self.derivative {
            Derivative::Central => {
                let h = 0.5 / self.grid.dx();
                (0..n).map(|j| (self.neighbour(psi, j, true) - self.neighbour(psi, j, false)) * h).collect()
            }
            Derivative::Spectral => spectral_derivative(psi, self.grid.dx()),
        })
    }

    /// `(p̂ψ)_j = (ħ/i)(Dψ)_j`.
    pub fn apply(&self, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        let scale = -I * self.hbar;
        Ok(self.differentiate(psi)?.into_iter().map(|d| d * scale).collect())
    }

    /// `⟨ψ|p̂|ψ⟩ = Σ ψ_j* (p̂ψ)_j dx`.
    pub fn expectation(&self, s: &GridState1D) -> Result<Complex64> {
        let p_psi = self.apply(s.psi())?;
        Ok(s.psi().iter().zip(&p_psi).map(|(c, p)| c.conj() * p).sum::<Complex64>() * self.grid.dx())
    }

    /// Dense matrix of `p̂`, column by column.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.grid.len();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            e[k] = Complex64::new(1.0, 0.0);
            let col = self.apply(&e).expect("length matches grid");
            m.set_column(k, &nalgebra::DVector::from_vec(col));
            e[k] = Complex64::new(0.0, 0.0);
        }
        m
    }

    /// `max |p̂ − p̂†|` of the dense matrix.
    pub fn hermiticity_defect(&self) -> f64 {
        let m = self.to_dense();
        (&m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `[X̂, p̂]ψ`.
    pub fn commutator_apply(&self, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        let x: Vec<f64> = self.grid.points().collect();
        let p_psi = self.apply(psi)?;
        let x_psi: Vec<Complex64> = psi.iter().zip(&x).map(|(c, &x)| c * x).collect();
        let p_x_psi = self.apply(&x_psi)?;
        Ok(x.iter().zip(p_psi).zip(p_x_psi).map(|((&x, a), b)| a * x - b).collect())
    }

    /// `⟨ψ|[X̂, p̂]|ψ⟩`, which tends to `iħ` for smooth states.
    pub fn commutator_expectation(&self, s: &GridState1D) -> Result<Complex64> {
        let c = self.commutator_apply(s.psi())?;
        Ok(s.psi().iter().zip(&c).map(|(a, b)| a.conj() * b).sum::<Complex64>() * self.grid.dx())
    }

    fn neighbour(&self, psi: &[Complex64], j: usize, forward: bool) -> Complex64 {
        let n = psi.len();
        match (forward, j, self.boundary) {
            (true, j, _) if j + 1 < n => psi[j + 1],
            (false, j, _) if j > 0 => psi[j - 1],
            (true, _, Boundary::Periodic) => psi[0],
            (false, _, Boundary::Periodic) => psi[n - 1],
            (_, _, Boundary::Zero) => Complex64::new(0.0, 0.0),
        }
    }
}

fn spectral_derivative(psi: &[Complex64], dx: f64) -> Vec<Complex64> {
    let n = psi.len();
    let mut planner = FftPlanner::new();
    let mut buf = psi.to_vec();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let m = signed_frequency(k, n);
        // The Nyquist mode of an even grid has no odd partner; its derivative is dropped.
        let wavenumber = if n.is_multiple_of(2) && k == n / 2 { 0.0 } else { 2.0 * PI * m as f64 / (n as f64 * dx) };
        *c *= I * wavenumber / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf
}

/// Maps an FFT bin `k` to its signed frequency in `[−n/2, n/2)`.
fn signed_frequency(k: usize, n: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Magnitude grows without bound as `dx → 0`.
    Divergent,
    /// Every refinement gives zero, by symmetry of the state about `x`.
    ConditionallyZero,
    /// Successive values settle.
    Converged,
}

/// One grid level of a divergence study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefinementEntry {
    pub dx: f64,
    pub n: usize,
    /// Grid point the position was snapped to.
    pub x: f64,
    /// `Tr{p̂ ρ I_x} / Tr{ρ I_x}` with `I_x I_x = δ_grid(0) I_x`.
    pub value: Complex64,
    pub magnitude: f64,
    /// `(ħ/i)(Dψ)_j / ψ_j`, the grid-independent factor.
    pub finite_part: Complex64,
    /// `δ_grid(0) = 1/dx`.
    pub singular_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub x: f64,
    pub hbar: f64,
    pub refinements: Vec<RefinementEntry>,
    /// `|v_{k+1}| / |v_k|` between successive levels.
    pub growth_ratios: Vec<f64>,
    pub verdict: Verdict,
}

/// Evaluates the sharp-position conditional momentum on one grid.
pub fn ce_momentum_at(s: &GridState1D, x: f64, op: &MomentumOperator) -> Result<RefinementEntry> {
    if s.grid() != op.grid() {
        return Err(Error::InvalidGrid("state and operator grids differ".into()));
    }
    let j = s.grid().nearest_index(x);
    let dx = s.grid().dx();
    let psi_j = s.psi()[j];
    check_condition(psi_j.norm_sqr())?;
    let p_psi = op.apply(s.psi())?;
    let finite_part = p_psi[j] / psi_j;
    let singular_factor = 1.0 / dx;
    let value = finite_part * singular_factor;
    Ok(RefinementEntry { dx, n: s.grid().len(), x: s.grid().point(j), value, magnitude: value.norm(), finite_part, singular_factor })
}

/// Conditions `p̂` on the point `x` over `halvings + 1` successively halved
/// grids, resampling `psi` at each level, and classifies the sequence.
pub fn ce_momentum_given_position<F: Fn(f64) -> Complex64>(
    psi: F,
    base: UniformGrid,
    x: f64,
    halvings: usize,
    hbar: f64,
    boundary: Boundary,
) -> Result<DivergenceReport> {
    let mut grid = base;
    let mut refinements = Vec::with_capacity(halvings + 1);
    for level in 0..=halvings {
        if level > 0 {
            grid = grid.refined();
        }
        let s = GridState1D::from_fn(grid, &psi)?;
        let op = build_momentum(grid, hbar, boundary)?;
        refinements.push(ce_momentum_at(&s, x, &op)?);
    }
    let growth_ratios: Vec<f64> = refinements.windows(2).map(|w| w[1].magnitude / w[0].magnitude).collect();
    let verdict = classify(&refinements, &growth_ratios);
    Ok(DivergenceReport { x, hbar, refinements, growth_ratios, verdict })
}

fn classify(refinements: &[RefinementEntry], growth: &[f64]) -> Verdict {
    if refinements.iter().all(|r| r.magnitude <= CONDITIONAL_ZERO) {
        return Verdict::ConditionallyZero;
    }
    if !growth.is_empty() && growth.iter().all(|&g| g >= DIVERGENCE_GROWTH) {
        return Verdict::Divergent;
    }
    let steps: Vec<f64> = refinements.windows(2).map(|w| (w[1].value - w[0].value).norm()).collect();
    if steps.len() >= 2 && steps.windows(2).all(|w| w[1] < w[0]) {
        Verdict::Converged
    } else {
        Verdict::Divergent
    }
}

/// Window-smeared conditioning `Tr{p̂ ρ I_W} / Tr{ρ I_W}` on `W = [x − w, x + w]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowEntry {
    pub half_width: f64,
    pub probability: f64,
    pub value: Complex64,
}

/// Experimental regularization: conditions on windows of shrinking width
/// instead of a point. No limit is asserted.
pub fn window_smeared_ce_momentum(s: &GridState1D, x: f64, half_widths: &[f64], op: &MomentumOperator) -> Result<Vec<WindowEntry>> {
    let p_psi = op.apply(s.psi())?;
    let dx = s.grid().dx();
    half_widths
        .iter()
        .map(|&w| {
            let window = Event::interval(x - w, x + w)?;
            let rho_w = cdo(s.density(), &window)?;
            let probability = check_condition(rho_w.trace())?;
            let mask = rho_w.indicator().mask();
            let num: Complex64 = s
                .psi()
                .iter()
                .zip(&p_psi)
                .zip(mask)
                .filter(|(_, &m)| m)
                .map(|((c, p), _)| c.conj() * p)
                .sum::<Complex64>()
                * dx;
            Ok(WindowEntry { half_width: w, probability, value: num / probability })
        })
        .collect()
}

/// Momentum-space amplitudes on the DFT-conjugate grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumAmplitudes {
    /// `p_m = m dp` in ascending order.
    pub p: Vec<f64>,
    pub dp: f64,
    /// `⟨p_m|Ψ⟩ = (dx/√(2πħ)) Σ_j ψ_j e^{−i p_m x_j/ħ}`.
    pub phi: Vec<Complex64>,
}

impl MomentumAmplitudes {
    /// `Σ_m p_m |φ_m|² dp`.
    pub fn mean_momentum(&self) -> f64 {
        self.p.iter().zip(&self.phi).map(|(p, c)| p * c.norm_sqr()).sum::<f64>() * self.dp
    }

    pub fn norm(&self) -> f64 {
        self.phi.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.dp
    }
}

pub fn momentum_amplitudes(s: &GridState1D, hbar: f64) -> MomentumAmplitudes {
    let g = s.grid();
    let n = g.len();
    let dp = 2.0 * PI * hbar / (n as f64 * g.dx());
    let mut buf = s.psi().to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let prefactor = g.dx() / (2.0 * PI * hbar).sqrt();
    let mut pairs: Vec<(f64, Complex64)> = (0..n)
        .map(|k| {
            let p = signed_frequency(k, n) as f64 * dp;
            (p, buf[k] * prefactor * Complex64::from_polar(1.0, -p * g.x0() / hbar))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (p, phi) = pairs.into_iter().unzip();
    MomentumAmplitudes { p, dp, phi }
}

/// Complex quasi-conditional probability of momentum given a position.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiConditional {
    /// Grid point the position was snapped to.
    pub x: f64,
    pub p: Vec<f64>,
    pub dp: f64,
    /// `P(p_m|x) = ⟨Ψ|p_m⟩⟨p_m|x⟩ / Ψ*(x)`.
    pub values: Vec<Complex64>,
}

impl QuasiConditional {
    /// `Σ_m P(p_m|x) dp`.
    pub fn total(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.dp
    }
}

pub fn quasi_cp_momentum_given_position(s: &GridState1D, x: f64, hbar: f64) -> Result<QuasiConditional> {
    let j = s.grid().nearest_index(x);
    let xj = s.grid().point(j);
    let psi_x = s.psi()[j];
    if psi_x.norm() <= QUASI_CP_AMPLITUDE_FLOOR {
        return Err(Error::ZeroAmplitudeAtX { x: xj, amplitude: psi_x.norm() });
    }
    let amps = momentum_amplitudes(s, hbar);
    let norm = 1.0 / ((2.0 * PI * hbar).sqrt() * psi_x.conj());
    let values = amps
        .p
        .iter()
        .zip(&amps.phi)
        .map(|(&p, phi)| phi.conj() * Complex64::from_polar(1.0, -p * xj / hbar) * norm)
        .collect();
    Ok(QuasiConditional { x: xj, p: amps.p, dp: amps.dp, values })
}
