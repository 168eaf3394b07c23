//! `qprob verify`: randomized invariant suites across every module.

use std::time::Instant;

use clap::Args;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EXIT_CONFIG, EXIT_FAILURE, EXIT_OK};
use crate::discrete::{self, DiscreteState};
use crate::evolution::{HamiltonianMatrix, Spectrum, TimeEvolution};
use crate::fock::{self, FockEnsemble, Statistics};
use crate::grid::{self, GridState1D, GridState2D, UniformGrid};
use crate::noncommutative::{self as nc, Boundary, Derivative, MomentumOperator, Verdict};
use crate::probability::{Event, FockPredicate, OccupationRange};
use crate::tolerance;

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Largest discrete dimension and Hamiltonian size drawn.
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(2..=256))]
    max_dim: u64,
    /// Run only the named suite.
    #[arg(long)]
    only: Option<String>,
    /// Test hook: add this to one amplitude after normalization.
    #[arg(long, hide = true)]
    inject_perturbation: Option<f64>,
}

struct Case {
    rng: ChaCha8Rng,
    max_dim: usize,
    scale: f64,
    perturbation: Option<f64>,
}

type Check = fn(&mut Case) -> Result<(), String>;

struct Suite {
    name: &'static str,
    cases: usize,
    check: Check,
}

const SUITES: &[Suite] = &[
    Suite { name: "discrete.normalization", cases: 200, check: discrete_normalization },
    Suite { name: "discrete.routes", cases: 1000, check: discrete_routes },
    Suite { name: "discrete.bayes", cases: 200, check: discrete_bayes },
    Suite { name: "discrete.total-expectation", cases: 200, check: discrete_total_expectation },
    Suite { name: "grid.normalization", cases: 20, check: grid_normalization },
    Suite { name: "grid.routes", cases: 20, check: grid_routes },
    Suite { name: "grid2d.marginals", cases: 10, check: grid2d_marginals },
    Suite { name: "fock.factorization", cases: 100, check: fock_factorization },
    Suite { name: "fock.occupation-normalization", cases: 100, check: fock_occupation_normalization },
    Suite { name: "fock.equilibrium", cases: 50, check: fock_equilibrium },
    Suite { name: "evolve.unitarity", cases: 20, check: evolve_unitarity },
    Suite { name: "evolve.purity", cases: 20, check: evolve_purity },
    Suite { name: "evolve.composition", cases: 20, check: evolve_composition },
    Suite { name: "evolve.energy", cases: 20, check: evolve_energy },
    Suite { name: "noncomm.hermiticity", cases: 6, check: noncomm_hermiticity },
    Suite { name: "noncomm.quasi-cp", cases: 50, check: noncomm_quasi_cp },
    Suite { name: "noncomm.divergence", cases: 5, check: noncomm_divergence },
    Suite { name: "noncomm.commutator", cases: 5, check: noncomm_commutator },
];

pub fn run(args: &VerifyArgs, scale: f64) -> i32 {
    let selected: Vec<(usize, &Suite)> = SUITES.iter().enumerate().filter(|(_, s)| args.only.as_deref().is_none_or(|o| o == s.name)).collect();
    if selected.is_empty() {
        eprintln!("qprob: unknown suite {:?}; known suites: {}", args.only.as_deref().unwrap_or(""), SUITES.iter().map(|s| s.name).collect::<Vec<_>>().join(", "));
        return EXIT_CONFIG;
    }
    let start = Instant::now();
    let mut first_failure = None;
    let mut passed = 0;
    println!("{:<32} {:>6}  {:<6} detail", "suite", "cases", "result");
    for &(index, suite) in &selected {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        rng.set_stream(index as u64);
        let mut case = Case { rng, max_dim: args.max_dim as usize, scale, perturbation: args.inject_perturbation };
        let outcome = (0..suite.cases).try_for_each(|k| (suite.check)(&mut case).map_err(|e| format!("case {k}: {e}")));
        match outcome {
            Ok(()) => {
                passed += 1;
                println!("{:<32} {:>6}  PASS", suite.name, suite.cases);
            }
            Err(detail) => {
                println!("{:<32} {:>6}  {:<6} {detail}", suite.name, suite.cases, "FAIL");
                first_failure.get_or_insert(suite.name);
            }
        }
    }
    println!("{passed}/{} suites passed in {:.2} s (seed {})", selected.len(), start.elapsed().as_secs_f64(), args.seed);
    match first_failure {
        None => EXIT_OK,
        Some(name) => {
            let mut cmd = format!("qprob verify --seed {} --max-dim {} --only {name}", args.seed, args.max_dim);
            if let Some(eps) = args.inject_perturbation {
                cmd.push_str(&format!(" --inject-perturbation {eps}"));
            }
            eprintln!("reproduce: {cmd}");
            EXIT_FAILURE
        }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib(e: crate::Error) -> String {
    e.to_string()
}

impl Case {
    fn complex(&mut self) -> Complex64 {
        Complex64::new(self.rng.random_range(-1.0..1.0), self.rng.random_range(-1.0..1.0))
    }

    fn dim(&mut self) -> usize {
        self.rng.random_range(2..=self.max_dim)
    }

    /// Random state with distinct-ish eigenvalues in [-10, 10].
    fn discrete_state(&mut self) -> Result<DiscreteState, String> {
        let dim = self.dim();
        let eps: Vec<f64> = (0..dim).map(|_| self.rng.random_range(-10.0..10.0)).collect();
        let amps: Vec<Complex64> = (0..dim).map(|_| self.complex()).collect();
        let s = DiscreteState::new(eps.clone(), amps).map_err(lib)?;
        Ok(match self.perturbation {
            Some(delta) => {
                let mut raw = s.amplitudes().to_vec();
                raw[0] += delta;
                DiscreteState::from_raw(eps, raw)
            }
            None => s,
        })
    }

    /// Random subset with at least one index.
    fn subset(&mut self, dim: usize) -> Vec<usize> {
        let mut ix: Vec<usize> = (0..dim).filter(|_| self.rng.random_bool(0.5)).collect();
        if ix.is_empty() {
            ix.push(self.rng.random_range(0..dim));
        }
        ix
    }

    fn hamiltonian(&mut self) -> Result<HamiltonianMatrix, String> {
        let n = self.rng.random_range(2..=self.max_dim.min(16));
        let a = DMatrix::from_fn(n, n, |_, _| Complex64::new(self.rng.random_range(-1.0..1.0), self.rng.random_range(-1.0..1.0)));
        HamiltonianMatrix::new((&a + a.adjoint()).scale(0.5)).map_err(lib)
    }

    fn evolution(&mut self) -> Result<TimeEvolution, String> {
        let h = self.hamiltonian()?;
        let n = h.dim();
        let psi: Vec<Complex64> = (0..n).map(|_| self.complex()).collect();
        let obs: Vec<f64> = (0..n).map(|_| self.rng.random_range(-1.0..1.0)).collect();
        TimeEvolution::new(psi, h, obs, 1.0).map_err(lib)
    }

    fn gaussian(&mut self, n: usize) -> Result<(UniformGrid, GridState1D, f64, f64), String> {
        let grid = UniformGrid::cell_centered(-12.0, 12.0, n).map_err(lib)?;
        let center = self.rng.random_range(-2.0..2.0);
        let sigma = self.rng.random_range(0.7..1.5);
        let k0 = self.rng.random_range(-2.0..2.0);
        let s = GridState1D::gaussian(grid, center, sigma, k0).map_err(lib)?;
        Ok((grid, s, center, sigma))
    }

    fn ensemble(&mut self) -> Result<FockEnsemble, String> {
        let fermion = self.rng.random_bool(0.5);
        let (modes, stats) = if fermion {
            (self.rng.random_range(1..=4), Statistics::Fermion)
        } else {
            (self.rng.random_range(1..=3), Statistics::Boson { n_max: self.rng.random_range(1..=6) })
        };
        let eps: Vec<f64> = (0..modes).map(|_| self.rng.random_range(0.1..3.0)).collect();
        let beta = self.rng.random_range(0.2..3.0);
        let mu = if fermion { self.rng.random_range(-1.0..2.0) } else { self.rng.random_range(-2.0..0.0) };
        FockEnsemble::new(eps, beta, mu, stats).map_err(lib)
    }
}

fn discrete_normalization(c: &mut Case) -> Result<(), String> {
    let s = c.discrete_state()?;
    let tol = tolerance::DISCRETE_NORM * c.scale;
    let rho = s.density();
    ensure((rho.trace() - 1.0).abs() <= tol, || format!("Tr ρ = {} (dim {})", rho.trace(), s.dim()))?;
    ensure((rho.purity() - 1.0).abs() <= tol, || format!("Tr ρ² = {}", rho.purity()))
}

fn discrete_routes(c: &mut Case) -> Result<(), String> {
    let s = c.discrete_state()?;
    let a = Event::discrete(c.subset(s.dim()));
    let b = Event::discrete(c.subset(s.dim()));
    let scale = s.value_scale();
    let tol = tolerance::DISCRETE_ROUTE * c.scale;
    let ce = discrete::conditional_expectation_routes(&s, &a).map_err(lib)?;
    ensure(ce.agrees_within(tol * scale), || format!("CE routes {} vs {} on {a}", ce.definition, ce.trace))?;
    let cp = discrete::conditional_probability_routes(&s, &a, &b).map_err(lib)?;
    ensure(cp.agrees_within(tol), || format!("CP routes {} vs {} on {a} | {b}", cp.definition, cp.trace))
}

fn discrete_bayes(c: &mut Case) -> Result<(), String> {
    let s = c.discrete_state()?;
    let a = Event::discrete(c.subset(s.dim()));
    let b = Event::discrete(c.subset(s.dim()));
    let joint = discrete::absolute_probability(&s, &a.intersect(&b).map_err(lib)?).map_err(lib)?;
    let pb = discrete::absolute_probability(&s, &b).map_err(lib)?;
    let cond = discrete::conditional_probability(&s, &a, &b).map_err(lib)?;
    ensure((joint - cond * pb).abs() <= tolerance::DISCRETE_ROUTE * c.scale, || format!("P(A∩B) = {joint}, P(A|B)P(B) = {}", cond * pb))
}

fn discrete_total_expectation(c: &mut Case) -> Result<(), String> {
    let s = c.discrete_state()?;
    let dim = s.dim();
    let split = c.rng.random_range(1..dim);
    let (a, b) = (Event::discrete(0..split), Event::discrete(split..dim));
    let whole = discrete::expectation(&s);
    let mut total = 0.0;
    for part in [&a, &b] {
        let p = discrete::absolute_probability(&s, part).map_err(lib)?;
        if p > tolerance::ZERO_CONDITION {
            total += p * discrete::conditional_expectation(&s, part).map_err(lib)?;
        }
    }
    let scale = s.value_scale();
    ensure((whole - total).abs() <= tolerance::DISCRETE_ROUTE * c.scale * scale, || format!("E[X] = {whole}, Σ P(A_k)E[X|A_k] = {total}"))
}

fn grid_normalization(c: &mut Case) -> Result<(), String> {
    let n = c.rng.random_range(256..=2048);
    let (_, s, ..) = c.gaussian(n)?;
    let norm = s.density().trace();
    ensure((norm - 1.0).abs() <= tolerance::GRID_NORM * c.scale, || format!("Σ|ψ|²dx = {norm} at n = {n}"))
}

fn grid_routes(c: &mut Case) -> Result<(), String> {
    let (_, s, center, sigma) = c.gaussian(1024)?;
    let lo = center + c.rng.random_range(-3.0..1.0) * sigma;
    let hi = lo + c.rng.random_range(0.2..3.0) * sigma;
    let a = Event::interval(lo, hi).map_err(lib)?;
    let r = grid::conditional_expectation_1d_routes(&s, &a).map_err(lib)?;
    ensure(r.agrees_within(tolerance::GRID_ROUTE * c.scale * 12.0), || format!("CE routes {} vs {} on {a}", r.definition, r.trace))
}

fn grid2d_marginals(c: &mut Case) -> Result<(), String> {
    let g = UniformGrid::cell_centered(-8.0, 8.0, 128).map_err(lib)?;
    let corr = c.rng.random_range(-0.9..0.9);
    let s = GridState2D::bivariate_normal(g, g, c.rng.random_range(0.8..1.5), c.rng.random_range(0.8..1.5), corr).map_err(lib)?;
    let (mx, my) = grid::marginals_2d(&s);
    let dx = g.dx();
    let (sx, sy): (f64, f64) = (mx.iter().sum::<f64>() * dx, my.iter().sum::<f64>() * dx);
    let tol = tolerance::GRID_NORM * c.scale;
    ensure((sx - 1.0).abs() <= tol && (sy - 1.0).abs() <= tol, || format!("marginal masses {sx}, {sy} (corr {corr})"))
}

fn fock_factorization(c: &mut Case) -> Result<(), String> {
    let e = c.ensemble()?;
    let product = fock::log_grand_partition(&e);
    let enumerated = fock::log_grand_partition_enumerated(&e).map_err(lib)?;
    let rel = (enumerated - product).exp_m1().abs();
    ensure(rel <= tolerance::DISCRETE_ROUTE * c.scale, || format!("Π Z_j vs enumeration differ by rel. {rel:e} ({e:?})"))
}

fn fock_occupation_normalization(c: &mut Case) -> Result<(), String> {
    let e = c.ensemble()?;
    for j in 0..e.modes() {
        let total: f64 = (0..=e.statistics().cap()).map(|n| fock::occupation_probability(&e, j, n)).sum::<crate::Result<f64>>().map_err(lib)?;
        ensure((total - 1.0).abs() <= tolerance::DISCRETE_NORM * c.scale, || format!("Σ_n P(n_{j} = n) = {total}"))?;
    }
    Ok(())
}

fn fock_equilibrium(c: &mut Case) -> Result<(), String> {
    let e = c.ensemble()?;
    let a: Vec<f64> = (0..e.modes()).map(|_| c.rng.random_range(-1.0..1.0)).collect();
    let omega = Event::fock(FockPredicate::any());
    let r = fock::fock_conditional_expectation_routes(&e, &a, &omega).map_err(lib)?;
    let closed = fock::linear_observable_expectation(&e, &a).map_err(lib)?;
    let tol = tolerance::DISCRETE_ROUTE * c.scale * f64::from(e.statistics().cap()) * e.modes() as f64;
    ensure(r.agrees_within(tol) && (r.definition - closed).abs() <= tol, || format!("⟨Σ a n⟩: {} / {} / closed form {closed}", r.definition, r.trace))?;
    let shell = Event::fock(FockPredicate::any().with_total(OccupationRange::new(0, 1)));
    let p = fock::fock_absolute_probability(&e, &shell).map_err(lib)?;
    ensure((0.0..=1.0 + tol).contains(&p), || format!("P(N ≤ 1) = {p}"))
}

fn evolve_unitarity(c: &mut Case) -> Result<(), String> {
    let h = c.hamiltonian()?;
    let t = c.rng.random_range(-10.0..10.0);
    let u = Spectrum::new(&h, 1.0).map_err(lib)?.propagator(t);
    let defect = u.unitarity_defect();
    ensure(defect <= tolerance::UNITARITY * c.scale, || format!("‖U†U − I‖ = {defect:e} at t = {t}, dim {}", h.dim()))
}

fn evolve_purity(c: &mut Case) -> Result<(), String> {
    let evo = c.evolution()?;
    let t = c.rng.random_range(0.0..10.0);
    let rho = evo.density_at(t);
    let tol = tolerance::UNITARITY * c.scale;
    ensure((rho.trace() - 1.0).abs() <= tol && (rho.purity() - 1.0).abs() <= tol, || format!("Tr ρ = {}, Tr ρ² = {} at t = {t}", rho.trace(), rho.purity()))
}

fn evolve_composition(c: &mut Case) -> Result<(), String> {
    let h = c.hamiltonian()?;
    let spec = Spectrum::new(&h, 1.0).map_err(lib)?;
    let (t1, t2) = (c.rng.random_range(0.0..5.0), c.rng.random_range(0.0..5.0));
    let whole = spec.propagator(t1 + t2);
    let product = spec.propagator(t1).matrix() * spec.propagator(t2).matrix();
    let err = (whole.matrix() - product).iter().map(|z| z.norm()).fold(0.0, f64::max);
    ensure(err <= 1e-9 * c.scale, || format!("‖U(t₁+t₂) − U(t₁)U(t₂)‖ = {err:e}"))
}

fn evolve_energy(c: &mut Case) -> Result<(), String> {
    let evo = c.evolution()?;
    let t = c.rng.random_range(0.0..10.0);
    let (e0, et) = (evo.energy(0.0), evo.energy(t));
    let scale = evo.hamiltonian().matrix().iter().fold(1.0_f64, |m, z| m.max(z.norm())) * evo.dim() as f64;
    ensure((e0 - et).abs() <= tolerance::UNITARITY * c.scale * scale, || format!("⟨H⟩ drifted from {e0} to {et} at t = {t}"))
}

fn noncomm_hermiticity(c: &mut Case) -> Result<(), String> {
    let n = c.rng.random_range(3..=64);
    let grid = UniformGrid::cell_centered(-5.0, 5.0, n).map_err(lib)?;
    for (boundary, derivative) in [(Boundary::Periodic, Derivative::Central), (Boundary::Zero, Derivative::Central), (Boundary::Periodic, Derivative::Spectral)] {
        let op = MomentumOperator::new(grid, 1.0, boundary, derivative).map_err(lib)?;
        let defect = op.hermiticity_defect() * grid.dx();
        ensure(defect <= tolerance::HERMITICITY * c.scale, || format!("‖p − p†‖·dx = {defect:e} ({boundary:?}, {derivative:?}, n = {n})"))?;
    }
    Ok(())
}

fn noncomm_quasi_cp(c: &mut Case) -> Result<(), String> {
    let (grid, s, center, sigma) = c.gaussian(1024)?;
    let x = loop {
        let x = center + c.rng.random_range(-3.0..3.0) * sigma;
        if s.psi()[grid.nearest_index(x)].norm() > 1e-6 {
            break x;
        }
    };
    let q = nc::quasi_cp_momentum_given_position(&s, x, 1.0).map_err(lib)?;
    let err = (q.total() - Complex64::new(1.0, 0.0)).norm();
    ensure(err <= 1e-6 * c.scale, || format!("Σ P(p|x) dp = {} at x = {x}", q.total()))
}

fn noncomm_divergence(c: &mut Case) -> Result<(), String> {
    let sigma = c.rng.random_range(0.7..1.5);
    let center = c.rng.random_range(-1.0..1.0);
    let base = UniformGrid::spanning(center - 10.0, center + 10.0, 257).map_err(lib)?;
    let psi = grid::gaussian_amplitude(center, sigma, 0.0);
    let off = nc::ce_momentum_given_position(&psi, base, center + sigma, 4, 1.0, Boundary::Zero).map_err(lib)?;
    ensure(off.verdict == Verdict::Divergent, || format!("x = σ: verdict {:?}, growth {:?}", off.verdict, off.growth_ratios))?;
    let mid = nc::ce_momentum_given_position(&psi, base, center, 4, 1.0, Boundary::Zero).map_err(lib)?;
    ensure(mid.verdict == Verdict::ConditionallyZero, || format!("x = centre: verdict {:?}", mid.verdict))
}

fn noncomm_commutator(c: &mut Case) -> Result<(), String> {
    let center = c.rng.random_range(-1.0..1.0);
    let sigma = c.rng.random_range(0.8..1.5);
    let k0 = c.rng.random_range(-1.0..1.0);
    let hbar = 1.0;
    let errors: Vec<f64> = [128, 256]
        .into_iter()
        .map(|n| {
            let grid = UniformGrid::cell_centered(-12.0, 12.0, n).map_err(lib)?;
            let s = GridState1D::gaussian(grid, center, sigma, k0).map_err(lib)?;
            let op = MomentumOperator::new(grid, hbar, Boundary::Zero, Derivative::Central).map_err(lib)?;
            Ok((op.commutator_expectation(&s).map_err(lib)? - Complex64::new(0.0, hbar)).norm())
        })
        .collect::<Result<_, String>>()?;
    ensure(errors[1] * 3.0 <= errors[0], || format!("⟨[X,p]⟩ − iħ errors {:e} → {:e}", errors[0], errors[1]))
}
