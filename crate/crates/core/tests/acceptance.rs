//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.
//!
//! Oracles are computed here, independently of the library routes they check.

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use qprob::discrete::{self, DiscreteState};
use qprob::evolution::{HamiltonianMatrix, Spectrum, TimeEvolution};
use qprob::fock::{self, FockEnsemble, Statistics};
use qprob::grid::{self, GridState1D, GridState2D, UniformGrid};
use qprob::noncommutative::{self as nc, Boundary, Derivative, MomentumOperator, Verdict};
use qprob::probability::{Event, FockPredicate, OccupationRange};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, pass: String, fail: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(pass)
    } else {
        Err(fail())
    }
}

fn err(e: qprob::Error) -> String {
    e.to_string()
}

fn within_budget(elapsed: Duration, budget_s: f64, detail: String) -> Outcome {
    let s = elapsed.as_secs_f64();
    check(s < budget_s, format!("{detail}; {s:.2} s"), || format!("{detail}; took {s:.2} s, budget {budget_s} s"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("route equivalence, discrete", c01_discrete_routes),
        ("route equivalence, continuous", c02_grid_routes),
        ("half-normal conditional expectation", c03_half_normal),
        ("independence factorization", c04_independence),
        ("grand-partition factorization", c05_grand_partition),
        ("Fock conditional expectation", c06_fock_ce),
        ("time evolution", c07_time_evolution),
        ("quasi-conditional momentum unit integral", c08_quasi_cp),
        ("sharp-position momentum divergence", c09_divergence),
        ("commutator convergence", c10_commutator),
        ("CLI determinism and verify", c11_cli),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS  {:>2}  {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {:>2}  {name}: {detail}", k + 1);
            }
        }
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn c01_discrete_routes() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    let mut worst_oracle = 0.0_f64;
    let mut pairs = 0;
    while pairs < 1000 {
        let dim = rng.random_range(1..=32);
        let eps: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let amps: Vec<Complex64> = (0..dim).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let idx: Vec<usize> = (0..dim).filter(|_| rng.random_bool(0.5)).collect();
        let mass: f64 = idx.iter().map(|&i| amps[i].norm_sqr()).sum();
        if mass <= 1e-10 {
            continue;
        }
        let oracle = idx.iter().map(|&i| eps[i] * amps[i].norm_sqr()).sum::<f64>() / mass;
        let s = DiscreteState::new(eps, amps).map_err(err)?;
        let r = discrete::conditional_expectation_routes(&s, &Event::discrete(idx)).map_err(err)?;
        worst = worst.max(r.discrepancy());
        worst_oracle = worst_oracle.max((r.definition - oracle).abs());
        pairs += 1;
    }
    let detail = format!("1000 pairs, max |definition − trace| = {worst:.2e}, max |definition − oracle| = {worst_oracle:.2e}");
    if worst > 1e-12 || worst_oracle > 1e-12 {
        return Err(detail);
    }
    within_budget(start.elapsed(), 5.0, detail)
}

fn c02_grid_routes() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let grid = UniformGrid::cell_centered(-10.0, 10.0, 4096).map_err(err)?;
    let mut worst = 0.0_f64;
    let mut worst_oracle = 0.0_f64;
    for _ in 0..10 {
        let (center, sigma, k0) = (rng.random_range(-2.0..2.0), rng.random_range(0.5..1.5), rng.random_range(-3.0..3.0));
        let s = GridState1D::gaussian(grid, center, sigma, k0).map_err(err)?;
        for _ in 0..20 {
            let lo = center + rng.random_range(-3.0..2.0) * sigma;
            let hi = lo + rng.random_range(0.1..3.0) * sigma;
            let r = grid::conditional_expectation_1d_routes(&s, &Event::interval(lo, hi).map_err(err)?).map_err(err)?;
            worst = worst.max(r.discrepancy());
            // Independent midpoint sum over cells whose centres lie in [lo, hi].
            let (mut num, mut den) = (0.0, 0.0);
            for j in 0..grid.len() {
                let x = grid.point(j);
                if lo <= x && x <= hi {
                    let p = (-(x - center).powi(2) / (2.0 * sigma * sigma)).exp();
                    num += x * p;
                    den += p;
                }
            }
            worst_oracle = worst_oracle.max((r.definition - num / den).abs());
        }
    }
    let detail = format!("200 (state, interval) pairs at n = 4096, max route gap {worst:.2e}, max oracle gap {worst_oracle:.2e}");
    if worst > 1e-10 || worst_oracle > 1e-10 {
        return Err(detail);
    }
    within_budget(start.elapsed(), 10.0, detail)
}

fn c03_half_normal() -> Outcome {
    let exact = (2.0 / PI).sqrt();
    let ce = |n: usize| -> Result<f64, String> {
        let g = UniformGrid::cell_centered(-8.0, 8.0, n).map_err(err)?;
        let s = GridState1D::gaussian(g, 0.0, 1.0, 0.0).map_err(err)?;
        grid::conditional_expectation_1d(&s, &Event::interval(0.0, 8.0).map_err(err)?).map_err(err)
    };
    let (coarse, fine) = (ce(2048)?, ce(4096)?);
    let (e_coarse, e_fine) = ((coarse - exact).abs(), (fine - exact).abs());
    let ratio = e_coarse / e_fine;
    let detail = format!("CE = {fine:.9} at n = 4096 (error {e_fine:.2e}), error ratio 2048→4096 = {ratio:.2}");
    check(e_fine <= 5e-4 && ratio >= 3.0, detail.clone(), || detail)
}

fn c04_independence() -> Outcome {
    let g = UniformGrid::spanning(-8.0, 8.0, 257).map_err(err)?;
    let sep = GridState2D::separable(g, g, grid::gaussian_amplitude(0.5, 1.0, 0.3), grid::gaussian_amplitude(-1.0, 0.7, 0.0)).map_err(err)?;
    let a = grid::independence_check(&sep, 1e-10);
    let corr = GridState2D::bivariate_normal(g, g, 1.0, 1.0, 0.5).map_err(err)?;
    let b = grid::independence_check(&corr, 1e-10);
    let ce = grid::ce_given_point(&corr, 1.0).map_err(err)?;
    let detail = format!(
        "separable deviation {:.2e}, correlated deviation {:.2e}, E[X|Y=1] = {ce:.6}",
        a.max_deviation, b.max_deviation
    );
    check(a.independent && a.max_deviation < 1e-10 && b.max_deviation > 1e-3 && !b.independent && (ce - 0.5).abs() <= 1e-3, detail.clone(), || detail)
}

/// Exhaustive `Σ_N̄ exp(−β Σ_j (ε_j − μ) n_j)` over all occupation vectors.
fn brute_partition(eps: &[f64], beta: f64, mu: f64, cap: u32) -> f64 {
    let mut total = 0.0;
    let mut n = vec![0u32; eps.len()];
    loop {
        total += (-beta * eps.iter().zip(&n).map(|(e, &k)| (e - mu) * k as f64).sum::<f64>()).exp();
        let mut j = 0;
        loop {
            if j == n.len() {
                return total;
            }
            if n[j] < cap {
                n[j] += 1;
                break;
            }
            n[j] = 0;
            j += 1;
        }
    }
}

fn c05_grand_partition() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0_f64;
    for draw in 0..100 {
        let fermion = draw % 2 == 0;
        let t = if fermion { rng.random_range(1..=4) } else { rng.random_range(1..=3) };
        let eps: Vec<f64> = (0..t).map(|_| rng.random_range(0.1..3.0)).collect();
        let beta = rng.random_range(0.1..3.0);
        let (mu, stats, cap) = if fermion {
            (rng.random_range(-1.0..2.0), Statistics::Fermion, 1)
        } else {
            let n_max = rng.random_range(1..=6);
            (rng.random_range(-2.0..0.05), Statistics::Boson { n_max }, n_max)
        };
        let e = FockEnsemble::new(eps.clone(), beta, mu, stats).map_err(err)?;
        let product = fock::grand_partition(&e);
        let oracle = brute_partition(&eps, beta, mu, cap);
        let enumerated = fock::log_grand_partition_enumerated(&e).map_err(err)?.exp();
        worst = worst.max(((product - oracle) / oracle).abs()).max(((enumerated - oracle) / oracle).abs());
    }
    let detail = format!("100 ensembles, max relative gap to exhaustive sum {worst:.2e}");
    if worst > 1e-12 {
        return Err(detail);
    }
    within_budget(start.elapsed(), 5.0, detail)
}

fn c06_fock_ce() -> Outcome {
    let fermi = FockEnsemble::new(vec![0.3, 0.9, 1.4], 1.3, 0.6, Statistics::Fermion).map_err(err)?;
    let n1 = Event::fock(FockPredicate::any().with_mode(1, OccupationRange::exactly(1)));
    let exact_one = fock::fock_conditional_expectation(&fermi, &[0.0, 1.0, 0.0], &n1).map_err(err)?;
    if exact_one != 1.0 {
        return Err(format!("E[n₁ | n₁ = 1] = {exact_one:?}, expected exactly 1.0"));
    }
    let cases = [
        (vec![0.3, 0.9, 1.4, 2.0], 1.3, 0.6, Statistics::Fermion, 1u32),
        (vec![0.5, 1.1, 1.7], 0.8, -0.2, Statistics::Boson { n_max: 5 }, 5u32),
    ];
    let a_coef = [0.7, -1.2, 2.5, 0.4];
    let mut worst = 0.0_f64;
    for (eps, beta, mu, stats, cap) in cases {
        let e = FockEnsemble::new(eps.clone(), beta, mu, stats).map_err(err)?;
        let a = &a_coef[..eps.len()];
        for shell in 0..=(cap * eps.len() as u32) {
            let event = Event::fock(FockPredicate::any().with_total(OccupationRange::exactly(shell)));
            let got = fock::fock_conditional_expectation(&e, a, &event).map_err(err)?;
            let oracle = shell_oracle(&eps, beta, mu, cap, a, shell);
            let gap = if oracle == 0.0 { got.abs() } else { ((got - oracle) / oracle).abs() };
            worst = worst.max(gap);
        }
    }
    let detail = format!("E[n₁|n₁=1] = 1.0 exactly; total-N shells max relative gap {worst:.2e}");
    check(worst <= 1e-12, detail.clone(), || detail)
}

/// `Σ_{N̄: ΣN̄=k} (a·N̄) w(N̄) / Σ_{N̄: ΣN̄=k} w(N̄)` by brute force.
fn shell_oracle(eps: &[f64], beta: f64, mu: f64, cap: u32, a: &[f64], k: u32) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    let total = (cap as usize + 1).pow(eps.len() as u32);
    for code in 0..total {
        let mut rest = code;
        let n: Vec<u32> = (0..eps.len())
            .map(|_| {
                let d = (rest % (cap as usize + 1)) as u32;
                rest /= cap as usize + 1;
                d
            })
            .collect();
        if n.iter().sum::<u32>() != k {
            continue;
        }
        let w = (-beta * eps.iter().zip(&n).map(|(e, &c)| (e - mu) * c as f64).sum::<f64>()).exp();
        num += a.iter().zip(&n).map(|(x, &c)| x * c as f64).sum::<f64>() * w;
        den += w;
    }
    num / den
}

fn c07_time_evolution() -> Outcome {
    let h = HamiltonianMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]).map_err(err)?;
    let psi0 = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let evo = TimeEvolution::new(psi0, h.clone(), vec![0.0, 1.0], 1.0).map_err(err)?;
    let excited = Event::discrete([1]);
    let (mut ap_err, mut trace_err, mut purity_err) = (0.0_f64, 0.0_f64, 0.0_f64);
    for k in 0..1000 {
        let t = 10.0 * k as f64 / 999.0;
        ap_err = ap_err.max((evo.ap(&excited, t).map_err(err)? - t.sin().powi(2)).abs());
        let rho = evo.density_at(t);
        trace_err = trace_err.max((rho.trace() - 1.0).abs());
        purity_err = purity_err.max((rho.purity() - 1.0).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut comp_err = 0.0_f64;
    for _ in 0..50 {
        let n = rng.random_range(2..=12);
        let a = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let hr = HamiltonianMatrix::new((&a + a.adjoint()).scale(0.5)).map_err(err)?;
        let spec = Spectrum::new(&hr, 1.0).map_err(err)?;
        let (t1, t2) = (rng.random_range(0.0..5.0), rng.random_range(0.0..5.0));
        let prod = spec.propagator(t1).matrix() * spec.propagator(t2).matrix();
        comp_err = comp_err.max((spec.propagator(t1 + t2).matrix() - prod).iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    let detail = format!(
        "max |AP − sin²t| = {ap_err:.2e}, |Tr ρ − 1| = {trace_err:.2e}, |Tr ρ² − 1| = {purity_err:.2e}, composition {comp_err:.2e}"
    );
    check(ap_err <= 1e-10 && trace_err <= 1e-10 && purity_err <= 1e-10 && comp_err <= 1e-9, detail.clone(), || detail)
}

fn c08_quasi_cp() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let grid = UniformGrid::cell_centered(-12.0, 12.0, 1024).map_err(err)?;
    let mut worst = 0.0_f64;
    let mut pairs = 0;
    while pairs < 50 {
        let (center, sigma, k0) = (rng.random_range(-2.0..2.0), rng.random_range(0.6..1.6), rng.random_range(-2.0..2.0));
        let hbar = rng.random_range(0.5..2.0);
        let s = GridState1D::gaussian(grid, center, sigma, k0).map_err(err)?;
        let x = center + rng.random_range(-4.0..4.0) * sigma;
        if s.psi()[grid.nearest_index(x)].norm() <= 1e-6 {
            continue;
        }
        let q = nc::quasi_cp_momentum_given_position(&s, x, hbar).map_err(err)?;
        worst = worst.max((q.total() - Complex64::new(1.0, 0.0)).norm());
        pairs += 1;
    }
    let detail = format!("50 pairs at n = 1024, max |Σ P(p|x) dp − 1| = {worst:.2e}");
    check(worst <= 1e-6, detail.clone(), || detail)
}

fn c09_divergence() -> Outcome {
    let sigma = 1.0;
    let base = UniformGrid::spanning(-10.0, 10.0, 257).map_err(err)?;
    let psi = grid::gaussian_amplitude(0.0, sigma, 0.0);
    let off = nc::ce_momentum_given_position(&psi, base, sigma, 4, 1.0, Boundary::Zero).map_err(err)?;
    let at_zero = nc::ce_momentum_given_position(&psi, base, 0.0, 4, 1.0, Boundary::Zero).map_err(err)?;
    let min_growth = off.growth_ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max_zero = at_zero.refinements.iter().map(|r| r.magnitude).fold(0.0, f64::max);
    let detail = format!(
        "x = σ: {:?} with min growth {min_growth:.3} over {} halvings; x = 0: {:?} with max |value| {max_zero:.1e}",
        off.verdict,
        off.growth_ratios.len(),
        at_zero.verdict
    );
    let ok = off.verdict == Verdict::Divergent
        && off.growth_ratios.len() == 4
        && min_growth >= 1.5
        && at_zero.verdict == Verdict::ConditionallyZero
        && max_zero < 1e-8;
    check(ok, detail.clone(), || detail)
}

fn c10_commutator() -> Outcome {
    let presets = [(0.0, 1.0, 0.0, 1.0), (0.7, 0.8, 1.5, 1.0), (-1.0, 1.3, -0.5, 0.5)];
    let mut min_ratio = f64::INFINITY;
    let mut last_err = 0.0;
    for (center, sigma, k0, hbar) in presets {
        let errs: Vec<f64> = [128, 256, 512, 1024]
            .into_iter()
            .map(|n| {
                let g = UniformGrid::cell_centered(-12.0, 12.0, n).map_err(err)?;
                let s = GridState1D::gaussian(g, center, sigma, k0).map_err(err)?;
                let op = MomentumOperator::new(g, hbar, Boundary::Zero, Derivative::Central).map_err(err)?;
                Ok((op.commutator_expectation(&s).map_err(err)? - Complex64::new(0.0, hbar)).norm())
            })
            .collect::<Result<_, String>>()?;
        for w in errs.windows(2) {
            min_ratio = min_ratio.min(w[0] / w[1]);
        }
        last_err = f64::max(last_err, errs[3]);
    }
    let detail = format!("3 presets, n = 128..1024, min error ratio per halving {min_ratio:.2}, error at n = 1024 ≤ {last_err:.2e}");
    check(min_ratio >= 3.0, detail.clone(), || detail)
}

fn c11_cli() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_qprob");
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let runs = [
        ("discrete", "discrete_disjoint.json"),
        ("grid", "grid_halfnormal.json"),
        ("grid2d", "grid2d_bivariate.json"),
        ("fock", "fock_fermion.json"),
        ("evolve", "evolve_rabi.json"),
        ("noncomm", "noncomm_gaussian.json"),
    ];
    for (sub, file) in runs {
        let config = fixtures.join(file);
        let once = || Command::new(bin).args([sub, "--config", config.to_str().unwrap(), "--seed", "11"]).env_remove("QPROB_TOLERANCE_SCALE").output();
        let (a, b) = (once().map_err(|e| e.to_string())?, once().map_err(|e| e.to_string())?);
        if a.status.code() != Some(0) || a.stdout != b.stdout || a.stdout.is_empty() {
            return Err(format!("{sub} {file}: exit {:?}, identical output {}", a.status.code(), a.stdout == b.stdout));
        }
        if file.ends_with(".json") && sub != "evolve" {
            let env: qprob::cli::report::Envelope = serde_json::from_slice(&a.stdout).map_err(|e| format!("{sub}: report does not parse: {e}"))?;
            if env.seed != Some(11) || env.to_json().as_bytes() != a.stdout {
                return Err(format!("{sub}: report does not round-trip"));
            }
        }
    }
    let start = Instant::now();
    let verify = Command::new(bin).arg("verify").env_remove("QPROB_TOLERANCE_SCALE").output().map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if verify.status.code() != Some(0) {
        return Err(format!("verify exited {:?}", verify.status.code()));
    }
    within_budget(elapsed, 60.0, "6 subcommands byte-identical across reruns; verify exits 0".into())
}
