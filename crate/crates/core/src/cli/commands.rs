use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::json;

use super::config::*;
use super::report::{self, ConditionedReport, Envelope, QuantityLabel};
use crate::discrete::{self, DiscreteState};
use crate::evolution::{HamiltonianMatrix, TimeEvolution};
use crate::fock::{self, FockEnsemble};
use crate::grid::{self, GridState1D, GridState2D};
use crate::noncommutative::{self as nc, MomentumOperator};
use crate::probability::{indicator_trace, DensityOperator, Event, Indicator, RouteComparison};
use crate::tolerance;
use crate::Error;

/// Normalization tolerance for the quasi-conditional momentum sum.
const QUASI_CP_SUM_TOL: f64 = 1e-6;

pub struct Context {
    pub config_bytes: Vec<u8>,
    pub base_dir: std::path::PathBuf,
    pub seed: Option<u64>,
    pub scale: f64,
    pub timing: bool,
    pub route_override: Option<f64>,
}

impl Context {
    fn tol(&self, base: f64) -> f64 {
        self.route_override.unwrap_or(base) * self.scale
    }

    fn envelope(&self, kind: &str) -> Envelope {
        Envelope::new(kind, &self.config_bytes, self.seed, self.scale)
    }
}

#[derive(Debug)]
pub enum CommandError {
    /// Bad configuration; exit code 2.
    Config(String),
}

pub struct Output {
    pub envelope: Envelope,
    /// Kind-specific CSV (time series, refinement rows); `None` uses the report table.
    pub csv: Option<String>,
    pub ok: bool,
}

type CmdResult = std::result::Result<Output, CommandError>;

fn config_err(e: Error) -> CommandError {
    CommandError::Config(e.to_string())
}

/// Errors that stem from the configuration rather than from the numbers.
fn is_config_error(e: &Error) -> bool {
    !matches!(e, Error::ZeroConditionEvent { .. } | Error::EigenDecompositionFailure | Error::ZeroAmplitudeAtX { .. } | Error::NonFiniteObservable { .. })
}

/// Evaluates one request, turning numerical failures into an error report.
fn evaluate(
    ctx: &Context,
    quantity: QuantityLabel,
    event: String,
    given: Option<String>,
    tol: f64,
    f: impl FnOnce() -> crate::Result<ConditionedReport>,
) -> std::result::Result<ConditionedReport, CommandError> {
    let start = Instant::now();
    let mut r = match f() {
        Ok(r) => r,
        Err(e) if is_config_error(&e) => return Err(config_err(e)),
        Err(e) => ConditionedReport::failed(quantity, event, given, e.to_string(), tol),
    };
    if ctx.timing {
        r.timing_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(r)
}

fn label(q: &Quantity) -> QuantityLabel {
    match q {
        Quantity::Ce => QuantityLabel::CE,
        Quantity::Ap => QuantityLabel::AP,
        Quantity::Cp => QuantityLabel::CP,
    }
}

/// `Σ_{i∈A} w|c_i|²` against `Tr[ρ I_A]`.
fn ap_routes(rho: &DensityOperator, a: &Event) -> crate::Result<RouteComparison> {
    let ind = Indicator::new(a, rho.basis())?;
    let definition = rho.probabilities().iter().zip(ind.mask()).filter(|(_, &m)| m).map(|(p, _)| p).sum();
    Ok(RouteComparison { definition, trace: indicator_trace(rho, a)? })
}

struct Resolved {
    quantity: QuantityLabel,
    event: Event,
    given: Option<Event>,
}

fn resolve(req: &Request, space: Space) -> std::result::Result<Resolved, CommandError> {
    let event = resolve_or_omega(&req.event, space).map_err(config_err)?;
    let given = match (&req.quantity, &req.given) {
        (Quantity::Cp, g) => Some(resolve_or_omega(g, space).map_err(config_err)?),
        (_, Some(_)) => return Err(CommandError::Config("`given` applies to cp requests only".into())),
        (_, None) => None,
    };
    Ok(Resolved { quantity: label(&req.quantity), event, given })
}

fn reject(req: &Request, fields: &[(&str, bool)]) -> std::result::Result<(), CommandError> {
    for (name, present) in fields {
        if *present {
            return Err(CommandError::Config(format!("field `{name}` is not valid for this system (request {:?})", req.quantity)));
        }
    }
    Ok(())
}

fn finish(ctx: &Context, mut envelope: Envelope, start: Instant, csv: Option<String>, extra_ok: bool) -> Output {
    if ctx.timing {
        envelope.timing_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    let ok = envelope.all_ok() && extra_ok;
    Output { envelope, csv, ok }
}

// ---------------------------------------------------------------- discrete

pub fn build_discrete(cfg: &DiscreteConfig) -> crate::Result<DiscreteState> {
    match (&cfg.preset, &cfg.eigenvalues, &cfg.amplitudes) {
        (Some(OscillatorPreset::HarmonicOscillator(o)), None, None) => oscillator(o),
        (None, Some(eps), Some(amps)) => DiscreteState::new(eps.clone(), complex_vec(amps)),
        _ => Err(Error::InvalidState("give either `preset` or both `eigenvalues` and `amplitudes`".into())),
    }
}

fn oscillator(o: &Oscillator) -> crate::Result<DiscreteState> {
    if o.levels == 0 || o.hbar_omega.is_nan() || o.hbar_omega <= 0.0 {
        return Err(Error::InvalidState("oscillator needs levels >= 1 and hbar_omega > 0".into()));
    }
    let eps: Vec<f64> = (0..o.levels).map(|i| (i as f64 + 0.5) * o.hbar_omega).collect();
    let amps: Vec<Complex64> = match &o.recipe {
        Recipe::Ground => return DiscreteState::eigenstate(eps, 0),
        Recipe::Coherent { alpha } => {
            let alpha: Complex64 = (*alpha).into();
            let mut c = Complex64::new(1.0, 0.0);
            (0..o.levels)
                .map(|n| {
                    if n > 0 {
                        c = c * alpha / (n as f64).sqrt();
                    }
                    c
                })
                .collect()
        }
        Recipe::Thermal { beta } => {
            if beta.is_nan() || *beta <= 0.0 {
                return Err(Error::InvalidState("thermal recipe needs beta > 0".into()));
            }
            // Relative to the ground level so the weights cannot underflow all at once.
            eps.iter().map(|e| Complex64::new((-0.5 * beta * (e - eps[0])).exp(), 0.0)).collect()
        }
    };
    DiscreteState::new(eps, amps)
}

pub fn cmd_discrete(ctx: &Context, cfg: &RunConfig, d: &DiscreteConfig) -> CmdResult {
    let start = Instant::now();
    let s = build_discrete(d).map_err(config_err)?;
    let space = Space::Discrete(s.dim());
    let scale = s.value_scale();
    let mut env = ctx.envelope("discrete");
    for req in &cfg.requests {
        reject(req, &[("observable", req.observable.is_some()), ("coefficients", req.coefficients.is_some()), ("at_y", req.at_y.is_some())])?;
        let r = resolve(req, space)?;
        let (ev, gv) = (r.event.to_string(), r.given.as_ref().map(Event::to_string));
        let report = match r.quantity {
            QuantityLabel::CE => {
                let tol = ctx.tol(tolerance::DISCRETE_ROUTE) * scale;
                evaluate(ctx, r.quantity, ev.clone(), gv, tol, || {
                    Ok(ConditionedReport::from_routes(r.quantity, ev, None, discrete::conditional_expectation_routes(&s, &r.event)?, tol))
                })?
            }
            QuantityLabel::AP => {
                let tol = ctx.tol(tolerance::DISCRETE_ROUTE);
                evaluate(ctx, r.quantity, ev.clone(), gv, tol, || {
                    Ok(ConditionedReport::from_routes(r.quantity, ev, None, ap_routes(s.density(), &r.event)?, tol))
                })?
            }
            QuantityLabel::CP => {
                let tol = ctx.tol(tolerance::DISCRETE_ROUTE);
                let given = r.given.as_ref().expect("cp has a given event");
                evaluate(ctx, r.quantity, ev.clone(), gv.clone(), tol, || {
                    Ok(ConditionedReport::from_routes(r.quantity, ev, gv, discrete::conditional_probability_routes(&s, &r.event, given)?, tol))
                })?
            }
        };
        env.reports.push(report);
    }
    env.summary = json!({
        "dim": s.dim(),
        "eigenvalues": s.eigenvalues(),
        "probabilities": s.probabilities(),
        "expectation": discrete::expectation(&s),
    });
    Ok(finish(ctx, env, start, None, true))
}

// ---------------------------------------------------------------- grid1d

pub fn build_grid1d(ctx: &Context, g: &Grid1dConfig) -> crate::Result<GridState1D> {
    match (&g.state, &g.grid) {
        (State1dSpec::Gaussian(p), Some(spec)) => GridState1D::gaussian(spec.build()?, p.center, p.sigma, p.k0),
        (State1dSpec::Gaussian(_), None) => Err(Error::InvalidGrid("a gaussian state needs `grid`".into())),
        (State1dSpec::File(path), None) => GridState1D::load(ctx.base_dir.join(path)),
        (State1dSpec::File(_), Some(_)) => Err(Error::InvalidGrid("a file state carries its own grid; drop `grid`".into())),
    }
}

pub fn cmd_grid(ctx: &Context, cfg: &RunConfig, g: &Grid1dConfig) -> CmdResult {
    let start = Instant::now();
    let s = build_grid1d(ctx, g).map_err(config_err)?;
    let mut env = ctx.envelope("grid1d");
    for req in &cfg.requests {
        reject(req, &[("observable", req.observable.is_some()), ("coefficients", req.coefficients.is_some()), ("at_y", req.at_y.is_some())])?;
        let r = resolve(req, Space::Line)?;
        let (ev, gv) = (r.event.to_string(), r.given.as_ref().map(Event::to_string));
        let base = ctx.tol(tolerance::GRID_ROUTE);
        let report = match r.quantity {
            QuantityLabel::CE => {
                let tol = base * s.grid().position_scale();
                evaluate(ctx, r.quantity, ev.clone(), gv, tol, || {
                    Ok(ConditionedReport::from_routes(r.quantity, ev, None, grid::conditional_expectation_1d_routes(&s, &r.event)?, tol))
                })?
            }
            QuantityLabel::AP => evaluate(ctx, r.quantity, ev.clone(), gv, base, || {
                Ok(ConditionedReport::from_routes(r.quantity, ev, None, ap_routes(s.density(), &r.event)?, base))
            })?,
            QuantityLabel::CP => {
                let given = r.given.as_ref().expect("cp has a given event");
                evaluate(ctx, r.quantity, ev.clone(), gv.clone(), base, || {
                    Ok(ConditionedReport::from_routes(r.quantity, ev, gv, grid::conditional_probability_1d_routes(&s, &r.event, given)?, base))
                })?
            }
        };
        env.reports.push(report.with_observable("x"));
    }
    let grid = s.grid();
    env.summary = json!({
        "x0": grid.x0(),
        "dx": grid.dx(),
        "n": grid.len(),
        "norm": s.density().trace(),
        "mean_position": grid::expectation_1d(&s),
    });
    Ok(finish(ctx, env, start, None, true))
}

// ---------------------------------------------------------------- grid2d

pub fn build_grid2d(g: &Grid2dConfig) -> crate::Result<GridState2D> {
    let (gx, gy) = (g.x.build()?, g.y.build()?);
    match &g.state {
        State2dSpec::BivariateNormal { sx, sy, corr } => GridState2D::bivariate_normal(gx, gy, *sx, *sy, *corr),
        State2dSpec::Separable { x, y } => {
            if !(x.sigma > 0.0 && y.sigma > 0.0) {
                return Err(Error::InvalidState("separable gaussian sigmas must be positive".into()));
            }
            GridState2D::separable(gx, gy, grid::gaussian_amplitude(x.center, x.sigma, x.k0), grid::gaussian_amplitude(y.center, y.sigma, y.k0))
        }
        State2dSpec::Box2d { lx, ly, qx, qy } => GridState2D::box_eigenstate(gx, gy, *lx, *ly, *qx, *qy),
    }
}

pub fn cmd_grid2d(ctx: &Context, cfg: &RunConfig, g: &Grid2dConfig) -> CmdResult {
    let start = Instant::now();
    let s = build_grid2d(g).map_err(config_err)?;
    let mut env = ctx.envelope("grid2d");
    let scale = s.grid_x().position_scale().max(s.grid_y().position_scale());
    for req in &cfg.requests {
        reject(req, &[("coefficients", req.coefficients.is_some())])?;
        let r = resolve(req, Space::Plane)?;
        let (ev, gv) = (r.event.to_string(), r.given.as_ref().map(Event::to_string));
        let base = ctx.tol(tolerance::GRID_ROUTE);
        let report = match (r.quantity, req.at_y) {
            (QuantityLabel::CE, Some(y)) => {
                if req.observable.as_deref().unwrap_or("x") != "x" || req.event.is_some() {
                    return Err(CommandError::Config("`at_y` conditions E[X|Y=y]; drop `event` and use observable \"x\"".into()));
                }
                let tol = base * scale;
                let ev = format!("Y={y}");
                evaluate(ctx, r.quantity, ev.clone(), None, tol, || {
                    Ok(ConditionedReport::from_routes(r.quantity, ev, None, grid::ce_given_point_routes(&s, y)?, tol).with_observable("x"))
                })?
            }
            (QuantityLabel::CE, None) => {
                let obs = req.observable.clone().unwrap_or_else(|| "x".into());
                let f: fn(f64, f64) -> f64 = match obs.as_str() {
                    "x" => |x, _| x,
                    "y" => |_, y| y,
                    "xy" => |x, y| x * y,
                    other => return Err(CommandError::Config(format!("unknown grid2d observable {other:?}; use x, y or xy"))),
                };
                let tol = base * if obs == "xy" { scale * scale } else { scale };
                evaluate(ctx, r.quantity, ev.clone(), gv, tol, || {
                    Ok(ConditionedReport::from_routes(r.quantity, ev, None, grid::ce_borel_2d_routes(&s, f, &r.event)?, tol).with_observable(obs))
                })?
            }
            (_, Some(_)) => return Err(CommandError::Config("`at_y` applies to ce requests only".into())),
            (QuantityLabel::AP, None) => evaluate(ctx, r.quantity, ev.clone(), gv, base, || {
                Ok(ConditionedReport::from_routes(r.quantity, ev, None, ap_routes(s.density(), &r.event)?, base))
            })?,
            (QuantityLabel::CP, None) => {
                let given = r.given.as_ref().expect("cp has a given event");
                evaluate(ctx, r.quantity, ev.clone(), gv.clone(), base, || {
                    Ok(ConditionedReport::from_routes(r.quantity, ev, gv, grid::conditional_probability_2d(&s, &r.event, given)?, base))
                })?
            }
        };
        env.reports.push(report);
    }
    let ind = grid::independence_check(&s, g.independence_tolerance);
    env.summary = json!({
        "nx": s.grid_x().len(),
        "ny": s.grid_y().len(),
        "dx": s.grid_x().dx(),
        "dy": s.grid_y().dx(),
        "independence": {
            "independent": ind.independent,
            "max_deviation": ind.max_deviation,
            "tolerance": g.independence_tolerance,
        },
    });
    Ok(finish(ctx, env, start, None, true))
}

// ---------------------------------------------------------------- fock

pub fn build_fock(f: &FockConfig) -> crate::Result<FockEnsemble> {
    let stats = f.statistics()?;
    match (f.beta, f.temperature) {
        (Some(beta), None) => FockEnsemble::new(f.mode_energies.clone(), beta, f.mu, stats),
        (None, Some(t)) => FockEnsemble::from_temperature(f.mode_energies.clone(), t, f.boltzmann, f.mu, stats),
        _ => Err(Error::InvalidEnsemble("give exactly one of `beta` and `temperature`".into())),
    }
}

pub fn cmd_fock(ctx: &Context, cfg: &RunConfig, f: &FockConfig) -> CmdResult {
    let start = Instant::now();
    let e = build_fock(f).map_err(config_err)?;
    let cap = e.statistics().cap() as f64;
    let mut env = ctx.envelope("fock");
    for req in &cfg.requests {
        reject(req, &[("observable", req.observable.is_some()), ("at_y", req.at_y.is_some())])?;
        let r = resolve(req, Space::Fock)?;
        let (ev, gv) = (r.event.to_string(), r.given.as_ref().map(Event::to_string));
        let report = match r.quantity {
            QuantityLabel::CE => {
                let a = req.coefficients.clone().unwrap_or_else(|| vec![1.0; e.modes()]);
                let tol = ctx.tol(tolerance::DISCRETE_ROUTE) * a.iter().map(|x| x.abs()).sum::<f64>().max(1.0) * cap;
                let obs = format!("Σa·n, a={a:?}");
                evaluate(ctx, r.quantity, ev.clone(), gv, tol, || {
                    Ok(ConditionedReport::from_routes(r.quantity, ev, None, fock::fock_conditional_expectation_routes(&e, &a, &r.event)?, tol).with_observable(obs))
                })?
            }
            QuantityLabel::AP => {
                reject(req, &[("coefficients", req.coefficients.is_some())])?;
                let tol = ctx.tol(tolerance::DISCRETE_ROUTE);
                evaluate(ctx, r.quantity, ev.clone(), gv, tol, || {
                    Ok(ConditionedReport::single(r.quantity, ev, None, fock::fock_absolute_probability(&e, &r.event)?, tol))
                })?
            }
            QuantityLabel::CP => {
                reject(req, &[("coefficients", req.coefficients.is_some())])?;
                let tol = ctx.tol(tolerance::DISCRETE_ROUTE);
                let given = r.given.as_ref().expect("cp has a given event");
                evaluate(ctx, r.quantity, ev.clone(), gv.clone(), tol, || {
                    Ok(ConditionedReport::single(r.quantity, ev, gv, fock::fock_conditional_probability(&e, &r.event, given)?, tol))
                })?
            }
        };
        env.reports.push(report);
    }

    let log_z = fock::log_grand_partition(&e);
    let enumerated = fock::log_grand_partition_enumerated(&e).ok();
    let rel = enumerated.map(|l| (l - log_z).exp_m1().abs());
    let factorization_ok = rel.is_none_or(|r| r <= ctx.tol(tolerance::DISCRETE_ROUTE));
    let mode_z: Vec<f64> = (0..e.modes()).map(|j| fock::mode_partition(&e, j).expect("mode in range")).collect();
    let mean_n: Vec<f64> = (0..e.modes()).map(|j| fock::mean_occupation(&e, j).expect("mode in range")).collect();
    env.summary = json!({
        "modes": e.modes(),
        "beta": e.beta(),
        "mu": e.mu(),
        "statistics": match e.statistics() {
            fock::Statistics::Fermion => json!("fermion"),
            fock::Statistics::Boson { n_max } => json!({"boson": {"n_max": n_max}}),
        },
        "log_grand_partition": log_z,
        "grand_partition": log_z.exp(),
        "grand_partition_enumerated": enumerated.map(f64::exp),
        "relative_difference": rel,
        "factorization_ok": factorization_ok,
        "mode_partitions": mode_z,
        "mean_occupations": mean_n,
    });
    Ok(finish(ctx, env, start, None, factorization_ok))
}

// ---------------------------------------------------------------- evolve

pub fn build_evolution(e: &EvolveConfig) -> crate::Result<TimeEvolution> {
    let rabi = matches!(e.preset, Some(EvolvePreset::Rabi));
    let h = match (&e.hamiltonian, rabi) {
        (Some(rows), _) => {
            let n = rows.len();
            if rows.iter().any(|r| r.len() != n) {
                return Err(Error::DimensionMismatch { expected: n, found: rows.iter().map(Vec::len).find(|&l| l != n).unwrap_or(n) });
            }
            HamiltonianMatrix::new(DMatrix::from_row_iterator(n, n, rows.iter().flatten().map(|&c| Complex64::from(c))))?
        }
        (None, true) => HamiltonianMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0])?,
        (None, false) => return Err(Error::InvalidState("give `hamiltonian` or a preset".into())),
    };
    let psi0 = match (&e.initial, rabi) {
        (Some(v), _) => complex_vec(v),
        (None, true) => vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        (None, false) => return Err(Error::InvalidState("give `initial` amplitudes".into())),
    };
    let obs = match (&e.observable, rabi) {
        (Some(o), _) => o.clone(),
        (None, true) => vec![0.0, 1.0],
        (None, false) => return Err(Error::InvalidState("give `observable` values".into())),
    };
    TimeEvolution::new(psi0, h, obs, e.hbar)
}

pub fn cmd_evolve(ctx: &Context, _cfg: &RunConfig, e: &EvolveConfig) -> CmdResult {
    let start = Instant::now();
    if !_cfg.requests.is_empty() {
        return Err(CommandError::Config("evolve takes ce_event/ap_event/cp_event/cp_given instead of `requests`".into()));
    }
    let evo = build_evolution(e).map_err(config_err)?;
    let times = e.times.points().map_err(config_err)?;
    let space = Space::Discrete(evo.dim());
    let ce_ev = resolve_or_omega(&e.ce_event, space).map_err(config_err)?;
    let ap_ev = resolve_or_omega(&e.ap_event, space).map_err(config_err)?;
    let cp_ev = resolve_or_omega(&e.cp_event, space).map_err(config_err)?;
    let cp_given = resolve_or_omega(&e.cp_given, space).map_err(config_err)?;
    let obs_scale = evo_scale(e, &evo);
    let tol = ctx.tol(tolerance::GRID_ROUTE) * obs_scale;

    let mut rows = Vec::with_capacity(times.len());
    let (mut max_ce, mut max_cp) = (0.0_f64, 0.0_f64);
    let mut failures = Vec::new();
    for &t in &times {
        let ce = match evo.ce_routes(&ce_ev, t) {
            Ok(r) => {
                max_ce = max_ce.max(r.discrepancy());
                Some(r.definition)
            }
            Err(err) if !is_config_error(&err) => {
                failures.push(format!("t={t}: CE: {err}"));
                None
            }
            Err(err) => return Err(config_err(err)),
        };
        let ap = evo.ap(&ap_ev, t).map_err(config_err)?;
        let cp = match evo.cp_routes(&cp_ev, &cp_given, t) {
            Ok(r) => {
                max_cp = max_cp.max(r.discrepancy());
                Some(r.definition)
            }
            Err(err) if !is_config_error(&err) => {
                failures.push(format!("t={t}: CP: {err}"));
                None
            }
            Err(err) => return Err(config_err(err)),
        };
        rows.push((t, ce, ap, cp));
    }

    let routes_ok = max_ce <= tol && max_cp <= tol;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "CE", "AP", "CP"]).expect("in-memory write");
    for (t, ce, ap, cp) in &rows {
        w.write_record([report::num(*t), report::opt(*ce), report::num(*ap), report::opt(*cp)]).expect("in-memory write");
    }
    let csv = report::finish(w);

    let mut env = ctx.envelope("evolve");
    env.summary = json!({
        "dim": evo.dim(),
        "hbar": e.hbar,
        "events": {
            "ce": ce_ev.to_string(),
            "ap": ap_ev.to_string(),
            "cp": cp_ev.to_string(),
            "cp_given": cp_given.to_string(),
        },
        "columns": ["t", "CE", "AP", "CP"],
        "rows": rows.iter().map(|(t, ce, ap, cp)| json!([t, ce, ap, cp])).collect::<Vec<_>>(),
        "max_route_discrepancy": {"ce": max_ce, "cp": max_cp},
        "tolerance": tol,
        "routes_ok": routes_ok,
        "errors": failures,
    });
    let ok = routes_ok && failures.is_empty();
    Ok(finish(ctx, env, start, Some(csv), ok))
}

fn evo_scale(e: &EvolveConfig, evo: &TimeEvolution) -> f64 {
    let obs_max = e.observable.as_ref().map(|o| o.iter().fold(0.0_f64, |m, v| m.max(v.abs()))).unwrap_or(1.0);
    obs_max.max(1.0).max(evo.hamiltonian().matrix().iter().fold(0.0_f64, |m, c| m.max(c.norm())).min(1.0))
}

// ---------------------------------------------------------------- noncomm

pub fn cmd_noncomm(ctx: &Context, _cfg: &RunConfig, c: &NoncommConfig) -> CmdResult {
    let start = Instant::now();
    if !_cfg.requests.is_empty() {
        return Err(CommandError::Config("noncomm takes `positions` instead of `requests`".into()));
    }
    let grid = c.grid.build().map_err(config_err)?;
    let g = c.gaussian;
    if g.sigma.is_nan() || g.sigma <= 0.0 {
        return Err(CommandError::Config("gaussian sigma must be positive".into()));
    }
    let amp = grid::gaussian_amplitude(g.center, g.sigma, g.k0);
    let s = GridState1D::from_fn(grid, &amp).map_err(config_err)?;
    let op = MomentumOperator::new(grid, c.hbar, c.boundary.into(), c.derivative.into()).map_err(config_err)?;
    let mut ok = true;

    let mut divergence = Vec::new();
    let mut csv_rows = Vec::new();
    for &x in &c.positions {
        match nc::ce_momentum_given_position(&amp, grid, x, c.halvings, c.hbar, c.boundary.into()) {
            Ok(rep) => {
                for (level, e) in rep.refinements.iter().enumerate() {
                    csv_rows.push(vec![
                        report::num(x),
                        level.to_string(),
                        report::num(e.dx),
                        e.n.to_string(),
                        report::num(e.value.re),
                        report::num(e.value.im),
                        report::num(e.magnitude),
                        report::num(e.finite_part.re),
                        report::num(e.finite_part.im),
                        report::num(e.singular_factor),
                        verdict_name(rep.verdict).into(),
                    ]);
                }
                divergence.push(serde_json::to_value(&rep).expect("report serializes"));
            }
            Err(err) if !is_config_error(&err) => {
                ok = false;
                divergence.push(json!({"x": x, "error": err.to_string()}));
            }
            Err(err) => return Err(config_err(err)),
        }
    }

    let mut quasi = Vec::new();
    for &x in &c.quasi_cp_positions {
        match nc::quasi_cp_momentum_given_position(&s, x, c.hbar) {
            Ok(q) => {
                let total = q.total();
                let dev = (total - Complex64::new(1.0, 0.0)).norm();
                let pass = dev <= QUASI_CP_SUM_TOL * ctx.scale;
                ok &= pass;
                let mut entry = json!({"x": q.x, "dp": q.dp, "sum": total, "deviation": dev, "ok": pass});
                if c.include_distribution {
                    entry["p"] = json!(q.p);
                    entry["values"] = json!(q.values);
                }
                quasi.push(entry);
            }
            Err(err) if !is_config_error(&err) => {
                ok = false;
                quasi.push(json!({"x": x, "error": err.to_string()}));
            }
            Err(err) => return Err(config_err(err)),
        }
    }

    let mut windows = Vec::new();
    if !c.window_half_widths.is_empty() {
        for &x in &c.positions {
            match nc::window_smeared_ce_momentum(&s, x, &c.window_half_widths, &op) {
                Ok(w) => windows.push(json!({"x": x, "windows": w})),
                Err(err) if !is_config_error(&err) => windows.push(json!({"x": x, "error": err.to_string()})),
                Err(err) => return Err(config_err(err)),
            }
        }
    }

    let commutator = op.commutator_expectation(&s).map_err(config_err)?;
    let p_position = op.expectation(&s).map_err(config_err)?;
    let p_momentum = nc::momentum_amplitudes(&s, c.hbar).mean_momentum();

    let mut env = ctx.envelope("noncomm");
    env.summary = json!({
        "n": grid.len(),
        "dx": grid.dx(),
        "hbar": c.hbar,
        "boundary": op.boundary(),
        "derivative": op.derivative(),
        "divergence": divergence,
        "quasi_cp": quasi,
        "window_experiment": {
            "note": "experimental: conditioning on [x-w, x+w]; no limit is asserted",
            "entries": windows,
        },
        "commutator_expectation": commutator,
        "commutator_error": (commutator - Complex64::new(0.0, c.hbar)).norm(),
        "mean_momentum": {"position_space": p_position, "momentum_space": p_momentum},
    });

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "level", "dx", "n", "value_re", "value_im", "magnitude", "finite_re", "finite_im", "singular_factor", "verdict"])
        .expect("in-memory write");
    for row in csv_rows {
        w.write_record(row).expect("in-memory write");
    }
    Ok(finish(ctx, env, start, Some(report::finish(w)), ok))
}

fn verdict_name(v: nc::Verdict) -> &'static str {
    match v {
        nc::Verdict::Divergent => "divergent",
        nc::Verdict::ConditionallyZero => "conditionally-zero",
        nc::Verdict::Converged => "converged",
    }
}
