//! Scenario runs: solve, run the verification battery, write artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use pluriflow_core::flow::{
    boundary_attainment_report, ordering_check, sandwich_check, solve_flow, solve_problem_rho,
    sub_barrier_cauchy, sub_barrier_dirichlet, super_barrier, subsolution_residual, supersolution_residual,
    compute_constants, ConstantsLedger, DirichletBarrier, FlowSolution,
};
use pluriflow_core::ma_ops::RhoReport;
use pluriflow_core::potentials::{slice_l1_bound_check, submean_check, time_lipschitz_estimate, time_semiconcavity_estimate};
use pluriflow_core::transforms::{
    moduli_from_barriers, mobius_average, semiconcavity_average_report, time_scale_report, walsh_translate,
};
use pluriflow_core::GridFunction;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{Result, RunError};
use crate::families::Profile;
use crate::io;
use crate::scenario::{build, Built, Scenario};

/// Names accepted in a scenario's `checks` list and by `--checks`.
pub const CHECKS: &[&str] = &[
    "error",
    "residual",
    "sandwich",
    "barriers",
    "constants",
    "boundary",
    "transforms",
    "lemmas",
];

/// Scales of the time transforms and Möbius radii exercised by the battery.
pub const TIME_SCALES: [f64; 2] = [1.05, 0.95];
pub const AVERAGE_SCALE: f64 = 1.05;
pub const MOBIUS_RADII: [f64; 2] = [0.1, 0.05];
pub const WITNESS_RADIUS: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub tol_scale: f64,
    /// Overrides the scenario's own list.
    pub checks: Option<Vec<String>>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            out: None,
            tol_scale: 1.0,
            checks: None,
        }
    }
}

/// Tolerances after defaults and scaling.
#[derive(Clone, Debug, Serialize)]
pub struct ResolvedTolerances {
    pub pde: f64,
    pub bc: f64,
    pub order: f64,
    pub sandwich: f64,
    pub lateral: f64,
    pub initial: f64,
    pub constants: f64,
    pub lemma: f64,
    pub error: Option<f64>,
}

/// Default tolerances for a built scenario and its solution.
///
/// * `pde`: residual of a solve converged to update size `tol`, which grows
///   like the stencil weight `dim/h²`.
/// * `lateral`: one lattice step times the measured spatial slope.
/// * `initial`: `Vol(Ω) √t_1`, an `o(1)` bound on the first slice's `L1` gap.
pub fn resolve_tolerances(built: &Built, u: &GridFunction, scale: f64) -> ResolvedTolerances {
    let t = &built.scenario.tolerances;
    let grid = built.grid();
    let h = grid.spacing();
    let solver = built.scenario.solver.tol / 1e-10;
    let slope = spatial_slope(u);
    let t1 = u.time().t(1);
    ResolvedTolerances {
        pde: scale * t.pde.unwrap_or(solver * (1e-7 * grid.dim() as f64 / (h * h) + 1e-8)),
        bc: scale * t.bc.unwrap_or(1e-9),
        order: scale * solver * 1e-6,
        sandwich: scale * t.sandwich.unwrap_or(10.0 * h * h),
        lateral: scale * t.lateral.unwrap_or(2f64.sqrt() * h * slope + 1e-9),
        initial: scale * t.initial.unwrap_or(grid.domain().volume() * t1.sqrt()),
        constants: scale * t.constants.unwrap_or(1e-6),
        lemma: scale * t.lemma.unwrap_or(10.0 * h * h),
        error: t.error.map(|e| scale * e),
    }
}

/// Largest axis difference quotient of `u` over nodes, hits and time.
fn spatial_slope(u: &GridFunction) -> f64 {
    let grid = u.space();
    let h = grid.spacing();
    let mut best: f64 = 0.0;
    for k in 0..u.time().len() {
        let nodes = u.nodes_at(k);
        let trace = u.trace_at(k);
        for i in 0..grid.len() {
            for s in 0..2 * grid.dim() {
                let (other, dist) = match grid.neighbor(i, s) {
                    pluriflow_core::domain::Neighbor::Node(j) => (nodes[j], h),
                    pluriflow_core::domain::Neighbor::Hit(j) => (trace[j], grid.hits()[j].theta * h),
                };
                if dist > 0.0 {
                    best = best.max((other - nodes[i]).abs() / dist);
                }
            }
        }
    }
    best
}

/// Result of the battery.
#[derive(Debug)]
pub struct Verdict {
    pub reports: Map<String, Value>,
    pub failed: Vec<String>,
    pub error: Option<f64>,
}

impl Verdict {
    pub fn pass(&self) -> bool {
        self.failed.is_empty()
    }

    fn record(&mut self, key: &str, pass: bool, value: Value) {
        if !pass {
            self.failed.push(key.to_string());
        }
        self.reports.insert(key.to_string(), value);
    }
}

/// Everything a run produces.
pub struct Outcome {
    pub built: Built,
    pub solution: FlowSolution,
    pub verdict: Verdict,
    pub tolerances: ResolvedTolerances,
    pub solve_seconds: f64,
    pub check_seconds: f64,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.verdict.pass()
    }

    /// The reports document written to `reports.json`.
    pub fn reports_json(&self) -> Value {
        json!({
            "scenario": self.built.scenario.name,
            "pass": self.pass(),
            "failed": self.verdict.failed,
            "error": self.verdict.error,
            "tolerances": self.tolerances,
            "solve_seconds": self.solve_seconds,
            "check_seconds": self.check_seconds,
            "rho": self.solution.rho_report,
            "steps": self.solution.steps.iter().map(|s| json!({"sweeps": s.sweeps, "last_update": s.last_update})).collect::<Vec<_>>(),
            "checks": self.verdict.reports,
        })
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

pub fn solve(built: &Built) -> Result<FlowSolution> {
    let opts = built.scenario.solver_options();
    solve_flow(&built.problem, built.time.clone(), &built.op, &opts).map_err(RunError::Solver)
}

fn enabled(scenario: &Scenario, opts: &RunOptions) -> Vec<String> {
    opts.checks
        .clone()
        .or_else(|| scenario.checks.clone())
        .unwrap_or_else(|| CHECKS.iter().map(|s| s.to_string()).collect())
}

/// `sup_{|z| ≤ radius}` of the largest eigenvalue of the real Hessian of the
/// spatial part of a radial exact solution.
pub fn exact_hessian_bound(exact: &Profile, radius: f64) -> Option<f64> {
    let r_max = radius * radius;
    let samples = 64;
    let mut best = f64::NEG_INFINITY;
    for j in 0..=samples {
        let r = r_max * j as f64 / samples as f64;
        let (d1, d2) = exact.radial_derivatives(r)?;
        best = best.max(2.0 * d1).max(2.0 * d1 + 4.0 * r * d2);
    }
    Some(best)
}

/// Runs the enabled checks on `u`, the computed solution of `built`.
pub fn verify(
    built: &Built,
    u: &GridFunction,
    rho: &[f64],
    rho_report: &RhoReport,
    ledger: &ConstantsLedger,
    tol: &ResolvedTolerances,
    checks: &[String],
) -> Result<Verdict> {
    let problem = &built.problem;
    let op = &built.op;
    let grid = built.grid();
    let opts = built.scenario.solver_options();
    let on = |name: &str| checks.iter().any(|c| c == name);
    let mut v = Verdict {
        reports: Map::new(),
        failed: Vec::new(),
        error: None,
    };
    v.reports.insert("ledger".into(), to_value(ledger));

    if let Some(exact) = &built.scenario.exact {
        let mut err: f64 = 0.0;
        for k in 0..u.time().len() {
            let t = u.time().t(k);
            for i in 0..grid.len() {
                err = err.max((u.value(k, i) - exact.eval(t, grid.point(i))).abs());
            }
        }
        v.error = Some(err);
        if on("error") {
            let pass = tol.error.is_none_or(|e| err <= e);
            v.record("error", pass, json!({"linf": err, "tol": tol.error, "pass": pass}));
        }
    }

    if on("residual") {
        let sub = subsolution_residual(u, problem, op, tol.pde, tol.bc);
        let sup = supersolution_residual(u, problem, op, tol.pde);
        v.record("residual", sub.pass && sup.pass, json!({"sub": sub, "super": sup}));
    }

    if on("sandwich") {
        let r = sandwich_check(u, rho, ledger, tol.sandwich);
        v.record("sandwich", r.pass, to_value(&r));
    }

    let barriers = if on("barriers") || on("transforms") || on("lemmas") {
        let time = u.time().clone();
        let dirichlet = sub_barrier_dirichlet(problem, time.clone(), op, rho, ledger, &opts).map_err(RunError::Solver)?;
        let cauchy = sub_barrier_cauchy(problem, time.clone(), rho, ledger).map_err(RunError::Solver)?;
        let harmonic = super_barrier(problem, time, &opts).map_err(RunError::Solver)?;
        Some(Barriers {
            dirichlet,
            cauchy,
            harmonic,
        })
    } else {
        None
    };

    if let (true, Some(b)) = (on("barriers"), &barriers) {
        let d_res = subsolution_residual(&b.dirichlet.u, problem, op, tol.pde, tol.bc);
        let c_res = subsolution_residual(&b.cauchy, problem, op, tol.pde, tol.bc);
        let d_ord = ordering_check(&b.dirichlet.u, u, tol.order).map_err(RunError::Solver)?;
        let c_ord = ordering_check(&b.cauchy, u, tol.order).map_err(RunError::Solver)?;
        let h_ord = ordering_check(u, &b.harmonic, tol.order).map_err(RunError::Solver)?;
        let pass = d_res.pass && c_res.pass && d_ord.pass && c_ord.pass && h_ord.pass;
        v.record(
            "barriers",
            pass,
            json!({
                "dirichlet": {"a": b.dirichlet.a, "kappa": b.dirichlet.kappa, "residual": d_res, "below_u": d_ord},
                "cauchy": {"residual": c_res, "below_u": c_ord},
                "harmonic": {"above_u": h_ord},
                "pass": pass,
            }),
        );
    }

    if on("constants") {
        let lip = time_lipschitz_estimate(u).map_err(RunError::Solver)?;
        let semi = time_semiconcavity_estimate(u).map_err(RunError::Solver)?;
        let lip_pass = lip <= ledger.kappa_u + tol.constants;
        let semi_pass = semi <= ledger.c_u + tol.constants;
        v.record(
            "constants",
            lip_pass && semi_pass,
            json!({
                "time_lipschitz": lip, "kappa_u": ledger.kappa_u, "lipschitz_pass": lip_pass,
                "time_semiconcavity": semi, "c_u": ledger.c_u, "semiconcavity_pass": semi_pass,
                "rho_observed_constant": rho_report.observed_constant,
            }),
        );
    }

    if on("boundary") {
        let r = boundary_attainment_report(u, problem, tol.lateral, tol.initial);
        v.record("boundary", r.pass, to_value(&r));
    }

    if let (true, Some(b)) = (on("transforms"), &barriers) {
        transforms(built, u, b, ledger, &mut v)?;
    }

    if let (true, Some(b)) = (on("lemmas"), &barriers) {
        lemmas(built, u, b, tol, &mut v)?;
    }
    Ok(v)
}

struct Barriers {
    dirichlet: DirichletBarrier,
    cauchy: GridFunction,
    harmonic: GridFunction,
}

fn transforms(
    built: &Built,
    u: &GridFunction,
    barriers: &Barriers,
    ledger: &ConstantsLedger,
    v: &mut Verdict,
) -> Result<()> {
    let problem = &built.problem;
    let grid = built.grid();
    let dim = grid.dim();
    let h = grid.spacing();

    let mut scaled = Vec::new();
    let mut pass = true;
    for s in TIME_SCALES {
        let (_, r) = time_scale_report(u, u, s, ledger).map_err(RunError::Solver)?;
        pass &= r.pass;
        scaled.push(json!({"s": s, "report": r}));
    }
    v.record("time_scale", pass, json!({"runs": scaled, "pass": pass}));

    let (_, r) = semiconcavity_average_report(u, u, AVERAGE_SCALE, ledger).map_err(RunError::Solver)?;
    v.record("semiconcave_avg", r.pass, json!({"s": AVERAGE_SCALE, "report": r, "pass": r.pass}));

    let moduli = moduli_from_barriers(
        problem,
        &barriers.dirichlet.u,
        &barriers.cauchy,
        &barriers.harmonic,
        ledger,
        h,
    )
    .map_err(RunError::Solver)?;
    let mut xi = vec![0.0; dim];
    xi[0] = h;
    let (_, w) = walsh_translate(u, &xi, &moduli).map_err(RunError::Solver)?;
    v.record("walsh", w.report.pass, json!({"xi": xi, "report": w, "pass": w.report.pass}));

    let bound = built
        .scenario
        .exact
        .as_ref()
        .and_then(|e| exact_hessian_bound(e, WITNESS_RADIUS));
    let mut runs = Vec::new();
    let mut pass = true;
    for radius in MOBIUS_RADII {
        let mut a = vec![0.0; dim];
        a[0] = radius;
        let (_, m) = mobius_average(u, &a, problem, WITNESS_RADIUS).map_err(RunError::Solver)?;
        let witness_pass = bound.is_none_or(|b| m.witness_max <= 1.5 * b);
        pass &= m.report.pass && witness_pass;
        runs.push(json!({"a": a, "report": m, "witness_bound": bound.map(|b| 1.5 * b), "witness_pass": witness_pass}));
    }
    v.record("mobius", pass, json!({"runs": runs, "pass": pass}));
    Ok(())
}

fn lemmas(
    built: &Built,
    u: &GridFunction,
    barriers: &Barriers,
    tol: &ResolvedTolerances,
    v: &mut Verdict,
) -> Result<()> {
    let grid = built.grid();
    let time = u.time();
    let last = time.last();
    // Centre node and a ball well inside the domain.
    let centre = (0..grid.len())
        .min_by(|&a, &b| {
            let na: f64 = grid.point(a).iter().map(|x| x * x).sum();
            let nb: f64 = grid.point(b).iter().map(|x| x * x).sum();
            na.total_cmp(&nb)
        })
        .expect("grid has nodes");
    let k0 = time.nodes().iter().position(|&t| t >= 0.5 * last).expect("time grid reaches its end");
    let t0 = time.t(k0);
    let eps = 0.5 * t0.min(last - t0).max(time.max_step());
    let eps = eps.min(t0).min(last - t0);
    let submean = if eps > 0.0 {
        Some(submean_check(u, t0, centre, eps, 0.25, tol.lemma).map_err(RunError::Solver)?)
    } else {
        None
    };
    let slice = slice_l1_bound_check(u, &barriers.cauchy, 0.25 * last, 0.5 * last, last, tol.lemma).map_err(RunError::Solver)?;
    let pass = submean.as_ref().is_none_or(|r| r.pass) && slice.pass;
    v.record(
        "lemmas",
        pass,
        json!({"submean": submean, "submean_t0": t0, "submean_eps": eps, "slice_l1": slice, "pass": pass}),
    );
    Ok(())
}

/// Builds, solves and verifies a scenario, writing artifacts to `opts.out`.
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<Outcome> {
    let built = build(scenario)?;
    if let Some(out) = &opts.out {
        std::fs::create_dir_all(out).map_err(RunError::io(out))?;
    }
    let start = Instant::now();
    let solution = match solve(&built) {
        Ok(s) => s,
        Err(e) => {
            write_error(opts.out.as_deref(), &e);
            return Err(e);
        }
    };
    let solve_seconds = start.elapsed().as_secs_f64();
    log::info!("{}: solved in {solve_seconds:.2} s", scenario.name);
    let tolerances = resolve_tolerances(&built, &solution.u, opts.tol_scale);
    let checks = enabled(scenario, opts);
    let start = Instant::now();
    let verdict = match verify(
        &built,
        &solution.u,
        &solution.rho,
        &solution.rho_report,
        &solution.ledger,
        &tolerances,
        &checks,
    ) {
        Ok(v) => v,
        Err(e) => {
            write_error(opts.out.as_deref(), &e);
            return Err(e);
        }
    };
    let outcome = Outcome {
        built,
        solution,
        verdict,
        tolerances,
        solve_seconds,
        check_seconds: start.elapsed().as_secs_f64(),
    };
    if let Some(out) = &opts.out {
        write_outputs(out, &outcome)?;
    }
    Ok(outcome)
}

pub fn write_outputs(out: &Path, outcome: &Outcome) -> Result<()> {
    io::write_solution(&out.join("solution.csv"), &outcome.solution.u)?;
    io::write_json(&out.join("ledger.json"), &outcome.solution.ledger)?;
    io::write_json(&out.join("reports.json"), &outcome.reports_json())?;
    io::write_dictionary(&out.join("dictionary.json"), &outcome.built.dictionary)?;
    io::write_grid(&out.join("grid.json"), outcome.built.grid())
}

/// Writes `error.json` when an output directory exists; failures to do so
/// are only logged.
pub fn write_error(out: Option<&Path>, err: &RunError) {
    if let Some(out) = out {
        if std::fs::create_dir_all(out).is_ok() {
            if let Err(e) = io::write_json(&out.join("error.json"), &err.to_json()) {
                log::warn!("could not write error.json: {e}");
            }
        }
    }
}

/// Re-runs the checks on a stored solution.
pub fn verify_stored(csv: &Path, scenario: &Scenario, opts: &RunOptions) -> Result<(Verdict, ResolvedTolerances)> {
    let built = build(scenario)?;
    let problem = &built.problem;
    let grid = built.grid().clone();
    let u = io::read_solution(csv, grid.clone(), built.time.clone(), |t| problem.h.lateral_trace(&grid, t))?;
    let sopts = scenario.solver_options();
    let (rho, rho_report) = solve_problem_rho(problem, &built.op, &sopts).map_err(RunError::Solver)?;
    let ledger = compute_constants(problem, &built.time, &rho_report);
    let tol = resolve_tolerances(&built, &u, opts.tol_scale);
    let checks = enabled(scenario, opts);
    let verdict = verify(&built, &u, &rho, &rho_report, &ledger, &tol, &checks)?;
    Ok((verdict, tol))
}
