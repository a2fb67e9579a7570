//! Scenario files: problem data, grids, tolerances and the checks to run.

use std::path::Path;
use std::sync::Arc;

use pluriflow_core::domain::Grading;
use pluriflow_core::ma_ops::SolverOptions;
use pluriflow_core::{BallDomain, BoundaryData, Density, FlowProblem, HermitianDictionary, MaOperator, SpaceGrid, TimeGrid};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RunError};
use crate::families::{DensitySpec, FConfig, Profile};
use crate::manufacture::manufactured_density;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub h_x: f64,
    /// Number of time steps before grading.
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(default = "uniform")]
    pub grading: Grading,
}

fn uniform() -> Grading {
    Grading::Uniform
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonConfig {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "S")]
    pub s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub lateral: Profile,
    pub h0: Profile,
    pub kappa_h: f64,
    #[serde(rename = "C_h")]
    pub c_h: f64,
}

/// Tolerance overrides; unset entries use grid-dependent defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub pde: Option<f64>,
    pub bc: Option<f64>,
    pub sandwich: Option<f64>,
    pub lateral: Option<f64>,
    pub initial: Option<f64>,
    pub constants: Option<f64>,
    pub lemma: Option<f64>,
    /// Largest accepted `L∞` error against the exact solution.
    pub error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_sweeps")]
    pub max_sweeps: usize,
    #[serde(default)]
    pub omega: Option<f64>,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_sweeps() -> usize {
    100_000
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: default_tol(),
            max_sweeps: default_sweeps(),
            omega: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub domain: DomainConfig,
    pub grid: GridConfig,
    pub horizon: HorizonConfig,
    pub g: DensitySpec,
    #[serde(rename = "F", default)]
    pub f: FConfig,
    /// Boundary data; the traces of `exact` when omitted.
    #[serde(default)]
    pub h: Option<BoundaryConfig>,
    /// Exact solution, for manufactured scenarios.
    #[serde(default)]
    pub exact: Option<Profile>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Checks to run; all of them when omitted.
    #[serde(default)]
    pub checks: Option<Vec<String>>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Spatial steps of a convergence study.
    #[serde(default)]
    pub ladder: Option<Vec<f64>>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(RunError::io(path))?;
        serde_json::from_str(&text).map_err(|e| RunError::Schema(format!("{}: {e}", path.display())))
    }

    /// The same scenario at spatial step `h_x` with the time step scaled in
    /// proportion.
    pub fn refined(&self, h_x: f64) -> Scenario {
        let mut s = self.clone();
        let ratio = self.grid.h_x / h_x;
        s.grid.h_x = h_x;
        s.grid.k = ((self.grid.k as f64) * ratio).round().max(1.0) as usize;
        s
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver.tol,
            max_sweeps: self.solver.max_sweeps,
            omega: self.solver.omega,
            record_history: false,
        }
    }

    pub fn boundary_config(&self) -> Result<BoundaryConfig> {
        if let Some(h) = &self.h {
            return Ok(h.clone());
        }
        let exact = self
            .exact
            .as_ref()
            .ok_or_else(|| RunError::Schema("either `h` or `exact` must be given".into()))?;
        let c_h = exact
            .c_bound()
            .ok_or_else(|| RunError::Schema("C_h of the exact solution must be declared through `h`".into()))?;
        Ok(BoundaryConfig {
            lateral: exact.clone(),
            h0: exact.clone(),
            kappa_h: exact.kappa_bound(self.horizon.s),
            c_h,
        })
    }

    /// Checks the fields that do not need a grid.
    pub fn validate(&self) -> Result<()> {
        if !(self.domain.n == 1 || self.domain.n == 2) {
            return Err(RunError::Schema(format!("n = {} is not supported (1 or 2)", self.domain.n)));
        }
        if !(self.grid.h_x > 0.0 && self.grid.h_x <= 0.5) {
            return Err(RunError::Schema(format!("h_x = {} outside (0, 1/2]", self.grid.h_x)));
        }
        if self.grid.k == 0 {
            return Err(RunError::Schema("K must be positive".into()));
        }
        if !(0.0 < self.horizon.s && self.horizon.s < self.horizon.t && self.horizon.t.is_finite()) {
            return Err(RunError::Schema(format!(
                "need 0 < S < T < ∞, got S = {}, T = {}",
                self.horizon.s, self.horizon.t
            )));
        }
        self.g.validate()?;
        if matches!(self.g, DensitySpec::Manufactured) && self.exact.is_none() {
            return Err(RunError::Schema("g = manufactured needs an exact solution".into()));
        }
        if let Some(e) = &self.exact {
            e.validate("exact")?;
        }
        if let Some(h) = &self.h {
            h.lateral.validate("h.lateral")?;
            h.h0.validate("h.h0")?;
            if !(h.kappa_h >= 0.0) {
                return Err(RunError::Schema("kappa_h must be non-negative".into()));
            }
        }
        if let Some(checks) = &self.checks {
            for c in checks {
                if !crate::run::CHECKS.contains(&c.as_str()) {
                    return Err(RunError::Schema(format!(
                        "unknown check `{c}`; known: {}",
                        crate::run::CHECKS.join(", ")
                    )));
                }
            }
        }
        if let Some(ladder) = &self.ladder {
            if ladder.iter().any(|h| !(*h > 0.0 && *h <= 0.5)) {
                return Err(RunError::Schema("ladder steps must lie in (0, 1/2]".into()));
            }
        }
        Ok(())
    }
}

/// A scenario turned into solver inputs.
pub struct Built {
    pub scenario: Scenario,
    pub problem: FlowProblem,
    pub time: Arc<TimeGrid>,
    pub dictionary: HermitianDictionary,
    pub op: MaOperator,
}

impl Built {
    pub fn grid(&self) -> &Arc<SpaceGrid> {
        &self.problem.space
    }
}

/// Builds grids and data and verifies the declared hypotheses; every failure
/// here is a schema or data error.
pub fn build(scenario: &Scenario) -> Result<Built> {
    scenario.validate()?;
    let n = scenario.domain.n;
    let domain = BallDomain::new(n).map_err(|e| RunError::Schema(e.to_string()))?;
    let space = Arc::new(SpaceGrid::build(domain, scenario.grid.h_x).map_err(|e| RunError::Schema(e.to_string()))?);
    let (t, s) = (scenario.horizon.t, scenario.horizon.s);
    let time = Arc::new(
        TimeGrid::with_grading(t, s, scenario.grid.k, scenario.grid.grading)
            .map_err(|e| RunError::Schema(e.to_string()))?,
    );
    let dictionary = HermitianDictionary::standard(n).map_err(|e| RunError::Schema(e.to_string()))?;
    let op = MaOperator::new(&space, &dictionary).map_err(RunError::Solver)?;

    let f = scenario.f.build()?;
    let g = match &scenario.g {
        DensitySpec::Manufactured => {
            let exact = scenario.exact.as_ref().expect("validated");
            manufactured_density(exact, &f, &space, t)?
        }
        spec => {
            let p = spec.exponent(n)?;
            let spec = spec.clone();
            Density::sample(&space, move |z| spec.eval(z), p).map_err(RunError::Data)?
        }
    };
    let bc = scenario.boundary_config()?;
    let (lateral, h0) = (bc.lateral.clone(), bc.h0.clone());
    let h = BoundaryData::new(move |t, z| lateral.eval(t, z), move |z| h0.eval(0.0, z), bc.kappa_h, bc.c_h);
    h.verify(&space, s, &op).map_err(RunError::Data)?;
    let problem = FlowProblem::new(space, t, s, g, f, h).map_err(RunError::Data)?;
    problem.f.verify(&problem.space, t, 10.0).map_err(RunError::Data)?;
    Ok(Built {
        scenario: scenario.clone(),
        problem,
        time,
        dictionary,
        op,
    })
}
