use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sirsilv::control::{CostWeights, SweepOptions};
use sirsilv::{nondimensionalize, DimensionalParams, DimensionlessParams, Scales, SolverOptions, SystemState};

use crate::CliError;

/// Packaged reference scenario.
pub const TABLE1_JSON: &str = include_str!("../configs/table1.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelForm {
    Dimensional,
    Dimensionless,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    #[serde(rename = "S_h")]
    pub s_h: f64,
    #[serde(rename = "I_h")]
    pub i_h: f64,
    /// Dimensional runs only.
    #[serde(rename = "R_h", default, skip_serializing_if = "Option::is_none")]
    pub r_h: Option<f64>,
    #[serde(rename = "S_v")]
    pub s_v: f64,
    #[serde(rename = "I_v")]
    pub i_v: f64,
    #[serde(rename = "D")]
    pub d: f64,
}

impl InitialState {
    pub fn reduced(&self) -> SystemState {
        SystemState::new(self.s_h, self.i_h, self.s_v, self.i_v, self.d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    pub c: f64,
    pub q: f64,
    pub r: f64,
    pub a: f64,
    pub u_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Weight of the previous control: `u_{k+1} = d u_k + (1 - d) u*`.
    pub relaxation: f64,
    pub initial_control: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_intervals: Option<usize>,
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_iter: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let d = SweepOptions::default();
        Self {
            relaxation: d.relaxation,
            initial_control: d.initial_control,
            grid_intervals: None,
            tol_abs: d.tol_abs,
            tol_rel: d.tol_rel,
            max_iter: d.max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model_form: ModelForm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimensional_params: Option<DimensionalParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimensionless_params: Option<DimensionlessParams>,
    pub initial_state: InitialState,
    /// Days for dimensional runs, rescaled time otherwise.
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostConfig>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub k0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Reads a scenario from a config file or from a previous run's
/// `summary.json`, applying `key=value` overrides before validation.
pub fn load(path: &Path, overrides: &[String]) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    parse(&text, overrides).map_err(|e| match e {
        CliError::Config(m) => config_err(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse(text: &str, overrides: &[String]) -> Result<ScenarioConfig, CliError> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
    if let Some(inner) = value.get("config").filter(|_| value.get("model_form").is_none()) {
        value = inner.clone();
    }
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    let cfg: ScenarioConfig = serde_json::from_value(value).map_err(|e| config_err(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// `a.b.c=value`; the value is read as JSON when it parses, else as a string.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| config_err(format!("override `{spec}` is not key=value")))?;
    let new: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        if key.is_empty() {
            return Err(config_err(format!("override `{spec}` has an empty key")));
        }
        let obj = node
            .as_object_mut()
            .ok_or_else(|| config_err(format!("override `{spec}`: `{}` is not an object", keys[..i].join("."))))?;
        if i + 1 == keys.len() {
            obj.insert(key.to_string(), new);
            return Ok(());
        }
        node = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!()
}

impl ScenarioConfig {
    pub fn table1() -> Self {
        parse(TABLE1_JSON, &[]).expect("packaged config is valid")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let field = |name: &str, e: sirsilv::Error| config_err(format!("{name}: {e}"));
        match (self.model_form, &self.dimensional_params, &self.dimensionless_params) {
            (ModelForm::Dimensional, Some(p), None) => p.validate().map_err(|e| field("dimensional_params", e))?,
            (ModelForm::Dimensionless, None, Some(p)) => p.validate().map_err(|e| field("dimensionless_params", e))?,
            (ModelForm::Dimensional, _, _) => {
                return Err(config_err("model_form dimensional needs dimensional_params and no dimensionless_params"))
            }
            (ModelForm::Dimensionless, _, _) => {
                return Err(config_err("model_form dimensionless needs dimensionless_params and no dimensional_params"))
            }
        }
        let s = &self.initial_state;
        self.initial_state.reduced().validate_nonnegative().map_err(|e| field("initial_state", e))?;
        match (self.model_form, s.r_h) {
            (ModelForm::Dimensional, Some(r_h)) => {
                let n_h = self.dimensional_params.as_ref().map(|p| p.n_h).unwrap_or_default();
                if r_h.is_nan() || r_h < 0.0 || (s.s_h + s.i_h + r_h - n_h).abs() > 1e-9 * n_h {
                    return Err(config_err(format!(
                        "initial_state: S_h + I_h + R_h = {} must equal N_h = {n_h}",
                        s.s_h + s.i_h + r_h
                    )));
                }
            }
            (ModelForm::Dimensional, None) => return Err(config_err("initial_state.R_h is required for dimensional runs")),
            (ModelForm::Dimensionless, Some(_)) => {
                return Err(config_err("initial_state.R_h is not part of the rescaled state"))
            }
            (ModelForm::Dimensionless, None) => {}
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(config_err(format!("horizon must be positive, got {}", self.horizon)));
        }
        self.solver.validate().map_err(|e| field("solver", e))?;
        if let Some(w) = self.weights() {
            w.validate().map_err(|e| field("cost", e))?;
            self.sweep_options().validate(&w).map_err(|e| field("sweep", e))?;
        }
        if matches!(self.sweep.grid_intervals, Some(n) if n < 2) {
            return Err(config_err("sweep.grid_intervals must be at least 2"));
        }
        if let Some(k) = self.k0.iter().find(|k| !(k.is_finite() && **k <= -2.0)) {
            return Err(config_err(format!("k0: {k} > -2 is not possible, the first integral never exceeds -2")));
        }
        Ok(())
    }

    pub fn units(&self) -> &'static str {
        match self.model_form {
            ModelForm::Dimensional => {
                "dimensional: time in days, populations in individuals, u in predators per day; \
                 solved in rescaled variables with the objective mapped exactly"
            }
            ModelForm::Dimensionless => "dimensionless: rescaled time and densities",
        }
    }

    /// Control grid size, defaulting to 2000 intervals per 120 days
    /// (rounded to even, at least 100) or 2000 for rescaled runs.
    pub fn grid_intervals(&self) -> usize {
        self.sweep.grid_intervals.unwrap_or_else(|| match self.model_form {
            ModelForm::Dimensional => {
                let n = (2000.0 * self.horizon / 120.0).round() as usize;
                (n + n % 2).max(100)
            }
            ModelForm::Dimensionless => 2000,
        })
    }

    pub fn weights(&self) -> Option<CostWeights> {
        self.cost.map(|c| CostWeights { c: c.c, q: c.q, r: c.r, a: c.a, u_max: c.u_max, horizon: self.horizon })
    }

    fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            relaxation: self.sweep.relaxation,
            initial_control: self.sweep.initial_control,
            grid_intervals: self.grid_intervals(),
            tol_abs: self.sweep.tol_abs,
            tol_rel: self.sweep.tol_rel,
            max_iter: self.sweep.max_iter,
            solver: self.solver,
        }
    }

    /// Copy with every default made explicit and the output location dropped,
    /// suitable for echoing into a summary.
    pub fn resolved(&self) -> ScenarioConfig {
        let mut c = self.clone();
        c.sweep.grid_intervals = Some(self.grid_intervals());
        c.output_dir = None;
        c
    }

    /// The problem in the variables the solvers work in.
    pub fn rescaled(&self) -> Result<Rescaled, CliError> {
        let n = self.grid_intervals();
        let (params, scales, x0, horizon) = match self.model_form {
            ModelForm::Dimensional => {
                let dp = self.dimensional_params.as_ref().expect("validated");
                let (p, s) = nondimensionalize(dp).map_err(|e| config_err(format!("dimensional_params: {e}")))?;
                (p, Some(s), s.state_to_dimensionless(&self.initial_state.reduced()), s.time_to_dimensionless(self.horizon))
            }
            ModelForm::Dimensionless => {
                (self.dimensionless_params.expect("validated"), None, self.initial_state.reduced(), self.horizon)
            }
        };
        let problem = self.weights().map(|w| {
            let opts = self.sweep_options();
            match &scales {
                Some(s) => (w.to_dimensionless(s), opts.to_dimensionless(s)),
                None => (w, opts),
            }
        });
        Ok(Rescaled { params, scales, x0, horizon, intervals: n, solver: self.solver, problem })
    }
}

pub struct Rescaled {
    pub params: DimensionlessParams,
    /// Present for dimensional scenarios.
    pub scales: Option<Scales>,
    pub x0: SystemState,
    pub horizon: f64,
    pub intervals: usize,
    pub solver: SolverOptions,
    pub problem: Option<(CostWeights, SweepOptions)>,
}
