//! Run configuration: a flat key-value text file plus `--key=value`
//! command-line overrides. Unknown keys are errors, every value is
//! validated at load time, and the fully resolved configuration is
//! embedded in every report for reproducibility.

use std::fmt;

use qanomaly::brst::ConstraintSystem;
use qanomaly::fixture::default_fixture;
use qanomaly::obstruction::LabParams;
use qanomaly::star::SchemeSpec;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeChoice {
    Wick,
    Weyl,
}

/// All knobs of a run. Defaults come from the embedded fixture plus the
/// documented tolerance defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub omega1: f64,
    pub omega2: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub energy: f64,
    pub alpha: f64,
    pub beta: f64,
    pub scheme: SchemeChoice,
    pub hbar_order: usize,
    pub zero_tol: f64,
    pub cert_tol: f64,
    pub solve_tol: f64,
    pub degree_cap: usize,
    pub seed: u64,
    /// Rows emitted per CSV sample file.
    pub samples: usize,
    pub phi_grid: usize,
    pub quad_points: usize,
    pub orbit_steps: usize,
    pub closure_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let fx = default_fixture();
        let lab = LabParams::default();
        RunConfig {
            omega1: fx.system.omega1,
            omega2: fx.system.omega2,
            a: fx.system.a,
            b: fx.system.b,
            c: fx.system.c,
            energy: fx.system.energy,
            alpha: fx.alpha,
            beta: fx.beta,
            scheme: SchemeChoice::Wick,
            hbar_order: lab.hbar_order,
            zero_tol: lab.zero_tol,
            cert_tol: lab.cert_tol,
            solve_tol: lab.solve_tol,
            degree_cap: lab.degree_cap,
            seed: lab.seed,
            samples: 256,
            phi_grid: lab.phi_grid,
            quad_points: lab.quad_points,
            orbit_steps: lab.orbit_steps,
            closure_tol: lab.closure_tol,
        }
    }
}

/// Configuration failure with enough context to locate it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError { message: msg.into() }
}

impl RunConfig {
    /// Parse a `key = value` config file body. Lines starting with `#`
    /// and blank lines are ignored; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(format!("line {}: expected `key = value`, got `{raw}`", lineno + 1)));
            };
            cfg.set(key.trim(), value.trim())
                .map_err(|e| err(format!("line {}: {}", lineno + 1, e.message)))?;
        }
        Ok(cfg)
    }

    /// Apply a single override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let parse_f64 = |v: &str| -> Result<f64, ConfigError> {
            v.parse::<f64>().map_err(|_| err(format!("key `{key}`: `{v}` is not a number")))
        };
        let parse_usize = |v: &str| -> Result<usize, ConfigError> {
            v.parse::<usize>()
                .map_err(|_| err(format!("key `{key}`: `{v}` is not a nonnegative integer")))
        };
        match key {
            "omega1" => self.omega1 = parse_f64(value)?,
            "omega2" => self.omega2 = parse_f64(value)?,
            "a" => self.a = parse_f64(value)?,
            "b" => self.b = parse_f64(value)?,
            "c" => self.c = parse_f64(value)?,
            "energy" => self.energy = parse_f64(value)?,
            "alpha" => self.alpha = parse_f64(value)?,
            "beta" => self.beta = parse_f64(value)?,
            "scheme" => {
                self.scheme = match value {
                    "wick" => SchemeChoice::Wick,
                    "weyl" => SchemeChoice::Weyl,
                    other => return Err(err(format!("key `scheme`: `{other}` is not wick|weyl"))),
                }
            }
            "hbar_order" => self.hbar_order = parse_usize(value)?,
            "zero_tol" => self.zero_tol = parse_f64(value)?,
            "cert_tol" => self.cert_tol = parse_f64(value)?,
            "solve_tol" => self.solve_tol = parse_f64(value)?,
            "degree_cap" => self.degree_cap = parse_usize(value)?,
            "seed" => {
                self.seed = value
                    .parse::<u64>()
                    .map_err(|_| err(format!("key `seed`: `{value}` is not an unsigned integer")))?
            }
            "samples" => self.samples = parse_usize(value)?,
            "phi_grid" => self.phi_grid = parse_usize(value)?,
            "quad_points" => self.quad_points = parse_usize(value)?,
            "orbit_steps" => self.orbit_steps = parse_usize(value)?,
            "closure_tol" => self.closure_tol = parse_f64(value)?,
            other => return Err(err(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Validate ranges. `needs_ellipse` additionally requires the
    /// perturbation form to be positive definite or identically zero
    /// (the unperturbed case is handled downstream as degenerate
    /// geometry, any other indefinite form is rejected here).
    pub fn validate(&self, needs_ellipse: bool) -> Result<(), ConfigError> {
        if !(self.omega1 > 0.0) || !(self.omega2 > 0.0) {
            return Err(err("omega1 and omega2 must be positive"));
        }
        if !(self.energy > 0.0) {
            return Err(err("energy must be positive"));
        }
        if self.alpha == 0.0 || !self.alpha.is_finite() {
            return Err(err("alpha must be a nonzero finite real"));
        }
        if self.beta == 0.0 || !self.beta.is_finite() {
            return Err(err("beta must be a nonzero finite real"));
        }
        if self.hbar_order < 1 {
            return Err(err("hbar_order must be at least 1"));
        }
        for (name, v) in [
            ("zero_tol", self.zero_tol),
            ("cert_tol", self.cert_tol),
            ("solve_tol", self.solve_tol),
            ("closure_tol", self.closure_tol),
        ] {
            if !(v > 0.0) {
                return Err(err(format!("{name} must be positive")));
            }
        }
        if self.samples < 2 || self.phi_grid < 1 || self.quad_points < 4 || self.orbit_steps < 100 {
            return Err(err(
                "samples >= 2, phi_grid >= 1, quad_points >= 4, orbit_steps >= 100 required",
            ));
        }
        if needs_ellipse {
            let sys = self.system();
            if !sys.is_unperturbed() && !sys.positive_definite() {
                return Err(err(format!(
                    "quadratic form [[a, c], [c, b]] = [[{}, {}], [{}, {}]] must be positive definite for the elliptic analysis",
                    self.a, self.c, self.c, self.b
                )));
            }
        }
        Ok(())
    }

    pub fn system(&self) -> ConstraintSystem {
        ConstraintSystem {
            omega1: self.omega1,
            omega2: self.omega2,
            a: self.a,
            b: self.b,
            c: self.c,
            energy: self.energy,
        }
    }

    pub fn scheme_spec(&self) -> Result<SchemeSpec, ConfigError> {
        match self.scheme {
            SchemeChoice::Wick => {
                SchemeSpec::wick(self.alpha, self.beta).map_err(|e| err(e.to_string()))
            }
            SchemeChoice::Weyl => Ok(SchemeSpec::weyl()),
        }
    }

    pub fn lab_params(&self) -> LabParams {
        LabParams {
            hbar_order: self.hbar_order,
            zero_tol: self.zero_tol,
            cert_tol: self.cert_tol,
            solve_tol: self.solve_tol,
            degree_cap: self.degree_cap,
            phi_grid: self.phi_grid,
            quad_points: self.quad_points,
            orbit_steps: self.orbit_steps,
            closure_tol: self.closure_tol,
            chain_tol: 1e-10,
            seed: self.seed,
        }
    }
}
