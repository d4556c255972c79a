//! JSON run configuration, named presets, and dotted-path overrides.
//!
//! ```json
//! {
//!   "kernel":  { "family": "oscillatory", "sigma": 1.2, "gamma": 1.0, "alpha": 0.5 },
//!   "damping": { "kind": "affine", "a": 1.0, "b": 1.0 },
//!   "initial": { "u0": { "kind": "sin-mode", "mode": 1 },
//!                "u1": { "kind": "sin-mode", "mode": 2 } },
//!   "forcing": { "kind": "tempered-sine" },
//!   "grid":    { "intervals": 32 },
//!   "time":    { "horizon": 1.0, "steps": 256 },
//!   "solver":  { "fp_tol": 1e-12, "fp_max_iters": 50 },
//!   "study":   { "axis": "temporal", "levels": 5,
//!                "sweep": [ { "label": "gamma=0", "set": { "kernel.gamma": 0.0 } } ] }
//! }
//! ```

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernel::{KernelFamily, KernelSpec};
use crate::model::{DampingFunction, Forcing, Profile, ProblemSpec};
use crate::stepper::SolverConfig;
use crate::study::{Axis, StudyCell, StudySpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub family: KernelFamily,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "one")]
    pub alpha: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DampingSection {
    Affine {
        a: f64,
        b: f64,
        #[serde(default)]
        v_max: Option<f64>,
    },
    SqrtAffine {
        a: f64,
        b: f64,
        #[serde(default)]
        v_max: Option<f64>,
    },
    Constant {
        c: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileSection {
    Zero,
    SinMode {
        #[serde(default = "one_u32")]
        mode: u32,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Polynomial {
        p: i32,
        q: i32,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

fn one_u32() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub u0: ProfileSection,
    pub u1: ProfileSection,
}

/// Forcing registry. `tempered-sine` takes `σ` and `α` from the kernel unless
/// given explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ForcingSection {
    #[default]
    Zero,
    TemperedSine {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one_u32")]
        mode: u32,
        #[serde(default)]
        sigma: Option<f64>,
        #[serde(default)]
        alpha: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub intervals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub horizon: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub fp_tol: f64,
    pub fp_max_iters: usize,
    pub record_energy: bool,
    pub snapshot_stride: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSection {
            fp_tol: d.fp_tol,
            fp_max_iters: d.fp_max_iters,
            record_energy: d.record_energy,
            snapshot_stride: d.snapshot_stride,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCell {
    pub label: String,
    #[serde(default)]
    pub set: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub axis: Axis,
    pub levels: usize,
    #[serde(default)]
    pub sweep: Vec<SweepCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilitySection {
    /// Multiplier on the data functional.
    pub safety: f64,
    /// Fraction of final steps examined for late energy growth.
    pub tail_fraction: f64,
    /// Allowed relative excess over the running maximum in that window.
    pub tail_tolerance: f64,
}

impl Default for StabilitySection {
    fn default() -> Self {
        StabilitySection {
            safety: 1e3,
            tail_fraction: 0.1,
            tail_tolerance: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub kernel: KernelSection,
    pub damping: DampingSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub forcing: ForcingSection,
    pub grid: GridSection,
    pub time: TimeSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub study: Option<StudySection>,
    #[serde(default)]
    pub stability: StabilitySection,
}

impl Config {
    pub fn from_value(value: Value) -> Result<Self> {
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_value(serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config is always serializable")
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        let k = &self.kernel;
        if k.family == KernelFamily::None {
            return Ok(KernelSpec::none());
        }
        let sigma = k
            .sigma
            .ok_or_else(|| Error::Config("kernel.sigma is required for this family".into()))?;
        Ok(KernelSpec {
            family: k.family,
            sigma,
            gamma: k.gamma,
            alpha: k.alpha,
        })
    }

    /// Builds the problem without validating it; see [`ProblemSpec::validate`].
    pub fn problem(&self) -> Result<ProblemSpec> {
        let kernel = self.kernel_spec()?;
        let damping = match self.damping {
            DampingSection::Affine { a, b, v_max } => {
                with_v_max(DampingFunction::affine(a, b), v_max)
            }
            DampingSection::SqrtAffine { a, b, v_max } => {
                with_v_max(DampingFunction::sqrt_affine(a, b), v_max)
            }
            DampingSection::Constant { c } => DampingFunction::constant(c),
        };
        let forcing = match self.forcing {
            ForcingSection::Zero => Forcing::Zero,
            ForcingSection::TemperedSine {
                amplitude,
                mode,
                sigma,
                alpha,
            } => {
                let sigma = sigma.or(self.kernel.sigma).ok_or_else(|| {
                    Error::Config("forcing.sigma needed when the kernel has none".into())
                })?;
                Forcing::TemperedSine {
                    amplitude,
                    sigma,
                    alpha: alpha.unwrap_or(self.kernel.alpha),
                    mode,
                }
            }
        };
        Ok(ProblemSpec {
            u0: profile(&self.initial.u0),
            u1: profile(&self.initial.u1),
            forcing,
            damping,
            kernel,
            horizon: self.time.horizon,
        })
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.intervals)
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            fp_tol: self.solver.fp_tol,
            fp_max_iters: self.solver.fp_max_iters,
            record_energy: self.solver.record_energy,
            snapshot_stride: self.solver.snapshot_stride,
        }
    }

    /// Expands the `study` section into one problem per sweep cell. With an
    /// empty sweep the base problem forms a single cell.
    pub fn study_spec(&self) -> Result<StudySpec> {
        let section = self
            .study
            .as_ref()
            .ok_or_else(|| Error::Config("configuration has no study section".into()))?;
        let base = self.to_value();
        let mut cells = Vec::new();
        if section.sweep.is_empty() {
            cells.push(StudyCell {
                label: "base".into(),
                spec: self.problem()?,
            });
        }
        for cell in &section.sweep {
            let mut v = base.clone();
            for (path, val) in &cell.set {
                set_path(&mut v, path, val.clone())?;
            }
            let cfg = Config::from_value(v)?;
            cells.push(StudyCell {
                label: cell.label.clone(),
                spec: cfg.problem()?,
            });
        }
        Ok(StudySpec {
            cells,
            axis: section.axis,
            base_intervals: self.grid.intervals,
            base_steps: self.time.steps,
            levels: section.levels,
            solver: self.solver(),
        })
    }
}

fn with_v_max(d: DampingFunction, v_max: Option<f64>) -> DampingFunction {
    match v_max {
        Some(v) => d.with_v_max(v),
        None => d,
    }
}

fn profile(p: &ProfileSection) -> Profile {
    match *p {
        ProfileSection::Zero => Profile::Zero,
        ProfileSection::SinMode { mode, amplitude } => Profile::SinMode { mode, amplitude },
        ProfileSection::Polynomial { p, q, amplitude } => Profile::Polynomial { amplitude, p, q },
    }
}

/// Sets `value[a][b][c] = new` for the path `a.b.c`, creating objects on the way.
pub fn set_path(value: &mut Value, path: &str, new: Value) -> Result<()> {
    let mut cur = value;
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed override path `{path}`")));
    }
    for (i, key) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("`{path}`: `{key}` is not inside an object")))?;
        if i + 1 == parts.len() {
            obj.insert((*key).to_string(), new);
            return Ok(());
        }
        cur = obj
            .entry((*key).to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("loop returns on the last path component")
}

/// Applies a `key.path=value` override. The right-hand side is parsed as JSON
/// and falls back to a plain string.
pub fn apply_override(value: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    set_path(value, path.trim(), parsed)
}

pub const PRESET_NAMES: &[&str] = &[
    "example1",
    "example2",
    "example1-temporal",
    "example1-spatial",
    "example2-temporal",
    "example2-spatial",
    "example2-long",
    "zero",
];

fn example1(sigma: f64, gamma: f64, alpha: f64, j: usize, n: usize) -> Value {
    serde_json::json!({
        "kernel": { "family": "oscillatory", "sigma": sigma, "gamma": gamma, "alpha": alpha },
        "damping": { "kind": "affine", "a": 1.0, "b": 1.0 },
        "initial": {
            "u0": { "kind": "sin-mode", "mode": 1, "amplitude": 1.0 },
            "u1": { "kind": "sin-mode", "mode": 2, "amplitude": 1.0 }
        },
        "forcing": { "kind": "tempered-sine", "amplitude": 1.0, "mode": 1 },
        "grid": { "intervals": j },
        "time": { "horizon": 1.0, "steps": n }
    })
}

fn example2(sigma: f64, alpha: f64, j: usize, n: usize) -> Value {
    serde_json::json!({
        "kernel": { "family": "non-oscillatory", "sigma": sigma, "alpha": alpha },
        "damping": { "kind": "sqrt-affine", "a": 1.0, "b": 1.0 },
        "initial": {
            "u0": { "kind": "polynomial", "p": 2, "q": 2, "amplitude": 1.0 },
            "u1": { "kind": "polynomial", "p": 3, "q": 3, "amplitude": 1.0 }
        },
        "forcing": { "kind": "zero" },
        "grid": { "intervals": j },
        "time": { "horizon": 1.0, "steps": n }
    })
}

fn cell(label: &str, set: Value) -> Value {
    serde_json::json!({ "label": label, "set": set })
}

/// Built-in configurations, including the four convergence studies.
pub fn preset(name: &str) -> Option<Value> {
    let mut v = match name {
        "example1" => example1(1.2, 1.0, 0.5, 32, 256),
        "example2" => example2(1.5, 0.5, 64, 1024),
        "example1-temporal" => {
            let mut v = example1(1.2, 0.0, 0.5, 32, 16);
            let sweep: Vec<Value> = [0.0, 0.5, 1.0]
                .iter()
                .map(|g| cell(&format!("gamma={g}"), serde_json::json!({ "kernel.gamma": g })))
                .collect();
            v["study"] = serde_json::json!({ "axis": "temporal", "levels": 5, "sweep": sweep });
            v
        }
        "example1-spatial" => {
            let mut v = example1(2.0, 0.0, 0.5, 8, 64);
            let mut sweep = Vec::new();
            for a in [0.5, 1.0] {
                for g in [0.0, 1.0, 2.0] {
                    sweep.push(cell(
                        &format!("alpha={a},gamma={g}"),
                        serde_json::json!({ "kernel.alpha": a, "kernel.gamma": g }),
                    ));
                }
            }
            v["study"] = serde_json::json!({ "axis": "spatial", "levels": 4, "sweep": sweep });
            v
        }
        "example2-temporal" => {
            let mut v = example2(1.5, 0.5, 64, 128);
            let sweep: Vec<Value> = [1.5, 2.0, 2.5, 3.0]
                .iter()
                .map(|s| cell(&format!("sigma={s}"), serde_json::json!({ "kernel.sigma": s })))
                .collect();
            v["study"] = serde_json::json!({ "axis": "temporal", "levels": 4, "sweep": sweep });
            v
        }
        "example2-spatial" => {
            let mut v = example2(1.5, 0.3, 16, 64);
            let mut sweep = Vec::new();
            for s in [1.5, 3.0] {
                for a in [0.3, 0.7] {
                    sweep.push(cell(
                        &format!("sigma={s},alpha={a}"),
                        serde_json::json!({ "kernel.sigma": s, "kernel.alpha": a }),
                    ));
                }
            }
            v["study"] = serde_json::json!({ "axis": "spatial", "levels": 4, "sweep": sweep });
            v
        }
        "example2-long" => {
            let mut v = example2(1.5, 0.5, 64, 5000);
            v["time"] = serde_json::json!({ "horizon": 50.0, "steps": 5000 });
            v
        }
        "zero" => serde_json::json!({
            "kernel": { "family": "non-oscillatory", "sigma": 1.5, "alpha": 0.5 },
            "damping": { "kind": "affine", "a": 1.0, "b": 1.0 },
            "initial": { "u0": { "kind": "zero" }, "u1": { "kind": "zero" } },
            "forcing": { "kind": "zero" },
            "grid": { "intervals": 16 },
            "time": { "horizon": 1.0, "steps": 32 }
        }),
        _ => return None,
    };
    // Fill defaults so the echo in reports is complete.
    if let Ok(cfg) = Config::from_value(v.clone()) {
        v = cfg.to_value();
    }
    Some(v)
}
