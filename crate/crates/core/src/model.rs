//! Problem data: damping law, initial profiles, forcing, kernel and horizon.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result, Violation};
use crate::grid::Grid;
use crate::kernel::KernelSpec;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Default upper end of the sampled range for damping checks.
pub const DEFAULT_V_MAX: f64 = 1e4;
const DAMPING_SAMPLES: usize = 2001;

#[derive(Clone)]
pub enum DampingKind {
    /// `G(v) = a + b·v`
    Affine { a: f64, b: f64 },
    /// `G(v) = √(a + b·v)`
    SqrtAffine { a: f64, b: f64 },
    Constant(f64),
    Custom(ScalarFn),
}

impl fmt::Debug for DampingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DampingKind::Affine { a, b } => write!(f, "Affine({a}, {b})"),
            DampingKind::SqrtAffine { a, b } => write!(f, "SqrtAffine({a}, {b})"),
            DampingKind::Constant(c) => write!(f, "Constant({c})"),
            DampingKind::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// The nonlinear damping law `q = G(v)` together with its declared bounds:
/// `G ≥ g0 > 0` everywhere, `G ≤ g1` on `[0, v_max]`, and `0 ≤ G' ≤ L`.
#[derive(Debug, Clone)]
pub struct DampingFunction {
    pub kind: DampingKind,
    pub g0: f64,
    pub g1: f64,
    pub lipschitz: f64,
    pub v_max: f64,
}

impl DampingFunction {
    pub fn affine(a: f64, b: f64) -> Self {
        DampingFunction {
            kind: DampingKind::Affine { a, b },
            g0: a,
            g1: a + b * DEFAULT_V_MAX,
            lipschitz: b,
            v_max: DEFAULT_V_MAX,
        }
    }

    pub fn sqrt_affine(a: f64, b: f64) -> Self {
        DampingFunction {
            kind: DampingKind::SqrtAffine { a, b },
            g0: a.max(0.0).sqrt(),
            g1: (a + b * DEFAULT_V_MAX).max(0.0).sqrt(),
            // G' is largest at v = 0.
            lipschitz: if a > 0.0 { b / (2.0 * a.sqrt()) } else { f64::INFINITY },
            v_max: DEFAULT_V_MAX,
        }
    }

    pub fn constant(c: f64) -> Self {
        DampingFunction {
            kind: DampingKind::Constant(c),
            g0: c,
            g1: c,
            lipschitz: 0.0,
            v_max: DEFAULT_V_MAX,
        }
    }

    /// A user-supplied law. Its bounds are only checked by sampling.
    pub fn custom(f: ScalarFn, g0: f64, g1: f64, lipschitz: f64) -> Self {
        DampingFunction {
            kind: DampingKind::Custom(f),
            g0,
            g1,
            lipschitz,
            v_max: DEFAULT_V_MAX,
        }
    }

    /// Changes the sampled range and refreshes `g1` for the analytic kinds.
    pub fn with_v_max(mut self, v_max: f64) -> Self {
        self.v_max = v_max;
        match self.kind {
            DampingKind::Affine { a, b } => self.g1 = a + b * v_max,
            DampingKind::SqrtAffine { a, b } => self.g1 = (a + b * v_max).max(0.0).sqrt(),
            _ => {}
        }
        self
    }

    pub fn eval(&self, v: f64) -> f64 {
        match &self.kind {
            DampingKind::Affine { a, b } => a + b * v,
            DampingKind::SqrtAffine { a, b } => (a + b * v).sqrt(),
            DampingKind::Constant(c) => *c,
            DampingKind::Custom(f) => f(v),
        }
    }

    pub fn is_custom(&self) -> bool {
        matches!(self.kind, DampingKind::Custom(_))
    }

    fn violations(&self, out: &mut Vec<Violation>) {
        let mut push = |msg: String| {
            out.push(Violation {
                field: "damping".into(),
                message: msg,
            })
        };
        if !(self.g0 > 0.0) {
            push(format!("lower bound g0 = {} must satisfy g0 > 0", self.g0));
        }
        if !(self.g1 >= self.g0) {
            push(format!("upper bound g1 = {} is below g0 = {}", self.g1, self.g0));
        }
        if !(self.lipschitz >= 0.0 && self.lipschitz.is_finite()) {
            push(format!(
                "Lipschitz constant L = {} must be finite and non-negative",
                self.lipschitz
            ));
        }
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            push(format!("v_max = {} must be positive", self.v_max));
            return;
        }
        let vs: Vec<f64> = (0..DAMPING_SAMPLES)
            .map(|i| self.v_max * i as f64 / (DAMPING_SAMPLES - 1) as f64)
            .collect();
        let gs: Vec<f64> = vs.iter().map(|&v| self.eval(v)).collect();
        let slack = 1e-12 * (1.0 + self.g1.abs());
        if let Some(i) = gs.iter().position(|g| !g.is_finite()) {
            push(format!("G({}) is not finite", vs[i]));
            return;
        }
        if let Some(i) = gs.iter().position(|&g| g < self.g0 - slack) {
            push(format!(
                "G({}) = {} falls below the lower bound g0 = {}",
                vs[i], gs[i], self.g0
            ));
        }
        if let Some(i) = gs.iter().position(|&g| g > self.g1 + slack) {
            push(format!(
                "G({}) = {} exceeds the upper bound g1 = {}",
                vs[i], gs[i], self.g1
            ));
        }
        for i in 1..vs.len() {
            let dg = gs[i] - gs[i - 1];
            let dv = vs[i] - vs[i - 1];
            if dg < -slack {
                push(format!("G decreases between v = {} and v = {}", vs[i - 1], vs[i]));
                break;
            }
            if dg > self.lipschitz * dv * (1.0 + 1e-9) + slack {
                push(format!(
                    "slope {} between v = {} and v = {} exceeds L = {}",
                    dg / dv,
                    vs[i - 1],
                    vs[i],
                    self.lipschitz
                ));
                break;
            }
        }
    }
}

/// Initial displacement or velocity profile on `[0, 1]`.
#[derive(Clone)]
pub enum Profile {
    Zero,
    /// `A·sin(kπx)`
    SinMode { mode: u32, amplitude: f64 },
    /// `A·x^p (1 − x)^q`
    Polynomial { amplitude: f64, p: i32, q: i32 },
    Custom(ScalarFn),
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Zero => write!(f, "Zero"),
            Profile::SinMode { mode, amplitude } => write!(f, "{amplitude}·sin({mode}πx)"),
            Profile::Polynomial { amplitude, p, q } => {
                write!(f, "{amplitude}·x^{p}(1-x)^{q}")
            }
            Profile::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Profile {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::SinMode { mode, amplitude } => amplitude * (*mode as f64 * PI * x).sin(),
            Profile::Polynomial { amplitude, p, q } => {
                amplitude * x.powi(*p) * (1.0 - x).powi(*q)
            }
            Profile::Custom(f) => f(x),
        }
    }
}

/// Right-hand side `f(x, t)`.
#[derive(Clone)]
pub enum Forcing {
    Zero,
    /// `A·e^{−σt} t^α sin(kπx)`
    TemperedSine {
        amplitude: f64,
        sigma: f64,
        alpha: f64,
        mode: u32,
    },
    Custom(SpaceTimeFn),
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Zero => write!(f, "Zero"),
            Forcing::TemperedSine {
                amplitude,
                sigma,
                alpha,
                mode,
            } => write!(f, "{amplitude}·e^(-{sigma}t)·t^{alpha}·sin({mode}πx)"),
            Forcing::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Forcing {
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        match self {
            Forcing::Zero => 0.0,
            Forcing::TemperedSine {
                amplitude,
                sigma,
                alpha,
                mode,
            } => {
                let time = if t > 0.0 {
                    (-sigma * t).exp() * t.powf(*alpha)
                } else {
                    0.0
                };
                amplitude * time * (*mode as f64 * PI * x).sin()
            }
            Forcing::Custom(f) => f(x, t),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Forcing::Zero)
    }
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub u0: Profile,
    pub u1: Profile,
    pub forcing: Forcing,
    pub damping: DampingFunction,
    pub kernel: KernelSpec,
    /// Final time `T`.
    pub horizon: f64,
}

impl ProblemSpec {
    /// Oscillatory kernel, `G(v) = 1 + v`, `u0 = sin πx`, `u1 = sin 2πx`,
    /// `f = e^{−σt} t^α sin πx`, `T = 1`.
    pub fn example1(sigma: f64, gamma: f64, alpha: f64) -> Result<Self> {
        Ok(ProblemSpec {
            u0: Profile::SinMode {
                mode: 1,
                amplitude: 1.0,
            },
            u1: Profile::SinMode {
                mode: 2,
                amplitude: 1.0,
            },
            forcing: Forcing::TemperedSine {
                amplitude: 1.0,
                sigma,
                alpha,
                mode: 1,
            },
            damping: DampingFunction::affine(1.0, 1.0),
            kernel: KernelSpec::oscillatory(sigma, gamma, alpha)?,
            horizon: 1.0,
        })
    }

    /// Non-oscillatory kernel, `G(v) = √(1 + v)`, `u0 = x²(1−x)²`,
    /// `u1 = x³(1−x)³`, `f = 0`, `T = 1`.
    pub fn example2(sigma: f64, alpha: f64) -> Result<Self> {
        Ok(ProblemSpec {
            u0: Profile::Polynomial {
                amplitude: 1.0,
                p: 2,
                q: 2,
            },
            u1: Profile::Polynomial {
                amplitude: 1.0,
                p: 3,
                q: 3,
            },
            forcing: Forcing::Zero,
            damping: DampingFunction::sqrt_affine(1.0, 1.0),
            kernel: KernelSpec::non_oscillatory(sigma, alpha)?,
            horizon: 1.0,
        })
    }

    /// Collects every violated assumption instead of stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut out = Vec::new();
        if let Err(e) = self.kernel.validate() {
            out.push(Violation {
                field: "kernel".into(),
                message: match e {
                    Error::InvalidKernel(m) => m,
                    other => other.to_string(),
                },
            });
        }
        self.damping.violations(&mut out);
        for (name, profile) in [("u0", &self.u0), ("u1", &self.u1)] {
            for x in [0.0, 1.0] {
                let v = profile.eval(x);
                if !(v.abs() <= 1e-12) {
                    out.push(Violation {
                        field: name.into(),
                        message: format!(
                            "{name}({x}) = {v:e} is incompatible with the hinged boundary"
                        ),
                    });
                }
            }
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            out.push(Violation {
                field: "horizon".into(),
                message: format!("T = {} must be positive and finite", self.horizon),
            });
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(out))
        }
    }

    /// Caveats that do not block a run.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.damping.is_custom() {
            w.push("custom damping: assumptions unverified beyond sampling".to_string());
        }
        w
    }
}

/// `G(‖U_{xx̄}‖²)`.
pub fn damping_coefficient(damping: &DampingFunction, u: &[f64], grid: &Grid) -> Result<f64> {
    let c = grid.curvature_norm(u)?;
    let v = c * c;
    let g = damping.eval(v);
    if g.is_finite() {
        Ok(g)
    } else {
        Err(Error::Damping(v))
    }
}
