//! Tempered power-law memory kernels and the averaged product-integration
//! weights used by the time stepper.
//!
//! The relaxation kernel is
//!
//! ```text
//! β(t) = e^{-σt} t^{α-1} cos(γt) / Γ(α)     (oscillatory, α ∈ {1/2, 1})
//! β(t) = e^{-σt} t^{α-1} / Γ(α)             (non-oscillatory, 0 < α ≤ 1)
//! ```
//!
//! and the scheme works with its tail `K(t) = ∫_t^∞ β(s) ds`. The convolution
//! weights are `ω_k = (1/Δt) ∫ K(r) φ_k(r) dr` where `φ_k` is the hat function
//! of half-width `Δt` centred on `kΔt` (a half hat on `[0, Δt]` for `k = 0`).
//! This is the same number as the second difference of the second
//! antiderivative of `K`, but evaluated without cancellation.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};

/// Truncation length of tail integrals, in units of `1/σ`.
const TAIL_SPAN: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    Oscillatory,
    NonOscillatory,
    /// `β ≡ 0`: no memory.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub sigma: f64,
    pub gamma: f64,
    pub alpha: f64,
}

impl KernelSpec {
    pub fn oscillatory(sigma: f64, gamma: f64, alpha: f64) -> Result<Self> {
        let spec = KernelSpec {
            family: KernelFamily::Oscillatory,
            sigma,
            gamma,
            alpha,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn non_oscillatory(sigma: f64, alpha: f64) -> Result<Self> {
        let spec = KernelSpec {
            family: KernelFamily::NonOscillatory,
            sigma,
            gamma: 0.0,
            alpha,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn none() -> Self {
        KernelSpec {
            family: KernelFamily::None,
            sigma: f64::INFINITY,
            gamma: 0.0,
            alpha: 1.0,
        }
    }

    pub fn has_memory(&self) -> bool {
        self.family != KernelFamily::None
    }

    /// Checks the parameter ranges for the chosen family.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidKernel(msg));
        match self.family {
            KernelFamily::None => Ok(()),
            KernelFamily::Oscillatory | KernelFamily::NonOscillatory => {
                if !(self.sigma.is_finite() && self.sigma > 1.0) {
                    return bad(format!("sigma = {} violates σ > 1", self.sigma));
                }
                if self.family == KernelFamily::Oscillatory {
                    if !(self.gamma >= 0.0 && self.gamma <= self.sigma) {
                        return bad(format!(
                            "gamma = {} violates 0 ≤ γ ≤ σ = {}",
                            self.gamma, self.sigma
                        ));
                    }
                    if self.alpha != 0.5 && self.alpha != 1.0 {
                        return bad(format!(
                            "alpha = {} not in {{1/2, 1}} for the oscillatory kernel",
                            self.alpha
                        ));
                    }
                } else {
                    if self.gamma != 0.0 {
                        return bad(format!(
                            "gamma = {} given for the non-oscillatory kernel",
                            self.gamma
                        ));
                    }
                    if !(self.alpha > 0.0 && self.alpha <= 1.0) {
                        return bad(format!("alpha = {} violates 0 < α ≤ 1", self.alpha));
                    }
                }
                Ok(())
            }
        }
    }

    fn gamma_fn(&self) -> f64 {
        gamma(self.alpha)
    }

    /// `β(t)`.
    pub fn beta(&self, t: f64) -> Result<f64> {
        self.validate()?;
        if !self.has_memory() {
            return Ok(0.0);
        }
        if t < 0.0 || (t == 0.0 && self.alpha < 1.0) || t.is_nan() {
            return Err(Error::Domain(format!("β(t) undefined at t = {t}")));
        }
        let scale = if self.alpha == 1.0 {
            1.0
        } else {
            t.powf(self.alpha - 1.0) / self.gamma_fn()
        };
        Ok((-self.sigma * t).exp() * scale * (self.gamma * t).cos())
    }

    /// `K(t) = ∫_t^∞ β(s) ds`, closed form when `α = 1`.
    pub fn tail(&self, t: f64) -> Result<f64> {
        self.validate()?;
        check_time(t)?;
        match self.family {
            KernelFamily::None => Ok(0.0),
            _ if self.alpha == 1.0 => Ok(self.tail_closed_form(t)),
            _ => Ok(Transformed::new(self).tail(t)),
        }
    }

    /// `K(t)` by adaptive quadrature regardless of whether a closed form exists.
    pub fn tail_by_quadrature(&self, t: f64) -> Result<f64> {
        self.validate()?;
        check_time(t)?;
        if !self.has_memory() {
            return Ok(0.0);
        }
        Ok(Transformed::new(self).tail(t))
    }

    fn tail_closed_form(&self, t: f64) -> f64 {
        let (s, g) = (self.sigma, self.gamma);
        (-s * t).exp() * (s * (g * t).cos() - g * (g * t).sin()) / (s * s + g * g)
    }

    /// `(J1(t), J2(t))` with `J1 = ∫_0^t K` and `J2 = ∫_0^t J1`.
    pub fn tail_antiderivatives(&self, t: f64) -> Result<(f64, f64)> {
        self.validate()?;
        check_time(t)?;
        if !self.has_memory() || t == 0.0 {
            return Ok((0.0, 0.0));
        }
        let tr = Transformed::new(self);
        // Swapping the order of integration:
        //   J1(t) = ∫_0^t β(s) s ds + t K(t)
        //   J2(t) = ∫_0^t β(s)(st - s²/2) ds + (t²/2) K(t)
        let k = self.tail(t)?;
        let m1 = tr.moment(0.0, t, |s| s);
        let m2 = tr.moment(0.0, t, |s| s * t - 0.5 * s * s);
        Ok((m1 + t * k, m2 + 0.5 * t * t * k))
    }

    /// `μ₀ = 1 − K(0)`.
    pub fn mu0(&self) -> Result<f64> {
        Ok(1.0 - self.tail(0.0)?)
    }

    /// Convolution weights `ω_0 .. ω_{n_steps-1}`; the scheme uses
    /// `w_{np} = ω_{n-p}`.
    pub fn quadrature_weights(&self, dt: f64, n_steps: usize) -> Result<Vec<f64>> {
        self.validate()?;
        check_step(dt)?;
        let tails = (0..=n_steps)
            .map(|m| self.tail(m as f64 * dt))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.weights_with_tails(dt, n_steps, &tails))
    }

    // `tails[m]` must hold K(mΔt) for m = 0..=n_steps.
    fn weights_with_tails(&self, dt: f64, n_steps: usize, tails: &[f64]) -> Vec<f64> {
        if !self.has_memory() {
            return vec![0.0; n_steps];
        }
        let tr = Transformed::new(self);
        (0..n_steps)
            .map(|k| {
                if k == 0 {
                    let local = tr.moment(0.0, dt, |s| dt * s - 0.5 * s * s);
                    0.5 * dt * tails[1] + local / dt
                } else {
                    let lo = (k - 1) as f64 * dt;
                    let mid = k as f64 * dt;
                    let hi = (k + 1) as f64 * dt;
                    let rising = tr.moment(lo, mid, |s| 0.5 * (s - lo) * (s - lo));
                    let falling = tr.moment(mid, hi, |s| dt * dt - 0.5 * (hi - s) * (hi - s));
                    dt * tails[k + 1] + (rising + falling) / dt
                }
            })
            .collect()
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("kernel tail requested at t = {t}")))
    }
}

fn check_step(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("time step must be positive, got {dt}")))
    }
}

/// Integrals of `β` against smooth weights after the change of variables
/// `s = u^{1/α}`, which turns `β(s) ds` into `e^{-σs} cos(γs) du / Γ(α+1)`
/// and removes the weak singularity at the origin.
struct Transformed {
    sigma: f64,
    gamma: f64,
    alpha: f64,
    scale: f64,
}

impl Transformed {
    fn new(spec: &KernelSpec) -> Self {
        Transformed {
            sigma: spec.sigma,
            gamma: spec.gamma,
            alpha: spec.alpha,
            scale: 1.0 / gamma(spec.alpha + 1.0),
        }
    }

    fn to_u(&self, s: f64) -> f64 {
        if self.alpha == 1.0 {
            s
        } else {
            s.powf(self.alpha)
        }
    }

    fn to_s(&self, u: f64) -> f64 {
        if self.alpha == 1.0 {
            u
        } else {
            u.powf(1.0 / self.alpha)
        }
    }

    /// `∫_a^b β(s) w(s) ds`.
    fn moment<W: Fn(f64) -> f64>(&self, a: f64, b: f64, w: W) -> f64 {
        let tol = Tolerance {
            abs: 1e-300,
            rel: 1e-13,
            max_segments: 400,
        };
        let r = integrate(
            |u| {
                let s = self.to_s(u);
                (-self.sigma * s).exp() * (self.gamma * s).cos() * w(s)
            },
            self.to_u(a),
            self.to_u(b),
            tol,
        );
        r.value * self.scale
    }

    fn tail(&self, t: f64) -> f64 {
        // Remainder beyond s_max is below e^{-σ s_max} s_max^{α-1}/(σΓ(α)),
        // i.e. under e^{-40} relative to K(0).
        let s_max = t + TAIL_SPAN / self.sigma;
        let tol = Tolerance {
            abs: 1e-17,
            rel: 1e-13,
            max_segments: 2000,
        };
        let r = integrate(
            |u| {
                let s = self.to_s(u);
                (-self.sigma * s).exp() * (self.gamma * s).cos()
            },
            self.to_u(t),
            self.to_u(s_max),
            tol,
        );
        r.value * self.scale
    }
}

/// Weights from a second antiderivative `J2` of an arbitrary tail:
/// `ω_0 = J2(Δt)/Δt`, `ω_k = [J2((k+1)Δt) − 2 J2(kΔt) + J2((k−1)Δt)]/Δt`.
pub fn weights_from_second_antiderivative<F: Fn(f64) -> f64>(
    j2: F,
    dt: f64,
    n_steps: usize,
) -> Vec<f64> {
    let values: Vec<f64> = (0..=n_steps).map(|m| j2(m as f64 * dt)).collect();
    (0..n_steps)
        .map(|k| {
            if k == 0 {
                (values[1] - values[0]) / dt
            } else {
                (values[k + 1] - 2.0 * values[k] + values[k - 1]) / dt
            }
        })
        .collect()
}

/// Kernel data precomputed for a fixed time step and horizon. Immutable once
/// built; share it between runs through an `Arc`.
#[derive(Debug, Clone)]
pub struct KernelTables {
    spec: KernelSpec,
    k0: f64,
    mu0: f64,
    c0: f64,
    dt: f64,
    weights: Vec<f64>,
    tails: Vec<f64>,
}

impl KernelTables {
    pub fn new(spec: KernelSpec, dt: f64, n_steps: usize) -> Result<Self> {
        spec.validate()?;
        check_step(dt)?;
        let tails = (0..=n_steps)
            .map(|m| spec.tail(m as f64 * dt))
            .collect::<Result<Vec<_>>>()?;
        let weights = spec.weights_with_tails(dt, n_steps, &tails);
        let k0 = tails[0];
        let c0 = if spec.has_memory() {
            let span = TAIL_SPAN / spec.sigma;
            let mut c0 = k0;
            for i in 1..=1000 {
                c0 = c0.max(spec.tail(span * i as f64 / 1000.0)?);
            }
            c0
        } else {
            0.0
        };
        if !(k0 < 1.0) {
            return Err(Error::InvalidKernel(format!("K(0) = {k0} is not below 1")));
        }
        Ok(KernelTables {
            spec,
            k0,
            mu0: 1.0 - k0,
            c0,
            dt,
            weights,
            tails,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    /// Sampled maximum of `K` over `[0, 40/σ]`.
    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `K(t_n)`.
    pub fn tail_at_step(&self, n: usize) -> f64 {
        self.tails[n]
    }

    /// Copy with every weight multiplied by `factor`. Fault-injection hook for
    /// exercising the stability monitor.
    pub fn with_weights_scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.weights.iter_mut().for_each(|w| *w *= factor);
        out
    }

    /// Scales `ω_1, ω_2, …` and leaves `ω_0` alone, so the step matrix stays
    /// definite while the memory sum is perturbed.
    pub fn with_history_weights_scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.weights.iter_mut().skip(1).for_each(|w| *w *= factor);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn beta_values() {
        let k = KernelSpec::oscillatory(2.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(k.beta(1.0).unwrap(), (-2.0f64).exp(), max_relative = 1e-15);
        let k = KernelSpec::oscillatory(1.2, 1.0, 1.0).unwrap();
        assert_eq!(k.beta(0.0).unwrap(), 1.0);
        let k = KernelSpec::oscillatory(2.0, 0.0, 0.5).unwrap();
        let expected = (-0.5f64).exp() / 0.5 / std::f64::consts::PI.sqrt();
        assert_relative_eq!(k.beta(0.25).unwrap(), expected, max_relative = 1e-14);
        assert!(matches!(k.beta(0.0), Err(Error::Domain(_))));
        assert!(matches!(k.beta(-1.0), Err(Error::Domain(_))));
        assert_eq!(KernelSpec::none().beta(3.0).unwrap(), 0.0);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(KernelSpec::oscillatory(0.9, 0.0, 1.0).is_err());
        assert!(KernelSpec::oscillatory(1.2, 1.3, 1.0).is_err());
        assert!(KernelSpec::oscillatory(1.2, 1.0, 0.7).is_err());
        assert!(KernelSpec::non_oscillatory(1.5, 0.0).is_err());
        assert!(KernelSpec::non_oscillatory(1.5, 1.2).is_err());
        assert!(KernelSpec::non_oscillatory(1.0, 0.5).is_err());
    }

    #[test]
    fn tail_closed_forms() {
        let k = KernelSpec::oscillatory(2.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(k.tail(0.0).unwrap(), 0.5, max_relative = 1e-15);
        let k = KernelSpec::oscillatory(1.2, 1.0, 1.0).unwrap();
        assert_relative_eq!(k.tail(0.0).unwrap(), 1.2 / 2.44, max_relative = 1e-15);
        assert_relative_eq!(k.mu0().unwrap(), 1.0 - 1.2 / 2.44, max_relative = 1e-15);
        assert_eq!(KernelSpec::none().mu0().unwrap(), 1.0);
        assert_eq!(KernelSpec::none().tail(2.0).unwrap(), 0.0);
    }

    #[test]
    fn far_tail_vanishes() {
        for spec in [
            KernelSpec::oscillatory(1.2, 1.0, 0.5).unwrap(),
            KernelSpec::non_oscillatory(1.5, 0.3).unwrap(),
            KernelSpec::oscillatory(2.0, 2.0, 1.0).unwrap(),
        ] {
            assert!(spec.tail(50.0 / spec.sigma).unwrap().abs() <= 1e-12);
        }
    }

    #[test]
    fn antiderivatives_at_origin_and_no_memory() {
        let k = KernelSpec::non_oscillatory(1.5, 0.5).unwrap();
        assert_eq!(k.tail_antiderivatives(0.0).unwrap(), (0.0, 0.0));
        assert_eq!(KernelSpec::none().tail_antiderivatives(3.0).unwrap(), (0.0, 0.0));
        let k = KernelSpec::oscillatory(2.0, 0.0, 1.0).unwrap();
        let (j1, _) = k.tail_antiderivatives(1.0).unwrap();
        assert_relative_eq!(j1, (1.0 - (-2.0f64).exp()) / 4.0, max_relative = 1e-13);
    }

    #[test]
    fn constant_tail_weights() {
        let c = 0.4;
        let dt = 0.125;
        let w = weights_from_second_antiderivative(|t| 0.5 * c * t * t, dt, 6);
        assert_relative_eq!(w[0], c * dt / 2.0, max_relative = 1e-14);
        for wk in &w[1..] {
            assert_relative_eq!(*wk, c * dt, max_relative = 1e-12);
        }
    }

    #[test]
    fn no_memory_weights_are_zero() {
        let w = KernelSpec::none().quadrature_weights(0.1, 5).unwrap();
        assert_eq!(w, vec![0.0; 5]);
    }

    #[test]
    fn negative_step_rejected() {
        let k = KernelSpec::non_oscillatory(1.5, 0.5).unwrap();
        assert!(k.quadrature_weights(-0.1, 4).is_err());
        assert!(k.tail(-1.0).is_err());
    }

    #[test]
    fn tables_summary_values() {
        let spec = KernelSpec::non_oscillatory(2.0, 0.5).unwrap();
        let tables = KernelTables::new(spec, 1.0 / 32.0, 32).unwrap();
        assert_relative_eq!(tables.k0(), 2f64.powf(-0.5), max_relative = 1e-12);
        assert_relative_eq!(tables.c0(), tables.k0(), max_relative = 1e-15);
        assert_relative_eq!(tables.mu0() + tables.k0(), 1.0, max_relative = 1e-15);
        assert_eq!(tables.len(), 32);
        let scaled = tables.with_weights_scaled(-1.0);
        assert_eq!(scaled.weight(3), -tables.weight(3));
    }
}
