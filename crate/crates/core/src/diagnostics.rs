//! Discrete energy and a long-horizon stability monitor.
//!
//! The monitored quantity is
//! `½‖δ_tUⁿ‖² + g₀Δt Σ_{m=2}^{n} ‖δ_tUᵐ‖² + (μ₀/4)‖Uⁿ_{xx̄}‖²`,
//! compared against a data functional built from the initial data and the
//! forcing. The comparison constant is a configurable safety factor.

use std::ops::ControlFlow;
use std::sync::Arc;

use serde::Serialize;

use crate::error::Result;
use crate::grid::Grid;
use crate::kernel::KernelTables;
use crate::model::ProblemSpec;
use crate::stepper::{run_observed, SolverConfig, SolverState, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyRecord {
    pub n: usize,
    pub kinetic: f64,
    pub dissipated: f64,
    pub elastic: f64,
    pub total: f64,
}

/// Energy of the latest solution in `state`. `running_dissipation` is
/// `Δt Σ_{m=2}^{n} ‖δ_tUᵐ‖²` without the `g₀` factor.
pub fn energy(
    state: &SolverState,
    running_dissipation: f64,
    g0: f64,
    mu0: f64,
) -> Result<EnergyRecord> {
    let grid = state.grid();
    let v = grid.norm(state.latest_velocity())?;
    let c = grid.curvature_norm(state.solution())?;
    let kinetic = 0.5 * v * v;
    let elastic = 0.25 * mu0 * c * c;
    let dissipated = g0 * running_dissipation;
    Ok(EnergyRecord {
        n: state.next_step() - 1,
        kinetic,
        dissipated,
        elastic,
        total: kinetic + dissipated + elastic,
    })
}

/// `‖f‖₁ = ∫_0^T ‖f(·,t)‖ dt` by the trapezoid rule on the step grid.
pub fn forcing_l1(spec: &ProblemSpec, grid: &Grid, n_steps: usize) -> Result<f64> {
    if spec.forcing.is_zero() {
        return Ok(0.0);
    }
    let dt = spec.horizon / n_steps as f64;
    let mut total = 0.0;
    for n in 0..=n_steps {
        let t = n as f64 * dt;
        let f = grid.sample(|x| spec.forcing.eval(x, t));
        let w = if n == 0 || n == n_steps { 0.5 } else { 1.0 };
        total += w * grid.norm(&f)?;
    }
    Ok(total * dt)
}

/// Right-hand side of the energy bound without its constant:
/// `‖u₁‖² + (1 + 2C₀ + 2C₀²/μ₀)‖(u₀)_{xx̄}‖² + Δt²‖(u₁)_{xx̄}‖² + ‖f‖₁²`.
pub fn data_functional(
    spec: &ProblemSpec,
    grid: &Grid,
    tables: &KernelTables,
    n_steps: usize,
) -> Result<f64> {
    let dt = spec.horizon / n_steps as f64;
    let u0 = grid.sample(|x| spec.u0.eval(x));
    let u1 = grid.sample(|x| spec.u1.eval(x));
    let (c0, mu0) = (tables.c0(), tables.mu0());
    let v = grid.norm(&u1)?;
    let c_u0 = grid.curvature_norm(&u0)?;
    let c_u1 = grid.curvature_norm(&u1)?;
    let f1 = forcing_l1(spec, grid, n_steps)?;
    Ok(v * v
        + (1.0 + 2.0 * c0 + 2.0 * c0 * c0 / mu0) * c_u0 * c_u0
        + dt * dt * c_u1 * c_u1
        + f1 * f1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "UPPERCASE")]
pub enum StabilityVerdict {
    Pass {
        max_total: f64,
        bound: f64,
    },
    Fail {
        first_violation: usize,
        total: f64,
        bound: f64,
    },
}

impl StabilityVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, StabilityVerdict::Pass { .. })
    }
}

/// PASS when every total energy stays below `safety · data_functional`.
pub fn stability_monitor(
    records: &[EnergyRecord],
    data_functional: f64,
    safety: f64,
) -> StabilityVerdict {
    let bound = safety.max(1.0) * data_functional;
    let mut max_total: f64 = 0.0;
    for r in records {
        // Non-finite energy is a violation too.
        if !(r.total <= bound) {
            return StabilityVerdict::Fail {
                first_violation: r.n,
                total: r.total,
                bound,
            };
        }
        max_total = max_total.max(r.total);
    }
    StabilityVerdict::Pass { max_total, bound }
}

/// Largest relative excess `total(n) / max_{m<n} total(m) − 1` over the final
/// `fraction` of the records; non-positive when the tail never sets a new high.
pub fn tail_excess(records: &[EnergyRecord], fraction: f64) -> f64 {
    if records.len() < 2 {
        return 0.0;
    }
    let start = ((records.len() as f64) * (1.0 - fraction)).floor() as usize;
    let start = start.clamp(1, records.len() - 1);
    let mut running = records[..start]
        .iter()
        .fold(f64::NEG_INFINITY, |m, r| m.max(r.total));
    let mut worst = f64::NEG_INFINITY;
    for r in &records[start..] {
        if running > 0.0 {
            worst = worst.max(r.total / running - 1.0);
        } else if r.total > 0.0 {
            worst = f64::INFINITY;
        }
        running = running.max(r.total);
    }
    worst.max(-1.0)
}

/// Checks per-record sign and monotonicity properties; returns the first
/// offending step.
pub fn check_energy_invariants(records: &[EnergyRecord]) -> Option<usize> {
    let mut prev = 0.0;
    for r in records {
        if r.kinetic < 0.0 || r.elastic < 0.0 || r.dissipated < prev {
            return Some(r.n);
        }
        prev = r.dissipated;
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    #[serde(flatten)]
    pub verdict: StabilityVerdict,
    pub data_functional: f64,
    pub safety: f64,
    pub c0: f64,
    pub mu0: f64,
    /// See [`tail_excess`]; computed over the records actually produced.
    pub tail_excess: f64,
    pub tail_fraction: f64,
    pub steps_completed: usize,
}

/// Runs with energy recording on and stops at the first record whose total
/// exceeds `safety · data_functional`.
pub fn monitored_run(
    spec: &ProblemSpec,
    grid: Grid,
    n_steps: usize,
    config: &SolverConfig,
    tables: Arc<KernelTables>,
    safety: f64,
    tail_fraction: f64,
) -> Result<(StabilityReport, TimeSeries)> {
    let df = data_functional(spec, &grid, &tables, n_steps)?;
    let bound = safety.max(1.0) * df;
    let config = SolverConfig {
        record_energy: true,
        ..*config
    };
    let (c0, mu0) = (tables.c0(), tables.mu0());
    let (_, series) = run_observed(spec, grid, n_steps, &config, tables, |r| match r.energy {
        Some(e) if !(e.total <= bound) => ControlFlow::Break(()),
        _ => ControlFlow::Continue(()),
    })?;
    let energies = series.energies();
    let report = StabilityReport {
        verdict: stability_monitor(&energies, df, safety),
        data_functional: df,
        safety,
        c0,
        mu0,
        tail_excess: tail_excess(&energies, tail_fraction),
        tail_fraction,
        steps_completed: energies.last().map_or(0, |e| e.n),
    };
    Ok((report, series))
}
