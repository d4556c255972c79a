//! Backward-Euler time stepping with the product-integration memory sum.
//!
//! At step `n ≥ 2` the scheme reads, on the interior nodes,
//!
//! ```text
//! δ_t²Uⁿ + G(‖Uⁿ_{xx̄}‖²) δ_tUⁿ + μ₀ D4 Uⁿ + Σ_{p=1}^{n} ω_{n−p} D4 δ_tUᵖ = fⁿ − K(t_n) D4 U⁰
//! ```
//!
//! The damping coefficient is lagged inside a fixed-point loop, so every
//! inner iteration is one symmetric pentadiagonal solve.

use std::io::Write;
use std::ops::ControlFlow;
use std::sync::Arc;

use crate::diagnostics::{self, EnergyRecord};
use crate::error::{Error, Result};
use crate::grid::{BandedMatrix, Grid};
use crate::kernel::KernelTables;
use crate::model::{damping_coefficient, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Stop when the discrete L² norm of the iterate increment drops below this.
    pub fp_tol: f64,
    pub fp_max_iters: usize,
    pub record_energy: bool,
    /// Keep every `snapshot_stride`-th solution in the time series; 0 keeps none.
    pub snapshot_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            fp_tol: 1e-12,
            fp_max_iters: 50,
            record_energy: true,
            snapshot_stride: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fp_tol > 0.0) {
            return Err(Error::Config(format!("fp_tol = {} must be positive", self.fp_tol)));
        }
        if self.fp_max_iters == 0 {
            return Err(Error::Config("fp_max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolverState {
    spec: ProblemSpec,
    grid: Grid,
    dt: f64,
    /// Index of the next step to solve.
    n: usize,
    u_initial: Vec<f64>,
    u_prev: Vec<f64>,
    u_prev2: Vec<f64>,
    /// δ_tUᵖ for p = 1..n−1, stored back to back.
    history: Vec<f64>,
    tables: Arc<KernelTables>,
    d4: BandedMatrix,
    d4_u0: Vec<f64>,
}

impl SolverState {
    /// Sets `U⁰ = u₀`, `U¹ = u₀ + Δt·u₁` and `δ_tU¹ = u₁`.
    pub fn initialize(
        spec: &ProblemSpec,
        grid: Grid,
        dt: f64,
        tables: Arc<KernelTables>,
    ) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        if tables.dt() != dt {
            return Err(Error::Config(format!(
                "kernel tables built for Δt = {}, solver uses {dt}",
                tables.dt()
            )));
        }
        let u0 = grid.sample(|x| spec.u0.eval(x));
        let v1 = grid.sample(|x| spec.u1.eval(x));
        let u1: Vec<f64> = u0.iter().zip(&v1).map(|(a, v)| a + dt * v).collect();
        let d4 = grid.assemble_biharmonic();
        let d4_u0 = d4.mul_vec(&u0)?;
        Ok(SolverState {
            spec: spec.clone(),
            grid,
            dt,
            n: 2,
            u_prev2: u0.clone(),
            u_initial: u0,
            u_prev: u1,
            history: v1,
            tables,
            d4,
            d4_u0,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn tables(&self) -> &KernelTables {
        &self.tables
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    /// Index of the next step to solve; the latest solution is `U^{n−1}`.
    pub fn next_step(&self) -> usize {
        self.n
    }

    /// Time level of the latest solution.
    pub fn time(&self) -> f64 {
        (self.n - 1) as f64 * self.dt
    }

    /// Latest solution `U^{n−1}`.
    pub fn solution(&self) -> &[f64] {
        &self.u_prev
    }

    pub fn previous_solution(&self) -> &[f64] {
        &self.u_prev2
    }

    pub fn initial_solution(&self) -> &[f64] {
        &self.u_initial
    }

    /// Number of stored velocity vectors, always `n − 1`.
    pub fn history_len(&self) -> usize {
        self.history.len() / self.grid.interior_len()
    }

    /// `δ_tUᵖ` for `1 ≤ p ≤ n − 1`.
    pub fn velocity(&self, p: usize) -> &[f64] {
        let m = self.grid.interior_len();
        &self.history[(p - 1) * m..p * m]
    }

    /// Latest velocity `δ_tU^{n−1}`.
    pub fn latest_velocity(&self) -> &[f64] {
        self.velocity(self.history_len())
    }

    fn forcing_at(&self, n: usize) -> Vec<f64> {
        let t = n as f64 * self.dt;
        self.grid.sample(|x| self.spec.forcing.eval(x, t))
    }

    /// `Σ_{p=1}^{n−1} ω_{n−p} δ_tUᵖ`, before applying D4.
    fn history_sum(&self) -> Vec<f64> {
        let m = self.grid.interior_len();
        let n = self.n;
        let mut acc = vec![0.0; m];
        for (i, v) in self.history.chunks_exact(m).enumerate() {
            let w = self.tables.weight(n - 1 - i);
            for (a, x) in acc.iter_mut().zip(v) {
                *a += w * x;
            }
        }
        acc
    }

    // Everything in the right-hand side except the (G/Δt)·U^{n−1} term.
    fn static_rhs(&self) -> Result<Vec<f64>> {
        let dt = self.dt;
        let n = self.n;
        let w0 = self.tables.weight(0);
        let mut rhs = self.forcing_at(n);
        let k_tn = self.tables.tail_at_step(n);
        let d4_prev = self.d4.mul_vec(&self.u_prev)?;
        let d4_hist = self.d4.mul_vec(&self.history_sum())?;
        for j in 0..rhs.len() {
            rhs[j] += -k_tn * self.d4_u0[j]
                + (2.0 * self.u_prev[j] - self.u_prev2[j]) / (dt * dt)
                + (w0 / dt) * d4_prev[j]
                - d4_hist[j];
        }
        Ok(rhs)
    }

    fn step_matrix(&self, g_val: f64) -> BandedMatrix {
        let dt = self.dt;
        let coef = self.tables.mu0() + self.tables.weight(0) / dt;
        self.d4.scaled_shifted(coef, 1.0 / (dt * dt) + g_val / dt)
    }

    /// Linear system `A·Uⁿ = b` for a frozen damping value `g_val`:
    /// `A = (1/Δt² + G/Δt) I + (μ₀ + ω₀/Δt) D4`.
    pub fn assemble_step_system(&self, g_val: f64) -> Result<(BandedMatrix, Vec<f64>)> {
        if self.n > self.tables.len() {
            return Err(Error::Config(format!(
                "step {} is beyond the {} prepared weights",
                self.n,
                self.tables.len()
            )));
        }
        let mut rhs = self.static_rhs()?;
        for (b, u) in rhs.iter_mut().zip(&self.u_prev) {
            *b += g_val / self.dt * u;
        }
        Ok((self.step_matrix(g_val), rhs))
    }

    /// Solves step `n` and advances. Returns the number of fixed-point
    /// iterations and the final damping coefficient.
    pub fn step(&mut self, config: &SolverConfig) -> Result<StepInfo> {
        let n = self.n;
        let wrap = |e: Error| Error::Step {
            step: n,
            source: Box::new(e),
        };
        if n > self.tables.len() {
            return Err(wrap(Error::Config(format!(
                "no weights prepared for step {n}"
            ))));
        }
        let static_rhs = self.static_rhs().map_err(wrap)?;
        let mut guess: Vec<f64> = self
            .u_prev
            .iter()
            .zip(&self.u_prev2)
            .map(|(a, b)| 2.0 * a - b)
            .collect();
        let mut last_increment = f64::INFINITY;
        for iter in 1..=config.fp_max_iters {
            let g_val = damping_coefficient(&self.spec.damping, &guess, &self.grid).map_err(wrap)?;
            let a = self.step_matrix(g_val);
            let mut next: Vec<f64> = static_rhs
                .iter()
                .zip(&self.u_prev)
                .map(|(b, u)| b + g_val / self.dt * u)
                .collect();
            a.factor().map_err(wrap)?.solve_in_place(&mut next).map_err(wrap)?;
            let diff: Vec<f64> = next.iter().zip(&guess).map(|(a, b)| a - b).collect();
            last_increment = self.grid.norm(&diff).map_err(wrap)?;
            // Relative once the solution is large, absolute below unit size.
            let scale = self.grid.norm(&next).map_err(wrap)?.max(1.0);
            guess = next;
            if last_increment <= config.fp_tol * scale {
                self.accept(guess);
                return Ok(StepInfo {
                    iterations: iter,
                    damping: g_val,
                });
            }
        }
        Err(Error::Step {
            step: n,
            source: Box::new(Error::NonConvergence {
                step: n,
                iterations: config.fp_max_iters,
                last_increment,
            }),
        })
    }

    fn accept(&mut self, u_new: Vec<f64>) {
        let dt = self.dt;
        self.history
            .extend(u_new.iter().zip(&self.u_prev).map(|(a, b)| (a - b) / dt));
        self.u_prev2 = std::mem::replace(&mut self.u_prev, u_new);
        self.n += 1;
    }

    /// Componentwise residual of the scheme at the latest accepted step,
    /// evaluated with the damping coefficient of the accepted solution.
    pub fn last_step_residual(&self) -> Result<Vec<f64>> {
        let n = self.n - 1;
        if n < 2 {
            return Err(Error::Config("no step has been solved yet".into()));
        }
        let dt = self.dt;
        let g_val = damping_coefficient(&self.spec.damping, &self.u_prev, &self.grid)?;
        let m = self.grid.interior_len();
        let mut mem = vec![0.0; m];
        for p in 1..=n {
            let w = self.tables.weight(n - p);
            for (a, x) in mem.iter_mut().zip(self.velocity(p)) {
                *a += w * x;
            }
        }
        let d4_mem = self.d4.mul_vec(&mem)?;
        let d4_u = self.d4.mul_vec(&self.u_prev)?;
        let f = self.forcing_at(n);
        let k_tn = self.tables.tail_at_step(n);
        let (vn, vprev) = (self.velocity(n), self.velocity(n - 1));
        Ok((0..m)
            .map(|j| {
                (vn[j] - vprev[j]) / dt + g_val * vn[j] + self.tables.mu0() * d4_u[j] + d4_mem[j]
                    - f[j]
                    + k_tn * self.d4_u0[j]
            })
            .collect())
    }

    /// Writes the latest solution as `x,U` rows.
    pub fn write_solution_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,U")?;
        for (x, u) in self.grid.nodes().iter().zip(&self.u_prev) {
            writeln!(w, "{x},{u}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub iterations: usize,
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub n: usize,
    pub t: f64,
    pub vel_norm: f64,
    pub curv_norm: f64,
    pub damping: f64,
    pub fp_iters: usize,
    pub energy: Option<EnergyRecord>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    pub records: Vec<StepRecord>,
    /// `(n, Uⁿ)` pairs kept according to `snapshot_stride`.
    pub snapshots: Vec<(usize, Vec<f64>)>,
}

impl TimeSeries {
    pub fn energies(&self) -> Vec<EnergyRecord> {
        self.records.iter().filter_map(|r| r.energy).collect()
    }

    pub fn max_fp_iters(&self) -> usize {
        self.records.iter().map(|r| r.fp_iters).max().unwrap_or(0)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let with_energy = self.records.iter().any(|r| r.energy.is_some());
        write!(w, "n,t,vel_norm,curv_norm,damping,fp_iters")?;
        if with_energy {
            write!(w, ",kinetic,dissipated,elastic,total")?;
        }
        writeln!(w)?;
        for r in &self.records {
            write!(
                w,
                "{},{},{},{},{},{}",
                r.n, r.t, r.vel_norm, r.curv_norm, r.damping, r.fp_iters
            )?;
            if let Some(e) = r.energy {
                write!(w, ",{},{},{},{}", e.kinetic, e.dissipated, e.elastic, e.total)?;
            } else if with_energy {
                write!(w, ",,,,")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn record(
    state: &SolverState,
    damping: f64,
    fp_iters: usize,
    dissipation: f64,
    config: &SolverConfig,
) -> Result<StepRecord> {
    let grid = state.grid();
    let vel_norm = grid.norm(state.latest_velocity())?;
    let curv_norm = grid.curvature_norm(state.solution())?;
    let energy = if config.record_energy {
        Some(diagnostics::energy(
            state,
            dissipation,
            state.spec.damping.g0,
            state.tables.mu0(),
        )?)
    } else {
        None
    };
    Ok(StepRecord {
        n: state.next_step() - 1,
        t: state.time(),
        vel_norm,
        curv_norm,
        damping,
        fp_iters,
        energy,
    })
}

/// Validates `spec`, builds kernel tables for `Δt = T/N`, and runs to step `N`.
pub fn run(
    spec: &ProblemSpec,
    grid: Grid,
    n_steps: usize,
    config: &SolverConfig,
) -> Result<(SolverState, TimeSeries)> {
    spec.validate()?;
    if n_steps == 0 {
        return Err(Error::Config("need at least one time step".into()));
    }
    let dt = spec.horizon / n_steps as f64;
    let tables = Arc::new(KernelTables::new(spec.kernel, dt, n_steps)?);
    run_with_tables(spec, grid, n_steps, config, tables)
}

/// As [`run`], reusing prepared tables (which must match `Δt = T/N`).
pub fn run_with_tables(
    spec: &ProblemSpec,
    grid: Grid,
    n_steps: usize,
    config: &SolverConfig,
    tables: Arc<KernelTables>,
) -> Result<(SolverState, TimeSeries)> {
    run_observed(spec, grid, n_steps, config, tables, |_| ControlFlow::Continue(()))
}

/// Like [`run_with_tables`], but hands every record to `observe` as soon as it
/// is produced; `ControlFlow::Break` ends the run early with the records so far.
pub fn run_observed<F>(
    spec: &ProblemSpec,
    grid: Grid,
    n_steps: usize,
    config: &SolverConfig,
    tables: Arc<KernelTables>,
    mut observe: F,
) -> Result<(SolverState, TimeSeries)>
where
    F: FnMut(&StepRecord) -> ControlFlow<()>,
{
    config.validate()?;
    if n_steps == 0 {
        return Err(Error::Config("need at least one time step".into()));
    }
    if tables.len() < n_steps {
        return Err(Error::Config(format!(
            "kernel tables hold {} weights, run needs {n_steps}",
            tables.len()
        )));
    }
    let dt = spec.horizon / n_steps as f64;
    let mut state = SolverState::initialize(spec, grid, dt, tables)?;
    let mut series = TimeSeries::default();
    let g_init = damping_coefficient(&spec.damping, state.solution(), &grid)?;
    series.records.push(record(&state, g_init, 0, 0.0, config)?);
    let keep = |n: usize| config.snapshot_stride > 0 && n.is_multiple_of(config.snapshot_stride);
    if keep(1) {
        series.snapshots.push((1, state.solution().to_vec()));
    }
    if observe(&series.records[0]).is_break() {
        return Ok((state, series));
    }
    let mut dissipation = 0.0;
    for _ in 2..=n_steps {
        let info = state.step(config)?;
        let v = grid.norm(state.latest_velocity())?;
        dissipation += dt * v * v;
        let rec = record(&state, info.damping, info.iterations, dissipation, config)?;
        let n = rec.n;
        if keep(n) {
            series.snapshots.push((n, state.solution().to_vec()));
        }
        let flow = observe(&rec);
        series.records.push(rec);
        if flow.is_break() {
            break;
        }
    }
    Ok((state, series))
}
