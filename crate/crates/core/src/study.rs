//! Self-convergence studies: temporal (`E₂`, halving Δt on a fixed grid) and
//! spatial (`F₂`, halving h at fixed Δt, comparing coarse node `j` with fine
//! node `2j`).

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::ProblemSpec;
use crate::stepper::{run, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    Temporal,
    Spatial,
}

impl Axis {
    pub fn parameter_name(self) -> &'static str {
        match self {
            Axis::Temporal => "N",
            Axis::Spatial => "J",
        }
    }

    pub fn error_name(self) -> &'static str {
        match self {
            Axis::Temporal => "E2",
            Axis::Spatial => "F2",
        }
    }
}

fn final_solution(
    spec: &ProblemSpec,
    intervals: usize,
    n_steps: usize,
    config: &SolverConfig,
) -> Result<Vec<f64>> {
    let cfg = SolverConfig {
        record_energy: false,
        snapshot_stride: 0,
        ..*config
    };
    let (state, _) = run(spec, Grid::new(intervals)?, n_steps, &cfg)?;
    Ok(state.solution().to_vec())
}

/// `‖U^{N/2}(2Δt) − U^N(Δt)‖` on a shared grid.
pub fn temporal_distance(coarse: &[f64], fine: &[f64], grid: &Grid) -> Result<f64> {
    if coarse.len() != fine.len() {
        return Err(Error::LengthMismatch {
            expected: coarse.len(),
            found: fine.len(),
        });
    }
    let diff: Vec<f64> = coarse.iter().zip(fine).map(|(a, b)| a - b).collect();
    grid.norm(&diff)
}

/// `(h Σ_j |U_j(2h) − U_{2j}(h)|²)^{1/2}` over the coarse interior nodes,
/// with `h` the spacing of `fine_grid`.
pub fn spatial_distance(coarse: &[f64], fine: &[f64], fine_grid: &Grid) -> Result<f64> {
    if !fine_grid.intervals().is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!(
            "refined grid needs an even number of subintervals, got {}",
            fine_grid.intervals()
        )));
    }
    fine_grid.check(fine)?;
    let m = fine_grid.intervals() / 2 - 1;
    if coarse.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            found: coarse.len(),
        });
    }
    // Coarse interior index i holds node i+1, which sits at fine index 2i+1.
    let sum: f64 = (0..m).map(|i| (coarse[i] - fine[2 * i + 1]).powi(2)).sum();
    Ok((fine_grid.h() * sum).sqrt())
}

/// `E₂` at `N` steps: the run with `N` steps against the run with `N/2`
/// steps, both on `grid`.
pub fn temporal_error(
    spec: &ProblemSpec,
    grid: &Grid,
    n_steps: usize,
    config: &SolverConfig,
) -> Result<f64> {
    if n_steps < 2 || !n_steps.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "temporal error needs an even step count of at least 2, got {n_steps}"
        )));
    }
    let j = grid.intervals();
    let (a, b) = rayon::join(
        || final_solution(spec, j, n_steps / 2, config),
        || final_solution(spec, j, n_steps, config),
    );
    temporal_distance(&a?, &b?, grid)
}

/// `F₂` at `grid`: the solution on `grid` against the one on a grid with
/// half as many subintervals, both at `N` steps.
pub fn spatial_error(
    spec: &ProblemSpec,
    grid: &Grid,
    n_steps: usize,
    config: &SolverConfig,
) -> Result<f64> {
    let j = grid.intervals();
    if !j.is_multiple_of(2) || j < 8 {
        return Err(Error::InvalidGrid(format!(
            "spatial error needs an even J of at least 8, got {j}"
        )));
    }
    let (a, b) = rayon::join(
        || final_solution(spec, j / 2, n_steps, config),
        || final_solution(spec, j, n_steps, config),
    );
    spatial_distance(&a?, &b?, grid)
}

/// `log₂(coarse / fine)`; `None` when either error is zero or non-finite.
pub fn rate(coarse: f64, fine: f64) -> Option<f64> {
    if coarse > 0.0 && fine > 0.0 && coarse.is_finite() && fine.is_finite() {
        Some((coarse / fine).log2())
    } else {
        None
    }
}

#[derive(Debug, Clone)]
pub struct StudyCell {
    pub label: String,
    pub spec: ProblemSpec,
}

#[derive(Debug, Clone)]
pub struct StudySpec {
    pub cells: Vec<StudyCell>,
    pub axis: Axis,
    /// `J` and `N` of the first row. Each row is labelled by its refined run,
    /// so the refined parameter must be even at the base.
    pub base_intervals: usize,
    pub base_steps: usize,
    /// Number of error rows per cell.
    pub levels: usize,
    pub solver: SolverConfig,
}

impl StudySpec {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(Error::Config(format!(
                "a study needs at least 2 levels, got {}",
                self.levels
            )));
        }
        if self.cells.is_empty() {
            return Err(Error::Config("study has no cells".into()));
        }
        if self.base_steps == 0 {
            return Err(Error::Config("study needs at least one time step".into()));
        }
        Grid::new(self.base_intervals)?;
        match self.axis {
            Axis::Temporal if self.base_steps < 2 || !self.base_steps.is_multiple_of(2) => {
                return Err(Error::Config(format!(
                    "temporal study needs an even base N, got {}",
                    self.base_steps
                )))
            }
            Axis::Spatial if self.base_intervals < 8 || !self.base_intervals.is_multiple_of(2) => {
                return Err(Error::Config(format!(
                    "spatial study needs an even base J of at least 8, got {}",
                    self.base_intervals
                )))
            }
            _ => {}
        }
        for c in &self.cells {
            c.spec.validate()?;
        }
        Ok(())
    }

    /// `(J, N)` of run `k`; run 0 is the unlabelled coarse run below row 0,
    /// and row `l` compares runs `l` and `l + 1`.
    fn run_parameters(&self, k: usize) -> (usize, usize) {
        match self.axis {
            Axis::Temporal => (self.base_intervals, (self.base_steps / 2) << k),
            Axis::Spatial => ((self.base_intervals / 2) << k, self.base_steps),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub level: usize,
    /// `N` for temporal studies, `J` for spatial ones.
    pub parameter: usize,
    pub error: Option<f64>,
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub label: String,
    pub rows: Vec<ReportRow>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMetadata {
    pub config: serde_json::Value,
    pub generated_at_unix: u64,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub axis: Axis,
    pub parameter: String,
    pub cells: Vec<CellReport>,
    pub metadata: ReportMetadata,
}

/// Runs every cell's refinement ladder. Runs are independent and execute in
/// parallel; a failed run marks its cell without aborting the others.
pub fn run_study(study: &StudySpec, config_echo: serde_json::Value) -> Result<ConvergenceReport> {
    study.validate()?;
    let runs: Vec<(usize, usize)> = (0..study.cells.len())
        .flat_map(|c| (0..=study.levels).map(move |l| (c, l)))
        .collect();
    let solutions: Vec<Result<Vec<f64>>> = runs
        .par_iter()
        .map(|&(c, l)| {
            let (j, n) = study.run_parameters(l);
            final_solution(&study.cells[c].spec, j, n, &study.solver)
        })
        .collect();

    let per_cell = study.levels + 1;
    let mut cells = Vec::with_capacity(study.cells.len());
    for (c, cell) in study.cells.iter().enumerate() {
        let sols = &solutions[c * per_cell..(c + 1) * per_cell];
        let failure = sols.iter().find_map(|s| s.as_ref().err().map(|e| e.to_string()));
        let mut rows = Vec::with_capacity(study.levels);
        let mut prev: Option<f64> = None;
        for l in 0..study.levels {
            let (j, n) = study.run_parameters(l + 1);
            let error = match (&sols[l], &sols[l + 1]) {
                (Ok(a), Ok(b)) => {
                    let grid = Grid::new(j)?;
                    Some(match study.axis {
                        Axis::Temporal => temporal_distance(a, b, &grid)?,
                        Axis::Spatial => spatial_distance(a, b, &grid)?,
                    })
                }
                _ => None,
            };
            let r = match (prev, error) {
                (Some(p), Some(e)) => rate(p, e),
                _ => None,
            };
            rows.push(ReportRow {
                level: l,
                parameter: match study.axis {
                    Axis::Temporal => n,
                    Axis::Spatial => j,
                },
                error,
                rate: r,
            });
            prev = error;
        }
        cells.push(CellReport {
            label: cell.label.clone(),
            rows,
            failure,
        });
    }
    Ok(ConvergenceReport {
        axis: study.axis,
        parameter: study.axis.parameter_name().to_string(),
        cells,
        metadata: ReportMetadata {
            config: config_echo,
            generated_at_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}

impl ConvergenceReport {
    pub fn cell(&self, label: &str) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.label == label)
    }

    /// One row per level and cell; undefined rates print as `*`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "cell,level,{},{},rate",
            self.parameter,
            self.axis.error_name()
        )?;
        for cell in &self.cells {
            for row in &cell.rows {
                let err = row.error.map_or("NaN".to_string(), |e| format!("{e:.4e}"));
                let rate = row.rate.map_or("*".to_string(), |r| format!("{r:.2}"));
                writeln!(w, "{},{},{},{},{}", cell.label, row.level, row.parameter, err, rate)?;
            }
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}
