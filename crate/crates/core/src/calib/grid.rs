//! Experiment grids over the calibration benchmark.
//!
//! A grid is a TOML file of lists; every combination is one cell and every
//! cell runs once per seed from `u⁰ = 0` with the relative-step rule:
//!
//! ```toml
//! n = [50]
//! variants = ["dpgadmm"]
//! alpha = [0.5, 1.0, 1.5]
//! beta = [1.0]
//! g1 = [2.0]
//! g2 = [2.0]
//! seeds = [1, 2, 3, 4, 5]
//! tol = 1e-6          # optional
//! max_iter = 100000   # optional
//! ```
//!
//! Cells are specialized to their variant: weights a variant has no room
//! for are dropped and `α` is fixed to 1 for the unrelaxed schemes.
//! Cells that coincide after this are run once.

use std::path::Path;
use std::time::Duration;

use log::{info, warn};
use rayon::prelude::*;
use serde::Deserialize;

use super::{calib_problem, generate_instance, unvectorize};
use crate::error::{Error, Result};
use crate::problem::ProximalWeights;
use crate::solvers::{run, SolverConfig, Variant, DEFAULT_MAX_ITER};

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: Vec<usize>,
    pub variants: Vec<String>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
}

/// One parameter combination after specialization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub n: usize,
    pub variant: Variant,
    pub alpha: f64,
    pub beta: f64,
    pub g1: f64,
    pub g2: f64,
}

#[derive(Clone, Debug)]
pub struct CellRun {
    pub cell: Cell,
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time: Duration,
    pub objective: f64,
    pub epsilon_final: f64,
    /// `‖X − Y‖_F / (1 + ‖X‖_F)` at the final iterate.
    pub relative_gap: f64,
    /// Relative-step value after every iteration.
    pub curve: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub cell: Cell,
    pub iterations_median: f64,
    pub cpu_seconds_median: f64,
    pub objective_median: f64,
    pub epsilon_final_median: f64,
    pub converged: usize,
    pub runs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub errors: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub spec: GridSpec,
    pub cells: Vec<Cell>,
    pub runs: Vec<CellRun>,
}

impl GridSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: GridSpec = toml::from_str(text).map_err(|e| Error::Grid(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(1e-6)
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter.unwrap_or(DEFAULT_MAX_ITER)
    }

    fn validate(&self) -> Result<()> {
        let lists = [
            ("n", self.n.len()),
            ("variants", self.variants.len()),
            ("alpha", self.alpha.len()),
            ("beta", self.beta.len()),
            ("g1", self.g1.len()),
            ("g2", self.g2.len()),
            ("seeds", self.seeds.len()),
        ];
        if let Some((name, _)) = lists.iter().find(|(_, len)| *len == 0) {
            return Err(Error::Grid(format!("`{name}` is empty")));
        }
        if let Some(n) = self.n.iter().find(|&&n| n < 2) {
            return Err(Error::Grid(format!("n = {n} is below 2")));
        }
        for v in &self.variants {
            v.parse::<Variant>().map_err(|e| Error::Grid(e.to_string()))?;
        }
        if let Some(a) = self.alpha.iter().find(|&&a| !(a > 0.0 && a < 2.0)) {
            return Err(Error::Grid(format!("alpha = {a} is outside (0, 2)")));
        }
        if let Some(b) = self.beta.iter().find(|&&b| !(b > 0.0)) {
            return Err(Error::Grid(format!("beta = {b} is not positive")));
        }
        if let Some(g) = self.g1.iter().chain(&self.g2).find(|&&g| !(g >= 0.0)) {
            return Err(Error::Grid(format!("weight {g} is negative")));
        }
        if !(self.tol() > 0.0) || self.max_iter() == 0 {
            return Err(Error::Grid("tol and max_iter must be positive".into()));
        }
        Ok(())
    }

    /// Distinct specialized cells in declaration order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out: Vec<Cell> = Vec::new();
        for &n in &self.n {
            for name in &self.variants {
                let variant: Variant = name.parse().expect("validated");
                for &alpha in &self.alpha {
                    for &beta in &self.beta {
                        for &g1 in &self.g1 {
                            for &g2 in &self.g2 {
                                let cell = Cell {
                                    n,
                                    variant,
                                    alpha: if variant.unit_alpha() { 1.0 } else { alpha },
                                    beta,
                                    g1: if variant.allows_g1() { g1 } else { 0.0 },
                                    g2: if variant.allows_g2() { g2 } else { 0.0 },
                                };
                                if !out.contains(&cell) {
                                    out.push(cell);
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

impl Cell {
    pub fn config(&self, tol: f64, max_iter: usize, seed: u64) -> Result<SolverConfig<f64>> {
        Ok(SolverConfig::new(self.variant, Some(self.alpha), self.beta, ProximalWeights::scaled(self.g1, self.g2))?
            .with_tol(tol)
            .with_max_iter(max_iter)
            .with_seed(seed))
    }
}

/// Runs one cell on one seed.
pub fn run_cell(cell: &Cell, seed: u64, tol: f64, max_iter: usize) -> Result<CellRun> {
    let inst = generate_instance::<f64>(cell.n, seed)?;
    let problem = calib_problem(&inst);
    let cfg = cell.config(tol, max_iter, seed)?;
    let result = run(&problem, &problem.zero_iterate(), &cfg)?;
    let x = unvectorize(&result.final_state.x, cell.n);
    let y = unvectorize(&result.final_state.y, cell.n);
    if !result.converged {
        warn!("{:?} seed {seed}: no convergence within {max_iter} iterations", cell);
    }
    Ok(CellRun {
        cell: *cell,
        seed,
        iterations: result.iterations,
        converged: result.converged,
        wall_time: result.wall_time,
        objective: inst.objective(&x, &y),
        epsilon_final: result.epsilon_final(),
        relative_gap: (&x - &y).norm() / (1.0 + x.norm()),
        curve: result.relative_steps,
    })
}

/// Runs every cell on every seed, in parallel.
pub fn run_experiment_grid(spec: &GridSpec) -> Result<ExperimentReport> {
    let cells = spec.cells();
    let jobs: Vec<(Cell, u64)> = cells.iter().flat_map(|c| spec.seeds.iter().map(move |&s| (*c, s))).collect();
    info!("running {} cells x {} seeds", cells.len(), spec.seeds.len());
    let runs = jobs
        .par_iter()
        .map(|(cell, seed)| run_cell(cell, *seed, spec.tol(), spec.max_iter()))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport { spec: spec.clone(), cells, runs })
}

/// Median; the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

impl ExperimentReport {
    pub fn runs_for(&self, cell: &Cell) -> impl Iterator<Item = &CellRun> + '_ {
        let cell = *cell;
        self.runs.iter().filter(move |r| r.cell == cell)
    }

    pub fn table_rows(&self) -> Vec<TableRow> {
        self.cells
            .iter()
            .map(|cell| {
                let runs: Vec<&CellRun> = self.runs_for(cell).collect();
                let col = |f: fn(&CellRun) -> f64| median(&runs.iter().map(|r| f(r)).collect::<Vec<_>>());
                TableRow {
                    cell: *cell,
                    iterations_median: col(|r| r.iterations as f64),
                    cpu_seconds_median: col(|r| r.wall_time.as_secs_f64()),
                    objective_median: col(|r| r.objective),
                    epsilon_final_median: col(|r| r.epsilon_final),
                    converged: runs.iter().filter(|r| r.converged).count(),
                    runs: runs.len(),
                }
            })
            .collect()
    }

    fn first_seed_curve(&self, cell: &Cell) -> Option<&CellRun> {
        let seed = self.spec.seeds[0];
        self.runs_for(cell).find(|r| r.seed == seed)
    }

    /// One relative-step curve per `α`, other parameters at their first
    /// grid value, first seed.
    pub fn alpha_series(&self) -> Vec<Series> {
        let base = self.cells[0];
        self.cells
            .iter()
            .filter(|c| Cell { alpha: base.alpha, ..**c } == base)
            .filter_map(|c| self.first_seed_curve(c))
            .map(|r| Series { label: format!("alpha={}", r.cell.alpha), errors: r.curve.clone() })
            .collect()
    }

    /// One curve per `β`, analogous to [`Self::alpha_series`].
    pub fn beta_series(&self) -> Vec<Series> {
        let base = self.cells[0];
        self.cells
            .iter()
            .filter(|c| Cell { beta: base.beta, ..**c } == base)
            .filter_map(|c| self.first_seed_curve(c))
            .map(|r| Series { label: format!("beta={}", r.cell.beta), errors: r.curve.clone() })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
n = [4]
variants = ["dpgadmm", "gadmm"]
alpha = [0.5, 1.5]
beta = [1.0]
g1 = [2.0]
g2 = [2.0]
seeds = [1, 4]
tol = 1e-6
"#;

    #[test]
    fn parse_and_specialize() {
        let spec = GridSpec::parse(SMALL).unwrap();
        let cells = spec.cells();
        assert_eq!(cells.len(), 4);
        assert!(cells.iter().filter(|c| c.variant == Variant::Gadmm).all(|c| c.g1 == 0.0 && c.g2 == 0.0));
        let admm = GridSpec { variants: vec!["admm".into()], ..spec };
        assert_eq!(admm.cells().len(), 1);
    }

    #[test]
    fn malformed_grids() {
        assert!(matches!(GridSpec::parse(""), Err(Error::Grid(_))));
        assert!(GridSpec::parse(&SMALL.replace("seeds = [1, 4]", "seeds = []")).is_err());
        assert!(GridSpec::parse(&SMALL.replace("[0.5, 1.5]", "[0.5, 2.0]")).is_err());
        assert!(GridSpec::parse(&SMALL.replace("\"gadmm\"", "\"adm-g\"")).is_err());
        assert!(GridSpec::parse(&format!("{SMALL}\nfoo = 1\n")).is_err());
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn small_grid_runs() {
        let report = run_experiment_grid(&GridSpec::parse(SMALL).unwrap()).unwrap();
        assert_eq!(report.runs.len(), 8);
        let rows = report.table_rows();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.converged == 2));
        let series = report.alpha_series();
        assert_eq!(series.len(), 2);
        assert_eq!(series[0].label, "alpha=0.5");
        assert_eq!(report.beta_series().len(), 1);
    }
}
