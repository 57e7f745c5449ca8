//! Multi-slot experiment runner and `report.csv`.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{ExperimentConfig, Method};
use crate::error::{Error, Result};
use crate::heatmap::emit_heatmap;
use crate::placement::{baseline_smbs, baseline_ssc, run_leap, EnergyParams};
use crate::queueing::{Association, Evaluation};
use crate::radio::LinkRates;
use crate::scenario::{DemandField, Grid, Scenario};

/// Column order of `report.csv`.
pub const REPORT_HEADER: &str =
    "slot,method,objective,rho_m,rho_d,tau_m,tau_d,dbs_location_col,dbs_location_row,coverage_size,feasible";

#[derive(Debug, Clone, PartialEq)]
pub struct MethodReport {
    pub method: Method,
    pub evaluation: Evaluation,
    /// `None` for S-MBS.
    pub dbs_location: Option<usize>,
    pub assoc: Association,
}

impl MethodReport {
    pub fn coverage_size(&self) -> usize {
        self.assoc.coverage_size()
    }
}

/// Results of every requested method on one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotReport {
    /// 1-based.
    pub slot: usize,
    pub entries: Vec<MethodReport>,
}

impl SlotReport {
    pub fn get(&self, method: Method) -> Option<&MethodReport> {
        self.entries.iter().find(|e| e.method == method)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub reports: Vec<SlotReport>,
    pub report_path: PathBuf,
    pub files: Vec<PathBuf>,
}

impl ExperimentOutcome {
    pub fn any_infeasible(&self) -> bool {
        self.reports
            .iter()
            .flat_map(|r| &r.entries)
            .any(|e| !e.evaluation.feasible)
    }
}

/// Rate tables and energy model shared by all slots of a run.
pub struct Runner {
    pub split: LinkRates,
    pub full_band: LinkRates,
    pub energy: EnergyParams,
    pub methods: Vec<Method>,
    pub ssc_location: Option<usize>,
}

impl Runner {
    pub fn new(config: &ExperimentConfig, scenario: &Scenario) -> Result<Self> {
        let grid = scenario.grid();
        let mbs = scenario.mbs_location();
        let mut methods = config.methods.clone();
        methods.sort();
        methods.dedup();
        Ok(Runner {
            split: LinkRates::new(grid, mbs, &config.radio.split_params())?,
            full_band: LinkRates::new(grid, mbs, &config.radio.full_band_params())?,
            energy: config.energy,
            methods,
            ssc_location: config.ssc_location()?,
        })
    }

    pub fn run_slot(&self, slot: usize, demand: &DemandField) -> Result<SlotReport> {
        let entries = self
            .methods
            .iter()
            .map(|&method| match method {
                Method::Leap => {
                    let r = run_leap(&self.split, demand, &self.energy)?;
                    Ok(MethodReport {
                        method,
                        evaluation: r.evaluation,
                        dbs_location: Some(r.dbs_location()),
                        assoc: r.assoc,
                    })
                }
                Method::Ssc => {
                    let at = self
                        .ssc_location
                        .ok_or_else(|| Error::validation("ssc_fixed_location", "missing"))?;
                    let r = baseline_ssc(&self.split, demand, &self.energy, at)?;
                    Ok(MethodReport {
                        method,
                        evaluation: r.evaluation,
                        dbs_location: Some(at),
                        assoc: r.assoc,
                    })
                }
                Method::Smbs => {
                    let evaluation = baseline_smbs(&self.full_band, demand)?;
                    Ok(MethodReport {
                        method,
                        evaluation,
                        dbs_location: None,
                        assoc: Association::all_mbs(demand.len(), self.full_band.mbs_location())?,
                    })
                }
            })
            .collect::<Result<_>>()?;
        Ok(SlotReport { slot, entries })
    }
}

/// Run every method on every slot. Slots are processed in parallel; output
/// order and content do not depend on scheduling.
pub fn run_slots(config: &ExperimentConfig, scenario: &Scenario) -> Result<Vec<SlotReport>> {
    let runner = Runner::new(config, scenario)?;
    scenario
        .demand_per_slot()
        .par_iter()
        .enumerate()
        .map(|(t, d)| runner.run_slot(t + 1, d))
        .collect()
}

pub fn report_rows(reports: &[SlotReport], grid: &Grid) -> Result<String> {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in reports {
        for e in &r.entries {
            let (col, row) = match e.dbs_location {
                Some(j) => {
                    let (c, w) = grid.index_to_cell(j)?;
                    (c.to_string(), w.to_string())
                }
                None => (String::new(), String::new()),
            };
            let ev = &e.evaluation;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.slot,
                e.method,
                ev.objective,
                ev.rho_m,
                ev.rho_d,
                ev.tau_m,
                ev.tau_d,
                col,
                row,
                e.coverage_size(),
                ev.feasible
            ));
        }
    }
    Ok(out)
}

pub fn demand_heatmap_stem(dir: &Path, slot: usize) -> PathBuf {
    dir.join(format!("demand_slot{slot:03}"))
}

pub fn association_heatmap_stem(dir: &Path, method: Method, slot: usize) -> PathBuf {
    dir.join(format!("assoc_{method}_slot{slot:03}"))
}

/// Run the experiment and write `report.csv` plus demand and association
/// heatmaps into the configured output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let scenario = config.scenario()?;
    let reports = run_slots(config, &scenario)?;
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let grid = scenario.grid();
    let report_path = dir.join("report.csv");
    std::fs::write(&report_path, report_rows(&reports, grid)?).map_err(|e| Error::io(&report_path, e))?;

    let mut files = Vec::new();
    for r in &reports {
        let demand = scenario.demand(r.slot - 1);
        let loads = demand.arrival_rate().to_vec();
        let (a, b) = emit_heatmap(&loads, grid, &demand_heatmap_stem(dir, r.slot))?;
        files.extend([a, b]);
        for e in &r.entries {
            if e.method == Method::Smbs {
                continue;
            }
            let theta: Vec<f64> = e.assoc.theta().iter().map(|&t| if t { 1.0 } else { 0.0 }).collect();
            let (a, b) = emit_heatmap(&theta, grid, &association_heatmap_stem(dir, e.method, r.slot))?;
            files.extend([a, b]);
        }
    }
    Ok(ExperimentOutcome {
        reports,
        report_path,
        files,
    })
}
