//! The `validate` subcommand: exhaustive-search gap on shrunk copies of the
//! configured scenario, queue-simulation check of the latency-ratio formula,
//! and grid-search check of the load split.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::oracle::{exhaustive_best_placement, numeric_split_check, simulate_mg1ps, SizeDistribution};
use crate::placement::{kkt_split, run_leap};
use crate::queueing::objective;
use crate::radio::LinkRates;
use crate::scenario::{DemandField, Grid, Scenario};

/// Side length of a shrunk instance.
pub const SHRUNK_SIDE: usize = 3;
pub const QUEUE_LOADS: [f64; 3] = [0.3, 0.5, 0.7];
pub const QUEUE_JOBS: usize = 100_000;
pub const QUEUE_REL_TOL: f64 = 0.05;
pub const SPLIT_SAMPLES: usize = 1_000;
pub const SPLIT_STEP: f64 = 1e-4;
pub const SPLIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Section {
    pub name: &'static str,
    pub passed: bool,
    pub lines: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub sections: Vec<Section>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.sections.iter().all(|s| s.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.sections {
            writeln!(f, "[{}] {}", if s.passed { "PASS" } else { "FAIL" }, s.name)?;
            for l in &s.lines {
                writeln!(f, "    {l}")?;
            }
        }
        Ok(())
    }
}

/// Aggregate `scenario`'s grid into at most `side x side` blocks. Block demand
/// is the sum of arrival rates, with the load-weighted mean size.
pub fn shrink(scenario: &Scenario, side: usize) -> Result<Scenario> {
    let g = scenario.grid();
    let (w, h) = (g.width_cells(), g.height_cells());
    let bw = w.div_ceil(side);
    let bh = h.div_ceil(side);
    let (cw, ch) = (w.div_ceil(bw), h.div_ceil(bh));
    let cell = g.cell_size() * bw.max(bh) as f64;
    let coarse = Grid::new(cw, ch, cell, g.origin())?;
    let block_of = |i: usize| {
        let (c, r) = (i % w, i / w);
        (r / bh) * cw + c / bw
    };
    let fields = scenario
        .demand_per_slot()
        .iter()
        .map(|d| {
            let mut rate = vec![0.0; coarse.len()];
            let mut load = vec![0.0; coarse.len()];
            for i in 0..d.len() {
                rate[block_of(i)] += d.arrival_rate()[i];
                load[block_of(i)] += d.load(i);
            }
            let size = rate
                .iter()
                .zip(&load)
                .map(|(&r, &l)| if r > 0.0 { l / r } else { 1.0 })
                .collect();
            DemandField::new(rate, size)
        })
        .collect::<Result<_>>()?;
    Scenario::new(coarse, block_of(scenario.mbs_location()), fields)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Relative gap `(leap - oracle) / oracle`, zero when both vanish.
pub fn relative_gap(leap: f64, oracle: f64) -> f64 {
    if leap == oracle {
        0.0
    } else {
        (leap - oracle) / oracle
    }
}

fn gap_section(config: &ExperimentConfig) -> Result<Section> {
    let scenario = config.scenario()?;
    let small = if scenario.grid().len() <= crate::oracle::DEFAULT_MAX_LOCATIONS {
        scenario
    } else {
        shrink(&scenario, SHRUNK_SIDE)?
    };
    let rates = LinkRates::new(small.grid(), small.mbs_location(), &config.radio.split_params())?;
    let mut lines = Vec::new();
    let mut gaps = Vec::new();
    let mut passed = true;
    for (t, d) in small.demand_per_slot().iter().enumerate() {
        let leap = run_leap(&rates, d, &config.energy)?;
        match exhaustive_best_placement(&rates, d, &config.energy, crate::oracle::DEFAULT_MAX_LOCATIONS) {
            Ok(best) => {
                let gap = relative_gap(leap.evaluation.objective, best.best_objective);
                let ok = leap.evaluation.objective >= best.best_objective;
                passed &= ok;
                if gap.is_finite() {
                    gaps.push(gap);
                }
                lines.push(format!(
                    "slot {:>3}: leap {:.6} oracle {:.6} gap {:.4}{}",
                    t + 1,
                    leap.evaluation.objective,
                    best.best_objective,
                    gap,
                    if ok { "" } else { "  (leap below oracle!)" }
                ));
            }
            Err(e) => lines.push(format!("slot {:>3}: oracle: {e}", t + 1)),
        }
    }
    lines.push(format!(
        "{} instances on a {}x{} grid, median gap {:.4}",
        small.slot_count(),
        small.grid().width_cells(),
        small.grid().height_cells(),
        median(&mut gaps)
    ));
    Ok(Section {
        name: "exhaustive placement gap",
        passed,
        lines,
    })
}

fn queue_section(seed: u64) -> Result<Section> {
    let mut lines = Vec::new();
    let mut passed = true;
    let mean_size = 1e5;
    let service_rate = 1e6;
    for (k, &rho) in QUEUE_LOADS.iter().enumerate() {
        let arrival = rho * service_rate / mean_size;
        let r = simulate_mg1ps(
            arrival,
            SizeDistribution::Exponential { mean: mean_size },
            service_rate,
            QUEUE_JOBS,
            seed.wrapping_add(k as u64),
        )?;
        let rel = ((r.empirical_latency_ratio - r.analytic_latency_ratio) / r.analytic_latency_ratio).abs();
        let ok = rel <= QUEUE_REL_TOL;
        passed &= ok;
        lines.push(format!(
            "rho {rho:.1}: simulated {:.4} +- {:.4}, rho/(1-rho) {:.4}, rel err {:.4}",
            r.empirical_latency_ratio, r.half_width_95, r.analytic_latency_ratio, rel
        ));
    }
    lines.push(format!("generator: {}", crate::oracle::GENERATOR));
    Ok(Section {
        name: "processor-sharing latency ratio",
        passed,
        lines,
    })
}

/// Compare the closed-form split against grid search on random `(rho, cap)`.
/// Returns `(violations, worst excess)`.
pub fn split_agreement(samples: usize, seed: u64) -> (usize, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let rho = rng.random_range(0.0..=1.8);
        let cap = rng.random_range(0.0..=0.99);
        let split = kkt_split(rho, cap);
        match (
            numeric_split_check(rho, cap, SPLIT_STEP),
            objective(split.rho_m, split.rho_d),
        ) {
            (Ok((_, grid_min)), Ok(closed)) => {
                worst = worst.max(closed - grid_min);
                if closed > grid_min + SPLIT_TOL || split.rho_d != (rho / 2.0).min(cap) {
                    violations += 1;
                }
            }
            (Err(_), Err(_)) => {}
            _ => violations += 1,
        }
    }
    (violations, worst)
}

fn split_section(seed: u64) -> Section {
    let (violations, worst) = split_agreement(SPLIT_SAMPLES, seed);
    Section {
        name: "closed-form load split",
        passed: violations == 0,
        lines: vec![format!(
            "{SPLIT_SAMPLES} samples, {violations} violations, max(closed - grid) {worst:.3e}"
        )],
    }
}

pub fn validate(config: &ExperimentConfig) -> Result<ValidationReport> {
    Ok(ValidationReport {
        sections: vec![
            gap_section(config)?,
            queue_section(config.seed)?,
            split_section(config.seed),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shrink_preserves_total_rate() {
        let g = Grid::square(10, 10.0).unwrap();
        let rate: Vec<f64> = (0..100).map(|i| i as f64 * 1e-3).collect();
        let d = DemandField::new(rate.clone(), vec![2.0; 100]).unwrap();
        let s = Scenario::new(g, 55, vec![d]).unwrap();
        let small = shrink(&s, 3).unwrap();
        assert_eq!(small.grid().len(), 9);
        let total: f64 = small.demand(0).arrival_rate().iter().sum();
        assert!((total - rate.iter().sum::<f64>()).abs() < 1e-12);
        assert!(small.demand(0).mean_size().iter().all(|&v| (v - 2.0).abs() < 1e-12));
        assert_eq!(small.mbs_location(), 4);
    }

    #[test]
    fn gap_definition() {
        assert_eq!(relative_gap(0.0, 0.0), 0.0);
        assert_eq!(relative_gap(1.1, 1.0), 0.10000000000000009);
    }
}
