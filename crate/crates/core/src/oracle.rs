//! Independent reference computations used to check the optimizer and the
//! queueing formulas.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::placement::{dbs_utilization_cap, EnergyParams};
use crate::queueing::{evaluate_with_cap, Association, Evaluation};
use crate::radio::LinkRates;
use crate::scenario::DemandField;

/// Default location limit for [`exhaustive_best_placement`].
pub const DEFAULT_MAX_LOCATIONS: usize = 16;

/// Fraction of jobs, by arrival order, dropped before averaging.
pub const WARMUP_FRACTION: f64 = 0.1;

/// Pseudo-random source used by [`simulate_mg1ps`].
pub const GENERATOR: &str = "ChaCha8Rng::seed_from_u64(seed); stream 1 inter-arrivals, stream 2 sizes";

const BATCHES: usize = 20;
/// Two-sided 95% Student t quantile with `BATCHES - 1` degrees of freedom.
const T_975_19: f64 = 2.093;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best_objective: f64,
    pub best_location: usize,
    pub best_theta: Vec<bool>,
    pub best_evaluation: Evaluation,
    pub evaluations: u64,
}

fn better(a: &OracleResult, b: &OracleResult) -> Ordering {
    a.best_objective
        .total_cmp(&b.best_objective)
        .then(a.best_location.cmp(&b.best_location))
        .then_with(|| a.best_theta.cmp(&b.best_theta))
}

/// Exact minimum over every drone location and every association subset.
///
/// Feasibility is judged by the same evaluation routine the optimizer uses.
/// Ties go to the lower objective, then the lower location, then the
/// lexicographically smaller association vector.
pub fn exhaustive_best_placement(
    rates: &LinkRates,
    demand: &DemandField,
    energy: &EnergyParams,
    max_locations: usize,
) -> Result<OracleResult> {
    let n = rates.len();
    if n > max_locations || n >= 64 {
        return Err(Error::GridTooLarge {
            locations: n,
            limit: max_locations.min(63),
        });
    }
    let cap = dbs_utilization_cap(energy);
    let subsets = 1u64 << n;

    let per_location: Vec<Option<OracleResult>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut assoc = Association::all_mbs(n, j).expect("j < n");
            let mut best: Option<OracleResult> = None;
            for mask in 0..subsets {
                for i in 0..n {
                    assoc.set(i, mask >> i & 1 == 1);
                }
                let eval = evaluate_with_cap(rates, demand, &assoc, cap);
                if !eval.feasible {
                    continue;
                }
                let candidate = OracleResult {
                    best_objective: eval.objective,
                    best_location: j,
                    best_theta: assoc.theta().to_vec(),
                    best_evaluation: eval,
                    evaluations: 0,
                };
                if best.as_ref().is_none_or(|b| better(&candidate, b) == Ordering::Less) {
                    best = Some(candidate);
                }
            }
            best
        })
        .collect();

    let mut best = per_location
        .into_iter()
        .flatten()
        .min_by(better)
        .ok_or(Error::NoFeasiblePlacement)?;
    best.evaluations = n as u64 * subsets;
    Ok(best)
}

/// Job size law for the queue simulator, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SizeDistribution {
    Exponential { mean: f64 },
    Deterministic { value: f64 },
}

impl SizeDistribution {
    pub fn mean(&self) -> f64 {
        match *self {
            SizeDistribution::Exponential { mean } => mean,
            SizeDistribution::Deterministic { value } => value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueueSimResult {
    pub empirical_latency_ratio: f64,
    pub analytic_latency_ratio: f64,
    pub jobs_completed: u64,
    /// 95% confidence half-width of the empirical ratio, from batch means.
    pub half_width_95: f64,
    pub utilization: f64,
    pub generator: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Finish {
    virtual_time: f64,
    job: usize,
}

impl Eq for Finish {}

impl Ord for Finish {
    fn cmp(&self, other: &Self) -> Ordering {
        self.virtual_time
            .total_cmp(&other.virtual_time)
            .then(self.job.cmp(&other.job))
    }
}

impl PartialOrd for Finish {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Event-driven M/G/1 processor-sharing queue.
///
/// Every job in the system is served at `service_rate / n`. The server's
/// attained-service clock advances at that per-job rate, so a job finishes
/// when the clock passes its arrival reading plus its size. Arrivals keep
/// flowing until the first `jobs` jobs have all left, so late jobs see the
/// same contention as early ones.
pub fn simulate_mg1ps(
    arrival_rate: f64,
    sizes: SizeDistribution,
    service_rate: f64,
    jobs: usize,
    seed: u64,
) -> Result<QueueSimResult> {
    if jobs == 0 {
        return Err(Error::validation("jobs", "must be >= 1"));
    }
    if !(arrival_rate > 0.0 && service_rate > 0.0 && sizes.mean() > 0.0) {
        return Err(Error::validation(
            "queue",
            "arrival rate, service rate and mean size must be > 0",
        ));
    }
    let rho = arrival_rate * sizes.mean() / service_rate;
    if rho >= 1.0 {
        return Err(Error::UnstableQueue { rho });
    }

    let mut arrivals_rng = ChaCha8Rng::seed_from_u64(seed);
    arrivals_rng.set_stream(1);
    let mut sizes_rng = ChaCha8Rng::seed_from_u64(seed);
    sizes_rng.set_stream(2);
    let inter = Exp::new(arrival_rate).map_err(|e| Error::validation("arrival_rate", e.to_string()))?;
    let exp_size = match sizes {
        SizeDistribution::Exponential { mean } => {
            Some(Exp::new(1.0 / mean).map_err(|e| Error::validation("size", e.to_string()))?)
        }
        SizeDistribution::Deterministic { .. } => None,
    };
    let mut draw_size = || match (sizes, &exp_size) {
        (SizeDistribution::Exponential { .. }, Some(d)) => d.sample(&mut sizes_rng),
        (SizeDistribution::Deterministic { value }, _) => value,
        _ => unreachable!(),
    };

    let mut arrival_time = Vec::with_capacity(jobs);
    let mut size = Vec::with_capacity(jobs);
    let mut sojourn = vec![f64::NAN; jobs];
    let mut remaining = jobs;

    let mut now = 0.0f64;
    let mut attained = 0.0f64;
    let mut next_arrival = inter.sample(&mut arrivals_rng);
    let mut in_system: BinaryHeap<Reverse<Finish>> = BinaryHeap::new();
    let mut arrived = 0usize;

    while remaining > 0 {
        let n = in_system.len() as f64;
        let next_departure = in_system
            .peek()
            .map(|Reverse(f)| now + (f.virtual_time - attained) * n / service_rate);

        match next_departure {
            Some(t_dep) if t_dep <= next_arrival => {
                attained += (t_dep - now) * service_rate / n;
                now = t_dep;
                let Reverse(done) = in_system.pop().expect("peeked");
                // keep the clock exact at the departing job's target
                attained = attained.max(done.virtual_time);
                if done.job < jobs {
                    sojourn[done.job] = now - arrival_time[done.job];
                    remaining -= 1;
                }
            }
            _ => {
                if n > 0.0 {
                    attained += (next_arrival - now) * service_rate / n;
                }
                now = next_arrival;
                let x = draw_size();
                if arrived < jobs {
                    arrival_time.push(now);
                    size.push(x);
                }
                in_system.push(Reverse(Finish {
                    virtual_time: attained + x,
                    job: arrived,
                }));
                arrived += 1;
                next_arrival = now + inter.sample(&mut arrivals_rng);
            }
        }
    }

    let warmup = ((jobs as f64) * WARMUP_FRACTION).floor() as usize;
    let ratios: Vec<f64> = (warmup..jobs)
        .map(|k| {
            let s = size[k] / service_rate;
            (sojourn[k] - s) / s
        })
        .collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;

    let half_width = if ratios.len() >= BATCHES * 2 {
        let per = ratios.len() / BATCHES;
        let batch_means: Vec<f64> = ratios
            .chunks_exact(per)
            .take(BATCHES)
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect();
        let bm = batch_means.iter().sum::<f64>() / BATCHES as f64;
        let var = batch_means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
        T_975_19 * (var / BATCHES as f64).sqrt()
    } else {
        f64::INFINITY
    };

    Ok(QueueSimResult {
        empirical_latency_ratio: mean,
        analytic_latency_ratio: rho / (1.0 - rho),
        jobs_completed: ratios.len() as u64,
        half_width_95: half_width,
        utilization: rho,
        generator: GENERATOR,
    })
}

/// Grid search of `x/(1-x) + (rho-x)/(1-rho+x)` over `x in [0, min(cap, rho)]`.
/// Returns the first minimizing grid point and its value.
pub fn numeric_split_check(rho: f64, cap: f64, step: f64) -> Result<(f64, f64)> {
    if !(rho >= 0.0) {
        return Err(Error::validation("rho", "must be >= 0"));
    }
    if !(0.0..1.0).contains(&cap) {
        return Err(Error::validation("cap", "must lie in [0, 1)"));
    }
    if !(step > 0.0) {
        return Err(Error::validation("step", "must be > 0"));
    }
    let upper = cap.min(rho);
    let f = |x: f64| {
        let m = rho - x;
        if m >= 1.0 || x >= 1.0 {
            None
        } else {
            Some(x / (1.0 - x) + m / (1.0 - m))
        }
    };
    let steps = (upper / step).floor() as u64;
    let mut best: Option<(f64, f64)> = None;
    let candidates = (0..=steps).map(|k| k as f64 * step).chain(std::iter::once(upper));
    for x in candidates {
        let x = x.min(upper);
        if let Some(v) = f(x) {
            if best.is_none_or(|(_, bv)| v < bv) {
                best = Some((x, v));
            }
        }
    }
    best.ok_or(Error::InfeasibleSplit { rho, cap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::{PathLossModel, RadioParams};
    use crate::scenario::Grid;

    #[test]
    fn single_zero_demand_location() {
        let g = Grid::square(1, 10.0).unwrap();
        let rates = LinkRates::new(&g, 0, &RadioParams::default()).unwrap();
        let r = exhaustive_best_placement(&rates, &DemandField::zeros(1), &EnergyParams::default(), 16).unwrap();
        assert_eq!(r.best_objective, 0.0);
        assert_eq!(r.best_theta, vec![false]);
        assert_eq!(r.evaluations, 2);
    }

    #[test]
    fn refuses_large_grids() {
        let g = Grid::square(5, 10.0).unwrap();
        let rates = LinkRates::new(&g, 12, &RadioParams::default()).unwrap();
        let err = exhaustive_best_placement(&rates, &DemandField::zeros(25), &EnergyParams::default(), 16).unwrap_err();
        assert!(matches!(
            err,
            Error::GridTooLarge {
                locations: 25,
                limit: 16
            }
        ));
    }

    #[test]
    fn two_locations_pick_better_split() {
        let g = Grid::new(2, 1, 300.0, crate::scenario::Point::new(0.0, 0.0)).unwrap();
        let params = RadioParams {
            mbs_pathloss: PathLossModel {
                alpha: 103.4,
                gamma: 24.2,
            },
            dbs_pathloss: PathLossModel {
                alpha: 103.8,
                gamma: 20.9,
            },
            ..RadioParams::default()
        };
        let rates = LinkRates::new(&g, 0, &params).unwrap();
        assert!(rates.dbs(1, 1) > rates.mbs(1));
        assert!(rates.dbs(0, 1) < rates.mbs(0));
        let d = DemandField::new(vec![0.5, 0.5], vec![1e5, 1e5]).unwrap();
        let e = EnergyParams::default();
        let r = exhaustive_best_placement(&rates, &d, &e, 16).unwrap();
        // brute-force the four associations at each location by hand
        let mut best = f64::INFINITY;
        for j in 0..2 {
            for theta in [[false, false], [true, false], [false, true], [true, true]] {
                let a = Association::new(theta.to_vec(), j).unwrap();
                best = best.min(crate::queueing::evaluate(&rates, &d, &a, &e).objective);
            }
        }
        assert_eq!(r.best_objective, best);
        assert!(r.best_evaluation.feasible);
    }

    #[test]
    fn rejects_unstable_queue() {
        let sizes = SizeDistribution::Exponential { mean: 1.0 };
        assert!(matches!(
            simulate_mg1ps(1.0, sizes, 1.0, 10, 0),
            Err(Error::UnstableQueue { .. })
        ));
        assert!(simulate_mg1ps(0.5, sizes, 1.0, 0, 0).is_err());
    }

    #[test]
    fn light_load_queue() {
        let r = simulate_mg1ps(0.01, SizeDistribution::Exponential { mean: 1.0 }, 1.0, 20_000, 3).unwrap();
        assert!((r.analytic_latency_ratio - 0.01 / 0.99).abs() < 1e-15);
        assert!(
            (r.empirical_latency_ratio - r.analytic_latency_ratio).abs() < 0.005,
            "{r:?}"
        );
    }

    #[test]
    fn queue_is_deterministic() {
        let s = SizeDistribution::Deterministic { value: 2.0 };
        let a = simulate_mg1ps(0.2, s, 1.0, 5_000, 11).unwrap();
        let b = simulate_mg1ps(0.2, s, 1.0, 5_000, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.jobs_completed, 4_500);
    }

    #[test]
    fn split_check_examples() {
        let (x, _) = numeric_split_check(1.0, 0.9, 1e-4).unwrap();
        assert!((x - 0.5).abs() < 1e-4);
        let (x, _) = numeric_split_check(1.4, 0.6, 1e-4).unwrap();
        assert_eq!(x, 0.6);
        assert!(matches!(
            numeric_split_check(1.8, 0.5, 1e-3),
            Err(Error::InfeasibleSplit { .. })
        ));
        assert_eq!(numeric_split_check(0.0, 0.5, 1e-3).unwrap(), (0.0, 0.0));
    }
}
