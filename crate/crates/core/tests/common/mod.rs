//! Random instances and invariant checks shared by the property tests and the
//! acceptance runner. Every check returns `Err(description)` on violation.

#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dbs_leap::oracle::{exhaustive_best_placement, numeric_split_check};
use dbs_leap::placement::{
    all_gains, candidate_gain, dbs_utilization_cap, expand_coverage, kkt_split, offload_delta, optimal_location,
};
use dbs_leap::queueing::{evaluate, latency_ratio, objective, utilization_dbs, utilization_mbs};
use dbs_leap::{Association, DemandField, EnergyParams, Grid, LinkRates, PathLossModel, RadioParams};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

/// Path-loss slopes in dB per decade, under which the drone beats the macro
/// cell over a useful neighborhood.
pub fn steep_radio() -> RadioParams {
    RadioParams {
        mbs_pathloss: PathLossModel {
            alpha: 103.4,
            gamma: 24.2,
        },
        dbs_pathloss: PathLossModel {
            alpha: 103.8,
            gamma: 20.9,
        },
        ..RadioParams::default()
    }
}

/// Energy budget whose utilization cap is (up to rounding) `cap`.
pub fn energy_for_cap(cap: f64) -> EnergyParams {
    let e = EnergyParams::default();
    EnergyParams {
        energy_threshold: (cap * e.beta + e.static_power) * e.slot_length,
        ..e
    }
}

pub struct Instance {
    pub rates: LinkRates,
    pub demand: DemandField,
    pub energy: EnergyParams,
    pub cap: f64,
}

impl Instance {
    /// Total utilization with every location on the macro cell.
    pub fn rho_all(&self) -> f64 {
        rho_all(&self.rates, &self.demand)
    }
}

pub fn rho_all(rates: &LinkRates, demand: &DemandField) -> f64 {
    (0..rates.len()).map(|i| demand.load(i) / rates.mbs(i)).sum()
}

/// A `w x h` instance: random cell size, macro position and sparse demand,
/// scaled so the all-macro utilization lies in `(0.1, 0.95)`, and a random cap.
pub fn random_instance(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Instance {
    let cell = rng.random_range(15.0..120.0);
    let grid = Grid::new(w, h, cell, dbs_leap::scenario::Point::new(0.0, 0.0)).unwrap();
    let mbs = rng.random_range(0..grid.len());
    let rates = LinkRates::new(&grid, mbs, &steep_radio()).unwrap();
    let n = grid.len();
    let rate: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.75) {
                rng.random_range(0.0..1.0)
            } else {
                0.0
            }
        })
        .collect();
    let size: Vec<f64> = (0..n).map(|_| rng.random_range(5e4..2e5)).collect();
    let mut demand = DemandField::new(rate, size).unwrap();
    let raw = rho_all(&rates, &demand);
    if raw > 0.0 {
        demand = demand.scaled(rng.random_range(0.1..0.95) / raw).unwrap();
    }
    let energy = energy_for_cap(rng.random_range(0.02..0.98));
    let cap = dbs_utilization_cap(&energy);
    Instance {
        rates,
        demand,
        energy,
        cap,
    }
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// -- scenario ----------------------------------------------------------------

pub fn check_index_round_trip(grid: &Grid) -> Check {
    for row in 0..grid.height_cells() {
        for col in 0..grid.width_cells() {
            let i = grid.location_index(col, row).map_err(|e| e.to_string())?;
            let back = grid.index_to_cell(i).map_err(|e| e.to_string())?;
            ensure!(back == (col, row), "({col},{row}) -> {i} -> {back:?}");
        }
    }
    Ok(())
}

pub fn check_neighbors(grid: &Grid) -> Check {
    for i in 0..grid.len() {
        let ns = grid.neighbors4(i).map_err(|e| e.to_string())?;
        if grid.width_cells() >= 2 && grid.height_cells() >= 2 {
            ensure!((2..=4).contains(&ns.len()), "location {i} has {} neighbors", ns.len());
        }
        for &n in &ns {
            let back = grid.neighbors4(n).map_err(|e| e.to_string())?;
            ensure!(back.contains(&i), "{n} in neighbors of {i} but not the reverse");
        }
    }
    Ok(())
}

// -- queueing ----------------------------------------------------------------

/// Strictly increasing and midpoint-convex on a sample of `[0, 1)`.
pub fn check_latency_ratio_shape(samples: &[f64]) -> Check {
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for w in xs.windows(2) {
        let (a, b) = (latency_ratio(w[0]).unwrap(), latency_ratio(w[1]).unwrap());
        ensure!(a < b, "tau({}) = {a} not below tau({}) = {b}", w[0], w[1]);
        let mid = latency_ratio((w[0] + w[1]) / 2.0).unwrap();
        ensure!(
            mid <= (a + b) / 2.0 * (1.0 + 1e-12),
            "midpoint convexity fails on [{}, {}]",
            w[0],
            w[1]
        );
    }
    Ok(())
}

/// Moving one location onto the drone changes total utilization by exactly
/// its offload delta.
pub fn check_delta_identity(inst: &Instance, j: usize, i: usize) -> Check {
    let r = &inst.rates;
    let d = &inst.demand;
    let dbs = r.dbs_rates_from(j);
    let mut before = Association::all_mbs(r.len(), j).unwrap();
    for k in 0..r.len() {
        if k != i && (k * 7 + j).is_multiple_of(3) {
            before.set(k, true);
        }
    }
    let mut after = before.clone();
    after.set(i, true);
    before.set(i, false);
    let total = |a: &Association| utilization_mbs(d, a, r.mbs_rates()) + utilization_dbs(d, a, &dbs);
    let change = total(&after) - total(&before);
    let delta = offload_delta(r, d, i, j);
    let scale = total(&before).abs().max(d.load(i) / r.mbs(i)).max(1e-300);
    ensure!(
        (change - delta).abs() <= 1e-12 * scale,
        "moving {i} to drone at {j}: change {change:e} vs delta {delta:e}"
    );
    Ok(())
}

/// A feasible verdict implies both stations are stable and the cap holds.
pub fn check_evaluate_sound(inst: &Instance, assoc: &Association) -> Check {
    let ev = evaluate(&inst.rates, &inst.demand, assoc, &inst.energy);
    if ev.feasible {
        ensure!(
            ev.rho_m < 1.0 && ev.rho_d < 1.0,
            "feasible with rho_m {} rho_d {}",
            ev.rho_m,
            ev.rho_d
        );
        ensure!(
            ev.rho_d <= inst.cap,
            "feasible with rho_d {} above cap {}",
            ev.rho_d,
            inst.cap
        );
        ensure!(ev.objective.is_finite(), "feasible with objective {}", ev.objective);
    } else {
        ensure!(
            ev.objective == f64::INFINITY,
            "infeasible with finite objective {}",
            ev.objective
        );
    }
    Ok(())
}

// -- placement ---------------------------------------------------------------

pub fn check_kkt(rho: f64, cap: f64) -> Check {
    let s = kkt_split(rho, cap);
    // `rho - cap` rounds, so the parts reassemble to within one ulp.
    let sum = s.rho_m + s.rho_d;
    ensure!((sum - rho).abs() <= f64::EPSILON * rho, "split of {rho} sums to {sum}");
    ensure!(s.rho_d <= cap, "rho_d {} above cap {cap}", s.rho_d);
    ensure!(
        s.rho_d == (rho / 2.0).min(cap),
        "rho_d {} for rho {rho} cap {cap}",
        s.rho_d
    );
    Ok(())
}

/// The closed-form split is no worse than the grid minimum, and the grid's
/// minimizer sits within one step of it.
pub fn check_split_against_grid(rho: f64, cap: f64, step: f64) -> Check {
    let s = kkt_split(rho, cap);
    match (numeric_split_check(rho, cap, step), objective(s.rho_m, s.rho_d)) {
        (Ok((x, f)), Ok(closed)) => {
            ensure!(closed <= f + 1e-6, "rho {rho} cap {cap}: closed {closed} grid {f}");
            ensure!(
                (x - s.rho_d).abs() <= step * (1.0 + 1e-9),
                "minimizer {x} vs rho_d {}",
                s.rho_d
            );
            Ok(())
        }
        (Err(_), Err(_)) => Ok(()),
        (a, b) => Err(format!("rho {rho} cap {cap}: grid {a:?} closed {b:?}")),
    }
}

/// Members beat the macro rate and carry negative terms where they carry load;
/// the gain is their sum.
pub fn check_candidate_gain(inst: &Instance, j: usize) -> Check {
    let r = &inst.rates;
    let g = candidate_gain(j, r, &inst.demand).map_err(|e| e.to_string())?;
    let mut sum = 0.0;
    for &i in &g.members {
        let t = offload_delta(r, &inst.demand, i, j);
        ensure!(r.dbs(i, j) > r.mbs(i), "member {i} does not beat the macro rate");
        if inst.demand.load(i) > 0.0 {
            ensure!(t < 0.0, "member {i} of {j} has term {t}");
        } else {
            ensure!(t == 0.0, "zero-load member {i} has term {t}");
        }
        sum += t;
    }
    for i in 0..r.len() {
        if !g.members.contains(&i) {
            ensure!(r.dbs(i, j) <= r.mbs(i), "non-member {i} beats the macro rate");
        }
    }
    ensure!(
        (g.gain - sum).abs() <= 1e-12 * sum.abs(),
        "gain {} vs member sum {sum}",
        g.gain
    );
    Ok(())
}

/// `optimal_location` attains the minimum over every candidate's gain, with
/// the lowest index among ties; the scatter table matches per-candidate sums.
pub fn check_argmin_exhaustive(inst: &Instance) -> Check {
    let r = &inst.rates;
    let star = optimal_location(r, &inst.demand);
    let gains: Vec<f64> = (0..r.len())
        .map(|j| candidate_gain(j, r, &inst.demand).unwrap().gain)
        .collect();
    let scatter = all_gains(r, &inst.demand);
    for j in 0..r.len() {
        ensure!(
            gains[j].to_bits() == scatter[j].to_bits(),
            "gain table differs at {j}: {} vs {}",
            scatter[j],
            gains[j]
        );
        ensure!(
            gains[star] <= gains[j],
            "gain({star}) = {} above gain({j}) = {}",
            gains[star],
            gains[j]
        );
        if gains[j] == gains[star] {
            ensure!(star <= j, "tie at {j} resolved to higher index {star}");
        }
    }
    Ok(())
}

/// Scaling every arrival rate leaves the chosen location unchanged.
pub fn check_argmin_scaling(inst: &Instance, factor: f64) -> Check {
    let a = optimal_location(&inst.rates, &inst.demand);
    let scaled = inst.demand.scaled(factor).map_err(|e| e.to_string())?;
    let b = optimal_location(&inst.rates, &scaled);
    ensure!(a == b, "argmin {a} becomes {b} after scaling by {factor}");
    Ok(())
}

fn connected(grid: &Grid, set: &BTreeSet<usize>, start: usize) -> bool {
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(i) = stack.pop() {
        for n in grid.neighbors4(i).unwrap() {
            if set.contains(&n) && seen.insert(n) {
                stack.push(n);
            }
        }
    }
    seen.len() == set.len()
}

/// Coverage contains the seed and is 4-connected; every admission is the
/// frontier argmin at that moment; the objective never rises after the seed;
/// the final drone utilization respects the loop condition.
pub fn check_expansion(inst: &Instance, seed: usize) -> Check {
    let r = &inst.rates;
    let d = &inst.demand;
    let grid = r.grid();
    let exp = expand_coverage(seed, r, d, inst.cap).map_err(|e| e.to_string())?;
    let covered: BTreeSet<usize> = exp.assoc.covered().collect();
    ensure!(covered.contains(&seed), "seed {seed} not covered");
    ensure!(
        connected(grid, &covered, seed),
        "coverage {covered:?} is not 4-connected"
    );
    ensure!(
        exp.trace.first().map(|t| t.0) == Some(seed),
        "trace does not start at the seed"
    );
    ensure!(
        exp.trace.len() == covered.len(),
        "trace length {} vs coverage {}",
        exp.trace.len(),
        covered.len()
    );

    let mut set = BTreeSet::from([seed]);
    let mut assoc = Association::all_mbs(r.len(), seed).unwrap();
    assoc.set(seed, true);
    let mut prev = evaluate(r, d, &assoc, &inst.energy).objective;
    for &(i, delta) in &exp.trace[1..] {
        let frontier: BTreeSet<usize> = set
            .iter()
            .flat_map(|&k| grid.neighbors4(k).unwrap())
            .filter(|n| !set.contains(n))
            .collect();
        let best = frontier
            .iter()
            .map(|&n| (offload_delta(r, d, n, seed), n))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .ok_or("admission with an empty frontier")?;
        ensure!(best.1 == i, "admitted {i} but the frontier argmin is {}", best.1);
        ensure!(best.0 == delta, "recorded delta {delta} vs {}", best.0);
        ensure!(delta < 0.0, "admitted {i} with delta {delta}");
        set.insert(i);
        assoc.set(i, true);
        let now = evaluate(r, d, &assoc, &inst.energy).objective;
        ensure!(now <= prev, "objective rose from {prev} to {now} admitting {i}");
        prev = now;
    }

    if !exp.seed_exceeds_cap {
        let last = exp.trace.last().unwrap().0;
        let last_util = d.load(last) / r.dbs(last, seed);
        let bound = (exp.rho / 2.0).min(inst.cap) + last_util;
        ensure!(exp.rho_d <= bound, "final rho_d {} above {bound}", exp.rho_d);
    }
    Ok(())
}

// -- oracle ------------------------------------------------------------------

/// Horizontal mirror of `inst`: location `(c, r)` moves to `(w - 1 - c, r)`.
pub fn mirrored(inst: &Instance) -> Instance {
    let g = inst.rates.grid();
    let w = g.width_cells();
    let map = |i: usize| (i / w) * w + (w - 1 - i % w);
    let n = g.len();
    let mut rate = vec![0.0; n];
    let mut size = vec![0.0; n];
    for i in 0..n {
        rate[map(i)] = inst.demand.arrival_rate()[i];
        size[map(i)] = inst.demand.mean_size()[i];
    }
    let rates = LinkRates::new(g, map(inst.rates.mbs_location()), inst.rates.params()).unwrap();
    Instance {
        rates,
        demand: DemandField::new(rate, size).unwrap(),
        energy: inst.energy,
        cap: inst.cap,
    }
}

pub fn check_oracle_relabeling(inst: &Instance) -> Check {
    let a = exhaustive_best_placement(&inst.rates, &inst.demand, &inst.energy, 16);
    let b = exhaustive_best_placement(&mirrored(inst).rates, &mirrored(inst).demand, &inst.energy, 16);
    match (a, b) {
        (Ok(a), Ok(b)) => {
            let tol = 1e-12 * a.best_objective.abs().max(1e-300);
            ensure!(
                (a.best_objective - b.best_objective).abs() <= tol,
                "optimum {} vs mirrored {}",
                a.best_objective,
                b.best_objective
            );
            Ok(())
        }
        (Err(_), Err(_)) => Ok(()),
        (a, b) => Err(format!(
            "feasibility differs under mirroring: {:?} vs {:?}",
            a.is_ok(),
            b.is_ok()
        )),
    }
}

/// The oracle's winner re-evaluates to the same verdict and value, and no
/// enumerated subset that `evaluate` calls feasible beats it.
pub fn check_oracle_consistent(inst: &Instance) -> Check {
    let r = &inst.rates;
    let n = r.len();
    let best = exhaustive_best_placement(r, &inst.demand, &inst.energy, 16);
    let mut brute = f64::INFINITY;
    for j in 0..n {
        for mask in 0u32..(1 << n) {
            let theta = (0..n).map(|i| mask >> (n - 1 - i) & 1 == 1).collect();
            let ev = evaluate(r, &inst.demand, &Association::new(theta, j).unwrap(), &inst.energy);
            if ev.feasible {
                brute = brute.min(ev.objective);
            }
        }
    }
    match best {
        Ok(b) => {
            let again = evaluate(
                r,
                &inst.demand,
                &Association::new(b.best_theta.clone(), b.best_location).unwrap(),
                &inst.energy,
            );
            ensure!(
                again == b.best_evaluation,
                "oracle evaluation {:?} vs {again:?}",
                b.best_evaluation
            );
            ensure!(
                b.best_objective == brute,
                "oracle {} vs brute force {brute}",
                b.best_objective
            );
            Ok(())
        }
        Err(_) => {
            ensure!(
                brute == f64::INFINITY,
                "oracle found nothing but brute force found {brute}"
            );
            Ok(())
        }
    }
}
