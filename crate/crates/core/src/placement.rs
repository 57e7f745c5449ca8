//! LEAP: pick the drone location that removes the most macro-cell load, then
//! grow a 4-connected coverage region from it until the drone carries its
//! share of the split load. Also the S-MBS and SSC baselines.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::queueing::{evaluate_with_cap, Association, Evaluation};
use crate::radio::LinkRates;
use crate::scenario::DemandField;

/// Margin that keeps the drone's utilization strictly below 1.
pub const UTILIZATION_MARGIN: f64 = 1e-9;

/// Largest admissible drone utilization.
pub const MAX_CAP: f64 = 1.0 - UTILIZATION_MARGIN;

/// Drone power model `p = beta * rho_d + static_power` and its per-slot budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyParams {
    /// Watts per unit of utilization.
    pub beta: f64,
    /// Hover plus idle radio power, watts.
    pub static_power: f64,
    /// Energy available for one slot of service, joules.
    pub energy_threshold: f64,
    /// Slot length, seconds.
    pub slot_length: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            beta: 500.0,
            static_power: 110.0 + 37.0,
            energy_threshold: 0.2 * 3.6e6,
            slot_length: 600.0,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        use crate::error::Error;
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::validation("energy.beta", "must be > 0"));
        }
        if !(self.static_power >= 0.0 && self.static_power.is_finite()) {
            return Err(Error::validation("energy.static_power", "must be >= 0"));
        }
        if !(self.slot_length > 0.0 && self.slot_length.is_finite()) {
            return Err(Error::validation("energy.slot_length", "must be > 0"));
        }
        if !(self.energy_threshold >= 0.0 && self.energy_threshold.is_finite()) {
            return Err(Error::validation("energy.energy_threshold", "must be >= 0"));
        }
        Ok(())
    }
}

/// Largest drone utilization the battery allows over one slot.
pub fn dbs_utilization_cap(energy: &EnergyParams) -> f64 {
    let raw = (energy.energy_threshold / energy.slot_length - energy.static_power) / energy.beta;
    raw.clamp(0.0, MAX_CAP)
}

/// Optimal division of a total load between the two stations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitTarget {
    pub rho_m: f64,
    pub rho_d: f64,
    /// False when the macro share still reaches 1.
    pub feasible: bool,
}

/// Minimize `tau(rho_m) + tau(rho_d)` subject to `rho_m + rho_d = rho`,
/// `rho_d <= cap`. The sum is convex and symmetric, so the drone takes half
/// unless the cap binds.
pub fn kkt_split(rho: f64, cap: f64) -> SplitTarget {
    let rho_d = (rho / 2.0).min(cap);
    let rho_m = rho - rho_d;
    SplitTarget {
        rho_m,
        rho_d,
        feasible: rho_m < 1.0,
    }
}

/// Change in total utilization when `i` moves from the macro cell to a drone over `j`.
pub fn offload_delta(rates: &LinkRates, demand: &DemandField, i: usize, j: usize) -> f64 {
    demand.load(i) * (1.0 / rates.dbs(i, j) - 1.0 / rates.mbs(i))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGain {
    /// Sum of offload deltas over `members`; never positive.
    pub gain: f64,
    /// Locations where a drone over `j` beats the macro rate, ascending.
    pub members: Vec<usize>,
}

/// Load reduction from offloading every location the drone over `j` serves
/// faster than the macro cell.
pub fn candidate_gain(j: usize, rates: &LinkRates, demand: &DemandField) -> Result<CandidateGain> {
    rates.grid().check_index(j)?;
    let mut gain = 0.0;
    let mut members = Vec::new();
    for i in 0..rates.len() {
        if rates.dbs(i, j) > rates.mbs(i) {
            gain += offload_delta(rates, demand, i, j);
            members.push(i);
        }
    }
    Ok(CandidateGain { gain, members })
}

/// [`candidate_gain`] for every location at once.
///
/// Each user only contributes to drone positions close enough to beat its
/// macro rate, so contributions are scattered over a disk of offsets sorted by
/// decreasing drone rate. Users are visited in ascending order, which makes
/// every entry bit-identical to the per-candidate sum.
pub fn all_gains(rates: &LinkRates, demand: &DemandField) -> Vec<f64> {
    let grid = rates.grid();
    let (w, h) = (grid.width_cells(), grid.height_cells());
    let mut offsets: Vec<(usize, usize)> = (0..h).flat_map(|dr| (0..w).map(move |dc| (dc, dr))).collect();
    offsets.sort_by(|a, b| {
        rates
            .dbs_offset(b.0, b.1)
            .total_cmp(&rates.dbs_offset(a.0, a.1))
            .then(a.cmp(b))
    });

    let mut gains = vec![0.0; rates.len()];
    for i in 0..rates.len() {
        let load = demand.load(i);
        let rm = rates.mbs(i);
        let (ci, ri) = (i % w, i / w);
        for &(dc, dr) in &offsets {
            let rd = rates.dbs_offset(dc, dr);
            if rd <= rm {
                break;
            }
            let term = load * (1.0 / rd - 1.0 / rm);
            let cols = [
                ci.checked_sub(dc),
                if dc > 0 { Some(ci + dc).filter(|&c| c < w) } else { None },
            ];
            let rows = [
                ri.checked_sub(dr),
                if dr > 0 { Some(ri + dr).filter(|&r| r < h) } else { None },
            ];
            for col in cols.into_iter().flatten() {
                for row in rows.into_iter().flatten() {
                    gains[row * w + col] += term;
                }
            }
        }
    }
    gains
}

/// Drone location with the most negative gain, lowest index on ties.
pub fn optimal_location(rates: &LinkRates, demand: &DemandField) -> usize {
    argmin(&all_gains(rates, demand))
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = j;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct FrontierEntry {
    delta: f64,
    index: usize,
}

impl Eq for FrontierEntry {}

impl Ord for FrontierEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.delta.total_cmp(&other.delta).then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for FrontierEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Output of the greedy coverage growth.
#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    pub assoc: Association,
    /// Admitted locations with their offload deltas, seed first.
    pub trace: Vec<(usize, f64)>,
    /// Total utilization `rho_m + rho_d` as tracked during growth.
    pub rho: f64,
    pub rho_d: f64,
    /// The seed location alone already exceeds the cap.
    pub seed_exceeds_cap: bool,
}

/// Grow the drone's coverage from `seed` over 4-adjacent locations.
///
/// Each step takes the frontier location with the most negative offload delta
/// (lowest index on ties) and admits it while the drone's utilization stays
/// strictly below `min(rho / 2, cap)`, with `rho` already including the
/// candidate. Growth also stops once the best delta is nonnegative.
pub fn expand_coverage(seed: usize, rates: &LinkRates, demand: &DemandField, cap: f64) -> Result<Expansion> {
    let grid = rates.grid();
    grid.check_index(seed)?;

    let mut assoc = Association::all_mbs(rates.len(), seed)?;
    assoc.set(seed, true);
    let mut rho_d = demand.load(seed) / rates.dbs(seed, seed);
    let seed_delta = offload_delta(rates, demand, seed, seed);
    let mut rho = (0..rates.len()).map(|i| demand.load(i) / rates.mbs(i)).sum::<f64>() + seed_delta;
    let mut trace = vec![(seed, seed_delta)];

    if rho_d > cap {
        return Ok(Expansion {
            assoc,
            trace,
            rho,
            rho_d,
            seed_exceeds_cap: true,
        });
    }

    let mut queued = vec![false; rates.len()];
    queued[seed] = true;
    let mut frontier = BinaryHeap::new();
    let mut enqueue_neighbors = |i: usize, frontier: &mut BinaryHeap<Reverse<FrontierEntry>>| -> Result<()> {
        for n in grid.neighbors4(i)? {
            if !queued[n] {
                queued[n] = true;
                frontier.push(Reverse(FrontierEntry {
                    delta: offload_delta(rates, demand, n, seed),
                    index: n,
                }));
            }
        }
        Ok(())
    };
    enqueue_neighbors(seed, &mut frontier)?;

    while let Some(Reverse(best)) = frontier.pop() {
        if !(best.delta < 0.0) {
            break;
        }
        let rho_next = rho + best.delta;
        let added = demand.load(best.index) / rates.dbs(best.index, seed);
        if !(rho_d + added < (rho_next / 2.0).min(cap)) {
            break;
        }
        assoc.set(best.index, true);
        rho_d += added;
        rho = rho_next;
        trace.push((best.index, best.delta));
        enqueue_neighbors(best.index, &mut frontier)?;
    }

    Ok(Expansion {
        assoc,
        trace,
        rho,
        rho_d,
        seed_exceeds_cap: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementResult {
    pub assoc: Association,
    pub evaluation: Evaluation,
    /// Split of the final total load that the growth was aiming for.
    pub rho_target_split: SplitTarget,
    /// Admitted locations and their offload deltas, seed first.
    pub expansion_trace: Vec<(usize, f64)>,
    pub seed_exceeds_cap: bool,
}

impl PlacementResult {
    pub fn dbs_location(&self) -> usize {
        self.assoc.dbs_location()
    }
}

fn place_at(j: usize, rates: &LinkRates, demand: &DemandField, energy: &EnergyParams) -> Result<PlacementResult> {
    let cap = dbs_utilization_cap(energy);
    let exp = expand_coverage(j, rates, demand, cap)?;
    let evaluation = evaluate_with_cap(rates, demand, &exp.assoc, cap);
    Ok(PlacementResult {
        rho_target_split: kkt_split(evaluation.rho_m + evaluation.rho_d, cap),
        assoc: exp.assoc,
        evaluation,
        expansion_trace: exp.trace,
        seed_exceeds_cap: exp.seed_exceeds_cap,
    })
}

/// Full LEAP pass for one slot: location, coverage, evaluation.
pub fn run_leap(rates: &LinkRates, demand: &DemandField, energy: &EnergyParams) -> Result<PlacementResult> {
    let j = optimal_location(rates, demand);
    place_at(j, rates, demand, energy)
}

/// Macro cell alone. `full_band` should carry the whole carrier bandwidth.
pub fn baseline_smbs(full_band: &LinkRates, demand: &DemandField) -> Result<Evaluation> {
    let assoc = Association::all_mbs(full_band.len(), full_band.mbs_location())?;
    Ok(evaluate_with_cap(full_band, demand, &assoc, MAX_CAP))
}

/// Small cell pinned at `fixed_location`, same coverage growth and energy cap as LEAP.
pub fn baseline_ssc(
    rates: &LinkRates,
    demand: &DemandField,
    energy: &EnergyParams,
    fixed_location: usize,
) -> Result<PlacementResult> {
    rates.grid().check_index(fixed_location)?;
    place_at(fixed_location, rates, demand, energy)
}
