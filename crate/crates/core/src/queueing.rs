//! M/G/1 processor-sharing model of the two stations: utilization, sojourn
//! time, latency ratio and the placement objective.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::placement::{dbs_utilization_cap, EnergyParams};
use crate::radio::LinkRates;
use crate::scenario::DemandField;

/// Which locations the drone serves, and where it hovers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Association {
    theta: Vec<bool>,
    dbs_location: usize,
}

impl Association {
    pub fn new(theta: Vec<bool>, dbs_location: usize) -> Result<Self> {
        if dbs_location >= theta.len() {
            return Err(Error::Index {
                index: dbs_location,
                len: theta.len(),
            });
        }
        Ok(Association { theta, dbs_location })
    }

    /// Every location on the macro cell.
    pub fn all_mbs(len: usize, dbs_location: usize) -> Result<Self> {
        Association::new(vec![false; len], dbs_location)
    }

    pub fn theta(&self) -> &[bool] {
        &self.theta
    }

    pub fn dbs_location(&self) -> usize {
        self.dbs_location
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn is_covered(&self, i: usize) -> bool {
        self.theta[i]
    }

    pub fn set(&mut self, i: usize, on_dbs: bool) {
        self.theta[i] = on_dbs;
    }

    /// Locations served by the drone, ascending.
    pub fn covered(&self) -> impl Iterator<Item = usize> + '_ {
        self.theta.iter().enumerate().filter(|(_, &t)| t).map(|(i, _)| i)
    }

    pub fn coverage_size(&self) -> usize {
        self.theta.iter().filter(|&&t| t).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Infeasibility {
    /// `rho_m >= 1`
    MbsOverload,
    /// `rho_d >= 1`
    DbsOverload,
    /// `rho_d` above the battery-derived cap.
    EnergyCap,
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Infeasibility::MbsOverload => "macro cell overloaded",
            Infeasibility::DbsOverload => "drone overloaded",
            Infeasibility::EnergyCap => "drone energy budget exceeded",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub rho_m: f64,
    pub rho_d: f64,
    pub tau_m: f64,
    pub tau_d: f64,
    /// `tau_m + tau_d`, or `+inf` when infeasible.
    pub objective: f64,
    pub feasible: bool,
    pub infeasibility: Option<Infeasibility>,
}

fn weighted_load(demand: &DemandField, theta: &[bool], on_dbs: bool, rate: impl Fn(usize) -> f64) -> f64 {
    let mut total = 0.0;
    for (i, &t) in theta.iter().enumerate() {
        if t == on_dbs {
            total += demand.load(i) / rate(i);
        }
    }
    total
}

/// `rho_m`: macro-cell load over the locations with `theta_i = 0`.
/// `mbs_rates[i]` is `r^m_i`.
pub fn utilization_mbs(demand: &DemandField, assoc: &Association, mbs_rates: &[f64]) -> f64 {
    weighted_load(demand, &assoc.theta, false, |i| mbs_rates[i])
}

/// `rho_d`: drone load over the locations with `theta_i = 1`.
/// `dbs_rates[i]` is `r^d_ij` for the drone's location `j`.
pub fn utilization_dbs(demand: &DemandField, assoc: &Association, dbs_rates: &[f64]) -> f64 {
    weighted_load(demand, &assoc.theta, true, |i| dbs_rates[i])
}

/// `rho / (1 - rho)`.
pub fn latency_ratio(rho: f64) -> Result<f64> {
    if rho.is_nan() || rho < 0.0 {
        return Err(Error::validation("rho", format!("utilization {rho} is negative")));
    }
    if rho >= 1.0 {
        return Err(Error::InfeasibleLoad { rho });
    }
    Ok(rho / (1.0 - rho))
}

/// Mean sojourn of a job needing `service_time` seconds alone on the server.
pub fn mean_sojourn(service_time: f64, rho: f64) -> Result<f64> {
    if !(service_time > 0.0) {
        return Err(Error::validation("service_time", format!("{service_time} is not > 0")));
    }
    if rho.is_nan() || rho < 0.0 {
        return Err(Error::validation("rho", format!("utilization {rho} is negative")));
    }
    if rho >= 1.0 {
        return Err(Error::InfeasibleLoad { rho });
    }
    Ok(service_time / (1.0 - rho))
}

pub fn objective(rho_m: f64, rho_d: f64) -> Result<f64> {
    Ok(latency_ratio(rho_m)? + latency_ratio(rho_d)?)
}

/// Score an association against the constraints on both stations.
pub fn evaluate(rates: &LinkRates, demand: &DemandField, assoc: &Association, energy: &EnergyParams) -> Evaluation {
    evaluate_with_cap(rates, demand, assoc, dbs_utilization_cap(energy))
}

pub(crate) fn evaluate_with_cap(rates: &LinkRates, demand: &DemandField, assoc: &Association, cap: f64) -> Evaluation {
    let j = assoc.dbs_location;
    let rho_m = weighted_load(demand, &assoc.theta, false, |i| rates.mbs(i));
    let rho_d = weighted_load(demand, &assoc.theta, true, |i| rates.dbs(i, j));
    from_utilizations(rho_m, rho_d, cap)
}

/// Feasibility verdict and objective for a pair of utilizations.
pub fn from_utilizations(rho_m: f64, rho_d: f64, cap: f64) -> Evaluation {
    let infeasibility = if rho_m >= 1.0 {
        Some(Infeasibility::MbsOverload)
    } else if rho_d >= 1.0 {
        Some(Infeasibility::DbsOverload)
    } else if rho_d > cap {
        Some(Infeasibility::EnergyCap)
    } else {
        None
    };
    let tau = |rho: f64| if rho < 1.0 { rho / (1.0 - rho) } else { f64::INFINITY };
    let (tau_m, tau_d) = (tau(rho_m), tau(rho_d));
    let feasible = infeasibility.is_none();
    Evaluation {
        rho_m,
        rho_d,
        tau_m,
        tau_d,
        objective: if feasible { tau_m + tau_d } else { f64::INFINITY },
        feasible,
        infeasibility,
    }
}
