//! Link budget: unit conversions, path loss, channel gain and Shannon rates
//! for the macro (MBS) and drone (DBS) downlinks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Grid;

/// Log-distance path loss `alpha + gamma * log10(d)` in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossModel {
    /// Loss at the 1 m reference distance, dB.
    pub alpha: f64,
    /// Slope in dB per decade of distance.
    pub gamma: f64,
}

impl PathLossModel {
    pub const MBS_DEFAULT: PathLossModel = PathLossModel {
        alpha: 103.4,
        gamma: 2.42,
    };
    pub const DBS_DEFAULT: PathLossModel = PathLossModel {
        alpha: 103.8,
        gamma: 2.09,
    };

    fn validate(&self, field: &str) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::validation(format!("{field}.alpha"), "must be > 0"));
        }
        if !self.gamma.is_finite() {
            return Err(Error::validation(format!("{field}.gamma"), "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadioParams {
    pub mbs_tx_power_dbm: f64,
    pub dbs_tx_power_dbm: f64,
    pub mbs_bandwidth_hz: f64,
    pub dbs_bandwidth_hz: f64,
    pub mbs_pathloss: PathLossModel,
    pub dbs_pathloss: PathLossModel,
    /// Thermal noise density, dBm/Hz. Integrated over each receiver's bandwidth.
    pub noise_psd_dbm_hz: f64,
    /// Interference from other macro cells, watts, same at every location.
    pub mbs_interference_w: f64,
    pub dbs_interference_w: f64,
    pub dbs_height_m: f64,
}

impl Default for RadioParams {
    /// 15/5 MHz split of a 20 MHz carrier with the reference link budget.
    fn default() -> Self {
        RadioParams {
            mbs_tx_power_dbm: 46.0,
            dbs_tx_power_dbm: 24.0,
            mbs_bandwidth_hz: 15e6,
            dbs_bandwidth_hz: 5e6,
            mbs_pathloss: PathLossModel::MBS_DEFAULT,
            dbs_pathloss: PathLossModel::DBS_DEFAULT,
            noise_psd_dbm_hz: -174.0,
            mbs_interference_w: 0.0,
            dbs_interference_w: 0.0,
            dbs_height_m: 10.0,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("radio.mbs_bandwidth_hz", self.mbs_bandwidth_hz),
            ("radio.dbs_bandwidth_hz", self.dbs_bandwidth_hz),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(name, format!("must be > 0, got {v}")));
            }
        }
        for (name, v) in [
            ("radio.dbs_height_m", self.dbs_height_m),
            ("radio.mbs_interference_w", self.mbs_interference_w),
            ("radio.dbs_interference_w", self.dbs_interference_w),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::validation(name, format!("must be >= 0, got {v}")));
            }
        }
        for (name, v) in [
            ("radio.mbs_tx_power_dbm", self.mbs_tx_power_dbm),
            ("radio.dbs_tx_power_dbm", self.dbs_tx_power_dbm),
            ("radio.noise_psd_dbm_hz", self.noise_psd_dbm_hz),
        ] {
            if !v.is_finite() {
                return Err(Error::validation(name, "must be finite"));
            }
        }
        self.mbs_pathloss.validate("radio.mbs_pathloss")?;
        self.dbs_pathloss.validate("radio.dbs_pathloss")
    }

    /// Noise plus interference seen by a macro-cell user, watts.
    pub fn mbs_noise_w(&self) -> f64 {
        noise_power(self.noise_psd_dbm_hz, self.mbs_bandwidth_hz).unwrap_or(f64::NAN) + self.mbs_interference_w
    }

    pub fn dbs_noise_w(&self) -> f64 {
        noise_power(self.noise_psd_dbm_hz, self.dbs_bandwidth_hz).unwrap_or(f64::NAN) + self.dbs_interference_w
    }
}

pub fn dbm_to_watts(p_dbm: f64) -> f64 {
    10f64.powf((p_dbm - 30.0) / 10.0)
}

/// Noise power over `bandwidth_hz` for a density of `psd_dbm_hz`.
pub fn noise_power(psd_dbm_hz: f64, bandwidth_hz: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0) {
        return Err(Error::validation(
            "bandwidth",
            format!("must be > 0, got {bandwidth_hz}"),
        ));
    }
    Ok(dbm_to_watts(psd_dbm_hz + 10.0 * bandwidth_hz.log10()))
}

/// Path loss in dB. Distances below 1 m are clamped to the reference distance.
pub fn path_loss_db(model: &PathLossModel, d_m: f64) -> f64 {
    model.alpha + model.gamma * d_m.max(1.0).log10()
}

pub fn channel_gain(path_loss_db: f64) -> f64 {
    10f64.powf(-path_loss_db / 10.0)
}

/// Distance between an antenna `h` meters above the center of `j` and a user
/// at the center of `i`.
pub fn distance_3d(i: usize, j: usize, grid: &Grid, h: f64) -> Result<f64> {
    let (ci, ri) = grid.index_to_cell(i)?;
    let (cj, rj) = grid.index_to_cell(j)?;
    Ok(offset_distance(ci.abs_diff(cj), ri.abs_diff(rj), grid.cell_size(), h))
}

fn offset_distance(dcol: usize, drow: usize, cell_size: f64, h: f64) -> f64 {
    let dx = dcol as f64 * cell_size;
    let dy = drow as f64 * cell_size;
    (dx * dx + dy * dy + h * h).sqrt()
}

fn shannon_rate(bandwidth_hz: f64, tx_power_w: f64, gain: f64, noise_w: f64) -> f64 {
    bandwidth_hz * (1.0 + tx_power_w * gain / noise_w).log2()
}

fn mbs_rate_at(distance_m: f64, params: &RadioParams) -> f64 {
    shannon_rate(
        params.mbs_bandwidth_hz,
        dbm_to_watts(params.mbs_tx_power_dbm),
        channel_gain(path_loss_db(&params.mbs_pathloss, distance_m)),
        params.mbs_noise_w(),
    )
}

fn dbs_rate_at(distance_m: f64, params: &RadioParams) -> f64 {
    shannon_rate(
        params.dbs_bandwidth_hz,
        dbm_to_watts(params.dbs_tx_power_dbm),
        channel_gain(path_loss_db(&params.dbs_pathloss, distance_m)),
        params.dbs_noise_w(),
    )
}

/// Downlink rate from the macro cell at `mbs_location` to a user at `i`, bits/s.
/// The macro antenna sits at ground level.
pub fn rate_mbs(i: usize, grid: &Grid, mbs_location: usize, params: &RadioParams) -> Result<f64> {
    Ok(mbs_rate_at(distance_3d(i, mbs_location, grid, 0.0)?, params))
}

/// Downlink rate from a drone hovering over `j` to a user at `i`, bits/s.
pub fn rate_dbs(i: usize, j: usize, grid: &Grid, params: &RadioParams) -> Result<f64> {
    Ok(dbs_rate_at(distance_3d(i, j, grid, params.dbs_height_m)?, params))
}

/// Precomputed rate tables for one grid, MBS position and parameter set.
///
/// DBS rates depend on `(i, j)` only through the cell offset, so they are
/// stored once per `(|dcol|, |drow|)`. Values are bit-identical to
/// [`rate_mbs`] and [`rate_dbs`].
#[derive(Debug, Clone)]
pub struct LinkRates {
    grid: Grid,
    mbs_location: usize,
    params: RadioParams,
    mbs: Vec<f64>,
    dbs_by_offset: Vec<f64>,
}

impl LinkRates {
    pub fn new(grid: &Grid, mbs_location: usize, params: &RadioParams) -> Result<Self> {
        params.validate()?;
        grid.check_index(mbs_location)?;
        let mbs = (0..grid.len())
            .map(|i| rate_mbs(i, grid, mbs_location, params))
            .collect::<Result<_>>()?;
        let (w, h) = (grid.width_cells(), grid.height_cells());
        let mut dbs_by_offset = Vec::with_capacity(w * h);
        for drow in 0..h {
            for dcol in 0..w {
                let d = offset_distance(dcol, drow, grid.cell_size(), params.dbs_height_m);
                dbs_by_offset.push(dbs_rate_at(d, params));
            }
        }
        Ok(LinkRates {
            grid: grid.clone(),
            mbs_location,
            params: params.clone(),
            mbs,
            dbs_by_offset,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mbs_location(&self) -> usize {
        self.mbs_location
    }

    pub fn params(&self) -> &RadioParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.mbs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mbs.is_empty()
    }

    /// `r^m_i` for every location.
    pub fn mbs_rates(&self) -> &[f64] {
        &self.mbs
    }

    pub fn mbs(&self, i: usize) -> f64 {
        self.mbs[i]
    }

    /// `r^d_ij`: user at `i`, drone over `j`. Panics on out-of-range indices.
    pub fn dbs(&self, i: usize, j: usize) -> f64 {
        let w = self.grid.width_cells();
        let (ci, ri) = (i % w, i / w);
        let (cj, rj) = (j % w, j / w);
        self.dbs_offset(ci.abs_diff(cj), ri.abs_diff(rj))
    }

    pub fn dbs_offset(&self, dcol: usize, drow: usize) -> f64 {
        self.dbs_by_offset[drow * self.grid.width_cells() + dcol]
    }

    /// `r^d_ij` for every user `i` with the drone over `j`.
    pub fn dbs_rates_from(&self, j: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.dbs(i, j)).collect()
    }
}
