//! Experiment configuration (TOML).
//!
//! ```toml
//! seed = 7
//! methods = ["leap", "smbs", "ssc"]
//! ssc_fixed_location = { col = 10, row = 80 }
//! output_dir = "out"
//!
//! [grid]
//! width_cells = 100
//! height_cells = 100
//! cell_size = 10.0
//!
//! [radio]            # every field optional
//! total_bandwidth_hz = 20e6
//! dbs_bandwidth_hz = 5e6
//!
//! [energy]           # every field optional
//! beta = 500.0
//!
//! [demand]
//! csv = ["slot1.csv", "slot2.csv"]   # or a [demand.hotspots] table
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::placement::EnergyParams;
use crate::radio::{PathLossModel, RadioParams};
use crate::scenario::{self, DemandField, Grid, Hotspot, HotspotSpec, Point, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Leap,
    Smbs,
    Ssc,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Leap => "leap",
            Method::Smbs => "smbs",
            Method::Ssc => "ssc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A location given either as a row-major index or as a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellRef {
    Index(usize),
    Cell { col: usize, row: usize },
}

impl CellRef {
    pub fn resolve(&self, grid: &Grid) -> Result<usize> {
        match *self {
            CellRef::Index(i) => grid.check_index(i).map(|_| i),
            CellRef::Cell { col, row } => grid.location_index(col, row),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub width_cells: usize,
    pub height_cells: usize,
    #[serde(default = "default_cell_size")]
    pub cell_size: f64,
    #[serde(default = "default_origin")]
    pub origin: Point,
    /// Defaults to the center cell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mbs_location: Option<CellRef>,
}

fn default_cell_size() -> f64 {
    10.0
}

fn default_origin() -> Point {
    Point::new(0.0, 0.0)
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.width_cells, self.height_cells, self.cell_size, self.origin)
    }

    pub fn mbs_location(&self, grid: &Grid) -> Result<usize> {
        match &self.mbs_location {
            Some(c) => c.resolve(grid),
            None => Ok(grid.center_location()),
        }
    }
}

/// Radio fields as written in the config. The carrier is split between the
/// stations for LEAP and SSC; S-MBS gets all of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub mbs_tx_power_dbm: f64,
    pub dbs_tx_power_dbm: f64,
    pub total_bandwidth_hz: f64,
    pub dbs_bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub mbs_interference_w: f64,
    pub dbs_interference_w: f64,
    pub dbs_height_m: f64,
    pub mbs_pathloss: PathLossModel,
    pub dbs_pathloss: PathLossModel,
}

impl Default for RadioConfig {
    fn default() -> Self {
        let p = RadioParams::default();
        RadioConfig {
            mbs_tx_power_dbm: p.mbs_tx_power_dbm,
            dbs_tx_power_dbm: p.dbs_tx_power_dbm,
            total_bandwidth_hz: p.mbs_bandwidth_hz + p.dbs_bandwidth_hz,
            dbs_bandwidth_hz: p.dbs_bandwidth_hz,
            noise_psd_dbm_hz: p.noise_psd_dbm_hz,
            mbs_interference_w: p.mbs_interference_w,
            dbs_interference_w: p.dbs_interference_w,
            dbs_height_m: p.dbs_height_m,
            mbs_pathloss: p.mbs_pathloss,
            dbs_pathloss: p.dbs_pathloss,
        }
    }
}

impl RadioConfig {
    fn params(&self, mbs_bandwidth_hz: f64) -> RadioParams {
        RadioParams {
            mbs_tx_power_dbm: self.mbs_tx_power_dbm,
            dbs_tx_power_dbm: self.dbs_tx_power_dbm,
            mbs_bandwidth_hz,
            dbs_bandwidth_hz: self.dbs_bandwidth_hz,
            mbs_pathloss: self.mbs_pathloss,
            dbs_pathloss: self.dbs_pathloss,
            noise_psd_dbm_hz: self.noise_psd_dbm_hz,
            mbs_interference_w: self.mbs_interference_w,
            dbs_interference_w: self.dbs_interference_w,
            dbs_height_m: self.dbs_height_m,
        }
    }

    /// Macro cell on `total - dbs` bandwidth, drone on `dbs`.
    pub fn split_params(&self) -> RadioParams {
        self.params(self.total_bandwidth_hz - self.dbs_bandwidth_hz)
    }

    /// Macro cell on the whole carrier.
    pub fn full_band_params(&self) -> RadioParams {
        self.params(self.total_bandwidth_hz)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dbs_bandwidth_hz < self.total_bandwidth_hz) {
            return Err(Error::validation(
                "radio.dbs_bandwidth_hz",
                "must be smaller than radio.total_bandwidth_hz",
            ));
        }
        self.split_params().validate()?;
        self.full_band_params().validate()
    }
}

/// A hotspot moving in a straight line from `start` to `end` over the slots,
/// with its peak rate interpolated linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HotspotTrack {
    pub start: Point,
    pub end: Point,
    pub spread: f64,
    pub peak_start: f64,
    pub peak_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HotspotConfig {
    #[serde(default)]
    pub background_rate: f64,
    #[serde(default = "default_mean_size")]
    pub mean_size: f64,
    #[serde(default)]
    pub jitter: f64,
    /// Falls back to the top-level seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Required with `tracks`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tracks: Vec<HotspotTrack>,
    /// Explicit hotspot list per slot; exclusive with `tracks`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slots: Vec<Vec<Hotspot>>,
}

fn default_mean_size() -> f64 {
    1e5
}

impl HotspotConfig {
    pub fn to_spec(&self, default_seed: u64) -> Result<HotspotSpec> {
        let slots = match (self.tracks.is_empty(), self.slots.is_empty()) {
            (false, false) => {
                return Err(Error::validation(
                    "demand.hotspots",
                    "give either `tracks` or `slots`, not both",
                ))
            }
            (false, true) => {
                let n = self
                    .slot_count
                    .ok_or_else(|| Error::validation("demand.hotspots.slot_count", "required with `tracks`"))?;
                (0..n)
                    .map(|t| {
                        let f = if n > 1 { t as f64 / (n - 1) as f64 } else { 0.0 };
                        self.tracks
                            .iter()
                            .map(|tr| Hotspot {
                                center: Point::new(
                                    tr.start.x + f * (tr.end.x - tr.start.x),
                                    tr.start.y + f * (tr.end.y - tr.start.y),
                                ),
                                spread: tr.spread,
                                peak_rate: tr.peak_start + f * (tr.peak_end - tr.peak_start),
                            })
                            .collect()
                    })
                    .collect()
            }
            (true, _) => {
                if let Some(n) = self.slot_count {
                    if self.slots.is_empty() {
                        vec![Vec::new(); n]
                    } else if n != self.slots.len() {
                        return Err(Error::validation(
                            "demand.hotspots.slot_count",
                            format!("is {n} but {} slots are listed", self.slots.len()),
                        ));
                    } else {
                        self.slots.clone()
                    }
                } else {
                    self.slots.clone()
                }
            }
        };
        if slots.is_empty() {
            return Err(Error::validation("demand.hotspots", "no slots"));
        }
        let spec = HotspotSpec {
            slots,
            background_rate: self.background_rate,
            mean_size: self.mean_size,
            jitter: self.jitter,
            seed: self.seed.unwrap_or(default_seed),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandConfig {
    /// One demand CSV per slot.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub csv: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hotspots: Option<HotspotConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ssc_fixed_location: Option<CellRef>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub grid: GridConfig,
    #[serde(default)]
    pub radio: RadioConfig,
    #[serde(default)]
    pub energy: EnergyParams,
    pub demand: DemandConfig,
}

fn default_methods() -> Vec<Method> {
    vec![Method::Leap, Method::Smbs]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Reference parameter set on a 100x100 grid of 10 m cells with two
    /// drifting hotspots.
    pub fn defaults() -> Self {
        ExperimentConfig {
            seed: 1,
            methods: vec![Method::Leap, Method::Smbs, Method::Ssc],
            ssc_fixed_location: Some(CellRef::Cell { col: 10, row: 80 }),
            output_dir: default_output_dir(),
            grid: GridConfig {
                width_cells: 100,
                height_cells: 100,
                cell_size: 10.0,
                origin: default_origin(),
                mbs_location: None,
            },
            radio: RadioConfig::default(),
            energy: EnergyParams::default(),
            demand: DemandConfig {
                csv: Vec::new(),
                hotspots: Some(HotspotConfig {
                    background_rate: 6e-5,
                    mean_size: 1e5,
                    jitter: 0.0,
                    seed: None,
                    slot_count: Some(36),
                    tracks: vec![
                        HotspotTrack {
                            start: Point::new(105.0, 805.0),
                            end: Point::new(105.0, 805.0),
                            spread: 30.0,
                            peak_start: 0.012,
                            peak_end: 0.008,
                        },
                        HotspotTrack {
                            start: Point::new(600.0, 650.0),
                            end: Point::new(805.0, 855.0),
                            spread: 30.0,
                            peak_start: 0.0,
                            peak_end: 0.016,
                        },
                    ],
                    slots: Vec::new(),
                }),
            },
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn build_grid(&self) -> Result<Grid> {
        self.grid.build()
    }

    pub fn mbs_location(&self) -> Result<usize> {
        self.grid.mbs_location(&self.build_grid()?)
    }

    pub fn ssc_location(&self) -> Result<Option<usize>> {
        let grid = self.build_grid()?;
        self.ssc_fixed_location.map(|c| c.resolve(&grid)).transpose()
    }

    /// Validate everything that does not require reading demand files.
    pub fn validate(&self) -> Result<()> {
        let grid = self.build_grid()?;
        self.grid.mbs_location(&grid)?;
        self.radio.validate()?;
        self.energy.validate()?;
        if self.methods.is_empty() {
            return Err(Error::validation("methods", "at least one method is required"));
        }
        if self.methods.contains(&Method::Ssc) {
            match self.ssc_fixed_location {
                None => {
                    return Err(Error::validation(
                        "ssc_fixed_location",
                        "required when `ssc` is among the methods",
                    ))
                }
                Some(c) => {
                    c.resolve(&grid)?;
                }
            }
        }
        match (&self.demand.csv.is_empty(), &self.demand.hotspots) {
            (false, Some(_)) => Err(Error::validation("demand", "give either `csv` or `hotspots`, not both")),
            (true, None) => Err(Error::validation("demand", "one of `csv` or `hotspots` is required")),
            (false, None) => {
                for p in &self.demand.csv {
                    if !p.is_file() {
                        return Err(Error::validation(
                            "demand.csv",
                            format!("{} does not exist", p.display()),
                        ));
                    }
                }
                Ok(())
            }
            (true, Some(h)) => h.to_spec(self.seed).map(|_| ()),
        }
    }

    /// Demand fields for every slot, read or generated.
    pub fn demand_fields(&self, grid: &Grid) -> Result<Vec<DemandField>> {
        if let Some(h) = &self.demand.hotspots {
            scenario::generate_synthetic(&h.to_spec(self.seed)?, grid)
        } else {
            self.demand
                .csv
                .iter()
                .map(|p| scenario::load_demand_csv(p, grid))
                .collect()
        }
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let grid = self.build_grid()?;
        let mbs = self.grid.mbs_location(&grid)?;
        let fields = self.demand_fields(&grid)?;
        Scenario::new(grid, mbs, fields)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        self.demand.csv.iter_mut().for_each(fix);
    }
}

/// Parse a config from TOML text, resolving relative paths against `base`.
pub fn parse_config(text: &str, base: &Path, origin: &Path) -> Result<ExperimentConfig> {
    let mut config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    config.resolve_paths(base);
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config(&text, base, path)
}

/// Input of the `generate` subcommand: a grid and a hotspot description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSpec {
    #[serde(default)]
    pub seed: u64,
    pub grid: GridConfig,
    pub hotspots: HotspotConfig,
}

pub fn load_generate_spec(path: &Path) -> Result<GenerateSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Write one demand CSV per slot into `dir`; returns the written paths.
pub fn generate_demand_files(spec: &GenerateSpec, dir: &Path) -> Result<Vec<PathBuf>> {
    let grid = spec.grid.build()?;
    let fields = scenario::generate_synthetic(&spec.hotspots.to_spec(spec.seed)?, &grid)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    fields
        .iter()
        .enumerate()
        .map(|(t, f)| {
            let path = dir.join(format!("demand_slot{:03}.csv", t + 1));
            scenario::write_demand_csv(&path, f, &grid)?;
            Ok(path)
        })
        .collect()
}
