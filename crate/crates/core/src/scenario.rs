//! Grid geometry and per-slot traffic demand.

use std::collections::HashSet;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Header line of the demand CSV format.
pub const DEMAND_CSV_HEADER: [&str; 4] = ["col", "row", "arrival_rate", "mean_size_bits"];

/// Mean request size assigned to locations absent from a demand file.
pub const DEFAULT_MEAN_SIZE_BITS: f64 = 1.0;

/// A point in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance_sq(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Rectangular grid of equally sized square locations, indexed row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    cell_size: f64,
    origin: Point,
}

impl Grid {
    pub fn new(width_cells: usize, height_cells: usize, cell_size: f64, origin: Point) -> Result<Self> {
        if width_cells == 0 || height_cells == 0 {
            return Err(Error::validation(
                "grid",
                format!("dimensions must be positive, got {width_cells}x{height_cells}"),
            ));
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::validation(
                "grid.cell_size",
                format!("must be > 0, got {cell_size}"),
            ));
        }
        Ok(Grid {
            width: width_cells,
            height: height_cells,
            cell_size,
            origin,
        })
    }

    /// Grid anchored at the origin.
    pub fn square(side_cells: usize, cell_size: f64) -> Result<Self> {
        Grid::new(side_cells, side_cells, cell_size, Point::new(0.0, 0.0))
    }

    pub fn width_cells(&self) -> usize {
        self.width
    }

    pub fn height_cells(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::Index {
                index: i,
                len: self.len(),
            })
        }
    }

    pub fn location_index(&self, col: usize, row: usize) -> Result<usize> {
        if col >= self.width || row >= self.height {
            return Err(Error::CellOutOfRange {
                col,
                row,
                width: self.width,
                height: self.height,
            });
        }
        Ok(row * self.width + col)
    }

    /// `(col, row)` of location `i`.
    pub fn index_to_cell(&self, i: usize) -> Result<(usize, usize)> {
        self.check_index(i)?;
        Ok((i % self.width, i / self.width))
    }

    pub fn cell_center(&self, i: usize) -> Result<Point> {
        let (col, row) = self.index_to_cell(i)?;
        Ok(Point::new(
            self.origin.x + (col as f64 + 0.5) * self.cell_size,
            self.origin.y + (row as f64 + 0.5) * self.cell_size,
        ))
    }

    /// Up, down, left and right neighbors of `i`, in ascending index order.
    pub fn neighbors4(&self, i: usize) -> Result<Vec<usize>> {
        let (col, row) = self.index_to_cell(i)?;
        let mut out = Vec::with_capacity(4);
        if row > 0 {
            out.push(i - self.width);
        }
        if col > 0 {
            out.push(i - 1);
        }
        if col + 1 < self.width {
            out.push(i + 1);
        }
        if row + 1 < self.height {
            out.push(i + self.width);
        }
        Ok(out)
    }

    /// Location containing the center of the grid (rounding toward lower indices
    /// on even dimensions).
    pub fn center_location(&self) -> usize {
        let col = (self.width - 1) / 2;
        let row = (self.height - 1) / 2;
        row * self.width + col
    }
}

/// Per-location arrival rate (requests/s) and mean request size (bits).
#[derive(Debug, Clone, PartialEq)]
pub struct DemandField {
    arrival_rate: Vec<f64>,
    mean_size: Vec<f64>,
}

impl DemandField {
    pub fn new(arrival_rate: Vec<f64>, mean_size: Vec<f64>) -> Result<Self> {
        if arrival_rate.len() != mean_size.len() {
            return Err(Error::validation(
                "demand",
                format!(
                    "{} arrival rates but {} mean sizes",
                    arrival_rate.len(),
                    mean_size.len()
                ),
            ));
        }
        if let Some((i, l)) = arrival_rate
            .iter()
            .enumerate()
            .find(|(_, l)| !(**l >= 0.0 && l.is_finite()))
        {
            return Err(Error::validation(
                "demand.arrival_rate",
                format!("location {i}: {l} is not >= 0"),
            ));
        }
        if let Some((i, v)) = mean_size
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
        {
            return Err(Error::validation(
                "demand.mean_size",
                format!("location {i}: {v} is not > 0"),
            ));
        }
        Ok(DemandField {
            arrival_rate,
            mean_size,
        })
    }

    pub fn uniform(len: usize, arrival_rate: f64, mean_size: f64) -> Result<Self> {
        DemandField::new(vec![arrival_rate; len], vec![mean_size; len])
    }

    pub fn zeros(len: usize) -> Self {
        DemandField {
            arrival_rate: vec![0.0; len],
            mean_size: vec![DEFAULT_MEAN_SIZE_BITS; len],
        }
    }

    pub fn len(&self) -> usize {
        self.arrival_rate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrival_rate.is_empty()
    }

    pub fn arrival_rate(&self) -> &[f64] {
        &self.arrival_rate
    }

    pub fn mean_size(&self) -> &[f64] {
        &self.mean_size
    }

    /// Offered load `lambda_i * nu_i` in bits/s.
    pub fn load(&self, i: usize) -> f64 {
        self.arrival_rate[i] * self.mean_size[i]
    }

    pub fn loads(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.load(i)).collect()
    }

    /// Multiply every arrival rate by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        DemandField::new(
            self.arrival_rate.iter().map(|l| l * factor).collect(),
            self.mean_size.clone(),
        )
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.len() != grid.len() {
            return Err(Error::validation(
                "demand",
                format!("field has {} locations, grid has {}", self.len(), grid.len()),
            ));
        }
        Ok(())
    }
}

/// Grid, macro base station position and one demand field per time slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    grid: Grid,
    mbs_location: usize,
    demand_per_slot: Vec<DemandField>,
}

impl Scenario {
    pub fn new(grid: Grid, mbs_location: usize, demand_per_slot: Vec<DemandField>) -> Result<Self> {
        grid.check_index(mbs_location)?;
        for field in &demand_per_slot {
            field.check_grid(&grid)?;
        }
        Ok(Scenario {
            grid,
            mbs_location,
            demand_per_slot,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mbs_location(&self) -> usize {
        self.mbs_location
    }

    pub fn slot_count(&self) -> usize {
        self.demand_per_slot.len()
    }

    pub fn demand(&self, slot: usize) -> &DemandField {
        &self.demand_per_slot[slot]
    }

    pub fn demand_per_slot(&self) -> &[DemandField] {
        &self.demand_per_slot
    }
}

/// Read a demand CSV (`col,row,arrival_rate,mean_size_bits`). Locations that
/// do not appear get zero arrivals.
pub fn load_demand_csv(path: &Path, grid: &Grid) -> Result<DemandField> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if !headers.is_empty() && headers.iter().ne(DEMAND_CSV_HEADER.iter().copied()) {
        return Err(parse_err(
            1,
            format!("expected header `{}`", DEMAND_CSV_HEADER.join(",")),
        ));
    }

    let mut field = DemandField::zeros(grid.len());
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 4 {
            return Err(parse_err(line, format!("expected 4 fields, found {}", record.len())));
        }
        let col: usize = record[0]
            .parse()
            .map_err(|_| parse_err(line, format!("bad col `{}`", &record[0])))?;
        let row: usize = record[1]
            .parse()
            .map_err(|_| parse_err(line, format!("bad row `{}`", &record[1])))?;
        let rate: f64 = record[2]
            .parse()
            .map_err(|_| parse_err(line, format!("bad arrival_rate `{}`", &record[2])))?;
        let size: f64 = record[3]
            .parse()
            .map_err(|_| parse_err(line, format!("bad mean_size_bits `{}`", &record[3])))?;

        let i = grid
            .location_index(col, row)
            .map_err(|e| Error::validation("demand", format!("{}:{line}: {e}", path.display())))?;
        if !seen.insert(i) {
            return Err(Error::validation(
                "demand",
                format!("{}:{line}: duplicate row for cell ({col}, {row})", path.display()),
            ));
        }
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::validation(
                "demand.arrival_rate",
                format!("{}:{line}: {rate} is not >= 0", path.display()),
            ));
        }
        if !(size > 0.0 && size.is_finite()) {
            return Err(Error::validation(
                "demand.mean_size_bits",
                format!("{}:{line}: {size} is not > 0", path.display()),
            ));
        }
        field.arrival_rate[i] = rate;
        field.mean_size[i] = size;
    }
    Ok(field)
}

/// Write `field` in the demand CSV format, one row per cell with nonzero arrivals.
pub fn write_demand_csv(path: &Path, field: &DemandField, grid: &Grid) -> Result<()> {
    field.check_grid(grid)?;
    let mut out = String::from("col,row,arrival_rate,mean_size_bits\n");
    for i in 0..field.len() {
        if field.arrival_rate[i] == 0.0 {
            continue;
        }
        let (col, row) = grid.index_to_cell(i)?;
        out.push_str(&format!(
            "{col},{row},{},{}\n",
            field.arrival_rate[i], field.mean_size[i]
        ));
    }
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// One Gaussian traffic bump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hotspot {
    pub center: Point,
    /// Standard deviation of the bump, in meters.
    pub spread: f64,
    /// Arrival rate added at the bump's center, in requests/s.
    pub peak_rate: f64,
}

/// Synthetic demand: a background rate plus Gaussian hotspots per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct HotspotSpec {
    pub slots: Vec<Vec<Hotspot>>,
    pub background_rate: f64,
    pub mean_size: f64,
    /// Relative amplitude of uniform multiplicative noise on each rate, in `[0, 1]`.
    pub jitter: f64,
    pub seed: u64,
}

impl HotspotSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.background_rate >= 0.0 && self.background_rate.is_finite()) {
            return Err(Error::validation("hotspots.background_rate", "must be >= 0"));
        }
        if !(self.mean_size > 0.0 && self.mean_size.is_finite()) {
            return Err(Error::validation("hotspots.mean_size", "must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.jitter) {
            return Err(Error::validation("hotspots.jitter", "must lie in [0, 1]"));
        }
        for (slot, spots) in self.slots.iter().enumerate() {
            for h in spots {
                if !(h.spread > 0.0 && h.spread.is_finite()) {
                    return Err(Error::validation(
                        "hotspots.spread",
                        format!("slot {slot}: {} is not > 0", h.spread),
                    ));
                }
                if !(h.peak_rate >= 0.0 && h.peak_rate.is_finite()) {
                    return Err(Error::validation(
                        "hotspots.peak_rate",
                        format!("slot {slot}: {} is not >= 0", h.peak_rate),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Evaluate the hotspot mixture at every cell center, one field per slot.
pub fn generate_synthetic(spec: &HotspotSpec, grid: &Grid) -> Result<Vec<DemandField>> {
    spec.validate()?;
    let centers: Vec<Point> = (0..grid.len()).map(|i| grid.cell_center(i)).collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    spec.slots
        .iter()
        .map(|spots| {
            let rates = centers
                .iter()
                .map(|c| {
                    let bumps: f64 = spots
                        .iter()
                        .map(|h| h.peak_rate * (-c.distance_sq(&h.center) / (2.0 * h.spread * h.spread)).exp())
                        .sum();
                    let rate = spec.background_rate + bumps;
                    if spec.jitter > 0.0 {
                        rate * (1.0 + spec.jitter * rng.random_range(-1.0..=1.0))
                    } else {
                        rate
                    }
                })
                .collect();
            DemandField::new(rates, vec![spec.mean_size; grid.len()])
        })
        .collect()
}
