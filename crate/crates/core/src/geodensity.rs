//! Bounded 2-D density grids over incident coordinates: equirectangular
//! histogram binning, optional Gaussian smoothing, and a plain-text grid
//! format for external renderers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::dataset::GeoPoint;

pub const GRID_FORMAT_TAG: &str = "incidentmine-grid v1";

/// Upper bound on nx * ny accepted from grid files.
const MAX_GRID_CELLS: usize = 64_000_000;

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("invalid bounds: need lat_min < lat_max in [-90, 90] and lon_min < lon_max in [-180, 180]")]
    InvalidBounds,
    #[error("grid needs nx >= 1 and ny >= 1")]
    EmptyGrid,
    #[error("grid of {nx} x {ny} cells is too large")]
    GridTooLarge { nx: usize, ny: usize },
    #[error("smoothing bandwidth must be > 0, got {0}")]
    InvalidBandwidth(f64),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("grid file line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("unsupported grid format tag `{0}`")]
    FormatVersionMismatch(String),
    #[error("region preset line {line}: {message}")]
    PresetParse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoBounds {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl GeoBounds {
    pub fn new(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64) -> Result<GeoBounds, GeoError> {
        let lat_ok = (-90.0..=90.0).contains(&lat_min) && (-90.0..=90.0).contains(&lat_max);
        let lon_ok = (-180.0..=180.0).contains(&lon_min) && (-180.0..=180.0).contains(&lon_max);
        if lat_min < lat_max && lon_min < lon_max && lat_ok && lon_ok {
            Ok(GeoBounds {
                lat_min,
                lat_max,
                lon_min,
                lon_max,
            })
        } else {
            Err(GeoError::InvalidBounds)
        }
    }

    /// Inclusive on all edges.
    pub fn contains(&self, point: GeoPoint) -> bool {
        point.lat >= self.lat_min
            && point.lat <= self.lat_max
            && point.lon >= self.lon_min
            && point.lon <= self.lon_max
    }
}

/// ny x nx cell grid; row 0 is the southernmost band. `total_points`
/// counts in-bounds points, `out_of_bounds` the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub bounds: GeoBounds,
    pub nx: usize,
    pub ny: usize,
    cells: Vec<f64>,
    pub total_points: usize,
    pub out_of_bounds: usize,
}

impl DensityGrid {
    pub fn cell(&self, ix: usize, iy: usize) -> f64 {
        self.cells[iy * self.nx + ix]
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn mass(&self) -> f64 {
        self.cells.iter().sum()
    }

    pub fn cell_width(&self) -> f64 {
        (self.bounds.lon_max - self.bounds.lon_min) / self.nx as f64
    }

    pub fn cell_height(&self) -> f64 {
        (self.bounds.lat_max - self.bounds.lat_min) / self.ny as f64
    }
}

/// Histogram binning. Each in-bounds point lands in exactly one cell;
/// a point on an interior edge belongs to the higher-index cell, and the
/// lat_max/lon_max edges belong to the last cell.
pub fn build_density_grid(
    points: &[GeoPoint],
    bounds: GeoBounds,
    nx: usize,
    ny: usize,
) -> Result<DensityGrid, GeoError> {
    if nx == 0 || ny == 0 {
        return Err(GeoError::EmptyGrid);
    }
    if nx.saturating_mul(ny) > MAX_GRID_CELLS {
        return Err(GeoError::GridTooLarge { nx, ny });
    }
    let mut cells = vec![0.0f64; nx * ny];
    let dx = (bounds.lon_max - bounds.lon_min) / nx as f64;
    let dy = (bounds.lat_max - bounds.lat_min) / ny as f64;
    let mut total_points = 0usize;
    let mut out_of_bounds = 0usize;
    for point in points {
        if !bounds.contains(*point) {
            out_of_bounds += 1;
            continue;
        }
        let ix = (((point.lon - bounds.lon_min) / dx).floor() as usize).min(nx - 1);
        let iy = (((point.lat - bounds.lat_min) / dy).floor() as usize).min(ny - 1);
        cells[iy * nx + ix] += 1.0;
        total_points += 1;
    }
    Ok(DensityGrid {
        bounds,
        nx,
        ny,
        cells,
        total_points,
        out_of_bounds,
    })
}

/// Separable truncated Gaussian blur (radius 3 sigma, sigma in cells)
/// with mirrored boundaries, so total mass and constant grids are both
/// preserved to rounding error.
pub fn smooth_grid(grid: &DensityGrid, bandwidth: f64) -> Result<DensityGrid, GeoError> {
    if !(bandwidth > 0.0) {
        return Err(GeoError::InvalidBandwidth(bandwidth));
    }
    let radius = (3.0 * bandwidth).ceil() as isize;
    let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
    for t in -radius..=radius {
        kernel.push((-((t * t) as f64) / (2.0 * bandwidth * bandwidth)).exp());
    }
    let norm: f64 = kernel.iter().sum();
    for w in &mut kernel {
        *w /= norm;
    }

    let reflect = |mut i: isize, n: usize| -> usize {
        let n = n as isize;
        loop {
            if i < 0 {
                i = -1 - i;
            } else if i >= n {
                i = 2 * n - 1 - i;
            } else {
                return i as usize;
            }
        }
    };

    let (nx, ny) = (grid.nx, grid.ny);
    // pass 1: along x
    let mut stage = vec![0.0f64; nx * ny];
    for iy in 0..ny {
        for ix in 0..nx {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let sx = reflect(ix as isize + k as isize - radius, nx);
                acc += w * grid.cells[iy * nx + sx];
            }
            stage[iy * nx + ix] = acc;
        }
    }
    // pass 2: along y
    let mut cells = vec![0.0f64; nx * ny];
    for iy in 0..ny {
        for ix in 0..nx {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let sy = reflect(iy as isize + k as isize - radius, ny);
                acc += w * stage[sy * nx + ix];
            }
            cells[iy * nx + ix] = acc;
        }
    }
    Ok(DensityGrid {
        bounds: grid.bounds,
        nx,
        ny,
        cells,
        total_points: grid.total_points,
        out_of_bounds: grid.out_of_bounds,
    })
}

/// Plain-text grid: header lines, then ny rows of nx space-separated
/// values, northernmost row first. Byte-stable for identical grids.
pub fn grid_to_string(grid: &DensityGrid) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{GRID_FORMAT_TAG}");
    let _ = writeln!(out, "nx = {}", grid.nx);
    let _ = writeln!(out, "ny = {}", grid.ny);
    let _ = writeln!(out, "lat = {} {}", grid.bounds.lat_min, grid.bounds.lat_max);
    let _ = writeln!(out, "lon = {} {}", grid.bounds.lon_min, grid.bounds.lon_max);
    let _ = writeln!(out, "cell = {} {}", grid.cell_height(), grid.cell_width());
    let _ = writeln!(out, "points = {}", grid.total_points);
    let _ = writeln!(out, "out-of-bounds = {}", grid.out_of_bounds);
    for iy in (0..grid.ny).rev() {
        let row: Vec<String> = (0..grid.nx)
            .map(|ix| grid.cell(ix, iy).to_string())
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn export_grid(grid: &DensityGrid, path: impl AsRef<Path>) -> Result<(), GeoError> {
    fs::write(path, grid_to_string(grid))?;
    Ok(())
}

pub fn grid_from_str(text: &str) -> Result<DensityGrid, GeoError> {
    let mut lines = text.lines().enumerate();
    let corrupt = |line: usize, message: &str| GeoError::Corrupt {
        line: line + 1,
        message: message.to_string(),
    };
    let (_, tag) = lines.next().ok_or_else(|| corrupt(0, "empty grid file"))?;
    if tag.trim() != GRID_FORMAT_TAG {
        return Err(GeoError::FormatVersionMismatch(tag.trim().to_string()));
    }
    let mut header = |key: &str| -> Result<String, GeoError> {
        let (line, text) = lines.next().ok_or_else(|| corrupt(0, "missing header"))?;
        let (k, v) = text
            .split_once('=')
            .ok_or_else(|| corrupt(line, "expected `key = value`"))?;
        if k.trim() != key {
            return Err(corrupt(line, &format!("expected `{key}`")));
        }
        Ok(v.trim().to_string())
    };
    let nx: usize = header("nx")?.parse().map_err(|_| corrupt(1, "bad nx"))?;
    let ny: usize = header("ny")?.parse().map_err(|_| corrupt(2, "bad ny"))?;
    let parse_pair = |value: &str, line: usize| -> Result<(f64, f64), GeoError> {
        let (a, b) = value
            .split_once(' ')
            .ok_or_else(|| corrupt(line, "expected two values"))?;
        Ok((
            a.trim().parse().map_err(|_| corrupt(line, "bad number"))?,
            b.trim().parse().map_err(|_| corrupt(line, "bad number"))?,
        ))
    };
    let (lat_min, lat_max) = parse_pair(&header("lat")?, 3)?;
    let (lon_min, lon_max) = parse_pair(&header("lon")?, 4)?;
    let _cell = header("cell")?;
    let total_points: usize = header("points")?
        .parse()
        .map_err(|_| corrupt(6, "bad points count"))?;
    let out_of_bounds: usize = header("out-of-bounds")?
        .parse()
        .map_err(|_| corrupt(7, "bad out-of-bounds count"))?;

    let bounds = GeoBounds::new(lat_min, lat_max, lon_min, lon_max)?;
    if nx == 0 || ny == 0 || nx.saturating_mul(ny) > MAX_GRID_CELLS {
        return Err(corrupt(2, "grid dimensions out of range"));
    }
    let mut cells = vec![0.0f64; nx * ny];
    let mut rows_read = 0usize;
    for (line, text) in lines {
        if text.trim().is_empty() {
            continue;
        }
        if rows_read >= ny {
            return Err(corrupt(line, "more rows than ny"));
        }
        let iy = ny - 1 - rows_read;
        let values: Vec<&str> = text.split_whitespace().collect();
        if values.len() != nx {
            return Err(corrupt(line, "row width does not match nx"));
        }
        for (ix, v) in values.iter().enumerate() {
            cells[iy * nx + ix] = v.parse().map_err(|_| corrupt(line, "bad cell value"))?;
        }
        rows_read += 1;
    }
    if rows_read != ny {
        return Err(corrupt(0, "fewer rows than ny"));
    }
    Ok(DensityGrid {
        bounds,
        nx,
        ny,
        cells,
        total_points,
        out_of_bounds,
    })
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<DensityGrid, GeoError> {
    grid_from_str(&fs::read_to_string(path)?)
}

/// Region presets file: `CODE = lat_min lat_max lon_min lon_max` lines.
pub fn parse_region_presets(text: &str) -> Result<BTreeMap<String, GeoBounds>, GeoError> {
    let mut presets = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse = || -> Option<(String, GeoBounds)> {
            let (name, values) = line.split_once('=')?;
            let values: Vec<f64> = values
                .split_whitespace()
                .map(|v| v.parse().ok())
                .collect::<Option<Vec<f64>>>()?;
            if values.len() != 4 {
                return None;
            }
            let bounds = GeoBounds::new(values[0], values[1], values[2], values[3]).ok()?;
            Some((name.trim().to_string(), bounds))
        };
        let (name, bounds) = parse().ok_or(GeoError::PresetParse {
            line: idx + 1,
            message: "expected `NAME = lat_min lat_max lon_min lon_max`".into(),
        })?;
        presets.insert(name, bounds);
    }
    Ok(presets)
}

pub fn region_presets_from_file(
    path: impl AsRef<Path>,
) -> Result<BTreeMap<String, GeoBounds>, GeoError> {
    parse_region_presets(&fs::read_to_string(path)?)
}
