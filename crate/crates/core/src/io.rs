//! Binary rasters and the on-disk layout of funnels and trajectories.
//!
//! A raster file is a 44-byte little-endian header followed by the row-major
//! payload (x fastest):
//!
//! ```text
//! offset  size  field
//!      0     4  magic "FNLR"
//!      4     4  version (u32, = 1)
//!      8     4  dim (u32, 1 or 2)
//!     12     8  extents (u32 × 2; extents[1] = 1 in 1D)
//!     20    16  origin (f64 × 2)
//!     36     8  spacing (f64)
//!     44     …  u8 per cell for masks, f64 per cell for values
//! ```
//!
//! Funnels and trajectories are directories holding one raster per time and
//! an `index.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::conservation::{Field, Trajectory};
use crate::geometry::{Grid, GridSet, Raster};
use crate::inclusion::{Direction, Funnel};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"FNLR";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 44;
pub const INDEX_FILE: &str = "index.json";

fn header(grid: &Grid) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    for n in grid.extents() {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for c in grid.origin() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out.extend_from_slice(&grid.spacing().to_le_bytes());
    out
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
}

fn parse_header(bytes: &[u8]) -> Result<Grid> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = u32_at(bytes, 8) as usize;
    let extents = [u32_at(bytes, 12) as usize, u32_at(bytes, 16) as usize];
    let origin = [f64_at(bytes, 20), f64_at(bytes, 28)];
    let spacing = f64_at(bytes, 36);
    if dim == 1 && extents[1] != 1 {
        return Err(Error::Format(format!("1D raster with second extent {}", extents[1])));
    }
    Grid::new(dim, origin, spacing, extents).map_err(|e| Error::Format(e.to_string()))
}

pub fn encode_raster(raster: &Raster) -> Vec<u8> {
    let mut out = header(raster.grid());
    out.reserve(8 * raster.values().len());
    for v in raster.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn encode_mask(set: &GridSet) -> Vec<u8> {
    let mut out = header(set.grid());
    out.extend(set.mask().iter().map(|&b| b as u8));
    out
}

/// Decoded file contents; the payload kind follows from its length.
#[derive(Clone, Debug)]
pub enum RasterFile {
    Mask(GridSet),
    Values(Raster),
}

pub fn decode(bytes: &[u8]) -> Result<RasterFile> {
    let grid = parse_header(bytes)?;
    let payload = &bytes[HEADER_LEN..];
    let n = grid.len();
    if payload.len() == n {
        if let Some(b) = payload.iter().find(|&&b| b > 1) {
            return Err(Error::Format(format!("mask byte {b} is not 0 or 1")));
        }
        let mask = payload.iter().map(|&b| b == 1).collect();
        Ok(RasterFile::Mask(GridSet::new(grid, mask)?))
    } else if payload.len() == 8 * n {
        let values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(RasterFile::Values(Raster::new(grid, values)?))
    } else {
        Err(Error::Format(format!(
            "payload of {} bytes matches neither {n} mask bytes nor {} value bytes",
            payload.len(),
            8 * n
        )))
    }
}

pub fn write_raster(path: impl AsRef<Path>, raster: &Raster) -> Result<()> {
    Ok(fs::write(path, encode_raster(raster))?)
}

pub fn write_mask(path: impl AsRef<Path>, set: &GridSet) -> Result<()> {
    Ok(fs::write(path, encode_mask(set))?)
}

pub fn read_file(path: impl AsRef<Path>) -> Result<RasterFile> {
    decode(&fs::read(path)?)
}

pub fn read_raster(path: impl AsRef<Path>) -> Result<Raster> {
    match read_file(path)? {
        RasterFile::Values(r) => Ok(r),
        RasterFile::Mask(_) => Err(Error::Format("expected a value raster, found a mask".into())),
    }
}

/// Reads a mask; a value raster is accepted and thresholded at `> 0`.
pub fn read_mask(path: impl AsRef<Path>) -> Result<GridSet> {
    match read_file(path)? {
        RasterFile::Mask(s) => Ok(s),
        RasterFile::Values(r) => {
            let mask = r.values().iter().map(|&v| v > 0.0).collect();
            GridSet::new(r.grid().clone(), mask)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunnelIndex {
    pub direction: Direction,
    pub times: Vec<f64>,
    pub grid: Grid,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryIndex {
    pub times: Vec<f64>,
    pub flux: String,
    pub cfl: f64,
    pub steps: usize,
    pub grid: Grid,
    pub files: Vec<String>,
}

fn slice_name(prefix: &str, k: usize) -> String {
    format!("{prefix}_{k:05}.fnlr")
}

fn write_index<T: Serialize>(dir: &Path, index: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(index)?;
    text.push('\n');
    Ok(fs::write(dir.join(INDEX_FILE), text)?)
}

fn read_index<T: for<'de> Deserialize<'de>>(dir: &Path) -> Result<T> {
    Ok(serde_json::from_slice(&fs::read(dir.join(INDEX_FILE))?)?)
}

pub fn write_funnel(dir: impl AsRef<Path>, funnel: &Funnel) -> Result<FunnelIndex> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(funnel.len());
    for (k, slice) in funnel.slices().iter().enumerate() {
        let name = slice_name("slice", k);
        write_mask(dir.join(&name), slice)?;
        files.push(name);
    }
    let index = FunnelIndex {
        direction: funnel.direction(),
        times: funnel.times().to_vec(),
        grid: funnel.grid().clone(),
        files,
    };
    write_index(dir, &index)?;
    Ok(index)
}

pub fn read_funnel(dir: impl AsRef<Path>) -> Result<Funnel> {
    let dir = dir.as_ref();
    let index: FunnelIndex = read_index(dir)?;
    if index.files.len() != index.times.len() {
        return Err(Error::Format("funnel index lists different numbers of files and times".into()));
    }
    let slices = index
        .files
        .iter()
        .map(|f| {
            let s = read_mask(dir.join(f))?;
            if *s.grid() != index.grid {
                return Err(Error::Format(format!("{f} does not match the index grid")));
            }
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    Funnel::new(index.direction, index.times, slices)
}

pub fn write_trajectory(dir: impl AsRef<Path>, traj: &Trajectory) -> Result<TrajectoryIndex> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(traj.fields.len());
    for (k, field) in traj.fields.iter().enumerate() {
        let name = slice_name("u", k);
        write_raster(dir.join(&name), &field.to_raster())?;
        files.push(name);
    }
    let index = TrajectoryIndex {
        times: traj.times(),
        flux: traj.flux.clone(),
        cfl: traj.cfl,
        steps: traj.steps,
        grid: traj.last().grid().clone(),
        files,
    };
    write_index(dir, &index)?;
    Ok(index)
}

pub fn read_trajectory(dir: impl AsRef<Path>) -> Result<(TrajectoryIndex, Vec<Field>)> {
    let dir = dir.as_ref();
    let index: TrajectoryIndex = read_index(dir)?;
    if index.files.len() != index.times.len() {
        return Err(Error::Format("trajectory index lists different numbers of files and times".into()));
    }
    let fields = index
        .files
        .iter()
        .zip(&index.times)
        .map(|(f, &t)| Field::from_raster(read_raster(dir.join(f))?, t))
        .collect::<Result<Vec<_>>>()?;
    Ok((index, fields))
}

/// Paths of every slice file listed in a funnel or trajectory index.
pub fn listed_files(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let value: serde_json::Value = read_index(dir)?;
    let files = value
        .get("files")
        .and_then(|f| f.as_array())
        .ok_or_else(|| Error::Format("index has no files array".into()))?;
    files
        .iter()
        .map(|f| f.as_str().map(|s| dir.join(s)).ok_or_else(|| Error::Format("non-string file name".into())))
        .collect()
}
