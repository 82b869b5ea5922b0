use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::HyperBox;

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<D: DeserializeOwned>(path: &Path) -> Result<D> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubRequirementFile {
    pub schema_version: u32,
    pub subrequirements: Vec<HyperBox<f64>>,
}

impl SubRequirementFile {
    pub fn new(subrequirements: Vec<HyperBox<f64>>) -> Self {
        Self {
            schema_version: crate::SCHEMA_VERSION,
            subrequirements,
        }
    }
}

pub fn write_subrequirements_json(path: &Path, cells: &[HyperBox<f64>]) -> Result<()> {
    write_json(path, &SubRequirementFile::new(cells.to_vec()))
}

pub fn read_subrequirements(path: &Path) -> Result<Vec<HyperBox<f64>>> {
    let f: SubRequirementFile = read_json(path)?;
    Ok(f.subrequirements)
}

/// One row per sub-requirement: `id,d0_lo,d0_hi,d1_lo,d1_hi,...`.
pub fn write_subrequirements_csv(path: &Path, cells: &[HyperBox<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let d = cells.first().map_or(0, HyperBox::dim);
    let mut header = vec!["id".to_string()];
    for j in 0..d {
        header.push(format!("d{j}_lo"));
        header.push(format!("d{j}_hi"));
    }
    w.write_record(&header)?;
    for (i, c) in cells.iter().enumerate() {
        let mut row = vec![c.id().unwrap_or(i).to_string()];
        for [lo, hi] in c.bounds() {
            row.push(format!("{lo:?}"));
            row.push(format!("{hi:?}"));
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
