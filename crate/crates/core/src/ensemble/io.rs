//! CSV ingestion and export of trajectory ensembles.
//!
//! Long layout: header `id,t,c0,...,c{d-1}` with one row per available
//! observation. Wide layout: header `id,t0_c0,t0_c1,...` with one row per
//! trajectory and empty cells for missing observations. Either layout may
//! carry a per-trajectory mass column, and an optional JSON sidecar
//! (`<stem>.json`) declares `d`, the mass column and the coordinate
//! convention.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CoordinateConvention, TrajectoryEnsemble};
use crate::error::{Error, Result};
use crate::util::{csv_bytes, fmt_f64, write_atomic};

const DEFAULT_MASS_COLUMN: &str = "mass";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CsvLayout {
    LongCsv,
    WideCsv,
}

/// JSON sidecar describing an ensemble file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<CsvLayout>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_column: Option<String>,
    #[serde(default)]
    pub coordinates: CoordinateConvention,
}

/// Sidecar path for an ensemble file: `data.csv` → `data.json`.
pub fn manifest_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Loads an ensemble, honouring the sidecar manifest when one exists.
pub fn load_ensemble(path: &Path, layout: CsvLayout) -> Result<TrajectoryEnsemble> {
    let sidecar = manifest_path(path);
    let manifest = if sidecar.is_file() && sidecar != path {
        Some(serde_json::from_slice::<EnsembleManifest>(&std::fs::read(&sidecar)?)?)
    } else {
        None
    };
    load_ensemble_with_manifest(path, layout, manifest.as_ref())
}

pub fn load_ensemble_with_manifest(
    path: &Path,
    layout: CsvLayout,
    manifest: Option<&EnsembleManifest>,
) -> Result<TrajectoryEnsemble> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let mass_column = manifest
        .and_then(|m| m.mass_column.clone())
        .or_else(|| header.iter().any(|h| h == DEFAULT_MASS_COLUMN).then(|| DEFAULT_MASS_COLUMN.into()));
    let parsed = match layout {
        CsvLayout::LongCsv => parse_long(path, &header, &mut reader, mass_column.as_deref())?,
        CsvLayout::WideCsv => parse_wide(path, &header, &mut reader, mass_column.as_deref())?,
    };
    if let Some(expected) = manifest.and_then(|m| m.d) {
        if expected != parsed.d {
            return Err(Error::DimensionMismatch { expected, found: parsed.d });
        }
    }
    let coordinates = manifest.map(|m| m.coordinates).unwrap_or_default();
    parsed.build(coordinates)
}

/// Writes the ensemble as CSV plus its JSON sidecar.
pub fn save_ensemble(e: &TrajectoryEnsemble, path: &Path, layout: CsvLayout) -> Result<()> {
    let bytes = match layout {
        CsvLayout::LongCsv => long_bytes(e)?,
        CsvLayout::WideCsv => wide_bytes(e)?,
    };
    let manifest = EnsembleManifest {
        format: Some(layout),
        d: Some(e.d()),
        mass_column: e.masses().map(|_| DEFAULT_MASS_COLUMN.to_string()),
        coordinates: e.coordinates(),
    };
    write_atomic(path, &bytes)?;
    write_atomic(&manifest_path(path), &serde_json::to_vec_pretty(&manifest)?)?;
    Ok(())
}

fn long_bytes(e: &TrajectoryEnsemble) -> Result<Vec<u8>> {
    csv_bytes(|w| {
        let mut header = vec!["id".to_string(), "t".to_string()];
        header.extend((0..e.d()).map(|j| format!("c{j}")));
        if e.masses().is_some() {
            header.push(DEFAULT_MASS_COLUMN.into());
        }
        w.write_record(&header)?;
        for i in 0..e.n() {
            for t in e.support(i) {
                let mut record = vec![e.ids()[i].clone(), e.time_label(t)];
                record.extend(e.position(i, t).iter().map(|&x| fmt_f64(x)));
                if e.masses().is_some() {
                    record.push(fmt_f64(e.mass(i)));
                }
                w.write_record(&record)?;
            }
        }
        Ok(())
    })
}

fn wide_bytes(e: &TrajectoryEnsemble) -> Result<Vec<u8>> {
    csv_bytes(|w| {
        let mut header = vec!["id".to_string()];
        if e.masses().is_some() {
            header.push(DEFAULT_MASS_COLUMN.into());
        }
        for t in 0..e.num_times() {
            let label = e.time_label(t);
            header.extend((0..e.d()).map(|j| format!("t{label}_c{j}")));
        }
        w.write_record(&header)?;
        for i in 0..e.n() {
            let mut record = vec![e.ids()[i].clone()];
            if e.masses().is_some() {
                record.push(fmt_f64(e.mass(i)));
            }
            for t in 0..e.num_times() {
                if e.is_available(i, t) {
                    record.extend(e.position(i, t).iter().map(|&x| fmt_f64(x)));
                } else {
                    record.extend(std::iter::repeat_n(String::new(), e.d()));
                }
            }
            w.write_record(&record)?;
        }
        Ok(())
    })
}

/// Observations gathered from a file before the time axis is fixed.
struct Parsed {
    d: usize,
    ids: Vec<String>,
    masses: Option<Vec<f64>>,
    /// Distinct time labels in order of first appearance.
    labels: Vec<String>,
    /// (trajectory, label index, coordinates)
    observations: Vec<(usize, usize, Vec<f64>)>,
}

impl Parsed {
    fn build(self, coordinates: CoordinateConvention) -> Result<TrajectoryEnsemble> {
        let order = time_order(&self.labels);
        let num_times = self.labels.len();
        let n = self.ids.len();
        if num_times == 0 || n == 0 {
            return Err(Error::InvalidEnsemble("file contains no observations".into()));
        }
        let mut rank = vec![0; num_times];
        for (r, &label_idx) in order.iter().enumerate() {
            rank[label_idx] = r;
        }
        let mut positions = vec![0.0; n * num_times * self.d];
        let mut mask = vec![false; n * num_times];
        for (i, label_idx, coords) in self.observations {
            let cell = i * num_times + rank[label_idx];
            mask[cell] = true;
            positions[cell * self.d..(cell + 1) * self.d].copy_from_slice(&coords);
        }
        for i in 0..n {
            if !mask[i * num_times..(i + 1) * num_times].iter().any(|&m| m) {
                return Err(Error::EmptyTrajectory(self.ids[i].clone()));
            }
        }
        let labels = order.iter().map(|&k| self.labels[k].clone()).collect();
        let mut e = TrajectoryEnsemble::new(self.d, num_times, positions, mask)?
            .with_ids(self.ids)?
            .with_time_labels(labels)?
            .with_coordinates(coordinates)?;
        if let Some(masses) = self.masses {
            e = e.with_masses(masses)?;
        }
        Ok(e)
    }
}

/// Rank order of time labels: numeric when every label parses as a number,
/// lexicographic otherwise (ISO-8601 timestamps sort correctly that way).
fn time_order(labels: &[String]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    let numeric: Option<Vec<f64>> = labels.iter().map(|l| l.parse::<f64>().ok()).collect();
    match numeric {
        Some(values) => order.sort_by(|&a, &b| values[a].total_cmp(&values[b])),
        None => order.sort_by(|&a, &b| labels[a].cmp(&labels[b])),
    }
    order
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_f64(path: &Path, line: usize, field: &str, what: &str) -> Result<f64> {
    let value: f64 = field
        .parse()
        .map_err(|_| parse_err(path, line, format!("cannot parse {what} {field:?}")))?;
    if !value.is_finite() {
        return Err(parse_err(path, line, format!("non-finite {what} {field:?}")));
    }
    Ok(value)
}

fn record_line(record: &csv::StringRecord, fallback: usize) -> usize {
    record.position().map_or(fallback, |p| p.line() as usize)
}

/// Keeps one mass per trajectory and checks that repeated rows agree.
fn set_mass(
    masses: &mut [Option<f64>],
    i: usize,
    value: f64,
    path: &Path,
    line: usize,
) -> Result<()> {
    match masses[i] {
        Some(existing) if existing != value => Err(parse_err(
            path,
            line,
            format!("mass {value} disagrees with earlier mass {existing} for the same trajectory"),
        )),
        _ => {
            masses[i] = Some(value);
            Ok(())
        }
    }
}

fn parse_long(
    path: &Path,
    header: &[String],
    reader: &mut csv::Reader<std::fs::File>,
    mass_column: Option<&str>,
) -> Result<Parsed> {
    if header.len() < 3 || header[0] != "id" || header[1] != "t" {
        return Err(parse_err(path, 1, "long CSV header must start with `id,t` followed by coordinates"));
    }
    let mass_idx = match mass_column {
        Some(name) => Some(
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| parse_err(path, 1, format!("mass column {name:?} not found")))?,
        ),
        None => None,
    };
    let coord_cols: Vec<usize> = (2..header.len()).filter(|&c| Some(c) != mass_idx).collect();
    let d = coord_cols.len();
    if d == 0 {
        return Err(parse_err(path, 1, "no coordinate columns"));
    }

    let mut ids = Vec::new();
    let mut id_lookup: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut label_lookup: HashMap<String, usize> = HashMap::new();
    let mut seen: HashMap<(usize, usize), ()> = HashMap::new();
    let mut masses: Vec<Option<f64>> = Vec::new();
    let mut observations = Vec::new();

    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let line = record_line(&record, row + 2);
        if record.len() != header.len() {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: record.len().saturating_sub(2 + usize::from(mass_idx.is_some())),
            });
        }
        let id = &record[0];
        let label = &record[1];
        if id.is_empty() || label.is_empty() {
            return Err(parse_err(path, line, "empty id or time"));
        }
        let i = *id_lookup.entry(id.to_string()).or_insert_with(|| {
            ids.push(id.to_string());
            masses.push(None);
            ids.len() - 1
        });
        let k = *label_lookup.entry(label.to_string()).or_insert_with(|| {
            labels.push(label.to_string());
            labels.len() - 1
        });
        if seen.insert((i, k), ()).is_some() {
            return Err(Error::DuplicateObservation {
                id: id.to_string(),
                time: label.to_string(),
            });
        }
        let coords = coord_cols
            .iter()
            .map(|&c| parse_f64(path, line, &record[c], "coordinate"))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(mi) = mass_idx {
            let q = parse_f64(path, line, &record[mi], "mass")?;
            set_mass(&mut masses, i, q, path, line)?;
        }
        observations.push((i, k, coords));
    }
    let masses = mass_idx.map(|_| masses.into_iter().map(|q| q.unwrap_or(0.0)).collect());
    Ok(Parsed { d, ids, masses, labels, observations })
}

fn parse_wide(
    path: &Path,
    header: &[String],
    reader: &mut csv::Reader<std::fs::File>,
    mass_column: Option<&str>,
) -> Result<Parsed> {
    if header.first().map(String::as_str) != Some("id") {
        return Err(parse_err(path, 1, "wide CSV header must start with `id`"));
    }
    let mut mass_idx = None;
    let mut labels: Vec<String> = Vec::new();
    let mut label_lookup: HashMap<String, usize> = HashMap::new();
    // (column, label index, coordinate index)
    let mut cells: Vec<(usize, usize, usize)> = Vec::new();
    for (col, name) in header.iter().enumerate().skip(1) {
        if Some(name.as_str()) == mass_column {
            mass_idx = Some(col);
            continue;
        }
        let (label, coord) = name
            .strip_prefix('t')
            .and_then(|rest| rest.rsplit_once("_c"))
            .and_then(|(label, j)| j.parse::<usize>().ok().map(|j| (label, j)))
            .filter(|(label, _)| !label.is_empty())
            .ok_or_else(|| parse_err(path, 1, format!("unrecognised column {name:?}")))?;
        let k = *label_lookup.entry(label.to_string()).or_insert_with(|| {
            labels.push(label.to_string());
            labels.len() - 1
        });
        cells.push((col, k, coord));
    }
    if mass_column.is_some() && mass_idx.is_none() {
        return Err(parse_err(path, 1, "declared mass column not found"));
    }
    if labels.is_empty() {
        return Err(parse_err(path, 1, "no coordinate columns"));
    }
    let mut per_label: Vec<Vec<(usize, usize)>> = vec![Vec::new(); labels.len()];
    for &(col, k, j) in &cells {
        per_label[k].push((j, col));
    }
    let d = per_label[0].len();
    for cols in &mut per_label {
        cols.sort_unstable();
        if cols.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: cols.len() });
        }
        if cols.iter().enumerate().any(|(expect, &(j, _))| j != expect) {
            return Err(parse_err(path, 1, "coordinate columns must be c0..c{d-1} for every time"));
        }
    }

    let mut ids = Vec::new();
    let mut id_lookup: HashMap<String, ()> = HashMap::new();
    let mut masses = Vec::new();
    let mut observations = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let line = record_line(&record, row + 2);
        if record.len() != header.len() {
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(parse_err(path, line, "empty id"));
        }
        if id_lookup.insert(id.clone(), ()).is_some() {
            return Err(parse_err(path, line, format!("trajectory {id:?} appears twice")));
        }
        let i = ids.len();
        ids.push(id.clone());
        if let Some(mi) = mass_idx {
            masses.push(parse_f64(path, line, &record[mi], "mass")?);
        }
        let mut any = false;
        for (k, cols) in per_label.iter().enumerate() {
            let present = cols.iter().filter(|&&(_, c)| !record[c].is_empty()).count();
            if present == 0 {
                continue;
            }
            if present != d {
                return Err(parse_err(path, line, format!("partially missing observation at time {}", labels[k])));
            }
            let coords = cols
                .iter()
                .map(|&(_, c)| parse_f64(path, line, &record[c], "coordinate"))
                .collect::<Result<Vec<f64>>>()?;
            observations.push((i, k, coords));
            any = true;
        }
        if !any {
            return Err(Error::EmptyTrajectory(id));
        }
    }
    Ok(Parsed {
        d,
        ids,
        masses: mass_idx.map(|_| masses),
        labels,
        observations,
    })
}
