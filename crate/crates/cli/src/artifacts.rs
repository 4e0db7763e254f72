//! Artifact files: atomic writes, dataset CSV, result bundles and the
//! metadata records that tie them to a config.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use pmsm_moo::design_space::{DesignSpec, DesignVector};
use pmsm_moo::machine_model::{IntermediateMeasures, GRID_N, MEASURE_LEN};
use pmsm_moo::optimizer::{EvaluatedDesign, EvaluatorTag, GenerationStats};
use pmsm_moo::postprocess::{KpiVector, N_CONSTRAINTS};
use pmsm_moo::surrogate::{Dataset, Record, Split};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::sha256_hex;
use crate::error::CliError;

pub const TOOL_VERSION: &str = concat!("pmsm-moo ", env!("CARGO_PKG_VERSION"));

/// Bumped whenever the KPI or constraint definitions change.
const KPI_DEFINITION: &str = "kpi-v1: k1 = -max shaft power [W], k2 = material cost; c = torque, 5 geometry clearances";

/// Hash of the objective and constraint definitions for a design space.
pub fn kpi_hash(spec: &DesignSpec) -> String {
    sha256_hex(format!("{KPI_DEFINITION}\n{}", spec.hash()).as_bytes())
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::io(path, e)
    })
}

pub fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_slice(&read(path)?).map_err(|e| CliError::format(path, e.to_string()))
}

/// `path` with `suffix` appended to the file name.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Fails unless the file at `path` hashes to `expected`.
pub fn verify_digest(path: &Path, expected: &str) -> Result<Vec<u8>, CliError> {
    let bytes = read(path)?;
    let found = sha256_hex(&bytes);
    if found != expected {
        return Err(CliError::format(
            path,
            format!("content hash {found} does not match the recorded {expected}"),
        ));
    }
    Ok(bytes)
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::format(path, e.to_string())
}

fn fmt_f64(x: f64) -> String {
    // shortest representation that parses back to the same value
    format!("{x}")
}

fn parse_f64(path: &Path, s: &str) -> Result<f64, CliError> {
    s.parse()
        .map_err(|_| CliError::format(path, format!("not a number: {s:?}")))
}

/// Dataset column names: parameters, psi_d grid, psi_q grid, scalars.
pub fn dataset_header(spec: &DesignSpec) -> Vec<String> {
    let mut h: Vec<String> = spec.params.iter().map(|p| p.name.clone()).collect();
    for grid in ["psi_d", "psi_q"] {
        for iw in 0..GRID_N {
            for iu in 0..GRID_N {
                h.push(format!("{grid}_w{iw}_u{iu}"));
            }
        }
    }
    h.extend(["c_hy", "c_ed", "psi_ref"].map(String::from));
    h
}

pub fn dataset_csv(spec: &DesignSpec, ds: &Dataset) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let internal = |e: csv::Error| CliError::Internal(e.to_string());
    w.write_record(dataset_header(spec)).map_err(internal)?;
    for r in &ds.records {
        let row = r.design.iter().copied().chain(r.measures.to_flat()).map(fmt_f64);
        w.write_record(row).map_err(internal)?;
    }
    w.into_inner().map_err(|e| CliError::Internal(e.to_string()))
}

pub fn parse_dataset(path: &Path, bytes: &[u8], spec: &DesignSpec) -> Result<Dataset, CliError> {
    let mut r = csv::Reader::from_reader(bytes);
    let header: Vec<String> = r.headers().map_err(csv_err(path))?.iter().map(String::from).collect();
    if header != dataset_header(spec) {
        return Err(CliError::format(path, "unexpected dataset header"));
    }
    let n = spec.dim();
    let mut records = Vec::new();
    for row in r.records() {
        let row = row.map_err(csv_err(path))?;
        let vals = row
            .iter()
            .map(|s| parse_f64(path, s))
            .collect::<Result<Vec<f64>, _>>()?;
        if vals.len() != n + MEASURE_LEN {
            return Err(CliError::format(path, format!("row with {} fields", vals.len())));
        }
        records.push(Record {
            design: DesignVector(vals[..n].to_vec()),
            measures: IntermediateMeasures::from_flat(&vals[n..]),
            split: Split::Train,
        });
    }
    Ok(Dataset { records })
}

/// Sidecar of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub tool_version: String,
    pub config_hash: String,
    pub spec_hash: String,
    pub seed: u64,
    pub n_lhs: usize,
    pub rows: usize,
    pub columns: usize,
    pub sha256: String,
}

/// Sidecar of a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub tool_version: String,
    pub config_hash: String,
    pub spec_hash: String,
    pub dataset_sha256: String,
    pub sha256: String,
}

fn tag_str(t: EvaluatorTag) -> &'static str {
    t.as_str()
}

fn parse_tag(path: &Path, s: &str) -> Result<EvaluatorTag, CliError> {
    match s {
        "reference" => Ok(EvaluatorTag::Reference),
        "surrogate" => Ok(EvaluatorTag::Surrogate),
        other => Err(CliError::format(path, format!("unknown evaluator {other:?}"))),
    }
}

fn archive_header(spec: &DesignSpec) -> Vec<String> {
    let mut h: Vec<String> = [
        "id",
        "generation",
        "evaluator",
        "physics_evaluated",
        "feasible",
        "violation",
        "k1",
        "k2",
    ]
    .map(String::from)
    .to_vec();
    h.extend((1..=N_CONSTRAINTS).map(|k| format!("c{k}")));
    h.extend(dataset_header(spec));
    h
}

/// Every archive member, one row each. Measures are left empty for
/// designs that never reached the physics.
pub fn archive_csv(spec: &DesignSpec, members: &[EvaluatedDesign]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let internal = |e: csv::Error| CliError::Internal(e.to_string());
    w.write_record(archive_header(spec)).map_err(internal)?;
    for d in members {
        let mut row = vec![
            d.id.to_string(),
            d.generation.to_string(),
            tag_str(d.evaluator).to_string(),
            d.physics_evaluated.to_string(),
            d.feasible.to_string(),
            fmt_f64(d.violation),
        ];
        row.extend(d.objectives.iter().copied().map(fmt_f64));
        row.extend(d.constraints.iter().copied().map(fmt_f64));
        row.extend(d.design.iter().copied().map(fmt_f64));
        match &d.measures {
            Some(m) => row.extend(m.to_flat().into_iter().map(fmt_f64)),
            None => row.extend(std::iter::repeat_n(String::new(), MEASURE_LEN)),
        }
        w.write_record(row).map_err(internal)?;
    }
    w.into_inner().map_err(|e| CliError::Internal(e.to_string()))
}

pub fn parse_archive(path: &Path, bytes: &[u8], spec: &DesignSpec) -> Result<Vec<EvaluatedDesign>, CliError> {
    let mut r = csv::Reader::from_reader(bytes);
    let header: Vec<String> = r.headers().map_err(csv_err(path))?.iter().map(String::from).collect();
    if header != archive_header(spec) {
        return Err(CliError::format(path, "unexpected archive header"));
    }
    let n = spec.dim();
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(csv_err(path))?;
        let f: Vec<&str> = row.iter().collect();
        let num = |s: &str| parse_f64(path, s);
        let flag = |s: &str| {
            s.parse::<bool>()
                .map_err(|_| CliError::format(path, format!("not a boolean: {s:?}")))
        };
        let int = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| CliError::format(path, format!("not an integer: {s:?}")))
        };
        let c0 = 8;
        let p0 = c0 + N_CONSTRAINTS;
        let m0 = p0 + n;
        let measures = if f[m0].is_empty() {
            None
        } else {
            let flat = f[m0..].iter().map(|s| num(s)).collect::<Result<Vec<_>, _>>()?;
            Some(IntermediateMeasures::from_flat(&flat))
        };
        out.push(EvaluatedDesign {
            id: int(f[0])?,
            generation: int(f[1])? as usize,
            evaluator: parse_tag(path, f[2])?,
            physics_evaluated: flag(f[3])?,
            feasible: flag(f[4])?,
            violation: num(f[5])?,
            objectives: vec![num(f[6])?, num(f[7])?],
            constraints: f[c0..p0].iter().map(|s| num(s)).collect::<Result<_, _>>()?,
            design: DesignVector(f[p0..m0].iter().map(|s| num(s)).collect::<Result<_, _>>()?),
            measures,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontEntry {
    pub id: u64,
    pub params: Vec<f64>,
    pub kpis: KpiVector,
    pub constraints: Vec<f64>,
    pub feasible: bool,
    pub evaluator: EvaluatorTag,
}

impl FrontEntry {
    pub fn of(d: &EvaluatedDesign) -> Self {
        Self {
            id: d.id,
            params: d.design.0.clone(),
            kpis: KpiVector::from_objectives(&d.objectives),
            constraints: d.constraints.clone(),
            feasible: d.feasible,
            evaluator: d.evaluator,
        }
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.kpis.objectives().to_vec()
    }
}

pub fn history_csv(history: &[GenerationStats]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in history {
        w.serialize(s).map_err(|e| CliError::Internal(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Internal(e.to_string()))
}

pub fn parse_history(path: &Path, bytes: &[u8]) -> Result<Vec<GenerationStats>, CliError> {
    csv::Reader::from_reader(bytes)
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(csv_err(path))
}
