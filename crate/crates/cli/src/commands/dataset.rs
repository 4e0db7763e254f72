use pmsm_moo::sampling::{lhs_feasible, SamplingConfig};
use pmsm_moo::surrogate::{build_dataset, Dataset};

use crate::artifacts::{
    dataset_csv, dataset_header, parse_dataset, read_json, sidecar, verify_digest, write_atomic, write_json,
    DatasetMeta, TOOL_VERSION,
};
use crate::config::{sha256_hex, CampaignConfig};
use crate::error::CliError;

pub const META_SUFFIX: &str = ".meta.json";

/// Samples `n_lhs` geometry-feasible designs, evaluates the reference model
/// on each and writes the dataset CSV plus its metadata sidecar.
pub fn cmd_dataset(cfg: &CampaignConfig) -> Result<DatasetMeta, CliError> {
    cfg.require_seed("sampling")?;
    let spec = cfg.design_spec();
    let sampling = SamplingConfig {
        n_lhs: cfg.sampling.n_lhs,
        seed: cfg.sampling.seed,
        max_resample_rounds: cfg.sampling.max_resample_rounds,
    };
    let designs = lhs_feasible(&sampling, &spec)?;
    let ds = build_dataset(&designs);
    let bytes = dataset_csv(&spec, &ds)?;
    let path = cfg.dataset_path();
    write_atomic(&path, &bytes)?;
    let meta = DatasetMeta {
        tool_version: TOOL_VERSION.into(),
        config_hash: cfg.hash(),
        spec_hash: spec.hash(),
        seed: cfg.sampling.seed,
        n_lhs: cfg.sampling.n_lhs,
        rows: ds.len(),
        columns: dataset_header(&spec).len(),
        sha256: sha256_hex(&bytes),
    };
    write_json(&sidecar(&path, META_SUFFIX), &meta)?;
    Ok(meta)
}

/// Reads the configured dataset after checking its sidecar against the
/// config's design space and the file's content hash.
pub fn load_dataset(cfg: &CampaignConfig) -> Result<(Dataset, DatasetMeta), CliError> {
    let spec = cfg.design_spec();
    let path = cfg.dataset_path();
    let meta: DatasetMeta = read_json(&sidecar(&path, META_SUFFIX))?;
    if meta.spec_hash != spec.hash() {
        return Err(CliError::Mismatch(format!(
            "dataset {} was generated for design spec {}, config has {}",
            path.display(),
            meta.spec_hash,
            spec.hash()
        )));
    }
    let bytes = verify_digest(&path, &meta.sha256)?;
    let ds = parse_dataset(&path, &bytes, &spec)?;
    if ds.len() != meta.rows {
        return Err(CliError::format(&path, format!("{} rows, sidecar says {}", ds.len(), meta.rows)));
    }
    Ok((ds, meta))
}
