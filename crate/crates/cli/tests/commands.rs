//! Command-level behavior on small campaigns.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use pmsm_moo::surrogate::network::Network;
use pmsm_moo::surrogate::persist::{from_bytes, to_bytes};
use pmsm_moo_cli::artifacts::{read_json, sidecar, write_atomic, write_json, FrontEntry, ModelMeta};
use pmsm_moo_cli::commands::optimize::{FRONT, MANIFEST};
use pmsm_moo_cli::commands::{
    cmd_benchmark, cmd_compare, cmd_dataset, cmd_optimize, cmd_predict_plot, cmd_train, Bundle, RunManifest,
};
use pmsm_moo_cli::config::sha256_hex;
use pmsm_moo_cli::{CampaignConfig, Suite, Variant};
use tempfile::TempDir;

const SMALL: &str = r#"
[sampling]
n_lhs = 60
seed = 11
[training]
seed = 12
test_holdout = 10
max_epochs = 15
[optimizer]
seed = 13
population_size = 8
max_generations = 3
"#;

fn setup(text: &str) -> (TempDir, CampaignConfig) {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), text).unwrap();
    let cfg = CampaignConfig::load(&dir.path().join("c.toml")).unwrap();
    (dir, cfg)
}

fn trained(text: &str) -> (TempDir, CampaignConfig) {
    let (dir, cfg) = setup(text);
    cmd_dataset(&cfg).unwrap();
    cmd_train(&cfg).unwrap();
    (dir, cfg)
}

fn rewrite_front(dir: &Path, f: impl Fn(&mut FrontEntry)) {
    let mut manifest: RunManifest = read_json(&dir.join(MANIFEST)).unwrap();
    let mut front: Vec<FrontEntry> = read_json(&dir.join(FRONT)).unwrap();
    front.iter_mut().for_each(f);
    let bytes = serde_json::to_vec(&front).unwrap();
    write_atomic(&dir.join(FRONT), &bytes).unwrap();
    manifest.files.insert(FRONT.into(), sha256_hex(&bytes));
    write_json(&dir.join(MANIFEST), &manifest).unwrap();
}

fn copy_bundle(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for e in fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        fs::copy(e.path(), to.join(e.file_name())).unwrap();
    }
}

#[test]
fn dataset_shape_and_regeneration() {
    let (_d, cfg) = setup(&SMALL.replace("n_lhs = 60", "n_lhs = 10"));
    let meta = cmd_dataset(&cfg).unwrap();
    let first = fs::read(cfg.dataset_path()).unwrap();
    let mut r = csv::Reader::from_reader(first.as_slice());
    assert_eq!(r.headers().unwrap().len(), 179);
    assert_eq!(r.records().count(), 10);
    assert_eq!((meta.rows, meta.columns, meta.n_lhs, meta.seed), (10, 179, 10, 11));
    cmd_dataset(&cfg).unwrap();
    assert_eq!(fs::read(cfg.dataset_path()).unwrap(), first);
}

#[test]
fn consumers_reject_a_foreign_or_corrupt_dataset() {
    let (dir, cfg) = setup(SMALL);
    cmd_dataset(&cfg).unwrap();
    let other = CampaignConfig::parse(&format!("{SMALL}\n[spec.limits]\nr_max = 118.0\n"), dir.path()).unwrap();
    assert_eq!(cmd_train(&other).unwrap_err().exit_code(), 2);

    let mut bytes = fs::read(cfg.dataset_path()).unwrap();
    let last = bytes.len() - 2;
    bytes[last] = if bytes[last] == b'1' { b'2' } else { b'1' };
    fs::write(cfg.dataset_path(), bytes).unwrap();
    assert_eq!(cmd_train(&cfg).unwrap_err().exit_code(), 4);
}

#[test]
fn train_report_and_rerun() {
    let (_d, cfg) = trained(SMALL);
    let path = cfg.results_dir().join("training/metrics.json");
    let report: serde_json::Value = read_json(&path).unwrap();
    for key in ["flux", "scalar", "max_power", "cost"] {
        assert!(report["test"][key]["r2"].is_number(), "{key}");
        assert!(report["validation"][key]["mape"].is_number(), "{key}");
    }
    assert_eq!(report["n_test"], 10);
    let first = fs::read(&path).unwrap();
    let model = fs::read(cfg.model_path()).unwrap();
    cmd_train(&cfg).unwrap();
    assert_eq!(fs::read(&path).unwrap(), first);
    assert_eq!(fs::read(cfg.model_path()).unwrap(), model);
}

#[test]
fn too_few_samples_is_a_config_error() {
    let (_d, cfg) = setup(&SMALL.replace("n_lhs = 60", "n_lhs = 20"));
    cmd_dataset(&cfg).unwrap();
    assert_eq!(cmd_train(&cfg).unwrap_err().exit_code(), 2);
}

#[test]
fn runs_share_generation_zero_and_factor2_doubles() {
    let (_d, cfg) = trained(SMALL);
    let c = cmd_optimize(&cfg, Variant::Classical).unwrap();
    let h = cmd_optimize(&cfg, Variant::Hybrid).unwrap();
    let f = cmd_optimize(&cfg, Variant::Factor2).unwrap();
    assert_eq!(f.evaluations, 2 * h.evaluations);
    assert_eq!(f.paired_evaluations, Some(h.evaluations));
    assert_eq!(c.reference_point, h.reference_point);
    assert_eq!(c.reference_point, f.reference_point);

    let spec = cfg.design_spec();
    let gen0 = |v: Variant| -> Vec<_> {
        Bundle::load(&cfg.bundle_dir(v))
            .unwrap()
            .archive(&spec)
            .unwrap()
            .into_iter()
            .filter(|d| d.generation == 0)
            .map(|d| d.design)
            .collect()
    };
    assert_eq!(gen0(Variant::Classical).len(), 8);
    assert_eq!(gen0(Variant::Classical), gen0(Variant::Hybrid));
    assert_eq!(gen0(Variant::Classical), gen0(Variant::Factor2));

    for v in Variant::ALL {
        let b = Bundle::load(&cfg.bundle_dir(v)).unwrap();
        let t = b.timing().unwrap();
        assert_eq!(t.evaluations, b.manifest.evaluations);
        assert!(t.seconds_per_evaluation > 0.0);
        assert_eq!(b.history.len(), b.manifest.generations + 1);
        assert!(b.front.iter().all(|e| e.feasible && e.params.len() == 14 && e.constraints.len() == 6));
    }
}

#[test]
fn hybrid_needs_a_model() {
    let (_d, cfg) = setup(SMALL);
    assert_eq!(cmd_optimize(&cfg, Variant::Hybrid).unwrap_err().exit_code(), 4);
}

#[test]
fn evaluator_failure_writes_a_partial_bundle() {
    let (_d, cfg) = trained(SMALL);
    let path = cfg.model_path();
    let mut model = from_bytes(&fs::read(&path).unwrap()).unwrap();
    let n = Network::param_count(&model.network.arch);
    model.network = Network::from_params(model.network.arch.clone(), vec![f64::NAN; n]).unwrap();
    let bytes = to_bytes(&model);
    fs::write(&path, &bytes).unwrap();
    let meta_path = sidecar(&path, ".meta.json");
    let mut meta: ModelMeta = read_json(&meta_path).unwrap();
    meta.sha256 = sha256_hex(&bytes);
    write_json(&meta_path, &meta).unwrap();

    let e = cmd_optimize(&cfg, Variant::Hybrid).unwrap_err();
    assert_eq!(e.exit_code(), 5);
    let manifest: RunManifest = read_json(&cfg.bundle_dir(Variant::Hybrid).join(MANIFEST)).unwrap();
    assert!(!manifest.complete && manifest.error.is_some());
    assert!(Bundle::load(&cfg.bundle_dir(Variant::Hybrid)).is_ok());
}

#[test]
fn compare_self_and_dominated() {
    let (dir, cfg) = setup(SMALL);
    cmd_optimize(&cfg, Variant::Classical).unwrap();
    let a = cfg.bundle_dir(Variant::Classical);
    let r = cmd_compare(&cfg, &a, &a, &dir.path().join("self")).unwrap();
    assert_eq!(r.hypervolume_ratio, 1.0);
    assert_eq!((r.coverage_ab, r.coverage_ba), (1.0, 1.0));
    assert!(r.a_reevaluated.is_none());
    let plot = fs::read_to_string(dir.path().join("self/fronts.csv")).unwrap();
    assert_eq!(plot.lines().next(), Some("front,k1,k2"));
    assert_eq!(plot.lines().count(), 1 + 2 * r.a.size);

    let b = dir.path().join("worse");
    copy_bundle(&a, &b);
    rewrite_front(&b, |e| {
        e.kpis.max_power_w *= 0.9;
        e.kpis.cost *= 1.1;
    });
    let r = cmd_compare(&cfg, &a, &b, &dir.path().join("cmp")).unwrap();
    assert!(r.a.hypervolume > r.b.hypervolume);
    assert_eq!(r.coverage_ab, 1.0);
    assert_eq!(r.coverage_ba, 0.0);
}

#[test]
fn compare_rejects_other_kpi_definitions() {
    let (dir, cfg) = setup(SMALL);
    cmd_optimize(&cfg, Variant::Classical).unwrap();
    let a = cfg.bundle_dir(Variant::Classical);
    let b = dir.path().join("other");
    copy_bundle(&a, &b);
    let mut m: RunManifest = read_json(&b.join(MANIFEST)).unwrap();
    m.kpi_hash = "0".repeat(64);
    write_json(&b.join(MANIFEST), &m).unwrap();
    assert_eq!(cmd_compare(&cfg, &a, &b, &dir.path().join("x")).unwrap_err().exit_code(), 2);
}

#[test]
fn predict_plot_of_a_perfect_surrogate_is_the_diagonal() {
    let (dir, cfg) = setup(SMALL);
    cmd_optimize(&cfg, Variant::Classical).unwrap();
    let a = cfg.bundle_dir(Variant::Classical);
    assert_eq!(cmd_predict_plot(&cfg, &a, &dir.path().join("p")).unwrap_err().exit_code(), 2);

    // classical KPIs relabeled as predictions: prediction equals reference
    let b = dir.path().join("relabeled");
    copy_bundle(&a, &b);
    rewrite_front(&b, |e| e.evaluator = pmsm_moo::optimizer::EvaluatorTag::Surrogate);
    let mut m: RunManifest = read_json(&b.join(MANIFEST)).unwrap();
    m.evaluator = pmsm_moo::optimizer::EvaluatorTag::Surrogate;
    write_json(&b.join(MANIFEST), &m).unwrap();
    let s = cmd_predict_plot(&cfg, &b, &dir.path().join("p")).unwrap();
    let front_size = Bundle::load(&b).unwrap().front.len();
    assert_eq!(s.rows, front_size);
    assert_eq!(s.max_power.r2, 1.0);
    assert_eq!(s.max_power.mape, 0.0);
    assert_eq!(s.reference_feasible, front_size);
    let rows = fs::read_to_string(dir.path().join("p/scatter.csv")).unwrap();
    assert_eq!(rows.lines().count(), front_size + 1);
}

#[test]
fn benchmark_reports() {
    let (_d, cfg) = setup("[optimizer]\nseed = 1\npopulation_size = 40\nmax_generations = 60\n");
    let r = cmd_benchmark(&cfg, Suite::ConstrainedDemo).unwrap();
    assert_eq!(r.points_in_excluded_region, Some(0));
    assert!(r.hypervolume <= r.analytic_hypervolume + 1e-9);
    assert!(r.hypervolume_ratio > 0.9, "{}", r.hypervolume_ratio);
    assert!(r.generational_distance < 0.05);
    assert!(cfg.results_dir().join("benchmark/constrained-demo/report.json").exists());
    let r = cmd_benchmark(&cfg, Suite::Zdt2).unwrap();
    assert!(r.points_in_excluded_region.is_none());
    assert_eq!(r.n_vars, 30);
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pmsm-moo"))
}

fn exit_code(dir: &Path, config: &str, args: &[&str]) -> i32 {
    let path: PathBuf = dir.join("c.toml");
    fs::write(&path, config).unwrap();
    let out = bin().arg("-c").arg(&path).args(args).output().unwrap();
    out.status.code().unwrap()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = bin().args(["-c", "/nonexistent/c.toml", "dataset"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(4));
    assert_eq!(exit_code(d, "[sampling]\nseed = 1\nn_lhs = 4\n", &["dataset"]), 0);
    assert_eq!(exit_code(d, "[sampling]\nn_lhs = 4\n", &["dataset"]), 2);
    assert_eq!(exit_code(d, "[sampling]\nseed = 1\nbogus = 4\n", &["dataset"]), 2);
    assert_eq!(exit_code(d, "[sampling]\nseed = 1\n", &["run"]), 2);
    assert_eq!(
        exit_code(d, "[sampling]\nseed = 1\nn_lhs = 4\nmax_resample_rounds = 2\n[spec.limits]\nr_max = 60.0\n", &["dataset"]),
        3
    );
    let (_t, cfg) = setup(SMALL);
    let toml_path = cfg.base_dir.join("c.toml");
    let out = bin().arg("-c").arg(&toml_path).args(["optimize", "hybrid"]).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
    let out = bin().arg("-c").arg(&toml_path).args(["optimize", "classical"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let manifest: RunManifest = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(manifest.variant, Variant::Classical);
}
