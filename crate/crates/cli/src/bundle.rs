use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use dwl::bdr::{BdrConfig, BdrModel, FitReport, PrecisionMeans, PriorMode};
use dwl::datasets::{read_dwlm, write_dwlm, Standardizer};
use dwl::dnet::{DNetConfig, DNetModel, LdModel};
use dwl::nn::Tensor;
use dwl::numerics::Matrix;

use crate::error::{CliError, CliResult};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BundleKind {
    Dnet,
    Bdr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorEntry {
    pub file: String,
    pub shape: Vec<usize>,
}

/// Everything about a BDR fit that is not a matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BdrEntry {
    pub config: BdrConfig,
    pub retained: Vec<usize>,
    pub iterations_run: usize,
    pub converged: bool,
    pub final_delta: f64,
    pub delta_history: Vec<f64>,
    pub canonical_energy: Vec<f64>,
    pub relative_precision: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LdEntry {
    Bdr(BdrEntry),
    Pca,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub kind: BundleKind,
    pub dnet: Option<DNetConfig>,
    pub input_shape: Vec<usize>,
    pub n_hd_params: usize,
    pub params: Vec<TensorEntry>,
    pub input_stats: bool,
    pub ld: LdEntry,
    pub ld_stats: bool,
    pub metrics: Option<serde_json::Value>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::io(path.display(), e)
}

fn put(dir: &Path, name: &str, m: &Matrix<f64>) -> CliResult<()> {
    let p = dir.join(name);
    write_dwlm(&p, m).map_err(|e| io_err(&p, e))
}

fn get(dir: &Path, name: &str) -> CliResult<Matrix<f64>> {
    let p = dir.join(name);
    read_dwlm(&p).map_err(|e| io_err(&p, e))
}

fn column(v: &[f64]) -> Matrix<f64> {
    Matrix::column_vector(v)
}

fn put_stats(dir: &Path, prefix: &str, s: &Standardizer<f64>) -> CliResult<()> {
    put(dir, &format!("{prefix}_mean.dwlm"), &column(&s.mean))?;
    put(dir, &format!("{prefix}_std.dwlm"), &column(&s.std))
}

fn get_stats(dir: &Path, prefix: &str) -> CliResult<Standardizer<f64>> {
    Ok(Standardizer {
        mean: get(dir, &format!("{prefix}_mean.dwlm"))?.into_vec(),
        std: get(dir, &format!("{prefix}_std.dwlm"))?.into_vec(),
    })
}

fn put_bdr(dir: &Path, prefix: &str, m: &BdrModel<f64>) -> CliResult<BdrEntry> {
    put(dir, &format!("{prefix}basis.dwlm"), &m.q_orth)?;
    put(dir, &format!("{prefix}r_upper.dwlm"), &m.r_upper)?;
    put(dir, &format!("{prefix}center.dwlm"), &column(&m.center))?;
    let phi = match &m.report.phi_final {
        PrecisionMeans::ElementWise(p) => p.clone(),
        PrecisionMeans::Ard(v) => column(v),
    };
    put(dir, &format!("{prefix}phi.dwlm"), &phi)?;
    let r = &m.report;
    Ok(BdrEntry {
        config: m.config.clone(),
        retained: m.retained.clone(),
        iterations_run: r.iterations_run,
        converged: r.converged,
        final_delta: r.final_delta,
        delta_history: r.delta_history.clone(),
        canonical_energy: r.canonical_energy.clone(),
        relative_precision: r.relative_precision.clone(),
    })
}

fn get_bdr(dir: &Path, prefix: &str, e: &BdrEntry) -> CliResult<BdrModel<f64>> {
    let phi = get(dir, &format!("{prefix}phi.dwlm"))?;
    let phi_final = match e.config.prior_mode {
        PriorMode::ElementWise => PrecisionMeans::ElementWise(phi),
        PriorMode::Ard => PrecisionMeans::Ard(phi.into_vec()),
    };
    Ok(BdrModel {
        q_orth: get(dir, &format!("{prefix}basis.dwlm"))?,
        r_upper: get(dir, &format!("{prefix}r_upper.dwlm"))?,
        center: get(dir, &format!("{prefix}center.dwlm"))?.into_vec(),
        retained: e.retained.clone(),
        config: e.config.clone(),
        report: FitReport {
            iterations_run: e.iterations_run,
            converged: e.converged,
            final_delta: e.final_delta,
            delta_history: e.delta_history.clone(),
            phi_final,
            canonical_energy: e.canonical_energy.clone(),
            relative_precision: e.relative_precision.clone(),
        },
    })
}

fn write_manifest(dir: &Path, m: &Manifest) -> CliResult<()> {
    let p = dir.join(MANIFEST);
    let mut text = serde_json::to_string_pretty(m).expect("manifest serializes");
    text.push('\n');
    fs::write(&p, text).map_err(|e| io_err(&p, e))
}

pub fn read_manifest(dir: &Path) -> CliResult<Manifest> {
    let p = dir.join(MANIFEST);
    let text = fs::read_to_string(&p).map_err(|e| io_err(&p, e))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    if m.format_version != FORMAT_VERSION {
        return Err(CliError::Io(format!("{}: unsupported bundle version {}", p.display(), m.format_version)));
    }
    Ok(m)
}

fn prepare_dir(dir: &Path) -> CliResult<()> {
    let params = dir.join("params");
    if params.is_dir() {
        fs::remove_dir_all(&params).map_err(|e| io_err(&params, e))?;
    }
    fs::create_dir_all(&params).map_err(|e| io_err(&params, e))
}

/// Tensors are stored as `shape[0] × rest` matrices; the manifest keeps the
/// full shape.
fn tensor_matrix(t: &Tensor<f64>) -> Matrix<f64> {
    let rows = t.shape().first().copied().unwrap_or(1);
    let cols = if rows == 0 { 0 } else { t.len() / rows };
    Matrix::from_vec(rows, cols, t.as_slice().to_vec()).expect("shape product")
}

pub fn save_dnet(dir: &Path, model: &DNetModel<f64>, metrics: Option<serde_json::Value>) -> CliResult<()> {
    prepare_dir(dir)?;
    let mut params = Vec::with_capacity(model.params.len());
    for (i, t) in model.params.iter().enumerate() {
        let file = format!("params/p{i:03}.dwlm");
        put(dir, &file, &tensor_matrix(t))?;
        params.push(TensorEntry {
            file,
            shape: t.shape().to_vec(),
        });
    }
    if let Some(s) = &model.input_stats {
        put_stats(dir, "input", s)?;
    }
    if let Some(s) = &model.ld_stats {
        put_stats(dir, "ld", s)?;
    }
    let ld = match &model.ld {
        LdModel::Bdr(b) => LdEntry::Bdr(put_bdr(dir, "ld_", b)?),
        LdModel::Pca { basis, center } => {
            put(dir, "ld_basis.dwlm", basis)?;
            put(dir, "ld_center.dwlm", &column(center))?;
            LdEntry::Pca
        }
        LdModel::None => LdEntry::None,
    };
    write_manifest(
        dir,
        &Manifest {
            format_version: FORMAT_VERSION,
            kind: BundleKind::Dnet,
            dnet: Some(model.config.clone()),
            input_shape: model.input_shape.clone(),
            n_hd_params: model.n_hd_params,
            params,
            input_stats: model.input_stats.is_some(),
            ld,
            ld_stats: model.ld_stats.is_some(),
            metrics,
        },
    )
}

pub fn load_dnet(dir: &Path) -> CliResult<DNetModel<f64>> {
    let m = read_manifest(dir)?;
    let config = match (m.kind, m.dnet) {
        (BundleKind::Dnet, Some(c)) => c,
        _ => return Err(CliError::Config(format!("{} is not a dual-channel model bundle", dir.display()))),
    };
    let mut params = Vec::with_capacity(m.params.len());
    for e in &m.params {
        let mat = get(dir, &e.file)?;
        let t = Tensor::from_vec(&e.shape, mat.into_vec()).map_err(|err| CliError::Io(format!("{}: {err}", e.file)))?;
        params.push(t);
    }
    let ld = match &m.ld {
        LdEntry::Bdr(e) => LdModel::Bdr(get_bdr(dir, "ld_", e)?),
        LdEntry::Pca => LdModel::Pca {
            basis: get(dir, "ld_basis.dwlm")?,
            center: get(dir, "ld_center.dwlm")?.into_vec(),
        },
        LdEntry::None => LdModel::None,
    };
    let input_stats = if m.input_stats { Some(get_stats(dir, "input")?) } else { None };
    let ld_stats = if m.ld_stats { Some(get_stats(dir, "ld")?) } else { None };
    Ok(DNetModel {
        config,
        input_shape: m.input_shape,
        input_stats,
        ld,
        ld_stats,
        params,
        n_hd_params: m.n_hd_params,
    })
}

pub fn save_bdr(dir: &Path, model: &BdrModel<f64>) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let entry = put_bdr(dir, "", model)?;
    write_manifest(
        dir,
        &Manifest {
            format_version: FORMAT_VERSION,
            kind: BundleKind::Bdr,
            dnet: None,
            input_shape: vec![model.input_dim()],
            n_hd_params: 0,
            params: Vec::new(),
            input_stats: false,
            ld: LdEntry::Bdr(entry),
            ld_stats: false,
            metrics: None,
        },
    )
}

pub fn load_bdr(dir: &Path) -> CliResult<BdrModel<f64>> {
    let m = read_manifest(dir)?;
    match (m.kind, &m.ld) {
        (BundleKind::Bdr, LdEntry::Bdr(e)) => get_bdr(dir, "", e),
        _ => Err(CliError::Config(format!("{} is not a BDR bundle", dir.display()))),
    }
}
