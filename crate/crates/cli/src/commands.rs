use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use dwl::bdr::{bdr_fit, PriorMode};
use dwl::datasets::{save_csv, write_dwlm, write_matrix_csv, BlobsSpec, Dataset};
use dwl::dnet::{dnet_predict, dnet_train, extract_layer_features, DNetModel, Head, LayerTag, LdSource, Prediction, TrainHistory};
use dwl::metrics::{accuracy, confusion, feature_ari_median, median};
use dwl::numerics::Matrix;

use crate::args::{BdrFitArgs, Channel, Common, DataArgs, EvalArgs, ExportArgs, GenDataArgs, Generator, LdArg, Prior, SplitPart, SweepArgs, TagArg, TrainArgs};
use crate::bundle::{load_dnet, save_bdr, save_dnet};
use crate::config::{samples_matrix, write_labels, DataSource, RunConfig};
use crate::error::{CliError, CliResult};

/// k-means restarts behind every reported feature ARI.
pub const ARI_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

/// Validation accuracy level used for the epochs-to-accuracy summaries.
pub const TARGET_VAL_ACC: f64 = 0.95;

pub const HISTORY_HEADER: &str = "epoch,train_loss,train_acc,val_loss,val_acc";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AriScores {
    pub hd_out: f64,
    pub fused: f64,
    pub pre_head: f64,
}

impl AriScores {
    pub fn get(&self, tag: LayerTag) -> f64 {
        match tag {
            LayerTag::HdOut => self.hd_out,
            LayerTag::Fused => self.fused,
            LayerTag::PreHead => self.pre_head,
        }
    }
}

/// Test-set metrics. Classification fills accuracy, confusion and ari;
/// regression fills r_squared and mse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub confusion: Option<Vec<Vec<usize>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ari: Option<AriScores>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub r_squared: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mse: Option<f64>,
}

pub fn evaluate(model: &DNetModel<f64>, ds: &Dataset<f64>) -> CliResult<EvalMetrics> {
    let n = ds.n_samples();
    match (dnet_predict(model, &ds.x)?, model.config.head) {
        (Prediction::Classes(pred), Head::Classification { k }) => {
            let cm = confusion(&pred, &ds.labels, k)?;
            let mut ari = [0.0; 3];
            for (slot, tag) in ari.iter_mut().zip(LayerTag::ALL) {
                let f = extract_layer_features(model, &ds.x, tag)?;
                *slot = feature_ari_median(&f, &ds.labels, &ARI_SEEDS)?;
            }
            Ok(EvalMetrics {
                n,
                accuracy: Some(accuracy(&pred, &ds.labels)?),
                confusion: Some(cm.counts),
                ari: Some(AriScores {
                    hd_out: ari[0],
                    fused: ari[1],
                    pre_head: ari[2],
                }),
                r_squared: None,
                mse: None,
            })
        }
        (Prediction::Values(pred), _) => {
            let target = ds
                .targets
                .as_ref()
                .ok_or_else(|| CliError::Config("regression evaluation needs targets".into()))?;
            if target.shape() != pred.shape() {
                return Err(CliError::Config(format!(
                    "targets are {}×{}, predictions {}×{}",
                    target.rows(),
                    target.cols(),
                    pred.rows(),
                    pred.cols()
                )));
            }
            let t = target.as_slice();
            let mean = t.iter().sum::<f64>() / t.len().max(1) as f64;
            let sse: f64 = pred.as_slice().iter().zip(t).map(|(p, y)| (p - y).powi(2)).sum();
            let sst: f64 = t.iter().map(|y| (y - mean).powi(2)).sum();
            Ok(EvalMetrics {
                n,
                accuracy: None,
                confusion: None,
                ari: None,
                r_squared: Some(if sst > 0.0 { 1.0 - sse / sst } else { 0.0 }),
                mse: Some(sse / t.len().max(1) as f64),
            })
        }
        _ => Err(CliError::Config("prediction kind does not match the model head".into())),
    }
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent.display(), e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path.display(), e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_text(path, &text)
}

fn json_line<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("serializable")
}

pub fn history_csv(h: &TrainHistory) -> String {
    let mut s = format!("{HISTORY_HEADER}\n");
    for e in &h.epochs {
        let _ = writeln!(s, "{},{},{},{},{}", e.epoch, e.train_loss, e.train_acc, e.val_loss, e.val_acc);
    }
    s
}

/// First epoch whose validation accuracy reaches `frac` of the best one.
pub fn epochs_to_fraction_of_best(h: &TrainHistory, frac: f64) -> usize {
    let best = h.epochs.iter().map(|e| e.val_acc).fold(f64::NEG_INFINITY, f64::max);
    h.first_epoch_reaching(frac * best).unwrap_or(h.epochs.len())
}

/// Median where missing values count as larger than any present one.
pub fn median_with_missing(values: &[Option<usize>]) -> Option<f64> {
    let v: Vec<f64> = values.iter().map(|o| o.map_or(f64::INFINITY, |e| e as f64)).collect();
    let m = median(&v);
    m.is_finite().then_some(m)
}

fn base_config(common: &Common) -> CliResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = Some(out.clone());
    }
    Ok(cfg)
}

fn apply_data_args(cfg: &mut RunConfig, data: &DataArgs) {
    if let Some(path) = &data.data {
        cfg.data.source = DataSource::Csv {
            path: path.clone(),
            label_column: Some(data.label_column.clone()),
        };
    }
}

fn output_dir(cfg: &RunConfig) -> CliResult<PathBuf> {
    cfg.output_dir
        .clone()
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set output_dir".into()))
}

fn seed_list(cfg: &RunConfig, common: &Common) -> CliResult<Vec<u64>> {
    match common.seeds {
        Some(0) => Err(CliError::Config("--seeds must be at least 1".into())),
        Some(n) => Ok((0..n as u64).map(|i| cfg.seed + i).collect()),
        None => Ok(vec![cfg.seed]),
    }
}

fn select_split(cfg: &RunConfig, part: SplitPart) -> CliResult<Dataset<f64>> {
    if part == SplitPart::All {
        return cfg.load_data();
    }
    let (train, val, test) = cfg.load_splits()?;
    Ok(match part {
        SplitPart::Train => train,
        SplitPart::Val => val,
        _ => test,
    })
}

fn layer_tag(t: TagArg) -> LayerTag {
    match t {
        TagArg::HdOut => LayerTag::HdOut,
        TagArg::Fused => LayerTag::Fused,
        TagArg::PreHead => LayerTag::PreHead,
    }
}

#[derive(Debug, Serialize)]
struct DataSummary {
    generator: &'static str,
    seed: u64,
    n: usize,
    d: usize,
    classes: usize,
    image_shape: Option<[usize; 3]>,
    files: Vec<String>,
}

pub fn gen_data(common: &Common, a: &GenDataArgs) -> CliResult<()> {
    let mut cfg = base_config(common)?;
    if let Some(g) = a.generator {
        let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| CliError::Config(format!("missing required flag --{flag}")));
        let n = need(a.n, "n")?;
        cfg.data.source = match g {
            Generator::Blobs => {
                let d = BlobsSpec::default();
                DataSource::Blobs(BlobsSpec {
                    k: a.k.unwrap_or(d.k),
                    dim: a.dim.unwrap_or(d.dim),
                    n_per_class: n,
                    spread: a.spread.unwrap_or(d.spread),
                    distractor_dims: a.distractors.unwrap_or(d.distractor_dims),
                    distractor_std: a.distractor_std.unwrap_or(d.distractor_std),
                    center_box: a.center_box.unwrap_or(d.center_box),
                })
            }
            Generator::Lowrank => DataSource::Lowrank {
                d: need(a.d, "d")?,
                n,
                rank: need(a.rank, "rank")?,
                noise: a.noise.unwrap_or(0.01),
            },
            Generator::Bars => DataSource::Bars {
                size: a.size.unwrap_or(8),
                n_per_class: n,
                noise: a.noise.unwrap_or(0.1),
            },
        };
        cfg.data.seed = None;
    } else if common.config.is_none() {
        return Err(CliError::Config("missing generator (blobs, lowrank or bars) or --config".into()));
    }
    let name = match &cfg.data.source {
        DataSource::Blobs(_) => "blobs",
        DataSource::Lowrank { .. } => "lowrank",
        DataSource::Bars { .. } => "bars",
        _ => return Err(CliError::Config("gen-data needs a generator data source".into())),
    };
    cfg.validate_data()?;
    let out = output_dir(&cfg)?;
    fs::create_dir_all(&out).map_err(|e| CliError::io(out.display(), e))?;
    let ds = cfg.load_data()?;
    let mut files = Vec::new();
    if ds.image_shape.is_some() {
        write_dwlm(&out.join("x.dwlm"), &samples_matrix(&ds))?;
        files.push("x.dwlm".to_string());
    } else {
        save_csv(&ds, &out.join("data.csv"))?;
        files.push("data.csv".to_string());
    }
    write_labels(&out.join("labels.csv"), &ds.labels)?;
    files.push("labels.csv".to_string());
    if let DataSource::Lowrank { d, n, rank, noise } = &cfg.data.source {
        let mut rng = dwl::numerics::SeededRng::new(cfg.data_seed());
        let (_, basis) = dwl::datasets::make_lowrank::<f64>(&mut rng, *d, *n, *rank, *noise)?;
        write_dwlm(&out.join("basis.dwlm"), &basis)?;
        files.push("basis.dwlm".to_string());
    }
    let summary = DataSummary {
        generator: name,
        seed: cfg.data_seed(),
        n: ds.n_samples(),
        d: ds.dim(),
        classes: ds.n_classes(),
        image_shape: ds.image_shape,
        files,
    };
    write_json(&out.join("dataset.json"), &summary)?;
    println!("{} samples x {} features, {} classes -> {}", summary.n, summary.d, summary.classes, out.display());
    println!("{}", json_line(&summary));
    Ok(())
}

#[derive(Debug, Serialize)]
struct BdrFitSummary {
    iterations: usize,
    converged: bool,
    retained: usize,
    final_delta: f64,
    requested: usize,
    input_dim: usize,
    n: usize,
}

pub fn bdr_fit_cmd(common: &Common, a: &BdrFitArgs) -> CliResult<()> {
    let mut cfg = base_config(common)?;
    apply_data_args(&mut cfg, &a.data);
    if let Some(p) = a.prior {
        cfg.bdr.prior_mode = match p {
            Prior::Ard => PriorMode::Ard,
            Prior::ElementWise => PriorMode::ElementWise,
        };
    }
    if let Some(r) = a.r {
        cfg.bdr.r = r;
    }
    if let Some(v) = a.sigma_z_sq {
        cfg.bdr.sigma_z_sq = v;
    }
    if let Some(v) = a.max_iter {
        cfg.bdr.max_iter = v;
    }
    if let Some(v) = a.tol {
        cfg.bdr.tol = v;
    }
    if let Some(v) = a.bdr_seed {
        cfg.bdr.seed = v;
    }
    cfg.bdr.validate()?;
    let out = output_dir(&cfg)?;
    let ds = cfg.load_data()?;
    let model = bdr_fit(&ds.x, &cfg.bdr)?;
    save_bdr(&out, &model)?;
    write_text(&out.join("config.json"), &(cfg.to_json() + "\n"))?;
    let summary = BdrFitSummary {
        iterations: model.report.iterations_run,
        converged: model.report.converged,
        retained: model.n_components(),
        final_delta: model.report.final_delta,
        requested: cfg.bdr.r,
        input_dim: ds.dim(),
        n: ds.n_samples(),
    };
    write_json(&out.join("report.json"), &summary)?;
    println!("{}", json_line(&summary));
    Ok(())
}

/// Sets the LD source from the arm flags.
pub fn resolve_arm(cfg: &mut RunConfig, channel: Option<Channel>, ld: Option<LdArg>, r: Option<usize>) -> CliResult<()> {
    if let Some(r) = r {
        cfg.bdr.r = r;
        match &mut cfg.dnet.ld_source {
            LdSource::Bdr(b) => b.r = r,
            LdSource::Pca { r: pr } => *pr = r,
            LdSource::None => {}
        }
    }
    cfg.dnet.ld_source = match (channel, ld) {
        (Some(Channel::Single), None | Some(LdArg::Off)) | (None, Some(LdArg::Off)) => LdSource::None,
        (Some(Channel::Single), Some(_)) => {
            return Err(CliError::Config("--channel single cannot take an LD source".into()));
        }
        (Some(Channel::Dual), Some(LdArg::Off)) => {
            return Err(CliError::Config("--channel dual needs --ld bdr or --ld pca".into()));
        }
        (_, Some(LdArg::Bdr)) => LdSource::Bdr(cfg.bdr.clone()),
        (_, Some(LdArg::Pca)) => LdSource::Pca { r: cfg.bdr.r },
        (Some(Channel::Dual), None) if cfg.dnet.ld_source == LdSource::None => {
            return Err(CliError::Config("--channel dual needs an LD source in the config or via --ld".into()));
        }
        (_, None) => cfg.dnet.ld_source.clone(),
    };
    Ok(())
}

/// Result of training one seed.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub model: DNetModel<f64>,
    pub history: TrainHistory,
    pub metrics: EvalMetrics,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub stopped_early: bool,
    /// First epoch with validation accuracy >= 0.95.
    pub epochs_to_95: Option<usize>,
    pub ld_width: usize,
    pub test_accuracy: Option<f64>,
}

impl SeedRun {
    pub fn summary(&self) -> TrainSummary {
        TrainSummary {
            seed: self.seed,
            epochs_run: self.history.epochs.len(),
            best_epoch: self.history.best_epoch,
            stopped_early: self.history.stopped_early,
            epochs_to_95: self.history.first_epoch_reaching(TARGET_VAL_ACC),
            ld_width: self.model.ld_width(),
            test_accuracy: self.metrics.accuracy.or(self.metrics.r_squared),
        }
    }
}

/// Trains on the config's data for its run seed and scores the test split.
pub fn train_seed(cfg: &RunConfig) -> CliResult<SeedRun> {
    let started = Instant::now();
    let (train, val, test) = cfg.load_splits()?;
    let tcfg = dwl::dnet::TrainConfig {
        seed: cfg.seed,
        ..cfg.train.clone()
    };
    let (model, history) = dnet_train(&cfg.dnet, &tcfg, &train, &val)?;
    let metrics = evaluate(&model, &test)?;
    Ok(SeedRun {
        seed: cfg.seed,
        model,
        history,
        metrics,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

/// Writes config, history, metrics, summary and model bundle for one seed.
pub fn write_seed_outputs(dir: &Path, cfg: &RunConfig, run: &SeedRun) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))?;
    let mut echoed = cfg.clone();
    echoed.output_dir = Some(dir.to_path_buf());
    write_text(&dir.join("config.json"), &(echoed.to_json() + "\n"))?;
    write_text(&dir.join("history.csv"), &history_csv(&run.history))?;
    write_json(&dir.join("metrics.json"), &run.metrics)?;
    write_json(&dir.join("train_summary.json"), &run.summary())?;
    let metrics = serde_json::to_value(&run.metrics).expect("serializable");
    save_dnet(&dir.join("model"), &run.model, Some(metrics))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSeedSummary {
    pub seeds: Vec<u64>,
    pub runs: Vec<TrainSummary>,
    pub median_test_accuracy: f64,
    /// Missing runs count as slower than every finished one; None when the
    /// median itself is missing.
    pub median_epochs_to_95: Option<f64>,
}

pub fn train_cmd(common: &Common, a: &TrainArgs) -> CliResult<()> {
    let mut cfg = base_config(common)?;
    apply_data_args(&mut cfg, &a.data);
    resolve_arm(&mut cfg, a.channel, a.ld, a.r)?;
    if let Some(e) = a.max_epochs {
        cfg.train.max_epochs = e;
    }
    cfg.validate()?;
    let out = output_dir(&cfg)?;
    let seeds = seed_list(&cfg, common)?;
    let multi = common.seeds.is_some();
    let mut summaries = Vec::new();
    println!("{:>6} {:>7} {:>6} {:>9} {:>9}", "seed", "epochs", "best", "ep_to_95", "test_acc");
    for &seed in &seeds {
        let scfg = cfg.for_seed(seed);
        let run = train_seed(&scfg)?;
        let dir = if multi { out.join(format!("seed_{seed}")) } else { out.clone() };
        write_seed_outputs(&dir, &scfg, &run)?;
        let s = run.summary();
        println!(
            "{:>6} {:>7} {:>6} {:>9} {:>9.4}",
            s.seed,
            s.epochs_run,
            s.best_epoch,
            s.epochs_to_95.map_or("-".to_string(), |e| e.to_string()),
            s.test_accuracy.unwrap_or(f64::NAN)
        );
        println!("{}", json_line(&run.metrics));
        summaries.push(s);
    }
    if multi {
        let summary = MultiSeedSummary {
            seeds: seeds.clone(),
            median_test_accuracy: median(&summaries.iter().map(|s| s.test_accuracy.unwrap_or(f64::NAN)).collect::<Vec<_>>()),
            median_epochs_to_95: median_with_missing(&summaries.iter().map(|s| s.epochs_to_95).collect::<Vec<_>>()),
            runs: summaries,
        };
        let mut echoed = cfg.clone();
        echoed.output_dir = Some(out.clone());
        write_text(&out.join("config.json"), &(echoed.to_json() + "\n"))?;
        write_json(&out.join("summary.json"), &summary)?;
        println!("{}", json_line(&summary));
    }
    Ok(())
}

pub fn eval_cmd(common: &Common, a: &EvalArgs) -> CliResult<()> {
    let mut cfg = base_config(common)?;
    apply_data_args(&mut cfg, &a.data);
    cfg.split.validate()?;
    let model = load_dnet(&a.model)?;
    let ds = select_split(&cfg, a.split)?;
    let metrics = evaluate(&model, &ds)?;
    if let Some(out) = &common.out {
        write_json(&out.join("metrics.json"), &metrics)?;
    }
    if let Some(acc) = metrics.accuracy {
        println!("n = {}, accuracy = {acc:.4}", metrics.n);
    }
    println!("{}", json_line(&metrics));
    Ok(())
}

pub const SWEEP_HEADER: &str = "r,seed,r_eff,test_accuracy,epochs_to_95pct_of_best,wall_time";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub r: usize,
    pub seed: u64,
    pub r_eff: usize,
    pub test_accuracy: f64,
    pub epochs_to_95pct_of_best: usize,
    pub wall_time: f64,
}

/// Per-(r, seed) rows followed by one median row per r.
pub fn sweep_csv(rows: &[SweepRow], rs: &[usize]) -> String {
    let mut s = format!("{SWEEP_HEADER}\n");
    for row in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:.3}",
            row.r, row.seed, row.r_eff, row.test_accuracy, row.epochs_to_95pct_of_best, row.wall_time
        );
    }
    for &r in rs {
        let of: Vec<&SweepRow> = rows.iter().filter(|row| row.r == r).collect();
        let col = |f: &dyn Fn(&SweepRow) -> f64| median(&of.iter().map(|row| f(row)).collect::<Vec<_>>());
        let _ = writeln!(
            s,
            "{},median,{},{},{},{:.3}",
            r,
            col(&|row| row.r_eff as f64),
            col(&|row| row.test_accuracy),
            col(&|row| row.epochs_to_95pct_of_best as f64),
            col(&|row| row.wall_time)
        );
    }
    s
}

pub fn sweep_cmd(common: &Common, a: &SweepArgs) -> CliResult<()> {
    let mut cfg = base_config(common)?;
    apply_data_args(&mut cfg, &a.data);
    if let Some(e) = a.max_epochs {
        cfg.train.max_epochs = e;
    }
    if a.ld == LdArg::Off {
        return Err(CliError::Config("sweep-components needs --ld bdr or --ld pca".into()));
    }
    if a.r.iter().any(|&r| r == 0) {
        return Err(CliError::Config("component counts must be at least 1".into()));
    }
    let mut rs = a.r.clone();
    rs.dedup();
    cfg.validate()?;
    let out = output_dir(&cfg)?;
    let seeds = seed_list(&cfg, common)?;
    let mut rows = Vec::new();
    println!("{:>4} {:>6} {:>5} {:>9} {:>7} {:>8}", "r", "seed", "r_eff", "test_acc", "ep_95%", "time_s");
    for &r in &rs {
        for &seed in &seeds {
            let mut scfg = cfg.for_seed(seed);
            resolve_arm(&mut scfg, Some(Channel::Dual), Some(a.ld), Some(r))?;
            let run = train_seed(&scfg)?;
            let row = SweepRow {
                r,
                seed,
                r_eff: run.model.ld_width(),
                test_accuracy: run.metrics.accuracy.or(run.metrics.r_squared).unwrap_or(f64::NAN),
                epochs_to_95pct_of_best: epochs_to_fraction_of_best(&run.history, 0.95),
                wall_time: run.wall_time,
            };
            println!(
                "{:>4} {:>6} {:>5} {:>9.4} {:>7} {:>8.2}",
                row.r, row.seed, row.r_eff, row.test_accuracy, row.epochs_to_95pct_of_best, row.wall_time
            );
            rows.push(row);
        }
    }
    let mut echoed = cfg.clone();
    echoed.output_dir = Some(out.clone());
    write_text(&out.join("config.json"), &(echoed.to_json() + "\n"))?;
    write_text(&out.join("sweep.csv"), &sweep_csv(&rows, &rs))?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ExportSummary {
    tag: &'static str,
    n: usize,
    width: usize,
    ari: f64,
}

pub fn export_cmd(common: &Common, a: &ExportArgs) -> CliResult<()> {
    let mut cfg = base_config(common)?;
    apply_data_args(&mut cfg, &a.data);
    cfg.split.validate()?;
    let out = output_dir(&cfg)?;
    let model = load_dnet(&a.model)?;
    let ds = select_split(&cfg, a.split)?;
    let tag = layer_tag(a.tag);
    let features: Matrix<f64> = extract_layer_features(&model, &ds.x, tag)?;
    fs::create_dir_all(&out).map_err(|e| CliError::io(out.display(), e))?;
    write_dwlm(&out.join("features.dwlm"), &features)?;
    let header: Vec<String> = (0..features.cols()).map(|j| format!("f{j}")).collect();
    write_matrix_csv(&features, Some(&header), &out.join("features.csv"))?;
    write_labels(&out.join("labels.csv"), &ds.labels)?;
    let summary = ExportSummary {
        tag: tag.name(),
        n: features.rows(),
        width: features.cols(),
        ari: feature_ari_median(&features, &ds.labels, &ARI_SEEDS)?,
    };
    println!("{}", json_line(&summary));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use dwl::dnet::EpochRecord;

    fn history(vals: &[f64]) -> TrainHistory {
        TrainHistory {
            epochs: vals
                .iter()
                .enumerate()
                .map(|(i, &v)| EpochRecord {
                    epoch: i + 1,
                    train_loss: 1.0,
                    train_acc: v,
                    val_loss: 1.0,
                    val_acc: v,
                })
                .collect(),
            best_epoch: 1,
            stopped_early: false,
        }
    }

    #[test]
    fn history_csv_rows_match_epochs() {
        let h = history(&[0.5, 0.75, 1.0]);
        let text = history_csv(&h);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], HISTORY_HEADER);
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[2], "2,1,0.75,1,0.75");
    }

    #[test]
    fn fraction_of_best() {
        let h = history(&[0.5, 0.9, 0.96, 1.0]);
        assert_eq!(epochs_to_fraction_of_best(&h, 0.95), 3);
        assert_eq!(epochs_to_fraction_of_best(&h, 0.5), 1);
    }

    #[test]
    fn missing_values_sort_last() {
        assert_eq!(median_with_missing(&[Some(3), None, Some(5)]), Some(5.0));
        assert_eq!(median_with_missing(&[Some(3), None, None]), None);
        assert_eq!(median_with_missing(&[Some(4), Some(2)]), Some(3.0));
    }

    #[test]
    fn arm_resolution() {
        let mut c = RunConfig::default();
        resolve_arm(&mut c, Some(Channel::Single), None, None).unwrap();
        assert_eq!(c.dnet.ld_source, LdSource::None);
        assert!(resolve_arm(&mut c.clone(), Some(Channel::Dual), None, None).is_err());
        resolve_arm(&mut c, None, Some(LdArg::Pca), Some(6)).unwrap();
        assert_eq!(c.dnet.ld_source, LdSource::Pca { r: 6 });
        assert!(resolve_arm(&mut c, Some(Channel::Single), Some(LdArg::Bdr), None).is_err());
        let mut d = RunConfig::default();
        resolve_arm(&mut d, None, None, Some(9)).unwrap();
        assert!(matches!(&d.dnet.ld_source, LdSource::Bdr(b) if b.r == 9));
    }

    #[test]
    fn sweep_median_rows() {
        let rows = vec![
            SweepRow { r: 2, seed: 0, r_eff: 2, test_accuracy: 0.9, epochs_to_95pct_of_best: 4, wall_time: 0.1 },
            SweepRow { r: 2, seed: 1, r_eff: 2, test_accuracy: 0.8, epochs_to_95pct_of_best: 6, wall_time: 0.1 },
        ];
        let csv = sweep_csv(&rows, &[2]);
        assert_eq!(csv.lines().last().unwrap(), "2,median,2,0.8500000000000001,5,0.100");
    }
}
