use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dwl::bdr::BdrConfig;
use dwl::datasets::{load_csv, make_bars_with_noise, make_blobs, make_lowrank, read_dwlm, split, BlobsSpec, Dataset, SplitSpec};
use dwl::dnet::{Aggregation, DNetConfig, Head, LdSource, TrainConfig};
use dwl::nn::{chain_shapes, LayerSpec};
use dwl::numerics::{Matrix, SeededRng};

use crate::error::{CliError, CliResult};

/// Where samples come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Blobs(BlobsSpec),
    Lowrank { d: usize, n: usize, rank: usize, noise: f64 },
    Bars { size: usize, n_per_class: usize, noise: f64 },
    /// Header row required; `label_column` defaults to "label".
    Csv { path: PathBuf, label_column: Option<String> },
    /// Samples as rows of a binary matrix plus a one-column labels CSV.
    Dwlm {
        path: PathBuf,
        labels: PathBuf,
        image_shape: Option<[usize; 3]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    /// Generator seed; the run seed is used when absent.
    #[serde(default)]
    pub seed: Option<u64>,
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data: DataConfig,
    /// The split seed is replaced by the run seed.
    pub split: SplitSpec,
    /// Used by `bdr-fit` and by `train --ld bdr`.
    pub bdr: BdrConfig,
    pub dnet: DNetConfig,
    /// The training seed is replaced by the run seed.
    pub train: TrainConfig,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
}

pub const DEFAULT_COMPONENTS: usize = 4;

impl Default for RunConfig {
    /// Three blobs in 5 informative dimensions with 20 distractors, and a
    /// dual-channel classifier for it.
    fn default() -> Self {
        let blobs = BlobsSpec {
            k: 3,
            dim: 5,
            n_per_class: 200,
            spread: 1.5,
            distractor_dims: 20,
            distractor_std: 1.0,
            center_box: 10.0,
        };
        let bdr = BdrConfig {
            r: DEFAULT_COMPONENTS,
            ..BdrConfig::default()
        };
        Self {
            data: DataConfig {
                source: DataSource::Blobs(blobs),
                seed: None,
            },
            split: SplitSpec::default(),
            dnet: DNetConfig {
                hd_layers: vec![LayerSpec::Dense { in_dim: 25, out_dim: 8 }, LayerSpec::Relu],
                ld_source: LdSource::Bdr(bdr.clone()),
                aggregation: Aggregation::Concat,
                fusion_width: 32,
                fusion_relu: true,
                head: Head::Classification { k: 3 },
                ld_standardize: true,
                input_standardize: true,
            },
            bdr,
            train: TrainConfig {
                max_epochs: 200,
                ..TrainConfig::default()
            },
            output_dir: None,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn data_seed(&self) -> u64 {
        self.data.seed.unwrap_or(self.seed)
    }

    /// Copy with split and training seeds tied to `seed`.
    pub fn for_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.seed = seed;
        c.split.seed = seed;
        c.train.seed = seed;
        c
    }

    /// Per-sample input shape implied by the data source, when known
    /// without reading files.
    pub fn expected_input_shape(&self) -> Option<Vec<usize>> {
        match &self.data.source {
            DataSource::Blobs(b) => Some(vec![b.dim + b.distractor_dims]),
            DataSource::Lowrank { d, .. } => Some(vec![*d]),
            DataSource::Bars { size, .. } => Some(vec![1, *size, *size]),
            DataSource::Csv { .. } => None,
            DataSource::Dwlm { image_shape, .. } => image_shape.map(|s| s.to_vec()),
        }
    }

    /// Checks everything that can be checked before touching data.
    pub fn validate(&self) -> CliResult<()> {
        self.split.validate()?;
        self.bdr.validate()?;
        self.train.validate()?;
        self.validate_data()?;
        validate_dnet(&self.dnet)?;
        if let Some(shape) = self.expected_input_shape() {
            chain_shapes(&self.dnet.hd_layers, &shape)?;
        }
        Ok(())
    }

    pub fn validate_data(&self) -> CliResult<()> {
        match &self.data.source {
            DataSource::Blobs(b) => {
                if b.k < 2 || b.dim == 0 || b.n_per_class == 0 || !(b.spread >= 0.0) || !(b.distractor_std >= 0.0) {
                    return Err(CliError::Config(format!("blobs need k >= 2, dim >= 1, n >= 1 and non-negative spreads, got {b:?}")));
                }
            }
            DataSource::Lowrank { d, n, rank, noise } => {
                if *rank == 0 || rank > d.min(n) || !(*noise >= 0.0) {
                    return Err(CliError::Config(format!("lowrank needs 1 <= rank <= min(d, n) and noise >= 0 (d = {d}, n = {n}, rank = {rank})")));
                }
            }
            DataSource::Bars { size, n_per_class, noise } => {
                if *size < 4 || *n_per_class == 0 || !(*noise >= 0.0) {
                    return Err(CliError::Config(format!("bars need size >= 4 and n_per_class >= 1 (got {size}, {n_per_class})")));
                }
            }
            DataSource::Csv { .. } | DataSource::Dwlm { .. } => {}
        }
        Ok(())
    }

    pub fn load_data(&self) -> CliResult<Dataset<f64>> {
        let mut rng = SeededRng::new(self.data_seed());
        let ds = match &self.data.source {
            DataSource::Blobs(spec) => make_blobs(&mut rng, spec)?,
            DataSource::Lowrank { d, n, rank, noise } => make_lowrank(&mut rng, *d, *n, *rank, *noise)?.0,
            DataSource::Bars { size, n_per_class, noise } => make_bars_with_noise(&mut rng, *size, *n_per_class, *noise)?,
            DataSource::Csv { path, label_column } => load_csv(path, Some(label_column.as_deref().unwrap_or("label")))?,
            DataSource::Dwlm { path, labels, image_shape } => {
                let rows = read_dwlm(path)?;
                let labels = read_labels(labels)?;
                let ds = Dataset::classification(rows.transpose(), labels)?;
                match image_shape {
                    Some(s) => ds.with_image_shape(*s)?,
                    None => ds,
                }
            }
        };
        Ok(ds)
    }

    pub fn load_splits(&self) -> CliResult<(Dataset<f64>, Dataset<f64>, Dataset<f64>)> {
        let ds = self.load_data()?;
        let spec = SplitSpec {
            seed: self.seed,
            ..self.split.clone()
        };
        Ok(split(&ds, &spec)?)
    }
}

pub fn validate_dnet(c: &DNetConfig) -> CliResult<()> {
    if c.fusion_width == 0 || c.head.out_dim() == 0 {
        return Err(CliError::Config("fusion_width and the head size must be at least 1".into()));
    }
    match &c.ld_source {
        LdSource::Bdr(b) => b.validate()?,
        LdSource::Pca { r } if *r == 0 => return Err(CliError::Config("pca r must be at least 1".into())),
        _ => {}
    }
    Ok(())
}

/// One integer label per line under a `label` header.
pub fn read_labels(path: &Path) -> CliResult<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("label") {
        return Err(CliError::Io(format!("{}: expected a 'label' header", path.display())));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse()
                .map_err(|_| CliError::Io(format!("{}: line {}: '{}' is not a label", path.display(), i + 2, l.trim())))
        })
        .collect()
}

pub fn write_labels(path: &Path, labels: &[usize]) -> CliResult<()> {
    let mut s = String::from("label\n");
    for l in labels {
        s.push_str(&l.to_string());
        s.push('\n');
    }
    std::fs::write(path, s).map_err(|e| CliError::io(path.display(), e))
}

/// Samples as rows.
pub fn samples_matrix(ds: &Dataset<f64>) -> Matrix<f64> {
    ds.x.transpose()
}
