//! Experiment harness: declarative run configs, seeded sweep runners for the
//! main grid / cold-start / ablations / dimension analysis, and CSV + JSON
//! report emission.

use crate::connector::ConnectVariant;
use crate::error::{Error, Result};
use crate::graph::{
    generate_movielens_like, generate_synthetic, load_movielens, load_typed_edges,
    sample_negatives, split_edges, HetGraph, MovielensLikeConfig, SplitSpec, SynthConfig,
};
use crate::metrics::{accuracy, auc, mae, rmse};
use crate::model::{
    predict_pairs, train, AblationFlags, TaskMode, TrainConfig, TrainOutput,
};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Where the graph comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DatasetSpec {
    Movielens {
        ratings: PathBuf,
        movies: PathBuf,
    },
    Typed {
        nodes: PathBuf,
        edges: PathBuf,
    },
    Canonical {
        path: PathBuf,
    },
    SyntheticLink {
        #[serde(flatten)]
        config: SynthConfig,
    },
    /// Generated rating corpus in the MovieLens layout; files are cached
    /// under `cache_dir` (keyed by config) and reused when present.
    SyntheticMovielens {
        #[serde(default)]
        config: MovielensLikeConfig,
        #[serde(default)]
        cache_dir: Option<PathBuf>,
    },
}

impl DatasetSpec {
    pub fn load(&self) -> Result<HetGraph> {
        match self {
            DatasetSpec::Movielens { ratings, movies } => {
                Ok(load_movielens(ratings, movies)?.0)
            }
            DatasetSpec::Typed { nodes, edges } => Ok(load_typed_edges(nodes, edges)?.0),
            DatasetSpec::Canonical { path } => HetGraph::load_canonical(path),
            DatasetSpec::SyntheticLink { config } => generate_synthetic(config),
            DatasetSpec::SyntheticMovielens { config, cache_dir } => {
                let dir = match cache_dir {
                    Some(dir) => dir.clone(),
                    None => {
                        let mut hasher = Sha256::new();
                        hasher.update(serde_json::to_string(config)?.as_bytes());
                        let digest = hasher.finalize();
                        std::env::temp_dir().join(format!(
                            "hanrec-standin-{:02x}{:02x}{:02x}{:02x}",
                            digest[0], digest[1], digest[2], digest[3]
                        ))
                    }
                };
                let ratings = dir.join("ratings.csv");
                let movies = dir.join("movies.csv");
                if !(ratings.exists() && movies.exists()) {
                    generate_movielens_like(config, &dir)?;
                }
                Ok(load_movielens(ratings, movies)?.0)
            }
        }
    }
}

/// Declarative description of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    #[serde(default = "default_ratios")]
    pub ratios: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    #[serde(default = "default_variants")]
    pub variants: Vec<String>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_ratios() -> Vec<f64> {
    vec![0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}

fn default_dims() -> Vec<usize> {
    vec![32, 64, 128, 256]
}

fn default_variants() -> Vec<String> {
    [
        "Full",
        "HANRec-C",
        "HANRec-Homo",
        "HANRec-Hete",
        "HANRec-Att",
        "Connecting-FB",
        "Connecting-RB",
    ]
    .map(String::from)
    .to_vec()
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.ratios.is_empty() {
            return Err(Error::Config("ratio list must be non-empty".into()));
        }
        for &r in &self.ratios {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::Config(format!("train ratio {} outside (0, 1)", r)));
            }
        }
        for &d in &self.dims {
            if d == 0 {
                return Err(Error::Config("dimensions must be positive".into()));
            }
        }
        self.train.validate()
    }

    pub fn config_hash(&self) -> Result<String> {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_string(self)?.as_bytes());
        Ok(hasher
            .finalize()
            .iter()
            .map(|b| format!("{:02x}", b))
            .collect())
    }
}

/// One sweep cell's outcome. Failed cells carry the error text instead of
/// metrics; sweeps keep going.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub task: TaskMode,
    pub ratio: f64,
    pub seed: u64,
    pub dim: usize,
    pub variant: String,
    pub mae: Option<f64>,
    pub rmse: Option<f64>,
    pub auc: Option<f64>,
    pub accuracy: Option<f64>,
    pub baseline_mae: Option<f64>,
    pub baseline_rmse: Option<f64>,
    pub baseline_auc: Option<f64>,
    pub baseline_accuracy: Option<f64>,
    pub seconds: f64,
    pub iterations: usize,
    pub nprime_pairs: usize,
    pub connector_input_extent: usize,
    pub error: Option<String>,
    pub warnings: Option<String>,
}

/// Resolve an ablation-variant name to its component switches.
/// Accepted: Full, HANRec-C / -C, HANRec-Homo / -Homo, HANRec-Hete / -Hete,
/// HANRec-Att / -Att, Connecting-FB, Connecting-RB (case-insensitive).
pub fn parse_variant(name: &str) -> Result<(AblationFlags, ConnectVariant, &'static str)> {
    let mut flags = AblationFlags::default();
    let lower = name.to_ascii_lowercase();
    let canonical = match lower.as_str() {
        "full" | "hanrec" => "Full",
        "hanrec-c" | "-c" => {
            flags.disable_connect = true;
            "HANRec-C"
        }
        "hanrec-homo" | "-homo" => {
            flags.disable_homo = true;
            "HANRec-Homo"
        }
        "hanrec-hete" | "-hete" => {
            flags.disable_hetero = true;
            "HANRec-Hete"
        }
        "hanrec-att" | "-att" => {
            flags.disable_attention = true;
            "HANRec-Att"
        }
        "connecting-fb" => return Ok((flags, ConnectVariant::FeatureBased, "Connecting-FB")),
        "connecting-rb" => return Ok((flags, ConnectVariant::RelationBased, "Connecting-RB")),
        _ => return Err(Error::Config(format!("unknown variant name {:?}", name))),
    };
    Ok((flags, ConnectVariant::Full, canonical))
}

/// Split, train, and evaluate one sweep cell. Training errors come back as a
/// report row with `error` set.
pub fn run_cell<S: Scalar>(
    g: &HetGraph,
    ratio: f64,
    seed: u64,
    base: &TrainConfig,
    variant: &str,
) -> MetricReport {
    let mut report = MetricReport {
        task: base.task,
        ratio,
        seed,
        dim: base.d,
        variant: variant.to_string(),
        mae: None,
        rmse: None,
        auc: None,
        accuracy: None,
        baseline_mae: None,
        baseline_rmse: None,
        baseline_auc: None,
        baseline_accuracy: None,
        seconds: 0.0,
        iterations: base.iterations,
        nprime_pairs: 0,
        connector_input_extent: 0,
        error: None,
        warnings: None,
    };
    match run_cell_inner::<S>(g, ratio, seed, base, variant, &mut report) {
        Ok(()) => report,
        Err(e) => {
            report.error = Some(e.to_string());
            report
        }
    }
}

fn run_cell_inner<S: Scalar>(
    g: &HetGraph,
    ratio: f64,
    seed: u64,
    base: &TrainConfig,
    variant: &str,
    report: &mut MetricReport,
) -> Result<()> {
    let (flags, connect_variant, _) = parse_variant(variant)?;
    let mut cfg = base.clone();
    cfg.seed = seed;
    cfg.flags = flags;
    cfg.variant = connect_variant;

    let start = Instant::now();
    let (train_edges, test_edges) = split_edges(
        g,
        SplitSpec {
            train_ratio: ratio,
            seed,
        },
    )?;
    let mut warnings = Vec::new();
    if test_edges.is_empty() {
        warnings.push("empty test set (train ratio 1.0)".to_string());
        log::warn!("empty test set for ratio {}", ratio);
    }
    let train_graph = g.with_edges(train_edges);
    let out: TrainOutput<S> = train(&train_graph, &cfg)?;
    report.nprime_pairs = out.nprime_pairs;
    report.connector_input_extent = out.connector_input_extent;

    if !test_edges.is_empty() {
        let scale = g.scale();
        match cfg.task {
            TaskMode::Rating => {
                let triples: Vec<(usize, usize, f64)> = test_edges
                    .iter()
                    .map(|e| (e.a, e.b, scale.value_of(e.level as usize)))
                    .collect();
                let preds =
                    predict_pairs(&out.model, &train_graph, &out.pools, &triples, cfg.task)?;
                let p: Vec<f64> = preds.iter().map(|x| x.prediction).collect();
                let t: Vec<f64> = preds.iter().map(|x| x.truth).collect();
                report.mae = Some(mae(&p, &t)?);
                report.rmse = Some(rmse(&p, &t)?);
                let mean_pred = vec![out.train_mean; t.len()];
                report.baseline_mae = Some(mae(&mean_pred, &t)?);
                report.baseline_rmse = Some(rmse(&mean_pred, &t)?);
            }
            TaskMode::Link => {
                // held-out positives plus an equal number of links
                // disconnected in the original graph
                let negatives = sample_negatives(g, test_edges.len(), None, seed)?;
                let mut triples: Vec<(usize, usize, f64)> = test_edges
                    .iter()
                    .map(|e| (e.a, e.b, 1.0))
                    .collect();
                triples.extend(negatives.iter().map(|&(a, b)| (a, b, 0.0)));
                let preds =
                    predict_pairs(&out.model, &train_graph, &out.pools, &triples, cfg.task)?;
                let scores: Vec<f64> = preds.iter().map(|x| x.prediction).collect();
                let labels: Vec<bool> = preds.iter().map(|x| x.truth > 0.5).collect();
                report.auc = Some(auc(&scores, &labels)?);
                report.accuracy = Some(accuracy(&scores, &labels, 0.5)?);
                // random-scorer baseline
                use rand::Rng;
                let mut rng = crate::rng::stream_rng(seed, crate::rng::Stream::TestNegatives);
                let random_scores: Vec<f64> =
                    (0..labels.len()).map(|_| rng.gen::<f64>()).collect();
                report.baseline_auc = Some(auc(&random_scores, &labels)?);
                report.baseline_accuracy = Some(accuracy(&random_scores, &labels, 0.5)?);
            }
        }
    }
    report.seconds = start.elapsed().as_secs_f64();
    if !warnings.is_empty() {
        report.warnings = Some(warnings.join("; "));
    }
    Ok(())
}

/// Main-results sweep: every ratio × seed with the configured model.
pub fn run_main<S: Scalar>(cfg: &ExperimentConfig) -> Result<Vec<MetricReport>> {
    cfg.validate()?;
    let g = cfg.dataset.load()?;
    let mut cells = Vec::new();
    for &ratio in &cfg.ratios {
        for &seed in &cfg.seeds {
            cells.push(run_cell::<S>(&g, ratio, seed, &cfg.train, "Full"));
        }
    }
    write_reports(cfg, "main", &cells)?;
    Ok(cells)
}

/// Cold-start sweep over sparse ratios (each must lie in [0.05, 0.25]).
pub fn run_cold_start<S: Scalar>(cfg: &ExperimentConfig) -> Result<Vec<MetricReport>> {
    if cfg.ratios.is_empty() {
        return Err(Error::Config("cold-start ratio list must be non-empty".into()));
    }
    for &r in &cfg.ratios {
        if !(0.05 - 1e-9..=0.25 + 1e-9).contains(&r) {
            return Err(Error::Config(format!(
                "cold-start ratio {} outside [0.05, 0.25]",
                r
            )));
        }
    }
    cfg.validate()?;
    let g = cfg.dataset.load()?;
    let mut cells = Vec::new();
    for &ratio in &cfg.ratios {
        for &seed in &cfg.seeds {
            cells.push(run_cell::<S>(&g, ratio, seed, &cfg.train, "Full"));
        }
    }
    write_reports(cfg, "cold_start", &cells)?;
    Ok(cells)
}

/// Ablation sweep: each variant trained under identical seeds and splits.
pub fn run_ablation<S: Scalar>(cfg: &ExperimentConfig) -> Result<Vec<MetricReport>> {
    cfg.validate()?;
    if cfg.variants.is_empty() {
        return Err(Error::Config("variant list must be non-empty".into()));
    }
    let mut canonical = Vec::with_capacity(cfg.variants.len());
    for name in &cfg.variants {
        canonical.push(parse_variant(name)?.2);
    }
    let g = cfg.dataset.load()?;
    let mut cells = Vec::new();
    for variant in canonical {
        for &ratio in &cfg.ratios {
            for &seed in &cfg.seeds {
                cells.push(run_cell::<S>(&g, ratio, seed, &cfg.train, variant));
            }
        }
    }
    write_reports(cfg, "ablation", &cells)?;
    Ok(cells)
}

/// Dimension sweep: one run per embedding size per seed.
pub fn run_dim_sweep<S: Scalar>(cfg: &ExperimentConfig) -> Result<Vec<MetricReport>> {
    cfg.validate()?;
    if cfg.dims.is_empty() {
        return Err(Error::Config("dimension list must be non-empty".into()));
    }
    let g = cfg.dataset.load()?;
    let mut cells = Vec::new();
    for &d in &cfg.dims {
        let mut train_cfg = cfg.train.clone();
        train_cfg.d = d;
        for &ratio in &cfg.ratios {
            for &seed in &cfg.seeds {
                cells.push(run_cell::<S>(&g, ratio, seed, &train_cfg, "Full"));
            }
        }
    }
    write_reports(cfg, "dim_sweep", &cells)?;
    Ok(cells)
}

/// Training-loss curve as CSV with the exact header `iteration,loss`.
pub fn emit_loss_curve(curve: &[(usize, f64)], path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("iteration,loss\n");
    for (iter, loss) in curve {
        out.push_str(&format!("{},{}\n", iter, loss));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Median with the usual even-count average.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite metric"));
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Per-group medians over seeds, grouped by (variant, ratio, dim).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianRow {
    pub variant: String,
    pub ratio: f64,
    pub dim: usize,
    pub seeds: usize,
    pub mae: Option<f64>,
    pub rmse: Option<f64>,
    pub auc: Option<f64>,
    pub accuracy: Option<f64>,
    pub baseline_mae: Option<f64>,
    pub baseline_rmse: Option<f64>,
    pub baseline_auc: Option<f64>,
    pub baseline_accuracy: Option<f64>,
}

pub fn median_rows(cells: &[MetricReport]) -> Vec<MedianRow> {
    let mut keys: Vec<(String, u64, usize)> = Vec::new();
    for c in cells {
        let key = (c.variant.clone(), c.ratio.to_bits(), c.dim);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.iter()
        .map(|(variant, ratio_bits, dim)| {
            let group: Vec<&MetricReport> = cells
                .iter()
                .filter(|c| {
                    &c.variant == variant && c.ratio.to_bits() == *ratio_bits && c.dim == *dim
                })
                .collect();
            let collect = |f: fn(&MetricReport) -> Option<f64>| -> Vec<f64> {
                group.iter().filter_map(|c| f(c)).collect()
            };
            MedianRow {
                variant: variant.clone(),
                ratio: f64::from_bits(*ratio_bits),
                dim: *dim,
                seeds: group.len(),
                mae: median(&collect(|c| c.mae)),
                rmse: median(&collect(|c| c.rmse)),
                auc: median(&collect(|c| c.auc)),
                accuracy: median(&collect(|c| c.accuracy)),
                baseline_mae: median(&collect(|c| c.baseline_mae)),
                baseline_rmse: median(&collect(|c| c.baseline_rmse)),
                baseline_auc: median(&collect(|c| c.baseline_auc)),
                baseline_accuracy: median(&collect(|c| c.baseline_accuracy)),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub cells: Vec<MetricReport>,
    pub total_seconds: f64,
}

pub fn write_cells_csv(path: impl AsRef<Path>, cells: &[MetricReport]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for cell in cells {
        writer.serialize(cell)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_cells_csv(path: impl AsRef<Path>) -> Result<Vec<MetricReport>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

fn write_reports(cfg: &ExperimentConfig, stem: &str, cells: &[MetricReport]) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    write_cells_csv(cfg.out_dir.join(format!("{stem}_cells.csv")), cells)?;

    let medians = median_rows(cells);
    let mut writer = csv::Writer::from_path(cfg.out_dir.join(format!("{stem}_median.csv")))?;
    for row in &medians {
        writer.serialize(row)?;
    }
    writer.flush()?;

    let summary = RunSummary {
        config_hash: cfg.config_hash()?,
        config: cfg.clone(),
        cells: cells.to_vec(),
        total_seconds: cells.iter().map(|c| c.seconds).sum(),
    };
    std::fs::write(
        cfg.out_dir.join(format!("{stem}_summary.json")),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests;
