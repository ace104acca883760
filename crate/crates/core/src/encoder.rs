//! Classification encoder and Neural Collapse diagnostics.
//!
//! The encoder is one [`DenseNet`]: a trunk ending in an `L2Normalize` layer
//! of width `p` (the latent sphere) followed by a linear head producing `n`
//! logits. Training minimizes softmax cross-entropy over all windows with
//! their clip index as label. The trunk output of a window is its feature;
//! per-class normalized feature means are the skill centers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsio;
use crate::motion::{dataset_windows, featurize_window, MotionDataset, DEFAULT_STRIDE_S, DEFAULT_WINDOW_S};
use crate::nn::{adam_step, format, softmax_cross_entropy, Activation, AdamState, DenseNet, LayerSpec, Matrix};
use crate::rng::{streams, RngSeed};
use crate::sphere::{dot, normalize, uniform_point, UnitVector};

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub latent_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub hidden: Vec<usize>,
    pub window_s: f64,
    pub stride_s: f64,
    /// Uniform samples per center for the per-epoch uniformity variance.
    pub uniformity_samples: usize,
    pub seed: RngSeed,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            latent_dim: 64,
            epochs: 2000,
            learning_rate: 0.01,
            batch_size: 64,
            hidden: vec![256, 128],
            window_s: DEFAULT_WINDOW_S,
            stride_s: DEFAULT_STRIDE_S,
            uniformity_samples: 1000,
            seed: RngSeed(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel {
    pub net: DenseNet,
    pub window_s: f64,
    pub stride_s: f64,
    pub class_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderSidecar {
    pub p: usize,
    pub n: usize,
    pub window_s: f64,
    pub stride_s: f64,
    pub class_names: Vec<String>,
}

impl EncoderModel {
    /// Builds an untrained encoder with the given architecture.
    pub fn init(input_dim: usize, classes: usize, cfg: &EncoderConfig, class_names: Vec<String>) -> Result<Self> {
        let mut specs: Vec<LayerSpec> = cfg.hidden.iter().map(|&w| LayerSpec::new(w, Activation::Relu)).collect();
        specs.push(LayerSpec::new(cfg.latent_dim, Activation::L2Normalize));
        specs.push(LayerSpec::new(classes, Activation::Identity));
        let net = DenseNet::init(input_dim, &specs, cfg.seed.stream(streams::INIT))?;
        Ok(EncoderModel {
            net,
            window_s: cfg.window_s,
            stride_s: cfg.stride_s,
            class_names,
        })
    }

    pub fn latent_dim(&self) -> usize {
        let l2 = self.latent_layer();
        self.net.layers()[l2].output_dim()
    }

    pub fn classes(&self) -> usize {
        self.net.output_dim()
    }

    fn latent_layer(&self) -> usize {
        self.net.l2_layer().expect("encoder has an l2_normalize layer")
    }

    /// `(features, logits)` for a batch of window feature rows.
    pub fn forward(&self, inputs: &Matrix) -> Result<(Matrix, Matrix)> {
        let (logits, cache) = self.net.forward(inputs)?;
        Ok((cache.layer_output(self.latent_layer()).clone(), logits))
    }

    pub fn features(&self, inputs: &Matrix) -> Result<Matrix> {
        self.forward(inputs).map(|(f, _)| f)
    }

    pub fn sidecar(&self) -> EncoderSidecar {
        EncoderSidecar {
            p: self.latent_dim(),
            n: self.classes(),
            window_s: self.window_s,
            stride_s: self.stride_s,
            class_names: self.class_names.clone(),
        }
    }

    /// Writes the network to `path` and the sidecar to [`sidecar_path`].
    pub fn save(&self, path: &Path) -> Result<()> {
        fsio::write_atomic(path, &format::encode(&self.net))?;
        let mut json = serde_json::to_vec_pretty(&self.sidecar()).expect("serializable");
        json.push(b'\n');
        fsio::write_atomic(&sidecar_path(path), &json)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let net = format::decode(&fsio::read(path)?)?;
        let side_path = sidecar_path(path);
        let sidecar: EncoderSidecar = serde_json::from_slice(&fsio::read(&side_path)?)
            .map_err(|e| Error::BadModelFile(format!("{}: {e}", side_path.display())))?;
        let model = EncoderModel {
            net,
            window_s: sidecar.window_s,
            stride_s: sidecar.stride_s,
            class_names: sidecar.class_names.clone(),
        };
        if model.net.l2_layer().is_none()
            || model.latent_dim() != sidecar.p
            || model.classes() != sidecar.n
            || sidecar.class_names.len() != sidecar.n
        {
            return Err(Error::BadModelFile(format!(
                "{} does not match the network in {}",
                side_path.display(),
                path.display()
            )));
        }
        Ok(model)
    }
}

/// `model.ncse` → `model.ncse.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Window features of a dataset with their class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    pub inputs: Matrix,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl WindowSet {
    pub fn build(dataset: &MotionDataset, window_s: f64, stride_s: f64) -> Result<Self> {
        let windows = dataset_windows(dataset, window_s, stride_s)?;
        let rows: Vec<Vec<f64>> = windows.iter().map(|w| featurize_window(dataset, w)).collect();
        Ok(WindowSet {
            inputs: Matrix::from_rows(&rows)?,
            labels: windows.iter().map(|w| w.clip_index).collect(),
            classes: dataset.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMeans {
    pub means: Vec<UnitVector>,
    pub counts: Vec<usize>,
}

/// Normalized per-class means of feature rows.
pub fn class_means_from_features(features: &Matrix, labels: &[usize], classes: usize) -> Result<ClassMeans> {
    let p = features.cols();
    let mut sums = vec![vec![0.0; p]; classes];
    let mut counts = vec![0usize; classes];
    for (row, &label) in features.row_iter().zip(labels) {
        if label >= classes {
            return Err(Error::LabelOutOfRange { label, classes });
        }
        counts[label] += 1;
        sums[label].iter_mut().zip(row).for_each(|(s, x)| *s += x);
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass(empty));
    }
    let means = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &c)| normalize(s.into_iter().map(|x| x / c as f64).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassMeans { means, counts })
}

pub fn compute_class_means(model: &EncoderModel, dataset: &MotionDataset) -> Result<ClassMeans> {
    let set = WindowSet::build(dataset, model.window_s, model.stride_s)?;
    class_means_from_features(&model.features(&set.inputs)?, &set.labels, set.classes)
}

/// Average over classes of the mean squared distance of features to their class mean.
pub fn nc1_from_features(features: &Matrix, labels: &[usize], means: &ClassMeans) -> Result<f64> {
    let n = means.means.len();
    let mut sums = vec![0.0; n];
    let mut counts = vec![0usize; n];
    for (row, &label) in features.row_iter().zip(labels) {
        if label >= n {
            return Err(Error::LabelOutOfRange { label, classes: n });
        }
        let m = means.means[label].as_slice();
        if m.len() != row.len() {
            return Err(Error::DimensionMismatch {
                expected: m.len(),
                actual: row.len(),
            });
        }
        sums[label] += row.iter().zip(m).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        counts[label] += 1;
    }
    let mut total = 0.0;
    for (c, (s, k)) in sums.iter().zip(&counts).enumerate() {
        if *k == 0 {
            return Err(Error::EmptyClass(c));
        }
        total += s / *k as f64;
    }
    Ok(total / n as f64)
}

pub fn nc1_variability(model: &EncoderModel, dataset: &MotionDataset, means: &ClassMeans) -> Result<f64> {
    let set = WindowSet::build(dataset, model.window_s, model.stride_s)?;
    nc1_from_features(&model.features(&set.inputs)?, &set.labels, means)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nc2Stats {
    pub mean_cosine: f64,
    pub cosine_std: f64,
    /// `|mean_cosine + 1/(n-1)|`.
    pub etf_gap: f64,
    /// False when `p < n - 1`, where no simplex ETF fits.
    pub feasible: bool,
}

/// Pairwise-cosine statistics of class means (population standard deviation).
pub fn nc2_etf_deviation(means: &[UnitVector]) -> Result<Nc2Stats> {
    let n = means.len();
    if n < 2 {
        return Err(Error::SingleClassDataset(n));
    }
    let mut cosines = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            cosines.push(means[i].dot(&means[j])?);
        }
    }
    let k = cosines.len() as f64;
    let mean = cosines.iter().sum::<f64>() / k;
    let var = cosines.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / k;
    let target = -1.0 / (n as f64 - 1.0);
    Ok(Nc2Stats {
        mean_cosine: mean,
        cosine_std: var.sqrt(),
        etf_gap: (mean - target).abs(),
        feasible: means[0].dim() + 1 >= n,
    })
}

/// Index of the mean with the smallest cosine distance to `z`; ties go to
/// the lowest index.
pub fn nearest_center(z: &UnitVector, means: &[UnitVector]) -> Result<usize> {
    nearest_center_slice(z.as_slice(), means)
}

pub(crate) fn nearest_center_slice(z: &[f64], means: &[UnitVector]) -> Result<usize> {
    if means.is_empty() {
        return Err(Error::InvalidArgument("no centers".into()));
    }
    let mut best = 0;
    let mut best_dot = f64::NEG_INFINITY;
    for (i, m) in means.iter().enumerate() {
        if m.dim() != z.len() {
            return Err(Error::DimensionMismatch {
                expected: m.dim(),
                actual: z.len(),
            });
        }
        let d = dot(z, m.as_slice());
        if d > best_dot {
            best = i;
            best_dot = d;
        }
    }
    Ok(best)
}

/// Population variance of a count vector.
pub fn count_variance(counts: &[usize]) -> f64 {
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<usize>() as f64 / n;
    counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / n
}

/// Draws `samples_per_center · n` uniform points, assigns each to its nearest
/// mean and returns the per-center counts and their population variance.
pub fn uniformity_variance(means: &[UnitVector], samples_per_center: usize, seed: RngSeed) -> Result<(Vec<usize>, f64)> {
    let n = means.len();
    if n < 2 {
        return Err(Error::SingleClassDataset(n));
    }
    let p = means[0].dim();
    let mut rng = seed.stream(streams::UNIFORMITY).rng();
    let mut counts = vec![0usize; n];
    for _ in 0..samples_per_center * n {
        let z = uniform_point(&mut rng, p);
        counts[nearest_center(&z, means)?] += 1;
    }
    let var = count_variance(&counts);
    Ok((counts, var))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub nc1: f64,
    pub nc2_gap: f64,
    pub mean_cosine: f64,
    pub uniformity_variance: f64,
}

/// `initial` describes the untrained network (epoch 0); `epochs[i]` the state
/// after epoch `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    pub initial: EpochRecord,
    pub epochs: Vec<EpochRecord>,
}

impl TrainingTrace {
    pub fn last(&self) -> &EpochRecord {
        self.epochs.last().unwrap_or(&self.initial)
    }

    pub fn records(&self) -> impl Iterator<Item = &EpochRecord> {
        std::iter::once(&self.initial).chain(&self.epochs)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,nc1,nc2_gap,uniformity_variance\n");
        for r in self.records() {
            writeln!(out, "{},{},{},{},{}", r.epoch, r.loss, r.nc1, r.nc2_gap, r.uniformity_variance).unwrap();
        }
        out
    }
}

fn evaluate(model: &EncoderModel, set: &WindowSet, epoch: usize, cfg: &EncoderConfig) -> Result<EpochRecord> {
    let (features, logits) = model.forward(&set.inputs)?;
    let (loss, _) = softmax_cross_entropy(&logits, &set.labels)?;
    let means = class_means_from_features(&features, &set.labels, set.classes)?;
    let nc1 = nc1_from_features(&features, &set.labels, &means)?;
    let nc2 = nc2_etf_deviation(&means.means)?;
    let (_, uniformity) = uniformity_variance(&means.means, cfg.uniformity_samples, cfg.seed)?;
    Ok(EpochRecord {
        epoch,
        loss,
        nc1,
        nc2_gap: nc2.etf_gap,
        mean_cosine: nc2.mean_cosine,
        uniformity_variance: uniformity,
    })
}

/// Minibatch Adam on shuffled windows; every epoch is followed by a
/// full-dataset evaluation.
pub fn train_encoder(dataset: &MotionDataset, cfg: &EncoderConfig) -> Result<(EncoderModel, TrainingTrace)> {
    if dataset.len() < 2 {
        return Err(Error::SingleClassDataset(dataset.len()));
    }
    if cfg.batch_size == 0 || cfg.latent_dim < 2 {
        return Err(Error::InvalidArgument("batch_size must be ≥ 1 and latent_dim ≥ 2".into()));
    }
    let set = WindowSet::build(dataset, cfg.window_s, cfg.stride_s)?;
    if set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut model = EncoderModel::init(set.inputs.cols(), set.classes, cfg, dataset.class_names())?;
    let mut adam = AdamState::for_params(cfg.learning_rate, &model.net.params());
    let initial = evaluate(&model, &set, 0, cfg)?;
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut shuffle = cfg.seed.stream(streams::SHUFFLE).rng();
    let mut order: Vec<usize> = (0..set.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle);
        for batch in order.chunks(cfg.batch_size) {
            let x = set.inputs.select_rows(batch);
            let labels: Vec<usize> = batch.iter().map(|&i| set.labels[i]).collect();
            let (logits, cache) = model.net.forward(&x)?;
            let (_, dlogits) = softmax_cross_entropy(&logits, &labels)?;
            let grads = model.net.backward(&cache, &dlogits)?;
            adam_step(&mut model.net, &grads, &mut adam)?;
        }
        epochs.push(evaluate(&model, &set, epoch, cfg)?);
    }
    Ok((model, TrainingTrace { initial, epochs }))
}
