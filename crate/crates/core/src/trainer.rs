//! Desk-scale training harness: a small tanh feature extractor trained with
//! the centroid loss on synthetic Gaussian blobs, instrumented to measure
//! how far the learned features sit from the centroid subspace.

use crate::error::{Error, Result};
use crate::frame::{build_projector, decompose_angles_with, SubspaceProjector};
use crate::generator::{generate_iterative_charge, generate_pedcc, ChargeSimConfig, PedccSet};
use crate::linalg::{norm, standard_normal_matrix, RandomSeed, RealMatrix};
use crate::loss::{
    cos_logits, loss_am, loss_mse, loss_total_with_grad, LabeledBatch, LossParams, MSE_ROOT_EPSILON,
};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

/// Radius of the sphere the blob centers are drawn on.
const BLOB_CENTER_RADIUS: f64 = 10.0;

/// Fraction of each class used for training; the rest is held out.
const TRAIN_FRACTION: f64 = 0.8;

/// Synthetic classification dataset: isotropic Gaussian blobs around class
/// centers drawn on a sphere, with a deterministic per-class 80/20 split.
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub samples: RealMatrix,
    pub labels: Vec<usize>,
    pub k_classes: usize,
    pub blob_centers: RealMatrix,
    pub blob_sigma: f64,
    pub seed: RandomSeed,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

impl SynthDataset {
    pub fn input_dim(&self) -> usize {
        self.samples.cols()
    }

    pub fn len(&self) -> usize {
        self.samples.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn subset(&self, indices: &[usize]) -> (RealMatrix, Vec<usize>) {
        let d = self.input_dim();
        let mut m = RealMatrix::zeros(indices.len(), d);
        let mut labels = Vec::with_capacity(indices.len());
        for (r, &idx) in indices.iter().enumerate() {
            m.row_mut(r).copy_from_slice(self.samples.row(idx));
            labels.push(self.labels[idx]);
        }
        (m, labels)
    }
}

/// Draws `k * per_class` samples: class centers are random directions scaled
/// to radius 10, samples are `center + sigma * gaussian`. Deterministic per
/// seed, including the 80/20 train/test split (first 80% of each class train,
/// rest test).
pub fn make_blobs(
    k: usize,
    d_in: usize,
    per_class: usize,
    sigma: f64,
    seed: RandomSeed,
) -> Result<SynthDataset> {
    if k < 2 || d_in < 2 || per_class < 2 {
        return Err(Error::InvalidShape(format!(
            "blobs need k >= 2, d_in >= 2, per_class >= 2; got k={k}, d_in={d_in}, per_class={per_class}"
        )));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidShape(format!(
            "sigma must be nonnegative, got {sigma}"
        )));
    }
    let mut rng = seed.rng();
    let mut centers = RealMatrix::zeros(k, d_in);
    for c in 0..k {
        loop {
            let row = centers.row_mut(c);
            for x in row.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
            let rn = norm(row);
            if rn > 1e-12 {
                for x in row.iter_mut() {
                    *x *= BLOB_CENTER_RADIUS / rn;
                }
                break;
            }
        }
    }

    let total = k * per_class;
    let mut samples = RealMatrix::zeros(total, d_in);
    let mut labels = Vec::with_capacity(total);
    let mut train_indices = Vec::new();
    let mut test_indices = Vec::new();
    let train_per_class = ((per_class as f64) * TRAIN_FRACTION).floor() as usize;
    let train_per_class = train_per_class.clamp(1, per_class - 1);
    for c in 0..k {
        for s in 0..per_class {
            let idx = c * per_class + s;
            let row = samples.row_mut(idx);
            for (x, &center) in row.iter_mut().zip(centers.row(c)) {
                let noise: f64 = rng.sample(StandardNormal);
                *x = center + sigma * noise;
            }
            labels.push(c);
            if s < train_per_class {
                train_indices.push(idx);
            } else {
                test_indices.push(idx);
            }
        }
    }

    Ok(SynthDataset {
        samples,
        labels,
        k_classes: k,
        blob_centers: centers,
        blob_sigma: sigma,
        seed,
        train_indices,
        test_indices,
    })
}

/// One affine map; weights are `input_dim x output_dim`, applied as
/// `x * W + b` to row-vector inputs.
#[derive(Debug, Clone)]
pub struct AffineLayer {
    pub weights: RealMatrix,
    pub biases: Vec<f64>,
}

/// Small feature extractor: affine layers with tanh between them (none after
/// the last). The final output dimension is the feature dimension.
#[derive(Debug, Clone)]
pub struct ToyModel {
    pub layers: Vec<AffineLayer>,
}

/// Per-layer parameter gradients, same shapes as the model.
#[derive(Debug, Clone)]
pub struct ModelGradients {
    pub weights: Vec<RealMatrix>,
    pub biases: Vec<Vec<f64>>,
}

impl ToyModel {
    /// Random init: each weight entry is normal with standard deviation
    /// 1/sqrt(fan_in); biases start at zero.
    pub fn new_random<R: Rng>(dims: &[usize], rng: &mut R) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidShape(
                "a model needs at least an input and an output dimension".to_string(),
            ));
        }
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let mut weights = standard_normal_matrix(fan_in, fan_out, rng);
            let scale = 1.0 / (fan_in as f64).sqrt();
            for r in 0..fan_in {
                for c in 0..fan_out {
                    weights.set(r, c, weights.get(r, c) * scale);
                }
            }
            layers.push(AffineLayer {
                weights,
                biases: vec![0.0; fan_out],
            });
        }
        Ok(ToyModel { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.weights.rows())
    }

    pub fn feature_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weights.cols())
    }

    /// Activations after every layer (tanh applied to all but the last);
    /// index 0 is the first hidden activation, the last entry the features.
    fn forward_trace(&self, inputs: &RealMatrix) -> Result<Vec<RealMatrix>> {
        let mut trace = Vec::with_capacity(self.layers.len());
        let mut current = inputs.clone();
        for (idx, layer) in self.layers.iter().enumerate() {
            let mut z = current.mat_mul(&layer.weights)?;
            for r in 0..z.rows() {
                let row = z.row_mut(r);
                for (v, &b) in row.iter_mut().zip(&layer.biases) {
                    *v += b;
                }
            }
            if idx + 1 < self.layers.len() {
                for r in 0..z.rows() {
                    for v in z.row_mut(r).iter_mut() {
                        *v = v.tanh();
                    }
                }
            }
            trace.push(z.clone());
            current = z;
        }
        Ok(trace)
    }

    /// Feature rows for a batch of inputs.
    pub fn features(&self, inputs: &RealMatrix) -> Result<RealMatrix> {
        Ok(self
            .forward_trace(inputs)?
            .pop()
            .expect("model has at least one layer"))
    }

    /// Combined loss of the batch plus exact gradients for every parameter,
    /// obtained by chaining the loss's feature gradient backwards through
    /// the affine/tanh layers.
    pub fn loss_and_gradients(
        &self,
        inputs: &RealMatrix,
        labels: &[usize],
        set: &PedccSet,
        params: &LossParams,
    ) -> Result<(f64, ModelGradients)> {
        let trace = self.forward_trace(inputs)?;
        let features = trace.last().expect("nonempty model").clone();
        let batch = LabeledBatch::new(features, labels.to_vec())?;
        let report = loss_total_with_grad(&batch, set, params)?;

        let mut weight_grads: Vec<RealMatrix> = Vec::with_capacity(self.layers.len());
        let mut bias_grads: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut upstream = report.grad_features;
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let layer_input: &RealMatrix = if idx == 0 { inputs } else { &trace[idx - 1] };
            // dW = input^T * upstream, db = column sums of upstream
            let dw = layer_input.transpose().mat_mul(&upstream)?;
            let mut db = vec![0.0; layer.biases.len()];
            for r in 0..upstream.rows() {
                for (b, &g) in db.iter_mut().zip(upstream.row(r)) {
                    *b += g;
                }
            }
            weight_grads.push(dw);
            bias_grads.push(db);
            if idx > 0 {
                let mut down = upstream.mat_mul(&layer.weights.transpose())?;
                // chain through tanh: the stored activation is tanh(z)
                let activated = &trace[idx - 1];
                for r in 0..down.rows() {
                    for c in 0..down.cols() {
                        let a = activated.get(r, c);
                        down.set(r, c, down.get(r, c) * (1.0 - a * a));
                    }
                }
                upstream = down;
            }
        }
        weight_grads.reverse();
        bias_grads.reverse();
        Ok((
            report.total,
            ModelGradients {
                weights: weight_grads,
                biases: bias_grads,
            },
        ))
    }

    fn apply_update(&mut self, grads: &ModelGradients, learning_rate: f64) {
        for (layer, (dw, db)) in self
            .layers
            .iter_mut()
            .zip(grads.weights.iter().zip(&grads.biases))
        {
            for r in 0..layer.weights.rows() {
                for c in 0..layer.weights.cols() {
                    let v = layer.weights.get(r, c) - learning_rate * dw.get(r, c);
                    layer.weights.set(r, c, v);
                }
            }
            for (b, &g) in layer.biases.iter_mut().zip(db) {
                *b -= learning_rate * g;
            }
        }
    }

    fn all_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.data().iter().all(|v| v.is_finite()) && l.biases.iter().all(|v| v.is_finite())
        })
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub loss_params: LossParams,
    pub feature_dim: usize,
    pub hidden_dim: usize,
    pub seed: RandomSeed,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 32,
            learning_rate: 0.05,
            loss_params: LossParams::default(),
            feature_dim: 8,
            hidden_dim: 16,
            seed: RandomSeed(0),
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.feature_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::InvalidShape(
                "batch_size, feature_dim and hidden_dim must be positive".to_string(),
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::InvalidShape(format!(
                "learning_rate must be nonnegative, got {}",
                self.learning_rate
            )));
        }
        self.loss_params.validate()
    }
}

/// Outcome of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub final_train_accuracy: f64,
    pub final_test_accuracy: f64,
    /// Mean subspace angle of the test features after training, in degrees.
    pub mean_subspace_angle_deg: f64,
    /// Full-training-set loss at epoch 0 (untrained) and after each epoch.
    pub loss_curve: Vec<f64>,
    /// Mean test-feature subspace angle at epoch 0 and after each epoch.
    pub angle_curve_deg: Vec<f64>,
    pub feature_dim: usize,
    pub warnings: Vec<String>,
}

fn accuracy(
    model: &ToyModel,
    inputs: &RealMatrix,
    labels: &[usize],
    set: &PedccSet,
) -> Result<f64> {
    if labels.is_empty() {
        return Ok(0.0);
    }
    let features = model.features(inputs)?;
    let batch = LabeledBatch::new(features, labels.to_vec())?;
    let z = cos_logits(&batch, set)?;
    let mut hits = 0usize;
    for (i, &label) in labels.iter().enumerate() {
        let mut best = 0usize;
        for j in 1..set.k() {
            if z.get(i, j) > z.get(i, best) {
                best = j;
            }
        }
        if best == label {
            hits += 1;
        }
    }
    Ok(hits as f64 / labels.len() as f64)
}

fn mean_subspace_angle_deg(
    model: &ToyModel,
    inputs: &RealMatrix,
    set: &PedccSet,
    projector: Option<&SubspaceProjector>,
) -> Result<f64> {
    // With k > n centroids the span is the whole feature space and every
    // feature sits at angle zero; there is no projector to build.
    let Some(projector) = projector else {
        return Ok(0.0);
    };
    let features = model.features(inputs)?;
    let mut sum = 0.0;
    for i in 0..features.rows() {
        let f = features.row(i);
        if norm(f) <= 1e-300 {
            // a collapsed feature carries no direction; count it as fully
            // off-subspace
            sum += 90.0;
            continue;
        }
        let angles = decompose_angles_with(projector, set, f)?;
        sum += angles.alpha.to_degrees();
    }
    Ok(sum / features.rows().max(1) as f64)
}

fn full_set_loss(
    model: &ToyModel,
    inputs: &RealMatrix,
    labels: &[usize],
    set: &PedccSet,
    params: &LossParams,
) -> Result<f64> {
    let features = model.features(inputs)?;
    let batch = LabeledBatch::new(features, labels.to_vec())?;
    let am = loss_am(&batch, set, params)?;
    let mse = loss_mse(&batch, set, params)?;
    Ok(am + params.lambda * (mse + MSE_ROOT_EPSILON).powf(1.0 / f64::from(params.root_n)))
}

/// Trains the feature extractor with plain mini-batch gradient descent
/// against a rotated centroid set of `cfg.feature_dim` dimensions.
/// Prediction is the centroid with the largest cosine to the feature.
///
/// Deterministic for a fixed `(dataset.seed, cfg.seed)`; emits a warning
/// (in the report) when `feature_dim < k - 1`, which cannot hold all k
/// centroids evenly.
pub fn train(dataset: &SynthDataset, cfg: &TrainConfig) -> Result<(ToyModel, TrainReport)> {
    cfg.validate()?;
    let k = dataset.k_classes;
    let mut warnings = Vec::new();
    // Below k-1 feature dimensions the k centroids cannot be evenly
    // distributed; fall back to the charge-model centroids (the only
    // generator defined for k > n+1) and warn.
    let (set, projector) = if cfg.feature_dim >= k - 1 {
        let set = generate_pedcc(k, cfg.feature_dim, cfg.seed)?;
        let projector = build_projector(&set)?;
        (set, Some(projector))
    } else {
        warnings.push(format!(
            "feature_dim {} is below k-1 = {}; centroids fall back to the \
             charge model and are not evenly distributed",
            cfg.feature_dim,
            k - 1
        ));
        let charge_cfg = ChargeSimConfig {
            seed: cfg.seed,
            ..ChargeSimConfig::default()
        };
        (
            generate_iterative_charge(k, cfg.feature_dim, &charge_cfg)?,
            None,
        )
    };
    let projector = projector.as_ref();
    let mut rng = cfg.seed.rng();
    let mut model = ToyModel::new_random(
        &[dataset.input_dim(), cfg.hidden_dim, cfg.feature_dim],
        &mut rng,
    )?;

    let (train_x, train_y) = dataset.subset(&dataset.train_indices);
    let (test_x, test_y) = dataset.subset(&dataset.test_indices);

    let mut loss_curve = Vec::with_capacity(cfg.epochs + 1);
    let mut angle_curve = Vec::with_capacity(cfg.epochs + 1);
    loss_curve.push(full_set_loss(
        &model,
        &train_x,
        &train_y,
        &set,
        &cfg.loss_params,
    )?);
    angle_curve.push(mean_subspace_angle_deg(&model, &test_x, &set, projector)?);

    let mut order: Vec<usize> = (0..train_x.rows()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let mut batch_x = RealMatrix::zeros(chunk.len(), dataset.input_dim());
            let mut batch_y = Vec::with_capacity(chunk.len());
            for (r, &idx) in chunk.iter().enumerate() {
                batch_x.row_mut(r).copy_from_slice(train_x.row(idx));
                batch_y.push(train_y[idx]);
            }
            let (loss, grads) =
                model.loss_and_gradients(&batch_x, &batch_y, &set, &cfg.loss_params)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite {
                    context: "training loss",
                    step: epoch,
                });
            }
            model.apply_update(&grads, cfg.learning_rate);
            if !model.all_finite() {
                return Err(Error::NonFinite {
                    context: "model parameters",
                    step: epoch,
                });
            }
        }
        loss_curve.push(full_set_loss(
            &model,
            &train_x,
            &train_y,
            &set,
            &cfg.loss_params,
        )?);
        angle_curve.push(mean_subspace_angle_deg(&model, &test_x, &set, projector)?);
    }

    let report = TrainReport {
        final_train_accuracy: accuracy(&model, &train_x, &train_y, &set)?,
        final_test_accuracy: accuracy(&model, &test_x, &test_y, &set)?,
        mean_subspace_angle_deg: *angle_curve.last().expect("angle curve is never empty"),
        loss_curve,
        angle_curve_deg: angle_curve,
        feature_dim: cfg.feature_dim,
        warnings,
    };
    Ok((model, report))
}

/// Runs [`train`] once per feature dimension with otherwise identical
/// configuration, for comparing the effect of the feature dimension.
pub fn dim_sweep(
    dataset: &SynthDataset,
    dims: &[usize],
    cfg: &TrainConfig,
) -> Result<Vec<TrainReport>> {
    let mut reports = Vec::with_capacity(dims.len());
    for &dim in dims {
        if dim < 2 {
            return Err(Error::InvalidShape(format!(
                "sweep dimensions must be at least 2, got {dim}"
            )));
        }
        let run_cfg = TrainConfig {
            feature_dim: dim,
            ..cfg.clone()
        };
        let (_, report) = train(dataset, &run_cfg)?;
        reports.push(report);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nearest_center_accuracy(dataset: &SynthDataset, indices: &[usize]) -> f64 {
        let mut hits = 0usize;
        for &idx in indices {
            let sample = dataset.samples.row(idx);
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for c in 0..dataset.k_classes {
                let d: f64 = sample
                    .iter()
                    .zip(dataset.blob_centers.row(c))
                    .map(|(&x, &m)| (x - m) * (x - m))
                    .sum();
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if best == dataset.labels[idx] {
                hits += 1;
            }
        }
        hits as f64 / indices.len() as f64
    }

    #[test]
    fn zero_sigma_blobs_sit_on_their_centers() {
        let ds = make_blobs(3, 4, 5, 0.0, RandomSeed(1)).unwrap();
        for i in 0..ds.len() {
            let c = ds.labels[i];
            for (x, m) in ds.samples.row(i).iter().zip(ds.blob_centers.row(c)) {
                assert_eq!(x, m);
            }
        }
        assert_eq!(nearest_center_accuracy(&ds, &ds.test_indices), 1.0);
    }

    #[test]
    fn blobs_are_deterministic_and_separable() {
        let a = make_blobs(3, 5, 100, 0.5, RandomSeed(3)).unwrap();
        let b = make_blobs(3, 5, 100, 0.5, RandomSeed(3)).unwrap();
        assert_eq!(a.samples.data(), b.samples.data());
        assert_eq!(a.labels, b.labels);
        // sigma 0.5 against radius-10 centers: the nearest-center rule is exact
        let all: Vec<usize> = (0..a.len()).collect();
        assert_eq!(nearest_center_accuracy(&a, &all), 1.0);
    }

    #[test]
    fn blobs_validate_arguments() {
        assert!(matches!(
            make_blobs(1, 4, 5, 0.1, RandomSeed(0)),
            Err(Error::InvalidShape(_))
        ));
        assert!(matches!(
            make_blobs(3, 4, 5, -0.5, RandomSeed(0)),
            Err(Error::InvalidShape(_))
        ));
    }

    #[test]
    fn split_is_eighty_twenty_per_class() {
        let ds = make_blobs(4, 3, 10, 0.2, RandomSeed(5)).unwrap();
        assert_eq!(ds.train_indices.len(), 32);
        assert_eq!(ds.test_indices.len(), 8);
        for c in 0..4 {
            let in_train = ds
                .train_indices
                .iter()
                .filter(|&&i| ds.labels[i] == c)
                .count();
            assert_eq!(in_train, 8, "class {c}");
        }
    }

    #[test]
    fn model_gradients_match_finite_differences() {
        // tiny model: 3 -> 4 -> 4 features, 3 classes, 2 samples
        let set = generate_pedcc(3, 4, RandomSeed(11)).unwrap();
        let mut rng = RandomSeed(12).rng();
        let model = ToyModel::new_random(&[3, 4, 4], &mut rng).unwrap();
        let inputs = RealMatrix::from_rows(&[vec![0.8, -0.3, 0.5], vec![-0.2, 0.9, -0.7]]).unwrap();
        let labels = vec![0, 2];
        let params = LossParams::default();
        let (_, grads) = model
            .loss_and_gradients(&inputs, &labels, &set, &params)
            .unwrap();

        let h = 1e-6;
        let loss_of = |m: &ToyModel| -> f64 {
            m.loss_and_gradients(&inputs, &labels, &set, &params)
                .unwrap()
                .0
        };
        for layer in 0..2 {
            let (rows, cols) = (
                model.layers[layer].weights.rows(),
                model.layers[layer].weights.cols(),
            );
            for r in 0..rows {
                for c in 0..cols {
                    let mut plus = model.clone();
                    let v = plus.layers[layer].weights.get(r, c);
                    plus.layers[layer].weights.set(r, c, v + h);
                    let mut minus = model.clone();
                    minus.layers[layer].weights.set(r, c, v - h);
                    let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
                    let an = grads.weights[layer].get(r, c);
                    let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-4);
                    assert!(
                        rel <= 1e-4,
                        "weight ({layer},{r},{c}): fd {fd:.8} vs analytic {an:.8}"
                    );
                }
            }
            for b in 0..model.layers[layer].biases.len() {
                let mut plus = model.clone();
                plus.layers[layer].biases[b] += h;
                let mut minus = model.clone();
                minus.layers[layer].biases[b] -= h;
                let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
                let an = grads.biases[layer][b];
                let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-4);
                assert!(rel <= 1e-4, "bias ({layer},{b}): fd {fd:.8} vs {an:.8}");
            }
        }
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let ds = make_blobs(3, 4, 10, 0.3, RandomSeed(7)).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            learning_rate: 0.0,
            feature_dim: 4,
            hidden_dim: 6,
            seed: RandomSeed(7),
            ..TrainConfig::default()
        };
        let (_, report) = train(&ds, &cfg).unwrap();
        let first = report.loss_curve[0];
        for &l in &report.loss_curve {
            assert_eq!(l, first, "loss curve must be constant at lr 0");
        }
    }

    #[test]
    fn zero_sigma_blobs_train_to_perfect_accuracy() {
        let ds = make_blobs(3, 5, 20, 0.0, RandomSeed(9)).unwrap();
        let cfg = TrainConfig {
            epochs: 200,
            feature_dim: 8,
            seed: RandomSeed(9),
            ..TrainConfig::default()
        };
        let (_, report) = train(&ds, &cfg).unwrap();
        assert_eq!(report.final_train_accuracy, 1.0);
        assert!(report.loss_curve.last().unwrap() <= &report.loss_curve[0]);
    }

    #[test]
    fn non_finite_data_aborts_training() {
        // a spread wide enough to overflow sample coordinates poisons the
        // first forward pass with NaN, which must surface as an error
        let ds = make_blobs(3, 5, 10, 1e308, RandomSeed(1)).unwrap();
        let cfg = TrainConfig {
            epochs: 1,
            feature_dim: 4,
            hidden_dim: 4,
            seed: RandomSeed(1),
            ..TrainConfig::default()
        };
        assert!(matches!(train(&ds, &cfg), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let ds = make_blobs(3, 4, 10, 0.4, RandomSeed(13)).unwrap();
        let cfg = TrainConfig {
            epochs: 10,
            feature_dim: 4,
            hidden_dim: 6,
            seed: RandomSeed(2),
            ..TrainConfig::default()
        };
        let (_, a) = train(&ds, &cfg).unwrap();
        let (_, b) = train(&ds, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_flags_small_dims_and_repeats_identically() {
        let ds = make_blobs(4, 4, 10, 0.4, RandomSeed(21)).unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            hidden_dim: 6,
            seed: RandomSeed(4),
            ..TrainConfig::default()
        };
        let reports = dim_sweep(&ds, &[3, 3, 6], &cfg).unwrap();
        assert_eq!(reports[0], reports[1], "duplicate dims must match");
        assert!(reports[0].warnings.is_empty(), "dim = k-1 must not warn");
        // below k-1 the run still completes, on charge-model centroids,
        // with a warning and a zero subspace angle
        let low = dim_sweep(&ds, &[2], &cfg).unwrap();
        assert_eq!(low[0].warnings.len(), 1);
        assert_eq!(low[0].mean_subspace_angle_deg, 0.0);
        assert!(matches!(
            dim_sweep(&ds, &[1], &cfg),
            Err(Error::InvalidShape(_))
        ));
    }
}
