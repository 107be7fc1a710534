//! Margin-based centroid loss over frozen class centroids, with exact
//! gradients with respect to the raw (pre-normalization) features.
//!
//! The loss combines an additive-margin softmax over scaled cosine logits
//! with a mean-squared alignment penalty toward the labelled centroid:
//!
//! ```text
//! total = L_AM + lambda * (L_MSE + eps)^(1/root_n)
//! ```
//!
//! `L_AM` is averaged over the batch; `L_MSE` is summed (no 1/N), matching
//! the original formulation of the combined loss. Features are normalized
//! internally, so the loss depends only on feature directions; the gradient
//! chains through the normalization Jacobian `(I - u u^T) / ||x||`.

use crate::error::{Error, Result};
use crate::generator::PedccSet;
use crate::linalg::{dot, norm, pairwise_sum, RealMatrix};

/// Regularizer inside the n-th root so the gradient exists at L_MSE = 0.
pub const MSE_ROOT_EPSILON: f64 = 1e-12;

/// Feature rows with norm at or below this are rejected.
pub const ZERO_FEATURE_TOL: f64 = 1e-300;

/// Which form of the alignment penalty to use. The two differ: the squared
/// variant is sum (1 - cos)^2, the euclidean variant is
/// (1/2) sum ||u - a||^2 = sum (1 - cos) on unit-normalized features.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MseVariant {
    SquaredCosine,
    Euclidean,
}

/// Hyperparameters of the combined loss.
#[derive(Debug, Clone, PartialEq)]
pub struct LossParams {
    /// Scale applied to every cosine logit.
    pub s: f64,
    /// Additive margin subtracted from the target-class cosine, in [0, 1).
    pub m: f64,
    /// Weight of the alignment penalty.
    pub lambda: f64,
    /// Root applied to the alignment penalty (the constraint factor).
    pub root_n: u32,
    pub mse_variant: MseVariant,
}

impl Default for LossParams {
    fn default() -> Self {
        LossParams {
            s: 7.5,
            m: 0.35,
            lambda: 1.0,
            root_n: 1,
            mse_variant: MseVariant::SquaredCosine,
        }
    }
}

impl LossParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.s.is_finite() && self.s > 0.0) {
            return Err(Error::InvalidShape(format!(
                "scale s must be positive, got {}",
                self.s
            )));
        }
        if !(self.m.is_finite() && (0.0..1.0).contains(&self.m)) {
            return Err(Error::InvalidShape(format!(
                "margin m must lie in [0, 1), got {}",
                self.m
            )));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidShape(format!(
                "lambda must be nonnegative, got {}",
                self.lambda
            )));
        }
        if self.root_n < 1 {
            return Err(Error::InvalidShape("root_n must be at least 1".to_string()));
        }
        Ok(())
    }
}

/// A batch of raw feature rows with class labels.
#[derive(Debug, Clone)]
pub struct LabeledBatch {
    features: RealMatrix,
    labels: Vec<usize>,
}

impl LabeledBatch {
    pub fn new(features: RealMatrix, labels: Vec<usize>) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::InvalidShape("batch must not be empty".to_string()));
        }
        if labels.len() != features.rows() {
            return Err(Error::InvalidShape(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        Ok(LabeledBatch { features, labels })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn features(&self) -> &RealMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    fn check_against(&self, set: &PedccSet) -> Result<()> {
        if self.features.cols() != set.n() {
            return Err(Error::DimensionMismatch(format!(
                "features have {} columns but centroids live in {} dimensions",
                self.features.cols(),
                set.n()
            )));
        }
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= set.k()) {
            return Err(Error::InvalidShape(format!(
                "label {bad} out of range for {} classes",
                set.k()
            )));
        }
        Ok(())
    }
}

/// Loss values, logits and the exact feature gradient for one batch.
#[derive(Debug, Clone)]
pub struct LossReport {
    pub l_am: f64,
    pub l_mse: f64,
    pub total: f64,
    /// N x k cosine logits, clamped to [-1, 1].
    pub cos_logits: RealMatrix,
    /// N x dim gradient of `total` with respect to the raw features.
    pub grad_features: RealMatrix,
}

fn feature_norms(batch: &LabeledBatch) -> Result<Vec<f64>> {
    (0..batch.len())
        .map(|i| {
            let rn = norm(batch.features.row(i));
            if rn <= ZERO_FEATURE_TOL {
                Err(Error::ZeroFeature { row: i, norm: rn })
            } else {
                Ok(rn)
            }
        })
        .collect()
}

fn logits_internal(batch: &LabeledBatch, set: &PedccSet, norms: &[f64]) -> RealMatrix {
    let n = batch.len();
    let k = set.k();
    let mut z = RealMatrix::zeros(n, k);
    for i in 0..n {
        let row = batch.features.row(i);
        let inv = 1.0 / norms[i];
        for j in 0..k {
            z.set(i, j, (dot(row, set.row(j)) * inv).clamp(-1.0, 1.0));
        }
    }
    z
}

/// Cosine logits: entry (i, j) is the cosine between feature row i and
/// centroid j, clamped to [-1, 1].
pub fn cos_logits(batch: &LabeledBatch, set: &PedccSet) -> Result<RealMatrix> {
    batch.check_against(set)?;
    let norms = feature_norms(batch)?;
    Ok(logits_internal(batch, set, &norms))
}

/// Per-sample margin softmax terms and the softmax probabilities, shared by
/// the loss value and the gradient. Row i of `probs` is the softmax of
/// s*(z - m*onehot(y_i)).
fn margin_softmax(z: &RealMatrix, labels: &[usize], params: &LossParams) -> (Vec<f64>, RealMatrix) {
    let n = z.rows();
    let k = z.cols();
    let mut per_sample = Vec::with_capacity(n);
    let mut probs = RealMatrix::zeros(n, k);
    let mut t = vec![0.0; k];
    for i in 0..n {
        let y = labels[i];
        for j in 0..k {
            let margin = if j == y { params.m } else { 0.0 };
            t[j] = params.s * (z.get(i, j) - margin);
        }
        let max = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        for j in 0..k {
            let e = (t[j] - max).exp();
            probs.set(i, j, e);
            denom += e;
        }
        let inv = 1.0 / denom;
        for j in 0..k {
            probs.set(i, j, probs.get(i, j) * inv);
        }
        // -log softmax at the labelled class, evaluated stably
        per_sample.push(max + denom.ln() - t[y]);
    }
    (per_sample, probs)
}

/// Additive-margin softmax loss averaged over the batch.
pub fn loss_am(batch: &LabeledBatch, set: &PedccSet, params: &LossParams) -> Result<f64> {
    params.validate()?;
    let z = cos_logits(batch, set)?;
    let (per_sample, _) = margin_softmax(&z, batch.labels(), params);
    Ok(pairwise_sum(&per_sample) / batch.len() as f64)
}

fn mse_from_logits(
    z: &RealMatrix,
    batch: &LabeledBatch,
    set: &PedccSet,
    norms: &[f64],
    variant: MseVariant,
) -> f64 {
    let terms: Vec<f64> = (0..batch.len())
        .map(|i| {
            let y = batch.labels()[i];
            match variant {
                MseVariant::SquaredCosine => {
                    let d = 1.0 - z.get(i, y);
                    d * d
                }
                MseVariant::Euclidean => {
                    // (1/2) ||x/||x|| - a_y||^2, evaluated literally
                    let inv = 1.0 / norms[i];
                    let half_sq: f64 = batch
                        .features()
                        .row(i)
                        .iter()
                        .zip(set.row(y))
                        .map(|(&x, &a)| {
                            let d = x * inv - a;
                            d * d
                        })
                        .sum();
                    0.5 * half_sq
                }
            }
        })
        .collect();
    pairwise_sum(&terms)
}

/// Alignment penalty, summed over the batch (no 1/N).
pub fn loss_mse(batch: &LabeledBatch, set: &PedccSet, params: &LossParams) -> Result<f64> {
    params.validate()?;
    batch.check_against(set)?;
    let norms = feature_norms(batch)?;
    let z = logits_internal(batch, set, &norms);
    Ok(mse_from_logits(&z, batch, set, &norms, params.mse_variant))
}

/// Evaluates the combined loss and its exact gradient with respect to the
/// raw features. The gradient includes the chain through the logit softmax,
/// the alignment penalty, the regularized n-th root and the feature
/// normalization Jacobian.
pub fn loss_total_with_grad(
    batch: &LabeledBatch,
    set: &PedccSet,
    params: &LossParams,
) -> Result<LossReport> {
    params.validate()?;
    batch.check_against(set)?;
    let norms = feature_norms(batch)?;
    let z = logits_internal(batch, set, &norms);
    let n = batch.len();
    let k = set.k();
    let dim = set.n();

    let (per_sample, probs) = margin_softmax(&z, batch.labels(), params);
    let l_am = pairwise_sum(&per_sample) / n as f64;
    let l_mse = mse_from_logits(&z, batch, set, &norms, params.mse_variant);

    let root = f64::from(params.root_n);
    let regularized = l_mse + MSE_ROOT_EPSILON;
    let total = l_am + params.lambda * regularized.powf(1.0 / root);
    // d total / d L_MSE
    let mse_outer = params.lambda * (1.0 / root) * regularized.powf(1.0 / root - 1.0);

    let mut grad = RealMatrix::zeros(n, dim);
    let inv_n = 1.0 / n as f64;
    for i in 0..n {
        let y = batch.labels()[i];
        let feature = batch.features().row(i);
        let feat_norm = norms[i];
        let inv_norm = 1.0 / feat_norm;

        // d total / d z_ij
        let mut weight_on_centroid = vec![0.0; k];
        for j in 0..k {
            let indicator = if j == y { 1.0 } else { 0.0 };
            weight_on_centroid[j] = params.s * inv_n * (probs.get(i, j) - indicator);
        }
        let mse_inner = match params.mse_variant {
            MseVariant::SquaredCosine => -2.0 * (1.0 - z.get(i, y)),
            MseVariant::Euclidean => -1.0,
        };
        weight_on_centroid[y] += mse_outer * mse_inner;

        // gradient w.r.t. the unit feature, then through the Jacobian
        // (I - u u^T) / ||x||
        let mut g_unit = vec![0.0; dim];
        for (j, &w) in weight_on_centroid.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (g, &a) in g_unit.iter_mut().zip(set.row(j)) {
                *g += w * a;
            }
        }
        let unit: Vec<f64> = feature.iter().map(|&x| x * inv_norm).collect();
        let radial = dot(&g_unit, &unit);
        let out = grad.row_mut(i);
        for d in 0..dim {
            out[d] = (g_unit[d] - radial * unit[d]) * inv_norm;
        }
    }

    Ok(LossReport {
        l_am,
        l_mse,
        total,
        cos_logits: z,
        grad_features: grad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{generate_basic_recursive, generate_pedcc};
    use crate::linalg::RandomSeed;

    fn batch_of(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> LabeledBatch {
        LabeledBatch::new(RealMatrix::from_rows(&rows).unwrap(), labels).unwrap()
    }

    /// Direct, non-stabilized evaluation of the margin softmax loss for a
    /// single sample; used as an independent reference.
    fn direct_margin_loss(cos_target: f64, cos_others: &[f64], s: f64, m: f64) -> f64 {
        let num = (s * (cos_target - m)).exp();
        let denom: f64 = num + cos_others.iter().map(|&c| (s * c).exp()).sum::<f64>();
        -(num / denom).ln()
    }

    #[test]
    fn logits_on_a_centroid_match_the_equal_cosine_pattern() {
        let set = generate_pedcc(10, 16, RandomSeed(1)).unwrap();
        let batch = batch_of(vec![set.row(0).to_vec()], vec![0]);
        let z = cos_logits(&batch, &set).unwrap();
        assert!((z.get(0, 0) - 1.0).abs() <= 1e-10);
        for j in 1..10 {
            assert!((z.get(0, j) + 1.0 / 9.0).abs() <= 1e-10, "column {j}");
        }
    }

    #[test]
    fn logits_are_scale_invariant() {
        let set = generate_pedcc(4, 6, RandomSeed(2)).unwrap();
        let x = set.row(1).to_vec();
        let scaled: Vec<f64> = x.iter().map(|&v| 5.0 * v).collect();
        let za = cos_logits(&batch_of(vec![x], vec![1]), &set).unwrap();
        let zb = cos_logits(&batch_of(vec![scaled], vec![1]), &set).unwrap();
        for j in 0..4 {
            assert!((za.get(0, j) - zb.get(0, j)).abs() <= 1e-12);
        }
    }

    #[test]
    fn logits_reject_zero_features_and_mismatches() {
        let set = generate_basic_recursive(3, 4).unwrap();
        let zero = batch_of(vec![vec![0.0; 4]], vec![0]);
        assert!(matches!(
            cos_logits(&zero, &set),
            Err(Error::ZeroFeature { row: 0, .. })
        ));
        let narrow = batch_of(vec![vec![1.0, 0.0]], vec![0]);
        assert!(matches!(
            cos_logits(&narrow, &set),
            Err(Error::DimensionMismatch(_))
        ));
        let bad_label = batch_of(vec![vec![1.0, 0.0, 0.0, 0.0]], vec![3]);
        assert!(matches!(
            cos_logits(&bad_label, &set),
            Err(Error::InvalidShape(_))
        ));
    }

    #[test]
    fn margin_loss_matches_direct_evaluation_on_a_centroid() {
        let set = generate_basic_recursive(10, 9).unwrap();
        let batch = batch_of(vec![set.row(0).to_vec()], vec![0]);
        let params = LossParams::default();
        let got = loss_am(&batch, &set, &params).unwrap();
        let want = direct_margin_loss(1.0, &[-1.0 / 9.0; 9], 7.5, 0.35);
        assert!(
            (got - want).abs() <= 1e-12,
            "got {got:.12}, reference {want:.12}"
        );
        // the reference value is about 0.0294
        assert!((want - 0.0294).abs() < 1e-3);
    }

    #[test]
    fn margin_loss_approaches_log_k_for_vanishing_scale() {
        let set = generate_basic_recursive(7, 8).unwrap();
        let batch = batch_of(vec![set.row(2).to_vec()], vec![2]);
        let params = LossParams {
            s: 1e-9,
            m: 0.0,
            ..LossParams::default()
        };
        let got = loss_am(&batch, &set, &params).unwrap();
        assert!((got - (7f64).ln()).abs() <= 1e-6, "got {got}");
    }

    #[test]
    fn duplicated_sample_leaves_the_mean_unchanged() {
        let set = generate_pedcc(5, 8, RandomSeed(3)).unwrap();
        let x = vec![0.3, -0.1, 0.7, 0.2, -0.5, 0.05, 0.4, -0.2];
        let params = LossParams::default();
        let one = loss_am(&batch_of(vec![x.clone()], vec![2]), &set, &params).unwrap();
        let two = loss_am(&batch_of(vec![x.clone(), x], vec![2, 2]), &set, &params).unwrap();
        assert!((one - two).abs() <= 1e-12);
    }

    #[test]
    fn alignment_penalty_spot_values() {
        let set = generate_basic_recursive(3, 4).unwrap();
        let squared = LossParams::default();
        let euclid = LossParams {
            mse_variant: MseVariant::Euclidean,
            ..LossParams::default()
        };

        // aligned: zero under both variants
        let aligned = batch_of(vec![set.row(0).to_vec()], vec![0]);
        assert!(loss_mse(&aligned, &set, &squared).unwrap() <= 1e-20);
        assert!(loss_mse(&aligned, &set, &euclid).unwrap() <= 1e-15);

        // orthogonal to the target centroid: 1 under both variants
        let a0 = set.row(0);
        let a2 = set.row(2);
        // a0 has zero first two coordinates; build an orthogonal direction
        let ortho = vec![1.0, 0.0, 0.0, 0.0];
        assert!(dot(&ortho, a0).abs() < 1e-15);
        let batch = batch_of(vec![ortho], vec![0]);
        assert!((loss_mse(&batch, &set, &squared).unwrap() - 1.0).abs() <= 1e-12);
        assert!((loss_mse(&batch, &set, &euclid).unwrap() - 1.0).abs() <= 1e-12);

        // anti-aligned: 4 under the squared variant, 2 under the euclidean
        let anti: Vec<f64> = a2.iter().map(|&v| -v).collect();
        let batch = batch_of(vec![anti], vec![2]);
        assert!((loss_mse(&batch, &set, &squared).unwrap() - 4.0).abs() <= 1e-12);
        assert!((loss_mse(&batch, &set, &euclid).unwrap() - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn total_follows_the_declared_combination() {
        let set = generate_pedcc(5, 8, RandomSeed(4)).unwrap();
        let batch = batch_of(
            vec![
                vec![0.3, -0.1, 0.7, 0.2, -0.5, 0.05, 0.4, -0.2],
                vec![1.1, 0.4, -0.3, 0.9, 0.2, -0.6, 0.1, 0.8],
            ],
            vec![0, 3],
        );
        for root_n in [1u32, 2, 3] {
            let params = LossParams {
                root_n,
                lambda: 0.7,
                ..LossParams::default()
            };
            let report = loss_total_with_grad(&batch, &set, &params).unwrap();
            let expect =
                report.l_am + 0.7 * (report.l_mse + MSE_ROOT_EPSILON).powf(1.0 / f64::from(root_n));
            assert!((report.total - expect).abs() <= 1e-14);
        }
    }

    #[test]
    fn aligned_batch_has_no_alignment_gradient() {
        let set = generate_pedcc(6, 8, RandomSeed(5)).unwrap();
        let batch = batch_of(vec![set.row(1).to_vec(), set.row(4).to_vec()], vec![1, 4]);
        let with_mse = loss_total_with_grad(&batch, &set, &LossParams::default()).unwrap();
        let without_mse = loss_total_with_grad(
            &batch,
            &set,
            &LossParams {
                lambda: 0.0,
                ..LossParams::default()
            },
        )
        .unwrap();
        assert!(with_mse.l_mse <= 1e-18);
        let diff = with_mse
            .grad_features
            .max_abs_diff(&without_mse.grad_features);
        assert!(
            diff <= 1e-12,
            "alignment term leaked into the gradient: {diff:e}"
        );
    }

    #[test]
    fn rescaling_a_feature_preserves_loss_and_scales_its_gradient() {
        let set = generate_pedcc(5, 8, RandomSeed(6)).unwrap();
        let x = vec![0.3, -0.1, 0.7, 0.2, -0.5, 0.05, 0.4, -0.2];
        let scaled: Vec<f64> = x.iter().map(|&v| 10.0 * v).collect();
        let params = LossParams::default();
        let a = loss_total_with_grad(&batch_of(vec![x], vec![2]), &set, &params).unwrap();
        let b = loss_total_with_grad(&batch_of(vec![scaled], vec![2]), &set, &params).unwrap();
        assert!((a.total - b.total).abs() <= 1e-12);
        for d in 0..8 {
            let expect = a.grad_features.get(0, d) / 10.0;
            assert!((b.grad_features.get(0, d) - expect).abs() <= 1e-13);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let set = generate_pedcc(5, 8, RandomSeed(7)).unwrap();
        let rows = vec![
            vec![0.9, -0.2, 0.4, 0.6, -0.8, 0.3, -0.5, 0.7],
            vec![-0.6, 1.2, 0.1, -0.4, 0.5, 0.9, 0.2, -0.3],
            vec![0.8, 0.3, -0.9, 0.5, 1.1, -0.2, 0.6, 0.4],
            vec![-1.0, 0.7, 0.2, 0.9, -0.3, 0.5, -0.7, 0.1],
        ];
        let labels = vec![0, 2, 3, 1];
        let params = LossParams {
            root_n: 2,
            ..LossParams::default()
        };
        let batch = batch_of(rows.clone(), labels.clone());
        let report = loss_total_with_grad(&batch, &set, &params).unwrap();
        let h = 1e-6;
        for i in 0..rows.len() {
            for d in 0..8 {
                let mut plus = rows.clone();
                plus[i][d] += h;
                let mut minus = rows.clone();
                minus[i][d] -= h;
                let lp = loss_total_with_grad(&batch_of(plus, labels.clone()), &set, &params)
                    .unwrap()
                    .total;
                let lm = loss_total_with_grad(&batch_of(minus, labels.clone()), &set, &params)
                    .unwrap()
                    .total;
                let fd = (lp - lm) / (2.0 * h);
                let an = report.grad_features.get(i, d);
                let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-3);
                assert!(rel <= 1e-5, "({i},{d}): fd {fd:.10} vs analytic {an:.10}");
            }
        }
    }
}
