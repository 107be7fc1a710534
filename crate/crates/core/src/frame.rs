//! Tight-frame analysis of a centroid set: the projector onto the
//! (k-1)-dimensional centroid subspace, the decomposition of a query vector
//! into subspace and centroid angles, frame-sum diagnostics and the pairwise
//! cosine table.
//!
//! For an ideal set of k centroids the key identities are
//!
//! ```text
//! sum_j <a_j, f>^2 = (1 + 1/(k-1)) * ||f||^2 * cos^2(alpha)
//! cos(gamma_i)     = cos(beta_i) * cos(alpha)
//! ```
//!
//! where `alpha` is the angle between `f` and its orthogonal projection `p`
//! onto the centroid subspace, `gamma_i` the angle between `f` and centroid
//! `a_i`, and `beta_i` the angle between `p` and `a_i`. For k = n+1 the
//! subspace is the whole space and the first identity loses the cosine
//! factor.

use crate::error::{Error, Result};
use crate::generator::PedccSet;
use crate::linalg::{dot, norm, RandomSeed, RealMatrix};

use rand::Rng;
use rand_distr::StandardNormal;

/// Condition-estimate ceiling for the normal equations of the basis.
pub const CONDITION_LIMIT: f64 = 1e8;

/// Below this fraction of ||f||, the projection is treated as zero and the
/// beta angles are undefined.
pub const ZERO_PROJECTION_TOL: f64 = 1e-12;

/// Vectors with norm at or below this are rejected outright.
pub const ZERO_VECTOR_TOL: f64 = 1e-300;

/// Orthogonal projector onto the span of the first k-1 centroids (which by
/// the zero-sum property contains all k of them).
#[derive(Debug, Clone)]
pub struct SubspaceProjector {
    basis: RealMatrix,
    projection: RealMatrix,
    subspace_dim: usize,
}

impl SubspaceProjector {
    /// Basis matrix, n x (k-1), one centroid per column.
    pub fn basis(&self) -> &RealMatrix {
        &self.basis
    }

    /// The projection matrix P = A (A^T A)^(-1) A^T, n x n.
    pub fn projection(&self) -> &RealMatrix {
        &self.projection
    }

    pub fn subspace_dim(&self) -> usize {
        self.subspace_dim
    }

    /// Projects a vector onto the centroid subspace.
    pub fn project(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.projection.mat_vec(f)
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix;
/// `None` when a pivot is not strictly positive.
fn cholesky(g: &RealMatrix) -> Option<RealMatrix> {
    let n = g.rows();
    let mut l = RealMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = g.get(i, j);
            for p in 0..j {
                sum -= l.get(i, p) * l.get(j, p);
            }
            if i == j {
                if !(sum.is_finite() && sum > 0.0) {
                    return None;
                }
                l.set(i, j, sum.sqrt());
            } else {
                l.set(i, j, sum / l.get(j, j));
            }
        }
    }
    Some(l)
}

/// Inverse of a symmetric positive-definite matrix via its Cholesky factor.
fn spd_inverse(g: &RealMatrix) -> Option<RealMatrix> {
    let n = g.rows();
    let l = cholesky(g)?;
    let mut inv = RealMatrix::zeros(n, n);
    let mut col = vec![0.0; n];
    for b in 0..n {
        // forward solve L y = e_b
        for i in 0..n {
            let mut sum = if i == b { 1.0 } else { 0.0 };
            for p in 0..i {
                sum -= l.get(i, p) * col[p];
            }
            col[i] = sum / l.get(i, i);
        }
        // back solve L^T x = y
        for i in (0..n).rev() {
            let mut sum = col[i];
            for p in (i + 1)..n {
                sum -= l.get(p, i) * col[p];
            }
            col[i] = sum / l.get(i, i);
        }
        for i in 0..n {
            inv.set(i, b, col[i]);
        }
    }
    Some(inv)
}

fn one_norm(m: &RealMatrix) -> f64 {
    (0..m.cols())
        .map(|j| (0..m.rows()).map(|i| m.get(i, j).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Builds the subspace projector for a centroid set, using the first k-1
/// centroids as the (deterministic) basis. The normal-equations matrix of an
/// ideal set is extremely well conditioned; a condition estimate above
/// [`CONDITION_LIMIT`] therefore signals a degenerate input and is rejected.
pub fn build_projector(set: &PedccSet) -> Result<SubspaceProjector> {
    let k = set.k();
    let n = set.n();
    let m = k - 1;

    // Normal-equations matrix of the basis: gram of the first k-1 centroids.
    let mut g = RealMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = dot(set.row(i), set.row(j));
            g.set(i, j, v);
            g.set(j, i, v);
        }
    }
    let inv = spd_inverse(&g).ok_or(Error::IllConditioned {
        estimate: f64::INFINITY,
        limit: CONDITION_LIMIT,
    })?;
    let estimate = one_norm(&g) * one_norm(&inv);
    if !estimate.is_finite() || estimate > CONDITION_LIMIT {
        return Err(Error::IllConditioned {
            estimate,
            limit: CONDITION_LIMIT,
        });
    }

    // basis A: n x m, one centroid per column
    let mut basis = RealMatrix::zeros(n, m);
    for j in 0..m {
        for (r, &x) in set.row(j).iter().enumerate() {
            basis.set(r, j, x);
        }
    }

    // B = (A^T A)^(-1) A^T, m x n; then P = A B.
    let mut b = RealMatrix::zeros(m, n);
    for i in 0..m {
        for j in 0..m {
            let w = inv.get(i, j);
            if w == 0.0 {
                continue;
            }
            for (c, &x) in set.row(j).iter().enumerate() {
                b.set(i, c, b.get(i, c) + w * x);
            }
        }
    }
    let projection = basis.mat_mul(&b)?;

    Ok(SubspaceProjector {
        basis,
        projection,
        subspace_dim: m,
    })
}

/// Angles of a query vector relative to a centroid set: the subspace angle
/// `alpha`, the per-centroid angles `gammas`, and the projection-side angles
/// `betas` (undefined when the projection is numerically zero).
#[derive(Debug, Clone)]
pub struct AngleDecomposition {
    pub alpha: f64,
    pub gammas: Vec<f64>,
    pub betas: Option<Vec<f64>>,
    pub f_norm: f64,
    pub p_norm: f64,
}

/// Frame-sum diagnostic: the measured sum of squared centroid projections of
/// a query vector against its closed-form prediction, plus set-level
/// deviation figures.
#[derive(Debug, Clone)]
pub struct FrameReport {
    /// sum_j <a_j, f>^2
    pub frame_sum: f64,
    /// (1 + 1/(k-1)) * ||f||^2 * cos^2(alpha)
    pub predicted: f64,
    pub relative_error: f64,
    pub max_pairwise_cosine_deviation: f64,
    pub centroid_sum_norm: f64,
}

fn clamp_cosine(c: f64) -> f64 {
    c.clamp(-1.0, 1.0)
}

fn check_query_dim(set: &PedccSet, f: &[f64]) -> Result<()> {
    if f.len() != set.n() {
        return Err(Error::DimensionMismatch(format!(
            "query vector has length {} but the set lives in {} dimensions",
            f.len(),
            set.n()
        )));
    }
    Ok(())
}

/// [`decompose_angles`] with a prebuilt projector, for callers evaluating
/// many query vectors against one set.
pub fn decompose_angles_with(
    projector: &SubspaceProjector,
    set: &PedccSet,
    f: &[f64],
) -> Result<AngleDecomposition> {
    check_query_dim(set, f)?;
    let f_norm = norm(f);
    if f_norm <= ZERO_VECTOR_TOL {
        return Err(Error::ZeroVector {
            norm: f_norm,
            min: ZERO_VECTOR_TOL,
        });
    }
    let p = projector.project(f)?;
    let p_norm = norm(&p);
    let cos_alpha = (p_norm / f_norm).clamp(0.0, 1.0);
    let alpha = cos_alpha.acos();
    let gammas: Vec<f64> = (0..set.k())
        .map(|i| clamp_cosine(dot(set.row(i), f) / f_norm).acos())
        .collect();
    let betas = if p_norm <= ZERO_PROJECTION_TOL * f_norm {
        None
    } else {
        Some(
            (0..set.k())
                .map(|i| clamp_cosine(dot(set.row(i), &p) / p_norm).acos())
                .collect(),
        )
    };
    Ok(AngleDecomposition {
        alpha,
        gammas,
        betas,
        f_norm,
        p_norm,
    })
}

/// Decomposes a query vector into the subspace angle, centroid angles and
/// projection-side angles. Cosines are clamped to [-1, 1] before `acos` so
/// round-off at the boundaries cannot produce NaN.
pub fn decompose_angles(set: &PedccSet, f: &[f64]) -> Result<AngleDecomposition> {
    let projector = build_projector(set)?;
    decompose_angles_with(&projector, set, f)
}

/// [`frame_sum`] with a prebuilt projector.
pub fn frame_sum_with(
    projector: &SubspaceProjector,
    set: &PedccSet,
    f: &[f64],
) -> Result<FrameReport> {
    check_query_dim(set, f)?;
    let f_norm = norm(f);
    let measured: f64 = (0..set.k())
        .map(|i| {
            let ip = dot(set.row(i), f);
            ip * ip
        })
        .sum();
    let p = projector.project(f)?;
    let p_norm = norm(&p);
    let cos_alpha = if f_norm > 0.0 {
        (p_norm / f_norm).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let bound = 1.0 + 1.0 / (set.k() as f64 - 1.0);
    let predicted = bound * f_norm * f_norm * cos_alpha * cos_alpha;
    let relative_error = (measured - predicted).abs() / predicted.max(ZERO_VECTOR_TOL);
    Ok(FrameReport {
        frame_sum: measured,
        predicted,
        relative_error,
        max_pairwise_cosine_deviation: set.max_pairwise_cosine_deviation(),
        centroid_sum_norm: set.centroid_sum_norm(),
    })
}

/// Measures the frame sum of a query vector and compares it against the
/// closed-form prediction.
pub fn frame_sum(set: &PedccSet, f: &[f64]) -> Result<FrameReport> {
    let projector = build_projector(set)?;
    frame_sum_with(&projector, set, f)
}

/// Strictly upper-triangular k x k table of pairwise cosines; the diagonal
/// and lower triangle are zero, matching the usual half-table display.
pub fn cosine_distance_table(set: &PedccSet) -> RealMatrix {
    let k = set.k();
    let mut table = RealMatrix::zeros(k, k);
    for i in 0..k {
        for j in (i + 1)..k {
            table.set(i, j, dot(set.row(i), set.row(j)));
        }
    }
    table
}

/// Worst-case frame report over `trials` random query vectors, plus the
/// set-level deviation figures. Deterministic under the seed.
pub fn verify_pedcc(set: &PedccSet, trials: usize, seed: RandomSeed) -> Result<FrameReport> {
    if trials < 1 {
        return Err(Error::InvalidShape(
            "verification needs at least one trial".to_string(),
        ));
    }
    let projector = build_projector(set)?;
    let mut rng = seed.rng();
    let mut worst: Option<FrameReport> = None;
    for _ in 0..trials {
        let f: Vec<f64> = (0..set.n()).map(|_| rng.sample(StandardNormal)).collect();
        let report = frame_sum_with(&projector, set, &f)?;
        let replace = worst
            .as_ref()
            .is_none_or(|w| report.relative_error > w.relative_error);
        if replace {
            worst = Some(report);
        }
    }
    Ok(worst.expect("at least one trial ran"))
}
