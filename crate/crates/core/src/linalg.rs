//! Dense real linear algebra used by the centroid generators and the frame
//! analysis: a row-major `f64` matrix, unit vectors, orthogonal matrices and
//! seeded orthogonal-matrix sampling.
//!
//! Everything here is a pure function of its inputs; values are immutable
//! after construction and safe to share across threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Max-abs deviation of `M^T M` from identity tolerated by [`RotationMatrix`].
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// A deflated pivot below this norm counts as linearly dependent.
pub const NEAR_SINGULAR_TOL: f64 = 1e-8;

/// Unit vectors must have norm within this distance of 1.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// Attempt budget for `sample_rotation` before reporting a broken RNG.
const MAX_SAMPLE_ATTEMPTS: u32 = 8;

/// Re-orthogonalize a pivot whose norm shrank below this fraction of its
/// pre-deflation norm. Selective reorthogonalization at a fixed threshold
/// eta keeps the loss of orthogonality near (1 + 1/eta) times round-off,
/// orders of magnitude inside the 1e-10 contract.
const REORTH_FACTOR: f64 = 0.25;

/// Name of the seeded generator used everywhere randomness is needed.
/// Recorded in machine-readable output so runs can be reproduced from
/// (algorithm, seed) alone. Normal deviates come from the ziggurat sampler
/// of `rand_distr`.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Seed newtype for every randomized operation in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomSeed(pub u64);

impl RandomSeed {
    pub fn value(self) -> u64 {
        self.0
    }

    pub(crate) fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for RandomSeed {
    fn from(seed: u64) -> Self {
        RandomSeed(seed)
    }
}

impl std::fmt::Display for RandomSeed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dense row-major matrix of finite 64-bit reals.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    /// Builds a matrix from row-major data, rejecting wrong lengths and
    /// non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidShape(format!(
                "expected {}x{} = {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        for (idx, &v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry {
                    row: idx / cols.max(1),
                    col: idx % cols.max(1),
                });
            }
        }
        Ok(RealMatrix { rows, cols, data })
    }

    /// Builds a matrix from a slice of equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::InvalidShape(format!(
                    "ragged rows: expected {} columns, got {}",
                    c,
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(r, c, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        RealMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> RealMatrix {
        let mut out = RealMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Matrix product `self * other`.
    pub fn mat_mul(&self, other: &RealMatrix) -> Result<RealMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "mat_mul: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = RealMatrix::zeros(self.rows, other.cols);
        // i-k-j order keeps the inner loop running over contiguous rows.
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product `self * v`.
    pub fn mat_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "mat_vec: {}x{} times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// Largest absolute entry of `self - other`; panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &RealMatrix) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Unit-norm vector (Euclidean norm within `1e-12` of 1).
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector {
    components: Vec<f64>,
}

impl UnitVector {
    /// Accepts a vector that is already unit-norm.
    pub fn try_new(components: Vec<f64>) -> Result<Self> {
        for &v in &components {
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry { row: 0, col: 0 });
            }
        }
        let n = norm(&components);
        if (n - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::InvalidShape(format!(
                "unit vector norm {n:.17} deviates from 1 by more than {UNIT_NORM_TOL:e}"
            )));
        }
        Ok(UnitVector { components })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(mut components: Vec<f64>) -> Result<Self> {
        let n = norm(&components);
        if n <= 1e-300 {
            return Err(Error::ZeroVector {
                norm: n,
                min: 1e-300,
            });
        }
        for v in &mut components {
            *v /= n;
        }
        Ok(UnitVector { components })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.components
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.components
    }
}

/// Orthogonal `dim x dim` matrix: `M^T M` within [`ORTHOGONALITY_TOL`] of
/// identity in max-abs norm.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationMatrix {
    matrix: RealMatrix,
}

impl RotationMatrix {
    /// Validates orthogonality of an arbitrary square matrix.
    pub fn try_new(matrix: RealMatrix) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::DimensionMismatch(format!(
                "rotation matrix must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let residual = orthogonality_residual(&matrix);
        if residual > ORTHOGONALITY_TOL {
            return Err(Error::NotOrthogonal { residual });
        }
        Ok(RotationMatrix { matrix })
    }

    /// Internal constructor for matrices produced by our own
    /// orthonormalization, which lands far below the tolerance.
    pub(crate) fn from_orthonormalized(matrix: RealMatrix) -> Self {
        debug_assert_eq!(matrix.rows(), matrix.cols());
        RotationMatrix { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        RotationMatrix {
            matrix: RealMatrix::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.matrix
    }
}

/// Max-abs entry of `M^T M - I`.
pub fn orthogonality_residual(m: &RealMatrix) -> f64 {
    let n = m.rows();
    // Work on the transpose so each column becomes a contiguous row.
    let t = m.transpose();
    let mut residual: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            let v = dot(t.row(i), t.row(j));
            let target = if i == j { 1.0 } else { 0.0 };
            residual = residual.max((v - target).abs());
        }
    }
    residual
}

/// Dot product with four independent accumulators (deterministic order).
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let chunks = a.len() / 4 * 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    let mut i = 0;
    while i < chunks {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
        i += 4;
    }
    let mut s = (s0 + s2) + (s1 + s3);
    while i < a.len() {
        s += a[i] * b[i];
        i += 1;
    }
    s
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Pairwise (tree) summation; deterministic and more accurate than a plain
/// left fold on long inputs.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// `y -= alpha * x`
fn deflate_against(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi -= alpha * xi;
    }
}

/// One fused pass: applies `v -= alpha * x` elementwise and accumulates the
/// dot product of the updated `v` with `w`. Element t of `v` is final before
/// it enters the dot, so the result equals running the subtraction pass and
/// then a separate dot.
fn deflate_and_dot(v: &mut [f64], alpha: f64, x: &[f64], w: &[f64]) -> f64 {
    debug_assert_eq!(v.len(), x.len());
    debug_assert_eq!(v.len(), w.len());
    let n = v.len();
    let chunks = n / 4 * 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    let mut t = 0;
    while t < chunks {
        let v0 = v[t] - alpha * x[t];
        let v1 = v[t + 1] - alpha * x[t + 1];
        let v2 = v[t + 2] - alpha * x[t + 2];
        let v3 = v[t + 3] - alpha * x[t + 3];
        v[t] = v0;
        v[t + 1] = v1;
        v[t + 2] = v2;
        v[t + 3] = v3;
        s0 += w[t] * v0;
        s1 += w[t + 1] * v1;
        s2 += w[t + 2] * v2;
        s3 += w[t + 3] * v3;
        t += 4;
    }
    let mut s = (s0 + s2) + (s1 + s3);
    while t < n {
        v[t] -= alpha * x[t];
        s += w[t] * v[t];
        t += 1;
    }
    s
}

/// Sequentially deflates `v` against each accepted column (strict modified
/// Gram-Schmidt order), pipelining each subtraction with the next
/// coefficient's dot product.
fn deflate_sweep(v: &mut [f64], accepted: &[Vec<f64>]) {
    let Some(first) = accepted.first() else {
        return;
    };
    let mut coeff = dot(first, v);
    for pair in accepted.windows(2) {
        coeff = deflate_and_dot(v, coeff, &pair[0], &pair[1]);
    }
    deflate_against(v, coeff, accepted.last().expect("nonempty"));
}

/// Draws a `rows x cols` matrix of independent standard-normal entries.
pub fn standard_normal_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> RealMatrix {
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    RealMatrix { rows, cols, data }
}

/// Seeded standard-normal vector; handy for reproducible query vectors.
pub fn standard_normal_vector(dim: usize, seed: RandomSeed) -> Vec<f64> {
    let mut rng = seed.rng();
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Modified Gram-Schmidt orthonormalization of the columns of a square
/// matrix, deflating each pivot against the already-accepted columns and
/// re-deflating when cancellation eats too much of its norm.
///
/// Returns `NearSingular` when a deflated pivot norm falls below
/// [`NEAR_SINGULAR_TOL`]; random-matrix callers should resample.
pub fn gram_schmidt_orthonormalize(m: &RealMatrix) -> Result<RotationMatrix> {
    if m.rows() != m.cols() {
        return Err(Error::DimensionMismatch(format!(
            "gram_schmidt_orthonormalize needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    let mut accepted: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v: Vec<f64> = (0..n).map(|i| m.get(i, j)).collect();
        let before = norm(&v);
        deflate_sweep(&mut v, &accepted);
        let mut after = norm(&v);
        if after < REORTH_FACTOR * before {
            // Heavy cancellation: one more sweep restores orthogonality to
            // round-off level.
            deflate_sweep(&mut v, &accepted);
            after = norm(&v);
        }
        if after < NEAR_SINGULAR_TOL {
            return Err(Error::NearSingular {
                pivot: j,
                norm: after,
                threshold: NEAR_SINGULAR_TOL,
            });
        }
        let inv = 1.0 / after;
        for x in &mut v {
            *x *= inv;
        }
        accepted.push(v);
    }
    let mut out = RealMatrix::zeros(n, n);
    for (j, q) in accepted.iter().enumerate() {
        for (i, &x) in q.iter().enumerate() {
            out.data[i * n + j] = x;
        }
    }
    Ok(RotationMatrix::from_orthonormalized(out))
}

/// Draws a Haar-like random rotation: a standard-normal `dim x dim` matrix
/// pushed through [`gram_schmidt_orthonormalize`]. Deterministic for a fixed
/// seed; resamples on `NearSingular` up to 8 times.
pub fn sample_rotation(dim: usize, seed: RandomSeed) -> Result<RotationMatrix> {
    if dim == 0 {
        return Err(Error::InvalidShape(
            "rotation dimension must be at least 1".to_string(),
        ));
    }
    let mut rng = seed.rng();
    for _ in 0..MAX_SAMPLE_ATTEMPTS {
        let draw = standard_normal_matrix(dim, dim, &mut rng);
        match gram_schmidt_orthonormalize(&draw) {
            Ok(rotation) => return Ok(rotation),
            Err(Error::NearSingular { .. }) => continue,
            Err(other) => return Err(other),
        }
    }
    Err(Error::SamplingFailed {
        attempts: MAX_SAMPLE_ATTEMPTS,
    })
}

/// Rotates a set of row vectors: returns `points * u^T`, so each output row
/// is `U` applied to the corresponding input row. Inner products between
/// rows are preserved to round-off.
pub fn apply_rotation(u: &RotationMatrix, points: &RealMatrix) -> Result<RealMatrix> {
    if u.dim() != points.cols() {
        return Err(Error::DimensionMismatch(format!(
            "apply_rotation: rotation is {}-dimensional but points have {} columns",
            u.dim(),
            points.cols()
        )));
    }
    let n = u.dim();
    let mut out = RealMatrix::zeros(points.rows(), n);
    for i in 0..points.rows() {
        let p = points.row(i);
        let out_row = out.row_mut(i);
        for (j, slot) in out_row.iter_mut().enumerate() {
            *slot = dot(u.matrix.row(j), p);
        }
    }
    Ok(out)
}

/// Applies a rotation to a single vector (`U * v`).
pub fn rotate_vector(u: &RotationMatrix, v: &[f64]) -> Result<Vec<f64>> {
    if u.dim() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "rotate_vector: rotation is {}-dimensional but vector has length {}",
            u.dim(),
            v.len()
        )));
    }
    Ok((0..u.dim()).map(|i| dot(u.matrix.row(i), v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_rejects_wrong_length_and_non_finite() {
        assert!(matches!(
            RealMatrix::from_vec(2, 2, vec![1.0, 2.0, 3.0]),
            Err(Error::InvalidShape(_))
        ));
        assert!(matches!(
            RealMatrix::from_vec(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFiniteEntry { .. })
        ));
    }

    #[test]
    fn gram_schmidt_keeps_identity() {
        let id = RealMatrix::identity(3);
        let q = gram_schmidt_orthonormalize(&id).unwrap();
        assert_eq!(q.matrix().max_abs_diff(&RealMatrix::identity(3)), 0.0);
    }

    #[test]
    fn gram_schmidt_normalizes_scaled_axes() {
        // columns (2,0), (0,3)
        let m = RealMatrix::from_vec(2, 2, vec![2.0, 0.0, 0.0, 3.0]).unwrap();
        let q = gram_schmidt_orthonormalize(&m).unwrap();
        assert!(q.matrix().max_abs_diff(&RealMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn gram_schmidt_random_draw_is_orthogonal() {
        let mut rng = RandomSeed(42).rng();
        let m = standard_normal_matrix(5, 5, &mut rng);
        let q = gram_schmidt_orthonormalize(&m).unwrap();
        let residual = orthogonality_residual(q.matrix());
        assert!(residual <= 1e-10, "residual {residual:e}");
    }

    #[test]
    fn gram_schmidt_rejects_dependent_columns() {
        // second column is twice the first
        let m = RealMatrix::from_vec(2, 2, vec![1.0, 2.0, 1.0, 2.0]).unwrap();
        assert!(matches!(
            gram_schmidt_orthonormalize(&m),
            Err(Error::NearSingular { pivot: 1, .. })
        ));
    }

    #[test]
    fn gram_schmidt_rejects_non_square() {
        let m = RealMatrix::zeros(2, 3);
        assert!(matches!(
            gram_schmidt_orthonormalize(&m),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn sample_rotation_dim_one_is_sign() {
        let r = sample_rotation(1, RandomSeed(5)).unwrap();
        let v = r.matrix().get(0, 0);
        assert!((v.abs() - 1.0).abs() < 1e-15, "got {v}");
    }

    #[test]
    fn sample_rotation_is_deterministic() {
        let a = sample_rotation(10, RandomSeed(7)).unwrap();
        let b = sample_rotation(10, RandomSeed(7)).unwrap();
        assert_eq!(a.matrix().data(), b.matrix().data());
    }

    #[test]
    fn sample_rotation_is_orthogonal() {
        let r = sample_rotation(10, RandomSeed(7)).unwrap();
        assert!(orthogonality_residual(r.matrix()) <= 1e-10);
    }

    #[test]
    fn sample_rotation_rejects_dim_zero() {
        assert!(matches!(
            sample_rotation(0, RandomSeed(1)),
            Err(Error::InvalidShape(_))
        ));
    }

    #[test]
    fn apply_rotation_identity_is_noop() {
        let points = RealMatrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, -0.5, 0.25, 0.0]).unwrap();
        let rotated = apply_rotation(&RotationMatrix::identity(3), &points).unwrap();
        assert_eq!(rotated.data(), points.data());
    }

    #[test]
    fn apply_rotation_quarter_turn() {
        // 90 degree rotation in the plane maps (1,0) to (0,1)
        let u =
            RotationMatrix::try_new(RealMatrix::from_vec(2, 2, vec![0.0, -1.0, 1.0, 0.0]).unwrap())
                .unwrap();
        let p = RealMatrix::from_vec(1, 2, vec![1.0, 0.0]).unwrap();
        let rotated = apply_rotation(&u, &p).unwrap();
        assert!((rotated.get(0, 0)).abs() < 1e-15);
        assert!((rotated.get(0, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn apply_rotation_checks_dimensions() {
        let u = RotationMatrix::identity(3);
        let p = RealMatrix::zeros(2, 4);
        assert!(matches!(
            apply_rotation(&u, &p),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn rotation_matrix_rejects_non_orthogonal() {
        let m = RealMatrix::from_vec(2, 2, vec![1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            RotationMatrix::try_new(m),
            Err(Error::NotOrthogonal { .. })
        ));
    }

    #[test]
    fn unit_vector_constructors() {
        assert!(UnitVector::try_new(vec![0.6, 0.8]).is_ok());
        assert!(matches!(
            UnitVector::try_new(vec![0.6, 0.9]),
            Err(Error::InvalidShape(_))
        ));
        let u = UnitVector::normalized(vec![3.0, 4.0]).unwrap();
        assert!((u.as_slice()[0] - 0.6).abs() < 1e-15);
        assert!(matches!(
            UnitVector::normalized(vec![0.0, 0.0]),
            Err(Error::ZeroVector { .. })
        ));
    }

    #[test]
    fn pairwise_sum_matches_exact_small_cases() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 5050.0);
    }
}
