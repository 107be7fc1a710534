//! Constructs sets of k evenly-distributed class centroids (PEDCC) on the
//! unit hypersphere of R^n, i.e. k unit vectors whose pairwise cosines all
//! equal -1/(k-1).
//!
//! Three generators are provided:
//! - a recursive closed form that lifts the antipodal pair level by level
//!   ([`generate_basic_recursive`]),
//! - the Lange-Wu regular-simplex formula for k = n+1
//!   ([`generate_simplex_lange`]),
//! - the legacy iterative charge-repulsion relaxation
//!   ([`generate_iterative_charge`]).
//!
//! [`generate_pedcc`] composes the recursive construction with a seeded
//! random rotation so no coordinate ends up shared as an exact zero across
//! all centroids.

use crate::error::{Error, Result};
use crate::linalg::{
    apply_rotation, dot, norm, sample_rotation, RandomSeed, RealMatrix, RotationMatrix, UnitVector,
};

use rand::Rng;
use rand_distr::StandardNormal;

/// Rows must be unit to this tolerance for every provenance.
pub const ROW_NORM_TOL: f64 = 1e-10;

/// Pairwise-cosine tolerance enforced for analytically generated sets.
pub const ANALYTIC_COSINE_TOL: f64 = 1e-10;

/// Centroid-sum tolerance (scaled by sqrt(k)) for analytically generated sets.
pub const ANALYTIC_SUM_TOL: f64 = 1e-9;

/// Two charge-model points closer than this are treated as coincident.
const COINCIDENT_TOL: f64 = 1e-12;

/// Magnitude of the jitter applied to coincident charge-model points.
const JITTER_MAGNITUDE: f64 = 1e-6;

/// A coordinate column counts as all-zero when every entry is below this.
const ZERO_COLUMN_TOL: f64 = 1e-12;

/// Rotation resampling budget for the zero-column check.
const MAX_ROTATION_ATTEMPTS: u32 = 16;

/// How a centroid set was produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    /// Recursive closed-form construction.
    AnalyticRecursive,
    /// Regular-simplex closed form (k = n+1 only).
    SimplexLange,
    /// Charge-repulsion relaxation; accuracy is reported, not guaranteed.
    IterativeCharge { seed: RandomSeed },
    /// A parent set composed with a seeded random rotation.
    Rotated {
        parent: Box<Provenance>,
        seed: RandomSeed,
    },
}

impl Provenance {
    /// True when the exact pairwise-cosine invariant is guaranteed by
    /// construction (closed forms and their rotations).
    pub fn is_analytic_grade(&self) -> bool {
        match self {
            Provenance::AnalyticRecursive | Provenance::SimplexLange => true,
            Provenance::IterativeCharge { .. } => false,
            Provenance::Rotated { parent, .. } => parent.is_analytic_grade(),
        }
    }

    /// Short textual tag, e.g. `rotated(analytic-recursive)`.
    pub fn tag(&self) -> String {
        match self {
            Provenance::AnalyticRecursive => "analytic-recursive".to_string(),
            Provenance::SimplexLange => "simplex-lange".to_string(),
            Provenance::IterativeCharge { .. } => "iterative-charge".to_string(),
            Provenance::Rotated { parent, .. } => format!("rotated({})", parent.tag()),
        }
    }

    /// The seed involved in producing the set, when there is one.
    pub fn seed(&self) -> Option<RandomSeed> {
        match self {
            Provenance::AnalyticRecursive | Provenance::SimplexLange => None,
            Provenance::IterativeCharge { seed } => Some(*seed),
            Provenance::Rotated { seed, .. } => Some(*seed),
        }
    }
}

/// k unit vectors in R^n with pairwise cosines -1/(k-1), one centroid per row.
#[derive(Debug, Clone, PartialEq)]
pub struct PedccSet {
    k: usize,
    n: usize,
    points: RealMatrix,
    provenance: Provenance,
}

impl PedccSet {
    /// Validates and wraps a point matrix. Unit rows are required for every
    /// provenance; the pairwise-cosine and zero-sum invariants are enforced
    /// only for analytic-grade provenance (iterative sets report their
    /// deviations instead).
    pub fn from_points(points: RealMatrix, provenance: Provenance) -> Result<Self> {
        let k = points.rows();
        let n = points.cols();
        if k < 2 {
            return Err(Error::InvalidShape(format!(
                "a centroid set needs at least 2 points, got {k}"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidShape(
                "ambient dimension must be at least 1".to_string(),
            ));
        }
        if provenance.is_analytic_grade() && k > n + 1 {
            return Err(Error::InvalidShape(format!(
                "cannot place {k} evenly-distributed points in {n} dimensions (k must be <= n+1)"
            )));
        }
        for i in 0..k {
            let rn = norm(points.row(i));
            if (rn - 1.0).abs() > ROW_NORM_TOL {
                return Err(Error::InvalidShape(format!(
                    "row {i} has norm {rn:.17}, not unit within {ROW_NORM_TOL:e}"
                )));
            }
        }
        let set = PedccSet {
            k,
            n,
            points,
            provenance,
        };
        if set.provenance.is_analytic_grade() {
            let deviation = set.max_pairwise_cosine_deviation();
            if deviation > ANALYTIC_COSINE_TOL {
                return Err(Error::InvalidShape(format!(
                    "analytic-grade set deviates from the equal-cosine invariant by {deviation:.3e}"
                )));
            }
            let sum_norm = set.centroid_sum_norm();
            let limit = ANALYTIC_SUM_TOL * (k as f64).sqrt();
            if sum_norm > limit {
                return Err(Error::InvalidShape(format!(
                    "analytic-grade centroid sum has norm {sum_norm:.3e} (limit {limit:.3e})"
                )));
            }
        }
        Ok(set)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> &RealMatrix {
        &self.points
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Centroid `i` as a unit vector. Rows are unit to 1e-10 by
    /// construction; the residual is normalized away here so the stricter
    /// `UnitVector` tolerance always holds.
    pub fn centroid(&self, i: usize) -> UnitVector {
        UnitVector::normalized(self.points.row(i).to_vec())
            .expect("centroid rows are near-unit by construction")
    }

    /// Ideal pairwise cosine -1/(k-1).
    pub fn target_cosine(&self) -> f64 {
        -1.0 / (self.k as f64 - 1.0)
    }

    /// Gram matrix of the centroids (k x k).
    pub fn gram(&self) -> RealMatrix {
        let mut g = RealMatrix::zeros(self.k, self.k);
        for i in 0..self.k {
            for j in i..self.k {
                let v = dot(self.points.row(i), self.points.row(j));
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        g
    }

    /// Largest |<a_i, a_j> + 1/(k-1)| over all pairs i != j.
    pub fn max_pairwise_cosine_deviation(&self) -> f64 {
        let target = self.target_cosine();
        let mut worst: f64 = 0.0;
        for i in 0..self.k {
            for j in (i + 1)..self.k {
                let c = dot(self.points.row(i), self.points.row(j));
                worst = worst.max((c - target).abs());
            }
        }
        worst
    }

    /// Norm of the centroid sum; zero for an ideal set.
    pub fn centroid_sum_norm(&self) -> f64 {
        let mut sum = vec![0.0; self.n];
        for i in 0..self.k {
            for (s, &x) in sum.iter_mut().zip(self.points.row(i)) {
                *s += x;
            }
        }
        norm(&sum)
    }

    /// Applies a rotation, wrapping the provenance.
    pub fn rotate(&self, rotation: &RotationMatrix, seed: RandomSeed) -> Result<PedccSet> {
        let rotated = apply_rotation(rotation, &self.points)?;
        PedccSet::from_points(
            rotated,
            Provenance::Rotated {
                parent: Box::new(self.provenance.clone()),
                seed,
            },
        )
    }
}

/// Closed-form construction of k evenly-distributed points in R^n,
/// 2 <= k <= n+1.
///
/// The base case is the antipodal pair on the last coordinate axis. Each
/// level lifts the (k-1)-point set from the orthogonal complement of a fresh
/// axis: the sub-points are scaled by sqrt(k(k-2))/(k-1) and shifted by
/// -1/(k-1) along the new axis, whose unit vector becomes the k-th centroid.
/// The output occupies the trailing k-1 coordinates; the leading n-k+1
/// coordinates are zero.
pub fn generate_basic_recursive(k: usize, n: usize) -> Result<PedccSet> {
    if k < 2 || k > n + 1 {
        return Err(Error::InvalidShape(format!(
            "basic construction needs 2 <= k <= n+1, got k={k}, n={n}"
        )));
    }
    // Build in the minimal ambient dimension k-1, then left-pad with zeros.
    let mut level: Vec<Vec<f64>> = vec![vec![-1.0], vec![1.0]];
    for j in 3..=k {
        let t = j as f64;
        let lift = (t * (t - 2.0)).sqrt() / (t - 1.0);
        let shift = -1.0 / (t - 1.0);
        let mut next: Vec<Vec<f64>> = level
            .iter()
            .map(|sub| {
                let mut row: Vec<f64> = sub.iter().map(|&x| lift * x).collect();
                row.push(shift);
                row
            })
            .collect();
        let mut apex = vec![0.0; j - 1];
        apex[j - 2] = 1.0;
        next.push(apex);
        level = next;
    }
    let pad = n - (k - 1);
    let rows: Vec<Vec<f64>> = level
        .into_iter()
        .map(|tail| {
            let mut row = vec![0.0; pad];
            row.extend(tail);
            row
        })
        .collect();
    PedccSet::from_points(RealMatrix::from_rows(&rows)?, Provenance::AnalyticRecursive)
}

/// Regular-simplex construction of n+1 evenly-distributed points in R^n:
/// a_1 = n^(-1/2) * 1, and a_i = c * 1 + d * e_(i-1) for 2 <= i <= n+1 with
/// c = -(1 + sqrt(n+1)) / n^(3/2) and d = sqrt((n+1)/n).
pub fn generate_simplex_lange(n: usize) -> Result<PedccSet> {
    if n < 1 {
        return Err(Error::InvalidShape(
            "simplex construction needs n >= 1".to_string(),
        ));
    }
    let nf = n as f64;
    let c = -(1.0 + (nf + 1.0).sqrt()) / (nf * nf.sqrt());
    let d = ((nf + 1.0) / nf).sqrt();
    let mut rows = Vec::with_capacity(n + 1);
    rows.push(vec![1.0 / nf.sqrt(); n]);
    for i in 0..n {
        let mut row = vec![c; n];
        row[i] += d;
        rows.push(row);
    }
    PedccSet::from_points(RealMatrix::from_rows(&rows)?, Provenance::SimplexLange)
}

fn has_near_zero_column(points: &RealMatrix) -> bool {
    (0..points.cols()).any(|j| (0..points.rows()).all(|i| points.get(i, j).abs() < ZERO_COLUMN_TOL))
}

/// Generates an arbitrary PEDCC set: the basic recursive set composed with a
/// seeded random rotation. If the rotated set leaves some coordinate zero
/// across every centroid (which would freeze that coordinate in downstream
/// gradient use), the rotation is resampled with seed+1.
pub fn generate_pedcc(k: usize, n: usize, seed: RandomSeed) -> Result<PedccSet> {
    let basic = generate_basic_recursive(k, n)?;
    let mut attempt_seed = seed;
    for _ in 0..MAX_ROTATION_ATTEMPTS {
        let rotation = sample_rotation(n, attempt_seed)?;
        let rotated = apply_rotation(&rotation, basic.points())?;
        if !has_near_zero_column(&rotated) {
            return PedccSet::from_points(
                rotated,
                Provenance::Rotated {
                    parent: Box::new(Provenance::AnalyticRecursive),
                    seed: attempt_seed,
                },
            );
        }
        attempt_seed = RandomSeed(attempt_seed.0.wrapping_add(1));
    }
    Err(Error::SamplingFailed {
        attempts: MAX_ROTATION_ATTEMPTS,
    })
}

/// Parameters of the charge-repulsion relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeSimConfig {
    /// Force-to-velocity step per iteration.
    pub step_size: f64,
    /// Per-iteration velocity retention, in (0, 1].
    pub damping: f64,
    pub max_iters: usize,
    /// Stop when no point moved farther than this in one iteration.
    pub stop_displacement: f64,
    pub seed: RandomSeed,
}

impl Default for ChargeSimConfig {
    fn default() -> Self {
        ChargeSimConfig {
            step_size: 1e-2,
            damping: 0.9,
            max_iters: 10_000,
            stop_displacement: 1e-9,
            seed: RandomSeed(0),
        }
    }
}

impl ChargeSimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::InvalidShape(format!(
                "step_size must be positive, got {}",
                self.step_size
            )));
        }
        if !(self.damping.is_finite() && self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidShape(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidShape(
                "max_iters must be positive".to_string(),
            ));
        }
        if !(self.stop_displacement.is_finite() && self.stop_displacement > 0.0) {
            return Err(Error::InvalidShape(format!(
                "stop_displacement must be positive, got {}",
                self.stop_displacement
            )));
        }
        Ok(())
    }
}

/// Full result of a charge-model run, including the per-iteration charge
/// energy (sum of 1/distance over pairs) for convergence diagnostics.
#[derive(Debug, Clone)]
pub struct ChargeRun {
    pub set: PedccSet,
    pub iterations: usize,
    pub final_max_displacement: f64,
    pub energy_trace: Vec<f64>,
}

/// Runs the charge-repulsion relaxation: k like charges on the unit sphere
/// of R^n, repelling along chords with inverse-square magnitude. Each
/// iteration projects the net force onto every point's tangent plane,
/// updates a damped velocity, steps, and renormalizes. Stops at `max_iters`
/// or when the largest single-point displacement falls below
/// `stop_displacement`. Unlike the closed forms, this accepts k > n+1; the
/// result carries no distribution guarantee either way.
pub fn run_charge_model(k: usize, n: usize, cfg: &ChargeSimConfig) -> Result<ChargeRun> {
    if k < 2 || n < 2 {
        return Err(Error::InvalidShape(format!(
            "charge model needs k >= 2 and n >= 2, got k={k}, n={n}"
        )));
    }
    cfg.validate()?;
    let mut rng = cfg.seed.rng();

    let mut pos = vec![0.0f64; k * n];
    for i in 0..k {
        loop {
            let row = &mut pos[i * n..(i + 1) * n];
            for x in row.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
            let rn = norm(row);
            if rn > 1e-12 {
                for x in row.iter_mut() {
                    *x /= rn;
                }
                break;
            }
        }
    }

    let mut vel = vec![0.0f64; k * n];
    let mut forces = vec![0.0f64; k * n];
    let mut diff = vec![0.0f64; n];
    let mut energy_trace = Vec::with_capacity(cfg.max_iters);
    let mut iterations = 0;
    let mut final_max_displacement = f64::INFINITY;

    for iter in 0..cfg.max_iters {
        // Pairwise force pass. Coincident pairs are jittered apart and the
        // pass restarts, since previously accumulated forces are stale.
        let mut jitter_rounds = 0u32;
        let energy = 'force: loop {
            forces.iter_mut().for_each(|f| *f = 0.0);
            let mut energy = 0.0;
            for i in 0..k {
                for j in (i + 1)..k {
                    let (head, tail) = pos.split_at_mut(j * n);
                    let pi = &head[i * n..i * n + n];
                    let pj = &mut tail[..n];
                    let mut dist2 = 0.0;
                    for d in 0..n {
                        let delta = pi[d] - pj[d];
                        diff[d] = delta;
                        dist2 += delta * delta;
                    }
                    let dist = dist2.sqrt();
                    if dist < COINCIDENT_TOL {
                        if jitter_rounds >= 3 {
                            return Err(Error::DegenerateState {
                                i,
                                j,
                                attempts: jitter_rounds,
                            });
                        }
                        jitter_rounds += 1;
                        for idx in [i, j] {
                            let row = &mut pos[idx * n..(idx + 1) * n];
                            for x in row.iter_mut() {
                                let noise: f64 = rng.sample(StandardNormal);
                                *x += JITTER_MAGNITUDE * noise;
                            }
                            let rn = norm(row);
                            if rn > 1e-12 {
                                for x in row.iter_mut() {
                                    *x /= rn;
                                }
                            }
                        }
                        continue 'force;
                    }
                    energy += 1.0 / dist;
                    let scale = 1.0 / (dist2 * dist);
                    for d in 0..n {
                        let f = diff[d] * scale;
                        forces[i * n + d] += f;
                        forces[j * n + d] -= f;
                    }
                }
            }
            break energy;
        };
        energy_trace.push(energy);

        let mut max_disp: f64 = 0.0;
        for i in 0..k {
            let force = &forces[i * n..(i + 1) * n];
            let row = &mut pos[i * n..(i + 1) * n];
            let radial = dot(force, row);
            let mut disp2 = 0.0;
            let mut new_row = vec![0.0; n];
            for d in 0..n {
                let tangent = force[d] - radial * row[d];
                let v = cfg.damping * vel[i * n + d] + cfg.step_size * tangent;
                vel[i * n + d] = v;
                new_row[d] = row[d] + v;
            }
            let rn = norm(&new_row);
            if !rn.is_finite() || rn < 1e-12 {
                return Err(Error::NonFinite {
                    context: "charge-model position update",
                    step: iter,
                });
            }
            for d in 0..n {
                new_row[d] /= rn;
                let delta = new_row[d] - row[d];
                disp2 += delta * delta;
                row[d] = new_row[d];
            }
            max_disp = max_disp.max(disp2.sqrt());
        }

        iterations = iter + 1;
        final_max_displacement = max_disp;
        if max_disp < cfg.stop_displacement {
            break;
        }
    }

    let set = PedccSet::from_points(
        RealMatrix::from_vec(k, n, pos)?,
        Provenance::IterativeCharge { seed: cfg.seed },
    )?;
    Ok(ChargeRun {
        set,
        iterations,
        final_max_displacement,
        energy_trace,
    })
}

/// Charge-model generation returning just the point set.
pub fn generate_iterative_charge(k: usize, n: usize, cfg: &ChargeSimConfig) -> Result<PedccSet> {
    run_charge_model(k, n, cfg).map(|run| run.set)
}
