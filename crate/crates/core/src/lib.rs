//! Predefined evenly-distributed class centroids (PEDCC): k unit vectors on
//! the hypersphere of R^n whose pairwise cosines all equal -1/(k-1), used as
//! frozen class weights in cosine classifiers.
//!
//! The crate provides:
//!
//! - [`linalg`] — dense matrices, modified Gram-Schmidt and seeded random
//!   rotations;
//! - [`generator`] — closed-form centroid constructions plus the legacy
//!   charge-repulsion relaxation they replace;
//! - [`frame`] — tight-frame diagnostics: subspace projector, frame sums,
//!   the angle product law and cosine tables;
//! - [`loss`] — additive-margin softmax over cosine logits combined with an
//!   alignment penalty, with exact feature gradients;
//! - [`trainer`] — a small tanh network trained against frozen centroids on
//!   synthetic blobs, measuring feature collapse onto the centroid subspace.
//!
//! All randomness flows through a seeded ChaCha8 stream
//! ([`linalg::RNG_ALGORITHM`]), so every output is reproducible from its
//! seed.
//!
//! ```
//! use pedcc::{generate_pedcc, verify_pedcc, RandomSeed};
//!
//! let set = generate_pedcc(10, 256, RandomSeed(1))?;
//! assert!(set.max_pairwise_cosine_deviation() <= 1e-10);
//!
//! let report = verify_pedcc(&set, 100, RandomSeed(0))?;
//! assert!(report.relative_error <= 1e-9);
//! # Ok::<(), pedcc::Error>(())
//! ```

// Index-based loops mirror the matrix algebra and stay as written.
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod frame;
pub mod generator;
pub mod linalg;
pub mod loss;
pub mod trainer;

pub use error::{Error, Result};
pub use frame::{
    build_projector, cosine_distance_table, decompose_angles, decompose_angles_with, frame_sum,
    frame_sum_with, verify_pedcc, AngleDecomposition, FrameReport, SubspaceProjector,
};
pub use generator::{
    generate_basic_recursive, generate_iterative_charge, generate_pedcc, generate_simplex_lange,
    run_charge_model, ChargeRun, ChargeSimConfig, PedccSet, Provenance,
};
pub use linalg::{
    apply_rotation, gram_schmidt_orthonormalize, sample_rotation, RandomSeed, RealMatrix,
    RotationMatrix, UnitVector, RNG_ALGORITHM,
};
pub use loss::{
    cos_logits, loss_am, loss_mse, loss_total_with_grad, LabeledBatch, LossParams, LossReport,
    MseVariant,
};
pub use trainer::{dim_sweep, make_blobs, train, SynthDataset, ToyModel, TrainConfig, TrainReport};
