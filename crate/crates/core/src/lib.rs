//! Monte Carlo laboratory for Gaussian multiplicative chaos (GMC) built over
//! finite atomic base measures in the unit disk.
//!
//! The pipeline is
//!
//! ```text
//! AtomicMeasure ──build_covariance──▶ CovarianceModel ──sample_field──▶ FieldSample
//!                                                                          │
//!                                            gmc_mass / sample_rooted ◀────┘
//!                                                      │
//!                                  bounds / inequalities (Monte Carlo reports)
//! ```
//!
//! Every randomized quantity is keyed by `(base_seed, replica_index)` through a
//! counter-based ChaCha stream, so reports are bit-identical regardless of how
//! many worker threads rayon uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod field;
pub mod gmc;
pub mod inequalities;
pub mod kernel;
pub mod measure;
pub mod stats;

mod error;

pub use error::{Error, Result};

pub use bounds::{
    estimate_s0, exponents, exponents_l2, laplace_transform, small_ball_tail, t0_l2, t0_l2_from_ratio, verify_bound,
    BoundBranch, BoundVerdict, ExponentReport, LaplaceReport, TailReport,
};
pub use field::{sample_field, FieldSample};
pub use gmc::{
    beta_singular_integral, gmc_mass, sample_rooted, verify_change_of_measure, verify_rooted_identity,
    ChangeOfMeasureReport, GmcSample, RootedIdentity, RootedSample, TestStatistic,
};
pub use inequalities::{fkg_check, kahane_check, markov_psd_suite, InequalityKind, InequalityVerdict};
pub use kernel::{
    build_covariance, green_disk, green_subdisk, markov_difference_psd, regularized_entry, CovarianceModel,
    GreenKernel, MarkovPsd,
};
pub use measure::{
    d_energy, generate_cantor_dust, generate_julia_boundary, generate_uniform_grid, load_measure, local_energy,
    save_measure, split_half_plane, Atom, AtomicMeasure, Point, SplitResult,
};
