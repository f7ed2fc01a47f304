//! Sparse time-frequency decomposition of oscillatory signals into modes
//! `a(t) cos θ(t)` by nonlinear matching pursuit, together with executable
//! checks of the scale-separation, wavelet-concentration and coherence
//! estimates that make such decompositions unique.
//!
//! The crate is organised bottom-up:
//!
//! - [`signal`]: grids, sampled signals, (a, θ) pairs and grid calculus.
//! - [`wavelet`]: the B-spline wavelet and the continuous wavelet transform.
//! - [`separation`]: measured dictionary membership and coherence bounds.
//! - [`ridge`]: scalogram ridges, component recovery and decomposition comparison.
//! - [`pursuit`]: the single-mode least-squares solver and the greedy outer loop.
//! - [`synth`]: example signals with known ground truth.
//! - [`io`] and [`plot`]: file formats and SVG output used by the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod io;
pub mod plot;
pub mod pursuit;
pub mod ridge;
pub mod separation;
pub mod signal;
pub mod synth;
pub mod wavelet;

pub use error::{Result, SparseTfError};
pub use pursuit::{matching_pursuit, p2_objective, partition_domain, solve_p2, P2Result, PursuitConfig};
pub use ridge::{compare_decompositions, extract_ridges, recover_components, ComparisonReport, RidgeCurve};
pub use separation::{
    check_scale_separation, check_well_separated, coherence, verify_cross_term_bound, verify_norm_equivalence,
    PairwiseSeparation, SeparationReport,
};
pub use signal::{
    differentiate, inner_product, reconstruct, Boundary, Decomposition, DictionaryParams, Grid, PhasePair,
    SampledSignal, Termination,
};
pub use wavelet::{cwt, make_wavelet, BSplineWavelet, Scalogram, WaveletMoments};
