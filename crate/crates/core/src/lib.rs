//! Numerical laboratory for chordal Schramm–Loewner evolution.
//!
//! The crate is organised bottom-up: [`loewner`] holds the slit maps and
//! conformal chains, [`zipper`] the fast hierarchical pullback, [`driving`]
//! the driving processes, [`trace`] and [`bubbles`] the curve and its
//! complementary components, [`crossing`] the crossing statistics of
//! space-filling traces and [`hitting`] the boundary hitting probabilities.

pub mod bubbles;
pub mod crossing;
pub mod driving;
pub mod error;
pub mod fixtures;
pub mod hitting;
pub mod loewner;
pub mod rng;
pub mod trace;
pub mod zipper;

pub use bubbles::{
    curve_for_resolution, extract_bubbles, extract_bubbles_with, extract_path_bubbles, indicator_sequence,
    k_r_n, type_code, BoundingBox, Bubble, BubbleParams, BubbleSequence, IndicatorSequence,
};
pub use driving::{
    detect_continuation_threshold, refine, sample_sle_driving, sample_sle_driving_refined,
    sample_sle_rho_driving, DrivingPath, ForcePoint,
};
pub use error::{Result, SleError};
pub use loewner::{
    chain_forward, chain_pullback, half_plane_capacity, slit_forward, slit_forward_real,
    slit_inverse, ComplexPoint, ConformalChain, ElementarySlit, ExactSum, Side,
};
pub use zipper::PullbackTree;
pub use trace::{compute_curve, compute_trace, compute_trace_exact, convex_hull, diameter, Contact, Trace};
pub use crossing::{
    bin_endpoints, crossing_counts, crossing_report, crossing_times, default_tolerances, excursions,
    future_trace, harmonic_measure_from_infinity, marked_points, select_by_diameter, select_excursion,
    CountVector, CrossingParams, CrossingReport, CrossingTimes, ExcursionRecord, MarkedPointSet,
};
pub use hitting::{
    beffara_f, beffara_f_with, geometric_hitting, BeffaraF, hitting_trial, hitting_trial_with, hitting_trials, mc_hitting,
    recursion_lower_bound, summarize_trials, z_kappa, HittingEstimate, HittingQuery, Resolution,
};
