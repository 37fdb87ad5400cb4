//! Numerical invariance entropy and topological entropy.

pub mod cover;
pub mod estimate;
pub mod pair;
pub mod separated;
pub mod spanning;

pub use cover::{exact_cover, greedy_cover, r_inv_estimate, verify_cover, Budgets, CoverMethod, SpanningResult};
pub use estimate::{
    fit_growth, h_inv_estimate, lower_bound_series, outer_entropy_sweep, r_inv_series, sandwich_verdict, theorem_check,
    EpsilonRun, GrowthFit, LowerBoundSeries, OuterSweep, SandwichTolerance, TheoremCheck, TheoremVerdict,
};
pub use pair::{certify_admissible, AdmissibilityCertificate, AdmissiblePair, BoxSet};
pub use separated::{check_separated, separated_set, SeparatedCheck, SeparatedResult};
pub use spanning::{coverage_universe, Coverage, CoverageUniverse};
