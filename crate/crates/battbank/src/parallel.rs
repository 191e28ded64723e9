//! Multi-threaded policy comparison.
//!
//! Each `(size, seed)` job owns its random streams and weights, so jobs run
//! independently on the rayon pool; the table is assembled afterwards in
//! grid order, making the result identical to the sequential harness.

use battbank_core::{run_job_with_weights, ComparisonSpec, ComparisonTable, WeightVector};
use rayon::prelude::*;

pub fn compare_policies_parallel(
    spec: &ComparisonSpec,
    weights: Option<&WeightVector>,
) -> ComparisonTable {
    let outcomes = spec
        .jobs()
        .into_par_iter()
        .map(|(i, seed)| run_job_with_weights(spec, i, seed, weights))
        .collect();
    ComparisonTable::assemble(spec, outcomes)
}
