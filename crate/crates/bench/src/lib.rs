//! Fixtures shared by the benchmarks.

use falls_core::cohort::generate_synthetic;
use falls_core::{build_view, CohortDataset, FeatureView, Horizon, ItemSchema, Scenario, Scheme};

/// A 51-participant cohort with fall risk driven by two correlated items in Parts II and III.
pub fn cohort(seed: u64) -> CohortDataset {
    let scenario = Scenario::parse(
        "intercept = -5.1\nintercept_12m = -4.6\n\
         coef.item_13 = 0.8\ncoef.item_14 = 0.8\ncoef.item_29 = 0.8\ncoef.item_30 = 0.8\n\
         loading.item_13 = 0.9\nloading.item_14 = 0.9\nloading.item_29 = 0.9\nloading.item_30 = 0.9",
    )
    .expect("fixture scenario parses");
    generate_synthetic(&scenario, &ItemSchema::reference(), seed).expect("fixture cohort is valid")
}

pub fn view(scheme: Scheme) -> FeatureView {
    build_view(&cohort(1), scheme, Horizon::M6).expect("fixture view builds")
}
