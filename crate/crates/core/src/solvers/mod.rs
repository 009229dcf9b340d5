//! Exact offline solvers.

pub mod enumerate;
pub mod matching;
pub mod minimize;
pub mod welfare;

pub use enumerate::{
    allocation_count, enumerate_complete_allocations, CompleteAllocations, DEFAULT_ENUMERATION_CAP,
};
pub use matching::{hopcroft_karp, matching_minimizer_square};
pub use minimize::{
    envy_free_allocations, expected_utility_under_minimizer, minimize_index, price_of_index,
    MinimizationResult, MinimizeOptions, Price, PriceReport,
};
pub use welfare::{max_egalitarian, max_utilitarian, EgalitarianOptimum};
