//! First-moment matrix, growth rates and the first-return/Green series.

pub mod growth;
pub mod matrix;
pub mod series;

pub use growth::{
    global_growth_rate, global_growth_rate_with, local_growth_rate, local_growth_rate_with, seneta_sequence,
    GrowthEstimate, GrowthOptions,
};
pub use matrix::{expected_population, moment_matrix, MomentMatrix};
pub use series::{first_return_series, first_return_terms, green_series};
