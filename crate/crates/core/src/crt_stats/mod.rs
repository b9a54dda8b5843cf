//! Statistics of uniform cladograms and of the chain run to stationarity.

mod dynamics;
mod hist;
mod qn;

pub use dynamics::{
    distance_matrix_mc, duality_check, dynkin_check, mean_distance_average, mixing_experiment,
    stationary_phi, stationary_phi_exhaustive, DistanceSample, DualityReport, DynkinReport,
    MixingRow, Start, DUALITY_CAP,
};
pub use hist::{
    subtree_mass_histogram, ChiSquare, MassHistogram, MomentRow, CHI_GRID, CHI_MARGIN, KS_ALPHA,
};
pub use qn::{
    dirichlet_density, dirichlet_moment, local_limit, profiles, q_n_exact, q_n_exhaustive_check,
    q_n_profile_sum, q_n_table, ratio_to_f64, uniform_shape_probability, LocalLimit, QnRow,
    QnTables,
};
