//! Forward operators `R_q`, `R^h_q`, `Pi_q`, weighted norms and numerical
//! checks of the identities that tie them to the Mellin transform.

mod correlate;
mod density;
mod identities;
mod kernel_transform;
mod norms;
mod radon;

pub use density::{Density, FnDensity, Synthetic};
pub use identities::{
    ball_frequencies, coarea_check, coarea_check_on, factorization_check, pick_frequencies, prop1_check, prop1_check_orders, prop1_extremal,
    profit_second_derivative_check, projection_check, FactorizationReport, IdentityPoint, IdentityReport,
    InequalityLine, InequalityReport, Operator, SecondDerivativeReport,
};
pub use kernel_transform::{
    profit_forward, profit_grid, rhq_forward, rhq_grid, KernelOptions, KernelScheme,
};
pub use norms::{weighted_norm, NormOrder, WeightedNormSpec};
pub use radon::{
    default_p_grid, radon_forward, radon_grid, radon_level_curve, radon_simplex, radon_volume,
    RadonOptions, RadonScheme,
};
