//! Mellin transforms in log-coordinates: grids, FFT slices, direct quadrature,
//! closed forms and the complex Gamma function.

mod closed_form;
pub mod gamma;
mod grid;
mod kernel;
mod quadrature;
mod transform;

pub use closed_form::{ln_mellin_expcost, mellin_expcost_closed};
pub use gamma::{gamma, gamma_real, ln_gamma, ln_gamma_real};
pub use grid::{ec_transform, lagrange_weights, GridAxis, GridFunction, LogGrid, STENCIL};
pub use kernel::{KernelSpec, SampledKernel};
pub use quadrature::{mellin_quadrature, mellin_quadrature_many, QuadratureBox};
pub use transform::{
    mellin_forward, mellin_inverse, taper_weight, ForwardOptions, FrequencyAxis, InverseOutput,
    MellinSlice,
};
pub(crate) use transform::fft_nd;
