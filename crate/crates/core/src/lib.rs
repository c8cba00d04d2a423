//! Bosonic memory channels of optical fibres in the delocalised interaction
//! model.
//!
//! `n` uses of a fibre with single-pulse transmissivity `lambda` and memory
//! `mu` act on the signal modes through a lower-triangular Toeplitz transfer
//! matrix. Its singular value decomposition unravels the channel into `n`
//! independent thermal attenuators whose transmissivities approach samples of
//! a closed-form symbol, which in turn gives the asymptotic capacities.
//!
//! The numerics are generic over [`Real`] (`f32`/`f64`); the `*F64` aliases
//! below fix the scalar for the common case.

// range checks are written as !(x >= lo) so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacities;
pub mod error;
pub mod netsim;
pub mod quadrature;
pub mod scalar;
pub mod specialfn;
pub mod spectral;
pub mod toeplitz;

pub use capacities::{
    attenuator_capacity_status, capacity_brackets, channel_capacity, channel_capacity_with, channel_status,
    dim_positivity_threshold, finite_n_capacity_density, lim_positivity_threshold, per_mode_capacity,
    positivity_threshold, pure_loss_capacity, CapacityKind, CapacityOptions, CapacityResult, CapacityStatus,
    PerModeBound, Threshold,
};
pub use error::{Error, Result};
pub use netsim::{
    convergence_study, finite_m_coefficients, full_interferometer, propagate_gaussian, propagate_unraveled,
    ConvergencePoint, FiniteMCoefficients, GaussianState, Interferometer,
};
pub use scalar::Real;
pub use specialfn::{entropy_g, laguerre_gen_m1, laguerre_row, memory_from_delay};
pub use spectral::{
    eta, eta_dim, eta_lim, eta_sup, level_crossing, q_positive_crossing, tail_convergence_report, Crossing,
    SymbolModel, TailReport,
};
pub use toeplitz::{
    build_dim_matrix, decompose, semigroup_residual, transmissivity_spectrum, ChannelDecomposition, ChannelParams,
    TransferMatrix, TransmissivitySpectrum,
};

pub type ChannelParamsF64 = ChannelParams<f64>;
pub type TransferMatrixF64 = TransferMatrix<f64>;
pub type TransmissivitySpectrumF64 = TransmissivitySpectrum<f64>;
pub type ChannelDecompositionF64 = ChannelDecomposition<f64>;
pub type GaussianStateF64 = GaussianState<f64>;
pub type CapacityResultF64 = CapacityResult<f64>;
pub type TailReportF64 = TailReport<f64>;
pub type ConvergencePointF64 = ConvergencePoint<f64>;
