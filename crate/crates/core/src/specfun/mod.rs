//! Special functions and quadrature for the analytic side: Gamma, zeta,
//! Bessel K of complex order, the cutoff F, its Mellin transform and the
//! dual kernels of the approximate functional equation.

pub mod bessel;
pub mod contour;
pub mod gamma;
pub mod kernels;
pub mod quad;
pub mod zeta;

pub use bessel::bessel_k;
pub use contour::{contour_integral, ContourKind, ContourSpec};
pub use gamma::{gamma, gamma_ratio, gamma_ratio_z};
pub use kernels::{cutoff_f, cutoff_f_complement, cutoff_f_deriv, dual_kernel_h, f_envelope, h_envelope, k0_at_2, mellin_f, mellin_f_direct, DualKernel, KernelTables, H_DECAY_CONSTANT, H_FAST_ENVELOPE};
pub use quad::{gauss_kronrod, tanh_sinh, tanh_sinh_dist, QuadratureSpec, Scheme};
pub use zeta::{hurwitz_zeta, zeta, zeta_real, zeta_recip};
