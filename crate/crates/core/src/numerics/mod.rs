//! Special functions and deterministic quadrature.

pub mod quadrature;
pub mod special;
pub mod sphere;

pub use quadrature::{integrate_1d, try_integrate, Estimate, QuadValue, QuadratureSpec};
pub use special::{beta, gamma, j_integral, ln_beta, ln_gamma, ln_gamma_abs, ln_gamma_pos, reg_inc_beta, reg_inc_beta_pair};
pub use sphere::{
    integrate_sphere, poisson_kernel_average, shell_integral, sphere_area, sphere_average, sphere_average_angle, sphere_constant,
};
