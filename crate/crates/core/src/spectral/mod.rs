//! Periodic pseudo-spectral kernels shared by every solver.

mod grid;
mod ops;
mod tensor;

pub use grid::PeriodicGrid;
pub use ops::{
    apply_site_matrices, backward_euler_tau, bracket, exact_advect_fourier, fourier_derivative,
    fourier_derivative_in_place, fourier_second_derivative, linear_interp, rk3_transport_step,
    rk4_step, spectral_map, trig_interpolate, trig_weights, upwind_derivative,
    upwind_transport_step, Generator,
};
pub use tensor::{fft_lines, Direction, Tensor};
