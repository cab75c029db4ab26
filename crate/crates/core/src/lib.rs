//! Peakon dynamics for the modified Camassa–Holm equation
//!
//! ```text
//! m_t + [(u² − u_x²) m]_x = 0,    m = u − u_xx
//! ```
//!
//! An N-peakon solution is `u(x, t) = Σ p_i G(x − x_i(t))` with `G(x) = ½e^{−|x|}`
//! and constant amplitudes `p_i`. This crate provides:
//!
//! - [`kernels`]: `G`, its mollifications `G^ε`, `G_x^ε` and the split kernels `f₁`, `f₂`.
//! - [`reg_dynamics`]: the dispersive (double-mollified) particle system, which never collides.
//! - [`limit_dynamics`]: the limiting non-smooth system with sticky merges and an optional split rule.
//! - [`weak_residual`]: pointwise defects and the full weak-form residual of a trajectory.
//! - [`meanfield`]: discretization of measure-valued data and the uniform BV/L∞ diagnostics.
//! - [`ch_reference`]: the classical Camassa–Holm peakon system, used as an integrator canary.
//!
//! ```
//! use mch_peakon::{kernels::Mollifier, reg_dynamics::velocity_field, PeakonEnsemble};
//!
//! let ens = PeakonEnsemble::new(vec![1.0], vec![0.0]).unwrap();
//! let v = velocity_field(&ens, &Mollifier::bump(0.02).unwrap()).unwrap();
//! assert!((v[0] - 1.0 / 6.0).abs() < 2e-3);
//! ```

pub mod ch_reference;
pub mod ensemble;
mod error;
pub mod kernels;
pub mod limit_dynamics;
pub mod meanfield;
pub mod ode;
pub mod quadrature;
pub mod reg_dynamics;
pub mod test_function;
pub mod trajectory;
pub mod weak_residual;

pub use ensemble::PeakonEnsemble;
pub use error::{Error, Result};
pub use kernels::{Mollifier, MollifierFamily};
pub use test_function::TestFunction;
pub use trajectory::{Event, EventKind, Method, Trajectory};
