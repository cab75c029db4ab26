//! The book's chapters, compiled as doctests so every snippet stays runnable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/kernels.md")]
pub mod kernels {}
#[doc = include_str!("../../../book/src/regularized.md")]
pub mod regularized {}
#[doc = include_str!("../../../book/src/limit.md")]
pub mod limit {}
#[doc = include_str!("../../../book/src/weak_residual.md")]
pub mod weak_residual {}
#[doc = include_str!("../../../book/src/meanfield.md")]
pub mod meanfield {}
#[doc = include_str!("../../../book/src/lab.md")]
pub mod lab {}
