//! Mean-value theory of the modified Helmholtz equation `∇²u − λ²u = 0`.
//!
//! The crate is organised bottom-up:
//!
//! - [`specfun`]: modified Bessel functions `I_ν` of half-integer order and the
//!   two normalized radial kernels `a(t)` (ball-mean coefficient) and `U`
//!   (radial entire solution, also the sphere-mean coefficient).
//! - [`domains`]: bounded CSG domains with membership, conservative clearance,
//!   volume and the certificate regions used by the ball detector.
//! - [`quadrature`]: ball/sphere product rules and seeded Monte Carlo means.
//! - [`solutions`]: positive entire solutions used as test functions.
//! - [`verify`]: checks of the mean-value identities.
//! - [`detect`]: inverse characterization of balls from volume means.
//! - [`wos`]: walk-on-spheres Dirichlet solver with survival weights.

pub mod detect;
pub mod domains;
mod error;
pub mod quadrature;
pub mod solutions;
pub mod specfun;
pub mod verify;
pub mod wos;

pub use error::{Error, Result};
pub use specfun::KernelParams;
