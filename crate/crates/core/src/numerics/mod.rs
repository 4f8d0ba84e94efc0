//! Dense matrices, activation and loss kernels, the gradient tape and the
//! finite-difference checker.

mod gradcheck;
mod matrix;
mod ops;
mod params;
mod rng;
mod tape;

pub use gradcheck::{grad_check, GradCheckReport};
pub use matrix::{affine, Matrix};
pub use ops::{bce, bce_grad, clamp_prob, relu, sigmoid, softmax, tanh, PROB_EPS};
pub use params::{Param, ParamId, ParamStore};
pub use rng::{derive_seed, Rng, RNG_ALGORITHM};
pub use tape::{Tape, Var};
