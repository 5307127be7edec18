//! Two-type birth-death fixture with closed-form answers.
//!
//! Type 1 splits at rate 1 into nothing (probability `p`) or two type-2
//! children (probability `q = 1 - p`); type 2 splits at rate 1 into nothing
//! (probability `alpha`) or one type-1 child (probability `beta = 1 - alpha`):
//!
//! ```text
//! B_1(x) = p - x_1 + q x_2^2,    B_2(x) = alpha - x_2 + beta x_1
//! ```
//!
//! With pure-death marks `y` (type 1) and `z` (type 2) the marked root solves
//! `q v^2 - u + p y = 0`, `beta u - v + alpha z = 0`, which has the explicit
//! minimal solution returned by [`example_uv`].

use crate::error::{Error, Result};
use crate::model::{OffspringVector, ProcessSpec, TypeLaw};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExampleParams {
    p: f64,
    alpha: f64,
}

impl ExampleParams {
    pub fn new(p: f64, alpha: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("alpha", alpha)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must lie in (0, 1), got {v}"),
                });
            }
        }
        Ok(Self { p, alpha })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn q(&self) -> f64 {
        1.0 - self.p
    }

    pub fn beta(&self) -> f64 {
        1.0 - self.alpha
    }
}

pub fn example_spec(params: ExampleParams) -> ProcessSpec {
    let ov = |v: [u32; 2]| OffspringVector::new(v.to_vec());
    ProcessSpec::new(
        2,
        vec![
            TypeLaw::new(1.0, vec![(ov([0, 0]), params.p), (ov([0, 2]), params.q())]),
            TypeLaw::new(
                1.0,
                vec![(ov([0, 0]), params.alpha), (ov([1, 0]), params.beta())],
            ),
        ],
    )
    .expect("fixture parameters are validated")
}

/// `rho(1) = sqrt(2 q beta) - 1`.
pub fn example_rho(params: ExampleParams) -> f64 {
    (2.0 * params.q() * params.beta()).sqrt() - 1.0
}

/// Closed-form marked root `(u(y, z), v(y, z))` under pure-death marks.
pub fn example_uv(params: ExampleParams, y: f64, z: f64) -> Result<(f64, f64)> {
    let (p, q, alpha, beta) = (params.p, params.q(), params.alpha, params.beta());
    let disc = 1.0 - 4.0 * q * beta * (p * beta * y + alpha * z);
    if disc < 0.0 {
        return Err(Error::NegativeDiscriminant(disc));
    }
    let root = 1.0 - disc.sqrt();
    let u = root / (2.0 * q * beta * beta) - alpha * z / beta;
    let v = root / (2.0 * q * beta);
    Ok((u, v))
}

/// The conditional extinction-time generating functions written with the
/// supercritical denominators `2(1 - 2 q beta + q beta^2)` and
/// `2(1 - q beta)`. Only meaningful when `2 q beta > 1`; they coincide with
/// `u / q_1` and `v / q_2`.
pub fn example_conditional_uv(params: ExampleParams, y: f64, z: f64) -> Result<(f64, f64)> {
    let (p, q, alpha, beta) = (params.p, params.q(), params.alpha, params.beta());
    let disc = 1.0 - 4.0 * q * beta * (p * beta * y + alpha * z);
    if disc < 0.0 {
        return Err(Error::NegativeDiscriminant(disc));
    }
    let root = 1.0 - disc.sqrt();
    let u = (root - 2.0 * q * beta * alpha * z) / (2.0 * (1.0 - 2.0 * q * beta + q * beta * beta));
    let v = root / (2.0 * (1.0 - q * beta));
    Ok((u, v))
}
