//! Linear critic over HRR inputs, trained by log-modulus scaled TD(λ).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hrr::{dot_unchecked, Hrr};
use crate::scalar::Scalar;

/// Fixed output bias. Unvisited inputs evaluate near this, which keeps the
/// critic optimistic while rewards are non-positive.
pub const OPTIMISTIC_BIAS: f64 = 1.0;

/// `sgn(x) * ln(|x| + 1)`
pub fn logmod<T: Scalar>(x: T) -> T {
    if x.is_zero() {
        return x;
    }
    num_traits::Float::signum(x) * num_traits::Float::abs(x).ln_1p()
}

/// Sign of the bootstrap term in the TD error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BootstrapSign {
    /// `(r + γ v') - v`
    #[default]
    Plus,
    /// `(r - γ v') - v`, the literal printed form, kept for replication studies.
    Minus,
}

pub fn td_error<T: Scalar>(reward: T, gamma: T, v_next: T, v_cur: T, terminal: bool) -> T {
    td_error_signed(BootstrapSign::Plus, reward, gamma, v_next, v_cur, terminal)
}

pub fn td_error_signed<T: Scalar>(
    sign: BootstrapSign,
    reward: T,
    gamma: T,
    v_next: T,
    v_cur: T,
    terminal: bool,
) -> T {
    if terminal {
        return reward - v_cur;
    }
    match sign {
        BootstrapSign::Plus => (reward + gamma * v_next) - v_cur,
        BootstrapSign::Minus => (reward - gamma * v_next) - v_cur,
    }
}

#[derive(Clone, Debug)]
pub struct ValueNetwork<T: Scalar> {
    weights: Hrr<T>,
    bias: T,
}

impl<T: Scalar> ValueNetwork<T> {
    /// Weights drawn as a random HRR; bias fixed at [`OPTIMISTIC_BIAS`].
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        Ok(Self::with_weights(Hrr::random(n, rng)?))
    }

    pub fn with_weights(weights: Hrr<T>) -> Self {
        Self {
            weights,
            bias: T::of(OPTIMISTIC_BIAS),
        }
    }

    pub fn dimension(&self) -> usize {
        self.weights.len()
    }

    pub fn bias(&self) -> T {
        self.bias
    }

    pub fn weights(&self) -> &Hrr<T> {
        &self.weights
    }

    /// `u . w + b`
    pub fn value(&self, u: &Hrr<T>) -> Result<T> {
        Ok(self.weights.dot(u)? + self.bias)
    }

    #[inline]
    pub(crate) fn value_unchecked(&self, u: &Hrr<T>) -> T {
        dot_unchecked(self.weights.as_slice(), u.as_slice()) + self.bias
    }

    /// `w += alpha * logmod(delta) * e`; the bias never moves.
    pub fn update(&mut self, alpha: T, delta: T, trace: &EligibilityTrace<T>) -> Result<()> {
        let step = alpha * logmod(delta);
        if step.is_zero() {
            return Ok(());
        }
        self.weights.add_scaled(step, &trace.values)
    }
}

#[derive(Clone, Debug)]
pub struct EligibilityTrace<T: Scalar> {
    values: Hrr<T>,
    lambda: T,
}

impl<T: Scalar> EligibilityTrace<T> {
    pub fn new(n: usize, lambda: T) -> Result<Self> {
        if !(T::zero()..=T::one()).contains(&lambda) {
            return Err(Error::InvalidArgument(format!(
                "trace decay must lie in [0, 1], got {lambda}"
            )));
        }
        Ok(Self {
            values: Hrr::zeros(n)?,
            lambda,
        })
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn values(&self) -> &Hrr<T> {
        &self.values
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    /// `e = λ e + u`
    pub fn update(&mut self, u: &Hrr<T>) -> Result<()> {
        if u.len() != self.values.len() {
            return Err(Error::DimensionMismatch {
                left: self.values.len(),
                right: u.len(),
            });
        }
        self.values.scale_in_place(self.lambda);
        self.values.add_scaled(T::one(), u)
    }

    pub fn clear(&mut self) {
        self.values.fill_zero();
    }

    pub fn is_clear(&self) -> bool {
        self.values.is_zero()
    }
}
