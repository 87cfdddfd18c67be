//! Exact finite-difference weights of arbitrary derivative and accuracy order.
//!
//! Weights on a set of integer offsets are the unique solution of the moment
//! (Vandermonde) system `sum_j w_j * o_j^p = p! * [p == d]` for
//! `p = 0..n-1`. The system is solved in exact arithmetic: fraction-free
//! (Bareiss) forward elimination over big integers, then rational back
//! substitution. Results are memoized per `(deriv_order, offsets)`.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Result, SfError};

/// Finite-difference weights applied with an implicit `1 / h^deriv_order` factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightSet {
    pub deriv_order: usize,
    pub offsets: Vec<i64>,
    pub weights: Vec<BigRational>,
}

impl WeightSet {
    /// Weight at `offset`, zero when the offset is not part of the stencil.
    pub fn weight(&self, offset: i64) -> BigRational {
        self.offsets
            .iter()
            .position(|&o| o == offset)
            .map(|i| self.weights[i].clone())
            .unwrap_or_else(BigRational::zero)
    }

    pub fn weights_f64(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.to_f64().unwrap_or(f64::NAN)).collect()
    }

    /// Sum of absolute weights, used by stability bounds.
    pub fn abs_sum(&self) -> f64 {
        self.weights
            .iter()
            .map(|w| w.abs().to_f64().unwrap_or(f64::NAN))
            .sum()
    }

    /// Moment `sum_j w_j * o_j^p`, exact.
    pub fn moment(&self, p: u32) -> BigRational {
        self.offsets
            .iter()
            .zip(&self.weights)
            .map(|(&o, w)| w * BigRational::from_integer(BigInt::from(o).pow(p)))
            .fold(BigRational::zero(), |a, b| a + b)
    }

    /// Formal accuracy order: first moment beyond the defining system that
    /// fails to vanish, minus the derivative order.
    pub fn accuracy_order(&self) -> usize {
        let d = self.deriv_order as u32;
        let mut p = self.offsets.len() as u32;
        // Look a few moments past the system; symmetric stencils gain one order.
        while p < self.offsets.len() as u32 + 4 {
            if p != d && !self.moment(p).is_zero() {
                break;
            }
            p += 1;
        }
        (p as usize).saturating_sub(self.deriv_order)
    }
}

/// Symmetric offsets `[-k/2, ..., k/2]` for an even accuracy order `k`.
pub fn centered_offsets(k: usize) -> Result<Vec<i64>> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(SfError::Order(format!(
            "centered stencils need an even order >= 2, got {k}"
        )));
    }
    let r = (k / 2) as i64;
    Ok((-r..=r).collect())
}

fn cache() -> &'static RwLock<HashMap<(usize, Vec<i64>), WeightSet>> {
    static CACHE: OnceLock<RwLock<HashMap<(usize, Vec<i64>), WeightSet>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Exact weights for the `deriv_order`-th derivative on `offsets`.
///
/// Offsets are sorted; the returned set lists weights in ascending offset order.
pub fn fd_weights(deriv_order: usize, offsets: &[i64]) -> Result<WeightSet> {
    let mut sorted = offsets.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(SfError::Arity(format!("offsets must be distinct: {offsets:?}")));
    }
    if sorted.len() < deriv_order + 1 {
        return Err(SfError::Arity(format!(
            "derivative of order {deriv_order} needs at least {} offsets, got {}",
            deriv_order + 1,
            sorted.len()
        )));
    }
    let key = (deriv_order, sorted.clone());
    if let Some(hit) = cache().read().ok().and_then(|c| c.get(&key).cloned()) {
        return Ok(hit);
    }
    let weights = solve_moments(deriv_order, &sorted);
    let set = WeightSet { deriv_order, offsets: sorted, weights };
    if let Ok(mut c) = cache().write() {
        c.insert(key, set.clone());
    }
    Ok(set)
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

fn solve_moments(d: usize, offsets: &[i64]) -> Vec<BigRational> {
    let n = offsets.len();
    // Augmented matrix [V | b], V[p][j] = o_j^p.
    let mut a: Vec<Vec<BigInt>> = (0..n)
        .map(|p| {
            let mut row: Vec<BigInt> = offsets.iter().map(|&o| BigInt::from(o).pow(p as u32)).collect();
            row.push(if p == d { factorial(d) } else { BigInt::zero() });
            row
        })
        .collect();

    // Bareiss fraction-free elimination with row pivoting.
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            let swap = (k + 1..n)
                .find(|&r| !a[r][k].is_zero())
                .expect("Vandermonde system with distinct nodes is nonsingular");
            a.swap(k, swap);
        }
        for i in k + 1..n {
            for j in k + 1..=n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }

    let mut x = vec![BigRational::zero(); n];
    for i in (0..n).rev() {
        let mut acc = BigRational::from_integer(a[i][n].clone());
        for j in i + 1..n {
            acc -= BigRational::from_integer(a[i][j].clone()) * &x[j];
        }
        x[i] = acc / BigRational::from_integer(a[i][i].clone());
    }
    x
}
