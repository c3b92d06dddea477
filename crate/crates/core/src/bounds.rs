//! The `h_m` function and the non-defectivity bound built from it.

use num_bigint::BigUint;
use num_traits::{One, Pow, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indices::Shape;

/// `k + 1 = 2^{λ_1} + ... + 2^{λ_l} + ε` with `λ_1 > ... > λ_l >= 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryProfile {
    pub lambdas: Vec<u32>,
    pub epsilon: u8,
    /// `k + 1`
    pub value: u64,
}

pub fn binary_profile(k: u64) -> BinaryProfile {
    let value = k + 1;
    let lambdas = (1..64).rev().filter(|&b| value >> b & 1 == 1).collect();
    BinaryProfile {
        lambdas,
        epsilon: (value & 1) as u8,
        value,
    }
}

/// `h_m(k) = Σ m^{λ_i - 1}` over the binary profile of `k`.
pub fn h_m(m: u64, k: u64) -> Result<BigUint> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("h_m needs m >= 2, got {m}")));
    }
    let base = BigUint::from(m);
    Ok(binary_profile(k)
        .lambdas
        .iter()
        .map(|&l| Pow::pow(&base, l - 1))
        .sum())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundReport {
    pub shape: Shape,
    /// `n_1 h_{n_1+1}(d-2) + 1`; `None` when `d < 3` (theorem inapplicable).
    #[serde(with = "crate::decimal::option")]
    pub h_main: Option<BigUint>,
    /// `n_1 + 1`
    #[serde(with = "crate::decimal")]
    pub h_baseline: BigUint,
    /// `n_1^{⌊log2(d-1)⌋}`; `None` when `d < 2`.
    #[serde(with = "crate::decimal::option")]
    pub h_asymptotic: Option<BigUint>,
    /// Profile of `d - 2`, i.e. the binary expansion of `d - 1`.
    pub decomposition: Option<BinaryProfile>,
}

pub fn main_bound(shape: &Shape) -> BoundReport {
    let n1 = shape.n1() as u64;
    let d = shape.total_degree() as u64;
    let h_main = (d >= 3).then(|| BigUint::from(n1) * h_m(n1 + 1, d - 2).expect("n1 + 1 >= 2") + 1u32);
    let h_asymptotic = (d >= 2).then(|| Pow::pow(&BigUint::from(n1), (d - 1).ilog2()));
    BoundReport {
        shape: shape.clone(),
        h_main,
        h_baseline: BigUint::from(n1 + 1),
        h_asymptotic,
        decomposition: (d >= 2).then(|| binary_profile(d - 2)),
    }
}

/// The bound written through the expansion of `d - 1` directly:
/// `n_1 ((n_1+1)^{λ_1-1} + ... ) + 1`, with the powers of two found by
/// repeated subtraction of the largest one that fits.
pub fn intro_form_bound(n1: u64, d: u64) -> Option<BigUint> {
    if d < 3 {
        return None;
    }
    let mut rest = d - 1;
    let mut sum = BigUint::zero();
    while rest >= 2 {
        let mut lambda = 0u32;
        while 1u64 << (lambda + 1) <= rest {
            lambda += 1;
        }
        rest -= 1 << lambda;
        sum += Pow::pow(&BigUint::from(n1 + 1), lambda - 1);
    }
    Some(BigUint::from(n1) * sum + BigUint::one())
}

/// One row of the table of bounds for small `d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub d: u32,
    pub closed_form: String,
    /// The closed form evaluated at `n_1`.
    #[serde(with = "crate::decimal")]
    pub value: BigUint,
    /// `main_bound` for a shape with this `n_1` and total degree `d`.
    #[serde(with = "crate::decimal")]
    pub h_main: BigUint,
}

impl TableRow {
    pub fn matches(&self) -> bool {
        self.value == self.h_main
    }
}

type ClosedForm = fn(&BigUint) -> BigUint;

const TABLE: [(u32, &str, ClosedForm); 8] = [
    (3, "n_1+1", |n| n + 1u32),
    (5, "n_1(n_1+1)+1", |n| n * (n + 1u32) + 1u32),
    (7, "n_1((n_1+1)+1)+1", |n| n * ((n + 1u32) + 1u32) + 1u32),
    (9, "n_1(n_1+1)^2+1", |n| n * Pow::pow(n + 1u32, 2u32) + 1u32),
    (11, "n_1((n_1+1)^2+1)+1", |n| n * (Pow::pow(n + 1u32, 2u32) + 1u32) + 1u32),
    (13, "n_1((n_1+1)^2+n_1+1)+1", |n| n * (Pow::pow(n + 1u32, 2u32) + n + 1u32) + 1u32),
    (15, "n_1((n_1+1)^2+(n_1+1)+1)+1", |n| {
        n * (Pow::pow(n + 1u32, 2u32) + (n + 1u32) + 1u32) + 1u32
    }),
    (17, "n_1(n_1+1)^3+1", |n| n * Pow::pow(n + 1u32, 3u32) + 1u32),
];

pub fn reproduce_table(n1: u32) -> Result<Vec<TableRow>> {
    if n1 == 0 {
        return Err(Error::InvalidParameter("n1 must be at least 1".into()));
    }
    let n = BigUint::from(n1);
    TABLE
        .iter()
        .map(|&(d, form, eval)| {
            // a Veronese shape is enough: the bound only sees n_1 and d
            let shape = Shape::veronese(n1, d)?;
            Ok(TableRow {
                d,
                closed_form: form.to_string(),
                value: eval(&n),
                h_main: main_bound(&shape).h_main.expect("d >= 3"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles() {
        assert_eq!(binary_profile(1), BinaryProfile { lambdas: vec![1], epsilon: 0, value: 2 });
        assert_eq!(binary_profile(5), BinaryProfile { lambdas: vec![2, 1], epsilon: 0, value: 6 });
        assert_eq!(binary_profile(2), BinaryProfile { lambdas: vec![1], epsilon: 1, value: 3 });
        assert_eq!(binary_profile(0), BinaryProfile { lambdas: vec![], epsilon: 1, value: 1 });
    }

    #[test]
    fn h_m_examples() {
        assert_eq!(h_m(5, 0).unwrap(), BigUint::zero());
        assert_eq!(h_m(2, 3).unwrap(), BigUint::from(2u32));
        assert_eq!(h_m(3, 5).unwrap(), BigUint::from(4u32));
        assert!(h_m(1, 3).is_err());
    }

    #[test]
    fn main_bound_examples() {
        let r = main_bound(&Shape::veronese(1, 3).unwrap());
        assert_eq!(r.h_main, Some(BigUint::from(2u32)));
        assert_eq!(r.h_baseline, BigUint::from(2u32));
        let r = main_bound(&Shape::new(&[1, 1], &[2, 3]).unwrap());
        assert_eq!(r.h_main, Some(BigUint::from(3u32)));
        assert_eq!(r.h_asymptotic, Some(BigUint::from(1u32)));
        let r = main_bound(&Shape::new(&[3, 4], &[4, 5]).unwrap());
        assert_eq!(r.h_main, Some(BigUint::from(3u32 * 16 + 1)));
        let r = main_bound(&Shape::veronese(2, 2).unwrap());
        assert_eq!(r.h_main, None);
        assert_eq!(r.h_asymptotic, Some(BigUint::one()));
    }

    #[test]
    fn table_examples() {
        let rows = reproduce_table(2).unwrap();
        assert!(rows.iter().all(TableRow::matches));
        assert_eq!(rows[2].value, BigUint::from(9u32));
        assert_eq!(reproduce_table(1).unwrap()[1].value, BigUint::from(3u32));
        assert_eq!(reproduce_table(3).unwrap()[3].value, BigUint::from(49u32));
    }

    #[test]
    fn intro_form_small_cases() {
        assert_eq!(intro_form_bound(1, 3), Some(BigUint::from(2u32)));
        assert_eq!(intro_form_bound(2, 13), Some(BigUint::from(2u32 * (9 + 3) + 1)));
        assert_eq!(intro_form_bound(2, 2), None);
    }
}
