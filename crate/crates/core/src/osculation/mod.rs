//! Osculating spaces at coordinate points and projections from them.
//!
//! At a coordinate point `e_I` the order-`s` osculating space is the
//! coordinate subspace spanned by the `e_J` with `d(I, J) <= s`, so every
//! question here reduces to counting or listing indices by distance.

mod cremona;

pub use cremona::{cremona_witness, verify_witness, CremonaWitness, LemmaCase, Refusal, WitnessFamily, WitnessKind};

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indices::{binomial, distance, enumerate_factor_indices, for_each_factor_multiset, FactorIndex, Lambda, ProductIndex, Shape};

/// Default cap on `|Λ|` for operations that enumerate it.
pub const DEFAULT_LAMBDA_BUDGET: usize = 100_000;

/// A coordinate point `e_I` (one digit per factor) and an order `s`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OsculatingCenter {
    pub corner: Vec<u16>,
    pub order: u32,
}

impl OsculatingCenter {
    pub fn new(corner: Vec<u16>, order: u32) -> Self {
        OsculatingCenter { corner, order }
    }
}

fn lambda_within(shape: &Shape, limit: usize) -> Result<Lambda> {
    lambda_within_size(shape, limit)?;
    Ok(shape.lambda())
}

fn lambda_within_size(shape: &Shape, limit: usize) -> Result<()> {
    match shape.lambda_size() {
        Some(n) if n <= limit => Ok(()),
        _ => Err(Error::resource(
            "|Lambda|",
            shape.ambient_count().to_u128().unwrap_or(u128::MAX),
            limit as u128,
        )),
    }
}

/// `{J ∈ Λ : d(I, J) <= s}` in canonical order.
pub fn osc_basis(shape: &Shape, center: &OsculatingCenter) -> Result<Vec<ProductIndex>> {
    let corner = shape.corner(&center.corner)?;
    let lambda = lambda_within(shape, DEFAULT_LAMBDA_BUDGET)?;
    let mut out = Vec::new();
    lambda.for_each(|j| {
        if distance(&corner, j).expect("same shape") <= center.order {
            out.push(j.clone());
        }
    });
    Ok(out)
}

/// Number of indices at each distance `0..=d` from the corner, by
/// enumerating `Λ`.
pub fn distance_profile(shape: &Shape, corner: &[u16], limit: usize) -> Result<Vec<u64>> {
    shape.corner(corner)?;
    lambda_within_size(shape, limit)?;
    // d(I, J) is a sum over factors: tabulate each factor once, then walk Λ.
    // Against the constant part (c, ..., c) the distance is d minus the
    // multiplicity of c.
    let tables: Vec<Vec<u32>> = shape
        .dims()
        .iter()
        .zip(shape.degrees())
        .zip(corner)
        .map(|((&n, &d), &c)| {
            let mut t = Vec::new();
            for_each_factor_multiset(n, d, |m| {
                t.push(d - m.iter().find(|p| p.0 == c).map_or(0, |p| p.1));
            });
            t
        })
        .collect();
    let mut hist = vec![0u64; shape.total_degree() as usize + 1];
    let r = tables.len();
    let mut pos = vec![0usize; r];
    // partial[i] = distance accumulated over factors 0..i
    let mut partial = vec![0u32; r + 1];
    for i in 0..r {
        partial[i + 1] = partial[i] + tables[i][0];
    }
    loop {
        hist[partial[r] as usize] += 1;
        let mut i = r;
        loop {
            if i == 0 {
                return Ok(hist);
            }
            i -= 1;
            pos[i] += 1;
            if pos[i] < tables[i].len() {
                break;
            }
            pos[i] = 0;
        }
        for k in i..r {
            partial[k + 1] = partial[k] + tables[k][pos[k]];
        }
    }
}

/// Closed-form `dim T^s` for every `s` in `0..=d`.
///
/// Coefficient `t` of `Π_i Σ_{l <= d_i} C(n_i + l - 1, l) x^l` counts the
/// basis vectors at distance exactly `t`; the dimension is the prefix sum
/// minus one.
pub fn osc_dim_profile(shape: &Shape) -> Vec<BigUint> {
    let mut poly = vec![BigUint::from(1u32)];
    for (&n, &d) in shape.dims().iter().zip(shape.degrees()) {
        let factor: Vec<BigUint> = (0..=d as u64).map(|l| binomial(n as u64 + l - 1, l)).collect();
        let mut next = vec![BigUint::zero(); poly.len() + factor.len() - 1];
        for (i, a) in poly.iter().enumerate() {
            for (j, b) in factor.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        poly = next;
    }
    let mut acc = BigUint::zero();
    poly.into_iter()
        .map(|c| {
            acc += c;
            &acc - 1u32
        })
        .collect()
}

/// Projective dimension of `T^s_p SV^n_d`; `N(n, d)` once `s >= d`.
pub fn osc_dim_formula(shape: &Shape, s: u32) -> BigUint {
    let profile = osc_dim_profile(shape);
    let last = profile.len() - 1;
    profile[(s as usize).min(last)].clone()
}

/// Coordinates kept by the projection from the span of several osculating
/// spaces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionPlan {
    pub centers: Vec<OsculatingCenter>,
    pub surviving: Vec<ProductIndex>,
}

impl ProjectionPlan {
    pub fn is_empty(&self) -> bool {
        self.surviving.is_empty()
    }

    /// `N(n, d, s)`, or `None` for an empty plan.
    pub fn target_dim(&self) -> Option<usize> {
        self.surviving.len().checked_sub(1)
    }
}

/// `Λ^s = {J : d(I_c, J) > s_c for every center c}`.
pub fn projection_plan(shape: &Shape, centers: &[OsculatingCenter]) -> Result<ProjectionPlan> {
    if centers.is_empty() {
        return Err(Error::InvalidParameter("a projection needs at least one center".into()));
    }
    let mut seen = BTreeSet::new();
    let mut corners = Vec::with_capacity(centers.len());
    for c in centers {
        if !seen.insert(c.corner.clone()) {
            return Err(Error::DuplicateCorner(c.corner.clone()));
        }
        corners.push((shape.corner(&c.corner)?, c.order));
    }
    let lambda = lambda_within(shape, DEFAULT_LAMBDA_BUDGET)?;
    let mut surviving = Vec::new();
    lambda.for_each(|j| {
        if corners
            .iter()
            .all(|(ic, s)| distance(ic, j).expect("same shape") > *s)
        {
            surviving.push(j.clone());
        }
    });
    Ok(ProjectionPlan {
        centers: centers.to_vec(),
        surviving,
    })
}

/// Outcome of comparing the order `d - 1` projection at a corner with the
/// coordinate-deletion map onto `SV^{n-1}_d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CornerFactorization {
    pub corner: Vec<u16>,
    /// `|Λ^{d-1}|`
    pub surviving: usize,
    /// Factor dimensions `n_i - 1` of the image (zeros allowed).
    pub image_dims: Vec<u32>,
    pub image_count: usize,
    /// Surviving set equals the relabelled index set of the image.
    pub matches: bool,
    /// Number of fiber coordinates, `Π (d_i + 1)`.
    #[serde(with = "crate::decimal")]
    pub fiber_count: BigUint,
}

/// Checks that projecting from `T^{d-1}` at a corner deletes exactly the
/// coordinates whose parts contain the corner digit.
pub fn corner_projection_factorization(shape: &Shape, corner: &[u16]) -> Result<CornerFactorization> {
    let d = shape.total_degree();
    let plan = projection_plan(shape, &[OsculatingCenter::new(corner.to_vec(), d - 1)])?;
    let image_dims: Vec<u32> = shape.dims().iter().map(|n| n - 1).collect();

    // relabel digit t of the smaller factor to skip the corner digit
    let lists: Vec<Vec<FactorIndex>> = image_dims
        .iter()
        .zip(shape.degrees())
        .zip(corner)
        .map(|((&n, &deg), &c)| {
            enumerate_factor_indices(n, deg).map(|l| {
                l.into_iter()
                    .map(|fi| FactorIndex(fi.0.into_iter().map(|t| if t < c { t } else { t + 1 }).collect()))
                    .collect()
            })
        })
        .collect::<Result<_>>()?;
    let mut image: Vec<ProductIndex> = vec![ProductIndex(Vec::new())];
    for list in &lists {
        image = image
            .into_iter()
            .flat_map(|p| {
                list.iter().map(move |fi| {
                    let mut q = p.clone();
                    q.0.push(fi.clone());
                    q
                })
            })
            .collect();
    }
    image.sort();
    let fiber_count = shape.degrees().iter().map(|&d| BigUint::from(d + 1)).product();
    Ok(CornerFactorization {
        corner: corner.to_vec(),
        surviving: plan.surviving.len(),
        image_dims,
        image_count: image.len(),
        matches: image == plan.surviving,
        fiber_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fi(v: &[u16]) -> FactorIndex {
        FactorIndex(v.to_vec())
    }

    #[test]
    fn basis_examples() {
        let s = Shape::veronese(2, 3).unwrap();
        assert_eq!(osc_basis(&s, &OsculatingCenter::new(vec![0], 0)).unwrap(), vec![s.uniform_corner(0).unwrap()]);
        let b = osc_basis(&s, &OsculatingCenter::new(vec![0], 2)).unwrap();
        assert_eq!(b.len(), 6);
        assert!(b.iter().all(|j| j.0[0].contains(0)));
        assert_eq!(osc_basis(&s, &OsculatingCenter::new(vec![1], 3)).unwrap().len(), 10);
    }

    #[test]
    fn formula_examples() {
        let s = Shape::veronese(2, 3).unwrap();
        assert_eq!(osc_dim_formula(&s, 2), BigUint::from(5u32));
        assert_eq!(osc_dim_formula(&s, 1), BigUint::from(2u32));
        assert_eq!(osc_dim_formula(&s, 0), BigUint::zero());
        assert_eq!(osc_dim_formula(&s, 7), BigUint::from(9u32));
        let s = Shape::new(&[1, 2, 3], &[2, 1, 2]).unwrap();
        assert_eq!(osc_dim_formula(&s, 1), BigUint::from(6u32));
        assert_eq!(osc_dim_formula(&s, 5), s.ambient_dim());
    }

    #[test]
    fn veronese_formula_is_a_sum_of_binomials() {
        // n + C(n+1, 2) + ... + C(n+s-1, s)
        for n in 1..6u64 {
            for d in 1..7u32 {
                let s_shape = Shape::veronese(n as u32, d).unwrap();
                for s in 0..=d as u64 {
                    let expected: BigUint = (1..=s).map(|l| binomial(n + l - 1, l)).sum();
                    assert_eq!(osc_dim_formula(&s_shape, s as u32), expected);
                }
            }
        }
    }

    #[test]
    fn plan_examples() {
        let s = Shape::veronese(2, 3).unwrap();
        let plan = projection_plan(&s, &[OsculatingCenter::new(vec![1], 2)]).unwrap();
        assert!(plan.surviving.iter().all(|j| !j.0[0].contains(1)));
        assert_eq!(plan.surviving.len(), 4);
        assert!(projection_plan(&s, &[OsculatingCenter::new(vec![1], 3)]).unwrap().is_empty());

        let conic = Shape::veronese(1, 2).unwrap();
        let plan = projection_plan(
            &conic,
            &[OsculatingCenter::new(vec![0], 0), OsculatingCenter::new(vec![1], 0)],
        )
        .unwrap();
        assert_eq!(plan.surviving, vec![ProductIndex(vec![fi(&[0, 1])])]);
        assert_eq!(plan.target_dim(), Some(0));

        let dup = projection_plan(
            &conic,
            &[OsculatingCenter::new(vec![0], 1), OsculatingCenter::new(vec![0], 0)],
        );
        assert_eq!(dup, Err(Error::DuplicateCorner(vec![0])));
    }

    #[test]
    fn corner_factorization_examples() {
        let s = Shape::new(&[1, 1], &[1, 1]).unwrap();
        let r = corner_projection_factorization(&s, &[0, 0]).unwrap();
        assert!(r.matches);
        assert_eq!(r.surviving, 1);

        let s = Shape::new(&[2, 2], &[1, 1]).unwrap();
        let r = corner_projection_factorization(&s, &[0, 0]).unwrap();
        assert!(r.matches);
        assert_eq!((r.surviving, r.image_count), (4, 4));
        assert_eq!(r.fiber_count, BigUint::from(4u32));

        for d in 1..6 {
            let s = Shape::veronese(1, d).unwrap();
            let r = corner_projection_factorization(&s, &[0]).unwrap();
            assert!(r.matches);
            assert_eq!(r.surviving, 1);
        }
    }
}
