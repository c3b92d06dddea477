//! Hyperplane certificates for the limits of spans of osculating spaces
//! along the curves `e_K^t`.
//!
//! For a target index `I` far from `I_0 = (0, ..., 0)` the certificate is a
//! form `F_I = Σ t^{d(I,J)} c_{d(I,J)} z_J` over un-shifts `J` of `I`,
//! normalized by `c_0 = 1`, that vanishes on every generator of the moving
//! span for `t != 0`. The coefficients come from a square binomial system;
//! the verifier ignores that derivation and expands each generator as a
//! polynomial in `t`.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Exact;
use crate::indices::{binomial, delta_set_unchecked, distance, s_minus, s_plus, shift_offsets, ProductIndex, Shape};
use crate::linalg::{determinant, solve, solve_any, Matrix};

type Q = BigRational;

/// Default cap on `|Λ|` for the certificate sweeps.
pub const DEFAULT_CERTIFICATE_BUDGET: usize = 100_000;

thread_local! {
    static PASCAL: RefCell<Vec<Vec<BigInt>>> = RefCell::new(vec![vec![BigInt::one()]]);
}

/// `C(n, k)` from a per-thread Pascal triangle, grown on demand.
fn pascal(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    PASCAL.with(|t| {
        let mut t = t.borrow_mut();
        while t.len() <= n as usize {
            let prev = t.last().expect("nonempty");
            let mut row = Vec::with_capacity(prev.len() + 1);
            row.push(BigInt::one());
            row.extend(prev.windows(2).map(|w| &w[0] + &w[1]));
            row.push(BigInt::one());
            t.push(row);
        }
        t[n as usize][k as usize].clone()
    })
}

fn int(x: BigUint) -> BigInt {
    BigInt::from(x)
}

fn q_from(x: BigUint) -> Q {
    Q::from_integer(int(x))
}

fn binom_i(n: u32, k: i64) -> BigUint {
    if k < 0 {
        BigUint::zero()
    } else {
        binomial(n as u64, k as u64)
    }
}

/// `M''`: entries `C(i, j)` with `s̄+D-k2 <= i <= s̄+s` and
/// `s̄+1 <= j <= s̄+s+1-D+k2`.
pub fn binomial_matrix(sbar: u32, s: u32, d: u32, k2: u32) -> Result<Matrix<BigInt>> {
    let q = system_size(s, d, k2)?;
    let (i0, j0) = (sbar + d - k2, sbar + 1);
    Ok(Matrix::from_fn(q, q, |r, c| int(binomial((i0 + r as u32) as u64, (j0 + c as u32) as u64))))
}

/// `M'` as the coefficient block of the system: row `m` runs from `s` down
/// to `D-k2`, column `l` from `q` down to `1`, entry `C(s̄+m, m-l)`.
pub fn binomial_matrix_reversed(sbar: u32, s: u32, d: u32, k2: u32) -> Result<Matrix<BigInt>> {
    let q = system_size(s, d, k2)?;
    Ok(Matrix::from_fn(q, q, |r, c| {
        let m = s - r as u32;
        let l = (q - c) as i64;
        int(binom_i(sbar + m, m as i64 - l))
    }))
}

fn system_size(s: u32, d: u32, k2: u32) -> Result<usize> {
    if d < k2 || s < d - k2 {
        return Err(Error::InvalidParameter(format!(
            "empty binomial matrix: need s >= D - k2 (s={s}, D={d}, k2={k2})"
        )));
    }
    Ok((s - (d - k2) + 1) as usize)
}

/// Exact determinant of an integer matrix.
pub fn integer_determinant(m: &Matrix<BigInt>) -> BigInt {
    let f = Exact::<Q>::new();
    let det = determinant(&f, &m.map(|x| Q::from_integer(x.clone()))).expect("square by construction");
    debug_assert!(det.is_integer());
    det.to_integer()
}

/// Solves `Σ_l C(s̄+m, m-l) c_l = 0` for `m = D-k, ..., s` with `c_0 = 1`
/// and `c_l = 0` for `l > s-D+k+1`. Returns `c_0, ..., c_s`.
pub fn solve_binomial_system(sbar: u32, s: u32, d: u32, k: u32) -> Result<Vec<Q>> {
    let mut c = vec![Q::zero(); s as usize + 1];
    c[0] = Q::from_integer(1.into());
    if d < k || s < d - k {
        return Ok(c);
    }
    let q = (s - (d - k) + 1) as usize;
    if q > s as usize {
        return Err(Error::HypothesisViolated(format!(
            "{q} unknowns but only c_1..c_{s} available (D={d}, k={k})"
        )));
    }
    let a = Matrix::from_fn(q, q, |r, col| {
        let m = d - k + r as u32;
        q_from(binom_i(sbar + m, m as i64 - (col as i64 + 1)))
    });
    let b: Vec<Q> = (0..q)
        .map(|r| {
            let m = d - k + r as u32;
            -q_from(binomial((sbar + m) as u64, m as u64))
        })
        .collect();
    let f = Exact::<Q>::new();
    let x = solve(&f, &a, &b).map_err(|_| {
        Error::Singular(format!("binomial system s̄={sbar}, s={s}, D={d}, k={k}"))
    })?;
    c[1..=q].clone_from_slice(&x);
    Ok(c)
}

/// Memoizes [`solve_binomial_system`] by `(s̄, s, D, k)`.
#[derive(Debug, Default)]
pub struct SystemCache {
    solved: HashMap<(u32, u32, u32, u32), Vec<Q>>,
}

impl SystemCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.solved.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solved.is_empty()
    }

    pub fn get(&mut self, sbar: u32, s: u32, d: u32, k: u32) -> Result<&[Q]> {
        let key = (sbar, s, d, k);
        if !self.solved.contains_key(&key) {
            let c = solve_binomial_system(sbar, s, d, k)?;
            self.solved.insert(key, c);
        }
        Ok(&self.solved[&key])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CertificateKind {
    /// One point of order `k1` and a moving point of order `k2`.
    Strong2 { k1: u32, k2: u32 },
    /// `n_1 + 1` points of order `k`.
    MRegularity { k: u32 },
}

impl CertificateKind {
    /// Orders of the fixed and the moving osculating spaces.
    pub fn orders(&self) -> (u32, u32) {
        match *self {
            CertificateKind::Strong2 { k1, k2 } => (k1, k2),
            CertificateKind::MRegularity { k } => (k, k),
        }
    }

    /// Targets need `d(I, I_0)` above this.
    pub fn threshold(&self) -> u32 {
        let (a, b) = self.orders();
        a + b + 1
    }
}

impl fmt::Display for CertificateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CertificateKind::Strong2 { k1, k2 } => write!(f, "strong-2(k1={k1}, k2={k2})"),
            CertificateKind::MRegularity { k } => write!(f, "m-regularity(k={k})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegenerationInstance {
    pub shape: Shape,
    pub kind: CertificateKind,
    pub target: ProductIndex,
    /// `D = d(I, I_0)`
    pub distance: u32,
    /// `s = s(I)^-_j`
    pub s_minus: u32,
    /// `s̄ = s(I)^+`
    pub s_plus: u32,
    /// Digit the curves shift zeros to; always 1 for strong-2.
    pub digit: u16,
}

impl DegenerationInstance {
    pub fn strong2(shape: &Shape, target: &ProductIndex, k1: u32, k2: u32) -> Result<Self> {
        shape.check_index(target)?;
        let d = shape.total_degree();
        if k1 + k2 + 2 > d {
            return Err(Error::HypothesisViolated(format!(
                "k1 + k2 = {} exceeds d - 2 = {}",
                k1 + k2,
                d as i64 - 2
            )));
        }
        let kind = CertificateKind::Strong2 { k1, k2 };
        Self::build(shape, target, kind, 1)
    }

    /// Picks the digit `j` with `D - s(I)^-_j <= k`, which must be unique.
    pub fn m_regularity(shape: &Shape, target: &ProductIndex, k: u32) -> Result<Self> {
        shape.check_index(target)?;
        let dd = distance_to_base(target);
        let digits: Vec<u16> = (1..=shape.n1() as u16)
            .filter(|&j| dd <= k + s_minus(target, j))
            .collect();
        let j = match digits.as_slice() {
            [] => {
                return Err(Error::HypothesisViolated(format!(
                    "{target} is not reached by any curve from B[I_0, {k}]"
                )))
            }
            [j] => *j,
            _ => {
                return Err(Error::CertificateFailed(format!(
                    "{target} is reached by the curves of digits {digits:?} (k={k})"
                )))
            }
        };
        Self::build(shape, target, CertificateKind::MRegularity { k }, j)
    }

    fn build(shape: &Shape, target: &ProductIndex, kind: CertificateKind, digit: u16) -> Result<Self> {
        let inst = DegenerationInstance {
            shape: shape.clone(),
            kind,
            target: target.clone(),
            distance: distance_to_base(target),
            s_minus: s_minus(target, digit),
            s_plus: s_plus(target),
            digit,
        };
        if inst.distance <= kind.threshold() {
            return Err(Error::HypothesisViolated(format!(
                "d(I, I_0) = {} must exceed {}",
                inst.distance,
                kind.threshold()
            )));
        }
        Ok(inst)
    }

    /// Radius of the support around `I`: `s` for strong-2, `L = k+1-D+s`
    /// for m-regularity.
    pub fn support_radius(&self) -> u32 {
        match self.kind {
            CertificateKind::Strong2 { .. } => self.s_minus,
            CertificateKind::MRegularity { k } => (k + 1 + self.s_minus).saturating_sub(self.distance),
        }
    }

    /// `Δ(I)^-` or `Γ(I)`, ordered by distance from `I`.
    pub fn support(&self) -> Vec<ProductIndex> {
        (0..=self.support_radius() as i32)
            .flat_map(|l| delta_set_unchecked(&self.target, -l, self.digit))
            .collect()
    }

    fn system_key(&self) -> (u32, u32, u32, u32) {
        (self.s_plus, self.s_minus, self.distance, self.kind.orders().1)
    }
}

impl fmt::Display for DegenerationInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} at I={} (D={}, j={})", self.shape, self.kind, self.target, self.distance, self.digit)
    }
}

fn distance_to_base(idx: &ProductIndex) -> u32 {
    idx.0.iter().map(|p| p.0.len() as u32).sum::<u32>() - s_plus(idx)
}

mod rational_strings {
    use super::Q;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Q], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|x| x.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// How the coefficients were found.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateMethod {
    /// `c_J` depends only on `d(I, J)` and solves the square binomial system.
    DistanceAnsatz,
    /// One unknown per support index, solved from the generator equations
    /// directly. Used when the distance ansatz does not vanish, which
    /// happens once some `Δ(K, l)` leaves `Δ(I)^-` (several factors).
    General,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperplaneCertificate {
    pub instance: DegenerationInstance,
    pub method: CertificateMethod,
    /// `c_0, ..., c_s` of the distance ansatz (the binomial system solution).
    #[serde(with = "rational_strings")]
    pub coefficients: Vec<Q>,
    /// `Δ(I)^-` or `Γ(I)`, ordered by distance from `I`.
    pub support: Vec<ProductIndex>,
    /// Coefficient of `z_J` in `F_I` at `t = 1`, aligned with `support`.
    #[serde(with = "rational_strings")]
    pub weights: Vec<Q>,
    pub verified: bool,
}

impl HyperplaneCertificate {
    /// The distance-ansatz certificate `c_J = c_{d(I,J)}`.
    pub fn from_distance_coefficients(instance: &DegenerationInstance, coefficients: Vec<Q>) -> Self {
        let support = instance.support();
        let weights = support
            .iter()
            .map(|j| {
                let dist = distance(&instance.target, j).expect("same shape") as usize;
                coefficients.get(dist).cloned().unwrap_or_else(Q::zero)
            })
            .collect();
        HyperplaneCertificate {
            instance: instance.clone(),
            method: CertificateMethod::DistanceAnsatz,
            coefficients,
            support,
            weights,
            verified: false,
        }
    }

    /// Coefficient of `z_J` at `t = 1`.
    pub fn weight(&self, j: &ProductIndex) -> Option<&Q> {
        self.support.iter().position(|x| x == j).map(|p| &self.weights[p])
    }
}

/// Solves the binomial system of an instance (without verifying it).
pub fn solve_strong2_system(instance: &DegenerationInstance) -> Result<HyperplaneCertificate> {
    let (sbar, s, d, k) = instance.system_key();
    let coefficients = solve_binomial_system(sbar, s, d, k)?;
    Ok(HyperplaneCertificate::from_distance_coefficients(instance, coefficients))
}

/// Solves the generator equations with one unknown per support index and
/// `c_I = 1`; `CertificateFailed` if no such hyperplane exists.
pub fn solve_general_system(instance: &DegenerationInstance, coefficients: Vec<Q>) -> Result<HyperplaneCertificate> {
    let (k_fixed, k_moving) = instance.kind.orders();
    let support = instance.support();
    let pos: HashMap<&ProductIndex, usize> = support.iter().enumerate().map(|(i, j)| (j, i)).collect();
    let target = pos[&instance.target];
    let mut rows: Vec<Vec<(usize, Q)>> = Vec::new();
    for (i, j) in support.iter().enumerate() {
        if distance_to_base(j) <= k_fixed {
            rows.push(vec![(i, Q::from_integer(1.into()))]);
        }
    }
    let digit = instance.digit;
    for m in 0..=instance.s_minus as i32 {
        for k in delta_set_unchecked(&instance.target, -m, digit) {
            if distance_to_base(&k) > k_moving {
                continue;
            }
            let mut row = Vec::new();
            for l in 0..=s_plus(&k) {
                for j in delta_set_unchecked(&k, l as i32, digit) {
                    if let Some(&p) = pos.get(&j) {
                        row.push((p, Q::from_integer(curve_coefficient(&k, &j, digit))));
                    }
                }
            }
            rows.push(row);
        }
    }
    // unknowns are the support minus I; c_I = 1 moves to the right
    let n = support.len() - 1;
    let col = |p: usize| if p < target { p } else { p - 1 };
    let mut a = Matrix::filled(rows.len(), n, Q::zero());
    let mut b = vec![Q::zero(); rows.len()];
    for (r, row) in rows.iter().enumerate() {
        for (p, v) in row {
            if *p == target {
                b[r] -= v;
            } else {
                a.set(r, col(*p), v.clone());
            }
        }
    }
    let f = Exact::<Q>::new();
    let x = solve_any(&f, &a, &b)?.ok_or_else(|| {
        Error::CertificateFailed(format!("{instance}: no hyperplane with c_I != 0 on the support"))
    })?;
    let weights = (0..support.len())
        .map(|p| if p == target { Q::from_integer(1.into()) } else { x[col(p)].clone() })
        .collect();
    Ok(HyperplaneCertificate {
        instance: instance.clone(),
        method: CertificateMethod::General,
        coefficients,
        support,
        weights,
        verified: false,
    })
}

/// A generator of the moving span.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Generator {
    /// `e_L` with `d(L, I_0)` at most the fixed order.
    Point { index: ProductIndex },
    /// `e_K^t` for the curve shifting zeros to `digit`.
    Curve { base: ProductIndex, digit: u16 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityFailure {
    pub generator: Generator,
    /// Power of `t` whose coefficient is nonzero.
    pub power: u32,
    pub coefficient: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityCheck {
    /// Generators whose expansion touches the support.
    pub generators: usize,
    pub failure: Option<IdentityFailure>,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Expands `F_I` on every generator that meets its support and checks the
/// result vanishes identically in `t`. Also fails when `c_I = 0`.
pub fn verify_hyperplane_identity(cert: &HyperplaneCertificate) -> IdentityCheck {
    let inst = &cert.instance;
    let (k_fixed, k_moving) = inst.kind.orders();
    let digits: Vec<u16> = match inst.kind {
        CertificateKind::Strong2 { .. } => vec![1],
        CertificateKind::MRegularity { .. } => (1..=inst.shape.n1() as u16).collect(),
    };
    // clearing denominators once keeps the expansion in integers
    let denom = cert.weights.iter().fold(BigInt::one(), |acc, w| acc.lcm(w.denom()));
    let scaled: Vec<BigInt> = cert.weights.iter().map(|w| (w * &denom).to_integer()).collect();
    let weights: HashMap<&ProductIndex, (u32, &BigInt)> = cert
        .support
        .iter()
        .zip(&scaled)
        .map(|(j, c)| (j, (distance(&inst.target, j).expect("same shape"), c)))
        .collect();
    if weights.get(&inst.target).map_or(true, |(_, c)| c.is_zero()) {
        let generator = Generator::Point { index: inst.target.clone() };
        return fail(0, generator, 0, "c_I = 0".into());
    }
    let mut generators = 0;

    for (j, c) in cert.support.iter().zip(&cert.weights) {
        if distance_to_base(j) <= k_fixed {
            generators += 1;
            if !c.is_zero() {
                let power = weights[j].0;
                return fail(generators, Generator::Point { index: j.clone() }, power, c.to_string());
            }
        }
    }

    for &digit in &digits {
        let mut bases = BTreeSet::new();
        for j in &cert.support {
            for l in 0..=s_minus(j, digit) as i32 {
                for k in delta_set_unchecked(j, -l, digit) {
                    if distance_to_base(&k) <= k_moving {
                        bases.insert(k);
                    }
                }
            }
        }
        for k in bases {
            generators += 1;
            // e_K^t = Σ_{J ∈ Δ(K)^+} t^{d(K,J)} c_(K,J) e_J
            let mut poly: BTreeMap<u32, BigInt> = BTreeMap::new();
            for l in 0..=s_plus(&k) {
                for j in delta_set_unchecked(&k, l as i32, digit) {
                    let Some(&(dist, c)) = weights.get(&j) else { continue };
                    if !c.is_zero() {
                        *poly.entry(l + dist).or_default() += c * curve_coefficient(&k, &j, digit);
                    }
                }
            }
            if let Some((&power, c)) = poly.iter().find(|(_, c)| !c.is_zero()) {
                let c = Q::new(c.clone(), denom.clone());
                return fail(generators, Generator::Curve { base: k, digit }, power, c.to_string());
            }
        }
    }
    IdentityCheck {
        generators,
        failure: None,
    }
}

fn fail(generators: usize, generator: Generator, power: u32, coefficient: String) -> IdentityCheck {
    IdentityCheck {
        generators,
        failure: Some(IdentityFailure {
            generator,
            power,
            coefficient,
        }),
    }
}

/// `c_(K,J) = Π C(s(K^i)^+, d(K^i, J^i))`.
fn curve_coefficient(k: &ProductIndex, j: &ProductIndex, digit: u16) -> BigInt {
    let offs = shift_offsets(k, j, digit).expect("J was generated from K");
    k.0.iter()
        .zip(offs)
        .map(|(p, l)| pascal(p.count(0) as u32, l))
        .product()
}

/// One length `l` of the sum `Σ_{J ∈ Δ(I)^- ∩ Δ(K, l)} c_(K,J)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollapseRow {
    pub length: u32,
    #[serde(with = "crate::decimal")]
    pub sum: BigUint,
    /// `C(s(I)^+ + d(I, K), l)`
    #[serde(with = "crate::decimal")]
    pub binomial: BigUint,
}

impl CollapseRow {
    pub fn holds(&self) -> bool {
        self.sum == self.binomial
    }
}

/// The sums behind the distance ansatz, for `K ∈ Δ(I)^-_j`. They agree
/// with the binomial when every `Δ(K, l)` with `l <= d(I, K)` stays inside
/// `Δ(I)^-` (always for one factor), and fall short otherwise.
pub fn collapse_sums(shape: &Shape, target: &ProductIndex, k: &ProductIndex, digit: u16) -> Result<Vec<CollapseRow>> {
    shape.check_index(target)?;
    shape.check_index(k)?;
    let offs = shift_offsets(k, target, digit).ok_or_else(|| Error::NotInShiftClosure(target.to_string()))?;
    let m: u32 = offs.iter().sum();
    let sbar = s_plus(target);
    Ok((0..=m)
        .map(|l| {
            let sum = delta_set_unchecked(k, l as i32, digit)
                .iter()
                .filter(|j| shift_offsets(j, target, digit).is_some())
                .map(|j| curve_coefficient(k, j, digit))
                .sum::<BigInt>()
                .to_biguint()
                .expect("nonnegative");
            CollapseRow {
                length: l,
                sum,
                binomial: binomial((sbar + m) as u64, l as u64),
            }
        })
        .collect())
}

/// Every certificate of one sweep, plus counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateBundle {
    pub shape: Shape,
    pub kind: CertificateKind,
    /// Indices with `d(I, I_0)` above the threshold.
    pub far_indices: usize,
    pub certificates: Vec<HyperplaneCertificate>,
    /// Binomial systems solved (not found in the cache).
    pub systems: usize,
    /// Targets where the distance ansatz did not vanish.
    pub ansatz_failures: usize,
    /// Generator identities checked over all certificates.
    pub generators: usize,
}

impl CertificateBundle {
    pub fn all_verified(&self) -> bool {
        self.certificates.iter().all(|c| c.verified)
    }
}

pub fn strong2_certificate(shape: &Shape, k1: u32, k2: u32) -> Result<CertificateBundle> {
    strong2_certificate_with(shape, k1, k2, DEFAULT_CERTIFICATE_BUDGET, &mut SystemCache::new())
}

/// As [`strong2_certificate`], with a `|Λ|` budget and a cache that can be
/// shared across sweeps.
pub fn strong2_certificate_with(
    shape: &Shape,
    k1: u32,
    k2: u32,
    budget: usize,
    cache: &mut SystemCache,
) -> Result<CertificateBundle> {
    let d = shape.total_degree();
    if k1 + k2 + 2 > d {
        return Err(Error::HypothesisViolated(format!("k1 + k2 = {} exceeds d - 2", k1 + k2)));
    }
    sweep(shape, CertificateKind::Strong2 { k1, k2 }, budget, cache, |i| {
        // I lies on some curve from B[I_0, k2] iff un-shifting its ones gets there
        if distance_to_base(i) > k2 + s_minus(i, 1) {
            return Ok(None);
        }
        DegenerationInstance::strong2(shape, i, k1, k2).map(Some)
    })
}

pub fn m_regularity_certificate(shape: &Shape, k: u32) -> Result<CertificateBundle> {
    m_regularity_certificate_with(shape, k, DEFAULT_CERTIFICATE_BUDGET, &mut SystemCache::new())
}

/// As [`m_regularity_certificate`]; the systems coincide with the strong-2
/// ones for `k2 = k`, so one cache serves both sweeps.
pub fn m_regularity_certificate_with(
    shape: &Shape,
    k: u32,
    budget: usize,
    cache: &mut SystemCache,
) -> Result<CertificateBundle> {
    let n1 = shape.n1() as u16;
    sweep(shape, CertificateKind::MRegularity { k }, budget, cache, |i| {
        let dd = distance_to_base(i);
        if (1..=n1).all(|j| dd > k + s_minus(i, j)) {
            return Ok(None);
        }
        let inst = DegenerationInstance::m_regularity(shape, i, k)?;
        // no index of Γ(I) may lie on a curve of another digit
        for j in inst.support() {
            let dj = distance_to_base(&j);
            if let Some(other) = (1..=n1).find(|&o| o != inst.digit && dj <= k + s_minus(&j, o)) {
                return Err(Error::CertificateFailed(format!(
                    "{inst}: {j} in the support lies on a curve of digit {other}"
                )));
            }
        }
        Ok(Some(inst))
    })
}

/// Certificate for one instance: the distance ansatz if it verifies, the
/// general system otherwise. Returns the certificate and its check.
pub fn certify(instance: &DegenerationInstance, cache: &mut SystemCache) -> Result<(HyperplaneCertificate, IdentityCheck)> {
    let (sbar, s, d, k) = instance.system_key();
    let c = cache.get(sbar, s, d, k)?.to_vec();
    let mut cert = HyperplaneCertificate::from_distance_coefficients(instance, c);
    let mut check = verify_hyperplane_identity(&cert);
    if !check.passed() {
        cert = solve_general_system(instance, cert.coefficients)?;
        let second = verify_hyperplane_identity(&cert);
        check = IdentityCheck {
            generators: check.generators + second.generators,
            failure: second.failure,
        };
    }
    cert.verified = check.passed();
    Ok((cert, check))
}

fn sweep(
    shape: &Shape,
    kind: CertificateKind,
    budget: usize,
    cache: &mut SystemCache,
    mut select: impl FnMut(&ProductIndex) -> Result<Option<DegenerationInstance>>,
) -> Result<CertificateBundle> {
    if shape.lambda_size().map_or(true, |n| n > budget) {
        let size = shape.ambient_count().to_u128().unwrap_or(u128::MAX);
        return Err(Error::resource("|Lambda|", size, budget as u128));
    }
    let threshold = kind.threshold();
    let cached = cache.len();
    let mut out = CertificateBundle {
        shape: shape.clone(),
        kind,
        far_indices: 0,
        certificates: Vec::new(),
        systems: 0,
        ansatz_failures: 0,
        generators: 0,
    };
    let mut err = None;
    shape.lambda().for_each(|i| {
        if err.is_some() || distance_to_base(i) <= threshold {
            return;
        }
        out.far_indices += 1;
        let mut step = || -> Result<()> {
            let Some(inst) = select(i)? else { return Ok(()) };
            let (cert, check) = certify(&inst, cache)?;
            out.generators += check.generators;
            if let Some(f) = check.failure {
                return Err(Error::CertificateFailed(format!(
                    "{inst}: generator {:?} leaves t^{} with coefficient {}",
                    f.generator, f.power, f.coefficient
                )));
            }
            if cert.method == CertificateMethod::General {
                out.ansatz_failures += 1;
            }
            out.certificates.push(cert);
            Ok(())
        };
        if let Err(e) = step() {
            err = Some(e);
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    out.systems = cache.len() - cached;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn q(n: i64, d: i64) -> Q {
        Q::new(n.into(), d.into())
    }

    fn quartic() -> DegenerationInstance {
        let shape = Shape::veronese(1, 4).unwrap();
        let i = shape.uniform_corner(1).unwrap();
        DegenerationInstance::strong2(&shape, &i, 1, 1).unwrap()
    }

    #[test]
    fn quartic_curve_example() {
        let cert = solve_strong2_system(&quartic()).unwrap();
        assert_eq!(cert.coefficients, vec![q(1, 1), q(-1, 2), q(1, 6), q(0, 1), q(0, 1)]);
        // substitute back: 1 + 3c1 + 3c2 and 1 + 4c1 + 6c2
        let c = &cert.coefficients;
        assert!((Q::one() + q(3, 1) * &c[1] + q(3, 1) * &c[2]).is_zero());
        assert!((Q::one() + q(4, 1) * &c[1] + q(6, 1) * &c[2]).is_zero());
        assert!(verify_hyperplane_identity(&cert).passed());
    }

    #[test]
    fn trivial_solution_below_the_curve_range() {
        assert_eq!(solve_binomial_system(2, 1, 5, 2).unwrap(), vec![Q::one(), Q::zero()]);
    }

    #[test]
    fn perturbed_certificate_fails() {
        let mut c = solve_strong2_system(&quartic()).unwrap().coefficients;
        c[1] += Q::one();
        let cert = HyperplaneCertificate::from_distance_coefficients(&quartic(), c);
        let f = verify_hyperplane_identity(&cert).failure.expect("should fail");
        assert!(matches!(f.generator, Generator::Curve { .. }));
        assert_ne!(f.coefficient, "0");
    }

    #[test]
    fn forced_zero_on_the_fixed_ball_is_checked() {
        let mut c = solve_strong2_system(&quartic()).unwrap().coefficients;
        c[3] = Q::one();
        let cert = HyperplaneCertificate::from_distance_coefficients(&quartic(), c);
        let f = verify_hyperplane_identity(&cert).failure.unwrap();
        assert_eq!(f.generator, Generator::Point { index: ProductIndex::from_parts(&[&[0, 0, 0, 1]]) });
        assert_eq!(f.power, 3);
    }

    #[test]
    fn zero_leading_coefficient_is_rejected() {
        let cert = HyperplaneCertificate::from_distance_coefficients(&quartic(), vec![Q::zero(); 5]);
        assert!(!verify_hyperplane_identity(&cert).passed());
    }

    #[test]
    fn matrices_and_determinants() {
        let m = binomial_matrix(0, 4, 4, 1).unwrap();
        // rows i = 3, 4; columns j = 1, 2
        assert_eq!(m.row(0), &[BigInt::from(3), BigInt::from(3)]);
        assert_eq!(m.row(1), &[BigInt::from(4), BigInt::from(6)]);
        let r = binomial_matrix_reversed(0, 4, 4, 1).unwrap();
        assert_eq!(integer_determinant(&m), integer_determinant(&r));
        assert_eq!(integer_determinant(&m), BigInt::from(6));
        assert!(binomial_matrix(0, 2, 4, 1).is_err());
        let one = binomial_matrix(3, 2, 3, 1).unwrap();
        assert_eq!((one.nrows(), one.ncols()), (1, 1));
    }

    #[test]
    fn instance_validation() {
        let shape = Shape::veronese(1, 4).unwrap();
        let i = shape.uniform_corner(1).unwrap();
        assert!(DegenerationInstance::strong2(&shape, &i, 2, 1).is_err());
        let near = ProductIndex::from_parts(&[&[0, 0, 1, 1]]);
        assert!(DegenerationInstance::strong2(&shape, &near, 0, 1).is_err());
        assert!(DegenerationInstance::m_regularity(&shape, &i, 1).is_ok());
    }

    #[test]
    fn ansatz_fails_on_two_factors_and_the_general_system_repairs_it() {
        let shape = Shape::new(&[1, 1], &[2, 2]).unwrap();
        let i = ProductIndex::from_parts(&[&[0, 1], &[1, 1]]);
        let inst = DegenerationInstance::strong2(&shape, &i, 0, 1).unwrap();
        let cert = solve_strong2_system(&inst).unwrap();
        assert_eq!(cert.coefficients, vec![q(1, 1), q(-4, 3), q(1, 1), q(0, 1)]);
        let f = verify_hyperplane_identity(&cert).failure.unwrap();
        assert_eq!((f.power, f.coefficient.as_str()), (3, "-2/3"));

        let k = ProductIndex::from_parts(&[&[0, 0], &[0, 0]]);
        let rows = collapse_sums(&shape, &i, &k, 1).unwrap();
        assert!(rows[1].holds());
        assert_eq!((rows[2].sum.clone(), rows[2].binomial.clone()), (BigUint::from(5u32), BigUint::from(6u32)));

        let general = solve_general_system(&inst, cert.coefficients).unwrap();
        assert!(verify_hyperplane_identity(&general).passed());
        assert_eq!(general.weight(&i), Some(&Q::one()));
    }

    #[test]
    fn small_bundles_verify() {
        let s = Shape::new(&[1, 1], &[2, 2]).unwrap();
        let b = strong2_certificate(&s, 0, 1).unwrap();
        assert!(b.all_verified());
        assert!(b.ansatz_failures > 0);

        let s = Shape::veronese(2, 4).unwrap();
        let b = strong2_certificate(&s, 1, 1).unwrap();
        assert!(b.all_verified());
        assert!(!b.certificates.is_empty());
        assert_eq!(b.ansatz_failures, 0);

        let s = Shape::new(&[2, 2], &[1, 2]).unwrap();
        let b = m_regularity_certificate(&s, 0).unwrap();
        assert!(b.all_verified());
        assert!(b.certificates.iter().all(|c| c.instance.distance > 1));

        // 2k + 1 >= d: nothing to certify
        let s = Shape::veronese(2, 3).unwrap();
        let b = m_regularity_certificate(&s, 1).unwrap();
        assert!(b.certificates.is_empty());
        assert_eq!(b.far_indices, 0);
    }

    #[test]
    fn leading_weight_and_serde() {
        let shape = Shape::new(&[1, 1], &[2, 3]).unwrap();
        let b = strong2_certificate(&shape, 0, 1).unwrap();
        let cert = &b.certificates[0];
        assert_eq!(cert.weight(&cert.instance.target), Some(&Q::one()));
        let text = serde_json::to_string(cert).unwrap();
        let back: HyperplaneCertificate = serde_json::from_str(&text).unwrap();
        assert_eq!(&back, cert);
    }
}
