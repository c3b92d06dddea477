//! Index sets of Segre-Veronese coordinates.
//!
//! A coordinate of the ambient space of `SV^n_d` is labelled by one
//! nondecreasing tuple per factor. Everything here is exact integer
//! combinatorics on those labels.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `C(n, k)` as an arbitrary-precision integer (zero when `k > n`).
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `C(n, k)` if it fits in a `u128`.
pub fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        // acc * (n - i) is divisible by i + 1
        let g = num_integer::gcd(acc, i + 1);
        acc = (acc / g).checked_mul((n as u128 - i) / ((i + 1) / g))?;
    }
    Some(acc)
}

/// A Segre-Veronese shape `(n, d)`.
///
/// Factors are kept sorted by `(n_i, d_i)`; the order given by the caller
/// is remembered for display only.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ShapeRepr", into = "ShapeRepr")]
pub struct Shape {
    dims: Vec<u32>,
    degrees: Vec<u32>,
    given: Vec<(u32, u32)>,
}

#[derive(Serialize, Deserialize)]
struct ShapeRepr {
    n: Vec<u32>,
    d: Vec<u32>,
}

impl TryFrom<ShapeRepr> for Shape {
    type Error = Error;
    fn try_from(r: ShapeRepr) -> Result<Self> {
        Shape::new(&r.n, &r.d)
    }
}

impl From<Shape> for ShapeRepr {
    fn from(s: Shape) -> Self {
        ShapeRepr {
            n: s.given.iter().map(|p| p.0).collect(),
            d: s.given.iter().map(|p| p.1).collect(),
        }
    }
}

impl Shape {
    pub fn new(dims: &[u32], degrees: &[u32]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidShape("at least one factor is required".into()));
        }
        if dims.len() != degrees.len() {
            return Err(Error::InvalidShape(format!(
                "{} factor dimensions but {} degrees",
                dims.len(),
                degrees.len()
            )));
        }
        if let Some(i) = dims.iter().position(|&n| n == 0) {
            return Err(Error::InvalidShape(format!("factor {i} has dimension 0")));
        }
        if let Some(i) = degrees.iter().position(|&d| d == 0) {
            return Err(Error::InvalidShape(format!("factor {i} has degree 0")));
        }
        if dims.iter().any(|&n| n > u16::MAX as u32 - 1) {
            return Err(Error::InvalidShape("factor dimension too large".into()));
        }
        let given: Vec<(u32, u32)> = dims.iter().copied().zip(degrees.iter().copied()).collect();
        let mut sorted = given.clone();
        sorted.sort_unstable();
        Ok(Shape {
            dims: sorted.iter().map(|p| p.0).collect(),
            degrees: sorted.iter().map(|p| p.1).collect(),
            given,
        })
    }

    pub fn veronese(n: u32, d: u32) -> Result<Self> {
        Shape::new(&[n], &[d])
    }

    /// Factor dimensions, sorted.
    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    /// Degrees, aligned with [`Shape::dims`].
    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// Factors in the order the caller supplied them.
    pub fn given_factors(&self) -> &[(u32, u32)] {
        &self.given
    }

    pub fn factors(&self) -> usize {
        self.dims.len()
    }

    /// Smallest factor dimension `n_1`.
    pub fn n1(&self) -> u32 {
        self.dims[0]
    }

    pub fn total_dim(&self) -> u32 {
        self.dims.iter().sum()
    }

    pub fn total_degree(&self) -> u32 {
        self.degrees.iter().sum()
    }

    /// `N + 1`, the number of ambient coordinates.
    pub fn ambient_count(&self) -> BigUint {
        self.dims
            .iter()
            .zip(&self.degrees)
            .map(|(&n, &d)| binomial((n + d) as u64, n as u64))
            .product()
    }

    /// `N(n, d)`.
    pub fn ambient_dim(&self) -> BigUint {
        self.ambient_count() - 1u32
    }

    /// `|Λ|` if it fits in a `usize`.
    pub fn lambda_size(&self) -> Option<usize> {
        self.ambient_count().to_usize()
    }

    /// The corner index `I_c` with every entry equal to `digits[i]`.
    pub fn corner(&self, digits: &[u16]) -> Result<ProductIndex> {
        if digits.len() != self.factors() {
            return Err(Error::ShapeMismatch);
        }
        let parts = digits
            .iter()
            .zip(self.dims.iter().zip(&self.degrees))
            .map(|(&c, (&n, &d))| {
                if c as u32 > n {
                    Err(Error::InvalidDigit { digit: c, max: n })
                } else {
                    Ok(FactorIndex(vec![c; d as usize]))
                }
            })
            .collect::<Result<_>>()?;
        Ok(ProductIndex(parts))
    }

    /// `I_j`: every entry equal to `j` (requires `j <= n_1`).
    pub fn uniform_corner(&self, j: u16) -> Result<ProductIndex> {
        self.corner(&vec![j; self.factors()])
    }

    pub fn check_index(&self, idx: &ProductIndex) -> Result<()> {
        if idx.0.len() != self.factors() {
            return Err(Error::ShapeMismatch);
        }
        for (part, (&n, &d)) in idx.0.iter().zip(self.dims.iter().zip(&self.degrees)) {
            if part.0.len() != d as usize {
                return Err(Error::ShapeMismatch);
            }
            if let Some(&bad) = part.0.iter().find(|&&x| x as u32 > n) {
                return Err(Error::InvalidDigit { digit: bad, max: n });
            }
            if part.0.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::InvalidParameter(format!("{part} is not sorted")));
            }
        }
        Ok(())
    }

    pub fn lambda(&self) -> Lambda {
        Lambda::new(self)
    }
}

fn fmt_list(f: &mut fmt::Formatter<'_>, xs: impl Iterator<Item = u32>) -> fmt::Result {
    write!(f, "(")?;
    for (i, x) in xs.enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{x}")?;
    }
    write!(f, ")")
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SV^")?;
        fmt_list(f, self.given.iter().map(|p| p.0))?;
        write!(f, "_")?;
        fmt_list(f, self.given.iter().map(|p| p.1))
    }
}

/// A nondecreasing tuple over `{0, ..., n}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FactorIndex(pub Vec<u16>);

impl FactorIndex {
    pub fn entries(&self) -> &[u16] {
        &self.0
    }

    pub fn count(&self, digit: u16) -> usize {
        self.0.iter().filter(|&&x| x == digit).count()
    }

    pub fn contains(&self, digit: u16) -> bool {
        self.0.binary_search(&digit).is_ok()
    }
}

impl fmt::Display for FactorIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_list(f, self.0.iter().map(|&x| x as u32))
    }
}

/// One coordinate label: a [`FactorIndex`] per factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProductIndex(pub Vec<FactorIndex>);

impl ProductIndex {
    pub fn parts(&self) -> &[FactorIndex] {
        &self.0
    }

    pub fn from_parts(parts: &[&[u16]]) -> Self {
        ProductIndex(parts.iter().map(|p| FactorIndex(p.to_vec())).collect())
    }
}

impl fmt::Display for ProductIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// All nondecreasing `d`-tuples over `{0, ..., n}` in lexicographic order.
pub fn enumerate_factor_indices(n: u32, d: u32) -> Result<Vec<FactorIndex>> {
    if d == 0 {
        return Err(Error::InvalidParameter("factor degree must be at least 1".into()));
    }
    if n >= u16::MAX as u32 {
        return Err(Error::InvalidParameter(format!("factor dimension {n} too large")));
    }
    let mut out = Vec::new();
    let mut cur = vec![0u16; d as usize];
    loop {
        out.push(FactorIndex(cur.clone()));
        // rightmost position that can still grow
        let Some(pos) = cur.iter().rposition(|&x| (x as u32) < n) else {
            break;
        };
        let v = cur[pos] + 1;
        for x in &mut cur[pos..] {
            *x = v;
        }
    }
    Ok(out)
}

/// The same indices as [`enumerate_factor_indices`], in the same order, as
/// `(digit, multiplicity)` pairs with increasing digits. Costs the size of
/// the output, not `d` per index.
pub fn for_each_factor_multiset(n: u32, d: u32, mut f: impl FnMut(&[(u16, u32)])) {
    // more copies of a smaller digit sort first
    fn rec(n: u32, from: u32, left: u32, cur: &mut Vec<(u16, u32)>, f: &mut dyn FnMut(&[(u16, u32)])) {
        if left == 0 {
            f(cur);
            return;
        }
        for x in from..=n {
            let lo = if x == n { left } else { 1 };
            for k in (lo..=left).rev() {
                cur.push((x as u16, k));
                rec(n, x + 1, left - k, cur, f);
                cur.pop();
            }
        }
    }
    if d > 0 {
        rec(n, 0, d, &mut Vec::new(), &mut f);
    }
}

/// The product set `Λ`, enumerated lexicographically with the first
/// (sorted) factor most significant.
#[derive(Clone, Debug)]
pub struct Lambda {
    lists: Vec<Vec<FactorIndex>>,
}

impl Lambda {
    pub fn new(shape: &Shape) -> Self {
        let lists = shape
            .dims()
            .iter()
            .zip(shape.degrees())
            .map(|(&n, &d)| enumerate_factor_indices(n, d).expect("shape is valid"))
            .collect();
        Lambda { lists }
    }

    pub fn factor_lists(&self) -> &[Vec<FactorIndex>] {
        &self.lists
    }

    pub fn len(&self) -> usize {
        self.lists.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Calls `f` on every index, reusing one buffer.
    pub fn for_each(&self, mut f: impl FnMut(&ProductIndex)) {
        let r = self.lists.len();
        let mut pos = vec![0usize; r];
        let mut cur = ProductIndex(self.lists.iter().map(|l| l[0].clone()).collect());
        loop {
            f(&cur);
            let mut i = r;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                pos[i] += 1;
                if pos[i] < self.lists[i].len() {
                    cur.0[i].clone_from(&self.lists[i][pos[i]]);
                    break;
                }
                pos[i] = 0;
                cur.0[i].clone_from(&self.lists[i][0]);
            }
        }
    }

    /// Position of `idx` in the enumeration order.
    pub fn position(&self, idx: &ProductIndex) -> Option<usize> {
        let mut acc = 0;
        for (list, part) in self.lists.iter().zip(&idx.0) {
            let p = list.binary_search(part).ok()?;
            acc = acc * list.len() + p;
        }
        Some(acc)
    }

    pub fn to_vec(&self) -> Vec<ProductIndex> {
        let mut out = Vec::with_capacity(self.len());
        self.for_each(|i| out.push(i.clone()));
        out
    }
}

/// Materializes `Λ`, refusing when it has more than `limit` elements.
pub fn enumerate_lambda(shape: &Shape, limit: usize) -> Result<Vec<ProductIndex>> {
    let count = shape.ambient_count();
    match count.to_usize() {
        Some(c) if c <= limit => Ok(Lambda::new(shape).to_vec()),
        _ => Err(Error::resource(
            "|Lambda|",
            count.to_u128().unwrap_or(u128::MAX),
            limit as u128,
        )),
    }
}

/// Every shape with `|Λ| <= max_count`, up to reordering of factors, in
/// a fixed order (by factor list).
pub fn shapes_up_to(max_count: u64) -> Vec<Shape> {
    fn rec(start: (u32, u32), left: u64, cur: &mut Vec<(u32, u32)>, out: &mut Vec<Shape>) {
        if !cur.is_empty() {
            let (n, d): (Vec<u32>, Vec<u32>) = cur.iter().copied().unzip();
            out.push(Shape::new(&n, &d).expect("positive entries"));
        }
        let mut n = start.0;
        // C(n + d, d) >= n + 1, so n is bounded by left - 1
        while (n as u64) < left {
            let mut d = if n == start.0 { start.1 } else { 1 };
            loop {
                let c = binomial_u128((n + d) as u64, d as u64).unwrap_or(u128::MAX);
                if c > left as u128 {
                    break;
                }
                cur.push((n, d));
                rec((n, d), left / c as u64, cur, out);
                cur.pop();
                d += 1;
            }
            n += 1;
        }
    }
    let mut out = Vec::new();
    rec((1, 1), max_count, &mut Vec::new(), &mut out);
    out
}

/// Size of the multiset intersection of two sorted tuples.
fn common(a: &[u16], b: &[u16]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

pub fn factor_distance(a: &FactorIndex, b: &FactorIndex) -> Result<u32> {
    if a.0.len() != b.0.len() {
        return Err(Error::ShapeMismatch);
    }
    Ok((a.0.len() - common(&a.0, &b.0)) as u32)
}

/// The distance `d(I, J)`: entries left unmatched, summed over factors.
pub fn distance(a: &ProductIndex, b: &ProductIndex) -> Result<u32> {
    if a.0.len() != b.0.len() {
        return Err(Error::ShapeMismatch);
    }
    a.0.iter().zip(&b.0).map(|(x, y)| factor_distance(x, y)).sum()
}

/// Target digit and per-factor offsets of a δ-shift.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftProfile {
    pub offsets: Vec<i32>,
    pub target_digit: u16,
}

fn check_digit(shape: &Shape, j: u16) -> Result<()> {
    if j == 0 || j as u32 > shape.n1() {
        return Err(Error::InvalidDigit {
            digit: j,
            max: shape.n1(),
        });
    }
    Ok(())
}

/// Replaces `l` zeros by `j` (or `-l` copies of `j` by zeros when `l < 0`).
pub fn shift_factor(part: &FactorIndex, l: i32, j: u16) -> Option<FactorIndex> {
    let a = part.count(0) as i32;
    let b = part.count(j) as i32;
    if l > a || -l > b {
        return None;
    }
    let mut v: Vec<u16> = Vec::with_capacity(part.0.len());
    v.extend(std::iter::repeat(0).take((a - l) as usize));
    v.extend(part.0.iter().copied().filter(|&x| x != 0 && x < j));
    v.extend(std::iter::repeat(j).take((b + l) as usize));
    v.extend(part.0.iter().copied().filter(|&x| x > j));
    Some(FactorIndex(v))
}

/// `δ^l_j(I)`, or `None` when some factor cannot be shifted.
///
/// The digit must satisfy `1 <= j <= n_1` so that it exists in every
/// factor.
pub fn delta_shift(shape: &Shape, idx: &ProductIndex, p: &ShiftProfile) -> Result<Option<ProductIndex>> {
    shape.check_index(idx)?;
    if p.offsets.len() != shape.factors() {
        return Err(Error::ShapeMismatch);
    }
    check_digit(shape, p.target_digit)?;
    let mut parts = Vec::with_capacity(idx.0.len());
    for (part, &l) in idx.0.iter().zip(&p.offsets) {
        match shift_factor(part, l, p.target_digit) {
            Some(x) => parts.push(x),
            None => return Ok(None),
        }
    }
    Ok(Some(ProductIndex(parts)))
}

/// Calls `f` on every composition of `total` into `caps.len()` parts with
/// `0 <= parts[i] <= caps[i]`, lexicographically.
pub fn for_each_composition(total: u32, caps: &[u32], mut f: impl FnMut(&[u32])) {
    fn rec(i: usize, left: u32, caps: &[u32], suffix: &[u32], cur: &mut Vec<u32>, f: &mut dyn FnMut(&[u32])) {
        if i == caps.len() {
            if left == 0 {
                f(cur);
            }
            return;
        }
        let lo = left.saturating_sub(suffix[i + 1]);
        let hi = left.min(caps[i]);
        if lo > hi {
            return;
        }
        for x in lo..=hi {
            cur.push(x);
            rec(i + 1, left - x, caps, suffix, cur, f);
            cur.pop();
        }
    }
    // suffix[i] = sum of caps[i..]
    let mut suffix = vec![0u32; caps.len() + 1];
    for i in (0..caps.len()).rev() {
        suffix[i] = suffix[i + 1].saturating_add(caps[i]);
    }
    if total > suffix[0] {
        return;
    }
    rec(0, total, caps, &suffix, &mut Vec::with_capacity(caps.len()), &mut f);
}

/// `Δ(I, l)_j`. For `l < 0` this is computed by un-shifting, never by
/// scanning `Λ`.
pub fn delta_set(shape: &Shape, idx: &ProductIndex, l: i32, j: u16) -> Result<Vec<ProductIndex>> {
    shape.check_index(idx)?;
    check_digit(shape, j)?;
    Ok(delta_set_unchecked(idx, l, j))
}

pub(crate) fn delta_set_unchecked(idx: &ProductIndex, l: i32, j: u16) -> Vec<ProductIndex> {
    let sign = if l >= 0 { 1 } else { -1 };
    let caps: Vec<u32> = idx
        .0
        .iter()
        .map(|p| if l >= 0 { p.count(0) } else { p.count(j) } as u32)
        .collect();
    let mut out = Vec::new();
    for_each_composition(l.unsigned_abs(), &caps, |comp| {
        let parts = idx
            .0
            .iter()
            .zip(comp)
            .map(|(p, &x)| shift_factor(p, sign * x as i32, j).expect("within caps"))
            .collect();
        out.push(ProductIndex(parts));
    });
    out.sort();
    out
}

/// `s^+_I`: the number of zeros, i.e. `d - d(I, I_0)`.
pub fn s_plus(idx: &ProductIndex) -> u32 {
    idx.0.iter().map(|p| p.count(0) as u32).sum()
}

/// `s^-_{I,j}`: the number of entries equal to `j`, i.e. `d - d(I, I_j)`.
pub fn s_minus(idx: &ProductIndex, j: u16) -> u32 {
    idx.0.iter().map(|p| p.count(j) as u32).sum()
}

/// `Δ(I)^+_j`, grouped by shift length.
pub fn delta_plus(shape: &Shape, idx: &ProductIndex, j: u16) -> Result<Vec<Vec<ProductIndex>>> {
    shape.check_index(idx)?;
    check_digit(shape, j)?;
    Ok((0..=s_plus(idx) as i32).map(|l| delta_set_unchecked(idx, l, j)).collect())
}

/// `Δ(I)^-_j`, grouped by shift length.
pub fn delta_minus(shape: &Shape, idx: &ProductIndex, j: u16) -> Result<Vec<Vec<ProductIndex>>> {
    shape.check_index(idx)?;
    check_digit(shape, j)?;
    Ok((0..=s_minus(idx, j) as i32)
        .map(|l| delta_set_unchecked(idx, -l, j))
        .collect())
}

/// Per-factor shift lengths taking `from` to `to` by replacing zeros with
/// `j`, if `to ∈ Δ(from)^+_j`.
pub fn shift_offsets(from: &ProductIndex, to: &ProductIndex, j: u16) -> Option<Vec<u32>> {
    if from.0.len() != to.0.len() {
        return None;
    }
    from.0
        .iter()
        .zip(&to.0)
        .map(|(a, b)| {
            let l = a.count(0) as i32 - b.count(0) as i32;
            (l >= 0 && shift_factor(a, l, j).as_ref() == Some(b)).then_some(l as u32)
        })
        .collect()
}

/// `c_(K,J) = Π_i C(s^+_{K^i}, d(K^i, J^i))` for `J ∈ Δ(K)^+_j`.
pub fn shift_coefficient(shape: &Shape, k: &ProductIndex, to: &ProductIndex, j: u16) -> Result<BigUint> {
    shape.check_index(k)?;
    shape.check_index(to)?;
    check_digit(shape, j)?;
    let offsets = shift_offsets(k, to, j).ok_or_else(|| Error::NotInShiftClosure(to.to_string()))?;
    Ok(k.0
        .iter()
        .zip(offsets)
        .map(|(p, l)| binomial(p.count(0) as u64, l as u64))
        .product())
}
