//! Scalar fields used by the exact linear algebra.
//!
//! Everything downstream is written against [`Field`], which carries the
//! arithmetic as methods on a field *value* rather than on the elements.
//! This lets a prime field pick its modulus at run time while exact number
//! types from `num-traits` (rationals of any integer width) plug in through
//! the zero-sized [`Exact`] adapter.

use std::fmt;
use std::marker::PhantomData;

use num_traits::{FromPrimitive, Num};
use rand::Rng;

use crate::error::{Error, Result};

/// An exact field.
pub trait Field {
    type Elem: Clone + PartialEq + fmt::Debug;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn from_u64(&self, v: u64) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    /// Multiplicative inverse; `None` for zero.
    fn inv(&self, a: &Self::Elem) -> Option<Self::Elem>;
    fn is_zero(&self, a: &Self::Elem) -> bool;

    /// `a - b * c`
    fn sub_mul(&self, a: &Self::Elem, b: &Self::Elem, c: &Self::Elem) -> Self::Elem {
        self.sub(a, &self.mul(b, c))
    }

    fn from_i64(&self, v: i64) -> Self::Elem {
        let m = self.from_u64(v.unsigned_abs());
        if v < 0 {
            self.neg(&m)
        } else {
            m
        }
    }
}

/// Adapter turning an exact `num-traits` number type into a [`Field`].
///
/// Only meaningful for types whose division is exact (`BigRational`,
/// `Ratio<i128>`, ...).
pub struct Exact<T>(PhantomData<T>);

impl<T> Exact<T> {
    pub const fn new() -> Self {
        Exact(PhantomData)
    }
}

impl<T> Default for Exact<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T> Clone for Exact<T> {
    fn clone(&self) -> Self {
        Self::new()
    }
}

impl<T> Copy for Exact<T> {}

impl<T> fmt::Debug for Exact<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Exact<{}>", std::any::type_name::<T>())
    }
}

impl<T> Field for Exact<T>
where
    T: Num + Clone + fmt::Debug + FromPrimitive,
{
    type Elem = T;

    fn zero(&self) -> T {
        T::zero()
    }
    fn one(&self) -> T {
        T::one()
    }
    fn from_u64(&self, v: u64) -> T {
        T::from_u64(v).expect("u64 embeds in an exact field")
    }
    fn add(&self, a: &T, b: &T) -> T {
        a.clone() + b.clone()
    }
    fn sub(&self, a: &T, b: &T) -> T {
        a.clone() - b.clone()
    }
    fn mul(&self, a: &T, b: &T) -> T {
        a.clone() * b.clone()
    }
    fn neg(&self, a: &T) -> T {
        T::zero() - a.clone()
    }
    fn inv(&self, a: &T) -> Option<T> {
        if a.is_zero() {
            None
        } else {
            Some(T::one() / a.clone())
        }
    }
    fn is_zero(&self, a: &T) -> bool {
        a.is_zero()
    }
}

/// `2^62 - 57`, the largest prime below `2^62`.
pub const DEFAULT_PRIME: u64 = 4_611_686_018_427_387_847;

/// Element of a [`PrimeField`], stored in Montgomery form.
///
/// Values are only meaningful together with the field that produced them;
/// use [`PrimeField::value`] to read the canonical residue.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct Fp(u64);

/// The prime field `F_p` for an odd prime `p < 2^63`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
    /// `-p^{-1} mod 2^64`
    neg_inv: u64,
    /// `2^128 mod p`
    r2: u64,
    /// `2^64 mod p`
    r1: u64,
}

impl PrimeField {
    /// Builds `F_p`, checking primality.
    pub fn new(p: u64) -> Result<Self> {
        if !is_prime(p) || p == 2 || p >= 1 << 63 {
            return Err(Error::NotPrime(p));
        }
        Ok(Self::new_unchecked(p))
    }

    fn new_unchecked(p: u64) -> Self {
        // Newton iteration for p^{-1} mod 2^64.
        let mut inv: u64 = 1;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(p.wrapping_mul(inv)));
        }
        let r1 = ((1u128 << 64) % p as u128) as u64;
        let r2 = ((r1 as u128 * r1 as u128) % p as u128) as u64;
        PrimeField {
            p,
            neg_inv: inv.wrapping_neg(),
            r2,
            r1,
        }
    }

    pub fn default_field() -> Self {
        Self::new_unchecked(DEFAULT_PRIME)
    }

    /// A uniformly chosen prime in `[2^61, 2^62)`.
    pub fn random_62_bit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let candidate = rng.gen_range((1u64 << 61)..(1u64 << 62)) | 1;
            if is_prime(candidate) {
                return Self::new_unchecked(candidate);
            }
        }
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    #[inline(always)]
    fn redc(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.neg_inv);
        let u = ((t + m as u128 * self.p as u128) >> 64) as u64;
        if u >= self.p {
            u - self.p
        } else {
            u
        }
    }

    /// Canonical residue in `[0, p)`.
    pub fn value(&self, a: &Fp) -> u64 {
        self.redc(a.0 as u128)
    }

    pub fn pow(&self, a: &Fp, mut e: u64) -> Fp {
        let mut base = *a;
        let mut acc = Fp(self.r1);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Fp {
        self.from_u64(rng.gen_range(0..self.p))
    }
}

impl Field for PrimeField {
    type Elem = Fp;

    #[inline]
    fn zero(&self) -> Fp {
        Fp(0)
    }
    #[inline]
    fn one(&self) -> Fp {
        Fp(self.r1)
    }
    #[inline]
    fn from_u64(&self, v: u64) -> Fp {
        Fp(self.redc((v % self.p) as u128 * self.r2 as u128))
    }
    #[inline(always)]
    fn add(&self, a: &Fp, b: &Fp) -> Fp {
        let s = a.0 + b.0;
        Fp(if s >= self.p { s - self.p } else { s })
    }
    #[inline(always)]
    fn sub(&self, a: &Fp, b: &Fp) -> Fp {
        Fp(if a.0 >= b.0 {
            a.0 - b.0
        } else {
            a.0 + self.p - b.0
        })
    }
    #[inline(always)]
    fn mul(&self, a: &Fp, b: &Fp) -> Fp {
        Fp(self.redc(a.0 as u128 * b.0 as u128))
    }
    #[inline]
    fn neg(&self, a: &Fp) -> Fp {
        Fp(if a.0 == 0 { 0 } else { self.p - a.0 })
    }
    fn inv(&self, a: &Fp) -> Option<Fp> {
        if a.0 == 0 {
            None
        } else {
            Some(self.pow(a, self.p - 2))
        }
    }
    #[inline(always)]
    fn is_zero(&self, a: &Fp) -> bool {
        a.0 == 0
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &w in &WITNESSES {
        if n % w == 0 {
            return n == w;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &w in &WITNESSES {
        let mut x = pow_mod(w, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
