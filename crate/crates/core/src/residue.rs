//! Arithmetic in the residue rings Z/p^k.
//!
//! A [`Modulus`] fixes the pair `(p, k)`. Raw `u64` representatives in `[0, p^k)` are
//! manipulated through the modulus so that matrix kernels can stay on plain slices;
//! [`Residue`] bundles a value with its modulus for the checked, user-facing API.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported ring size, so that `a + b` never overflows a `u64`.
const MAX_ORDER: u64 = 1 << 62;

/// The ring Z/p^k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawModulus", into = "RawModulus")]
pub struct Modulus {
    p: u64,
    k: u32,
    order: u64,
}

#[derive(Serialize, Deserialize)]
struct RawModulus {
    p: u64,
    k: u32,
}

impl TryFrom<RawModulus> for Modulus {
    type Error = Error;
    fn try_from(raw: RawModulus) -> Result<Self> {
        Modulus::new(raw.p, raw.k)
    }
}

impl From<Modulus> for RawModulus {
    fn from(m: Modulus) -> Self {
        RawModulus { p: m.p, k: m.k }
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl Modulus {
    pub fn new(p: u64, k: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if k == 0 {
            return Err(Error::ZeroPrecision);
        }
        let mut order = 1u64;
        for _ in 0..k {
            order = order
                .checked_mul(p)
                .filter(|&o| o <= MAX_ORDER)
                .ok_or(Error::ModulusTooLarge { p, k })?;
        }
        Ok(Modulus { p, k, order })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// The ring size p^k.
    pub fn order(&self) -> u64 {
        self.order
    }

    /// Canonical representative of an arbitrary integer.
    pub fn reduce_i128(&self, x: i128) -> u64 {
        x.rem_euclid(self.order as i128) as u64
    }

    pub fn reduce(&self, x: u64) -> u64 {
        x % self.order
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.order {
            s - self.order
        } else {
            s
        }
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.order - b
        }
    }

    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.order - a
        }
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.order as u128) as u64
    }

    /// `a + b*c`
    pub fn mul_add(&self, a: u64, b: u64, c: u64) -> u64 {
        self.add(a, self.mul(b, c))
    }

    /// Largest `v <= k` with `p^v | a`; zero has valuation `k`.
    pub fn valuation(&self, a: u64) -> u32 {
        if a == 0 {
            return self.k;
        }
        let mut v = 0;
        let mut x = a;
        while x.is_multiple_of(self.p) {
            x /= self.p;
            v += 1;
        }
        v
    }

    pub fn is_unit(&self, a: u64) -> bool {
        !a.is_multiple_of(self.p)
    }

    pub fn pow_p(&self, e: u32) -> u64 {
        if e >= self.k {
            0
        } else {
            self.p.pow(e)
        }
    }

    /// Inverse of a unit by the extended Euclidean algorithm.
    pub fn inv(&self, a: u64) -> Result<u64> {
        if !self.is_unit(a) {
            return Err(Error::NotUnit {
                value: a,
                modulus: *self,
                valuation: self.valuation(a),
            });
        }
        let (mut r0, mut r1) = (self.order as i128, a as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(self.reduce_i128(t0))
    }

    /// Solves `x * a = b` when `valuation(a) <= valuation(b)`.
    ///
    /// Over a chain ring the element of smaller valuation divides the other one.
    pub fn divide(&self, b: u64, a: u64) -> Option<u64> {
        let va = self.valuation(a);
        let vb = self.valuation(b);
        if b == 0 {
            return Some(0);
        }
        if va > vb {
            return None;
        }
        let pv = self.p.pow(va);
        let unit_part = a / pv;
        let quotient = b / pv;
        // `unit_part` is coprime to p, hence invertible mod p^k.
        let inv = self.inv(self.reduce(unit_part)).ok()?;
        Some(self.mul(quotient, inv))
    }

    /// Natural map Z/p^k -> Z/p^j.
    pub fn with_precision(&self, j: u32) -> Result<Modulus> {
        if j > self.k {
            return Err(Error::PrecisionLift { from: self.k, to: j });
        }
        Modulus::new(self.p, j)
    }

    pub fn element(&self, value: u64) -> Residue {
        Residue {
            value: self.reduce(value),
            modulus: *self,
        }
    }

    pub fn norm(&self, a: u64) -> Norm {
        let v = self.valuation(a);
        if v >= self.k {
            Norm::Zero
        } else {
            Norm::Power(v)
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = u64> {
        0..self.order
    }

    pub fn units(&self) -> impl Iterator<Item = u64> + '_ {
        (1..self.order).filter(move |&a| self.is_unit(a))
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.k == 1 {
            write!(f, "Z/{}", self.p)
        } else {
            write!(f, "Z/{}^{}", self.p, self.k)
        }
    }
}

/// An element of Z/p^k with its canonical representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Residue {
    value: u64,
    modulus: Modulus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingOp {
    Add,
    Sub,
    Mul,
    Neg,
}

impl Residue {
    pub fn new(value: u64, modulus: Modulus) -> Self {
        modulus.element(value)
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    fn check(&self, other: &Residue) -> Result<()> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch(self.modulus, other.modulus));
        }
        Ok(())
    }

    /// Binary and unary ring operations. `Neg` ignores `other` except for the modulus check.
    pub fn apply(&self, op: RingOp, other: &Residue) -> Result<Residue> {
        self.check(other)?;
        let m = &self.modulus;
        let value = match op {
            RingOp::Add => m.add(self.value, other.value),
            RingOp::Sub => m.sub(self.value, other.value),
            RingOp::Mul => m.mul(self.value, other.value),
            RingOp::Neg => m.neg(self.value),
        };
        Ok(Residue {
            value,
            modulus: self.modulus,
        })
    }

    pub fn add(&self, other: &Residue) -> Result<Residue> {
        self.apply(RingOp::Add, other)
    }

    pub fn sub(&self, other: &Residue) -> Result<Residue> {
        self.apply(RingOp::Sub, other)
    }

    pub fn mul(&self, other: &Residue) -> Result<Residue> {
        self.apply(RingOp::Mul, other)
    }

    pub fn neg(&self) -> Residue {
        Residue {
            value: self.modulus.neg(self.value),
            modulus: self.modulus,
        }
    }

    pub fn valuation(&self) -> u32 {
        self.modulus.valuation(self.value)
    }

    pub fn norm(&self) -> Norm {
        self.modulus.norm(self.value)
    }

    pub fn is_unit(&self) -> bool {
        self.modulus.is_unit(self.value)
    }

    pub fn inv_unit(&self) -> Result<Residue> {
        Ok(Residue {
            value: self.modulus.inv(self.value)?,
            modulus: self.modulus,
        })
    }

    /// Image under Z/p^k -> Z/p^j.
    pub fn reduce_precision(&self, j: u32) -> Result<Residue> {
        let target = self.modulus.with_precision(j)?;
        Ok(target.element(self.value))
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.value, self.modulus.order())
    }
}

/// A p-adic absolute value at finite precision: either `p^-v` with `v < k`, or zero.
///
/// Zero means "equal at working precision"; it is not identified with `p^-k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Norm {
    Zero,
    Power(u32),
}

impl Norm {
    pub const ONE: Norm = Norm::Power(0);

    pub fn to_f64(self, p: u64) -> f64 {
        match self {
            Norm::Zero => 0.0,
            Norm::Power(v) => (p as f64).powi(-(v as i32)),
        }
    }

    /// Exact rational rendering: `"0"`, `"1"` or `"1/p^v"` evaluated, e.g. `"1/8"`.
    pub fn rational(self, p: u64) -> String {
        match self {
            Norm::Zero => "0".to_string(),
            Norm::Power(0) => "1".to_string(),
            Norm::Power(v) => format!("1/{}", (p as u128).pow(v)),
        }
    }
}

impl Ord for Norm {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Norm::Zero, Norm::Zero) => Ordering::Equal,
            (Norm::Zero, _) => Ordering::Less,
            (_, Norm::Zero) => Ordering::Greater,
            // larger valuation, smaller norm
            (Norm::Power(a), Norm::Power(b)) => b.cmp(a),
        }
    }
}

impl PartialOrd for Norm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
