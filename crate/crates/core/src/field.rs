//! Arithmetic in the prime field Z_p.
//!
//! Elements always hold the canonical representative in `0..p`.

use crate::error::{Error, Result};
use std::fmt;

/// Deterministic primality test, fine for the small moduli used here.
pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    modulus: u64,
}

impl FieldElement {
    pub fn new(value: i64, modulus: u64) -> Result<Self> {
        if !is_prime(modulus) {
            return Err(Error::NotPrime(modulus));
        }
        Ok(Self::reduced(value, modulus))
    }

    /// Caller guarantees `modulus` is prime.
    pub fn reduced(value: i64, modulus: u64) -> Self {
        let m = modulus as i64;
        FieldElement { value: value.rem_euclid(m) as u64, modulus }
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    fn check(&self, o: &Self) -> Result<()> {
        if self.modulus != o.modulus {
            Err(Error::ModulusMismatch(self.modulus, o.modulus))
        } else {
            Ok(())
        }
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        Ok(FieldElement { value: (self.value + o.value) % self.modulus, modulus: self.modulus })
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        Ok(FieldElement {
            value: (self.value + self.modulus - o.value) % self.modulus,
            modulus: self.modulus,
        })
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let v = (self.value as u128 * o.value as u128) % self.modulus as u128;
        Ok(FieldElement { value: v as u64, modulus: self.modulus })
    }

    pub fn neg(&self) -> Self {
        FieldElement { value: (self.modulus - self.value) % self.modulus, modulus: self.modulus }
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let m = self.modulus as u128;
        let mut base = self.value as u128 % m;
        let mut acc = 1u128 % m;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % m;
            }
            base = base * base % m;
            e >>= 1;
        }
        FieldElement { value: acc as u64, modulus: self.modulus }
    }

    /// Multiplicative inverse via a^(p-2).
    pub fn inv(&self) -> Result<Self> {
        if self.value == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self.pow(self.modulus - 2))
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        self.mul(&o.inv()?)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Small helpers on raw `u64` residues, used by the task modules.
pub mod raw {
    pub fn add(a: u64, b: u64, p: u64) -> u64 {
        (a + b) % p
    }
    pub fn sub(a: u64, b: u64, p: u64) -> u64 {
        (a + p - b % p) % p
    }
    pub fn mul(a: u64, b: u64, p: u64) -> u64 {
        ((a as u128 * b as u128) % p as u128) as u64
    }
    pub fn inv(a: u64, p: u64) -> Option<u64> {
        if a.is_multiple_of(p) {
            return None;
        }
        let mut acc = 1u64;
        let mut base = a % p;
        let mut e = p - 2;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul(acc, base, p);
            }
            base = mul(base, base, p);
            e >>= 1;
        }
        Some(acc)
    }
    pub fn div(a: u64, b: u64, p: u64) -> Option<u64> {
        inv(b, p).map(|ib| mul(a, ib, p))
    }
}
