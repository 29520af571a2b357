//! Arithmetic in GF(p^k).
//!
//! Elements are little-endian coefficient vectors over Z_p, always reduced
//! modulo a fixed monic irreducible polynomial of degree k. The modulus is the
//! smallest monic irreducible polynomial when coefficient lists are compared
//! from the highest degree down, so the same field always has the same
//! representation. For k = 1 the modulus is `x` and arithmetic is plain mod p.
//!
//! The integer enumeration `index <-> element` reads the coefficient vector as
//! base-p digits (coefficient of x^0 is the least significant digit).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported field order.
pub const MAX_ORDER: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    p: u32,
    k: u32,
    /// Monic, length k + 1, little-endian.
    modulus: Vec<u32>,
    d: u32,
}

/// A canonical (fully reduced) element of some [`FieldSpec`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElem {
    coeffs: Vec<u32>,
}

impl FieldElem {
    pub fn coeffs(&self) -> &[u32] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut q = 2;
    while q * q <= n {
        if n.is_multiple_of(q) {
            return false;
        }
        q += 1;
    }
    true
}

/// Splits `d` as `p^k` with `p` prime, if possible.
pub fn prime_power(d: u64) -> Option<(u64, u32)> {
    if d < 2 {
        return None;
    }
    let p = (2..=d).find(|q| d.is_multiple_of(*q))?;
    let mut rest = d;
    let mut k = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        k += 1;
    }
    (rest == 1).then_some((p, k))
}

/// Remainder of `a` modulo the monic polynomial `m` over Z_p. Both little-endian.
fn poly_rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let deg = m.len() - 1;
    let mut r = a.to_vec();
    for top in (deg..r.len()).rev() {
        let c = r[top] % p;
        if c == 0 {
            continue;
        }
        for (s, &ms) in m.iter().enumerate() {
            let i = top - deg + s;
            r[i] = (r[i] + p - (c * ms) % p) % p;
        }
    }
    r.truncate(deg);
    r
}

fn digits(mut code: u64, p: u64, len: usize) -> Vec<u64> {
    (0..len)
        .map(|_| {
            let c = code % p;
            code /= p;
            c
        })
        .collect()
}

/// Brute-force irreducibility test: no monic factor of degree 1..=deg/2.
fn is_irreducible(poly: &[u64], p: u64) -> bool {
    let deg = poly.len() - 1;
    for fdeg in 1..=deg / 2 {
        for code in 0..p.pow(fdeg as u32) {
            let mut g = digits(code, p, fdeg);
            g.push(1);
            if poly_rem(poly, &g, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

impl FieldSpec {
    pub fn new(p: u64, k: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NonPrime(p));
        }
        if k == 0 {
            return Err(Error::InvalidArgument("extension degree must be >= 1".into()));
        }
        let d = p
            .checked_pow(k)
            .filter(|&d| d <= MAX_ORDER)
            .ok_or(Error::Overflow { p, k })?;
        let modulus = if k == 1 {
            vec![0, 1]
        } else {
            // Codes enumerate the lower coefficients as base-p digits with the
            // x^(k-1) coefficient most significant, i.e. lexicographic order.
            (0..p.pow(k))
                .map(|code| {
                    let mut m = digits(code, p, k as usize);
                    m.push(1);
                    m
                })
                .find(|m| is_irreducible(m, p))
                .expect("an irreducible polynomial of every degree exists")
        };
        Ok(FieldSpec {
            p: p as u32,
            k,
            modulus: modulus.into_iter().map(|c| c as u32).collect(),
            d: d as u32,
        })
    }

    /// Field of order `d`, which must be a prime power.
    pub fn with_order(d: u64) -> Result<Self> {
        let (p, k) = prime_power(d).ok_or(Error::NotPrimePower(d))?;
        Self::new(p, k)
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.k
    }

    pub fn order(&self) -> usize {
        self.d as usize
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn zero(&self) -> FieldElem {
        FieldElem { coeffs: vec![0; self.k as usize] }
    }

    pub fn one(&self) -> FieldElem {
        let mut e = self.zero();
        e.coeffs[0] = 1;
        e
    }

    /// Element with the given base-p digit index.
    pub fn elem(&self, index: usize) -> FieldElem {
        assert!(index < self.order(), "index {index} outside GF({})", self.d);
        let c = digits(index as u64, self.p as u64, self.k as usize);
        FieldElem { coeffs: c.into_iter().map(|x| x as u32).collect() }
    }

    pub fn index(&self, a: &FieldElem) -> usize {
        a.coeffs.iter().rev().fold(0usize, |acc, &c| acc * self.p as usize + c as usize)
    }

    /// Builds an element from raw coefficients, reducing them.
    pub fn from_coeffs(&self, coeffs: &[u32]) -> FieldElem {
        let p = self.p as u64;
        let raw: Vec<u64> = coeffs.iter().map(|&c| c as u64 % p).collect();
        self.reduce(raw)
    }

    fn reduce(&self, mut raw: Vec<u64>) -> FieldElem {
        let k = self.k as usize;
        if raw.len() > k {
            let m: Vec<u64> = self.modulus.iter().map(|&c| c as u64).collect();
            raw = poly_rem(&raw, &m, self.p as u64);
        }
        raw.resize(k, 0);
        FieldElem { coeffs: raw.into_iter().map(|c| c as u32).collect() }
    }

    pub fn add(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        let p = self.p;
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(&x, &y)| (x + y) % p).collect();
        FieldElem { coeffs }
    }

    pub fn neg(&self, a: &FieldElem) -> FieldElem {
        let p = self.p;
        FieldElem { coeffs: a.coeffs.iter().map(|&x| (p - x) % p).collect() }
    }

    pub fn sub(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        let p = self.p as u64;
        let k = self.k as usize;
        let mut prod = vec![0u64; 2 * k - 1];
        for (i, &x) in a.coeffs.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.coeffs.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p;
            }
        }
        self.reduce(prod)
    }

    pub fn pow(&self, a: &FieldElem, mut e: u64) -> FieldElem {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse, `a^(d-2)`.
    pub fn inv(&self, a: &FieldElem) -> Result<FieldElem> {
        if a.is_zero() {
            return Err(Error::DivisionByZero(self.d as u64));
        }
        Ok(self.pow(a, self.d as u64 - 2))
    }

    /// Absolute trace `a + a^p + ... + a^(p^(k-1))`, an element of Z_p.
    pub fn trace(&self, a: &FieldElem) -> u32 {
        let mut acc = self.zero();
        let mut frob = a.clone();
        for _ in 0..self.k {
            acc = self.add(&acc, &frob);
            frob = self.pow(&frob, self.p as u64);
        }
        debug_assert!(acc.coeffs[1..].iter().all(|&c| c == 0), "trace left the prime field");
        acc.coeffs[0]
    }

    /// Index-level lookup tables, `O(d^2)` memory.
    pub fn tables(&self) -> FieldTables {
        let d = self.order();
        let elems: Vec<FieldElem> = (0..d).map(|i| self.elem(i)).collect();
        let mut add = vec![0u32; d * d];
        let mut mul = vec![0u32; d * d];
        for a in 0..d {
            for b in a..d {
                let s = self.index(&self.add(&elems[a], &elems[b])) as u32;
                let m = self.index(&self.mul(&elems[a], &elems[b])) as u32;
                add[a * d + b] = s;
                add[b * d + a] = s;
                mul[a * d + b] = m;
                mul[b * d + a] = m;
            }
        }
        let trace = elems.iter().map(|e| self.trace(e)).collect();
        FieldTables { d, add, mul, trace }
    }
}

/// Addition, multiplication and trace tables over element indices.
#[derive(Debug, Clone)]
pub struct FieldTables {
    d: usize,
    add: Vec<u32>,
    mul: Vec<u32>,
    trace: Vec<u32>,
}

impl FieldTables {
    #[inline]
    pub fn add(&self, a: usize, b: usize) -> usize {
        self.add[a * self.d + b] as usize
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.d + b] as usize
    }

    #[inline]
    pub fn trace(&self, a: usize) -> u32 {
        self.trace[a]
    }
}
