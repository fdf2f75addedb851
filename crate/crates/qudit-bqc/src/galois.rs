//! Exact arithmetic in `GF(p^m)` and in the Galois rings `GR(4,m)`,
//! `GR(8,m)` and `GR(9,m)`.
//!
//! Field elements are indices in `[0, d)` encoding their coefficient vector
//! over `Z_p` in little-endian base-`p` digits (coefficients of
//! `1, ξ, …, ξ^{m−1}`). That encoding also fixes the computational-basis
//! ordering used by every gate matrix in the crate.
//!
//! Character values are kept exact as integer exponents of the relevant root
//! of unity; conversion to `Complex64` happens only at the edge.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::{Error, Result};

/// Largest supported qudit dimension `d = p^m`.
pub const DIM_CAP: u32 = 512;

/// A canonical element of `GF(p^m)`, stored as its basis-state index.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldElement(pub u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// The field `GF(p^m)` with its canonical irreducible modulus and
/// precomputed arithmetic tables. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Field {
    p: u32,
    m: u32,
    d: u32,
    modulus: Vec<u32>,
    add: Vec<u32>,
    mul: Vec<u32>,
    neg: Vec<u32>,
    inv: Vec<u32>,
    trace: Vec<u32>,
}

/// Serializable field descriptor used by CLI config and transcripts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDescriptor {
    pub p: u32,
    pub m: u32,
    /// Monic modulus coefficients `[c0, …, cm]`, low degree first.
    pub modulus: Vec<u32>,
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2u32;
    while k * k <= n {
        if n % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}

/// Multiply two polynomials over `Z_p` and reduce by a monic modulus.
fn poly_mul_mod(a: &[u32], b: &[u32], modulus: &[u32], p: u32) -> Vec<u32> {
    let m = modulus.len() - 1;
    let mut r = vec![0u64; a.len() + b.len()];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            r[i + j] = (r[i + j] + ai as u64 * bj as u64) % p as u64;
        }
    }
    for i in (m..r.len()).rev() {
        let c = r[i];
        if c == 0 {
            continue;
        }
        r[i] = 0;
        for (k, &mk) in modulus.iter().enumerate().take(m) {
            let idx = i - m + k;
            r[idx] = (r[idx] + c * (p as u64 - mk as u64)) % p as u64;
        }
    }
    r.truncate(m.max(1));
    r.iter().map(|&c| c as u32).collect()
}

/// Trial division by every monic polynomial of degree `1..=deg/2`.
fn poly_is_irreducible(f: &[u32], p: u32) -> bool {
    let deg = f.len() - 1;
    if deg == 1 {
        return true;
    }
    for g_deg in 1..=deg / 2 {
        let count = (p as u64).pow(g_deg as u32);
        for idx in 0..count {
            let mut g = vec![0u32; g_deg + 1];
            let mut t = idx;
            for c in g.iter_mut().take(g_deg) {
                *c = (t % p as u64) as u32;
                t /= p as u64;
            }
            g[g_deg] = 1;
            if poly_divides(&g, f, p) {
                return false;
            }
        }
    }
    true
}

fn poly_divides(g: &[u32], f: &[u32], p: u32) -> bool {
    // remainder of f mod monic g
    let mut r: Vec<u64> = f.iter().map(|&c| c as u64).collect();
    let gd = g.len() - 1;
    for i in (gd..r.len()).rev() {
        let c = r[i];
        if c == 0 {
            continue;
        }
        r[i] = 0;
        for (k, &gk) in g.iter().enumerate().take(gd) {
            let idx = i - gd + k;
            r[idx] = (r[idx] + c * (p as u64 - gk as u64)) % p as u64;
        }
    }
    r.iter().all(|&c| c == 0)
}

/// Build `GF(p^m)` with the canonical modulus: the lexicographically
/// smallest monic irreducible polynomial over `Z_p`, coefficients compared
/// low-degree first.
pub fn make_field(p: u32, m: u32) -> Result<Field> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if m < 1 {
        return Err(Error::BadDegree);
    }
    let d = (p as u64).checked_pow(m).filter(|&d| d <= DIM_CAP as u64);
    d.ok_or(Error::DimensionCap((p as u64).saturating_pow(m), DIM_CAP as u64))?;

    let mut modulus: Option<Vec<u32>> = None;
    let count = (p as u64).pow(m);
    for idx in 0..count {
        let mut f = vec![0u32; m as usize + 1];
        let mut t = idx;
        for c in f.iter_mut().take(m as usize) {
            *c = (t % p as u64) as u32;
            t /= p as u64;
        }
        f[m as usize] = 1;
        if poly_is_irreducible(&f, p) {
            let better = match &modulus {
                None => true,
                Some(best) => lex_less(&f, best),
            };
            if better {
                modulus = Some(f);
            }
        }
    }
    let modulus = modulus.expect("an irreducible polynomial of every degree exists");
    Field::with_modulus(p, m, modulus)
}

fn lex_less(a: &[u32], b: &[u32]) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x != y {
            return x < y;
        }
    }
    false
}

impl Field {
    /// Build a field from an explicit monic modulus, re-checking
    /// irreducibility. Used by the CLI modulus override.
    pub fn with_modulus(p: u32, m: u32, modulus: Vec<u32>) -> Result<Field> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if modulus.len() != m as usize + 1
            || modulus[m as usize] != 1
            || modulus.iter().any(|&c| c >= p)
            || !poly_is_irreducible(&modulus, p)
        {
            return Err(Error::BadModulus(modulus));
        }
        let d64 = (p as u64).pow(m);
        if d64 > DIM_CAP as u64 {
            return Err(Error::DimensionCap(d64, DIM_CAP as u64));
        }
        let d = d64 as u32;

        let du = d as usize;
        let mut add = vec![0u32; du * du];
        let mut mul = vec![0u32; du * du];
        let mut neg = vec![0u32; du];
        for a in 0..d {
            let ca = Self::decode(a, p, m);
            neg[a as usize] = Self::encode(&ca.iter().map(|&c| (p - c) % p).collect::<Vec<_>>(), p);
            for b in 0..d {
                let cb = Self::decode(b, p, m);
                let sum: Vec<u32> = ca.iter().zip(cb.iter()).map(|(&x, &y)| (x + y) % p).collect();
                add[(a * d + b) as usize] = Self::encode(&sum, p);
                let prod = poly_mul_mod(&ca, &cb, &modulus, p);
                mul[(a * d + b) as usize] = Self::encode(&prod, p);
            }
        }
        let mut inv = vec![0u32; du];
        for a in 1..d {
            for b in 1..d {
                if mul[(a * d + b) as usize] == 1 {
                    inv[a as usize] = b;
                    break;
                }
            }
        }

        let mut field = Field { p, m, d, modulus, add, mul, neg, inv, trace: Vec::new() };
        let mut trace = vec![0u32; du];
        for a in 0..d {
            let mut acc = 0u32;
            let mut power = FieldElement(a);
            for _ in 0..m {
                acc = field.add[(acc * d + power.0) as usize];
                power = field.pow(power, p as u64);
            }
            debug_assert!(acc < p, "trace must land in the prime subfield");
            trace[a as usize] = acc;
        }
        field.trace = trace;
        Ok(field)
    }

    fn decode(idx: u32, p: u32, m: u32) -> Vec<u32> {
        let mut coeffs = vec![0u32; m as usize];
        let mut t = idx;
        for c in coeffs.iter_mut() {
            *c = t % p;
            t /= p;
        }
        coeffs
    }

    fn encode(coeffs: &[u32], p: u32) -> u32 {
        let mut idx = 0u32;
        for &c in coeffs.iter().rev() {
            idx = idx * p + c;
        }
        idx
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn dim(&self) -> u32 {
        self.d
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn descriptor(&self) -> FieldDescriptor {
        FieldDescriptor { p: self.p, m: self.m, modulus: self.modulus.clone() }
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.d).map(FieldElement)
    }

    /// Coefficient vector of `a` over `Z_p`, low degree first.
    pub fn coeffs(&self, a: FieldElement) -> Vec<u32> {
        Self::decode(a.0, self.p, self.m)
    }

    pub fn element_from_coeffs(&self, coeffs: &[u32]) -> FieldElement {
        debug_assert!(coeffs.len() == self.m as usize && coeffs.iter().all(|&c| c < self.p));
        FieldElement(Self::encode(coeffs, self.p))
    }

    /// Embed an integer scalar through the prime subfield.
    pub fn scalar(&self, k: i64) -> FieldElement {
        FieldElement(k.rem_euclid(self.p as i64) as u32)
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(self.add[(a.0 * self.d + b.0) as usize])
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    pub fn neg(&self, a: FieldElement) -> FieldElement {
        FieldElement(self.neg[a.0 as usize])
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(self.mul[(a.0 * self.d + b.0) as usize])
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        if a.0 == 0 {
            return Err(Error::NotInvertible);
        }
        Ok(FieldElement(self.inv[a.0 as usize]))
    }

    pub fn pow(&self, a: FieldElement, e: u64) -> FieldElement {
        let mut acc = FieldElement::ONE;
        let mut base = a;
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Finite-field trace `tr(a) = Σ_{j<m} a^{p^j}`, reported in `[0, p)`.
    pub fn trace(&self, a: FieldElement) -> u32 {
        self.trace[a.0 as usize]
    }

    /// Additive character `χ(t) = ω_p^{tr(t)}`.
    pub fn chi(&self, t: FieldElement) -> Complex64 {
        Complex64::from_polar(1.0, TAU * self.trace(t) as f64 / self.p as f64)
    }

    /// Square root in `F_{2^m}` via `l = λ^{2^{m−1}}` (squaring is a
    /// bijection in characteristic two).
    pub fn sqrt_char2(&self, a: FieldElement) -> FieldElement {
        debug_assert_eq!(self.p, 2);
        self.pow(a, 1u64 << (self.m - 1))
    }
}

/// An element of a Galois ring, as modulus-reduced coefficients over
/// `Z_{p^s}`, low degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingElement(pub Vec<u64>);

/// The Galois ring `GR(p^s, m)`: the lift of `GF(p^m)` modulo `p^s`.
///
/// The lifted modulus keeps the field modulus coefficients; any monic lift
/// presents the same ring, and the Teichmüller digits and the generalized
/// Frobenius below are presentation-independent.
#[derive(Debug, Clone)]
pub struct GaloisRing {
    field: Field,
    s: u32,
    q: u64,
    modulus: Vec<u64>,
    teich: Vec<RingElement>,
}

impl GaloisRing {
    /// Supported lifts: `GR(4,m)`, `GR(8,m)` for `p = 2` and `GR(9,m)` for
    /// `p = 3`.
    pub fn new(field: &Field, s: u32) -> Result<GaloisRing> {
        let p = field.p();
        if !matches!((p, s), (2, 2) | (2, 3) | (3, 2)) {
            return Err(Error::UnsupportedCharacter(p, s));
        }
        let q = (p as u64).pow(s);
        let modulus: Vec<u64> = field.modulus().iter().map(|&c| c as u64).collect();
        let mut ring = GaloisRing { field: field.clone(), s, q, modulus, teich: Vec::new() };
        let mut teich = Vec::with_capacity(field.dim() as usize);
        for a in field.elements() {
            teich.push(ring.compute_teichmuller(a));
        }
        ring.teich = teich;
        Ok(ring)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    /// `p^s`, the characteristic of the ring's base `Z_{p^s}`.
    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn zero(&self) -> RingElement {
        RingElement(vec![0; self.field.m() as usize])
    }

    pub fn add(&self, a: &RingElement, b: &RingElement) -> RingElement {
        RingElement(a.0.iter().zip(&b.0).map(|(&x, &y)| (x + y) % self.q).collect())
    }

    pub fn sub(&self, a: &RingElement, b: &RingElement) -> RingElement {
        RingElement(a.0.iter().zip(&b.0).map(|(&x, &y)| (x + self.q - y) % self.q).collect())
    }

    pub fn mul(&self, a: &RingElement, b: &RingElement) -> RingElement {
        let m = self.modulus.len() - 1;
        let mut r = vec![0u64; 2 * m];
        for (i, &ai) in a.0.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            for (j, &bj) in b.0.iter().enumerate() {
                r[i + j] = (r[i + j] + ai * bj) % self.q;
            }
        }
        for i in (m..r.len()).rev() {
            let c = r[i];
            if c == 0 {
                continue;
            }
            r[i] = 0;
            for (k, &mk) in self.modulus.iter().enumerate().take(m) {
                let idx = i - m + k;
                r[idx] = (r[idx] + c * ((self.q - mk) % self.q)) % self.q;
            }
        }
        r.truncate(m);
        RingElement(r)
    }

    pub fn pow(&self, a: &RingElement, e: u64) -> RingElement {
        let mut acc = self.zero();
        acc.0[0] = 1;
        let mut base = a.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// Reduce a ring element coefficientwise mod `p` into the base field.
    pub fn reduce(&self, t: &RingElement) -> FieldElement {
        let coeffs: Vec<u32> =
            t.0.iter().map(|&c| (c % self.field.p() as u64) as u32).collect();
        self.field.element_from_coeffs(&coeffs)
    }

    fn compute_teichmuller(&self, a: FieldElement) -> RingElement {
        let coeffs: Vec<u64> = self.field.coeffs(a).iter().map(|&c| c as u64).collect();
        let mut x = RingElement(coeffs);
        let dm = self.field.dim() as u64;
        for _ in 0..self.s - 1 {
            x = self.pow(&x, dm);
        }
        debug_assert_eq!(self.pow(&x, dm), x, "Teichmüller fixed point");
        x
    }

    /// The unique ring element congruent to `a` mod `p` and fixed by
    /// `x ↦ x^{p^m}`.
    pub fn teichmuller_lift(&self, a: FieldElement) -> RingElement {
        self.teich[a.index()].clone()
    }

    /// Teichmüller-digit decomposition `t = Σ_i p^i · lift(d_i)`.
    fn digits(&self, t: &RingElement) -> Vec<FieldElement> {
        let p = self.field.p() as u64;
        let mut rest = t.clone();
        let mut digits = Vec::with_capacity(self.s as usize);
        for i in 0..self.s {
            let d = self.reduce(&rest);
            digits.push(d);
            if i + 1 < self.s {
                let lifted = self.teichmuller_lift(d);
                let diff = self.sub(&rest, &lifted);
                debug_assert!(diff.0.iter().all(|&c| c % p == 0));
                rest = RingElement(diff.0.iter().map(|&c| c / p).collect());
            }
        }
        digits
    }

    /// Generalized Frobenius: `a_i ↦ a_i^p` on the Teichmüller digits.
    pub fn frobenius(&self, t: &RingElement) -> RingElement {
        let p = self.field.p() as u64;
        let mut acc = self.zero();
        let mut scale = 1u64;
        for d in self.digits(t) {
            let powered = self.pow(&self.teichmuller_lift(d), p);
            let scaled = RingElement(powered.0.iter().map(|&c| c * scale % self.q).collect());
            acc = self.add(&acc, &scaled);
            scale *= p;
        }
        acc
    }

    /// Ring trace `Σ_{j<m} φ^j(t)`, an element of `Z_{p^s}`.
    pub fn ring_trace(&self, t: &RingElement) -> u64 {
        let mut acc = self.zero();
        let mut x = t.clone();
        for _ in 0..self.field.m() {
            acc = self.add(&acc, &x);
            x = self.frobenius(&x);
        }
        debug_assert!(
            acc.0[1..].iter().all(|&c| c == 0),
            "ring trace must be Frobenius-fixed, hence constant"
        );
        acc.0[0]
    }

    /// Exact character exponent: `tr_{p^s}(lift(a)^k)` as a numerator mod
    /// `p^s`.
    pub fn chi_exponent_of_power(&self, a: FieldElement, k: u32) -> u64 {
        let t = self.pow(&self.teichmuller_lift(a), k as u64);
        self.ring_trace(&t)
    }

    /// `χ_{p^s}(lift(a)^k) = ω_{p^s}^{tr(lift(a)^k)}`.
    pub fn chi_of_power(&self, a: FieldElement, k: u32) -> Complex64 {
        Complex64::from_polar(1.0, TAU * self.chi_exponent_of_power(a, k) as f64 / self.q as f64)
    }
}

/// Lifted character `χ_{p^s}` of a polynomial power of the Teichmüller lift,
/// e.g. `χ₄(u²)`, `χ₈(u⁴)`, `χ₉(u³)`.
pub fn chi_s(a: FieldElement, field: &Field, s: u32, power: u32) -> Result<Complex64> {
    let ring = GaloisRing::new(field, s)?;
    Ok(ring.chi_of_power(a, power))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn prime_field_is_plain_modular_arithmetic() {
        let f = make_field(5, 1).unwrap();
        assert_eq!(f.modulus(), &[0, 1]);
        assert_eq!(f.mul(FieldElement(3), FieldElement(4)), FieldElement(2));
        assert_eq!(f.inv(FieldElement(2)).unwrap(), FieldElement(3));
    }

    #[test]
    fn gf4_has_the_unique_irreducible_quadratic() {
        let f = make_field(2, 2).unwrap();
        assert_eq!(f.modulus(), &[1, 1, 1]);
        // ξ·ξ = ξ+1
        let xi = f.element_from_coeffs(&[0, 1]);
        assert_eq!(f.mul(xi, xi), f.element_from_coeffs(&[1, 1]));
    }

    #[test]
    fn gf9_modulus_matches_enumeration_oracle() {
        // Enumerate monic quadratics over Z_3, keep irreducible (no roots
        // suffices for quadratics), apply the low-degree-first tie-break.
        let mut best: Option<[u32; 2]> = None;
        for c1 in 0..3u32 {
            for c0 in 0..3u32 {
                let has_root = (0..3u32).any(|x| (x * x + c1 * x + c0) % 3 == 0);
                if !has_root {
                    let cand = [c0, c1];
                    if best.map_or(true, |b| cand < b) {
                        best = Some(cand);
                    }
                }
            }
        }
        let best = best.unwrap();
        let f = make_field(3, 2).unwrap();
        assert_eq!(f.modulus(), &[best[0], best[1], 1]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(make_field(6, 1), Err(Error::NotPrime(6))));
        assert!(matches!(make_field(2, 0), Err(Error::BadDegree)));
        assert!(matches!(make_field(2, 30), Err(Error::DimensionCap(_, _))));
        assert!(Field::with_modulus(2, 2, vec![0, 0, 1]).is_err()); // x² reducible
    }

    #[test]
    fn field_axioms_exhaustive_small_dims() {
        for (p, m) in [(2, 1), (3, 1), (2, 2), (5, 1), (7, 1), (2, 3), (3, 2)] {
            let f = make_field(p, m).unwrap();
            for a in f.elements() {
                assert_eq!(f.add(a, FieldElement::ZERO), a);
                assert_eq!(f.mul(a, FieldElement::ONE), a);
                assert_eq!(f.add(a, f.neg(a)), FieldElement::ZERO);
                if a != FieldElement::ZERO {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), FieldElement::ONE);
                }
                for b in f.elements() {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for c in f.elements() {
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                        assert_eq!(f.add(a, f.add(b, c)), f.add(f.add(a, b), c));
                        assert_eq!(f.mul(a, f.mul(b, c)), f.mul(f.mul(a, b), c));
                    }
                }
            }
        }
    }

    #[test]
    fn trace_is_linear_and_surjective() {
        for (p, m) in [(2, 2), (2, 3), (3, 2), (5, 1), (7, 1)] {
            let f = make_field(p, m).unwrap();
            let mut seen = vec![false; p as usize];
            for a in f.elements() {
                seen[f.trace(a) as usize] = true;
                for b in f.elements() {
                    let lhs = f.trace(f.add(a, b));
                    assert_eq!(lhs, (f.trace(a) + f.trace(b)) % p);
                }
            }
            assert!(seen.iter().all(|&s| s), "trace must be onto Z_p");
        }
    }

    #[test]
    fn trace_examples() {
        let f4 = make_field(2, 2).unwrap();
        let xi = f4.element_from_coeffs(&[0, 1]);
        assert_eq!(f4.trace(xi), 1); // ξ + ξ² = ξ + (ξ+1) = 1
        assert_eq!(f4.trace(FieldElement::ZERO), 0);
        let f3 = make_field(3, 1).unwrap();
        for a in f3.elements() {
            assert_eq!(f3.trace(a), a.0); // m = 1 collapses to the identity
        }
    }

    #[test]
    fn chi_is_multiplicative_and_orthogonal() {
        for (p, m) in [(2, 1), (3, 1), (2, 2), (5, 1), (2, 3), (3, 2)] {
            let f = make_field(p, m).unwrap();
            for a in f.elements() {
                for b in f.elements() {
                    assert!(close(f.chi(a) * f.chi(b), f.chi(f.add(a, b))));
                }
            }
            for z in f.elements() {
                let sum: Complex64 = f.elements().map(|a| f.chi(f.mul(z, a))).sum();
                let expect = if z == FieldElement::ZERO { f.dim() as f64 } else { 0.0 };
                assert!((sum - expect).norm() < 1e-9, "character sum at z={z:?}");
            }
        }
    }

    #[test]
    fn chi_examples() {
        let f2 = make_field(2, 1).unwrap();
        assert!(close(f2.chi(FieldElement(1)), Complex64::new(-1.0, 0.0)));
        let f4 = make_field(2, 2).unwrap();
        let xi = f4.element_from_coeffs(&[0, 1]);
        assert!(close(f4.chi(xi), Complex64::new(-1.0, 0.0)));
        assert!(close(f4.chi(FieldElement::ZERO), Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn teichmuller_fixed_points_small_rings() {
        // Z_4: lifts of Z_2 are the fixed points of x ↦ x² meeting x ≡ a mod 2.
        let f2 = make_field(2, 1).unwrap();
        let r4 = GaloisRing::new(&f2, 2).unwrap();
        assert_eq!(r4.teichmuller_lift(FieldElement(0)).0, vec![0]);
        assert_eq!(r4.teichmuller_lift(FieldElement(1)).0, vec![1]);
        // Z_9: the lift of 2 is the unique x ≡ 2 mod 3 with x³ = x; brute force.
        let f3 = make_field(3, 1).unwrap();
        let r9 = GaloisRing::new(&f3, 2).unwrap();
        let lift2 = r9.teichmuller_lift(FieldElement(2)).0[0];
        let expected: Vec<u64> =
            (0..9u64).filter(|&x| x % 3 == 2 && x.pow(3) % 9 == x).collect();
        assert_eq!(expected, vec![lift2]);
    }

    #[test]
    fn teichmuller_is_multiplicative() {
        for (p, m, s) in [(2, 1, 2), (2, 2, 2), (2, 3, 2), (2, 2, 3), (3, 1, 2), (3, 2, 2)] {
            let f = make_field(p, m).unwrap();
            let r = GaloisRing::new(&f, s).unwrap();
            for a in f.elements() {
                assert_eq!(r.reduce(&r.teichmuller_lift(a)), a);
                for b in f.elements() {
                    let lhs = r.mul(&r.teichmuller_lift(a), &r.teichmuller_lift(b));
                    assert_eq!(lhs, r.teichmuller_lift(f.mul(a, b)));
                }
            }
        }
    }

    #[test]
    fn ring_trace_reduces_to_field_trace() {
        for (p, m, s) in [(2, 2, 2), (2, 3, 3), (3, 2, 2)] {
            let f = make_field(p, m).unwrap();
            let r = GaloisRing::new(&f, s).unwrap();
            // exhaust all q^m ring elements
            let q = r.q();
            let mu = m as usize;
            let total = q.pow(m);
            for idx in 0..total {
                let mut coeffs = vec![0u64; mu];
                let mut t = idx;
                for c in coeffs.iter_mut() {
                    *c = t % q;
                    t /= q;
                }
                let el = RingElement(coeffs);
                let tr = r.ring_trace(&el);
                assert_eq!((tr % p as u64) as u32, f.trace(r.reduce(&el)));
            }
        }
    }

    #[test]
    fn ring_trace_is_additive() {
        let f = make_field(2, 2).unwrap();
        let r = GaloisRing::new(&f, 2).unwrap();
        for i in 0..16u64 {
            let a = RingElement(vec![i % 4, i / 4]);
            for j in 0..16u64 {
                let b = RingElement(vec![j % 4, j / 4]);
                let lhs = r.ring_trace(&r.add(&a, &b));
                assert_eq!(lhs, (r.ring_trace(&a) + r.ring_trace(&b)) % 4);
            }
        }
    }

    #[test]
    fn ring_trace_trivial_cases() {
        let f3 = make_field(3, 1).unwrap();
        let r9 = GaloisRing::new(&f3, 2).unwrap();
        for t in 0..9u64 {
            assert_eq!(r9.ring_trace(&RingElement(vec![t])), t); // m = 1
        }
        let f = make_field(2, 3).unwrap();
        let r = GaloisRing::new(&f, 3).unwrap();
        assert_eq!(r.ring_trace(&r.zero()), 0);
    }

    #[test]
    fn lifted_character_anchors() {
        // χ₄(u²) at d=2, u=1 → i (the qubit S phase)
        let f2 = make_field(2, 1).unwrap();
        assert!(close(chi_s(FieldElement(1), &f2, 2, 2).unwrap(), Complex64::new(0.0, 1.0)));
        // χ₈(u⁴) at d=2, u=1 → e^{iπ/4} (the qubit T phase)
        let t = chi_s(FieldElement(1), &f2, 3, 4).unwrap();
        assert!(close(t, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)));
        // χ₉(u³) at d=3, u=1 → e^{2πi/9}
        let f3 = make_field(3, 1).unwrap();
        let t3 = chi_s(FieldElement(1), &f3, 2, 3).unwrap();
        assert!(close(t3, Complex64::from_polar(1.0, TAU / 9.0)));
        // unsupported lift
        let f5 = make_field(5, 1).unwrap();
        assert!(chi_s(FieldElement(1), &f5, 2, 2).is_err());
    }

    #[test]
    fn descriptor_round_trips() {
        let f = make_field(3, 2).unwrap();
        let json = serde_json::to_string(&f.descriptor()).unwrap();
        let back: FieldDescriptor = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f.descriptor());
    }
}
