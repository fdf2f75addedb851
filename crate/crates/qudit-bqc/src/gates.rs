//! Dense-matrix constructors for every gate family used by the toolkit:
//! finite-field Pauli and Clifford generators, generalized T gates, and the
//! integer-ring gates, plus decomposition and classification utilities.
//!
//! Matrices are row-major `Vec<Complex64>`; a two-qudit gate on factors
//! `(a, b)` indexes basis state `|u⟩⊗|v⟩` as `u·d + v`.

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

use crate::galois::{Field, FieldElement, GaloisRing};
use crate::{Error, Result};

/// A dense unitary with its construction label.
#[derive(Debug, Clone)]
pub struct Gate {
    pub dim: usize,
    pub arity: u8,
    pub label: String,
    /// Row-major, length `dim²`.
    pub matrix: Vec<Complex64>,
}

impl Gate {
    fn new(dim: usize, arity: u8, label: impl Into<String>, matrix: Vec<Complex64>) -> Gate {
        debug_assert_eq!(matrix.len(), dim * dim);
        let g = Gate { dim, arity, label: label.into(), matrix };
        debug_assert!(g.is_unitary(1e-10), "{} must be unitary", g.label);
        g
    }

    pub fn identity(dim: usize, arity: u8) -> Gate {
        let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            m[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        Gate::new(dim, arity, "I", m)
    }

    pub fn entry(&self, r: usize, c: usize) -> Complex64 {
        self.matrix[r * self.dim + c]
    }

    /// Matrix product `self · rhs` (rhs acts first).
    pub fn mul(&self, rhs: &Gate) -> Gate {
        assert_eq!(self.dim, rhs.dim, "gate dimension mismatch");
        let d = self.dim;
        let mut m = vec![Complex64::new(0.0, 0.0); d * d];
        for r in 0..d {
            for k in 0..d {
                let a = self.matrix[r * d + k];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..d {
                    m[r * d + c] += a * rhs.matrix[k * d + c];
                }
            }
        }
        Gate {
            dim: d,
            arity: self.arity,
            label: format!("{}·{}", self.label, rhs.label),
            matrix: m,
        }
    }

    pub fn dagger(&self) -> Gate {
        let d = self.dim;
        let mut m = vec![Complex64::new(0.0, 0.0); d * d];
        for r in 0..d {
            for c in 0..d {
                m[r * d + c] = self.matrix[c * d + r].conj();
            }
        }
        Gate { dim: d, arity: self.arity, label: format!("{}†", self.label), matrix: m }
    }

    /// Kronecker product; `self` is the first (most significant) factor.
    pub fn kron(&self, rhs: &Gate) -> Gate {
        let (da, db) = (self.dim, rhs.dim);
        let d = da * db;
        let mut m = vec![Complex64::new(0.0, 0.0); d * d];
        for ra in 0..da {
            for ca in 0..da {
                let a = self.matrix[ra * da + ca];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for rb in 0..db {
                    for cb in 0..db {
                        m[(ra * db + rb) * d + (ca * db + cb)] = a * rhs.matrix[rb * db + cb];
                    }
                }
            }
        }
        Gate {
            dim: d,
            arity: self.arity + rhs.arity,
            label: format!("{}⊗{}", self.label, rhs.label),
            matrix: m,
        }
    }

    pub fn scaled(&self, c: Complex64) -> Gate {
        Gate {
            dim: self.dim,
            arity: self.arity,
            label: self.label.clone(),
            matrix: self.matrix.iter().map(|&a| c * a).collect(),
        }
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let d = self.dim;
        for r in 0..d {
            for c in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    acc += self.matrix[r * d + k] * self.matrix[c * d + k].conj();
                }
                let expect = if r == c { 1.0 } else { 0.0 };
                if (acc - expect).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Max-entry distance after normalizing away a global phase, taken from
    /// the first entry of `reference` with modulus above `1e-8`.
    pub fn dist_up_to_phase(&self, reference: &Gate) -> f64 {
        dist_up_to_phase(&self.matrix, &reference.matrix)
    }

    pub fn approx_eq_up_to_phase(&self, reference: &Gate, tol: f64) -> bool {
        self.dim == reference.dim && self.dist_up_to_phase(reference) <= tol
    }
}

/// Phase-normalized max-entry distance between equal-length complex vectors.
pub fn dist_up_to_phase(a: &[Complex64], reference: &[Complex64]) -> f64 {
    assert_eq!(a.len(), reference.len());
    let Some(idx) = reference.iter().position(|e| e.norm() > 1e-8) else {
        return a.iter().map(|e| e.norm()).fold(0.0, f64::max);
    };
    if a[idx].norm() <= 1e-12 {
        return f64::INFINITY;
    }
    let phase = a[idx] / a[idx].norm();
    let ref_phase = reference[idx] / reference[idx].norm();
    let c = phase / ref_phase;
    a.iter()
        .zip(reference.iter())
        .map(|(&x, &y)| (x - c * y).norm())
        .fold(0.0, f64::max)
}

/// `Z(z)X(x)`: `|u⟩ ↦ χ(z(u+x)) |u+x⟩`.
pub fn pauli(x: FieldElement, z: FieldElement, f: &Field) -> Gate {
    let d = f.dim() as usize;
    let mut m = vec![Complex64::new(0.0, 0.0); d * d];
    for u in f.elements() {
        let target = f.add(u, x);
        m[target.index() * d + u.index()] = f.chi(f.mul(z, target));
    }
    Gate::new(d, 1, format!("Z({})X({})", z.0, x.0), m)
}

/// Finite-field Hadamard, entries `χ(uv)/√d`.
pub fn hadamard(f: &Field) -> Gate {
    let d = f.dim() as usize;
    let norm = 1.0 / (d as f64).sqrt();
    let mut m = vec![Complex64::new(0.0, 0.0); d * d];
    for v in f.elements() {
        for u in f.elements() {
            m[v.index() * d + u.index()] = f.chi(f.mul(u, v)) * norm;
        }
    }
    Gate::new(d, 1, "H", m)
}

/// The parameter-free even-characteristic phase gate `S = diag χ₄(u²)`.
pub fn s_even(f: &Field) -> Result<Gate> {
    let ring = GaloisRing::new(f, 2)?;
    let d = f.dim() as usize;
    let mut m = vec![Complex64::new(0.0, 0.0); d * d];
    for u in f.elements() {
        m[u.index() * d + u.index()] = ring.chi_of_power(u, 2);
    }
    Ok(Gate::new(d, 1, "S", m))
}

/// Phase gate `S(λ)`.
///
/// Odd characteristic: `diag χ(2⁻¹ λ u²)`. Even characteristic: `λ = 0`
/// gives the identity, otherwise `M(l⁻¹) S M(l)` with `l = √λ` (squaring is
/// a bijection in `F_{2^m}`).
pub fn phase(lambda: FieldElement, f: &Field) -> Gate {
    let d = f.dim() as usize;
    if f.p() == 2 {
        if lambda == FieldElement::ZERO {
            let mut g = Gate::identity(d, 1);
            g.label = "S(0)".into();
            return g;
        }
        let l = f.sqrt_char2(lambda);
        let linv = f.inv(l).expect("nonzero square root");
        let mut g = mult_gate(linv, f)
            .unwrap()
            .mul(&s_even(f).expect("p=2 always lifts to s=2"))
            .mul(&mult_gate(l, f).unwrap());
        g.label = format!("S({})", lambda.0);
        return g;
    }
    let half = f.inv(f.scalar(2)).expect("2 invertible for odd p");
    let mut m = vec![Complex64::new(0.0, 0.0); d * d];
    for u in f.elements() {
        let e = f.mul(half, f.mul(lambda, f.mul(u, u)));
        m[u.index() * d + u.index()] = f.chi(e);
    }
    Gate::new(d, 1, format!("S({})", lambda.0), m)
}

/// Multiplication permutation `M(λ) = Σ_u |λu⟩⟨u|`, `λ ≠ 0`.
pub fn mult_gate(lambda: FieldElement, f: &Field) -> Result<Gate> {
    if lambda == FieldElement::ZERO {
        return Err(Error::NotInvertible);
    }
    let d = f.dim() as usize;
    let mut m = vec![Complex64::new(0.0, 0.0); d * d];
    for u in f.elements() {
        m[f.mul(lambda, u).index() * d + u.index()] = Complex64::new(1.0, 0.0);
    }
    Ok(Gate::new(d, 1, format!("M({})", lambda.0), m))
}

/// The sequence `[H, S(λ), H, S(λ⁻¹), H, S(λ)]` whose left-to-right product
/// is `M(λ)` up to global phase. For `p = 2` each `S(μ)`, `μ ≠ 0`, is
/// expanded to `[M(l⁻¹), S, M(l)]` with `l = √μ`.
pub fn decompose_mult(lambda: FieldElement, f: &Field) -> Result<Vec<Gate>> {
    let lambda_inv = f.inv(lambda)?;
    let mut seq = Vec::new();
    for mu in [lambda, lambda_inv, lambda] {
        seq.push(hadamard(f));
        if f.p() == 2 {
            let l = f.sqrt_char2(mu);
            seq.push(mult_gate(f.inv(l)?, f)?);
            seq.push(s_even(f)?);
            seq.push(mult_gate(l, f)?);
        } else {
            seq.push(phase(mu, f));
        }
    }
    Ok(seq)
}

/// Ordered product of a gate sequence, leftmost gate applied last.
pub fn sequence_product(seq: &[Gate]) -> Gate {
    let mut acc = seq[0].clone();
    for g in &seq[1..] {
        acc = acc.mul(g);
    }
    acc
}

/// `CZ^power`: diagonal two-qudit gate with entries `χ(uv)^power`.
pub fn cz(f: &Field, power: i64) -> Gate {
    let d = f.dim() as usize;
    let c = f.scalar(power);
    let mut m = vec![Complex64::new(0.0, 0.0); d * d * d * d];
    for u in f.elements() {
        for v in f.elements() {
            let idx = u.index() * d + v.index();
            m[idx * d * d + idx] = f.chi(f.mul(c, f.mul(u, v)));
        }
    }
    Gate::new(d * d, 2, format!("CZ^{power}"), m)
}

/// Arbitrary diagonal gate `diag(e^{iφ_0}, …, e^{iφ_{d−1}})`.
pub fn diag_gate(angles: &[f64]) -> Gate {
    let d = angles.len();
    let mut m = vec![Complex64::new(0.0, 0.0); d * d];
    for (k, &phi) in angles.iter().enumerate() {
        m[k * d + k] = Complex64::from_polar(1.0, phi);
    }
    Gate::new(d, 1, "D", m)
}

/// Generalized T gate: `diag χ₈(k⁴)` for `p = 2`, `diag χ₉(k³)` for
/// `p = 3`, and `diag χ(6⁻¹ k³)` otherwise.
pub fn t_gate(f: &Field) -> Result<Gate> {
    let d = f.dim() as usize;
    let mut m = vec![Complex64::new(0.0, 0.0); d * d];
    match f.p() {
        2 => {
            let ring = GaloisRing::new(f, 3)?;
            for k in f.elements() {
                m[k.index() * d + k.index()] = ring.chi_of_power(k, 4);
            }
        }
        3 => {
            let ring = GaloisRing::new(f, 2)?;
            for k in f.elements() {
                m[k.index() * d + k.index()] = ring.chi_of_power(k, 3);
            }
        }
        _ => {
            let sixth = f.inv(f.scalar(6)).expect("6 invertible for p > 3");
            for k in f.elements() {
                let e = f.mul(sixth, f.pow(k, 3));
                m[k.index() * d + k.index()] = f.chi(e);
            }
        }
    }
    Ok(Gate::new(d, 1, "T", m))
}

/// The diagonal factor picked up when the T gate conjugates `X(x)`:
/// `T X(x) T† = phase · X(x) · rest`, returned as the full right-hand side.
///
/// Even characteristic: `χ₈(x⁴) X(x) M(x⁻¹) S M(x) Z(x) E(x)` where
/// `E(x) = Σ_u χ(u³x + ux³) |u⟩⟨u|` carries the mod-8 binomial cross term
/// `4(u³x + ux³)`; `E(x) = I` exactly when `m = 1` (there `u³ = u`).
pub fn t_conjugation_closed_form(x: FieldElement, f: &Field) -> Result<Gate> {
    let g = match f.p() {
        2 => {
            let ring = GaloisRing::new(f, 3)?;
            let c = ring.chi_of_power(x, 4);
            let xinv = f.inv(x)?;
            let d = f.dim() as usize;
            let mut cross = vec![Complex64::new(0.0, 0.0); d * d];
            for u in f.elements() {
                let t = f.add(f.mul(f.pow(u, 3), x), f.mul(u, f.pow(x, 3)));
                cross[u.index() * d + u.index()] = f.chi(t);
            }
            let cross = Gate::new(d, 1, "E", cross);
            pauli(x, FieldElement::ZERO, f)
                .mul(&mult_gate(xinv, f)?)
                .mul(&s_even(f)?)
                .mul(&mult_gate(x, f)?)
                .mul(&pauli(FieldElement::ZERO, x, f))
                .mul(&cross)
                .scaled(c)
        }
        3 => {
            let ring = GaloisRing::new(f, 2)?;
            let c = ring.chi_of_power(x, 3);
            let two_x = f.mul(f.scalar(2), x);
            pauli(x, FieldElement::ZERO, f)
                .mul(&phase(two_x, f))
                .mul(&pauli(FieldElement::ZERO, f.mul(x, x), f))
                .scaled(c)
        }
        _ => {
            let sixth = f.inv(f.scalar(6)).expect("6 invertible for p > 3");
            let c = f.chi(f.mul(sixth, f.pow(x, 3)));
            let half = f.inv(f.scalar(2)).expect("2 invertible for odd p");
            pauli(x, FieldElement::ZERO, f)
                .mul(&phase(x, f))
                .mul(&pauli(FieldElement::ZERO, f.mul(half, f.mul(x, x)), f))
                .scaled(c)
        }
    };
    Ok(g)
}

/// Integer-ring gate family over `Z_d` for arbitrary `d ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingGateKind {
    X,
    Z,
    H,
    S,
    Cz,
}

/// `τ_d = (−1)^d e^{iπ/d}`, the primitive phase of the ring S gate.
pub fn tau(d: usize) -> Complex64 {
    let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
    Complex64::from_polar(1.0, PI / d as f64) * sign
}

pub fn ring_gate(kind: RingGateKind, d: usize) -> Gate {
    assert!(d >= 2);
    let omega = |e: i64| Complex64::from_polar(1.0, TAU * e as f64 / d as f64);
    match kind {
        RingGateKind::X => {
            let mut m = vec![Complex64::new(0.0, 0.0); d * d];
            for j in 0..d {
                m[((j + 1) % d) * d + j] = Complex64::new(1.0, 0.0);
            }
            Gate::new(d, 1, "X_d", m)
        }
        RingGateKind::Z => {
            let mut m = vec![Complex64::new(0.0, 0.0); d * d];
            for j in 0..d {
                m[j * d + j] = omega(j as i64);
            }
            Gate::new(d, 1, "Z_d", m)
        }
        RingGateKind::H => {
            let norm = 1.0 / (d as f64).sqrt();
            let mut m = vec![Complex64::new(0.0, 0.0); d * d];
            for j in 0..d {
                for k in 0..d {
                    m[j * d + k] = omega((j * k) as i64) * norm;
                }
            }
            Gate::new(d, 1, "H_d", m)
        }
        RingGateKind::S => {
            let t = tau(d);
            let mut m = vec![Complex64::new(0.0, 0.0); d * d];
            for j in 0..d {
                m[j * d + j] = t.powu((j * j) as u32);
            }
            Gate::new(d, 1, "S_d", m)
        }
        RingGateKind::Cz => {
            let dd = d * d;
            let mut m = vec![Complex64::new(0.0, 0.0); dd * dd];
            for j in 0..d {
                for k in 0..d {
                    let idx = j * d + k;
                    m[idx * dd + idx] = omega((j * k) as i64);
                }
            }
            Gate::new(dd, 2, "CZ_d", m)
        }
    }
}

/// If `g` equals `phase · Z(z)X(x)` for some phase of unit modulus, return
/// `(x, z, phase)`; otherwise `None`. Exhaustive over the `d²` Paulis.
pub fn is_pauli_up_to_phase(g: &Gate, f: &Field) -> Option<(FieldElement, FieldElement, Complex64)> {
    if g.arity != 1 || g.dim != f.dim() as usize {
        return None;
    }
    for x in f.elements() {
        for z in f.elements() {
            let candidate = pauli(x, z, f);
            if g.approx_eq_up_to_phase(&candidate, 1e-10) {
                let idx = candidate
                    .matrix
                    .iter()
                    .position(|e| e.norm() > 1e-8)
                    .expect("Pauli has unit entries");
                let phase = g.matrix[idx] / candidate.matrix[idx];
                return Some((x, z, phase / phase.norm()));
            }
        }
    }
    None
}

/// A single-qudit gate is Clifford iff it conjugates every Pauli to a Pauli
/// up to phase. Exhaustive over the `d²` Paulis.
pub fn is_clifford(g: &Gate, f: &Field) -> bool {
    if g.arity != 1 {
        return false;
    }
    let gd = g.dagger();
    for x in f.elements() {
        for z in f.elements() {
            let conj = g.mul(&pauli(x, z, f)).mul(&gd);
            if is_pauli_up_to_phase(&conj, f).is_none() {
                return false;
            }
        }
    }
    true
}

/// Two-qudit Clifford test: conjugation of the generator Paulis
/// `X(e)⊗I, Z(e)⊗I, I⊗X(e), I⊗Z(e)` must land in the two-qudit Pauli group
/// up to phase.
pub fn is_clifford_two_qudit(g: &Gate, f: &Field) -> bool {
    let d = f.dim() as usize;
    if g.arity != 2 || g.dim != d * d {
        return false;
    }
    let gd = g.dagger();
    let id = Gate::identity(d, 1);
    let mut generators = Vec::new();
    // basis elements 1, ξ, ξ², … index p^i
    let mut e = 1u32;
    for _ in 0..f.m() {
        for single in [
            pauli(FieldElement(e), FieldElement::ZERO, f),
            pauli(FieldElement::ZERO, FieldElement(e), f),
        ] {
            generators.push(single.kron(&id));
            generators.push(id.kron(&single));
        }
        e *= f.p();
    }
    for gen in &generators {
        let conj = g.mul(gen).mul(&gd);
        let mut found = false;
        'outer: for x1 in f.elements() {
            for z1 in f.elements() {
                for x2 in f.elements() {
                    for z2 in f.elements() {
                        let cand = pauli(x1, z1, f).kron(&pauli(x2, z2, f));
                        if conj.approx_eq_up_to_phase(&cand, 1e-8) {
                            found = true;
                            break 'outer;
                        }
                    }
                }
            }
        }
        if !found {
            return false;
        }
    }
    true
}
