//! Dense state-vector engine for `n` qudits of dimension `d`, with adaptive
//! projective measurements, forced-outcome branching, and the entanglement
//! diagnostics (Schmidt rank) used by the graph-hiding checks.
//!
//! Site 0 is the least significant digit of the amplitude index.

use num_complex::Complex64;
use rand::Rng;

use crate::galois::{Field, FieldElement};
use crate::gates::Gate;
use crate::{Caps, Error, Result};

/// `|k_Z⟩` as a single-qudit amplitude vector.
pub fn z_basis_state(f: &Field, k: FieldElement) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); f.dim() as usize];
    v[k.index()] = Complex64::new(1.0, 0.0);
    v
}

/// `|k_X⟩ = H|k⟩ = (1/√d) Σ_u χ(ku) |u⟩`.
pub fn x_basis_state(f: &Field, k: FieldElement) -> Vec<Complex64> {
    let d = f.dim() as usize;
    let norm = 1.0 / (d as f64).sqrt();
    f.elements().map(|u| f.chi(f.mul(k, u)) * norm).collect()
}

/// `|k_Y⟩ = S(1)|k_X⟩`.
pub fn y_basis_state(f: &Field, k: FieldElement) -> Vec<Complex64> {
    let s = crate::gates::phase(FieldElement::ONE, f);
    let x = x_basis_state(f, k);
    (0..f.dim() as usize).map(|u| s.entry(u, u) * x[u]).collect()
}

/// A single-qudit measurement basis.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureBasis {
    /// `{D_φ |k_X⟩}` with `φ` the applied rotation angles, length `d`.
    RotatedX(Vec<f64>),
    /// Computational basis `{|k_Z⟩}`.
    Z,
    /// `{S(1)|k_X⟩}`.
    Y,
}

impl MeasureBasis {
    pub fn plain_x(f: &Field) -> MeasureBasis {
        MeasureBasis::RotatedX(vec![0.0; f.dim() as usize])
    }

    /// The `d` orthonormal basis vectors, indexed by outcome.
    pub fn vectors(&self, f: &Field) -> Vec<Vec<Complex64>> {
        let d = f.dim() as usize;
        match self {
            MeasureBasis::RotatedX(angles) => {
                assert_eq!(angles.len(), d, "rotation angle vector must have length d");
                f.elements()
                    .map(|k| {
                        let x = x_basis_state(f, k);
                        (0..d)
                            .map(|u| Complex64::from_polar(1.0, angles[u]) * x[u])
                            .collect()
                    })
                    .collect()
            }
            MeasureBasis::Z => f.elements().map(|k| z_basis_state(f, k)).collect(),
            MeasureBasis::Y => f.elements().map(|k| y_basis_state(f, k)).collect(),
        }
    }
}

/// Dense state of `n` qudits of dimension `d`.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub d: usize,
    pub n: usize,
    pub amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(d: usize, n: usize, caps: &Caps) -> Result<StateVector> {
        let len = checked_len(d, n, caps)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); len];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { d, n, amps })
    }

    pub fn from_amps(d: usize, n: usize, amps: Vec<Complex64>) -> Result<StateVector> {
        if amps.len() != d.pow(n as u32) {
            return Err(Error::ShapeMismatch(format!(
                "{} amplitudes for {} qudits of dimension {}",
                amps.len(),
                n,
                d
            )));
        }
        Ok(StateVector { d, n, amps })
    }

    /// Empty register (a single scalar amplitude 1); grow it with
    /// [`StateVector::append_site`].
    pub fn scalar(d: usize) -> StateVector {
        StateVector { d, n: 0, amps: vec![Complex64::new(1.0, 0.0)] }
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn renormalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            for a in &mut self.amps {
                *a *= inv;
            }
        }
    }

    /// Tensor on a fresh qudit in `single` as the new highest site index.
    pub fn append_site(&mut self, single: &[Complex64], caps: &Caps) -> Result<usize> {
        assert_eq!(single.len(), self.d);
        checked_len(self.d, self.n + 1, caps)?;
        let old = std::mem::take(&mut self.amps);
        let mut amps = vec![Complex64::new(0.0, 0.0); old.len() * self.d];
        for (j, &c) in single.iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            for (i, &a) in old.iter().enumerate() {
                amps[j * old.len() + i] = c * a;
            }
        }
        self.amps = amps;
        self.n += 1;
        Ok(self.n - 1)
    }

    pub fn apply_1(&mut self, g: &Gate, site: usize) -> Result<()> {
        if g.arity != 1 || g.dim != self.d {
            return Err(Error::ShapeMismatch(format!(
                "gate {} (dim {}) on local dimension {}",
                g.label, g.dim, self.d
            )));
        }
        if site >= self.n {
            return Err(Error::SiteOutOfRange(site, self.n));
        }
        let d = self.d;
        let stride = d.pow(site as u32);
        let block = stride * d;
        let mut scratch = vec![Complex64::new(0.0, 0.0); d];
        let total = self.amps.len();
        let mut base = 0;
        while base < total {
            for low in 0..stride {
                for (j, s) in scratch.iter_mut().enumerate() {
                    *s = self.amps[base + j * stride + low];
                }
                for r in 0..d {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (c, s) in scratch.iter().enumerate() {
                        acc += g.matrix[r * d + c] * s;
                    }
                    self.amps[base + r * stride + low] = acc;
                }
            }
            base += block;
        }
        Ok(())
    }

    /// Apply a two-qudit gate; gate index `u·d + v` pairs `u` with `site_a`.
    pub fn apply_2(&mut self, g: &Gate, site_a: usize, site_b: usize) -> Result<()> {
        if g.arity != 2 || g.dim != self.d * self.d {
            return Err(Error::ShapeMismatch(format!(
                "gate {} (dim {}) as two-qudit gate at local dimension {}",
                g.label, g.dim, self.d
            )));
        }
        if site_a >= self.n || site_b >= self.n || site_a == site_b {
            return Err(Error::SiteOutOfRange(site_a.max(site_b), self.n));
        }
        let d = self.d;
        let dd = d * d;
        let (sa, sb) = (d.pow(site_a as u32), d.pow(site_b as u32));
        let mut scratch = vec![Complex64::new(0.0, 0.0); dd];
        // iterate over all settings of the remaining digits
        let rest = self.amps.len() / dd;
        for r in 0..rest {
            // spread r across the digits excluding site_a and site_b
            let mut idx = 0usize;
            let mut rr = r;
            for site in 0..self.n {
                if site == site_a || site == site_b {
                    continue;
                }
                idx += (rr % d) * d.pow(site as u32);
                rr /= d;
            }
            for u in 0..d {
                for v in 0..d {
                    scratch[u * d + v] = self.amps[idx + u * sa + v * sb];
                }
            }
            for u in 0..d {
                for v in 0..d {
                    let row = u * d + v;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for col in 0..dd {
                        acc += g.matrix[row * dd + col] * scratch[col];
                    }
                    self.amps[idx + u * sa + v * sb] = acc;
                }
            }
        }
        Ok(())
    }

    /// Born-rule outcome probabilities for measuring `site` in `basis`.
    pub fn outcome_probabilities(&self, f: &Field, site: usize, basis: &MeasureBasis) -> Vec<f64> {
        let vectors = basis.vectors(f);
        vectors.iter().map(|b| self.projection(site, b).iter().map(|a| a.norm_sqr()).sum()).collect()
    }

    fn projection(&self, site: usize, bvec: &[Complex64]) -> Vec<Complex64> {
        let d = self.d;
        let stride = d.pow(site as u32);
        let rest = self.amps.len() / d;
        let mut out = vec![Complex64::new(0.0, 0.0); rest];
        for (i, o) in out.iter_mut().enumerate() {
            let low = i % stride;
            let high = i / stride;
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &b) in bvec.iter().enumerate() {
                acc += b.conj() * self.amps[high * stride * d + j * stride + low];
            }
            *o = acc;
        }
        out
    }

    /// Measure `site`, sampling the outcome, and remove the site from the
    /// register (higher site indices shift down by one).
    pub fn measure_remove(
        &mut self,
        f: &Field,
        site: usize,
        basis: &MeasureBasis,
        rng: &mut impl Rng,
    ) -> Result<FieldElement> {
        let probs = self.outcome_probabilities(f, site, basis);
        let total: f64 = probs.iter().sum();
        let mut draw = rng.gen::<f64>() * total;
        let mut outcome = probs.len() - 1;
        for (k, &p) in probs.iter().enumerate() {
            if draw < p {
                outcome = k;
                break;
            }
            draw -= p;
        }
        let k = FieldElement(outcome as u32);
        self.force_remove(f, site, basis, k)?;
        Ok(k)
    }

    /// Project `site` onto the chosen outcome and remove it, renormalizing.
    /// Returns the branch probability.
    pub fn force_remove(
        &mut self,
        f: &Field,
        site: usize,
        basis: &MeasureBasis,
        outcome: FieldElement,
    ) -> Result<f64> {
        if site >= self.n {
            return Err(Error::SiteOutOfRange(site, self.n));
        }
        let bvec = &basis.vectors(f)[outcome.index()];
        let projected = self.projection(site, bvec);
        let p: f64 = projected.iter().map(|a| a.norm_sqr()).sum();
        if p < 1e-24 {
            return Err(Error::ZeroProbability(p));
        }
        self.amps = projected;
        self.n -= 1;
        self.renormalize();
        Ok(p)
    }

    /// As [`force_remove`](Self::force_remove) but without renormalizing, so
    /// the amplitude norm tracks the accumulated branch amplitude. Zero
    /// probability is allowed (the branch just dies).
    pub fn project_remove_unnormalized(
        &mut self,
        f: &Field,
        site: usize,
        basis: &MeasureBasis,
        outcome: FieldElement,
    ) -> Result<f64> {
        if site >= self.n {
            return Err(Error::SiteOutOfRange(site, self.n));
        }
        let bvec = &basis.vectors(f)[outcome.index()];
        let projected = self.projection(site, bvec);
        let p: f64 = projected.iter().map(|a| a.norm_sqr()).sum();
        self.amps = projected;
        self.n -= 1;
        Ok(p)
    }

    /// Reduced density matrix of the listed sites (row-major, dimension
    /// `d^k` with the first listed site as the most significant digit,
    /// matching [`Gate::kron`]).
    pub fn reduced_density(&self, sites: &[usize]) -> Vec<Complex64> {
        let d = self.d;
        let k = sites.len();
        let dim = d.pow(k as u32);
        let mut rho = vec![Complex64::new(0.0, 0.0); dim * dim];
        let strides: Vec<usize> = sites.iter().map(|&s| d.pow(s as u32)).collect();
        let env: Vec<usize> = (0..self.n).filter(|s| !sites.contains(s)).collect();
        let env_count = d.pow(env.len() as u32);
        for e in 0..env_count {
            let mut base = 0usize;
            let mut rr = e;
            for &s in &env {
                base += (rr % d) * d.pow(s as u32);
                rr /= d;
            }
            for row in 0..dim {
                let mut ridx = base;
                let mut t = row;
                for &st in strides.iter().rev() {
                    ridx += (t % d) * st;
                    t /= d;
                }
                let ar = self.amps[ridx];
                if ar.norm_sqr() == 0.0 {
                    continue;
                }
                for col in 0..dim {
                    let mut cidx = base;
                    let mut t = col;
                    for &st in strides.iter().rev() {
                        cidx += (t % d) * st;
                        t /= d;
                    }
                    rho[row * dim + col] += ar * self.amps[cidx].conj();
                }
            }
        }
        rho
    }

    /// Schmidt rank across the cut (sites | rest): eigenvalues of the
    /// reduced density matrix above `cutoff`.
    pub fn schmidt_rank(&self, sites: &[usize], cutoff: f64) -> usize {
        let dim = self.d.pow(sites.len() as u32);
        let mut rho = self.reduced_density(sites);
        let eigs = hermitian_eigenvalues(&mut rho, dim);
        eigs.iter().filter(|&&e| e > cutoff).count()
    }
}

fn checked_len(d: usize, n: usize, caps: &Caps) -> Result<usize> {
    let mut len = 1usize;
    for _ in 0..n {
        len = len.checked_mul(d).ok_or(Error::MemoryCap(usize::MAX, caps.max_amps))?;
        if len > caps.max_amps {
            return Err(Error::MemoryCap(len, caps.max_amps));
        }
    }
    Ok(len)
}

/// Eigenvalues of an `n×n` Hermitian matrix by cyclic complex Jacobi
/// rotations. `a` is consumed as scratch.
pub fn hermitian_eigenvalues(a: &mut [Complex64], n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n);
    for _sweep in 0..200 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(a[p * n + q].norm());
            }
        }
        if off < 1e-14 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let r = apq.norm();
                if r < 1e-16 {
                    continue;
                }
                let phi = apq / r;
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let zeta = (aqq - app) / (2.0 * r);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sp = phi * s;
                // A ← G† A G with G[p][p]=G[q][q]=c, G[p][q]=s·phi,
                // G[q][p]=−conj(s·phi)
                for i in 0..n {
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    a[i * n + p] = aip * c - aiq * sp.conj();
                    a[i * n + q] = aip * sp + aiq * c;
                }
                for i in 0..n {
                    let api = a[p * n + i];
                    let aqi = a[q * n + i];
                    a[p * n + i] = api * c - aqi * sp;
                    a[q * n + i] = api * sp.conj() + aqi * c;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i].re).collect()
}

/// `|⟨a|b⟩| / (‖a‖‖b‖)`: 1 iff equal up to global phase. Works for state
/// amplitude vectors and (flattened) matrices alike.
pub fn fidelity_phase_invariant(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {} amplitudes", a.len(), b.len())));
    }
    let inner: Complex64 = a.iter().zip(b.iter()).map(|(&x, &y)| x.conj() * y).sum();
    let na = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((inner.norm() / (na * nb)).min(1.0))
}

/// Convenience: a rotation angle vector implementing `D_φ` equal to a given
/// diagonal gate, as required by rotated-X bases.
pub fn angles_of_diagonal(g: &Gate) -> Vec<f64> {
    (0..g.dim).map(|k| g.entry(k, k).arg()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galois::make_field;
    use crate::gates;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn caps() -> Caps {
        Caps::default()
    }

    fn random_state(f: &Field, n: usize, seed: u64) -> StateVector {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let d = f.dim() as usize;
        let amps: Vec<Complex64> = (0..d.pow(n as u32))
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let mut s = StateVector::from_amps(d, n, amps).unwrap();
        s.renormalize();
        s
    }

    #[test]
    fn two_qubit_cluster_state() {
        let f = make_field(2, 1).unwrap();
        let mut s = StateVector::scalar(2);
        s.append_site(&x_basis_state(&f, FieldElement(0)), &caps()).unwrap();
        s.append_site(&x_basis_state(&f, FieldElement(0)), &caps()).unwrap();
        s.apply_2(&gates::cz(&f, 1), 0, 1).unwrap();
        for (idx, want) in [(0, 0.5), (1, 0.5), (2, 0.5), (3, -0.5)] {
            assert!((s.amps[idx] - Complex64::new(want, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn single_vertex_superposition() {
        let f = make_field(3, 1).unwrap();
        let v = x_basis_state(&f, FieldElement(0));
        let w = 1.0 / 3f64.sqrt();
        for a in v {
            assert!((a - Complex64::new(w, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn apply_shift_and_inverse_pair() {
        let f = make_field(3, 1).unwrap();
        let mut s = StateVector::new(3, 1, &caps()).unwrap();
        s.apply_1(&gates::pauli(FieldElement(1), FieldElement(0), &f), 0).unwrap();
        assert!((s.amps[1] - Complex64::new(1.0, 0.0)).norm() < 1e-12);

        let mut t = random_state(&f, 2, 7);
        let orig = t.clone();
        t.apply_2(&gates::cz(&f, 1), 0, 1).unwrap();
        t.apply_2(&gates::cz(&f, -1), 0, 1).unwrap();
        let fid = fidelity_phase_invariant(&t.amps, &orig.amps).unwrap();
        assert!(fid > 1.0 - 1e-12);
        assert!((t.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenstate_measurements_are_deterministic() {
        let f = make_field(3, 1).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);

        let mut s = StateVector::scalar(3);
        s.append_site(&x_basis_state(&f, FieldElement(0)), &caps()).unwrap();
        let probs = s.outcome_probabilities(&f, 0, &MeasureBasis::plain_x(&f));
        assert!((probs[0] - 1.0).abs() < 1e-12);
        let k = s.measure_remove(&f, 0, &MeasureBasis::plain_x(&f), &mut rng).unwrap();
        assert_eq!(k, FieldElement(0));

        let mut s = StateVector::scalar(3);
        s.append_site(&z_basis_state(&f, FieldElement(1)), &caps()).unwrap();
        let k = s.measure_remove(&f, 0, &MeasureBasis::Z, &mut rng).unwrap();
        assert_eq!(k, FieldElement(1));

        let mut s = StateVector::scalar(3);
        s.append_site(&y_basis_state(&f, FieldElement(2)), &caps()).unwrap();
        let k = s.measure_remove(&f, 0, &MeasureBasis::Y, &mut rng).unwrap();
        assert_eq!(k, FieldElement(2));
    }

    #[test]
    fn forced_zero_probability_is_an_error() {
        let f = make_field(2, 1).unwrap();
        let mut s = StateVector::new(2, 1, &caps()).unwrap(); // |0_Z⟩
        let err = s.force_remove(&f, 0, &MeasureBasis::Z, FieldElement(1));
        assert!(matches!(err, Err(Error::ZeroProbability(_))));
    }

    #[test]
    fn teleportation_step_residual() {
        // measuring qudit 1 of CZ(|ψ⟩ ⊗ |0_X⟩) in the rotated-X basis with
        // outcome k leaves qudit 2 in X(k) H D_φ† |ψ⟩
        let f = make_field(3, 1).unwrap();
        let angles = [0.3, -1.1, 2.4];
        for k in f.elements() {
            for seed in 0..3 {
                let psi = random_state(&f, 1, 100 + seed);
                let mut s = psi.clone();
                s.append_site(&x_basis_state(&f, FieldElement(0)), &caps()).unwrap();
                s.apply_2(&gates::cz(&f, 1), 0, 1).unwrap();
                s.force_remove(&f, 0, &MeasureBasis::RotatedX(angles.to_vec()), k).unwrap();

                let mut expect = psi.clone();
                expect.apply_1(&gates::diag_gate(&angles).dagger(), 0).unwrap();
                expect.apply_1(&gates::hadamard(&f), 0).unwrap();
                expect.apply_1(&gates::pauli(k, FieldElement::ZERO, &f), 0).unwrap();

                let fid = fidelity_phase_invariant(&s.amps, &expect.amps).unwrap();
                assert!(fid > 1.0 - 1e-10, "k={} fid={fid}", k.0);
            }
        }
    }

    #[test]
    fn branch_probabilities_sum_to_one() {
        let f = make_field(3, 1).unwrap();
        let s = random_state(&f, 3, 42);
        for basis in [MeasureBasis::plain_x(&f), MeasureBasis::Z, MeasureBasis::Y] {
            let probs = s.outcome_probabilities(&f, 1, &basis);
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn measurement_statistics_uniform() {
        let f = make_field(3, 1).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(2024);
        let shots = 10_000usize;
        let mut counts = [0usize; 3];
        for _ in 0..shots {
            let mut s = StateVector::scalar(3);
            s.append_site(&x_basis_state(&f, FieldElement(0)), &caps()).unwrap();
            let k = s.measure_remove(&f, 0, &MeasureBasis::Z, &mut rng).unwrap();
            counts[k.index()] += 1;
        }
        let p = 1.0 / 3.0;
        let se = (p * (1.0 - p) / shots as f64).sqrt();
        for &c in &counts {
            let freq = c as f64 / shots as f64;
            assert!((freq - p).abs() < 4.0 * se, "freq {freq} vs {p} (se {se})");
        }
    }

    #[test]
    fn schmidt_rank_detects_entanglement() {
        for (p, m) in [(2u32, 1u32), (3, 1), (5, 1)] {
            let f = make_field(p, m).unwrap();
            let d = f.dim() as usize;
            // product state
            let mut s = StateVector::scalar(d);
            s.append_site(&x_basis_state(&f, FieldElement(0)), &caps()).unwrap();
            s.append_site(&z_basis_state(&f, FieldElement(1)), &caps()).unwrap();
            assert_eq!(s.schmidt_rank(&[0], 1e-10), 1);
            // CZ on |0_X⟩|0_X⟩ is maximally entangling
            let mut s = StateVector::scalar(d);
            s.append_site(&x_basis_state(&f, FieldElement(0)), &caps()).unwrap();
            s.append_site(&x_basis_state(&f, FieldElement(0)), &caps()).unwrap();
            s.apply_2(&gates::cz(&f, 1), 0, 1).unwrap();
            assert_eq!(s.schmidt_rank(&[0], 1e-10), d);
        }
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        // diag(1,2,3) conjugated by a random unitary-ish rotation built from
        // gate products keeps its spectrum
        let f = make_field(3, 1).unwrap();
        let u = gates::hadamard(&f).mul(&gates::phase(FieldElement(1), &f));
        let mut a = vec![Complex64::new(0.0, 0.0); 9];
        for (i, lam) in [1.0, 2.0, 3.0].iter().enumerate() {
            for r in 0..3 {
                for c in 0..3 {
                    a[r * 3 + c] += u.entry(r, i) * *lam * u.entry(c, i).conj();
                }
            }
        }
        let mut eigs = hermitian_eigenvalues(&mut a, 3);
        eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (e, want) in eigs.iter().zip([1.0, 2.0, 3.0]) {
            assert!((e - want).abs() < 1e-10);
        }
    }

    #[test]
    fn fidelity_examples() {
        let f = make_field(2, 1).unwrap();
        let psi = random_state(&f, 2, 5);
        let rotated: Vec<Complex64> =
            psi.amps.iter().map(|&a| a * Complex64::from_polar(1.0, 1.234)).collect();
        assert!((fidelity_phase_invariant(&psi.amps, &rotated).unwrap() - 1.0).abs() < 1e-12);

        let h = gates::hadamard(&f);
        let x = gates::pauli(FieldElement(1), FieldElement(0), &f);
        let fid = fidelity_phase_invariant(&h.matrix, &x.matrix).unwrap();
        assert!((fid - 1.0 / 2f64.sqrt()).abs() < 1e-12);

        assert!(fidelity_phase_invariant(&h.matrix, &[Complex64::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn memory_cap_enforced() {
        let caps = Caps { max_amps: 100, max_branches: 10 };
        assert!(matches!(StateVector::new(3, 5, &caps), Err(Error::MemoryCap(_, _))));
        assert!(StateVector::new(3, 4, &caps).is_ok());
    }
}
