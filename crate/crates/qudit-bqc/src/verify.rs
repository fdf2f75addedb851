//! Named invariant suites: `algebra`, `gadgets`, `mirror`, `blindness`.
//!
//! Each suite runs a battery of checks over a dimension sweep and returns a
//! [`SuiteReport`] with per-check tolerances and timings. A check that hits
//! a resource cap or other error is reported as failed, never panicked.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::blind::{self, Program, TrapCheck};
use crate::galois::{make_field, Field, FieldElement, GaloisRing};
use crate::gates::{self, Gate};
use crate::mbqc::{
    self, check_branches, frame_corrected, hair_equivalence_check,
    mirror_layer_check, open_ended_swap_check, steered_chain_check, BrickKind, DecoratedOp,
    RngDriver,
};
use crate::resources::{self, VertexInit};
use crate::sim;
use crate::{Caps, Error, Result};

/// `(p, m)` pairs giving d ∈ {2, 3, 4, 5, 8, 9}: every character branch and
/// both phase-gate branches.
pub const DEFAULT_SWEEP: [(u32, u32); 6] = [(2, 1), (3, 1), (2, 2), (5, 1), (2, 3), (3, 2)];

pub const SUITES: [&str; 4] = ["algebra", "gadgets", "mirror", "blindness"];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub millis: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
    pub elapsed_ms: u64,
}

/// Suite configuration. `fields = None` selects each suite's default sweep.
#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub fields: Option<Vec<Field>>,
    pub seed: u64,
    pub caps: Caps,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { fields: None, seed: 7, caps: Caps::default() }
    }
}

fn sweep_fields(cfg: &VerifyConfig, default: &[(u32, u32)]) -> Result<Vec<Field>> {
    match &cfg.fields {
        Some(fs) => Ok(fs.clone()),
        None => default.iter().map(|&(p, m)| make_field(p, m)).collect(),
    }
}

fn push_check(
    checks: &mut Vec<CheckResult>,
    name: String,
    tolerance: Option<f64>,
    body: impl FnOnce() -> Result<String>,
) {
    let start = Instant::now();
    let (passed, detail) = match body() {
        Ok(detail) => (true, detail),
        Err(e) => (false, format!("{e}")),
    };
    checks.push(CheckResult {
        name,
        passed,
        detail,
        tolerance,
        millis: start.elapsed().as_millis() as u64,
    });
}

pub fn run_suite(suite: &str, cfg: &VerifyConfig) -> Result<SuiteReport> {
    let start = Instant::now();
    let checks = match suite {
        "algebra" => suite_algebra(cfg)?,
        "gadgets" => suite_gadgets(cfg)?,
        "mirror" => suite_mirror(cfg)?,
        "blindness" => suite_blindness(cfg)?,
        other => return Err(Error::Config(format!("unknown suite {other}"))),
    };
    let passed = checks.iter().all(|c| c.passed);
    Ok(SuiteReport {
        suite: suite.to_string(),
        checks,
        passed,
        elapsed_ms: start.elapsed().as_millis() as u64,
    })
}

// ---------------------------------------------------------------------------
// algebra

fn max_entry_dist(a: &Gate, b: &Gate) -> f64 {
    a.matrix.iter().zip(&b.matrix).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn field_axioms(f: &Field) -> Result<String> {
    let zero = FieldElement::ZERO;
    let one = FieldElement::ONE;
    for a in f.elements() {
        if f.add(a, zero) != a || f.mul(a, one) != a || f.add(a, f.neg(a)) != zero {
            return Err(Error::Protocol(format!("identity/negation fails at {}", a.0)));
        }
        if a != zero && f.mul(a, f.inv(a)?) != one {
            return Err(Error::Protocol(format!("inverse fails at {}", a.0)));
        }
        for b in f.elements() {
            if f.add(a, b) != f.add(b, a) || f.mul(a, b) != f.mul(b, a) {
                return Err(Error::Protocol(format!("commutativity fails at {},{}", a.0, b.0)));
            }
            for c in f.elements() {
                let assoc_add = f.add(f.add(a, b), c) == f.add(a, f.add(b, c));
                let assoc_mul = f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c));
                let distrib = f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c));
                if !(assoc_add && assoc_mul && distrib) {
                    return Err(Error::Protocol(format!(
                        "ring axiom fails at {},{},{}",
                        a.0, b.0, c.0
                    )));
                }
            }
        }
    }
    Ok(format!("{} triples checked", (f.dim() as u64).pow(3)))
}

fn trace_linearity(f: &Field) -> Result<String> {
    let p = f.p();
    for a in f.elements() {
        for b in f.elements() {
            let lhs = f.trace(f.add(a, b));
            let rhs = (f.trace(a) + f.trace(b)) % p;
            if lhs != rhs {
                return Err(Error::Protocol(format!("trace additivity fails at {},{}", a.0, b.0)));
            }
        }
        for c in 0..p {
            let lhs = f.trace(f.mul(f.scalar(c as i64), a));
            let rhs = (c * f.trace(a)) % p;
            if lhs != rhs {
                return Err(Error::Protocol(format!(
                    "trace prime-linearity fails at c={c}, a={}",
                    a.0
                )));
            }
        }
    }
    Ok(format!("{} pairs checked", (f.dim() as u64).pow(2)))
}

fn character_multiplicativity(f: &Field, tol: f64) -> Result<String> {
    let mut worst = 0.0f64;
    for a in f.elements() {
        for b in f.elements() {
            let err = (f.chi(f.add(a, b)) - f.chi(a) * f.chi(b)).norm();
            worst = worst.max(err);
        }
    }
    if worst > tol {
        return Err(Error::Protocol(format!("worst deviation {worst:e}")));
    }
    Ok(format!("worst deviation {worst:.2e}"))
}

/// The conjugation relations used throughout the byproduct algebra,
/// exhaustive in all field parameters.
fn conjugation_relations(f: &Field, tol: f64) -> Result<String> {
    let d = f.dim() as usize;
    let h = gates::hadamard(&f.clone());
    let id = Gate::identity(d, 1);
    let mut count = 0u64;
    let mut demand = |dist: f64, what: &str| -> Result<()> {
        count += 1;
        if dist > tol {
            Err(Error::Protocol(format!("{what}: deviation {dist:e}")))
        } else {
            Ok(())
        }
    };
    for x in f.elements() {
        let xg = gates::pauli(x, FieldElement::ZERO, f);
        let zg = gates::pauli(FieldElement::ZERO, x, f);
        // H Z(z) H† = X(−z) and H X(x) H† = Z(x)
        demand(
            max_entry_dist(
                &h.mul(&zg).mul(&h.dagger()),
                &gates::pauli(f.neg(x), FieldElement::ZERO, f),
            ),
            "H Z H†",
        )?;
        demand(max_entry_dist(&h.mul(&xg).mul(&h.dagger()), &zg), "H X H†")?;
        // phase-gate conjugation, per characteristic branch
        if f.p() == 2 {
            let s = gates::s_even(f)?;
            let ring = GaloisRing::new(f, 2)?;
            let rhs = xg.mul(&zg).scaled(ring.chi_of_power(x, 2));
            demand(max_entry_dist(&s.mul(&xg).mul(&s.dagger()), &rhs), "S X S†")?;
        } else {
            let half = f.inv(f.scalar(2))?;
            for lambda in f.elements() {
                let s = gates::phase(lambda, f);
                let factor = f.chi(f.mul(half, f.mul(lambda, f.mul(x, x))));
                let rhs = xg
                    .mul(&gates::pauli(FieldElement::ZERO, f.mul(lambda, x), f))
                    .scaled(factor);
                demand(max_entry_dist(&s.mul(&xg).mul(&s.dagger()), &rhs), "S(λ) X S(λ)†")?;
            }
        }
        // CZ (X(x) ⊗ I) CZ† = X(x) ⊗ Z(x)
        let czg = gates::cz(f, 1);
        demand(
            max_entry_dist(&czg.mul(&xg.kron(&id)).mul(&czg.dagger()), &xg.kron(&zg)),
            "CZ (X ⊗ I) CZ†",
        )?;
        // M(λ): Z(z) ↦ Z(λ⁻¹ z), X(x) ↦ X(λ x)
        for lambda in f.elements().skip(1) {
            let mg = gates::mult_gate(lambda, f)?;
            let linv = f.inv(lambda)?;
            demand(
                max_entry_dist(
                    &mg.mul(&zg).mul(&mg.dagger()),
                    &gates::pauli(FieldElement::ZERO, f.mul(linv, x), f),
                ),
                "M Z M†",
            )?;
            demand(
                max_entry_dist(
                    &mg.mul(&xg).mul(&mg.dagger()),
                    &gates::pauli(f.mul(lambda, x), FieldElement::ZERO, f),
                ),
                "M X M†",
            )?;
        }
    }
    Ok(format!("{count} relations checked"))
}

fn low_dimension_anchors(tol: f64) -> Result<String> {
    use std::f64::consts::{PI, TAU};
    let f2 = make_field(2, 1)?;
    let s2 = gates::s_even(&f2)?;
    let s_ref = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 1.0),
    ];
    let mut worst = s2.matrix.iter().zip(&s_ref).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);

    let t2 = gates::t_gate(&f2)?;
    let t_ref = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::from_polar(1.0, PI / 4.0),
    ];
    worst = t2.matrix.iter().zip(&t_ref).map(|(a, b)| (a - b).norm()).fold(worst, f64::max);

    let f3 = make_field(3, 1)?;
    let t3 = gates::t_gate(&f3)?;
    let w9 = Complex64::from_polar(1.0, TAU / 9.0);
    let t3_ref = [Complex64::new(1.0, 0.0), w9, w9.conj()];
    for (k, r) in t3_ref.iter().enumerate() {
        worst = worst.max((t3.entry(k, k) - r).norm());
    }
    if worst > tol {
        return Err(Error::Protocol(format!("worst deviation {worst:e}")));
    }
    Ok(format!("S₂, T₂, T₃ anchored; worst deviation {worst:.2e}"))
}

fn t_gate_closed_form(f: &Field, tol: f64) -> Result<String> {
    let t = gates::t_gate(f)?;
    let mut worst = 0.0f64;
    for x in f.elements().skip(1) {
        let conj = t.mul(&gates::pauli(x, FieldElement::ZERO, f)).mul(&t.dagger());
        if gates::is_pauli_up_to_phase(&conj, f).is_some() {
            return Err(Error::Protocol(format!("T X({}) T† is a Pauli", x.0)));
        }
        let closed = gates::t_conjugation_closed_form(x, f)?;
        worst = worst.max(max_entry_dist(&conj, &closed));
    }
    if worst > tol {
        return Err(Error::Protocol(format!("worst deviation {worst:e}")));
    }
    Ok(format!("{} conjugations non-Pauli, worst deviation {worst:.2e}", f.dim() - 1))
}

fn mult_decomposition(f: &Field, tol: f64) -> Result<String> {
    let mut worst = 0.0f64;
    for lambda in f.elements().skip(1) {
        let seq = gates::decompose_mult(lambda, f)?;
        let product = gates::sequence_product(&seq);
        let target = gates::mult_gate(lambda, f)?;
        worst = worst.max(gates::dist_up_to_phase(&product.matrix, &target.matrix));
    }
    if worst > tol {
        return Err(Error::Protocol(format!("worst deviation {worst:e}")));
    }
    Ok(format!("{} decompositions, worst deviation {worst:.2e}", f.dim() - 1))
}

fn suite_algebra(cfg: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let fields = sweep_fields(cfg, &DEFAULT_SWEEP)?;
    let mut checks = Vec::new();
    for f in &fields {
        let d = f.dim();
        push_check(&mut checks, format!("field-axioms d={d}"), None, || field_axioms(f));
        push_check(&mut checks, format!("trace-linearity d={d}"), None, || trace_linearity(f));
        push_check(&mut checks, format!("character-multiplicativity d={d}"), Some(1e-12), || {
            character_multiplicativity(f, 1e-12)
        });
        push_check(&mut checks, format!("conjugation-relations d={d}"), Some(1e-12), || {
            conjugation_relations(f, 1e-12)
        });
        push_check(&mut checks, format!("t-gate-closed-form d={d}"), Some(1e-10), || {
            t_gate_closed_form(f, 1e-10)
        });
        push_check(&mut checks, format!("mult-gate-decomposition d={d}"), Some(1e-10), || {
            mult_decomposition(f, 1e-10)
        });
    }
    push_check(&mut checks, "low-dimension-anchors".into(), Some(1e-12), || {
        low_dimension_anchors(1e-12)
    });
    Ok(checks)
}

// ---------------------------------------------------------------------------
// gadgets

fn brick_kinds(d: usize) -> Vec<BrickKind> {
    let mut angles = vec![0.0; d];
    for (u, a) in angles.iter_mut().enumerate() {
        *a = 0.7 * u as f64;
    }
    vec![
        BrickKind::Identity,
        BrickKind::Diag { angles, wire: 0 },
        BrickKind::Hadamard { wire: 0 },
        BrickKind::Hadamard { wire: 1 },
        BrickKind::Cx,
    ]
}

fn brickwork_exhaustive(f: &Field, caps: &Caps) -> Result<String> {
    let d = f.dim() as usize;
    let spec = resources::build_brickwork(2, 1, f, false)?;
    let inputs = [spec.at(0, 0).unwrap(), spec.at(1, 0).unwrap()];
    let mut n_branches = 0usize;
    for kind in brick_kinds(d) {
        let pattern = mbqc::pattern_brickwork(std::slice::from_ref(&kind), &spec, 0)?;
        n_branches = d.pow(pattern.raw_measurement_count() as u32);
        check_branches(&spec, &pattern, &inputs, &kind.target(f), 1e-9, caps)?;
    }
    Ok(format!("5 gadgets, {n_branches} branches each"))
}

/// Sampled variant for dimensions where exhaustive enumeration is out of
/// reach: random product inputs through random forced branches.
fn brickwork_sampled(f: &Field, seed: u64, runs: usize, caps: &Caps) -> Result<String> {
    let d = f.dim() as usize;
    let spec = resources::build_brickwork(2, 1, f, false)?;
    let (i0, i1) = (spec.at(0, 0).unwrap(), spec.at(1, 0).unwrap());
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let random_state = |rng: &mut ChaCha12Rng| -> Vec<Complex64> {
        let amps: Vec<Complex64> =
            (0..d).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.into_iter().map(|a| a / norm).collect()
    };
    for kind in brick_kinds(d) {
        let pattern = mbqc::pattern_brickwork(std::slice::from_ref(&kind), &spec, 0)?;
        let target = kind.target(f);
        for run in 0..runs {
            let mut s = spec.clone();
            let (psi0, psi1) = (random_state(&mut rng), random_state(&mut rng));
            s.vertices[i0] = VertexInit::Custom(psi0.clone());
            s.vertices[i1] = VertexInit::Custom(psi1.clone());
            let mut driver = RngDriver { rng: &mut rng };
            let out = mbqc::execute_pattern(&s, &pattern, &mut driver, caps)?;
            let corrected = frame_corrected(&out.residual, &out.frames, &[0, 1], f);
            // expected: target applied to ψ0 ⊗ ψ1, wire 0 most significant
            let mut input = vec![Complex64::new(0.0, 0.0); d * d];
            for a in 0..d {
                for b in 0..d {
                    input[a * d + b] = psi0[a] * psi1[b];
                }
            }
            let mut expect = vec![Complex64::new(0.0, 0.0); d * d];
            for (r, e) in expect.iter_mut().enumerate() {
                for (c, i) in input.iter().enumerate() {
                    *e += target.matrix[r * d * d + c] * i;
                }
            }
            let fid = sim::fidelity_phase_invariant(&corrected, &expect)?;
            if fid < 1.0 - 1e-9 {
                return Err(Error::Protocol(format!(
                    "{} run {run}: fidelity {fid}",
                    target.label
                )));
            }
        }
    }
    Ok(format!("5 gadgets × {runs} seeded runs"))
}

fn hair_battery(f: &Field, seed: u64, seeds: usize) -> Result<String> {
    for s in 0..seeds as u64 {
        hair_equivalence_check(f, seed.wrapping_add(s))?;
    }
    Ok(format!("{seeds} random 3-neighbor stars, X and Z gadgets, all branches"))
}

fn graph_hiding(f: &Field, seed: u64, caps: &Caps) -> Result<String> {
    let d = f.dim() as usize;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut base = resources::ResourceSpec::new(f);
    let u = base.add_vertex(VertexInit::X(FieldElement::ZERO));
    let v = base.add_vertex(VertexInit::X(FieldElement::ZERO));
    for want in [true, false] {
        let (spec, _) = resources::hide_graph(&base, &[(u, v)], &[want], &mut rng)?;
        let state = spec.init_state(caps)?;
        let rank = state.schmidt_rank(&[u], 1e-10);
        let expect = if want { d } else { 1 };
        if rank != expect {
            return Err(Error::Protocol(format!(
                "bridge wanted={want}: Schmidt rank {rank}, expected {expect}"
            )));
        }
    }
    Ok(format!("bridged cut rank {d}, severed cut rank 1"))
}

fn ge_intrinsic_clifford(f: &Field) -> Result<String> {
    let mut count = 0;
    for n in f.elements().skip(1) {
        let g = resources::ge_gate(n, f)?;
        let intrinsic = resources::intrinsic_gate(&g, f)?;
        if !gates::is_clifford(&intrinsic, f) {
            return Err(Error::Protocol(format!("intrinsic of GE({}) is not Clifford", n.0)));
        }
        count += 1;
    }
    Ok(format!("{count} intrinsic gates certified Clifford"))
}

fn suite_gadgets(cfg: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let fields = sweep_fields(cfg, &[(2, 1), (3, 1), (5, 1)])?;
    let mut checks = Vec::new();
    for f in &fields {
        let d = f.dim();
        if d <= 3 {
            push_check(&mut checks, format!("brickwork-exhaustive d={d}"), Some(1e-9), || {
                brickwork_exhaustive(f, &cfg.caps)
            });
        } else {
            push_check(&mut checks, format!("brickwork-sampled d={d}"), Some(1e-9), || {
                brickwork_sampled(f, cfg.seed, 200, &cfg.caps)
            });
        }
        push_check(&mut checks, format!("hair-gadgets d={d}"), Some(1e-9), || {
            hair_battery(f, cfg.seed.wrapping_mul(31).wrapping_add(d as u64), 20)
        });
        push_check(&mut checks, format!("graph-hiding d={d}"), Some(1e-10), || {
            graph_hiding(f, cfg.seed, &cfg.caps)
        });
        push_check(&mut checks, format!("ge-intrinsic-clifford d={d}"), None, || {
            ge_intrinsic_clifford(f)
        });
    }
    Ok(checks)
}

// ---------------------------------------------------------------------------
// mirror

fn suite_mirror(cfg: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let fields = sweep_fields(cfg, &[(2, 1), (3, 1), (5, 1)])?;
    let mut checks = Vec::new();
    for f in &fields {
        let d = f.dim() as usize;
        for n in 2..=5usize {
            if d.pow(n as u32) > 10_000 {
                continue;
            }
            push_check(&mut checks, format!("mirror-operator d={d} n={n}"), Some(1e-10), || {
                if mirror_layer_check(f, n)? {
                    Ok(format!(
                        "C^{} equals wire reversal{}",
                        n + 1,
                        if n % 2 == 1 { " with M(−1) per wire" } else { "" }
                    ))
                } else {
                    Err(Error::Protocol("operator mismatch".into()))
                }
            });
        }
        push_check(&mut checks, format!("swap-full-lattice d={d}"), Some(1e-9), || {
            open_ended_swap_check(f, cfg.seed, 5)?;
            Ok("5 random product inputs swapped".into())
        });
        for n in 3..=4usize {
            for m in 2..=n {
                push_check(
                    &mut checks,
                    format!("steered-gate d={d} n={n} m={m}"),
                    Some(1e-10),
                    || {
                        for lambda in f.elements().skip(1) {
                            let angles =
                                sim::angles_of_diagonal(&gates::phase(lambda, f));
                            if !steered_chain_check(f, n, m, &angles)? {
                                return Err(Error::Protocol(format!(
                                    "closed form mismatch at λ={}",
                                    lambda.0
                                )));
                            }
                        }
                        // one off-grid diagonal as well
                        let angles: Vec<f64> = (0..d).map(|u| 0.3 + 0.9 * u as f64).collect();
                        if !steered_chain_check(f, n, m, &angles)? {
                            return Err(Error::Protocol("closed form mismatch (generic D)".into()));
                        }
                        Ok(format!("{} phase diagonals plus one generic", d - 1))
                    },
                );
            }
        }
        push_check(&mut checks, format!("steered-gate-clifford d={d}"), None, || {
            for lambda in f.elements().skip(1) {
                let angles = sim::angles_of_diagonal(&gates::phase(lambda, f));
                for parity in [false, true] {
                    let g = mbqc::steered_gate_closed_form(&angles, parity, f);
                    if !gates::is_clifford_two_qudit(&g, f) {
                        return Err(Error::Protocol(format!(
                            "steered S({}) gate (parity {parity}) is not Clifford",
                            lambda.0
                        )));
                    }
                }
            }
            Ok(format!("{} phase diagonals, both parities", d - 1))
        });
    }
    Ok(checks)
}

// ---------------------------------------------------------------------------
// blindness

fn blinded_equals_unblinded(f: &Field, seed: u64, programs: usize, caps: &Caps) -> Result<String> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for arch in blind::ARCHITECTURES {
        for i in 0..programs {
            let program = blind::random_program(arch, f, &mut rng)?;
            let run_seed = rng.gen();
            let blinded = blind::run_protocol(&program, f, run_seed, true, caps)?;
            let plain = blind::run_protocol(&program, f, run_seed, false, caps)?;
            if blinded.corrected != plain.corrected {
                return Err(Error::Protocol(format!(
                    "{arch} program {i}: corrected outputs differ"
                )));
            }
            if blinded.true_outcomes != plain.true_outcomes {
                return Err(Error::Protocol(format!("{arch} program {i}: outcome streams differ")));
            }
        }
    }
    Ok(format!("{programs} programs per architecture, exact agreement"))
}

fn trap_detection(f: &Field, seed: u64, caps: &Caps) -> Result<String> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for arch in blind::ARCHITECTURES {
        let mut program = blind::random_program(arch, f, &mut rng)?;
        blind::insert_traps(&mut program, 1, f, &mut rng);
        let run = blind::run_protocol(&program, f, rng.gen(), true, caps)?;
        if !run.trap_ok {
            return Err(Error::Protocol(format!("{arch}: honest run rejected")));
        }
        let job = blind::build_job(&program, f)?;
        if job.trap_checks.is_empty() {
            return Err(Error::Protocol(format!("{arch}: no trap checks generated")));
        }
        // any single deviation on trap data must be caught
        for check in &job.trap_checks {
            let mut corrected = run.corrected.clone();
            let mut trues = run.true_outcomes.clone();
            match check {
                TrapCheck::Output { output_index, .. } => {
                    corrected[*output_index] = f.add(corrected[*output_index], FieldElement::ONE);
                }
                TrapCheck::Relation { terms } => {
                    let idx = terms[0].0;
                    trues[idx] = f.add(trues[idx], FieldElement::ONE);
                }
            }
            if blind::verify_traps(&corrected, &trues, &job.trap_checks, f) {
                return Err(Error::Protocol(format!("{arch}: trap tamper undetected")));
            }
        }
    }
    Ok("honest runs accepted, every trap tamper detected".into())
}

fn audit_programs(f: &Field) -> (Program, Program) {
    let set = blind::angle_set(f);
    let d = f.dim() as usize;
    let angles = |k: u32| -> Vec<f64> {
        (0..d).map(|u| if u == 0 { 0.0 } else { set.values[(k as usize * u) % set.len as usize] }).collect()
    };
    let a = Program::Decorated {
        len: 3,
        ops: vec![
            DecoratedOp::SimX { angles: angles(1) },
            DecoratedOp::SimX { angles: angles(2) },
        ],
        input: FieldElement::ZERO,
        traps: 0,
    };
    let b = Program::Decorated {
        len: 3,
        ops: vec![
            DecoratedOp::SimX { angles: angles(3) },
            DecoratedOp::SimX { angles: angles(1) },
        ],
        input: FieldElement::ONE,
        traps: 0,
    };
    (a, b)
}

fn audit_battery(f: &Field, seed: u64, runs: usize, caps: &Caps) -> Result<String> {
    let (prog_a, prog_b) = audit_programs(f);
    let per_side = runs / 2;
    let mut ta = Vec::with_capacity(per_side);
    let mut tb = Vec::with_capacity(per_side);
    for i in 0..per_side as u64 {
        ta.push(blind::run_protocol(&prog_a, f, seed ^ (2 * i), true, caps)?.transcript);
        tb.push(blind::run_protocol(&prog_b, f, seed ^ (2 * i + 1), true, caps)?.transcript);
    }
    let report = blind::blindness_audit(&ta, &tb, f, 0.01)?;
    if !report.passed() {
        return Err(Error::Protocol(format!(
            "audit flagged {} cells, min p = {:.4}",
            report.flagged.len(),
            report.min_p
        )));
    }
    Ok(format!(
        "{} + {} transcripts, {} cells, min p = {:.4}",
        per_side,
        per_side,
        report.cells.len(),
        report.min_p
    ))
}

fn suite_blindness(cfg: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let fields = sweep_fields(cfg, &[(2, 1), (3, 1)])?;
    let mut checks = Vec::new();
    for f in &fields {
        let d = f.dim();
        push_check(&mut checks, format!("blinded-equals-unblinded d={d}"), None, || {
            blinded_equals_unblinded(f, cfg.seed.wrapping_add(d as u64), 50, &cfg.caps)
        });
        push_check(&mut checks, format!("trap-detection d={d}"), None, || {
            trap_detection(f, cfg.seed.wrapping_add(100 + d as u64), &cfg.caps)
        });
    }
    // the audit itself runs at d = 2 over 10⁴ transcripts
    if let Some(f) = fields.first() {
        push_check(&mut checks, format!("blindness-audit d={}", f.dim()), Some(0.01), || {
            audit_battery(f, cfg.seed, 10_000, &cfg.caps)
        });
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(run_suite("bogus", &VerifyConfig::default()).is_err());
    }

    #[test]
    fn algebra_suite_passes_on_one_field() {
        let cfg = VerifyConfig {
            fields: Some(vec![make_field(3, 1).unwrap()]),
            ..VerifyConfig::default()
        };
        let report = run_suite("algebra", &cfg).unwrap();
        assert!(report.passed, "{:?}", report.checks.iter().find(|c| !c.passed));
        assert!(report.checks.iter().all(|c| !c.detail.is_empty()));
    }

    #[test]
    fn gadget_suite_reports_branch_counts_at_d3() {
        let cfg = VerifyConfig {
            fields: Some(vec![make_field(3, 1).unwrap()]),
            ..VerifyConfig::default()
        };
        let report = run_suite("gadgets", &cfg).unwrap();
        assert!(report.passed, "{:?}", report.checks.iter().find(|c| !c.passed));
        let ex = report.checks.iter().find(|c| c.name.starts_with("brickwork")).unwrap();
        assert!(ex.detail.contains("6561 branches"), "{}", ex.detail);
    }

    #[test]
    fn report_serializes() {
        let cfg = VerifyConfig {
            fields: Some(vec![make_field(2, 1).unwrap()]),
            ..VerifyConfig::default()
        };
        let report = run_suite("algebra", &cfg).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let back: SuiteReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.checks.len(), report.checks.len());
        assert!(back.passed);
    }
}
