//! Adaptive measurement-pattern execution with Pauli byproduct frames, the
//! brickwork / open-ended / decorated pattern library, and the brute-force
//! branch-enumeration oracle that certifies every gadget.
//!
//! Execution is lazy: a vertex is appended to the live state only when it is
//! first needed, its incident edges are applied as both endpoints become
//! live, and measured sites are contracted away. This keeps the live state
//! small even on long resource chains.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::galois::{Field, FieldElement};
use crate::gates::{self, Gate};
use crate::resources::ResourceSpec;
use crate::sim::{self, MeasureBasis, StateVector};
use crate::{Caps, Error, Result};

/// Pauli byproduct `X(x)Z(z)` accumulated on one logical wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Frame {
    pub x: FieldElement,
    pub z: FieldElement,
}

impl Frame {
    /// The byproduct as a gate, `X(x)Z(z)` up to phase.
    pub fn gate(&self, f: &Field) -> Gate {
        gates::pauli(self.x, self.z, f)
    }
}

/// One rotated-X teleportation measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Instr {
    pub vertex: usize,
    /// Logical wire whose frame the outcome updates, if any.
    pub wire: Option<usize>,
    /// Angles of the diagonal gate this step applies (the measured basis is
    /// rotated by its inverse).
    pub applied: Vec<f64>,
    /// Permute the applied angles by the wire frame's X part first.
    pub adapt: bool,
}

/// A pattern step. `FrameCz` is purely classical bookkeeping for a vertical
/// edge whose column the information flow has just reached; the physical
/// entangler is applied by the lazy runner independently.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Measure(Instr),
    FrameCz { wire_a: usize, wire_b: usize, power: i64 },
    /// Hair-simulated rotated-X measurement: target with the applied
    /// diagonal, then both hair qudits in plain X; the effective outcome is
    /// `k₁ − k₃`.
    SimX { target: usize, h1: usize, h2: usize, wire: Option<usize>, applied: Vec<f64>, adapt: bool },
    /// Hair-simulated Z deletion: all three measured with applied `S(1)`;
    /// the effective outcome `k₂ − k₃` adds to the Z frame of each listed
    /// wire (the deleted vertex's tracked neighbors).
    SimZ { target: usize, h1: usize, h2: usize, z_wires: Vec<usize> },
    /// Detach an unmeasured hair from an output vertex: measure the outer
    /// then the inner hair qudit in plain X; the outer outcome adds to the
    /// wire's Z frame.
    ConsumeHair { h1: usize, h2: usize, wire: Option<usize> },
}

impl Step {
    pub fn raw_measurements(&self) -> usize {
        match self {
            Step::Measure(_) => 1,
            Step::FrameCz { .. } => 0,
            Step::SimX { .. } | Step::SimZ { .. } => 3,
            Step::ConsumeHair { .. } => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MeasurementPattern {
    pub steps: Vec<Step>,
    pub n_wires: usize,
    /// `(vertex, wire)` per logical output, first entry most significant in
    /// the assembled residual index.
    pub outputs: Vec<(usize, usize)>,
}

impl MeasurementPattern {
    pub fn raw_measurement_count(&self) -> usize {
        self.steps.iter().map(Step::raw_measurements).sum()
    }
}

/// Supplies measured bases and outcomes during execution; the blind client
/// substitutes its own padded driver.
pub trait Driver {
    /// Basis rotation angles for an instruction whose frame-adapted applied
    /// angles are `applied`; the plain protocol measures the inverse
    /// rotation.
    fn basis_angles(&mut self, _vertex: usize, applied: &[f64]) -> Vec<f64> {
        applied.iter().map(|a| -a).collect()
    }
    /// Pick the raw outcome from the normalized Born distribution.
    fn choose(&mut self, vertex: usize, probs: &[f64]) -> u32;
    /// Observe the raw outcome of a measurement just performed.
    fn observe(&mut self, _vertex: usize, _raw: FieldElement) {}
    /// Outcome value used for frame bookkeeping. A client whose basis
    /// relabels outcomes (outcome pad) maps the raw label back here.
    fn frame_outcome(&mut self, _vertex: usize, raw: FieldElement) -> FieldElement {
        raw
    }
}

/// Samples outcomes from the Born distribution by inverse CDF, consuming
/// exactly one uniform draw per measurement.
pub struct RngDriver<'a, R: Rng> {
    pub rng: &'a mut R,
}

impl<R: Rng> Driver for RngDriver<'_, R> {
    fn choose(&mut self, _vertex: usize, probs: &[f64]) -> u32 {
        sample_index(probs, self.rng.gen::<f64>()) as u32
    }
}

/// Inverse-CDF index for a (possibly unnormalized) probability vector.
pub fn sample_index(probs: &[f64], uniform: f64) -> usize {
    let total: f64 = probs.iter().sum();
    if total <= 0.0 {
        return 0;
    }
    let mut draw = uniform * total;
    for (k, &p) in probs.iter().enumerate() {
        if draw < p {
            return k;
        }
        draw -= p;
    }
    probs.len() - 1
}

/// Replays a fixed raw outcome list (branch enumeration).
pub struct ForcedDriver {
    pub outcomes: Vec<u32>,
    pos: usize,
}

impl ForcedDriver {
    pub fn new(outcomes: Vec<u32>) -> ForcedDriver {
        ForcedDriver { outcomes, pos: 0 }
    }
}

impl Driver for ForcedDriver {
    fn choose(&mut self, _vertex: usize, _probs: &[f64]) -> u32 {
        let k = self.outcomes[self.pos];
        self.pos += 1;
        k
    }
}

/// Lazy graph-state runner over a spec.
pub struct Runner<'a> {
    pub spec: &'a ResourceSpec,
    pub caps: Caps,
    pub state: StateVector,
    site_of: Vec<Option<usize>>,
    measured: Vec<bool>,
    edge_applied: Vec<bool>,
}

impl<'a> Runner<'a> {
    pub fn new(spec: &'a ResourceSpec, caps: Caps) -> Result<Runner<'a>> {
        spec.validate()?;
        Ok(Runner {
            spec,
            caps,
            state: StateVector::scalar(spec.field.dim() as usize),
            site_of: vec![None; spec.vertices.len()],
            measured: vec![false; spec.vertices.len()],
            edge_applied: vec![false; spec.edges.len()],
        })
    }

    pub fn site(&self, vertex: usize) -> Option<usize> {
        self.site_of[vertex]
    }

    pub fn make_live(&mut self, v: usize) -> Result<()> {
        if self.site_of[v].is_some() || self.measured[v] {
            return Ok(());
        }
        let amps = self.spec.vertices[v].amplitudes(&self.spec.field);
        let site = self.state.append_site(&amps, &self.caps)?;
        self.site_of[v] = Some(site);
        for (i, e) in self.spec.edges.iter().enumerate() {
            if self.edge_applied[i] {
                continue;
            }
            let other = if e.a == v {
                e.b
            } else if e.b == v {
                e.a
            } else {
                continue;
            };
            if let Some(_) = self.site_of[other] {
                let g = e.entangler.gate(&self.spec.field)?;
                let (sa, sb) = (self.site_of[e.a].unwrap(), self.site_of[e.b].unwrap());
                self.state.apply_2(&g, sa, sb)?;
                self.edge_applied[i] = true;
            }
            let _ = other;
        }
        Ok(())
    }

    /// Activate `v` and every unmeasured neighbor so all incident edges are
    /// in place, then return the Born probabilities for measuring `v`.
    pub fn prepare_measure(&mut self, v: usize, basis: &MeasureBasis) -> Result<Vec<f64>> {
        self.make_live(v)?;
        let neighbors = self.spec.neighbors(v);
        for u in neighbors {
            self.make_live(u)?;
        }
        let site = self.site_of[v].expect("just activated");
        let mut probs = self.state.outcome_probabilities(&self.spec.field, site, basis);
        let total: f64 = probs.iter().sum();
        if total > 1e-300 {
            for p in &mut probs {
                *p /= total;
            }
        } else {
            probs.iter_mut().for_each(|p| *p = 0.0);
        }
        Ok(probs)
    }

    /// Project onto the chosen outcome without renormalizing (the state norm
    /// tracks the accumulated branch amplitude) and contract the site.
    pub fn project(&mut self, v: usize, basis: &MeasureBasis, k: FieldElement) -> Result<()> {
        let site = self.site_of[v].ok_or(Error::Protocol(format!("vertex {v} not live")))?;
        self.state.project_remove_unnormalized(&self.spec.field, site, basis, k)?;
        self.measured[v] = true;
        self.site_of[v] = None;
        for s in self.site_of.iter_mut().flatten() {
            if *s > site {
                *s -= 1;
            }
        }
        Ok(())
    }
}

/// Result of executing a full pattern.
#[derive(Debug)]
pub struct RunOutcome {
    /// `(vertex, raw outcome)` in raw-measurement order.
    pub raw: Vec<(usize, FieldElement)>,
    pub frames: Vec<Frame>,
    /// Probability of the realized branch.
    pub probability: f64,
    /// Residual amplitudes over the pattern outputs, first output most
    /// significant, normalized unless the branch probability vanished.
    pub residual: Vec<Complex64>,
}

pub fn execute_pattern(
    spec: &ResourceSpec,
    pattern: &MeasurementPattern,
    driver: &mut dyn Driver,
    caps: &Caps,
) -> Result<RunOutcome> {
    let f = &spec.field;
    let mut runner = Runner::new(spec, *caps)?;
    let mut frames = vec![Frame::default(); pattern.n_wires];
    let mut raw = Vec::new();

    let measure =
        |runner: &mut Runner, driver: &mut dyn Driver, v: usize, basis: &MeasureBasis, raw: &mut Vec<(usize, FieldElement)>| -> Result<FieldElement> {
            let probs = runner.prepare_measure(v, basis)?;
            let k = FieldElement(driver.choose(v, &probs));
            runner.project(v, basis, k)?;
            driver.observe(v, k);
            raw.push((v, k));
            // frame arithmetic runs on the relabeled (true) outcome
            Ok(driver.frame_outcome(v, k))
        };

    for step in &pattern.steps {
        match step {
            Step::Measure(instr) => {
                let applied = adapt_angles(f, &instr.applied, instr.wire, instr.adapt, &frames);
                let basis = MeasureBasis::RotatedX(driver.basis_angles(instr.vertex, &applied));
                let k = measure(&mut runner, driver, instr.vertex, &basis, &mut raw)?;
                if let Some(w) = instr.wire {
                    frames[w] = Frame { x: f.sub(k, frames[w].z), z: frames[w].x };
                }
            }
            Step::FrameCz { wire_a, wire_b, power } => {
                let c = f.scalar(*power);
                let (xa, xb) = (frames[*wire_a].x, frames[*wire_b].x);
                frames[*wire_a].z = f.add(frames[*wire_a].z, f.mul(c, xb));
                frames[*wire_b].z = f.add(frames[*wire_b].z, f.mul(c, xa));
            }
            Step::SimX { target, h1, h2, wire, applied, adapt } => {
                let applied = adapt_angles(f, applied, *wire, *adapt, &frames);
                let basis = MeasureBasis::RotatedX(driver.basis_angles(*target, &applied));
                let k1 = measure(&mut runner, driver, *target, &basis, &mut raw)?;
                let plain = plain_basis(f, driver, *h1);
                let _k2 = measure(&mut runner, driver, *h1, &plain, &mut raw)?;
                let plain = plain_basis(f, driver, *h2);
                let k3 = measure(&mut runner, driver, *h2, &plain, &mut raw)?;
                let keff = f.sub(k1, k3);
                if let Some(w) = *wire {
                    frames[w] = Frame { x: f.sub(keff, frames[w].z), z: frames[w].x };
                }
            }
            Step::SimZ { target, h1, h2, z_wires } => {
                let s1 = sim::angles_of_diagonal(&gates::phase(FieldElement::ONE, f));
                let mut outcomes = [FieldElement::ZERO; 3];
                for (slot, v) in [(0usize, *target), (1, *h1), (2, *h2)] {
                    let basis = MeasureBasis::RotatedX(driver.basis_angles(v, &s1));
                    outcomes[slot] = measure(&mut runner, driver, v, &basis, &mut raw)?;
                }
                let keff = f.sub(outcomes[1], outcomes[2]);
                for w in z_wires {
                    frames[*w].z = f.add(frames[*w].z, keff);
                }
            }
            Step::ConsumeHair { h1, h2, wire } => {
                let plain = plain_basis(f, driver, *h2);
                let a = measure(&mut runner, driver, *h2, &plain, &mut raw)?;
                let plain = plain_basis(f, driver, *h1);
                let _b = measure(&mut runner, driver, *h1, &plain, &mut raw)?;
                if let Some(w) = *wire {
                    frames[w].z = f.add(frames[w].z, a);
                }
            }
        }
    }

    for &(v, _) in &pattern.outputs {
        runner.make_live(v)?;
    }
    let probability = runner.state.norm().powi(2);
    let mut state = runner.state;
    if probability > 1e-30 {
        state.renormalize();
    }
    // assemble the residual with the declared output ordering
    let d = f.dim() as usize;
    let k_out = pattern.outputs.len();
    if state.n != k_out {
        return Err(Error::Protocol(format!(
            "pattern left {} live sites for {} outputs",
            state.n, k_out
        )));
    }
    let sites: Vec<usize> = pattern
        .outputs
        .iter()
        .map(|&(v, _)| runner.site_of[v].ok_or(Error::Protocol(format!("output {v} not live"))))
        .collect::<Result<_>>()?;
    let mut residual = vec![Complex64::new(0.0, 0.0); state.amps.len()];
    for (out_idx, r) in residual.iter_mut().enumerate() {
        let mut flat = 0usize;
        let mut t = out_idx;
        for j in (0..k_out).rev() {
            // out_idx digit j (0 = most significant output)
            let digit = t % d;
            t /= d;
            flat += digit * d.pow(sites[j] as u32);
        }
        *r = state.amps[flat];
    }
    Ok(RunOutcome { raw, frames, probability, residual })
}

fn adapt_angles(
    f: &Field,
    applied: &[f64],
    wire: Option<usize>,
    adapt: bool,
    frames: &[Frame],
) -> Vec<f64> {
    let x = match (adapt, wire) {
        (true, Some(w)) => frames[w].x,
        _ => FieldElement::ZERO,
    };
    if x == FieldElement::ZERO {
        return applied.to_vec();
    }
    f.elements().map(|u| applied[f.sub(u, x).index()]).collect()
}

fn plain_basis(f: &Field, driver: &mut dyn Driver, vertex: usize) -> MeasureBasis {
    let zeros = vec![0.0; f.dim() as usize];
    MeasureBasis::RotatedX(driver.basis_angles(vertex, &zeros))
}

/// One outcome branch of an enumerated gadget.
#[derive(Debug)]
pub struct BranchResult {
    pub outcomes: Vec<FieldElement>,
    /// Branch probability under a maximally mixed logical input.
    pub probability: f64,
    /// Induced linear map on the logical space (outputs × inputs), byproduct
    /// included.
    pub residual: Vec<Complex64>,
    pub frames: Vec<Frame>,
}

/// Drive a complete basis of logical inputs through the pattern for every
/// raw outcome sequence.
pub fn enumerate_branches(
    spec: &ResourceSpec,
    pattern: &MeasurementPattern,
    input_vertices: &[usize],
    caps: &Caps,
) -> Result<Vec<BranchResult>> {
    let d = spec.field.dim() as usize;
    let m = pattern.raw_measurement_count();
    let branch_count = d
        .checked_pow(m as u32)
        .filter(|&b| b <= caps.max_branches)
        .ok_or(Error::BranchCap(usize::MAX, caps.max_branches))?;
    let k_in = input_vertices.len();
    let dim_in = d.pow(k_in as u32);
    let dim_out = d.pow(pattern.outputs.len() as u32);

    let mut results = Vec::with_capacity(branch_count);
    for b in 0..branch_count {
        let mut forced = vec![0u32; m];
        let mut t = b;
        for o in forced.iter_mut() {
            *o = (t % d) as u32;
            t /= d;
        }
        let mut residual = vec![Complex64::new(0.0, 0.0); dim_out * dim_in];
        let mut frames = Vec::new();
        let mut outcomes = Vec::new();
        let mut prob_acc = 0.0f64;
        for i in 0..dim_in {
            let mut spec_i = spec.clone();
            let mut t = i;
            // first listed input vertex most significant
            for &v in input_vertices.iter().rev() {
                let digit = t % d;
                t /= d;
                spec_i.vertices[v] = crate::resources::VertexInit::Z(FieldElement(digit as u32));
            }
            let mut driver = ForcedDriver::new(forced.clone());
            let mut run = execute_pattern(&spec_i, pattern, &mut driver, caps)?;
            if run.probability <= 1e-30 {
                continue;
            }
            // restore the branch amplitude scale so columns stay mutually
            // consistent
            let amp = run.probability.sqrt();
            for a in &mut run.residual {
                *a *= amp;
            }
            for (r, &a) in run.residual.iter().enumerate() {
                residual[r * dim_in + i] = a;
            }
            prob_acc += run.probability;
            frames = run.frames;
            outcomes = run.raw.iter().map(|&(_, k)| k).collect();
        }
        if outcomes.is_empty() {
            outcomes = forced.iter().map(|&o| FieldElement(o)).collect();
        }
        results.push(BranchResult {
            outcomes,
            probability: prob_acc / dim_in as f64,
            residual,
            frames,
        });
    }
    Ok(results)
}

/// Undo the byproduct on a residual logical map: left-multiply by the
/// inverse frame Paulis (first output wire most significant).
pub fn frame_corrected(
    residual: &[Complex64],
    frames: &[Frame],
    output_wires: &[usize],
    f: &Field,
) -> Vec<Complex64> {
    let correction = output_wires
        .iter()
        .map(|&w| frames[w].gate(f).dagger())
        .reduce(|acc, g| acc.kron(&g))
        .expect("at least one output wire");
    let dim_out = correction.dim;
    let dim_in = residual.len() / dim_out;
    let mut out = vec![Complex64::new(0.0, 0.0); residual.len()];
    for r in 0..dim_out {
        for c in 0..dim_in {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..dim_out {
                acc += correction.matrix[r * dim_out + k] * residual[k * dim_in + c];
            }
            out[r * dim_in + c] = acc;
        }
    }
    out
}

/// Corrected logical outcome of a final computational-basis readout: the Z
/// part of the frame never matters, the X part reverses the shift.
pub fn interpret_output(outcomes: &[FieldElement], frames: &[Frame], f: &Field) -> Vec<FieldElement> {
    outcomes.iter().zip(frames).map(|(&k, fr)| f.sub(k, fr.x)).collect()
}

/// Gate menu of one brickwork elementary unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BrickKind {
    Identity,
    Diag { angles: Vec<f64>, wire: usize },
    Hadamard { wire: usize },
    Cx,
}

impl BrickKind {
    /// The two-qudit logical gate this unit implements (wire 0 = first
    /// tensor factor).
    pub fn target(&self, f: &Field) -> Gate {
        let d = f.dim() as usize;
        let id = Gate::identity(d, 1);
        match self {
            BrickKind::Identity => id.kron(&id),
            BrickKind::Diag { angles, wire } => {
                let g = gates::diag_gate(angles);
                if *wire == 0 {
                    g.kron(&id)
                } else {
                    id.kron(&g)
                }
            }
            BrickKind::Hadamard { wire } => {
                let h = gates::hadamard(f);
                if *wire == 0 {
                    h.kron(&id)
                } else {
                    id.kron(&h)
                }
            }
            BrickKind::Cx => {
                // CX_{1↦2} = Σ_x |x⟩⟨x| ⊗ X(x)
                let mut m = vec![Complex64::new(0.0, 0.0); d * d * d * d];
                for x in f.elements() {
                    for v in f.elements() {
                        let row = x.index() * d + f.add(v, x).index();
                        let col = x.index() * d + v.index();
                        m[row * d * d + col] = Complex64::new(1.0, 0.0);
                    }
                }
                Gate { dim: d * d, arity: 2, label: "CX".into(), matrix: m }
            }
        }
    }

    /// Applied diagonal angles for measurement columns 1–4 of the unit, per
    /// wire.
    fn applied_angles(&self, f: &Field) -> [[Vec<f64>; 4]; 2] {
        let d = f.dim() as usize;
        let zero = || vec![0.0; d];
        let s = sim::angles_of_diagonal(&brick_s(f));
        let s_inv = sim::angles_of_diagonal(&brick_s(f).dagger());
        match self {
            BrickKind::Identity => [
                [zero(), zero(), zero(), zero()],
                [zero(), zero(), zero(), zero()],
            ],
            BrickKind::Diag { angles, wire } => {
                let mut out = [
                    [zero(), zero(), zero(), zero()],
                    [zero(), zero(), zero(), zero()],
                ];
                out[*wire][0] = angles.clone();
                out
            }
            BrickKind::Hadamard { wire } => {
                let mut out = [
                    [zero(), zero(), zero(), zero()],
                    [zero(), zero(), zero(), zero()],
                ];
                out[*wire] = [s.clone(), s.clone(), s.clone(), zero()];
                out
            }
            BrickKind::Cx => [
                [zero(), zero(), s.clone(), zero()],
                [zero(), s, zero(), s_inv],
            ],
        }
    }
}

/// The unit phase gate: `S(1)` in odd characteristic, `S` in even.
pub fn brick_s(f: &Field) -> Gate {
    if f.p() == 2 {
        gates::s_even(f).expect("p = 2 always lifts to s = 2")
    } else {
        gates::phase(FieldElement::ONE, f)
    }
}

/// Measurement pattern for a chain of brickwork elementary units on one
/// wire pair (rows `row0`, `row0 + 1` of `spec`), one unit per entry of
/// `kinds`. Unit `t` occupies columns `4t..=4t+4`.
pub fn pattern_brickwork(
    kinds: &[BrickKind],
    spec: &ResourceSpec,
    row0: usize,
) -> Result<MeasurementPattern> {
    let f = &spec.field;
    let final_power = spec
        .edges
        .iter()
        .rev()
        .find_map(|e| {
            let l = spec.layout.as_ref()?;
            if l[e.a].0 != l[e.b].0 {
                match e.entangler {
                    crate::resources::Entangler::Cz { power } => Some(power),
                    _ => None,
                }
            } else {
                None
            }
        })
        .unwrap_or(-1);
    let at = |r: usize, c: usize| {
        spec.at(r, c)
            .ok_or_else(|| Error::MalformedSpec(format!("no vertex at ({r}, {c})")))
    };
    let mut steps = Vec::new();
    for (t, kind) in kinds.iter().enumerate() {
        let c0 = 4 * t;
        let angles = kind.applied_angles(f);
        for col in 0..4usize {
            if col == 2 {
                steps.push(Step::FrameCz { wire_a: 0, wire_b: 1, power: 1 });
            }
            for w in 0..2usize {
                steps.push(Step::Measure(Instr {
                    vertex: at(row0 + w, c0 + col)?,
                    wire: Some(w),
                    applied: angles[w][col].clone(),
                    adapt: true,
                }));
            }
        }
        steps.push(Step::FrameCz { wire_a: 0, wire_b: 1, power: final_power });
    }
    let out_col = 4 * kinds.len();
    Ok(MeasurementPattern {
        steps,
        n_wires: 2,
        outputs: vec![(at(row0, out_col)?, 0), (at(row0 + 1, out_col)?, 1)],
    })
}

/// Gate menu of an open-ended cluster block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OpenKind {
    Mirror,
    DiagIn { angles: Vec<f64>, row: usize },
    DiagOut { angles: Vec<f64>, row: usize },
    /// Rotate the first-row measurement of column `m` (1-indexed,
    /// `1 < m < n+1`) by `S(λ)†`, steering an entangling gate onto output
    /// rows `n−m`, `n+1−m` (0-indexed).
    Entangle { m: usize, lambda: FieldElement },
}

/// Pattern for `depth` chained open-ended blocks on `n` wires; block `b`
/// occupies columns `b(n+1)..=(b+1)(n+1)`.
pub fn pattern_open_ended(
    kinds: &[OpenKind],
    n: usize,
    spec: &ResourceSpec,
) -> Result<MeasurementPattern> {
    let f = &spec.field;
    let d = f.dim() as usize;
    let at = |r: usize, c: usize| {
        spec.at(r, c)
            .ok_or_else(|| Error::MalformedSpec(format!("no vertex at ({r}, {c})")))
    };
    let zero = vec![0.0; d];
    let mut steps = Vec::new();
    for (b, kind) in kinds.iter().enumerate() {
        if let OpenKind::Entangle { m, .. } = kind {
            if !(1 < *m && *m < n + 1) {
                return Err(Error::MalformedSpec(format!("entangle column {m} out of range")));
            }
        }
        let c0 = b * (n + 1);
        for col_in_block in 0..=n {
            let c = c0 + col_in_block;
            for r in 0..n.saturating_sub(1) {
                steps.push(Step::FrameCz { wire_a: r, wire_b: r + 1, power: 1 });
            }
            for r in 0..n {
                let applied = match kind {
                    OpenKind::DiagIn { angles, row } if col_in_block == 0 && r == *row => {
                        angles.clone()
                    }
                    OpenKind::DiagOut { angles, row } if col_in_block == n && r == *row => {
                        angles.clone()
                    }
                    OpenKind::Entangle { m, lambda } if col_in_block == m - 1 && r == 0 => {
                        sim::angles_of_diagonal(&gates::phase(*lambda, f))
                    }
                    _ => zero.clone(),
                };
                steps.push(Step::Measure(Instr {
                    vertex: at(r, c)?,
                    wire: Some(r),
                    applied,
                    adapt: true,
                }));
            }
        }
    }
    let out_col = kinds.len() * (n + 1);
    Ok(MeasurementPattern {
        steps,
        n_wires: n,
        outputs: (0..n).map(|r| Ok((at(r, out_col)?, r))).collect::<Result<_>>()?,
    })
}

/// Apply the layer operator `C_n = (Π_j H_j)(Π_j CZ_{j,j+1})` (or its
/// inverse) to an `n`-wire state, wire `j` on site `j`.
pub fn apply_layer(state: &mut StateVector, f: &Field, n: usize, inverse: bool) -> Result<()> {
    let h = gates::hadamard(f);
    let czg = gates::cz(f, 1);
    if !inverse {
        for j in 0..n.saturating_sub(1) {
            state.apply_2(&czg, j, j + 1)?;
        }
        for j in 0..n {
            state.apply_1(&h, j)?;
        }
    } else {
        let hd = h.dagger();
        let czd = gates::cz(f, -1);
        for j in 0..n {
            state.apply_1(&hd, j)?;
        }
        for j in (0..n.saturating_sub(1)).rev() {
            state.apply_2(&czd, j, j + 1)?;
        }
    }
    Ok(())
}

/// The closed-form steered entangling gate on the active output wire pair:
/// `Σ_{k,j} e^{iα_k} |±(k±j)_Z⟩⟨·| ⊗ |j_X⟩⟨j_X|` with the sign pattern set
/// by the parity of the conjugation count. First factor = lower output row.
pub fn steered_gate_closed_form(angles: &[f64], parity_even: bool, f: &Field) -> Gate {
    let d = f.dim() as usize;
    let mut m = vec![Complex64::new(0.0, 0.0); d * d * d * d];
    for t in f.elements() {
        // phase index k: even count has −(k+j) = t, odd count has k−j = t
        for ta in f.elements() {
            for sa in f.elements() {
                let idx_r = t.index() * d + ta.index();
                let idx_c = t.index() * d + sa.index();
                let mut acc = Complex64::new(0.0, 0.0);
                for j in f.elements() {
                    let k = if parity_even {
                        f.neg(f.add(t, j))
                    } else {
                        f.add(t, j)
                    };
                    let phase = Complex64::from_polar(1.0, angles[k.index()]);
                    // ⟨ta|j_X⟩⟨j_X|sa⟩ = χ(j·ta)χ(−j·sa)/d
                    let x_part = f.chi(f.mul(j, f.sub(ta, sa))) / d as f64;
                    acc += phase * x_part;
                }
                m[idx_r * d * d + idx_c] = acc;
            }
        }
    }
    Gate { dim: d * d, arity: 2, label: "steered".into(), matrix: m }
}

/// Gate menu for decorated-cluster computation along a single logical chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DecoratedOp {
    /// Hair-simulated rotated-X processing of the next chain vertex.
    SimX { angles: Vec<f64> },
}

/// Pattern for a decorated `1 × len` chain: vertices `0..len−1` processed by
/// hair-simulated measurements, vertex `len−1` the output (its hair is
/// detached).
pub fn pattern_decorated_chain(
    ops: &[DecoratedOp],
    _spec: &ResourceSpec,
    len: usize,
) -> Result<MeasurementPattern> {
    if ops.len() != len - 1 {
        return Err(Error::MalformedSpec(format!(
            "{} ops for a chain of {} vertices",
            ops.len(),
            len
        )));
    }
    let mut steps = Vec::new();
    for (v, op) in ops.iter().enumerate() {
        let (h1, h2) = crate::resources::hair_of(len, v);
        let DecoratedOp::SimX { angles } = op;
        steps.push(Step::SimX {
            target: v,
            h1,
            h2,
            wire: Some(0),
            applied: angles.clone(),
            adapt: true,
        });
    }
    let out = len - 1;
    let (h1, h2) = crate::resources::hair_of(len, out);
    steps.push(Step::ConsumeHair { h1, h2, wire: Some(0) });
    Ok(MeasurementPattern { steps, n_wires: 1, outputs: vec![(out, 0)] })
}

// ---------------------------------------------------------------------------
// Oracle checks shared by the unit tests, the verification suites, and the
// acceptance gate.

/// Enumerate every outcome branch of a gadget and require the
/// frame-corrected residual to match `target` with fidelity `1 − tol` on
/// each branch of nonvanishing probability.
pub fn check_branches(
    spec: &ResourceSpec,
    pattern: &MeasurementPattern,
    inputs: &[usize],
    target: &Gate,
    tol: f64,
    caps: &Caps,
) -> Result<()> {
    let f = &spec.field;
    let branches = enumerate_branches(spec, pattern, inputs, caps)?;
    let total: f64 = branches.iter().map(|b| b.probability).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Protocol(format!("branch probabilities sum to {total}")));
    }
    let wires: Vec<usize> = pattern.outputs.iter().map(|&(_, w)| w).collect();
    for b in &branches {
        if b.probability < 1e-12 {
            continue;
        }
        let corrected = frame_corrected(&b.residual, &b.frames, &wires, f);
        let fid = crate::sim::fidelity_phase_invariant(&corrected, &target.matrix)?;
        if fid < 1.0 - tol {
            return Err(Error::Protocol(format!(
                "branch {:?} fidelity {fid}",
                b.outcomes.iter().map(|k| k.0).collect::<Vec<_>>()
            )));
        }
    }
    Ok(())
}

/// Drive a full logical basis through one forced outcome branch and check
/// the frame-corrected residual against `target`. Zero-probability branches
/// pass vacuously.
pub fn check_forced_branch(
    spec: &ResourceSpec,
    pattern: &MeasurementPattern,
    inputs: &[usize],
    target: &Gate,
    forced: &[u32],
    tol: f64,
    caps: &Caps,
) -> Result<()> {
    let f = &spec.field;
    let d = f.dim() as usize;
    let dim = d.pow(inputs.len() as u32);
    let mut residual = vec![Complex64::new(0.0, 0.0); dim * dim];
    let mut frames = Vec::new();
    let mut any = false;
    for i in 0..dim {
        let mut spec_i = spec.clone();
        let mut t = i;
        for &v in inputs.iter().rev() {
            spec_i.vertices[v] = crate::resources::VertexInit::Z(FieldElement((t % d) as u32));
            t /= d;
        }
        let mut driver = ForcedDriver::new(forced.to_vec());
        let run = execute_pattern(&spec_i, pattern, &mut driver, caps)?;
        if run.probability <= 1e-30 {
            continue;
        }
        any = true;
        let amp = run.probability.sqrt();
        for (r, &a) in run.residual.iter().enumerate() {
            residual[r * dim + i] = a * amp;
        }
        frames = run.frames;
    }
    if !any {
        return Ok(());
    }
    let wires: Vec<usize> = pattern.outputs.iter().map(|&(_, w)| w).collect();
    let corrected = frame_corrected(&residual, &frames, &wires, f);
    let fid = crate::sim::fidelity_phase_invariant(&corrected, &target.matrix)?;
    if fid < 1.0 - tol {
        return Err(Error::Protocol(format!("branch {forced:?} fidelity {fid}")));
    }
    Ok(())
}

/// Operator-level mirror identity: `C_n^{n+1}` equals the wire reversal for
/// even `n` and reversal composed with `M(−1)` per wire for odd `n`, up to
/// one global phase, to 1e−10.
pub fn mirror_layer_check(f: &Field, n: usize) -> Result<bool> {
    let d = f.dim() as usize;
    let dim = d.pow(n as u32);
    let mut phase: Option<Complex64> = None;
    for i in 0..dim {
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[i] = Complex64::new(1.0, 0.0);
        let mut state = StateVector::from_amps(d, n, amps)?;
        for _ in 0..=n {
            apply_layer(&mut state, f, n, false)?;
        }
        // expected: digit reversal, each digit negated when n is odd
        let mut digits = Vec::with_capacity(n);
        let mut t = i;
        for _ in 0..n {
            digits.push(t % d);
            t /= d;
        }
        digits.reverse();
        if n % 2 == 1 {
            for dg in &mut digits {
                *dg = f.neg(FieldElement(*dg as u32)).index();
            }
        }
        let mut expect_idx = 0usize;
        for j in (0..n).rev() {
            expect_idx = expect_idx * d + digits[j];
        }
        let c = state.amps[expect_idx];
        if c.norm() < 1.0 - 1e-10 {
            return Ok(false);
        }
        match phase {
            None => phase = Some(c / c.norm()),
            Some(ph) => {
                if (c - ph).norm() > 1e-10 {
                    return Ok(false);
                }
            }
        }
        for (k, a) in state.amps.iter().enumerate() {
            if k != expect_idx && a.norm() > 1e-10 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Conjugation-chain check for the steered entangling gate: transport a
/// first-wire diagonal through `n + 2 − m` layer conjugations and compare
/// with the closed form on output wires `n−m`, `n+1−m`, to 1e−10.
pub fn steered_chain_check(f: &Field, n: usize, m: usize, angles: &[f64]) -> Result<bool> {
    let d = f.dim() as usize;
    let dim = d.pow(n as u32);
    let reps = n + 2 - m;
    // columns of G = C^r D C^{−r}, D the diagonal on wire 0
    let mut g = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[i] = Complex64::new(1.0, 0.0);
        let mut state = StateVector::from_amps(d, n, amps)?;
        for _ in 0..reps {
            apply_layer(&mut state, f, n, true)?;
        }
        let dg = gates::diag_gate(angles);
        state.apply_1(&dg, 0)?;
        for _ in 0..reps {
            apply_layer(&mut state, f, n, false)?;
        }
        for (r, &a) in state.amps.iter().enumerate() {
            g[r * dim + i] = a;
        }
    }
    // expected: closed form on wires (n−m, n+1−m), identity elsewhere
    let (wa, wb) = (n - m, n + 1 - m);
    let e = steered_gate_closed_form(angles, reps % 2 == 0, f);
    let mut expect = vec![Complex64::new(0.0, 0.0); dim * dim];
    for row in 0..dim {
        let digits_r: Vec<usize> = (0..n).map(|j| row / d.pow(j as u32) % d).collect();
        for col in 0..dim {
            let digits_c: Vec<usize> = (0..n).map(|j| col / d.pow(j as u32) % d).collect();
            let mut ok = true;
            for j in 0..n {
                if j != wa && j != wb && digits_r[j] != digits_c[j] {
                    ok = false;
                    break;
                }
            }
            if !ok {
                continue;
            }
            let er = digits_r[wa] * d + digits_r[wb];
            let ec = digits_c[wa] * d + digits_c[wb];
            expect[row * dim + col] = e.matrix[er * d * d + ec];
        }
    }
    Ok(gates::dist_up_to_phase(&g, &expect) < 1e-10)
}

/// Full-lattice open-ended mirror at `n = 2`: random product inputs must
/// come out swapped after frame correction, fidelity `1 − 1e−9`.
pub fn open_ended_swap_check(f: &Field, seed: u64, trials: usize) -> Result<()> {
    use rand::SeedableRng;
    let caps = Caps::default();
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let d = f.dim() as usize;
    for trial in 0..trials {
        let mut spec = crate::resources::build_open_ended(2, f);
        let mut psis = Vec::new();
        for r in 0..2usize {
            let amps: Vec<Complex64> = (0..d)
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            let amps: Vec<Complex64> = amps.iter().map(|&a| a / norm).collect();
            let v = spec.at(r, 0).expect("input vertex");
            spec.vertices[v] = crate::resources::VertexInit::Custom(amps.clone());
            psis.push(amps);
        }
        let pattern = pattern_open_ended(&[OpenKind::Mirror], 2, &spec)?;
        let mut driver = RngDriver { rng: &mut rng };
        let run = execute_pattern(&spec, &pattern, &mut driver, &caps)?;
        let corrected = frame_corrected(&run.residual, &run.frames, &[0, 1], f);
        let mut expect = vec![Complex64::new(0.0, 0.0); d * d];
        for a in 0..d {
            for b in 0..d {
                expect[a * d + b] = psis[1][a] * psis[0][b];
            }
        }
        let fid = crate::sim::fidelity_phase_invariant(&corrected, &expect)?;
        if fid < 1.0 - 1e-9 {
            return Err(Error::Protocol(format!("swap trial {trial} fidelity {fid}")));
        }
    }
    Ok(())
}

/// Execute a pattern of hair steps on a spec without declared outputs and
/// return the raw live state with its branch probability.
fn execute_hair_steps(
    spec: &ResourceSpec,
    pattern: &MeasurementPattern,
    driver: &mut dyn Driver,
) -> Result<(StateVector, f64)> {
    let f = &spec.field;
    let mut runner = Runner::new(spec, Caps::default())?;
    for step in &pattern.steps {
        match step {
            Step::SimX { target, h1, h2, applied, .. } => {
                for (v, ang) in [(*target, Some(applied)), (*h1, None), (*h2, None)] {
                    let basis = match ang {
                        Some(a) => MeasureBasis::RotatedX(a.iter().map(|x| -x).collect()),
                        None => MeasureBasis::plain_x(f),
                    };
                    let probs = runner.prepare_measure(v, &basis)?;
                    let k = FieldElement(driver.choose(v, &probs));
                    runner.project(v, &basis, k)?;
                }
            }
            Step::SimZ { target, h1, h2, .. } => {
                let s1 = sim::angles_of_diagonal(&gates::phase(FieldElement::ONE, f));
                let basis = MeasureBasis::RotatedX(s1.iter().map(|x| -x).collect());
                for v in [*target, *h1, *h2] {
                    let probs = runner.prepare_measure(v, &basis)?;
                    let k = FieldElement(driver.choose(v, &probs));
                    runner.project(v, &basis, k)?;
                }
            }
            Step::ConsumeHair { h1, h2, .. } => {
                for v in [*h2, *h1] {
                    let basis = MeasureBasis::plain_x(f);
                    let probs = runner.prepare_measure(v, &basis)?;
                    let k = FieldElement(driver.choose(v, &probs));
                    runner.project(v, &basis, k)?;
                }
            }
            _ => {
                return Err(Error::Protocol("hair check patterns use hair steps only".into()))
            }
        }
    }
    let p = runner.state.norm().powi(2);
    Ok((runner.state, p))
}

/// Compare hair-simulated X and Z measurements against genuine measurements
/// branch by branch on a random three-neighbor star, fidelity `1 − 1e−9`.
pub fn hair_equivalence_check(f: &Field, seed: u64) -> Result<()> {
    use rand::SeedableRng;
    let d = f.dim() as usize;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    // star: center 0 with three neighbors 1, 2, 3 in random states
    let mut base = ResourceSpec::new(f);
    base.add_vertex(crate::resources::VertexInit::X(FieldElement::ZERO));
    for _ in 0..3 {
        let amps: Vec<Complex64> = (0..d)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let v = base.add_vertex(crate::resources::VertexInit::Custom(
            amps.iter().map(|&a| a / norm).collect(),
        ));
        base.cz_edge(0, v);
    }
    let spec = crate::resources::decorate(&base);
    let (h1, h2) = crate::resources::hair_of(4, 0);
    let phi: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() * 3.0).collect();

    for mode_z in [false, true] {
        for b in 0..d.pow(3) {
            let ks: Vec<u32> = (0..3).map(|j| (b / d.pow(j) % d) as u32).collect();
            let step = if mode_z {
                Step::SimZ { target: 0, h1, h2, z_wires: vec![] }
            } else {
                Step::SimX {
                    target: 0,
                    h1,
                    h2,
                    wire: None,
                    applied: phi.clone(),
                    adapt: false,
                }
            };
            // consume the hairs of the three neighbors as well so only the
            // neighbors remain
            let mut steps = vec![step];
            for v in 1..4usize {
                let (a1, a2) = crate::resources::hair_of(4, v);
                steps.push(Step::ConsumeHair { h1: a1, h2: a2, wire: None });
            }
            let pattern = MeasurementPattern { steps, n_wires: 0, outputs: Vec::new() };
            // hair-consumption outcomes pinned to zero so the neighbor
            // states match the genuine run exactly
            let mut forced = ks.clone();
            forced.extend(std::iter::repeat(0).take(6));
            let mut driver = ForcedDriver::new(forced);
            let (mut simulated, prob) = execute_hair_steps(&spec, &pattern, &mut driver)?;
            if prob <= 1e-30 {
                continue;
            }
            simulated.renormalize();

            // genuine measurement on the undecorated star at the effective
            // outcome the hair algebra predicts
            let keff = if mode_z {
                f.sub(FieldElement(ks[1]), FieldElement(ks[2]))
            } else {
                f.sub(FieldElement(ks[0]), FieldElement(ks[2]))
            };
            let mut genuine = base.init_state(&Caps::default())?;
            let basis = if mode_z {
                MeasureBasis::Z
            } else {
                MeasureBasis::RotatedX(phi.iter().map(|a| -a).collect())
            };
            if genuine.force_remove(f, 0, &basis, keff).is_err() {
                continue;
            }
            let fid = crate::sim::fidelity_phase_invariant(&simulated.amps, &genuine.amps)?;
            if fid < 1.0 - 1e-9 {
                return Err(Error::Protocol(format!(
                    "hair {} branch {ks:?} fidelity {fid} (d = {d})",
                    if mode_z { "Z" } else { "X" }
                )));
            }
        }
    }
    Ok(())
}
