//! Declarative resource-state specs: cluster, open-ended cluster, brickwork
//! (CZ⁻¹ and CZ-only variants), decorated (hair) cluster, hidden graphs,
//! and the generalized `G_E` entangler.
//!
//! A spec is a field, a vertex list with initialization tags, and diagonal
//! entangler edges; edge order never matters because all entanglers commute.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::galois::{Field, FieldDescriptor, FieldElement};
use crate::gates::{self, Gate};
use crate::sim::{self, StateVector};
use crate::{Caps, Error, Result};

/// How a vertex qudit starts out.
#[derive(Debug, Clone, PartialEq)]
pub enum VertexInit {
    /// `|k_X⟩`; the graph-state default is `X(0)`.
    X(FieldElement),
    /// `|k_Z⟩`.
    Z(FieldElement),
    /// `D_angles |0_X⟩`.
    Rotated(Vec<f64>),
    /// Explicit amplitudes (used for server-view states that must carry no
    /// structural tag).
    Custom(Vec<Complex64>),
}

impl VertexInit {
    pub fn amplitudes(&self, f: &Field) -> Vec<Complex64> {
        match self {
            VertexInit::X(k) => sim::x_basis_state(f, *k),
            VertexInit::Z(k) => sim::z_basis_state(f, *k),
            VertexInit::Rotated(angles) => {
                let base = sim::x_basis_state(f, FieldElement::ZERO);
                angles
                    .iter()
                    .zip(base)
                    .map(|(&phi, a)| Complex64::from_polar(1.0, phi) * a)
                    .collect()
            }
            VertexInit::Custom(amps) => amps.clone(),
        }
    }
}

/// Diagonal two-qudit entangler attached to an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Entangler {
    Cz { power: i64 },
    Ge { n: u32 },
}

impl Entangler {
    pub fn gate(&self, f: &Field) -> Result<Gate> {
        match *self {
            Entangler::Cz { power } => Ok(gates::cz(f, power)),
            Entangler::Ge { n } => ge_gate(FieldElement(n), f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub entangler: Entangler,
}

#[derive(Debug, Clone)]
pub struct ResourceSpec {
    pub field: Field,
    pub vertices: Vec<VertexInit>,
    pub edges: Vec<Edge>,
    /// `(row, col)` per vertex for lattice-derived specs.
    pub layout: Option<Vec<(usize, usize)>>,
}

impl ResourceSpec {
    pub fn new(field: &Field) -> ResourceSpec {
        ResourceSpec { field: field.clone(), vertices: Vec::new(), edges: Vec::new(), layout: None }
    }

    pub fn add_vertex(&mut self, init: VertexInit) -> usize {
        self.vertices.push(init);
        self.vertices.len() - 1
    }

    pub fn add_edge(&mut self, a: usize, b: usize, entangler: Entangler) {
        self.edges.push(Edge { a, b, entangler });
    }

    pub fn cz_edge(&mut self, a: usize, b: usize) {
        self.add_edge(a, b, Entangler::Cz { power: 1 });
    }

    pub fn validate(&self) -> Result<()> {
        for e in &self.edges {
            if e.a == e.b {
                return Err(Error::MalformedSpec(format!("self-loop at vertex {}", e.a)));
            }
            if e.a >= self.vertices.len() || e.b >= self.vertices.len() {
                return Err(Error::MalformedSpec(format!(
                    "edge ({}, {}) references a missing vertex",
                    e.a, e.b
                )));
            }
        }
        if let Some(layout) = &self.layout {
            if layout.len() != self.vertices.len() {
                return Err(Error::MalformedSpec("layout length mismatch".into()));
            }
        }
        Ok(())
    }

    /// Vertex index by `(row, col)` for lattice specs.
    pub fn at(&self, row: usize, col: usize) -> Option<usize> {
        self.layout.as_ref()?.iter().position(|&rc| rc == (row, col))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.a == v || e.b == v).count()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|e| {
                if e.a == v {
                    Some(e.b)
                } else if e.b == v {
                    Some(e.a)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Prepare every vertex, then apply every edge entangler in spec order.
    pub fn init_state(&self, caps: &Caps) -> Result<StateVector> {
        self.validate()?;
        let mut state = StateVector::scalar(self.field.dim() as usize);
        for v in &self.vertices {
            state.append_site(&v.amplitudes(&self.field), caps)?;
        }
        for e in &self.edges {
            state.apply_2(&e.entangler.gate(&self.field)?, e.a, e.b)?;
        }
        Ok(state)
    }

    pub fn to_doc(&self) -> SpecDoc {
        SpecDoc {
            field: self.field.descriptor(),
            vertices: self
                .vertices
                .iter()
                .map(|v| match v {
                    VertexInit::X(k) => VertexDoc::X { k: k.0 },
                    VertexInit::Z(k) => VertexDoc::Z { k: k.0 },
                    VertexInit::Rotated(a) => VertexDoc::Rotated { angles: a.clone() },
                    VertexInit::Custom(amps) => VertexDoc::Custom {
                        amps: amps.iter().map(|c| (c.re, c.im)).collect(),
                    },
                })
                .collect(),
            edges: self.edges.clone(),
            layout: self.layout.clone(),
        }
    }

    pub fn from_doc(doc: &SpecDoc) -> Result<ResourceSpec> {
        let field = Field::with_modulus(doc.field.p, doc.field.m, doc.field.modulus.clone())?;
        let spec = ResourceSpec {
            field,
            vertices: doc
                .vertices
                .iter()
                .map(|v| match v {
                    VertexDoc::X { k } => VertexInit::X(FieldElement(*k)),
                    VertexDoc::Z { k } => VertexInit::Z(FieldElement(*k)),
                    VertexDoc::Rotated { angles } => VertexInit::Rotated(angles.clone()),
                    VertexDoc::Custom { amps } => VertexInit::Custom(
                        amps.iter().map(|&(re, im)| Complex64::new(re, im)).collect(),
                    ),
                })
                .collect(),
            edges: doc.edges.clone(),
            layout: doc.layout.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Serializable mirror of a [`ResourceSpec`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpecDoc {
    pub field: FieldDescriptor,
    pub vertices: Vec<VertexDoc>,
    pub edges: Vec<Edge>,
    pub layout: Option<Vec<(usize, usize)>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "init", rename_all = "snake_case")]
pub enum VertexDoc {
    X { k: u32 },
    Z { k: u32 },
    Rotated { angles: Vec<f64> },
    Custom { amps: Vec<(f64, f64)> },
}

/// Plain `rows × cols` cluster state: grid graph, all edges `CZ¹`, all
/// vertices `|0_X⟩`.
pub fn build_cluster(rows: usize, cols: usize, f: &Field) -> ResourceSpec {
    assert!(rows >= 1 && cols >= 1);
    let mut spec = ResourceSpec::new(f);
    let mut layout = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            spec.add_vertex(VertexInit::X(FieldElement::ZERO));
            layout.push((r, c));
        }
    }
    let idx = |r: usize, c: usize| r * cols + c;
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                spec.cz_edge(idx(r, c), idx(r, c + 1));
            }
            if r + 1 < rows {
                spec.cz_edge(idx(r, c), idx(r + 1, c));
            }
        }
    }
    spec.layout = Some(layout);
    spec
}

/// `n × (n+2)` cluster with the vertical edges of the last (output) column
/// removed.
pub fn build_open_ended(n: usize, f: &Field) -> ResourceSpec {
    assert!(n >= 2);
    let cols = n + 2;
    let mut spec = ResourceSpec::new(f);
    let mut layout = Vec::new();
    for r in 0..n {
        for c in 0..cols {
            spec.add_vertex(VertexInit::X(FieldElement::ZERO));
            layout.push((r, c));
        }
    }
    let idx = |r: usize, c: usize| r * cols + c;
    for r in 0..n {
        for c in 0..cols {
            if c + 1 < cols {
                spec.cz_edge(idx(r, c), idx(r, c + 1));
            }
            if r + 1 < n && c + 1 < cols {
                spec.cz_edge(idx(r, c), idx(r + 1, c));
            }
        }
    }
    spec.layout = Some(layout);
    spec
}

/// Brickwork resource. Each elementary unit is a 2×5 block on one wire pair
/// whose first internal vertical edge is `CZ¹` and final vertical edge is
/// `CZ⁻¹` (or `CZ^{p−1}` with `cz_only`). Units on the same wire pair chain
/// by sharing their boundary column; with more than two wires, bricks
/// alternate between even and odd wire pairs per unit step.
pub fn build_brickwork(
    n_logical: usize,
    depth: usize,
    f: &Field,
    cz_only: bool,
) -> Result<ResourceSpec> {
    if n_logical < 2 || n_logical % 2 != 0 {
        return Err(Error::MalformedSpec(format!(
            "brickwork needs an even number of wires, got {n_logical}"
        )));
    }
    assert!(depth >= 1);
    let cols = 4 * depth + 1;
    let mut spec = ResourceSpec::new(f);
    let mut layout = Vec::new();
    for r in 0..n_logical {
        for c in 0..cols {
            spec.add_vertex(VertexInit::X(FieldElement::ZERO));
            layout.push((r, c));
        }
    }
    let idx = |r: usize, c: usize| r * cols + c;
    for r in 0..n_logical {
        for c in 0..cols - 1 {
            spec.cz_edge(idx(r, c), idx(r, c + 1));
        }
    }
    let final_power = if cz_only { f.p() as i64 - 1 } else { -1 };
    for t in 0..depth {
        let first_wire = if t % 2 == 0 { 0 } else { 1 };
        let mut w = first_wire;
        while w + 1 < n_logical {
            let c0 = 4 * t;
            spec.add_edge(idx(w, c0 + 2), idx(w + 1, c0 + 2), Entangler::Cz { power: 1 });
            spec.add_edge(idx(w, c0 + 4), idx(w + 1, c0 + 4), Entangler::Cz { power: final_power });
            w += 2;
        }
    }
    spec.layout = Some(layout);
    Ok(spec)
}

/// Attach a two-vertex hair chain (`CZ¹` edges) to every existing vertex.
/// Hair vertices for original vertex `v` are appended in order
/// (first-hair, second-hair); use [`hair_of`] to find them.
pub fn decorate(spec: &ResourceSpec) -> ResourceSpec {
    let mut out = spec.clone();
    let original = spec.vertices.len();
    let mut layout = out.layout.take();
    for v in 0..original {
        let h1 = out.add_vertex(VertexInit::X(FieldElement::ZERO));
        let h2 = out.add_vertex(VertexInit::X(FieldElement::ZERO));
        out.cz_edge(v, h1);
        out.cz_edge(h1, h2);
        if let Some(l) = &mut layout {
            let (r, c) = l[v];
            l.push((r, c));
            l.push((r, c));
        }
    }
    out.layout = layout;
    out
}

/// Hair vertices `(h1, h2)` attached to original vertex `v` by [`decorate`]
/// over a base spec of `original` vertices.
pub fn hair_of(original: usize, v: usize) -> (usize, usize) {
    (original + 2 * v, original + 2 * v + 1)
}

/// Client-side record of the secret choices made by [`hide_graph`].
#[derive(Debug, Clone)]
pub struct HiddenChoice {
    /// Per bridge: ancilla vertex index, whether the edge is wanted, and the
    /// secret basis label.
    pub bridges: Vec<(usize, bool, FieldElement)>,
}

/// Realize a set of candidate edges through basis-hidden ancillae: each
/// bridge `(u, v)` gets an ancilla with `CZ¹` edges to both endpoints,
/// initialized `|k_X⟩` (random `k`) if the edge is wanted and `|k_Z⟩`
/// otherwise. The wanted/label record stays client-side.
pub fn hide_graph(
    base: &ResourceSpec,
    bridges: &[(usize, usize)],
    wanted: &[bool],
    rng: &mut impl Rng,
) -> Result<(ResourceSpec, HiddenChoice)> {
    if bridges.len() != wanted.len() {
        return Err(Error::MalformedSpec("one wanted flag per bridge required".into()));
    }
    let mut spec = base.clone();
    let mut layout = spec.layout.take();
    let mut record = Vec::new();
    for (&(u, v), &want) in bridges.iter().zip(wanted) {
        let k = FieldElement(rng.gen_range(0..spec.field.dim()));
        let init = if want { VertexInit::X(k) } else { VertexInit::Z(k) };
        let a = spec.add_vertex(init);
        spec.cz_edge(u, a);
        spec.cz_edge(a, v);
        if let Some(l) = &mut layout {
            l.push(l[u]);
        }
        record.push((a, want, k));
    }
    spec.layout = layout;
    spec.validate()?;
    Ok((spec, HiddenChoice { bridges: record }))
}

/// `G_E(N) = M(N⁻¹)₂ · CZ · M(N)₂`: diagonal with entries `χ(N·uv)`.
pub fn ge_gate(n: FieldElement, f: &Field) -> Result<Gate> {
    if n == FieldElement::ZERO {
        return Err(Error::NotInvertible);
    }
    let id = Gate::identity(f.dim() as usize, 1);
    let m_n = gates::mult_gate(n, f)?;
    let m_inv = gates::mult_gate(f.inv(n)?, f)?;
    let mut g = id.kron(&m_inv).mul(&gates::cz(f, 1)).mul(&id.kron(&m_n));
    g.label = format!("GE({})", n.0);
    Ok(g)
}

/// The intrinsic single-qudit gate of a diagonal entangler `G`, defined by
/// `⟨0_X|₁ G (|ψ⟩₁ |0_X⟩₂) ∝ G_I |ψ⟩₂`. Reconstructed over a basis and
/// certified proportional to a unitary.
pub fn intrinsic_gate(g: &Gate, f: &Field) -> Result<Gate> {
    let d = f.dim() as usize;
    if g.arity != 2 || g.dim != d * d {
        return Err(Error::ShapeMismatch(format!("{} is not a two-qudit gate", g.label)));
    }
    for r in 0..d * d {
        for c in 0..d * d {
            if r != c && g.matrix[r * d * d + c].norm() > 1e-10 {
                return Err(Error::MalformedSpec(format!("{} is not diagonal", g.label)));
            }
        }
    }
    let x0 = sim::x_basis_state(f, FieldElement::ZERO);
    let mut cols = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        // |i⟩₁ |0_X⟩₂ through the diagonal gate, then ⟨0_X|₁
        let mut out = vec![Complex64::new(0.0, 0.0); d];
        for (v, o) in out.iter_mut().enumerate() {
            let idx = i * d + v;
            *o = x0[i].conj() * g.matrix[idx * d * d + idx] * x0[v];
        }
        for v in 0..d {
            cols[v * d + i] = out[v];
        }
    }
    // certify proportionality to a unitary: C†C = c·I
    let mut c_norm = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..d {
                acc += cols[k * d + a].conj() * cols[k * d + b];
            }
            if a == b {
                if c_norm == 0.0 {
                    c_norm = acc.re;
                } else if (acc.re - c_norm).abs() > 1e-10 * c_norm.max(1.0) || acc.im.abs() > 1e-10
                {
                    return Err(Error::NotUnitary);
                }
            } else if acc.norm() > 1e-10 * c_norm.max(1.0) {
                return Err(Error::NotUnitary);
            }
        }
    }
    if c_norm < 1e-12 {
        return Err(Error::NotUnitary);
    }
    let scale = 1.0 / c_norm.sqrt();
    let matrix: Vec<Complex64> = cols.iter().map(|&c| c * scale).collect();
    Ok(Gate { dim: d, arity: 1, label: format!("intrinsic({})", g.label), matrix })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galois::make_field;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn caps() -> Caps {
        Caps::default()
    }

    #[test]
    fn cluster_counts() {
        let f = make_field(2, 1).unwrap();
        let s = build_cluster(1, 2, &f);
        assert_eq!((s.vertices.len(), s.edges.len()), (2, 1));
        let f3 = make_field(3, 1).unwrap();
        let s = build_cluster(2, 2, &f3);
        assert_eq!((s.vertices.len(), s.edges.len()), (4, 4));
        let s = build_cluster(4, 6, &f3);
        assert_eq!((s.vertices.len(), s.edges.len()), (24, 38));
        s.validate().unwrap();
    }

    #[test]
    fn open_ended_shape() {
        let f = make_field(3, 1).unwrap();
        let s = build_open_ended(2, &f);
        assert_eq!((s.vertices.len(), s.edges.len()), (8, 9));
        // output column vertices have degree 1
        for r in 0..2 {
            assert_eq!(s.degree(s.at(r, 3).unwrap()), 1);
        }
        let s = build_open_ended(4, &f);
        assert_eq!(s.vertices.len(), 24);
        // vertical edges only in the first five columns
        for e in &s.edges {
            let (ra, ca) = s.layout.as_ref().unwrap()[e.a];
            let (rb, cb) = s.layout.as_ref().unwrap()[e.b];
            if ra != rb {
                assert_eq!(ca, cb);
                assert!(ca < 5, "vertical edge in output column");
            }
        }
    }

    #[test]
    fn brickwork_unit_shapes() {
        let f2 = make_field(2, 1).unwrap();
        let s = build_brickwork(2, 1, &f2, false).unwrap();
        assert_eq!(s.vertices.len(), 10);
        let vertical: Vec<&Edge> = s
            .edges
            .iter()
            .filter(|e| {
                let l = s.layout.as_ref().unwrap();
                l[e.a].0 != l[e.b].0
            })
            .collect();
        assert_eq!(s.edges.len() - vertical.len(), 8);
        assert_eq!(vertical.len(), 2);
        // CZ⁻¹ = CZ at p = 2
        assert!(gates::cz(&f2, -1).approx_eq_up_to_phase(&gates::cz(&f2, 1), 1e-12));

        let f3 = make_field(3, 1).unwrap();
        let s = build_brickwork(2, 1, &f3, false).unwrap();
        let last = s.edges.last().unwrap();
        assert_eq!(last.entangler, Entangler::Cz { power: -1 });

        let s = build_brickwork(2, 1, &f3, true).unwrap();
        let last = s.edges.last().unwrap();
        assert_eq!(last.entangler, Entangler::Cz { power: 2 });
        assert!(gates::cz(&f3, 2).approx_eq_up_to_phase(&gates::cz(&f3, -1), 1e-12));

        assert!(build_brickwork(3, 1, &f3, false).is_err());
    }

    #[test]
    fn decorate_counts() {
        let f = make_field(3, 1).unwrap();
        let mut single = ResourceSpec::new(&f);
        single.add_vertex(VertexInit::X(FieldElement::ZERO));
        let dec = decorate(&single);
        assert_eq!((dec.vertices.len(), dec.edges.len()), (3, 2));

        let grid = build_cluster(2, 2, &f);
        let dec = decorate(&grid);
        assert_eq!((dec.vertices.len(), dec.edges.len()), (12, 12));
        for v in &dec.vertices[4..] {
            assert_eq!(*v, VertexInit::X(FieldElement::ZERO));
        }
    }

    #[test]
    fn hidden_graph_entanglement() {
        let f = make_field(3, 1).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        // two logical endpoints with one candidate bridge
        let mut base = ResourceSpec::new(&f);
        let u = base.add_vertex(VertexInit::X(FieldElement::ZERO));
        let v = base.add_vertex(VertexInit::X(FieldElement::ZERO));

        let (wanted_spec, rec) = hide_graph(&base, &[(u, v)], &[true], &mut rng).unwrap();
        assert!(rec.bridges[0].1);
        let state = wanted_spec.init_state(&caps()).unwrap();
        // measure the ancilla in X to consume it, keeping the bridge effect
        let probs = state.outcome_probabilities(
            &f,
            rec.bridges[0].0,
            &crate::sim::MeasureBasis::plain_x(&f),
        );
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(state.schmidt_rank(&[u], 1e-10), 3, "wanted bridge must entangle");

        let (unwanted_spec, _) = hide_graph(&base, &[(u, v)], &[false], &mut rng).unwrap();
        let state = unwanted_spec.init_state(&caps()).unwrap();
        assert_eq!(state.schmidt_rank(&[u], 1e-10), 1, "unwanted bridge must sever");

        let (all_z, rec) = hide_graph(&base, &[(u, v)], &[false], &mut rng).unwrap();
        let a = rec.bridges[0].0;
        assert!(matches!(all_z.vertices[a], VertexInit::Z(_)));
    }

    #[test]
    fn hidden_ancilla_is_maximally_mixed_on_average() {
        let f = make_field(3, 1).unwrap();
        let d = 3usize;
        let mut base = ResourceSpec::new(&f);
        let u = base.add_vertex(VertexInit::X(FieldElement::ZERO));
        let v = base.add_vertex(VertexInit::X(FieldElement::ZERO));
        for want in [true, false] {
            let mut avg = vec![Complex64::new(0.0, 0.0); d * d];
            for k in f.elements() {
                let mut spec = base.clone();
                let init = if want { VertexInit::X(k) } else { VertexInit::Z(k) };
                let a = spec.add_vertex(init);
                spec.cz_edge(u, a);
                spec.cz_edge(a, v);
                let state = spec.init_state(&caps()).unwrap();
                for (dst, src) in avg.iter_mut().zip(state.reduced_density(&[a])) {
                    *dst += src / d as f64;
                }
            }
            for r in 0..d {
                for c in 0..d {
                    let want_entry = if r == c { 1.0 / d as f64 } else { 0.0 };
                    assert!(
                        (avg[r * d + c] - want_entry).norm() < 1e-10,
                        "ancilla not maximally mixed (wanted={want})"
                    );
                }
            }
        }
    }

    #[test]
    fn ge_gate_forms() {
        let f3 = make_field(3, 1).unwrap();
        assert!(ge_gate(FieldElement(1), &f3)
            .unwrap()
            .approx_eq_up_to_phase(&gates::cz(&f3, 1), 1e-12));
        let g = ge_gate(FieldElement(2), &f3).unwrap();
        for u in f3.elements() {
            for v in f3.elements() {
                let idx = u.index() * 3 + v.index();
                let want = f3.chi(f3.mul(f3.scalar(2), f3.mul(u, v)));
                assert!((g.entry(idx, idx) - want).norm() < 1e-12);
            }
        }
        assert!(ge_gate(FieldElement::ZERO, &f3).is_err());
    }

    #[test]
    fn ge_on_z_ancilla_gives_product_state() {
        let f = make_field(3, 1).unwrap();
        let n = FieldElement(2);
        let g = ge_gate(n, &f).unwrap();
        for k in f.elements() {
            let mut s = StateVector::scalar(3);
            s.append_site(&sim::z_basis_state(&f, k), &caps()).unwrap();
            s.append_site(&sim::x_basis_state(&f, FieldElement::ZERO), &caps()).unwrap();
            s.apply_2(&g, 0, 1).unwrap();
            assert_eq!(s.schmidt_rank(&[0], 1e-10), 1);
            // second factor is Z(Nk)|0_X⟩
            let mut expect = StateVector::scalar(3);
            expect.append_site(&sim::z_basis_state(&f, k), &caps()).unwrap();
            expect.append_site(&sim::x_basis_state(&f, FieldElement::ZERO), &caps()).unwrap();
            expect
                .apply_1(&gates::pauli(FieldElement::ZERO, f.mul(n, k), &f), 1)
                .unwrap();
            let fid = sim::fidelity_phase_invariant(&s.amps, &expect.amps).unwrap();
            assert!(fid > 1.0 - 1e-10, "k={} fid={fid}", k.0);
        }
    }

    #[test]
    fn intrinsic_gate_of_cz_is_hadamard() {
        for (p, m) in [(2u32, 1u32), (3, 1), (2, 2), (5, 1)] {
            let f = make_field(p, m).unwrap();
            let gi = intrinsic_gate(&gates::cz(&f, 1), &f).unwrap();
            assert!(gi.approx_eq_up_to_phase(&gates::hadamard(&f), 1e-10));
        }
    }

    #[test]
    fn intrinsic_ge_gates_are_clifford() {
        for (p, m) in [(2u32, 1u32), (3, 1), (2, 2), (5, 1), (2, 3), (3, 2)] {
            let f = make_field(p, m).unwrap();
            for n in f.elements().skip(1) {
                let gi = intrinsic_gate(&ge_gate(n, &f).unwrap(), &f).unwrap();
                assert!(gi.is_unitary(1e-10));
                assert!(gates::is_clifford(&gi, &f), "GE({}) intrinsic not Clifford d={}", n.0, f.dim());
            }
        }
    }

    #[test]
    fn init_state_round_trip_normalized() {
        let f = make_field(3, 1).unwrap();
        for spec in [
            build_cluster(2, 3, &f),
            build_open_ended(2, &f),
            build_brickwork(2, 1, &f, false).unwrap(),
            decorate(&build_cluster(1, 2, &f)),
        ] {
            let state = spec.init_state(&caps()).unwrap();
            assert!((state.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn spec_doc_round_trip() {
        let f = make_field(2, 2).unwrap();
        let mut spec = build_cluster(2, 2, &f);
        spec.vertices[1] = VertexInit::Z(FieldElement(3));
        spec.vertices[2] = VertexInit::Rotated(vec![0.0, 0.5, 1.0, 1.5]);
        let json = serde_json::to_string(&spec.to_doc()).unwrap();
        let doc: SpecDoc = serde_json::from_str(&json).unwrap();
        let back = ResourceSpec::from_doc(&doc).unwrap();
        assert_eq!(back.vertices, spec.vertices);
        assert_eq!(back.edges, spec.edges);
        assert_eq!(back.layout, spec.layout);
    }
}
