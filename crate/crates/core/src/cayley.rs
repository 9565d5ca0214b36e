//! Group families, Cayley adjacency, finite vertex sets and boundary functionals.
//!
//! Every group element is stored as a flat integer tuple ([`Vertex`]). Neighbors use
//! right multiplication `g -> g s` by default; the left action `g -> s g` is available
//! wherever a count needs it.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type IntMatrix = Vec<Vec<i64>>;

/// Canonical integer encoding of a group element.
///
/// Lamplighter elements are `[cursor, p1, v1, p2, v2, ...]` with positions sorted and
/// only nonzero lamps stored.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Vertex(pub Vec<i64>);

impl Vertex {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        Vertex(coords.into())
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }
}

impl From<Vec<i64>> for Vertex {
    fn from(v: Vec<i64>) -> Self {
        Vertex(v)
    }
}

/// Which side a generator multiplies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Right,
    Left,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeMode {
    DirectedPairs,
    UndirectedCut,
}

/// Serializable description of a group family. JSON form: `{"family": ..., "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum Family {
    Zd { stencil: Vec<Vec<i64>> },
    Heisenberg,
    /// `omega[i][j]` is the centre vector of the pair `(e_i, e_j)`.
    Step2 { d: usize, m: usize, omega: Vec<Vec<Vec<i64>>> },
    /// Lamps in `Z_{q+1}` over the base `Z`; `toggles` are the nonzero lamp increments.
    Lamplighter { q: u32, toggles: Vec<u32> },
    Semidirect { a: IntMatrix },
    Torus { d: usize, m: u32 },
    Explicit { adjacency: Vec<Vec<usize>> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub label: String,
    pub index: usize,
    pub inverse: usize,
}

#[derive(Clone, Debug)]
pub struct GroupGraph {
    family: Family,
    gens: Vec<Generator>,
    elems: Vec<Vertex>,
    a_inv: Option<IntMatrix>,
    degree: usize,
}

// ---- small integer linear algebra (used here and by tfchains) ----

pub fn mat_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let n = a.len();
    let p = b[0].len();
    let mut c = vec![vec![0i64; p]; n];
    for i in 0..n {
        for (k, bk) in b.iter().enumerate() {
            let aik = a[i][k];
            if aik == 0 {
                continue;
            }
            for j in 0..p {
                c[i][j] += aik * bk[j];
            }
        }
    }
    c
}

pub fn mat_vec(a: &IntMatrix, v: &[i64]) -> Vec<i64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn identity_matrix(d: usize) -> IntMatrix {
    (0..d).map(|i| (0..d).map(|j| i64::from(i == j)).collect()).collect()
}

pub fn mat_pow(a: &IntMatrix, k: u32) -> IntMatrix {
    let mut out = identity_matrix(a.len());
    for _ in 0..k {
        out = mat_mul(&out, a);
    }
    out
}

fn minor(a: &IntMatrix, r: usize, c: usize) -> IntMatrix {
    a.iter()
        .enumerate()
        .filter(|(i, _)| *i != r)
        .map(|(_, row)| {
            row.iter()
                .enumerate()
                .filter(|(j, _)| *j != c)
                .map(|(_, x)| *x)
                .collect()
        })
        .collect()
}

/// Determinant by cofactor expansion (fine for the small sizes used here).
pub fn det(a: &IntMatrix) -> i64 {
    match a.len() {
        0 => 1,
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        n => (0..n)
            .map(|j| {
                let s = if j % 2 == 0 { 1 } else { -1 };
                s * a[0][j] * det(&minor(a, 0, j))
            })
            .sum(),
    }
}

/// Cofactor matrix: `cof(A)_{ij} = (-1)^{i+j} det(minor_{ij})`, so `A cof(A)^T = det(A) I`.
pub fn cofactor(a: &IntMatrix) -> IntMatrix {
    let n = a.len();
    if n == 1 {
        return vec![vec![1]];
    }
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let s = if (i + j) % 2 == 0 { 1 } else { -1 };
                    s * det(&minor(a, i, j))
                })
                .collect()
        })
        .collect()
}

pub fn transpose(a: &IntMatrix) -> IntMatrix {
    if a.is_empty() {
        return vec![];
    }
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// Inverse of a unimodular integer matrix.
pub fn unimodular_inverse(a: &IntMatrix) -> Result<IntMatrix> {
    let n = a.len();
    if n == 0 || a.iter().any(|r| r.len() != n) {
        return Err(Error::Invalid("matrix must be square and nonempty".into()));
    }
    let dt = det(a);
    if dt != 1 && dt != -1 {
        return Err(Error::Invalid(format!("matrix not in GL(d,Z): det = {dt}")));
    }
    let adj = transpose(&cofactor(a));
    Ok(adj.into_iter().map(|r| r.into_iter().map(|x| x * dt).collect()).collect())
}

fn axis_stencil(d: usize) -> Vec<Vec<i64>> {
    let mut s = Vec::with_capacity(2 * d);
    for i in 0..d {
        for sign in [1, -1] {
            let mut v = vec![0; d];
            v[i] = sign;
            s.push(v);
        }
    }
    s
}

fn lamp_map(v: &Vertex) -> (i64, BTreeMap<i64, i64>) {
    let c = v.0[0];
    let lamps = v.0[1..].chunks(2).map(|p| (p[0], p[1])).collect();
    (c, lamps)
}

fn lamp_vertex(cursor: i64, lamps: &BTreeMap<i64, i64>) -> Vertex {
    let mut out = Vec::with_capacity(1 + 2 * lamps.len());
    out.push(cursor);
    for (&p, &v) in lamps {
        if v != 0 {
            out.push(p);
            out.push(v);
        }
    }
    Vertex(out)
}

/// Build a lamplighter element from a cursor and `(position, value)` lamps.
pub fn lamplighter_element(q: u32, cursor: i64, lamps: &[(i64, i64)]) -> Vertex {
    let md = i64::from(q) + 1;
    let mut m = BTreeMap::new();
    for &(p, v) in lamps {
        let e = m.entry(p).or_insert(0);
        *e = (*e + v).rem_euclid(md);
    }
    lamp_vertex(cursor, &m)
}

impl GroupGraph {
    pub fn new(family: Family) -> Result<Self> {
        let mut a_inv = None;
        let (gens, elems): (Vec<Generator>, Vec<Vertex>) = match &family {
            Family::Zd { stencil } => {
                let d = stencil.first().map(|v| v.len()).unwrap_or(0);
                if d == 0 {
                    return Err(Error::Invalid("empty stencil".into()));
                }
                let mut seen = HashSet::new();
                for v in stencil {
                    if v.len() != d {
                        return Err(Error::Invalid("stencil vectors of mixed dimension".into()));
                    }
                    if v.iter().all(|&x| x == 0) {
                        return Err(Error::Invalid("zero vector in stencil".into()));
                    }
                    if !seen.insert(v.clone()) {
                        return Err(Error::Invalid("duplicate stencil vector".into()));
                    }
                }
                let mut gens = Vec::new();
                for (i, v) in stencil.iter().enumerate() {
                    let neg: Vec<i64> = v.iter().map(|x| -x).collect();
                    let inv = stencil
                        .iter()
                        .position(|w| *w == neg)
                        .ok_or_else(|| Error::Invalid("stencil not symmetric".into()))?;
                    gens.push(Generator { label: format!("{v:?}"), index: i, inverse: inv });
                }
                (gens, stencil.iter().cloned().map(Vertex).collect())
            }
            Family::Heisenberg => {
                let elems = vec![
                    Vertex(vec![1, 0, 0]),
                    Vertex(vec![-1, 0, 0]),
                    Vertex(vec![0, 1, 0]),
                    Vertex(vec![0, -1, 0]),
                ];
                let labels = ["a", "a^-1", "b", "b^-1"];
                let gens = (0..4)
                    .map(|i| Generator { label: labels[i].into(), index: i, inverse: i ^ 1 })
                    .collect();
                (gens, elems)
            }
            Family::Step2 { d, m, omega } => {
                let (d, m) = (*d, *m);
                if d == 0 || omega.len() != d || omega.iter().any(|r| r.len() != d) {
                    return Err(Error::Invalid("omega must be d x d".into()));
                }
                for i in 0..d {
                    for j in 0..d {
                        let w = &omega[i][j];
                        if w.len() != m {
                            return Err(Error::Invalid("omega entries must lie in Z^m".into()));
                        }
                        if j <= i && w.iter().any(|&x| x != 0) {
                            return Err(Error::Invalid(
                                "omega must be strictly upper triangular".into(),
                            ));
                        }
                    }
                }
                let mut gens = Vec::new();
                let mut elems = Vec::new();
                for i in 0..d {
                    for (k, sign) in [1i64, -1].into_iter().enumerate() {
                        let mut v = vec![0; d + m];
                        v[i] = sign;
                        elems.push(Vertex(v));
                        let idx = 2 * i + k;
                        let label = if sign > 0 { format!("e{}", i + 1) } else { format!("-e{}", i + 1) };
                        gens.push(Generator { label, index: idx, inverse: idx ^ 1 });
                    }
                }
                (gens, elems)
            }
            Family::Lamplighter { q, toggles } => {
                let q = *q;
                if q == 0 {
                    return Err(Error::Invalid("lamp alphabet needs q >= 1".into()));
                }
                let md = q + 1;
                let mut ts: Vec<u32> = toggles.clone();
                ts.sort_unstable();
                ts.dedup();
                if ts.is_empty() || ts.iter().any(|&t| t == 0 || t >= md) {
                    return Err(Error::Invalid("toggles must be nonzero residues mod q+1".into()));
                }
                if ts.iter().any(|&t| !ts.contains(&((md - t) % md))) {
                    return Err(Error::Invalid("toggle set must be closed under negation".into()));
                }
                let mut gens = vec![
                    Generator { label: "move+".into(), index: 0, inverse: 1 },
                    Generator { label: "move-".into(), index: 1, inverse: 0 },
                ];
                let mut elems = vec![Vertex(vec![1]), Vertex(vec![-1])];
                for (k, &t) in ts.iter().enumerate() {
                    let inv_t = (md - t) % md;
                    let inv_k = ts.iter().position(|&s| s == inv_t).unwrap();
                    gens.push(Generator {
                        label: format!("toggle{t}"),
                        index: 2 + k,
                        inverse: 2 + inv_k,
                    });
                    elems.push(Vertex(vec![0, 0, i64::from(t)]));
                }
                (gens, elems)
            }
            Family::Semidirect { a } => {
                let inv = unimodular_inverse(a)?;
                a_inv = Some(inv);
                let d = a.len();
                let mut gens = Vec::new();
                let mut elems = Vec::new();
                for i in 0..d {
                    for (k, sign) in [1i64, -1].into_iter().enumerate() {
                        let mut v = vec![0; d + 1];
                        v[i] = sign;
                        elems.push(Vertex(v));
                        let idx = 2 * i + k;
                        let label = if sign > 0 { format!("s{}", i + 1) } else { format!("s{}^-1", i + 1) };
                        gens.push(Generator { label, index: idx, inverse: idx ^ 1 });
                    }
                }
                for (k, sign) in [1i64, -1].into_iter().enumerate() {
                    let mut v = vec![0; d + 1];
                    v[d] = sign;
                    elems.push(Vertex(v));
                    let idx = 2 * d + k;
                    gens.push(Generator {
                        label: if sign > 0 { "t".into() } else { "t^-1".into() },
                        index: idx,
                        inverse: idx ^ 1,
                    });
                }
                (gens, elems)
            }
            Family::Torus { d, m } => {
                if *d == 0 || *m == 0 {
                    return Err(Error::Invalid("torus needs d >= 1 and m >= 1".into()));
                }
                let mm = i64::from(*m);
                let elems: Vec<Vertex> = axis_stencil(*d)
                    .into_iter()
                    .map(|v| Vertex(v.into_iter().map(|x| x.rem_euclid(mm)).collect()))
                    .collect();
                let gens = (0..2 * d)
                    .map(|i| Generator {
                        label: format!("{}e{}", if i % 2 == 0 { "+" } else { "-" }, i / 2 + 1),
                        index: i,
                        inverse: i ^ 1,
                    })
                    .collect();
                (gens, elems)
            }
            Family::Explicit { adjacency } => {
                let n = adjacency.len();
                for (u, nb) in adjacency.iter().enumerate() {
                    for &v in nb {
                        if v >= n {
                            return Err(Error::Invalid(format!("neighbor {v} out of range")));
                        }
                        if !adjacency[v].contains(&u) {
                            return Err(Error::Invalid("explicit adjacency must be undirected".into()));
                        }
                    }
                }
                (vec![], vec![])
            }
        };
        let degree = match &family {
            Family::Explicit { adjacency } => adjacency.iter().map(Vec::len).max().unwrap_or(0),
            _ => gens.len(),
        };
        Ok(GroupGraph { family, gens, elems, a_inv, degree })
    }

    pub fn zd_axis(d: usize) -> Self {
        Self::new(Family::Zd { stencil: axis_stencil(d) }).expect("axis stencil is valid")
    }

    pub fn zd_stencil(stencil: Vec<Vec<i64>>) -> Result<Self> {
        Self::new(Family::Zd { stencil })
    }

    pub fn heisenberg() -> Self {
        Self::new(Family::Heisenberg).expect("valid")
    }

    pub fn step2(d: usize, m: usize, omega: Vec<Vec<Vec<i64>>>) -> Result<Self> {
        Self::new(Family::Step2 { d, m, omega })
    }

    /// Lamplighter over `Z` with the default symmetric toggle set `{1, q}`.
    pub fn lamplighter(q: u32) -> Self {
        Self::new(Family::Lamplighter { q, toggles: default_toggles(q) }).expect("valid")
    }

    pub fn semidirect(a: IntMatrix) -> Result<Self> {
        Self::new(Family::Semidirect { a })
    }

    pub fn torus(d: usize, m: u32) -> Self {
        Self::new(Family::Torus { d, m }).expect("valid")
    }

    pub fn explicit(adjacency: Vec<Vec<usize>>) -> Result<Self> {
        Self::new(Family::Explicit { adjacency })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    /// Degree counted with multiplicity (maximum degree for explicit graphs).
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_group(&self) -> bool {
        !matches!(self.family, Family::Explicit { .. })
    }

    /// True for the infinite vertex-transitive families.
    pub fn is_infinite(&self) -> bool {
        !matches!(self.family, Family::Explicit { .. } | Family::Torus { .. })
    }

    pub fn generator_element(&self, s: usize) -> &Vertex {
        &self.elems[s]
    }

    pub fn identity(&self) -> Vertex {
        match &self.family {
            Family::Zd { stencil } => Vertex(vec![0; stencil[0].len()]),
            Family::Heisenberg => Vertex(vec![0; 3]),
            Family::Step2 { d, m, .. } => Vertex(vec![0; d + m]),
            Family::Lamplighter { .. } => Vertex(vec![0]),
            Family::Semidirect { a } => Vertex(vec![0; a.len() + 1]),
            Family::Torus { d, .. } => Vertex(vec![0; *d]),
            Family::Explicit { .. } => Vertex(vec![0]),
        }
    }

    pub fn validate(&self, g: &Vertex) -> Result<()> {
        let bad = |msg: &str| Err(Error::Encoding(format!("{msg}: {:?}", g.0)));
        match &self.family {
            Family::Lamplighter { q, .. } => {
                if g.0.len() % 2 != 1 {
                    return bad("lamplighter encoding needs cursor plus (pos, value) pairs");
                }
                let mut last = None;
                for p in g.0[1..].chunks(2) {
                    if p[1] <= 0 || p[1] > i64::from(*q) {
                        return bad("lamp value outside 1..=q");
                    }
                    if last.is_some_and(|l| l >= p[0]) {
                        return bad("lamp positions must be strictly increasing");
                    }
                    last = Some(p[0]);
                }
                Ok(())
            }
            Family::Torus { m, .. } => {
                if g.0.len() != self.identity().0.len() {
                    return bad("wrong length");
                }
                if g.0.iter().any(|&x| x < 0 || x >= i64::from(*m)) {
                    return bad("residue out of range");
                }
                Ok(())
            }
            Family::Explicit { adjacency } => {
                if g.0.len() != 1 || g.0[0] < 0 || g.0[0] as usize >= adjacency.len() {
                    return bad("explicit vertex id out of range");
                }
                Ok(())
            }
            _ => {
                if g.0.len() != self.identity().0.len() {
                    return bad("wrong length");
                }
                Ok(())
            }
        }
    }

    fn a_power(&self, k: i64) -> IntMatrix {
        match &self.family {
            Family::Semidirect { a } => {
                if k >= 0 {
                    mat_pow(a, k as u32)
                } else {
                    mat_pow(self.a_inv.as_ref().expect("inverse cached"), (-k) as u32)
                }
            }
            _ => unreachable!("only semidirect families carry a matrix"),
        }
    }

    /// Group law. Unsupported for explicit graphs.
    pub fn mul(&self, g: &Vertex, h: &Vertex) -> Result<Vertex> {
        Ok(match &self.family {
            Family::Zd { .. } => Vertex(g.0.iter().zip(&h.0).map(|(a, b)| a + b).collect()),
            Family::Heisenberg => {
                let (x, y, z) = (g.0[0], g.0[1], g.0[2]);
                let (x2, y2, z2) = (h.0[0], h.0[1], h.0[2]);
                Vertex(vec![x + x2, y + y2, z + z2 + x * y2])
            }
            Family::Step2 { d, m, omega } => {
                let (d, m) = (*d, *m);
                let mut out: Vec<i64> = g.0.iter().zip(&h.0).map(|(a, b)| a + b).collect();
                for i in 0..d {
                    if g.0[i] == 0 {
                        continue;
                    }
                    for j in (i + 1)..d {
                        let c = g.0[i] * h.0[j];
                        if c != 0 {
                            for t in 0..m {
                                out[d + t] += c * omega[i][j][t];
                            }
                        }
                    }
                }
                Vertex(out)
            }
            Family::Lamplighter { q, .. } => {
                let md = i64::from(*q) + 1;
                let (c, mut f) = lamp_map(g);
                let (c2, f2) = lamp_map(h);
                for (p, v) in f2 {
                    let e = f.entry(p + c).or_insert(0);
                    *e = (*e + v).rem_euclid(md);
                }
                lamp_vertex(c + c2, &f)
            }
            Family::Semidirect { a } => {
                let d = a.len();
                let k = g.0[d];
                let ay = mat_vec(&self.a_power(k), &h.0[..d]);
                let mut out: Vec<i64> = (0..d).map(|i| g.0[i] + ay[i]).collect();
                out.push(k + h.0[d]);
                Vertex(out)
            }
            Family::Torus { m, .. } => {
                let mm = i64::from(*m);
                Vertex(g.0.iter().zip(&h.0).map(|(a, b)| (a + b).rem_euclid(mm)).collect())
            }
            Family::Explicit { .. } => return Err(Error::Unsupported("explicit graph".into())),
        })
    }

    pub fn inverse(&self, g: &Vertex) -> Result<Vertex> {
        Ok(match &self.family {
            Family::Zd { .. } => Vertex(g.0.iter().map(|x| -x).collect()),
            Family::Heisenberg => {
                let (x, y, z) = (g.0[0], g.0[1], g.0[2]);
                Vertex(vec![-x, -y, -z + x * y])
            }
            Family::Step2 { d, m, omega } => {
                let (d, m) = (*d, *m);
                let mut out: Vec<i64> = g.0.iter().map(|x| -x).collect();
                // (x,h)^{-1} = (-x, -h + omega(x,x))
                for i in 0..d {
                    for j in (i + 1)..d {
                        let c = g.0[i] * g.0[j];
                        for t in 0..m {
                            out[d + t] += c * omega[i][j][t];
                        }
                    }
                }
                Vertex(out)
            }
            Family::Lamplighter { q, .. } => {
                let md = i64::from(*q) + 1;
                let (c, f) = lamp_map(g);
                let inv: BTreeMap<i64, i64> =
                    f.into_iter().map(|(p, v)| (p - c, (-v).rem_euclid(md))).collect();
                lamp_vertex(-c, &inv)
            }
            Family::Semidirect { a } => {
                let d = a.len();
                let k = g.0[d];
                let x = mat_vec(&self.a_power(-k), &g.0[..d]);
                let mut out: Vec<i64> = x.into_iter().map(|v| -v).collect();
                out.push(-k);
                Vertex(out)
            }
            Family::Torus { m, .. } => {
                let mm = i64::from(*m);
                Vertex(g.0.iter().map(|x| (-x).rem_euclid(mm)).collect())
            }
            Family::Explicit { .. } => return Err(Error::Unsupported("explicit graph".into())),
        })
    }

    /// Apply generator `s` on the requested side (group families only).
    pub fn act(&self, g: &Vertex, s: usize, action: Action) -> Result<Vertex> {
        let e = &self.elems[s];
        match action {
            Action::Right => self.mul(g, e),
            Action::Left => self.mul(e, g),
        }
    }

    /// Labeled neighbors `(generator, vertex)`; Δ of them for group families.
    /// For explicit graphs the label is the adjacency slot and the action is ignored.
    pub fn neighbors(&self, g: &Vertex, action: Action) -> Result<Vec<(usize, Vertex)>> {
        self.validate(g)?;
        if let Family::Explicit { adjacency } = &self.family {
            return Ok(adjacency[g.0[0] as usize]
                .iter()
                .enumerate()
                .map(|(i, &v)| (i, Vertex(vec![v as i64])))
                .collect());
        }
        (0..self.gens.len()).map(|s| Ok((s, self.act(g, s, action)?))).collect()
    }

    /// Right neighbors, the default adjacency.
    pub fn right_neighbors(&self, g: &Vertex) -> Result<Vec<(usize, Vertex)>> {
        self.neighbors(g, Action::Right)
    }
}

/// Default symmetric toggle set `{1, q}` for lamps in `Z_{q+1}`.
pub fn default_toggles(q: u32) -> Vec<u32> {
    let mut t = vec![1, q];
    t.dedup();
    t
}

/// Finite set of vertices with deterministic (sorted) iteration.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexSet(BTreeSet<Vertex>);

impl VertexSet {
    pub fn new() -> Self {
        VertexSet(BTreeSet::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        self.0.contains(v)
    }

    pub fn insert(&mut self, v: Vertex) -> bool {
        self.0.insert(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vertex> {
        self.0.iter()
    }

    pub fn as_set(&self) -> &BTreeSet<Vertex> {
        &self.0
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn difference(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.0.difference(&other.0).cloned().collect())
    }

    pub fn symmetric_difference(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.0.symmetric_difference(&other.0).cloned().collect())
    }

    /// `{g y : y in Y}`.
    pub fn translate_left(&self, graph: &GroupGraph, g: &Vertex) -> Result<VertexSet> {
        self.iter().map(|y| graph.mul(g, y)).collect()
    }

    /// `{y g : y in Y}`.
    pub fn translate_right(&self, graph: &GroupGraph, g: &Vertex) -> Result<VertexSet> {
        self.iter().map(|y| graph.mul(y, g)).collect()
    }

    /// `Y^{-1}`.
    pub fn inverse(&self, graph: &GroupGraph) -> Result<VertexSet> {
        self.iter().map(|y| graph.inverse(y)).collect()
    }
}

impl FromIterator<Vertex> for VertexSet {
    fn from_iter<I: IntoIterator<Item = Vertex>>(iter: I) -> Self {
        VertexSet(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a VertexSet {
    type Item = &'a Vertex;
    type IntoIter = std::collections::btree_set::Iter<'a, Vertex>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Outer vertex boundary `SY \ Y` under right multiplication.
pub fn vertex_boundary(graph: &GroupGraph, y: &VertexSet) -> Result<VertexSet> {
    vertex_boundary_with(graph, y, Action::Right)
}

pub fn vertex_boundary_with(graph: &GroupGraph, y: &VertexSet, action: Action) -> Result<VertexSet> {
    let mut out = VertexSet::new();
    for v in y {
        for (_, w) in graph.neighbors(v, action)? {
            if !y.contains(&w) {
                out.insert(w);
            }
        }
    }
    Ok(out)
}

/// Edge boundary under right multiplication.
pub fn edge_boundary(graph: &GroupGraph, y: &VertexSet, mode: EdgeMode) -> Result<u64> {
    edge_boundary_with(graph, y, mode, Action::Right)
}

pub fn edge_boundary_with(
    graph: &GroupGraph,
    y: &VertexSet,
    mode: EdgeMode,
    action: Action,
) -> Result<u64> {
    match mode {
        EdgeMode::DirectedPairs => {
            let mut n = 0u64;
            for v in y {
                for (_, w) in graph.neighbors(v, action)? {
                    if !y.contains(&w) {
                        n += 1;
                    }
                }
            }
            Ok(n)
        }
        EdgeMode::UndirectedCut => {
            // An undirected edge is the pair of slots {(g,s), (gs, s^-1)}; keep the smaller one.
            let mut keys: HashSet<(Vertex, usize)> = HashSet::new();
            match graph.family() {
                Family::Explicit { .. } => {
                    for v in y {
                        for (_, w) in graph.neighbors(v, action)? {
                            if !y.contains(&w) {
                                let (a, b) = if *v < w { (v.clone(), w) } else { (w, v.clone()) };
                                keys.insert((a, b.0[0] as usize));
                            }
                        }
                    }
                }
                _ => {
                    for v in y {
                        for (s, w) in graph.neighbors(v, action)? {
                            if y.contains(&w) {
                                continue;
                            }
                            let back = graph.generators()[s].inverse;
                            let key = std::cmp::min((v.clone(), s), (w, back));
                            keys.insert(key);
                        }
                    }
                }
            }
            Ok(keys.len() as u64)
        }
    }
}

/// Number of distinct unordered vertex pairs `{y, y'}` joined by some generator with
/// exactly one end in `Y`. Ignores multiplicities of parallel generators.
pub fn cut_pairs(graph: &GroupGraph, y: &VertexSet, action: Action) -> Result<u64> {
    let mut keys = HashSet::new();
    for v in y {
        for (_, w) in graph.neighbors(v, action)? {
            if !y.contains(&w) {
                keys.insert((v.clone(), w));
            }
        }
    }
    Ok(keys.len() as u64)
}

/// Per-generator left counts `D_s = #{y in Y : s y not in Y}`.
pub fn per_generator_counts(graph: &GroupGraph, y: &VertexSet) -> Result<Vec<u64>> {
    per_generator_counts_with(graph, y, Action::Left)
}

pub fn per_generator_counts_with(
    graph: &GroupGraph,
    y: &VertexSet,
    action: Action,
) -> Result<Vec<u64>> {
    if !graph.is_group() {
        return Err(Error::Unsupported("per-generator counts need generator labels".into()));
    }
    let mut counts = vec![0u64; graph.generators().len()];
    for v in y {
        for (s, c) in counts.iter_mut().enumerate() {
            if !y.contains(&graph.act(v, s, action)?) {
                *c += 1;
            }
        }
    }
    Ok(counts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigmaBoundary {
    pub colored: u64,
    pub left: u64,
    pub right_via_inverse: u64,
}

/// Inverse-pair representatives: one generator per pair `{s, s^-1}`.
pub fn positive_representatives(graph: &GroupGraph) -> Vec<usize> {
    let mut seen_elems: HashSet<Vertex> = HashSet::new();
    let mut reps = Vec::new();
    for g in graph.generators() {
        if g.index > g.inverse {
            continue;
        }
        // quotients can carry parallel labels for one element; keep one colour per element pair
        let e = graph.generator_element(g.index).clone();
        let ei = graph.generator_element(g.inverse).clone();
        if seen_elems.contains(&e) || seen_elems.contains(&ei) {
            continue;
        }
        seen_elems.insert(e);
        seen_elems.insert(ei);
        reps.push(g.index);
    }
    reps
}

/// Colored left-right boundary and its two one-sided parts.
pub fn sigma_boundary(graph: &GroupGraph, y: &VertexSet) -> Result<SigmaBoundary> {
    if !graph.is_group() {
        return Err(Error::Unsupported("inversion unavailable on explicit graphs".into()));
    }
    let reps = positive_representatives(graph);
    // colour = (side, rep); edges {x, sigma x}
    let mut keys: HashSet<(u8, usize, Vertex, Vertex)> = HashSet::new();
    for (side, action) in [(0u8, Action::Left), (1u8, Action::Right)] {
        for &s in &reps {
            let sinv = graph.generators()[s].inverse;
            for v in y {
                for w in [graph.act(v, s, action)?, graph.act(v, sinv, action)?] {
                    if !y.contains(&w) {
                        let (a, b) = if *v < w { (v.clone(), w) } else { (w, v.clone()) };
                        keys.insert((side, s, a, b));
                    }
                }
            }
        }
    }
    let left = cut_pairs(graph, y, Action::Left)?;
    let right_via_inverse = cut_pairs(graph, &y.inverse(graph)?, Action::Left)?;
    Ok(SigmaBoundary { colored: keys.len() as u64, left, right_via_inverse })
}

/// Word ball `B(e, r)` by breadth-first search over right neighbors.
pub fn ball(graph: &GroupGraph, radius: usize, max_card: usize) -> Result<VertexSet> {
    Ok(IndexedBall::build(graph, radius, max_card)?.verts.into_iter().collect())
}

/// A word ball stored with integer ids and precomputed adjacency.
#[derive(Clone, Debug)]
pub struct IndexedBall {
    pub verts: Vec<Vertex>,
    pub index: HashMap<Vertex, u32>,
    pub dist: Vec<u32>,
    /// `adj[v][s]` is the id of `v s`, or `u32::MAX` when it lies outside the ball.
    pub adj: Vec<Vec<u32>>,
    pub radius: usize,
}

pub const OUTSIDE: u32 = u32::MAX;

impl IndexedBall {
    pub fn build(graph: &GroupGraph, radius: usize, max_card: usize) -> Result<Self> {
        Self::build_with(graph, radius, max_card, Action::Right)
    }

    pub fn build_with(
        graph: &GroupGraph,
        radius: usize,
        max_card: usize,
        action: Action,
    ) -> Result<Self> {
        let e = graph.identity();
        let mut verts = vec![e.clone()];
        let mut index = HashMap::new();
        index.insert(e, 0u32);
        let mut dist = vec![0u32];
        let mut nbr_cache: Vec<Vec<Vertex>> = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let nb: Vec<Vertex> =
                graph.neighbors(&verts[i], action)?.into_iter().map(|(_, w)| w).collect();
            if (dist[i] as usize) < radius {
                for w in &nb {
                    if !index.contains_key(w) {
                        if verts.len() >= max_card {
                            return Err(Error::Resource(format!(
                                "ball of radius {radius} exceeds {max_card} vertices"
                            )));
                        }
                        index.insert(w.clone(), verts.len() as u32);
                        verts.push(w.clone());
                        dist.push(dist[i] + 1);
                        queue.push_back(verts.len() - 1);
                    }
                }
            }
            if nbr_cache.len() <= i {
                nbr_cache.resize(i + 1, Vec::new());
            }
            nbr_cache[i] = nb;
        }
        let adj = nbr_cache
            .iter()
            .map(|nb| nb.iter().map(|w| index.get(w).copied().unwrap_or(OUTSIDE)).collect())
            .collect();
        Ok(IndexedBall { verts, index, dist, adj, radius })
    }

    pub fn len(&self) -> usize {
        self.verts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }
}

/// Heisenberg element `(x, y, z)`.
pub fn heis(x: i64, y: i64, z: i64) -> Vertex {
    Vertex(vec![x, y, z])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(pts: &[&[i64]]) -> VertexSet {
        pts.iter().map(|p| Vertex(p.to_vec())).collect()
    }

    #[test]
    fn axis_neighbors_of_origin() {
        let g = GroupGraph::zd_axis(2);
        assert_eq!(g.right_neighbors(&g.identity()).unwrap().len(), 4);
    }

    #[test]
    fn heisenberg_right_b() {
        let g = GroupGraph::heisenberg();
        let v = g.act(&heis(3, 4, 5), 2, Action::Right).unwrap();
        assert_eq!(v, heis(3, 5, 8));
    }

    #[test]
    fn lamplighter_toggle_at_cursor() {
        let g = GroupGraph::lamplighter(1);
        let v = g.act(&g.identity(), 2, Action::Right).unwrap();
        assert_eq!(v, Vertex(vec![0, 0, 1]));
        let w = g.act(&Vertex(vec![3]), 2, Action::Right).unwrap();
        assert_eq!(w, Vertex(vec![3, 3, 1]));
    }

    #[test]
    fn domino_boundaries() {
        let g = GroupGraph::zd_axis(2);
        let dom = set(&[&[0, 0], &[1, 0]]);
        assert_eq!(vertex_boundary(&g, &dom).unwrap().len(), 6);
        assert_eq!(edge_boundary(&g, &dom, EdgeMode::DirectedPairs).unwrap(), 6);
        assert_eq!(edge_boundary(&g, &dom, EdgeMode::UndirectedCut).unwrap(), 6);
        // generator order: +e1, -e1, +e2, -e2
        assert_eq!(per_generator_counts(&g, &dom).unwrap(), vec![1, 1, 2, 2]);
    }

    #[test]
    fn square_directed_count() {
        let g = GroupGraph::zd_axis(2);
        let sq: VertexSet = (0..3).flat_map(|x| (0..3).map(move |y| Vertex(vec![x, y]))).collect();
        assert_eq!(edge_boundary(&g, &sq, EdgeMode::DirectedPairs).unwrap(), 12);
    }

    #[test]
    fn torus_singleton() {
        let g = GroupGraph::torus(2, 3);
        let y = set(&[&[0, 0]]);
        assert_eq!(vertex_boundary(&g, &y).unwrap().len(), 4);
    }

    #[test]
    fn heisenberg_sigma_pair() {
        let g = GroupGraph::heisenberg();
        let y = set(&[&[0, 0, 0], &[1, 0, 0]]);
        let s = sigma_boundary(&g, &y).unwrap();
        assert_eq!((s.left, s.right_via_inverse, s.colored), (6, 6, 12));
    }

    #[test]
    fn balls() {
        let g = GroupGraph::zd_axis(2);
        assert_eq!(ball(&g, 0, 100).unwrap().len(), 1);
        assert_eq!(ball(&g, 1, 100).unwrap().len(), 5);
        assert_eq!(ball(&g, 2, 100).unwrap().len(), 13);
        let h = GroupGraph::heisenberg();
        let b1 = ball(&h, 1, 1000).unwrap().len();
        let b2 = ball(&h, 2, 1000).unwrap().len();
        assert_eq!(b1, 5);
        assert!(b2 > b1);
        assert!(matches!(ball(&h, 6, 50), Err(Error::Resource(_))));
    }

    #[test]
    fn inverses_are_inverses() {
        let fams = [
            GroupGraph::heisenberg(),
            GroupGraph::lamplighter(2),
            GroupGraph::semidirect(vec![vec![2, 1], vec![1, 1]]).unwrap(),
            GroupGraph::step2(3, 2, step2_example_omega()).unwrap(),
        ];
        for g in &fams {
            let b = ball(g, 3, 100_000).unwrap();
            for v in b.iter().take(60) {
                let vi = g.inverse(v).unwrap();
                assert_eq!(g.mul(v, &vi).unwrap(), g.identity());
                assert_eq!(g.mul(&vi, v).unwrap(), g.identity());
            }
        }
    }

    fn step2_example_omega() -> Vec<Vec<Vec<i64>>> {
        let mut w = vec![vec![vec![0, 0]; 3]; 3];
        w[0][1] = vec![1, 0];
        w[0][2] = vec![0, 1];
        w[1][2] = vec![1, 1];
        w
    }

    #[test]
    fn step2_rejects_lower_triangle() {
        let mut w = vec![vec![vec![0]; 2]; 2];
        w[1][0] = vec![1];
        assert!(GroupGraph::step2(2, 1, w).is_err());
    }

    #[test]
    fn explicit_has_no_inverse() {
        let g = GroupGraph::explicit(vec![vec![1], vec![0]]).unwrap();
        let y = set(&[&[0]]);
        assert!(matches!(sigma_boundary(&g, &y), Err(Error::Unsupported(_))));
        assert_eq!(edge_boundary(&g, &y, EdgeMode::DirectedPairs).unwrap(), 1);
    }

    #[test]
    fn bad_encoding_rejected() {
        let g = GroupGraph::lamplighter(1);
        assert!(g.neighbors(&Vertex(vec![0, 1]), Action::Right).is_err());
        assert!(g.neighbors(&Vertex(vec![0, 1, 2]), Action::Right).is_err());
    }

    #[test]
    fn family_json_roundtrip() {
        let js = r#"{"family":"semidirect","params":{"a":[[2,1],[1,1]]}}"#;
        let f: Family = serde_json::from_str(js).unwrap();
        assert!(GroupGraph::new(f.clone()).is_ok());
        let h: Family = serde_json::from_str(r#"{"family":"heisenberg"}"#).unwrap();
        assert_eq!(h, Family::Heisenberg);
    }
}
