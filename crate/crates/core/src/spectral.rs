//! Dirichlet eigenvalues, Cheeger and Faber–Krahn checks, a Nash ratio, and
//! continuous-time heat kernels and mixing times on discrete tori.

use std::collections::{BTreeSet, HashMap};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cayley::{vertex_boundary, Action, GroupGraph, Vertex, VertexSet};
use crate::error::{Error, Result};

/// Largest `|U|` handed to the dense eigen-solver.
pub const MAX_DIRICHLET: usize = 4000;

/// `L = I − P` restricted to `U`, with `P` the degree-normalized adjacency
/// counted with multiplicity.
pub fn dirichlet_matrix(graph: &GroupGraph, u: &VertexSet) -> Result<DMatrix<f64>> {
    if u.len() > MAX_DIRICHLET {
        return Err(Error::Resource(format!("|U| = {} exceeds {MAX_DIRICHLET}", u.len())));
    }
    let index: HashMap<&Vertex, usize> = u.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let n = u.len();
    let w = 1.0 / graph.degree() as f64;
    let mut m = DMatrix::identity(n, n);
    for (i, v) in u.iter().enumerate() {
        for (_, nb) in graph.neighbors(v, Action::Right)? {
            if let Some(&j) = index.get(&nb) {
                m[(i, j)] -= w;
            }
        }
    }
    Ok(m)
}

/// Smallest eigenvalue of the Dirichlet restriction.
pub fn dirichlet_lambda1(graph: &GroupGraph, u: &VertexSet) -> Result<f64> {
    if u.is_empty() {
        return Err(Error::Invalid("Dirichlet eigenvalue of the empty set".into()));
    }
    let m = dirichlet_matrix(graph, u)?;
    Ok(m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min))
}

/// Tensor closed form on an axis box in `Z^d`: `(1/d) Σ (1 − cos(π/(n_i+1)))`.
pub fn box_lambda1(sides: &[usize]) -> f64 {
    let d = sides.len() as f64;
    sides.iter().map(|&n| 1.0 - (std::f64::consts::PI / (n as f64 + 1.0)).cos()).sum::<f64>() / d
}

pub fn axis_box(sides: &[usize]) -> VertexSet {
    crate::curlfit::cells(sides).map(|x| Vertex(x.into_iter().map(|v| v as i64).collect())).collect()
}

/// `h∘(Y) = min_{∅≠Z⊆Y} |∂Z| / |Z|` by subset enumeration.
pub fn local_cheeger(graph: &GroupGraph, y: &VertexSet) -> Result<f64> {
    let elems: Vec<&Vertex> = y.iter().collect();
    if elems.is_empty() || elems.len() > 16 {
        return Err(Error::Resource("local Cheeger enumeration needs 1 <= |Y| <= 16".into()));
    }
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << elems.len()) {
        let z: VertexSet = (0..elems.len()).filter(|i| mask >> i & 1 == 1).map(|i| elems[i].clone()).collect();
        best = best.min(vertex_boundary(graph, &z)?.len() as f64 / z.len() as f64);
    }
    Ok(best)
}

fn canonical(graph: &GroupGraph, y: &VertexSet) -> Result<Vec<Vertex>> {
    let mut best: Option<Vec<Vertex>> = None;
    for g in y.iter() {
        let gi = graph.inverse(g)?;
        let shifted: BTreeSet<Vertex> = y.iter().map(|v| graph.mul(&gi, v)).collect::<Result<_>>()?;
        let cand: Vec<Vertex> = shifted.into_iter().collect();
        if best.as_ref().is_none_or(|b| cand < *b) {
            best = Some(cand);
        }
    }
    Ok(best.unwrap_or_default())
}

/// Connected sets containing the identity, one per left-translation class.
pub fn connected_sets(graph: &GroupGraph, max_size: usize) -> Result<Vec<VertexSet>> {
    let mut out: Vec<VertexSet> = Vec::new();
    let mut layer: BTreeSet<Vec<Vertex>> = [vec![graph.identity()]].into_iter().collect();
    for size in 1..=max_size {
        out.extend(layer.iter().map(|c| c.iter().cloned().collect::<VertexSet>()));
        if size == max_size {
            break;
        }
        let next: Vec<BTreeSet<Vec<Vertex>>> = layer
            .par_iter()
            .map(|c| {
                let y: VertexSet = c.iter().cloned().collect();
                let mut grown = BTreeSet::new();
                for v in vertex_boundary(graph, &y)?.iter() {
                    let mut z = y.clone();
                    z.insert(v.clone());
                    grown.insert(canonical(graph, &z)?);
                }
                Ok(grown)
            })
            .collect::<Result<_>>()?;
        layer = next.into_iter().flatten().collect();
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct CheegerRow {
    pub size: usize,
    pub lambda1: f64,
    pub cheeger: f64,
    /// `h∘(Y)² / (2Δ²)`.
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheegerReport {
    pub sets: usize,
    pub degree: usize,
    pub violations: Vec<CheegerRow>,
    /// Smallest `λ₁ᴰ(Y) / bound` seen.
    pub tightest: f64,
}

impl CheegerReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `λ₁ᴰ(Y) ≥ h∘(Y)² / (2Δ²)` on every connected `Y` with `|Y| ≤ max_size`.
pub fn cheeger_fk_check(graph: &GroupGraph, max_size: usize) -> Result<CheegerReport> {
    let sets = connected_sets(graph, max_size)?;
    let delta = graph.degree() as f64;
    let rows: Vec<CheegerRow> = sets
        .par_iter()
        .map(|y| {
            let lambda1 = dirichlet_lambda1(graph, y)?;
            let cheeger = local_cheeger(graph, y)?;
            Ok(CheegerRow { size: y.len(), lambda1, cheeger, bound: cheeger * cheeger / (2.0 * delta * delta) })
        })
        .collect::<Result<_>>()?;
    let tightest = rows.iter().map(|r| r.lambda1 / r.bound).fold(f64::INFINITY, f64::min);
    let violations = rows.into_iter().filter(|r| r.lambda1 < r.bound * (1.0 - 1e-12)).collect();
    Ok(CheegerReport { sets: sets.len(), degree: graph.degree(), violations, tightest })
}

#[derive(Clone, Debug, Serialize)]
pub struct FkRow {
    pub side: usize,
    pub volume: usize,
    pub lambda1: f64,
    pub closed_form: f64,
    /// `(C_iso/Δ)² / 2 · |U|^{−2/d}` with `C_iso = 2d`.
    pub bound: f64,
}

/// Faber–Krahn on cubes of side `n` in `Z^d`; dense eigenvalues when `n^d ≤ dense_max`.
pub fn fk_box_check(d: usize, sides: &[usize], dense_max: usize) -> Result<Vec<FkRow>> {
    let graph = GroupGraph::zd_axis(d);
    let c_iso = 2.0 * d as f64;
    let delta = 2.0 * d as f64;
    sides
        .par_iter()
        .map(|&n| {
            let shape = vec![n; d];
            let volume = n.pow(d as u32);
            let closed_form = box_lambda1(&shape);
            let lambda1 = if volume <= dense_max { dirichlet_lambda1(&graph, &axis_box(&shape))? } else { closed_form };
            let bound = (c_iso / delta).powi(2) / 2.0 * (volume as f64).powf(-2.0 / d as f64);
            Ok(FkRow { side: n, volume, lambda1, closed_form, bound })
        })
        .collect()
}

/// `ℰ(f, f) = (1/2Δ) Σ_x Σ_s (f(xs) − f(x))²` for finitely supported `f`.
pub fn dirichlet_form(graph: &GroupGraph, f: &HashMap<Vertex, f64>) -> Result<f64> {
    let delta = graph.degree() as f64;
    let mut sum = 0.0;
    let mut outside: BTreeSet<Vertex> = BTreeSet::new();
    for (x, &fx) in f {
        for (_, y) in graph.neighbors(x, Action::Right)? {
            let fy = f.get(&y).copied().unwrap_or_else(|| {
                outside.insert(y.clone());
                0.0
            });
            sum += (fy - fx) * (fy - fx);
        }
    }
    // pairs (y, s) with y off the support and ys on it
    for y in &outside {
        for (_, x) in graph.neighbors(y, Action::Right)? {
            if let Some(&fx) = f.get(&x) {
                sum += fx * fx;
            }
        }
    }
    Ok(sum / (2.0 * delta))
}

/// `‖f‖₂^{2+4/Q} / (ℰ(f,f) ‖f‖₁^{4/Q})`.
pub fn nash_ratio(graph: &GroupGraph, f: &HashMap<Vertex, f64>, q: f64) -> Result<f64> {
    let l1: f64 = f.values().map(|v| v.abs()).sum();
    if l1 == 0.0 {
        return Err(Error::Invalid("Nash ratio of the zero function".into()));
    }
    let l2sq: f64 = f.values().map(|v| v * v).sum();
    let e = dirichlet_form(graph, f)?;
    Ok(l2sq.powf(1.0 + 2.0 / q) / (e * l1.powf(4.0 / q)))
}

#[derive(Clone, Debug, Serialize)]
pub struct NashReport {
    pub trials: usize,
    /// Smallest `K` making every sampled ratio at most one.
    pub fitted_k: f64,
    pub spike: f64,
    pub indicator: f64,
    /// `(Δ / C_iso)²` with `C_iso = 2d`.
    pub reference: f64,
}

/// Random functions on a cube of side `side` in `Z^d`: half nonnegative, half
/// with their mean removed.
pub fn nash_check<R: Rng>(d: usize, side: usize, trials: usize, rng: &mut R) -> Result<NashReport> {
    let graph = GroupGraph::zd_axis(d);
    let q = d as f64;
    let cube: Vec<Vertex> = axis_box(&vec![side; d]).iter().cloned().collect();
    let mut fitted: f64 = 0.0;
    for trial in 0..trials {
        let mut vals: Vec<f64> = cube.iter().map(|_| rng.gen::<f64>()).collect();
        if trial % 2 == 1 {
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            vals.iter_mut().for_each(|v| *v -= mean);
        }
        let f: HashMap<Vertex, f64> = cube.iter().cloned().zip(vals).collect();
        fitted = fitted.max(nash_ratio(&graph, &f, q)?);
    }
    let spike = nash_ratio(&graph, &[(graph.identity(), 1.0)].into_iter().collect(), q)?;
    let indicator = nash_ratio(&graph, &cube.iter().map(|v| (v.clone(), 1.0)).collect(), q)?;
    let delta = 2.0 * d as f64;
    Ok(NashReport {
        trials,
        fitted_k: fitted.max(spike).max(indicator),
        spike,
        indicator,
        reference: (delta / (2.0 * d as f64)).powi(2),
    })
}

// ---------------------------------------------------------------------------
// Tori

/// `(Z_m)^d` with the axis generators, continuous-time walk `e^{−tL}`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TorusSpectrum {
    pub d: usize,
    pub m: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    Tv,
    Linf,
}

impl TorusSpectrum {
    pub fn new(d: usize, m: usize) -> Result<Self> {
        if d == 0 || m < 2 {
            return Err(Error::Invalid("torus needs d >= 1 and m >= 2".into()));
        }
        Ok(Self { d, m })
    }

    /// `λ(k) = 1 − cos(2πk/m)`.
    pub fn eigenvalue_1d(&self, k: usize) -> f64 {
        1.0 - (2.0 * std::f64::consts::PI * k as f64 / self.m as f64).cos()
    }

    /// Spectral gap of `L = (1/d) Σ L_i`.
    pub fn gap(&self) -> f64 {
        self.eigenvalue_1d(1) / self.d as f64
    }

    /// One-coordinate kernel at time `s`, indexed by displacement.
    pub fn kernel_1d(&self, s: f64) -> Vec<f64> {
        let m = self.m;
        (0..m)
            .map(|x| {
                (0..m)
                    .map(|k| {
                        let a = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                        (-s * self.eigenvalue_1d(k)).exp() * (a * x as f64).cos()
                    })
                    .sum::<f64>()
                    / m as f64
            })
            .collect()
    }

    /// `p_t(0, x) = Π_i q_{t/d}(x_i)`, row-major.
    pub fn kernel(&self, t: f64) -> Vec<f64> {
        let q = self.kernel_1d(t / self.d as f64);
        let shape = vec![self.m; self.d];
        crate::curlfit::cells(&shape).map(|x| x.iter().map(|&i| q[i]).product()).collect()
    }

    pub fn distance(&self, t: f64, dist: Distance) -> f64 {
        let q = self.kernel_1d(t / self.d as f64);
        let n = (self.m as f64).powi(self.d as i32);
        let shape = vec![self.m; self.d];
        let terms = crate::curlfit::cells(&shape).map(|x| x.iter().map(|&i| q[i]).product::<f64>());
        match dist {
            Distance::Tv => terms.map(|p| (p - 1.0 / n).abs()).sum::<f64>() / 2.0,
            Distance::Linf => terms.map(|p| (n * p - 1.0).abs()).fold(0.0, f64::max),
        }
    }

    /// Smallest `t` with distance `≤ eps`, by bisection.
    pub fn mixing_time(&self, eps: f64, dist: Distance) -> f64 {
        let mut hi = 1.0;
        while self.distance(hi, dist) > eps {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.distance(mid, dist) > eps {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        hi
    }
}

/// `e^{−tL}` row of the identity from a dense eigen-decomposition of the full
/// generator, for cross-checking the factorized kernel.
pub fn dense_torus_kernel(d: usize, m: usize, t: f64) -> Result<Vec<f64>> {
    let n = m.pow(d as u32);
    if n > MAX_DIRICHLET {
        return Err(Error::Resource(format!("dense torus kernel on {n} states")));
    }
    let graph = GroupGraph::torus(d, m as u32);
    let states: Vec<Vertex> = crate::curlfit::cells(&vec![m; d]).map(|x| Vertex(x.into_iter().map(|v| v as i64).collect())).collect();
    let index: HashMap<&Vertex, usize> = states.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let w = 1.0 / graph.degree() as f64;
    let mut l = DMatrix::identity(n, n);
    for (i, v) in states.iter().enumerate() {
        for (_, nb) in graph.neighbors(v, Action::Right)? {
            l[(i, index[&nb])] -= w;
        }
    }
    let eig: SymmetricEigen<f64, nalgebra::Dyn> = SymmetricEigen::new(l);
    let v = &eig.eigenvectors;
    Ok((0..n)
        .map(|j| (0..n).map(|k| v[(0, k)] * (-t * eig.eigenvalues[k]).exp() * v[(j, k)]).sum::<f64>())
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct MixingRow {
    pub m: usize,
    pub t_mix: f64,
    /// `log 2 / λ₁`.
    pub relaxation_bound: f64,
    /// `m²` for `d ≥ 3`, `m² log m` for `d = 2`, `m²` for `d = 1`.
    pub model: f64,
    pub ratio: f64,
    pub ratio_m2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MixingTable {
    pub d: usize,
    pub eps: f64,
    pub distance: Distance,
    pub rows: Vec<MixingRow>,
    /// Least-squares slope of `log t_mix` against `log m`.
    pub slope: f64,
    /// `(max − min) / max` of `ratio`.
    pub drift: f64,
    pub drift_m2: f64,
    pub relaxation_holds: bool,
}

fn drift(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = v.clone().fold(f64::NEG_INFINITY, f64::max);
    let min = v.fold(f64::INFINITY, f64::min);
    (max - min) / max
}

pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

pub fn torus_mixing(d: usize, ms: &[usize], eps: f64, distance: Distance) -> Result<MixingTable> {
    if ms.len() < 2 {
        return Err(Error::Invalid("need at least two torus sizes".into()));
    }
    if distance == Distance::Tv && ms.iter().any(|&m| m > 48) {
        return Err(Error::Resource("TV mixing is computed for m <= 48".into()));
    }
    let rows: Vec<MixingRow> = ms
        .par_iter()
        .map(|&m| {
            let torus = TorusSpectrum::new(d, m)?;
            let t_mix = torus.mixing_time(eps, distance);
            let mf = m as f64;
            let model = if d == 2 { mf * mf * mf.ln() } else { mf * mf };
            Ok(MixingRow {
                m,
                t_mix,
                relaxation_bound: std::f64::consts::LN_2 / torus.gap(),
                model,
                ratio: t_mix / model,
                ratio_m2: t_mix / (mf * mf),
            })
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.m as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.t_mix).collect();
    Ok(MixingTable {
        d,
        eps,
        distance,
        slope: loglog_slope(&xs, &ys),
        drift: drift(rows.iter().map(|r| r.ratio)),
        drift_m2: drift(rows.iter().map(|r| r.ratio_m2)),
        relaxation_holds: rows.iter().all(|r| r.t_mix >= r.relaxation_bound * (1.0 - 1e-9)),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn singleton_and_intervals() {
        let z = GroupGraph::zd_axis(1);
        let one: VertexSet = [Vertex(vec![0])].into_iter().collect();
        assert!((dirichlet_lambda1(&z, &one).unwrap() - 1.0).abs() < 1e-14);
        for n in [2, 5, 17] {
            let u = axis_box(&[n]);
            let exact = 1.0 - (std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((dirichlet_lambda1(&z, &u).unwrap() - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn boxes_tensorize() {
        let z2 = GroupGraph::zd_axis(2);
        for (a, b) in [(3, 3), (4, 7), (10, 10)] {
            let got = dirichlet_lambda1(&z2, &axis_box(&[a, b])).unwrap();
            assert!((got - box_lambda1(&[a, b])).abs() < 1e-12);
        }
        let mut prev = f64::INFINITY;
        for n in 1..8 {
            let l = dirichlet_lambda1(&z2, &axis_box(&[n, n])).unwrap();
            assert!(l < prev);
            prev = l;
        }
    }

    #[test]
    fn polyomino_counts() {
        let z2 = GroupGraph::zd_axis(2);
        let sets = connected_sets(&z2, 5).unwrap();
        let mut by_size = [0usize; 6];
        sets.iter().for_each(|s| by_size[s.len()] += 1);
        assert_eq!(by_size[1..], [1, 2, 6, 19, 63]);
    }

    #[test]
    fn cheeger_small_window() {
        let z2 = GroupGraph::zd_axis(2);
        let rep = cheeger_fk_check(&z2, 5).unwrap();
        assert!(rep.holds());
        let one: VertexSet = [Vertex(vec![0, 0])].into_iter().collect();
        assert_eq!(local_cheeger(&z2, &one).unwrap(), 4.0);
        let h = GroupGraph::heisenberg();
        assert!(cheeger_fk_check(&h, 4).unwrap().holds());
    }

    #[test]
    fn faber_krahn_on_squares() {
        let rows = fk_box_check(2, &[1, 2, 5, 10, 20, 40], 400).unwrap();
        for r in &rows {
            assert!(r.lambda1 >= r.bound);
            assert!((r.lambda1 - r.closed_form).abs() < 1e-12);
        }
    }

    #[test]
    fn nash_closed_forms() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let rep = nash_check(2, 6, 20, &mut rng).unwrap();
        assert!((rep.spike - 1.0).abs() < 1e-12);
        // indicator of an n^d cube: ratio 1/n
        assert!((rep.indicator - 1.0 / 6.0).abs() < 1e-12);
        assert!(rep.fitted_k >= rep.spike);
        let z = GroupGraph::zd_axis(2);
        assert!(nash_ratio(&z, &HashMap::new(), 2.0).is_err());
    }

    #[test]
    fn factorized_kernel_matches_dense() {
        let torus = TorusSpectrum::new(2, 6).unwrap();
        for t in [0.0, 0.3, 2.0, 11.0] {
            let fact = torus.kernel(t);
            let dense: Vec<f64> = dense_torus_kernel(2, 6, t).unwrap();
            for (a, b) in fact.iter().zip(&dense) {
                assert!((a - b).abs() < 1e-10, "t={t}");
            }
            assert!((fact.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(fact.iter().all(|&p| p >= -1e-15));
        }
        // m = 2: both generators of an axis reach the same neighbour
        let small = TorusSpectrum::new(3, 2).unwrap();
        let dense: Vec<f64> = dense_torus_kernel(3, 2, 0.7).unwrap();
        for (a, b) in small.kernel(0.7).iter().zip(&dense) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn mixing_slopes() {
        let three = torus_mixing(3, &[8, 12, 16, 24], 0.25, Distance::Tv).unwrap();
        assert!(three.relaxation_holds);
        assert!((1.8..=2.2).contains(&three.slope), "{}", three.slope);
        let two = torus_mixing(2, &[8, 16, 24, 32, 40], 0.25, Distance::Tv).unwrap();
        assert!(two.relaxation_holds);
        // t_mix / m² is flat on the 2D torus
        assert!(two.drift_m2 < 0.1, "{}", two.drift_m2);
        assert!(torus_mixing(2, &[8, 64], 0.25, Distance::Tv).is_err());
    }
}
