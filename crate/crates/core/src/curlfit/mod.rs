//! Cochains on rectangular grids, lexicographic homotopies, ℓ¹ curl fitting and
//! exact filling constants.
//!
//! Axes are 0-based. Edge `(i, x)` joins `x` and `x + e_i`; face `(j, k, x)` with
//! `j < k` spans `x, x + e_j, x + e_k, x + e_j + e_k`. All values are exact rationals.

pub mod simplex;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use simplex::q;

pub type Q = BigRational;

/// Largest edge count accepted by [`fill1_exact`].
pub const FILL1_MAX_EDGES: usize = 60;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridComplex {
    n: Vec<usize>,
}

impl GridComplex {
    pub fn new(n: Vec<usize>) -> Result<Self> {
        if n.is_empty() || n.contains(&0) {
            return Err(Error::Invalid("grid sides must be positive".into()));
        }
        Ok(Self { n })
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn sides(&self) -> &[usize] {
        &self.n
    }

    /// Ordered pairs `(j, k)` with `j < k`, the component order of 2-cochains.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let d = self.dim();
        (0..d).flat_map(|j| (j + 1..d).map(move |k| (j, k))).collect()
    }

    /// Box shape of the cells obtained by shortening the listed axes by one.
    fn shape(&self, reduced: &[usize]) -> Vec<usize> {
        self.n
            .iter()
            .enumerate()
            .map(|(i, &v)| if reduced.contains(&i) { v.saturating_sub(1) } else { v })
            .collect()
    }

    /// Shapes of the components of a `degree`-cochain.
    pub fn shapes(&self, degree: usize) -> Vec<Vec<usize>> {
        match degree {
            0 => vec![self.shape(&[])],
            1 => (0..self.dim()).map(|i| self.shape(&[i])).collect(),
            _ => self.pairs().into_iter().map(|(j, k)| self.shape(&[j, k])).collect(),
        }
    }

    pub fn cell_count(&self, degree: usize) -> usize {
        self.shapes(degree).iter().map(|s| s.iter().product::<usize>()).sum()
    }

    pub fn zero(&self, degree: usize) -> Cochain {
        let comps = self
            .shapes(degree)
            .iter()
            .map(|s| vec![Q::zero(); s.iter().product()])
            .collect();
        Cochain { degree, n: self.n.clone(), comps }
    }

    /// `C↑` for the natural axis order: `max_{k ≥ 1} (N_k − 1) Π_{i>k} N_i`.
    pub fn c_up(&self) -> u64 {
        (1..self.dim()).map(|k| self.pair_coefficient(k)).max().unwrap_or(0)
    }

    /// `C↑` after relabelling axes so that new axis `a` is old axis `order[a]`.
    pub fn c_up_ordered(&self, order: &[usize]) -> Result<u64> {
        Ok(self.permuted(order)?.c_up())
    }

    /// `(N_k − 1) Π_{i>k} N_i`, the operator coefficient of every `(j, k)` block.
    pub fn pair_coefficient(&self, k: usize) -> u64 {
        let tail: u64 = self.n[k + 1..].iter().map(|&v| v as u64).product();
        (self.n[k] as u64 - 1) * tail
    }

    fn permuted(&self, order: &[usize]) -> Result<Self> {
        check_order(order, self.dim())?;
        Ok(Self { n: order.iter().map(|&a| self.n[a]).collect() })
    }

    fn check(&self, c: &Cochain, degree: usize) -> Result<()> {
        if c.degree != degree || c.n != self.n {
            return Err(Error::Invalid(format!(
                "expected a {degree}-cochain on {:?}, got degree {} on {:?}",
                self.n, c.degree, c.n
            )));
        }
        Ok(())
    }

    /// `(d⁰u)_i(x) = u(x + e_i) − u(x)`.
    pub fn d0(&self, u: &Cochain) -> Result<Cochain> {
        self.check(u, 0)?;
        let vshape = self.shape(&[]);
        let mut out = self.zero(1);
        for (i, comp) in out.comps.iter_mut().enumerate() {
            let eshape = self.shape(&[i]);
            for (slot, x) in cells(&eshape).enumerate() {
                let mut y = x.clone();
                y[i] += 1;
                comp[slot] = &u.comps[0][flat(&vshape, &y)] - &u.comps[0][flat(&vshape, &x)];
            }
        }
        Ok(out)
    }

    /// `(d¹c)_{jk}(x) = c_j(x) + c_k(x + e_j) − c_j(x + e_k) − c_k(x)`.
    pub fn d1(&self, c: &Cochain) -> Result<Cochain> {
        self.check(c, 1)?;
        let mut out = self.zero(2);
        for (p, (j, k)) in self.pairs().into_iter().enumerate() {
            let fshape = self.shape(&[j, k]);
            let (sj, sk) = (self.shape(&[j]), self.shape(&[k]));
            for (slot, x) in cells(&fshape).enumerate() {
                let mut xj = x.clone();
                xj[j] += 1;
                let mut xk = x.clone();
                xk[k] += 1;
                let v = &c.comps[j][flat(&sj, &x)] + &c.comps[k][flat(&sk, &xj)]
                    - &c.comps[j][flat(&sj, &xk)]
                    - &c.comps[k][flat(&sk, &x)];
                out.comps[p][slot] = v;
            }
        }
        Ok(out)
    }

    /// Lexicographic potential `(H¹c)(x) = Σ_i Σ_{t < x_i} c_i(x_1, …, x_{i−1}, t, 0, …, 0)`.
    pub fn h1(&self, c: &Cochain) -> Result<Cochain> {
        self.check(c, 1)?;
        let vshape = self.shape(&[]);
        let mut out = self.zero(0);
        for (slot, x) in cells(&vshape).enumerate() {
            let mut acc = Q::zero();
            for i in 0..self.dim() {
                let es = self.shape(&[i]);
                let mut y = x.clone();
                y[i + 1..].iter_mut().for_each(|v| *v = 0);
                for t in 0..x[i] {
                    y[i] = t;
                    acc += &c.comps[i][flat(&es, &y)];
                }
            }
            out.comps[0][slot] = acc;
        }
        Ok(out)
    }

    /// `(H²↑b)_j(x) = −Σ_{k>j} Σ_{t<x_k} b_{jk}(x_1, …, x_{k−1}, t, 0, …, 0)`.
    pub fn h2_up(&self, b: &Cochain) -> Result<Cochain> {
        self.h2(b, true)
    }

    /// `(H²↓b)_j(x) = Σ_{k<j} Σ_{t<x_k} b_{kj}(x_1, …, x_{k−1}, t, 0, …, 0)`.
    pub fn h2_down(&self, b: &Cochain) -> Result<Cochain> {
        self.h2(b, false)
    }

    fn h2(&self, b: &Cochain, up: bool) -> Result<Cochain> {
        self.check(b, 2)?;
        let pairs = self.pairs();
        let mut out = self.zero(1);
        for (j, comp) in out.comps.iter_mut().enumerate() {
            let eshape = self.shape(&[j]);
            for (slot, x) in cells(&eshape).enumerate() {
                let mut acc = Q::zero();
                for (p, &(a, bb)) in pairs.iter().enumerate() {
                    let k = match (up, a == j, bb == j) {
                        (true, true, _) => bb,
                        (false, _, true) => a,
                        _ => continue,
                    };
                    let fs = self.shape(&[a, bb]);
                    let mut y = x.clone();
                    y[k + 1..].iter_mut().for_each(|v| *v = 0);
                    for t in 0..x[k] {
                        y[k] = t;
                        acc += &b.comps[p][flat(&fs, &y)];
                    }
                }
                comp[slot] = if up { -acc } else { acc };
            }
        }
        Ok(out)
    }

    /// Right-hand side of the anisotropic bound `Σ_{j<k} (N_k − 1) Π_{i>k} N_i ‖b_{jk}‖₁`.
    pub fn anisotropic_bound(&self, b: &Cochain) -> Result<Q> {
        self.check(b, 2)?;
        Ok(self
            .pairs()
            .iter()
            .zip(&b.comps)
            .map(|(&(_, k), comp)| q(self.pair_coefficient(k) as i64) * l1(comp))
            .fold(Q::zero(), |s, v| s + v))
    }

    /// Relabel a 0- or 1-cochain so that new axis `a` is old axis `order[a]`.
    fn permute_cochain(&self, c: &Cochain, order: &[usize]) -> Result<Cochain> {
        let target = self.permuted(order)?;
        let mut out = target.zero(c.degree);
        match c.degree {
            0 => {
                let (src, dst) = (self.shape(&[]), target.shape(&[]));
                for (slot, x) in cells(&dst).enumerate() {
                    out.comps[0][slot] = c.comps[0][flat(&src, &unpermute(&x, order))].clone();
                }
            }
            1 => {
                for (a, comp) in out.comps.iter_mut().enumerate() {
                    let (src, dst) = (self.shape(&[order[a]]), target.shape(&[a]));
                    for (slot, x) in cells(&dst).enumerate() {
                        comp[slot] = c.comps[order[a]][flat(&src, &unpermute(&x, order))].clone();
                    }
                }
            }
            _ => return Err(Error::Unsupported("only 0- and 1-cochains are relabelled".into())),
        }
        Ok(out)
    }

    fn unpermute_cochain(&self, c: &Cochain, order: &[usize]) -> Result<Cochain> {
        let mut inv = vec![0; order.len()];
        for (a, &o) in order.iter().enumerate() {
            inv[o] = a;
        }
        self.permuted(order)?.permute_cochain(c, &inv)
    }
}

fn check_order(order: &[usize], d: usize) -> Result<()> {
    let mut seen = vec![false; d];
    if order.len() != d || order.iter().any(|&a| a >= d || std::mem::replace(&mut seen[a], true)) {
        return Err(Error::Invalid(format!("{order:?} is not a permutation of 0..{d}")));
    }
    Ok(())
}

/// Old coordinates of the point with new coordinates `x`.
fn unpermute(x: &[usize], order: &[usize]) -> Vec<usize> {
    let mut y = vec![0; x.len()];
    for (a, &o) in order.iter().enumerate() {
        y[o] = x[a];
    }
    y
}

/// Row-major index, last axis fastest.
pub fn flat(shape: &[usize], x: &[usize]) -> usize {
    shape.iter().zip(x).fold(0, |acc, (&s, &v)| acc * s + v)
}

/// All points of a box in row-major order.
pub fn cells(shape: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = shape.iter().product();
    (0..total).map(move |mut idx| {
        let mut x = vec![0; shape.len()];
        for a in (0..shape.len()).rev() {
            x[a] = idx % shape[a];
            idx /= shape[a];
        }
        x
    })
}

fn l1(v: &[Q]) -> Q {
    v.iter().map(|x| x.abs()).fold(Q::zero(), |s, x| s + x)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cochain {
    pub degree: usize,
    pub n: Vec<usize>,
    /// One flat vector per axis (degree 1) or per pair `j < k` (degree 2).
    pub comps: Vec<Vec<Q>>,
}

impl Cochain {
    pub fn l1(&self) -> Q {
        self.comps.iter().map(|c| l1(c)).fold(Q::zero(), |s, v| s + v)
    }

    /// `Σ_a w_a ‖c_a‖₁` with one weight per component.
    pub fn weighted_l1(&self, w: &[Q]) -> Result<Q> {
        if w.len() != self.comps.len() {
            return Err(Error::Invalid("one weight per component required".into()));
        }
        Ok(self.comps.iter().zip(w).map(|(c, w)| w * l1(c)).fold(Q::zero(), |s, v| s + v))
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().flatten().all(Zero::is_zero)
    }

    pub fn sub(&self, other: &Cochain) -> Result<Cochain> {
        if self.degree != other.degree || self.n != other.n {
            return Err(Error::Invalid("cochains live on different spaces".into()));
        }
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Ok(Cochain { degree: self.degree, n: self.n.clone(), comps })
    }

    pub fn flat_values(&self) -> impl Iterator<Item = &Q> {
        self.comps.iter().flatten()
    }

    /// Value at a global index (components concatenated in order).
    pub fn get_mut(&mut self, mut index: usize) -> Result<&mut Q> {
        for comp in self.comps.iter_mut() {
            if index < comp.len() {
                return Ok(&mut comp[index]);
            }
            index -= comp.len();
        }
        Err(Error::Invalid("cochain index out of range".into()))
    }

    /// Set one cell, addressed by component and base point.
    pub fn set(&mut self, comp: usize, x: &[usize], v: Q) -> Result<()> {
        let grid = GridComplex::new(self.n.clone())?;
        let shape = grid
            .shapes(self.degree)
            .into_iter()
            .nth(comp)
            .ok_or_else(|| Error::Invalid(format!("component {comp} out of range")))?;
        if x.len() != shape.len() || x.iter().zip(&shape).any(|(a, s)| a >= s) {
            return Err(Error::Invalid(format!("cell {x:?} outside component shape {shape:?}")));
        }
        self.comps[comp][flat(&shape, x)] = v;
        Ok(())
    }

    pub fn to_json(&self) -> Result<CochainJson> {
        let entries = self
            .flat_values()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, v)| {
                let num = v.numer().to_i64();
                let den = v.denom().to_i64();
                match (num, den) {
                    (Some(n), Some(d)) => Ok((i, n, d)),
                    _ => Err(Error::Encoding(format!("entry {i} does not fit in 64 bits"))),
                }
            })
            .collect::<Result<_>>()?;
        Ok(CochainJson { degree: self.degree, n: self.n.clone(), entries })
    }

    pub fn from_json(j: &CochainJson) -> Result<Self> {
        if j.degree > 2 {
            return Err(Error::Encoding(format!("degree {} not in 0..=2", j.degree)));
        }
        let grid = GridComplex::new(j.n.clone()).map_err(|e| Error::Encoding(e.to_string()))?;
        let mut c = grid.zero(j.degree);
        for &(i, num, den) in &j.entries {
            if den == 0 {
                return Err(Error::Encoding(format!("entry {i} has zero denominator")));
            }
            *c.get_mut(i).map_err(|e| Error::Encoding(e.to_string()))? =
                Q::new(BigInt::from(num), BigInt::from(den));
        }
        Ok(c)
    }
}

/// Sparse exchange form: `(global index, numerator, denominator)` triples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CochainJson {
    pub degree: usize,
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    pub entries: Vec<(usize, i64, i64)>,
}

#[derive(Clone, Debug)]
pub struct CurlFit {
    pub h: Cochain,
    pub residual: Cochain,
    pub residual_l1: Q,
    pub curl_l1: Q,
    pub c_up: u64,
}

impl CurlFit {
    pub fn bound(&self) -> Q {
        q(self.c_up as i64) * &self.curl_l1
    }

    pub fn within_bound(&self) -> bool {
        self.residual_l1 <= self.bound()
    }
}

/// Fit `h = H¹c`; the residual `c − dh` equals `H²↑(dc)`.
pub fn curl_fit(grid: &GridComplex, c: &Cochain) -> Result<CurlFit> {
    let h = grid.h1(c)?;
    let residual = c.sub(&grid.d0(&h)?)?;
    Ok(CurlFit {
        residual_l1: residual.l1(),
        curl_l1: grid.d1(c)?.l1(),
        c_up: grid.c_up(),
        h,
        residual,
    })
}

/// Curl fit after relabelling axes by `order`; results are mapped back.
pub fn curl_fit_ordered(grid: &GridComplex, c: &Cochain, order: &[usize]) -> Result<CurlFit> {
    grid.check(c, 1)?;
    let pg = grid.permuted(order)?;
    let fit = curl_fit(&pg, &grid.permute_cochain(c, order)?)?;
    Ok(CurlFit {
        h: grid.unpermute_cochain(&fit.h, order)?,
        residual: grid.unpermute_cochain(&fit.residual, order)?,
        ..fit
    })
}

#[derive(Clone, Debug)]
pub struct WeightedFit {
    pub residual_weighted: Q,
    pub curl_weighted: Q,
    pub constant: Q,
}

impl WeightedFit {
    pub fn bound(&self) -> Q {
        &self.constant * &self.curl_weighted
    }

    pub fn holds(&self) -> bool {
        self.residual_weighted <= self.bound()
    }
}

/// `max_{j<k} (α_j / β_{jk}) (N_k − 1) Π_{i>k} N_i`.
pub fn weighted_constant(grid: &GridComplex, alpha: &[Q], beta: &[Q]) -> Result<Q> {
    check_weights(grid, alpha, beta)?;
    Ok(grid
        .pairs()
        .iter()
        .zip(beta)
        .map(|(&(j, k), b)| &alpha[j] / b * q(grid.pair_coefficient(k) as i64))
        .fold(Q::zero(), |m, v| if v > m { v } else { m }))
}

fn check_weights(grid: &GridComplex, alpha: &[Q], beta: &[Q]) -> Result<()> {
    if alpha.len() != grid.dim() || beta.len() != grid.pairs().len() {
        return Err(Error::Invalid("need one edge weight per axis and one face weight per pair".into()));
    }
    if alpha.iter().chain(beta).any(|w| !w.is_positive()) {
        return Err(Error::Invalid("weights must be positive".into()));
    }
    Ok(())
}

pub fn weighted_curl_fit(grid: &GridComplex, c: &Cochain, alpha: &[Q], beta: &[Q]) -> Result<WeightedFit> {
    let constant = weighted_constant(grid, alpha, beta)?;
    let fit = curl_fit(grid, c)?;
    Ok(WeightedFit {
        residual_weighted: fit.residual.weighted_l1(alpha)?,
        curl_weighted: grid.d1(c)?.weighted_l1(beta)?,
        constant,
    })
}

#[derive(Clone, Debug)]
pub struct Fill1 {
    pub value: Q,
    pub preimage: Cochain,
    /// Dual 2-cochain `y` with `‖(d¹)ᵀy‖_∞ ≤ 1` and `⟨b, y⟩ = value`.
    pub dual: Cochain,
    pub certified: bool,
    pub pivots: usize,
}

/// Minimal `‖R‖₁` subject to `d¹R = b`, by exact simplex on `R = P − N`.
pub fn fill1_exact(grid: &GridComplex, b: &Cochain) -> Result<Fill1> {
    grid.check(b, 2)?;
    let edges = grid.cell_count(1);
    if edges > FILL1_MAX_EDGES {
        return Err(Error::Resource(format!("{edges} edges exceeds the LP limit {FILL1_MAX_EDGES}")));
    }
    let faces = grid.cell_count(2);
    // columns of d¹ from unit 1-cochains
    let mut d1 = vec![vec![Q::zero(); edges]; faces];
    for e in 0..edges {
        let mut unit = grid.zero(1);
        *unit.get_mut(e)? = Q::one();
        for (f, v) in grid.d1(&unit)?.flat_values().enumerate() {
            d1[f][e] = v.clone();
        }
    }
    let a: Vec<Vec<Q>> = d1
        .iter()
        .map(|row| row.iter().cloned().chain(row.iter().map(|v| -v)).collect())
        .collect();
    let rhs: Vec<Q> = b.flat_values().cloned().collect();
    let sol = simplex::solve(&a, &rhs, &vec![Q::one(); 2 * edges])
        .map_err(|e| match e {
            Error::Infeasible(_) => Error::Infeasible("target is not in the image of d1".into()),
            other => other,
        })?;
    let mut preimage = grid.zero(1);
    for e in 0..edges {
        *preimage.get_mut(e)? = &sol.x[e] - &sol.x[edges + e];
    }
    let mut dual = grid.zero(2);
    for (f, y) in sol.y.iter().enumerate() {
        *dual.get_mut(f)? = y.clone();
    }
    let dual_feasible = (0..edges).all(|e| {
        let s = (0..faces).map(|f| &d1[f][e] * &sol.y[f]).fold(Q::zero(), |s, v| s + v);
        s.abs() <= Q::one()
    });
    let pairing = rhs.iter().zip(&sol.y).map(|(b, y)| b * y).fold(Q::zero(), |s, v| s + v);
    let certified = dual_feasible && pairing == sol.value && grid.d1(&preimage)? == *b;
    Ok(Fill1 { value: sol.value, preimage, dual, certified, pivots: sol.pivots })
}

/// Exact `Fill₁` of a planar grid. In two dimensions `d¹` is onto and the
/// filling norm is convex and even, so the supremum over the ℓ¹ unit ball sits
/// at a unit face cochain.
pub fn fill1_constant_2d(grid: &GridComplex) -> Result<(Q, usize)> {
    if grid.dim() != 2 {
        return Err(Error::Unsupported("the unit-face reduction needs d = 2".into()));
    }
    let mut best = (Q::zero(), 0);
    for f in 0..grid.cell_count(2) {
        let mut b = grid.zero(2);
        *b.get_mut(f)? = Q::one();
        let v = fill1_exact(grid, &b)?.value;
        if v > best.0 {
            best = (v, f);
        }
    }
    Ok(best)
}

/// Tight witness: unit curl on the face at the origin of the `(j, k)` slice
/// `x_k = 0`, pulled back through `H²↑`. Its residual equals
/// `(N_k − 1) Π_{i>k} N_i` times the curl.
pub fn slice_witness(grid: &GridComplex, j: usize, k: usize) -> Result<Cochain> {
    let p = grid
        .pairs()
        .iter()
        .position(|&pr| pr == (j, k))
        .ok_or_else(|| Error::Invalid(format!("({j}, {k}) is not an ordered axis pair")))?;
    let mut b = grid.zero(2);
    b.comps[p][0] = Q::one();
    grid.h2_up(&b)
}

/// `c_0(x) = x_1` on a planar grid; its curl is `−1` on every face.
pub fn shear(grid: &GridComplex) -> Result<Cochain> {
    if grid.dim() != 2 {
        return Err(Error::Unsupported("shear cochain is planar".into()));
    }
    let mut c = grid.zero(1);
    let shape = grid.shapes(1)[0].clone();
    for (slot, x) in cells(&shape).enumerate() {
        c.comps[0][slot] = q(x[1] as i64);
    }
    Ok(c)
}

/// Entries `a/b` with `|a| <= max_abs`, `1 <= b <= max_den`.
pub fn random_cochain<R: rand::Rng>(grid: &GridComplex, degree: usize, rng: &mut R, max_abs: i64, max_den: i64) -> Cochain {
    let mut c = grid.zero(degree);
    for v in c.comps.iter_mut().flatten() {
        *v = Q::new(BigInt::from(rng.gen_range(-max_abs..=max_abs)), BigInt::from(rng.gen_range(1..=max_den)));
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_cochain(grid: &GridComplex, degree: usize, vals: &[i64]) -> Cochain {
        let mut c = grid.zero(degree);
        for (i, v) in c.comps.iter_mut().flatten().enumerate() {
            let raw = vals[i % vals.len()];
            *v = Q::new(BigInt::from(raw), BigInt::from(1 + (i as i64 % 3)));
        }
        c
    }

    #[test]
    fn cell_counts() {
        let g = GridComplex::new(vec![3, 4, 2]).unwrap();
        assert_eq!(g.cell_count(0), 24);
        assert_eq!(g.cell_count(1), 2 * 4 * 2 + 3 * 3 * 2 + 3 * 4);
        assert_eq!(g.cell_count(2), 2 * 3 * 2 + 2 * 4 + 3 * 3);
    }

    #[test]
    fn shear_curl_and_residual() {
        let g = GridComplex::new(vec![5, 5]).unwrap();
        let c = shear(&g).unwrap();
        let dc = g.d1(&c).unwrap();
        assert!(dc.flat_values().all(|v| *v == q(-1)));
        assert!(g.h1(&c).unwrap().is_zero());
        assert_eq!(g.h2_up(&dc).unwrap(), c);

        let small = GridComplex::new(vec![2, 2]).unwrap();
        let c = shear(&small).unwrap();
        assert_eq!(small.h2_up(&small.d1(&c).unwrap()).unwrap(), c);
    }

    #[test]
    fn constant_potential_is_closed() {
        let g = GridComplex::new(vec![3, 3]).unwrap();
        let mut u = g.zero(0);
        u.comps[0].iter_mut().for_each(|v| *v = q(7));
        assert!(g.d0(&u).unwrap().is_zero());
    }

    #[test]
    fn tight_witness_hits_c_up() {
        for n in 2..7 {
            let g = GridComplex::new(vec![n, n]).unwrap();
            let c = slice_witness(&g, 0, 1).unwrap();
            let fit = curl_fit(&g, &c).unwrap();
            assert_eq!(fit.curl_l1, q(1));
            assert_eq!(fit.residual_l1, q(n as i64 - 1));
            assert_eq!(fit.c_up, n as u64 - 1);
        }
        let g = GridComplex::new(vec![3, 4, 2]).unwrap();
        assert_eq!(g.c_up(), ((4 - 1) * 2));
        let fit = curl_fit(&g, &slice_witness(&g, 0, 1).unwrap()).unwrap();
        assert_eq!(fit.residual_l1, q(6));
    }

    #[test]
    fn weighted_planar_constant() {
        let n = 6;
        let g = GridComplex::new(vec![n, n]).unwrap();
        let alpha = [q(1), q(2)];
        let beta = [q(4)];
        let k = weighted_constant(&g, &alpha, &beta).unwrap();
        assert_eq!(k, Q::new(BigInt::from(n as i64 - 1), BigInt::from(4)));
        let fit = weighted_curl_fit(&g, &shear(&g).unwrap(), &alpha, &beta).unwrap();
        assert!(fit.holds());
        let w = weighted_curl_fit(&g, &slice_witness(&g, 0, 1).unwrap(), &alpha, &beta).unwrap();
        assert_eq!(w.residual_weighted, w.bound());
    }

    #[test]
    fn fill_on_single_face() {
        let g = GridComplex::new(vec![2, 2]).unwrap();
        let mut b = g.zero(2);
        b.comps[0][0] = q(-1);
        let f = fill1_exact(&g, &b).unwrap();
        assert_eq!(f.value, q(1));
        assert!(f.certified);
        assert_eq!(fill1_exact(&g, &g.zero(2)).unwrap().value, q(0));
    }

    #[test]
    fn fill_of_thin_strips() {
        for n in 2..8 {
            let g = GridComplex::new(vec![2, n]).unwrap();
            let (v, _) = fill1_constant_2d(&g).unwrap();
            assert!(v <= q(1), "2x{n}: {v}");
        }
    }

    #[test]
    fn fill_rejects_non_boundaries() {
        let g = GridComplex::new(vec![2, 2, 2]).unwrap();
        let mut b = g.zero(2);
        b.comps[0][0] = q(1);
        assert!(matches!(fill1_exact(&g, &b), Err(Error::Infeasible(_))));
    }

    #[test]
    fn json_round_trip() {
        let g = GridComplex::new(vec![3, 2]).unwrap();
        let c = random_cochain(&g, 1, &[3, -1, 0, 5]);
        let j = c.to_json().unwrap();
        let text = serde_json::to_string(&j).unwrap();
        assert!(text.contains("\"N\""));
        let back: CochainJson = serde_json::from_str(&text).unwrap();
        assert_eq!(Cochain::from_json(&back).unwrap(), c);
        assert!(Cochain::from_json(&CochainJson { degree: 1, n: vec![3, 2], entries: vec![(99, 1, 1)] }).is_err());
    }

    #[test]
    fn ordered_fit() {
        let g = GridComplex::new(vec![2, 3, 4]).unwrap();
        let c = random_cochain(&g, 1, &[2, -3, 1, 0, 4, -1, 7]);
        let order = [2, 0, 1];
        let fit = curl_fit_ordered(&g, &c, &order).unwrap();
        assert_eq!(fit.c_up, g.c_up_ordered(&order).unwrap());
        assert!(fit.within_bound());
        assert_eq!(c.sub(&g.d0(&fit.h).unwrap()).unwrap(), fit.residual);
        assert_eq!(g.d1(&fit.residual).unwrap(), g.d1(&c).unwrap());
    }

    fn grid_and_values() -> impl Strategy<Value = (Vec<usize>, Vec<i64>)> {
        (prop::collection::vec(1usize..=4, 2..=3), prop::collection::vec(-9i64..=9, 1..40))
    }

    proptest! {
        #[test]
        fn homotopy_identity((n, vals) in grid_and_values()) {
            let g = GridComplex::new(n).unwrap();
            let c = random_cochain(&g, 1, &vals);
            let dc = g.d1(&c).unwrap();
            let lhs = c.sub(&g.d0(&g.h1(&c).unwrap()).unwrap()).unwrap();
            prop_assert_eq!(&lhs, &g.h2_up(&dc).unwrap());
            prop_assert_eq!(g.d1(&g.h2_up(&dc).unwrap()).unwrap(), dc.clone());
            prop_assert!(g.h2_up(&dc).unwrap().l1() <= g.anisotropic_bound(&dc).unwrap());
            prop_assert!(curl_fit(&g, &c).unwrap().within_bound());
        }

        #[test]
        fn exactness((n, vals) in grid_and_values()) {
            let g = GridComplex::new(n).unwrap();
            let u = random_cochain(&g, 0, &vals);
            prop_assert!(g.d1(&g.d0(&u).unwrap()).unwrap().is_zero());
            prop_assert_eq!(g.h1(&g.d0(&u).unwrap()).unwrap(), {
                let mut v = u.clone();
                let base = v.comps[0][0].clone();
                v.comps[0].iter_mut().for_each(|x| *x -= &base);
                v
            });
        }

        #[test]
        fn fill_below_homotopy(n1 in 2usize..=3, n2 in 2usize..=4, vals in prop::collection::vec(-3i64..=3, 1..12)) {
            let g = GridComplex::new(vec![n1, n2]).unwrap();
            let c = random_cochain(&g, 1, &vals);
            let b = g.d1(&c).unwrap();
            let f = fill1_exact(&g, &b).unwrap();
            prop_assert!(f.certified);
            prop_assert!(f.value <= g.h2_up(&b).unwrap().l1());
        }
    }
}
