//! Dense numeric symmetric tensors over ℝⁿ.
//!
//! A rank-r symmetric tensor stores one coefficient per sorted multi-index
//! (i₁ ≤ … ≤ i_r); any permutation of an index reads the same value. The
//! polynomial picture p_T(x) = T(x,…,x) ties this module to the symbolic
//! layer: the trace map corresponds to the Laplacian via
//! Δ p_T = r(r−1) p_{tr T}, which the tests use as an independent oracle.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dimension cap for dense storage (desk scale).
pub const MAX_DIM: usize = 6;
/// Rank cap for dense storage (desk scale).
pub const MAX_RANK: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TensorError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("rank mismatch: need rank {need}, got {got}")]
    RankMismatch { need: usize, got: usize },
    #[error("rank {0} exceeds cap {MAX_RANK} or dim {1} exceeds cap {MAX_DIM}")]
    CapExceeded(usize, usize),
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut out = 1usize;
    for j in 0..k {
        out = out * (n - j) / (j + 1);
    }
    out
}

/// Number of sorted multi-indices of length `rank` over `dim` symbols.
pub fn multiset_count(dim: usize, rank: usize) -> usize {
    binom(dim + rank - 1, rank)
}

/// Lexicographic position of a sorted multi-index.
fn multiset_rank(dim: usize, idx: &[usize]) -> usize {
    let r = idx.len();
    let mut pos = 0usize;
    let mut prev = 0usize;
    for (p, &v) in idx.iter().enumerate() {
        for u in prev..v {
            pos += multiset_count(dim - u, r - p - 1);
        }
        prev = v;
    }
    pos
}

fn multiset_unrank(dim: usize, rank: usize, mut pos: usize) -> Vec<usize> {
    let mut idx = Vec::with_capacity(rank);
    let mut lo = 0usize;
    for p in 0..rank {
        let mut v = lo;
        loop {
            let cnt = multiset_count(dim - v, rank - p - 1);
            if pos < cnt {
                break;
            }
            pos -= cnt;
            v += 1;
        }
        idx.push(v);
        lo = v;
    }
    idx
}

/// r!/∏ m_v! — the number of distinct permutations of the multi-index.
fn multiplicity(idx: &[usize]) -> f64 {
    let mut fact = 1f64;
    for j in 2..=idx.len() {
        fact *= j as f64;
    }
    let mut run = 1usize;
    for w in 1..=idx.len() {
        if w < idx.len() && idx[w] == idx[w - 1] {
            run += 1;
        } else {
            for j in 2..=run {
                fact /= j as f64;
            }
            run = 1;
        }
    }
    fact
}

/// Dense symmetric tensor of rank `rank` over ℝ^dim.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor {
    dim: usize,
    rank: usize,
    coeffs: Vec<f64>,
}

impl SymTensor {
    pub fn zeros(dim: usize, rank: usize) -> Self {
        assert!(dim >= 1 && dim <= MAX_DIM && rank <= MAX_RANK, "cap exceeded");
        SymTensor {
            dim,
            rank,
            coeffs: vec![0.0; multiset_count(dim, rank)],
        }
    }

    pub fn scalar(dim: usize, value: f64) -> Self {
        let mut t = SymTensor::zeros(dim, 0);
        t.coeffs[0] = value;
        t
    }

    /// The metric tensor Q = Σ eᵢ² (identity matrix as a rank-2 tensor).
    pub fn metric(dim: usize) -> Self {
        let mut t = SymTensor::zeros(dim, 2);
        for i in 0..dim {
            t.set(&[i, i], 1.0);
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Coefficient at a multi-index, in any order.
    pub fn get(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.rank);
        let mut s = idx.to_vec();
        s.sort_unstable();
        self.coeffs[multiset_rank(self.dim, &s)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let mut s = idx.to_vec();
        s.sort_unstable();
        self.coeffs[multiset_rank(self.dim, &s)] = value;
    }

    pub fn add_at(&mut self, idx: &[usize], value: f64) {
        let mut s = idx.to_vec();
        s.sort_unstable();
        self.coeffs[multiset_rank(self.dim, &s)] += value;
    }

    /// Iterate (sorted multi-index, coefficient).
    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(p, &v)| (multiset_unrank(self.dim, self.rank, p), v))
    }

    /// y^s: the s-fold symmetric power of a vector; s = 0 gives the scalar 1.
    pub fn power(y: &[f64], s: usize) -> Self {
        let dim = y.len();
        let mut t = SymTensor::zeros(dim, s);
        for (p, c) in t.coeffs.iter_mut().enumerate() {
            let idx = multiset_unrank(dim, s, p);
            *c = idx.iter().map(|&i| y[i]).product();
        }
        t
    }

    pub fn scale(&self, f: f64) -> Self {
        SymTensor {
            dim: self.dim,
            rank: self.rank,
            coeffs: self.coeffs.iter().map(|c| c * f).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        assert_eq!(self.rank, other.rank);
        SymTensor {
            dim: self.dim,
            rank: self.rank,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn axpy(&mut self, f: f64, other: &Self) {
        assert_eq!(self.dim, other.dim);
        assert_eq!(self.rank, other.rank);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += f * b;
        }
    }

    /// Largest |component|.
    pub fn norm_inf(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Symmetric tensor product.
    pub fn sym_product(&self, other: &Self) -> Result<Self, TensorError> {
        if self.dim != other.dim {
            return Err(TensorError::DimMismatch(self.dim, other.dim));
        }
        let (r1, r2) = (self.rank, other.rank);
        let r = r1 + r2;
        if r > MAX_RANK {
            return Err(TensorError::CapExceeded(r, self.dim));
        }
        let mut out = SymTensor::zeros(self.dim, r);
        let c_total = binom(r, r1) as f64;
        for (p, c) in out.coeffs.iter_mut().enumerate() {
            let idx = multiset_unrank(self.dim, r, p);
            // (uv)_I = C(r, r1)^{-1} Σ_{I₁⊔I₂=I} (#splits) u_{I₁} v_{I₂}
            let mut acc = 0.0;
            for_each_split(&idx, r1, &mut |i1, i2, ways| {
                acc += ways * self.get(i1) * other.get(i2);
            });
            *c = acc / c_total;
        }
        Ok(out)
    }

    /// Contraction of `self` (rank p) into `other` (rank q ≥ p), yielding rank q−p.
    pub fn contract(&self, other: &Self) -> Result<Self, TensorError> {
        if self.dim != other.dim {
            return Err(TensorError::DimMismatch(self.dim, other.dim));
        }
        if self.rank > other.rank {
            return Err(TensorError::RankMismatch {
                need: self.rank,
                got: other.rank,
            });
        }
        let p = self.rank;
        let q = other.rank;
        let mut out = SymTensor::zeros(self.dim, q - p);
        for (pos, c) in out.coeffs.iter_mut().enumerate() {
            let j = multiset_unrank(self.dim, q - p, pos);
            let mut acc = 0.0;
            for (i, u) in self.entries() {
                if u == 0.0 {
                    continue;
                }
                let mut full = i.clone();
                full.extend_from_slice(&j);
                full.sort_unstable();
                acc += multiplicity(&i) * u * other.coeffs[multiset_rank(self.dim, &full)];
            }
            *c = acc;
        }
        Ok(out)
    }

    /// Induced scalar product of two equal-rank tensors.
    pub fn inner(&self, other: &Self) -> Result<f64, TensorError> {
        if self.rank != other.rank {
            return Err(TensorError::RankMismatch {
                need: self.rank,
                got: other.rank,
            });
        }
        Ok(self.contract(other)?.coeffs[0])
    }

    /// Trace: contraction of two slots, rank drops by two.
    pub fn trace(&self) -> Result<Self, TensorError> {
        if self.rank < 2 {
            return Err(TensorError::RankMismatch {
                need: 2,
                got: self.rank,
            });
        }
        let mut out = SymTensor::zeros(self.dim, self.rank - 2);
        for (pos, c) in out.coeffs.iter_mut().enumerate() {
            let j = multiset_unrank(self.dim, self.rank - 2, pos);
            let mut acc = 0.0;
            for i in 0..self.dim {
                let mut full = j.clone();
                full.push(i);
                full.push(i);
                full.sort_unstable();
                acc += self.coeffs[multiset_rank(self.dim, &full)];
            }
            *c = acc;
        }
        Ok(out)
    }

    /// p_T(x) = T(x,…,x).
    pub fn eval_poly(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (idx, c) in self.entries() {
            if c == 0.0 {
                continue;
            }
            let m: f64 = idx.iter().map(|&i| x[i]).product();
            acc += multiplicity(&idx) * c * m;
        }
        acc
    }

    /// Expand to the full n^r coefficient array (row-major over slots).
    pub fn to_full(&self) -> Vec<f64> {
        let n = self.dim;
        let r = self.rank;
        let size = n.pow(r as u32);
        let mut full = vec![0.0; size];
        for (flat, c) in full.iter_mut().enumerate() {
            let mut idx = Vec::with_capacity(r);
            let mut rem = flat;
            for _ in 0..r {
                idx.push(rem % n);
                rem /= n;
            }
            *c = self.get(&idx);
        }
        full
    }

    /// g^{⊗r} T for an n×n matrix g (rows index the output).
    pub fn apply_matrix(&self, g: &[Vec<f64>]) -> Self {
        let full = apply_matrix_to_slots(&self.to_full(), self.dim, self.rank, g, 0, self.rank);
        let mut out = SymTensor::zeros(self.dim, self.rank);
        for (p, c) in out.coeffs.iter_mut().enumerate() {
            let idx = multiset_unrank(self.dim, self.rank, p);
            let mut flat = 0usize;
            for (slot, &i) in idx.iter().enumerate() {
                flat += i * self.dim.pow(slot as u32);
            }
            *c = full[flat];
        }
        out
    }
}

/// Enumerate splittings of a sorted multi-index into sub-multisets of sizes
/// (r1, len−r1), with the number of slot assignments realizing each split.
fn for_each_split(idx: &[usize], r1: usize, f: &mut dyn FnMut(&[usize], &[usize], f64)) {
    // Distinct values and their counts.
    let mut vals: Vec<usize> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for &v in idx {
        if vals.last() == Some(&v) {
            *counts.last_mut().unwrap() += 1;
        } else {
            vals.push(v);
            counts.push(1);
        }
    }
    let mut take = vec![0usize; vals.len()];
    fn rec(
        vals: &[usize],
        counts: &[usize],
        take: &mut [usize],
        pos: usize,
        left: usize,
        f: &mut dyn FnMut(&[usize], &[usize], f64),
    ) {
        if pos == vals.len() {
            if left != 0 {
                return;
            }
            let mut i1 = Vec::new();
            let mut i2 = Vec::new();
            let mut ways = 1f64;
            for (j, &v) in vals.iter().enumerate() {
                for _ in 0..take[j] {
                    i1.push(v);
                }
                for _ in 0..(counts[j] - take[j]) {
                    i2.push(v);
                }
                ways *= binom(counts[j], take[j]) as f64;
            }
            f(&i1, &i2, ways);
            return;
        }
        let maxt = counts[pos].min(left);
        for t in 0..=maxt {
            take[pos] = t;
            rec(vals, counts, take, pos + 1, left - t, f);
        }
        take[pos] = 0;
    }
    rec(&vals, &counts, &mut take, 0, r1, f);
}

/// Apply matrix g to slots [from, to) of a full dense rank-r tensor.
pub fn apply_matrix_to_slots(
    full: &[f64],
    dim: usize,
    rank: usize,
    g: &[Vec<f64>],
    from: usize,
    to: usize,
) -> Vec<f64> {
    let mut cur = full.to_vec();
    let size = cur.len();
    for slot in from..to {
        let stride = dim.pow(slot as u32);
        let mut next = vec![0.0; size];
        for (flat, out) in next.iter_mut().enumerate() {
            let i_out = (flat / stride) % dim;
            let base = flat - i_out * stride;
            let mut acc = 0.0;
            for i_in in 0..dim {
                acc += g[i_out][i_in] * cur[base + i_in * stride];
            }
            *out = acc;
        }
        cur = next;
    }
    let _ = rank;
    cur
}

/// Element of Sym^{r1}ℝⁿ ⊗ Sym^{r2}ℝⁿ — the value type of kinematic operators.
#[derive(Debug, Clone, PartialEq)]
pub struct BiSymTensor {
    dim: usize,
    rank1: usize,
    rank2: usize,
    coeffs: Vec<f64>,
}

impl BiSymTensor {
    pub fn zeros(dim: usize, rank1: usize, rank2: usize) -> Self {
        BiSymTensor {
            dim,
            rank1,
            rank2,
            coeffs: vec![0.0; multiset_count(dim, rank1) * multiset_count(dim, rank2)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ranks(&self) -> (usize, usize) {
        (self.rank1, self.rank2)
    }

    pub fn get(&self, i1: &[usize], i2: &[usize]) -> f64 {
        let mut a = i1.to_vec();
        let mut b = i2.to_vec();
        a.sort_unstable();
        b.sort_unstable();
        let cols = multiset_count(self.dim, self.rank2);
        self.coeffs[multiset_rank(self.dim, &a) * cols + multiset_rank(self.dim, &b)]
    }

    /// u ⊗ v without symmetrization across the two groups.
    pub fn outer(u: &SymTensor, v: &SymTensor) -> Self {
        assert_eq!(u.dim, v.dim);
        let mut out = BiSymTensor::zeros(u.dim, u.rank, v.rank);
        let cols = multiset_count(u.dim, v.rank);
        for (p1, &a) in u.coeffs.iter().enumerate() {
            for (p2, &b) in v.coeffs.iter().enumerate() {
                out.coeffs[p1 * cols + p2] = a * b;
            }
        }
        out
    }

    /// Read a full dense rank-(r1+r2) array as a bi-symmetric tensor.
    pub fn from_full(full: &[f64], dim: usize, rank1: usize, rank2: usize) -> Self {
        let mut out = BiSymTensor::zeros(dim, rank1, rank2);
        let cols = multiset_count(dim, rank2);
        for p1 in 0..multiset_count(dim, rank1) {
            let i1 = multiset_unrank(dim, rank1, p1);
            for p2 in 0..cols {
                let i2 = multiset_unrank(dim, rank2, p2);
                let mut flat = 0usize;
                for (slot, &i) in i1.iter().chain(i2.iter()).enumerate() {
                    flat += i * dim.pow(slot as u32);
                }
                out.coeffs[p1 * cols + p2] = full[flat];
            }
        }
        out
    }

    pub fn axpy(&mut self, f: f64, other: &Self) {
        assert_eq!(self.coeffs.len(), other.coeffs.len());
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += f * b;
        }
    }

    pub fn scale(&self, f: f64) -> Self {
        BiSymTensor {
            dim: self.dim,
            rank1: self.rank1,
            rank2: self.rank2,
            coeffs: self.coeffs.iter().map(|c| c * f).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn norm_inf(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Iterate ((sorted idx1, sorted idx2), coefficient).
    pub fn components(&self) -> impl Iterator<Item = (Vec<usize>, Vec<usize>, f64)> + '_ {
        let cols = multiset_count(self.dim, self.rank2);
        self.coeffs.iter().enumerate().map(move |(p, &v)| {
            (
                multiset_unrank(self.dim, self.rank1, p / cols),
                multiset_unrank(self.dim, self.rank2, p % cols),
                v,
            )
        })
    }
}

#[derive(Serialize, Deserialize)]
struct EntryDto {
    idx: Vec<usize>,
    val: f64,
}

#[derive(Serialize, Deserialize)]
struct SymTensorDto {
    dim: usize,
    rank: usize,
    entries: Vec<EntryDto>,
}

impl Serialize for SymTensor {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        // Indices are 1-based in the JSON form.
        let entries = self
            .entries()
            .filter(|(_, v)| *v != 0.0)
            .map(|(idx, val)| EntryDto {
                idx: idx.iter().map(|i| i + 1).collect(),
                val,
            })
            .collect();
        SymTensorDto {
            dim: self.dim,
            rank: self.rank,
            entries,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SymTensor {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let dto = SymTensorDto::deserialize(deserializer)?;
        let mut t = SymTensor::zeros(dto.dim, dto.rank);
        for e in dto.entries {
            if e.idx.len() != dto.rank || e.idx.iter().any(|&i| i < 1 || i > dto.dim) {
                return Err(D::Error::custom("bad tensor index"));
            }
            let idx: Vec<usize> = e.idx.iter().map(|i| i - 1).collect();
            t.set(&idx, e.val);
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_tensor(rng: &mut StdRng, dim: usize, rank: usize) -> SymTensor {
        let mut t = SymTensor::zeros(dim, rank);
        for c in t.coeffs.iter_mut() {
            *c = rng.gen_range(-1.0..1.0);
        }
        t
    }

    fn random_unit(rng: &mut StdRng, dim: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.1 {
                return v.iter().map(|x| x / n).collect();
            }
        }
    }

    #[test]
    fn metric_has_trace_n() {
        for n in 2..=5 {
            let q = SymTensor::metric(n);
            assert_eq!(q.trace().unwrap().get(&[]), n as f64);
        }
    }

    #[test]
    fn permutation_invariant_access() {
        let mut t = SymTensor::zeros(3, 3);
        t.set(&[0, 1, 2], 5.0);
        assert_eq!(t.get(&[2, 0, 1]), 5.0);
        assert_eq!(t.get(&[1, 2, 0]), 5.0);
    }

    #[test]
    fn sym_product_of_basis_vectors() {
        // e₁·e₂ in n = 2 has value 1/2 at (1,2) under the symmetrization convention
        let e1 = SymTensor::power(&[1.0, 0.0], 1);
        let e2 = SymTensor::power(&[0.0, 1.0], 1);
        let p = e1.sym_product(&e2).unwrap();
        assert!((p.get(&[0, 1]) - 0.5).abs() < 1e-14);
        assert_eq!(p.get(&[0, 0]), 0.0);
    }

    #[test]
    fn scalar_is_product_identity() {
        let q = SymTensor::metric(3);
        let one = SymTensor::scalar(3, 1.0);
        assert_eq!(q.sym_product(&one).unwrap(), q);
    }

    #[test]
    fn power_matches_outer_products() {
        let mut rng = StdRng::seed_from_u64(7);
        let y = random_unit(&mut rng, 3);
        let y2 = SymTensor::power(&y, 2);
        let y1 = SymTensor::power(&y, 1);
        let p = y1.sym_product(&y1).unwrap();
        assert!(y2.sub(&p).norm_inf() < 1e-14);
        assert_eq!(SymTensor::power(&y, 0).get(&[]), 1.0);
    }

    #[test]
    fn trace_of_unit_power_drops_rank() {
        let mut rng = StdRng::seed_from_u64(8);
        for s in 2..=6usize {
            let y = random_unit(&mut rng, 4);
            let t = SymTensor::power(&y, s);
            let tr = t.trace().unwrap();
            let want = SymTensor::power(&y, s - 2);
            assert!(tr.sub(&want).norm_inf() < 1e-12, "s = {s}");
        }
    }

    #[test]
    fn trace_equals_contraction_with_metric() {
        let mut rng = StdRng::seed_from_u64(9);
        for (n, r) in [(2, 4), (3, 3), (4, 5)] {
            let t = random_tensor(&mut rng, n, r);
            let q = SymTensor::metric(n);
            let a = t.trace().unwrap();
            let b = q.contract(&t).unwrap();
            assert!(a.sub(&b).norm_inf() < 1e-12);
        }
    }

    #[test]
    fn inner_products() {
        let mut rng = StdRng::seed_from_u64(10);
        for n in 2..=5usize {
            let q = SymTensor::metric(n);
            assert!((q.inner(&q).unwrap() - n as f64).abs() < 1e-12);
            let y = random_unit(&mut rng, n);
            for s in 0..=5usize {
                let t = SymTensor::power(&y, s);
                assert!((t.inner(&t).unwrap() - 1.0).abs() < 1e-12, "n {n} s {s}");
            }
            let z = random_unit(&mut rng, n);
            let y3 = SymTensor::power(&y, 3);
            let z3 = SymTensor::power(&z, 3);
            let dot: f64 = y.iter().zip(&z).map(|(a, b)| a * b).sum();
            assert!((y3.inner(&z3).unwrap() - dot.powi(3)).abs() < 1e-12);
        }
    }

    #[test]
    fn adjoint_of_metric_multiplication() {
        // ⟨Qv, w⟩ = ⟨v, tr w⟩
        let mut rng = StdRng::seed_from_u64(11);
        for (n, s) in [(2, 2), (3, 3), (4, 2), (3, 4)] {
            let v = random_tensor(&mut rng, n, s);
            let w = random_tensor(&mut rng, n, s + 2);
            let q = SymTensor::metric(n);
            let lhs = q.sym_product(&v).unwrap().inner(&w).unwrap();
            let rhs = v.inner(&w.trace().unwrap()).unwrap();
            assert!((lhs - rhs).abs() < 1e-10, "n {n} s {s}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn contraction_composition_identity() {
        // contr(u, contr(v, w)) = contr(uv, w)
        let mut rng = StdRng::seed_from_u64(12);
        for (n, p, q, r) in [(3, 1, 2, 4), (2, 2, 2, 5), (4, 1, 1, 3)] {
            let u = random_tensor(&mut rng, n, p);
            let v = random_tensor(&mut rng, n, q);
            let w = random_tensor(&mut rng, n, r);
            let lhs = u.contract(&v.contract(&w).unwrap()).unwrap();
            let rhs = u.sym_product(&v).unwrap().contract(&w).unwrap();
            assert!(lhs.sub(&rhs).norm_inf() < 1e-11);
        }
    }

    fn fd_laplacian(t: &SymTensor, x: &[f64]) -> f64 {
        // fourth-order central stencil per coordinate
        let h = 1e-2;
        let mut acc = 0.0;
        for i in 0..t.dim() {
            let ev = |step: f64| {
                let mut y = x.to_vec();
                y[i] += step;
                t.eval_poly(&y)
            };
            acc += (-ev(2.0 * h) + 16.0 * ev(h) - 30.0 * ev(0.0) + 16.0 * ev(-h) - ev(-2.0 * h))
                / (12.0 * h * h);
        }
        acc
    }

    #[test]
    fn laplacian_oracle_for_trace() {
        // Δ(T(x,…,x)) = m(m−1)·(tr T)(x,…,x)
        let mut rng = StdRng::seed_from_u64(13);
        for (n, m) in [(2, 2), (3, 3), (3, 4), (4, 5), (4, 6), (2, 6)] {
            let t = random_tensor(&mut rng, n, m);
            let tr = t.trace().unwrap();
            for _ in 0..3 {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.8..0.8)).collect();
                let fd = fd_laplacian(&t, &x);
                let analytic = (m * (m - 1)) as f64 * tr.eval_poly(&x);
                assert!(
                    (fd - analytic).abs() < 1e-6,
                    "n {n} m {m}: fd {fd} vs {analytic}"
                );
            }
        }
    }

    #[test]
    fn trace_of_metric_times_square() {
        // tr(Q·y²) in n = 3 with y = e₁ equals (7/6)y² + (1/6)Q; cross-checked
        // against the Laplacian Δ(|x|²x₁²) = 14x₁² + 2|x|² with m(m−1) = 12.
        let q = SymTensor::metric(3);
        let y = [1.0, 0.0, 0.0];
        let y2 = SymTensor::power(&y, 2);
        let t = q.sym_product(&y2).unwrap();
        let tr = t.trace().unwrap();
        let mut want = SymTensor::power(&y, 2).scale(7.0 / 6.0);
        want.axpy(1.0 / 6.0, &SymTensor::metric(3));
        assert!(tr.sub(&want).norm_inf() < 1e-13);
    }

    #[test]
    fn rotation_preserves_inner_product() {
        let mut rng = StdRng::seed_from_u64(14);
        // Householder-free simple rotation in the (0,1)-plane
        let th = 0.7f64;
        let g = vec![
            vec![th.cos(), -th.sin(), 0.0],
            vec![th.sin(), th.cos(), 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let t = random_tensor(&mut rng, 3, 3);
        let s = random_tensor(&mut rng, 3, 3);
        let lhs = t.apply_matrix(&g).inner(&s.apply_matrix(&g)).unwrap();
        let rhs = t.inner(&s).unwrap();
        assert!((lhs - rhs).abs() < 1e-10);
        // metric is invariant
        let q = SymTensor::metric(3);
        assert!(q.apply_matrix(&g).sub(&q).norm_inf() < 1e-12);
    }

    #[test]
    fn bisym_outer_and_full_agree() {
        let mut rng = StdRng::seed_from_u64(15);
        let u = random_tensor(&mut rng, 3, 2);
        let v = random_tensor(&mut rng, 3, 1);
        let outer = BiSymTensor::outer(&u, &v);
        // build the same thing from the full array of the (non-symmetrized) product
        let fu = u.to_full();
        let fv = v.to_full();
        let mut full = vec![0.0; 27];
        for a in 0..9 {
            for b in 0..3 {
                full[a + b * 9] = fu[a] * fv[b];
            }
        }
        let from_full = BiSymTensor::from_full(&full, 3, 2, 1);
        assert!(outer.sub(&from_full).norm_inf() < 1e-13);
    }

    #[test]
    fn json_round_trip() {
        let mut rng = StdRng::seed_from_u64(16);
        let t = random_tensor(&mut rng, 3, 3);
        let js = serde_json::to_string(&t).unwrap();
        let back: SymTensor = serde_json::from_str(&js).unwrap();
        assert!(t.sub(&back).norm_inf() == 0.0);
    }
}
