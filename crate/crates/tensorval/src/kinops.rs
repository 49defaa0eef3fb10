//! Poincaré pairings, Gram matrices and the kinematic operators.
//!
//! The intersectional kinematic operator is computed the way the theory
//! says it must be: push the source valuation through pd_m, express the
//! adjoint of the product in the test bases, and invert the Poincaré Gram
//! blocks — a linear solve over the exact scalar ring. The additive
//! operator has a closed form on pure Φ inputs and is otherwise obtained
//! through the Fourier transform (a = (F⁻¹⊗F⁻¹)∘k∘F).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::exact::{binomial_scalar, factorial, gamma_half, omega, ExactScalar, HalfInteger};
use crate::valalg::{
    fourier, fourier_inv, multiply, trace_val, BasisElement, BasisKind, TensorValuation,
    ValuationError,
};

#[derive(Debug, Error, PartialEq)]
pub enum KinopsError {
    #[error("singular Gram block at degree {degree}, rank {rank}")]
    SingularGram { degree: u32, rank: u32 },
    #[error("source valuation must have a single degree, found mixed degrees")]
    MixedDegrees,
    #[error("source rank {got} does not match bi-rank ({s1},{s2})")]
    RankMismatch { got: u32, s1: u32, s2: u32 },
    #[error("degree {0} out of range for dimension {1}")]
    DegreeRange(u32, u32),
    #[error("bi-rank with s = 1 is not supported")]
    RankOne,
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error("solver produced a coefficient outside the scalar ring")]
    InexactSolve,
}

fn gamma_hi(twice: i64) -> ExactScalar {
    gamma_half(HalfInteger(twice)).expect("positive gamma argument")
}

fn div(a: ExactScalar, b: &ExactScalar) -> ExactScalar {
    a.div_exact(b).expect("exact division in pairing table")
}

fn single(n: u32, e: BasisElement) -> TensorValuation {
    let mut v = TensorValuation::zero(n);
    v.add_term(e.kind, e.q_power, e.degree as i64, e.rank, ExactScalar::one());
    v
}

/// ⟨pd_m^s Φ_{k,s}, Φ_{n−k,s}⟩ =
///   (−1)^s (1−s)/(π^s s!²)·C(n,k)·(k(n−k)/4)·Γ((k+s)/2)Γ((n−k+s)/2)/Γ(n/2+1).
///
/// At the extreme degrees k ∈ {0,n} only s = 0 occurs and the properly
/// interpreted value is 1 (the basis constructors enforce the rank there).
fn base_pairing_m(n: u32, k: u32, s: u32) -> ExactScalar {
    if k == 0 || k == n {
        debug_assert_eq!(s, 0);
        return ExactScalar::one();
    }
    let n = n as i64;
    let k = k as i64;
    let s = s as i64;
    let fact = ExactScalar::from_bigint(factorial(s as u64));
    let num = binomial_scalar(n, k)
        * ExactScalar::from_ratio(k * (n - k), 4)
        * gamma_hi(k + s)
        * gamma_hi(n - k + s)
        * ExactScalar::from_int(1 - s);
    let den = ExactScalar::pi_pow(s as i32) * fact.clone() * fact * gamma_hi(n + 2);
    let v = div(num, &den);
    if s % 2 == 1 {
        -v
    } else {
        v
    }
}

fn pair_elements(n: u32, e1: &BasisElement, e2: &BasisElement) -> ExactScalar {
    if e1.degree + e2.degree != n || e1.total_rank() != e2.total_rank() {
        return ExactScalar::zero();
    }
    if e1.q_power > 0 {
        // ⟨pd(Q v), w⟩ = ⟨pd(v), tr w⟩
        let stripped = BasisElement {
            q_power: e1.q_power - 1,
            ..*e1
        };
        let traced = trace_val(&single(n, *e2)).expect("rank >= 2 while stripping Q");
        let mut acc = ExactScalar::zero();
        for (e, c) in traced.terms() {
            acc += &(c * &pair_elements(n, &stripped, e));
        }
        return acc;
    }
    if e2.q_power > 0 {
        let stripped = BasisElement {
            q_power: e2.q_power - 1,
            ..*e2
        };
        let traced = trace_val(&single(n, *e1)).expect("rank >= 2 while stripping Q");
        let mut acc = ExactScalar::zero();
        for (e, c) in traced.terms() {
            acc += &(c * &pair_elements(n, e, &stripped));
        }
        return acc;
    }
    debug_assert_eq!(e1.rank, e2.rank);
    base_pairing_m(n, e1.degree, e1.rank)
}

/// Poincaré pairing with respect to the product; 0 on mismatched
/// degree pairs or ranks.
pub fn pairing_m(v: &TensorValuation, w: &TensorValuation) -> ExactScalar {
    let n = v.ambient_dim();
    let vp = v.to_phi_basis();
    let wp = w.to_phi_basis();
    let mut acc = ExactScalar::zero();
    for (e1, c1) in vp.terms() {
        for (e2, c2) in wp.terms() {
            let p = pair_elements(n, e1, e2);
            if !p.is_zero() {
                acc += &(&(c1 * c2) * &p);
            }
        }
    }
    acc
}

/// Poincaré pairing with respect to the convolution: pd_c^s = (−1)^s pd_m^s.
pub fn pairing_c(v: &TensorValuation, w: &TensorValuation) -> ExactScalar {
    let n = v.ambient_dim();
    let vp = v.to_phi_basis();
    let wp = w.to_phi_basis();
    let mut acc = ExactScalar::zero();
    for (e1, c1) in vp.terms() {
        for (e2, c2) in wp.terms() {
            let p = pair_elements(n, e1, e2);
            if p.is_zero() {
                continue;
            }
            let signed = if e1.total_rank() % 2 == 1 { -p } else { p };
            acc += &(&(c1 * c2) * &signed);
        }
    }
    acc
}

/// The basis of total rank r in degree k, ascending in the Q-power:
/// {Q^a Φ_{k,r−2a}} for interior degrees, {Q^{r/2}·χ/vol} at k ∈ {0,n}.
pub fn rank_basis(n: u32, k: u32, r: u32) -> Vec<BasisElement> {
    let mut out = Vec::new();
    if k == 0 || k == n {
        if r % 2 == 0 {
            out.push(BasisElement {
                kind: BasisKind::Phi,
                q_power: r / 2,
                degree: k,
                rank: 0,
            });
        }
        return out;
    }
    for a in 0..=r / 2 {
        let s = r - 2 * a;
        if s == 1 {
            continue;
        }
        out.push(BasisElement {
            kind: BasisKind::Phi,
            q_power: a,
            degree: k,
            rank: s,
        });
    }
    out
}

/// Gram matrix of ⟨pd_m^r ·,·⟩ between the rank-r bases at complementary
/// degrees (k, n−k).
#[derive(Debug, Clone)]
pub struct PairingMatrix {
    pub n: u32,
    pub degree: u32,
    pub rank: u32,
    pub left_basis: Vec<BasisElement>,
    pub right_basis: Vec<BasisElement>,
    pub entries: Vec<Vec<ExactScalar>>,
}

impl PairingMatrix {
    pub fn gram(n: u32, degree: u32, rank: u32) -> Self {
        let left_basis = rank_basis(n, degree, rank);
        let right_basis = rank_basis(n, n - degree, rank);
        let entries = left_basis
            .iter()
            .map(|e1| {
                right_basis
                    .iter()
                    .map(|e2| pair_elements(n, e1, e2))
                    .collect()
            })
            .collect();
        PairingMatrix {
            n,
            degree,
            rank,
            left_basis,
            right_basis,
            entries,
        }
    }

    pub fn det(&self) -> ExactScalar {
        det(&self.entries)
    }
}

fn det(m: &[Vec<ExactScalar>]) -> ExactScalar {
    let n = m.len();
    if n == 0 {
        return ExactScalar::one();
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = ExactScalar::zero();
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<ExactScalar>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != j)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect();
        let term = &m[0][j] * &det(&minor);
        if j % 2 == 0 {
            acc += &term;
        } else {
            acc -= &term;
        }
    }
    acc
}

/// Solves A·X = B exactly (Cramer column by column); A is a small Gram block.
fn solve_matrix(
    a: &[Vec<ExactScalar>],
    b: &[Vec<ExactScalar>],
) -> Result<Vec<Vec<ExactScalar>>, KinopsError> {
    let m = a.len();
    let d = det(a);
    if d.is_zero() {
        return Err(KinopsError::SingularGram { degree: 0, rank: 0 });
    }
    let cols = if m == 0 { 0 } else { b[0].len() };
    let mut x = vec![vec![ExactScalar::zero(); cols]; m];
    for c in 0..cols {
        for i in 0..m {
            let mut ai = a.to_vec();
            for (r, row) in ai.iter_mut().enumerate() {
                row[i] = b[r][c].clone();
            }
            x[i][c] = det(&ai).div_exact(&d).ok_or(KinopsError::InexactSolve)?;
        }
    }
    Ok(x)
}

/// Bilinear output Σ c_ab · v_a ⊗ w_b of a kinematic operator. Cells are
/// stored as (left, right, coefficient) triples; the basis valuations keep
/// the block ordering (ascending bi-degree, then ascending Q-power).
#[derive(Debug, Clone)]
pub struct KinematicTable {
    pub n: u32,
    pub s1: u32,
    pub s2: u32,
    cells: Vec<(TensorValuation, TensorValuation, ExactScalar)>,
}

impl KinematicTable {
    pub fn empty(n: u32, s1: u32, s2: u32) -> Self {
        KinematicTable {
            n,
            s1,
            s2,
            cells: Vec::new(),
        }
    }

    pub fn push(&mut self, left: TensorValuation, right: TensorValuation, coeff: ExactScalar) {
        if coeff.is_zero() || left.is_zero() || right.is_zero() {
            return;
        }
        self.cells.push((left, right, coeff));
    }

    /// Iterate (left, right, coefficient) over the stored cells.
    pub fn cells(
        &self,
    ) -> impl Iterator<Item = (&TensorValuation, &TensorValuation, &ExactScalar)> {
        self.cells.iter().map(|(l, r, c)| (l, r, c))
    }

    /// Expansion over canonical basis-element pairs; the basis-free form of
    /// the abstract element Σ c_ab v_a ⊗ w_b used for equality tests.
    pub fn canonical(&self) -> BTreeMap<(BasisElement, BasisElement), ExactScalar> {
        let mut out: BTreeMap<(BasisElement, BasisElement), ExactScalar> = BTreeMap::new();
        for (l, r, c) in self.cells() {
            let lp = l.to_phi_basis();
            let rp = r.to_phi_basis();
            for (e1, c1) in lp.terms() {
                for (e2, c2) in rp.terms() {
                    let w = c * &(c1 * c2);
                    if w.is_zero() {
                        continue;
                    }
                    let key = (*e1, *e2);
                    let entry = out.entry(key).or_insert_with(ExactScalar::zero);
                    *entry += &w;
                    if entry.is_zero() {
                        out.remove(&key);
                    }
                }
            }
        }
        out
    }

    pub fn same_element(&self, other: &KinematicTable) -> bool {
        self.n == other.n && self.canonical() == other.canonical()
    }

    /// Apply a map to every basis valuation (used for the FTAIG transport).
    pub fn map_bases<F: Fn(&TensorValuation) -> TensorValuation>(&self, f: F) -> KinematicTable {
        let mut out = KinematicTable::empty(self.n, self.s1, self.s2);
        for (l, r, c) in self.cells() {
            out.push(f(l), f(r), c.clone());
        }
        out
    }
}

/// Closed-form additive kinematic operator on Φ_{i,s1+s2}:
/// a(Φ_{i,s1+s2}) = C(s1+s2,s1)^{-1} Σ_{k+l=i}
///   (n−k−1)!(n−l−1)!/((n−i−1)!(n−1)!) ·
///   ω_{n−k+s1}ω_{n−l+s2}/(ω_n ω_{n−i+s1+s2}) · Φ_{k,s1} ⊗ Φ_{l,s2}.
pub fn additive_kinematic(
    n: u32,
    i: u32,
    s1: u32,
    s2: u32,
) -> Result<KinematicTable, KinopsError> {
    if s1 == 1 || s2 == 1 {
        return Err(KinopsError::RankOne);
    }
    if i >= n {
        return Err(KinopsError::DegreeRange(i, n));
    }
    let nn = n as i64;
    let ii = i as i64;
    let om = |m: i64| omega(m).expect("omega domain");
    let mut table = KinematicTable::empty(n, s1, s2);
    for k in 0..=ii {
        let l = ii - k;
        let left = TensorValuation::phi(n, k, s1);
        let right = TensorValuation::phi(n, l, s2);
        if left.is_zero() || right.is_zero() {
            continue;
        }
        let num = ExactScalar::from_bigint(
            factorial((nn - k - 1) as u64) * factorial((nn - l - 1) as u64),
        ) * om(nn - k + s1 as i64)
            * om(nn - l + s2 as i64);
        let den = ExactScalar::from_bigint(
            factorial((nn - ii - 1) as u64) * factorial((nn - 1) as u64),
        ) * om(nn)
            * om(nn - ii + (s1 + s2) as i64)
            * binomial_scalar((s1 + s2) as i64, s1 as i64);
        table.push(left, right, div(num, &den));
    }
    Ok(table)
}

/// Intersectional kinematic operator of a source valuation of pure degree,
/// via the Poincaré-pairing linear system: for every bi-degree block
/// (k, l) with k + l = n + degree, solve
///   G1 · D · G2ᵀ = L,   L[α*,β*] = ⟨pd_m(source), T1[α*]·T2[β*]⟩,
/// where G1, G2 are the Poincaré Gram blocks of the factor bases.
pub fn intersectional_kinematic_of(
    source: &TensorValuation,
    s1: u32,
    s2: u32,
) -> Result<KinematicTable, KinopsError> {
    if s1 == 1 || s2 == 1 {
        return Err(KinopsError::RankOne);
    }
    let n = source.ambient_dim();
    let mut table = KinematicTable::empty(n, s1, s2);
    if source.is_zero() {
        return Ok(table);
    }
    let r = source
        .uniform_rank()
        .ok_or(KinopsError::RankMismatch { got: 0, s1, s2 })?;
    if r != s1 + s2 {
        return Err(KinopsError::RankMismatch { got: r, s1, s2 });
    }
    let mut degrees: Vec<u32> = source.terms().map(|(e, _)| e.degree).collect();
    degrees.dedup();
    if degrees.len() != 1 {
        return Err(KinopsError::MixedDegrees);
    }
    let j = degrees[0];

    for k in j..=n {
        let l = n + j - k;
        if l > n {
            continue;
        }
        let b1 = rank_basis(n, k, s1);
        let b2 = rank_basis(n, l, s2);
        let t1 = rank_basis(n, n - k, s1);
        let t2 = rank_basis(n, n - l, s2);
        if b1.is_empty() || b2.is_empty() {
            continue;
        }
        let g1 = PairingMatrix::gram(n, k, s1);
        let g2 = PairingMatrix::gram(n, l, s2);
        // L[α*][β*] = ⟨pd_m(source), T1[α*] · T2[β*]⟩
        let mut lmat = vec![vec![ExactScalar::zero(); t2.len()]; t1.len()];
        for (ai, e1) in t1.iter().enumerate() {
            for (bi, e2) in t2.iter().enumerate() {
                let prod = multiply(&single(n, *e1), &single(n, *e2))?;
                lmat[ai][bi] = pairing_m(source, &prod);
            }
        }
        // The unknown block satisfies G1ᵀ · D · G2 = L:
        //   Σ_{αβ} D[α,β] G1[α,α*] G2[β,β*] = L[α*,β*].
        let transpose = |m: &[Vec<ExactScalar>]| -> Vec<Vec<ExactScalar>> {
            (0..m[0].len())
                .map(|c| m.iter().map(|row| row[c].clone()).collect())
                .collect()
        };
        // X = (G1ᵀ)^{-1} L, then solve G2ᵀ · Dᵀ = Xᵀ.
        let x = solve_matrix(&transpose(&g1.entries), &lmat).map_err(|e| match e {
            KinopsError::SingularGram { .. } => KinopsError::SingularGram {
                degree: k,
                rank: s1,
            },
            other => other,
        })?;
        let dt = solve_matrix(&transpose(&g2.entries), &transpose(&x)).map_err(|e| match e {
            KinopsError::SingularGram { .. } => KinopsError::SingularGram {
                degree: l,
                rank: s2,
            },
            other => other,
        })?;
        for (ai, e1) in b1.iter().enumerate() {
            for (bi, e2) in b2.iter().enumerate() {
                let c = dt[bi][ai].clone();
                if !c.is_zero() {
                    table.push(single(n, *e1), single(n, *e2), c);
                }
            }
        }
    }
    Ok(table)
}

/// Intersectional kinematic operator on Φ_{i,s1+s2}.
pub fn intersectional_kinematic(
    n: u32,
    i: u32,
    s1: u32,
    s2: u32,
) -> Result<KinematicTable, KinopsError> {
    if i >= n {
        return Err(KinopsError::DegreeRange(i, n));
    }
    let source = TensorValuation::phi(n, i as i64, s1 + s2);
    intersectional_kinematic_of(&source, s1, s2)
}

/// Additive kinematic operator through the Fourier route
/// a = (F⁻¹ ⊗ F⁻¹) ∘ k ∘ F; defined for Q-multiples as well, where the
/// closed form is not available.
pub fn additive_kinematic_ftaig(
    source: &TensorValuation,
    s1: u32,
    s2: u32,
) -> Result<KinematicTable, KinopsError> {
    let transformed = fourier(source);
    let kt = intersectional_kinematic_of(&transformed, s1, s2)?;
    Ok(kt.map_bases(fourier_inv))
}
