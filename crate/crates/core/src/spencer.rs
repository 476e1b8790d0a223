//! Symbols, their algebraic prolongations, the Spencer δ-complex and Cartan
//! characters.
//!
//! An element of `SᵏV*⊗W` is stored through its derivative coordinates
//! `v^λ_α` (`|α| = k`), in the same order as jet coordinates. In these
//! coordinates the contraction `ι_{e_i}` is the index shift
//! `(ι_i v)^λ_α = v^λ_{α+e_i}`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactlin::{nullspace, QMatrix, Rational, Subspace};
use crate::jetcalc::{binomial, multiindices, sym_dim, MultiIndex};

/// Coordinates `(α, λ)` of `SᵏV*⊗W`.
#[derive(Clone, Debug)]
pub struct SymCoords {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    alphas: Vec<MultiIndex>,
    position: HashMap<MultiIndex, usize>,
}

impl SymCoords {
    pub fn new(n: usize, m: usize, k: usize) -> Self {
        let alphas = multiindices(n, k as u32);
        let position = alphas
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        SymCoords {
            n,
            m,
            k,
            alphas,
            position,
        }
    }

    pub fn dim(&self) -> usize {
        self.m * self.alphas.len()
    }

    pub fn alphas(&self) -> &[MultiIndex] {
        &self.alphas
    }

    pub fn index(&self, lambda: usize, alpha: &MultiIndex) -> usize {
        self.position[alpha] * self.m + lambda
    }

    pub fn label(&self, c: usize) -> (usize, &MultiIndex) {
        (c % self.m, &self.alphas[c / self.m])
    }
}

/// Matrix of `ι_u : SᵏV*⊗W → S^{k−1}V*⊗W` for a vector `u ∈ V`.
pub fn contraction_matrix(n: usize, m: usize, k: usize, u: &[Rational]) -> QMatrix {
    assert!(k >= 1, "contraction needs k >= 1");
    let src = SymCoords::new(n, m, k);
    let dst = SymCoords::new(n, m, k - 1);
    let mut out = QMatrix::zeros(dst.dim(), src.dim());
    for r in 0..dst.dim() {
        let (l, a) = dst.label(r);
        for (j, uj) in u.iter().enumerate() {
            if !uj.is_zero() {
                out[(r, src.index(l, &a.plus(j)))] += uj;
            }
        }
    }
    out
}

fn unit(n: usize, i: usize) -> Vec<Rational> {
    let mut u = vec![Rational::zero(); n];
    u[i] = Rational::one();
    u
}

/// A subspace `g ⊂ SᵏV*⊗W`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolSpace {
    n: usize,
    m: usize,
    k: usize,
    space: Subspace,
}

impl SymbolSpace {
    pub fn new(n: usize, m: usize, k: usize, space: Subspace) -> Result<Self> {
        let expected = m * sym_dim(n, k);
        if space.ambient_dim() != expected {
            return Err(Error::DimensionMismatch {
                context: "symbol ambient dimension".into(),
                expected,
                found: space.ambient_dim(),
            });
        }
        Ok(SymbolSpace { n, m, k, space })
    }

    pub fn full(n: usize, m: usize, k: usize) -> Self {
        SymbolSpace {
            n,
            m,
            k,
            space: Subspace::full(m * sym_dim(n, k)),
        }
    }

    pub fn zero(n: usize, m: usize, k: usize) -> Self {
        SymbolSpace {
            n,
            m,
            k,
            space: Subspace::zero(m * sym_dim(n, k)),
        }
    }

    /// Common kernel of linear equations on the coordinates `v^λ_α`.
    pub fn from_equations(n: usize, m: usize, k: usize, rows: Vec<Vec<Rational>>) -> Result<Self> {
        let dim = m * sym_dim(n, k);
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                context: "symbol equation length".into(),
                expected: dim,
                found: r.len(),
            });
        }
        let space = if rows.is_empty() {
            Subspace::full(dim)
        } else {
            nullspace(&QMatrix::from_rows(dim, rows))
        };
        Ok(SymbolSpace { n, m, k, space })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn space(&self) -> &Subspace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.space.ambient_dim()
    }

    pub fn codim(&self) -> usize {
        self.ambient_dim() - self.dim()
    }

    pub fn coords(&self) -> SymCoords {
        SymCoords::new(self.n, self.m, self.k)
    }

    /// Defining equations: a basis of the annihilator.
    pub fn equations(&self) -> QMatrix {
        self.space.annihilator().basis().clone()
    }
}

/// `g^{(1)} = {v ∈ S^{k+1}V*⊗W : ι_i v ∈ g for every i}`.
pub fn prolong_symbol(g: &SymbolSpace) -> SymbolSpace {
    let (n, m, k) = (g.n, g.m, g.k);
    let eqs = g.equations();
    let target = m * sym_dim(n, k + 1);
    if eqs.rows() == 0 {
        return SymbolSpace::full(n, m, k + 1);
    }
    let mut rows = QMatrix::zeros(0, target);
    for i in 0..n {
        let c = contraction_matrix(n, m, k + 1, &unit(n, i));
        let r = eqs.mul(&c);
        for row in r.row_vecs() {
            rows.push_row(row);
        }
    }
    SymbolSpace {
        n,
        m,
        k: k + 1,
        space: nullspace(&rows),
    }
}

/// `g^{(r)}` in one step: every `r`-fold contraction `ι^γ v` (`|γ| = r`)
/// must lie in `g`.
pub fn prolong_symbol_direct(g: &SymbolSpace, r: usize) -> SymbolSpace {
    let (n, m, k) = (g.n, g.m, g.k);
    if r == 0 {
        return g.clone();
    }
    let eqs = g.equations();
    let src = SymCoords::new(n, m, k + r);
    let dst = g.coords();
    let mut rows = Vec::new();
    for gamma in multiindices(n, r as u32) {
        for e in eqs.row_vecs() {
            let mut row = vec![Rational::zero(); src.dim()];
            for (c, v) in e.iter().enumerate() {
                if v.is_zero() {
                    continue;
                }
                let (l, a) = dst.label(c);
                row[src.index(l, &a.add(&gamma))] += v;
            }
            rows.push(row);
        }
    }
    let space = if rows.is_empty() {
        Subspace::full(src.dim())
    } else {
        nullspace(&QMatrix::from_rows(src.dim(), rows))
    };
    SymbolSpace {
        n,
        m,
        k: k + r,
        space,
    }
}

/// What a family holds below its first stored member.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Below {
    /// all of `SʲV*⊗W`
    Full,
    /// nothing
    Zero,
}

/// Symbols `g_j ⊂ SʲV*⊗W` for all orders `j`: stored members from `start`
/// on, the `below` policy under it. A family generated from a seed extends
/// itself by prolongation.
#[derive(Clone, Debug)]
pub struct SymbolFamily {
    n: usize,
    m: usize,
    start: usize,
    members: Vec<SymbolSpace>,
    below: Below,
    extendable: bool,
}

impl SymbolFamily {
    /// The family `g, g^{(1)}, g^{(2)}, …` with full spaces below `g`.
    pub fn from_seed(g: SymbolSpace) -> Self {
        SymbolFamily {
            n: g.n,
            m: g.m,
            start: g.k,
            members: vec![g],
            below: Below::Full,
            extendable: true,
        }
    }

    /// Fixed members of consecutive orders from `start`; orders past the
    /// last member are unavailable.
    pub fn from_members(start: usize, members: Vec<SymbolSpace>, below: Below) -> Result<Self> {
        let first = members.first().ok_or(Error::MissingOrder(start))?;
        let (n, m) = (first.n, first.m);
        for (j, g) in members.iter().enumerate() {
            if g.n != n || g.m != m || g.k != start + j {
                return Err(Error::DimensionMismatch {
                    context: "family member order".into(),
                    expected: start + j,
                    found: g.k,
                });
            }
        }
        Ok(SymbolFamily {
            n,
            m,
            start,
            members,
            below,
            extendable: false,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn below(&self) -> Below {
        self.below
    }

    /// Highest order currently stored.
    pub fn top(&self) -> usize {
        self.start + self.members.len() - 1
    }

    /// Prolongs the last member until order `k` is present.
    pub fn extend_to(&mut self, k: usize) -> Result<()> {
        while self.top() < k {
            if !self.extendable {
                return Err(Error::MissingOrder(k));
            }
            let next = prolong_symbol(self.members.last().unwrap());
            self.members.push(next);
        }
        Ok(())
    }

    pub fn member(&self, k: usize) -> Result<SymbolSpace> {
        if k < self.start {
            return Ok(match self.below {
                Below::Full => SymbolSpace::full(self.n, self.m, k),
                Below::Zero => SymbolSpace::zero(self.n, self.m, k),
            });
        }
        self.members
            .get(k - self.start)
            .cloned()
            .ok_or(Error::MissingOrder(k))
    }

    pub fn dim(&self, k: usize) -> Result<usize> {
        self.member(k).map(|g| g.dim())
    }
}

/// Increasing `q`-subsets of `0..n`.
pub fn subsets(n: usize, q: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, q: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == q {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, q, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if q <= n {
        rec(0, n, q, &mut Vec::new(), &mut out);
    }
    out
}

/// Matrix of `δ : Λ^qV*⊗g_k → Λ^{q+1}V*⊗g_{k−1}`,
/// `δ(e_I ⊗ b) = Σ_i dx^i ∧ e_I ⊗ ι_i b`, in the bases `(I, basis of g)`.
/// Columns index the domain.
pub fn delta_map(family: &SymbolFamily, k: usize, q: usize) -> Result<QMatrix> {
    let n = family.n;
    let g = family.member(k)?;
    let dom_sets = subsets(n, q);
    let cod_sets = subsets(n, q + 1);
    let dom = dom_sets.len() * g.dim();
    if k == 0 {
        return Ok(QMatrix::zeros(0, dom));
    }
    let h = family.member(k - 1)?;
    let cod = cod_sets.len() * h.dim();
    let mut out = QMatrix::zeros(cod, dom);
    if dom == 0 || cod_sets.is_empty() {
        return Ok(out);
    }
    let cod_pos: HashMap<&Vec<usize>, usize> =
        cod_sets.iter().enumerate().map(|(i, s)| (s, i)).collect();
    // ι_i of each basis vector of g_k, in g_{k−1} coordinates
    let mut contracted = Vec::with_capacity(n);
    for i in 0..n {
        let c = contraction_matrix(n, family.m, k, &unit(n, i));
        let mut per_b = Vec::with_capacity(g.dim());
        for b in 0..g.dim() {
            let v = c.mul_vec(g.space().basis().row(b));
            let coords = h.space().coords_of(&v).ok_or(Error::NotAFamily(k))?;
            per_b.push(coords);
        }
        contracted.push(per_b);
    }
    for (ii, set) in dom_sets.iter().enumerate() {
        for i in (0..n).filter(|i| !set.contains(i)) {
            let before = set.iter().filter(|&&j| j < i).count();
            let sign = if before % 2 == 0 { Rational::one() } else { -Rational::one() };
            let mut joined = set.clone();
            joined.push(i);
            joined.sort_unstable();
            let jj = cod_pos[&joined];
            for b in 0..g.dim() {
                for (c, v) in contracted[i][b].iter().enumerate() {
                    if !v.is_zero() {
                        out[(jj * h.dim() + c, ii * g.dim() + b)] += &sign * v;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Dimension of the δ-cohomology at `Λ^qV*⊗g_k`. Needs orders `k+1`,
/// `k` and `k−1` when `q >= 1`.
pub fn cohomology_dim(family: &SymbolFamily, k: usize, q: usize) -> Result<usize> {
    let out = delta_map(family, k, q)?;
    let kernel = out.cols() - out.rank();
    let incoming = if q == 0 {
        0
    } else {
        delta_map(family, k + 1, q - 1)?.rank()
    };
    Ok(kernel - incoming)
}

/// Cohomology dimensions `H^{k,q}` for `k` in `lo..=hi` (rows) and
/// `q` in `0..=n` (columns). Extends seed families as needed.
pub fn cohomology_table(family: &mut SymbolFamily, lo: usize, hi: usize) -> Result<Vec<Vec<usize>>> {
    family.extend_to(hi + 1)?;
    (lo..=hi)
        .map(|k| (0..=family.n).map(|q| cohomology_dim(family, k, q)).collect())
        .collect()
}

/// Dimension of `Λ^q V* ⊗ g_k`.
pub fn cochain_dim(family: &SymbolFamily, k: usize, q: usize) -> Result<usize> {
    Ok(binomial(family.n, q) * family.dim(k)?)
}

/// Least `k` in `[family.start(), cap]` such that `H^{j,q} = 0` for every
/// `j` in `[k, cap]` and `1 <= q <= s`. `None` when even the cap order
/// carries cohomology: nothing can be certified beyond the cap.
pub fn acyclicity_onset(family: &mut SymbolFamily, s: usize, cap: usize) -> Result<Option<usize>> {
    let start = family.start;
    if cap < start {
        return Err(Error::CapTooSmall { cap, min: start });
    }
    family.extend_to(cap + 1)?;
    let mut onset = None;
    for k in (start..=cap).rev() {
        for q in 1..=s.min(family.n) {
            if cohomology_dim(family, k, q)? != 0 {
                return Ok(onset);
            }
        }
        onset = Some(k);
    }
    Ok(onset)
}

/// Least `k` in `[family.start(), cap]` from which every member through
/// the cap passes Cartan's test.
pub fn involutivity_onset(family: &mut SymbolFamily, cap: usize, seed: u64) -> Result<Option<usize>> {
    let start = family.start;
    if cap < start {
        return Err(Error::CapTooSmall { cap, min: start });
    }
    family.extend_to(cap)?;
    let mut onset = None;
    for k in (start..=cap).rev() {
        if !cartan_test(&family.member(k)?, seed) {
            break;
        }
        onset = Some(k);
    }
    Ok(onset)
}

/// Cartan characters `α_1..α_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CharacterVector {
    pub alpha: Vec<usize>,
}

impl CharacterVector {
    pub fn sum(&self) -> usize {
        self.alpha.iter().sum()
    }

    /// `Σ i·α_i`
    pub fn weighted_sum(&self) -> usize {
        self.alpha.iter().enumerate().map(|(i, a)| (i + 1) * a).sum()
    }
}

/// Characters for the flag `u_1, …, u_n` (rows of `flag`):
/// `g_(i) = {v ∈ g : ι_{u_1}v = … = ι_{u_i}v = 0}`, `α_i = dim g_(i−1) − dim g_(i)`
/// and `g_(n) = 0`.
pub fn characters_for_flag(g: &SymbolSpace, flag: &[Vec<Rational>]) -> CharacterVector {
    let n = g.n;
    let mut dims = vec![g.dim()];
    if g.k == 0 {
        dims.extend(std::iter::repeat_n(g.dim(), n - 1));
    } else {
        let mut constraints = QMatrix::zeros(0, g.ambient_dim());
        for u in flag.iter().take(n - 1) {
            let c = contraction_matrix(n, g.m, g.k, u);
            constraints = constraints.vstack(&c);
            let sub = nullspace(&constraints).intersect(g.space());
            dims.push(sub.dim());
        }
    }
    dims.push(0);
    CharacterVector {
        alpha: dims.windows(2).map(|w| w[0] - w[1]).collect(),
    }
}

fn random_flag(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<Rational>> {
    loop {
        let rows: Vec<Vec<Rational>> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| Rational::from_integer(BigInt::from(rng.gen_range(-5i64..=5))))
                    .collect()
            })
            .collect();
        if QMatrix::from_rows(n, rows.clone()).rank() == n {
            return rows;
        }
    }
}

/// Characters for a generic flag: the coordinate flag and five seeded
/// random flags are tried and the lexicographically largest result kept.
pub fn cartan_characters(g: &SymbolSpace, seed: u64) -> CharacterVector {
    let n = g.n;
    let coordinate: Vec<Vec<Rational>> = (0..n).map(|i| unit(n, i)).collect();
    let mut best = characters_for_flag(g, &coordinate);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..5 {
        let c = characters_for_flag(g, &random_flag(n, &mut rng));
        if c.alpha > best.alpha {
            best = c;
        }
    }
    best
}

/// Cartan's test: `dim g^{(1)} = Σ i·α_i`.
pub fn cartan_test(g: &SymbolSpace, seed: u64) -> bool {
    prolong_symbol(g).dim() == cartan_characters(g, seed).weighted_sum()
}
