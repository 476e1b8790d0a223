//! Multi-indices, jet coordinates, prolongation of vector fields to jet
//! spaces and the Engel basis of the isotropy algebra.
//!
//! Conventions used throughout the crate:
//!
//! * base coordinates are named `x1..xn`, fibre coordinates `y1..ym`;
//! * the jet coordinate `y^λ_α` is named `y{λ}[a1,...,an]` (so `y1[2,0]`),
//!   with `y^λ_0` written plainly as `y{λ}`;
//! * multi-indices are ordered by total order, then lexicographically with
//!   the first slot largest: `(2,0), (1,1), (0,2)`;
//! * jet coordinates are enumerated multi-index first, fibre index second.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactlin::Rational;
use crate::polyalg::{Monomial, Poly, PolyVectorField, Vars};

#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total order `|α|`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn plus(&self, i: usize) -> MultiIndex {
        let mut e = self.0.clone();
        e[i] += 1;
        MultiIndex(e)
    }

    pub fn minus(&self, i: usize) -> Option<MultiIndex> {
        if self.0[i] == 0 {
            return None;
        }
        let mut e = self.0.clone();
        e[i] -= 1;
        Some(MultiIndex(e))
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn first_nonzero(&self) -> Option<usize> {
        self.0.iter().position(|&a| a > 0)
    }

    /// `α! = α_1! ⋯ α_n!`
    pub fn factorial(&self) -> BigInt {
        self.0
            .iter()
            .flat_map(|&a| 1..=a)
            .fold(BigInt::one(), |acc, v| acc * v)
    }

    pub fn monomial(&self) -> Monomial {
        Monomial(self.0.clone())
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// All multi-indices of length `n` and order exactly `k`, in the global
/// order.
pub fn multiindices(n: usize, k: u32) -> Vec<MultiIndex> {
    fn rec(n: usize, k: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if prefix.len() + 1 == n {
            prefix.push(k);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for a in (0..=k).rev() {
            prefix.push(a);
            rec(n, k - a, prefix, out);
            prefix.pop();
        }
    }
    assert!(n >= 1, "multi-indices need n >= 1");
    let mut out = Vec::new();
    rec(n, k, &mut Vec::with_capacity(n), &mut out);
    out
}

/// All multi-indices with `lo <= |α| <= hi`.
pub fn multiindices_between(n: usize, lo: u32, hi: u32) -> Vec<MultiIndex> {
    (lo..=hi).flat_map(|k| multiindices(n, k)).collect()
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Dimension of `SᵏV*` for `dim V = n`.
pub fn sym_dim(n: usize, k: usize) -> usize {
    if n == 0 {
        return usize::from(k == 0);
    }
    binomial(n + k - 1, k)
}

pub fn base_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

pub fn fibre_names(m: usize) -> Vec<String> {
    (1..=m).map(|l| format!("y{l}")).collect()
}

/// Name of the jet coordinate `y^λ_α` (λ counted from 0).
pub fn jet_name(lambda: usize, alpha: &MultiIndex) -> String {
    if alpha.order() == 0 {
        format!("y{}", lambda + 1)
    } else {
        format!("y{}{}", lambda + 1, alpha)
    }
}

/// Variables `x1..xn`.
pub fn base_vars(n: usize) -> Vars {
    base_names(n).into()
}

/// Variables `x1..xn, y1..ym` of the total space.
pub fn total_vars(n: usize, m: usize) -> Vars {
    let mut v = base_names(n);
    v.extend(fibre_names(m));
    v.into()
}

/// Coordinates of `J_kE` for `E` with base dimension `n` and fibre
/// dimension `m`.
#[derive(Clone, Debug)]
pub struct JetSpec {
    n: usize,
    m: usize,
    k: u32,
    alphas: Vec<MultiIndex>,
    position: HashMap<MultiIndex, usize>,
    vars: Vars,
}

impl PartialEq for JetSpec {
    fn eq(&self, other: &Self) -> bool {
        (self.n, self.m, self.k) == (other.n, other.m, other.k)
    }
}

impl Eq for JetSpec {}

impl JetSpec {
    pub fn new(n: usize, m: usize, k: u32) -> Self {
        assert!(n >= 1, "base dimension must be positive");
        let alphas = multiindices_between(n, 0, k);
        let position = alphas
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        let mut names = base_names(n);
        for a in &alphas {
            for l in 0..m {
                names.push(jet_name(l, a));
            }
        }
        JetSpec {
            n,
            m,
            k,
            alphas,
            position,
            vars: names.into(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn order(&self) -> u32 {
        self.k
    }

    /// Multi-indices `|α| <= k` in coordinate order.
    pub fn alphas(&self) -> &[MultiIndex] {
        &self.alphas
    }

    /// Number of `(λ, α)` coordinates, `m·C(n+k, k)`.
    pub fn num_coords(&self) -> usize {
        self.m * self.alphas.len()
    }

    /// Fibre dimension of `J_kE → E`.
    pub fn fibre_dim_over_e(&self) -> usize {
        self.num_coords() - self.m
    }

    /// Index among the `(λ, α)` coordinates, or `None` when `|α| > k`.
    pub fn coord(&self, lambda: usize, alpha: &MultiIndex) -> Option<usize> {
        self.position.get(alpha).map(|p| p * self.m + lambda)
    }

    /// `(λ, α)` for a coordinate index.
    pub fn label(&self, c: usize) -> (usize, &MultiIndex) {
        (c % self.m, &self.alphas[c / self.m])
    }

    /// Coordinate indices with `|α|` in `lo..=hi`.
    pub fn coords_between(&self, lo: u32, hi: u32) -> Vec<usize> {
        (0..self.num_coords())
            .filter(|&c| {
                let o = self.label(c).1.order();
                lo <= o && o <= hi
            })
            .collect()
    }

    /// `x1..xn` followed by all jet coordinates.
    pub fn vars(&self) -> &Vars {
        &self.vars
    }

    /// Index of `y^λ_α` in [`JetSpec::vars`].
    pub fn var_index(&self, lambda: usize, alpha: &MultiIndex) -> Option<usize> {
        self.coord(lambda, alpha).map(|c| self.n + c)
    }

    /// Arity of a flat jet point `(x; y; ...)`.
    pub fn arity(&self) -> usize {
        self.n + self.num_coords()
    }

    /// Jet order matching a flat arity, if any.
    pub fn order_for_arity(n: usize, m: usize, arity: usize) -> Option<u32> {
        (0u32..=64)
            .map(|k| (k, n + m * binomial(n + k as usize, k as usize)))
            .take_while(|&(_, a)| a <= arity)
            .find(|&(_, a)| a == arity)
            .map(|(k, _)| k)
    }
}

/// A point of `J_kE`: base point plus one value per `(λ, α)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetPoint {
    spec: JetSpec,
    base: Vec<Rational>,
    values: Vec<Rational>,
}

impl JetPoint {
    pub fn new(spec: JetSpec, base: Vec<Rational>, values: Vec<Rational>) -> Result<Self> {
        if base.len() != spec.n {
            return Err(Error::DimensionMismatch {
                context: "jet base point".into(),
                expected: spec.n,
                found: base.len(),
            });
        }
        if values.len() != spec.num_coords() {
            return Err(Error::DimensionMismatch {
                context: "jet values".into(),
                expected: spec.num_coords(),
                found: values.len(),
            });
        }
        Ok(JetPoint { spec, base, values })
    }

    /// Reads `x1..xn` followed by the jet values; the order is inferred
    /// from the length.
    pub fn from_flat(n: usize, m: usize, flat: Vec<Rational>) -> Result<Self> {
        let k = JetSpec::order_for_arity(n, m, flat.len()).ok_or(Error::DimensionMismatch {
            context: "jet point arity".into(),
            expected: n + m,
            found: flat.len(),
        })?;
        let mut base = flat;
        let values = base.split_off(n);
        JetPoint::new(JetSpec::new(n, m, k), base, values)
    }

    /// `j_kS(z)` for a section given by one polynomial in `x1..xn` per
    /// fibre coordinate.
    pub fn from_section(spec: JetSpec, section: &[Poly], z: &[Rational]) -> Result<Self> {
        if section.len() != spec.m {
            return Err(Error::DimensionMismatch {
                context: "section components".into(),
                expected: spec.m,
                found: section.len(),
            });
        }
        let mut values = Vec::with_capacity(spec.num_coords());
        for a in &spec.alphas {
            for s in section {
                values.push(s.partial_multi(&a.0).eval(z)?);
            }
        }
        JetPoint::new(spec, z.to_vec(), values)
    }

    pub fn spec(&self) -> &JetSpec {
        &self.spec
    }

    pub fn base(&self) -> &[Rational] {
        &self.base
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn value(&self, lambda: usize, alpha: &MultiIndex) -> Option<&Rational> {
        self.spec.coord(lambda, alpha).map(|c| &self.values[c])
    }

    /// The jet as a point of the variables of its spec.
    pub fn coordinates(&self) -> Vec<Rational> {
        let mut v = self.base.clone();
        v.extend(self.values.iter().cloned());
        v
    }

    /// Projection to a lower order.
    pub fn truncate(&self, k: u32) -> JetPoint {
        assert!(k <= self.spec.k, "cannot truncate to a higher order");
        let spec = JetSpec::new(self.spec.n, self.spec.m, k);
        let values = self.values[..spec.num_coords()].to_vec();
        JetPoint {
            spec,
            base: self.base.clone(),
            values,
        }
    }

    /// Taylor polynomial `Σ y_α (x−z)^α / α!` of each fibre component.
    pub fn section(&self) -> Vec<Poly> {
        let xv = base_vars(self.spec.n);
        let shifted: Vec<Poly> = (0..self.spec.n)
            .map(|i| &Poly::var(&xv, i) - &Poly::constant(&xv, self.base[i].clone()))
            .collect();
        (0..self.spec.m)
            .map(|l| {
                let mut p = Poly::zero(&xv);
                for a in &self.spec.alphas {
                    let c = &self.values[self.spec.coord(l, a).unwrap()];
                    if c.is_zero() {
                        continue;
                    }
                    let mono = Poly::monomial(&xv, a.monomial(), Rational::one());
                    let term = mono.compose(&shifted, None);
                    p.add_scaled(&term, &(c / Rational::from_integer(a.factorial())));
                }
                p
            })
            .collect()
    }
}

impl fmt::Display for JetPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[Rational]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
        let mut groups = vec![join(&self.base)];
        for k in 0..=self.spec.k {
            let cs = self.spec.coords_between(k, k);
            let vals: Vec<Rational> = cs.iter().map(|&c| self.values[c].clone()).collect();
            groups.push(join(&vals));
        }
        write!(f, "{}", groups.join(";"))
    }
}

/// Indices of the variables a polynomial actually depends on.
fn support(p: &Poly) -> Vec<usize> {
    let n = p.vars().len();
    let mut used = vec![false; n];
    for (m, _) in p.terms() {
        for (i, &e) in m.0.iter().enumerate() {
            if e > 0 {
                used[i] = true;
            }
        }
    }
    (0..n).filter(|&i| used[i]).collect()
}

/// Total derivative `D_i f` on `J_kE`; `f` must not involve coordinates of
/// order `k`.
pub fn total_derivative(spec: &JetSpec, f: &Poly, i: usize) -> Poly {
    let mut out = f.partial(i);
    for v in support(f) {
        if v < spec.n {
            continue;
        }
        let (l, a) = spec.label(v - spec.n);
        let target = spec
            .var_index(l, &a.plus(i))
            .expect("total derivative exceeds the jet order");
        let d = f.partial(v);
        out = &out + &(&Poly::var(spec.vars(), target) * &d);
    }
    out
}

/// Prolongation of a field on `(x, y)` to `J_kE`. The field must be given
/// over the variables `x1..xn, y1..ym`.
pub fn prolong_field(xi: &PolyVectorField, spec: &JetSpec) -> Result<PolyVectorField> {
    let (n, m) = (spec.n, spec.m);
    let expected = total_vars(n, m);
    if xi.vars()[..] != expected[..] {
        return Err(Error::VariableMismatch {
            left: xi.vars().join(","),
            right: expected.join(","),
        });
    }
    let jv = spec.vars();
    let a: Vec<Poly> = (0..n)
        .map(|j| xi.component(j).embed(jv))
        .collect::<Result<_>>()?;
    // D_i a^j only involves first-order coordinates
    let da: Vec<Vec<Poly>> = if spec.k == 0 {
        Vec::new()
    } else {
        (0..n)
            .map(|i| a.iter().map(|aj| total_derivative(spec, aj, i)).collect())
            .collect()
    };
    let mut comps = vec![Poly::zero(jv); jv.len()];
    comps[..n].clone_from_slice(&a);
    for l in 0..m {
        let b = xi.component(n + l).embed(jv)?;
        comps[spec.var_index(l, &MultiIndex::zero(n)).unwrap()] = b;
    }
    for beta in spec.alphas.iter().skip(1) {
        let i = beta.first_nonzero().unwrap();
        let alpha = beta.minus(i).unwrap();
        for l in 0..m {
            let prev = &comps[spec.var_index(l, &alpha).unwrap()];
            let mut phi = total_derivative(spec, prev, i);
            for (j, daj) in da[i].iter().enumerate() {
                if daj.is_zero() {
                    continue;
                }
                let y = Poly::var(jv, spec.var_index(l, &alpha.plus(j)).unwrap());
                phi = &phi - &(&y * daj);
            }
            comps[spec.var_index(l, beta).unwrap()] = phi;
        }
    }
    PolyVectorField::new(jv, comps)
}

/// One Engel field `(1/β!)(x−z)^β ∂_{x^i}`.
#[derive(Clone, Debug)]
pub struct EngelField {
    pub beta: MultiIndex,
    pub direction: usize,
    pub field: PolyVectorField,
}

/// Engel fields for `lo <= |β| <= hi`, ordered by `β` and then by direction.
pub fn engel_fields(n: usize, lo: u32, hi: u32, z: &[Rational]) -> Vec<EngelField> {
    assert_eq!(z.len(), n, "base point arity");
    let xv = base_vars(n);
    let shifted: Vec<Poly> = (0..n)
        .map(|i| &Poly::var(&xv, i) - &Poly::constant(&xv, z[i].clone()))
        .collect();
    let mut out = Vec::new();
    for beta in multiindices_between(n, lo, hi) {
        let c = Rational::new(BigInt::one(), beta.factorial());
        let mono = Poly::monomial(&xv, beta.monomial(), c).compose(&shifted, None);
        for i in 0..n {
            let mut comps = vec![Poly::zero(&xv); n];
            comps[i] = mono.clone();
            out.push(EngelField {
                beta: beta.clone(),
                direction: i,
                field: PolyVectorField::new(&xv, comps).expect("arity"),
            });
        }
    }
    out
}

/// The Engel basis `1 <= |β| <= order` of the isotropy algebra at `z`.
pub fn engel_basis(n: usize, order: u32, z: &[Rational]) -> Vec<PolyVectorField> {
    engel_fields(n, 1, order, z)
        .into_iter()
        .map(|e| e.field)
        .collect()
}

/// Jet of a base field at `z`: `∂^γ ξ^i(z)` for `|γ| <= order`, listed by
/// `γ` then `i`.
pub fn field_jet(xi: &PolyVectorField, order: u32, z: &[Rational]) -> Result<Vec<Rational>> {
    let n = xi.vars().len();
    let mut out = Vec::new();
    for g in multiindices_between(n, 0, order) {
        for i in 0..n {
            out.push(xi.component(i).partial_multi(&g.0).eval(z)?);
        }
    }
    Ok(out)
}
