//! Prolongation spaces in coordinates: isotropy matrices over the Engel
//! basis, the block rank test for the Medolaghi–Vessiot equations, orbit
//! tangents, infinitesimal homogeneity and the action of germs on jets.
//!
//! A rule of order `ℓ` lifts a base field `ξ` to
//! `pξ = ξ^i ∂_{x^i} + (Σ c^λ_{(i,β)}(x,y) ∂^βξ^i) ∂_{y^λ}` with `|β| <= ℓ`.
//! Columns of every isotropy matrix are labelled by Engel fields `(β, i)`;
//! since the jets of the Engel fields at `z` are the dual basis of the
//! derivative coordinates, a kernel vector lists the values `∂^βξ^i(z)` of an
//! isotropy jet directly.

use std::fmt;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactlin::{nullspace, QMatrix, Rational, Subspace};
use crate::jetcalc::{
    base_vars, engel_fields, multiindices_between, prolong_field, sym_dim, total_vars, EngelField,
    JetPoint, JetSpec, MultiIndex,
};
use crate::polyalg::{parse_linear, Monomial, Poly, PolyVectorField};
use crate::spencer::{cohomology_dim, Below, SymbolFamily, SymbolSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Builtin {
    OneForm,
    VectorField,
    Metric,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::OneForm => "oneform",
            Builtin::VectorField => "vectorfield",
            Builtin::Metric => "metric",
        }
    }

    pub fn from_name(s: &str) -> Option<Builtin> {
        match s {
            "oneform" => Some(Builtin::OneForm),
            "vectorfield" => Some(Builtin::VectorField),
            "metric" => Some(Builtin::Metric),
            _ => None,
        }
    }

    pub fn fibre_dim(self, n: usize) -> usize {
        match self {
            Builtin::OneForm | Builtin::VectorField => n,
            Builtin::Metric => n * (n + 1) / 2,
        }
    }
}

/// Position of `g_ij` (`i <= j`) among the metric fibre coordinates, which
/// run `g_11, g_12, …, g_1n, g_22, …`.
pub fn metric_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    (0..i).map(|r| n - r).sum::<usize>() + (j - i)
}

/// Sums terms with the same `(i, β)` and drops zero coefficients.
fn merge_terms(terms: Vec<LiftTerm>) -> Vec<LiftTerm> {
    let mut out: Vec<LiftTerm> = Vec::new();
    for t in terms {
        match out
            .iter_mut()
            .find(|o| o.direction == t.direction && o.beta == t.beta)
        {
            Some(o) => o.coef = &o.coef + &t.coef,
            None => out.push(t),
        }
    }
    out.retain(|t| !t.coef.is_zero());
    out
}

/// One coefficient `c^λ_{(i,β)}` of a lift.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftTerm {
    pub direction: usize,
    pub beta: MultiIndex,
    pub coef: Poly,
}

#[derive(Clone, Debug)]
pub struct ProlongationRule {
    n: usize,
    m: usize,
    ell: u32,
    lift: Vec<Vec<LiftTerm>>,
    builtin: Option<Builtin>,
}

fn y(n: usize, m: usize, l: usize) -> Poly {
    Poly::var(&total_vars(n, m), n + l)
}

impl ProlongationRule {
    /// Validates the lift and checks `p[ξ,η] = [pξ,pη]` on a random pair of
    /// polynomial fields.
    pub fn new(n: usize, m: usize, ell: u32, lift: Vec<Vec<LiftTerm>>) -> Result<Self> {
        Self::build(n, m, ell, lift, None)
    }

    fn build(
        n: usize,
        m: usize,
        ell: u32,
        lift: Vec<Vec<LiftTerm>>,
        builtin: Option<Builtin>,
    ) -> Result<Self> {
        if lift.len() != m {
            return Err(Error::DimensionMismatch {
                context: "lift components".into(),
                expected: m,
                found: lift.len(),
            });
        }
        let tv = total_vars(n, m);
        for t in lift.iter().flatten() {
            if t.direction >= n {
                return Err(Error::IndexOutOfRange {
                    index: t.direction,
                    bound: n,
                });
            }
            if t.beta.len() != n || t.beta.order() > ell {
                return Err(Error::DimensionMismatch {
                    context: "lift multi-index".into(),
                    expected: ell as usize,
                    found: t.beta.order() as usize,
                });
            }
            if t.coef.vars()[..] != tv[..] {
                return Err(Error::VariableMismatch {
                    left: t.coef.vars().join(","),
                    right: tv.join(","),
                });
            }
        }
        let lift = lift.into_iter().map(merge_terms).collect();
        let rule = ProlongationRule {
            n,
            m,
            ell,
            lift,
            builtin,
        };
        rule.check_brackets(0x5eed)?;
        Ok(rule)
    }

    /// Reads lift lines `y1 = -y1*xi1[1]`: the right-hand side is linear in
    /// the symbols `xi{i}[β]` (`xi{i}` for `β = 0`) with polynomial
    /// coefficients in `x1..xn, y1..ym`. Missing components are zero.
    pub fn parse(n: usize, m: usize, ell: u32, lines: &[(String, String)]) -> Result<Self> {
        let tv = total_vars(n, m);
        let mut symbols = Vec::new();
        let mut targets = Vec::new();
        for beta in multiindices_between(n, 0, ell) {
            for i in 0..n {
                symbols.push(format!("xi{}{}", i + 1, beta));
                targets.push((i, beta.clone()));
            }
        }
        for i in 0..n {
            symbols.push(format!("xi{}", i + 1));
            targets.push((i, MultiIndex::zero(n)));
        }
        let mut lift = vec![Vec::new(); m];
        let mut seen = vec![false; m];
        for (lhs, rhs) in lines {
            let l = (1..=m)
                .find(|l| lhs.trim() == format!("y{l}"))
                .ok_or_else(|| Error::parse(format!("unknown lift component `{}`", lhs.trim())))?
                - 1;
            if seen[l] {
                return Err(Error::parse(format!("lift component `{}` given twice", lhs.trim())));
            }
            seen[l] = true;
            let coeffs = parse_linear(rhs, &tv, &symbols)?;
            let terms = coeffs
                .into_iter()
                .zip(&targets)
                .map(|(coef, (i, beta))| LiftTerm {
                    direction: *i,
                    beta: beta.clone(),
                    coef,
                })
                .collect();
            lift[l] = terms;
        }
        ProlongationRule::new(n, m, ell, lift)
    }

    pub fn builtin(kind: Builtin, n: usize) -> Self {
        let m = kind.fibre_dim(n);
        let mut lift = vec![Vec::new(); m];
        match kind {
            // (pξ)_{y_i} = −y_j ∂_iξ^j
            Builtin::OneForm => {
                for (i, terms) in lift.iter_mut().enumerate() {
                    for j in 0..n {
                        terms.push(LiftTerm {
                            direction: j,
                            beta: MultiIndex::unit(n, i),
                            coef: -&y(n, m, j),
                        });
                    }
                }
            }
            // (pξ)_{y^i} = y^j ∂_jξ^i
            Builtin::VectorField => {
                for (i, terms) in lift.iter_mut().enumerate() {
                    for j in 0..n {
                        terms.push(LiftTerm {
                            direction: i,
                            beta: MultiIndex::unit(n, j),
                            coef: y(n, m, j),
                        });
                    }
                }
            }
            // (pξ)_{g_ij} = −(g_kj ∂_iξ^k + g_ik ∂_jξ^k)
            Builtin::Metric => {
                for i in 0..n {
                    for j in i..n {
                        let terms = &mut lift[metric_index(n, i, j)];
                        for k in 0..n {
                            terms.push(LiftTerm {
                                direction: k,
                                beta: MultiIndex::unit(n, i),
                                coef: -&y(n, m, metric_index(n, k, j)),
                            });
                            terms.push(LiftTerm {
                                direction: k,
                                beta: MultiIndex::unit(n, j),
                                coef: -&y(n, m, metric_index(n, i, k)),
                            });
                        }
                    }
                }
            }
        }
        Self::build(n, m, 1, lift, Some(kind)).expect("built-in rules are bracket compatible")
    }

    /// The rule whose lift has no vertical part.
    pub fn zero(n: usize, m: usize, ell: u32) -> Self {
        ProlongationRule {
            n,
            m,
            ell,
            lift: vec![Vec::new(); m],
            builtin: None,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn order(&self) -> u32 {
        self.ell
    }

    pub fn kind(&self) -> Option<Builtin> {
        self.builtin
    }

    pub fn lift_terms(&self) -> &[Vec<LiftTerm>] {
        &self.lift
    }

    /// Lift lines in the syntax read by [`ProlongationRule::parse`].
    pub fn lift_lines(&self) -> Vec<String> {
        let tv = total_vars(self.n, self.m);
        self.lift
            .iter()
            .enumerate()
            .map(|(l, terms)| {
                let parts: Vec<String> = terms
                    .iter()
                    .map(|t| format!("({})*xi{}{}", t.coef, t.direction + 1, t.beta))
                    .collect();
                let rhs = if parts.is_empty() {
                    Poly::zero(&tv).to_string()
                } else {
                    parts.join(" + ")
                };
                format!("y{} = {}", l + 1, rhs)
            })
            .collect()
    }

    /// `pξ` for a field over `x1..xn`.
    pub fn lift(&self, xi: &PolyVectorField) -> Result<PolyVectorField> {
        let bv = base_vars(self.n);
        if xi.vars()[..] != bv[..] {
            return Err(Error::VariableMismatch {
                left: xi.vars().join(","),
                right: bv.join(","),
            });
        }
        let tv = total_vars(self.n, self.m);
        let mut comps = Vec::with_capacity(self.n + self.m);
        for c in xi.components() {
            comps.push(c.embed(&tv)?);
        }
        for terms in &self.lift {
            let mut v = Poly::zero(&tv);
            for t in terms {
                let d = xi.component(t.direction).partial_multi(&t.beta.0);
                if !d.is_zero() {
                    v = &v + &(&t.coef * &d.embed(&tv)?);
                }
            }
            comps.push(v);
        }
        PolyVectorField::new(&tv, comps)
    }

    fn check_brackets(&self, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bv = base_vars(self.n);
        let mut random_field = || {
            let comps = (0..self.n)
                .map(|_| {
                    let mut p = Poly::zero(&bv);
                    for _ in 0..4 {
                        let e: Vec<u32> = (0..self.n).map(|_| rng.gen_range(0..=self.ell + 1)).collect();
                        let c = Rational::from_integer(rng.gen_range(-3i64..=3).into());
                        p = &p + &Poly::monomial(&bv, Monomial(e), c);
                    }
                    p
                })
                .collect();
            PolyVectorField::new(&bv, comps).unwrap()
        };
        let a = random_field();
        let b = random_field();
        let lhs = self.lift(&a.bracket(&b)?)?;
        let rhs = self.lift(&a)?.bracket(&self.lift(&b)?)?;
        if lhs != rhs {
            let diff = lhs.add(&rhs.scale(&-Rational::one()));
            return Err(Error::BracketIncompatible(format!(
                "p[ξ,η] − [pξ,pη] = {diff}"
            )));
        }
        Ok(())
    }

    fn check_jet(&self, z: &JetPoint) -> Result<()> {
        if z.spec().n() != self.n || z.spec().m() != self.m {
            return Err(Error::DimensionMismatch {
                context: "jet point against rule (n·m)".into(),
                expected: self.n * self.m,
                found: z.spec().n() * z.spec().m(),
            });
        }
        Ok(())
    }

    /// Prolonged lifts `p_k(pε)` of the Engel fields with `lo <= |β| <= hi`
    /// at `z`.
    pub fn prolonged_engel(
        &self,
        z: &[Rational],
        lo: u32,
        hi: u32,
        k: u32,
    ) -> Result<Vec<(EngelField, PolyVectorField)>> {
        let spec = JetSpec::new(self.n, self.m, k);
        engel_fields(self.n, lo, hi, z)
            .into_iter()
            .map(|e| {
                let p = prolong_field(&self.lift(&e.field)?, &spec)?;
                Ok((e, p))
            })
            .collect()
    }
}

/// Columns: the prolonged fields evaluated at `z`; rows: `x` then jet
/// coordinates.
fn evaluate_columns(fields: &[(EngelField, PolyVectorField)], z: &JetPoint) -> Result<QMatrix> {
    let point = z.coordinates();
    let cols: Vec<Vec<Rational>> = fields
        .iter()
        .map(|(_, f)| f.eval(&point))
        .collect::<Result<_>>()?;
    Ok(QMatrix::from_rows(point.len(), cols).transpose())
}

fn vertical_rows(n: usize, m: QMatrix) -> QMatrix {
    let rows: Vec<usize> = (n..m.rows()).collect();
    let cols: Vec<usize> = (0..m.cols()).collect();
    m.select(&rows, &cols)
}

/// Matrix of `λ̄_k` at `Z`: rows `(λ, α)` with `|α| <= k`, columns Engel
/// fields `(β, i)` with `1 <= |β| <= ℓ+k`. Its corank is the dimension of the
/// isotropy `R⁰_{ℓ+k}` at `Z`.
pub fn lambda_matrix(rule: &ProlongationRule, z: &JetPoint) -> Result<QMatrix> {
    rule.check_jet(z)?;
    let k = z.spec().order();
    let fields = rule.prolonged_engel(z.base(), 1, rule.ell + k, k)?;
    Ok(vertical_rows(rule.n, evaluate_columns(&fields, z)?))
}

/// Labels `(β, i)` of the columns of [`lambda_matrix`] at order `k`.
pub fn column_labels(n: usize, lo: u32, hi: u32) -> Vec<(MultiIndex, usize)> {
    multiindices_between(n, lo, hi)
        .into_iter()
        .flat_map(|b| (0..n).map(move |i| (b.clone(), i)))
        .collect()
}

pub fn isotropy(rule: &ProlongationRule, z: &JetPoint) -> Result<Subspace> {
    Ok(nullspace(&lambda_matrix(rule, z)?))
}

pub fn isotropy_dim(rule: &ProlongationRule, z: &JetPoint) -> Result<usize> {
    let a = lambda_matrix(rule, z)?;
    Ok(a.cols() - a.rank())
}

/// The blocks of `λ̄_{k+1}` at `W`, `Z = ρ_k W`:
///
/// ```text
///            |β| <= ℓ+k   |β| = ℓ+k+1
/// |α| = k+1      B             C
/// |α| <= k       A             0
/// ```
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MVBlocks {
    pub k: u32,
    pub a: QMatrix,
    pub b: QMatrix,
    pub c: QMatrix,
    /// The block under `C`, zero for every genuine rule.
    pub zero_block: QMatrix,
}

impl MVBlocks {
    pub fn from_full(full: &QMatrix, spec: &JetSpec, low_cols: usize) -> MVBlocks {
        let k = spec.order() - 1;
        let low = spec.coords_between(0, k);
        let top = spec.coords_between(k + 1, k + 1);
        let lc: Vec<usize> = (0..low_cols).collect();
        let tc: Vec<usize> = (low_cols..full.cols()).collect();
        MVBlocks {
            k,
            a: full.select(&low, &lc),
            b: full.select(&top, &lc),
            c: full.select(&top, &tc),
            zero_block: full.select(&low, &tc),
        }
    }

    /// `[[B, C], [A, 0]]`
    pub fn assemble(&self) -> QMatrix {
        self.b
            .hstack(&self.c)
            .vstack(&self.a.hstack(&self.zero_block))
    }

    /// `rank [[B,C],[A,0]] = rank A + rank C`
    pub fn rank_condition(&self) -> bool {
        self.assemble().rank() == self.a.rank() + self.c.rank()
    }
}

/// Blocks at a jet `W` of order `k+1 >= 1`.
pub fn mv_blocks(rule: &ProlongationRule, w: &JetPoint) -> Result<MVBlocks> {
    rule.check_jet(w)?;
    let k1 = w.spec().order();
    if k1 == 0 {
        return Err(Error::DimensionMismatch {
            context: "jet order for the rank test".into(),
            expected: 1,
            found: 0,
        });
    }
    let full = lambda_matrix(rule, w)?;
    let low_cols = rule.n * (1..=rule.ell + k1 - 1).map(|o| sym_dim(rule.n, o as usize)).sum::<usize>();
    Ok(MVBlocks::from_full(&full, w.spec(), low_cols))
}

/// `W ∈ Θ_{k+1}`: the isotropy projection at `W` is onto.
pub fn mv_test(rule: &ProlongationRule, w: &JetPoint) -> Result<bool> {
    Ok(mv_blocks(rule, w)?.rank_condition())
}

/// Isotropy matrix computed along a section instead of by prolongation: for
/// `ξ = a^i∂_i + b^λ∂_{y^λ}` and any section `S` through the jet, the
/// component on `y^λ_α` is `∂^α Q^λ(z) + a^i(z) ∂^{α+e_i}S^λ(z)` with
/// `Q^λ = b^λ(x, S(x)) − a^i ∂_iS^λ`. Rows: `x` then jet coordinates.
pub fn characteristic_matrix(
    rule: &ProlongationRule,
    w: &JetPoint,
    lo: u32,
    hi: u32,
) -> Result<QMatrix> {
    rule.check_jet(w)?;
    let (n, m) = (rule.n, rule.m);
    let z = w.base();
    let spec = w.spec();
    let section = w.section();
    let bv = base_vars(n);
    let mut subs: Vec<Poly> = (0..n).map(|i| Poly::var(&bv, i)).collect();
    subs.extend(section.iter().cloned());
    let mut cols = Vec::new();
    for e in engel_fields(n, lo, hi, z) {
        let p = rule.lift(&e.field)?;
        let a: Vec<Poly> = e.field.components().to_vec();
        let az: Vec<Rational> = a.iter().map(|ai| ai.eval(z)).collect::<Result<_>>()?;
        let mut col = az.clone();
        col.resize(n + spec.num_coords(), Rational::zero());
        for l in 0..m {
            let mut q = p.component(n + l).compose(&subs, None);
            for (i, ai) in a.iter().enumerate() {
                if !ai.is_zero() {
                    q = &q - &(ai * &section[l].partial(i));
                }
            }
            for alpha in spec.alphas() {
                let mut v = q.partial_multi(&alpha.0).eval(z)?;
                for (i, ai) in az.iter().enumerate() {
                    if !ai.is_zero() {
                        v += ai * section[l].partial_multi(&alpha.plus(i).0).eval(z)?;
                    }
                }
                col[n + spec.coord(l, alpha).unwrap()] = v;
            }
        }
        cols.push(col);
    }
    Ok(QMatrix::from_rows(n + spec.num_coords(), cols).transpose())
}

/// Dimensions reported by the projection oracle at `W` (order `k+1`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleDims {
    /// `dim R⁰_{ℓ+k+1}` at `W`
    pub upper: usize,
    /// dimension of its image in `R⁰_{ℓ+k}`
    pub projection: usize,
    /// `dim R⁰_{ℓ+k}` at `ρ_k W`
    pub lower: usize,
    pub surjective: bool,
}

/// Both isotropies from kernels of matrices built along a section, the
/// upper one projected onto the `|β| <= ℓ+k` coordinates and compared in
/// canonical form.
pub fn isotropy_projection_oracle(rule: &ProlongationRule, w: &JetPoint) -> Result<OracleDims> {
    let k1 = w.spec().order();
    if k1 == 0 {
        return Err(Error::DimensionMismatch {
            context: "jet order for the projection oracle".into(),
            expected: 1,
            found: 0,
        });
    }
    let z = w.truncate(k1 - 1);
    let upper_m = vertical_rows(rule.n, characteristic_matrix(rule, w, 1, rule.ell + k1)?);
    let lower_m = vertical_rows(rule.n, characteristic_matrix(rule, &z, 1, rule.ell + k1 - 1)?);
    let upper = nullspace(&upper_m);
    let lower = nullspace(&lower_m);
    let kept: Vec<usize> = (0..lower_m.cols()).collect();
    let projection = upper.project_coords(&kept)?;
    Ok(OracleDims {
        upper: upper.dim(),
        projection: projection.dim(),
        lower: lower.dim(),
        surjective: projection == lower,
    })
}

/// Rank test against the oracle; a disagreement is an internal error.
pub fn cross_check(blocks: &MVBlocks, oracle: &OracleDims) -> Result<bool> {
    let verdict = blocks.rank_condition();
    let lower = blocks.a.cols() - blocks.a.rank();
    if verdict != oracle.surjective || lower != oracle.lower {
        return Err(Error::OracleMismatch(format!(
            "rank test says {verdict} (isotropy {lower}), projection oracle says {} (isotropy {})",
            oracle.surjective, oracle.lower
        )));
    }
    Ok(verdict)
}

/// Evaluation matrix of all prolonged fields `(1/β!)(x−z)^β∂_i`,
/// `0 <= |β| <= ℓ+k`, at `Z`; its column space is the orbit tangent.
pub fn orbit_tangent_matrix(rule: &ProlongationRule, z: &JetPoint) -> Result<QMatrix> {
    rule.check_jet(z)?;
    let k = z.spec().order();
    let fields = rule.prolonged_engel(z.base(), 0, rule.ell + k, k)?;
    evaluate_columns(&fields, z)
}

pub fn orbit_tangent_dim(rule: &ProlongationRule, z: &JetPoint) -> Result<usize> {
    Ok(orbit_tangent_matrix(rule, z)?.rank())
}

/// Tangent vectors of `x ↦ j_kS(x)` at `z`, one per base direction.
pub fn section_tangents(section: &[Poly], z: &[Rational], k: u32) -> Result<Vec<Vec<Rational>>> {
    let n = z.len();
    let spec = JetSpec::new(n, section.len(), k);
    (0..n)
        .map(|i| {
            let mut v = vec![Rational::zero(); n + spec.num_coords()];
            v[i] = Rational::one();
            for alpha in spec.alphas() {
                for (l, s) in section.iter().enumerate() {
                    v[n + spec.coord(l, alpha).unwrap()] = s.partial_multi(&alpha.plus(i).0).eval(z)?;
                }
            }
            Ok(v)
        })
        .collect()
}

/// Whether the image of `j_kS` is tangent to the orbits at `z`.
pub fn homogeneity_test(
    rule: &ProlongationRule,
    section: &[Poly],
    z: &[Rational],
    k: u32,
) -> Result<bool> {
    let jet = JetPoint::from_section(JetSpec::new(rule.n, rule.m, k), section, z)?;
    let t = orbit_tangent_matrix(rule, &jet)?;
    let span = Subspace::from_matrix(&t.transpose());
    Ok(section_tangents(section, z, k)?
        .iter()
        .all(|v| span.contains(v)))
}

/// The symbol `g_{ℓ+k}` at `Z` (order `k`): isotropy jets whose only
/// non-zero part has order `ℓ+k`, as a subspace of `S^{ℓ+k}T*⊗T`.
pub fn isotropy_symbol(rule: &ProlongationRule, z: &JetPoint) -> Result<SymbolSpace> {
    let a = lambda_matrix(rule, z)?;
    let top = rule.ell + z.spec().order();
    let n = rule.n;
    let first = a.cols() - n * sym_dim(n, top as usize);
    let rows: Vec<usize> = (0..a.rows()).collect();
    let cols: Vec<usize> = (first..a.cols()).collect();
    SymbolSpace::new(n, n, top as usize, nullspace(&a.select(&rows, &cols)))
}

/// `Δ_{k−1,k}` at `Z` (order `k`): orbit tangent vectors with no component
/// on `x` or on any `y^λ_α`, `|α| < k`, as a subspace of `SᵏT*⊗VE`.
pub fn tangent_kernel(rule: &ProlongationRule, z: &JetPoint) -> Result<SymbolSpace> {
    let t = orbit_tangent_matrix(rule, z)?;
    let k = z.spec().order();
    let spec = z.spec();
    let n = rule.n;
    let dim = t.rows();
    let top: Vec<usize> = spec
        .coords_between(k, k)
        .into_iter()
        .map(|c| n + c)
        .collect();
    let span = Subspace::from_matrix(&t.transpose());
    let coordinate = Subspace::span(
        dim,
        top.iter()
            .map(|&r| {
                let mut v = vec![Rational::zero(); dim];
                v[r] = Rational::one();
                v
            })
            .collect(),
    );
    let kernel = span.intersect(&coordinate).project_coords(&top)?;
    SymbolSpace::new(n, rule.m, k as usize, kernel)
}

/// A polynomial map `x ↦ φ(x)` of the base, acting on jets at a point.
#[derive(Clone, Debug)]
pub struct Germ {
    map: Vec<Poly>,
}

impl Germ {
    pub fn new(map: Vec<Poly>) -> Result<Self> {
        let n = map.len();
        let bv = base_vars(n);
        for p in &map {
            if p.vars()[..] != bv[..] {
                return Err(Error::VariableMismatch {
                    left: p.vars().join(","),
                    right: bv.join(","),
                });
            }
        }
        Ok(Germ { map })
    }

    pub fn identity(n: usize) -> Self {
        let bv = base_vars(n);
        Germ {
            map: (0..n).map(|i| Poly::var(&bv, i)).collect(),
        }
    }

    pub fn map(&self) -> &[Poly] {
        &self.map
    }
}

/// Shifted germ `φ̂(s) = φ(z+s) − φ(z)` and an inverse `ψ̂` with
/// `φ̂(ψ̂(t)) = t` through degree `order`.
fn local_inverse(phi: &[Poly], z: &[Rational], order: u32) -> Result<(Vec<Poly>, Vec<Poly>)> {
    let n = z.len();
    let bv = base_vars(n);
    let shift: Vec<Poly> = (0..n)
        .map(|i| &Poly::var(&bv, i) + &Poly::constant(&bv, z[i].clone()))
        .collect();
    let hat: Vec<Poly> = phi
        .iter()
        .map(|p| {
            let q = p.compose(&shift, None);
            &q - &Poly::constant(&bv, q.constant_term())
        })
        .collect();
    let lin = QMatrix::from_rows(
        n,
        hat.iter()
            .map(|p| (0..n).map(|j| p.coeff(&Monomial(unit_exp(n, j)))).collect())
            .collect(),
    );
    let inv = lin.inverse().ok_or(Error::NonInvertibleLinearPart)?;
    let apply = |m: &QMatrix, v: &[Poly]| -> Vec<Poly> {
        (0..n)
            .map(|i| {
                let mut acc = Poly::zero(&bv);
                for (j, vj) in v.iter().enumerate() {
                    acc.add_scaled(vj, &m[(i, j)]);
                }
                acc
            })
            .collect()
    };
    let t: Vec<Poly> = (0..n).map(|i| Poly::var(&bv, i)).collect();
    let linear_part = apply(&lin, &t);
    let nonlinear: Vec<Poly> = hat.iter().zip(&linear_part).map(|(h, l)| h - l).collect();
    let mut psi = apply(&inv, &t);
    for _ in 0..order {
        let n_psi: Vec<Poly> = nonlinear.iter().map(|p| p.compose(&psi, Some(order))).collect();
        let rhs: Vec<Poly> = t.iter().zip(&n_psi).map(|(a, b)| a - b).collect();
        psi = apply(&inv, &rhs);
    }
    Ok((hat, psi))
}

fn unit_exp(n: usize, j: usize) -> Vec<u32> {
    let mut e = vec![0; n];
    e[j] = 1;
    e
}

/// Image of the jet `Z` under the germ, using the finite form of a built-in
/// rule: covectors pull back by `ψ = φ^{-1}`, vectors push forward by `Dφ`,
/// metrics pull back by `ψ`.
pub fn transform_jet(rule: &ProlongationRule, germ: &Germ, z: &JetPoint) -> Result<JetPoint> {
    rule.check_jet(z)?;
    let kind = rule.builtin.ok_or(Error::NoFiniteLift)?;
    let n = rule.n;
    if germ.map.len() != n {
        return Err(Error::DimensionMismatch {
            context: "germ components".into(),
            expected: n,
            found: germ.map.len(),
        });
    }
    let k = z.spec().order();
    let top = k + 1;
    let (hat, psi) = local_inverse(&germ.map, z.base(), top)?;
    let w: Vec<Rational> = germ.map.iter().map(|p| p.eval(z.base())).collect::<Result<_>>()?;
    let bv = base_vars(n);
    let spec = z.spec().clone();
    // Taylor representative in the shifted variable s = x − z
    let s_rep: Vec<Poly> = (0..rule.m)
        .map(|l| {
            let mut p = Poly::zero(&bv);
            for a in spec.alphas() {
                let c = z.value(l, a).unwrap();
                if !c.is_zero() {
                    let f = Rational::from_integer(a.factorial());
                    p.add_scaled(&Poly::monomial(&bv, a.monomial(), Rational::one()), &(c / f));
                }
            }
            p
        })
        .collect();
    let comp = |p: &Poly| p.compose(&psi, Some(top));
    let dpsi: Vec<Vec<Poly>> = psi
        .iter()
        .map(|p| (0..n).map(|i| p.partial(i)).collect())
        .collect();
    let pulled: Vec<Poly> = s_rep.iter().map(comp).collect();
    let out: Vec<Poly> = match kind {
        Builtin::OneForm => (0..n)
            .map(|i| {
                let mut acc = Poly::zero(&bv);
                for j in 0..n {
                    acc = &acc + &(&pulled[j] * &dpsi[j][i]);
                }
                acc
            })
            .collect(),
        Builtin::VectorField => (0..n)
            .map(|i| {
                let mut acc = Poly::zero(&bv);
                for j in 0..n {
                    acc = &acc + &(&comp(&hat[i].partial(j)) * &pulled[j]);
                }
                acc
            })
            .collect(),
        Builtin::Metric => {
            let mut out = vec![Poly::zero(&bv); rule.m];
            for i in 0..n {
                for j in i..n {
                    let mut acc = Poly::zero(&bv);
                    for a in 0..n {
                        for b in 0..n {
                            let g = &pulled[metric_index(n, a, b)];
                            acc = &acc + &(&(g * &dpsi[a][i]) * &dpsi[b][j]);
                        }
                    }
                    out[metric_index(n, i, j)] = acc;
                }
            }
            out
        }
    };
    let mut values = Vec::with_capacity(spec.num_coords());
    for a in spec.alphas() {
        let f = Rational::from_integer(a.factorial());
        for p in &out {
            values.push(p.coeff(&a.monomial()) * &f);
        }
    }
    JetPoint::new(spec, w, values)
}

/// Cohomology tables of the tangent-kernel family along a section and of the
/// rule's symbol family, with the index shift under which their vanishing
/// patterns match.
#[derive(Clone, Debug, Serialize)]
pub struct ShiftReport {
    /// orders `k` of the tangent kernels `Δ_{k−1,k}`
    pub window: (usize, usize),
    /// `delta[k − lo][q]`
    pub delta: Vec<Vec<usize>>,
    /// `symbol[j][q]` for `j` in `0..=hi + 2`
    pub symbol: Vec<Vec<usize>>,
    /// shifts `d` such that `H_Δ^{k,q} = 0 ⇔ H_g^{k+d,q+1} = 0` throughout the
    /// window, for `0 <= q < n`
    pub matching_shifts: Vec<i64>,
    /// the shift with all tested cells in agreement, preferring the one
    /// closest to `ℓ − 1`
    pub observed_shift: Option<i64>,
}

/// Compares the δ-cohomology of `Δ_{k−1,k}` at `j_kS(z)` for `k` in the
/// window with that of the symbols `g_j` of the rule at `S(z)`.
pub fn degree_shift(
    rule: &ProlongationRule,
    section: &[Poly],
    z: &[Rational],
    window: (usize, usize),
) -> Result<ShiftReport> {
    let (lo, hi) = window;
    let n = rule.n;
    let mut members = Vec::new();
    for k in 0..=hi + 1 {
        let jet = JetPoint::from_section(JetSpec::new(n, rule.m, k as u32), section, z)?;
        members.push(tangent_kernel(rule, &jet)?);
    }
    let delta_family = SymbolFamily::from_members(0, members, Below::Zero)?;
    let base_jet = JetPoint::from_section(JetSpec::new(n, rule.m, 0), section, z)?;
    let mut g_family = SymbolFamily::from_seed(isotropy_symbol(rule, &base_jet)?);
    let g_top = hi + 3;
    g_family.extend_to(g_top.max(g_family.start()))?;
    let delta: Vec<Vec<usize>> = (lo..=hi)
        .map(|k| (0..=n).map(|q| cohomology_dim(&delta_family, k, q)).collect())
        .collect::<Result<_>>()?;
    let symbol: Vec<Vec<usize>> = (0..=hi + 2)
        .map(|j| (0..=n).map(|q| cohomology_dim(&g_family, j, q)).collect())
        .collect::<Result<_>>()?;
    let mut matching = Vec::new();
    for d in -1i64..=2 {
        let ok = (lo..=hi).all(|k| {
            let j = k as i64 + d;
            (0..n).all(|q| {
                let g_zero = j < 0 || symbol[j as usize][q + 1] == 0;
                (delta[k - lo][q] == 0) == g_zero
            })
        });
        if ok {
            matching.push(d);
        }
    }
    let target = rule.ell as i64 - 1;
    let observed = matching
        .iter()
        .copied()
        .min_by_key(|d| ((d - target).abs(), *d));
    Ok(ShiftReport {
        window,
        delta,
        symbol,
        matching_shifts: matching,
        observed_shift: observed,
    })
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::{rat, ratio};
    use crate::jetcalc::binomial;
    use crate::polyalg::parse_poly;
    use crate::spencer::prolong_symbol;

    fn jet(n: usize, m: usize, flat: &[i64]) -> JetPoint {
        JetPoint::from_flat(n, m, flat.iter().map(|&v| rat(v)).collect()).unwrap()
    }

    #[test]
    fn builtins_are_bracket_compatible() {
        for n in 1..=3 {
            for kind in [Builtin::OneForm, Builtin::VectorField, Builtin::Metric] {
                let r = ProlongationRule::builtin(kind, n);
                assert_eq!(r.m(), kind.fibre_dim(n));
            }
        }
        assert_eq!(metric_index(3, 1, 2), 4);
        assert_eq!(metric_index(3, 2, 1), 4);
    }

    #[test]
    fn wrong_sign_is_rejected() {
        let lines = vec![("y1".to_string(), "y1*xi1[1]".to_string())];
        assert!(ProlongationRule::parse(1, 1, 1, &lines).is_ok());
        // half-density style lifts are fine, but a lift mixing orders is not
        let bad = vec![("y1".to_string(), "y1*xi1[1] + x1*xi1".to_string())];
        assert!(matches!(
            ProlongationRule::parse(1, 1, 1, &bad),
            Err(Error::BracketIncompatible(_))
        ));
    }

    #[test]
    fn parse_round_trip() {
        let r = ProlongationRule::builtin(Builtin::OneForm, 2);
        let lines: Vec<(String, String)> = r
            .lift_lines()
            .iter()
            .map(|l| {
                let (a, b) = l.split_once('=').unwrap();
                (a.to_string(), b.to_string())
            })
            .collect();
        let back = ProlongationRule::parse(2, 2, 1, &lines).unwrap();
        assert_eq!(back.lift_terms(), r.lift_terms());
    }

    #[test]
    fn oneform_on_the_line() {
        let r = ProlongationRule::builtin(Builtin::OneForm, 1);
        let z0 = jet(1, 1, &[0, 1]);
        assert_eq!(lambda_matrix(&r, &z0).unwrap(), QMatrix::from_i64(&[&[-1]]));
        assert_eq!(isotropy_dim(&r, &z0).unwrap(), 0);
        assert_eq!(orbit_tangent_dim(&r, &z0).unwrap(), 2);
        let w = jet(1, 1, &[0, 1, 1]);
        let b = mv_blocks(&r, &w).unwrap();
        assert!(b.zero_block.is_zero());
        assert_eq!(b.assemble(), QMatrix::from_i64(&[&[-2, -1], &[-1, 0]]));
        assert!(mv_test(&r, &w).unwrap());
        let degenerate = jet(1, 1, &[0, 0, 1]);
        assert!(!mv_test(&r, &degenerate).unwrap());
        let o = isotropy_projection_oracle(&r, &degenerate).unwrap();
        assert_eq!((o.upper, o.projection, o.lower, o.surjective), (1, 0, 1, false));
    }

    #[test]
    fn zero_rule_has_full_isotropy() {
        let r = ProlongationRule::zero(2, 1, 1);
        let w = jet(2, 1, &[0, 0, 1, 0, 0]);
        assert!(lambda_matrix(&r, &w).unwrap().is_zero());
        let o = isotropy_projection_oracle(&r, &w).unwrap();
        assert_eq!(o.upper, 2 * (2 + 3));
        assert_eq!(o.lower, 2 * 2);
        assert!(o.surjective && mv_test(&r, &w).unwrap());
    }

    #[test]
    fn oracle_matches_prolongation_path() {
        let r = ProlongationRule::builtin(Builtin::Metric, 2);
        let w = JetPoint::from_flat(
            2,
            3,
            (0..2 + 3 * 6).map(|v| ratio(v as i64 % 5 - 1, 1 + v as i64 % 3)).collect(),
        )
        .unwrap();
        let a = lambda_matrix(&r, &w).unwrap();
        let c = vertical_rows(2, characteristic_matrix(&r, &w, 1, 3).unwrap());
        assert_eq!(a, c);
        let t = orbit_tangent_matrix(&r, &w).unwrap();
        assert_eq!(t, characteristic_matrix(&r, &w, 0, 3).unwrap());
    }

    #[test]
    fn corrupted_blocks_are_caught() {
        let r = ProlongationRule::builtin(Builtin::OneForm, 1);
        let w = jet(1, 1, &[0, 0, 1]);
        let mut blocks = mv_blocks(&r, &w).unwrap();
        let oracle = isotropy_projection_oracle(&r, &w).unwrap();
        assert!(!cross_check(&blocks, &oracle).unwrap());
        blocks.c[(0, 0)] = rat(1);
        assert!(matches!(cross_check(&blocks, &oracle), Err(Error::OracleMismatch(_))));
    }

    #[test]
    fn exact_sequence_identity() {
        for (kind, n) in [(Builtin::OneForm, 2), (Builtin::VectorField, 1), (Builtin::Metric, 2)] {
            let r = ProlongationRule::builtin(kind, n);
            for k in 0..=2u32 {
                let spec = JetSpec::new(n, r.m(), k);
                let flat: Vec<Rational> = (0..spec.arity()).map(|v| rat((v as i64 * 7) % 5 - 2)).collect();
                let z = JetPoint::from_flat(n, r.m(), flat).unwrap();
                let total = n * binomial(n + 1 + k as usize, 1 + k as usize);
                assert_eq!(
                    orbit_tangent_dim(&r, &z).unwrap() + isotropy_dim(&r, &z).unwrap(),
                    total
                );
            }
        }
    }

    #[test]
    fn rank_of_c_is_symbol_codimension() {
        let r = ProlongationRule::builtin(Builtin::Metric, 2);
        let z0 = jet(2, 3, &[0, 0, 1, 0, 1]);
        let g1 = isotropy_symbol(&r, &z0).unwrap();
        assert_eq!(g1.dim(), 1);
        let w = jet(
            2,
            3,
            &[0, 0, 1, 0, 1, 2, 0, 1, -1, 3, 0, 1, 1, 2, 0, 0, -1, 1, 2, 1],
        );
        let b = mv_blocks(&r, &w).unwrap();
        let g = isotropy_symbol(&r, &w.truncate(0)).unwrap();
        let mut want = g;
        for _ in 0..w.spec().order() {
            want = prolong_symbol(&want);
        }
        assert_eq!(b.c.rank(), want.codim());
    }

    #[test]
    fn homogeneity_of_sections() {
        let r = ProlongationRule::builtin(Builtin::OneForm, 1);
        let bv = base_vars(1);
        let constant = vec![parse_poly("1", &bv).unwrap()];
        assert!(homogeneity_test(&r, &constant, &[rat(0)], 0).unwrap());
        let s = vec![parse_poly("1 + x1^2", &bv).unwrap()];
        let verdict = homogeneity_test(&r, &s, &[rat(0)], 1).unwrap();
        // oracle: solve T c = v exactly
        let jet = JetPoint::from_section(JetSpec::new(1, 1, 1), &s, &[rat(0)]).unwrap();
        let t = orbit_tangent_matrix(&r, &jet).unwrap();
        let v = &section_tangents(&s, &[rat(0)], 1).unwrap()[0];
        let aug = t.hstack(&QMatrix::from_rows(1, v.iter().map(|x| vec![-x.clone()]).collect()));
        let ker = nullspace(&aug);
        let solvable = (0..ker.dim()).any(|i| !ker.basis().row(i)[t.cols()].is_zero());
        assert_eq!(verdict, solvable);
    }

    #[test]
    fn transform_examples() {
        let r = ProlongationRule::builtin(Builtin::OneForm, 1);
        let bv = base_vars(1);
        let z = jet(1, 1, &[0, 1]);
        assert_eq!(transform_jet(&r, &Germ::identity(1), &z).unwrap(), z);
        let doubling = Germ::new(vec![parse_poly("2*x1", &bv).unwrap()]).unwrap();
        let y = transform_jet(&r, &doubling, &z).unwrap();
        assert_eq!(y.values(), &[ratio(1, 2)]);
        // translation by 3 recentres the Taylor data: values unchanged, base moved
        let s = jet(1, 1, &[1, 2, -1, 4]);
        let shift = Germ::new(vec![parse_poly("x1 + 3", &bv).unwrap()]).unwrap();
        let t = transform_jet(&r, &shift, &s).unwrap();
        assert_eq!(t.base(), &[rat(4)]);
        assert_eq!(t.values(), s.values());
        let singular = Germ::new(vec![parse_poly("x1^2", &bv).unwrap()]).unwrap();
        assert!(matches!(
            transform_jet(&r, &singular, &jet(1, 1, &[0, 1])),
            Err(Error::NonInvertibleLinearPart)
        ));
        assert!(matches!(
            transform_jet(&ProlongationRule::zero(1, 1, 1), &shift, &z),
            Err(Error::NoFiniteLift)
        ));
    }

    #[test]
    fn transform_agrees_with_pullback_of_sections() {
        // φ(x) = x + x²/2 near 0; pulling S = (1 + x) dx back by φ⁻¹
        let r = ProlongationRule::builtin(Builtin::OneForm, 1);
        let bv = base_vars(1);
        let phi = Germ::new(vec![parse_poly("x1 + x1^2/2", &bv).unwrap()]).unwrap();
        let z = JetPoint::from_section(JetSpec::new(1, 1, 2), &[parse_poly("1 + x1", &bv).unwrap()], &[rat(0)]).unwrap();
        let y = transform_jet(&r, &phi, &z).unwrap();
        // ψ(t) = −1 + √(1+2t); ω' = (1+ψ)ψ' = 1 identically
        assert_eq!(y.values(), &[rat(1), rat(0), rat(0)]);
    }

    #[test]
    fn tangent_kernel_and_symbol_cohomology_line_up() {
        let one = rat(1);
        let zero = rat(0);
        let bv = base_vars(2);
        let r = ProlongationRule::builtin(Builtin::OneForm, 2);
        let dx1 = vec![parse_poly("1", &bv).unwrap(), parse_poly("0", &bv).unwrap()];
        let rep = degree_shift(&r, &dx1, &[zero.clone(), zero.clone()], (1, 4)).unwrap();
        assert!(rep.matching_shifts.contains(&0));
        assert_eq!(rep.observed_shift, Some(0));
        let flat: Vec<Poly> = ["1", "0", "1"].iter().map(|p| parse_poly(p, &bv).unwrap()).collect();
        let m = ProlongationRule::builtin(Builtin::Metric, 2);
        let rep = degree_shift(&m, &flat, &[one.clone(), one], (1, 4)).unwrap();
        assert_eq!(rep.delta[0], vec![0, 1, 0]);
        assert_eq!(rep.symbol[1], vec![0, 0, 1]);
        assert_eq!(rep.matching_shifts, vec![0]);
    }
}
