//! Linear constant-coefficient PDE systems: prolongation, projection and
//! the completion loop.
//!
//! An equation is a finite sum `Σ c · ∂^α u^λ`. At jet order `k` the system
//! becomes a row space on the coordinates `(λ, α)`, `|α| <= k`, of
//! [`JetSpec`]; the solution fibre `R_k` is its kernel.

use std::fmt;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactlin::{nullspace, Rational, Subspace};
use crate::jetcalc::{multiindices_between, JetSpec, MultiIndex};
use crate::polyalg::{parse_linear, Vars};
use crate::spencer::{acyclicity_onset, SymbolFamily, SymbolSpace};

/// One term `coef · ∂^alpha u^unknown`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub coef: Rational,
    pub unknown: usize,
    pub alpha: MultiIndex,
}

pub type Equation = Vec<Term>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearPDESystem {
    n: usize,
    m: usize,
    order: usize,
    equations: Vec<Equation>,
}

fn equation_order(eq: &Equation) -> usize {
    eq.iter().map(|t| t.alpha.order() as usize).max().unwrap_or(0)
}

impl LinearPDESystem {
    /// An empty equation list is accepted and describes the unconstrained
    /// system of the given order.
    pub fn new(n: usize, m: usize, order: usize, equations: Vec<Equation>) -> Result<Self> {
        for t in equations.iter().flatten() {
            if t.unknown >= m {
                return Err(Error::IndexOutOfRange {
                    index: t.unknown,
                    bound: m,
                });
            }
            if t.alpha.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "multi-index length".into(),
                    expected: n,
                    found: t.alpha.len(),
                });
            }
            if t.alpha.order() as usize > order {
                return Err(Error::DimensionMismatch {
                    context: "derivative order above system order".into(),
                    expected: order,
                    found: t.alpha.order() as usize,
                });
            }
        }
        Ok(LinearPDESystem {
            n,
            m,
            order,
            equations,
        })
    }

    /// Parses equations such as `u1[2,0] + u1[0,2]`. Unknowns are written
    /// `u1..um` with a bracketed multi-index; `u1` alone is the function
    /// itself, and with a single unknown `u` may replace `u1`.
    pub fn parse(n: usize, m: usize, order: usize, lines: &[&str]) -> Result<Self> {
        let alphas = multiindices_between(n, 0, order as u32);
        let mut symbols = Vec::new();
        let mut targets = Vec::new();
        for l in 0..m {
            let mut stems = vec![format!("u{}", l + 1)];
            if m == 1 {
                stems.push("u".to_string());
            }
            for stem in stems {
                for a in &alphas {
                    symbols.push(format!("{stem}{a}"));
                    targets.push((l, a.clone()));
                }
                symbols.push(stem);
                targets.push((l, MultiIndex::zero(n)));
            }
        }
        let none: Vars = Vec::<String>::new().into();
        let mut equations = Vec::new();
        for line in lines {
            let coeffs = parse_linear(line, &none, &symbols)?;
            let mut acc: Vec<(usize, MultiIndex, Rational)> = Vec::new();
            for (c, (l, a)) in coeffs.iter().zip(&targets) {
                let c = c.constant_term();
                if c.is_zero() {
                    continue;
                }
                match acc.iter_mut().find(|(l2, a2, _)| l2 == l && a2 == a) {
                    Some(e) => e.2 += c,
                    None => acc.push((*l, a.clone(), c)),
                }
            }
            let mut eq: Equation = acc
                .into_iter()
                .filter(|(_, _, c)| !c.is_zero())
                .map(|(unknown, alpha, coef)| Term {
                    coef,
                    unknown,
                    alpha,
                })
                .collect();
            sort_terms(&mut eq);
            equations.push(eq);
        }
        LinearPDESystem::new(n, m, order, equations)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    /// Row space of all formal derivatives of the equations that stay within
    /// jet order `k`, on the coordinates of `JetSpec::new(n, m, k)`.
    pub fn equation_space(&self, k: usize) -> Subspace {
        let spec = JetSpec::new(self.n, self.m, k as u32);
        let dim = spec.num_coords();
        let mut rows = Vec::new();
        for eq in &self.equations {
            let r = equation_order(eq);
            if r > k {
                continue;
            }
            for g in multiindices_between(self.n, 0, (k - r) as u32) {
                let mut row = vec![Rational::zero(); dim];
                for t in eq {
                    let c = spec.coord(t.unknown, &t.alpha.add(&g)).unwrap();
                    row[c] += &t.coef;
                }
                rows.push(row);
            }
        }
        Subspace::span(dim, rows)
    }

    /// The system with the rows of `extra` (on order-`k` coordinates) added
    /// as equations.
    fn with_rows(&self, k: usize, extra: &Subspace) -> LinearPDESystem {
        let spec = JetSpec::new(self.n, self.m, k as u32);
        let mut out = self.clone();
        for r in extra.basis().row_vecs() {
            let mut eq: Equation = r
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(c, v)| {
                    let (l, a) = spec.label(c);
                    Term {
                        coef: v.clone(),
                        unknown: l,
                        alpha: a.clone(),
                    }
                })
                .collect();
            sort_terms(&mut eq);
            out.equations.push(eq);
        }
        out
    }
}

impl fmt::Display for LinearPDESystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.equations.iter().map(format_equation).collect();
        write!(f, "{}", lines.join("\n"))
    }
}

fn sort_terms(eq: &mut Equation) {
    eq.sort_by(|a, b| {
        b.alpha
            .order()
            .cmp(&a.alpha.order())
            .then(a.alpha.cmp(&b.alpha))
            .then(a.unknown.cmp(&b.unknown))
    });
}

pub fn format_equation(eq: &Equation) -> String {
    if eq.is_empty() {
        return "0".into();
    }
    let mut s = String::new();
    for (i, t) in eq.iter().enumerate() {
        let name = format!("u{}{}", t.unknown + 1, t.alpha);
        let neg = t.coef < Rational::zero();
        let mag = if neg { -t.coef.clone() } else { t.coef.clone() };
        if i == 0 {
            if neg {
                s.push('-');
            }
        } else {
            s.push_str(if neg { " - " } else { " + " });
        }
        if mag.is_one() {
            s.push_str(&name);
        } else {
            s.push_str(&format!("{mag}*{name}"));
        }
    }
    s
}

/// Original equations plus all first formal derivatives; the order rises
/// by one.
pub fn prolong_system(sys: &LinearPDESystem) -> LinearPDESystem {
    let mut equations = sys.equations.clone();
    for eq in &sys.equations {
        for i in 0..sys.n {
            equations.push(
                eq.iter()
                    .map(|t| Term {
                        coef: t.coef.clone(),
                        unknown: t.unknown,
                        alpha: t.alpha.plus(i),
                    })
                    .collect(),
            );
        }
    }
    LinearPDESystem {
        n: sys.n,
        m: sys.m,
        order: sys.order + 1,
        equations,
    }
}

/// `dim R_k`: the number of free `k`-jet coordinates at a point.
pub fn solution_fibre_dim(sys: &LinearPDESystem, k: usize) -> Result<usize> {
    if k < sys.order {
        return Err(Error::CapTooSmall {
            cap: k,
            min: sys.order,
        });
    }
    let e = sys.equation_space(k);
    Ok(e.ambient_dim() - e.dim())
}

/// Symbol `g_k`: top-order vectors annihilated by the order-`k` system.
pub fn symbol_at(sys: &LinearPDESystem, k: usize) -> SymbolSpace {
    let spec = JetSpec::new(sys.n, sys.m, k as u32);
    let top = spec.coords_between(k as u32, k as u32);
    let e = sys.equation_space(k);
    let rows: Vec<usize> = (0..e.dim()).collect();
    let space = if e.dim() == 0 {
        Subspace::full(top.len())
    } else {
        nullspace(&e.basis().select(&rows, &top))
    };
    SymbolSpace::new(sys.n, sys.m, k, space).expect("symbol dimension")
}

/// Relations of order `<= k` implied by the system at order `k+1`,
/// on order-`k` coordinates.
pub fn project_system(sys: &LinearPDESystem, k: usize) -> Subspace {
    let spec = JetSpec::new(sys.n, sys.m, k as u32 + 1);
    let low = spec.coords_between(0, k as u32);
    let top = spec.coords_between(k as u32 + 1, k as u32 + 1);
    let e = sys.equation_space(k + 1);
    if e.dim() == 0 {
        return Subspace::zero(low.len());
    }
    // echelon with the top coordinates first: rows without a top pivot are
    // free of top coordinates
    let mut order = top.clone();
    order.extend(low.iter().copied());
    let rows: Vec<usize> = (0..e.dim()).collect();
    let reordered = Subspace::from_matrix(&e.basis().select(&rows, &order));
    let kept: Vec<Vec<Rational>> = (0..reordered.dim())
        .filter(|&i| reordered.pivots()[i] >= top.len())
        .map(|i| reordered.basis().row(i)[top.len()..].to_vec())
        .collect();
    Subspace::span(low.len(), kept)
}

/// Projected relations not already implied at order `k`.
pub fn new_equations(sys: &LinearPDESystem, k: usize) -> Option<Subspace> {
    let projected = project_system(sys, k);
    let current = sys.equation_space(k);
    (!current.contains_subspace(&projected)).then_some(projected)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Verdict {
    FormallyIntegrable,
    NewEquationsFound { order: usize },
    CapReached,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::FormallyIntegrable => write!(f, "formally-integrable"),
            Verdict::NewEquationsFound { order } => write!(f, "new-equations-found({order})"),
            Verdict::CapReached => write!(f, "cap-reached"),
        }
    }
}

/// One pass of the loop at order `k`: `R_{k+1} → R_k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepRecord {
    pub order: usize,
    pub dim_r: usize,
    pub dim_g: usize,
    pub dim_r_next: usize,
    pub dim_g_next: usize,
    pub dim_projection: usize,
    pub surjective: bool,
    pub two_acyclic: bool,
    /// `dim R_{k+1} = dim R_k + dim g_{k+1}` holds exactly when the step is
    /// surjective.
    pub rank_identity: bool,
    pub new_equations: usize,
    pub lowest_new_order: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EquationEvent {
    pub at_order: usize,
    pub lowest_order: usize,
    pub count: usize,
    pub equations: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct KuranishiReport {
    pub steps: Vec<StepRecord>,
    pub events: Vec<EquationEvent>,
    pub verdict: Verdict,
    pub mu0: Option<usize>,
    pub fibre_dim: Option<usize>,
    pub cap: usize,
    #[serde(skip)]
    pub completed: LinearPDESystem,
}

/// The completion loop. At order `k` (from the system order up) the step
/// `R_{k+1} → R_k` is examined; if it is not surjective the missing
/// relations are added and order `k` is examined again. A surjective step
/// whose symbol `g_k` is 2-acyclic through the cap certifies formal
/// integrability, with `μ₀ = k`.
pub fn complete(sys: &LinearPDESystem, cap: usize) -> Result<KuranishiReport> {
    if cap < sys.order + 1 {
        return Err(Error::CapTooSmall {
            cap,
            min: sys.order + 1,
        });
    }
    let mut cur = sys.clone();
    let mut steps = Vec::new();
    let mut events = Vec::new();
    let mut k = sys.order;
    while k < cap {
        let spec = JetSpec::new(cur.n, cur.m, k as u32);
        let e_k = cur.equation_space(k);
        let dim_r = e_k.ambient_dim() - e_k.dim();
        let e_next = cur.equation_space(k + 1);
        let dim_r_next = e_next.ambient_dim() - e_next.dim();
        let g = symbol_at(&cur, k);
        let dim_g_next = symbol_at(&cur, k + 1).dim();
        let projected = project_system(&cur, k);
        let dim_projection = dim_r_next - dim_g_next;
        let surjective = projected.dim() == 0 || e_k.contains_subspace(&projected);
        if surjective != (dim_projection == dim_r) {
            return Err(Error::OracleMismatch(format!(
                "projection rank at order {k} disagrees with the relation comparison"
            )));
        }
        let dim_g = g.dim();
        let mut family = SymbolFamily::from_seed(g);
        let two_acyclic = acyclicity_onset(&mut family, 2, cap)? == Some(k);
        let mut record = StepRecord {
            order: k,
            dim_r,
            dim_g,
            dim_r_next,
            dim_g_next,
            dim_projection,
            surjective,
            two_acyclic,
            rank_identity: (dim_r_next == dim_r + dim_g_next) == surjective,
            new_equations: 0,
            lowest_new_order: None,
        };
        if !surjective {
            let fresh = reduce_modulo(&projected, &e_k);
            let lowest = (0..fresh.dim())
                .map(|i| {
                    let row = fresh.basis().row(i);
                    (0..row.len())
                        .filter(|&c| !row[c].is_zero())
                        .map(|c| spec.label(c).1.order() as usize)
                        .max()
                        .unwrap_or(0)
                })
                .min()
                .unwrap_or(0);
            record.new_equations = fresh.dim();
            record.lowest_new_order = Some(lowest);
            let before = cur.equations.len();
            cur = cur.with_rows(k, &fresh);
            events.push(EquationEvent {
                at_order: k,
                lowest_order: lowest,
                count: fresh.dim(),
                equations: cur.equations[before..].iter().map(format_equation).collect(),
            });
            steps.push(record);
            continue;
        }
        steps.push(record);
        if two_acyclic {
            return Ok(KuranishiReport {
                steps,
                events,
                verdict: Verdict::FormallyIntegrable,
                mu0: Some(k),
                fibre_dim: Some(dim_r),
                cap,
                completed: cur,
            });
        }
        k += 1;
    }
    let verdict = match events.iter().map(|e| e.lowest_order).min() {
        Some(order) => Verdict::NewEquationsFound { order },
        None => Verdict::CapReached,
    };
    Ok(KuranishiReport {
        steps,
        events,
        verdict,
        mu0: None,
        fibre_dim: None,
        cap,
        completed: cur,
    })
}

/// A basis of a complement of `base ∩ v` inside `v`, chosen canonically:
/// the rows of `v`'s echelon basis reduced modulo `base`.
fn reduce_modulo(v: &Subspace, base: &Subspace) -> Subspace {
    let ambient = v.ambient_dim();
    let mut kept: Vec<Vec<Rational>> = Vec::new();
    let mut acc = base.clone();
    for i in 0..v.dim() {
        let row = v.basis().row(i).to_vec();
        if acc.contains(&row) {
            continue;
        }
        kept.push(reduce_row(&row, base));
        acc = acc.sum(&Subspace::span(ambient, vec![row]));
    }
    Subspace::span(ambient, kept)
}

/// `row` minus its components along the pivots of `base`.
fn reduce_row(row: &[Rational], base: &Subspace) -> Vec<Rational> {
    let mut out = row.to_vec();
    for (i, &p) in base.pivots().iter().enumerate() {
        let c = out[p].clone();
        if c.is_zero() {
            continue;
        }
        for (x, b) in out.iter_mut().zip(base.basis().row(i)) {
            if !b.is_zero() {
                *x -= &c * b;
            }
        }
    }
    if out.iter().all(Zero::is_zero) {
        row.to_vec()
    } else {
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spencer::prolong_symbol;

    fn sys(n: usize, m: usize, order: usize, eqs: &[&str]) -> LinearPDESystem {
        LinearPDESystem::parse(n, m, order, eqs).unwrap()
    }

    fn killing() -> LinearPDESystem {
        sys(2, 2, 1, &["u1[1,0]", "u2[0,1]", "u1[0,1] + u2[1,0]"])
    }

    #[test]
    fn parse_and_print() {
        let s = sys(2, 1, 2, &["u[2,0] + 2*u[0,2] - u"]);
        assert_eq!(s.to_string(), "u1[2,0] + 2*u1[0,2] - u1[0,0]");
        assert_eq!(sys(2, 1, 2, &[&s.to_string()]), s);
        assert!(LinearPDESystem::parse(2, 1, 1, &["u[2,0]"]).is_err());
        assert!(LinearPDESystem::parse(2, 1, 2, &["u[2,0]*u[0,2]"]).is_err());
    }

    #[test]
    fn prolongation_adds_derivatives() {
        let s = prolong_system(&sys(2, 1, 1, &["u[1,0]"]));
        assert_eq!(s.order(), 2);
        assert_eq!(s.to_string(), "u1[1,0]\nu1[2,0]\nu1[1,1]");
        let twice = prolong_system(&s);
        assert_eq!(twice.equation_space(3), s.equation_space(3));
    }

    #[test]
    fn fibre_dims() {
        let k = killing();
        for order in 1..=3 {
            assert_eq!(solution_fibre_dim(&k, order).unwrap(), 3);
        }
        let s = sys(2, 1, 2, &["u[2,0]", "u[0,2]"]);
        for order in 2..=4 {
            assert_eq!(solution_fibre_dim(&s, order).unwrap(), 4);
        }
        let free = LinearPDESystem::new(2, 1, 1, vec![]).unwrap();
        assert_eq!(solution_fibre_dim(&free, 1).unwrap(), 3);
    }

    #[test]
    fn projections() {
        let s = sys(2, 1, 2, &["u[2,0]", "u[0,2]"]);
        assert_eq!(project_system(&s, 2), s.equation_space(2));
        assert!(new_equations(&s, 2).is_none());
        let s = sys(2, 1, 2, &["u[2,0]", "u[1,1] - u"]);
        let fresh = new_equations(&s, 2).unwrap();
        let spec = JetSpec::new(2, 1, 2);
        let ux = spec.coord(0, &MultiIndex(vec![1, 0])).unwrap();
        let mut want = vec![Rational::zero(); spec.num_coords()];
        want[ux] = Rational::one();
        assert!(fresh.contains(&want));
        assert!(new_equations(&sys(2, 1, 2, &["u[2,0] + u[0,2]"]), 2).is_none());
    }

    #[test]
    fn completion_examples() {
        let r = complete(&killing(), 6).unwrap();
        assert_eq!(r.verdict, Verdict::FormallyIntegrable);
        assert_eq!((r.mu0, r.fibre_dim), (Some(2), Some(3)));
        let r = complete(&sys(2, 1, 2, &["u[2,0]", "u[0,2]"]), 6).unwrap();
        assert_eq!((r.mu0, r.fibre_dim), (Some(3), Some(4)));
        let r = complete(&sys(2, 1, 1, &["u[1,0]", "u[0,1]"]), 6).unwrap();
        assert_eq!((r.mu0, r.fibre_dim), (Some(1), Some(1)));
        let r = complete(&sys(2, 1, 2, &["u[2,0]", "u[1,1] - u"]), 6).unwrap();
        assert_eq!(r.verdict, Verdict::FormallyIntegrable);
        assert_eq!(r.events[0].lowest_order, 1);
        assert_eq!(r.fibre_dim, Some(0));
        for s in &r.steps {
            assert!(s.rank_identity);
        }
        assert!(complete(&killing(), 1).is_err());
    }

    #[test]
    fn symbol_of_prolongation_is_prolonged_symbol() {
        let s = sys(2, 2, 2, &["u1[2,0] - u2[1,1]", "u2[0,2] + u1[1,0]"]);
        assert_eq!(symbol_at(&prolong_system(&s), 3), prolong_symbol(&symbol_at(&s, 2)));
    }
}
