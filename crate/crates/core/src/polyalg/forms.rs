use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use super::poly::{check_vars, same_vars, Poly, Vars};
use crate::error::{Error, Result};
use crate::exactlin::Rational;

/// Exterior form of fixed degree with polynomial coefficients, stored on
/// strictly increasing index tuples.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DiffForm {
    degree: usize,
    vars: Vars,
    terms: BTreeMap<Vec<usize>, Poly>,
}

/// Sign and sorted tuple of `e_a ∧ e_b` for increasing tuples; `None` when
/// they share an index.
fn merge_sign(a: &[usize], b: &[usize]) -> Option<(bool, Vec<usize>)> {
    let mut inversions = 0usize;
    for &x in a {
        for &y in b {
            match x.cmp(&y) {
                std::cmp::Ordering::Equal => return None,
                std::cmp::Ordering::Greater => inversions += 1,
                std::cmp::Ordering::Less => {}
            }
        }
    }
    let mut merged: Vec<usize> = a.iter().chain(b).copied().collect();
    merged.sort_unstable();
    Some((inversions % 2 == 1, merged))
}

impl DiffForm {
    pub fn zero(vars: &Vars, degree: usize) -> Self {
        assert!(degree <= vars.len(), "form degree exceeds dimension");
        DiffForm {
            degree,
            vars: vars.clone(),
            terms: BTreeMap::new(),
        }
    }

    /// The 0-form `f`.
    pub fn function(f: Poly) -> Self {
        let mut w = DiffForm::zero(f.vars(), 0);
        w.add_term(Vec::new(), f);
        w
    }

    /// `Σ coeffs[i] dx^i`.
    pub fn one_form(vars: &Vars, coeffs: Vec<Poly>) -> Self {
        assert_eq!(coeffs.len(), vars.len(), "one coefficient per variable");
        let mut w = DiffForm::zero(vars, 1);
        for (i, c) in coeffs.into_iter().enumerate() {
            w.add_term(vec![i], c);
        }
        w
    }

    /// The differential `df`.
    pub fn differential(f: &Poly) -> Self {
        let n = f.vars().len();
        DiffForm::one_form(f.vars(), (0..n).map(|i| f.partial(i)).collect())
    }

    /// Coordinate form `dx^{i_1} ∧ … ∧ dx^{i_q}` for an increasing tuple.
    pub fn basis(vars: &Vars, indices: &[usize]) -> Self {
        assert!(indices.windows(2).all(|w| w[0] < w[1]), "indices must increase");
        let mut w = DiffForm::zero(vars, indices.len());
        w.add_term(indices.to_vec(), Poly::one(vars));
        w
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn vars(&self) -> &Vars {
        &self.vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Poly)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, indices: &[usize]) -> Poly {
        self.terms
            .get(indices)
            .cloned()
            .unwrap_or_else(|| Poly::zero(&self.vars))
    }

    fn add_term(&mut self, idx: Vec<usize>, c: Poly) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&idx) {
            Some(existing) => {
                *existing = &*existing + &c;
                if existing.is_zero() {
                    self.terms.remove(&idx);
                }
            }
            None => {
                self.terms.insert(idx, c);
            }
        }
    }

    pub fn add(&self, other: &DiffForm) -> DiffForm {
        assert!(same_vars(&self.vars, &other.vars), "variable lists differ");
        assert_eq!(self.degree, other.degree, "form degrees differ");
        let mut out = self.clone();
        for (i, c) in &other.terms {
            out.add_term(i.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &DiffForm) -> DiffForm {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> DiffForm {
        self.mul_function(&Poly::constant(&self.vars, c.clone()))
    }

    /// Product with a 0-form coefficient.
    pub fn mul_function(&self, f: &Poly) -> DiffForm {
        let mut out = DiffForm::zero(&self.vars, self.degree);
        for (i, c) in &self.terms {
            out.add_term(i.clone(), c * f);
        }
        out
    }

    /// Exterior derivative.
    pub fn d(&self) -> DiffForm {
        let n = self.vars.len();
        if self.degree == n {
            return DiffForm::zero(&self.vars, n);
        }
        let mut out = DiffForm::zero(&self.vars, self.degree + 1);
        for (idx, f) in &self.terms {
            for j in 0..n {
                let df = f.partial(j);
                if df.is_zero() {
                    continue;
                }
                if let Some((neg, merged)) = merge_sign(&[j], idx) {
                    out.add_term(merged, if neg { -&df } else { df });
                }
            }
        }
        out
    }

    pub fn wedge(&self, other: &DiffForm) -> Result<DiffForm> {
        check_vars(&self.vars, &other.vars)?;
        let degree = self.degree + other.degree;
        if degree > self.vars.len() {
            return Ok(DiffForm {
                degree: self.vars.len(),
                vars: self.vars.clone(),
                terms: BTreeMap::new(),
            });
        }
        let mut out = DiffForm::zero(&self.vars, degree);
        for (a, fa) in &self.terms {
            for (b, fb) in &other.terms {
                if let Some((neg, merged)) = merge_sign(a, b) {
                    let c = fa * fb;
                    out.add_term(merged, if neg { -&c } else { c });
                }
            }
        }
        Ok(out)
    }

    /// Value at a point, as an alternating tensor with rational entries.
    pub fn eval(&self, point: &[Rational]) -> Result<AltTensor> {
        let mut entries = BTreeMap::new();
        for (i, c) in &self.terms {
            let v = c.eval(point)?;
            if !v.is_zero() {
                entries.insert(i.clone(), v);
            }
        }
        Ok(AltTensor {
            degree: self.degree,
            dim: self.vars.len(),
            entries,
        })
    }

    /// Pullback along the polynomial map whose `i`-th component gives the
    /// old variable `i` in terms of the new variables.
    pub fn pullback(&self, map: &[Poly]) -> Result<DiffForm> {
        if map.len() != self.vars.len() {
            return Err(Error::DimensionMismatch {
                context: "pullback map".into(),
                expected: self.vars.len(),
                found: map.len(),
            });
        }
        let target = map[0].vars().clone();
        for m in map {
            check_vars(m.vars(), &target)?;
        }
        let dmap: Vec<DiffForm> = map.iter().map(DiffForm::differential).collect();
        let mut out = DiffForm::zero(&target, self.degree.min(target.len()));
        for (idx, f) in &self.terms {
            let mut term = DiffForm::function(f.compose(map, None));
            for &i in idx {
                term = term.wedge(&dmap[i])?;
            }
            if term.degree == out.degree {
                out = out.add(&term);
            }
        }
        Ok(out)
    }
}

impl fmt::Display for DiffForm {
    /// 1-forms print in the `dy - y1*dx` syntax accepted by
    /// [`parse_one_form`](super::parse_one_form); higher degrees join the
    /// differentials with `∧`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (idx, c)) in self.terms.iter().enumerate() {
            let basis: Vec<String> = idx.iter().map(|&i| format!("d{}", self.vars[i])).collect();
            let basis = if basis.is_empty() {
                "1".to_string()
            } else {
                basis.join("∧")
            };
            let single = c.num_terms() == 1;
            let (neg, body) = if single {
                let (m, v) = c.terms().next().unwrap();
                let positive = Poly::monomial(&self.vars, m.clone(), v.abs());
                (v.is_negative(), positive)
            } else {
                (false, c.clone())
            };
            let sep = match (k, neg) {
                (0, true) => "-",
                (0, false) => "",
                (_, true) => " - ",
                (_, false) => " + ",
            };
            let coeff = if single && body.as_constant().is_some_and(|v| v.is_one()) {
                String::new()
            } else if single {
                format!("{body}*")
            } else {
                format!("({body})*")
            };
            write!(f, "{sep}{coeff}{basis}")?;
        }
        Ok(())
    }
}

/// Alternating tensor on a coordinate space, stored on increasing index
/// tuples.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AltTensor {
    pub degree: usize,
    pub dim: usize,
    pub entries: BTreeMap<Vec<usize>, Rational>,
}

impl AltTensor {
    pub fn get(&self, indices: &[usize]) -> Rational {
        self.entries
            .get(indices)
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::{rat, ratio};
    use crate::polyalg::{parse_one_form, parse_poly, vars, Monomial};
    use proptest::prelude::*;

    fn v3() -> Vars {
        vars(&["x1", "x2", "x3"])
    }

    #[test]
    fn darboux_derivative() {
        let w = parse_one_form("dx2 - x3*dx1", &v3()).unwrap();
        let dw = w.d();
        // -dx3∧dx1 = dx1∧dx3
        assert_eq!(dw, DiffForm::basis(&v3(), &[0, 2]));
        assert_eq!(dw.to_string(), "dx1∧dx3");
    }

    #[test]
    fn closed_and_exact() {
        let v = v3();
        let c = parse_one_form("2*dx1 - 3/4*dx3", &v).unwrap();
        assert!(c.d().is_zero());
        let f = parse_poly("x1*x2", &v).unwrap();
        assert!(DiffForm::differential(&f).d().is_zero());
    }

    #[test]
    fn wedge_examples() {
        let v = v3();
        let dx = DiffForm::basis(&v, &[0]);
        let dy = DiffForm::basis(&v, &[1]);
        assert!(dx.wedge(&dx).unwrap().is_zero());
        let s = dx.wedge(&dy).unwrap().add(&dy.wedge(&dx).unwrap());
        assert!(s.is_zero());
        let other = DiffForm::basis(&vars(&["a", "b"]), &[0]);
        assert!(matches!(dx.wedge(&other), Err(Error::VariableMismatch { .. })));
    }

    #[test]
    fn eval_form_example() {
        let v = v3();
        let w = parse_one_form("x3*dx1", &v).unwrap();
        let t = w.eval(&[rat(0), rat(0), rat(2)]).unwrap();
        assert_eq!(t.get(&[0]), rat(2));
        assert_eq!(t.entries.len(), 1);
    }

    #[test]
    fn pullback_linear_change() {
        let v = v3();
        let w = parse_one_form("dx2 - x3*dx1", &v).unwrap();
        // x1 = 2a, x2 = b, x3 = c
        let nv = vars(&["a", "b", "c"]);
        let map = vec![
            parse_poly("2*a", &nv).unwrap(),
            parse_poly("b", &nv).unwrap(),
            parse_poly("c", &nv).unwrap(),
        ];
        let pulled = w.pullback(&map).unwrap();
        assert_eq!(pulled, parse_one_form("db - 2*c*da", &nv).unwrap());
        // d commutes with pullback
        assert_eq!(pulled.d(), w.d().pullback(&map).unwrap());
    }

    fn arb_form(degree: usize) -> impl Strategy<Value = DiffForm> {
        let tuples: Vec<Vec<usize>> = match degree {
            0 => vec![vec![]],
            1 => vec![vec![0], vec![1], vec![2]],
            2 => vec![vec![0, 1], vec![0, 2], vec![1, 2]],
            _ => vec![vec![0, 1, 2]],
        };
        proptest::collection::vec(
            (0..tuples.len(), (0u32..3, 0u32..3, 0u32..3), -4i64..5, 1i64..3),
            0..5,
        )
        .prop_map(move |terms| {
            let v = v3();
            let mut w = DiffForm::zero(&v, degree);
            for (t, (a, b, c), n, d) in terms {
                let p = Poly::monomial(&v, Monomial(vec![a, b, c]), ratio(n, d));
                w.add_term(tuples[t].clone(), p);
            }
            w
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn d_squared_is_zero(w in (0usize..3).prop_flat_map(arb_form)) {
            prop_assert!(w.d().d().is_zero());
        }

        #[test]
        fn leibniz_rule(a in arb_form(1), b in arb_form(1), f in arb_form(0)) {
            // degree 1 ∧ degree 1, and degree 0 ∧ degree 1
            let lhs = a.wedge(&b).unwrap().d();
            let rhs = a.d().wedge(&b).unwrap().sub(&a.wedge(&b.d()).unwrap());
            prop_assert_eq!(lhs, rhs);
            let lhs0 = f.wedge(&a).unwrap().d();
            let rhs0 = f.d().wedge(&a).unwrap().add(&f.wedge(&a.d()).unwrap());
            prop_assert_eq!(lhs0, rhs0);
        }

        #[test]
        fn graded_commutative(a in arb_form(1), b in arb_form(2), c in arb_form(1)) {
            let ab = a.wedge(&b).unwrap();
            let ba = b.wedge(&a).unwrap();
            prop_assert_eq!(ab, ba); // (-1)^{1·2} = 1
            let ac = a.wedge(&c).unwrap();
            let ca = c.wedge(&a).unwrap();
            prop_assert_eq!(ac, ca.scale(&rat(-1)));
        }
    }
}
