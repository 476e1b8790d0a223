//! Pfaffian systems with polynomial coefficients, their derived systems at a
//! point, derived flags and the contact and Darboux models.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactlin::{ratio, rref, QMatrix, Rational};
use crate::polyalg::{parse_one_form, vars, DiffForm, Poly, Vars};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PfaffianSystem {
    vars: Vars,
    generators: Vec<DiffForm>,
}

impl PfaffianSystem {
    pub fn new(vars: &Vars, generators: Vec<DiffForm>) -> Result<Self> {
        for g in &generators {
            if g.degree() != 1 {
                return Err(Error::DimensionMismatch {
                    context: "generator degree".into(),
                    expected: 1,
                    found: g.degree(),
                });
            }
            if g.vars()[..] != vars[..] {
                return Err(Error::VariableMismatch {
                    left: g.vars().join(","),
                    right: vars.join(","),
                });
            }
        }
        Ok(PfaffianSystem {
            vars: vars.clone(),
            generators,
        })
    }

    /// One generator per line, e.g. `dy - y1*dx`.
    pub fn parse<S: AsRef<str>>(vars: &Vars, lines: &[S]) -> Result<Self> {
        let generators = lines
            .iter()
            .map(|l| parse_one_form(l.as_ref(), vars))
            .collect::<Result<_>>()?;
        PfaffianSystem::new(vars, generators)
    }

    pub fn vars(&self) -> &Vars {
        &self.vars
    }

    pub fn ambient_dim(&self) -> usize {
        self.vars.len()
    }

    pub fn generators(&self) -> &[DiffForm] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Generator values at a point, one row per generator.
    pub fn values_at(&self, at: &[Rational]) -> Result<QMatrix> {
        let n = self.ambient_dim();
        if at.len() != n {
            return Err(Error::DimensionMismatch {
                context: "evaluation point".into(),
                expected: n,
                found: at.len(),
            });
        }
        let rows = self
            .generators
            .iter()
            .map(|g| {
                let t = g.eval(at)?;
                Ok((0..n).map(|i| t.get(&[i])).collect())
            })
            .collect::<Result<_>>()?;
        Ok(QMatrix::from_rows(n, rows))
    }

    /// Rank of the generators at a point.
    pub fn rank_at(&self, at: &[Rational]) -> Result<usize> {
        Ok(self.values_at(at)?.rank())
    }

    /// Pullback along `x = map(x')`; `map` is over the same variables.
    pub fn pullback(&self, map: &[Poly]) -> Result<PfaffianSystem> {
        let generators = self
            .generators
            .iter()
            .map(|g| g.pullback(map))
            .collect::<Result<_>>()?;
        PfaffianSystem::new(&self.vars, generators)
    }
}

fn wedge_all(forms: &[DiffForm], vars: &Vars) -> Result<DiffForm> {
    let mut acc = DiffForm::function(Poly::one(vars));
    for f in forms {
        acc = acc.wedge(f)?;
    }
    Ok(acc)
}

fn det(m: &[Vec<Poly>], vars: &Vars) -> Poly {
    match m.len() {
        0 => Poly::one(vars),
        1 => m[0][0].clone(),
        n => {
            let mut acc = Poly::zero(vars);
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Poly>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(c, _)| *c != j)
                            .map(|(_, p)| p.clone())
                            .collect()
                    })
                    .collect();
                let term = &m[0][j] * &det(&minor, vars);
                acc = if j % 2 == 0 { &acc + &term } else { &acc - &term };
            }
            acc
        }
    }
}

/// The derived system at `at`: combinations `Σ c^a ω_a` with
/// `Σ c^a dω_a ∧ ω_1 ∧ … ∧ ω_r = 0` at the point. Generators of the result
/// are kernel vectors of that condition written with Cramer's rule, so their
/// coefficients are polynomials that solve it wherever its rank stays the
/// rank at `at`.
pub fn derived_system(sys: &PfaffianSystem, at: &[Rational]) -> Result<PfaffianSystem> {
    let r = sys.len();
    if sys.rank_at(at)? < r {
        return Err(Error::DependentGenerators);
    }
    if r == 0 {
        return Ok(sys.clone());
    }
    let vars = sys.vars.clone();
    let top = wedge_all(&sys.generators, &vars)?;
    let columns: Vec<DiffForm> = sys
        .generators
        .iter()
        .map(|g| g.d().wedge(&top))
        .collect::<Result<_>>()?;
    let mut labels: Vec<Vec<usize>> = columns
        .iter()
        .flat_map(|c| c.terms().map(|(k, _)| k.clone()))
        .collect();
    labels.sort();
    labels.dedup();
    let poly_m: Vec<Vec<Poly>> = labels
        .iter()
        .map(|l| columns.iter().map(|c| c.coefficient(l)).collect())
        .collect();
    let point_rows: Vec<Vec<Rational>> = poly_m
        .iter()
        .map(|row| row.iter().map(|p| p.eval(at)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let at_point = QMatrix::from_rows(r, point_rows);
    let (_, pivots) = rref(&at_point);
    let (_, row_pivots) = rref(&at_point.transpose());
    let free: Vec<usize> = (0..r).filter(|c| !pivots.contains(c)).collect();
    let sub = |cols: &[usize]| -> Vec<Vec<Poly>> {
        row_pivots
            .iter()
            .map(|&i| cols.iter().map(|&j| poly_m[i][j].clone()).collect())
            .collect()
    };
    let d0 = det(&sub(&pivots), &vars);
    let mut generators = Vec::with_capacity(free.len());
    for &f in &free {
        let mut coeffs = vec![Poly::zero(&vars); r];
        coeffs[f] = d0.clone();
        for (j, &p) in pivots.iter().enumerate() {
            let mut cols = pivots.clone();
            cols[j] = f;
            coeffs[p] = -&det(&sub(&cols), &vars);
        }
        let mut w = DiffForm::zero(&vars, 1);
        for (c, g) in coeffs.iter().zip(&sys.generators) {
            if !c.is_zero() {
                w = w.add(&g.mul_function(c));
            }
        }
        generators.push(w);
    }
    PfaffianSystem::new(&vars, generators)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DerivedFlag {
    /// Rank at the point of each derived system, starting with the system.
    pub dims: Vec<usize>,
    /// Every step drops the rank by one and the last system is zero.
    pub is_flag: bool,
}

/// Derived systems at `at` until the rank stops changing, reaches zero or
/// `cap` derivations have been taken.
pub fn derived_flag(sys: &PfaffianSystem, at: &[Rational], cap: usize) -> Result<DerivedFlag> {
    let mut dims = vec![sys.rank_at(at)?];
    let mut current = sys.clone();
    for _ in 0..cap {
        if *dims.last().unwrap() == 0 {
            break;
        }
        let next = derived_system(&current, at)?;
        let d = next.rank_at(at)?;
        let last = *dims.last().unwrap();
        dims.push(d);
        if d == last {
            break;
        }
        current = next;
    }
    let is_flag = *dims.last().unwrap() == 0 && dims.windows(2).all(|w| w[0] == w[1] + 1);
    Ok(DerivedFlag { dims, is_flag })
}

/// `{dy − y1 dx, …, dy_{k−1} − y_k dx}` on `(x, y, y1, …, yk)`.
pub fn contact_system(k: usize) -> PfaffianSystem {
    assert!(k >= 1, "contact systems start at k = 1");
    let mut names = vec!["x".to_string(), "y".to_string()];
    names.extend((1..=k).map(|j| format!("y{j}")));
    let vs = vars(&names);
    let generators = (0..k)
        .map(|j| {
            let mut coeffs = vec![Poly::zero(&vs); k + 2];
            coeffs[1 + j] = Poly::one(&vs);
            coeffs[0] = -&Poly::var(&vs, 2 + j);
            DiffForm::one_form(&vs, coeffs)
        })
        .collect();
    PfaffianSystem::new(&vs, generators).unwrap()
}

/// `{dx2 − x3 dx1}` on `ℝ³`.
pub fn darboux_model() -> PfaffianSystem {
    let vs = vars(&["x1", "x2", "x3"]);
    PfaffianSystem::parse(&vs, &["dx2 - x3*dx1"]).unwrap()
}

/// Result at one sampled point; dependent generators are recorded, not
/// raised.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PointFlag {
    pub point: Vec<String>,
    pub flag: Option<DerivedFlag>,
    pub error: Option<String>,
}

pub fn flag_at(sys: &PfaffianSystem, at: &[Rational], cap: usize) -> Result<PointFlag> {
    let point = at.iter().map(|v| v.to_string()).collect();
    match derived_flag(sys, at, cap) {
        Ok(f) => Ok(PointFlag {
            point,
            flag: Some(f),
            error: None,
        }),
        Err(Error::DependentGenerators) => Ok(PointFlag {
            point,
            flag: None,
            error: Some(Error::DependentGenerators.to_string()),
        }),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GenericityReport {
    pub samples: Vec<PointFlag>,
    /// All samples gave the same flag.
    pub agree: bool,
}

/// Derived flags at `count` seeded random rational points.
pub fn genericity(
    sys: &PfaffianSystem,
    count: usize,
    cap: usize,
    seed: u64,
) -> Result<GenericityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<PointFlag> = (0..count)
        .map(|_| {
            let p: Vec<Rational> = (0..sys.ambient_dim())
                .map(|_| ratio(rng.gen_range(-5..=5), rng.gen_range(1..=3)))
                .collect();
            flag_at(sys, &p, cap)
        })
        .collect::<Result<_>>()?;
    let agree = samples
        .windows(2)
        .all(|w| w[0].flag == w[1].flag && w[0].error == w[1].error);
    Ok(GenericityReport { samples, agree })
}

/// Origin of the ambient space.
pub fn origin(sys: &PfaffianSystem) -> Vec<Rational> {
    vec![Rational::zero(); sys.ambient_dim()]
}

/// `x = A x'` as substitution polynomials.
pub fn linear_map(vs: &Vars, a: &QMatrix) -> Vec<Poly> {
    (0..a.rows())
        .map(|i| {
            let mut p = Poly::zero(vs);
            for j in 0..a.cols() {
                p.add_scaled(&Poly::var(vs, j), &a[(i, j)]);
            }
            p
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::rat;

    #[test]
    fn darboux_drops_to_zero() {
        let s = darboux_model();
        let o = origin(&s);
        assert_eq!(s.values_at(&o).unwrap(), QMatrix::from_i64(&[&[0, 1, 0]]));
        assert!(derived_system(&s, &o).unwrap().is_empty());
        let f = derived_flag(&s, &o, 6).unwrap();
        assert_eq!(f.dims, vec![1, 0]);
        assert!(f.is_flag);
    }

    #[test]
    fn closed_forms_are_their_own_derived_system() {
        let vs = vars(&["x1", "x2", "x3"]);
        let s = PfaffianSystem::parse(&vs, &["dx1"]).unwrap();
        assert_eq!(derived_system(&s, &origin(&s)).unwrap().len(), 1);
        let pair = PfaffianSystem::parse(&vs, &["dx1", "dx2"]).unwrap();
        let f = derived_flag(&pair, &origin(&pair), 6).unwrap();
        assert_eq!(f.dims, vec![2, 2]);
        assert!(!f.is_flag);
    }

    #[test]
    fn contact_two() {
        let s = contact_system(2);
        assert_eq!(s.len(), 2);
        let d = derived_system(&s, &origin(&s)).unwrap();
        assert_eq!(d.len(), 1);
        // the survivor is a multiple of dy − y1 dx at the origin
        let v = d.values_at(&origin(&s)).unwrap();
        let w = s.values_at(&origin(&s)).unwrap();
        assert_eq!(v.vstack(&QMatrix::from_rows(4, vec![w.row(0).to_vec()])).rank(), 1);
    }

    #[test]
    fn contact_one_is_darboux_after_renaming() {
        let c = contact_system(1);
        let renamed = PfaffianSystem::parse(&vars(&["x3", "x2", "x1"]), &["dx2 - x1*dx3"]).unwrap();
        assert_eq!(c.generators()[0].to_string().replace('y', "Y"), "-Y1*dx + dY");
        assert_eq!(
            derived_flag(&c, &origin(&c), 6).unwrap(),
            derived_flag(&renamed, &origin(&renamed), 6).unwrap()
        );
    }

    #[test]
    fn dependent_generators_are_reported() {
        let vs = vars(&["x1", "x2"]);
        let s = PfaffianSystem::parse(&vs, &["dx1", "x2*dx2"]).unwrap();
        assert!(matches!(
            derived_system(&s, &[rat(0), rat(0)]),
            Err(Error::DependentGenerators)
        ));
        let p = flag_at(&s, &[rat(0), rat(0)], 6).unwrap();
        assert!(p.flag.is_none() && p.error.is_some());
        assert!(flag_at(&s, &[rat(0), rat(1)], 6).unwrap().flag.is_some());
    }

    #[test]
    fn genericity_of_darboux() {
        let g = genericity(&darboux_model(), 3, 6, 0).unwrap();
        assert!(g.agree);
        assert_eq!(g.samples.len(), 3);
        assert_eq!(g.samples[0].flag.as_ref().unwrap().dims, vec![1, 0]);
    }
}
