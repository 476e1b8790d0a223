use std::fmt;

use super::poly::{check_vars, same_vars, Poly, Vars};
use crate::error::{Error, Result};
use crate::exactlin::Rational;

/// Vector field `Σ components[i] ∂/∂vars[i]` with polynomial components.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PolyVectorField {
    vars: Vars,
    components: Vec<Poly>,
}

impl PolyVectorField {
    pub fn new(vars: &Vars, components: Vec<Poly>) -> Result<Self> {
        if components.len() != vars.len() {
            return Err(Error::DimensionMismatch {
                context: "vector field components".into(),
                expected: vars.len(),
                found: components.len(),
            });
        }
        for c in &components {
            check_vars(c.vars(), vars)?;
        }
        Ok(PolyVectorField {
            vars: vars.clone(),
            components,
        })
    }

    pub fn zero(vars: &Vars) -> Self {
        PolyVectorField {
            vars: vars.clone(),
            components: vec![Poly::zero(vars); vars.len()],
        }
    }

    pub fn vars(&self) -> &Vars {
        &self.vars
    }

    pub fn components(&self) -> &[Poly] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Poly {
        &self.components[i]
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Poly::is_zero)
    }

    /// Derivative of `f` along the field.
    pub fn apply(&self, f: &Poly) -> Poly {
        assert!(same_vars(&self.vars, f.vars()), "variable lists differ");
        let mut out = Poly::zero(&self.vars);
        for (i, c) in self.components.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let d = f.partial(i);
            if !d.is_zero() {
                out = &out + &(c * &d);
            }
        }
        out
    }

    /// Lie bracket `[self, other]`.
    pub fn bracket(&self, other: &PolyVectorField) -> Result<PolyVectorField> {
        check_vars(&self.vars, &other.vars)?;
        let components = (0..self.vars.len())
            .map(|j| &self.apply(&other.components[j]) - &other.apply(&self.components[j]))
            .collect();
        Ok(PolyVectorField {
            vars: self.vars.clone(),
            components,
        })
    }

    pub fn add(&self, other: &PolyVectorField) -> PolyVectorField {
        assert!(same_vars(&self.vars, &other.vars), "variable lists differ");
        PolyVectorField {
            vars: self.vars.clone(),
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> PolyVectorField {
        PolyVectorField {
            vars: self.vars.clone(),
            components: self.components.iter().map(|p| p.scale(c)).collect(),
        }
    }

    pub fn eval(&self, point: &[Rational]) -> Result<Vec<Rational>> {
        self.components.iter().map(|c| c.eval(point)).collect()
    }

    /// Re-expresses the field over a larger variable list; the new
    /// coordinates get zero components.
    pub fn embed(&self, target: &Vars) -> Result<PolyVectorField> {
        let mut components = vec![Poly::zero(target); target.len()];
        for (i, c) in self.components.iter().enumerate() {
            let j = super::poly::index_of(target, &self.vars[i])?;
            components[j] = c.embed(target)?;
        }
        Ok(PolyVectorField {
            vars: target.clone(),
            components,
        })
    }
}

impl fmt::Display for PolyVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .components
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| format!("({c})*d/d{}", self.vars[i]))
            .collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::{parse_poly, vars};

    #[test]
    fn bracket_of_coordinate_fields() {
        let v = vars(&["x", "y"]);
        let p = |s: &str| parse_poly(s, &v).unwrap();
        let dx = PolyVectorField::new(&v, vec![p("1"), p("0")]).unwrap();
        let euler = PolyVectorField::new(&v, vec![p("x"), p("y")]).unwrap();
        assert_eq!(dx.bracket(&euler).unwrap(), dx);
        let rot = PolyVectorField::new(&v, vec![p("-y"), p("x")]).unwrap();
        assert!(euler.bracket(&rot).unwrap().is_zero());
        assert!(PolyVectorField::new(&v, vec![p("1")]).is_err());
    }
}
