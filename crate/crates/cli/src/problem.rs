//! Problem files: a `kind` header, optional `cap`, then sections.
//!
//! ```text
//! kind = pde
//! cap = 6
//!
//! [dims]
//! n = 2
//! m = 1
//! order = 2
//!
//! [equations]
//! u[2,0] + u[0,2]
//! ```

use std::fmt::Write as _;
use std::str::FromStr;

use forge_core::exactlin::Rational;
use forge_core::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Symbol,
    Pde,
    Rule,
    Pfaff,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Symbol => "symbol",
            Kind::Pde => "pde",
            Kind::Rule => "rule",
            Kind::Pfaff => "pfaff",
        }
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "symbol" => Ok(Kind::Symbol),
            "pde" => Ok(Kind::Pde),
            "rule" => Ok(Kind::Rule),
            "pfaff" => Ok(Kind::Pfaff),
            other => Err(format!("unknown kind `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemFile {
    pub kind: Kind,
    pub cap: Option<usize>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub order: Option<usize>,
    pub vars: Vec<String>,
    pub equations: Vec<String>,
    pub generators: Vec<String>,
    pub builtin: Option<String>,
    pub lift: Vec<(String, String)>,
    pub section: Vec<(String, String)>,
    pub points: Vec<String>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Part {
    Header,
    Dims,
    Equations,
    Generators,
    Lift,
    Section,
    Point,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn key_value(line: &str, no: usize) -> Result<(String, String), Error> {
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| err(no, format!("expected `key = value`, found `{line}`")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn number(v: &str, no: usize) -> Result<usize, Error> {
    v.parse()
        .map_err(|_| err(no, format!("expected a non-negative integer, found `{v}`")))
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<ProblemFile, Error> {
        let mut kind = None;
        let mut p = ProblemFile {
            kind: Kind::Symbol,
            cap: None,
            n: None,
            m: None,
            order: None,
            vars: Vec::new(),
            equations: Vec::new(),
            generators: Vec::new(),
            builtin: None,
            lift: Vec::new(),
            section: Vec::new(),
            points: Vec::new(),
        };
        let mut at = Part::Header;
        for (i, raw) in text.lines().enumerate() {
            let no = i + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                at = match line {
                    "[dims]" => Part::Dims,
                    "[equations]" => Part::Equations,
                    "[generators]" => Part::Generators,
                    "[lift]" => Part::Lift,
                    "[section]" => Part::Section,
                    "[point]" => Part::Point,
                    other => return Err(err(no, format!("unknown section `{other}`"))),
                };
                continue;
            }
            match at {
                Part::Header => {
                    let (k, v) = key_value(line, no)?;
                    match k.as_str() {
                        "kind" => kind = Some(v.parse::<Kind>().map_err(|e| err(no, e))?),
                        "cap" => p.cap = Some(number(&v, no)?),
                        other => return Err(err(no, format!("unknown header key `{other}`"))),
                    }
                }
                Part::Dims => {
                    let (k, v) = key_value(line, no)?;
                    match k.as_str() {
                        "n" => p.n = Some(number(&v, no)?),
                        "m" => p.m = Some(number(&v, no)?),
                        "order" => p.order = Some(number(&v, no)?),
                        "vars" => {
                            p.vars = v
                                .split(',')
                                .map(|s| s.trim().to_string())
                                .filter(|s| !s.is_empty())
                                .collect()
                        }
                        other => return Err(err(no, format!("unknown dimension key `{other}`"))),
                    }
                }
                Part::Equations => p.equations.push(line.to_string()),
                Part::Generators => p.generators.push(line.to_string()),
                Part::Lift => {
                    let (k, v) = key_value(line, no)?;
                    if k == "builtin" {
                        p.builtin = Some(v);
                    } else {
                        p.lift.push((k, v));
                    }
                }
                Part::Section => p.section.push(key_value(line, no)?),
                Part::Point => p.points.push(line.to_string()),
            }
        }
        p.kind = kind.ok_or_else(|| err(0, "missing `kind`"))?;
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<(), Error> {
        let need = |v: Option<usize>, what: &str| {
            v.map(|_| ())
                .ok_or_else(|| err(0, format!("missing `{what}` in [dims]")))
        };
        match self.kind {
            Kind::Symbol | Kind::Pde => {
                need(self.n, "n")?;
                need(self.m, "m")?;
                need(self.order, "order")?;
            }
            Kind::Rule => {
                need(self.n, "n")?;
                if self.builtin.is_some() && !self.lift.is_empty() {
                    return Err(err(0, "[lift] mixes `builtin` with explicit components"));
                }
                if self.builtin.is_none() {
                    need(self.m, "m")?;
                    need(self.order, "order")?;
                }
            }
            Kind::Pfaff => {
                if self.vars.is_empty() {
                    return Err(err(0, "missing `vars` in [dims]"));
                }
                if self.generators.is_empty() {
                    return Err(err(0, "missing [generators]"));
                }
            }
        }
        Ok(())
    }

    /// A canonical copy of the file, accepted by [`ProblemFile::parse`].
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "kind = {}", self.kind.name());
        if let Some(c) = self.cap {
            let _ = writeln!(s, "cap = {c}");
        }
        s.push_str("\n[dims]\n");
        for (k, v) in [("n", self.n), ("m", self.m), ("order", self.order)] {
            if let Some(v) = v {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        if !self.vars.is_empty() {
            let _ = writeln!(s, "vars = {}", self.vars.join(", "));
        }
        if !self.equations.is_empty() {
            s.push_str("\n[equations]\n");
            for e in &self.equations {
                let _ = writeln!(s, "{e}");
            }
        }
        if !self.generators.is_empty() {
            s.push_str("\n[generators]\n");
            for g in &self.generators {
                let _ = writeln!(s, "{g}");
            }
        }
        if self.builtin.is_some() || !self.lift.is_empty() {
            s.push_str("\n[lift]\n");
            if let Some(b) = &self.builtin {
                let _ = writeln!(s, "builtin = {b}");
            }
            for (k, v) in &self.lift {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        if !self.section.is_empty() {
            s.push_str("\n[section]\n");
            for (k, v) in &self.section {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        for p in &self.points {
            let _ = write!(s, "\n[point]\n{p}\n");
        }
        s
    }
}

/// Rationals separated by commas, semicolons or blanks.
pub fn parse_values(src: &str) -> Result<Vec<Rational>, Error> {
    src.split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            Rational::from_str(t).map_err(|_| err(0, format!("`{t}` is not a rational number")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const PDE: &str = "# Killing fields of the plane\nkind = pde\n\n[dims]\nn = 2\nm = 2 # two unknowns\norder = 1\n\n[equations]\nu1[1,0]\nu2[0,1]\nu1[0,1] + u2[1,0]\n";

    #[test]
    fn reads_sections_and_comments() {
        let p = ProblemFile::parse(PDE).unwrap();
        assert_eq!(p.kind, Kind::Pde);
        assert_eq!((p.n, p.m, p.order), (Some(2), Some(2), Some(1)));
        assert_eq!(p.equations.len(), 3);
    }

    #[test]
    fn canonical_copy_round_trips() {
        let p = ProblemFile::parse(PDE).unwrap();
        let again = ProblemFile::parse(&p.canonical()).unwrap();
        assert_eq!(again, p);
        assert_eq!(again.canonical(), p.canonical());
        let rule = "kind = rule\n[dims]\nn = 1\n[lift]\nbuiltin = oneform\n[section]\ny1 = 1 + x1\n[point]\n0;1;1\n[point]\n0;0;1\n";
        let p = ProblemFile::parse(rule).unwrap();
        assert_eq!(p.points, vec!["0;1;1", "0;0;1"]);
        assert_eq!(ProblemFile::parse(&p.canonical()).unwrap(), p);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match ProblemFile::parse("kind = pde\n[dims]\nn = two\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(ProblemFile::parse("kind = pde\n[dims]\nn = 2\n").is_err());
        assert!(ProblemFile::parse("[dims]\nn = 2\n").is_err());
        assert!(ProblemFile::parse("kind = pde\n[weird]\n").is_err());
    }

    #[test]
    fn values() {
        let v = parse_values("0; 1/2, -3").unwrap();
        assert_eq!(v.len(), 3);
        assert!(parse_values("0;x").is_err());
    }
}
