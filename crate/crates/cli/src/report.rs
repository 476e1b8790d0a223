//! Analyses behind the four commands and their reports.

use std::fmt::Write as _;

use serde::Serialize;

use forge_core::exactlin::Rational;
use forge_core::flags::{flag_at, genericity, origin, GenericityReport, PfaffianSystem, PointFlag};
use forge_core::jetcalc::{base_vars, binomial, JetPoint};
use forge_core::kuranishi::{complete, symbol_at, KuranishiReport, LinearPDESystem, Verdict};
use forge_core::medolaghi::{
    cross_check, degree_shift, homogeneity_test, isotropy_dim, isotropy_projection_oracle,
    mv_blocks, orbit_tangent_dim, Builtin, OracleDims, ProlongationRule, ShiftReport,
};
use forge_core::polyalg::{parse_poly, vars, Poly};
use forge_core::spencer::{
    acyclicity_onset, cartan_characters, cartan_test, cohomology_table, involutivity_onset,
    prolong_symbol, SymbolFamily,
};
use forge_core::Error;

use crate::problem::{parse_values, Kind, ProblemFile};

pub const DEFAULT_CAP: usize = 6;

#[derive(Clone, Debug)]
pub struct Options {
    pub cap: Option<usize>,
    pub seed: u64,
    pub points: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub cap: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub provenance: Provenance,
    pub kind: &'static str,
    pub input: String,
    pub result: Analysis,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Analysis {
    Symbol(SymbolReport),
    Pde(PdeReport),
    Rule(RuleReport),
    Pfaff(PfaffReport),
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderDim {
    pub order: usize,
    pub dim: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CohomologyRow {
    pub order: usize,
    /// `H^{k,q}` for `q = 0..=n`
    pub h: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SymbolReport {
    pub n: usize,
    pub m: usize,
    pub order: usize,
    pub dim: usize,
    pub ambient_dim: usize,
    pub prolongations: Vec<OrderDim>,
    pub finite_type: Option<usize>,
    pub cohomology: Vec<CohomologyRow>,
    pub characters: Vec<usize>,
    pub weighted_character_sum: usize,
    pub first_prolongation_dim: usize,
    pub involutive: bool,
    pub eta_2: Option<usize>,
    pub eta_inf: Option<usize>,
    pub involutive_from: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PdeReport {
    pub n: usize,
    pub m: usize,
    pub order: usize,
    #[serde(flatten)]
    pub completion: KuranishiReport,
    pub completed_equations: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MvReport {
    pub rank_a: usize,
    pub rank_b: usize,
    pub rank_c: usize,
    pub rank_full: usize,
    /// `W ∈ Θ_{k+1}`
    pub in_theta: bool,
    pub oracle: OracleDims,
    /// `ρW ∈ Θ_k`, when `k >= 1`
    pub truncation_in_theta: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct JetReport {
    pub point: String,
    pub order: usize,
    pub isotropy_dim: usize,
    pub orbit_tangent_dim: usize,
    pub jet_algebra_dim: usize,
    pub mv: Option<MvReport>,
    pub homogeneous: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RuleReport {
    pub n: usize,
    pub m: usize,
    pub order: usize,
    pub builtin: Option<Builtin>,
    pub lift: Vec<String>,
    pub jets: Vec<JetReport>,
    pub degree_shift: Option<ShiftReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PfaffReport {
    pub vars: Vec<String>,
    pub generators: Vec<String>,
    pub points: Vec<PointFlag>,
    pub genericity: GenericityReport,
}

pub fn analyze(problem: &ProblemFile, opts: &Options) -> Result<Report, Error> {
    let cap = opts.cap.or(problem.cap).unwrap_or(DEFAULT_CAP);
    let result = match problem.kind {
        Kind::Symbol => Analysis::Symbol(symbol_report(problem, cap, opts.seed)?),
        Kind::Pde => Analysis::Pde(pde_report(problem, cap)?),
        Kind::Rule => Analysis::Rule(rule_report(problem, opts)?),
        Kind::Pfaff => Analysis::Pfaff(pfaff_report(problem, cap, opts)?),
    };
    Ok(Report {
        provenance: Provenance {
            tool: "forge",
            version: env!("CARGO_PKG_VERSION"),
            cap,
            seed: opts.seed,
        },
        kind: problem.kind.name(),
        input: problem.canonical(),
        result,
    })
}

fn pde_system(p: &ProblemFile) -> Result<LinearPDESystem, Error> {
    let (n, m, order) = (p.n.unwrap(), p.m.unwrap(), p.order.unwrap());
    for eq in &p.equations {
        if let Err(Error::Parse { message, .. }) = LinearPDESystem::parse(n, m, order, &[eq]) {
            return Err(Error::Parse {
                line: 0,
                message: format!("in `{eq}`: {message}"),
            });
        }
    }
    let lines: Vec<&str> = p.equations.iter().map(String::as_str).collect();
    LinearPDESystem::parse(n, m, order, &lines)
}

fn symbol_report(p: &ProblemFile, cap: usize, seed: u64) -> Result<SymbolReport, Error> {
    let sys = pde_system(p)?;
    let k = sys.order();
    for eq in sys.equations() {
        if let Some(t) = eq.iter().find(|t| t.alpha.order() as usize != k) {
            return Err(Error::DimensionMismatch {
                context: "symbol relation order".into(),
                expected: k,
                found: t.alpha.order() as usize,
            });
        }
    }
    if cap < k {
        return Err(Error::CapTooSmall { cap, min: k });
    }
    let g = symbol_at(&sys, k);
    let (n, m) = (g.n(), g.m());
    let chars = cartan_characters(&g, seed);
    let first = prolong_symbol(&g).dim();
    let involutive = cartan_test(&g, seed);
    let mut family = SymbolFamily::from_seed(g.clone());
    let table = cohomology_table(&mut family, k, cap)?;
    let prolongations: Vec<OrderDim> = (k..=cap)
        .map(|j| {
            Ok(OrderDim {
                order: j,
                dim: family.dim(j)?,
            })
        })
        .collect::<Result<_, Error>>()?;
    let finite_type = prolongations.iter().find(|o| o.dim == 0).map(|o| o.order);
    Ok(SymbolReport {
        n,
        m,
        order: k,
        dim: g.dim(),
        ambient_dim: g.ambient_dim(),
        prolongations,
        finite_type,
        cohomology: table
            .into_iter()
            .enumerate()
            .map(|(i, h)| CohomologyRow { order: k + i, h })
            .collect(),
        weighted_character_sum: chars.weighted_sum(),
        characters: chars.alpha,
        first_prolongation_dim: first,
        involutive,
        eta_2: acyclicity_onset(&mut family, 2, cap)?,
        eta_inf: acyclicity_onset(&mut family, n, cap)?,
        involutive_from: involutivity_onset(&mut family, cap, seed)?,
    })
}

fn pde_report(p: &ProblemFile, cap: usize) -> Result<PdeReport, Error> {
    let sys = pde_system(p)?;
    let completion = complete(&sys, cap)?;
    let completed_equations = completion
        .completed
        .to_string()
        .lines()
        .map(str::to_string)
        .collect();
    Ok(PdeReport {
        n: sys.n(),
        m: sys.m(),
        order: sys.order(),
        completion,
        completed_equations,
    })
}

pub fn build_rule(p: &ProblemFile) -> Result<ProlongationRule, Error> {
    let n = p.n.unwrap();
    let rule = match &p.builtin {
        Some(name) => {
            let kind = Builtin::from_name(name).ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("unknown built-in rule `{name}`"),
            })?;
            let rule = ProlongationRule::builtin(kind, n);
            for (given, actual, what) in [(p.m, rule.m(), "fibre dimension"), (p.order, 1, "rule order")] {
                if let Some(g) = given {
                    if g != actual {
                        return Err(Error::DimensionMismatch {
                            context: format!("{what} of `{name}`"),
                            expected: actual,
                            found: g,
                        });
                    }
                }
            }
            rule
        }
        None => ProlongationRule::parse(n, p.m.unwrap(), p.order.unwrap() as u32, &p.lift)?,
    };
    Ok(rule)
}

fn section(p: &ProblemFile, n: usize, m: usize) -> Result<Option<Vec<Poly>>, Error> {
    if p.section.is_empty() {
        return Ok(None);
    }
    let bv = base_vars(n);
    let mut out = vec![Poly::zero(&bv); m];
    for (k, v) in &p.section {
        let l = (1..=m)
            .find(|l| *k == format!("y{l}"))
            .ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("unknown section component `{k}`"),
            })?;
        out[l - 1] = parse_poly(v, &bv)?;
    }
    Ok(Some(out))
}

fn rule_report(p: &ProblemFile, opts: &Options) -> Result<RuleReport, Error> {
    let rule = build_rule(p)?;
    let (n, m, ell) = (rule.n(), rule.m(), rule.order() as usize);
    let points = if opts.points.is_empty() { &p.points } else { &opts.points };
    if points.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "a rule analysis needs at least one [point] or --point".into(),
        });
    }
    let sec = section(p, n, m)?;
    let mut jets = Vec::new();
    let mut first_base = None;
    for src in points {
        let w = JetPoint::from_flat(n, m, parse_values(src)?)?;
        let k1 = w.spec().order() as usize;
        first_base.get_or_insert_with(|| w.base().to_vec());
        let mv = if k1 >= 1 {
            let blocks = mv_blocks(&rule, &w)?;
            let oracle = isotropy_projection_oracle(&rule, &w)?;
            let in_theta = cross_check(&blocks, &oracle)?;
            let truncation_in_theta = if k1 >= 2 {
                let z = w.truncate(k1 as u32 - 1);
                let lower = mv_blocks(&rule, &z)?;
                Some(cross_check(&lower, &isotropy_projection_oracle(&rule, &z)?)?)
            } else {
                None
            };
            Some(MvReport {
                rank_a: blocks.a.rank(),
                rank_b: blocks.b.rank(),
                rank_c: blocks.c.rank(),
                rank_full: blocks.assemble().rank(),
                in_theta,
                oracle,
                truncation_in_theta,
            })
        } else {
            None
        };
        let homogeneous = match &sec {
            Some(s) => Some(homogeneity_test(&rule, s, w.base(), k1 as u32)?),
            None => None,
        };
        jets.push(JetReport {
            point: w.to_string(),
            order: k1,
            isotropy_dim: isotropy_dim(&rule, &w)?,
            orbit_tangent_dim: orbit_tangent_dim(&rule, &w)?,
            jet_algebra_dim: n * binomial(n + ell + k1, ell + k1),
            mv,
            homogeneous,
        });
    }
    let shift = match (&sec, first_base) {
        (Some(s), Some(z)) => Some(degree_shift(&rule, s, &z, (1, 4))?),
        _ => None,
    };
    Ok(RuleReport {
        n,
        m,
        order: ell,
        builtin: rule.kind(),
        lift: rule.lift_lines(),
        jets,
        degree_shift: shift,
    })
}

fn pfaff_report(p: &ProblemFile, cap: usize, opts: &Options) -> Result<PfaffReport, Error> {
    let vs = vars(&p.vars);
    let sys = PfaffianSystem::parse(&vs, &p.generators)?;
    let sources = if opts.points.is_empty() { &p.points } else { &opts.points };
    let pts: Vec<Vec<Rational>> = if sources.is_empty() {
        vec![origin(&sys)]
    } else {
        sources.iter().map(|s| parse_values(s)).collect::<Result<_, _>>()?
    };
    let points = pts
        .iter()
        .map(|pt| flag_at(&sys, pt, cap))
        .collect::<Result<_, _>>()?;
    Ok(PfaffReport {
        vars: p.vars.clone(),
        generators: sys.generators().iter().map(|g| g.to_string()).collect(),
        points,
        genericity: genericity(&sys, 3, cap, opts.seed)?,
    })
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or("none".to_string(), T::to_string)
}

fn dims_list(v: &[usize]) -> String {
    let s: Vec<String> = v.iter().map(usize::to_string).collect();
    format!("[{}]", s.join(","))
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let pv = &self.provenance;
        let _ = writeln!(s, "{} {} | {} | cap {} | seed {}", pv.tool, pv.version, self.kind, pv.cap, pv.seed);
        match &self.result {
            Analysis::Symbol(r) => {
                let _ = writeln!(s, "symbol of order {}: n = {}, m = {}", r.order, r.n, r.m);
                let _ = writeln!(s, "dim g = {} (ambient {})", r.dim, r.ambient_dim);
                let pro: Vec<String> = r.prolongations.iter().map(|o| format!("g{}={}", o.order, o.dim)).collect();
                let _ = writeln!(s, "prolongations: {}", pro.join(" "));
                let _ = writeln!(s, "finite type: {}", opt(&r.finite_type));
                let _ = writeln!(s, "characters: {} (weighted sum {}, dim g^(1) = {})", dims_list(&r.characters), r.weighted_character_sum, r.first_prolongation_dim);
                let _ = writeln!(s, "involutive: {}", r.involutive);
                let _ = writeln!(s, "cohomology H^(k,q), q = 0..{}:", r.n);
                for row in &r.cohomology {
                    let _ = writeln!(s, "  k={}: {}", row.order, dims_list(&row.h));
                }
                let _ = writeln!(s, "2-acyclic from: {}", opt(&r.eta_2));
                let _ = writeln!(s, "acyclic from: {}", opt(&r.eta_inf));
                let _ = writeln!(s, "involutive from: {}", opt(&r.involutive_from));
            }
            Analysis::Pde(r) => {
                let c = &r.completion;
                let _ = writeln!(s, "order  dim R  dim g  dim R+  dim g+  onto  2-acyclic  new");
                for st in &c.steps {
                    let _ = writeln!(
                        s,
                        "{:>5}  {:>5}  {:>5}  {:>6}  {:>6}  {:>4}  {:>9}  {:>3}",
                        st.order,
                        st.dim_r,
                        st.dim_g,
                        st.dim_r_next,
                        st.dim_g_next,
                        if st.surjective { "yes" } else { "no" },
                        if st.two_acyclic { "yes" } else { "no" },
                        st.new_equations
                    );
                }
                for e in &c.events {
                    let _ = writeln!(
                        s,
                        "new equations at order {} (lowest order {}): {}",
                        e.at_order,
                        e.lowest_order,
                        e.equations.join("; ")
                    );
                }
                let verdict = match &c.verdict {
                    Verdict::FormallyIntegrable => "formally integrable".to_string(),
                    Verdict::NewEquationsFound { order } => format!("new equations found (lowest order {order})"),
                    Verdict::CapReached => "cap reached".to_string(),
                };
                let _ = writeln!(s, "verdict: {verdict}");
                let _ = writeln!(s, "mu0: {}  solution fibre dim: {}", opt(&c.mu0), opt(&c.fibre_dim));
            }
            Analysis::Rule(r) => {
                let name = r.builtin.map_or("custom".to_string(), |b| b.to_string());
                let _ = writeln!(s, "rule {name}: n = {}, m = {}, order {}", r.n, r.m, r.order);
                for l in &r.lift {
                    let _ = writeln!(s, "  {l}");
                }
                for j in &r.jets {
                    let _ = writeln!(s, "jet {} (order {})", j.point, j.order);
                    let _ = writeln!(s, "  isotropy dim {}, orbit tangent dim {}, sum {}", j.isotropy_dim, j.orbit_tangent_dim, j.jet_algebra_dim);
                    if let Some(mv) = &j.mv {
                        let _ = writeln!(s, "  ranks A {} B {} C {} full {}", mv.rank_a, mv.rank_b, mv.rank_c, mv.rank_full);
                        let _ = writeln!(
                            s,
                            "  oracle: upper {} projection {} lower {}",
                            mv.oracle.upper, mv.oracle.projection, mv.oracle.lower
                        );
                        let _ = writeln!(s, "  in Theta: {}", mv.in_theta);
                        if let Some(t) = mv.truncation_in_theta {
                            let _ = writeln!(s, "  truncation in Theta: {t}");
                        }
                    }
                    if let Some(h) = j.homogeneous {
                        let _ = writeln!(s, "  homogeneous: {h}");
                    }
                }
                if let Some(d) = &r.degree_shift {
                    let _ = writeln!(s, "tangent-kernel cohomology, k = {}..{}:", d.window.0, d.window.1);
                    for (i, row) in d.delta.iter().enumerate() {
                        let _ = writeln!(s, "  k={}: {}", d.window.0 + i, dims_list(row));
                    }
                    let _ = writeln!(s, "symbol cohomology:");
                    for (j, row) in d.symbol.iter().enumerate() {
                        let _ = writeln!(s, "  j={j}: {}", dims_list(row));
                    }
                    let shifts: Vec<String> = d.matching_shifts.iter().map(i64::to_string).collect();
                    let _ = writeln!(s, "matching shifts: [{}], observed: {}", shifts.join(","), opt(&d.observed_shift));
                }
            }
            Analysis::Pfaff(r) => {
                let _ = writeln!(s, "variables: {}", r.vars.join(", "));
                for g in &r.generators {
                    let _ = writeln!(s, "  {g}");
                }
                for p in &r.points {
                    let at = p.point.join(", ");
                    match (&p.flag, &p.error) {
                        (Some(f), _) => {
                            let _ = writeln!(s, "at ({at}): dims {} flag {}", dims_list(&f.dims), f.is_flag);
                        }
                        (None, e) => {
                            let _ = writeln!(s, "at ({at}): {}", opt(e));
                        }
                    }
                }
                let _ = writeln!(
                    s,
                    "sampled points agree: {} ({} samples)",
                    r.genericity.agree,
                    r.genericity.samples.len()
                );
            }
        }
        s
    }
}
