use forge_core::exactlin::{rat, ratio, QMatrix, Rational};
use forge_core::jetcalc::{base_vars, binomial, JetPoint, JetSpec};
use forge_core::medolaghi::*;
use forge_core::polyalg::{parse_poly, Poly};
use forge_core::spencer::prolong_symbol;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rules() -> Vec<ProlongationRule> {
    vec![
        ProlongationRule::builtin(Builtin::OneForm, 1),
        ProlongationRule::builtin(Builtin::OneForm, 2),
        ProlongationRule::builtin(Builtin::VectorField, 1),
        ProlongationRule::builtin(Builtin::Metric, 2),
    ]
}

fn random_jet(rng: &mut ChaCha8Rng, n: usize, m: usize, k: u32) -> JetPoint {
    let arity = JetSpec::new(n, m, k).arity();
    let flat = (0..arity)
        .map(|_| ratio(rng.gen_range(-2..=2), rng.gen_range(1..=2)))
        .collect();
    JetPoint::from_flat(n, m, flat).unwrap()
}

/// Affine map plus a quadratic term in `x − z`, invertible at `z`.
fn random_germ(rng: &mut ChaCha8Rng, z: &[Rational]) -> Germ {
    let n = z.len();
    let bv = base_vars(n);
    loop {
        let lin: Vec<Vec<i64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(-2..=2)).collect())
            .collect();
        let rows: Vec<&[i64]> = lin.iter().map(|r| r.as_slice()).collect();
        if QMatrix::from_i64(&rows).rank() < n {
            continue;
        }
        let map = (0..n)
            .map(|i| {
                let mut p = Poly::constant(&bv, rat(rng.gen_range(-2..=2)));
                for (j, &c) in lin[i].iter().enumerate() {
                    p = &p + &(&Poly::var(&bv, j) * &Poly::constant(&bv, rat(c)));
                }
                for j in 0..n {
                    let c = ratio(rng.gen_range(-2..=2), 2);
                    let d = &Poly::var(&bv, j) - &Poly::constant(&bv, z[j].clone());
                    p = &p + &(&(&d * &d) * &Poly::constant(&bv, c));
                }
                p
            })
            .collect();
        return Germ::new(map).unwrap();
    }
}

#[test]
fn rank_test_agrees_with_projection_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for rule in rules() {
        let mut verdicts = [0usize; 2];
        for t in 0..50 {
            let k1 = if t % 2 == 0 { 1 } else { 2 };
            let w = random_jet(&mut rng, rule.n(), rule.m(), k1);
            let blocks = mv_blocks(&rule, &w).unwrap();
            let oracle = isotropy_projection_oracle(&rule, &w).unwrap();
            let verdict = cross_check(&blocks, &oracle).unwrap();
            assert_eq!(verdict, mv_test(&rule, &w).unwrap());
            assert_eq!(blocks.a, lambda_matrix(&rule, &w.truncate(k1 - 1)).unwrap());
            assert!(blocks.zero_block.is_zero());
            verdicts[verdict as usize] += 1;
        }
        assert!(verdicts[1] > 0);
    }
}

#[test]
fn oneform_along_a_section() {
    let rule = ProlongationRule::builtin(Builtin::OneForm, 1);
    let s = vec![parse_poly("1 + x1", &base_vars(1)).unwrap()];
    let w = JetPoint::from_section(JetSpec::new(1, 1, 1), &s, &[rat(0)]).unwrap();
    let o = isotropy_projection_oracle(&rule, &w).unwrap();
    assert_eq!((o.upper, o.projection, o.lower), (0, 0, 0));
    assert!(o.surjective);
    assert!(mv_test(&rule, &w).unwrap());
}

#[test]
fn oracle_dims_stable_under_translation() {
    let rule = ProlongationRule::builtin(Builtin::OneForm, 2);
    let values: Vec<Rational> = [1, 2, -1, 3, 0, 1].iter().map(|&v| rat(v)).collect();
    let spec = JetSpec::new(2, 2, 1);
    let dims: Vec<_> = [[0, 0], [1, -2], [3, 5]]
        .iter()
        .map(|z| {
            let w = JetPoint::new(spec.clone(), z.iter().map(|&v| rat(v)).collect(), values.clone())
                .unwrap();
            isotropy_projection_oracle(&rule, &w).unwrap()
        })
        .collect();
    assert!(dims.windows(2).all(|p| p[0] == p[1]));
}

#[test]
fn block_shapes_force_the_rank_condition() {
    let m = |rows: &[&[i64]]| QMatrix::from_i64(rows);
    let diag = MVBlocks {
        k: 0,
        a: m(&[&[1, 2], &[0, 0]]),
        b: m(&[&[0, 0]]),
        c: m(&[&[0, 5]]),
        zero_block: m(&[&[0, 0], &[0, 0]]),
    };
    assert!(diag.rank_condition());
    let invertible_c = MVBlocks {
        b: m(&[&[3, 1]]),
        c: m(&[&[2]]),
        zero_block: m(&[&[0], &[0]]),
        ..diag
    };
    assert!(invertible_c.rank_condition());
}

#[test]
fn orbit_invariance_under_germs() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for rule in rules() {
        let (n, m) = (rule.n(), rule.m());
        let z = random_jet(&mut rng, n, m, 1);
        let w = JetPoint::new(
            JetSpec::new(n, m, 2),
            z.base().to_vec(),
            random_jet(&mut rng, n, m, 2).values().to_vec(),
        )
        .unwrap();
        let iso = isotropy_dim(&rule, &z).unwrap();
        let orbit = orbit_tangent_dim(&rule, &z).unwrap();
        let verdict = mv_test(&rule, &w).unwrap();
        for _ in 0..10 {
            let germ = random_germ(&mut rng, z.base());
            let z2 = transform_jet(&rule, &germ, &z).unwrap();
            let w2 = transform_jet(&rule, &germ, &w).unwrap();
            assert_eq!(isotropy_dim(&rule, &z2).unwrap(), iso);
            assert_eq!(orbit_tangent_dim(&rule, &z2).unwrap(), orbit);
            assert_eq!(mv_test(&rule, &w2).unwrap(), verdict);
            assert_eq!(w2.truncate(1), transform_jet(&rule, &germ, &w.truncate(1)).unwrap());
        }
    }
}

#[test]
fn orbit_and_isotropy_fill_the_jet_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for rule in rules() {
        let n = rule.n();
        let ell = rule.order() as usize;
        for k in 0..=2u32 {
            for _ in 0..3 {
                let z = random_jet(&mut rng, n, rule.m(), k);
                let total = n * binomial(n + ell + k as usize, ell + k as usize);
                assert_eq!(
                    orbit_tangent_dim(&rule, &z).unwrap() + isotropy_dim(&rule, &z).unwrap(),
                    total
                );
            }
        }
    }
}

#[test]
fn top_block_rank_is_symbol_codimension() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for rule in rules() {
        for k1 in 1..=2u32 {
            let w = random_jet(&mut rng, rule.n(), rule.m(), k1);
            let mut g = isotropy_symbol(&rule, &w.truncate(0)).unwrap();
            for _ in 0..k1 {
                g = prolong_symbol(&g);
            }
            assert_eq!(mv_blocks(&rule, &w).unwrap().c.rank(), g.codim());
        }
    }
}
