use forge_core::exactlin::{nullspace, rat, QMatrix, Rational};
use forge_core::jetcalc::binomial;
use forge_core::spencer::*;
use proptest::prelude::*;

/// A symbol cut out by a few random integer equations.
fn arb_symbol(max_order: usize) -> impl Strategy<Value = SymbolSpace> {
    (1usize..=3, 1usize..=2, 1usize..=max_order).prop_flat_map(|(n, m, k)| {
        let ambient = m * binomial(n + k - 1, k);
        let eqs = prop::collection::vec(
            prop::collection::vec(-2i64..=2, ambient),
            0..=ambient.min(4),
        );
        eqs.prop_map(move |rows| {
            let rows: Vec<Vec<Rational>> = rows
                .into_iter()
                .map(|r| r.into_iter().map(rat).collect())
                .collect();
            SymbolSpace::from_equations(n, m, k, rows).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn delta_squared_vanishes(g in arb_symbol(3)) {
        let n = g.n();
        let start = g.order();
        let mut fam = SymbolFamily::from_seed(g);
        fam.extend_to(4).unwrap();
        for k in start..=4 {
            for q in 0..n {
                let first = delta_map(&fam, k, q).unwrap();
                let second = delta_map(&fam, k - 1, q + 1).unwrap();
                prop_assert!(second.mul(&first).is_zero());
            }
        }
    }

    #[test]
    fn euler_characteristic_on_diagonals(g in arb_symbol(3)) {
        let n = g.n();
        let mut fam = SymbolFamily::from_seed(g);
        fam.extend_to(6).unwrap();
        for d in 0..=5usize {
            let (mut chains, mut homology) = (0i64, 0i64);
            for q in 0..=n.min(d) {
                let sign = if q % 2 == 0 { 1 } else { -1 };
                chains += sign * cochain_dim(&fam, d - q, q).unwrap() as i64;
                homology += sign * cohomology_dim(&fam, d - q, q).unwrap() as i64;
            }
            prop_assert_eq!(chains, homology);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn prolongation_two_ways(g in arb_symbol(3), r in 1usize..=2) {
        let mut iterated = g.clone();
        for _ in 0..r {
            iterated = prolong_symbol(&iterated);
        }
        prop_assert_eq!(iterated, prolong_symbol_direct(&g, r));
    }

    #[test]
    fn prolongation_is_the_kernel_of_delta(g in arb_symbol(3)) {
        // g^{(1)} = (δ^{k+1,0})^{-1}(V*⊗g_k) for δ on the full family
        let (n, m, k) = (g.n(), g.m(), g.order());
        let mut full = SymbolFamily::from_seed(SymbolSpace::full(n, m, k));
        full.extend_to(k + 1).unwrap();
        let d = delta_map(&full, k + 1, 0).unwrap();
        let e = g.equations();
        let block = e.cols();
        let mut rows = Vec::new();
        for i in 0..n {
            for r in 0..e.rows() {
                let mut row = vec![Rational::from_integer(0.into()); n * block];
                row[i * block..(i + 1) * block].clone_from_slice(e.row(r));
                rows.push(row);
            }
        }
        let constraint = QMatrix::from_rows(n * block, rows).mul(&d);
        let kernel = nullspace(&constraint);
        prop_assert_eq!(kernel.dim(), prolong_symbol(&g).dim());
    }

    #[test]
    fn characters_decrease(g in arb_symbol(3), seed in 0u64..4) {
        let c = cartan_characters(&g, seed);
        prop_assert!(c.alpha.windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(c.sum(), g.dim());
    }

    #[test]
    fn involutive_symbols_are_acyclic(g in arb_symbol(2)) {
        if cartan_test(&g, 0) {
            let n = g.n();
            let start = g.order();
            let mut fam = SymbolFamily::from_seed(g);
            let table = cohomology_table(&mut fam, start, 4).unwrap();
            for row in table {
                prop_assert!(row[1..=n].iter().all(|&h| h == 0));
            }
        }
    }
}

#[test]
fn full_symbols_are_acyclic() {
    for n in 1..=3 {
        for m in 1..=2 {
            let mut fam = SymbolFamily::from_seed(SymbolSpace::full(n, m, 1));
            let table = cohomology_table(&mut fam, 1, 4).unwrap();
            for row in table {
                assert!(row[1..=n].iter().all(|&h| h == 0));
            }
        }
    }
}

#[test]
fn laplace_family_is_involutive_and_acyclic() {
    let laplace = SymbolSpace::from_equations(2, 1, 2, vec![vec![rat(1), rat(0), rat(1)]]).unwrap();
    assert!(cartan_test(&laplace, 0));
    assert_eq!(cartan_characters(&laplace, 0).alpha, vec![2, 0]);
    assert_eq!(prolong_symbol(&laplace).dim(), 2);
    let mut fam = SymbolFamily::from_seed(laplace);
    assert_eq!(acyclicity_onset(&mut fam, 2, 6).unwrap(), Some(2));
    assert_eq!(involutivity_onset(&mut fam, 6, 0).unwrap(), Some(2));
}
