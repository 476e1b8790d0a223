use forge_core::exactlin::{rat, QMatrix};
use forge_core::flags::*;
use forge_core::polyalg::vars;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn systems() -> Vec<(PfaffianSystem, Vec<usize>, bool)> {
    let mut out: Vec<_> = (1..=5)
        .map(|k| (contact_system(k), (0..=k).rev().collect(), true))
        .collect();
    out.push((darboux_model(), vec![1, 0], true));
    let pair = PfaffianSystem::parse(&vars(&["x1", "x2", "x3"]), &["dx1", "dx2"]).unwrap();
    out.push((pair, vec![2, 2], false));
    out
}

fn random_invertible(rng: &mut ChaCha8Rng, n: usize) -> QMatrix {
    loop {
        let rows: Vec<Vec<_>> = (0..n)
            .map(|_| (0..n).map(|_| rat(rng.gen_range(-2..=2))).collect())
            .collect();
        let a = QMatrix::from_rows(n, rows);
        if a.rank() == n {
            return a;
        }
    }
}

#[test]
fn model_flags_at_the_origin() {
    for (sys, dims, is_flag) in systems() {
        let f = derived_flag(&sys, &origin(&sys), 6).unwrap();
        assert_eq!(f.dims, dims);
        assert_eq!(f.is_flag, is_flag);
    }
}

#[test]
fn derived_dimensions_never_grow() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (sys, _, _) in systems() {
        let p: Vec<_> = (0..sys.ambient_dim()).map(|_| rat(rng.gen_range(-3..=3))).collect();
        let once = derived_system(&sys, &p).unwrap();
        let twice = derived_system(&once, &p).unwrap();
        assert!(twice.rank_at(&p).unwrap() <= once.rank_at(&p).unwrap());
        assert!(once.rank_at(&p).unwrap() <= sys.rank_at(&p).unwrap());
    }
}

#[test]
fn flags_survive_linear_changes_of_coordinates() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (sys, dims, is_flag) in systems() {
        let n = sys.ambient_dim();
        for _ in 0..10 {
            let a = random_invertible(&mut rng, n);
            let pulled = sys.pullback(&linear_map(sys.vars(), &a)).unwrap();
            let f = derived_flag(&pulled, &origin(&pulled), 6).unwrap();
            assert_eq!(f.dims, dims);
            assert_eq!(f.is_flag, is_flag);
        }
    }
}

#[test]
fn generic_points_agree_for_the_models() {
    for (sys, dims, _) in systems() {
        let g = genericity(&sys, 3, 6, 0).unwrap();
        assert!(g.agree);
        assert_eq!(g.samples[0].flag.as_ref().unwrap().dims, dims);
    }
}
