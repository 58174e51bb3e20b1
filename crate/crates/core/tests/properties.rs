mod common;

use approx::assert_relative_eq;
use chernoff::clt::{density_on, vxi_apply, GridFunction, GridSpec, NamedLaw};
use chernoff::engine::{
    apply_product, commutativity_defect, lemma4_chain, make_implicit_euler_family,
    make_semigroup_family, random_dissipative_matrix, random_unit_vector, GeneratorSpec,
};
use chernoff::linalg::{
    devectorize, herm_eig, mat_exp, op_norm, trace_norm, vectorize, ComplexMatrix,
};
use chernoff::partitions::Partition;
use chernoff::quantum::{measurement_family, MeasurementChannel};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn partition_strategy() -> impl Strategy<Value = Partition> {
    prop::collection::vec(0.01f64..1.0, 1..60).prop_map(|raw| {
        let s: f64 = raw.iter().sum();
        let mut w: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let drift = 1.0 - w.iter().sum::<f64>();
        w[0] += drift;
        Partition::new(w).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn contraction_propagates_through_products(seed in any::<u64>(), dim in 1usize..6, p in partition_strategy(), t in 0.0f64..3.0) {
        let mut r = rng(seed);
        let a = random_dissipative_matrix(&mut r, dim, 0.0);
        let x = random_unit_vector(&mut r, dim);
        let fam = make_implicit_euler_family(&a).unwrap();
        let y = apply_product(&fam, &p, t, &x).unwrap();
        prop_assert!(y.frobenius_norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn commuting_products_ignore_order(seed in any::<u64>(), dim in 1usize..5, p in partition_strategy(), t in 0.0f64..2.0) {
        let mut r = rng(seed);
        let a = random_dissipative_matrix(&mut r, dim, 0.0);
        let x = random_unit_vector(&mut r, dim);
        let fam = make_implicit_euler_family(&a).unwrap();
        let fwd = apply_product(&fam, &p, t, &x).unwrap();
        let bwd = apply_product(&fam, &p.reversed(), t, &x).unwrap();
        prop_assert!((&fwd - &bwd).frobenius_norm() <= 1e-10);
        prop_assert!(commutativity_defect(&fam, t, 0.5 * t + 0.1).unwrap() <= 1e-10);
    }

    #[test]
    fn semigroup_products_telescope(seed in any::<u64>(), dim in 1usize..5, p in partition_strategy(), t in 0.0f64..2.0) {
        let mut r = rng(seed);
        let a = random_dissipative_matrix(&mut r, dim, 0.0);
        let x = random_unit_vector(&mut r, dim);
        let gen = GeneratorSpec::new(a).unwrap();
        let fam = make_semigroup_family(&gen).unwrap();
        let y = apply_product(&fam, &p, t, &x).unwrap();
        let want = &gen.semigroup(t).unwrap() * &x;
        prop_assert!((&y - &want).frobenius_norm() <= 1e-10);
    }

    #[test]
    fn chain_orders(seed in any::<u64>(), dim in 1usize..5, p in partition_strategy(), t in 0.0f64..1.0) {
        let mut r = rng(seed);
        let a = random_dissipative_matrix(&mut r, dim, 0.01);
        let x = random_unit_vector(&mut r, dim);
        let fam = make_implicit_euler_family(&a).unwrap();
        let gen = GeneratorSpec::new(a).unwrap();
        let c = lemma4_chain(&fam, &gen, &p, t, &x).unwrap();
        prop_assert!(c.holds(1e-9), "{:?}", c);
    }

    #[test]
    fn exponential_adds_exponents(seed in any::<u64>(), dim in 1usize..6, s in 0.0f64..2.0, t in 0.0f64..2.0) {
        let a = common::random_complex(&mut rng(seed), dim, dim);
        let lhs = mat_exp(&a, s + t).unwrap();
        let rhs = &mat_exp(&a, s).unwrap() * &mat_exp(&a, t).unwrap();
        prop_assert!(op_norm(&(&lhs - &rhs)) <= 1e-10 * op_norm(&lhs).max(1.0));
    }

    #[test]
    fn norms_are_consistent(seed in any::<u64>(), dim in 1usize..7) {
        let mut r = rng(seed);
        let a = common::random_complex(&mut r, dim, dim);
        let b = common::random_complex(&mut r, dim, dim);
        prop_assert!(op_norm(&(&a * &b)) <= op_norm(&a) * op_norm(&b) * (1.0 + 1e-12));
        prop_assert!(trace_norm(&a).unwrap() >= op_norm(&a) * (1.0 - 1e-12));
        prop_assert!(op_norm(&a) <= a.frobenius_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn hermitian_eigendecomposition(seed in any::<u64>(), dim in 1usize..8) {
        let h = common::random_hermitian(&mut rng(seed), dim);
        let e = herm_eig(&h).unwrap();
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let u = &e.eigenvectors;
        let id = ComplexMatrix::identity(dim);
        prop_assert!(op_norm(&(&(&u.adjoint() * u) - &id)) <= 1e-12);
        prop_assert!(op_norm(&(&e.reconstruct() - &h)) <= 1e-12 * op_norm(&h).max(1.0));
        assert_relative_eq!(e.eigenvalues.iter().sum::<f64>(), h.trace().re, epsilon = 1e-12);
    }

    #[test]
    fn channel_products_are_channels(seed in any::<u64>(), dim in 2usize..6, p in partition_strategy(), t in 0.0f64..2.0, gamma in 0.1f64..3.0) {
        let mut r = rng(seed);
        let ch = MeasurementChannel::new(common::random_hermitian(&mut r, dim), gamma).unwrap();
        let fam = measurement_family(&ch);
        let rho = common::random_density(&mut r, dim);
        let sigma = common::random_density(&mut r, dim);
        let y = devectorize(&apply_product(&fam, &p, t, &vectorize(rho.matrix()).unwrap()).unwrap()).unwrap();
        prop_assert!((y.trace().re - 1.0).abs() <= 1e-10);
        prop_assert!(y.is_hermitian(1e-10));
        let diff = rho.matrix() - sigma.matrix();
        let out = devectorize(&apply_product(&fam, &p, t, &vectorize(&diff).unwrap()).unwrap()).unwrap();
        prop_assert!(trace_norm(&out).unwrap() <= trace_norm(&diff).unwrap() + 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn smoothing_operators_commute_and_contract(s in 0.0f64..1.0, t in 0.0f64..1.0, shift in -2.0f64..2.0) {
        let grid = GridSpec::symmetric(12.0, 0.01).unwrap();
        let law = density_on(NamedLaw::BetaSymmetric, grid).unwrap();
        let f = GridFunction::sample(grid, |x| (-(x - shift).powi(2)).exp() * (2.0 * x).cos());
        let st = vxi_apply(&vxi_apply(&f, &law, s).unwrap(), &law, t).unwrap();
        let ts = vxi_apply(&vxi_apply(&f, &law, t).unwrap(), &law, s).unwrap();
        prop_assert!(st.sup_distance(&ts).unwrap() <= 1e-8);
        prop_assert!(st.sup_norm() <= f.sup_norm() + 1e-12);
    }
}
