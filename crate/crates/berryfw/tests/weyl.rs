use berryfw::weyl::{
    bracket_product_check, gen, invariant_derivative_check, normal_form, q_frac, q_i, q_int,
    symmetrize_word, to_symmetric_form, weyl_quantize, Factor, FactorKind, OrderedFactorization, QMat,
    Var, WeylExpr, WeylMonomial,
};
use berryfw::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn r(i: usize) -> WeylExpr {
    WeylExpr::var(1, Var::R(i))
}

fn p(i: usize) -> WeylExpr {
    WeylExpr::var(1, Var::P(i))
}

fn ih() -> WeylExpr {
    WeylExpr::hbar(1).scale(&q_i())
}

fn fac(kind: FactorKind, e: WeylExpr) -> Factor {
    Factor::new(kind, e).unwrap()
}

#[test]
fn p_times_r_is_rewritten() {
    assert_eq!(&p(0) * &r(0), &(&r(0) * &p(0)) - &ih());
}

#[test]
fn normal_product_is_unchanged() {
    let rp = &r(0) * &p(0);
    let mut m = WeylMonomial::one();
    m.r[0] = 1;
    m.p[0] = 1;
    assert_eq!(rp, WeylExpr::monomial(1, m, 0, QMat::identity(1)));
}

#[test]
fn p_squared_times_r() {
    let p2 = &p(0) * &p(0);
    let lhs = &p2 * &r(0);
    let rhs = &(&r(0) * &p2) - &(&ih() * &p(0)).scale(&q_int(2));
    assert_eq!(lhs, rhs);
}

#[test]
fn different_axes_commute() {
    assert_eq!(&p(1) * &r(0), &r(0) * &p(1));
}

#[test]
fn commutator_examples() {
    assert_eq!(r(0).commutator(&p(0)).unwrap(), ih());
    let r2p = &(&r(0) * &r(0)) * &p(0);
    assert_eq!(r(0).commutator(&r2p).unwrap(), &ih() * &(&r(0) * &r(0)));
    let sx = WeylExpr::constant(QMat::pauli(0));
    let sy = WeylExpr::constant(QMat::pauli(1));
    let sz2i = WeylExpr::constant(QMat::pauli(2).scale(&(q_int(2) * q_i())));
    assert_eq!(sx.commutator(&sy).unwrap(), sz2i);
}

#[test]
fn dimension_mismatch_is_an_error() {
    let a = WeylExpr::one(1);
    let b = WeylExpr::one(2);
    assert!(matches!(a.multiply(&b), Err(Error::DimMismatch(1, 2))));
}

#[test]
fn derivative_examples() {
    let r2p = &(&r(0) * &r(0)) * &p(0);
    assert_eq!(r2p.derivative(Var::R(0)), (&r(0) * &p(0)).scale(&q_int(2)));
    assert_eq!(r2p.derivative(Var::P(0)), &r(0) * &r(0));
    assert!((&WeylExpr::hbar(1) * &p(0)).derivative(Var::R(0)).is_zero());
}

#[test]
fn symmetrized_rp_has_zero_bracket() {
    let mut f = OrderedFactorization::new(1);
    let half = WeylExpr::scalar(1, q_frac(1, 2));
    f.push(vec![fac(FactorKind::R, &half * &r(0)), fac(FactorKind::P, p(0))]).unwrap();
    f.push(vec![fac(FactorKind::P, &half * &p(0)), fac(FactorKind::R, r(0))]).unwrap();
    assert!(f.bracket().is_zero());
}

#[test]
fn half_symmetrized_matrix_product() {
    let sx_r = WeylExpr::var(2, Var::R(0)).left_mat(&QMat::pauli(0).scale(&q_frac(1, 2)));
    let sy_p = WeylExpr::var(2, Var::P(0)).left_mat(&QMat::pauli(1));
    let sy_p_half = WeylExpr::var(2, Var::P(0)).left_mat(&QMat::pauli(1).scale(&q_frac(1, 2)));
    let sx_r_full = WeylExpr::var(2, Var::R(0)).left_mat(&QMat::pauli(0));
    let mut f = OrderedFactorization::new(2);
    f.push(vec![fac(FactorKind::R, sx_r), fac(FactorKind::P, sy_p)]).unwrap();
    f.push(vec![fac(FactorKind::P, sy_p_half), fac(FactorKind::R, sx_r_full)]).unwrap();
    // (i/4)[σx, σy] = −σz/2
    let expect = WeylExpr::constant(QMat::pauli(2).scale(&q_frac(-1, 2)));
    assert_eq!(f.bracket(), expect);
}

#[test]
fn pure_sum_has_zero_bracket() {
    let mut f = OrderedFactorization::new(1);
    f.push(vec![fac(FactorKind::R, &r(0) * &r(1))]).unwrap();
    f.push(vec![fac(FactorKind::P, &p(0) * &p(2))]).unwrap();
    assert!(f.bracket().is_zero());
}

#[test]
fn mixed_factor_is_rejected() {
    let e = &r(0) * &p(0);
    assert!(matches!(Factor::new(FactorKind::R, e.clone()), Err(Error::MixedFactor { .. })));
    assert!(matches!(Factor::new(FactorKind::P, e), Err(Error::MixedFactor { .. })));
}

#[test]
fn product_rule_small_cases() {
    let single = |k, e| OrderedFactorization::single(1, vec![fac(k, e)]).unwrap();
    let f = single(FactorKind::R, r(0));
    let g = single(FactorKind::P, p(0));
    assert!(bracket_product_check(&f, &g).unwrap().is_zero());
    let f = single(FactorKind::R, &r(0) * &r(0));
    let g = single(FactorKind::P, &p(0) * &p(0));
    assert!(bracket_product_check(&f, &g).unwrap().is_zero());
}

#[test]
fn invariance_pr_vs_rp_minus_i_hbar() {
    let f1 = OrderedFactorization::single(1, vec![fac(FactorKind::P, p(0)), fac(FactorKind::R, r(0))]).unwrap();
    let mut f2 = OrderedFactorization::single(1, vec![fac(FactorKind::R, r(0)), fac(FactorKind::P, p(0))]).unwrap();
    f2.push(vec![fac(FactorKind::R, -&ih())]).unwrap();
    assert!(invariant_derivative_check(&f1, &f2).unwrap().is_zero());
}

#[test]
fn invariance_symmetric_vs_normal_degree_four() {
    let letters = [Var::R(0), Var::R(0), Var::P(0), Var::P(0)];
    let sym = symmetrize_word(&WeylExpr::one(1), &letters, 8).unwrap();
    let normal = normal_form(&sym.expand());
    assert!(invariant_derivative_check(&sym, &normal).unwrap().is_zero());
}

#[test]
fn invariance_constant_matrix() {
    let m = WeylExpr::constant(QMat::pauli(1));
    let f1 = OrderedFactorization::single(2, vec![Factor::constant(QMat::pauli(1))]).unwrap();
    let f2 = OrderedFactorization::single(2, vec![fac(FactorKind::P, m)]).unwrap();
    assert!(invariant_derivative_check(&f1, &f2).unwrap().is_zero());
}

#[test]
fn unequal_operators_are_rejected() {
    let f1 = OrderedFactorization::single(1, vec![fac(FactorKind::P, p(0)), fac(FactorKind::R, r(0))]).unwrap();
    let f2 = OrderedFactorization::single(1, vec![fac(FactorKind::R, r(0)), fac(FactorKind::P, p(0))]).unwrap();
    assert_eq!(invariant_derivative_check(&f1, &f2), Err(Error::UnequalFactorizations));
}

#[test]
fn symmetrization_degree_cap() {
    let letters = [Var::R(0); 9];
    assert!(matches!(
        symmetrize_word(&WeylExpr::one(1), &letters, 8),
        Err(Error::DegreeCap(9, 8))
    ));
}

#[test]
fn weyl_quantized_symbol_has_zero_bracket() {
    let symbol = &(&(&r(0) * &r(1)) * &p(0)) + &(&r(2) * &(&p(2) * &p(1)));
    let f = weyl_quantize(&symbol, 8).unwrap();
    assert!(f.bracket().is_zero());
}

#[test]
fn symmetric_form_reproduces_operator() {
    let op = &(&p(0) * &r(0)) * &(&p(0) * &r(1));
    assert_eq!(to_symmetric_form(&op, 8).unwrap().expand(), op);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn multiply_is_associative(seed in any::<u64>(), dim in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e: Vec<WeylExpr> = (0..3).map(|_| gen::factorization(&mut rng, dim, 2).expand()).collect();
        prop_assert_eq!(&(&e[0] * &e[1]) * &e[2], &e[0] * &(&e[1] * &e[2]));
    }

    #[test]
    fn commutator_is_antisymmetric(seed in any::<u64>(), dim in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = gen::factorization(&mut rng, dim, 3).expand();
        let b = gen::factorization(&mut rng, dim, 3).expand();
        prop_assert!((&a.commutator(&b).unwrap() + &b.commutator(&a).unwrap()).is_zero());
    }

    #[test]
    fn product_rule_is_exact(seed in any::<u64>(), dim in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = gen::factorization(&mut rng, dim, 3);
        let g = gen::factorization(&mut rng, dim, 3);
        prop_assert!(bracket_product_check(&f, &g).unwrap().is_zero());
    }

    #[test]
    fn derivative_plus_bracket_is_invariant(seed in any::<u64>(), dim in 1usize..=2, len in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, letters) = gen::word(&mut rng, dim, len);
        let word = gen::word_factorization(dim, &m, &letters);
        let sym = to_symmetric_form(&word.expand(), 8).unwrap();
        prop_assert!(invariant_derivative_check(&word, &sym).unwrap().is_zero());
    }

    #[test]
    fn full_symmetrization_has_zero_bracket(seed in any::<u64>(), dim in 1usize..=2, len in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, letters) = gen::word(&mut rng, dim, len);
        let f = symmetrize_word(&WeylExpr::constant(m), &letters, 8).unwrap();
        prop_assert!(f.bracket().is_zero());
    }

    #[test]
    fn dim_one_pure_sums_have_zero_bracket(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = OrderedFactorization::new(1);
        f.push(vec![fac(FactorKind::R, gen::pure_expr(&mut rng, 1, FactorKind::R, 3))]).unwrap();
        f.push(vec![fac(FactorKind::P, gen::pure_expr(&mut rng, 1, FactorKind::P, 3))]).unwrap();
        prop_assert!(f.bracket().is_zero());
    }
}

#[test]
fn seeded_suite_is_exact() {
    let rep = berryfw::verify::bracket_check(1, 200, 6).unwrap();
    assert!(rep.all_exact(), "{:?}", rep.failures);
}
