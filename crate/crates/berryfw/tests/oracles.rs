use berryfw::linalg::{dirac_beta, eye, hermiticity_defect, max_abs, pauli};
use berryfw::oracles::{
    blount, erelat, neutrino_canonical, neutrino_covariant, pauli_coefficients, pauli_energy, velocity_modulus,
};
use berryfw::verify::{default_potential, random_point};
use berryfw::ScalarField;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn zero() -> ScalarField {
    ScalarField::Constant { value: 0.0 }
}

#[test]
fn free_dirac_is_beta_e() {
    let p = [0.3, -0.4, 1.2];
    let e = (0.09f64 + 0.16 + 1.44 + 1.0).sqrt();
    for o in [blount(1.0, 1.0, &zero(), &[0.0; 3], &p), erelat(1.0, 1.0, &zero(), &[0.0; 3], &p)] {
        assert!(max_abs(&(o.h0 - dirac_beta().scale(e))) <= 1e-15);
        assert_eq!(max_abs(&o.h1), 0.0);
        assert_eq!(max_abs(&o.h2), 0.0);
    }
}

#[test]
fn dirac_at_rest() {
    let v = default_potential();
    let r = [0.2, 0.1, -0.3];
    let o = blount(2.0, 1.0, &v, &r, &[0.0; 3]);
    let expect = dirac_beta().scale(2.0) + eye(4).scale(v.value(&r));
    assert!(max_abs(&(o.h0 - expect)) <= 1e-15);
    assert!(max_abs(&o.h1) <= 1e-15);
}

#[test]
fn pauli_coefficients_for_unit_mass() {
    assert_eq!(pauli_coefficients(1.0), (0.25, 0.125));
    let (so, d) = pauli_coefficients(2.0);
    assert!((so - 1.0 / 16.0).abs() <= 1e-15 && (d - 1.0 / 32.0).abs() <= 1e-15);
}

#[test]
fn pauli_energy_in_uniform_field() {
    // V = x, P = (0, 0, 1): ∇V × P = (0, −1, 0), no Darwin term
    let v = ScalarField::Linear {
        value: 0.0,
        gradient: [1.0, 0.0, 0.0],
    };
    let o = pauli_energy(1.0, 1.0, &v, &[0.0; 3], &[0.0, 0.0, 1.0]);
    assert!(max_abs(&(o.h1 - pauli(1).scale(-0.25))) <= 1e-15);
    assert_eq!(max_abs(&o.h2), 0.0);
}

#[test]
fn flat_index_has_no_corrections() {
    let f = ScalarField::Constant { value: 1.0 };
    let p = [0.3, 0.4, 1.2];
    for o in [neutrino_covariant(&f, &[0.0; 3], &p), neutrino_canonical(&f, &[0.0; 3], &p)] {
        assert!(max_abs(&(o.h0 - dirac_beta().scale(1.3))) <= 1e-15);
        assert_eq!(max_abs(&o.h1), 0.0);
        assert_eq!(max_abs(&o.h2), 0.0);
    }
}

#[test]
fn momentum_across_the_gradient_has_no_covariant_correction() {
    let f = ScalarField::Linear {
        value: 1.0,
        gradient: [0.2, 0.0, 0.0],
    };
    let o = neutrino_covariant(&f, &[0.0; 3], &[0.0, 0.0, 1.0]);
    assert_eq!(max_abs(&o.h2), 0.0);
}

#[test]
fn velocity_in_uniform_medium() {
    let n = ScalarField::Constant { value: 1.0 };
    assert_eq!(velocity_modulus(&n, &[0.0; 3], &[0.1, 0.2, 0.3], 1.0, 0.1), 1.0);
    let n = ScalarField::Constant { value: 1.5 };
    assert!((velocity_modulus(&n, &[0.0; 3], &[0.0, 0.0, 1.0], -1.0, 0.1) - 1.0 / 1.5).abs() <= 1e-15);
}

#[test]
fn velocity_with_gradient_along_momentum() {
    let n = ScalarField::Linear {
        value: 1.5,
        gradient: [0.0, 0.0, 0.3],
    };
    let v = velocity_modulus(&n, &[0.0; 3], &[0.0, 0.0, 2.0], 1.0, 0.1);
    assert!((v - 1.0 / 1.5).abs() <= 1e-15);
}

#[test]
fn oracles_are_hermitian() {
    let v = default_potential();
    let f = ScalarField::Gaussian {
        amplitude: 0.3,
        center: [0.0; 3],
        width: 1.0,
        offset: 1.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..200 {
        let x = random_point(&mut rng, 0.1, 10.0);
        for m in [
            blount(1.0, 1.0, &v, &x.r, &x.p).total(0.1),
            erelat(1.0, -1.0, &v, &x.r, &x.p).total(0.1),
            pauli_energy(1.0, 1.0, &v, &x.r, &x.p).total(0.1),
            neutrino_covariant(&f, &x.r, &x.p).total(0.1),
            neutrino_canonical(&f, &x.r, &x.p).total(0.1),
        ] {
            assert!(hermiticity_defect(&m) <= 1e-14);
        }
    }
}
