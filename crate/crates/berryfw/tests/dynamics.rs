use berryfw::dynamics::{integrate, NeutrinoBand, Rk45Options};
use berryfw::linalg::norm3;
use berryfw::verify::{linear_ray_x, rk4_order_sweep};
use berryfw::{Error, Method, ModelSpec, ScalarField, Tolerances, TrajectoryState};

fn state(r: [f64; 3], p: [f64; 3], lambda: f64) -> TrajectoryState {
    TrajectoryState { t: 0.0, r, p, lambda }
}

fn flat() -> ModelSpec {
    ModelSpec::neutrino(ScalarField::Constant { value: 1.0 })
}

#[test]
fn flat_space_rays_are_straight() {
    let m = flat();
    let p0 = [0.3, -0.4, 1.2];
    for lambda in [1.0, -1.0] {
        let band = NeutrinoBand::new(&m, 1e-2, lambda, Tolerances::default()).unwrap();
        let st = state([0.1, 0.2, 0.3], p0, lambda);
        let tr = integrate(&band, &st, 1e-2, 500, Method::Rk4, Rk45Options::default()).unwrap();
        let pn = norm3(&p0);
        for pt in &tr.points {
            for k in 0..3 {
                assert!((pt.state.r[k] - (st.r[k] + p0[k] / pn * pt.state.t)).abs() <= 1e-10);
                assert_eq!(pt.state.p[k], p0[k]);
            }
            assert!((pt.speed - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn opposite_helicities_drift_apart_symmetrically() {
    let m = ModelSpec::neutrino(ScalarField::Linear {
        value: 1.0,
        gradient: [0.05, 0.0, 0.0],
    });
    let run = |lambda: f64| {
        let band = NeutrinoBand::new(&m, 1e-2, lambda, Tolerances::default()).unwrap();
        integrate(&band, &state([0.0; 3], [0.0, 0.0, 1.0], lambda), 1e-2, 500, Method::Rk4, Rk45Options::default())
            .unwrap()
    };
    let (a, b) = (run(1.0), run(-1.0));
    let (ya, yb) = (a.points.last().unwrap().state.r[1], b.points.last().unwrap().state.r[1]);
    assert!(ya.abs() > 1e-6, "no transverse drift: {ya:e}");
    assert!((ya + yb).abs() <= 1e-9, "{ya:e} {yb:e}");
    assert!(a.helicity_drift <= 1e-9 && b.helicity_drift <= 1e-9);
    assert!(a.energy_drift <= 1e-8 && b.energy_drift <= 1e-8);
}

#[test]
fn classical_ray_follows_closed_form() {
    let (f0, g) = (1.0, 0.3);
    let m = ModelSpec::neutrino(ScalarField::Reciprocal {
        of: Box::new(ScalarField::Linear {
            value: f0,
            gradient: [g, 0.0, 0.0],
        }),
    });
    let band = NeutrinoBand::new(&m, 0.0, 1.0, Tolerances::default()).unwrap();
    let tr = integrate(&band, &state([0.0; 3], [0.5, 0.0, 1.0], 1.0), 1e-2, 200, Method::Rk4, Rk45Options::default())
        .unwrap();
    for pt in tr.points.iter().step_by(20) {
        assert!((pt.state.r[0] - linear_ray_x(f0, g, 0.5, 1.0, pt.state.t)).abs() <= 1e-8);
    }
}

#[test]
fn rk4_is_fourth_order() {
    let o = rk4_order_sweep(&Tolerances::default(), &[0.05, 0.025, 0.0125]).unwrap();
    assert!((o - 4.0).abs() <= 0.2, "{o}");
}

#[test]
fn rk45_agrees_with_rk4() {
    let m = ModelSpec::neutrino(ScalarField::Gaussian {
        amplitude: 0.3,
        center: [0.0; 3],
        width: 1.0,
        offset: 1.0,
    });
    let band = NeutrinoBand::new(&m, 1e-2, 1.0, Tolerances::default()).unwrap();
    let st = state([-1.0, 0.2, 0.0], [1.0, 0.0, 0.2], 1.0);
    let a = integrate(&band, &st, 1e-2, 200, Method::Rk4, Rk45Options::default()).unwrap();
    let b = integrate(&band, &st, 1e-2, 200, Method::Rk45, Rk45Options::default()).unwrap();
    let (la, lb) = (a.points.last().unwrap(), b.points.last().unwrap());
    assert!((la.state.t - lb.state.t).abs() <= 1e-12);
    for k in 0..3 {
        assert!((la.state.r[k] - lb.state.r[k]).abs() <= 1e-7);
        assert!((la.state.p[k] - lb.state.p[k]).abs() <= 1e-7);
    }
}

#[test]
fn nonpositive_step_is_rejected() {
    let m = flat();
    let band = NeutrinoBand::new(&m, 1e-2, 1.0, Tolerances::default()).unwrap();
    let st = state([0.0; 3], [0.0, 0.0, 1.0], 1.0);
    for dt in [0.0, -1e-3, f64::NAN] {
        let r = integrate(&band, &st, dt, 10, Method::Rk4, Rk45Options::default());
        assert!(matches!(r, Err(Error::Config(_))));
    }
}

#[test]
fn massive_models_are_unsupported() {
    let m = ModelSpec::dirac(1.0, 1.0, ScalarField::Constant { value: 0.0 });
    assert!(matches!(
        NeutrinoBand::new(&m, 1e-2, 1.0, Tolerances::default()),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn helicity_must_be_unit() {
    let m = flat();
    assert!(matches!(
        NeutrinoBand::new(&m, 1e-2, 0.5, Tolerances::default()),
        Err(Error::Config(_))
    ));
}

#[test]
fn berry_curvature_is_odd_in_helicity() {
    let m = ModelSpec::neutrino(ScalarField::Linear {
        value: 1.2,
        gradient: [0.1, -0.05, 0.2],
    });
    let (r, p) = ([0.1, 0.2, -0.3], [0.4, -0.2, 0.9]);
    let plus = NeutrinoBand::new(&m, 0.0, 1.0, Tolerances::default()).unwrap().theta(&r, &p).unwrap();
    let minus = NeutrinoBand::new(&m, 0.0, -1.0, Tolerances::default()).unwrap().theta(&r, &p).unwrap();
    for k in 0..3 {
        assert!((plus[k] + minus[k]).abs() <= 1e-9);
        // along P, monopole-like
        let cross = plus[(k + 1) % 3] * p[(k + 2) % 3] - plus[(k + 2) % 3] * p[(k + 1) % 3];
        assert!(cross.abs() <= 1e-8);
    }
}
