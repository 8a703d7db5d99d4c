//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

use std::time::{Duration, Instant};

use berryfw::diagonalizer::{
    analyze, energy_order2_canonical, energy_order2_covariant, inv_commutator, numerical_connections,
    project, hbar_equation_residual, u_order1, unitarity_defect, Sign,
};
use berryfw::dynamics::{integrate, NeutrinoBand, Rk45Options};
use berryfw::linalg::{comm, max_abs, norm3};
use berryfw::models::ModelKind;
use berryfw::moyal::star_unitarity_defect;
use berryfw::oracles;
use berryfw::verify::{
    bracket_check, default_affine_two_level, loglog_slope, pauli_fit, random_matrix, random_point,
    rel_err, rk4_order,
};
use berryfw::{Method, ModelSpec, PhasePoint, ScalarField, Tolerances, TrajectoryState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ORACLE_REL: f64 = 1e-8;
const C1_RUNTIME: Duration = Duration::from_secs(10);
const PAULI_REL: f64 = 1e-4;
const CURVATURE_REL: f64 = 1e-8;
const HELICITY_DRIFT: f64 = 1e-9;
const SPIN_HALL_ANTISYM: f64 = 1e-9;
const ENERGY_DRIFT: f64 = 1e-8;
const VELOCITY_ABS: f64 = 1e-8;
const SLOPE_TWO_WIDTH: f64 = 0.1;
const FREE_FIELD: f64 = 1e-12;
const CONNECTIONS_FD: f64 = 1e-6;
const ROUNDTRIP: f64 = 1e-12;
const RK4_WIDTH: f64 = 0.2;

struct Outcome {
    pass: bool,
    detail: String,
}

fn gaussian_v() -> ScalarField {
    ScalarField::Gaussian {
        amplitude: 0.5,
        center: [0.1, -0.2, 0.3],
        width: 1.3,
        offset: 0.0,
    }
}

fn index_profiles() -> [ScalarField; 2] {
    [
        ScalarField::Linear {
            value: 1.2,
            gradient: [0.1, -0.05, 0.2],
        },
        ScalarField::Gaussian {
            amplitude: 0.3,
            center: [0.0; 3],
            width: 1.0,
            offset: 1.0,
        },
    ]
}

fn points(seed: u64, n: usize, lo: f64, hi: f64) -> Vec<PhasePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_point(&mut rng, lo, hi)).collect()
}

fn inverse_f(model: &ModelSpec) -> ScalarField {
    match &model.kind {
        ModelKind::Neutrino { f, .. } => f.clone(),
        _ => unreachable!(),
    }
}

fn c1() -> Outcome {
    let tol = Tolerances::default();
    let v = gaussian_v();
    let model = ModelSpec::dirac(1.0, 1.0, v.clone());
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for x in points(101, 100, 0.1, 10.0) {
        let pd = analyze(&model, &x, &tol).expect("analyze");
        let ours = energy_order2_canonical(&pd, 1.0).total();
        worst = worst.max(rel_err(&ours, &oracles::blount(1.0, 1.0, &v, &x.r, &x.p).total(1.0)));
    }
    let dt = start.elapsed();
    Outcome {
        pass: worst <= ORACLE_REL && dt < C1_RUNTIME,
        detail: format!("max rel err {worst:.2e} (tol {ORACLE_REL:.0e}), {:.2} s", dt.as_secs_f64()),
    }
}

fn c2() -> Outcome {
    let tol = Tolerances::default();
    let v = gaussian_v();
    let model = ModelSpec::dirac(1.0, 1.0, v.clone());
    let mut worst: f64 = 0.0;
    for x in points(102, 100, 0.1, 10.0) {
        let pd = analyze(&model, &x, &tol).expect("analyze");
        let ours = energy_order2_covariant(&pd, 1.0).total();
        worst = worst.max(rel_err(&ours, &oracles::erelat(1.0, 1.0, &v, &x.r, &x.p).total(1.0)));
    }
    Outcome {
        pass: worst <= ORACLE_REL,
        detail: format!("max rel err {worst:.2e} (tol {ORACLE_REL:.0e})"),
    }
}

fn c3() -> Outcome {
    let m = 1.0;
    let ((so, darwin), _) = pauli_fit(&Tolerances::default()).expect("fit");
    let so_ref = 1.0 / (4.0 * m * m);
    let darwin_ref = 1.0 / (8.0 * m * m);
    let e_so = ((so - so_ref) / so_ref).abs();
    let e_d = ((darwin - darwin_ref) / darwin_ref).abs();
    Outcome {
        pass: e_so <= PAULI_REL && e_d <= PAULI_REL,
        detail: format!("spin-orbit rel {e_so:.2e}, Darwin rel {e_d:.2e} (tol {PAULI_REL:.0e})"),
    }
}

fn c4() -> Outcome {
    let tol = Tolerances::default();
    let mut worst: f64 = 0.0;
    for (i, n) in index_profiles().into_iter().enumerate() {
        let model = ModelSpec::neutrino(n);
        let f = inverse_f(&model);
        for x in points(104 + i as u64, 100, 0.1, 10.0) {
            let pd = analyze(&model, &x, &tol).expect("analyze");
            let can = energy_order2_canonical(&pd, 1.0).total();
            let cov = energy_order2_covariant(&pd, 1.0).total();
            worst = worst
                .max(rel_err(&can, &oracles::neutrino_canonical(&f, &x.r, &x.p).total(1.0)))
                .max(rel_err(&cov, &oracles::neutrino_covariant(&f, &x.r, &x.p).total(1.0)));
        }
    }
    Outcome {
        pass: worst <= ORACLE_REL,
        detail: format!("max rel err {worst:.2e} over linear and gaussian n (tol {ORACLE_REL:.0e})"),
    }
}

fn c5() -> Outcome {
    let tol = Tolerances::default();
    let model = ModelSpec::neutrino(index_profiles()[0].clone());
    let mut worst: f64 = 0.0;
    for lambda in [1.0, -1.0] {
        let band = NeutrinoBand::new(&model, 0.0, lambda, tol).expect("band");
        for x in points(105, 25, 0.5, 5.0) {
            let th = band.theta(&x.r, &x.p).expect("theta");
            let p3 = norm3(&x.p).powi(3);
            let expect = x.p.map(|pk| -lambda * pk / p3);
            let scale = expect.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for k in 0..3 {
                worst = worst.max((th[k] - expect[k]).abs() / scale);
            }
        }
    }
    Outcome {
        pass: worst <= CURVATURE_REL,
        detail: format!("max rel err {worst:.2e} at 50 (P, λ) samples (tol {CURVATURE_REL:.0e})"),
    }
}

fn c6() -> Outcome {
    let tol = Tolerances::default();
    let hbar = 1e-2;
    let g = 0.05;
    let n = ScalarField::Linear {
        value: 1.0,
        gradient: [g, 0.0, 0.0],
    };
    let model = ModelSpec::neutrino(n);
    let run = |lambda: f64| {
        let band = NeutrinoBand::new(&model, hbar, lambda, tol).expect("band");
        let st = TrajectoryState {
            t: 0.0,
            r: [0.0; 3],
            p: [0.0, 0.0, 1.0],
            lambda,
        };
        integrate(&band, &st, 1e-3, 10_000, Method::Rk4, Rk45Options::default()).expect("integrate")
    };
    let (a, b) = (run(1.0), run(-1.0));
    let drift = a.helicity_drift.max(b.helicity_drift);
    let energy = a.energy_drift.max(b.energy_drift);
    let (ya, yb) = (a.points.last().unwrap().state.r[1], b.points.last().unwrap().state.r[1]);
    let antisym = (ya + yb).abs();
    // |ṙ| = F(1 + ℏ²λ²/P²(|∇ln n|² − (P̂·∇ln n)²))^{1/2}
    let mut vel: f64 = 0.0;
    for tr in [&a, &b] {
        for p in tr.points.iter().step_by(500) {
            let nv = 1.0 + g * p.state.r[0];
            let gl = [g / nv, 0.0, 0.0];
            let pp = p.state.p;
            let p2 = pp.iter().map(|x| x * x).sum::<f64>();
            let pg = pp[0] * gl[0];
            let tr2 = gl[0] * gl[0] - pg * pg / p2;
            let expect = (1.0 / nv) * (1.0 + hbar * hbar * p.state.lambda.powi(2) / p2 * tr2).sqrt();
            vel = vel.max((p.speed - expect).abs());
        }
    }
    let pass = drift <= HELICITY_DRIFT
        && antisym <= SPIN_HALL_ANTISYM
        && energy <= ENERGY_DRIFT
        && vel <= VELOCITY_ABS
        && ya.abs() > 1e3 * SPIN_HALL_ANTISYM;
    Outcome {
        pass,
        detail: format!(
            "helicity drift {drift:.2e}, spin-Hall y(+1)={ya:.3e} sum {antisym:.2e}, energy drift {energy:.2e}, |v| err {vel:.2e}"
        ),
    }
}

fn c7() -> Outcome {
    let start = Instant::now();
    let rep = bracket_check(1, 200, 6).expect("bracket check");
    Outcome {
        pass: rep.product_rule_exact == 200 && rep.invariance_exact == 200,
        detail: format!(
            "product rule {}/200, invariance {}/200 exact, dims {:?}, {:.1} s",
            rep.product_rule_exact,
            rep.invariance_exact,
            rep.dims,
            start.elapsed().as_secs_f64()
        ),
    }
}

fn c8() -> Outcome {
    let tol = Tolerances::default();
    let hs = [1e-1, 1e-2, 1e-3];
    let x = PhasePoint::new([0.3, 0.2, -0.4], [0.5, -0.3, 0.8]);
    let dirac = ModelSpec::dirac(1.0, 1.0, gaussian_v());
    let pd = analyze(&dirac, &x, &tol).expect("analyze");
    let u1 = u_order1(&pd, &tol).expect("u1");
    let plain: Vec<f64> = hs.iter().map(|&h| unitarity_defect(&u1, h)).collect();
    let star: Vec<f64> = hs
        .iter()
        .map(|&h| star_unitarity_defect(&default_affine_two_level(), &x, h, &tol).expect("star"))
        .collect();
    let resid: Vec<f64> = hs
        .iter()
        .map(|&h| hbar_equation_residual(&dirac, &x, h, &tol).expect("residual"))
        .collect();
    let s = [loglog_slope(&hs, &plain), loglog_slope(&hs, &star), loglog_slope(&hs, &resid)];
    Outcome {
        pass: s.iter().all(|v| (v - 2.0).abs() <= SLOPE_TWO_WIDTH),
        detail: format!(
            "slopes: unitarity {:.3}, star unitarity {:.3}, ℏ-equation residual {:.3}",
            s[0], s[1], s[2]
        ),
    }
}

fn c9() -> Outcome {
    let tol = Tolerances::default();
    let models = [
        ModelSpec::dirac(1.0, 1.0, ScalarField::Constant { value: 0.0 }),
        ModelSpec::neutrino(ScalarField::Constant { value: 1.0 }),
    ];
    let mut worst: f64 = 0.0;
    for m in &models {
        for x in points(109, 50, 0.1, 10.0) {
            let pd = analyze(m, &x, &tol).expect("analyze");
            let can = energy_order2_canonical(&pd, 1.0);
            let cov = energy_order2_covariant(&pd, 1.0);
            for c in [&can.first, &can.second, &cov.first, &cov.second] {
                worst = worst.max(max_abs(c));
            }
        }
    }
    Outcome {
        pass: worst <= FREE_FIELD,
        detail: format!("max |correction| {worst:.2e} (tol {FREE_FIELD:.0e})"),
    }
}

fn c10() -> Outcome {
    let tol = Tolerances::default();
    let dirac = ModelSpec::dirac(1.0, 1.0, gaussian_v());
    let mut conn: f64 = 0.0;
    let mut round: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    for x in points(110, 10, 0.1, 10.0) {
        let analytic = dirac.analytic_connections(&x).unwrap().expect("connections");
        let fd = numerical_connections(&dirac, &x, 0.0, &tol).expect("fd").six();
        for k in 0..6 {
            conn = conn.max(max_abs(&(&analytic[k] - &fd[k])));
        }
        let pd = analyze(&dirac, &x, &tol).expect("analyze");
        let g = &pd.frame.groups;
        let m = project(&random_matrix(&mut rng, 4), g, Sign::Minus);
        let v = inv_commutator(&m, &pd.frame.eps0, g, pd.frame.h_norm, tol.gap).expect("inverse");
        round = round.max(max_abs(&(comm(&v, &pd.eps0) - &m)));
    }
    let order = rk4_order(&tol).expect("rk4");
    Outcome {
        pass: conn <= CONNECTIONS_FD && round <= ROUNDTRIP && (order - 4.0).abs() <= RK4_WIDTH,
        detail: format!("connections {conn:.2e}, round-trip {round:.2e}, RK4 order {order:.3}"),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("Dirac canonical energy vs closed form", c1),
        ("Dirac covariant energy vs closed form", c2),
        ("Pauli limit coefficients", c3),
        ("massless energy vs closed form", c4),
        ("massless curvature", c5),
        ("trajectory physics", c6),
        ("symbolic bracket identities", c7),
        ("ℏ² residual scaling", c8),
        ("free-field corrections vanish", c9),
        ("numerical plumbing", c10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
