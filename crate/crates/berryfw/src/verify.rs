//! Property and oracle suites behind `berryfw verify` and `berryfw bracket-check`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::covariant::{curvatures, frak0_field};
use crate::diagonalizer::{
    analyze, energy_order2_canonical, energy_order2_covariant, inv_commutator, numerical_connections,
    project, hbar_equation_residual, u_order1, unitarity_defect, Sign, Tolerances,
};
use crate::dynamics::{integrate, Method, NeutrinoBand, Rk45Options, TrajectoryState};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg::{antiherm, c, hermiticity_defect, max_abs, pauli, CMat};
use crate::models::{ModelKind, ModelSpec, PhasePoint, TwoLevelForm};
use crate::moyal::star_unitarity_defect;
use crate::oracles;
use crate::weyl::{self, gen, OrderedFactorization, Var};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    fn le(suite: &str, name: &str, value: f64, tolerance: f64) -> Self {
        Check {
            suite: suite.into(),
            name: name.into(),
            value,
            tolerance,
            pass: value.is_finite() && value <= tolerance,
            detail: None,
        }
    }

    fn failed(suite: &str, name: &str, err: &Error) -> Self {
        Check {
            suite: suite.into(),
            name: name.into(),
            value: f64::NAN,
            tolerance: 0.0,
            pass: false,
            detail: Some(err.to_string()),
        }
    }

    fn with_detail(mut self, d: String) -> Self {
        self.detail = Some(d);
        self
    }
}

/// Every threshold used by the suites.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyTolerances {
    pub oracle: f64,
    pub hermiticity: f64,
    pub frame: f64,
    pub field_fd: f64,
    pub connections_fd: f64,
    pub roundtrip: f64,
    pub gauge: f64,
    pub free_field: f64,
    pub slope: f64,
    pub rk4_slope: f64,
    pub curvature: f64,
    pub helicity: f64,
    pub antisymmetry: f64,
    pub energy: f64,
    pub velocity: f64,
    pub straight_line: f64,
    pub pauli: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        VerifyTolerances {
            oracle: 1e-8,
            hermiticity: 1e-13,
            frame: 1e-10,
            field_fd: 1e-6,
            connections_fd: 1e-6,
            roundtrip: 1e-12,
            gauge: 1e-12,
            free_field: 1e-12,
            slope: 0.1,
            rk4_slope: 0.2,
            curvature: 1e-8,
            helicity: 1e-9,
            antisymmetry: 1e-9,
            energy: 1e-8,
            velocity: 1e-8,
            straight_line: 1e-10,
            pauli: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Bracket,
    Models,
    Diagonalizer,
    Dynamics,
    Oracles,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Bracket,
        Suite::Models,
        Suite::Diagonalizer,
        Suite::Dynamics,
        Suite::Oracles,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Bracket => "bracket",
            Suite::Models => "models",
            Suite::Diagonalizer => "diagonalizer",
            Suite::Dynamics => "dynamics",
            Suite::Oracles => "oracles",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random cases per symbolic identity.
    pub bracket_cases: usize,
    /// Random phase points per oracle comparison.
    pub points: usize,
    pub tolerances: VerifyTolerances,
    pub numerics: Tolerances,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 1,
            bracket_cases: 200,
            points: 20,
            tolerances: VerifyTolerances::default(),
            numerics: Tolerances::default(),
        }
    }
}

/// Results of the symbolic identities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    pub seed: u64,
    pub cases: usize,
    pub max_degree: usize,
    pub dims: Vec<usize>,
    pub product_rule_exact: usize,
    pub invariance_exact: usize,
    pub symmetrized_zero_exact: usize,
    pub failures: Vec<String>,
}

impl BracketReport {
    pub fn all_exact(&self) -> bool {
        self.product_rule_exact == self.cases
            && self.invariance_exact == self.cases
            && self.symmetrized_zero_exact == self.cases
    }
}

/// Random instances of the product rule, the ∂_ℏ+⟨⟩ invariance, and the vanishing bracket
/// of fully symmetrized words. Dimensions alternate between 1 and 2.
pub fn bracket_check(seed: u64, cases: usize, max_degree: usize) -> Result<BracketReport> {
    if max_degree > weyl::DEFAULT_DEGREE_CAP {
        return Err(Error::DegreeCap(max_degree, weyl::DEFAULT_DEGREE_CAP));
    }
    if max_degree < 2 {
        return Err(Error::Config("max_degree must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = BracketReport {
        seed,
        cases,
        max_degree,
        dims: vec![1, 2],
        product_rule_exact: 0,
        invariance_exact: 0,
        symmetrized_zero_exact: 0,
        failures: Vec::new(),
    };
    let half = (max_degree / 2) as u32;
    for case in 0..cases {
        let dim = 1 + case % 2;
        let f = gen::factorization(&mut rng, dim, half);
        let g = gen::factorization(&mut rng, dim, half);
        if weyl::bracket_product_check(&f, &g)?.is_zero() {
            rep.product_rule_exact += 1;
        } else {
            rep.failures.push(format!("product rule case {case}"));
        }

        let len = rng.gen_range(2..=max_degree);
        let (m, letters) = gen::word(&mut rng, dim, len);
        let word = gen::word_factorization(dim, &m, &letters);
        let op = word.expand();
        let other = match case % 3 {
            0 => weyl::normal_form(&op),
            1 => weyl::anti_normal_form(&op),
            _ => weyl::to_symmetric_form(&op, weyl::DEFAULT_DEGREE_CAP)?,
        };
        if weyl::invariant_derivative_check(&word, &other)?.is_zero() {
            rep.invariance_exact += 1;
        } else {
            rep.failures.push(format!("invariance case {case}"));
        }

        let sym_len = rng.gen_range(2..=max_degree.min(5));
        let (m, letters) = gen::word(&mut rng, dim, sym_len);
        let coeff = weyl::WeylExpr::constant(m);
        let sym = weyl::symmetrize_word(&coeff, &letters, weyl::DEFAULT_DEGREE_CAP)?;
        if sym.bracket().is_zero() {
            rep.symmetrized_zero_exact += 1;
        } else {
            rep.failures.push(format!("symmetrized word case {case}"));
        }
    }
    Ok(rep)
}

/// R in [−1,1]³, P with a random direction and |P| log-uniform in [p_min, p_max].
pub fn random_point<R: Rng>(rng: &mut R, p_min: f64, p_max: f64) -> PhasePoint {
    let r = [0; 3].map(|_| rng.gen_range(-1.0..1.0));
    let dir = loop {
        let v = [0; 3].map(|_| rng.gen_range(-1.0..1.0f64));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            break v.map(|x| x / n);
        }
    };
    let mag = (p_min.ln() + rng.gen_range(0.0..1.0) * (p_max.ln() - p_min.ln())).exp();
    PhasePoint::new(r, dir.map(|x| x * mag))
}

pub fn default_potential() -> ScalarField {
    ScalarField::Gaussian {
        amplitude: 0.5,
        center: [0.1, -0.2, 0.3],
        width: 1.3,
        offset: 0.0,
    }
}

/// The two index profiles the neutrino checks run on.
pub fn default_index_profiles() -> Vec<ScalarField> {
    vec![
        ScalarField::Linear {
            value: 1.2,
            gradient: [0.1, -0.05, 0.2],
        },
        ScalarField::Gaussian {
            amplitude: 0.3,
            center: [0.0, 0.0, 0.0],
            width: 1.0,
            offset: 1.0,
        },
    ]
}

pub fn default_affine_two_level() -> ModelSpec {
    ModelSpec::two_level(
        TwoLevelForm::Affine {
            h: [
                [0.3, 1.0, 0.2, 0.0, 0.1, 0.0, 0.5],
                [0.1, 0.0, 0.7, 0.1, 0.3, 0.4, 0.0],
                [1.0, 0.2, 0.0, 0.5, 0.0, 0.1, 0.6],
            ],
        },
        true,
    )
}

/// Max-norm error relative to the oracle's max-norm.
pub fn rel_err(a: &CMat, b: &CMat) -> f64 {
    max_abs(&(a - b)) / max_abs(b).max(f64::MIN_POSITIVE)
}

/// Least-squares slope of log(y) against log(x).
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Least-squares fit y ≈ c₀ + c₁x; returns (c₀, c₁).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let c1 = sxy / sxx;
    (my - c1 * mx, c1)
}

fn worst<I: IntoIterator<Item = Result<f64>>>(it: I) -> Result<f64> {
    let mut w: f64 = 0.0;
    for v in it {
        w = w.max(v?);
    }
    Ok(w)
}

fn record(out: &mut Vec<Check>, suite: &str, name: &str, v: Result<f64>, tol: f64) {
    out.push(match v {
        Ok(v) => Check::le(suite, name, v, tol),
        Err(e) => Check::failed(suite, name, &e),
    });
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Vec<Check> {
    match suite {
        Suite::Bracket => suite_bracket(opts),
        Suite::Models => suite_models(opts),
        Suite::Diagonalizer => suite_diagonalizer(opts),
        Suite::Dynamics => suite_dynamics(opts),
        Suite::Oracles => suite_oracles(opts),
    }
}

fn suite_bracket(opts: &VerifyOptions) -> Vec<Check> {
    let s = "bracket";
    match bracket_check(opts.seed, opts.bracket_cases, 6) {
        Ok(rep) => {
            let miss = |k: usize| (rep.cases - k) as f64;
            vec![
                Check::le(s, "product_rule_failures", miss(rep.product_rule_exact), 0.0),
                Check::le(s, "invariance_failures", miss(rep.invariance_exact), 0.0),
                Check::le(s, "symmetrized_word_failures", miss(rep.symmetrized_zero_exact), 0.0),
            ]
        }
        Err(e) => vec![Check::failed(s, "bracket_check", &e)],
    }
}

fn builtin_models() -> Vec<ModelSpec> {
    let mut v = vec![ModelSpec::dirac(1.0, 1.0, default_potential())];
    v.extend(default_index_profiles().into_iter().map(ModelSpec::neutrino));
    v.push(default_affine_two_level());
    v.push(ModelSpec::two_level(
        TwoLevelForm::Squared {
            a: [1.0, 0.3, 0.0, 0.0, 0.0, 0.2, 0.0],
            b: [0.5, 0.0, 0.1, 0.0, 0.4, 0.0, 0.0],
        },
        false,
    ));
    v
}

fn suite_models(opts: &VerifyOptions) -> Vec<Check> {
    let s = "models";
    let t = &opts.tolerances;
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for (mi, model) in builtin_models().into_iter().enumerate() {
        let pts: Vec<PhasePoint> = (0..1000).map(|_| random_point(&mut rng, 0.1, 10.0)).collect();
        let herm = worst(pts.iter().map(|x| {
            let h = model.evaluate_h(x)?;
            Ok(hermiticity_defect(&h) / max_abs(&h).max(f64::MIN_POSITIVE))
        }));
        record(&mut out, s, &format!("{}{mi}.hermiticity", model.name), herm, t.hermiticity);
        if model.flags.has_analytic_frame {
            let frame = worst(pts.iter().take(50).map(|x| {
                let (_, eps) = model.analytic_frame(x).expect("flag")?;
                let (num, _) = crate::linalg::eigh(&model.evaluate_h(x)?);
                let scale = eps.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
                Ok(eps.iter().zip(&num).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale)
            }));
            record(&mut out, s, &format!("{}{mi}.frame_eigenvalues", model.name), frame, t.frame);
        }
    }
    let fields = {
        let mut f = vec![default_potential()];
        f.extend(default_index_profiles());
        f.push(ScalarField::Coulomb {
            q: 1.0,
            a: 0.5,
            center: [0.0; 3],
        });
        f.push(ScalarField::Reciprocal {
            of: Box::new(default_index_profiles()[1].clone()),
        });
        f
    };
    for (i, f) in fields.iter().enumerate() {
        let e = worst((0..100).map(|_| {
            let x = random_point(&mut rng, 0.1, 1.0);
            Ok(gradient_fd_error(f, &x.r))
        }));
        record(&mut out, s, &format!("field{i}.gradient_vs_fd"), e, t.field_fd);
    }
    out
}

fn suite_diagonalizer(opts: &VerifyOptions) -> Vec<Check> {
    let s = "diagonalizer";
    let t = &opts.tolerances;
    let tol = &opts.numerics;
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1));
    let v = default_potential();
    let dirac = ModelSpec::dirac(1.0, 1.0, v.clone());
    let pts: Vec<PhasePoint> = (0..opts.points).map(|_| random_point(&mut rng, 0.1, 10.0)).collect();

    let blount = worst(pts.iter().map(|x| {
        let pd = analyze(&dirac, x, tol)?;
        let o = oracles::blount(1.0, 1.0, &v, &x.r, &x.p);
        Ok(rel_err(&energy_order2_canonical(&pd, 1.0).total(), &o.total(1.0)))
    }));
    record(&mut out, s, "dirac_canonical_vs_blount", blount, t.oracle);
    let erelat = worst(pts.iter().map(|x| {
        let pd = analyze(&dirac, x, tol)?;
        let o = oracles::erelat(1.0, 1.0, &v, &x.r, &x.p);
        Ok(rel_err(&energy_order2_covariant(&pd, 1.0).total(), &o.total(1.0)))
    }));
    record(&mut out, s, "dirac_covariant_vs_erelat", erelat, t.oracle);

    for (i, n) in default_index_profiles().into_iter().enumerate() {
        let model = ModelSpec::neutrino(n);
        let f = match &model.kind {
            ModelKind::Neutrino { f, .. } => f.clone(),
            _ => unreachable!(),
        };
        let can = worst(pts.iter().map(|x| {
            let pd = analyze(&model, x, tol)?;
            Ok(rel_err(
                &energy_order2_canonical(&pd, 1.0).total(),
                &oracles::neutrino_canonical(&f, &x.r, &x.p).total(1.0),
            ))
        }));
        record(&mut out, s, &format!("neutrino{i}_canonical"), can, t.oracle);
        let cov = worst(pts.iter().map(|x| {
            let pd = analyze(&model, x, tol)?;
            Ok(rel_err(
                &energy_order2_covariant(&pd, 1.0).total(),
                &oracles::neutrino_covariant(&f, &x.r, &x.p).total(1.0),
            ))
        }));
        record(&mut out, s, &format!("neutrino{i}_covariant"), cov, t.oracle);
    }

    let conn = worst(pts.iter().take(5).map(|x| {
        let analytic = dirac.analytic_connections(x).expect("flag")?;
        let numeric = numerical_connections(&dirac, x, 0.0, tol)?;
        let num = numeric.six();
        Ok((0..6).map(|k| max_abs(&(&analytic[k] - &num[k]))).fold(0.0, f64::max))
    }));
    record(&mut out, s, "analytic_vs_fd_connections", conn, t.connections_fd);

    let round = worst(pts.iter().take(5).map(|x| {
        let pd = analyze(&dirac, x, tol)?;
        let g = &pd.frame.groups;
        let m = project(&random_matrix(&mut ChaCha8Rng::seed_from_u64(7), 4), g, Sign::Minus);
        let v = inv_commutator(&m, &pd.frame.eps0, g, pd.frame.h_norm, tol.gap)?;
        let back = crate::linalg::comm(&v, &pd.eps0);
        Ok(max_abs(&(back - &m)))
    }));
    record(&mut out, s, "inv_commutator_roundtrip", round, t.roundtrip);

    let gauge = worst(pts.iter().take(5).map(|x| {
        let pd = analyze(&dirac, x, tol)?;
        let u1 = u_order1(&pd, tol)?;
        Ok(max_abs(&project(&antiherm(&u1.g), &pd.frame.groups, Sign::Plus)))
    }));
    record(&mut out, s, "gauge_condition", gauge, t.gauge);

    let hs = [1e-1, 1e-2, 1e-3];
    let x0 = PhasePoint::new([0.3, 0.2, -0.4], [0.5, -0.3, 0.8]);
    let plain = (|| -> Result<f64> {
        let pd = analyze(&dirac, &x0, tol)?;
        let u1 = u_order1(&pd, tol)?;
        let d: Vec<f64> = hs.iter().map(|&h| unitarity_defect(&u1, h)).collect();
        Ok((loglog_slope(&hs, &d) - 2.0).abs())
    })();
    record(&mut out, s, "unitarity_slope_dirac", plain, t.slope);
    let star = (|| -> Result<f64> {
        let m = default_affine_two_level();
        let d: Vec<f64> = hs
            .iter()
            .map(|&h| star_unitarity_defect(&m, &x0, h, tol))
            .collect::<Result<_>>()?;
        Ok((loglog_slope(&hs, &d) - 2.0).abs())
    })();
    record(&mut out, s, "star_unitarity_slope_two_level", star, t.slope);
    let s4 = (|| -> Result<f64> {
        let d: Vec<f64> = hs
            .iter()
            .map(|&h| hbar_equation_residual(&dirac, &x0, h, tol))
            .collect::<Result<_>>()?;
        Ok((loglog_slope(&hs, &d) - 2.0).abs())
    })();
    record(&mut out, s, "hbar_equation_residual_slope", s4, t.slope);

    let free_models = [
        ModelSpec::dirac(1.0, 1.0, ScalarField::Constant { value: 0.0 }),
        ModelSpec::neutrino(ScalarField::Constant { value: 1.0 }),
    ];
    let free = worst(free_models.iter().flat_map(|m| {
        pts.iter().take(5).map(move |x| {
            let pd = analyze(m, x, tol)?;
            let can = energy_order2_canonical(&pd, 1.0);
            let cov = energy_order2_covariant(&pd, 1.0);
            Ok([&can.first, &can.second, &cov.first, &cov.second]
                .iter()
                .map(|m| max_abs(m))
                .fold(0.0, f64::max))
        })
    }));
    record(&mut out, s, "free_field_corrections", free, t.free_field);
    out
}

pub fn random_matrix<R: Rng>(rng: &mut R, n: usize) -> CMat {
    CMat::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn suite_dynamics(opts: &VerifyOptions) -> Vec<Check> {
    let s = "dynamics";
    let t = &opts.tolerances;
    let tol = opts.numerics;
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(2));
    let n = default_index_profiles()[0].clone();
    let model = ModelSpec::neutrino(n.clone());

    let curv = worst((0..10).map(|_| {
        let x = random_point(&mut rng, 0.5, 5.0);
        let band = NeutrinoBand::new(&model, 0.0, 1.0, tol)?;
        let th = band.theta(&x.r, &x.p)?;
        let o = oracles::neutrino_curvature(&x.p, 1.0);
        let scale = o.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok((0..3).map(|k| (th[k] - o[k]).abs()).fold(0.0, f64::max) / scale)
    }));
    record(&mut out, s, "neutrino_curvature_vs_closed_form", curv, t.curvature);

    let anti = (|| -> Result<f64> {
        let x = random_point(&mut rng, 0.5, 5.0);
        let field = frak0_field(&model, &tol, None);
        let cs = curvatures(&field, &x, 0.0, &tol)?;
        let mut w: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                w = w.max(max_abs(&(&cs.rr[i][j] + &cs.rr[j][i])));
                w = w.max(max_abs(&(&cs.pp[i][j] + &cs.pp[j][i])));
            }
        }
        Ok(w)
    })();
    record(&mut out, s, "curvature_antisymmetry", anti, 0.0);

    let hbar = 1e-2;
    let grad_x = ScalarField::Linear {
        value: 1.0,
        gradient: [0.05, 0.0, 0.0],
    };
    let gm = ModelSpec::neutrino(grad_x.clone());
    let run = |lambda: f64| -> Result<crate::dynamics::Trajectory> {
        let band = NeutrinoBand::new(&gm, hbar, lambda, tol)?;
        let st = TrajectoryState {
            t: 0.0,
            r: [0.0; 3],
            p: [0.0, 0.0, 1.0],
            lambda,
        };
        integrate(&band, &st, 1e-2, 1000, Method::Rk4, Rk45Options::default())
    };
    match (run(1.0), run(-1.0)) {
        (Ok(a), Ok(b)) => {
            let hel = a.helicity_drift.max(b.helicity_drift);
            out.push(Check::le(s, "helicity_drift", hel, t.helicity));
            let ea = a.energy_drift.max(b.energy_drift);
            out.push(Check::le(s, "energy_conservation", ea, t.energy));
            let (pa, pb) = (a.points.last().unwrap(), b.points.last().unwrap());
            let anti = (pa.state.r[1] + pb.state.r[1]).abs();
            out.push(
                Check::le(s, "helicity_transverse_antisymmetry", anti, t.antisymmetry)
                    .with_detail(format!("y offset {:.3e}", pa.state.r[1])),
            );
            let vel = a
                .points
                .iter()
                .step_by(100)
                .map(|p| {
                    (p.speed - oracles::velocity_modulus(&grad_x, &p.state.r, &p.state.p, 1.0, hbar)).abs()
                })
                .fold(0.0, f64::max);
            out.push(Check::le(s, "velocity_modulus", vel, t.velocity));
        }
        (Err(e), _) | (_, Err(e)) => out.push(Check::failed(s, "trajectory", &e)),
    }

    let flat = (|| -> Result<f64> {
        let fm = ModelSpec::neutrino(ScalarField::Constant { value: 1.0 });
        let band = NeutrinoBand::new(&fm, hbar, 1.0, tol)?;
        let p0 = [0.3, -0.4, 1.2];
        let st = TrajectoryState {
            t: 0.0,
            r: [0.1, 0.2, 0.3],
            p: p0,
            lambda: 1.0,
        };
        let tr = integrate(&band, &st, 1e-3, 10_000, Method::Rk4, Rk45Options::default())?;
        let last = tr.points.last().unwrap();
        let pn = crate::linalg::norm3(&p0);
        Ok((0..3)
            .map(|k| (last.state.r[k] - (st.r[k] + p0[k] / pn * last.state.t)).abs())
            .fold(0.0, f64::max))
    })();
    record(&mut out, s, "flat_space_straight_line", flat, t.straight_line);

    let order = rk4_order(&tol).map(|o| (o - 4.0).abs());
    record(&mut out, s, "rk4_convergence_order", order, t.rk4_slope);
    out
}

/// Closed-form ray for F(x) = f₀ + gx at ℏ = 0, P₀ = (P_x0, 0, P_z):
/// P_x = P_z sinh(s₀ − gt), x = (E/(P_z cosh(s₀ − gt)) − f₀)/g.
pub fn linear_ray_x(f0: f64, g: f64, px0: f64, pz: f64, t: f64) -> f64 {
    let s0 = (px0 / pz).asinh();
    let e = f0 * (px0 * px0 + pz * pz).sqrt();
    (e / (pz * (s0 - g * t).cosh()) - f0) / g
}

/// Global RK4 order on the linear-F ray, from step sizes 0.05, 0.025, 0.0125 to t = 2.
pub fn rk4_order(tol: &Tolerances) -> Result<f64> {
    rk4_order_sweep(tol, &[0.05, 0.025, 0.0125])
}

pub fn rk4_order_sweep(tol: &Tolerances, dts: &[f64]) -> Result<f64> {
    let (f0, g) = (1.0, 0.3);
    let n = ScalarField::Reciprocal {
        of: Box::new(ScalarField::Linear {
            value: f0,
            gradient: [g, 0.0, 0.0],
        }),
    };
    let model = ModelSpec::neutrino(n);
    let band = NeutrinoBand::new(&model, 0.0, 1.0, *tol)?;
    let (px0, pz) = (0.5, 1.0);
    let st = TrajectoryState {
        t: 0.0,
        r: [0.0; 3],
        p: [px0, 0.0, pz],
        lambda: 1.0,
    };
    let errs: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            let steps = (2.0 / dt).round() as usize;
            let tr = integrate(&band, &st, dt, steps, Method::Rk4, Rk45Options::default())?;
            let last = tr.points.last().unwrap();
            Ok((last.state.r[0] - linear_ray_x(f0, g, px0, pz, last.state.t)).abs())
        })
        .collect::<Result<_>>()?;
    Ok(loglog_slope(dts, &errs))
}

/// Spin-orbit and Darwin coefficients fitted from the pipeline at small |P|/m, in
/// units of e. Returns ((so, darwin) fitted, (so, darwin) from the two-component oracle).
pub fn pauli_fit(tol: &Tolerances) -> Result<((f64, f64), (f64, f64))> {
    let m = 1.0;
    let e = 1.0;
    let r = [0.4, -0.3, 0.2];
    let dir = {
        let d = [0.3, 0.5, 0.8];
        let n = crate::linalg::norm3(&d);
        d.map(|x| x / n)
    };
    let field = |amp: f64| ScalarField::Gaussian {
        amplitude: amp,
        center: [0.0; 3],
        width: 1.0,
        offset: 0.0,
    };
    let v0 = 0.3;
    let scales: Vec<f64> = (0..8).map(|i| 1e-3 * 10f64.powf(i as f64 / 7.0)).collect();
    let mut p2 = Vec::new();
    let mut so = Vec::new();
    let mut darwin = Vec::new();
    let sig = [pauli(0), pauli(1), pauli(2)];
    for &s in &scales {
        let p = dir.map(|x| x * s * m);
        let x = PhasePoint::new(r, p);
        let mut blocks = Vec::new();
        for amp in [v0, -v0] {
            let model = ModelSpec::dirac(m, e, field(amp));
            let pd = analyze(&model, &x, tol)?;
            let rep = energy_order2_canonical(&pd, 1.0);
            blocks.push((
                rep.first.view((0, 0), (2, 2)).into_owned(),
                rep.second.view((0, 0), (2, 2)).into_owned(),
            ));
        }
        let f = field(v0);
        let gv = f.gradient(&r);
        let cr = crate::linalg::cross3(&gv, &p);
        let cr2 = crate::linalg::dot3(&cr, &cr);
        let sdot = crate::linalg::vec_dot_mats(&cr, &sig);
        let k = (&blocks[0].0 * &sdot).trace().re / (2.0 * e * cr2);
        let odd = (&blocks[0].1 - &blocks[1].1).scale(0.5);
        let d = odd.trace().re / 2.0 / (e * f.laplacian(&r));
        p2.push(s * s * m * m);
        so.push(k);
        darwin.push(d);
    }
    let (so0, _) = linear_fit(&p2, &so);
    let (d0, _) = linear_fit(&p2, &darwin);
    Ok(((so0, d0), oracles::pauli_coefficients(m)))
}

fn suite_oracles(opts: &VerifyOptions) -> Vec<Check> {
    let s = "oracles";
    let t = &opts.tolerances;
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(3));
    let v = default_potential();
    let f = match &ModelSpec::neutrino(default_index_profiles()[1].clone()).kind {
        ModelKind::Neutrino { f, .. } => f.clone(),
        _ => unreachable!(),
    };
    let mut herm: f64 = 0.0;
    for _ in 0..100 {
        let x = random_point(&mut rng, 0.1, 10.0);
        let mats = [
            oracles::blount(1.0, 1.0, &v, &x.r, &x.p).total(0.1),
            oracles::erelat(1.0, 1.0, &v, &x.r, &x.p).total(0.1),
            oracles::pauli_energy(1.0, 1.0, &v, &x.r, &x.p).total(0.1),
            oracles::neutrino_covariant(&f, &x.r, &x.p).total(0.1),
            oracles::neutrino_canonical(&f, &x.r, &x.p).total(0.1),
        ];
        for m in &mats {
            herm = herm.max(hermiticity_defect(m));
        }
    }
    out.push(Check::le(s, "oracle_hermiticity", herm, 1e-14));
    match pauli_fit(&opts.numerics) {
        Ok(((so, d), (so_o, d_o))) => {
            out.push(Check::le(s, "pauli_spin_orbit", ((so - so_o) / so_o).abs(), t.pauli));
            out.push(Check::le(s, "pauli_darwin", ((d - d_o) / d_o).abs(), t.pauli));
        }
        Err(e) => out.push(Check::failed(s, "pauli_fit", &e)),
    }
    out
}

/// Symbolic ⟨⟩ of a full symmetrization, used by tests to build words directly.
pub fn symmetrized_bracket(dim: usize, letters: &[Var]) -> Result<weyl::WeylExpr> {
    let coeff = weyl::WeylExpr::one(dim);
    let f: OrderedFactorization = weyl::symmetrize_word(&coeff, letters, weyl::DEFAULT_DEGREE_CAP)?;
    Ok(f.bracket())
}

/// Max |∇f − central differences| relative to max(1, |∇f|).
pub fn gradient_fd_error(f: &ScalarField, r: &[f64; 3]) -> f64 {
    let g = f.gradient(r);
    let scale = crate::linalg::norm3(&g).max(1.0);
    (0..3)
        .map(|k| {
            let fd = crate::fd::derivative1(
                |t| {
                    let mut y = *r;
                    y[k] = t;
                    f.value(&y)
                },
                r[k],
                1e-4,
            );
            (fd - g[k]).abs() / scale
        })
        .fold(0.0, f64::max)
}
