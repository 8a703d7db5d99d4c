//! Matrix-valued Hamiltonians H(R,P) and their closed-form ingredients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg::{
    c, cross3, dirac_alpha, dirac_beta, dirac_sigma, dot3, eye, norm3, pauli, vec_dot_mats, zeros,
    CMat, I,
};
use crate::weyl::{self, QMat, WeylExpr, WeylMonomial};

/// Smallest |P| accepted by massless models.
pub const MIN_MOMENTUM: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    #[serde(rename = "R")]
    pub r: [f64; 3],
    #[serde(rename = "P")]
    pub p: [f64; 3],
}

impl PhasePoint {
    pub fn new(r: [f64; 3], p: [f64; 3]) -> Self {
        PhasePoint { r, p }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.r[0], self.r[1], self.r[2], self.p[0], self.p[1], self.p[2]]
    }

    pub fn from_array(x: &[f64; 6]) -> Self {
        PhasePoint {
            r: [x[0], x[1], x[2]],
            p: [x[3], x[4], x[5]],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.r.iter().chain(self.p.iter()).all(|v| v.is_finite())
    }
}

/// Coefficients c₀ + Σ_k c_k X_k over (R₀,R₁,R₂,P₀,P₁,P₂).
pub type Affine = [f64; 7];

fn affine_value(a: &Affine, x: &[f64; 6]) -> f64 {
    a[0] + (0..6).map(|k| a[k + 1] * x[k]).sum::<f64>()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TwoLevelForm {
    /// h = (2ab, 0, a²−b²) with a, b affine, so ε₀ = ±(a²+b²) is polynomial.
    Squared { a: Affine, b: Affine },
    /// h_i affine in (R,P); no closed-form bracket.
    Affine { h: [Affine; 3] },
}

/// JSON model document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelConfig {
    DiracElectric {
        m: f64,
        e: f64,
        field: ScalarField,
    },
    /// `field` is the refractive index n(R); the Hamiltonian uses F = 1/n.
    NeutrinoMetric { field: ScalarField },
    TwoLevel {
        #[serde(flatten)]
        form: TwoLevelForm,
        #[serde(default)]
        numerical_frame: bool,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    Dirac { m: f64, e: f64, v: ScalarField },
    Neutrino { n: ScalarField, f: ScalarField },
    TwoLevel { form: TwoLevelForm },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ModelFlags {
    pub has_analytic_frame: bool,
    pub has_analytic_connections: bool,
    pub bracket_closed_form: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub dim: usize,
    pub band_groups: Vec<usize>,
    pub kind: ModelKind,
    pub flags: ModelFlags,
}

/// ε₀ for a two-level "squared" model as an exact polynomial symbol.
fn squared_symbol(a: &Affine, b: &Affine) -> WeylExpr {
    let lin = |v: &Affine| {
        let mut e = WeylExpr::scalar(1, weyl::q_from_f64(v[0]));
        for k in 0..6 {
            if v[k + 1] == 0.0 {
                continue;
            }
            let mut m = WeylMonomial::one();
            if k < 3 {
                m.r[k] = 1;
            } else {
                m.p[k - 3] = 1;
            }
            e = &e + &WeylExpr::monomial(1, m, 0, QMat::scalar(1, weyl::q_from_f64(v[k + 1])));
        }
        e
    };
    let (ea, eb) = (lin(a), lin(b));
    // classical symbol: products of commuting polynomials, so keep only ℏ⁰ terms
    (&(&ea * &ea) + &(&eb * &eb)).hbar_coefficient(0)
}

impl ModelSpec {
    pub fn from_config(cfg: &ModelConfig) -> Result<Self> {
        match cfg {
            ModelConfig::DiracElectric { field, .. } | ModelConfig::NeutrinoMetric { field } => {
                field.validate().map_err(Error::Config)?
            }
            ModelConfig::TwoLevel { .. } => {}
        }
        match cfg {
            ModelConfig::DiracElectric { m, e, field } => {
                if !(m.is_finite() && *m >= 0.0 && e.is_finite()) {
                    return Err(Error::Config(format!("bad Dirac parameters m={m}, e={e}")));
                }
                Ok(ModelSpec {
                    name: "dirac_electric".into(),
                    dim: 4,
                    band_groups: vec![2, 2],
                    kind: ModelKind::Dirac {
                        m: *m,
                        e: *e,
                        v: field.clone(),
                    },
                    flags: ModelFlags {
                        has_analytic_frame: true,
                        has_analytic_connections: true,
                        bracket_closed_form: true,
                    },
                })
            }
            ModelConfig::NeutrinoMetric { field } => Ok(ModelSpec {
                name: "neutrino_metric".into(),
                dim: 4,
                band_groups: vec![2, 2],
                kind: ModelKind::Neutrino {
                    n: field.clone(),
                    f: ScalarField::Reciprocal {
                        of: Box::new(field.clone()),
                    },
                },
                flags: ModelFlags {
                    has_analytic_frame: true,
                    has_analytic_connections: true,
                    bracket_closed_form: true,
                },
            }),
            ModelConfig::TwoLevel {
                form,
                numerical_frame,
            } => {
                let squared = matches!(form, TwoLevelForm::Squared { .. });
                Ok(ModelSpec {
                    name: "two_level".into(),
                    dim: 2,
                    band_groups: vec![1, 1],
                    kind: ModelKind::TwoLevel { form: form.clone() },
                    flags: ModelFlags {
                        has_analytic_frame: squared && !numerical_frame,
                        has_analytic_connections: false,
                        bracket_closed_form: squared,
                    },
                })
            }
        }
    }

    pub fn dirac(m: f64, e: f64, v: ScalarField) -> Self {
        Self::from_config(&ModelConfig::DiracElectric { m, e, field: v }).unwrap()
    }

    pub fn neutrino(n: ScalarField) -> Self {
        Self::from_config(&ModelConfig::NeutrinoMetric { field: n }).unwrap()
    }

    pub fn two_level(form: TwoLevelForm, numerical_frame: bool) -> Self {
        Self::from_config(&ModelConfig::TwoLevel {
            form,
            numerical_frame,
        })
        .unwrap()
    }

    /// Index of the band group of each state.
    pub fn group_index(&self) -> Vec<usize> {
        self.band_groups
            .iter()
            .enumerate()
            .flat_map(|(g, &k)| std::iter::repeat_n(g, k))
            .collect()
    }

    pub fn is_massless(&self) -> bool {
        match &self.kind {
            ModelKind::Neutrino { .. } => true,
            ModelKind::Dirac { m, .. } => *m == 0.0,
            ModelKind::TwoLevel { .. } => false,
        }
    }

    fn check_point(&self, x: &PhasePoint) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::Config("non-finite phase point".into()));
        }
        if self.is_massless() && norm3(&x.p) < MIN_MOMENTUM {
            return Err(Error::MomentumUnderflow(norm3(&x.p)));
        }
        Ok(())
    }

    pub fn evaluate_h(&self, x: &PhasePoint) -> Result<CMat> {
        self.check_point(x)?;
        let alpha = || [dirac_alpha(0), dirac_alpha(1), dirac_alpha(2)];
        Ok(match &self.kind {
            ModelKind::Dirac { m, e, v } => {
                vec_dot_mats(&x.p, &alpha()) + dirac_beta().scale(*m) + eye(4).scale(e * v.value(&x.r))
            }
            ModelKind::Neutrino { f, .. } => vec_dot_mats(&x.p, &alpha()).scale(f.value(&x.r)),
            ModelKind::TwoLevel { form } => {
                let h = self.two_level_h(form, x);
                vec_dot_mats(&h, &[pauli(0), pauli(1), pauli(2)])
            }
        })
    }

    fn two_level_h(&self, form: &TwoLevelForm, x: &PhasePoint) -> [f64; 3] {
        let xs = x.to_array();
        match form {
            TwoLevelForm::Squared { a, b } => {
                let (a, b) = (affine_value(a, &xs), affine_value(b, &xs));
                [2.0 * a * b, 0.0, a * a - b * b]
            }
            TwoLevelForm::Affine { h } => [
                affine_value(&h[0], &xs),
                affine_value(&h[1], &xs),
                affine_value(&h[2], &xs),
            ],
        }
    }

    /// Closed-form (U₀, ε₀) with U₀HU₀† = diag(ε₀), eigenvalues in descending order.
    pub fn analytic_frame(&self, x: &PhasePoint) -> Option<Result<(CMat, Vec<f64>)>> {
        if !self.flags.has_analytic_frame {
            return None;
        }
        Some(self.check_point(x).map(|_| match &self.kind {
            ModelKind::Dirac { m, e, v } => {
                let en = (dot3(&x.p, &x.p) + m * m).sqrt();
                let u = fw_unitary(&x.p, *m);
                let ev = e * v.value(&x.r);
                (u, vec![en + ev, en + ev, -en + ev, -en + ev])
            }
            ModelKind::Neutrino { f, .. } => {
                let u = fw_unitary(&x.p, 0.0);
                let en = f.value(&x.r) * norm3(&x.p);
                (u, vec![en, en, -en, -en])
            }
            ModelKind::TwoLevel {
                form: TwoLevelForm::Squared { a, b },
            } => {
                let xs = x.to_array();
                let (a, b) = (affine_value(a, &xs), affine_value(b, &xs));
                let rho = (a * a + b * b).sqrt();
                let (ca, sb) = (a / rho, b / rho);
                let u = CMat::from_row_slice(2, 2, &[c(ca, 0.0), c(sb, 0.0), c(-sb, 0.0), c(ca, 0.0)]);
                (u, vec![rho * rho, -rho * rho])
            }
            ModelKind::TwoLevel { .. } => unreachable!("flag checked"),
        }))
    }

    /// Closed-form order-0 connections, ordered A^{R_0..2}, A^{P_0..2}.
    pub fn analytic_connections(&self, x: &PhasePoint) -> Option<Result<[CMat; 6]>> {
        if !self.flags.has_analytic_connections {
            return None;
        }
        Some(self.check_point(x).map(|_| match &self.kind {
            ModelKind::Dirac { m, .. } => fw_connections(&x.p, *m),
            ModelKind::Neutrino { .. } => fw_connections(&x.p, 0.0),
            ModelKind::TwoLevel { .. } => unreachable!("flag checked"),
        }))
    }

    /// ℏ¹ and ℏ² coefficients of −(ℏ/2)⟨ε₀⟩ at a point.
    pub fn bracket_eps0(&self, x: &PhasePoint) -> Result<(CMat, CMat)> {
        self.check_point(x)?;
        match &self.kind {
            ModelKind::Dirac { .. } => Ok((zeros(4), zeros(4))),
            ModelKind::Neutrino { f, .. } => {
                let gf = f.gradient(&x.r);
                let v = -dot3(&x.p, &gf) / (4.0 * norm3(&x.p));
                Ok((zeros(4), eye(4).scale(v)))
            }
            ModelKind::TwoLevel {
                form: TwoLevelForm::Squared { a, b },
            } => {
                let sym = squared_symbol(a, b);
                let (b1, b2) = weyl::bracket_term_coefficients(&sym, weyl::DEFAULT_DEGREE_CAP)?;
                let xs = x.to_array();
                let (v1, v2) = (b1.evaluate(&xs, 1.0)[(0, 0)], b2.evaluate(&xs, 1.0)[(0, 0)]);
                let sign = crate::linalg::real_diag(&[1.0, -1.0]);
                Ok((sign.clone() * v1, sign * v2))
            }
            ModelKind::TwoLevel { .. } => Err(Error::BracketUnavailable),
        }
    }
}

/// Hook for the C(X) = 𝒫₊{U(D_αH)U†} pathway. Every built-in Hamiltonian is a sum of
/// pure-R and pure-P pieces, a scalar times α·P, or a Weyl-symmetrized polynomial, so
/// D_αH = 0 holds for all of them.
pub fn assert_no_dh_term(model: &ModelSpec) -> Result<()> {
    match model.kind {
        ModelKind::Dirac { .. } | ModelKind::Neutrino { .. } | ModelKind::TwoLevel { .. } => Ok(()),
    }
}

/// U₀ = (E+m+βα·P)/√(2E(E+m)).
pub fn fw_unitary(p: &[f64; 3], m: f64) -> CMat {
    let en = (dot3(p, p) + m * m).sqrt();
    let beta = dirac_beta();
    let ap = vec_dot_mats(p, &[dirac_alpha(0), dirac_alpha(1), dirac_alpha(2)]);
    (eye(4).scale(en + m) + beta * ap).scale(1.0 / (2.0 * en * (en + m)).sqrt())
}

/// A₀^R = i(βα·P P − E(E+m)βα − iE P×Σ)/(2E²(E+m)), A₀^P = 0.
pub fn fw_connections(p: &[f64; 3], m: f64) -> [CMat; 6] {
    let en = (dot3(p, p) + m * m).sqrt();
    let beta = dirac_beta();
    let alpha = [dirac_alpha(0), dirac_alpha(1), dirac_alpha(2)];
    let sigma = [dirac_sigma(0), dirac_sigma(1), dirac_sigma(2)];
    let bap = &beta * vec_dot_mats(p, &alpha);
    let den = 2.0 * en * en * (en + m);
    let mk = |k: usize| -> CMat {
        let e_k = {
            let mut v = [0.0; 3];
            v[k] = 1.0;
            v
        };
        // (P×Σ)_k = Σ_ij ε_kij P_i Σ_j
        let px = cross3(p, &e_k);
        let pxs = vec_dot_mats(&[-px[0], -px[1], -px[2]], &sigma);
        let inner = bap.scale(p[k]) - (&beta * &alpha[k]).scale(en * (en + m)) - pxs * c(0.0, en);
        inner * (I / den)
    };
    [mk(0), mk(1), mk(2), zeros(4), zeros(4), zeros(4)]
}
