//! Scalar background fields V(R) and refractive-index profiles with analytic derivatives.

use serde::{Deserialize, Serialize};

use crate::linalg::dot3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub coeff: f64,
    pub powers: [u32; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarField {
    Constant {
        value: f64,
    },
    /// value + gradient·R
    Linear {
        value: f64,
        gradient: [f64; 3],
    },
    /// offset + amplitude·exp(-|R-center|²/width²)
    Gaussian {
        amplitude: f64,
        #[serde(default)]
        center: [f64; 3],
        width: f64,
        #[serde(default)]
        offset: f64,
    },
    /// q/√(|R-center|²+a²)
    Coulomb {
        q: f64,
        a: f64,
        #[serde(default)]
        center: [f64; 3],
    },
    Polynomial {
        terms: Vec<PolyTerm>,
    },
    /// 1/f
    Reciprocal {
        of: Box<ScalarField>,
    },
}

pub type Hessian = [[f64; 3]; 3];

fn sub3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn ipow(x: f64, k: i64) -> f64 {
    if k < 0 {
        0.0
    } else {
        x.powi(k as i32)
    }
}

impl ScalarField {
    pub fn value(&self, r: &[f64; 3]) -> f64 {
        match self {
            ScalarField::Constant { value } => *value,
            ScalarField::Linear { value, gradient } => value + dot3(gradient, r),
            ScalarField::Gaussian {
                amplitude,
                center,
                width,
                offset,
            } => {
                let d = sub3(r, center);
                offset + amplitude * (-dot3(&d, &d) / (width * width)).exp()
            }
            ScalarField::Coulomb { q, a, center } => {
                let d = sub3(r, center);
                q / (dot3(&d, &d) + a * a).sqrt()
            }
            ScalarField::Polynomial { terms } => terms
                .iter()
                .map(|t| {
                    t.coeff
                        * (0..3)
                            .map(|i| ipow(r[i], t.powers[i] as i64))
                            .product::<f64>()
                })
                .sum(),
            ScalarField::Reciprocal { of } => 1.0 / of.value(r),
        }
    }

    pub fn gradient(&self, r: &[f64; 3]) -> [f64; 3] {
        match self {
            ScalarField::Constant { .. } => [0.0; 3],
            ScalarField::Linear { gradient, .. } => *gradient,
            ScalarField::Gaussian {
                amplitude,
                center,
                width,
                ..
            } => {
                let d = sub3(r, center);
                let w2 = width * width;
                let g = amplitude * (-dot3(&d, &d) / w2).exp();
                [-2.0 * d[0] / w2 * g, -2.0 * d[1] / w2 * g, -2.0 * d[2] / w2 * g]
            }
            ScalarField::Coulomb { q, a, center } => {
                let d = sub3(r, center);
                let s = (dot3(&d, &d) + a * a).powf(-1.5);
                [-q * d[0] * s, -q * d[1] * s, -q * d[2] * s]
            }
            ScalarField::Polynomial { terms } => {
                let mut g = [0.0; 3];
                for t in terms {
                    for (k, gk) in g.iter_mut().enumerate() {
                        let pk = t.powers[k] as i64;
                        if pk == 0 {
                            continue;
                        }
                        let mut v = t.coeff * pk as f64;
                        for i in 0..3 {
                            let e = t.powers[i] as i64 - i64::from(i == k);
                            v *= ipow(r[i], e);
                        }
                        *gk += v;
                    }
                }
                g
            }
            ScalarField::Reciprocal { of } => {
                let n = of.value(r);
                let gn = of.gradient(r);
                let s = -1.0 / (n * n);
                [gn[0] * s, gn[1] * s, gn[2] * s]
            }
        }
    }

    pub fn hessian(&self, r: &[f64; 3]) -> Hessian {
        let mut h = [[0.0; 3]; 3];
        match self {
            ScalarField::Constant { .. } | ScalarField::Linear { .. } => {}
            ScalarField::Gaussian {
                amplitude,
                center,
                width,
                ..
            } => {
                let d = sub3(r, center);
                let w2 = width * width;
                let g = amplitude * (-dot3(&d, &d) / w2).exp();
                for i in 0..3 {
                    for j in 0..3 {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        h[i][j] = g * (4.0 * d[i] * d[j] / (w2 * w2) - 2.0 * delta / w2);
                    }
                }
            }
            ScalarField::Coulomb { q, a, center } => {
                let d = sub3(r, center);
                let s = dot3(&d, &d) + a * a;
                for i in 0..3 {
                    for j in 0..3 {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        h[i][j] = q * (3.0 * d[i] * d[j] * s.powf(-2.5) - delta * s.powf(-1.5));
                    }
                }
            }
            ScalarField::Polynomial { terms } => {
                for t in terms {
                    for a in 0..3 {
                        for b in 0..3 {
                            let mut e = [t.powers[0] as i64, t.powers[1] as i64, t.powers[2] as i64];
                            let mut v = t.coeff * e[a] as f64;
                            e[a] -= 1;
                            v *= e[b] as f64;
                            e[b] -= 1;
                            if v == 0.0 {
                                continue;
                            }
                            for i in 0..3 {
                                v *= ipow(r[i], e[i]);
                            }
                            h[a][b] += v;
                        }
                    }
                }
            }
            ScalarField::Reciprocal { of } => {
                let n = of.value(r);
                let gn = of.gradient(r);
                let hn = of.hessian(r);
                for i in 0..3 {
                    for j in 0..3 {
                        h[i][j] = -hn[i][j] / (n * n) + 2.0 * gn[i] * gn[j] / (n * n * n);
                    }
                }
            }
        }
        h
    }

    pub fn laplacian(&self, r: &[f64; 3]) -> f64 {
        let h = self.hessian(r);
        h[0][0] + h[1][1] + h[2][2]
    }

    /// Rejects non-finite parameters, non-positive Gaussian widths and unsoftened Coulomb cores.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let fin = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            ScalarField::Constant { value } if !value.is_finite() => Err("constant value must be finite".into()),
            ScalarField::Linear { value, gradient } if !(value.is_finite() && fin(gradient)) => {
                Err("linear parameters must be finite".into())
            }
            ScalarField::Gaussian {
                amplitude,
                center,
                width,
                offset,
            } => {
                if !(fin(&[*amplitude, *offset]) && fin(center)) {
                    Err("gaussian parameters must be finite".into())
                } else if !(width.is_finite() && *width > 0.0) {
                    Err(format!("gaussian width must be positive, got {width}"))
                } else {
                    Ok(())
                }
            }
            ScalarField::Coulomb { q, a, center } => {
                if !(q.is_finite() && fin(center)) {
                    Err("coulomb parameters must be finite".into())
                } else if !(a.is_finite() && *a > 0.0) {
                    Err(format!("coulomb softening must be positive, got {a}"))
                } else {
                    Ok(())
                }
            }
            ScalarField::Polynomial { terms } if !terms.iter().all(|t| t.coeff.is_finite()) => {
                Err("polynomial coefficients must be finite".into())
            }
            ScalarField::Reciprocal { of } => of.validate(),
            _ => Ok(()),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            ScalarField::Constant { .. } => true,
            ScalarField::Linear { gradient, .. } => gradient.iter().all(|g| *g == 0.0),
            ScalarField::Gaussian { amplitude, .. } => *amplitude == 0.0,
            ScalarField::Coulomb { q, .. } => *q == 0.0,
            ScalarField::Polynomial { terms } => terms
                .iter()
                .all(|t| t.coeff == 0.0 || t.powers.iter().all(|p| *p == 0)),
            ScalarField::Reciprocal { of } => of.is_constant(),
        }
    }

    /// Same field with every amplitude multiplied by `s` (used for odd/even field splits).
    pub fn scaled(&self, s: f64) -> ScalarField {
        match self {
            ScalarField::Constant { value } => ScalarField::Constant { value: value * s },
            ScalarField::Linear { value, gradient } => ScalarField::Linear {
                value: value * s,
                gradient: [gradient[0] * s, gradient[1] * s, gradient[2] * s],
            },
            ScalarField::Gaussian {
                amplitude,
                center,
                width,
                offset,
            } => ScalarField::Gaussian {
                amplitude: amplitude * s,
                center: *center,
                width: *width,
                offset: offset * s,
            },
            ScalarField::Coulomb { q, a, center } => ScalarField::Coulomb {
                q: q * s,
                a: *a,
                center: *center,
            },
            ScalarField::Polynomial { terms } => ScalarField::Polynomial {
                terms: terms
                    .iter()
                    .map(|t| PolyTerm {
                        coeff: t.coeff * s,
                        powers: t.powers,
                    })
                    .collect(),
            },
            ScalarField::Reciprocal { .. } => panic!("scaling a reciprocal field is not linear"),
        }
    }
}
