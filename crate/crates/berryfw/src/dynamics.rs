//! Berry-corrected ray equations on one band and one helicity, with RK4 and an
//! adaptive RK45 integrator.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::covariant::{curvatures, frak0_field};
use crate::diagonalizer::Tolerances;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg::{c, cross3, dot3, eigh, norm3, pauli, vec_dot_mats, CMat, I};
use crate::models::{ModelKind, ModelSpec, PhasePoint, MIN_MOMENTUM};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryState {
    pub t: f64,
    pub r: [f64; 3],
    #[serde(rename = "P")]
    pub p: [f64; 3],
    pub lambda: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
    Rk45,
}

/// Positive-energy, fixed-helicity reduction of the massless model.
pub struct NeutrinoBand<'a> {
    model: &'a ModelSpec,
    f: ScalarField,
    pub hbar: f64,
    pub lambda: f64,
    tol: Tolerances,
}

#[derive(Clone, Copy, Debug)]
pub struct Rhs {
    pub r_dot: [f64; 3],
    pub p_dot: [f64; 3],
}

fn upper_block(m: &CMat) -> CMat {
    m.view((0, 0), (2, 2)).into_owned()
}

impl<'a> NeutrinoBand<'a> {
    pub fn new(model: &'a ModelSpec, hbar: f64, lambda: f64, tol: Tolerances) -> Result<Self> {
        let f = match &model.kind {
            ModelKind::Neutrino { f, .. } => f.clone(),
            _ => return Err(Error::Unsupported(format!("trajectories for {}", model.name))),
        };
        if lambda.abs() != 1.0 {
            return Err(Error::Config(format!("helicity must be ±1, got {lambda}")));
        }
        Ok(NeutrinoBand {
            model,
            f,
            hbar,
            lambda,
            tol,
        })
    }

    fn check(p: &[f64; 3]) -> Result<f64> {
        let pn = norm3(p);
        if pn < MIN_MOMENTUM {
            Err(Error::MomentumUnderflow(pn))
        } else {
            Ok(pn)
        }
    }

    /// ε = F(r)|P| − ℏ²P·∇F(r)/(4|P|)
    pub fn energy(&self, r: &[f64; 3], p: &[f64; 3]) -> Result<f64> {
        let pn = Self::check(p)?;
        let gf = self.f.gradient(r);
        Ok(self.f.value(r) * pn - self.hbar * self.hbar * dot3(p, &gf) / (4.0 * pn))
    }

    /// (∇_r ε, ∇_P ε)
    pub fn gradients(&self, r: &[f64; 3], p: &[f64; 3]) -> Result<([f64; 3], [f64; 3])> {
        let pn = Self::check(p)?;
        let (fv, gf, hf) = (self.f.value(r), self.f.gradient(r), self.f.hessian(r));
        let h2 = self.hbar * self.hbar;
        let pg = dot3(p, &gf);
        let mut gr = [0.0; 3];
        let mut gp = [0.0; 3];
        for i in 0..3 {
            let hp: f64 = (0..3).map(|j| hf[i][j] * p[j]).sum();
            gr[i] = pn * gf[i] - h2 * hp / (4.0 * pn);
            gp[i] = fv * p[i] / pn - 0.25 * h2 * (gf[i] / pn - p[i] * pg / pn.powi(3));
        }
        Ok((gr, gp))
    }

    fn helicity_projector(&self, p: &[f64; 3]) -> CMat {
        let pn = norm3(p);
        let s = vec_dot_mats(&[p[0] / pn, p[1] / pn, p[2] / pn], &[pauli(0), pauli(1), pauli(2)]);
        (crate::linalg::eye(2) + s.scale(self.lambda)).scale(0.5)
    }

    /// Positive-band projected connection 𝔄₀^R as 2×2 blocks.
    pub fn frak_r(&self, r: &[f64; 3], p: &[f64; 3]) -> Result<[CMat; 3]> {
        let field = frak0_field(self.model, &self.tol, None);
        let a = field(&PhasePoint::new(*r, *p).to_array())?;
        Ok([upper_block(&a[0]), upper_block(&a[1]), upper_block(&a[2])])
    }

    /// Θ^{rr} vector on the chosen helicity: tr(Π_λ Θ_k).
    pub fn theta(&self, r: &[f64; 3], p: &[f64; 3]) -> Result<[f64; 3]> {
        let field = frak0_field(self.model, &self.tol, None);
        let cs = curvatures(&field, &PhasePoint::new(*r, *p), self.hbar, &self.tol)?;
        let pi = self.helicity_projector(p);
        let v = cs.rr_vector();
        Ok([0, 1, 2].map(|k| (&pi * upper_block(&v[k])).trace().re))
    }

    /// Ṗ = −∇_r ε first, then ṙ = ∇_P ε + ℏṖ×Θ.
    pub fn eom_rhs(&self, r: &[f64; 3], p: &[f64; 3]) -> Result<Rhs> {
        let (gr, gp) = self.gradients(r, p)?;
        let p_dot = [-gr[0], -gr[1], -gr[2]];
        let th = self.theta(r, p)?;
        let an = cross3(&p_dot, &th);
        let r_dot = [
            gp[0] + self.hbar * an[0],
            gp[1] + self.hbar * an[1],
            gp[2] + self.hbar * an[2],
        ];
        Ok(Rhs { r_dot, p_dot })
    }

    /// Helicity eigenspinor of σ·P̂ with eigenvalue λ.
    pub fn helicity_spinor(&self, p: &[f64; 3]) -> [Complex64; 2] {
        let pn = norm3(p);
        let s = vec_dot_mats(&[p[0] / pn, p[1] / pn, p[2] / pn], &[pauli(0), pauli(1), pauli(2)]);
        let (_, v) = eigh(&s);
        let col = if self.lambda > 0.0 { 0 } else { 1 };
        [v[(0, col)], v[(1, col)]]
    }

    pub fn measured_helicity(&self, p: &[f64; 3], chi: &[Complex64; 2]) -> f64 {
        let pn = norm3(p);
        let s = vec_dot_mats(&[p[0] / pn, p[1] / pn, p[2] / pn], &[pauli(0), pauli(1), pauli(2)]);
        let v = DMatrix::from_column_slice(2, 1, chi);
        let num = (v.adjoint() * s * &v)[(0, 0)].re;
        let den = (v.adjoint() * &v)[(0, 0)].re;
        num / den
    }

    /// Packed state: r, P, Re/Im of the transported spinor.
    fn derivative(&self, y: &[f64]) -> Result<Vec<f64>> {
        let r = [y[0], y[1], y[2]];
        let p = [y[3], y[4], y[5]];
        let rhs = self.eom_rhs(&r, &p)?;
        let a = self.frak_r(&r, &p)?;
        let k = vec_dot_mats(&rhs.p_dot, &a) * I;
        let chi = DMatrix::from_column_slice(2, 1, &[c(y[6], y[7]), c(y[8], y[9])]);
        let dchi = k * chi;
        let mut out = Vec::with_capacity(10);
        out.extend_from_slice(&rhs.r_dot);
        out.extend_from_slice(&rhs.p_dot);
        out.extend_from_slice(&[dchi[(0, 0)].re, dchi[(0, 0)].im, dchi[(1, 0)].re, dchi[(1, 0)].im]);
        Ok(out)
    }

    pub fn speed(&self, r: &[f64; 3], p: &[f64; 3]) -> Result<f64> {
        Ok(norm3(&self.eom_rhs(r, p)?.r_dot))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryPoint {
    pub state: TrajectoryState,
    pub eps: f64,
    pub speed: f64,
    /// ⟨χ|σ·P̂|χ⟩ of the parallel-transported spinor.
    pub helicity: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub helicity_drift: f64,
    pub energy_drift: f64,
    pub rejected_steps: usize,
}

fn axpy(y: &[f64], k: &[f64], h: f64) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

fn rk4_step(band: &NeutrinoBand, y: &[f64], h: f64) -> Result<Vec<f64>> {
    let k1 = band.derivative(y)?;
    let k2 = band.derivative(&axpy(y, &k1, 0.5 * h))?;
    let k3 = band.derivative(&axpy(y, &k2, 0.5 * h))?;
    let k4 = band.derivative(&axpy(y, &k3, h))?;
    Ok((0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Fehlberg 4(5); returns the 5th-order solution and an error estimate.
fn rkf45_step(band: &NeutrinoBand, y: &[f64], h: f64) -> Result<(Vec<f64>, f64)> {
    let n = y.len();
    let comb = |ks: &[(&Vec<f64>, f64)]| -> Vec<f64> {
        (0..n)
            .map(|i| y[i] + h * ks.iter().map(|(k, w)| k[i] * w).sum::<f64>())
            .collect()
    };
    let k1 = band.derivative(y)?;
    let k2 = band.derivative(&comb(&[(&k1, 0.25)]))?;
    let k3 = band.derivative(&comb(&[(&k1, 3.0 / 32.0), (&k2, 9.0 / 32.0)]))?;
    let k4 = band.derivative(&comb(&[
        (&k1, 1932.0 / 2197.0),
        (&k2, -7200.0 / 2197.0),
        (&k3, 7296.0 / 2197.0),
    ]))?;
    let k5 = band.derivative(&comb(&[
        (&k1, 439.0 / 216.0),
        (&k2, -8.0),
        (&k3, 3680.0 / 513.0),
        (&k4, -845.0 / 4104.0),
    ]))?;
    let k6 = band.derivative(&comb(&[
        (&k1, -8.0 / 27.0),
        (&k2, 2.0),
        (&k3, -3544.0 / 2565.0),
        (&k4, 1859.0 / 4104.0),
        (&k5, -11.0 / 40.0),
    ]))?;
    let y5 = comb(&[
        (&k1, 16.0 / 135.0),
        (&k3, 6656.0 / 12825.0),
        (&k4, 28561.0 / 56430.0),
        (&k5, -9.0 / 50.0),
        (&k6, 2.0 / 55.0),
    ]);
    let y4 = comb(&[
        (&k1, 25.0 / 216.0),
        (&k3, 1408.0 / 2565.0),
        (&k4, 2197.0 / 4104.0),
        (&k5, -0.2),
    ]);
    let err = y5
        .iter()
        .zip(&y4)
        .map(|(a, b)| (a - b).abs() / (1.0 + a.abs()))
        .fold(0.0, f64::max);
    Ok((y5, err))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Rk45Options {
    pub rtol: f64,
    pub max_rejections: usize,
}

impl Default for Rk45Options {
    fn default() -> Self {
        Rk45Options {
            rtol: 1e-10,
            max_rejections: 10_000,
        }
    }
}

/// Integrate from `state0` for `steps` steps of `dt` (RK4), or adaptively over the same
/// time span (RK45).
pub fn integrate(
    band: &NeutrinoBand,
    state0: &TrajectoryState,
    dt: f64,
    steps: usize,
    method: Method,
    opts: Rk45Options,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    if state0.lambda != band.lambda {
        return Err(Error::Config("state helicity differs from the band's".into()));
    }
    let chi = band.helicity_spinor(&state0.p);
    let mut y: Vec<f64> = state0.r.iter().chain(state0.p.iter()).cloned().collect();
    y.extend_from_slice(&[chi[0].re, chi[0].im, chi[1].re, chi[1].im]);
    let record = |t: f64, y: &[f64]| -> Result<TrajectoryPoint> {
        let r = [y[0], y[1], y[2]];
        let p = [y[3], y[4], y[5]];
        let chi = [c(y[6], y[7]), c(y[8], y[9])];
        Ok(TrajectoryPoint {
            state: TrajectoryState {
                t,
                r,
                p,
                lambda: band.lambda,
            },
            eps: band.energy(&r, &p)?,
            speed: band.speed(&r, &p)?,
            helicity: band.measured_helicity(&p, &chi),
        })
    };
    let mut points = vec![record(state0.t, &y)?];
    let mut rejected = 0;
    let t_end = state0.t + dt * steps as f64;
    match method {
        Method::Rk4 => {
            for s in 1..=steps {
                y = rk4_step(band, &y, dt)?;
                points.push(record(state0.t + dt * s as f64, &y)?);
            }
        }
        Method::Rk45 => {
            let mut t = state0.t;
            let mut h = dt;
            while t < t_end * (1.0 - 1e-15) {
                h = h.min(t_end - t);
                let (y5, err) = rkf45_step(band, &y, h)?;
                if err <= opts.rtol {
                    t += h;
                    y = y5;
                    points.push(record(t, &y)?);
                } else {
                    rejected += 1;
                    if rejected > opts.max_rejections {
                        return Err(Error::Integration(format!("{rejected} rejected steps")));
                    }
                }
                let fac = if err > 0.0 {
                    0.9 * (opts.rtol / err).powf(0.2)
                } else {
                    4.0
                };
                h *= fac.clamp(0.2, 4.0);
            }
        }
    }
    let lam0 = points[0].helicity;
    let e0 = points[0].eps;
    let helicity_drift = points.iter().map(|p| (p.helicity - lam0).abs()).fold(0.0, f64::max);
    let energy_drift = points.iter().map(|p| (p.eps - e0).abs()).fold(0.0, f64::max);
    Ok(Trajectory {
        points,
        helicity_drift,
        energy_drift,
        rejected_steps: rejected,
    })
}
