//! Covariant variables r = R + ℏ𝔄^R, p = P + ℏ𝔄^P and their Berry curvatures.

use crate::diagonalizer::{analyze_anchored, connections0, project, PointData, Sign, Tolerances};
use crate::error::Result;
use crate::fd;
use crate::linalg::{comm, eye, plus_hc, zeros, CMat, I};
use crate::models::{ModelSpec, PhasePoint};

#[derive(Clone, Debug)]
pub struct CovariantVars {
    pub r: [CMat; 3],
    pub p: [CMat; 3],
    /// 𝔄₀ = 𝒫₊𝒜₀, same six-slot layout as the connections.
    pub frak0: Vec<CMat>,
    /// 𝔄₁ = 2𝒫₊𝒜₁ + ½((𝔄₀·∇)𝔄₀ + H.C.)
    pub frak1: Vec<CMat>,
    pub point: PhasePoint,
    pub hbar: f64,
}

pub fn frak0(pd: &PointData) -> Vec<CMat> {
    pd.a0.iter().map(|m| project(m, &pd.frame.groups, Sign::Plus)).collect()
}

pub fn frak1(pd: &PointData) -> Vec<CMat> {
    let g = &pd.frame.groups;
    let f0 = frak0(pd);
    let n = pd.eps0.nrows();
    (0..6)
        .map(|k| {
            let mut t = zeros(n);
            for j in 0..6 {
                t += &f0[j] * project(&pd.da0[j][k], g, Sign::Plus);
            }
            project(&pd.a1[k], g, Sign::Plus).scale(2.0) + plus_hc(&t).scale(0.5)
        })
        .collect()
}

/// r_k = R_k + ℏ𝔄₀^{R_k} + (ℏ²/2)𝔄₁^{R_k}, likewise for p.
pub fn covariant_vars(pd: &PointData, hbar: f64) -> CovariantVars {
    let f0 = frak0(pd);
    let f1 = frak1(pd);
    let n = pd.eps0.nrows();
    let x = pd.frame.point.to_array();
    let var = |k: usize| eye(n).scale(x[k]) + f0[k].scale(hbar) + f1[k].scale(0.5 * hbar * hbar);
    CovariantVars {
        r: [var(0), var(1), var(2)],
        p: [var(3), var(4), var(5)],
        frak0: f0,
        frak1: f1,
        point: pd.frame.point,
        hbar,
    }
}

/// Θ^{rr}, Θ^{pp}, Θ^{pr} with [r_i,r_j] = iℏ²Θ^{rr}_ij, [p_i,p_j] = iℏ²Θ^{pp}_ij and
/// [p_i,r_j] = −iℏδ_ij + iℏ²Θ^{pr}_ij.
#[derive(Clone, Debug)]
pub struct CurvatureSet {
    pub rr: Vec<Vec<CMat>>,
    pub pp: Vec<Vec<CMat>>,
    pub pr: Vec<Vec<CMat>>,
    /// The derivative (curl) part of Θ^{rr} alone.
    pub rr_curl: Vec<Vec<CMat>>,
    pub point: PhasePoint,
    pub hbar: f64,
}

impl CurvatureSet {
    /// Θ^{rr}_k = ½ε_kij Θ^{rr}_ij.
    pub fn rr_vector(&self) -> [CMat; 3] {
        [
            self.rr[1][2].clone(),
            self.rr[2][0].clone(),
            self.rr[0][1].clone(),
        ]
    }

    pub fn rr_curl_vector(&self) -> [CMat; 3] {
        [
            self.rr_curl[1][2].clone(),
            self.rr_curl[2][0].clone(),
            self.rr_curl[0][1].clone(),
        ]
    }
}

/// Θ from a field Y ↦ 𝔄(Y) (six slots) by central differences.
pub fn curvatures<F>(field: &F, x: &PhasePoint, hbar: f64, tol: &Tolerances) -> Result<CurvatureSet>
where
    F: Fn(&[f64; 6]) -> Result<Vec<CMat>>,
{
    let xs = x.to_array();
    let a = field(&xs)?;
    let (d, _) = fd::gradient6(field, &xs, tol.fd_step)?;
    let n = a[0].nrows();
    let mut rr = vec![vec![zeros(n); 3]; 3];
    let mut curl = vec![vec![zeros(n); 3]; 3];
    let mut ppm = vec![vec![zeros(n); 3]; 3];
    let mut pr = vec![vec![zeros(n); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            // ∂_{P_i}𝔄^R_j − ∂_{P_j}𝔄^R_i − i[𝔄^R_i, 𝔄^R_j]
            curl[i][j] = &d[3 + i][j] - &d[3 + j][i];
            rr[i][j] = &curl[i][j] - comm(&a[i], &a[j]) * I;
            // −∂_{R_i}𝔄^P_j + ∂_{R_j}𝔄^P_i − i[𝔄^P_i, 𝔄^P_j]
            ppm[i][j] = &d[j][3 + i] - &d[i][3 + j] - comm(&a[3 + i], &a[3 + j]) * I;
            // ∂_{P_j}𝔄^P_i − ∂_{R_i}𝔄^R_j − i[𝔄^P_i, 𝔄^R_j]
            pr[i][j] = &d[3 + j][3 + i] - &d[i][j] - comm(&a[3 + i], &a[j]) * I;
        }
    }
    Ok(CurvatureSet {
        rr,
        pp: ppm,
        pr,
        rr_curl: curl,
        point: *x,
        hbar,
    })
}

/// Y ↦ 𝔄₀(Y), the projected order-0 connections.
pub fn frak0_field<'a>(
    model: &'a ModelSpec,
    tol: &'a Tolerances,
    anchor: Option<CMat>,
) -> impl Fn(&[f64; 6]) -> Result<Vec<CMat>> + 'a {
    let groups = model.group_index();
    move |y: &[f64; 6]| {
        let a = connections0(model, &PhasePoint::from_array(y), anchor.as_ref(), tol)?;
        Ok(a.iter().map(|m| project(m, &groups, Sign::Plus)).collect())
    }
}

/// Y ↦ 𝔄₀(Y) + (ℏ/2)𝔄₁(Y), so that r = R + ℏ𝔄 through ℏ².
pub fn frak_field<'a>(
    model: &'a ModelSpec,
    tol: &'a Tolerances,
    hbar: f64,
    anchor: Option<CMat>,
) -> impl Fn(&[f64; 6]) -> Result<Vec<CMat>> + 'a {
    move |y: &[f64; 6]| {
        let pd = analyze_anchored(model, &PhasePoint::from_array(y), anchor.as_ref(), tol)?;
        let (f0, f1) = (frak0(&pd), frak1(&pd));
        Ok((0..6).map(|k| &f0[k] + f1[k].scale(0.5 * hbar)).collect())
    }
}
