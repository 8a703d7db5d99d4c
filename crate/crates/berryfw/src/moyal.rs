//! First-order Moyal star product of matrix-valued symbols, used as an independent
//! check on commutator and unitarity identities.

use crate::diagonalizer::{analyze_anchored, u_order1, Tolerances};
use crate::error::Result;
use crate::fd;
use crate::linalg::{dag, eye, max_abs, zeros, CMat, I};
use crate::models::{ModelSpec, PhasePoint};

/// Σ_i (∂_{R_i}f ∂_{P_i}g − ∂_{P_i}f ∂_{R_i}g)
pub fn poisson(df: &[CMat], dg: &[CMat]) -> CMat {
    let mut out = zeros(df[0].nrows());
    for i in 0..3 {
        out += &df[i] * &dg[3 + i] - &df[3 + i] * &dg[i];
    }
    out
}

/// f⋆g ≈ fg + (iℏ/2){f,g}
pub fn star1(f: &CMat, df: &[CMat], g: &CMat, dg: &[CMat], hbar: f64) -> CMat {
    f * g + poisson(df, dg) * (I * (0.5 * hbar))
}

/// [f,g]⋆ = c0 + ℏ·c1 + O(ℏ²)
pub fn star_commutator_coefficients(f: &CMat, df: &[CMat], g: &CMat, dg: &[CMat]) -> (CMat, CMat) {
    let c0 = f * g - g * f;
    let c1 = (poisson(df, dg) - poisson(dg, df)) * (I * 0.5);
    (c0, c1)
}

/// Θ^{rr}_ij from the ℏ² coefficient of [R_i + ℏ𝔄_i, R_j + ℏ𝔄_j]⋆ divided by i.
pub fn curvature_from_star<F>(field: &F, x: &PhasePoint, tol: &Tolerances) -> Result<Vec<Vec<CMat>>>
where
    F: Fn(&[f64; 6]) -> Result<Vec<CMat>>,
{
    let xs = x.to_array();
    let a = field(&xs)?;
    let n = a[0].nrows();
    let (da, _) = fd::gradient6(field, &xs, tol.fd_step)?;
    let coord = |k: usize| {
        let f = move |y: &[f64; 6]| -> Result<CMat> { Ok(eye(n).scale(y[k])) };
        let (d, _) = fd::gradient6(&f, &xs, tol.fd_step).expect("linear symbol");
        (eye(n).scale(xs[k]), d)
    };
    let mut out = vec![vec![zeros(n); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (ri, dri) = coord(i);
            let (rj, drj) = coord(j);
            let dai: Vec<CMat> = (0..6).map(|m| da[m][i].clone()).collect();
            let daj: Vec<CMat> = (0..6).map(|m| da[m][j].clone()).collect();
            let (_, c_ra) = star_commutator_coefficients(&ri, &dri, &a[j], &daj);
            let (_, c_ar) = star_commutator_coefficients(&a[i], &dai, &rj, &drj);
            let (c_aa, _) = star_commutator_coefficients(&a[i], &dai, &a[j], &daj);
            out[i][j] = (c_ra + c_ar + c_aa) * (-I);
        }
    }
    Ok(out)
}

/// ‖U⋆U† − 1‖ for U = (1 + ℏG)U₀, with the star product truncated at first order.
pub fn star_unitarity_defect(model: &ModelSpec, x: &PhasePoint, hbar: f64, tol: &Tolerances) -> Result<f64> {
    let pd = crate::diagonalizer::analyze(model, x, tol)?;
    let anchor = pd.frame.vectors();
    let u_at = |y: &[f64; 6]| -> Result<CMat> {
        let q = analyze_anchored(model, &PhasePoint::from_array(y), Some(&anchor), tol)?;
        Ok(u_order1(&q, tol)?.u(hbar))
    };
    let xs = x.to_array();
    let u = u_at(&xs)?;
    let (du, _) = fd::gradient6(&u_at, &xs, tol.fd_step)?;
    let udag = dag(&u);
    let dudag: Vec<CMat> = du.iter().map(dag).collect();
    let prod = star1(&u, &du, &udag, &dudag, hbar);
    Ok(max_abs(&(prod - eye(u.nrows()))))
}
