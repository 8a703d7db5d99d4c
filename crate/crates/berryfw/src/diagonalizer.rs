//! Gauge-fixed classical diagonalization, Berry connections, B matrix and the
//! effective band energy through ℏ².
//!
//! Phase-space coordinates are indexed j = 0..6 (R then P). Connections follow the
//! same layout: `a[j]` is A^{R_j} for j < 3 and A^{P_{j-3}} otherwise, and
//! `a[j]` is always paired with ∂_j.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd;
use crate::linalg::{
    anticomm, comm, dag, eigh, herm, max_abs, plus_hc, polar_align, real_diag, zeros, CMat, I,
};
use crate::models::{ModelSpec, PhasePoint};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Spread allowed inside a band group, relative to ‖H‖.
    pub degeneracy: f64,
    /// Smallest cross-group gap, relative to ‖H‖.
    pub gap: f64,
    /// Base finite-difference step; h = step·(1+|x|).
    pub fd_step: f64,
    /// Smallest overlap singular value accepted by gauge alignment.
    pub align_min_sv: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            degeneracy: 1e-8,
            gap: 1e-6,
            fd_step: fd::DEFAULT_STEP,
            align_min_sv: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BandFrame {
    /// Eigenvalues, group-averaged, in band-group order.
    pub eps0: Vec<f64>,
    /// Rows are the band states: U0·H·U0† = diag(eps0).
    pub u0: CMat,
    pub groups: Vec<usize>,
    pub point: PhasePoint,
    /// max |eigenvalue| of H.
    pub h_norm: f64,
}

impl BandFrame {
    pub fn eps_matrix(&self) -> CMat {
        real_diag(&self.eps0)
    }

    /// Columns are the band states.
    pub fn vectors(&self) -> CMat {
        dag(&self.u0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionOrder {
    Zeroth,
    Corrected,
}

#[derive(Clone, Debug)]
pub struct ConnectionSet {
    pub a_r: [CMat; 3],
    pub a_p: [CMat; 3],
    pub order: ConnectionOrder,
    pub point: PhasePoint,
    pub hbar: f64,
}

impl ConnectionSet {
    pub fn from_six(a: &[CMat], order: ConnectionOrder, point: PhasePoint, hbar: f64) -> Self {
        ConnectionSet {
            a_r: [a[0].clone(), a[1].clone(), a[2].clone()],
            a_p: [a[3].clone(), a[4].clone(), a[5].clone()],
            order,
            point,
            hbar,
        }
    }

    pub fn six(&self) -> Vec<CMat> {
        self.a_r.iter().chain(self.a_p.iter()).cloned().collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// 𝒫₊ keeps within-group blocks, 𝒫₋ the rest.
pub fn project(m: &CMat, groups: &[usize], sign: Sign) -> CMat {
    let mut out = m.clone();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let same = groups[i] == groups[j];
            if same != (sign == Sign::Plus) {
                out[(i, j)] = num_complex::Complex64::new(0.0, 0.0);
            }
        }
    }
    out
}

fn pp(m: &CMat, g: &[usize]) -> CMat {
    project(m, g, Sign::Plus)
}

fn pm(m: &CMat, g: &[usize]) -> CMat {
    project(m, g, Sign::Minus)
}

/// Right inverse of V ↦ [V, ε₀] on cross-group blocks: V_nm = M_nm/(ε_m − ε_n).
pub fn inv_commutator(
    m: &CMat,
    eps0: &[f64],
    groups: &[usize],
    h_norm: f64,
    gap_tol: f64,
) -> Result<CMat> {
    let n = eps0.len();
    let mut v = zeros(n);
    let tol = gap_tol * h_norm.max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..n {
            if groups[i] == groups[j] {
                continue;
            }
            let gap = eps0[j] - eps0[i];
            if gap.abs() < tol {
                return Err(Error::NearDegenerate {
                    gap: gap.abs(),
                    tol,
                });
            }
            v[(i, j)] = m[(i, j)] / gap;
        }
    }
    Ok(v)
}

fn check_groups(vals: &[f64], groups: &[usize], h_norm: f64, tol: &Tolerances) -> Result<Vec<f64>> {
    let ng = groups.iter().max().map_or(0, |g| g + 1);
    let mut out = vals.to_vec();
    let mut means = vec![0.0; ng];
    for g in 0..ng {
        let members: Vec<f64> = (0..vals.len()).filter(|&i| groups[i] == g).map(|i| vals[i]).collect();
        let lo = members.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = members.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo > tol.degeneracy * h_norm {
            return Err(Error::GroupSpread {
                group: g,
                spread: hi - lo,
                tol: tol.degeneracy * h_norm,
            });
        }
        means[g] = members.iter().sum::<f64>() / members.len() as f64;
    }
    for g in 1..ng {
        let gap = (means[g - 1] - means[g]).abs();
        if gap < tol.gap * h_norm {
            return Err(Error::NearDegenerate {
                gap,
                tol: tol.gap * h_norm,
            });
        }
    }
    for (i, v) in out.iter_mut().enumerate() {
        *v = means[groups[i]];
    }
    Ok(out)
}

/// Eigenframe with each band group rotated onto `anchor` (columns = reference states)
/// by the polar factor of the overlap. Without an anchor the standard basis is used and
/// a singular overlap leaves the raw eigenvectors in place.
pub fn numerical_frame(
    model: &ModelSpec,
    x: &PhasePoint,
    anchor: Option<&CMat>,
    tol: &Tolerances,
) -> Result<BandFrame> {
    let h = model.evaluate_h(x)?;
    let (vals, mut vecs) = eigh(&h);
    let h_norm = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let groups = model.group_index();
    let eps0 = check_groups(&vals, &groups, h_norm, tol)?;
    let n = model.dim;
    let id = crate::linalg::eye(n);
    let mut start = 0;
    for &len in &model.band_groups {
        let block = vecs.columns(start, len).into_owned();
        let aligned = match anchor {
            Some(a) => polar_align(&a.columns(start, len).into_owned(), &block, tol.align_min_sv)?,
            None => polar_align(&id.columns(start, len).into_owned(), &block, tol.align_min_sv)
                .unwrap_or(block),
        };
        vecs.columns_mut(start, len).copy_from(&aligned);
        start += len;
    }
    Ok(BandFrame {
        eps0,
        u0: dag(&vecs),
        groups,
        point: *x,
        h_norm,
    })
}

/// Gauge-fixed frame at a point: closed form when the model has one, otherwise aligned
/// eigenvectors.
pub fn diagonalize_classical(model: &ModelSpec, x: &PhasePoint, tol: &Tolerances) -> Result<BandFrame> {
    frame_with_anchor(model, x, None, tol)
}

fn frame_with_anchor(
    model: &ModelSpec,
    x: &PhasePoint,
    anchor: Option<&CMat>,
    tol: &Tolerances,
) -> Result<BandFrame> {
    match model.analytic_frame(x) {
        Some(r) => {
            let (u0, vals) = r?;
            let h_norm = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let groups = model.group_index();
            let eps0 = check_groups(&vals, &groups, h_norm, tol)?;
            Ok(BandFrame {
                eps0,
                u0,
                groups,
                point: *x,
                h_norm,
            })
        }
        None => numerical_frame(model, x, anchor, tol),
    }
}

/// Order-0 connections by finite differences of the frame field:
/// A^{R_l} = iU∂_{P_l}U†, A^{P_l} = −iU∂_{R_l}U†.
fn fd_connections(
    model: &ModelSpec,
    x: &PhasePoint,
    anchor: Option<&CMat>,
    tol: &Tolerances,
) -> Result<(Vec<CMat>, f64)> {
    let center = frame_with_anchor(model, x, anchor, tol)?;
    let anchor_cols = match anchor {
        Some(a) => a.clone(),
        None => center.vectors(),
    };
    let udag = |y: &[f64; 6]| -> Result<CMat> {
        Ok(frame_with_anchor(model, &PhasePoint::from_array(y), Some(&anchor_cols), tol)?.vectors())
    };
    let (d, disc) = fd::gradient6(&udag, &x.to_array(), tol.fd_step)?;
    let u = &center.u0;
    let mut a = Vec::with_capacity(6);
    for l in 0..3 {
        a.push(herm(&((u * &d[3 + l]) * I)));
    }
    for l in 0..3 {
        a.push(herm(&((u * &d[l]) * (-I))));
    }
    Ok((a, disc))
}

/// Finite-difference connections of the model's frame field (analytic frame when
/// available, aligned eigenframes otherwise).
pub fn numerical_connections(
    model: &ModelSpec,
    x: &PhasePoint,
    hbar: f64,
    tol: &Tolerances,
) -> Result<ConnectionSet> {
    let (a, _) = fd_connections(model, x, None, tol)?;
    Ok(ConnectionSet::from_six(&a, ConnectionOrder::Zeroth, *x, hbar))
}

/// Connections used by the pipeline: closed form when available.
pub fn connections0(
    model: &ModelSpec,
    x: &PhasePoint,
    anchor: Option<&CMat>,
    tol: &Tolerances,
) -> Result<Vec<CMat>> {
    match model.analytic_connections(x) {
        Some(r) => Ok(r?.to_vec()),
        None => Ok(fd_connections(model, x, anchor, tol)?.0),
    }
}

/// ½[(D_jε₀)a_j + H.C.] summed; D_R = ∂_R + (i/2)[A^P,·], D_P = ∂_P − (i/2)[A^R,·].
fn cov_deriv(j: usize, dm: &CMat, m: &CMat, a: &[CMat]) -> CMat {
    if j < 3 {
        dm + comm(&a[j + 3], m) * (I * 0.5)
    } else {
        dm - comm(&a[j - 3], m) * (I * 0.5)
    }
}

/// F₁ = 𝒫₊[Σ_j (D_jε₀)A_j + H.C.]; the first-order energy is F₁/2.
pub fn first_order_f1(eps0: &CMat, grad: &[CMat], a: &[CMat], groups: &[usize]) -> CMat {
    let mut k0 = zeros(eps0.nrows());
    for j in 0..6 {
        k0 += cov_deriv(j, &grad[j], eps0, a) * &a[j];
    }
    pp(&plus_hc(&k0), groups)
}

/// B = −[·,ε₀]⁻¹𝒫₋{½Σ A_j∂_jε₀ + H.C.} + (i/4)Σ_l({𝒫₋A^{R_l},𝒫₊A^{P_l}} − {𝒫₋A^{P_l},𝒫₊A^{R_l}}).
pub fn b_matrix(
    eps0: &[f64],
    grad: &[CMat],
    a: &[CMat],
    groups: &[usize],
    h_norm: f64,
    tol: &Tolerances,
) -> Result<CMat> {
    let n = eps0.len();
    let mut s = zeros(n);
    for j in 0..6 {
        s += (&a[j] * &grad[j]).scale(0.5);
    }
    let mut b = -inv_commutator(&pm(&plus_hc(&s), groups), eps0, groups, h_norm, tol.gap)?;
    for l in 0..3 {
        let t = anticomm(&pm(&a[l], groups), &pp(&a[3 + l], groups))
            - anticomm(&pm(&a[3 + l], groups), &pp(&a[l], groups));
        b += t * (I * 0.25);
    }
    Ok(b)
}

/// (i/4)𝒫₊{Σ_l [ε₀,A^{R_l}]A^{P_l} − [ε₀,A^{P_l}]A^{R_l} − [ε₀,[A^{R_l},A^{P_l}]] + H.C.}
fn covariant_c1(eps0: &CMat, a: &[CMat], groups: &[usize]) -> CMat {
    let mut t = zeros(eps0.nrows());
    for l in 0..3 {
        t += comm(eps0, &a[l]) * &a[3 + l] - comm(eps0, &a[3 + l]) * &a[l]
            - comm(eps0, &comm(&a[l], &a[3 + l]));
    }
    pp(&plus_hc(&(t * (I * 0.25))), groups)
}

/// Quantities at one point that get differentiated by the outer stencil.
struct Local {
    eps0: CMat,
    grad: Vec<CMat>,
    a: Vec<CMat>,
    f1: CMat,
    b: CMat,
    c1: CMat,
    disc: f64,
}

fn local(model: &ModelSpec, x: &PhasePoint, anchor: Option<&CMat>, tol: &Tolerances) -> Result<Local> {
    let frame = frame_with_anchor(model, x, anchor, tol)?;
    let groups = &frame.groups;
    let eps_fn = |y: &[f64; 6]| -> Result<CMat> {
        Ok(frame_with_anchor(model, &PhasePoint::from_array(y), anchor, tol)?.eps_matrix())
    };
    let (grad, disc) = fd::gradient6(&eps_fn, &x.to_array(), tol.fd_step)?;
    let a = connections0(model, x, anchor, tol)?;
    let eps0 = frame.eps_matrix();
    let f1 = first_order_f1(&eps0, &grad, &a, groups);
    let b = b_matrix(&frame.eps0, &grad, &a, groups, frame.h_norm, tol)?;
    let c1 = covariant_c1(&eps0, &a, groups);
    Ok(Local {
        eps0,
        grad,
        a,
        f1,
        b,
        c1,
        disc,
    })
}

impl Local {
    fn pack(self) -> Vec<CMat> {
        let mut v = vec![self.f1, self.b, self.c1];
        v.extend(self.a);
        v.extend(self.grad);
        v
    }
}

/// Everything the order-by-order formulas need at one phase point.
#[derive(Clone, Debug)]
pub struct PointData {
    pub frame: BandFrame,
    pub eps0: CMat,
    /// ∂_jε₀
    pub grad: Vec<CMat>,
    /// ∂_i∂_jε₀
    pub hess: Vec<Vec<CMat>>,
    pub a0: Vec<CMat>,
    /// da0[j][k] = ∂_j A_k
    pub da0: Vec<Vec<CMat>>,
    pub f1: CMat,
    pub df1: Vec<CMat>,
    pub b: CMat,
    pub db: Vec<CMat>,
    pub c1: CMat,
    pub dc1: Vec<CMat>,
    /// ℏ-coefficient of the corrected connections.
    pub a1: Vec<CMat>,
    /// ℏ¹, ℏ² coefficients of −(ℏ/2)⟨ε₀⟩; `None` when no closed form exists.
    pub bracket: Option<(CMat, CMat)>,
    /// ∂_j of the ℏ¹ bracket coefficient (zeros when there is none).
    pub dbracket1: Vec<CMat>,
    /// Largest |D4 − D2| seen on the stencils.
    pub fd_discrepancy: f64,
}

/// Run the classical diagonalization and every derivative needed through ℏ².
pub fn analyze(model: &ModelSpec, x: &PhasePoint, tol: &Tolerances) -> Result<PointData> {
    analyze_anchored(model, x, None, tol)
}

/// As [`analyze`], with numerical frames aligned to a fixed anchor frame.
pub fn analyze_anchored(
    model: &ModelSpec,
    x: &PhasePoint,
    anchor: Option<&CMat>,
    tol: &Tolerances,
) -> Result<PointData> {
    crate::models::assert_no_dh_term(model)?;
    let frame = frame_with_anchor(model, x, anchor, tol)?;
    let anchor_cols = match anchor {
        Some(a) => a.clone(),
        None => frame.vectors(),
    };
    let center = local(model, x, Some(&anchor_cols), tol)?;
    let mut disc = center.disc;
    let outer = |y: &[f64; 6]| -> Result<Vec<CMat>> {
        Ok(local(model, &PhasePoint::from_array(y), Some(&anchor_cols), tol)?.pack())
    };
    let (d, d_disc) = fd::gradient6(&outer, &x.to_array(), tol.fd_step)?;
    disc = disc.max(d_disc);
    let df1: Vec<CMat> = d.iter().map(|v| v[0].clone()).collect();
    let db: Vec<CMat> = d.iter().map(|v| v[1].clone()).collect();
    let dc1: Vec<CMat> = d.iter().map(|v| v[2].clone()).collect();
    let da0: Vec<Vec<CMat>> = d.iter().map(|v| v[3..9].to_vec()).collect();
    let hess: Vec<Vec<CMat>> = d.iter().map(|v| v[9..15].to_vec()).collect();
    let a1 = corrected_increment(&center.a, &da0, &center.b, &db);
    let bracket = match model.bracket_eps0(x) {
        Ok(b) => Some(b),
        Err(Error::BracketUnavailable) => None,
        Err(e) => return Err(e),
    };
    let n = center.eps0.nrows();
    let dbracket1 = match &bracket {
        Some((b1, _)) if max_abs(b1) > 0.0 => {
            let f = |y: &[f64; 6]| -> Result<CMat> { Ok(model.bracket_eps0(&PhasePoint::from_array(y))?.0) };
            fd::gradient6(&f, &x.to_array(), tol.fd_step)?.0
        }
        _ => vec![zeros(n); 6],
    };
    Ok(PointData {
        frame,
        eps0: center.eps0,
        grad: center.grad,
        hess,
        a0: center.a,
        da0,
        f1: center.f1,
        df1,
        b: center.b,
        db,
        c1: center.c1,
        dc1,
        a1,
        bracket,
        dbracket1,
        fd_discrepancy: disc,
    })
}

/// A₁_k = ¼(½Σ_j A_j∂_jA_k + D_B_k + [B, A_k] + H.C.) with D_B^{R_k} = −i∂_{P_k}B and
/// D_B^{P_k} = +i∂_{R_k}B.
fn corrected_increment(a: &[CMat], da: &[Vec<CMat>], b: &CMat, db: &[CMat]) -> Vec<CMat> {
    (0..6)
        .map(|k| {
            let mut t = zeros(b.nrows());
            for j in 0..6 {
                t += (&a[j] * &da[j][k]).scale(0.5);
            }
            if k < 3 {
                t += &db[3 + k] * (-I);
            } else {
                t += &db[k - 3] * I;
            }
            t += comm(b, &a[k]);
            plus_hc(&t).scale(0.25)
        })
        .collect()
}

/// 𝒜 = 𝒜₀ + ℏ𝒜₁.
pub fn corrected_connections(pd: &PointData, hbar: f64) -> ConnectionSet {
    let a: Vec<CMat> = (0..6).map(|k| &pd.a0[k] + pd.a1[k].scale(hbar)).collect();
    ConnectionSet::from_six(&a, ConnectionOrder::Corrected, pd.frame.point, hbar)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyForm {
    Canonical,
    Covariant,
}

/// ε = zeroth + ℏ·first + ℏ²·second. `first`/`second` include the bracket pieces, which
/// are also reported separately (ℏ-weighted) in `bracket_term`.
#[derive(Clone, Debug)]
pub struct EnergyReport {
    pub order: u8,
    pub form: EnergyForm,
    pub point: PhasePoint,
    pub hbar: f64,
    pub zeroth: CMat,
    pub first: CMat,
    pub second: CMat,
    pub bracket_term: CMat,
    /// False when the ⟨ε₀⟩ contribution could not be formed.
    pub complete: bool,
    pub fd_discrepancy: f64,
}

impl EnergyReport {
    pub fn total(&self) -> CMat {
        let mut e = self.zeroth.clone();
        if self.order >= 1 {
            e += self.first.scale(self.hbar);
        }
        if self.order >= 2 {
            e += self.second.scale(self.hbar * self.hbar);
        }
        e
    }
}

fn bracket_parts(pd: &PointData) -> (CMat, CMat, bool) {
    let n = pd.eps0.nrows();
    match &pd.bracket {
        Some((b1, b2)) => (b1.clone(), b2.clone(), true),
        None => (zeros(n), zeros(n), false),
    }
}

pub fn energy_order0(pd: &PointData, hbar: f64) -> EnergyReport {
    let n = pd.eps0.nrows();
    EnergyReport {
        order: 0,
        form: EnergyForm::Canonical,
        point: pd.frame.point,
        hbar,
        zeroth: pd.eps0.clone(),
        first: zeros(n),
        second: zeros(n),
        bracket_term: zeros(n),
        complete: true,
        fd_discrepancy: pd.fd_discrepancy,
    }
}

/// ε₀ + (ℏ/2)𝒫₊[(𝒟ε₀)𝒜₀ + H.C.] (plus an ℏ¹ bracket piece when the model has one).
pub fn energy_order1(pd: &PointData, hbar: f64) -> EnergyReport {
    let (b1, _, complete) = bracket_parts(pd);
    let mut r = energy_order0(pd, hbar);
    r.order = 1;
    r.first = pd.f1.scale(0.5) + &b1;
    r.bracket_term = b1.scale(hbar);
    r.complete = complete;
    r
}

/// Second-order coefficient in canonical variables (without the bracket).
pub fn second_order_canonical(pd: &PointData) -> CMat {
    let g = &pd.frame.groups;
    let (e0, a, a1) = (&pd.eps0, &pd.a0, &pd.a1);
    let n = e0.nrows();
    let mut k1 = zeros(n);
    for l in 0..3 {
        k1 += cov_deriv(l, &pd.grad[l], e0, a) * &a1[l];
        k1 += comm(&a1[3 + l], e0) * &a[l] * (I * 0.5);
        k1 += cov_deriv(3 + l, &pd.grad[3 + l], e0, a) * &a1[3 + l];
        k1 -= comm(&a1[l], e0) * &a[3 + l] * (I * 0.5);
    }
    let mut t = zeros(n);
    for j in 0..6 {
        t += cov_deriv(j, &pd.df1[j], &pd.f1, a) * &a[j];
    }
    pp(&plus_hc(&k1), g).scale(0.5) + pp(&plus_hc(&pp(&t, g)), g).scale(0.125)
}

pub fn energy_order2_canonical(pd: &PointData, hbar: f64) -> EnergyReport {
    let (b1, b2, complete) = bracket_parts(pd);
    let mut r = energy_order1(pd, hbar);
    r.order = 2;
    r.second = second_order_canonical(pd) + &b2;
    r.bracket_term = b1.scale(hbar) + b2.scale(hbar * hbar);
    r.complete = complete;
    r
}

fn sym2(a: &CMat, b: &CMat) -> CMat {
    (a * b + b * a).scale(0.5)
}

fn sym3(a: &CMat, b: &CMat, c: &CMat) -> CMat {
    (a * b * c + a * c * b + b * a * c + b * c * a + c * a * b + c * b * a).scale(1.0 / 6.0)
}

/// The energy as a function of the covariant variables: ε₀ + ℏc₁ + ℏ²c₂ with
/// ε(R,P) = ε₀(r) + ℏc₁(r) + ℏ²c₂(r), Weyl-symmetrized Taylor expansion about
/// r = R + ℏ𝔄₀ + (ℏ²/2)𝔄₁.
pub fn energy_order2_covariant(pd: &PointData, hbar: f64) -> EnergyReport {
    let (b1, b2, complete) = bracket_parts(pd);
    let g = &pd.frame.groups;
    let n = pd.eps0.nrows();
    let f0 = crate::covariant::frak0(pd);
    let f1 = crate::covariant::frak1(pd);
    let mut s = zeros(n);
    for j in 0..6 {
        s += sym2(&pd.grad[j], &f1[j]).scale(0.5);
        s += sym2(&(&pd.dc1[j] + &pd.dbracket1[j]), &f0[j]);
        for k in 0..6 {
            s += sym3(&pd.hess[j][k], &f0[j], &f0[k]).scale(0.5);
        }
    }
    let c2 = herm(&pp(&(second_order_canonical(pd) - s), g));
    EnergyReport {
        order: 2,
        form: EnergyForm::Covariant,
        point: pd.frame.point,
        hbar,
        zeroth: pd.eps0.clone(),
        first: &pd.c1 + &b1,
        second: c2 + &b2,
        bracket_term: b1.scale(hbar) + b2.scale(hbar * hbar),
        complete,
        fd_discrepancy: pd.fd_discrepancy,
    }
}

/// −(ℏ/2)⟨ε₀⟩ at the point, ℏ-weighted.
pub fn bracket_eps0(model: &ModelSpec, x: &PhasePoint, hbar: f64) -> Result<CMat> {
    let (b1, b2) = model.bracket_eps0(x)?;
    Ok(b1.scale(hbar) + b2.scale(hbar * hbar))
}

/// First-order transformation U = (1 + ℏG)U₀, G = ahr + hr.
#[derive(Clone, Debug)]
pub struct UOrder1 {
    pub u0: CMat,
    /// G, the ℏ-coefficient of the generator.
    pub g: CMat,
    /// Anti-Hermitian part from the inverse commutator.
    pub ahr: CMat,
    /// hr = −(i/4)Σ_l[A^{R_l}, A^{P_l}].
    pub hr: CMat,
}

impl UOrder1 {
    pub fn u(&self, hbar: f64) -> CMat {
        let n = self.u0.nrows();
        (crate::linalg::eye(n) + self.g.scale(hbar)) * &self.u0
    }
}

/// G from the ℏ¹ interband part of U⋆H⋆U†: with h_R = ∂_Rε₀ + i[A^P,ε₀] and
/// h_P = ∂_Pε₀ − i[A^R,ε₀],
/// ahr = −invc 𝒫₋{hr ε₀ + ε₀ hr + ½Σ_j(A_j h_j + h_j A_j) + (i/2)Σ_l(A^{R_l}ε₀A^{P_l} − A^{P_l}ε₀A^{R_l})}.
pub fn u_order1(pd: &PointData, tol: &Tolerances) -> Result<UOrder1> {
    let g = &pd.frame.groups;
    let (e0, a) = (&pd.eps0, &pd.a0);
    let n = e0.nrows();
    let mut hr = zeros(n);
    for l in 0..3 {
        hr += comm(&a[l], &a[3 + l]) * (-I * 0.25);
    }
    let mut s = &hr * e0 + e0 * &hr;
    for l in 0..3 {
        let h_r = &pd.grad[l] + comm(&a[3 + l], e0) * I;
        let h_p = &pd.grad[3 + l] - comm(&a[l], e0) * I;
        s += (&a[l] * &h_r + &h_r * &a[l] + &a[3 + l] * &h_p + &h_p * &a[3 + l]).scale(0.5);
        s += (&a[l] * e0 * &a[3 + l] - &a[3 + l] * e0 * &a[l]) * (I * 0.5);
    }
    let ahr = -inv_commutator(&pm(&s, g), &pd.frame.eps0, g, pd.frame.h_norm, tol.gap)?;
    Ok(UOrder1 {
        u0: pd.frame.u0.clone(),
        g: &ahr + &hr,
        ahr,
        hr,
    })
}

/// ‖(U₀+ℏGU₀)(U₀+ℏGU₀)† − 1‖ with the plain matrix product.
pub fn unitarity_defect(u1: &UOrder1, hbar: f64) -> f64 {
    let u = u1.u(hbar);
    let n = u.nrows();
    max_abs(&(&u * dag(&u) - crate::linalg::eye(n)))
}

/// Largest ‖𝒫₋ε‖/‖ε‖ and Hermiticity defect of a report's total.
pub fn report_defects(r: &EnergyReport, groups: &[usize]) -> (f64, f64) {
    let e = r.total();
    let scale = max_abs(&e).max(f64::MIN_POSITIVE);
    (max_abs(&pm(&e, groups)) / scale, crate::linalg::hermiticity_defect(&e))
}

/// Full ε(ℏ) through ℏ² at a point.
pub fn energy_total(
    model: &ModelSpec,
    x: &PhasePoint,
    hbar: f64,
    anchor: Option<&CMat>,
    tol: &Tolerances,
) -> Result<CMat> {
    Ok(energy_order2_canonical(&analyze_anchored(model, x, anchor, tol)?, hbar).total())
}

/// Residual of ∂_ℏε = O_ℏε − ⟨ε⟩ through ℏ¹, with ∂_ℏε taken by a central difference in ℏ.
pub fn hbar_equation_residual(model: &ModelSpec, x: &PhasePoint, hbar: f64, tol: &Tolerances) -> Result<f64> {
    let pd = analyze(model, x, tol)?;
    let anchor = pd.frame.vectors();
    let g = &pd.frame.groups;
    let n = pd.eps0.nrows();
    let eps_at = |h: f64| energy_order2_canonical(&pd, h).total();
    let dh = 1e-3 * hbar;
    let lhs = (eps_at(hbar + dh) - eps_at(hbar - dh)).scale(0.5 / dh);

    let u1 = u_order1(&pd, tol)?;
    // ∂G† for the connections of U_ℏ
    let g_fn = |y: &[f64; 6]| -> Result<CMat> {
        let q = analyze_anchored(model, &PhasePoint::from_array(y), Some(&anchor), tol)?;
        Ok(dag(&u_order1(&q, tol)?.g))
    };
    let (dg_dag, _) = fd::gradient6(&g_fn, &x.to_array(), tol.fd_step)?;
    let gm = &u1.g;
    let a_h: Vec<CMat> = (0..6)
        .map(|k| {
            let extra = if k < 3 {
                &dg_dag[3 + k] * I
            } else {
                &dg_dag[k - 3] * (-I)
            };
            // first-order Moyal part of iU⋆∂U†
            let mut moyal = -(&u1.hr * &pd.a0[k]).scale(2.0);
            for j in 0..6 {
                moyal += (&pd.a0[j] * &pd.da0[j][k]).scale(0.5);
            }
            &pd.a0[k] + (gm * &pd.a0[k] + &pd.a0[k] * dag(gm) + extra + moyal).scale(hbar)
        })
        .collect();
    let e_fn = |y: &[f64; 6]| -> Result<CMat> {
        energy_total(model, &PhasePoint::from_array(y), hbar, Some(&anchor), tol)
    };
    let (de, _) = fd::gradient6(&e_fn, &x.to_array(), tol.fd_step)?;
    let eps = eps_at(hbar);
    let mut s = zeros(n);
    let mut t = zeros(n);
    for j in 0..6 {
        s += &a_h[j] * &de[j] + &de[j] * &a_h[j];
    }
    for l in 0..3 {
        t += comm(&eps, &a_h[l]) * &a_h[3 + l] - comm(&eps, &a_h[3 + l]) * &a_h[l]
            - comm(&eps, &comm(&a_h[l], &a_h[3 + l]));
    }
    let (b1, b2, _) = bracket_parts(&pd);
    // ⟨ε⟩ ≈ −(2/ℏ)·(bracket term)
    let bracket_avg = (b1.scale(hbar) + b2.scale(hbar * hbar)).scale(-2.0 / hbar);
    let rhs = pp(&s, g).scale(0.5) + pp(&plus_hc(&(t * (I * 0.25))), g) - bracket_avg;
    Ok(max_abs(&(lhs - rhs)))
}
