//! Dense complex matrix helpers on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn dag(m: &CMat) -> CMat {
    m.adjoint()
}

pub fn comm(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticomm(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

/// `m + m†`, the "+ H.C." completion.
pub fn plus_hc(m: &CMat) -> CMat {
    m + m.adjoint()
}

pub fn herm(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

pub fn antiherm(m: &CMat) -> CMat {
    (m - m.adjoint()).scale(0.5)
}

pub fn scale(m: &CMat, s: f64) -> CMat {
    m.scale(s)
}

pub fn cscale(m: &CMat, s: Complex64) -> CMat {
    m * s
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermiticity_defect(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn real_diag(v: &[f64]) -> CMat {
    let n = v.len();
    let mut m = zeros(n);
    for (i, x) in v.iter().enumerate() {
        m[(i, i)] = c(*x, 0.0);
    }
    m
}

pub fn from_rows(n: usize, vals: &[Complex64]) -> CMat {
    CMat::from_row_slice(n, n, vals)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn pauli(k: usize) -> CMat {
    let o = c(0.0, 0.0);
    let l = c(1.0, 0.0);
    match k {
        0 => from_rows(2, &[o, l, l, o]),
        1 => from_rows(2, &[o, -I, I, o]),
        2 => from_rows(2, &[l, o, o, -l]),
        _ => panic!("pauli index {k} out of range"),
    }
}

/// β = diag(1,1,-1,-1) in the Dirac representation.
pub fn dirac_beta() -> CMat {
    kron(&pauli(2), &eye(2))
}

/// α_k with off-diagonal Pauli blocks.
pub fn dirac_alpha(k: usize) -> CMat {
    kron(&pauli(0), &pauli(k))
}

/// Σ_k = 1 ⊗ σ_k.
pub fn dirac_sigma(k: usize) -> CMat {
    kron(&eye(2), &pauli(k))
}

pub fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm3(a: &[f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

/// Σ_k v_k M_k.
pub fn vec_dot_mats(v: &[f64; 3], m: &[CMat; 3]) -> CMat {
    m[0].scale(v[0]) + m[1].scale(v[1]) + m[2].scale(v[2])
}

/// Hermitian eigendecomposition, eigenvalues in descending order, eigenvectors as columns.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let h = herm(m);
    let se = h.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[b].partial_cmp(&se.eigenvalues[a]).unwrap());
    let vals = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = zeros(n);
    for (j, &i) in idx.iter().enumerate() {
        vecs.set_column(j, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Rotate the columns of `v` inside a band group onto `v_ref` with the unitary polar
/// factor of the overlap `v_ref† v`.
pub fn polar_align(v_ref: &CMat, v: &CMat, min_sv: f64) -> Result<CMat> {
    let overlap = v_ref.adjoint() * v;
    let svd = overlap.svd(true, true);
    let smallest = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if smallest < min_sv {
        return Err(Error::GaugeAlignment(smallest));
    }
    let x = svd.u.unwrap();
    let y = svd.v_t.unwrap().adjoint();
    Ok(v * (y * x.adjoint()))
}

pub fn column_block(m: &CMat, start: usize, len: usize) -> CMat {
    m.columns(start, len).into_owned()
}
