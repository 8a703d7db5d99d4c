//! Closed-form reference expressions. Nothing here calls the diagonalizer, so these can
//! be compared against it directly.

use crate::field::ScalarField;
use crate::linalg::{dirac_beta, dirac_sigma, eye, pauli, zeros, CMat};
use crate::models::fw_connections;

/// Coefficients of ℏ⁰, ℏ¹, ℏ².
#[derive(Clone, Debug)]
pub struct Orders {
    pub h0: CMat,
    pub h1: CMat,
    pub h2: CMat,
}

impl Orders {
    pub fn total(&self, hbar: f64) -> CMat {
        &self.h0 + self.h1.scale(hbar) + self.h2.scale(hbar * hbar)
    }
}

fn sigma4() -> [CMat; 3] {
    [dirac_sigma(0), dirac_sigma(1), dirac_sigma(2)]
}

fn sigma2() -> [CMat; 3] {
    [pauli(0), pauli(1), pauli(2)]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn along(v: &[f64; 3], m: &[CMat; 3]) -> CMat {
    m[0].scale(v[0]) + m[1].scale(v[1]) + m[2].scale(v[2])
}

/// (P·∇)²V = Pᵢ Pⱼ ∂ᵢ∂ⱼV
fn directional2(f: &ScalarField, r: &[f64; 3], p: &[f64; 3]) -> f64 {
    let h = f.hessian(r);
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += p[i] * p[j] * h[i][j];
        }
    }
    s
}

/// Canonical Dirac energy with an electric potential, expanded to ℏ².
pub fn blount(m: f64, e: f64, v: &ScalarField, r: &[f64; 3], p: &[f64; 3]) -> Orders {
    let big_e = (dot(p, p) + m * m).sqrt();
    let beta = dirac_beta();
    let gv = v.gradient(r);
    let h0 = beta.scale(big_e) + eye(4).scale(e * v.value(r));
    let h1 = along(&cross(&gv, p), &sigma4()).scale(e / (2.0 * big_e * (big_e + m)));
    let pg = dot(p, &gv);
    let e2 = big_e * big_e;
    let quad = beta.scale(e * e * (e2 * dot(&gv, &gv) - pg * pg) / (8.0 * big_e.powi(5)));
    let lap = v.laplacian(r) / (4.0 * big_e * (big_e + m));
    let dd = (2.0 * e2 + 2.0 * big_e * m + m * m) * directional2(v, r, p)
        / (8.0 * e2 * e2 * (big_e + m).powi(2));
    let h2 = quad + eye(4).scale(e * (lap - dd));
    Orders { h0, h1, h2 }
}

/// Covariant Dirac energy: no ℏ¹ term, scalar ℏ² term.
pub fn erelat(m: f64, e: f64, v: &ScalarField, r: &[f64; 3], p: &[f64; 3]) -> Orders {
    let big_e = (dot(p, p) + m * m).sqrt();
    let h0 = dirac_beta().scale(big_e) + eye(4).scale(e * v.value(r));
    let h2 = eye(4).scale(
        e * (big_e * big_e * v.laplacian(r) - directional2(v, r, p)) / (8.0 * big_e.powi(4)),
    );
    Orders {
        h0,
        h1: zeros(4),
        h2,
    }
}

/// Nonrelativistic two-component energy, rest energy dropped.
pub fn pauli_energy(m: f64, e: f64, v: &ScalarField, r: &[f64; 3], p: &[f64; 3]) -> Orders {
    let p2 = dot(p, p);
    let h0 = eye(2).scale(p2 / (2.0 * m) - p2 * p2 / (8.0 * m.powi(3)) + e * v.value(r));
    let h1 = along(&cross(&v.gradient(r), p), &sigma2()).scale(e / (4.0 * m * m));
    let h2 = eye(2).scale(e * v.laplacian(r) / (8.0 * m * m));
    Orders { h0, h1, h2 }
}

/// Spin-orbit and Darwin coefficients of [`pauli_energy`] in units of e: 1/(4m²), 1/(8m²).
pub fn pauli_coefficients(m: f64) -> (f64, f64) {
    let e = 1.0;
    let v = ScalarField::Polynomial {
        terms: vec![
            crate::field::PolyTerm {
                coeff: 1.0,
                powers: [1, 0, 0],
            },
            crate::field::PolyTerm {
                coeff: 0.5,
                powers: [0, 2, 0],
            },
        ],
    };
    let r = [0.0; 3];
    let p = [0.0, 0.0, 1.0];
    let o = pauli_energy(m, e, &v, &r, &p);
    // ∇V × P = (1,0,0)×(0,0,1) = (0,−1,0), ∇²V = 1
    let so = -(&o.h1 * pauli(1)).trace().re / 2.0;
    let darwin = o.h2[(0, 0)].re;
    (so, darwin)
}

/// Covariant massless energy with F = 1/n: βF|P| − ℏ²P·∇F/(4|P|).
pub fn neutrino_covariant(f: &ScalarField, r: &[f64; 3], p: &[f64; 3]) -> Orders {
    let pn = dot(p, p).sqrt();
    Orders {
        h0: dirac_beta().scale(f.value(r) * pn),
        h1: zeros(4),
        h2: eye(4).scale(-dot(p, &f.gradient(r)) / (4.0 * pn)),
    }
}

/// The same energy re-expanded in canonical variables.
pub fn neutrino_canonical(f: &ScalarField, r: &[f64; 3], p: &[f64; 3]) -> Orders {
    let pn = dot(p, p).sqrt();
    let beta = dirac_beta();
    let gf = f.gradient(r);
    let h1 = &beta * along(&cross(&gf, p), &sigma4()).scale(1.0 / (2.0 * pn));
    let curv = beta.scale((dot(p, p) * f.laplacian(r) - directional2(f, r, p)) / (8.0 * pn.powi(3)));
    let h2 = curv - eye(4).scale(dot(p, &gf) / (4.0 * pn));
    Orders {
        h0: beta.scale(f.value(r) * pn),
        h1,
        h2,
    }
}

/// Θ^{rr} on helicity λ for the massless band: −λP/|P|³.
pub fn neutrino_curvature(p: &[f64; 3], lambda: f64) -> [f64; 3] {
    let p3 = dot(p, p).sqrt().powi(3);
    [-lambda * p[0] / p3, -lambda * p[1] / p3, -lambda * p[2] / p3]
}

/// |ṙ| = F(1 + ℏ²λ²/P²(|∇ln n|² − (P̂·∇ln n)²))^{1/2}
pub fn velocity_modulus(n: &ScalarField, r: &[f64; 3], p: &[f64; 3], lambda: f64, hbar: f64) -> f64 {
    let nv = n.value(r);
    let g = n.gradient(r).map(|x| x / nv);
    let p2 = dot(p, p);
    let pg = dot(p, &g);
    let transverse = dot(&g, &g) - pg * pg / p2;
    (1.0 / nv) * (1.0 + hbar * hbar * lambda * lambda / p2 * transverse).sqrt()
}

/// r − R for the Dirac model through ℏ².
pub fn dirac_position_shift(m: f64, e: f64, v: &ScalarField, r: &[f64; 3], p: &[f64; 3], hbar: f64) -> [CMat; 3] {
    let big_e = (dot(p, p) + m * m).sqrt();
    let s = sigma4();
    let beta = dirac_beta();
    let gv = v.gradient(r);
    let pg = dot(p, &gv);
    let c1 = hbar / (2.0 * big_e * (big_e + m));
    let c2 = hbar * hbar * e / 2.0 / (4.0 * big_e.powi(5));
    [0, 1, 2].map(|k| {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        (&s[j].scale(p[i]) - &s[i].scale(p[j])).scale(c1)
            + beta.scale(c2 * (big_e * big_e * gv[k] - pg * p[k]))
    })
}

/// Off-diagonal (interband) part with respect to the 2+2 Dirac split.
fn off_diagonal(m: &CMat) -> CMat {
    let mut out = m.clone();
    for i in 0..4 {
        for j in 0..4 {
            if (i < 2) == (j < 2) {
                out[(i, j)] = num_complex::Complex64::new(0.0, 0.0);
            }
        }
    }
    out
}

/// B = (βe/2E) 𝒫₋(𝒜₀^R)·∇V for the Dirac model.
pub fn dirac_b(m: f64, e: f64, v: &ScalarField, r: &[f64; 3], p: &[f64; 3]) -> CMat {
    let big_e = (dot(p, p) + m * m).sqrt();
    let a = fw_connections(p, m);
    let gv = v.gradient(r);
    let mut s = zeros(4);
    for l in 0..3 {
        s += off_diagonal(&a[l]).scale(gv[l]);
    }
    (dirac_beta() * s).scale(e / (2.0 * big_e))
}

/// ℏ𝒜₁^{P} for the Dirac model: (iℏβe/4E)(𝒫₋𝒜₀^R·∇)∇V.
pub fn dirac_ap(m: f64, e: f64, v: &ScalarField, r: &[f64; 3], p: &[f64; 3], hbar: f64) -> [CMat; 3] {
    let big_e = (dot(p, p) + m * m).sqrt();
    let a = fw_connections(p, m);
    let h = v.hessian(r);
    let pref = num_complex::Complex64::new(0.0, hbar * e / (4.0 * big_e));
    [0, 1, 2].map(|k| {
        let mut s = zeros(4);
        for l in 0..3 {
            s += off_diagonal(&a[l]).scale(h[l][k]);
        }
        (dirac_beta() * s) * pref
    })
}

/// r − R for the massless model: ℏP×Σ/(2P²).
pub fn neutrino_position_shift(p: &[f64; 3], hbar: f64) -> [CMat; 3] {
    let s = sigma4();
    let c1 = hbar / (2.0 * dot(p, p));
    [0, 1, 2].map(|k| {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        (&s[j].scale(p[i]) - &s[i].scale(p[j])).scale(c1)
    })
}
