//! Central finite differences over phase-space coordinates.
//!
//! Coordinates are indexed 0..3 for R and 3..6 for P.

use crate::error::Result;
use crate::linalg::{max_abs, CMat};

pub const DEFAULT_STEP: f64 = 1e-3;

/// Values that can be linearly combined by a stencil.
pub trait Lin: Clone {
    fn lincomb(terms: &[(f64, &Self)]) -> Self;
    fn max_abs(&self) -> f64;
}

impl Lin for f64 {
    fn lincomb(terms: &[(f64, &Self)]) -> Self {
        terms.iter().map(|(w, x)| w * **x).sum()
    }
    fn max_abs(&self) -> f64 {
        self.abs()
    }
}

impl Lin for CMat {
    fn lincomb(terms: &[(f64, &Self)]) -> Self {
        let mut out = terms[0].1.scale(terms[0].0);
        for (w, m) in &terms[1..] {
            out += m.scale(*w);
        }
        out
    }
    fn max_abs(&self) -> f64 {
        max_abs(self)
    }
}

impl<T: Lin> Lin for Vec<T> {
    fn lincomb(terms: &[(f64, &Self)]) -> Self {
        (0..terms[0].1.len())
            .map(|i| {
                let parts: Vec<(f64, &T)> = terms.iter().map(|(w, v)| (*w, &v[i])).collect();
                T::lincomb(&parts)
            })
            .collect()
    }
    fn max_abs(&self) -> f64 {
        self.iter().map(|x| x.max_abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct Deriv<T> {
    /// Fourth-order estimate, or the second-order one after a fallback.
    pub value: T,
    /// |D4 - D2| on the same stencil; `None` when the fallback was used.
    pub discrepancy: Option<f64>,
}

pub fn step_for(x: f64, base: f64) -> f64 {
    base * (1.0 + x.abs())
}

fn shifted(x: &[f64; 6], k: usize, d: f64) -> [f64; 6] {
    let mut y = *x;
    y[k] += d;
    y
}

/// ∂f/∂x_k with a 4th-order central stencil, falling back to 2nd order when the
/// outer points cannot be evaluated.
pub fn partial<T, F>(f: &F, x: &[f64; 6], k: usize, base: f64) -> Result<Deriv<T>>
where
    T: Lin,
    F: Fn(&[f64; 6]) -> Result<T>,
{
    let h = step_for(x[k], base);
    let fp = f(&shifted(x, k, h))?;
    let fm = f(&shifted(x, k, -h))?;
    // differences first, so a coordinate f does not depend on gives exactly zero
    let inner = T::lincomb(&[(1.0, &fp), (-1.0, &fm)]);
    let d2 = T::lincomb(&[(0.5 / h, &inner)]);
    let outer = f(&shifted(x, k, 2.0 * h)).and_then(|a| Ok((a, f(&shifted(x, k, -2.0 * h))?)));
    match outer {
        Ok((fpp, fmm)) => {
            let s = 1.0 / (12.0 * h);
            let wide = T::lincomb(&[(1.0, &fpp), (-1.0, &fmm)]);
            let d4 = T::lincomb(&[(8.0 * s, &inner), (-s, &wide)]);
            let disc = T::lincomb(&[(1.0, &d4), (-1.0, &d2)]).max_abs();
            Ok(Deriv {
                value: d4,
                discrepancy: Some(disc),
            })
        }
        Err(_) => Ok(Deriv {
            value: d2,
            discrepancy: None,
        }),
    }
}

/// All six partials; the second value is the largest Richardson discrepancy seen.
pub fn gradient6<T, F>(f: &F, x: &[f64; 6], base: f64) -> Result<(Vec<T>, f64)>
where
    T: Lin,
    F: Fn(&[f64; 6]) -> Result<T>,
{
    let mut out = Vec::with_capacity(6);
    let mut worst: f64 = 0.0;
    for k in 0..6 {
        let d = partial(f, x, k, base)?;
        worst = worst.max(d.discrepancy.unwrap_or(0.0));
        out.push(d.value);
    }
    Ok((out, worst))
}

/// Derivative of a scalar function of one variable, same stencil.
pub fn derivative1<F: Fn(f64) -> f64>(f: F, x: f64, base: f64) -> f64 {
    let h = step_for(x, base);
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivative_exactish() {
        let f = |y: &[f64; 6]| -> Result<f64> { Ok(y[0].powi(3) + y[4] * y[0]) };
        let x = [0.7, 0.0, 0.0, 0.0, 2.0, 0.0];
        let d = partial(&f, &x, 0, DEFAULT_STEP).unwrap();
        assert!((d.value - (3.0 * 0.49 + 2.0)).abs() < 1e-10);
        assert!(d.discrepancy.unwrap() < 1e-5);
    }

    #[test]
    fn fallback_when_outer_points_fail() {
        let f = |y: &[f64; 6]| -> Result<f64> {
            if y[3] > 1.003 {
                Err(crate::Error::MomentumUnderflow(0.0))
            } else {
                Ok(y[3] * y[3])
            }
        };
        let x = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        let d = partial(&f, &x, 3, DEFAULT_STEP).unwrap();
        assert!(d.discrepancy.is_none());
        assert!((d.value - 2.0).abs() < 1e-9);
    }
}
