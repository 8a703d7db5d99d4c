//! Exact Heisenberg/Weyl algebra in R_i, P_i (i = 0..3) with rational-complex
//! coefficients, ℏ-polynomial weights and constant matrix parts.
//!
//! Elements are stored in normal order (all R to the left of all P). The bracket
//! ⟨F⟩ is defined on an explicit factorization into pure-R and pure-P factors.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::CMat;

pub type Q = Complex<BigRational>;

pub const DEFAULT_DEGREE_CAP: usize = 8;

pub fn q_int(n: i64) -> Q {
    Complex::new(BigRational::from_integer(BigInt::from(n)), BigRational::zero())
}

pub fn q_frac(num: i64, den: i64) -> Q {
    Complex::new(
        BigRational::new(BigInt::from(num), BigInt::from(den)),
        BigRational::zero(),
    )
}

pub fn q_i() -> Q {
    Complex::new(BigRational::zero(), BigRational::one())
}

pub fn q_cplx(re: i64, im: i64) -> Q {
    Complex::new(
        BigRational::from_integer(BigInt::from(re)),
        BigRational::from_integer(BigInt::from(im)),
    )
}

/// Exact rational image of a finite float.
pub fn q_from_f64(x: f64) -> Q {
    Complex::new(
        BigRational::from_float(x).expect("finite float"),
        BigRational::zero(),
    )
}

pub fn q_to_c64(q: &Q) -> Complex64 {
    Complex64::new(
        q.re.to_f64().unwrap_or(f64::NAN),
        q.im.to_f64().unwrap_or(f64::NAN),
    )
}

/// (-i)^k
fn minus_i_pow(k: u32) -> Q {
    match k % 4 {
        0 => q_int(1),
        1 => q_cplx(0, -1),
        2 => q_int(-1),
        _ => q_cplx(0, 1),
    }
}

fn i_pow(k: u32) -> Q {
    match k % 4 {
        0 => q_int(1),
        1 => q_cplx(0, 1),
        2 => q_int(-1),
        _ => q_cplx(0, -1),
    }
}

fn binom(n: u32, k: u32) -> i64 {
    let mut r: i64 = 1;
    for j in 0..k as i64 {
        r = r * (n as i64 - j) / (j + 1);
    }
    r
}

fn factorial(n: u32) -> i64 {
    (1..=n as i64).product()
}

/// Exact n×n matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QMat {
    n: usize,
    data: Vec<Q>,
}

impl QMat {
    pub fn zero(n: usize) -> Self {
        QMat {
            n,
            data: vec![Q::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, q_int(1))
    }

    pub fn scalar(n: usize, q: Q) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.data[i * n + i] = q.clone();
        }
        m
    }

    pub fn from_rows(n: usize, data: Vec<Q>) -> Self {
        assert_eq!(data.len(), n * n, "QMat::from_rows size");
        QMat { n, data }
    }

    pub fn pauli(k: usize) -> Self {
        let (o, l) = (q_int(0), q_int(1));
        match k {
            0 => Self::from_rows(2, vec![o.clone(), l.clone(), l, o]),
            1 => Self::from_rows(2, vec![o.clone(), q_cplx(0, -1), q_cplx(0, 1), o]),
            2 => Self::from_rows(2, vec![l, o.clone(), o, q_int(-1)]),
            _ => panic!("pauli index"),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Q {
        &self.data[i * self.n + j]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|q| q.is_zero())
    }

    pub fn add(&self, o: &QMat) -> QMat {
        QMat {
            n: self.n,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &QMat) -> QMat {
        QMat {
            n: self.n,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: &Q) -> QMat {
        QMat {
            n: self.n,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn mul(&self, o: &QMat) -> QMat {
        let n = self.n;
        if n == 1 {
            return QMat {
                n,
                data: vec![&self.data[0] * &o.data[0]],
            };
        }
        let mut data = vec![Q::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = &self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = &o.data[k * n + j];
                    if !b.is_zero() {
                        data[i * n + j] = &data[i * n + j] + a * b;
                    }
                }
            }
        }
        QMat { n, data }
    }

    pub fn to_cmat(&self) -> CMat {
        CMat::from_fn(self.n, self.n, |i, j| q_to_c64(self.get(i, j)))
    }
}

/// R^r P^p in normal order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct WeylMonomial {
    pub r: [u32; 3],
    pub p: [u32; 3],
}

impl WeylMonomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn degree(&self) -> u32 {
        self.r.iter().sum::<u32>() + self.p.iter().sum::<u32>()
    }

    pub fn has_r(&self) -> bool {
        self.r.iter().any(|e| *e > 0)
    }

    pub fn has_p(&self) -> bool {
        self.p.iter().any(|e| *e > 0)
    }

    /// Letters of the monomial, R's first.
    pub fn letters(&self) -> Vec<Var> {
        let mut out = Vec::new();
        for i in 0..3 {
            out.extend(std::iter::repeat_n(Var::R(i), self.r[i] as usize));
        }
        for i in 0..3 {
            out.extend(std::iter::repeat_n(Var::P(i), self.p[i] as usize));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    R(usize),
    P(usize),
}

/// Finite sum of ℏ^k · M · R^r P^p.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeylExpr {
    dim: usize,
    terms: BTreeMap<(WeylMonomial, u32), QMat>,
}

impl WeylExpr {
    pub fn zero(dim: usize) -> Self {
        WeylExpr {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(m: QMat) -> Self {
        let mut e = Self::zero(m.dim());
        e.add_term(WeylMonomial::one(), 0, m);
        e
    }

    pub fn scalar(dim: usize, q: Q) -> Self {
        Self::constant(QMat::scalar(dim, q))
    }

    pub fn one(dim: usize) -> Self {
        Self::scalar(dim, q_int(1))
    }

    pub fn hbar(dim: usize) -> Self {
        let mut e = Self::zero(dim);
        e.add_term(WeylMonomial::one(), 1, QMat::identity(dim));
        e
    }

    pub fn var(dim: usize, v: Var) -> Self {
        let mut m = WeylMonomial::one();
        match v {
            Var::R(i) => m.r[i] = 1,
            Var::P(i) => m.p[i] = 1,
        }
        Self::monomial(dim, m, 0, QMat::identity(dim))
    }

    pub fn monomial(dim: usize, mono: WeylMonomial, hbar_pow: u32, m: QMat) -> Self {
        let mut e = Self::zero(dim);
        e.add_term(mono, hbar_pow, m);
        e
    }

    /// Product of letters in the given order, rewritten to normal order.
    pub fn from_word(dim: usize, letters: &[Var]) -> Self {
        letters
            .iter()
            .fold(Self::one(dim), |acc, v| &acc * &Self::var(dim, *v))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&WeylMonomial, u32, &QMat)> {
        self.terms.iter().map(|((m, k), a)| (m, *k, a))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, mono: WeylMonomial, hbar_pow: u32, m: QMat) {
        assert_eq!(m.dim(), self.dim, "matrix dimension");
        let key = (mono, hbar_pow);
        let merged = match self.terms.remove(&key) {
            Some(old) => old.add(&m),
            None => m,
        };
        if !merged.is_zero() {
            self.terms.insert(key, merged);
        }
    }

    /// Largest total R,P degree.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|(m, _)| m.degree()).max().unwrap_or(0)
    }

    pub fn hbar_degree(&self) -> u32 {
        self.terms.keys().map(|(_, k)| *k).max().unwrap_or(0)
    }

    pub fn has_r(&self) -> bool {
        self.terms.keys().any(|(m, _)| m.has_r())
    }

    pub fn has_p(&self) -> bool {
        self.terms.keys().any(|(m, _)| m.has_p())
    }

    fn check_dim(&self, o: &WeylExpr) -> Result<()> {
        if self.dim != o.dim {
            Err(Error::DimMismatch(self.dim, o.dim))
        } else {
            Ok(())
        }
    }

    pub fn try_add(&self, o: &WeylExpr) -> Result<WeylExpr> {
        self.check_dim(o)?;
        let mut out = self.clone();
        for ((m, k), a) in &o.terms {
            out.add_term(*m, *k, a.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, s: &Q) -> WeylExpr {
        let mut out = Self::zero(self.dim);
        for ((m, k), a) in &self.terms {
            out.add_term(*m, *k, a.scale(s));
        }
        out
    }

    /// Multiply every term by ℏ^k.
    pub fn times_hbar(&self, k: u32) -> WeylExpr {
        WeylExpr {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|((m, j), a)| ((*m, j + k), a.clone()))
                .collect(),
        }
    }

    /// Exact normally-ordered product.
    pub fn multiply(&self, o: &WeylExpr) -> Result<WeylExpr> {
        self.check_dim(o)?;
        let mut out = Self::zero(self.dim);
        for ((m1, k1), a) in &self.terms {
            for ((m2, k2), b) in &o.terms {
                let ab = a.mul(b);
                if ab.is_zero() {
                    continue;
                }
                // P^{m1.p} R^{m2.r} reordered index by index.
                let ranges: Vec<u32> = (0..3).map(|i| m1.p[i].min(m2.r[i])).collect();
                for j0 in 0..=ranges[0] {
                    for j1 in 0..=ranges[1] {
                        for j2 in 0..=ranges[2] {
                            let js = [j0, j1, j2];
                            let mut c: i64 = 1;
                            let mut mono = WeylMonomial::one();
                            for i in 0..3 {
                                let (b_, c_, j) = (m1.p[i], m2.r[i], js[i]);
                                c *= factorial(j) * binom(b_, j) * binom(c_, j);
                                mono.r[i] = m1.r[i] + c_ - j;
                                mono.p[i] = b_ - j + m2.p[i];
                            }
                            let kk = j0 + j1 + j2;
                            let w = &q_int(c) * &minus_i_pow(kk);
                            out.add_term(mono, k1 + k2 + kk, ab.scale(&w));
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn commutator(&self, o: &WeylExpr) -> Result<WeylExpr> {
        Ok(&self.multiply(o)? - &o.multiply(self)?)
    }

    /// Formal derivative on the normal-ordered basis.
    pub fn derivative(&self, v: Var) -> WeylExpr {
        let mut out = Self::zero(self.dim);
        for ((m, k), a) in &self.terms {
            let mut mm = *m;
            let e = match v {
                Var::R(i) => &mut mm.r[i],
                Var::P(i) => &mut mm.p[i],
            };
            if *e == 0 {
                continue;
            }
            let f = q_int(*e as i64);
            *e -= 1;
            out.add_term(mm, *k, a.scale(&f));
        }
        out
    }

    /// ∂/∂ℏ of the explicit ℏ dependence.
    pub fn d_hbar(&self) -> WeylExpr {
        let mut out = Self::zero(self.dim);
        for ((m, k), a) in &self.terms {
            if *k > 0 {
                out.add_term(*m, k - 1, a.scale(&q_int(*k as i64)));
            }
        }
        out
    }

    /// Coefficient of ℏ^k as an ℏ-free expression.
    pub fn hbar_coefficient(&self, k: u32) -> WeylExpr {
        let mut out = Self::zero(self.dim);
        for ((m, j), a) in &self.terms {
            if *j == k {
                out.add_term(*m, 0, a.clone());
            }
        }
        out
    }

    /// Numerical value of the normal-ordered symbol at a classical point.
    pub fn evaluate(&self, x: &[f64; 6], hbar: f64) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for ((m, k), a) in &self.terms {
            let mut w = hbar.powi(*k as i32);
            for i in 0..3 {
                w *= x[i].powi(m.r[i] as i32) * x[3 + i].powi(m.p[i] as i32);
            }
            out += a.to_cmat().scale(w);
        }
        out
    }

    /// Left-multiply every coefficient by a constant matrix.
    pub fn left_mat(&self, m: &QMat) -> WeylExpr {
        let mut out = Self::zero(self.dim);
        for ((mono, k), a) in &self.terms {
            out.add_term(*mono, *k, m.mul(a));
        }
        out
    }
}

impl std::ops::Add for &WeylExpr {
    type Output = WeylExpr;
    fn add(self, o: &WeylExpr) -> WeylExpr {
        self.try_add(o).expect("dimension mismatch")
    }
}

impl std::ops::Sub for &WeylExpr {
    type Output = WeylExpr;
    fn sub(self, o: &WeylExpr) -> WeylExpr {
        self.try_add(&-o).expect("dimension mismatch")
    }
}

impl std::ops::Neg for &WeylExpr {
    type Output = WeylExpr;
    fn neg(self) -> WeylExpr {
        self.scale(&q_int(-1))
    }
}

impl std::ops::Mul for &WeylExpr {
    type Output = WeylExpr;
    fn mul(self, o: &WeylExpr) -> WeylExpr {
        self.multiply(o).expect("dimension mismatch")
    }
}

fn fmt_q(q: &Q) -> String {
    let re = !q.re.is_zero();
    let im = !q.im.is_zero();
    match (re, im) {
        (true, false) => format!("{}", q.re),
        (false, true) => format!("{}i", q.im),
        (false, false) => "0".into(),
        (true, true) => {
            let sign = if q.im.is_negative() { "-" } else { "+" };
            format!("({}{}{}i)", q.re, sign, q.im.abs())
        }
    }
}

impl fmt::Display for WeylExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for ((m, k), a) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if self.dim == 1 {
                write!(f, "{}", fmt_q(a.get(0, 0)))?;
            } else {
                let rows: Vec<String> = (0..self.dim)
                    .map(|i| {
                        (0..self.dim)
                            .map(|j| fmt_q(a.get(i, j)))
                            .collect::<Vec<_>>()
                            .join(",")
                    })
                    .collect();
                write!(f, "[{}]", rows.join(";"))?;
            }
            if *k > 0 {
                write!(f, "·ħ^{k}")?;
            }
            for v in m.letters() {
                match v {
                    Var::R(i) => write!(f, "·R{i}")?,
                    Var::P(i) => write!(f, "·P{i}")?,
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorKind {
    R,
    P,
}

/// A factor declared pure-R or pure-P. Constant factors are allowed under either label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factor {
    kind: FactorKind,
    expr: WeylExpr,
}

impl Factor {
    pub fn new(kind: FactorKind, expr: WeylExpr) -> Result<Self> {
        match kind {
            FactorKind::R if expr.has_p() => Err(Error::MixedFactor {
                declared: "pure-R",
                found: "P",
            }),
            FactorKind::P if expr.has_r() => Err(Error::MixedFactor {
                declared: "pure-P",
                found: "R",
            }),
            _ => Ok(Factor { kind, expr }),
        }
    }

    pub fn constant(m: QMat) -> Self {
        Factor {
            kind: FactorKind::R,
            expr: WeylExpr::constant(m),
        }
    }

    pub fn letter(dim: usize, v: Var) -> Self {
        let kind = match v {
            Var::R(_) => FactorKind::R,
            Var::P(_) => FactorKind::P,
        };
        Factor {
            kind,
            expr: WeylExpr::var(dim, v),
        }
    }

    pub fn kind(&self) -> FactorKind {
        self.kind
    }

    pub fn expr(&self) -> &WeylExpr {
        &self.expr
    }
}

/// Sum of ordered products M₁(R)M₂(P)M₃(R)…
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderedFactorization {
    dim: usize,
    products: Vec<Vec<Factor>>,
}

fn product_of(dim: usize, fs: &[Factor]) -> WeylExpr {
    fs.iter().fold(WeylExpr::one(dim), |acc, f| &acc * &f.expr)
}

impl OrderedFactorization {
    pub fn new(dim: usize) -> Self {
        OrderedFactorization {
            dim,
            products: Vec::new(),
        }
    }

    pub fn single(dim: usize, factors: Vec<Factor>) -> Result<Self> {
        let mut f = Self::new(dim);
        f.push(factors)?;
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn products(&self) -> &[Vec<Factor>] {
        &self.products
    }

    pub fn push(&mut self, factors: Vec<Factor>) -> Result<()> {
        for f in &factors {
            if f.expr.dim() != self.dim {
                return Err(Error::DimMismatch(self.dim, f.expr.dim()));
            }
        }
        self.products.push(factors);
        Ok(())
    }

    pub fn extend(&mut self, other: OrderedFactorization) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::DimMismatch(self.dim, other.dim));
        }
        self.products.extend(other.products);
        Ok(())
    }

    /// Distribute the product FG over both sums.
    pub fn times(&self, g: &OrderedFactorization) -> Result<OrderedFactorization> {
        if g.dim != self.dim {
            return Err(Error::DimMismatch(self.dim, g.dim));
        }
        let mut out = Self::new(self.dim);
        for a in &self.products {
            for b in &g.products {
                let mut fs = a.clone();
                fs.extend(b.iter().cloned());
                out.products.push(fs);
            }
        }
        Ok(out)
    }

    /// The operator the factorization represents.
    pub fn expand(&self) -> WeylExpr {
        self.products
            .iter()
            .fold(WeylExpr::zero(self.dim), |acc, fs| &acc + &product_of(self.dim, fs))
    }

    /// ∂_ℏ acting on the explicit ℏ carried by the factors.
    pub fn d_hbar(&self) -> WeylExpr {
        let mut out = WeylExpr::zero(self.dim);
        for fs in &self.products {
            for a in 0..fs.len() {
                let d = fs[a].expr.d_hbar();
                if d.is_zero() {
                    continue;
                }
                let left = product_of(self.dim, &fs[..a]);
                let right = product_of(self.dim, &fs[a + 1..]);
                out = &out + &(&(&left * &d) * &right);
            }
        }
        out
    }

    /// ⟨F⟩: every (R-factor, P-factor) pair contributes with weight +i/2 when the
    /// R-factor stands to the left and -i/2 when it stands to the right.
    pub fn bracket(&self) -> WeylExpr {
        let half_i = Complex::new(BigRational::zero(), BigRational::new(1.into(), 2.into()));
        let mut out = WeylExpr::zero(self.dim);
        for fs in &self.products {
            let n = fs.len();
            for a in 0..n {
                for b in a + 1..n {
                    let (sign, va, vb): (i64, fn(usize) -> Var, fn(usize) -> Var) =
                        match (fs[a].kind, fs[b].kind) {
                            (FactorKind::R, FactorKind::P) => (1, Var::R, Var::P),
                            (FactorKind::P, FactorKind::R) => (-1, Var::P, Var::R),
                            _ => continue,
                        };
                    for i in 0..3 {
                        let da = fs[a].expr.derivative(va(i));
                        let db = fs[b].expr.derivative(vb(i));
                        if da.is_zero() || db.is_zero() {
                            continue;
                        }
                        let mut t = product_of(self.dim, &fs[..a]);
                        t = &t * &da;
                        t = &t * &product_of(self.dim, &fs[a + 1..b]);
                        t = &t * &db;
                        t = &t * &product_of(self.dim, &fs[b + 1..]);
                        out = &out + &t.scale(&(&half_i * &q_int(sign)));
                    }
                }
            }
        }
        out
    }
}

/// ⟨FG⟩ − [⟨F⟩G + F⟨G⟩ − (i/2)∇_P F·∇_R G + (i/2)∇_R F·∇_P G].
pub fn bracket_product_check(
    f: &OrderedFactorization,
    g: &OrderedFactorization,
) -> Result<WeylExpr> {
    let fg = f.times(g)?;
    let (ef, eg) = (f.expand(), g.expand());
    let lhs = fg.bracket();
    let mut rhs = &(&f.bracket() * &eg) + &(&ef * &g.bracket());
    let half_i = q_frac(1, 2) * q_i();
    for i in 0..3 {
        let pr = &ef.derivative(Var::P(i)) * &eg.derivative(Var::R(i));
        let rp = &ef.derivative(Var::R(i)) * &eg.derivative(Var::P(i));
        rhs = &rhs - &pr.scale(&half_i);
        rhs = &rhs + &rp.scale(&half_i);
    }
    Ok(&lhs - &rhs)
}

/// (∂_ℏF₁+⟨F₁⟩) − (∂_ℏF₂+⟨F₂⟩) for two factorizations of one operator.
pub fn invariant_derivative_check(
    f1: &OrderedFactorization,
    f2: &OrderedFactorization,
) -> Result<WeylExpr> {
    if f1.dim() != f2.dim() {
        return Err(Error::DimMismatch(f1.dim(), f2.dim()));
    }
    if f1.expand() != f2.expand() {
        return Err(Error::UnequalFactorizations);
    }
    let a = &f1.d_hbar() + &f1.bracket();
    let b = &f2.d_hbar() + &f2.bracket();
    Ok(&a - &b)
}

/// Distinct orderings of a multiset, lexicographic.
fn distinct_permutations(letters: &[Var]) -> Vec<Vec<Var>> {
    let mut cur: Vec<Var> = letters.to_vec();
    cur.sort();
    let mut out = vec![cur.clone()];
    loop {
        let n = cur.len();
        if n < 2 {
            break;
        }
        let mut i = n - 1;
        while i > 0 && cur[i - 1] >= cur[i] {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        let mut j = n - 1;
        while cur[j] <= cur[i - 1] {
            j -= 1;
        }
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
    out
}

/// Equal-weight average over all distinguishable orderings of the letters, times `coeff`
/// (which carries the ℏ power and matrix).
pub fn symmetrize_word(
    coeff: &WeylExpr,
    letters: &[Var],
    cap: usize,
) -> Result<OrderedFactorization> {
    if letters.len() > cap {
        return Err(Error::DegreeCap(letters.len(), cap));
    }
    let dim = coeff.dim();
    let perms = distinct_permutations(letters);
    let w = q_frac(1, perms.len() as i64);
    let c = Factor {
        kind: FactorKind::R,
        expr: coeff.scale(&w),
    };
    let mut out = OrderedFactorization::new(dim);
    for p in perms {
        let mut fs = vec![c.clone()];
        fs.extend(p.iter().map(|v| Factor::letter(dim, *v)));
        out.products.push(fs);
    }
    Ok(out)
}

/// Weyl quantization of a classical polynomial symbol: every monomial is replaced by
/// its fully symmetrized operator.
pub fn weyl_quantize(symbol: &WeylExpr, cap: usize) -> Result<OrderedFactorization> {
    let dim = symbol.dim();
    let mut out = OrderedFactorization::new(dim);
    for (m, k, a) in symbol.terms() {
        let coeff = WeylExpr::monomial(dim, WeylMonomial::one(), k, a.clone());
        out.extend(symmetrize_word(&coeff, &m.letters(), cap)?)?;
    }
    Ok(out)
}

/// Rewrite an operator as a sum of fully symmetrized products (with explicit ℏ terms).
pub fn to_symmetric_form(op: &WeylExpr, cap: usize) -> Result<OrderedFactorization> {
    let dim = op.dim();
    let mut rest = op.clone();
    let mut out = OrderedFactorization::new(dim);
    while !rest.is_zero() {
        let top = rest.degree();
        let (m, k, a) = rest
            .terms()
            .filter(|(m, _, _)| m.degree() == top)
            .map(|(m, k, a)| (*m, k, a.clone()))
            .next()
            .expect("nonzero remainder has a top term");
        let coeff = WeylExpr::monomial(dim, WeylMonomial::one(), k, a);
        let s = symmetrize_word(&coeff, &m.letters(), cap)?;
        rest = &rest - &s.expand();
        out.extend(s)?;
    }
    Ok(out)
}

/// Normal-ordered form as a factorization: every term becomes [ℏ^k M][R-part][P-part].
pub fn normal_form(op: &WeylExpr) -> OrderedFactorization {
    let dim = op.dim();
    let mut out = OrderedFactorization::new(dim);
    for (m, k, a) in op.terms() {
        let c = WeylExpr::monomial(dim, WeylMonomial::one(), k, a.clone());
        let rm = WeylMonomial { r: m.r, p: [0; 3] };
        let pm = WeylMonomial { r: [0; 3], p: m.p };
        out.products.push(vec![
            Factor {
                kind: FactorKind::R,
                expr: c,
            },
            Factor {
                kind: FactorKind::R,
                expr: WeylExpr::monomial(dim, rm, 0, QMat::identity(dim)),
            },
            Factor {
                kind: FactorKind::P,
                expr: WeylExpr::monomial(dim, pm, 0, QMat::identity(dim)),
            },
        ]);
    }
    out
}

/// Anti-normal form: R^c P^b = Σ_k k!·C(b,k)·C(c,k)·(iℏ)^k P^{b-k} R^{c-k} per index.
pub fn anti_normal_form(op: &WeylExpr) -> OrderedFactorization {
    let dim = op.dim();
    let mut out = OrderedFactorization::new(dim);
    for (m, k, a) in op.terms() {
        let ranges: Vec<u32> = (0..3).map(|i| m.p[i].min(m.r[i])).collect();
        for j0 in 0..=ranges[0] {
            for j1 in 0..=ranges[1] {
                for j2 in 0..=ranges[2] {
                    let js = [j0, j1, j2];
                    let mut c: i64 = 1;
                    let mut rm = WeylMonomial::one();
                    let mut pm = WeylMonomial::one();
                    for i in 0..3 {
                        c *= factorial(js[i]) * binom(m.p[i], js[i]) * binom(m.r[i], js[i]);
                        rm.r[i] = m.r[i] - js[i];
                        pm.p[i] = m.p[i] - js[i];
                    }
                    let kk = j0 + j1 + j2;
                    let w = &q_int(c) * &i_pow(kk);
                    let coeff = WeylExpr::monomial(dim, WeylMonomial::one(), k + kk, a.scale(&w));
                    out.products.push(vec![
                        Factor {
                            kind: FactorKind::R,
                            expr: coeff,
                        },
                        Factor {
                            kind: FactorKind::P,
                            expr: WeylExpr::monomial(dim, pm, 0, QMat::identity(dim)),
                        },
                        Factor {
                            kind: FactorKind::R,
                            expr: WeylExpr::monomial(dim, rm, 0, QMat::identity(dim)),
                        },
                    ]);
                }
            }
        }
    }
    out
}

/// −(ℏ/2)⟨S⟩ for the Weyl quantization S of a classical symbol, returned as the
/// ℏ¹ and ℏ² coefficients.
pub fn bracket_term_coefficients(symbol: &WeylExpr, cap: usize) -> Result<(WeylExpr, WeylExpr)> {
    let s = weyl_quantize(symbol, cap)?;
    let term = s.bracket().times_hbar(1).scale(&q_frac(-1, 2));
    Ok((term.hbar_coefficient(1), term.hbar_coefficient(2)))
}

pub mod gen {
    //! Random expressions and factorizations for property suites.

    use super::*;
    use rand::Rng;

    pub fn small_q<R: Rng>(rng: &mut R) -> Q {
        let re = rng.gen_range(-3i64..=3);
        let im = rng.gen_range(-2i64..=2);
        let den = rng.gen_range(1i64..=3);
        Complex::new(
            BigRational::new(re.into(), den.into()),
            BigRational::new(im.into(), den.into()),
        )
    }

    pub fn small_mat<R: Rng>(rng: &mut R, dim: usize) -> QMat {
        loop {
            let m = QMat::from_rows(dim, (0..dim * dim).map(|_| small_q(rng)).collect());
            if !m.is_zero() {
                return m;
            }
        }
    }

    /// Random letter using indices 0..2 so that commutators actually fire.
    pub fn letter<R: Rng>(rng: &mut R) -> Var {
        let i = rng.gen_range(0..2);
        if rng.gen_bool(0.5) {
            Var::R(i)
        } else {
            Var::P(i)
        }
    }

    /// Random pure polynomial of total degree ≤ `deg` in one kind of variable.
    pub fn pure_expr<R: Rng>(rng: &mut R, dim: usize, kind: FactorKind, deg: u32) -> WeylExpr {
        let mut e = WeylExpr::zero(dim);
        let nterms = rng.gen_range(1..=2);
        for t in 0..nterms {
            let d = if t == 0 { deg } else { rng.gen_range(0..=deg) };
            let mut m = WeylMonomial::one();
            for _ in 0..d {
                let i = rng.gen_range(0..2);
                match kind {
                    FactorKind::R => m.r[i] += 1,
                    FactorKind::P => m.p[i] += 1,
                }
            }
            let k = u32::from(rng.gen_bool(0.25));
            e.add_term(m, k, small_mat(rng, dim));
        }
        e
    }

    /// Random factorization with alternating factor kinds and total degree ≤ `max_deg`.
    pub fn factorization<R: Rng>(rng: &mut R, dim: usize, max_deg: u32) -> OrderedFactorization {
        let mut out = OrderedFactorization::new(dim);
        let nprod = rng.gen_range(1..=2);
        for _ in 0..nprod {
            let nf = rng.gen_range(1..=3u32);
            let mut budget = max_deg;
            let mut kind = if rng.gen_bool(0.5) {
                FactorKind::R
            } else {
                FactorKind::P
            };
            let mut fs = Vec::new();
            for j in 0..nf {
                let left = nf - j;
                let d = rng.gen_range(1..=(budget / left).max(1)).min(budget);
                budget -= d;
                fs.push(Factor {
                    kind,
                    expr: pure_expr(rng, dim, kind, d),
                });
                kind = match kind {
                    FactorKind::R => FactorKind::P,
                    FactorKind::P => FactorKind::R,
                };
            }
            out.products.push(fs);
        }
        out
    }

    /// A product of single letters with a leading constant matrix.
    pub fn word<R: Rng>(rng: &mut R, dim: usize, len: usize) -> (QMat, Vec<Var>) {
        (small_mat(rng, dim), (0..len).map(|_| letter(rng)).collect())
    }

    pub fn word_factorization(dim: usize, m: &QMat, letters: &[Var]) -> OrderedFactorization {
        let mut fs = vec![Factor::constant(m.clone())];
        fs.extend(letters.iter().map(|v| Factor::letter(dim, *v)));
        OrderedFactorization {
            dim,
            products: vec![fs],
        }
    }
}
