//! Eigenvalue moduli of integer matrices.
//!
//! The characteristic polynomial is exact. It is split into squarefree
//! factors with multiplicities over the rationals, and each factor's roots
//! are found numerically (Aberth iteration, then Newton polishing), so
//! repeated eigenvalues never reach the root finder. Roots of unity are
//! detected exactly through `gcd(p, t^k - 1)`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::toral::matrix::IntegerMatrix;

/// Default half-width of the band around modulus 1.
pub const DEFAULT_MODULUS_TOLERANCE: f64 = 1e-9;

type Poly = Vec<BigRational>;

fn trim(p: &mut Poly) {
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

fn degree(p: &Poly) -> usize {
    p.len().saturating_sub(1)
}

fn is_zero_poly(p: &Poly) -> bool {
    p.iter().all(|c| c.is_zero())
}

fn monic(mut p: Poly) -> Poly {
    trim(&mut p);
    if let Some(lead) = p.last().cloned() {
        if !lead.is_zero() {
            for c in p.iter_mut() {
                *c = &*c / &lead;
            }
        }
    }
    p
}

fn derivative(p: &Poly) -> Poly {
    if p.len() <= 1 {
        return vec![BigRational::zero()];
    }
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
        .collect()
}

fn sub(a: &Poly, b: &Poly) -> Poly {
    let n = a.len().max(b.len());
    let mut out: Poly = (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(BigRational::zero);
            let y = b.get(i).cloned().unwrap_or_else(BigRational::zero);
            x - y
        })
        .collect();
    trim(&mut out);
    out
}

/// Quotient and remainder.
fn divmod(a: &Poly, b: &Poly) -> (Poly, Poly) {
    let mut r = a.clone();
    trim(&mut r);
    let db = degree(b);
    let lead = b[db].clone();
    if r.len() < b.len() {
        return (vec![BigRational::zero()], r);
    }
    let mut q = vec![BigRational::zero(); r.len() - db];
    while r.len() >= b.len() && !is_zero_poly(&r) {
        let shift = degree(&r) - db;
        let coef = r[degree(&r)].clone() / &lead;
        for (i, c) in b.iter().enumerate() {
            r[i + shift] = &r[i + shift] - &coef * c;
        }
        q[shift] = coef;
        r.pop();
        trim(&mut r);
    }
    (q, r)
}

fn gcd(a: &Poly, b: &Poly) -> Poly {
    let mut x = monic(a.clone());
    let mut y = monic(b.clone());
    while !is_zero_poly(&y) {
        let (_, r) = divmod(&x, &y);
        x = y;
        y = monic(r);
    }
    monic(x)
}

/// Yun's squarefree decomposition: `p = prod f_i^i`, returned as `(f_i, i)`
/// for non-constant `f_i`.
fn squarefree(p: &Poly) -> Vec<(Poly, usize)> {
    let p = monic(p.clone());
    let dp = derivative(&p);
    let mut a = gcd(&p, &dp);
    let mut b = divmod(&p, &a).0;
    let mut c = divmod(&dp, &a).0;
    let mut d = sub(&c, &derivative(&b));
    let mut out = Vec::new();
    let mut i = 1;
    while degree(&b) > 0 {
        a = gcd(&b, &d);
        if degree(&a) > 0 {
            out.push((a.clone(), i));
        }
        b = divmod(&b, &a).0;
        c = divmod(&d, &a).0;
        d = sub(&c, &derivative(&b));
        i += 1;
    }
    out
}

fn eval(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Roots of a squarefree polynomial by Aberth iteration.
fn roots(p: &Poly) -> Result<Vec<Complex64>> {
    let n = degree(p);
    if n == 0 {
        return Ok(Vec::new());
    }
    let coeffs: Vec<Complex64> = monic(p.clone())
        .iter()
        .map(|c| Complex64::new(c.to_f64().unwrap_or(f64::NAN), 0.0))
        .collect();
    if coeffs.iter().any(|c| !c.re.is_finite()) {
        return Err(Error::Numerical("characteristic polynomial coefficients overflow f64".into()));
    }
    if n == 1 {
        return Ok(vec![-coeffs[0]]);
    }
    let bound = 1.0 + coeffs[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(0.5 * bound, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let (p, dp) = eval(&coeffs, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulse: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| Complex64::new(1.0, 0.0) / (z[i] - z[j]))
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulse);
            z[i] -= step;
            moved = moved.max(step.norm() / (1.0 + z[i].norm()));
        }
        if moved < 1e-15 {
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..4 {
            let (p, dp) = eval(&coeffs, *zi);
            if dp.norm() == 0.0 {
                break;
            }
            *zi -= p / dp;
        }
    }
    if z.iter().any(|r| !r.re.is_finite() || !r.im.is_finite()) {
        return Err(Error::Numerical("root iteration diverged".into()));
    }
    Ok(z)
}

fn to_poly(c: &[BigInt]) -> Poly {
    c.iter().map(|v| BigRational::from_integer(v.clone())).collect()
}

fn euler_phi(mut n: u64) -> u64 {
    let mut result = n;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            while n.is_multiple_of(p) {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// Least `k` such that the polynomial has a primitive `k`-th root of unity
/// as a root, if any.
fn root_of_unity_order(p: &Poly) -> Option<u64> {
    let deg = degree(p) as u64;
    // phi(k) >= sqrt(k / 2), so phi(k) <= deg forces k <= 2 deg^2
    for k in 1..=(2 * deg * deg).max(2) {
        if euler_phi(k) > deg {
            continue;
        }
        let mut xk: Poly = vec![BigRational::zero(); k as usize + 1];
        xk[0] = -BigRational::one();
        xk[k as usize] = BigRational::one();
        if degree(&gcd(p, &xk)) > 0 {
            return Some(k);
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hyperbolicity {
    /// No eigenvalue modulus within the band around 1.
    Expansive,
    /// An eigenvalue is exactly a root of unity.
    NotExpansive,
    /// A modulus falls inside the band and no exact certificate exists.
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicityReport {
    pub status: Hyperbolicity,
    pub expansive: bool,
    /// Eigenvalue moduli with multiplicity, ascending.
    pub eigen_moduli: Vec<f64>,
    pub eigenvalues: Vec<Eigenvalue>,
    pub tolerance: f64,
    /// Order `k` of an exact root-of-unity eigenvalue.
    pub root_of_unity: Option<u64>,
    /// Largest modulus below 1 and smallest above 1.
    pub lambda_stable: Option<f64>,
    pub lambda_unstable: Option<f64>,
    /// Smallest distance of a modulus from 1.
    pub gap: f64,
}

/// Eigenvalue moduli and the expansiveness verdict for a toral automorphism.
pub fn hyperbolicity_check(a: &IntegerMatrix, tolerance: f64) -> Result<HyperbolicityReport> {
    if !(0.0..1.0).contains(&tolerance) {
        return Err(Error::InvalidTolerance(format!("modulus tolerance {tolerance} outside [0, 1)")));
    }
    let p = to_poly(&a.characteristic_polynomial());
    let mut eigenvalues = Vec::new();
    for (factor, mult) in squarefree(&p) {
        for z in roots(&factor)? {
            eigenvalues.push(Eigenvalue {
                re: z.re,
                im: z.im,
                modulus: z.norm(),
                multiplicity: mult,
            });
        }
    }
    eigenvalues.sort_by(|x, y| x.modulus.total_cmp(&y.modulus).then(x.re.total_cmp(&y.re)).then(x.im.total_cmp(&y.im)));
    let mut moduli: Vec<f64> = eigenvalues
        .iter()
        .flat_map(|e| std::iter::repeat_n(e.modulus, e.multiplicity))
        .collect();
    moduli.sort_by(f64::total_cmp);
    let root_of_unity = root_of_unity_order(&monic(p));
    let gap = moduli.iter().map(|m| (m - 1.0).abs()).fold(f64::INFINITY, f64::min);
    let status = if root_of_unity.is_some() {
        Hyperbolicity::NotExpansive
    } else if gap <= tolerance {
        Hyperbolicity::Indeterminate
    } else {
        Hyperbolicity::Expansive
    };
    Ok(HyperbolicityReport {
        status,
        expansive: status == Hyperbolicity::Expansive,
        lambda_stable: moduli.iter().copied().filter(|&m| m < 1.0).fold(None, |acc: Option<f64>, m| {
            Some(acc.map_or(m, |a| a.max(m)))
        }),
        lambda_unstable: moduli.iter().copied().filter(|&m| m > 1.0).fold(None, |acc: Option<f64>, m| {
            Some(acc.map_or(m, |a| a.min(m)))
        }),
        eigen_moduli: moduli,
        eigenvalues,
        tolerance,
        root_of_unity,
        gap,
    })
}

/// `1/(1 - lambda_s) + 1/(1 - 1/lambda_u)`, the geometric-series constant of
/// hyperbolic shadowing.
pub fn shadowing_constant(report: &HyperbolicityReport) -> Result<f64> {
    if report.status != Hyperbolicity::Expansive {
        return Err(Error::NotHyperbolic(format!("spectrum verdict {:?}", report.status)));
    }
    let s = report.lambda_stable.map_or(0.0, |l| 1.0 / (1.0 - l));
    let u = report.lambda_unstable.map_or(0.0, |l| 1.0 / (1.0 - 1.0 / l));
    Ok(s + u)
}
