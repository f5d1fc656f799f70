//! Points of `T^n`, the stable/unstable splitting of a hyperbolic
//! automorphism, and shadowing of its pseudo-orbits.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::toral::linalg::DenseMatrix;
use crate::toral::matrix::IntegerMatrix;
use crate::toral::spectrum::{hyperbolicity_check, shadowing_constant, HyperbolicityReport, DEFAULT_MODULUS_TOLERANCE};

/// A point of `T^n` with coordinates in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, PartialOrd, Serialize)]
pub struct ToralPoint<T> {
    coords: Vec<T>,
}

/// `x mod 1` in `[0, 1)`.
pub fn wrap<T: Scalar>(x: T) -> T {
    let r = x - x.floor();
    // x slightly below an integer can round up to exactly 1
    if r >= T::one() {
        T::zero()
    } else {
        r
    }
}

/// Representative of `x mod 1` in `[-1/2, 1/2)`.
pub fn lift<T: Scalar>(x: T) -> T {
    let half = T::of(0.5);
    wrap(x + half) - half
}

impl<T: Scalar> ToralPoint<T> {
    pub fn new(coords: Vec<T>) -> Self {
        ToralPoint {
            coords: coords.into_iter().map(wrap).collect(),
        }
    }

    pub fn origin(n: usize) -> Self {
        ToralPoint {
            coords: vec![T::zero(); n],
        }
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// `max_i min(|x_i - y_i|, 1 - |x_i - y_i|)`.
    pub fn distance(&self, other: &Self) -> T {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(&a, &b)| {
                let d = (a - b).abs();
                d.min(T::one() - d)
            })
            .fold(T::zero(), T::max)
    }

    /// Shortest displacement `other - self` in `[-1/2, 1/2)^n`.
    pub fn displacement_to(&self, other: &Self) -> Vec<T> {
        self.coords.iter().zip(&other.coords).map(|(&a, &b)| lift(b - a)).collect()
    }

    pub fn translate(&self, v: &[T]) -> Self {
        ToralPoint::new(self.coords.iter().zip(v).map(|(&a, &b)| a + b).collect())
    }

    /// `M x mod 1`.
    pub fn apply(&self, m: &DenseMatrix<T>) -> Self {
        ToralPoint::new(m.mul_vec(&self.coords))
    }

    pub fn cast<U: Scalar>(&self) -> ToralPoint<U> {
        ToralPoint {
            coords: self.coords.iter().map(|v| U::of(v.f64())).collect(),
        }
    }
}

/// Cached projectors onto the unstable and stable subspaces of a hyperbolic
/// integer matrix, with the geometric-series constant `C`.
#[derive(Clone, Debug)]
pub struct HyperbolicSplitting<T> {
    matrix: IntegerMatrix,
    a: DenseMatrix<T>,
    a_inv: DenseMatrix<T>,
    p_unstable: DenseMatrix<T>,
    p_stable: DenseMatrix<T>,
    constant: f64,
    spectrum: HyperbolicityReport,
}

impl<T: Scalar> HyperbolicSplitting<T> {
    pub fn new(a: &IntegerMatrix) -> Result<Self> {
        Self::with_tolerance(a, DEFAULT_MODULUS_TOLERANCE)
    }

    pub fn with_tolerance(a: &IntegerMatrix, tolerance: f64) -> Result<Self> {
        let spectrum = hyperbolicity_check(a, tolerance)?;
        let constant = shadowing_constant(&spectrum)?;
        let n = a.dim();
        let af = DenseMatrix::<f64>::from_integer(a);
        let id = DenseMatrix::<f64>::identity(n);
        // Cayley transform sends |lambda| > 1 to the right half plane
        let w = af.add(&id).mul(&af.sub(&id).inverse()?);
        let s = w.sign()?;
        let p_unstable = id.add(&s).scale(0.5);
        let p_stable = id.sub(&s).scale(0.5);
        Ok(HyperbolicSplitting {
            matrix: a.clone(),
            a: af.cast(),
            a_inv: DenseMatrix::<f64>::from_integer(&a.inverse()?).cast(),
            p_unstable: p_unstable.cast(),
            p_stable: p_stable.cast(),
            constant,
            spectrum,
        })
    }

    pub fn matrix(&self) -> &IntegerMatrix {
        &self.matrix
    }

    pub fn dense(&self) -> &DenseMatrix<T> {
        &self.a
    }

    pub fn dense_inverse(&self) -> &DenseMatrix<T> {
        &self.a_inv
    }

    pub fn unstable_projector(&self) -> &DenseMatrix<T> {
        &self.p_unstable
    }

    pub fn stable_projector(&self) -> &DenseMatrix<T> {
        &self.p_stable
    }

    /// `1/(1 - lambda_s) + 1/(1 - 1/lambda_u)`.
    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn spectrum(&self) -> &HyperbolicityReport {
        &self.spectrum
    }

    /// Per-step errors at or below this are rounding, not pseudo-orbit error.
    pub fn rounding_floor(&self) -> T {
        T::of(64.0) * T::epsilon() * (T::one() + self.a.inf_norm())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ToralTrace<T> {
    pub points: Vec<ToralPoint<T>>,
    /// `max_i d(y_i, x_i)`.
    pub epsilon: T,
    /// Largest per-step error `d(A x_i, x_{i+1})` of the input.
    pub input_delta: T,
    /// Largest `d(A y_i, y_{i+1})` of the output.
    pub orbit_defect: T,
    pub constant: f64,
}

/// Shadows a pseudo-orbit of a hyperbolic automorphism.
///
/// With `e_i = x_{i+1} - A x_i` (shortest representative), the correction
/// `v_i` solves `v_{i+1} = A v_i - e_i`; its stable part is summed forward
/// from `v^s_0 = 0` and its unstable part backward from `v^u_N = 0`, so both
/// recursions contract. The result `y_i = x_i + v_i` is an orbit segment
/// within `C * max|e_i|` of the input (up to projector norms).
pub fn toral_trace<T: Scalar>(
    split: &HyperbolicSplitting<T>,
    orbit: &[ToralPoint<T>],
    delta: Option<T>,
) -> Result<ToralTrace<T>> {
    let n = split.a.dim();
    if orbit.iter().any(|p| p.dim() != n) {
        return Err(Error::InvalidMatrix("point dimension differs from the matrix".into()));
    }
    let len = orbit.len();
    if len == 0 {
        return Ok(ToralTrace {
            points: Vec::new(),
            epsilon: T::zero(),
            input_delta: T::zero(),
            orbit_defect: T::zero(),
            constant: split.constant,
        });
    }
    let floor = split.rounding_floor();
    let mut errors: Vec<Vec<T>> = Vec::with_capacity(len - 1);
    let mut input_delta = T::zero();
    for i in 0..len - 1 {
        let image = orbit[i].apply(&split.a);
        let mut e = image.displacement_to(&orbit[i + 1]);
        let size = e.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        input_delta = input_delta.max(size);
        if size <= floor {
            e.iter_mut().for_each(|v| *v = T::zero());
        }
        errors.push(e);
    }
    if let Some(d) = delta {
        if input_delta >= d {
            return Err(Error::PseudoOrbitViolation(format!(
                "step error {input_delta} is not below delta = {d}"
            )));
        }
    }
    // each step is projected again so rounding never leaks into the
    // direction the recursion expands
    let mut v_stable = vec![vec![T::zero(); n]; len];
    for i in 0..len - 1 {
        let av = split.a.mul_vec(&v_stable[i]);
        let step: Vec<T> = av.iter().zip(&errors[i]).map(|(&a, &b)| a - b).collect();
        v_stable[i + 1] = split.p_stable.mul_vec(&step);
    }
    let mut v_unstable = vec![vec![T::zero(); n]; len];
    for i in (0..len - 1).rev() {
        let sum: Vec<T> = v_unstable[i + 1].iter().zip(&errors[i]).map(|(&a, &b)| a + b).collect();
        v_unstable[i] = split.p_unstable.mul_vec(&split.a_inv.mul_vec(&sum));
    }
    let points: Vec<ToralPoint<T>> = (0..len)
        .map(|i| {
            if v_stable[i].iter().chain(&v_unstable[i]).all(|v| *v == T::zero()) {
                orbit[i].clone()
            } else {
                let v: Vec<T> = v_stable[i].iter().zip(&v_unstable[i]).map(|(&a, &b)| a + b).collect();
                orbit[i].translate(&v)
            }
        })
        .collect();
    let epsilon = points.iter().zip(orbit).map(|(y, x)| y.distance(x)).fold(T::zero(), T::max);
    let orbit_defect = (0..len - 1)
        .map(|i| points[i].apply(&split.a).distance(&points[i + 1]))
        .fold(T::zero(), T::max);
    Ok(ToralTrace {
        points,
        epsilon,
        input_delta,
        orbit_defect,
        constant: split.constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cat() -> IntegerMatrix {
        IntegerMatrix::unimodular(vec![vec![2, 1], vec![1, 1]]).unwrap()
    }

    #[test]
    fn wrap_and_distance() {
        assert_eq!(wrap(-0.25f64), 0.75);
        assert_eq!(wrap(-1e-300f64), 0.0);
        let p = ToralPoint::new(vec![0.95f64, 0.5]);
        let q = ToralPoint::new(vec![0.05f64, 0.5]);
        assert!((p.distance(&q) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn projectors_split_identity() {
        let s = HyperbolicSplitting::<f64>::new(&cat()).unwrap();
        let sum = s.stable_projector().add(s.unstable_projector());
        assert!(sum.sub(&DenseMatrix::identity(2)).inf_norm() < 1e-14);
        let pp = s.stable_projector().mul(s.stable_projector());
        assert!(pp.sub(s.stable_projector()).inf_norm() < 1e-13);
        assert!(HyperbolicSplitting::<f64>::new(&IntegerMatrix::identity(2)).is_err());
    }

    #[test]
    fn exact_orbit_is_fixed() {
        let s = HyperbolicSplitting::<f64>::new(&cat()).unwrap();
        let mut orbit = vec![ToralPoint::new(vec![0.1, 0.7])];
        for _ in 0..50 {
            let next = orbit.last().unwrap().apply(s.dense());
            orbit.push(next);
        }
        let t = toral_trace(&s, &orbit, None).unwrap();
        assert_eq!(t.points, orbit);
        assert_eq!(t.epsilon, 0.0);
    }

    #[test]
    fn noisy_orbit_is_shadowed() {
        let s = HyperbolicSplitting::<f64>::new(&cat()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let delta = 1e-3;
        let mut orbit = vec![ToralPoint::new(vec![0.3, 0.2])];
        for _ in 0..100 {
            let noise: Vec<f64> = (0..2).map(|_| rng.gen_range(-0.99 * delta..0.99 * delta)).collect();
            let next = orbit.last().unwrap().apply(s.dense()).translate(&noise);
            orbit.push(next);
        }
        let t = toral_trace(&s, &orbit, Some(delta)).unwrap();
        assert!(t.epsilon <= s.constant() * delta, "{} vs {}", t.epsilon, s.constant() * delta);
        assert!(t.orbit_defect <= 1e-12);
    }

    #[test]
    fn f32_splitting() {
        let s = HyperbolicSplitting::<f32>::new(&cat()).unwrap();
        let orbit = vec![ToralPoint::new(vec![0.1f32, 0.2]), ToralPoint::new(vec![0.4f32, 0.3005])];
        let t = toral_trace(&s, &orbit, None).unwrap();
        assert!(t.orbit_defect < 1e-5);
    }
}
