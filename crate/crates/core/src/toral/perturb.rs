//! Generator-wise perturbations `S_a = T_a + p_a (mod 1)` of a toral action
//! by finite Fourier displacement fields.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::scalar::Scalar;
use crate::toral::action::ToralActionSpec;
use crate::toral::linalg::DenseMatrix;
use crate::toral::matrix::IntegerMatrix;
use crate::toral::torus::ToralPoint;

/// Number of Fourier modes per generator.
pub const FOURIER_TERMS: usize = 3;
/// Largest absolute wave-vector entry.
pub const MAX_FREQUENCY: i64 = 2;
/// Bound on `||M^{-1}||_inf * L_p` keeping each perturbed map invertible
/// with a contracting inverse iteration.
pub const LIPSCHITZ_BOUND: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourierTerm {
    pub wave: Vec<i64>,
    pub phase: f64,
    /// One coefficient per output coordinate.
    pub coefficients: Vec<f64>,
}

/// `p(x)_i = sum_t c_{t,i} sin(2 pi <k_t, x> + phi_t)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourierDisplacement {
    pub terms: Vec<FourierTerm>,
}

impl FourierDisplacement {
    pub fn zero() -> Self {
        FourierDisplacement { terms: Vec::new() }
    }

    /// Random modes scaled so the sup norm bound `max_i sum_t |c_{t,i}|`
    /// equals `amplitude`. The same seed at different amplitudes gives
    /// proportional fields.
    pub fn random<R: Rng>(dim: usize, amplitude: f64, rng: &mut R) -> Self {
        let mut terms = Vec::with_capacity(FOURIER_TERMS);
        for _ in 0..FOURIER_TERMS {
            let wave = loop {
                let w: Vec<i64> = (0..dim).map(|_| rng.gen_range(-MAX_FREQUENCY..=MAX_FREQUENCY)).collect();
                if w.iter().any(|&k| k != 0) {
                    break w;
                }
            };
            let phase = rng.gen_range(0.0..TAU);
            let coefficients = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            terms.push(FourierTerm {
                wave,
                phase,
                coefficients,
            });
        }
        let mut field = FourierDisplacement { terms };
        let bound = field.sup_bound();
        if amplitude == 0.0 || bound == 0.0 {
            return FourierDisplacement::zero();
        }
        let s = amplitude / bound;
        for t in &mut field.terms {
            t.coefficients.iter_mut().for_each(|c| *c *= s);
        }
        field
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coefficients.iter().all(|&c| c == 0.0))
    }

    /// `max_i sum_t |c_{t,i}|`, an upper bound for `sup |p|_inf`.
    pub fn sup_bound(&self) -> f64 {
        let dim = self.terms.first().map_or(0, |t| t.coefficients.len());
        (0..dim)
            .map(|i| self.terms.iter().map(|t| t.coefficients[i].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Lipschitz constant for the sup norm: `max_i sum_t |c_{t,i}| 2 pi |k_t|_1`.
    pub fn lipschitz(&self) -> f64 {
        let dim = self.terms.first().map_or(0, |t| t.coefficients.len());
        (0..dim)
            .map(|i| {
                self.terms
                    .iter()
                    .map(|t| t.coefficients[i].abs() * TAU * t.wave.iter().map(|k| k.unsigned_abs() as f64).sum::<f64>())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); x.len()];
        for t in &self.terms {
            let arg = t
                .wave
                .iter()
                .zip(x)
                .fold(T::of(t.phase), |acc, (&k, &xi)| acc + T::of(TAU * k as f64) * xi);
            let s = arg.sin();
            for (o, &c) in out.iter_mut().zip(&t.coefficients) {
                *o += T::of(c) * s;
            }
        }
        out
    }
}

/// One map of the symmetric generating set: a perturbed base generator or
/// the inverse of one.
#[derive(Clone, Debug)]
struct GeneratorMap<T> {
    matrix: DenseMatrix<T>,
    field: usize,
    inverted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PerturbationSummary {
    pub amplitude: f64,
    pub seed: u64,
    pub lipschitz: f64,
    pub generators: Vec<String>,
    pub fields: Vec<FourierDisplacement>,
}

/// `S_b(x) = M_b x + p_b(x) mod 1` for each base generator `b` of a
/// generating set, with `S_{b^{-1}} = S_b^{-1}` solved by fixed-point
/// iteration and `S_g` composed along words. For groups with relations
/// this is only an approximate action; see [`PerturbedToralAction::relation_defect`].
#[derive(Clone, Debug)]
pub struct PerturbedToralAction<T> {
    base: ToralActionSpec,
    group: GroupSpec,
    amplitude: f64,
    seed: u64,
    fields: Vec<FourierDisplacement>,
    maps: Vec<GeneratorMap<T>>,
    lipschitz: f64,
}

/// Perturbs the family's canonical generators.
pub fn perturb_action<T: Scalar>(base: &ToralActionSpec, amplitude: f64, seed: u64) -> Result<PerturbedToralAction<T>> {
    PerturbedToralAction::new(base, &GroupSpec::standard(base.family()), amplitude, seed)
}

impl<T: Scalar> PerturbedToralAction<T> {
    /// Perturbs the base generators of `group`, which must belong to the
    /// family of `base`.
    pub fn new(base: &ToralActionSpec, group: &GroupSpec, amplitude: f64, seed: u64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::InvalidTolerance(format!("amplitude {amplitude} must be finite and non-negative")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fields: Vec<FourierDisplacement> = group
            .base_generators()
            .iter()
            .map(|_| FourierDisplacement::random(base.dim(), amplitude, &mut rng))
            .collect();
        Self::with_fields(base, group, fields, amplitude, seed)
    }

    /// Explicit displacement fields, one per base generator of `group`.
    pub fn with_fields(
        base: &ToralActionSpec,
        group: &GroupSpec,
        fields: Vec<FourierDisplacement>,
        amplitude: f64,
        seed: u64,
    ) -> Result<Self> {
        if group.family() != base.family() {
            return Err(Error::FamilyMismatch(format!(
                "action of {} with generators of {}",
                base.family().name(),
                group.family().name()
            )));
        }
        let bases = group.base_generators();
        if fields.len() != bases.len() {
            return Err(Error::InvalidGenerators(format!(
                "{} displacement fields for {} generators",
                fields.len(),
                bases.len()
            )));
        }
        let mut lipschitz: f64 = 0.0;
        let mut base_mats = Vec::with_capacity(bases.len());
        for (b, field) in bases.iter().zip(&fields) {
            if field.terms.iter().any(|t| t.wave.len() != base.dim() || t.coefficients.len() != base.dim()) {
                return Err(Error::InvalidMatrix("displacement field has the wrong dimension".into()));
            }
            let m = base.matrix_of(b)?;
            let inv = m.inverse()?;
            let lp = field.lipschitz();
            let contraction = inv.inf_norm() as f64 * lp;
            if contraction >= LIPSCHITZ_BOUND || lp >= LIPSCHITZ_BOUND {
                return Err(Error::InvalidTolerance(format!(
                    "amplitude too large: ||M^-1|| L_p = {contraction:.3e} for {} (bound {LIPSCHITZ_BOUND})",
                    group.format(b)
                )));
            }
            lipschitz = lipschitz.max(lp);
            base_mats.push((m, inv));
        }
        let mut maps = Vec::with_capacity(group.generators().len());
        for g in group.generators() {
            let inv_g = group.inverse(g)?;
            let (field, inverted) = if let Some(i) = bases.iter().position(|b| b == g) {
                (i, false)
            } else if let Some(i) = bases.iter().position(|b| *b == inv_g) {
                (i, true)
            } else {
                return Err(Error::InvalidGenerators(format!("{} has no base representative", group.format(g))));
            };
            let (m, inv) = &base_mats[field];
            let m: &IntegerMatrix = if inverted { inv } else { m };
            maps.push(GeneratorMap {
                matrix: DenseMatrix::from_integer(m),
                field,
                inverted,
            });
        }
        Ok(PerturbedToralAction {
            base: base.clone(),
            group: group.clone(),
            amplitude,
            seed,
            fields,
            maps,
            lipschitz,
        })
    }

    pub fn base(&self) -> &ToralActionSpec {
        &self.base
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn fields(&self) -> &[FourierDisplacement] {
        &self.fields
    }

    /// Largest Lipschitz constant among the displacement fields.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn is_unperturbed(&self) -> bool {
        self.fields.iter().all(FourierDisplacement::is_zero)
    }

    pub fn summary(&self) -> PerturbationSummary {
        PerturbationSummary {
            amplitude: self.amplitude,
            seed: self.seed,
            lipschitz: self.lipschitz,
            generators: self.group.base_generators().iter().map(|g| self.group.format(g)).collect(),
            fields: self.fields.clone(),
        }
    }

    /// The unperturbed map `T_a` of generator index `a` of the symmetric set.
    pub fn base_generator(&self, a: usize, x: &ToralPoint<T>) -> ToralPoint<T> {
        x.apply(&self.maps[a].matrix)
    }

    /// `S_a x` for generator index `a` of the symmetric generating set.
    pub fn generator(&self, a: usize, x: &ToralPoint<T>) -> ToralPoint<T> {
        let map = &self.maps[a];
        let field = &self.fields[map.field];
        if field.is_zero() {
            return x.apply(&map.matrix);
        }
        if !map.inverted {
            let p = field.eval(x.coords());
            let mx = map.matrix.mul_vec(x.coords());
            return ToralPoint::new(mx.iter().zip(&p).map(|(&a, &b)| a + b).collect());
        }
        // S_b y = x  <=>  y = M_b^{-1} (x - p_b(y)); a contraction in y
        let target = x.coords();
        let mut y = map.matrix.mul_vec(target);
        let tol = T::of(4.0) * T::epsilon();
        for _ in 0..200 {
            let p = field.eval(&y);
            let rhs: Vec<T> = target.iter().zip(&p).map(|(&a, &b)| a - b).collect();
            let next = map.matrix.mul_vec(&rhs);
            let change = next.iter().zip(&y).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
            y = next;
            if change <= tol {
                break;
            }
        }
        ToralPoint::new(y)
    }

    /// `S_g x` for the word `[a_1, .., a_n]` (`g = a_1 ... a_n`), applied
    /// right to left.
    pub fn word(&self, word: &[usize], x: &ToralPoint<T>) -> ToralPoint<T> {
        word.iter().rev().fold(x.clone(), |acc, &a| self.generator(a, &acc))
    }

    pub fn base_word(&self, word: &[usize], x: &ToralPoint<T>) -> ToralPoint<T> {
        word.iter().rev().fold(x.clone(), |acc, &a| self.base_generator(a, &acc))
    }

    /// Word in generator indices for an element; errors if some letter of a
    /// geodesic is outside the symmetric generating set.
    pub fn word_for(&self, g: &GroupElement, max_radius: u32) -> Result<Vec<usize>> {
        let ball = self.group.ball(max_radius)?;
        let i = ball.position(g).ok_or_else(|| Error::NotFound {
            element: self.group.format(g),
            max_radius,
        })?;
        Ok(ball.geodesic(i))
    }

    /// `sup_x max_a d(T_a x, S_a x)` over the given points, for the base
    /// generators and for the full symmetric set.
    pub fn distance_to_base(&self, points: &[ToralPoint<T>]) -> (T, T) {
        let mut base = T::zero();
        let mut symmetric = T::zero();
        for x in points {
            for (a, map) in self.maps.iter().enumerate() {
                let d = self.base_generator(a, x).distance(&self.generator(a, x));
                symmetric = symmetric.max(d);
                if !map.inverted {
                    base = base.max(d);
                }
            }
        }
        (base, symmetric)
    }

    /// Largest failure of the defining relations over the given points, as
    /// `(relation, sup_x d(lhs x, rhs x))`. Without perturbation the maps
    /// are the base action, whose relations hold as exact matrix identities,
    /// so the defect is reported as zero rather than as rounding noise.
    pub fn relation_defect(&self, points: &[ToralPoint<T>]) -> Result<Vec<(String, T)>> {
        let fam = self.base.family();
        let canon = fam.canonical_generators();
        let idx = |g: &GroupElement| -> Result<Vec<usize>> {
            match self.group.generators().iter().position(|h| h == g) {
                Some(i) => Ok(vec![i]),
                None => self.word_for(g, 16),
            }
        };
        let words = canon.iter().map(idx).collect::<Result<Vec<_>>>()?;
        let mut relations: Vec<(String, Vec<usize>, Vec<usize>)> = Vec::new();
        match fam {
            crate::group::GroupFamily::IntegerLattice(d) => {
                for i in 0..d {
                    for j in i + 1..d {
                        relations.push((
                            format!("e{}e{} = e{}e{}", i + 1, j + 1, j + 1, i + 1),
                            [words[i].clone(), words[j].clone()].concat(),
                            [words[j].clone(), words[i].clone()].concat(),
                        ));
                    }
                }
            }
            crate::group::GroupFamily::HeisenbergZ => {
                let (a, b, c) = (&words[0], &words[1], &words[2]);
                relations.push(("ac = ca".into(), [a.clone(), c.clone()].concat(), [c.clone(), a.clone()].concat()));
                relations.push(("bc = cb".into(), [b.clone(), c.clone()].concat(), [c.clone(), b.clone()].concat()));
                relations.push((
                    "ab = bac".into(),
                    [a.clone(), b.clone()].concat(),
                    [b.clone(), a.clone(), c.clone()].concat(),
                ));
            }
            crate::group::GroupFamily::CyclicFinite(n) => {
                if let Some(a) = words.first() {
                    relations.push((format!("a^{n} = 1"), a.repeat(n as usize), Vec::new()));
                }
            }
            crate::group::GroupFamily::FreeGroup(_) => {}
        }
        let exact = self.is_unperturbed();
        Ok(relations
            .into_iter()
            .map(|(name, lhs, rhs)| {
                if exact {
                    return (name, T::zero());
                }
                let d = points
                    .iter()
                    .map(|x| self.word(&lhs, x).distance(&self.word(&rhs, x)))
                    .fold(T::zero(), T::max);
                (name, d)
            })
            .collect())
    }
}

/// `side^n` grid points for `n <= 2`; otherwise `side^2` points of the
/// Kronecker sequence with square roots of primes as frequencies.
pub fn sample_points<T: Scalar>(dim: usize, side: usize) -> Vec<ToralPoint<T>> {
    if dim == 0 || side == 0 {
        return Vec::new();
    }
    if dim <= 2 {
        let total = side.pow(dim as u32);
        return (0..total)
            .map(|mut i| {
                let coords = (0..dim)
                    .map(|_| {
                        let c = i % side;
                        i /= side;
                        T::of(c as f64 / side as f64)
                    })
                    .collect();
                ToralPoint::new(coords)
            })
            .collect();
    }
    const PRIMES: [f64; 16] = [2., 3., 5., 7., 11., 13., 17., 19., 23., 29., 31., 37., 41., 43., 47., 53.];
    (0..side * side)
        .map(|i| {
            let coords = (0..dim)
                .map(|j| {
                    let alpha = PRIMES[j % PRIMES.len()].sqrt() * (1 + j / PRIMES.len()) as f64;
                    let v = (i as f64 + 0.5) * alpha;
                    T::of(v - v.floor())
                })
                .collect();
            ToralPoint::new(coords)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupFamily;
    use crate::toral::action::build_heisenberg_example;

    fn cat() -> IntegerMatrix {
        IntegerMatrix::unimodular(vec![vec![2, 1], vec![1, 1]]).unwrap()
    }

    #[test]
    fn zero_amplitude_is_exact() {
        let t = ToralActionSpec::cyclic(cat()).unwrap();
        let s = perturb_action::<f64>(&t, 0.0, 1).unwrap();
        assert!(s.is_unperturbed());
        let pts = sample_points::<f64>(2, 8);
        assert_eq!(s.distance_to_base(&pts), (0.0, 0.0));
        let h = build_heisenberg_example(&cat(), &cat()).unwrap();
        let s = perturb_action::<f64>(&h, 0.0, 1).unwrap();
        let pts = sample_points::<f64>(6, 4);
        assert!(s.relation_defect(&pts).unwrap().iter().all(|(_, d)| *d == 0.0));
    }

    #[test]
    fn amplitude_bounds_distance() {
        let t = ToralActionSpec::cyclic(cat()).unwrap();
        let s = perturb_action::<f64>(&t, 1e-3, 1).unwrap();
        let pts = sample_points::<f64>(2, 32);
        let (base, _) = s.distance_to_base(&pts);
        assert!(base <= 1e-3 && base > 1e-4);
    }

    #[test]
    fn inverse_generator_inverts() {
        let t = ToralActionSpec::cyclic(cat()).unwrap();
        let s = perturb_action::<f64>(&t, 1e-3, 4).unwrap();
        let fwd = s.group().generators().iter().position(|g| *g == GroupElement::Lattice(vec![1])).unwrap();
        let back = 1 - fwd;
        for x in sample_points::<f64>(2, 6) {
            let y = s.generator(back, &s.generator(fwd, &x));
            assert!(y.distance(&x) < 1e-14);
        }
    }

    #[test]
    fn oversized_amplitude_rejected() {
        let t = ToralActionSpec::cyclic(cat()).unwrap();
        assert!(matches!(perturb_action::<f64>(&t, 0.1, 1), Err(Error::InvalidTolerance(_))));
    }

    #[test]
    fn lattice_relation_defect_grows_with_amplitude() {
        let t = ToralActionSpec::new(GroupFamily::IntegerLattice(2), vec![cat(), cat().inverse().unwrap()]).unwrap();
        let pts = sample_points::<f64>(2, 8);
        let small = perturb_action::<f64>(&t, 1e-5, 2).unwrap().relation_defect(&pts).unwrap()[0].1;
        let large = perturb_action::<f64>(&t, 1e-3, 2).unwrap().relation_defect(&pts).unwrap()[0].1;
        assert!(small > 0.0 && large > small);
    }

    #[test]
    fn kronecker_points_fill_the_torus() {
        let pts = sample_points::<f64>(6, 10);
        assert_eq!(pts.len(), 100);
        assert!(pts.iter().all(|p| p.coords().iter().all(|&c| (0.0..1.0).contains(&c))));
    }
}
