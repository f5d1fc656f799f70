//! Sampled conjugacy `f` with `T_g f = f S_g` between a hyperbolic toral
//! action `T` and a perturbation `S`: `f(x)` is the point whose `T`-orbit
//! shadows the `S`-orbit of `x` along a hyperbolic generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::toral::action::ToralActionSpec;
use crate::toral::perturb::{sample_points, PerturbedToralAction};
use crate::toral::torus::{toral_trace, HyperbolicSplitting, ToralPoint};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjugacyOptions {
    /// Orbit window `-W..=W` along the hyperbolic generator, and the longest
    /// word in the residual table.
    pub word_budget: usize,
    /// Grid side: `grid^n` points for `n <= 2`, else `grid^2` quasi-random points.
    pub grid: usize,
    /// Points used for the per-word-length residual table.
    pub table_points: usize,
    /// Random reduced words per length in the table (non-cyclic groups).
    pub table_words: usize,
    /// Images closer than this count as a collision in the injectivity probe.
    pub collision_tolerance: f64,
    pub seed: u64,
}

impl ConjugacyOptions {
    pub fn new(word_budget: usize, grid: usize) -> Self {
        ConjugacyOptions {
            word_budget,
            grid,
            table_points: 64,
            table_words: 4,
            collision_tolerance: 1e-9,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneratorResidual<T> {
    pub generator: String,
    /// `sup_x d(T_g f(x), f(S_g x))`.
    pub sup_residual: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WordLengthResidual<T> {
    pub length: usize,
    pub words: usize,
    pub points: usize,
    pub sup_residual: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InjectivityProbe<T> {
    /// Pairs are compared only when `d(x, y) >= separation`.
    pub separation: T,
    pub collision_tolerance: f64,
    pub pairs_checked: u64,
    pub collisions: u64,
    /// Smallest `d(f(x), f(y))` among checked pairs.
    pub min_image_distance: Option<T>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConjugacySample<T> {
    pub dimension: usize,
    pub grid: usize,
    /// `1 / grid`.
    pub resolution: f64,
    pub quasi_random: bool,
    pub word_budget: usize,
    pub amplitude: f64,
    pub hyperbolic_generator: String,
    /// `C` of the hyperbolic generator's splitting.
    pub constant: f64,
    /// Largest step error `d(T_b x_k, x_{k+1})` over all sampled `S`-orbits.
    pub input_delta: T,
    /// `C * input_delta`.
    pub shadowing_bound: f64,
    pub table: Vec<(ToralPoint<T>, ToralPoint<T>)>,
    /// `max_x d(f(x), x)`.
    pub sup_displacement: T,
    /// Residual along the hyperbolic generator and its inverse.
    pub hyperbolic_residual: T,
    pub equivariance_residuals: Vec<GeneratorResidual<T>>,
    pub word_table: Vec<WordLengthResidual<T>>,
    pub relation_defect: Vec<(String, T)>,
    /// Largest `d(A y_k, y_{k+1})` among the traced orbits.
    pub trace_defect: T,
    pub injectivity: InjectivityProbe<T>,
    pub identity: bool,
}

impl<T: Scalar> ConjugacySample<T> {
    /// Largest relation defect, zero for free and rank-one groups.
    pub fn max_relation_defect(&self) -> T {
        self.relation_defect.iter().map(|(_, d)| *d).fold(T::zero(), T::max)
    }

    pub fn max_equivariance_residual(&self) -> T {
        self.equivariance_residuals.iter().map(|r| r.sup_residual).fold(T::zero(), T::max)
    }

    /// `x_1..x_n, f_1..f_n, displacement` per sample.
    pub fn to_csv(&self) -> String {
        let n = self.dimension;
        let mut out = String::new();
        let head: Vec<String> = (1..=n)
            .map(|i| format!("x{i}"))
            .chain((1..=n).map(|i| format!("f{i}")))
            .chain(std::iter::once("displacement".to_string()))
            .collect();
        out.push_str(&head.join(","));
        out.push('\n');
        for (x, fx) in &self.table {
            let row: Vec<String> = x
                .coords()
                .iter()
                .chain(fx.coords())
                .map(|v| format!("{:e}", v.f64()))
                .chain(std::iter::once(format!("{:e}", x.distance(fx).f64())))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Computes `f` on the grid with default table options.
pub fn compute_conjugacy<T: Scalar>(
    t: &ToralActionSpec,
    s: &PerturbedToralAction<T>,
    word_budget: usize,
    grid: usize,
) -> Result<ConjugacySample<T>> {
    compute_conjugacy_with(t, s, &ConjugacyOptions::new(word_budget, grid))
}

struct Tracer<'a, T> {
    s: &'a PerturbedToralAction<T>,
    split: HyperbolicSplitting<T>,
    forward: usize,
    backward: usize,
    window: usize,
}

impl<T: Scalar> Tracer<'_, T> {
    /// `(f(x), step error, orbit defect)`.
    fn conjugate(&self, x: &ToralPoint<T>) -> Result<(ToralPoint<T>, T, T)> {
        let w = self.window;
        let mut orbit = vec![x.clone(); 2 * w + 1];
        for k in (0..w).rev() {
            orbit[k] = self.s.generator(self.backward, &orbit[k + 1]);
        }
        for k in w + 1..=2 * w {
            orbit[k] = self.s.generator(self.forward, &orbit[k - 1]);
        }
        let trace = toral_trace(&self.split, &orbit, None)?;
        Ok((trace.points[w].clone(), trace.input_delta, trace.orbit_defect))
    }
}

pub fn compute_conjugacy_with<T: Scalar>(
    t: &ToralActionSpec,
    s: &PerturbedToralAction<T>,
    opts: &ConjugacyOptions,
) -> Result<ConjugacySample<T>> {
    if s.base() != t {
        return Err(Error::FamilyMismatch("perturbation is not of the given action".into()));
    }
    if opts.grid == 0 || opts.word_budget == 0 {
        return Err(Error::InvalidTolerance("grid and word budget must be positive".into()));
    }
    let group = s.group();
    let gens = group.generators();
    let mut chosen = None;
    for b in group.base_generators() {
        let m = t.matrix_of(b)?;
        if let Ok(split) = HyperbolicSplitting::<T>::new(&m) {
            let forward = gens.iter().position(|g| g == b).expect("base generator in set");
            let inv = group.inverse(b)?;
            let backward = gens.iter().position(|g| *g == inv).expect("symmetric set");
            chosen = Some((group.format(b), split, forward, backward));
            break;
        }
    }
    let (hyperbolic_generator, split, forward, backward) =
        chosen.ok_or_else(|| Error::NotHyperbolic("no generator acts by a hyperbolic matrix".into()))?;
    let constant = split.constant();
    let tracer = Tracer {
        s,
        split,
        forward,
        backward,
        window: opts.word_budget,
    };

    let dim = t.dim();
    let points = sample_points::<T>(dim, opts.grid);
    let traced: Vec<(ToralPoint<T>, T, T)> =
        points.par_iter().map(|x| tracer.conjugate(x)).collect::<Result<_>>()?;
    let images: Vec<ToralPoint<T>> = traced.iter().map(|(f, _, _)| f.clone()).collect();
    let mut input_delta = T::zero();
    let mut trace_defect = T::zero();
    for (_, d, o) in &traced {
        input_delta = input_delta.max(*d);
        trace_defect = trace_defect.max(*o);
    }
    let sup_displacement = points
        .iter()
        .zip(&images)
        .map(|(x, f)| x.distance(f))
        .fold(T::zero(), T::max);
    let identity = points.iter().zip(&images).all(|(x, f)| x == f);

    let mut equivariance_residuals = Vec::with_capacity(gens.len());
    let mut hyperbolic_residual = T::zero();
    for (a, g) in gens.iter().enumerate() {
        let sup_residual = points
            .par_iter()
            .zip(&images)
            .map(|(x, fx)| -> Result<T> {
                let (f_sx, _, _) = tracer.conjugate(&s.generator(a, x))?;
                Ok(s.base_generator(a, fx).distance(&f_sx))
            })
            .collect::<Result<Vec<T>>>()?
            .into_iter()
            .fold(T::zero(), T::max);
        if a == forward || a == backward {
            hyperbolic_residual = hyperbolic_residual.max(sup_residual);
        }
        equivariance_residuals.push(GeneratorResidual {
            generator: group.format(g),
            sup_residual,
        });
    }

    // Long words amplify the rounding in f(x) by up to ||T_g||, so the table
    // is indicative; the generator residuals above are the sharp check.
    let stride = (points.len() / opts.table_points.max(1)).max(1);
    let table_idx: Vec<usize> = (0..points.len()).step_by(stride).take(opts.table_points).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut word_table = Vec::with_capacity(opts.word_budget);
    let cyclic_z = gens.len() == 2;
    for length in 1..=opts.word_budget {
        let words: Vec<Vec<usize>> = if cyclic_z {
            vec![vec![forward; length], vec![backward; length]]
        } else {
            (0..opts.table_words).map(|_| random_reduced_word(s, length, &mut rng)).collect()
        };
        let sup_residual = words
            .par_iter()
            .map(|word| -> Result<T> {
                let mut m = T::zero();
                for &i in &table_idx {
                    let (f_sx, _, _) = tracer.conjugate(&s.word(word, &points[i]))?;
                    m = m.max(s.base_word(word, &images[i]).distance(&f_sx));
                }
                Ok(m)
            })
            .collect::<Result<Vec<T>>>()?
            .into_iter()
            .fold(T::zero(), T::max);
        word_table.push(WordLengthResidual {
            length,
            words: words.len(),
            points: table_idx.len(),
            sup_residual,
        });
    }

    let relation_defect = s.relation_defect(&points)?;
    let injectivity = injectivity_probe(&points, &images, sup_displacement + sup_displacement, opts.collision_tolerance);

    Ok(ConjugacySample {
        dimension: dim,
        grid: opts.grid,
        resolution: 1.0 / opts.grid as f64,
        quasi_random: dim > 2,
        word_budget: opts.word_budget,
        amplitude: s.amplitude(),
        hyperbolic_generator,
        constant,
        input_delta,
        shadowing_bound: constant * input_delta.f64(),
        table: points.into_iter().zip(images).collect(),
        sup_displacement,
        hyperbolic_residual,
        equivariance_residuals,
        word_table,
        relation_defect,
        trace_defect,
        injectivity,
        identity,
    })
}

fn random_reduced_word<T: Scalar, R: Rng>(s: &PerturbedToralAction<T>, length: usize, rng: &mut R) -> Vec<usize> {
    let group = s.group();
    let gens = group.generators();
    let inverse_of: Vec<usize> = gens
        .iter()
        .map(|g| {
            let inv = group.inverse(g).expect("valid generator");
            gens.iter().position(|h| *h == inv).expect("symmetric set")
        })
        .collect();
    let mut word: Vec<usize> = Vec::with_capacity(length);
    while word.len() < length {
        let a = rng.gen_range(0..gens.len());
        if word.last().is_some_and(|&prev| inverse_of[prev] == a) {
            continue;
        }
        word.push(a);
    }
    word
}

/// Compares every pair of samples at least `separation` apart.
pub fn injectivity_probe<T: Scalar>(
    points: &[ToralPoint<T>],
    images: &[ToralPoint<T>],
    separation: T,
    collision_tolerance: f64,
) -> InjectivityProbe<T> {
    let tol = T::of(collision_tolerance);
    let (pairs_checked, collisions, min_image_distance) = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut checked = 0u64;
            let mut hits = 0u64;
            let mut min: Option<T> = None;
            for j in i + 1..points.len() {
                if points[i].distance(&points[j]) < separation {
                    continue;
                }
                checked += 1;
                let d = images[i].distance(&images[j]);
                if d <= tol {
                    hits += 1;
                }
                min = Some(min.map_or(d, |m: T| m.min(d)));
            }
            (checked, hits, min)
        })
        .reduce(
            || (0, 0, None),
            |a, b| {
                let min = match (a.2, b.2) {
                    (Some(x), Some(y)) => Some(x.min(y)),
                    (x, None) => x,
                    (None, y) => y,
                };
                (a.0 + b.0, a.1 + b.1, min)
            },
        );
    InjectivityProbe {
        separation,
        collision_tolerance,
        pairs_checked,
        collisions,
        min_image_distance,
    }
}
