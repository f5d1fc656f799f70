//! Numerical check that closeness of perturbations measured on one
//! generating set controls closeness on another.
//!
//! With `m = max_{a in A} l_B(a)`, `delta_1 = 0.9 delta' / m` and `L` a
//! modulus of continuity of every `T_h` with `l_B(h) <= m`, any `S` with
//! `d_B(T, S) < delta = delta_1 / L` telescopes along a `B`-geodesic of each
//! `a` to `d(T_a x, S_a x) <= l_B(a) delta_1 < delta'`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{word_length, GroupSpec};
use crate::toral::action::ToralActionSpec;
use crate::toral::linalg::DenseMatrix;
use crate::toral::perturb::{sample_points, FourierDisplacement, PerturbedToralAction};

/// Word lengths beyond this are reported as unreachable.
pub const COMPARE_MAX_RADIUS: u32 = 16;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareOptions {
    pub delta_prime: f64,
    pub samples: usize,
    /// Grid side for the `d_A`, `d_B` sup estimates.
    pub grid: usize,
    pub seed: u64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            delta_prime: 1e-2,
            samples: 100,
            grid: 16,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneratorLength {
    pub generator: String,
    pub length: u32,
    pub word: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareSample {
    pub seed: u64,
    pub amplitude: f64,
    pub d_b: f64,
    pub d_a: f64,
    pub eligible: bool,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareReport {
    pub a_generators: Vec<String>,
    pub b_generators: Vec<String>,
    pub a_lengths: Vec<GeneratorLength>,
    pub m: u32,
    pub delta_prime: f64,
    pub delta_1: f64,
    /// Sampled modulus: largest observed `d(T_h x, T_h y) / d(x, y)`.
    pub lipschitz_estimate: f64,
    /// `max ||M_h||_inf` over `l_B(h) <= m`, an exact bound for short steps.
    pub lipschitz_bound: f64,
    pub delta: f64,
    pub grid: usize,
    pub samples: Vec<CompareSample>,
    pub eligible: usize,
    pub passed: usize,
    pub max_d_a: f64,
    pub max_d_b: f64,
    pub holds: bool,
}

pub fn generating_set_compare(
    t: &ToralActionSpec,
    a: &GroupSpec,
    b: &GroupSpec,
    opts: &CompareOptions,
) -> Result<CompareReport> {
    if a.family() != t.family() || b.family() != t.family() {
        return Err(Error::FamilyMismatch("generating sets must belong to the action's group".into()));
    }
    if !(opts.delta_prime > 0.0 && opts.delta_prime.is_finite()) {
        return Err(Error::InvalidTolerance(format!("delta' = {} must be positive", opts.delta_prime)));
    }
    if opts.grid == 0 {
        return Err(Error::InvalidTolerance("grid must be positive".into()));
    }
    let mut a_lengths = Vec::new();
    let mut m = 0;
    let mut lengths = Vec::new();
    for g in a.generators() {
        let l = word_length(g, b, COMPARE_MAX_RADIUS)?;
        m = m.max(l);
        lengths.push(l);
    }
    let ball = b.ball(m.max(1))?;
    let mut a_words = Vec::new();
    for (g, &l) in a.generators().iter().zip(&lengths) {
        let i = ball.position(g).expect("within radius m");
        let word = ball.geodesic(i);
        a_lengths.push(GeneratorLength {
            generator: a.format(g),
            length: l,
            word: word.iter().map(|&j| b.format(&b.generators()[j])).collect(),
        });
        a_words.push((t.matrix_of(g)?, word));
    }
    let delta_1 = 0.9 * opts.delta_prime / m.max(1) as f64;

    let points = sample_points::<f64>(t.dim(), opts.grid);
    let mut lipschitz_bound: f64 = 1.0;
    let mut lipschitz_estimate: f64 = 1.0;
    let probe = 1e-6;
    let signs: Vec<Vec<f64>> = (0..1usize << t.dim().min(10))
        .map(|mask| (0..t.dim()).map(|i| if mask >> (i % 10) & 1 == 1 { probe } else { -probe }).collect())
        .collect();
    for i in 0..ball.len() {
        let mh = t.matrix_of(ball.element(i))?;
        lipschitz_bound = lipschitz_bound.max(mh.inf_norm() as f64);
        let dense = DenseMatrix::<f64>::from_integer(&mh);
        for x in points.iter().step_by((points.len() / 16).max(1)) {
            let tx = x.apply(&dense);
            for v in &signs {
                let y = x.translate(v);
                let ratio = tx.distance(&y.apply(&dense)) / x.distance(&y);
                lipschitz_estimate = lipschitz_estimate.max(ratio);
            }
        }
    }
    if lipschitz_estimate > lipschitz_bound * (1.0 + 1e-6) {
        return Err(Error::Numerical(format!(
            "sampled modulus {lipschitz_estimate} exceeds the matrix bound {lipschitz_bound}"
        )));
    }
    let delta = delta_1 / lipschitz_bound;

    // d(S_{b^{-1}}, T_{b^{-1}}) <= ||M_b^{-1}|| amplitude, so this keeps d_B < delta
    let mut kappa: f64 = 1.0;
    for g in b.base_generators() {
        kappa = kappa.max(2.0 * t.matrix_of(g)?.inverse()?.inf_norm() as f64);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut samples = Vec::with_capacity(opts.samples);
    for i in 0..opts.samples {
        let seed = opts.seed.wrapping_add(i as u64);
        let amplitude = if i == 0 { 0.0 } else { rng.gen_range(0.0..delta / kappa) };
        let mut field_rng = ChaCha8Rng::seed_from_u64(seed);
        let fields: Vec<FourierDisplacement> = b
            .base_generators()
            .iter()
            .map(|_| FourierDisplacement::random(t.dim(), amplitude, &mut field_rng))
            .collect();
        let s = PerturbedToralAction::<f64>::with_fields(t, b, fields, amplitude, seed)?;
        let (_, d_b) = s.distance_to_base(&points);
        let d_a = points
            .iter()
            .map(|x| {
                a_words
                    .iter()
                    .map(|(ma, word)| x.apply(&DenseMatrix::from_integer(ma)).distance(&s.word(word, x)))
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        let eligible = d_b < delta;
        samples.push(CompareSample {
            seed,
            amplitude,
            d_b,
            d_a,
            eligible,
            passed: eligible && d_a < opts.delta_prime,
        });
    }
    let eligible = samples.iter().filter(|s| s.eligible).count();
    let passed = samples.iter().filter(|s| s.passed).count();
    let max_d_a = samples.iter().map(|s| s.d_a).fold(0.0, f64::max);
    let max_d_b = samples.iter().map(|s| s.d_b).fold(0.0, f64::max);
    Ok(CompareReport {
        a_generators: a.generators().iter().map(|g| a.format(g)).collect(),
        b_generators: b.generators().iter().map(|g| b.format(g)).collect(),
        a_lengths,
        m,
        delta_prime: opts.delta_prime,
        delta_1,
        lipschitz_estimate,
        lipschitz_bound,
        delta,
        grid: opts.grid,
        holds: passed == eligible,
        eligible,
        passed,
        max_d_a,
        max_d_b,
        samples,
    })
}
