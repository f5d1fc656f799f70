//! Pseudo-orbit fields on subshifts of finite type and their traces.
//!
//! A field is a family `x^(g)` of configurations indexed by `ball(R)`, each
//! on `ball(R')`. It is a `delta` pseudo-orbit when `d(a x^(g), x^(ag)) <
//! delta` for every generator `a` and `|g| <= R - 1`, the distance taken on
//! the common radius `R' - 1`. The trace point is read off the field
//! directly: `x_g = x^(g)_e`.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::fill::WindowIndex;
use crate::shift::{
    allowed_blocks, sft_from_forbidden, Configuration, SftSpec, ShiftDistance, ShiftSpace, NODE_BUDGET,
};

/// Tolerances of the SFT tracing recipe: `m > M`, `2^{-m} < epsilon`,
/// `delta = 2^{-(m+1)}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToleranceBundle {
    pub window_radius: u32,
    pub level: u32,
    pub delta: Dyadic,
    pub epsilon: Dyadic,
}

impl ToleranceBundle {
    pub fn new(window_radius: u32, level: u32, epsilon: Dyadic) -> Result<Self> {
        if level <= window_radius {
            return Err(Error::InvalidTolerance(format!(
                "tracing level m = {level} must exceed the window radius M = {window_radius}"
            )));
        }
        if Dyadic::pow2_neg(level) >= epsilon {
            return Err(Error::InvalidTolerance(format!("2^-{level} is not below epsilon = {epsilon}")));
        }
        Ok(ToleranceBundle {
            window_radius,
            level,
            delta: Dyadic::pow2_neg(level + 1),
            epsilon,
        })
    }

    /// Smallest admissible level for `epsilon`.
    pub fn for_epsilon(window_radius: u32, epsilon: Dyadic) -> Result<Self> {
        if epsilon.is_zero() || epsilon > Dyadic::pow2_neg(0) {
            return Err(Error::InvalidTolerance(format!("epsilon = {epsilon} outside (0, 1]")));
        }
        let mut m = window_radius + 1;
        while Dyadic::pow2_neg(m) >= epsilon {
            m += 1;
        }
        Self::new(window_radius, m, epsilon)
    }

    /// Tightest epsilon for a given level: `2^{-m}` is achieved, so any
    /// epsilon above it works; `2^{-(m-1)}` is the canonical choice.
    pub fn for_level(window_radius: u32, level: u32) -> Result<Self> {
        if level == 0 {
            return Err(Error::InvalidTolerance("level must be positive".into()));
        }
        Self::new(window_radius, level, Dyadic::pow2_neg(level - 1))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenerationMode {
    /// A true orbit with the outer shell of every entry re-sampled.
    PerturbedOrbit,
    /// As above, followed by single-site flips that keep every window allowed.
    RandomFlip,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerateOptions {
    pub mode: GenerationMode,
    /// Radius of each entry; defaults to `m + 4`, the least radius that
    /// leaves a shell to perturb.
    pub inner_radius: Option<u32>,
    /// Probability that an entry is perturbed at all.
    pub perturb_fraction: f64,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            mode: GenerationMode::PerturbedOrbit,
            inner_radius: None,
            perturb_fraction: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PseudoOrbitField {
    pub outer_radius: u32,
    pub inner_radius: u32,
    /// Entry `i` is `x^(g)` for `g` at ball position `i`.
    pub entries: Vec<Configuration>,
    pub delta: Dyadic,
    pub seed: Option<u64>,
}

impl PseudoOrbitField {
    pub fn new(space: &ShiftSpace, outer_radius: u32, entries: Vec<Configuration>, delta: Dyadic) -> Result<Self> {
        let n = space.ball().size_at(outer_radius);
        if outer_radius > space.radius() || entries.len() != n {
            return Err(Error::InvalidPattern(format!(
                "field over ball({outer_radius}) needs {n} entries, got {}",
                entries.len()
            )));
        }
        let inner_radius = entries[0].radius();
        if entries.iter().any(|e| e.radius() != inner_radius) {
            return Err(Error::InvalidPattern("entries must share one radius".into()));
        }
        Ok(PseudoOrbitField {
            outer_radius,
            inner_radius,
            entries,
            delta,
            seed: None,
        })
    }

    /// The orbit `{g x}` of a configuration on `ball(R + R')`.
    pub fn true_orbit(space: &ShiftSpace, x: &Configuration, outer_radius: u32, delta: Dyadic) -> Result<Self> {
        if x.radius() < outer_radius {
            return Err(Error::DomainExhausted("configuration smaller than the field".into()));
        }
        let inner = x.radius() - outer_radius;
        let entries = (0..space.ball().size_at(outer_radius))
            .map(|g| space.shift_at(g, x)?.restrict(space, inner))
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, outer_radius, entries, delta)
    }
}

fn entry_at(space: &ShiftSpace, x: &[u8], g: usize, radius: u32) -> Configuration {
    let values = (0..space.ball().size_at(radius))
        .map(|h| x[space.right_translate(h, g).expect("entry inside enumerated ball")])
        .collect();
    Configuration::from_parts(radius, values)
}

/// Reusable generator state for one `(space, sft, tolerances, R)`.
pub struct FieldGenerator<'a> {
    space: &'a ShiftSpace,
    tol: ToleranceBundle,
    outer_radius: u32,
    inner_radius: u32,
    options: GenerateOptions,
    base: WindowIndex,
    entry: WindowIndex,
}

impl<'a> FieldGenerator<'a> {
    pub fn new(
        space: &'a ShiftSpace,
        sft: &SftSpec,
        tol: &ToleranceBundle,
        outer_radius: u32,
        options: GenerateOptions,
    ) -> Result<Self> {
        if tol.window_radius != sft.window_radius() {
            return Err(Error::InvalidTolerance(format!(
                "tolerances built for M = {}, SFT has M = {}",
                tol.window_radius,
                sft.window_radius()
            )));
        }
        let inner_radius = options.inner_radius.unwrap_or(tol.level + 4);
        if inner_radius < tol.level + 2 {
            return Err(Error::InvalidTolerance(format!(
                "inner radius {inner_radius} below m + 2 = {}",
                tol.level + 2
            )));
        }
        let needed = outer_radius + inner_radius;
        if needed > space.radius() {
            return Err(Error::DomainExhausted(format!(
                "field needs ball({needed}), space enumerates ball({})",
                space.radius()
            )));
        }
        if !(0.0..=1.0).contains(&options.perturb_fraction) {
            return Err(Error::InvalidTolerance("perturb_fraction must lie in [0, 1]".into()));
        }
        Ok(FieldGenerator {
            space,
            tol: tol.clone(),
            outer_radius,
            inner_radius,
            options,
            base: WindowIndex::new(space, sft, needed)?,
            entry: WindowIndex::new(space, sft, inner_radius)?,
        })
    }

    pub fn inner_radius(&self) -> u32 {
        self.inner_radius
    }

    pub fn generate(&self, seed: u64) -> Result<PseudoOrbitField> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = self
            .base
            .complete(&[], Some(&mut rng), NODE_BUDGET)?
            .ok_or_else(|| Error::Generation("no locally admissible configuration on the base ball".into()))?;
        let ball = self.space.ball();
        // a x^(g) on ball(m+2) reads x^(g) on ball(m+3)
        let keep = ball.size_at((self.tol.level + 3).min(self.inner_radius));
        let cells = ball.size_at(self.inner_radius);
        let mut entries = Vec::with_capacity(ball.size_at(self.outer_radius));
        for g in 0..ball.size_at(self.outer_radius) {
            let mut e = entry_at(self.space, &x, g, self.inner_radius);
            if keep < cells && rng.gen_bool(self.options.perturb_fraction) {
                let fixed: Vec<Option<u8>> = e.values()[..keep].iter().map(|&v| Some(v)).collect();
                let values = self
                    .entry
                    .complete(&fixed, Some(&mut rng), NODE_BUDGET)?
                    .ok_or_else(|| Error::Generation(format!("entry {g} has no admissible completion")))?;
                e = Configuration::from_parts(self.inner_radius, values);
                if self.options.mode == GenerationMode::RandomFlip {
                    self.flip(&mut e, keep, &mut rng);
                }
            }
            entries.push(e);
        }
        let mut field = PseudoOrbitField::new(self.space, self.outer_radius, entries, self.tol.delta.clone())?;
        field.seed = Some(seed);
        Ok(field)
    }

    fn flip(&self, e: &mut Configuration, keep: usize, rng: &mut ChaCha8Rng) {
        let cells = e.values().len();
        let s = self.space.alphabet().len() as u8;
        if s < 2 {
            return;
        }
        for _ in keep..cells {
            let c = rng.gen_range(keep..cells);
            let old = e.value(c);
            let new = (old + rng.gen_range(1..s)) % s;
            e.values_mut()[c] = new;
            if !self.entry.windows_ok_at(e.values(), c) {
                e.values_mut()[c] = old;
            }
        }
    }
}

/// Seeded `delta` pseudo-orbit field over `ball(outer_radius)`.
pub fn generate_pseudo_orbit(
    space: &ShiftSpace,
    sft: &SftSpec,
    tol: &ToleranceBundle,
    outer_radius: u32,
    options: GenerateOptions,
    seed: u64,
) -> Result<PseudoOrbitField> {
    FieldGenerator::new(space, sft, tol, outer_radius, options)?.generate(seed)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PseudoOrbitCheck {
    pub holds: bool,
    /// Largest residual over all checked `(a, g)`.
    pub max_residual: ShiftDistance,
    pub checked_radius: u32,
    /// First `(generator index, ball position of g)` breaking the condition.
    pub first_violation: Option<(usize, usize)>,
    /// `residuals[g][a]`.
    pub residuals: Vec<Vec<ShiftDistance>>,
}

/// Checks `d(a x^(g), x^(ag)) < delta` for all generators `a` and
/// `|g| <= R - 1`, on radius `R' - 1`.
pub fn is_delta_pseudo_orbit(space: &ShiftSpace, field: &PseudoOrbitField) -> Result<PseudoOrbitCheck> {
    if field.outer_radius == 0 || field.inner_radius == 0 {
        return Err(Error::DomainExhausted("field radii must be positive".into()));
    }
    let gens = space.group().generators();
    let r = field.inner_radius - 1;
    let ball = space.ball();
    let mut max_residual: Option<ShiftDistance> = None;
    let mut first_violation = None;
    let mut residuals = Vec::new();
    for g in 0..ball.size_at(field.outer_radius - 1) {
        let mut row = Vec::with_capacity(gens.len());
        for (j, gen) in gens.iter().enumerate() {
            let ag = space.left_generator(g, j).expect("ag inside ball(R)");
            let ax = space.shift_at(ball.position(gen).expect("generator in ball(1)"), &field.entries[g])?;
            let d = space.distance_on(&ax, &field.entries[ag], r);
            if d.value() >= field.delta && first_violation.is_none() {
                first_violation = Some((j, g));
            }
            max_residual = Some(match max_residual {
                Some(m) if m >= d => m,
                _ => d,
            });
            row.push(d);
        }
        residuals.push(row);
    }
    Ok(PseudoOrbitCheck {
        holds: first_violation.is_none(),
        max_residual: max_residual.unwrap_or(ShiftDistance::indistinguishable_at(r)),
        checked_radius: r,
        first_violation,
        residuals,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceReport {
    pub trace_point: Configuration,
    pub level: u32,
    pub delta: Dyadic,
    pub epsilon: Dyadic,
    /// Largest residual `d(g x, x^(g))` over the verified ball.
    pub epsilon_achieved: Dyadic,
    /// True when every residual is the indistinguishable marker.
    pub indistinguishable: bool,
    pub outer_radius: u32,
    pub inner_radius: u32,
    /// Residuals are checked for `|g| <= verified_radius`.
    pub verified_radius: u32,
    /// Ball position of `g` -> residual exponent.
    pub residual_exponents: Vec<u32>,
    /// All residuals at most `2^{-m}`.
    pub within_level: bool,
    /// `(g x)_h = x^(g)_h` for every checked `g` and `h` in `ball(m)`.
    pub identity_holds: bool,
    pub admissible: bool,
    pub seed: Option<u64>,
}

impl TraceReport {
    pub fn passed(&self) -> bool {
        self.within_level && self.admissible && self.identity_holds && self.epsilon_achieved < self.epsilon
    }
}

/// The trace `x_g = x^(g)_e` on `ball(R)`, verified on `|g| <= R - m`.
pub fn trace_sft(
    space: &ShiftSpace,
    field: &PseudoOrbitField,
    sft: &SftSpec,
    tol: &ToleranceBundle,
) -> Result<TraceReport> {
    if tol.window_radius != sft.window_radius() || tol.level <= sft.window_radius() {
        return Err(Error::InvalidTolerance("tolerances do not match the SFT window".into()));
    }
    if field.delta > tol.delta {
        return Err(Error::InvalidTolerance(format!(
            "field delta {} exceeds the recipe delta {}",
            field.delta, tol.delta
        )));
    }
    if field.inner_radius < tol.level || field.outer_radius < tol.level.max(sft.window_radius()) {
        return Err(Error::DomainExhausted(format!(
            "field radii R = {}, R' = {} too small for m = {}",
            field.outer_radius, field.inner_radius, tol.level
        )));
    }
    let check = is_delta_pseudo_orbit(space, field)?;
    if let Some((j, g)) = check.first_violation {
        let gens = space.group().generators();
        return Err(Error::PseudoOrbitViolation(format!(
            "d(a x^(g), x^(ag)) = {} >= {} at a = {}, g = {}",
            check.residuals[g][j],
            field.delta,
            space.group().format(&gens[j]),
            space.group().format(space.ball().element(g))
        )));
    }
    let ball = space.ball();
    let big_r = field.outer_radius;
    let values: Vec<u8> = field.entries.iter().map(|e| e.value(0)).collect();
    let x = Configuration::from_parts(big_r, values);
    let verified = big_r - tol.level;
    let level_cells = ball.size_at(tol.level);
    let results: Vec<(ShiftDistance, bool)> = (0..ball.size_at(verified))
        .into_par_iter()
        .map(|g| {
            let gx = space.shift_at(g, &x).expect("g inside ball(R)");
            let r = gx.radius().min(field.inner_radius);
            let d = space.distance_on(&gx, &field.entries[g], r);
            let identity = gx.values()[..level_cells] == field.entries[g].values()[..level_cells];
            (d, identity)
        })
        .collect();
    let max = results
        .iter()
        .map(|r| r.0)
        .max()
        .unwrap_or(ShiftDistance::indistinguishable_at(field.inner_radius));
    let within_level = results.iter().all(|r| r.0.exponent >= tol.level);
    Ok(TraceReport {
        admissible: space.locally_admissible(&x, sft)?,
        trace_point: x,
        level: tol.level,
        delta: tol.delta.clone(),
        epsilon: tol.epsilon.clone(),
        epsilon_achieved: max.value(),
        indistinguishable: results.iter().all(|r| r.0.indistinguishable),
        outer_radius: big_r,
        inner_radius: field.inner_radius,
        verified_radius: verified,
        residual_exponents: results.iter().map(|r| r.0.exponent).collect(),
        within_level,
        identity_holds: results.iter().all(|r| r.1),
        seed: field.seed,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BatchSummary {
    pub samples: usize,
    pub passed: usize,
    pub worst_epsilon: Dyadic,
    pub first_failure: Option<u64>,
    pub mode: GenerationMode,
    pub seed: u64,
    pub verified_radius: u32,
}

/// Generates and traces `samples` fields with seeds `seed..seed + samples`,
/// in parallel; results merged in seed order.
pub fn trace_batch(
    space: &ShiftSpace,
    sft: &SftSpec,
    tol: &ToleranceBundle,
    outer_radius: u32,
    options: GenerateOptions,
    seed: u64,
    samples: usize,
) -> Result<BatchSummary> {
    let mode = options.mode;
    let gen = FieldGenerator::new(space, sft, tol, outer_radius, options)?;
    let reports: Vec<Result<TraceReport>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let field = gen.generate(seed.wrapping_add(i))?;
            trace_sft(space, &field, sft, tol)
        })
        .collect();
    let mut passed = 0;
    let mut worst = Dyadic::pow2_neg(outer_radius + gen.inner_radius() + 1);
    let mut first_failure = None;
    for (i, r) in reports.into_iter().enumerate() {
        let r = r?;
        if r.passed() {
            passed += 1;
        } else if first_failure.is_none() {
            first_failure = Some(seed.wrapping_add(i as u64));
        }
        if r.epsilon_achieved > worst {
            worst = r.epsilon_achieved;
        }
    }
    Ok(BatchSummary {
        samples,
        passed,
        worst_epsilon: worst,
        first_failure,
        mode,
        seed,
        verified_radius: outer_radius.saturating_sub(tol.level),
    })
}

/// Required agreement radius for `d < epsilon`.
pub fn strict_agreement_radius(epsilon: &Dyadic) -> Result<u32> {
    let j = epsilon
        .ceil_neg_log2()
        .ok_or_else(|| Error::InvalidTolerance(format!("{epsilon} outside (0, 1]")))?;
    Ok(if Dyadic::pow2_neg(j) == *epsilon { j + 1 } else { j })
}

/// Required agreement radius for `d <= eta`.
pub fn weak_agreement_radius(eta: &Dyadic) -> Result<u32> {
    eta.ceil_neg_log2()
        .ok_or_else(|| Error::InvalidTolerance(format!("{eta} outside (0, 1]")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UniquenessStatus {
    Unique,
    Multiple,
    /// `2 epsilon >= eta`: the uniqueness argument does not apply.
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UniquenessReport {
    pub status: UniquenessStatus,
    pub exhaustive: bool,
    pub candidate_radius: u32,
    pub configurations_scanned: u64,
    /// Number of candidates that epsilon-trace the field.
    pub multiplicity: usize,
    /// Number of distinct restrictions of those candidates to `ball(m)`.
    pub multiplicity_within_level: usize,
    /// Candidates differ only beyond `ball(m)`: uniqueness is limited by
    /// truncation, not contradicted.
    pub truncation_limited: bool,
    /// All candidates when exhaustive, the lexicographically first otherwise.
    pub candidates: Vec<Configuration>,
}

/// Whether `y` (on `ball(candidate_radius)`) is consistent with
/// epsilon-tracing the field: for every `g` of the field and on every
/// radius both sides cover, `g y` and `x^(g)` agree up to the agreement
/// radius `epsilon` demands.
fn traces(space: &ShiftSpace, y: &Configuration, field: &PseudoOrbitField, need: u32) -> bool {
    let ball = space.ball();
    for g in 0..ball.size_at(field.outer_radius.min(y.radius())) {
        let rem = y.radius() - ball.length_of(g);
        let r = rem.min(field.inner_radius).min(need);
        let e = &field.entries[g];
        for h in 0..ball.size_at(r) {
            let p = space.right_translate(h, g).expect("inside candidate ball");
            if y.value(p) != e.value(h) {
                return false;
            }
        }
    }
    true
}

/// Searches for configurations other than the constructed trace that also
/// epsilon-trace the field: exhaustively when `|S|^|ball(candidate_radius)|`
/// is within `budget`, otherwise by `budget` random modifications of the
/// trace beyond `ball(m)`.
#[allow(clippy::too_many_arguments)]
pub fn trace_uniqueness_check(
    space: &ShiftSpace,
    field: &PseudoOrbitField,
    sft: &SftSpec,
    tol: &ToleranceBundle,
    eta: &Dyadic,
    candidate_radius: u32,
    budget: u64,
    seed: u64,
) -> Result<UniquenessReport> {
    let two_eps = tol.epsilon.clone() + tol.epsilon.clone();
    let mut report = UniquenessReport {
        status: UniquenessStatus::NotApplicable,
        exhaustive: false,
        candidate_radius,
        configurations_scanned: 0,
        multiplicity: 0,
        multiplicity_within_level: 0,
        truncation_limited: false,
        candidates: Vec::new(),
    };
    if two_eps >= *eta {
        return Ok(report);
    }
    if candidate_radius > space.radius() {
        return Err(Error::DomainExhausted("candidate radius exceeds the enumerated ball".into()));
    }
    let need = strict_agreement_radius(&tol.epsilon)?;
    let ball = space.ball();
    let cells = ball.size_at(candidate_radius);
    let s = space.alphabet().len();
    let total = (s as u128).checked_pow(cells as u32).unwrap_or(u128::MAX);
    let admissible = |y: &Configuration| -> bool {
        y.radius() < sft.window_radius() || space.locally_admissible(y, sft).unwrap_or(false)
    };
    let mut found: BTreeSet<Configuration> = BTreeSet::new();
    if total <= budget as u128 {
        report.exhaustive = true;
        report.configurations_scanned = total as u64;
        let mut values = vec![0u8; cells];
        for _ in 0..total {
            let y = Configuration::from_parts(candidate_radius, values.clone());
            if traces(space, &y, field, need) && admissible(&y) {
                found.insert(y);
            }
            for v in values.iter_mut() {
                *v += 1;
                if (*v as usize) < s {
                    break;
                }
                *v = 0;
            }
        }
    } else {
        // modify a known trace beyond ball(m)
        let trace = trace_sft(space, field, sft, tol)?.trace_point;
        if trace.radius() < candidate_radius {
            return Err(Error::DomainExhausted(
                "sampled uniqueness needs the candidate ball inside the trace ball".into(),
            ));
        }
        let base = trace.restrict(space, candidate_radius)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = ball.size_at(tol.level.min(candidate_radius));
        if traces(space, &base, field, need) && admissible(&base) {
            found.insert(base.clone());
        }
        for _ in 0..budget {
            let mut y = base.clone();
            if start < cells {
                let flips = rng.gen_range(1..=3usize);
                for _ in 0..flips {
                    let c = rng.gen_range(start..cells);
                    y.values_mut()[c] = rng.gen_range(0..s as u8);
                }
            }
            report.configurations_scanned += 1;
            if traces(space, &y, field, need) && admissible(&y) {
                found.insert(y);
            }
        }
    }
    let level_cells = ball.size_at(tol.level.min(candidate_radius));
    let within: BTreeSet<&[u8]> = found.iter().map(|y| &y.values()[..level_cells]).collect();
    report.multiplicity = found.len();
    report.multiplicity_within_level = within.len();
    report.truncation_limited = found.len() > 1 && within.len() == 1;
    report.status = if found.len() == 1 {
        UniquenessStatus::Unique
    } else {
        UniquenessStatus::Multiple
    };
    report.candidates = if report.exhaustive {
        found.into_iter().collect()
    } else {
        found.into_iter().take(1).collect()
    };
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairScan {
    pub window: u32,
    pub scan_radius: u32,
    pub configurations: u64,
    pub exhaustive: bool,
    pub holds: bool,
    /// Two configurations within `eta` along the window but at distance
    /// at least `epsilon`.
    pub counterexample: Option<(Configuration, Configuration)>,
}

/// Checks the window `ball(k)`: every pair of locally admissible
/// configurations on `ball(scan_radius)` (extendable by `slack`) with
/// `d(g x, g y) <= eta` for all `g` in `ball(k)` has `d(x, y) < epsilon`.
///
/// Pairs are grouped by their restriction to `ball(k + t)`, `t` the
/// agreement radius `eta` demands; a group holding two different
/// restrictions to `ball(j)` (`j` the radius `epsilon` demands) is a
/// counterexample.
#[allow(clippy::too_many_arguments)]
pub fn expansiveness_pair_scan(
    space: &ShiftSpace,
    sft: &SftSpec,
    eta: &Dyadic,
    epsilon: &Dyadic,
    k: u32,
    scan_radius: u32,
    slack: u32,
    budget: u64,
    seed: u64,
) -> Result<PairScan> {
    let t = weak_agreement_radius(eta)?;
    let j = strict_agreement_radius(epsilon)?;
    if scan_radius < k + t || scan_radius < j {
        return Err(Error::DomainExhausted(format!(
            "scan radius {scan_radius} below max(k + t, j) = {}",
            (k + t).max(j)
        )));
    }
    let ball = space.ball();
    let premise = ball.size_at(k + t);
    let conclusion = ball.size_at(j);
    let mut groups: HashMap<Vec<u8>, Vec<u8>> = HashMap::new();
    let mut scan = PairScan {
        window: k,
        scan_radius,
        configurations: 0,
        exhaustive: true,
        holds: true,
        counterexample: None,
    };
    let consider = |groups: &mut HashMap<Vec<u8>, Vec<u8>>, values: &[u8], scan: &mut PairScan| -> bool {
        scan.configurations += 1;
        let key = values[..premise].to_vec();
        match groups.get(&key) {
            Some(other) if other[..conclusion] != values[..conclusion] => {
                scan.holds = false;
                scan.counterexample = Some((
                    Configuration::from_parts(scan_radius, other.clone()),
                    Configuration::from_parts(scan_radius, values.to_vec()),
                ));
                false
            }
            Some(_) => true,
            None => {
                groups.insert(key, values.to_vec());
                true
            }
        }
    };
    let cells = ball.size_at(scan_radius);
    let s = space.alphabet().len();
    let total = (s as u128).checked_pow(cells as u32).unwrap_or(u128::MAX);
    if sft.is_full_shift() && total <= budget as u128 {
        let mut values = vec![0u8; cells];
        for _ in 0..total {
            if !consider(&mut groups, &values, &mut scan) {
                break;
            }
            for v in values.iter_mut() {
                *v += 1;
                if (*v as usize) < s {
                    break;
                }
                *v = 0;
            }
        }
        return Ok(scan);
    }
    let exhaustive = enumerate_admissible(space, sft, scan_radius, slack, budget, &mut |v| {
        Ok(consider(&mut groups, v, &mut scan))
    });
    match exhaustive {
        Ok(()) => Ok(scan),
        Err(e) if e.is_capacity() => {
            // sampled: random admissible configurations
            scan.exhaustive = false;
            scan.configurations = 0;
            scan.holds = true;
            scan.counterexample = None;
            groups.clear();
            let index = WindowIndex::new(space, sft, (scan_radius + slack).min(space.radius()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..budget {
                match index.complete(&[], Some(&mut rng), NODE_BUDGET)? {
                    Some(v) => {
                        if !consider(&mut groups, &v[..cells], &mut scan) {
                            break;
                        }
                    }
                    None => break,
                }
            }
            Ok(scan)
        }
        Err(e) => Err(e),
    }
}

fn enumerate_admissible(
    space: &ShiftSpace,
    sft: &SftSpec,
    radius: u32,
    slack: u32,
    budget: u64,
    visit: &mut dyn FnMut(&[u8]) -> Result<bool>,
) -> Result<()> {
    let outer = (radius + slack).min(space.radius());
    let index = WindowIndex::new(space, sft, outer)?;
    let cells = space.ball().size_at(radius);
    let mut fixed: Vec<Option<u8>> = vec![None; index.cells()];
    let mut seen = 0u64;
    index.enumerate_prefixes(cells, &[], NODE_BUDGET, &mut |prefix| {
        if outer > radius {
            for (f, &v) in fixed.iter_mut().zip(prefix) {
                *f = Some(v);
            }
            if index.complete::<ChaCha8Rng>(&fixed, None, NODE_BUDGET)?.is_none() {
                return Ok(true);
            }
        }
        seen += 1;
        if seen > budget {
            return Err(Error::capacity("shadowing", "admissible configurations", seen, budget));
        }
        visit(prefix)
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExpansivenessWindow {
    /// The window is `ball(k)`.
    pub k: u32,
    pub eta: Dyadic,
    pub epsilon: Dyadic,
    pub scan: PairScan,
    /// Scans of the smaller windows that failed.
    pub rejected: Vec<PairScan>,
}

/// Smallest `k <= max_k` whose window passes [`expansiveness_pair_scan`] at
/// radius `max(k + t, j + 1)`.
#[allow(clippy::too_many_arguments)]
pub fn expansiveness_window(
    space: &ShiftSpace,
    sft: &SftSpec,
    eta: &Dyadic,
    epsilon: &Dyadic,
    max_k: u32,
    slack: u32,
    budget: u64,
    seed: u64,
) -> Result<ExpansivenessWindow> {
    let t = weak_agreement_radius(eta)?;
    let j = strict_agreement_radius(epsilon)?;
    let mut rejected = Vec::new();
    for k in 0..=max_k {
        let radius = (k + t).max(j + 1);
        let scan = expansiveness_pair_scan(space, sft, eta, epsilon, k, radius, slack, budget, seed)?;
        if scan.holds {
            return Ok(ExpansivenessWindow {
                k,
                eta: eta.clone(),
                epsilon: epsilon.clone(),
                scan,
                rejected,
            });
        }
        rejected.push(scan);
    }
    Err(Error::NotFound {
        element: format!("expansiveness window for eta = {eta}, epsilon = {epsilon}"),
        max_radius: max_k,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForbiddenSynthesis {
    pub radius: u32,
    pub forbidden: BTreeSet<Vec<u8>>,
    pub sft: SftSpec,
}

/// `W` = all `(m+1)`-blocks that are not allowed (up to `slack`), and the
/// SFT `X_W` with window `ball(m+1)`.
pub fn synthesize_forbidden_words(space: &ShiftSpace, sft: &SftSpec, m: u32, slack: u32) -> Result<ForbiddenSynthesis> {
    if m < sft.window_radius() {
        return Err(Error::InvalidTolerance(format!(
            "m = {m} below the window radius {}",
            sft.window_radius()
        )));
    }
    let allowed = allowed_blocks(space, sft, m + 1, slack)?.blocks;
    let lifted = SftSpec::full_shift(space, m + 1)?;
    let forbidden: BTreeSet<Vec<u8>> = (0..lifted.pattern_count())
        .map(|c| lifted.decode(c))
        .filter(|b| !allowed.contains(b))
        .collect();
    let synthesized = sft_from_forbidden(space, m + 1, &forbidden)?;
    Ok(ForbiddenSynthesis {
        radius: m + 1,
        forbidden,
        sft: synthesized,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PotpModulus {
    pub level: u32,
    pub delta: Dyadic,
    pub epsilon: Dyadic,
    pub samples: usize,
    pub confirmed: usize,
}

/// The recipe `delta = 2^{-(m+1)}` for `epsilon`, confirmed on `samples`
/// generated fields over `ball(outer_radius)`.
pub fn potp_modulus(
    space: &ShiftSpace,
    sft: &SftSpec,
    epsilon: &Dyadic,
    outer_radius: u32,
    samples: usize,
    seed: u64,
) -> Result<PotpModulus> {
    let tol = ToleranceBundle::for_epsilon(sft.window_radius(), epsilon.clone())?;
    let confirmed = if samples == 0 {
        0
    } else {
        trace_batch(space, sft, &tol, outer_radius, GenerateOptions::default(), seed, samples)?.passed
    };
    Ok(PotpModulus {
        level: tol.level,
        delta: tol.delta,
        epsilon: epsilon.clone(),
        samples,
        confirmed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::group::{GroupFamily, GroupSpec};
    use crate::shift::Alphabet;

    fn z_space(radius: u32) -> ShiftSpace {
        ShiftSpace::new(GroupSpec::standard(GroupFamily::IntegerLattice(1)), Alphabet::binary(), radius).unwrap()
    }

    #[test]
    fn recipe_arithmetic() {
        let t = ToleranceBundle::for_epsilon(1, Dyadic::pow2_neg(3)).unwrap();
        assert_eq!((t.level, t.delta.clone()), (4, Dyadic::pow2_neg(5)));
        let t = ToleranceBundle::for_epsilon(1, Dyadic::pow2_neg(1)).unwrap();
        assert_eq!((t.level, t.delta), (2, Dyadic::pow2_neg(3)));
        assert!(ToleranceBundle::new(2, 2, Dyadic::pow2_neg(0)).is_err());
        assert!(ToleranceBundle::new(1, 3, Dyadic::pow2_neg(3)).is_err());
    }

    #[test]
    fn true_orbit_traces_exactly() {
        let space = z_space(24);
        let gm = catalog::golden_mean(&space).unwrap();
        let tol = ToleranceBundle::for_level(1, 4).unwrap();
        let opts = GenerateOptions {
            perturb_fraction: 0.0,
            ..Default::default()
        };
        let field = generate_pseudo_orbit(&space, &gm, &tol, 16, opts, 3).unwrap();
        let check = is_delta_pseudo_orbit(&space, &field).unwrap();
        assert!(check.holds && check.max_residual.indistinguishable);
        let report = trace_sft(&space, &field, &gm, &tol).unwrap();
        assert!(report.passed() && report.indistinguishable);
    }

    #[test]
    fn flipped_identity_breaks_condition() {
        let space = z_space(24);
        let gm = catalog::golden_mean(&space).unwrap();
        let tol = ToleranceBundle::for_level(1, 4).unwrap();
        let mut field = generate_pseudo_orbit(&space, &gm, &tol, 16, GenerateOptions::default(), 7).unwrap();
        assert!(is_delta_pseudo_orbit(&space, &field).unwrap().holds);
        let v = field.entries[5].value(0);
        field.entries[5].values_mut()[0] = 1 - v;
        let check = is_delta_pseudo_orbit(&space, &field).unwrap();
        assert!(!check.holds);
        assert_eq!(check.max_residual, ShiftDistance::one());
        assert!(matches!(
            trace_sft(&space, &field, &gm, &tol),
            Err(Error::PseudoOrbitViolation(_))
        ));
    }

    #[test]
    fn golden_mean_modes() {
        let space = z_space(24);
        let gm = catalog::golden_mean(&space).unwrap();
        let tol = ToleranceBundle::for_level(1, 4).unwrap();
        for mode in [GenerationMode::PerturbedOrbit, GenerationMode::RandomFlip] {
            let opts = GenerateOptions {
                mode,
                ..Default::default()
            };
            let s = trace_batch(&space, &gm, &tol, 16, opts, 100, 40).unwrap();
            assert_eq!(s.passed, 40);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let space = z_space(24);
        let gm = catalog::golden_mean(&space).unwrap();
        let tol = ToleranceBundle::for_level(1, 4).unwrap();
        let a = generate_pseudo_orbit(&space, &gm, &tol, 16, GenerateOptions::default(), 11).unwrap();
        let b = generate_pseudo_orbit(&space, &gm, &tol, 16, GenerateOptions::default(), 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn expansiveness_full_shift() {
        let space = z_space(10);
        let full = SftSpec::full_shift(&space, 0).unwrap();
        let half = Dyadic::pow2_neg(1);
        for j in 0..=4 {
            let w = expansiveness_window(&space, &full, &half, &Dyadic::pow2_neg(j), 8, 0, 1 << 20, 0).unwrap();
            assert_eq!(w.k, j);
        }
    }

    #[test]
    fn uniqueness_not_applicable() {
        let space = z_space(8);
        let full = SftSpec::full_shift(&space, 0).unwrap();
        let tol = ToleranceBundle::new(0, 2, Dyadic::pow2_neg(1)).unwrap();
        let x = Configuration::constant(&space, 8, 0).unwrap();
        let field = PseudoOrbitField::true_orbit(&space, &x, 4, tol.delta.clone()).unwrap();
        let r = trace_uniqueness_check(&space, &field, &full, &tol, &Dyadic::pow2_neg(1), 4, 1 << 12, 0).unwrap();
        assert_eq!(r.status, UniquenessStatus::NotApplicable);
    }

    #[test]
    fn synthesis_full_shift_is_empty() {
        let space = z_space(8);
        let full = SftSpec::full_shift(&space, 1).unwrap();
        assert!(synthesize_forbidden_words(&space, &full, 1, 2).unwrap().forbidden.is_empty());
    }
}
