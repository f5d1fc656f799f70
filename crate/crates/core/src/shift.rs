//! Configurations on Cayley balls, the right shift `(gx)_h = x_{hg}`, the
//! `2^{-k}` metric and subshifts of finite type.
//!
//! Configurations are truncated to a ball and every operation states the
//! radius on which its answer is valid: shifting by `g` shrinks the domain
//! by `|g|`, and admissibility is only checked at window positions whose
//! window fits inside the domain.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::fill::WindowIndex;
use crate::group::{ball_with_budget, Ball, GroupElement, GroupFamily, GroupSpec, DEFAULT_BALL_BUDGET};

/// Upper bound on `|S|^{|window|}` for stored SFT pattern tables.
pub const PATTERN_BUDGET: u64 = 1 << 22;

/// Default budget on the number of blocks returned by block enumeration.
pub const BLOCK_BUDGET: usize = 1 << 20;

/// Default search-node budget for constrained fills.
pub const NODE_BUDGET: u64 = 200_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    symbols: Vec<char>,
}

impl Alphabet {
    pub fn new(symbols: Vec<char>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidAlphabet("alphabet must be non-empty".into()));
        }
        if symbols.len() > u8::MAX as usize {
            return Err(Error::InvalidAlphabet("at most 255 symbols".into()));
        }
        let distinct: BTreeSet<char> = symbols.iter().copied().collect();
        if distinct.len() != symbols.len() {
            return Err(Error::InvalidAlphabet("symbols must be distinct".into()));
        }
        Ok(Alphabet { symbols })
    }

    pub fn binary() -> Self {
        Alphabet { symbols: vec!['0', '1'] }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn symbol(&self, i: u8) -> char {
        self.symbols[i as usize]
    }

    pub fn index_of(&self, c: char) -> Option<u8> {
        self.symbols.iter().position(|&s| s == c).map(|i| i as u8)
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Alphabet::binary()
    }
}

/// Symbols on `ball(radius)`, stored densely in ball order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    radius: u32,
    values: Vec<u8>,
}

impl Configuration {
    pub fn new(space: &ShiftSpace, radius: u32, values: Vec<u8>) -> Result<Self> {
        if radius > space.radius() {
            return Err(Error::DomainExhausted(format!(
                "radius {radius} exceeds the enumerated ball ({})",
                space.radius()
            )));
        }
        let expected = space.ball().size_at(radius);
        if values.len() != expected {
            return Err(Error::InvalidPattern(format!(
                "configuration on ball({radius}) needs {expected} values, got {}",
                values.len()
            )));
        }
        if let Some(&v) = values.iter().find(|&&v| v as usize >= space.alphabet().len()) {
            return Err(Error::InvalidPattern(format!("symbol index {v} outside alphabet")));
        }
        Ok(Configuration { radius, values })
    }

    pub(crate) fn from_parts(radius: u32, values: Vec<u8>) -> Self {
        Configuration { radius, values }
    }

    pub fn constant(space: &ShiftSpace, radius: u32, symbol: u8) -> Result<Self> {
        Configuration::new(space, radius, vec![symbol; space.ball().size_at(radius)])
    }

    pub fn random<R: Rng>(space: &ShiftSpace, radius: u32, rng: &mut R) -> Result<Self> {
        let n = space.ball().size_at(radius);
        let s = space.alphabet().len() as u8;
        Configuration::new(space, radius, (0..n).map(|_| rng.gen_range(0..s)).collect())
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [u8] {
        &mut self.values
    }

    pub fn value(&self, i: usize) -> u8 {
        self.values[i]
    }

    /// Restriction to a smaller ball (a prefix in ball order).
    pub fn restrict(&self, space: &ShiftSpace, radius: u32) -> Result<Configuration> {
        if radius > self.radius {
            return Err(Error::DomainExhausted(format!(
                "cannot restrict radius {} configuration to radius {radius}",
                self.radius
            )));
        }
        Ok(Configuration {
            radius,
            values: self.values[..space.ball().size_at(radius)].to_vec(),
        })
    }

    /// Symbol string in ball order with a radius header, e.g. `r2:01001`.
    pub fn encode(&self, alphabet: &Alphabet) -> String {
        let body: String = self.values.iter().map(|&v| alphabet.symbol(v)).collect();
        format!("r{}:{body}", self.radius)
    }

    pub fn decode(space: &ShiftSpace, s: &str) -> Result<Configuration> {
        let (head, body) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("missing radius header in {s:?}")))?;
        let radius: u32 = head
            .strip_prefix('r')
            .and_then(|r| r.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad radius header {head:?}")))?;
        let values = body
            .chars()
            .map(|c| {
                space
                    .alphabet()
                    .index_of(c)
                    .ok_or_else(|| Error::Parse(format!("symbol {c:?} not in alphabet")))
            })
            .collect::<Result<Vec<u8>>>()?;
        Configuration::new(space, radius, values)
    }
}

impl Serialize for Configuration {
    /// `{"radius": R, "values": "0110..."}` with symbol indices as base-36
    /// digits in ball order.
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let values: String = self
            .values
            .iter()
            .map(|&v| char::from_digit(v as u32, 36).unwrap_or('?'))
            .collect();
        let mut st = serializer.serialize_struct("Configuration", 2)?;
        st.serialize_field("radius", &self.radius)?;
        st.serialize_field("values", &values)?;
        st.end()
    }
}

/// A partial pattern: symbols at some positions of a ball (positions index
/// the deterministic ball order).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pattern {
    cells: Vec<(usize, u8)>,
}

impl Pattern {
    pub fn new(mut cells: Vec<(usize, u8)>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidPattern("pattern support must be non-empty".into()));
        }
        cells.sort();
        if cells.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidPattern("position assigned twice".into()));
        }
        Ok(Pattern { cells })
    }

    pub fn cells(&self) -> &[(usize, u8)] {
        &self.cells
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter().map(|c| c.0)
    }

    pub fn matches(&self, block: &[u8]) -> bool {
        self.cells.iter().all(|&(p, v)| block.get(p) == Some(&v))
    }
}

/// `d(x,y) = 2^{-k}`, `k` the largest radius of agreement.
///
/// Disagreement at the identity (or agreement on `ball(0)` only) gives
/// `d = 1`. Agreement on the whole common domain of radius `R` is reported
/// as `2^{-(R+1)}` with the `indistinguishable` flag: the truncated proxy
/// for `d = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShiftDistance {
    pub exponent: u32,
    pub indistinguishable: bool,
}

impl ShiftDistance {
    pub fn value(&self) -> Dyadic {
        Dyadic::pow2_neg(self.exponent)
    }

    pub fn one() -> Self {
        ShiftDistance {
            exponent: 0,
            indistinguishable: false,
        }
    }

    pub fn indistinguishable_at(radius: u32) -> Self {
        ShiftDistance {
            exponent: radius + 1,
            indistinguishable: true,
        }
    }
}

impl PartialOrd for ShiftDistance {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ShiftDistance {
    /// Orders by value: larger exponent means smaller distance.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .exponent
            .cmp(&self.exponent)
            .then(self.indistinguishable.cmp(&other.indistinguishable).reverse())
    }
}

impl fmt::Display for ShiftDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.indistinguishable {
            write!(f, "<=2^-{} (indistinguishable)", self.exponent)
        } else {
            write!(f, "2^-{}", self.exponent)
        }
    }
}

/// A group with a generating set, an alphabet, and the Cayley ball all
/// configurations live in, with right-multiplication tables for the
/// generators.
#[derive(Clone, Debug)]
pub struct ShiftSpace {
    group: GroupSpec,
    alphabet: Alphabet,
    ball: Ball,
    right: Vec<u32>,
    left: Vec<u32>,
}

const NONE: u32 = u32::MAX;

impl ShiftSpace {
    pub fn new(group: GroupSpec, alphabet: Alphabet, radius: u32) -> Result<Self> {
        Self::with_budget(group, alphabet, radius, DEFAULT_BALL_BUDGET)
    }

    pub fn with_budget(group: GroupSpec, alphabet: Alphabet, radius: u32, budget: usize) -> Result<Self> {
        let ball = ball_with_budget(&group, radius, budget)?;
        let gens = group.generators();
        let mut right = vec![NONE; ball.len() * gens.len()];
        let mut left = vec![NONE; ball.len() * gens.len()];
        for (i, h) in ball.elements().iter().enumerate() {
            for (j, a) in gens.iter().enumerate() {
                if let Some(p) = ball.position(&group.multiply(h, a)?) {
                    right[i * gens.len() + j] = p as u32;
                }
                if let Some(p) = ball.position(&group.multiply(a, h)?) {
                    left[i * gens.len() + j] = p as u32;
                }
            }
        }
        Ok(ShiftSpace {
            group,
            alphabet,
            ball,
            right,
            left,
        })
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn ball(&self) -> &Ball {
        &self.ball
    }

    pub fn radius(&self) -> u32 {
        self.ball.radius()
    }

    /// Position of `h a_j` for `h` at position `i` and generator `j`.
    pub fn right_generator(&self, i: usize, j: usize) -> Option<usize> {
        let p = self.right[i * self.group.generators().len() + j];
        (p != NONE).then_some(p as usize)
    }

    /// Position of `a_j h` for `h` at position `i`.
    pub fn left_generator(&self, i: usize, j: usize) -> Option<usize> {
        let p = self.left[i * self.group.generators().len() + j];
        (p != NONE).then_some(p as usize)
    }

    /// Position of `h g` for `h`, `g` given by ball positions.
    pub fn right_translate(&self, h: usize, g: usize) -> Option<usize> {
        // g = a_j * parent, so h g = (h a_j) parent
        let mut cur = h;
        let mut g = g;
        while let Some((p, j)) = self.ball.parent(g) {
            cur = self.right_generator(cur, j)?;
            g = p;
        }
        Some(cur)
    }

    /// Positions of `h g` for all `h` in `ball(radius)`.
    pub fn translation(&self, g: usize, radius: u32) -> Result<Vec<usize>> {
        (0..self.ball.size_at(radius))
            .map(|h| {
                self.right_translate(h, g)
                    .ok_or_else(|| Error::DomainExhausted("translate leaves the enumerated ball".into()))
            })
            .collect()
    }

    pub fn position(&self, g: &GroupElement) -> Result<usize> {
        self.ball.position(g).ok_or_else(|| {
            Error::DomainExhausted(format!(
                "{} lies outside ball({})",
                self.group.format(g),
                self.radius()
            ))
        })
    }

    /// `(gx)_h = x_{hg}` on `ball(radius - |g|)`, `g` given by ball position.
    pub fn shift_at(&self, g: usize, x: &Configuration) -> Result<Configuration> {
        let len = self.ball.length_of(g);
        if len > x.radius {
            return Err(Error::DomainExhausted(format!(
                "|g| = {len} exceeds configuration radius {}",
                x.radius
            )));
        }
        let r = x.radius - len;
        let values = (0..self.ball.size_at(r))
            .map(|h| {
                let p = self.right_translate(h, g).expect("hg lies in ball(|h| + |g|)");
                x.values[p]
            })
            .collect();
        Ok(Configuration { radius: r, values })
    }

    pub fn shift(&self, g: &GroupElement, x: &Configuration) -> Result<Configuration> {
        let i = self.ball.position(g).ok_or_else(|| {
            Error::DomainExhausted(format!(
                "|{}| exceeds configuration radius {}",
                self.group.format(g),
                x.radius
            ))
        })?;
        self.shift_at(i, x)
    }

    pub fn distance(&self, x: &Configuration, y: &Configuration) -> Result<ShiftDistance> {
        if x.radius != y.radius {
            return Err(Error::RadiusMismatch {
                left: x.radius,
                right: y.radius,
            });
        }
        Ok(self.distance_on(x, y, x.radius))
    }

    /// Distance of the restrictions to `ball(radius)`; both inputs must
    /// cover it.
    pub fn distance_on(&self, x: &Configuration, y: &Configuration, radius: u32) -> ShiftDistance {
        let n = self.ball.size_at(radius);
        match x.values[..n].iter().zip(&y.values[..n]).position(|(a, b)| a != b) {
            None => ShiftDistance::indistinguishable_at(radius),
            Some(i) => ShiftDistance {
                exponent: self.ball.length_of(i).saturating_sub(1),
                indistinguishable: false,
            },
        }
    }

    /// Pattern `(gx)|_{ball(M)}`, i.e. `h -> x_{hg}`.
    pub fn window_pattern(&self, x: &Configuration, g: usize, window_radius: u32) -> Option<Vec<u8>> {
        (0..self.ball.size_at(window_radius))
            .map(|h| self.right_translate(h, g).map(|p| x.values[p]))
            .collect()
    }

    /// True iff every window fully inside `x`'s domain is allowed.
    pub fn locally_admissible(&self, x: &Configuration, sft: &SftSpec) -> Result<bool> {
        self.check_sft_fits(sft)?;
        if x.radius < sft.window_radius {
            return Err(Error::DomainExhausted(format!(
                "configuration radius {} below window radius {}",
                x.radius, sft.window_radius
            )));
        }
        let positions = self.ball.size_at(x.radius - sft.window_radius);
        let s = sft.alphabet_size;
        for g in 0..positions {
            let mut code = 0usize;
            let mut scale = 1usize;
            for h in 0..sft.window_len {
                let p = self.right_translate(h, g).expect("window inside domain");
                code += x.values[p] as usize * scale;
                scale *= s;
            }
            if !sft.allowed[code] {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn check_sft_fits(&self, sft: &SftSpec) -> Result<()> {
        if sft.alphabet_size != self.alphabet.len() {
            return Err(Error::InvalidPattern(format!(
                "SFT over {} symbols used on a space with {}",
                sft.alphabet_size,
                self.alphabet.len()
            )));
        }
        if sft.window_len != self.ball.size_at(sft.window_radius) {
            return Err(Error::InvalidPattern("SFT window does not match ball(M)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternSetKind {
    Allowed,
    Forbidden,
}

/// A subshift of finite type with defining window `ball(M)`.
///
/// The allowed set is stored as a mask over pattern codes (base-`|S|`
/// digits in ball order, least significant first); the forbidden set is its
/// complement. `primary` records which one the SFT was given by.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SftSpec {
    alphabet_size: usize,
    window_radius: u32,
    window_len: usize,
    allowed: Vec<bool>,
    primary: PatternSetKind,
}

impl SftSpec {
    fn empty(space: &ShiftSpace, window_radius: u32, fill: bool, primary: PatternSetKind) -> Result<Self> {
        if window_radius > space.radius() {
            return Err(Error::DomainExhausted(format!(
                "window radius {window_radius} exceeds the enumerated ball"
            )));
        }
        let window_len = space.ball().size_at(window_radius);
        let s = space.alphabet().len();
        let total = (s as u128).checked_pow(window_len as u32).unwrap_or(u128::MAX);
        if total > PATTERN_BUDGET as u128 {
            return Err(Error::capacity("shift-space", "patterns on the window", total, PATTERN_BUDGET));
        }
        Ok(SftSpec {
            alphabet_size: s,
            window_radius,
            window_len,
            allowed: vec![fill; total as usize],
            primary,
        })
    }

    pub fn full_shift(space: &ShiftSpace, window_radius: u32) -> Result<Self> {
        Self::empty(space, window_radius, true, PatternSetKind::Forbidden)
    }

    pub fn from_allowed(
        space: &ShiftSpace,
        window_radius: u32,
        allowed: impl IntoIterator<Item = Vec<u8>>,
    ) -> Result<Self> {
        let mut sft = Self::empty(space, window_radius, false, PatternSetKind::Allowed)?;
        for p in allowed {
            let code = sft.code(&p)?;
            sft.allowed[code] = true;
        }
        Ok(sft)
    }

    pub fn from_forbidden(
        space: &ShiftSpace,
        window_radius: u32,
        forbidden: impl IntoIterator<Item = Vec<u8>>,
    ) -> Result<Self> {
        let mut sft = Self::empty(space, window_radius, true, PatternSetKind::Forbidden)?;
        for p in forbidden {
            let code = sft.code(&p)?;
            sft.allowed[code] = false;
        }
        Ok(sft)
    }

    /// Forbids every window pattern extending one of the partial patterns.
    pub fn from_forbidden_partials(space: &ShiftSpace, window_radius: u32, partials: &[Pattern]) -> Result<Self> {
        let mut sft = Self::empty(space, window_radius, true, PatternSetKind::Forbidden)?;
        for p in partials {
            if let Some(&(pos, v)) = p.cells().iter().find(|&&(pos, v)| pos >= sft.window_len || v as usize >= sft.alphabet_size) {
                return Err(Error::InvalidPattern(format!(
                    "cell ({pos}, {v}) outside window of {} cells / {} symbols",
                    sft.window_len, sft.alphabet_size
                )));
            }
        }
        for code in 0..sft.allowed.len() {
            let block = sft.decode(code);
            if partials.iter().any(|p| p.matches(&block)) {
                sft.allowed[code] = false;
            }
        }
        Ok(sft)
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn window_radius(&self) -> u32 {
        self.window_radius
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn primary(&self) -> PatternSetKind {
        self.primary
    }

    pub(crate) fn allowed_mask(&self) -> &[bool] {
        &self.allowed
    }

    pub fn pattern_count(&self) -> usize {
        self.allowed.len()
    }

    pub fn code(&self, block: &[u8]) -> Result<usize> {
        if block.len() != self.window_len {
            return Err(Error::InvalidPattern(format!(
                "pattern has {} cells, window has {}",
                block.len(),
                self.window_len
            )));
        }
        let mut code = 0usize;
        let mut scale = 1usize;
        for &v in block {
            if v as usize >= self.alphabet_size {
                return Err(Error::InvalidPattern(format!("symbol index {v} outside alphabet")));
            }
            code += v as usize * scale;
            scale *= self.alphabet_size;
        }
        Ok(code)
    }

    pub fn decode(&self, mut code: usize) -> Vec<u8> {
        (0..self.window_len)
            .map(|_| {
                let v = (code % self.alphabet_size) as u8;
                code /= self.alphabet_size;
                v
            })
            .collect()
    }

    pub fn is_allowed(&self, block: &[u8]) -> bool {
        self.code(block).map(|c| self.allowed[c]).unwrap_or(false)
    }

    pub fn allowed_patterns(&self) -> BTreeSet<Vec<u8>> {
        (0..self.allowed.len())
            .filter(|&c| self.allowed[c])
            .map(|c| self.decode(c))
            .collect()
    }

    pub fn forbidden_patterns(&self) -> BTreeSet<Vec<u8>> {
        (0..self.allowed.len())
            .filter(|&c| !self.allowed[c])
            .map(|c| self.decode(c))
            .collect()
    }

    pub fn is_full_shift(&self) -> bool {
        self.allowed.iter().all(|&a| a)
    }

    /// The same subshift described on the larger window `ball(radius)`.
    pub fn lift_to(&self, space: &ShiftSpace, radius: u32) -> Result<SftSpec> {
        if radius < self.window_radius {
            return Err(Error::InvalidPattern("cannot lift to a smaller window".into()));
        }
        let mut lifted = Self::empty(space, radius, false, self.primary)?;
        let positions = space.ball().size_at(radius - self.window_radius);
        for code in 0..lifted.allowed.len() {
            let x = Configuration::from_parts(radius, lifted.decode(code));
            lifted.allowed[code] = (0..positions).all(|g| {
                space
                    .window_pattern(&x, g, self.window_radius)
                    .map(|p| self.is_allowed(&p))
                    .unwrap_or(true)
            });
        }
        Ok(lifted)
    }
}

/// `X_W` from a forbidden set of patterns on `ball(M)`.
pub fn sft_from_forbidden(space: &ShiftSpace, window_radius: u32, forbidden: &BTreeSet<Vec<u8>>) -> Result<SftSpec> {
    let len = space.ball().size_at(window_radius);
    if let Some(p) = forbidden.iter().find(|p| p.len() != len) {
        return Err(Error::InvalidPattern(format!(
            "mixed supports: pattern with {} cells on a window of {len}",
            p.len()
        )));
    }
    SftSpec::from_forbidden(space, window_radius, forbidden.iter().cloned())
}

pub fn forbidden_from_sft(sft: &SftSpec) -> BTreeSet<Vec<u8>> {
    sft.forbidden_patterns()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "method")]
pub enum BlockMethod {
    /// Extendable to a locally admissible configuration on `ball(k + slack)`.
    Slack { slack: u32 },
    /// Bi-infinite paths in the transfer graph (standard generators of `Z`).
    TransferGraph,
    /// Exhaustive over the whole finite group.
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSet {
    pub radius: u32,
    pub method: BlockMethod,
    pub blocks: BTreeSet<Vec<u8>>,
}

/// Patterns on `ball(k)` extendable to a locally admissible configuration on
/// `ball(k + slack)`: an approximation of the allowed `k`-blocks that can
/// only shrink as `slack` grows.
pub fn allowed_blocks(space: &ShiftSpace, sft: &SftSpec, k: u32, slack: u32) -> Result<BlockSet> {
    let blocks = blocks_extendable_to(space, sft, k, k + slack, BLOCK_BUDGET)?;
    Ok(BlockSet {
        radius: k,
        method: BlockMethod::Slack { slack },
        blocks,
    })
}

fn blocks_extendable_to(
    space: &ShiftSpace,
    sft: &SftSpec,
    k: u32,
    outer: u32,
    budget: usize,
) -> Result<BTreeSet<Vec<u8>>> {
    space.check_sft_fits(sft)?;
    if outer > space.radius() && !space.group().family().is_finite() {
        return Err(Error::DomainExhausted(format!(
            "radius {outer} exceeds the enumerated ball ({})",
            space.radius()
        )));
    }
    let outer = outer.min(space.radius());
    let k = k.min(outer);
    let index = WindowIndex::new(space, sft, outer)?;
    let block_cells = space.ball().size_at(k);
    let mut blocks = BTreeSet::new();
    let mut fixed: Vec<Option<u8>> = vec![None; index.cells()];
    let mut inner_err = None;
    index.enumerate_prefixes(block_cells, &[], NODE_BUDGET, &mut |prefix| {
        for (f, &v) in fixed.iter_mut().zip(prefix) {
            *f = Some(v);
        }
        match index.complete::<rand_chacha::ChaCha8Rng>(&fixed, None, NODE_BUDGET) {
            Ok(Some(_)) => {
                blocks.insert(prefix.to_vec());
                if blocks.len() > budget {
                    inner_err = Some(Error::capacity("shift-space", "allowed blocks", blocks.len(), budget));
                    return Ok(false);
                }
            }
            Ok(None) => {}
            Err(e) => {
                inner_err = Some(e);
                return Ok(false);
            }
        }
        Ok(true)
    })?;
    match inner_err {
        Some(e) => Err(e),
        None => Ok(blocks),
    }
}

/// Exact allowed `k`-blocks where they are decidable here: `Z` with the
/// standard generators (transfer graph) and finite groups (exhaustive).
pub fn exact_allowed_blocks(space: &ShiftSpace, sft: &SftSpec, k: u32) -> Result<BlockSet> {
    space.check_sft_fits(sft)?;
    let group = space.group();
    match group.family() {
        GroupFamily::IntegerLattice(1)
            if group.generators() == [GroupElement::Lattice(vec![-1]), GroupElement::Lattice(vec![1])] =>
        {
            Ok(BlockSet {
                radius: k,
                method: BlockMethod::TransferGraph,
                blocks: transfer_graph_blocks(sft, k)?,
            })
        }
        GroupFamily::CyclicFinite(_) => {
            let ball = space.ball();
            // ball stops growing at the diameter
            let diameter = (0..=ball.radius())
                .find(|&r| ball.size_at(r) == ball.len())
                .unwrap_or(ball.radius());
            if ball.size_at(diameter) != ball.len() || ball.radius() < diameter + sft.window_radius() {
                return Err(Error::DomainExhausted("enumerated ball does not cover the group".into()));
            }
            let blocks = blocks_extendable_to(space, sft, k, diameter + sft.window_radius(), BLOCK_BUDGET)?;
            Ok(BlockSet {
                radius: k,
                method: BlockMethod::Exhaustive,
                blocks,
            })
        }
        _ => Err(Error::InvalidGenerators(format!(
            "exact block sets are only available for Z with generators {{-1, 1}} and finite groups, not {group}"
        ))),
    }
}

/// Ball position of the integer `t` in `Z` with generators `{-1, 1}`.
pub(crate) fn z_position(t: i64) -> usize {
    if t == 0 {
        0
    } else if t < 0 {
        (2 * -t - 1) as usize
    } else {
        (2 * t) as usize
    }
}

fn transfer_graph_blocks(sft: &SftSpec, k: u32) -> Result<BTreeSet<Vec<u8>>> {
    let m = sft.window_radius() as i64;
    let s = sft.alphabet_size();
    let wlen = (2 * m + 1) as usize;
    // allowed windows as left-to-right words over positions -m..=m
    let to_word = |block: &[u8]| -> Vec<u8> { (-m..=m).map(|t| block[z_position(t)]).collect() };
    let mut words: Vec<Vec<u8>> = sft.allowed_patterns().iter().map(|b| to_word(b)).collect();
    words.sort();
    let state_code = |w: &[u8]| -> usize { w.iter().fold(0usize, |acc, &v| acc * s + v as usize) };
    let n_states = s.pow((wlen - 1) as u32);
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); n_states];
    let mut in_edges: Vec<Vec<usize>> = vec![Vec::new(); n_states];
    for w in &words {
        let from = state_code(&w[..wlen - 1]);
        let to = state_code(&w[1..]);
        out_edges[from].push(to);
        in_edges[to].push(from);
    }
    let survivors = |edges: &Vec<Vec<usize>>| -> Vec<bool> {
        let mut alive = vec![true; n_states];
        loop {
            let mut changed = false;
            for st in 0..n_states {
                if alive[st] && !edges[st].iter().any(|&t| alive[t]) {
                    alive[st] = false;
                    changed = true;
                }
            }
            if !changed {
                return alive;
            }
        }
    };
    let forward = survivors(&out_edges);
    let backward = survivors(&in_edges);
    let allowed_word = |w: &[u8]| -> bool { words.binary_search_by(|x| x.as_slice().cmp(w)).is_ok() };

    let k = k as i64;
    let n = (2 * k + 1) as usize;
    let from_word = |w: &[u8]| -> Vec<u8> {
        let mut block = vec![0u8; n];
        for (i, &v) in w.iter().enumerate() {
            block[z_position(i as i64 - k)] = v;
        }
        block
    };
    let mut blocks = BTreeSet::new();
    if n < wlen {
        let off = (m - k) as usize;
        for w in &words {
            if backward[state_code(&w[..wlen - 1])] && forward[state_code(&w[1..])] {
                blocks.insert(from_word(&w[off..off + n]));
            }
        }
        return Ok(blocks);
    }
    let total = (s as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    // walk words left to right through the graph instead of testing all s^n
    let mut stack: Vec<Vec<u8>> = words
        .iter()
        .filter(|w| backward[state_code(&w[..wlen - 1])])
        .cloned()
        .collect();
    while let Some(w) = stack.pop() {
        if w.len() == n {
            if forward[state_code(&w[n - (wlen - 1)..])] {
                blocks.insert(from_word(&w));
                if blocks.len() > BLOCK_BUDGET {
                    return Err(Error::capacity("shift-space", "allowed blocks", total, BLOCK_BUDGET as u128));
                }
            }
            continue;
        }
        for v in 0..s as u8 {
            let mut next = w.clone();
            next.push(v);
            if allowed_word(&next[next.len() - wlen..]) {
                stack.push(next);
            }
        }
    }
    Ok(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::group::GroupFamily;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn z_space(radius: u32) -> ShiftSpace {
        ShiftSpace::new(GroupSpec::standard(GroupFamily::IntegerLattice(1)), Alphabet::binary(), radius).unwrap()
    }

    /// Configuration on Z from a left-to-right word over positions -r..=r.
    fn z_config(space: &ShiftSpace, word: &str) -> Configuration {
        let r = (word.len() as i64 - 1) / 2;
        let mut values = vec![0u8; word.len()];
        for (i, c) in word.chars().enumerate() {
            values[z_position(i as i64 - r)] = space.alphabet().index_of(c).unwrap();
        }
        Configuration::new(space, r as u32, values).unwrap()
    }

    #[test]
    fn shift_on_z_moves_left() {
        let space = z_space(4);
        let x = z_config(&space, "0110100");
        let y = space.shift(&GroupElement::Lattice(vec![1]), &x).unwrap();
        assert_eq!(y.radius(), 2);
        assert_eq!(y, z_config(&space, "10100"));
        assert_eq!(space.shift(&space.group().identity(), &x).unwrap(), x);
        assert!(matches!(
            space.shift(&GroupElement::Lattice(vec![4]), &x),
            Err(Error::DomainExhausted(_))
        ));
    }

    #[test]
    fn distance_conventions() {
        let space = z_space(6);
        let x = z_config(&space, "0000000000000");
        assert_eq!(space.distance(&x, &x).unwrap(), ShiftDistance::indistinguishable_at(6));
        let mut v = x.values().to_vec();
        v[z_position(5)] = 1;
        let y = Configuration::new(&space, 6, v).unwrap();
        assert_eq!(space.distance(&x, &y).unwrap().value(), Dyadic::pow2_neg(4));
        let mut v = x.values().to_vec();
        v[0] = 1;
        let y = Configuration::new(&space, 6, v).unwrap();
        assert_eq!(space.distance(&x, &y).unwrap(), ShiftDistance::one());
        let short = x.restrict(&space, 3).unwrap();
        assert!(matches!(space.distance(&x, &short), Err(Error::RadiusMismatch { .. })));
    }

    #[test]
    fn golden_mean_admissibility() {
        let space = z_space(8);
        let gm = catalog::golden_mean(&space).unwrap();
        assert!(space.locally_admissible(&z_config(&space, "01010101010101010"), &gm).unwrap());
        assert!(!space.locally_admissible(&z_config(&space, "01010110010101010"), &gm).unwrap());
        let full = SftSpec::full_shift(&space, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Configuration::random(&space, 8, &mut rng).unwrap();
        assert!(space.locally_admissible(&x, &full).unwrap());
        let tiny = x.restrict(&space, 0).unwrap();
        assert!(space.locally_admissible(&tiny, &gm).is_err());
    }

    #[test]
    fn hard_square_checkerboard() {
        let g = GroupSpec::standard(GroupFamily::IntegerLattice(2));
        let space = ShiftSpace::new(g, Alphabet::binary(), 6).unwrap();
        let hs = catalog::hard_square(&space).unwrap();
        let values = space
            .ball()
            .elements()
            .iter()
            .map(|e| match e {
                GroupElement::Lattice(v) => ((v[0] + v[1]).rem_euclid(2)) as u8,
                _ => unreachable!(),
            })
            .collect();
        let x = Configuration::new(&space, 6, values).unwrap();
        assert!(space.locally_admissible(&x, &hs).unwrap());
        let ones = Configuration::constant(&space, 6, 1).unwrap();
        assert!(!space.locally_admissible(&ones, &hs).unwrap());
    }

    #[test]
    fn golden_mean_blocks() {
        let space = z_space(8);
        let gm = catalog::golden_mean(&space).unwrap();
        let b1 = allowed_blocks(&space, &gm, 1, 4).unwrap();
        let words: BTreeSet<String> = b1
            .blocks
            .iter()
            .map(|b| [b[1], b[0], b[2]].iter().map(|v| char::from(b'0' + v)).collect())
            .collect();
        let expect: BTreeSet<String> = ["000", "001", "010", "100", "101"].iter().map(|s| s.to_string()).collect();
        assert_eq!(words, expect);
        assert_eq!(allowed_blocks(&space, &gm, 2, 4).unwrap().blocks.len(), 13);
        let full = SftSpec::full_shift(&space, 1).unwrap();
        assert_eq!(allowed_blocks(&space, &full, 2, 2).unwrap().blocks.len(), 32);
    }

    #[test]
    fn forbidden_roundtrip_and_errors() {
        let space = z_space(3);
        let gm = catalog::golden_mean(&space).unwrap();
        let w = forbidden_from_sft(&gm);
        assert_eq!(gm.allowed_patterns().len(), 8 - w.len());
        let back = sft_from_forbidden(&space, 1, &w).unwrap();
        assert_eq!(forbidden_from_sft(&back), w);
        assert!(sft_from_forbidden(&space, 1, &BTreeSet::new()).unwrap().is_full_shift());
        let mixed: BTreeSet<Vec<u8>> = [vec![0, 0, 0], vec![0, 0]].into_iter().collect();
        assert!(matches!(sft_from_forbidden(&space, 1, &mixed), Err(Error::InvalidPattern(_))));
    }

    #[test]
    fn configuration_codec() {
        let space = z_space(3);
        let x = z_config(&space, "0110100");
        let s = x.encode(space.alphabet());
        assert!(s.starts_with("r3:"));
        assert_eq!(Configuration::decode(&space, &s).unwrap(), x);
        assert!(Configuration::decode(&space, "r3:012").is_err());
    }

    #[test]
    fn lift_preserves_membership() {
        let space = z_space(6);
        let gm = catalog::golden_mean(&space).unwrap();
        let lifted = gm.lift_to(&space, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x = Configuration::random(&space, 6, &mut rng).unwrap();
            // the lifted window sees the same pairs except at the outermost edge
            if space.locally_admissible(&x, &gm).unwrap() {
                assert!(space.locally_admissible(&x, &lifted).unwrap());
            }
        }
    }
}
