//! Equicontinuous actions on Cantor spaces: boundaries of coset trees of
//! subgroup chains (odometers and their lattice analogues) and explicit
//! actions on `{0,1}^G`, together with the identity-entry tracing of their
//! pseudo-orbits.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::group::{Ball, GroupElement, GroupFamily, GroupSpec};
use crate::shift::{Alphabet, Configuration, ShiftSpace};

/// Largest number of cosets at the deepest level of a closed-form chain.
pub const LABEL_BUDGET: u64 = 1 << 62;
/// Largest level enumerated exhaustively, and the largest coset table.
pub const TABLE_BUDGET: u64 = 1 << 22;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ChainKind {
    /// `G_n = b^n Z`.
    Odometer { base: u64 },
    /// `G_n = (b^n Z)^d`.
    Lattice { base: u64, dim: usize },
    /// Explicit coset tables.
    Table,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct TableLevel {
    parent: Vec<u32>,
    /// Image of each coset under each canonical generator.
    forward: Vec<Vec<u32>>,
    backward: Vec<Vec<u32>>,
}

/// A chain `G = G_0 >= G_1 >= .. >= G_N` of finite-index subgroups, stored
/// as the left action of `G` on each coset space `G/G_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubgroupChain {
    group: GroupSpec,
    kind: ChainKind,
    depth: u32,
    tables: Vec<TableLevel>,
}

fn reject_finite(family: GroupFamily) -> Result<()> {
    if family.is_finite() {
        return Err(Error::InvalidChain(format!(
            "{} is finite; tracing on Cantor spaces needs an infinite group",
            family.name()
        )));
    }
    Ok(())
}

impl SubgroupChain {
    pub fn odometer(base: u64, depth: u32) -> Result<Self> {
        Self::lattice_like(ChainKind::Odometer { base }, base, 1, depth)
    }

    pub fn lattice(base: u64, dim: usize, depth: u32) -> Result<Self> {
        Self::lattice_like(ChainKind::Lattice { base, dim }, base, dim, depth)
    }

    fn lattice_like(kind: ChainKind, base: u64, dim: usize, depth: u32) -> Result<Self> {
        if base < 2 {
            return Err(Error::InvalidChain(format!("base {base} must be at least 2")));
        }
        if dim == 0 {
            return Err(Error::InvalidChain("lattice dimension must be positive".into()));
        }
        let total = (base as u128)
            .checked_pow(depth.checked_mul(dim as u32).ok_or(Error::Overflow("chain size"))?)
            .unwrap_or(u128::MAX);
        if total > LABEL_BUDGET as u128 {
            return Err(Error::capacity("cantor-profinite", "cosets at the deepest level", total, LABEL_BUDGET));
        }
        Ok(SubgroupChain {
            group: GroupSpec::standard(GroupFamily::IntegerLattice(dim)),
            kind,
            depth,
            tables: Vec::new(),
        })
    }

    /// Coset tables from CSV rows `level,coset,parent,image_1,..,image_r`,
    /// one image per canonical generator of `family`. Level 0 must be a
    /// single coset; every level must list its cosets `0..size` once.
    pub fn from_csv(family: GroupFamily, text: &str) -> Result<Self> {
        reject_finite(family)?;
        let gens = family.canonical_generators().len();
        let mut rows: Vec<Vec<(u32, u32, Vec<u32>)>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("level") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 + gens {
                return Err(Error::Parse(format!(
                    "line {}: expected {} fields, found {}",
                    lineno + 1,
                    3 + gens,
                    fields.len()
                )));
            }
            let nums = fields
                .iter()
                .map(|f| f.parse::<u64>().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1))))
                .collect::<Result<Vec<u64>>>()?;
            let level = nums[0] as usize;
            let to_u32 = |v: u64| u32::try_from(v).map_err(|_| Error::Parse(format!("line {}: label too large", lineno + 1)));
            if rows.len() <= level {
                rows.resize(level + 1, Vec::new());
            }
            rows[level].push((
                to_u32(nums[1])?,
                to_u32(nums[2])?,
                nums[3..].iter().map(|&v| to_u32(v)).collect::<Result<_>>()?,
            ));
        }
        if rows.is_empty() {
            return Err(Error::InvalidChain("no coset rows".into()));
        }
        let total: u64 = rows.iter().map(|r| r.len() as u64).sum();
        if total > TABLE_BUDGET {
            return Err(Error::capacity("cantor-profinite", "coset table rows", total, TABLE_BUDGET));
        }
        let mut tables = Vec::with_capacity(rows.len());
        for (level, mut level_rows) in rows.into_iter().enumerate() {
            level_rows.sort_by_key(|r| r.0);
            let size = level_rows.len();
            if size == 0 || level_rows.iter().enumerate().any(|(i, r)| r.0 as usize != i) {
                return Err(Error::InvalidChain(format!("level {level} must list cosets 0..size exactly once")));
            }
            if level == 0 && size != 1 {
                return Err(Error::InvalidChain("level 0 must be the trivial quotient".into()));
            }
            let parent: Vec<u32> = level_rows.iter().map(|r| if level == 0 { 0 } else { r.1 }).collect();
            let mut forward = vec![Vec::with_capacity(size); gens];
            for r in &level_rows {
                for (j, &img) in r.2.iter().enumerate() {
                    if img as usize >= size {
                        return Err(Error::InvalidChain(format!("level {level}: image {img} out of range")));
                    }
                    forward[j].push(img);
                }
            }
            let mut backward = vec![vec![0u32; size]; gens];
            for j in 0..gens {
                let mut seen = vec![false; size];
                for (x, &y) in forward[j].iter().enumerate() {
                    if std::mem::replace(&mut seen[y as usize], true) {
                        return Err(Error::InvalidChain(format!("level {level}: generator {} is not a permutation", j + 1)));
                    }
                    backward[j][y as usize] = x as u32;
                }
            }
            tables.push(TableLevel {
                parent,
                forward,
                backward,
            });
        }
        for level in 1..tables.len() {
            let prev = tables[level - 1].parent.len();
            if tables[level].parent.iter().any(|&p| p as usize >= prev) {
                return Err(Error::InvalidChain(format!("level {level}: parent out of range")));
            }
        }
        let chain = SubgroupChain {
            group: GroupSpec::standard(family),
            kind: ChainKind::Table,
            depth: (tables.len() - 1) as u32,
            tables,
        };
        chain.validate_tables()?;
        Ok(chain)
    }

    /// Refinement compatibility and the group's relations on every level.
    fn validate_tables(&self) -> Result<()> {
        let canon = self.group.family().canonical_generators();
        for (level, t) in self.tables.iter().enumerate() {
            let size = t.parent.len() as u64;
            for x in 0..size {
                for j in 0..canon.len() {
                    if level > 0 {
                        let up = self.gen_step(level as u32 - 1, j, false, t.parent[x as usize] as u64);
                        let down = t.parent[t.forward[j][x as usize] as usize] as u64;
                        if up != down {
                            return Err(Error::InvalidChain(format!(
                                "level {level}: generator {} does not respect refinement at coset {x}",
                                j + 1
                            )));
                        }
                    }
                }
                let w = |word: &[(usize, bool)]| word.iter().rev().fold(x, |acc, &(j, inv)| self.gen_step(level as u32, j, inv, acc));
                let ok = match self.group.family() {
                    GroupFamily::IntegerLattice(d) => (0..d)
                        .all(|i| (i + 1..d).all(|j| w(&[(i, false), (j, false)]) == w(&[(j, false), (i, false)]))),
                    GroupFamily::HeisenbergZ => {
                        let (a, b, c) = ((0, false), (1, false), (2, false));
                        w(&[a, c]) == w(&[c, a]) && w(&[b, c]) == w(&[c, b]) && w(&[a, b]) == w(&[b, a, c])
                    }
                    _ => true,
                };
                if !ok {
                    return Err(Error::Relation(format!("coset tables at level {level} violate a relation")));
                }
            }
        }
        Ok(())
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn kind(&self) -> &ChainKind {
        &self.kind
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// `[G : G_n]`.
    pub fn index(&self, level: u32) -> u64 {
        match self.kind {
            ChainKind::Odometer { base } => base.pow(level),
            ChainKind::Lattice { base, dim } => base.pow(level * dim as u32),
            ChainKind::Table => self.tables[level as usize].parent.len() as u64,
        }
    }

    fn modulus(&self, level: u32) -> u64 {
        match self.kind {
            ChainKind::Odometer { base } | ChainKind::Lattice { base, .. } => base.pow(level),
            ChainKind::Table => 0,
        }
    }

    fn decode(&self, level: u32, label: u64) -> Vec<u64> {
        let dim = match self.kind {
            ChainKind::Lattice { dim, .. } => dim,
            _ => 1,
        };
        let q = self.modulus(level);
        let mut rest = label;
        (0..dim)
            .map(|_| {
                let r = rest % q;
                rest /= q;
                r
            })
            .collect()
    }

    fn encode(&self, level: u32, coords: &[u64]) -> u64 {
        let q = self.modulus(level);
        coords.iter().rev().fold(0, |acc, &r| acc * q + r)
    }

    /// Label of the coset at `level - 1` containing `label`.
    pub fn parent(&self, level: u32, label: u64) -> u64 {
        match self.kind {
            ChainKind::Table => self.tables[level as usize].parent[label as usize] as u64,
            _ => {
                let q = self.modulus(level - 1);
                let coords: Vec<u64> = self.decode(level, label).into_iter().map(|r| r % q).collect();
                self.encode(level - 1, &coords)
            }
        }
    }

    /// Cosets at `level + 1` refining `label`, in increasing order.
    pub fn children(&self, level: u32, label: u64) -> Vec<u64> {
        match self.kind {
            ChainKind::Table => {
                let next = &self.tables[level as usize + 1].parent;
                (0..next.len() as u64).filter(|&y| next[y as usize] as u64 == label).collect()
            }
            ChainKind::Odometer { base } | ChainKind::Lattice { base, .. } => {
                let q = self.modulus(level);
                let coords = self.decode(level, label);
                let dim = coords.len();
                let mut out = Vec::with_capacity(base.pow(dim as u32) as usize);
                let mut digits = vec![0u64; dim];
                loop {
                    let c: Vec<u64> = coords.iter().zip(&digits).map(|(&r, &t)| r + t * q).collect();
                    out.push(self.encode(level + 1, &c));
                    let mut i = 0;
                    while i < dim {
                        digits[i] += 1;
                        if digits[i] < base {
                            break;
                        }
                        digits[i] = 0;
                        i += 1;
                    }
                    if i == dim {
                        break;
                    }
                }
                out.sort_unstable();
                out
            }
        }
    }

    fn gen_step(&self, level: u32, j: usize, inverse: bool, label: u64) -> u64 {
        match self.kind {
            ChainKind::Table => {
                let t = &self.tables[level as usize];
                let perm = if inverse { &t.backward[j] } else { &t.forward[j] };
                perm[label as usize] as u64
            }
            _ => {
                let q = self.modulus(level);
                let mut c = self.decode(level, label);
                c[j] = if inverse { (c[j] + q - 1) % q } else { (c[j] + 1) % q };
                self.encode(level, &c)
            }
        }
    }

    /// `g^e` applied to a table label, reducing `e` modulo the cycle length.
    fn gen_power(&self, level: u32, j: usize, e: i64, label: u64) -> u64 {
        let steps = e.unsigned_abs();
        let size = self.index(level);
        let walk = |n: u64| (0..n).fold(label, |acc, _| self.gen_step(level, j, e < 0, acc));
        if steps <= size {
            return walk(steps);
        }
        let mut cycle = 1;
        let mut y = self.gen_step(level, j, false, label);
        while y != label {
            y = self.gen_step(level, j, false, y);
            cycle += 1;
        }
        walk(steps % cycle)
    }

    /// The coset `g x` for a coset label `x` at `level`.
    pub fn act_label(&self, level: u32, g: &GroupElement, label: u64) -> Result<u64> {
        self.group.family().validate(g)?;
        if level > self.depth || label >= self.index(level) {
            return Err(Error::InvalidChain(format!("no coset {label} at level {level}")));
        }
        if level == 0 {
            return Ok(0);
        }
        match (&self.kind, g) {
            (ChainKind::Odometer { .. } | ChainKind::Lattice { .. }, GroupElement::Lattice(v)) => {
                let q = self.modulus(level) as i128;
                let coords: Vec<u64> = self
                    .decode(level, label)
                    .iter()
                    .zip(v)
                    .map(|(&r, &s)| (r as i128 + s as i128).rem_euclid(q) as u64)
                    .collect();
                Ok(self.encode(level, &coords))
            }
            (ChainKind::Table, GroupElement::Lattice(v)) => {
                Ok(v.iter().enumerate().fold(label, |acc, (j, &e)| self.gen_power(level, j, e, acc)))
            }
            (ChainKind::Table, GroupElement::Heisenberg([p, q, r])) => {
                let x = self.gen_power(level, 2, *r, label);
                let x = self.gen_power(level, 1, *q, x);
                Ok(self.gen_power(level, 0, *p, x))
            }
            (ChainKind::Table, GroupElement::Free(word)) => Ok(word
                .iter()
                .rev()
                .fold(label, |acc, l| self.gen_step(level, l.generator as usize, l.inverse, acc))),
            _ => Err(Error::FamilyMismatch(format!("{} does not act on this chain", self.group.format(g)))),
        }
    }

    /// The boundary point through the coset `label` at the deepest level.
    pub fn point_from_leaf(&self, label: u64) -> Result<BoundaryPoint> {
        if label >= self.index(self.depth) {
            return Err(Error::InvalidChain(format!("no coset {label} at level {}", self.depth)));
        }
        let mut path = vec![0; self.depth as usize + 1];
        path[self.depth as usize] = label;
        for n in (1..=self.depth).rev() {
            path[n as usize - 1] = self.parent(n, path[n as usize]);
        }
        Ok(BoundaryPoint { path })
    }

    pub fn random_point<R: Rng>(&self, rng: &mut R) -> BoundaryPoint {
        let leaf = rng.gen_range(0..self.index(self.depth));
        self.point_from_leaf(leaf).expect("label in range")
    }

    /// Checks `x_{n+1}` refines `x_n` along the path.
    pub fn validate_point(&self, p: &BoundaryPoint) -> Result<()> {
        if p.depth() != self.depth {
            return Err(Error::RadiusMismatch {
                left: p.depth(),
                right: self.depth,
            });
        }
        if p.path[0] != 0 {
            return Err(Error::InvalidChain("level 0 has a single coset".into()));
        }
        for n in 1..=self.depth {
            let x = p.path[n as usize];
            if x >= self.index(n) || self.parent(n, x) != p.path[n as usize - 1] {
                return Err(Error::InvalidChain(format!("level {n} does not refine level {}", n - 1)));
            }
        }
        Ok(())
    }
}

/// A path `(x_0, .., x_N)` of cosets `x_n in G/G_n` with `x_{n+1}` inside `x_n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BoundaryPoint {
    path: Vec<u64>,
}

impl BoundaryPoint {
    pub fn path(&self) -> &[u64] {
        &self.path
    }

    pub fn depth(&self) -> u32 {
        (self.path.len() - 1) as u32
    }

    pub fn leaf(&self) -> u64 {
        *self.path.last().expect("non-empty path")
    }

    /// `[G : G_n]`-coset at `level`.
    pub fn at(&self, level: u32) -> u64 {
        self.path[level as usize]
    }
}

/// Applies the level-wise coset permutation of `g`.
pub fn profinite_act(chain: &SubgroupChain, g: &GroupElement, p: &BoundaryPoint) -> Result<BoundaryPoint> {
    if p.depth() != chain.depth() {
        return Err(Error::RadiusMismatch {
            left: p.depth(),
            right: chain.depth(),
        });
    }
    let path = (0..=chain.depth())
        .map(|n| chain.act_label(n, g, p.path[n as usize]))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryPoint { path })
}

/// Which metric a distance was measured in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricForm {
    /// `2^{-n}` for the first level `n` where the paths differ.
    Tree,
    /// `sum_i 2^{-i} [x_{g_i} != y_{g_i}]` over the ball enumeration.
    WeightedSum,
}

/// Tree-form distance between two boundary points of depth `N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TreeDistance {
    pub first_disagreement: Option<u32>,
    pub depth: u32,
}

impl TreeDistance {
    /// `2^{-n}`, or zero when the paths agree through depth `N` (the true
    /// distance of the infinite points is then below `2^{-N}`).
    pub fn value(&self) -> Dyadic {
        self.first_disagreement.map_or_else(Dyadic::zero, Dyadic::pow2_neg)
    }

    pub fn indistinguishable(&self) -> bool {
        self.first_disagreement.is_none()
    }
}

impl PartialOrd for TreeDistance {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TreeDistance {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.value().cmp(&other.value())
    }
}

impl fmt::Display for TreeDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.first_disagreement {
            Some(n) => write!(f, "2^-{n}"),
            None => write!(f, "0 (agree through depth {})", self.depth),
        }
    }
}

pub fn boundary_distance(p: &BoundaryPoint, q: &BoundaryPoint) -> Result<TreeDistance> {
    if p.depth() != q.depth() {
        return Err(Error::RadiusMismatch {
            left: p.depth(),
            right: q.depth(),
        });
    }
    let first = p.path.iter().zip(&q.path).position(|(a, b)| a != b).map(|n| n as u32);
    Ok(TreeDistance {
        first_disagreement: first,
        depth: p.depth(),
    })
}

/// Weighted-sum distance on `{0,1}^G` truncated to a ball. Coordinate `i`
/// of the ball enumeration carries weight `2^{-i}`, starting from the
/// identity at `i = 0`, so `d < 2^{-k}` exactly when the configurations
/// agree on the first `k + 1` coordinates.
pub fn explicit_distance(x: &Configuration, y: &Configuration) -> Result<Dyadic> {
    if x.radius() != y.radius() {
        return Err(Error::RadiusMismatch {
            left: x.radius(),
            right: y.radius(),
        });
    }
    let n = x.values().len();
    if n == 0 {
        return Ok(Dyadic::zero());
    }
    let mut num = BigUint::zero();
    for (i, (a, b)) in x.values().iter().zip(y.values()).enumerate() {
        if a != b {
            num += BigUint::one() << (n - 1 - i);
        }
    }
    Ok(Dyadic::new(num, (n - 1) as u32))
}

/// Actions on `{0,1}^G` given coordinate-wise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExplicitAction {
    /// Every element acts trivially.
    Identity,
    /// `g` flips every symbol when its image in `Z/2` is odd (word length
    /// parity for lattices and free groups, `p + q` for `a^p b^q c^r`).
    Flip,
    /// `(g x)_h = x_{hg}`; not equicontinuous.
    Shift,
}

#[derive(Clone, Debug)]
pub struct ExplicitCantor {
    group: GroupSpec,
    action: ExplicitAction,
}

impl ExplicitCantor {
    pub fn new(group: GroupSpec, action: ExplicitAction) -> Result<Self> {
        reject_finite(group.family())?;
        Ok(ExplicitCantor { group, action })
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn action(&self) -> ExplicitAction {
        self.action
    }

    pub fn space(&self, radius: u32) -> Result<ShiftSpace> {
        ShiftSpace::new(self.group.clone(), Alphabet::binary(), radius)
    }

    fn parity(&self, g: &GroupElement) -> bool {
        match g {
            GroupElement::Lattice(v) => v.iter().map(|e| e.rem_euclid(2)).sum::<i64>() % 2 == 1,
            GroupElement::Free(w) => w.len() % 2 == 1,
            GroupElement::Heisenberg([p, q, _]) => (p + q).rem_euclid(2) == 1,
            GroupElement::Cyclic(r) => r % 2 == 1,
        }
    }

    /// `g x`; the shift shrinks the radius by `|g|`.
    pub fn act(&self, space: &ShiftSpace, g: &GroupElement, x: &Configuration) -> Result<Configuration> {
        match self.action {
            ExplicitAction::Identity => Ok(x.clone()),
            ExplicitAction::Flip => {
                if self.parity(g) {
                    Configuration::new(space, x.radius(), x.values().iter().map(|v| 1 - v).collect())
                } else {
                    Ok(x.clone())
                }
            }
            ExplicitAction::Shift => space.shift(g, x),
        }
    }

    /// Analytic modulus for the isometric actions.
    pub fn known_modulus(&self, m: u32) -> Option<u32> {
        match self.action {
            ExplicitAction::Identity | ExplicitAction::Flip => Some(m),
            ExplicitAction::Shift => None,
        }
    }
}

#[derive(Clone, Debug)]
pub enum EquicontinuousActionSpec {
    Profinite(SubgroupChain),
    Explicit(ExplicitCantor),
}

impl EquicontinuousActionSpec {
    pub fn group(&self) -> &GroupSpec {
        match self {
            EquicontinuousActionSpec::Profinite(c) => c.group(),
            EquicontinuousActionSpec::Explicit(e) => e.group(),
        }
    }

    pub fn metric_form(&self) -> MetricForm {
        match self {
            EquicontinuousActionSpec::Profinite(_) => MetricForm::Tree,
            EquicontinuousActionSpec::Explicit(_) => MetricForm::WeightedSum,
        }
    }

    /// `k(m)` known without sampling: `m` for level-preserving tree actions
    /// and for isometries of `{0,1}^G`.
    pub fn certified_modulus(&self, m: u32) -> Result<u32> {
        match self {
            EquicontinuousActionSpec::Profinite(c) => {
                if m > c.depth() {
                    return Err(Error::InvalidTolerance(format!("level {m} exceeds chain depth {}", c.depth())));
                }
                Ok(m)
            }
            EquicontinuousActionSpec::Explicit(e) => e.known_modulus(m).ok_or_else(|| {
                Error::InvalidTolerance("the shift action has no equicontinuity certificate".into())
            }),
        }
    }
}

/// A point of either model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum CantorPoint {
    Boundary(BoundaryPoint),
    Symbols(Configuration),
}

struct Model<'a> {
    spec: &'a EquicontinuousActionSpec,
    space: Option<ShiftSpace>,
}

impl<'a> Model<'a> {
    fn new(spec: &'a EquicontinuousActionSpec, radius: Option<u32>) -> Result<Self> {
        let space = match (spec, radius) {
            (EquicontinuousActionSpec::Explicit(e), Some(r)) => Some(e.space(r)?),
            _ => None,
        };
        Ok(Model { spec, space })
    }

    fn act(&self, g: &GroupElement, p: &CantorPoint) -> Result<CantorPoint> {
        match (self.spec, p) {
            (EquicontinuousActionSpec::Profinite(c), CantorPoint::Boundary(b)) => Ok(CantorPoint::Boundary(profinite_act(c, g, b)?)),
            (EquicontinuousActionSpec::Explicit(e), CantorPoint::Symbols(x)) => {
                Ok(CantorPoint::Symbols(e.act(self.space.as_ref().expect("explicit model has a space"), g, x)?))
            }
            _ => Err(Error::FamilyMismatch("point does not belong to this model".into())),
        }
    }

    fn distance(&self, p: &CantorPoint, q: &CantorPoint) -> Result<Dyadic> {
        match (p, q) {
            (CantorPoint::Boundary(a), CantorPoint::Boundary(b)) => Ok(boundary_distance(a, b)?.value()),
            (CantorPoint::Symbols(a), CantorPoint::Symbols(b)) => explicit_distance(a, b),
            _ => Err(Error::FamilyMismatch("points of different models".into())),
        }
    }
}

/// A family `{x^(g)}` indexed by `ball(radius)` in ball order.
#[derive(Clone, Debug, Serialize)]
pub struct CantorField {
    pub radius: u32,
    /// Entries agree with the true orbit through level (or coordinate) `k`.
    pub k: u32,
    pub entries: Vec<CantorPoint>,
    pub seed: Option<u64>,
}

/// Random base point `x`, entries `g x` kept through level `k` and
/// randomised below it. With `randomize = false` the field is the orbit.
pub fn generate_cantor_pseudo_orbit(
    spec: &EquicontinuousActionSpec,
    radius: u32,
    k: u32,
    config_radius: u32,
    seed: u64,
    randomize: bool,
) -> Result<CantorField> {
    let ball = spec.group().ball(radius)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = Model::new(spec, Some(config_radius))?;
    let base = match spec {
        EquicontinuousActionSpec::Profinite(c) => {
            if k > c.depth() {
                return Err(Error::InvalidTolerance(format!("k = {k} exceeds chain depth {}", c.depth())));
            }
            CantorPoint::Boundary(c.random_point(&mut rng))
        }
        EquicontinuousActionSpec::Explicit(e) => {
            if e.action() == ExplicitAction::Shift {
                return Err(Error::InvalidTolerance("the shift action has no equicontinuity certificate".into()));
            }
            let space = model.space.as_ref().expect("explicit space");
            if (k as usize) >= space.ball().len() {
                return Err(Error::InvalidTolerance(format!("k = {k} exceeds the configuration size")));
            }
            CantorPoint::Symbols(Configuration::random(space, config_radius, &mut rng)?)
        }
    };
    let mut entries = Vec::with_capacity(ball.len());
    for g in ball.elements() {
        let orbit = model.act(g, &base)?;
        let entry = if !randomize {
            orbit
        } else {
            match (spec, orbit) {
                (EquicontinuousActionSpec::Profinite(c), CantorPoint::Boundary(p)) => {
                    let mut label = p.at(k);
                    for n in k..c.depth() {
                        let kids = c.children(n, label);
                        label = kids[rng.gen_range(0..kids.len())];
                    }
                    CantorPoint::Boundary(c.point_from_leaf(label)?)
                }
                (_, CantorPoint::Symbols(x)) => {
                    let space = model.space.as_ref().expect("explicit space");
                    let values = x
                        .values()
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| if i as u32 <= k { v } else { rng.gen_range(0..2) })
                        .collect();
                    CantorPoint::Symbols(Configuration::new(space, x.radius(), values)?)
                }
                (_, other) => other,
            }
        };
        entries.push(entry);
    }
    Ok(CantorField {
        radius,
        k,
        entries,
        seed: Some(seed),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CantorTraceReport {
    pub form: MetricForm,
    pub trace_point: CantorPoint,
    pub level: u32,
    pub modulus: u32,
    pub epsilon: Dyadic,
    /// Largest `d(a x^(g), x^(ag))` in the field.
    pub pseudo_orbit_delta: Dyadic,
    /// Largest `d(g x^(e), x^(g))` over the ball.
    pub epsilon_achieved: Dyadic,
    pub radius: u32,
    pub checked: usize,
    pub within_level: bool,
}

impl CantorTraceReport {
    pub fn passed(&self) -> bool {
        self.within_level
    }
}

fn left_table(group: &GroupSpec, ball: &Ball) -> Result<Vec<Vec<Option<usize>>>> {
    let index: HashMap<&GroupElement, usize> = ball.elements().iter().enumerate().map(|(i, g)| (g, i)).collect();
    group
        .generators()
        .iter()
        .map(|a| {
            ball.elements()
                .iter()
                .map(|g| Ok(index.get(&group.multiply(a, g)?).copied()))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

/// Traces `field` by its identity entry, after checking it is a
/// `2^{-k(m)}` pseudo-orbit.
pub fn trace_equicontinuous(spec: &EquicontinuousActionSpec, field: &CantorField, m: u32) -> Result<CantorTraceReport> {
    let k = spec.certified_modulus(m)?;
    let group = spec.group();
    let ball = group.ball(field.radius)?;
    if field.entries.len() != ball.len() {
        return Err(Error::RadiusMismatch {
            left: field.entries.len() as u32,
            right: ball.len() as u32,
        });
    }
    let config_radius = match &field.entries[0] {
        CantorPoint::Symbols(x) => Some(x.radius()),
        CantorPoint::Boundary(_) => None,
    };
    let model = Model::new(spec, config_radius)?;
    let left = left_table(group, &ball)?;
    let delta = Dyadic::pow2_neg(k);
    let mut pseudo_orbit_delta = Dyadic::zero();
    for (a, row) in left.iter().enumerate() {
        for (g, target) in row.iter().enumerate() {
            let Some(ag) = *target else { continue };
            let moved = model.act(&group.generators()[a], &field.entries[g])?;
            let d = model.distance(&moved, &field.entries[ag])?;
            if d >= delta {
                return Err(Error::PseudoOrbitViolation(format!(
                    "d(a x^(g), x^(ag)) = {d} >= 2^-{k} for a = {}, g = {}",
                    group.format(&group.generators()[a]),
                    group.format(ball.element(g))
                )));
            }
            if d > pseudo_orbit_delta {
                pseudo_orbit_delta = d;
            }
        }
    }
    let trace = field.entries[0].clone();
    let residuals = ball
        .elements()
        .par_iter()
        .zip(&field.entries)
        .map(|(g, entry)| model.distance(&model.act(g, &trace)?, entry))
        .collect::<Result<Vec<Dyadic>>>()?;
    let epsilon_achieved = residuals.into_iter().max().unwrap_or_else(Dyadic::zero);
    let epsilon = Dyadic::pow2_neg(m);
    Ok(CantorTraceReport {
        form: spec.metric_form(),
        trace_point: trace,
        level: m,
        modulus: k,
        within_level: epsilon_achieved < epsilon,
        epsilon,
        pseudo_orbit_delta,
        epsilon_achieved,
        radius: field.radius,
        checked: ball.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ModulusReport {
    pub form: MetricForm,
    pub m: u32,
    /// `None` when no `k <= k_max` survived.
    pub k: Option<u32>,
    /// True for the tree form, where `k(m) = m` follows from cylinder preservation.
    pub exact: bool,
    /// False when `k` rests on sampling only.
    pub certified: bool,
    pub group_radius: u32,
    pub samples: usize,
    pub k_max: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ModulusOptions {
    /// Elements `g` tested lie in `ball(group_radius)`.
    pub group_radius: u32,
    pub samples: usize,
    /// Largest `k` tried before giving up.
    pub k_max: u32,
    pub seed: u64,
}

impl ModulusOptions {
    pub fn new(m: u32) -> Self {
        ModulusOptions {
            group_radius: 4,
            samples: 64,
            k_max: m + 16,
            seed: 0,
        }
    }
}

/// Smallest `k` with `d(x, y) < 2^{-k} => d(g x, g y) < 2^{-m}` on the
/// tested elements. The identity forces `k >= m`, so the search starts there.
pub fn equicontinuity_modulus(spec: &EquicontinuousActionSpec, m: u32, opts: &ModulusOptions) -> Result<ModulusReport> {
    match spec {
        EquicontinuousActionSpec::Profinite(c) => {
            if m > c.depth() {
                return Err(Error::InvalidTolerance(format!("level {m} exceeds chain depth {}", c.depth())));
            }
            let check = cylinder_preservation(c, m.min(c.depth().saturating_sub(1)))?;
            Ok(ModulusReport {
                form: MetricForm::Tree,
                m,
                k: check.holds.then_some(m),
                exact: true,
                certified: check.holds,
                group_radius: opts.group_radius,
                samples: 0,
                k_max: m,
            })
        }
        EquicontinuousActionSpec::Explicit(e) => {
            let ball = e.group().ball(opts.group_radius)?;
            // coordinates 0..=m must be covered after shifting by |g| <= R
            let mut r_m = 0;
            while e.group().ball(r_m)?.len() <= m as usize {
                r_m += 1;
            }
            let config_radius = r_m + opts.group_radius;
            let space = e.space(config_radius)?;
            let cells = space.ball().len();
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut found = None;
            for k in m..=opts.k_max {
                if k as usize + 1 >= cells {
                    break;
                }
                let mut ok = true;
                'samples: for _ in 0..opts.samples {
                    let x = Configuration::random(&space, config_radius, &mut rng)?;
                    let yv: Vec<u8> = x
                        .values()
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| if i as u32 <= k { v } else { rng.gen_range(0..2) })
                        .collect();
                    let y = Configuration::new(&space, config_radius, yv)?;
                    for g in ball.elements() {
                        let gx = e.act(&space, g, &x)?;
                        let gy = e.act(&space, g, &y)?;
                        if gx.values()[..=m as usize] != gy.values()[..=m as usize] {
                            ok = false;
                            break 'samples;
                        }
                    }
                }
                if ok {
                    found = Some(k);
                    break;
                }
            }
            Ok(ModulusReport {
                form: MetricForm::WeightedSum,
                m,
                k: found,
                exact: false,
                certified: found.is_some() && e.known_modulus(m) == found,
                group_radius: opts.group_radius,
                samples: opts.samples,
                k_max: opts.k_max,
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CylinderCheck {
    pub max_level: u32,
    pub cosets_checked: u64,
    pub holds: bool,
    /// `(level, coset, generator)` of the first failure.
    pub first_failure: Option<(u32, u64, String)>,
}

/// For every coset `x` at levels `0..=max_level` and every generator `s`,
/// checks that `s` maps the children of `x` onto the children of `s x`, so
/// `s O_x = O_{s x}`.
pub fn cylinder_preservation(chain: &SubgroupChain, max_level: u32) -> Result<CylinderCheck> {
    if max_level >= chain.depth() {
        return Err(Error::InvalidTolerance(format!(
            "level {max_level} needs children, chain depth is {}",
            chain.depth()
        )));
    }
    let group = chain.group();
    let mut checked = 0;
    for n in 0..=max_level {
        let size = chain.index(n);
        if size > TABLE_BUDGET {
            return Err(Error::capacity("cantor-profinite", format!("cosets at level {n}"), size, TABLE_BUDGET));
        }
        for x in 0..size {
            checked += 1;
            for s in group.generators() {
                let image: BTreeSet<u64> = chain
                    .children(n, x)
                    .into_iter()
                    .map(|y| chain.act_label(n + 1, s, y))
                    .collect::<Result<_>>()?;
                let target: BTreeSet<u64> = chain.children(n, chain.act_label(n, s, x)?).into_iter().collect();
                if image != target {
                    return Ok(CylinderCheck {
                        max_level,
                        cosets_checked: checked,
                        holds: false,
                        first_failure: Some((n, x, group.format(s))),
                    });
                }
            }
        }
    }
    Ok(CylinderCheck {
        max_level,
        cosets_checked: checked,
        holds: true,
        first_failure: None,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MinimalityProbe {
    pub level: u32,
    pub cosets: u64,
    pub visited: u64,
    pub minimal: bool,
}

/// Orbit of `p`'s level-`n` coset under the generators; the action is
/// minimal at that level when every coset is reached.
pub fn minimality_probe(chain: &SubgroupChain, p: &BoundaryPoint, level: u32) -> Result<MinimalityProbe> {
    let cosets = chain.index(level);
    if cosets > TABLE_BUDGET {
        return Err(Error::capacity("cantor-profinite", format!("cosets at level {level}"), cosets, TABLE_BUDGET));
    }
    let mut seen = vec![false; cosets as usize];
    let start = p.at(level);
    seen[start as usize] = true;
    let mut queue = VecDeque::from([start]);
    let mut visited = 1;
    while let Some(x) = queue.pop_front() {
        for s in chain.group().generators() {
            let y = chain.act_label(level, s, x)?;
            if !std::mem::replace(&mut seen[y as usize], true) {
                visited += 1;
                queue.push_back(y);
            }
        }
    }
    Ok(MinimalityProbe {
        level,
        cosets,
        visited,
        minimal: visited == cosets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(n: i64) -> GroupElement {
        GroupElement::Lattice(vec![n])
    }

    #[test]
    fn odometer_adds_with_carry() {
        let c = SubgroupChain::odometer(2, 4).unwrap();
        let p = c.point_from_leaf(0b0111).unwrap();
        assert_eq!(p.path(), &[0, 1, 3, 7, 7]);
        let q = profinite_act(&c, &z(1), &p).unwrap();
        assert_eq!(q.path(), &[0, 0, 0, 0, 8]);
        let mut r = p.clone();
        for _ in 0..16 {
            r = profinite_act(&c, &z(1), &r).unwrap();
        }
        assert_eq!(r, p);
        assert_eq!(profinite_act(&c, &z(0), &p).unwrap(), p);
        c.validate_point(&q).unwrap();
    }

    #[test]
    fn tree_distance() {
        let c = SubgroupChain::odometer(2, 6).unwrap();
        let p = c.point_from_leaf(0b000101).unwrap();
        let q = c.point_from_leaf(0b001101).unwrap();
        let d = boundary_distance(&p, &q).unwrap();
        assert_eq!(d.first_disagreement, Some(4));
        assert_eq!(d.value(), Dyadic::pow2_neg(4));
        assert!(boundary_distance(&p, &p).unwrap().indistinguishable());
        let short = SubgroupChain::odometer(2, 3).unwrap().point_from_leaf(0).unwrap();
        assert!(boundary_distance(&p, &short).is_err());
    }

    #[test]
    fn weighted_sum_distance() {
        let e = ExplicitCantor::new(GroupSpec::standard(GroupFamily::IntegerLattice(1)), ExplicitAction::Identity).unwrap();
        let space = e.space(2).unwrap();
        let x = Configuration::constant(&space, 2, 0).unwrap();
        let mut v = vec![0; 5];
        v[2] = 1;
        let y = Configuration::new(&space, 2, v).unwrap();
        assert_eq!(explicit_distance(&x, &y).unwrap(), Dyadic::pow2_neg(2));
    }

    #[test]
    fn lattice_chain_and_tables_agree() {
        let c = SubgroupChain::lattice(2, 2, 3).unwrap();
        assert_eq!(c.index(3), 64);
        let g = GroupElement::Lattice(vec![3, -5]);
        let h = GroupElement::Lattice(vec![-1, 2]);
        let p = c.point_from_leaf(37).unwrap();
        let gh = c.group().multiply(&g, &h).unwrap();
        let lhs = profinite_act(&c, &g, &profinite_act(&c, &h, &p).unwrap()).unwrap();
        assert_eq!(lhs, profinite_act(&c, &gh, &p).unwrap());
        assert!(cylinder_preservation(&c, 2).unwrap().holds);

        let csv = "level,coset,parent,e1\n0,0,0,0\n1,0,0,1\n1,1,0,0\n2,0,0,1\n2,1,1,2\n2,2,0,3\n2,3,1,0\n";
        let t = SubgroupChain::from_csv(GroupFamily::IntegerLattice(1), csv).unwrap();
        let o = SubgroupChain::odometer(2, 2).unwrap();
        for leaf in 0..4 {
            for n in -5..5 {
                let a = profinite_act(&t, &z(n), &t.point_from_leaf(leaf).unwrap()).unwrap();
                let b = profinite_act(&o, &z(n), &o.point_from_leaf(leaf).unwrap()).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn bad_tables_rejected() {
        let not_perm = "0,0,0,0\n1,0,0,0\n1,1,0,0\n";
        assert!(SubgroupChain::from_csv(GroupFamily::IntegerLattice(1), not_perm).is_err());
        let incompatible = "0,0,0,0\n1,0,0,1\n1,1,0,0\n2,0,0,0\n2,1,1,1\n2,2,0,2\n2,3,1,3\n";
        assert!(SubgroupChain::from_csv(GroupFamily::IntegerLattice(1), incompatible).is_err());
        assert!(SubgroupChain::from_csv(GroupFamily::CyclicFinite(4), "0,0,0,0\n").is_err());
    }

    #[test]
    fn odometer_tracing() {
        let spec = EquicontinuousActionSpec::Profinite(SubgroupChain::odometer(2, 12).unwrap());
        for seed in 0..10 {
            let field = generate_cantor_pseudo_orbit(&spec, 16, 5, 0, seed, true).unwrap();
            let r = trace_equicontinuous(&spec, &field, 5).unwrap();
            assert!(r.passed());
        }
        let field = generate_cantor_pseudo_orbit(&spec, 8, 5, 0, 3, false).unwrap();
        let r = trace_equicontinuous(&spec, &field, 5).unwrap();
        assert!(r.epsilon_achieved.is_zero());
        let coarse = generate_cantor_pseudo_orbit(&spec, 8, 2, 0, 3, true).unwrap();
        assert!(matches!(trace_equicontinuous(&spec, &coarse, 5), Err(Error::PseudoOrbitViolation(_))));
    }

    #[test]
    fn explicit_moduli() {
        let z1 = GroupSpec::standard(GroupFamily::IntegerLattice(1));
        let id = EquicontinuousActionSpec::Explicit(ExplicitCantor::new(z1.clone(), ExplicitAction::Identity).unwrap());
        let r = equicontinuity_modulus(&id, 3, &ModulusOptions::new(3)).unwrap();
        assert_eq!(r.k, Some(3));
        let flip = EquicontinuousActionSpec::Explicit(ExplicitCantor::new(z1.clone(), ExplicitAction::Flip).unwrap());
        assert_eq!(equicontinuity_modulus(&flip, 4, &ModulusOptions::new(4)).unwrap().k, Some(4));
        let shift = EquicontinuousActionSpec::Explicit(ExplicitCantor::new(z1, ExplicitAction::Shift).unwrap());
        let mut opts = ModulusOptions::new(2);
        opts.group_radius = 12;
        let r = equicontinuity_modulus(&shift, 2, &opts).unwrap();
        assert_eq!(r.k, None);
        let field = generate_cantor_pseudo_orbit(&flip, 4, 4, 6, 1, true).unwrap();
        assert!(trace_equicontinuous(&flip, &field, 4).unwrap().passed());
    }

    #[test]
    fn odometer_is_minimal() {
        let c = SubgroupChain::odometer(3, 5).unwrap();
        let p = c.point_from_leaf(17).unwrap();
        assert!(minimality_probe(&c, &p, 5).unwrap().minimal);
    }
}
