//! Concrete finitely generated groups with exact normal forms, the word
//! metric of a symmetric generating set, and Cayley-ball enumeration.
//!
//! Four families are supported: `Z^d`, free groups, the integral Heisenberg
//! group `<a,b,c | ac=ca, bc=cb, ab=bac>` and finite cyclic groups.
//! Elements carry a unique normal form so they can be hashed and ordered;
//! the ordering is what breaks ties inside a BFS layer of a ball.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default element budget for ball enumeration.
pub const DEFAULT_BALL_BUDGET: usize = 1_000_000;

/// Default radius within which a custom generating set must reach the
/// family's canonical generators.
pub const DEFAULT_GENERATION_RADIUS: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "family", content = "parameter")]
pub enum GroupFamily {
    /// `Z^d`.
    IntegerLattice(usize),
    /// Free group of the given rank.
    FreeGroup(usize),
    /// Integral Heisenberg group.
    HeisenbergZ,
    /// `Z/nZ`.
    CyclicFinite(u64),
}

/// One letter of a free-group word: generator index plus inversion flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub generator: u16,
    pub inverse: bool,
}

impl Letter {
    pub fn new(generator: u16, inverse: bool) -> Self {
        Letter { generator, inverse }
    }

    pub fn inv(self) -> Self {
        Letter {
            generator: self.generator,
            inverse: !self.inverse,
        }
    }
}

/// Normal form of a group element.
///
/// * lattice: coordinate vector
/// * free: freely reduced word
/// * Heisenberg: `(p, q, r)` standing for `a^p b^q c^r`
/// * cyclic: residue in `0..n`
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupElement {
    Lattice(Vec<i64>),
    Free(Vec<Letter>),
    Heisenberg([i64; 3]),
    Cyclic(u64),
}

impl GroupFamily {
    pub fn name(&self) -> String {
        match self {
            GroupFamily::IntegerLattice(d) => format!("Z^{d}"),
            GroupFamily::FreeGroup(r) => format!("F_{r}"),
            GroupFamily::HeisenbergZ => "H(Z)".into(),
            GroupFamily::CyclicFinite(n) => format!("Z/{n}"),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            GroupFamily::IntegerLattice(d) => *d == 0,
            GroupFamily::FreeGroup(r) => *r == 0,
            GroupFamily::HeisenbergZ => false,
            GroupFamily::CyclicFinite(_) => true,
        }
    }

    pub fn identity(&self) -> GroupElement {
        match self {
            GroupFamily::IntegerLattice(d) => GroupElement::Lattice(vec![0; *d]),
            GroupFamily::FreeGroup(_) => GroupElement::Free(Vec::new()),
            GroupFamily::HeisenbergZ => GroupElement::Heisenberg([0; 3]),
            GroupFamily::CyclicFinite(_) => GroupElement::Cyclic(0),
        }
    }

    /// The generators the family is defined by (without inverses).
    pub fn canonical_generators(&self) -> Vec<GroupElement> {
        match self {
            GroupFamily::IntegerLattice(d) => (0..*d)
                .map(|i| {
                    let mut v = vec![0; *d];
                    v[i] = 1;
                    GroupElement::Lattice(v)
                })
                .collect(),
            GroupFamily::FreeGroup(r) => (0..*r)
                .map(|i| GroupElement::Free(vec![Letter::new(i as u16, false)]))
                .collect(),
            GroupFamily::HeisenbergZ => vec![
                GroupElement::Heisenberg([1, 0, 0]),
                GroupElement::Heisenberg([0, 1, 0]),
                GroupElement::Heisenberg([0, 0, 1]),
            ],
            GroupFamily::CyclicFinite(n) => {
                if *n > 1 {
                    vec![GroupElement::Cyclic(1)]
                } else {
                    Vec::new()
                }
            }
        }
    }

    /// Checks that `g` is a well-formed normal form of this family.
    pub fn validate(&self, g: &GroupElement) -> Result<()> {
        let ok = match (self, g) {
            (GroupFamily::IntegerLattice(d), GroupElement::Lattice(v)) => v.len() == *d,
            (GroupFamily::FreeGroup(r), GroupElement::Free(w)) => {
                w.iter().all(|l| (l.generator as usize) < *r)
                    && w.windows(2).all(|p| p[0] != p[1].inv())
            }
            (GroupFamily::HeisenbergZ, GroupElement::Heisenberg(_)) => true,
            (GroupFamily::CyclicFinite(n), GroupElement::Cyclic(x)) => x < n,
            _ => {
                return Err(Error::FamilyMismatch(format!(
                    "{} is not an element of {}",
                    self.format(g),
                    self.name()
                )))
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidElement(format!(
                "{} is not a normal form in {}",
                self.format(g),
                self.name()
            )))
        }
    }

    pub fn multiply(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.validate(a)?;
        self.validate(b)?;
        self.multiply_unchecked(a, b)
    }

    /// Group law without normal-form validation of the inputs; family
    /// mismatches are still reported.
    pub(crate) fn multiply_unchecked(
        &self,
        a: &GroupElement,
        b: &GroupElement,
    ) -> Result<GroupElement> {
        Ok(match (self, a, b) {
            (GroupFamily::IntegerLattice(_), GroupElement::Lattice(x), GroupElement::Lattice(y)) => {
                let mut out = Vec::with_capacity(x.len());
                for (p, q) in x.iter().zip(y) {
                    out.push(p.checked_add(*q).ok_or(Error::Overflow("lattice product"))?);
                }
                GroupElement::Lattice(out)
            }
            (GroupFamily::FreeGroup(_), GroupElement::Free(x), GroupElement::Free(y)) => {
                let mut out = x.clone();
                for &l in y {
                    if out.last() == Some(&l.inv()) {
                        out.pop();
                    } else {
                        out.push(l);
                    }
                }
                GroupElement::Free(out)
            }
            (GroupFamily::HeisenbergZ, GroupElement::Heisenberg(x), GroupElement::Heisenberg(y)) => {
                // b^q a^p' = a^p' b^q c^{-q p'}
                let of = || Error::Overflow("Heisenberg product");
                let p = x[0].checked_add(y[0]).ok_or_else(of)?;
                let q = x[1].checked_add(y[1]).ok_or_else(of)?;
                let cross = x[1].checked_mul(y[0]).ok_or_else(of)?;
                let r = x[2]
                    .checked_add(y[2])
                    .and_then(|s| s.checked_sub(cross))
                    .ok_or_else(of)?;
                GroupElement::Heisenberg([p, q, r])
            }
            (GroupFamily::CyclicFinite(n), GroupElement::Cyclic(x), GroupElement::Cyclic(y)) => {
                GroupElement::Cyclic(((*x as u128 + *y as u128) % *n as u128) as u64)
            }
            _ => {
                return Err(Error::FamilyMismatch(format!(
                    "cannot multiply {} and {} in {}",
                    self.format(a),
                    self.format(b),
                    self.name()
                )))
            }
        })
    }

    pub fn inverse(&self, a: &GroupElement) -> Result<GroupElement> {
        self.validate(a)?;
        Ok(match a {
            GroupElement::Lattice(v) => GroupElement::Lattice(v.iter().map(|x| -x).collect()),
            GroupElement::Free(w) => GroupElement::Free(w.iter().rev().map(|l| l.inv()).collect()),
            GroupElement::Heisenberg([p, q, r]) => {
                // (p,q,r)(-p,-q,s) = (0,0, r + s + q p)
                let s = r
                    .checked_neg()
                    .and_then(|nr| p.checked_mul(*q).and_then(|pq| nr.checked_sub(pq)))
                    .ok_or(Error::Overflow("Heisenberg inverse"))?;
                GroupElement::Heisenberg([-p, -q, s])
            }
            GroupElement::Cyclic(x) => match self {
                GroupFamily::CyclicFinite(n) => GroupElement::Cyclic((n - x) % n),
                _ => unreachable!("validated"),
            },
        })
    }

    pub fn is_identity(&self, g: &GroupElement) -> bool {
        *g == self.identity()
    }

    /// Human-readable normal form; inverse of [`GroupFamily::parse`].
    pub fn format(&self, g: &GroupElement) -> String {
        match g {
            GroupElement::Lattice(v) if v.len() == 1 => v[0].to_string(),
            GroupElement::Lattice(v) => format!(
                "({})",
                v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
            ),
            GroupElement::Free(w) if w.is_empty() => "1".into(),
            GroupElement::Free(w) => w
                .iter()
                .map(|l| {
                    let c = free_letter_char(l.generator);
                    if l.inverse {
                        c.to_ascii_uppercase()
                    } else {
                        c
                    }
                })
                .collect(),
            GroupElement::Heisenberg([p, q, r]) => format!("({p},{q},{r})"),
            GroupElement::Cyclic(x) => x.to_string(),
        }
    }

    /// Parses the normal-form syntax used in configuration files:
    /// lattice `(1,-2)` (or a bare integer in `Z`), free words `aB` (uppercase
    /// is the inverse, `1` the identity; non-reduced input is reduced),
    /// Heisenberg triples `(p,q,r)`, cyclic residues `3` (reduced mod `n`).
    pub fn parse(&self, s: &str) -> Result<GroupElement> {
        let s = s.trim();
        let bad = |why: &str| Error::Parse(format!("{s:?} in {}: {why}", self.name()));
        let tuple = |s: &str| -> Result<Vec<i64>> {
            let inner = s
                .strip_prefix('(')
                .and_then(|t| t.strip_suffix(')'))
                .ok_or_else(|| bad("expected a parenthesised tuple"))?;
            inner
                .split(',')
                .map(|t| t.trim().parse::<i64>().map_err(|_| bad("bad integer")))
                .collect()
        };
        match self {
            GroupFamily::IntegerLattice(d) => {
                let v = if s.starts_with('(') {
                    tuple(s)?
                } else if *d == 1 {
                    vec![s.parse::<i64>().map_err(|_| bad("bad integer"))?]
                } else {
                    return Err(bad("expected a tuple"));
                };
                if v.len() != *d {
                    return Err(bad("wrong dimension"));
                }
                Ok(GroupElement::Lattice(v))
            }
            GroupFamily::FreeGroup(r) => {
                if s == "1" || s.is_empty() {
                    return Ok(GroupElement::Free(Vec::new()));
                }
                let mut g = GroupElement::Free(Vec::new());
                for c in s.chars() {
                    if !c.is_ascii_alphabetic() {
                        return Err(bad("free words use letters a..z, uppercase for inverses"));
                    }
                    let idx = (c.to_ascii_lowercase() as u8 - b'a') as usize;
                    if idx >= *r {
                        return Err(bad("generator out of range"));
                    }
                    let l = Letter::new(idx as u16, c.is_ascii_uppercase());
                    g = self.multiply_unchecked(&g, &GroupElement::Free(vec![l]))?;
                }
                Ok(g)
            }
            GroupFamily::HeisenbergZ => {
                let v = tuple(s)?;
                if v.len() != 3 {
                    return Err(bad("expected (p,q,r)"));
                }
                Ok(GroupElement::Heisenberg([v[0], v[1], v[2]]))
            }
            GroupFamily::CyclicFinite(n) => {
                let x: i128 = s.parse().map_err(|_| bad("bad integer"))?;
                Ok(GroupElement::Cyclic(x.rem_euclid(*n as i128) as u64))
            }
        }
    }
}

fn free_letter_char(generator: u16) -> char {
    (b'a' + (generator as u8)) as char
}

/// A finitely generated group together with a symmetric generating set.
///
/// Generating sets are symmetrised on construction: inverses are added, the
/// identity and duplicates removed, and the result sorted by normal form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupSpec {
    family: GroupFamily,
    generators: Vec<GroupElement>,
    base_generators: Vec<GroupElement>,
}

impl GroupSpec {
    /// Family with its default generating set. For the Heisenberg group this
    /// is `{a, b, c}` and their inverses.
    pub fn standard(family: GroupFamily) -> Self {
        Self::symmetrised(family, family.canonical_generators())
    }

    /// Custom generating set; rejected unless it reaches every canonical
    /// generator of the family within [`DEFAULT_GENERATION_RADIUS`].
    pub fn new(family: GroupFamily, generators: Vec<GroupElement>) -> Result<Self> {
        Self::with_generation_radius(family, generators, DEFAULT_GENERATION_RADIUS)
    }

    pub fn with_generation_radius(
        family: GroupFamily,
        generators: Vec<GroupElement>,
        radius: u32,
    ) -> Result<Self> {
        if let GroupFamily::FreeGroup(r) = family {
            if r > 26 {
                return Err(Error::InvalidGenerators("free groups of rank > 26 are not supported".into()));
            }
        }
        for g in &generators {
            family.validate(g)?;
        }
        let spec = Self::symmetrised(family, generators);
        for target in family.canonical_generators() {
            match word_length(&target, &spec, radius) {
                Ok(_) => {}
                Err(Error::NotFound { .. }) => {
                    return Err(Error::InvalidGenerators(format!(
                        "{} not reached within radius {radius}",
                        family.format(&target)
                    )))
                }
                Err(e) => return Err(e),
            }
        }
        Ok(spec)
    }

    fn symmetrised(family: GroupFamily, generators: Vec<GroupElement>) -> Self {
        let identity = family.identity();
        let mut base: Vec<GroupElement> = Vec::new();
        let mut all: Vec<GroupElement> = Vec::new();
        for g in generators {
            if g == identity || all.contains(&g) {
                continue;
            }
            let inv = family.inverse(&g).expect("validated generator");
            base.push(g.clone());
            all.push(g);
            if !all.contains(&inv) {
                all.push(inv);
            }
        }
        all.sort();
        GroupSpec {
            family,
            generators: all,
            base_generators: base,
        }
    }

    pub fn family(&self) -> GroupFamily {
        self.family
    }

    /// The symmetric generating set in normal-form order.
    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    /// One representative per inverse pair, in the order first supplied.
    pub fn base_generators(&self) -> &[GroupElement] {
        &self.base_generators
    }

    pub fn is_symmetric(&self) -> bool {
        self.generators.iter().all(|g| {
            let inv = self.family.inverse(g).expect("valid generator");
            self.generators.contains(&inv)
        })
    }

    pub fn identity(&self) -> GroupElement {
        self.family.identity()
    }

    pub fn multiply(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.family.multiply(a, b)
    }

    pub fn inverse(&self, a: &GroupElement) -> Result<GroupElement> {
        self.family.inverse(a)
    }

    pub fn format(&self, g: &GroupElement) -> String {
        self.family.format(g)
    }

    pub fn parse(&self, s: &str) -> Result<GroupElement> {
        self.family.parse(s)
    }

    /// Product of a word of elements, left to right.
    pub fn product<'a>(&self, word: impl IntoIterator<Item = &'a GroupElement>) -> Result<GroupElement> {
        let mut acc = self.identity();
        for g in word {
            acc = self.family.multiply_unchecked(&acc, g)?;
        }
        Ok(acc)
    }

    pub fn ball(&self, radius: u32) -> Result<Ball> {
        ball(self, radius)
    }
}

/// The Cayley ball `{g : l_A(g) <= radius}`.
///
/// Elements are stored in BFS layer order, each layer sorted by normal form,
/// so `ball(k)` is always a prefix of `ball(K)` for `k <= K`. The BFS tree
/// is kept: element `i > 0` equals `generators[parent_generator[i]] *
/// elements[parent[i]]`.
#[derive(Clone, Debug)]
pub struct Ball {
    radius: u32,
    elements: Vec<GroupElement>,
    index: HashMap<GroupElement, usize>,
    layer_ends: Vec<usize>,
    parent: Vec<u32>,
    parent_generator: Vec<u16>,
}

impl Ball {
    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &GroupElement {
        &self.elements[i]
    }

    pub fn position(&self, g: &GroupElement) -> Option<usize> {
        self.index.get(g).copied()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.index.contains_key(g)
    }

    /// `|ball(k)|` for `k <= radius`.
    pub fn size_at(&self, k: u32) -> usize {
        self.layer_ends[k.min(self.radius) as usize]
    }

    /// Word length of the element at position `i`.
    pub fn length_of(&self, i: usize) -> u32 {
        self.layer_ends.partition_point(|&end| end <= i) as u32
    }

    /// Positions of the elements of length exactly `k`.
    pub fn layer(&self, k: u32) -> std::ops::Range<usize> {
        let start = if k == 0 { 0 } else { self.size_at(k - 1) };
        start..self.size_at(k)
    }

    /// Parent of position `i > 0` in the BFS tree, with the generator index
    /// `j` such that `element(i) = generators[j] * element(parent)`.
    pub fn parent(&self, i: usize) -> Option<(usize, usize)> {
        (i > 0).then(|| (self.parent[i] as usize, self.parent_generator[i] as usize))
    }

    /// Geodesic word `[a_1, .., a_n]` (generator indices) with
    /// `element(i) = a_1 ... a_n`.
    pub fn geodesic(&self, mut i: usize) -> Vec<usize> {
        let mut word = Vec::new();
        while let Some((p, j)) = self.parent(i) {
            word.push(j);
            i = p;
        }
        word
    }
}

/// Layer-by-layer BFS over the Cayley graph, multiplying on the left.
struct BallBuilder<'a> {
    spec: &'a GroupSpec,
    elements: Vec<GroupElement>,
    index: HashMap<GroupElement, usize>,
    layer_ends: Vec<usize>,
    parent: Vec<u32>,
    parent_generator: Vec<u16>,
    budget: usize,
}

impl<'a> BallBuilder<'a> {
    fn new(spec: &'a GroupSpec, budget: usize) -> Self {
        let e = spec.identity();
        let mut index = HashMap::new();
        index.insert(e.clone(), 0);
        BallBuilder {
            spec,
            elements: vec![e],
            index,
            layer_ends: vec![1],
            parent: vec![0],
            parent_generator: vec![0],
            budget,
        }
    }

    fn radius(&self) -> u32 {
        (self.layer_ends.len() - 1) as u32
    }

    fn grow(&mut self) -> Result<std::ops::Range<usize>> {
        let start = if self.layer_ends.len() >= 2 {
            self.layer_ends[self.layer_ends.len() - 2]
        } else {
            0
        };
        let end = *self.layer_ends.last().expect("non-empty");
        let mut fresh: HashMap<GroupElement, (u32, u16)> = HashMap::new();
        for i in start..end {
            for (j, a) in self.spec.generators.iter().enumerate() {
                let g = self.spec.family.multiply_unchecked(a, &self.elements[i])?;
                if !self.index.contains_key(&g) {
                    fresh.entry(g).or_insert((i as u32, j as u16));
                }
            }
        }
        let total = self.elements.len() + fresh.len();
        if total > self.budget {
            return Err(Error::capacity(
                "group-core",
                format!("ball of radius {}", self.radius() + 1),
                total,
                self.budget,
            ));
        }
        let mut layer: Vec<(GroupElement, (u32, u16))> = fresh.into_iter().collect();
        layer.sort_by(|x, y| x.0.cmp(&y.0));
        let first = self.elements.len();
        for (g, (p, j)) in layer {
            self.index.insert(g.clone(), self.elements.len());
            self.elements.push(g);
            self.parent.push(p);
            self.parent_generator.push(j);
        }
        self.layer_ends.push(self.elements.len());
        Ok(first..self.elements.len())
    }

    fn finish(self) -> Ball {
        Ball {
            radius: self.radius(),
            elements: self.elements,
            index: self.index,
            layer_ends: self.layer_ends,
            parent: self.parent,
            parent_generator: self.parent_generator,
        }
    }
}

/// Ball of radius `k` under the default element budget.
pub fn ball(spec: &GroupSpec, k: u32) -> Result<Ball> {
    ball_with_budget(spec, k, DEFAULT_BALL_BUDGET)
}

pub fn ball_with_budget(spec: &GroupSpec, k: u32, budget: usize) -> Result<Ball> {
    let mut b = BallBuilder::new(spec, budget);
    while b.radius() < k {
        b.grow()?;
    }
    Ok(b.finish())
}

/// `l_A(g)`, or `NotFound` when it exceeds `max_radius`.
pub fn word_length(g: &GroupElement, spec: &GroupSpec, max_radius: u32) -> Result<u32> {
    spec.family.validate(g)?;
    let mut b = BallBuilder::new(spec, DEFAULT_BALL_BUDGET);
    if b.index.contains_key(g) {
        return Ok(0);
    }
    while b.radius() < max_radius {
        let layer = b.grow()?;
        if layer.is_empty() {
            break;
        }
        if b.index.contains_key(g) {
            return Ok(b.radius());
        }
    }
    Err(Error::NotFound {
        element: spec.format(g),
        max_radius,
    })
}

/// A geodesic word over the generating set `target` whose product is `a`.
///
/// The word is read off the left-multiplying BFS tree, parents visited in
/// ball order and generators in normal-form order; the first discovery wins.
pub fn rewrite_generator(
    a: &GroupElement,
    target: &GroupSpec,
    max_radius: u32,
) -> Result<Vec<GroupElement>> {
    target.family.validate(a)?;
    let mut b = BallBuilder::new(target, DEFAULT_BALL_BUDGET);
    while !b.index.contains_key(a) {
        if b.radius() >= max_radius {
            return Err(Error::NotFound {
                element: target.format(a),
                max_radius,
            });
        }
        if b.grow()?.is_empty() {
            return Err(Error::NotFound {
                element: target.format(a),
                max_radius,
            });
        }
    }
    let ball = b.finish();
    let i = ball.position(a).expect("found");
    Ok(ball
        .geodesic(i)
        .into_iter()
        .map(|j| target.generators[j].clone())
        .collect())
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gens: Vec<String> = self.generators.iter().map(|g| self.format(g)).collect();
        write!(f, "{} <{}>", self.family.name(), gens.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(d: usize) -> GroupSpec {
        GroupSpec::standard(GroupFamily::IntegerLattice(d))
    }

    fn lat(v: &[i64]) -> GroupElement {
        GroupElement::Lattice(v.to_vec())
    }

    fn heis(p: i64, q: i64, r: i64) -> GroupElement {
        GroupElement::Heisenberg([p, q, r])
    }

    #[test]
    fn lattice_product() {
        let g = z(2);
        assert_eq!(g.multiply(&lat(&[1, 0]), &lat(&[0, 1])).unwrap(), lat(&[1, 1]));
        assert_eq!(g.inverse(&lat(&[3, -1])).unwrap(), lat(&[-3, 1]));
        assert_eq!(z(1).inverse(&lat(&[3])).unwrap(), lat(&[-3]));
    }

    #[test]
    fn free_reduction() {
        let f2 = GroupSpec::standard(GroupFamily::FreeGroup(2));
        let x_yinv = f2.parse("aB").unwrap();
        let y_x = f2.parse("ba").unwrap();
        assert_eq!(f2.multiply(&x_yinv, &y_x).unwrap(), f2.parse("aa").unwrap());
        assert_eq!(f2.inverse(&f2.parse("ab").unwrap()).unwrap(), f2.parse("BA").unwrap());
        assert_eq!(f2.parse("abBA").unwrap(), f2.identity());
    }

    #[test]
    fn heisenberg_relations() {
        let h = GroupSpec::standard(GroupFamily::HeisenbergZ);
        let (a, b, c) = (heis(1, 0, 0), heis(0, 1, 0), heis(0, 0, 1));
        let ab = h.multiply(&a, &b).unwrap();
        let ba = h.multiply(&b, &a).unwrap();
        assert_ne!(ab, ba);
        assert_eq!(ab, h.multiply(&ba, &c).unwrap());
        assert_eq!(h.multiply(&a, &c).unwrap(), h.multiply(&c, &a).unwrap());
        assert_eq!(h.multiply(&b, &c).unwrap(), h.multiply(&c, &b).unwrap());
    }

    #[test]
    fn heisenberg_inverse_of_ab() {
        let h = GroupSpec::standard(GroupFamily::HeisenbergZ);
        let t = h.inverse(&heis(1, 1, 0)).unwrap();
        assert_eq!(t, heis(-1, -1, -1));
        assert_eq!(h.multiply(&heis(1, 1, 0), &t).unwrap(), h.identity());
    }

    #[test]
    fn mismatched_families_rejected() {
        let g = z(2);
        let err = g.multiply(&lat(&[1, 0]), &heis(1, 0, 0)).unwrap_err();
        assert!(matches!(err, Error::FamilyMismatch(_)));
        assert!(matches!(g.multiply(&lat(&[1]), &lat(&[0, 1])), Err(Error::InvalidElement(_))));
    }

    #[test]
    fn small_balls() {
        let b = z(1).ball(2).unwrap();
        let expect: Vec<_> = [0, -1, 1, -2, 2].iter().map(|&x| lat(&[x])).collect();
        assert_eq!(b.elements(), expect.as_slice());
        assert_eq!(z(2).ball(2).unwrap().len(), 13);
        assert_eq!(GroupSpec::standard(GroupFamily::FreeGroup(2)).ball(2).unwrap().len(), 17);
        let b = z(2).ball(3).unwrap();
        assert_eq!(b.length_of(0), 0);
        assert_eq!(b.length_of(1), 1);
        assert_eq!(b.length_of(12), 2);
        assert_eq!(b.length_of(13), 3);
        assert_eq!(b.layer(2), 5..13);
    }

    #[test]
    fn ball_capacity_guard() {
        let err = ball_with_budget(&GroupSpec::standard(GroupFamily::FreeGroup(2)), 8, 1000).unwrap_err();
        assert!(err.is_capacity());
    }

    #[test]
    fn finite_group_ball_saturates() {
        let c5 = GroupSpec::standard(GroupFamily::CyclicFinite(5));
        let b = c5.ball(10).unwrap();
        assert_eq!(b.len(), 5);
        assert_eq!(b.size_at(2), 5);
        assert_eq!(b.size_at(1), 3);
    }

    #[test]
    fn word_lengths() {
        assert_eq!(word_length(&lat(&[5]), &z(1), 10).unwrap(), 5);
        assert_eq!(word_length(&lat(&[2, -1]), &z(2), 10).unwrap(), 3);
        assert!(matches!(word_length(&lat(&[5]), &z(1), 4), Err(Error::NotFound { .. })));
    }

    #[test]
    fn rewrite_examples() {
        let b = GroupSpec::new(GroupFamily::IntegerLattice(1), vec![lat(&[2]), lat(&[3])]).unwrap();
        assert_eq!(rewrite_generator(&lat(&[1]), &b, 4).unwrap(), vec![lat(&[3]), lat(&[-2])]);
        let b2 = GroupSpec::new(GroupFamily::IntegerLattice(2), vec![lat(&[1, 0]), lat(&[1, 1])]).unwrap();
        assert_eq!(rewrite_generator(&lat(&[1, 0]), &b2, 4).unwrap(), vec![lat(&[1, 0])]);
        let f2 = GroupSpec::standard(GroupFamily::FreeGroup(2));
        let x = f2.parse("a").unwrap();
        assert_eq!(rewrite_generator(&x, &f2, 3).unwrap(), vec![x.clone()]);
    }

    #[test]
    fn symmetrisation() {
        let s = GroupSpec::new(GroupFamily::IntegerLattice(1), vec![lat(&[1]), lat(&[0]), lat(&[1])]).unwrap();
        assert_eq!(s.generators(), &[lat(&[-1]), lat(&[1])]);
        assert_eq!(s.base_generators(), &[lat(&[1])]);
        assert!(s.is_symmetric());
    }

    #[test]
    fn non_generating_set_rejected() {
        let err = GroupSpec::new(GroupFamily::IntegerLattice(1), vec![lat(&[2])]).unwrap_err();
        assert!(matches!(err, Error::InvalidGenerators(_)));
        let err = GroupSpec::new(GroupFamily::IntegerLattice(2), vec![lat(&[1, 0])]).unwrap_err();
        assert!(matches!(err, Error::InvalidGenerators(_)));
    }

    #[test]
    fn parse_format_roundtrip() {
        let h = GroupSpec::standard(GroupFamily::HeisenbergZ);
        let g = heis(2, -1, 7);
        assert_eq!(h.parse(&h.format(&g)).unwrap(), g);
        let c7 = GroupSpec::standard(GroupFamily::CyclicFinite(7));
        assert_eq!(c7.parse("-1").unwrap(), GroupElement::Cyclic(6));
        let f3 = GroupSpec::standard(GroupFamily::FreeGroup(3));
        assert_eq!(f3.format(&f3.parse("abC").unwrap()), "abC");
        assert!(f3.parse("ad").is_err());
    }
}
