//! Named subshifts of finite type used throughout the test suites and the
//! CLI. Window positions are ball positions, so the constructors look the
//! relevant elements up instead of hard-coding indices.

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupFamily, Letter};
use crate::shift::{Pattern, SftSpec, ShiftSpace};

fn require(space: &ShiftSpace, family: fn(GroupFamily) -> bool, name: &str) -> Result<()> {
    if !family(space.group().family()) {
        return Err(Error::FamilyMismatch(format!(
            "{name} is not defined on {}",
            space.group().family().name()
        )));
    }
    if space.alphabet().len() != 2 {
        return Err(Error::InvalidAlphabet(format!("{name} needs a binary alphabet")));
    }
    Ok(())
}

fn pos(space: &ShiftSpace, g: GroupElement) -> Result<usize> {
    space.position(&g)
}

fn ones(cells: &[usize]) -> Result<Pattern> {
    Pattern::new(cells.iter().map(|&c| (c, 1)).collect())
}

/// No two adjacent 1s on `Z`: window `ball(1)`, forbid `x_0 = x_1 = 1`.
pub fn golden_mean(space: &ShiftSpace) -> Result<SftSpec> {
    require(space, |f| f == GroupFamily::IntegerLattice(1), "golden mean")?;
    let e = pos(space, GroupElement::Lattice(vec![0]))?;
    let one = pos(space, GroupElement::Lattice(vec![1]))?;
    SftSpec::from_forbidden_partials(space, 1, &[ones(&[e, one])?])
}

/// Window approximation of the even shift on `Z`: window `ball(2)`, forbid
/// `101` and `10001` (1s separated by an odd run of 0s of length <= 3).
pub fn even_window(space: &ShiftSpace) -> Result<SftSpec> {
    require(space, |f| f == GroupFamily::IntegerLattice(1), "even window")?;
    let at = |t: i64| pos(space, GroupElement::Lattice(vec![t]));
    SftSpec::from_forbidden_partials(
        space,
        2,
        &[
            Pattern::new(vec![(at(-1)?, 1), (at(0)?, 0), (at(1)?, 1)])?,
            Pattern::new(vec![(at(-2)?, 1), (at(-1)?, 0), (at(0)?, 0), (at(1)?, 0), (at(2)?, 1)])?,
        ],
    )
}

/// No two 1s adjacent along either axis of `Z^2`.
pub fn hard_square(space: &ShiftSpace) -> Result<SftSpec> {
    require(space, |f| f == GroupFamily::IntegerLattice(2), "hard square")?;
    let c = pos(space, GroupElement::Lattice(vec![0, 0]))?;
    let mut partials = Vec::new();
    for v in [[1, 0], [-1, 0], [0, 1], [0, -1]] {
        let n = pos(space, GroupElement::Lattice(v.to_vec()))?;
        partials.push(ones(&[c, n])?);
    }
    SftSpec::from_forbidden_partials(space, 1, &partials)
}

/// On a free group: forbid `x_g = x_{ag} = 1` for the first generator `a`.
pub fn free_one_forbidden(space: &ShiftSpace) -> Result<SftSpec> {
    require(space, |f| matches!(f, GroupFamily::FreeGroup(r) if r >= 1), "one-forbidden pattern")?;
    let e = pos(space, GroupElement::Free(Vec::new()))?;
    let a = pos(space, GroupElement::Free(vec![Letter::new(0, false)]))?;
    SftSpec::from_forbidden_partials(space, 1, &[ones(&[e, a])?])
}

/// Catalog lookup used by configuration files.
pub fn by_name(space: &ShiftSpace, name: &str, window_radius: u32) -> Result<SftSpec> {
    match name {
        "full" => SftSpec::full_shift(space, window_radius),
        "golden-mean" => golden_mean(space),
        "even-window" => even_window(space),
        "hard-square" => hard_square(space),
        "free-one-forbidden" => free_one_forbidden(space),
        other => Err(Error::InvalidPattern(format!("unknown SFT {other:?}"))),
    }
}

pub const NAMES: &[&str] = &["full", "golden-mean", "even-window", "hard-square", "free-one-forbidden"];
