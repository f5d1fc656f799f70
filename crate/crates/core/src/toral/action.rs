//! Actions of the implemented groups on tori by integer matrices.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupFamily};
use crate::toral::matrix::IntegerMatrix;

/// A group acting on `T^n` through integer matrices assigned to the
/// family's canonical generators (`e_i` for `Z^d`, `a, b, c` for the
/// Heisenberg group, the letters for a free group, `1` for `Z/n`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToralActionSpec {
    family: GroupFamily,
    matrices: Vec<IntegerMatrix>,
    dim: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelationCheck {
    pub relation: String,
    pub holds: bool,
}

impl ToralActionSpec {
    /// Validates unimodularity and every defining relation exactly.
    pub fn new(family: GroupFamily, matrices: Vec<IntegerMatrix>) -> Result<Self> {
        let gens = family.canonical_generators();
        if matrices.len() != gens.len() {
            return Err(Error::InvalidMatrix(format!(
                "{} needs {} matrices, got {}",
                family.name(),
                gens.len(),
                matrices.len()
            )));
        }
        let dim = matrices.first().map(|m| m.dim()).unwrap_or(1);
        for m in &matrices {
            if m.dim() != dim {
                return Err(Error::InvalidMatrix("matrices of different sizes".into()));
            }
            m.inverse()?;
        }
        let spec = ToralActionSpec { family, matrices, dim };
        if let Some(bad) = spec.relation_check()?.into_iter().find(|r| !r.holds) {
            return Err(Error::Relation(format!("{} fails", bad.relation)));
        }
        Ok(spec)
    }

    /// `Z` acting by powers of one matrix.
    pub fn cyclic(a: IntegerMatrix) -> Result<Self> {
        Self::new(GroupFamily::IntegerLattice(1), vec![a])
    }

    pub fn family(&self) -> GroupFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrices(&self) -> &[IntegerMatrix] {
        &self.matrices
    }

    /// Exact identities required by the group's presentation.
    pub fn relation_check(&self) -> Result<Vec<RelationCheck>> {
        let m = &self.matrices;
        let mut out = Vec::new();
        match self.family {
            GroupFamily::IntegerLattice(d) => {
                for i in 0..d {
                    for j in i + 1..d {
                        out.push(RelationCheck {
                            relation: format!("e{}e{} = e{}e{}", i + 1, j + 1, j + 1, i + 1),
                            holds: m[i].commutes_with(&m[j])?,
                        });
                    }
                }
            }
            GroupFamily::HeisenbergZ => {
                let (a, b, c) = (&m[0], &m[1], &m[2]);
                out.push(RelationCheck {
                    relation: "ac = ca".into(),
                    holds: a.commutes_with(c)?,
                });
                out.push(RelationCheck {
                    relation: "bc = cb".into(),
                    holds: b.commutes_with(c)?,
                });
                out.push(RelationCheck {
                    relation: "ab = bac".into(),
                    holds: a.mul(b)? == b.mul(a)?.mul(c)?,
                });
            }
            GroupFamily::CyclicFinite(n) => {
                if let Some(a) = m.first() {
                    out.push(RelationCheck {
                        relation: format!("a^{n} = 1"),
                        holds: a.pow(n)? == IntegerMatrix::identity(self.dim),
                    });
                }
            }
            GroupFamily::FreeGroup(_) => {}
        }
        Ok(out)
    }

    /// The matrix of `g`, read off its normal form.
    pub fn matrix_of(&self, g: &GroupElement) -> Result<IntegerMatrix> {
        self.family.validate(g)?;
        let m = &self.matrices;
        match g {
            GroupElement::Lattice(v) => {
                let mut acc = IntegerMatrix::identity(self.dim);
                for (i, &e) in v.iter().enumerate() {
                    acc = acc.mul(&m[i].pow_signed(e)?)?;
                }
                Ok(acc)
            }
            GroupElement::Heisenberg([p, q, r]) => m[0].pow_signed(*p)?.mul(&m[1].pow_signed(*q)?)?.mul(&m[2].pow_signed(*r)?),
            GroupElement::Free(word) => {
                let mut acc = IntegerMatrix::identity(self.dim);
                for l in word {
                    let x = &m[l.generator as usize];
                    acc = acc.mul(&if l.inverse { x.inverse()? } else { x.clone() })?;
                }
                Ok(acc)
            }
            GroupElement::Cyclic(r) => m.first().map_or(Ok(IntegerMatrix::identity(self.dim)), |a| a.pow(*r)),
        }
    }
}

/// The three `3n x 3n` block matrices
///
/// ```text
/// a = [x I 0; 0 x 0; 0 0 x],  b = [y 0 0; 0 y I; 0 0 y],
/// c = [I 0 x^{-1}y^{-1}; 0 I 0; 0 0 I]
/// ```
///
/// for commuting `x, y` in `SL(n, Z)`, as a Heisenberg action on `T^{3n}`.
pub fn build_heisenberg_example(x: &IntegerMatrix, y: &IntegerMatrix) -> Result<ToralActionSpec> {
    let n = x.dim();
    if y.dim() != n {
        return Err(Error::InvalidMatrix("x and y differ in size".into()));
    }
    for (name, m) in [("x", x), ("y", y)] {
        let det = m.determinant();
        if det != num_bigint::BigInt::from(1) {
            return Err(Error::InvalidMatrix(format!("det {name} = {det}, expected 1")));
        }
    }
    if !x.commutes_with(y)? {
        return Err(Error::InvalidMatrix("x and y do not commute".into()));
    }
    let i = IntegerMatrix::identity(n);
    let z = IntegerMatrix::zero(n);
    let xy_inv = x.inverse()?.mul(&y.inverse()?)?;
    let a = IntegerMatrix::from_blocks(&[
        vec![x.clone(), i.clone(), z.clone()],
        vec![z.clone(), x.clone(), z.clone()],
        vec![z.clone(), z.clone(), x.clone()],
    ])?;
    let b = IntegerMatrix::from_blocks(&[
        vec![y.clone(), z.clone(), z.clone()],
        vec![z.clone(), y.clone(), i.clone()],
        vec![z.clone(), z.clone(), y.clone()],
    ])?;
    let c = IntegerMatrix::from_blocks(&[
        vec![i.clone(), z.clone(), xy_inv],
        vec![z.clone(), i.clone(), z.clone()],
        vec![z.clone(), z, i],
    ])?;
    ToralActionSpec::new(GroupFamily::HeisenbergZ, vec![a, b, c])
}
