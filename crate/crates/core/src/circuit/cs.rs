//! Rank-1 constraint systems, witnesses and satisfaction checking.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::field::Fe;

/// Sub-computation a constraint belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Tag {
    Hash = 0,
    Pca = 1,
    Mi = 2,
    Enc = 3,
    Glue = 4,
}

impl Tag {
    pub const ALL: [Tag; 5] = [Tag::Hash, Tag::Pca, Tag::Mi, Tag::Enc, Tag::Glue];

    pub fn name(self) -> &'static str {
        match self {
            Tag::Hash => "hash",
            Tag::Pca => "pca",
            Tag::Mi => "mi",
            Tag::Enc => "enc",
            Tag::Glue => "glue",
        }
    }

    pub fn from_u8(v: u8) -> Option<Tag> {
        Tag::ALL.get(v as usize).copied()
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sparse row: (variable index, coefficient index into the coefficient pool).
pub type Term = (u32, u32);

/// Constraints `(A w) * (B w) = (C w)` stored in flat arrays.
///
/// Row `3 * i + s` (s = 0, 1, 2 for A, B, C) of constraint `i` spans
/// `terms[row_start[r]..row_start[r + 1]]`. Coefficients are interned.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintSystem {
    pub num_vars: usize,
    pub public_inputs: Vec<u32>,
    pub coeffs: Vec<Fe>,
    pub row_start: Vec<u32>,
    pub terms: Vec<Term>,
    pub tags: Vec<Tag>,
    /// Constraint counts per named gadget section.
    pub sections: BTreeMap<String, usize>,
}

impl Default for ConstraintSystem {
    fn default() -> Self {
        ConstraintSystem {
            num_vars: 1,
            public_inputs: Vec::new(),
            coeffs: Vec::new(),
            row_start: vec![0],
            terms: Vec::new(),
            tags: Vec::new(),
            sections: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub assignment: Vec<Fe>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unsatisfied {
    pub index: usize,
    pub tag: Tag,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Satisfaction {
    Satisfied,
    /// A public input in the witness differs from the statement.
    PublicMismatch { position: usize },
    Violated(Unsatisfied),
}

impl Satisfaction {
    pub fn is_ok(&self) -> bool {
        *self == Satisfaction::Satisfied
    }
}

impl fmt::Display for Satisfaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Satisfaction::Satisfied => f.write_str("satisfied"),
            Satisfaction::PublicMismatch { position } => {
                write!(f, "public input {position} differs from the statement")
            }
            Satisfaction::Violated(u) => write!(f, "constraint {} ({}) violated", u.index, u.tag),
        }
    }
}

impl ConstraintSystem {
    pub fn num_constraints(&self) -> usize {
        self.tags.len()
    }

    pub fn row(&self, constraint: usize, slot: usize) -> &[Term] {
        let r = 3 * constraint + slot;
        &self.terms[self.row_start[r] as usize..self.row_start[r + 1] as usize]
    }

    fn eval_row(&self, constraint: usize, slot: usize, w: &[Fe]) -> Fe {
        let mut acc = Fe::from(0u64);
        for &(v, c) in self.row(constraint, slot) {
            acc += self.coeffs[c as usize] * w[v as usize];
        }
        acc
    }

    pub fn constraint_holds(&self, i: usize, w: &[Fe]) -> bool {
        self.eval_row(i, 0, w) * self.eval_row(i, 1, w) == self.eval_row(i, 2, w)
    }

    /// Structural validity: indexes in range, distinct public inputs.
    pub fn validate(&self) -> Result<()> {
        if self.row_start.len() != 3 * self.tags.len() + 1 {
            return Err(Error::ShapeError("row table length mismatch".into()));
        }
        if self.terms.iter().any(|(v, c)| *v as usize >= self.num_vars || *c as usize >= self.coeffs.len()) {
            return Err(Error::ShapeError("term references unknown variable or coefficient".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for p in &self.public_inputs {
            if *p == 0 || *p as usize >= self.num_vars || !seen.insert(*p) {
                return Err(Error::ShapeError("invalid public input list".into()));
            }
        }
        Ok(())
    }

    /// Checks `w` against every constraint with the public inputs bound to
    /// `public`; reports the first failure.
    pub fn check(&self, w: &Witness, public: &[Fe]) -> Result<Satisfaction> {
        let a = &w.assignment;
        if a.len() != self.num_vars {
            return Err(Error::ShapeError(format!(
                "witness has {} values, system has {} variables",
                a.len(),
                self.num_vars
            )));
        }
        if public.len() != self.public_inputs.len() {
            return Err(Error::ShapeError("public input count mismatch".into()));
        }
        if a[0] != Fe::from(1u64) {
            return Ok(Satisfaction::PublicMismatch { position: 0 });
        }
        for (pos, (idx, val)) in self.public_inputs.iter().zip(public).enumerate() {
            if a[*idx as usize] != *val {
                return Ok(Satisfaction::PublicMismatch { position: pos + 1 });
            }
        }
        for i in 0..self.num_constraints() {
            if !self.constraint_holds(i, a) {
                return Ok(Satisfaction::Violated(Unsatisfied { index: i, tag: self.tags[i] }));
            }
        }
        Ok(Satisfaction::Satisfied)
    }

    /// Indexes of violated constraints carrying `tag`.
    pub fn violated_with_tag(&self, w: &Witness, tag: Tag) -> Vec<usize> {
        (0..self.num_constraints())
            .filter(|i| self.tags[*i] == tag && !self.constraint_holds(*i, &w.assignment))
            .collect()
    }

    pub fn tag_counts(&self) -> BTreeMap<Tag, usize> {
        let mut m: BTreeMap<Tag, usize> = Tag::ALL.iter().map(|t| (*t, 0)).collect();
        for t in &self.tags {
            *m.get_mut(t).unwrap() += 1;
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub tag: Tag,
    pub count: usize,
    pub percentage: f64,
}

pub fn constraint_report(cs: &ConstraintSystem) -> Vec<ReportRow> {
    let total = cs.num_constraints();
    cs.tag_counts()
        .into_iter()
        .map(|(tag, count)| ReportRow {
            tag,
            count,
            percentage: if total == 0 { 0.0 } else { 100.0 * count as f64 / total as f64 },
        })
        .collect()
}
