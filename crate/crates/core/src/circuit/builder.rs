//! Linear combinations and the two-mode circuit builder.
//!
//! The audit circuit is written once as a synthesis function over a
//! `Builder`. In shape mode the builder records constraints (inputs are
//! dummies); in witness mode it records variable values and checks each
//! constraint as it is emitted. Synthesis code must never branch on values.

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};

use ark_ff::{Field, Zero};

use super::cs::{ConstraintSystem, Tag, Witness};
use crate::field::Fe;

/// `constant + sum coeff * var` together with its value under the current
/// assignment. Terms are sorted by variable and never reference var 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Lc {
    terms: Vec<(u32, Fe)>,
    constant: Fe,
    value: Fe,
}

impl Lc {
    pub fn zero() -> Self {
        Lc::default()
    }

    pub fn constant(c: Fe) -> Self {
        Lc { terms: Vec::new(), constant: c, value: c }
    }

    pub fn from_u64(c: u64) -> Self {
        Lc::constant(Fe::from(c))
    }

    pub fn one() -> Self {
        Lc::from_u64(1)
    }

    fn var(index: u32, value: Fe) -> Self {
        Lc { terms: vec![(index, Fe::from(1u64))], constant: Fe::zero(), value }
    }

    pub fn value(&self) -> Fe {
        self.value
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Variable index when this is exactly one variable with coefficient 1.
    pub fn as_var(&self) -> Option<u32> {
        match self.terms.as_slice() {
            [(v, c)] if *c == Fe::from(1u64) && self.constant.is_zero() => Some(*v),
            _ => None,
        }
    }

    pub fn scale(&self, k: Fe) -> Lc {
        if k.is_zero() {
            return Lc::zero();
        }
        Lc {
            terms: self.terms.iter().map(|(v, c)| (*v, *c * k)).collect(),
            constant: self.constant * k,
            value: self.value * k,
        }
    }

    pub fn add_const(&self, c: Fe) -> Lc {
        let mut out = self.clone();
        out.constant += c;
        out.value += c;
        out
    }

    fn combine(&self, other: &Lc, k: Fe) -> Lc {
        let (a, b) = (&self.terms, &other.terms);
        let mut terms = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                terms.push(a[i]);
                i += 1;
            } else if i == a.len() || b[j].0 < a[i].0 {
                terms.push((b[j].0, b[j].1 * k));
                j += 1;
            } else {
                let c = a[i].1 + b[j].1 * k;
                if !c.is_zero() {
                    terms.push((a[i].0, c));
                }
                i += 1;
                j += 1;
            }
        }
        Lc { terms, constant: self.constant + other.constant * k, value: self.value + other.value * k }
    }

    /// `(var, coeff)` pairs including the constant as variable 0.
    pub fn row(&self) -> impl Iterator<Item = (u32, Fe)> + '_ {
        let c = (!self.constant.is_zero()).then_some((0u32, self.constant));
        c.into_iter().chain(self.terms.iter().copied())
    }
}

impl Add<&Lc> for &Lc {
    type Output = Lc;
    fn add(self, o: &Lc) -> Lc {
        self.combine(o, Fe::from(1u64))
    }
}

impl Sub<&Lc> for &Lc {
    type Output = Lc;
    fn sub(self, o: &Lc) -> Lc {
        self.combine(o, -Fe::from(1u64))
    }
}

impl Add<Lc> for Lc {
    type Output = Lc;
    fn add(self, o: Lc) -> Lc {
        &self + &o
    }
}

impl Sub<Lc> for Lc {
    type Output = Lc;
    fn sub(self, o: Lc) -> Lc {
        &self - &o
    }
}

impl Add<&Lc> for Lc {
    type Output = Lc;
    fn add(self, o: &Lc) -> Lc {
        &self + o
    }
}

impl Sub<&Lc> for Lc {
    type Output = Lc;
    fn sub(self, o: &Lc) -> Lc {
        &self - o
    }
}

impl Mul<Fe> for &Lc {
    type Output = Lc;
    fn mul(self, k: Fe) -> Lc {
        self.scale(k)
    }
}

impl Mul<Fe> for Lc {
    type Output = Lc;
    fn mul(self, k: Fe) -> Lc {
        self.scale(k)
    }
}

impl Neg for &Lc {
    type Output = Lc;
    fn neg(self) -> Lc {
        self.scale(-Fe::from(1u64))
    }
}

pub fn sum<'a, I: IntoIterator<Item = &'a Lc>>(items: I) -> Lc {
    items.into_iter().fold(Lc::zero(), |acc, x| &acc + x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Shape,
    Witness,
}

/// First constraint that failed during witness synthesis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthFailure {
    pub index: usize,
    pub tag: Tag,
    pub section: &'static str,
}

pub struct Builder {
    mode: Mode,
    num_vars: usize,
    values: Vec<Fe>,
    cs: ConstraintSystem,
    intern: HashMap<Fe, u32>,
    tag: Tag,
    section: &'static str,
    section_start: usize,
    n_constraints: usize,
    failure: Option<SynthFailure>,
}

impl Builder {
    pub fn new(mode: Mode) -> Self {
        Builder {
            mode,
            num_vars: 1,
            values: if mode == Mode::Witness { vec![Fe::from(1u64)] } else { Vec::new() },
            cs: ConstraintSystem::default(),
            intern: HashMap::new(),
            tag: Tag::Glue,
            section: "glue",
            section_start: 0,
            n_constraints: 0,
            failure: None,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn num_constraints(&self) -> usize {
        self.n_constraints
    }

    /// Sets the accounting tag and section name for following constraints.
    pub fn set_section(&mut self, tag: Tag, section: &'static str) {
        self.flush_section();
        self.tag = tag;
        self.section = section;
    }

    pub fn section(&self) -> (Tag, &'static str) {
        (self.tag, self.section)
    }

    fn flush_section(&mut self) {
        let n = self.n_constraints - self.section_start;
        if n > 0 && self.mode == Mode::Shape {
            *self.cs.sections.entry(self.section.to_string()).or_default() += n;
        }
        self.section_start = self.n_constraints;
    }

    pub fn alloc(&mut self, value: Fe) -> Lc {
        let idx = self.num_vars as u32;
        self.num_vars += 1;
        if self.mode == Mode::Witness {
            self.values.push(value);
        }
        Lc::var(idx, value)
    }

    pub fn alloc_public(&mut self, value: Fe) -> Lc {
        let lc = self.alloc(value);
        self.cs.public_inputs.push(lc.terms[0].0);
        lc
    }

    fn coeff_index(&mut self, c: Fe) -> u32 {
        let next = self.cs.coeffs.len() as u32;
        let coeffs = &mut self.cs.coeffs;
        *self.intern.entry(c).or_insert_with(|| {
            coeffs.push(c);
            next
        })
    }

    fn push_row(&mut self, lc: &Lc) {
        for (v, c) in lc.row() {
            let ci = self.coeff_index(c);
            self.cs.terms.push((v, ci));
        }
        self.cs.row_start.push(self.cs.terms.len() as u32);
    }

    /// Adds the constraint `a * b = c`.
    pub fn enforce(&mut self, a: &Lc, b: &Lc, c: &Lc) {
        match self.mode {
            Mode::Shape => {
                self.push_row(a);
                self.push_row(b);
                self.push_row(c);
                self.cs.tags.push(self.tag);
            }
            Mode::Witness => {
                if self.failure.is_none() && a.value * b.value != c.value {
                    self.failure = Some(SynthFailure {
                        index: self.n_constraints,
                        tag: self.tag,
                        section: self.section,
                    });
                }
            }
        }
        self.n_constraints += 1;
    }

    pub fn enforce_equal(&mut self, a: &Lc, b: &Lc) {
        self.enforce(&(a - b), &Lc::one(), &Lc::zero());
    }

    pub fn enforce_zero(&mut self, a: &Lc) {
        self.enforce(a, &Lc::one(), &Lc::zero());
    }

    /// Product of two combinations; free when either side is constant.
    pub fn mul(&mut self, a: &Lc, b: &Lc) -> Lc {
        if a.is_constant() {
            return b.scale(a.constant);
        }
        if b.is_constant() {
            return a.scale(b.constant);
        }
        let p = self.alloc(a.value * b.value);
        self.enforce(a, b, &p);
        p
    }

    /// Replaces a long combination by a fresh variable.
    pub fn materialize(&mut self, a: &Lc) -> Lc {
        if a.is_constant() || a.as_var().is_some() {
            return a.clone();
        }
        let v = self.alloc(a.value);
        self.enforce_equal(&v, a);
        v
    }

    pub fn materialize_if_longer(&mut self, a: &Lc, max_terms: usize) -> Lc {
        if a.num_terms() > max_terms {
            self.materialize(a)
        } else {
            a.clone()
        }
    }

    /// Inverse hint (0 for 0).
    pub fn inverse_hint(v: Fe) -> Fe {
        v.inverse().unwrap_or(Fe::zero())
    }

    pub fn finish_shape(mut self) -> ConstraintSystem {
        assert_eq!(self.mode, Mode::Shape);
        self.flush_section();
        self.cs.num_vars = self.num_vars;
        self.cs
    }

    pub fn finish_witness(self) -> (Witness, Option<SynthFailure>) {
        assert_eq!(self.mode, Mode::Witness);
        (Witness { assignment: self.values }, self.failure)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::cs::Satisfaction;

    fn square_circuit(mode: Mode, x: u64) -> Builder {
        let mut b = Builder::new(mode);
        let out = b.alloc_public(Fe::from(4u64));
        let x = b.alloc(Fe::from(x));
        b.enforce(&x, &x, &out);
        b
    }

    #[test]
    fn single_constraint() {
        let cs = square_circuit(Mode::Shape, 0).finish_shape();
        assert_eq!(cs.num_constraints(), 1);
        let (w, fail) = square_circuit(Mode::Witness, 2).finish_witness();
        assert!(fail.is_none());
        assert!(cs.check(&w, &[Fe::from(4u64)]).unwrap().is_ok());
        let (w, fail) = square_circuit(Mode::Witness, 3).finish_witness();
        assert_eq!(fail.unwrap().index, 0);
        match cs.check(&w, &[Fe::from(4u64)]).unwrap() {
            Satisfaction::Violated(u) => assert_eq!(u.index, 0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_system_is_satisfied() {
        let cs = Builder::new(Mode::Shape).finish_shape();
        let (w, _) = Builder::new(Mode::Witness).finish_witness();
        assert!(cs.check(&w, &[]).unwrap().is_ok());
        assert!(cs.validate().is_ok());
    }

    #[test]
    fn lc_arithmetic_merges_terms() {
        let mut b = Builder::new(Mode::Witness);
        let x = b.alloc(Fe::from(3u64));
        let y = b.alloc(Fe::from(5u64));
        let s = &(&x + &y) - &x;
        assert_eq!(s.num_terms(), 1);
        assert_eq!(s.value(), Fe::from(5u64));
        let z = &x - &x;
        assert_eq!(z.num_terms(), 0);
        let p = b.mul(&Lc::from_u64(7), &y);
        assert_eq!(p.value(), Fe::from(35u64));
        assert_eq!(b.num_constraints(), 0);
    }
}
