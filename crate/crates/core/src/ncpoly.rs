//! Sparse non-commutative polynomials `ℂ⟨Z₁,…,Zₙ⟩` and their tensor square.
//!
//! Both containers keep their terms in a `BTreeMap` keyed by [`Word`]s, whose
//! ordering is graded lexicographic (length first, then letters). Iteration,
//! serialization and floating-point summation order are therefore
//! deterministic.
//!
//! Coefficient pruning follows two regimes: symbolic operations drop exact
//! zeros only, while numeric paths (anything that went through a trace
//! oracle) call [`NcPoly::prune_numeric`], which drops magnitudes below
//! [`NUMERIC_ZERO`].

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient field.
pub type Scalar = Complex64;

/// A generator index, 1-based.
pub type Letter = u16;

/// Absolute threshold under which numerically produced coefficients are zero.
pub const NUMERIC_ZERO: f64 = 1e-14;

/// A monomial `Z_{i₁}⋯Z_{i_k}`; the empty word is the unit.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn new(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letter(j: Letter) -> Self {
        Word(vec![j])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Checks every letter against the alphabet `1..=n`.
    pub fn check(&self, n: usize) -> Result<()> {
        match self.0.iter().find(|&&l| l == 0 || l as usize > n) {
            Some(&l) => Err(Error::IndexOutOfRange {
                index: l as usize,
                alphabet: n,
            }),
            None => Ok(()),
        }
    }

    /// All words of length exactly `len` over `1..=n`, in canonical order.
    pub fn all_of_length(n: usize, len: usize) -> Vec<Word> {
        let mut out = vec![Word::empty()];
        for _ in 0..len {
            let mut next = Vec::with_capacity(out.len() * n);
            for w in &out {
                for l in 1..=n as Letter {
                    let mut v = w.0.clone();
                    v.push(l);
                    next.push(Word(v));
                }
            }
            out = next;
        }
        out
    }

    /// All words of length at most `max_len` over `1..=n`, in canonical order.
    pub fn all_up_to(n: usize, max_len: usize) -> Vec<Word> {
        (0..=max_len).flat_map(|k| Word::all_of_length(n, k)).collect()
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<Vec<Letter>> for Word {
    fn from(v: Vec<Letter>) -> Self {
        Word(v)
    }
}

impl From<&[Letter]> for Word {
    fn from(v: &[Letter]) -> Self {
        Word(v.to_vec())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "x{l}")?;
        }
        Ok(())
    }
}

fn check_alphabet(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::AlphabetMismatch { left, right })
    }
}

fn check_finite(c: Scalar) -> Result<()> {
    if c.re.is_finite() && c.im.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("non-finite coefficient {c}")))
    }
}

fn accumulate<K: Ord>(map: &mut BTreeMap<K, Scalar>, key: K, c: Scalar) {
    if c == Scalar::new(0.0, 0.0) {
        return;
    }
    let entry = map.entry(key).or_insert(Scalar::new(0.0, 0.0));
    *entry += c;
}

fn prune_exact<K: Ord>(map: &mut BTreeMap<K, Scalar>) {
    map.retain(|_, c| c.re != 0.0 || c.im != 0.0);
}

/// Element of `ℂ⟨Z₁,…,Zₙ⟩`.
#[derive(Clone, PartialEq, Debug)]
pub struct NcPoly {
    n: usize,
    terms: BTreeMap<Word, Scalar>,
}

impl NcPoly {
    pub fn zero(n: usize) -> Self {
        NcPoly {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(n: usize) -> Self {
        Self::constant(n, Scalar::new(1.0, 0.0))
    }

    pub fn constant(n: usize, c: Scalar) -> Self {
        let mut terms = BTreeMap::new();
        accumulate(&mut terms, Word::empty(), c);
        NcPoly { n, terms }
    }

    /// The generator `Z_j`.
    pub fn var(n: usize, j: usize) -> Result<Self> {
        Self::monomial(n, Word::letter(j as Letter), Scalar::new(1.0, 0.0))
    }

    pub fn monomial(n: usize, word: Word, c: Scalar) -> Result<Self> {
        Self::from_terms(n, [(word, c)])
    }

    /// Sums the given terms, validating letters and rejecting non-finite coefficients.
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Word, Scalar)>,
    {
        if n == 0 {
            return Err(Error::InvalidInput("alphabet size must be positive".into()));
        }
        let mut map = BTreeMap::new();
        for (w, c) in terms {
            w.check(n)?;
            check_finite(c)?;
            accumulate(&mut map, w, c);
        }
        prune_exact(&mut map);
        Ok(NcPoly { n, terms: map })
    }

    pub fn alphabet_size(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Scalar)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, w: &Word) -> Scalar {
        self.terms.get(w).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().next_back().map(Word::len)
    }

    pub fn constant_term(&self) -> Scalar {
        self.coeff(&Word::empty())
    }

    /// Terms of maximal degree, in canonical order.
    pub fn leading_terms(&self) -> Vec<(Word, Scalar)> {
        match self.degree() {
            None => Vec::new(),
            Some(d) => self
                .terms
                .iter()
                .filter(|(w, _)| w.len() == d)
                .map(|(w, c)| (w.clone(), *c))
                .collect(),
        }
    }

    /// Re-tags the polynomial with a larger alphabet.
    pub fn widen(&self, n: usize) -> Result<Self> {
        if n < self.n {
            return Err(Error::AlphabetMismatch {
                left: self.n,
                right: n,
            });
        }
        Ok(NcPoly {
            n,
            terms: self.terms.clone(),
        })
    }

    pub fn scale(&self, c: Scalar) -> Self {
        let mut terms = BTreeMap::new();
        for (w, a) in &self.terms {
            accumulate(&mut terms, w.clone(), a * c);
        }
        prune_exact(&mut terms);
        NcPoly { n: self.n, terms }
    }

    pub fn checked_add(&self, other: &NcPoly) -> Result<Self> {
        check_alphabet(self.n, other.n)?;
        let mut terms = self.terms.clone();
        for (w, c) in &other.terms {
            accumulate(&mut terms, w.clone(), *c);
        }
        prune_exact(&mut terms);
        Ok(NcPoly { n: self.n, terms })
    }

    pub fn checked_sub(&self, other: &NcPoly) -> Result<Self> {
        self.checked_add(&other.scale(Scalar::new(-1.0, 0.0)))
    }

    /// Ring product: words concatenate, coefficients multiply.
    pub fn checked_mul(&self, other: &NcPoly) -> Result<Self> {
        check_alphabet(self.n, other.n)?;
        let mut terms = BTreeMap::new();
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                accumulate(&mut terms, u.concat(v), a * b);
            }
        }
        prune_exact(&mut terms);
        Ok(NcPoly { n: self.n, terms })
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = NcPoly::one(self.n);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// `P ↦ P*`: words reversed, coefficients conjugated.
    pub fn adjoint(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(w, c)| (w.reversed(), c.conj()))
            .collect();
        NcPoly { n: self.n, terms }
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.approx_eq(&self.adjoint(), tol)
    }

    /// Drops coefficients with magnitude `≤ tol`.
    pub fn prune(&mut self, tol: f64) {
        self.terms.retain(|_, c| c.norm() > tol);
    }

    pub fn prune_numeric(mut self) -> Self {
        self.prune(NUMERIC_ZERO);
        self
    }

    /// Max coefficient distance, with alphabets required to agree.
    pub fn approx_eq(&self, other: &NcPoly, tol: f64) -> bool {
        if self.n != other.n {
            return false;
        }
        let keys = self.terms.keys().chain(other.terms.keys());
        keys.into_iter()
            .all(|w| (self.coeff(w) - other.coeff(w)).norm() <= tol)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("polynomial serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

impl Add for &NcPoly {
    type Output = NcPoly;
    /// Panics on alphabet mismatch; use [`NcPoly::checked_add`] otherwise.
    fn add(self, rhs: &NcPoly) -> NcPoly {
        self.checked_add(rhs).expect("alphabet mismatch in NcPoly + NcPoly")
    }
}

impl Sub for &NcPoly {
    type Output = NcPoly;
    fn sub(self, rhs: &NcPoly) -> NcPoly {
        self.checked_sub(rhs).expect("alphabet mismatch in NcPoly - NcPoly")
    }
}

impl Mul for &NcPoly {
    type Output = NcPoly;
    fn mul(self, rhs: &NcPoly) -> NcPoly {
        self.checked_mul(rhs).expect("alphabet mismatch in NcPoly * NcPoly")
    }
}

impl Neg for &NcPoly {
    type Output = NcPoly;
    fn neg(self) -> NcPoly {
        self.scale(Scalar::new(-1.0, 0.0))
    }
}

/// Formats a coefficient so that the expression grammar reads it back exactly.
fn write_coeff(f: &mut fmt::Formatter<'_>, c: Scalar) -> fmt::Result {
    if c.im == 0.0 {
        write!(f, "{}", c.re)
    } else {
        let sign = if c.im.is_sign_negative() { '-' } else { '+' };
        write!(f, "({}{}{}i)", c.re, sign, c.im.abs())
    }
}

impl fmt::Display for NcPoly {
    /// Renders in the `x1 x2 + (2+1i) x1^2 - 1` grammar accepted by the CLI.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (w, c)) in self.terms.iter().enumerate() {
            let (negate, mag) = if c.im == 0.0 && c.re < 0.0 {
                (true, Scalar::new(-c.re, 0.0))
            } else {
                (false, *c)
            };
            match (i, negate) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let unit = mag == Scalar::new(1.0, 0.0);
            if w.is_empty() {
                write_coeff(f, mag)?;
            } else {
                if !unit {
                    write_coeff(f, mag)?;
                    f.write_str(" ")?;
                }
                write!(f, "{w}")?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermRecord {
    word: Word,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyRecord {
    n: usize,
    terms: Vec<TermRecord>,
}

impl Serialize for NcPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyRecord {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(w, c)| TermRecord {
                    word: w.clone(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for NcPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = PolyRecord::deserialize(d)?;
        NcPoly::from_terms(
            rec.n,
            rec.terms
                .into_iter()
                .map(|t| (t.word, Scalar::new(t.re, t.im))),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// Element of `ℂ⟨Z₁,…,Zₙ⟩ ⊗ ℂ⟨Z₁,…,Zₙ⟩`, stored as monomial pairs.
#[derive(Clone, PartialEq, Debug)]
pub struct NcTensor {
    n: usize,
    terms: BTreeMap<(Word, Word), Scalar>,
}

impl NcTensor {
    pub fn zero(n: usize) -> Self {
        NcTensor {
            n,
            terms: BTreeMap::new(),
        }
    }

    /// `1 ⊗ 1`.
    pub fn one(n: usize) -> Self {
        Self::elementary_words(n, Word::empty(), Word::empty(), Scalar::new(1.0, 0.0))
    }

    pub(crate) fn elementary_words(n: usize, a: Word, b: Word, c: Scalar) -> Self {
        let mut terms = BTreeMap::new();
        accumulate(&mut terms, (a, b), c);
        NcTensor { n, terms }
    }

    /// `a ⊗ b`, expanded bilinearly into monomial pairs.
    pub fn elementary(a: &NcPoly, b: &NcPoly) -> Result<Self> {
        check_alphabet(a.n, b.n)?;
        let mut terms = BTreeMap::new();
        for (u, x) in &a.terms {
            for (v, y) in &b.terms {
                accumulate(&mut terms, (u.clone(), v.clone()), x * y);
            }
        }
        prune_exact(&mut terms);
        Ok(NcTensor { n: a.n, terms })
    }

    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = ((Word, Word), Scalar)>,
    {
        if n == 0 {
            return Err(Error::InvalidInput("alphabet size must be positive".into()));
        }
        let mut map = BTreeMap::new();
        for ((a, b), c) in terms {
            a.check(n)?;
            b.check(n)?;
            check_finite(c)?;
            accumulate(&mut map, (a, b), c);
        }
        prune_exact(&mut map);
        Ok(NcTensor { n, terms: map })
    }

    pub fn alphabet_size(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Word, Word), &Scalar)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, a: &Word, b: &Word) -> Scalar {
        self.terms
            .get(&(a.clone(), b.clone()))
            .copied()
            .unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: Scalar) -> Self {
        let mut terms = BTreeMap::new();
        for (k, a) in &self.terms {
            accumulate(&mut terms, k.clone(), a * c);
        }
        prune_exact(&mut terms);
        NcTensor { n: self.n, terms }
    }

    pub fn checked_add(&self, other: &NcTensor) -> Result<Self> {
        check_alphabet(self.n, other.n)?;
        let mut terms = self.terms.clone();
        for (k, c) in &other.terms {
            accumulate(&mut terms, k.clone(), *c);
        }
        prune_exact(&mut terms);
        Ok(NcTensor { n: self.n, terms })
    }

    pub fn checked_sub(&self, other: &NcTensor) -> Result<Self> {
        self.checked_add(&other.scale(Scalar::new(-1.0, 0.0)))
    }

    /// Product in the algebra `A ⊗ A`: `(a₁⊗a₂)(b₁⊗b₂) = a₁b₁ ⊗ a₂b₂`.
    pub fn checked_mul(&self, other: &NcTensor) -> Result<Self> {
        check_alphabet(self.n, other.n)?;
        let mut terms = BTreeMap::new();
        for ((a1, a2), x) in &self.terms {
            for ((b1, b2), y) in &other.terms {
                accumulate(&mut terms, (a1.concat(b1), a2.concat(b2)), x * y);
            }
        }
        prune_exact(&mut terms);
        Ok(NcTensor { n: self.n, terms })
    }

    /// Left bimodule action `P·(a⊗b) = Pa ⊗ b`.
    pub fn left_mul(&self, p: &NcPoly) -> Result<Self> {
        NcTensor::elementary(p, &NcPoly::one(p.n))?.checked_mul(self)
    }

    /// Right bimodule action `(a⊗b)·P = a ⊗ bP`.
    pub fn right_mul(&self, p: &NcPoly) -> Result<Self> {
        self.checked_mul(&NcTensor::elementary(&NcPoly::one(p.n), p)?)
    }

    /// `(a₁⊗a₂)♯(b₁⊗b₂) = a₁b₁ ⊗ b₂a₂`.
    pub fn sharp(&self, other: &NcTensor) -> Result<Self> {
        check_alphabet(self.n, other.n)?;
        let mut terms = BTreeMap::new();
        for ((a1, a2), x) in &self.terms {
            for ((b1, b2), y) in &other.terms {
                accumulate(&mut terms, (a1.concat(b1), b2.concat(a2)), x * y);
            }
        }
        prune_exact(&mut terms);
        Ok(NcTensor { n: self.n, terms })
    }

    /// `(a₁⊗a₂)♯m = a₁ m a₂`.
    pub fn sharp_apply(&self, m: &NcPoly) -> Result<NcPoly> {
        check_alphabet(self.n, m.n)?;
        let mut terms = BTreeMap::new();
        for ((a1, a2), x) in &self.terms {
            for (w, y) in &m.terms {
                accumulate(&mut terms, a1.concat(w).concat(a2), x * y);
            }
        }
        prune_exact(&mut terms);
        Ok(NcPoly { n: self.n, terms })
    }

    /// The flip `a⊗b ↦ b⊗a`.
    pub fn flip(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|((a, b), c)| ((b.clone(), a.clone()), *c))
            .collect();
        NcTensor { n: self.n, terms }
    }

    /// Legwise adjoint `(a⊗b)* = a*⊗b*`.
    pub fn adjoint(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|((a, b), c)| ((a.reversed(), b.reversed()), c.conj()))
            .collect();
        NcTensor { n: self.n, terms }
    }

    pub fn prune(&mut self, tol: f64) {
        self.terms.retain(|_, c| c.norm() > tol);
    }

    pub fn approx_eq(&self, other: &NcTensor, tol: f64) -> bool {
        if self.n != other.n {
            return false;
        }
        self.terms
            .keys()
            .chain(other.terms.keys())
            .all(|(a, b)| (self.coeff(a, b) - other.coeff(a, b)).norm() <= tol)
    }

    /// Upper bound for `‖t‖_π` from the canonical monomial decomposition,
    /// `Σ |c|·‖u‖·‖v‖`. Exact for a single monomial pair.
    pub fn projective_norm_ub<F>(&self, mut norm: F) -> Result<f64>
    where
        F: FnMut(&NcPoly) -> Result<f64>,
    {
        let mut cache: BTreeMap<Word, f64> = BTreeMap::new();
        let mut leg = |w: &Word| -> Result<f64> {
            if let Some(v) = cache.get(w) {
                return Ok(*v);
            }
            let v = norm(&NcPoly::monomial(self.n, w.clone(), Scalar::new(1.0, 0.0))?)?;
            cache.insert(w.clone(), v);
            Ok(v)
        };
        let mut total = 0.0;
        for ((a, b), c) in &self.terms {
            total += c.norm() * leg(a)? * leg(b)?;
        }
        Ok(total)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tensor serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

/// `Σₖ ‖aₖ‖·‖bₖ‖` for an explicit decomposition `Σₖ aₖ⊗bₖ`; exact on `a⊗b`.
pub fn projective_norm_ub_of<F>(decomposition: &[(NcPoly, NcPoly)], mut norm: F) -> Result<f64>
where
    F: FnMut(&NcPoly) -> Result<f64>,
{
    let mut total = 0.0;
    for (a, b) in decomposition {
        check_alphabet(a.n, b.n)?;
        total += norm(a)? * norm(b)?;
    }
    Ok(total)
}

impl Add for &NcTensor {
    type Output = NcTensor;
    fn add(self, rhs: &NcTensor) -> NcTensor {
        self.checked_add(rhs).expect("alphabet mismatch in NcTensor + NcTensor")
    }
}

impl Sub for &NcTensor {
    type Output = NcTensor;
    fn sub(self, rhs: &NcTensor) -> NcTensor {
        self.checked_sub(rhs).expect("alphabet mismatch in NcTensor - NcTensor")
    }
}

impl Mul for &NcTensor {
    type Output = NcTensor;
    fn mul(self, rhs: &NcTensor) -> NcTensor {
        self.checked_mul(rhs).expect("alphabet mismatch in NcTensor * NcTensor")
    }
}

impl fmt::Display for NcTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, ((a, b), c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if *c != Scalar::new(1.0, 0.0) {
                write_coeff(f, *c)?;
                f.write_str("·")?;
            }
            write!(f, "{a} ⊗ {b}")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct PairRecord {
    left: Word,
    right: Word,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    n: usize,
    terms: Vec<PairRecord>,
}

impl Serialize for NcTensor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TensorRecord {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|((a, b), c)| PairRecord {
                    left: a.clone(),
                    right: b.clone(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for NcTensor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = TensorRecord::deserialize(d)?;
        NcTensor::from_terms(
            rec.n,
            rec.terms
                .into_iter()
                .map(|t| ((t.left, t.right), Scalar::new(t.re, t.im))),
        )
        .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Scalar {
        Scalar::new(re, im)
    }

    fn z(n: usize, j: usize) -> NcPoly {
        NcPoly::var(n, j).unwrap()
    }

    fn w(letters: &[Letter]) -> Word {
        Word::from(letters)
    }

    #[test]
    fn product_concatenates() {
        let p = &z(2, 1) * &z(2, 2);
        assert_eq!(p.num_terms(), 1);
        assert_eq!(p.coeff(&w(&[1, 2])), c(1.0, 0.0));
        let q = z(3, 2);
        assert_eq!(&NcPoly::one(3) * &q, q);
    }

    #[test]
    fn product_distributes() {
        let a = &z(2, 1) + &z(2, 2);
        let b = &z(2, 1) - &z(2, 2);
        let expected = NcPoly::from_terms(
            2,
            [
                (w(&[1, 1]), c(1.0, 0.0)),
                (w(&[1, 2]), c(-1.0, 0.0)),
                (w(&[2, 1]), c(1.0, 0.0)),
                (w(&[2, 2]), c(-1.0, 0.0)),
            ],
        )
        .unwrap();
        assert_eq!(&a * &b, expected);
    }

    #[test]
    fn mismatched_alphabets_are_rejected() {
        assert_eq!(
            z(2, 1).checked_mul(&z(3, 1)),
            Err(Error::AlphabetMismatch { left: 2, right: 3 })
        );
        assert!(NcTensor::one(2).sharp(&NcTensor::one(3)).is_err());
        assert!(NcTensor::one(2).sharp_apply(&z(3, 1)).is_err());
        assert!(NcPoly::var(2, 3).is_err());
        assert!(NcPoly::var(2, 0).is_err());
    }

    #[test]
    fn zero_terms_are_pruned() {
        let p = &z(2, 1) - &z(2, 1);
        assert!(p.is_zero());
        assert_eq!(p.degree(), None);
        let q = NcPoly::from_terms(1, [(w(&[1]), c(0.0, 0.0))]).unwrap();
        assert!(q.is_zero());
    }

    #[test]
    fn non_finite_coefficients_are_rejected() {
        assert!(NcPoly::from_terms(1, [(w(&[1]), c(f64::NAN, 0.0))]).is_err());
    }

    #[test]
    fn adjoint_reverses_and_conjugates() {
        let p = NcPoly::monomial(2, w(&[1, 2]), c(2.0, 1.0)).unwrap();
        let q = NcPoly::monomial(2, w(&[2, 1]), c(2.0, -1.0)).unwrap();
        assert_eq!(p.adjoint(), q);
        let sym = &(&z(2, 1) * &z(2, 2)) + &(&z(2, 2) * &z(2, 1));
        assert!(sym.is_self_adjoint(0.0));
        assert_eq!(NcPoly::one(2).adjoint(), NcPoly::one(2));
    }

    #[test]
    fn sharp_on_tensors() {
        let n = 4;
        let a = NcTensor::elementary(&z(n, 1), &z(n, 2)).unwrap();
        let b = NcTensor::elementary(&z(n, 3), &z(n, 4)).unwrap();
        let expected = NcTensor::elementary_words(n, w(&[1, 3]), w(&[4, 2]), c(1.0, 0.0));
        assert_eq!(a.sharp(&b).unwrap(), expected);
        assert_eq!(NcTensor::one(n).sharp(&b).unwrap(), b);
        let s = &NcTensor::elementary(&z(n, 1), &NcPoly::one(n)).unwrap()
            + &NcTensor::elementary(&NcPoly::one(n), &z(n, 1)).unwrap();
        assert_eq!(s.sharp(&NcTensor::one(n)).unwrap(), s);
    }

    #[test]
    fn sharp_apply_sandwiches() {
        let n = 3;
        let t = NcTensor::elementary(&z(n, 1), &z(n, 2)).unwrap();
        assert_eq!(t.sharp_apply(&z(n, 3)).unwrap().coeff(&w(&[1, 3, 2])), c(1.0, 0.0));
        let p = &(&z(n, 1) * &z(n, 3)) + &NcPoly::constant(n, c(0.0, 2.0));
        assert_eq!(NcTensor::one(n).sharp_apply(&p).unwrap(), p);
        let s = &NcTensor::elementary(&z(n, 1), &NcPoly::one(n)).unwrap()
            + &NcTensor::elementary(&NcPoly::one(n), &z(n, 1)).unwrap();
        assert_eq!(s.sharp_apply(&NcPoly::one(n)).unwrap(), z(n, 1).scale(c(2.0, 0.0)));
    }

    #[test]
    fn flip_and_adjoint() {
        let n = 3;
        let t = NcTensor::elementary(&z(n, 1), &z(n, 2)).unwrap();
        assert_eq!(t.flip(), NcTensor::elementary(&z(n, 2), &z(n, 1)).unwrap());
        let s = &NcTensor::elementary(&z(n, 1), &NcPoly::one(n)).unwrap()
            + &NcTensor::elementary(&NcPoly::one(n), &z(n, 1)).unwrap();
        assert_eq!(s.flip(), s);

        let t = NcTensor::elementary_words(n, w(&[1, 2]), w(&[3]), c(0.0, 1.0));
        let expected = NcTensor::elementary_words(n, w(&[2, 1]), w(&[3]), c(0.0, -1.0));
        assert_eq!(t.adjoint(), expected);
        assert_eq!(NcTensor::one(n).adjoint(), NcTensor::one(n));
    }

    #[test]
    fn projective_norm_bound_examples() {
        let n = 2;
        // ‖x1‖ = 1, ‖x2‖ = 3 under a fictitious realization.
        let norm = |p: &NcPoly| -> Result<f64> {
            Ok(p.terms()
                .map(|(w, c)| {
                    c.norm()
                        * w.letters()
                            .iter()
                            .map(|&l| if l == 1 { 1.0 } else { 3.0 })
                            .product::<f64>()
                })
                .sum())
        };
        let ab = NcTensor::elementary(&z(n, 1), &z(n, 2)).unwrap();
        assert_eq!(ab.projective_norm_ub(norm).unwrap(), 3.0);
        assert_eq!(NcTensor::zero(n).projective_norm_ub(norm).unwrap(), 0.0);
        let s = &NcTensor::elementary(&z(n, 1), &NcPoly::one(n)).unwrap()
            + &NcTensor::elementary(&NcPoly::one(n), &z(n, 1)).unwrap();
        assert_eq!(s.projective_norm_ub(norm).unwrap(), 2.0);
        let a = &z(n, 1) + &z(n, 2);
        let b = NcPoly::one(n);
        let exact = projective_norm_ub_of(&[(a.clone(), b.clone())], |p| {
            // pretend ‖x1 + x2‖ = 2.5
            Ok(if *p == a { 2.5 } else { norm(p)? })
        })
        .unwrap();
        assert_eq!(exact, 2.5);
    }

    #[test]
    fn display_uses_expression_grammar() {
        let p = &(&z(2, 1) * &z(2, 2)) + &(&z(2, 2) * &z(2, 1));
        assert_eq!(p.to_string(), "x1 x2 + x2 x1");
        let q = &(&z(1, 1) * &z(1, 1)).scale(c(2.0, 1.0)) - &NcPoly::one(1);
        assert_eq!(q.to_string(), "-1 + (2+1i) x1 x1");
        assert_eq!(NcPoly::zero(3).to_string(), "0");
    }

    #[test]
    fn json_layout() {
        let p = NcPoly::monomial(2, w(&[1, 2]), c(1.5, -2.0)).unwrap();
        assert_eq!(p.to_json(), r#"{"n":2,"terms":[{"word":[1,2],"re":1.5,"im":-2.0}]}"#);
        assert_eq!(NcPoly::from_json(&p.to_json()).unwrap(), p);
        assert!(NcPoly::from_json(r#"{"n":1,"terms":[{"word":[2],"re":1.0,"im":0.0}]}"#).is_err());
        let t = NcTensor::elementary(&z(2, 1), &z(2, 2)).unwrap();
        assert_eq!(NcTensor::from_json(&t.to_json()).unwrap(), t);
    }

    #[test]
    fn canonical_order_is_graded() {
        let mut words = vec![w(&[2]), w(&[1, 1]), Word::empty(), w(&[1])];
        words.sort();
        assert_eq!(words, vec![Word::empty(), w(&[1]), w(&[2]), w(&[1, 1])]);
        assert_eq!(Word::all_up_to(2, 2).len(), 7);
    }
}
