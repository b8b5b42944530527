//! Tracial-state oracles.
//!
//! * [`SemicircularOracle`]: free semicircular families, moments by counting
//!   index-respecting non-crossing pairings (exact integers, scaled at the end).
//! * [`free_cumulants`] / [`mixed_moment`]: free cumulants by Möbius inversion
//!   over non-crossing partitions, and moments of words mixing a base family
//!   with semicircular families free from it.
//! * [`PerturbedOracle`]: `Xⱼ + √t Sⱼ` with `Sⱼ` free semicirculars.
//! * [`MatrixTuple`]: Hermitian matrices under the normalized trace.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ncpoly::{Letter, NcPoly, NcTensor, Scalar, Word};

pub type CMatrix = DMatrix<Scalar>;

/// Degree cap for single-family (pairing-count) moments.
pub const SINGLE_FAMILY_CAP: usize = 12;
/// Degree cap for mixed and perturbed moments (`2^k` letter expansions).
pub const MIXED_CAP: usize = 10;

const ZERO: Scalar = Scalar::new(0.0, 0.0);
const ONE: Scalar = Scalar::new(1.0, 0.0);

/// Serializable identity of an oracle, embedded in every result file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleDescriptor {
    Semicircular {
        variances: Vec<f64>,
    },
    Perturbed {
        base: Box<OracleDescriptor>,
        t: f64,
    },
    Matrix {
        ensemble: String,
        n: usize,
        dim: usize,
        seed: Option<u64>,
    },
}

/// A tracial state on words in `n` self-adjoint generators.
pub trait TraceOracle: Send + Sync {
    fn alphabet_size(&self) -> usize;

    fn moment(&self, w: &Word) -> Result<Scalar>;

    fn descriptor(&self) -> OracleDescriptor;

    /// The concrete realization, when the state is a normalized matrix trace.
    fn matrix_tuple(&self) -> Option<&MatrixTuple> {
        None
    }
}

fn check_oracle_alphabet(oracle: &dyn TraceOracle, n: usize) -> Result<()> {
    if oracle.alphabet_size() == n {
        Ok(())
    } else {
        Err(Error::AlphabetMismatch {
            left: n,
            right: oracle.alphabet_size(),
        })
    }
}

/// `τ(P)` by linearity.
pub fn poly_trace(oracle: &dyn TraceOracle, p: &NcPoly) -> Result<Scalar> {
    check_oracle_alphabet(oracle, p.alphabet_size())?;
    let mut acc = ZERO;
    for (w, c) in p.terms() {
        acc += c * oracle.moment(w)?;
    }
    Ok(acc)
}

/// `(τ⊗τ)(T)`.
pub fn tensor_trace(oracle: &dyn TraceOracle, t: &NcTensor) -> Result<Scalar> {
    check_oracle_alphabet(oracle, t.alphabet_size())?;
    let mut acc = ZERO;
    for ((a, b), c) in t.terms() {
        acc += c * oracle.moment(a)? * oracle.moment(b)?;
    }
    Ok(acc)
}

/// `⟨P, Q⟩ = τ(P Q*)`.
pub fn inner(oracle: &dyn TraceOracle, p: &NcPoly, q: &NcPoly) -> Result<Scalar> {
    poly_trace(oracle, &p.checked_mul(&q.adjoint())?)
}

/// `⟨A, B⟩ = (τ⊗τ)(A B*)` with the legwise adjoint.
pub fn tensor_inner(oracle: &dyn TraceOracle, a: &NcTensor, b: &NcTensor) -> Result<Scalar> {
    tensor_trace(oracle, &a.checked_mul(&b.adjoint())?)
}

/// `‖P‖₂ = τ(PP*)^{1/2}`.
pub fn l2_norm(oracle: &dyn TraceOracle, p: &NcPoly) -> Result<f64> {
    Ok(inner(oracle, p, p)?.re.max(0.0).sqrt())
}

fn check_cap(len: usize, cap: usize) -> Result<()> {
    if len > cap {
        Err(Error::DegreeCap { degree: len, cap })
    } else {
        Ok(())
    }
}

/// Number of non-crossing pair partitions of the positions of `letters` in
/// which every pair joins equal letters. Memoized on sub-words.
pub fn count_nc_pairings(letters: &[Letter], memo: &mut HashMap<Vec<Letter>, u128>) -> u128 {
    if letters.is_empty() {
        return 1;
    }
    if letters.len() % 2 == 1 {
        return 0;
    }
    if let Some(&v) = memo.get(letters) {
        return v;
    }
    let first = letters[0];
    let mut total = 0u128;
    // The partner of position 0 must leave even-length inside and outside gaps.
    for k in (1..letters.len()).step_by(2) {
        if letters[k] != first {
            continue;
        }
        let inside = count_nc_pairings(&letters[1..k], memo);
        if inside == 0 {
            continue;
        }
        total += inside * count_nc_pairings(&letters[k + 1..], memo);
    }
    memo.insert(letters.to_vec(), total);
    total
}

fn semicircular_weight(letters: &[Letter], variances: &[f64]) -> Result<f64> {
    let mut counts = vec![0usize; variances.len()];
    for &l in letters {
        let i = l as usize;
        if i == 0 || i > variances.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                alphabet: variances.len(),
            });
        }
        counts[i - 1] += 1;
    }
    Ok(counts
        .iter()
        .zip(variances)
        .map(|(&k, &v)| v.powi((k / 2) as i32))
        .product())
}

fn check_variances(variances: &[f64]) -> Result<()> {
    if variances.is_empty() {
        return Err(Error::InvalidInput("need at least one generator".into()));
    }
    if let Some(v) = variances.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidInput(format!("variance {v} must be positive")));
    }
    Ok(())
}

/// `τ(S_{i₁}⋯S_{i_k})` for a free semicircular family with the given variances.
pub fn semicircular_moment(w: &Word, variances: &[f64]) -> Result<Scalar> {
    check_variances(variances)?;
    let weight = semicircular_weight(w.letters(), variances)?;
    let count = count_nc_pairings(w.letters(), &mut HashMap::new());
    Ok(Scalar::new(count as f64 * weight, 0.0))
}

/// Free semicircular family `S₁,…,Sₙ`, `τ(Sⱼ²) = varianceⱼ`.
pub struct SemicircularOracle {
    variances: Vec<f64>,
    cap: usize,
    memo: Mutex<HashMap<Vec<Letter>, u128>>,
}

impl SemicircularOracle {
    pub fn new(variances: Vec<f64>) -> Result<Self> {
        check_variances(&variances)?;
        Ok(SemicircularOracle {
            variances,
            cap: SINGLE_FAMILY_CAP,
            memo: Mutex::new(HashMap::new()),
        })
    }

    /// `n` free semicirculars of common variance `c`.
    pub fn uniform(n: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; n])
    }

    pub fn standard(n: usize) -> Self {
        Self::uniform(n, 1.0).expect("unit variance is valid")
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }
}

impl TraceOracle for SemicircularOracle {
    fn alphabet_size(&self) -> usize {
        self.variances.len()
    }

    fn moment(&self, w: &Word) -> Result<Scalar> {
        check_cap(w.len(), self.cap)?;
        let weight = semicircular_weight(w.letters(), &self.variances)?;
        let count = {
            let mut memo = self.memo.lock().expect("pairing memo poisoned");
            count_nc_pairings(w.letters(), &mut memo)
        };
        Ok(Scalar::new(count as f64 * weight, 0.0))
    }

    fn descriptor(&self) -> OracleDescriptor {
        OracleDescriptor::Semicircular {
            variances: self.variances.clone(),
        }
    }
}

/// Visits every subset of `candidates` (as a sorted list) together with a
/// mandatory leading position 0.
fn for_each_block<F>(candidates: &[usize], mut f: F) -> Result<()>
where
    F: FnMut(&[usize]) -> Result<()>,
{
    let m = candidates.len();
    let mut block = Vec::with_capacity(m + 1);
    for mask in 0u32..(1u32 << m) {
        block.clear();
        block.push(0);
        for (bit, &pos) in candidates.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                block.push(pos);
            }
        }
        f(&block)?;
    }
    Ok(())
}

/// Contiguous gaps left by a block that starts at position 0.
fn gaps(block: &[usize], len: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
    block.iter().enumerate().filter_map(move |(i, &start)| {
        let end = block.get(i + 1).copied().unwrap_or(len);
        (end > start + 1).then_some((start + 1, end))
    })
}

/// Multivariate free cumulants of a single (jointly distributed) family,
/// from the moment–cumulant relation `τ(w) = Σ_{π∈NC} κ_π(w)`, decomposed
/// along the block containing the first position.
struct CumulantEngine<'a> {
    oracle: &'a dyn TraceOracle,
    memo: &'a mut HashMap<Vec<Letter>, Scalar>,
}

impl CumulantEngine<'_> {
    fn cumulant(&mut self, w: &[Letter]) -> Result<Scalar> {
        if w.is_empty() {
            return Ok(ZERO);
        }
        if let Some(&v) = self.memo.get(w) {
            return Ok(v);
        }
        let k = w.len();
        let mut acc = self.oracle.moment(&Word::from(w))?;
        let candidates: Vec<usize> = (1..k).collect();
        let mut sub = Vec::with_capacity(k);
        for_each_block(&candidates, |block| {
            if block.len() == k {
                return Ok(());
            }
            sub.clear();
            sub.extend(block.iter().map(|&i| w[i]));
            let mut term = self.cumulant(&sub)?;
            if term == ZERO {
                return Ok(());
            }
            for (a, b) in gaps(block, k) {
                term *= self.oracle.moment(&Word::from(&w[a..b]))?;
                if term == ZERO {
                    break;
                }
            }
            acc -= term;
            Ok(())
        })?;
        self.memo.insert(w.to_vec(), acc);
        Ok(acc)
    }
}

/// Free cumulants `κ_k(a_{i₁},…,a_{i_k})` for all words of length
/// `1..=max_degree` over `family`.
#[derive(Clone, Debug, PartialEq)]
pub struct CumulantTable {
    pub family: Vec<Letter>,
    pub max_degree: usize,
    pub values: Vec<(Word, Scalar)>,
}

impl CumulantTable {
    pub fn get(&self, w: &Word) -> Option<Scalar> {
        self.values.iter().find(|(u, _)| u == w).map(|(_, c)| *c)
    }
}

pub fn free_cumulants(
    oracle: &dyn TraceOracle,
    family: &[Letter],
    max_degree: usize,
) -> Result<CumulantTable> {
    check_cap(max_degree, MIXED_CAP)?;
    for &l in family {
        Word::letter(l).check(oracle.alphabet_size())?;
    }
    let mut memo = HashMap::new();
    let mut engine = CumulantEngine {
        oracle,
        memo: &mut memo,
    };
    let mut values = Vec::new();
    let mut words = vec![Vec::<Letter>::new()];
    for _ in 0..max_degree {
        let mut next = Vec::new();
        for w in &words {
            for &l in family {
                let mut v = w.clone();
                v.push(l);
                next.push(v);
            }
        }
        for w in &next {
            values.push((Word::from(w.as_slice()), engine.cumulant(w)?));
        }
        words = next;
    }
    Ok(CumulantTable {
        family: family.to_vec(),
        max_degree,
        values,
    })
}

/// Which free family a letter of a mixed word belongs to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LetterFamily {
    /// Generator `index` of the base oracle. All base letters form one family.
    Base { index: Letter },
    /// A semicircular element of the given variance, free from everything else.
    Semicircular { variance: f64 },
}

/// Family assignment for the letters `1..=len` of a mixed alphabet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyLabel {
    letters: Vec<LetterFamily>,
}

impl FamilyLabel {
    pub fn new(letters: Vec<LetterFamily>) -> Result<Self> {
        for f in &letters {
            if let LetterFamily::Semicircular { variance } = f {
                if !(variance.is_finite() && *variance > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "variance {variance} must be positive"
                    )));
                }
            }
        }
        Ok(FamilyLabel { letters })
    }

    /// Base letters `1..=n` followed by `n` semicirculars of variance `t`.
    pub fn perturbation(n: usize, t: f64) -> Result<Self> {
        let mut letters: Vec<_> = (1..=n as Letter)
            .map(|index| LetterFamily::Base { index })
            .collect();
        letters.extend((0..n).map(|_| LetterFamily::Semicircular { variance: t }));
        Self::new(letters)
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    fn family(&self, l: Letter) -> Result<&LetterFamily> {
        self.letters
            .get((l as usize).wrapping_sub(1))
            .ok_or(Error::IndexOutOfRange {
                index: l as usize,
                alphabet: self.letters.len(),
            })
    }
}

#[derive(Default)]
struct MixedCache {
    moments: HashMap<Vec<Letter>, Scalar>,
    base_cumulants: HashMap<Vec<Letter>, Scalar>,
}

struct MixedEngine<'a> {
    labels: &'a FamilyLabel,
    base: &'a dyn TraceOracle,
    cache: &'a mut MixedCache,
}

impl MixedEngine<'_> {
    fn base_cumulant(&mut self, w: &[Letter]) -> Result<Scalar> {
        CumulantEngine {
            oracle: self.base,
            memo: &mut self.cache.base_cumulants,
        }
        .cumulant(w)
    }

    /// Sum over non-crossing partitions with single-family blocks, split on
    /// the block through position 0; the remaining gaps are independent.
    fn moment(&mut self, w: &[Letter]) -> Result<Scalar> {
        if w.is_empty() {
            return Ok(ONE);
        }
        if let Some(&v) = self.cache.moments.get(w) {
            return Ok(v);
        }
        let k = w.len();
        let mut acc = ZERO;
        match self.labels.family(w[0])?.clone() {
            LetterFamily::Semicircular { variance } => {
                for j in 1..k {
                    if w[j] != w[0] {
                        continue;
                    }
                    let inside = self.moment(&w[1..j])?;
                    if inside == ZERO {
                        continue;
                    }
                    acc += variance * inside * self.moment(&w[j + 1..])?;
                }
            }
            LetterFamily::Base { .. } => {
                let mut candidates = Vec::new();
                let mut base_letters = Vec::with_capacity(k);
                for (i, &l) in w.iter().enumerate() {
                    match self.labels.family(l)? {
                        LetterFamily::Base { index } => {
                            base_letters.push(*index);
                            if i > 0 {
                                candidates.push(i);
                            }
                        }
                        LetterFamily::Semicircular { .. } => base_letters.push(0),
                    }
                }
                let mut sub = Vec::with_capacity(k);
                let mut blocks = Vec::new();
                for_each_block(&candidates, |block| {
                    blocks.push(block.to_vec());
                    Ok(())
                })?;
                for block in blocks {
                    sub.clear();
                    sub.extend(block.iter().map(|&i| base_letters[i]));
                    let mut term = self.base_cumulant(&sub)?;
                    if term == ZERO {
                        continue;
                    }
                    for (a, b) in gaps(&block, k) {
                        term *= self.moment(&w[a..b])?;
                        if term == ZERO {
                            break;
                        }
                    }
                    acc += term;
                }
            }
        }
        self.cache.moments.insert(w.to_vec(), acc);
        Ok(acc)
    }
}

/// `τ(w)` for a word over a mixed alphabet, with freeness between the base
/// family and every semicircular letter (mixed free cumulants vanish).
pub fn mixed_moment(w: &Word, labels: &FamilyLabel, base: &dyn TraceOracle) -> Result<Scalar> {
    check_cap(w.len(), MIXED_CAP)?;
    for l in w.letters() {
        if let LetterFamily::Base { index } = labels.family(*l)? {
            Word::letter(*index).check(base.alphabet_size())?;
        }
    }
    let mut cache = MixedCache::default();
    MixedEngine {
        labels,
        base,
        cache: &mut cache,
    }
    .moment(w.letters())
}

fn perturbed_with_cache(
    w: &Word,
    base: &dyn TraceOracle,
    labels: &FamilyLabel,
    cache: &mut MixedCache,
) -> Result<Scalar> {
    let n = base.alphabet_size();
    w.check(n)?;
    check_cap(w.len(), MIXED_CAP)?;
    let k = w.len();
    let mut engine = MixedEngine {
        labels,
        base,
        cache,
    };
    let mut acc = ZERO;
    let mut expanded = vec![0 as Letter; k];
    // Each letter Zⱼ expands to Xⱼ (letter j) or √t·Sⱼ (letter n+j, variance t).
    for mask in 0u32..(1u32 << k) {
        for (i, &l) in w.letters().iter().enumerate() {
            expanded[i] = if mask & (1 << i) != 0 {
                l + n as Letter
            } else {
                l
            };
        }
        acc += engine.moment(&expanded)?;
    }
    Ok(acc)
}

/// Moment of `X + √t S` with `S` a standard free semicircular family, free from `X`.
pub fn perturbed_moment(w: &Word, base: &dyn TraceOracle, t: f64) -> Result<Scalar> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidInput(format!("t = {t} must be nonnegative")));
    }
    if t == 0.0 {
        w.check(base.alphabet_size())?;
        return base.moment(w);
    }
    let labels = FamilyLabel::perturbation(base.alphabet_size(), t)?;
    perturbed_with_cache(w, base, &labels, &mut MixedCache::default())
}

/// The state of `(X₁+√t S₁, …, Xₙ+√t Sₙ)`.
pub struct PerturbedOracle {
    base: Arc<dyn TraceOracle>,
    t: f64,
    labels: Option<FamilyLabel>,
    cache: Mutex<MixedCache>,
}

impl PerturbedOracle {
    pub fn new(base: Arc<dyn TraceOracle>, t: f64) -> Result<Self> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidInput(format!("t = {t} must be nonnegative")));
        }
        let labels = if t > 0.0 {
            Some(FamilyLabel::perturbation(base.alphabet_size(), t)?)
        } else {
            None
        };
        Ok(PerturbedOracle {
            base,
            t,
            labels,
            cache: Mutex::new(MixedCache::default()),
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn base(&self) -> &Arc<dyn TraceOracle> {
        &self.base
    }
}

impl TraceOracle for PerturbedOracle {
    fn alphabet_size(&self) -> usize {
        self.base.alphabet_size()
    }

    fn moment(&self, w: &Word) -> Result<Scalar> {
        match &self.labels {
            None => {
                w.check(self.base.alphabet_size())?;
                self.base.moment(w)
            }
            Some(labels) => {
                let mut cache = self.cache.lock().expect("perturbation cache poisoned");
                perturbed_with_cache(w, self.base.as_ref(), labels, &mut cache)
            }
        }
    }

    fn descriptor(&self) -> OracleDescriptor {
        OracleDescriptor::Perturbed {
            base: Box::new(self.base.descriptor()),
            t: self.t,
        }
    }
}

/// `n` Hermitian `dim × dim` matrices with the normalized trace `tr/dim`.
#[derive(Clone, Debug)]
pub struct MatrixTuple {
    ensemble: String,
    seed: Option<u64>,
    dim: usize,
    matrices: Vec<CMatrix>,
}

/// Relative Hermiticity tolerance for [`MatrixTuple::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;

impl MatrixTuple {
    pub fn new(ensemble: impl Into<String>, matrices: Vec<CMatrix>, seed: Option<u64>) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::InvalidInput("empty matrix tuple".into()))?;
        let dim = first.nrows();
        if dim == 0 {
            return Err(Error::InvalidInput("matrix dimension must be ≥ 1".into()));
        }
        for (j, m) in matrices.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::InvalidInput(format!(
                    "matrix {} is {}×{}, expected {dim}×{dim}",
                    j + 1,
                    m.nrows(),
                    m.ncols()
                )));
            }
            let scale = m.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
            let dev = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if dev > HERMITIAN_TOL * scale {
                return Err(Error::InvalidInput(format!("matrix {} is not Hermitian", j + 1)));
            }
        }
        Ok(MatrixTuple {
            ensemble: ensemble.into(),
            seed,
            dim,
            matrices,
        })
    }

    pub fn n(&self) -> usize {
        self.matrices.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn ensemble(&self) -> &str {
        &self.ensemble
    }

    pub fn matrix(&self, j: usize) -> &CMatrix {
        &self.matrices[j - 1]
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    pub fn eval_word(&self, w: &Word) -> Result<CMatrix> {
        w.check(self.n())?;
        let mut acc = CMatrix::identity(self.dim, self.dim);
        for &l in w.letters() {
            acc = &acc * self.matrix(l as usize);
        }
        Ok(acc)
    }

    /// `P(X)`.
    pub fn eval(&self, p: &NcPoly) -> Result<CMatrix> {
        if p.alphabet_size() != self.n() {
            return Err(Error::AlphabetMismatch {
                left: p.alphabet_size(),
                right: self.n(),
            });
        }
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for (w, c) in p.terms() {
            acc += self.eval_word(w)? * *c;
        }
        Ok(acc)
    }

    /// Normalized trace of an arbitrary matrix.
    pub fn trace(&self, m: &CMatrix) -> Scalar {
        m.trace() / self.dim as f64
    }

    pub fn to_record(&self, include_entries: bool) -> MatrixTupleRecord {
        MatrixTupleRecord {
            schema: "ncfree.matrix_tuple.v1".into(),
            ensemble: self.ensemble.clone(),
            n: self.n(),
            dim: self.dim,
            seed: self.seed,
            entries: include_entries.then(|| {
                self.matrices
                    .iter()
                    .map(|m| m.iter().map(|z| [z.re, z.im]).collect())
                    .collect()
            }),
        }
    }

    pub fn from_record(rec: &MatrixTupleRecord) -> Result<Self> {
        match &rec.entries {
            Some(entries) => {
                let matrices = entries
                    .iter()
                    .map(|flat| {
                        if flat.len() != rec.dim * rec.dim {
                            return Err(Error::InvalidInput("entry count does not match dim".into()));
                        }
                        Ok(CMatrix::from_iterator(
                            rec.dim,
                            rec.dim,
                            flat.iter().map(|[re, im]| Scalar::new(*re, *im)),
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                MatrixTuple::new(rec.ensemble.clone(), matrices, rec.seed)
            }
            None => match (rec.ensemble.as_str(), rec.seed) {
                ("gue", Some(seed)) => Ok(sample_gue(rec.n, rec.dim, seed)),
                ("bernoulli", _) => bernoulli_tuple(rec.n, rec.dim),
                _ => Err(Error::InvalidInput(format!(
                    "cannot replay ensemble {:?} without entries",
                    rec.ensemble
                ))),
            },
        }
    }
}

/// Persistent form of a [`MatrixTuple`]: replayable from `(ensemble, seed)`,
/// optionally with the full entries (column-major `[re, im]` pairs).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixTupleRecord {
    pub schema: String,
    pub ensemble: String,
    pub n: usize,
    pub dim: usize,
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<Vec<[f64; 2]>>>,
}

/// Normalized trace of the word product.
pub fn matrix_moment(m: &MatrixTuple, w: &Word) -> Result<Scalar> {
    w.check(m.n())?;
    let letters = w.letters();
    match letters.split_last() {
        None => Ok(ONE),
        Some((&last, rest)) => {
            let head = m.eval_word(&Word::from(rest))?;
            let tail = m.matrix(last as usize);
            // tr(AB) without forming AB.
            let mut acc = ZERO;
            for i in 0..m.dim {
                for k in 0..m.dim {
                    acc += head[(i, k)] * tail[(k, i)];
                }
            }
            Ok(acc / m.dim as f64)
        }
    }
}

impl TraceOracle for MatrixTuple {
    fn alphabet_size(&self) -> usize {
        self.n()
    }

    fn moment(&self, w: &Word) -> Result<Scalar> {
        matrix_moment(self, w)
    }

    fn descriptor(&self) -> OracleDescriptor {
        OracleDescriptor::Matrix {
            ensemble: self.ensemble.clone(),
            n: self.n(),
            dim: self.dim,
            seed: self.seed,
        }
    }

    fn matrix_tuple(&self) -> Option<&MatrixTuple> {
        Some(self)
    }
}

/// Independent GUE matrices: off-diagonal entries complex with `E|x|² = 1/N`,
/// diagonal entries real `N(0, 1/N)`. Matrix `j` draws from ChaCha stream `j`.
pub fn sample_gue(n: usize, dim: usize, seed: u64) -> MatrixTuple {
    assert!(dim >= 1, "GUE dimension must be positive");
    let diag_sd = (1.0 / dim as f64).sqrt();
    let off_sd = (0.5 / dim as f64).sqrt();
    let matrices = (0..n)
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64 + 1);
            let mut m = CMatrix::zeros(dim, dim);
            for col in 0..dim {
                for row in 0..=col {
                    let a: f64 = StandardNormal.sample(&mut rng);
                    if row == col {
                        m[(row, col)] = Scalar::new(a * diag_sd, 0.0);
                    } else {
                        let b: f64 = StandardNormal.sample(&mut rng);
                        let z = Scalar::new(a * off_sd, b * off_sd);
                        m[(row, col)] = z;
                        m[(col, row)] = z.conj();
                    }
                }
            }
            m
        })
        .collect();
    MatrixTuple::new("gue", matrices, Some(seed)).expect("GUE samples are Hermitian")
}

/// `n` copies of `diag(+1,…,+1,−1,…,−1)` (first `⌈N/2⌉` entries positive).
pub fn bernoulli_tuple(n: usize, dim: usize) -> Result<MatrixTuple> {
    let plus = dim.div_ceil(2);
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        dim,
        (0..dim).map(|i| Scalar::new(if i < plus { 1.0 } else { -1.0 }, 0.0)),
    ));
    MatrixTuple::new("bernoulli", vec![d; n], None)
}

/// Largest deviations from the oracle axioms over all words up to `max_degree`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AxiomReport {
    pub words_checked: usize,
    pub unit_error: f64,
    pub cyclic_error: f64,
    pub star_error: f64,
}

impl AxiomReport {
    pub fn max_error(&self) -> f64 {
        self.unit_error.max(self.cyclic_error).max(self.star_error)
    }
}

pub fn check_oracle_axioms(oracle: &dyn TraceOracle, max_degree: usize) -> Result<AxiomReport> {
    let mut report = AxiomReport {
        unit_error: (oracle.moment(&Word::empty())? - ONE).norm(),
        ..Default::default()
    };
    for w in Word::all_up_to(oracle.alphabet_size(), max_degree) {
        let m = oracle.moment(&w)?;
        report.words_checked += 1;
        let star = oracle.moment(&w.reversed())?;
        report.star_error = report.star_error.max((star - m.conj()).norm());
        let letters = w.letters();
        for k in 1..letters.len() {
            let mut rotated = letters[k..].to_vec();
            rotated.extend_from_slice(&letters[..k]);
            let r = oracle.moment(&Word::new(rotated))?;
            report.cyclic_error = report.cyclic_error.max((r - m).norm());
        }
    }
    Ok(report)
}

/// `[τ(wᵢ wⱼ*)]` over all words of length `≤ max_len`.
pub fn gram_matrix(oracle: &dyn TraceOracle, max_len: usize) -> Result<CMatrix> {
    let words = Word::all_up_to(oracle.alphabet_size(), max_len);
    let k = words.len();
    let mut g = CMatrix::zeros(k, k);
    for (i, a) in words.iter().enumerate() {
        for (j, b) in words.iter().enumerate() {
            g[(i, j)] = oracle.moment(&a.concat(&b.reversed()))?;
        }
    }
    Ok(g)
}
