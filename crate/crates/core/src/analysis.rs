//! Matrix-scale checks of the norm inequalities, kernel balance, the
//! leading-coefficient reduction engine, zero-divisor probes and atom scans.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{delta_p, derive, ProjectionSpec, Side, CHAIN_CAP};
use crate::error::{Error, Result};
use crate::fisher::ConjugateSystemSpec;
use crate::linalg::{self, hermitian_eigenvalues, kernel_projections, l2_norm, op_norm};
use crate::moments::{bernoulli_tuple, sample_gue, CMatrix, MatrixTuple, TraceOracle};
use crate::ncpoly::{NcPoly, NcTensor, Scalar, Word};
use crate::random::{random_poly, random_tensor, PolyShape};

/// Margin floor for exact (non-matrix) checks.
pub const EXACT_TOL: f64 = 1e-9;
/// Largest dimension accepted by [`zero_divisor_probe`].
pub const PROBE_DIM_CAP: usize = 300;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub instance: String,
    pub index: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub margin: f64,
    pub tolerance: f64,
    /// `margin ≥ −tolerance·max(1, rhs)`.
    pub pass: bool,
}

impl InequalityReport {
    pub fn new(instance: impl Into<String>, index: Option<usize>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let margin = rhs - lhs;
        InequalityReport {
            instance: instance.into(),
            index,
            lhs,
            rhs,
            margin,
            tolerance,
            pass: margin >= -tolerance * rhs.max(1.0),
        }
    }
}

/// A matrix tuple together with matrices standing in for `ξ₁, …, ξₙ`.
#[derive(Debug)]
pub struct MatrixRealization {
    tuple: MatrixTuple,
    xi: Vec<CMatrix>,
    tolerance: f64,
    words: Mutex<HashMap<Word, Arc<CMatrix>>>,
}

impl MatrixRealization {
    /// Default tolerance `5/√N`, absorbing finite-dimensional deviations.
    pub fn new(tuple: MatrixTuple, xi: Vec<CMatrix>) -> Result<Self> {
        if xi.len() != tuple.n() {
            return Err(Error::AlphabetMismatch {
                left: tuple.n(),
                right: xi.len(),
            });
        }
        let d = tuple.dim();
        if xi.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(Error::InvalidInput("ξ matrices must match the tuple dimension".into()));
        }
        let tolerance = 5.0 / (d as f64).sqrt();
        Ok(MatrixRealization {
            tuple,
            xi,
            tolerance,
            words: Mutex::new(HashMap::new()),
        })
    }

    /// Evaluates a polynomial conjugate system on the tuple.
    pub fn from_conjugate_system(tuple: MatrixTuple, xi: &ConjugateSystemSpec) -> Result<Self> {
        let mats = xi
            .components()
            .iter()
            .map(|x| tuple.eval(x))
            .collect::<Result<Vec<_>>>()?;
        Self::new(tuple, mats)
    }

    /// A GUE tuple with `ξⱼ = Xⱼ`, the limiting conjugate system.
    pub fn gue(n: usize, dim: usize, seed: u64) -> Self {
        let tuple = sample_gue(n, dim, seed);
        let xi = tuple.matrices().to_vec();
        Self::new(tuple, xi).expect("shapes agree by construction")
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn tuple(&self) -> &MatrixTuple {
        &self.tuple
    }

    pub fn xi(&self, j: usize) -> &CMatrix {
        &self.xi[j - 1]
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn n(&self) -> usize {
        self.tuple.n()
    }

    /// `w(X)`, memoized; products reuse the cached prefix.
    pub fn word(&self, w: &Word) -> Result<Arc<CMatrix>> {
        w.check(self.n())?;
        if let Some(m) = self.words.lock().expect("word cache poisoned").get(w) {
            return Ok(Arc::clone(m));
        }
        let m = match w.letters().split_last() {
            None => CMatrix::identity(self.tuple.dim(), self.tuple.dim()),
            Some((&last, rest)) => &*self.word(&Word::from(rest))? * self.tuple.matrix(last as usize),
        };
        let m = Arc::new(m);
        self.words
            .lock()
            .expect("word cache poisoned")
            .insert(w.clone(), Arc::clone(&m));
        Ok(m)
    }

    pub fn eval(&self, p: &NcPoly) -> Result<CMatrix> {
        if p.alphabet_size() != self.n() {
            return Err(Error::AlphabetMismatch {
                left: p.alphabet_size(),
                right: self.n(),
            });
        }
        let d = self.tuple.dim();
        let mut acc = CMatrix::zeros(d, d);
        for (w, c) in p.terms() {
            acc += &*self.word(w)? * *c;
        }
        Ok(acc)
    }

    fn op(&self, p: &NcPoly) -> Result<f64> {
        Ok(op_norm(&self.eval(p)?))
    }

    fn xi_l2(&self, j: usize) -> f64 {
        l2_norm(self.xi(j))
    }

    /// `(id⊗τ)` or `(τ⊗id)` of a tensor, evaluated at `X`.
    fn partial(&self, t: &NcTensor, side: Side) -> Result<CMatrix> {
        let d = self.tuple.dim();
        let mut acc = CMatrix::zeros(d, d);
        for ((a, b), c) in t.terms() {
            let (traced, kept) = match side {
                Side::Left => (a, b),
                Side::Right => (b, a),
            };
            acc += &*self.word(kept)? * (c * linalg::ntrace(&*self.word(traced)?));
        }
        Ok(acc)
    }

    /// `∂ᵢ*(T)` by Voiculescu's formula with the realization's `ξᵢ`.
    pub fn adjoint_derivative(&self, i: usize, t: &NcTensor) -> Result<CMatrix> {
        let n = self.n();
        let d = self.tuple.dim();
        let one = Scalar::new(1.0, 0.0);
        let mut acc = CMatrix::zeros(d, d);
        for ((a, b), c) in t.terms() {
            let pa = NcPoly::monomial(n, a.clone(), one)?;
            let pb = NcPoly::monomial(n, b.clone(), one)?;
            let (ma, mb) = (self.word(a)?, self.word(b)?);
            let left = self.partial(&derive(i, &pa)?, Side::Right)?;
            let right = self.partial(&derive(i, &pb)?, Side::Left)?;
            acc += (&*ma * self.xi(i) * &*mb - left * &*mb - &*ma * right) * *c;
        }
        Ok(acc)
    }
}

fn check_alphabet(p: &NcPoly, real: &MatrixRealization) -> Result<()> {
    if p.alphabet_size() != real.n() {
        return Err(Error::AlphabetMismatch {
            left: p.alphabet_size(),
            right: real.n(),
        });
    }
    Ok(())
}

/// The four norm estimates for `P` against each `ξⱼ`:
/// `‖Pξⱼ − (id⊗τ)∂ⱼP‖₂`, `‖ξⱼP − (τ⊗id)∂ⱼP‖₂ ≤ ‖ξⱼ‖₂‖P‖` and
/// `‖(id⊗τ)∂ⱼP‖₂`, `‖(τ⊗id)∂ⱼP‖₂ ≤ 2‖ξⱼ‖₂‖P‖`.
pub fn check_dabrowski(p: &NcPoly, real: &MatrixRealization) -> Result<Vec<InequalityReport>> {
    check_alphabet(p, real)?;
    let pm = real.eval(p)?;
    let p_op = op_norm(&pm);
    let tol = real.tolerance();
    let mut out = Vec::with_capacity(4 * real.n());
    for j in 1..=real.n() {
        let d = derive(j, p)?;
        let right = real.partial(&d, Side::Right)?;
        let left = real.partial(&d, Side::Left)?;
        let bound = real.xi_l2(j) * p_op;
        let xi = real.xi(j);
        out.push(InequalityReport::new(
            "P xi - (id⊗τ)∂P",
            Some(j),
            l2_norm(&(&pm * xi - &right)),
            bound,
            tol,
        ));
        out.push(InequalityReport::new(
            "xi P - (τ⊗id)∂P",
            Some(j),
            l2_norm(&(xi * &pm - &left)),
            bound,
            tol,
        ));
        out.push(InequalityReport::new("(id⊗τ)∂P", Some(j), l2_norm(&right), 2.0 * bound, tol));
        out.push(InequalityReport::new("(τ⊗id)∂P", Some(j), l2_norm(&left), 2.0 * bound, tol));
    }
    Ok(out)
}

/// `‖∂ᵢ*(Y₁⊗Y₂)‖₂ ≤ 3‖ξᵢ‖₂‖Y₁‖‖Y₂‖`, and the two partial-trace bounds with
/// constant 4, for every `i`.
pub fn check_key_estimates(y1: &NcPoly, y2: &NcPoly, real: &MatrixRealization) -> Result<Vec<InequalityReport>> {
    check_alphabet(y1, real)?;
    check_alphabet(y2, real)?;
    let tol = real.tolerance();
    let norms = real.op(y1)? * real.op(y2)?;
    let elementary = NcTensor::elementary(y1, y2)?;
    let mut out = Vec::with_capacity(3 * real.n());
    for i in 1..=real.n() {
        let xi = real.xi_l2(i);
        let adj = real.adjoint_derivative(i, &elementary)?;
        out.push(InequalityReport::new("∂*(Y1⊗Y2)", Some(i), l2_norm(&adj), 3.0 * xi * norms, tol));
        let b1 = real.partial(&derive(i, y1)?.right_mul(y2)?, Side::Right)?;
        out.push(InequalityReport::new(
            "(id⊗τ)((∂Y1)(1⊗Y2))",
            Some(i),
            l2_norm(&b1),
            4.0 * xi * norms,
            tol,
        ));
        let b2 = real.partial(&derive(i, y2)?.left_mul(y1)?, Side::Left)?;
        out.push(InequalityReport::new(
            "(τ⊗id)((Y1⊗1)∂Y2)",
            Some(i),
            l2_norm(&b2),
            4.0 * xi * norms,
            tol,
        ));
    }
    Ok(out)
}

/// `‖Q‖_π` bounded through the canonical monomial decomposition and operator norms at `X`.
pub fn projective_norm_at(q: &NcTensor, tuple: &MatrixTuple) -> Result<f64> {
    q.projective_norm_ub(|m| Ok(op_norm(&tuple.eval(m)?)))
}

/// `|⟨v*(∂ᵢP)u, Q⟩| ≤ 4‖ξᵢ‖₂(‖Pu‖₂‖v‖ + ‖u‖‖P*v‖₂)‖Q‖_π` for each `i`, then the
/// summed-square form against `16(…)²Φ*‖Q‖_π²`.
///
/// `u` and `v` are matrices so that spectral projections can be used as well
/// as polynomial evaluations.
pub fn check_fisher_bound_matrices(
    p: &NcPoly,
    u: &CMatrix,
    v: &CMatrix,
    q: &NcTensor,
    real: &MatrixRealization,
) -> Result<Vec<InequalityReport>> {
    check_alphabet(p, real)?;
    if q.alphabet_size() != real.n() {
        return Err(Error::AlphabetMismatch {
            left: q.alphabet_size(),
            right: real.n(),
        });
    }
    let tuple = real.tuple();
    let tol = real.tolerance();
    let pm = real.eval(p)?;
    let vstar = v.adjoint();
    let weight = l2_norm(&(&pm * u)) * op_norm(v) + op_norm(u) * l2_norm(&(pm.adjoint() * v));
    let q_pi = projective_norm_at(q, tuple)?;

    // ⟨A⊗B, C⊗D⟩ = τ(AC*)τ(BD*), with v*(a⊗b)u = v*a ⊗ bu.
    let q_legs: Vec<(CMatrix, CMatrix, Scalar)> = q
        .terms()
        .map(|((a, b), c)| Ok((real.word(a)?.adjoint(), real.word(b)?.adjoint(), *c)))
        .collect::<Result<_>>()?;

    let mut out = Vec::with_capacity(real.n() + 1);
    let mut sum_sq = 0.0;
    let mut phi = 0.0;
    for i in 1..=real.n() {
        let mut pairing = Scalar::new(0.0, 0.0);
        for ((a, b), c) in derive(i, p)?.terms() {
            let left = &vstar * &*real.word(a)?;
            let right = &*real.word(b)? * u;
            for (qa_star, qb_star, d) in &q_legs {
                pairing += c * d.conj() * linalg::ntrace_product(&left, qa_star) * linalg::ntrace_product(&right, qb_star);
            }
        }
        let lhs = pairing.norm();
        let xi = real.xi_l2(i);
        sum_sq += lhs * lhs;
        phi += xi * xi;
        out.push(InequalityReport::new("|<v*(∂P)u, Q>|", Some(i), lhs, 4.0 * xi * weight * q_pi, tol));
    }
    out.push(InequalityReport::new(
        "Σ|<v*(∂P)u, Q>|²",
        None,
        sum_sq,
        16.0 * weight * weight * phi * q_pi * q_pi,
        tol,
    ));
    Ok(out)
}

/// [`check_fisher_bound_matrices`] with `u = u(X)`, `v = v(X)`.
pub fn check_fisher_bound_inequality(
    p: &NcPoly,
    u: &NcPoly,
    v: &NcPoly,
    q: &NcTensor,
    real: &MatrixRealization,
) -> Result<Vec<InequalityReport>> {
    check_alphabet(u, real)?;
    check_alphabet(v, real)?;
    check_fisher_bound_matrices(p, &real.eval(u)?, &real.eval(v)?, q, real)
}

/// Which inequality family a sweep exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityFamily {
    Dabrowski,
    KeyEstimates,
    FisherBound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepInstance {
    pub seed: u64,
    pub reports: Vec<InequalityReport>,
}

impl SweepInstance {
    pub fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub family: InequalityFamily,
    pub n: usize,
    pub dim: usize,
    pub tolerance: f64,
    pub instances: Vec<SweepInstance>,
}

impl SweepReport {
    pub fn failures(&self) -> usize {
        self.instances
            .iter()
            .flat_map(|i| &i.reports)
            .filter(|r| !r.pass)
            .count()
    }

    pub fn checks(&self) -> usize {
        self.instances.iter().map(|i| i.reports.len()).sum()
    }

    /// Smallest `margin / max(1, rhs)` seen.
    pub fn worst_relative_margin(&self) -> f64 {
        self.instances
            .iter()
            .flat_map(|i| &i.reports)
            .map(|r| r.margin / r.rhs.max(1.0))
            .fold(f64::INFINITY, f64::min)
    }
}

fn instance_rng(seed: u64, family: InequalityFamily) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1000 + family as u64);
    rng
}

fn run_instance(family: InequalityFamily, n: usize, dim: usize, seed: u64) -> Result<Vec<InequalityReport>> {
    let real = MatrixRealization::gue(n, dim, seed);
    let mut rng = instance_rng(seed, family);
    match family {
        InequalityFamily::Dabrowski => {
            let p = random_poly(&mut rng, &PolyShape::new(n, 3).complex(true));
            check_dabrowski(&p, &real)
        }
        InequalityFamily::KeyEstimates => {
            let shape = PolyShape::new(n, 2).terms(3).complex(true);
            let y1 = random_poly(&mut rng, &shape);
            let y2 = random_poly(&mut rng, &shape);
            check_key_estimates(&y1, &y2, &real)
        }
        InequalityFamily::FisherBound => {
            let p = random_poly(&mut rng, &PolyShape::new(n, 3).complex(true));
            let small = PolyShape::new(n, 1).terms(2).complex(true);
            let u = random_poly(&mut rng, &small);
            let v = random_poly(&mut rng, &small);
            let q = random_tensor(&mut rng, &PolyShape::new(n, 1).terms(3).complex(true));
            check_fisher_bound_inequality(&p, &u, &v, &q, &real)
        }
    }
}

/// Seeded random instances on GUE realizations, run in parallel and reported in seed order.
pub fn inequality_sweep(family: InequalityFamily, n: usize, dim: usize, seeds: &[u64]) -> Result<SweepReport> {
    let instances = seeds
        .par_iter()
        .map(|&seed| run_instance(family, n, dim, seed).map(|reports| SweepInstance { seed, reports }))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        family,
        n,
        dim,
        tolerance: 5.0 / (dim as f64).sqrt(),
        instances,
    })
}

/// `Δ_{p_d,i_d} ∘ … ∘ Δ_{p₁,i₁}(P)`; the first path entry is applied first.
pub fn reduction_chain(p: &NcPoly, path: &[(ProjectionSpec, usize)], oracle: &dyn TraceOracle) -> Result<NcPoly> {
    let deg = p.degree().unwrap_or(0);
    if path.len() > deg.max(1) || path.len() > CHAIN_CAP {
        return Err(Error::InvalidInput(format!(
            "path of length {} exceeds degree {deg} (cap {CHAIN_CAP})",
            path.len()
        )));
    }
    let mut acc = p.clone();
    for (proj, i) in path {
        acc = delta_p(*i, proj, &acc, oracle)?;
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeadingExtraction {
    pub word: Word,
    pub coefficient: Scalar,
    pub extracted: Scalar,
    /// The chain ended in a constant equal to the coefficient.
    pub exact: bool,
}

/// Runs the chain with all `p = 1` along the lexicographically largest
/// highest-degree monomial and compares the resulting constant with its coefficient.
pub fn extract_leading(p: &NcPoly, oracle: &dyn TraceOracle) -> Result<LeadingExtraction> {
    let (word, coefficient) = p
        .leading_terms()
        .into_iter()
        .max_by(|a, b| a.0.cmp(&b.0))
        .ok_or_else(|| Error::InvalidInput("zero polynomial has no leading term".into()))?;
    if word.is_empty() {
        return Err(Error::InvalidInput("constant polynomial has no reduction path".into()));
    }
    let n = p.alphabet_size();
    let path: Vec<_> = word
        .letters()
        .iter()
        .map(|&l| (ProjectionSpec::identity(n), l as usize))
        .collect();
    let reduced = reduction_chain(p, &path, oracle)?;
    let extracted = reduced.constant_term();
    let exact = reduced.degree().unwrap_or(0) == 0 && extracted == coefficient;
    Ok(LeadingExtraction {
        word,
        coefficient,
        extracted,
        exact,
    })
}

/// `(dim ker A, dim ker A*)` from singular values below `tol·σ_max`.
pub fn kernel_balance(a: &CMatrix, tol: f64) -> (usize, usize) {
    (linalg::nullity(a, tol), linalg::nullity(&a.adjoint(), tol))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub n: usize,
    pub dim: usize,
    pub dim_kernel: usize,
    pub dim_cokernel: usize,
    /// `‖P(X)‖`.
    pub p_norm: f64,
    /// `εᵢ = ‖(p⊗1)(∂ᵢP)(X)(1⊗w)‖`, computed only when `w ≠ 0`.
    pub epsilons: Option<Vec<f64>>,
    pub tolerance: f64,
}

fn full_or(proj: CMatrix, dim_kernel: usize, dim: usize) -> CMatrix {
    if dim_kernel == dim {
        CMatrix::identity(dim, dim)
    } else {
        proj
    }
}

/// Kernel projections of `P(X)` and the size of `∂ᵢP` squeezed between them.
pub fn zero_divisor_probe(p: &NcPoly, m: &MatrixTuple, tol: f64) -> Result<ProbeReport> {
    let dim = m.dim();
    if dim > PROBE_DIM_CAP {
        return Err(Error::InvalidInput(format!("probe dimension {dim} exceeds {PROBE_DIM_CAP}")));
    }
    let pm = m.eval(p)?;
    let k = kernel_projections(&pm, tol);
    let epsilons = if k.dim_kernel == 0 {
        None
    } else {
        let w = full_or(k.kernel, k.dim_kernel, dim);
        let proj = full_or(k.cokernel, k.dim_cokernel, dim);
        let mut eps = Vec::with_capacity(m.n());
        for i in 1..=m.n() {
            let terms = derive(i, p)?
                .terms()
                .map(|((a, b), c)| Ok((&proj * m.eval_word(a)? * *c, m.eval_word(b)? * &w)))
                .collect::<Result<Vec<_>>>()?;
            eps.push(linalg::tensor_operator_norm(&terms));
        }
        Some(eps)
    };
    Ok(ProbeReport {
        n: m.n(),
        dim,
        dim_kernel: k.dim_kernel,
        dim_cokernel: k.dim_cokernel,
        p_norm: op_norm(&pm),
        epsilons,
        tolerance: tol,
    })
}

/// `X₂ := X₁` built from one GUE matrix.
pub fn degenerate_pair(dim: usize, seed: u64) -> Result<MatrixTuple> {
    let x = sample_gue(1, dim, seed).matrix(1).clone();
    MatrixTuple::new("degenerate", vec![x.clone(), x], Some(seed))
}

/// Where the matrices of an atom scan come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "ensemble", rename_all = "snake_case")]
pub enum Sampler {
    Gue { seed: u64 },
    Bernoulli,
}

impl Sampler {
    pub fn sample(&self, n: usize, dim: usize) -> Result<MatrixTuple> {
        match self {
            Sampler::Gue { seed } => Ok(sample_gue(n, dim, *seed)),
            Sampler::Bernoulli => bernoulli_tuple(n, dim),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumHistogram {
    pub dim: usize,
    pub h: f64,
    pub poly: String,
    pub sampler: Sampler,
    /// Bin `k` is `[(k−½)h, (k+½)h)`.
    pub first_bin: i64,
    pub masses: Vec<f64>,
    /// `mean(λᵏ)` for `k = 0..=4`.
    pub moments: [f64; 5],
}

impl SpectrumHistogram {
    pub fn from_eigenvalues(eigs: &[f64], h: f64, poly: String, sampler: Sampler) -> Result<Self> {
        if eigs.is_empty() || h.is_nan() || h <= 0.0 {
            return Err(Error::InvalidInput("need eigenvalues and a positive bin width".into()));
        }
        let bins: Vec<i64> = eigs.iter().map(|&x| (x / h).round() as i64).collect();
        let lo = *bins.iter().min().expect("nonempty");
        let hi = *bins.iter().max().expect("nonempty");
        let mut counts = vec![0usize; (hi - lo + 1) as usize];
        for b in &bins {
            counts[(b - lo) as usize] += 1;
        }
        let total = eigs.len() as f64;
        let mut moments = [0.0; 5];
        for (k, m) in moments.iter_mut().enumerate() {
            *m = eigs.iter().map(|x| x.powi(k as i32)).sum::<f64>() / total;
        }
        Ok(SpectrumHistogram {
            dim: eigs.len(),
            h,
            poly,
            sampler,
            first_bin: lo,
            masses: counts.into_iter().map(|c| c as f64 / total).collect(),
            moments,
        })
    }

    pub fn max_mass(&self) -> f64 {
        self.masses.iter().copied().fold(0.0, f64::max)
    }

    /// Bin edges and mass.
    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.masses.iter().enumerate().map(move |(k, &m)| {
            let centre = (self.first_bin + k as i64) as f64 * self.h;
            (centre - 0.5 * self.h, centre + 0.5 * self.h, m)
        })
    }

    /// Mass of the bin containing `x`.
    pub fn mass_at(&self, x: f64) -> f64 {
        let k = (x / self.h).round() as i64 - self.first_bin;
        if k < 0 {
            return 0.0;
        }
        self.masses.get(k as usize).copied().unwrap_or(0.0)
    }

    /// CSV with columns `bin_left,bin_right,mass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,mass\n");
        for (l, r, m) in self.bins() {
            let _ = writeln!(out, "{l:.6},{r:.6},{m:e}");
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomTrend {
    pub schema: String,
    pub poly: String,
    pub sampler: Sampler,
    pub h: f64,
    pub dims: Vec<usize>,
    pub max_masses: Vec<f64>,
    pub strictly_decreasing: bool,
    /// The max bin mass fails to decrease somewhere along the grid.
    pub atom_consistent: bool,
}

pub const ATOM_TREND_SCHEMA: &str = "ncfree.atom_trend.v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomScan {
    pub histograms: Vec<SpectrumHistogram>,
    pub trend: AtomTrend,
}

/// Eigenvalue histograms of `P(X)` over an ascending dimension grid.
pub fn atom_scan(p: &NcPoly, sampler: Sampler, dims: &[usize], h: f64) -> Result<AtomScan> {
    if !p.is_self_adjoint(1e-12) {
        return Err(Error::NotSelfAdjoint);
    }
    if dims.is_empty() || dims.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("dimension grid must be nonempty and ascending".into()));
    }
    let label = p.to_string();
    let histograms = dims
        .par_iter()
        .map(|&dim| {
            let m = sampler.sample(p.alphabet_size(), dim)?;
            let eigs = hermitian_eigenvalues(&m.eval(p)?);
            SpectrumHistogram::from_eigenvalues(&eigs, h, label.clone(), sampler)
        })
        .collect::<Result<Vec<_>>>()?;
    let max_masses: Vec<f64> = histograms.iter().map(|h| h.max_mass()).collect();
    let strictly_decreasing = max_masses.windows(2).all(|w| w[1] < w[0]);
    Ok(AtomScan {
        trend: AtomTrend {
            schema: ATOM_TREND_SCHEMA.into(),
            poly: label,
            sampler,
            h,
            dims: dims.to_vec(),
            max_masses,
            strictly_decreasing,
            atom_consistent: !strictly_decreasing,
        },
        histograms,
    })
}
