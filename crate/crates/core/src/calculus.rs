//! Non-commutative derivatives and the maps built from them.
//!
//! `∂ⱼ` splits a monomial at every occurrence of `Zⱼ`:
//! `∂ⱼ(P₁ Zⱼ P₂) ∋ P₁ ⊗ P₂`. Everything else here is assembled from that,
//! the tensor operations in [`crate::ncpoly`] and a trace oracle.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::moments::{poly_trace, CMatrix, TraceOracle};
use crate::ncpoly::{Letter, NcPoly, NcTensor, Scalar, Word};

/// Longest chain of derivation-based reductions accepted.
pub const CHAIN_CAP: usize = 12;

fn check_index(j: usize, n: usize) -> Result<()> {
    if j == 0 || j > n {
        Err(Error::IndexOutOfRange { index: j, alphabet: n })
    } else {
        Ok(())
    }
}

fn check_oracle(oracle: &dyn TraceOracle, n: usize) -> Result<()> {
    if oracle.alphabet_size() != n {
        return Err(Error::AlphabetMismatch {
            left: n,
            right: oracle.alphabet_size(),
        });
    }
    Ok(())
}

/// `∂ⱼP = Σ_{P = P₁ Zⱼ P₂} P₁ ⊗ P₂`, extended linearly.
pub fn derive(j: usize, p: &NcPoly) -> Result<NcTensor> {
    let n = p.alphabet_size();
    check_index(j, n)?;
    let target = j as Letter;
    let mut terms = Vec::new();
    for (w, c) in p.terms() {
        let letters = w.letters();
        for (k, &l) in letters.iter().enumerate() {
            if l == target {
                terms.push((
                    (Word::from(&letters[..k]), Word::from(&letters[k + 1..])),
                    *c,
                ));
            }
        }
    }
    NcTensor::from_terms(n, terms)
}

/// `(∂₁P, …, ∂ₙP)`.
pub fn gradient(p: &NcPoly) -> Vec<NcTensor> {
    (1..=p.alphabet_size())
        .map(|j| derive(j, p).expect("index within alphabet"))
        .collect()
}

/// Prescribed values `δ(Z₁), …, δ(Zₙ)` of a derivation into the tensor square.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivationValues {
    values: Vec<NcTensor>,
}

impl DerivationValues {
    pub fn new(values: Vec<NcTensor>) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::InvalidInput("need at least one generator value".into()));
        }
        for v in &values {
            if v.alphabet_size() != n {
                return Err(Error::AlphabetMismatch {
                    left: n,
                    right: v.alphabet_size(),
                });
            }
        }
        Ok(DerivationValues { values })
    }

    /// `δ(Zᵢ) = δᵢⱼ·1⊗1`, i.e. the values of `∂ⱼ`.
    pub fn coordinate(n: usize, j: usize) -> Result<Self> {
        check_index(j, n)?;
        Self::new(
            (1..=n)
                .map(|i| {
                    if i == j {
                        NcTensor::one(n)
                    } else {
                        NcTensor::zero(n)
                    }
                })
                .collect(),
        )
    }

    pub fn alphabet_size(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[NcTensor] {
        &self.values
    }
}

/// `δ(P) = Σⱼ ∂ⱼ(P) ♯ δ(Zⱼ)`: the unique derivation with the given values.
pub fn derivation_from_values(vals: &DerivationValues, p: &NcPoly) -> Result<NcTensor> {
    let n = p.alphabet_size();
    if vals.alphabet_size() != n {
        return Err(Error::AlphabetMismatch {
            left: n,
            right: vals.alphabet_size(),
        });
    }
    let mut acc = NcTensor::zero(n);
    for (j, v) in vals.values.iter().enumerate() {
        if v.is_zero() {
            continue;
        }
        acc = acc.checked_add(&derive(j + 1, p)?.sharp(v)?)?;
    }
    Ok(acc)
}

/// Which leg a partial trace consumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `(τ⊗id)(a⊗b) = τ(a)·b`.
    Left,
    /// `(id⊗τ)(a⊗b) = a·τ(b)`.
    Right,
}

pub fn partial_trace(t: &NcTensor, side: Side, oracle: &dyn TraceOracle) -> Result<NcPoly> {
    let n = t.alphabet_size();
    check_oracle(oracle, n)?;
    let mut terms = Vec::with_capacity(t.num_terms());
    for ((a, b), c) in t.terms() {
        let (traced, kept) = match side {
            Side::Left => (a, b),
            Side::Right => (b, a),
        };
        terms.push((kept.clone(), c * oracle.moment(traced)?));
    }
    Ok(NcPoly::from_terms(n, terms)?.prune_numeric())
}

/// The projection `p` in `Δ_{p,j}`: either a polynomial (idempotent under the
/// intended state, on the caller's word) or a concrete matrix projection under
/// a matrix realization.
#[derive(Clone, Debug)]
pub enum ProjectionSpec {
    Symbolic(NcPoly),
    Matrix(CMatrix),
}

impl ProjectionSpec {
    pub fn identity(n: usize) -> Self {
        ProjectionSpec::Symbolic(NcPoly::one(n))
    }

    /// Validates `p² = p = p*` to `tol` (max-entry norm).
    pub fn matrix(p: CMatrix, tol: f64) -> Result<Self> {
        if p.nrows() != p.ncols() {
            return Err(Error::InvalidInput("projection must be square".into()));
        }
        let herm = (&p - p.adjoint()).camax();
        let idem = (&p * &p - &p).camax();
        if herm > tol || idem > tol {
            return Err(Error::InvalidInput(format!(
                "not a projection (‖p−p*‖={herm:.2e}, ‖p²−p‖={idem:.2e})"
            )));
        }
        Ok(ProjectionSpec::Matrix(p))
    }

    /// `τ(p)` under the given state.
    pub fn trace(&self, oracle: &dyn TraceOracle) -> Result<Scalar> {
        match self {
            ProjectionSpec::Symbolic(p) => poly_trace(oracle, p),
            ProjectionSpec::Matrix(p) => {
                let m = oracle.matrix_tuple().ok_or_else(|| {
                    Error::ModeMismatch("matrix projection needs a matrix-realized state".into())
                })?;
                if p.nrows() != m.dim() {
                    return Err(Error::ModeMismatch(format!(
                        "projection is {}×{}, realization has N = {}",
                        p.nrows(),
                        p.ncols(),
                        m.dim()
                    )));
                }
                Ok(linalg::ntrace(p))
            }
        }
    }
}

/// `Δ_{p,j}P = (τ⊗id)((p⊗1)(ev_X⊗id)(∂ⱼP))`; with `p = 1` this is `Δⱼ`.
pub fn delta_p(
    j: usize,
    p: &ProjectionSpec,
    poly: &NcPoly,
    oracle: &dyn TraceOracle,
) -> Result<NcPoly> {
    let n = poly.alphabet_size();
    check_oracle(oracle, n)?;
    let d = derive(j, poly)?;
    let mut left_traces: BTreeMap<Word, Scalar> = BTreeMap::new();
    match p {
        ProjectionSpec::Symbolic(proj) => {
            if proj.alphabet_size() != n {
                return Err(Error::AlphabetMismatch {
                    left: n,
                    right: proj.alphabet_size(),
                });
            }
            for ((a, _), _) in d.terms() {
                if !left_traces.contains_key(a) {
                    let pa = proj.checked_mul(&NcPoly::monomial(n, a.clone(), Scalar::new(1.0, 0.0))?)?;
                    left_traces.insert(a.clone(), poly_trace(oracle, &pa)?);
                }
            }
        }
        ProjectionSpec::Matrix(proj) => {
            let m = oracle.matrix_tuple().ok_or_else(|| {
                Error::ModeMismatch("matrix projection needs a matrix-realized state".into())
            })?;
            if proj.nrows() != m.dim() {
                return Err(Error::ModeMismatch(format!(
                    "projection dimension {} differs from realization dimension {}",
                    proj.nrows(),
                    m.dim()
                )));
            }
            for ((a, _), _) in d.terms() {
                if !left_traces.contains_key(a) {
                    let pa = proj * m.eval_word(a)?;
                    left_traces.insert(a.clone(), linalg::ntrace(&pa));
                }
            }
        }
    }
    let terms = d
        .terms()
        .map(|((a, b), c)| (b.clone(), c * left_traces[a]));
    Ok(NcPoly::from_terms(n, terms)?.prune_numeric())
}

/// `Δⱼ = Δ_{1,j}`.
pub fn delta(j: usize, poly: &NcPoly, oracle: &dyn TraceOracle) -> Result<NcPoly> {
    delta_p(j, &ProjectionSpec::identity(poly.alphabet_size()), poly, oracle)
}

/// `∂ⱼ*(Y) = m_{ξⱼ}(Y) − m₁(id⊗τ⊗id)(∂ⱼ⊗id + id⊗∂ⱼ)(Y)` for polynomial `ξⱼ`.
///
/// On `a⊗b` this is `a ξⱼ b − (id⊗τ)(∂ⱼa)·b − a·(τ⊗id)(∂ⱼb)`.
pub fn adjoint_derivative(
    j: usize,
    t: &NcTensor,
    xi: &NcPoly,
    oracle: &dyn TraceOracle,
) -> Result<NcPoly> {
    let n = t.alphabet_size();
    check_index(j, n)?;
    check_oracle(oracle, n)?;
    if xi.alphabet_size() != n {
        return Err(Error::AlphabetMismatch {
            left: n,
            right: xi.alphabet_size(),
        });
    }
    let one = Scalar::new(1.0, 0.0);
    let mut acc = NcPoly::zero(n);
    for ((a, b), c) in t.terms() {
        let pa = NcPoly::monomial(n, a.clone(), one)?;
        let pb = NcPoly::monomial(n, b.clone(), one)?;
        let main = pa.checked_mul(xi)?.checked_mul(&pb)?;
        let left = partial_trace(&derive(j, &pa)?, Side::Right, oracle)?.checked_mul(&pb)?;
        let right = pa.checked_mul(&partial_trace(&derive(j, &pb)?, Side::Left, oracle)?)?;
        let term = main.checked_sub(&left)?.checked_sub(&right)?;
        acc = acc.checked_add(&term.scale(*c))?;
    }
    Ok(acc.prune_numeric())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{bernoulli_tuple, SemicircularOracle};

    fn z(n: usize, j: usize) -> NcPoly {
        NcPoly::var(n, j).unwrap()
    }

    fn one(n: usize) -> NcPoly {
        NcPoly::one(n)
    }

    fn t(a: &NcPoly, b: &NcPoly) -> NcTensor {
        NcTensor::elementary(a, b).unwrap()
    }

    fn c(re: f64) -> Scalar {
        Scalar::new(re, 0.0)
    }

    #[test]
    fn derivative_examples() {
        let n = 2;
        let p = &(&z(n, 1) * &z(n, 2)) * &z(n, 1);
        assert_eq!(derive(2, &p).unwrap(), t(&z(n, 1), &z(n, 1)));
        let q = &(&z(n, 1) * &z(n, 2)) + &(&z(n, 2) * &z(n, 1));
        assert_eq!(
            derive(1, &q).unwrap(),
            &t(&one(n), &z(n, 2)) + &t(&z(n, 2), &one(n))
        );
        assert_eq!(
            derive(2, &q).unwrap(),
            &t(&z(n, 1), &one(n)) + &t(&one(n), &z(n, 1))
        );
        assert!(derive(1, &one(n)).unwrap().is_zero());
        assert_eq!(derive(1, &z(n, 1)).unwrap(), NcTensor::one(n));
        assert!(derive(1, &z(n, 2)).unwrap().is_zero());
        assert!(matches!(derive(3, &q), Err(Error::IndexOutOfRange { index: 3, alphabet: 2 })));
    }

    #[test]
    fn reconstruction_examples() {
        let n = 3;
        let p = &z(n, 1) * &z(n, 2);
        let vals = DerivationValues::coordinate(n, 1).unwrap();
        assert_eq!(derivation_from_values(&vals, &p).unwrap(), derive(1, &p).unwrap());

        let zero = DerivationValues::new(vec![NcTensor::zero(n); n]).unwrap();
        assert!(derivation_from_values(&zero, &p).unwrap().is_zero());

        let vals = DerivationValues::new(vec![
            t(&z(n, 2), &z(n, 3)),
            NcTensor::zero(n),
            NcTensor::zero(n),
        ])
        .unwrap();
        let sq = &z(n, 1) * &z(n, 1);
        let expected = &t(&z(n, 2), &(&z(n, 3) * &z(n, 1))) + &t(&(&z(n, 1) * &z(n, 2)), &z(n, 3));
        assert_eq!(derivation_from_values(&vals, &sq).unwrap(), expected);

        assert!(derivation_from_values(&vals, &z(2, 1)).is_err());
    }

    #[test]
    fn partial_trace_examples() {
        let s = SemicircularOracle::standard(2);
        let n = 2;
        assert_eq!(
            partial_trace(&t(&z(n, 1), &one(n)), Side::Right, &s).unwrap(),
            z(n, 1)
        );
        assert!(partial_trace(&t(&z(n, 1), &z(n, 2)), Side::Left, &s)
            .unwrap()
            .is_zero());
        assert_eq!(
            partial_trace(&t(&z(n, 1), &(&z(n, 1) * &z(n, 1))), Side::Right, &s).unwrap(),
            z(n, 1)
        );
        let b = bernoulli_tuple(1, 2).unwrap();
        assert!(partial_trace(&NcTensor::one(2), Side::Left, &b).is_err());
    }

    #[test]
    fn delta_examples() {
        let n = 2;
        let s = SemicircularOracle::standard(n);
        let p = &(&z(n, 1) * &z(n, 2)).scale(c(3.0)) + &z(n, 1);
        let d1 = delta(1, &p, &s).unwrap();
        assert_eq!(d1, &z(n, 2).scale(c(3.0)) + &one(n));
        assert_eq!(delta(2, &d1, &s).unwrap(), NcPoly::constant(n, c(3.0)));
        assert!(delta(1, &NcPoly::constant(n, c(5.0)), &s).unwrap().is_zero());
    }

    #[test]
    fn delta_with_half_projection() {
        // Bernoulli X with X² = 1: p = (1 + X)/2 is a projection with τ(p) = ½.
        let b = bernoulli_tuple(1, 4).unwrap();
        let p = (&one(1) + &z(1, 1)).scale(c(0.5));
        let sym = ProjectionSpec::Symbolic(p);
        assert_eq!(sym.trace(&b).unwrap(), c(0.5));
        assert_eq!(delta_p(1, &sym, &z(1, 1), &b).unwrap(), NcPoly::constant(1, c(0.5)));

        let mat = ProjectionSpec::matrix(
            CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(1.0), c(0.0), c(0.0)])),
            1e-12,
        )
        .unwrap();
        assert_eq!(delta_p(1, &mat, &z(1, 1), &b).unwrap(), NcPoly::constant(1, c(0.5)));

        let s = SemicircularOracle::standard(1);
        assert!(matches!(delta_p(1, &mat, &z(1, 1), &s), Err(Error::ModeMismatch(_))));
        assert!(ProjectionSpec::matrix(CMatrix::identity(2, 2) * c(2.0), 1e-12).is_err());
    }

    #[test]
    fn adjoint_derivative_examples() {
        let n = 1;
        let s = SemicircularOracle::standard(n);
        let xi = z(n, 1);
        assert_eq!(adjoint_derivative(1, &NcTensor::one(n), &xi, &s).unwrap(), xi);
        let y = t(&z(n, 1), &one(n));
        assert_eq!(
            adjoint_derivative(1, &y, &xi, &s).unwrap(),
            &(&z(n, 1) * &z(n, 1)) - &one(n)
        );
    }
}
