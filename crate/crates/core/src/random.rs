//! Seeded generators for random polynomials and tensors with small-integer
//! coefficients, on which floating-point identities are exact.

use rand::Rng;

use crate::ncpoly::{Letter, NcPoly, NcTensor, Scalar, Word};

/// Shape of a random polynomial.
#[derive(Clone, Copy, Debug)]
pub struct PolyShape {
    pub n: usize,
    pub max_degree: usize,
    pub max_terms: usize,
    /// Coefficients are drawn from `[-bound, bound]` (excluding zero).
    pub bound: i32,
    pub complex: bool,
}

impl PolyShape {
    pub fn new(n: usize, max_degree: usize) -> Self {
        PolyShape {
            n,
            max_degree,
            max_terms: 4,
            bound: 3,
            complex: false,
        }
    }

    pub fn terms(mut self, k: usize) -> Self {
        self.max_terms = k;
        self
    }

    pub fn complex(mut self, yes: bool) -> Self {
        self.complex = yes;
        self
    }
}

fn small_int<R: Rng + ?Sized>(rng: &mut R, bound: i32) -> f64 {
    loop {
        let v = rng.random_range(-bound..=bound);
        if v != 0 {
            return v as f64;
        }
    }
}

fn coeff<R: Rng + ?Sized>(rng: &mut R, shape: &PolyShape) -> Scalar {
    let re = small_int(rng, shape.bound);
    let im = if shape.complex && rng.random_bool(0.5) {
        small_int(rng, shape.bound)
    } else {
        0.0
    };
    Scalar::new(re, im)
}

pub fn random_word<R: Rng + ?Sized>(rng: &mut R, n: usize, len: usize) -> Word {
    Word::new((0..len).map(|_| rng.random_range(1..=n) as Letter).collect())
}

pub fn random_poly<R: Rng + ?Sized>(rng: &mut R, shape: &PolyShape) -> NcPoly {
    let k = rng.random_range(1..=shape.max_terms.max(1));
    let terms: Vec<_> = (0..k)
        .map(|_| {
            let len = rng.random_range(0..=shape.max_degree);
            (random_word(rng, shape.n, len), coeff(rng, shape))
        })
        .collect();
    NcPoly::from_terms(shape.n, terms).expect("generated letters are in range")
}

/// Random polynomial whose highest-degree part is a single monomial.
pub fn random_poly_unique_leading<R: Rng + ?Sized>(rng: &mut R, shape: &PolyShape) -> NcPoly {
    let d = rng.random_range(1..=shape.max_degree.max(1));
    let lead = random_word(rng, shape.n, d);
    let mut terms = vec![(lead, coeff(rng, shape))];
    let extra = rng.random_range(0..shape.max_terms.max(1));
    for _ in 0..extra {
        let len = rng.random_range(0..d);
        terms.push((random_word(rng, shape.n, len), coeff(rng, shape)));
    }
    NcPoly::from_terms(shape.n, terms).expect("generated letters are in range")
}

pub fn random_tensor<R: Rng + ?Sized>(rng: &mut R, shape: &PolyShape) -> NcTensor {
    let k = rng.random_range(1..=shape.max_terms.max(1));
    let terms: Vec<_> = (0..k)
        .map(|_| {
            let la = rng.random_range(0..=shape.max_degree);
            let lb = rng.random_range(0..=shape.max_degree);
            (
                (random_word(rng, shape.n, la), random_word(rng, shape.n, lb)),
                coeff(rng, shape),
            )
        })
        .collect();
    NcTensor::from_terms(shape.n, terms).expect("generated letters are in range")
}
