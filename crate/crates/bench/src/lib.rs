//! Fixed workloads shared by the benches and their smoke test.

use ncfree_core::analysis::{atom_scan, inequality_sweep, AtomScan, InequalityFamily, Sampler, SweepReport};
use ncfree_core::calculus::derive;
use ncfree_core::moments::{semicircular_moment, PerturbedOracle};
use ncfree_core::random::{random_poly, PolyShape};
use ncfree_core::{NcPoly, NcTensor, Result, SemicircularOracle, TraceOracle, Word};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Seeded random polynomial in `n` variables with up to `terms` monomials of degree ≤ `degree`.
pub fn sample_poly(n: usize, degree: usize, terms: usize, seed: u64) -> NcPoly {
    random_poly(&mut ChaCha8Rng::seed_from_u64(seed), &PolyShape::new(n, degree).terms(terms).complex(true))
}

pub fn derive_all(p: &NcPoly) -> Result<Vec<NcTensor>> {
    (1..=p.alphabet_size()).map(|j| derive(j, p)).collect()
}

/// Every word of length `len` in two letters, under the perturbed semicircular state.
pub fn perturbed_moments(len: usize, t: f64) -> Result<f64> {
    let base: Arc<dyn TraceOracle> = Arc::new(SemicircularOracle::standard(2));
    let o = PerturbedOracle::new(base, t)?;
    Word::all_of_length(2, len).iter().map(|w| o.moment(w).map(|m| m.re)).sum()
}

pub fn semicircular_moments(len: usize) -> Result<f64> {
    Word::all_of_length(2, len)
        .iter()
        .map(|w| semicircular_moment(w, &[1.0, 1.0]).map(|m| m.re))
        .sum()
}

pub fn sweep_instance(family: InequalityFamily, dim: usize, seed: u64) -> Result<SweepReport> {
    inequality_sweep(family, 2, dim, &[seed])
}

pub fn atoms(dims: &[usize]) -> Result<AtomScan> {
    let z = |j| NcPoly::var(2, j).expect("two generators");
    let p = &(&z(1) * &z(2)) + &(&z(2) * &z(1));
    atom_scan(&p, Sampler::Gue { seed: 7 }, dims, 0.05)
}
