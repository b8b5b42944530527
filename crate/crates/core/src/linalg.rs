//! Dense complex linear algebra for matrix realizations.

use nalgebra::{SymmetricEigen, SVD};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::moments::CMatrix;
use crate::ncpoly::Scalar;

/// Singular values below `KERNEL_TOL · σ_max` count as zero.
pub const KERNEL_TOL: f64 = 1e-10;

/// Normalized trace `tr(A)/N`.
pub fn ntrace(a: &CMatrix) -> Scalar {
    a.trace() / a.nrows() as f64
}

/// `tr(AB)/N` without forming `AB`.
pub fn ntrace_product(a: &CMatrix, b: &CMatrix) -> Scalar {
    a.component_mul(&b.transpose()).sum() / a.nrows() as f64
}

/// `‖A‖₂ = τ(AA*)^{1/2}` under the normalized trace.
pub fn l2_norm(a: &CMatrix) -> f64 {
    a.norm() / (a.nrows() as f64).sqrt()
}

/// Operator norm (largest singular value).
pub fn op_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().singular_values().max()
}

/// Eigenvalues of the Hermitian part `(A + A*)/2`, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let h = (a + a.adjoint()) * Scalar::new(0.5, 0.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Orthogonal projections onto `ker A` and `ker A*`, with their dimensions.
#[derive(Clone, Debug)]
pub struct KernelProjections {
    pub kernel: CMatrix,
    pub cokernel: CMatrix,
    pub dim_kernel: usize,
    pub dim_cokernel: usize,
}

/// Kernel projections of a square matrix via its SVD `A = UΣV*`.
pub fn kernel_projections(a: &CMatrix, rel_tol: f64) -> KernelProjections {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "kernel projections need a square matrix");
    let svd = SVD::new(a.clone(), true, true);
    let sigma_max = svd.singular_values.max();
    let cut = rel_tol * sigma_max;
    let u = svd.u.as_ref().expect("requested U");
    let v = svd.v_t.as_ref().expect("requested V*").adjoint();
    let mut kernel = CMatrix::zeros(n, n);
    let mut cokernel = CMatrix::zeros(n, n);
    let mut dim = 0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if sigma_max == 0.0 || s <= cut {
            dim += 1;
            let vk = v.column(k);
            let uk = u.column(k);
            kernel += vk * vk.adjoint();
            cokernel += uk * uk.adjoint();
        }
    }
    KernelProjections {
        kernel,
        cokernel,
        dim_kernel: dim,
        dim_cokernel: dim,
    }
}

/// Nullity from singular values below `rel_tol · σ_max`.
pub fn nullity(a: &CMatrix, rel_tol: f64) -> usize {
    let sv = a.clone().singular_values();
    let smax = sv.max();
    sv.iter().filter(|&&s| smax == 0.0 || s <= rel_tol * smax).count()
}

/// Dense Kronecker product `A ⊗ B`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Operator norm of `Σₖ Aₖ ⊗ Bₖ` on `ℂᴺ ⊗ ℂᴺ`.
///
/// Vectors are `N×N` matrices `V`, on which `A ⊗ B` acts as `A V Bᵀ`; the norm
/// is obtained by power iteration on `T*T`. A single elementary term uses the
/// cross-norm identity `‖A⊗B‖ = ‖A‖‖B‖`.
pub fn tensor_operator_norm(terms: &[(CMatrix, CMatrix)]) -> f64 {
    match terms {
        [] => 0.0,
        [(a, b)] => op_norm(a) * op_norm(b),
        _ => power_iteration(terms),
    }
}

fn apply(terms: &[(CMatrix, CMatrix)], v: &CMatrix) -> CMatrix {
    let (a0, b0) = &terms[0];
    let mut out = CMatrix::zeros(a0.nrows(), b0.nrows());
    for (a, b) in terms {
        out += a * v * b.transpose();
    }
    out
}

fn apply_adjoint(terms: &[(CMatrix, CMatrix)], w: &CMatrix) -> CMatrix {
    let (a0, b0) = &terms[0];
    let mut out = CMatrix::zeros(a0.ncols(), b0.ncols());
    for (a, b) in terms {
        out += a.adjoint() * w * b.conjugate();
    }
    out
}

fn power_iteration(terms: &[(CMatrix, CMatrix)]) -> f64 {
    let (a0, b0) = &terms[0];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v = CMatrix::from_fn(a0.ncols(), b0.ncols(), |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Scalar::new(re, im)
    });
    v /= Scalar::new(v.norm(), 0.0);
    let mut estimate = 0.0;
    for _ in 0..2000 {
        let tv = apply(terms, &v);
        let norm_tv = tv.norm();
        if norm_tv == 0.0 {
            return 0.0;
        }
        let w = apply_adjoint(terms, &tv);
        let norm_w = w.norm();
        if norm_w == 0.0 {
            return norm_tv;
        }
        v = w / Scalar::new(norm_w, 0.0);
        let next = norm_tv;
        if (next - estimate).abs() <= 1e-13 * next {
            return next;
        }
        estimate = next;
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Scalar {
        Scalar::new(re, 0.0)
    }

    fn random_matrix(n: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(n, n, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Scalar::new(re, im)
        })
    }

    #[test]
    fn power_iteration_matches_dense_kronecker() {
        for seed in 0..5 {
            let terms: Vec<_> = (0..3)
                .map(|k| (random_matrix(5, seed * 10 + k), random_matrix(5, seed * 10 + k + 100)))
                .collect();
            let mut dense = CMatrix::zeros(25, 25);
            for (a, b) in &terms {
                dense += kron(a, b);
            }
            let exact = op_norm(&dense);
            let fast = tensor_operator_norm(&terms);
            assert!((exact - fast).abs() <= 1e-8 * exact, "{exact} vs {fast}");
        }
    }

    #[test]
    fn cross_norm_on_elementary_terms() {
        let a = random_matrix(4, 1);
        let b = random_matrix(4, 2);
        let dense = op_norm(&kron(&a, &b));
        assert!((tensor_operator_norm(&[(a, b)]) - dense).abs() < 1e-10 * dense);
        assert_eq!(tensor_operator_norm(&[]), 0.0);
    }

    #[test]
    fn kernels_of_constructed_matrices() {
        let jordan = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        let k = kernel_projections(&jordan, KERNEL_TOL);
        assert_eq!((k.dim_kernel, k.dim_cokernel), (1, 1));
        // ker J = span(e₁), ker J* = span(e₂).
        assert!((k.kernel[(0, 0)] - c(1.0)).norm() < 1e-12);
        assert!((k.cokernel[(1, 1)] - c(1.0)).norm() < 1e-12);
        assert!((&jordan * &k.kernel).norm() < 1e-12);
        assert!((jordan.adjoint() * &k.cokernel).norm() < 1e-12);

        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0), c(0.0), c(1.0)]));
        assert_eq!(nullity(&d, KERNEL_TOL), 2);
        assert_eq!(nullity(&random_matrix(6, 9), KERNEL_TOL), 0);
        assert_eq!(nullity(&CMatrix::zeros(3, 3), KERNEL_TOL), 3);
    }

    #[test]
    fn norms_of_identity() {
        let i = CMatrix::identity(7, 7);
        assert_eq!(op_norm(&i), 1.0);
        assert!((l2_norm(&i) - 1.0).abs() < 1e-15);
        assert_eq!(ntrace(&i), c(1.0));
    }

    #[test]
    fn trace_of_product() {
        let a = random_matrix(5, 3);
        let b = random_matrix(5, 4);
        assert!((ntrace_product(&a, &b) - ntrace(&(&a * &b))).norm() < 1e-12);
    }
}
