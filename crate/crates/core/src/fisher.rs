//! Conjugate systems, free Fisher information and the quantities derived from
//! the perturbation curve `t ↦ Φ*(X₁+√t S₁, …, Xₙ+√t Sₙ)`.

use std::f64::consts::{E, PI};
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::derive;
use crate::error::{Error, Result};
use crate::moments::{
    l2_norm, poly_trace, tensor_trace, OracleDescriptor, PerturbedOracle, SemicircularOracle,
    TraceOracle,
};
use crate::ncpoly::{NcPoly, Scalar, Word};

/// Residual allowed when a computed curve point is cross-checked against the
/// conjugate relations of the perturbed state.
pub const CURVE_RESIDUAL_TOL: f64 = 1e-9;
/// Monomial degree used for that cross-check.
pub const CURVE_CHECK_DEGREE: usize = 4;
/// Quadrature is adaptive on `[0, T]`; beyond `T` the tail model is integrated analytically.
pub const QUADRATURE_CUTOFF: f64 = 1e3;
pub const QUADRATURE_TOL: f64 = 1e-8;
/// The smallest grid point should be at most this for the α estimate.
pub const ALPHA_GRID_FLOOR: f64 = 1e-4;

/// Candidate conjugate variables `(ξ₁, …, ξₙ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugateSystemSpec {
    xi: Vec<NcPoly>,
}

impl ConjugateSystemSpec {
    pub fn new(xi: Vec<NcPoly>) -> Result<Self> {
        let n = xi.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty conjugate system".into()));
        }
        for x in &xi {
            if x.alphabet_size() != n {
                return Err(Error::AlphabetMismatch {
                    left: n,
                    right: x.alphabet_size(),
                });
            }
        }
        Ok(ConjugateSystemSpec { xi })
    }

    /// `ξⱼ = Zⱼ/c`, the conjugate system of `n` free semicirculars of variance `c`.
    pub fn semicircular(n: usize, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidInput(format!("variance {c} must be positive")));
        }
        let inv = Scalar::new(1.0 / c, 0.0);
        Self::new(
            (1..=n)
                .map(|j| NcPoly::var(n, j).map(|z| z.scale(inv)))
                .collect::<Result<_>>()?,
        )
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::new(vec![NcPoly::zero(n); n])
    }

    pub fn alphabet_size(&self) -> usize {
        self.xi.len()
    }

    /// `ξⱼ`, 1-based.
    pub fn xi(&self, j: usize) -> &NcPoly {
        &self.xi[j - 1]
    }

    pub fn components(&self) -> &[NcPoly] {
        &self.xi
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.xi.iter().all(|x| x.is_self_adjoint(tol))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugateResidual {
    pub degree: usize,
    pub monomials_checked: usize,
    /// `max |(τ⊗τ)(∂ⱼP) − τ(ξⱼP)|` over `j` and monomials `P` of degree ≤ `degree`.
    pub max_residual: f64,
    /// Generator index and monomial attaining the maximum.
    pub worst: Option<(usize, Word)>,
    pub oracle: OracleDescriptor,
}

/// Checks `(τ⊗τ)(∂ⱼP) = τ(ξⱼP)` on every monomial of degree ≤ `degree`.
pub fn verify_conjugate_relations(
    xi: &ConjugateSystemSpec,
    oracle: &dyn TraceOracle,
    degree: usize,
) -> Result<ConjugateResidual> {
    let n = xi.alphabet_size();
    if oracle.alphabet_size() != n {
        return Err(Error::AlphabetMismatch {
            left: n,
            right: oracle.alphabet_size(),
        });
    }
    let words = Word::all_up_to(n, degree);
    let one = Scalar::new(1.0, 0.0);
    let mut max_residual = 0.0_f64;
    let mut worst = None;
    for j in 1..=n {
        for w in &words {
            let p = NcPoly::monomial(n, w.clone(), one)?;
            let lhs = tensor_trace(oracle, &derive(j, &p)?)?;
            let rhs = poly_trace(oracle, &xi.xi(j).checked_mul(&p)?)?;
            let r = (lhs - rhs).norm();
            if r > max_residual || worst.is_none() {
                max_residual = max_residual.max(r);
                worst = Some((j, w.clone()));
            }
        }
    }
    Ok(ConjugateResidual {
        degree,
        monomials_checked: n * words.len(),
        max_residual,
        worst,
        oracle: oracle.descriptor(),
    })
}

/// `Φ* = Σⱼ ‖ξⱼ‖₂²`.
pub fn fisher_information(xi: &ConjugateSystemSpec, oracle: &dyn TraceOracle) -> Result<f64> {
    xi.components()
        .iter()
        .map(|x| l2_norm(oracle, x).map(|v| v * v))
        .sum()
}

/// Closed form the curve follows beyond its grid, if any.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveModel {
    /// Free semicirculars of variance `c`: `Φ*(Xᵗ) = n/(c+t)`.
    Semicircular { variance: f64 },
    /// Values only at the grid points.
    Tabulated,
}

impl CurveModel {
    fn value(&self, n: usize, t: f64) -> Option<f64> {
        match self {
            CurveModel::Semicircular { variance } => Some(n as f64 / (variance + t)),
            CurveModel::Tabulated => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FisherCurve {
    pub n: usize,
    /// `C² = τ(X₁² + … + Xₙ²)`.
    pub c2: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub model: CurveModel,
}

impl FisherCurve {
    pub fn new(n: usize, c2: f64, grid: Vec<f64>, values: Vec<f64>, model: CurveModel) -> Result<Self> {
        if n == 0 || !(c2.is_finite() && c2 > 0.0) {
            return Err(Error::InvalidInput("need n ≥ 1 and C² > 0".into()));
        }
        if grid.is_empty() || grid.len() != values.len() {
            return Err(Error::InvalidInput("grid and values must be nonempty and of equal length".into()));
        }
        if grid[0] <= 0.0 || grid.windows(2).any(|w| w[0].is_nan() || w[0] >= w[1]) || grid.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("grid must be positive and strictly increasing".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput("curve values must be positive".into()));
        }
        Ok(FisherCurve { n, c2, grid, values, model })
    }

    pub fn lower_bound(&self, t: f64) -> f64 {
        let n = self.n as f64;
        n * n / (self.c2 + n * t)
    }

    pub fn upper_bound(&self, t: f64) -> f64 {
        self.n as f64 / t
    }

    /// CSV with columns `t,phi_star,lower_bound,upper_bound`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,phi_star,lower_bound,upper_bound\n");
        for (&t, &v) in self.grid.iter().zip(&self.values) {
            let _ = writeln!(out, "{t:e},{v:e},{:e},{:e}", self.lower_bound(t), self.upper_bound(t));
        }
        out
    }
}

/// `k` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, k: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && k >= 2) {
        return Err(Error::InvalidInput(format!("bad grid [{lo}, {hi}] with {k} points")));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..k)
        .map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp())
        .collect();
    g[0] = lo;
    g[k - 1] = hi;
    Ok(g)
}

/// `Φ*(Xᵗ)` for `n` free semicirculars of variance `c`, computed from the
/// perturbed state with `ξⱼᵗ = Zⱼ/(c+t)`, each point cross-checked against the
/// conjugate relations.
pub fn fisher_curve_semicircular(c: f64, n: usize, grid: &[f64]) -> Result<FisherCurve> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    let base: Arc<dyn TraceOracle> = Arc::new(SemicircularOracle::uniform(n, c)?);
    let values = grid
        .par_iter()
        .map(|&t| {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidInput(format!("grid point {t} must be positive")));
            }
            let oracle = PerturbedOracle::new(Arc::clone(&base), t)?;
            let xi = ConjugateSystemSpec::semicircular(n, c + t)?;
            let res = verify_conjugate_relations(&xi, &oracle, CURVE_CHECK_DEGREE)?;
            if res.max_residual >= CURVE_RESIDUAL_TOL {
                return Err(Error::Consistency(format!(
                    "conjugate residual {:.3e} at t = {t}",
                    res.max_residual
                )));
            }
            fisher_information(&xi, &oracle)
        })
        .collect::<Result<Vec<_>>>()?;
    FisherCurve::new(
        n,
        n as f64 * c,
        grid.to_vec(),
        values,
        CurveModel::Semicircular { variance: c },
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FisherBoundPoint {
    pub t: f64,
    pub value: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FisherBoundsReport {
    pub points: Vec<FisherBoundPoint>,
    pub pass: bool,
    /// Relative slack allowed on either side for round-off.
    pub rel_tol: f64,
}

impl FisherBoundsReport {
    pub fn max_lower_gap(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.lower_margin.abs() / p.lower_bound.max(1.0))
            .fold(0.0, f64::max)
    }

    pub fn upper_strict(&self) -> bool {
        self.points.iter().all(|p| p.upper_margin > 0.0)
    }

    pub fn into_result(self) -> Result<Self> {
        if self.pass {
            Ok(self)
        } else {
            let bad = self.points.iter().find(|p| !p.pass).expect("some point failed");
            Err(Error::Invariant(format!(
                "Φ*({:e}) = {:e} outside [{:e}, {:e}]",
                bad.t, bad.value, bad.lower_bound, bad.upper_bound
            )))
        }
    }
}

/// Checks `n²/(C²+nt) ≤ Φ*(Xᵗ) ≤ n/t` at every grid point.
pub fn check_fisher_bounds(curve: &FisherCurve) -> FisherBoundsReport {
    let rel_tol = 1e-12;
    let points: Vec<_> = curve
        .grid
        .iter()
        .zip(&curve.values)
        .map(|(&t, &value)| {
            let lower_bound = curve.lower_bound(t);
            let upper_bound = curve.upper_bound(t);
            let lower_margin = value - lower_bound;
            let upper_margin = upper_bound - value;
            let pass = lower_margin >= -rel_tol * lower_bound.max(1.0)
                && upper_margin >= -rel_tol * upper_bound.max(1.0);
            FisherBoundPoint {
                t,
                value,
                lower_bound,
                upper_bound,
                lower_margin,
                upper_margin,
                pass,
            }
        })
        .collect();
    let pass = points.iter().all(|p| p.pass);
    FisherBoundsReport { points, pass, rel_tol }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiStar {
    pub value: f64,
    /// `½∫₀^T (n/(1+t) − Φ*) dt`, by adaptive Simpson.
    pub integral: f64,
    /// `½∫_T^∞`, from the tail model.
    pub tail: f64,
    pub cutoff: f64,
    pub tolerance: f64,
    /// `(n/2) log(2πe n⁻¹ C²)`.
    pub upper_bound: f64,
}

fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, fa, m, fm, flm);
    let right = simpson(m, fm, b, fb, frm);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature(format!("no convergence on [{a:e}, {b:e}]")));
    }
    Ok(adaptive(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)?
        + adaptive(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)?)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (fa, fb, fm) = (f(a), f(b), f(m));
    let whole = simpson(a, fa, b, fb, fm);
    adaptive(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// `χ* = ½∫₀^∞ (n/(1+t) − Φ*(Xᵗ)) dt + (n/2) log(2πe)`.
///
/// Needs a declared model for the continuation off the grid; the tabulated
/// values are checked against it first.
pub fn chi_star(curve: &FisherCurve) -> Result<ChiStar> {
    let n = curve.n;
    let nf = n as f64;
    let model = curve.model.clone();
    if model.value(n, 1.0).is_none() {
        return Err(Error::NotComputable(
            "χ* needs a curve model for the continuation beyond the grid".into(),
        ));
    }
    let phi = |t: f64| model.value(n, t).expect("model checked above");
    for (&t, &v) in curve.grid.iter().zip(&curve.values) {
        let m = phi(t);
        if (v - m).abs() > 1e-10 * m.max(1.0) {
            return Err(Error::Consistency(format!(
                "tabulated Φ*({t:e}) = {v:e} disagrees with the model value {m:e}"
            )));
        }
    }
    let integrand = |t: f64| nf / (1.0 + t) - phi(t);
    let integral = 0.5 * integrate(&integrand, 0.0, QUADRATURE_CUTOFF, QUADRATURE_TOL)?;
    let tail = match curve.model {
        CurveModel::Semicircular { variance } => {
            0.5 * nf * ((variance + QUADRATURE_CUTOFF) / (1.0 + QUADRATURE_CUTOFF)).ln()
        }
        CurveModel::Tabulated => unreachable!(),
    };
    let constant = 0.5 * nf * (2.0 * PI * E).ln();
    Ok(ChiStar {
        value: integral + tail + constant,
        integral,
        tail,
        cutoff: QUADRATURE_CUTOFF,
        tolerance: QUADRATURE_TOL,
        upper_bound: 0.5 * nf * (2.0 * PI * E * curve.c2 / nf).ln(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    /// `min t·Φ*(Xᵗ)` over the smallest grid decade.
    pub alpha: f64,
    /// `n − α`.
    pub delta_hat: f64,
    pub grid_floor: f64,
    pub decade: (f64, f64),
    pub points_used: usize,
    pub warning: Option<String>,
}

/// Estimates `α = liminf_{t↘0} t·Φ*(Xᵗ)` and `δ̂* = n − α`.
pub fn alpha_delta_hat(curve: &FisherCurve) -> AlphaEstimate {
    let floor = curve.grid[0];
    let top = 10.0 * floor;
    let used: Vec<f64> = curve
        .grid
        .iter()
        .zip(&curve.values)
        .filter(|(&t, _)| t <= top)
        .map(|(&t, &v)| t * v)
        .collect();
    let alpha = used.iter().copied().fold(f64::INFINITY, f64::min);
    let warning = (floor > ALPHA_GRID_FLOOR).then(|| {
        format!("grid floor {floor:e} is above {ALPHA_GRID_FLOOR:e}; α is a coarse estimate")
    });
    AlphaEstimate {
        alpha,
        delta_hat: curve.n as f64 - alpha,
        grid_floor: floor,
        decade: (floor, top),
        points_used: used.len(),
        warning,
    }
}

pub const FISHER_SUMMARY_SCHEMA: &str = "ncfree.fisher_summary.v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FisherSummary {
    pub schema: String,
    pub n: usize,
    #[serde(rename = "C2")]
    pub c2: f64,
    pub alpha: f64,
    pub delta_hat: f64,
    pub chi_star: Option<f64>,
    pub grid: Vec<f64>,
    pub model: CurveModel,
    pub warning: Option<String>,
}

impl FisherSummary {
    pub fn from_curve(curve: &FisherCurve) -> Result<Self> {
        let a = alpha_delta_hat(curve);
        let chi = match chi_star(curve) {
            Ok(c) => Some(c.value),
            Err(Error::NotComputable(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(FisherSummary {
            schema: FISHER_SUMMARY_SCHEMA.into(),
            n: curve.n,
            c2: curve.c2,
            alpha: a.alpha,
            delta_hat: a.delta_hat,
            chi_star: chi,
            grid: curve.grid.clone(),
            model: curve.model.clone(),
            warning: a.warning,
        })
    }
}
