//! One function per subcommand. JSON goes to `--out` or stdout; multi-file
//! commands treat `--out` as a directory.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ncfree_core::analysis::{atom_scan, extract_leading, inequality_sweep, zero_divisor_probe, InequalityFamily, Sampler};
use ncfree_core::calculus::{adjoint_derivative, delta, derivation_from_values, derive, DerivationValues};
use ncfree_core::fisher::{
    alpha_delta_hat, check_fisher_bounds, chi_star, fisher_curve_semicircular, fisher_information,
    verify_conjugate_relations, ConjugateSystemSpec, FisherSummary,
};
use ncfree_core::moments::{inner, poly_trace, tensor_inner};
use ncfree_core::random::{random_poly, random_tensor, PolyShape};
use ncfree_core::{NcPoly, SemicircularOracle, TraceOracle, Word};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Family, RunConfig};
use crate::parser::parse_poly;
use crate::{CliError, Command};

pub const DERIVE_SCHEMA: &str = "ncfree.derivative.v1";
pub const MOMENTS_SCHEMA: &str = "ncfree.moments.v1";
pub const CONJUGATE_SCHEMA: &str = "ncfree.conjugate_check.v1";
pub const FISHER_BOUNDS_SCHEMA: &str = "ncfree.fisher_bounds.v1";
pub const ENTROPY_SCHEMA: &str = "ncfree.entropy.v1";
pub const LEADING_SCHEMA: &str = "ncfree.extract_leading.v1";
pub const PROBE_SCHEMA: &str = "ncfree.probe.v1";
pub const VERIFY_SCHEMA: &str = "ncfree.verify.v1";

pub fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<(), CliError> {
    match cmd {
        Command::Derive { expr, n, j } => derive_cmd(expr, *n, *j, cfg),
        Command::Moments { exprs, n } => moments_cmd(exprs, *n, cfg),
        Command::ConjugateCheck { n, xi } => conjugate_cmd(*n, xi, cfg),
        Command::FisherCurve { n } => fisher_curve_cmd(*n, cfg),
        Command::Entropy { n } => entropy_cmd(*n, cfg),
        Command::ExtractLeading { expr, n } => leading_cmd(expr, *n, cfg),
        Command::Probe { expr, n } => probe_cmd(expr, *n, cfg),
        Command::Atoms { poly, n } => atoms_cmd(poly, *n, cfg),
        Command::Verify { n, cases } => verify_cmd(*n, *cases, cfg),
    }
}

fn tagged<T: Serialize>(schema: &str, body: &T) -> Result<Value, CliError> {
    let mut v = serde_json::to_value(body).map_err(|e| CliError::Usage(e.to_string()))?;
    match v.as_object_mut() {
        Some(m) => {
            m.insert("schema".into(), schema.into());
            Ok(v)
        }
        None => Ok(json!({ "schema": schema, "value": v })),
    }
}

fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values always serialize");
    s.push('\n');
    s
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// To `--out` if set, else stdout.
fn emit(v: &Value, cfg: &RunConfig) -> Result<(), CliError> {
    let text = render(v);
    match &cfg.out {
        Some(p) => write_file(p, &text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            })
        }
    }
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    Ok(dir)
}

fn derive_cmd(expr: &str, n: Option<usize>, j: Option<usize>, cfg: &RunConfig) -> Result<(), CliError> {
    let p = parse_poly(expr, n)?;
    let js: Vec<usize> = match j {
        Some(j) => vec![j],
        None => (1..=p.alphabet_size).collect(),
    };
    let derivatives = js
        .into_iter()
        .map(|j| {
            let t = derive(j, &p.poly)?;
            Ok(json!({ "j": j, "text": t.to_string(), "tensor": t }))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    emit(
        &json!({
            "schema": DERIVE_SCHEMA,
            "poly": p.poly.to_string(),
            "n": p.alphabet_size,
            "derivatives": derivatives,
        }),
        cfg,
    )
}

fn moments_cmd(exprs: &[String], n: usize, cfg: &RunConfig) -> Result<(), CliError> {
    let n = exprs
        .iter()
        .map(|e| parse_poly(e, None).map(|p| p.alphabet_size))
        .try_fold(n, |acc, k| k.map(|k| acc.max(k)))?;
    let oracle = cfg.oracle(n)?;
    let rows = if exprs.is_empty() {
        Word::all_up_to(n, cfg.degree)
            .iter()
            .map(|w| {
                let m = oracle.moment(w)?;
                Ok(json!({ "word": w.to_string(), "re": m.re, "im": m.im }))
            })
            .collect::<Result<Vec<_>, CliError>>()?
    } else {
        exprs
            .iter()
            .map(|e| {
                let p = parse_poly(e, Some(n))?;
                let m = poly_trace(oracle.as_ref(), &p.poly)?;
                Ok(json!({ "poly": p.poly.to_string(), "re": m.re, "im": m.im }))
            })
            .collect::<Result<Vec<_>, CliError>>()?
    };
    emit(
        &json!({ "schema": MOMENTS_SCHEMA, "oracle": oracle.descriptor(), "moments": rows }),
        cfg,
    )
}

fn conjugate_cmd(n: usize, xi: &[String], cfg: &RunConfig) -> Result<(), CliError> {
    let system = if xi.is_empty() {
        ConjugateSystemSpec::semicircular(n, cfg.variance)?
    } else {
        let n = xi.len();
        ConjugateSystemSpec::new(
            xi.iter()
                .map(|e| parse_poly(e, Some(n)).map(|p| p.poly))
                .collect::<Result<_, _>>()?,
        )?
    };
    let n = system.alphabet_size();
    let oracle = cfg.oracle(n)?;
    let residual = verify_conjugate_relations(&system, oracle.as_ref(), cfg.degree)?;
    let pass = residual.max_residual <= cfg.tolerance;
    let mut v = tagged(CONJUGATE_SCHEMA, &residual)?;
    v["xi"] = system.components().iter().map(|p| p.to_string()).collect();
    v["fisher_information"] = fisher_information(&system, oracle.as_ref())?.into();
    v["tolerance"] = cfg.tolerance.into();
    v["pass"] = pass.into();
    emit(&v, cfg)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "conjugate residual {:e} exceeds {:e}",
            residual.max_residual, cfg.tolerance
        )))
    }
}

fn semicircular_only(cfg: &RunConfig, what: &str) -> Result<(), CliError> {
    if cfg.family == Family::Semicircular {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{what} is available for the semicircular family only")))
    }
}

fn fisher_curve_cmd(n: usize, cfg: &RunConfig) -> Result<(), CliError> {
    semicircular_only(cfg, "fisher-curve")?;
    let curve = fisher_curve_semicircular(cfg.variance, n, &cfg.t_grid)?;
    let bounds = check_fisher_bounds(&curve);
    let summary = FisherSummary::from_curve(&curve)?;
    let dir = out_dir(cfg)?;
    write_file(&dir.join("fisher_curve.csv"), &curve.to_csv())?;
    let summary_json = render(&serde_json::to_value(&summary).expect("serializable"));
    write_file(&dir.join("fisher_summary.json"), &summary_json)?;
    let mut b = tagged(FISHER_BOUNDS_SCHEMA, &bounds)?;
    b["max_lower_gap"] = bounds.max_lower_gap().into();
    b["upper_strict"] = bounds.upper_strict().into();
    write_file(&dir.join("fisher_bounds.json"), &render(&b))?;
    print!("{summary_json}");
    bounds.into_result()?;
    Ok(())
}

fn entropy_cmd(n: usize, cfg: &RunConfig) -> Result<(), CliError> {
    semicircular_only(cfg, "entropy")?;
    let c = cfg.variance;
    let curve = fisher_curve_semicircular(c, n, &cfg.t_grid)?;
    let chi = chi_star(&curve)?;
    let alpha = alpha_delta_hat(&curve);
    let closed_form = 0.5 * n as f64 * (2.0 * std::f64::consts::PI * std::f64::consts::E * c).ln();
    let respected = chi.value <= chi.upper_bound + chi.tolerance;
    emit(
        &json!({
            "schema": ENTROPY_SCHEMA,
            "n": n,
            "variance": c,
            "chi_star": chi,
            "closed_form": closed_form,
            "upper_bound_respected": respected,
            "alpha": alpha,
        }),
        cfg,
    )?;
    if respected {
        Ok(())
    } else {
        Err(CliError::Check(format!("χ* = {} exceeds its upper bound {}", chi.value, chi.upper_bound)))
    }
}

fn leading_cmd(expr: &str, n: Option<usize>, cfg: &RunConfig) -> Result<(), CliError> {
    let p = parse_poly(expr, n)?;
    let oracle = cfg.oracle(p.alphabet_size)?;
    let ex = extract_leading(&p.poly, oracle.as_ref())?;
    let mut v = tagged(LEADING_SCHEMA, &ex)?;
    v["poly"] = p.poly.to_string().into();
    v["oracle"] = serde_json::to_value(oracle.descriptor()).expect("serializable");
    emit(&v, cfg)?;
    if ex.exact {
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "extracted {} but the coefficient of {} is {}",
            ex.extracted, ex.word, ex.coefficient
        )))
    }
}

fn probe_cmd(expr: &str, n: Option<usize>, cfg: &RunConfig) -> Result<(), CliError> {
    let p = parse_poly(expr, n)?;
    let m = cfg.tuple(p.alphabet_size, cfg.dims[0])?;
    let report = zero_divisor_probe(&p.poly, &m, cfg.tolerance)?;
    let mut v = tagged(PROBE_SCHEMA, &report)?;
    v["poly"] = p.poly.to_string().into();
    v["oracle"] = serde_json::to_value(m.descriptor()).expect("serializable");
    emit(&v, cfg)
}

fn atoms_cmd(poly: &str, n: Option<usize>, cfg: &RunConfig) -> Result<(), CliError> {
    let p = parse_poly(poly, n)?;
    let sampler = match cfg.family {
        Family::Semicircular | Family::Gue => Sampler::Gue { seed: cfg.seed },
        Family::Bernoulli => Sampler::Bernoulli,
        Family::Degenerate => return Err(CliError::Usage("atoms samples from gue or bernoulli".into())),
    };
    let scan = atom_scan(&p.poly, sampler, &cfg.dims, cfg.h)?;
    let dir = out_dir(cfg)?;
    for h in &scan.histograms {
        write_file(&dir.join(format!("hist_N{}.csv", h.dim)), &h.to_csv())?;
    }
    let trend = render(&serde_json::to_value(&scan.trend).expect("serializable"));
    write_file(&dir.join("atom_trend.json"), &trend)?;
    print!("{trend}");
    Ok(())
}

#[derive(Serialize)]
struct IdentityTally {
    cases: usize,
    checks: usize,
    failures: Vec<String>,
}

/// Exact identities on random integer polynomials against the free semicircular state.
fn identity_suite(n: usize, cases: usize, seed: u64, degree: usize) -> Result<IdentityTally, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = SemicircularOracle::standard(n);
    let mut tally = IdentityTally {
        cases,
        checks: 0,
        failures: Vec::new(),
    };
    let mut check = |name: &str, case: usize, ok: bool| {
        tally.checks += 1;
        if !ok {
            tally.failures.push(format!("{name} (case {case})"));
        }
    };
    let shape = PolyShape::new(n, degree.min(5));
    for case in 0..cases {
        let p = random_poly(&mut rng, &shape);
        let q = random_poly(&mut rng, &shape);
        let y = random_tensor(&mut rng, &PolyShape::new(n, 2).terms(3));
        let pq = p.checked_mul(&q)?;
        for j in 1..=n {
            let dp = derive(j, &p)?;
            let leibniz = dp.right_mul(&q)?.checked_add(&derive(j, &q)?.left_mul(&p)?)?;
            check("leibniz", case, derive(j, &pq)? == leibniz);
            check("flip_adjoint", case, dp.adjoint().flip() == derive(j, &p.adjoint())?);
            let coord = DerivationValues::coordinate(n, j)?;
            check("reconstruction", case, derivation_from_values(&coord, &p)? == dp);
            let xi = NcPoly::var(n, j)?;
            let lhs = tensor_inner(&s, &dp, &y)?;
            let rhs = inner(&s, &p, &adjoint_derivative(j, &y, &xi, &s)?)?;
            check("duality", case, lhs == rhs);
            if let (Some(d0), Some(d1)) = (p.degree(), delta(j, &p, &s)?.degree()) {
                check("delta_degree", case, d1 < d0);
            }
        }
    }
    Ok(tally)
}

fn verify_cmd(n: usize, cases: usize, cfg: &RunConfig) -> Result<(), CliError> {
    let identities = identity_suite(n, cases, cfg.seed, cfg.degree)?;
    let seeds: Vec<u64> = (0..cfg.seeds as u64).map(|k| cfg.seed + k).collect();
    let dim = cfg.dims[0];
    let mut sweeps = Vec::new();
    let mut failures = identities.failures.len();
    for family in [InequalityFamily::Dabrowski, InequalityFamily::KeyEstimates, InequalityFamily::FisherBound] {
        let r = inequality_sweep(family, n, dim, &seeds)?;
        failures += r.failures();
        let failed: Vec<Value> = r
            .instances
            .iter()
            .flat_map(|i| i.reports.iter().filter(|r| !r.pass).map(move |r| json!({ "seed": i.seed, "report": r })))
            .collect();
        sweeps.push(json!({
            "family": family,
            "n": r.n,
            "dim": r.dim,
            "tolerance": r.tolerance,
            "seeds": seeds.len(),
            "checks": r.checks(),
            "failures": failed,
            "worst_relative_margin": r.worst_relative_margin(),
        }));
    }
    emit(
        &json!({
            "schema": VERIFY_SCHEMA,
            "identities": identities,
            "sweeps": sweeps,
            "pass": failures == 0,
        }),
        cfg,
    )?;
    if failures == 0 {
        Ok(())
    } else {
        Err(CliError::Check(format!("{failures} identity or inequality checks failed")))
    }
}
