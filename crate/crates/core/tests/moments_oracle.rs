//! Moments and cumulants against brute-force enumeration of non-crossing partitions.

use std::collections::HashMap;

use ncfree_core::moments::{
    bernoulli_tuple, check_oracle_axioms, free_cumulants, gram_matrix, mixed_moment, perturbed_moment,
    semicircular_moment, FamilyLabel, LetterFamily, PerturbedOracle,
};
use ncfree_core::{Letter, Scalar, SemicircularOracle, TraceOracle, Word};
use std::sync::Arc;

/// All set partitions of `0..k` as block lists, by restricted growth strings.
fn set_partitions(k: usize) -> Vec<Vec<Vec<usize>>> {
    fn rec(i: usize, k: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == k {
            out.push(cur.clone());
            return;
        }
        for b in 0..cur.len() {
            cur[b].push(i);
            rec(i + 1, k, cur, out);
            cur[b].pop();
        }
        cur.push(vec![i]);
        rec(i + 1, k, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    rec(0, k, &mut Vec::new(), &mut out);
    out
}

fn crossing(p: &[Vec<usize>]) -> bool {
    for (x, a) in p.iter().enumerate() {
        for b in &p[x + 1..] {
            for &i in a {
                for &j in a {
                    for &k in b {
                        for &l in b {
                            if i < k && k < j && j < l {
                                return true;
                            }
                        }
                    }
                }
            }
        }
    }
    false
}

fn nc_partitions(k: usize) -> Vec<Vec<Vec<usize>>> {
    set_partitions(k).into_iter().filter(|p| !crossing(p)).collect()
}

/// Moment of a word whose letters carry cumulant sequences, free across families:
/// `Σ_{π∈NC(k)}` over partitions whose blocks stay inside one family.
fn moment_from_cumulants(letters: &[Letter], family: &dyn Fn(Letter) -> usize, kappa: &dyn Fn(usize, usize) -> f64) -> f64 {
    nc_partitions(letters.len())
        .iter()
        .map(|p| {
            p.iter()
                .map(|b| {
                    let f = family(letters[b[0]]);
                    if b.iter().all(|&i| family(letters[i]) == f) {
                        kappa(f, b.len())
                    } else {
                        0.0
                    }
                })
                .product::<f64>()
        })
        .sum()
}

fn catalan(k: usize) -> u64 {
    (0..k).fold(1u64, |c, i| c * 2 * (2 * i as u64 + 1) / (i as u64 + 2))
}

#[test]
fn nc_counts_are_catalan() {
    for k in 0..=8 {
        assert_eq!(nc_partitions(k).len() as u64, catalan(k));
    }
}

#[test]
fn semicircular_moments_match_pair_partitions() {
    let vars = [1.0, 4.0];
    let family = |l: Letter| l as usize - 1;
    let kappa = |f: usize, s: usize| if s == 2 { vars[f] } else { 0.0 };
    for len in 0..=8 {
        for w in Word::all_of_length(2, len) {
            let expected = moment_from_cumulants(w.letters(), &family, &kappa);
            assert_eq!(semicircular_moment(&w, &vars).unwrap(), Scalar::new(expected, 0.0), "{w}");
        }
    }
}

#[test]
fn cumulants_by_moment_cumulant_inversion() {
    // κ_k = m_k − Σ_{π ≠ 1_k} Π κ_|V|, solved upward from the moments.
    fn invert(m: &[f64]) -> Vec<f64> {
        let mut kappa = vec![0.0; m.len()];
        for k in 1..m.len() {
            let rest: f64 = nc_partitions(k)
                .iter()
                .filter(|p| p.len() > 1)
                .map(|p| p.iter().map(|b| kappa[b.len()]).product::<f64>())
                .sum();
            kappa[k] = m[k] - rest;
        }
        kappa
    }
    let b = bernoulli_tuple(1, 2).unwrap();
    let moments: Vec<f64> = (0..=8)
        .map(|k| b.moment(&Word::new(vec![1; k])).unwrap().re)
        .collect();
    let expected = invert(&moments);
    let table = free_cumulants(&b, &[1], 8).unwrap();
    for (k, e) in expected.iter().enumerate().skip(1) {
        let got = table.get(&Word::new(vec![1; k])).unwrap();
        assert!((got.re - e).abs() < 1e-12, "κ_{k}: {got} vs {e}");
    }
    assert_eq!((expected[2], expected[4]), (1.0, -1.0));

    let s = SemicircularOracle::standard(1);
    let table = free_cumulants(&s, &[1], 8).unwrap();
    for k in 1..=8 {
        let want = if k == 2 { 1.0 } else { 0.0 };
        assert_eq!(table.get(&Word::new(vec![1; k])).unwrap(), Scalar::new(want, 0.0));
    }
}

#[test]
fn mixed_moments_of_bernoulli_and_semicircular() {
    // Letter 1: symmetric Bernoulli (κ₂ = 1, κ₄ = −1, κ₆ = 4, …); letter 2: semicircular of variance 2.
    let b: Arc<dyn TraceOracle> = Arc::new(bernoulli_tuple(1, 2).unwrap());
    let labels = FamilyLabel::new(vec![
        LetterFamily::Base { index: 1 },
        LetterFamily::Semicircular { variance: 2.0 },
    ])
    .unwrap();
    let bern_moments: Vec<f64> = (0..=8).map(|k| if k % 2 == 0 { 1.0 } else { 0.0 }).collect();
    let mut bern_kappa = [0.0; 9];
    for k in 1..=8 {
        let rest: f64 = nc_partitions(k)
            .iter()
            .filter(|p| p.len() > 1)
            .map(|p| p.iter().map(|blk| bern_kappa[blk.len()]).product::<f64>())
            .sum();
        bern_kappa[k] = bern_moments[k] - rest;
    }
    let family = |l: Letter| l as usize;
    let kappa = |f: usize, s: usize| match f {
        1 => bern_kappa[s],
        _ => {
            if s == 2 {
                2.0
            } else {
                0.0
            }
        }
    };
    let mut memo = HashMap::new();
    for len in 0..=7 {
        for w in Word::all_of_length(2, len) {
            let expected = *memo
                .entry(w.clone())
                .or_insert_with(|| moment_from_cumulants(w.letters(), &family, &kappa));
            let got = mixed_moment(&w, &labels, b.as_ref()).unwrap();
            assert!((got.re - expected).abs() < 1e-9 && got.im == 0.0, "{w}: {got} vs {expected}");
        }
    }
}

#[test]
fn perturbation_adds_variance() {
    let base = SemicircularOracle::uniform(2, 1.5).unwrap();
    let t = 0.25;
    for len in 0..=8 {
        for w in Word::all_of_length(2, len) {
            let got = perturbed_moment(&w, &base, t).unwrap();
            let want = semicircular_moment(&w, &[1.75, 1.75]).unwrap();
            assert!((got - want).norm() < 1e-12 * want.norm().max(1.0), "{w}");
        }
    }
}

#[test]
fn oracle_axioms_and_positivity() {
    let base: Arc<dyn TraceOracle> = Arc::new(SemicircularOracle::standard(2));
    let oracles: Vec<Box<dyn TraceOracle>> = vec![
        Box::new(SemicircularOracle::uniform(2, 3.0).unwrap()),
        Box::new(PerturbedOracle::new(base, 0.5).unwrap()),
        Box::new(ncfree_core::moments::sample_gue(2, 30, 4)),
        Box::new(bernoulli_tuple(2, 6).unwrap()),
    ];
    for o in &oracles {
        assert!(check_oracle_axioms(o.as_ref(), 6).unwrap().max_error() < 1e-10);
        let g = gram_matrix(o.as_ref(), 2).unwrap();
        let ev = ncfree_core::linalg::hermitian_eigenvalues(&g);
        assert!(ev[0] >= -1e-9, "{:?}: {}", o.descriptor(), ev[0]);
    }
}

#[test]
fn gue_moments_approach_catalan() {
    let words = [Word::new(vec![1, 1]), Word::new(vec![1, 1, 1, 1]), Word::new(vec![1, 2, 1, 2]), Word::new(vec![1, 1, 2, 2])];
    for &dim in &[100usize, 200, 400] {
        let g = ncfree_core::moments::sample_gue(2, dim, 21);
        for w in &words {
            let want = semicircular_moment(w, &[1.0, 1.0]).unwrap();
            let err = (g.moment(w).unwrap() - want).norm();
            assert!(err <= 10.0 / (dim as f64).sqrt(), "{w} at N={dim}: {err}");
        }
    }
}
