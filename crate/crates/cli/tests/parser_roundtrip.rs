use ncfree_cli::parse_poly;
use ncfree_core::{NcPoly, Scalar, Word};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Coefficients on the lattice ½ℤ[i] with parts in [-3, 3].
fn lattice(rng: &mut ChaCha8Rng) -> Scalar {
    let part = |rng: &mut ChaCha8Rng| rng.random_range(-6i32..=6) as f64 / 2.0;
    loop {
        let c = Scalar::new(part(rng), if rng.random_bool(0.5) { part(rng) } else { 0.0 });
        if c.norm() > 0.0 {
            return c;
        }
    }
}

fn random_poly(rng: &mut ChaCha8Rng) -> NcPoly {
    let n = rng.random_range(1..=4);
    let k = rng.random_range(0..=6);
    let terms: Vec<_> = (0..k)
        .map(|_| {
            let len = rng.random_range(0..=6);
            let w = Word::new((0..len).map(|_| rng.random_range(1..=n as u32) as _).collect());
            (w, lattice(rng))
        })
        .collect();
    NcPoly::from_terms(n, terms).unwrap()
}

#[test]
fn print_then_parse_is_identity_on_1000_polynomials() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let p = random_poly(&mut rng);
        let text = p.to_string();
        let back = parse_poly(&text, Some(p.alphabet_size()))
            .unwrap_or_else(|e| panic!("{text:?}: {e}"))
            .poly;
        assert_eq!(back, p, "{text}");
    }
}

#[test]
fn adjoint_and_power_agree_with_the_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let p = random_poly(&mut rng);
        let n = p.alphabet_size();
        let adj = parse_poly(&format!("({p})'"), Some(n)).unwrap().poly;
        assert_eq!(adj, p.adjoint());
        let sq = parse_poly(&format!("({p})^2"), Some(n)).unwrap().poly;
        assert_eq!(sq, &p * &p);
    }
}

#[test]
fn inferred_alphabet_is_the_largest_index() {
    assert_eq!(parse_poly("x3 + 1", None).unwrap().alphabet_size, 3);
    assert_eq!(parse_poly("2", None).unwrap().alphabet_size, 1);
    assert!(parse_poly("x5", Some(4)).is_err());
}
