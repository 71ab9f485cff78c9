use abspec_core::quad::*;

fn fact(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Normalized integral of l0^a l1^b l2^c over a triangle.
fn monomial(a: u32, b: u32, c: u32) -> f64 {
    2.0 * fact(a) * fact(b) * fact(c) / fact(a + b + c + 2)
}

fn apply(rule: &TriRule, f: impl Fn([f64; 3]) -> f64) -> f64 {
    rule.points.iter().map(|&(l, w)| w * f(l)).sum()
}

#[test]
fn gauss_legendre_integrates_polynomials() {
    for n in 1..=8 {
        let (x, w) = gauss_legendre(n);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        for k in 0..2 * n {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
            assert!((s - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "n {n} k {k}");
        }
    }
}

#[test]
fn conical_rules_are_exact_to_degree() {
    for degree in [1, 2, 4, 6, 8] {
        let rule = TriRule::conical(degree);
        for a in 0..=degree as u32 {
            for b in 0..=degree as u32 - a {
                for c in 0..=degree as u32 - a - b {
                    let got = apply(&rule, |l| l[0].powi(a as i32) * l[1].powi(b as i32) * l[2].powi(c as i32));
                    assert!((got - monomial(a, b, c)).abs() < 1e-14, "degree {degree}: {a} {b} {c}");
                }
            }
        }
    }
}

#[test]
fn rotation_and_grading_keep_exactness() {
    let base = TriRule::graded(6, 5);
    for k in 0..3 {
        let rule = base.rotated(k);
        for (a, b, c) in [(0, 0, 0), (3, 1, 2), (0, 6, 0), (2, 2, 2), (1, 0, 4)] {
            let got = apply(&rule, |l| l[0].powi(a) * l[1].powi(b) * l[2].powi(c));
            assert!((got - monomial(a as u32, b as u32, c as u32)).abs() < 1e-13);
        }
    }
    let r = rules();
    assert!((r.regular.points.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() < 1e-14);
    assert_eq!(rule_for_order(4).points.len(), r.regular.points.len());
}

#[test]
fn graded_rule_resolves_vertex_singularity() {
    // (1 - l0)^s integrates to 2 / (s + 2).
    for s in [-0.6, -0.4, 0.3, 0.7] {
        let want = 2.0 / (s + 2.0);
        let graded = apply(&TriRule::graded(6, 6), |l| (1.0 - l[0]).powf(s));
        let plain = apply(&TriRule::conical(6), |l| (1.0 - l[0]).powf(s));
        assert!((graded - want).abs() < 1e-4 * want, "s {s}: {graded} vs {want}");
        if s < 0.0 {
            assert!((graded - want).abs() < 0.1 * (plain - want).abs());
        }
    }
    let rotated = apply(&TriRule::graded(6, 6).rotated(2), |l| (1.0 - l[2]).powf(-0.4));
    assert!((rotated - 2.0 / 1.6).abs() < 1e-4);
}
