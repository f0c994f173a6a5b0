use homsurf::expr::{eval, parse, simplify, simplify_with, wirtinger, wirtinger_fd, Assumptions, Binding, Expr, Var};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn at(z: [Complex64; 3]) -> Binding {
    Binding::new().with_point(z)
}

#[test]
fn additive_identity_drops_zero_terms() {
    assert_eq!(parse("z1 + 0*z2").unwrap(), Expr::z(0));
}

#[test]
fn commuting_factors_cancel() {
    assert!(parse("z1*cz1 - cz1*z1").unwrap().is_zero());
}

#[test]
fn exp_log_collapses_only_for_positive_parameters() {
    let e = Expr::param("a").log().exp();
    assert_ne!(simplify(&e), Expr::param("a"));
    let s = simplify_with(&e, &Assumptions::with_positive(["a"]));
    assert_eq!(s, Expr::param("a"));
    for k in 1..=10 {
        let a = 0.37 * k as f64;
        let b = Binding::new().with_param("a", a);
        let lhs = eval(&e, &b).unwrap();
        assert!((lhs - c(a, 0.0)).norm() < 1e-12 * a.max(1.0));
    }
}

#[test]
fn wirtinger_product_rule() {
    let d = wirtinger(&parse("z1*cz1").unwrap(), Var::z(0)).unwrap();
    assert_eq!(d, Expr::cz(0));
}

#[test]
fn holomorphic_expression_has_zero_antiholomorphic_derivative() {
    assert!(wirtinger(&parse("exp(z3)").unwrap(), Var::cz(2)).unwrap().is_zero());
}

#[test]
fn derivative_of_real_power_matches_differences() {
    let e = parse("re(z1)^alpha").unwrap();
    let b = at([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).with_param("alpha", 3.0);
    let sym = eval(&wirtinger(&e, Var::z(0)).unwrap(), &b).unwrap();
    assert!((sym - c(1.5, 0.0)).norm() < 1e-12);
    let fd = wirtinger_fd(&e, &b, Var::z(0)).unwrap();
    assert!((fd - sym).norm() / sym.norm() < 1e-6);
}

#[test]
fn modulus_squared() {
    let v = eval(&parse("z1*cz1").unwrap(), &at([c(3.0, 4.0), c(0.0, 0.0), c(0.0, 0.0)])).unwrap();
    assert!((v - c(25.0, 0.0)).norm() < 1e-12);
}

#[test]
fn log_defining_function_vanishes_at_origin() {
    let v = eval(&parse("log(1 + z1*cz1)").unwrap(), &at([c(0.0, 0.0); 3])).unwrap();
    assert_eq!(v, c(0.0, 0.0));
}

#[test]
fn product_of_real_powers() {
    let e = parse("re(z1)^alpha*re(z2)^beta").unwrap();
    let b = at([c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)]).with_param("alpha", 0.5).with_param("beta", 1.0 / 3.0);
    let v = eval(&e, &b).unwrap();
    // 2^(1/3) from its defining equation x^3 = 2, by bisection
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * mid * mid < 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((v.re - lo).abs() < 1e-14 && v.im.abs() < 1e-15);
}

#[test]
fn conjugation_matches_swapped_binding() {
    let e = parse("exp(z1)*cz2 + i*z3^2 - z1^2*cz1 + alpha*cz3").unwrap();
    let z = [c(0.3, -0.2), c(-0.5, 0.7), c(0.1, 0.4)];
    let w = [c(0.2, 0.1), c(0.6, -0.3), c(-0.4, 0.2)];
    // b binds z and cz independently; the conjugate binding swaps and conjugates them.
    let mut b = at(z).with_param("alpha", 0.7);
    let mut bbar = at(w.map(|x| x.conj())).with_param("alpha", 0.7);
    for j in 0..3 {
        b.override_conj(j, w[j]);
        bbar.override_conj(j, z[j].conj());
    }
    let lhs = eval(&e.conj(), &b).unwrap();
    let rhs = eval(&e, &bbar).unwrap().conj();
    assert!((lhs - rhs).norm() < 1e-12);
    let consistent = at(z).with_param("alpha", 0.7);
    assert!((eval(&e.conj(), &consistent).unwrap() - eval(&e, &consistent).unwrap().conj()).norm() < 1e-12);
}
