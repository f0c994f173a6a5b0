use homsurf::catalog::{bindings, Catalog};
use homsurf::expr::{eval, wirtinger, wirtinger_fd, Binding, Expr, Var};
use homsurf::surface::{stream_seed, BoundSurface};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vars() -> Vec<Var> {
    (0..3).flat_map(|j| [Var::z(j), Var::cz(j)]).collect()
}

fn close(sym: Complex64, fd: Complex64, rel: f64) -> bool {
    (sym - fd).norm() <= rel * sym.norm().max(1.0)
}

fn bound_surfaces(cat: &Catalog) -> Vec<BoundSurface> {
    cat.surfaces
        .iter()
        .flat_map(|e| bindings(&e.surface).into_iter().map(move |v| e.surface.bind(&v).unwrap()))
        .collect()
}

fn surface_points(b: &BoundSurface, k: usize, count: usize) -> Vec<[Complex64; 3]> {
    b.sample_points(stream_seed(31, k as u64), count).into_iter().map(Result::unwrap).collect()
}

fn field_exprs(cat: &Catalog) -> Vec<Expr> {
    let mut out = Vec::new();
    for r in &cat.realizations {
        for v in r.bindings() {
            for f in r.fields.iter().chain(r.extras.iter().map(|x| &x.field)) {
                out.extend(f.with_params(&v).components().iter().cloned());
            }
        }
    }
    out
}

#[test]
fn defining_function_derivatives_match_differences() {
    let cat = Catalog::bundled().unwrap();
    for (k, b) in bound_surfaces(&cat).iter().enumerate() {
        let derivs: Vec<(Var, Expr)> = vars().into_iter().map(|v| (v, wirtinger(&b.rho, v).unwrap())).collect();
        for p in surface_points(b, k, 100) {
            let at = Binding::new().with_point(p);
            for (v, d) in &derivs {
                let (sym, fd) = (eval(d, &at).unwrap(), wirtinger_fd(&b.rho, &at, *v).unwrap());
                assert!(close(sym, fd, 1e-6), "{} {v:?} at {p:?}: {sym} vs {fd}", b.name);
            }
        }
    }
}

#[test]
fn field_component_derivatives_match_differences() {
    let cat = Catalog::bundled().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for e in field_exprs(&cat) {
        let derivs: Vec<(Var, Expr)> = vars().into_iter().map(|v| (v, wirtinger(&e, v).unwrap())).collect();
        for (v, d) in &derivs {
            if v.is_conj() {
                assert!(d.is_zero(), "{e}");
            }
        }
        for _ in 0..100 {
            let p = [0; 3].map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let at = Binding::new().with_point(p);
            for (v, d) in &derivs {
                let (sym, fd) = (eval(d, &at).unwrap(), wirtinger_fd(&e, &at, *v).unwrap());
                assert!(close(sym, fd, 1e-6), "{e} {v:?}: {sym} vs {fd}");
            }
        }
    }
}

#[test]
fn symbolic_hessian_matches_differences() {
    let cat = Catalog::bundled().unwrap();
    for (k, b) in bound_surfaces(&cat).iter().enumerate() {
        for p in surface_points(b, k, 50) {
            let (h, fd) = (b.hessian_at(&p).unwrap(), b.hessian_fd(&p).unwrap());
            for j in 0..3 {
                for l in 0..3 {
                    assert!(close(h[j][l], fd[j][l], 1e-5), "{} ({j},{l}): {} vs {}", b.name, h[j][l], fd[j][l]);
                }
            }
            let w = b.complex_tangent_basis(&p).unwrap();
            let sym = b.levi_with_basis(&p, &w, &h).unwrap();
            let num = b.levi_with_basis(&p, &w, &fd).unwrap();
            for (x, y) in [(sym.eigenvalues.0, num.eigenvalues.0), (sym.eigenvalues.1, num.eigenvalues.1)] {
                assert!((x - y).abs() <= 1e-5 * x.abs().max(1.0), "{}: {x} vs {y}", b.name);
            }
        }
    }
}

#[test]
fn conjugation_commutes_with_evaluation() {
    let cat = Catalog::bundled().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (k, b) in bound_surfaces(&cat).iter().enumerate() {
        let bar = b.rho.conj();
        for p in surface_points(b, k, 20) {
            let p = p.map(|z| z + Complex64::new(rng.gen_range(-0.01..0.01), rng.gen_range(-0.01..0.01)));
            let at = Binding::new().with_point(p);
            let (u, w) = (eval(&b.rho, &at).unwrap(), eval(&bar, &at).unwrap());
            assert!((w - u.conj()).norm() <= 1e-12 * u.norm().max(1.0), "{}", b.name);
            assert!(u.im.abs() <= 1e-12 * u.norm().max(1.0), "{} is not real", b.name);
        }
    }
    for e in field_exprs(&cat) {
        let bar = e.conj();
        for _ in 0..20 {
            let p = [0; 3].map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let at = Binding::new().with_point(p);
            let u = eval(&e, &at).unwrap();
            assert!((eval(&bar, &at).unwrap() - u.conj()).norm() <= 1e-12 * u.norm().max(1.0), "{e}");
        }
    }
}
