use homsurf::catalog::{bindings, make_tube, Catalog};
use homsurf::expr::{eval, parse, parse_raw, simplify, Binding};
use homsurf::fields::{bracket, complex_rank_at, real_rank_at, FieldFrame, VectorField};
use homsurf::lie::{check_abelian_ideal, find_abelian_ideals_3d, fingerprint_of};
use homsurf::linalg::Subspace;
use homsurf::params::ParamValues;
use homsurf::surface::{stream_seed, Hypersurface};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn cat() -> &'static Catalog {
    static C: OnceLock<Catalog> = OnceLock::new();
    C.get_or_init(|| Catalog::bundled().unwrap())
}

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        (1usize..=3).prop_map(|j| format!("z{j}")),
        (1usize..=3).prop_map(|j| format!("cz{j}")),
        Just("a".to_string()),
        Just("i".to_string()),
        (-3i32..=3, 1i32..=3).prop_map(|(n, d)| format!("({n}/{d})")),
    ]
}

fn expr_text() -> impl Strategy<Value = String> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            (inner.clone(), 2u32..=3).prop_map(|(a, k)| format!("({a})^{k}")),
            inner.clone().prop_map(|a| format!("exp({a})")),
            inner.prop_map(|a| format!("conj({a})")),
        ]
    })
}

fn random_binding(rng: &mut ChaCha8Rng) -> Binding {
    let z = [0; 3].map(|_| Complex64::new(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)));
    Binding::new().with_point(z).with_param("a", rng.gen_range(0.5..2.0))
}

fn poly_field() -> impl Strategy<Value = VectorField> {
    let monomial = (-2i32..=2, 0usize..4, 0usize..4).prop_map(|(c, a, b)| {
        let v = |k: usize| if k == 0 { "1".to_string() } else { format!("z{k}") };
        format!("{c}*{}*{}", v(a), v(b))
    });
    let component = prop::collection::vec(monomial, 1..3).prop_map(|t| t.join(" + "));
    [component.clone(), component.clone(), component]
        .prop_map(|c| VectorField::parse("P", &format!("({})*d1 + ({})*d2 + ({})*d3", c[0], c[1], c[2])).unwrap())
}

fn catalog_fields() -> &'static Vec<VectorField> {
    static F: OnceLock<Vec<VectorField>> = OnceLock::new();
    F.get_or_init(|| {
        let mut out = Vec::new();
        for r in &cat().realizations {
            for v in r.bindings() {
                out.extend(r.fields.iter().map(|f| f.with_params(&v)));
                out.extend(r.extras.iter().map(|x| x.field.with_params(&v)));
            }
        }
        out
    })
}

fn jacobi_sum(x: &VectorField, y: &VectorField, z: &VectorField) -> VectorField {
    let a = bracket(x, &bracket(y, z).unwrap()).unwrap();
    let b = bracket(y, &bracket(z, x).unwrap()).unwrap();
    let c = bracket(z, &bracket(x, y).unwrap()).unwrap();
    a.add(&b).add(&c)
}

fn surfaces() -> Vec<(Hypersurface, ParamValues)> {
    cat().surfaces.iter().flat_map(|e| bindings(&e.surface).into_iter().map(move |v| (e.surface.clone(), v))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn simplify_preserves_values(text in expr_text(), seed in any::<u64>()) {
        let raw = parse_raw(&text).unwrap();
        let simple = simplify(&raw);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let b = random_binding(&mut rng);
            let (u, v) = (eval(&raw, &b).unwrap(), eval(&simple, &b).unwrap());
            prop_assert!((u - v).norm() <= 1e-12 * (1.0 + u.norm()), "{text}: {u} vs {v}");
        }
    }

    #[test]
    fn parse_agrees_with_simplify_of_raw(text in expr_text()) {
        prop_assert_eq!(parse(&text).unwrap(), simplify(&parse_raw(&text).unwrap()));
    }

    #[test]
    fn jacobi_identity_for_polynomial_fields(x in poly_field(), y in poly_field(), z in poly_field()) {
        prop_assert!(jacobi_sum(&x, &y, &z).is_zero());
    }

    #[test]
    fn jacobi_identity_for_catalog_triples(seed in any::<u64>()) {
        let f = catalog_fields();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t: Vec<&VectorField> = f.choose_multiple(&mut rng, 3).collect();
        prop_assert!(jacobi_sum(t[0], t[1], t[2]).is_zero(), "{} {} {}", t[0], t[1], t[2]);
    }

    #[test]
    fn brackets_stay_holomorphic(seed in any::<u64>()) {
        let f = catalog_fields();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t: Vec<&VectorField> = f.choose_multiple(&mut rng, 2).collect();
        let b = bracket(t[0], t[1]).unwrap();
        prop_assert!(b.components().iter().all(|c| c.is_holomorphic()));
    }

    #[test]
    fn complex_rank_bounds_real_rank(seed in any::<u64>()) {
        let f = catalog_fields();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(1..=5);
        let frame = FieldFrame::new("sub", f.choose_multiple(&mut rng, k).cloned().collect());
        let p = [0; 3].map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let b = Binding::new();
        let (r, c) = (real_rank_at(&frame, p, &b).unwrap(), complex_rank_at(&frame, p, &b).unwrap());
        prop_assert!(c <= r && r <= 2 * c);
    }

    #[test]
    fn coordinate_ideals_are_found(entry in 0usize..67, seed in any::<u64>()) {
        let a = &cat().algebras[entry].algebra;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = a.params.sample(&mut rng, &ParamValues::new()).unwrap();
        let sc = a.bind(&v).unwrap();
        let found = find_abelian_ideals_3d(a, &v, seed).unwrap();
        for i in 0..5 {
            for j in i + 1..5 {
                for k in j + 1..5 {
                    let s = Subspace::coordinate(5, &[i, j, k]);
                    if check_abelian_ideal(&sc, &s).holds() {
                        prop_assert!(found.ideals.contains(&s), "{} {}", a.name, s.describe());
                    }
                }
            }
        }
    }

    #[test]
    fn fingerprint_ignores_basis_order(entry in 0usize..67, seed in any::<u64>()) {
        let a = &cat().algebras[entry].algebra;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = a.params.sample(&mut rng, &ParamValues::new()).unwrap();
        let sc = a.bind(&v).unwrap();
        let base = fingerprint_of(&sc);
        for _ in 0..10 {
            let mut perm: Vec<usize> = (0..5).collect();
            perm.shuffle(&mut rng);
            prop_assert_eq!(&fingerprint_of(&sc.permuted(&perm)), &base, "{} {:?}", a.name, perm);
        }
    }

    #[test]
    fn levi_class_survives_rescaling(k in 0usize..64, seed in any::<u64>()) {
        let all = surfaces();
        let (m, v) = &all[k % all.len()];
        let b = m.bind(v).unwrap();
        let factors = ["2", "-1", "1/3", "1 + z1*cz1"].map(|f| parse(f).unwrap());
        let scaled: Vec<_> = factors.iter().map(|f| m.rescaled(f).bind(v).unwrap()).collect();
        for p in b.sample_points(seed, 5) {
            let p = p.unwrap();
            let base = b.levi_form(&p).unwrap().classification;
            for s in &scaled {
                prop_assert_eq!(s.levi_form(&p).unwrap().classification, base, "{}", m.name);
            }
        }
    }

    #[test]
    fn levi_class_survives_unitary_rotation(k in 0usize..64, seed in any::<u64>(), t in 0.0f64..6.3, phi in 0.0f64..6.3, psi in 0.0f64..6.3) {
        let all = surfaces();
        let (m, v) = &all[k % all.len()];
        let b = m.bind(v).unwrap();
        let (ct, st) = (t.cos(), t.sin());
        let (e1, e2) = (Complex64::from_polar(1.0, phi), Complex64::from_polar(1.0, psi));
        for p in b.sample_points(seed, 5) {
            let p = p.unwrap();
            let w = b.complex_tangent_basis(&p).unwrap();
            let h = b.hessian_at(&p).unwrap();
            let u = [0, 1, 2].map(|j| e1 * ct * w[0][j] - e2.conj() * st * w[1][j]);
            let x = [0, 1, 2].map(|j| e2 * st * w[0][j] + e1.conj() * ct * w[1][j]);
            let base = b.levi_with_basis(&p, &w, &h).unwrap();
            let rot = b.levi_with_basis(&p, &[u, x], &h).unwrap();
            prop_assert_eq!(rot.classification, base.classification);
            prop_assert!((rot.eigenvalues.0 - base.eigenvalues.0).abs() < 1e-9 * base.eigenvalues.0.abs().max(1.0));
        }
    }
}

#[test]
fn commuting_pairs_of_pseudoconvex_tubes_have_complex_rank_two() {
    for t in &cat().tubes {
        let (m, r) = make_tube(t);
        for (k, v) in bindings(&m).iter().enumerate() {
            let fields: Vec<VectorField> = r.fields.iter().map(|f| f.with_params(v)).collect();
            let b = m.bind(v).unwrap();
            let points: Vec<_> = b.sample_points(stream_seed(9, k as u64), 10).into_iter().map(Result::unwrap).collect();
            for i in 0..5 {
                for j in i + 1..5 {
                    if !bracket(&fields[i], &fields[j]).unwrap().is_zero() {
                        continue;
                    }
                    let pair = FieldFrame::new("pair", vec![fields[i].clone(), fields[j].clone()]);
                    for p in &points {
                        assert_eq!(complex_rank_at(&pair, *p, &Binding::new()).unwrap(), 2, "{} ({i},{j})", t.name);
                    }
                }
            }
        }
    }
}
