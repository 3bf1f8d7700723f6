use std::f64::consts::PI;

use nalgebra::DMatrix;
use poslab::assembly::{assemble, BoundaryMode, CoefficientSet, MassKind};
use poslab::expr::Expr;
use poslab::lattice::{invariant_ideals, is_irreducible, semigroup, MetznerGenerator};
use poslab::mesh::{generate_structured, load_mesh, save_mesh, BoundaryTag, Shape, TagRule, TriMesh};
use poslab::parabolic::{solve_mild, BoundaryData};
use poslab::semigroup::{evolve, EvolutionConfig};
use poslab::Complex64;
use proptest::prelude::*;

fn square(n: usize, tag: BoundaryTag) -> TriMesh {
    generate_structured(Shape::UnitSquare, n, &TagRule::all(tag)).unwrap()
}

fn metzner(n: usize) -> impl Strategy<Value = MetznerGenerator> {
    let off = prop_oneof![Just(0.0), 0.1f64..2.0];
    (proptest::collection::vec(off, n * n), proptest::collection::vec(0.0f64..3.0, n)).prop_map(move |(o, d)| {
        MetznerGenerator::new(DMatrix::from_fn(n, n, |i, j| if i == j { -d[i] } else { o[i * n + j] })).unwrap()
    })
}

fn sized_metzner() -> impl Strategy<Value = MetznerGenerator> {
    (1usize..=5).prop_flat_map(metzner)
}

fn pattern(m: &DMatrix<f64>) -> Vec<bool> {
    m.iter().map(|&v| v > 0.0).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mesh_text_round_trips(n in 1usize..6, shape in 0usize..2, tag in 0usize..3) {
        let shape = [Shape::UnitSquare, Shape::LShape][shape];
        let tag = [BoundaryTag::Dirichlet, BoundaryTag::Flux, BoundaryTag::Dirichlet][tag];
        let rule = if shape == Shape::UnitSquare { TagRule::all(tag).with("left", BoundaryTag::Flux) } else { TagRule::all(tag) };
        let m = generate_structured(shape, n, &rule).unwrap();
        let text = save_mesh(&m);
        let back = load_mesh(&text).unwrap();
        prop_assert_eq!(save_mesh(&back), text);
        prop_assert_eq!(back.vertices(), m.vertices());
        prop_assert_eq!(back.triangles(), m.triangles());
    }

    #[test]
    fn stiffness_is_symmetric_and_convection_transposes(
        n in 2usize..6,
        beta in 0.0f64..3.0,
        b in prop::array::uniform2(-1.0f64..1.0),
        c in prop::array::uniform2(-1.0f64..1.0),
    ) {
        let m = square(n, BoundaryTag::Flux);
        let sym = CoefficientSet::laplacian(&m).with_beta(Complex64::new(beta, 0.0));
        let op = assemble(&m, &sym, BoundaryMode::Robin).unwrap();
        let k = op.stiffness.to_dense();
        prop_assert!((&k - k.transpose()).camax() <= 1e-12 * k.camax());

        let conv = sym.clone().with_convection(b, c);
        let a = assemble(&m, &conv, BoundaryMode::Robin).unwrap().stiffness.to_dense();
        let at = assemble(&m, &conv.adjoint(), BoundaryMode::Robin).unwrap().stiffness.to_dense();
        prop_assert!((&a.adjoint() - &at).camax() <= 1e-12 * a.camax());
    }

    #[test]
    fn diagonal_similarity_preserves_irreducibility(q in sized_metzner(), seed in prop::collection::vec(0.1f64..10.0, 5)) {
        let d = &seed[..q.n()];
        let s = q.similar(d).unwrap();
        prop_assert_eq!(is_irreducible(&s), is_irreducible(&q));
        prop_assert_eq!(invariant_ideals(&s).unwrap(), invariant_ideals(&q).unwrap());
        prop_assert_eq!(pattern(&semigroup(&s, 1.0)), pattern(&semigroup(&q, 1.0)));
    }

    #[test]
    fn irreducible_iff_no_ideals_iff_positive_semigroup(q in sized_metzner()) {
        let irr = is_irreducible(&q);
        prop_assert_eq!(invariant_ideals(&q).unwrap().is_empty(), irr);
        prop_assert_eq!(semigroup(&q, 0.5).iter().all(|&v| v > 0.0), irr);
    }

    #[test]
    fn semigroup_is_nonnegative(q in sized_metzner(), t in 0.0f64..5.0) {
        prop_assert!(semigroup(&q, t).iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn implicit_euler_preserves_nonnegativity(
        u0 in prop::collection::vec(0.0f64..1.0, 25),
        beta in 0.0f64..2.0,
        dt in 1e-4f64..0.05,
    ) {
        let m = square(4, BoundaryTag::Flux);
        let op = assemble(&m, &CoefficientSet::laplacian(&m).with_beta(Complex64::new(beta, 0.0)), BoundaryMode::Robin).unwrap();
        let mut cfg = EvolutionConfig::implicit_euler(dt, 10.0 * dt);
        cfg.mass = MassKind::Lumped;
        let tr = evolve(&op, &u0, &cfg).unwrap();
        prop_assert!(tr.states.iter().flatten().all(|&v| v >= 0.0));
    }

    #[test]
    fn mild_solutions_are_ordered_by_their_data(
        u0 in prop::collection::vec(0.0f64..1.0, 25),
        bump in prop::collection::vec(0.0f64..1.0, 25),
        lift in 0.0f64..1.0,
    ) {
        let m = square(4, BoundaryTag::Dirichlet);
        let c = CoefficientSet::laplacian(&m);
        let cfg = EvolutionConfig::implicit_euler(0.01, 0.1);
        let boundary = m.boundary_mask();
        let pin = |u: &[f64], v: f64| -> Vec<f64> { u.iter().zip(&boundary).map(|(&x, &b)| if b { v } else { x }).collect() };
        let low = pin(&u0, 0.0);
        let high: Vec<f64> = pin(&low.iter().zip(&bump).map(|(a, b)| a + b).collect::<Vec<_>>(), lift);
        let a = solve_mild(&m, &c, &low, &BoundaryData::constant(&m, 0.0, 0.1), &cfg).unwrap();
        let b = solve_mild(&m, &c, &high, &BoundaryData::constant(&m, lift, 0.1), &cfg).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            prop_assert!(x.iter().zip(y).all(|(p, q)| p <= &(q + 1e-12)));
        }
    }

    #[test]
    fn expressions_round_trip_through_display(
        k in 1u32..4,
        a in -5.0f64..5.0,
        b in 0.5f64..5.0,
        x in 0.0f64..1.0,
        y in 0.0f64..1.0,
    ) {
        let src = format!("{a} * sin({k} * pi * x) * cos(y) + exp(-x / {b}) - (y - {a})");
        let e = Expr::parse(&src).unwrap();
        let again = Expr::parse(&e.to_string()).unwrap();
        prop_assert_eq!(&again, &e);
        let direct = a * (k as f64 * PI * x).sin() * y.cos() + (-x / b).exp() - (y - a);
        prop_assert!((e.eval(x, y) - direct).abs() <= 1e-12 * direct.abs().max(1.0));
    }
}
