use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::random::{central_difference, random_tree, random_tree_scope};
use super::*;

fn scope() -> Scope {
    Scope::new(ParamTable::reserved().with("kappa", 1.3).unwrap())
        .with_placeholder("G", 2)
        .with_placeholder("F", 1)
}

fn fd_agrees(e: &Expr, v: Var, sampler: &mut Sampler, sc: &Scope, n: usize) {
    let inst = sampler.instantiate::<f64>(sc);
    let d = e.diff(v);
    for _ in 0..n {
        let p = sampler.point(&inst);
        let exact = d.eval(&p).unwrap();
        let fd = central_difference(e, &p, v, 1e-5).unwrap();
        let err = (exact - fd).norm();
        assert!(err <= 1e-6 * (1.0 + fd.norm()), "{e} d/{v:?}: {exact} vs {fd}");
    }
}

#[test]
fn eval_simple_points() {
    let inst = std::sync::Arc::new(Instantiation::empty());
    let p = PointSample::at(0.0, [1.0, 2.0, 3.0], inst.clone());
    assert_eq!(parse("x1 + x2", &scope()).unwrap().eval(&p).unwrap(), Complex::new(3.0, 0.0));
    let p = PointSample::at(0.0, [0.0, 0.0, 2.0], inst);
    assert_eq!(parse("i*x3", &scope()).unwrap().eval(&p).unwrap(), Complex::new(0.0, 2.0));
}

#[test]
fn derivative_of_square() {
    let e = parse("x1^2", &scope()).unwrap();
    assert_eq!(e.diff(Var::X1).simplify(), Expr::int(2).mul(&Expr::x(1)));
    assert!(Expr::rat(3, 7).diff(Var::T).is_zero());
}

#[test]
fn placeholder_chain_rule_matches_finite_differences() {
    let sc = scope();
    let mut s = Sampler::new(11);
    let g = parse("G(rt, x3)", &sc).unwrap();
    for v in Var::ALL {
        fd_agrees(&g, v, &mut s, &sc, 20);
    }
    // closed form G_(1)(rt, x3) * x1/rt
    let inst = s.instantiate::<f64>(&sc);
    let closed = match g.node() {
        Node::Apply(a) => {
            let d = Expr::apply_deriv(&a.name, a.args.clone(), vec![1, 0]);
            d.mul(&Expr::x(1)).div(&Expr::rt())
        }
        _ => unreachable!(),
    };
    let dg = g.diff(Var::X1);
    for _ in 0..20 {
        let p = s.point(&inst);
        assert!((dg.eval(&p).unwrap() - closed.eval(&p).unwrap()).norm() < 1e-12);
    }
}

#[test]
fn azimuth_derivative_matches_closed_form() {
    let sc = scope();
    let e = parse("kappa*phi", &sc).unwrap();
    let closed = parse("kappa*x1/rt^2", &sc).unwrap();
    let mut s = Sampler::new(3);
    fd_agrees(&e, Var::X2, &mut s, &sc, 20);
    let inst = s.instantiate::<f64>(&sc);
    for _ in 0..20 {
        let p = s.point(&inst);
        let a = e.diff(Var::X2).eval(&p).unwrap();
        let b = closed.eval(&p).unwrap();
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn single_slot_placeholder_derivative_100_samples() {
    let sc = scope();
    let e = parse("F(x1)", &sc).unwrap();
    let mut s = Sampler::new(5);
    for _ in 0..5 {
        fd_agrees(&e, Var::X1, &mut s, &sc, 20);
    }
}

#[test]
fn random_trees_agree_with_finite_differences() {
    let sc = random_tree_scope();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut s = Sampler::new(99);
    for _ in 0..100 {
        let e = random_tree(&mut rng, 6);
        let v = Var::from_index(rng.random_range(0..4));
        fd_agrees(&e, v, &mut s, &sc, 3);
    }
}

#[test]
fn mixed_partials_commute() {
    let sc = random_tree_scope();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut s = Sampler::new(18);
    let inst = s.instantiate::<f64>(&sc);
    for _ in 0..30 {
        let e = random_tree(&mut rng, 4);
        let a = Var::from_index(rng.random_range(0..4));
        let b = Var::from_index(rng.random_range(0..4));
        let ab = e.diff(a).diff(b);
        let ba = e.diff(b).diff(a);
        let p = s.point(&inst);
        let (x, y) = (ab.eval(&p).unwrap(), ba.eval(&p).unwrap());
        assert!((x - y).norm() <= 1e-10 * (1.0 + x.norm()), "{e}");
    }
}

#[test]
fn differentiation_is_linear() {
    let sc = random_tree_scope();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut s = Sampler::new(6);
    let inst = s.instantiate::<f64>(&sc);
    for _ in 0..30 {
        let (e1, e2) = (random_tree(&mut rng, 4), random_tree(&mut rng, 4));
        let (a, b) = (Expr::rat(3, 2), Expr::complex(-0.5, 2.0));
        let v = Var::from_index(rng.random_range(0..4));
        let lhs = a.mul(&e1).add(&b.mul(&e2)).diff(v);
        let p = s.point(&inst);
        let rhs = a.eval(&p).unwrap() * e1.diff(v).eval(&p).unwrap() + b.eval(&p).unwrap() * e2.diff(v).eval(&p).unwrap();
        let l = lhs.eval(&p).unwrap();
        assert!((l - rhs).norm() <= 1e-12 * (1.0 + l.norm()));
    }
}

#[test]
fn simplify_preserves_value() {
    let sc = random_tree_scope();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut s = Sampler::new(9);
    let inst = s.instantiate::<f64>(&sc);
    for _ in 0..50 {
        let e = random_tree(&mut rng, 5);
        let e = e.add(&e.diff(Var::X1));
        let simple = e.simplify();
        let p = s.point(&inst);
        let (a, b) = (e.eval(&p).unwrap(), simple.eval(&p).unwrap());
        assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()), "{e} vs {simple}");
    }
}

#[test]
fn substitution_is_capture_free() {
    let sc = scope();
    let e = Expr::x(3);
    let shifted = e.substitute(&|v| (v == Var::X3).then(|| Expr::x(3).sub(&Expr::phi())));
    assert_eq!(shifted, parse("x3 - phi", &sc).unwrap());
    let e = parse("x1*x2", &sc).unwrap();
    let swapped = e.substitute(&|v| match v {
        Var::X1 => Some(Expr::x(2)),
        Var::X2 => Some(Expr::x(1)),
        _ => None,
    });
    assert_eq!(swapped, Expr::x(2).mul(&Expr::x(1)));
}

#[test]
fn identical_seeds_give_identical_samples() {
    let sc = random_tree_scope();
    let run = || {
        let mut s = Sampler::new(123);
        let inst = s.instantiate::<f64>(&sc);
        let e = random_tree(&mut ChaCha8Rng::seed_from_u64(1), 5);
        (0..10)
            .map(|_| {
                let p = s.point(&inst);
                let z = e.eval(&p).unwrap();
                (p.t.to_bits(), p.x.map(f64::to_bits), z.re.to_bits(), z.im.to_bits())
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn log_of_negative_is_a_sampling_fault() {
    let sc = scope();
    let e = parse("ln(x3)", &sc).unwrap();
    let inst = std::sync::Arc::new(Instantiation::<f64>::empty());
    let err = e.eval(&PointSample::at(0.0, [1.0, 1.0, -1.0], inst.clone())).unwrap_err();
    assert!(err.is_sampling_fault());
    let mut s = Sampler::new(4);
    let pts = s.collect(&inst, 20, sample::DEFAULT_RETRIES, |p| e.eval(p)).unwrap();
    assert!(pts.iter().all(|(p, _)| p.x[2] > 0.0));
}

#[test]
fn evaluation_in_single_precision() {
    let sc = scope();
    let e = parse("sin(x1)*exp(t) + x2^2", &sc).unwrap();
    let inst32 = std::sync::Arc::new(Instantiation::<f32>::empty());
    let inst64 = std::sync::Arc::new(Instantiation::<f64>::empty());
    let a = e.eval(&PointSample::at(0.25, [1.0, -0.5, 2.0], inst32)).unwrap();
    let b = e.eval(&PointSample::at(0.25, [1.0, -0.5, 2.0], inst64)).unwrap();
    assert!((a.re as f64 - b.re).abs() < 1e-5);
}

#[test]
fn display_round_trips_through_parser() {
    let sc = random_tree_scope();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut s = Sampler::new(78);
    let inst = s.instantiate::<f64>(&sc);
    for _ in 0..50 {
        let e = random_tree(&mut rng, 4);
        let back = parse(&e.to_string(), &sc).unwrap();
        let p = s.point(&inst);
        let (a, b) = (e.eval(&p).unwrap(), back.eval(&p).unwrap());
        assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()), "{e}");
    }
}
