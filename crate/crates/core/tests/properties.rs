mod common;

use num_complex::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{corpus_algebras, gen, op_distance, random_basis_change, scope};
use spsym::detsys::{verify_operator, TestFunction, VerifyConfig};
use spsym::diffop::{commutator, compose, project, DiffOp};
use spsym::expr::random::{central_difference, random_tree, random_tree_scope};
use spsym::expr::sample::DEFAULT_RETRIES;
use spsym::expr::{Expr, Sampler, Var};
use spsym::liealg::fingerprint;
use spsym::pauli::{mat_comm, mat_mul, MatExpr, Pauli};

type C = Complex<f64>;

fn cx() -> impl Strategy<Value = C> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| C::new(a, b))
}

fn pauli() -> impl Strategy<Value = Pauli<f64>> {
    [cx(), cx(), cx(), cx()].prop_map(Pauli)
}

fn matmul(a: [[C; 2]; 2], b: [[C; 2]; 2]) -> [[C; 2]; 2] {
    let mut out = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

const FIRST_ORDER: &[&str] = &["P0", "P1", "P2", "P3", "G1", "G2", "G3", "L1", "L2", "L3", "D", "A", "I", "s3", "B1+(omega)", "Bh2-(omega)"];

fn combo(rng: &mut ChaCha8Rng) -> DiffOp {
    let mut op = DiffOp::zero();
    for _ in 0..3 {
        let g = FIRST_ORDER[rng.random_range(0..FIRST_ORDER.len())];
        op = op.add(&gen(g).scale(&Expr::float(rng.random_range(-1.5..1.5))));
    }
    op.simplify()
}

#[test]
fn pauli_anticommutators_are_exact() {
    for a in 1..4 {
        for b in 1..4 {
            let (sa, sb) = (MatExpr::sigma(a), MatExpr::sigma(b));
            let ac = mat_mul(&sa, &sb).add(&mat_mul(&sb, &sa)).simplify();
            let want = if a == b { MatExpr::scalar(Expr::int(2)) } else { MatExpr::zero() };
            assert_eq!(ac, want);
        }
    }
}

#[test]
fn jacobi_on_every_corpus_algebra() {
    let algs = corpus_algebras();
    assert!(algs.len() >= 64);
    for (name, sc) in &algs {
        assert!(sc.jacobi_residual() < 1e-8, "{name}: {:e}", sc.jacobi_residual());
        assert!(sc.antisymmetry_residual() < 1e-8, "{name}");
    }
}

#[test]
fn fingerprints_survive_basis_changes() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for (name, sc) in corpus_algebras() {
        let fp = fingerprint(&sc);
        for k in 0..10 {
            let p = random_basis_change(&mut rng, sc.dim);
            let moved = sc.change_basis(&p).unwrap();
            assert_eq!(fingerprint(&moved), fp, "{name} change {k}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, .. ProptestConfig::default() })]

    #[test]
    fn pauli_product_is_matrix_product(a in pauli(), b in pauli()) {
        let direct = matmul(a.to_matrix(), b.to_matrix());
        let via = a.mul(&b).to_matrix();
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((direct[i][j] - via[i][j]).norm() < 1e-12);
            }
        }
        prop_assert!(Pauli::from_matrix(a.to_matrix()).sub(&a).max_abs() < 1e-14);
    }

    #[test]
    fn pauli_product_is_associative(a in pauli(), b in pauli(), c in pauli()) {
        prop_assert!(a.mul(&b).mul(&c).sub(&a.mul(&b.mul(&c))).max_abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, .. ProptestConfig::default() })]

    #[test]
    fn derivative_matches_finite_difference(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_tree(&mut rng, 6);
        let v = Var::from_index(rng.random_range(0..4));
        let d = e.diff(v);
        let mut s = Sampler::new(seed);
        let inst = s.instantiate::<f64>(&random_tree_scope());
        for _ in 0..3 {
            let p = s.point(&inst);
            let exact = d.eval(&p).unwrap();
            let fd = central_difference(&e, &p, v, 1e-5).unwrap();
            prop_assert!((exact - fd).norm() <= 1e-6 * (1.0 + fd.norm()), "{} d/{:?}: {} vs {}", e, v, exact, fd);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, .. ProptestConfig::default() })]

    #[test]
    fn differentiation_is_linear_and_clairaut(seed in any::<u64>(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (e1, e2) = (random_tree(&mut rng, 4), random_tree(&mut rng, 4));
        let v = Var::from_index(rng.random_range(0..4));
        let w = Var::from_index(rng.random_range(0..4));
        let lin = Expr::float(a).mul(&e1).add(&Expr::float(b).mul(&e2)).diff(v);
        let (d1, d2) = (e1.diff(v), e2.diff(v));
        let (vw, wv) = (e1.diff(v).diff(w), e1.diff(w).diff(v));
        let mut s = Sampler::new(seed);
        let inst = s.instantiate::<f64>(&random_tree_scope());
        for _ in 0..4 {
            let p = s.point(&inst);
            let want = d1.eval(&p).unwrap() * a + d2.eval(&p).unwrap() * b;
            let got = lin.eval(&p).unwrap();
            prop_assert!((got - want).norm() <= 1e-12 * (1.0 + want.norm()));
            let (x, y) = (vw.eval(&p).unwrap(), wv.eval(&p).unwrap());
            prop_assert!((x - y).norm() <= 1e-10 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn matrix_commutator_is_antisymmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sc = random_tree_scope();
        let mut m = || MatExpr::from_components(std::array::from_fn(|_| random_tree(&mut rng, 3)));
        let (a, b) = (m(), m());
        let scalar = MatExpr::scalar(random_tree(&mut rng, 3));
        let sum = mat_comm(&a, &b).add(&mat_comm(&b, &a));
        let with_scalar = mat_comm(&a, &scalar);
        let mut s = Sampler::new(seed);
        let inst = s.instantiate::<f64>(&sc);
        for _ in 0..4 {
            let p = s.point(&inst);
            prop_assert!(sum.eval(&p).unwrap().max_abs() < 1e-10);
            prop_assert!(with_scalar.eval(&p).unwrap().max_abs() < 1e-10);
        }
    }

    #[test]
    fn operator_commutator_is_a_lie_bracket(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (combo(&mut rng), combo(&mut rng), combo(&mut rng));
        let sc = scope();
        let ab = commutator(&a, &b).unwrap();
        let ba = commutator(&b, &a).unwrap();
        prop_assert!(op_distance(&ab, &ba.neg(), &sc, 6, seed) < 1e-9);
        let t1 = commutator(&a, &commutator(&b, &c).unwrap()).unwrap();
        let t2 = commutator(&b, &commutator(&c, &a).unwrap()).unwrap();
        let t3 = commutator(&c, &ab).unwrap();
        let jac = t1.add(&t2).add(&t3);
        let mut s = Sampler::new(seed);
        let inst = s.instantiate::<f64>(&sc);
        let proj = project(&jac, &[gen("I")], &mut s, &inst, 8, DEFAULT_RETRIES).unwrap();
        prop_assert!(proj.coeffs[0].norm() < 1e-9 && proj.residual < 1e-9, "{:?}", proj);
    }

    #[test]
    fn composition_matches_successive_action(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (combo(&mut rng), combo(&mut rng));
        let ab = compose(&a, &b).unwrap();
        let sc = scope();
        let mut s = Sampler::new(seed);
        let inst = s.instantiate::<f64>(&sc);
        for _ in 0..10 {
            let psi = TestFunction::random(s.rng(), 3).psi;
            let (lhs, rhs) = (ab.apply(&psi), a.apply(&b.apply(&psi)));
            let p = s.point(&inst);
            for k in 0..2 {
                let (x, y) = (lhs[k].eval(&p).unwrap(), rhs[k].eval(&p).unwrap());
                prop_assert!((x - y).norm() <= 1e-9 * (1.0 + x.norm()));
            }
        }
    }

    #[test]
    fn residual_scales_with_the_generator(seed in any::<u64>(), c in 0.2..5.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sc = scope();
        let v = spsym::pauli::parse_matrix("x1^2 + x2*s3", &sc).unwrap();
        let q = combo(&mut rng);
        let cfg = VerifyConfig { seed, ..VerifyConfig::default() };
        let r1 = verify_operator(&v, &q, &sc, &cfg).unwrap();
        let r2 = verify_operator(&v, &q.scale(&Expr::float(c)), &sc, &cfg).unwrap();
        let (m1, m2) = (r1.max_residual(), r2.max_residual());
        prop_assert!((m2 - c * m1).abs() <= 1e-9 * (1.0 + c * m1), "{} vs {}", m2, c * m1);
    }

    #[test]
    fn same_seed_same_samples(seed in any::<u64>()) {
        let sc = random_tree_scope();
        let e = random_tree(&mut ChaCha8Rng::seed_from_u64(seed), 5);
        let run = || {
            let mut s = Sampler::new(seed);
            let inst = s.instantiate::<f64>(&sc);
            (0..5).map(|_| {
                let p = s.point(&inst);
                (p.t.to_bits(), p.x.map(f64::to_bits), e.eval(&p).map(|z| (z.re.to_bits(), z.im.to_bits())).ok())
            }).collect::<Vec<_>>()
        };
        prop_assert_eq!(run(), run());
    }
}

#[test]
fn verification_is_deterministic() {
    let sc = scope();
    let v = spsym::pauli::parse_matrix("1/r^2 + x3*s3", &sc).unwrap();
    let q = gen("L3 + s3");
    let cfg = VerifyConfig::default();
    let a = verify_operator(&v, &q, &sc, &cfg).unwrap();
    let b = verify_operator(&v, &q, &sc, &cfg).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
