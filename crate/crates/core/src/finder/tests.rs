use super::*;
use crate::detsys::{verify_operator, VerifyConfig};
use crate::diffop::parse_generator;
use crate::expr::ParamTable;
use crate::pauli::parse_matrix;

fn scope(vals: &[(&str, f64)], ph: &[(&str, usize)]) -> Scope {
    let mut p = ParamTable::reserved();
    for (k, x) in vals {
        if !p.contains(k) {
            p.declare(k).unwrap();
        }
        p.set(k, *x).unwrap();
    }
    let mut s = Scope::new(p);
    for (n, a) in ph {
        s = s.with_placeholder(n, *a);
    }
    s
}

fn find(v: &str, s: &Scope) -> SymmetryAlgebra {
    let vm = parse_matrix(v, s).unwrap();
    find_symmetries(&vm, s, &FinderConfig::default()).unwrap()
}

fn has(alg: &SymmetryAlgebra, g: &str, s: &Scope) -> bool {
    alg.contains(&parse_generator(g, s).unwrap(), 1e-8)
}

#[test]
fn free_particle_has_thirteen() {
    let s = scope(&[], &[]);
    let alg = find("0", &s);
    assert_eq!(alg.dimension, 13);
    for g in ["P0", "I", "D", "A", "G1", "L2", "P3"] {
        assert!(has(&alg, g, &s), "{g}");
    }
    assert!(!has(&alg, "x1*P1", &s));
}

#[test]
fn inverse_square_has_seven() {
    let s = scope(&[("kappa", 1.7)], &[]);
    let alg = find("kappa/r^2", &s);
    assert_eq!(alg.dimension, 7);
    for g in ["P0", "I", "D", "A", "L1", "L2", "L3"] {
        assert!(has(&alg, g, &s), "{g}");
    }
}

#[test]
fn axis_oscillator_has_nine() {
    let s = scope(&[], &[]);
    let alg = find("x3^2/2", &s);
    assert_eq!(alg.dimension, 9);
    for g in ["P0", "I", "B3+(1)", "Bh3+(1)", "L3", "P1", "P2", "G1", "G2"] {
        assert!(has(&alg, g, &s), "{g}");
    }
}

#[test]
fn magnetic_row_is_not_galilei_invariant() {
    let ph = [("G", 2), ("Gt", 2), ("Phi", 2), ("Phit", 2)];
    let s = scope(&[("n", 1.0), ("kappa", 0.3)], &ph);
    let alg = find("N(x1, x2) + F(x1, x2)*M(n, x3) + n*kappa*x3", &s);
    assert!(has(&alg, "P3 + s3 + kappa*t", &s));
    assert!(!has(&alg, "G3", &s));
    let s0 = scope(&[("n", 0.0), ("kappa", 0.3)], &ph);
    let alg0 = find("N(x1, x2) + F(x1, x2)*M(n, x3) + n*kappa*x3", &s0);
    assert!(has(&alg0, "G3", &s0));
}

#[test]
fn constant_field_uses_double_frequency() {
    let s = scope(&[("lambda", 0.8)], &[]);
    let vm = parse_matrix("lambda*s3", &s).unwrap();
    let mut sampler = Sampler::new(1);
    let inst = sampler.instantiate::<f64>(&s);
    let cb = build_candidates(&vm, &inst, 1).unwrap();
    assert!((cb.matrix_frequency.unwrap() - 1.6).abs() < 1e-12);
    assert!(cb.members.iter().any(|m| m.name == "s1*cos(1.6t)"));
    assert!(cb.members.iter().any(|m| m.name == "s2*sin(1.6t)"));
}

#[test]
fn found_generators_verify() {
    let s = scope(&[("omega", 1.3)], &[]);
    let vm = parse_matrix("omega^2*r^2/2", &s).unwrap();
    let alg = find_symmetries(&vm, &s, &FinderConfig::default()).unwrap();
    assert_eq!(alg.dimension, 13);
    for g in &alg.generators {
        let r = verify_operator(&vm, &g.op, &s, &VerifyConfig::default()).unwrap();
        assert!(r.pass, "{} rel {:e}", g.name, r.relative_residual());
    }
}

#[test]
fn same_seed_same_span() {
    let s = scope(&[("kappa", 1.7)], &[]);
    let a = find("kappa/r^2", &s);
    let b = find("kappa/r^2", &s);
    assert_eq!(a.coefficients, b.coefficients);
    for g in &a.generators {
        assert!(b.projection_residual(&g.op).unwrap() < 1e-9);
    }
}

