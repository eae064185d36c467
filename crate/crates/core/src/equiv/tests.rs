use super::*;
use crate::detsys::{verify_operator, VerifyConfig};
use crate::diffop::parse_generator;
use crate::expr::ParamTable;
use crate::pauli::parse_matrix;

fn scope() -> Scope {
    Scope::new(ParamTable::reserved())
}

fn mat(text: &str) -> MatExpr {
    parse_matrix(text, &scope()).unwrap()
}

fn resid(v: &str, out: &str, map: &PointMap) -> f64 {
    compare(&mat(v), &mat(out), map, &scope(), 7).unwrap()
}

fn close(got: &MatExpr, want: &str) -> bool {
    let id = PointMap::of(&TransformSpec::Et0 { m: [(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)] });
    compare(got, &mat(want), &id, &scope(), 3).unwrap() < 1e-12
}

#[test]
fn free_to_oscillator() {
    let out = transform_potential(&mat("0"), &TransformSpec::Et1 { omega: 1.0 }, &scope(), 1).unwrap();
    assert!(close(&out, "r^2/2"));
    let out = transform_potential(&mat("0"), &TransformSpec::Et2 { omega: 1.0 }, &scope(), 1).unwrap();
    assert!(close(&out, "-r^2/2"));
}

#[test]
fn free_fall() {
    let out = transform_potential(&mat("0"), &TransformSpec::Et3 { kappa: [0.0, 0.0, 1.0] }, &scope(), 1).unwrap();
    assert!(close(&out, "x3"));
    assert!(resid("0", "-x3", &PointMap::of(&TransformSpec::Et3 { kappa: [0.0, 0.0, 1.0] })) > 1e-2);
}

#[test]
fn matrix_phase() {
    let out = transform_potential(&mat("0"), &TransformSpec::Et01 { mu: 0.5, nu: 0.3 }, &scope(), 1).unwrap();
    assert!(close(&out, "0.5 + 0.3*s3"));
}

#[test]
fn constant_conjugation() {
    let spec = TransformSpec::Et0 { m: [(0.0, 0.0), (1.0, 0.0), (0.0, 0.0), (0.0, 0.0)] };
    let out = transform_potential(&mat("x1*s3 + x2*s1"), &spec, &scope(), 1).unwrap();
    assert!(close(&out, "-x1*s3 + x2*s1"));
    let singular = TransformSpec::Et0 { m: [(1.0, 0.0), (1.0, 0.0), (0.0, 0.0), (0.0, 0.0)] };
    assert_eq!(transform_potential(&mat("0"), &singular, &scope(), 1), Err(EquivError::Singular));
}

#[test]
fn inverse_square_is_carried_along() {
    let out = transform_potential(&mat("1/r^2"), &TransformSpec::Et1 { omega: 1.0 }, &scope(), 1).unwrap();
    assert!(close(&out, "1/r^2 + r^2/2"));
    let err = transform_potential(&mat("1/r"), &TransformSpec::Et1 { omega: 1.0 }, &scope(), 1).unwrap_err();
    assert!(matches!(err, EquivError::NotHomogeneous(_)));
}

#[test]
fn printed_conformal_map_needs_unit_frequency() {
    let (_, report) = transform_with_report(&mat("0"), &TransformSpec::Et1 { omega: 2.0 }, &scope(), 1, 1e-9).unwrap();
    assert!(!report.pass);
    assert_eq!(report.notes.len(), 1);
    assert!(resid("0", "2*r^2", &conformal(true, 2.0, true)) < 1e-9);
    assert!(resid("0", "-2*r^2", &conformal(false, 2.0, true)) < 1e-9);
}

#[test]
fn free_fall_needs_shift_invariance() {
    let err = transform_potential(&mat("x3^2"), &TransformSpec::Et3 { kappa: [0.0, 0.0, 1.0] }, &scope(), 1).unwrap_err();
    assert_eq!(err, EquivError::AxisDependence(3));
    assert!(transform_potential(&mat("x1^2"), &TransformSpec::Et3 { kappa: [0.0, 0.0, 1.0] }, &scope(), 1).is_ok());
}

fn same_op(a: &DiffOp, b: &DiffOp) -> bool {
    let d = a.sub(b).simplify();
    let mut sampler = Sampler::new(5);
    let inst = sampler.instantiate::<f64>(&scope());
    let pts = sampler.collect(&inst, 10, DEFAULT_RETRIES, |p| d.eval(p)).unwrap();
    pts.iter().all(|(_, m)| m.values().all(|c| c.max_abs() < 1e-12))
}

#[test]
fn free_fall_substitution_rules() {
    let s = scope();
    let spec = TransformSpec::Et3 { kappa: [0.2, -0.4, 0.7] };
    let p0 = conjugate_generator(&parse_generator("P0", &s).unwrap(), &spec).unwrap();
    let want = parse_generator("P0 + 0.2*G1 - 0.4*G2 + 0.7*G3 + 0.345*t^2", &s).unwrap();
    assert!(same_op(&p0, &want));
    let p2 = conjugate_generator(&parse_generator("P2", &s).unwrap(), &spec).unwrap();
    assert!(same_op(&p2, &parse_generator("P2 - 0.4*t", &s).unwrap()));
}

#[test]
fn symmetries_are_transported() {
    let s = scope();
    let cfg = VerifyConfig::default();
    let cases: [(&str, TransformSpec, &[&str]); 3] = [
        ("x1^2", TransformSpec::Et3 { kappa: [0.0, 0.3, 0.5] }, &["P0", "P2", "P3", "G3", "L1"]),
        ("x3*s3", TransformSpec::Et01 { mu: 0.5, nu: 0.3 }, &["P0", "P1", "L3", "s3"]),
        ("0", TransformSpec::Et1 { omega: 1.0 }, &["P0", "P1", "G2", "L3", "D", "A"]),
    ];
    for (v, spec, gens) in cases {
        let vm = mat(v);
        let out = transform_potential(&vm, &spec, &s, 1).unwrap();
        for g in gens {
            let q = parse_generator(g, &s).unwrap();
            assert!(verify_operator(&vm, &q, &s, &cfg).unwrap().pass, "{g} on {v}");
            let qt = conjugate_generator(&q, &spec).unwrap();
            let r = verify_operator(&out, &qt, &s, &cfg).unwrap();
            assert!(r.pass, "{g} under {} rel {:e}", spec.name(), r.relative_residual());
        }
    }
}
