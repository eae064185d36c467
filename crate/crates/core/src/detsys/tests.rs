use super::*;
use crate::diffop::{make_basis_generator, parse_generator};
use crate::expr::{ParamTable, Scope};
use crate::pauli::parse_matrix;

fn scope() -> Scope {
    Scope::new(ParamTable::reserved())
}

fn check(v: &str, q: &str, sc: &Scope) -> VerificationReport {
    let v = parse_matrix(v, sc).unwrap();
    let q = parse_generator(q, sc).unwrap();
    verify_operator(&v, &q, sc, &VerifyConfig::default()).unwrap()
}

#[test]
fn free_particle_generators() {
    let sc = scope();
    for q in ["P0", "P1", "P2", "P3", "G1", "G3", "D", "A", "L3", "M23", "I", "s2"] {
        let r = check("0", q, &sc);
        assert!(r.pass, "{q}: {:?}", r.residuals);
    }
}

#[test]
fn oscillator_generators() {
    let sc = scope();
    for q in ["A+(omega)", "Ah+(omega)", "B1+(omega)", "Bh2+(omega)", "L1"] {
        let r = check("omega^2*r^2/2", q, &sc);
        assert!(r.pass, "{q}: {:?}", r.residuals);
    }
    for q in ["A-(omega)", "Ah-(omega)", "B3-(omega)", "Bh3-(omega)"] {
        let r = check("-omega^2*r^2/2", q, &sc);
        assert!(r.pass, "{q}: {:?}", r.residuals);
    }
}

#[test]
fn non_symmetries_fail_in_the_right_equation() {
    let sc = scope();
    let r = check("omega^2*r^2/2", "P3", &sc);
    assert!(!r.pass);
    assert!(r.residuals["eq14"] > 1e-3);
    assert!(r.residuals["eq8"] < 1e-12 && r.residuals["eq9"] < 1e-12);
    let r = check("x1*s3", "P1", &sc);
    assert!(!r.pass);
    assert!(r.residuals["eq15"] > 1e-3 && r.residuals["eq14"] < 1e-12);
    let r = check("0", "t*s1", &sc);
    assert!(!r.pass);
    assert!(r.residuals["eq15"] > 0.5);
    let v = parse_matrix("0", &sc).unwrap();
    let q = parse_generator("P1*P1", &sc).unwrap();
    assert!(matches!(verify_operator(&v, &q, &sc, &VerifyConfig::default()), Err(DetError::Order(_))));
}

#[test]
fn spin_dependent_generator() {
    let sc = scope();
    let r = check("-omega^2*x3^2/2 + n*omega*x3*s3", "Q(omega,n)", &sc);
    assert!(r.pass, "{:?}", r.residuals);
    let r = check("-omega^2*x3^2/2 + n*omega*x3*s3", "Q(omega,-n)", &sc);
    assert!(!r.pass);
}

#[test]
fn placeholder_potential() {
    let sc = scope().with_placeholder("G", 2);
    let r = check("G(x1,x2)", "P3", &sc);
    assert!(r.pass);
    let r = check("G(x1,x2)", "L3", &sc);
    assert!(!r.pass);
    let sc = scope().with_placeholder("G", 1);
    let r = check("G(rt) + s3*x3", "L3", &sc);
    assert!(r.pass, "{:?}", r.residuals);
}

#[test]
fn operator_and_candidate_roundtrip() {
    for name in ["P0", "D", "A", "G2", "L3", "I"] {
        let g = make_basis_generator(name, &[]).unwrap();
        let c = SymmetryCandidate::from_operator(&g.op).unwrap();
        assert_eq!(c.to_operator().sub(&g.op).simplify(), DiffOp::zero(), "{name}");
    }
    let d = make_basis_generator("D", &[]).unwrap().candidate().unwrap();
    assert_eq!(d.alpha().simplify(), Expr::int(2));
    assert!(SymmetryCandidate::from_operator(&compose(&DiffOp::partial(Var::X1), &DiffOp::partial(Var::X1)).unwrap())
        .is_err());
    let op = parse_generator("s1*P1", &scope()).unwrap();
    assert_eq!(SymmetryCandidate::from_operator(&op), Err(DetError::MatrixVectorField));
}

#[test]
fn structured_residuals_agree_with_operator_check() {
    let sc = scope();
    let v = parse_matrix("-omega^2*x3^2/2 + n*omega*x3*s3", &sc).unwrap();
    let q = parse_generator("Q(omega,n)", &sc).unwrap();
    let cand = SymmetryCandidate::from_operator(&q).unwrap();
    let r = residuals_structured(&v, &cand, &sc, &VerifyConfig::default()).unwrap();
    assert!(r.pass, "{:?}", r.residuals);
    let bad = parse_matrix("omega^2*x3^2/2", &sc).unwrap();
    let r = residuals_structured(&bad, &cand, &sc, &VerifyConfig::default()).unwrap();
    assert!(!r.pass);
    assert!(r.residuals["eq14"] > 1e-3);
}

#[test]
fn structured_constructor_matches_named_generators() {
    let z = Expr::zero;
    let s = Structured {
        theta: std::array::from_fn(|_| std::array::from_fn(|_| z())),
        nu: [z(), z(), Expr::t()],
        f: z(),
        eta_vec: [z(), z(), z()],
    };
    let c = SymmetryCandidate::from_structured(z(), s);
    let g3 = make_basis_generator("G3", &[]).unwrap().op;
    assert_eq!(c.to_operator().sub(&g3).simplify(), DiffOp::zero());
    let s = Structured {
        theta: std::array::from_fn(|_| std::array::from_fn(|_| z())),
        nu: [z(), z(), z()],
        f: z(),
        eta_vec: [z(), z(), z()],
    };
    let c = SymmetryCandidate::from_structured(Expr::t().powi(2).neg(), s);
    let a = make_basis_generator("A", &[]).unwrap().op;
    assert_eq!(c.to_operator().sub(&a).simplify(), DiffOp::zero());
}

#[test]
fn frequency_classification() {
    let sc = scope();
    let mut s = crate::expr::Sampler::new(3);
    let inst = s.instantiate::<f64>(&sc);
    let w = inst.params["omega"];
    let v = parse_matrix("omega^2*r^2/2", &sc).unwrap();
    let f = check_consequences(&v, &inst, 1).unwrap();
    assert_eq!(f.class, HessianClass::Isotropic);
    assert!((f.mu.unwrap() + w * w).abs() < 1e-9);
    let ap = f.alpha_profile.unwrap();
    assert_eq!(ap.kind, ProfileKind::Trigonometric);
    assert!((ap.omega - 2.0 * w.abs()).abs() < 1e-9);
    let v = parse_matrix("-omega^2*x3^2/2 + x1^2", &sc).unwrap();
    let f = check_consequences(&v, &inst, 1).unwrap();
    assert_eq!(f.class, HessianClass::PerAxis);
    assert_eq!(f.axes[1].unwrap().kind, ProfileKind::Linear);
    assert_eq!(f.axes[2].unwrap().kind, ProfileKind::Hyperbolic);
    let sc = scope().with_placeholder("G", 1);
    let inst = crate::expr::Sampler::new(4).instantiate::<f64>(&sc);
    let v = parse_matrix("G(rt) + x3^2", &sc).unwrap();
    let f = check_consequences(&v, &inst, 1).unwrap();
    assert_eq!(f.class, HessianClass::NonConstant);
    assert!(f.axes[0].is_none() && f.axes[2].is_some());
}
