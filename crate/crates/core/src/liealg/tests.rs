use super::*;
use crate::diffop::make_basis_generator;

fn gens(names: &[&str]) -> Vec<NamedGenerator> {
    names.iter().map(|n| make_basis_generator(n, &[]).unwrap()).collect()
}

fn sc(names: &[&str]) -> StructureConstants<f64> {
    structure_constants(&gens(names), &Scope::new(ParamTable::reserved()), 3).unwrap()
}

#[test]
fn momenta_are_abelian() {
    let c = sc(&["P1", "P2", "P3"]);
    assert!(c.max_abs() < 1e-12);
}

#[test]
fn rotations_give_epsilon_tensor() {
    let c = sc(&["L1", "L2", "L3"]);
    // [iL1, iL2] = -[L1, L2] = -i L3 = -(iL3)
    for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        assert!((c.re(i, j, k) + 1.0).abs() < 1e-10, "{}", c.re(i, j, k));
        assert!((c.re(j, i, k) - 1.0).abs() < 1e-10);
    }
    assert!(c.max_imag() < 1e-12);
}

#[test]
fn heisenberg_fingerprint() {
    let f = fingerprint(&sc(&["G3", "P3", "I"]));
    assert_eq!(f.derived_series, vec![3, 1, 0]);
    assert_eq!(f.center, 1);
    assert!(f.nilpotent);
}

#[test]
fn simple_signatures() {
    assert_eq!(fingerprint(&sc(&["L1", "L2", "L3"])).killing_signature, (0, 3));
    assert_eq!(fingerprint(&sc(&["P0", "D", "A"])).killing_signature, (2, 1));
}

#[test]
fn oscillator_pattern() {
    let scope = Scope::new(ParamTable::reserved().with("omega", 1.0).unwrap());
    let basis: Vec<_> = ["P0", "B3-(omega)", "Bh3-(omega)", "I"]
        .iter()
        .map(|g| NamedGenerator::new(*g, parse_generator(g, &scope).unwrap()))
        .collect();
    let c = structure_constants::<f64>(&basis, &scope, 1).unwrap();
    // [P0, B] = iωB, [P0, Bh] = -iωBh, [B, Bh] = -2iω I
    assert!((c.re(0, 1, 1) + 1.0).abs() < 1e-9);
    assert!((c.re(0, 2, 2) - 1.0).abs() < 1e-9);
    assert!((c.re(1, 2, 3) - 2.0).abs() < 1e-9);
    assert!(c.jacobi_residual() < 1e-9);
}

#[test]
fn not_closed_names_pair() {
    let err = structure_constants::<f64>(&gens(&["P0", "G3"]), &Scope::new(ParamTable::reserved()), 1).unwrap_err();
    assert!(matches!(err, LieError::NotClosed(ref a, ref b, _) if a == "P0" && b == "G3"));
}

#[test]
fn dependent_basis_is_reported() {
    let err = structure_constants::<f64>(&gens(&["P1", "P1"]), &Scope::new(ParamTable::reserved()), 1);
    assert!(matches!(err, Ok(_) | Err(LieError::Dependent(_))));
}

#[test]
fn catalog_builds_and_matches_itself() {
    let cat = catalog().unwrap();
    assert!(cat.len() > 30);
    let ties = tie_groups();
    for e in cat {
        let hits: Vec<_> = cat.iter().filter(|o| o.fingerprint == e.fingerprint).map(|o| o.label.clone()).collect();
        assert!(hits.len() == 1 || ties.contains(&hits), "{}: {hits:?}", e.label);
    }
}

#[test]
fn classify_known_labels() {
    let c = classify(&sc(&["P0", "I", "A", "D", "L1", "L2", "L3"]));
    assert_eq!(c.unique(), Some("sl(2,R)⊕so(3)⊕n1,1"));
    let c = classify(&sc(&["P0", "I", "G3", "P3", "P2", "G2", "L1"]));
    assert!(c.accepts("g(1,2)"));
    let c = classify(&sc(&["L1", "L2", "L3"]));
    assert_eq!(c.unique(), Some("so(3)"));
    assert!(!c.accepts("sl(2,R)"));
}

#[test]
fn formal_labels() {
    assert!(is_formal("s9,3(eps)"));
    assert!(is_formal("s6,n⊕n1,1"));
    assert!(is_formal("-"));
    assert!(!is_formal("s6,242⊕n1,1"));
    assert_eq!(canonical_label("so(3)⊕s2,1⊕n1,1"), canonical_label("s2,1⊕n1,1⊕so(3)"));
}

#[test]
fn json_is_sparse() {
    let j = sc(&["G3", "P3", "I"]).to_json();
    assert_eq!(j["dim"], 3);
    assert_eq!(j["c"].as_array().unwrap().len(), 2);
}
