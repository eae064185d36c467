#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use spsym::corpus::{self, branch_basis, materialize, row_seed};
use spsym::diffop::{parse_generator, DiffOp};
use spsym::expr::sample::DEFAULT_RETRIES;
use spsym::expr::{ParamTable, Sampler, Scope};
use spsym::liealg::{self, StructureConstants};

pub fn scope() -> Scope {
    Scope::new(ParamTable::reserved())
}

pub fn gen(text: &str) -> DiffOp {
    parse_generator(text, &scope()).unwrap()
}

/// Largest coefficient of `a − b` over random points.
pub fn op_distance(a: &DiffOp, b: &DiffOp, scope: &Scope, n: usize, seed: u64) -> f64 {
    let d = a.sub(b).simplify();
    let mut s = Sampler::new(seed);
    let inst = s.instantiate::<f64>(scope);
    let pts = s.collect(&inst, n, DEFAULT_RETRIES, |p| d.eval(p)).unwrap();
    pts.iter().flat_map(|(_, m)| m.values().map(|c| c.max_abs())).fold(0.0, f64::max)
}

/// Structure constants of the algebra spanned by every corpus branch.
pub fn corpus_algebras() -> Vec<(String, StructureConstants<f64>)> {
    let mut out = Vec::new();
    for r in corpus::load().unwrap() {
        for b in r.branches() {
            let (scope, _, gens) = materialize(&r, &b).unwrap();
            let basis = branch_basis(&scope, &gens);
            let name = format!("{} [{}]", r.id, b.when.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","));
            match liealg::structure_constants::<f64>(&basis, &scope, row_seed(42, r.id)) {
                Ok(sc) => out.push((name, sc)),
                Err(e) => panic!("{name}: {e}"),
            }
        }
    }
    out
}

/// Random real matrix `I + N/2`, redrawn until comfortably invertible.
pub fn random_basis_change(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    loop {
        let m = DMatrix::from_fn(d, d, |i, j| {
            let z: f64 = rng.sample(StandardNormal);
            if i == j { 1.0 + 0.5 * z } else { 0.5 * z }
        });
        let sv = m.singular_values();
        if sv.min() > 0.05 * sv.max() {
            return m;
        }
    }
}
