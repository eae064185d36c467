//! Machine-readable classification tables and their verification driver.
//!
//! Row syntax (one file per table):
//!
//! ```text
//! [1.7]                               table.item
//! placeholders = G(1)
//! params = k                          extra free parameters
//! potential = G(rt) + kappa*phi
//! symmetry = L3 + kappa*t             repeatable; `... if n=0` restricts it
//! algebra = s5,14 if kappa!=0         one branch per line
//! branch = n=0                        extra branch without a label
//! witness = kappa=0.7                 values for constrained parameters
//! flags = star, asterisk
//! constraints = kappa!=0
//! note = free text                    repeatable
//! conflict = free text                known inconsistency in the printed row
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::detsys::{verify_operator, DetError, VerifyConfig};
use crate::diffop::{parse_generator, CatalogError, DiffOp};
use crate::expr::sample::is_sign_param;
use crate::expr::{ParamError, ParamTable, ParseError, Scope};
use crate::liealg::{self, Classification, LieError};
use crate::pauli::{parse_matrix, MatExpr};

const TABLES: [(u8, &str); 5] = [
    (0, include_str!("../corpus/text.txt")),
    (1, include_str!("../corpus/table1.txt")),
    (2, include_str!("../corpus/table2.txt")),
    (3, include_str!("../corpus/table3.txt")),
    (4, include_str!("../corpus/table4.txt")),
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("table {table} line {line}: {msg}")]
    Schema { table: u8, line: usize, msg: String },
    #[error("row {row}: {source}")]
    Param { row: RowId, source: ParamError },
    #[error("row {row}: potential: {source}")]
    Potential { row: RowId, source: ParseError },
    #[error("row {row}: generator `{text}`: {source}")]
    Generator { row: RowId, text: String, source: CatalogError },
    #[error("row {row}: {source}")]
    Verify { row: RowId, source: DetError },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct RowId {
    pub table: u8,
    pub item: u8,
}

impl fmt::Display for RowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.table == 0 {
            write!(f, "text.{}", self.item)
        } else {
            write!(f, "T{}.{}", self.table, self.item)
        }
    }
}

/// `name=value` pins a parameter; `name!=0` only asserts the witness is nonzero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Cond {
    Eq(String, f64),
    NonZero(String),
    ProductEq(Vec<String>, f64),
}

impl Cond {
    fn parse(s: &str) -> Option<Cond> {
        let s = s.trim();
        if let Some((l, r)) = s.split_once("!=") {
            return (r.trim() == "0").then(|| Cond::NonZero(l.trim().to_string()));
        }
        let (l, r) = s.split_once('=')?;
        let v: f64 = r.trim().parse().ok()?;
        let names: Vec<String> = l.split('*').map(|x| x.trim().to_string()).collect();
        if names.iter().any(|n| n.is_empty()) {
            return None;
        }
        Some(if names.len() == 1 { Cond::Eq(names[0].clone(), v) } else { Cond::ProductEq(names, v) })
    }

    fn holds(&self, vals: &BTreeMap<String, f64>) -> bool {
        let get = |n: &str| vals.get(n).copied();
        match self {
            Cond::Eq(n, v) => get(n) == Some(*v),
            Cond::NonZero(n) => get(n).is_none_or(|x| x != 0.0),
            Cond::ProductEq(ns, v) => ns.iter().map(|n| get(n)).product::<Option<f64>>() == Some(*v),
        }
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cond::Eq(n, v) => write!(f, "{n}={v}"),
            Cond::NonZero(n) => write!(f, "{n}!=0"),
            Cond::ProductEq(ns, v) => write!(f, "{}={v}", ns.join("*")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Conditional {
    pub value: String,
    pub when: Vec<Cond>,
}

fn split_if(s: &str) -> Option<Conditional> {
    let (value, when) = match s.split_once(" if ") {
        Some((v, c)) => (v, c.split(',').map(Cond::parse).collect::<Option<Vec<_>>>()?),
        None => (s, vec![]),
    };
    Some(Conditional { value: value.trim().to_string(), when })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Flags {
    /// Admits the free-fall map along directions the potential ignores.
    pub star: bool,
    /// Admits the conformal oscillator maps.
    pub asterisk: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorpusRow {
    pub id: RowId,
    pub placeholders: Vec<(String, usize)>,
    pub params: Vec<String>,
    pub potential: String,
    pub symmetries: Vec<Conditional>,
    pub algebras: Vec<Conditional>,
    pub branches: Vec<Vec<Cond>>,
    pub witness: BTreeMap<String, f64>,
    pub flags: Flags,
    pub constraints: Vec<Cond>,
    pub notes: Vec<String>,
    pub conflicts: Vec<String>,
}

/// One concrete parameter choice of a row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Branch {
    pub label: Option<String>,
    pub when: Vec<Cond>,
    /// Pinned values; every other parameter is drawn per instantiation.
    pub values: BTreeMap<String, f64>,
}

impl CorpusRow {
    pub fn scope_for(&self, values: &BTreeMap<String, f64>) -> Result<Scope, CorpusError> {
        let err = |source| CorpusError::Param { row: self.id, source };
        let mut params = ParamTable::reserved();
        for p in &self.params {
            params.declare(p).map_err(err)?;
        }
        for (k, v) in values {
            params.set(k, *v).map_err(err)?;
        }
        let mut scope = Scope::new(params);
        for (name, arity) in &self.placeholders {
            scope = scope.with_placeholder(name, *arity);
        }
        Ok(scope)
    }

    pub fn branches(&self) -> Vec<Branch> {
        let mut out = Vec::new();
        let mut push = |label: Option<String>, when: &[Cond]| {
            let mut values = self.witness.clone();
            for c in when {
                match c {
                    Cond::Eq(n, v) => {
                        values.insert(n.clone(), *v);
                    }
                    Cond::ProductEq(ns, v) => {
                        // pin all but the last factor to 1 unless the witness already satisfies it
                        if !c.holds(&values) {
                            for n in &ns[..ns.len() - 1] {
                                values.insert(n.clone(), 1.0);
                            }
                            values.insert(ns[ns.len() - 1].clone(), *v);
                        }
                    }
                    Cond::NonZero(_) => {}
                }
            }
            out.push(Branch { label, when: when.to_vec(), values });
        };
        for a in &self.algebras {
            push(Some(a.value.clone()), &a.when);
        }
        for b in &self.branches {
            push(None, b);
        }
        if self.algebras.is_empty() && self.branches.is_empty() {
            push(None, &[]);
        }
        let signs = self.sign_params();
        out.into_iter().flat_map(|b| expand_signs(b, &signs)).collect()
    }

    /// Sign parameters (`eps`, `eps1`, ...) used anywhere in the row.
    pub fn sign_params(&self) -> Vec<String> {
        let mut text = self.potential.clone();
        for s in &self.symmetries {
            text.push(' ');
            text.push_str(&s.value);
        }
        let mut out: Vec<String> = text
            .split(|c: char| !c.is_ascii_alphanumeric())
            .filter(|w| is_sign_param(w))
            .map(str::to_string)
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Listed symmetries active in a branch.
    pub fn symmetries_for(&self, values: &BTreeMap<String, f64>) -> Vec<&str> {
        self.symmetries.iter().filter(|s| s.when.iter().all(|c| c.holds(values))).map(|s| s.value.as_str()).collect()
    }
}

fn parse_table(table: u8, text: &str) -> Result<Vec<CorpusRow>, CorpusError> {
    let mut rows: Vec<CorpusRow> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let schema = |msg: String| CorpusError::Schema { table, line, msg };
        let s = raw.split(" #").next().unwrap_or("").trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        if let Some(head) = s.strip_prefix('[').and_then(|h| h.strip_suffix(']')) {
            let (t, i) = head.split_once('.').ok_or_else(|| schema(format!("bad row header `{s}`")))?;
            let t: u8 = t.parse().map_err(|_| schema(format!("bad table number `{t}`")))?;
            let item: u8 = i.parse().map_err(|_| schema(format!("bad item number `{i}`")))?;
            if t != table {
                return Err(schema(format!("row {head} in table {table}")));
            }
            rows.push(CorpusRow {
                id: RowId { table, item },
                placeholders: vec![],
                params: vec![],
                potential: String::new(),
                symmetries: vec![],
                algebras: vec![],
                branches: vec![],
                witness: BTreeMap::new(),
                flags: Flags::default(),
                constraints: vec![],
                notes: vec![],
                conflicts: vec![],
            });
            continue;
        }
        let row = rows.last_mut().ok_or_else(|| schema("field before first row header".into()))?;
        let (key, value) = s.split_once('=').ok_or_else(|| schema(format!("expected `key = value`, got `{s}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let conds = |v: &str| -> Result<Vec<Cond>, CorpusError> {
            v.split(',').map(|c| Cond::parse(c).ok_or_else(|| schema(format!("bad condition `{c}`")))).collect()
        };
        match key {
            "placeholders" => {
                for p in value.split_whitespace() {
                    let (name, ar) = p
                        .strip_suffix(')')
                        .and_then(|p| p.split_once('('))
                        .ok_or_else(|| schema(format!("bad placeholder `{p}`")))?;
                    let ar: usize = ar.parse().map_err(|_| schema(format!("bad arity in `{p}`")))?;
                    row.placeholders.push((name.to_string(), ar));
                }
            }
            "params" => row.params.extend(value.split_whitespace().map(str::to_string)),
            "potential" => row.potential = value.to_string(),
            "symmetry" => row.symmetries.push(split_if(value).ok_or_else(|| schema(format!("bad symmetry `{value}`")))?),
            "algebra" => row.algebras.push(split_if(value).ok_or_else(|| schema(format!("bad algebra `{value}`")))?),
            "branch" => row.branches.push(conds(value)?),
            "witness" => {
                for c in conds(value)? {
                    match c {
                        Cond::Eq(n, v) => {
                            row.witness.insert(n, v);
                        }
                        other => return Err(schema(format!("witness must pin values, got `{other}`"))),
                    }
                }
            }
            "flags" => {
                for f in value.split(',').map(str::trim).filter(|f| !f.is_empty()) {
                    match f {
                        "star" => row.flags.star = true,
                        "asterisk" => row.flags.asterisk = true,
                        _ => return Err(schema(format!("unknown flag `{f}`"))),
                    }
                }
            }
            "constraints" => row.constraints.extend(conds(value)?),
            "note" => row.notes.push(value.to_string()),
            "conflict" => row.conflicts.push(value.to_string()),
            _ => return Err(schema(format!("unknown field `{key}`"))),
        }
    }
    for r in &rows {
        let schema = |msg: String| CorpusError::Schema { table, line: 0, msg: format!("row {}: {msg}", r.id) };
        if r.potential.is_empty() {
            return Err(schema("missing potential".into()));
        }
        for c in &r.constraints {
            if !c.holds(&r.witness) && r.witness.keys().any(|k| matches!(c, Cond::NonZero(n) if n == k)) {
                return Err(schema(format!("witness violates constraint {c}")));
            }
        }
    }
    Ok(rows)
}

/// All rows, in-text solutions first, then tables 1–4.
pub fn load() -> Result<Vec<CorpusRow>, CorpusError> {
    let mut out = Vec::new();
    for (t, text) in TABLES {
        out.extend(parse_table(t, text)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub verify: VerifyConfig,
    pub classify: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { verify: VerifyConfig::default(), classify: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneratorResult {
    pub generator: String,
    pub pass: bool,
    pub relative_residual: f64,
    pub residuals: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchReport {
    pub when: Vec<String>,
    pub values: BTreeMap<String, f64>,
    pub generators: Vec<GeneratorResult>,
    pub expected_label: Option<String>,
    pub classification: Option<Classification>,
    /// Closure or structure-constant failure, if any.
    pub algebra_error: Option<String>,
}

impl BranchReport {
    pub fn verified(&self) -> bool {
        self.generators.iter().all(|g| g.pass)
    }

    /// Expected label found (uniquely, within a tie group, or formal).
    pub fn label_ok(&self) -> bool {
        match (&self.expected_label, &self.classification) {
            (None, _) => true,
            (Some(l), Some(c)) => c.accepts(l),
            (Some(_), None) => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RowReport {
    pub id: RowId,
    pub potential: String,
    pub branches: Vec<BranchReport>,
    pub conflicts: Vec<String>,
    pub seconds: f64,
}

impl RowReport {
    pub fn verified(&self) -> bool {
        self.branches.iter().all(BranchReport::verified)
    }

    pub fn labels_ok(&self) -> bool {
        self.branches.iter().all(BranchReport::label_ok)
    }

    pub fn max_relative_residual(&self) -> f64 {
        self.branches.iter().flat_map(|b| &b.generators).map(|g| g.relative_residual).fold(0.0, f64::max)
    }
}

/// Per-row seed derived from a master seed.
pub fn row_seed(master: u64, id: RowId) -> u64 {
    master ^ ((id.table as u64) << 40) ^ ((id.item as u64) << 32) ^ 0x9e37_79b9
}

/// Every ±1 choice of the sign parameters a branch leaves free.
fn expand_signs(b: Branch, signs: &[String]) -> Vec<Branch> {
    let free: Vec<&String> = signs
        .iter()
        .filter(|s| !b.values.contains_key(*s) && !b.when.iter().any(|c| matches!(c, Cond::ProductEq(ns, _) if ns.contains(s))))
        .collect();
    let mut out = vec![b];
    for s in free {
        out = out
            .into_iter()
            .flat_map(|b| {
                [1.0, -1.0].map(|v| {
                    let mut c = b.clone();
                    c.values.insert(s.clone(), v);
                    c.when.push(Cond::Eq(s.clone(), v));
                    c
                })
            })
            .collect();
    }
    out
}

/// Parses the row's potential and listed generators for one branch.
pub fn materialize(row: &CorpusRow, b: &Branch) -> Result<(Scope, MatExpr, Vec<(String, DiffOp)>), CorpusError> {
    let scope = row.scope_for(&b.values)?;
    let v = parse_matrix(&row.potential, &scope).map_err(|source| CorpusError::Potential { row: row.id, source })?;
    let gens = row
        .symmetries_for(&b.values)
        .into_iter()
        .map(|g| {
            parse_generator(g, &scope)
                .map(|op| (g.to_string(), op))
                .map_err(|source| CorpusError::Generator { row: row.id, text: g.to_string(), source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((scope, v, gens))
}

pub fn run_row(row: &CorpusRow, cfg: &RunConfig) -> Result<RowReport, CorpusError> {
    let start = Instant::now();
    let mut branches = Vec::new();
    for b in row.branches() {
        let (scope, v, gens) = materialize(row, &b)?;
        let mut vcfg = cfg.verify.clone();
        vcfg.seed = row_seed(cfg.verify.seed, row.id);
        let mut generators = Vec::new();
        for (text, op) in &gens {
            let r = verify_operator(&v, op, &scope, &vcfg).map_err(|source| CorpusError::Verify { row: row.id, source })?;
            generators.push(GeneratorResult {
                generator: text.clone(),
                pass: r.pass,
                relative_residual: r.relative_residual(),
                residuals: r.residuals,
            });
        }
        let (classification, algebra_error) = if cfg.classify {
            match classify_branch(&scope, &gens, vcfg.seed) {
                Ok(c) => (Some(c), None),
                Err(e) => (None, Some(e.to_string())),
            }
        } else {
            (None, None)
        };
        branches.push(BranchReport {
            when: b.when.iter().map(Cond::to_string).collect(),
            values: b.values.clone(),
            generators,
            expected_label: b.label.clone(),
            classification,
            algebra_error,
        });
    }
    Ok(RowReport {
        id: row.id,
        potential: row.potential.clone(),
        branches,
        conflicts: row.conflicts.clone(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// The algebra spanned by `P0`, `I` and the listed generators.
pub fn branch_basis(scope: &Scope, gens: &[(String, DiffOp)]) -> Vec<crate::diffop::NamedGenerator> {
    let mut basis = vec![
        crate::diffop::NamedGenerator::new("P0", parse_generator("P0", scope).expect("catalog name")),
        crate::diffop::NamedGenerator::new("I", DiffOp::identity()),
    ];
    for (name, op) in gens {
        basis.push(crate::diffop::NamedGenerator::new(name.clone(), op.clone()));
    }
    basis
}

fn classify_branch(scope: &Scope, gens: &[(String, DiffOp)], seed: u64) -> Result<Classification, LieError> {
    let basis = branch_basis(scope, gens);
    let sc = liealg::structure_constants::<f64>(&basis, scope, seed)?;
    Ok(liealg::classify(&sc))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub rows: usize,
    pub verified: usize,
    pub labels_ok: usize,
    /// Rows whose label mismatch is explained by a `conflict` line.
    pub labels_conflicted: usize,
    pub failures: Vec<String>,
    pub seconds: f64,
    pub slowest_row_seconds: f64,
    pub reports: Vec<RowReport>,
}

pub fn run_rows(rows: &[CorpusRow], cfg: &RunConfig) -> Result<Summary, CorpusError> {
    let start = Instant::now();
    let reports = rows.par_iter().map(|r| run_row(r, cfg)).collect::<Result<Vec<_>, _>>()?;
    let mut failures = Vec::new();
    for r in &reports {
        for b in &r.branches {
            for g in b.generators.iter().filter(|g| !g.pass) {
                failures.push(format!("{} [{}]: {} fails (rel {:.2e})", r.id, b.when.join(","), g.generator, g.relative_residual));
            }
            if !b.label_ok() {
                let got = b.classification.as_ref().map(|c| c.to_string()).unwrap_or_else(|| {
                    b.algebra_error.clone().unwrap_or_default()
                });
                failures.push(format!(
                    "{} [{}]: expected {}, got {}{}",
                    r.id,
                    b.when.join(","),
                    b.expected_label.as_deref().unwrap_or("-"),
                    got,
                    if r.conflicts.is_empty() { "" } else { " (documented conflict)" }
                ));
            }
        }
    }
    Ok(Summary {
        rows: reports.len(),
        verified: reports.iter().filter(|r| r.verified()).count(),
        labels_ok: reports.iter().filter(|r| r.labels_ok()).count(),
        labels_conflicted: reports.iter().filter(|r| !r.labels_ok() && !r.conflicts.is_empty()).count(),
        failures,
        seconds: start.elapsed().as_secs_f64(),
        slowest_row_seconds: reports.iter().map(|r| r.seconds).fold(0.0, f64::max),
        reports,
    })
}

pub fn run_all(cfg: &RunConfig) -> Result<Summary, CorpusError> {
    run_rows(&load()?, cfg)
}

/// Rows selected by table and optionally item.
pub fn select(rows: Vec<CorpusRow>, table: Option<u8>, item: Option<u8>) -> Vec<CorpusRow> {
    rows.into_iter()
        .filter(|r| table.is_none_or(|t| r.id.table == t) && item.is_none_or(|i| r.id.item == i))
        .collect()
}
