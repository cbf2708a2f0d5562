//! Select-project-join-union evaluation over CSV databases, producing
//! per-output-tuple lineage as positive DNF over endogenous facts.
//!
//! A database is loaded from a JSON schema plus one header-less CSV per
//! relation. Facts are endogenous (carrying a lineage variable) or exogenous
//! (always present, invisible to lineage). Queries are unions of conjunctive
//! rules in datalog notation, one rule per line:
//!
//! ```text
//! Q(X) :- R(X,Y), S(Y,Z), Z > 5.
//! ```

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Deserialize;
use thiserror::Error;

use crate::adaban::{adaban, ApproxInterval, Budget, Epsilon};
use crate::baselines::{mc_banzhaf, McEstimate};
use crate::dtree::compile_full;
use crate::exact::exaban;
use crate::lineage::{Clause, DnfFunction, VarId, VarSet, VarTable};

/// One row of one relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fact {
    pub relation: String,
    pub tuple: Vec<String>,
    pub endogenous: bool,
    /// Lineage variable; present exactly for endogenous facts.
    pub var: Option<VarId>,
}

impl Fact {
    /// The canonical `R(a,b)` rendering used for lineage variable names.
    pub fn display_name(&self) -> String {
        format!("{}({})", self.relation, self.tuple.join(","))
    }
}

#[derive(Debug, Clone)]
pub struct Relation {
    pub name: String,
    pub arity: usize,
    pub facts: Vec<Fact>,
}

/// Immutable after load; lineage variables are assigned to endogenous facts
/// in (schema relation order, row order), so reloading the same files yields
/// the same numbering.
#[derive(Debug, Clone)]
pub struct Database {
    relations: Vec<Relation>,
    names: VarTable,
}

impl Database {
    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.iter().find(|r| r.name == name)
    }

    /// Lineage variable names, `R(a,b)` style.
    pub fn var_names(&self) -> &VarTable {
        &self.names
    }

    pub fn endogenous_facts(&self) -> impl Iterator<Item = &Fact> {
        self.relations
            .iter()
            .flat_map(|r| r.facts.iter())
            .filter(|f| f.endogenous)
    }

    pub fn fact_by_var(&self, v: VarId) -> Option<&Fact> {
        self.endogenous_facts().find(|f| f.var == Some(v))
    }

    /// Named fact lookup, for attribution requests addressed by tuple.
    pub fn find_fact(&self, relation: &str, tuple: &[String]) -> Option<&Fact> {
        self.relation(relation)?
            .facts
            .iter()
            .find(|f| f.tuple == tuple)
    }

    /// The possible world keeping only the endogenous facts in `keep` (plus
    /// all exogenous facts). Variable numbering is preserved, so this is for
    /// re-evaluation, not for building comparable lineage.
    pub fn possible_world(&self, keep: &BTreeSet<VarId>) -> Database {
        let relations = self
            .relations
            .iter()
            .map(|r| Relation {
                name: r.name.clone(),
                arity: r.arity,
                facts: r
                    .facts
                    .iter()
                    .filter(|f| match f.var {
                        Some(v) => keep.contains(&v),
                        None => true,
                    })
                    .cloned()
                    .collect(),
            })
            .collect();
        Database {
            relations,
            names: self.names.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct SchemaFile {
    relations: Vec<SchemaRelation>,
}

#[derive(Debug, Deserialize)]
struct SchemaRelation {
    name: String,
    arity: usize,
    csv: String,
    endogenous: bool,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema {path}: {source}")]
    Schema {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("relation {0} declared twice")]
    DuplicateRelation(String),
    #[error("{relation} line {line}: expected {want} fields plus an optional flag, got {got}")]
    RowArity {
        relation: String,
        line: u64,
        want: usize,
        got: usize,
    },
    #[error("{relation} line {line}: presence flag must be 0 or 1, got {got:?}")]
    BadFlag {
        relation: String,
        line: u64,
        got: String,
    },
    #[error("{relation}: {source}")]
    Csv {
        relation: String,
        #[source]
        source: csv::Error,
    },
}

/// Loads a database: a JSON schema naming each relation's arity, CSV file,
/// and default endogenous flag, with CSV paths resolved against `csv_dir`.
/// Rows may carry one extra trailing column (1 = exogenous, 0 = endogenous)
/// overriding the relation default. Duplicate rows collapse to one fact.
pub fn load_database(schema_path: &Path, csv_dir: &Path) -> Result<Database, LoadError> {
    let text = fs::read_to_string(schema_path).map_err(|source| LoadError::Io {
        path: schema_path.to_owned(),
        source,
    })?;
    let schema: SchemaFile = serde_json::from_str(&text).map_err(|source| LoadError::Schema {
        path: schema_path.to_owned(),
        source,
    })?;
    let mut names = VarTable::new();
    let mut relations: Vec<Relation> = Vec::with_capacity(schema.relations.len());
    for decl in schema.relations {
        if relations.iter().any(|r| r.name == decl.name) {
            return Err(LoadError::DuplicateRelation(decl.name));
        }
        let path = csv_dir.join(&decl.csv);
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_path(&path)
            .map_err(|source| {
                if source.is_io_error() {
                    match source.into_kind() {
                        csv::ErrorKind::Io(e) => LoadError::Io {
                            path: path.clone(),
                            source: e,
                        },
                        _ => unreachable!("io errors carry an io kind"),
                    }
                } else {
                    LoadError::Csv {
                        relation: decl.name.clone(),
                        source,
                    }
                }
            })?;
        let mut facts = Vec::new();
        let mut seen: HashSet<Vec<String>> = HashSet::new();
        for record in reader.records() {
            let record = record.map_err(|source| LoadError::Csv {
                relation: decl.name.clone(),
                source,
            })?;
            let line = record.position().map_or(0, |p| p.line());
            // Tolerate blank lines.
            if record.len() == 1 && record[0].is_empty() {
                continue;
            }
            let endogenous = match record.len() {
                n if n == decl.arity => decl.endogenous,
                n if n == decl.arity + 1 => match &record[decl.arity] {
                    "0" => true,
                    "1" => false,
                    other => {
                        return Err(LoadError::BadFlag {
                            relation: decl.name.clone(),
                            line,
                            got: other.to_owned(),
                        })
                    }
                },
                n => {
                    return Err(LoadError::RowArity {
                        relation: decl.name.clone(),
                        line,
                        want: decl.arity,
                        got: n,
                    })
                }
            };
            let tuple: Vec<String> = record.iter().take(decl.arity).map(str::to_owned).collect();
            if !seen.insert(tuple.clone()) {
                continue;
            }
            let mut fact = Fact {
                relation: decl.name.clone(),
                tuple,
                endogenous,
                var: None,
            };
            if endogenous {
                fact.var = Some(names.intern(&fact.display_name()));
            }
            facts.push(fact);
        }
        relations.push(Relation {
            name: decl.name,
            arity: decl.arity,
            facts,
        });
    }
    Ok(Database { relations, names })
}

/// An argument position in a query atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Var(String),
    Const(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub relation: String,
    pub args: Vec<Term>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl fmt::Display for CmpOp {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        out.write_str(match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        })
    }
}

/// `Var θ const` filter on a grounding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub var: String,
    pub op: CmpOp,
    pub constant: String,
}

/// One conjunctive rule. Head variables are the free (output) variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjunctiveQuery {
    pub head_name: String,
    pub head_vars: Vec<String>,
    pub atoms: Vec<Atom>,
    pub conditions: Vec<Condition>,
}

/// A union of conjunctive rules sharing one head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub rules: Vec<ConjunctiveQuery>,
}

impl Query {
    pub fn head_arity(&self) -> usize {
        self.rules[0].head_vars.len()
    }

    pub fn is_boolean(&self) -> bool {
        self.head_arity() == 0
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryParseError {
    #[error("no rules found")]
    Empty,
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: head variable {var} is not bound by any atom")]
    UnboundHead { line: usize, var: String },
    #[error("line {line}: condition variable {var} is not bound by any atom")]
    UnboundCondition { line: usize, var: String },
    #[error("rule heads disagree: {first} vs {second}")]
    HeadMismatch { first: String, second: String },
}

fn syntax(line: usize, message: impl Into<String>) -> QueryParseError {
    QueryParseError::Syntax {
        line,
        message: message.into(),
    }
}

fn is_variable(token: &str) -> bool {
    token.starts_with(|c: char| c.is_ascii_uppercase())
}

fn parse_term(token: &str) -> Term {
    if is_variable(token) {
        Term::Var(token.to_owned())
    } else {
        Term::Const(token.to_owned())
    }
}

/// Splits on commas that are not nested inside parentheses.
fn split_top_level(text: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(text[start..].trim());
    parts
}

fn parse_name_and_args(text: &str, line: usize) -> Result<(String, Vec<String>), QueryParseError> {
    let open = text
        .find('(')
        .ok_or_else(|| syntax(line, format!("expected name(args) in {text:?}")))?;
    let close = text
        .rfind(')')
        .filter(|&c| c > open)
        .ok_or_else(|| syntax(line, format!("unbalanced parentheses in {text:?}")))?;
    if !text[close + 1..].trim().is_empty() {
        return Err(syntax(line, format!("trailing input after {text:?}")));
    }
    let name = text[..open].trim();
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(syntax(line, format!("bad relation name in {text:?}")));
    }
    let inner = text[open + 1..close].trim();
    let args = if inner.is_empty() {
        Vec::new()
    } else {
        split_top_level(inner)
            .into_iter()
            .map(str::to_owned)
            .collect()
    };
    if args.iter().any(String::is_empty) {
        return Err(syntax(line, format!("empty argument in {text:?}")));
    }
    Ok((name.to_owned(), args))
}

fn parse_condition(text: &str, line: usize) -> Result<Condition, QueryParseError> {
    // Two-character operators first so "<=" never lexes as "<" then "=".
    const OPS: [(&str, CmpOp); 8] = [
        ("<=", CmpOp::Le),
        (">=", CmpOp::Ge),
        ("!=", CmpOp::Ne),
        ("<>", CmpOp::Ne),
        ("==", CmpOp::Eq),
        ("<", CmpOp::Lt),
        (">", CmpOp::Gt),
        ("=", CmpOp::Eq),
    ];
    for (symbol, op) in OPS {
        if let Some((lhs, rhs)) = text.split_once(symbol) {
            let (lhs, rhs) = (lhs.trim(), rhs.trim());
            if !is_variable(lhs) {
                return Err(syntax(
                    line,
                    format!("condition must compare a variable to a constant: {text:?}"),
                ));
            }
            if rhs.is_empty() || is_variable(rhs) {
                return Err(syntax(
                    line,
                    format!("condition right side must be a constant: {text:?}"),
                ));
            }
            return Ok(Condition {
                var: lhs.to_owned(),
                op,
                constant: rhs.to_owned(),
            });
        }
    }
    Err(syntax(line, format!("unrecognized body item {text:?}")))
}

/// Parses a query file: one rule per line, `%` starts a comment, a trailing
/// period is optional. Multiple rules form a union and must share a head.
pub fn parse_query(text: &str) -> Result<Query, QueryParseError> {
    let mut rules = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let stripped = raw.split('%').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let stripped = stripped.strip_suffix('.').unwrap_or(stripped).trim();
        let (head, body) = stripped
            .split_once(":-")
            .ok_or_else(|| syntax(line, "expected Head(...) :- body"))?;
        let (head_name, head_args) = parse_name_and_args(head.trim(), line)?;
        let head_vars: Vec<String> = head_args;
        if let Some(bad) = head_vars.iter().find(|a| !is_variable(a)) {
            return Err(syntax(line, format!("head argument {bad:?} must be a variable")));
        }
        let mut atoms = Vec::new();
        let mut conditions = Vec::new();
        for item in split_top_level(body.trim()) {
            if item.is_empty() {
                return Err(syntax(line, "empty body item"));
            }
            if item.contains('(') {
                let (relation, args) = parse_name_and_args(item, line)?;
                atoms.push(Atom {
                    relation,
                    args: args.iter().map(|a| parse_term(a)).collect(),
                });
            } else {
                conditions.push(parse_condition(item, line)?);
            }
        }
        if atoms.is_empty() {
            return Err(syntax(line, "rule has no atoms"));
        }
        let bound: HashSet<&str> = atoms
            .iter()
            .flat_map(|a| a.args.iter())
            .filter_map(|t| match t {
                Term::Var(v) => Some(v.as_str()),
                Term::Const(_) => None,
            })
            .collect();
        if let Some(var) = head_vars.iter().find(|v| !bound.contains(v.as_str())) {
            return Err(QueryParseError::UnboundHead {
                line,
                var: var.clone(),
            });
        }
        if let Some(c) = conditions.iter().find(|c| !bound.contains(c.var.as_str())) {
            return Err(QueryParseError::UnboundCondition {
                line,
                var: c.var.clone(),
            });
        }
        rules.push(ConjunctiveQuery {
            head_name,
            head_vars,
            atoms,
            conditions,
        });
    }
    match rules.first() {
        None => Err(QueryParseError::Empty),
        Some(first) => {
            let signature = |r: &ConjunctiveQuery| format!("{}/{}", r.head_name, r.head_vars.len());
            if let Some(other) = rules.iter().find(|r| signature(r) != signature(first)) {
                return Err(QueryParseError::HeadMismatch {
                    first: signature(first),
                    second: signature(other),
                });
            }
            Ok(Query { rules })
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("relation {relation} used with {got} arguments, arity is {want}")]
    ArityMismatch {
        relation: String,
        got: usize,
        want: usize,
    },
}

/// CSV is untyped: compare numerically when both sides are finite decimal
/// numbers, lexicographically otherwise.
fn compare_values(a: &str, b: &str) -> Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => {
            x.partial_cmp(&y).expect("finite floats compare")
        }
        _ => a.cmp(b),
    }
}

fn condition_holds(c: &Condition, value: &str) -> bool {
    let ord = compare_values(value, &c.constant);
    match c.op {
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Le => ord != Ordering::Greater,
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::Ne => ord != Ordering::Equal,
        CmpOp::Ge => ord != Ordering::Less,
        CmpOp::Gt => ord == Ordering::Greater,
    }
}

/// Left-to-right nested-loop enumeration of the rule's satisfying groundings,
/// starting from `fixed` variable bindings. Calls `found` with the binding
/// environment and the facts used, one call per grounding.
fn for_each_grounding<'d, F>(
    rule: &ConjunctiveQuery,
    db: &'d Database,
    fixed: &HashMap<String, String>,
    found: &mut F,
) -> Result<(), EvalError>
where
    F: FnMut(&HashMap<String, String>, &[&'d Fact]),
{
    // Resolve and arity-check every atom before enumerating anything, so a
    // rule over a bad schema fails even when an earlier atom has no rows.
    let mut resolved = Vec::with_capacity(rule.atoms.len());
    for atom in &rule.atoms {
        let relation = db
            .relation(&atom.relation)
            .ok_or_else(|| EvalError::UnknownRelation(atom.relation.clone()))?;
        if relation.arity != atom.args.len() {
            return Err(EvalError::ArityMismatch {
                relation: atom.relation.clone(),
                got: atom.args.len(),
                want: relation.arity,
            });
        }
        resolved.push(relation);
    }
    let mut env = fixed.clone();
    let mut used: Vec<&Fact> = Vec::with_capacity(rule.atoms.len());
    descend(rule, &resolved, 0, &mut env, &mut used, found);
    Ok(())
}

fn descend<'d, F>(
    rule: &ConjunctiveQuery,
    resolved: &[&'d Relation],
    depth: usize,
    env: &mut HashMap<String, String>,
    used: &mut Vec<&'d Fact>,
    found: &mut F,
) where
    F: FnMut(&HashMap<String, String>, &[&'d Fact]),
{
    if depth == rule.atoms.len() {
        if rule
            .conditions
            .iter()
            .all(|c| condition_holds(c, &env[&c.var]))
        {
            found(env, used);
        }
        return;
    }
    let atom = &rule.atoms[depth];
    'facts: for fact in &resolved[depth].facts {
        let mut bound_here: Vec<&String> = Vec::new();
        for (term, value) in atom.args.iter().zip(&fact.tuple) {
            let matched = match term {
                Term::Const(c) => c == value,
                Term::Var(v) => match env.get(v) {
                    Some(existing) => existing == value,
                    None => {
                        env.insert(v.clone(), value.clone());
                        bound_here.push(v);
                        true
                    }
                },
            };
            if !matched {
                for v in bound_here {
                    env.remove(v);
                }
                continue 'facts;
            }
        }
        let names: Vec<String> = bound_here.into_iter().cloned().collect();
        used.push(fact);
        descend(rule, resolved, depth + 1, env, used, found);
        used.pop();
        for v in names {
            env.remove(&v);
        }
    }
}

/// Evaluates the query under set semantics. A Boolean query yields a set
/// containing the empty tuple when satisfied, the empty set otherwise.
pub fn evaluate(q: &Query, db: &Database) -> Result<BTreeSet<Vec<String>>, EvalError> {
    let mut out = BTreeSet::new();
    for rule in &q.rules {
        let mut found = |env: &HashMap<String, String>, _facts: &[&Fact]| {
            let tuple = rule
                .head_vars
                .iter()
                .map(|v| env[v].clone())
                .collect::<Vec<_>>();
            out.insert(tuple);
        };
        for_each_grounding(rule, db, &HashMap::new(), &mut found)?;
    }
    Ok(out)
}

#[derive(Debug, Error)]
pub enum LineageError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("tuple ({0}) is not in the query result")]
    NotInResult(String),
    #[error("tuple has {got} values, the query head has {want}")]
    TupleArity { got: usize, want: usize },
}

/// Lineage of output tuple `t`: one clause per satisfying grounding, holding
/// the lineage variables of the endogenous facts it uses. Exogenous facts
/// contribute nothing (they are always present); a grounding using only
/// exogenous facts makes the lineage constant true. Duplicate variables
/// within a clause and duplicate clauses across groundings collapse, so
/// clauses can be shorter than the atom count. The universe is exactly the
/// variables that appear in some clause.
pub fn lineage(q: &Query, db: &Database, t: &[String]) -> Result<DnfFunction, LineageError> {
    if t.len() != q.head_arity() {
        return Err(LineageError::TupleArity {
            got: t.len(),
            want: q.head_arity(),
        });
    }
    let mut clauses: BTreeSet<Clause> = BTreeSet::new();
    let mut grounded = false;
    for rule in &q.rules {
        let mut fixed = HashMap::new();
        let mut consistent = true;
        for (var, value) in rule.head_vars.iter().zip(t) {
            match fixed.insert(var.clone(), value.clone()) {
                Some(previous) if &previous != value => {
                    consistent = false;
                    break;
                }
                _ => {}
            }
        }
        // A repeated head variable with conflicting values has no groundings.
        if !consistent {
            continue;
        }
        let mut found = |_env: &HashMap<String, String>, facts: &[&Fact]| {
            grounded = true;
            let vars: BTreeSet<VarId> = facts.iter().filter_map(|f| f.var).collect();
            clauses.insert(Clause::from_vec(vars.into_iter().collect()));
        };
        for_each_grounding(rule, db, &fixed, &mut found)?;
    }
    if !grounded {
        return Err(LineageError::NotInResult(format!("({})", t.join(","))));
    }
    let universe: VarSet = clauses.iter().flat_map(|c| c.iter()).collect();
    Ok(DnfFunction::from_clauses(universe, clauses.into_iter().collect())
        .expect("clause variables were collected into the universe"))
}

/// How to attribute a fact's contribution.
#[derive(Debug, Clone)]
pub enum Method {
    Exact,
    Approx { eps: Epsilon, budget: Budget },
    MonteCarlo { samples_per_var: u64, seed: u64 },
}

/// Attribution result, tagged by the method that produced it.
#[derive(Debug, Clone)]
pub enum FactValue {
    Exact(BigInt),
    Interval(ApproxInterval),
    Estimate(McEstimate),
}

#[derive(Debug, Error)]
pub enum FactError {
    #[error("fact {0} is exogenous; only endogenous facts have attributions")]
    Exogenous(String),
    #[error(transparent)]
    Lineage(#[from] LineageError),
}

/// Banzhaf value of `fact` in the lineage of output tuple `t`, by the chosen
/// method. A fact whose variable does not reach the lineage gets value 0.
pub fn banzhaf_fact(
    q: &Query,
    db: &Database,
    t: &[String],
    fact: &Fact,
    method: &Method,
) -> Result<FactValue, FactError> {
    let Some(var) = fact.var else {
        return Err(FactError::Exogenous(fact.display_name()));
    };
    let phi = lineage(q, db, t)?;
    if !phi.universe().contains(var) {
        return Ok(match method {
            Method::Exact => FactValue::Exact(BigInt::zero()),
            Method::Approx { .. } => FactValue::Interval(ApproxInterval::exact_zero()),
            Method::MonteCarlo {
                samples_per_var,
                seed,
            } => FactValue::Estimate(McEstimate {
                estimate: BigRational::zero(),
                samples: *samples_per_var,
                seed: *seed,
            }),
        });
    }
    Ok(match method {
        Method::Exact => {
            let tree = compile_full(phi);
            let result = exaban(&tree, var).expect("complete tree, variable in universe");
            FactValue::Exact(result.banzhaf)
        }
        Method::Approx { eps, budget } => {
            let interval = adaban(phi, var, eps, budget).expect("variable in universe");
            FactValue::Interval(interval)
        }
        Method::MonteCarlo {
            samples_per_var,
            seed,
        } => {
            let estimate =
                mc_banzhaf(&phi, var, *samples_per_var, *seed).expect("variable in universe");
            FactValue::Estimate(estimate)
        }
    })
}

/// Pairwise atom-set containment test over the rule's variables: for every
/// two variables, their atom sets are nested or disjoint.
pub fn is_hierarchical(rule: &ConjunctiveQuery) -> bool {
    let mut at: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for (i, atom) in rule.atoms.iter().enumerate() {
        for term in &atom.args {
            if let Term::Var(v) = term {
                at.entry(v).or_default().insert(i);
            }
        }
    }
    let sets: Vec<&BTreeSet<usize>> = at.values().collect();
    sets.iter().enumerate().all(|(i, a)| {
        sets[i + 1..]
            .iter()
            .all(|b| a.is_subset(b) || b.is_subset(a) || a.is_disjoint(b))
    })
}

/// Hierarchy status per disjunct, in rule order.
pub fn hierarchical_by_rule(q: &Query) -> Vec<bool> {
    q.rules.iter().map(is_hierarchical).collect()
}
