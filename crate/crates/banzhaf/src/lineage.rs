//! Positive DNF lineage functions: representation, parsing, restriction, and the
//! structural decompositions (common-factor extraction, connected components) used
//! by the d-tree compiler.
//!
//! A [`DnfFunction`] is a positive (negation-free) DNF over an explicit variable
//! universe. The universe may strictly contain the variables appearing in clauses;
//! model counts are always taken over the full universe. Constants are represented
//! explicitly, never through empty clause lists with implicit meaning.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Identifier of a propositional variable. Ids are dense per parsed line but the
/// core algorithms never assume density; a universe is an arbitrary sorted id set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// Bijection between variable ids and their external names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VarTable {
    names: Vec<String>,
    ids: HashMap<String, VarId>,
}

impl VarTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id for `name`, interning it if unseen.
    pub fn intern(&mut self, name: &str) -> VarId {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = VarId(self.names.len() as u32);
        self.names.push(name.to_owned());
        self.ids.insert(name.to_owned(), id);
        id
    }

    pub fn id(&self, name: &str) -> Option<VarId> {
        self.ids.get(name).copied()
    }

    /// Name for `id`; falls back to the positional form for foreign ids.
    pub fn name(&self, id: VarId) -> &str {
        self.names
            .get(id.0 as usize)
            .map(String::as_str)
            .unwrap_or("?")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &str)> {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| (VarId(i as u32), n.as_str()))
    }
}

/// Sorted, duplicate-free set of variable ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarSet(Vec<VarId>);

impl VarSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_vec(mut vars: Vec<VarId>) -> Self {
        vars.sort_unstable();
        vars.dedup();
        Self(vars)
    }

    pub fn singleton(v: VarId) -> Self {
        Self(vec![v])
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = VarId> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[VarId] {
        &self.0
    }

    /// Position of `v` in sorted order, usable as a dense bit index.
    pub fn position(&self, v: VarId) -> Option<usize> {
        self.0.binary_search(&v).ok()
    }

    pub fn union(&self, other: &VarSet) -> VarSet {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        out.extend_from_slice(&self.0);
        out.extend_from_slice(&other.0);
        VarSet::from_vec(out)
    }

    pub fn without(&self, v: VarId) -> VarSet {
        VarSet(self.0.iter().copied().filter(|&u| u != v).collect())
    }

    pub fn is_subset_of(&self, other: &VarSet) -> bool {
        self.0.iter().all(|&v| other.contains(v))
    }

    pub fn is_disjoint_from(&self, other: &VarSet) -> bool {
        self.0.iter().all(|&v| !other.contains(v))
    }
}

impl FromIterator<VarId> for VarSet {
    fn from_iter<T: IntoIterator<Item = VarId>>(iter: T) -> Self {
        VarSet::from_vec(iter.into_iter().collect())
    }
}

/// Conjunction of positive variables, kept sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clause(VarSet);

impl Clause {
    pub fn from_vec(vars: Vec<VarId>) -> Self {
        Self(VarSet::from_vec(vars))
    }

    pub fn vars(&self) -> &VarSet {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.0.contains(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = VarId> + '_ {
        self.0.iter()
    }

    fn without(&self, v: VarId) -> Clause {
        Clause(self.0.without(v))
    }
}

/// Positive DNF over an explicit universe.
///
/// Invariants (enforced by the constructors):
/// - clauses are sorted and deduplicated, clause variables sorted;
/// - every clause variable belongs to the universe;
/// - `constant` is `Some` exactly when the clause list is empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DnfFunction {
    universe: VarSet,
    clauses: Vec<Clause>,
    constant: Option<bool>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FunctionError {
    #[error("clause variable {0} is not in the declared universe")]
    ClauseVarOutsideUniverse(VarId),
    #[error("variable {0} is not in the function's universe")]
    NotInUniverse(VarId),
}

impl DnfFunction {
    /// Builds a function from raw clauses. An empty clause makes the function
    /// constant 1; an empty clause list makes it constant 0.
    pub fn from_clauses(
        universe: VarSet,
        clauses: Vec<Clause>,
    ) -> Result<DnfFunction, FunctionError> {
        for clause in &clauses {
            if clause.is_empty() {
                return Ok(DnfFunction::constant(true, universe));
            }
            for v in clause.iter() {
                if !universe.contains(v) {
                    return Err(FunctionError::ClauseVarOutsideUniverse(v));
                }
            }
        }
        if clauses.is_empty() {
            return Ok(DnfFunction::constant(false, universe));
        }
        let mut clauses = clauses;
        clauses.sort_unstable();
        clauses.dedup();
        Ok(DnfFunction {
            universe,
            clauses,
            constant: None,
        })
    }

    pub fn constant(value: bool, universe: VarSet) -> DnfFunction {
        DnfFunction {
            universe,
            clauses: Vec::new(),
            constant: Some(value),
        }
    }

    pub fn universe(&self) -> &VarSet {
        &self.universe
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn as_constant(&self) -> Option<bool> {
        self.constant
    }

    pub fn is_constant(&self) -> bool {
        self.constant.is_some()
    }

    /// `Some(v)` when the function is exactly the literal `v` over universe `{v}`.
    pub fn as_literal(&self) -> Option<VarId> {
        match self.clauses.as_slice() {
            [c] if c.len() == 1 && self.universe.len() == 1 => Some(c.vars().as_slice()[0]),
            _ => None,
        }
    }

    /// Set of variables occurring in at least one clause.
    pub fn clause_vars(&self) -> VarSet {
        self.clauses
            .iter()
            .flat_map(|c| c.iter())
            .collect::<VarSet>()
    }

    /// Total number of literal occurrences.
    pub fn size(&self) -> usize {
        self.clauses.iter().map(Clause::len).sum()
    }

    pub fn eval<F: Fn(VarId) -> bool>(&self, truth: F) -> bool {
        if let Some(value) = self.constant {
            return value;
        }
        self.clauses.iter().any(|c| c.iter().all(&truth))
    }

    /// Cofactor on `x`: removes `x` from the universe and simplifies the clauses.
    pub fn restrict(&self, x: VarId, value: bool) -> Result<DnfFunction, FunctionError> {
        if !self.universe.contains(x) {
            return Err(FunctionError::NotInUniverse(x));
        }
        let universe = self.universe.without(x);
        if let Some(c) = self.constant {
            return Ok(DnfFunction::constant(c, universe));
        }
        let clauses: Vec<Clause> = if value {
            // x := 1 deletes the literal; an emptied clause forces constant 1,
            // which from_clauses detects.
            self.clauses.iter().map(|c| c.without(x)).collect()
        } else {
            // x := 0 kills every clause mentioning x.
            self.clauses
                .iter()
                .filter(|c| !c.contains(x))
                .cloned()
                .collect()
        };
        DnfFunction::from_clauses(universe, clauses)
    }

    /// Variable occurring in every clause, smallest id on ties, with the
    /// factored remainder over the shrunken universe.
    pub fn factor_common(&self) -> Option<(VarId, DnfFunction)> {
        if self.is_constant() {
            return None;
        }
        let mut common: Vec<VarId> = self.clauses[0].vars().as_slice().to_vec();
        for clause in &self.clauses[1..] {
            common.retain(|&v| clause.contains(v));
            if common.is_empty() {
                return None;
            }
        }
        let x = common[0];
        let universe = self.universe.without(x);
        let clauses: Vec<Clause> = self.clauses.iter().map(|c| c.without(x)).collect();
        let rest = DnfFunction::from_clauses(universe, clauses)
            .expect("factored clauses stay inside the shrunken universe");
        Some((x, rest))
    }

    /// Splits the clauses into variable-connected components, each over exactly
    /// its own variables. Universe variables in no clause form one trailing
    /// constant-0 pseudo-component. Order follows first clause appearance.
    pub fn components(&self) -> Vec<DnfFunction> {
        if self.is_constant() {
            return vec![self.clone()];
        }
        // Union-find over clause indices, joined through shared variables.
        let mut parent: Vec<usize> = (0..self.clauses.len()).collect();
        fn find(parent: &mut [usize], i: usize) -> usize {
            let mut root = i;
            while parent[root] != root {
                root = parent[root];
            }
            let mut cur = i;
            while parent[cur] != root {
                let next = parent[cur];
                parent[cur] = root;
                cur = next;
            }
            root
        }
        let mut owner: HashMap<VarId, usize> = HashMap::new();
        for (i, clause) in self.clauses.iter().enumerate() {
            for v in clause.iter() {
                match owner.get(&v) {
                    Some(&j) => {
                        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                        if a != b {
                            parent[a] = b;
                        }
                    }
                    None => {
                        owner.insert(v, i);
                    }
                }
            }
        }
        // Group clause indices by root, ordered by first clause appearance.
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        let mut group_of_root: HashMap<usize, usize> = HashMap::new();
        for i in 0..self.clauses.len() {
            let root = find(&mut parent, i);
            match group_of_root.get(&root) {
                Some(&g) => groups[g].1.push(i),
                None => {
                    group_of_root.insert(root, groups.len());
                    groups.push((root, vec![i]));
                }
            }
        }
        let mut out: Vec<DnfFunction> = groups
            .into_iter()
            .map(|(_, idxs)| {
                let clauses: Vec<Clause> =
                    idxs.into_iter().map(|i| self.clauses[i].clone()).collect();
                let universe: VarSet = clauses.iter().flat_map(|c| c.iter()).collect();
                DnfFunction::from_clauses(universe, clauses)
                    .expect("component universe covers its clauses")
            })
            .collect();
        let isolated: VarSet = self
            .universe
            .iter()
            .filter(|&v| !owner.contains_key(&v))
            .collect();
        if !isolated.is_empty() {
            out.push(DnfFunction::constant(false, isolated));
        }
        out
    }

    /// True when clause variable sets are pairwise disjoint (vacuously for
    /// constants). Independent-DNF functions admit linear-time model counting.
    pub fn is_idnf(&self) -> bool {
        let mut seen = VarSet::new();
        for clause in &self.clauses {
            if !clause.vars().is_disjoint_from(&seen) {
                return false;
            }
            seen = seen.union(clause.vars());
        }
        true
    }

    /// Renders the function in the lineage grammar, with a `vars{...}` prefix
    /// whenever the universe exceeds the clause variables.
    pub fn render(&self, vars: &VarTable) -> String {
        let mut out = String::new();
        if self.is_constant() || self.clause_vars() != self.universe {
            out.push_str("vars{");
            let mut first = true;
            for v in self.universe.iter() {
                if !first {
                    out.push(',');
                }
                out.push_str(vars.name(v));
                first = false;
            }
            out.push_str("} ");
        }
        match self.constant {
            Some(true) => out.push('1'),
            Some(false) => out.push('0'),
            None => {
                let mut first = true;
                for clause in &self.clauses {
                    if !first {
                        out.push_str(" | ");
                    }
                    first = false;
                    if clause.len() == 1 {
                        out.push_str(vars.name(clause.vars().as_slice()[0]));
                    } else {
                        out.push('(');
                        let mut inner_first = true;
                        for v in clause.iter() {
                            if !inner_first {
                                out.push_str(" & ");
                            }
                            inner_first = false;
                            out.push_str(vars.name(v));
                        }
                        out.push(')');
                    }
                }
            }
        }
        out
    }
}

/// One parsed lineage line: optional instance id, the function, and its names.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedLineage {
    pub id: Option<String>,
    pub function: DnfFunction,
    pub vars: VarTable,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("empty input")]
    Empty,
    #[error("syntax error at byte {offset}: expected {expected}")]
    Syntax { offset: usize, expected: &'static str },
    #[error("duplicate variable `{name}` at byte {offset}")]
    DuplicateVar { name: String, offset: usize },
    #[error("variable `{name}` at byte {offset} is not in the declared universe")]
    UndeclaredVar { name: String, offset: usize },
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Self { text, pos: 0 }
    }

    fn skip_ws(&mut self) {
        let rest = &self.text[self.pos..];
        let trimmed = rest.trim_start();
        self.pos += rest.len() - trimmed.len();
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    /// Parses a name token: `[A-Za-z_][A-Za-z0-9_.]*`.
    fn name(&mut self) -> Result<(&'a str, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                self.bump();
            }
            _ => {
                return Err(ParseError::Syntax {
                    offset: start,
                    expected: "variable name",
                })
            }
        }
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                self.bump();
            } else {
                break;
            }
        }
        Ok((&self.text[start..self.pos], start))
    }
}

/// Parses one lineage line: `[id TAB] ["vars{" names "}"] clause ("|" clause)*`.
///
/// Variable ids are assigned by declaration order when a `vars{...}` prefix is
/// present, otherwise by first appearance in the formula.
pub fn parse_dnf(line: &str) -> Result<ParsedLineage, ParseError> {
    let (id, body) = match line.find('\t') {
        Some(tab) => {
            let id = line[..tab].trim();
            let id = if id.is_empty() {
                None
            } else {
                Some(id.to_owned())
            };
            (id, &line[tab + 1..])
        }
        None => (None, line),
    };
    if body.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut cur = Cursor::new(body);
    let mut vars = VarTable::new();

    cur.skip_ws();
    let declared = if body[cur.pos..].starts_with("vars{") {
        cur.pos += "vars{".len();
        loop {
            let (name, offset) = cur.name()?;
            if vars.id(name).is_some() {
                return Err(ParseError::DuplicateVar {
                    name: name.to_owned(),
                    offset,
                });
            }
            vars.intern(name);
            cur.skip_ws();
            if cur.eat(',') {
                continue;
            }
            if cur.eat('}') {
                break;
            }
            return Err(ParseError::Syntax {
                offset: cur.pos,
                expected: "`,` or `}`",
            });
        }
        true
    } else {
        false
    };

    let mut lookup = |cur: &mut Cursor| -> Result<VarId, ParseError> {
        let (name, offset) = cur.name()?;
        if declared {
            vars.id(name).ok_or_else(|| ParseError::UndeclaredVar {
                name: name.to_owned(),
                offset,
            })
        } else {
            Ok(vars.intern(name))
        }
    };

    let mut clauses: Vec<Clause> = Vec::new();
    loop {
        cur.skip_ws();
        let clause = if cur.eat('(') {
            let mut members = vec![lookup(&mut cur)?];
            loop {
                cur.skip_ws();
                if cur.eat('&') {
                    members.push(lookup(&mut cur)?);
                } else if cur.eat(')') {
                    break;
                } else {
                    return Err(ParseError::Syntax {
                        offset: cur.pos,
                        expected: "`&` or `)`",
                    });
                }
            }
            Clause::from_vec(members)
        } else {
            Clause::from_vec(vec![lookup(&mut cur)?])
        };
        clauses.push(clause);
        cur.skip_ws();
        if !cur.eat('|') {
            break;
        }
    }
    cur.skip_ws();
    if cur.pos != body.len() {
        return Err(ParseError::Syntax {
            offset: cur.pos,
            expected: "`|` or end of line",
        });
    }

    let universe: VarSet = (0..vars.len() as u32).map(VarId).collect();
    let function = DnfFunction::from_clauses(universe, clauses)
        .expect("parsed clause variables are interned into the universe");
    Ok(ParsedLineage { id, function, vars })
}

/// One instance of a batch lineage file (blank lines skipped).
#[derive(Debug, Clone, PartialEq)]
pub struct LineageInstance {
    pub id: String,
    pub function: DnfFunction,
    pub vars: VarTable,
}

/// Parses a multi-line lineage file; instances without an explicit id are named
/// by their 1-based line number.
pub fn parse_lineage_file(text: &str) -> Result<Vec<LineageInstance>, (usize, ParseError)> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = parse_dnf(line).map_err(|e| (lineno + 1, e))?;
        out.push(LineageInstance {
            id: parsed.id.unwrap_or_else(|| format!("line{}", lineno + 1)),
            function: parsed.function,
            vars: parsed.vars,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> ParsedLineage {
        parse_dnf(s).expect("parse")
    }

    fn v(i: u32) -> VarId {
        VarId(i)
    }

    #[test]
    fn parses_clauses_and_assigns_ids_by_first_appearance() {
        let p = parse("(x & y) | (x & z) | u");
        assert_eq!(p.vars.name(v(0)), "x");
        assert_eq!(p.vars.name(v(1)), "y");
        assert_eq!(p.vars.name(v(2)), "z");
        assert_eq!(p.vars.name(v(3)), "u");
        assert_eq!(p.function.universe().len(), 4);
        assert_eq!(p.function.clauses().len(), 3);
        assert_eq!(p.id, None);
    }

    #[test]
    fn parses_id_prefix_and_vars_declaration() {
        let p = parse("q7\tvars{x,y,z,u} u");
        assert_eq!(p.id.as_deref(), Some("q7"));
        assert_eq!(p.function.universe().len(), 4);
        assert_eq!(p.function.clauses().len(), 1);
        assert_eq!(p.vars.id("u"), Some(v(3)));
    }

    #[test]
    fn declared_universe_assigns_ids_in_declaration_order() {
        let p = parse("vars{a,b,c} (c & b)");
        assert_eq!(p.vars.id("a"), Some(v(0)));
        assert_eq!(p.vars.id("c"), Some(v(2)));
        assert_eq!(p.function.clause_vars(), VarSet::from_vec(vec![v(1), v(2)]));
    }

    #[test]
    fn rejects_malformed_input_with_offsets() {
        match parse_dnf("(x & ) | y") {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert_eq!(parse_dnf("   "), Err(ParseError::Empty));
        match parse_dnf("vars{x,x} x") {
            Err(ParseError::DuplicateVar { name, .. }) => assert_eq!(name, "x"),
            other => panic!("expected duplicate error, got {other:?}"),
        }
        match parse_dnf("vars{x} x | y") {
            Err(ParseError::UndeclaredVar { name, .. }) => assert_eq!(name, "y"),
            other => panic!("expected undeclared error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_clauses_and_literals_collapse() {
        let p = parse("(x & x & y) | (y & x)");
        assert_eq!(p.function.clauses().len(), 1);
        assert_eq!(p.function.clauses()[0].len(), 2);
    }

    #[test]
    fn restrict_to_one_drops_literal_and_contracts_universe() {
        let p = parse("(x & y) | (x & z) | u");
        let x = p.vars.id("x").unwrap();
        let f1 = p.function.restrict(x, true).unwrap();
        assert_eq!(f1.universe().len(), 3);
        assert!(!f1.universe().contains(x));
        // y | z | u
        assert_eq!(f1.clauses().len(), 3);
        assert!(f1.clauses().iter().all(|c| c.len() == 1));
    }

    #[test]
    fn restrict_to_zero_drops_clauses() {
        let p = parse("(x & y) | (x & z) | u");
        let x = p.vars.id("x").unwrap();
        let f0 = p.function.restrict(x, false).unwrap();
        assert_eq!(f0.clauses().len(), 1);
        assert_eq!(f0.universe().len(), 3);
    }

    #[test]
    fn restrict_can_produce_constants_over_leftover_universe() {
        let p = parse("x | (x & y)");
        let x = p.vars.id("x").unwrap();
        let f1 = p.function.restrict(x, true).unwrap();
        assert_eq!(f1.as_constant(), Some(true));
        assert_eq!(f1.universe().len(), 1);
        let f0 = p.function.restrict(x, false).unwrap();
        assert_eq!(f0.as_constant(), Some(false));
        assert_eq!(f0.universe().len(), 1);
    }

    #[test]
    fn restrict_rejects_foreign_variable() {
        let p = parse("x | y");
        assert_eq!(
            p.function.restrict(v(9), true),
            Err(FunctionError::NotInUniverse(v(9)))
        );
    }

    #[test]
    fn factor_common_extracts_smallest_shared_variable() {
        let p = parse("(x & y) | (x & z)");
        let (x, rest) = p.function.factor_common().unwrap();
        assert_eq!(x, p.vars.id("x").unwrap());
        assert_eq!(rest.clauses().len(), 2);
        assert_eq!(rest.universe().len(), 2);

        // b is the smallest id among variables shared by all clauses.
        let q = parse("(a & b & c) | (b & c & d)");
        let (got, _) = q.function.factor_common().unwrap();
        assert_eq!(got, q.vars.id("b").unwrap());

        assert!(parse("(x & y) | (z & u)").function.factor_common().is_none());
    }

    #[test]
    fn factor_common_of_single_clause_yields_constant_remainder() {
        let p = parse("vars{u,y,z} u");
        let (u, rest) = p.function.factor_common().unwrap();
        assert_eq!(u, p.vars.id("u").unwrap());
        assert_eq!(rest.as_constant(), Some(true));
        assert_eq!(rest.universe().len(), 2);
    }

    #[test]
    fn components_split_by_shared_variables() {
        let p = parse("(x & y) | (y & z) | (u & w)");
        let comps = p.function.components();
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].clauses().len(), 2);
        assert_eq!(comps[0].universe().len(), 3);
        assert_eq!(comps[1].clauses().len(), 1);
    }

    #[test]
    fn isolated_universe_vars_form_single_constant_zero_component() {
        let p = parse("vars{x,y,a,b} x | y");
        let comps = p.function.components();
        assert_eq!(comps.len(), 3);
        let last = comps.last().unwrap();
        assert_eq!(last.as_constant(), Some(false));
        assert_eq!(last.universe().len(), 2);
        assert!(last.universe().contains(p.vars.id("a").unwrap()));
        assert!(last.universe().contains(p.vars.id("b").unwrap()));
    }

    #[test]
    fn connected_function_has_single_component() {
        let p = parse("(x & y) | (y & z)");
        assert_eq!(p.function.components().len(), 1);
    }

    #[test]
    fn idnf_recognition() {
        assert!(parse("(x & y) | u").function.is_idnf());
        assert!(!parse("(x & y) | (x & z)").function.is_idnf());
        assert!(parse("vars{x} x").function.is_idnf());
        let c0 = DnfFunction::constant(false, VarSet::from_vec(vec![v(0)]));
        assert!(c0.is_idnf());
    }

    #[test]
    fn render_round_trips() {
        for text in [
            "(x & y) | (x & z) | u",
            "x",
            "vars{x,y,z,u} u",
            "(a.1 & b_2) | c",
        ] {
            let p = parse(text);
            let rendered = p.function.render(&p.vars);
            let q = parse(&rendered);
            assert_eq!(p.function, q.function, "round trip failed for {text}");
            assert_eq!(p.vars.len(), q.vars.len());
        }
    }

    #[test]
    fn render_marks_constants_with_universe() {
        let mut vars = VarTable::new();
        let x = vars.intern("x");
        let f = DnfFunction::constant(true, VarSet::singleton(x));
        assert_eq!(f.render(&vars), "vars{x} 1");
    }

    #[test]
    fn eval_matches_clause_semantics() {
        let p = parse("(x & y) | z");
        let x = p.vars.id("x").unwrap();
        let y = p.vars.id("y").unwrap();
        let z = p.vars.id("z").unwrap();
        assert!(p.function.eval(|v| v == x || v == y));
        assert!(p.function.eval(|v| v == z));
        assert!(!p.function.eval(|v| v == x));
        assert!(!p.function.eval(|_| false));
    }

    #[test]
    fn batch_files_skip_blank_lines_and_number_instances() {
        let text = "x | y\n\nq2\t(a & b)\n";
        let instances = parse_lineage_file(text).unwrap();
        assert_eq!(instances.len(), 2);
        assert_eq!(instances[0].id, "line1");
        assert_eq!(instances[1].id, "q2");
    }
}
