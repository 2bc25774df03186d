//! Relational languages, canonical finite structures, quantifier-free
//! formulas and interpretations between languages.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::space::{all_perms, Injection, VertexSet, FACTORIAL_CAP};

/// Default cap on the number of structures `enumerate_structures` produces.
pub const STRUCTURE_CAP: u64 = 1 << 24;

/// A predicate symbol.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Predicate {
    pub name: String,
    pub arity: usize,
}

/// A finite relational language. Predicates are kept sorted by name, which
/// fixes the canonical predicate order used everywhere.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Language {
    predicates: Vec<Predicate>,
}

impl Language {
    pub fn new<S: Into<String>>(preds: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let mut predicates: Vec<Predicate> =
            preds.into_iter().map(|(n, arity)| Predicate { name: n.into(), arity }).collect();
        predicates.sort();
        for p in &predicates {
            if p.arity == 0 {
                return Err(Error::InvalidLanguage(format!("`{}` has arity 0", p.name)));
            }
            if p.name.is_empty() || !p.name.chars().all(is_name_char) {
                return Err(Error::InvalidLanguage(format!("bad predicate name `{}`", p.name)));
            }
        }
        if let Some(w) = predicates.windows(2).find(|w| w[0].name == w[1].name) {
            return Err(Error::InvalidLanguage(format!("duplicate symbol `{}`", w[0].name)));
        }
        Ok(Language { predicates })
    }

    pub fn empty() -> Self {
        Language::default()
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.predicates
    }

    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.predicates.binary_search_by(|p| p.name.as_str().cmp(name)).ok()
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.index_of(name).map(|i| self.predicates[i].arity)
    }

    pub fn max_arity(&self) -> usize {
        self.predicates.iter().map(|p| p.arity).max().unwrap_or(0)
    }

    pub fn is_sublanguage_of(&self, other: &Language) -> bool {
        self.predicates.iter().all(|p| other.arity(&p.name) == Some(p.arity))
    }

    /// Union with `other`, renaming colliding symbols of `other` by appending
    /// primes. Returns the union and the new names of `other`'s symbols.
    pub fn disjoint_union(&self, other: &Language) -> (Language, BTreeMap<String, String>) {
        let mut names: BTreeSet<String> = self.predicates.iter().map(|p| p.name.clone()).collect();
        let mut renames = BTreeMap::new();
        let mut preds = self.predicates.clone();
        for p in &other.predicates {
            let mut name = p.name.clone();
            while names.contains(&name) {
                name.push('\'');
            }
            names.insert(name.clone());
            renames.insert(p.name.clone(), name.clone());
            preds.push(Predicate { name, arity: p.arity });
        }
        preds.sort();
        (Language { predicates: preds }, renames)
    }

    /// Renames symbols; names missing from `map` are kept.
    pub fn rename(&self, map: &BTreeMap<String, String>) -> Result<Language> {
        Language::new(
            self.predicates.iter().map(|p| (map.get(&p.name).cloned().unwrap_or_else(|| p.name.clone()), p.arity)),
        )
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.predicates.iter().map(|p| format!("{}/{}", p.name, p.arity)).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || "_@/'.-".contains(c)
}

/// Injective tuples of length `k` over `{0..n}` in lexicographic order.
pub fn injective_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                cur.push(v);
                rec(n, k, cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(n, k, &mut Vec::with_capacity(k), &mut vec![false; n], &mut out);
    }
    out
}

/// Compact bitset identifying a structure on a fixed `(language, n)`; bit `b`
/// is the `b`-th entry of the matching [`TupleIndex`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct StructureCode(pub SmallVec<[u64; 2]>);

impl StructureCode {
    pub fn zeros(bits: usize) -> Self {
        StructureCode(SmallVec::from_elem(0, bits.div_ceil(64).max(1)))
    }

    pub fn from_u64(bits: usize, value: u64) -> Self {
        let mut c = StructureCode::zeros(bits);
        c.0[0] = value;
        c
    }

    pub fn set(&mut self, b: usize) {
        self.0[b / 64] |= 1 << (b % 64);
    }

    pub fn get(&self, b: usize) -> bool {
        self.0[b / 64] >> (b % 64) & 1 == 1
    }

    /// Low 64 bits.
    pub fn low(&self) -> u64 {
        self.0[0]
    }
}

/// All `(predicate, injective tuple)` slots on `n` vertices, predicates in
/// language order and tuples lexicographic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleIndex {
    n: usize,
    entries: Vec<(usize, Vec<usize>)>,
    offsets: Vec<usize>,
}

impl TupleIndex {
    pub fn new(lang: &Language, n: usize) -> Self {
        let mut entries = Vec::new();
        let mut offsets = Vec::new();
        for (i, p) in lang.predicates().iter().enumerate() {
            offsets.push(entries.len());
            entries.extend(injective_tuples(n, p.arity).into_iter().map(|t| (i, t)));
        }
        offsets.push(entries.len());
        TupleIndex { n, entries, offsets }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, Vec<usize>)] {
        &self.entries
    }

    /// Slot range of predicate `i`.
    pub fn predicate_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }
}

/// Canonical structure: relations hold only on injective tuples.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Structure {
    language: Language,
    vertices: VertexSet,
    relations: Vec<BTreeSet<Vec<usize>>>,
}

impl PartialOrd for Language {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Language {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.predicates.cmp(&other.predicates)
    }
}

impl Structure {
    /// The structure with every relation empty.
    pub fn empty(language: Language, vertices: VertexSet) -> Self {
        let relations = vec![BTreeSet::new(); language.len()];
        Structure { language, vertices, relations }
    }

    /// Builds a structure from labeled tuples.
    pub fn new<S: AsRef<str>>(
        language: Language,
        vertices: VertexSet,
        relations: &BTreeMap<String, Vec<Vec<S>>>,
    ) -> Result<Self> {
        let mut s = Structure::empty(language, vertices);
        for (name, tuples) in relations {
            let i = s
                .language
                .index_of(name)
                .ok_or_else(|| Error::InvalidStructure(format!("unknown predicate `{name}`")))?;
            for t in tuples {
                let pos = t
                    .iter()
                    .map(|l| {
                        s.vertices
                            .position(l.as_ref())
                            .ok_or_else(|| Error::InvalidStructure(format!("unknown vertex `{}`", l.as_ref())))
                    })
                    .collect::<Result<Vec<_>>>()?;
                s.insert(i, pos)?;
            }
        }
        Ok(s)
    }

    /// Builds a structure from positional tuple sets, one per predicate.
    pub fn from_positions(
        language: Language,
        vertices: VertexSet,
        relations: Vec<BTreeSet<Vec<usize>>>,
    ) -> Result<Self> {
        if relations.len() != language.len() {
            return Err(Error::InvalidStructure("one relation per predicate required".into()));
        }
        let mut s = Structure::empty(language, vertices);
        for (i, rel) in relations.into_iter().enumerate() {
            for t in rel {
                s.insert(i, t)?;
            }
        }
        Ok(s)
    }

    /// Adds a tuple to predicate `i`.
    pub fn insert(&mut self, i: usize, tuple: Vec<usize>) -> Result<()> {
        let p = &self.language.predicates()[i];
        if tuple.len() != p.arity {
            return Err(Error::ArityMismatch(format!("`{}` has arity {}, tuple has {}", p.name, p.arity, tuple.len())));
        }
        if tuple.iter().any(|&v| v >= self.vertices.len()) {
            return Err(Error::InvalidStructure("tuple entry outside the vertex set".into()));
        }
        if !is_injective(&tuple) {
            return Err(Error::InvalidStructure(format!("tuple {tuple:?} of `{}` repeats a vertex", p.name)));
        }
        self.relations[i].insert(tuple);
        Ok(())
    }

    pub fn language(&self) -> &Language {
        &self.language
    }

    pub fn vertices(&self) -> &VertexSet {
        &self.vertices
    }

    pub fn relation(&self, i: usize) -> &BTreeSet<Vec<usize>> {
        &self.relations[i]
    }

    pub fn relation_by_name(&self, name: &str) -> Option<&BTreeSet<Vec<usize>>> {
        self.language.index_of(name).map(|i| &self.relations[i])
    }

    pub fn holds(&self, i: usize, tuple: &[usize]) -> bool {
        self.relations[i].contains(tuple)
    }

    /// Structure from a code over the matching tuple index.
    pub fn from_code(language: &Language, vertices: &VertexSet, index: &TupleIndex, code: &StructureCode) -> Self {
        let mut s = Structure::empty(language.clone(), vertices.clone());
        for (b, (i, t)) in index.entries().iter().enumerate() {
            if code.get(b) {
                s.relations[*i].insert(t.clone());
            }
        }
        s
    }

    /// Code of this structure over `index`.
    pub fn code(&self, index: &TupleIndex) -> StructureCode {
        let mut c = StructureCode::zeros(index.len());
        for (b, (i, t)) in index.entries().iter().enumerate() {
            if self.relations[*i].contains(t) {
                c.set(b);
            }
        }
        c
    }

    /// JSON form with labels.
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self.to_repr()).expect("serializable")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_repr()).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: StructureRepr = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Structure::from_repr(repr)
    }

    pub fn from_json_value(value: &serde_json::Value) -> Result<Self> {
        let repr: StructureRepr = serde_json::from_value(value.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        Structure::from_repr(repr)
    }

    fn to_repr(&self) -> StructureRepr {
        StructureRepr {
            language: self.language.predicates().to_vec(),
            vertices: self.vertices.labels().to_vec(),
            relations: self
                .language
                .predicates()
                .iter()
                .zip(&self.relations)
                .map(|(p, rel)| {
                    let tuples =
                        rel.iter().map(|t| t.iter().map(|&v| self.vertices.label(v).to_string()).collect()).collect();
                    (p.name.clone(), tuples)
                })
                .collect(),
        }
    }

    fn from_repr(repr: StructureRepr) -> Result<Self> {
        let language = Language::new(repr.language.into_iter().map(|p| (p.name, p.arity)))?;
        let vertices = VertexSet::new(repr.vertices)?;
        Structure::new(language, vertices, &repr.relations)
    }
}

#[derive(Serialize, Deserialize)]
struct StructureRepr {
    language: Vec<Predicate>,
    vertices: Vec<String>,
    #[serde(default)]
    relations: BTreeMap<String, Vec<Vec<String>>>,
}

fn is_injective(t: &[usize]) -> bool {
    t.iter().enumerate().all(|(i, a)| !t[..i].contains(a))
}

/// `α^*(M)`: `P` holds on `β` iff it holds on `α∘β` in `M`.
pub fn pullback_structure(alpha: &Injection, m: &Structure) -> Result<Structure> {
    if alpha.codomain() != m.vertices() {
        return Err(Error::VertexMismatch("injection codomain is not the structure's vertex set".into()));
    }
    let k = alpha.domain().len();
    let mut preimage = vec![usize::MAX; m.vertices.len()];
    for a in 0..k {
        preimage[alpha.apply(a)] = a;
    }
    let relations = m
        .relations
        .iter()
        .map(|rel| {
            rel.iter()
                .filter(|t| t.iter().all(|&b| preimage[b] != usize::MAX))
                .map(|t| t.iter().map(|&b| preimage[b]).collect())
                .collect()
        })
        .collect();
    Ok(Structure { language: m.language.clone(), vertices: alpha.domain().clone(), relations })
}

/// Restriction of `M` to the sublanguage `sub`.
pub fn reduct(m: &Structure, sub: &Language) -> Result<Structure> {
    if !sub.is_sublanguage_of(&m.language) {
        return Err(Error::LanguageMismatch(format!("{sub} is not a sublanguage of {}", m.language)));
    }
    let relations =
        sub.predicates().iter().map(|p| m.relations[m.language.index_of(&p.name).expect("checked")].clone()).collect();
    Ok(Structure { language: sub.clone(), vertices: m.vertices.clone(), relations })
}

/// Joint structure in `L1 ⊔ L2`; colliding symbols of `M2` are renamed as in
/// [`Language::disjoint_union`].
pub fn disjoint_union_structure(m1: &Structure, m2: &Structure) -> Result<Structure> {
    if m1.vertices != m2.vertices {
        return Err(Error::VertexMismatch("disjoint union needs a shared vertex set".into()));
    }
    let (language, renames) = m1.language.disjoint_union(&m2.language);
    let mut s = Structure::empty(language, m1.vertices.clone());
    for (p, rel) in m1.language.predicates().iter().zip(&m1.relations) {
        s.relations[s.language.index_of(&p.name).expect("present")] = rel.clone();
    }
    for (p, rel) in m2.language.predicates().iter().zip(&m2.relations) {
        s.relations[s.language.index_of(&renames[&p.name]).expect("present")] = rel.clone();
    }
    Ok(s)
}

/// Every canonical structure on `v`, in code order.
pub fn enumerate_structures(lang: &Language, v: &VertexSet, cap: u64) -> Result<Vec<Structure>> {
    let index = TupleIndex::new(lang, v.len());
    let bits = index.len();
    if bits >= 64 || (1u64 << bits) > cap {
        return Err(Error::CapExceeded(format!("2^{bits} structures exceed the enumeration cap of {cap}")));
    }
    Ok((0..1u64 << bits).map(|c| Structure::from_code(lang, v, &index, &StructureCode::from_u64(bits, c))).collect())
}

/// Number of vertex permutations preserving every relation.
pub fn automorphism_count(k: &Structure) -> Result<u64> {
    let n = k.vertices.len();
    if n > FACTORIAL_CAP {
        return Err(Error::CapExceeded(format!("{n} vertices exceed the automorphism cap")));
    }
    let mut count = 0;
    for perm in all_perms(n)? {
        let ok = k.relations.iter().all(|rel| {
            rel.iter().all(|t| {
                let image: Vec<usize> = t.iter().map(|&v| perm.get(v)).collect();
                rel.contains(&image)
            })
        });
        if ok {
            count += 1;
        }
    }
    Ok(count)
}

/// Quantifier-free formula body; variables are 0-based indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Atom {
        predicate: String,
        args: Vec<usize>,
    },
    Eq(usize, usize),
    Not(Box<Expr>),
    /// Conjunction; empty means true.
    And(Vec<Expr>),
    /// Disjunction; empty means false.
    Or(Vec<Expr>),
}

impl Expr {
    pub fn atom(predicate: impl Into<String>, args: Vec<usize>) -> Expr {
        Expr::Atom { predicate: predicate.into(), args }
    }

    pub fn negate(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }

    pub fn truth() -> Expr {
        Expr::And(Vec::new())
    }

    pub fn falsity() -> Expr {
        Expr::Or(Vec::new())
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Atom { args, .. } => args.iter().copied().max(),
            Expr::Eq(i, j) => Some((*i).max(*j)),
            Expr::Not(e) => e.max_var(),
            Expr::And(es) | Expr::Or(es) => es.iter().filter_map(Expr::max_var).max(),
        }
    }

    /// Calls `f` on every predicate atom.
    pub fn visit_atoms<'a>(&'a self, f: &mut impl FnMut(&'a str, &'a [usize])) {
        match self {
            Expr::Atom { predicate, args } => f(predicate, args),
            Expr::Eq(..) => {}
            Expr::Not(e) => e.visit_atoms(f),
            Expr::And(es) | Expr::Or(es) => es.iter().for_each(|e| e.visit_atoms(f)),
        }
    }

    /// Evaluates with a callback deciding predicate atoms on injective
    /// argument lists; the callback receives the atom's variable indices.
    pub fn eval_with(&self, assignment: &[usize], atom: &mut impl FnMut(&str, &[usize]) -> bool) -> bool {
        match self {
            Expr::Atom { predicate, args } => {
                let vals: SmallVec<[usize; 8]> = args.iter().map(|&a| assignment[a]).collect();
                is_injective(&vals) && atom(predicate, args)
            }
            Expr::Eq(i, j) => assignment[*i] == assignment[*j],
            Expr::Not(e) => !e.eval_with(assignment, atom),
            Expr::And(es) => es.iter().all(|e| e.eval_with(assignment, atom)),
            Expr::Or(es) => es.iter().any(|e| e.eval_with(assignment, atom)),
        }
    }

    fn nnf(&self, negate: bool) -> Expr {
        match (self, negate) {
            (Expr::Not(e), n) => e.nnf(!n),
            (Expr::And(es), false) => Expr::And(es.iter().map(|e| e.nnf(false)).collect()),
            (Expr::And(es), true) => Expr::Or(es.iter().map(|e| e.nnf(true)).collect()),
            (Expr::Or(es), false) => Expr::Or(es.iter().map(|e| e.nnf(false)).collect()),
            (Expr::Or(es), true) => Expr::And(es.iter().map(|e| e.nnf(true)).collect()),
            (atom, false) => atom.clone(),
            (atom, true) => Expr::negate(atom.clone()),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, es: &[Expr], sep: &str, empty: &str) -> fmt::Result {
            if es.is_empty() {
                return write!(f, "{empty}");
            }
            write!(f, "(")?;
            for (i, e) in es.iter().enumerate() {
                if i > 0 {
                    write!(f, " {sep} ")?;
                }
                write!(f, "{e}")?;
            }
            write!(f, ")")
        }
        match self {
            Expr::Atom { predicate, args } => {
                let vs: Vec<String> = args.iter().map(|a| format!("x{}", a + 1)).collect();
                write!(f, "{predicate}({})", vs.join(","))
            }
            Expr::Eq(i, j) => write!(f, "x{} = x{}", i + 1, j + 1),
            Expr::Not(e) => write!(f, "!{e}"),
            Expr::And(es) => list(f, es, "&", "true"),
            Expr::Or(es) => list(f, es, "|", "false"),
        }
    }
}

/// A formula in `vars` free variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Formula {
    vars: usize,
    expr: Expr,
}

impl Formula {
    pub fn new(vars: usize, expr: Expr) -> Result<Self> {
        if let Some(m) = expr.max_var() {
            if m >= vars {
                return Err(Error::InvalidArgument(format!("variable x{} out of range for {vars} variables", m + 1)));
            }
        }
        Ok(Formula { vars, expr })
    }

    /// Parses `|`, `&`, `!`, parentheses, `NAME(x1,..)`, `xi = xj`, `true`, `false`.
    pub fn parse(text: &str, vars: usize) -> Result<Self> {
        let mut p = Parser { chars: text.chars().collect(), pos: 0 };
        let e = p.or()?;
        p.skip_ws();
        if p.pos != p.chars.len() {
            return Err(Error::Parse(format!("trailing input at {} in `{text}`", p.pos)));
        }
        Formula::new(vars, e)
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// Checks predicate symbols and atom lengths against `lang`.
    pub fn check(&self, lang: &Language) -> Result<()> {
        let mut err = None;
        self.expr.visit_atoms(&mut |name, args| {
            if err.is_some() {
                return;
            }
            match lang.arity(name) {
                None => err = Some(Error::LanguageMismatch(format!("unknown predicate `{name}`"))),
                Some(k) if k != args.len() => {
                    err = Some(Error::ArityMismatch(format!(
                        "`{name}` has arity {k} but is applied to {} variables",
                        args.len()
                    )))
                }
                _ => {}
            }
        });
        err.map_or(Ok(()), Err)
    }

    /// Negation normal form.
    pub fn nnf(&self) -> Formula {
        Formula { vars: self.vars, expr: self.expr.nnf(false) }
    }

    /// Satisfaction on vertex positions.
    pub fn eval_positions(&self, m: &Structure, assignment: &[usize]) -> Result<bool> {
        if assignment.len() != self.vars {
            return Err(Error::ArityMismatch(format!(
                "formula has {} variables, assignment has {}",
                self.vars,
                assignment.len()
            )));
        }
        self.check(m.language())?;
        let lang = m.language();
        Ok(self.expr.eval_with(assignment, &mut |name, args| {
            let t: Vec<usize> = args.iter().map(|&a| assignment[a]).collect();
            m.holds(lang.index_of(name).expect("checked"), &t)
        }))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)
    }
}

/// Satisfaction of `F` in `M` under an assignment of vertex labels.
pub fn eval_formula(f: &Formula, m: &Structure, assignment: &[&str]) -> Result<bool> {
    let pos = assignment
        .iter()
        .map(|l| m.vertices().position(l).ok_or_else(|| Error::VertexMismatch(format!("unknown vertex `{l}`"))))
        .collect::<Result<Vec<_>>>()?;
    f.eval_positions(m, &pos)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.chars.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn or(&mut self) -> Result<Expr> {
        let mut parts = vec![self.and()?];
        while self.eat('|') {
            parts.push(self.and()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::Or(parts) })
    }

    fn and(&mut self) -> Result<Expr> {
        let mut parts = vec![self.unary()?];
        while self.eat('&') {
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::And(parts) })
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('!') {
            return Ok(Expr::negate(self.unary()?));
        }
        if self.eat('(') {
            let e = self.or()?;
            if !self.eat(')') {
                return Err(Error::Parse(format!("expected `)` at {}", self.pos)));
            }
            return Ok(e);
        }
        let name = self.name()?;
        if self.eat('(') {
            let mut args = vec![self.var()?];
            while self.eat(',') {
                args.push(self.var()?);
            }
            if !self.eat(')') {
                return Err(Error::Parse(format!("expected `)` after arguments of `{name}`")));
            }
            return Ok(Expr::Atom { predicate: name, args });
        }
        match name.as_str() {
            "true" => Ok(Expr::truth()),
            "false" => Ok(Expr::falsity()),
            _ => {
                let i = var_index(&name)?;
                if !self.eat('=') {
                    return Err(Error::Parse(format!("expected `=` after `{name}`")));
                }
                Ok(Expr::Eq(i, self.var()?))
            }
        }
    }

    fn name(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && is_name_char(self.chars[self.pos]) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Parse(format!("expected a name at {start}")));
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn var(&mut self) -> Result<usize> {
        let n = self.name()?;
        var_index(&n)
    }
}

fn var_index(name: &str) -> Result<usize> {
    name.strip_prefix('x')
        .and_then(|d| d.parse::<usize>().ok())
        .filter(|&i| i >= 1)
        .map(|i| i - 1)
        .ok_or_else(|| Error::Parse(format!("`{name}` is not a variable x1, x2, ..")))
}

/// Quantifier-free interpretation: each predicate of `source` is defined by a
/// formula over `target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interpretation {
    source: Language,
    target: Language,
    defs: Vec<Formula>,
}

impl Interpretation {
    pub fn new(source: Language, target: Language, defs: BTreeMap<String, Formula>) -> Result<Self> {
        let mut out = Vec::with_capacity(source.len());
        for p in source.predicates() {
            let f =
                defs.get(&p.name).ok_or_else(|| Error::LanguageMismatch(format!("no definition for `{}`", p.name)))?;
            if f.vars() != p.arity {
                return Err(Error::ArityMismatch(format!(
                    "definition of `{}` has {} variables, arity is {}",
                    p.name,
                    f.vars(),
                    p.arity
                )));
            }
            f.check(&target)?;
            out.push(f.clone());
        }
        if defs.len() != source.len() {
            return Err(Error::LanguageMismatch("definitions for symbols outside the source".into()));
        }
        Ok(Interpretation { source, target, defs: out })
    }

    /// The interpretation keeping the symbols of `sub` unchanged.
    pub fn reduct(full: &Language, sub: &Language) -> Result<Self> {
        if !sub.is_sublanguage_of(full) {
            return Err(Error::LanguageMismatch(format!("{sub} is not a sublanguage of {full}")));
        }
        let defs = sub
            .predicates()
            .iter()
            .map(|p| {
                let f = Formula::new(p.arity, Expr::atom(&p.name, (0..p.arity).collect()))?;
                Ok((p.name.clone(), f))
            })
            .collect::<Result<_>>()?;
        Interpretation::new(sub.clone(), full.clone(), defs)
    }

    pub fn source(&self) -> &Language {
        &self.source
    }

    pub fn target(&self) -> &Language {
        &self.target
    }

    /// Definitions in source-language order.
    pub fn definitions(&self) -> &[Formula] {
        &self.defs
    }

    pub fn definition(&self, name: &str) -> Option<&Formula> {
        self.source.index_of(name).map(|i| &self.defs[i])
    }
}

/// `I^*(M)`: `P` holds on `α` iff `M` satisfies `I(P)` at `α`.
pub fn interpret_structure(i: &Interpretation, m: &Structure) -> Result<Structure> {
    if m.language() != i.target() {
        return Err(Error::LanguageMismatch(format!(
            "structure is in {}, interpretation targets {}",
            m.language(),
            i.target()
        )));
    }
    let mut out = Structure::empty(i.source().clone(), m.vertices().clone());
    for (pi, (p, f)) in i.source().predicates().iter().zip(i.definitions()).enumerate() {
        for t in injective_tuples(m.vertices().len(), p.arity) {
            if f.eval_positions(m, &t)? {
                out.relations[pi].insert(t);
            }
        }
    }
    Ok(out)
}
