//! Geometric objects, predicate declarations with argument symmetries, and
//! canonical ground facts.
//!
//! Two statements that differ only by a declared symmetry of their predicate
//! (for instance `perp(lBC,lAB)` and `perp(lAB,lBC)`) canonicalize to the same
//! [`Fact`], so the engine, the proof graph and the tutor all agree on what
//! "the same statement" means.

use std::cmp::Ordering;
use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid object name `{0}` (expected [A-Za-z][A-Za-z0-9_]*)")]
    InvalidObjectName(String),
    #[error("unknown object kind `{0}`")]
    UnknownKind(String),
    #[error("predicate `{predicate}` expects {expected} argument(s), found {found}")]
    ArityMismatch {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("predicate `{predicate}` argument {position} must be a {expected}, `{object}` is a {found}")]
    KindMismatch {
        predicate: String,
        position: usize,
        object: String,
        expected: ObjectKind,
        found: ObjectKind,
    },
    #[error("predicate `{predicate}`: {detail}")]
    InvalidSymmetry { predicate: String, detail: String },
}

/// The sort of a geometric object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    Point,
    Line,
    Segment,
    Angle,
    Circle,
    Polygon,
    Scalar,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 7] = [
        ObjectKind::Point,
        ObjectKind::Line,
        ObjectKind::Segment,
        ObjectKind::Angle,
        ObjectKind::Circle,
        ObjectKind::Polygon,
        ObjectKind::Scalar,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectKind::Point => "point",
            ObjectKind::Line => "line",
            ObjectKind::Segment => "segment",
            ObjectKind::Angle => "angle",
            ObjectKind::Circle => "circle",
            ObjectKind::Polygon => "polygon",
            ObjectKind::Scalar => "scalar",
        }
    }
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ObjectKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ModelError::UnknownKind(s.to_string()))
    }
}

/// `true` when `name` matches `[A-Za-z][A-Za-z0-9_]*`.
pub fn is_valid_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A named ground object of the problem's super-figure.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectId {
    name: Arc<str>,
    kind: ObjectKind,
}

impl ObjectId {
    pub fn new(name: &str, kind: ObjectKind) -> Result<Self, ModelError> {
        if !is_valid_identifier(name) {
            return Err(ModelError::InvalidObjectName(name.to_string()));
        }
        Ok(ObjectId {
            name: Arc::from(name),
            kind,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ObjectKind {
        self.kind
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// A symmetry generator as written in a rule file (1-based positions).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Generator {
    Swap(usize, usize),
    /// `Cycle([a, b, c])` moves the argument at position `a` to `b`, `b` to `c`
    /// and `c` back to `a`.
    Cycle(Vec<usize>),
    /// The full symmetric group on all positions.
    Full,
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Swap(a, b) => write!(f, "swap {a} {b}"),
            Generator::Cycle(points) => {
                f.write_str("cycle")?;
                for p in points {
                    write!(f, " {p}")?;
                }
                Ok(())
            }
            Generator::Full => f.write_str("full"),
        }
    }
}

/// A permutation of argument positions: applying it to `args` yields
/// `out[i] = args[perm[i]]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn apply<T: Clone>(&self, args: &[T]) -> Vec<T> {
        self.0.iter().map(|&i| args[i].clone()).collect()
    }

    /// `(self ∘ other)`: applying the result equals applying `self` first, then `other`.
    fn then(&self, other: &Permutation) -> Permutation {
        Permutation(other.0.iter().map(|&i| self.0[i]).collect())
    }

    fn from_generator(gen: &Generator, arity: usize) -> Result<Vec<Permutation>, String> {
        let check = |p: usize| -> Result<usize, String> {
            if p == 0 || p > arity {
                Err(format!("position {p} out of range 1..{arity}"))
            } else {
                Ok(p - 1)
            }
        };
        match gen {
            Generator::Swap(a, b) => {
                let (a, b) = (check(*a)?, check(*b)?);
                if a == b {
                    return Err(format!("swap {} {} is not a transposition", a + 1, b + 1));
                }
                let mut perm = Permutation::identity(arity);
                perm.0.swap(a, b);
                Ok(vec![perm])
            }
            Generator::Cycle(points) => {
                if points.is_empty() {
                    return Err("empty cycle".to_string());
                }
                let idx = points.iter().map(|&p| check(p)).collect::<Result<Vec<_>, _>>()?;
                let distinct: BTreeSet<_> = idx.iter().collect();
                if distinct.len() != idx.len() {
                    return Err("cycle repeats a position".to_string());
                }
                let mut perm = Permutation::identity(arity);
                for w in 0..idx.len() {
                    let from = idx[w];
                    let to = idx[(w + 1) % idx.len()];
                    perm.0[to] = from;
                }
                Ok(vec![perm])
            }
            Generator::Full => {
                if arity < 2 {
                    return Ok(vec![]);
                }
                let mut swap = Permutation::identity(arity);
                swap.0.swap(0, 1);
                let rotate = Permutation((0..arity).map(|i| (i + 1) % arity).collect());
                Ok(vec![swap, rotate])
            }
        }
    }
}

/// A predicate symbol with typed positions and a symmetry group.
#[derive(Debug, Clone)]
pub struct PredicateDecl {
    name: String,
    arg_kinds: Vec<ObjectKind>,
    generators: Vec<Generator>,
    group: Vec<Permutation>,
}

impl PredicateDecl {
    /// Declares a predicate and closes its symmetry group.
    pub fn new(
        name: &str,
        arg_kinds: Vec<ObjectKind>,
        generators: Vec<Generator>,
    ) -> Result<Self, ModelError> {
        let invalid = |detail: String| ModelError::InvalidSymmetry {
            predicate: name.to_string(),
            detail,
        };
        if !is_valid_identifier(name) {
            return Err(ModelError::InvalidObjectName(name.to_string()));
        }
        if arg_kinds.is_empty() {
            return Err(invalid("arity must be positive".to_string()));
        }
        let arity = arg_kinds.len();
        let mut perms = Vec::new();
        for gen in &generators {
            let ps = Permutation::from_generator(gen, arity).map_err(invalid)?;
            for p in &ps {
                if p.0.iter().enumerate().any(|(i, &j)| arg_kinds[i] != arg_kinds[j]) {
                    return Err(invalid(format!(
                        "generator `{gen}` exchanges positions of different kinds"
                    )));
                }
            }
            perms.extend(ps);
        }
        let group = close_group(arity, &perms);
        Ok(PredicateDecl {
            name: name.to_string(),
            arg_kinds,
            generators,
            group,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arg_kinds.len()
    }

    pub fn arg_kinds(&self) -> &[ObjectKind] {
        &self.arg_kinds
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    /// Every element of the symmetry group, identity first.
    pub fn group(&self) -> &[Permutation] {
        &self.group
    }

    /// Structural equality of declarations (name, kinds and generated group).
    pub fn same_declaration(&self, other: &PredicateDecl) -> bool {
        self.name == other.name && self.arg_kinds == other.arg_kinds && {
            let a: BTreeSet<_> = self.group.iter().collect();
            let b: BTreeSet<_> = other.group.iter().collect();
            a == b
        }
    }

    pub fn check_args(&self, args: &[ObjectId]) -> Result<(), ModelError> {
        if args.len() != self.arity() {
            return Err(ModelError::ArityMismatch {
                predicate: self.name.clone(),
                expected: self.arity(),
                found: args.len(),
            });
        }
        for (i, (arg, kind)) in args.iter().zip(&self.arg_kinds).enumerate() {
            if arg.kind() != *kind {
                return Err(ModelError::KindMismatch {
                    predicate: self.name.clone(),
                    position: i + 1,
                    object: arg.name().to_string(),
                    expected: *kind,
                    found: arg.kind(),
                });
            }
        }
        Ok(())
    }
}

impl PartialEq for PredicateDecl {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.arg_kinds == other.arg_kinds
            && self.generators == other.generators
    }
}

impl Eq for PredicateDecl {}

impl fmt::Display for PredicateDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pred {}/{} kinds(", self.name, self.arity())?;
        for (i, k) in self.arg_kinds.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}")?;
        }
        f.write_str(")")?;
        if !self.generators.is_empty() {
            f.write_str(" sym(")?;
            for (i, g) in self.generators.iter().enumerate() {
                if i > 0 {
                    f.write_str("; ")?;
                }
                write!(f, "{g}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

fn close_group(arity: usize, generators: &[Permutation]) -> Vec<Permutation> {
    let identity = Permutation::identity(arity);
    let mut seen = BTreeSet::from([identity.clone()]);
    let mut order = vec![identity.clone()];
    let mut queue = VecDeque::from([identity]);
    while let Some(p) = queue.pop_front() {
        for g in generators {
            let q = p.then(g);
            if seen.insert(q.clone()) {
                order.push(q.clone());
                queue.push_back(q);
            }
        }
    }
    order
}

impl AsRef<str> for ObjectId {
    fn as_ref(&self) -> &str {
        &self.name
    }
}

/// Shared handle to a predicate declaration.
pub type PredicateRef = Arc<PredicateDecl>;

/// Renders `name(a,b,c)` with no whitespace.
pub fn render_atom<S: AsRef<str>>(predicate: &str, args: &[S]) -> String {
    let mut out = String::with_capacity(predicate.len() + 2 + args.len() * 4);
    out.push_str(predicate);
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(a.as_ref());
    }
    out.push(')');
    out
}

struct FactData {
    predicate: PredicateRef,
    args: Vec<ObjectId>,
    key: String,
}

/// A canonical ground statement. Equality, hashing and ordering all go
/// through the canonical key.
#[derive(Clone)]
pub struct Fact(Arc<FactData>);

impl Fact {
    pub fn predicate(&self) -> &PredicateRef {
        &self.0.predicate
    }

    pub fn args(&self) -> &[ObjectId] {
        &self.0.args
    }

    pub fn key(&self) -> &str {
        &self.0.key
    }
}

impl PartialEq for Fact {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Fact {}

impl Hash for Fact {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state)
    }
}

impl PartialOrd for Fact {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fact {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(other.key())
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl fmt::Debug for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fact({})", self.key())
    }
}

/// Builds the canonical fact for `predicate(args)`: the image of `args` under
/// the predicate's symmetry group whose rendering is byte-wise smallest.
pub fn canonicalize(predicate: &PredicateRef, args: &[ObjectId]) -> Result<Fact, ModelError> {
    predicate.check_args(args)?;
    let mut best: Option<(String, Vec<ObjectId>)> = None;
    for perm in predicate.group() {
        let image = perm.apply(args);
        let rendered = render_atom(predicate.name(), &image);
        if best.as_ref().is_none_or(|(k, _)| rendered < *k) {
            best = Some((rendered, image));
        }
    }
    let (key, args) = best.expect("group always contains the identity");
    Ok(Fact(Arc::new(FactData {
        predicate: predicate.clone(),
        args,
        key,
    })))
}

pub fn facts_equal(a: &Fact, b: &Fact) -> bool {
    a.key() == b.key()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(name: &str, kind: ObjectKind) -> ObjectId {
        ObjectId::new(name, kind).unwrap()
    }

    fn points(names: &[&str]) -> Vec<ObjectId> {
        names.iter().map(|n| obj(n, ObjectKind::Point)).collect()
    }

    fn decl(name: &str, kinds: Vec<ObjectKind>, gens: Vec<Generator>) -> PredicateRef {
        Arc::new(PredicateDecl::new(name, kinds, gens).unwrap())
    }

    #[test]
    fn perp_swaps_to_lexicographic_minimum() {
        let perp = decl(
            "perp",
            vec![ObjectKind::Line, ObjectKind::Line],
            vec![Generator::Swap(1, 2)],
        );
        let f = canonicalize(
            &perp,
            &[obj("lBC", ObjectKind::Line), obj("lAB", ObjectKind::Line)],
        )
        .unwrap();
        assert_eq!(f.key(), "perp(lAB,lBC)");
    }

    #[test]
    fn distinct_points_are_ordered() {
        let distinct = decl(
            "distinct",
            vec![ObjectKind::Point; 2],
            vec![Generator::Swap(1, 2)],
        );
        let f = canonicalize(&distinct, &points(&["B", "A"])).unwrap();
        assert_eq!(f.key(), "distinct(A,B)");
    }

    #[test]
    fn full_group_sorts_collinear() {
        let col = decl("collinear", vec![ObjectKind::Point; 3], vec![Generator::Full]);
        assert_eq!(col.group().len(), 6);
        let f = canonicalize(&col, &points(&["C", "A", "B"])).unwrap();
        assert_eq!(f.key(), "collinear(A,B,C)");
    }

    #[test]
    fn dihedral_group_of_quadrilateral() {
        let quad = decl(
            "quadrilateral",
            vec![ObjectKind::Point; 4],
            vec![Generator::Cycle(vec![1, 2, 3, 4]), Generator::Swap(2, 4)],
        );
        assert_eq!(quad.group().len(), 8);
        let f = canonicalize(&quad, &points(&["C", "B", "A", "D"])).unwrap();
        assert_eq!(f.key(), "quadrilateral(A,B,C,D)");
        // A,C,B,D is not a relabelling of the same cyclic order.
        let g = canonicalize(&quad, &points(&["A", "C", "B", "D"])).unwrap();
        assert_eq!(g.key(), "quadrilateral(A,C,B,D)");
        assert!(!facts_equal(&f, &g));
    }

    #[test]
    fn facts_equal_examples() {
        let perp = decl(
            "perp",
            vec![ObjectKind::Line, ObjectKind::Line],
            vec![Generator::Swap(1, 2)],
        );
        let l = |n: &str| obj(n, ObjectKind::Line);
        let a = canonicalize(&perp, &[l("lAB"), l("lBC")]).unwrap();
        let b = canonicalize(&perp, &[l("lBC"), l("lAB")]).unwrap();
        let c = canonicalize(&perp, &[l("lAB"), l("lCD")]).unwrap();
        assert!(facts_equal(&a, &b));
        assert!(!facts_equal(&a, &c));
        let rect = decl("rectangle", vec![ObjectKind::Point; 4], vec![]);
        let r1 = canonicalize(&rect, &points(&["A", "B", "C", "D"])).unwrap();
        let r2 = canonicalize(&rect, &points(&["A", "B", "C", "D"])).unwrap();
        assert!(facts_equal(&r1, &r2));
    }

    #[test]
    fn arity_and_kind_errors() {
        let perp = decl(
            "perp",
            vec![ObjectKind::Line, ObjectKind::Line],
            vec![Generator::Swap(1, 2)],
        );
        assert!(matches!(
            canonicalize(&perp, &[obj("lAB", ObjectKind::Line)]),
            Err(ModelError::ArityMismatch { expected: 2, found: 1, .. })
        ));
        assert!(matches!(
            canonicalize(&perp, &[obj("lAB", ObjectKind::Line), obj("A", ObjectKind::Point)]),
            Err(ModelError::KindMismatch { position: 2, .. })
        ));
    }

    #[test]
    fn rejects_bad_generators() {
        let kinds = vec![ObjectKind::Point, ObjectKind::Line];
        assert!(PredicateDecl::new("on", kinds.clone(), vec![Generator::Swap(1, 2)]).is_err());
        assert!(PredicateDecl::new("p", vec![ObjectKind::Point; 2], vec![Generator::Swap(1, 3)])
            .is_err());
        assert!(PredicateDecl::new("p", vec![ObjectKind::Point; 2], vec![Generator::Swap(1, 1)])
            .is_err());
        assert!(PredicateDecl::new(
            "p",
            vec![ObjectKind::Point; 3],
            vec![Generator::Cycle(vec![1, 2, 1])]
        )
        .is_err());
        assert!(PredicateDecl::new("p", vec![], vec![]).is_err());
    }

    #[test]
    fn object_names_are_validated() {
        assert!(ObjectId::new("lAB", ObjectKind::Line).is_ok());
        assert!(ObjectId::new("s_1", ObjectKind::Segment).is_ok());
        assert!(ObjectId::new("1A", ObjectKind::Point).is_err());
        assert!(ObjectId::new("_A", ObjectKind::Point).is_err());
        assert!(ObjectId::new("", ObjectKind::Point).is_err());
    }

    #[test]
    fn canonicalization_is_idempotent() {
        let col = decl("collinear", vec![ObjectKind::Point; 3], vec![Generator::Full]);
        let f = canonicalize(&col, &points(&["Z", "B", "M"])).unwrap();
        let g = canonicalize(&col, f.args()).unwrap();
        assert_eq!(f.key(), g.key());
        assert_eq!(f.args(), g.args());
    }
}
