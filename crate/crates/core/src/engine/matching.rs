//! Premise matching against an indexed fact store, modulo predicate symmetry.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use crate::dsl::{Pattern, Term};
use crate::model::{canonicalize, Fact, ModelError, ObjectId};

/// Variable name to object.
pub type Binding = BTreeMap<Arc<str>, ObjectId>;

/// Canonical facts indexed by predicate name.
#[derive(Debug, Clone, Default)]
pub struct FactStore {
    by_predicate: HashMap<String, Vec<Fact>>,
    members: HashSet<Fact>,
}

impl FactStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns `false` when the fact was already present.
    pub fn insert(&mut self, fact: Fact) -> bool {
        if !self.members.insert(fact.clone()) {
            return false;
        }
        self.by_predicate
            .entry(fact.predicate().name().to_string())
            .or_default()
            .push(fact);
        true
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.members.contains(fact)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn facts_of(&self, predicate: &str) -> &[Fact] {
        self.by_predicate.get(predicate).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fact> {
        self.members.iter()
    }

    pub fn sorted(&self) -> Vec<Fact> {
        let set: BTreeSet<&Fact> = self.members.iter().collect();
        set.into_iter().cloned().collect()
    }
}

impl FromIterator<Fact> for FactStore {
    fn from_iter<I: IntoIterator<Item = Fact>>(iter: I) -> Self {
        let mut store = FactStore::new();
        for f in iter {
            store.insert(f);
        }
        store
    }
}

/// Every binding under which all `premises`, once instantiated and
/// canonicalized, are members of `store`.
pub fn match_premises(premises: &[Pattern], store: &FactStore) -> BTreeSet<Binding> {
    let sources = vec![store; premises.len()];
    let order: Vec<usize> = (0..premises.len()).collect();
    let mut out = BTreeSet::new();
    for_each_match(premises, &sources, &order, &mut |b, _| {
        out.insert(b.clone());
    });
    out
}

/// Backtracking join. Premise `i` is matched against `sources[i]`, in the
/// sequence given by `order`. The callback receives the binding and the
/// matched stored fact for each premise (in premise order).
pub(crate) fn for_each_match<F>(
    premises: &[Pattern],
    sources: &[&FactStore],
    order: &[usize],
    on_match: &mut F,
) where
    F: FnMut(&Binding, &[Fact]),
{
    let mut binding = Binding::new();
    let mut matched: Vec<Option<Fact>> = vec![None; premises.len()];
    step(premises, sources, order, 0, &mut binding, &mut matched, on_match);
}

fn step<F>(
    premises: &[Pattern],
    sources: &[&FactStore],
    order: &[usize],
    depth: usize,
    binding: &mut Binding,
    matched: &mut Vec<Option<Fact>>,
    on_match: &mut F,
) where
    F: FnMut(&Binding, &[Fact]),
{
    if depth == order.len() {
        let facts: Vec<Fact> = matched.iter().map(|f| f.clone().expect("all matched")).collect();
        on_match(binding, &facts);
        return;
    }
    let idx = order[depth];
    let pattern = &premises[idx];
    for fact in sources[idx].facts_of(pattern.predicate.name()) {
        for perm in pattern.predicate.group() {
            let image: Vec<&ObjectId> = perm.images().iter().map(|&i| &fact.args()[i]).collect();
            let mut bound_here: Vec<Arc<str>> = Vec::new();
            if unify(&pattern.args, &image, binding, &mut bound_here) {
                matched[idx] = Some(fact.clone());
                step(premises, sources, order, depth + 1, binding, matched, on_match);
                matched[idx] = None;
            }
            for v in bound_here {
                binding.remove(&v);
            }
        }
    }
}

fn unify(
    terms: &[Term],
    args: &[&ObjectId],
    binding: &mut Binding,
    bound_here: &mut Vec<Arc<str>>,
) -> bool {
    for (term, arg) in terms.iter().zip(args) {
        match term {
            Term::Const(c) => {
                if &**c != arg.name() {
                    return false;
                }
            }
            Term::Var(v) => match binding.get(v) {
                Some(existing) => {
                    if existing != *arg {
                        return false;
                    }
                }
                None => {
                    binding.insert(v.clone(), (*arg).clone());
                    bound_here.push(v.clone());
                }
            },
        }
    }
    true
}

/// Instantiates `pattern` under `binding` and canonicalizes the result.
/// Panics if a variable is unbound; callers only instantiate range-restricted
/// patterns.
pub fn instantiate(pattern: &Pattern, binding: &Binding) -> Result<Fact, ModelError> {
    let args = pattern
        .args
        .iter()
        .zip(pattern.predicate.arg_kinds())
        .map(|(t, kind)| match t {
            Term::Var(v) => Ok(binding
                .get(v)
                .unwrap_or_else(|| panic!("variable ?{v} is unbound"))
                .clone()),
            Term::Const(c) => ObjectId::new(c, *kind),
        })
        .collect::<Result<Vec<_>, _>>()?;
    canonicalize(&pattern.predicate, &args)
}
