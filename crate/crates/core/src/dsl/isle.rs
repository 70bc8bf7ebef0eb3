use std::collections::BTreeSet;

use super::rules::{RuleBase, Tier};
use crate::Warning;

/// Which isle tags are enabled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IsleSet {
    All,
    Only(BTreeSet<String>),
}

impl IsleSet {
    pub fn contains(&self, isle: &str) -> bool {
        match self {
            IsleSet::All => true,
            IsleSet::Only(set) => set.contains(isle),
        }
    }

    pub fn is_subset(&self, other: &IsleSet) -> bool {
        match (self, other) {
            (_, IsleSet::All) => true,
            (IsleSet::All, IsleSet::Only(_)) => false,
            (IsleSet::Only(a), IsleSet::Only(b)) => a.is_subset(b),
        }
    }
}

/// The teacher-facing selection of admissible rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsleConfig {
    pub max_level: u32,
    pub isles: IsleSet,
    tiers: BTreeSet<Tier>,
}

impl IsleConfig {
    /// Returns `None` when `tiers` is empty.
    pub fn new(max_level: u32, isles: IsleSet, tiers: BTreeSet<Tier>) -> Option<Self> {
        if tiers.is_empty() {
            return None;
        }
        Some(IsleConfig {
            max_level,
            isles,
            tiers,
        })
    }

    /// Everything enabled.
    pub fn permissive() -> Self {
        IsleConfig {
            max_level: u32::MAX,
            isles: IsleSet::All,
            tiers: Tier::ALL.into_iter().collect(),
        }
    }

    pub fn with_tiers(mut self, tiers: &[Tier]) -> Option<Self> {
        if tiers.is_empty() {
            return None;
        }
        self.tiers = tiers.iter().copied().collect();
        Some(self)
    }

    pub fn tiers(&self) -> &BTreeSet<Tier> {
        &self.tiers
    }

    /// Componentwise inclusion.
    pub fn is_subset(&self, other: &IsleConfig) -> bool {
        self.max_level <= other.max_level
            && self.isles.is_subset(&other.isles)
            && self.tiers.is_subset(&other.tiers)
    }
}

impl Default for IsleConfig {
    fn default() -> Self {
        IsleConfig::permissive()
    }
}

#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub base: RuleBase,
    pub warning: Option<Warning>,
}

/// Keeps the rules whose level, isle and tier are all enabled by `cfg`.
/// Predicate declarations are preserved.
pub fn filter_rules(base: &RuleBase, cfg: &IsleConfig) -> FilterOutcome {
    let filtered = base.with_rules(|r| {
        r.level <= cfg.max_level && cfg.isles.contains(&r.isle) && cfg.tiers.contains(&r.tier)
    });
    let warning = if filtered.rules().is_empty() {
        log::warn!("isle configuration leaves no rules enabled");
        Some(Warning::EmptyRuleBase)
    } else {
        None
    };
    FilterOutcome {
        base: filtered,
        warning,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_rules;

    const PACK: &str = "
pred p/1 kinds(point)
pred q/1 kinds(point)
rule a { level: 1 isle: one tier: coarse if: p(?X) then: q(?X) }
rule b { level: 2 isle: one tier: fine if: p(?X) then: q(?X) }
rule c { level: 1 isle: two tier: default if: q(?X) then: p(?X) }
";

    fn ids(b: &RuleBase) -> Vec<&str> {
        b.rules().iter().map(|r| r.id.as_str()).collect()
    }

    #[test]
    fn permissive_is_identity() {
        let base = parse_rules(PACK).unwrap();
        let out = filter_rules(&base, &IsleConfig::permissive());
        assert_eq!(out.base, base);
        assert!(out.warning.is_none());
    }

    #[test]
    fn tier_level_and_isle_filters() {
        let base = parse_rules(PACK).unwrap();
        let cfg = IsleConfig::permissive()
            .with_tiers(&[Tier::Coarse, Tier::Default])
            .unwrap();
        assert_eq!(ids(&filter_rules(&base, &cfg).base), vec!["a", "c"]);

        let cfg = IsleConfig::new(1, IsleSet::All, Tier::ALL.into_iter().collect()).unwrap();
        assert_eq!(ids(&filter_rules(&base, &cfg).base), vec!["a", "c"]);

        let only_two = IsleSet::Only(["two".to_string()].into());
        let cfg = IsleConfig::new(9, only_two, Tier::ALL.into_iter().collect()).unwrap();
        assert_eq!(ids(&filter_rules(&base, &cfg).base), vec!["c"]);
    }

    #[test]
    fn level_zero_leaves_nothing() {
        let base = parse_rules(PACK).unwrap();
        let cfg = IsleConfig::new(0, IsleSet::All, Tier::ALL.into_iter().collect()).unwrap();
        let out = filter_rules(&base, &cfg);
        assert!(out.base.rules().is_empty());
        assert_eq!(out.base.predicates().len(), 2);
        assert_eq!(out.warning, Some(Warning::EmptyRuleBase));
    }

    #[test]
    fn empty_tier_set_is_invalid() {
        assert!(IsleConfig::new(1, IsleSet::All, BTreeSet::new()).is_none());
        assert!(IsleConfig::permissive().with_tiers(&[]).is_none());
    }

    #[test]
    fn subset_relation() {
        let small = IsleConfig::new(1, IsleSet::Only(["one".into()].into()), [Tier::Fine].into())
            .unwrap();
        assert!(small.is_subset(&IsleConfig::permissive()));
        assert!(!IsleConfig::permissive().is_subset(&small));
    }
}
