//! Rooted concept taxonomy and Wu–Palmer similarity.
//!
//! A taxonomy is a single-parent tree of [`ConceptId`]s. Depth is counted in
//! nodes, so the root sits at depth 1 and the Wu–Palmer score
//! `2·depth(lca) / (depth(a) + depth(b))` always lies in `(0, 1]`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TaxonomyError {
    #[error("taxonomy document contains no edges")]
    EmptyDocument,
    #[error("line {line}: expected `child<TAB>parent`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("invalid concept id {0:?}")]
    InvalidConcept(String),
    #[error("concept `{0}` is declared with more than one parent")]
    DuplicateConcept(ConceptId),
    #[error("parent links contain a cycle through `{0}`")]
    CycleDetected(ConceptId),
    #[error("taxonomy has several roots: {0:?}")]
    MultipleRoots(Vec<ConceptId>),
    #[error("concept `{0}` does not reach the root")]
    OrphanConcept(ConceptId),
    #[error("unknown concept `{0}`")]
    UnknownConcept(ConceptId),
}

/// Case-folded concept token.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConceptId(String);

impl ConceptId {
    /// Lowercases `raw` after trimming; rejects empty tokens and tokens with
    /// interior whitespace.
    pub fn new(raw: &str) -> Result<Self, TaxonomyError> {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.chars().any(char::is_whitespace) {
            return Err(TaxonomyError::InvalidConcept(raw.to_string()));
        }
        Ok(ConceptId(trimmed.to_lowercase()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for ConceptId {
    type Err = TaxonomyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConceptId::new(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    root: ConceptId,
    parent_of: BTreeMap<ConceptId, ConceptId>,
    depth: BTreeMap<ConceptId, usize>,
}

const BUNDLED: &str = include_str!("../data/services.taxonomy");

impl Taxonomy {
    /// Parses the tab-separated edge list format (`child<TAB>parent` per line,
    /// `#` comments, blank lines ignored). A line holding a single concept
    /// declares it without a parent, which lets a root-only taxonomy be
    /// written down.
    pub fn load(document: &str) -> Result<Self, TaxonomyError> {
        let mut parent_of = BTreeMap::new();
        let mut mentioned = BTreeSet::new();
        for (idx, raw) in document.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = raw.split('\t').map(str::trim).filter(|f| !f.is_empty());
            let (child, parent) = match (fields.next(), fields.next(), fields.next()) {
                (Some(c), Some(p), None) => (c, p),
                (Some(c), None, None) if !c.contains(char::is_whitespace) => {
                    mentioned.insert(ConceptId::new(c)?);
                    continue;
                }
                _ => {
                    return Err(TaxonomyError::Malformed {
                        line: idx + 1,
                        text: raw.to_string(),
                    })
                }
            };
            let child = ConceptId::new(child)?;
            let parent = ConceptId::new(parent)?;
            mentioned.insert(parent.clone());
            mentioned.insert(child.clone());
            if parent_of.insert(child.clone(), parent).is_some() {
                return Err(TaxonomyError::DuplicateConcept(child));
            }
        }
        if mentioned.is_empty() {
            return Err(TaxonomyError::EmptyDocument);
        }
        let roots: Vec<ConceptId> = mentioned
            .into_iter()
            .filter(|c| !parent_of.contains_key(c))
            .collect();
        match roots.len() {
            0 => {
                // every concept has a parent, so some chain must loop
                let start = parent_of.keys().next().cloned().expect("non-empty");
                Err(TaxonomyError::CycleDetected(find_cycle(&parent_of, &start)))
            }
            1 => Self::from_parents(roots.into_iter().next().expect("one root"), parent_of),
            _ => Err(TaxonomyError::MultipleRoots(roots)),
        }
    }

    /// Builds a taxonomy from an explicit root and child → parent map.
    pub fn from_parents(
        root: ConceptId,
        parent_of: BTreeMap<ConceptId, ConceptId>,
    ) -> Result<Self, TaxonomyError> {
        if parent_of.contains_key(&root) {
            return Err(TaxonomyError::CycleDetected(root));
        }
        let mut depth = BTreeMap::new();
        depth.insert(root.clone(), 1usize);
        for start in parent_of.keys() {
            if depth.contains_key(start) {
                continue;
            }
            let mut chain = vec![start.clone()];
            let mut on_chain: BTreeSet<&ConceptId> = BTreeSet::from([start]);
            let mut cursor = start;
            let base = loop {
                let parent = match parent_of.get(cursor) {
                    Some(p) => p,
                    None => return Err(TaxonomyError::OrphanConcept(cursor.clone())),
                };
                if let Some(&d) = depth.get(parent) {
                    break d;
                }
                if !on_chain.insert(parent) {
                    return Err(TaxonomyError::CycleDetected(parent.clone()));
                }
                chain.push(parent.clone());
                cursor = parent;
            };
            for (offset, concept) in chain.into_iter().rev().enumerate() {
                depth.insert(concept, base + offset + 1);
            }
        }
        Ok(Taxonomy {
            root,
            parent_of,
            depth,
        })
    }

    /// The service-domain taxonomy shipped with the crate.
    pub fn bundled() -> Self {
        Self::load(BUNDLED).expect("bundled taxonomy is valid")
    }

    /// Complete tree with `branching` children per internal node and
    /// `levels` levels (root included). Concepts are named by their path,
    /// e.g. `c0`, `c0.2`, `c0.2.1`.
    pub fn balanced(branching: usize, levels: usize) -> Self {
        let root = ConceptId("c0".to_string());
        let mut parent_of = BTreeMap::new();
        let mut frontier = vec![root.clone()];
        for _ in 1..levels.max(1) {
            let mut next = Vec::with_capacity(frontier.len() * branching);
            for parent in &frontier {
                for i in 0..branching {
                    let child = ConceptId(format!("{parent}.{i}"));
                    parent_of.insert(child.clone(), parent.clone());
                    next.push(child);
                }
            }
            frontier = next;
        }
        Self::from_parents(root, parent_of).expect("balanced tree is valid")
    }

    pub fn root(&self) -> &ConceptId {
        &self.root
    }

    pub fn len(&self) -> usize {
        self.depth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depth.is_empty()
    }

    pub fn contains(&self, c: &ConceptId) -> bool {
        self.depth.contains_key(c)
    }

    pub fn parent(&self, c: &ConceptId) -> Option<&ConceptId> {
        self.parent_of.get(c)
    }

    /// All concepts in id order.
    pub fn concepts(&self) -> impl Iterator<Item = &ConceptId> {
        self.depth.keys()
    }

    /// Concepts without children, in id order.
    pub fn leaves(&self) -> Vec<&ConceptId> {
        let internal: BTreeSet<&ConceptId> = self.parent_of.values().collect();
        self.depth.keys().filter(|c| !internal.contains(c)).collect()
    }

    pub fn depth(&self, c: &ConceptId) -> Result<usize, TaxonomyError> {
        self.depth
            .get(c)
            .copied()
            .ok_or_else(|| TaxonomyError::UnknownConcept(c.clone()))
    }

    pub fn lowest_common_ancestor(
        &self,
        a: &ConceptId,
        b: &ConceptId,
    ) -> Result<ConceptId, TaxonomyError> {
        let (mut x, mut dx) = (a, self.depth(a)?);
        let (mut y, mut dy) = (b, self.depth(b)?);
        while dx > dy {
            x = &self.parent_of[x];
            dx -= 1;
        }
        while dy > dx {
            y = &self.parent_of[y];
            dy -= 1;
        }
        while x != y {
            x = &self.parent_of[x];
            y = &self.parent_of[y];
        }
        Ok(x.clone())
    }

    pub fn wu_palmer_similarity(&self, a: &ConceptId, b: &ConceptId) -> Result<f64, TaxonomyError> {
        let lca = self.lowest_common_ancestor(a, b)?;
        let shared = self.depth[&lca] as f64;
        Ok(2.0 * shared / (self.depth[a] + self.depth[b]) as f64)
    }

    /// Serializes back to the edge-list format, one edge per line in child
    /// id order. A root-only taxonomy becomes a single bare line.
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        if self.parent_of.is_empty() {
            out.push_str(self.root.as_str());
            out.push('\n');
        }
        for (child, parent) in &self.parent_of {
            out.push_str(child.as_str());
            out.push('\t');
            out.push_str(parent.as_str());
            out.push('\n');
        }
        out
    }
}

fn find_cycle(parent_of: &BTreeMap<ConceptId, ConceptId>, start: &ConceptId) -> ConceptId {
    let mut seen = BTreeSet::new();
    let mut cursor = start;
    while seen.insert(cursor) {
        cursor = &parent_of[cursor];
    }
    cursor.clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> ConceptId {
        ConceptId::new(s).unwrap()
    }

    fn chain() -> Taxonomy {
        Taxonomy::load("# demo\nthing\troot\nservice\tthing\n\nweather\tservice\nmaps\tservice\n")
            .unwrap()
    }

    fn ancestors(t: &Taxonomy, x: &ConceptId) -> Vec<ConceptId> {
        let mut out = vec![x.clone()];
        let mut cur = x;
        while let Some(p) = t.parent(cur) {
            out.push(p.clone());
            cur = p;
        }
        out
    }

    #[test]
    fn loads_two_edges() {
        let t = Taxonomy::load("thing\troot\nservice\tthing\n").unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.depth(&c("service")).unwrap(), 3);
        assert_eq!(t.root(), &c("root"));
    }

    #[test]
    fn ids_are_case_folded() {
        let t = Taxonomy::load("Thing\tROOT\n").unwrap();
        assert_eq!(t.depth(&c("thing")).unwrap(), 2);
        assert_eq!(t.root().as_str(), "root");
        assert!(ConceptId::new("two words").is_err());
        assert!(ConceptId::new("  ").is_err());
    }

    #[test]
    fn rejects_bad_documents() {
        assert_eq!(
            Taxonomy::load("a\tb\nb\ta\n"),
            Err(TaxonomyError::CycleDetected(c("a")))
        );
        assert!(matches!(
            Taxonomy::load("a\tr1\nb\tr2\n"),
            Err(TaxonomyError::MultipleRoots(_))
        ));
        assert_eq!(Taxonomy::load("# only\n\n"), Err(TaxonomyError::EmptyDocument));
        assert_eq!(
            Taxonomy::load("a\tr\na\tq\n"),
            Err(TaxonomyError::DuplicateConcept(c("a")))
        );
        assert!(matches!(
            Taxonomy::load("a r\n"),
            Err(TaxonomyError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            Taxonomy::load("r\nx\ty\n"),
            Err(TaxonomyError::MultipleRoots(_))
        ));
        // a root plus a detached loop
        assert!(matches!(
            Taxonomy::load("a\tr\nx\ty\ny\tx\n"),
            Err(TaxonomyError::CycleDetected(_))
        ));
    }

    #[test]
    fn root_only_taxonomy_round_trips() {
        let t = Taxonomy::load("# lone\nRoot\n").unwrap();
        assert_eq!(t.root(), &c("root"));
        assert_eq!(t.len(), 1);
        assert_eq!(t.to_document(), "root\n");
        assert_eq!(Taxonomy::load(&t.to_document()).unwrap(), t);
        // a bare line naming the root of an edge list is redundant but valid
        assert_eq!(Taxonomy::load("r\na\tr\n").unwrap(), Taxonomy::load("a\tr\n").unwrap());
    }

    #[test]
    fn orphan_when_chain_misses_root() {
        let mut parents = BTreeMap::new();
        parents.insert(c("a"), c("b"));
        let err = Taxonomy::from_parents(c("r"), parents).unwrap_err();
        assert_eq!(err, TaxonomyError::OrphanConcept(c("b")));
    }

    #[test]
    fn depth_and_unknown() {
        let t = chain();
        assert_eq!(t.depth(&c("root")).unwrap(), 1);
        assert_eq!(t.depth(&c("thing")).unwrap(), 2);
        assert_eq!(t.depth(&c("zzz")), Err(TaxonomyError::UnknownConcept(c("zzz"))));
    }

    #[test]
    fn lca_cases() {
        let t = chain();
        assert_eq!(t.lowest_common_ancestor(&c("maps"), &c("maps")).unwrap(), c("maps"));
        assert_eq!(
            t.lowest_common_ancestor(&c("maps"), &c("weather")).unwrap(),
            c("service")
        );
        for x in t.concepts() {
            assert_eq!(t.lowest_common_ancestor(&c("root"), x).unwrap(), c("root"));
        }
        assert!(t.lowest_common_ancestor(&c("maps"), &c("nope")).is_err());
    }

    #[test]
    fn similarity_values() {
        // siblings at depth 3 under a depth-2 parent
        let t = Taxonomy::load("p\troot\nx\tp\ny\tp\nq\tp\nleaf\tq\n").unwrap();
        assert_eq!(t.wu_palmer_similarity(&c("x"), &c("x")).unwrap(), 1.0);
        let sib = t.wu_palmer_similarity(&c("x"), &c("y")).unwrap();
        // oracle: deepest shared ancestor via set intersection
        let ax = ancestors(&t, &c("x"));
        let ay = ancestors(&t, &c("y"));
        let lca = ax
            .iter()
            .filter(|a| ay.contains(a))
            .max_by_key(|a| t.depth(a).unwrap())
            .unwrap();
        let expected = 2.0 * t.depth(lca).unwrap() as f64 / 6.0;
        assert_eq!(sib, expected);
        assert!((sib - 2.0 / 3.0).abs() < 1e-15);
        let root_leaf = t.wu_palmer_similarity(&c("root"), &c("leaf")).unwrap();
        assert_eq!(t.depth(&c("leaf")).unwrap(), 4);
        assert!((root_leaf - 0.4).abs() < 1e-15);
    }

    #[test]
    fn ancestor_chain_is_monotone() {
        let t = Taxonomy::balanced(3, 6);
        let leaf = t.leaves()[7].clone();
        let chain = ancestors(&t, &leaf);
        // chain runs leaf → root; similarity must fall as we climb
        let sims: Vec<f64> = chain
            .iter()
            .map(|a| t.wu_palmer_similarity(&leaf, a).unwrap())
            .collect();
        assert!(sims.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn document_round_trip() {
        let t = Taxonomy::bundled();
        assert_eq!(Taxonomy::load(&t.to_document()).unwrap(), t);
        let b = Taxonomy::balanced(2, 3);
        assert_eq!(b.len(), 7);
        assert_eq!(b.leaves().len(), 4);
    }
}
