//! Heterogeneous ad graph: ads, funding entities, stance labels, issue labels
//! and lexicon words, joined by four typed relations.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::AdCorpus;
use crate::labels::{Issue, Stance};
use crate::textproc::{tokenize, TokenSeq};
use crate::weaklabel::{AdStanceLabels, EntityStance};

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("{kind} `{name}` is not in the corpus")]
    Dangling { kind: &'static str, name: String },
    #[error("lexicon word `{0}` is assigned to more than one issue")]
    ConflictingIssue(String),
    #[error("{relation:?} edge ({source_index}, {target}) points outside the graph")]
    BadEdge {
        relation: Relation,
        source_index: usize,
        target: usize,
    },
    #[error("no negative candidates for {relation:?} source {source_index}")]
    EmptyPool { relation: Relation, source_index: usize },
    #[error("validation fraction must be in (0, 1), got {0}")]
    BadFraction(f64),
    #[error("invalid graph json: {0}")]
    Json(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Ad,
    Entity,
    Stance,
    Issue,
    LexWord,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId {
    pub kind: NodeKind,
    pub index: usize,
}

impl NodeId {
    pub fn new(kind: NodeKind, index: usize) -> Self {
        NodeId { kind, index }
    }
}

/// The four training relations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Relation {
    /// Funding entity has a stance.
    EntityStance,
    /// Ad has a stance.
    AdStance,
    /// Ad contains a lexicon word.
    AdWord,
    /// Lexicon word belongs to an issue.
    WordIssue,
}

impl Relation {
    pub const ALL: [Relation; 4] = [
        Relation::EntityStance,
        Relation::AdStance,
        Relation::AdWord,
        Relation::WordIssue,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn source_kind(self) -> NodeKind {
        match self {
            Relation::EntityStance => NodeKind::Entity,
            Relation::AdStance | Relation::AdWord => NodeKind::Ad,
            Relation::WordIssue => NodeKind::LexWord,
        }
    }

    pub fn target_kind(self) -> NodeKind {
        match self {
            Relation::EntityStance | Relation::AdStance => NodeKind::Stance,
            Relation::AdWord => NodeKind::LexWord,
            Relation::WordIssue => NodeKind::Issue,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
}

/// Edge lists keyed by relation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSets {
    pub entity_stance: Vec<Edge>,
    pub ad_stance: Vec<Edge>,
    pub ad_word: Vec<Edge>,
    pub word_issue: Vec<Edge>,
}

impl EdgeSets {
    pub fn get(&self, r: Relation) -> &[Edge] {
        match r {
            Relation::EntityStance => &self.entity_stance,
            Relation::AdStance => &self.ad_stance,
            Relation::AdWord => &self.ad_word,
            Relation::WordIssue => &self.word_issue,
        }
    }

    pub fn get_mut(&mut self, r: Relation) -> &mut Vec<Edge> {
        match r {
            Relation::EntityStance => &mut self.entity_stance,
            Relation::AdStance => &mut self.ad_stance,
            Relation::AdWord => &mut self.ad_word,
            Relation::WordIssue => &mut self.word_issue,
        }
    }

    pub fn total(&self) -> usize {
        Relation::ALL.iter().map(|r| self.get(*r).len()).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdNode {
    pub id: String,
    pub tokens: TokenSeq,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdGraph {
    pub ads: Vec<AdNode>,
    pub entities: Vec<String>,
    pub words: Vec<String>,
    pub edges: EdgeSets,
}

impl AdGraph {
    pub fn population(&self, kind: NodeKind) -> usize {
        match kind {
            NodeKind::Ad => self.ads.len(),
            NodeKind::Entity => self.entities.len(),
            NodeKind::Stance => Stance::ALL.len(),
            NodeKind::Issue => Issue::ALL.len(),
            NodeKind::LexWord => self.words.len(),
        }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        for r in Relation::ALL {
            let (ns, nt) = (self.population(r.source_kind()), self.population(r.target_kind()));
            for e in self.edges.get(r) {
                if e.source >= ns || e.target >= nt {
                    return Err(GraphError::BadEdge {
                        relation: r,
                        source_index: e.source,
                        target: e.target,
                    });
                }
            }
        }
        let mut word_issue = BTreeMap::new();
        for e in &self.edges.word_issue {
            if word_issue.insert(e.source, e.target).is_some_and(|t| t != e.target) {
                return Err(GraphError::ConflictingIssue(self.words[e.source].clone()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn from_json(raw: &str) -> Result<Self, GraphError> {
        let g: AdGraph = serde_json::from_str(raw).map_err(|e| GraphError::Json(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency::new(self, &self.edges)
    }
}

/// Builds the graph from a deduplicated corpus and its weak supervision.
/// Every ad and entity gets a node even without edges.
pub fn build_graph(
    corpus: &AdCorpus,
    entity_stances: &BTreeMap<String, EntityStance>,
    ad_stances: &BTreeMap<String, AdStanceLabels>,
    lexicon_matches: &BTreeMap<String, BTreeSet<(String, Issue)>>,
) -> Result<AdGraph, GraphError> {
    let ads: Vec<AdNode> = corpus
        .ads()
        .iter()
        .map(|a| AdNode {
            id: a.id.clone(),
            tokens: tokenize(&a.text),
        })
        .collect();
    let ad_index: BTreeMap<&str, usize> =
        ads.iter().enumerate().map(|(i, a)| (a.id.as_str(), i)).collect();
    let entities: Vec<String> = corpus.entities().into_iter().map(|e| e.name).collect();
    let entity_index: BTreeMap<&str, usize> =
        entities.iter().enumerate().map(|(i, e)| (e.as_str(), i)).collect();

    let mut word_issue: BTreeMap<&str, Issue> = BTreeMap::new();
    for (ad, matches) in lexicon_matches {
        if !ad_index.contains_key(ad.as_str()) {
            return Err(GraphError::Dangling {
                kind: "ad",
                name: ad.clone(),
            });
        }
        for (word, issue) in matches {
            if *word_issue.entry(word.as_str()).or_insert(*issue) != *issue {
                return Err(GraphError::ConflictingIssue(word.clone()));
            }
        }
    }
    let words: Vec<String> = word_issue.keys().map(|w| (*w).to_owned()).collect();
    let word_index: BTreeMap<&str, usize> =
        words.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();

    let mut edges = EdgeSets::default();
    for (name, stance) in entity_stances {
        let &source = entity_index.get(name.as_str()).ok_or_else(|| GraphError::Dangling {
            kind: "entity",
            name: name.clone(),
        })?;
        edges.entity_stance.push(Edge {
            source,
            target: stance.stance().index(),
        });
    }
    for (id, labels) in ad_stances {
        let &source = ad_index.get(id.as_str()).ok_or_else(|| GraphError::Dangling {
            kind: "ad",
            name: id.clone(),
        })?;
        for s in labels.iter() {
            edges.ad_stance.push(Edge {
                source,
                target: s.index(),
            });
        }
    }
    for (id, matches) in lexicon_matches {
        let source = ad_index[id.as_str()];
        for (word, _) in matches {
            edges.ad_word.push(Edge {
                source,
                target: word_index[word.as_str()],
            });
        }
    }
    for (word, issue) in &word_issue {
        edges.word_issue.push(Edge {
            source: word_index[word],
            target: issue.index(),
        });
    }
    for r in Relation::ALL {
        edges.get_mut(r).sort();
    }
    Ok(AdGraph {
        ads,
        entities,
        words,
        edges,
    })
}

/// Positive targets per (relation, source), sorted.
#[derive(Clone, Debug)]
pub struct Adjacency {
    positives: [Vec<Vec<usize>>; 4],
    target_population: [usize; 4],
}

impl Adjacency {
    /// Positives are taken from `edges`, which may be a subset of the graph's edges.
    pub fn new(graph: &AdGraph, edges: &EdgeSets) -> Self {
        let positives = Relation::ALL.map(|r| {
            let mut lists = vec![Vec::new(); graph.population(r.source_kind())];
            for e in edges.get(r) {
                lists[e.source].push(e.target);
            }
            for l in lists.iter_mut() {
                l.sort_unstable();
                l.dedup();
            }
            lists
        });
        Adjacency {
            positives,
            target_population: Relation::ALL.map(|r| graph.population(r.target_kind())),
        }
    }

    pub fn positives(&self, r: Relation, source: usize) -> &[usize] {
        &self.positives[r.index()][source]
    }
}

/// Draws up to `count` distinct targets of the relation's target kind that
/// are not positives of `source`. When fewer candidates remain, all of them
/// are returned in random order.
pub fn negative_sample<R: Rng + ?Sized>(
    adj: &Adjacency,
    relation: Relation,
    source: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<NodeId>, GraphError> {
    let pos = adj.positives(relation, source);
    let population = adj.target_population[relation.index()];
    let pool_size = population - pos.len();
    if pool_size == 0 {
        return Err(GraphError::EmptyPool {
            relation,
            source_index: source,
        });
    }
    let take = count.min(pool_size);
    let kind = relation.target_kind();
    Ok(index::sample(rng, pool_size, take)
        .into_iter()
        .map(|slot| {
            // Map the slot-th non-positive id onto the full id range.
            let mut id = slot;
            for &p in pos {
                if p <= id {
                    id += 1;
                } else {
                    break;
                }
            }
            NodeId::new(kind, id)
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSplit {
    pub train: EdgeSets,
    pub validation: EdgeSets,
}

/// Per-relation random split. Each relation sends round(fraction * m) edges
/// to validation where possible, but an edge only moves if both endpoints
/// keep at least one training edge, so nodes with a single edge always train.
pub fn split_validation(graph: &AdGraph, fraction: f64, seed: u64) -> Result<EdgeSplit, GraphError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(GraphError::BadFraction(fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut degree: BTreeMap<NodeId, usize> = BTreeMap::new();
    for r in Relation::ALL {
        for e in graph.edges.get(r) {
            *degree.entry(NodeId::new(r.source_kind(), e.source)).or_default() += 1;
            *degree.entry(NodeId::new(r.target_kind(), e.target)).or_default() += 1;
        }
    }
    let mut split = EdgeSplit {
        train: EdgeSets::default(),
        validation: EdgeSets::default(),
    };
    for r in Relation::ALL {
        let edges = graph.edges.get(r);
        let wanted = (fraction * edges.len() as f64).round() as usize;
        let mut order: Vec<usize> = (0..edges.len()).collect();
        order.shuffle(&mut rng);
        let mut to_validation = vec![false; edges.len()];
        let mut moved = 0;
        for i in order {
            if moved == wanted {
                break;
            }
            let e = edges[i];
            let s = NodeId::new(r.source_kind(), e.source);
            let t = NodeId::new(r.target_kind(), e.target);
            if degree[&s] >= 2 && degree[&t] >= 2 {
                *degree.get_mut(&s).unwrap() -= 1;
                *degree.get_mut(&t).unwrap() -= 1;
                to_validation[i] = true;
                moved += 1;
            }
        }
        for (i, e) in edges.iter().enumerate() {
            let dest = if to_validation[i] {
                &mut split.validation
            } else {
                &mut split.train
            };
            dest.get_mut(r).push(*e);
        }
    }
    Ok(split)
}
