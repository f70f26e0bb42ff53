//! Stance rules for funding entities whose names reveal their side, and
//! propagation of those stances to the entities' ads.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::AdCorpus;
use crate::labels::{Candidate, Polarity, Stance};
use crate::textproc::{tokenize, TokenSeq};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityStance {
    pub candidate: Candidate,
    pub polarity: Polarity,
}

impl EntityStance {
    pub fn stance(self) -> Stance {
        Stance::new(self.polarity, self.candidate)
    }
}

impl From<Stance> for EntityStance {
    fn from(s: Stance) -> Self {
        EntityStance {
            candidate: s.candidate(),
            polarity: s.polarity(),
        }
    }
}

/// Stance set of one ad. Never holds both pro-X and anti-X.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AdStanceLabels(BTreeSet<Stance>);

impl AdStanceLabels {
    /// Adds `stance` unless its opposite is already present. Returns whether it was added.
    pub fn insert(&mut self, stance: Stance) -> bool {
        let opposite = Stance::new(stance.polarity().inverted(), stance.candidate());
        if self.0.contains(&opposite) {
            return false;
        }
        self.0.insert(stance)
    }

    pub fn contains(&self, stance: Stance) -> bool {
        self.0.contains(&stance)
    }

    pub fn iter(&self) -> impl Iterator<Item = Stance> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_consistent(&self) -> bool {
        !self.0.iter().any(|s| {
            self.0
                .contains(&Stance::new(s.polarity().inverted(), s.candidate()))
        })
    }
}

/// Cue words for the name rules. Each list matches whole lowercase words.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CueConfig {
    pub trump_terms: Vec<String>,
    pub biden_terms: Vec<String>,
    pub trump_party_terms: Vec<String>,
    pub biden_party_terms: Vec<String>,
    pub negation_terms: Vec<String>,
}

fn words(ws: &[&str]) -> Vec<String> {
    ws.iter().map(|w| (*w).to_owned()).collect()
}

impl Default for CueConfig {
    fn default() -> Self {
        CueConfig {
            trump_terms: words(&["trump", "pence"]),
            biden_terms: words(&["biden", "harris"]),
            trump_party_terms: words(&["republican", "republicans", "gop"]),
            biden_party_terms: words(&["democrat", "democrats", "democratic"]),
            negation_terms: words(&["dump", "lie", "out", "fail", "against"]),
        }
    }
}

impl CueConfig {
    pub fn from_json(raw: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(raw)
    }

    fn mentions(&self, tokens: &BTreeSet<String>, candidate: Candidate, with_party: bool) -> bool {
        let (names, party) = match candidate {
            Candidate::Trump => (&self.trump_terms, &self.trump_party_terms),
            Candidate::Biden => (&self.biden_terms, &self.biden_party_terms),
        };
        let hit = |list: &Vec<String>| list.iter().any(|w| tokens.contains(w));
        hit(names) || (with_party && hit(party))
    }
}

/// Splits on anything that is not a letter, digit or apostrophe, so that
/// "Trump-Pence" yields both names.
fn name_words(text: &str) -> BTreeSet<String> {
    text.to_lowercase()
        .split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .filter(|w| !w.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Stance revealed by a funding entity's name, if any. Names mentioning both
/// sides, or neither, are treated as implicit.
pub fn classify_entity_name(name: &str, cues: &CueConfig) -> Option<EntityStance> {
    let tokens = name_words(name);
    let trump = cues.mentions(&tokens, Candidate::Trump, true);
    let biden = cues.mentions(&tokens, Candidate::Biden, true);
    let candidate = match (trump, biden) {
        (true, false) => Candidate::Trump,
        (false, true) => Candidate::Biden,
        _ => return None,
    };
    let negated = cues.negation_terms.iter().any(|w| tokens.contains(w));
    Some(EntityStance {
        candidate,
        polarity: if negated { Polarity::Anti } else { Polarity::Pro },
    })
}

/// The entity's own stance plus, when the ad names the opponent, the
/// inverted stance toward that opponent.
pub fn derive_ad_stances(entity: EntityStance, ad_tokens: &TokenSeq, cues: &CueConfig) -> AdStanceLabels {
    let mut labels = AdStanceLabels::default();
    labels.insert(entity.stance());
    let tokens: BTreeSet<String> = ad_tokens.iter().map(str::to_owned).collect();
    let opponent = entity.candidate.opponent();
    if cues.mentions(&tokens, opponent, false) {
        labels.insert(Stance::new(entity.polarity.inverted(), opponent));
    }
    labels
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub entities: usize,
    pub explicit_entities: usize,
    pub ads: usize,
    pub weakly_labeled_ads: usize,
}

/// Weak supervision for a corpus: explicit entity stances and ad stance sets.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeakLabels {
    pub entity_stances: BTreeMap<String, EntityStance>,
    pub ad_stances: BTreeMap<String, AdStanceLabels>,
    pub counts: LabelCounts,
}

pub fn weak_label_corpus(corpus: &AdCorpus, cues: &CueConfig) -> WeakLabels {
    let entities = corpus.entities();
    let entity_stances: BTreeMap<String, EntityStance> = entities
        .iter()
        .filter_map(|e| classify_entity_name(&e.name, cues).map(|s| (e.name.clone(), s)))
        .collect();
    let ad_stances: BTreeMap<String, AdStanceLabels> = corpus
        .ads()
        .iter()
        .filter_map(|ad| {
            let stance = entity_stances.get(&ad.funding_entity)?;
            Some((ad.id.clone(), derive_ad_stances(*stance, &tokenize(&ad.text), cues)))
        })
        .collect();
    WeakLabels {
        counts: LabelCounts {
            entities: entities.len(),
            explicit_entities: entity_stances.len(),
            ads: corpus.len(),
            weakly_labeled_ads: ad_stances.len(),
        },
        entity_stances,
        ad_stances,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::AdRecord;
    use proptest::prelude::*;

    fn classify(name: &str) -> Option<Stance> {
        classify_entity_name(name, &CueConfig::default()).map(EntityStance::stance)
    }

    #[test]
    fn named_entities() {
        assert_eq!(classify("BIDEN FOR PRESIDENT"), Some(Stance::ProBiden));
        assert_eq!(classify("Keep Trump in office"), Some(Stance::ProTrump));
        assert_eq!(classify("Biden Victory Fund"), Some(Stance::ProBiden));
        assert_eq!(classify("DONALD J. TRUMP FOR PRESIDENT, INC"), Some(Stance::ProTrump));
        assert_eq!(classify("Union 2020"), None);
        assert_eq!(classify("Plains PAC"), None);
    }

    #[test]
    fn negation_and_party_rules() {
        assert_eq!(classify("Dump Trump PAC"), Some(Stance::AntiTrump));
        assert_eq!(classify("Vote Him Out: Trump"), Some(Stance::AntiTrump));
        assert_eq!(classify("Republicans Against Biden"), None);
        assert_eq!(classify("Americans Against Biden"), Some(Stance::AntiBiden));
        assert_eq!(classify("Democratic Party of Idaho"), Some(Stance::ProBiden));
        assert_eq!(classify("GOP Victory"), Some(Stance::ProTrump));
        assert_eq!(classify("Democrats Against the GOP"), None);
        // "outreach" is not the cue "out".
        assert_eq!(classify("Trump Outreach Team"), Some(Stance::ProTrump));
        assert_eq!(classify("Trump-Pence 2020"), Some(Stance::ProTrump));
        assert_eq!(classify("Trumpet Society"), None);
    }

    #[test]
    fn cross_candidate_rule() {
        let cues = CueConfig::default();
        let pro_trump = EntityStance::from(Stance::ProTrump);
        let got = derive_ad_stances(pro_trump, &tokenize("Joe Biden will raise your taxes"), &cues);
        assert_eq!(got.iter().collect::<Vec<_>>(), vec![Stance::ProTrump, Stance::AntiBiden]);

        let pro_biden = EntityStance::from(Stance::ProBiden);
        let got = derive_ad_stances(pro_biden, &tokenize("Vote early"), &cues);
        assert_eq!(got.iter().collect::<Vec<_>>(), vec![Stance::ProBiden]);

        let anti_trump = EntityStance::from(Stance::AntiTrump);
        let got = derive_ad_stances(anti_trump, &tokenize("Biden will lead"), &cues);
        assert_eq!(got.iter().collect::<Vec<_>>(), vec![Stance::ProBiden, Stance::AntiTrump]);
    }

    #[test]
    fn labels_reject_contradictions() {
        let mut l = AdStanceLabels::default();
        assert!(l.insert(Stance::ProBiden));
        assert!(!l.insert(Stance::AntiBiden));
        assert!(l.is_consistent());
    }

    #[test]
    fn corpus_labelling_counts() {
        let corpus = AdCorpus::new(vec![
            AdRecord::new("1", "Biden is weak", "Keep Trump in office"),
            AdRecord::new("2", "Jobs now", "Keep Trump in office"),
            AdRecord::new("3", "Vote", "Union 2020"),
        ])
        .unwrap();
        let labels = weak_label_corpus(&corpus, &CueConfig::default());
        assert_eq!(labels.counts.entities, 2);
        assert_eq!(labels.counts.explicit_entities, 1);
        assert_eq!(labels.counts.weakly_labeled_ads, 2);
        assert_eq!(labels.ad_stances["1"].len(), 2);
        let json = serde_json::to_string(&labels).unwrap();
        let back: WeakLabels = serde_json::from_str(&json).unwrap();
        assert_eq!(back, labels);
    }

    #[test]
    fn cue_config_override() {
        let cues = CueConfig::from_json(r#"{"negation_terms": ["stop"]}"#).unwrap();
        assert_eq!(
            classify_entity_name("Stop Biden Now", &cues).map(EntityStance::stance),
            Some(Stance::AntiBiden)
        );
        assert_eq!(cues.trump_terms, CueConfig::default().trump_terms);
    }

    proptest! {
        #[test]
        fn case_insensitive(name in "[A-Za-z ]{0,12}(trump|Biden|GOP|democrat|Dump|out)?[A-Za-z ]{0,12}") {
            let cues = CueConfig::default();
            prop_assert_eq!(
                classify_entity_name(&name, &cues),
                classify_entity_name(&name.to_uppercase(), &cues)
            );
        }

        #[test]
        fn derived_labels_consistent(stance_idx in 0usize..4, text in "(biden|trump|harris|pence|vote|jobs| ){0,8}") {
            let entity = EntityStance::from(Stance::ALL[stance_idx]);
            let labels = derive_ad_stances(entity, &tokenize(&text), &CueConfig::default());
            prop_assert!(labels.is_consistent());
            prop_assert!(labels.contains(entity.stance()));
            prop_assert!(labels.len() <= 2);
        }

        #[test]
        fn names_without_terms_stay_implicit(name in "[a-z ]{0,30}") {
            let cues = CueConfig::default();
            let toks = name_words(&name);
            let has_term = cues.trump_terms.iter()
                .chain(&cues.biden_terms)
                .chain(&cues.trump_party_terms)
                .chain(&cues.biden_party_terms)
                .any(|t| toks.contains(t));
            if !has_term {
                prop_assert!(classify_entity_name(&name, &cues).is_none());
            }
        }
    }
}
