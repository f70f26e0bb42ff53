//! Seeded synthetic ad archive with known stances and issues, used as the
//! ground truth for end-to-end checks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::PollRow;
use crate::corpus::{parse_ads, AdCorpus, LoadSummary};
use crate::labels::{Candidate, Issue, Stance};
use crate::lexicon::IssueDocCorpus;
use crate::textproc::tokenize;
use crate::weaklabel::{AdStanceLabels, CueConfig};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    Spec(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub explicit_entities: usize,
    pub implicit_entities: usize,
    pub ads_per_entity: usize,
    pub issues: Vec<Issue>,
    /// Stance mixture for implicit entities, in `Stance::ALL` order.
    pub stance_mix: [f64; 4],
    /// Target share of filler tokens in each ad.
    pub noise_rate: f64,
    /// Chance that an ad also attacks or praises the other candidate by name.
    pub mention_rate: f64,
    pub docs_per_issue: usize,
    pub vector_dim: usize,
    pub seed: u64,
    pub stance_bank: BTreeMap<Stance, Vec<String>>,
    pub issue_bank: BTreeMap<Issue, Vec<String>>,
    pub filler: Vec<String>,
}

fn bank(phrases: &[&str]) -> Vec<String> {
    phrases.iter().map(|p| (*p).to_owned()).collect()
}

pub fn default_stance_bank() -> BTreeMap<Stance, Vec<String>> {
    BTreeMap::from([
        (
            Stance::ProBiden,
            bank(&[
                "vote joe biden",
                "joe kamala democrat",
                "today vote democrat",
                "endorse joe biden",
                "joe biden president",
                "sure joe biden wins",
                "kamala democrat country",
                "chip in to elect biden",
            ]),
        ),
        (
            Stance::AntiTrump,
            bank(&[
                "defeat donald trump",
                "condemn donald trump",
                "request ballot today",
                "time running out",
                "new trumpcare plan",
                "not authorized candidate",
                "trump failed every test",
                "donate to defeat him",
            ]),
        ),
        (
            Stance::ProTrump,
            bank(&[
                "president trump needs you",
                "trump needs your vote",
                "vote november third",
                "fake news media",
                "live the american dream",
                "forgotten men and women",
                "keep america great",
                "real american patriots",
            ]),
        ),
        (
            Stance::AntiBiden,
            bank(&[
                "radical left takeover",
                "sleepy joe biden",
                "trillions in new taxes",
                "biden embraced socialism",
                "policy far left",
                "washington swamp insiders",
                "stop the radical mob",
                "biden weak and confused",
            ]),
        ),
    ])
}

pub fn default_issue_bank() -> BTreeMap<Issue, Vec<String>> {
    use Issue::*;
    BTreeMap::from([
        (Abortion, bank(&["womens right to choose", "defend the unborn", "planned parenthood funding", "reproductive freedom", "pro life values", "roe wade precedent"])),
        (Climate, bank(&["clean energy jobs", "climate change crisis", "carbon emissions rising", "protect our planet", "wildfires and floods", "renewable power grid"])),
        (Covid, bank(&["wear a mask", "coronavirus cases rising", "develop a safe vaccine", "pandemic relief", "listen to health experts", "covid testing sites"])),
        (CriminalJustice, bank(&["law and order", "support our police", "systemic racism", "criminal justice reform", "police accountability", "racial justice"])),
        (Economy, bank(&["cut your taxes", "create good paying jobs", "small business relief", "raise the minimum wage", "stock market record", "middle class paychecks"])),
        (Education, bank(&["fund public schools", "student debt relief", "pay teachers more", "school choice", "college tuition costs", "reopen classrooms"])),
        (ForeignPolicy, bank(&["stand with our allies", "confront china", "bring troops home", "peace deals abroad", "nato alliance", "russian interference"])),
        (Guns, bank(&["second amendment rights", "universal background checks", "gun violence epidemic", "assault weapons ban", "nra endorsed", "firearm owners"])),
        (Healthcare, bank(&["affordable care act", "preexisting conditions", "lower drug prices", "health insurance coverage", "medicare for seniors", "hospital bills soaring"])),
        (Immigration, bank(&["build the wall", "secure our border", "illegal immigrants", "dreamers deserve protection", "asylum seekers", "immigration reform"])),
        (Lgbtq, bank(&["marriage equality", "transgender rights", "lgbtq community pride", "equality act", "end conversion therapy", "queer youth"])),
        (SupremeCourt, bank(&["supreme court justice", "confirm the nominee", "court vacancy", "amy coney barrett", "judicial appointments", "ruth bader ginsburg"])),
        (Terrorism, bank(&["defeat isis", "homeland security threats", "terror attacks", "counterterrorism operations", "extremist plots", "national security"])),
    ])
}

pub fn default_filler() -> Vec<String> {
    bank(&[
        "the", "our", "we", "join", "now", "together", "learn", "more", "click", "here", "share",
        "friends", "family", "community", "future", "people", "every", "help", "make", "your",
        "voice", "heard", "this", "year", "matters", "us", "stand", "with", "please", "follow",
    ])
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            explicit_entities: 4,
            implicit_entities: 36,
            ads_per_entity: 10,
            issues: vec![Issue::Covid, Issue::Economy, Issue::Healthcare, Issue::Immigration],
            stance_mix: [0.25; 4],
            noise_rate: 0.2,
            mention_rate: 0.2,
            docs_per_issue: 200,
            vector_dim: 300,
            seed: 42,
            stance_bank: default_stance_bank(),
            issue_bank: default_issue_bank(),
            filler: default_filler(),
        }
    }
}

/// One ad line in the archive's JSON shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApiAd {
    pub id: String,
    pub ad_creative_bodies: Vec<String>,
    pub funding_entity: String,
    pub ad_creation_time: String,
    pub ad_delivery_start_time: String,
    pub ad_delivery_stop_time: String,
    pub spend: ApiRange,
    pub impressions: ApiRange,
    pub demographic_distribution: Vec<ApiDemographic>,
    pub region_distribution: Vec<ApiRegion>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApiRange {
    pub lower_bound: String,
    pub upper_bound: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApiDemographic {
    pub age: String,
    pub gender: String,
    pub percentage: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApiRegion {
    pub region: String,
    pub percentage: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRow {
    pub ad_id: String,
    /// The funding entity's own stance.
    pub stance: Stance,
    pub issue: Issue,
    /// Own stance plus the inverted opponent stance when the opponent is named.
    pub all_stances: String,
    pub entity: String,
    pub explicit: bool,
}

impl GoldRow {
    pub fn stance_set(&self) -> BTreeSet<Stance> {
        self.all_stances
            .split(';')
            .map(|s| s.parse().expect("written by the generator"))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IssueDocLine {
    pub issue: Issue,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthCorpus {
    pub ads: Vec<ApiAd>,
    pub gold: Vec<GoldRow>,
    pub issue_docs: Vec<IssueDocLine>,
    pub word_vectors: Vec<(String, Vec<f64>)>,
    pub polls: Vec<PollRow>,
    /// Hidden stance of every entity.
    pub entities: BTreeMap<String, Stance>,
}

const STATES: [&str; 6] = ["Pennsylvania", "New York", "Idaho", "California", "Texas", "Florida"];
const AGES: [&str; 6] = ["18-24", "25-34", "35-44", "45-54", "55-64", "65+"];
const NAME_STEMS: [&str; 12] = [
    "Citizens", "Neighbors", "Workers", "Veterans", "Families", "Patriots", "Friends", "Farmers",
    "Teachers", "Nurses", "Builders", "Seniors",
];
const PLACES: [&str; 12] = [
    "Prairie", "Harbor", "Summit", "Valley", "Coastal", "Heartland", "Lakeshore", "Granite",
    "Riverside", "Pioneer", "Mesa", "Timber",
];
const SUFFIXES: [&str; 6] = ["PAC", "Fund", "Alliance", "Action", "Project", "Network"];

fn explicit_name(stance: Stance, k: usize) -> String {
    let stem = NAME_STEMS[k % NAME_STEMS.len()];
    let n = k / NAME_STEMS.len();
    let tag = if n == 0 { String::new() } else { format!(" {}", n + 1) };
    match stance {
        Stance::ProBiden => format!("{stem} for Biden{tag}"),
        Stance::ProTrump => format!("Keep Trump {stem}{tag}"),
        Stance::AntiBiden => format!("{stem} Against Biden{tag}"),
        Stance::AntiTrump => format!("Dump Trump {stem}{tag}"),
    }
}

fn implicit_name(k: usize) -> String {
    let place = PLACES[k % PLACES.len()];
    let suffix = SUFFIXES[(k / PLACES.len()) % SUFFIXES.len()];
    let n = k / (PLACES.len() * SUFFIXES.len());
    if n == 0 {
        format!("{place} {suffix}")
    } else {
        format!("{place} {suffix} {}", 2020 + n)
    }
}

fn fmt_fraction(f: f64) -> String {
    // Truncate so rounded cells never sum above one.
    format!("{:.6}", (f * 1e6).floor() / 1e6)
}

fn names_candidate(cues: &CueConfig, phrase: &str, c: Candidate) -> bool {
    let names = match c {
        Candidate::Trump => &cues.trump_terms,
        Candidate::Biden => &cues.biden_terms,
    };
    let tokens = tokenize(phrase);
    let hit = tokens.iter().any(|t| names.iter().any(|n| n == t));
    hit
}

impl SynthSpec {
    fn validate(&self, cues: &CueConfig) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Spec(m));
        if self.issues.is_empty() {
            return bad("at least one issue is required".into());
        }
        if self.explicit_entities + self.implicit_entities == 0 || self.ads_per_entity == 0 {
            return bad("need at least one entity and one ad per entity".into());
        }
        if !(0.0..1.0).contains(&self.noise_rate) || !(0.0..=1.0).contains(&self.mention_rate) {
            return bad("noise rate must lie in [0, 1) and mention rate in [0, 1]".into());
        }
        if self.stance_mix.iter().any(|w| !(*w >= 0.0)) || self.stance_mix.iter().sum::<f64>() <= 0.0 {
            return bad("stance mixture needs nonnegative weights with a positive sum".into());
        }
        if self.filler.is_empty() || self.vector_dim == 0 {
            return bad("filler bank and vector dimension must be nonempty".into());
        }
        for issue in &self.issues {
            if self.issue_bank.get(issue).is_none_or(Vec::is_empty) {
                return bad(format!("no phrases for issue {issue}"));
            }
        }
        for s in Stance::ALL {
            let phrases = self.stance_bank.get(&s).map(Vec::as_slice).unwrap_or(&[]);
            if phrases.is_empty() {
                return bad(format!("no phrases for stance {s}"));
            }
            // Own phrases must not name the opponent, or gold labels drift.
            let opponent = s.candidate().opponent();
            if let Some(p) = phrases.iter().find(|p| names_candidate(cues, p, opponent)) {
                return bad(format!("{s} phrase `{p}` names the opponent"));
            }
            if !phrases.iter().any(|p| names_candidate(cues, p, s.candidate())) {
                return bad(format!("{s} bank has no phrase naming its target candidate"));
            }
        }
        for text in self.filler.iter().chain(self.issue_bank.values().flatten()) {
            if names_candidate(cues, text, Candidate::Trump) || names_candidate(cues, text, Candidate::Biden) {
                return bad(format!("`{text}` names a candidate"));
            }
        }
        Ok(())
    }
}

/// Template words followed by filler insertions at random positions, sized so
/// that roughly `noise` of the final tokens are filler.
fn noisy_tokens(rng: &mut ChaCha8Rng, phrases: &[&str], filler: &[String], noise: f64) -> Vec<String> {
    let mut toks: Vec<String> = phrases.iter().flat_map(|p| p.split_whitespace()).map(str::to_owned).collect();
    let inserts = (noise / (1.0 - noise) * toks.len() as f64).round() as usize;
    for _ in 0..inserts {
        let at = rng.random_range(0..=toks.len());
        toks.insert(at, filler.choose(rng).expect("nonempty").clone());
    }
    toks
}

fn sample_mix(rng: &mut ChaCha8Rng, mix: &[f64; 4]) -> Stance {
    let total: f64 = mix.iter().sum();
    let mut u = rng.random_range(0.0..total);
    for (s, w) in Stance::ALL.iter().zip(mix) {
        if u < *w {
            return *s;
        }
        u -= w;
    }
    *Stance::ALL.iter().zip(mix).rev().find(|(_, w)| **w > 0.0).expect("positive mass").0
}

/// Generates the archive, gold labels, issue reference documents, word
/// vectors and a poll series, all determined by `spec.seed`.
pub fn generate(spec: &SynthSpec) -> Result<SynthCorpus, SynthError> {
    let cues = CueConfig::default();
    spec.validate(&cues)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut entities: Vec<(String, Stance, bool)> = Vec::new();
    for k in 0..spec.explicit_entities {
        let s = Stance::ALL[k % 4];
        entities.push((explicit_name(s, k), s, true));
    }
    for k in 0..spec.implicit_entities {
        entities.push((implicit_name(k), sample_mix(&mut rng, &spec.stance_mix), false));
    }

    let base = NaiveDate::from_ymd_opt(2020, 9, 1).expect("valid date");
    let mut ads = Vec::new();
    let mut gold = Vec::new();
    for (e_idx, (name, stance, explicit)) in entities.iter().enumerate() {
        let own: Vec<&str> = spec.stance_bank[stance].iter().map(String::as_str).collect();
        let flipped = Stance::new(stance.polarity().inverted(), stance.candidate().opponent());
        let mention_bank: Vec<&str> = spec.stance_bank[&flipped]
            .iter()
            .map(String::as_str)
            .filter(|p| names_candidate(&cues, p, flipped.candidate()))
            .collect();
        for a_idx in 0..spec.ads_per_entity {
            let issue = *spec.issues.choose(&mut rng).expect("nonempty");
            let issue_phrases: Vec<&str> = spec.issue_bank[&issue].iter().map(String::as_str).collect();
            let mut parts: Vec<&str> = own.choose_multiple(&mut rng, 2.min(own.len())).copied().collect();
            let n_issue = rng.random_range(1..=2usize).min(issue_phrases.len());
            parts.extend(issue_phrases.choose_multiple(&mut rng, n_issue).copied());
            let mentions = rng.random_bool(spec.mention_rate);
            if mentions {
                parts.push(mention_bank.choose(&mut rng).expect("validated"));
            }
            // Shuffle phrase order so position carries no label signal.
            use rand::seq::SliceRandom;
            parts.shuffle(&mut rng);
            let tokens = noisy_tokens(&mut rng, &parts, &spec.filler, spec.noise_rate);
            let text = tokens.join(" ");

            // Gold follows the labeling rule on the final text.
            let mut labels = AdStanceLabels::default();
            labels.insert(*stance);
            let ts = tokenize(&text);
            if names_candidate(&cues, &ts.joined(), stance.candidate().opponent()) {
                labels.insert(flipped);
            }
            let id = format!("{:04}{:03}", e_idx + 1, a_idx + 1);

            let start = base + Duration::days(rng.random_range(0..63));
            let stop = start + Duration::days(rng.random_range(0..14));
            let lower = 1000 * rng.random_range(1..50u64);
            let spend_lower = 100 * rng.random_range(0..20u64);
            // Mild stance-linked audience skew so the analyses have signal.
            let female = (0.5f64 + [0.08, -0.06, -0.04, 0.05][stance.index()] + rng.random_range(-0.1..0.1)).clamp(0.05, 0.95);
            let mut age_w: Vec<f64> = (0..AGES.len()).map(|_| rng.random_range(0.2..1.0)).collect();
            let total: f64 = age_w.iter().sum();
            age_w.iter_mut().for_each(|w| *w /= total);
            let mut demo = Vec::new();
            for (age, w) in AGES.iter().zip(&age_w) {
                for (gender, g) in [("female", female), ("male", 1.0 - female)] {
                    demo.push(ApiDemographic {
                        age: (*age).to_owned(),
                        gender: gender.to_owned(),
                        percentage: fmt_fraction(w * g),
                    });
                }
            }
            let picked: Vec<&str> = STATES.choose_multiple(&mut rng, 3).copied().collect();
            let mut region_w: Vec<f64> = picked.iter().map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = region_w.iter().sum();
            region_w.iter_mut().for_each(|w| *w /= total);
            let region_distribution = picked
                .iter()
                .zip(&region_w)
                .map(|(r, w)| ApiRegion {
                    region: (*r).to_owned(),
                    percentage: fmt_fraction(*w),
                })
                .collect();

            ads.push(ApiAd {
                id: id.clone(),
                ad_creative_bodies: vec![text],
                funding_entity: name.clone(),
                ad_creation_time: start.to_string(),
                ad_delivery_start_time: start.to_string(),
                ad_delivery_stop_time: stop.to_string(),
                spend: ApiRange {
                    lower_bound: spend_lower.to_string(),
                    upper_bound: (spend_lower + 99).to_string(),
                },
                impressions: ApiRange {
                    lower_bound: lower.to_string(),
                    upper_bound: (lower + 999).to_string(),
                },
                demographic_distribution: demo,
                region_distribution,
            });
            gold.push(GoldRow {
                ad_id: id,
                stance: *stance,
                issue,
                all_stances: labels.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(";"),
                entity: name.clone(),
                explicit: *explicit,
            });
        }
    }

    let mut issue_docs = Vec::new();
    for &issue in &spec.issues {
        let phrases: Vec<&str> = spec.issue_bank[&issue].iter().map(String::as_str).collect();
        for _ in 0..spec.docs_per_issue {
            let k = rng.random_range(2..=3usize).min(phrases.len());
            let parts: Vec<&str> = phrases.choose_multiple(&mut rng, k).copied().collect();
            let mut toks = noisy_tokens(&mut rng, &parts, &spec.filler, 0.0);
            for _ in 0..rng.random_range(2..6) {
                let at = rng.random_range(0..=toks.len());
                toks.insert(at, spec.filler.choose(&mut rng).expect("nonempty").clone());
            }
            issue_docs.push(IssueDocLine { issue, text: toks.join(" ") });
        }
    }

    let mut vocab: BTreeSet<String> = BTreeSet::new();
    for text in spec
        .stance_bank
        .values()
        .flatten()
        .chain(spec.issue_bank.values().flatten())
        .chain(&spec.filler)
    {
        vocab.extend(tokenize(text).iter().map(str::to_owned));
    }
    let word_vectors = vocab
        .into_iter()
        .map(|w| {
            let v = (0..spec.vector_dim).map(|_| rng.random_range(-0.5..0.5)).collect();
            (w, v)
        })
        .collect();

    let mut polls = Vec::new();
    let (mut trump, mut biden) = (43.0f64, 50.0f64);
    for d in 0..=63 {
        let date = base + Duration::days(d);
        trump = (trump + rng.random_range(-0.4..0.4)).clamp(35.0, 55.0);
        biden = (biden + rng.random_range(-0.4..0.4)).clamp(40.0, 60.0);
        polls.push(PollRow { date, candidate: "trump".into(), poll_average: (trump * 100.0).round() / 100.0 });
        polls.push(PollRow { date, candidate: "biden".into(), poll_average: (biden * 100.0).round() / 100.0 });
    }

    Ok(SynthCorpus {
        ads,
        gold,
        issue_docs,
        word_vectors,
        polls,
        entities: entities.into_iter().map(|(n, s, _)| (n, s)).collect(),
    })
}

impl SynthCorpus {
    pub fn ads_jsonl(&self) -> String {
        self.ads
            .iter()
            .map(|a| serde_json::to_string(a).expect("ad serializes") + "\n")
            .collect()
    }

    pub fn issues_jsonl(&self) -> String {
        self.issue_docs
            .iter()
            .map(|d| serde_json::to_string(d).expect("doc serializes") + "\n")
            .collect()
    }

    pub fn gold_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.gold {
            w.serialize(row).expect("gold row serializes");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
    }

    pub fn polls_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.polls {
            w.serialize(row).expect("poll row serializes");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
    }

    pub fn wordvecs_txt(&self) -> String {
        let mut out = String::new();
        for (w, v) in &self.word_vectors {
            out.push_str(w);
            for x in v {
                write!(out, " {x:.6}").expect("string write");
            }
            out.push('\n');
        }
        out
    }

    /// The archive as the loader sees it.
    pub fn corpus(&self) -> (AdCorpus, LoadSummary) {
        parse_ads(&self.ads_jsonl())
    }

    pub fn issue_corpus(&self) -> IssueDocCorpus {
        let mut c = IssueDocCorpus::default();
        for d in &self.issue_docs {
            c.push(d.issue, &d.text);
        }
        c
    }

    pub fn write_files(&self, ads: &Path, issues: &Path, gold: &Path, wordvecs: &Path, polls: &Path) -> Result<(), SynthError> {
        for (path, body) in [
            (ads, self.ads_jsonl()),
            (issues, self.issues_jsonl()),
            (gold, self.gold_csv()),
            (wordvecs, self.wordvecs_txt()),
            (polls, self.polls_csv()),
        ] {
            fs::write(path, body).map_err(|source| SynthError::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
        Ok(())
    }
}
