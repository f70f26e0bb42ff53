//! Ad records, JSONL ingestion, content deduplication and impression series.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::labels::Side;
use crate::stats::TimeSeries;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid range [{lower}, {upper}]")]
    InvalidRange { lower: u64, upper: u64 },
    #[error("duplicate ad id `{0}`")]
    DuplicateId(String),
    #[error("ad `{0}` has no delivery start date")]
    MissingStart(String),
    #[error("no days to report before cutoff {0}")]
    EmptySeries(NaiveDate),
    #[error("malformed record: {0}")]
    Malformed(String),
}

/// Closed integer range as reported by the ad archive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub lower: u64,
    pub upper: u64,
}

impl IntRange {
    pub fn new(lower: u64, upper: u64) -> Result<Self, CorpusError> {
        if lower > upper {
            return Err(CorpusError::InvalidRange { lower, upper });
        }
        Ok(IntRange { lower, upper })
    }
}

/// Midpoint of a closed range.
pub fn range_mean(r: IntRange) -> Result<f64, CorpusError> {
    if r.lower > r.upper {
        return Err(CorpusError::InvalidRange {
            lower: r.lower,
            upper: r.upper,
        });
    }
    // Both ends are exact in f64 below 2^53.
    Ok((r.lower as f64 + r.upper as f64) / 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
    Unknown,
}

impl Gender {
    pub const ALL: [Gender; 3] = [Gender::Male, Gender::Female, Gender::Unknown];

    fn parse(s: &str) -> Option<Gender> {
        match s.trim().to_lowercase().as_str() {
            "male" => Some(Gender::Male),
            "female" => Some(Gender::Female),
            "unknown" | "all" => Some(Gender::Unknown),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
            Gender::Unknown => "unknown",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgeBucket {
    #[serde(rename = "13-17")]
    A13_17,
    #[serde(rename = "18-24")]
    A18_24,
    #[serde(rename = "25-34")]
    A25_34,
    #[serde(rename = "35-44")]
    A35_44,
    #[serde(rename = "45-54")]
    A45_54,
    #[serde(rename = "55-64")]
    A55_64,
    #[serde(rename = "65+")]
    A65Plus,
}

impl AgeBucket {
    pub const ALL: [AgeBucket; 7] = [
        AgeBucket::A13_17,
        AgeBucket::A18_24,
        AgeBucket::A25_34,
        AgeBucket::A35_44,
        AgeBucket::A45_54,
        AgeBucket::A55_64,
        AgeBucket::A65Plus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgeBucket::A13_17 => "13-17",
            AgeBucket::A18_24 => "18-24",
            AgeBucket::A25_34 => "25-34",
            AgeBucket::A35_44 => "35-44",
            AgeBucket::A45_54 => "45-54",
            AgeBucket::A55_64 => "55-64",
            AgeBucket::A65Plus => "65+",
        }
    }

    fn parse(s: &str) -> Option<AgeBucket> {
        let s = s.trim();
        AgeBucket::ALL.into_iter().find(|b| b.as_str() == s)
    }
}

/// One joint (age, gender) cell of an impression breakdown.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemographicCell {
    pub age: Option<AgeBucket>,
    pub gender: Gender,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdRecord {
    pub id: String,
    pub text: String,
    pub funding_entity: String,
    pub created: Option<NaiveDate>,
    pub delivery_start: Option<NaiveDate>,
    pub delivery_stop: Option<NaiveDate>,
    pub spend: IntRange,
    pub impressions: IntRange,
    pub gender_dist: BTreeMap<Gender, f64>,
    pub age_dist: BTreeMap<AgeBucket, f64>,
    #[serde(default)]
    pub demographic_dist: Vec<DemographicCell>,
    pub region_dist: BTreeMap<String, f64>,
}

impl AdRecord {
    /// Minimal record with empty distributions; handy for fixtures.
    pub fn new(id: impl Into<String>, text: impl Into<String>, entity: impl Into<String>) -> Self {
        AdRecord {
            id: id.into(),
            text: text.into(),
            funding_entity: entity.into(),
            created: None,
            delivery_start: None,
            delivery_stop: None,
            spend: IntRange::default(),
            impressions: IntRange::default(),
            gender_dist: BTreeMap::new(),
            age_dist: BTreeMap::new(),
            demographic_dist: Vec::new(),
            region_dist: BTreeMap::new(),
        }
    }

    /// Inclusive active days; a missing stop date means a single-day run.
    pub fn active_span(&self) -> Option<(NaiveDate, NaiveDate)> {
        let start = self.delivery_start?;
        let stop = self.delivery_stop.unwrap_or(start).max(start);
        Some((start, stop))
    }

    pub fn impressions_mean(&self) -> f64 {
        (self.impressions.lower as f64 + self.impressions.upper as f64) / 2.0
    }

    fn validate(&self) -> Result<(), CorpusError> {
        IntRange::new(self.spend.lower, self.spend.upper)?;
        IntRange::new(self.impressions.lower, self.impressions.upper)?;
        check_distribution("gender", self.gender_dist.values())?;
        check_distribution("age", self.age_dist.values())?;
        check_distribution("region", self.region_dist.values())?;
        check_distribution("demographic", self.demographic_dist.iter().map(|c| &c.fraction))?;
        Ok(())
    }
}

fn check_distribution<'a>(
    name: &str,
    fractions: impl Iterator<Item = &'a f64>,
) -> Result<(), CorpusError> {
    let mut total = 0.0;
    for &f in fractions {
        if !(0.0..=1.0).contains(&f) {
            return Err(CorpusError::Malformed(format!(
                "{name} fraction {f} outside [0, 1]"
            )));
        }
        total += f;
    }
    if total > 1.0 + 1e-6 {
        return Err(CorpusError::Malformed(format!(
            "{name} distribution sums to {total}"
        )));
    }
    Ok(())
}

/// Lowercases and collapses runs of whitespace. Punctuation is kept.
pub fn normalize_content(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<AdRecord>", into = "Vec<AdRecord>")]
pub struct AdCorpus {
    ads: Vec<AdRecord>,
    content_index: BTreeMap<String, Vec<String>>,
    by_id: HashMap<String, usize>,
}

impl TryFrom<Vec<AdRecord>> for AdCorpus {
    type Error = CorpusError;

    fn try_from(ads: Vec<AdRecord>) -> Result<Self, Self::Error> {
        AdCorpus::new(ads)
    }
}

impl From<AdCorpus> for Vec<AdRecord> {
    fn from(c: AdCorpus) -> Self {
        c.ads
    }
}

impl AdCorpus {
    pub fn new(ads: Vec<AdRecord>) -> Result<Self, CorpusError> {
        let mut by_id = HashMap::with_capacity(ads.len());
        let mut content_index: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (pos, ad) in ads.iter().enumerate() {
            if by_id.insert(ad.id.clone(), pos).is_some() {
                return Err(CorpusError::DuplicateId(ad.id.clone()));
            }
            content_index
                .entry(normalize_content(&ad.text))
                .or_default()
                .push(ad.id.clone());
        }
        Ok(AdCorpus {
            ads,
            content_index,
            by_id,
        })
    }

    pub fn ads(&self) -> &[AdRecord] {
        &self.ads
    }

    pub fn len(&self) -> usize {
        self.ads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ads.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&AdRecord> {
        self.by_id.get(id).map(|&i| &self.ads[i])
    }

    pub fn content_index(&self) -> &BTreeMap<String, Vec<String>> {
        &self.content_index
    }

    /// Funding entities sorted by name, each with its ads in corpus order.
    pub fn entities(&self) -> Vec<FundingEntity> {
        let mut by_name: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        for ad in &self.ads {
            by_name
                .entry(ad.funding_entity.as_str())
                .or_default()
                .push(ad.id.clone());
        }
        by_name
            .into_iter()
            .map(|(name, ad_ids)| FundingEntity {
                name: name.to_owned(),
                ad_ids,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FundingEntity {
    pub name: String,
    pub ad_ids: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadSummary {
    pub loaded: usize,
    pub skipped: usize,
    pub skipped_lines: Vec<SkippedLine>,
}

/// Reads an ad-archive JSONL export. Unparseable lines are skipped and
/// reported in the summary; an unreadable file is an error.
pub fn load_ads(path: &Path) -> Result<(AdCorpus, LoadSummary), CorpusError> {
    let raw = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(parse_ads(&raw))
}

pub fn parse_ads(raw: &str) -> (AdCorpus, LoadSummary) {
    let mut ads = Vec::new();
    let mut seen = HashSet::new();
    let mut summary = LoadSummary::default();
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<Value>(line)
            .map_err(|e| CorpusError::Malformed(e.to_string()))
            .and_then(|v| record_from_json(&v))
            .and_then(|ad| {
                if seen.contains(&ad.id) {
                    Err(CorpusError::DuplicateId(ad.id))
                } else {
                    Ok(ad)
                }
            });
        match parsed {
            Ok(ad) => {
                seen.insert(ad.id.clone());
                ads.push(ad);
            }
            Err(e) => summary.skipped_lines.push(SkippedLine {
                line: lineno + 1,
                reason: e.to_string(),
            }),
        }
    }
    summary.loaded = ads.len();
    summary.skipped = summary.skipped_lines.len();
    let corpus = AdCorpus::new(ads).expect("ids deduplicated during parsing");
    (corpus, summary)
}

fn as_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn as_u64(v: &Value) -> Option<u64> {
    match v {
        Value::Number(n) => n.as_u64().or_else(|| {
            n.as_f64()
                .filter(|f| *f >= 0.0 && f.fract() == 0.0)
                .map(|f| f as u64)
        }),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn parse_date(v: &Value) -> Result<Option<NaiveDate>, CorpusError> {
    match v {
        Value::Null => Ok(None),
        Value::String(s) if s.trim().is_empty() => Ok(None),
        Value::String(s) => {
            let day = s.trim().get(..10).unwrap_or(s);
            NaiveDate::parse_from_str(day, "%Y-%m-%d")
                .map(Some)
                .map_err(|_| CorpusError::Malformed(format!("bad date `{s}`")))
        }
        other => Err(CorpusError::Malformed(format!("bad date `{other}`"))),
    }
}

fn parse_range(v: Option<&Value>, field: &str) -> Result<IntRange, CorpusError> {
    let Some(v) = v.filter(|v| !v.is_null()) else {
        return Ok(IntRange::default());
    };
    let lower = v.get("lower_bound").and_then(as_u64);
    // The archive omits upper_bound for its open top bucket.
    let upper = v.get("upper_bound").and_then(as_u64).or(lower);
    match (lower, upper) {
        (Some(l), Some(u)) => IntRange::new(l, u),
        _ => Err(CorpusError::Malformed(format!("bad {field} range"))),
    }
}

fn record_from_json(v: &Value) -> Result<AdRecord, CorpusError> {
    let field = |name: &str| v.get(name).filter(|x| !x.is_null());
    let id = field("id")
        .and_then(as_string)
        .ok_or_else(|| CorpusError::Malformed("missing id".into()))?;
    let body = match field("ad_creative_body").or_else(|| field("ad_creative_bodies")) {
        Some(Value::Array(parts)) => parts
            .iter()
            .filter_map(|p| p.as_str())
            .collect::<Vec<_>>()
            .join(" "),
        Some(Value::String(s)) => s.clone(),
        _ => return Err(CorpusError::Malformed(format!("ad `{id}` has no body"))),
    };
    let title = match field("ad_creative_link_title") {
        Some(Value::String(s)) if !s.trim().is_empty() => Some(s.clone()),
        _ => None,
    };
    let text = match title {
        Some(t) => format!("{t} {body}"),
        None => body,
    };
    let funding_entity = field("funding_entity")
        .or_else(|| field("bylines"))
        .and_then(|x| x.as_str().map(str::to_owned))
        .ok_or_else(|| CorpusError::Malformed(format!("ad `{id}` has no funding entity")))?;

    let delivery_start = parse_date(v.get("ad_delivery_start_time").unwrap_or(&Value::Null))?;
    let delivery_stop = parse_date(v.get("ad_delivery_stop_time").unwrap_or(&Value::Null))?;
    let created = parse_date(v.get("ad_creation_time").unwrap_or(&Value::Null))?.or(delivery_start);

    let mut gender_dist = BTreeMap::new();
    let mut age_dist = BTreeMap::new();
    let mut demographic_dist = Vec::new();
    if let Some(Value::Array(cells)) = field("demographic_distribution") {
        for cell in cells {
            let fraction = cell
                .get("percentage")
                .and_then(as_f64)
                .ok_or_else(|| CorpusError::Malformed("demographic cell without percentage".into()))?;
            let gender = cell
                .get("gender")
                .and_then(Value::as_str)
                .and_then(Gender::parse)
                .unwrap_or(Gender::Unknown);
            let age = cell.get("age").and_then(Value::as_str).and_then(AgeBucket::parse);
            *gender_dist.entry(gender).or_insert(0.0) += fraction;
            if let Some(a) = age {
                *age_dist.entry(a).or_insert(0.0) += fraction;
            }
            demographic_dist.push(DemographicCell {
                age,
                gender,
                fraction,
            });
        }
    }
    let mut region_dist = BTreeMap::new();
    if let Some(Value::Array(cells)) = field("region_distribution") {
        for cell in cells {
            let fraction = cell
                .get("percentage")
                .and_then(as_f64)
                .ok_or_else(|| CorpusError::Malformed("region cell without percentage".into()))?;
            let region = cell
                .get("region")
                .and_then(Value::as_str)
                .ok_or_else(|| CorpusError::Malformed("region cell without name".into()))?;
            *region_dist.entry(region.to_owned()).or_insert(0.0) += fraction;
        }
    }

    let ad = AdRecord {
        id,
        text,
        funding_entity,
        created,
        delivery_start,
        delivery_stop,
        spend: parse_range(field("spend"), "spend")?,
        impressions: parse_range(field("impressions"), "impressions")?,
        gender_dist,
        age_dist,
        demographic_dist,
        region_dist,
    };
    ad.validate()?;
    Ok(ad)
}

/// Representative id → every id sharing its normalized content.
pub type DedupMap = BTreeMap<String, Vec<String>>;

/// Keeps one ad per normalized text. The representative is the
/// lexicographically smallest id; representatives stay in the position of
/// their group's first appearance. Merged ads are not summed: callers keep
/// the original corpus for per-placement audience data.
pub fn dedup_by_content(corpus: &AdCorpus) -> (AdCorpus, DedupMap) {
    let mut map = DedupMap::new();
    let mut reps: BTreeSet<String> = BTreeSet::new();
    for ids in corpus.content_index.values() {
        let mut group = ids.clone();
        group.sort();
        reps.insert(group[0].clone());
        map.insert(group[0].clone(), group);
    }
    let mut first_pos: BTreeMap<String, usize> = BTreeMap::new();
    for (pos, ad) in corpus.ads.iter().enumerate() {
        first_pos.entry(normalize_content(&ad.text)).or_insert(pos);
    }
    let mut kept: Vec<(usize, AdRecord)> = corpus
        .ads
        .iter()
        .filter(|a| reps.contains(&a.id))
        .map(|a| (first_pos[&normalize_content(&a.text)], a.clone()))
        .collect();
    kept.sort_by_key(|(pos, _)| *pos);
    let deduped = AdCorpus::new(kept.into_iter().map(|(_, a)| a).collect())
        .expect("representatives have unique ids");
    (deduped, map)
}

/// Share of the ad's impressions delivered in `region`, 0 when absent.
pub fn regional_share(ad: &AdRecord, region: &str) -> f64 {
    ad.region_dist.get(region).copied().unwrap_or(0.0).clamp(0.0, 1.0)
}

/// Ads whose share in `region` is strictly above `min_share`.
pub fn filter_by_region<'a>(
    ads: impl IntoIterator<Item = &'a AdRecord>,
    region: &str,
    min_share: f64,
) -> Vec<&'a AdRecord> {
    ads.into_iter()
        .filter(|ad| regional_share(ad, region) > min_share)
        .collect()
}

/// Total mean impressions per side and per day, from the earliest start date
/// through `cutoff` (or the last active day, whichever comes first). Every
/// active day of an ad receives its full mean. Ads for which `side_of`
/// returns `None` are ignored.
pub fn daily_impression_series<F>(
    ads: &[AdRecord],
    side_of: F,
    cutoff: NaiveDate,
) -> Result<BTreeMap<Side, TimeSeries>, CorpusError>
where
    F: Fn(&AdRecord) -> Option<Side>,
{
    let mut sided = Vec::new();
    for ad in ads {
        if let Some(side) = side_of(ad) {
            let span = ad
                .active_span()
                .ok_or_else(|| CorpusError::MissingStart(ad.id.clone()))?;
            sided.push((side, span, range_mean(ad.impressions)?));
        }
    }
    let first = sided
        .iter()
        .map(|(_, (s, _), _)| *s)
        .min()
        .ok_or(CorpusError::EmptySeries(cutoff))?;
    let last = sided
        .iter()
        .map(|(_, (_, e), _)| *e)
        .max()
        .unwrap_or(first)
        .min(cutoff);
    if cutoff < first {
        return Err(CorpusError::EmptySeries(cutoff));
    }
    let len = (last - first).num_days() as usize + 1;
    let mut acc: BTreeMap<Side, Vec<f64>> = [Side::Trump, Side::Biden]
        .into_iter()
        .map(|s| (s, vec![0.0; len]))
        .collect();
    for (side, (start, stop), mean) in sided {
        let values = acc.get_mut(&side).expect("both sides present");
        let mut day = start;
        while day <= stop.min(last) {
            values[(day - first).num_days() as usize] += mean;
            day = day + Days::new(1);
        }
    }
    Ok(acc
        .into_iter()
        .map(|(side, values)| {
            let ts = TimeSeries::new(first, values).expect("finite sums");
            (side, ts)
        })
        .collect())
}
