//! Audience, regional, trigram and poll analyses over predicted stances.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::{daily_impression_series, filter_by_region, AdCorpus, AdRecord, AgeBucket, Gender};
use crate::embed::EmbeddingModel;
use crate::infer::Prediction;
use crate::labels::{Issue, Side, Stance};
use crate::pipeline::PipelineError;
use crate::report::TestRecord;
use crate::stats::{
    chi_square_test, granger_test, t_test, trigram_stance_correlation, Alternative, ContingencyTable, GrangerLag,
    StatsError, TimeSeries,
};
use crate::textproc::{tokenize, top_k_ngrams, TokenSeq};

const US_STATES: [(&str, &str); 51] = [
    ("AL", "Alabama"), ("AK", "Alaska"), ("AZ", "Arizona"), ("AR", "Arkansas"), ("CA", "California"),
    ("CO", "Colorado"), ("CT", "Connecticut"), ("DE", "Delaware"), ("DC", "District of Columbia"),
    ("FL", "Florida"), ("GA", "Georgia"), ("HI", "Hawaii"), ("ID", "Idaho"), ("IL", "Illinois"),
    ("IN", "Indiana"), ("IA", "Iowa"), ("KS", "Kansas"), ("KY", "Kentucky"), ("LA", "Louisiana"),
    ("ME", "Maine"), ("MD", "Maryland"), ("MA", "Massachusetts"), ("MI", "Michigan"), ("MN", "Minnesota"),
    ("MS", "Mississippi"), ("MO", "Missouri"), ("MT", "Montana"), ("NE", "Nebraska"), ("NV", "Nevada"),
    ("NH", "New Hampshire"), ("NJ", "New Jersey"), ("NM", "New Mexico"), ("NY", "New York"),
    ("NC", "North Carolina"), ("ND", "North Dakota"), ("OH", "Ohio"), ("OK", "Oklahoma"), ("OR", "Oregon"),
    ("PA", "Pennsylvania"), ("RI", "Rhode Island"), ("SC", "South Carolina"), ("SD", "South Dakota"),
    ("TN", "Tennessee"), ("TX", "Texas"), ("UT", "Utah"), ("VT", "Vermont"), ("VA", "Virginia"),
    ("WA", "Washington"), ("WV", "West Virginia"), ("WI", "Wisconsin"), ("WY", "Wyoming"),
];

/// Region name as it appears in delivery breakdowns: postal codes expand to
/// full state names, anything else passes through unchanged.
pub fn region_name(state: &str) -> String {
    US_STATES
        .iter()
        .find(|(code, _)| code.eq_ignore_ascii_case(state))
        .map_or_else(|| state.to_owned(), |(_, name)| (*name).to_owned())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledTable {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub counts: Vec<Vec<f64>>,
}

impl LabeledTable {
    fn chi_square(&self, name: &str) -> TestRecord {
        let result = ContingencyTable::new(self.rows.clone(), self.cols.clone(), self.counts.clone())
            .and_then(|t| chi_square_test(&t.drop_empty()));
        TestRecord::new(name, &self.counts, result)
    }
}

fn predicted_stances(predictions: &[Prediction]) -> BTreeMap<&str, &Prediction> {
    predictions.iter().map(|p| (p.ad_id.as_str(), p)).collect()
}

/// Ads that have a prediction, paired with it, in corpus order.
fn joined<'a>(ads: &'a [AdRecord], predictions: &'a [Prediction]) -> Vec<(&'a AdRecord, &'a Prediction)> {
    let by_id = predicted_stances(predictions);
    ads.iter().filter_map(|a| by_id.get(a.id.as_str()).map(|p| (a, *p))).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemographicsReport {
    pub ads: usize,
    /// Impression-weighted audience by stance and gender.
    pub gender: LabeledTable,
    pub gender_test: TestRecord,
    /// Impression-weighted audience by stance and age bracket.
    pub age: LabeledTable,
    pub age_test: TestRecord,
    /// Per stance: female share against male share across its ads (Welch).
    pub female_vs_male: BTreeMap<Stance, TestRecord>,
}

/// Contingency tables of who saw each stance, plus per-stance gender
/// t-tests. `one_sided` adds p-values for "more women than men".
pub fn demographics(ads: &[AdRecord], predictions: &[Prediction], one_sided: bool) -> DemographicsReport {
    let pairs = joined(ads, predictions);
    let genders = [Gender::Female, Gender::Male];
    let mut gender = vec![vec![0.0; genders.len()]; Stance::ALL.len()];
    let mut age = vec![vec![0.0; AgeBucket::ALL.len()]; Stance::ALL.len()];
    let mut shares: BTreeMap<Stance, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (ad, p) in &pairs {
        let weight = ad.impressions_mean();
        let row = p.stance.index();
        for (j, g) in genders.iter().enumerate() {
            gender[row][j] += weight * ad.gender_dist.get(g).copied().unwrap_or(0.0);
        }
        for (j, b) in AgeBucket::ALL.iter().enumerate() {
            age[row][j] += weight * ad.age_dist.get(b).copied().unwrap_or(0.0);
        }
        if !ad.gender_dist.is_empty() {
            let (f, m) = shares.entry(p.stance).or_default();
            f.push(ad.gender_dist.get(&Gender::Female).copied().unwrap_or(0.0));
            m.push(ad.gender_dist.get(&Gender::Male).copied().unwrap_or(0.0));
        }
    }
    let rows: Vec<String> = Stance::ALL.iter().map(|s| s.to_string()).collect();
    let gender = LabeledTable {
        rows: rows.clone(),
        cols: genders.iter().map(|g| g.as_str().to_owned()).collect(),
        counts: gender,
    };
    let age = LabeledTable {
        rows,
        cols: AgeBucket::ALL.iter().map(|b| b.as_str().to_owned()).collect(),
        counts: age,
    };
    let female_vs_male = shares
        .into_iter()
        .map(|(s, (f, m))| {
            let rec = TestRecord::new(format!("welch-t female vs male share, {s}"), &(&f, &m), t_test(&f, &m));
            (s, if one_sided { rec.with_one_sided(Alternative::Greater) } else { rec })
        })
        .collect();
    DemographicsReport {
        ads: pairs.len(),
        gender_test: gender.chi_square("chi-square stance x gender"),
        age_test: age.chi_square("chi-square stance x age"),
        gender,
        age,
        female_vs_male,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateReport {
    pub region: String,
    pub min_regional_share: f64,
    pub ads: usize,
    /// Ad counts by predicted stance and predicted issue.
    pub stance_issue: LabeledTable,
    pub stance_issue_test: TestRecord,
    /// Impressions delivered in the region, by stance.
    pub impressions: BTreeMap<Stance, f64>,
}

/// Stance by issue breakdown for ads delivered mostly in one region.
pub fn state_analysis(ads: &[AdRecord], predictions: &[Prediction], state: &str, min_share: f64) -> StateReport {
    let region = region_name(state);
    let by_id = predicted_stances(predictions);
    let local = filter_by_region(ads, &region, min_share);
    let mut counts = vec![vec![0.0; Issue::ALL.len()]; Stance::ALL.len()];
    let mut impressions: BTreeMap<Stance, f64> = BTreeMap::new();
    let mut n = 0;
    for ad in local {
        let Some(p) = by_id.get(ad.id.as_str()) else { continue };
        n += 1;
        counts[p.stance.index()][p.issue.index()] += 1.0;
        *impressions.entry(p.stance).or_default() += ad.impressions_mean() * ad.region_dist[&region];
    }
    let stance_issue = LabeledTable {
        rows: Stance::ALL.iter().map(|s| s.to_string()).collect(),
        cols: Issue::ALL.iter().map(|i| i.to_string()).collect(),
        counts,
    };
    StateReport {
        stance_issue_test: stance_issue.chi_square("chi-square stance x issue"),
        region,
        min_regional_share: min_share,
        ads: n,
        stance_issue,
        impressions,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigramReport {
    pub issue: Issue,
    pub ads: BTreeMap<Stance, usize>,
    pub top_trigrams: BTreeMap<Stance, Vec<(String, usize)>>,
    /// Unigram frequencies per stance, for word clouds.
    pub word_frequencies: BTreeMap<Stance, BTreeMap<String, usize>>,
    pub trigrams: Vec<String>,
    pub stances: Vec<Stance>,
    /// Pearson r per trigram and stance; null where undefined.
    pub correlation: Vec<Vec<Option<f64>>>,
}

/// Top trigrams per stance among ads predicted for `issue`, and how each
/// correlates with every stance group's mean embedding. Duplicate texts
/// count once.
pub fn trigram_analysis(
    corpus: &AdCorpus,
    predictions: &[Prediction],
    model: &EmbeddingModel,
    issue: Issue,
    top: usize,
    stopwords: &BTreeSet<String>,
) -> Result<TrigramReport, PipelineError> {
    let by_id = predicted_stances(predictions);
    let mut groups: BTreeMap<Stance, Vec<TokenSeq>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for ad in corpus.ads() {
        let Some(p) = by_id.get(ad.id.as_str()) else { continue };
        let tokens = tokenize(&ad.text);
        if p.issue == issue && seen.insert(tokens.joined()) {
            groups.entry(p.stance).or_default().push(tokens);
        }
    }
    if groups.is_empty() {
        return Err(PipelineError::Data(format!("no ads predicted for issue {issue}")));
    }
    let mut top_trigrams = BTreeMap::new();
    let mut word_frequencies = BTreeMap::new();
    let mut trigrams: Vec<String> = Vec::new();
    for (stance, ads) in &groups {
        let ranked = top_k_ngrams(ads, 3, top, stopwords).expect("order 3");
        for (t, _) in &ranked {
            if !trigrams.contains(t) {
                trigrams.push(t.clone());
            }
        }
        top_trigrams.insert(*stance, ranked);
        let words = top_k_ngrams(ads, 1, 50, stopwords).expect("order 1");
        word_frequencies.insert(*stance, words.into_iter().collect());
    }
    let seqs: Vec<TokenSeq> = trigrams.iter().map(|t| tokenize(t)).collect();
    let matrix = trigram_stance_correlation(&seqs, &groups, |t| model.encode(t))?;
    Ok(TrigramReport {
        issue,
        ads: groups.iter().map(|(s, a)| (*s, a.len())).collect(),
        top_trigrams,
        word_frequencies,
        trigrams,
        stances: matrix.cols,
        correlation: matrix.values,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PollRow {
    pub date: NaiveDate,
    pub candidate: String,
    pub poll_average: f64,
}

pub fn read_polls<R: Read>(reader: R) -> Result<Vec<PollRow>, PipelineError> {
    let mut rows = Vec::new();
    for (i, rec) in csv::Reader::from_reader(reader).deserialize().enumerate() {
        let row: PollRow = rec.map_err(|e| PipelineError::Data(format!("polls line {}: {e}", i + 2)))?;
        if !row.poll_average.is_finite() {
            return Err(PipelineError::Data(format!("polls line {}: non-finite average", i + 2)));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Daily poll series per candidate (lowercased), forward-filled, plus their
/// sum over the days every candidate covers under the key `sum`.
pub fn poll_series(rows: &[PollRow]) -> Result<BTreeMap<String, TimeSeries>, PipelineError> {
    let mut points: BTreeMap<String, Vec<(NaiveDate, f64)>> = BTreeMap::new();
    for r in rows {
        points.entry(r.candidate.trim().to_lowercase()).or_default().push((r.date, r.poll_average));
    }
    let mut out = BTreeMap::new();
    for (c, pts) in points {
        out.insert(c, TimeSeries::from_sparse_ffill(&pts)?);
    }
    let mut total: Option<TimeSeries> = None;
    for s in out.values() {
        total = Some(match total {
            None => s.clone(),
            Some(t) => {
                let (a, b) = TimeSeries::align(&t, s).ok_or_else(|| PipelineError::Data("poll series do not overlap".into()))?;
                let values = a.values().iter().zip(b.values()).map(|(x, y)| x + y).collect();
                TimeSeries::new(a.start(), values)?
            }
        });
    }
    let total = total.ok_or_else(|| PipelineError::Data("no poll rows".into()))?;
    out.insert("sum".into(), total);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrangerEntry {
    pub polls: String,
    pub impressions: Side,
    /// `x->y` reads "x Granger-causes y".
    pub direction: String,
    pub start: NaiveDate,
    pub observations: usize,
    pub lags: Vec<GrangerLag>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrangerReport {
    pub max_lag: usize,
    pub cutoff: NaiveDate,
    pub tests: Vec<GrangerEntry>,
}

/// Granger tests in both directions between each side's daily impressions
/// and the matching candidate's polls, and the summed polls.
pub fn granger_analysis(
    ads: &[AdRecord],
    predictions: &[Prediction],
    polls: &[PollRow],
    max_lag: usize,
    cutoff: NaiveDate,
) -> Result<GrangerReport, PipelineError> {
    let by_id = predicted_stances(predictions);
    let impressions = daily_impression_series(ads, |ad| by_id.get(ad.id.as_str()).map(|p| p.stance.target_side()), cutoff)?;
    let polls = poll_series(polls)?;
    let mut tests = Vec::new();
    for (side, imp) in &impressions {
        let own = match side {
            Side::Trump => "trump",
            Side::Biden => "biden",
        };
        for key in [own, "sum"] {
            let Some(poll) = polls.get(key) else { continue };
            let (p, i) = TimeSeries::align(poll, imp)
                .ok_or_else(|| PipelineError::Data(format!("{key} polls do not overlap {} impressions", side.as_str())))?;
            for (direction, x, y) in [("polls->impressions", &p, &i), ("impressions->polls", &i, &p)] {
                tests.push(GrangerEntry {
                    polls: key.to_owned(),
                    impressions: *side,
                    direction: direction.to_owned(),
                    start: p.start(),
                    observations: p.len(),
                    lags: granger_test(x, y, max_lag)?,
                });
            }
        }
    }
    if tests.is_empty() {
        return Err(StatsError::TooShort { needed: 1, got: 0 }.into());
    }
    Ok(GrangerReport { max_lag, cutoff, tests })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::IntRange;

    fn pred(id: &str, stance: Stance, issue: Issue) -> Prediction {
        Prediction {
            ad_id: id.into(),
            stance,
            stance_score: 0.0,
            issue,
            issue_score: 0.0,
        }
    }

    fn ad(id: &str, female: f64, imp: u64) -> AdRecord {
        let mut a = AdRecord::new(id, format!("text {id}"), "E");
        a.impressions = IntRange::new(imp, imp).unwrap();
        a.gender_dist = BTreeMap::from([(Gender::Female, female), (Gender::Male, 1.0 - female)]);
        a
    }

    #[test]
    fn balanced_gender_table_is_independent() {
        let ads = vec![ad("1", 0.5, 10), ad("2", 0.5, 10)];
        let preds = vec![pred("1", Stance::ProBiden, Issue::Covid), pred("2", Stance::ProTrump, Issue::Covid)];
        let r = demographics(&ads, &preds, false);
        assert_eq!(r.gender.counts[0], vec![5.0, 5.0]);
        assert_eq!(r.gender.counts[1], vec![5.0, 5.0]);
        assert_eq!(r.gender_test.statistic, Some(0.0));
        assert_eq!(r.gender_test.p, Some(1.0));
    }

    #[test]
    fn one_sided_gender_test_favors_women() {
        let ads: Vec<AdRecord> = (0..6).map(|i| ad(&i.to_string(), 0.6 + 0.02 * i as f64, 100)).collect();
        let preds: Vec<Prediction> = (0..6).map(|i| pred(&i.to_string(), Stance::ProBiden, Issue::Covid)).collect();
        let r = demographics(&ads, &preds, true);
        let t = &r.female_vs_male[&Stance::ProBiden];
        assert!(t.statistic.unwrap() > 0.0);
        assert!((t.one_sided_p.unwrap() - t.p.unwrap() / 2.0).abs() < 1e-15);
        assert!(r.age_test.error.is_some(), "no age data means zero marginals");
    }

    #[test]
    fn state_filter_uses_postal_codes() {
        assert_eq!(region_name("pa"), "Pennsylvania");
        assert_eq!(region_name("Ontario"), "Ontario");
        let mut a = ad("1", 0.5, 10);
        a.region_dist.insert("Pennsylvania".into(), 0.5);
        let mut b = ad("2", 0.5, 10);
        b.region_dist.insert("Pennsylvania".into(), 0.1);
        let preds = vec![pred("1", Stance::AntiTrump, Issue::Economy), pred("2", Stance::ProTrump, Issue::Guns)];
        let r = state_analysis(&[a, b], &preds, "PA", 0.1);
        assert_eq!(r.ads, 1);
        assert_eq!(r.stance_issue.counts[Stance::AntiTrump.index()][Issue::Economy.index()], 1.0);
        assert_eq!(r.impressions[&Stance::AntiTrump], 5.0);
    }

    #[test]
    fn poll_sum_covers_shared_days() {
        let d = |s: &str| s.parse::<NaiveDate>().unwrap();
        let rows = vec![
            PollRow { date: d("2020-10-01"), candidate: "Trump".into(), poll_average: 42.0 },
            PollRow { date: d("2020-10-03"), candidate: "Trump".into(), poll_average: 44.0 },
            PollRow { date: d("2020-10-02"), candidate: "biden".into(), poll_average: 50.0 },
            PollRow { date: d("2020-10-03"), candidate: "biden".into(), poll_average: 51.0 },
        ];
        let s = poll_series(&rows).unwrap();
        assert_eq!(s["trump"].values(), &[42.0, 42.0, 44.0]);
        assert_eq!(s["sum"].start(), d("2020-10-02"));
        assert_eq!(s["sum"].values(), &[92.0, 95.0]);
        let parsed = read_polls("date,candidate,poll_average\n2020-10-01,trump,42.5\n".as_bytes()).unwrap();
        assert_eq!(parsed[0].poll_average, 42.5);
        assert!(read_polls("date,candidate,poll_average\nyesterday,trump,1\n".as_bytes()).is_err());
    }
}
