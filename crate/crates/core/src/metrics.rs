//! Segment-level Kendall tau over relative-ranking judgments, system-level
//! pairwise accuracy, and score distributions.
//!
//! Kendall counting follows the WMT relative-ranking convention: a judgment
//! is concordant when the metric scores the better system strictly higher,
//! and discordant when it scores it lower *or equal*. Metric ties are never
//! neutral.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chains::{EstimatorKind, ScoreTable};
use crate::corpus::{HumanSystemScore, LanguagePair, RRJudgment};
use crate::parsing::DropPolicy;
use crate::prompting::ScoringMode;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MetricsError {
    #[error("system {system_id} ({lp}) has no parsed scores")]
    EmptySystem { lp: LanguagePair, system_id: String },
    #[error("pairwise accuracy needs at least two systems with distinct human scores, found {found}")]
    InsufficientSystems { found: usize },
    #[error("metric rows mix language pairs {0} and {1}")]
    MixedLanguagePairs(LanguagePair, LanguagePair),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KendallSummary {
    pub lp: LanguagePair,
    pub estimator: EstimatorKind,
    pub concordant: usize,
    pub discordant: usize,
    pub excluded: usize,
    pub tau: Option<f64>,
}

/// Concordant/discordant/excluded tallies for one set of judgments.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KendallCounts {
    pub concordant: usize,
    pub discordant: usize,
    pub excluded: usize,
}

impl KendallCounts {
    /// Adds one judgment given the metric scores of the better and worse system.
    pub fn record(&mut self, better: Option<i64>, worse: Option<i64>) {
        match (better, worse) {
            (Some(b), Some(w)) if b > w => self.concordant += 1,
            (Some(_), Some(_)) => self.discordant += 1,
            _ => self.excluded += 1,
        }
    }

    pub fn tau(&self) -> Option<f64> {
        let n = self.concordant + self.discordant;
        (n > 0).then(|| (self.concordant as f64 - self.discordant as f64) / n as f64)
    }
}

/// Ordinal substituted for unparsed scores under [`DropPolicy::Middle`].
pub fn middle_ordinal(mode: ScoringMode) -> i64 {
    match mode {
        ScoringMode::Cat5 => 2,
        ScoringMode::Cat3 => 1,
        ScoringMode::Stars => 3,
        ScoringMode::Scalar => 50,
    }
}

/// One summary per language pair present in `judgments`, in lp order.
///
/// Outputs absent from `scores` are always excluded. Outputs present but
/// without an ordinal are excluded under [`DropPolicy::Drop`] and scored at
/// the middle of the scale under [`DropPolicy::Middle`].
pub fn kendall_tau_rr(scores: &ScoreTable, judgments: &[RRJudgment], drop_policy: DropPolicy) -> Vec<KendallSummary> {
    let middle = middle_ordinal(scores.estimator.mode);
    let lookup = |lp: &LanguagePair, system: &str, seg: &str| -> Option<i64> {
        let q = scores.get(lp, system, seg)?;
        match (q.ordinal, drop_policy) {
            (Some(o), _) => Some(o),
            (None, DropPolicy::Middle) => Some(middle),
            (None, DropPolicy::Drop) => None,
        }
    };
    let mut per_lp: BTreeMap<LanguagePair, KendallCounts> = BTreeMap::new();
    for j in judgments {
        let better = lookup(&j.lp, &j.better_system, &j.seg_id);
        let worse = lookup(&j.lp, &j.worse_system, &j.seg_id);
        per_lp.entry(j.lp.clone()).or_default().record(better, worse);
    }
    per_lp
        .into_iter()
        .map(|(lp, c)| KendallSummary {
            lp,
            estimator: scores.estimator.kind,
            concordant: c.concordant,
            discordant: c.discordant,
            excluded: c.excluded,
            tau: c.tau(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemScoreRow {
    pub lp: LanguagePair,
    pub system_id: String,
    pub mean_ordinal: f64,
    pub n: usize,
}

/// Mean ordinal per `(lp, system)` over parsed scores.
pub fn system_score(scores: &ScoreTable) -> Result<Vec<SystemScoreRow>, MetricsError> {
    let (rows, mut empty) = system_means(scores);
    match empty.pop() {
        Some((lp, system_id)) => Err(MetricsError::EmptySystem { lp, system_id }),
        None => Ok(rows),
    }
}

/// Like [`system_score`], but returns the systems without parsed scores
/// alongside the rows instead of failing.
pub fn system_means(scores: &ScoreTable) -> (Vec<SystemScoreRow>, Vec<(LanguagePair, String)>) {
    let mut acc: BTreeMap<(LanguagePair, String), (i64, usize)> = BTreeMap::new();
    for q in scores.scores.values() {
        let e = acc.entry((q.lp.clone(), q.system_id.clone())).or_default();
        if let Some(o) = q.ordinal {
            e.0 += o;
            e.1 += 1;
        }
    }
    let (mut rows, mut empty) = (Vec::new(), Vec::new());
    for ((lp, system_id), (sum, n)) in acc {
        if n == 0 {
            empty.push((lp, system_id));
        } else {
            rows.push(SystemScoreRow {
                lp,
                system_id,
                mean_ordinal: sum as f64 / n as f64,
                n,
            });
        }
    }
    (rows, empty)
}

/// Share of system pairs whose metric difference has the sign of the human
/// difference.
///
/// Pairs are taken over systems present in both inputs. Pairs with equal
/// human scores are left out; an equal metric score against a nonzero human
/// difference counts as a disagreement.
pub fn pairwise_accuracy(metric_rows: &[SystemScoreRow], human_rows: &[(String, f64)]) -> Result<f64, MetricsError> {
    if let Some(first) = metric_rows.first() {
        if let Some(other) = metric_rows.iter().find(|r| r.lp != first.lp) {
            return Err(MetricsError::MixedLanguagePairs(first.lp.clone(), other.lp.clone()));
        }
    }
    let human: BTreeMap<&str, f64> = human_rows.iter().map(|(s, v)| (s.as_str(), *v)).collect();
    let joined: Vec<(f64, f64)> = metric_rows
        .iter()
        .filter_map(|r| human.get(r.system_id.as_str()).map(|&h| (r.mean_ordinal, h)))
        .collect();
    if joined.len() < 2 {
        return Err(MetricsError::InsufficientSystems { found: joined.len() });
    }
    let (mut agree, mut total) = (0usize, 0usize);
    for (i, &(m1, h1)) in joined.iter().enumerate() {
        for &(m2, h2) in &joined[i + 1..] {
            let h = h1.partial_cmp(&h2).unwrap_or(Ordering::Equal);
            if h == Ordering::Equal {
                continue;
            }
            total += 1;
            if m1.partial_cmp(&m2) == Some(h) {
                agree += 1;
            }
        }
    }
    if total == 0 {
        return Err(MetricsError::InsufficientSystems { found: joined.len() });
    }
    Ok(agree as f64 / total as f64)
}

/// [`pairwise_accuracy`] for every lp that has human scores.
pub fn pairwise_accuracy_by_lp(
    rows: &[SystemScoreRow],
    human: &[HumanSystemScore],
) -> BTreeMap<LanguagePair, Result<f64, MetricsError>> {
    let mut metric: BTreeMap<LanguagePair, Vec<SystemScoreRow>> = BTreeMap::new();
    for r in rows {
        metric.entry(r.lp.clone()).or_default().push(r.clone());
    }
    let mut humans: BTreeMap<LanguagePair, Vec<(String, f64)>> = BTreeMap::new();
    for h in human {
        humans.entry(h.lp.clone()).or_default().push((h.system_id.clone(), h.score));
    }
    humans
        .into_iter()
        .map(|(lp, h)| {
            let m = metric.remove(&lp).unwrap_or_default();
            let acc = pairwise_accuracy(&m, &h);
            (lp, acc)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionStats {
    pub mode: ScoringMode,
    /// Class labels, or bucket ranges for scalar scores.
    pub labels: Vec<String>,
    pub counts: Vec<usize>,
    /// Scores without an ordinal.
    pub unscored: usize,
    /// Middle-class share of parsed scores; `None` for an even class count or no scores.
    pub neutral_fraction: Option<f64>,
}

impl DistributionStats {
    pub fn parsed(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Bucket labels of a mode. Scalar scores fall in five 20-point buckets.
pub fn mode_labels(mode: ScoringMode) -> Vec<String> {
    match mode {
        ScoringMode::Cat5 => crate::prompting::GEMBA_CLASSES.iter().map(|s| s.to_string()).collect(),
        ScoringMode::Cat3 => crate::prompting::THREE_CLASSES.iter().map(|s| s.to_string()).collect(),
        ScoringMode::Stars => (1..=5).map(|n| format!("{n} stars")).collect(),
        ScoringMode::Scalar => ["0-19", "20-39", "40-59", "60-79", "80-100"].map(String::from).to_vec(),
    }
}

fn bucket(mode: ScoringMode, ordinal: i64) -> usize {
    let idx = match mode {
        ScoringMode::Cat5 | ScoringMode::Cat3 => ordinal,
        ScoringMode::Stars => ordinal - 1,
        ScoringMode::Scalar => ordinal / 20,
    };
    idx.clamp(0, mode_labels(mode).len() as i64 - 1) as usize
}

/// Histogram over a mode's classes for a list of (possibly missing) ordinals.
pub fn distribution_from_ordinals(mode: ScoringMode, ordinals: impl IntoIterator<Item = Option<i64>>) -> DistributionStats {
    let labels = mode_labels(mode);
    let mut counts = vec![0usize; labels.len()];
    let mut unscored = 0;
    for o in ordinals {
        match o {
            Some(o) => counts[bucket(mode, o)] += 1,
            None => unscored += 1,
        }
    }
    let parsed: usize = counts.iter().sum();
    let neutral_fraction = (counts.len() % 2 == 1 && parsed > 0).then(|| counts[counts.len() / 2] as f64 / parsed as f64);
    DistributionStats {
        mode,
        labels,
        counts,
        unscored,
        neutral_fraction,
    }
}

pub fn score_distribution(scores: &ScoreTable, mode: ScoringMode) -> DistributionStats {
    distribution_from_ordinals(mode, scores.scores.values().filter(|q| q.mode == mode).map(|q| q.ordinal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{Estimator, QualityScore};
    use proptest::prelude::*;

    fn lp() -> LanguagePair {
        "de-en".parse().unwrap()
    }

    fn table(scores: &[(&str, &str, Option<i64>)]) -> ScoreTable {
        ScoreTable::from_scores(
            Estimator {
                kind: EstimatorKind::Gemba,
                mode: ScoringMode::Cat5,
            },
            scores.iter().map(|&(sys, seg, ordinal)| QualityScore {
                lp: lp(),
                system_id: sys.into(),
                seg_id: seg.into(),
                estimator: EstimatorKind::Gemba,
                mode: ScoringMode::Cat5,
                ordinal,
                error: ordinal.is_none().then(|| "parse: no class label found in response".into()),
                steps: vec![],
            }),
        )
    }

    fn judge(seg: &str, better: &str, worse: &str) -> RRJudgment {
        RRJudgment {
            lp: lp(),
            seg_id: seg.into(),
            better_system: better.into(),
            worse_system: worse.into(),
        }
    }

    fn row(sys: &str, mean: f64) -> SystemScoreRow {
        SystemScoreRow {
            lp: lp(),
            system_id: sys.into(),
            mean_ordinal: mean,
            n: 1,
        }
    }

    fn humans(v: &[(&str, f64)]) -> Vec<(String, f64)> {
        v.iter().map(|&(s, h)| (s.to_string(), h)).collect()
    }

    #[test]
    fn all_agree_and_balanced() {
        let t = table(&[("A", "1", Some(4)), ("B", "1", Some(1)), ("A", "2", Some(0)), ("B", "2", Some(3))]);
        let s = kendall_tau_rr(&t, &[judge("1", "A", "B")], DropPolicy::Drop);
        assert_eq!(s[0].tau, Some(1.0));
        let s = kendall_tau_rr(&t, &[judge("1", "A", "B"), judge("2", "A", "B")], DropPolicy::Drop);
        assert_eq!((s[0].concordant, s[0].discordant, s[0].tau), (1, 1, Some(0.0)));
    }

    #[test]
    fn metric_ties_are_discordant() {
        let t = table(&[("A", "1", Some(2)), ("B", "1", Some(2)), ("A", "2", Some(0)), ("B", "2", Some(0))]);
        let s = kendall_tau_rr(&t, &[judge("1", "A", "B"), judge("2", "B", "A")], DropPolicy::Drop);
        assert_eq!((s[0].concordant, s[0].discordant), (0, 2));
        assert_eq!(s[0].tau, Some(-1.0));
    }

    #[test]
    fn drop_and_middle_policies() {
        let t = table(&[("A", "1", None), ("B", "1", Some(1)), ("A", "2", Some(3)), ("B", "2", Some(1))]);
        let j = [judge("1", "A", "B"), judge("2", "A", "B"), judge("3", "A", "B")];
        let d = &kendall_tau_rr(&t, &j, DropPolicy::Drop)[0];
        assert_eq!((d.concordant, d.discordant, d.excluded), (1, 0, 2));
        // the unparsed A/1 becomes 2 > 1; seg 3 has no scores at all and stays excluded
        let m = &kendall_tau_rr(&t, &j, DropPolicy::Middle)[0];
        assert_eq!((m.concordant, m.discordant, m.excluded), (2, 0, 1));
    }

    #[test]
    fn nothing_countable_gives_null_tau() {
        let t = table(&[]);
        let s = kendall_tau_rr(&t, &[judge("1", "A", "B")], DropPolicy::Drop);
        assert_eq!((s[0].excluded, s[0].tau), (1, None));
    }

    #[test]
    fn system_means() {
        let t = table(&[("A", "1", Some(4)), ("B", "1", Some(0)), ("B", "2", Some(4)), ("B", "3", None)]);
        let rows = system_score(&t).unwrap();
        assert_eq!(rows[0].mean_ordinal, 4.0);
        assert_eq!((rows[1].mean_ordinal, rows[1].n), (2.0, 2));
        let t = table(&[("A", "1", None)]);
        assert!(matches!(system_score(&t), Err(MetricsError::EmptySystem { .. })));
    }

    #[test]
    fn pairwise_hand_enumeration() {
        // pairs (1,2) m 3v2 h 4v3 agree; (1,3) agree; (1,4) agree;
        // (2,3) m 2v2 h 3v2 tie -> disagree; (2,4) agree; (3,4) agree
        let m = [row("s1", 3.0), row("s2", 2.0), row("s3", 2.0), row("s4", 1.0)];
        let h = humans(&[("s1", 4.0), ("s2", 3.0), ("s3", 2.0), ("s4", 1.0)]);
        assert_eq!(pairwise_accuracy(&m, &h).unwrap(), 5.0 / 6.0);
        let rev = humans(&[("s1", 1.0), ("s2", 2.0), ("s3", 3.0), ("s4", 4.0)]);
        let strict = [row("s1", 4.0), row("s2", 3.0), row("s3", 2.0), row("s4", 1.0)];
        assert_eq!(pairwise_accuracy(&strict, &rev).unwrap(), 0.0);
        assert_eq!(pairwise_accuracy(&strict, &h).unwrap(), 1.0);
    }

    #[test]
    fn pairwise_errors() {
        assert_eq!(
            pairwise_accuracy(&[row("s1", 1.0)], &humans(&[("s1", 1.0)])),
            Err(MetricsError::InsufficientSystems { found: 1 })
        );
        let tied = humans(&[("s1", 1.0), ("s2", 1.0)]);
        assert!(pairwise_accuracy(&[row("s1", 1.0), row("s2", 2.0)], &tied).is_err());
    }

    #[test]
    fn distributions() {
        let d = distribution_from_ordinals(ScoringMode::Cat3, vec![Some(1); 7]);
        assert_eq!(d.neutral_fraction, Some(1.0));
        let d = distribution_from_ordinals(ScoringMode::Cat5, (0..5).map(Some));
        assert_eq!(d.neutral_fraction, Some(0.2));
        let ords = (0..100).map(|i| Some(if i < 31 { 1 } else if i < 70 { 0 } else { 2 }));
        let d = distribution_from_ordinals(ScoringMode::Cat3, ords);
        assert_eq!(d.counts, [39, 31, 30]);
        assert_eq!(d.neutral_fraction, Some(0.31));
        let d = distribution_from_ordinals(ScoringMode::Scalar, [Some(0), Some(50), Some(100), None]);
        assert_eq!((d.counts.clone(), d.unscored), (vec![1, 0, 1, 0, 1], 1));
    }

    fn brute_force(judgments: &[(i64, i64)]) -> (usize, usize) {
        let c = judgments.iter().filter(|(b, w)| b > w).count();
        let d = judgments.iter().filter(|(b, w)| b <= w).count();
        (c, d)
    }

    proptest! {
        #[test]
        fn counts_match_recount(js in prop::collection::vec((0i64..5, 0i64..5), 0..50)) {
            let mut c = KendallCounts::default();
            for &(b, w) in &js {
                c.record(Some(b), Some(w));
            }
            prop_assert_eq!((c.concordant, c.discordant), brute_force(&js));
        }

        #[test]
        fn reversal_negates_tau(js in prop::collection::vec((0i64..5, 0i64..5), 1..50)) {
            let js: Vec<_> = js.into_iter().filter(|(b, w)| b != w).collect();
            prop_assume!(!js.is_empty());
            let mut fwd = KendallCounts::default();
            let mut rev = KendallCounts::default();
            for &(b, w) in &js {
                fwd.record(Some(b), Some(w));
                rev.record(Some(-b), Some(-w));
            }
            prop_assert_eq!(fwd.tau().unwrap(), -rev.tau().unwrap());
        }

        #[test]
        fn exclusion_accounting(js in prop::collection::vec((prop::option::of(0i64..5), prop::option::of(0i64..5)), 0..50)) {
            let mut c = KendallCounts::default();
            for &(b, w) in &js {
                c.record(b, w);
            }
            prop_assert_eq!(c.concordant + c.discordant + c.excluded, js.len());
        }

        #[test]
        fn monotone_transform_keeps_accuracy(
            ms in prop::collection::vec(-50i64..50, 3..10),
            hs in prop::collection::vec(0i64..6, 10),
        ) {
            let n = ms.len();
            let h = (0..n).map(|i| (format!("s{i}"), hs[i] as f64)).collect::<Vec<_>>();
            prop_assume!(h.iter().any(|x| x.1 != h[0].1));
            let rows: Vec<_> = ms.iter().enumerate().map(|(i, &m)| row(&format!("s{i}"), m as f64)).collect();
            let warped: Vec<_> = ms.iter().enumerate().map(|(i, &m)| row(&format!("s{i}"), (m as f64 / 10.0).exp() * 3.0 + 1.0)).collect();
            prop_assert_eq!(pairwise_accuracy(&rows, &h).unwrap(), pairwise_accuracy(&warped, &h).unwrap());
        }
    }
}
