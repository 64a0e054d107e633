//! Result tables: Kendall tau per estimator and language pair with an
//! average column, exclusion counts, score distributions, and optional
//! system-level pairwise accuracy.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{io_err, score_file_name, CliError, RunMetadata};
use crate::chains::{EstimatorKind, ScoreTable};
use crate::corpus::{load_human_scores, load_rr_judgments, DataFormat, LanguagePair};
use crate::metrics::{kendall_tau_rr, pairwise_accuracy_by_lp, score_distribution, system_means, DistributionStats, KendallSummary};
use crate::parsing::DropPolicy;
use crate::prompting::ScoringMode;

/// Placeholder for cells without a value.
pub const MISSING: &str = "—";

#[derive(Debug, Clone)]
pub struct ReportInputs {
    /// Score files, or directories searched for `scores_<estimator>.jsonl`.
    pub score_paths: Vec<PathBuf>,
    pub judgments: PathBuf,
    pub human_scores: Option<PathBuf>,
    pub drop_policy: DropPolicy,
    pub generated_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KendallRow {
    pub estimator: EstimatorKind,
    pub mode: ScoringMode,
    /// Aligned with [`Report::lps`].
    pub cells: Vec<Option<KendallSummary>>,
    /// Mean tau over the lps that have one.
    pub avg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub estimator: EstimatorKind,
    /// Aligned with [`Report::pairwise_lps`].
    pub cells: Vec<Option<f64>>,
    pub avg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub lps: Vec<LanguagePair>,
    pub kendall: Vec<KendallRow>,
    pub distributions: Vec<(EstimatorKind, DistributionStats)>,
    pub pairwise_lps: Vec<LanguagePair>,
    pub pairwise: Vec<AccuracyRow>,
    pub model_id: Option<String>,
    pub templates: Vec<(String, u32)>,
    pub warnings: Vec<String>,
    pub generated_at: u64,
}

/// Table cell text: percentage to one decimal, e.g. `0.2912` -> `29.1%`.
pub fn format_pct(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{:.1}%", v * 100.0),
        None => MISSING.to_string(),
    }
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn expand_score_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let before = out.len();
            for kind in EstimatorKind::ALL {
                let f = p.join(score_file_name(kind));
                if f.is_file() {
                    out.push(f);
                }
            }
            if out.len() == before {
                return Err(CliError::Input(format!("no score files in {}", p.display())));
            }
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn load_metadata(score_file: &Path) -> Option<RunMetadata> {
    let path = score_file.parent()?.join("run.json");
    serde_json::from_str(&fs::read_to_string(path).ok()?).ok()
}

/// Computes every table of the report from score files and judgments.
pub fn cmd_report(inputs: &ReportInputs) -> Result<Report, CliError> {
    let files = expand_score_paths(&inputs.score_paths)?;
    let mut tables: Vec<ScoreTable> = files
        .iter()
        .map(|f| ScoreTable::read_jsonl(f))
        .collect::<Result<_, _>>()?;
    tables.sort_by_key(|t| t.estimator);
    if let Some(w) = tables.windows(2).find(|w| w[0].estimator.kind == w[1].estimator.kind) {
        return Err(CliError::Input(format!("estimator {} given twice", w[0].estimator.kind)));
    }
    let judgments = load_rr_judgments(&inputs.judgments, DataFormat::from_path(&inputs.judgments))?;
    let lps: Vec<LanguagePair> = judgments.iter().map(|j| j.lp.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let mut warnings = Vec::new();

    let mut kendall = Vec::new();
    for t in &tables {
        let summaries = kendall_tau_rr(t, &judgments, inputs.drop_policy);
        let cells: Vec<Option<KendallSummary>> = lps
            .iter()
            .map(|lp| summaries.iter().find(|s| &s.lp == lp).cloned())
            .collect();
        for (lp, c) in lps.iter().zip(&cells) {
            if c.as_ref().and_then(|c| c.tau).is_none() {
                let w = format!("{}: no countable judgments for {lp}", t.estimator.kind);
                log::warn!("{w}");
                warnings.push(w);
            }
        }
        let avg = mean(cells.iter().map(|c| c.as_ref().and_then(|c| c.tau)));
        kendall.push(KendallRow {
            estimator: t.estimator.kind,
            mode: t.estimator.mode,
            cells,
            avg,
        });
    }

    let distributions = tables
        .iter()
        .map(|t| (t.estimator.kind, score_distribution(t, t.estimator.mode)))
        .collect();

    let (mut pairwise_lps, mut pairwise) = (Vec::new(), Vec::new());
    if let Some(path) = &inputs.human_scores {
        let human = load_human_scores(path, DataFormat::from_path(path))?;
        pairwise_lps = human.iter().map(|h| h.lp.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        for t in &tables {
            let (rows, empty) = system_means(t);
            for (lp, sys) in empty {
                let w = format!("{}: system {sys} ({lp}) has no parsed scores", t.estimator.kind);
                log::warn!("{w}");
                warnings.push(w);
            }
            let acc = pairwise_accuracy_by_lp(&rows, &human);
            let cells: Vec<Option<f64>> = pairwise_lps
                .iter()
                .map(|lp| match acc.get(lp) {
                    Some(Ok(v)) => Some(*v),
                    Some(Err(e)) => {
                        let w = format!("{}: pairwise accuracy for {lp}: {e}", t.estimator.kind);
                        log::warn!("{w}");
                        warnings.push(w);
                        None
                    }
                    None => None,
                })
                .collect();
            let avg = mean(cells.iter().copied());
            pairwise.push(AccuracyRow {
                estimator: t.estimator.kind,
                cells,
                avg,
            });
        }
    }

    let mut templates = BTreeSet::new();
    for t in &tables {
        for q in t.scores.values() {
            for s in &q.steps {
                templates.insert((s.template_id.clone(), s.version));
            }
        }
    }
    Ok(Report {
        lps,
        kendall,
        distributions,
        pairwise_lps,
        pairwise,
        model_id: files.first().and_then(|f| load_metadata(f)).map(|m| m.model_id),
        templates: templates.into_iter().collect(),
        warnings,
        generated_at: inputs.generated_at,
    })
}

fn table_header(out: &mut String, first: &[&str], lps: &[LanguagePair]) {
    let mut cols: Vec<String> = first.iter().map(|s| s.to_string()).collect();
    cols.extend(lps.iter().map(|l| l.to_string()));
    cols.push("avg".into());
    let _ = writeln!(out, "| {} |", cols.join(" | "));
    let align: Vec<&str> = (0..cols.len())
        .map(|i| if i < first.len() { "---" } else { "---:" })
        .collect();
    let _ = writeln!(out, "| {} |", align.join(" | "));
}

impl Report {
    /// Markdown rendering. Only the final line carries the timestamp.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("# Quality estimation report\n\n## Segment-level Kendall tau\n\n");
        table_header(&mut out, &["Model", "Category"], &self.lps);
        for row in &self.kendall {
            let (name, category) = row.estimator.display_name();
            let mut cells = vec![name.to_string(), category.to_string()];
            cells.extend(row.cells.iter().map(|c| format_pct(c.as_ref().and_then(|c| c.tau))));
            cells.push(format_pct(row.avg));
            let _ = writeln!(out, "| {} |", cells.join(" | "));
        }

        out.push_str("\n## Judgment accounting\n\n");
        out.push_str("| Model | lp | Concordant | Discordant | Excluded |\n| --- | --- | ---: | ---: | ---: |\n");
        for row in &self.kendall {
            for (lp, c) in self.lps.iter().zip(&row.cells) {
                let (c, d, e) = c
                    .as_ref()
                    .map(|c| (c.concordant, c.discordant, c.excluded))
                    .unwrap_or_default();
                let _ = writeln!(out, "| {} | {lp} | {c} | {d} | {e} |", row.estimator.display_name().0);
            }
        }

        out.push_str("\n## Score distribution\n\n");
        out.push_str("| Model | Mode | Counts (worst to best) | Unscored | Neutral |\n| --- | --- | --- | ---: | ---: |\n");
        for (kind, d) in &self.distributions {
            let counts: Vec<String> = d.counts.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} |",
                kind.display_name().0,
                d.mode,
                counts.join(" / "),
                d.unscored,
                format_pct(d.neutral_fraction)
            );
        }

        if !self.pairwise.is_empty() {
            out.push_str("\n## System-level pairwise accuracy\n\n");
            table_header(&mut out, &["Model"], &self.pairwise_lps);
            for row in &self.pairwise {
                let mut cells = vec![row.estimator.display_name().0.to_string()];
                cells.extend(row.cells.iter().map(|&c| format_pct(c)));
                cells.push(format_pct(row.avg));
                let _ = writeln!(out, "| {} |", cells.join(" | "));
            }
        }

        out.push_str("\n## Run\n\n");
        let _ = writeln!(out, "- model: {}", self.model_id.as_deref().unwrap_or("unknown"));
        let templates: Vec<String> = self.templates.iter().map(|(id, v)| format!("{id} v{v}")).collect();
        let _ = writeln!(out, "- templates: {}", templates.join(", "));
        for w in &self.warnings {
            let _ = writeln!(out, "- warning: {w}");
        }
        let _ = writeln!(out, "- generated_at: {}", self.generated_at);
        out
    }

    /// Long-format CSV with full-precision values.
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| CliError::Input(format!("csv: {e}"));
        w.write_record(["table", "estimator", "mode", "lp", "concordant", "discordant", "excluded", "value"])
            .map_err(csv_err)?;
        let num = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for row in &self.kendall {
            let (est, mode) = (row.estimator.as_str(), row.mode.as_str());
            for (lp, c) in self.lps.iter().zip(&row.cells) {
                let (cc, dd, ee, tau) = match c {
                    Some(c) => (c.concordant.to_string(), c.discordant.to_string(), c.excluded.to_string(), num(c.tau)),
                    None => Default::default(),
                };
                w.write_record(["kendall", est, mode, &lp.to_string(), &cc, &dd, &ee, &tau])
                    .map_err(csv_err)?;
            }
            w.write_record(["kendall", est, mode, "avg", "", "", "", &num(row.avg)])
                .map_err(csv_err)?;
        }
        for (kind, d) in &self.distributions {
            w.write_record(["neutral_fraction", kind.as_str(), d.mode.as_str(), "", "", "", "", &num(d.neutral_fraction)])
                .map_err(csv_err)?;
        }
        for row in &self.pairwise {
            for (lp, c) in self.pairwise_lps.iter().zip(&row.cells) {
                w.write_record(["pairwise_accuracy", row.estimator.as_str(), "", &lp.to_string(), "", "", "", &num(*c)])
                    .map_err(csv_err)?;
            }
            w.write_record(["pairwise_accuracy", row.estimator.as_str(), "", "avg", "", "", "", &num(row.avg)])
                .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Input(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// Writes `report.md` and `report.csv` into `out_dir`.
    pub fn write(&self, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
        let md = out_dir.join("report.md");
        fs::write(&md, self.to_markdown()).map_err(io_err(&md))?;
        let csv_path = out_dir.join("report.csv");
        fs::write(&csv_path, self.to_csv()?).map_err(io_err(&csv_path))?;
        Ok(vec![md, csv_path])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentage_cells() {
        assert_eq!(format_pct(Some(0.2912)), "29.1%");
        assert_eq!(format_pct(Some(-0.05)), "-5.0%");
        assert_eq!(format_pct(Some(1.0)), "100.0%");
        assert_eq!(format_pct(None), MISSING);
    }

    #[test]
    fn average_skips_missing() {
        assert_eq!(mean([Some(0.2), None, Some(0.4)].into_iter()), Some(0.30000000000000004));
        assert_eq!(mean([None, None].into_iter()), None);
    }
}
