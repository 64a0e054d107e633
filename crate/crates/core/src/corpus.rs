//! Evaluation data: source segments, system outputs and relative-ranking judgments.
//!
//! Three record kinds are read from either a headerless UTF-8 TSV file or a
//! JSONL mirror with the same field names:
//!
//! | kind       | columns                                          |
//! |------------|--------------------------------------------------|
//! | segments   | `lp`, `seg_id`, `src_text`                       |
//! | outputs    | `lp`, `system_id`, `seg_id`, `mt_text`           |
//! | judgments  | `lp`, `seg_id`, `better_system`, `worse_system`  |
//!
//! Text fields are trimmed at load; interior whitespace is kept verbatim.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: duplicate key {key} (first seen on line {first_line})")]
    DuplicateKey {
        path: PathBuf,
        line: usize,
        first_line: usize,
        key: String,
    },
    #[error("{path}:{line}: judgment compares system `{system}` with itself")]
    SelfComparison {
        path: PathBuf,
        line: usize,
        system: String,
    },
    #[error("referential integrity: {0}")]
    Referential(String),
    #[error("invalid language pair `{0}`: expected `xx-yy` with 2-3 lowercase ASCII letters per side")]
    LanguagePair(String),
}

/// On-disk record encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Tsv,
    Jsonl,
}

impl DataFormat {
    /// `.jsonl` / `.json` select JSONL, anything else TSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => DataFormat::Jsonl,
            _ => DataFormat::Tsv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LanguagePair {
    src_lang: String,
    tgt_lang: String,
}

impl LanguagePair {
    pub fn new(src_lang: &str, tgt_lang: &str) -> Result<Self, CorpusError> {
        let valid = |code: &str| (2..=3).contains(&code.len()) && code.bytes().all(|b| b.is_ascii_lowercase());
        if !valid(src_lang) || !valid(tgt_lang) {
            return Err(CorpusError::LanguagePair(format!("{src_lang}-{tgt_lang}")));
        }
        Ok(Self {
            src_lang: src_lang.to_string(),
            tgt_lang: tgt_lang.to_string(),
        })
    }

    pub fn src_lang(&self) -> &str {
        &self.src_lang
    }

    pub fn tgt_lang(&self) -> &str {
        &self.tgt_lang
    }
}

impl FromStr for LanguagePair {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('-') {
            Some((src, tgt)) => LanguagePair::new(src, tgt),
            None => Err(CorpusError::LanguagePair(s.to_string())),
        }
    }
}

impl fmt::Display for LanguagePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.src_lang, self.tgt_lang)
    }
}

impl Serialize for LanguagePair {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LanguagePair {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub lp: LanguagePair,
    pub seg_id: String,
    pub src_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemOutput {
    pub lp: LanguagePair,
    pub system_id: String,
    pub seg_id: String,
    pub mt_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RRJudgment {
    pub lp: LanguagePair,
    pub seg_id: String,
    pub better_system: String,
    pub worse_system: String,
}

/// `(lp, seg_id)`
pub type SegmentKey = (LanguagePair, String);
/// `(lp, system_id, seg_id)`
pub type OutputKey = (LanguagePair, String, String);

/// A validated dataset. Immutable once assembled.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvalDataset {
    segments: BTreeMap<SegmentKey, Segment>,
    outputs: BTreeMap<OutputKey, SystemOutput>,
    judgments: Vec<RRJudgment>,
}

impl EvalDataset {
    /// Checks referential integrity between the three collections.
    pub fn assemble(
        segments: Vec<Segment>,
        outputs: Vec<SystemOutput>,
        judgments: Vec<RRJudgment>,
    ) -> Result<Self, CorpusError> {
        let mut seg_map = BTreeMap::new();
        for seg in segments {
            let key = (seg.lp.clone(), seg.seg_id.clone());
            if seg_map.insert(key, seg).is_some() {
                return Err(CorpusError::Referential("duplicate segment key".into()));
            }
        }
        let mut out_map = BTreeMap::new();
        for out in outputs {
            if !seg_map.contains_key(&(out.lp.clone(), out.seg_id.clone())) {
                return Err(CorpusError::Referential(format!(
                    "output of system `{}` references unknown segment {}/{}",
                    out.system_id, out.lp, out.seg_id
                )));
            }
            let key = (out.lp.clone(), out.system_id.clone(), out.seg_id.clone());
            if out_map.insert(key, out).is_some() {
                return Err(CorpusError::Referential("duplicate system output key".into()));
            }
        }
        for j in &judgments {
            if j.better_system == j.worse_system {
                return Err(CorpusError::Referential(format!(
                    "judgment {}/{} compares `{}` with itself",
                    j.lp, j.seg_id, j.better_system
                )));
            }
            for system in [&j.better_system, &j.worse_system] {
                let key = (j.lp.clone(), system.clone(), j.seg_id.clone());
                if !out_map.contains_key(&key) {
                    return Err(CorpusError::Referential(format!(
                        "judgment {}/{} references system `{}` with no output for that segment",
                        j.lp, j.seg_id, system
                    )));
                }
            }
        }
        Ok(Self {
            segments: seg_map,
            outputs: out_map,
            judgments,
        })
    }

    /// Loads and assembles the three files, picking the format from each extension.
    pub fn load(segments: &Path, outputs: &Path, judgments: &Path) -> Result<Self, CorpusError> {
        Self::assemble(
            load_segments(segments, DataFormat::from_path(segments))?,
            load_system_outputs(outputs, DataFormat::from_path(outputs))?,
            load_rr_judgments(judgments, DataFormat::from_path(judgments))?,
        )
    }

    pub fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.segments.values()
    }

    pub fn outputs(&self) -> impl Iterator<Item = &SystemOutput> {
        self.outputs.values()
    }

    pub fn judgments(&self) -> &[RRJudgment] {
        &self.judgments
    }

    pub fn segment(&self, lp: &LanguagePair, seg_id: &str) -> Option<&Segment> {
        self.segments.get(&(lp.clone(), seg_id.to_string()))
    }

    pub fn output(&self, lp: &LanguagePair, system_id: &str, seg_id: &str) -> Option<&SystemOutput> {
        self.outputs
            .get(&(lp.clone(), system_id.to_string(), seg_id.to_string()))
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty() && self.outputs.is_empty() && self.judgments.is_empty()
    }

    /// Writes the canonical JSONL mirror: `segments.jsonl`, `outputs.jsonl`, `judgments.jsonl`.
    pub fn write_jsonl(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        write_jsonl_file(&dir.join("segments.jsonl"), self.segments.values())?;
        write_jsonl_file(&dir.join("outputs.jsonl"), self.outputs.values())?;
        write_jsonl_file(&dir.join("judgments.jsonl"), self.judgments.iter())?;
        Ok(())
    }
}

fn write_jsonl_file<'a, T: Serialize + 'a>(path: &Path, items: impl Iterator<Item = &'a T>) -> io::Result<()> {
    let mut w = io::BufWriter::new(fs::File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpStats {
    pub segments: usize,
    pub systems: usize,
    pub judgments: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub per_lp: BTreeMap<LanguagePair, LpStats>,
}

impl DatasetStats {
    pub fn total_judgments(&self) -> usize {
        self.per_lp.values().map(|s| s.judgments).sum()
    }
}

/// Per-language-pair counts. `judgments` counts RR triplets, duplicates included.
pub fn dataset_stats(dataset: &EvalDataset) -> DatasetStats {
    let mut per_lp: BTreeMap<LanguagePair, LpStats> = BTreeMap::new();
    let mut systems: BTreeMap<&LanguagePair, BTreeSet<&str>> = BTreeMap::new();
    for seg in dataset.segments() {
        per_lp.entry(seg.lp.clone()).or_default().segments += 1;
    }
    for out in dataset.outputs() {
        systems.entry(&out.lp).or_default().insert(&out.system_id);
    }
    for (lp, set) in systems {
        per_lp.entry(lp.clone()).or_default().systems = set.len();
    }
    for j in dataset.judgments() {
        per_lp.entry(j.lp.clone()).or_default().judgments += 1;
    }
    DatasetStats { per_lp }
}

struct RecordLines {
    path: PathBuf,
    lines: Vec<(usize, String)>,
}

fn read_lines(path: &Path) -> Result<RecordLines, CorpusError> {
    let bytes = fs::read(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = Vec::new();
    for (idx, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let line_no = idx + 1;
        let text = std::str::from_utf8(raw).map_err(|e| CorpusError::Format {
            path: path.to_path_buf(),
            line: line_no,
            message: format!("invalid UTF-8: {e}"),
        })?;
        let text = text.strip_suffix('\r').unwrap_or(text);
        if text.trim().is_empty() {
            continue;
        }
        lines.push((line_no, text.to_string()));
    }
    Ok(RecordLines {
        path: path.to_path_buf(),
        lines,
    })
}

impl RecordLines {
    fn format_err(&self, line: usize, message: impl Into<String>) -> CorpusError {
        CorpusError::Format {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    /// Yields each record as trimmed field values in `names` order.
    fn records(&self, format: DataFormat, names: &[&str]) -> Result<Vec<(usize, Vec<String>)>, CorpusError> {
        let mut out = Vec::with_capacity(self.lines.len());
        for (line_no, text) in &self.lines {
            let fields: Vec<String> = match format {
                DataFormat::Tsv => {
                    let cols: Vec<&str> = text.split('\t').collect();
                    if cols.len() != names.len() {
                        return Err(self.format_err(
                            *line_no,
                            format!("expected {} tab-separated columns, found {}", names.len(), cols.len()),
                        ));
                    }
                    cols.into_iter().map(|c| c.trim().to_string()).collect()
                }
                DataFormat::Jsonl => {
                    let obj: HashMap<String, serde_json::Value> = serde_json::from_str(text)
                        .map_err(|e| self.format_err(*line_no, format!("invalid JSON object: {e}")))?;
                    let mut fields = Vec::with_capacity(names.len());
                    for name in names {
                        match obj.get(*name) {
                            Some(serde_json::Value::String(s)) => fields.push(s.trim().to_string()),
                            Some(_) => return Err(self.format_err(*line_no, format!("field `{name}` must be a string"))),
                            None => return Err(self.format_err(*line_no, format!("missing field `{name}`"))),
                        }
                    }
                    fields
                }
            };
            for (name, value) in names.iter().zip(&fields) {
                if value.is_empty() {
                    return Err(self.format_err(*line_no, format!("empty `{name}`")));
                }
            }
            out.push((*line_no, fields));
        }
        Ok(out)
    }

    fn lp(&self, line: usize, value: &str) -> Result<LanguagePair, CorpusError> {
        value.parse().map_err(|_| self.format_err(line, format!("invalid language pair `{value}`")))
    }
}

pub fn load_segments(path: &Path, format: DataFormat) -> Result<Vec<Segment>, CorpusError> {
    let file = read_lines(path)?;
    let mut seen: HashMap<(LanguagePair, String), usize> = HashMap::new();
    let mut segments = Vec::new();
    for (line, mut f) in file.records(format, &["lp", "seg_id", "src_text"])? {
        let lp = file.lp(line, &f[0])?;
        let src_text = f.pop().unwrap();
        let seg_id = f.pop().unwrap();
        if let Some(&first_line) = seen.get(&(lp.clone(), seg_id.clone())) {
            return Err(CorpusError::DuplicateKey {
                path: file.path.clone(),
                line,
                first_line,
                key: format!("{lp}/{seg_id}"),
            });
        }
        seen.insert((lp.clone(), seg_id.clone()), line);
        segments.push(Segment { lp, seg_id, src_text });
    }
    Ok(segments)
}

pub fn load_system_outputs(path: &Path, format: DataFormat) -> Result<Vec<SystemOutput>, CorpusError> {
    let file = read_lines(path)?;
    let mut seen: HashMap<OutputKey, usize> = HashMap::new();
    let mut outputs = Vec::new();
    for (line, mut f) in file.records(format, &["lp", "system_id", "seg_id", "mt_text"])? {
        let lp = file.lp(line, &f[0])?;
        let mt_text = f.pop().unwrap();
        let seg_id = f.pop().unwrap();
        let system_id = f.pop().unwrap();
        let key = (lp.clone(), system_id.clone(), seg_id.clone());
        if let Some(&first_line) = seen.get(&key) {
            return Err(CorpusError::DuplicateKey {
                path: file.path.clone(),
                line,
                first_line,
                key: format!("{lp}/{system_id}/{seg_id}"),
            });
        }
        seen.insert(key, line);
        outputs.push(SystemOutput {
            lp,
            system_id,
            seg_id,
            mt_text,
        });
    }
    Ok(outputs)
}

/// Order-preserving; duplicate judgments are kept.
pub fn load_rr_judgments(path: &Path, format: DataFormat) -> Result<Vec<RRJudgment>, CorpusError> {
    let file = read_lines(path)?;
    let mut judgments = Vec::new();
    for (line, mut f) in file.records(format, &["lp", "seg_id", "better_system", "worse_system"])? {
        let lp = file.lp(line, &f[0])?;
        let worse_system = f.pop().unwrap();
        let better_system = f.pop().unwrap();
        let seg_id = f.pop().unwrap();
        if better_system == worse_system {
            return Err(CorpusError::SelfComparison {
                path: file.path.clone(),
                line,
                system: better_system,
            });
        }
        judgments.push(RRJudgment {
            lp,
            seg_id,
            better_system,
            worse_system,
        });
    }
    Ok(judgments)
}

/// Reads a WMT relative-ranking file: whitespace-separated columns
/// `LP DATA SID BETTER WORSE` with a header line.
pub fn load_wmt_rr(path: &Path) -> Result<Vec<RRJudgment>, CorpusError> {
    let file = read_lines(path)?;
    let mut judgments = Vec::new();
    for (line, text) in &file.lines {
        let cols: Vec<&str> = text.split_whitespace().collect();
        if cols.first() == Some(&"LP") {
            continue;
        }
        if cols.len() != 5 {
            return Err(file.format_err(*line, format!("expected 5 columns, found {}", cols.len())));
        }
        let (better_system, worse_system) = (cols[3].to_string(), cols[4].to_string());
        if better_system == worse_system {
            return Err(CorpusError::SelfComparison {
                path: file.path.clone(),
                line: *line,
                system: better_system,
            });
        }
        judgments.push(RRJudgment {
            lp: file.lp(*line, cols[0])?,
            seg_id: cols[2].to_string(),
            better_system,
            worse_system,
        });
    }
    Ok(judgments)
}

/// Published system-level human score for one system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanSystemScore {
    pub lp: LanguagePair,
    pub system_id: String,
    pub score: f64,
}

/// `lp<TAB>system_id<TAB>score`, one row per system.
pub fn load_human_scores(path: &Path, format: DataFormat) -> Result<Vec<HumanSystemScore>, CorpusError> {
    let file = read_lines(path)?;
    let mut seen: HashMap<(LanguagePair, String), usize> = HashMap::new();
    let mut rows = Vec::new();
    for (line, mut f) in file.records(format, &["lp", "system_id", "score"])? {
        let lp = file.lp(line, &f[0])?;
        let raw = f.pop().unwrap();
        let system_id = f.pop().unwrap();
        let score: f64 = raw
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| file.format_err(line, format!("invalid score `{raw}`")))?;
        if let Some(&first_line) = seen.get(&(lp.clone(), system_id.clone())) {
            return Err(CorpusError::DuplicateKey {
                path: file.path.clone(),
                line,
                first_line,
                key: format!("{lp}/{system_id}"),
            });
        }
        seen.insert((lp.clone(), system_id.clone()), line);
        rows.push(HumanSystemScore { lp, system_id, score });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file_with(contents: &[u8], suffix: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(suffix).tempfile().unwrap();
        f.write_all(contents).unwrap();
        f
    }

    fn zh_en() -> LanguagePair {
        "zh-en".parse().unwrap()
    }

    #[test]
    fn wmt_rr_file() {
        let f = file_with(b"LP DATA SID BETTER WORSE\nzh-en newstest2017 7 uedin.123 online-B.0\n", ".csv");
        let j = load_wmt_rr(f.path()).unwrap();
        assert_eq!(j.len(), 1);
        assert_eq!((j[0].seg_id.as_str(), j[0].better_system.as_str()), ("7", "uedin.123"));
        let bad = file_with(b"zh-en newstest2017 7 a\n", ".csv");
        assert!(matches!(load_wmt_rr(bad.path()), Err(CorpusError::Format { line: 1, .. })));
    }

    #[test]
    fn language_pair_validation() {
        assert_eq!(zh_en().to_string(), "zh-en");
        assert!("ZH-en".parse::<LanguagePair>().is_err());
        assert!("zhen".parse::<LanguagePair>().is_err());
        assert!("z-en".parse::<LanguagePair>().is_err());
        assert!("abcd-en".parse::<LanguagePair>().is_err());
        assert!("zh-en-x".parse::<LanguagePair>().is_err());
        assert!("fil-en".parse::<LanguagePair>().is_ok());
    }

    #[test]
    fn segment_tsv_line() {
        let f = file_with("zh-en\tseg42\t他今天来了\n".as_bytes(), ".tsv");
        let segs = load_segments(f.path(), DataFormat::Tsv).unwrap();
        assert_eq!(
            segs,
            vec![Segment {
                lp: zh_en(),
                seg_id: "seg42".into(),
                src_text: "他今天来了".into()
            }]
        );
    }

    #[test]
    fn duplicate_segment_names_second_line() {
        let f = file_with(b"zh-en\tseg42\ta\nzh-en\tseg42\tb\n", ".tsv");
        match load_segments(f.path(), DataFormat::Tsv) {
            Err(CorpusError::DuplicateKey { line, first_line, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(first_line, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn format_errors_carry_line_numbers() {
        let f = file_with(b"zh-en\ts1\tok\nzh-en\ts2\n", ".tsv");
        assert!(matches!(
            load_segments(f.path(), DataFormat::Tsv),
            Err(CorpusError::Format { line: 2, .. })
        ));
        let f = file_with(b"zh-en\ts1\t   \n", ".tsv");
        assert!(matches!(
            load_segments(f.path(), DataFormat::Tsv),
            Err(CorpusError::Format { line: 1, .. })
        ));
        let f = file_with(b"zh-en\ts1\tok\nzh-en\ts2\t\xff\xfe\n", ".tsv");
        assert!(matches!(
            load_segments(f.path(), DataFormat::Tsv),
            Err(CorpusError::Format { line: 2, .. })
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_segments(Path::new("/nonexistent/segments.tsv"), DataFormat::Tsv).unwrap_err();
        assert!(matches!(err, CorpusError::Io { .. }));
    }

    #[test]
    fn text_is_trimmed_but_interior_whitespace_kept() {
        let f = file_with(b"zh-en\tsysA\tseg42\t  He  came today.  \n", ".tsv");
        let outs = load_system_outputs(f.path(), DataFormat::Tsv).unwrap();
        assert_eq!(outs[0].mt_text, "He  came today.");
        assert_eq!(outs[0].system_id, "sysA");
        assert_eq!(outs[0].seg_id, "seg42");
    }

    #[test]
    fn rr_judgments() {
        let f = file_with(b"zh-en\tseg42\tsysA\tsysB\nzh-en\tseg42\tsysA\tsysB\n", ".tsv");
        let js = load_rr_judgments(f.path(), DataFormat::Tsv).unwrap();
        assert_eq!(js.len(), 2, "duplicates are preserved");
        assert_eq!(js[0].better_system, "sysA");
        assert_eq!(js[0].worse_system, "sysB");

        let f = file_with(b"zh-en\tseg42\tsysA\tsysA\n", ".tsv");
        assert!(matches!(
            load_rr_judgments(f.path(), DataFormat::Tsv),
            Err(CorpusError::SelfComparison { line: 1, .. })
        ));
    }

    #[test]
    fn jsonl_mirror() {
        let f = file_with(
            br#"{"lp":"zh-en","seg_id":"seg42","better_system":"sysA","worse_system":"sysB"}"#,
            ".jsonl",
        );
        let js = load_rr_judgments(f.path(), DataFormat::Jsonl).unwrap();
        assert_eq!(js[0].lp, zh_en());
        let f = file_with(br#"{"lp":"zh-en","seg_id":"seg42"}"#, ".jsonl");
        assert!(matches!(
            load_rr_judgments(f.path(), DataFormat::Jsonl),
            Err(CorpusError::Format { .. })
        ));
    }

    fn seg(id: &str) -> Segment {
        Segment {
            lp: zh_en(),
            seg_id: id.into(),
            src_text: "src".into(),
        }
    }

    fn out(sys: &str, id: &str) -> SystemOutput {
        SystemOutput {
            lp: zh_en(),
            system_id: sys.into(),
            seg_id: id.into(),
            mt_text: "mt".into(),
        }
    }

    #[test]
    fn unknown_segment_reference_fails_assembly() {
        let err = EvalDataset::assemble(vec![seg("s1")], vec![out("sysA", "s2")], vec![]).unwrap_err();
        assert!(matches!(err, CorpusError::Referential(_)));
    }

    #[test]
    fn judgment_needs_both_outputs() {
        let j = RRJudgment {
            lp: zh_en(),
            seg_id: "s1".into(),
            better_system: "sysA".into(),
            worse_system: "sysB".into(),
        };
        let err = EvalDataset::assemble(vec![seg("s1")], vec![out("sysA", "s1")], vec![j.clone()]).unwrap_err();
        assert!(matches!(err, CorpusError::Referential(_)));
        let ds = EvalDataset::assemble(vec![seg("s1")], vec![out("sysA", "s1"), out("sysB", "s1")], vec![j]).unwrap();
        let stats = dataset_stats(&ds);
        assert_eq!(
            stats.per_lp[&zh_en()],
            LpStats {
                segments: 1,
                systems: 2,
                judgments: 1
            }
        );
    }

    #[test]
    fn empty_dataset_stats() {
        let stats = dataset_stats(&EvalDataset::default());
        assert!(stats.per_lp.is_empty());
        assert_eq!(stats.total_judgments(), 0);
    }
}
