//! Token-level alignment matrices between a source sentence and its
//! translation, and their rendering as grayscale SVG heatmaps.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::backend::{cached_complete, BackendError, CompletionRequest, DiskCache, GenParams, Provider, RetryPolicy};
use crate::prompting::{bindings, render_template, PromptError, TemplateRegistry};

pub const ALIGN_TEMPLATE: &str = "kpe_token_align";
/// Upper bound on `|src| * |mt|` per alignment prompt.
pub const MAX_ALIGN_CELLS: usize = 1024;
/// Upper bound on tokens per heatmap axis.
pub const MAX_HEATMAP_TOKENS: usize = 64;

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("cannot tokenize an empty sentence")]
    EmptyInput,
    #[error("token `{0}` is empty or contains whitespace")]
    InvalidToken(String),
    #[error("alignment of {src} x {mt} tokens exceeds the {MAX_ALIGN_CELLS}-cell limit")]
    InputTooLarge { src: usize, mt: usize },
    #[error("matrix shape mismatch: {0}")]
    MatrixShape(String),
    #[error("cannot parse cell ({row}, {col}): `{value}`")]
    ValueParse { row: usize, col: usize, value: String },
    #[error("{axis} axis has {count} tokens, more than {MAX_HEATMAP_TOKENS}")]
    TooManyTokens { axis: &'static str, count: usize },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct TokenList(Vec<String>);

impl TokenList {
    pub fn new(tokens: Vec<String>) -> Result<Self, AlignError> {
        if tokens.is_empty() {
            return Err(AlignError::EmptyInput);
        }
        if let Some(bad) = tokens.iter().find(|t| t.is_empty() || t.chars().any(char::is_whitespace)) {
            return Err(AlignError::InvalidToken(bad.clone()));
        }
        Ok(Self(tokens))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    /// `1. tok` lines, as bound into the alignment prompt.
    pub fn numbered(&self) -> String {
        self.0
            .iter()
            .enumerate()
            .map(|(i, t)| format!("{}. {t}", i + 1))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

impl TryFrom<Vec<String>> for TokenList {
    type Error = AlignError;

    fn try_from(v: Vec<String>) -> Result<Self, Self::Error> {
        TokenList::new(v)
    }
}

impl From<TokenList> for Vec<String> {
    fn from(t: TokenList) -> Self {
        t.0
    }
}

pub fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// Han ideographs and kana, which are written without spaces.
pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30FF
        | 0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xF900..=0xFAFF
        | 0x20000..=0x2FA1F)
}

fn split_core(core: &[char], out: &mut Vec<String>) {
    let mut run = String::new();
    for (i, &c) in core.iter().enumerate() {
        let near_cjk = |j: Option<usize>| j.and_then(|j| core.get(j)).is_some_and(|&n| is_cjk(n));
        let isolate = is_cjk(c) || (is_punctuation(c) && (near_cjk(i.checked_sub(1)) || near_cjk(Some(i + 1))));
        if isolate {
            if !run.is_empty() {
                out.push(std::mem::take(&mut run));
            }
            out.push(c.to_string());
        } else {
            run.push(c);
        }
    }
    if !run.is_empty() {
        out.push(run);
    }
}

/// Whitespace split, leading and trailing punctuation detached one character
/// per token, and CJK characters split individually.
pub fn tokenize(sentence: &str) -> Result<TokenList, AlignError> {
    let mut tokens = Vec::new();
    for word in sentence.split_whitespace() {
        let chars: Vec<char> = word.chars().collect();
        let lead = chars.iter().take_while(|&&c| is_punctuation(c)).count();
        if lead == chars.len() {
            tokens.extend(chars.iter().map(char::to_string));
            continue;
        }
        let trail = chars.iter().rev().take_while(|&&c| is_punctuation(c)).count();
        tokens.extend(chars[..lead].iter().map(char::to_string));
        split_core(&chars[lead..chars.len() - trail], &mut tokens);
        tokens.extend(chars[chars.len() - trail..].iter().map(char::to_string));
    }
    TokenList::new(tokens)
}

/// Reads tokens back out of a [`TokenList::numbered`] block.
pub fn parse_numbered_tokens(text: &str) -> Vec<String> {
    text.lines()
        .filter_map(|line| {
            let line = line.trim();
            let (num, rest) = line.split_once(". ")?;
            num.parse::<usize>().ok()?;
            let tok = rest.trim();
            (!tok.is_empty()).then(|| tok.to_string())
        })
        .collect()
}

fn all_punctuation(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_punctuation)
}

/// Similarity the mock provider reports for a token pair: 0.95 for identical
/// punctuation, 1.0 for case-insensitively equal words, 0.02 otherwise.
pub fn mock_cell(src: &str, mt: &str) -> f64 {
    if all_punctuation(src) && src == mt {
        0.95
    } else if src.to_lowercase() == mt.to_lowercase() {
        1.0
    } else {
        0.02
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentMatrix {
    src_tokens: TokenList,
    mt_tokens: TokenList,
    cells: Vec<Vec<f64>>,
}

impl AlignmentMatrix {
    /// `cells[i][j]` is the similarity of source token `i` and translation token `j`.
    pub fn new(src_tokens: TokenList, mt_tokens: TokenList, cells: Vec<Vec<f64>>) -> Result<Self, AlignError> {
        if cells.len() != src_tokens.len() {
            return Err(AlignError::MatrixShape(format!(
                "{} rows for {} source tokens",
                cells.len(),
                src_tokens.len()
            )));
        }
        for (i, row) in cells.iter().enumerate() {
            if row.len() != mt_tokens.len() {
                return Err(AlignError::MatrixShape(format!(
                    "row {} has {} values for {} translation tokens",
                    i + 1,
                    row.len(),
                    mt_tokens.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(AlignError::ValueParse {
                    row: i,
                    col: j,
                    value: row[j].to_string(),
                });
            }
        }
        Ok(Self {
            src_tokens,
            mt_tokens,
            cells,
        })
    }

    pub fn src_tokens(&self) -> &TokenList {
        &self.src_tokens
    }

    pub fn mt_tokens(&self) -> &TokenList {
        &self.mt_tokens
    }

    pub fn cells(&self) -> &[Vec<f64>] {
        &self.cells
    }

    pub fn get(&self, src: usize, mt: usize) -> f64 {
        self.cells[src][mt]
    }
}

/// A parsed provider matrix and how many cells had to be clamped into [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AlignOutcome {
    pub matrix: AlignmentMatrix,
    pub clamped: usize,
}

fn is_row_line(line: &str) -> bool {
    line.chars()
        .next()
        .is_some_and(|c| c.is_ascii_digit() || matches!(c, '-' | '+' | '.'))
}

/// Parses one row per line of comma-separated percentages.
///
/// Lines that do not start with a number are ignored. Values are divided by
/// 100 and clamped to [0, 1].
pub fn parse_alignment_response(text: &str, src: &TokenList, mt: &TokenList) -> Result<AlignOutcome, AlignError> {
    let rows: Vec<&str> = text.lines().map(str::trim).filter(|l| is_row_line(l)).collect();
    if rows.len() != src.len() {
        return Err(AlignError::MatrixShape(format!(
            "expected {} rows, found {}",
            src.len(),
            rows.len()
        )));
    }
    let mut clamped = 0;
    let mut cells = Vec::with_capacity(rows.len());
    for (i, line) in rows.iter().enumerate() {
        let values: Vec<&str> = line.trim_end_matches(',').split(',').map(str::trim).collect();
        if values.len() != mt.len() {
            return Err(AlignError::MatrixShape(format!(
                "row {} has {} values, expected {}",
                i + 1,
                values.len(),
                mt.len()
            )));
        }
        let mut row = Vec::with_capacity(values.len());
        for (j, raw) in values.iter().enumerate() {
            let pct: f64 = raw
                .trim_end_matches('%')
                .trim()
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| AlignError::ValueParse {
                    row: i,
                    col: j,
                    value: raw.to_string(),
                })?;
            let v = pct / 100.0;
            let c = v.clamp(0.0, 1.0);
            if c != v {
                clamped += 1;
            }
            row.push(c);
        }
        cells.push(row);
    }
    if clamped > 0 {
        log::warn!("clamped {clamped} alignment cell(s) into [0, 100]%");
    }
    Ok(AlignOutcome {
        matrix: AlignmentMatrix::new(src.clone(), mt.clone(), cells)?,
        clamped,
    })
}

/// The completion request that asks for a token similarity matrix.
pub fn alignment_request(
    registry: &TemplateRegistry,
    src: &TokenList,
    mt: &TokenList,
    params: &GenParams,
) -> Result<CompletionRequest, AlignError> {
    if src.len() * mt.len() > MAX_ALIGN_CELLS {
        return Err(AlignError::InputTooLarge {
            src: src.len(),
            mt: mt.len(),
        });
    }
    let template = registry.get(ALIGN_TEMPLATE)?;
    let src_block = src.numbered();
    let mt_block = mt.numbered();
    let prompt = render_template(template, &bindings([("source_seg", src_block.as_str()), ("target_seg", mt_block.as_str())]))?;
    Ok(CompletionRequest::new(prompt, params.clone()))
}

pub fn align_tokens(
    src: &TokenList,
    mt: &TokenList,
    registry: &TemplateRegistry,
    provider: &dyn Provider,
    cache: Option<&DiskCache>,
    params: &GenParams,
    retry: &RetryPolicy,
) -> Result<AlignOutcome, AlignError> {
    let request = alignment_request(registry, src, mt, params)?;
    let result = cached_complete(provider, cache, &request, retry)?;
    parse_alignment_response(&result.text, src, mt)
}

/// For every translation token, the best source token. Ties go to the lowest source index.
pub fn greedy_alignment(matrix: &AlignmentMatrix) -> Vec<(usize, usize, f64)> {
    (0..matrix.mt_tokens.len())
        .map(|j| {
            let mut best = (0, matrix.cells[0][j]);
            for i in 1..matrix.src_tokens.len() {
                if matrix.cells[i][j] > best.1 {
                    best = (i, matrix.cells[i][j]);
                }
            }
            (best.0, j, best.1)
        })
        .collect()
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

const CELL: usize = 32;
const CHAR_W: usize = 8;
const PAD: usize = 10;

/// Grayscale heatmap: white at 0, black at 1. Source tokens label the rows,
/// translation tokens the columns.
pub fn render_heatmap(matrix: &AlignmentMatrix) -> Result<String, AlignError> {
    let (rows, cols) = (matrix.src_tokens.len(), matrix.mt_tokens.len());
    if rows > MAX_HEATMAP_TOKENS {
        return Err(AlignError::TooManyTokens { axis: "source", count: rows });
    }
    if cols > MAX_HEATMAP_TOKENS {
        return Err(AlignError::TooManyTokens {
            axis: "translation",
            count: cols,
        });
    }
    let label_w = |tokens: &TokenList| tokens.iter().map(|t| t.chars().count()).max().unwrap_or(0) * CHAR_W + PAD;
    let left = label_w(&matrix.src_tokens).max(40);
    let top = label_w(&matrix.mt_tokens).max(40);
    let width = left + cols * CELL + PAD;
    let height = top + rows * CELL + PAD;

    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    svg.push_str("<g class=\"cells\">\n");
    for (i, row) in matrix.cells.iter().enumerate() {
        for (j, &score) in row.iter().enumerate() {
            let level = ((1.0 - score) * 255.0).round() as u8;
            let _ = writeln!(
                svg,
                "<rect class=\"cell\" x=\"{}\" y=\"{}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"#{level:02x}{level:02x}{level:02x}\" stroke=\"#cccccc\" stroke-width=\"0.5\"><title>{} / {}: {:.2}</title></rect>",
                left + j * CELL,
                top + i * CELL,
                xml_escape(&matrix.src_tokens.0[i]),
                xml_escape(&matrix.mt_tokens.0[j]),
                score
            );
        }
    }
    svg.push_str("</g>\n<g class=\"row-labels\">\n");
    for (i, tok) in matrix.src_tokens.iter().enumerate() {
        let _ = writeln!(
            svg,
            "<text class=\"row-label\" x=\"{}\" y=\"{}\" text-anchor=\"end\" dominant-baseline=\"middle\">{}</text>",
            left - 6,
            top + i * CELL + CELL / 2,
            xml_escape(tok)
        );
    }
    svg.push_str("</g>\n<g class=\"col-labels\">\n");
    for (j, tok) in matrix.mt_tokens.iter().enumerate() {
        let _ = writeln!(
            svg,
            "<text class=\"col-label\" transform=\"translate({},{}) rotate(-60)\" text-anchor=\"start\" dominant-baseline=\"middle\">{}</text>",
            left + j * CELL + CELL / 2,
            top - 6,
            xml_escape(tok)
        );
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> TokenList {
        tokenize(s).unwrap()
    }

    fn words(t: &TokenList) -> Vec<&str> {
        t.iter().map(String::as_str).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(words(&toks("He came today.")), ["He", "came", "today", "."]);
        assert_eq!(words(&toks("他今天来了")), ["他", "今", "天", "来", "了"]);
        assert!(matches!(tokenize(""), Err(AlignError::EmptyInput)));
        assert!(matches!(tokenize("  \t "), Err(AlignError::EmptyInput)));
    }

    #[test]
    fn tokenize_punctuation_and_mixed_scripts() {
        assert_eq!(words(&toks("\"Hello,\" she said...")), ["\"", "Hello", ",", "\"", "she", "said", ".", ".", "."]);
        assert_eq!(words(&toks("don't stop")), ["don't", "stop"]);
        assert_eq!(words(&toks("他说，你好。")), ["他", "说", "，", "你", "好", "。"]);
        assert_eq!(words(&toks("用GPT-4翻译")), ["用", "GPT-4", "翻", "译"]);
        assert_eq!(words(&toks("— !")), ["—", "!"]);
    }

    #[test]
    fn mock_cells() {
        assert_eq!(mock_cell(".", "."), 0.95);
        assert_eq!(mock_cell("The", "the"), 1.0);
        assert_eq!(mock_cell("a", "."), 0.02);
    }

    #[test]
    fn numbered_round_trip() {
        let t = toks("a b , c");
        assert_eq!(parse_numbered_tokens(&t.numbered()), t.as_slice());
    }

    #[test]
    fn response_parsing_shapes_and_clamping() {
        let src = toks("a b .");
        let mt = toks("b .");
        let out = parse_alignment_response("Matrix:\n2, 2\n100%, 2\n2, 95\n", &src, &mt).unwrap();
        assert_eq!(out.matrix.get(2, 1), 0.95);
        assert_eq!(out.matrix.get(0, 1), 0.02);
        assert_eq!(out.clamped, 0);

        let out = parse_alignment_response("101, 0\n-3, 50\n0, 0", &src, &mt).unwrap();
        assert_eq!(out.clamped, 2);
        assert_eq!(out.matrix.get(0, 0), 1.0);
        assert_eq!(out.matrix.get(1, 0), 0.0);

        let four = toks("a b c d");
        assert!(matches!(
            parse_alignment_response("1, 2\n3, 4\n5, 6", &four, &mt),
            Err(AlignError::MatrixShape(_))
        ));
        assert!(matches!(
            parse_alignment_response("1\n3, 4\n5, 6", &src, &mt),
            Err(AlignError::MatrixShape(_))
        ));
        match parse_alignment_response("1, 2\n3, x\n5, 6", &src, &mt) {
            Err(AlignError::ValueParse { row: 1, col: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn size_guard() {
        let reg = TemplateRegistry::builtin();
        let long: Vec<String> = (0..33).map(|i| format!("w{i}")).collect();
        let t = TokenList::new(long).unwrap();
        assert!(matches!(
            alignment_request(&reg, &t, &t, &GenParams::new("m")),
            Err(AlignError::InputTooLarge { .. })
        ));
    }

    #[test]
    fn greedy_examples() {
        let t = toks("a b c");
        let id = AlignmentMatrix::new(
            t.clone(),
            t.clone(),
            (0..3).map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
        )
        .unwrap();
        assert_eq!(greedy_alignment(&id), vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        let flat = AlignmentMatrix::new(t.clone(), toks("x"), vec![vec![0.3]; 3]).unwrap();
        assert_eq!(greedy_alignment(&flat), vec![(0, 0, 0.3)]);
    }

    #[test]
    fn heatmap_structure() {
        let one = AlignmentMatrix::new(toks("a"), toks("b"), vec![vec![1.0]]).unwrap();
        let svg = render_heatmap(&one).unwrap();
        assert_eq!(svg.matches("<rect class=\"cell\"").count(), 1);
        assert!(svg.contains("fill=\"#000000\""));

        let m = AlignmentMatrix::new(toks("a b"), toks("x y z"), vec![vec![0.0, 0.5, 1.0], vec![0.2, 0.4, 0.6]]).unwrap();
        let svg = render_heatmap(&m).unwrap();
        assert_eq!(svg.matches("<rect class=\"cell\"").count(), 6);
        assert_eq!(svg.matches("class=\"row-label\"").count(), 2);
        assert_eq!(svg.matches("class=\"col-label\"").count(), 3);
        assert!(svg.contains("fill=\"#ffffff\""));
        assert_eq!(svg, render_heatmap(&m).unwrap());
    }

    #[test]
    fn heatmap_escapes_and_limits() {
        let m = AlignmentMatrix::new(toks("<&>"), toks("\""), vec![vec![0.5]]).unwrap();
        let svg = render_heatmap(&m).unwrap();
        assert!(svg.contains("&lt;&amp;&gt;"));
        let many = TokenList::new((0..65).map(|i| format!("t{i}")).collect()).unwrap();
        let m = AlignmentMatrix::new(many, toks("x"), vec![vec![0.0]; 65]).unwrap();
        assert!(matches!(render_heatmap(&m), Err(AlignError::TooManyTokens { .. })));
    }

    #[test]
    fn matrix_rejects_out_of_range_cells() {
        assert!(AlignmentMatrix::new(toks("a"), toks("b"), vec![vec![1.5]]).is_err());
        assert!(AlignmentMatrix::new(toks("a"), toks("b c"), vec![vec![0.5]]).is_err());
    }
}
