//! Versioned prompt templates and their rendering.
//!
//! A template asset is a small header followed by a `---` line and the body:
//!
//! ```text
//! id: gemba_classify
//! version: 1
//! family: gemba_classify
//! mode: cat5
//! schema: categorical
//! placeholder: source_seg
//! placeholder: target_seg
//! class: No meaning preserved
//! ...
//! ---
//! Classify the quality of machine translation into ...
//! ```
//!
//! `schema` is one of `categorical`, `stars <min> <max>`, `scalar <lo> <hi>` or
//! `matrix`. A placeholder written as `name?` is optional and may be bound to
//! an empty string. Class lists are ordered worst to best.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("template `{template_id}`: missing bindings for {}", .names.join(", "))]
    MissingBinding { template_id: String, names: Vec<String> },
    #[error("template `{template_id}`: unknown bindings {}", .names.join(", "))]
    UnknownBinding { template_id: String, names: Vec<String> },
    #[error("template `{template_id}`: empty value for required placeholder `{name}`")]
    EmptyValue { template_id: String, name: String },
    #[error("no template `{0}`")]
    NotFound(String),
    #[error("invalid template asset{}: {message}", .source_name.as_deref().map(|s| format!(" {s}")).unwrap_or_default())]
    InvalidAsset { source_name: Option<String>, message: String },
}

/// How a prompt asks the model to grade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoringMode {
    Cat5,
    Cat3,
    Stars,
    Scalar,
}

impl ScoringMode {
    pub const ALL: [ScoringMode; 4] = [ScoringMode::Cat5, ScoringMode::Cat3, ScoringMode::Stars, ScoringMode::Scalar];

    pub fn as_str(self) -> &'static str {
        match self {
            ScoringMode::Cat5 => "cat5",
            ScoringMode::Cat3 => "cat3",
            ScoringMode::Stars => "stars",
            ScoringMode::Scalar => "scalar",
        }
    }

    pub fn is_categorical(self) -> bool {
        matches!(self, ScoringMode::Cat5 | ScoringMode::Cat3)
    }
}

impl fmt::Display for ScoringMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScoringMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScoringMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown scoring mode `{s}` (expected cat5, cat3, stars or scalar)"))
    }
}

/// What a completion is expected to contain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ResponseSchema {
    Categorical { classes: Vec<String> },
    Stars { min: u32, max: u32 },
    Scalar { lo: f64, hi: f64 },
    Matrix,
}

impl ResponseSchema {
    fn header_value(&self) -> String {
        match self {
            ResponseSchema::Categorical { .. } => "categorical".to_string(),
            ResponseSchema::Stars { min, max } => format!("stars {min} {max}"),
            ResponseSchema::Scalar { lo, hi } => format!("scalar {lo} {hi}"),
            ResponseSchema::Matrix => "matrix".to_string(),
        }
    }
}

impl fmt::Display for ResponseSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResponseSchema::Categorical { classes } => write!(f, "categorical({} classes)", classes.len()),
            other => f.write_str(&other.header_value()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placeholder {
    pub name: String,
    pub optional: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub template_id: String,
    pub version: u32,
    /// Shared by all scoring-mode variants of one prompt.
    pub family: String,
    pub mode: Option<ScoringMode>,
    pub body: String,
    pub placeholders: Vec<Placeholder>,
    pub response_schema: ResponseSchema,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub template_id: String,
    pub version: u32,
    pub family: String,
    pub final_text: String,
    pub bindings: BTreeMap<String, String>,
    pub response_schema: ResponseSchema,
}

fn is_name_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn is_name_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_'
}

/// Pieces of a body: literal text and `{name}` references.
enum Piece<'a> {
    Text(&'a str),
    Slot(&'a str),
}

fn scan_body(body: &str) -> Vec<Piece<'_>> {
    let bytes = body.as_bytes();
    let mut pieces = Vec::new();
    let mut literal_start = 0;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' && i + 1 < bytes.len() && is_name_start(bytes[i + 1]) {
            let mut j = i + 1;
            while j < bytes.len() && is_name_char(bytes[j]) {
                j += 1;
            }
            if j < bytes.len() && bytes[j] == b'}' {
                if literal_start < i {
                    pieces.push(Piece::Text(&body[literal_start..i]));
                }
                pieces.push(Piece::Slot(&body[i + 1..j]));
                i = j + 1;
                literal_start = i;
                continue;
            }
        }
        i += 1;
    }
    if literal_start < body.len() {
        pieces.push(Piece::Text(&body[literal_start..]));
    }
    pieces
}

/// Names of all `{name}` references in order of first appearance.
pub fn body_placeholders(body: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    scan_body(body)
        .into_iter()
        .filter_map(|p| match p {
            Piece::Slot(name) if seen.insert(name) => Some(name.to_string()),
            _ => None,
        })
        .collect()
}

impl PromptTemplate {
    /// Validates placeholder and class-list invariants.
    pub fn new(
        template_id: impl Into<String>,
        version: u32,
        family: impl Into<String>,
        mode: Option<ScoringMode>,
        body: impl Into<String>,
        placeholders: Vec<Placeholder>,
        response_schema: ResponseSchema,
    ) -> Result<Self, PromptError> {
        let template = Self {
            template_id: template_id.into(),
            version,
            family: family.into(),
            mode,
            body: body.into(),
            placeholders,
            response_schema,
        };
        template.validate()?;
        Ok(template)
    }

    fn invalid(&self, message: String) -> PromptError {
        PromptError::InvalidAsset {
            source_name: Some(self.template_id.clone()),
            message,
        }
    }

    fn validate(&self) -> Result<(), PromptError> {
        let declared: BTreeSet<&str> = self.placeholders.iter().map(|p| p.name.as_str()).collect();
        if declared.len() != self.placeholders.len() {
            return Err(self.invalid("placeholder declared twice".into()));
        }
        let used = body_placeholders(&self.body);
        let used: BTreeSet<&str> = used.iter().map(String::as_str).collect();
        if let Some(name) = used.difference(&declared).next() {
            return Err(self.invalid(format!("body references undeclared placeholder `{name}`")));
        }
        if let Some(name) = declared.difference(&used).next() {
            return Err(self.invalid(format!("declared placeholder `{name}` never appears in the body")));
        }
        match &self.response_schema {
            ResponseSchema::Categorical { classes } => {
                let distinct: BTreeSet<&String> = classes.iter().collect();
                if classes.len() < 2 || distinct.len() != classes.len() {
                    return Err(self.invalid("categorical schema needs at least two distinct classes".into()));
                }
            }
            ResponseSchema::Stars { min, max } if min >= max => {
                return Err(self.invalid("stars range must satisfy min < max".into()));
            }
            ResponseSchema::Scalar { lo, hi } if lo >= hi => {
                return Err(self.invalid("scalar range must satisfy lo < hi".into()));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn classes(&self) -> Option<&[String]> {
        match &self.response_schema {
            ResponseSchema::Categorical { classes } => Some(classes),
            _ => None,
        }
    }

    pub fn placeholder_names(&self) -> impl Iterator<Item = &str> {
        self.placeholders.iter().map(|p| p.name.as_str())
    }

    /// Parses a template asset (header, `---`, body).
    pub fn from_asset(text: &str) -> Result<Self, PromptError> {
        let err = |message: String| PromptError::InvalidAsset {
            source_name: None,
            message,
        };
        let (header, body) = text
            .split_once("\n---\n")
            .ok_or_else(|| err("missing `---` separator".into()))?;
        let body = body.strip_suffix('\n').unwrap_or(body);

        let mut id = None;
        let mut version = None;
        let mut family = None;
        let mut mode = None;
        let mut schema_kind = None;
        let mut placeholders = Vec::new();
        let mut classes = Vec::new();
        for line in header.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| err(format!("header line without `key:` prefix: {line}")))?;
            let value = value.trim();
            match key.trim() {
                "id" => id = Some(value.to_string()),
                "version" => {
                    version = Some(value.parse::<u32>().map_err(|_| err(format!("bad version `{value}`")))?)
                }
                "family" => family = Some(value.to_string()),
                "mode" => mode = Some(value.parse::<ScoringMode>().map_err(err)?),
                "schema" => schema_kind = Some(value.to_string()),
                "placeholder" => placeholders.push(match value.strip_suffix('?') {
                    Some(name) => Placeholder {
                        name: name.to_string(),
                        optional: true,
                    },
                    None => Placeholder {
                        name: value.to_string(),
                        optional: false,
                    },
                }),
                "class" => classes.push(value.to_string()),
                other => return Err(err(format!("unknown header key `{other}`"))),
            }
        }
        let id = id.ok_or_else(|| err("missing `id`".into()))?;
        let version = version.ok_or_else(|| err(format!("{id}: missing `version`")))?;
        let schema_kind = schema_kind.ok_or_else(|| err(format!("{id}: missing `schema`")))?;
        let parts: Vec<&str> = schema_kind.split_whitespace().collect();
        let bad_schema = || err(format!("{id}: bad schema `{schema_kind}`"));
        let schema = match parts.as_slice() {
            ["categorical"] => ResponseSchema::Categorical { classes },
            ["stars", min, max] => ResponseSchema::Stars {
                min: min.parse().map_err(|_| bad_schema())?,
                max: max.parse().map_err(|_| bad_schema())?,
            },
            ["scalar", lo, hi] => ResponseSchema::Scalar {
                lo: lo.parse().map_err(|_| bad_schema())?,
                hi: hi.parse().map_err(|_| bad_schema())?,
            },
            ["matrix"] => ResponseSchema::Matrix,
            _ => return Err(bad_schema()),
        };
        let family = family.unwrap_or_else(|| id.clone());
        PromptTemplate::new(id, version, family, mode, body, placeholders, schema)
    }

    /// Inverse of [`PromptTemplate::from_asset`].
    pub fn to_asset(&self) -> String {
        let mut out = format!("id: {}\nversion: {}\nfamily: {}\n", self.template_id, self.version, self.family);
        if let Some(mode) = self.mode {
            out.push_str(&format!("mode: {mode}\n"));
        }
        out.push_str(&format!("schema: {}\n", self.response_schema.header_value()));
        for p in &self.placeholders {
            out.push_str(&format!("placeholder: {}{}\n", p.name, if p.optional { "?" } else { "" }));
        }
        if let Some(classes) = self.classes() {
            for c in classes {
                out.push_str(&format!("class: {c}\n"));
            }
        }
        out.push_str("---\n");
        out.push_str(&self.body);
        out.push('\n');
        out
    }
}

/// Literal substitution of `bindings` into the template body.
///
/// Bindings must name exactly the declared placeholders. Values are inserted
/// as-is and never rescanned for further placeholders.
pub fn render_template(
    template: &PromptTemplate,
    bindings: &BTreeMap<String, String>,
) -> Result<RenderedPrompt, PromptError> {
    let missing: Vec<String> = template
        .placeholder_names()
        .filter(|n| !bindings.contains_key(*n))
        .map(str::to_string)
        .collect();
    if !missing.is_empty() {
        return Err(PromptError::MissingBinding {
            template_id: template.template_id.clone(),
            names: missing,
        });
    }
    let unknown: Vec<String> = bindings
        .keys()
        .filter(|k| !template.placeholders.iter().any(|p| &p.name == *k))
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Err(PromptError::UnknownBinding {
            template_id: template.template_id.clone(),
            names: unknown,
        });
    }
    for p in &template.placeholders {
        if !p.optional && bindings[&p.name].is_empty() {
            return Err(PromptError::EmptyValue {
                template_id: template.template_id.clone(),
                name: p.name.clone(),
            });
        }
    }

    let mut final_text = String::with_capacity(template.body.len() + bindings.values().map(String::len).sum::<usize>());
    for piece in scan_body(&template.body) {
        match piece {
            Piece::Text(t) => final_text.push_str(t),
            Piece::Slot(name) => final_text.push_str(&bindings[name]),
        }
    }
    Ok(RenderedPrompt {
        template_id: template.template_id.clone(),
        version: template.version,
        family: template.family.clone(),
        final_text,
        bindings: bindings.clone(),
        response_schema: template.response_schema.clone(),
    })
}

/// Convenience for building binding maps from string pairs.
pub fn bindings<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

macro_rules! builtin_assets {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../templates/", $name, ".txt")))),*]
    };
}

const BUILTIN_ASSETS: &[(&str, &str)] = builtin_assets![
    "gemba_classify",
    "gemba_classify_cat3",
    "gemba_classify_stars",
    "gemba_classify_scalar",
    "kpe_perplexity",
    "kpe_perplexity_cat3",
    "kpe_perplexity_stars",
    "kpe_perplexity_scalar",
    "kpe_token_sim",
    "kpe_token_sim_cat3",
    "kpe_token_sim_stars",
    "kpe_token_sim_scalar",
    "kpe_sent_sim",
    "kpe_sent_sim_cat3",
    "kpe_sent_sim_stars",
    "kpe_sent_sim_scalar",
    "kpe_cot1_combine",
    "kpe_cot1_combine_cat3",
    "kpe_cot2_combine",
    "kpe_cot2_combine_cat3",
    "kpe_token_align",
];

/// Immutable set of templates keyed by id.
#[derive(Debug, Clone, Default)]
pub struct TemplateRegistry {
    templates: BTreeMap<String, PromptTemplate>,
}

impl TemplateRegistry {
    pub fn builtin() -> Self {
        let mut registry = Self::default();
        for (name, text) in BUILTIN_ASSETS {
            let template = PromptTemplate::from_asset(text).unwrap_or_else(|e| panic!("builtin template {name}: {e}"));
            assert_eq!(&template.template_id, name, "asset file name must match its id");
            registry.insert(template);
        }
        registry
    }

    /// Builtins, overridden or extended by every `*.txt` asset in `dir`.
    pub fn with_overrides(dir: &Path) -> Result<Self, PromptError> {
        let mut registry = Self::builtin();
        let entries = fs::read_dir(dir).map_err(|e| PromptError::InvalidAsset {
            source_name: Some(dir.display().to_string()),
            message: e.to_string(),
        })?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        paths.sort();
        for path in paths {
            let text = fs::read_to_string(&path).map_err(|e| PromptError::InvalidAsset {
                source_name: Some(path.display().to_string()),
                message: e.to_string(),
            })?;
            let template = PromptTemplate::from_asset(&text).map_err(|e| PromptError::InvalidAsset {
                source_name: Some(path.display().to_string()),
                message: e.to_string(),
            })?;
            registry.insert(template);
        }
        Ok(registry)
    }

    pub fn insert(&mut self, template: PromptTemplate) {
        self.templates.insert(template.template_id.clone(), template);
    }

    pub fn get(&self, template_id: &str) -> Result<&PromptTemplate, PromptError> {
        self.templates
            .get(template_id)
            .ok_or_else(|| PromptError::NotFound(template_id.to_string()))
    }

    /// The member of `family` written for `mode`.
    pub fn variant(&self, family: &str, mode: ScoringMode) -> Result<&PromptTemplate, PromptError> {
        self.templates
            .values()
            .find(|t| t.family == family && t.mode == Some(mode))
            .ok_or_else(|| PromptError::NotFound(format!("{family} ({mode})")))
    }

    pub fn iter(&self) -> impl Iterator<Item = &PromptTemplate> {
        self.templates.values()
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }
}

/// GEMBA's five quality classes, worst to best.
pub const GEMBA_CLASSES: [&str; 5] = [
    "No meaning preserved",
    "Some meaning preserved, but not understandable",
    "Some meaning preserved and understandable",
    "Most meaning preserved, minor issues",
    "Perfect translation",
];

/// Three-way scale; the middle class is the neutral one.
pub const THREE_CLASSES: [&str; 3] = ["Bad translation", "Partially correct translation", "Good translation"];

#[cfg(test)]
mod tests {
    use super::*;

    fn simple(body: &str, names: &[&str]) -> PromptTemplate {
        PromptTemplate::new(
            "t",
            1,
            "t",
            Some(ScoringMode::Cat5),
            body,
            names
                .iter()
                .map(|n| Placeholder {
                    name: n.to_string(),
                    optional: false,
                })
                .collect(),
            ResponseSchema::Categorical {
                classes: vec!["bad".into(), "good".into()],
            },
        )
        .unwrap()
    }

    #[test]
    fn literal_substitution() {
        let t = simple("source: \"{source_seg}\"", &["source_seg"]);
        let r = render_template(&t, &bindings([("source_seg", "Hi")])).unwrap();
        assert_eq!(r.final_text, "source: \"Hi\"");
    }

    #[test]
    fn values_are_not_rescanned_or_trimmed() {
        let t = simple("a={a} b={b}", &["a", "b"]);
        let r = render_template(&t, &bindings([("a", " {b} "), ("b", "x")])).unwrap();
        assert_eq!(r.final_text, "a= {b}  b=x");
    }

    #[test]
    fn non_placeholder_braces_are_literal() {
        let t = simple("{\"json\": 1} { x } {name}", &["name"]);
        let r = render_template(&t, &bindings([("name", "v")])).unwrap();
        assert_eq!(r.final_text, "{\"json\": 1} { x } v");
    }

    #[test]
    fn binding_errors() {
        let t = simple("{source_seg} {target_seg}", &["source_seg", "target_seg"]);
        assert_eq!(
            render_template(&t, &bindings([("source_seg", "s")])).unwrap_err(),
            PromptError::MissingBinding {
                template_id: "t".into(),
                names: vec!["target_seg".into()]
            }
        );
        assert!(matches!(
            render_template(&t, &bindings([("source_seg", "s"), ("target_seg", "m"), ("extra", "x")])),
            Err(PromptError::UnknownBinding { .. })
        ));
        assert!(matches!(
            render_template(&t, &bindings([("source_seg", "s"), ("target_seg", "")])),
            Err(PromptError::EmptyValue { .. })
        ));
    }

    #[test]
    fn optional_placeholder_accepts_empty() {
        let t = PromptTemplate::from_asset("id: t\nversion: 1\nschema: matrix\nplaceholder: note?\n---\n[{note}]\n").unwrap();
        assert_eq!(render_template(&t, &bindings([("note", "")])).unwrap().final_text, "[]");
    }

    #[test]
    fn declared_and_used_placeholders_must_agree() {
        let err = PromptTemplate::from_asset("id: t\nversion: 1\nschema: matrix\nplaceholder: a\n---\n{a} {b}\n");
        assert!(matches!(err, Err(PromptError::InvalidAsset { .. })));
        let err = PromptTemplate::from_asset("id: t\nversion: 1\nschema: matrix\nplaceholder: a\nplaceholder: b\n---\n{a}\n");
        assert!(matches!(err, Err(PromptError::InvalidAsset { .. })));
    }

    #[test]
    fn categorical_needs_two_distinct_classes() {
        let err = PromptTemplate::from_asset("id: t\nversion: 1\nschema: categorical\nclass: a\nclass: a\n---\nx\n");
        assert!(matches!(err, Err(PromptError::InvalidAsset { .. })));
    }

    #[test]
    fn asset_round_trip() {
        for t in TemplateRegistry::builtin().iter() {
            assert_eq!(&PromptTemplate::from_asset(&t.to_asset()).unwrap(), t);
        }
    }

    #[test]
    fn gemba_template_is_verbatim() {
        let reg = TemplateRegistry::builtin();
        let t = reg.get("gemba_classify").unwrap();
        assert_eq!(t.classes().unwrap(), GEMBA_CLASSES.map(String::from).as_slice());
        let r = render_template(t, &bindings([("source_seg", "他今天来了"), ("target_seg", "He came today.")])).unwrap();
        assert!(r
            .final_text
            .starts_with("Classify the quality of machine translation into one of following classes"));
        assert!(r.final_text.contains("source: \"他今天来了\"\nmachine translation: \"He came today.\"\nClass:"));
        assert!(r.final_text.ends_with("Class:"));
    }

    #[test]
    fn registry_contents() {
        let reg = TemplateRegistry::builtin();
        for id in [
            "gemba_classify",
            "kpe_perplexity",
            "kpe_token_sim",
            "kpe_sent_sim",
            "kpe_cot1_combine",
            "kpe_cot2_combine",
            "kpe_token_align",
        ] {
            assert!(reg.get(id).is_ok(), "{id}");
        }
        let names: Vec<&str> = reg.get("kpe_perplexity").unwrap().placeholder_names().collect();
        assert_eq!(names, vec!["target_seg"]);
        let names: BTreeSet<&str> = reg.get("kpe_cot2_combine").unwrap().placeholder_names().collect();
        assert_eq!(
            names,
            BTreeSet::from(["source_seg", "target_seg", "perplexity_answer", "token_answer", "sentence_answer"])
        );
        assert!(matches!(reg.get("nope"), Err(PromptError::NotFound(_))));
    }

    #[test]
    fn every_family_has_cat3_variant_with_neutral_middle() {
        let reg = TemplateRegistry::builtin();
        for family in [
            "gemba_classify",
            "kpe_perplexity",
            "kpe_token_sim",
            "kpe_sent_sim",
            "kpe_cot1_combine",
            "kpe_cot2_combine",
        ] {
            let t = reg.variant(family, ScoringMode::Cat3).unwrap();
            assert_eq!(t.classes().unwrap(), THREE_CLASSES.map(String::from).as_slice());
            let t = reg.variant(family, ScoringMode::Cat5).unwrap();
            assert_eq!(t.template_id, family);
        }
        assert!(reg.variant("kpe_cot1_combine", ScoringMode::Stars).is_err());
    }

    #[test]
    fn categorical_templates_end_with_answer_cue() {
        for t in TemplateRegistry::builtin().iter() {
            let cue = match t.response_schema {
                ResponseSchema::Categorical { .. } => "Class:",
                ResponseSchema::Stars { .. } => "Stars:",
                ResponseSchema::Scalar { .. } => "Score:",
                ResponseSchema::Matrix => "Matrix:",
            };
            assert!(t.body.ends_with(cue), "{}", t.template_id);
        }
    }

    /// Golden body hashes. A failing entry means a template body changed:
    /// bump its `version` and update the hash here.
    #[test]
    fn body_changes_require_version_bump() {
        use sha2::{Digest, Sha256};
        let reg = TemplateRegistry::builtin();
        let golden: &[(&str, u32, &str)] = &include!("../templates/GOLDEN");
        assert_eq!(golden.len(), reg.len());
        for (id, version, hash) in golden {
            let t = reg.get(id).unwrap();
            let actual = hex::encode(Sha256::digest(t.body.as_bytes()));
            assert_eq!(
                (t.version, actual.as_str()),
                (*version, *hash),
                "template {id} body or version changed"
            );
        }
    }
}
