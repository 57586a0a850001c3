//! Natural-language request handling: stop-word filtering, gazetteer location
//! lookup and keyword-containment application classification.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ApplicationType, Position, RequestMetadata, TrustLevel};

/// Keyword list and synonym table for one application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplicationKeywords {
    pub name: ApplicationType,
    pub keywords: BTreeSet<String>,
    /// Maps a surface word to the keyword it stands for.
    #[serde(default)]
    pub synonyms: BTreeMap<String, String>,
}

impl ApplicationKeywords {
    fn expand<'a>(&'a self, token: &'a str) -> &'a str {
        self.synonyms.get(token).map_or(token, String::as_str)
    }

    fn matches(&self, token: &str) -> bool {
        self.keywords.contains(self.expand(token))
    }

    /// Keywords plus every synonym surface form.
    pub fn vocabulary(&self) -> BTreeSet<&str> {
        self.keywords
            .iter()
            .map(String::as_str)
            .chain(self.synonyms.keys().map(String::as_str))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordConfig {
    /// Order matters: it breaks score ties.
    pub applications: Vec<ApplicationKeywords>,
    pub stop_words: BTreeSet<String>,
    pub gazetteer: BTreeMap<String, Position>,
    #[serde(default = "default_min_score")]
    pub min_score: f64,
}

fn default_min_score() -> f64 {
    0.2
}

impl KeywordConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.applications.is_empty() {
            return bad("no applications declared".into());
        }
        if !(self.min_score > 0.0 && self.min_score <= 1.0) {
            return bad(format!("min_score {} outside (0, 1]", self.min_score));
        }
        let mut owner_of: BTreeMap<&str, &ApplicationType> = BTreeMap::new();
        let mut names = BTreeSet::new();
        for app in &self.applications {
            if !names.insert(&app.name) {
                return bad(format!("application `{}` declared twice", app.name));
            }
            if app.keywords.is_empty() {
                return bad(format!("application `{}` has no keywords", app.name));
            }
            for (word, target) in &app.synonyms {
                if !app.keywords.contains(target) {
                    return bad(format!(
                        "synonym `{word}` of `{}` points at `{target}`, which is not one of its keywords",
                        app.name
                    ));
                }
            }
            for word in app.vocabulary() {
                if word != word.to_lowercase() {
                    return bad(format!("keyword `{word}` must be lower-case"));
                }
                if let Some(other) = owner_of.insert(word, &app.name) {
                    if other != &app.name {
                        return bad(format!(
                            "keyword `{word}` belongs to both `{other}` and `{}`",
                            app.name
                        ));
                    }
                }
                if self.stop_words.contains(word) {
                    return bad(format!("keyword `{word}` is also a stop word"));
                }
            }
        }
        for (name, position) in &self.gazetteer {
            if name != &name.to_lowercase() || name.trim().is_empty() {
                return bad(format!("gazetteer name `{name}` must be non-empty lower-case"));
            }
            if name.split_whitespace().count() > 2 {
                return bad(format!("gazetteer name `{name}` has more than two words"));
            }
            if !position.in_unit_square() {
                return bad(format!("gazetteer entry `{name}` lies outside the unit square"));
            }
        }
        Ok(())
    }

    pub fn application_names(&self) -> impl Iterator<Item = &ApplicationType> {
        self.applications.iter().map(|a| &a.name)
    }
}

/// Stop-filtered tokens. `original` keeps the source casing, index-aligned
/// with `lowered`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tokens {
    pub lowered: Vec<String>,
    pub original: Vec<String>,
}

/// Raw word split: letters and digits only, apostrophes dropped.
fn words(text: &str) -> Vec<(String, bool)> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut sentence_start = true;
    let mut starts_sentence = true;
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            if current.is_empty() {
                starts_sentence = sentence_start;
            }
            current.push(ch);
        } else if ch == '\'' || ch == '\u{2019}' {
            continue;
        } else {
            if !current.is_empty() {
                out.push((std::mem::take(&mut current), starts_sentence));
                sentence_start = false;
            }
            if matches!(ch, '.' | '!' | '?') {
                sentence_start = true;
            }
        }
    }
    if !current.is_empty() {
        out.push((current, starts_sentence));
    }
    out
}

pub fn tokenize_and_filter(text: &str, stop_words: &BTreeSet<String>) -> Result<Tokens> {
    if text.trim().is_empty() {
        return Err(Error::EmptyText);
    }
    let mut tokens = Tokens {
        lowered: Vec::new(),
        original: Vec::new(),
    };
    for (word, _) in words(text) {
        let lowered = word.to_lowercase();
        if stop_words.contains(&lowered) {
            continue;
        }
        tokens.lowered.push(lowered);
        tokens.original.push(word);
    }
    Ok(tokens)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationMatch {
    pub name: String,
    pub position: Position,
}

/// Gazetteer hits in order of appearance. Two-word names win over one-word
/// names starting at the same token.
pub fn extract_locations(text: &str, gazetteer: &BTreeMap<String, Position>) -> Vec<LocationMatch> {
    let lowered: Vec<String> = words(text).into_iter().map(|(w, _)| w.to_lowercase()).collect();
    let mut hits = Vec::new();
    let mut i = 0;
    while i < lowered.len() {
        if i + 1 < lowered.len() {
            let bigram = format!("{} {}", lowered[i], lowered[i + 1]);
            if let Some(&position) = gazetteer.get(&bigram) {
                hits.push(LocationMatch {
                    name: bigram,
                    position,
                });
                i += 2;
                continue;
            }
        }
        if let Some(&position) = gazetteer.get(&lowered[i]) {
            hits.push(LocationMatch {
                name: lowered[i].clone(),
                position,
            });
        }
        i += 1;
    }
    hits
}

/// Capitalized words that do not open a sentence. These stand in for
/// proper-noun tags; callers use them to report unresolved place names.
pub fn proper_noun_candidates(text: &str) -> Vec<String> {
    words(text)
        .into_iter()
        .filter(|(w, starts)| !starts && w.chars().next().is_some_and(char::is_uppercase))
        .map(|(w, _)| w)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub application: ApplicationType,
    pub score: f64,
    /// Every application's score, in configuration order.
    pub scores: Vec<(ApplicationType, f64)>,
}

/// Fraction of distinct request tokens that land in each application's
/// keyword set after synonym expansion.
pub fn application_scores(tokens: &[String], config: &KeywordConfig) -> Vec<(ApplicationType, f64)> {
    let distinct: BTreeSet<&str> = tokens.iter().map(String::as_str).collect();
    config
        .applications
        .iter()
        .map(|app| {
            let score = if distinct.is_empty() {
                0.0
            } else {
                let hits = distinct.iter().filter(|t| app.matches(t)).count();
                hits as f64 / distinct.len() as f64
            };
            (app.name.clone(), score)
        })
        .collect()
}

pub fn classify_application(tokens: &[String], config: &KeywordConfig) -> Result<Classification> {
    let scores = application_scores(tokens, config);
    let mut best: Option<&(ApplicationType, f64)> = None;
    for entry in &scores {
        if best.is_none_or(|b| entry.1 > b.1) {
            best = Some(entry);
        }
    }
    let (application, score) = best.cloned().expect("config declares at least one application");
    if score < config.min_score || score == 0.0 {
        return Err(Error::UnknownApplication {
            best: score,
            scores: scores.into_iter().map(|(a, s)| (a.to_string(), s)).collect(),
        });
    }
    Ok(Classification {
        application,
        score,
        scores,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedRequest {
    pub application: ApplicationType,
    pub score: f64,
    pub target_position: Position,
    /// Gazetteer name the target came from; `None` when it fell back to the
    /// requester position.
    pub target_name: Option<String>,
    pub trust_level: TrustLevel,
    pub raw_tokens: Vec<String>,
}

pub fn parse_request(text: &str, metadata: &RequestMetadata, config: &KeywordConfig) -> Result<ParsedRequest> {
    let tokens = tokenize_and_filter(text, &config.stop_words)?;
    let locations = extract_locations(text, &config.gazetteer);
    let classification = classify_application(&tokens.lowered, config)?;
    let (target_position, target_name) = match locations.into_iter().next() {
        Some(hit) => (hit.position, Some(hit.name)),
        None => (metadata.requester_position, None),
    };
    Ok(ParsedRequest {
        application: classification.application,
        score: classification.score,
        target_position,
        target_name,
        trust_level: metadata.trust_level,
        raw_tokens: tokens.lowered,
    })
}
