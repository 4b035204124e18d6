//! Extraction of `# Verb ; item &` commands from model replies.

use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

use crate::scene::{Scene, SemanticAction, Verb};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("no '# verb ; item &' command in response")]
    ParseFailure,
    #[error("unknown verb '{0}'")]
    MalformedVerb(String),
    #[error("unknown item '{0}'")]
    UnknownItem(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedResponse {
    pub action: SemanticAction,
    pub reasoning: String,
}

fn command_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"#\s*([^;&#\r\n]+?)\s*;\s*([^;&#\r\n]+?)\s*&").expect("valid regex"))
}

/// Parses the first command in `raw`; the rest of the text is kept as
/// reasoning. Items are matched to scene labels case-insensitively.
pub fn parse_response(raw: &str, scene: &Scene) -> Result<ParsedResponse, ParseError> {
    let caps = command_pattern().captures(raw).ok_or(ParseError::ParseFailure)?;
    let whole = caps.get(0).expect("group 0");
    let verb_text = caps[1].trim();
    let item_text = caps[2].trim();

    let verb = Verb::parse(verb_text).ok_or_else(|| ParseError::MalformedVerb(verb_text.to_string()))?;
    let object = scene.find_by_label(item_text).ok_or_else(|| ParseError::UnknownItem(item_text.to_string()))?;

    let reasoning = format!("{}{}", &raw[..whole.start()], &raw[whole.end()..]).trim().to_string();
    Ok(ParsedResponse { action: SemanticAction::new(verb, object.id.clone()), reasoning })
}
