use serde::{Deserialize, Serialize};

pub const SUFFICIENT_SENTINEL: &str = "OK.";

/// Shown when the sufficiency completion is blank, so a clarification is
/// never empty.
pub const BLANK_CLARIFICATION: &str =
    "Could you add more detail about your code, any error message, and what you are trying to do?";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SufficiencyOutcome {
    Sufficient,
    NeedsClarification { clarification_text: String },
}

impl SufficiencyOutcome {
    pub fn clarification(&self) -> Option<&str> {
        match self {
            SufficiencyOutcome::Sufficient => None,
            SufficiencyOutcome::NeedsClarification { clarification_text } => {
                Some(clarification_text)
            }
        }
    }
}

fn is_trailing_noise(c: char) -> bool {
    c.is_whitespace() || matches!(c, '"' | '\'' | '\u{201C}' | '\u{201D}' | '\u{2018}' | '\u{2019}')
}

/// Sufficient iff the completion ends with `OK.` once trailing whitespace
/// and quote marks are removed. Case-sensitive.
pub fn parse_sufficiency(completion: &str) -> SufficiencyOutcome {
    let trimmed = completion.trim_end_matches(is_trailing_noise);
    if trimmed.ends_with(SUFFICIENT_SENTINEL) {
        return SufficiencyOutcome::Sufficient;
    }
    let clarification_text = if completion.trim().is_empty() {
        BLANK_CLARIFICATION.to_owned()
    } else {
        completion.to_owned()
    };
    SufficiencyOutcome::NeedsClarification { clarification_text }
}
