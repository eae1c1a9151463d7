//! Versioned prompt templates with `{{slot}}` placeholders.
//!
//! Templates are parsed once into literal and slot segments, so text
//! substituted into one slot is never re-scanned for placeholders.

use std::collections::HashMap;
use std::sync::OnceLock;

pub const TEMPLATE_VERSION: &str = "v1";

const SUFFICIENCY_SRC: &str = include_str!("../../templates/sufficiency.txt");
const MAIN_SRC: &str = include_str!("../../templates/main.txt");
const CODE_REMOVAL_SRC: &str = include_str!("../../templates/code_removal.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Text(&'static str),
    Slot(&'static str),
}

#[derive(Debug, Clone)]
pub struct Template {
    name: &'static str,
    segments: Vec<Segment>,
}

impl Template {
    pub fn parse(name: &'static str, src: &'static str) -> Self {
        let mut segments = Vec::new();
        let mut rest = src;
        while let Some(open) = rest.find("{{") {
            let Some(close) = rest[open..].find("}}") else {
                break;
            };
            if open > 0 {
                segments.push(Segment::Text(&rest[..open]));
            }
            segments.push(Segment::Slot(&rest[open + 2..open + close]));
            rest = &rest[open + close + 2..];
        }
        if !rest.is_empty() {
            segments.push(Segment::Text(rest));
        }
        Self { name, segments }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn slots(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.segments.iter().filter_map(|s| match s {
            Segment::Slot(n) => Some(*n),
            Segment::Text(_) => None,
        })
    }

    /// Fill every slot. Panics on a missing slot value: the templates are
    /// compiled in, so that is a programming error.
    pub fn render(&self, values: &HashMap<&str, &str>) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            match seg {
                Segment::Text(t) => out.push_str(t),
                Segment::Slot(n) => out.push_str(
                    values
                        .get(n)
                        .unwrap_or_else(|| panic!("template {} missing slot {n}", self.name)),
                ),
            }
        }
        out
    }
}

pub fn sufficiency() -> &'static Template {
    static T: OnceLock<Template> = OnceLock::new();
    T.get_or_init(|| Template::parse("sufficiency", SUFFICIENCY_SRC))
}

pub fn main() -> &'static Template {
    static T: OnceLock<Template> = OnceLock::new();
    T.get_or_init(|| Template::parse("main", MAIN_SRC))
}

pub fn code_removal() -> &'static Template {
    static T: OnceLock<Template> = OnceLock::new();
    T.get_or_init(|| Template::parse("code_removal", CODE_REMOVAL_SRC))
}
