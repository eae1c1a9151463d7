//! Fenced code block detection and mechanical removal.
//!
//! Detection is deliberately liberal about where a fence may start: leading
//! whitespace, blockquote markers and list markers are skipped, since a
//! renderer shows a code block in all of those positions. Inline code
//! (single backticks, or a backtick run closed on the same line) is not a
//! block. An opening fence without a closing fence runs to the end of the
//! text.

use serde::{Deserialize, Serialize};

pub const CODE_REMOVED_PLACEHOLDER: &str = "[code removed]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FenceStyle {
    Backtick,
    Tilde,
}

impl FenceStyle {
    fn char(self) -> char {
        match self {
            FenceStyle::Backtick => '`',
            FenceStyle::Tilde => '~',
        }
    }
}

/// Byte range `[start, end)` of one fenced block, from the start of the
/// opening fence line to the end of the closing fence line (line terminator
/// excluded).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeBlockSpan {
    pub start: usize,
    pub end: usize,
    pub style: FenceStyle,
    pub fence_len: usize,
    pub info: String,
    pub closed: bool,
}

struct Line<'a> {
    start: usize,
    /// Content without the line terminator.
    text: &'a str,
}

fn lines(s: &str) -> Vec<Line<'_>> {
    let mut out = Vec::new();
    let mut offset = 0;
    for raw in s.split_inclusive('\n') {
        let text = raw
            .strip_suffix('\n')
            .map(|t| t.strip_suffix('\r').unwrap_or(t))
            .unwrap_or(raw);
        out.push(Line {
            start: offset,
            text,
        });
        offset += raw.len();
    }
    out
}

/// Skip indentation, blockquote markers and list markers.
fn block_content(line: &str) -> &str {
    let mut rest = line;
    loop {
        let trimmed = rest.trim_start_matches([' ', '\t', '>']);
        let after_marker = strip_list_marker(trimmed);
        if after_marker.len() == rest.len() {
            return rest;
        }
        rest = after_marker;
    }
}

fn strip_list_marker(s: &str) -> &str {
    let bytes = s.as_bytes();
    if bytes.len() >= 2 && matches!(bytes[0], b'-' | b'*' | b'+') && bytes[1] == b' ' {
        return &s[2..];
    }
    let digits = bytes.iter().take_while(|b| b.is_ascii_digit()).count();
    if (1..=9).contains(&digits)
        && bytes.len() > digits + 1
        && matches!(bytes[digits], b'.' | b')')
        && bytes[digits + 1] == b' '
    {
        return &s[digits + 2..];
    }
    s
}

fn fence_run(content: &str) -> Option<(FenceStyle, usize)> {
    let style = match content.chars().next()? {
        '`' => FenceStyle::Backtick,
        '~' => FenceStyle::Tilde,
        _ => return None,
    };
    let len = content.chars().take_while(|&c| c == style.char()).count();
    (len >= 3).then_some((style, len))
}

fn opening_fence(line: &str) -> Option<(FenceStyle, usize, String)> {
    let content = block_content(line);
    let (style, len) = fence_run(content)?;
    let info = &content[len..];
    if style == FenceStyle::Backtick && info.contains('`') {
        return None;
    }
    Some((style, len, info.trim().to_owned()))
}

fn closes(line: &str, style: FenceStyle, open_len: usize) -> bool {
    let content = block_content(line);
    match fence_run(content) {
        Some((s, len)) => s == style && len >= open_len && content[len..].trim().is_empty(),
        None => false,
    }
}

/// All fenced code blocks in `markdown`, in order.
pub fn detect_code_blocks(markdown: &str) -> Vec<CodeBlockSpan> {
    let lines = lines(markdown);
    let mut spans = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let Some((style, fence_len, info)) = opening_fence(lines[i].text) else {
            i += 1;
            continue;
        };
        let close = (i + 1..lines.len()).find(|&j| closes(lines[j].text, style, fence_len));
        let (end, closed, next) = match close {
            Some(j) => (lines[j].start + lines[j].text.len(), true, j + 1),
            None => (markdown.len(), false, lines.len()),
        };
        spans.push(CodeBlockSpan {
            start: lines[i].start,
            end,
            style,
            fence_len,
            info,
            closed,
        });
        i = next;
    }
    spans
}

pub fn has_code_blocks(markdown: &str) -> bool {
    !detect_code_blocks(markdown).is_empty()
}

/// Replace every fenced block with [`CODE_REMOVED_PLACEHOLDER`].
pub fn strip_code_blocks(markdown: &str) -> String {
    let spans = detect_code_blocks(markdown);
    let mut out = String::with_capacity(markdown.len());
    let mut cursor = 0;
    for span in &spans {
        out.push_str(&markdown[cursor..span.start]);
        out.push_str(CODE_REMOVED_PLACEHOLDER);
        cursor = span.end;
    }
    out.push_str(&markdown[cursor..]);
    out
}
