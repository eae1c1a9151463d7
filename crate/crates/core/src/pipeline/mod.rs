//! The guardrail pipeline: help request in, code-free response out.
//!
//! Two completions run concurrently for every request: a sufficiency check
//! that may ask the student for more information, and the main response.
//! If the main response contains fenced code, it is sent to the rewrite
//! backend with instructions to remove the code; whatever still contains
//! code after that is stripped mechanically.

pub mod fence;
pub mod sufficiency;
pub mod templates;

use std::collections::HashMap;

use thiserror::Error;

use crate::backend::{BackendError, Backends, CompletionBackend, CompletionParams};
use crate::model::{AssistanceResponse, ClassContext, HelpRequest, Stage, TraceEntry};

pub use fence::{
    detect_code_blocks, has_code_blocks, strip_code_blocks, CodeBlockSpan, FenceStyle,
    CODE_REMOVED_PLACEHOLDER,
};
pub use sufficiency::{parse_sufficiency, SufficiencyOutcome};
pub use templates::TEMPLATE_VERSION;

const SUFFICIENCY_INPUT_DESCRIPTIONS: &str = "\
<language>: the programming language I am using.
<code>: a snippet of my code that is relevant to my issue (may be empty).
<error>: an error message I am seeing (may be empty).
<issue>: my issue or question.";

const MAIN_INPUT_DESCRIPTIONS: &str = "the programming language they are using in <language>, \
a relevant snippet of their code in <code>, an error message they are seeing in <error>, \
and their issue or question in <issue>. Any of these may be empty.";

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error("main completion failed: {0}")]
    MainCompletion(#[source] BackendError),
}

/// The four inputs wrapped in XML-style tags, one per line.
pub fn delimited_inputs(req: &HelpRequest) -> String {
    format!(
        "<language>{}</language>\n<code>{}</code>\n<error>{}</error>\n<issue>{}</issue>",
        req.language, req.code, req.error, req.issue
    )
}

pub fn build_sufficiency_prompt(req: &HelpRequest, _ctx: &ClassContext) -> String {
    let inputs = delimited_inputs(req);
    templates::sufficiency().render(&HashMap::from([
        ("input_descriptions", SUFFICIENCY_INPUT_DESCRIPTIONS),
        ("inputs", inputs.as_str()),
    ]))
}

/// One sentence per avoid-set topic, each followed by a blank line.
fn avoid_instructions(avoid_set: &[String]) -> String {
    let sentences: Vec<String> = avoid_set
        .iter()
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| format!("Do not discuss or use {t} in your response."))
        .collect();
    if sentences.is_empty() {
        String::new()
    } else {
        format!("{}\n\n", sentences.join("\n"))
    }
}

pub fn build_main_prompt(req: &HelpRequest, ctx: &ClassContext) -> String {
    let inputs = delimited_inputs(req);
    let avoid = avoid_instructions(&ctx.avoid_set);
    templates::main().render(&HashMap::from([
        ("input_descriptions", MAIN_INPUT_DESCRIPTIONS),
        ("inputs", inputs.as_str()),
        ("avoid_instructions", avoid.as_str()),
    ]))
}

pub fn build_removal_prompt(original: &str) -> String {
    templates::code_removal().render(&HashMap::from([("original", original)]))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoCodeOutcome {
    pub text: String,
    pub code_was_removed: bool,
    pub fallback_strip_applied: bool,
    /// The rewrite exchange, when one was attempted.
    pub trace: Option<TraceEntry>,
}

/// Guarantee `main` reaches the student without fenced code blocks.
///
/// Never fails: a rewrite failure falls back to stripping the original.
pub async fn enforce_no_code(
    main: &str,
    rewrite: &dyn CompletionBackend,
    params: &CompletionParams,
) -> NoCodeOutcome {
    if !has_code_blocks(main) {
        return NoCodeOutcome {
            text: main.to_owned(),
            code_was_removed: false,
            fallback_strip_applied: false,
            trace: None,
        };
    }
    let prompt = build_removal_prompt(main);
    let (text, completion, note) = match rewrite.complete(&prompt, params).await {
        Ok(rewritten) if rewritten.trim().is_empty() => (
            strip_code_blocks(main),
            rewritten,
            Some("rewrite was blank; stripped the original mechanically".to_owned()),
        ),
        Ok(rewritten) if has_code_blocks(&rewritten) => (
            strip_code_blocks(&rewritten),
            rewritten,
            Some("rewrite still contained code blocks; stripped mechanically".to_owned()),
        ),
        Ok(rewritten) => (rewritten.clone(), rewritten, None),
        Err(e) => (
            strip_code_blocks(main),
            String::new(),
            Some(format!(
                "rewrite failed ({e}); stripped the original mechanically"
            )),
        ),
    };
    NoCodeOutcome {
        text,
        code_was_removed: true,
        fallback_strip_applied: note.is_some(),
        trace: Some(TraceEntry {
            stage: Stage::CodeRemoval,
            prompt,
            completion,
            note,
        }),
    }
}

/// Produce the student-facing response for one request.
pub async fn respond(
    req: &HelpRequest,
    ctx: &ClassContext,
    backends: &Backends,
) -> Result<AssistanceResponse, PipelineError> {
    let sufficiency_prompt = build_sufficiency_prompt(req, ctx);
    let main_prompt = build_main_prompt(req, ctx);
    let params = &ctx.backend_params;

    let (sufficiency, main) = futures::join!(
        backends.chat.complete(&sufficiency_prompt, params),
        backends.chat.complete(&main_prompt, params),
    );
    let main = main.map_err(PipelineError::MainCompletion)?;

    let mut trace = Vec::with_capacity(3);
    let clarification_text = match sufficiency {
        Ok(completion) => {
            let outcome = parse_sufficiency(&completion);
            trace.push(TraceEntry {
                stage: Stage::Sufficiency,
                prompt: sufficiency_prompt,
                completion,
                note: None,
            });
            outcome.clarification().map(str::to_owned)
        }
        Err(e) => {
            trace.push(TraceEntry {
                stage: Stage::Sufficiency,
                prompt: sufficiency_prompt,
                completion: String::new(),
                note: Some(format!("sufficiency check failed ({e}); no clarification shown")),
            });
            None
        }
    };
    trace.push(TraceEntry {
        stage: Stage::Main,
        prompt: main_prompt,
        completion: main.clone(),
        note: None,
    });

    let cleaned = enforce_no_code(&main, backends.rewrite.as_ref(), &backends.rewrite_params).await;
    trace.extend(cleaned.trace);

    Ok(AssistanceResponse {
        request_id: req.id.clone(),
        main_text: cleaned.text,
        clarification_text,
        code_was_removed: cleaned.code_was_removed,
        fallback_strip_applied: cleaned.fallback_strip_applied,
        trace,
        template_version: TEMPLATE_VERSION.to_owned(),
    })
}
