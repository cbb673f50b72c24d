//! The `VERDICT: <TOKEN> [argument]` line protocol agents use to report decisions.

use alloc::string::{String, ToString};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerdictParseError {
    #[error("no `VERDICT:` line found")]
    NotFound,
    #[error("unexpected verdict token `{0}`")]
    UnknownToken(String),
}

/// The last verdict line of a text, split into its token and the rest of the line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerdictLine<'a> {
    pub token: &'a str,
    pub argument: Option<&'a str>,
}

fn strip_verdict_prefix(line: &str) -> Option<&str> {
    let line = line.trim().trim_start_matches(['*', '`', '>', '#', ' ']);
    let rest = line.strip_prefix("VERDICT:")?;
    Some(rest.trim().trim_end_matches(['*', '`']).trim())
}

/// Finds the last line of the form `VERDICT: TOKEN [argument]`.
pub fn parse_verdict_line(text: &str) -> Option<VerdictLine<'_>> {
    text.lines().rev().find_map(|line| {
        let rest = strip_verdict_prefix(line)?;
        let mut parts = rest.splitn(2, char::is_whitespace);
        let token = parts.next().filter(|t| !t.is_empty())?;
        let argument = parts.next().map(str::trim).filter(|a| !a.is_empty());
        Some(VerdictLine { token, argument })
    })
}

/// Returns the token on the last verdict line; later lines override earlier ones.
pub fn parse_structured_verdict(text: &str, expected: &[&str]) -> Result<String, VerdictParseError> {
    let line = parse_verdict_line(text).ok_or(VerdictParseError::NotFound)?;
    if expected.contains(&line.token) {
        Ok(line.token.to_string())
    } else {
        Err(VerdictParseError::UnknownToken(line.token.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn last_line_wins() {
        let both = ["DONE", "CONTINUE"];
        assert_eq!(parse_structured_verdict("analysis...\nVERDICT: DONE\n", &both).unwrap(), "DONE");
        assert_eq!(
            parse_structured_verdict("VERDICT: DONE\nmore thought\nVERDICT: CONTINUE", &both).unwrap(),
            "CONTINUE"
        );
    }

    #[test]
    fn regulator_tokens() {
        let tokens = crate::RegulatorDecision::TOKENS;
        assert_eq!(parse_structured_verdict("Plan gap in step 3.\nVERDICT: REVISE_PLAN\n", &tokens).unwrap(), "REVISE_PLAN");
    }

    #[test]
    fn errors() {
        assert_eq!(parse_structured_verdict("nothing here", &["DONE"]), Err(VerdictParseError::NotFound));
        assert_eq!(
            parse_structured_verdict("VERDICT: MAYBE", &["DONE"]),
            Err(VerdictParseError::UnknownToken("MAYBE".into()))
        );
        assert_eq!(parse_structured_verdict("VERDICT:", &["DONE"]), Err(VerdictParseError::NotFound));
    }

    #[test]
    fn selection_argument_and_markup() {
        let line = parse_verdict_line("**VERDICT: SELECT p2**").unwrap();
        assert_eq!(line, VerdictLine { token: "SELECT", argument: Some("p2") });
        assert_eq!(parse_verdict_line("  VERDICT:   PASS  ").unwrap().argument, None);
    }
}
