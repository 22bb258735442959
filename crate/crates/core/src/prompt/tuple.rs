//! The `('formal', 'informal')` tuple format teachers are asked to answer in.
//!
//! Elements may be single- or double-quoted. Inside an element `\\`, `\'`,
//! `\"`, `\n`, `\r` and `\t` are escapes; any other backslash sequence is kept
//! verbatim so LaTeX such as `\frac` survives.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("no well-formed ('formal', 'informal') tuple in teacher response")]
pub struct TeacherFormatError;

/// Escape `text` for use inside a `quote`-delimited element.
pub fn escape_element(text: &str, quote: char) -> String {
    let mut out = String::with_capacity(text.len() + 8);
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out
}

/// Inverse of [`escape_element`] for either quote style.
pub fn unescape_element(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('\'') => out.push('\''),
            Some('"') => out.push('"'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('t') => out.push('\t'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

/// Render a pair in the single-quoted response format.
pub fn render_tuple(formal: &str, informal: &str) -> String {
    format!(
        "('{}', '{}')",
        escape_element(formal, '\''),
        escape_element(informal, '\'')
    )
}

/// Extract the first well-formed two-element tuple from a teacher completion.
/// Leading prose, code fences and trailing text are ignored.
pub fn parse_teacher_response(raw: &str) -> Result<(String, String), TeacherFormatError> {
    for (i, c) in raw.char_indices() {
        if c == '(' {
            if let Some(pair) = parse_tuple_at(&raw[i + 1..]) {
                return Ok(pair);
            }
        }
    }
    Err(TeacherFormatError)
}

fn parse_tuple_at(s: &str) -> Option<(String, String)> {
    let s = s.trim_start();
    let (first, s) = parse_element(s)?;
    let s = s.trim_start().strip_prefix(',')?.trim_start();
    let (second, s) = parse_element(s)?;
    let mut s = s.trim_start();
    if let Some(rest) = s.strip_prefix(',') {
        s = rest.trim_start();
    }
    s.strip_prefix(')')?;
    Some((first, second))
}

/// A quoted element at the start of `s`, plus the remainder after it.
fn parse_element(s: &str) -> Option<(String, &str)> {
    let quote = s.chars().next().filter(|q| *q == '\'' || *q == '"')?;
    let body = &s[1..];
    let mut escaped = false;
    for (i, c) in body.char_indices() {
        if escaped {
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == quote {
            return Some((unescape_element(&body[..i]), &body[i + 1..]));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_format() {
        assert_eq!(
            parse_teacher_response("('theorem foo ...', 'If r is rational...')").unwrap(),
            ("theorem foo ...".to_string(), "If r is rational...".to_string())
        );
    }

    #[test]
    fn tolerates_prose_and_fences() {
        assert_eq!(
            parse_teacher_response("Sure! ('a', 'b')").unwrap(),
            ("a".into(), "b".into())
        );
        let fenced = "Here you go:\n```python\n(\"x := 1\", 'It\\'s one.')\n```\nThanks";
        assert_eq!(
            parse_teacher_response(fenced).unwrap(),
            ("x := 1".into(), "It's one.".into())
        );
    }

    #[test]
    fn arity_and_missing_tuple() {
        assert_eq!(parse_teacher_response("('a', 'b', 'c')"), Err(TeacherFormatError));
        assert_eq!(parse_teacher_response("('a','b','c')"), Err(TeacherFormatError));
        assert_eq!(parse_teacher_response("no tuple here"), Err(TeacherFormatError));
        assert_eq!(parse_teacher_response("('unterminated, 'b')"), Err(TeacherFormatError));
        assert_eq!(parse_teacher_response(""), Err(TeacherFormatError));
    }

    #[test]
    fn skips_parenthesised_prose_before_tuple() {
        assert_eq!(
            parse_teacher_response("(as requested) ('f', 'i') ('g', 'j')").unwrap(),
            ("f".into(), "i".into())
        );
    }

    #[test]
    fn latex_backslashes_survive() {
        let (_, i) = parse_teacher_response(r"('f', '$\frac{1}{2} \le x$')").unwrap();
        assert_eq!(i, r"$\frac{1}{2} \le x$");
    }

    #[test]
    fn render_round_trip() {
        let f = "theorem t : 'a' = \"b\" \\ x\nnext";
        let i = "It's\ta test\\n";
        assert_eq!(
            parse_teacher_response(&render_tuple(f, i)).unwrap(),
            (f.to_string(), i.to_string())
        );
    }
}
