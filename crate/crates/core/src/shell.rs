//! POSIX shell quoting helpers for generated scripts.

/// Quote `s` as a single shell word. Strings made only of safe characters
/// are returned as-is; everything else is wrapped in single quotes with
/// embedded single quotes spelled `'\''`.
pub fn quote(s: &str) -> String {
    let safe = !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '=' | '/' | ',' | '.' | '+' | ':' | '@' | '%'));
    if safe {
        s.to_string()
    } else {
        single_quote(s)
    }
}

/// Always wrap in single quotes, for embedding arbitrary text verbatim.
pub fn single_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        if c == '\'' {
            out.push_str("'\\''");
        } else {
            out.push(c);
        }
    }
    out.push('\'');
    out
}

/// Join words into a command line, quoting each as needed.
pub fn join<I, S>(words: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    words
        .into_iter()
        .map(|w| quote(w.as_ref()))
        .collect::<Vec<_>>()
        .join(" ")
}
