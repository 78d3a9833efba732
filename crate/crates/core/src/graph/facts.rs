use super::{canonical_lines, Fact, GraphError, KnowledgeBase, Value};

pub const FACT_HEADER: &str = "% parthenos knowledge base v1";

/// Renders the KB as a Prolog-compatible fact file.
pub fn serialize_kb(kb: &KnowledgeBase) -> String {
    let mut out = String::from(FACT_HEADER);
    out.push('\n');
    for line in canonical_lines(kb) {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Parses a fact file. Blank lines and `%` comment lines are skipped.
pub fn parse_kb(text: &str) -> Result<KnowledgeBase, GraphError> {
    let mut facts = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fact = parse_fact(line).map_err(|message| GraphError::FactSyntax {
            line: idx + 1,
            message,
        })?;
        facts.push(fact);
    }
    KnowledgeBase::from_facts(facts)
}

#[derive(Debug, Clone, PartialEq)]
enum Term {
    Quoted(String),
    Bare(String),
    Int(i64),
}

fn parse_fact(line: &str) -> Result<Fact, String> {
    let open = line.find('(').ok_or("expected '('")?;
    let functor = &line[..open];
    let body = line[open + 1..]
        .strip_suffix(").")
        .ok_or("expected fact to end with ')'")?;
    let args = split_args(body)?;
    let quoted = |t: &Term| match t {
        Term::Quoted(s) => Ok(s.clone()),
        other => Err(format!("expected quoted atom, found {other:?}")),
    };
    let label = |t: &Term| match t {
        Term::Bare(s) | Term::Quoted(s) => Ok(s.clone()),
        other => Err(format!("expected atom, found {other:?}")),
    };
    match (functor, args.as_slice()) {
        ("vertex", [id, l]) => Ok(Fact::vertex(quoted(id)?, label(l)?)),
        ("edge", [id, from, to, l]) => Ok(Fact::edge(quoted(id)?, quoted(from)?, quoted(to)?, label(l)?)),
        ("property", [owner, key, value]) => {
            let value = match value {
                Term::Quoted(s) => Value::Atom(s.clone()),
                Term::Int(n) => Value::Int(*n),
                Term::Bare(b) if b == "true" => Value::Bool(true),
                Term::Bare(b) if b == "false" => Value::Bool(false),
                Term::Bare(b) => return Err(format!("unexpected bare atom value '{b}'")),
            };
            Ok(Fact::property(quoted(owner)?, label(key)?, value))
        }
        (f, args) => Err(format!("unknown fact {f}/{}", args.len())),
    }
}

fn split_args(body: &str) -> Result<Vec<Term>, String> {
    let mut terms = Vec::new();
    let mut chars = body.chars().peekable();
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        let term = match chars.peek().copied() {
            Some('\'') => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None => return Err("unterminated quoted atom".into()),
                        Some('\'') => break,
                        Some('\\') => match chars.next() {
                            Some('\'') => s.push('\''),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            other => return Err(format!("bad escape {other:?}")),
                        },
                        Some(c) => s.push(c),
                    }
                }
                Term::Quoted(s)
            }
            Some(c) if c == '-' || c.is_ascii_digit() => {
                let mut s = String::new();
                s.push(c);
                chars.next();
                while let Some(d) = chars.peek().copied().filter(char::is_ascii_digit) {
                    s.push(d);
                    chars.next();
                }
                Term::Int(s.parse().map_err(|_| format!("bad integer '{s}'"))?)
            }
            Some(c) if c.is_ascii_lowercase() => {
                let mut s = String::new();
                while let Some(d) = chars.peek().copied().filter(|d| d.is_ascii_alphanumeric() || *d == '_') {
                    s.push(d);
                    chars.next();
                }
                Term::Bare(s)
            }
            other => return Err(format!("unexpected {other:?}")),
        };
        terms.push(term);
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        match chars.next() {
            None => return Ok(terms),
            Some(',') => continue,
            Some(c) => return Err(format!("expected ',' found '{c}'")),
        }
    }
}
