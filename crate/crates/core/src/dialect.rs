//! The annotated class dialect (`.pss` files): AST, parser, and canonical printer.
//!
//! One class per file. Method bodies are kept as verbatim, brace-balanced text;
//! everything else is parsed into the AST. Printing always produces the
//! canonical layout, so `print_unit(parse_unit(t))` is a fixpoint after one pass.

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SOURCE_EXTENSION: &str = "pss";

const INDENT: &str = "    ";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DialectError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("file {file_path} declares class {class_name}; file stem must equal the class name")]
    FileNameMismatch {
        file_path: String,
        class_name: String,
    },
}

impl DialectError {
    pub fn is_syntax(&self) -> bool {
        matches!(self, DialectError::Syntax { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TypeRef {
    Int,
    Double,
    Boolean,
    String,
    Void,
    Class(String),
}

impl TypeRef {
    pub const BUILTINS: [&'static str; 5] = ["int", "double", "boolean", "String", "void"];

    pub fn from_name(name: &str) -> TypeRef {
        match name {
            "int" => TypeRef::Int,
            "double" => TypeRef::Double,
            "boolean" => TypeRef::Boolean,
            "String" => TypeRef::String,
            "void" => TypeRef::Void,
            other => TypeRef::Class(other.to_string()),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            TypeRef::Int => "int",
            TypeRef::Double => "double",
            TypeRef::Boolean => "boolean",
            TypeRef::String => "String",
            TypeRef::Void => "void",
            TypeRef::Class(name) => name,
        }
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self, TypeRef::Class(_))
    }
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Literal {
    Str(String),
    Int(i64),
    Bool(bool),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Literal::Int(n) => write!(f, "{n}"),
            Literal::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub name: String,
    pub args: Vec<(String, Literal)>,
}

impl Annotation {
    pub fn new(name: impl Into<String>) -> Self {
        Annotation {
            name: name.into(),
            args: Vec::new(),
        }
    }

    pub fn arg(&self, key: &str) -> Option<&Literal> {
        self.args.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    /// Replaces the value for `key`, appending the argument if it is absent.
    pub fn set_arg(&mut self, key: &str, value: Literal) {
        match self.args.iter_mut().find(|(k, _)| k == key) {
            Some((_, v)) => *v = value,
            None => self.args.push((key.to_string(), value)),
        }
    }
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}", self.name)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, (k, v)) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{k}={v}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDecl {
    pub name: String,
    pub type_ref: TypeRef,
    pub annotations: Vec<Annotation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub type_ref: TypeRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodDecl {
    pub name: String,
    pub return_type: TypeRef,
    pub params: Vec<Param>,
    /// Body between the braces, one trimmed line per source line, blank lines dropped.
    pub body_text: String,
    pub annotations: Vec<Annotation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDecl {
    pub name: String,
    pub superclass: Option<String>,
    pub annotations: Vec<Annotation>,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
}

impl ClassDecl {
    pub fn new(name: impl Into<String>, superclass: Option<String>) -> Self {
        ClassDecl {
            name: name.into(),
            superclass,
            annotations: Vec::new(),
            fields: Vec::new(),
            methods: Vec::new(),
        }
    }

    pub fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn method(&self, name: &str) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn has_member(&self, name: &str) -> bool {
        self.field(name).is_some() || self.method(name).is_some()
    }

    pub fn annotation(&self, name: &str) -> Option<&Annotation> {
        self.annotations.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceUnit {
    pub file_path: String,
    pub class_decl: ClassDecl,
}

impl SourceUnit {
    /// A unit for a new class, stored at `<Name>.pss` in the repository root.
    pub fn for_new_class(name: &str, superclass: Option<String>) -> Self {
        SourceUnit {
            file_path: source_file_name(name),
            class_decl: ClassDecl::new(name, superclass),
        }
    }
}

pub fn source_file_name(class_name: &str) -> String {
    format!("{class_name}.{SOURCE_EXTENSION}")
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_reserved(word: &str) -> bool {
    matches!(word, "class" | "extends" | "true" | "false")
}

pub fn parse_unit(text: &str, file_path: &str) -> Result<SourceUnit, DialectError> {
    let mut parser = Parser::new(text);
    let class_decl = parser.class_decl()?;
    parser.skip_trivia()?;
    if !parser.at_end() {
        return Err(parser.error("expected end of input after class body"));
    }
    let stem = Path::new(file_path)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default();
    if stem != class_decl.name {
        return Err(DialectError::FileNameMismatch {
            file_path: file_path.to_string(),
            class_name: class_decl.name,
        });
    }
    Ok(SourceUnit {
        file_path: file_path.to_string(),
        class_decl,
    })
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn error_at(&self, offset: usize, message: impl Into<String>) -> DialectError {
        let before = &self.src[..offset];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        DialectError::Syntax {
            offset,
            line,
            column,
            message: message.into(),
        }
    }

    fn error(&self, message: impl Into<String>) -> DialectError {
        let message = message.into();
        if self.at_end() {
            self.error_at(self.pos, format!("{message}, found end of input"))
        } else {
            self.error_at(self.pos, message)
        }
    }

    fn skip_trivia(&mut self) -> Result<(), DialectError> {
        loop {
            let rest = self.rest();
            let trimmed = rest.trim_start();
            self.pos += rest.len() - trimmed.len();
            if self.rest().starts_with("//") {
                let end = self.rest().find('\n').unwrap_or(self.rest().len());
                self.pos += end;
            } else {
                return Ok(());
            }
        }
    }

    fn eat(&mut self, punct: char) -> Result<bool, DialectError> {
        self.skip_trivia()?;
        if self.peek() == Some(punct) {
            self.pos += punct.len_utf8();
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn expect(&mut self, punct: char) -> Result<(), DialectError> {
        if self.eat(punct)? {
            Ok(())
        } else {
            Err(self.error(format!("expected '{punct}'")))
        }
    }

    /// Reads a raw word (identifier or keyword) without consuming it when absent.
    fn peek_word(&mut self) -> Result<Option<&'a str>, DialectError> {
        self.skip_trivia()?;
        let rest = self.rest();
        let mut chars = rest.char_indices();
        match chars.next() {
            Some((_, c)) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return Ok(None),
        }
        let end = chars
            .find(|(_, c)| !(c.is_ascii_alphanumeric() || *c == '_'))
            .map_or(rest.len(), |(i, _)| i);
        Ok(Some(&rest[..end]))
    }

    fn keyword(&mut self, kw: &str) -> Result<bool, DialectError> {
        if self.peek_word()? == Some(kw) {
            self.pos += kw.len();
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, DialectError> {
        match self.peek_word()? {
            Some(word) if !is_reserved(word) => {
                self.pos += word.len();
                Ok(word.to_string())
            }
            Some(word) => Err(self.error(format!("expected {what}, found reserved word '{word}'"))),
            None => Err(self.error(format!("expected {what}"))),
        }
    }

    fn type_ref(&mut self) -> Result<TypeRef, DialectError> {
        Ok(TypeRef::from_name(&self.ident("type")?))
    }

    fn class_decl(&mut self) -> Result<ClassDecl, DialectError> {
        let annotations = self.annotations()?;
        if !self.keyword("class")? {
            return Err(self.error("expected 'class'"));
        }
        let name = self.ident("class name")?;
        let superclass = if self.keyword("extends")? {
            Some(self.ident("superclass name")?)
        } else {
            None
        };
        self.expect('{')?;
        let mut decl = ClassDecl {
            name,
            superclass,
            annotations,
            fields: Vec::new(),
            methods: Vec::new(),
        };
        loop {
            if self.eat('}')? {
                return Ok(decl);
            }
            if self.at_end() {
                return Err(self.error("expected '}' closing the class body"));
            }
            let member_start = self.pos;
            let annotations = self.annotations()?;
            let type_ref = self.type_ref()?;
            let name = self.ident("member name")?;
            if decl.has_member(&name) {
                return Err(self.error_at(member_start, format!("duplicate member '{name}'")));
            }
            if self.eat(';')? {
                decl.fields.push(FieldDecl {
                    name,
                    type_ref,
                    annotations,
                });
            } else if self.eat('(')? {
                let params = self.params()?;
                let body_text = self.balanced_block()?;
                decl.methods.push(MethodDecl {
                    name,
                    return_type: type_ref,
                    params,
                    body_text,
                    annotations,
                });
            } else {
                return Err(self.error("expected ';' or '(' after member name"));
            }
        }
    }

    fn params(&mut self) -> Result<Vec<Param>, DialectError> {
        let mut params: Vec<Param> = Vec::new();
        if self.eat(')')? {
            return Ok(params);
        }
        loop {
            let start = self.pos;
            let type_ref = self.type_ref()?;
            let name = self.ident("parameter name")?;
            if params.iter().any(|p| p.name == name) {
                return Err(self.error_at(start, format!("duplicate parameter '{name}'")));
            }
            params.push(Param { name, type_ref });
            if self.eat(')')? {
                return Ok(params);
            }
            self.expect(',')?;
        }
    }

    fn annotations(&mut self) -> Result<Vec<Annotation>, DialectError> {
        let mut out = Vec::new();
        while self.eat('@')? {
            let name = self.ident("annotation name")?;
            let mut annotation = Annotation::new(name);
            if self.eat('(')? && !self.eat(')')? {
                loop {
                    let start = self.pos;
                    let key = self.ident("annotation argument name")?;
                    if annotation.arg(&key).is_some() {
                        return Err(self.error_at(start, format!("duplicate annotation key '{key}'")));
                    }
                    self.expect('=')?;
                    let value = self.literal()?;
                    annotation.args.push((key, value));
                    if self.eat(')')? {
                        break;
                    }
                    self.expect(',')?;
                }
            }
            out.push(annotation);
        }
        Ok(out)
    }

    fn literal(&mut self) -> Result<Literal, DialectError> {
        self.skip_trivia()?;
        if self.keyword("true")? {
            return Ok(Literal::Bool(true));
        }
        if self.keyword("false")? {
            return Ok(Literal::Bool(false));
        }
        match self.peek() {
            Some('"') => self.string(),
            Some(c) if c.is_ascii_digit() || c == '-' => {
                let rest = self.rest();
                let sign = usize::from(c == '-');
                let digits = rest[sign..]
                    .find(|ch: char| !ch.is_ascii_digit())
                    .unwrap_or(rest.len() - sign);
                if digits == 0 {
                    return Err(self.error("expected digits"));
                }
                let text = &rest[..sign + digits];
                let value = text
                    .parse::<i64>()
                    .map_err(|_| self.error(format!("integer literal out of range: {text}")))?;
                self.pos += text.len();
                Ok(Literal::Int(value))
            }
            _ => Err(self.error("expected string, integer, or boolean literal")),
        }
    }

    fn string(&mut self) -> Result<Literal, DialectError> {
        let start = self.pos;
        self.pos += 1;
        let mut value = String::new();
        loop {
            let Some(c) = self.peek() else {
                return Err(self.error_at(start, "unterminated string literal"));
            };
            self.pos += c.len_utf8();
            match c {
                '"' => return Ok(Literal::Str(value)),
                '\\' => match self.peek() {
                    Some(e @ ('"' | '\\')) => {
                        self.pos += 1;
                        value.push(e);
                    }
                    _ => return Err(self.error_at(self.pos - 1, "invalid escape sequence")),
                },
                c => value.push(c),
            }
        }
    }

    /// Consumes `{ ... }` with nested braces, skipping string literals and
    /// line comments, and returns the normalized inner text.
    fn balanced_block(&mut self) -> Result<String, DialectError> {
        self.skip_trivia()?;
        let open = self.pos;
        if self.peek() != Some('{') {
            return Err(self.error("expected '{' starting the method body"));
        }
        self.pos += 1;
        let inner_start = self.pos;
        let mut depth = 1usize;
        loop {
            let Some(c) = self.peek() else {
                return Err(self.error_at(open, "unbalanced '{' in method body"));
            };
            match c {
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        let inner = &self.src[inner_start..self.pos];
                        self.pos += 1;
                        return Ok(normalize_body(inner));
                    }
                }
                '"' | '\'' => {
                    self.skip_quoted(c)?;
                    continue;
                }
                '/' if self.rest().starts_with("//") => {
                    let end = self.rest().find('\n').unwrap_or(self.rest().len());
                    self.pos += end;
                    continue;
                }
                _ => {}
            }
            self.pos += c.len_utf8();
        }
    }

    fn skip_quoted(&mut self, quote: char) -> Result<(), DialectError> {
        let start = self.pos;
        self.pos += 1;
        loop {
            match self.peek() {
                None | Some('\n') => return Err(self.error_at(start, "unterminated literal in method body")),
                Some('\\') => {
                    self.pos += 1;
                    if let Some(c) = self.peek() {
                        self.pos += c.len_utf8();
                    }
                }
                Some(c) => {
                    self.pos += c.len_utf8();
                    if c == quote {
                        return Ok(());
                    }
                }
            }
        }
    }
}

fn normalize_body(inner: &str) -> String {
    inner
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Net brace depth change of one body line, ignoring braces in literals and comments.
fn brace_delta(line: &str) -> (usize, isize) {
    let mut leading_closers = 0usize;
    let mut seen_other = false;
    let mut delta = 0isize;
    let mut chars = line.chars().peekable();
    let mut quote: Option<char> = None;
    while let Some(c) = chars.next() {
        if let Some(q) = quote {
            if c == '\\' {
                chars.next();
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '"' | '\'' => quote = Some(c),
            '/' if chars.peek() == Some(&'/') => break,
            '{' => delta += 1,
            '}' => {
                delta -= 1;
                if !seen_other {
                    leading_closers += 1;
                    continue;
                }
            }
            c if c.is_whitespace() => continue,
            _ => {}
        }
        seen_other = true;
    }
    (leading_closers, delta)
}

fn write_annotations(out: &mut String, annotations: &[Annotation], indent: &str) {
    for a in annotations {
        out.push_str(indent);
        out.push_str(&a.to_string());
        out.push('\n');
    }
}

fn write_body(out: &mut String, body: &str) {
    let mut depth: isize = 0;
    for line in body.lines() {
        let (closers, delta) = brace_delta(line);
        let level = (depth - closers as isize).max(0) as usize;
        out.push_str(INDENT);
        out.push_str(INDENT);
        for _ in 0..level {
            out.push_str(INDENT);
        }
        out.push_str(line);
        out.push('\n');
        depth = (depth + delta).max(0);
    }
}

/// Renders a unit in canonical form: 4-space indent, fields before methods,
/// one blank line between members, one annotation per line.
pub fn print_unit(unit: &SourceUnit) -> String {
    let decl = &unit.class_decl;
    let mut out = String::new();
    write_annotations(&mut out, &decl.annotations, "");
    out.push_str("class ");
    out.push_str(&decl.name);
    if let Some(sup) = &decl.superclass {
        out.push_str(" extends ");
        out.push_str(sup);
    }
    out.push_str(" {\n");
    let mut first = true;
    for field in &decl.fields {
        if !first {
            out.push('\n');
        }
        first = false;
        write_annotations(&mut out, &field.annotations, INDENT);
        out.push_str(&format!("{INDENT}{} {};\n", field.type_ref, field.name));
    }
    for method in &decl.methods {
        if !first {
            out.push('\n');
        }
        first = false;
        write_annotations(&mut out, &method.annotations, INDENT);
        let params = method
            .params
            .iter()
            .map(|p| format!("{} {}", p.type_ref, p.name))
            .collect::<Vec<_>>()
            .join(", ");
        out.push_str(&format!(
            "{INDENT}{} {}({params}) {{\n",
            method.return_type, method.name
        ));
        write_body(&mut out, &method.body_text);
        out.push_str(INDENT);
        out.push_str("}\n");
    }
    out.push_str("}\n");
    out
}

/// Outcome of parsing one repository file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassEntry {
    /// Declared class name, or the file stem when the file does not parse.
    pub class_name: String,
    pub file_path: String,
    pub outcome: Result<(), DialectError>,
}

impl ClassEntry {
    pub fn is_ok(&self) -> bool {
        self.outcome.is_ok()
    }
}

/// Repository-relative (`/`-separated) paths of every `.pss` file under `repo`,
/// sorted lexicographically. Hidden files and directories are skipped.
pub fn scan_sources(repo: &Path) -> io::Result<Vec<(String, PathBuf)>> {
    if !repo.is_dir() {
        return Err(io::Error::new(
            io::ErrorKind::NotFound,
            format!("{} is not a directory", repo.display()),
        ));
    }
    let mut out = Vec::new();
    let walker = walkdir::WalkDir::new(repo)
        .min_depth(1)
        .into_iter()
        .filter_entry(|e| !e.file_name().to_string_lossy().starts_with('.'));
    for entry in walker {
        let entry = entry.map_err(io::Error::from)?;
        let path = entry.path();
        if !entry.file_type().is_file()
            || path.extension().and_then(|e| e.to_str()) != Some(SOURCE_EXTENSION)
        {
            continue;
        }
        let rel = path
            .strip_prefix(repo)
            .expect("walkdir yields paths under its root")
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("/");
        out.push((rel, path.to_path_buf()));
    }
    out.sort();
    Ok(out)
}

pub fn list_classes(repo: &Path) -> io::Result<Vec<ClassEntry>> {
    scan_sources(repo)?
        .into_iter()
        .map(|(rel, abs)| {
            let text = std::fs::read_to_string(&abs)?;
            let stem = Path::new(&rel)
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            Ok(match parse_unit(&text, &rel) {
                Ok(unit) => ClassEntry {
                    class_name: unit.class_decl.name,
                    file_path: rel,
                    outcome: Ok(()),
                },
                Err(e) => ClassEntry {
                    class_name: stem,
                    file_path: rel,
                    outcome: Err(e),
                },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_class() {
        let unit = parse_unit("class Book { String title; }", "Book.pss").unwrap();
        assert_eq!(unit.class_decl.name, "Book");
        assert_eq!(unit.class_decl.fields.len(), 1);
        assert_eq!(unit.class_decl.methods.len(), 0);
        assert_eq!(unit.class_decl.fields[0].type_ref, TypeRef::String);
    }

    #[test]
    fn parses_superclass() {
        let unit = parse_unit("class RatedBook extends Book { int rating; }", "RatedBook.pss").unwrap();
        assert_eq!(unit.class_decl.superclass.as_deref(), Some("Book"));
        assert_eq!(unit.class_decl.fields[0].type_ref, TypeRef::Int);
    }

    #[test]
    fn unterminated_class_reports_end_of_input() {
        let text = "class X { int a";
        let err = parse_unit(text, "X.pss").unwrap_err();
        match err {
            DialectError::Syntax { offset, message, .. } => {
                assert_eq!(offset, text.len());
                assert!(message.contains("end of input"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_close_brace_is_error() {
        let err = parse_unit("class X { int a; ", "X.pss").unwrap_err();
        assert!(err.is_syntax());
    }

    #[test]
    fn prints_canonical_layout() {
        let unit = parse_unit("class Book{String title;}", "Book.pss").unwrap();
        assert_eq!(print_unit(&unit), "class Book {\n    String title;\n}\n");
    }

    #[test]
    fn panel_annotation_printed_above_class() {
        let text = "@Panel(label=\"Books\") class Book { @UiField String title; String subject; }";
        let unit = parse_unit(text, "Book.pss").unwrap();
        let golden = "@Panel(label=\"Books\")\nclass Book {\n    @UiField\n    String title;\n\n    String subject;\n}\n";
        assert_eq!(print_unit(&unit), golden);
    }

    #[test]
    fn method_bodies_are_reindented_and_kept() {
        let text = "class Loan {\n int days;\n boolean isLate(int today) {\n if (today > this.days) {\n return true;\n }\n // done\n return false; } }";
        let unit = parse_unit(text, "Loan.pss").unwrap();
        let m = &unit.class_decl.methods[0];
        assert_eq!(m.params.len(), 1);
        assert_eq!(
            m.body_text,
            "if (today > this.days) {\nreturn true;\n}\n// done\nreturn false;"
        );
        let printed = print_unit(&unit);
        assert!(printed.contains("        if (today > this.days) {\n            return true;\n        }\n"));
        assert_eq!(parse_unit(&printed, "Loan.pss").unwrap(), unit);
    }

    #[test]
    fn braces_in_strings_and_comments_do_not_count() {
        let text = "class S { String f() { return \"}\"; // }\n } }";
        let unit = parse_unit(text, "S.pss").unwrap();
        assert_eq!(unit.class_decl.methods[0].body_text, "return \"}\"; // }");
    }

    #[test]
    fn comments_outside_bodies_are_trivia() {
        let text = "// header\nclass A { // c\n int x; // trailing\n}\n// eof";
        assert!(parse_unit(text, "A.pss").is_ok());
    }

    #[test]
    fn duplicate_members_rejected() {
        assert!(parse_unit("class A { int x; String x; }", "A.pss").is_err());
        assert!(parse_unit("class A { int x; void x() {} }", "A.pss").is_err());
    }

    #[test]
    fn duplicate_annotation_keys_rejected() {
        assert!(parse_unit("@Panel(label=\"a\", label=\"b\") class A { }", "A.pss").is_err());
    }

    #[test]
    fn annotation_literals() {
        let text = "@Panel(label=\"say \\\"hi\\\" \\\\\", position=-3, visible=false) class A { }";
        let unit = parse_unit(text, "A.pss").unwrap();
        let a = &unit.class_decl.annotations[0];
        assert_eq!(a.arg("label"), Some(&Literal::Str("say \"hi\" \\".into())));
        assert_eq!(a.arg("position"), Some(&Literal::Int(-3)));
        assert_eq!(a.arg("visible"), Some(&Literal::Bool(false)));
        let reparsed = parse_unit(&print_unit(&unit), "A.pss").unwrap();
        assert_eq!(reparsed, unit);
    }

    #[test]
    fn file_name_must_match_class() {
        let err = parse_unit("class A { }", "B.pss").unwrap_err();
        assert!(matches!(err, DialectError::FileNameMismatch { .. }));
        assert!(parse_unit("class A { }", "nested/dir/A.pss").is_ok());
    }

    #[test]
    fn reserved_words_are_not_identifiers() {
        assert!(parse_unit("class class { }", "class.pss").is_err());
        assert!(parse_unit("class A { int true; }", "A.pss").is_err());
    }

    #[test]
    fn trailing_garbage_rejected() {
        assert!(parse_unit("class A { } class B { }", "A.pss").is_err());
        assert!(parse_unit("class A { } }", "A.pss").is_err());
    }

    #[test]
    fn error_reports_line_and_column() {
        let err = parse_unit("class A {\n  int x\n}", "A.pss").unwrap_err();
        match err {
            DialectError::Syntax { line, column, .. } => assert_eq!((line, column), (3, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_class_and_empty_method() {
        let unit = parse_unit("class A { void f() { } }", "A.pss").unwrap();
        assert_eq!(print_unit(&unit), "class A {\n    void f() {\n    }\n}\n");
        let empty = parse_unit("class E {}", "E.pss").unwrap();
        assert_eq!(print_unit(&empty), "class E {\n}\n");
    }

    #[test]
    fn list_classes_on_empty_dir() {
        let dir = tempfile::tempdir().unwrap();
        assert!(list_classes(dir.path()).unwrap().is_empty());
    }

    #[test]
    fn list_classes_on_missing_dir_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(list_classes(&dir.path().join("nope")).is_err());
    }

    #[test]
    fn list_classes_reports_corrupt_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("A.pss"), "class A { }").unwrap();
        std::fs::write(dir.path().join("B.pss"), "class B { int").unwrap();
        std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let entries = list_classes(dir.path()).unwrap();
        assert_eq!(entries.len(), 2);
        assert!(entries[0].is_ok());
        assert_eq!(entries[1].class_name, "B");
        assert!(!entries[1].is_ok());
    }
}
