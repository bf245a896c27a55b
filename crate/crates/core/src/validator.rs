//! GraphQL document parser used as a syntax oracle.
//!
//! This is deliberately a separate code path from the printer: a lexer and a
//! recursive-descent parser over the executable-document grammar
//! (operations, fragments, selection sets, arguments, literals, variables,
//! directives). The mock server also uses the resulting AST to execute
//! queries.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxDiagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for SyntaxDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for SyntaxDiagnostic {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperationType {
    Query,
    Mutation,
    Subscription,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Variable(String),
    /// Integer literals keep their source text; range checks belong to
    /// execution.
    Int(String),
    Float(String),
    String(String),
    Boolean(bool),
    Null,
    Enum(String),
    List(Vec<Value>),
    Object(Vec<(String, Value)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Directive {
    pub name: String,
    pub arguments: Vec<(String, Value)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub alias: Option<String>,
    pub name: String,
    pub arguments: Vec<(String, Value)>,
    pub directives: Vec<Directive>,
    pub selection_set: Vec<Selection>,
}

impl Field {
    /// Name under which the field appears in the response.
    pub fn response_key(&self) -> &str {
        self.alias.as_deref().unwrap_or(&self.name)
    }

    pub fn argument(&self, name: &str) -> Option<&Value> {
        self.arguments.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Selection {
    Field(Field),
    InlineFragment {
        type_condition: Option<String>,
        directives: Vec<Directive>,
        selection_set: Vec<Selection>,
    },
    FragmentSpread {
        name: String,
        directives: Vec<Directive>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableDefinition {
    pub name: String,
    /// Type as written, e.g. `[Int!]!`.
    pub type_text: String,
    pub default: Option<Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Operation {
    pub kind: OperationType,
    pub name: Option<String>,
    pub variables: Vec<VariableDefinition>,
    pub directives: Vec<Directive>,
    pub selection_set: Vec<Selection>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FragmentDefinition {
    pub name: String,
    pub type_condition: String,
    pub directives: Vec<Directive>,
    pub selection_set: Vec<Selection>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    pub operations: Vec<Operation>,
    pub fragments: Vec<FragmentDefinition>,
}

impl Document {
    pub fn fragment(&self, name: &str) -> Option<&FragmentDefinition> {
        self.fragments.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Punct(&'static str),
    Name(String),
    Int(String),
    Float(String),
    Str(String),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::Name(n) => write!(f, "name `{n}`"),
            Tok::Int(n) | Tok::Float(n) => write!(f, "number `{n}`"),
            Tok::Str(_) => f.write_str("string"),
            Tok::Eof => f.write_str("end of document"),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
    line: usize,
    line_start: usize,
}

fn is_name_start(b: u8) -> bool {
    b == b'_' || b.is_ascii_alphabetic()
}

fn is_name_continue(b: u8) -> bool {
    b == b'_' || b.is_ascii_alphanumeric()
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            src: text.as_bytes(),
            text,
            pos: 0,
            line: 1,
            line_start: 0,
        }
    }

    fn err(&self, at: usize, message: impl Into<String>) -> SyntaxDiagnostic {
        SyntaxDiagnostic {
            line: self.line,
            column: self.text[self.line_start..at.max(self.line_start)].chars().count() + 1,
            message: message.into(),
        }
    }

    fn peek_byte(&self, off: usize) -> Option<u8> {
        self.src.get(self.pos + off).copied()
    }

    fn newline(&mut self) {
        self.line += 1;
        self.line_start = self.pos;
    }

    fn skip_ignored(&mut self) {
        while let Some(b) = self.peek_byte(0) {
            match b {
                b' ' | b'\t' | b',' => self.pos += 1,
                b'\n' => {
                    self.pos += 1;
                    self.newline();
                }
                b'\r' => {
                    self.pos += 1;
                    if self.peek_byte(0) == Some(b'\n') {
                        self.pos += 1;
                    }
                    self.newline();
                }
                b'#' => {
                    while !matches!(self.peek_byte(0), None | Some(b'\n' | b'\r')) {
                        self.pos += 1;
                    }
                }
                0xEF if self.src[self.pos..].starts_with("\u{feff}".as_bytes()) => self.pos += 3,
                _ => return,
            }
        }
    }

    /// Returns the token and its start offset.
    fn next(&mut self) -> Result<(Tok, usize), SyntaxDiagnostic> {
        self.skip_ignored();
        let start = self.pos;
        let Some(b) = self.peek_byte(0) else {
            return Ok((Tok::Eof, start));
        };
        let punct = match b {
            b'!' => Some("!"),
            b'$' => Some("$"),
            b'&' => Some("&"),
            b'(' => Some("("),
            b')' => Some(")"),
            b':' => Some(":"),
            b'=' => Some("="),
            b'@' => Some("@"),
            b'[' => Some("["),
            b']' => Some("]"),
            b'{' => Some("{"),
            b'|' => Some("|"),
            b'}' => Some("}"),
            _ => None,
        };
        if let Some(p) = punct {
            self.pos += 1;
            return Ok((Tok::Punct(p), start));
        }
        if b == b'.' {
            if self.src[self.pos..].starts_with(b"...") {
                self.pos += 3;
                return Ok((Tok::Punct("..."), start));
            }
            return Err(self.err(start, "expected `...`"));
        }
        if is_name_start(b) {
            while self.peek_byte(0).is_some_and(is_name_continue) {
                self.pos += 1;
            }
            return Ok((Tok::Name(self.text[start..self.pos].to_string()), start));
        }
        if b == b'-' || b.is_ascii_digit() {
            return self.number(start);
        }
        if b == b'"' {
            if self.src[self.pos..].starts_with(b"\"\"\"") {
                return self.block_string(start);
            }
            return self.string(start);
        }
        let c = self.text[start..].chars().next().unwrap_or('?');
        Err(self.err(start, format!("unexpected character {c:?}")))
    }

    fn digits(&mut self) -> usize {
        let from = self.pos;
        while self.peek_byte(0).is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        self.pos - from
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize), SyntaxDiagnostic> {
        if self.peek_byte(0) == Some(b'-') {
            self.pos += 1;
        }
        let int_start = self.pos;
        let n = self.digits();
        if n == 0 {
            return Err(self.err(start, "expected digit"));
        }
        if n > 1 && self.src[int_start] == b'0' {
            return Err(self.err(start, "leading zero in number"));
        }
        let mut float = false;
        if self.peek_byte(0) == Some(b'.') {
            self.pos += 1;
            if self.digits() == 0 {
                return Err(self.err(start, "expected digit after `.`"));
            }
            float = true;
        }
        if matches!(self.peek_byte(0), Some(b'e' | b'E')) {
            self.pos += 1;
            if matches!(self.peek_byte(0), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.digits() == 0 {
                return Err(self.err(start, "expected exponent digits"));
            }
            float = true;
        }
        if self
            .peek_byte(0)
            .is_some_and(|b| b == b'.' || is_name_start(b))
        {
            return Err(self.err(self.pos, "invalid character after number"));
        }
        let text = self.text[start..self.pos].to_string();
        Ok((if float { Tok::Float(text) } else { Tok::Int(text) }, start))
    }

    fn string(&mut self, start: usize) -> Result<(Tok, usize), SyntaxDiagnostic> {
        self.pos += 1;
        let mut out = String::new();
        loop {
            let Some(c) = self.text[self.pos..].chars().next() else {
                return Err(self.err(start, "unterminated string"));
            };
            match c {
                '"' => {
                    self.pos += 1;
                    return Ok((Tok::Str(out), start));
                }
                '\n' | '\r' => return Err(self.err(self.pos, "unterminated string")),
                '\\' => {
                    self.pos += 1;
                    let Some(e) = self.peek_byte(0) else {
                        return Err(self.err(start, "unterminated string"));
                    };
                    self.pos += 1;
                    out.push(match e {
                        b'"' => '"',
                        b'\\' => '\\',
                        b'/' => '/',
                        b'b' => '\u{8}',
                        b'f' => '\u{c}',
                        b'n' => '\n',
                        b'r' => '\r',
                        b't' => '\t',
                        b'u' => self.unicode_escape()?,
                        _ => return Err(self.err(self.pos - 2, "invalid escape sequence")),
                    });
                }
                c if (c as u32) < 0x20 && c != '\t' => {
                    return Err(self.err(self.pos, "control character in string"))
                }
                c => {
                    out.push(c);
                    self.pos += c.len_utf8();
                }
            }
        }
    }

    fn hex4(&mut self) -> Result<u32, SyntaxDiagnostic> {
        let at = self.pos;
        let hex = self
            .text
            .get(self.pos..self.pos + 4)
            .filter(|h| h.bytes().all(|b| b.is_ascii_hexdigit()))
            .ok_or_else(|| self.err(at, "invalid unicode escape"))?;
        self.pos += 4;
        Ok(u32::from_str_radix(hex, 16).expect("checked hex digits"))
    }

    fn unicode_escape(&mut self) -> Result<char, SyntaxDiagnostic> {
        let at = self.pos;
        let hi = self.hex4()?;
        if (0xD800..0xDC00).contains(&hi) && self.src[self.pos..].starts_with(b"\\u") {
            self.pos += 2;
            let lo = self.hex4()?;
            let code = 0x10000 + ((hi - 0xD800) << 10) + (lo.wrapping_sub(0xDC00) & 0x3FF);
            return char::from_u32(code).ok_or_else(|| self.err(at, "invalid surrogate pair"));
        }
        char::from_u32(hi).ok_or_else(|| self.err(at, "invalid unicode escape"))
    }

    fn block_string(&mut self, start: usize) -> Result<(Tok, usize), SyntaxDiagnostic> {
        self.pos += 3;
        let mut raw = String::new();
        loop {
            if self.src[self.pos..].starts_with(b"\"\"\"") {
                self.pos += 3;
                return Ok((Tok::Str(block_string_value(&raw)), start));
            }
            if self.src[self.pos..].starts_with(b"\\\"\"\"") {
                self.pos += 4;
                raw.push_str("\"\"\"");
                continue;
            }
            let Some(c) = self.text[self.pos..].chars().next() else {
                return Err(self.err(start, "unterminated block string"));
            };
            self.pos += c.len_utf8();
            raw.push(c);
            if c == '\n' {
                self.newline();
            }
        }
    }
}

/// Common-indent removal and blank-line trimming of block strings.
fn block_string_value(raw: &str) -> String {
    let lines: Vec<&str> = raw.split(['\n']).map(|l| l.trim_end_matches('\r')).collect();
    let indent = lines
        .iter()
        .skip(1)
        .filter_map(|l| {
            let n = l.len() - l.trim_start_matches([' ', '\t']).len();
            (n < l.len()).then_some(n)
        })
        .min();
    let mut out: Vec<String> = lines
        .iter()
        .enumerate()
        .map(|(i, l)| match indent {
            Some(n) if i > 0 => l.get(n..).unwrap_or("").to_string(),
            _ => l.to_string(),
        })
        .collect();
    let blank = |l: &String| l.trim_matches([' ', '\t']).is_empty();
    while out.first().is_some_and(blank) {
        out.remove(0);
    }
    while out.last().is_some_and(blank) {
        out.pop();
    }
    out.join("\n")
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
    /// Position of the current token for diagnostics.
    line: usize,
    column: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Result<Self, SyntaxDiagnostic> {
        let mut p = Parser {
            lexer: Lexer::new(text),
            tok: Tok::Eof,
            at: 0,
            line: 1,
            column: 1,
        };
        p.bump()?;
        Ok(p)
    }

    fn bump(&mut self) -> Result<Tok, SyntaxDiagnostic> {
        let (tok, at) = self.lexer.next()?;
        let d = self.lexer.err(at, "");
        self.line = d.line;
        self.column = d.column;
        self.at = at;
        Ok(std::mem::replace(&mut self.tok, tok))
    }

    fn error(&self, message: impl Into<String>) -> SyntaxDiagnostic {
        SyntaxDiagnostic {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }

    fn unexpected(&self, wanted: &str) -> SyntaxDiagnostic {
        self.error(format!("expected {wanted}, found {}", self.tok))
    }

    fn is(&self, p: &str) -> bool {
        matches!(&self.tok, Tok::Punct(q) if *q == p)
    }

    fn eat(&mut self, p: &str) -> Result<bool, SyntaxDiagnostic> {
        if self.is(p) {
            self.bump()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn expect(&mut self, p: &str) -> Result<(), SyntaxDiagnostic> {
        if self.eat(p)? {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    fn name(&mut self) -> Result<String, SyntaxDiagnostic> {
        match &self.tok {
            Tok::Name(_) => match self.bump()? {
                Tok::Name(n) => Ok(n),
                _ => unreachable!(),
            },
            _ => Err(self.unexpected("a name")),
        }
    }

    fn document(&mut self) -> Result<Document, SyntaxDiagnostic> {
        let mut doc = Document::default();
        if self.tok == Tok::Eof {
            return Err(self.error("empty document"));
        }
        while self.tok != Tok::Eof {
            match &self.tok {
                Tok::Punct("{") => doc.operations.push(Operation {
                    kind: OperationType::Query,
                    name: None,
                    variables: Vec::new(),
                    directives: Vec::new(),
                    selection_set: self.selection_set()?,
                }),
                Tok::Name(n) if n == "fragment" => {
                    self.bump()?;
                    let name = self.name()?;
                    if name == "on" {
                        return Err(self.error("fragment cannot be named `on`"));
                    }
                    match self.name()?.as_str() {
                        "on" => {}
                        _ => return Err(self.error("expected `on`")),
                    }
                    let type_condition = self.name()?;
                    let directives = self.directives()?;
                    let selection_set = self.selection_set()?;
                    doc.fragments.push(FragmentDefinition {
                        name,
                        type_condition,
                        directives,
                        selection_set,
                    });
                }
                Tok::Name(n) => {
                    let kind = match n.as_str() {
                        "query" => OperationType::Query,
                        "mutation" => OperationType::Mutation,
                        "subscription" => OperationType::Subscription,
                        _ => return Err(self.unexpected("an operation or fragment")),
                    };
                    self.bump()?;
                    let name = match self.tok {
                        Tok::Name(_) => Some(self.name()?),
                        _ => None,
                    };
                    let variables = if self.is("(") {
                        self.variable_definitions()?
                    } else {
                        Vec::new()
                    };
                    let directives = self.directives()?;
                    let selection_set = self.selection_set()?;
                    doc.operations.push(Operation {
                        kind,
                        name,
                        variables,
                        directives,
                        selection_set,
                    });
                }
                _ => return Err(self.unexpected("an operation or fragment")),
            }
        }
        Ok(doc)
    }

    fn variable_definitions(&mut self) -> Result<Vec<VariableDefinition>, SyntaxDiagnostic> {
        self.expect("(")?;
        let mut out = Vec::new();
        while !self.eat(")")? {
            self.expect("$")?;
            let name = self.name()?;
            self.expect(":")?;
            let type_text = self.type_text()?;
            let default = if self.eat("=")? {
                Some(self.value(true)?)
            } else {
                None
            };
            self.directives()?;
            out.push(VariableDefinition {
                name,
                type_text,
                default,
            });
        }
        if out.is_empty() {
            return Err(self.error("empty variable definitions"));
        }
        Ok(out)
    }

    fn type_text(&mut self) -> Result<String, SyntaxDiagnostic> {
        let mut t = if self.eat("[")? {
            let inner = self.type_text()?;
            self.expect("]")?;
            format!("[{inner}]")
        } else {
            self.name()?
        };
        if self.eat("!")? {
            t.push('!');
        }
        Ok(t)
    }

    fn directives(&mut self) -> Result<Vec<Directive>, SyntaxDiagnostic> {
        let mut out = Vec::new();
        while self.eat("@")? {
            let name = self.name()?;
            let arguments = self.arguments(false)?;
            out.push(Directive { name, arguments });
        }
        Ok(out)
    }

    fn arguments(&mut self, is_const: bool) -> Result<Vec<(String, Value)>, SyntaxDiagnostic> {
        let mut out = Vec::new();
        if !self.eat("(")? {
            return Ok(out);
        }
        while !self.eat(")")? {
            let name = self.name()?;
            self.expect(":")?;
            out.push((name, self.value(is_const)?));
        }
        if out.is_empty() {
            return Err(self.error("empty argument list"));
        }
        Ok(out)
    }

    fn selection_set(&mut self) -> Result<Vec<Selection>, SyntaxDiagnostic> {
        let (line, column) = (self.line, self.column);
        self.expect("{")?;
        let mut out = Vec::new();
        while !self.eat("}")? {
            out.push(self.selection()?);
        }
        if out.is_empty() {
            return Err(SyntaxDiagnostic {
                line,
                column,
                message: "empty selection set".into(),
            });
        }
        Ok(out)
    }

    fn selection(&mut self) -> Result<Selection, SyntaxDiagnostic> {
        if self.eat("...")? {
            let on = matches!(&self.tok, Tok::Name(n) if n == "on");
            if on {
                self.bump()?;
                let type_condition = Some(self.name()?);
                let directives = self.directives()?;
                let selection_set = self.selection_set()?;
                return Ok(Selection::InlineFragment {
                    type_condition,
                    directives,
                    selection_set,
                });
            }
            if let Tok::Name(_) = self.tok {
                let name = self.name()?;
                let directives = self.directives()?;
                return Ok(Selection::FragmentSpread { name, directives });
            }
            let directives = self.directives()?;
            let selection_set = self.selection_set()?;
            return Ok(Selection::InlineFragment {
                type_condition: None,
                directives,
                selection_set,
            });
        }
        let first = self.name()?;
        let (alias, name) = if self.eat(":")? {
            (Some(first), self.name()?)
        } else {
            (None, first)
        };
        let arguments = self.arguments(false)?;
        let directives = self.directives()?;
        let selection_set = if self.is("{") {
            self.selection_set()?
        } else {
            Vec::new()
        };
        Ok(Selection::Field(Field {
            alias,
            name,
            arguments,
            directives,
            selection_set,
        }))
    }

    fn value(&mut self, is_const: bool) -> Result<Value, SyntaxDiagnostic> {
        match &self.tok {
            Tok::Punct("$") if !is_const => {
                self.bump()?;
                Ok(Value::Variable(self.name()?))
            }
            Tok::Punct("[") => {
                self.bump()?;
                let mut items = Vec::new();
                while !self.eat("]")? {
                    items.push(self.value(is_const)?);
                }
                Ok(Value::List(items))
            }
            Tok::Punct("{") => {
                self.bump()?;
                let mut fields = Vec::new();
                while !self.eat("}")? {
                    let name = self.name()?;
                    self.expect(":")?;
                    fields.push((name, self.value(is_const)?));
                }
                Ok(Value::Object(fields))
            }
            Tok::Int(_) | Tok::Float(_) | Tok::Str(_) => Ok(match self.bump()? {
                Tok::Int(n) => Value::Int(n),
                Tok::Float(n) => Value::Float(n),
                Tok::Str(s) => Value::String(s),
                _ => unreachable!(),
            }),
            Tok::Name(n) => {
                let v = match n.as_str() {
                    "true" => Value::Boolean(true),
                    "false" => Value::Boolean(false),
                    "null" => Value::Null,
                    other => Value::Enum(other.to_string()),
                };
                self.bump()?;
                Ok(v)
            }
            _ => Err(self.unexpected("a value")),
        }
    }
}

/// Parses an executable GraphQL document.
pub fn parse_document(text: &str) -> Result<Document, SyntaxDiagnostic> {
    Parser::new(text)?.document()
}

/// Grammar check of a GraphQL document. Parsing stops at the first error,
/// so at most one diagnostic is returned.
pub fn validate_query_text(text: &str) -> Result<(), Vec<SyntaxDiagnostic>> {
    parse_document(text).map(|_| ()).map_err(|d| vec![d])
}

/// Decodes one GraphQL string literal, quotes included.
pub fn parse_string_literal(literal: &str) -> Result<String, SyntaxDiagnostic> {
    let mut p = Parser::new(literal)?;
    match p.bump()? {
        Tok::Str(s) if p.tok == Tok::Eof => Ok(s),
        _ => Err(SyntaxDiagnostic {
            line: 1,
            column: 1,
            message: "not a single string literal".into(),
        }),
    }
}

/// Deepest selection-set nesting in the document; the operation's own
/// selection set is level 1 and inline fragments add no level.
pub fn selection_depth(doc: &Document) -> usize {
    fn depth(set: &[Selection]) -> usize {
        set.iter()
            .map(|s| match s {
                Selection::Field(f) if f.selection_set.is_empty() => 0,
                Selection::Field(f) => 1 + depth(&f.selection_set),
                Selection::InlineFragment { selection_set, .. } => depth(selection_set),
                Selection::FragmentSpread { .. } => 0,
            })
            .max()
            .unwrap_or(0)
    }
    doc.operations
        .iter()
        .map(|o| 1 + depth(&o.selection_set))
        .max()
        .unwrap_or(0)
}

/// Dotted path of every selected field, e.g. `pets.owner.firstName`.
/// Inline fragments contribute a `...Type` segment.
pub fn field_paths(doc: &Document) -> Vec<String> {
    fn walk(set: &[Selection], prefix: &str, out: &mut Vec<String>) {
        for s in set {
            let join = |seg: &str| {
                if prefix.is_empty() {
                    seg.to_string()
                } else {
                    format!("{prefix}.{seg}")
                }
            };
            match s {
                Selection::Field(f) => {
                    let p = join(&f.name);
                    out.push(p.clone());
                    walk(&f.selection_set, &p, out);
                }
                Selection::InlineFragment {
                    type_condition,
                    selection_set,
                    ..
                } => {
                    let p = join(&format!("...{}", type_condition.as_deref().unwrap_or("")));
                    walk(selection_set, &p, out);
                }
                Selection::FragmentSpread { .. } => {}
            }
        }
    }
    let mut out = Vec::new();
    for op in &doc.operations {
        walk(&op.selection_set, "", &mut out);
    }
    out
}
