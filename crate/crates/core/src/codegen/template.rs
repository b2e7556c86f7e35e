//! Parser for the template language.
//!
//! `$Root.step.step()` and `${Root.step}` read from the model; `#foreach`,
//! `#if`/`#else`, `#set`, `#insert` and `#end` control expansion. `\$` and
//! `\#` produce the bare characters. A `$` or `#` that does not start a
//! reference or directive is kept as text.
//!
//! A line holding nothing but one directive and surrounding blanks vanishes
//! entirely from the output, newline included.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("line {line}: #{directive} is never closed by #end")]
    UnclosedBlock { directive: String, line: usize },
    #[error("line {line}: malformed reference: {message}")]
    MalformedReference { line: usize, message: String },
    #[error("line {line}: unknown directive #{name}")]
    UnknownDirective { name: String, line: usize },
    #[error("line {line}: malformed #{directive}: {message}")]
    MalformedDirective {
        directive: String,
        line: usize,
        message: String,
    },
}

impl TemplateError {
    pub fn line(&self) -> usize {
        match self {
            TemplateError::UnclosedBlock { line, .. }
            | TemplateError::MalformedReference { line, .. }
            | TemplateError::UnknownDirective { line, .. }
            | TemplateError::MalformedDirective { line, .. } => *line,
        }
    }
}

/// `Root.step.step` with accessors already normalized, so `getName()`,
/// `name()` and `name` all become `name`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reference {
    pub root: String,
    pub steps: Vec<String>,
    pub line: usize,
}

impl Reference {
    /// Source-like spelling, used in diagnostics.
    pub fn display(&self) -> String {
        let mut s = format!("${}", self.root);
        for step in &self.steps {
            s.push('.');
            s.push_str(step);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetValue {
    Reference(Reference),
    Literal(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Text(String),
    Reference(Reference),
    Foreach {
        var: String,
        items: Reference,
        body: Vec<Node>,
        line: usize,
    },
    If {
        negated: bool,
        condition: Reference,
        then_body: Vec<Node>,
        else_body: Vec<Node>,
        line: usize,
    },
    Set {
        var: String,
        value: SetValue,
        line: usize,
    },
    /// Without an id, the template is chosen by the kind of `target`.
    Insert {
        id: Option<String>,
        target: Reference,
        line: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    id: String,
    nodes: Vec<Node>,
}

impl Template {
    pub fn parse(id: impl Into<String>, text: &str) -> Result<Self, TemplateError> {
        let tokens = gobble(Lexer::new(text).run()?);
        Ok(Template {
            id: id.into(),
            nodes: build(tokens)?,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }
}

/// Parses an anonymous template.
pub fn parse_template(text: &str) -> Result<Template, TemplateError> {
    Template::parse("", text)
}

/// Escapes `$` and `#` so that `text` renders as itself.
pub fn escape_template_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        if c == '$' || c == '#' {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

pub(crate) fn normalize_accessor(step: &str) -> String {
    if let Some(rest) = step.strip_prefix("get") {
        let mut chars = rest.chars();
        if let Some(first) = chars.next() {
            if first.is_ascii_uppercase() {
                return first.to_ascii_lowercase().to_string() + chars.as_str();
            }
        }
    }
    step.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Directive {
    Foreach {
        var: String,
        items: Reference,
    },
    If {
        negated: bool,
        condition: Reference,
    },
    Else,
    End,
    Set {
        var: String,
        value: SetValue,
    },
    Insert {
        id: Option<String>,
        target: Reference,
    },
}

impl Directive {
    fn name(&self) -> &'static str {
        match self {
            Directive::Foreach { .. } => "foreach",
            Directive::If { .. } => "if",
            Directive::Else => "else",
            Directive::End => "end",
            Directive::Set { .. } => "set",
            Directive::Insert { .. } => "insert",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Text(String),
    Reference(Reference),
    Directive(Directive, usize),
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    tokens: Vec<Token>,
    text: String,
}

impl Lexer {
    fn new(src: &str) -> Self {
        Lexer {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
            tokens: Vec::new(),
            text: String::new(),
        }
    }

    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek(0)?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
        }
        Some(c)
    }

    fn flush(&mut self) {
        if !self.text.is_empty() {
            self.tokens
                .push(Token::Text(std::mem::take(&mut self.text)));
        }
    }

    fn run(mut self) -> Result<Vec<Token>, TemplateError> {
        while let Some(c) = self.peek(0) {
            match c {
                '\\' if matches!(self.peek(1), Some('$' | '#')) => {
                    self.bump();
                    let escaped = self.bump().unwrap();
                    self.text.push(escaped);
                }
                '$' if self.peek(1) == Some('{') || self.peek(1).is_some_and(is_ident_start) => {
                    let line = self.line;
                    let r = self.reference()?;
                    self.flush();
                    self.tokens.push(Token::Reference(Reference { line, ..r }));
                }
                '#' if self.peek(1) == Some('{')
                    || self.peek(1).is_some_and(|c| c.is_ascii_alphabetic()) =>
                {
                    let line = self.line;
                    let d = self.directive()?;
                    self.flush();
                    self.tokens.push(Token::Directive(d, line));
                }
                _ => {
                    self.bump();
                    self.text.push(c);
                }
            }
        }
        self.flush();
        Ok(self.tokens)
    }

    fn ident(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0).filter(|c| is_ident(*c)) {
            s.push(c);
            self.bump();
        }
        s
    }

    fn malformed_ref(&self, message: impl Into<String>) -> TemplateError {
        TemplateError::MalformedReference {
            line: self.line,
            message: message.into(),
        }
    }

    /// At a `$` known to start a reference.
    fn reference(&mut self) -> Result<Reference, TemplateError> {
        self.bump();
        let braced = self.peek(0) == Some('{');
        if braced {
            self.bump();
            if !self.peek(0).is_some_and(is_ident_start) {
                return Err(self.malformed_ref("expected a name after `${`"));
            }
        }
        let root = self.ident();
        let mut steps = Vec::new();
        while self.peek(0) == Some('.') && self.peek(1).is_some_and(is_ident_start) {
            self.bump();
            let step = self.ident();
            if self.peek(0) == Some('(') {
                if self.peek(1) != Some(')') {
                    return Err(self.malformed_ref(format!("call `{step}(` takes no arguments")));
                }
                self.bump();
                self.bump();
            }
            steps.push(normalize_accessor(&step));
        }
        if braced {
            if self.peek(0) != Some('}') {
                return Err(self.malformed_ref("expected `}` to close `${`"));
            }
            self.bump();
        }
        Ok(Reference {
            root,
            steps,
            line: self.line,
        })
    }

    fn malformed_directive(&self, directive: &str, message: impl Into<String>) -> TemplateError {
        TemplateError::MalformedDirective {
            directive: directive.to_string(),
            line: self.line,
            message: message.into(),
        }
    }

    /// At a `#` known to start a directive.
    fn directive(&mut self) -> Result<Directive, TemplateError> {
        let line = self.line;
        self.bump();
        let braced = self.peek(0) == Some('{');
        if braced {
            self.bump();
        }
        let name = self.ident();
        if braced {
            if self.peek(0) != Some('}') {
                return Err(self.malformed_directive(&name, "expected `}`"));
            }
            self.bump();
        }
        match name.as_str() {
            "else" => return Ok(Directive::Else),
            "end" => return Ok(Directive::End),
            "foreach" | "if" | "set" | "insert" => {}
            _ => return Err(TemplateError::UnknownDirective { name, line }),
        }

        while self.peek(0).is_some_and(|c| c == ' ' || c == '\t') {
            self.bump();
        }
        if self.peek(0) != Some('(') {
            return Err(self.malformed_directive(&name, "expected `(`"));
        }
        self.bump();
        let args = self.args(&name)?;
        interpret(&name, args).map_err(|m| TemplateError::MalformedDirective {
            directive: name.clone(),
            line,
            message: m,
        })
    }

    /// Reads directive arguments up to the matching `)`.
    fn args(&mut self, directive: &str) -> Result<Vec<Arg>, TemplateError> {
        let mut args = Vec::new();
        loop {
            let Some(c) = self.peek(0) else {
                return Err(self.malformed_directive(directive, "missing `)`"));
            };
            match c {
                ')' => {
                    self.bump();
                    return Ok(args);
                }
                c if c.is_whitespace() => {
                    self.bump();
                }
                '$' => {
                    let line = self.line;
                    if !(self.peek(1) == Some('{') || self.peek(1).is_some_and(is_ident_start)) {
                        return Err(self.malformed_ref("expected a name after `$`"));
                    }
                    let r = self.reference()?;
                    args.push(Arg::Ref(Reference { line, ..r }));
                }
                '"' => {
                    self.bump();
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            Some('"') => break,
                            Some('\\') if self.peek(0) == Some('"') => {
                                self.bump();
                                s.push('"');
                            }
                            Some(c) => s.push(c),
                            None => {
                                return Err(
                                    self.malformed_directive(directive, "unterminated string")
                                )
                            }
                        }
                    }
                    args.push(Arg::Str(s));
                }
                '!' | '=' | ',' => {
                    self.bump();
                    args.push(Arg::Punct(c));
                }
                c if is_ident_start(c) => {
                    let word = self.ident();
                    args.push(Arg::Word(word));
                }
                other => {
                    return Err(
                        self.malformed_directive(directive, format!("unexpected `{other}`"))
                    );
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Arg {
    Ref(Reference),
    Str(String),
    Word(String),
    Punct(char),
}

fn variable_name(r: &Reference) -> Result<String, String> {
    if r.steps.is_empty() {
        Ok(r.root.clone())
    } else {
        Err(format!("`{}` is not a plain variable", r.display()))
    }
}

fn interpret(name: &str, args: Vec<Arg>) -> Result<Directive, String> {
    use Arg::*;
    match (name, args.as_slice()) {
        ("foreach", [Ref(var), Word(kw), Ref(items)]) if kw == "in" => Ok(Directive::Foreach {
            var: variable_name(var)?,
            items: items.clone(),
        }),
        ("foreach", _) => Err("expected `($var in $items)`".into()),
        ("if", [Ref(c)]) => Ok(Directive::If {
            negated: false,
            condition: c.clone(),
        }),
        ("if", [Punct('!'), Ref(c)]) => Ok(Directive::If {
            negated: true,
            condition: c.clone(),
        }),
        ("if", _) => Err("expected `($ref)` or `(!$ref)`".into()),
        ("set", [Ref(var), Punct('='), Ref(value)]) => Ok(Directive::Set {
            var: variable_name(var)?,
            value: SetValue::Reference(value.clone()),
        }),
        ("set", [Ref(var), Punct('='), Str(value)]) => Ok(Directive::Set {
            var: variable_name(var)?,
            value: SetValue::Literal(value.clone()),
        }),
        ("set", _) => Err("expected `($var = $ref)` or `($var = \"text\")`".into()),
        ("insert", [Ref(target)]) => Ok(Directive::Insert {
            id: None,
            target: target.clone(),
        }),
        ("insert", [Str(id), Punct(','), Ref(target)]) => Ok(Directive::Insert {
            id: Some(id.clone()),
            target: target.clone(),
        }),
        ("insert", _) => Err("expected `($node)` or `(\"template-id\", $node)`".into()),
        _ => unreachable!("directive names are checked by the lexer"),
    }
}

/// Drops the blanks and line break around directives that sit alone on a line.
fn gobble(mut tokens: Vec<Token>) -> Vec<Token> {
    let n = tokens.len();
    let standalone: Vec<bool> = (0..n)
        .map(|i| {
            if !matches!(tokens[i], Token::Directive(..)) {
                return false;
            }
            let before = match i.checked_sub(1).map(|j| &tokens[j]) {
                None => true,
                Some(Token::Text(t)) => {
                    let tail = t.rsplit('\n').next().unwrap_or("");
                    tail.chars().all(|c| c == ' ' || c == '\t') && (t.contains('\n') || i == 1)
                }
                Some(_) => false,
            };
            let after = match tokens.get(i + 1) {
                None => true,
                Some(Token::Text(t)) => {
                    let head = t.split('\n').next().unwrap_or("");
                    head.trim_end_matches('\r')
                        .chars()
                        .all(|c| c == ' ' || c == '\t')
                        && (t.contains('\n') || i + 2 == n)
                }
                Some(_) => false,
            };
            before && after
        })
        .collect();

    for i in 0..n {
        if let Token::Text(t) = &tokens[i] {
            let mut start = 0;
            let mut end = t.len();
            if i > 0 && standalone[i - 1] {
                start = t.find('\n').map_or(t.len(), |p| p + 1);
            }
            if i + 1 < n && standalone[i + 1] {
                end = t.rfind('\n').map_or(0, |p| p + 1);
            }
            let trimmed = t[start..end.max(start)].to_string();
            tokens[i] = Token::Text(trimmed);
        }
    }
    tokens.retain(|t| !matches!(t, Token::Text(s) if s.is_empty()));
    tokens
}

enum Frame {
    Root,
    Foreach {
        var: String,
        items: Reference,
        line: usize,
    },
    If {
        negated: bool,
        condition: Reference,
        line: usize,
        then_body: Option<Vec<Node>>,
    },
}

fn build(tokens: Vec<Token>) -> Result<Vec<Node>, TemplateError> {
    let mut stack: Vec<(Frame, Vec<Node>)> = vec![(Frame::Root, Vec::new())];
    for token in tokens {
        let node = match token {
            Token::Text(t) => Node::Text(t),
            Token::Reference(r) => Node::Reference(r),
            Token::Directive(d, line) => match d {
                Directive::Foreach { var, items } => {
                    stack.push((Frame::Foreach { var, items, line }, Vec::new()));
                    continue;
                }
                Directive::If { negated, condition } => {
                    stack.push((
                        Frame::If {
                            negated,
                            condition,
                            line,
                            then_body: None,
                        },
                        Vec::new(),
                    ));
                    continue;
                }
                Directive::Else => {
                    let (frame, body) = stack.last_mut().expect("root frame");
                    match frame {
                        Frame::If { then_body, .. } if then_body.is_none() => {
                            *then_body = Some(std::mem::take(body));
                            continue;
                        }
                        _ => {
                            return Err(TemplateError::MalformedDirective {
                                directive: d.name().into(),
                                line,
                                message: "#else outside of #if".into(),
                            })
                        }
                    }
                }
                Directive::End => {
                    if stack.len() == 1 {
                        return Err(TemplateError::MalformedDirective {
                            directive: d.name().into(),
                            line,
                            message: "#end without an open block".into(),
                        });
                    }
                    let (frame, body) = stack.pop().unwrap();
                    match frame {
                        Frame::Root => unreachable!(),
                        Frame::Foreach { var, items, line } => Node::Foreach {
                            var,
                            items,
                            body,
                            line,
                        },
                        Frame::If {
                            negated,
                            condition,
                            line,
                            then_body,
                        } => {
                            let (then_body, else_body) = match then_body {
                                Some(t) => (t, body),
                                None => (body, Vec::new()),
                            };
                            Node::If {
                                negated,
                                condition,
                                then_body,
                                else_body,
                                line,
                            }
                        }
                    }
                }
                Directive::Set { var, value } => Node::Set { var, value, line },
                Directive::Insert { id, target } => Node::Insert { id, target, line },
            },
        };
        stack.last_mut().unwrap().1.push(node);
    }
    if stack.len() > 1 {
        let (frame, _) = stack.pop().unwrap();
        let (directive, line) = match frame {
            Frame::Foreach { line, .. } => ("foreach", line),
            Frame::If { line, .. } => ("if", line),
            Frame::Root => unreachable!(),
        };
        return Err(TemplateError::UnclosedBlock {
            directive: directive.into(),
            line,
        });
    }
    Ok(stack.pop().unwrap().1)
}
