//! Recursive-descent parser with Pratt expression parsing.
//!
//! Constructs outside the modelled subset are kept as [`StmtKind::Opaque`]
//! statements (or skipped contract members) as long as their brackets
//! balance, so arbitrary real-world files still produce a partial tree.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow};
use thiserror::Error;

use crate::ast::*;
use crate::fold::unit_scale;
use crate::lexer::{is_elementary_type, tokenize, LexError, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("{line}:{column}: expected {}, found {found}", Expected(.expected))]
    Unexpected { line: u32, column: u32, expected: Vec<String>, found: String },
    #[error("{line}:{column}: duplicate {what} `{name}` in contract `{contract}`")]
    Duplicate { line: u32, column: u32, what: &'static str, name: String, contract: String },
}

impl ParseError {
    pub fn position(&self) -> (u32, u32) {
        match self {
            ParseError::Lex(e) => e.position(),
            ParseError::Unexpected { line, column, .. } | ParseError::Duplicate { line, column, .. } => {
                (*line, *column)
            }
        }
    }
}

struct Expected<'a>(&'a [String]);

impl fmt::Display for Expected<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            [] => f.write_str("something else"),
            [one] => f.write_str(one),
            many => write!(f, "one of {}", many.join(", ")),
        }
    }
}

type PResult<T> = Result<T, ParseError>;

/// Parses a whole file.
pub fn parse(source: &str) -> PResult<SourceUnit> {
    let tokens = tokenize(source)?;
    let shared: Arc<str> = Arc::from(source);
    let mut p = Parser { src: source, toks: tokens, pos: 0, shared: shared.clone() };
    let (pragmas, contracts) = p.source_unit()?;
    Ok(SourceUnit { source: shared, pragmas, contracts })
}

const TIME_UNITS: &[&str] = &["seconds", "minutes", "hours", "days", "weeks", "years"];

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token<'a>>,
    pos: usize,
    shared: Arc<str>,
}

impl<'a> Parser<'a> {
    // ---- token helpers

    fn peek(&self) -> Option<&Token<'a>> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&Token<'a>> {
        self.toks.get(self.pos + n)
    }

    fn at_punct(&self, p: &str) -> bool {
        self.peek().is_some_and(|t| t.is_punct(p))
    }

    fn at_op(&self, op: &str) -> bool {
        self.peek().is_some_and(|t| t.is_op(op))
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(kw))
    }

    fn bump(&mut self) -> Token<'a> {
        let t = self.toks[self.pos].clone();
        self.pos += 1;
        t
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos - 1].span
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.at_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        let expected = expected.iter().map(|s| s.to_string()).collect();
        Err(match self.peek() {
            Some(t) => ParseError::Unexpected {
                line: t.span.line,
                column: t.span.column,
                expected,
                found: format!("`{}`", t.text),
            },
            None => {
                let (line, column) = end_position(self.src);
                ParseError::Unexpected { line, column, expected, found: "end of file".into() }
            }
        })
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Span> {
        if self.at_punct(p) {
            Ok(self.bump().span)
        } else {
            self.error(&[&format!("`{p}`")])
        }
    }

    fn expect_ident(&mut self) -> PResult<(String, Span)> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                let t = self.bump();
                Ok((t.text.to_string(), t.span))
            }
            _ => self.error(&["identifier"]),
        }
    }

    /// Skips one balanced item: up to and including a `;` at depth zero, or a
    /// brace-delimited region. Stops before a `}` that closes the enclosing block.
    fn skip_item(&mut self) -> PResult<Span> {
        let start = self.pos;
        let mut depth = 0usize;
        while let Some(t) = self.peek() {
            if t.kind == TokenKind::Punctuation {
                match t.text {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" => depth = depth.saturating_sub(1),
                    "}" => {
                        if depth == 0 {
                            break;
                        }
                        depth -= 1;
                        // `x.call{value: v}(data);` continues past the braces
                        let continues = self.peek_at(1).is_some_and(|n| {
                            n.is_punct("(") || n.is_punct(".") || n.is_punct("[") || n.kind == TokenKind::Operator
                        });
                        if depth == 0 && !continues {
                            self.pos += 1;
                            return Ok(self.toks[start].span.to(self.prev_span()));
                        }
                    }
                    ";" if depth == 0 => {
                        self.pos += 1;
                        return Ok(self.toks[start].span.to(self.prev_span()));
                    }
                    _ => {}
                }
            }
            self.pos += 1;
        }
        if self.pos == start {
            return self.error(&["statement"]);
        }
        if self.peek().is_none() {
            return self.error(&["`;`", "`}`"]);
        }
        // Ran into the enclosing `}` without a terminator.
        Ok(self.toks[start].span.to(self.prev_span()))
    }

    // ---- top level

    fn source_unit(&mut self) -> PResult<(Vec<String>, Vec<ContractDef>)> {
        let mut pragmas = Vec::new();
        let mut contracts = Vec::new();
        while let Some(t) = self.peek() {
            if t.is_keyword("pragma") {
                let start = t.span.end;
                self.bump();
                while !self.at_punct(";") {
                    if self.peek().is_none() {
                        return self.error(&["`;`"]);
                    }
                    self.bump();
                }
                let end = self.bump().span.start;
                pragmas.push(self.src[start..end].trim().to_string());
            } else if t.is_keyword("contract")
                || t.is_keyword("library")
                || t.is_keyword("interface")
                || t.is_keyword("abstract")
            {
                contracts.push(self.contract()?);
            } else if t.is_punct("}") {
                return self.error(&["`contract`", "`library`", "`interface`", "`pragma`"]);
            } else {
                self.skip_item()?;
            }
        }
        Ok((pragmas, contracts))
    }

    fn contract(&mut self) -> PResult<ContractDef> {
        let start = self.peek().unwrap().span;
        self.eat_kw("abstract");
        let kind = match self.bump().text {
            "library" => ContractKind::Library,
            "interface" => ContractKind::Interface,
            "contract" => ContractKind::Contract,
            _ => {
                self.pos -= 1;
                return self.error(&["`contract`"]);
            }
        };
        let (name, _) = self.expect_ident()?;
        let mut bases = Vec::new();
        if self.eat_kw("is") {
            loop {
                let (mut base, _) = self.expect_ident()?;
                while self.eat_punct(".") {
                    base.push('.');
                    base.push_str(&self.expect_ident()?.0);
                }
                if self.at_punct("(") {
                    self.balanced("(", ")")?;
                }
                bases.push(base);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct("{")?;

        let mut c = ContractDef {
            kind,
            name,
            bases,
            structs: Vec::new(),
            state_vars: Vec::new(),
            functions: Vec::new(),
            modifiers: Vec::new(),
            events: Vec::new(),
            span: start,
            source: self.shared.clone(),
        };

        while !self.at_punct("}") {
            if self.peek().is_none() {
                return self.error(&["`}`"]);
            }
            let member_start = self.pos;
            if let Err(err) = self.contract_member(&mut c) {
                if matches!(err, ParseError::Duplicate { .. }) {
                    return Err(err);
                }
                self.pos = member_start;
                if self.skip_item().is_err() {
                    return Err(err);
                }
            }
        }
        let end = self.bump().span;
        c.span = start.to(end);
        Ok(c)
    }

    fn balanced(&mut self, open: &str, close: &str) -> PResult<Span> {
        let start = self.expect_punct(open)?;
        let mut depth = 1;
        while depth > 0 {
            match self.peek() {
                None => return self.error(&[&format!("`{close}`")]),
                Some(t) if t.is_punct(open) => depth += 1,
                Some(t) if t.is_punct(close) => depth -= 1,
                _ => {}
            }
            self.bump();
        }
        Ok(start.to(self.prev_span()))
    }

    fn contract_member(&mut self, c: &mut ContractDef) -> PResult<()> {
        let t = self.peek().unwrap();
        if t.is_keyword("struct") {
            let s = self.struct_def()?;
            c.structs.push(s);
        } else if t.is_keyword("function")
            || t.is_keyword("constructor")
            || t.is_keyword("fallback")
            || t.is_keyword("receive")
        {
            let f = self.function(&c.name)?;
            if f.kind == FunctionKind::Fallback && c.fallback().is_some() {
                return Err(ParseError::Duplicate {
                    line: f.span.line,
                    column: f.span.column,
                    what: "fallback function",
                    name: "fallback".into(),
                    contract: c.name.clone(),
                });
            }
            c.functions.push(f);
        } else if t.is_keyword("modifier") {
            let m = self.modifier_def()?;
            c.modifiers.push(m);
        } else if t.is_keyword("event") {
            self.bump();
            let (name, _) = self.expect_ident()?;
            self.skip_item()?;
            c.events.push(name);
        } else if t.is_keyword("using") || t.is_keyword("enum") || t.text == "error" {
            self.skip_item()?;
        } else {
            let v = self.state_var()?;
            if c.state_var(&v.name).is_some() {
                return Err(ParseError::Duplicate {
                    line: v.span.line,
                    column: v.span.column,
                    what: "state variable",
                    name: v.name,
                    contract: c.name.clone(),
                });
            }
            c.state_vars.push(v);
        }
        Ok(())
    }

    fn struct_def(&mut self) -> PResult<StructDef> {
        let start = self.bump().span;
        let (name, _) = self.expect_ident()?;
        self.expect_punct("{")?;
        let mut fields = Vec::new();
        while !self.at_punct("}") {
            let fstart = self.peek().map(|t| t.span);
            let ty = self.type_name()?;
            let (fname, _) = self.expect_ident()?;
            let end = self.expect_punct(";")?;
            fields.push(Param { ty, name: Some(fname), span: fstart.unwrap().to(end) });
        }
        let end = self.bump().span;
        Ok(StructDef { name, fields, span: start.to(end) })
    }

    fn state_var(&mut self) -> PResult<StateVarDef> {
        let start = match self.peek() {
            Some(t) => t.span,
            None => return self.error(&["declaration"]),
        };
        let ty = self.type_name()?;
        let mut visibility = None;
        let mut constant = false;
        loop {
            match self.peek() {
                Some(t) if t.kind == TokenKind::Keyword => match t.text {
                    "public" => visibility = Some(Visibility::Public),
                    "private" => visibility = Some(Visibility::Private),
                    "internal" => visibility = Some(Visibility::Internal),
                    "constant" | "immutable" => constant = true,
                    "override" => {
                        self.bump();
                        if self.at_punct("(") {
                            self.balanced("(", ")")?;
                        }
                        continue;
                    }
                    _ => break,
                },
                _ => break,
            }
            self.bump();
        }
        let (name, _) = self.expect_ident()?;
        let initializer = if self.eat_op("=") { Some(self.expr()?) } else { None };
        let end = self.expect_punct(";")?;
        Ok(StateVarDef { name, ty, visibility, constant, initializer, span: start.to(end) })
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if self.eat_punct(")") {
            return Ok(params);
        }
        loop {
            let start = match self.peek() {
                Some(t) => t.span,
                None => return self.error(&["parameter"]),
            };
            let ty = self.type_name()?;
            while self.eat_kw("memory") || self.eat_kw("storage") || self.eat_kw("calldata") || self.eat_kw("indexed") {
            }
            let name = match self.peek() {
                Some(t) if t.kind == TokenKind::Identifier => Some(self.bump().text.to_string()),
                _ => None,
            };
            params.push(Param { ty, name, span: start.to(self.prev_span()) });
            if self.eat_punct(",") {
                continue;
            }
            self.expect_punct(")")?;
            return Ok(params);
        }
    }

    fn function(&mut self, contract_name: &str) -> PResult<FunctionDef> {
        let head = self.bump();
        let start = head.span;
        let mut kind = match head.text {
            "constructor" => FunctionKind::Constructor,
            "fallback" => FunctionKind::Fallback,
            "receive" => FunctionKind::Receive,
            _ => match self.peek() {
                Some(t) if t.kind == TokenKind::Identifier || t.is_keyword("receive") || t.is_keyword("fallback") => {
                    FunctionKind::Named(self.bump().text.to_string())
                }
                _ => FunctionKind::Fallback,
            },
        };
        if kind == FunctionKind::Named(contract_name.to_string()) {
            kind = FunctionKind::Constructor;
        }
        let params = self.params()?;
        let mut f = FunctionDef {
            kind,
            params,
            returns: Vec::new(),
            visibility: None,
            payable: false,
            view: false,
            modifiers: Vec::new(),
            body: None,
            span: start,
        };
        loop {
            let Some(t) = self.peek() else { return self.error(&["`{`", "`;`"]) };
            match (t.kind, t.text) {
                (TokenKind::Keyword, "public") => f.visibility = Some(Visibility::Public),
                (TokenKind::Keyword, "private") => f.visibility = Some(Visibility::Private),
                (TokenKind::Keyword, "internal") => f.visibility = Some(Visibility::Internal),
                (TokenKind::Keyword, "external") => f.visibility = Some(Visibility::External),
                (TokenKind::Keyword, "payable") => f.payable = true,
                (TokenKind::Keyword, "view" | "pure" | "constant") => f.view = true,
                (TokenKind::Keyword, "virtual") => {}
                (TokenKind::Keyword, "override") => {
                    self.bump();
                    if self.at_punct("(") {
                        self.balanced("(", ")")?;
                    }
                    continue;
                }
                (TokenKind::Keyword, "returns") => {
                    self.bump();
                    f.returns = self.params()?;
                    continue;
                }
                (TokenKind::Identifier, name) => {
                    let name = name.to_string();
                    let mspan = self.bump().span;
                    let args = if self.at_punct("(") { self.call_args()? } else { Vec::new() };
                    f.modifiers.push(ModifierInvocation { name, args, span: mspan.to(self.prev_span()) });
                    continue;
                }
                (TokenKind::Punctuation, ";") => {
                    f.span = start.to(self.bump().span);
                    return Ok(f);
                }
                (TokenKind::Punctuation, "{") => {
                    let (body, span) = self.block()?;
                    f.body = Some(body);
                    f.span = start.to(span);
                    return Ok(f);
                }
                _ => return self.error(&["function attribute", "`{`", "`;`"]),
            }
            self.bump();
        }
    }

    fn modifier_def(&mut self) -> PResult<ModifierDef> {
        let start = self.bump().span;
        let (name, _) = self.expect_ident()?;
        let params = if self.at_punct("(") { self.params()? } else { Vec::new() };
        while self.eat_kw("virtual") || self.eat_kw("override") {}
        let (body, end) = self.block()?;
        Ok(ModifierDef { name, params, body, span: start.to(end) })
    }

    // ---- types

    fn type_name(&mut self) -> PResult<TypeName> {
        let Some(t) = self.peek() else { return self.error(&["type"]) };
        let mut ty = if t.is_keyword("mapping") {
            self.bump();
            self.expect_punct("(")?;
            let key = self.type_name()?;
            if !self.eat_op("=>") {
                return self.error(&["`=>`"]);
            }
            let value = self.type_name()?;
            self.expect_punct(")")?;
            TypeName::Mapping(Box::new(key), Box::new(value))
        } else if t.kind == TokenKind::Keyword && is_elementary_type(t.text) {
            let name = self.bump().text.to_string();
            if name == "address" {
                self.eat_kw("payable");
            }
            TypeName::Elementary(name)
        } else if t.kind == TokenKind::Identifier {
            let mut name = self.bump().text.to_string();
            while self.at_punct(".") && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Identifier) {
                self.bump();
                name.push('.');
                name.push_str(self.bump().text);
            }
            TypeName::UserDefined(name)
        } else {
            return self.error(&["type"]);
        };
        while self.at_punct("[") {
            self.bump();
            if self.eat_punct("]") {
                ty = TypeName::Array(Box::new(ty), None);
            } else {
                let len = self.expr()?;
                self.expect_punct("]")?;
                ty = TypeName::Array(Box::new(ty), Some(Box::new(len)));
            }
        }
        Ok(ty)
    }

    // ---- statements

    fn block(&mut self) -> PResult<(Vec<Stmt>, Span)> {
        let start = self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.at_punct("}") {
            if self.peek().is_none() {
                return self.error(&["`}`"]);
            }
            stmts.push(self.statement_or_opaque()?);
        }
        let end = self.bump().span;
        Ok((stmts, start.to(end)))
    }

    fn statement_or_opaque(&mut self) -> PResult<Stmt> {
        let start = self.pos;
        match self.statement() {
            Ok(s) => Ok(s),
            Err(err) => {
                self.pos = start;
                match self.skip_item() {
                    Ok(span) => Ok(Stmt { kind: StmtKind::Opaque, span }),
                    Err(_) => Err(err),
                }
            }
        }
    }

    fn statement(&mut self) -> PResult<Stmt> {
        let Some(t) = self.peek() else { return self.error(&["statement"]) };
        let start = t.span;
        let text = t.text;
        let kind = t.kind;

        if t.is_punct("{") {
            let (stmts, span) = self.block()?;
            return Ok(Stmt { kind: StmtKind::Block(stmts), span });
        }
        if kind == TokenKind::Keyword {
            match text {
                "if" => {
                    self.bump();
                    self.expect_punct("(")?;
                    let cond = self.expr()?;
                    self.expect_punct(")")?;
                    let then = Box::new(self.statement_or_opaque()?);
                    let otherwise =
                        if self.eat_kw("else") { Some(Box::new(self.statement_or_opaque()?)) } else { None };
                    let end = otherwise.as_ref().map(|o| o.span).unwrap_or(then.span);
                    return Ok(Stmt { kind: StmtKind::If { cond, then, otherwise }, span: start.to(end) });
                }
                "while" => {
                    self.bump();
                    self.expect_punct("(")?;
                    let cond = self.expr()?;
                    self.expect_punct(")")?;
                    let body = Box::new(self.statement_or_opaque()?);
                    let span = start.to(body.span);
                    return Ok(Stmt { kind: StmtKind::While { cond, body }, span });
                }
                "do" => {
                    self.bump();
                    let body = Box::new(self.statement_or_opaque()?);
                    if !self.eat_kw("while") {
                        return self.error(&["`while`"]);
                    }
                    self.expect_punct("(")?;
                    let cond = self.expr()?;
                    self.expect_punct(")")?;
                    let end = self.expect_punct(";")?;
                    return Ok(Stmt { kind: StmtKind::DoWhile { body, cond }, span: start.to(end) });
                }
                "for" => return self.for_statement(),
                "return" => {
                    self.bump();
                    let value = if self.at_punct(";") { None } else { Some(self.expr()?) };
                    let end = self.expect_punct(";")?;
                    return Ok(Stmt { kind: StmtKind::Return(value), span: start.to(end) });
                }
                "throw" | "break" | "continue" => {
                    self.bump();
                    let end = self.expect_punct(";")?;
                    let kind = match text {
                        "throw" => StmtKind::Throw,
                        "break" => StmtKind::Break,
                        _ => StmtKind::Continue,
                    };
                    return Ok(Stmt { kind, span: start.to(end) });
                }
                "emit" => {
                    self.bump();
                    let e = self.expr()?;
                    let end = self.expect_punct(";")?;
                    return Ok(Stmt { kind: StmtKind::Emit(e), span: start.to(end) });
                }
                "assembly" => {
                    self.bump();
                    if self.peek().is_some_and(|t| t.kind == TokenKind::StringLiteral) {
                        self.bump();
                    }
                    let end = self.balanced("{", "}")?;
                    return Ok(Stmt { kind: StmtKind::Assembly, span: start.to(end) });
                }
                "var" => {
                    self.bump();
                    let (name, _) = self.expect_ident()?;
                    let init = if self.eat_op("=") { Some(self.expr()?) } else { None };
                    let end = self.expect_punct(";")?;
                    return Ok(Stmt { kind: StmtKind::VarDecl { ty: None, name, init }, span: start.to(end) });
                }
                _ => {}
            }
        }
        if kind == TokenKind::Identifier && text == "_" && self.peek_at(1).is_some_and(|t| t.is_punct(";")) {
            self.bump();
            let end = self.bump().span;
            return Ok(Stmt { kind: StmtKind::Placeholder, span: start.to(end) });
        }
        if kind == TokenKind::Identifier && text == "unchecked" && self.peek_at(1).is_some_and(|t| t.is_punct("{")) {
            self.bump();
            let (stmts, span) = self.block()?;
            return Ok(Stmt { kind: StmtKind::Block(stmts), span: start.to(span) });
        }
        if let Some(decl) = self.try_var_decl()? {
            return Ok(decl);
        }
        let e = self.expr()?;
        let end = self.expect_punct(";")?;
        Ok(Stmt { kind: StmtKind::Expr(e), span: start.to(end) })
    }

    /// `T [location] name [= init];`, or `None` (with the cursor restored) if the
    /// tokens do not start a declaration.
    fn try_var_decl(&mut self) -> PResult<Option<Stmt>> {
        let Some(t) = self.peek() else { return Ok(None) };
        let looks_typed = t.is_keyword("mapping")
            || (t.kind == TokenKind::Keyword && is_elementary_type(t.text))
            || t.kind == TokenKind::Identifier;
        if !looks_typed {
            return Ok(None);
        }
        let start_pos = self.pos;
        let start = t.span;
        let ty = match self.type_name() {
            Ok(ty) => ty,
            Err(_) => {
                self.pos = start_pos;
                return Ok(None);
            }
        };
        while self.eat_kw("memory") || self.eat_kw("storage") || self.eat_kw("calldata") {}
        let is_decl = self.peek().is_some_and(|t| t.kind == TokenKind::Identifier)
            && self.peek_at(1).is_some_and(|t| t.is_op("=") || t.is_punct(";"));
        if !is_decl {
            self.pos = start_pos;
            return Ok(None);
        }
        let name = self.bump().text.to_string();
        let init = if self.eat_op("=") { Some(self.expr()?) } else { None };
        let end = self.expect_punct(";")?;
        Ok(Some(Stmt { kind: StmtKind::VarDecl { ty: Some(ty), name, init }, span: start.to(end) }))
    }

    fn for_statement(&mut self) -> PResult<Stmt> {
        let start = self.bump().span;
        self.expect_punct("(")?;
        let init = if self.eat_punct(";") {
            None
        } else if let Some(decl) = self.try_var_decl()? {
            Some(Box::new(decl))
        } else {
            let s = self.peek().unwrap().span;
            let e = self.expr()?;
            let end = self.expect_punct(";")?;
            Some(Box::new(Stmt { kind: StmtKind::Expr(e), span: s.to(end) }))
        };
        let cond = if self.at_punct(";") { None } else { Some(self.expr()?) };
        self.expect_punct(";")?;
        let update = if self.at_punct(")") { None } else { Some(self.expr()?) };
        self.expect_punct(")")?;
        let body = Box::new(self.statement_or_opaque()?);
        let span = start.to(body.span);
        Ok(Stmt { kind: StmtKind::For { init, cond, update, body }, span })
    }

    // ---- expressions

    fn expr(&mut self) -> PResult<Expr> {
        self.expr_bp(0)
    }

    fn expr_bp(&mut self, min_bp: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(t) = self.peek() {
            if t.kind != TokenKind::Operator {
                break;
            }
            let op_text = t.text;
            if let Some(assign) = assign_op(op_text) {
                let (l_bp, r_bp) = (2, 2);
                if l_bp < min_bp {
                    break;
                }
                self.bump();
                let value = self.expr_bp(r_bp)?;
                let span = lhs.span.to(value.span);
                lhs =
                    Expr { kind: ExprKind::Assign { op: assign, target: Box::new(lhs), value: Box::new(value) }, span };
                continue;
            }
            if op_text == "?" {
                let (l_bp, r_bp) = (4, 4);
                if l_bp < min_bp {
                    break;
                }
                self.bump();
                let then = self.expr_bp(0)?;
                if !self.eat_op(":") {
                    return self.error(&["`:`"]);
                }
                let otherwise = self.expr_bp(r_bp)?;
                let span = lhs.span.to(otherwise.span);
                lhs = Expr {
                    kind: ExprKind::Ternary {
                        cond: Box::new(lhs),
                        then: Box::new(then),
                        otherwise: Box::new(otherwise),
                    },
                    span,
                };
                continue;
            }
            let Some((op, l_bp, r_bp)) = binary_op(op_text) else { break };
            if l_bp < min_bp {
                break;
            }
            self.bump();
            let rhs = self.expr_bp(r_bp)?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr { kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let Some(t) = self.peek() else { return self.error(&["expression"]) };
        let start = t.span;
        let op = match (t.kind, t.text) {
            (TokenKind::Operator, "!") => Some(UnOp::Not),
            (TokenKind::Operator, "-") => Some(UnOp::Neg),
            (TokenKind::Operator, "~") => Some(UnOp::BitNot),
            (TokenKind::Operator, "++") => Some(UnOp::PreInc),
            (TokenKind::Operator, "--") => Some(UnOp::PreDec),
            (TokenKind::Keyword, "delete") => Some(UnOp::Delete),
            (TokenKind::Operator, "+") => {
                // unary plus is a no-op
                self.bump();
                return self.unary();
            }
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let operand = self.expr_bp(PREFIX_BP)?;
            let span = start.to(operand.span);
            return Ok(Expr { kind: ExprKind::Unary { op, operand: Box::new(operand) }, span });
        }
        let primary = self.primary()?;
        self.postfix(primary)
    }

    fn postfix(&mut self, mut e: Expr) -> PResult<Expr> {
        loop {
            if self.at_punct("(") {
                let args = self.call_args()?;
                let span = e.span.to(self.prev_span());
                e = Expr { kind: ExprKind::Call { callee: Box::new(e), args }, span };
            } else if self.at_punct("[") {
                self.bump();
                let index = if self.at_punct("]") { None } else { Some(Box::new(self.expr()?)) };
                let end = self.expect_punct("]")?;
                let span = e.span.to(end);
                e = Expr { kind: ExprKind::Index { base: Box::new(e), index }, span };
            } else if self.at_punct(".") {
                self.bump();
                let member = match self.peek() {
                    Some(t) if matches!(t.kind, TokenKind::Identifier | TokenKind::Keyword | TokenKind::EtherUnit) => {
                        self.bump()
                    }
                    _ => return self.error(&["member name"]),
                };
                let span = e.span.to(member.span);
                e = Expr { kind: ExprKind::Member { base: Box::new(e), member: member.text.to_string() }, span };
            } else if self.at_op("++") || self.at_op("--") {
                let t = self.bump();
                let op = if t.text == "++" { UnOp::PostInc } else { UnOp::PostDec };
                let span = e.span.to(t.span);
                e = Expr { kind: ExprKind::Unary { op, operand: Box::new(e) }, span };
            } else {
                return Ok(e);
            }
        }
    }

    fn call_args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if self.eat_punct(")") {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat_punct(",") {
                continue;
            }
            self.expect_punct(")")?;
            return Ok(args);
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let Some(t) = self.peek().cloned() else { return self.error(&["expression"]) };
        match t.kind {
            TokenKind::Number => {
                self.bump();
                let mut value = parse_number(t.text).ok_or_else(|| ParseError::Unexpected {
                    line: t.span.line,
                    column: t.span.column,
                    expected: vec!["number".into()],
                    found: format!("`{}`", t.text),
                })?;
                let mut unit = None;
                let mut span = t.span;
                if let Some(u) = self.peek() {
                    let is_unit = u.kind == TokenKind::EtherUnit
                        || (u.kind == TokenKind::Identifier && TIME_UNITS.contains(&u.text));
                    if is_unit {
                        let u = self.bump();
                        value *= BigRational::from_integer(unit_scale(u.text).unwrap_or_else(BigInt::one));
                        unit = Some(u.text.to_string());
                        span = span.to(u.span);
                    }
                }
                Ok(Expr { kind: ExprKind::Number(NumberLit { value, unit }), span })
            }
            TokenKind::StringLiteral => {
                self.bump();
                let mut text = t.text[1..t.text.len() - 1].to_string();
                let mut span = t.span;
                while let Some(next) = self.peek().filter(|n| n.kind == TokenKind::StringLiteral) {
                    text.push_str(&next.text[1..next.text.len() - 1]);
                    span = span.to(next.span);
                    self.bump();
                }
                Ok(Expr { kind: ExprKind::Str(text), span })
            }
            TokenKind::Identifier => {
                self.bump();
                // hex"..." / unicode"..." literals
                if (t.text == "hex" || t.text == "unicode")
                    && self.peek().is_some_and(|n| n.kind == TokenKind::StringLiteral)
                {
                    let s = self.bump();
                    return Ok(Expr {
                        kind: ExprKind::Str(s.text[1..s.text.len() - 1].to_string()),
                        span: t.span.to(s.span),
                    });
                }
                Ok(Expr { kind: ExprKind::Ident(t.text.to_string()), span: t.span })
            }
            TokenKind::Keyword => match t.text {
                "true" | "false" => {
                    self.bump();
                    Ok(Expr { kind: ExprKind::Bool(t.text == "true"), span: t.span })
                }
                "new" => {
                    self.bump();
                    let ty = self.type_name()?;
                    Ok(Expr { kind: ExprKind::New(ty), span: t.span.to(self.prev_span()) })
                }
                "payable" => {
                    self.bump();
                    Ok(Expr { kind: ExprKind::TypeExpr(TypeName::Elementary("payable".into())), span: t.span })
                }
                word if is_elementary_type(word) => {
                    self.bump();
                    let mut ty = TypeName::Elementary(word.to_string());
                    if word == "address" && self.at_kw("payable") {
                        self.bump();
                    }
                    // `uint[]` / `bytes32[2]` in `new` or casts
                    while self.at_punct("[") && self.peek_at(1).is_some_and(|n| n.is_punct("]")) {
                        self.bump();
                        self.bump();
                        ty = TypeName::Array(Box::new(ty), None);
                    }
                    Ok(Expr { kind: ExprKind::TypeExpr(ty), span: t.span.to(self.prev_span()) })
                }
                _ => self.error(&["expression"]),
            },
            TokenKind::Punctuation if t.text == "(" || t.text == "[" => {
                let close = if t.text == "(" { ")" } else { "]" };
                self.bump();
                let mut items = Vec::new();
                loop {
                    if self.at_punct(close) {
                        if !items.is_empty() || close == "]" {
                            items.push(None);
                        }
                        break;
                    }
                    if self.at_punct(",") {
                        items.push(None);
                        self.bump();
                        continue;
                    }
                    items.push(Some(self.expr()?));
                    if !self.eat_punct(",") {
                        break;
                    }
                    if self.at_punct(close) {
                        items.push(None);
                        break;
                    }
                }
                // `[]` parses to one empty slot; drop it
                if close == "]" && items.len() == 1 && items[0].is_none() {
                    items.clear();
                }
                let end = self.expect_punct(close)?;
                Ok(Expr { kind: ExprKind::Tuple(items), span: t.span.to(end) })
            }
            _ => self.error(&["expression"]),
        }
    }
}

const PREFIX_BP: u8 = 30;

fn assign_op(text: &str) -> Option<AssignOp> {
    Some(match text {
        "=" => AssignOp::Assign,
        "+=" => AssignOp::Add,
        "-=" => AssignOp::Sub,
        "*=" => AssignOp::Mul,
        "/=" => AssignOp::Div,
        "%=" => AssignOp::Mod,
        "|=" | "&=" | "^=" | "<<=" | ">>=" | ">>>=" | "**=" => AssignOp::Other,
        _ => return None,
    })
}

/// Operator and (left, right) binding powers; right-associative ops have r < l.
fn binary_op(text: &str) -> Option<(BinOp, u8, u8)> {
    use BinOp::*;
    Some(match text {
        "||" => (Or, 6, 7),
        "&&" => (And, 8, 9),
        "==" => (Eq, 10, 11),
        "!=" => (Ne, 10, 11),
        "<" => (Lt, 12, 13),
        "<=" => (Le, 12, 13),
        ">" => (Gt, 12, 13),
        ">=" => (Ge, 12, 13),
        "|" => (BitOr, 14, 15),
        "^" => (BitXor, 16, 17),
        "&" => (BitAnd, 18, 19),
        "<<" => (Shl, 20, 21),
        ">>" | ">>>" => (Shr, 20, 21),
        "+" => (Add, 22, 23),
        "-" => (Sub, 22, 23),
        "*" => (Mul, 24, 25),
        "/" => (Div, 24, 25),
        "%" => (Mod, 24, 25),
        "**" => (Pow, 27, 26),
        _ => return None,
    })
}

/// Decimal (with optional fraction/exponent) or hex literal, exactly.
fn parse_number(text: &str) -> Option<BigRational> {
    let clean: String = text.chars().filter(|c| *c != '_').collect();
    if let Some(hex) = clean.strip_prefix("0x").or_else(|| clean.strip_prefix("0X")) {
        let v = if hex.is_empty() { BigInt::from(0) } else { BigInt::parse_bytes(hex.as_bytes(), 16)? };
        return Some(BigRational::from_integer(v));
    }
    let (mantissa, exp) = match clean.find(['e', 'E']) {
        Some(i) => (&clean[..i], clean[i + 1..].parse::<i32>().ok()?),
        None => (clean.as_str(), 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
        None => (mantissa, ""),
    };
    let digits = format!("{int_part}{frac_part}");
    let digits = if digits.is_empty() { "0".to_string() } else { digits };
    let numer = BigInt::parse_bytes(digits.as_bytes(), 10)?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Some(if scale >= 0 {
        BigRational::from_integer(numer * Pow::pow(ten, scale as u32))
    } else {
        BigRational::new(numer, Pow::pow(ten, (-scale) as u32))
    })
}

fn end_position(src: &str) -> (u32, u32) {
    let line = src.matches('\n').count() as u32 + 1;
    let column = src.rsplit('\n').next().map(|l| l.chars().count()).unwrap_or(0) as u32 + 1;
    (line, column)
}
