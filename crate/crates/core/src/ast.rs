//! Syntax tree for the supported Solidity subset.
//!
//! Every node records the byte span it was parsed from. Contracts keep a
//! shared handle on the file text so analyses that only see a
//! [`ContractDef`] can still quote source snippets.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

/// Byte range into the source plus the 1-based line/column of its start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub column: u32,
}

impl Span {
    /// Smallest span covering both `self` and `other`.
    pub fn to(self, other: Span) -> Span {
        if other.end <= self.start {
            return Span { start: other.start, end: self.end, line: other.line, column: other.column };
        }
        Span { start: self.start, end: self.end.max(other.end), line: self.line, column: self.column }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

pub trait Spanned {
    fn span(&self) -> Span;
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceUnit {
    pub source: Arc<str>,
    /// `pragma` directives, verbatim without the trailing `;`.
    pub pragmas: Vec<String>,
    pub contracts: Vec<ContractDef>,
}

impl SourceUnit {
    pub fn contract(&self, name: &str) -> Option<&ContractDef> {
        self.contracts.iter().find(|c| c.name == name)
    }
}

impl Spanned for SourceUnit {
    fn span(&self) -> Span {
        Span { start: 0, end: self.source.len(), line: 1, column: 1 }
    }
}

/// Verbatim source text of `node`.
pub fn span_text<'a, N: Spanned + ?Sized>(unit: &'a SourceUnit, node: &N) -> &'a str {
    let span = node.span();
    &unit.source[span.start..span.end]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContractKind {
    Contract,
    Library,
    Interface,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractDef {
    pub kind: ContractKind,
    pub name: String,
    pub bases: Vec<String>,
    pub structs: Vec<StructDef>,
    pub state_vars: Vec<StateVarDef>,
    pub functions: Vec<FunctionDef>,
    pub modifiers: Vec<ModifierDef>,
    pub events: Vec<String>,
    pub span: Span,
    pub(crate) source: Arc<str>,
}

impl ContractDef {
    /// Source text under `span`; empty if the span does not belong to this file.
    pub fn text(&self, span: Span) -> &str {
        self.source.get(span.start..span.end).unwrap_or("")
    }

    pub fn state_var(&self, name: &str) -> Option<&StateVarDef> {
        self.state_vars.iter().find(|v| v.name == name)
    }

    pub fn struct_def(&self, name: &str) -> Option<&StructDef> {
        self.structs.iter().find(|s| s.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name() == name)
    }

    pub fn fallback(&self) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.kind == FunctionKind::Fallback)
    }

    /// Functions and modifier bodies, in declaration order of each list.
    pub fn bodies(&self) -> impl Iterator<Item = Body<'_>> {
        self.functions
            .iter()
            .filter_map(|f| {
                f.body.as_ref().map(|b| Body { name: f.name(), kind: Some(&f.kind), params: &f.params, stmts: b })
            })
            .chain(self.modifiers.iter().map(|m| Body {
                name: m.name.clone(),
                kind: None,
                params: &m.params,
                stmts: &m.body,
            }))
    }
}

impl Spanned for ContractDef {
    fn span(&self) -> Span {
        self.span
    }
}

/// A function or modifier body together with the name findings are reported under.
#[derive(Debug, Clone)]
pub struct Body<'a> {
    pub name: String,
    /// `None` for modifiers.
    pub kind: Option<&'a FunctionKind>,
    pub params: &'a [Param],
    pub stmts: &'a [Stmt],
}

impl Body<'_> {
    pub fn is_constructor(&self) -> bool {
        matches!(self.kind, Some(FunctionKind::Constructor))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructDef {
    pub name: String,
    pub fields: Vec<Param>,
    pub span: Span,
}

impl StructDef {
    pub fn has_field_of(&self, pred: impl Fn(&TypeName) -> bool) -> bool {
        self.fields.iter().any(|f| pred(&f.ty))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVarDef {
    pub name: String,
    pub ty: TypeName,
    pub visibility: Option<Visibility>,
    pub constant: bool,
    pub initializer: Option<Expr>,
    pub span: Span,
}

impl Spanned for StateVarDef {
    fn span(&self) -> Span {
        self.span
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Visibility {
    Public,
    Private,
    Internal,
    External,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeName {
    Elementary(String),
    /// Struct, contract or enum name, possibly dotted.
    UserDefined(String),
    Mapping(Box<TypeName>, Box<TypeName>),
    /// `None` length means a dynamic array.
    Array(Box<TypeName>, Option<Box<Expr>>),
}

impl TypeName {
    pub fn is_address(&self) -> bool {
        matches!(self, TypeName::Elementary(t) if t == "address")
    }

    pub fn is_unsigned(&self) -> bool {
        matches!(self, TypeName::Elementary(t) if t.starts_with("uint"))
    }

    pub fn is_dynamic_array(&self) -> bool {
        matches!(self, TypeName::Array(_, None))
    }
}

impl fmt::Display for TypeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeName::Elementary(t) | TypeName::UserDefined(t) => f.write_str(t),
            TypeName::Mapping(k, v) => write!(f, "mapping({k} => {v})"),
            TypeName::Array(t, None) => write!(f, "{t}[]"),
            TypeName::Array(t, Some(len)) => write!(f, "{t}[{len}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub ty: TypeName,
    pub name: Option<String>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FunctionKind {
    Named(String),
    Constructor,
    Fallback,
    Receive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub kind: FunctionKind,
    pub params: Vec<Param>,
    pub returns: Vec<Param>,
    pub visibility: Option<Visibility>,
    pub payable: bool,
    pub view: bool,
    pub modifiers: Vec<ModifierInvocation>,
    /// `None` for declarations without a body.
    pub body: Option<Vec<Stmt>>,
    pub span: Span,
}

impl FunctionDef {
    /// Name used in reports: the declared name, or `fallback` / `constructor` / `receive`.
    pub fn name(&self) -> String {
        match &self.kind {
            FunctionKind::Named(n) => n.clone(),
            FunctionKind::Constructor => "constructor".into(),
            FunctionKind::Fallback => "fallback".into(),
            FunctionKind::Receive => "receive".into(),
        }
    }
}

impl Spanned for FunctionDef {
    fn span(&self) -> Span {
        self.span
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModifierDef {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModifierInvocation {
    pub name: String,
    pub args: Vec<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

impl Spanned for Stmt {
    fn span(&self) -> Span {
        self.span
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Block(Vec<Stmt>),
    If {
        cond: Expr,
        then: Box<Stmt>,
        otherwise: Option<Box<Stmt>>,
    },
    While {
        cond: Expr,
        body: Box<Stmt>,
    },
    DoWhile {
        body: Box<Stmt>,
        cond: Expr,
    },
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        update: Option<Expr>,
        body: Box<Stmt>,
    },
    Expr(Expr),
    /// `T name [= init];`. `ty` is `None` for `var`.
    VarDecl {
        ty: Option<TypeName>,
        name: String,
        init: Option<Expr>,
    },
    Return(Option<Expr>),
    Emit(Expr),
    Throw,
    Break,
    Continue,
    /// The `_;` placeholder inside a modifier.
    Placeholder,
    /// Inline assembly; the text is available through the span.
    Assembly,
    /// A balanced region the parser does not model; the text is available through the span.
    Opaque,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Spanned for Expr {
    fn span(&self) -> Span {
        self.span
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Number(NumberLit),
    Bool(bool),
    Str(String),
    Ident(String),
    /// Elementary type used as a value, e.g. the callee in `uint256(x)`.
    TypeExpr(TypeName),
    Member {
        base: Box<Expr>,
        member: String,
    },
    Index {
        base: Box<Expr>,
        index: Option<Box<Expr>>,
    },
    Call {
        callee: Box<Expr>,
        args: Vec<Expr>,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Unary {
        op: UnOp,
        operand: Box<Expr>,
    },
    Assign {
        op: AssignOp,
        target: Box<Expr>,
        value: Box<Expr>,
    },
    Ternary {
        cond: Box<Expr>,
        then: Box<Expr>,
        otherwise: Box<Expr>,
    },
    Tuple(Vec<Option<Expr>>),
    New(TypeName),
}

/// A numeric literal with its unit already applied (`500 finney` holds 5×10^17).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumberLit {
    pub value: BigRational,
    pub unit: Option<String>,
}

impl NumberLit {
    pub fn integer(&self) -> Option<BigInt> {
        self.value.is_integer().then(|| self.value.to_integer())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Pow,
    Shl,
    Shr,
    BitAnd,
    BitOr,
    BitXor,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        use BinOp::*;
        match self {
            Add => "+",
            Sub => "-",
            Mul => "*",
            Div => "/",
            Mod => "%",
            Pow => "**",
            Shl => "<<",
            Shr => ">>",
            BitAnd => "&",
            BitOr => "|",
            BitXor => "^",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            Eq => "==",
            Ne => "!=",
            And => "&&",
            Or => "||",
        }
    }

    pub fn is_relational(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
    BitNot,
    PreInc,
    PreDec,
    PostInc,
    PostDec,
    Delete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssignOp {
    Assign,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Other,
}

impl AssignOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AssignOp::Assign => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
            AssignOp::Mod => "%=",
            AssignOp::Other => "op=",
        }
    }
}

impl Expr {
    /// `receiver.method(args)` view of a call.
    pub fn as_method_call(&self) -> Option<(&Expr, &str, &[Expr])> {
        match &self.kind {
            ExprKind::Call { callee, args } => match &callee.kind {
                ExprKind::Member { base, member } => Some((base, member.as_str(), args.as_slice())),
                _ => None,
            },
            _ => None,
        }
    }

    /// `name(args)` view of a call to a plain identifier.
    pub fn as_named_call(&self) -> Option<(&str, &[Expr])> {
        match &self.kind {
            ExprKind::Call { callee, args } => match &callee.kind {
                ExprKind::Ident(name) => Some((name.as_str(), args.as_slice())),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn as_ident(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Ident(n) => Some(n),
            _ => None,
        }
    }

    /// Is this `a.b` with the given names?
    pub fn is_member(&self, base: &str, member: &str) -> bool {
        matches!(&self.kind, ExprKind::Member { base: b, member: m } if m == member && b.as_ident() == Some(base))
    }

    pub fn is_msg_value(&self) -> bool {
        self.is_member("msg", "value")
    }

    pub fn is_msg_sender(&self) -> bool {
        self.is_member("msg", "sender")
    }

    /// Strips redundant parentheses: `((x))` is `x`.
    pub fn unparen(&self) -> &Expr {
        match &self.kind {
            ExprKind::Tuple(items) if items.len() == 1 && items[0].is_some() => items[0].as_ref().unwrap().unparen(),
            _ => self,
        }
    }

    /// The variable an lvalue ultimately writes to: `a` for `a[i].f`.
    pub fn root_ident(&self) -> Option<&str> {
        match &self.unparen().kind {
            ExprKind::Ident(n) => Some(n),
            ExprKind::Member { base, .. } | ExprKind::Index { base, .. } => base.root_ident(),
            _ => None,
        }
    }

    /// Pre-order traversal over this expression and all sub-expressions.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Member { base, .. } => base.walk(f),
            ExprKind::Index { base, index } => {
                base.walk(f);
                if let Some(i) = index {
                    i.walk(f);
                }
            }
            ExprKind::Call { callee, args } => {
                callee.walk(f);
                args.iter().for_each(|a| a.walk(f));
            }
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            ExprKind::Unary { operand, .. } => operand.walk(f),
            ExprKind::Assign { target, value, .. } => {
                target.walk(f);
                value.walk(f);
            }
            ExprKind::Ternary { cond, then, otherwise } => {
                cond.walk(f);
                then.walk(f);
                otherwise.walk(f);
            }
            ExprKind::Tuple(items) => items.iter().flatten().for_each(|e| e.walk(f)),
            ExprKind::TypeExpr(TypeName::Array(_, Some(len))) => len.walk(f),
            _ => {}
        }
    }

    pub fn any(&self, mut pred: impl FnMut(&Expr) -> bool) -> bool {
        let mut found = false;
        self.walk(&mut |e| found = found || pred(e));
        found
    }

    pub fn mentions_ident(&self, name: &str) -> bool {
        self.any(|e| e.as_ident() == Some(name))
    }
}

/// Canonical rendering, independent of the original whitespace.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Number(n) => match &n.unit {
                Some(u) => {
                    let unit_scale = crate::fold::unit_scale(u).unwrap_or_else(|| BigInt::from(1));
                    write!(f, "{} {u}", n.value.clone() / BigRational::from_integer(unit_scale))
                }
                None => write!(f, "{}", n.value),
            },
            ExprKind::Bool(b) => write!(f, "{b}"),
            ExprKind::Str(s) => write!(f, "{s}"),
            ExprKind::Ident(n) => f.write_str(n),
            ExprKind::TypeExpr(t) => write!(f, "{t}"),
            ExprKind::Member { base, member } => write!(f, "{base}.{member}"),
            ExprKind::Index { base, index: Some(i) } => write!(f, "{base}[{i}]"),
            ExprKind::Index { base, index: None } => write!(f, "{base}[]"),
            ExprKind::Call { callee, args } => {
                write!(f, "{callee}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            ExprKind::Binary { op, lhs, rhs } => write!(f, "{lhs} {} {rhs}", op.symbol()),
            ExprKind::Unary { op, operand } => match op {
                UnOp::Not => write!(f, "!{operand}"),
                UnOp::Neg => write!(f, "-{operand}"),
                UnOp::BitNot => write!(f, "~{operand}"),
                UnOp::PreInc => write!(f, "++{operand}"),
                UnOp::PreDec => write!(f, "--{operand}"),
                UnOp::PostInc => write!(f, "{operand}++"),
                UnOp::PostDec => write!(f, "{operand}--"),
                UnOp::Delete => write!(f, "delete {operand}"),
            },
            ExprKind::Assign { op, target, value } => write!(f, "{target} {} {value}", op.symbol()),
            ExprKind::Ternary { cond, then, otherwise } => write!(f, "{cond} ? {then} : {otherwise}"),
            ExprKind::Tuple(items) => {
                f.write_str("(")?;
                for (i, a) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    if let Some(a) = a {
                        write!(f, "{a}")?;
                    }
                }
                f.write_str(")")
            }
            ExprKind::New(t) => write!(f, "new {t}"),
        }
    }
}

impl Stmt {
    /// Pre-order traversal over this statement and nested statements.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        match &self.kind {
            StmtKind::Block(stmts) => stmts.iter().for_each(|s| s.walk(f)),
            StmtKind::If { then, otherwise, .. } => {
                then.walk(f);
                if let Some(o) = otherwise {
                    o.walk(f);
                }
            }
            StmtKind::While { body, .. } | StmtKind::DoWhile { body, .. } => body.walk(f),
            StmtKind::For { init, body, .. } => {
                if let Some(i) = init {
                    i.walk(f);
                }
                body.walk(f);
            }
            _ => {}
        }
    }

    /// Expressions owned directly by this statement (not by nested statements).
    pub fn own_exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } | StmtKind::DoWhile { cond, .. } => vec![cond],
            StmtKind::For { cond, update, .. } => cond.iter().chain(update.iter()).collect(),
            StmtKind::Expr(e) | StmtKind::Emit(e) => vec![e],
            StmtKind::VarDecl { init, .. } => init.iter().collect(),
            StmtKind::Return(e) => e.iter().collect(),
            _ => Vec::new(),
        }
    }

    pub fn is_loop(&self) -> bool {
        matches!(self.kind, StmtKind::While { .. } | StmtKind::DoWhile { .. } | StmtKind::For { .. })
    }
}

/// Every expression (at any depth) in a statement list.
pub fn walk_exprs<'a>(stmts: &'a [Stmt], f: &mut dyn FnMut(&'a Expr)) {
    for s in stmts {
        s.walk(&mut |st| {
            for e in st.own_exprs() {
                e.walk(f);
            }
        });
    }
}
