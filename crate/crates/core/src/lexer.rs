//! Tokenizer for the Solidity subset understood by the front end.
//!
//! Comments are dropped, everything else becomes a [`Token`] whose `text` is
//! the exact source slice it was cut from.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Keyword,
    Identifier,
    Number,
    EtherUnit,
    StringLiteral,
    Operator,
    Punctuation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    pub span: Span,
}

impl Token<'_> {
    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }

    pub fn is_punct(&self, text: &str) -> bool {
        self.is(TokenKind::Punctuation, text)
    }

    pub fn is_op(&self, text: &str) -> bool {
        self.is(TokenKind::Operator, text)
    }

    pub fn is_keyword(&self, text: &str) -> bool {
        self.is(TokenKind::Keyword, text)
    }
}

impl fmt::Display for Token<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} `{}` at {}:{}", self.kind, self.text, self.span.line, self.span.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("{line}:{column}: unexpected character {found:?}")]
    UnexpectedChar { line: u32, column: u32, found: char },
    #[error("{line}:{column}: unterminated {what}")]
    Unterminated { line: u32, column: u32, what: &'static str },
}

impl LexError {
    pub fn position(&self) -> (u32, u32) {
        match *self {
            LexError::UnexpectedChar { line, column, .. } => (line, column),
            LexError::Unterminated { line, column, .. } => (line, column),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "abstract",
    "anonymous",
    "assembly",
    "break",
    "calldata",
    "constant",
    "constructor",
    "continue",
    "contract",
    "delete",
    "do",
    "else",
    "emit",
    "enum",
    "event",
    "external",
    "fallback",
    "false",
    "for",
    "function",
    "if",
    "immutable",
    "import",
    "indexed",
    "interface",
    "internal",
    "is",
    "library",
    "mapping",
    "memory",
    "modifier",
    "new",
    "override",
    "payable",
    "pragma",
    "private",
    "public",
    "pure",
    "receive",
    "return",
    "returns",
    "storage",
    "struct",
    "throw",
    "true",
    "using",
    "var",
    "view",
    "virtual",
    "while",
];

pub const ETHER_UNITS: &[&str] = &["wei", "gwei", "szabo", "finney", "ether"];

/// Elementary type names: `address`, `bool`, `string`, `byte`, `bytes`,
/// `bytesN`, `uint`, `uintN`, `int`, `intN`.
pub fn is_elementary_type(word: &str) -> bool {
    fn sized(rest: &str, max: u32, step: u32) -> bool {
        rest.is_empty()
            || (!rest.starts_with('0')
                && rest.parse::<u32>().map(|n| n >= step && n <= max && n % step == 0).unwrap_or(false))
    }
    match word {
        "address" | "bool" | "string" | "byte" | "bytes" => true,
        _ => {
            if let Some(rest) = word.strip_prefix("uint") {
                sized(rest, 256, 8)
            } else if let Some(rest) = word.strip_prefix("int") {
                sized(rest, 256, 8)
            } else if let Some(rest) = word.strip_prefix("bytes") {
                sized(rest, 32, 1)
            } else {
                false
            }
        }
    }
}

// Longest match first.
const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "**=", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=", "%=",
    "|=", "&=", "^=", "<<", ">>", "**", "=>", ":=", "+", "-", "*", "/", "%", "<", ">", "=", "!", "~", "&", "|", "^",
    "?", ":",
];

const PUNCTUATION: &[char] = &['(', ')', '{', '}', '[', ']', ';', ',', '.'];

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    column: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '$'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

/// Splits `source` into tokens, dropping whitespace and comments.
pub fn tokenize(source: &str) -> Result<Vec<Token<'_>>, LexError> {
    let mut cur = Cursor { src: source, pos: 0, line: 1, column: 1 };
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let (start, line, column) = (cur.pos, cur.line, cur.column);

        if cur.rest().starts_with("//") {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        if cur.rest().starts_with("/*") {
            cur.bump();
            cur.bump();
            loop {
                if cur.rest().starts_with("*/") {
                    cur.bump();
                    cur.bump();
                    break;
                }
                if cur.bump().is_none() {
                    return Err(LexError::Unterminated { line, column, what: "block comment" });
                }
            }
            continue;
        }

        let kind = if is_ident_start(c) {
            while cur.peek().is_some_and(is_ident_continue) {
                cur.bump();
            }
            let word = &source[start..cur.pos];
            if ETHER_UNITS.contains(&word) {
                TokenKind::EtherUnit
            } else if KEYWORDS.contains(&word) || is_elementary_type(word) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            }
        } else if c.is_ascii_digit() || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            lex_number(&mut cur);
            TokenKind::Number
        } else if c == '"' || c == '\'' {
            cur.bump();
            loop {
                match cur.bump() {
                    None | Some('\n') => return Err(LexError::Unterminated { line, column, what: "string literal" }),
                    Some('\\') => {
                        cur.bump();
                    }
                    Some(q) if q == c => break,
                    Some(_) => {}
                }
            }
            TokenKind::StringLiteral
        } else if PUNCTUATION.contains(&c) {
            cur.bump();
            TokenKind::Punctuation
        } else if let Some(op) = OPERATORS.iter().find(|op| cur.rest().starts_with(**op)) {
            for _ in 0..op.len() {
                cur.bump();
            }
            TokenKind::Operator
        } else {
            return Err(LexError::UnexpectedChar { line, column, found: c });
        };

        tokens.push(Token { kind, text: &source[start..cur.pos], span: Span { start, end: cur.pos, line, column } });
    }
    Ok(tokens)
}

fn lex_number(cur: &mut Cursor<'_>) {
    if cur.rest().starts_with("0x") || cur.rest().starts_with("0X") {
        cur.bump();
        cur.bump();
        while cur.peek().is_some_and(|c| c.is_ascii_hexdigit() || c == '_') {
            cur.bump();
        }
        return;
    }
    while cur.peek().is_some_and(|c| c.is_ascii_digit() || c == '_') {
        cur.bump();
    }
    if cur.peek() == Some('.') && cur.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
        cur.bump();
        while cur.peek().is_some_and(|c| c.is_ascii_digit() || c == '_') {
            cur.bump();
        }
    }
    if matches!(cur.peek(), Some('e' | 'E'))
        && (cur.peek_at(1).is_some_and(|c| c.is_ascii_digit())
            || (cur.peek_at(1) == Some('-') && cur.peek_at(2).is_some_and(|c| c.is_ascii_digit())))
    {
        cur.bump();
        if cur.peek() == Some('-') {
            cur.bump();
        }
        while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            cur.bump();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, &str)> {
        tokenize(src).unwrap().into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn unit_literal_declaration() {
        use TokenKind::*;
        assert_eq!(
            kinds("uint x = 1 ether;"),
            vec![
                (Keyword, "uint"),
                (Identifier, "x"),
                (Operator, "="),
                (Number, "1"),
                (EtherUnit, "ether"),
                (Punctuation, ";")
            ]
        );
    }

    #[test]
    fn invalid_character_is_reported_with_position() {
        let err = tokenize("uint y = §;").unwrap_err();
        assert_eq!(err, LexError::UnexpectedChar { line: 1, column: 10, found: '§' });
    }

    #[test]
    fn comments_are_dropped_and_positions_kept() {
        let toks = tokenize("// header\n/* block\n comment */ a /* x */ += 0x0; // tail").unwrap();
        let texts: Vec<_> = toks.iter().map(|t| t.text).collect();
        assert_eq!(texts, ["a", "+=", "0x0", ";"]);
        assert_eq!((toks[0].span.line, toks[0].span.column), (3, 13));
        assert_eq!(toks[2].kind, TokenKind::Number);
    }

    #[test]
    fn strings_may_contain_anything() {
        let toks = tokenize(r#"require(x, "sorry § humans \"only\"");"#).unwrap();
        assert_eq!(toks[4].kind, TokenKind::StringLiteral);
        assert_eq!(toks[4].text, r#""sorry § humans \"only\"""#);
    }

    #[test]
    fn unterminated_things() {
        assert!(matches!(tokenize("/* open"), Err(LexError::Unterminated { what: "block comment", .. })));
        assert!(matches!(tokenize("x = \"abc"), Err(LexError::Unterminated { what: "string literal", .. })));
    }

    #[test]
    fn numbers() {
        let texts: Vec<_> = tokenize("0.5 1e18 1_000 0xdeadBEEF 0.4.24").unwrap().into_iter().map(|t| t.text).collect();
        assert_eq!(texts, ["0.5", "1e18", "1_000", "0xdeadBEEF", "0.4", ".24"]);
    }

    #[test]
    fn elementary_types() {
        for ok in ["uint", "uint8", "uint256", "int128", "bytes32", "bytes1", "address", "bool"] {
            assert!(is_elementary_type(ok), "{ok}");
        }
        for bad in ["uint7", "uint512", "bytes33", "uint08", "Amount", "int0"] {
            assert!(!is_elementary_type(bad), "{bad}");
        }
    }

    #[test]
    fn longest_operator_wins() {
        let texts: Vec<_> = tokenize("a>>=b<<c**d=>e:=f").unwrap().into_iter().map(|t| t.text).collect();
        assert_eq!(texts, ["a", ">>=", "b", "<<", "c", "**", "d", "=>", "e", ":=", "f"]);
    }
}
