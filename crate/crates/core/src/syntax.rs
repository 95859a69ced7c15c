//! Textual syntax for concepts.
//!
//! ```text
//! concept   := or_expr
//! or_expr   := and_expr { "or" and_expr }
//! and_expr  := unary { "and" unary }
//! unary     := "not" unary | role_expr | atom
//! role_expr := IDENT ("some" | "only") unary
//! atom      := "Thing" | "Nothing" | IDENT | "(" concept ")"
//! ```
//!
//! Keywords are case-sensitive. `not` binds tighter than `some`/`only`, which
//! bind tighter than `and`, which binds tighter than `or`.

use thiserror::Error;

use crate::concept::Concept;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown token {found:?} at position {position}")]
    UnknownToken { position: usize, found: char },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    LParen,
    RParen,
    Not,
    And,
    Or,
    Some,
    Only,
    Thing,
    Nothing,
    Ident(String),
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::Not => "`not`".into(),
            Token::And => "`and`".into(),
            Token::Or => "`or`".into(),
            Token::Some => "`some`".into(),
            Token::Only => "`only`".into(),
            Token::Thing => "`Thing`".into(),
            Token::Nothing => "`Nothing`".into(),
            Token::Ident(s) => format!("identifier `{s}`"),
        }
    }
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':' | '/')
}

fn keyword(word: &str) -> Option<Token> {
    Some(match word {
        "not" => Token::Not,
        "and" => Token::And,
        "or" => Token::Or,
        "some" => Token::Some,
        "only" => Token::Only,
        "Thing" => Token::Thing,
        "Nothing" => Token::Nothing,
        _ => return None,
    })
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '(' {
            tokens.push((pos, Token::LParen));
            chars.next();
        } else if c == ')' {
            tokens.push((pos, Token::RParen));
            chars.next();
        } else if is_ident_char(c) {
            let mut end = pos;
            while let Some(&(i, c)) = chars.peek() {
                if !is_ident_char(c) {
                    break;
                }
                end = i + c.len_utf8();
                chars.next();
            }
            let word = &text[pos..end];
            tokens.push((pos, keyword(word).unwrap_or_else(|| Token::Ident(word.to_string()))));
        } else {
            return Err(ParseError::UnknownToken { position: pos, found: c });
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    index: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.index).map(|(_, t)| t)
    }

    fn peek_at(&self, offset: usize) -> Option<&Token> {
        self.tokens.get(self.index + offset).map(|(_, t)| t)
    }

    fn position(&self) -> usize {
        self.tokens.get(self.index).map_or(self.end, |(p, _)| *p)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { position: self.position(), message: message.into() }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some(t) => self.error(format!("expected {expected}, found {}", t.describe())),
            None => self.error(format!("expected {expected}, found end of input")),
        }
    }

    fn concept(&mut self) -> Result<Concept, ParseError> {
        let mut left = self.and_expr()?;
        while self.peek() == Some(&Token::Or) {
            self.index += 1;
            let right = self.and_expr()?;
            left = Concept::or(left, right);
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<Concept, ParseError> {
        let mut left = self.unary()?;
        while self.peek() == Some(&Token::And) {
            self.index += 1;
            let right = self.unary()?;
            left = Concept::and(left, right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Concept, ParseError> {
        match self.peek() {
            Some(Token::Not) => {
                self.index += 1;
                Ok(Concept::not(self.unary()?))
            }
            Some(Token::Ident(role)) if matches!(self.peek_at(1), Some(Token::Some | Token::Only)) => {
                let role = role.clone();
                let existential = self.peek_at(1) == Some(&Token::Some);
                self.index += 2;
                let filler = self.unary()?;
                Ok(if existential { Concept::exists(role, filler) } else { Concept::forall(role, filler) })
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Concept, ParseError> {
        let concept = match self.peek() {
            Some(Token::Thing) => Concept::Top,
            Some(Token::Nothing) => Concept::Bottom,
            Some(Token::Ident(name)) => Concept::named(name.as_str()),
            Some(Token::LParen) => {
                self.index += 1;
                let inner = self.concept()?;
                if self.peek() != Some(&Token::RParen) {
                    return Err(self.unexpected("`)`"));
                }
                inner
            }
            _ => return Err(self.unexpected("a concept")),
        };
        self.index += 1;
        Ok(concept)
    }
}

/// Parses a concept written in the surface syntax described in the module docs.
pub fn parse_concept(text: &str) -> Result<Concept, ParseError> {
    let mut parser = Parser { tokens: tokenize(text)?, index: 0, end: text.len() };
    let concept = parser.concept()?;
    if parser.peek().is_some() {
        return Err(parser.unexpected("end of input"));
    }
    Ok(concept)
}

const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_UNARY: u8 = 3;

/// Renders a concept with the fewest parentheses that still parse back to the
/// same tree.
pub fn render_concept(c: &Concept) -> String {
    let mut out = String::new();
    render_into(c, 0, &mut out);
    out
}

fn precedence(c: &Concept) -> u8 {
    match c {
        Concept::Or(..) => PREC_OR,
        Concept::And(..) => PREC_AND,
        _ => PREC_UNARY,
    }
}

fn render_into(c: &Concept, min_prec: u8, out: &mut String) {
    let wrap = precedence(c) < min_prec;
    if wrap {
        out.push('(');
    }
    match c {
        Concept::Top => out.push_str("Thing"),
        Concept::Bottom => out.push_str("Nothing"),
        Concept::Named(name) => out.push_str(name),
        Concept::Not(x) => {
            out.push_str("not ");
            render_into(x, PREC_UNARY, out);
        }
        // Left-associative: a same-precedence right operand needs parentheses.
        Concept::Or(x, y) => {
            render_into(x, PREC_OR, out);
            out.push_str(" or ");
            render_into(y, PREC_AND, out);
        }
        Concept::And(x, y) => {
            render_into(x, PREC_AND, out);
            out.push_str(" and ");
            render_into(y, PREC_UNARY, out);
        }
        Concept::Exists(role, x) => {
            out.push_str(role);
            out.push_str(" some ");
            render_into(x, PREC_UNARY, out);
        }
        Concept::Forall(role, x) => {
            out.push_str(role);
            out.push_str(" only ");
            render_into(x, PREC_UNARY, out);
        }
    }
    if wrap {
        out.push(')');
    }
}
