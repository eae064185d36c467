//! Recursive-descent parser shared by the scalar, matrix and generator grammars.
//!
//! Text is parsed once into an [`Ast`]; each entry point then lowers the tree
//! into its own target type.

use thiserror::Error;

use super::node::{Expr, Func, Var};
use super::number::{parse_decimal, Number};
use super::sample::Scope;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("`{name}` at {pos} expects {expected} argument(s), got {found}")]
    Arity { name: String, expected: usize, found: usize, pos: usize },
    #[error("{what} at {pos} is not allowed here")]
    NotAllowed { what: String, pos: usize },
}

impl ParseError {
    pub fn syntax(pos: usize, msg: impl Into<String>) -> Self {
        ParseError::Syntax { pos, msg: msg.into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Ast {
    Num(Number, usize),
    Ident(String, usize),
    Call(String, Vec<Ast>, usize),
    Neg(Box<Ast>, usize),
    Bin(BinOp, Box<Ast>, Box<Ast>, usize),
}

impl Ast {
    pub fn pos(&self) -> usize {
        match self {
            Ast::Num(_, p) | Ast::Ident(_, p) | Ast::Call(_, _, p) | Ast::Neg(_, p) | Ast::Bin(_, _, _, p) => *p,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Number),
    Ident(String),
    Op(char),
    End,
}

/// Lexer options. In generator mode an identifier directly followed by `+(`
/// or `-(` absorbs the sign (`B3+(w)` names a catalog generator).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LexMode {
    pub signed_names: bool,
}

fn lex(text: &str, mode: LexMode) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut k = 0;
    while k < bytes.len() {
        let c = bytes[k] as char;
        if c.is_ascii_whitespace() {
            k += 1;
            continue;
        }
        let start = k;
        if c.is_ascii_digit() || (c == '.' && k + 1 < bytes.len() && (bytes[k + 1] as char).is_ascii_digit()) {
            while k < bytes.len() && ((bytes[k] as char).is_ascii_digit() || bytes[k] == b'.') {
                k += 1;
            }
            if k < bytes.len() && (bytes[k] == b'e' || bytes[k] == b'E') {
                let mut j = k + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                    k = j;
                    while k < bytes.len() && (bytes[k] as char).is_ascii_digit() {
                        k += 1;
                    }
                }
            }
            let lit = &text[start..k];
            let n = parse_decimal(lit).ok_or_else(|| ParseError::syntax(start, format!("bad number `{lit}`")))?;
            out.push((Tok::Num(n), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            while k < bytes.len() && ((bytes[k] as char).is_ascii_alphanumeric() || bytes[k] == b'_') {
                k += 1;
            }
            let mut name = text[start..k].to_string();
            if mode.signed_names
                && k + 1 < bytes.len()
                && (bytes[k] == b'+' || bytes[k] == b'-')
                && bytes[k + 1] == b'('
            {
                name.push(bytes[k] as char);
                k += 1;
            }
            out.push((Tok::Ident(name), start));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Op(c), start));
            k += 1;
        } else {
            return Err(ParseError::syntax(start, format!("unexpected character `{}`", text[start..].chars().next().unwrap())));
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    k: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.k].0
    }

    fn pos(&self) -> usize {
        self.toks[self.k].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.k].clone();
        if self.k + 1 < self.toks.len() {
            self.k += 1;
        }
        t
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Op(d) if *d == c => {
                self.bump();
                Ok(())
            }
            _ => Err(ParseError::syntax(self.pos(), format!("expected `{c}`"))),
        }
    }

    fn expr(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let pos = self.bump().1;
            let rhs = self.term()?;
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(rhs), pos);
        }
    }

    fn term(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            let pos = self.bump().1;
            let rhs = self.unary()?;
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(rhs), pos);
        }
    }

    fn unary(&mut self) -> Result<Ast, ParseError> {
        match self.peek() {
            Tok::Op('-') => {
                let pos = self.bump().1;
                Ok(Ast::Neg(Box::new(self.unary()?), pos))
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Ast, ParseError> {
        let base = self.atom()?;
        if let Tok::Op('^') = self.peek() {
            let pos = self.bump().1;
            let exp = self.unary()?;
            return Ok(Ast::Bin(BinOp::Pow, Box::new(base), Box::new(exp), pos));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Ast, ParseError> {
        let (tok, pos) = self.bump();
        match tok {
            Tok::Num(n) => Ok(Ast::Num(n, pos)),
            Tok::Ident(name) => {
                if let Tok::Op('(') = self.peek() {
                    self.bump();
                    let mut args = Vec::new();
                    if !matches!(self.peek(), Tok::Op(')')) {
                        loop {
                            args.push(self.expr()?);
                            if let Tok::Op(',') = self.peek() {
                                self.bump();
                                continue;
                            }
                            break;
                        }
                    }
                    self.expect(')')?;
                    Ok(Ast::Call(name, args, pos))
                } else {
                    Ok(Ast::Ident(name, pos))
                }
            }
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::End => Err(ParseError::syntax(pos, "unexpected end of input")),
            Tok::Op(c) => Err(ParseError::syntax(pos, format!("unexpected `{c}`"))),
        }
    }
}

/// Parses text into the shared syntax tree.
pub fn parse_ast(text: &str, mode: LexMode) -> Result<Ast, ParseError> {
    let toks = lex(text, mode)?;
    let mut p = Parser { toks, k: 0 };
    let e = p.expr()?;
    if !matches!(p.peek(), Tok::End) {
        return Err(ParseError::syntax(p.pos(), "trailing input"));
    }
    Ok(e)
}

/// Built-in scalar identifier, if `name` is one.
pub fn builtin_ident(name: &str) -> Option<Expr> {
    Some(match name {
        "t" => Expr::var(Var::T),
        "x1" => Expr::var(Var::X1),
        "x2" => Expr::var(Var::X2),
        "x3" => Expr::var(Var::X3),
        "r" => Expr::r(),
        "rt" => Expr::rt(),
        "phi" => Expr::phi(),
        "theta" => Expr::theta(),
        "i" => Expr::i(),
        _ => return None,
    })
}

/// Power `b^e`, with a non-constant or non-rational exponent written as `exp(e·ln b)`.
pub fn make_pow(b: Expr, e: Expr) -> Expr {
    if let Some(q) = e.as_number().and_then(Number::as_rational) {
        return b.pow(q);
    }
    Expr::exp(e.mul(&Expr::ln(b)))
}

/// Lowers a syntax tree to a scalar expression.
pub fn lower_scalar(ast: &Ast, scope: &Scope) -> Result<Expr, ParseError> {
    Ok(match ast {
        Ast::Num(n, _) => Expr::num(*n),
        Ast::Ident(name, pos) => {
            if let Some(e) = builtin_ident(name) {
                e
            } else if scope.params.contains(name) {
                Expr::param(name)
            } else {
                return Err(ParseError::UnknownIdentifier { name: name.clone(), pos: *pos });
            }
        }
        Ast::Call(name, args, pos) => {
            let lowered = args.iter().map(|a| lower_scalar(a, scope)).collect::<Result<Vec<_>, _>>()?;
            call_scalar(name, lowered, *pos, scope)?
        }
        Ast::Neg(a, _) => lower_scalar(a, scope)?.neg(),
        Ast::Bin(op, a, b, _) => {
            let (a, b) = (lower_scalar(a, scope)?, lower_scalar(b, scope)?);
            match op {
                BinOp::Add => a.add(&b),
                BinOp::Sub => a.sub(&b),
                BinOp::Mul => a.mul(&b),
                BinOp::Div => a.div(&b),
                BinOp::Pow => make_pow(a, b),
            }
        }
    })
}

/// Scalar function or placeholder call with already-lowered arguments.
pub fn call_scalar(name: &str, args: Vec<Expr>, pos: usize, scope: &Scope) -> Result<Expr, ParseError> {
    let arity = |expected: usize| {
        if args.len() == expected {
            Ok(())
        } else {
            Err(ParseError::Arity { name: name.to_string(), expected, found: args.len(), pos })
        }
    };
    if let Some(f) = Func::from_name(name) {
        arity(1)?;
        return Ok(Expr::func(f, args.into_iter().next().unwrap()));
    }
    if name == "atan2" {
        arity(2)?;
        let mut it = args.into_iter();
        return Ok(Expr::atan2(it.next().unwrap(), it.next().unwrap()));
    }
    if let Some(&n) = scope.placeholders.get(name) {
        arity(n)?;
        return Ok(Expr::apply(name, args));
    }
    Err(ParseError::UnknownIdentifier { name: name.to_string(), pos })
}

/// Parses a scalar potential-grammar expression.
pub fn parse(text: &str, scope: &Scope) -> Result<Expr, ParseError> {
    lower_scalar(&parse_ast(text, LexMode::default())?, scope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::sample::ParamTable;

    fn scope() -> Scope {
        Scope::new(ParamTable::reserved()).with_placeholder("G", 2)
    }

    #[test]
    fn precedence_and_unary_minus() {
        let s = scope();
        let e = parse("-x1^2 + 2*x2/4", &s).unwrap();
        assert_eq!(e.to_string(), "-x1^2 + (1/2)*x2");
        let e = parse("2^-1", &s).unwrap();
        assert_eq!(e, Expr::rat(1, 2));
    }

    #[test]
    fn shorthands_expand() {
        let s = scope();
        assert_eq!(parse("kappa*phi", &s).unwrap(), Expr::param("kappa").mul(&Expr::atan2(Expr::x(2), Expr::x(1))));
        let g = parse("G(rt, x3 - phi)", &s).unwrap();
        assert_eq!(g, Expr::apply("G", vec![Expr::rt(), Expr::x(3).sub(&Expr::phi())]));
    }

    #[test]
    fn errors_carry_positions() {
        let s = scope();
        assert_eq!(
            parse("x1 + foo", &s),
            Err(ParseError::UnknownIdentifier { name: "foo".into(), pos: 5 })
        );
        assert!(matches!(parse("G(x1)", &s), Err(ParseError::Arity { expected: 2, found: 1, .. })));
        assert!(matches!(parse("x1 + ", &s), Err(ParseError::Syntax { pos: 5, .. })));
        assert!(matches!(parse("(x1", &s), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("x1 $ 2", &s), Err(ParseError::Syntax { pos: 3, .. })));
    }

    #[test]
    fn signed_names_only_in_generator_mode() {
        let a = parse_ast("B3+(w)", LexMode { signed_names: true }).unwrap();
        assert!(matches!(a, Ast::Call(ref n, _, _) if n == "B3+"));
        let b = parse_ast("x1+(x2)", LexMode::default()).unwrap();
        assert!(matches!(b, Ast::Bin(BinOp::Add, ..)));
    }

    #[test]
    fn symbolic_exponent_goes_through_logarithm() {
        let s = scope();
        let e = parse("r^kappa", &s).unwrap();
        assert_eq!(e, Expr::exp(Expr::param("kappa").mul(&Expr::ln(Expr::r()))));
    }
}
