//! Arithmetic expressions over a declared, ordered list of variables.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ['^' unary]
//! atom   := number | ident | '(' expr ')' | ('ln' | 'exp') '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x^2`
//! is `-(x^2)` and `2^-x` is `2^(-x)`.

use std::fmt;

use crate::deriv::Scalar;
use crate::error::{GtdError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ExprAst {
    Const(f64),
    Var(usize),
    Neg(Box<ExprAst>),
    Add(Box<ExprAst>, Box<ExprAst>),
    Sub(Box<ExprAst>, Box<ExprAst>),
    Mul(Box<ExprAst>, Box<ExprAst>),
    Div(Box<ExprAst>, Box<ExprAst>),
    Pow(Box<ExprAst>, Box<ExprAst>),
    Ln(Box<ExprAst>),
    Exp(Box<ExprAst>),
}

impl ExprAst {
    pub fn eval<S: Scalar>(&self, vars: &[S], proto: &S) -> Result<S> {
        Ok(match self {
            ExprAst::Const(c) => proto.constant_like(*c),
            ExprAst::Var(i) => vars.get(*i).cloned().ok_or(GtdError::IndexOutOfRange {
                index: *i,
                dim: vars.len(),
            })?,
            ExprAst::Neg(a) => -a.eval(vars, proto)?,
            ExprAst::Add(a, b) => a.eval(vars, proto)? + b.eval(vars, proto)?,
            ExprAst::Sub(a, b) => a.eval(vars, proto)? - b.eval(vars, proto)?,
            ExprAst::Mul(a, b) => a.eval(vars, proto)? * b.eval(vars, proto)?,
            ExprAst::Div(a, b) => a.eval(vars, proto)?.try_div(&b.eval(vars, proto)?)?,
            ExprAst::Pow(a, b) => a.eval(vars, proto)?.try_pow(&b.eval(vars, proto)?)?,
            ExprAst::Ln(a) => a.eval(vars, proto)?.try_ln()?,
            ExprAst::Exp(a) => a.eval(vars, proto)?.exp(),
        })
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            ExprAst::Const(_) => None,
            ExprAst::Var(i) => Some(*i),
            ExprAst::Neg(a) | ExprAst::Ln(a) | ExprAst::Exp(a) => a.max_var(),
            ExprAst::Add(a, b)
            | ExprAst::Sub(a, b)
            | ExprAst::Mul(a, b)
            | ExprAst::Div(a, b)
            | ExprAst::Pow(a, b) => a.max_var().max(b.max_var()),
        }
    }
}

/// A parsed expression together with the variable names it was parsed against.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    ast: ExprAst,
    variables: Vec<String>,
}

impl Expression {
    pub fn new(ast: ExprAst, variables: Vec<String>) -> Result<Self> {
        if let Some(max) = ast.max_var() {
            if max >= variables.len() {
                return Err(GtdError::IndexOutOfRange {
                    index: max,
                    dim: variables.len(),
                });
            }
        }
        Ok(Expression { ast, variables })
    }

    pub fn parse(source: &str, variables: &[&str]) -> Result<Self> {
        let names: Vec<String> = variables.iter().map(|s| s.to_string()).collect();
        let ast = Parser::new(source, &names)?.parse()?;
        Ok(Expression {
            ast,
            variables: names,
        })
    }

    pub fn ast(&self) -> &ExprAst {
        &self.ast
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    /// Evaluates with `vars` bound positionally. Constants take the shape
    /// of the first variable.
    pub fn eval<S: Scalar>(&self, vars: &[S]) -> Result<S> {
        if vars.len() != self.variables.len() {
            return Err(GtdError::DimensionMismatch {
                expected: self.variables.len(),
                found: vars.len(),
            });
        }
        match vars.first() {
            Some(proto) => self.ast.eval(vars, proto),
            None => self.ast.eval(vars, &S::lift(0.0)),
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_ast(&self.ast, &self.variables, f)
    }
}

fn write_ast(ast: &ExprAst, names: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let bin = |f: &mut fmt::Formatter<'_>, a: &ExprAst, op: &str, b: &ExprAst| {
        write!(f, "(")?;
        write_ast(a, names, f)?;
        write!(f, " {op} ")?;
        write_ast(b, names, f)?;
        write!(f, ")")
    };
    match ast {
        ExprAst::Const(c) if *c < 0.0 => write!(f, "(-{})", -c),
        ExprAst::Const(c) => write!(f, "{c}"),
        ExprAst::Var(i) => write!(f, "{}", names[*i]),
        ExprAst::Neg(a) => {
            write!(f, "(-")?;
            write_ast(a, names, f)?;
            write!(f, ")")
        }
        ExprAst::Add(a, b) => bin(f, a, "+", b),
        ExprAst::Sub(a, b) => bin(f, a, "-", b),
        ExprAst::Mul(a, b) => bin(f, a, "*", b),
        ExprAst::Div(a, b) => bin(f, a, "/", b),
        ExprAst::Pow(a, b) => bin(f, a, "^", b),
        ExprAst::Ln(a) => {
            write!(f, "ln(")?;
            write_ast(a, names, f)?;
            write!(f, ")")
        }
        ExprAst::Exp(a) => {
            write!(f, "exp(")?;
            write_ast(a, names, f)?;
            write!(f, ")")
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let simple = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push((tok, start));
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let value = text.parse::<f64>().map_err(|_| GtdError::Parse {
                offset: start,
                expected: vec!["number".into()],
            })?;
            out.push((Tok::Num(value), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else {
            return Err(GtdError::Parse {
                offset: start,
                expected: atom_expectations(),
            });
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

fn atom_expectations() -> Vec<String> {
    ["number", "identifier", "(", "-", "ln", "exp"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

// binding powers
const ADDITIVE: u8 = 1;
const MULTIPLICATIVE: u8 = 2;
const POWER: u8 = 3;

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    names: &'a [String],
}

impl<'a> Parser<'a> {
    fn new(src: &str, names: &'a [String]) -> Result<Self> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
            names,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: &[&str]) -> GtdError {
        GtdError::Parse {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn parse(mut self) -> Result<ExprAst> {
        let ast = self.binary(ADDITIVE)?;
        if *self.peek() != Tok::End {
            return Err(self.error(&["+", "-", "*", "/", "^", "end of input"]));
        }
        Ok(ast)
    }

    fn infix(tok: &Tok) -> Option<(u8, bool)> {
        match tok {
            Tok::Plus | Tok::Minus => Some((ADDITIVE, false)),
            Tok::Star | Tok::Slash => Some((MULTIPLICATIVE, false)),
            Tok::Caret => Some((POWER, true)),
            _ => None,
        }
    }

    fn binary(&mut self, min: u8) -> Result<ExprAst> {
        let mut lhs = self.unary()?;
        while let Some((prec, right_assoc)) = Self::infix(self.peek()) {
            if prec < min {
                break;
            }
            let op = self.bump();
            let rhs = if right_assoc {
                self.unary()?
            } else {
                self.binary(prec + 1)?
            };
            let (l, r) = (Box::new(lhs), Box::new(rhs));
            lhs = match op {
                Tok::Plus => ExprAst::Add(l, r),
                Tok::Minus => ExprAst::Sub(l, r),
                Tok::Star => ExprAst::Mul(l, r),
                Tok::Slash => ExprAst::Div(l, r),
                Tok::Caret => ExprAst::Pow(l, r),
                _ => unreachable!("infix table only lists operators"),
            };
        }
        Ok(lhs)
    }

    /// `'-' unary | power`; the operand of a unary minus is a full power chain.
    fn unary(&mut self) -> Result<ExprAst> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(ExprAst::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.unary()?;
            return Ok(ExprAst::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<ExprAst> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(ExprAst::Const(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.binary(ADDITIVE)?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) if name == "ln" || name == "exp" => {
                self.bump();
                if *self.peek() != Tok::LParen {
                    return Err(self.error(&["("]));
                }
                self.bump();
                let inner = Box::new(self.binary(ADDITIVE)?);
                self.expect_rparen()?;
                Ok(if name == "ln" {
                    ExprAst::Ln(inner)
                } else {
                    ExprAst::Exp(inner)
                })
            }
            Tok::Ident(name) => {
                let index = self.names.iter().position(|n| *n == name).ok_or(
                    GtdError::UnknownVariable {
                        name: name.clone(),
                        offset,
                    },
                )?;
                self.bump();
                Ok(ExprAst::Var(index))
            }
            _ => Err(self.error(&["number", "identifier", "(", "-", "ln", "exp"])),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        if *self.peek() != Tok::RParen {
            return Err(self.error(&[")", "+", "-", "*", "/", "^"]));
        }
        self.bump();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, vars: &[&str], at: &[f64]) -> Result<f64> {
        Expression::parse(src, vars)?.eval(at)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("1 + 2 * 3", &[], &[]).unwrap(), 7.0);
        assert_eq!(eval("x + 2 * 3", &["x"], &[1.0]).unwrap(), 7.0);
        assert_eq!(eval("x - 2 - 3", &["x"], &[10.0]).unwrap(), 5.0);
        assert_eq!(eval("x / 2 / 5", &["x"], &[10.0]).unwrap(), 1.0);
        assert_eq!(eval("x ^ 3 ^ 2", &["x"], &[2.0]).unwrap(), 512.0);
        assert_eq!(eval("-x ^ 2", &["x"], &[3.0]).unwrap(), -9.0);
        assert_eq!(eval("x ^ -1", &["x"], &[4.0]).unwrap(), 0.25);
        assert_eq!(eval("-x * 2", &["x"], &[3.0]).unwrap(), -6.0);
        assert_eq!(eval("(x + 1) * 2", &["x"], &[3.0]).unwrap(), 8.0);
        assert_eq!(
            eval("exp(ln(x))", &["x"], &[3.5]).unwrap(),
            3.5f64.ln().exp()
        );
        assert_eq!(eval("1.5e1 * x", &["x"], &[2.0]).unwrap(), 30.0);
    }

    #[test]
    fn truncated_input_reports_end_offset() {
        match Expression::parse("E1 + ", &["E1"]) {
            Err(GtdError::Parse { offset, expected }) => {
                assert_eq!(offset, 5);
                assert!(expected.contains(&"number".to_string()));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unbalanced_and_trailing_tokens() {
        assert!(matches!(
            Expression::parse("(E1 + 1", &["E1"]),
            Err(GtdError::Parse { offset: 7, .. })
        ));
        assert!(matches!(
            Expression::parse("E1 E1", &["E1"]),
            Err(GtdError::Parse { offset: 3, .. })
        ));
        assert!(matches!(
            Expression::parse("E1 # 2", &["E1"]),
            Err(GtdError::Parse { offset: 3, .. })
        ));
        assert!(matches!(
            Expression::parse("ln E1", &["E1"]),
            Err(GtdError::Parse { offset: 3, .. })
        ));
    }

    #[test]
    fn unknown_variable() {
        assert_eq!(
            Expression::parse("E1 * E3", &["E1", "E2"]).unwrap_err(),
            GtdError::UnknownVariable {
                name: "E3".into(),
                offset: 5
            }
        );
    }

    #[test]
    fn log_domain_error_on_evaluation() {
        let e = Expression::parse("ln(E1)", &["E1"]).unwrap();
        assert!(matches!(e.eval(&[-1.0]), Err(GtdError::Domain(_))));
    }

    #[test]
    fn pretty_print_is_fully_parenthesized() {
        let e = Expression::parse("-x^2 + ln(y)/3", &["x", "y"]).unwrap();
        assert_eq!(e.to_string(), "((-(x ^ 2)) + (ln(y) / 3))");
    }
}
