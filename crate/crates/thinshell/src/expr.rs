//! Parser and evaluator for analytic scalar expressions.
//!
//! Surfaces and vector fields are defined in config files as plain text
//! like `sin(u1)*cos(u2)`; this module turns that text into an AST bound
//! to a declared variable list and evaluates it either on `f64` or on
//! [`Jet`]s (exact derivatives).
//!
//! Grammar, loosest to tightest: `+ -`, `* /`, unary `-`, `^`
//! (right-associative), atoms. There is no implicit multiplication.
//! `pi` and `e` are named constants; `sin cos tan exp log sqrt abs` are
//! the built-in functions.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::jet::{Jet, JetError, JetSpace};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: found {found}, expected {}", expected.join(" or "))]
    Syntax {
        offset: usize,
        found: String,
        expected: Vec<String>,
    },
    #[error("unbound variable `{name}` at byte {offset}")]
    UnboundVariable { name: String, offset: usize },
}

/// Evaluation failure, annotated with the byte span of the AST node
/// that produced it.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("{source} (in expression at bytes {}..{})", span.0, span.1)]
pub struct EvalError {
    pub source: JetError,
    pub span: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Number(f64),
    Variable(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    pub span: (usize, usize),
}

/// A parsed expression together with its declared variable list.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    vars: Vec<String>,
    root: Node,
}

impl Expr {
    /// Parses `source` with variables bound by name to positions in
    /// `variables`. Unknown names (that are not `pi`/`e` or a function
    /// applied to an argument) are an error.
    pub fn parse(source: &str, variables: &[&str]) -> Result<Expr, ParseError> {
        let tokens = lex(source)?;
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            vars: variables,
            src_len: source.len(),
        };
        let root = parser.expression()?;
        parser.expect_end()?;
        Ok(Expr {
            vars: variables.iter().map(|s| s.to_string()).collect(),
            root,
        })
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Evaluates under jet arithmetic; `point` supplies one jet per
    /// declared variable (they may live in a larger jet space).
    pub fn eval_jet(&self, point: &[Jet]) -> Result<Jet, EvalError> {
        assert_eq!(
            point.len(),
            self.vars.len(),
            "point arity does not match declared variables"
        );
        let space = point[0].space().clone();
        eval_jet_node(&self.root, point, &space)
    }

    /// Plain scalar evaluation along the same domain rules as
    /// [`Expr::eval_jet`]; used as the independent value oracle for
    /// finite-difference checks.
    pub fn eval_f64(&self, point: &[f64]) -> Result<f64, EvalError> {
        assert_eq!(point.len(), self.vars.len());
        eval_f64_node(&self.root, point)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root, &self.vars, 0)
    }
}

fn eval_jet_node(node: &Node, point: &[Jet], space: &Arc<JetSpace>) -> Result<Jet, EvalError> {
    let err = |source: JetError| EvalError {
        source,
        span: node.span,
    };
    match &node.kind {
        NodeKind::Number(v) => Ok(Jet::constant(space, *v)),
        NodeKind::Variable(i) => Ok(point[*i].clone()),
        NodeKind::Neg(inner) => Ok(-&eval_jet_node(inner, point, space)?),
        NodeKind::Bin(op, lhs, rhs) => {
            let a = eval_jet_node(lhs, point, space)?;
            let b = eval_jet_node(rhs, point, space)?;
            match op {
                BinOp::Add => Ok(&a + &b),
                BinOp::Sub => Ok(&a - &b),
                BinOp::Mul => Ok(&a * &b),
                BinOp::Div => a.try_div(&b).map_err(err),
                BinOp::Pow => a.powf(&b).map_err(err),
            }
        }
        NodeKind::Call(func, arg) => {
            let a = eval_jet_node(arg, point, space)?;
            match func {
                Func::Sin => Ok(a.sin()),
                Func::Cos => Ok(a.cos()),
                Func::Tan => a.tan().map_err(err),
                Func::Exp => Ok(a.exp()),
                Func::Log => a.ln().map_err(err),
                Func::Sqrt => a.sqrt().map_err(err),
                Func::Abs => a.abs().map_err(err),
            }
        }
    }
}

fn eval_f64_node(node: &Node, point: &[f64]) -> Result<f64, EvalError> {
    let err = |source: JetError| EvalError {
        source,
        span: node.span,
    };
    match &node.kind {
        NodeKind::Number(v) => Ok(*v),
        NodeKind::Variable(i) => Ok(point[*i]),
        NodeKind::Neg(inner) => Ok(-eval_f64_node(inner, point)?),
        NodeKind::Bin(op, lhs, rhs) => {
            let a = eval_f64_node(lhs, point)?;
            let b = eval_f64_node(rhs, point)?;
            match op {
                BinOp::Add => Ok(a + b),
                BinOp::Sub => Ok(a - b),
                BinOp::Mul => Ok(a * b),
                BinOp::Div => {
                    if b.abs() <= crate::jet::DIV_FLOOR {
                        Err(err(JetError::DivisionByZero { value: b }))
                    } else {
                        Ok(a / b)
                    }
                }
                BinOp::Pow => {
                    if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
                        Ok(a.powi(b as i32))
                    } else if a > 0.0 {
                        Ok(a.powf(b))
                    } else {
                        Err(err(JetError::Domain {
                            func: "pow",
                            value: a,
                        }))
                    }
                }
            }
        }
        NodeKind::Call(func, arg) => {
            let a = eval_f64_node(arg, point)?;
            match func {
                Func::Sin => Ok(a.sin()),
                Func::Cos => Ok(a.cos()),
                Func::Tan => Ok(a.tan()),
                Func::Exp => Ok(a.exp()),
                Func::Log => {
                    if a <= 0.0 {
                        Err(err(JetError::Domain {
                            func: "log",
                            value: a,
                        }))
                    } else {
                        Ok(a.ln())
                    }
                }
                Func::Sqrt => {
                    if a <= 0.0 {
                        Err(err(JetError::Domain {
                            func: "sqrt",
                            value: a,
                        }))
                    } else {
                        Ok(a.sqrt())
                    }
                }
                Func::Abs => Ok(a.abs()),
            }
        }
    }
}

// Precedence levels used both by the parser and the printer.
const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn node_prec(node: &Node) -> u8 {
    match &node.kind {
        NodeKind::Number(_) | NodeKind::Variable(_) | NodeKind::Call(..) => PREC_ATOM,
        NodeKind::Neg(_) => PREC_NEG,
        NodeKind::Bin(BinOp::Add | BinOp::Sub, ..) => PREC_ADD,
        NodeKind::Bin(BinOp::Mul | BinOp::Div, ..) => PREC_MUL,
        NodeKind::Bin(BinOp::Pow, ..) => PREC_POW,
    }
}

fn write_node(
    f: &mut fmt::Formatter<'_>,
    node: &Node,
    vars: &[String],
    min_prec: u8,
) -> fmt::Result {
    let prec = node_prec(node);
    let parens = prec < min_prec;
    if parens {
        write!(f, "(")?;
    }
    match &node.kind {
        NodeKind::Number(v) => write!(f, "{v}")?,
        NodeKind::Variable(i) => write!(f, "{}", vars[*i])?,
        NodeKind::Neg(inner) => {
            write!(f, "-")?;
            write_node(f, inner, vars, PREC_NEG)?;
        }
        NodeKind::Bin(op, lhs, rhs) => {
            let (sym, lmin, rmin) = match op {
                BinOp::Add => ("+", PREC_ADD, PREC_ADD + 1),
                BinOp::Sub => ("-", PREC_ADD, PREC_ADD + 1),
                BinOp::Mul => ("*", PREC_MUL, PREC_MUL + 1),
                BinOp::Div => ("/", PREC_MUL, PREC_MUL + 1),
                // right-associative
                BinOp::Pow => ("^", PREC_POW + 1, PREC_POW),
            };
            write_node(f, lhs, vars, lmin)?;
            write!(f, "{sym}")?;
            write_node(f, rhs, vars, rmin)?;
        }
        NodeKind::Call(func, arg) => {
            write!(f, "{}(", func.name())?;
            write_node(f, arg, vars, 0)?;
            write!(f, ")")?;
        }
    }
    if parens {
        write!(f, ")")?;
    }
    Ok(())
}

type SpannedTok = (Tok, (usize, usize));

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
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number `{v}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
        }
    }
}

fn lex(source: &str) -> Result<Vec<SpannedTok>, ParseError> {
    let bytes = source.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => {
                out.push((Tok::Plus, (i, i + 1)));
                i += 1;
            }
            b'-' => {
                out.push((Tok::Minus, (i, i + 1)));
                i += 1;
            }
            b'*' => {
                out.push((Tok::Star, (i, i + 1)));
                i += 1;
            }
            b'/' => {
                out.push((Tok::Slash, (i, i + 1)));
                i += 1;
            }
            b'^' => {
                out.push((Tok::Caret, (i, i + 1)));
                i += 1;
            }
            b'(' => {
                out.push((Tok::LParen, (i, i + 1)));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, (i, i + 1)));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
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
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &source[start..i];
                let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    found: format!("`{text}`"),
                    expected: vec!["number".into()],
                })?;
                out.push((Tok::Num(value), (start, i)));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(source[start..i].to_string()), (start, i)));
            }
            _ => {
                return Err(ParseError::Syntax {
                    offset: i,
                    found: format!("`{}`", &source[i..i + utf8_len(b)]),
                    expected: vec!["expression".into()],
                });
            }
        }
    }
    Ok(out)
}

fn utf8_len(first: u8) -> usize {
    match first {
        0x00..=0x7f => 1,
        0xc0..=0xdf => 2,
        0xe0..=0xef => 3,
        _ => 4,
    }
}

struct Parser<'a> {
    tokens: &'a [SpannedTok],
    pos: usize,
    vars: &'a [&'a str],
    src_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&SpannedTok> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<&SpannedTok> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, expected: &[&str]) -> ParseError {
        let (found, offset) = match self.peek() {
            Some((tok, span)) => (tok.describe(), span.0),
            None => ("end of input".to_string(), self.src_len),
        };
        ParseError::Syntax {
            offset,
            found,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if self.pos == self.tokens.len() {
            Ok(())
        } else {
            Err(self.error_here(&["operator", "end of input"]))
        }
    }

    fn expression(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Some((tok, _)) = self.peek() {
            let op = match tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            let span = (lhs.span.0, rhs.span.1);
            lhs = Node {
                kind: NodeKind::Bin(op, Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Some((tok, _)) = self.peek() {
            let op = match tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.unary()?;
            let span = (lhs.span.0, rhs.span.1);
            lhs = Node {
                kind: NodeKind::Bin(op, Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if let Some((Tok::Minus, span)) = self.peek() {
            let start = span.0;
            self.bump();
            let inner = self.unary()?;
            let span = (start, inner.span.1);
            return Ok(Node {
                kind: NodeKind::Neg(Box::new(inner)),
                span,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if let Some((Tok::Caret, _)) = self.peek() {
            self.bump();
            // right-associative; the exponent may start with a unary minus
            let exponent = self.unary()?;
            let span = (base.span.0, exponent.span.1);
            return Ok(Node {
                kind: NodeKind::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)),
                span,
            });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let (tok, span) = match self.peek() {
            Some(t) => (t.0.clone(), t.1),
            None => return Err(self.error_here(&["number", "variable", "`(`"])),
        };
        match tok {
            Tok::Num(v) => {
                self.bump();
                Ok(Node {
                    kind: NodeKind::Number(v),
                    span,
                })
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expression()?;
                match self.peek() {
                    Some((Tok::RParen, end)) => {
                        let node = Node {
                            kind: inner.kind,
                            span: (span.0, end.1),
                        };
                        self.bump();
                        Ok(node)
                    }
                    _ => Err(self.error_here(&["`)`"])),
                }
            }
            Tok::Ident(name) => {
                self.bump();
                // declared variables shadow constants and function names
                if let Some(idx) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Node {
                        kind: NodeKind::Variable(idx),
                        span,
                    });
                }
                match name.as_str() {
                    "pi" => {
                        return Ok(Node {
                            kind: NodeKind::Number(std::f64::consts::PI),
                            span,
                        })
                    }
                    "e" => {
                        return Ok(Node {
                            kind: NodeKind::Number(std::f64::consts::E),
                            span,
                        })
                    }
                    _ => {}
                }
                if let Some(func) = Func::from_name(&name) {
                    match self.peek() {
                        Some((Tok::LParen, _)) => {
                            self.bump();
                            let arg = self.expression()?;
                            match self.peek() {
                                Some((Tok::RParen, end)) => {
                                    let node = Node {
                                        kind: NodeKind::Call(func, Box::new(arg)),
                                        span: (span.0, end.1),
                                    };
                                    self.bump();
                                    Ok(node)
                                }
                                _ => Err(self.error_here(&["`)`"])),
                            }
                        }
                        _ => Err(self.error_here(&["`(` after function name"])),
                    }
                } else {
                    Err(ParseError::UnboundVariable {
                        name,
                        offset: span.0,
                    })
                }
            }
            _ => Err(self.error_here(&["number", "variable", "`(`"])),
        }
    }
}
