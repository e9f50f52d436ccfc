//! A small expression language for `f(x)`.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'x' | constant | function '(' expr ')' | '(' expr ')'
//! ```
//!
//! Functions: `sin cos asin sqrt exp ln gamma kurepaK`.
//! Constants: `pi sqrt2 e KP0` (`KP0` is K'(0)).

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minimax::{EvalError, FunctionHandle, RealFunction};
use crate::specfun::{self, QuadratureSettings};
use crate::xprec::DoubleDouble;

const MAX_DEPTH: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("domain error in `{node}`: {message}")]
    Domain { node: String, message: String },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Double,
    #[default]
    Extended,
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::Double => "double",
            Precision::Extended => "extended",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Asin,
    Sqrt,
    Exp,
    Ln,
    Gamma,
    KurepaK,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Asin,
        Func::Sqrt,
        Func::Exp,
        Func::Ln,
        Func::Gamma,
        Func::KurepaK,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Asin => "asin",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Gamma => "gamma",
            Func::KurepaK => "kurepaK",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Const {
    Pi,
    Sqrt2,
    E,
    Kp0,
}

impl Const {
    pub const ALL: [Const; 4] = [Const::Pi, Const::Sqrt2, Const::E, Const::Kp0];

    pub fn name(self) -> &'static str {
        match self {
            Const::Pi => "pi",
            Const::Sqrt2 => "sqrt2",
            Const::E => "e",
            Const::Kp0 => "KP0",
        }
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

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

/// Parsed expression tree. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    /// A numeric literal, kept with its source text so printing is exact.
    Num {
        text: String,
        value: f64,
        ext: DoubleDouble,
    },
    Var,
    Const(Const),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

const NEG_PRECEDENCE: u8 = 3;
const ATOM_PRECEDENCE: u8 = 5;

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(op, ..) => op.precedence(),
            Expr::Neg(_) => NEG_PRECEDENCE,
            _ => ATOM_PRECEDENCE,
        }
    }

    /// Whether the variable `x` occurs anywhere in the tree.
    pub fn mentions_var(&self) -> bool {
        match self {
            Expr::Var => true,
            Expr::Num { .. } | Expr::Const(_) => false,
            Expr::Neg(e) | Expr::Call(_, e) => e.mentions_var(),
            Expr::Bin(_, l, r) => l.mentions_var() || r.mentions_var(),
        }
    }

    /// Evaluates at `x` in the arithmetic of `S`.
    pub fn eval<S: Scalar>(&self, x: S) -> Result<S, ExprError> {
        let domain = |msg: String| ExprError::Domain {
            node: self.to_string(),
            message: msg,
        };
        Ok(match self {
            Expr::Num { value, ext, .. } => S::literal(*value, *ext),
            Expr::Var => x,
            Expr::Const(c) => S::constant(*c),
            Expr::Neg(e) => -e.eval(x)?,
            Expr::Bin(op, l, r) => {
                let (a, b) = (l.eval(x)?, r.eval(x)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b.to_f64() == 0.0 {
                            return Err(domain("division by zero".into()));
                        }
                        a / b
                    }
                    BinOp::Pow => S::pow(a, b).map_err(domain)?,
                }
            }
            Expr::Call(f, arg) => S::call(*f, arg.eval(x)?).map_err(domain)?,
        })
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, paren: bool) -> fmt::Result {
        if paren {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num { text, .. } => f.write_str(text),
            Expr::Var => f.write_str("x"),
            Expr::Const(c) => f.write_str(c.name()),
            Expr::Neg(e) => {
                f.write_str("-")?;
                e.fmt_child(f, e.precedence() < NEG_PRECEDENCE)
            }
            Expr::Bin(op, l, r) => {
                let p = op.precedence();
                if *op == BinOp::Pow {
                    l.fmt_child(f, l.precedence() < ATOM_PRECEDENCE)?;
                    f.write_str("^")?;
                    r.fmt_child(f, r.precedence() < NEG_PRECEDENCE)
                } else {
                    l.fmt_child(f, l.precedence() < p)?;
                    write!(f, " {} ", op.symbol())?;
                    r.fmt_child(f, r.precedence() <= p)
                }
            }
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}

/// A parsed expression together with its source text.
#[derive(Clone, Debug, PartialEq)]
pub struct ExprAst {
    pub root: Expr,
    pub source: String,
}

impl ExprAst {
    pub fn eval<S: Scalar>(&self, x: S) -> Result<S, ExprError> {
        self.root.eval(x)
    }
}

impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

/// Where and how to evaluate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalEnv {
    pub x: f64,
    pub precision: Precision,
}

pub fn eval_expr(ast: &ExprAst, env: &EvalEnv) -> Result<f64, ExprError> {
    match env.precision {
        Precision::Double => ast.eval(env.x),
        Precision::Extended => ast.eval(DoubleDouble::from(env.x)).map(DoubleDouble::to_f64),
    }
}

/// An expression viewed as a real function of `x`.
#[derive(Clone, Debug)]
pub struct ExprFunction {
    pub ast: ExprAst,
    pub precision: Precision,
}

impl RealFunction for ExprFunction {
    fn eval(&self, x: f64) -> Result<f64, EvalError> {
        eval_expr(&self.ast, &EvalEnv { x, precision: self.precision })
            .map_err(|e| EvalError(e.to_string()))
    }

    fn eval_ext(&self, x: DoubleDouble) -> Result<DoubleDouble, EvalError> {
        let v = match self.precision {
            Precision::Double => self.ast.eval(x.to_f64()).map(DoubleDouble::from),
            Precision::Extended => self.ast.eval(x),
        };
        v.map_err(|e| EvalError(e.to_string()))
    }

    fn label(&self) -> String {
        self.ast.to_string()
    }
}

impl ExprFunction {
    pub fn handle(ast: ExprAst, precision: Precision) -> FunctionHandle {
        FunctionHandle::new(Self { ast, precision })
    }
}

// ---------------------------------------------------------------------------
// Parser

pub fn parse_expr(text: &str) -> Result<ExprAst, ExprError> {
    let mut p = Parser {
        src: text,
        bytes: text.as_bytes(),
        pos: 0,
        depth: 0,
    };
    p.skip_ws();
    if p.pos == p.bytes.len() {
        return Err(p.error("empty expression"));
    }
    let root = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(ExprAst {
        root,
        source: text.to_string(),
    })
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    depth: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> ExprError {
        ExprError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn descend(&mut self) -> Result<(), ExprError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error("expression nested too deeply"));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == b'+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == b'*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        self.descend()?;
        let out = if self.peek() == Some(b'-') {
            self.pos += 1;
            self.unary().map(|e| Expr::Neg(Box::new(e)))
        } else {
            self.power()
        };
        self.depth -= 1;
        out
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                self.descend()?;
                let inner = self.expr()?;
                self.depth -= 1;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(_) => Err(self.error("expected a number, identifier or '('")),
        }
    }

    fn expect(&mut self, want: u8) -> Result<(), ExprError> {
        if self.peek() == Some(want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", want as char)))
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.bytes.len() && p.bytes[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            self.pos = start;
            return Err(self.error("malformed number"));
        }
        if matches!(self.bytes.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.bytes.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = mark;
                return Err(self.error("malformed exponent"));
            }
        }
        let text = &self.src[start..self.pos];
        let malformed = || ExprError::Syntax {
            offset: start,
            message: format!("number out of range: {text}"),
        };
        let value: f64 = text.parse().map_err(|_| malformed())?;
        let ext: DoubleDouble = text.parse().map_err(|_| malformed())?;
        Ok(Expr::Num {
            text: text.to_string(),
            value,
            ext,
        })
    }

    fn identifier(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        if name == "x" {
            return Ok(Expr::Var);
        }
        if let Some(c) = Const::ALL.into_iter().find(|c| c.name() == name) {
            return Ok(Expr::Const(c));
        }
        if let Some(func) = Func::ALL.into_iter().find(|f| f.name() == name) {
            self.expect(b'(')?;
            self.descend()?;
            let arg = self.expr()?;
            self.depth -= 1;
            self.expect(b')')?;
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        Err(ExprError::UnknownIdentifier {
            name: name.to_string(),
            offset: start,
        })
    }
}

// ---------------------------------------------------------------------------
// Arithmetic back ends

/// Number types an expression can be evaluated in.
pub trait Scalar:
    Copy
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + From<f64>
{
    fn literal(value: f64, ext: DoubleDouble) -> Self;
    fn constant(c: Const) -> Self;
    fn to_f64(self) -> f64;
    fn call(f: Func, x: Self) -> Result<Self, String>;
    fn pow(base: Self, exp: Self) -> Result<Self, String>;
}

fn kp0() -> DoubleDouble {
    specfun::kurepa_prime0_ext()
}

fn check_call(f: Func, x: f64) -> Result<(), String> {
    let bad = match f {
        Func::Asin => !(-1.0..=1.0).contains(&x),
        Func::Sqrt => x < 0.0,
        Func::Ln | Func::Gamma => x <= 0.0,
        Func::KurepaK => !(0.0..=1.0).contains(&x),
        Func::Sin | Func::Cos | Func::Exp => false,
    };
    if bad || x.is_nan() {
        Err(format!("{} undefined at {x}", f.name()))
    } else {
        Ok(())
    }
}

fn integer_exponent(e: f64) -> Option<i32> {
    (e.fract() == 0.0 && e.abs() <= 1024.0).then_some(e as i32)
}

impl Scalar for f64 {
    fn literal(value: f64, _: DoubleDouble) -> Self {
        value
    }

    fn constant(c: Const) -> Self {
        match c {
            Const::Pi => std::f64::consts::PI,
            Const::Sqrt2 => std::f64::consts::SQRT_2,
            Const::E => std::f64::consts::E,
            Const::Kp0 => kp0().to_f64(),
        }
    }

    fn to_f64(self) -> f64 {
        self
    }

    fn call(f: Func, x: Self) -> Result<Self, String> {
        check_call(f, x)?;
        Ok(match f {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Asin => x.asin(),
            Func::Sqrt => x.sqrt(),
            Func::Exp => x.exp(),
            Func::Ln => x.ln(),
            Func::Gamma => specfun::gamma_fn(x).map_err(|e| e.to_string())?,
            Func::KurepaK => {
                static SETTINGS: OnceLock<QuadratureSettings> = OnceLock::new();
                let q = SETTINGS.get_or_init(QuadratureSettings::default);
                specfun::kurepa_k(x, q).map_err(|e| e.to_string())?.value
            }
        })
    }

    fn pow(base: Self, exp: Self) -> Result<Self, String> {
        if let Some(n) = integer_exponent(exp) {
            if base == 0.0 && n < 0 {
                return Err("zero to a negative power".into());
            }
            return Ok(base.powi(n));
        }
        if base < 0.0 {
            return Err(format!("negative base {base} with non-integer exponent"));
        }
        Ok(base.powf(exp))
    }
}

impl Scalar for DoubleDouble {
    fn literal(_: f64, ext: DoubleDouble) -> Self {
        ext
    }

    fn constant(c: Const) -> Self {
        match c {
            Const::Pi => DoubleDouble::PI,
            Const::Sqrt2 => DoubleDouble::SQRT_2,
            Const::E => DoubleDouble::E,
            Const::Kp0 => kp0(),
        }
    }

    fn to_f64(self) -> f64 {
        DoubleDouble::to_f64(self)
    }

    fn call(f: Func, x: Self) -> Result<Self, String> {
        check_call(f, x.to_f64())?;
        if f == Func::Sqrt && x < DoubleDouble::ZERO {
            return Err(format!("sqrt undefined at {x}"));
        }
        Ok(match f {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Asin => {
                if x.abs() > DoubleDouble::ONE {
                    return Err(format!("asin undefined at {x}"));
                }
                x.asin()
            }
            Func::Sqrt => x.sqrt(),
            Func::Exp => x.exp(),
            Func::Ln => x.ln(),
            // Γ has no double-double kernel; the f64 value is promoted.
            Func::Gamma => DoubleDouble::from(
                specfun::gamma_fn(x.to_f64()).map_err(|e| e.to_string())?,
            ),
            Func::KurepaK => specfun::kurepa_k_ext(x).map_err(|e| e.to_string())?,
        })
    }

    fn pow(base: Self, exp: Self) -> Result<Self, String> {
        if exp.lo() == 0.0 {
            if let Some(n) = integer_exponent(exp.hi()) {
                if base.to_f64() == 0.0 && n < 0 {
                    return Err("zero to a negative power".into());
                }
                return Ok(base.powi(n));
            }
        }
        if base < DoubleDouble::ZERO {
            return Err(format!("negative base {base} with non-integer exponent"));
        }
        if base.to_f64() == 0.0 {
            return Ok(DoubleDouble::ZERO);
        }
        Ok(base.powf(exp))
    }
}
