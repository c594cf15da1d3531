//! Parser and evaluator for user-supplied loading coefficients `γ(t)`.
//!
//! Grammar (whitespace between tokens is ignored):
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := '-' unary | power
//! power    := primary ('^' exponent)?
//! exponent := '-'? NUMBER ('^' exponent)?
//! primary  := NUMBER | 't' | FUNC '(' expr ')' | '(' expr ')'
//! FUNC     := sin | cos | tan | tanh | coth | cot | sqrt | exp
//! ```
//!
//! `^` binds tighter than unary minus (`-t^2` is `-(t^2)`), is
//! right-associative, and only accepts a numeric exponent.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Tanh,
    Coth,
    Cot,
    Sqrt,
    Exp,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Tanh,
        Func::Coth,
        Func::Cot,
        Func::Sqrt,
        Func::Exp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Tanh => "tanh",
            Func::Coth => "coth",
            Func::Cot => "cot",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Tanh => x.tanh(),
            Func::Coth => 1.0 / x.tanh(),
            Func::Cot => 1.0 / x.tan(),
            Func::Sqrt => x.sqrt(),
            Func::Exp => x.exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
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
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprNode {
    Number(f64),
    /// The time variable `t`.
    Var,
    Neg(Box<ExprNode>),
    Binary(BinOp, Box<ExprNode>, Box<ExprNode>),
    Call(Func, Box<ExprNode>),
}

impl ExprNode {
    pub fn binary(op: BinOp, lhs: ExprNode, rhs: ExprNode) -> Self {
        ExprNode::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn call(func: Func, arg: ExprNode) -> Self {
        ExprNode::Call(func, Box::new(arg))
    }

    pub fn neg(inner: ExprNode) -> Self {
        ExprNode::Neg(Box::new(inner))
    }

    /// Constant zero, the "no loading" coefficient.
    pub fn zero() -> Self {
        ExprNode::Number(0.0)
    }

    /// Evaluate at time `t`.
    pub fn eval(&self, t: f64) -> Result<f64, GammaError> {
        eval_expr(self, t)
    }

    fn fmt_exponent(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprNode::Number(v) => write!(f, "{v}"),
            ExprNode::Neg(inner) => {
                f.write_str("-")?;
                inner.fmt_exponent(f)
            }
            ExprNode::Binary(BinOp::Pow, base, exp) => {
                base.fmt_exponent(f)?;
                f.write_str("^")?;
                exp.fmt_exponent(f)
            }
            // Not produced by the parser; parenthesized output will not re-parse.
            other => write!(f, "({other})"),
        }
    }
}

impl fmt::Display for ExprNode {
    /// Fully parenthesized form that re-parses to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprNode::Number(v) => write!(f, "{v}"),
            ExprNode::Var => f.write_str("t"),
            ExprNode::Neg(inner) => write!(f, "(-{inner})"),
            ExprNode::Binary(BinOp::Pow, base, exp) => {
                write!(f, "({base})^")?;
                exp.fmt_exponent(f)
            }
            ExprNode::Binary(op, lhs, rhs) => write!(f, "({lhs} {} {rhs})", op.symbol()),
            ExprNode::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GammaError {
    #[error("SyntaxError at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("UnknownFunction `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("DomainError: `{subexpr}` is undefined at t = {t}")]
    Domain { subexpr: String, t: f64 },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    tok: Tok,
    tok_start: usize,
}

fn syntax(offset: usize, message: impl Into<String>) -> GammaError {
    GammaError::Syntax {
        offset,
        message: message.into(),
    }
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, GammaError> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
            tok: Tok::End,
            tok_start: 0,
        };
        p.bump()?;
        Ok(p)
    }

    fn bump(&mut self) -> Result<(), GammaError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            self.tok = Tok::End;
            return Ok(());
        };
        self.tok = match c {
            b'0'..=b'9' | b'.' => self.number()?,
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = self.pos;
                while self
                    .src
                    .get(self.pos)
                    .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
                {
                    self.pos += 1;
                }
                Tok::Ident(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                self.pos += 1;
                Tok::Op(c as char)
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            _ => return Err(syntax(self.pos, "unexpected character")),
        };
        Ok(())
    }

    fn number(&mut self) -> Result<Tok, GammaError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.src.get(p.pos).is_some_and(u8::is_ascii_digit) {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return Err(syntax(start, "malformed number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                return Err(syntax(self.pos, "malformed exponent in number"));
            }
        }
        // Only ASCII digits, '.', 'e' and signs were consumed.
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Tok::Num(v)),
            _ => Err(syntax(start, "number out of range")),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), GammaError> {
        if self.tok == want {
            self.bump()
        } else {
            Err(syntax(self.tok_start, format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<ExprNode, GammaError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = ExprNode::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<ExprNode, GammaError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.unary()?;
            lhs = ExprNode::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<ExprNode, GammaError> {
        if self.tok == Tok::Op('-') {
            self.bump()?;
            return Ok(ExprNode::neg(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<ExprNode, GammaError> {
        let base = self.primary()?;
        if self.tok == Tok::Op('^') {
            self.bump()?;
            let exp = self.exponent()?;
            return Ok(ExprNode::binary(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<ExprNode, GammaError> {
        let negative = self.tok == Tok::Op('-');
        if negative {
            self.bump()?;
        }
        let Tok::Num(v) = self.tok else {
            return Err(syntax(self.tok_start, "expected numeric exponent after '^'"));
        };
        self.bump()?;
        let mut node = ExprNode::Number(v);
        if self.tok == Tok::Op('^') {
            self.bump()?;
            node = ExprNode::binary(BinOp::Pow, node, self.exponent()?);
        }
        Ok(if negative { ExprNode::neg(node) } else { node })
    }

    fn primary(&mut self) -> Result<ExprNode, GammaError> {
        let start = self.tok_start;
        match std::mem::replace(&mut self.tok, Tok::End) {
            Tok::Num(v) => {
                self.bump()?;
                Ok(ExprNode::Number(v))
            }
            Tok::Ident(name) => {
                self.bump()?;
                if self.tok == Tok::LParen {
                    let func = Func::from_name(&name).ok_or(GammaError::UnknownFunction {
                        name,
                        offset: start,
                    })?;
                    self.bump()?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "')'")?;
                    Ok(ExprNode::call(func, arg))
                } else if name == "t" {
                    Ok(ExprNode::Var)
                } else {
                    Err(syntax(start, format!("unknown identifier `{name}`")))
                }
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::End => Err(syntax(start, "unexpected end of input")),
            Tok::Op(c) => Err(syntax(start, format!("unexpected operator '{c}'"))),
            Tok::RParen => Err(syntax(start, "unexpected ')'")),
        }
    }
}

/// Parse a `γ(t)` expression.
pub fn parse_gamma(src: &str) -> Result<ExprNode, GammaError> {
    let mut p = Parser::new(src)?;
    if p.tok == Tok::End {
        return Err(syntax(0, "empty expression"));
    }
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(syntax(p.tok_start, "unexpected trailing input"));
    }
    Ok(e)
}

/// Evaluate a parsed expression; any non-finite intermediate is reported
/// as a domain error naming the subexpression that produced it.
pub fn eval_expr(e: &ExprNode, t: f64) -> Result<f64, GammaError> {
    let value = match e {
        ExprNode::Number(v) => *v,
        ExprNode::Var => t,
        ExprNode::Neg(inner) => -eval_expr(inner, t)?,
        ExprNode::Binary(op, lhs, rhs) => {
            let a = eval_expr(lhs, t)?;
            let b = eval_expr(rhs, t)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(domain(e, t));
                    }
                    a / b
                }
                BinOp::Pow => a.powf(b),
            }
        }
        ExprNode::Call(func, arg) => func.apply(eval_expr(arg, t)?),
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(domain(e, t))
    }
}

fn domain(e: &ExprNode, t: f64) -> GammaError {
    GammaError::Domain {
        subexpr: e.to_string(),
        t,
    }
}
