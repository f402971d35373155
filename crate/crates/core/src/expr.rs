//! Affine expressions and constraints over named atoms.
//!
//! Grammar:
//!
//! ```text
//! constraint := expr ( "=" | "==" | "<=" | "<" | ">=" | ">" ) expr
//! expr       := term (("+" | "-") term)*
//! term       := unary (("*" | "/") unary)*
//! unary      := "-" unary | atom
//! atom       := number | ident | "(" expr ")"
//! number     := digits ["/" digits | "." digits]
//! ident      := [A-Za-z_][A-Za-z0-9_.']*
//! ```
//!
//! Products and quotients are allowed as long as one side is constant once
//! identifiers have been resolved, so `3/(3-2*eps)*t` is affine when `eps` is
//! bound to a number.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{show_q, Q};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Num(Q),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Le,
    Lt,
    Ge,
    Gt,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }

    pub fn holds(self, v: &Q) -> bool {
        match self {
            CmpOp::Eq => v.is_zero(),
            CmpOp::Le => v <= &Q::zero(),
            CmpOp::Lt => v < &Q::zero(),
            CmpOp::Ge => v >= &Q::zero(),
            CmpOp::Gt => v > &Q::zero(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub lhs: Expr,
    pub op: CmpOp,
    pub rhs: Expr,
    pub source: String,
}

/// `sum(coeffs[a] * a) + constant`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinExpr {
    pub coeffs: BTreeMap<String, Q>,
    pub constant: Q,
}

impl LinExpr {
    pub fn constant(v: Q) -> Self {
        LinExpr {
            coeffs: BTreeMap::new(),
            constant: v,
        }
    }

    pub fn atom(name: &str) -> Self {
        Self::term(name, Q::one())
    }

    pub fn term(name: &str, coef: Q) -> Self {
        let mut coeffs = BTreeMap::new();
        if !coef.is_zero() {
            coeffs.insert(name.to_string(), coef);
        }
        LinExpr {
            coeffs,
            constant: Q::zero(),
        }
    }

    pub fn as_constant(&self) -> Option<&Q> {
        self.coeffs.is_empty().then_some(&self.constant)
    }

    pub fn coef(&self, name: &str) -> Q {
        self.coeffs.get(name).cloned().unwrap_or_else(Q::zero)
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        for (k, v) in &other.coeffs {
            let e = out.coeffs.entry(k.clone()).or_insert_with(Q::zero);
            *e += v;
            if e.is_zero() {
                out.coeffs.remove(k);
            }
        }
        out.constant += &other.constant;
        out
    }

    pub fn scale(&self, k: &Q) -> LinExpr {
        if k.is_zero() {
            return LinExpr::constant(Q::zero());
        }
        LinExpr {
            coeffs: self.coeffs.iter().map(|(n, v)| (n.clone(), v * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn sub(&self, other: &LinExpr) -> LinExpr {
        self.add(&other.scale(&-Q::one()))
    }

    pub fn eval(&self, env: &dyn Fn(&str) -> Option<Q>) -> Result<Q> {
        let mut v = self.constant.clone();
        for (k, c) in &self.coeffs {
            let x = env(k).ok_or_else(|| Error::Unbound(k.clone()))?;
            v += c * x;
        }
        Ok(v)
    }

    /// Replaces atoms by affine expressions; unknown atoms are kept.
    pub fn substitute(&self, env: &dyn Fn(&str) -> Option<LinExpr>) -> LinExpr {
        let mut out = LinExpr::constant(self.constant.clone());
        for (k, c) in &self.coeffs {
            let part = env(k).unwrap_or_else(|| LinExpr::atom(k));
            out = out.add(&part.scale(c));
        }
        out
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in &self.coeffs {
            if !first {
                f.write_str(" + ")?;
            }
            write!(f, "{}*{}", show_q(c), k)?;
            first = false;
        }
        if first || !self.constant.is_zero() {
            if !first {
                f.write_str(" + ")?;
            }
            f.write_str(&show_q(&self.constant))?;
        }
        Ok(())
    }
}

impl Expr {
    pub fn vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone())
                }
            }
            Expr::Neg(a) => a.vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }

    /// Normalizes to an affine form, resolving identifiers through `env`.
    pub fn linearize(&self, env: &dyn Fn(&str) -> Option<LinExpr>) -> Result<LinExpr> {
        match self {
            Expr::Num(v) => Ok(LinExpr::constant(v.clone())),
            Expr::Var(v) => env(v).ok_or_else(|| Error::Unbound(v.clone())),
            Expr::Neg(a) => Ok(a.linearize(env)?.scale(&-Q::one())),
            Expr::Add(a, b) => Ok(a.linearize(env)?.add(&b.linearize(env)?)),
            Expr::Sub(a, b) => Ok(a.linearize(env)?.sub(&b.linearize(env)?)),
            Expr::Mul(a, b) => {
                let (x, y) = (a.linearize(env)?, b.linearize(env)?);
                if let Some(k) = x.as_constant() {
                    Ok(y.scale(k))
                } else if let Some(k) = y.as_constant() {
                    Ok(x.scale(k))
                } else {
                    Err(Error::NonAffine(self.to_string()))
                }
            }
            Expr::Div(a, b) => {
                let (x, y) = (a.linearize(env)?, b.linearize(env)?);
                match y.as_constant() {
                    Some(k) if k.is_zero() => Err(Error::DivisionByZero(self.to_string())),
                    Some(k) => Ok(x.scale(&k.recip())),
                    None => Err(Error::NonAffine(self.to_string())),
                }
            }
        }
    }

    /// Evaluates with every identifier bound to a number.
    pub fn eval(&self, env: &dyn Fn(&str) -> Option<Q>) -> Result<Q> {
        let lin = self.linearize(&|n| env(n).map(LinExpr::constant))?;
        Ok(lin.constant)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => f.write_str(&show_q(v)),
            Expr::Var(v) => f.write_str(v),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "{a}*{b}"),
            Expr::Div(a, b) => write!(f, "{a}/({b})"),
        }
    }
}

impl Constraint {
    /// `lhs - rhs`, to be compared against zero with `op`.
    pub fn normal(&self, env: &dyn Fn(&str) -> Option<LinExpr>) -> Result<LinExpr> {
        Ok(self.lhs.linearize(env)?.sub(&self.rhs.linearize(env)?))
    }

    pub fn holds(&self, env: &dyn Fn(&str) -> Option<Q>) -> Result<bool> {
        let v = self.lhs.eval(env)? - self.rhs.eval(env)?;
        Ok(self.op.holds(&v))
    }

    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.lhs.vars(&mut out);
        self.rhs.vars(&mut out);
        out
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.source.is_empty() {
            write!(f, "{} {} {}", self.lhs, self.op.symbol(), self.rhs)
        } else {
            f.write_str(&self.source)
        }
    }
}

pub fn parse_expr(src: &str) -> Result<Expr> {
    let mut p = Parser::new(src);
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

pub fn parse_constraint(src: &str) -> Result<Constraint> {
    let mut p = Parser::new(src);
    let lhs = p.expr()?;
    p.skip_ws();
    let op = p.cmp_op()?;
    let rhs = p.expr()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(Constraint {
        lhs,
        op,
        rhs,
        source: src.trim().to_string(),
    })
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn new(src: &str) -> Self {
        Parser {
            chars: src.chars().collect(),
            pos: 0,
        }
    }

    fn error(&self, message: &str) -> Error {
        let mut line = 1;
        let mut column = 1;
        for c in &self.chars[..self.pos.min(self.chars.len())] {
            if *c == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
        }
        Error::Parse {
            line,
            column,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn cmp_op(&mut self) -> Result<CmpOp> {
        let c = self.peek().ok_or_else(|| self.error("expected comparison"))?;
        let next = self.chars.get(self.pos + 1).copied();
        let (op, len) = match (c, next) {
            ('=', Some('=')) => (CmpOp::Eq, 2),
            ('=', _) => (CmpOp::Eq, 1),
            ('<', Some('=')) => (CmpOp::Le, 2),
            ('<', _) => (CmpOp::Lt, 1),
            ('>', Some('=')) => (CmpOp::Ge, 2),
            ('>', _) => (CmpOp::Gt, 1),
            _ => return Err(self.error("expected comparison")),
        };
        self.pos += len;
        Ok(op)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let start = self.pos;
                while let Some(&c) = self.chars.get(self.pos) {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '\'' {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                Ok(Expr::Var(self.chars[start..self.pos].iter().collect()))
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    // `p/q` literals come out of the term parser as a constant division
    fn number(&mut self) -> Result<Expr> {
        let whole = self.digits();
        let mut value: Q = Q::from_integer(whole.parse().expect("digits"));
        if self.chars.get(self.pos) == Some(&'.') {
            self.pos += 1;
            let frac = self.digits();
            if frac.is_empty() {
                return Err(self.error("expected digits after '.'"));
            }
            value = crate::rational::parse_q(&format!("{whole}.{frac}"))?;
        }
        Ok(Expr::Num(value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, q};

    fn consts(name: &str) -> Option<LinExpr> {
        match name {
            "eps" => Some(LinExpr::constant(q(1, 4))),
            "t" | "x" => Some(LinExpr::atom(name)),
            _ => None,
        }
    }

    #[test]
    fn affine_forms() {
        let e = parse_expr("3/(3 - 2*eps) * t - x/2 + 1").unwrap();
        let l = e.linearize(&consts).unwrap();
        assert_eq!(l.coef("t"), q(6, 5));
        assert_eq!(l.coef("x"), q(-1, 2));
        assert_eq!(l.constant, int(1));
        let e = parse_expr("-(t - 2) * -3").unwrap().linearize(&consts).unwrap();
        assert_eq!(e.coef("t"), int(3));
        assert_eq!(e.constant, int(-6));
    }

    #[test]
    fn rejects_non_affine() {
        let e = parse_expr("t * x").unwrap();
        assert!(matches!(e.linearize(&consts), Err(Error::NonAffine(_))));
        let e = parse_expr("x / (eps - 1/4)").unwrap();
        assert!(matches!(e.linearize(&consts), Err(Error::DivisionByZero(_))));
        assert!(matches!(
            parse_expr("y").unwrap().linearize(&consts),
            Err(Error::Unbound(_))
        ));
    }

    #[test]
    fn constraints() {
        let c = parse_constraint("c.y <= a.y + 1/2").unwrap();
        assert_eq!(c.op, CmpOp::Le);
        assert_eq!(c.vars(), vec!["c.y".to_string(), "a.y".to_string()]);
        let env = |n: &str| match n {
            "c.y" => Some(int(1)),
            "a.y" => Some(q(1, 2)),
            _ => None,
        };
        assert!(c.holds(&env).unwrap());
        assert_eq!(parse_constraint("x == 0.5").unwrap().op, CmpOp::Eq);
    }

    #[test]
    fn parse_positions() {
        match parse_expr("1 +\n  * 2") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("{other:?}"),
        }
        assert!(parse_constraint("x + 1").is_err());
        assert!(parse_expr("(x").is_err());
    }
}
