//! Expression grammar shared by indicator cutoff rules and metric entries.
//!
//! Two sub-languages are parsed from the same token stream:
//!
//! * boolean cutoff rules: comparisons of the form `field OP literal`
//!   combined with `AND`, `OR`, `NOT`, and parentheses, where OP is one of
//!   `<`, `<=`, `>`, `>=`, `==`, `!=` and the literal is a number, a bare
//!   categorical token, or a `$parameter` reference resolved at parse time;
//! * arithmetic expressions over named variables with `+ - * /`, unary
//!   minus, and parentheses, used for metric tensor entries and potential
//!   field components.
//!
//! Rule evaluation is total and tri-valued: if any referenced field is
//! missing, or a comparison mixes a numeric side with a categorical side,
//! the rule evaluates to missing rather than guessing. Missing propagates
//! strictly through AND/OR/NOT, so negating a rule flips deprived and
//! non-deprived children while leaving missing children missing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A single observed field value: numeric or categorical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Num(f64),
    Cat(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum ExprError {
    #[error("syntax error at token {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown parameter `{name}` at token {position}")]
    UnknownParameter { name: String, position: usize },
    #[error("unexpected character `{ch}` in expression")]
    BadCharacter { ch: char },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Literal {
    Num(f64),
    Token(String),
}

/// Parsed cutoff rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Rule {
    Cmp {
        field: String,
        op: CmpOp,
        literal: Literal,
    },
    And(Box<Rule>, Box<Rule>),
    Or(Box<Rule>, Box<Rule>),
    Not(Box<Rule>),
}

impl Rule {
    /// Every field name the rule reads.
    pub fn fields(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_fields(&mut out);
        out
    }

    fn collect_fields(&self, out: &mut BTreeSet<String>) {
        match self {
            Rule::Cmp { field, .. } => {
                out.insert(field.clone());
            }
            Rule::And(a, b) | Rule::Or(a, b) => {
                a.collect_fields(out);
                b.collect_fields(out);
            }
            Rule::Not(inner) => inner.collect_fields(out),
        }
    }

    /// Logical complement of the rule.
    pub fn negated(&self) -> Rule {
        Rule::Not(Box::new(self.clone()))
    }

    /// Tri-valued evaluation: `None` means the outcome is missing.
    pub fn eval<'a, F>(&self, lookup: &F) -> Option<bool>
    where
        F: Fn(&str) -> Option<&'a Value>,
    {
        match self {
            Rule::Cmp { field, op, literal } => {
                let value = lookup(field)?;
                compare(value, *op, literal)
            }
            Rule::And(a, b) => {
                let (a, b) = (a.eval(lookup)?, b.eval(lookup)?);
                Some(a && b)
            }
            Rule::Or(a, b) => {
                let (a, b) = (a.eval(lookup)?, b.eval(lookup)?);
                Some(a || b)
            }
            Rule::Not(inner) => inner.eval(lookup).map(|v| !v),
        }
    }

    /// Field type constraints implied by the comparisons in this rule.
    /// Ordering operators and numeric literals force a numeric field;
    /// equality against a bare token forces a categorical field.
    pub fn field_kinds(&self) -> Vec<(String, FieldKind)> {
        let mut out = Vec::new();
        self.collect_kinds(&mut out);
        out
    }

    fn collect_kinds(&self, out: &mut Vec<(String, FieldKind)>) {
        match self {
            Rule::Cmp { field, literal, .. } => {
                let kind = match literal {
                    Literal::Num(_) => FieldKind::Numeric,
                    Literal::Token(_) => FieldKind::Categorical,
                };
                out.push((field.clone(), kind));
            }
            Rule::And(a, b) | Rule::Or(a, b) => {
                a.collect_kinds(out);
                b.collect_kinds(out);
            }
            Rule::Not(inner) => inner.collect_kinds(out),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Numeric,
    Categorical,
}

fn compare(value: &Value, op: CmpOp, literal: &Literal) -> Option<bool> {
    match (value, literal) {
        (Value::Num(v), Literal::Num(l)) => Some(match op {
            CmpOp::Lt => v < l,
            CmpOp::Le => v <= l,
            CmpOp::Gt => v > l,
            CmpOp::Ge => v >= l,
            CmpOp::Eq => v == l,
            CmpOp::Ne => v != l,
        }),
        (Value::Cat(v), Literal::Token(l)) => match op {
            CmpOp::Eq => Some(v == l),
            CmpOp::Ne => Some(v != l),
            // categorical values have no order
            _ => None,
        },
        // type mismatch: refuse to guess either way
        _ => None,
    }
}

/// Arithmetic expression over named variables.
#[derive(Debug, Clone, PartialEq)]
pub enum Arith {
    Num(f64),
    Var(String),
    Neg(Box<Arith>),
    Add(Box<Arith>, Box<Arith>),
    Sub(Box<Arith>, Box<Arith>),
    Mul(Box<Arith>, Box<Arith>),
    Div(Box<Arith>, Box<Arith>),
}

impl Arith {
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Arith::Num(_) => {}
            Arith::Var(name) => {
                out.insert(name.clone());
            }
            Arith::Neg(inner) => inner.collect_vars(out),
            Arith::Add(a, b) | Arith::Sub(a, b) | Arith::Mul(a, b) | Arith::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Evaluate with variables bound positionally through `lookup`.
    /// Unknown variables evaluate to NaN; callers validate names up front.
    pub fn eval<F>(&self, lookup: &F) -> f64
    where
        F: Fn(&str) -> Option<f64>,
    {
        match self {
            Arith::Num(v) => *v,
            Arith::Var(name) => lookup(name).unwrap_or(f64::NAN),
            Arith::Neg(inner) => -inner.eval(lookup),
            Arith::Add(a, b) => a.eval(lookup) + b.eval(lookup),
            Arith::Sub(a, b) => a.eval(lookup) - b.eval(lookup),
            Arith::Mul(a, b) => a.eval(lookup) * b.eval(lookup),
            Arith::Div(a, b) => a.eval(lookup) / b.eval(lookup),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Param(String),
    Cmp(CmpOp),
    And,
    Or,
    Not,
    LParen,
    RParen,
    Plus,
    Minus,
    Star,
    Slash,
}

/// Tokens paired with their 1-based position; errors report positions so a
/// truncated rule like `haz <` fails "at token 3" (the missing literal).
fn tokenize(input: &str) -> Result<Vec<Tok>, ExprError> {
    let mut tokens = Vec::new();
    let mut chars = input.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    word.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            let tok = match word.to_ascii_uppercase().as_str() {
                "AND" => Tok::And,
                "OR" => Tok::Or,
                "NOT" => Tok::Not,
                _ => Tok::Ident(word),
            };
            tokens.push(tok);
            continue;
        }
        if c.is_ascii_digit() {
            let mut num = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_digit() || c == '.' {
                    num.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            if let Some(&e) = chars.peek() {
                if e == 'e' || e == 'E' {
                    num.push(e);
                    chars.next();
                    if let Some(&s) = chars.peek() {
                        if s == '+' || s == '-' {
                            num.push(s);
                            chars.next();
                        }
                    }
                    while let Some(&d) = chars.peek() {
                        if d.is_ascii_digit() {
                            num.push(d);
                            chars.next();
                        } else {
                            break;
                        }
                    }
                }
            }
            let value: f64 = num.parse().map_err(|_| ExprError::Syntax {
                position: tokens.len() + 1,
                message: format!("malformed number `{num}`"),
            })?;
            tokens.push(Tok::Number(value));
            continue;
        }
        match c {
            '$' => {
                chars.next();
                let mut name = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        name.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                if name.is_empty() {
                    return Err(ExprError::Syntax {
                        position: tokens.len() + 1,
                        message: "`$` must be followed by a parameter name".into(),
                    });
                }
                tokens.push(Tok::Param(name));
            }
            '<' => {
                chars.next();
                if chars.peek() == Some(&'=') {
                    chars.next();
                    tokens.push(Tok::Cmp(CmpOp::Le));
                } else {
                    tokens.push(Tok::Cmp(CmpOp::Lt));
                }
            }
            '>' => {
                chars.next();
                if chars.peek() == Some(&'=') {
                    chars.next();
                    tokens.push(Tok::Cmp(CmpOp::Ge));
                } else {
                    tokens.push(Tok::Cmp(CmpOp::Gt));
                }
            }
            '=' => {
                chars.next();
                if chars.peek() == Some(&'=') {
                    chars.next();
                    tokens.push(Tok::Cmp(CmpOp::Eq));
                } else {
                    return Err(ExprError::Syntax {
                        position: tokens.len() + 1,
                        message: "single `=` is not an operator; use `==`".into(),
                    });
                }
            }
            '!' => {
                chars.next();
                if chars.peek() == Some(&'=') {
                    chars.next();
                    tokens.push(Tok::Cmp(CmpOp::Ne));
                } else {
                    return Err(ExprError::Syntax {
                        position: tokens.len() + 1,
                        message: "single `!` is not an operator; use `!=` or NOT".into(),
                    });
                }
            }
            '(' => {
                chars.next();
                tokens.push(Tok::LParen);
            }
            ')' => {
                chars.next();
                tokens.push(Tok::RParen);
            }
            '+' => {
                chars.next();
                tokens.push(Tok::Plus);
            }
            '-' => {
                chars.next();
                tokens.push(Tok::Minus);
            }
            '*' => {
                chars.next();
                tokens.push(Tok::Star);
            }
            '/' => {
                chars.next();
                tokens.push(Tok::Slash);
            }
            _ => return Err(ExprError::BadCharacter { ch: c }),
        }
    }
    Ok(tokens)
}

struct Parser<'p> {
    tokens: Vec<Tok>,
    pos: usize,
    params: &'p BTreeMap<String, f64>,
}

impl<'p> Parser<'p> {
    fn new(input: &str, params: &'p BTreeMap<String, f64>) -> Result<Self, ExprError> {
        Ok(Parser {
            tokens: tokenize(input)?,
            pos: 0,
            params,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let tok = self.tokens.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    /// 1-based position of the token about to be read.
    fn here(&self) -> usize {
        self.pos + 1
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            position: self.here(),
            message: message.into(),
        })
    }

    fn expect_end(&mut self) -> Result<(), ExprError> {
        if self.peek().is_some() {
            self.fail("unexpected trailing input")
        } else {
            Ok(())
        }
    }

    // rule := or_expr
    fn rule_or(&mut self) -> Result<Rule, ExprError> {
        let mut node = self.rule_and()?;
        while matches!(self.peek(), Some(Tok::Or)) {
            self.next();
            let rhs = self.rule_and()?;
            node = Rule::Or(Box::new(node), Box::new(rhs));
        }
        Ok(node)
    }

    fn rule_and(&mut self) -> Result<Rule, ExprError> {
        let mut node = self.rule_unary()?;
        while matches!(self.peek(), Some(Tok::And)) {
            self.next();
            let rhs = self.rule_unary()?;
            node = Rule::And(Box::new(node), Box::new(rhs));
        }
        Ok(node)
    }

    fn rule_unary(&mut self) -> Result<Rule, ExprError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.next();
                Ok(Rule::Not(Box::new(self.rule_unary()?)))
            }
            Some(Tok::LParen) => {
                self.next();
                let inner = self.rule_or()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => self.fail("expected `)`"),
                }
            }
            _ => self.rule_cmp(),
        }
    }

    fn rule_cmp(&mut self) -> Result<Rule, ExprError> {
        let field = match self.next() {
            Some(Tok::Ident(name)) => name,
            Some(_) => return self.fail("expected a field name"),
            None => return self.fail("expected a field name"),
        };
        let op = match self.next() {
            Some(Tok::Cmp(op)) => op,
            Some(_) => return self.fail("expected a comparison operator"),
            None => return self.fail("expected a comparison operator"),
        };
        let literal = match self.next() {
            Some(Tok::Number(v)) => Literal::Num(v),
            Some(Tok::Minus) => match self.next() {
                Some(Tok::Number(v)) => Literal::Num(-v),
                _ => return self.fail("expected a number after `-`"),
            },
            Some(Tok::Ident(word)) => Literal::Token(word),
            Some(Tok::Param(name)) => {
                let position = self.pos;
                match self.params.get(&name) {
                    Some(&v) => Literal::Num(v),
                    None => {
                        return Err(ExprError::UnknownParameter { name, position });
                    }
                }
            }
            Some(_) => return self.fail("expected a literal after the comparison operator"),
            None => return self.fail("expected a literal after the comparison operator"),
        };
        Ok(Rule::Cmp { field, op, literal })
    }

    // arith := term (('+'|'-') term)*
    fn arith_expr(&mut self) -> Result<Arith, ExprError> {
        let mut node = self.arith_term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.next();
                    let rhs = self.arith_term()?;
                    node = Arith::Add(Box::new(node), Box::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.next();
                    let rhs = self.arith_term()?;
                    node = Arith::Sub(Box::new(node), Box::new(rhs));
                }
                _ => return Ok(node),
            }
        }
    }

    fn arith_term(&mut self) -> Result<Arith, ExprError> {
        let mut node = self.arith_unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.next();
                    let rhs = self.arith_unary()?;
                    node = Arith::Mul(Box::new(node), Box::new(rhs));
                }
                Some(Tok::Slash) => {
                    self.next();
                    let rhs = self.arith_unary()?;
                    node = Arith::Div(Box::new(node), Box::new(rhs));
                }
                _ => return Ok(node),
            }
        }
    }

    fn arith_unary(&mut self) -> Result<Arith, ExprError> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.next();
            return Ok(Arith::Neg(Box::new(self.arith_unary()?)));
        }
        self.arith_atom()
    }

    fn arith_atom(&mut self) -> Result<Arith, ExprError> {
        match self.next() {
            Some(Tok::Number(v)) => Ok(Arith::Num(v)),
            Some(Tok::Ident(name)) => Ok(Arith::Var(name)),
            Some(Tok::Param(name)) => {
                let position = self.pos;
                match self.params.get(&name) {
                    Some(&v) => Ok(Arith::Num(v)),
                    None => Err(ExprError::UnknownParameter { name, position }),
                }
            }
            Some(Tok::LParen) => {
                let inner = self.arith_expr()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => self.fail("expected `)`"),
                }
            }
            _ => self.fail("expected a number, variable, or `(`"),
        }
    }
}

/// Parse a cutoff rule. `$name` literals are substituted from `params`.
pub fn parse_rule(input: &str, params: &BTreeMap<String, f64>) -> Result<Rule, ExprError> {
    let mut parser = Parser::new(input, params)?;
    let rule = parser.rule_or()?;
    parser.expect_end()?;
    Ok(rule)
}

/// Parse an arithmetic expression over named variables.
pub fn parse_arith(input: &str, params: &BTreeMap<String, f64>) -> Result<Arith, ExprError> {
    let mut parser = Parser::new(input, params)?;
    let expr = parser.arith_expr()?;
    parser.expect_end()?;
    Ok(expr)
}
