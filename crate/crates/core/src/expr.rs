//! Closed-form expressions for config-defined dynamics and references.
//!
//! Grammar: numeric literals, the time variable `t`, state variables
//! `x1, x2, ...`, the operators `+ - * / ^`, parentheses, and calls to the
//! whitelisted functions `sin`, `cos`, `exp`. `^` is right-associative and
//! binds tighter than unary minus. Anything else is rejected at parse time,
//! so a scenario file cannot smuggle in arbitrary code.

use crate::error::{Error, Result};

const FUNCTIONS: &[&str] = &["sin", "cos", "exp"];

#[derive(Debug, Clone)]
enum Node {
    Num(f64),
    Time,
    /// 0-based state index.
    State(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Sin(Box<Node>),
    Cos(Box<Node>),
    Exp(Box<Node>),
}

/// A parsed, evaluable expression over `t` and `x1..xN`.
#[derive(Debug, Clone)]
pub struct Expression {
    root: Node,
    source: String,
    max_state: Option<usize>,
    uses_time: bool,
}

impl Expression {
    pub fn parse(source: &str) -> Result<Self> {
        let tokens = tokenize(source)?;
        let mut parser = Parser { tokens, pos: 0 };
        let root = parser.expression()?;
        if parser.pos != parser.tokens.len() {
            return Err(Error::Expr(format!(
                "unexpected trailing input in '{source}'"
            )));
        }
        let mut max_state = None;
        let mut uses_time = false;
        scan(&root, &mut max_state, &mut uses_time);
        Ok(Self {
            root,
            source: source.to_string(),
            max_state,
            uses_time,
        })
    }

    /// Evaluates with 0-based state slice `x` (so `x1` reads `x[0]`).
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        eval(&self.root, x, t)
    }

    /// Highest 1-based state variable referenced, if any.
    pub fn max_state_index(&self) -> Option<usize> {
        self.max_state
    }

    pub fn uses_time(&self) -> bool {
        self.uses_time
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

fn scan(node: &Node, max_state: &mut Option<usize>, uses_time: &mut bool) {
    match node {
        Node::Num(_) => {}
        Node::Time => *uses_time = true,
        Node::State(k) => {
            let level = k + 1;
            *max_state = Some(max_state.map_or(level, |m: usize| m.max(level)));
        }
        Node::Neg(a) | Node::Sin(a) | Node::Cos(a) | Node::Exp(a) => {
            scan(a, max_state, uses_time)
        }
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b)
        | Node::Pow(a, b) => {
            scan(a, max_state, uses_time);
            scan(b, max_state, uses_time);
        }
    }
}

fn eval(node: &Node, x: &[f64], t: f64) -> f64 {
    match node {
        Node::Num(v) => *v,
        Node::Time => t,
        Node::State(k) => x[*k],
        Node::Neg(a) => -eval(a, x, t),
        Node::Add(a, b) => eval(a, x, t) + eval(b, x, t),
        Node::Sub(a, b) => eval(a, x, t) - eval(b, x, t),
        Node::Mul(a, b) => eval(a, x, t) * eval(b, x, t),
        Node::Div(a, b) => eval(a, x, t) / eval(b, x, t),
        Node::Pow(a, b) => eval(a, x, t).powf(eval(b, x, t)),
        Node::Sin(a) => eval(a, x, t).sin(),
        Node::Cos(a) => eval(a, x, t).cos(),
        Node::Exp(a) => eval(a, x, t).exp(),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
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

fn tokenize(source: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = source.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                tokens.push(Token::Plus);
                i += 1;
            }
            '-' => {
                tokens.push(Token::Minus);
                i += 1;
            }
            '*' => {
                tokens.push(Token::Star);
                i += 1;
            }
            '/' => {
                tokens.push(Token::Slash);
                i += 1;
            }
            '^' => {
                tokens.push(Token::Caret);
                i += 1;
            }
            '(' => {
                tokens.push(Token::LParen);
                i += 1;
            }
            ')' => {
                tokens.push(Token::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && matches!(chars[i], '0'..='9' | '.') {
                    i += 1;
                }
                // Exponent suffix like 1.5e-3.
                if i < chars.len() && matches!(chars[i], 'e' | 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && matches!(chars[j], '+' | '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let value = text.parse::<f64>().map_err(|_| {
                    Error::Expr(format!("invalid number '{text}' in '{source}'"))
                })?;
                tokens.push(Token::Num(value));
            }
            'a'..='z' | 'A'..='Z' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                tokens.push(Token::Ident(chars[start..i].iter().collect()));
            }
            other => {
                return Err(Error::Expr(format!(
                    "unexpected character '{other}' in '{source}'"
                )))
            }
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, token: Token) -> Result<()> {
        match self.next() {
            Some(t) if t == token => Ok(()),
            other => Err(Error::Expr(format!(
                "expected {token:?}, found {other:?}"
            ))),
        }
    }

    fn expression(&mut self) -> Result<Node> {
        let mut node = self.term()?;
        while let Some(op) = self.peek() {
            match op {
                Token::Plus => {
                    self.next();
                    node = Node::Add(Box::new(node), Box::new(self.term()?));
                }
                Token::Minus => {
                    self.next();
                    node = Node::Sub(Box::new(node), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(node)
    }

    fn term(&mut self) -> Result<Node> {
        let mut node = self.unary()?;
        while let Some(op) = self.peek() {
            match op {
                Token::Star => {
                    self.next();
                    node = Node::Mul(Box::new(node), Box::new(self.unary()?));
                }
                Token::Slash => {
                    self.next();
                    node = Node::Div(Box::new(node), Box::new(self.unary()?));
                }
                _ => break,
            }
        }
        Ok(node)
    }

    fn unary(&mut self) -> Result<Node> {
        if matches!(self.peek(), Some(Token::Minus)) {
            self.next();
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Token::Caret)) {
            self.next();
            // Right-associative; the exponent may carry its own sign.
            let exponent = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.next() {
            Some(Token::Num(v)) => Ok(Node::Num(v)),
            Some(Token::LParen) => {
                let inner = self.expression()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => self.ident(name),
            other => Err(Error::Expr(format!("expected a value, found {other:?}"))),
        }
    }

    fn ident(&mut self, name: String) -> Result<Node> {
        if name == "t" {
            return Ok(Node::Time);
        }
        if let Some(index) = name.strip_prefix('x') {
            if let Ok(k) = index.parse::<usize>() {
                if k == 0 {
                    return Err(Error::Expr("state variables start at x1".into()));
                }
                return Ok(Node::State(k - 1));
            }
        }
        if FUNCTIONS.contains(&name.as_str()) {
            self.expect(Token::LParen)?;
            let arg = self.expression()?;
            self.expect(Token::RParen)?;
            return Ok(match name.as_str() {
                "sin" => Node::Sin(Box::new(arg)),
                "cos" => Node::Cos(Box::new(arg)),
                _ => Node::Exp(Box::new(arg)),
            });
        }
        Err(Error::Expr(format!(
            "unknown identifier '{name}': allowed are t, x1..xN, and {FUNCTIONS:?}"
        )))
    }
}
