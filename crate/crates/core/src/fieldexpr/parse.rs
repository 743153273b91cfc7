//! Infix expression grammar for scalar fields on a chart.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('-' | '+') unary | power
//! power := atom ('^' unary)?          -- right associative
//! atom  := number | ident | ident '(' expr {',' expr} ')' | '(' expr ')'
//! ```

use std::collections::BTreeMap;
use std::fmt;

use super::FieldError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Tanh,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tanh => "tanh",
        }
    }

    pub fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sqrt => v.sqrt(),
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tanh => v.tanh(),
        }
    }
}

/// Abstract syntax tree node. Variables are zero-based (`x1` is `Var(0)`).
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Num(f64),
    Var(usize),
    Radius,
    Param(String),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn visit_params<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Node::Param(name) => out.push(name),
            Node::Neg(a) | Node::Call(_, a) => a.visit_params(out),
            Node::Binary(_, a, b) => {
                a.visit_params(out);
                b.visit_params(out);
            }
            Node::Num(_) | Node::Var(_) | Node::Radius => {}
        }
    }

    /// Substitutes parameters and folds constant subtrees.
    pub(crate) fn bind(&self, params: &BTreeMap<String, f64>) -> Result<Node, FieldError> {
        let node = match self {
            Node::Param(name) => match params.get(name) {
                Some(v) => Node::Num(*v),
                None => return Err(FieldError::UnboundParameter(name.clone())),
            },
            Node::Num(_) | Node::Var(_) | Node::Radius => self.clone(),
            Node::Neg(a) => match a.bind(params)? {
                Node::Num(v) => Node::Num(-v),
                other => Node::Neg(Box::new(other)),
            },
            Node::Call(f, a) => match a.bind(params)? {
                Node::Num(v) if f.apply(v).is_finite() => Node::Num(f.apply(v)),
                other => Node::Call(*f, Box::new(other)),
            },
            Node::Binary(op, a, b) => {
                let (a, b) = (a.bind(params)?, b.bind(params)?);
                match (&a, &b) {
                    (Node::Num(x), Node::Num(y)) => {
                        let v = match op {
                            BinOp::Add => x + y,
                            BinOp::Sub => x - y,
                            BinOp::Mul => x * y,
                            BinOp::Div => x / y,
                            BinOp::Pow => x.powf(*y),
                        };
                        if v.is_finite() {
                            Node::Num(v)
                        } else {
                            Node::Binary(*op, Box::new(a), Box::new(b))
                        }
                    }
                    _ => Node::Binary(*op, Box::new(a), Box::new(b)),
                }
            }
        };
        Ok(node)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) if *v < 0.0 => write!(f, "(-{})", -v),
            Node::Num(v) => write!(f, "{v}"),
            Node::Var(i) => write!(f, "x{}", i + 1),
            Node::Radius => write!(f, "r"),
            Node::Param(name) => write!(f, "{name}"),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// A parsed scalar expression over chart coordinates `x1..xn` and `r = |x|`.
#[derive(Clone, Debug, PartialEq)]
pub struct Expression {
    pub(crate) root: Node,
    pub(crate) dim: usize,
}

impl Expression {
    pub fn parse(source: &str, dim: usize) -> Result<Self, FieldError> {
        if dim == 0 || dim > super::MAX_VARS {
            return Err(FieldError::UnsupportedDimension(dim));
        }
        let tokens = tokenize(source)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            dim,
        };
        if parser.peek().kind == Tok::End {
            return Err(FieldError::Syntax {
                position: 0,
                message: "empty expression".into(),
            });
        }
        let root = parser.expr()?;
        let tail = parser.peek();
        if tail.kind != Tok::End {
            return Err(FieldError::Syntax {
                position: tail.pos,
                message: format!("unexpected {}", tail.kind.describe()),
            });
        }
        Ok(Self { root, dim })
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        Self {
            root: Node::Num(value),
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Names of the free parameters, sorted and deduplicated.
    pub fn params(&self) -> Vec<String> {
        let mut names = Vec::new();
        self.root.visit_params(&mut names);
        let mut names: Vec<String> = names.into_iter().map(str::to_owned).collect();
        names.sort();
        names.dedup();
        names
    }

    pub fn bind(&self, params: &BTreeMap<String, f64>) -> Result<Self, FieldError> {
        Ok(Self {
            root: self.root.bind(params)?,
            dim: self.dim,
        })
    }

    /// `self ^ exponent`, constant-folded.
    pub fn pow_const(&self, exponent: f64) -> Self {
        let root = match &self.root {
            Node::Num(v) => Node::Num(v.powf(exponent)),
            other => Node::Binary(
                BinOp::Pow,
                Box::new(other.clone()),
                Box::new(Node::Num(exponent)),
            ),
        };
        Self {
            root,
            dim: self.dim,
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.root {
            Node::Num(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Op(c) => format!("operator `{c}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: Tok,
    pos: usize,
}

fn tokenize(source: &str) -> Result<Vec<Token>, FieldError> {
    let bytes = source.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
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
            let value = text.parse::<f64>().map_err(|_| FieldError::Syntax {
                position: start,
                message: format!("malformed number `{text}`"),
            })?;
            Tok::Num(value)
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            Tok::Ident(source[start..i].to_owned())
        } else {
            i += 1;
            match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                _ => {
                    return Err(FieldError::Syntax {
                        position: start,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            }
        };
        out.push(Token { kind, pos: start });
    }
    out.push(Token {
        kind: Tok::End,
        pos: source.len(),
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if tok.kind != Tok::End {
            self.pos += 1;
        }
        tok
    }

    fn expect(&mut self, kind: Tok) -> Result<(), FieldError> {
        let tok = self.bump();
        if tok.kind == kind {
            Ok(())
        } else {
            Err(FieldError::Syntax {
                position: tok.pos,
                message: format!("expected {}, found {}", kind.describe(), tok.kind.describe()),
            })
        }
    }

    fn expr(&mut self) -> Result<Node, FieldError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().kind {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, FieldError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().kind {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, FieldError> {
        match self.peek().kind {
            Tok::Op('-') => {
                self.bump();
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, FieldError> {
        let base = self.atom()?;
        if self.peek().kind == Tok::Op('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, FieldError> {
        let tok = self.bump();
        match tok.kind {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if self.peek().kind == Tok::LParen {
                    return self.call(name, tok.pos);
                }
                self.identifier(name, tok.pos)
            }
            other => Err(FieldError::Syntax {
                position: tok.pos,
                message: format!("unexpected {}", other.describe()),
            }),
        }
    }

    fn call(&mut self, name: String, pos: usize) -> Result<Node, FieldError> {
        let func = Func::from_name(&name)
            .ok_or(FieldError::UnknownIdentifier { name, position: pos })?;
        self.expect(Tok::LParen)?;
        let mut args = vec![self.expr()?];
        while self.peek().kind == Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen)?;
        if args.len() != 1 {
            return Err(FieldError::ArityMismatch {
                function: func.name().into(),
                expected: 1,
                found: args.len(),
            });
        }
        Ok(Node::Call(func, Box::new(args.pop().unwrap())))
    }

    fn identifier(&self, name: String, pos: usize) -> Result<Node, FieldError> {
        if name == "r" {
            return Ok(Node::Radius);
        }
        if name == "pi" {
            return Ok(Node::Num(std::f64::consts::PI));
        }
        if Func::from_name(&name).is_some() {
            return Err(FieldError::ArityMismatch {
                function: name,
                expected: 1,
                found: 0,
            });
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                return match digits.parse::<usize>() {
                    Ok(k) if (1..=self.dim).contains(&k) => Ok(Node::Var(k - 1)),
                    _ => Err(FieldError::UnknownIdentifier { name, position: pos }),
                };
            }
        }
        Ok(Node::Param(name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str, n: usize) -> Node {
        Expression::parse(s, n).unwrap().root
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(
            parse("2^3^2", 1),
            Node::Binary(
                BinOp::Pow,
                Box::new(Node::Num(2.0)),
                Box::new(Node::Binary(
                    BinOp::Pow,
                    Box::new(Node::Num(3.0)),
                    Box::new(Node::Num(2.0))
                ))
            )
        );
        assert_eq!(
            parse("-x1^2", 1),
            Node::Neg(Box::new(Node::Binary(
                BinOp::Pow,
                Box::new(Node::Var(0)),
                Box::new(Node::Num(2.0))
            )))
        );
        assert_eq!(parse("1-2-3", 1).to_string(), "((1 - 2) - 3)");
        assert_eq!(parse("1+2*3", 1).to_string(), "(1 + (2 * 3))");
        assert_eq!(parse("2^-1", 1).to_string(), "(2 ^ (-1))");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match Expression::parse("x1 + * 2", 2) {
            Err(FieldError::Syntax { position, .. }) => assert_eq!(position, 5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            Expression::parse("(x1", 1),
            Err(FieldError::Syntax { position: 3, .. })
        ));
        assert!(matches!(
            Expression::parse("   ", 1),
            Err(FieldError::Syntax { .. })
        ));
        assert!(matches!(
            Expression::parse("x1 # 2", 1),
            Err(FieldError::Syntax { position: 3, .. })
        ));
    }

    #[test]
    fn identifiers_are_checked() {
        assert!(matches!(
            Expression::parse("x4", 3),
            Err(FieldError::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            Expression::parse("abs(x1)", 3),
            Err(FieldError::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            Expression::parse("sin(x1, x2)", 3),
            Err(FieldError::ArityMismatch { found: 2, .. })
        ));
        assert!(matches!(
            Expression::parse("exp + 1", 3),
            Err(FieldError::ArityMismatch { found: 0, .. })
        ));
        let e = Expression::parse("m*x1 + sigma*r + m", 3).unwrap();
        assert_eq!(e.params(), vec!["m".to_string(), "sigma".to_string()]);
    }

    #[test]
    fn binding_folds_constants() {
        let e = Expression::parse("sqrt(8*m*(r - 2*m))", 3).unwrap();
        let mut p = BTreeMap::new();
        assert!(matches!(e.bind(&p), Err(FieldError::UnboundParameter(_))));
        p.insert("m".to_string(), 1.0);
        let b = e.bind(&p).unwrap();
        assert_eq!(b.to_string(), "sqrt((8 * (r - 2)))");
    }
}
