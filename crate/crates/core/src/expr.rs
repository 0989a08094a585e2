//! A small arithmetic expression language for user-supplied coefficient
//! functions such as `q(t)`, `p(t, y)` and `h_i(t, y)`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    = sum ;
//! sum     = product { ("+" | "-") product } ;          (* left-assoc *)
//! product = unary { ("*" | "/") unary } ;              (* left-assoc *)
//! unary   = ("-" | "+") unary | power ;
//! power   = primary [ "^" unary ] ;                    (* right-assoc *)
//! primary = number | variable | func "(" expr ")" | "(" expr ")" ;
//! func    = "sin" | "cos" | "exp" | "log" | "sqrt" | "abs" ;
//! number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```
//!
//! `^` binds tighter than unary minus, so `-t^2` is `-(t^2)`, and `a-b-c` is
//! `(a-b)-c`. Variables must be declared when parsing.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("lexical error at byte {position}: unexpected character {character:?}")]
    Lexical { position: usize, character: char },
    #[error("invalid number {text:?} at byte {position}")]
    BadNumber { position: usize, text: String },
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown identifier {name:?} at byte {position}")]
    UnknownIdentifier { position: usize, name: String },
    #[error("domain fault at byte {position}: {message}")]
    Domain { position: usize, message: String },
    #[error("no value bound for variable {name:?}")]
    Unbound { name: String },
}

impl ExprError {
    pub fn position(&self) -> Option<usize> {
        match self {
            ExprError::Lexical { position, .. }
            | ExprError::BadNumber { position, .. }
            | ExprError::Syntax { position, .. }
            | ExprError::UnknownIdentifier { position, .. }
            | ExprError::Domain { position, .. } => Some(*position),
            ExprError::Unbound { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Number,
    Identifier,
    Operator,
    LeftParen,
    RightParen,
    Comma,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// Byte offset into the source.
    pub position: usize,
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = |kind| Token { kind, text: (c as char).to_string(), position: start };
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => tokens.push(single(TokenKind::Operator)),
            b'(' => tokens.push(single(TokenKind::LeftParen)),
            b')' => tokens.push(single(TokenKind::RightParen)),
            b',' => tokens.push(single(TokenKind::Comma)),
            b'0'..=b'9' | b'.' => {
                i = scan_number(bytes, i)?;
                let text = &source[start..i];
                match text.parse::<f64>() {
                    Ok(v) if v.is_finite() => {
                        tokens.push(Token { kind: TokenKind::Number, text: text.to_string(), position: start })
                    }
                    _ => return Err(ExprError::BadNumber { position: start, text: text.to_string() }),
                }
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push(Token { kind: TokenKind::Identifier, text: source[start..i].to_string(), position: start });
                continue;
            }
            _ => {
                let character = source[start..].chars().next().unwrap_or('\u{fffd}');
                return Err(ExprError::Lexical { position: start, character });
            }
        }
        i += 1;
    }
    Ok(tokens)
}

/// Returns the end of the number starting at `i`. A `.` must be followed by a
/// digit, so `2..3` fails at the first dot.
fn scan_number(bytes: &[u8], mut i: usize) -> Result<usize, ExprError> {
    let digits = |mut j: usize| {
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        j
    };
    i = digits(i);
    if i < bytes.len() && bytes[i] == b'.' {
        if i + 1 >= bytes.len() || !bytes[i + 1].is_ascii_digit() {
            return Err(ExprError::Lexical { position: i, character: '.' });
        }
        i = digits(i + 1);
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            i = digits(j);
        }
    }
    Ok(i)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "*" => BinaryOp::Mul,
            "/" => BinaryOp::Div,
            "^" => BinaryOp::Pow,
            _ => return None,
        })
    }

    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 1,
            BinaryOp::Mul | BinaryOp::Div => 2,
            BinaryOp::Pow => 4,
        }
    }

    fn right_assoc(self) -> bool {
        self == BinaryOp::Pow
    }
}

const UNARY_PRECEDENCE: u8 = 3;
const ATOM_PRECEDENCE: u8 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Function {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Function {
    pub const ALL: [Function; 6] =
        [Function::Sin, Function::Cos, Function::Exp, Function::Log, Function::Sqrt, Function::Abs];

    pub fn name(self) -> &'static str {
        match self {
            Function::Sin => "sin",
            Function::Cos => "cos",
            Function::Exp => "exp",
            Function::Log => "log",
            Function::Sqrt => "sqrt",
            Function::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone)]
pub enum NodeKind {
    Constant(f64),
    /// `slot` indexes the variable list the expression was parsed with.
    Variable {
        name: String,
        slot: usize,
    },
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
    Call(Function, Box<Node>),
}

/// Parse-tree node. Equality compares structure only, not source positions.
#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeKind,
    pub position: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        use NodeKind::*;
        match (&self.kind, &other.kind) {
            (Constant(a), Constant(b)) => a.to_bits() == b.to_bits(),
            (Variable { name: a, .. }, Variable { name: b, .. }) => a == b,
            (Unary(o1, a), Unary(o2, b)) => o1 == o2 && a == b,
            (Binary(o1, l1, r1), Binary(o2, l2, r2)) => o1 == o2 && l1 == l2 && r1 == r2,
            (Call(f1, a), Call(f2, b)) => f1 == f2 && a == b,
            _ => false,
        }
    }
}

impl Node {
    fn precedence(&self) -> u8 {
        match &self.kind {
            NodeKind::Constant(c) if *c < 0.0 || c.is_sign_negative() => UNARY_PRECEDENCE,
            NodeKind::Constant(_) | NodeKind::Variable { .. } | NodeKind::Call(..) => ATOM_PRECEDENCE,
            NodeKind::Unary(..) => UNARY_PRECEDENCE,
            NodeKind::Binary(op, ..) => op.precedence(),
        }
    }

    fn eval(&self, values: &[f64]) -> Result<f64, ExprError> {
        let fault = |message: String| ExprError::Domain { position: self.position, message };
        let v = match &self.kind {
            NodeKind::Constant(c) => *c,
            NodeKind::Variable { name, slot } => {
                *values.get(*slot).ok_or_else(|| ExprError::Unbound { name: name.clone() })?
            }
            NodeKind::Unary(UnaryOp::Neg, a) => -a.eval(values)?,
            NodeKind::Unary(UnaryOp::Plus, a) => a.eval(values)?,
            NodeKind::Binary(op, l, r) => {
                let (x, y) = (l.eval(values)?, r.eval(values)?);
                match op {
                    BinaryOp::Add => x + y,
                    BinaryOp::Sub => x - y,
                    BinaryOp::Mul => x * y,
                    BinaryOp::Div => {
                        if y == 0.0 {
                            return Err(fault("division by zero".into()));
                        }
                        x / y
                    }
                    BinaryOp::Pow => {
                        if x < 0.0 && y.fract() != 0.0 {
                            return Err(fault(format!("negative base {x} with non-integer exponent {y}")));
                        }
                        x.powf(y)
                    }
                }
            }
            NodeKind::Call(f, a) => {
                let x = a.eval(values)?;
                match f {
                    Function::Sin => x.sin(),
                    Function::Cos => x.cos(),
                    Function::Exp => x.exp(),
                    Function::Abs => x.abs(),
                    Function::Log => {
                        if x <= 0.0 {
                            return Err(fault(format!("log of non-positive value {x}")));
                        }
                        x.ln()
                    }
                    Function::Sqrt => {
                        if x < 0.0 {
                            return Err(fault(format!("sqrt of negative value {x}")));
                        }
                        x.sqrt()
                    }
                }
            }
        };
        if !v.is_finite() {
            return Err(fault(format!("non-finite result {v}")));
        }
        Ok(v)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let child = |f: &mut fmt::Formatter<'_>, node: &Node, parens: bool| {
            if parens {
                write!(f, "({node})")
            } else {
                write!(f, "{node}")
            }
        };
        match &self.kind {
            NodeKind::Constant(c) if c.is_sign_negative() => write!(f, "({c:?})"),
            NodeKind::Constant(c) => write!(f, "{c:?}"),
            NodeKind::Variable { name, .. } => f.write_str(name),
            NodeKind::Call(func, a) => write!(f, "{}({a})", func.name()),
            NodeKind::Unary(op, a) => {
                f.write_str(if *op == UnaryOp::Neg { "-" } else { "+" })?;
                child(f, a, a.precedence() < UNARY_PRECEDENCE)
            }
            NodeKind::Binary(op, l, r) => {
                let p = op.precedence();
                if op.right_assoc() {
                    child(f, l, l.precedence() <= p)?;
                    f.write_str(op.symbol())?;
                    child(f, r, r.precedence() < UNARY_PRECEDENCE)
                } else {
                    child(f, l, l.precedence() < p)?;
                    f.write_str(op.symbol())?;
                    child(f, r, r.precedence() <= p)
                }
            }
        }
    }
}

/// A parsed, immutable expression over a declared list of variables.
#[derive(Debug, Clone)]
pub struct Expression {
    root: Node,
    variables: Vec<String>,
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl Expression {
    pub fn parse(source: &str, variables: &[&str]) -> Result<Self, ExprError> {
        parse(&tokenize(source)?, variables)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    /// Evaluate with values given in declaration order.
    pub fn eval(&self, values: &[f64]) -> Result<f64, ExprError> {
        self.root.eval(values)
    }

    /// True when the tree contains no variables.
    pub fn is_constant(&self) -> bool {
        fn walk(n: &Node) -> bool {
            match &n.kind {
                NodeKind::Constant(_) => true,
                NodeKind::Variable { .. } => false,
                NodeKind::Unary(_, a) | NodeKind::Call(_, a) => walk(a),
                NodeKind::Binary(_, l, r) => walk(l) && walk(r),
            }
        }
        walk(&self.root)
    }
}

/// Evaluate with named bindings.
pub fn evaluate(expr: &Expression, bindings: &BTreeMap<String, f64>) -> Result<f64, ExprError> {
    let values = expr
        .variables
        .iter()
        .map(|name| bindings.get(name).copied().ok_or_else(|| ExprError::Unbound { name: name.clone() }))
        .collect::<Result<Vec<_>, _>>()?;
    expr.eval(&values)
}

pub fn parse(tokens: &[Token], variables: &[&str]) -> Result<Expression, ExprError> {
    let mut parser = Parser { tokens, pos: 0, variables };
    let root = parser.binary(1)?;
    if let Some(tok) = parser.peek() {
        return Err(ExprError::Syntax { position: tok.position, message: format!("unexpected {:?}", tok.text) });
    }
    Ok(Expression { root, variables: variables.iter().map(|s| s.to_string()).collect() })
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    variables: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn end_position(&self) -> usize {
        self.tokens.last().map(|t| t.position + t.text.len()).unwrap_or(0)
    }

    fn next(&mut self) -> Result<&'a Token, ExprError> {
        let tok = self.tokens.get(self.pos).ok_or_else(|| ExprError::Syntax {
            position: self.end_position(),
            message: "unexpected end of input".into(),
        })?;
        self.pos += 1;
        Ok(tok)
    }

    /// Precedence climbing over binary operators with precedence ≥ `min`.
    fn binary(&mut self, min: u8) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(tok) = self.peek() {
            let op = match (tok.kind, BinaryOp::from_symbol(&tok.text)) {
                (TokenKind::Operator, Some(op)) if op.precedence() >= min => op,
                _ => break,
            };
            self.pos += 1;
            let next_min = if op.right_assoc() { op.precedence() } else { op.precedence() + 1 };
            let rhs = self.binary(next_min)?;
            lhs = Node { kind: NodeKind::Binary(op, Box::new(lhs), Box::new(rhs)), position: tok.position };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if let Some(tok) = self.peek() {
            if tok.kind == TokenKind::Operator && (tok.text == "-" || tok.text == "+") {
                self.pos += 1;
                let op = if tok.text == "-" { UnaryOp::Neg } else { UnaryOp::Plus };
                // Operand takes only operators binding tighter than unary minus.
                let operand = self.binary(UNARY_PRECEDENCE + 1)?;
                return Ok(Node { kind: NodeKind::Unary(op, Box::new(operand)), position: tok.position });
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Node, ExprError> {
        let tok = self.next()?;
        match tok.kind {
            TokenKind::Number => Ok(Node {
                kind: NodeKind::Constant(
                    tok.text
                        .parse()
                        .map_err(|_| ExprError::BadNumber { position: tok.position, text: tok.text.clone() })?,
                ),
                position: tok.position,
            }),
            TokenKind::LeftParen => {
                let inner = self.binary(1)?;
                self.expect_right_paren()?;
                Ok(inner)
            }
            TokenKind::Identifier => {
                if let Some(func) = Function::from_name(&tok.text) {
                    match self.peek() {
                        Some(t) if t.kind == TokenKind::LeftParen => self.pos += 1,
                        _ => {
                            return Err(ExprError::Syntax {
                                position: tok.position,
                                message: format!("function {} requires an argument in parentheses", tok.text),
                            })
                        }
                    }
                    let arg = self.binary(1)?;
                    self.expect_right_paren()?;
                    return Ok(Node { kind: NodeKind::Call(func, Box::new(arg)), position: tok.position });
                }
                match self.variables.iter().position(|v| *v == tok.text) {
                    Some(slot) => {
                        Ok(Node { kind: NodeKind::Variable { name: tok.text.clone(), slot }, position: tok.position })
                    }
                    None => Err(ExprError::UnknownIdentifier { position: tok.position, name: tok.text.clone() }),
                }
            }
            _ => Err(ExprError::Syntax { position: tok.position, message: format!("unexpected {:?}", tok.text) }),
        }
    }

    fn expect_right_paren(&mut self) -> Result<(), ExprError> {
        let tok = self.next()?;
        if tok.kind != TokenKind::RightParen {
            return Err(ExprError::Syntax {
                position: tok.position,
                message: format!("expected ')', found {:?}", tok.text),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src).unwrap().into_iter().map(|t| (t.kind, t.text)).collect()
    }

    fn eval(src: &str, vars: &[&str], values: &[f64]) -> Result<f64, ExprError> {
        Expression::parse(src, vars)?.eval(values)
    }

    #[test]
    fn tokenize_examples() {
        use TokenKind::*;
        let k = kinds("2+3*4");
        assert_eq!(
            k,
            vec![
                (Number, "2".into()),
                (Operator, "+".into()),
                (Number, "3".into()),
                (Operator, "*".into()),
                (Number, "4".into())
            ]
        );
        let k = kinds("exp(-t)");
        assert_eq!(
            k.iter().map(|x| x.0).collect::<Vec<_>>(),
            vec![Identifier, LeftParen, Operator, Identifier, RightParen]
        );
        assert_eq!(tokenize("2..3"), Err(ExprError::Lexical { position: 1, character: '.' }));
        assert!(matches!(tokenize("t # 2"), Err(ExprError::Lexical { position: 2, character: '#' })));
        assert_eq!(kinds("1.5e-3")[0].1, "1.5e-3");
    }

    #[test]
    fn positions_strictly_increase() {
        let toks = tokenize(" sin( t ) * 2.5e1 , y").unwrap();
        assert!(toks.windows(2).all(|w| w[0].position < w[1].position));
    }

    #[test]
    fn parse_examples() {
        assert_eq!(eval("2+3*4", &[], &[]).unwrap(), 14.0);
        assert_eq!(eval("-t^2", &["t"], &[3.0]).unwrap(), -9.0);
        assert_eq!(
            Expression::parse("q(t)", &["t"]),
            Err(ExprError::UnknownIdentifier { position: 0, name: "q".into() })
        );
        assert!(matches!(Expression::parse("2+*3", &[]), Err(ExprError::Syntax { position: 2, .. })));
        assert!(matches!(Expression::parse("(1+2", &[]), Err(ExprError::Syntax { .. })));
        assert!(matches!(Expression::parse("sin t", &["t"]), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn associativity() {
        assert_eq!(eval("8-4-2", &[], &[]).unwrap(), 2.0);
        assert_eq!(eval("16/4/2", &[], &[]).unwrap(), 2.0);
        assert_eq!(eval("2^3^2", &[], &[]).unwrap(), 512.0);
        assert_eq!(eval("2^-1", &[], &[]).unwrap(), 0.5);
        assert_eq!(eval("-2^2*3", &[], &[]).unwrap(), -12.0);
    }

    #[test]
    fn evaluate_examples() {
        let e = Expression::parse("t^2 - y", &["t", "y"]).unwrap();
        let mut b = BTreeMap::new();
        b.insert("t".to_string(), 2.0);
        b.insert("y".to_string(), 1.0);
        assert_eq!(evaluate(&e, &b).unwrap(), 3.0);
        assert_eq!(eval("exp(0)*4", &[], &[]).unwrap(), 4.0);
        assert!(matches!(eval("sqrt(t)", &["t"], &[-1.0]), Err(ExprError::Domain { position: 0, .. })));
        assert!(matches!(eval("1/(t-1)", &["t"], &[1.0]), Err(ExprError::Domain { position: 1, .. })));
        assert!(matches!(eval("log(0)", &[], &[]), Err(ExprError::Domain { .. })));
        assert!(matches!(eval("(-2)^0.5", &[], &[]), Err(ExprError::Domain { .. })));
        assert_eq!(eval("(-2)^3", &[], &[]).unwrap(), -8.0);
        assert!(matches!(eval("exp(1000)", &[], &[]), Err(ExprError::Domain { .. })));
        b.remove("y");
        assert!(matches!(evaluate(&e, &b), Err(ExprError::Unbound { .. })));
    }

    #[test]
    fn constant_detection() {
        assert!(Expression::parse("1", &["t", "y"]).unwrap().is_constant());
        assert!(!Expression::parse("1+0*y", &["t", "y"]).unwrap().is_constant());
    }

    /// Random expression source over + - * / ^, unary minus, calls and variables.
    fn arb_source() -> impl Strategy<Value = String> {
        let leaf = prop_oneof![
            (0u32..100).prop_map(|n| n.to_string()),
            (0u32..1000).prop_map(|n| format!("{}.{}", n / 10, n % 10)),
            Just("t".to_string()),
            Just("y".to_string()),
        ];
        leaf.prop_recursive(5, 64, 2, |inner| {
            prop_oneof![
                (inner.clone(), prop::sample::select(vec!["+", "-", "*", "/", "^"]), inner.clone())
                    .prop_map(|(a, op, b)| format!("{a}{op}{b}")),
                (inner.clone(), prop::sample::select(vec!["+", "-", "*", "/", "^"]), inner.clone())
                    .prop_map(|(a, op, b)| format!("({a}){op}({b})")),
                inner.clone().prop_map(|a| format!("-{a}")),
                (prop::sample::select(vec!["sin", "cos", "exp", "abs"]), inner).prop_map(|(f, a)| format!("{f}({a})")),
            ]
        })
    }

    /// Brute-force oracle for flat `n op n op …` strings: resolve `*` and `/`
    /// left to right first, then `+` and `-`.
    fn flat_oracle(nums: &[f64], ops: &[char]) -> f64 {
        let mut terms = vec![nums[0]];
        let mut signs = Vec::new();
        for (op, &x) in ops.iter().zip(&nums[1..]) {
            match op {
                '*' => *terms.last_mut().unwrap() *= x,
                '/' => *terms.last_mut().unwrap() /= x,
                _ => {
                    signs.push(*op);
                    terms.push(x);
                }
            }
        }
        let mut acc = terms[0];
        for (s, t) in signs.iter().zip(&terms[1..]) {
            if *s == '+' {
                acc += t;
            } else {
                acc -= t;
            }
        }
        acc
    }

    #[derive(Debug, Clone)]
    enum Tree {
        Leaf(f64),
        Op(char, Box<Tree>, Box<Tree>),
    }

    impl Tree {
        /// `None` when some division has a zero divisor.
        fn value(&self) -> Option<f64> {
            match self {
                Tree::Leaf(v) => Some(*v),
                Tree::Op(op, a, b) => {
                    let (x, y) = (a.value()?, b.value()?);
                    Some(match op {
                        '+' => x + y,
                        '-' => x - y,
                        '*' => x * y,
                        _ if y == 0.0 => return None,
                        _ => x / y,
                    })
                }
            }
        }

        fn parenthesized(&self) -> String {
            match self {
                Tree::Leaf(v) => format!("{v:?}"),
                Tree::Op(op, a, b) => format!("({}{op}{})", a.parenthesized(), b.parenthesized()),
            }
        }
    }

    fn arb_tree() -> impl Strategy<Value = Tree> {
        (1u32..20).prop_map(|n| Tree::Leaf(f64::from(n))).prop_recursive(5, 32, 2, |inner| {
            (prop::sample::select(vec!['+', '-', '*', '/']), inner.clone(), inner)
                .prop_map(|(op, a, b)| Tree::Op(op, Box::new(a), Box::new(b)))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn minimal_parentheses_preserve_value(tree in arb_tree()) {
            let full = tree.parenthesized();
            let parsed = Expression::parse(&full, &[]).unwrap();
            let minimal = parsed.to_string();
            let want = tree.value();
            prop_assume!(want.is_some());
            let want = want.unwrap();
            for src in [&full, &minimal] {
                let got = eval(src, &[], &[]).unwrap();
                prop_assert!(got == want || (got - want).abs() <= 1e-12 * want.abs(), "{} = {} vs {}", src, got, want);
            }
        }

        #[test]
        fn display_reparses_to_same_tree(src in arb_source()) {
            let e = Expression::parse(&src, &["t", "y"]).unwrap();
            let printed = e.to_string();
            let again = Expression::parse(&printed, &["t", "y"]).unwrap();
            prop_assert_eq!(&e, &again, "{} -> {}", src, printed);
        }

        #[test]
        fn precedence_matches_flat_oracle(
            nums in prop::collection::vec(1u32..50, 2..7),
            ops in prop::collection::vec(prop::sample::select(vec!['+', '-', '*', '/']), 6),
        ) {
            let ops = &ops[..nums.len() - 1];
            let mut src = nums[0].to_string();
            for (op, n) in ops.iter().zip(&nums[1..]) {
                src.push(*op);
                src.push_str(&n.to_string());
            }
            let vals: Vec<f64> = nums.iter().map(|&n| f64::from(n)).collect();
            let got = eval(&src, &[], &[]).unwrap();
            let want = flat_oracle(&vals, ops);
            prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{} = {} vs {}", src, got, want);
        }
    }
}
