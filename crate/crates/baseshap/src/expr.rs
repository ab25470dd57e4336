//! Text DSL for value functions: parser, evaluator, and reverse-mode
//! gradients w.r.t. the input variables.
//!
//! Grammar: infix `+ - * /` and right-associative `^` (highest binary
//! precedence), unary minus (binds looser than `^`), parentheses,
//! variables `x1`..`x25`, decimal literals, the constant `pi`, and the
//! functions sigmoid, exp, log, sqrt, abs, sin, cos, tan, asin, acos,
//! atan, sinh, tanh, sec, max(a, b), min(a, b). Implicit multiplication
//! is not supported.

use crate::error::{Error, Result};

pub const MAX_VAR_INDEX: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnOp {
    Sigmoid,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sin,
    Cos,
    Tan,
    Asin,
    Acos,
    Atan,
    Sinh,
    Tanh,
    Sec,
}

impl UnOp {
    fn name(self) -> &'static str {
        match self {
            UnOp::Sigmoid => "sigmoid",
            UnOp::Exp => "exp",
            UnOp::Log => "log",
            UnOp::Sqrt => "sqrt",
            UnOp::Abs => "abs",
            UnOp::Sin => "sin",
            UnOp::Cos => "cos",
            UnOp::Tan => "tan",
            UnOp::Asin => "asin",
            UnOp::Acos => "acos",
            UnOp::Atan => "atan",
            UnOp::Sinh => "sinh",
            UnOp::Tanh => "tanh",
            UnOp::Sec => "sec",
        }
    }

    fn from_name(name: &str) -> Option<UnOp> {
        Some(match name {
            "sigmoid" => UnOp::Sigmoid,
            "exp" => UnOp::Exp,
            "log" => UnOp::Log,
            "sqrt" => UnOp::Sqrt,
            "abs" => UnOp::Abs,
            "sin" => UnOp::Sin,
            "cos" => UnOp::Cos,
            "tan" => UnOp::Tan,
            "asin" => UnOp::Asin,
            "acos" => UnOp::Acos,
            "atan" => UnOp::Atan,
            "sinh" => UnOp::Sinh,
            "tanh" => UnOp::Tanh,
            "sec" => UnOp::Sec,
            _ => return None,
        })
    }
}

/// One graph node. Operand indices always precede the consumer.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    /// 0-based variable index.
    Var(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Pow(usize, usize),
    Neg(usize),
    Un(UnOp, usize),
    Max(usize, usize),
    Min(usize, usize),
}

/// Parsed arithmetic expression as a topologically ordered node list.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprGraph {
    nodes: Vec<Node>,
    arity: usize,
    root: usize,
}

/// Value and gradient of an expression at one input.
#[derive(Debug, Clone, PartialEq)]
pub struct GradResult {
    pub value: f64,
    /// Gradient w.r.t. x1..x_arity.
    pub gradient: Vec<f64>,
}

const SEC_COS_EPS: f64 = 1e-12;

fn sigmoid(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

impl ExprGraph {
    pub fn parse(source: &str) -> Result<ExprGraph> {
        Parser::new(source)?.parse()
    }

    /// Highest variable index referenced (0 for constant expressions).
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() < self.arity {
            return Err(Error::Dimension {
                expected: self.arity,
                got: input.len(),
            });
        }
        let mut vals = Vec::with_capacity(self.nodes.len());
        for (idx, node) in self.nodes.iter().enumerate() {
            let v = match *node {
                Node::Const(c) => c,
                Node::Var(i) => input[i],
                Node::Add(a, b) => vals[a] + vals[b],
                Node::Sub(a, b) => vals[a] - vals[b],
                Node::Mul(a, b) => vals[a] * vals[b],
                Node::Div(a, b) => {
                    if vals[b] == 0.0 {
                        return Err(Error::Domain {
                            node: idx,
                            op: "division by",
                            value: vals[b],
                        });
                    }
                    vals[a] / vals[b]
                }
                Node::Pow(a, b) => eval_pow(idx, vals[a], vals[b])?,
                Node::Neg(a) => -vals[a],
                Node::Un(op, a) => eval_un(idx, op, vals[a])?,
                Node::Max(a, b) => {
                    if vals[a] >= vals[b] {
                        vals[a]
                    } else {
                        vals[b]
                    }
                }
                Node::Min(a, b) => {
                    if vals[a] <= vals[b] {
                        vals[a]
                    } else {
                        vals[b]
                    }
                }
            };
            if !v.is_finite() {
                return Err(Error::Domain {
                    node: idx,
                    op: "non-finite result of",
                    value: v,
                });
            }
            vals.push(v);
        }
        Ok(vals)
    }

    pub fn eval(&self, input: &[f64]) -> Result<f64> {
        Ok(self.forward(input)?[self.root])
    }

    /// Reverse-mode gradient accumulation through the graph.
    pub fn grad(&self, input: &[f64]) -> Result<GradResult> {
        let vals = self.forward(input)?;
        let mut adj = vec![0.0; self.nodes.len()];
        adj[self.root] = 1.0;
        let mut gradient = vec![0.0; self.arity];
        for idx in (0..self.nodes.len()).rev() {
            let a_bar = adj[idx];
            if a_bar == 0.0 {
                continue;
            }
            match self.nodes[idx] {
                Node::Const(_) => {}
                Node::Var(i) => gradient[i] += a_bar,
                Node::Add(a, b) => {
                    adj[a] += a_bar;
                    adj[b] += a_bar;
                }
                Node::Sub(a, b) => {
                    adj[a] += a_bar;
                    adj[b] -= a_bar;
                }
                Node::Mul(a, b) => {
                    adj[a] += a_bar * vals[b];
                    adj[b] += a_bar * vals[a];
                }
                Node::Div(a, b) => {
                    adj[a] += a_bar / vals[b];
                    adj[b] -= a_bar * vals[a] / (vals[b] * vals[b]);
                }
                Node::Pow(a, b) => {
                    let (da, db) = pow_partials(idx, vals[a], vals[b], &self.nodes[b])?;
                    adj[a] += a_bar * da;
                    adj[b] += a_bar * db;
                }
                Node::Neg(a) => adj[a] -= a_bar,
                Node::Un(op, a) => adj[a] += a_bar * un_partial(idx, op, vals[a], vals[idx])?,
                Node::Max(a, b) => {
                    // Tie: first argument wins.
                    if vals[a] >= vals[b] {
                        adj[a] += a_bar;
                    } else {
                        adj[b] += a_bar;
                    }
                }
                Node::Min(a, b) => {
                    if vals[a] <= vals[b] {
                        adj[a] += a_bar;
                    } else {
                        adj[b] += a_bar;
                    }
                }
            }
        }
        Ok(GradResult {
            value: vals[self.root],
            gradient,
        })
    }

    /// Renders the graph back to source text (fully parenthesized).
    pub fn unparse(&self) -> String {
        self.render(self.root)
    }

    fn render(&self, idx: usize) -> String {
        match &self.nodes[idx] {
            Node::Const(c) => {
                if *c < 0.0 {
                    format!("({c})")
                } else {
                    format!("{c}")
                }
            }
            Node::Var(i) => format!("x{}", i + 1),
            Node::Add(a, b) => format!("({} + {})", self.render(*a), self.render(*b)),
            Node::Sub(a, b) => format!("({} - {})", self.render(*a), self.render(*b)),
            Node::Mul(a, b) => format!("({} * {})", self.render(*a), self.render(*b)),
            Node::Div(a, b) => format!("({} / {})", self.render(*a), self.render(*b)),
            Node::Pow(a, b) => format!("({} ^ {})", self.render(*a), self.render(*b)),
            Node::Neg(a) => format!("(-{})", self.render(*a)),
            Node::Un(op, a) => format!("{}({})", op.name(), self.render(*a)),
            Node::Max(a, b) => format!("max({}, {})", self.render(*a), self.render(*b)),
            Node::Min(a, b) => format!("min({}, {})", self.render(*a), self.render(*b)),
        }
    }
}

fn eval_pow(idx: usize, a: f64, p: f64) -> Result<f64> {
    let integral = p.fract() == 0.0 && p.abs() < 1e9;
    if integral {
        if a == 0.0 && p < 0.0 {
            return Err(Error::Domain {
                node: idx,
                op: "zero base with negative exponent in",
                value: p,
            });
        }
        return Ok(a.powi(p as i32));
    }
    if a < 0.0 {
        return Err(Error::Domain {
            node: idx,
            op: "negative base with non-integer exponent in",
            value: a,
        });
    }
    if a == 0.0 {
        if p > 0.0 {
            return Ok(0.0);
        }
        return Err(Error::Domain {
            node: idx,
            op: "zero base with non-positive exponent in",
            value: p,
        });
    }
    Ok(a.powf(p))
}

/// Partials (d/da, d/dp) of a^p. The exponent partial is skipped for
/// constant exponent nodes so integer powers of negative bases stay
/// differentiable.
fn pow_partials(idx: usize, a: f64, p: f64, p_node: &Node) -> Result<(f64, f64)> {
    let y = eval_pow(idx, a, p)?;
    let da = if a == 0.0 {
        if p > 1.0 {
            0.0
        } else if p == 1.0 {
            1.0
        } else {
            return Err(Error::Domain {
                node: idx,
                op: "gradient of power at zero base with exponent",
                value: p,
            });
        }
    } else {
        p * eval_pow(idx, a, p - 1.0)?
    };
    let dp = if matches!(p_node, Node::Const(_)) {
        0.0
    } else {
        if a <= 0.0 {
            return Err(Error::Domain {
                node: idx,
                op: "gradient of power with non-positive base",
                value: a,
            });
        }
        y * a.ln()
    };
    Ok((da, dp))
}

fn eval_un(idx: usize, op: UnOp, a: f64) -> Result<f64> {
    let domain = |what: &'static str| Error::Domain {
        node: idx,
        op: what,
        value: a,
    };
    Ok(match op {
        UnOp::Sigmoid => sigmoid(a),
        UnOp::Exp => a.exp(),
        UnOp::Log => {
            if a <= 0.0 {
                return Err(domain("log of"));
            }
            a.ln()
        }
        UnOp::Sqrt => {
            if a < 0.0 {
                return Err(domain("sqrt of"));
            }
            a.sqrt()
        }
        UnOp::Abs => a.abs(),
        UnOp::Sin => a.sin(),
        UnOp::Cos => a.cos(),
        UnOp::Tan => {
            if a.cos().abs() < SEC_COS_EPS {
                return Err(domain("tan at pole"));
            }
            a.tan()
        }
        UnOp::Asin => {
            if a.abs() > 1.0 {
                return Err(domain("asin of"));
            }
            a.asin()
        }
        UnOp::Acos => {
            if a.abs() > 1.0 {
                return Err(domain("acos of"));
            }
            a.acos()
        }
        UnOp::Atan => a.atan(),
        UnOp::Sinh => a.sinh(),
        UnOp::Tanh => a.tanh(),
        UnOp::Sec => {
            if a.cos().abs() < SEC_COS_EPS {
                return Err(domain("sec at pole"));
            }
            1.0 / a.cos()
        }
    })
}

fn un_partial(idx: usize, op: UnOp, a: f64, y: f64) -> Result<f64> {
    let domain = |what: &'static str| Error::Domain {
        node: idx,
        op: what,
        value: a,
    };
    Ok(match op {
        UnOp::Sigmoid => y * (1.0 - y),
        UnOp::Exp => y,
        UnOp::Log => 1.0 / a,
        UnOp::Sqrt => {
            if a == 0.0 {
                return Err(domain("gradient of sqrt at"));
            }
            0.5 / y
        }
        UnOp::Abs => {
            // Subgradient 0 at the kink.
            if a > 0.0 {
                1.0
            } else if a < 0.0 {
                -1.0
            } else {
                0.0
            }
        }
        UnOp::Sin => a.cos(),
        UnOp::Cos => -a.sin(),
        UnOp::Tan => 1.0 + y * y,
        UnOp::Asin => {
            if a.abs() >= 1.0 {
                return Err(domain("gradient of asin at"));
            }
            1.0 / (1.0 - a * a).sqrt()
        }
        UnOp::Acos => {
            if a.abs() >= 1.0 {
                return Err(domain("gradient of acos at"));
            }
            -1.0 / (1.0 - a * a).sqrt()
        }
        UnOp::Atan => 1.0 / (1.0 + a * a),
        UnOp::Sinh => a.cosh(),
        UnOp::Tanh => 1.0 - y * y,
        UnOp::Sec => y * a.tan(),
    })
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
    Comma,
    Eof,
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
    nodes: Vec<Node>,
    arity: usize,
}

impl Parser {
    fn new(source: &str) -> Result<Parser> {
        let mut tokens = Vec::new();
        let chars: Vec<char> = source.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            match c {
                c if c.is_whitespace() => i += 1,
                '+' => {
                    tokens.push((i, Tok::Plus));
                    i += 1;
                }
                '-' | '\u{2212}' => {
                    tokens.push((i, Tok::Minus));
                    i += 1;
                }
                '*' => {
                    tokens.push((i, Tok::Star));
                    i += 1;
                }
                '/' => {
                    tokens.push((i, Tok::Slash));
                    i += 1;
                }
                '^' => {
                    tokens.push((i, Tok::Caret));
                    i += 1;
                }
                '(' => {
                    tokens.push((i, Tok::LParen));
                    i += 1;
                }
                ')' => {
                    tokens.push((i, Tok::RParen));
                    i += 1;
                }
                ',' => {
                    tokens.push((i, Tok::Comma));
                    i += 1;
                }
                c if c.is_ascii_digit() || c == '.' => {
                    let start = i;
                    while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                        i += 1;
                    }
                    let text: String = chars[start..i].iter().collect();
                    let num = text.parse::<f64>().map_err(|_| Error::Syntax {
                        pos: start,
                        msg: format!("malformed number {text:?}"),
                    })?;
                    tokens.push((start, Tok::Num(num)));
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = i;
                    while i < chars.len()
                        && (chars[i].is_ascii_alphanumeric() || chars[i] == '_')
                    {
                        i += 1;
                    }
                    tokens.push((start, Tok::Ident(chars[start..i].iter().collect())));
                }
                other => return Err(Error::Lex { pos: i, ch: other }),
            }
        }
        tokens.push((chars.len(), Tok::Eof));
        Ok(Parser {
            tokens,
            pos: 0,
            nodes: Vec::new(),
            arity: 0,
        })
    }

    fn parse(mut self) -> Result<ExprGraph> {
        let root = self.expr(0)?;
        let (pos, tok) = &self.tokens[self.pos];
        if *tok != Tok::Eof {
            return Err(Error::Syntax {
                pos: *pos,
                msg: format!("unexpected token {tok:?}, expected end of input"),
            });
        }
        Ok(ExprGraph {
            nodes: self.nodes,
            arity: self.arity,
            root,
        })
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].1
    }

    fn bump(&mut self) -> (usize, Tok) {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        let (pos, tok) = self.bump();
        if tok != want {
            return Err(Error::Syntax {
                pos,
                msg: format!("unexpected token {tok:?}, expected {what}"),
            });
        }
        Ok(())
    }

    fn push(&mut self, node: Node) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn expr(&mut self, min_bp: u8) -> Result<usize> {
        let mut lhs = self.prefix()?;
        loop {
            let (l_bp, r_bp) = match self.peek() {
                Tok::Plus | Tok::Minus => (10, 11),
                Tok::Star | Tok::Slash => (20, 21),
                Tok::Caret => (31, 30), // right-associative
                _ => break,
            };
            if l_bp < min_bp {
                break;
            }
            let (_, op) = self.bump();
            let rhs = self.expr(r_bp)?;
            lhs = self.push(match op {
                Tok::Plus => Node::Add(lhs, rhs),
                Tok::Minus => Node::Sub(lhs, rhs),
                Tok::Star => Node::Mul(lhs, rhs),
                Tok::Slash => Node::Div(lhs, rhs),
                Tok::Caret => Node::Pow(lhs, rhs),
                _ => unreachable!(),
            });
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<usize> {
        let (pos, tok) = self.bump();
        match tok {
            Tok::Num(v) => Ok(self.push(Node::Const(v))),
            Tok::Minus => {
                // Unary minus binds looser than ^.
                let operand = self.expr(25)?;
                Ok(self.push(Node::Neg(operand)))
            }
            Tok::LParen => {
                let inner = self.expr(0)?;
                self.expect(Tok::RParen, "closing parenthesis")?;
                Ok(inner)
            }
            Tok::Ident(name) => self.ident(pos, name),
            other => Err(Error::Syntax {
                pos,
                msg: format!("unexpected token {other:?}, expected an expression"),
            }),
        }
    }

    fn ident(&mut self, pos: usize, name: String) -> Result<usize> {
        if name == "pi" {
            return Ok(self.push(Node::Const(std::f64::consts::PI)));
        }
        if let Some(rest) = name.strip_prefix('x') {
            if let Ok(idx) = rest.parse::<usize>() {
                if idx == 0 || idx > MAX_VAR_INDEX {
                    return Err(Error::Argument(format!(
                        "variable index {idx} out of range 1..={MAX_VAR_INDEX} at position {pos}"
                    )));
                }
                self.arity = self.arity.max(idx);
                return Ok(self.push(Node::Var(idx - 1)));
            }
        }
        if name == "max" || name == "min" {
            self.expect(Tok::LParen, "opening parenthesis")?;
            let a = self.expr(0)?;
            self.expect(Tok::Comma, "comma")?;
            let b = self.expr(0)?;
            self.expect(Tok::RParen, "closing parenthesis")?;
            return Ok(self.push(if name == "max" {
                Node::Max(a, b)
            } else {
                Node::Min(a, b)
            }));
        }
        if let Some(op) = UnOp::from_name(&name) {
            self.expect(Tok::LParen, "opening parenthesis")?;
            let a = self.expr(0)?;
            self.expect(Tok::RParen, "closing parenthesis")?;
            return Ok(self.push(Node::Un(op, a)));
        }
        Err(Error::UnknownIdent { pos, name })
    }
}
