//! A small expression language for user-supplied functions of `x`.
//!
//! Grammar (usual precedence, `^` right-associative and binding tighter
//! than unary minus):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'x' | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Built-in functions: `sqrt`, `log` (natural), `exp`, `sin`, `cos`, `abs`,
//! `pow(a,b)`, `min(a,b)`, `max(a,b)`, `indicator(a,b)` (1 when `a <= x <= b`,
//! else 0), and the kernel bindings `eta(t)`, `H(t)`, `Krg(t)`, which take
//! their indices from the `rho` / `gamma` parameters supplied at compile
//! time.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::{KernelKind, KernelSpec};
use crate::num::Func;

/// One lexical token.
#[derive(Debug, Clone, PartialEq)]
pub enum Token {
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
}

/// A token with the byte offset where it starts.
#[derive(Debug, Clone, PartialEq)]
pub struct Spanned {
    pub pos: usize,
    pub tok: Token,
}

fn syntax(position: usize, msg: impl Into<String>) -> Error {
    Error::Syntax {
        position,
        msg: msg.into(),
    }
}

/// Split source text into tokens. Numbers use the usual float forms
/// (`2`, `0.5`, `1.`, `1e3`, `2.5e-3`), matched longest-first.
pub fn tokenize(src: &str) -> Result<Vec<Spanned>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let pos = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
            }
            '+' | '-' | '*' | '/' | '^' | '(' | ')' | ',' => {
                out.push(Spanned {
                    pos,
                    tok: match c {
                        '+' => Token::Plus,
                        '-' => Token::Minus,
                        '*' => Token::Star,
                        '/' => Token::Slash,
                        '^' => Token::Caret,
                        '(' => Token::LParen,
                        ')' => Token::RParen,
                        _ => Token::Comma,
                    },
                });
                i += 1;
            }
            '0'..='9' => {
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                if j < bytes.len() && bytes[j] == b'.' {
                    j += 1;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                    // otherwise the 'e' belongs to a following identifier
                }
                let text = &src[i..j];
                let value: f64 = text
                    .parse()
                    .map_err(|_| syntax(pos, format!("malformed number '{text}'")))?;
                out.push(Spanned {
                    pos,
                    tok: Token::Num(value),
                });
                i = j;
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let mut j = i;
                while j < bytes.len()
                    && ((bytes[j] as char).is_ascii_alphanumeric() || bytes[j] == b'_')
                {
                    j += 1;
                }
                out.push(Spanned {
                    pos,
                    tok: Token::Ident(src[i..j].to_string()),
                });
                i = j;
            }
            other => {
                return Err(syntax(pos, format!("unexpected character '{other}'")));
            }
        }
    }
    Ok(out)
}

/// Built-in function names.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FuncName {
    Sqrt,
    Log,
    Exp,
    Sin,
    Cos,
    Abs,
    Pow,
    Min,
    Max,
    Indicator,
    Eta,
    H,
    Krg,
}

impl FuncName {
    fn lookup(name: &str) -> Option<FuncName> {
        Some(match name {
            "sqrt" => FuncName::Sqrt,
            "log" => FuncName::Log,
            "exp" => FuncName::Exp,
            "sin" => FuncName::Sin,
            "cos" => FuncName::Cos,
            "abs" => FuncName::Abs,
            "pow" => FuncName::Pow,
            "min" => FuncName::Min,
            "max" => FuncName::Max,
            "indicator" => FuncName::Indicator,
            "eta" => FuncName::Eta,
            "H" => FuncName::H,
            "Krg" => FuncName::Krg,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            FuncName::Sqrt => "sqrt",
            FuncName::Log => "log",
            FuncName::Exp => "exp",
            FuncName::Sin => "sin",
            FuncName::Cos => "cos",
            FuncName::Abs => "abs",
            FuncName::Pow => "pow",
            FuncName::Min => "min",
            FuncName::Max => "max",
            FuncName::Indicator => "indicator",
            FuncName::Eta => "eta",
            FuncName::H => "H",
            FuncName::Krg => "Krg",
        }
    }

    fn arity(self) -> usize {
        match self {
            FuncName::Pow | FuncName::Min | FuncName::Max | FuncName::Indicator => 2,
            _ => 1,
        }
    }
}

/// Binary operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(FuncName, Vec<Expr>),
}

struct Parser<'a> {
    toks: &'a [Spanned],
    at: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.at).map(|s| &s.tok)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |s| s.pos)
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.at).map(|s| &s.tok);
        self.at += 1;
        t
    }

    fn expect(&mut self, tok: Token, what: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.at += 1;
            Ok(())
        } else {
            Err(syntax(self.pos(), format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Token::Plus) => BinOp::Add,
                Some(Token::Minus) => BinOp::Sub,
                _ => break,
            };
            self.at += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Token::Star) => BinOp::Mul,
                Some(Token::Slash) => BinOp::Div,
                _ => break,
            };
            self.at += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(&Token::Minus) {
            self.at += 1;
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(&Token::Caret) {
            self.at += 1;
            let exp = self.unary()?;
            Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.bump() {
            Some(Token::Num(v)) => Ok(Expr::Num(*v)),
            Some(Token::Ident(name)) if name == "x" => Ok(Expr::Var),
            Some(Token::Ident(name)) => {
                let func = FuncName::lookup(name)
                    .ok_or_else(|| syntax(pos, format!("unknown function '{name}'")))?;
                self.expect(Token::LParen, &format!("'(' after '{name}'"))?;
                let mut args = vec![self.expr()?];
                while self.peek() == Some(&Token::Comma) {
                    self.at += 1;
                    args.push(self.expr()?);
                }
                self.expect(Token::RParen, "')'")?;
                if args.len() != func.arity() {
                    return Err(syntax(
                        pos,
                        format!(
                            "'{name}' takes {} argument{}, got {}",
                            func.arity(),
                            if func.arity() == 1 { "" } else { "s" },
                            args.len()
                        ),
                    ));
                }
                Ok(Expr::Call(func, args))
            }
            Some(Token::LParen) => {
                let inner = self.expr()?;
                self.expect(Token::RParen, "')'")?;
                Ok(inner)
            }
            Some(other) => Err(syntax(pos, format!("unexpected token {other:?}"))),
            None => Err(syntax(pos, "unexpected end of input")),
        }
    }
}

/// Parse source text into an expression tree.
pub fn parse(src: &str) -> Result<Expr> {
    let toks = tokenize(src)?;
    let mut p = Parser {
        toks: &toks,
        at: 0,
        end: src.len(),
    };
    let e = p.expr()?;
    if p.at != toks.len() {
        return Err(syntax(p.pos(), "expected end of input"));
    }
    Ok(e)
}

// Printing precedence; parenthesization keeps print/parse a fixed point.
fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Bin(BinOp::Pow, ..) => 4,
        _ => 5,
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn paren(out: &mut fmt::Formatter<'_>, e: &Expr, need: bool) -> fmt::Result {
            if need {
                write!(out, "({e})")
            } else {
                write!(out, "{e}")
            }
        }
        match self {
            Expr::Num(v) => write!(out, "{v}"),
            Expr::Var => out.write_str("x"),
            Expr::Neg(inner) => {
                out.write_str("-")?;
                // A negative base must not fuse with '^' on reparse, and
                // -x^2 stays -(x^2) by the grammar, so only sums need parens.
                paren(out, inner, prec(inner) < 3)
            }
            Expr::Bin(op, l, r) => {
                let (sym, p) = match op {
                    BinOp::Add => ("+", 1),
                    BinOp::Sub => ("-", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                    BinOp::Pow => ("^", 4),
                };
                // '^' is right-associative: its left child needs parens on
                // ties. '-' and '/' are left-associative: their right child
                // does. Unary minus inside '^''s left slot must also wrap.
                let l_need = prec(l) < p || (*op == BinOp::Pow && prec(l) <= 4);
                let r_need = prec(r) < p
                    || (matches!(op, BinOp::Sub) && prec(r) == 1)
                    || (matches!(op, BinOp::Div) && prec(r) == 2);
                paren(out, l, l_need)?;
                write!(out, " {sym} ")?;
                paren(out, r, r_need)
            }
            Expr::Call(f, args) => {
                write!(out, "{}(", f.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.write_str(", ")?;
                    }
                    write!(out, "{a}")?;
                }
                out.write_str(")")
            }
        }
    }
}

/// Parameter values available to kernel bindings at compile time.
#[derive(Debug, Clone, Copy, Default)]
pub struct Params {
    pub rho: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Clone, Copy, Default)]
struct Bindings {
    eta: Option<KernelSpec>,
    h: Option<KernelSpec>,
    krg: Option<KernelSpec>,
}

fn uses(e: &Expr, f: FuncName) -> bool {
    match e {
        Expr::Num(_) | Expr::Var => false,
        Expr::Neg(inner) => uses(inner, f),
        Expr::Bin(_, l, r) => uses(l, f) || uses(r, f),
        Expr::Call(name, args) => *name == f || args.iter().any(|a| uses(a, f)),
    }
}

fn require(value: Option<f64>, name: &str) -> Result<f64> {
    value.ok_or_else(|| Error::UnboundParam {
        name: name.to_string(),
    })
}

fn eval_node(e: &Expr, x: f64, b: &Bindings) -> Result<f64> {
    Ok(match e {
        Expr::Num(v) => *v,
        Expr::Var => x,
        Expr::Neg(inner) => -eval_node(inner, x, b)?,
        Expr::Bin(op, l, r) => {
            let lv = eval_node(l, x, b)?;
            let rv = eval_node(r, x, b)?;
            match op {
                BinOp::Add => lv + rv,
                BinOp::Sub => lv - rv,
                BinOp::Mul => lv * rv,
                BinOp::Div => {
                    if rv == 0.0 {
                        return Err(Error::domain(format!("division by zero at x = {x}")));
                    }
                    lv / rv
                }
                BinOp::Pow => {
                    let p = lv.powf(rv);
                    if p.is_nan() {
                        return Err(Error::domain(format!("{lv}^{rv} undefined at x = {x}")));
                    }
                    p
                }
            }
        }
        Expr::Call(f, args) => {
            let a0 = eval_node(&args[0], x, b)?;
            match f {
                FuncName::Sqrt => {
                    if a0 < 0.0 {
                        return Err(Error::domain(format!("sqrt({a0}) at x = {x}")));
                    }
                    a0.sqrt()
                }
                FuncName::Log => {
                    if a0 <= 0.0 {
                        return Err(Error::domain(format!("log({a0}) at x = {x}")));
                    }
                    a0.ln()
                }
                FuncName::Exp => a0.exp(),
                FuncName::Sin => a0.sin(),
                FuncName::Cos => a0.cos(),
                FuncName::Abs => a0.abs(),
                FuncName::Pow => {
                    let a1 = eval_node(&args[1], x, b)?;
                    let p = a0.powf(a1);
                    if p.is_nan() {
                        return Err(Error::domain(format!("pow({a0}, {a1}) at x = {x}")));
                    }
                    p
                }
                FuncName::Min => a0.min(eval_node(&args[1], x, b)?),
                FuncName::Max => a0.max(eval_node(&args[1], x, b)?),
                FuncName::Indicator => {
                    let a1 = eval_node(&args[1], x, b)?;
                    if a0 <= x && x <= a1 {
                        1.0
                    } else {
                        0.0
                    }
                }
                FuncName::Eta => b.eta.expect("bound at compile").eval(a0)?,
                FuncName::H => b.h.expect("bound at compile").eval(a0)?,
                FuncName::Krg => b.krg.expect("bound at compile").eval(a0)?,
            }
        }
    })
}

/// Compile source text into an evaluable [`Func`]. Kernel bindings are
/// resolved here: `eta` needs `rho`, `H` needs `gamma`, `Krg` needs both;
/// a use without the matching parameter is an [`Error::UnboundParam`].
pub fn compile(src: &str, params: &Params) -> Result<Func> {
    let ast = parse(src)?;
    let mut bindings = Bindings::default();
    if uses(&ast, FuncName::Eta) {
        bindings.eta = Some(KernelSpec::new(
            KernelKind::Eta,
            require(params.rho, "rho")?,
            0.0,
        )?);
    }
    if uses(&ast, FuncName::H) {
        bindings.h = Some(KernelSpec::new(
            KernelKind::HGamma,
            0.0,
            require(params.gamma, "gamma")?,
        )?);
    }
    if uses(&ast, FuncName::Krg) {
        bindings.krg = Some(KernelSpec::new(
            KernelKind::KRhoGamma,
            require(params.rho, "rho")?,
            require(params.gamma, "gamma")?,
        )?);
    }
    let label = ast.to_string();
    let ast = Arc::new(ast);
    Ok(Func::new(label, move |x| eval_node(&ast, x, &bindings)))
}

#[cfg(test)]
// Reference values are spelled at full precision on purpose.
#[allow(clippy::approx_constant, clippy::excessive_precision)]
mod tests {
    use super::*;

    fn eval(src: &str, x: f64) -> f64 {
        compile(src, &Params::default()).unwrap().eval(x).unwrap()
    }

    #[test]
    fn arithmetic_follows_precedence() {
        assert_eq!(eval("1 + 2 * 3", 0.0), 7.0);
        assert_eq!(eval("(1 + 2) * 3", 0.0), 9.0);
        assert_eq!(eval("2 - 3 - 4", 0.0), -5.0);
        assert_eq!(eval("16 / 4 / 2", 0.0), 2.0);
        assert_eq!(eval("2 ^ 3 ^ 2", 0.0), 512.0); // right-associative
        assert_eq!(eval("-x^2", 3.0), -9.0);
        assert_eq!(eval("2^-1", 0.0), 0.5);
        assert_eq!(eval("0.5*x + sqrt(x)", 4.0), 4.0);
        assert_eq!(eval("1e2 + 2.5e-1", 0.0), 100.25);
        assert_eq!(eval("min(3, x) + max(0, x) + abs(-2)", 5.0), 10.0);
        assert_eq!(eval("indicator(0, 1)", 0.5), 1.0);
        assert_eq!(eval("indicator(0, 1)", 1.5), 0.0);
    }

    #[test]
    fn domain_errors_name_the_point() {
        let f = compile("log(x)", &Params::default()).unwrap();
        assert!(matches!(f.eval(-1.0), Err(Error::Domain { .. })));
        let f = compile("sqrt(x)", &Params::default()).unwrap();
        assert!(matches!(f.eval(-4.0), Err(Error::Domain { .. })));
        let f = compile("1 / x", &Params::default()).unwrap();
        assert!(matches!(f.eval(0.0), Err(Error::Domain { .. })));
        assert_eq!(f.eval(2.0).unwrap(), 0.5);
    }

    #[test]
    fn kernel_bindings_need_their_parameters() {
        let err = compile("eta(x)", &Params::default()).unwrap_err();
        assert_eq!(
            err,
            Error::UnboundParam {
                name: "rho".into()
            }
        );
        let err = compile("Krg(x)", &Params { rho: Some(1.0), gamma: None }).unwrap_err();
        assert_eq!(
            err,
            Error::UnboundParam {
                name: "gamma".into()
            }
        );
        let p = Params {
            rho: Some(1.0),
            gamma: Some(2.0),
        };
        assert_eq!(compile("eta(x)", &p).unwrap().eval(1.0).unwrap(), 2.0);
        assert_eq!(compile("Krg(x)", &p).unwrap().eval(1.0).unwrap(), 1.5);
        let h = compile("H(x)", &p).unwrap().eval(1.0).unwrap();
        assert!((h - (f64::exp_m1(2.0) / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn printing_is_a_parse_fixed_point() {
        for src in [
            "1 + 2 * 3",
            "(1 + 2) * 3",
            "2 - (3 - 4)",
            "x / (2 * x)",
            "-(x + 1)",
            "-x^2",
            "(-x)^2",
            "2^3^2",
            "(2^3)^2",
            "min(x, 3) * indicator(0, 10)",
            "0.5*x + sqrt(x)",
        ] {
            let once = parse(src).unwrap();
            let printed = once.to_string();
            let twice = parse(&printed).unwrap();
            assert_eq!(once, twice, "{src} -> {printed}");
            assert_eq!(printed, twice.to_string());
        }
    }

    #[test]
    fn malformed_inputs_fail_with_positions() {
        for (src, at) in [
            ("1 +", 3),
            ("(x", 2),
            ("x)", 1),
            ("foo(1)", 0),
            ("pow(1)", 0),
            ("min(1, 2, 3)", 0),
            ("1 @ 2", 2),
            ("", 0),
            ("x x", 2),
        ] {
            match parse(src) {
                Err(Error::Syntax { position, .. }) => {
                    assert_eq!(position, at, "position for {src:?}")
                }
                other => panic!("{src:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn scientific_notation_does_not_swallow_identifiers() {
        // '2e' is not a number: the 'e' has no exponent digits, so it lexes
        // as 2 followed by an identifier, which fails to parse.
        assert!(parse("2e").is_err());
        assert_eq!(eval("2e1", 0.0), 20.0);
        assert_eq!(eval("1.5E+2", 0.0), 150.0);
    }
}
