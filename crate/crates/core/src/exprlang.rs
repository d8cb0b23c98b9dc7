//! A small expression language for complex-valued functions of one real
//! variable `x`. This is the wire format for symbol functions in problem
//! files.
//!
//! Grammar (whitespace insignificant, numbers longest-match, `i` is the
//! imaginary unit):
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := atom ("^" integer)?
//! atom   := number | "x" | "i" | "(" expr ")"
//!         | ("sqrt" | "abs" | "conj") "(" expr ")" | "-" atom
//! ```
//!
//! `sqrt` is the principal branch, so `sqrt(-1)` evaluates to `i`.

use num_complex::Complex64;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Complex64),
    Var,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i64),
    Sqrt(Box<Expr>),
    Abs(Box<Expr>),
    Conj(Box<Expr>),
    Neg(Box<Expr>),
}

#[derive(Debug, Error)]
#[error("syntax error at byte {offset}: found {found}, expected {}", expected.join(" | "))]
pub struct SyntaxError {
    pub offset: usize,
    pub found: String,
    pub expected: Vec<&'static str>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite intermediate result")]
    NonFiniteResult,
}

impl Expr {
    /// Canonical tree for an arbitrary complex constant, built so that
    /// `parse(format(e))` reproduces the tree exactly: `Const` nodes only
    /// ever hold nonnegative reals or the unit `i`.
    pub fn constant(value: Complex64) -> Expr {
        let re = if value.re == 0.0 { 0.0 } else { value.re };
        let im = if value.im == 0.0 { 0.0 } else { value.im };
        let real_part = |r: f64| -> Expr {
            if r < 0.0 {
                Expr::Neg(Box::new(Expr::Const(Complex64::new(-r, 0.0))))
            } else {
                Expr::Const(Complex64::new(r, 0.0))
            }
        };
        let imag_part = |m: f64| -> Expr {
            // m > 0
            if m == 1.0 {
                Expr::Const(Complex64::new(0.0, 1.0))
            } else {
                Expr::Mul(
                    Box::new(Expr::Const(Complex64::new(m, 0.0))),
                    Box::new(Expr::Const(Complex64::new(0.0, 1.0))),
                )
            }
        };
        match (re == 0.0, im == 0.0) {
            (_, true) => real_part(re),
            (true, false) => {
                if im < 0.0 {
                    Expr::Neg(Box::new(imag_part(-im)))
                } else {
                    imag_part(im)
                }
            }
            (false, false) => {
                if im < 0.0 {
                    Expr::Sub(Box::new(real_part(re)), Box::new(imag_part(-im)))
                } else {
                    Expr::Add(Box::new(real_part(re)), Box::new(imag_part(im)))
                }
            }
        }
    }

    pub fn var() -> Expr {
        Expr::Var
    }

    pub fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }

    pub fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }

    pub fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }

    pub fn div(self, rhs: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(rhs))
    }

    pub fn sqrt(self) -> Expr {
        Expr::Sqrt(Box::new(self))
    }

    pub fn conj(self) -> Expr {
        Expr::Conj(Box::new(self))
    }

    pub fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

/// Evaluate at a real point. Division by an exact complex zero and non-finite
/// intermediates are reported as errors rather than propagating NaN/inf.
pub fn evaluate(e: &Expr, x: f64) -> Result<Complex64, EvalError> {
    let v = match e {
        Expr::Const(c) => *c,
        Expr::Var => Complex64::new(x, 0.0),
        Expr::Add(a, b) => evaluate(a, x)? + evaluate(b, x)?,
        Expr::Sub(a, b) => evaluate(a, x)? - evaluate(b, x)?,
        Expr::Mul(a, b) => evaluate(a, x)? * evaluate(b, x)?,
        Expr::Div(a, b) => {
            let den = evaluate(b, x)?;
            if den == Complex64::new(0.0, 0.0) {
                return Err(EvalError::DivisionByZero);
            }
            complex_div(evaluate(a, x)?, den)
        }
        Expr::Pow(a, n) => {
            let base = evaluate(a, x)?;
            pow_int(base, *n)?
        }
        Expr::Sqrt(a) => principal_sqrt(evaluate(a, x)?),
        Expr::Abs(a) => Complex64::new(evaluate(a, x)?.norm(), 0.0),
        Expr::Conj(a) => evaluate(a, x)?.conj(),
        Expr::Neg(a) => -evaluate(a, x)?,
    };
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFiniteResult)
    }
}

/// Division that keeps real arithmetic exact: a purely real denominator (and
/// the purely imaginary case) divides componentwise instead of going through
/// |den|^2, which costs an ulp.
fn complex_div(num: Complex64, den: Complex64) -> Complex64 {
    if den.im == 0.0 {
        Complex64::new(num.re / den.re, num.im / den.re)
    } else if den.re == 0.0 {
        Complex64::new(num.im / den.im, -num.re / den.im)
    } else {
        num / den
    }
}

/// Principal square root with the real axis handled exactly; a negative real
/// maps to the +i side regardless of the sign of its zero imaginary part.
fn principal_sqrt(z: Complex64) -> Complex64 {
    if z.im == 0.0 {
        if z.re >= 0.0 {
            Complex64::new(z.re.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-z.re).sqrt())
        }
    } else {
        let t = ((z.norm() + z.re.abs()) / 2.0).sqrt();
        if z.re >= 0.0 {
            Complex64::new(t, z.im / (2.0 * t))
        } else {
            Complex64::new(z.im.abs() / (2.0 * t), t.copysign(z.im))
        }
    }
}

fn pow_int(base: Complex64, n: i64) -> Result<Complex64, EvalError> {
    if n < 0 && base == Complex64::new(0.0, 0.0) {
        return Err(EvalError::DivisionByZero);
    }
    let mut result = Complex64::new(1.0, 0.0);
    let mut b = base;
    let mut e = n.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            result *= b;
        }
        b *= b;
        e >>= 1;
    }
    if n < 0 {
        result = complex_div(Complex64::new(1.0, 0.0), result);
    }
    Ok(result)
}

/// Fully parenthesized canonical rendering; `parse(format(e))` is
/// structurally equal to `e` for trees built by the parser or by
/// [`Expr::constant`].
pub fn format(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(e, &mut s);
    s
}

fn write_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Const(c) => {
            if c.im == 1.0 && c.re == 0.0 {
                out.push('i');
            } else {
                write_real(c.re, out);
            }
        }
        Expr::Var => out.push('x'),
        Expr::Add(a, b) => write_binary(a, '+', b, out),
        Expr::Sub(a, b) => write_binary(a, '-', b, out),
        Expr::Mul(a, b) => write_binary(a, '*', b, out),
        Expr::Div(a, b) => write_binary(a, '/', b, out),
        Expr::Pow(a, n) => {
            out.push('(');
            write_expr(a, out);
            let _ = write!(out, "^{n}");
            out.push(')');
        }
        Expr::Sqrt(a) => write_fn("sqrt", a, out),
        Expr::Abs(a) => write_fn("abs", a, out),
        Expr::Conj(a) => write_fn("conj", a, out),
        Expr::Neg(a) => {
            out.push('-');
            write_expr(a, out);
        }
    }
}

fn write_binary(a: &Expr, op: char, b: &Expr, out: &mut String) {
    out.push('(');
    write_expr(a, out);
    out.push(op);
    write_expr(b, out);
    out.push(')');
}

fn write_fn(name: &str, a: &Expr, out: &mut String) {
    out.push_str(name);
    out.push('(');
    write_expr(a, out);
    out.push(')');
}

fn write_real(r: f64, out: &mut String) {
    debug_assert!(r >= 0.0 && r.is_finite(), "non-canonical constant {r}");
    if r == r.trunc() && r.abs() < 1e15 {
        let _ = write!(out, "{}", r as i64);
    } else {
        // Debug rendering is the shortest round-trip form (may use exponents)
        let _ = write!(out, "{r:?}");
    }
}

pub fn parse(text: &str) -> Result<Expr, SyntaxError> {
    let mut p = Parser::new(text);
    let e = p.parse_expr()?;
    p.expect_end()?;
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    X,
    I,
    Sqrt,
    Abs,
    Conj,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Number(v) => format!("number {v}"),
            Token::X => "'x'".into(),
            Token::I => "'i'".into(),
            Token::Sqrt => "'sqrt'".into(),
            Token::Abs => "'abs'".into(),
            Token::Conj => "'conj'".into(),
            Token::Plus => "'+'".into(),
            Token::Minus => "'-'".into(),
            Token::Star => "'*'".into(),
            Token::Slash => "'/'".into(),
            Token::Caret => "'^'".into(),
            Token::LParen => "'('".into(),
            Token::RParen => "')'".into(),
            Token::End => "end of input".into(),
        }
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

const ATOM_EXPECTED: &[&str] = &["number", "'x'", "'i'", "'('", "'sqrt'", "'abs'", "'conj'", "'-'"];

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser { bytes: text.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Token starting at the current position (after whitespace), plus its
    /// byte offset and the position just past it.
    fn peek(&mut self) -> Result<(Token, usize, usize), SyntaxError> {
        self.skip_ws();
        let at = self.pos;
        if at >= self.bytes.len() {
            return Ok((Token::End, at, at));
        }
        let b = self.bytes[at];
        let single = |t: Token| Ok((t, at, at + 1));
        match b {
            b'+' => single(Token::Plus),
            b'-' => single(Token::Minus),
            b'*' => single(Token::Star),
            b'/' => single(Token::Slash),
            b'^' => single(Token::Caret),
            b'(' => single(Token::LParen),
            b')' => single(Token::RParen),
            b'0'..=b'9' | b'.' => {
                let mut end = at;
                while end < self.bytes.len() && (self.bytes[end].is_ascii_digit() || self.bytes[end] == b'.') {
                    end += 1;
                }
                // optional exponent, longest match
                if end < self.bytes.len() && (self.bytes[end] == b'e' || self.bytes[end] == b'E') {
                    let mut cursor = end + 1;
                    if cursor < self.bytes.len() && (self.bytes[cursor] == b'+' || self.bytes[cursor] == b'-') {
                        cursor += 1;
                    }
                    if cursor < self.bytes.len() && self.bytes[cursor].is_ascii_digit() {
                        while cursor < self.bytes.len() && self.bytes[cursor].is_ascii_digit() {
                            cursor += 1;
                        }
                        end = cursor;
                    }
                }
                let text = std::str::from_utf8(&self.bytes[at..end]).unwrap();
                match text.parse::<f64>() {
                    Ok(v) => Ok((Token::Number(v), at, end)),
                    Err(_) => Err(SyntaxError {
                        offset: at,
                        found: format!("malformed number '{text}'"),
                        expected: vec!["number"],
                    }),
                }
            }
            b'a'..=b'z' | b'A'..=b'Z' => {
                let mut end = at;
                while end < self.bytes.len() && self.bytes[end].is_ascii_alphabetic() {
                    end += 1;
                }
                let word = std::str::from_utf8(&self.bytes[at..end]).unwrap();
                let tok = match word {
                    "x" => Token::X,
                    "i" => Token::I,
                    "sqrt" => Token::Sqrt,
                    "abs" => Token::Abs,
                    "conj" => Token::Conj,
                    _ => {
                        return Err(SyntaxError {
                            offset: at,
                            found: format!("identifier '{word}'"),
                            expected: vec!["'x'", "'i'", "'sqrt'", "'abs'", "'conj'"],
                        })
                    }
                };
                Ok((tok, at, end))
            }
            other => Err(SyntaxError {
                offset: at,
                found: format!("byte '{}'", other as char),
                expected: ATOM_EXPECTED.to_vec(),
            }),
        }
    }

    fn bump(&mut self) -> Result<(Token, usize), SyntaxError> {
        let (tok, at, next) = self.peek()?;
        self.pos = next;
        Ok((tok, at))
    }

    fn expect(&mut self, want: Token, label: &'static str) -> Result<(), SyntaxError> {
        let (tok, at) = self.bump()?;
        if tok == want {
            Ok(())
        } else {
            Err(SyntaxError { offset: at, found: tok.describe(), expected: vec![label] })
        }
    }

    fn expect_end(&mut self) -> Result<(), SyntaxError> {
        let (tok, at, _) = self.peek()?;
        if tok == Token::End {
            Ok(())
        } else {
            Err(SyntaxError {
                offset: at,
                found: tok.describe(),
                expected: vec!["operator", "end of input"],
            })
        }
    }

    fn parse_expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut acc = self.parse_term()?;
        loop {
            let (tok, _, next) = self.peek()?;
            match tok {
                Token::Plus => {
                    self.pos = next;
                    acc = Expr::Add(Box::new(acc), Box::new(self.parse_term()?));
                }
                Token::Minus => {
                    self.pos = next;
                    acc = Expr::Sub(Box::new(acc), Box::new(self.parse_term()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expr, SyntaxError> {
        let mut acc = self.parse_factor()?;
        loop {
            let (tok, _, next) = self.peek()?;
            match tok {
                Token::Star => {
                    self.pos = next;
                    acc = Expr::Mul(Box::new(acc), Box::new(self.parse_factor()?));
                }
                Token::Slash => {
                    self.pos = next;
                    acc = Expr::Div(Box::new(acc), Box::new(self.parse_factor()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_factor(&mut self) -> Result<Expr, SyntaxError> {
        let base = self.parse_atom()?;
        let (tok, _, next) = self.peek()?;
        if tok == Token::Caret {
            self.pos = next;
            let exp = self.parse_integer()?;
            return Ok(Expr::Pow(Box::new(base), exp));
        }
        Ok(base)
    }

    fn parse_integer(&mut self) -> Result<i64, SyntaxError> {
        let (tok, at) = self.bump()?;
        let negative = tok == Token::Minus;
        let (tok, at) = if negative { self.bump()? } else { (tok, at) };
        match tok {
            Token::Number(v) if v == v.trunc() && v.abs() <= i64::MAX as f64 => {
                let n = v as i64;
                Ok(if negative { -n } else { n })
            }
            other => Err(SyntaxError {
                offset: at,
                found: other.describe(),
                expected: vec!["integer exponent"],
            }),
        }
    }

    fn parse_atom(&mut self) -> Result<Expr, SyntaxError> {
        let (tok, at) = self.bump()?;
        match tok {
            Token::Number(v) => Ok(Expr::Const(Complex64::new(v, 0.0))),
            Token::X => Ok(Expr::Var),
            Token::I => Ok(Expr::Const(Complex64::new(0.0, 1.0))),
            Token::LParen => {
                let inner = self.parse_expr()?;
                self.expect(Token::RParen, "')'")?;
                Ok(inner)
            }
            Token::Sqrt => self.parse_fn_arg().map(|e| Expr::Sqrt(Box::new(e))),
            Token::Abs => self.parse_fn_arg().map(|e| Expr::Abs(Box::new(e))),
            Token::Conj => self.parse_fn_arg().map(|e| Expr::Conj(Box::new(e))),
            Token::Minus => Ok(Expr::Neg(Box::new(self.parse_atom()?))),
            other => Err(SyntaxError {
                offset: at,
                found: other.describe(),
                expected: ATOM_EXPECTED.to_vec(),
            }),
        }
    }

    fn parse_fn_arg(&mut self) -> Result<Expr, SyntaxError> {
        self.expect(Token::LParen, "'('")?;
        let inner = self.parse_expr()?;
        self.expect(Token::RParen, "')'")?;
        Ok(inner)
    }
}
