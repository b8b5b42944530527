//! Polynomial expressions.
//!
//! ```text
//! expr   := ('+'|'-')? term (('+'|'-') term)*
//! term   := coeff factor* | factor+
//! factor := atom ("'" | '^' uint)*
//! atom   := 'x' uint | '(' expr ')'
//! coeff  := real | '(' ('+'|'-')? real ('+'|'-') real 'i' ')'
//! ```
//!
//! Juxtaposition is the non-commutative product, `'` the adjoint.

use ncfree_core::{NcPoly, Scalar};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("parse error at column {}: {message}", position + 1)]
pub struct ParseError {
    /// Byte offset into the source.
    pub position: usize,
    pub message: String,
}

fn err<T>(position: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        position,
        message: message.into(),
    })
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Var(usize),
    Plus,
    Minus,
    LParen,
    RParen,
    Caret,
    Prime,
    End,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let start = i;
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => out.push((Tok::Plus, i)),
            b'-' => out.push((Tok::Minus, i)),
            b'(' => out.push((Tok::LParen, i)),
            b')' => out.push((Tok::RParen, i)),
            b'^' => out.push((Tok::Caret, i)),
            b'\'' => out.push((Tok::Prime, i)),
            b'x' => {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i == start + 1 {
                    return err(start, "expected a generator index after 'x'");
                }
                let idx: usize = src[start + 1..i]
                    .parse()
                    .or_else(|_| err(start, "generator index too large"))?;
                if idx == 0 {
                    return err(start, "generator indices start at 1");
                }
                out.push((Tok::Var(idx), start));
                continue;
            }
            b'0'..=b'9' | b'.' => {
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
                let v: f64 = src[start..i]
                    .parse()
                    .or_else(|_| err(start, format!("malformed number {:?}", &src[start..i])))?;
                if i < bytes.len() && bytes[i] == b'i' {
                    i += 1;
                    out.push((Tok::Imag(v), start));
                } else {
                    out.push((Tok::Num(v), start));
                }
                continue;
            }
            _ => {
                let ch = src[i..].chars().next().expect("in bounds");
                return err(i, format!("unexpected character {ch:?}"));
            }
        }
        i += 1;
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

/// Parsed polynomial with its source text.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyExpr {
    pub source: String,
    pub poly: NcPoly,
    pub alphabet_size: usize,
}

#[derive(Clone, Debug)]
enum Ast {
    Const(Scalar),
    Var(usize),
    Sum(Vec<(bool, Ast)>),
    Product(Vec<Ast>),
    Pow(Box<Ast>, u32),
    Adjoint(Box<Ast>),
}

impl Ast {
    fn max_index(&self) -> usize {
        match self {
            Ast::Const(_) => 0,
            Ast::Var(j) => *j,
            Ast::Sum(ts) => ts.iter().map(|(_, t)| t.max_index()).max().unwrap_or(0),
            Ast::Product(fs) => fs.iter().map(Ast::max_index).max().unwrap_or(0),
            Ast::Pow(a, _) | Ast::Adjoint(a) => a.max_index(),
        }
    }

    fn build(&self, n: usize) -> NcPoly {
        match self {
            Ast::Const(c) => NcPoly::constant(n, *c),
            Ast::Var(j) => NcPoly::var(n, *j).expect("indices checked against alphabet"),
            Ast::Sum(ts) => ts.iter().fold(NcPoly::zero(n), |acc, (neg, t)| {
                let p = t.build(n);
                if *neg {
                    &acc - &p
                } else {
                    &acc + &p
                }
            }),
            Ast::Product(fs) => fs.iter().fold(NcPoly::one(n), |acc, f| &acc * &f.build(n)),
            Ast::Pow(a, k) => a.build(n).pow(*k),
            Ast::Adjoint(a) => a.build(n).adjoint(),
        }
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn at(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Ast, ParseError> {
        let mut terms = Vec::new();
        let mut neg = match self.peek() {
            Tok::Plus => {
                self.bump();
                false
            }
            Tok::Minus => {
                self.bump();
                true
            }
            _ => false,
        };
        loop {
            terms.push((neg, self.term()?));
            neg = match self.peek() {
                Tok::Plus => false,
                Tok::Minus => true,
                _ => break,
            };
            self.bump();
        }
        Ok(Ast::Sum(terms))
    }

    fn starts_factor(&self) -> bool {
        matches!(self.peek(), Tok::Var(_) | Tok::LParen)
    }

    /// `'(' sign? real sign real 'i' ')'`, consumed only on a full match.
    fn complex_coeff(&mut self) -> Option<Scalar> {
        let save = self.pos;
        let mut go = || {
            if self.bump() != Tok::LParen {
                return None;
            }
            let mut sign = 1.0;
            match self.peek() {
                Tok::Minus => {
                    self.bump();
                    sign = -1.0;
                }
                Tok::Plus => {
                    self.bump();
                }
                _ => {}
            }
            let Tok::Num(re) = self.bump() else { return None };
            let isign = match self.bump() {
                Tok::Plus => 1.0,
                Tok::Minus => -1.0,
                _ => return None,
            };
            let Tok::Imag(im) = self.bump() else { return None };
            if self.bump() != Tok::RParen {
                return None;
            }
            Some(Scalar::new(sign * re, isign * im))
        };
        let out = go();
        if out.is_none() {
            self.pos = save;
        }
        out
    }

    fn term(&mut self) -> Result<Ast, ParseError> {
        let mut factors = Vec::new();
        let coeff = match self.peek() {
            Tok::Num(v) => {
                let v = *v;
                self.bump();
                Some(Scalar::new(v, 0.0))
            }
            Tok::LParen => self.complex_coeff(),
            _ => None,
        };
        if let Some(c) = coeff {
            factors.push(Ast::Const(c));
        } else if !self.starts_factor() {
            return err(self.at(), "expected a coefficient, a generator or '('");
        }
        while self.starts_factor() {
            factors.push(self.factor()?);
        }
        Ok(Ast::Product(factors))
    }

    fn factor(&mut self) -> Result<Ast, ParseError> {
        let mut a = self.atom()?;
        loop {
            match self.peek() {
                Tok::Prime => {
                    self.bump();
                    a = Ast::Adjoint(Box::new(a));
                }
                Tok::Caret => {
                    self.bump();
                    let at = self.at();
                    match self.bump() {
                        Tok::Num(v) if v.fract() == 0.0 && v >= 0.0 && v <= u32::MAX as f64 => {
                            a = Ast::Pow(Box::new(a), v as u32);
                        }
                        _ => return err(at, "expected a nonnegative integer exponent"),
                    }
                }
                _ => return Ok(a),
            }
        }
    }

    fn atom(&mut self) -> Result<Ast, ParseError> {
        let at = self.at();
        match self.bump() {
            Tok::Var(j) => Ok(Ast::Var(j)),
            Tok::LParen => {
                let e = self.expr()?;
                if self.bump() != Tok::RParen {
                    return err(self.toks[self.pos.saturating_sub(1)].1, "expected ')'");
                }
                Ok(e)
            }
            _ => err(at, "expected a generator or '('"),
        }
    }
}

/// Parses `text`; the alphabet is `declared` if given, else the largest index used (at least 1).
pub fn parse_poly(text: &str, declared: Option<usize>) -> Result<PolyExpr, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    if *p.peek() == Tok::End {
        return err(0, "empty expression");
    }
    let ast = p.expr()?;
    if *p.peek() != Tok::End {
        return err(p.at(), "expected '+', '-' or end of input");
    }
    let used = ast.max_index();
    let n = match declared {
        Some(n) if used > n => {
            let pos = text.find(&format!("x{used}")).unwrap_or(0);
            return err(pos, format!("x{used} exceeds the declared alphabet of {n} generators"));
        }
        Some(0) => return err(0, "alphabet size must be positive"),
        Some(n) => n,
        None => used.max(1),
    };
    Ok(PolyExpr {
        source: text.to_string(),
        poly: ast.build(n),
        alphabet_size: n,
    })
}
