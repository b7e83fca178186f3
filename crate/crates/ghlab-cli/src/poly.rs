//! `--poly` mini-grammar: `c*z1^a*z2^b` terms joined by `+`/`-`.

use std::collections::BTreeMap;

use ghlab::tropical::LaurentPoly;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("bad polynomial at column {col}: {msg}")]
pub struct PolyError {
    pub col: usize,
    pub msg: String,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, PolyError> {
        Err(PolyError { col: self.pos + 1, msg: msg.into() })
    }

    fn digits(&mut self) -> &'a str {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap()
    }

    fn number(&mut self) -> Result<f64, PolyError> {
        self.skip_ws();
        let start = self.pos;
        let int = self.digits().len();
        let mut frac = 0;
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            frac = self.digits().len();
            if frac == 0 {
                return self.err("expected digits after '.'");
            }
        }
        if int == 0 && frac == 0 {
            return self.err("expected a number");
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse().or_else(|_| self.err(format!("bad number '{text}'")))
    }

    fn exponent(&mut self) -> Result<i64, PolyError> {
        self.skip_ws();
        let neg = self.src.get(self.pos) == Some(&b'-');
        if neg {
            self.pos += 1;
        }
        let d = self.digits();
        if d.is_empty() {
            return self.err("expected an integer exponent");
        }
        let v: i64 = d.parse().or_else(|_| self.err("exponent out of range"))?;
        Ok(if neg { -v } else { v })
    }

    /// `z`, `z1` or `z2`, as a variable index.
    fn var(&mut self) -> Result<usize, PolyError> {
        self.skip_ws();
        if self.src.get(self.pos) != Some(&b'z') {
            return self.err("expected 'z', 'z1' or 'z2'");
        }
        self.pos += 1;
        match self.src.get(self.pos) {
            Some(b'1') => {
                self.pos += 1;
                Ok(0)
            }
            Some(b'2') => {
                self.pos += 1;
                Ok(1)
            }
            Some(c) if c.is_ascii_digit() => self.err("only z1 and z2 are supported"),
            _ => Ok(0),
        }
    }

    fn factor(&mut self, exp: &mut [i64; 2]) -> Result<(), PolyError> {
        let v = self.var()?;
        let mut e = 1;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            e = self.exponent()?;
        }
        exp[v] += e;
        Ok(())
    }

    fn term(&mut self) -> Result<(f64, [i64; 2]), PolyError> {
        let mut coef = 1.0;
        let mut exp = [0i64; 2];
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                coef = self.number()?;
                if self.peek() != Some(b'*') {
                    return Ok((coef, exp));
                }
                self.pos += 1;
                self.factor(&mut exp)?;
            }
            Some(b'z') => self.factor(&mut exp)?,
            Some(_) => return self.err("expected a coefficient or variable"),
            None => return self.err("unexpected end of input"),
        }
        while self.peek() == Some(b'*') {
            self.pos += 1;
            self.factor(&mut exp)?;
        }
        Ok((coef, exp))
    }
}

/// Parsed terms keyed by exponent, like terms summed; `l` is 2 if `z2` occurs.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedPoly {
    pub l: usize,
    pub terms: Vec<(Vec<i64>, f64)>,
}

pub fn parse_terms(src: &str) -> Result<ParsedPoly, PolyError> {
    let mut lx = Lexer { src: src.as_bytes(), pos: 0 };
    let mut acc: BTreeMap<[i64; 2], f64> = BTreeMap::new();
    let mut sign = 1.0;
    match lx.peek() {
        Some(b'-') => {
            lx.pos += 1;
            sign = -1.0;
        }
        Some(b'+') => lx.pos += 1,
        _ => {}
    }
    loop {
        let (c, e) = lx.term()?;
        *acc.entry(e).or_insert(0.0) += sign * c;
        match lx.peek() {
            None => break,
            Some(b'+') => sign = 1.0,
            Some(b'-') => sign = -1.0,
            Some(c) => return lx.err(format!("unexpected '{}'", c as char)),
        }
        lx.pos += 1;
    }
    let l = if acc.keys().any(|e| e[1] != 0) || src.contains("z2") { 2 } else { 1 };
    let terms: Vec<(Vec<i64>, f64)> = acc
        .into_iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|(e, c)| (e[..l].to_vec(), c))
        .collect();
    if terms.is_empty() {
        return Err(PolyError { col: 1, msg: "polynomial is identically zero".into() });
    }
    Ok(ParsedPoly { l, terms })
}

pub fn parse_poly(src: &str) -> Result<LaurentPoly, PolyError> {
    let p = parse_terms(src)?;
    let terms: Vec<(&[i64], f64)> = p.terms.iter().map(|(e, c)| (e.as_slice(), *c)).collect();
    LaurentPoly::from_real(p.l, &terms).map_err(|e| PolyError { col: 1, msg: e.to_string() })
}
