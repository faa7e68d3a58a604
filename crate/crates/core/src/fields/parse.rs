//! Textual element syntax shared by the CLI and JSON job files. One grammar,
//! several evaluators: finite field elements (polynomials in g), Laurent
//! series (with O(t^N) precision markers), univariate polynomials/rationals,
//! and bivariate monomial-times-unit elements.

use crate::error::{Error, Result};

use super::bilaurent::{BiLaurentElement, PolyFq2};
use super::fq::{FqElem, FqSpec};
use super::laurent::{LaurentElement, DEFAULT_PRECISION};
use super::poly::PolyFq;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(u64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(input: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let mut chars = input.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            ' ' | '\t' | '\n' => {
                chars.next();
            }
            '0'..='9' => {
                let mut n = 0u64;
                while let Some(d) = chars.peek().and_then(|c| c.to_digit(10)) {
                    n = n
                        .checked_mul(10)
                        .and_then(|n| n.checked_add(d as u64))
                        .ok_or_else(|| Error::Parse("numeric literal overflow".into()))?;
                    chars.next();
                }
                out.push(Tok::Num(n));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push(Tok::Ident(s));
            }
            '+' => {
                chars.next();
                out.push(Tok::Plus);
            }
            '-' => {
                chars.next();
                out.push(Tok::Minus);
            }
            '*' => {
                chars.next();
                out.push(Tok::Star);
            }
            '/' => {
                chars.next();
                out.push(Tok::Slash);
            }
            '^' => {
                chars.next();
                out.push(Tok::Caret);
            }
            '(' => {
                chars.next();
                out.push(Tok::LParen);
            }
            ')' => {
                chars.next();
                out.push(Tok::RParen);
            }
            c => return Err(Error::Parse(format!("unexpected character {c:?}"))),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum Expr {
    Num(u64),
    Ident(String),
    /// O(var^n): everything from exponent n on is unknown
    OBound(String, i64),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i64),
    Neg(Box<Expr>),
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.next() {
            Some(got) if got == t => Ok(()),
            got => Err(Error::Parse(format!("expected {t:?}, got {got:?}"))),
        }
    }

    fn signed_int(&mut self) -> Result<i64> {
        let neg = matches!(self.peek(), Some(Tok::Minus));
        if neg {
            self.next();
        }
        match self.next() {
            Some(Tok::Num(n)) => {
                let v = i64::try_from(n).map_err(|_| Error::Parse("exponent overflow".into()))?;
                Ok(if neg { -v } else { v })
            }
            got => Err(Error::Parse(format!("expected integer, got {got:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.next();
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.next();
                    let rhs = self.term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.next();
                    let rhs = self.factor()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Slash) => {
                    self.next();
                    let rhs = self.factor()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.next();
            let e = self.signed_int()?;
            return Ok(Expr::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Tok::Num(n)) => Ok(Expr::Num(n)),
            Some(Tok::Ident(s)) if s == "O" => {
                self.expect(Tok::LParen)?;
                let var = match self.next() {
                    Some(Tok::Ident(v)) => v,
                    got => return Err(Error::Parse(format!("expected variable in O(...), got {got:?}"))),
                };
                let n = if matches!(self.peek(), Some(Tok::Caret)) {
                    self.next();
                    self.signed_int()?
                } else {
                    1
                };
                self.expect(Tok::RParen)?;
                Ok(Expr::OBound(var, n))
            }
            Some(Tok::Ident(s)) => Ok(Expr::Ident(s)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Minus) => {
                let e = self.factor()?;
                Ok(Expr::Neg(Box::new(e)))
            }
            got => Err(Error::Parse(format!("unexpected token {got:?}"))),
        }
    }
}

fn parse_ast(input: &str) -> Result<Expr> {
    let toks = lex(input)?;
    if toks.is_empty() {
        return Err(Error::Parse("empty element expression".into()));
    }
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(Error::Parse(format!(
            "trailing input after element expression: {:?}",
            &p.toks[p.pos..]
        )));
    }
    Ok(e)
}

// ---------- finite field evaluator ----------

fn eval_fq(e: &Expr, spec: &FqSpec) -> Result<FqElem> {
    match e {
        Expr::Num(n) => Ok(spec.from_scalar(*n as i64)),
        Expr::Ident(s) if s == "g" => {
            if spec.e() == 1 {
                return Err(Error::Parse(format!(
                    "no generator g in the prime field F_{}",
                    spec.q()
                )));
            }
            Ok(spec.gen_elem())
        }
        Expr::Ident(s) => Err(Error::Parse(format!("unknown symbol {s:?} in F_q element"))),
        Expr::OBound(..) => Err(Error::Parse("O(...) not allowed in F_q elements".into())),
        Expr::Add(a, b) => Ok(eval_fq(a, spec)?.add(&eval_fq(b, spec)?)),
        Expr::Sub(a, b) => Ok(eval_fq(a, spec)?.sub(&eval_fq(b, spec)?)),
        Expr::Mul(a, b) => Ok(eval_fq(a, spec)?.mul(&eval_fq(b, spec)?)),
        Expr::Div(a, b) => eval_fq(a, spec)?.div(&eval_fq(b, spec)?),
        Expr::Pow(a, k) => eval_fq(a, spec)?.pow(*k),
        Expr::Neg(a) => Ok(eval_fq(a, spec)?.neg()),
    }
}

/// Parse an F_q element written as a polynomial in g.
pub fn parse_fq(spec: &FqSpec, input: &str) -> Result<FqElem> {
    eval_fq(&parse_ast(input)?, spec)
}

// ---------- Laurent evaluator ----------

/// Value during Laurent evaluation: a certified element, or a pure O-bound.
enum LVal {
    Elem(LaurentElement),
    OTerm(i64),
}

fn truncate_to_end(a: LaurentElement, end: i64) -> Result<LaurentElement> {
    if a.is_zero() {
        return Ok(a);
    }
    let val = a.valuation()?;
    if end <= val {
        return Err(Error::PrecisionExhausted(format!(
            "O-bound at exponent {end} hides the whole element (valuation {val})"
        )));
    }
    Ok(a.truncate((end - val) as usize))
}

fn eval_laurent(e: &Expr, spec: &FqSpec, var: &str) -> Result<LVal> {
    let elem = |x: LaurentElement| Ok(LVal::Elem(x));
    match e {
        Expr::Num(n) => elem(LaurentElement::from_scalar(spec, var, *n as i64, DEFAULT_PRECISION)),
        Expr::Ident(s) if s == var => elem(LaurentElement::uniformizer(spec, var, DEFAULT_PRECISION)),
        Expr::Ident(s) if s == "g" => {
            let g = parse_fq(spec, "g")?;
            elem(LaurentElement::from_polynomial(
                spec,
                var,
                &PolyFq::constant(&g),
                0,
                DEFAULT_PRECISION,
            ))
        }
        Expr::Ident(s) => Err(Error::Parse(format!(
            "unknown symbol {s:?} in a series in {var}"
        ))),
        Expr::OBound(v, n) => {
            if v != var {
                return Err(Error::Parse(format!("O({v}^..) in a series in {var}")));
            }
            Ok(LVal::OTerm(*n))
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            let negate = matches!(e, Expr::Sub(..));
            let lhs = eval_laurent(a, spec, var)?;
            let rhs = eval_laurent(b, spec, var)?;
            match (lhs, rhs) {
                (LVal::Elem(x), LVal::Elem(y)) => {
                    let y = if negate { y.neg() } else { y };
                    elem(x.add(&y)?)
                }
                (LVal::Elem(x), LVal::OTerm(n)) => elem(truncate_to_end(x, n)?),
                (LVal::OTerm(n), LVal::Elem(x)) => {
                    let x = if negate { x.neg() } else { x };
                    elem(truncate_to_end(x, n)?)
                }
                (LVal::OTerm(m), LVal::OTerm(n)) => Ok(LVal::OTerm(m.min(n))),
            }
        }
        Expr::Mul(a, b) => match (eval_laurent(a, spec, var)?, eval_laurent(b, spec, var)?) {
            (LVal::Elem(x), LVal::Elem(y)) => elem(x.mul(&y)),
            _ => Err(Error::Parse("O(...) may only appear in sums".into())),
        },
        Expr::Div(a, b) => match (eval_laurent(a, spec, var)?, eval_laurent(b, spec, var)?) {
            (LVal::Elem(x), LVal::Elem(y)) => elem(x.div(&y)?),
            _ => Err(Error::Parse("O(...) may only appear in sums".into())),
        },
        Expr::Pow(a, k) => match eval_laurent(a, spec, var)? {
            LVal::Elem(x) => elem(x.pow(*k)?),
            _ => Err(Error::Parse("O(...) may only appear in sums".into())),
        },
        Expr::Neg(a) => match eval_laurent(a, spec, var)? {
            LVal::Elem(x) => elem(x.neg()),
            o => Ok(o),
        },
    }
}

/// Parse a Laurent series in `var` over F_q. Without an explicit O(var^N)
/// marker the element is polynomial-exact to the default precision.
pub fn parse_laurent(spec: &FqSpec, var: &str, input: &str) -> Result<LaurentElement> {
    match eval_laurent(&parse_ast(input)?, spec, var)? {
        LVal::Elem(x) => Ok(x),
        LVal::OTerm(_) => Err(Error::Parse(
            "element consists only of an O(...) bound".into(),
        )),
    }
}

// ---------- univariate rational evaluator ----------

fn eval_poly_rat(e: &Expr, spec: &FqSpec, var: &str) -> Result<(PolyFq, PolyFq)> {
    let one = PolyFq::one(spec);
    match e {
        Expr::Num(n) => Ok((PolyFq::constant(&spec.from_scalar(*n as i64)), one)),
        Expr::Ident(s) if s == var => Ok((PolyFq::x(spec), one)),
        Expr::Ident(s) if s == "g" => Ok((PolyFq::constant(&parse_fq(spec, "g")?), one)),
        Expr::Ident(s) => Err(Error::Parse(format!(
            "unknown symbol {s:?} in a polynomial in {var}"
        ))),
        Expr::OBound(..) => Err(Error::Parse("O(...) not allowed here".into())),
        Expr::Add(a, b) => {
            let (na, da) = eval_poly_rat(a, spec, var)?;
            let (nb, db) = eval_poly_rat(b, spec, var)?;
            Ok((na.mul(&db).add(&nb.mul(&da)), da.mul(&db)))
        }
        Expr::Sub(a, b) => {
            let (na, da) = eval_poly_rat(a, spec, var)?;
            let (nb, db) = eval_poly_rat(b, spec, var)?;
            Ok((na.mul(&db).sub(&nb.mul(&da)), da.mul(&db)))
        }
        Expr::Mul(a, b) => {
            let (na, da) = eval_poly_rat(a, spec, var)?;
            let (nb, db) = eval_poly_rat(b, spec, var)?;
            Ok((na.mul(&nb), da.mul(&db)))
        }
        Expr::Div(a, b) => {
            let (na, da) = eval_poly_rat(a, spec, var)?;
            let (nb, db) = eval_poly_rat(b, spec, var)?;
            if nb.is_zero() {
                return Err(Error::DivisionByZero("division by zero polynomial".into()));
            }
            Ok((na.mul(&db), da.mul(&nb)))
        }
        Expr::Pow(a, k) => {
            let (na, da) = eval_poly_rat(a, spec, var)?;
            let (mut n, mut d) = (PolyFq::one(spec), PolyFq::one(spec));
            for _ in 0..k.unsigned_abs() {
                n = n.mul(&na);
                d = d.mul(&da);
            }
            if *k < 0 {
                if na.is_zero() {
                    return Err(Error::DivisionByZero("negative power of zero".into()));
                }
                std::mem::swap(&mut n, &mut d);
            }
            Ok((n, d))
        }
        Expr::Neg(a) => {
            let (na, da) = eval_poly_rat(a, spec, var)?;
            Ok((na.neg(), da))
        }
    }
}

/// Parse a rational function in `var` as a numerator/denominator pair
/// (denominator nonzero, not normalized).
pub fn parse_rational(spec: &FqSpec, var: &str, input: &str) -> Result<(PolyFq, PolyFq)> {
    let (n, d) = eval_poly_rat(&parse_ast(input)?, spec, var)?;
    if d.is_zero() {
        return Err(Error::DivisionByZero("zero denominator".into()));
    }
    Ok((n, d))
}

/// Parse a polynomial in `var`: a rational whose denominator is constant.
pub fn parse_poly(spec: &FqSpec, var: &str, input: &str) -> Result<PolyFq> {
    let (n, d) = parse_rational(spec, var, input)?;
    if d.degree() != Some(0) {
        return Err(Error::Parse(format!(
            "expected a polynomial in {var}, got a proper fraction"
        )));
    }
    Ok(n.scale(&d.coeff(0).inv()?))
}

// ---------- bivariate evaluator ----------

fn eval_bi_rat(e: &Expr, spec: &FqSpec) -> Result<(PolyFq2, PolyFq2)> {
    use super::bilaurent::BiVar;
    let one = PolyFq2::one(spec);
    match e {
        Expr::Num(n) => Ok((PolyFq2::constant(&spec.from_scalar(*n as i64)), one)),
        Expr::Ident(x) if x == "s" => Ok((PolyFq2::var(spec, BiVar::S), one)),
        Expr::Ident(x) if x == "t" => Ok((PolyFq2::var(spec, BiVar::T), one)),
        Expr::Ident(x) if x == "g" => Ok((PolyFq2::constant(&parse_fq(spec, "g")?), one)),
        Expr::Ident(x) => Err(Error::Parse(format!(
            "unknown symbol {x:?} in a bivariate element"
        ))),
        Expr::OBound(..) => Err(Error::Parse(
            "O(...) not allowed in exact bivariate elements".into(),
        )),
        Expr::Add(a, b) => {
            let (na, da) = eval_bi_rat(a, spec)?;
            let (nb, db) = eval_bi_rat(b, spec)?;
            Ok((na.mul(&db).add(&nb.mul(&da)), da.mul(&db)))
        }
        Expr::Sub(a, b) => {
            let (na, da) = eval_bi_rat(a, spec)?;
            let (nb, db) = eval_bi_rat(b, spec)?;
            Ok((na.mul(&db).sub(&nb.mul(&da)), da.mul(&db)))
        }
        Expr::Mul(a, b) => {
            let (na, da) = eval_bi_rat(a, spec)?;
            let (nb, db) = eval_bi_rat(b, spec)?;
            Ok((na.mul(&nb), da.mul(&db)))
        }
        Expr::Div(a, b) => {
            let (na, da) = eval_bi_rat(a, spec)?;
            let (nb, db) = eval_bi_rat(b, spec)?;
            if nb.is_zero() {
                return Err(Error::DivisionByZero("division by zero".into()));
            }
            Ok((na.mul(&db), da.mul(&nb)))
        }
        Expr::Pow(a, k) => {
            let (na, da) = eval_bi_rat(a, spec)?;
            let n = na.pow(k.unsigned_abs() as u32);
            let d = da.pow(k.unsigned_abs() as u32);
            if *k < 0 {
                if na.is_zero() {
                    return Err(Error::DivisionByZero("negative power of zero".into()));
                }
                Ok((d, n))
            } else {
                Ok((n, d))
            }
        }
        Expr::Neg(a) => {
            let (na, da) = eval_bi_rat(a, spec)?;
            Ok((na.neg(), da))
        }
    }
}

/// Parse a two-dimensional local field element; the result must lie in the
/// monomial-times-unit monoid.
pub fn parse_bilaurent(spec: &FqSpec, input: &str) -> Result<BiLaurentElement> {
    let (n, d) = eval_bi_rat(&parse_ast(input)?, spec)?;
    BiLaurentElement::from_rational(n, d)
}

/// Parse a plain polynomial in s and t (constant denominator allowed), with
/// no monomial-unit restriction.
pub fn parse_poly2(spec: &FqSpec, input: &str) -> Result<PolyFq2> {
    let (n, d) = eval_bi_rat(&parse_ast(input)?, spec)?;
    let (Some(0), Some(0)) = (
        d.terms().map(|((ds, _), _)| ds).max(),
        d.terms().map(|((_, dt), _)| dt).max(),
    ) else {
        return Err(Error::Parse(
            "expected a polynomial in s, t, got a proper fraction".into(),
        ));
    };
    Ok(n.mul(&PolyFq2::constant(&d.coeff(0, 0).inv()?)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fq_roundtrip_exhaustive_small() {
        for (p, e) in [(2u32, 1u32), (3, 1), (2, 2), (5, 1), (3, 2), (2, 3)] {
            let spec = FqSpec::new(p, e).unwrap();
            for a in spec.elements() {
                let s = a.to_string();
                assert_eq!(parse_fq(&spec, &s).unwrap(), a, "roundtrip {s}");
            }
        }
    }

    #[test]
    fn fq_expression_forms() {
        let f9 = FqSpec::new(3, 2).unwrap();
        // g^2 = -1 mod g^2+1
        assert_eq!(parse_fq(&f9, "g^2").unwrap(), f9.from_scalar(-1));
        assert_eq!(parse_fq(&f9, "2*(1+g) - g").unwrap(), f9.from_scalar(2).add(&f9.gen_elem()));
        assert_eq!(parse_fq(&f9, "1/g").unwrap(), f9.gen_elem().inv().unwrap());
        assert!(parse_fq(&f9, "t").is_err());
        let f3 = FqSpec::new(3, 1).unwrap();
        assert!(parse_fq(&f3, "g").is_err());
    }

    #[test]
    fn laurent_roundtrip() {
        let f9 = FqSpec::new(3, 2).unwrap();
        let cases = [
            "t^-1*(2 + t + O(t^4))",
            "1 + O(t^3)",
            "t^5*((1 + g) + g*t^2 + O(t^7))",
            "2 + 2*t + O(t^32)",
        ];
        for s in cases {
            let a = parse_laurent(&f9, "t", s).unwrap();
            assert_eq!(a.to_string(), s, "canonical reprint");
            assert_eq!(parse_laurent(&f9, "t", &a.to_string()).unwrap(), a);
        }
    }

    #[test]
    fn laurent_expressions() {
        let f5 = FqSpec::new(5, 1).unwrap();
        let a = parse_laurent(&f5, "t", "t^2*(1+t)").unwrap();
        assert_eq!(a.valuation().unwrap(), 2);
        assert_eq!(a.precision(), Some(DEFAULT_PRECISION));
        let b = parse_laurent(&f5, "t", "(1+t)/(1-t)").unwrap();
        assert_eq!(b.known_coeff(1).unwrap(), f5.from_scalar(2));
        assert_eq!(b.known_coeff(2).unwrap(), f5.from_scalar(2));
        let c = parse_laurent(&f5, "t", "(1 + t) - 1").unwrap();
        assert_eq!(c.valuation().unwrap(), 1);
        assert!(parse_laurent(&f5, "t", "O(t^5)").is_err());
        assert!(parse_laurent(&f5, "t", "t - t").is_err());
    }

    #[test]
    fn poly_and_rational() {
        let f2 = FqSpec::new(2, 1).unwrap();
        let p = parse_poly(&f2, "t", "t^2+t+1").unwrap();
        assert_eq!(p.display("t").to_string(), "t^2+t+1");
        assert!(parse_poly(&f2, "t", "1/t").is_err());
        let (n, d) = parse_rational(&f2, "t", "(t+1)/t^2").unwrap();
        assert_eq!(n.display("t").to_string(), "t+1");
        assert_eq!(d.display("t").to_string(), "t^2");
    }

    #[test]
    fn bilaurent_roundtrip_and_rejects() {
        let f3 = FqSpec::new(3, 1).unwrap();
        let cases = ["s^2*t^3*(1+s+t)", "s*(1+t)/(1+s)", "t^-2*(1+2*s)", "(1+s+t)"];
        for s in cases {
            let a = parse_bilaurent(&f3, s).unwrap();
            let printed = a.to_string();
            let b = parse_bilaurent(&f3, &printed).unwrap();
            assert_eq!(printed, b.to_string(), "stable reprint for {s}");
        }
        assert_eq!(
            parse_bilaurent(&f3, "s+t").unwrap_err().code(),
            "EXACT_FORM_REQUIRED"
        );
        let st = parse_bilaurent(&f3, "s*t+s+t+1").unwrap(); // (1+s)(1+t)
        assert_eq!((st.s_exp(), st.t_exp()), (0, 0));
    }
}
