//! Expressions over `Q(i)[h, h^-1]` in the morphism variables.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary ('*' unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' '-'? INT)?
//! atom    := NUMBER | 'i' | 'h' | VAR | '(' sum ')'
//! ```
//!
//! `NUMBER` is an integer or an exact fraction `a/b` with no spaces, with an
//! optional `i` suffix (`3i`, `1/2i`). Variables are `x1.., y1.., q1.., r1..`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use microformal::{BiSeries, Context, GaussRat, Poly, Truncation, Var};

/// Syntax or scoping error at a 1-based column.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("column {column}: {message}")]
pub struct ParseError {
    pub column: usize,
    pub message: String,
}

fn err<T>(column: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        column,
        message: message.into(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    /// A nonnegative rational, times `i` when `imaginary`.
    Number { value: BigRational, imaginary: bool },
    Hbar,
    Var { var: Var, column: usize },
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow { base: Box<Expr>, exp: i32, column: usize },
}

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow { .. } => 4,
            _ => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Number { value, imaginary } => match (imaginary, value.is_one()) {
                (true, true) => write!(f, "i"),
                (true, false) => write!(f, "{value}i"),
                (false, _) => write!(f, "{value}"),
            },
            Expr::Hbar => write!(f, "h"),
            Expr::Var { var, .. } => write!(f, "{var}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.write_at(f, 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.write_at(f, 1)?;
                write!(f, " {} ", if matches!(self, Expr::Add(..)) { '+' } else { '-' })?;
                b.write_at(f, 2)
            }
            Expr::Mul(a, b) => {
                a.write_at(f, 2)?;
                write!(f, "*")?;
                b.write_at(f, 3)
            }
            Expr::Pow { base, exp, .. } => {
                base.write_at(f, 5)?;
                write!(f, "^{exp}")
            }
        }
    }
}

/// Prints with the minimal parentheses that parse back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Number { value: BigRational, imaginary: bool },
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    End,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Number { .. } => "number".into(),
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Plus => "'+'".into(),
        Tok::Minus => "'-'".into(),
        Tok::Star => "'*'".into(),
        Tok::Caret => "'^'".into(),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::End => "end of input".into(),
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut k = 0;
    let digits = |k: &mut usize| {
        let start = *k;
        while *k < chars.len() && chars[*k].is_ascii_digit() {
            *k += 1;
        }
        chars[start..*k].iter().collect::<String>()
    };
    while k < chars.len() {
        let c = chars[k];
        let col = k + 1;
        if c.is_whitespace() {
            k += 1;
            continue;
        }
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '/' => {
                return err(
                    col,
                    "'/' is only allowed inside a fraction literal such as 3/2",
                )
            }
            d if d.is_ascii_digit() => {
                let num: BigInt = digits(&mut k).parse().expect("digits");
                let mut value = BigRational::from_integer(num);
                if k + 1 < chars.len() && chars[k] == '/' && chars[k + 1].is_ascii_digit() {
                    k += 1;
                    let den_col = k + 1;
                    let den: BigInt = digits(&mut k).parse().expect("digits");
                    if den.is_zero() {
                        return err(den_col, "zero denominator");
                    }
                    value = BigRational::new(value.to_integer(), den);
                }
                let imaginary = k < chars.len()
                    && chars[k] == 'i'
                    && !chars.get(k + 1).is_some_and(|c| c.is_alphanumeric());
                if imaginary {
                    k += 1;
                }
                out.push((Tok::Number { value, imaginary }, col));
                continue;
            }
            a if a.is_alphabetic() => {
                let start = k;
                while k < chars.len() && chars[k].is_alphanumeric() {
                    k += 1;
                }
                out.push((Tok::Ident(chars[start..k].iter().collect()), col));
                continue;
            }
            other => return err(col, format!("unexpected character '{other}'")),
        };
        out.push((tok, col));
        k += 1;
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

fn identifier(name: &str, column: usize) -> Result<Expr, ParseError> {
    match name {
        "i" => {
            return Ok(Expr::Number {
                value: BigRational::one(),
                imaginary: true,
            })
        }
        "h" => return Ok(Expr::Hbar),
        "l" => return err(column, "'l' (lambda) is bookkeeping and cannot appear in input"),
        _ => {}
    }
    let mut chars = name.chars();
    let head = chars.next();
    let index = chars.as_str();
    let make: Option<fn(usize) -> Var> = match head {
        Some('x') => Some(Var::X),
        Some('y') => Some(Var::Y),
        Some('q') => Some(Var::Q),
        Some('r') => Some(Var::R),
        _ => None,
    };
    match (make, index.parse::<usize>()) {
        (Some(make), Ok(n)) if n >= 1 && !index.starts_with('0') => Ok(Expr::Var {
            var: make(n),
            column,
        }),
        _ => err(column, format!("unknown identifier '{name}'")),
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

    fn column(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if t.0 != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Star {
            self.bump();
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        let (_, column) = self.bump();
        let negative = *self.peek() == Tok::Minus;
        if negative {
            self.bump();
        }
        let exp_col = self.column();
        let exp = match self.bump().0 {
            Tok::Number {
                value,
                imaginary: false,
            } if value.is_integer() => value
                .to_integer()
                .try_into()
                .ok()
                .filter(|e: &i32| *e <= i32::from(u16::MAX))
                .ok_or_else(|| ParseError {
                    column: exp_col,
                    message: "exponent too large".into(),
                })?,
            other => {
                return err(
                    exp_col,
                    format!("expected an integer exponent, found {}", describe(&other)),
                )
            }
        };
        if *self.peek() == Tok::Caret {
            return err(self.column(), "chained exponents need parentheses");
        }
        Ok(Expr::Pow {
            base: Box::new(base),
            exp: if negative { -exp } else { exp },
            column,
        })
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (tok, column) = self.bump();
        match tok {
            Tok::Number { value, imaginary } => Ok(Expr::Number { value, imaginary }),
            Tok::Ident(name) => identifier(&name, column),
            Tok::LParen => {
                let inner = self.sum()?;
                match self.bump() {
                    (Tok::RParen, _) => Ok(inner),
                    (other, c) => err(c, format!("expected ')', found {}", describe(&other))),
                }
            }
            other => err(column, format!("expected an expression, found {}", describe(&other))),
        }
    }
}

/// Parses a complete expression.
pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let e = p.sum()?;
    match p.bump() {
        (Tok::End, _) => Ok(e),
        (other, c) => err(c, format!("unexpected {}", describe(&other))),
    }
}

/// Value of an expression: `h^j -> coefficient`, `j` possibly negative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HbarPoly {
    ctx: Arc<Context>,
    coeffs: BTreeMap<i32, Poly>,
}

impl HbarPoly {
    fn constant(ctx: &Arc<Context>, c: GaussRat) -> Self {
        Self::single(ctx, 0, Poly::constant(ctx, c))
    }

    fn single(ctx: &Arc<Context>, j: i32, p: Poly) -> Self {
        let mut coeffs = BTreeMap::new();
        if !p.is_zero() {
            coeffs.insert(j, p);
        }
        HbarPoly {
            ctx: ctx.clone(),
            coeffs,
        }
    }

    fn combine(&self, other: &HbarPoly, sign: bool) -> HbarPoly {
        let mut coeffs = self.coeffs.clone();
        for (j, p) in &other.coeffs {
            let old = coeffs.remove(j).unwrap_or_else(|| Poly::zero(&self.ctx));
            let sum = if sign { &old + p } else { &old - p };
            if !sum.is_zero() {
                coeffs.insert(*j, sum);
            }
        }
        HbarPoly {
            ctx: self.ctx.clone(),
            coeffs,
        }
    }

    fn mul(&self, other: &HbarPoly) -> HbarPoly {
        let mut out = HbarPoly::single(&self.ctx, 0, Poly::zero(&self.ctx));
        for (a, p) in &self.coeffs {
            for (b, q) in &other.coeffs {
                out = out.combine(&HbarPoly::single(&self.ctx, a + b, p * q), true);
            }
        }
        out
    }

    /// Coefficient of `h^j`.
    pub fn coeff(&self, j: i32) -> Poly {
        self.coeffs
            .get(&j)
            .cloned()
            .unwrap_or_else(|| Poly::zero(&self.ctx))
    }

    /// The value as a number, if it has no variables and no `h`.
    pub fn as_constant(&self) -> Option<GaussRat> {
        let c = self.coeff(0);
        (self.coeffs.keys().all(|&j| j == 0) && c.is_constant()).then(|| c.constant_term())
    }

    /// Lowest power of `h` present.
    pub fn hbar_valuation(&self) -> Option<i32> {
        self.coeffs.keys().next().copied()
    }

    /// The `l`-free series `sum_j h^j p_j`; requires `j >= 0` throughout.
    pub fn to_series(&self, trunc: Truncation) -> microformal::Result<BiSeries> {
        BiSeries::from_terms(
            &self.ctx,
            trunc,
            self.coeffs.iter().map(|(&j, p)| ((0, j), p.clone())),
        )
    }
}

/// Evaluates `e` in `ctx`, accepting only the variables in `allowed`.
pub fn evaluate(e: &Expr, ctx: &Arc<Context>, allowed: &[Var]) -> Result<HbarPoly, ParseError> {
    Ok(match e {
        Expr::Number { value, imaginary } => {
            let c = GaussRat::from_real(value.clone());
            HbarPoly::constant(ctx, if *imaginary { c.mul_i() } else { c })
        }
        Expr::Hbar => HbarPoly::single(ctx, 1, Poly::one(ctx)),
        Expr::Var { var, column } => {
            if ctx.index_of(*var).is_err() {
                return err(
                    *column,
                    format!("{var} is out of range for dimensions ({}, {})", ctx.n_x(), ctx.n_y()),
                );
            }
            if !allowed.contains(var) {
                let names: Vec<String> = allowed.iter().map(Var::to_string).collect();
                return err(
                    *column,
                    format!("{var} is not allowed here (expected one of: {}, h)", names.join(", ")),
                );
            }
            HbarPoly::single(ctx, 0, Poly::var(ctx, *var).expect("checked"))
        }
        Expr::Neg(a) => {
            HbarPoly::single(ctx, 0, Poly::zero(ctx)).combine(&evaluate(a, ctx, allowed)?, false)
        }
        Expr::Add(a, b) => evaluate(a, ctx, allowed)?.combine(&evaluate(b, ctx, allowed)?, true),
        Expr::Sub(a, b) => evaluate(a, ctx, allowed)?.combine(&evaluate(b, ctx, allowed)?, false),
        Expr::Mul(a, b) => evaluate(a, ctx, allowed)?.mul(&evaluate(b, ctx, allowed)?),
        Expr::Pow { base, exp, column } => {
            if *exp < 0 {
                if **base != Expr::Hbar {
                    return err(*column, "negative exponents are only allowed on h");
                }
                return Ok(HbarPoly::single(ctx, *exp, Poly::one(ctx)));
            }
            let b = evaluate(base, ctx, allowed)?;
            let mut acc = HbarPoly::constant(ctx, GaussRat::from_int(1));
            for _ in 0..*exp {
                acc = acc.mul(&b);
            }
            acc
        }
    })
}
