use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::context::{same_context, Context, Var};
use super::gauss::GaussRat;
use crate::error::{Error, Result};

/// Exponent vector, one slot per context variable.
///
/// Ordered graded-lexicographically: total degree first, then the exponent
/// of the earliest variable.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Box<[u16]>);

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n].into_boxed_slice())
    }

    pub fn from_exponents(exps: Vec<u16>) -> Self {
        Monomial(exps.into_boxed_slice())
    }

    pub fn exponents(&self) -> &[u16] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| u32::from(e)).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a.checked_add(*b).expect("monomial exponent overflow"))
                .collect(),
        )
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Sparse multivariate polynomial over [`GaussRat`] in a fixed [`Context`].
///
/// No zero coefficient is ever stored, so two polynomials are equal iff
/// their term maps are equal.
#[derive(Clone)]
pub struct Poly {
    ctx: Arc<Context>,
    terms: BTreeMap<Monomial, GaussRat>,
}

impl PartialEq for Poly {
    fn eq(&self, other: &Self) -> bool {
        *self.ctx == *other.ctx && self.terms == other.terms
    }
}

impl Eq for Poly {}

impl Poly {
    pub fn zero(ctx: &Arc<Context>) -> Self {
        Poly {
            ctx: ctx.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn one(ctx: &Arc<Context>) -> Self {
        Self::constant(ctx, GaussRat::one())
    }

    pub fn constant(ctx: &Arc<Context>, c: GaussRat) -> Self {
        let mut p = Self::zero(ctx);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(ctx.num_vars()), c);
        }
        p
    }

    pub fn var(ctx: &Arc<Context>, v: Var) -> Result<Self> {
        let idx = ctx.index_of(v)?;
        let mut exps = vec![0u16; ctx.num_vars()];
        exps[idx] = 1;
        let mut p = Self::zero(ctx);
        p.terms.insert(Monomial::from_exponents(exps), GaussRat::one());
        Ok(p)
    }

    /// Builds `c * prod v^e`. Exponents of repeated variables add up.
    pub fn monomial(ctx: &Arc<Context>, c: GaussRat, powers: &[(Var, u16)]) -> Result<Self> {
        let mut exps = vec![0u16; ctx.num_vars()];
        for &(v, e) in powers {
            exps[ctx.index_of(v)?] += e;
        }
        let mut p = Self::zero(ctx);
        p.insert_term(Monomial::from_exponents(exps), c);
        Ok(p)
    }

    fn insert_term(&mut self, m: Monomial, c: GaussRat) {
        if c.is_zero() || self.killed_by_eps(&m) {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += &c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    fn killed_by_eps(&self, m: &Monomial) -> bool {
        self.ctx.eps_slot().is_some_and(|s| m.0[s] >= 2)
    }

    pub fn ctx(&self) -> &Arc<Context> {
        &self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .iter()
                .next()
                .is_some_and(|(m, c)| m.is_one() && c.is_one())
    }

    /// Constant term (coefficient of the unit monomial).
    pub fn constant_term(&self) -> GaussRat {
        self.terms
            .get(&Monomial::one(self.ctx.num_vars()))
            .cloned()
            .unwrap_or_else(GaussRat::zero)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &GaussRat)> {
        self.terms.iter()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    /// Largest total degree in the given variables.
    pub fn degree_in(&self, vars: &[Var]) -> u32 {
        let slots: Vec<usize> = vars.iter().filter_map(|v| self.ctx.index_of(*v).ok()).collect();
        self.terms
            .keys()
            .map(|m| slots.iter().map(|&s| u32::from(m.0[s])).sum())
            .max()
            .unwrap_or(0)
    }

    /// Whether every live variable is among `allowed`.
    pub fn uses_only(&self, allowed: &[Var]) -> bool {
        self.live_vars().iter().all(|v| allowed.contains(v))
    }

    /// Variables that occur with a nonzero exponent.
    pub fn live_vars(&self) -> Vec<Var> {
        let n = self.ctx.num_vars();
        (0..n)
            .filter(|&s| self.terms.keys().any(|m| m.0[s] > 0))
            .map(|s| self.ctx.var_at(s))
            .collect()
    }

    fn check_ctx(&self, other: &Poly) -> Result<()> {
        same_context(&self.ctx, &other.ctx)
    }

    pub fn try_add(&self, other: &Poly) -> Result<Poly> {
        self.check_ctx(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Poly) -> Result<Poly> {
        self.check_ctx(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert_term(m.clone(), -c);
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Poly) -> Result<Poly> {
        self.check_ctx(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Poly::zero(&self.ctx));
        }
        // Products of Gaussian integers over the product of the common
        // denominators; each output coefficient is reduced once.
        let (da, na) = integral_parts(&self.terms);
        let (db, nb) = integral_parts(&other.terms);
        let mut acc: HashMap<Monomial, (BigInt, BigInt)> =
            HashMap::with_capacity(na.len() * nb.len());
        for (ma, (ar, ai)) in &na {
            for (mb, (br, bi)) in &nb {
                let m = ma.mul(mb);
                if self.killed_by_eps(&m) {
                    continue;
                }
                let (re, im) = if ai.is_zero() && bi.is_zero() {
                    (ar * br, BigInt::zero())
                } else {
                    (ar * br - ai * bi, ar * bi + ai * br)
                };
                match acc.get_mut(&m) {
                    Some(e) => {
                        e.0 += re;
                        e.1 += im;
                    }
                    None => {
                        acc.insert(m, (re, im));
                    }
                }
            }
        }
        let den = da * db;
        Ok(Poly {
            ctx: self.ctx.clone(),
            terms: acc
                .into_iter()
                .filter(|(_, (re, im))| !(re.is_zero() && im.is_zero()))
                .map(|(m, (re, im))| (m, GaussRat::from_parts(re, im, den.clone())))
                .collect(),
        })
    }

    pub fn scale(&self, k: &GaussRat) -> Poly {
        if k.is_zero() {
            return Poly::zero(&self.ctx);
        }
        Poly {
            ctx: self.ctx.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut result = Poly::one(&self.ctx);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Formal partial derivative.
    pub fn derivative(&self, v: Var) -> Result<Poly> {
        let slot = self.ctx.index_of(v)?;
        let mut out = Poly::zero(&self.ctx);
        for (m, c) in &self.terms {
            let e = m.0[slot];
            if e == 0 {
                continue;
            }
            let mut exps = m.0.clone();
            exps[slot] -= 1;
            out.insert_term(Monomial(exps), c * &GaussRat::from_int(i64::from(e)));
        }
        Ok(out)
    }

    /// Coefficient of `v^power`, as a polynomial in the remaining variables.
    pub fn coefficient_of(&self, v: Var, power: u16) -> Result<Poly> {
        let slot = self.ctx.index_of(v)?;
        let mut out = Poly::zero(&self.ctx);
        for (m, c) in &self.terms {
            if m.0[slot] == power {
                let mut exps = m.0.clone();
                exps[slot] = 0;
                out.terms.insert(Monomial(exps), c.clone());
            }
        }
        Ok(out)
    }

    /// Groups terms by their exponents in `vars`:
    /// `p = sum_beta coeff_beta * vars^beta` with `coeff_beta` free of `vars`.
    pub fn split_by(&self, vars: &[Var]) -> Result<BTreeMap<Vec<u16>, Poly>> {
        let slots = vars
            .iter()
            .map(|v| self.ctx.index_of(*v))
            .collect::<Result<Vec<_>>>()?;
        let mut out: BTreeMap<Vec<u16>, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let key: Vec<u16> = slots.iter().map(|&s| m.0[s]).collect();
            let mut exps = m.0.clone();
            for &s in &slots {
                exps[s] = 0;
            }
            out.entry(key)
                .or_insert_with(|| Poly::zero(&self.ctx))
                .terms
                .insert(Monomial(exps), c.clone());
        }
        Ok(out)
    }

    /// Ring homomorphism sending each live variable `v` to `map[v]`.
    ///
    /// All images must live in `target`; a live variable without an image
    /// is a context error.
    pub fn substitute(&self, target: &Arc<Context>, map: &BTreeMap<Var, Poly>) -> Result<Poly> {
        for img in map.values() {
            same_context(img.ctx(), target)?;
        }
        let n = self.ctx.num_vars();
        let mut images: Vec<Option<&Poly>> = Vec::with_capacity(n);
        for s in 0..n {
            images.push(map.get(&self.ctx.var_at(s)));
        }
        let mut power_cache: HashMap<(usize, u16), Poly> = HashMap::new();
        let mut out = Poly::zero(target);
        for (m, c) in &self.terms {
            let mut term = Poly::constant(target, c.clone());
            for (s, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let img = images[s].ok_or_else(|| {
                    Error::Context(format!(
                        "no image given for live variable {}",
                        self.ctx.var_at(s)
                    ))
                })?;
                let pw = power_cache
                    .entry((s, e))
                    .or_insert_with(|| img.pow(u32::from(e)));
                term = &term * pw;
            }
            out = &out + &term;
        }
        Ok(out)
    }

    /// Substitution inside the same context; variables without an image are
    /// left alone.
    pub fn substitute_partial(&self, map: &BTreeMap<Var, Poly>) -> Result<Poly> {
        let mut full = map.clone();
        for v in self.live_vars() {
            if let std::collections::btree_map::Entry::Vacant(e) = full.entry(v) {
                e.insert(Poly::var(&self.ctx, v)?);
            }
        }
        self.substitute(&self.ctx.clone(), &full)
    }

    /// Renames variables into another context. `rename` must be injective on
    /// the live variables.
    pub fn embed(&self, target: &Arc<Context>, rename: impl Fn(Var) -> Var) -> Result<Poly> {
        let n = self.ctx.num_vars();
        let mut slot_map = Vec::with_capacity(n);
        for s in 0..n {
            slot_map.push(target.index_of(rename(self.ctx.var_at(s))));
        }
        let mut out = Poly::zero(target);
        for (m, c) in &self.terms {
            let mut exps = vec![0u16; target.num_vars()];
            for (s, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    let t = slot_map[s].clone()?;
                    exps[t] += e;
                }
            }
            out.insert_term(Monomial::from_exponents(exps), c.clone());
        }
        Ok(out)
    }

    /// Keeps only terms satisfying `keep`.
    pub fn filter_terms(&self, keep: impl Fn(&Monomial) -> bool) -> Poly {
        Poly {
            ctx: self.ctx.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Formats a monomial as `x1^2*q1` (empty string for the unit monomial).
    pub fn format_monomial(ctx: &Context, m: &Monomial) -> String {
        let mut parts = Vec::new();
        for (s, &e) in m.0.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(ctx.var_at(s).to_string()),
                _ => parts.push(format!("{}^{}", ctx.var_at(s), e)),
            }
        }
        parts.join("*")
    }

    /// Renders the terms (descending graded-lex) with an optional prefix
    /// glued onto every term, e.g. `l^2*h^-1*`. Returns `(negative, body)`
    /// pairs so callers can join several polynomials with `+`/`-`.
    pub(crate) fn signed_terms(&self, prefix: &str) -> Vec<(bool, String)> {
        self.terms
            .iter()
            .rev()
            .map(|(m, c)| {
                let neg = c.is_negative_like();
                let mag = if neg { -c } else { c.clone() };
                let mono = Poly::format_monomial(&self.ctx, m);
                let body = match (mono.is_empty(), mag.is_one()) {
                    (true, true) => None,
                    (true, false) => Some(mag.to_string()),
                    (false, true) => Some(mono),
                    (false, false) => Some(format!("{mag}*{mono}")),
                };
                let s = match body {
                    Some(b) => format!("{prefix}{b}"),
                    None if prefix.is_empty() => "1".to_string(),
                    None => prefix.trim_end_matches('*').to_string(),
                };
                (neg, s)
            })
            .collect()
    }
}

/// Gaussian integer `(re, im)`.
type GaussInt = (BigInt, BigInt);

/// Common denominator `d` of the coefficients and the Gaussian-integer
/// numerators `d * c`.
fn integral_parts(terms: &BTreeMap<Monomial, GaussRat>) -> (BigInt, Vec<(&Monomial, GaussInt)>) {
    let mut den = BigInt::one();
    for c in terms.values() {
        let d = c.denominator();
        if !d.is_one() && !den.is_multiple_of(d) {
            den = den.lcm(d);
        }
    }
    let parts = terms
        .iter()
        .map(|(m, c)| {
            let (re, im) = c.numerators();
            let f = &den / c.denominator();
            (m, (re * &f, im * &f))
        })
        .collect();
    (den, parts)
}

/// Joins signed terms as `a + b - c`; the empty sum prints as `0`.
pub(crate) fn join_signed(terms: &[(bool, String)]) -> String {
    if terms.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (k, (neg, body)) in terms.iter().enumerate() {
        match (k, neg) {
            (0, false) => {}
            (0, true) => out.push('-'),
            (_, false) => out.push_str(" + "),
            (_, true) => out.push_str(" - "),
        }
        out.push_str(body);
    }
    out
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", join_signed(&self.signed_terms("")))
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({})", self)
    }
}

// Operator forms panic on context mismatch; use the `try_*` methods at
// boundaries where the contexts are not known to agree.

impl<'a> Add<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        self.try_add(rhs).expect("poly add")
    }
}

impl<'a> Sub<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self.try_sub(rhs).expect("poly sub")
    }
}

impl<'a> Mul<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        self.try_mul(rhs).expect("poly mul")
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            ctx: self.ctx.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}
