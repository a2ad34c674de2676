//! Truncated series in the coupling grade `l` (lambda) and in `h` (hbar).
//!
//! A [`BiSeries`] is `sum c_{m,j} l^m h^j` with polynomial coefficients.
//! It is Laurent in `h`, but the pole depth is tied to the lambda order:
//! every stored bigrade satisfies `j >= -m`.
//!
//! Truncation keeps the bigrades with `m <= M` and `j + m <= J + M`. Both
//! `m` and `j + m` are non-negative and additive under multiplication, so
//! the discarded bigrades form an ideal and every retained coefficient is
//! exact. The region contains the box `-m <= j <= J` for every `m <= M`;
//! the extra coefficients at low `m` and high `j` are what makes products
//! with pole terms exact inside the box. Comparisons and printing go
//! through [`BiSeries::project_box`].

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exactring::{join_signed, same_context, Context, GaussRat, Poly, Var};

/// Truncation orders shared by every value of one computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Truncation {
    /// Max lambda order `M`.
    pub lambda: u32,
    /// Max hbar order `J`.
    pub hbar: u32,
    /// Max momentum degree `K` of generating functions.
    pub q_degree: u32,
    /// Optional cap `D` on the total degree of any coefficient polynomial.
    pub poly_degree: Option<u32>,
}

impl Truncation {
    pub fn new(lambda: u32, hbar: u32, q_degree: u32, poly_degree: Option<u32>) -> Result<Self> {
        if q_degree < 1 {
            return Err(Error::Truncation("K must be at least 1".into()));
        }
        Ok(Truncation {
            lambda,
            hbar,
            q_degree,
            poly_degree,
        })
    }

    /// `M = J = K = 4`, no degree guard.
    pub fn ci_default() -> Self {
        Truncation {
            lambda: 4,
            hbar: 4,
            q_degree: 4,
            poly_degree: None,
        }
    }

    /// Whether the bigrade `(m, j)` is stored.
    pub fn retains(&self, m: u32, j: i32) -> bool {
        let (m, big_m, big_j) = (i64::from(m), i64::from(self.lambda), i64::from(self.hbar));
        let j = i64::from(j);
        m <= big_m && j >= -m && j + m <= big_j + big_m
    }

    /// Whether `(m, j)` lies in the box `m <= M, -m <= j <= J`.
    pub fn in_box(&self, m: u32, j: i32) -> bool {
        m <= self.lambda && i64::from(j) >= -i64::from(m) && j <= self.hbar as i32
    }

    pub fn with_lambda(self, lambda: u32) -> Self {
        Truncation { lambda, ..self }
    }

    pub fn with_hbar(self, hbar: u32) -> Self {
        Truncation { hbar, ..self }
    }
}

impl fmt::Display for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M={} J={} K={}", self.lambda, self.hbar, self.q_degree)?;
        if let Some(d) = self.poly_degree {
            write!(f, " D={d}")?;
        }
        Ok(())
    }
}

/// Bigrade key `(m, j)`: `l^m h^j`.
pub type Bigrade = (u32, i32);

#[derive(Clone, PartialEq, Eq)]
pub struct BiSeries {
    ctx: Arc<Context>,
    trunc: Truncation,
    coeffs: BTreeMap<Bigrade, Poly>,
}

fn check_bigrade(m: u32, j: i32) -> Result<()> {
    if i64::from(j) < -i64::from(m) {
        Err(Error::Bigrade { m, j })
    } else {
        Ok(())
    }
}

impl BiSeries {
    pub fn zero(ctx: &Arc<Context>, trunc: Truncation) -> Self {
        BiSeries {
            ctx: ctx.clone(),
            trunc,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn one(ctx: &Arc<Context>, trunc: Truncation) -> Self {
        Self::from_poly(Poly::one(ctx), trunc)
    }

    /// Embeds a polynomial at bigrade `(0, 0)`.
    pub fn from_poly(p: Poly, trunc: Truncation) -> Self {
        let ctx = p.ctx().clone();
        let mut s = Self::zero(&ctx, trunc);
        if !p.is_zero() {
            s.coeffs.insert((0, 0), p);
        }
        s
    }

    /// `p * l^m * h^j`. Bigrades outside the truncation give zero.
    pub fn term(m: u32, j: i32, p: Poly, trunc: Truncation) -> Result<Self> {
        check_bigrade(m, j)?;
        let ctx = p.ctx().clone();
        let mut s = Self::zero(&ctx, trunc);
        s.accumulate((m, j), p)?;
        Ok(s)
    }

    /// Builds a series from explicit coefficients, validating every bigrade.
    pub fn from_terms(
        ctx: &Arc<Context>,
        trunc: Truncation,
        terms: impl IntoIterator<Item = (Bigrade, Poly)>,
    ) -> Result<Self> {
        let mut s = Self::zero(ctx, trunc);
        for ((m, j), p) in terms {
            check_bigrade(m, j)?;
            same_context(ctx, p.ctx())?;
            s.accumulate((m, j), p)?;
        }
        Ok(s)
    }

    fn guard_degree(&self, p: &Poly) -> Result<()> {
        if let (Some(cap), Some(deg)) = (self.trunc.poly_degree, p.degree()) {
            if deg > cap {
                return Err(Error::Truncation(format!(
                    "polynomial degree {deg} exceeds the guard D={cap}"
                )));
            }
        }
        Ok(())
    }

    fn accumulate(&mut self, key: Bigrade, p: Poly) -> Result<()> {
        if p.is_zero() || !self.trunc.retains(key.0, key.1) {
            return Ok(());
        }
        let sum = match self.coeffs.remove(&key) {
            Some(old) => &old + &p,
            None => p,
        };
        if !sum.is_zero() {
            self.guard_degree(&sum)?;
            self.coeffs.insert(key, sum);
        }
        Ok(())
    }

    pub fn ctx(&self) -> &Arc<Context> {
        &self.ctx
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs.get(&(0, 0)).is_some_and(Poly::is_one)
    }

    /// Coefficient of `l^m h^j`, zero when absent.
    pub fn coeff(&self, m: u32, j: i32) -> Poly {
        self.coeffs
            .get(&(m, j))
            .cloned()
            .unwrap_or_else(|| Poly::zero(&self.ctx))
    }

    /// Nonzero coefficients in ascending `(m, j)` order.
    pub fn iter(&self) -> impl Iterator<Item = (Bigrade, &Poly)> {
        self.coeffs.iter().map(|(k, p)| (*k, p))
    }

    pub fn is_lambda_free(&self) -> bool {
        self.coeffs.keys().all(|&(m, _)| m == 0)
    }

    /// No negative powers of `h`.
    pub fn is_hbar_regular(&self) -> bool {
        self.coeffs.keys().all(|&(_, j)| j >= 0)
    }

    /// Smallest lambda order with a nonzero coefficient.
    pub fn lambda_valuation(&self) -> Option<u32> {
        self.coeffs.keys().map(|&(m, _)| m).min()
    }

    fn check_compatible(&self, other: &BiSeries) -> Result<()> {
        same_context(&self.ctx, &other.ctx)?;
        if self.trunc != other.trunc {
            return Err(Error::Truncation(format!(
                "mismatched truncations ({}) and ({})",
                self.trunc, other.trunc
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &BiSeries) -> Result<BiSeries> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (k, p) in &other.coeffs {
            out.accumulate(*k, p.clone())?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &BiSeries) -> Result<BiSeries> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (k, p) in &other.coeffs {
            out.accumulate(*k, -p)?;
        }
        Ok(out)
    }

    pub fn neg(&self) -> BiSeries {
        BiSeries {
            ctx: self.ctx.clone(),
            trunc: self.trunc,
            coeffs: self.coeffs.iter().map(|(k, p)| (*k, -p)).collect(),
        }
    }

    pub fn mul(&self, other: &BiSeries) -> Result<BiSeries> {
        self.check_compatible(other)?;
        let mut acc: BTreeMap<Bigrade, Poly> = BTreeMap::new();
        for (&(ma, ja), pa) in &self.coeffs {
            for (&(mb, jb), pb) in &other.coeffs {
                let key = (ma + mb, ja + jb);
                if !self.trunc.retains(key.0, key.1) {
                    continue;
                }
                let prod = pa * pb;
                match acc.get_mut(&key) {
                    Some(e) => *e = &*e + &prod,
                    None => {
                        acc.insert(key, prod);
                    }
                }
            }
        }
        let mut out = BiSeries::zero(&self.ctx, self.trunc);
        for (k, p) in acc {
            if !p.is_zero() {
                out.guard_degree(&p)?;
                out.coeffs.insert(k, p);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &GaussRat) -> BiSeries {
        let mut out = BiSeries::zero(&self.ctx, self.trunc);
        if c.is_zero() {
            return out;
        }
        for (k, p) in &self.coeffs {
            out.coeffs.insert(*k, p.scale(c));
        }
        out
    }

    /// Multiplies every coefficient by a polynomial.
    pub fn mul_poly(&self, q: &Poly) -> Result<BiSeries> {
        same_context(&self.ctx, q.ctx())?;
        let mut out = BiSeries::zero(&self.ctx, self.trunc);
        for (k, p) in &self.coeffs {
            out.accumulate(*k, p * q)?;
        }
        Ok(out)
    }

    /// Multiplies by `l^dm h^dj`.
    pub fn shift(&self, dm: u32, dj: i32) -> Result<BiSeries> {
        let mut out = BiSeries::zero(&self.ctx, self.trunc);
        for (&(m, j), p) in &self.coeffs {
            let (nm, nj) = (m + dm, j + dj);
            check_bigrade(nm, nj)?;
            out.accumulate((nm, nj), p.clone())?;
        }
        Ok(out)
    }

    pub fn derivative(&self, v: Var) -> Result<BiSeries> {
        let mut out = BiSeries::zero(&self.ctx, self.trunc);
        for (k, p) in &self.coeffs {
            out.accumulate(*k, p.derivative(v)?)?;
        }
        Ok(out)
    }

    /// Applies `f` to every coefficient (which must stay in the same
    /// context), keeping bigrades.
    pub fn map_coeffs(&self, f: impl Fn(&Poly) -> Result<Poly>) -> Result<BiSeries> {
        let mut out = BiSeries::zero(&self.ctx, self.trunc);
        for (k, p) in &self.coeffs {
            let q = f(p)?;
            same_context(&self.ctx, q.ctx())?;
            out.accumulate(*k, q)?;
        }
        Ok(out)
    }

    /// Keeps the coefficients whose bigrade satisfies `keep`.
    pub fn filter(&self, keep: impl Fn(u32, i32) -> bool) -> BiSeries {
        BiSeries {
            ctx: self.ctx.clone(),
            trunc: self.trunc,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(&(m, j), _)| keep(m, j))
                .map(|(k, p)| (*k, p.clone()))
                .collect(),
        }
    }

    /// Restriction to the box `-m <= j <= J`.
    pub fn project_box(&self) -> BiSeries {
        let t = self.trunc;
        self.filter(|m, j| t.in_box(m, j))
    }

    /// The `l^m` slice (still carrying its `h` powers).
    pub fn lambda_part(&self, m: u32) -> BiSeries {
        self.filter(|mm, _| mm == m)
    }

    /// Same coefficients under a different truncation (dropping what the new
    /// one does not retain).
    pub fn retruncate(&self, trunc: Truncation) -> Result<BiSeries> {
        let mut out = BiSeries::zero(&self.ctx, trunc);
        for (k, p) in &self.coeffs {
            out.accumulate(*k, p.clone())?;
        }
        Ok(out)
    }

    /// Renames variables into another context.
    pub fn embed(&self, target: &Arc<Context>, rename: impl Fn(Var) -> Var + Copy) -> Result<BiSeries> {
        let mut out = BiSeries::zero(target, self.trunc);
        for (k, p) in &self.coeffs {
            out.accumulate(*k, p.embed(target, rename)?)?;
        }
        Ok(out)
    }

    /// Substitutes series for variables; variables without an image are
    /// kept. Images share this series' context and truncation.
    pub fn substitute(&self, map: &BTreeMap<Var, BiSeries>) -> Result<BiSeries> {
        for img in map.values() {
            self.check_compatible(img)?;
        }
        let vars: Vec<Var> = map.keys().copied().collect();
        let images: Vec<&BiSeries> = map.values().collect();
        let mut powers: Vec<Vec<BiSeries>> = images
            .iter()
            .map(|s| vec![BiSeries::one(&self.ctx, self.trunc), (*s).clone()])
            .collect();
        let mut out = BiSeries::zero(&self.ctx, self.trunc);
        let mut cache: BTreeMap<Vec<u16>, BiSeries> = BTreeMap::new();
        for (&(m, j), p) in &self.coeffs {
            for (beta, rest) in p.split_by(&vars)? {
                if !cache.contains_key(&beta) {
                    let mut prod = BiSeries::one(&self.ctx, self.trunc);
                    for (i, &e) in beta.iter().enumerate() {
                        let e = usize::from(e);
                        while powers[i].len() <= e {
                            let next = powers[i].last().unwrap().mul(images[i])?;
                            powers[i].push(next);
                        }
                        if e > 0 {
                            prod = prod.mul(&powers[i][e])?;
                        }
                    }
                    cache.insert(beta.clone(), prod);
                }
                let img = cache[&beta].mul_poly(&rest)?.shift(m, j)?;
                out = out.add(&img)?;
            }
        }
        Ok(out)
    }

    /// `exp(a) = sum_{k<=M} a^k / k!`; needs lambda-valuation at least 1.
    pub fn exp(&self) -> Result<BiSeries> {
        if self.coeffs.keys().any(|&(m, _)| m == 0) {
            return Err(Error::Valuation(
                "exp needs an argument without lambda^0 terms".into(),
            ));
        }
        let mut sum = BiSeries::one(&self.ctx, self.trunc);
        let mut power = BiSeries::one(&self.ctx, self.trunc);
        for k in 1..=self.trunc.lambda {
            power = power.mul(self)?.scale(&GaussRat::ratio(1, i64::from(k)));
            if power.is_zero() {
                break;
            }
            sum = sum.add(&power)?;
        }
        Ok(sum)
    }

    /// `log(1 + X) = sum_{p<=M} (-1)^{p+1} X^p / p`; the lambda^0 part of the
    /// argument must be exactly `1`.
    pub fn log(&self) -> Result<BiSeries> {
        let base = self.lambda_part(0);
        if !base.is_one() {
            return Err(Error::Valuation(format!(
                "log needs lambda^0 part exactly 1, got {}",
                base
            )));
        }
        let x = self.sub(&BiSeries::one(&self.ctx, self.trunc))?;
        let mut sum = BiSeries::zero(&self.ctx, self.trunc);
        let mut power = BiSeries::one(&self.ctx, self.trunc);
        for p in 1..=self.trunc.lambda {
            power = power.mul(&x)?;
            if power.is_zero() {
                break;
            }
            let sign = if p % 2 == 1 { 1 } else { -1 };
            sum = sum.add(&power.scale(&GaussRat::ratio(sign, i64::from(p))))?;
        }
        Ok(sum)
    }

    /// Sets `l = 1`, returning an `h`-series (lambda-free, `0 <= j <= J`).
    ///
    /// Only meaningful when the lambda expansion terminates below `M`, so
    /// this fails if anything survives at order `M` inside the box or if a
    /// negative `h` power remains. With `M = 0` nothing can be checked and
    /// the lambda^0 slice is returned as is.
    pub fn collapse_lambda(&self) -> Result<BiSeries> {
        let t = self.trunc;
        let boxed = self.project_box();
        if let Some(((m, j), _)) = boxed.iter().find(|&((_, j), _)| j < 0) {
            return Err(Error::Composition(format!(
                "cannot set lambda = 1: negative h power at (l^{m}, h^{j})"
            )));
        }
        if t.lambda > 0 && boxed.iter().any(|((m, _), _)| m == t.lambda) {
            return Err(Error::Truncation(format!(
                "lambda expansion does not terminate below order M={}",
                t.lambda
            )));
        }
        let mut out = BiSeries::zero(&self.ctx, t);
        for ((_, j), p) in boxed.iter() {
            out.accumulate((0, j), p.clone())?;
        }
        Ok(out)
    }

    /// First bigrade (ascending) where the two series differ, with the
    /// difference there.
    pub fn first_difference(&self, other: &BiSeries) -> Option<(Bigrade, Poly)> {
        let keys: std::collections::BTreeSet<Bigrade> =
            self.coeffs.keys().chain(other.coeffs.keys()).copied().collect();
        keys.into_iter().find_map(|(m, j)| {
            let d = &self.coeff(m, j) - &other.coeff(m, j);
            (!d.is_zero()).then_some(((m, j), d))
        })
    }

    /// Sum of the coefficients (all bigrades), mainly for tests.
    pub fn total(&self) -> Poly {
        self.coeffs
            .values()
            .fold(Poly::zero(&self.ctx), |acc, p| &acc + p)
    }
}

/// `l^2*h^-1*` style prefix for a bigrade.
pub(crate) fn bigrade_prefix(m: u32, j: i32) -> String {
    let mut s = String::new();
    match m {
        0 => {}
        1 => s.push_str("l*"),
        _ => s.push_str(&format!("l^{m}*")),
    }
    match j {
        0 => {}
        1 => s.push_str("h*"),
        _ => s.push_str(&format!("h^{j}*")),
    }
    s
}

/// Canonical text: terms sorted by `(m, j)` ascending, then by monomial in
/// descending graded-lex order, e.g. `l^2*h^-1*(3/2 + 1/2i)*x1^2`.
impl fmt::Display for BiSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        for (&(m, j), p) in &self.coeffs {
            terms.extend(p.signed_terms(&bigrade_prefix(m, j)));
        }
        write!(f, "{}", join_signed(&terms))
    }
}

impl fmt::Debug for BiSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BiSeries({})", self)
    }
}
