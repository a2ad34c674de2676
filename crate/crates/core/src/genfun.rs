//! Generating functions `S(x, q)` and the classical pullback.
//!
//! A generating function of a morphism `M1 => M2` is a polynomial in the
//! source coordinates `x` and the target momenta `q`, with coefficients that
//! are power series in `h`. Splitting it by momentum degree,
//!
//! ```text
//! S = S0(x) + phi^i(x) q_i + S+(x, q)      (S+ has q-degree >= 2)
//! ```
//!
//! gives the phase, the underlying map and the "interaction" part.
//!
//! The classical pullback of `g(y)` is the value of `S0 + g(y) - y.q` at the
//! stationary point `q = dg/dy(y)`, `y = dS0/dq(x, q)`. Each occurrence of
//! `S+` carries one power of the coupling grade `l`, which makes the system
//! a contraction in the `l`-adic sense and lets a plain fixed-point loop
//! solve it order by order.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::biseries::{BiSeries, Truncation};
use crate::error::{Error, Result};
use crate::exactring::{same_context, Context, Poly, Var};

/// Quantum generating function `S_h(x, q)`.
///
/// Stored as a lambda-free [`BiSeries`] over the `x` and `q` variables with
/// `0 <= j <= J` and momentum degree at most `K`.
#[derive(Clone, PartialEq, Eq)]
pub struct GenFun {
    series: BiSeries,
}

/// The pieces of `S = S0 + phi^i q_i + S+`.
#[derive(Clone, Debug)]
pub struct Decomposition {
    /// `S0_h(x)`.
    pub constant: BiSeries,
    /// `phi^i_h(x)`, one per target coordinate.
    pub linear: Vec<BiSeries>,
    /// `S+_h(x, q)`, momentum degree `>= 2`.
    pub higher: GenFun,
}

fn allowed_vars(ctx: &Context) -> Vec<Var> {
    let mut v = ctx.x_vars();
    v.extend(ctx.q_vars());
    v
}

impl GenFun {
    /// Validates and wraps a series. Powers of `h` above `J` are dropped
    /// (that is the truncation); everything else out of shape is an error.
    pub fn new(series: BiSeries) -> Result<Self> {
        let ctx = series.ctx().clone();
        let t = series.truncation();
        if !series.is_lambda_free() {
            return Err(Error::Context(
                "generating functions cannot depend on lambda".into(),
            ));
        }
        if !series.is_hbar_regular() {
            return Err(Error::Valuation(
                "generating functions must be power series in h".into(),
            ));
        }
        let allowed = allowed_vars(&ctx);
        let q_vars = ctx.q_vars();
        for (_, p) in series.iter() {
            if !p.uses_only(&allowed) {
                return Err(Error::Context(format!(
                    "generating function coefficient {p} uses variables outside x and q"
                )));
            }
            let d = p.degree_in(&q_vars);
            if d > t.q_degree {
                return Err(Error::Truncation(format!(
                    "momentum degree {d} exceeds K={}",
                    t.q_degree
                )));
            }
        }
        let series = series.filter(|_, j| j <= t.hbar as i32);
        Ok(GenFun { series })
    }

    /// Like [`GenFun::new`] but silently drops momentum degrees above `K`.
    pub fn truncating(series: BiSeries) -> Result<Self> {
        let ctx = series.ctx().clone();
        let k = series.truncation().q_degree;
        let q_vars = ctx.q_vars();
        let slots: Vec<usize> = q_vars.iter().map(|v| ctx.index_of(*v)).collect::<Result<_>>()?;
        let cut = series.map_coeffs(|p| {
            Ok(p.filter_terms(|m| {
                slots.iter().map(|&s| u32::from(m.exponents()[s])).sum::<u32>() <= k
            }))
        })?;
        Self::new(cut)
    }

    /// An `h`-free generating function.
    pub fn from_poly(p: Poly, trunc: Truncation) -> Result<Self> {
        Self::new(BiSeries::from_poly(p, trunc))
    }

    /// `S = sum_j h^j p_j`.
    pub fn from_hbar_terms(
        ctx: &Arc<Context>,
        trunc: Truncation,
        terms: impl IntoIterator<Item = (u32, Poly)>,
    ) -> Result<Self> {
        let series = BiSeries::from_terms(
            ctx,
            trunc,
            terms.into_iter().map(|(j, p)| ((0, j as i32), p)),
        )?;
        Self::new(series)
    }

    /// The identity morphism `S = y^i q_i` written in the source variables,
    /// `x^i q_i`.
    pub fn identity(n: usize, trunc: Truncation) -> Result<Self> {
        let ctx = Context::morphism(n, n);
        let mut p = Poly::zero(&ctx);
        for i in 1..=n {
            p = &p + &(&Poly::var(&ctx, Var::X(i))? * &Poly::var(&ctx, Var::Q(i))?);
        }
        Self::from_poly(p, trunc)
    }

    /// The ordinary map `y = phi(x)`: `S = phi^i(x) q_i`.
    pub fn ordinary_map(ctx: &Arc<Context>, phi: &[Poly], trunc: Truncation) -> Result<Self> {
        if phi.len() != ctx.n_y() {
            return Err(Error::Dimension(format!(
                "map has {} components, target dimension is {}",
                phi.len(),
                ctx.n_y()
            )));
        }
        let mut p = Poly::zero(ctx);
        for (i, f) in phi.iter().enumerate() {
            p = p.try_add(&f.try_mul(&Poly::var(ctx, Var::Q(i + 1))?)?)?;
        }
        Self::from_poly(p, trunc)
    }

    pub fn ctx(&self) -> &Arc<Context> {
        self.series.ctx()
    }

    /// Source dimension `n1`.
    pub fn source_dim(&self) -> usize {
        self.ctx().n_x()
    }

    /// Target dimension `n2`.
    pub fn target_dim(&self) -> usize {
        self.ctx().n_y()
    }

    pub fn truncation(&self) -> Truncation {
        self.series.truncation()
    }

    pub fn series(&self) -> &BiSeries {
        &self.series
    }

    pub fn is_zero(&self) -> bool {
        self.series.is_zero()
    }

    pub fn is_hbar_free(&self) -> bool {
        self.series.iter().all(|((_, j), _)| j == 0)
    }

    /// Coefficients of the expansion in `q`: multi-index `alpha` (exponent
    /// of `q1, q2, ...`) to the `h`-series multiplying `q^alpha`.
    pub fn momentum_coefficients(&self) -> Result<BTreeMap<Vec<u16>, BiSeries>> {
        let ctx = self.ctx().clone();
        let t = self.truncation();
        let q_vars = ctx.q_vars();
        let mut out: BTreeMap<Vec<u16>, BiSeries> = BTreeMap::new();
        for ((m, j), p) in self.series.iter() {
            for (alpha, c) in p.split_by(&q_vars)? {
                let term = BiSeries::term(m, j, c, t)?;
                let e = out.entry(alpha).or_insert_with(|| BiSeries::zero(&ctx, t));
                *e = e.add(&term)?;
            }
        }
        Ok(out)
    }

    /// Splits `S` into `S0 + phi^i q_i + S+`.
    pub fn decompose(&self) -> Result<Decomposition> {
        let ctx = self.ctx().clone();
        let t = self.truncation();
        let n2 = ctx.n_y();
        let mut constant = BiSeries::zero(&ctx, t);
        let mut linear = vec![BiSeries::zero(&ctx, t); n2];
        let mut higher = BiSeries::zero(&ctx, t);
        for (alpha, c) in self.momentum_coefficients()? {
            let deg: u32 = alpha.iter().map(|&e| u32::from(e)).sum();
            match deg {
                0 => constant = constant.add(&c)?,
                1 => {
                    let i = alpha.iter().position(|&e| e == 1).expect("degree one");
                    linear[i] = linear[i].add(&c)?;
                }
                _ => {
                    let mono = q_monomial(&ctx, &alpha)?;
                    higher = higher.add(&c.mul_poly(&mono)?)?;
                }
            }
        }
        Ok(Decomposition {
            constant,
            linear,
            higher: GenFun { series: higher },
        })
    }

    /// Drops every positive power of `h`.
    pub fn classical_limit(&self) -> ClassicalGenFun {
        ClassicalGenFun(GenFun {
            series: self.series.filter(|_, j| j == 0),
        })
    }

    /// Whether `S+ = 0`, i.e. `S` describes an ordinary map (plus a phase).
    pub fn is_ordinary_map(&self) -> Result<bool> {
        Ok(self.decompose()?.higher.is_zero())
    }

    /// Renames variables into another context (used to place two morphisms
    /// side by side when composing). The result is not revalidated.
    pub(crate) fn embedded_series(
        &self,
        target: &Arc<Context>,
        rename: impl Fn(Var) -> Var + Copy,
    ) -> Result<BiSeries> {
        self.series.embed(target, rename)
    }

    /// Adds a polynomial (in `x` and `q`) to the `h^j` coefficient.
    pub fn perturbed(&self, j: u32, delta: &Poly) -> Result<GenFun> {
        let t = self.truncation();
        let d = BiSeries::term(0, j as i32, delta.clone(), t)?;
        GenFun::new(self.series.add(&d)?)
    }
}

impl fmt::Display for GenFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.series)
    }
}

impl fmt::Debug for GenFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GenFun({})", self.series)
    }
}

/// `q^alpha` as a polynomial.
pub(crate) fn q_monomial(ctx: &Arc<Context>, alpha: &[u16]) -> Result<Poly> {
    let powers: Vec<(Var, u16)> = alpha
        .iter()
        .enumerate()
        .map(|(i, &e)| (Var::Q(i + 1), e))
        .collect();
    Poly::monomial(ctx, crate::exactring::GaussRat::from_int(1), &powers)
}

/// Classical generating function `S0(x, q)`: a [`GenFun`] without `h`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ClassicalGenFun(GenFun);

impl ClassicalGenFun {
    pub fn new(s: GenFun) -> Result<Self> {
        if !s.is_hbar_free() {
            return Err(Error::Valuation(
                "classical generating function must be h-free".into(),
            ));
        }
        Ok(ClassicalGenFun(s))
    }

    pub fn genfun(&self) -> &GenFun {
        &self.0
    }

    pub fn ctx(&self) -> &Arc<Context> {
        self.0.ctx()
    }

    /// The polynomial `S0(x, q)` itself.
    pub fn poly(&self) -> Poly {
        self.0.series.coeff(0, 0)
    }
}

impl fmt::Display for ClassicalGenFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn subst_series(
    p: &Poly,
    trunc: Truncation,
    map: &BTreeMap<Var, BiSeries>,
) -> Result<BiSeries> {
    BiSeries::from_poly(p.clone(), trunc).substitute(map)
}

/// Pullback of `g(y)` along the classical morphism `s0`, as an `l`-series of
/// polynomials in `x` (`h`-free).
///
/// Solves `y = phi(x) + l dS+/dq(x, q)`, `q = dg/dy(y)` by fixed-point
/// iteration starting at `y = phi(x)`, and evaluates
/// `S0 + phi.q + l S+(x, q) + g(y) - y.q` there. Each sweep fixes one more
/// order of `l`; sweep `M + 1` must leave the solution unchanged.
pub fn classical_pullback(s0: &ClassicalGenFun, g: &Poly, trunc: Truncation) -> Result<BiSeries> {
    let ctx = s0.ctx().clone();
    same_context(&ctx, g.ctx())?;
    let mut allowed = ctx.y_vars();
    allowed.extend(ctx.r_vars());
    if ctx.has_eps() {
        allowed.push(Var::Eps);
    }
    if !g.uses_only(&allowed) {
        return Err(Error::Context(format!(
            "function to pull back must be in the target coordinates, got {g}"
        )));
    }
    let n2 = ctx.n_y();
    let dec = s0.genfun().decompose()?;
    let base = |s: &BiSeries| s.coeff(0, 0);
    let s_const = base(&dec.constant);
    let phi: Vec<Poly> = dec.linear.iter().map(base).collect();
    let s_plus = base(dec.higher.series());
    let ds_plus: Vec<Poly> = (1..=n2)
        .map(|i| s_plus.derivative(Var::Q(i)))
        .collect::<Result<_>>()?;
    let dg: Vec<Poly> = (1..=n2)
        .map(|i| g.derivative(Var::Y(i)))
        .collect::<Result<_>>()?;

    let phi_s: Vec<BiSeries> = phi
        .iter()
        .map(|p| BiSeries::from_poly(p.clone(), trunc))
        .collect();
    let y_map = |y: &[BiSeries]| -> BTreeMap<Var, BiSeries> {
        y.iter().enumerate().map(|(i, s)| (Var::Y(i + 1), s.clone())).collect()
    };
    let q_map = |q: &[BiSeries]| -> BTreeMap<Var, BiSeries> {
        q.iter().enumerate().map(|(i, s)| (Var::Q(i + 1), s.clone())).collect()
    };

    let mut y = phi_s.clone();
    let mut q: Vec<BiSeries> = dg
        .iter()
        .map(|d| subst_series(d, trunc, &y_map(&y)))
        .collect::<Result<_>>()?;

    // Sweep k makes y and q exact through l^k, so it can run at that order;
    // a last full-order sweep confirms the fixed point.
    let sweep = |q: &[BiSeries], t: Truncation| -> Result<(Vec<BiSeries>, Vec<BiSeries>)> {
        let qm = q_map(&q.iter().map(|s| s.retruncate(t)).collect::<Result<Vec<_>>>()?);
        let new_y: Vec<BiSeries> = (0..n2)
            .map(|i| {
                phi_s[i]
                    .retruncate(t)?
                    .add(&subst_series(&ds_plus[i], t, &qm)?.shift(1, 0)?)
            })
            .collect::<Result<_>>()?;
        let ym = y_map(&new_y);
        let new_q: Vec<BiSeries> = dg
            .iter()
            .map(|d| subst_series(d, t, &ym))
            .collect::<Result<_>>()?;
        Ok((new_y, new_q))
    };
    for k in 1..=trunc.lambda {
        (y, q) = sweep(&q, trunc.with_lambda(k))?;
    }
    let y = y.iter().map(|s| s.retruncate(trunc)).collect::<Result<Vec<_>>>()?;
    let q = q.iter().map(|s| s.retruncate(trunc)).collect::<Result<Vec<_>>>()?;
    let (check_y, check_q) = sweep(&q, trunc)?;
    if check_y != y || check_q != q {
        return Err(Error::Consistency(format!(
            "stationary-point iteration still moving after {} sweeps",
            trunc.lambda + 1
        )));
    }

    let qm = q_map(&q);
    let mut f = BiSeries::from_poly(s_const, trunc);
    for i in 0..n2 {
        f = f.add(&q[i].mul_poly(&phi[i])?)?;
        f = f.sub(&y[i].mul(&q[i])?)?;
    }
    f = f.add(&subst_series(&s_plus, trunc, &qm)?.shift(1, 0)?)?;
    f = f.add(&subst_series(g, trunc, &y_map(&y))?)?;
    Ok(f)
}

/// Derivative of the classical pullback at `g` in the direction `u`:
/// `T_g(u) = d/de Phi*(g + e u)` at `e = 0`.
///
/// Runs [`classical_pullback`] over the ring extended by a nilpotent `eps`
/// and reads off the `eps` coefficient.
pub fn gateaux_derivative(
    s0: &ClassicalGenFun,
    g: &Poly,
    u: &Poly,
    trunc: Truncation,
) -> Result<BiSeries> {
    let ctx = s0.ctx().clone();
    same_context(&ctx, g.ctx())?;
    same_context(&ctx, u.ctx())?;
    if ctx.has_eps() {
        return Err(Error::Context(
            "directional derivative needs a context without eps".into(),
        ));
    }
    let ext = ctx.with_eps();
    let id = |v: Var| v;
    let s_ext = ClassicalGenFun(GenFun::new(s0.genfun().series().embed(&ext, id)?)?);
    let eps = Poly::var(&ext, Var::Eps)?;
    let g_ext = &g.embed(&ext, id)? + &(&eps * &u.embed(&ext, id)?);
    let f = classical_pullback(&s_ext, &g_ext, trunc)?;
    let mut out = BiSeries::zero(&ctx, trunc);
    for ((m, j), p) in f.iter() {
        let d = p.coefficient_of(Var::Eps, 1)?;
        let back = d.embed(&ctx, id)?;
        out = out.add(&BiSeries::term(m, j, back, trunc)?)?;
    }
    Ok(out)
}
