//! Oscillatory wave functions and the quantum pullback.
//!
//! A wave function is a finite sum of terms `A e^{(i/h) b}`. The quantum
//! pullback along `S = S0 + phi^i q_i + S+` acts on each term as
//!
//! ```text
//! e^{(i/h) S0(x)} [ exp( l (i/h) S+(x, (h/i) d/dy) ) A e^{(i/h) b} ]  at y = phi(x)
//! ```
//!
//! The differential operator is applied by amplitude transport: with the
//! phase held fixed, `(h/i) d/dy_i` acts on the amplitude as
//! `E_i(A) = (h/i) dA/dy_i + A db/dy_i`. A momentum monomial `q^alpha` of
//! `S+` with coefficient `C` contributes `l (i/h) C E^alpha(A)`, which lowers
//! the power of `h` by at most one per power of `l`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::biseries::{BiSeries, Truncation};
use crate::error::{Error, Result};
use crate::exactring::{same_context, Context, GaussRat, Matrix, Poly, Var};
use crate::genfun::GenFun;

/// One term `amplitude * e^{(i/h) phase}`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WaveTerm {
    pub amplitude: BiSeries,
    pub phase: BiSeries,
}

impl WaveTerm {
    fn retruncate(&self, t: Truncation) -> Result<WaveTerm> {
        Ok(WaveTerm {
            amplitude: self.amplitude.retruncate(t)?,
            phase: self.phase.retruncate(t)?,
        })
    }
}

impl fmt::Display for WaveTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) * exp(i/h * ({}))", self.amplitude, self.phase)
    }
}

fn validate_term(ctx: &Arc<Context>, term: &WaveTerm, allowed: &[Var]) -> Result<()> {
    same_context(ctx, term.amplitude.ctx())?;
    same_context(ctx, term.phase.ctx())?;
    if term.amplitude.truncation() != term.phase.truncation() {
        return Err(Error::Truncation(
            "amplitude and phase use different truncations".into(),
        ));
    }
    if !term.phase.is_lambda_free() || !term.phase.is_hbar_regular() {
        return Err(Error::Valuation(format!(
            "phase must be a power series in h without lambda, got {}",
            term.phase
        )));
    }
    for (_, p) in term.amplitude.iter().chain(term.phase.iter()) {
        if !p.uses_only(allowed) {
            return Err(Error::Context(format!(
                "wave function coefficient {p} uses variables outside {}",
                allowed
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
    }
    Ok(())
}

macro_rules! wave_container {
    ($name:ident, $allowed:expr, $doc:literal) => {
        #[doc = $doc]
        #[derive(Clone, PartialEq, Eq, Debug)]
        pub struct $name {
            ctx: Arc<Context>,
            trunc: Truncation,
            terms: Vec<WaveTerm>,
        }

        impl $name {
            /// The zero function (no terms).
            pub fn zero(ctx: &Arc<Context>, trunc: Truncation) -> Self {
                $name {
                    ctx: ctx.clone(),
                    trunc,
                    terms: Vec::new(),
                }
            }

            pub fn from_terms(
                ctx: &Arc<Context>,
                trunc: Truncation,
                terms: Vec<WaveTerm>,
            ) -> Result<Self> {
                let mut w = Self::zero(ctx, trunc);
                for t in terms {
                    w.push(t)?;
                }
                Ok(w)
            }

            pub fn push(&mut self, term: WaveTerm) -> Result<()> {
                let allowed: fn(&Context) -> Vec<Var> = $allowed;
                validate_term(&self.ctx, &term, &allowed(&self.ctx))?;
                if term.amplitude.truncation() != self.trunc {
                    return Err(Error::Truncation(format!(
                        "term truncation ({}) differs from ({})",
                        term.amplitude.truncation(),
                        self.trunc
                    )));
                }
                self.terms.push(term);
                Ok(())
            }

            pub fn ctx(&self) -> &Arc<Context> {
                &self.ctx
            }

            pub fn truncation(&self) -> Truncation {
                self.trunc
            }

            pub fn terms(&self) -> &[WaveTerm] {
                &self.terms
            }

            pub fn is_zero(&self) -> bool {
                self.terms.is_empty()
            }

            /// Formal sum: the term lists are concatenated.
            pub fn add(&self, other: &Self) -> Result<Self> {
                same_context(&self.ctx, &other.ctx)?;
                let mut out = self.clone();
                for t in &other.terms {
                    out.push(t.clone())?;
                }
                Ok(out)
            }

            /// Multiplies every amplitude by a constant `h`-series (or any
            /// series free of the function's variables).
            pub fn scale(&self, c: &BiSeries) -> Result<Self> {
                let mut out = Self::zero(&self.ctx, self.trunc);
                for t in &self.terms {
                    out.push(WaveTerm {
                        amplitude: t.amplitude.mul(c)?,
                        phase: t.phase.clone(),
                    })?;
                }
                Ok(out)
            }

            pub fn retruncate(&self, trunc: Truncation) -> Result<Self> {
                Ok($name {
                    ctx: self.ctx.clone(),
                    trunc,
                    terms: self
                        .terms
                        .iter()
                        .map(|t| t.retruncate(trunc))
                        .collect::<Result<_>>()?,
                })
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                if self.terms.is_empty() {
                    return write!(f, "0");
                }
                let parts: Vec<String> = self.terms.iter().map(|t| t.to_string()).collect();
                write!(f, "{}", parts.join(" + "))
            }
        }
    };
}

fn target_vars(ctx: &Context) -> Vec<Var> {
    let mut v = ctx.y_vars();
    v.extend(ctx.r_vars());
    v
}

fn source_vars(ctx: &Context) -> Vec<Var> {
    let mut v = ctx.x_vars();
    v.extend(ctx.r_vars());
    v
}

wave_container!(
    WaveFunction,
    target_vars,
    "Oscillatory wave function on the target manifold: `sum A e^{(i/h) b}` in the `y` (and `r`) variables."
);

wave_container!(
    PulledBack,
    source_vars,
    "Result of a quantum pullback: the same shape as [`WaveFunction`], in the `x` (and `r`) variables."
);

impl WaveFunction {
    /// `e^{(i/h) g}`.
    pub fn pure_phase(phase: BiSeries) -> Result<Self> {
        let ctx = phase.ctx().clone();
        let t = phase.truncation();
        Self::from_terms(
            &ctx,
            t,
            vec![WaveTerm {
                amplitude: BiSeries::one(&ctx, t),
                phase,
            }],
        )
    }

    /// A single term with zero phase.
    pub fn amplitude_only(amplitude: BiSeries) -> Result<Self> {
        let ctx = amplitude.ctx().clone();
        let t = amplitude.truncation();
        Self::from_terms(
            &ctx,
            t,
            vec![WaveTerm {
                amplitude,
                phase: BiSeries::zero(&ctx, t),
            }],
        )
    }

    /// `w(A y)`: substitutes `y_i -> sum_j A_ij y_j` in every term.
    pub fn linear_substitution(&self, a: &Matrix) -> Result<Self> {
        let n = self.ctx.n_y();
        if a.size() != n {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, wave function lives in dimension {n}",
                a.size(),
                a.size()
            )));
        }
        let mut map = BTreeMap::new();
        for i in 0..n {
            let mut img = Poly::zero(&self.ctx);
            for j in 0..n {
                img = &img + &Poly::var(&self.ctx, Var::Y(j + 1))?.scale(a.get(i, j));
            }
            map.insert(Var::Y(i + 1), BiSeries::from_poly(img, self.trunc));
        }
        let mut out = Self::zero(&self.ctx, self.trunc);
        for t in &self.terms {
            out.push(WaveTerm {
                amplitude: t.amplitude.substitute(&map)?,
                phase: t.phase.substitute(&map)?,
            })?;
        }
        Ok(out)
    }
}

impl PulledBack {
    /// Reinterprets the result as a wave function on the source manifold of
    /// the next morphism: `x_i` becomes `y_i` in `target`.
    pub fn into_wave_function(&self, target: &Arc<Context>) -> Result<WaveFunction> {
        if target.n_y() != self.ctx.n_x() || target.n_r() != self.ctx.n_r() {
            return Err(Error::Dimension(format!(
                "cannot view a function on {} as one on the target of {}",
                self.ctx, target
            )));
        }
        let rename = |v: Var| match v {
            Var::X(i) => Var::Y(i),
            other => other,
        };
        let mut out = WaveFunction::zero(target, self.trunc);
        for t in &self.terms {
            out.push(WaveTerm {
                amplitude: t.amplitude.embed(target, rename)?,
                phase: t.phase.embed(target, rename)?,
            })?;
        }
        Ok(out)
    }

    /// Sets `l = 1` in every amplitude; see [`BiSeries::collapse_lambda`].
    pub fn collapse_lambda(&self) -> Result<PulledBack> {
        let mut out = PulledBack::zero(&self.ctx, self.trunc);
        for t in &self.terms {
            out.push(WaveTerm {
                amplitude: t.amplitude.collapse_lambda()?,
                phase: t.phase.project_box(),
            })?;
        }
        Ok(out)
    }

    /// Restricts every amplitude and phase to the box `-m <= j <= J`.
    pub fn project_box(&self) -> PulledBack {
        PulledBack {
            ctx: self.ctx.clone(),
            trunc: self.trunc,
            terms: self
                .terms
                .iter()
                .map(|t| WaveTerm {
                    amplitude: t.amplitude.project_box(),
                    phase: t.phase.project_box(),
                })
                .collect(),
        }
    }
}

/// `S+(x, (h/i) d/dy)` as a list of `(alpha, C_alpha)` with
/// `S+ = sum C_alpha q^alpha`.
struct MomentumOperator {
    terms: Vec<(Vec<u16>, BiSeries)>,
}

impl MomentumOperator {
    fn new(higher: &GenFun, trunc: Truncation) -> Result<Self> {
        let terms = higher
            .momentum_coefficients()?
            .into_iter()
            .map(|(a, c)| Ok((a, c.retruncate(trunc)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(MomentumOperator { terms })
    }

    fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `l (i/h) sum_alpha C_alpha E^alpha(A)` for the fixed phase gradient.
    fn apply(&self, amp: &BiSeries, grad_phase: &[BiSeries]) -> Result<BiSeries> {
        let mut memo: BTreeMap<Vec<u16>, BiSeries> = BTreeMap::new();
        let mut acc = BiSeries::zero(amp.ctx(), amp.truncation());
        for (alpha, c) in &self.terms {
            let e = transport_power(alpha, amp, grad_phase, &mut memo)?;
            acc = acc.add(&c.mul(&e)?)?;
        }
        Ok(acc.shift(1, -1)?.scale(&GaussRat::i()))
    }
}

/// `E^alpha(A)` with memoisation over multi-indices.
fn transport_power(
    alpha: &[u16],
    amp: &BiSeries,
    grad_phase: &[BiSeries],
    memo: &mut BTreeMap<Vec<u16>, BiSeries>,
) -> Result<BiSeries> {
    if let Some(v) = memo.get(alpha) {
        return Ok(v.clone());
    }
    let Some(k) = alpha.iter().position(|&e| e > 0) else {
        return Ok(amp.clone());
    };
    let mut lower = alpha.to_vec();
    lower[k] -= 1;
    let inner = transport_power(&lower, amp, grad_phase, memo)?;
    let out = transport(&inner, k, grad_phase)?;
    memo.insert(alpha.to_vec(), out.clone());
    Ok(out)
}

/// `E_k(A) = (h/i) dA/dy_k + A db/dy_k`.
fn transport(a: &BiSeries, k: usize, grad_phase: &[BiSeries]) -> Result<BiSeries> {
    let d = a
        .derivative(Var::Y(k + 1))?
        .shift(0, 1)?
        .scale(&-GaussRat::i());
    d.add(&a.mul(&grad_phase[k])?)
}

/// Applies `exp(l (i/h) S+(x, (h/i) d/dy))` to `amp e^{(i/h) phase}`,
/// returning the new amplitude (the phase is unchanged).
fn apply_exponential(
    op: &MomentumOperator,
    amp: &BiSeries,
    phase: &BiSeries,
    n_y: usize,
    prune: &dyn Fn(BiSeries) -> Result<BiSeries>,
) -> Result<BiSeries> {
    if op.is_empty() {
        return Ok(amp.clone());
    }
    let grad: Vec<BiSeries> = (1..=n_y)
        .map(|i| phase.derivative(Var::Y(i)))
        .collect::<Result<_>>()?;
    let mut total = amp.clone();
    let mut term = amp.clone();
    for k in 1..=amp.truncation().lambda {
        term = prune(
            op.apply(&term, &grad)?
                .scale(&GaussRat::ratio(1, i64::from(k))),
        )?;
        if term.is_zero() {
            break;
        }
        total = total.add(&term)?;
    }
    Ok(total)
}

/// Quantum pullback of `w` along the morphism with generating function `s`.
///
/// Both inputs are re-expressed under `trunc`, which must share their
/// context. The result is linear in `w` (term by term).
pub fn quantum_pullback(s: &GenFun, w: &WaveFunction, trunc: Truncation) -> Result<PulledBack> {
    pullback_pruned(s, w, trunc, &|b| Ok(b))
}

/// [`quantum_pullback`] with `prune` applied after every order of the
/// operator expansion. `prune` must commute with the expansion (drop an
/// ideal of terms that no later step can bring back).
fn pullback_pruned(
    s: &GenFun,
    w: &WaveFunction,
    trunc: Truncation,
    prune: &dyn Fn(BiSeries) -> Result<BiSeries>,
) -> Result<PulledBack> {
    let ctx = s.ctx().clone();
    if ctx.n_y() != w.ctx().n_y() || ctx.n_x() != w.ctx().n_x() || ctx.n_r() != w.ctx().n_r() {
        return Err(Error::Dimension(format!(
            "morphism lives in {}, wave function in {}",
            ctx,
            w.ctx()
        )));
    }
    same_context(&ctx, w.ctx())?;
    let w = w.retruncate(trunc)?;
    let dec = s.decompose()?;
    let op = MomentumOperator::new(&dec.higher, trunc)?;
    let phi: BTreeMap<Var, BiSeries> = dec
        .linear
        .iter()
        .enumerate()
        .map(|(i, f)| Ok((Var::Y(i + 1), f.retruncate(trunc)?)))
        .collect::<Result<_>>()?;
    let s_const = dec.constant.retruncate(trunc)?;

    let mut out = PulledBack::zero(&ctx, trunc);
    for term in w.terms() {
        let amp = apply_exponential(&op, &term.amplitude, &term.phase, ctx.n_y(), prune)?;
        out.push(WaveTerm {
            amplitude: amp.substitute(&phi)?,
            phase: s_const.add(&term.phase.substitute(&phi)?)?,
        })?;
    }
    Ok(out)
}

/// Rewrites a single-term result `A e^{(i/h) b}` with `A = 1 + O(l)` as
/// `e^{(i/h) f}`, returning `f = b + (h/i) log A`.
pub fn exponent_extract(p: &PulledBack) -> Result<BiSeries> {
    let [term] = p.terms() else {
        return Err(Error::Valuation(format!(
            "exponent extraction needs exactly one term, got {}",
            p.terms().len()
        )));
    };
    let log = term.amplitude.log()?;
    term.phase
        .add(&log.shift(0, 1)?.scale(&-GaussRat::i()))
}

/// Generating function of the composite `M1 => M3` of `s_phi: M1 => M2`
/// and `s_psi: M2 => M3`.
///
/// Pulls `e^{(i/h) S_psi(y, r)}` back along `s_phi`, with the momenta `r`
/// kept as formal parameters, and reads off the exponent. The exponent must
/// be free of negative `h` powers; it is truncated to momentum degree `K`
/// and `h` order `J`, and then `l` is set to 1, which requires the `l`
/// expansion to stop below order `M` (checked).
pub fn compose(s_phi: &GenFun, s_psi: &GenFun, trunc: Truncation) -> Result<GenFun> {
    let (n1, n2) = (s_phi.source_dim(), s_phi.target_dim());
    if s_psi.source_dim() != n2 {
        return Err(Error::Dimension(format!(
            "first morphism targets dimension {n2}, second starts from {}",
            s_psi.source_dim()
        )));
    }
    let n3 = s_psi.target_dim();
    let work = Context::new(n1, n2, n3, false);
    let phi_w = GenFun::new(s_phi.embedded_series(&work, |v| v)?.retruncate(trunc)?)?;
    let phase = s_psi
        .embedded_series(&work, |v| match v {
            Var::X(i) => Var::Y(i),
            Var::Q(i) => Var::R(i),
            other => other,
        })?
        .retruncate(trunc)?;
    let w = WaveFunction::pure_phase(phase)?;

    // The momenta r are never differentiated, so their degree only grows.
    let k = trunc.q_degree;
    let r_slots: Vec<usize> = work
        .r_vars()
        .iter()
        .map(|v| work.index_of(*v))
        .collect::<Result<_>>()?;
    let cut = |b: BiSeries| {
        b.map_coeffs(|p| {
            Ok(p.filter_terms(|m| {
                r_slots.iter().map(|&s| u32::from(m.exponents()[s])).sum::<u32>() <= k
            }))
        })
    };
    let pulled = pullback_pruned(&phi_w, &w, trunc, &cut)?;
    let f = cut(exponent_extract(&pulled)?)?;

    if let Some(((m, j), p)) = f.iter().find(|&((_, j), _)| j < 0) {
        return Err(Error::Composition(format!(
            "composed exponent has a negative h power at (l^{m}, h^{j}): {p}"
        )));
    }

    let interacting = !phi_w.is_ordinary_map()?;
    if interacting && trunc.lambda == 0 {
        return Err(Error::Truncation(
            "composition with a non-trivial S+ needs M >= 1".into(),
        ));
    }
    let collapsed = f.collapse_lambda()?;

    let out_ctx = Context::morphism(n1, n3);
    let result = collapsed.embed(&out_ctx, |v| match v {
        Var::R(i) => Var::Q(i),
        other => other,
    })?;
    GenFun::new(result)
}

/// Generating function in the coordinates `y = A y'`:
/// `S'(x, q') = S(x, (A^-1)^T q')`.
pub fn linear_change(s: &GenFun, a: &Matrix) -> Result<GenFun> {
    let ctx = s.ctx().clone();
    let n = ctx.n_y();
    if a.size() != n {
        return Err(Error::Dimension(format!(
            "matrix is {}x{}, target dimension is {n}",
            a.size(),
            a.size()
        )));
    }
    let b = a.inverse()?.transpose();
    let mut map = BTreeMap::new();
    for i in 0..n {
        let mut img = Poly::zero(&ctx);
        for j in 0..n {
            img = &img + &Poly::var(&ctx, Var::Q(j + 1))?.scale(b.get(i, j));
        }
        map.insert(Var::Q(i + 1), img);
    }
    GenFun::new(s.series().map_coeffs(|p| p.substitute_partial(&map))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(m: u32) -> Truncation {
        Truncation::new(m, 4, 4, None).unwrap()
    }

    fn var(ctx: &Arc<Context>, v: Var) -> Poly {
        Poly::var(ctx, v).unwrap()
    }

    fn half() -> GaussRat {
        GaussRat::ratio(1, 2)
    }

    fn quadratic(ctx: &Arc<Context>, tr: Truncation) -> GenFun {
        let x = var(ctx, Var::X(1));
        let q = var(ctx, Var::Q(1));
        GenFun::from_poly(&(&x * &q) + &(&q * &q).scale(&half()), tr).unwrap()
    }

    #[test]
    fn empty_operator_is_substitution() {
        let ctx = Context::morphism(1, 1);
        let tr = t(3);
        let x = var(&ctx, Var::X(1));
        let y = var(&ctx, Var::Y(1));
        let s = GenFun::from_poly(&(&x * &x) + &(&(&x + &Poly::one(&ctx)) * &var(&ctx, Var::Q(1))), tr)
            .unwrap();
        let w = WaveFunction::from_terms(
            &ctx,
            tr,
            vec![WaveTerm {
                amplitude: BiSeries::from_poly(&y * &y, tr),
                phase: BiSeries::from_poly(y.clone(), tr),
            }],
        )
        .unwrap();
        let p = quantum_pullback(&s, &w, tr).unwrap();
        let term = &p.terms()[0];
        assert_eq!(term.amplitude.to_string(), "x1^2 + 2*x1 + 1");
        assert_eq!(term.phase.to_string(), "x1^2 + x1 + 1");
    }

    #[test]
    fn quadratic_one_step() {
        let ctx = Context::morphism(1, 1);
        let tr = t(1);
        let y = var(&ctx, Var::Y(1));
        let w = WaveFunction::pure_phase(BiSeries::from_poly((&y * &y).scale(&half()), tr)).unwrap();
        let p = quantum_pullback(&quadratic(&ctx, tr), &w, tr).unwrap();
        let term = &p.terms()[0];
        assert_eq!(term.phase.to_string(), "1/2*x1^2");
        // 1 + l ((i/h) x^2/2 + 1/2)
        assert_eq!(term.amplitude.to_string(), "1 + l*h^-1*1/2i*x1^2 + l*1/2");

        let f = exponent_extract(&p).unwrap();
        assert_eq!(f.to_string(), "1/2*x1^2 + l*1/2*x1^2 - l*h*1/2i");
    }

    #[test]
    fn second_derivatives_kill_linear_amplitude() {
        let ctx = Context::morphism(1, 1);
        let tr = t(3);
        let x = var(&ctx, Var::X(1));
        let q = var(&ctx, Var::Q(1));
        let s = GenFun::from_poly(&(&(&x * &x) * &q) + &(&q * &q).scale(&half()), tr).unwrap();
        let w = WaveFunction::amplitude_only(BiSeries::from_poly(var(&ctx, Var::Y(1)), tr)).unwrap();
        let p = quantum_pullback(&s, &w, tr).unwrap();
        assert_eq!(p.terms()[0].amplitude.to_string(), "x1^2");
        assert!(p.terms()[0].phase.is_zero());
    }

    #[test]
    fn extract_examples() {
        let ctx = Context::morphism(1, 1);
        let tr = t(2);
        let x = var(&ctx, Var::X(1));
        let one = PulledBack::from_terms(
            &ctx,
            tr,
            vec![WaveTerm {
                amplitude: BiSeries::one(&ctx, tr),
                phase: BiSeries::from_poly(x.clone(), tr),
            }],
        )
        .unwrap();
        assert_eq!(exponent_extract(&one).unwrap().to_string(), "x1");

        let c = BiSeries::term(1, 0, x.clone(), tr).unwrap();
        let p = PulledBack::from_terms(
            &ctx,
            tr,
            vec![WaveTerm {
                amplitude: c.exp().unwrap(),
                phase: BiSeries::zero(&ctx, tr),
            }],
        )
        .unwrap();
        let f = exponent_extract(&p).unwrap();
        assert_eq!(f, BiSeries::term(1, 1, x.scale(&-GaussRat::i()), tr).unwrap());

        let two = PulledBack::from_terms(
            &ctx,
            tr,
            vec![
                WaveTerm {
                    amplitude: BiSeries::one(&ctx, tr),
                    phase: BiSeries::zero(&ctx, tr),
                };
                2
            ],
        )
        .unwrap();
        assert!(matches!(exponent_extract(&two), Err(Error::Valuation(_))));

        let bad = PulledBack::from_terms(
            &ctx,
            tr,
            vec![WaveTerm {
                amplitude: BiSeries::from_poly(Poly::constant(&ctx, GaussRat::from_int(3)), tr),
                phase: BiSeries::zero(&ctx, tr),
            }],
        )
        .unwrap();
        assert!(matches!(exponent_extract(&bad), Err(Error::Valuation(_))));
    }

    #[test]
    fn plane_wave_eigenproperty() {
        // Applying the operator to e^{(i/h) y.r} multiplies by
        // e^{l (i/h) S+(x, r)}.
        let work = Context::new(1, 2, 2, false);
        let tr = t(3);
        let x = var(&work, Var::X(1));
        let q1 = var(&work, Var::Q(1));
        let q2 = var(&work, Var::Q(2));
        let s_plus = &(&(&q1 * &q2).scale(&GaussRat::from_int(3)) * &x) + &q2.pow(3);
        let s = GenFun::from_poly(
            &(&(&x * &q1) + &(&x * &x).scale(&GaussRat::from_int(2)).try_mul(&q2).unwrap()) + &s_plus,
            tr,
        )
        .unwrap();
        let yr = &(&var(&work, Var::Y(1)) * &var(&work, Var::R(1)))
            + &(&var(&work, Var::Y(2)) * &var(&work, Var::R(2)));
        let w = WaveFunction::pure_phase(BiSeries::from_poly(yr, tr)).unwrap();
        let dec = s.decompose().unwrap();
        let op = MomentumOperator::new(&dec.higher, tr).unwrap();
        let amp = apply_exponential(&op, &BiSeries::one(&work, tr), &w.terms()[0].phase, 2, &|b| Ok(b)).unwrap();

        let s_plus_r = s_plus
            .embed(&work, |v| match v {
                Var::Q(i) => Var::R(i),
                o => o,
            })
            .unwrap();
        let expected = BiSeries::term(1, -1, s_plus_r.scale(&GaussRat::i()), tr)
            .unwrap()
            .exp()
            .unwrap();
        assert_eq!(amp, expected);
    }

    #[test]
    fn compose_with_identity() {
        let ctx = Context::morphism(1, 1);
        let tr = t(3);
        let s = quadratic(&ctx, tr);
        let id = GenFun::identity(1, tr).unwrap();
        assert_eq!(compose(&s, &id, tr).unwrap(), s);
        assert_eq!(compose(&id, &s, tr).unwrap(), s);
    }

    #[test]
    fn compose_ordinary_maps() {
        let tr = t(2);
        let c12 = Context::morphism(1, 2);
        let c21 = Context::morphism(2, 1);
        let x = var(&c12, Var::X(1));
        let phi = GenFun::ordinary_map(&c12, &[&x * &x, &x + &Poly::one(&c12)], tr).unwrap();
        let (a, b) = (var(&c21, Var::X(1)), var(&c21, Var::X(2)));
        let psi = GenFun::ordinary_map(&c21, &[&a * &b], tr).unwrap();
        let c = compose(&phi, &psi, tr).unwrap();
        // (psi o phi)(x) = x^2 (x + 1)
        assert_eq!(c.to_string(), "x1^3*q1 + x1^2*q1");
    }

    #[test]
    fn compose_dimension_mismatch() {
        let tr = t(2);
        let a = GenFun::identity(1, tr).unwrap();
        let b = GenFun::identity(2, tr).unwrap();
        assert!(matches!(compose(&a, &b, tr), Err(Error::Dimension(_))));
    }

    #[test]
    fn compose_detects_non_terminating_expansion() {
        // A quadratic S0 on the right keeps producing lambda orders.
        let tr = t(3);
        let ctx = Context::morphism(1, 1);
        let x = var(&ctx, Var::X(1));
        let psi = GenFun::from_poly(&(&x * &x) + &(&x * &var(&ctx, Var::Q(1))), tr).unwrap();
        assert!(matches!(
            compose(&quadratic(&ctx, tr), &psi, tr),
            Err(Error::Truncation(_))
        ));
    }

    #[test]
    fn linear_change_examples() {
        let ctx = Context::morphism(1, 1);
        let tr = t(2);
        let s = quadratic(&ctx, tr);
        assert_eq!(linear_change(&s, &Matrix::identity(1)).unwrap(), s);
        let a = Matrix::from_rows(vec![vec![GaussRat::from_int(2)]]).unwrap();
        assert_eq!(
            linear_change(&s, &a).unwrap().to_string(),
            "1/2*x1*q1 + 1/8*q1^2"
        );
        let sing = Matrix::from_rows(vec![vec![GaussRat::from_int(0)]]).unwrap();
        assert!(matches!(linear_change(&s, &sing), Err(Error::Matrix(_))));
    }

    #[test]
    fn linear_change_diagonal_decoupled() {
        let ctx = Context::morphism(2, 2);
        let tr = t(2);
        let q1 = var(&ctx, Var::Q(1));
        let q2 = var(&ctx, Var::Q(2));
        let s = GenFun::from_poly(&q1.pow(2) + &q2.pow(3), tr).unwrap();
        let a = Matrix::from_rows(vec![
            vec![GaussRat::from_int(2), GaussRat::from_int(0)],
            vec![GaussRat::from_int(0), GaussRat::from_int(3)],
        ])
        .unwrap();
        let c = linear_change(&s, &a).unwrap();
        let expect = &q1.pow(2).scale(&GaussRat::ratio(1, 4)) + &q2.pow(3).scale(&GaussRat::ratio(1, 27));
        assert_eq!(c.series().coeff(0, 0), expect);
    }

    #[test]
    fn covariance_on_quadratic() {
        let ctx = Context::morphism(1, 1);
        let tr = t(3);
        let s = quadratic(&ctx, tr);
        let y = var(&ctx, Var::Y(1));
        let w = WaveFunction::pure_phase(BiSeries::from_poly(y.pow(3), tr)).unwrap();
        let a = Matrix::from_rows(vec![vec![GaussRat::ratio(-3, 2)]]).unwrap();
        let lhs = quantum_pullback(&s, &w, tr).unwrap();
        let rhs = quantum_pullback(
            &linear_change(&s, &a).unwrap(),
            &w.linear_substitution(&a).unwrap(),
            tr,
        )
        .unwrap();
        assert_eq!(lhs, rhs);
    }
}
