//! Seeded oracle checks.
//!
//! Each check draws a random instance from its seed, computes the same
//! quantity in two independent ways and compares them exactly. A
//! [`Mutation`] switch corrupts one side so that the check can be shown to
//! fail when something is wrong.

mod generate;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::biseries::{BiSeries, Truncation};
use crate::error::Result;
use crate::exactring::{Context, Poly, Var};
use crate::genfun::{classical_pullback, gateaux_derivative, ClassicalGenFun, GenFun};
use crate::quantum::{
    compose, exponent_extract, linear_change, quantum_pullback, PulledBack, WaveFunction,
};
use generate::Gen;

/// Bounds on random instances.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sizes {
    /// Largest dimension of any manifold involved.
    pub max_dim: usize,
    /// Degree bound for the classical part of generating functions and for
    /// pulled-back functions.
    pub degree: usize,
    /// Rough number of monomials per random polynomial.
    pub terms: usize,
    /// Largest momentum degree used in `S+` (also capped by `K`).
    pub max_q_degree: usize,
    /// Wave functions per composition-coherence instance.
    pub waves: usize,
}

impl Default for Sizes {
    fn default() -> Self {
        Sizes {
            max_dim: 2,
            degree: 3,
            terms: 3,
            max_q_degree: 4,
            waves: 10,
        }
    }
}

/// Whether a check runs honestly or with its built-in corruption.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mutation {
    #[default]
    Off,
    On,
}

/// Outcome of one check on one seeded instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub name: &'static str,
    pub passed: bool,
    /// First discrepancy, present exactly when the check failed.
    pub witness: Option<String>,
    pub seed: u64,
}

impl Verdict {
    fn from_outcome(name: &'static str, seed: u64, outcome: Result<Option<String>>) -> Self {
        let witness = match outcome {
            Ok(w) => w,
            Err(e) => Some(format!("error: {e}")),
        };
        Verdict {
            name,
            passed: witness.is_none(),
            witness,
            seed,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {} seed={}", self.name, self.seed)?;
        if let Some(w) = &self.witness {
            write!(f, " witness={w}")?;
        }
        Ok(())
    }
}

/// The available checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Check {
    ClassicalLimit,
    OrdinaryMap,
    DerivativeHomomorphism,
    CompositionCoherence,
    Associativity,
    Covariance,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::ClassicalLimit,
        Check::OrdinaryMap,
        Check::DerivativeHomomorphism,
        Check::CompositionCoherence,
        Check::Associativity,
        Check::Covariance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::ClassicalLimit => "classical_limit",
            Check::OrdinaryMap => "ordinary_map",
            Check::DerivativeHomomorphism => "derivative_homomorphism",
            Check::CompositionCoherence => "composition_coherence",
            Check::Associativity => "associativity",
            Check::Covariance => "covariance",
        }
    }

    pub fn run(self, seed: u64, sizes: &Sizes, t: Truncation, mutation: Mutation) -> Verdict {
        let mut gen = Gen::new(seed, self as u64);
        let outcome = match self {
            Check::ClassicalLimit => classical_limit(&mut gen, sizes, t, mutation),
            Check::OrdinaryMap => ordinary_map(&mut gen, sizes, t, mutation),
            Check::DerivativeHomomorphism => derivative_homomorphism(&mut gen, sizes, t, mutation),
            Check::CompositionCoherence => composition_coherence(&mut gen, sizes, t, mutation),
            Check::Associativity => associativity(&mut gen, sizes, t, mutation),
            Check::Covariance => covariance(&mut gen, sizes, t, mutation),
        };
        Verdict::from_outcome(self.name(), seed, outcome)
    }
}

/// The `h^0` part of the exponent of the quantum pullback of
/// `e^{(i/h) g}` is `h`-regular and agrees with the classical pullback.
pub fn check_classical_limit(seed: u64, sizes: &Sizes, t: Truncation, mutation: Mutation) -> Verdict {
    Check::ClassicalLimit.run(seed, sizes, t, mutation)
}

/// `S+ = 0` gives the usual pullback, classically and quantumly.
pub fn check_ordinary_map(seed: u64, sizes: &Sizes, t: Truncation, mutation: Mutation) -> Verdict {
    Check::OrdinaryMap.run(seed, sizes, t, mutation)
}

/// `T_g(uv) = T_g(u) T_g(v)` and `T_g(1) = 1`.
pub fn check_derivative_homomorphism(seed: u64, sizes: &Sizes, t: Truncation, mutation: Mutation) -> Verdict {
    Check::DerivativeHomomorphism.run(seed, sizes, t, mutation)
}

/// Pullback along a composite equals the sequential pullback.
pub fn check_composition_coherence(seed: u64, sizes: &Sizes, t: Truncation, mutation: Mutation) -> Verdict {
    Check::CompositionCoherence.run(seed, sizes, t, mutation)
}

/// `(A B) C = A (B C)` for generating functions.
pub fn check_associativity(seed: u64, sizes: &Sizes, t: Truncation, mutation: Mutation) -> Verdict {
    Check::Associativity.run(seed, sizes, t, mutation)
}

/// Pullback is unchanged by a linear change of target coordinates applied
/// to both the generating function and the wave function.
pub fn check_covariance(seed: u64, sizes: &Sizes, t: Truncation, mutation: Mutation) -> Verdict {
    Check::Covariance.run(seed, sizes, t, mutation)
}

/// Runs every check on seeds `seed, seed + 1, ..., seed + cases - 1`, in
/// parallel. The order of the result is deterministic (check-major).
pub fn run_all(seed: u64, cases: u64, sizes: &Sizes, t: Truncation) -> Vec<Verdict> {
    let jobs: Vec<(Check, u64)> = Check::ALL
        .iter()
        .flat_map(|&c| (0..cases).map(move |k| (c, seed.wrapping_add(k))))
        .collect();
    jobs.par_iter()
        .map(|&(c, s)| c.run(s, sizes, t, Mutation::Off))
        .collect()
}

fn witness(label: &str, lhs: &BiSeries, rhs: &BiSeries) -> Option<String> {
    lhs.first_difference(rhs)
        .map(|((m, j), d)| format!("{label}l^{m}*h^{j}:{d}"))
}

/// First disagreement between two pullbacks, compared inside the box
/// `-m <= j <= J`, as `term<k>.<amplitude|phase>@l^m*h^j:<difference>`.
pub fn compare_pulled(lhs: &PulledBack, rhs: &PulledBack) -> Option<String> {
    if lhs.terms().len() != rhs.terms().len() {
        return Some(format!(
            "term-count:{}!={}",
            lhs.terms().len(),
            rhs.terms().len()
        ));
    }
    lhs.terms()
        .iter()
        .zip(rhs.terms())
        .enumerate()
        .find_map(|(k, (a, b))| {
            witness(&format!("term{k}.amplitude@"), &a.amplitude.project_box(), &b.amplitude.project_box())
                .or_else(|| witness(&format!("term{k}.phase@"), &a.phase.project_box(), &b.phase.project_box()))
        })
}

fn dims(gen: &mut Gen, sizes: &Sizes) -> usize {
    gen.range(1, sizes.max_dim.max(1))
}

fn classical_limit(gen: &mut Gen, sizes: &Sizes, t: Truncation, mutation: Mutation) -> Result<Option<String>> {
    let (n1, n2) = (dims(gen, sizes), dims(gen, sizes));
    let ctx = Context::morphism(n1, n2);
    let s = gen.genfun(&ctx, sizes, t, true)?;
    let g = gen.nonconstant_poly(&ctx, &ctx.y_vars(), sizes.degree, sizes.terms);

    let w = WaveFunction::pure_phase(BiSeries::from_poly(g.clone(), t))?;
    let f = exponent_extract(&quantum_pullback(&s, &w, t)?)?;
    if let Some(((m, j), c)) = f.iter().find(|&((_, j), _)| j < 0) {
        return Ok(Some(format!("irregular:l^{m}*h^{j}:{c}")));
    }
    let quantum = f.filter(|_, j| j == 0);

    let mut s0 = s.classical_limit();
    if mutation == Mutation::On {
        s0 = corrupt_momentum_square(&s0, &g)?;
    }
    let classical = classical_pullback(&s0, &g, t)?;
    Ok(witness("", &quantum, &classical))
}

/// Adds `q_i^2` for some `i` with `dg/dy_i (phi) != 0`, which moves the
/// `l^1` coefficient; otherwise shifts `S0` by 1.
fn corrupt_momentum_square(s0: &ClassicalGenFun, g: &Poly) -> Result<ClassicalGenFun> {
    let ctx = s0.ctx().clone();
    let dec = s0.genfun().decompose()?;
    let phi: BTreeMap<Var, Poly> = dec
        .linear
        .iter()
        .enumerate()
        .map(|(i, p)| (Var::Y(i + 1), p.coeff(0, 0)))
        .collect();
    for i in 1..=ctx.n_y() {
        if !g.derivative(Var::Y(i))?.substitute(&ctx, &phi)?.is_zero() {
            let q = Poly::var(&ctx, Var::Q(i))?;
            return ClassicalGenFun::new(s0.genfun().perturbed(0, &(&q * &q))?);
        }
    }
    ClassicalGenFun::new(s0.genfun().perturbed(0, &Poly::one(&ctx))?)
}

/// Substitutes `y -> phi` in an `h`-series by treating `h` as an extra
/// polynomial variable (the single `r` slot of a scratch context), so the
/// oracle does not go through series substitution.
fn substitute_formal_hbar(
    series: &BiSeries,
    phi: &[BiSeries],
    out_ctx: &Arc<Context>,
) -> Result<BiSeries> {
    let src = series.ctx();
    let scratch = Context::new(src.n_x(), src.n_y(), 1, false);
    let h = Poly::var(&scratch, Var::R(1))?;
    let lift = |p: &Poly| p.embed(&scratch, |v| v);
    let mut map = BTreeMap::new();
    for (i, s) in phi.iter().enumerate() {
        let mut img = Poly::zero(&scratch);
        for ((_, j), p) in s.iter() {
            img = &img + &(&lift(p)? * &h.pow(j as u32));
        }
        map.insert(Var::Y(i + 1), img);
    }
    let mut total = Poly::zero(&scratch);
    for ((_, j), p) in series.iter() {
        total = &total + &(&lift(p)?.substitute(&scratch, &map)? * &h.pow(j as u32));
    }
    let t = series.truncation();
    let mut terms = Vec::new();
    for (e, c) in total.split_by(&[Var::R(1)])? {
        let c = c.embed(out_ctx, |v| v)?;
        terms.push(((0, i32::from(e[0])), c));
    }
    BiSeries::from_terms(out_ctx, t, terms)
}

fn ordinary_map(gen: &mut Gen, sizes: &Sizes, t: Truncation, mutation: Mutation) -> Result<Option<String>> {
    let (n1, n2) = (dims(gen, sizes), dims(gen, sizes));
    let ctx = Context::morphism(n1, n2);
    let s = gen.ordinary(&ctx, sizes, t)?;
    let dec = s.decompose()?;
    let shift = if mutation == Mutation::On {
        BiSeries::zero(&ctx, t)
    } else {
        dec.constant.clone()
    };

    let g = gen.nonconstant_poly(&ctx, &ctx.y_vars(), sizes.degree, sizes.terms);
    let classical = classical_pullback(&s.classical_limit(), &g, t)?;
    let phi0: Vec<BiSeries> = dec
        .linear
        .iter()
        .map(|p| BiSeries::from_poly(p.coeff(0, 0), t))
        .collect();
    let expected = shift
        .filter(|_, j| j == 0)
        .add(&substitute_formal_hbar(&BiSeries::from_poly(g, t), &phi0, &ctx)?)?;
    if let Some(w) = witness("classical@", &classical, &expected) {
        return Ok(Some(w));
    }

    let ys = ctx.y_vars();
    let amp = gen.polynomial_amplitude(&ctx, &ys, sizes.degree, t)?;
    let phase = gen.phase(&ctx, &ys, sizes.degree, t)?;
    let w = WaveFunction::from_terms(
        &ctx,
        t,
        vec![crate::quantum::WaveTerm {
            amplitude: amp.clone(),
            phase: phase.clone(),
        }],
    )?;
    let pulled = quantum_pullback(&s, &w, t)?;
    let oracle = PulledBack::from_terms(
        &ctx,
        t,
        vec![crate::quantum::WaveTerm {
            amplitude: substitute_formal_hbar(&amp, &dec.linear, &ctx)?,
            phase: shift.add(&substitute_formal_hbar(&phase, &dec.linear, &ctx)?)?,
        }],
    )?;
    Ok(compare_pulled(&pulled, &oracle))
}

fn derivative_homomorphism(gen: &mut Gen, sizes: &Sizes, t: Truncation, mutation: Mutation) -> Result<Option<String>> {
    let (n1, n2) = (dims(gen, sizes), dims(gen, sizes));
    let ctx = Context::morphism(n1, n2);
    let s0 = gen.genfun(&ctx, sizes, t, false)?.classical_limit();
    let ys = ctx.y_vars();
    let g = gen.nonconstant_poly(&ctx, &ys, sizes.degree, sizes.terms);
    let u = gen.nonconstant_poly(&ctx, &ys, 2, 2);
    let v = gen.nonconstant_poly(&ctx, &ys, 2, 2);

    let one = gateaux_derivative(&s0, &g, &Poly::one(&ctx), t)?;
    if let Some(w) = witness("T(1)@", &one, &BiSeries::one(&ctx, t)) {
        return Ok(Some(w));
    }
    let tu = gateaux_derivative(&s0, &g, &u, t)?;
    let tv = gateaux_derivative(&s0, &g, &v, t)?;
    let lhs = match mutation {
        Mutation::Off => gateaux_derivative(&s0, &g, &(&u * &v), t)?,
        Mutation::On => tu.add(&tv)?,
    };
    Ok(witness("T(uv)@", &lhs, &tu.mul(&tv)?))
}

fn composition_coherence(gen: &mut Gen, sizes: &Sizes, t: Truncation, mutation: Mutation) -> Result<Option<String>> {
    let (n1, n2, n3) = (dims(gen, sizes), dims(gen, sizes), dims(gen, sizes));
    let (c12, c23, c13) = (
        Context::morphism(n1, n2),
        Context::morphism(n2, n3),
        Context::morphism(n1, n3),
    );
    let phi = gen.genfun(&c12, sizes, t, true)?;
    let psi = gen.affine(&c23, sizes, t)?;
    let mut composite = compose(&phi, &psi, t)?;
    if mutation == Mutation::On {
        composite = composite.perturbed(0, &Poly::one(&c13))?;
    }

    // Room for both stages of the sequential pullback to terminate.
    let wide = t.with_lambda(2 * t.q_degree + 1);
    let k = t.q_degree as usize;
    for n in 0..sizes.waves.max(1) {
        let amp = gen.polynomial_amplitude(&c23, &c23.y_vars(), k, wide)?;
        let w = WaveFunction::amplitude_only(amp.clone())?;
        let stage = quantum_pullback(&psi, &w, wide)?.into_wave_function(&c12)?;
        let sequential = quantum_pullback(&phi, &stage, wide)?.collapse_lambda()?;

        let wd = WaveFunction::amplitude_only(amp.embed(&c13, |v| v)?)?;
        let direct = quantum_pullback(&composite, &wd, wide)?.collapse_lambda()?;

        let moved = PulledBack::from_terms(
            &c13,
            wide,
            sequential
                .terms()
                .iter()
                .map(|term| {
                    Ok(crate::quantum::WaveTerm {
                        amplitude: term.amplitude.embed(&c13, |v| v)?,
                        phase: term.phase.embed(&c13, |v| v)?,
                    })
                })
                .collect::<Result<_>>()?,
        )?;
        if let Some(w) = compare_pulled(&direct, &moved) {
            return Ok(Some(format!("wave{n}.{w}")));
        }
    }
    Ok(None)
}

fn associativity(gen: &mut Gen, sizes: &Sizes, t: Truncation, mutation: Mutation) -> Result<Option<String>> {
    let n: Vec<usize> = (0..4).map(|_| dims(gen, sizes)).collect();
    let a = gen.genfun(&Context::morphism(n[0], n[1]), sizes, t, true)?;
    let b = gen.affine(&Context::morphism(n[1], n[2]), sizes, t)?;
    let c = gen.affine(&Context::morphism(n[2], n[3]), sizes, t)?;
    let left = compose(&compose(&a, &b, t)?, &c, t)?;
    let mut bc = compose(&b, &c, t)?;
    if mutation == Mutation::On {
        bc = bc.perturbed(0, &Poly::one(bc.ctx()))?;
    }
    let right = compose(&a, &bc, t)?;
    Ok(witness("", left.series(), right.series()))
}

fn covariance(gen: &mut Gen, sizes: &Sizes, t: Truncation, mutation: Mutation) -> Result<Option<String>> {
    let (n1, n2) = (dims(gen, sizes), dims(gen, sizes));
    let ctx = Context::morphism(n1, n2);
    let s = gen.genfun(&ctx, sizes, t, true)?;
    let a = gen.invertible_matrix(n2);
    let ys = ctx.y_vars();
    let amp = gen.polynomial_amplitude(&ctx, &ys, 2, t)?;
    let phase = gen.phase(&ctx, &ys, sizes.degree.min(2), t)?;
    let w = WaveFunction::from_terms(
        &ctx,
        t,
        vec![crate::quantum::WaveTerm {
            amplitude: amp,
            phase,
        }],
    )?;
    let lhs = quantum_pullback(&s, &w, t)?;
    let moved: GenFun = match mutation {
        Mutation::Off => linear_change(&s, &a)?,
        Mutation::On => s.clone(),
    };
    let rhs = quantum_pullback(&moved, &w.linear_substitution(&a)?, t)?;
    Ok(compare_pulled(&lhs, &rhs))
}
