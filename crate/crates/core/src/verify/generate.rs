//! Seeded random instances with small coefficients.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Sizes;
use crate::biseries::{BiSeries, Truncation};
use crate::exactring::{Context, GaussRat, Matrix, Poly, Var};
use crate::genfun::GenFun;
use crate::Result;

pub(crate) struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    pub(crate) fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Gen { rng }
    }

    pub(crate) fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    pub(crate) fn range(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.gen_range(lo..=hi)
    }

    pub(crate) fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    /// Nonzero `a/b` with `|a|, b <= 9`.
    pub(crate) fn rational(&mut self) -> GaussRat {
        let mut num = 0;
        while num == 0 {
            num = self.rng.gen_range(-9..=9);
        }
        GaussRat::ratio(num, self.rng.gen_range(1..=9))
    }

    /// Nonzero Gaussian rational, real three times out of four.
    pub(crate) fn coefficient(&mut self) -> GaussRat {
        let re = self.rational();
        if self.chance(0.25) {
            re + self.rational().mul_i()
        } else {
            re
        }
    }

    fn exponents(&mut self, nvars: usize, degree: usize) -> Vec<u16> {
        let mut e = vec![0u16; nvars];
        for _ in 0..degree {
            e[self.below(nvars)] += 1;
        }
        e
    }

    /// Sum of up to `terms` random monomials in `vars` with degrees in
    /// `min_deg..=max_deg`.
    pub(crate) fn poly(
        &mut self,
        ctx: &Arc<Context>,
        vars: &[Var],
        min_deg: usize,
        max_deg: usize,
        terms: usize,
    ) -> Poly {
        let mut p = Poly::zero(ctx);
        if vars.is_empty() && min_deg > 0 {
            return p;
        }
        for _ in 0..terms {
            let d = if vars.is_empty() { 0 } else { self.range(min_deg, max_deg) };
            let e = self.exponents(vars.len(), d);
            let powers: Vec<(Var, u16)> = vars.iter().copied().zip(e).collect();
            let c = self.coefficient();
            p = &p + &Poly::monomial(ctx, c, &powers).expect("generated variable in context");
        }
        p
    }

    /// Like [`Gen::poly`] but never zero.
    pub(crate) fn nonzero_poly(
        &mut self,
        ctx: &Arc<Context>,
        vars: &[Var],
        min_deg: usize,
        max_deg: usize,
        terms: usize,
    ) -> Poly {
        loop {
            let p = self.poly(ctx, vars, min_deg, max_deg, terms.max(1));
            if !p.is_zero() {
                return p;
            }
        }
    }

    /// Nonconstant polynomial.
    pub(crate) fn nonconstant_poly(
        &mut self,
        ctx: &Arc<Context>,
        vars: &[Var],
        max_deg: usize,
        terms: usize,
    ) -> Poly {
        loop {
            let p = self.poly(ctx, vars, 0, max_deg.max(1), terms.max(1));
            if !p.is_constant() {
                return p;
            }
        }
    }

    /// `sum_i phi_i q_i` with each `phi_i` of degree `<= deg` in `x`.
    fn linear_part(&mut self, ctx: &Arc<Context>, deg: usize, terms: usize) -> Poly {
        let xs = ctx.x_vars();
        let mut out = Poly::zero(ctx);
        for q in ctx.q_vars() {
            let phi = self.nonzero_poly(ctx, &xs, 0, deg, terms);
            out = &out + &(&phi * &Poly::var(ctx, q).expect("q variable"));
        }
        out
    }

    /// Momentum part: monomials of `q`-degree `2..=K` times coefficients in
    /// `x` of degree at most `coef_deg`, total degree at most `total`.
    fn higher_part(
        &mut self,
        ctx: &Arc<Context>,
        sizes: &Sizes,
        t: Truncation,
        total: usize,
        coef_deg: usize,
    ) -> Poly {
        let xs = ctx.x_vars();
        let qs = ctx.q_vars();
        let top = (t.q_degree as usize).min(sizes.max_q_degree).min(total).max(2);
        let mut out = Poly::zero(ctx);
        for _ in 0..self.range(1, sizes.terms) {
            let d = self.range(2, top);
            let q = self.poly(ctx, &qs, d, d, 1);
            let c = self.nonzero_poly(ctx, &xs, 0, coef_deg.min(total.saturating_sub(d)), 1);
            out = &out + &(&c * &q);
        }
        out
    }

    /// A small `h^1` correction in `x` and `q` (`q`-degree at most `max_q`).
    fn hbar_correction(&mut self, ctx: &Arc<Context>, max_q: usize) -> Poly {
        let xs = ctx.x_vars();
        let qs = ctx.q_vars();
        let qd = self.range(0, max_q);
        let q = self.poly(ctx, &qs, qd, qd, 1);
        let c = self.nonzero_poly(ctx, &xs, 0, 1, 1);
        &c * &q
    }

    /// Generating function with nonzero `S+` whose classical part has total
    /// degree (in `x` and `q`) at most `sizes.degree`, optional `h` term.
    pub(crate) fn genfun(&mut self, ctx: &Arc<Context>, sizes: &Sizes, t: Truncation, hbar: bool) -> Result<GenFun> {
        let xs = ctx.x_vars();
        let deg = sizes.degree;
        let n_terms = self.range(0, sizes.terms);
        let s0 = self.poly(ctx, &xs, 0, deg, n_terms);
        let lin = self.linear_part(ctx, deg.saturating_sub(1).max(1), 2);
        let plus = self.higher_part(ctx, sizes, t, deg, deg);
        let classical = &(&s0 + &lin) + &plus;
        let mut terms = vec![(0, classical)];
        if hbar && self.chance(0.5) {
            terms.push((1, self.hbar_correction(ctx, (t.q_degree as usize).min(2))));
        }
        GenFun::from_hbar_terms(ctx, t, terms)
    }

    /// Generating function with `S+ = 0`: an ordinary map `phi` (possibly
    /// `h`-dependent) and a phase `S0` that is never zero.
    pub(crate) fn ordinary(&mut self, ctx: &Arc<Context>, sizes: &Sizes, t: Truncation) -> Result<GenFun> {
        let xs = ctx.x_vars();
        let s0 = self.nonzero_poly(ctx, &xs, 0, sizes.degree, sizes.terms);
        let lin = self.linear_part(ctx, sizes.degree.saturating_sub(1).max(1), 2);
        let mut terms = vec![(0, &s0 + &lin)];
        if self.chance(0.5) {
            terms.push((1, self.hbar_correction(ctx, 1)));
        }
        GenFun::from_hbar_terms(ctx, t, terms)
    }

    /// Generating function affine in the source coordinates with constant
    /// `S0`; composing on the right with such a morphism keeps the `l`
    /// expansion of the exponent finite.
    pub(crate) fn affine(&mut self, ctx: &Arc<Context>, sizes: &Sizes, t: Truncation) -> Result<GenFun> {
        let c = Poly::constant(ctx, self.rational());
        let lin = self.linear_part(ctx, 1, 2);
        let plus = self.higher_part(ctx, sizes, t, usize::MAX, 1);
        let mut terms = vec![(0, &(&c + &lin) + &plus)];
        if self.chance(0.5) {
            let xs = ctx.x_vars();
            let qs = ctx.q_vars();
            let qd = self.range(1, 2);
            let q = self.poly(ctx, &qs, qd, qd, 1);
            let a = self.nonzero_poly(ctx, &xs, 0, 1, 1);
            terms.push((1, &a * &q));
        }
        GenFun::from_hbar_terms(ctx, t, terms)
    }

    /// Wave-function term with polynomial amplitude of degree `<= max_deg`
    /// (possibly with an `h` correction) and no phase.
    pub(crate) fn polynomial_amplitude(
        &mut self,
        ctx: &Arc<Context>,
        vars: &[Var],
        max_deg: usize,
        t: Truncation,
    ) -> Result<BiSeries> {
        let a0 = self.nonconstant_poly(ctx, vars, max_deg, 3);
        let mut terms = vec![((0u32, 0i32), a0)];
        if self.chance(0.5) {
            terms.push(((0, 1), self.poly(ctx, vars, 0, 1, 1)));
        }
        BiSeries::from_terms(ctx, t, terms)
    }

    /// `h`-series phase with classical part of degree `<= max_deg`.
    pub(crate) fn phase(&mut self, ctx: &Arc<Context>, vars: &[Var], max_deg: usize, t: Truncation) -> Result<BiSeries> {
        let b0 = self.nonconstant_poly(ctx, vars, max_deg, 2);
        let mut terms = vec![((0u32, 0i32), b0)];
        if self.chance(0.5) {
            terms.push(((0, 1), self.poly(ctx, vars, 0, 1, 1)));
        }
        BiSeries::from_terms(ctx, t, terms)
    }

    /// Invertible `n x n` rational matrix different from the identity.
    pub(crate) fn invertible_matrix(&mut self, n: usize) -> Matrix {
        loop {
            let rows: Vec<Vec<GaussRat>> = (0..n)
                .map(|_| {
                    (0..n)
                        .map(|_| {
                            if self.chance(0.25) {
                                GaussRat::from_int(0)
                            } else {
                                self.rational()
                            }
                        })
                        .collect()
                })
                .collect();
            let m = Matrix::from_rows(rows).expect("square matrix");
            if m != Matrix::identity(n) && m.inverse().is_ok() {
                return m;
            }
        }
    }
}
