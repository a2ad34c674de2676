//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use microformal::verify::{Check, Mutation, Sizes};
use microformal::{
    classical_pullback, exponent_extract, quantum_pullback, BiSeries, Context, GaussRat, GenFun,
    Poly, Truncation, Var, WaveFunction,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn ci() -> Truncation {
    Truncation::new(4, 4, 4, None).unwrap()
}

/// Runs `check` on seeds `0..cases`; reports the first failure.
fn suite(check: Check, cases: u64, t: Truncation) -> Outcome {
    let sizes = Sizes::default();
    let mut failures = Vec::new();
    for seed in 0..cases {
        let v = check.run(seed, &sizes, t, Mutation::Off);
        if !v.passed {
            failures.push(v.to_string());
        }
    }
    match failures.first() {
        None => outcome(true, format!("{cases}/{cases} instances")),
        Some(first) => outcome(
            false,
            format!("{}/{cases} failed, first: {first}", failures.len()),
        ),
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut o = suite(Check::ClassicalLimit, 50, ci());
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(300) {
        o.passed = false;
    }
    o.detail = format!("{}, {:.1}s (limit 300s)", o.detail, elapsed.as_secs_f64());
    o
}

fn criterion_2() -> Outcome {
    let t = ci();
    let ctx = Context::morphism(1, 1);
    let x = Poly::var(&ctx, Var::X(1)).unwrap();
    let q = Poly::var(&ctx, Var::Q(1)).unwrap();
    let y = Poly::var(&ctx, Var::Y(1)).unwrap();
    let half = GaussRat::ratio(1, 2);
    let s = GenFun::from_poly(&(&x * &q) + &(&q * &q).scale(&half), t).unwrap();
    let g = (&y * &y).scale(&half);
    let x2 = (&x * &x).scale(&half);

    // Stationary point y = x / (1 - l): every l^k coefficient is x^2/2.
    let classical_expected =
        BiSeries::from_terms(&ctx, t, (0..=4).map(|k| ((k, 0), x2.clone()))).unwrap();
    let classical = classical_pullback(&s.classical_limit(), &g, t).unwrap();
    if classical != classical_expected {
        return outcome(false, format!("classical: got {classical}"));
    }

    let w = WaveFunction::pure_phase(BiSeries::from_poly(g, t)).unwrap();
    let f = exponent_extract(&quantum_pullback(&s, &w, t).unwrap()).unwrap();
    let low = f.filter(|m, _| m <= 1).project_box();
    let quantum_expected = BiSeries::from_terms(
        &ctx,
        t,
        [
            ((0, 0), x2.clone()),
            ((1, 0), x2.clone()),
            ((1, 1), Poly::constant(&ctx, GaussRat::ratio(1, 2).mul_neg_i())),
        ],
    )
    .unwrap();
    if low != quantum_expected {
        return outcome(false, format!("quantum through l^1: got {low}"));
    }
    outcome(true, format!("classical {classical}; quantum through l^1 {low}"))
}

fn criterion_3() -> Outcome {
    suite(Check::OrdinaryMap, 20, ci())
}

fn criterion_4() -> Outcome {
    suite(Check::DerivativeHomomorphism, 50, ci())
}

fn criterion_5() -> Outcome {
    let a = suite(Check::CompositionCoherence, 20, ci());
    let b = suite(Check::Associativity, 20, ci());
    outcome(
        a.passed && b.passed,
        format!("coherence {}; associativity {}", a.detail, b.detail),
    )
}

fn criterion_6() -> Outcome {
    suite(Check::Covariance, 20, ci())
}

struct RandomSeries {
    rng: ChaCha8Rng,
    ctx: Arc<Context>,
    t: Truncation,
}

impl RandomSeries {
    fn poly(&mut self) -> Poly {
        let mut p = Poly::zero(&self.ctx);
        for _ in 0..self.rng.gen_range(1..=3) {
            let num = self.rng.gen_range(-9i64..=9);
            let den = self.rng.gen_range(1i64..=9);
            let mut c = GaussRat::ratio(num, den);
            if self.rng.gen_bool(0.3) {
                c = &c + &GaussRat::ratio(self.rng.gen_range(-9..=9), den).mul_i();
            }
            let powers = [
                (Var::X(1), self.rng.gen_range(0..=2)),
                (Var::X(2), self.rng.gen_range(0..=1)),
            ];
            p = &p + &Poly::monomial(&self.ctx, c, &powers).unwrap();
        }
        p
    }

    /// Random series; with `min_lambda = 1` it has no `l^0` part.
    fn series(&mut self, min_lambda: u32) -> BiSeries {
        let mut terms = Vec::new();
        for _ in 0..self.rng.gen_range(1..=4) {
            let m = self.rng.gen_range(min_lambda..=self.t.lambda);
            let j = self.rng.gen_range(-(m as i32)..=self.t.hbar as i32);
            terms.push(((m, j), self.poly()));
        }
        BiSeries::from_terms(&self.ctx, self.t, terms).unwrap()
    }
}

fn criterion_7() -> Outcome {
    let cases = 200;
    let big = Truncation::new(4, 3, 4, None).unwrap();
    let small = Truncation::new(2, 1, 4, None).unwrap();
    let mut gen = RandomSeries {
        rng: ChaCha8Rng::seed_from_u64(7),
        ctx: Context::morphism(2, 1),
        t: big,
    };
    let mut failures: BTreeMap<&str, usize> = BTreeMap::new();
    let mut fail = |name: &'static str, ok: bool| {
        *failures.entry(name).or_default() += usize::from(!ok);
    };
    for _ in 0..cases {
        let a = gen.series(1);
        fail("log(exp(a)) = a", a.exp().unwrap().log().unwrap() == a);
        let one_plus = BiSeries::one(&gen.ctx, big).add(&a).unwrap();
        fail("exp(log(1+a)) = 1+a", one_plus.log().unwrap().exp().unwrap() == one_plus);

        let (u, v) = (gen.series(0), gen.series(0));
        let cut = |s: &BiSeries| s.retruncate(small).unwrap();
        fail(
            "truncation congruence (product)",
            cut(&u.mul(&v).unwrap()) == cut(&u).mul(&cut(&v)).unwrap(),
        );
        fail(
            "truncation congruence (exp)",
            cut(&a.exp().unwrap()) == cut(&a).exp().unwrap(),
        );

        let d = |s: &BiSeries| s.derivative(Var::X(1)).unwrap();
        let lhs = d(&u.mul(&v).unwrap());
        let rhs = d(&u).mul(&v).unwrap().add(&u.mul(&d(&v)).unwrap()).unwrap();
        fail("Leibniz", lhs == rhs);

        let map: BTreeMap<Var, BiSeries> =
            [(Var::X(1), gen.series(0)), (Var::X(2), gen.series(0))].into();
        let sub = |s: &BiSeries| s.substitute(&map).unwrap();
        fail(
            "substitution (product)",
            sub(&u.mul(&v).unwrap()) == sub(&u).mul(&sub(&v)).unwrap(),
        );
        fail(
            "substitution (sum)",
            sub(&u.add(&v).unwrap()) == sub(&u).add(&sub(&v)).unwrap(),
        );
    }
    let bad: Vec<String> = failures
        .iter()
        .filter(|(_, &n)| n > 0)
        .map(|(k, n)| format!("{k}: {n} failures"))
        .collect();
    if bad.is_empty() {
        outcome(true, format!("{} properties x {cases} cases", failures.len()))
    } else {
        outcome(false, bad.join("; "))
    }
}

fn criterion_8() -> Outcome {
    let sizes = Sizes::default();
    let t = ci();
    let seeds = 10;
    let mut survivors = Vec::new();
    for check in Check::ALL {
        for seed in 0..seeds {
            let v = check.run(seed, &sizes, t, Mutation::On);
            if v.passed || v.witness.as_deref().is_none_or(str::is_empty) {
                survivors.push(format!("{} seed={seed}", check.name()));
            }
        }
    }
    if survivors.is_empty() {
        outcome(
            true,
            format!("{} checks x {seeds} seeds all detected", Check::ALL.len()),
        )
    } else {
        outcome(false, format!("undetected: {}", survivors.join(", ")))
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 classical limit of the quantum pullback", criterion_1),
        ("2 quadratic golden case", criterion_2),
        ("3 ordinary-map reduction", criterion_3),
        ("4 derivative homomorphism", criterion_4),
        ("5 composition coherence and associativity", criterion_5),
        ("6 linear covariance", criterion_6),
        ("7 ring-layer properties", criterion_7),
        ("8 negative controls", criterion_8),
    ];
    let mut all = true;
    for (name, run) in criteria {
        let o = run();
        all &= o.passed;
        println!(
            "{} criterion {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if !all {
        std::process::exit(1);
    }
}
