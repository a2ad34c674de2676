use std::path::PathBuf;
use std::process::{Command, Output};

use proptest::prelude::*;

use microformal::{BiSeries, Context, GaussRat, Poly, Truncation, Var};
use microformal_cli::{evaluate, parse_expression, parse_morphism_file, Expr};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .display()
        .to_string()
}

fn microformal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_microformal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn classical_quadratic_golden() {
    let o = microformal(&["classical", &data("quad.mf")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "1/2*x1^2 + l*1/2*x1^2 + l^2*1/2*x1^2\n");
}

#[test]
fn identity_pullback() {
    let o = microformal(&["pullback", &data("id.mf"), "--exponent"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "w1 amplitude: 1\nw1 phase: x1\nw1 exponent: x1\n"
    );
}

#[test]
fn ordinary_map_pullback() {
    let o = microformal(&["pullback", &data("square.mf")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "w1 amplitude: 1 + h*x1^2 + h*x2\nw1 phase: x1^4 + 2*x1^2*x2 + x2^2\n"
    );
}

#[test]
fn verify_passes_on_seed_7() {
    let o = microformal(&["verify", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 6 * 5);
    assert!(out.lines().all(|l| l.starts_with("PASS ")));
}

#[test]
fn verify_reports_corruption() {
    let o = microformal(&["verify", "--seed", "3", "--cases", "1", "--mutate"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 6);
    assert!(out.lines().all(|l| l.starts_with("FAIL ") && l.contains(" witness=")));
}

#[test]
fn compose_prints_a_morphism_file() {
    let o = microformal(&["compose", &data("square.mf"), &data("affine.mf")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(
        out,
        "dims 2 1\ntrunc M=3 J=2 K=3\nS = 2*x1^2*q1 + 2*x2*q1 + 1/2*q1^2 + 3 + h*i*q1\n"
    );
    let f = parse_morphism_file(&out).unwrap();
    assert_eq!(f.s.to_string(), "2*x1^2*q1 + 2*x2*q1 + 1/2*q1^2 + 3 + h*i*q1");
}

#[test]
fn composition_of_files_is_associative() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let write = |name: &str, text: String| {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p.display().to_string()
    };
    let a = data("affine.mf");
    let ab = write("assoc_ab.mf", stdout(&microformal(&["compose", &a, &a])));
    let left = stdout(&microformal(&["compose", &ab, &a]));
    let right = stdout(&microformal(&["compose", &a, &ab]));
    assert!(left.starts_with("dims 1 1\n"));
    assert_eq!(left, right);
}

#[test]
fn covariance_under_invertible_matrix() {
    let o = microformal(&["covariance", &data("plane.mf"), "--matrix", "1,2;1/2,i"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "PASS covariance w1\n");
}

#[test]
fn invalid_inputs_exit_2() {
    let cases: [&[&str]; 7] = [
        &["pullback", &data("bad_syntax.mf")],
        &["pullback", &data("missing.mf")],
        &["compose", &data("plane.mf"), &data("id.mf")],
        &["covariance", &data("plane.mf"), "--matrix", "1,2;2,4"],
        &["covariance", &data("plane.mf"), "--matrix", "1"],
        &["covariance", &data("plane.mf"), "--matrix", "1,y1;0,1"],
        &["frobnicate"],
    ];
    for args in cases {
        let o = microformal(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(stdout(&o).is_empty(), "{args:?}");
        assert!(!stderr(&o).is_empty(), "{args:?}");
    }
}

#[test]
fn syntax_errors_are_located() {
    let o = microformal(&["pullback", &data("bad_syntax.mf")]);
    assert!(
        stderr(&o).contains("line 3, column 18: expected ')'"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn classical_rejects_quantum_probes() {
    let o = microformal(&["classical", &data("affine.mf")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("amp=1"));
}

#[test]
fn output_is_deterministic() {
    let runs: [&[&str]; 3] = [
        &["pullback", &data("plane.mf"), "--exponent"],
        &["compose", &data("square.mf"), &data("affine.mf")],
        &["verify", "--seed", "11", "--cases", "2"],
    ];
    for args in runs {
        let a = microformal(args);
        let b = microformal(args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.status.code(), b.status.code());
    }
}

fn all_vars(ctx: &std::sync::Arc<Context>) -> Vec<Var> {
    ctx.vars().collect()
}

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        (0u32..20).prop_map(|n| n.to_string()),
        (0u32..20, 1u32..9).prop_map(|(a, b)| format!("{a}/{b}")),
        (1u32..5).prop_map(|n| format!("{n}i")),
        Just("i".to_string()),
        Just("h".to_string()),
        (1usize..=2).prop_map(|k| format!("x{k}")),
        (1usize..=2).prop_map(|k| format!("q{k}")),
    ]
}

fn expression() -> impl Strategy<Value = String> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) - ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            inner.clone().prop_map(|a| format!("-({a})")),
            (inner, 0i32..3).prop_map(|(a, e)| format!("({a})^{e}")),
        ]
    })
}

fn gauss() -> impl Strategy<Value = GaussRat> {
    (-9i64..=9, 1i64..=9, -9i64..=9)
        .prop_map(|(a, d, b)| &GaussRat::ratio(a, d) + &GaussRat::ratio(b, d).mul_i())
}

fn series() -> impl Strategy<Value = BiSeries> {
    let term = (gauss(), 0i32..=3, 0u16..=2, 0u16..=2, 0u16..=2);
    prop::collection::vec(term, 0..5).prop_map(|terms| {
        let ctx = Context::morphism(2, 1);
        let t = Truncation::new(1, 3, 4, None).unwrap();
        let terms = terms.into_iter().map(|(c, j, a, b, q)| {
            let powers = [(Var::X(1), a), (Var::X(2), b), (Var::Q(1), q)];
            ((0, j), Poly::monomial(&ctx, c, &powers).unwrap())
        });
        BiSeries::from_terms(&ctx, t, terms).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn expression_print_parse_roundtrip(text in expression()) {
        let ctx = Context::morphism(2, 2);
        let e: Expr = parse_expression(&text).unwrap();
        let printed = e.to_string();
        let again = parse_expression(&printed).unwrap();
        prop_assert_eq!(again.to_string(), printed);
        prop_assert_eq!(
            evaluate(&again, &ctx, &all_vars(&ctx)).unwrap(),
            evaluate(&e, &ctx, &all_vars(&ctx)).unwrap()
        );
    }

    #[test]
    fn series_print_parse_roundtrip(s in series()) {
        let ctx = s.ctx().clone();
        let parsed = evaluate(&parse_expression(&s.to_string()).unwrap(), &ctx, &all_vars(&ctx))
            .unwrap()
            .to_series(s.truncation())
            .unwrap();
        prop_assert_eq!(parsed, s);
    }
}
