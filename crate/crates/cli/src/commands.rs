use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use microformal::verify::{compare_pulled, run_all};
use microformal::{
    classical_pullback, compose, exponent_extract, linear_change, quantum_pullback, Check,
    Context, Matrix, Mutation, Sizes, Truncation,
};

use crate::morphism_file::{parse_morphism_file, FileError, MorphismFile};
use crate::parser::{evaluate, parse_expression, ParseError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "microformal",
    version,
    about = "Exact pullbacks along quantum microformal morphisms"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quantum pullback of every `w:` line along S.
    Pullback {
        file: PathBuf,
        /// Also print the exponent f with `A e^{(i/h) b} = e^{(i/h) f}`.
        #[arg(long)]
        exponent: bool,
    },
    /// Classical pullback of the phase of every `w:` line (amp must be 1).
    Classical { file: PathBuf },
    /// Generating function of FIRST followed by SECOND, as a morphism file.
    Compose { first: PathBuf, second: PathBuf },
    /// Seeded oracle checks at M=J=K=4; exits 1 if any fails.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        cases: u64,
        /// Corrupt every check's reference computation; all checks should fail.
        #[arg(long)]
        mutate: bool,
    },
    /// Pullback invariance under the coordinate change `y = A y'`.
    Covariance {
        file: PathBuf,
        /// Rows separated by `;`, entries by `,`, e.g. "1,2;0,1".
        #[arg(long)]
        matrix: String,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    File { path: String, source: FileError },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Engine(#[from] microformal::Error),
}

/// Text to print and whether every check passed.
pub struct Report {
    pub text: String,
    pub passed: bool,
}

impl Report {
    fn ok(text: String) -> Self {
        Report { text, passed: true }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code: 0 success, 1 check failure, 2 invalid input.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                EXIT_INVALID
            } else {
                let _ = write!(out, "{rendered}");
                EXIT_OK
            };
        }
    };
    match execute(&cli.command) {
        Ok(report) => {
            let _ = write!(out, "{}", report.text);
            if report.passed {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INVALID
        }
    }
}

pub fn execute(command: &Command) -> Result<Report, CliError> {
    match command {
        Command::Pullback { file, exponent } => pullback(file, *exponent),
        Command::Classical { file } => classical(file),
        Command::Compose { first, second } => compose_files(first, second),
        Command::Verify {
            seed,
            cases,
            mutate,
        } => Ok(verify(*seed, *cases, *mutate)),
        Command::Covariance { file, matrix } => covariance(file, matrix),
    }
}

pub fn load(path: &Path) -> Result<MorphismFile, CliError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: name.clone(),
        source,
    })?;
    parse_morphism_file(&text).map_err(|source| CliError::File { path: name, source })
}

fn require_waves(path: &Path, f: &MorphismFile) -> Result<(), CliError> {
    if f.waves.is_empty() {
        return Err(CliError::Invalid(format!(
            "{}: no 'w:' lines to pull back",
            path.display()
        )));
    }
    Ok(())
}

fn pullback(path: &Path, exponent: bool) -> Result<Report, CliError> {
    let f = load(path)?;
    require_waves(path, &f)?;
    let mut text = String::new();
    for (k, w) in f.waves.iter().enumerate() {
        let pulled = quantum_pullback(&f.s, &f.wave_function(w)?, f.trunc)?;
        for term in pulled.project_box().terms() {
            writeln!(text, "w{} amplitude: {}", k + 1, term.amplitude).unwrap();
            writeln!(text, "w{} phase: {}", k + 1, term.phase).unwrap();
        }
        if exponent {
            let e = exponent_extract(&pulled)?.project_box();
            writeln!(text, "w{} exponent: {e}", k + 1).unwrap();
        }
    }
    Ok(Report::ok(text))
}

fn classical(path: &Path) -> Result<Report, CliError> {
    let f = load(path)?;
    require_waves(path, &f)?;
    let s0 = f.s.classical_limit();
    let mut text = String::new();
    for w in &f.waves {
        let invalid = |what: &str| {
            CliError::Invalid(format!("{}: line {}: {what}", path.display(), w.line))
        };
        if !w.amplitude.is_one() {
            return Err(invalid("the classical pullback needs amp=1"));
        }
        if !w.phase.filter(|_, j| j != 0).is_zero() {
            return Err(invalid("the classical pullback needs a phase without h"));
        }
        let pulled = classical_pullback(&s0, &w.phase.coeff(0, 0), f.trunc)?;
        writeln!(text, "{pulled}").unwrap();
    }
    Ok(Report::ok(text))
}

fn compose_files(first: &Path, second: &Path) -> Result<Report, CliError> {
    let (a, b) = (load(first)?, load(second)?);
    if a.target_dim != b.source_dim {
        return Err(CliError::Invalid(format!(
            "{} maps into dimension {}, but {} starts from dimension {}",
            first.display(),
            a.target_dim,
            second.display(),
            b.source_dim
        )));
    }
    if a.trunc != b.trunc {
        return Err(CliError::Invalid(format!(
            "truncations differ: {} in {}, {} in {}",
            a.trunc,
            first.display(),
            b.trunc,
            second.display()
        )));
    }
    let c = compose(&a.s, &b.s, a.trunc)?;
    Ok(Report::ok(MorphismFile::header_text(
        a.source_dim,
        b.target_dim,
        &c,
    )))
}

fn verify(seed: u64, cases: u64, mutate: bool) -> Report {
    let sizes = Sizes::default();
    let t = Truncation::ci_default();
    let verdicts = if mutate {
        Check::ALL
            .iter()
            .flat_map(|c| (0..cases).map(move |k| (c, seed.wrapping_add(k))))
            .map(|(c, s)| c.run(s, &sizes, t, Mutation::On))
            .collect()
    } else {
        run_all(seed, cases, &sizes, t)
    };
    let mut text = String::new();
    for v in &verdicts {
        writeln!(text, "{v}").unwrap();
    }
    Report {
        text,
        passed: verdicts.iter().all(|v| v.passed),
    }
}

/// Parses `"a,b;c,d"` into a square matrix of constants.
pub fn parse_matrix(text: &str) -> Result<Matrix, CliError> {
    let scalars = Context::morphism(0, 0);
    let mut rows = Vec::new();
    for (r, row) in text.split(';').enumerate() {
        let mut entries = Vec::new();
        for (c, entry) in row.split(',').enumerate() {
            let bad = |e: ParseError| {
                CliError::Invalid(format!("matrix entry ({}, {}): {e}", r + 1, c + 1))
            };
            let value = evaluate(&parse_expression(entry).map_err(bad)?, &scalars, &[])
                .map_err(bad)?;
            let constant = value.as_constant().ok_or_else(|| {
                CliError::Invalid(format!("matrix entry ({}, {}) must be a number", r + 1, c + 1))
            })?;
            entries.push(constant);
        }
        rows.push(entries);
    }
    Ok(Matrix::from_rows(rows)?)
}

fn covariance(path: &Path, matrix: &str) -> Result<Report, CliError> {
    let f = load(path)?;
    require_waves(path, &f)?;
    let a = parse_matrix(matrix)?;
    if a.size() != f.target_dim {
        return Err(CliError::Invalid(format!(
            "matrix is {n}x{n}, but the target has dimension {}",
            f.target_dim,
            n = a.size()
        )));
    }
    let moved = linear_change(&f.s, &a)?;
    let mut text = String::new();
    let mut passed = true;
    for (k, w) in f.waves.iter().enumerate() {
        let wf = f.wave_function(w)?;
        let lhs = quantum_pullback(&f.s, &wf, f.trunc)?;
        let rhs = quantum_pullback(&moved, &wf.linear_substitution(&a)?, f.trunc)?;
        match compare_pulled(&lhs, &rhs) {
            None => writeln!(text, "PASS covariance w{}", k + 1).unwrap(),
            Some(witness) => {
                passed = false;
                writeln!(text, "FAIL covariance w{} witness={witness}", k + 1).unwrap()
            }
        }
    }
    Ok(Report { text, passed })
}
