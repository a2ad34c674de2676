//! Line-oriented morphism files.
//!
//! ```text
//! # identity on a line, probed with a plane wave
//! dims 1 1
//! trunc M=2 J=2 K=2
//! S = x1*q1
//! w: amp=1 phase=y1
//! ```

use std::fmt;
use std::sync::Arc;

use microformal::{BiSeries, Context, GenFun, Truncation, Var, WaveFunction, WaveTerm};

use crate::parser::{evaluate, parse_expression};

/// A problem in a morphism file, located by 1-based line and column.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct FileError {
    pub line: usize,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for FileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.column {
            Some(c) => write!(f, "line {}, column {c}: {}", self.line, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

/// One `w:` line: `amp * e^{(i/h) phase}` on the target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WaveSpec {
    pub line: usize,
    pub amplitude: BiSeries,
    pub phase: BiSeries,
}

/// A parsed morphism `M1 => M2` with optional probe wave functions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MorphismFile {
    pub source_dim: usize,
    pub target_dim: usize,
    pub trunc: Truncation,
    pub s: GenFun,
    pub waves: Vec<WaveSpec>,
}

impl MorphismFile {
    pub fn ctx(&self) -> &Arc<Context> {
        self.s.ctx()
    }

    pub fn wave_function(&self, w: &WaveSpec) -> microformal::Result<WaveFunction> {
        WaveFunction::from_terms(
            self.ctx(),
            self.trunc,
            vec![WaveTerm {
                amplitude: w.amplitude.clone(),
                phase: w.phase.clone(),
            }],
        )
    }

    /// The header and `S` line; parses back to the same morphism.
    pub fn header_text(source_dim: usize, target_dim: usize, s: &GenFun) -> String {
        format!(
            "dims {source_dim} {target_dim}\ntrunc {}\nS = {s}\n",
            s.truncation()
        )
    }
}

struct Header {
    ctx: Arc<Context>,
    trunc: Truncation,
}

struct Loader {
    line: usize,
    dims: Option<(usize, usize)>,
    trunc: Option<Truncation>,
    s: Option<GenFun>,
    waves: Vec<WaveSpec>,
}

impl Loader {
    fn fail<T>(&self, column: Option<usize>, message: impl Into<String>) -> Result<T, FileError> {
        Err(FileError {
            line: self.line,
            column,
            message: message.into(),
        })
    }

    fn header(&self) -> Result<Header, FileError> {
        match (self.dims, self.trunc) {
            (Some(dims), Some(trunc)) => Ok(Header {
                ctx: Context::morphism(dims.0, dims.1),
                trunc,
            }),
            _ => self.fail(None, "'dims' and 'trunc' must come before S and w"),
        }
    }

    /// Parses the expression `text`, which starts at character `offset` of
    /// the line, into a series in `allowed` and `h`.
    fn series(
        &self,
        text: &str,
        offset: usize,
        h: &Header,
        allowed: &[Var],
    ) -> Result<BiSeries, FileError> {
        let located = |e: crate::parser::ParseError| FileError {
            line: self.line,
            column: Some(offset + e.column),
            message: e.message,
        };
        let ast = parse_expression(text).map_err(located)?;
        let value = evaluate(&ast, &h.ctx, allowed).map_err(located)?;
        if value.hbar_valuation().is_some_and(|j| j < 0) {
            return self.fail(Some(offset + 1), "negative powers of h are not allowed here");
        }
        value
            .to_series(h.trunc)
            .or_else(|e| self.fail(Some(offset + 1), e.to_string()))
    }

    fn dims(&mut self, rest: &str) -> Result<(), FileError> {
        if self.dims.is_some() {
            return self.fail(None, "duplicate 'dims' line");
        }
        let parts: Vec<&str> = rest.split_whitespace().collect();
        let parsed: Vec<usize> = parts.iter().filter_map(|p| p.parse().ok()).collect();
        match parsed[..] {
            [n1, n2] if parts.len() == 2 && n1 > 0 && n2 > 0 => {
                self.dims = Some((n1, n2));
                Ok(())
            }
            _ => self.fail(None, "expected 'dims <n1> <n2>' with positive dimensions"),
        }
    }

    fn trunc(&mut self, rest: &str) -> Result<(), FileError> {
        if self.trunc.is_some() {
            return self.fail(None, "duplicate 'trunc' line");
        }
        let (mut m, mut j, mut k, mut d) = (None, None, None, None);
        for part in rest.split_whitespace() {
            let Some((key, value)) = part.split_once('=') else {
                return self.fail(None, format!("expected KEY=VALUE, found '{part}'"));
            };
            let Ok(value) = value.parse::<u32>() else {
                return self.fail(None, format!("'{value}' is not a nonnegative integer"));
            };
            let slot = match key {
                "M" => &mut m,
                "J" => &mut j,
                "K" => &mut k,
                "D" => &mut d,
                _ => return self.fail(None, format!("unknown truncation key '{key}'")),
            };
            if slot.replace(value).is_some() {
                return self.fail(None, format!("duplicate truncation key '{key}'"));
            }
        }
        let (Some(m), Some(j), Some(k)) = (m, j, k) else {
            return self.fail(None, "expected 'trunc M=<m> J=<j> K=<k> [D=<d>]'");
        };
        self.trunc = Some(Truncation::new(m, j, k, d).or_else(|e| self.fail(None, e.to_string()))?);
        Ok(())
    }

    fn generating_function(&mut self, text: &str, offset: usize) -> Result<(), FileError> {
        if self.s.is_some() {
            return self.fail(None, "duplicate S line");
        }
        let h = self.header()?;
        let allowed: Vec<Var> = h.ctx.x_vars().into_iter().chain(h.ctx.q_vars()).collect();
        let series = self.series(text, offset, &h, &allowed)?;
        self.s = Some(GenFun::new(series).or_else(|e| self.fail(None, e.to_string()))?);
        Ok(())
    }

    /// `w: amp=<expr> phase=<expr>`, either key optional, in any order.
    fn wave(&mut self, text: &str, offset: usize) -> Result<(), FileError> {
        let h = self.header()?;
        let allowed = h.ctx.y_vars();
        let chars: Vec<char> = text.chars().collect();
        let mut keys = Vec::new();
        for (k, &c) in chars.iter().enumerate() {
            if c != '=' {
                continue;
            }
            let start = chars[..k]
                .iter()
                .rposition(|c| !c.is_alphanumeric())
                .map_or(0, |p| p + 1);
            let key: String = chars[start..k].iter().collect();
            if key != "amp" && key != "phase" {
                return self.fail(
                    Some(offset + start + 1),
                    format!("expected 'amp=' or 'phase=', found '{key}='"),
                );
            }
            if keys.iter().any(|(name, _, _)| *name == key) {
                return self.fail(Some(offset + start + 1), format!("duplicate '{key}='"));
            }
            keys.push((key, start, k + 1));
        }
        let lead = keys.first().map_or(chars.len(), |(_, s, _)| *s);
        if chars[..lead].iter().any(|c| !c.is_whitespace()) {
            return self.fail(Some(offset + 1), "expected 'amp=' or 'phase='");
        }
        let mut amplitude = BiSeries::one(&h.ctx, h.trunc);
        let mut phase = BiSeries::zero(&h.ctx, h.trunc);
        for (n, (key, _, value_start)) in keys.iter().enumerate() {
            let end = keys.get(n + 1).map_or(chars.len(), |(_, s, _)| *s);
            let value: String = chars[*value_start..end].iter().collect();
            if value.trim().is_empty() {
                return self.fail(Some(offset + value_start + 1), format!("empty '{key}='"));
            }
            let series = self.series(&value, offset + value_start, &h, &allowed)?;
            match key.as_str() {
                "amp" => amplitude = series,
                _ => phase = series,
            }
        }
        let spec = WaveSpec {
            line: self.line,
            amplitude,
            phase,
        };
        WaveFunction::from_terms(
            &h.ctx,
            h.trunc,
            vec![WaveTerm {
                amplitude: spec.amplitude.clone(),
                phase: spec.phase.clone(),
            }],
        )
        .or_else(|e| self.fail(None, e.to_string()))?;
        self.waves.push(spec);
        Ok(())
    }
}

/// Parses the text of a morphism file.
pub fn parse_morphism_file(text: &str) -> Result<MorphismFile, FileError> {
    let mut loader = Loader {
        line: 0,
        dims: None,
        trunc: None,
        s: None,
        waves: Vec::new(),
    };
    for (n, raw) in text.lines().enumerate() {
        loader.line = n + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim_start();
        if trimmed.trim().is_empty() {
            continue;
        }
        let indent = content.chars().count() - trimmed.chars().count();
        let word: String = trimmed.chars().take_while(|c| c.is_alphanumeric()).collect();
        let after = &trimmed[word.len()..];
        let offset_of = |s: &str| indent + trimmed.chars().count() - s.chars().count();
        match word.as_str() {
            "dims" => loader.dims(after)?,
            "trunc" => loader.trunc(after)?,
            "S" if after.trim_start().starts_with('=') => {
                let value = &after.trim_start()[1..];
                loader.generating_function(value, offset_of(value))?
            }
            "w" if after.trim_start().starts_with(':') => {
                let value = &after.trim_start()[1..];
                loader.wave(value, offset_of(value))?
            }
            _ => {
                return loader.fail(
                    Some(indent + 1),
                    "expected 'dims', 'trunc', 'S = ...' or 'w: ...'",
                )
            }
        }
    }
    loader.line += 1;
    let (Some((n1, n2)), Some(trunc), Some(s)) = (loader.dims, loader.trunc, loader.s.clone()) else {
        return loader.fail(None, "file must contain 'dims', 'trunc' and an S line");
    };
    Ok(MorphismFile {
        source_dim: n1,
        target_dim: n2,
        trunc,
        s,
        waves: loader.waves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const QUAD: &str = "\
# quadratic example
dims 1 1
trunc M=2 J=2 K=2
S = x1*q1 + 1/2*q1^2   # shear
w: amp=1 phase=1/2*y1^2
";

    #[test]
    fn loads_quadratic() {
        let f = parse_morphism_file(QUAD).unwrap();
        assert_eq!((f.source_dim, f.target_dim), (1, 1));
        assert_eq!(f.trunc, Truncation::new(2, 2, 2, None).unwrap());
        assert_eq!(f.s.to_string(), "x1*q1 + 1/2*q1^2");
        assert_eq!(f.waves.len(), 1);
        assert_eq!(f.waves[0].phase.to_string(), "1/2*y1^2");
        assert!(f.waves[0].amplitude.is_one());
    }

    #[test]
    fn header_roundtrip() {
        let f = parse_morphism_file(QUAD).unwrap();
        let text = MorphismFile::header_text(1, 1, &f.s);
        let g = parse_morphism_file(&text).unwrap();
        assert_eq!(g.s, f.s);
        assert_eq!(g.trunc, f.trunc);
    }

    #[test]
    fn wave_keys_in_any_order() {
        let text = "dims 1 2\ntrunc M=1 J=1 K=1\nS = x1*q1\nw: phase=y2 amp=h*y1\n";
        let f = parse_morphism_file(text).unwrap();
        assert_eq!(f.waves[0].amplitude.to_string(), "h*y1");
        assert_eq!(f.waves[0].phase.to_string(), "y2");
    }

    fn error(text: &str) -> FileError {
        parse_morphism_file(text).unwrap_err()
    }

    #[test]
    fn located_errors() {
        let e = error("dims 1 1\ntrunc M=1 J=1 K=1\nS = x1*q1 + x2\n");
        assert_eq!((e.line, e.column), (3, Some(13)));
        let e = error("dims 1 1\ntrunc M=1 J=1 K=1\nS = x1^\n");
        assert_eq!((e.line, e.column), (3, Some(8)));
        let e = error("dims 1 1\ntrunc M=1 J=1 K=1\nS = x1*q1\nw: amp=y1 phase=x1\n");
        assert_eq!((e.line, e.column), (4, Some(17)));
        let e = error("dims 1 1\ntrunc M=1 J=1 K=1\nS = x1*q1\nw: ampl=1\n");
        assert_eq!((e.line, e.column), (4, Some(4)));
    }

    #[test]
    fn validation_errors() {
        assert_eq!(error("S = x1*q1\n").line, 1);
        assert_eq!(error("dims 1 1\ntrunc M=1 J=1 K=1\n").line, 3);
        assert!(error("dims 1 1\ntrunc M=1 J=1 K=1\nS = q1^3\n").message.contains("K=1"));
        assert_eq!(error("dims 1 1\ntrunc M=1 J=1 K=1\nS = h^-1*q1\n").line, 3);
        assert_eq!(error("dims 0 1\n").line, 1);
        assert_eq!(error("dims 1 1\ntrunc M=1 J=1\n").line, 2);
        assert_eq!(error("dims 1 1\ntrunc M=1 J=1 K=0\n").line, 2);
        assert_eq!(error("dims 1 1\ndims 1 1\n").line, 2);
        assert_eq!(error("bogus\n").line, 1);
    }
}
