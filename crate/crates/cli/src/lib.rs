//! Text frontend for the `microformal` engine: an expression parser, the
//! morphism file format and the `microformal` command.

pub mod commands;
pub mod morphism_file;
pub mod parser;

pub use commands::{run, Cli, CliError, Command, Report};
pub use morphism_file::{parse_morphism_file, FileError, MorphismFile, WaveSpec};
pub use parser::{evaluate, parse_expression, Expr, HbarPoly, ParseError};
