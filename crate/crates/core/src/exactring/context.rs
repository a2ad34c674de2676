use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A variable of the working polynomial ring. Indices are 1-based, as printed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    /// Coordinate on the source manifold.
    X(usize),
    /// Coordinate on the target manifold.
    Y(usize),
    /// Momentum conjugate to `Y`.
    Q(usize),
    /// Momentum on a third manifold, used while composing.
    R(usize),
    /// Nilpotent direction with `eps^2 = 0`.
    Eps,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(i) => write!(f, "x{i}"),
            Var::Y(i) => write!(f, "y{i}"),
            Var::Q(i) => write!(f, "q{i}"),
            Var::R(i) => write!(f, "r{i}"),
            Var::Eps => write!(f, "eps"),
        }
    }
}

/// The variable set of one computation.
///
/// Variables are laid out as `x1..xn1, y1..yn2, q1..qn2, r1..rn3, [eps]`;
/// the position in this list is the slot of the exponent in a monomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Context {
    n_x: usize,
    n_y: usize,
    n_r: usize,
    eps: bool,
}

impl Context {
    pub fn new(n_x: usize, n_y: usize, n_r: usize, eps: bool) -> Arc<Self> {
        Arc::new(Context { n_x, n_y, n_r, eps })
    }

    /// Context for a morphism `M1 => M2` with `dim M1 = n1`, `dim M2 = n2`.
    pub fn morphism(n1: usize, n2: usize) -> Arc<Self> {
        Self::new(n1, n2, 0, false)
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn has_eps(&self) -> bool {
        self.eps
    }

    /// Same variables plus the nilpotent `eps`.
    pub fn with_eps(&self) -> Arc<Self> {
        Self::new(self.n_x, self.n_y, self.n_r, true)
    }

    pub fn num_vars(&self) -> usize {
        self.n_x + 2 * self.n_y + self.n_r + usize::from(self.eps)
    }

    pub fn index_of(&self, v: Var) -> Result<usize> {
        let idx = match v {
            Var::X(i) if (1..=self.n_x).contains(&i) => i - 1,
            Var::Y(i) if (1..=self.n_y).contains(&i) => self.n_x + i - 1,
            Var::Q(i) if (1..=self.n_y).contains(&i) => self.n_x + self.n_y + i - 1,
            Var::R(i) if (1..=self.n_r).contains(&i) => self.n_x + 2 * self.n_y + i - 1,
            Var::Eps if self.eps => self.n_x + 2 * self.n_y + self.n_r,
            _ => {
                return Err(Error::Context(format!(
                    "variable {v} is not in context {self}"
                )))
            }
        };
        Ok(idx)
    }

    pub fn var_at(&self, idx: usize) -> Var {
        let (nx, ny, nr) = (self.n_x, self.n_y, self.n_r);
        if idx < nx {
            Var::X(idx + 1)
        } else if idx < nx + ny {
            Var::Y(idx - nx + 1)
        } else if idx < nx + 2 * ny {
            Var::Q(idx - nx - ny + 1)
        } else if idx < nx + 2 * ny + nr {
            Var::R(idx - nx - 2 * ny + 1)
        } else {
            debug_assert!(self.eps && idx == nx + 2 * ny + nr);
            Var::Eps
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        (0..self.num_vars()).map(|i| self.var_at(i))
    }

    pub fn x_vars(&self) -> Vec<Var> {
        (1..=self.n_x).map(Var::X).collect()
    }

    pub fn y_vars(&self) -> Vec<Var> {
        (1..=self.n_y).map(Var::Y).collect()
    }

    pub fn q_vars(&self) -> Vec<Var> {
        (1..=self.n_y).map(Var::Q).collect()
    }

    pub fn r_vars(&self) -> Vec<Var> {
        (1..=self.n_r).map(Var::R).collect()
    }

    /// Slot of `eps`, if present.
    pub(crate) fn eps_slot(&self) -> Option<usize> {
        self.eps.then(|| self.num_vars() - 1)
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[x:{} y/q:{} r:{}", self.n_x, self.n_y, self.n_r)?;
        if self.eps {
            write!(f, " eps")?;
        }
        write!(f, "]")
    }
}

/// `Ok` when both contexts describe the same variable set.
pub(crate) fn same_context(a: &Arc<Context>, b: &Arc<Context>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::Context(format!("mismatched contexts {a} and {b}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_roundtrip() {
        let ctx = Context::new(2, 2, 1, true);
        assert_eq!(ctx.num_vars(), 8);
        for (i, v) in ctx.vars().enumerate() {
            assert_eq!(ctx.index_of(v).unwrap(), i);
        }
        assert_eq!(ctx.var_at(7), Var::Eps);
    }

    #[test]
    fn unknown_variable() {
        let ctx = Context::morphism(1, 1);
        assert!(ctx.index_of(Var::X(2)).is_err());
        assert!(ctx.index_of(Var::R(1)).is_err());
        assert!(ctx.index_of(Var::Eps).is_err());
        assert!(ctx.index_of(Var::X(0)).is_err());
    }
}
