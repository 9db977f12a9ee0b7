//! Reverse-mode automatic differentiation.

mod gradcheck;
mod tape;

pub use gradcheck::{grad_check, GradCheckOptions, GradCheckReport};
pub use tape::{BinaryKind, Gradients, ReduceKind, Tape, UnaryKind, Var};

/// A complex value on a tape, held as separate real and imaginary parts.
#[derive(Clone, Copy, Debug)]
pub struct ComplexVar<'t> {
    pub re: Var<'t>,
    pub im: Var<'t>,
}
