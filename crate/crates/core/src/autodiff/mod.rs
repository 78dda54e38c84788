//! Dense reverse-mode differentiation with exactly the primitives the
//! recurrent graph model needs, and a central-difference checker.

mod grad_check;
mod tape;
mod tensor;

pub use grad_check::{grad_check, GradCheckReport};
pub use tape::{masked_softmax, sigmoid, Activation, Gradients, Tape, Var};
pub(crate) use tape::sign;
pub use tensor::Tensor;
