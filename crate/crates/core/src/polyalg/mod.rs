//! Polynomials over the rationals, differential forms and polynomial vector
//! fields.
//!
//! All three types carry their variable list; arithmetic between values
//! over different variable lists is a programming error and panics, while
//! the operations the problem files reach (wedge, embedding, parsing) return
//! [`Error`](crate::Error).

mod forms;
mod parse;
mod poly;
mod vector_field;

pub use forms::{AltTensor, DiffForm};
pub use parse::{parse_linear, parse_one_form, parse_poly};
pub use poly::{vars, Monomial, Poly, Vars};
pub use vector_field::PolyVectorField;
