//! Exact arithmetic for the coefficient fields in play: finite fields F_q,
//! local fields F_q((t)) with tracked precision, and two-dimensional local
//! fields F_q((s))((t)) restricted to the monomial-times-unit monoid (closed
//! under multiplication and inverse, and exactly what symbol entries need).
//!
//! Precision policy: operations never silently produce wrong coefficients.
//! A result either carries a certified window of known coefficients or the
//! operation fails with PRECISION_EXHAUSTED.

mod bilaurent;
mod fq;
mod laurent;
mod parse;
mod poly;

pub use bilaurent::{BiLaurentElement, BiVar, OuterSeries, PolyFq2, SeriesWindow};
pub use fq::{FqElem, FqSpec};
pub use laurent::{LaurentElement, DEFAULT_PRECISION};
pub use parse::{parse_bilaurent, parse_fq, parse_laurent, parse_poly, parse_poly2, parse_rational};
pub use poly::{PolyFq, QuotFq};

