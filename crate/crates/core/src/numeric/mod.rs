//! Log-scale arithmetic, limit detection and index selectors.

mod limit;
mod logvalue;
pub mod ntheory;
mod selector;

pub use limit::{
    detect_limit, eventually_increasing, LimitKind, LimitVerdict, ToleranceProfile, POLYNOMIAL_STRIDE,
};
pub(crate) use limit::tail_window;
pub use logvalue::{log2_factorial, LogValue, Sign, LINEAR_LIMIT};
pub use selector::{subsequence, Selector};
