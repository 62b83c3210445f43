//! Scalar abstraction for the statistics layer.
//!
//! Counters in the simulator are integers; ratios derived from them are
//! computed in whichever scalar the caller asks for. `f64` is the working
//! type, `f32` is available for compact output, and `Ratio<u64>` gives an
//! exact value that tests use to check the floating-point path.

use num_rational::Ratio;
use num_traits::Num;

pub trait Scalar: Num + Copy + PartialOrd + std::fmt::Debug {
    fn from_count(count: u64) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn from_count(count: u64) -> Self {
        count as f64
    }
}

impl Scalar for f32 {
    #[inline]
    fn from_count(count: u64) -> Self {
        count as f32
    }
}

impl Scalar for Ratio<u64> {
    #[inline]
    fn from_count(count: u64) -> Self {
        Ratio::from_integer(count)
    }
}

/// `num / den` in scalar `S`. `den` must be nonzero.
#[inline]
pub fn ratio<S: Scalar>(num: u64, den: u64) -> S {
    debug_assert!(den > 0);
    S::from_count(num) / S::from_count(den)
}
