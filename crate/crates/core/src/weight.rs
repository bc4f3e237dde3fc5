//! Scalar abstraction for edge weights and distances.

use std::fmt::{Debug, Display};

use num_traits::{Float, NumCast};

/// Floating-point scalar the core is generic over: `f32` or `f64`.
///
/// Recommended inputs are integers or dyadic rationals; with those, sums,
/// halvings and the dyadic thresholds of the partition algorithms are exact
/// in either width.
pub trait Weight: Float + NumCast + Debug + Display + Default + Send + Sync + 'static {}

impl<T> Weight for T where T: Float + NumCast + Debug + Display + Default + Send + Sync + 'static {}

/// Lossy cast from `f64`, for constants and parsed input.
#[inline]
pub fn wf<W: Weight>(x: f64) -> W {
    <W as NumCast>::from(x).expect("finite f64 converts to any Weight")
}

/// Cast from an integer count or grid multiplier.
#[inline]
pub fn wi<W: Weight>(x: u64) -> W {
    <W as NumCast>::from(x).expect("small integer converts to any Weight")
}

/// Exact power of two (`2^e`, `e` may be negative).
#[inline]
pub fn two_pow<W: Weight>(e: i32) -> W {
    wf::<W>(2.0).powi(e)
}

/// Format with 17 significant digits, enough to round-trip an f64.
pub fn format_weight<W: Weight>(x: W) -> String {
    let v = x.to_f64().unwrap_or(f64::NAN);
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{:.16e}", v)
    }
}
