use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type used for probabilities, variances and mass curves.
///
/// Everything statistical in the crate is generic over this trait; the
/// aliases at the crate root pick `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from a count.
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("every u64 is representable as a float")
    }

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any float")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `count / total` in the requested precision. Returns zero when `total` is zero.
pub fn ratio<T: Scalar>(count: u64, total: u64) -> T {
    if total == 0 {
        T::zero()
    } else {
        // Divide in f64 first so f32 callers keep the extra precision until the end.
        T::from_f64_lossy(count as f64 / total as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_handles_zero_total() {
        assert_eq!(ratio::<f64>(3, 0), 0.0);
        assert_eq!(ratio::<f32>(1, 4), 0.25);
    }
}
