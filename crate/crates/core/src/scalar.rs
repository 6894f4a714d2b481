use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Scalar type for distance values: `f32` or `f64`.
///
/// Counts are converted with `FromPrimitive::from_u64`; the dense paper
/// ids are `u32`, so every count in the pipeline is exact in `f64`.
pub trait Real: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {}

impl Real for f32 {}
impl Real for f64 {}
