// Copyright 2026 The shockhier Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Scalar abstraction shared by the exact geometric parts of the crate.
//!
//! Everything that only needs field arithmetic and ordering (flux tables,
//! profiles, front tracking, the variational oracle) is written against
//! [`Scalar`]. Floating point types compare with an absolute tolerance;
//! rationals compare exactly.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{Num, Signed};

/// Absolute tolerance used for every equality test on `f64` values.
pub const F64_TOLERANCE: f64 = 1e-12;

/// Absolute tolerance used for `f32` values.
pub const F32_TOLERANCE: f32 = 1e-5;

pub trait Scalar:
    Copy + PartialOrd + Num + Signed + Debug + Display + FromStr + Send + Sync + 'static
{
    /// Values closer than this are treated as equal. Zero for exact types.
    fn tolerance() -> Self;

    fn from_f64(v: f64) -> Self;

    fn to_f64(self) -> f64;

    fn from_i64(v: i64) -> Self;

    #[inline]
    fn approx_eq(self, other: Self) -> bool {
        (self - other).abs() <= Self::tolerance()
    }

    /// `self < other` by more than the tolerance.
    #[inline]
    fn definitely_lt(self, other: Self) -> bool {
        self < other - Self::tolerance()
    }

    #[inline]
    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    #[inline]
    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    #[inline]
    fn tolerance() -> Self {
        F64_TOLERANCE
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn from_i64(v: i64) -> Self {
        v as f64
    }
}

impl Scalar for f32 {
    #[inline]
    fn tolerance() -> Self {
        F32_TOLERANCE
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn from_i64(v: i64) -> Self {
        v as f32
    }
}

impl Scalar for Rational64 {
    #[inline]
    fn tolerance() -> Self {
        Rational64::from_integer(0)
    }
    /// Nearest rational with a bounded denominator; panics on non-finite input.
    fn from_f64(v: f64) -> Self {
        Rational64::approximate_float(v).expect("finite value representable as Rational64")
    }
    #[inline]
    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
    #[inline]
    fn from_i64(v: i64) -> Self {
        Rational64::from_integer(v)
    }
}
