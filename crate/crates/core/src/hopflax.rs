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

//! Hopf-Lax variational oracle for polygonal flux and piecewise-constant data.
//!
//! `I(p) = G(p) + t f*((x - p) / t)` is piecewise linear in `p` with kinks at
//! the profile breakpoints and at `x - c_k t`, so its minimum is attained on
//! that finite candidate set. The largest minimizer `a(x, t)` gives the
//! solution through the right derivative of `f*` at `(x - a) / t`.
//!
//! To the right of every kink `I` has slope `g(+inf) - u_1 >= 0`. When that
//! slope is zero the minimizers run off to `+inf`; `a` is then reported as the
//! last kink plus `t`, a point inside that unbounded flat stretch.
//!
//! This module shares no code path with front tracking beyond the flux and
//! profile types, which is what makes it usable as a cross-check.

use thiserror::Error;

use crate::flux::{LegendreTransform, PolygonalFlux};
use crate::profile::Profile;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum OracleError {
    #[error("Hopf-Lax queries need t > 0")]
    NonpositiveTime,
}

#[derive(Debug, Clone)]
pub struct HopfLax<S> {
    flux: PolygonalFlux<S>,
    legendre: LegendreTransform<S>,
    profile: Profile<S>,
    /// `int_{x_1}^{x_j} g` at each breakpoint.
    anchors: Vec<S>,
    /// `int_{x_1}^{0} g`, so that `G(0) = 0`.
    origin: S,
}

impl<S: Scalar> HopfLax<S> {
    pub fn new(flux: &PolygonalFlux<S>, profile: &Profile<S>) -> Self {
        let bps = profile.breakpoints();
        let pieces = profile.pieces();
        let mut anchors = Vec::with_capacity(bps.len());
        let mut acc = S::zero();
        for (j, b) in bps.iter().enumerate() {
            if j > 0 {
                acc = acc + flux.state(pieces[j]) * (*b - bps[j - 1]);
            }
            anchors.push(acc);
        }
        let mut oracle = HopfLax {
            flux: flux.clone(),
            legendre: flux.legendre(),
            profile: profile.clone(),
            anchors,
            origin: S::zero(),
        };
        oracle.origin = oracle.primitive(S::zero());
        oracle
    }

    fn primitive(&self, p: S) -> S {
        let bps = self.profile.breakpoints();
        let pieces = self.profile.pieces();
        if bps.is_empty() {
            return self.flux.state(pieces[0]) * p;
        }
        let j = bps.partition_point(|b| *b <= p);
        if j == 0 {
            self.flux.state(pieces[0]) * (p - bps[0])
        } else {
            self.anchors[j - 1] + self.flux.state(pieces[j]) * (p - bps[j - 1])
        }
    }

    /// Integrated data `G(p) = int_0^p g`.
    pub fn integrated(&self, p: S) -> S {
        self.primitive(p) - self.origin
    }

    pub fn legendre(&self) -> &LegendreTransform<S> {
        &self.legendre
    }

    pub fn problem(&self, x: S, t: S) -> Result<VariationalProblem<'_, S>, OracleError> {
        if !(t > S::zero()) {
            return Err(OracleError::NonpositiveTime);
        }
        Ok(VariationalProblem { oracle: self, x, t })
    }

    /// Solution state index at `(x, t)`.
    pub fn query(&self, x: S, t: S) -> Result<usize, OracleError> {
        Ok(self.problem(x, t)?.query())
    }
}

/// The minimization at one query point `(x, t)` with `t > 0`.
#[derive(Debug, Clone, Copy)]
pub struct VariationalProblem<'a, S> {
    oracle: &'a HopfLax<S>,
    x: S,
    t: S,
}

impl<S: Scalar> VariationalProblem<'_, S> {
    pub fn x(&self) -> S {
        self.x
    }

    pub fn t(&self) -> S {
        self.t
    }

    /// `I(p) = G(p) + t f*((x - p) / t)`.
    pub fn functional(&self, p: S) -> S {
        self.oracle.integrated(p) + self.t * self.oracle.legendre.eval((self.x - p) / self.t)
    }

    /// Kinks of `I`, ascending.
    pub fn candidates(&self) -> Vec<S> {
        self.tagged_candidates().into_iter().map(|(p, _)| p).collect()
    }

    /// Kinks with their origin. At equal positions a slope kink sorts after
    /// a breakpoint, so the backward scan for the largest minimizer sees it
    /// first.
    fn tagged_candidates(&self) -> Vec<(S, Kink)> {
        let mut out: Vec<(S, Kink)> = self
            .oracle
            .profile
            .breakpoints()
            .iter()
            .map(|b| (*b, Kink::Breakpoint))
            .collect();
        out.extend(
            self.oracle
                .flux
                .neighbor_slopes()
                .iter()
                .enumerate()
                .map(|(k, c)| (self.x - *c * self.t, Kink::Slope(k))),
        );
        out.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .expect("finite candidates")
                .then(a.1.cmp(&b.1))
        });
        out
    }

    /// `true` when `I` is constant to the right of its last kink.
    fn flat_right_tail(&self) -> bool {
        self.oracle.profile.rightmost() == 0
    }

    /// Largest minimizing kink and whether `a` was pushed past it into a
    /// flat right tail.
    fn minimizer(&self) -> ((S, Kink), bool) {
        let scored: Vec<((S, Kink), S)> = self
            .tagged_candidates()
            .into_iter()
            .map(|k| (k, self.functional(k.0)))
            .collect();
        let min = scored
            .iter()
            .fold(scored[0].1, |m, (_, v)| m.min_of(*v));
        let last = scored.len() - 1;
        let (i, (kink, _)) = scored
            .iter()
            .enumerate()
            .rev()
            .find(|(_, (_, v))| !min.definitely_lt(*v))
            .expect("minimum is attained at a kink");
        (*kink, i == last && self.flat_right_tail())
    }

    /// Largest minimizer `a(x, t)` of `I`.
    pub fn inverse_lagrangian(&self) -> S {
        let ((a, _), shifted) = self.minimizer();
        if shifted {
            a + self.t
        } else {
            a
        }
    }

    /// State `u_k` with `(x - a) / t` in `[c_{k-1}, c_k)`.
    ///
    /// When `a = x - c_k t` the slope is taken as `c_k` itself rather than
    /// recomputed, since `(x - a) / t` loses about `|x| eps / t` to
    /// cancellation.
    pub fn query(&self) -> usize {
        let ((a, kink), shifted) = self.minimizer();
        let q = match kink {
            Kink::Slope(k) => self.oracle.flux.neighbor_slopes()[k],
            Kink::Breakpoint => (self.x - a) / self.t,
        };
        let q = if shifted { q - S::one() } else { q };
        self.oracle.legendre.right_slope_index(q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kink {
    Breakpoint,
    /// `x - c_k t`.
    Slope(usize),
}
