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

//! Convex polygonal flux functions.
//!
//! A flux is given by its values `f_i` at strictly increasing states
//! `u_1 < ... < u_M` and interpolated linearly in between. Only chord slopes
//! of this polygon ever appear as front speeds.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FluxError {
    #[error("states and flux values differ in length ({states} vs {values})")]
    LengthMismatch { states: usize, values: usize },
    #[error("a polygonal flux needs at least two states, got {0}")]
    TooFewStates(usize),
    #[error("states must be strictly increasing (index {index})")]
    NonIncreasingStates { index: usize },
    #[error("segment slopes must be strictly increasing (segment {index})")]
    NonConvex { index: usize },
    #[error("state index {index} out of range for {len} states")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("no shock between a state and itself (index {0})")]
    EqualStates(usize),
}

/// Convex piecewise-linear flux on `[u_1, u_M]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalFlux<S> {
    states: Vec<S>,
    values: Vec<S>,
    slopes: Vec<S>,
}

impl<S: Scalar> PolygonalFlux<S> {
    /// Builds the flux and its neighbor slopes, rejecting anything that is not
    /// strictly convex.
    pub fn new(states: Vec<S>, values: Vec<S>) -> Result<Self, FluxError> {
        if states.len() != values.len() {
            return Err(FluxError::LengthMismatch {
                states: states.len(),
                values: values.len(),
            });
        }
        if states.len() < 2 {
            return Err(FluxError::TooFewStates(states.len()));
        }
        for (i, w) in states.windows(2).enumerate() {
            if !(w[0] < w[1]) {
                return Err(FluxError::NonIncreasingStates { index: i + 1 });
            }
        }
        let slopes: Vec<S> = (0..states.len() - 1)
            .map(|k| (values[k + 1] - values[k]) / (states[k + 1] - states[k]))
            .collect();
        for (i, w) in slopes.windows(2).enumerate() {
            if !w[0].definitely_lt(w[1]) {
                return Err(FluxError::NonConvex { index: i + 1 });
            }
        }
        Ok(PolygonalFlux {
            states,
            values,
            slopes,
        })
    }

    /// Number of states `M`.
    #[inline]
    pub fn len(&self) -> usize {
        self.states.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    #[inline]
    pub fn state(&self, i: usize) -> S {
        self.states[i]
    }

    #[inline]
    pub fn value(&self, i: usize) -> S {
        self.values[i]
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// `c_k = (f_{k+1} - f_k) / (u_{k+1} - u_k)` for `k = 0..M-1`.
    pub fn neighbor_slopes(&self) -> &[S] {
        &self.slopes
    }

    /// Rankine-Hugoniot speed of a front joining states `i` and `j`.
    pub fn rh_speed(&self, i: usize, j: usize) -> Result<S, FluxError> {
        let len = self.len();
        for index in [i, j] {
            if index >= len {
                return Err(FluxError::IndexOutOfRange { index, len });
            }
        }
        if i == j {
            return Err(FluxError::EqualStates(i));
        }
        Ok(self.chord(i, j))
    }

    /// Chord slope without checks. Symmetric by construction: the lower
    /// index always goes first so `chord(i, j)` and `chord(j, i)` are
    /// bitwise equal.
    #[inline]
    pub(crate) fn chord(&self, i: usize, j: usize) -> S {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        if b == a + 1 {
            return self.slopes[a];
        }
        (self.values[b] - self.values[a]) / (self.states[b] - self.states[a])
    }

    /// Lipschitz constant `max_k |c_k|`.
    pub fn lipschitz(&self) -> S {
        self.slopes
            .iter()
            .fold(S::zero(), |acc, c| acc.max_of(c.abs()))
    }

    pub fn speed_table(&self) -> SpeedTable<S> {
        SpeedTable::new(self)
    }

    pub fn legendre(&self) -> LegendreTransform<S> {
        LegendreTransform::new(self)
    }

    /// Linear interpolation of the flux at `u`; `None` outside `[u_1, u_M]`.
    pub fn eval(&self, u: S) -> Option<S> {
        if u < self.states[0] || u > self.states[self.len() - 1] {
            return None;
        }
        let k = self.states.partition_point(|s| *s <= u).clamp(1, self.len() - 1) - 1;
        Some(self.values[k] + self.slopes[k] * (u - self.states[k]))
    }
}

/// Pairwise Rankine-Hugoniot speeds `c_{uv}`, precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedTable<S> {
    len: usize,
    speeds: Vec<S>,
}

impl<S: Scalar> SpeedTable<S> {
    fn new(flux: &PolygonalFlux<S>) -> Self {
        let len = flux.len();
        let mut speeds = vec![S::zero(); len * len];
        for i in 0..len {
            for j in 0..len {
                if i != j {
                    speeds[i * len + j] = flux.chord(i, j);
                }
            }
        }
        SpeedTable { len, speeds }
    }

    /// `None` on the diagonal, where no front exists.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Option<S> {
        if i == j || i >= self.len || j >= self.len {
            None
        } else {
            Some(self.speeds[i * self.len + j])
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Legendre transform `f*(q) = max_i (q u_i - f_i)` of a polygonal flux.
///
/// `f*` is piecewise linear with kinks at the neighbor slopes `c_k` and takes
/// slope `u_k` on `[c_{k-1}, c_k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreTransform<S> {
    breakpoints: Vec<S>,
    node_values: Vec<S>,
    states: Vec<S>,
    values: Vec<S>,
}

impl<S: Scalar> LegendreTransform<S> {
    fn new(flux: &PolygonalFlux<S>) -> Self {
        let breakpoints = flux.neighbor_slopes().to_vec();
        let node_values = breakpoints
            .iter()
            .enumerate()
            .map(|(k, c)| *c * flux.state(k) - flux.value(k))
            .collect();
        LegendreTransform {
            breakpoints,
            node_values,
            states: flux.states().to_vec(),
            values: flux.values().to_vec(),
        }
    }

    pub fn breakpoints(&self) -> &[S] {
        &self.breakpoints
    }

    /// `f*(c_k)` for each breakpoint.
    pub fn node_values(&self) -> &[S] {
        &self.node_values
    }

    /// Range of slopes taken by `f*`.
    pub fn slope_range(&self) -> (S, S) {
        (self.states[0], self.states[self.states.len() - 1])
    }

    /// Index of the state whose supporting line is active at `q`.
    #[inline]
    fn active(&self, q: S) -> usize {
        self.breakpoints.partition_point(|c| *c < q)
    }

    pub fn eval(&self, q: S) -> S {
        let i = self.active(q);
        q * self.states[i] - self.values[i]
    }

    /// Value together with every node index attaining the maximum.
    pub fn eval_with_argmax(&self, q: S) -> (S, Vec<usize>) {
        let i = self.active(q);
        let mut attained = Vec::with_capacity(2);
        if i > 0 && q.approx_eq(self.breakpoints[i - 1]) {
            attained.push(i - 1);
        }
        attained.push(i);
        if i < self.breakpoints.len() && q.approx_eq(self.breakpoints[i]) {
            attained.push(i + 1);
        }
        (q * self.states[i] - self.values[i], attained)
    }

    /// Index `k` of the right derivative `u_k` of `f*` at `q`, i.e. the `k`
    /// with `q` in `[c_{k-1}, c_k)`. Values within tolerance of a breakpoint
    /// are snapped onto it.
    pub fn right_slope_index(&self, q: S) -> usize {
        self.breakpoints
            .partition_point(|c| !q.definitely_lt(*c))
    }
}
