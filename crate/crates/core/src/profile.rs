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

//! Right-continuous piecewise-constant state profiles and random generators
//! for them.
//!
//! States are referred to by their 0-based index into the flux's state list.
//! Text forms (the canonical serialization, CSV files) use 1-based labels.

use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::flux::PolygonalFlux;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("{pieces} pieces need {} breakpoints, got {breakpoints}", pieces.saturating_sub(1))]
    PieceCount { breakpoints: usize, pieces: usize },
    #[error("breakpoints must be strictly increasing (breakpoint {})", index + 1)]
    NonIncreasingBreakpoints { index: usize },
    #[error("piece {index} has state {state} but the flux has {num_states} states")]
    StateOutOfRange {
        index: usize,
        state: usize,
        num_states: usize,
    },
    #[error("pieces {index} and {} carry the same state", index + 1)]
    RedundantPiece { index: usize },
    #[error("upward jump from state {} to {} at breakpoint {} skips a state", from + 1, to + 1, index + 1)]
    InadmissibleUpJump { index: usize, from: usize, to: usize },
    #[error("random profile window is empty")]
    EmptyWindow,
    #[error("invalid random profile model: {0}")]
    InvalidModel(String),
    #[error("cannot parse profile: {0}")]
    Parse(String),
}

/// Piecewise-constant function of `x` with finitely many jumps.
///
/// `pieces[j]` is the state on `[breakpoints[j-1], breakpoints[j])`; the first
/// and last pieces extend to infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile<S> {
    breakpoints: Vec<S>,
    pieces: Vec<usize>,
}

/// Checks the admissibility rule on a single jump: upward jumps only go to
/// the next state, downward jumps are unrestricted.
#[inline]
pub fn admissible_jump(left: usize, right: usize) -> bool {
    left != right && (right < left || right == left + 1)
}

impl<S: Scalar> Profile<S> {
    pub fn new(
        breakpoints: Vec<S>,
        pieces: Vec<usize>,
        flux: &PolygonalFlux<S>,
    ) -> Result<Self, ProfileError> {
        Self::with_state_count(breakpoints, pieces, flux.len())
    }

    pub fn with_state_count(
        breakpoints: Vec<S>,
        pieces: Vec<usize>,
        num_states: usize,
    ) -> Result<Self, ProfileError> {
        if pieces.len() != breakpoints.len() + 1 {
            return Err(ProfileError::PieceCount {
                breakpoints: breakpoints.len(),
                pieces: pieces.len(),
            });
        }
        for (index, w) in breakpoints.windows(2).enumerate() {
            if !(w[0] < w[1]) {
                return Err(ProfileError::NonIncreasingBreakpoints { index: index + 1 });
            }
        }
        for (index, &state) in pieces.iter().enumerate() {
            if state >= num_states {
                return Err(ProfileError::StateOutOfRange {
                    index,
                    state,
                    num_states,
                });
            }
        }
        for (index, w) in pieces.windows(2).enumerate() {
            if w[0] == w[1] {
                return Err(ProfileError::RedundantPiece { index });
            }
            if !admissible_jump(w[0], w[1]) {
                return Err(ProfileError::InadmissibleUpJump {
                    index,
                    from: w[0],
                    to: w[1],
                });
            }
        }
        Ok(Profile {
            breakpoints,
            pieces,
        })
    }

    pub fn constant(state: usize) -> Self {
        Profile {
            breakpoints: Vec::new(),
            pieces: vec![state],
        }
    }

    pub fn breakpoints(&self) -> &[S] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[usize] {
        &self.pieces
    }

    pub fn num_jumps(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn leftmost(&self) -> usize {
        self.pieces[0]
    }

    pub fn rightmost(&self) -> usize {
        self.pieces[self.pieces.len() - 1]
    }

    /// `[x_1, x_J]`, or `None` for a constant profile.
    pub fn window(&self) -> Option<(S, S)> {
        Some((*self.breakpoints.first()?, *self.breakpoints.last()?))
    }

    /// Right-continuous value at `x`.
    pub fn eval(&self, x: S) -> usize {
        self.pieces[self.breakpoints.partition_point(|b| *b <= x)]
    }

    /// Limit from the left at `x`.
    pub fn eval_left(&self, x: S) -> usize {
        self.pieces[self.breakpoints.partition_point(|b| *b < x)]
    }

    /// Jumps as `(position, left state, right state)`.
    pub fn jumps(&self) -> impl Iterator<Item = (S, usize, usize)> + '_ {
        self.breakpoints
            .iter()
            .enumerate()
            .map(move |(j, x)| (*x, self.pieces[j], self.pieces[j + 1]))
    }

    /// `sum_j |u(x_j) - u(x_j-)|` in state units.
    pub fn total_variation(&self, flux: &PolygonalFlux<S>) -> S {
        self.jumps().fold(S::zero(), |acc, (_, l, r)| {
            acc + (flux.state(r) - flux.state(l)).abs()
        })
    }

    /// Exact `L1` distance between two profiles. `None` when the profiles
    /// disagree at infinity, where the distance is unbounded.
    pub fn l1_distance(&self, other: &Profile<S>, flux: &PolygonalFlux<S>) -> Option<S> {
        if self.leftmost() != other.leftmost() || self.rightmost() != other.rightmost() {
            return None;
        }
        let mut cuts: Vec<S> = self
            .breakpoints
            .iter()
            .chain(other.breakpoints.iter())
            .copied()
            .collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).expect("comparable breakpoints"));
        cuts.dedup();
        let mut total = S::zero();
        for w in cuts.windows(2) {
            // both profiles are constant on [w0, w1)
            let a = flux.state(self.eval(w[0]));
            let b = flux.state(other.eval(w[0]));
            total = total + (a - b).abs() * (w[1] - w[0]);
        }
        Some(total)
    }

    /// Canonical text form: pieces and breakpoints interleaved, states as
    /// 1-based labels, e.g. `3 @1 2 @2 1`.
    pub fn to_canonical(&self) -> String {
        let mut out = String::new();
        write!(out, "{}", self.pieces[0] + 1).unwrap();
        for (x, _, r) in self.jumps() {
            write!(out, " @{} {}", x, r + 1).unwrap();
        }
        out
    }

    pub fn parse_canonical(text: &str, num_states: usize) -> Result<Self, ProfileError> {
        let mut breakpoints = Vec::new();
        let mut pieces = Vec::new();
        for (i, tok) in text.split_whitespace().enumerate() {
            let expect_break = i % 2 == 1;
            match (expect_break, tok.strip_prefix('@')) {
                (true, Some(x)) => breakpoints.push(
                    x.parse::<S>()
                        .map_err(|_| ProfileError::Parse(format!("bad breakpoint {x:?}")))?,
                ),
                (false, None) => {
                    let label: usize = tok
                        .parse()
                        .map_err(|_| ProfileError::Parse(format!("bad state label {tok:?}")))?;
                    if label == 0 {
                        return Err(ProfileError::Parse("state labels start at 1".into()));
                    }
                    pieces.push(label - 1);
                }
                _ => return Err(ProfileError::Parse(format!("unexpected token {tok:?}"))),
            }
        }
        if pieces.is_empty() {
            return Err(ProfileError::Parse("empty profile".into()));
        }
        Self::with_state_count(breakpoints, pieces, num_states)
    }

    /// Converts the breakpoints to another scalar type.
    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(S) -> T) -> Profile<T> {
        Profile {
            breakpoints: self.breakpoints.iter().map(|x| f(*x)).collect(),
            pieces: self.pieces.clone(),
        }
    }

    /// Builds a profile from an ordered list of jumps, collapsing jumps that
    /// fall on the same position (within tolerance) into one.
    pub(crate) fn from_ordered_jumps(
        leftmost: usize,
        jumps: impl IntoIterator<Item = (S, usize)>,
        num_states: usize,
    ) -> Result<Self, ProfileError> {
        let mut breakpoints: Vec<S> = Vec::new();
        let mut pieces = vec![leftmost];
        for (x, right) in jumps {
            match breakpoints.last() {
                Some(last) if !last.definitely_lt(x) => {
                    let n = pieces.len();
                    pieces[n - 1] = right;
                    if pieces[n - 2] == right {
                        pieces.pop();
                        breakpoints.pop();
                    }
                }
                _ => {
                    breakpoints.push(x);
                    pieces.push(right);
                }
            }
        }
        Self::with_state_count(breakpoints, pieces, num_states)
    }
}

/// Kind of random initial data.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    /// The same profile for every realization.
    Deterministic(Profile<f64>),
    /// Cells of width `spacing` tiling the window; each cell value is drawn
    /// from `weights`, and a draw that would create an upward jump skipping a
    /// state is rejected and redrawn. Cells past the first are therefore not
    /// distributed exactly as `weights`.
    IidGrid { spacing: f64, weights: Vec<f64> },
    /// Jumps at rate `rate` inside the window; the initial state is drawn from
    /// `initial` and each new state from the row of `transition` restricted to
    /// admissible moves.
    MarkovJump {
        rate: f64,
        initial: Vec<f64>,
        transition: Vec<Vec<f64>>,
    },
}

/// Seeded generator of admissible initial profiles.
#[derive(Debug, Clone)]
pub struct RandomProfileModel {
    kind: ModelKind,
    window: (f64, f64),
    seed: u64,
    num_states: usize,
    cell: Option<WeightedIndex<f64>>,
    rows: Vec<Option<WeightedIndex<f64>>>,
}

fn weighted(weights: &[f64], what: &str) -> Result<WeightedIndex<f64>, ProfileError> {
    WeightedIndex::new(weights.iter().copied())
        .map_err(|e| ProfileError::InvalidModel(format!("{what}: {e}")))
}

impl RandomProfileModel {
    pub fn new(
        kind: ModelKind,
        window: (f64, f64),
        seed: u64,
        num_states: usize,
    ) -> Result<Self, ProfileError> {
        if !(window.0 < window.1) || !window.0.is_finite() || !window.1.is_finite() {
            return Err(ProfileError::EmptyWindow);
        }
        let mut cell = None;
        let mut rows = Vec::new();
        match &kind {
            ModelKind::Deterministic(p) => {
                if p.pieces().iter().any(|s| *s >= num_states) {
                    return Err(ProfileError::InvalidModel(
                        "deterministic profile uses a state outside the flux".into(),
                    ));
                }
            }
            ModelKind::IidGrid { spacing, weights } => {
                if !(*spacing > 0.0) || !spacing.is_finite() {
                    return Err(ProfileError::InvalidModel("spacing must be positive".into()));
                }
                if weights.len() != num_states {
                    return Err(ProfileError::InvalidModel(format!(
                        "expected {num_states} cell weights, got {}",
                        weights.len()
                    )));
                }
                cell = Some(weighted(weights, "cell weights")?);
            }
            ModelKind::MarkovJump {
                rate,
                initial,
                transition,
            } => {
                if !(*rate > 0.0) || !rate.is_finite() {
                    return Err(ProfileError::InvalidModel("rate must be positive".into()));
                }
                if initial.len() != num_states {
                    return Err(ProfileError::InvalidModel(format!(
                        "expected {num_states} initial weights, got {}",
                        initial.len()
                    )));
                }
                cell = Some(weighted(initial, "initial weights")?);
                if transition.len() != num_states
                    || transition.iter().any(|r| r.len() != num_states)
                {
                    return Err(ProfileError::InvalidModel(format!(
                        "transition matrix must be {num_states}x{num_states}"
                    )));
                }
                for (from, row) in transition.iter().enumerate() {
                    let restricted: Vec<f64> = row
                        .iter()
                        .enumerate()
                        .map(|(to, w)| if admissible_jump(from, to) { *w } else { 0.0 })
                        .collect();
                    // a row with no admissible mass makes its state absorbing
                    rows.push(WeightedIndex::new(restricted).ok());
                    if row.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
                        return Err(ProfileError::InvalidModel(format!(
                            "transition row {} has a negative or non-finite weight",
                            from + 1
                        )));
                    }
                }
            }
        }
        Ok(RandomProfileModel {
            kind,
            window,
            seed,
            num_states,
            cell,
            rows,
        })
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Per-realization generator: ChaCha8 keyed by the model seed, with the
    /// realization index as the stream number.
    pub fn rng_for(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    /// Realization `index`. A pure function of `(seed, index)`.
    pub fn sample(&self, index: u64) -> Result<Profile<f64>, ProfileError> {
        let mut rng = self.rng_for(index);
        let (a, b) = self.window;
        match &self.kind {
            ModelKind::Deterministic(p) => Ok(p.clone()),
            ModelKind::IidGrid { spacing, .. } => {
                let cell = self.cell.as_ref().expect("cell weights");
                let cells = (((b - a) / spacing).ceil() as usize).max(1);
                let mut breakpoints = Vec::new();
                let mut pieces = vec![cell.sample(&mut rng)];
                for k in 1..cells {
                    let prev = *pieces.last().unwrap();
                    let next = loop {
                        let s = cell.sample(&mut rng);
                        if s <= prev + 1 {
                            break s;
                        }
                    };
                    if next != prev {
                        breakpoints.push(a + k as f64 * spacing);
                        pieces.push(next);
                    }
                }
                Profile::with_state_count(breakpoints, pieces, self.num_states)
            }
            ModelKind::MarkovJump { rate, .. } => {
                let initial = self.cell.as_ref().expect("initial weights");
                let mut breakpoints = Vec::new();
                let mut pieces = vec![initial.sample(&mut rng)];
                let mut x = a;
                loop {
                    let u: f64 = rng.random();
                    let gap = -(1.0 - u).ln() / rate;
                    if gap <= 0.0 {
                        continue;
                    }
                    x += gap;
                    if x >= b {
                        break;
                    }
                    let prev = *pieces.last().unwrap();
                    if let Some(row) = &self.rows[prev] {
                        breakpoints.push(x);
                        pieces.push(row.sample(&mut rng));
                    }
                }
                Profile::with_state_count(breakpoints, pieces, self.num_states)
            }
        }
    }
}
