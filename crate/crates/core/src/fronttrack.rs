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

//! Exact event-driven front tracking.
//!
//! Every jump of the initial profile becomes a front moving at its
//! Rankine-Hugoniot speed. When two adjacent fronts meet they merge into one
//! front joining the outer states. With admissible data no rarefactions ever
//! appear, so this is the whole entropy solution.

use thiserror::Error;

use crate::flux::{PolygonalFlux, SpeedTable};
use crate::profile::{admissible_jump, Profile, ProfileError};
use crate::scalar::Scalar;

/// Ordered `(left state, right state)` pair labelling a front.
pub type Species = (usize, usize);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("three or more fronts meet at t={t}, x={x}")]
    TripleCollision { t: f64, x: f64 },
    #[error("merge at t={t} produced the inadmissible front ({}, {})", species.0 + 1, species.1 + 1)]
    InadmissibleMerge { t: f64, species: Species },
    #[error("time {t} is outside the solved horizon")]
    OutOfHorizon { t: f64 },
    #[error("horizon must be positive")]
    NonpositiveHorizon,
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon<S> {
    Finite(S),
    /// Run until no adjacent pair can catch up.
    Infinite,
}

impl<S: Scalar> Horizon<S> {
    pub fn contains(&self, t: S) -> bool {
        match self {
            Horizon::Finite(end) => t <= *end,
            Horizon::Infinite => true,
        }
    }
}

/// What to do when three fronts meet at one point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TriplePolicy {
    /// Merge the leftmost pair first, then re-test; flagged in the event log.
    #[default]
    Resolve,
    Reject,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Front<S> {
    pub id: usize,
    pub left: usize,
    pub right: usize,
    pub speed: S,
    pub birth_t: S,
    pub birth_x: S,
    /// `None` while the front survives to the horizon.
    pub death_t: Option<S>,
    /// Fronts merged to create this one; `None` for fronts present at `t = 0`.
    pub parents: Option<(usize, usize)>,
}

impl<S: Scalar> Front<S> {
    #[inline]
    pub fn species(&self) -> Species {
        (self.left, self.right)
    }

    #[inline]
    pub fn position(&self, t: S) -> S {
        self.birth_x + self.speed * (t - self.birth_t)
    }

    /// Position the trajectory line would have at `t = 0`.
    #[inline]
    fn intercept(&self) -> S {
        self.birth_x - self.speed * self.birth_t
    }

    /// Alive on `[birth_t, death_t)`.
    pub fn alive_at(&self, t: S) -> bool {
        self.birth_t <= t && self.death_t.map_or(true, |d| t < d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionEvent<S> {
    pub t: S,
    pub x: S,
    pub left_id: usize,
    pub right_id: usize,
    pub created_id: usize,
    pub left: Species,
    pub right: Species,
    pub created: Species,
    /// Part of a coincidence of three or more fronts.
    pub triple: bool,
}

/// Earliest meeting of an adjacent pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Collision<S> {
    pub t: S,
    pub x: S,
    /// Position of the left front of the pair within the ordered alive list.
    pub pair: usize,
}

/// Meeting time and place of `left` and `right`, if `left` is faster.
fn meeting<S: Scalar>(left: &Front<S>, right: &Front<S>, now: S) -> Option<(S, S)> {
    if !(left.speed > right.speed) {
        return None;
    }
    let t = (right.intercept() - left.intercept()) / (left.speed - right.speed);
    let t = t.max_of(now);
    Some((t, left.position(t)))
}

/// Earliest catch-up among adjacent pairs of `alive` (ordered left to right)
/// at or after `now`. Ties within tolerance go to the leftmost position, then
/// to the lowest front id.
pub fn next_collision<S: Scalar>(alive: &[&Front<S>], now: S) -> Option<Collision<S>> {
    let mut best: Option<(Collision<S>, usize)> = None;
    for (pair, w) in alive.windows(2).enumerate() {
        let Some((t, x)) = meeting(w[0], w[1], now) else {
            continue;
        };
        let id = w[0].id;
        let better = match &best {
            None => true,
            Some((b, bid)) => {
                if t.definitely_lt(b.t) {
                    true
                } else if b.t.definitely_lt(t) {
                    false
                } else if x.definitely_lt(b.x) {
                    true
                } else if b.x.definitely_lt(x) {
                    false
                } else {
                    id < *bid
                }
            }
        };
        if better {
            best = Some((Collision { t, x, pair }, id));
        }
    }
    best.map(|(c, _)| c)
}

/// Piecewise-constant entropy solution for one initial profile.
#[derive(Debug, Clone)]
pub struct FrontSolution<S> {
    flux: PolygonalFlux<S>,
    initial: Profile<S>,
    fronts: Vec<Front<S>>,
    events: Vec<CollisionEvent<S>>,
    /// Left-to-right order of alive fronts, valid from the paired time on.
    epochs: Vec<(S, Vec<usize>)>,
    horizon: Horizon<S>,
}

pub fn solve<S: Scalar>(
    flux: &PolygonalFlux<S>,
    profile: &Profile<S>,
    horizon: Horizon<S>,
) -> Result<FrontSolution<S>, SolveError> {
    solve_with(flux, profile, horizon, TriplePolicy::Resolve)
}

pub fn solve_with<S: Scalar>(
    flux: &PolygonalFlux<S>,
    profile: &Profile<S>,
    horizon: Horizon<S>,
    policy: TriplePolicy,
) -> Result<FrontSolution<S>, SolveError> {
    if let Horizon::Finite(end) = horizon {
        if !(end > S::zero()) {
            return Err(SolveError::NonpositiveHorizon);
        }
    }
    let speeds: SpeedTable<S> = flux.speed_table();
    let speed = |s: Species| speeds.get(s.0, s.1).expect("fronts join distinct states");

    let mut fronts: Vec<Front<S>> = profile
        .jumps()
        .enumerate()
        .map(|(id, (x, l, r))| Front {
            id,
            left: l,
            right: r,
            speed: speed((l, r)),
            birth_t: S::zero(),
            birth_x: x,
            death_t: None,
            parents: None,
        })
        .collect();
    let mut order: Vec<usize> = (0..fronts.len()).collect();
    let mut epochs = vec![(S::zero(), order.clone())];
    let mut events: Vec<CollisionEvent<S>> = Vec::new();
    let mut now = S::zero();

    loop {
        let (hit, triple) = {
            let alive: Vec<&Front<S>> = order.iter().map(|id| &fronts[*id]).collect();
            let Some(hit) = next_collision(&alive, now) else {
                break;
            };
            if !horizon.contains(hit.t) {
                break;
            }
            let coincides = |l: usize| {
                l + 1 < alive.len()
                    && meeting(alive[l], alive[l + 1], now)
                        .is_some_and(|(t, x)| t.approx_eq(hit.t) && x.approx_eq(hit.x))
            };
            let neighbor = (hit.pair > 0 && coincides(hit.pair - 1)) || coincides(hit.pair + 1);
            let chained = [alive[hit.pair], alive[hit.pair + 1]]
                .iter()
                .any(|f| f.parents.is_some() && f.birth_t.approx_eq(hit.t) && f.birth_x.approx_eq(hit.x));
            (hit, neighbor || chained)
        };
        if triple && policy == TriplePolicy::Reject {
            return Err(SolveError::TripleCollision {
                t: hit.t.to_f64(),
                x: hit.x.to_f64(),
            });
        }

        let left_id = order[hit.pair];
        let right_id = order[hit.pair + 1];
        let left = fronts[left_id].species();
        let right = fronts[right_id].species();
        debug_assert_eq!(left.1, right.0, "adjacent fronts share their middle state");
        let created = (left.0, right.1);
        if !admissible_jump(created.0, created.1) {
            return Err(SolveError::InadmissibleMerge {
                t: hit.t.to_f64(),
                species: created,
            });
        }
        let created_id = fronts.len();
        fronts[left_id].death_t = Some(hit.t);
        fronts[right_id].death_t = Some(hit.t);
        fronts.push(Front {
            id: created_id,
            left: created.0,
            right: created.1,
            speed: speed(created),
            birth_t: hit.t,
            birth_x: hit.x,
            death_t: None,
            parents: Some((left_id, right_id)),
        });
        if triple {
            // the earlier half of a resolved coincidence is flagged too
            if let Some(prev) = events
                .iter_mut()
                .rev()
                .take_while(|e| e.t.approx_eq(hit.t))
                .find(|e| e.x.approx_eq(hit.x))
            {
                prev.triple = true;
            }
        }
        events.push(CollisionEvent {
            t: hit.t,
            x: hit.x,
            left_id,
            right_id,
            created_id,
            left,
            right,
            created,
            triple,
        });
        order.splice(hit.pair..hit.pair + 2, [created_id]);
        epochs.push((hit.t, order.clone()));
        now = hit.t;
    }

    Ok(FrontSolution {
        flux: flux.clone(),
        initial: profile.clone(),
        fronts,
        events,
        epochs,
        horizon,
    })
}

impl<S: Scalar> FrontSolution<S> {
    pub fn flux(&self) -> &PolygonalFlux<S> {
        &self.flux
    }

    pub fn initial(&self) -> &Profile<S> {
        &self.initial
    }

    /// All fronts, dead and alive, indexed by id.
    pub fn fronts(&self) -> &[Front<S>] {
        &self.fronts
    }

    /// Collision events in chronological order.
    pub fn events(&self) -> &[CollisionEvent<S>] {
        &self.events
    }

    pub fn horizon(&self) -> Horizon<S> {
        self.horizon
    }

    pub fn first_event_time(&self) -> Option<S> {
        self.events.first().map(|e| e.t)
    }

    /// Fronts still alive at the end of the run.
    pub fn survivors(&self) -> impl Iterator<Item = &Front<S>> {
        self.fronts.iter().filter(|f| f.death_t.is_none())
    }

    fn check_time(&self, t: S) -> Result<(), SolveError> {
        if t < S::zero() || !self.horizon.contains(t) {
            return Err(SolveError::OutOfHorizon { t: t.to_f64() });
        }
        Ok(())
    }

    /// Alive fronts at `t`, left to right.
    pub fn alive_at(&self, t: S) -> Result<Vec<&Front<S>>, SolveError> {
        self.check_time(t)?;
        let epoch = self.epochs.partition_point(|(start, _)| *start <= t) - 1;
        Ok(self.epochs[epoch].1.iter().map(|id| &self.fronts[*id]).collect())
    }

    /// Right-continuous solution value at `(x, t)`.
    pub fn query(&self, x: S, t: S) -> Result<usize, SolveError> {
        let mut state = self.initial.leftmost();
        for f in self.alive_at(t)? {
            if f.position(t) <= x {
                state = f.right;
            } else {
                break;
            }
        }
        Ok(state)
    }

    /// Limit from the left at `(x, t)`.
    pub fn query_left(&self, x: S, t: S) -> Result<usize, SolveError> {
        let mut state = self.initial.leftmost();
        for f in self.alive_at(t)? {
            if f.position(t) < x {
                state = f.right;
            } else {
                break;
            }
        }
        Ok(state)
    }

    /// Solution profile at time `t`.
    pub fn slice(&self, t: S) -> Result<Profile<S>, SolveError> {
        let alive = self.alive_at(t)?;
        Ok(Profile::from_ordered_jumps(
            self.initial.leftmost(),
            alive.iter().map(|f| (f.position(t), f.right)),
            self.flux.len(),
        )?)
    }

    /// Distance from `x` to the nearest alive front at `t`.
    pub fn distance_to_front(&self, x: S, t: S) -> Result<Option<S>, SolveError> {
        Ok(self
            .alive_at(t)?
            .iter()
            .map(|f| (f.position(t) - x).abs())
            .fold(None, |acc: Option<S>, d| Some(acc.map_or(d, |a| a.min_of(d)))))
    }
}
