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

//! Seeded ensembles and empirical n-point statistics.
//!
//! Point-value statistics (`p_1`, `p_2` and tail CDFs) are counts of
//! solution values on a position grid. Shock statistics use the same grid as
//! box edges: per-box front counts give the atomic `f_1` mass, and the net
//! `(entering, leaving)` state pair of each box gives a discrete two-slot
//! `f_2` whose marginals are exact at the counting level.
//!
//! All tallies are integer counts, so merging partial results is associative
//! and commutative and the outcome does not depend on scheduling.

use std::collections::BTreeMap;
use std::ops::Range;

use rayon::prelude::*;
use thiserror::Error;

use crate::flux::PolygonalFlux;
use crate::fronttrack::{solve, CollisionEvent, Horizon, SolveError, Species};
use crate::profile::{ProfileError, RandomProfileModel};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("invalid ensemble spec: {0}")]
    InvalidSpec(String),
    #[error("query is not covered by the estimate: {0}")]
    NotCovered(String),
    #[error("realization {index}: {source}")]
    Solve { index: u64, source: SolveError },
    #[error("realization {index}: {source}")]
    Sample { index: u64, source: ProfileError },
    #[error("cannot merge estimates built on different grids")]
    IncompatibleMerge,
    #[error("failed to start worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub model: RandomProfileModel,
    pub realizations: u64,
    pub times: Vec<f64>,
    pub x_grid: Vec<f64>,
    /// 1 or 2.
    pub max_order: usize,
    /// Box widths for the coincidence statistic, largest first.
    pub coincidence_widths: Vec<f64>,
    pub horizon: Horizon<f64>,
    pub keep_archive: bool,
}

impl EnsembleSpec {
    pub fn new(model: RandomProfileModel, realizations: u64, times: Vec<f64>, x_grid: Vec<f64>) -> Self {
        let horizon = times
            .iter()
            .copied()
            .fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.max(t))))
            .filter(|t| *t > 0.0)
            .map_or(Horizon::Infinite, Horizon::Finite);
        let spacing = x_grid.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let coincidence_widths = if spacing.is_finite() {
            vec![spacing, spacing / 2.0, spacing / 4.0]
        } else {
            Vec::new()
        };
        EnsembleSpec {
            model,
            realizations,
            times,
            x_grid,
            max_order: 2,
            coincidence_widths,
            horizon,
            keep_archive: false,
        }
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        let bad = |m: &str| Err(StatsError::InvalidSpec(m.to_string()));
        if self.realizations == 0 {
            return bad("at least one realization is required");
        }
        if self.times.is_empty() || self.times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return bad("times must be a non-empty list of finite values >= 0");
        }
        if self.times.iter().any(|t| !self.horizon.contains(*t)) {
            return bad("every query time must lie within the horizon");
        }
        if self.x_grid.is_empty() || self.x_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("x_grid must be non-empty and strictly increasing");
        }
        if !(1..=2).contains(&self.max_order) {
            return bad("max_order must be 1 or 2");
        }
        if self.coincidence_widths.iter().any(|w| !(*w > 0.0)) {
            return bad("coincidence widths must be positive");
        }
        Ok(())
    }

    fn num_boxes(&self) -> usize {
        self.x_grid.len().saturating_sub(1)
    }
}

fn find_index(values: &[f64], v: f64, what: &str) -> Result<usize, StatsError> {
    values
        .iter()
        .position(|w| w.approx_eq(v))
        .ok_or_else(|| StatsError::NotCovered(format!("{what} {v} is not on the grid")))
}

#[inline]
fn pair_index(i: usize, j: usize, n: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Counts of solution values at grid points (`p_1`) and grid point pairs
/// (`p_2`, for `x_i < x_j`).
#[derive(Debug, Clone, PartialEq)]
pub struct PointEstimate {
    times: Vec<f64>,
    xs: Vec<f64>,
    num_states: usize,
    max_order: usize,
    realizations: u64,
    one: Vec<u64>,
    two: Vec<u64>,
}

impl PointEstimate {
    fn empty(spec: &EnsembleSpec, num_states: usize) -> Self {
        let (t, x, m) = (spec.times.len(), spec.x_grid.len(), num_states);
        let pairs = if spec.max_order >= 2 { x * x.saturating_sub(1) / 2 } else { 0 };
        PointEstimate {
            times: spec.times.clone(),
            xs: spec.x_grid.clone(),
            num_states,
            max_order: spec.max_order,
            realizations: 0,
            one: vec![0; t * x * m],
            two: vec![0; t * pairs * m * m],
        }
    }

    fn pairs(&self) -> usize {
        if self.max_order >= 2 {
            self.xs.len() * self.xs.len().saturating_sub(1) / 2
        } else {
            0
        }
    }

    fn record(&mut self, ti: usize, values: &[usize]) {
        let (x, m) = (self.xs.len(), self.num_states);
        for (xi, s) in values.iter().enumerate() {
            self.one[(ti * x + xi) * m + s] += 1;
        }
        let pairs = self.pairs();
        if pairs > 0 {
            for i in 0..x {
                for j in i + 1..x {
                    let k = ti * pairs + pair_index(i, j, x);
                    self.two[k * m * m + values[i] * m + values[j]] += 1;
                }
            }
        }
    }

    pub fn merge(&mut self, other: &PointEstimate) -> Result<(), StatsError> {
        if self.times != other.times
            || self.xs != other.xs
            || self.num_states != other.num_states
            || self.max_order != other.max_order
        {
            return Err(StatsError::IncompatibleMerge);
        }
        self.realizations += other.realizations;
        self.one.iter_mut().zip(&other.one).for_each(|(a, b)| *a += b);
        self.two.iter_mut().zip(&other.two).for_each(|(a, b)| *a += b);
        Ok(())
    }

    pub fn realizations(&self) -> u64 {
        self.realizations
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn count(&self, ti: usize, xi: usize, state: usize) -> u64 {
        self.one[(ti * self.xs.len() + xi) * self.num_states + state]
    }

    /// Joint count at grid indices `xi < xj`.
    pub fn pair_count(&self, ti: usize, xi: usize, xj: usize, si: usize, sj: usize) -> Option<u64> {
        if self.pairs() == 0 || xi >= xj {
            return None;
        }
        let m = self.num_states;
        let k = ti * self.pairs() + pair_index(xi, xj, self.xs.len());
        Some(self.two[k * m * m + si * m + sj])
    }

    pub fn p1(&self, t: f64, x: f64, state: usize) -> Result<f64, StatsError> {
        let ti = find_index(&self.times, t, "time")?;
        let xi = find_index(&self.xs, x, "position")?;
        Ok(self.count(ti, xi, state) as f64 / self.realizations as f64)
    }

    /// Empirical tail CDF `P{u(x_i, t) >= u_{k_i + 1} for all i}`, with `k`
    /// counted from 0 so that `k = 0` is the whole space and `k = M` is empty.
    pub fn estimate_f(&self, t: f64, xs: &[f64], ks: &[usize]) -> Result<f64, StatsError> {
        if xs.len() != ks.len() || xs.is_empty() || xs.len() > 2 {
            return Err(StatsError::NotCovered(
                "tail CDFs are estimated for one or two points".into(),
            ));
        }
        if let Some(k) = ks.iter().find(|k| **k > self.num_states) {
            return Err(StatsError::NotCovered(format!("threshold {k} exceeds the state count")));
        }
        let ti = find_index(&self.times, t, "time")?;
        let m = self.num_states;
        let n = self.realizations as f64;
        let xi = find_index(&self.xs, xs[0], "position")?;
        if xs.len() == 1 {
            let c: u64 = (ks[0]..m).map(|s| self.count(ti, xi, s)).sum();
            return Ok(c as f64 / n);
        }
        let xj = find_index(&self.xs, xs[1], "position")?;
        let (a, b, ka, kb) = match xi.cmp(&xj) {
            std::cmp::Ordering::Less => (xi, xj, ks[0], ks[1]),
            std::cmp::Ordering::Greater => (xj, xi, ks[1], ks[0]),
            std::cmp::Ordering::Equal => {
                let k = ks[0].max(ks[1]);
                let c: u64 = (k..m).map(|s| self.count(ti, xi, s)).sum();
                return Ok(c as f64 / n);
            }
        };
        if self.pairs() == 0 {
            return Err(StatsError::NotCovered("two-point statistics were not collected".into()));
        }
        let mut c = 0u64;
        for sa in ka..m {
            for sb in kb..m {
                c += self.pair_count(ti, a, b, sa, sb).unwrap();
            }
        }
        Ok(c as f64 / n)
    }

    /// `(t, x, state, count)` for every nonzero one-point count.
    pub fn one_point_rows(&self) -> impl Iterator<Item = (f64, f64, usize, u64)> + '_ {
        let (x, m) = (self.xs.len(), self.num_states);
        (0..self.times.len()).flat_map(move |ti| {
            (0..x).flat_map(move |xi| {
                (0..m).filter_map(move |s| {
                    let c = self.count(ti, xi, s);
                    (c > 0).then_some((self.times[ti], self.xs[xi], s, c))
                })
            })
        })
    }

    /// `(t, x, y, state_x, state_y, count)` for every nonzero pair count.
    pub fn two_point_rows(&self) -> Vec<(f64, f64, f64, usize, usize, u64)> {
        let (x, m) = (self.xs.len(), self.num_states);
        let mut out = Vec::new();
        if self.pairs() == 0 {
            return out;
        }
        for ti in 0..self.times.len() {
            for i in 0..x {
                for j in i + 1..x {
                    for si in 0..m {
                        for sj in 0..m {
                            let c = self.pair_count(ti, i, j, si, sj).unwrap();
                            if c > 0 {
                                out.push((self.times[ti], self.xs[i], self.xs[j], si, sj, c));
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Key of a two-box count: time index, first box, second box, net pair of
/// the first box (always a shock), net pair of the second box.
pub type BoxPairKey = (usize, usize, usize, Species, Species);

/// Box-counting statistics of shock species.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockEstimate {
    times: Vec<f64>,
    edges: Vec<f64>,
    num_states: usize,
    max_order: usize,
    widths: Vec<f64>,
    realizations: u64,
    /// `[t][box][u * M + v]` front counts.
    fronts: Vec<u64>,
    /// `[t][box][u * M + v]` net box pairs, `u == v` meaning no net jump.
    nets: Vec<u64>,
    pairs: BTreeMap<BoxPairKey, u64>,
    /// `(t, width index, species, species)` ordered pairs of distinct fronts
    /// of unequal species sharing a box.
    coincidences: BTreeMap<(usize, usize, Species, Species), u64>,
}

impl ShockEstimate {
    fn empty(spec: &EnsembleSpec, num_states: usize) -> Self {
        let cells = spec.times.len() * spec.num_boxes() * num_states * num_states;
        ShockEstimate {
            times: spec.times.clone(),
            edges: spec.x_grid.clone(),
            num_states,
            max_order: spec.max_order,
            widths: spec.coincidence_widths.clone(),
            realizations: 0,
            fronts: vec![0; cells],
            nets: vec![0; cells],
            pairs: BTreeMap::new(),
            coincidences: BTreeMap::new(),
        }
    }

    fn num_boxes(&self) -> usize {
        self.edges.len().saturating_sub(1)
    }

    #[inline]
    fn cell(&self, ti: usize, b: usize, s: Species) -> usize {
        let m = self.num_states;
        ((ti * self.num_boxes() + b) * m + s.0) * m + s.1
    }

    pub fn merge(&mut self, other: &ShockEstimate) -> Result<(), StatsError> {
        if self.times != other.times
            || self.edges != other.edges
            || self.num_states != other.num_states
            || self.widths != other.widths
            || self.max_order != other.max_order
        {
            return Err(StatsError::IncompatibleMerge);
        }
        self.realizations += other.realizations;
        self.fronts.iter_mut().zip(&other.fronts).for_each(|(a, b)| *a += b);
        self.nets.iter_mut().zip(&other.nets).for_each(|(a, b)| *a += b);
        for (k, v) in &other.pairs {
            *self.pairs.entry(*k).or_insert(0) += v;
        }
        for (k, v) in &other.coincidences {
            *self.coincidences.entry(*k).or_insert(0) += v;
        }
        Ok(())
    }

    pub fn realizations(&self) -> u64 {
        self.realizations
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn front_count(&self, ti: usize, b: usize, s: Species) -> u64 {
        self.fronts[self.cell(ti, b, s)]
    }

    pub fn net_count(&self, ti: usize, b: usize, s: Species) -> u64 {
        self.nets[self.cell(ti, b, s)]
    }

    pub fn pair_counts(&self) -> &BTreeMap<BoxPairKey, u64> {
        &self.pairs
    }

    pub fn coincidence_counts(&self) -> &BTreeMap<(usize, usize, Species, Species), u64> {
        &self.coincidences
    }

    /// Expected number of `species` fronts per realization in `[lo, hi)`,
    /// where `lo` and `hi` are grid edges.
    pub fn estimate_shock_density(&self, species: Species, t: f64, lo: f64, hi: f64) -> Result<f64, StatsError> {
        let ti = find_index(&self.times, t, "time")?;
        let a = find_index(&self.edges, lo, "box edge")?;
        let b = find_index(&self.edges, hi, "box edge")?;
        if a >= b {
            return Err(StatsError::NotCovered(format!("empty box [{lo}, {hi})")));
        }
        if species.0 >= self.num_states || species.1 >= self.num_states {
            return Err(StatsError::NotCovered("species outside the state set".into()));
        }
        if species.0 == species.1 {
            return Ok(0.0);
        }
        let c: u64 = (a..b).map(|bx| self.front_count(ti, bx, species)).sum();
        Ok(c as f64 / self.realizations as f64)
    }

    /// Mass of ordered front pairs with unequal species sharing a box, per
    /// realization, for each coincidence width at time index `ti`.
    pub fn coincidence_mass(&self, ti: usize) -> Vec<f64> {
        (0..self.widths.len())
            .map(|wi| {
                let c: u64 = self
                    .coincidences
                    .range((ti, wi, (0, 0), (0, 0))..(ti, wi + 1, (0, 0), (0, 0)))
                    .map(|(_, v)| *v)
                    .sum();
                c as f64 / self.realizations as f64
            })
            .collect()
    }

    /// Same as [`coincidence_mass`](Self::coincidence_mass) restricted to one
    /// ordered species pair.
    pub fn coincidence_mass_for(&self, ti: usize, a: Species, b: Species) -> Vec<f64> {
        (0..self.widths.len())
            .map(|wi| {
                let c = self.coincidences.get(&(ti, wi, a, b)).copied().unwrap_or(0);
                c as f64 / self.realizations as f64
            })
            .collect()
    }
}

/// Outcome of [`check_compatibility`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityReport {
    /// `(first box, species)` marginals compared.
    pub marginals_checked: usize,
    /// Marginals where summing the second slot did not reproduce the single
    /// count exactly.
    pub marginal_mismatches: Vec<(f64, usize, usize, Species, u64, u64)>,
    /// Per time: coincidence mass at each width.
    pub coincidence: Vec<(f64, Vec<f64>)>,
    pub coincidence_monotone: bool,
}

impl CompatibilityReport {
    pub fn passed(&self) -> bool {
        self.marginal_mismatches.is_empty() && self.coincidence_monotone
    }
}

/// Checks the two-box marginalization identity exactly and that the
/// coincidence mass does not grow as boxes shrink.
pub fn check_compatibility(est: &ShockEstimate) -> CompatibilityReport {
    let mut sums: BTreeMap<(usize, usize, usize, Species), u64> = BTreeMap::new();
    for ((ti, b1, b2, s1, _), v) in &est.pairs {
        *sums.entry((*ti, *b1, *b2, *s1)).or_insert(0) += v;
    }
    let boxes = est.num_boxes();
    let m = est.num_states;
    let mut checked = 0;
    let mut mismatches = Vec::new();
    if est.max_order >= 2 {
        for ti in 0..est.times.len() {
            for b1 in 0..boxes {
                for u in 0..m {
                    for v in 0..m {
                        if u == v {
                            continue;
                        }
                        let single = est.net_count(ti, b1, (u, v));
                        for b2 in (0..boxes).filter(|b| *b != b1) {
                            checked += 1;
                            let summed = sums.get(&(ti, b1, b2, (u, v))).copied().unwrap_or(0);
                            if summed != single {
                                mismatches.push((est.times[ti], b1, b2, (u, v), summed, single));
                            }
                        }
                    }
                }
            }
        }
    }
    let coincidence: Vec<(f64, Vec<f64>)> = (0..est.times.len())
        .map(|ti| (est.times[ti], est.coincidence_mass(ti)))
        .collect();
    let coincidence_monotone = coincidence
        .iter()
        .all(|(_, masses)| masses.windows(2).all(|w| w[1] <= w[0]));
    CompatibilityReport {
        marginals_checked: checked,
        marginal_mismatches: mismatches,
        coincidence,
        coincidence_monotone,
    }
}

/// Everything produced by an ensemble run.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub point: PointEstimate,
    pub shock: ShockEstimate,
    /// Collision events per realization index, ascending; empty unless the
    /// spec asks to keep the archive.
    pub archive: Vec<(u64, Vec<CollisionEvent<f64>>)>,
}

impl EnsembleResult {
    fn empty(spec: &EnsembleSpec, num_states: usize) -> Self {
        EnsembleResult {
            point: PointEstimate::empty(spec, num_states),
            shock: ShockEstimate::empty(spec, num_states),
            archive: Vec::new(),
        }
    }

    pub fn merge(mut self, other: EnsembleResult) -> Result<Self, StatsError> {
        self.point.merge(&other.point)?;
        self.shock.merge(&other.shock)?;
        self.archive.extend(other.archive);
        self.archive.sort_by_key(|(i, _)| *i);
        Ok(self)
    }

    fn add_realization(
        &mut self,
        spec: &EnsembleSpec,
        flux: &PolygonalFlux<f64>,
        index: u64,
    ) -> Result<(), StatsError> {
        let profile = spec
            .model
            .sample(index)
            .map_err(|source| StatsError::Sample { index, source })?;
        let sol = solve(flux, &profile, spec.horizon)
            .map_err(|source| StatsError::Solve { index, source })?;
        let solve_err = |source| StatsError::Solve { index, source };
        let origin = spec.x_grid[0];
        let end = spec.x_grid[spec.x_grid.len() - 1];
        let boxes = spec.num_boxes();
        for (ti, &t) in spec.times.iter().enumerate() {
            let slice = sol.slice(t).map_err(solve_err)?;
            let values: Vec<usize> = spec.x_grid.iter().map(|x| slice.eval(*x)).collect();
            self.point.record(ti, &values);

            if boxes == 0 {
                continue;
            }
            let alive: Vec<(f64, Species)> = sol
                .alive_at(t)
                .map_err(solve_err)?
                .iter()
                .map(|f| (f.position(t), f.species()))
                .filter(|(x, _)| *x >= origin && *x < end)
                .collect();
            for (x, s) in &alive {
                let b = spec.x_grid.partition_point(|e| e <= x) - 1;
                let k = self.shock.cell(ti, b, *s);
                self.shock.fronts[k] += 1;
            }
            let nets: Vec<Species> = (0..boxes)
                .map(|b| (slice.eval_left(spec.x_grid[b]), slice.eval_left(spec.x_grid[b + 1])))
                .collect();
            for (b, s) in nets.iter().enumerate() {
                let k = self.shock.cell(ti, b, *s);
                self.shock.nets[k] += 1;
            }
            if spec.max_order >= 2 {
                for (b1, s1) in nets.iter().enumerate().filter(|(_, s)| s.0 != s.1) {
                    for (b2, s2) in nets.iter().enumerate().filter(|(b, _)| *b != b1) {
                        *self.shock.pairs.entry((ti, b1, b2, *s1, *s2)).or_insert(0) += 1;
                    }
                }
            }
            for (wi, w) in spec.coincidence_widths.iter().enumerate() {
                let cells: Vec<i64> = alive
                    .iter()
                    .map(|(x, _)| ((x - origin) / w).floor() as i64)
                    .collect();
                for i in 0..alive.len() {
                    for j in 0..alive.len() {
                        if i != j && cells[i] == cells[j] && alive[i].1 != alive[j].1 {
                            *self
                                .shock
                                .coincidences
                                .entry((ti, wi, alive[i].1, alive[j].1))
                                .or_insert(0) += 1;
                        }
                    }
                }
            }
        }
        self.point.realizations += 1;
        self.shock.realizations += 1;
        if spec.keep_archive {
            self.archive.push((index, sol.events().to_vec()));
        }
        Ok(())
    }
}

/// Runs realizations `range` of the ensemble on the current rayon pool.
pub fn run_range(
    spec: &EnsembleSpec,
    flux: &PolygonalFlux<f64>,
    range: Range<u64>,
) -> Result<EnsembleResult, StatsError> {
    spec.validate()?;
    if spec.model.num_states() != flux.len() {
        return Err(StatsError::InvalidSpec(
            "model and flux disagree on the number of states".into(),
        ));
    }
    let m = flux.len();
    range
        .into_par_iter()
        .try_fold(
            || EnsembleResult::empty(spec, m),
            |mut acc, i| {
                acc.add_realization(spec, flux, i)?;
                Ok(acc)
            },
        )
        .try_reduce(|| EnsembleResult::empty(spec, m), |a, b| a.merge(b))
}

/// Runs the whole ensemble on `workers` threads (0 uses the rayon default).
pub fn run_ensemble(
    spec: &EnsembleSpec,
    flux: &PolygonalFlux<f64>,
    workers: usize,
) -> Result<EnsembleResult, StatsError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| StatsError::Pool(e.to_string()))?;
    pool.install(|| run_range(spec, flux, 0..spec.realizations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{ModelKind, Profile};

    fn example_flux() -> PolygonalFlux<f64> {
        PolygonalFlux::new(vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 8.0]).unwrap()
    }

    fn example_spec(n: u64, times: Vec<f64>, grid: Vec<f64>) -> EnsembleSpec {
        let f = example_flux();
        let p = Profile::new(vec![1.0, 2.0], vec![2, 1, 0], &f).unwrap();
        let model = RandomProfileModel::new(ModelKind::Deterministic(p), (0.0, 3.0), 0, 3).unwrap();
        EnsembleSpec::new(model, n, times, grid)
    }

    fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|i| lo + i as f64 * step).collect()
    }

    #[test]
    fn deterministic_ensemble_is_certain() {
        let spec = example_spec(5, vec![0.0, 0.1, 0.5], grid(0.0, 4.0, 0.1));
        let res = run_ensemble(&spec, &example_flux(), 2).unwrap();
        let pe = &res.point;
        assert_eq!(pe.realizations(), 5);
        for (ti, &t) in pe.times().iter().enumerate() {
            for (xi, &x) in pe.xs().iter().enumerate() {
                let expected = if t < 0.25 {
                    if x < 1.0 + 5.0 * t { 2 } else if x < 2.0 + t { 1 } else { 0 }
                } else if x < 2.25 + 3.0 * (t - 0.25) {
                    2
                } else {
                    0
                };
                let total: u64 = (0..3).map(|s| pe.count(ti, xi, s)).sum();
                assert_eq!(total, 5);
                assert_eq!(pe.count(ti, xi, expected), 5, "t={t} x={x}");
            }
        }
        assert_eq!(pe.estimate_f(0.0, &[0.0], &[2]).unwrap(), 1.0);
        assert_eq!(pe.estimate_f(0.1, &[0.5], &[0]).unwrap(), 1.0);
        assert_eq!(pe.estimate_f(0.1, &[0.5], &[3]).unwrap(), 0.0);
        assert!(matches!(pe.estimate_f(0.2, &[0.5], &[1]), Err(StatsError::NotCovered(_))));
        assert!(matches!(pe.estimate_f(0.1, &[0.55], &[1]), Err(StatsError::NotCovered(_))));
    }

    #[test]
    fn shock_density_tracks_trajectories() {
        let spec = example_spec(3, vec![0.1, 0.5], grid(0.0, 4.0, 0.2));
        let res = run_ensemble(&spec, &example_flux(), 1).unwrap();
        let se = &res.shock;
        assert_eq!(se.estimate_shock_density((2, 1), 0.1, 1.4, 1.6).unwrap(), 1.0);
        assert_eq!(se.estimate_shock_density((1, 0), 0.1, 2.0, 2.2).unwrap(), 1.0);
        assert_eq!(se.estimate_shock_density((0, 2), 0.1, 0.0, 4.0).unwrap(), 0.0);
        assert_eq!(se.estimate_shock_density((2, 1), 0.5, 0.0, 4.0).unwrap(), 0.0);
        assert_eq!(se.estimate_shock_density((2, 0), 0.5, 0.0, 4.0).unwrap(), 1.0);
        assert!(se.estimate_shock_density((2, 0), 0.5, 0.1, 4.0).is_err());
    }

    #[test]
    fn example_pair_statistics() {
        let spec = example_spec(2, vec![0.1], grid(0.0, 4.0, 0.2));
        let res = run_ensemble(&spec, &example_flux(), 1).unwrap();
        let se = &res.shock;
        // (3,2) sits in box [1.4,1.6) = 7, (2,1) in [2.0,2.2) = 10
        let key = (0, 7, 10, (2, 1), (1, 0));
        assert_eq!(se.pair_counts().get(&key), Some(&2));
        let report = check_compatibility(se);
        assert!(report.passed());
        assert!(report.marginals_checked > 0);
        // the two fronts are 0.6 apart; no box of width <= 0.2 holds both
        assert!(se.coincidence_mass_for(0, (2, 1), (1, 0)).iter().all(|m| *m == 0.0));
    }

    #[test]
    fn coincidence_counts_fronts_sharing_a_box() {
        let spec = EnsembleSpec {
            coincidence_widths: vec![1.0, 0.5, 0.25],
            ..example_spec(1, vec![0.1], grid(0.0, 4.0, 1.0))
        };
        let res = run_ensemble(&spec, &example_flux(), 1).unwrap();
        // fronts at 1.5 and 2.1 straddle the edge at 2
        assert_eq!(res.shock.coincidence_mass(0), vec![0.0, 0.0, 0.0]);
        let spec = EnsembleSpec {
            coincidence_widths: vec![4.0, 2.0, 1.0],
            ..example_spec(1, vec![0.1], grid(0.0, 4.0, 1.0))
        };
        let res = run_ensemble(&spec, &example_flux(), 1).unwrap();
        assert_eq!(res.shock.coincidence_mass(0), vec![2.0, 0.0, 0.0]);
    }

    #[test]
    fn split_runs_merge_to_full_run() {
        let kind = ModelKind::IidGrid {
            spacing: 0.5,
            weights: vec![0.3, 0.3, 0.4],
        };
        let model = RandomProfileModel::new(kind, (0.0, 4.0), 99, 3).unwrap();
        let mut spec = EnsembleSpec::new(model, 1000, vec![0.0, 0.2, 0.6], grid(-1.0, 5.0, 0.5));
        spec.keep_archive = true;
        let f = example_flux();
        let whole = run_ensemble(&spec, &f, 3).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
        let (a, b) = pool.install(|| (run_range(&spec, &f, 0..500).unwrap(), run_range(&spec, &f, 500..1000).unwrap()));
        assert_eq!(b.clone().merge(a.clone()).unwrap(), whole);
        assert_eq!(a.merge(b).unwrap(), whole);
        let again = run_ensemble(&spec, &f, 1).unwrap();
        assert_eq!(again, whole);
    }

    #[test]
    fn rejects_invalid_specs() {
        let mut spec = example_spec(0, vec![0.1], vec![0.0, 1.0]);
        assert!(spec.validate().is_err());
        spec.realizations = 1;
        spec.x_grid = vec![1.0, 0.0];
        assert!(spec.validate().is_err());
        spec.x_grid = vec![0.0, 1.0];
        spec.horizon = Horizon::Finite(0.05);
        assert!(spec.validate().is_err());
    }
}
