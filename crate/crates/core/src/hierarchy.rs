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

//! Consistency checks for the two statistical hierarchies.
//!
//! Approach I: tail CDFs `F(x, t, k) = P{u(x, t) >= u_k}` transported at the
//! neighbor slopes, with exact detection of where the transported tails stop
//! being monotone in `k`. Approach II: shock-species interaction sets, event
//! classification, and a distributional event ledger checked against smooth
//! compactly supported test functions.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::flux::PolygonalFlux;
use crate::fronttrack::{CollisionEvent, FrontSolution, Horizon, Species};
use crate::profile::{admissible_jump, Profile};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HierarchyError {
    #[error("species ({}, {}) is not admissible", .0 .0 + 1, .0 .1 + 1)]
    InadmissibleSpecies(Species),
    #[error("event {event}: {role} role fails: {detail}")]
    RoleViolation {
        event: usize,
        role: Role,
        detail: String,
    },
}

/// One of the three collision-term roles of an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Growth,
    RightDecay,
    LeftDecay,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Growth => "growth",
            Role::RightDecay => "right-decay",
            Role::LeftDecay => "left-decay",
        })
    }
}

// ---------------------------------------------------------------------------
// interaction sets

/// Middle and partner states for a species `(u, v)`, 0-based.
///
/// `w1`: middles `w` with `(u, w) + (w, v) -> (u, v)`.
/// `w2`: partners `w` with `(u, v) + (v, w) -> (u, w)`.
/// `w3`: partners `w` with `(w, u) + (u, v) -> (w, v)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionSets {
    pub species: Species,
    pub w1: Vec<usize>,
    pub w2: Vec<usize>,
    pub w3: Vec<usize>,
}

impl InteractionSets {
    pub fn get(&self, set: WhichSet) -> &[usize] {
        match set {
            WhichSet::W1 => &self.w1,
            WhichSet::W2 => &self.w2,
            WhichSet::W3 => &self.w3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WhichSet {
    W1,
    W2,
    W3,
}

impl fmt::Display for WhichSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WhichSet::W1 => "W1",
            WhichSet::W2 => "W2",
            WhichSet::W3 => "W3",
        })
    }
}

fn check_species(m: usize, s: Species) -> Result<(), HierarchyError> {
    if s.0 >= m || s.1 >= m || !admissible_jump(s.0, s.1) {
        return Err(HierarchyError::InadmissibleSpecies(s));
    }
    Ok(())
}

/// Interaction sets from the closed-form membership rules.
///
/// For an upward species `v = u + 1` there is no creating middle, right
/// partners are `w < u` and left partners are `w > u + 1`. For a downward
/// species `v < u` the middles are `w <= u + 1`, right partners `w <= v + 1`
/// and left partners `w >= u - 1`. `u` and `v` are always excluded.
pub fn interaction_sets(num_states: usize, species: Species) -> Result<InteractionSets, HierarchyError> {
    check_species(num_states, species)?;
    let (u, v) = species;
    let all = |keep: &dyn Fn(usize) -> bool| -> Vec<usize> {
        (0..num_states).filter(|w| *w != u && *w != v && keep(*w)).collect()
    };
    Ok(if v == u + 1 {
        InteractionSets {
            species,
            w1: Vec::new(),
            w2: all(&|w| w < u),
            w3: all(&|w| w > u + 1),
        }
    } else {
        InteractionSets {
            species,
            w1: all(&|w| w <= u + 1),
            w2: all(&|w| w <= v + 1),
            w3: all(&|w| w + 1 >= u),
        }
    })
}

/// Interaction sets by enumerating triples: every species involved must be
/// admissible, the three states distinct, and the left front must be faster.
pub fn brute_force_sets(flux: &PolygonalFlux<f64>, species: Species) -> Result<InteractionSets, HierarchyError> {
    let m = flux.len();
    check_species(m, species)?;
    let (u, v) = species;
    let c = |a: usize, b: usize| flux.rh_speed(a, b).unwrap();
    let merges = |a: usize, b: usize, d: usize| {
        a != b && b != d && a != d && admissible_jump(a, b) && admissible_jump(b, d) && admissible_jump(a, d) && c(a, b) > c(b, d)
    };
    let others = || (0..m).filter(|w| *w != u && *w != v);
    Ok(InteractionSets {
        species,
        w1: others().filter(|w| merges(u, *w, v)).collect(),
        w2: others().filter(|w| merges(u, v, *w)).collect(),
        w3: others().filter(|w| merges(*w, u, v)).collect(),
    })
}

/// A state present in exactly one of the two constructions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetDisagreement {
    pub species: Species,
    pub set: WhichSet,
    pub w: usize,
    pub in_rule: bool,
    pub in_enumeration: bool,
    /// The triple involves an inadmissible species, so the corresponding
    /// collision term is identically zero and the disagreement has no effect.
    pub vacuous: bool,
}

/// Outcome of comparing rule-based sets against enumeration for one flux.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SetComparison {
    pub species_checked: usize,
    pub disagreements: Vec<SetDisagreement>,
    /// Disagreements, all substantive, that reading the growth indicator as
    /// `1{v = u + 1}` instead of the one-point case split would produce.
    pub indicator_reading_disagreements: usize,
}

impl SetComparison {
    pub fn substantive(&self) -> impl Iterator<Item = &SetDisagreement> {
        self.disagreements.iter().filter(|d| !d.vacuous)
    }

    pub fn vacuous_count(&self) -> usize {
        self.disagreements.iter().filter(|d| d.vacuous).count()
    }

    pub fn merge(&mut self, other: SetComparison) {
        self.species_checked += other.species_checked;
        self.disagreements.extend(other.disagreements);
        self.indicator_reading_disagreements += other.indicator_reading_disagreements;
    }
}

fn triple_admissible(set: WhichSet, (u, v): Species, w: usize) -> bool {
    let (a, b, d) = match set {
        WhichSet::W1 => (u, w, v),
        WhichSet::W2 => (u, v, w),
        WhichSet::W3 => (w, u, v),
    };
    admissible_jump(a, b) && admissible_jump(b, d) && admissible_jump(a, d)
}

/// Compares [`interaction_sets`] with [`brute_force_sets`] for every
/// admissible species of `flux`.
pub fn compare_interaction_sets(flux: &PolygonalFlux<f64>) -> SetComparison {
    let m = flux.len();
    let mut out = SetComparison::default();
    for u in 0..m {
        for v in 0..m {
            if u == v || !admissible_jump(u, v) {
                continue;
            }
            let s = (u, v);
            let rule = interaction_sets(m, s).expect("admissible");
            let brute = brute_force_sets(flux, s).expect("admissible");
            out.species_checked += 1;
            for set in [WhichSet::W1, WhichSet::W2, WhichSet::W3] {
                let (a, b) = (rule.get(set), brute.get(set));
                for w in 0..m {
                    let (in_rule, in_enumeration) = (a.contains(&w), b.contains(&w));
                    if in_rule != in_enumeration {
                        out.disagreements.push(SetDisagreement {
                            species: s,
                            set,
                            w,
                            in_rule,
                            in_enumeration,
                            vacuous: !triple_admissible(set, s, w),
                        });
                    }
                }
            }
            let indicator: Vec<usize> = if v == u + 1 {
                (0..m).filter(|w| *w != u && *w != v && *w <= u + 1).collect()
            } else {
                Vec::new()
            };
            out.indicator_reading_disagreements += (0..m)
                .filter(|w| indicator.contains(w) != brute.w1.contains(w) && triple_admissible(WhichSet::W1, s, *w))
                .count();
        }
    }
    out
}

// ---------------------------------------------------------------------------
// event classification

/// The three roles of a collision `(u, w) + (w, v) -> (u, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventClassification {
    pub event: usize,
    /// `(u, v)` created, middle `w`.
    pub growth: (Species, usize),
    /// `(u, w)` destroyed from the right by partner `v`.
    pub right_decay: (Species, usize),
    /// `(w, v)` destroyed from the left by partner `u`.
    pub left_decay: (Species, usize),
    /// `c_uw - c_wv`.
    pub coefficient: f64,
}

/// Classifies collision `index` of an event list.
pub fn classify_event(
    flux: &PolygonalFlux<f64>,
    index: usize,
    event: &CollisionEvent<f64>,
) -> Result<EventClassification, HierarchyError> {
    let m = flux.len();
    let violation = |role, detail: String| HierarchyError::RoleViolation { event: index, role, detail };
    let (u, w) = event.left;
    let (w2, v) = event.right;
    if w != w2 {
        return Err(violation(Role::Growth, format!("fronts do not share a middle state ({} vs {})", w + 1, w2 + 1)));
    }
    if event.created != (u, v) {
        return Err(violation(Role::Growth, "created species is not (left.0, right.1)".into()));
    }
    let member = |role: Role, set: WhichSet, s: Species, x: usize| -> Result<(), HierarchyError> {
        let sets = interaction_sets(m, s).map_err(|e| violation(role, e.to_string()))?;
        if sets.get(set).contains(&x) {
            Ok(())
        } else {
            Err(violation(role, format!("{} not in {}({}, {})", x + 1, set, s.0 + 1, s.1 + 1)))
        }
    };
    member(Role::Growth, WhichSet::W1, (u, v), w)?;
    member(Role::RightDecay, WhichSet::W2, (u, w), v)?;
    member(Role::LeftDecay, WhichSet::W3, (w, v), u)?;
    let coefficient = flux.rh_speed(u, w).unwrap() - flux.rh_speed(w, v).unwrap();
    if !(coefficient > 0.0) {
        return Err(violation(Role::Growth, format!("coefficient {coefficient} is not positive")));
    }
    Ok(EventClassification {
        event: index,
        growth: ((u, v), w),
        right_decay: ((u, w), v),
        left_decay: ((w, v), u),
        coefficient,
    })
}

// ---------------------------------------------------------------------------
// test functions

fn bump(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r * r)).exp()
    }
}

fn bump_derivative(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        let d = 1.0 - r * r;
        bump(r) * (-2.0 * r / (d * d))
    }
}

/// `phi(x, t) = b((x - x0) / wx) * b((t - t0) / wt)` with
/// `b(r) = exp(-1 / (1 - r^2))` on `|r| < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub x0: f64,
    pub t0: f64,
    pub wx: f64,
    pub wt: f64,
}

impl Bump {
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        bump((x - self.x0) / self.wx) * bump((t - self.t0) / self.wt)
    }

    /// `(d/dt + c d/dx) phi`.
    pub fn transport_derivative(&self, x: f64, t: f64, c: f64) -> f64 {
        let (rx, rt) = ((x - self.x0) / self.wx, (t - self.t0) / self.wt);
        bump(rx) * bump_derivative(rt) / self.wt + c * bump_derivative(rx) * bump(rt) / self.wx
    }

    /// Integral of `(d/dt + c d/dx) phi` along `x = a + c t` for `t` in
    /// `[t_start, t_end]`, by composite Gauss-Legendre quadrature restricted
    /// to the support.
    pub fn line_integral(&self, a: f64, c: f64, t_start: f64, t_end: f64) -> f64 {
        let mut lo = t_start.max(self.t0 - self.wt);
        let mut hi = t_end.min(self.t0 + self.wt);
        if c != 0.0 {
            let (p, q) = ((self.x0 - self.wx - a) / c, (self.x0 + self.wx - a) / c);
            lo = lo.max(p.min(q));
            hi = hi.min(p.max(q));
        } else if (a - self.x0).abs() >= self.wx {
            return 0.0;
        }
        if !(hi > lo) {
            return 0.0;
        }
        let (nodes, weights) = gauss_legendre(GL_ORDER);
        let h = (hi - lo) / GL_PANELS as f64;
        let mut total = 0.0;
        for p in 0..GL_PANELS {
            let mid = lo + (p as f64 + 0.5) * h;
            let mut s = 0.0;
            for (z, wgt) in nodes.iter().zip(&weights) {
                let t = mid + 0.5 * h * z;
                s += wgt * self.transport_derivative(a + c * t, t, c);
            }
            total += 0.5 * h * s;
        }
        total
    }
}

const GL_ORDER: usize = 10;
const GL_PANELS: usize = 96;

/// Nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (nodes, weights)
}

/// `count` bumps placed pseudo-randomly in `x_range x t_range`, with widths
/// between 5% and 40% of each range.
pub fn seeded_bumps(seed: u64, count: usize, x_range: (f64, f64), t_range: (f64, f64)) -> Vec<Bump> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lx, lt) = (x_range.1 - x_range.0, t_range.1 - t_range.0);
    (0..count)
        .map(|_| Bump {
            x0: rng.random_range(x_range.0..=x_range.1),
            t0: rng.random_range(t_range.0..=t_range.1),
            wx: lx * rng.random_range(0.05..0.4),
            wt: lt * rng.random_range(0.05..0.4),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// event ledger

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Birth {
    Initial { x: f64 },
    Event { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Death {
    Event { index: usize },
    Horizon { x: f64 },
    /// Alive forever under an infinite horizon.
    Open,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesLedger {
    pub species: Species,
    pub births: Vec<Birth>,
    pub deaths: Vec<Death>,
    pub initial: usize,
    pub created: usize,
    pub destroyed: usize,
    pub alive_at_end: usize,
}

impl SpeciesLedger {
    pub fn balanced(&self) -> bool {
        self.initial + self.created == self.destroyed + self.alive_at_end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResidual {
    pub species: Species,
    pub bump: usize,
    /// Minus the sum over trajectories of the line integral of
    /// `(d/dt + c d/dx) phi`.
    pub transport: f64,
    /// Creations minus destructions plus initial minus end terms, all read
    /// off the event log.
    pub ledger: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LedgerViolation {
    Role(HierarchyError),
    Balance(Species),
    Mapping { front: usize, detail: String },
}

impl fmt::Display for LedgerViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LedgerViolation::Role(e) => write!(f, "{e}"),
            LedgerViolation::Balance(s) => write!(f, "species ({}, {}) does not balance", s.0 + 1, s.1 + 1),
            LedgerViolation::Mapping { front, detail } => write!(f, "front {front}: {detail}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerReport {
    pub species: Vec<SpeciesLedger>,
    pub classifications: Vec<EventClassification>,
    pub residuals: Vec<TestResidual>,
    pub violations: Vec<LedgerViolation>,
}

impl LedgerReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.residual.abs()))
    }

    pub fn role_violations(&self) -> usize {
        self.violations.iter().filter(|v| matches!(v, LedgerViolation::Role(_))).count()
    }

    pub fn passed(&self, tolerance: f64) -> bool {
        self.violations.is_empty() && self.max_residual() < tolerance
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// Checks every trajectory of `sol` against its event log.
///
/// Per species and test function, minus the line integrals of
/// `(d/dt + c d/dx) phi` along trajectories must equal the ledger terms:
/// `phi` at creating events minus `phi` at destroying events, plus `phi` at
/// `t = 0` for initial fronts minus `phi` at the horizon for survivors.
pub fn ledger_verify(sol: &FrontSolution<f64>, bumps: &[Bump]) -> LedgerReport {
    let flux = sol.flux();
    let events = sol.events();
    let fronts = sol.fronts();
    let end = match sol.horizon() {
        Horizon::Finite(t) => Some(t),
        Horizon::Infinite => None,
    };
    let mut violations = Vec::new();

    let mut classifications = Vec::with_capacity(events.len());
    for (i, e) in events.iter().enumerate() {
        match classify_event(flux, i, e) {
            Ok(c) => classifications.push(c),
            Err(err) => violations.push(LedgerViolation::Role(err)),
        }
    }

    // event mapping
    let mut created_by: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut destroyed_by: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, e) in events.iter().enumerate() {
        created_by.entry(e.created_id).or_default().push(i);
        destroyed_by.entry(e.left_id).or_default().push(i);
        destroyed_by.entry(e.right_id).or_default().push(i);
    }
    let initial_jumps: Vec<(f64, usize, usize)> = sol.initial().jumps().collect();
    let mut ledgers: BTreeMap<Species, SpeciesLedger> = BTreeMap::new();
    for f in fronts {
        let entry = ledgers.entry(f.species()).or_insert_with(|| SpeciesLedger {
            species: f.species(),
            births: Vec::new(),
            deaths: Vec::new(),
            initial: 0,
            created: 0,
            destroyed: 0,
            alive_at_end: 0,
        });
        let mut bad = |detail: String| violations.push(LedgerViolation::Mapping { front: f.id, detail });
        let births = created_by.get(&f.id).map_or(&[][..], |v| v.as_slice());
        match (f.parents, births) {
            (None, []) => match initial_jumps.get(f.id) {
                Some(&(x, l, r)) if f.birth_t == 0.0 && x == f.birth_x && (l, r) == f.species() => {
                    entry.births.push(Birth::Initial { x });
                }
                _ => bad("has no creating event and is not an initial jump".into()),
            },
            (Some(_), [i]) => {
                let e = &events[*i];
                if e.t != f.birth_t || e.x != f.birth_x || e.created != f.species() {
                    bad(format!("birth does not match event {i}"));
                }
                entry.births.push(Birth::Event { index: *i });
            }
            _ => bad(format!("created by {} events", births.len())),
        }
        let deaths = destroyed_by.get(&f.id).map_or(&[][..], |v| v.as_slice());
        match (f.death_t, deaths) {
            (None, []) => entry.deaths.push(match end {
                Some(t) => Death::Horizon { x: f.position(t) },
                None => Death::Open,
            }),
            (Some(d), [i]) => {
                let e = &events[*i];
                let part = if e.left_id == f.id { e.left } else { e.right };
                if e.t != d || part != f.species() || !close(f.position(d), e.x) {
                    bad(format!("death does not match event {i}"));
                }
                entry.deaths.push(Death::Event { index: *i });
            }
            _ => bad(format!("destroyed by {} events", deaths.len())),
        }
    }

    // balance, counted from the log independently of the front records
    for (_, l, r) in &initial_jumps {
        ledger_entry(&mut ledgers, (*l, *r)).initial += 1;
    }
    for e in events {
        ledger_entry(&mut ledgers, e.created).created += 1;
        ledger_entry(&mut ledgers, e.left).destroyed += 1;
        ledger_entry(&mut ledgers, e.right).destroyed += 1;
    }
    for f in sol.survivors() {
        ledger_entry(&mut ledgers, f.species()).alive_at_end += 1;
    }
    for l in ledgers.values() {
        if !l.balanced() {
            violations.push(LedgerViolation::Balance(l.species));
        }
    }

    // test functions
    let species: Vec<Species> = ledgers.keys().copied().collect();
    let jobs: Vec<(Species, usize)> = species
        .iter()
        .flat_map(|s| (0..bumps.len()).map(move |b| (*s, b)))
        .collect();
    let residuals: Vec<TestResidual> = jobs
        .par_iter()
        .map(|&(s, b)| {
            let phi = &bumps[b];
            let transport: f64 = fronts
                .iter()
                .filter(|f| f.species() == s)
                .map(|f| {
                    let a = f.birth_x - f.speed * f.birth_t;
                    let stop = f.death_t.or(end).unwrap_or(f64::INFINITY);
                    -phi.line_integral(a, f.speed, f.birth_t, stop)
                })
                .sum();
            let mut ledger = 0.0;
            for e in events {
                let v = phi.eval(e.x, e.t);
                if e.created == s {
                    ledger += v;
                }
                if e.left == s {
                    ledger -= v;
                }
                if e.right == s {
                    ledger -= v;
                }
            }
            for (x, l, r) in &initial_jumps {
                if (*l, *r) == s {
                    ledger += phi.eval(*x, 0.0);
                }
            }
            if let Some(t) = end {
                for f in sol.survivors().filter(|f| f.species() == s) {
                    ledger -= phi.eval(f.position(t), t);
                }
            }
            TestResidual {
                species: s,
                bump: b,
                transport,
                ledger,
                residual: transport - ledger,
            }
        })
        .collect();

    LedgerReport {
        species: ledgers.into_values().collect(),
        classifications,
        residuals,
        violations,
    }
}

fn ledger_entry(map: &mut BTreeMap<Species, SpeciesLedger>, s: Species) -> &mut SpeciesLedger {
    map.entry(s).or_insert_with(|| SpeciesLedger {
        species: s,
        births: Vec::new(),
        deaths: Vec::new(),
        initial: 0,
        created: 0,
        destroyed: 0,
        alive_at_end: 0,
    })
}

/// Aggregate of many ledger checks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LedgerSummary {
    pub realizations: u64,
    pub events: usize,
    pub triple_events: usize,
    pub role_violations: usize,
    pub balance_violations: usize,
    pub mapping_violations: usize,
    pub residuals_checked: usize,
    pub max_residual: f64,
    /// Up to a handful of violation messages for reporting.
    pub samples: Vec<String>,
}

impl LedgerSummary {
    pub fn add(&mut self, sol: &FrontSolution<f64>, report: &LedgerReport) {
        self.realizations += 1;
        self.events += sol.events().len();
        self.triple_events += sol.events().iter().filter(|e| e.triple).count();
        for v in &report.violations {
            match v {
                LedgerViolation::Role(_) => self.role_violations += 1,
                LedgerViolation::Balance(_) => self.balance_violations += 1,
                LedgerViolation::Mapping { .. } => self.mapping_violations += 1,
            }
            if self.samples.len() < 8 {
                self.samples.push(v.to_string());
            }
        }
        self.residuals_checked += report.residuals.len();
        self.max_residual = self.max_residual.max(report.max_residual());
    }

    pub fn passed(&self, tolerance: f64) -> bool {
        self.role_violations == 0
            && self.balance_violations == 0
            && self.mapping_violations == 0
            && self.max_residual < tolerance
    }
}

// ---------------------------------------------------------------------------
// transport

/// One nonzero transport residual: `actual - transported` at the listed
/// positions and thresholds (0-based state indices, `k >= 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct TransportResidual {
    pub t: f64,
    pub xs: Vec<f64>,
    pub ks: Vec<usize>,
    pub value: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportCheck {
    /// Transport speed of threshold `k`, i.e. the slope between states
    /// `k - 1` and `k`; `speeds[k - 1]`.
    pub speeds: Vec<f64>,
    pub first_collision: Option<f64>,
    /// Earliest time from which transport may fail: 0 if an initial jump
    /// skips a state, otherwise the first collision.
    pub breakdown_time: Option<f64>,
    pub order: usize,
    pub times: Vec<f64>,
    pub xs: Vec<f64>,
    pub residuals: Vec<TransportResidual>,
    /// Per time, open intervals where transported tails are not monotone in `k`.
    pub overlaps: Vec<(f64, Vec<(f64, f64)>)>,
}

impl TransportCheck {
    /// Nonzero residuals strictly before the breakdown time.
    pub fn early_residuals(&self) -> usize {
        self.residuals
            .iter()
            .filter(|r| self.breakdown_time.map_or(true, |b| r.t < b))
            .count()
    }

    pub fn breakdown_detected(&self) -> bool {
        !self.residuals.is_empty() || self.overlaps.iter().any(|(_, o)| !o.is_empty())
    }

    /// Without `expect_breakdown`, transport must hold at every checked time.
    /// With it, transport must hold before the breakdown time and fail
    /// somewhere after.
    pub fn passed(&self, expect_breakdown: bool) -> bool {
        if expect_breakdown {
            self.early_residuals() == 0 && self.breakdown_detected()
        } else {
            !self.breakdown_detected()
        }
    }
}

/// Tail indicator `1{u >= k}` of the initial profile moved rigidly at speed `c`.
struct TransportedTail {
    left: bool,
    toggles: Vec<f64>,
}

impl TransportedTail {
    fn new(p: &Profile<f64>, k: usize, c: f64, t: f64) -> Self {
        let toggles = p
            .jumps()
            .filter(|(_, l, r)| (*l >= k) != (*r >= k))
            .map(|(x, _, _)| x + c * t)
            .collect();
        TransportedTail {
            left: p.leftmost() >= k,
            toggles,
        }
    }

    fn eval(&self, x: f64) -> bool {
        let n = self.toggles.partition_point(|p| *p <= x);
        self.left ^ (n % 2 == 1)
    }
}

fn overlap_intervals(tails: &[TransportedTail]) -> Vec<(f64, f64)> {
    let mut points: Vec<f64> = tails.iter().flat_map(|t| t.toggles.iter().copied()).collect();
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup();
    let broken = |x: f64| tails.windows(2).any(|w| w[1].eval(x) && !w[0].eval(x));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for w in points.windows(2) {
        if broken(0.5 * (w[0] + w[1])) {
            match out.last_mut() {
                Some(last) if last.1 == w[0] => last.1 = w[1],
                _ => out.push((w[0], w[1])),
            }
        }
    }
    out
}

/// Compares the solution's tail indicators with the initial tails moved at
/// the neighbor slopes, on `xs` (and pairs of `xs` when `order == 2`).
///
/// A single realization has 0/1 tails, so residuals are integers; averaging
/// them over realizations gives the ensemble residual.
pub fn verify_transport(sol: &FrontSolution<f64>, times: &[f64], xs: &[f64], order: usize) -> TransportCheck {
    let flux = sol.flux();
    let p = sol.initial();
    let m = flux.len();
    let speeds = flux.neighbor_slopes().to_vec();
    let first_collision = sol.first_event_time();
    let skips = p.jumps().any(|(_, l, r)| l.abs_diff(r) > 1);
    let breakdown_time = if skips { Some(0.0) } else { first_collision };
    let mut residuals = Vec::new();
    let mut overlaps = Vec::new();
    for &t in times {
        let tails: Vec<TransportedTail> = (0..m)
            .map(|k| {
                let c = if k == 0 { 0.0 } else { speeds[k - 1] };
                TransportedTail::new(p, k, c, t)
            })
            .collect();
        overlaps.push((t, overlap_intervals(&tails)));
        let Ok(alive) = sol.alive_at(t) else { continue };
        let actual_state = |x: f64| {
            let mut s = p.leftmost();
            for f in &alive {
                if f.position(t) <= x {
                    s = f.right;
                } else {
                    break;
                }
            }
            s
        };
        let actual: Vec<usize> = xs.iter().map(|x| actual_state(*x)).collect();
        for k in 1..m {
            for (i, &x) in xs.iter().enumerate() {
                let d = (actual[i] >= k) as i32 - tails[k].eval(x) as i32;
                if d != 0 {
                    residuals.push(TransportResidual { t, xs: vec![x], ks: vec![k], value: d });
                }
            }
        }
        if order >= 2 {
            for i in 0..xs.len() {
                for j in i + 1..xs.len() {
                    for k1 in 1..m {
                        for k2 in 1..m {
                            let a = (actual[i] >= k1 && actual[j] >= k2) as i32;
                            let b = (tails[k1].eval(xs[i]) && tails[k2].eval(xs[j])) as i32;
                            if a != b {
                                residuals.push(TransportResidual {
                                    t,
                                    xs: vec![xs[i], xs[j]],
                                    ks: vec![k1, k2],
                                    value: a - b,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    TransportCheck {
        speeds,
        first_collision,
        breakdown_time,
        order,
        times: times.to_vec(),
        xs: xs.to_vec(),
        residuals,
        overlaps,
    }
}
