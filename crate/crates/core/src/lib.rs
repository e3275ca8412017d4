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

//! Exact front tracking for scalar conservation laws with convex polygonal
//! flux and piecewise-constant (possibly random) initial data, together with
//! an independent Hopf-Lax oracle, ensemble estimators for n-point functions,
//! and checks of the two kinetic hierarchies those functions satisfy.
//!
//! The geometric modules are generic over [`Scalar`] (`f32`, `f64`, or exact
//! [`Rational64`](num_rational::Rational64)); ensemble statistics run on `f64`.

pub mod flux;
pub mod fronttrack;
pub mod hierarchy;
pub mod hopflax;
pub mod profile;
pub mod scalar;
pub mod stats;

pub use flux::{FluxError, LegendreTransform, PolygonalFlux, SpeedTable};
pub use fronttrack::{
    next_collision, solve, solve_with, Collision, CollisionEvent, Front, FrontSolution, Horizon,
    SolveError, Species, TriplePolicy,
};
pub use hierarchy::{
    brute_force_sets, classify_event, compare_interaction_sets, interaction_sets, ledger_verify,
    seeded_bumps, verify_transport, Bump, EventClassification, HierarchyError, InteractionSets,
    LedgerReport, LedgerSummary, Role, SetComparison, TransportCheck,
};
pub use hopflax::{HopfLax, OracleError, VariationalProblem};
pub use profile::{admissible_jump, ModelKind, Profile, ProfileError, RandomProfileModel};
pub use scalar::{Scalar, F64_TOLERANCE};
pub use stats::{
    check_compatibility, run_ensemble, run_range, CompatibilityReport, EnsembleResult,
    EnsembleSpec, PointEstimate, ShockEstimate, StatsError,
};

use num_rational::Rational64;

pub type Flux = PolygonalFlux<f64>;
pub type Flux32 = PolygonalFlux<f32>;
pub type ExactFlux = PolygonalFlux<Rational64>;

pub type Profile64 = Profile<f64>;
pub type Profile32 = Profile<f32>;
pub type ExactProfile = Profile<Rational64>;

pub type Solution = FrontSolution<f64>;
pub type Solution32 = FrontSolution<f32>;
pub type ExactSolution = FrontSolution<Rational64>;

pub type Oracle = HopfLax<f64>;
pub type ExactOracle = HopfLax<Rational64>;
