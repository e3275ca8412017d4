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

//! Random instance generators shared by the integration tests.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shockhier::{Flux, ModelKind, Profile64, RandomProfileModel};

/// Strictly convex flux with `m` states and integer-ish random geometry.
pub fn random_flux(rng: &mut ChaCha8Rng, m: usize) -> Flux {
    let mut states = Vec::with_capacity(m);
    let mut u: f64 = rng.random_range(-3.0..3.0);
    for _ in 0..m {
        states.push(u);
        u += rng.random_range(0.2..2.0);
    }
    let mut slopes: Vec<f64> = (0..m - 1).map(|_| rng.random_range(-4.0..4.0)).collect();
    slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for k in 1..slopes.len() {
        if slopes[k] - slopes[k - 1] < 0.05 {
            slopes[k] = slopes[k - 1] + 0.05;
        }
    }
    let mut values = vec![rng.random_range(-2.0..2.0)];
    for k in 0..m - 1 {
        let next = values[k] + slopes[k] * (states[k + 1] - states[k]);
        values.push(next);
    }
    Flux::new(states, values).expect("random flux is strictly convex")
}

/// Markov-jump model with uniform admissible transitions.
pub fn markov_model(m: usize, rate: f64, window: (f64, f64), seed: u64) -> RandomProfileModel {
    let kind = ModelKind::MarkovJump {
        rate,
        initial: vec![1.0; m],
        transition: vec![vec![1.0; m]; m],
    };
    RandomProfileModel::new(kind, window, seed, m).unwrap()
}

/// Markov-jump model that only moves between neighboring states.
pub fn nearest_neighbor_model(m: usize, rate: f64, window: (f64, f64), seed: u64) -> RandomProfileModel {
    let transition = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| if i.abs_diff(j) == 1 { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let kind = ModelKind::MarkovJump {
        rate,
        initial: vec![1.0; m],
        transition,
    };
    RandomProfileModel::new(kind, window, seed, m).unwrap()
}

/// Random admissible instance with at most `max_pieces` pieces.
pub fn random_instance(seed: u64, max_states: usize, max_pieces: usize) -> (Flux, Profile64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(2..=max_states);
    let flux = random_flux(&mut rng, m);
    let model = markov_model(m, 2.0, (0.0, 8.0), seed ^ 0x9e37_79b9);
    for index in 0.. {
        let p = model.sample(index).unwrap();
        if p.pieces().len() <= max_pieces && p.num_jumps() > 0 {
            return (flux, p);
        }
    }
    unreachable!()
}
