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

//! Plain-text writers for the files each command emits. Every CSV starts
//! with a header row; every JSONL file holds one record per line. Floats use
//! the shortest representation that round-trips, so equal inputs give equal
//! bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use shockhier::{CollisionEvent, Front, Horizon, Solution, Species};

use crate::error::CliError;

/// Output directory plus the list of files written so far.
pub struct OutDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, content: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, content).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        self.write(name, &text)
    }

    pub fn into_files(self) -> Vec<PathBuf> {
        self.written
    }
}

/// 1-based species label.
pub fn label(s: Species) -> [usize; 2] {
    [s.0 + 1, s.1 + 1]
}

pub fn event_record(e: &CollisionEvent<f64>, realization: Option<u64>) -> Value {
    let mut v = json!({
        "t": e.t,
        "x": e.x,
        "left": label(e.left),
        "right": label(e.right),
        "created": label(e.created),
    });
    if e.triple {
        v["triple"] = json!(true);
    }
    if let Some(r) = realization {
        v["realization"] = json!(r);
    }
    v
}

pub fn push_jsonl(buf: &mut String, v: &Value) {
    buf.push_str(&v.to_string());
    buf.push('\n');
}

pub fn events_jsonl(sol: &Solution) -> String {
    let mut s = String::new();
    for e in sol.events() {
        push_jsonl(&mut s, &event_record(e, None));
    }
    s
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

pub fn trajectories_csv(sol: &Solution) -> String {
    let mut s = String::from("front_id,u,v,t_birth,x_birth,speed,t_death\n");
    for f in sol.fronts() {
        let [u, v] = label(f.species());
        writeln!(s, "{},{u},{v},{},{},{},{}", f.id, f.birth_t, f.birth_x, f.speed, opt(f.death_t)).unwrap();
    }
    s
}

/// Time at which drawings of a solution stop: the horizon if finite,
/// otherwise a little past the last event and the latest requested time.
pub fn display_end(sol: &Solution, times: &[f64]) -> f64 {
    match sol.horizon() {
        Horizon::Finite(t) => t,
        Horizon::Infinite => {
            let last = sol.events().last().map_or(0.0, |e| e.t);
            let latest = times.iter().copied().fold(0.0, f64::max);
            (last * 1.5).max(last + 0.5).max(latest).max(1.0)
        }
    }
}

fn segment_end(f: &Front<f64>, end: f64) -> f64 {
    f.death_t.unwrap_or(end)
}

pub fn polylines_csv(sol: &Solution, end: f64) -> String {
    let mut s = String::from("front_id,u,v,t_start,x_start,t_end,x_end,speed\n");
    for f in sol.fronts() {
        let [u, v] = label(f.species());
        let te = segment_end(f, end);
        writeln!(s, "{},{u},{v},{},{},{},{},{}", f.id, f.birth_t, f.birth_x, te, f.position(te), f.speed).unwrap();
    }
    s
}
