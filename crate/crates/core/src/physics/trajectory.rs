use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::hash::sha256_hex;

use super::body::{BodyState, RigidBody};

/// One body's state at one step, flattened for export.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodyRecord {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub theta: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub omega: f64,
    pub layer: usize,
}

impl BodyRecord {
    pub fn state(&self) -> BodyState {
        BodyState {
            x: self.x,
            y: self.y,
            z: self.z,
            theta: self.theta,
            vx: self.vx,
            vy: self.vy,
            vz: self.vz,
            omega: self.omega,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub bodies: BTreeMap<String, BodyRecord>,
}

impl StepRecord {
    pub(crate) fn capture(step: usize, bodies: &[RigidBody]) -> StepRecord {
        let bodies = bodies
            .iter()
            .map(|b| {
                let s = b.state;
                (
                    b.id.clone(),
                    BodyRecord {
                        x: s.x,
                        y: s.y,
                        z: s.z,
                        theta: s.theta,
                        vx: s.vx,
                        vy: s.vy,
                        vz: s.vz,
                        omega: s.omega,
                        layer: b.layer,
                    },
                )
            })
            .collect();
        StepRecord { step, bodies }
    }

    pub fn layers(&self) -> BTreeMap<&str, usize> {
        self.bodies
            .iter()
            .map(|(id, r)| (id.as_str(), r.layer))
            .collect()
    }
}

/// Every recorded step of a simulation run. Record 0 is the state right
/// after the instructions were applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    pub steps: usize,
    /// Content hash of the scene before instructions were applied.
    pub scene_hash: String,
    /// Canonical text of the instruction program that was applied.
    #[serde(default)]
    pub program: String,
    #[serde(rename = "states")]
    pub records: Vec<StepRecord>,
}

impl Trajectory {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("trajectory serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Trajectory, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// One row per (step, body), bodies in id order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,body,x,y,z,theta,vx,vy,vz,omega,layer\n");
        for rec in &self.records {
            for (id, b) in &rec.bodies {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    rec.step, id, b.x, b.y, b.z, b.theta, b.vx, b.vy, b.vz, b.omega, b.layer
                )
                .expect("writing to a String cannot fail");
            }
        }
        out
    }

    /// SHA-256 of the JSON export.
    pub fn content_hash(&self) -> String {
        sha256_hex(self.to_json().as_bytes())
    }
}
