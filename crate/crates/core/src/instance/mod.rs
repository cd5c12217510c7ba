//! Localization problem instances: anchors, measured pairs, fixtures and
//! random generators.
//!
//! Sensor and anchor indices are 0-based in memory. The JSON file format
//! (see [`io`]) uses 1-based indices.

mod generate;
pub mod io;
mod presets;

pub use generate::{generate_instance, GeneratorConfig, NoiseModel, Region, StreamRng};
pub use presets::{make_symmetric_pair_fixture, make_two_sensor_fixture, Preset};

use std::collections::HashSet;

use crate::error::{Result, SnlError};
use crate::primal::PositionVector;

/// A measured sensor–sensor pair with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorEdge {
    pub i: usize,
    pub j: usize,
    pub dist: f64,
    pub weight: f64,
}

/// A measured sensor–anchor pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorEdge {
    pub sensor: usize,
    pub anchor: usize,
    pub dist: f64,
    pub weight: f64,
}

/// An immutable, validated localization problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    dim: usize,
    n_sensors: usize,
    anchors: Vec<Vec<f64>>,
    sensor_edges: Vec<SensorEdge>,
    anchor_edges: Vec<AnchorEdge>,
}

impl ProblemInstance {
    pub fn new(
        dim: usize,
        n_sensors: usize,
        anchors: Vec<Vec<f64>>,
        sensor_edges: Vec<SensorEdge>,
        anchor_edges: Vec<AnchorEdge>,
    ) -> Result<Self> {
        fn bad<T>(msg: String) -> Result<T> {
            Err(SnlError::InvalidInstance(msg))
        }
        if dim == 0 {
            return bad("dim must be at least 1".into());
        }
        if n_sensors == 0 {
            return bad("n_sensors must be at least 1".into());
        }
        for (k, a) in anchors.iter().enumerate() {
            if a.len() != dim {
                return bad(format!(
                    "anchor {} has {} coordinates, expected {dim}",
                    k + 1,
                    a.len()
                ));
            }
            if a.iter().any(|x| !x.is_finite()) {
                return bad(format!("anchor {} has non-finite coordinates", k + 1));
            }
        }
        let check_measure = |what: &str, dist: f64, weight: f64| -> Result<()> {
            if !dist.is_finite() || dist < 0.0 {
                return bad(format!("{what}: distance {dist} must be finite and >= 0"));
            }
            if !weight.is_finite() || weight <= 0.0 {
                return bad(format!("{what}: weight {weight} must be finite and > 0"));
            }
            Ok(())
        };

        let mut seen = HashSet::new();
        for e in &sensor_edges {
            let what = format!("sensor edge ({}, {})", e.i + 1, e.j + 1);
            if e.i >= e.j {
                return bad(format!("{what}: requires i < j"));
            }
            if e.j >= n_sensors {
                return bad(format!("{what}: sensor index out of range"));
            }
            if !seen.insert((e.i, e.j)) {
                return bad(format!("{what}: duplicate"));
            }
            check_measure(&what, e.dist, e.weight)?;
        }
        seen.clear();
        for e in &anchor_edges {
            let what = format!("anchor edge ({}, {})", e.sensor + 1, e.anchor + 1);
            if e.sensor >= n_sensors || e.anchor >= anchors.len() {
                return bad(format!("{what}: index out of range"));
            }
            if !seen.insert((e.sensor, e.anchor)) {
                return bad(format!("{what}: duplicate"));
            }
            check_measure(&what, e.dist, e.weight)?;
        }

        Ok(Self {
            dim,
            n_sensors,
            anchors,
            sensor_edges,
            anchor_edges,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_sensors(&self) -> usize {
        self.n_sensors
    }

    pub fn n_anchors(&self) -> usize {
        self.anchors.len()
    }

    /// Length of the stacked position vector, `n · d`.
    pub fn n_vars(&self) -> usize {
        self.n_sensors * self.dim
    }

    pub fn anchors(&self) -> &[Vec<f64>] {
        &self.anchors
    }

    #[inline]
    pub fn anchor(&self, k: usize) -> &[f64] {
        &self.anchors[k]
    }

    pub fn sensor_edges(&self) -> &[SensorEdge] {
        &self.sensor_edges
    }

    pub fn anchor_edges(&self) -> &[AnchorEdge] {
        &self.anchor_edges
    }

    pub fn n_edges(&self) -> usize {
        self.sensor_edges.len() + self.anchor_edges.len()
    }

    /// First sensor (0-based) whose connected component in the measurement
    /// graph contains no anchor edge, if any.
    pub fn unanchored_sensor(&self) -> Option<usize> {
        let n = self.n_sensors;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.sensor_edges {
            let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
            if a != b {
                parent[a] = b;
            }
        }
        let mut anchored = vec![false; n];
        for e in &self.anchor_edges {
            let r = find(&mut parent, e.sensor);
            anchored[r] = true;
        }
        (0..n).find(|&i| {
            let r = find(&mut parent, i);
            !anchored[r]
        })
    }
}

/// True sensor locations paired with a generated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    positions: PositionVector,
}

impl GroundTruth {
    pub fn new(positions: PositionVector) -> Self {
        Self { positions }
    }

    /// Checks that the truth matches the instance's sensor count and dimension.
    pub fn for_instance(inst: &ProblemInstance, positions: PositionVector) -> Result<Self> {
        if positions.dim() != inst.dim() || positions.n_points() != inst.n_sensors() {
            return Err(SnlError::SizeMismatch {
                what: "ground truth",
                expected: inst.n_vars(),
                actual: positions.len(),
            });
        }
        Ok(Self { positions })
    }

    pub fn positions(&self) -> &PositionVector {
        &self.positions
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(i: usize, j: usize) -> SensorEdge {
        SensorEdge {
            i,
            j,
            dist: 1.0,
            weight: 1.0,
        }
    }

    #[test]
    fn rejects_invariant_violations() {
        let a = vec![vec![0.0, 0.0]];
        assert!(
            ProblemInstance::new(2, 3, a.clone(), vec![edge(0, 1), edge(0, 1)], vec![]).is_err()
        );
        assert!(ProblemInstance::new(2, 3, a.clone(), vec![edge(1, 0)], vec![]).is_err());
        assert!(ProblemInstance::new(2, 3, a.clone(), vec![edge(0, 3)], vec![]).is_err());
        let mut neg = edge(0, 1);
        neg.dist = -1.0;
        assert!(ProblemInstance::new(2, 3, a.clone(), vec![neg], vec![]).is_err());
        let mut zero_w = edge(0, 1);
        zero_w.weight = 0.0;
        assert!(ProblemInstance::new(2, 3, a.clone(), vec![zero_w], vec![]).is_err());
        let ae = AnchorEdge {
            sensor: 0,
            anchor: 0,
            dist: f64::NAN,
            weight: 1.0,
        };
        assert!(ProblemInstance::new(2, 3, a.clone(), vec![], vec![ae]).is_err());
        let ae = AnchorEdge {
            sensor: 0,
            anchor: 0,
            dist: 1.0,
            weight: 1.0,
        };
        assert!(ProblemInstance::new(2, 3, a.clone(), vec![], vec![ae, ae]).is_err());
        assert!(ProblemInstance::new(2, 3, vec![vec![0.0]], vec![], vec![]).is_err());
        assert!(ProblemInstance::new(0, 3, vec![], vec![], vec![]).is_err());
        assert!(ProblemInstance::new(2, 3, a, vec![edge(0, 1), edge(1, 2)], vec![ae]).is_ok());
    }

    #[test]
    fn unanchored_component_detection() {
        let a = vec![vec![0.0, 0.0]];
        let ae = AnchorEdge {
            sensor: 0,
            anchor: 0,
            dist: 1.0,
            weight: 1.0,
        };
        let inst = ProblemInstance::new(2, 3, a.clone(), vec![edge(0, 1)], vec![ae]).unwrap();
        assert_eq!(inst.unanchored_sensor(), Some(2));
        let inst = ProblemInstance::new(2, 3, a, vec![edge(0, 1), edge(1, 2)], vec![ae]).unwrap();
        assert_eq!(inst.unanchored_sensor(), None);
    }
}
