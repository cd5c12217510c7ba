//! JSON instance documents.
//!
//! ```json
//! {"schema": "canonical-snl/1", "dim": 2, "n_sensors": 2,
//!  "anchors": [[-2.0, 1.7320508075688772], ...],
//!  "sensor_edges": [[1, 2, 2.0, 1.0]],
//!  "anchor_edges": [[1, 1, 2.0, 1.0], ...],
//!  "ground_truth": [[-1.0, 0.0], [1.0, 0.0]]}
//! ```
//!
//! Edge rows are `[i, j, distance, weight]` and `[sensor, anchor, distance,
//! weight]` with 1-based indices. `ground_truth` is optional.

use serde::{Deserialize, Serialize};

use super::{AnchorEdge, GroundTruth, ProblemInstance, SensorEdge};
use crate::error::{Result, SnlError};
use crate::primal::PositionVector;

pub const SCHEMA: &str = "canonical-snl/1";

#[derive(Debug, Serialize, Deserialize)]
struct InstanceDocument {
    schema: String,
    dim: usize,
    n_sensors: usize,
    anchors: Vec<Vec<f64>>,
    sensor_edges: Vec<(usize, usize, f64, f64)>,
    anchor_edges: Vec<(usize, usize, f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ground_truth: Option<Vec<Vec<f64>>>,
}

fn one_based(idx: usize, what: &str) -> Result<usize> {
    idx.checked_sub(1)
        .ok_or_else(|| SnlError::InvalidInstance(format!("{what} index 0 (indices are 1-based)")))
}

/// Serializes an instance (and optional ground truth) to pretty JSON.
pub fn save_instance(inst: &ProblemInstance, truth: Option<&GroundTruth>) -> Vec<u8> {
    let doc = InstanceDocument {
        schema: SCHEMA.to_string(),
        dim: inst.dim(),
        n_sensors: inst.n_sensors(),
        anchors: inst.anchors().to_vec(),
        sensor_edges: inst
            .sensor_edges()
            .iter()
            .map(|e| (e.i + 1, e.j + 1, e.dist, e.weight))
            .collect(),
        anchor_edges: inst
            .anchor_edges()
            .iter()
            .map(|e| (e.sensor + 1, e.anchor + 1, e.dist, e.weight))
            .collect(),
        ground_truth: truth.map(|t| t.positions().to_points()),
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("instance documents always serialize");
    out.push(b'\n');
    out
}

pub fn load_instance(bytes: &[u8]) -> Result<(ProblemInstance, Option<GroundTruth>)> {
    let doc: InstanceDocument =
        serde_json::from_slice(bytes).map_err(|e| SnlError::Schema(e.to_string()))?;
    if doc.schema != SCHEMA {
        return Err(SnlError::UnknownSchemaVersion(doc.schema));
    }
    let sensor_edges = doc
        .sensor_edges
        .iter()
        .map(|&(i, j, dist, weight)| {
            Ok(SensorEdge {
                i: one_based(i, "sensor")?,
                j: one_based(j, "sensor")?,
                dist,
                weight,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let anchor_edges = doc
        .anchor_edges
        .iter()
        .map(|&(i, k, dist, weight)| {
            Ok(AnchorEdge {
                sensor: one_based(i, "sensor")?,
                anchor: one_based(k, "anchor")?,
                dist,
                weight,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let inst = ProblemInstance::new(
        doc.dim,
        doc.n_sensors,
        doc.anchors,
        sensor_edges,
        anchor_edges,
    )?;
    let truth = match doc.ground_truth {
        None => None,
        Some(points) => {
            let pos = PositionVector::from_points(inst.dim(), &points)?;
            Some(GroundTruth::for_instance(&inst, pos)?)
        }
    };
    Ok((inst, truth))
}
