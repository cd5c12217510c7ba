//! Fixed fixtures and the random experiment protocols.

use std::str::FromStr;

use super::{AnchorEdge, GeneratorConfig, GroundTruth, ProblemInstance, Region, SensorEdge};
use crate::error::{Result, SnlError};
use crate::primal::PositionVector;

/// Two sensors at (∓1, 0), four anchors at (±2, ±√3), every measured
/// distance equal to 2 and every weight 1.
///
/// Anchors are stored in the order a₃, a₄, a₅, a₆; anchor edges in the order
/// (1,3), (1,4), (2,5), (2,6).
pub fn make_two_sensor_fixture() -> (ProblemInstance, GroundTruth) {
    let s3 = 3f64.sqrt();
    let anchors = vec![
        vec![-2.0, s3],
        vec![-2.0, -s3],
        vec![2.0, s3],
        vec![2.0, -s3],
    ];
    let sensor_edges = vec![SensorEdge {
        i: 0,
        j: 1,
        dist: 2.0,
        weight: 1.0,
    }];
    let anchor_edges = [(0, 0), (0, 1), (1, 2), (1, 3)]
        .into_iter()
        .map(|(sensor, anchor)| AnchorEdge {
            sensor,
            anchor,
            dist: 2.0,
            weight: 1.0,
        })
        .collect();
    let inst =
        ProblemInstance::new(2, 2, anchors, sensor_edges, anchor_edges).expect("fixture is valid");
    let truth = PositionVector::new(2, vec![-1.0, 0.0, 1.0, 0.0]).expect("finite");
    (inst, GroundTruth::new(truth))
}

/// One planar sensor measured from anchors (0, ±a), both distances `b > a`.
///
/// The two solutions (±√(b² − a²), 0) are mirror images, so the unperturbed
/// problem has no unique global minimizer. Ground truth is the `+x` one.
pub fn make_symmetric_pair_fixture(a: f64, b: f64) -> Result<(ProblemInstance, GroundTruth)> {
    if !(a > 0.0 && b > a) {
        return Err(SnlError::InvalidConfig(format!(
            "symmetric pair needs 0 < a < b (got a = {a}, b = {b})"
        )));
    }
    let anchors = vec![vec![0.0, a], vec![0.0, -a]];
    let anchor_edges = (0..2)
        .map(|anchor| AnchorEdge {
            sensor: 0,
            anchor,
            dist: b,
            weight: 1.0,
        })
        .collect();
    let inst = ProblemInstance::new(2, 1, anchors, vec![], anchor_edges)?;
    let truth = PositionVector::new(2, vec![(b * b - a * a).sqrt(), 0.0])?;
    Ok((inst, GroundTruth::new(truth)))
}

/// Built-in experiment protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// The fixed two-sensor, four-anchor network.
    TwoSensor,
    /// 18 sensors in [−0.5, 0.5]², anchors (±0.45, ±0.45), all pairs
    /// measured, no noise.
    S18,
    /// 20 sensors in [0, 1]², corner anchors, range 0.4, σ = 0.001.
    S20,
    /// 50 sensors in [0, 1]², corner anchors, range 0.3, σ = 0.001.
    S50,
    /// 200 sensors in [0, 1]², corner anchors, range 0.3, σ = 0.001.
    S200,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::TwoSensor,
        Preset::S18,
        Preset::S20,
        Preset::S50,
        Preset::S200,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::TwoSensor => "two-sensor",
            Preset::S18 => "s18",
            Preset::S20 => "s20",
            Preset::S50 => "s50",
            Preset::S200 => "s200",
        }
    }

    /// Generator settings for the random protocols; `None` for the fixture.
    pub fn generator_config(self, seed: u64) -> Option<GeneratorConfig> {
        let unit = |n: usize, range: f64| GeneratorConfig {
            n_sensors: n,
            region: Region::unit_square(),
            anchors: Region::unit_square().corners(),
            radio_range: range,
            noise_sigma: 0.001,
            seed,
            default_weight: 1.0,
        };
        match self {
            Preset::TwoSensor => None,
            Preset::S18 => Some(GeneratorConfig {
                n_sensors: 18,
                region: Region::new(vec![-0.5, -0.5], vec![0.5, 0.5]),
                anchors: vec![
                    vec![0.45, 0.45],
                    vec![0.45, -0.45],
                    vec![-0.45, 0.45],
                    vec![-0.45, -0.45],
                ],
                radio_range: f64::INFINITY,
                noise_sigma: 0.0,
                seed,
                default_weight: 1.0,
            }),
            Preset::S20 => Some(unit(20, 0.4)),
            Preset::S50 => Some(unit(50, 0.3)),
            Preset::S200 => Some(unit(200, 0.3)),
        }
    }

    pub fn instance(self, seed: u64) -> Result<(ProblemInstance, GroundTruth)> {
        match self.generator_config(seed) {
            None => Ok(make_two_sensor_fixture()),
            Some(cfg) => super::generate_instance(&cfg),
        }
    }

    /// Noise level of the protocol (0 for the noiseless ones).
    pub fn noise_sigma(self) -> f64 {
        self.generator_config(0).map_or(0.0, |c| c.noise_sigma)
    }
}

impl FromStr for Preset {
    type Err = SnlError;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| SnlError::InvalidConfig(format!("unknown preset `{s}`")))
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
