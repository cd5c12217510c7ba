//! Seeded random instance generation.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64(seed)`. Stream 0 draws sensor positions, stream 1 draws
//! measurement noise, so changing the noise level never moves the sensors.
//!
//! * uniform draws use the top 53 bits of `next_u64`: `u = (r >> 11) · 2⁻⁵³ ∈ [0, 1)`;
//! * sensor `i`, coordinate `α` is `lo_α + (hi_α − lo_α) · u`, drawn in
//!   sensor-major order;
//! * normal draws use the cosine branch of Box–Muller on two consecutive
//!   uniforms, `√(−2 ln(1 − u₁)) · cos(2π u₂)`;
//! * one noise factor `|1 + σ z|` is drawn per included pair, sensor pairs in
//!   lexicographic `(i, j)` order first, then sensor–anchor pairs in `(i, k)`
//!   order. No draws happen when `σ = 0`.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::{AnchorEdge, GroundTruth, ProblemInstance, SensorEdge};
use crate::error::{Result, SnlError};
use crate::numeric::dist2;
use crate::primal::PositionVector;

const POSITION_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

/// Portable seeded generator with the documented sampling rules above.
pub struct StreamRng(ChaCha8Rng);

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self(rng)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self { lo, hi }
    }

    pub fn unit_square() -> Self {
        Self::new(vec![0.0, 0.0], vec![1.0, 1.0])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn diameter(&self) -> f64 {
        dist2(&self.lo, &self.hi).sqrt()
    }

    pub fn corners(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| {
                (0..d)
                    .map(|a| {
                        if mask >> a & 1 == 1 {
                            self.hi[a]
                        } else {
                            self.lo[a]
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Multiplicative noise: measured = true · |1 + ν|, ν ~ N(0, sigma²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma: f64,
}

impl NoiseModel {
    fn apply(&self, rng: &mut StreamRng, true_dist: f64) -> f64 {
        if self.sigma == 0.0 {
            true_dist
        } else {
            true_dist * (1.0 + self.sigma * rng.standard_normal()).abs()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n_sensors: usize,
    pub region: Region,
    pub anchors: Vec<Vec<f64>>,
    /// Pairs farther apart than this are not measured. `f64::INFINITY`
    /// measures every pair.
    pub radio_range: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    pub default_weight: f64,
}

impl GeneratorConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SnlError::InvalidConfig(m.to_string()));
        let d = self.region.dim();
        if d == 0 || self.region.hi.len() != d {
            return bad("region bounds must have matching, nonzero dimension");
        }
        if self
            .region
            .lo
            .iter()
            .zip(&self.region.hi)
            .any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi))
        {
            return bad("region is empty");
        }
        if self.anchors.is_empty() {
            return bad("at least one anchor is required");
        }
        if self.anchors.iter().any(|a| a.len() != d) {
            return bad("anchor dimension differs from region dimension");
        }
        if self.n_sensors == 0 {
            return bad("n_sensors must be at least 1");
        }
        if self.radio_range.is_nan() || self.radio_range < 0.0 {
            return bad("radio_range must be >= 0");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be finite and >= 0");
        }
        if !(self.default_weight > 0.0 && self.default_weight.is_finite()) {
            return bad("default_weight must be finite and > 0");
        }
        Ok(())
    }
}

/// Draws sensors uniformly in the region and measures every pair within
/// radio range, with multiplicative noise.
pub fn generate_instance(cfg: &GeneratorConfig) -> Result<(ProblemInstance, GroundTruth)> {
    cfg.validate()?;
    let d = cfg.region.dim();
    let n = cfg.n_sensors;

    let mut pos_rng = StreamRng::new(cfg.seed, POSITION_STREAM);
    let mut coords = Vec::with_capacity(n * d);
    for _ in 0..n {
        for a in 0..d {
            coords.push(pos_rng.uniform_in(cfg.region.lo[a], cfg.region.hi[a]));
        }
    }
    let truth = PositionVector::new(d, coords)?;

    let noise = NoiseModel {
        sigma: cfg.noise_sigma,
    };
    let mut noise_rng = StreamRng::new(cfg.seed, NOISE_STREAM);
    let mut sensor_edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let true_dist = dist2(truth.point(i), truth.point(j)).sqrt();
            if true_dist <= cfg.radio_range {
                sensor_edges.push(SensorEdge {
                    i,
                    j,
                    dist: noise.apply(&mut noise_rng, true_dist),
                    weight: cfg.default_weight,
                });
            }
        }
    }
    let mut anchor_edges = Vec::new();
    for i in 0..n {
        for (k, a) in cfg.anchors.iter().enumerate() {
            let true_dist = dist2(truth.point(i), a).sqrt();
            if true_dist <= cfg.radio_range {
                anchor_edges.push(AnchorEdge {
                    sensor: i,
                    anchor: k,
                    dist: noise.apply(&mut noise_rng, true_dist),
                    weight: cfg.default_weight,
                });
            }
        }
    }

    let inst = ProblemInstance::new(d, n, cfg.anchors.clone(), sensor_edges, anchor_edges)?;
    let truth = GroundTruth::for_instance(&inst, truth)?;
    Ok((inst, truth))
}
