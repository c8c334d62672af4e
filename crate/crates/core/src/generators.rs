//! Seeded test sequences: decaying families that satisfy the hypothesis
//! `||a_i|| -> 0`, and constant-norm families that violate it.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// `(cos iθ, sin iθ) / i^p`
    HarmonicSpiral,
    /// Uniform random direction, norm `i^-p`.
    PowerDecay,
    /// `c · (cos iθ, sin iθ)`; never decays.
    ConstantRotation,
    /// `(i^-p, 0, ...)`
    Collinear,
    /// Uniform in the ball of radius `i^-p`.
    UniformRandomBall,
}

impl Family {
    fn decays(self) -> bool {
        !matches!(self, Family::ConstantRotation)
    }

    fn planar_only(self) -> bool {
        matches!(self, Family::HarmonicSpiral | Family::ConstantRotation)
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "harmonic_spiral" => Family::HarmonicSpiral,
            "power_decay" => Family::PowerDecay,
            "constant_rotation" => Family::ConstantRotation,
            "collinear" => Family::Collinear,
            "uniform_random_ball" => Family::UniformRandomBall,
            other => return Err(Error::domain(format!("unknown sequence family {other:?}"))),
        })
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::HarmonicSpiral => "harmonic_spiral",
            Family::PowerDecay => "power_decay",
            Family::ConstantRotation => "constant_rotation",
            Family::Collinear => "collinear",
            Family::UniformRandomBall => "uniform_random_ball",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceSpec {
    pub family: Family,
    pub length: usize,
    pub dim: usize,
    /// Decay exponent `p`.
    pub decay: f64,
    /// Rotation step `θ` in radians.
    pub theta: f64,
    /// Norm `c` of the constant-rotation family.
    pub norm_floor: f64,
    pub seed: u64,
}

impl SequenceSpec {
    pub fn new(family: Family, length: usize) -> Self {
        SequenceSpec {
            family,
            length,
            dim: 2,
            decay: 1.0,
            theta: 1.0,
            norm_floor: 1.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::domain("sequence length must be at least 1"));
        }
        if self.dim < 1 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        if self.family.planar_only() && self.dim != 2 {
            return Err(Error::domain(format!("{} is planar only", self.family)));
        }
        if self.family.decays() && !(self.decay > 0.0 && self.decay.is_finite()) {
            return Err(Error::domain(format!(
                "decay exponent must be positive, got {}",
                self.decay
            )));
        }
        if !self.theta.is_finite() {
            return Err(Error::domain("rotation step must be finite"));
        }
        if self.family == Family::ConstantRotation
            && !(self.norm_floor > 0.0 && self.norm_floor.is_finite())
        {
            return Err(Error::domain("norm floor must be positive"));
        }
        Ok(())
    }
}

fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    if dim == 1 {
        return vec![if rng.random::<bool>() { 1.0 } else { -1.0 }];
    }
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

pub fn generate(spec: &SequenceSpec) -> Result<Vec<Vector>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (p, theta, dim) = (spec.decay, spec.theta, spec.dim);
    (1..=spec.length)
        .map(|i| {
            let t = i as f64;
            let coords = match spec.family {
                Family::HarmonicSpiral => {
                    let d = t.powf(p);
                    vec![(t * theta).cos() / d, (t * theta).sin() / d]
                }
                Family::ConstantRotation => {
                    let c = spec.norm_floor;
                    vec![(t * theta).cos() * c, (t * theta).sin() * c]
                }
                Family::Collinear => {
                    let mut v = vec![0.0; dim];
                    v[0] = 1.0 / t.powf(p);
                    v
                }
                Family::PowerDecay => {
                    let r = 1.0 / t.powf(p);
                    random_direction(&mut rng, dim).into_iter().map(|x| x * r).collect()
                }
                Family::UniformRandomBall => {
                    let r = rng.random::<f64>().powf(1.0 / dim as f64) / t.powf(p);
                    random_direction(&mut rng, dim).into_iter().map(|x| x * r).collect()
                }
            };
            Vector::new(coords)
        })
        .collect()
}
