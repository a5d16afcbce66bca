use rand::Rng;
use serde::{Deserialize, Serialize};

use super::triplet::{BranchingTriplet, OffspringLaw, OffspringMode};
use crate::error::{precondition, Error, Result};
use crate::generator::{norm, DiffusionKernel, GeneratorSpec, Motion, RadialFunction};

/// Atoms of mass `1/n` stored as a flat coordinate array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleCloud {
    pub dim: usize,
    pub positions: Vec<f64>,
    pub n: u64,
    pub clock: f64,
    /// Branch epochs passed so far (deterministic mode).
    pub generation: u64,
}

impl ParticleCloud {
    /// `round(mass * n)` atoms at `point`.
    pub fn point_mass(point: &[f64], mass: f64, n: u64) -> Self {
        let count = (mass * n as f64).round() as usize;
        let mut positions = Vec::with_capacity(count * point.len());
        for _ in 0..count {
            positions.extend_from_slice(point);
        }
        ParticleCloud { dim: point.len(), positions, n, clock: 0.0, generation: 0 }
    }

    pub fn count(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn atom_mass(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn total_mass(&self) -> f64 {
        self.count() as f64 / self.n as f64
    }

    pub fn is_extinct(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = &[f64]> {
        self.positions.chunks_exact(self.dim)
    }

    /// Largest atom radius, 0 for the null measure.
    pub fn support_radius(&self) -> f64 {
        self.atoms().map(norm).fold(0.0, f64::max)
    }

    /// `<f, X>` for a radial `f`.
    pub fn integrate(&self, f: &RadialFunction) -> f64 {
        self.atoms().map(|x| f.eval(norm(x))).sum::<f64>() / self.n as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepEvents {
    pub branch_events: usize,
    pub absorbed: usize,
    pub exited: usize,
    pub escaped: usize,
    /// Clock values at which deterministic branching happened.
    pub epochs: Vec<f64>,
}

/// Precomputed state for stepping clouds of one `(generator, triplet, n)`.
#[derive(Debug, Clone)]
pub struct CloudStepper {
    kernel: DiffusionKernel,
    triplet: BranchingTriplet,
    n: u64,
    rate: f64,
    uniform_law: Option<OffspringLaw>,
    pub census_cap: usize,
}

impl CloudStepper {
    pub fn new(spec: &GeneratorSpec, triplet: &BranchingTriplet, n: u64) -> Result<Self> {
        triplet.validate()?;
        precondition(n >= 1, || "resolution n must be at least 1".into())?;
        let kernel = DiffusionKernel::new(spec)?;
        let uniform_law = if triplet.is_homogeneous() { Some(triplet.law_at(0.0, n)?) } else { None };
        Ok(CloudStepper {
            kernel,
            rate: triplet.rate(n),
            triplet: triplet.clone(),
            n,
            uniform_law,
            census_cap: 10_000_000,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn set_escape_radius(&mut self, r: f64) {
        self.kernel.escape_radius = r;
    }

    fn law(&self, x: &[f64]) -> Result<OffspringLaw> {
        match &self.uniform_law {
            Some(l) => Ok(l.clone()),
            None => self.triplet.law_at(norm(x), self.n),
        }
    }

    /// Advances the cloud by `dt`.
    pub fn step<R: Rng + ?Sized>(&self, cloud: &mut ParticleCloud, dt: f64, rng: &mut R) -> Result<StepEvents> {
        precondition(dt > 0.0, || "dt must be positive".into())?;
        precondition(cloud.dim == self.kernel.dimension(), || "cloud and generator dimensions differ".into())?;
        let mut ev = StepEvents::default();
        match self.triplet.offspring_mode {
            OffspringMode::BinaryDeterministic => {
                let end = cloud.clock + dt;
                loop {
                    let epoch = (cloud.generation + 1) as f64 / self.rate;
                    if epoch <= end * (1.0 + 1e-12) {
                        self.move_all(cloud, epoch - cloud.clock, &mut ev, rng);
                        cloud.clock = epoch;
                        cloud.generation += 1;
                        ev.epochs.push(epoch);
                        self.branch(cloud, 1.0, &mut ev, rng)?;
                    } else {
                        if end > cloud.clock {
                            self.move_all(cloud, end - cloud.clock, &mut ev, rng);
                        }
                        cloud.clock = end;
                        break;
                    }
                }
            }
            _ => {
                let prob = self.rate * dt;
                precondition(prob <= 1.0 + 1e-9, || format!("dt = {dt} exceeds 1/rate = {}", 1.0 / self.rate))?;
                self.move_all(cloud, dt, &mut ev, rng);
                cloud.clock += dt;
                self.branch(cloud, prob, &mut ev, rng)?;
            }
        }
        Ok(ev)
    }

    fn move_all<R: Rng + ?Sized>(&self, cloud: &mut ParticleCloud, dt: f64, ev: &mut StepEvents, rng: &mut R) {
        if dt <= 0.0 {
            return;
        }
        let d = cloud.dim;
        let mut keep = 0;
        let count = cloud.count();
        for i in 0..count {
            let (head, tail) = cloud.positions.split_at_mut(i * d);
            let x = &mut tail[..d];
            let (motion, _) = self.kernel.advance(x, dt, rng);
            match motion {
                Motion::Inside => {
                    if keep != i {
                        head[keep * d..keep * d + d].copy_from_slice(x);
                    }
                    keep += 1;
                }
                Motion::Absorbed => ev.absorbed += 1,
                Motion::Exited => ev.exited += 1,
                Motion::Escaped => ev.escaped += 1,
            }
        }
        cloud.positions.truncate(keep * d);
    }

    fn branch<R: Rng + ?Sized>(
        &self,
        cloud: &mut ParticleCloud,
        prob: f64,
        ev: &mut StepEvents,
        rng: &mut R,
    ) -> Result<()> {
        let d = cloud.dim;
        let mut next = Vec::with_capacity(cloud.positions.len() + cloud.positions.len() / 4);
        for x in cloud.positions.chunks_exact(d) {
            if prob >= 1.0 || rng.random::<f64>() < prob {
                ev.branch_events += 1;
                let k = self.law(x)?.sample(rng);
                for _ in 0..k {
                    next.extend_from_slice(x);
                }
            } else {
                next.extend_from_slice(x);
            }
            if next.len() / d > self.census_cap {
                return Err(Error::CensusOverflow(next.len() / d));
            }
        }
        cloud.positions = next;
        Ok(())
    }
}

/// Convenience form of [`CloudStepper::step`] returning a new cloud.
pub fn step_cloud<R: Rng + ?Sized>(
    cloud: &ParticleCloud,
    spec: &GeneratorSpec,
    triplet: &BranchingTriplet,
    dt: f64,
    rng: &mut R,
) -> Result<ParticleCloud> {
    let stepper = CloudStepper::new(spec, triplet, cloud.n)?;
    let mut next = cloud.clone();
    stepper.step(&mut next, dt, rng)?;
    Ok(next)
}
