//! Steering-vector sources consumed by coherence, design and metric code.

use crate::model::{Direction, SteeringDictionary, SteeringVector};
use crate::Result;

/// Anything that can produce a steering vector for a frequency and arrival direction.
pub trait SteeringModel: Send + Sync {
    fn num_mics(&self) -> usize;

    fn steering(&self, frequency: f64, direction: &Direction) -> Result<SteeringVector>;

    /// Steering vectors for many directions at one frequency. Models with a
    /// per-frequency setup cost (series coefficients, a factored BEM system)
    /// override this to share it. Errors are annotated with the failing node.
    fn steering_batch(&self, frequency: f64, directions: &[Direction]) -> Result<Vec<SteeringVector>> {
        directions
            .iter()
            .map(|d| {
                self.steering(frequency, d)
                    .map_err(|e| e.at_node(frequency, d.theta(), d.phi()))
            })
            .collect()
    }
}

/// Models that resolve the total field into incident and scattered parts.
pub trait TotalFieldModel: SteeringModel {
    /// `(total, incident)` pairs, both sampled at the same points.
    fn total_and_incident(
        &self,
        frequency: f64,
        directions: &[Direction],
    ) -> Result<Vec<(SteeringVector, SteeringVector)>>;
}

impl SteeringModel for SteeringDictionary {
    fn num_mics(&self) -> usize {
        self.geometry().len()
    }

    fn steering(&self, frequency: f64, direction: &Direction) -> Result<SteeringVector> {
        self.lookup(frequency, direction)
    }
}

impl<T: SteeringModel + ?Sized> SteeringModel for &T {
    fn num_mics(&self) -> usize {
        (**self).num_mics()
    }

    fn steering(&self, frequency: f64, direction: &Direction) -> Result<SteeringVector> {
        (**self).steering(frequency, direction)
    }

    fn steering_batch(&self, frequency: f64, directions: &[Direction]) -> Result<Vec<SteeringVector>> {
        (**self).steering_batch(frequency, directions)
    }
}

impl<T: SteeringModel + ?Sized> SteeringModel for Box<T> {
    fn num_mics(&self) -> usize {
        (**self).num_mics()
    }

    fn steering(&self, frequency: f64, direction: &Direction) -> Result<SteeringVector> {
        (**self).steering(frequency, direction)
    }

    fn steering_batch(&self, frequency: f64, directions: &[Direction]) -> Result<Vec<SteeringVector>> {
        (**self).steering_batch(frequency, directions)
    }
}
