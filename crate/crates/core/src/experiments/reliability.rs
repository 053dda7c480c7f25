use super::transport::{cost_tolerance, transport_cost};
use super::{KnapsackInstance, StudyError, TransportInstance};

/// An instance whose uncertain constraint can be checked at a realized sample.
pub trait RealizedConstraint {
    type Candidate;
    fn holds(&self, candidate: &Self::Candidate, xi: &[f64]) -> Result<bool, StudyError>;
}

/// Shipment plan returned by a transport model.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportCandidate {
    pub supply: Vec<f64>,
    pub demand: Vec<f64>,
    pub threshold: f64,
}

impl RealizedConstraint for KnapsackInstance {
    type Candidate = Vec<f64>;

    fn holds(&self, x: &Vec<f64>, xi: &[f64]) -> Result<bool, StudyError> {
        Ok(self.fits(x, xi))
    }
}

impl RealizedConstraint for TransportInstance {
    type Candidate = TransportCandidate;

    fn holds(&self, c: &TransportCandidate, xi: &[f64]) -> Result<bool, StudyError> {
        Ok(transport_cost(xi, &c.supply, &c.demand)? <= c.threshold + cost_tolerance(c.threshold))
    }
}

/// Fraction of `test` samples at which the candidate's constraint holds; 1 for an empty set.
pub fn estimate_reliability<I: RealizedConstraint>(
    candidate: &I::Candidate,
    test: &[Vec<f64>],
    instance: &I,
) -> Result<f64, StudyError> {
    if test.is_empty() {
        return Ok(1.0);
    }
    let mut ok = 0usize;
    for xi in test {
        if instance.holds(candidate, xi)? {
            ok += 1;
        }
    }
    Ok(ok as f64 / test.len() as f64)
}
