use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::rng::{stream, Stream};
use super::StudyError;
use crate::linalg::Mat;
use crate::reformulate::TransportNetwork;

/// Generator settings for transport instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportParams {
    pub facilities: usize,
    pub customers: usize,
    pub min_total: f64,
    pub capacity: f64,
    /// Every unit cost lies in `[0, cost_cap]`.
    pub cost_cap: f64,
    /// Standard deviation of every log-cost.
    pub log_std: f64,
}

impl Default for TransportParams {
    fn default() -> Self {
        Self { facilities: 4, customers: 6, min_total: 2.0, capacity: 2.0, cost_cap: 8.0, log_std: 2.0 }
    }
}

/// Network plus the lognormal cost law: `ξ = exp(μ + F z)` clipped to the cost box,
/// `z` standard normal, `F Fᵀ = Diag(σ) C Diag(σ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportInstance {
    pub network: TransportNetwork<f64>,
    pub log_mean: Vec<f64>,
    pub log_std: Vec<f64>,
    pub correlation: Mat<f64>,
    factor: Mat<f64>,
    pub seed: u64,
}

/// Cost vectors and how many coordinates were clipped into the box.
#[derive(Clone, Debug, PartialEq)]
pub struct CostDraws {
    pub samples: Vec<Vec<f64>>,
    pub clipped: usize,
}

impl CostDraws {
    pub fn clip_rate(&self) -> f64 {
        let total: usize = self.samples.iter().map(Vec::len).sum();
        if total == 0 {
            0.0
        } else {
            self.clipped as f64 / total as f64
        }
    }
}

pub fn generate_transport(seed: u64, params: &TransportParams) -> Result<TransportInstance, StudyError> {
    let dim = params.facilities * params.customers;
    if dim == 0 {
        return Err(StudyError::Config("transport sizes must be positive".into()));
    }
    if params.log_std < 0.0 || params.cost_cap <= 0.0 || params.capacity <= 0.0 {
        return Err(StudyError::Config("transport parameters must be positive".into()));
    }
    let network = TransportNetwork {
        facilities: params.facilities,
        customers: params.customers,
        min_total: params.min_total,
        capacity: params.capacity,
        cost_upper: vec![params.cost_cap; dim],
    };
    network.check()?;
    let mut rng = stream(seed, Stream::Instance);
    let log_mean: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let gauss = Mat::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    // C = D^{-1/2} G Gᵀ D^{-1/2} with D = diag(G Gᵀ)
    let row_norms: Vec<f64> = (0..dim).map(|r| gauss.row(r).iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let unit = Mat::from_fn(dim, dim, |r, c| gauss.get(r, c) / row_norms[r]);
    let correlation = Mat::from_fn(dim, dim, |r, c| {
        if r == c {
            1.0
        } else {
            unit.row(r).iter().zip(unit.row(c)).map(|(a, b)| a * b).sum()
        }
    });
    let log_std = vec![params.log_std; dim];
    let factor = Mat::from_fn(dim, dim, |r, c| log_std[r] * unit.get(r, c));
    Ok(TransportInstance { network, log_mean, log_std, correlation, factor, seed })
}

impl TransportInstance {
    pub fn covariance(&self) -> Mat<f64> {
        let d = self.log_mean.len();
        Mat::from_fn(d, d, |r, c| self.log_std[r] * self.correlation.get(r, c) * self.log_std[c])
    }

    /// Unclipped log-costs `μ + F z`.
    pub fn draw_log_costs(&self, rng: &mut impl Rng, count: usize) -> Vec<Vec<f64>> {
        let d = self.log_mean.len();
        (0..count)
            .map(|_| {
                let z: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let fz = self.factor.mul_vec(&z);
                self.log_mean.iter().zip(fz).map(|(m, v)| m + v).collect()
            })
            .collect()
    }

    fn draw(&self, rng: &mut impl Rng, count: usize) -> CostDraws {
        let mut clipped = 0;
        let samples = self
            .draw_log_costs(rng, count)
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .zip(&self.network.cost_upper)
                    .map(|(l, &cap)| {
                        let v = l.exp();
                        if v > cap {
                            clipped += 1;
                            cap
                        } else {
                            v
                        }
                    })
                    .collect()
            })
            .collect();
        CostDraws { samples, clipped }
    }

    /// The first `count` training draws; smaller counts are prefixes of larger ones.
    pub fn training_samples(&self, count: usize) -> CostDraws {
        self.draw(&mut stream(self.seed, Stream::Samples), count)
    }

    pub fn test_samples(&self, count: usize) -> CostDraws {
        self.draw(&mut stream(self.seed, Stream::Test), count)
    }
}

/// Cheapest cost of shipping `supply` to `demand` with unit costs `costs[k * customers + j]`.
/// Demand is rescaled to the supply total. Uses successive shortest paths.
pub fn transport_cost(costs: &[f64], supply: &[f64], demand: &[f64]) -> Result<f64, StudyError> {
    let (m, n) = (supply.len(), demand.len());
    if costs.len() != m * n {
        return Err(StudyError::Config(format!("expected {} costs, got {}", m * n, costs.len())));
    }
    let mut left: Vec<f64> = supply.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = left.iter().sum();
    let dsum: f64 = demand.iter().map(|v| v.max(0.0)).sum();
    if total <= 0.0 {
        return Ok(0.0);
    }
    if dsum <= 0.0 {
        return Err(StudyError::Defect("positive supply with zero demand".into()));
    }
    let mut need: Vec<f64> = demand.iter().map(|v| v.max(0.0) * total / dsum).collect();
    let tiny = 1e-12 * total.max(1.0);
    let mut flow = vec![0.0; m * n];
    let nodes = m + n;
    for _ in 0..(4 * nodes * nodes + 64) {
        if left.iter().all(|&s| s <= tiny) || need.iter().all(|&d| d <= tiny) {
            break;
        }
        // Bellman-Ford from all facilities with stock left
        let mut dist = vec![f64::INFINITY; nodes];
        let mut pred = vec![usize::MAX; nodes];
        for k in 0..m {
            if left[k] > tiny {
                dist[k] = 0.0;
            }
        }
        for _ in 0..nodes {
            let mut changed = false;
            for k in 0..m {
                for j in 0..n {
                    let c = costs[k * n + j];
                    if dist[k] + c < dist[m + j] - 1e-15 {
                        dist[m + j] = dist[k] + c;
                        pred[m + j] = k;
                        changed = true;
                    }
                    if flow[k * n + j] > tiny && dist[m + j] - c < dist[k] - 1e-15 {
                        dist[k] = dist[m + j] - c;
                        pred[k] = m + j;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let target = (0..n)
            .filter(|&j| need[j] > tiny && dist[m + j].is_finite())
            .min_by(|&a, &b| dist[m + a].total_cmp(&dist[m + b]).then(a.cmp(&b)));
        let Some(j) = target else {
            return Err(StudyError::Defect("transport flow has no augmenting path".into()));
        };
        // walk back to the source facility, collecting the bottleneck
        let mut amount = need[j];
        let mut node = m + j;
        let mut path = Vec::new();
        loop {
            let p = pred[node];
            if node < m && p == usize::MAX {
                amount = amount.min(left[node]);
                break;
            }
            if node >= m {
                path.push((p, node - m, true));
            } else {
                let jj = p - m;
                amount = amount.min(flow[node * n + jj]);
                path.push((node, jj, false));
            }
            node = p;
            if path.len() > 2 * nodes {
                return Err(StudyError::Defect("cycle in transport shortest path tree".into()));
            }
        }
        let source = node;
        for (k, jj, forward) in path {
            if forward {
                flow[k * n + jj] += amount;
            } else {
                flow[k * n + jj] = (flow[k * n + jj] - amount).max(0.0);
            }
        }
        left[source] -= amount;
        need[j] -= amount;
    }
    if left.iter().sum::<f64>() > 1e-9 * total.max(1.0) {
        return Err(StudyError::Defect("transport flow did not converge".into()));
    }
    Ok(flow.iter().zip(costs).map(|(f, c)| f * c).sum())
}

/// Comparison slack between a realized cost and the threshold.
pub fn cost_tolerance(threshold: f64) -> f64 {
    1e-6 * threshold.abs().max(1.0)
}

/// Fraction of `test` cost vectors whose optimal shipment costs at most `threshold`.
pub fn estimate_transport_reliability(
    supply: &[f64],
    demand: &[f64],
    threshold: f64,
    test: &[Vec<f64>],
) -> Result<f64, StudyError> {
    if test.is_empty() {
        return Ok(1.0);
    }
    let mut ok = 0usize;
    for xi in test {
        if transport_cost(xi, supply, demand)? <= threshold + cost_tolerance(threshold) {
            ok += 1;
        }
    }
    Ok(ok as f64 / test.len() as f64)
}
