//! First-stage production/demand planning with uncertain unit transport costs.
//!
//! Costs are indexed `k * customers + j` for facility `k` and customer `j`.

use serde::{Deserialize, Serialize};

use crate::conic_ir::{ConeProgram, LinExpr};
use crate::model::{SampleSet, Sense};
use crate::scalar::Scalar;

use super::{ReformError, ALPHA_MIN};

/// Network data shared by the transport models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TransportNetwork<T> {
    pub facilities: usize,
    pub customers: usize,
    /// Lower bound on total production.
    pub min_total: T,
    /// Per-facility production capacity.
    pub capacity: T,
    /// Upper corner of the cost box `[0, cost_upper]`.
    pub cost_upper: Vec<T>,
}

impl<T: Scalar> TransportNetwork<T> {
    pub fn n_arcs(&self) -> usize {
        self.facilities * self.customers
    }

    pub fn check(&self) -> Result<(), ReformError> {
        if self.facilities == 0 || self.customers == 0 {
            return Err(ReformError::Precondition("transport network needs facilities and customers".into()));
        }
        if self.cost_upper.len() != self.n_arcs() {
            return Err(crate::model::ModelError::DimensionMismatch {
                what: "cost upper bounds".into(),
                expected: self.n_arcs(),
                found: self.cost_upper.len(),
            }
            .into());
        }
        if self.min_total > T::of(self.facilities as f64) * self.capacity {
            return Err(ReformError::Precondition("minimum total exceeds total capacity".into()));
        }
        Ok(())
    }

    fn check_samples(&self, samples: &SampleSet<T>) -> Result<(), ReformError> {
        self.check()?;
        if samples.dim() != self.n_arcs() {
            return Err(crate::model::ModelError::DimensionMismatch {
                what: "transport sample".into(),
                expected: self.n_arcs(),
                found: samples.dim(),
            }
            .into());
        }
        Ok(())
    }
}

/// Variable indices of the transport programs.
#[derive(Clone, Debug)]
pub struct TransportLayout {
    pub production: Vec<usize>,
    pub demand: Vec<usize>,
    pub threshold: usize,
    /// Per-sample shipment plan, indexed `[i][k * customers + j]`.
    pub plans: Vec<Vec<usize>>,
    pub alpha: Option<usize>,
    /// Sample indicators of the sample-average program.
    pub indicators: Vec<usize>,
}

impl TransportLayout {
    /// `(production, demand, threshold)`.
    pub fn decision<T: Scalar>(&self, primal: &[T]) -> (Vec<T>, Vec<T>, T) {
        (
            self.production.iter().map(|&v| primal[v]).collect(),
            self.demand.iter().map(|&v| primal[v]).collect(),
            primal[self.threshold],
        )
    }
}

fn add_first_stage<T: Scalar>(prog: &mut ConeProgram<T>, net: &TransportNetwork<T>) -> Result<(Vec<usize>, Vec<usize>, usize), ReformError> {
    let a = prog.add_vars("a", net.facilities);
    let b = prog.add_vars("b", net.customers);
    let z = prog.add_var("z");
    prog.set_objective(LinExpr::var(z), Sense::Minimize);
    prog.add_eq(LinExpr::sum(&a) - LinExpr::sum(&b))?;
    prog.add_nonneg(LinExpr::sum(&a) - LinExpr::constant(net.min_total))?;
    for &v in &a {
        prog.add_nonneg(LinExpr::var(v))?;
        prog.add_nonneg(LinExpr::from_terms(vec![(v, -T::one())], net.capacity))?;
    }
    for &v in &b {
        prog.add_nonneg(LinExpr::var(v))?;
    }
    Ok((a, b, z))
}

/// Shipment plan with the given margins.
fn add_plan<T: Scalar>(prog: &mut ConeProgram<T>, net: &TransportNetwork<T>, a: &[usize], b: &[usize], i: usize) -> Result<Vec<usize>, ReformError> {
    let x = prog.add_vars(&format!("x[{i}]"), net.n_arcs());
    for &v in &x {
        prog.add_nonneg(LinExpr::var(v))?;
    }
    let nc = net.customers;
    for k in 0..net.facilities {
        prog.add_eq(LinExpr::sum(&x[k * nc..(k + 1) * nc]) - LinExpr::var(a[k]))?;
    }
    for j in 0..nc {
        let col: Vec<usize> = (0..net.facilities).map(|k| x[k * nc + j]).collect();
        prog.add_eq(LinExpr::sum(&col) - LinExpr::var(b[j]))?;
    }
    Ok(x)
}

/// How the rows `δ|v_ir| + (1/N)Σq ≤ εα` are written.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetRows {
    /// Each row repeats the full sum over `q`.
    #[default]
    PerSample,
    /// One extra variable holds `εα − (1/N)Σq`; every row then has two terms.
    Shared,
}

/// Worst-case CVaR linear program under a type-1 ball with L1 ground metric and
/// the cost box as support.
pub fn build_transport_cvar_lp<T: Scalar>(
    net: &TransportNetwork<T>,
    samples: &SampleSet<T>,
    risk: T,
    radius: T,
    rows: BudgetRows,
) -> Result<(ConeProgram<T>, TransportLayout), ReformError> {
    net.check_samples(samples)?;
    check_risk(risk, true)?;
    if radius < T::zero() {
        return Err(ReformError::Precondition("radius must be nonnegative".into()));
    }
    let n_s = samples.n_samples();
    let inv_n = T::one() / T::of(n_s as f64);
    let mut prog = ConeProgram::new();
    let (a, b, z) = add_first_stage(&mut prog, net)?;
    let alpha = prog.add_var("alpha");
    prog.add_nonneg(LinExpr::from_terms(vec![(alpha, T::one())], -T::of(ALPHA_MIN)))?;
    let mut plans = Vec::with_capacity(n_s);
    let mut duals = Vec::with_capacity(n_s);
    let mut q = Vec::with_capacity(n_s);
    for i in 0..n_s {
        let x = add_plan(&mut prog, net, &a, &b, i)?;
        let y = prog.add_vars(&format!("y[{i}]"), net.n_arcs());
        let v = prog.add_vars(&format!("v[{i}]"), net.n_arcs());
        let qi = prog.add_var(format!("q[{i}]"));
        prog.add_nonneg(LinExpr::var(qi))?;
        for r in 0..net.n_arcs() {
            prog.add_nonneg(LinExpr::var(y[r]))?;
            prog.add_nonneg(LinExpr::from_terms(vec![(y[r], T::one()), (v[r], -T::one()), (x[r], -T::one())], T::zero()))?;
        }
        // z − α + vᵀζ + q − dᵀy ≥ 0
        let mut row = LinExpr::from_terms(vec![(z, T::one()), (alpha, -T::one()), (qi, T::one())], T::zero());
        for r in 0..net.n_arcs() {
            row.add_term(v[r], samples.get(i)[r]);
            row.add_term(y[r], -net.cost_upper[r]);
        }
        prog.add_nonneg(row)?;
        plans.push(x);
        duals.push(v);
        q.push(qi);
    }
    let mut head = LinExpr::term(alpha, risk);
    for &qi in &q {
        head.add_term(qi, -inv_n);
    }
    if radius.is_zero() {
        prog.add_nonneg(head)?;
    } else if rows == BudgetRows::Shared {
        let w = prog.add_var("budget");
        prog.add_eq(head - LinExpr::var(w))?;
        for v in &duals {
            for &vr in v {
                prog.add_nonneg(LinExpr::from_terms(vec![(w, T::one()), (vr, -radius)], T::zero()))?;
                prog.add_nonneg(LinExpr::from_terms(vec![(w, T::one()), (vr, radius)], T::zero()))?;
            }
        }
    } else {
        for v in &duals {
            for &vr in v {
                prog.add_nonneg(head.clone() - LinExpr::term(vr, radius))?;
                prog.add_nonneg(head.clone() + LinExpr::term(vr, radius))?;
            }
        }
    }
    Ok((prog, TransportLayout { production: a, demand: b, threshold: z, plans, alpha: Some(alpha), indicators: Vec::new() }))
}

fn check_risk<T: Scalar>(risk: T, strict: bool) -> Result<(), ReformError> {
    let ok = if strict { risk > T::zero() && risk < T::one() } else { risk >= T::zero() && risk < T::one() };
    if ok {
        Ok(())
    } else {
        Err(ReformError::Precondition(format!("risk level {risk} out of range")))
    }
}

/// Big-M constant bounding every plan cost: `max_r d_r · facilities · capacity`.
pub fn transport_big_m<T: Scalar>(net: &TransportNetwork<T>) -> T {
    let dmax = net.cost_upper.iter().copied().fold(T::zero(), T::max);
    dmax * T::of(net.facilities as f64) * net.capacity
}

/// Sample-average mixed-integer program with one indicator per sample.
pub fn build_transport_saa_milp<T: Scalar>(
    net: &TransportNetwork<T>,
    samples: &SampleSet<T>,
    risk: T,
) -> Result<(ConeProgram<T>, TransportLayout), ReformError> {
    net.check_samples(samples)?;
    check_risk(risk, false)?;
    let n_s = samples.n_samples();
    let big_m = transport_big_m(net);
    let mut prog = ConeProgram::new();
    let (a, b, z) = add_first_stage(&mut prog, net)?;
    let mut plans = Vec::with_capacity(n_s);
    let mut s = Vec::with_capacity(n_s);
    for i in 0..n_s {
        let x = add_plan(&mut prog, net, &a, &b, i)?;
        let si = prog.add_var(format!("s[{i}]"));
        prog.mark_binary(si)?;
        // z − ζᵀx − M(s − 1) ≥ 0
        let mut row = LinExpr::from_terms(vec![(z, T::one()), (si, -big_m)], big_m);
        for (r, &xr) in x.iter().enumerate() {
            row.add_term(xr, -samples.get(i)[r]);
        }
        prog.add_nonneg(row)?;
        plans.push(x);
        s.push(si);
    }
    let n = T::of(n_s as f64);
    prog.add_nonneg(LinExpr::sum(&s) - LinExpr::constant((T::one() - risk) * n))?;
    Ok((prog, TransportLayout { production: a, demand: b, threshold: z, plans, alpha: None, indicators: s }))
}
