//! Capacity regions as a linear program over enumerated schedules.
//!
//! The load of `lambda` is `min sum alpha_x` subject to `sum alpha_x x >= lambda`
//! and `alpha >= 0`, so `lambda` lies in the capacity region exactly when its
//! load is at most 1. The LP is solved in exact rational arithmetic by a
//! two-phase tableau simplex with Bland's rule; `f64` inputs convert exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{StateSpace, Topology, DEFAULT_ENUMERATION_CAP};

/// Rates to be decomposed over a set of schedules.
#[derive(Debug, Clone)]
pub struct CapacityQuery {
    lambda: Vec<f64>,
    schedules: StateSpace,
}

impl CapacityQuery {
    pub fn new(lambda: Vec<f64>, schedules: StateSpace) -> Result<Self> {
        if schedules.is_empty() {
            return Err(Error::EmptyVector);
        }
        let n = schedules.get(0).len();
        if let Some(bad) = schedules.states().iter().find(|s| s.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: bad.len() });
        }
        if lambda.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: lambda.len() });
        }
        if let Some(&bad) = lambda.iter().find(|&&l| !(l >= 0.0) || !l.is_finite()) {
            return Err(Error::NegativeInput(bad));
        }
        if schedules.index_of(&vec![0; n]).is_none() {
            return Err(Error::InvalidArgument("schedule set must contain the zero vector".into()));
        }
        Ok(Self { lambda, schedules })
    }

    /// Query over every schedule (wireless) or allocation (circuit) of `topology`.
    pub fn for_topology(topology: &Topology, lambda: Vec<f64>) -> Result<Self> {
        Self::new(lambda, topology.state_space(DEFAULT_ENUMERATION_CAP)?)
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn schedules(&self) -> &StateSpace {
        &self.schedules
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessEntry {
    pub state_index: usize,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadResult {
    pub load: f64,
    pub admissible: bool,
    pub strictly_admissible: bool,
    /// Non-zero weights of an optimal decomposition, by state index.
    pub witness: Vec<WitnessEntry>,
}

impl LoadResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("load result serializes")
    }
}

/// Minimal total schedule weight covering `q.lambda`.
pub fn load_factor(q: &CapacityQuery) -> Result<LoadResult> {
    let lambda = q
        .lambda
        .iter()
        .map(|&l| BigRational::from_float(l).ok_or(Error::NegativeInput(l)))
        .collect::<Result<Vec<_>>>()?;
    let alpha = solve(&lambda, q.schedules.states())?;

    // Exact coverage of the witness.
    for (i, l) in lambda.iter().enumerate() {
        let covered: BigRational = alpha.iter().map(|(k, a)| a * BigInt::from(q.schedules.get(*k)[i])).sum();
        if &covered < l {
            return Err(Error::Infeasible);
        }
    }
    let load: BigRational = alpha.iter().map(|(_, a)| a.clone()).sum();
    let one = BigRational::one();
    let witness: Vec<WitnessEntry> =
        alpha.iter().map(|(k, a)| WitnessEntry { state_index: *k, alpha: to_f64(a) }).collect();
    Ok(LoadResult { load: to_f64(&load), admissible: load <= one, strictly_admissible: load < one, witness })
}

/// `c * direction` whose load equals `target`.
///
/// Load is positively homogeneous, so `c = target / load(direction)`; the
/// result is re-solved to confirm it lands within 1e-6 of `target`.
pub fn scale_to_load(direction: &[f64], target: f64, schedules: &StateSpace) -> Result<Vec<f64>> {
    if !(target >= 0.0) || !target.is_finite() {
        return Err(Error::InvalidArgument(format!("target load must be non-negative, got {target}")));
    }
    let base = load_factor(&CapacityQuery::new(direction.to_vec(), schedules.clone())?)?;
    if base.load <= 0.0 {
        return Err(Error::InvalidArgument("direction must be non-zero".into()));
    }
    let c = target / base.load;
    let lambda: Vec<f64> = direction.iter().map(|&d| c * d).collect();
    let check = load_factor(&CapacityQuery::new(lambda.clone(), schedules.clone())?)?;
    if (check.load - target).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!("scaled load {} misses target {target}", check.load)));
    }
    Ok(lambda)
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("finite rational converts")
}

/// Optimal `alpha` as `(state index, value)` pairs with positive value.
fn solve(lambda: &[BigRational], schedules: &[Vec<u32>]) -> Result<Vec<(usize, BigRational)>> {
    let m = lambda.len();
    let k = schedules.len();
    // Columns: alpha (k), surplus (m), artificial (m).
    let cols = k + 2 * m;
    let mut rows: Vec<Vec<BigRational>> = (0..m)
        .map(|i| {
            let mut row = vec![BigRational::zero(); cols];
            for (j, s) in schedules.iter().enumerate() {
                row[j] = BigRational::from_integer(BigInt::from(s[i]));
            }
            row[k + i] = -BigRational::one();
            row[k + m + i] = BigRational::one();
            row
        })
        .collect();
    let mut rhs: Vec<BigRational> = lambda.to_vec();
    let mut basis: Vec<usize> = (0..m).map(|i| k + m + i).collect();
    let mut tab = Tableau { rows: &mut rows, rhs: &mut rhs, basis: &mut basis };

    let phase1: Vec<BigRational> = (0..cols).map(|j| if j >= k + m { BigRational::one() } else { BigRational::zero() }).collect();
    let value = tab.minimize(&phase1, cols);
    if value.is_positive() {
        return Err(Error::Infeasible);
    }
    tab.drive_out_artificials(k + m);

    let phase2: Vec<BigRational> = (0..cols).map(|j| if j < k { BigRational::one() } else { BigRational::zero() }).collect();
    tab.minimize(&phase2, k + m);

    let mut alpha: Vec<(usize, BigRational)> = tab
        .basis
        .iter()
        .zip(tab.rhs.iter())
        .filter(|(&j, v)| j < k && v.is_positive())
        .map(|(&j, v)| (j, v.clone()))
        .collect();
    alpha.sort_by_key(|(j, _)| *j);
    Ok(alpha)
}

struct Tableau<'a> {
    rows: &'a mut Vec<Vec<BigRational>>,
    rhs: &'a mut Vec<BigRational>,
    basis: &'a mut Vec<usize>,
}

impl Tableau<'_> {
    /// Minimizes `cost . x` letting only columns below `limit` enter; returns the optimum.
    fn minimize(&mut self, cost: &[BigRational], limit: usize) -> BigRational {
        loop {
            let reduced = self.reduced_costs(cost, limit);
            // Bland: lowest-index improving column, then lowest-index leaving variable.
            let Some(enter) = reduced.iter().position(|r| r.is_negative()) else {
                return self.basis.iter().zip(self.rhs.iter()).map(|(&j, v)| &cost[j] * v).sum();
            };
            let mut leave: Option<(usize, BigRational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][enter];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &leave {
                    None => true,
                    Some((best, r)) => ratio < *r || (ratio == *r && self.basis[i] < self.basis[*best]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let (row, _) = leave.expect("objective is bounded below");
            self.pivot(row, enter);
        }
    }

    fn reduced_costs(&self, cost: &[BigRational], limit: usize) -> Vec<BigRational> {
        (0..limit)
            .map(|j| {
                let mut r = cost[j].clone();
                for (i, &b) in self.basis.iter().enumerate() {
                    if !cost[b].is_zero() && !self.rows[i][j].is_zero() {
                        r -= &cost[b] * &self.rows[i][j];
                    }
                }
                r
            })
            .collect()
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col].clone();
        for v in self.rows[row].iter_mut() {
            if !v.is_zero() {
                *v /= &p;
            }
        }
        self.rhs[row] /= &p;
        let pivot_row = self.rows[row].clone();
        let pivot_rhs = self.rhs[row].clone();
        for i in 0..self.rows.len() {
            if i == row || self.rows[i][col].is_zero() {
                continue;
            }
            let factor = self.rows[i][col].clone();
            for (v, pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &factor * pv;
                }
            }
            self.rhs[i] -= &factor * &pivot_rhs;
        }
        self.basis[row] = col;
    }

    /// After a zero-value phase 1, swaps basic artificials for real columns and
    /// drops rows that turn out to be redundant.
    fn drive_out_artificials(&mut self, first_artificial: usize) {
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] < first_artificial {
                i += 1;
                continue;
            }
            match (0..first_artificial).find(|&j| !self.rows[i][j].is_zero()) {
                Some(j) => {
                    self.pivot(i, j);
                    i += 1;
                }
                None => {
                    self.rows.remove(i);
                    self.rhs.remove(i);
                    self.basis.remove(i);
                }
            }
        }
    }
}
