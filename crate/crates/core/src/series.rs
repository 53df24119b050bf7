//! Picard power series `u = sum_j Xi_j`, per-tree terms, partial sums,
//! the contraction fixed point and the tail residual.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{GibqError, Result};
use crate::flow::{duhamel_forcing, duhamel_trajectory, linear_flow, product_trajectory, InitialPair, Trajectory};
use crate::ktree::{compositions, KTree};

/// Iteration cap of [`fixed_point`].
pub const FIXED_POINT_MAX_ITER: usize = 64;

/// Consecutive distance increases that flag a non-contracting iteration.
pub const NON_CONTRACTION_STREAK: usize = 3;

#[derive(Clone, Debug)]
pub struct SeriesTerm {
    pub j: usize,
    /// Homogeneity degree `(k - 1) j + 1` in the data.
    pub degree: usize,
    pub trajectory: Trajectory,
}

/// Memoized generator of `Xi_0, Xi_1, ...` for fixed data and arity.
pub struct PicardSeries {
    arity: usize,
    terms: Vec<Trajectory>,
}

impl PicardSeries {
    pub fn new(pair: &InitialPair, k: usize, horizon: f64, p: usize) -> Result<Self> {
        if k < 2 {
            return Err(GibqError::Domain(format!("nonlinearity power must be >= 2, got {k}")));
        }
        Ok(Self {
            arity: k,
            terms: vec![linear_flow(pair, horizon, p)?],
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn computed(&self) -> usize {
        self.terms.len()
    }

    /// `Xi_j`, computing missing generations in order.
    pub fn term(&mut self, j: usize) -> Result<&Trajectory> {
        while self.terms.len() <= j {
            let next = self.next_term()?;
            self.terms.push(next);
        }
        Ok(&self.terms[j])
    }

    /// `Xi_j = I_k` applied to the sum over compositions of `j - 1` of the
    /// products `Xi_{j_1} ... Xi_{j_k}`; permuted compositions share a product.
    fn next_term(&self) -> Result<Trajectory> {
        let j = self.terms.len();
        let mut classes: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for mut comp in compositions(j - 1, self.arity) {
            comp.sort_unstable();
            *classes.entry(comp).or_default() += 1;
        }
        let classes: Vec<(Vec<usize>, usize)> = classes.into_iter().collect();
        let products = classes
            .par_iter()
            .map(|(comp, mult)| {
                let args: Vec<&Trajectory> = comp.iter().map(|&g| &self.terms[g]).collect();
                Ok(product_trajectory(&args)?.scale_real(*mult as f64))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut forcing = products[0].clone();
        for prod in &products[1..] {
            forcing = forcing.add(prod)?;
        }
        Ok(duhamel_forcing(&forcing))
    }

    pub fn series_term(&mut self, j: usize) -> Result<SeriesTerm> {
        let degree = (self.arity - 1) * j + 1;
        Ok(SeriesTerm {
            j,
            degree,
            trajectory: self.term(j)?.clone(),
        })
    }
}

/// `Xi_j(pair)` on `[0, horizon]`.
pub fn xi_term(pair: &InitialPair, k: usize, j: usize, horizon: f64, p: usize) -> Result<SeriesTerm> {
    PicardSeries::new(pair, k, horizon, p)?.series_term(j)
}

/// Tree term: terminals become `S(t) pair`, internal nodes become `I_k`.
pub fn psi_tree(pair: &InitialPair, tree: &KTree, horizon: f64, p: usize) -> Result<Trajectory> {
    let flow = linear_flow(pair, horizon, p)?;
    fn go(tree: &KTree, flow: &Trajectory) -> Result<Trajectory> {
        match tree {
            KTree::Terminal => Ok(flow.clone()),
            KTree::Node(children) => {
                let vals = children.iter().map(|c| go(c, flow)).collect::<Result<Vec<_>>>()?;
                let refs: Vec<&Trajectory> = vals.iter().collect();
                duhamel_trajectory(&refs)
            }
        }
    }
    go(tree, &flow)
}

/// Terms `Xi_0..=Xi_J`, partial sums `U_0..=U_J` and the ledger
/// `sup_t ||Xi_j(t)||_{l1}`.
#[derive(Clone, Debug)]
pub struct SeriesAccumulator {
    pub arity: usize,
    pub terms: Vec<SeriesTerm>,
    pub partial_sums: Vec<Trajectory>,
    pub ledger: Vec<f64>,
}

impl SeriesAccumulator {
    pub fn max_gen(&self) -> usize {
        self.terms.len() - 1
    }

    /// `U_J` for the largest computed `J`.
    pub fn sum(&self) -> &Trajectory {
        self.partial_sums.last().expect("accumulator holds U_0")
    }

    /// `ledger[j + 1] / ledger[j]`, `NaN` where `ledger[j] = 0`.
    pub fn ratios(&self) -> Vec<f64> {
        self.ledger
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { f64::NAN })
            .collect()
    }

    /// Whether every generation ratio is below one.
    pub fn is_geometric(&self) -> bool {
        self.ratios().iter().all(|r| r.is_nan() || *r < 1.0)
    }

    /// CSV `j,sup_l1,ratio`; the ratio column is `ledger[j] / ledger[j-1]`.
    pub fn ledger_csv(&self) -> String {
        let mut out = String::from("j,sup_l1,ratio\n");
        for (j, v) in self.ledger.iter().enumerate() {
            let ratio = if j == 0 || self.ledger[j - 1] == 0.0 {
                String::new()
            } else {
                format!("{:.12e}", v / self.ledger[j - 1])
            };
            out.push_str(&format!("{j},{v:.12e},{ratio}\n"));
        }
        out
    }
}

pub fn partial_sum(pair: &InitialPair, k: usize, max_gen: usize, horizon: f64, p: usize) -> Result<SeriesAccumulator> {
    let mut series = PicardSeries::new(pair, k, horizon, p)?;
    accumulate(&mut series, max_gen)
}

/// Accumulator over the first `max_gen + 1` terms of an existing series.
pub fn accumulate(series: &mut PicardSeries, max_gen: usize) -> Result<SeriesAccumulator> {
    let mut terms = Vec::with_capacity(max_gen + 1);
    let mut partial_sums: Vec<Trajectory> = Vec::with_capacity(max_gen + 1);
    let mut ledger = Vec::with_capacity(max_gen + 1);
    for j in 0..=max_gen {
        let term = series.series_term(j)?;
        ledger.push(term.trajectory.sup_l1());
        let sum = match partial_sums.last() {
            Some(prev) => prev.add(&term.trajectory)?,
            None => term.trajectory.clone(),
        };
        partial_sums.push(sum);
        terms.push(term);
    }
    Ok(SeriesAccumulator {
        arity: series.arity(),
        terms,
        partial_sums,
        ledger,
    })
}

/// `Gamma[u] = S(t) pair + I_k(u, ..., u)`.
pub fn picard_map(pair: &InitialPair, k: usize, u: &Trajectory) -> Result<Trajectory> {
    let flow = linear_flow(pair, u.horizon(), u.degree())?;
    let args = vec![u; k];
    flow.add(&duhamel_trajectory(&args)?)
}

/// `sup_t ||U_J - Gamma[U_J]||_{l1}` for the largest computed `J`.
pub fn tail_residual(acc: &SeriesAccumulator, pair: &InitialPair) -> Result<f64> {
    let u = acc.sum();
    u.distance_sup_l1(&picard_map(pair, acc.arity, u)?)
}

#[derive(Clone, Debug)]
pub struct FixedPoint {
    pub trajectory: Trajectory,
    pub iterations: usize,
    /// Successive sup-l1 distances `||u_{m+1} - u_m||`.
    pub distances: Vec<f64>,
    /// Last ratio of successive distances, `NaN` before two steps.
    pub contraction_factor: f64,
    /// `sup_t ||u - Gamma[u]||_{l1}` at the returned iterate.
    pub residual: f64,
}

/// Picard iteration `u -> Gamma[u]` from `u = S(t) pair` until successive
/// iterates are within `tol` in sup-l1.
pub fn fixed_point(pair: &InitialPair, k: usize, horizon: f64, p: usize, tol: f64) -> Result<FixedPoint> {
    if !(tol > 0.0) {
        return Err(GibqError::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut u = linear_flow(pair, horizon, p)?;
    let mut distances: Vec<f64> = Vec::new();
    let mut increases = 0;
    for it in 1..=FIXED_POINT_MAX_ITER {
        let next = picard_map(pair, k, &u)?;
        let d = next.distance_sup_l1(&u)?;
        let factor = distances.last().map_or(f64::NAN, |prev| if *prev > 0.0 { d / prev } else { 0.0 });
        if distances.last().is_some_and(|prev| d > *prev) {
            increases += 1;
        } else {
            increases = 0;
        }
        distances.push(d);
        u = next;
        if !d.is_finite() || increases >= NON_CONTRACTION_STREAK {
            return Err(GibqError::NotContracting { factor, iterations: it });
        }
        if d < tol {
            let residual = u.distance_sup_l1(&picard_map(pair, k, &u)?)?;
            return Ok(FixedPoint {
                trajectory: u,
                iterations: it,
                distances,
                contraction_factor: factor,
                residual,
            });
        }
    }
    Err(GibqError::IterationCap {
        tol,
        iterations: FIXED_POINT_MAX_ITER,
        distance: *distances.last().unwrap(),
    })
}
