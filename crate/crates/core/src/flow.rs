//! Linear propagator `S(t)` and the multilinear Duhamel operator `I_k`.
//!
//! Time dependence is carried by a [`Trajectory`]: one spectral field per
//! Chebyshev-Gauss-Lobatto node on `[0, T]`, evaluated elsewhere by
//! barycentric interpolation. Every Fourier mode evolves independently under
//! the symbol `lambda(xi) <= 1`, so over horizons `T <= 1` all data are
//! entire in time and low-degree interpolation is spectrally accurate.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chebyshev::{barycentric_weights, clenshaw_curtis, lagrange_row, lobatto_nodes};
use crate::error::{GibqError, Result};
use crate::lattice::{convolve, lambda_symbol, FrequencyLattice, SpectralField, SpectralFieldDoc, C64, PRUNE_REL};

/// Default time degree `p`.
pub const DEFAULT_DEGREE: usize = 16;

/// Below this `|t lambda|` the ratio `sin(t lambda) / lambda` uses its Taylor series.
pub const SINC_SERIES_THRESHOLD: f64 = 1e-4;

/// `sin(t lambda) / lambda`, continuous through `lambda = 0` where it equals `t`.
#[inline]
pub fn sin_over(t: f64, lambda: f64) -> f64 {
    let x = t * lambda;
    if x.abs() < SINC_SERIES_THRESHOLD {
        let x2 = x * x;
        t * (1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0)))
    } else {
        x.sin() / lambda
    }
}

/// Initial data `(u(0), u_t(0))`.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialPair {
    pub u0: SpectralField,
    pub u1: SpectralField,
}

impl InitialPair {
    pub fn new(u0: SpectralField, u1: SpectralField) -> Result<Self> {
        u0.check_lattice(&u1)?;
        Ok(Self { u0, u1 })
    }

    pub fn zero(lattice: FrequencyLattice) -> Self {
        Self {
            u0: SpectralField::zero(lattice),
            u1: SpectralField::zero(lattice),
        }
    }

    pub fn lattice(&self) -> &FrequencyLattice {
        self.u0.lattice()
    }

    pub fn is_zero(&self) -> bool {
        self.u0.is_empty() && self.u1.is_empty()
    }

    /// Coefficient l1 norm of the pair (sum over components).
    pub fn l1(&self) -> f64 {
        self.u0.l1() + self.u1.l1()
    }

    pub fn add(&self, other: &InitialPair) -> Result<Self> {
        Self::new(self.u0.add(&other.u0)?, self.u1.add(&other.u1)?)
    }

    pub fn sub(&self, other: &InitialPair) -> Result<Self> {
        Self::new(self.u0.sub(&other.u0)?, self.u1.sub(&other.u1)?)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        Self {
            u0: self.u0.scale_real(factor),
            u1: self.u1.scale_real(factor),
        }
    }
}

/// Spectral fields sampled at Lobatto nodes of `[0, horizon]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    lattice: FrequencyLattice,
    horizon: f64,
    nodes: Vec<f64>,
    values: Vec<SpectralField>,
}

impl Trajectory {
    pub fn from_values(lattice: FrequencyLattice, horizon: f64, values: Vec<SpectralField>) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(GibqError::Domain(format!("horizon must be positive, got {horizon}")));
        }
        if values.len() < 2 {
            return Err(GibqError::Domain("a trajectory needs at least two nodes".into()));
        }
        for v in &values {
            if *v.lattice() != lattice {
                return Err(GibqError::LatticeMismatch("trajectory node on a different lattice".into()));
            }
        }
        Ok(Self {
            lattice,
            horizon,
            nodes: lobatto_nodes(values.len() - 1, horizon),
            values,
        })
    }

    pub fn zero(lattice: FrequencyLattice, horizon: f64, p: usize) -> Result<Self> {
        Self::from_values(lattice, horizon, vec![SpectralField::zero(lattice); p + 1])
    }

    /// Time-constant trajectory.
    pub fn constant(field: &SpectralField, horizon: f64, p: usize) -> Result<Self> {
        Self::from_values(*field.lattice(), horizon, vec![field.clone(); p + 1])
    }

    pub fn lattice(&self) -> &FrequencyLattice {
        &self.lattice
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn degree(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[SpectralField] {
        &self.values
    }

    /// Value at the horizon.
    pub fn final_value(&self) -> &SpectralField {
        self.values.last().expect("trajectory has nodes")
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(SpectralField::is_empty)
    }

    pub fn check_compatible(&self, other: &Trajectory) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(GibqError::LatticeMismatch(format!("{:?} vs {:?}", self.lattice, other.lattice)));
        }
        if self.horizon != other.horizon || self.nodes.len() != other.nodes.len() {
            return Err(GibqError::TrajectoryMismatch(format!(
                "horizon/degree ({}, {}) vs ({}, {})",
                self.horizon,
                self.degree(),
                other.horizon,
                other.degree()
            )));
        }
        Ok(())
    }

    /// Barycentric interpolation at `t` in `[0, horizon]`.
    pub fn evaluate(&self, t: f64) -> Result<SpectralField> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(GibqError::TrajectoryMismatch(format!(
                "time {t} outside [0, {}]",
                self.horizon
            )));
        }
        let row = lagrange_row(&self.nodes, &barycentric_weights(self.degree()), t);
        let terms: Vec<(f64, &SpectralField)> = row.iter().copied().zip(self.values.iter()).collect();
        SpectralField::linear_combination(self.lattice, &terms)
    }

    /// `sup_t ||u(t)||_{l1}` over the nodes.
    pub fn sup_l1(&self) -> f64 {
        self.values.iter().map(SpectralField::l1).fold(0.0, f64::max)
    }

    /// Node-wise `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &Trajectory) -> Result<Self> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.axpy(factor, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            lattice: self.lattice,
            horizon: self.horizon,
            nodes: self.nodes.clone(),
            values,
        })
    }

    pub fn add(&self, other: &Trajectory) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Trajectory) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        Self {
            lattice: self.lattice,
            horizon: self.horizon,
            nodes: self.nodes.clone(),
            values: self.values.iter().map(|v| v.scale_real(factor)).collect(),
        }
    }

    /// `sup` over nodes of the l1 distance.
    pub fn distance_sup_l1(&self, other: &Trajectory) -> Result<f64> {
        Ok(self.sub(other)?.sup_l1())
    }

    pub fn to_document(&self) -> TrajectoryDoc {
        TrajectoryDoc {
            horizon: self.horizon,
            nodes: self.nodes.clone(),
            fields: self.values.iter().map(SpectralField::to_document).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TrajectoryDoc = serde_json::from_str(text)?;
        let fields = doc
            .fields
            .into_iter()
            .map(|f| f.into_field(None))
            .collect::<Result<Vec<_>>>()?;
        let lattice = *fields
            .first()
            .ok_or_else(|| GibqError::Domain("empty trajectory document".into()))?
            .lattice();
        let traj = Self::from_values(lattice, doc.horizon, fields)?;
        let drift = traj
            .nodes
            .iter()
            .zip(&doc.nodes)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if doc.nodes.len() != traj.nodes.len() || drift > 1e-12 * doc.horizon {
            return Err(GibqError::TrajectoryMismatch("document nodes are not Lobatto nodes".into()));
        }
        Ok(traj)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryDoc {
    pub horizon: f64,
    pub nodes: Vec<f64>,
    pub fields: Vec<SpectralFieldDoc>,
}

/// `S(t)(u0, u1) = cos(t P(D)) u0 + sin(t P(D)) / P(D) u1` on `[0, horizon]`.
pub fn linear_flow(pair: &InitialPair, horizon: f64, p: usize) -> Result<Trajectory> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(GibqError::Domain(format!("horizon must be positive, got {horizon}")));
    }
    if p == 0 {
        return Err(GibqError::Domain("time degree must be at least 1".into()));
    }
    let lattice = *pair.lattice();
    let nodes = lobatto_nodes(p, horizon);
    let values = nodes
        .iter()
        .map(|&t| {
            let cos_part = pair.u0.multiply(|xi| (t * lambda_symbol(xi, &lattice)).cos());
            let sin_part = pair.u1.multiply(|xi| sin_over(t, lambda_symbol(xi, &lattice)));
            cos_part.add(&sin_part)
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::from_values(lattice, horizon, values)
}

/// Node-wise product `u_1(t) ... u_k(t)` as `k - 1` sparse convolutions.
pub fn product_trajectory(args: &[&Trajectory]) -> Result<Trajectory> {
    let first = *args
        .first()
        .ok_or_else(|| GibqError::Structural("Duhamel operator needs at least one argument".into()))?;
    for a in &args[1..] {
        first.check_compatible(a)?;
    }
    let values = (0..first.nodes.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = args[0].values[i].clone();
            for a in &args[1..] {
                if acc.is_empty() {
                    break;
                }
                acc = convolve(&acc, &a.values[i])?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        lattice: first.lattice,
        horizon: first.horizon,
        nodes: first.nodes.clone(),
        values,
    })
}

/// Per-frequency time series `xi -> [c(t_0), ..., c(t_p)]`, sorted by `xi`.
fn gather(fields: &[SpectralField]) -> Vec<(i64, Vec<C64>)> {
    let mut flat: Vec<(i64, usize, C64)> = fields
        .iter()
        .enumerate()
        .flat_map(|(i, f)| f.entries().iter().map(move |&(xi, c)| (xi, i, c)))
        .collect();
    flat.sort_by_key(|e| (e.0, e.1));
    let mut out: Vec<(i64, Vec<C64>)> = Vec::new();
    for (xi, i, c) in flat {
        if out.last().map(|l| l.0) != Some(xi) {
            out.push((xi, vec![C64::new(0.0, 0.0); fields.len()]));
        }
        out.last_mut().unwrap().1[i] = c;
    }
    out
}

fn scatter(lattice: FrequencyLattice, n: usize, series: Vec<(i64, Vec<C64>)>) -> Vec<SpectralField> {
    let mut cols: Vec<Vec<(i64, C64)>> = vec![Vec::new(); n];
    for (xi, vals) in series {
        for (i, v) in vals.into_iter().enumerate() {
            if v != C64::new(0.0, 0.0) {
                cols[i].push((xi, v));
            }
        }
    }
    cols.into_iter()
        .map(|c| SpectralField::from_sorted_unchecked(lattice, c).pruned(PRUNE_REL))
        .collect()
}

/// Sign of the Duhamel term. Per mode the equation reads
/// `u'' + lambda^2 u = -lambda^2 (u^k)^`, so
/// `u(t) = S(t)(u0, u1) - int_0^t sin((t - s) P(D)) P(D) u^k(s) ds`.
pub const DUHAMEL_SIGN: f64 = -1.0;

/// Quadrature data for `int_0^{t_i} sin((t_i - s) lambda) lambda F(s) ds`
/// at every node `t_i`, with `F` known at the nodes.
struct DuhamelKernel {
    /// Per output node: quadrature nodes `s_m`, weights, Lagrange rows.
    rules: Vec<Vec<(f64, f64, Vec<f64>)>>,
    nodes: Vec<f64>,
}

impl DuhamelKernel {
    fn new(nodes: &[f64]) -> Self {
        let p = nodes.len() - 1;
        let bw = barycentric_weights(p);
        let rules = nodes
            .iter()
            .map(|&t| {
                if t == 0.0 {
                    return Vec::new();
                }
                let (s, w) = clenshaw_curtis(p, t);
                s.into_iter()
                    .zip(w)
                    .map(|(sm, wm)| (sm, wm, lagrange_row(nodes, &bw, sm)))
                    .collect()
            })
            .collect();
        Self {
            rules,
            nodes: nodes.to_vec(),
        }
    }

    /// Matrix `K[i][l]` mapping forcing node values to Duhamel node values.
    fn matrix(&self, lambda: f64) -> Vec<Vec<f64>> {
        let n = self.nodes.len();
        self.rules
            .iter()
            .zip(&self.nodes)
            .map(|(rule, &t)| {
                let mut row = vec![0.0; n];
                if lambda == 0.0 {
                    return row;
                }
                for (s, w, lag) in rule {
                    let kern = DUHAMEL_SIGN * w * ((t - s) * lambda).sin() * lambda;
                    for (r, l) in row.iter_mut().zip(lag) {
                        *r += kern * l;
                    }
                }
                row
            })
            .collect()
    }
}

/// Applies the linear Duhamel map `F -> -int_0^t sin((t - s) P(D)) P(D) F(s) ds`
/// at every node of the forcing trajectory.
pub fn duhamel_forcing(forcing: &Trajectory) -> Trajectory {
    let lattice = forcing.lattice;
    let kernel = DuhamelKernel::new(&forcing.nodes);
    let series = gather(&forcing.values);
    let mut mags: Vec<i64> = series.iter().map(|s| s.0.abs()).collect();
    mags.sort_unstable();
    mags.dedup();
    let mats: HashMap<i64, Vec<Vec<f64>>> = mags
        .par_iter()
        .map(|&m| (m, kernel.matrix(lambda_symbol(m, &lattice))))
        .collect();
    let out: Vec<(i64, Vec<C64>)> = series
        .into_par_iter()
        .map(|(xi, vals)| {
            let k = &mats[&xi.abs()];
            let res = k
                .iter()
                .map(|row| row.iter().zip(&vals).map(|(a, v)| v * a).sum::<C64>())
                .collect();
            (xi, res)
        })
        .collect();
    let n = forcing.nodes.len();
    Trajectory {
        lattice,
        horizon: forcing.horizon,
        nodes: forcing.nodes.clone(),
        values: scatter(lattice, n, out),
    }
}

/// `I_k(u_1, ..., u_k)` at every node of the argument trajectories.
pub fn duhamel_trajectory(args: &[&Trajectory]) -> Result<Trajectory> {
    Ok(duhamel_forcing(&product_trajectory(args)?))
}

/// `I_k(u_1, ..., u_k)(t_eval)` by Clenshaw-Curtis quadrature of the
/// argument degree on `[0, t_eval]`, forming the product at each
/// quadrature node from interpolated arguments.
pub fn duhamel(args: &[&Trajectory], t_eval: f64) -> Result<SpectralField> {
    let first = *args
        .first()
        .ok_or_else(|| GibqError::Structural("Duhamel operator needs at least one argument".into()))?;
    for a in &args[1..] {
        first.check_compatible(a)?;
    }
    if !(0.0..=first.horizon).contains(&t_eval) {
        return Err(GibqError::TrajectoryMismatch(format!(
            "evaluation time {t_eval} outside [0, {}]",
            first.horizon
        )));
    }
    let lattice = first.lattice;
    if t_eval == 0.0 {
        return Ok(SpectralField::zero(lattice));
    }
    let (s, w) = clenshaw_curtis(first.degree(), t_eval);
    let products = s
        .par_iter()
        .map(|&sm| {
            let mut acc = args[0].evaluate(sm)?;
            for a in &args[1..] {
                acc = convolve(&acc, &a.evaluate(sm)?)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let series = gather(&products);
    let entries: Vec<(i64, C64)> = series
        .into_iter()
        .filter_map(|(xi, vals)| {
            let lam = lambda_symbol(xi, &lattice);
            if lam == 0.0 {
                return None;
            }
            let v: C64 = vals
                .iter()
                .zip(s.iter().zip(&w))
                .map(|(c, (&sm, &wm))| c * (DUHAMEL_SIGN * wm * ((t_eval - sm) * lam).sin() * lam))
                .sum();
            (v != C64::new(0.0, 0.0)).then_some((xi, v))
        })
        .collect();
    Ok(SpectralField::from_sorted_unchecked(lattice, entries).pruned(PRUNE_REL))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn lat() -> FrequencyLattice {
        FrequencyLattice::torus()
    }

    #[test]
    fn constant_mode_is_preserved_and_velocity_integrates() {
        let pair = InitialPair::new(SpectralField::delta(lat(), 0, c(3.0)).unwrap(), SpectralField::zero(lat())).unwrap();
        let tr = linear_flow(&pair, 0.8, 8).unwrap();
        for v in tr.values() {
            assert_eq!(v.get(0), c(3.0));
        }
        let pair = InitialPair::new(SpectralField::zero(lat()), SpectralField::delta(lat(), 0, c(2.0)).unwrap()).unwrap();
        let tr = linear_flow(&pair, 0.8, 8).unwrap();
        for (t, v) in tr.nodes().iter().zip(tr.values()) {
            assert!((v.get(0).re - 2.0 * t).abs() < 1e-15);
        }
    }

    #[test]
    fn sin_over_is_continuous_through_zero() {
        for t in [0.1, 0.5, 1.0] {
            let at0 = sin_over(t, 0.0);
            assert_eq!(at0, t);
            for lam in [1e-6, 1e-9] {
                assert!((sin_over(t, lam) - at0).abs() < 1e-12);
            }
            // both branches agree at the switch
            let lam = SINC_SERIES_THRESHOLD / t;
            let direct = (t * lam).sin() / lam;
            assert!((sin_over(t, lam * (1.0 - 1e-9)) - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn flow_does_not_increase_l1() {
        let u0 = SpectralField::from_entries(lat(), [(-3, c(1.0)), (0, c(-0.5)), (3, c(1.0))]).unwrap();
        let u1 = SpectralField::from_entries(lat(), [(-1, C64::new(0.2, 0.3)), (1, C64::new(0.2, -0.3))]).unwrap();
        let pair = InitialPair::new(u0, u1).unwrap();
        let tr = linear_flow(&pair, 1.0, 10).unwrap();
        for v in tr.values() {
            assert!(v.l1() <= pair.l1() + 1e-14);
            assert!(v.is_hermitian(1e-14));
        }
    }

    #[test]
    fn zero_argument_gives_zero() {
        let a = Trajectory::constant(&SpectralField::delta(lat(), 2, c(1.0)).unwrap(), 0.5, 8).unwrap();
        let z = Trajectory::zero(lat(), 0.5, 8).unwrap();
        assert!(duhamel(&[&a, &z], 0.5).unwrap().is_empty());
        assert!(duhamel_trajectory(&[&z, &a]).unwrap().is_zero());
    }

    #[test]
    fn single_frequency_constant_inputs_match_closed_form() {
        let t_max = 0.9;
        let a = Trajectory::constant(&SpectralField::delta(lat(), 2, C64::new(1.5, 0.5)).unwrap(), t_max, 16).unwrap();
        let b = Trajectory::constant(&SpectralField::delta(lat(), -1, c(-0.7)).unwrap(), t_max, 16).unwrap();
        let amp = C64::new(1.5, 0.5) * -0.7;
        let lam = lambda_symbol(1, &lat());
        for t in [0.0, 0.1, 0.45, 0.9] {
            let out = duhamel(&[&a, &b], t).unwrap();
            let expect = -amp * (1.0 - (t * lam).cos());
            assert!((out.get(1) - expect).norm() <= 1e-10 * expect.norm().max(1e-300), "t={t}");
        }
        let traj = duhamel_trajectory(&[&a, &b]).unwrap();
        for (t, v) in traj.nodes().iter().zip(traj.values()) {
            let expect = -amp * (1.0 - (t * lam).cos());
            assert!((v.get(1) - expect).norm() <= 1e-10 * expect.norm().max(1e-300));
        }
    }

    #[test]
    fn duhamel_bound_holds() {
        let f = SpectralField::from_entries(lat(), [(-4, c(1.0)), (-1, c(0.5)), (1, c(0.5)), (4, c(1.0))]).unwrap();
        let pair = InitialPair::new(f, SpectralField::zero(lat())).unwrap();
        let tr = linear_flow(&pair, 1.0, 16).unwrap();
        for t in [0.3, 0.7, 1.0] {
            let out = duhamel(&[&tr, &tr, &tr], t).unwrap();
            assert!(out.l1() <= 0.5 * t * t * tr.sup_l1().powi(3));
        }
    }

    fn smooth_pair(scale: f64) -> InitialPair {
        let u0 = SpectralField::from_entries(lat(), [(-5, c(0.3)), (-2, C64::new(0.5, 0.2)), (2, C64::new(0.5, -0.2)), (5, c(0.3))]).unwrap();
        let u1 = SpectralField::from_entries(lat(), [(-1, C64::new(0.0, 0.4)), (1, C64::new(0.0, -0.4))]).unwrap();
        InitialPair::new(u0.scale_real(scale), u1).unwrap()
    }

    #[test]
    fn duhamel_is_multilinear() {
        let f = linear_flow(&smooth_pair(1.0), 1.0, 16).unwrap();
        let g = linear_flow(&smooth_pair(-0.3), 1.0, 16).unwrap();
        let (alpha, beta) = (0.7, -1.9);
        let comb = f.scale_real(alpha).axpy(beta, &g).unwrap();
        for t in [0.4, 1.0] {
            let lhs = duhamel(&[&f, &comb], t).unwrap();
            let rhs = duhamel(&[&f, &f], t).unwrap().scale_real(alpha).axpy(beta, &duhamel(&[&f, &g], t).unwrap()).unwrap();
            assert!(lhs.sub(&rhs).unwrap().l1() <= 1e-12 * rhs.l1());
        }
    }

    #[test]
    fn doubling_time_degree_changes_little() {
        let pr = smooth_pair(1.0);
        let a = linear_flow(&pr, 1.0, 16).unwrap();
        let b = linear_flow(&pr, 1.0, 32).unwrap();
        let da = duhamel_trajectory(&[&a, &a]).unwrap();
        let db = duhamel_trajectory(&[&b, &b]).unwrap();
        for t in [0.25, 0.5, 0.9, 1.0] {
            let va = da.evaluate(t).unwrap();
            let vb = db.evaluate(t).unwrap();
            assert!(va.sub(&vb).unwrap().l1() <= 1e-11 * vb.l1(), "t={t}");
        }
        // the two Duhamel assemblies agree at the horizon
        let single = duhamel(&[&a, &a], 1.0).unwrap();
        assert!(single.sub(da.final_value()).unwrap().l1() <= 1e-11 * single.l1());
    }

    #[test]
    fn trajectory_evaluation_and_mismatch() {
        let f = SpectralField::delta(lat(), 0, c(1.0)).unwrap();
        let a = Trajectory::constant(&f, 1.0, 4).unwrap();
        let b = Trajectory::constant(&f, 0.5, 4).unwrap();
        assert!(matches!(duhamel(&[&a, &b], 0.2), Err(GibqError::TrajectoryMismatch(_))));
        assert!(a.evaluate(1.5).is_err());
        assert!((a.evaluate(0.37).unwrap().get(0) - c(1.0)).norm() < 1e-14);
        assert!(duhamel(&[&a, &a], 0.0).unwrap().is_empty());
    }

    #[test]
    fn trajectory_json_roundtrip() {
        let pair = InitialPair::new(SpectralField::from_entries(lat(), [(-2, c(1.0)), (2, c(1.0))]).unwrap(), SpectralField::zero(lat())).unwrap();
        let tr = linear_flow(&pair, 0.5, 6).unwrap();
        let back = Trajectory::from_json(&tr.to_json().unwrap()).unwrap();
        assert_eq!(back.horizon(), tr.horizon());
        assert!(back.distance_sup_l1(&tr).unwrap() == 0.0);
    }
}
