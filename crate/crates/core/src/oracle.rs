//! Independent reference computations: pseudospectral RK4 on the
//! per-frequency ODE `u'' = -lambda^2 (u + (u^k)^)`, a closed form for the
//! first Picard iterate, and brute-force cube convolutions.

use std::collections::{BTreeSet, HashMap};

use rustfft::FftPlanner;
use serde::Serialize;

use crate::chebyshev::lobatto_nodes;
use crate::construction::BumpData;
use crate::error::{GibqError, Result};
use crate::flow::{InitialPair, Trajectory, DUHAMEL_SIGN};
use crate::lattice::{lambda_symbol, FrequencyLattice, SpectralField, C64};

/// Default Minkowski depth of the RK4 support closure.
pub const CLOSURE_DEPTH: usize = 6;

/// Largest admissible share of the nonlinearity's l2 mass outside the closure.
pub const TAIL_LIMIT: f64 = 1e-10;

/// Largest closure the oracle will build.
pub const CLOSURE_LIMIT: usize = 1 << 22;

/// Largest number of cosine terms the closed form will expand.
pub const CLOSED_FORM_BUDGET: u64 = 200_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rk4Options {
    /// Step bound; each node interval is split into equal steps no longer than this.
    pub dt: f64,
    pub closure_depth: usize,
    pub tail_limit: f64,
    /// Test hook: `false` drops the nonlinearity.
    pub nonlinear: bool,
}

impl Rk4Options {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            closure_depth: CLOSURE_DEPTH,
            tail_limit: TAIL_LIMIT,
            nonlinear: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Rk4Report {
    pub trajectory: Trajectory,
    pub closure_depth: usize,
    pub closure_size: usize,
    pub grid: usize,
    pub steps: usize,
    /// Largest relative l2 mass of `u^k` outside the closure over all stages.
    pub max_tail: f64,
    pub enlarged: bool,
}

/// Union of the `m`-fold sums of `support` for `m = 1..=depth`.
pub fn support_closure(support: &[i64], depth: usize) -> Result<Vec<i64>> {
    let base: BTreeSet<i64> = support.iter().copied().collect();
    let mut level: BTreeSet<i64> = base.clone();
    let mut all: BTreeSet<i64> = base.clone();
    for _ in 1..depth {
        let mut next = BTreeSet::new();
        for &a in &level {
            for &b in &base {
                next.insert(a + b);
            }
        }
        all.extend(next.iter().copied());
        if all.len() > CLOSURE_LIMIT {
            return Err(GibqError::Capacity {
                what: "support closure",
                requested: format!("> {}", all.len()),
                limit: CLOSURE_LIMIT.to_string(),
            });
        }
        level = next;
    }
    Ok(all.into_iter().collect())
}

struct Pseudospectral {
    k: usize,
    freqs: Vec<i64>,
    lam2: Vec<f64>,
    grid: usize,
    index: Vec<usize>,
    inside: Vec<bool>,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
    nonlinear: bool,
}

impl Pseudospectral {
    fn new(k: usize, freqs: Vec<i64>, lattice: &FrequencyLattice, nonlinear: bool) -> Self {
        let kmax = freqs.iter().map(|x| x.unsigned_abs() as usize).max().unwrap_or(0);
        // distinct residues for every frequency of u^k
        let grid = (2 * k * kmax + 2).next_power_of_two().max(16);
        let index: Vec<usize> = freqs.iter().map(|&x| x.rem_euclid(grid as i64) as usize).collect();
        let mut inside = vec![false; grid];
        for &i in &index {
            inside[i] = true;
        }
        let mut planner = FftPlanner::new();
        Self {
            k,
            lam2: freqs.iter().map(|&x| lambda_symbol(x, lattice).powi(2)).collect(),
            fwd: planner.plan_fft_forward(grid),
            inv: planner.plan_fft_inverse(grid),
            freqs,
            grid,
            index,
            inside,
            nonlinear,
        }
    }

    /// `(u', v') = (v, -lambda^2 (u + P (u^k)^))` and the tail share.
    fn rhs(&self, u: &[C64], v: &[C64]) -> (Vec<C64>, Vec<C64>, f64) {
        let mut tail = 0.0;
        let mut acc: Vec<C64> = u.to_vec();
        if self.nonlinear {
            let mut buf = vec![C64::new(0.0, 0.0); self.grid];
            for (&i, &c) in self.index.iter().zip(u) {
                buf[i] = c;
            }
            self.inv.process(&mut buf);
            for z in buf.iter_mut() {
                *z = z.powu(self.k as u32);
            }
            self.fwd.process(&mut buf);
            let scale = 1.0 / self.grid as f64;
            let (mut out, mut total) = (0.0, 0.0);
            for (i, z) in buf.iter().enumerate() {
                let m = z.norm_sqr();
                total += m;
                if !self.inside[i] {
                    out += m;
                }
            }
            if total > 0.0 {
                tail = (out / total).sqrt();
            }
            for (a, &i) in acc.iter_mut().zip(&self.index) {
                *a += buf[i] * scale;
            }
        }
        let dv = acc.iter().zip(&self.lam2).map(|(a, l)| -a * *l).collect();
        (v.to_vec(), dv, tail)
    }
}

fn field_from(lattice: FrequencyLattice, freqs: &[i64], vals: &[C64]) -> Result<SpectralField> {
    SpectralField::from_entries(lattice, freqs.iter().copied().zip(vals.iter().copied()))
}

fn rk4_pass(pair: &InitialPair, k: usize, horizon: f64, p: usize, opts: &Rk4Options, depth: usize) -> Result<Rk4Report> {
    let lattice = *pair.lattice();
    let mut support: Vec<i64> = pair.u0.support().chain(pair.u1.support()).collect();
    support.sort_unstable();
    support.dedup();
    let freqs = if support.is_empty() { vec![0] } else { support_closure(&support, depth)? };
    let sys = Pseudospectral::new(k, freqs, &lattice, opts.nonlinear);
    let mut u: Vec<C64> = sys.freqs.iter().map(|&x| pair.u0.get(x)).collect();
    let mut v: Vec<C64> = sys.freqs.iter().map(|&x| pair.u1.get(x)).collect();
    let nodes = lobatto_nodes(p, horizon);
    let mut values = vec![field_from(lattice, &sys.freqs, &u)?];
    let (mut steps, mut max_tail) = (0usize, 0.0f64);
    let axpy = |x: &[C64], h: f64, d: &[C64]| -> Vec<C64> { x.iter().zip(d).map(|(a, b)| a + b * h).collect() };
    for w in nodes.windows(2) {
        let span = w[1] - w[0];
        let m = (span / opts.dt).ceil().max(1.0) as usize;
        let h = span / m as f64;
        for _ in 0..m {
            let (k1u, k1v, t1) = sys.rhs(&u, &v);
            let (k2u, k2v, t2) = sys.rhs(&axpy(&u, 0.5 * h, &k1u), &axpy(&v, 0.5 * h, &k1v));
            let (k3u, k3v, t3) = sys.rhs(&axpy(&u, 0.5 * h, &k2u), &axpy(&v, 0.5 * h, &k2v));
            let (k4u, k4v, t4) = sys.rhs(&axpy(&u, h, &k3u), &axpy(&v, h, &k3v));
            max_tail = max_tail.max(t1).max(t2).max(t3).max(t4);
            for i in 0..u.len() {
                u[i] += (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u[i]) * (h / 6.0);
                v[i] += (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]) * (h / 6.0);
            }
            steps += 1;
        }
        values.push(field_from(lattice, &sys.freqs, &u)?);
    }
    Ok(Rk4Report {
        trajectory: Trajectory::from_values(lattice, horizon, values)?,
        closure_depth: depth,
        closure_size: sys.freqs.len(),
        grid: sys.grid,
        steps,
        max_tail,
        enlarged: false,
    })
}

/// Classical RK4 on the first-order system over the support closure,
/// recorded at the Lobatto nodes of degree `p`. A tail breach doubles the
/// closure depth once; a second breach is an error.
pub fn rk4_solve(pair: &InitialPair, k: usize, horizon: f64, p: usize, opts: &Rk4Options) -> Result<Rk4Report> {
    if !(horizon > 0.0) || !(opts.dt > 0.0) || opts.dt > horizon / 100.0 {
        return Err(GibqError::Domain(format!(
            "need 0 < dt <= T/100, got dt={} T={horizon}",
            opts.dt
        )));
    }
    if k < 2 {
        return Err(GibqError::Domain(format!("nonlinearity power must be >= 2, got {k}")));
    }
    let first = rk4_pass(pair, k, horizon, p, opts, opts.closure_depth)?;
    if first.max_tail <= opts.tail_limit {
        return Ok(first);
    }
    let depth = 2 * opts.closure_depth;
    let mut second = rk4_pass(pair, k, horizon, p, opts, depth)?;
    if second.max_tail > opts.tail_limit {
        return Err(GibqError::TruncationTail {
            tail: second.max_tail,
            limit: opts.tail_limit,
            depth,
        });
    }
    second.enlarged = true;
    Ok(second)
}

/// `lambda int_0^T sin(lambda (T - t)) cos(b t) dt`
/// `= (lambda^2 T^2 / 2) sinc((b + lambda) T / 2) sinc((b - lambda) T / 2)`.
pub fn cosine_duhamel_weight(lambda: f64, b: f64, t: f64) -> f64 {
    let sinc = |x: f64| if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    0.5 * lambda * lambda * t * t * sinc(0.5 * (b + lambda) * t) * sinc(0.5 * (b - lambda) * t)
}

/// `Xi_1(u0, 0)(T)` with the `t'`-integral done analytically: every
/// `k`-tuple of support points contributes `DUHAMEL_SIGN * prod c_j` times the average over
/// signs `eps_1 = 1, eps_2.. = +-1` of [`cosine_duhamel_weight`] at
/// `b = sum eps_j lambda_j`.
pub fn xi1_closed_form_field(u0: &SpectralField, k: usize, horizon: f64) -> Result<SpectralField> {
    let lattice = *u0.lattice();
    let entries = u0.entries();
    let m = entries.len() as u64;
    let work = m.checked_pow(k as u32).and_then(|t| t.checked_mul(1 << (k - 1)));
    if work.is_none_or(|w| w > CLOSED_FORM_BUDGET) {
        return Err(GibqError::Capacity {
            what: "closed-form tuple expansion",
            requested: format!("{m}^{k} x 2^{}", k - 1),
            limit: CLOSED_FORM_BUDGET.to_string(),
        });
    }
    let lams: Vec<f64> = entries.iter().map(|&(x, _)| lambda_symbol(x, &lattice)).collect();
    let norm = 0.5f64.powi(k as i32 - 1);
    let mut out: HashMap<i64, C64> = HashMap::new();
    let mut idx = vec![0usize; k];
    if m == 0 {
        return Ok(SpectralField::zero(lattice));
    }
    loop {
        let xi: i64 = idx.iter().map(|&i| entries[i].0).sum();
        let lam = lambda_symbol(xi, &lattice);
        if lam != 0.0 {
            let amp: C64 = idx.iter().map(|&i| entries[i].1).product();
            let mut w = 0.0;
            for signs in 0..(1u32 << (k - 1)) {
                let mut b = lams[idx[0]];
                for (j, &i) in idx.iter().enumerate().skip(1) {
                    let eps = if signs >> (j - 1) & 1 == 1 { -1.0 } else { 1.0 };
                    b += eps * lams[i];
                }
                w += cosine_duhamel_weight(lam, b, horizon);
            }
            *out.entry(xi).or_insert(C64::new(0.0, 0.0)) += amp * (DUHAMEL_SIGN * w * norm);
        }
        // odometer over Omega^k
        let mut pos = k;
        loop {
            if pos == 0 {
                return SpectralField::from_entries(lattice, out);
            }
            pos -= 1;
            idx[pos] += 1;
            if (idx[pos] as u64) < m {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Closed-form `Xi_1(phi_n)(T)`.
pub fn xi1_closed_form(bump: &BumpData, k: usize, horizon: f64) -> Result<SpectralField> {
    xi1_closed_form_field(&bump.phi.u0, k, horizon)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichReport {
    pub a_shift: i64,
    pub b_shift: i64,
    pub side: i64,
    /// `(xi, (1_{a+Q_A} * 1_{b+Q_A})(xi))` over the support, ascending.
    pub values: Vec<(i64, u64)>,
    /// Largest `C` with `C (A+1) 1_{a+b+Q_A} <= conv`.
    pub c_lower: f64,
    /// Smallest `C~` with `conv <= C~ (A+1) 1_{a+b+Q_{2A}}`.
    pub c_upper: f64,
    pub support_within_double_cube: bool,
}

/// Exact integer convolution of two cube indicators on `Z`, with the
/// counting-measure normalization `|Q_A cap Z| = A + 1`.
pub fn convolution_sandwich(a: i64, b: i64, side: i64) -> Result<SandwichReport> {
    if side <= 0 || side % 2 != 0 {
        return Err(GibqError::Domain(format!("cube side must be positive and even, got {side}")));
    }
    let h = side / 2;
    let mut counts: HashMap<i64, u64> = HashMap::new();
    for x in a - h..=a + h {
        for y in b - h..=b + h {
            *counts.entry(x + y).or_default() += 1;
        }
    }
    let mut values: Vec<(i64, u64)> = counts.into_iter().collect();
    values.sort_unstable();
    let norm = (side + 1) as f64;
    let c = a + b;
    let c_lower = values
        .iter()
        .filter(|(x, _)| (x - c).abs() <= h)
        .map(|&(_, v)| v as f64 / norm)
        .fold(f64::INFINITY, f64::min);
    let c_upper = values.iter().map(|&(_, v)| v as f64 / norm).fold(0.0, f64::max);
    let support_within_double_cube = values.iter().all(|(x, _)| (x - c).abs() <= side);
    Ok(SandwichReport {
        a_shift: a,
        b_shift: b,
        side,
        values,
        c_lower,
        c_upper,
        support_within_double_cube,
    })
}
