//! Inflation data `phi_n`, its parameter schedule, perturbed data and
//! seeded smooth base data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GibqError, Result};
use crate::flow::InitialPair;
use crate::lattice::{FrequencyLattice, SpectralField, C64};

/// Cube side `A`.
pub const CUBE_SIDE: i64 = 10;

/// Factor in the scale-separation requirement `N >= 64 A`.
pub const SEPARATION_FACTOR: i64 = 64;

/// Frequency reach of sampled base data.
pub const BASE_REACH: i64 = 64;

/// Largest `N` the schedule will produce.
pub const MAX_FREQUENCY_SCALE: i64 = 1 << 36;

/// Centres of the four cubes in units of `N`.
pub const CUBE_CENTRES: [i64; 4] = [-2, -1, 1, 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InflationParams {
    pub n: u64,
    pub k: usize,
    pub s: f64,
    pub sigma: f64,
    pub delta: f64,
    /// Frequency scale `N`.
    pub big_n: i64,
    /// Amplitude `R = N^{-s-delta}`.
    pub r: f64,
    /// Horizon `T = N^{(k-1)/2 (s + delta/2)}`.
    pub t: f64,
    pub a: i64,
    /// `N` before any adjustment.
    pub n_formula: i64,
    /// Human-readable record of adjustments made to `N`.
    pub adjustments: Vec<String>,
}

/// `min(1, -2 s / (k + 1))`, the exclusive upper bound on `delta`.
pub fn delta_ceiling(s: f64, k: usize) -> f64 {
    (-2.0 * s / (k as f64 + 1.0)).min(1.0)
}

/// Half of [`delta_ceiling`].
pub fn default_delta(s: f64, k: usize) -> f64 {
    0.5 * delta_ceiling(s, k)
}

fn amplitude(big_n: i64, s: f64, delta: f64) -> f64 {
    (big_n as f64).powf(-s - delta)
}

fn horizon(big_n: i64, k: usize, s: f64, delta: f64) -> f64 {
    (big_n as f64).powf((k as f64 - 1.0) / 2.0 * (s + delta / 2.0))
}

fn validate(n: u64, k: usize, s: f64, delta_hint: Option<f64>) -> Result<f64> {
    if !(s < 0.0) {
        return Err(GibqError::Domain(format!("regularity s must be negative, got {s}")));
    }
    if k < 2 {
        return Err(GibqError::Domain(format!("nonlinearity power k must be >= 2, got {k}")));
    }
    if n < 1 {
        return Err(GibqError::Domain("inflation index n must be >= 1".into()));
    }
    let ceiling = delta_ceiling(s, k);
    match delta_hint {
        None => Ok(0.5 * ceiling),
        Some(d) if d > 0.0 && d < ceiling => Ok(d),
        Some(d) => Err(GibqError::Domain(format!(
            "delta {d} outside the admissible interval (0, {ceiling})"
        ))),
    }
}

impl InflationParams {
    fn assemble(n: u64, k: usize, s: f64, sigma: f64, delta: f64, big_n: i64, n_formula: i64, adjustments: Vec<String>) -> Self {
        Self {
            n,
            k,
            s,
            sigma,
            delta,
            big_n,
            r: amplitude(big_n, s, delta),
            t: horizon(big_n, k, s, delta),
            a: CUBE_SIDE,
            n_formula,
            adjustments,
        }
    }

    /// Parameters with a prescribed frequency scale `N`, for sweeps.
    pub fn with_frequency(n: u64, k: usize, s: f64, sigma: f64, delta: Option<f64>, big_n: i64) -> Result<Self> {
        let delta = validate(n, k, s, delta)?;
        if !(1..=MAX_FREQUENCY_SCALE).contains(&big_n) {
            return Err(GibqError::Domain(format!("frequency scale N={big_n} outside [1, {MAX_FREQUENCY_SCALE}]")));
        }
        Ok(Self::assemble(n, k, s, sigma, delta, big_n, big_n, Vec::new()))
    }

    /// `T < 1/n`.
    pub fn horizon_in_range(&self) -> bool {
        self.t < 1.0 / self.n as f64
    }

    /// `N >= 64 A`.
    pub fn scales_separated(&self) -> bool {
        self.big_n >= SEPARATION_FACTOR * self.a
    }

    /// The four cubes are pairwise disjoint iff `N > A`.
    pub fn cubes_disjoint(&self) -> bool {
        self.big_n > self.a
    }

    /// `64 A / N`: below one iff the scales are separated.
    pub fn separation_margin(&self) -> f64 {
        (SEPARATION_FACTOR * self.a) as f64 / self.big_n as f64
    }

    /// Cube centres `{-2N, -N, N, 2N}`.
    pub fn centres(&self) -> [i64; 4] {
        CUBE_CENTRES.map(|c| c * self.big_n)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Schedule `N = ceil(n^{2/delta})`, `R = N^{-s-delta}`,
/// `T = N^{(k-1)/2 (s + delta/2)}`, `A = 10`. If `T >= 1/n`, `N` is raised
/// to the smallest power of two giving `T < 1/n`.
pub fn schedule(n: u64, k: usize, s: f64, sigma: f64, delta_hint: Option<f64>) -> Result<InflationParams> {
    let delta = validate(n, k, s, delta_hint)?;
    let raw = (n as f64).powf(2.0 / delta);
    if !(raw <= MAX_FREQUENCY_SCALE as f64) {
        return Err(GibqError::Capacity {
            what: "frequency scale N",
            requested: format!("{raw:.3e}"),
            limit: MAX_FREQUENCY_SCALE.to_string(),
        });
    }
    // absorb rounding in the power so exact integers are not bumped up
    let nearest = raw.round();
    let n_formula = if (raw - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as i64
    } else {
        raw.ceil() as i64
    };
    let mut big_n = n_formula.max(1);
    let mut adjustments = Vec::new();
    if horizon(big_n, k, s, delta) >= 1.0 / n as f64 {
        let mut p = 1i64;
        while horizon(p, k, s, delta) >= 1.0 / n as f64 {
            p = p.checked_mul(2).filter(|&v| v <= MAX_FREQUENCY_SCALE).ok_or_else(|| GibqError::Capacity {
                what: "frequency scale N",
                requested: "T < 1/n unreachable".into(),
                limit: MAX_FREQUENCY_SCALE.to_string(),
            })?;
        }
        adjustments.push(format!("N raised from {big_n} to {p} so that T < 1/n"));
        big_n = p;
    }
    Ok(InflationParams::assemble(n, k, s, sigma, delta, big_n, n_formula, adjustments))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BumpData {
    /// `(phi_n, 0)` with `phi_n^ = R 1_Omega`.
    pub phi: InitialPair,
    /// Sorted integer points of `Omega`.
    pub omega_support: Vec<i64>,
    pub big_n: i64,
    pub a: i64,
    pub r: f64,
}

impl BumpData {
    /// Integer points of the cube `eta + [-A/2, A/2]`.
    pub fn cube(&self, eta: i64) -> Vec<i64> {
        let h = self.a / 2;
        (eta - h..=eta + h).collect()
    }

    pub fn centres(&self) -> [i64; 4] {
        CUBE_CENTRES.map(|c| c * self.big_n)
    }

    /// Centre of the cube containing `xi`, if any.
    pub fn centre_of(&self, xi: i64) -> Option<i64> {
        let h = self.a / 2;
        self.centres().into_iter().find(|&eta| (xi - eta).abs() <= h)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = BumpDoc {
            big_n: self.big_n,
            a: self.a,
            r: self.r,
            omega_support: self.omega_support.clone(),
            phi0: self.phi.u0.to_document(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpDoc {
    pub big_n: i64,
    pub a: i64,
    pub r: f64,
    pub omega_support: Vec<i64>,
    pub phi0: crate::lattice::SpectralFieldDoc,
}

/// `phi_n^ = R 1_Omega` with `Omega` the union of `eta + [-A/2, A/2]` over
/// `eta in {-2N, -N, N, 2N}`; second component zero.
pub fn make_bump(params: &InflationParams) -> Result<BumpData> {
    make_bump_on(params, FrequencyLattice::torus())
}

pub fn make_bump_on(params: &InflationParams, lattice: FrequencyLattice) -> Result<BumpData> {
    if params.a <= 0 || params.a % 2 != 0 {
        return Err(GibqError::Domain(format!("cube side A must be positive and even, got {}", params.a)));
    }
    if !params.cubes_disjoint() {
        return Err(GibqError::Structural(format!(
            "cubes overlap: N={} must exceed A={}",
            params.big_n, params.a
        )));
    }
    let h = params.a / 2;
    let mut support: Vec<i64> = params
        .centres()
        .into_iter()
        .flat_map(|eta| eta - h..=eta + h)
        .collect();
    support.sort_unstable();
    let amp = C64::new(params.r, 0.0);
    let u0 = SpectralField::from_entries(lattice, support.iter().map(|&xi| (xi, amp)))?;
    Ok(BumpData {
        phi: InitialPair::new(u0, SpectralField::zero(lattice))?,
        omega_support: support,
        big_n: params.big_n,
        a: params.a,
        r: params.r,
    })
}

/// Seeded Hermitian data with envelope `amplitude exp(-decay |xi|)` on
/// `|xi| <= 64`; coefficients uniform in the unit square before scaling.
pub fn sample_base_data(seed: u64, decay_rate: f64, amplitude: f64) -> Result<InitialPair> {
    sample_base_data_on(seed, decay_rate, amplitude, FrequencyLattice::torus())
}

pub fn sample_base_data_on(seed: u64, decay_rate: f64, amplitude: f64, lattice: FrequencyLattice) -> Result<InitialPair> {
    if !(decay_rate > 0.0) {
        return Err(GibqError::Domain(format!("decay rate must be positive, got {decay_rate}")));
    }
    if amplitude == 0.0 {
        return Ok(InitialPair::zero(lattice));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut component = || -> Result<SpectralField> {
        let mut entries = Vec::with_capacity(2 * BASE_REACH as usize + 1);
        for xi in 0..=BASE_REACH {
            let env = amplitude * (-decay_rate * xi as f64).exp();
            let re: f64 = rng.gen_range(-1.0..1.0);
            let im: f64 = rng.gen_range(-1.0..1.0);
            if xi == 0 {
                entries.push((0, C64::new(env * re, 0.0)));
            } else {
                let c = C64::new(env * re, env * im);
                entries.push((xi, c));
                entries.push((-xi, c.conj()));
            }
        }
        SpectralField::from_entries(lattice, entries)
    };
    let u0 = component()?;
    let u1 = component()?;
    InitialPair::new(u0, u1)
}

/// `u_{0,n} = u_0 + phi_n`.
pub fn perturbed_data(base: &InitialPair, bump: &BumpData) -> Result<InitialPair> {
    base.add(&bump.phi)
}

/// All `k`-tuples of cube centres, as multiples of `N`, in lexicographic order.
pub fn centre_tuples(k: usize) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|t| {
                CUBE_CENTRES.iter().map(move |&c| {
                    let mut u = t.clone();
                    u.push(c);
                    u
                })
            })
            .collect();
    }
    out
}

/// Tuples whose centres sum to zero.
pub fn resonant_tuples(k: usize) -> Vec<Vec<i64>> {
    centre_tuples(k).into_iter().filter(|t| t.iter().sum::<i64>() == 0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::{pair_norm, NormSpec};

    #[test]
    fn schedule_reference_point() {
        let p = schedule(2, 2, -1.0, -1.0, Some(0.5)).unwrap();
        assert_eq!(p.big_n, 16);
        assert!((p.r - 4.0).abs() < 1e-12);
        assert!((p.t - 16f64.powf(-0.375)).abs() < 1e-15);
        assert!((p.t - 0.35355339059327373).abs() < 1e-12);
        assert!(p.adjustments.is_empty());
        assert!(p.horizon_in_range());
        assert!(!p.scales_separated());
    }

    #[test]
    fn delta_bounds() {
        assert!((delta_ceiling(-0.5, 2) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(delta_ceiling(-5.0, 2), 1.0);
        assert!(schedule(1, 2, -0.5, -0.5, Some(0.4)).is_err());
        assert!(schedule(1, 2, -0.5, -0.5, Some(0.0)).is_err());
        assert!(schedule(1, 2, 0.0, -0.5, None).is_err());
        let p = schedule(1, 2, -0.5, -0.5, None).unwrap();
        assert!((p.delta - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn first_rung_raises_n() {
        let p = schedule(1, 2, -1.0, -1.0, Some(0.5)).unwrap();
        assert_eq!(p.n_formula, 1);
        assert_eq!(p.big_n, 2);
        assert!(p.horizon_in_range());
        assert_eq!(p.adjustments.len(), 1);
    }

    #[test]
    fn bump_support_and_norms() {
        let p = InflationParams::with_frequency(2, 2, -1.0, -1.0, Some(0.5), 256).unwrap();
        let b = make_bump(&p).unwrap();
        assert_eq!(b.omega_support.len(), 44);
        let mut expect = Vec::new();
        for eta in [-512i64, -256, 256, 512] {
            expect.extend(eta - 5..=eta + 5);
        }
        assert_eq!(b.omega_support, expect);
        assert_eq!(b.phi.u0.get(300), C64::new(0.0, 0.0));
        assert!(b.phi.u0.is_hermitian(0.0));
        let fl1 = pair_norm(&b.phi, &NormSpec::WienerAlgebraPair).unwrap();
        assert!((fl1 - 44.0 * p.r).abs() <= 1e-12 * fl1);
        assert_eq!(b.centre_of(-251), Some(-256));
        assert_eq!(b.centre_of(0), None);
    }

    #[test]
    fn overlapping_cubes_are_rejected() {
        let p = schedule(1, 2, -1.0, -1.0, Some(0.5)).unwrap();
        assert!(matches!(make_bump(&p), Err(GibqError::Structural(_))));
    }

    #[test]
    fn base_data_is_seeded_and_hermitian() {
        let a = sample_base_data(7, 0.5, 1.0).unwrap();
        let b = sample_base_data(7, 0.5, 1.0).unwrap();
        assert_eq!(a, b);
        assert!(a.u0.is_hermitian(0.0) && a.u1.is_hermitian(0.0));
        assert_eq!(a.u0.max_abs_frequency(), BASE_REACH);
        assert_ne!(a, sample_base_data(8, 0.5, 1.0).unwrap());
        assert!(sample_base_data(7, 0.5, 0.0).unwrap().is_zero());
        assert!(sample_base_data(7, 0.0, 1.0).is_err());
    }

    #[test]
    fn perturbation_is_the_bump() {
        let p = InflationParams::with_frequency(2, 2, -1.0, -1.0, Some(0.5), 1024).unwrap();
        let bump = make_bump(&p).unwrap();
        let base = sample_base_data(3, 0.5, 1.0).unwrap();
        let pert = perturbed_data(&base, &bump).unwrap();
        let spec = NormSpec::SobolevPair { s: -1.0 };
        let diff = pair_norm(&pert.sub(&base).unwrap(), &spec).unwrap();
        let direct = pair_norm(&bump.phi, &spec).unwrap();
        assert!((diff - direct).abs() <= 1e-12 * direct);
        assert_eq!(perturbed_data(&InitialPair::zero(FrequencyLattice::torus()), &bump).unwrap(), bump.phi);
    }

    #[test]
    fn resonant_tuple_counts() {
        assert_eq!(centre_tuples(2).len(), 16);
        assert_eq!(resonant_tuples(2).len(), 4);
        // k = 3: (-2,1,1) and (2,-1,-1) orderings
        assert_eq!(resonant_tuples(3).len(), 6);
        assert!(!resonant_tuples(4).is_empty());
    }
}
