//! Function-space norms of sparse spectral fields.
//!
//! A field on a lattice of period `P` represents
//! `f(x) = sum_xi c_xi exp(2 pi i xi x / P)` on `[0, P)`. Its Fourier
//! transform lives at `nu = xi / P` with value `P c_xi`, and every lattice
//! point carries measure `1 / P`. Weights are `<nu>^s = (1 + nu^2)^{s/2}`.
//! Modulation and Wiener amalgam norms use the sharp unit-band partition
//! `Q_n = n + [-1/2, 1/2)` in `nu`, weighted by `<n>^s`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GibqError, Result};
use crate::flow::InitialPair;
use crate::lattice::{convolve_with, grid_size, synthesize_complex, SpectralField, C64};

/// Oversampling factor for grid-based norms.
pub const GRID_OVERSAMPLE: usize = 8;

/// Largest synthesis grid the grid-based norms will allocate.
pub const MAX_GRID: usize = 1 << 24;

/// Relative slack granted to inequalities that hold exactly in exact arithmetic.
pub const EXACT_INEQUALITY_SLACK: f64 = 1e-12;

/// Constant asserted for the modulation-space algebra inequality.
pub const MODULATION_ALGEBRA_BOUND: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NormSpec {
    Sobolev { s: f64 },
    FourierLebesgue { s: f64, q: f64 },
    /// `H^s x H^s`.
    SobolevPair { s: f64 },
    /// `FL^1 x FL^1`.
    WienerAlgebraPair,
    /// `max(||<D>^s f||_{L^2}, ||<D>^s f||_{L^inf})`.
    WS2Inf { s: f64 },
    Modulation { s: f64, q: f64 },
    WienerAmalgam { s: f64, q: f64 },
}

impl NormSpec {
    pub fn is_pair(&self) -> bool {
        matches!(self, NormSpec::SobolevPair { .. } | NormSpec::WienerAlgebraPair)
    }

    fn validate(&self) -> Result<()> {
        let (s, q) = match *self {
            NormSpec::Sobolev { s } | NormSpec::SobolevPair { s } | NormSpec::WS2Inf { s } => (s, 2.0),
            NormSpec::FourierLebesgue { s, q } | NormSpec::Modulation { s, q } | NormSpec::WienerAmalgam { s, q } => (s, q),
            NormSpec::WienerAlgebraPair => (0.0, 1.0),
        };
        if !s.is_finite() {
            return Err(GibqError::Domain(format!("regularity must be finite, got {s}")));
        }
        if !(q >= 1.0) {
            return Err(GibqError::Domain(format!("exponent q must lie in [1, inf], got {q}")));
        }
        Ok(())
    }
}

fn fmt_q(q: f64) -> String {
    if q.is_infinite() {
        "inf".into()
    } else {
        format!("{q}")
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            NormSpec::Sobolev { s } => write!(f, "sobolev,{s}"),
            NormSpec::FourierLebesgue { s, q } => write!(f, "fl,{s},{}", fmt_q(q)),
            NormSpec::SobolevPair { s } => write!(f, "sobolev-pair,{s}"),
            NormSpec::WienerAlgebraPair => write!(f, "wiener-pair"),
            NormSpec::WS2Inf { s } => write!(f, "ws2inf,{s}"),
            NormSpec::Modulation { s, q } => write!(f, "modulation,{s},{}", fmt_q(q)),
            NormSpec::WienerAmalgam { s, q } => write!(f, "amalgam,{s},{}", fmt_q(q)),
        }
    }
}

/// Parses `family[,s[,q]]`, e.g. `fl,-0.5,inf` or `sobolev,-1`.
impl FromStr for NormSpec {
    type Err = GibqError;

    fn from_str(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        let num = |i: usize| -> Result<f64> {
            let raw = parts
                .get(i)
                .ok_or_else(|| GibqError::Config(format!("norm spec '{text}' is missing a parameter")))?;
            match raw.to_ascii_lowercase().as_str() {
                "inf" | "infinity" => Ok(f64::INFINITY),
                other => other
                    .parse::<f64>()
                    .map_err(|_| GibqError::Config(format!("bad number '{raw}' in norm spec '{text}'"))),
            }
        };
        let arity = |n: usize| -> Result<()> {
            if parts.len() == n {
                Ok(())
            } else {
                Err(GibqError::Config(format!("norm spec '{text}' takes {} parameter(s)", n - 1)))
            }
        };
        let spec = match parts[0].to_ascii_lowercase().as_str() {
            "sobolev" | "h" => {
                arity(2)?;
                NormSpec::Sobolev { s: num(1)? }
            }
            "fl" | "fourier-lebesgue" => {
                arity(3)?;
                NormSpec::FourierLebesgue { s: num(1)?, q: num(2)? }
            }
            "sobolev-pair" => {
                arity(2)?;
                NormSpec::SobolevPair { s: num(1)? }
            }
            "wiener-pair" => {
                arity(1)?;
                NormSpec::WienerAlgebraPair
            }
            "ws2inf" => {
                arity(2)?;
                NormSpec::WS2Inf { s: num(1)? }
            }
            "modulation" | "m" => {
                arity(3)?;
                NormSpec::Modulation { s: num(1)?, q: num(2)? }
            }
            "amalgam" | "wiener-amalgam" | "w" => {
                arity(3)?;
                NormSpec::WienerAmalgam { s: num(1)?, q: num(2)? }
            }
            other => return Err(GibqError::Config(format!("unknown norm family '{other}'"))),
        };
        spec.validate().map_err(|e| GibqError::Config(e.to_string()))?;
        Ok(spec)
    }
}

/// `<x>^s = (1 + x^2)^{s/2}`.
#[inline]
pub fn japanese(x: f64, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        (1.0 + x * x).powf(0.5 * s)
    }
}

/// `(sum mu |a_i|^q)^{1/q}`, the supremum for `q = inf`.
fn lq<I: IntoIterator<Item = f64>>(values: I, q: f64, measure: f64) -> f64 {
    if q.is_infinite() {
        return values.into_iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let mut vals: Vec<f64> = values.into_iter().map(f64::abs).collect();
    let scale = vals.iter().copied().fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    vals.iter_mut().for_each(|v| *v /= scale);
    let sum: f64 = if q == 1.0 {
        vals.iter().sum()
    } else if q == 2.0 {
        vals.iter().map(|v| v * v).sum()
    } else {
        vals.iter().map(|v| v.powf(q)).sum()
    };
    scale * (measure * sum).powf(1.0 / q)
}

pub fn sobolev(f: &SpectralField, s: f64) -> f64 {
    let lat = f.lattice();
    let p = lat.period();
    let sq = lq(
        f.entries().iter().map(|&(xi, c)| japanese(lat.frequency(xi), s) * c.norm()),
        2.0,
        1.0,
    );
    sq * p.sqrt()
}

pub fn fourier_lebesgue(f: &SpectralField, s: f64, q: f64) -> f64 {
    let lat = f.lattice();
    let p = lat.amplitude_scale();
    lq(
        f.entries().iter().map(|&(xi, c)| japanese(lat.frequency(xi), s) * p * c.norm()),
        q,
        lat.measure(),
    )
}

/// Sharp partition of the stored support into unit bands in `nu`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandPartition {
    pub period: f64,
    pub bands: BTreeMap<i64, Vec<(i64, C64)>>,
}

impl BandPartition {
    /// `||P_n f||_{L^2}` for every non-empty band.
    pub fn band_l2(&self) -> BTreeMap<i64, f64> {
        self.bands
            .iter()
            .map(|(&n, e)| (n, lq(e.iter().map(|x| x.1.norm()), 2.0, 1.0) * self.period.sqrt()))
            .collect()
    }

    pub fn frequency_count(&self) -> usize {
        self.bands.values().map(Vec::len).sum()
    }
}

/// Band index `floor(nu + 1/2)` of lattice point `xi`.
pub fn band_of(xi: i64, period: f64) -> i64 {
    (xi as f64 / period + 0.5).floor() as i64
}

pub fn band_partition(f: &SpectralField) -> BandPartition {
    let period = f.lattice().period();
    let mut bands: BTreeMap<i64, Vec<(i64, C64)>> = BTreeMap::new();
    for &(xi, c) in f.entries() {
        bands.entry(band_of(xi, period)).or_default().push((xi, c));
    }
    BandPartition { period, bands }
}

pub fn modulation(f: &SpectralField, s: f64, q: f64) -> f64 {
    let bp = band_partition(f);
    lq(bp.band_l2().into_iter().map(|(n, v)| japanese(n as f64, s) * v), q, 1.0)
}

pub fn wiener_amalgam(f: &SpectralField, s: f64, q: f64) -> Result<f64> {
    let bp = band_partition(f);
    if bp.bands.is_empty() {
        return Ok(0.0);
    }
    let period = bp.period;
    // demodulate band n by the lattice point nearest its centre
    let shifted: Vec<(f64, Vec<(i64, C64)>)> = bp
        .bands
        .iter()
        .map(|(&n, e)| {
            let shift = (n as f64 * period).round() as i64;
            (japanese(n as f64, s), e.iter().map(|&(xi, c)| (xi - shift, c)).collect())
        })
        .collect();
    let reach = shifted
        .iter()
        .flat_map(|(_, e)| e.iter().map(|x| x.0.abs()))
        .max()
        .unwrap_or(0);
    let m = grid_size(reach, GRID_OVERSAMPLE);
    if m.saturating_mul(shifted.len().min(64)) > MAX_GRID {
        return Err(GibqError::Capacity {
            what: "Wiener amalgam synthesis grid",
            requested: format!("{m} x {}", shifted.len()),
            limit: MAX_GRID.to_string(),
        });
    }
    // fixed-size chunks keep the reduction order independent of scheduling
    let partials: Vec<Vec<f64>> = shifted
        .par_chunks(64)
        .map(|chunk| {
            let mut acc = vec![0.0f64; m];
            for (w, entries) in chunk {
                let vals = synthesize_complex(entries, m);
                for (a, v) in acc.iter_mut().zip(vals) {
                    let x = w * v.norm();
                    if q.is_infinite() {
                        *a = a.max(x);
                    } else {
                        *a += x.powf(q);
                    }
                }
            }
            acc
        })
        .collect();
    let mut acc = vec![0.0f64; m];
    for part in partials {
        for (a, v) in acc.iter_mut().zip(part) {
            if q.is_infinite() {
                *a = a.max(v);
            } else {
                *a += v;
            }
        }
    }
    let pointwise = acc.into_iter().map(|a| if q.is_infinite() { a } else { a.powf(1.0 / q) });
    Ok(lq(pointwise, 2.0, period / m as f64))
}

/// `||<D>^s f||_{L^inf}` as the maximum over an oversampled grid.
pub fn weighted_sup(f: &SpectralField, s: f64) -> Result<f64> {
    let lat = *f.lattice();
    let g = f.multiply(|xi| japanese(lat.frequency(xi), s));
    let m = grid_size(g.max_abs_frequency(), GRID_OVERSAMPLE);
    if m > MAX_GRID {
        return Err(GibqError::Capacity {
            what: "sup-norm synthesis grid",
            requested: m.to_string(),
            limit: MAX_GRID.to_string(),
        });
    }
    Ok(synthesize_complex(g.entries(), m).into_iter().fold(0.0, |a, v| a.max(v.norm())))
}

pub fn ws2inf(f: &SpectralField, s: f64) -> Result<f64> {
    Ok(sobolev(f, s).max(weighted_sup(f, s)?))
}

/// Norm of a single field. Pair families are rejected.
pub fn norm(f: &SpectralField, spec: &NormSpec) -> Result<f64> {
    spec.validate()?;
    if spec.is_pair() {
        return Err(GibqError::Domain(format!("{spec} measures a data pair, not a single field")));
    }
    if f.is_empty() {
        return Ok(0.0);
    }
    match *spec {
        NormSpec::Sobolev { s } => Ok(sobolev(f, s)),
        NormSpec::FourierLebesgue { s, q } => Ok(fourier_lebesgue(f, s, q)),
        NormSpec::WS2Inf { s } => ws2inf(f, s),
        NormSpec::Modulation { s, q } => Ok(modulation(f, s, q)),
        NormSpec::WienerAmalgam { s, q } => wiener_amalgam(f, s, q),
        NormSpec::SobolevPair { .. } | NormSpec::WienerAlgebraPair => unreachable!("pair specs rejected above"),
    }
}

/// Norm of a data pair: the sum of the component norms in the
/// component space of `spec`.
pub fn pair_norm(pair: &InitialPair, spec: &NormSpec) -> Result<f64> {
    let component = match *spec {
        NormSpec::SobolevPair { s } => NormSpec::Sobolev { s },
        NormSpec::WienerAlgebraPair => NormSpec::FourierLebesgue { s: 0.0, q: 1.0 },
        other => other,
    };
    Ok(norm(&pair.u0, &component)? + norm(&pair.u1, &component)?)
}

/// `g_s(A)`: `1` for `s < -1/2`, `(log A)^{1/2}` at `s = -1/2`, `A^{1/2 + s}` above.
pub fn g_s(s: f64, a: f64) -> f64 {
    if s < -0.5 {
        1.0
    } else if s == -0.5 {
        a.ln().sqrt()
    } else {
        a.powf(0.5 + s)
    }
}

/// `f_{s,q}(A)`: l^q norm of `<xi>^s` over the integer points of `[-A/2, A/2]`.
pub fn f_sq(s: f64, q: f64, a: f64) -> f64 {
    let h = (a / 2.0).floor() as i64;
    lq((-h..=h).map(|xi| japanese(xi as f64, s)), q, 1.0)
}

/// One inequality `lhs <= rhs`; `margin = lhs / rhs`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

impl InequalityCheck {
    fn new(name: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> Self {
        let margin = if rhs > 0.0 {
            lhs / rhs
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        Self {
            name: name.into(),
            lhs,
            rhs,
            margin,
            holds: lhs <= rhs * (1.0 + slack) + f64::MIN_POSITIVE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmbeddingReport {
    pub s: f64,
    pub checks: Vec<InequalityCheck>,
    /// Measured `||f||_{L^inf} / ||f||_{L^2}`.
    pub linf_over_l2: f64,
}

impl EmbeddingReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

/// Exponents at which the amalgam sandwich is evaluated.
pub const EMBEDDING_EXPONENTS: [f64; 5] = [1.0, 1.5, 2.0, 4.0, f64::INFINITY];

/// Evaluates `M^{2,min(2,q)}_s >= W^{2,q}_s >= M^{2,max(2,q)}_s`, the nesting
/// of modulation norms in `q`, and `||f||_inf <= sqrt(|supp| / P) ||f||_2`.
pub fn check_embeddings(f: &SpectralField, s: f64) -> Result<EmbeddingReport> {
    let slack = EXACT_INEQUALITY_SLACK;
    let mut checks = Vec::new();
    let m1 = modulation(f, s, 1.0);
    let m2 = modulation(f, s, 2.0);
    let minf = modulation(f, s, f64::INFINITY);
    checks.push(InequalityCheck::new("M2,2 <= M2,1", m2, m1, slack));
    checks.push(InequalityCheck::new("M2,inf <= M2,2", minf, m2, slack));
    for q in EMBEDDING_EXPONENTS {
        let w = wiener_amalgam(f, s, q)?;
        let upper = modulation(f, s, q.min(2.0));
        let lower = modulation(f, s, q.max(2.0));
        let tag = fmt_q(q);
        checks.push(InequalityCheck::new(format!("W2,{tag} <= M2,min(2,{tag})"), w, upper, 1e-10));
        checks.push(InequalityCheck::new(format!("M2,max(2,{tag}) <= W2,{tag}"), lower, w, 1e-10));
    }
    let l2 = sobolev(f, 0.0);
    let linf = weighted_sup(f, 0.0)?;
    let bound = (f.len() as f64 / f.lattice().period()).sqrt();
    let c = if l2 > 0.0 { linf / l2 } else { 0.0 };
    checks.push(InequalityCheck::new("Linf <= C L2 (band-limited)", c, bound, slack));
    Ok(EmbeddingReport {
        s,
        checks,
        linf_over_l2: c,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlgebraReport {
    /// `||uv|| / (||u|| ||v||)` in `FL^1`.
    pub fl1_constant: f64,
    /// Same ratio in `M^{2,1}_0`.
    pub modulation_constant: f64,
    pub fl1: InequalityCheck,
    pub modulation: InequalityCheck,
}

/// Product inequalities in `FL^1` (constant 1) and `M^{2,1}_0`.
pub fn check_algebra(u: &SpectralField, v: &SpectralField) -> Result<AlgebraReport> {
    let uv = convolve_with(u, v, None)?;
    let fl = |f: &SpectralField| fourier_lebesgue(f, 0.0, 1.0);
    let md = |f: &SpectralField| modulation(f, 0.0, 1.0);
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    let fl_rhs = fl(u) * fl(v);
    let md_rhs = md(u) * md(v);
    Ok(AlgebraReport {
        fl1_constant: ratio(fl(&uv), fl_rhs),
        modulation_constant: ratio(md(&uv), md_rhs),
        fl1: InequalityCheck::new("FL1 product", fl(&uv), fl_rhs, EXACT_INEQUALITY_SLACK),
        modulation: InequalityCheck::new("M2,1 product", md(&uv), MODULATION_ALGEBRA_BOUND * md_rhs, EXACT_INEQUALITY_SLACK),
    })
}
