//! Sparse Fourier representation of real fields on a one-dimensional torus.
//!
//! Frequencies are integer indices `xi` on the dual lattice. For a domain of
//! period `P` the physical (ordinary) frequency is `nu = xi / P` and the
//! angular frequency is `omega = 2 pi nu`. The Fourier transform of a field
//! with coefficients `c_xi` is `f_hat(nu) = P c_xi`, integrated against the
//! measure `1 / P` per lattice point, so that Plancherel holds with the
//! physical `L^2` norm over one period. For the unit torus both factors are 1
//! and the dual lattice is exactly `Z` with counting measure.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{GibqError, Result};

pub type C64 = Complex64;

/// Relative prune threshold applied after every convolution.
pub const PRUNE_REL: f64 = 1e-14;

/// Default largest representable frequency index.
pub const DEFAULT_CUTOFF: i64 = 1 << 40;

/// Hard ceiling on the cutoff so that pairwise index sums never overflow `i64`.
pub const MAX_CUTOFF: i64 = 1 << 61;

/// Above this output range a convolution switches from a dense accumulator
/// to sorted pair merging.
const DENSE_RANGE_LIMIT: i128 = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// `R / (P Z)`; the default unit torus has period 1.
    Torus { period: f64 },
    /// Scaled-torus surrogate for the real line. Only the labelling differs
    /// from `Torus`; results carry no exactness claim for the line itself.
    LineApprox { period: f64 },
}

impl Domain {
    pub fn period(&self) -> f64 {
        match *self {
            Domain::Torus { period } | Domain::LineApprox { period } => period,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyLattice {
    pub domain: Domain,
    pub cutoff: i64,
}

impl Default for FrequencyLattice {
    fn default() -> Self {
        Self::torus()
    }
}

impl FrequencyLattice {
    pub fn new(domain: Domain, cutoff: i64) -> Result<Self> {
        let period = domain.period();
        if !(period.is_finite() && period > 0.0) {
            return Err(GibqError::Domain(format!("period must be positive, got {period}")));
        }
        if !(1..=MAX_CUTOFF).contains(&cutoff) {
            return Err(GibqError::Domain(format!(
                "cutoff must lie in [1, {MAX_CUTOFF}], got {cutoff}"
            )));
        }
        Ok(Self { domain, cutoff })
    }

    /// The unit torus `R / Z` with the default cutoff.
    pub fn torus() -> Self {
        Self {
            domain: Domain::Torus { period: 1.0 },
            cutoff: DEFAULT_CUTOFF,
        }
    }

    pub fn line_approx(period: f64) -> Result<Self> {
        Self::new(Domain::LineApprox { period }, DEFAULT_CUTOFF)
    }

    pub fn period(&self) -> f64 {
        self.domain.period()
    }

    /// Ordinary frequency `xi / P`.
    #[inline]
    pub fn frequency(&self, xi: i64) -> f64 {
        xi as f64 / self.period()
    }

    /// Angular frequency `2 pi xi / P`.
    #[inline]
    pub fn angular(&self, xi: i64) -> f64 {
        2.0 * PI * self.frequency(xi)
    }

    /// Japanese bracket `<nu> = (1 + nu^2)^(1/2)` of the ordinary frequency.
    #[inline]
    pub fn bracket(&self, xi: i64) -> f64 {
        self.frequency(xi).hypot(1.0)
    }

    /// Measure carried by one lattice point.
    #[inline]
    pub fn measure(&self) -> f64 {
        1.0 / self.period()
    }

    /// Factor between Fourier coefficients and the Fourier transform.
    #[inline]
    pub fn amplitude_scale(&self) -> f64 {
        self.period()
    }

    fn same_as(&self, other: &Self) -> bool {
        self == other
    }
}

/// Symbol of `P(D) = |D| / <D>`: `|omega| / (1 + omega^2)^(1/2)`.
#[inline]
pub fn lambda_symbol(xi: i64, lattice: &FrequencyLattice) -> f64 {
    let omega = lattice.angular(xi).abs();
    omega / omega.hypot(1.0)
}

/// A sparse map from frequency index to complex amplitude.
///
/// Entries are sorted by frequency, unique and nonzero. A field is immutable
/// once built; every operation returns a new value.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    lattice: FrequencyLattice,
    entries: Vec<(i64, C64)>,
}

impl SpectralField {
    pub fn zero(lattice: FrequencyLattice) -> Self {
        Self {
            lattice,
            entries: Vec::new(),
        }
    }

    pub fn delta(lattice: FrequencyLattice, xi: i64, amplitude: C64) -> Result<Self> {
        Self::from_entries(lattice, [(xi, amplitude)])
    }

    /// Builds a field from `(xi, value)` pairs; repeated frequencies add up
    /// and exact zeros are dropped.
    pub fn from_entries<I>(lattice: FrequencyLattice, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, C64)>,
    {
        let mut v: Vec<(i64, C64)> = entries.into_iter().collect();
        for &(xi, _) in &v {
            if xi.unsigned_abs() > lattice.cutoff as u64 {
                return Err(GibqError::Overflow {
                    xi: xi as i128,
                    cutoff: lattice.cutoff,
                });
            }
        }
        v.sort_by_key(|e| e.0);
        Ok(Self {
            lattice,
            entries: merge_sorted(v),
        })
    }

    /// Trusted constructor for already sorted, unique, in-range entries.
    pub(crate) fn from_sorted_unchecked(lattice: FrequencyLattice, entries: Vec<(i64, C64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        Self { lattice, entries }
    }

    pub fn lattice(&self) -> &FrequencyLattice {
        &self.lattice
    }

    pub fn entries(&self) -> &[(i64, C64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, xi: i64) -> C64 {
        match self.entries.binary_search_by_key(&xi, |e| e.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn max_abs_frequency(&self) -> i64 {
        self.entries.iter().map(|e| e.0.abs()).max().unwrap_or(0)
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.1.norm()).fold(0.0, f64::max)
    }

    /// Coefficient l1 sum.
    pub fn l1(&self) -> f64 {
        self.entries.iter().map(|e| e.1.norm()).sum()
    }

    /// Coefficient l2 norm.
    pub fn l2(&self) -> f64 {
        self.entries.iter().map(|e| e.1.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest deviation from `c(-xi) = conj(c(xi))`.
    pub fn hermitian_defect(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(xi, c)| (self.get(-xi) - c.conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermitian_defect() <= rel_tol * self.max_abs().max(f64::MIN_POSITIVE)
    }

    pub fn check_lattice(&self, other: &SpectralField) -> Result<()> {
        if self.lattice.same_as(&other.lattice) {
            Ok(())
        } else {
            Err(GibqError::LatticeMismatch(format!(
                "{:?} vs {:?}",
                self.lattice, other.lattice
            )))
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        if factor == C64::new(0.0, 0.0) {
            return Self::zero(self.lattice);
        }
        Self {
            lattice: self.lattice,
            entries: self.entries.iter().map(|&(xi, c)| (xi, c * factor)).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    /// Coefficient-wise `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &SpectralField) -> Result<Self> {
        self.check_lattice(other)?;
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&(xa, ca)), Some(&(xb, cb))) if xa == xb => {
                    i += 1;
                    j += 1;
                    (xa, ca + cb * factor)
                }
                (Some(&(xa, ca)), Some(&(xb, _))) if xa < xb => {
                    i += 1;
                    (xa, ca)
                }
                (Some(&(xa, ca)), None) => {
                    i += 1;
                    (xa, ca)
                }
                (_, Some(&(xb, cb))) => {
                    j += 1;
                    (xb, cb * factor)
                }
                (None, None) => unreachable!(),
            };
            if next.1 != C64::new(0.0, 0.0) {
                out.push(next);
            }
        }
        Ok(Self::from_sorted_unchecked(self.lattice, out))
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    /// `sum_i w_i f_i` over fields sharing one lattice.
    pub fn linear_combination(lattice: FrequencyLattice, terms: &[(f64, &SpectralField)]) -> Result<Self> {
        let mut all: Vec<(i64, C64)> = Vec::new();
        for &(w, f) in terms {
            if f.lattice != lattice {
                return Err(GibqError::LatticeMismatch(format!("{:?} vs {:?}", f.lattice, lattice)));
            }
            if w != 0.0 {
                all.extend(f.entries.iter().map(|&(xi, c)| (xi, c * w)));
            }
        }
        // stable sort keeps the term order inside each frequency
        all.sort_by_key(|e| e.0);
        Ok(Self::from_sorted_unchecked(lattice, merge_sorted(all)))
    }

    /// Applies a real Fourier multiplier `m(xi)`.
    pub fn multiply<F: Fn(i64) -> f64>(&self, m: F) -> Self {
        let entries = self
            .entries
            .iter()
            .filter_map(|&(xi, c)| {
                let v = c * m(xi);
                (v != C64::new(0.0, 0.0)).then_some((xi, v))
            })
            .collect();
        Self::from_sorted_unchecked(self.lattice, entries)
    }

    /// Restriction to the frequencies accepted by `keep`.
    pub fn restrict<F: Fn(i64) -> bool>(&self, keep: F) -> Self {
        let entries = self.entries.iter().copied().filter(|e| keep(e.0)).collect();
        Self::from_sorted_unchecked(self.lattice, entries)
    }

    /// Drops coefficients below `rel * max |c|`.
    pub fn pruned(&self, rel: f64) -> Self {
        let floor = rel * self.max_abs();
        let entries = self
            .entries
            .iter()
            .copied()
            .filter(|e| e.1.norm() >= floor && e.1 != C64::new(0.0, 0.0))
            .collect();
        Self::from_sorted_unchecked(self.lattice, entries)
    }

    pub fn to_document(&self) -> SpectralFieldDoc {
        SpectralFieldDoc {
            period: self.lattice.period(),
            entries: self
                .entries
                .iter()
                .map(|&(xi, c)| EntryDoc { xi, re: c.re, im: c.im })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    /// Parses the `{period, entries}` document onto a torus of that period.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SpectralFieldDoc = serde_json::from_str(text)?;
        doc.into_field(None)
    }
}

fn merge_sorted(v: Vec<(i64, C64)>) -> Vec<(i64, C64)> {
    let mut out: Vec<(i64, C64)> = Vec::with_capacity(v.len());
    for (xi, c) in v {
        match out.last_mut() {
            Some(last) if last.0 == xi => last.1 += c,
            _ => out.push((xi, c)),
        }
    }
    out.retain(|e| e.1 != C64::new(0.0, 0.0));
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryDoc {
    pub xi: i64,
    pub re: f64,
    pub im: f64,
}

/// On-disk form of a spectral field, entries sorted by `xi`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralFieldDoc {
    pub period: f64,
    pub entries: Vec<EntryDoc>,
}

impl SpectralFieldDoc {
    pub fn into_field(self, lattice: Option<FrequencyLattice>) -> Result<SpectralField> {
        let lattice = match lattice {
            Some(l) => {
                if (l.period() - self.period).abs() > 0.0 {
                    return Err(GibqError::LatticeMismatch(format!(
                        "document period {} vs lattice period {}",
                        self.period,
                        l.period()
                    )));
                }
                l
            }
            None => FrequencyLattice::new(Domain::Torus { period: self.period }, DEFAULT_CUTOFF)?,
        };
        SpectralField::from_entries(
            lattice,
            self.entries.into_iter().map(|e| (e.xi, C64::new(e.re, e.im))),
        )
    }
}

/// Discrete convolution `(f * g)(xi) = sum_{a + b = xi} f(a) g(b)` with the
/// default prune threshold.
pub fn convolve(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    convolve_with(f, g, Some(PRUNE_REL))
}

/// Convolution with an explicit prune threshold (`None` keeps everything
/// that is not exactly zero).
pub fn convolve_with(f: &SpectralField, g: &SpectralField, prune: Option<f64>) -> Result<SpectralField> {
    f.check_lattice(g)?;
    let lattice = f.lattice;
    if f.is_empty() || g.is_empty() {
        return Ok(SpectralField::zero(lattice));
    }
    let (fa, ga) = (&f.entries, &g.entries);
    let lo = fa[0].0 as i128 + ga[0].0 as i128;
    let hi = fa[fa.len() - 1].0 as i128 + ga[ga.len() - 1].0 as i128;
    let cutoff = lattice.cutoff as i128;
    if lo < -cutoff {
        return Err(GibqError::Overflow { xi: lo, cutoff: lattice.cutoff });
    }
    if hi > cutoff {
        return Err(GibqError::Overflow { xi: hi, cutoff: lattice.cutoff });
    }
    let range = hi - lo + 1;
    let pairs = (fa.len() as i128) * (ga.len() as i128);
    let entries = if range <= DENSE_RANGE_LIMIT && range <= 8 * pairs + 4096 {
        let lo = lo as i64;
        let mut acc = vec![C64::new(0.0, 0.0); range as usize];
        let mut hit = vec![false; range as usize];
        for &(a, ca) in fa {
            for &(b, cb) in ga {
                let idx = (a + b - lo) as usize;
                acc[idx] += ca * cb;
                hit[idx] = true;
            }
        }
        acc.into_iter()
            .zip(hit)
            .enumerate()
            .filter(|(_, (c, h))| *h && *c != C64::new(0.0, 0.0))
            .map(|(i, (c, _))| (lo + i as i64, c))
            .collect()
    } else {
        let mut all = Vec::with_capacity(pairs as usize);
        for &(a, ca) in fa {
            for &(b, cb) in ga {
                all.push((a + b, ca * cb));
            }
        }
        all.sort_by_key(|e| e.0);
        merge_sorted(all)
    };
    let out = SpectralField::from_sorted_unchecked(lattice, entries);
    Ok(match prune {
        Some(rel) => out.pruned(rel),
        None => out,
    })
}

/// `f^k` in physical space, i.e. the `(k-1)`-fold self convolution, folded left.
pub fn power_k(f: &SpectralField, k: usize) -> Result<SpectralField> {
    if k < 2 {
        return Err(GibqError::Domain(format!("power_k needs k >= 2, got {k}")));
    }
    let mut acc = f.clone();
    for _ in 1..k {
        acc = convolve(&acc, f)?;
    }
    Ok(acc)
}

/// `f^k` by repeated squaring.
pub fn power_k_balanced(f: &SpectralField, k: usize) -> Result<SpectralField> {
    if k < 2 {
        return Err(GibqError::Domain(format!("power_k needs k >= 2, got {k}")));
    }
    fn go(f: &SpectralField, k: usize) -> Result<SpectralField> {
        if k == 1 {
            return Ok(f.clone());
        }
        let half = go(f, k / 2)?;
        let sq = convolve(&half, &half)?;
        if k % 2 == 1 {
            convolve(&sq, f)
        } else {
            Ok(sq)
        }
    }
    go(f, k)
}

/// Real samples at equispaced points of one period.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub samples: Vec<f64>,
    pub period: f64,
}

impl GridField {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.samples.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(int |f|^2 dx)^(1/2)` by the rectangle rule, exact for band-limited
    /// fields on an alias-free grid.
    pub fn l2(&self) -> f64 {
        (self.samples.iter().map(|v| v * v).sum::<f64>() * self.spacing()).sqrt()
    }

    pub fn mean_square(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum::<f64>() / self.samples.len() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,value\n");
        let h = self.spacing();
        for (i, v) in self.samples.iter().enumerate() {
            out.push_str(&format!("{:.17e},{:.17e}\n", i as f64 * h, v));
        }
        out
    }
}

/// Grid size used for synthesis: a power of two of at least
/// `oversample * (2 K + 1)` and `2 K + 2` points.
pub fn grid_size(max_abs_xi: i64, oversample: usize) -> usize {
    let k = max_abs_xi.max(0) as usize;
    let need = (oversample.max(1) * (2 * k + 1)).max(2 * k + 2).max(2);
    need.next_power_of_two()
}

/// Complex samples `sum_xi c_xi exp(2 pi i xi m / M)` for `m = 0..M`.
pub(crate) fn synthesize_complex(entries: &[(i64, C64)], m: usize) -> Vec<C64> {
    let mut buf = vec![C64::new(0.0, 0.0); m];
    for &(xi, c) in entries {
        let idx = xi.rem_euclid(m as i64) as usize;
        buf[idx] += c;
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(m).process(&mut buf);
    buf
}

/// Trigonometric synthesis at `grid_size(max |xi|, oversample)` equispaced
/// points. The imaginary part, which vanishes for Hermitian fields, is dropped.
pub fn synthesize(f: &SpectralField, oversample: usize) -> GridField {
    let m = grid_size(f.max_abs_frequency(), oversample.max(2));
    let buf = synthesize_complex(f.entries(), m);
    GridField {
        samples: buf.into_iter().map(|c| c.re).collect(),
        period: f.lattice().period(),
    }
}
