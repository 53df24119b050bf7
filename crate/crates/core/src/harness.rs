//! Norm-inflation experiments: condition checks with measured norms, the
//! resonant split of the first Picard iterate, full runs and sweeps.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::construction::{
    centre_tuples, make_bump, perturbed_data, sample_base_data, schedule, BumpData, InflationParams,
};
use crate::error::{GibqError, Result};
use crate::flow::{duhamel_forcing, duhamel_trajectory, linear_flow, product_trajectory, InitialPair, Trajectory, DEFAULT_DEGREE};
use crate::lattice::SpectralField;
use crate::norms::{f_sq, g_s, norm, pair_norm, sobolev, weighted_sup, NormSpec};
use crate::series::{accumulate, fixed_point, tail_residual, PicardSeries};

/// Version of the report, CSV and manifest layouts.
pub const SCHEMA_VERSION: u32 = 1;

/// Tolerance of the fixed-point cross-check.
pub const CROSS_CHECK_TOL: f64 = 1e-9;

/// Columns of `runs.csv`, in order.
pub const CSV_COLUMNS: [&str; 33] = [
    "run",
    "n",
    "k",
    "s",
    "sigma",
    "delta",
    "N",
    "R",
    "T",
    "A",
    "family",
    "status",
    "perturbation",
    "xi1_phi",
    "xi1_lower_ratio",
    "solution",
    "tail_sum",
    "i1",
    "i2",
    "i2_over_i1",
    "cond_i",
    "cond_ii",
    "cond_iii",
    "cond_iv",
    "cond_v",
    "cond_vi",
    "all_conditions",
    "series_max_ratio",
    "tail_residual",
    "fixed_point_distance",
    "sup_bound_ratio",
    "base_fl1",
    "message",
];

/// Norm family in which inflation is measured; the regularity is supplied per use.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormFamily {
    Sobolev,
    FourierLebesgue(f64),
    Modulation(f64),
    WienerAmalgam(f64),
}

impl NormFamily {
    pub fn at(&self, s: f64) -> NormSpec {
        match *self {
            NormFamily::Sobolev => NormSpec::Sobolev { s },
            NormFamily::FourierLebesgue(q) => NormSpec::FourierLebesgue { s, q },
            NormFamily::Modulation(q) => NormSpec::Modulation { s, q },
            NormFamily::WienerAmalgam(q) => NormSpec::WienerAmalgam { s, q },
        }
    }
}

impl fmt::Display for NormFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = |q: f64| if q.is_infinite() { "inf".to_string() } else { format!("{q}") };
        match *self {
            NormFamily::Sobolev => write!(f, "sobolev"),
            NormFamily::FourierLebesgue(v) => write!(f, "fl:{}", q(v)),
            NormFamily::Modulation(v) => write!(f, "modulation:{}", q(v)),
            NormFamily::WienerAmalgam(v) => write!(f, "amalgam:{}", q(v)),
        }
    }
}

/// `sobolev`, `fl:<q>`, `modulation:<q>` or `amalgam:<q>`, with `q` a number or `inf`.
impl FromStr for NormFamily {
    type Err = GibqError;

    fn from_str(text: &str) -> Result<Self> {
        let (name, q) = match text.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (text, None),
        };
        let q = match q {
            None => None,
            Some("inf") => Some(f64::INFINITY),
            Some(v) => Some(
                v.parse::<f64>()
                    .ok()
                    .filter(|q| *q >= 1.0)
                    .ok_or_else(|| GibqError::Config(format!("bad exponent in norm family '{text}'")))?,
            ),
        };
        match (name, q) {
            ("sobolev", None) => Ok(NormFamily::Sobolev),
            ("fl", Some(q)) => Ok(NormFamily::FourierLebesgue(q)),
            ("modulation", Some(q)) => Ok(NormFamily::Modulation(q)),
            ("amalgam", Some(q)) => Ok(NormFamily::WienerAmalgam(q)),
            _ => Err(GibqError::Config(format!(
                "unknown norm family '{text}' (expected sobolev, fl:<q>, modulation:<q>, amalgam:<q>)"
            ))),
        }
    }
}

impl Serialize for NormFamily {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for NormFamily {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// One condition `lhs < rhs`, recorded as `margin = lhs / rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    }
}

impl ConditionCheck {
    fn new(label: &str, lhs: f64, rhs: f64) -> Self {
        let margin = ratio(lhs, rhs);
        Self {
            label: label.into(),
            lhs,
            rhs,
            margin,
            holds: margin < 1.0,
        }
    }
}

/// Measured left side of an estimate against its right side without constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerLine {
    pub name: String,
    pub j: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl LedgerLine {
    fn new(name: &str, j: Option<usize>, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.into(),
            j,
            lhs,
            rhs,
            ratio: ratio(lhs, rhs),
        }
    }

    /// `ratio^{1/j}`, the per-generation constant.
    pub fn fitted_constant(&self) -> Option<f64> {
        self.j.filter(|&j| j > 0).map(|j| self.ratio.powf(1.0 / j as f64))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateLedger {
    pub g_s_of_a: f64,
    /// `f_{s,q}(A)` for `q = 1, 2, inf`.
    pub f_sq_of_a: [f64; 3],
    /// Conditions (i) to (vi), evaluated at regularity `min(s, sigma)` where it enters.
    pub conditions: Vec<ConditionCheck>,
    pub sigma_variant: bool,
    /// `||Xi_1(phi_n)(T)||_{H^{min(s, sigma)}}`.
    pub xi1_phi_norm: f64,
    /// `||Xi_1(phi_n)(T)||_{H^sigma} / (R^k T^2 A^{k - 1/2 + sigma})`.
    pub xi1_lower_ratio: f64,
    /// Per-line ledger of the multilinear estimates; empty until a run fills it.
    pub estimate_lines: Vec<LedgerLine>,
}

impl EstimateLedger {
    pub fn all_hold(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }

    pub fn condition(&self, label: &str) -> Option<&ConditionCheck> {
        self.conditions.iter().find(|c| c.label == label)
    }
}

/// `||Xi_1(phi_n)(T)||` lower-bound denominator `R^k T^2 A^{k - 1/2 + sigma}`.
pub fn xi1_lower_scale(params: &InflationParams, sigma: f64) -> f64 {
    let k = params.k as f64;
    params.r.powi(params.k as i32) * params.t * params.t * (params.a as f64).powf(k - 0.5 + sigma)
}

fn conditions_from(params: &InflationParams, base: &InitialPair, bump: &BumpData, xi1_phi: &SpectralField) -> Result<EstimateLedger> {
    let (k, a, r, t) = (params.k, params.a as f64, params.r, params.t);
    let sigma_variant = params.sigma < params.s;
    let reg = params.s.min(params.sigma);
    let phi_hs = pair_norm(&bump.phi, &NormSpec::SobolevPair { s: params.s })?;
    let phi_fl1 = pair_norm(&bump.phi, &NormSpec::WienerAlgebraPair)?;
    let base_h0 = pair_norm(base, &NormSpec::SobolevPair { s: 0.0 })?;
    let base_fl1 = pair_norm(base, &NormSpec::WienerAlgebraPair)?;
    let low_cube = r * f_sq(reg, 2.0, a);
    let xi1_norm = sobolev(xi1_phi, reg);
    let gs = g_s(params.s, a);
    let iii_h0 = ConditionCheck::new("iii", base_h0, low_cube);
    let iii_fl1 = ConditionCheck::new("iii", base_fl1, phi_fl1);
    let iii = if iii_h0.margin >= iii_fl1.margin { iii_h0 } else { iii_fl1 };
    let conditions = vec![
        ConditionCheck::new("i", phi_hs, 1.0 / params.n as f64),
        ConditionCheck::new("ii", t * t * phi_fl1.powi(k as i32 - 1), 1.0),
        iii,
        ConditionCheck::new("iv", t.powi(4) * phi_fl1.powi(2 * (k as i32 - 1)) * r * gs, xi1_norm),
        ConditionCheck::new("v", params.n as f64, xi1_norm),
        ConditionCheck::new("vi", params.separation_margin(), 1.0),
    ];
    Ok(EstimateLedger {
        g_s_of_a: gs,
        f_sq_of_a: [f_sq(params.s, 1.0, a), f_sq(params.s, 2.0, a), f_sq(params.s, f64::INFINITY, a)],
        conditions,
        sigma_variant,
        xi1_phi_norm: xi1_norm,
        xi1_lower_ratio: sobolev(xi1_phi, params.sigma) / xi1_lower_scale(params, params.sigma),
        estimate_lines: Vec::new(),
    })
}

/// Evaluates conditions (i) to (vi) with measured norms; failures are recorded, not raised.
pub fn check_conditions(params: &InflationParams, base: &InitialPair) -> Result<EstimateLedger> {
    let bump = make_bump(params)?;
    let flow = linear_flow(&bump.phi, params.t, DEFAULT_DEGREE)?;
    let args = vec![&flow; params.k];
    let xi1 = duhamel_trajectory(&args)?;
    conditions_from(params, base, &bump, xi1.final_value())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResonantSplit {
    /// Tuples of cube centres (multiples of `N`) summing to zero.
    pub sigma1: Vec<Vec<i64>>,
    pub sigma2: Vec<Vec<i64>>,
    /// Contributions at `T`, divided by `R^k`.
    pub i1: SpectralField,
    pub i2: SpectralField,
}

/// Splits `Xi_1(phi_n)(T) / R^k` by whether the contributing cube centres sum to zero.
pub fn resonant_split(bump: &BumpData, k: usize, horizon: f64, p: usize) -> Result<ResonantSplit> {
    let lattice = *bump.phi.lattice();
    let h = bump.a / 2;
    let cube_flows = bump
        .centres()
        .iter()
        .map(|&eta| {
            let f = bump.phi.u0.restrict(|xi| (xi - eta).abs() <= h);
            linear_flow(&InitialPair::new(f, SpectralField::zero(lattice))?, horizon, p)
        })
        .collect::<Result<Vec<_>>>()?;
    let slot = |c: i64| crate::construction::CUBE_CENTRES.iter().position(|&x| x == c).unwrap();
    let (sigma1, sigma2): (Vec<Vec<i64>>, Vec<Vec<i64>>) =
        centre_tuples(k).into_iter().partition(|t| t.iter().sum::<i64>() == 0);
    if sigma1.is_empty() || sigma2.is_empty() {
        return Err(GibqError::Structural(format!("resonant split degenerate for k={k}")));
    }
    let class = |tuples: &[Vec<i64>]| -> Result<SpectralField> {
        let products = tuples
            .par_iter()
            .map(|tuple| {
                let args: Vec<&Trajectory> = tuple.iter().map(|&c| &cube_flows[slot(c)]).collect();
                product_trajectory(&args)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut forcing = products[0].clone();
        for prod in &products[1..] {
            forcing = forcing.add(prod)?;
        }
        Ok(duhamel_forcing(&forcing).final_value().scale_real(bump.r.powi(-(k as i32))))
    };
    let i1 = class(&sigma1)?;
    let i2 = class(&sigma2)?;
    Ok(ResonantSplit { sigma1, sigma2, i1, i2 })
}

/// `Xi_1(u0 + phi) - Xi_1(phi)` as the sum of `I_k` over argument tuples
/// drawn from `{S u0, S phi}` with at least one `S u0`.
pub fn mixed_difference(base: &InitialPair, bump: &BumpData, k: usize, horizon: f64, p: usize) -> Result<SpectralField> {
    let su = linear_flow(base, horizon, p)?;
    let sp = linear_flow(&bump.phi, horizon, p)?;
    let mut forcing: Option<Trajectory> = None;
    for mask in 1u32..(1 << k) {
        let args: Vec<&Trajectory> = (0..k).map(|j| if mask >> j & 1 == 1 { &su } else { &sp }).collect();
        let prod = product_trajectory(&args)?;
        forcing = Some(match forcing {
            Some(f) => f.add(&prod)?,
            None => prod,
        });
    }
    Ok(duhamel_forcing(&forcing.expect("k >= 1")).final_value().clone())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Series,
    FixedPoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Diverged,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Ok => "ok",
            RunStatus::Diverged => "diverged",
        })
    }
}

/// Inputs of one inflation run besides the parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub seed: u64,
    pub base_amplitude: f64,
    pub base_decay: f64,
    pub families: Vec<NormFamily>,
    pub max_gen: usize,
    pub p: usize,
    pub method: Method,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            base_amplitude: 0.0,
            base_decay: 0.5,
            families: vec![NormFamily::Sobolev],
            max_gen: 8,
            p: DEFAULT_DEGREE,
            method: Method::Series,
        }
    }
}

/// Inflation quantities in one norm family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyMeasures {
    pub family: NormFamily,
    /// `||u_{0,n} - u_0||` in the pair space at regularity `s`.
    pub perturbation: f64,
    /// `||Xi_1(phi_n)(T)||` at regularity `sigma`.
    pub xi1_phi: f64,
    /// `||u_n(T)||` at regularity `sigma`.
    pub solution: f64,
    /// `||Xi_j(u_{0,n})(T)||` at regularity `sigma`, `j = 0..=J`.
    pub xi_terms: Vec<f64>,
    /// `sum_{j >= 2} ||Xi_j(u_{0,n})(T)||` at regularity `sigma`.
    pub tail_sum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InflationReport {
    pub schema_version: u32,
    pub params: InflationParams,
    pub spec: RunSpec,
    pub status: RunStatus,
    pub ledger: EstimateLedger,
    pub families: Vec<FamilyMeasures>,
    /// `sup_t ||Xi_j(u_{0,n})(t)||_{l1}`.
    pub series_sup_l1: Vec<f64>,
    pub series_ratios: Vec<f64>,
    pub tail_residual: f64,
    /// Sup-l1 distance between the series sum and the fixed point, when both exist.
    pub fixed_point_distance: Option<f64>,
    /// `||I_1||_{H^s}`, `||I_2||_{H^s}`.
    pub i1_norm: f64,
    pub i2_norm: f64,
    pub sigma1_count: usize,
    pub sigma2_count: usize,
    /// Measure of one frequency cube on the lattice, `(A + 1) / P` on the torus.
    pub cube_measure: f64,
    /// `||<D>^s phi_n||_{L^inf} / (2 |Q_A|^{1/2} ||phi_n||_{H^s})` with the measured cube.
    pub sup_bound_ratio: f64,
    /// Same quotient with the nominal side `A` in place of the measured cube.
    pub sup_bound_nominal: f64,
    pub base_fl1: f64,
}

impl InflationReport {
    pub fn family(&self, family: NormFamily) -> Option<&FamilyMeasures> {
        self.families.iter().find(|f| f.family == family)
    }

    pub fn series_max_ratio(&self) -> f64 {
        self.series_ratios.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Full inflation experiment at `params`. A series whose sup-l1 ledger
/// ratio reaches one yields [`GibqError::SeriesDivergence`] carrying the
/// complete report.
pub fn run_inflation(params: &InflationParams, spec: &RunSpec) -> Result<InflationReport> {
    if spec.max_gen < 2 {
        return Err(GibqError::Domain(format!("need J >= 2, got {}", spec.max_gen)));
    }
    let (k, p) = (params.k, spec.p);
    let bump = make_bump(params)?;
    let base = sample_base_data(spec.seed, spec.base_decay, spec.base_amplitude)?;
    let data = perturbed_data(&base, &bump)?;

    let mut series = PicardSeries::new(&data, k, params.t, p)?;
    let acc = accumulate(&mut series, spec.max_gen)?;
    let residual = tail_residual(&acc, &data)?;
    let phi_xi1 = if base.is_zero() {
        acc.terms[1].trajectory.final_value().clone()
    } else {
        PicardSeries::new(&bump.phi, k, params.t, p)?.term(1)?.final_value().clone()
    };

    let mut ledger = conditions_from(params, &base, &bump, &phi_xi1)?;
    let ratios = acc.ratios();
    let diverged_at = ratios.iter().position(|r| !(r.is_nan() || *r < 1.0));

    let solution = match spec.method {
        Method::Series => Some(acc.sum().final_value().clone()),
        Method::FixedPoint => match fixed_point(&data, k, params.t, p, CROSS_CHECK_TOL) {
            Ok(fp) => Some(fp.trajectory.final_value().clone()),
            Err(GibqError::NotContracting { .. } | GibqError::IterationCap { .. }) => None,
            Err(e) => return Err(e),
        },
    };
    let fixed_point_distance = if diverged_at.is_none() {
        match fixed_point(&data, k, params.t, p, CROSS_CHECK_TOL) {
            Ok(fp) => Some(fp.trajectory.distance_sup_l1(acc.sum())?),
            Err(GibqError::NotContracting { .. } | GibqError::IterationCap { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    // multilinear estimate ledger at regularity s
    let s = params.s;
    let (a, r, t) = (params.a as f64, params.r, params.t);
    let km1 = k as i32 - 1;
    let base_hs = pair_norm(&base, &NormSpec::SobolevPair { s })?;
    let base_h0 = pair_norm(&base, &NormSpec::SobolevPair { s: 0.0 })?;
    let pert_hs = pair_norm(&data.sub(&base)?, &NormSpec::SobolevPair { s })?;
    let n_s = (params.big_n as f64).powf(s);
    let mut lines = vec![
        LedgerLine::new("perturbation", None, pert_hs, r * n_s * a.sqrt()),
        LedgerLine::new(
            "linear",
            Some(0),
            acc.terms[0].trajectory.values().iter().map(|v| sobolev(v, s)).fold(0.0, f64::max),
            base_hs + r * a.sqrt() * n_s,
        ),
        LedgerLine::new(
            "first_difference",
            None,
            sobolev(&acc.terms[1].trajectory.final_value().sub(&phi_xi1)?, s),
            t * t * r.powi(km1) * a.powi(km1) * base_h0,
        ),
    ];
    for (j, term) in acc.terms.iter().enumerate().skip(1) {
        let ji = j as i32;
        lines.push(LedgerLine::new(
            "generation",
            Some(j),
            sobolev(term.trajectory.final_value(), s),
            t.powi(2 * ji) * (r * a).powi(km1 * ji) * (base_h0 + r * ledger.g_s_of_a),
        ));
    }
    ledger.estimate_lines = lines;

    let split = resonant_split(&bump, k, params.t, p)?;
    let families = spec
        .families
        .iter()
        .map(|&fam| {
            let at_sigma = fam.at(params.sigma);
            let xi_terms = acc
                .terms
                .iter()
                .map(|term| norm(term.trajectory.final_value(), &at_sigma))
                .collect::<Result<Vec<_>>>()?;
            Ok(FamilyMeasures {
                family: fam,
                perturbation: pair_norm(&data.sub(&base)?, &fam.at(s))?,
                xi1_phi: norm(&phi_xi1, &at_sigma)?,
                solution: match &solution {
                    Some(u) => norm(u, &at_sigma)?,
                    None => f64::NAN,
                },
                tail_sum: xi_terms[2..].iter().sum(),
                xi_terms,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let phi_hs = sobolev(&bump.phi.u0, s);
    let phi_sup = weighted_sup(&bump.phi.u0, s)?;
    let cube_measure = bump.cube(bump.big_n).len() as f64 * bump.phi.lattice().measure();
    let report = InflationReport {
        schema_version: SCHEMA_VERSION,
        params: params.clone(),
        spec: spec.clone(),
        status: if diverged_at.is_some() || solution.is_none() { RunStatus::Diverged } else { RunStatus::Ok },
        ledger,
        families,
        series_sup_l1: acc.ledger.clone(),
        series_ratios: ratios.clone(),
        tail_residual: residual,
        fixed_point_distance,
        i1_norm: sobolev(&split.i1, s),
        i2_norm: sobolev(&split.i2, s),
        sigma1_count: split.sigma1.len(),
        sigma2_count: split.sigma2.len(),
        cube_measure,
        sup_bound_ratio: phi_sup / (2.0 * cube_measure.sqrt() * phi_hs),
        sup_bound_nominal: phi_sup / (2.0 * a.sqrt() * phi_hs),
        base_fl1: pair_norm(&base, &NormSpec::WienerAlgebraPair)?,
    };
    match diverged_at {
        Some(g) => Err(GibqError::SeriesDivergence {
            generation: g + 1,
            ratio: ratios[g],
            report: Box::new(report),
        }),
        None if solution.is_none() => Err(GibqError::NotContracting {
            factor: f64::NAN,
            iterations: 0,
        }),
        None => Ok(report),
    }
}

fn default_n() -> u64 {
    1
}

fn default_families() -> Vec<NormFamily> {
    vec![NormFamily::Sobolev]
}

fn default_max_gen() -> usize {
    8
}

fn default_degree() -> usize {
    DEFAULT_DEGREE
}

fn default_decay() -> f64 {
    0.5
}

/// Sweep configuration; exactly one of `n_list` and `N_list` is given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub k: usize,
    pub s: f64,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub n_list: Option<Vec<u64>>,
    #[serde(default, rename = "N_list")]
    pub big_n_list: Option<Vec<i64>>,
    /// Inflation index paired with every entry of `N_list`.
    #[serde(default = "default_n")]
    pub n: u64,
    #[serde(default = "default_families")]
    pub families: Vec<NormFamily>,
    #[serde(default)]
    pub seed: u64,
    #[serde(rename = "J", default = "default_max_gen")]
    pub max_gen: usize,
    #[serde(default = "default_degree")]
    pub p: usize,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub base_amplitude: f64,
    #[serde(default = "default_decay")]
    pub base_decay: f64,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SweepConfig = serde_json::from_str(text).map_err(|e| GibqError::Config(format!("sweep config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(GibqError::Config(m));
        if self.n_list.is_some() == self.big_n_list.is_some() {
            return bad("exactly one of n_list and N_list must be given".into());
        }
        if self.k < 2 {
            return bad(format!("k must be >= 2, got {}", self.k));
        }
        if !(self.s < 0.0) {
            return bad(format!("s must be negative, got {}", self.s));
        }
        if self.max_gen < 2 {
            return bad(format!("J must be >= 2, got {}", self.max_gen));
        }
        if self.p < 2 {
            return bad(format!("p must be >= 2, got {}", self.p));
        }
        if !(self.base_decay > 0.0) || !self.base_amplitude.is_finite() {
            return bad("base_decay must be positive and base_amplitude finite".into());
        }
        if self.families.is_empty() {
            return bad("families must not be empty".into());
        }
        if let Some(d) = self.delta {
            let ceiling = crate::construction::delta_ceiling(self.s, self.k);
            if !(d > 0.0 && d < ceiling) {
                return bad(format!("delta {d} outside (0, {ceiling})"));
            }
        }
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        self.sigma.unwrap_or(self.s)
    }

    fn run_spec(&self) -> RunSpec {
        RunSpec {
            seed: self.seed,
            base_amplitude: self.base_amplitude,
            base_decay: self.base_decay,
            families: self.families.clone(),
            max_gen: self.max_gen,
            p: self.p,
            method: self.method,
        }
    }

    /// Parameter sets in config order.
    pub fn points(&self) -> Vec<Result<InflationParams>> {
        let sigma = self.sigma();
        match (&self.n_list, &self.big_n_list) {
            (Some(ns), _) => ns.iter().map(|&n| schedule(n, self.k, self.s, sigma, self.delta)).collect(),
            (_, Some(bn)) => bn
                .iter()
                .map(|&big| InflationParams::with_frequency(self.n, self.k, self.s, sigma, self.delta, big))
                .collect(),
            _ => Vec::new(),
        }
    }
}

/// Outcome of one sweep point.
#[derive(Clone, Debug)]
pub enum RunOutcome {
    Completed(InflationReport),
    Failed { params: Option<InflationParams>, message: String },
}

impl RunOutcome {
    pub fn report(&self) -> Option<&InflationReport> {
        match self {
            RunOutcome::Completed(r) => Some(r),
            RunOutcome::Failed { .. } => None,
        }
    }
}

pub struct SweepOutput {
    pub outcomes: Vec<RunOutcome>,
    pub csv: String,
    pub manifest: String,
}

fn run_point(point: Result<InflationParams>, spec: &RunSpec) -> RunOutcome {
    let params = match point {
        Ok(p) => p,
        Err(e) => return RunOutcome::Failed { params: None, message: e.to_string() },
    };
    match run_inflation(&params, spec) {
        Ok(r) => RunOutcome::Completed(r),
        Err(GibqError::SeriesDivergence { report, .. }) => RunOutcome::Completed(*report),
        Err(e) => RunOutcome::Failed {
            params: Some(params),
            message: e.to_string(),
        },
    }
}

fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.12e}")
    }
}

fn csv_escape(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

/// One row per (point, family), points in config order.
pub fn runs_csv(outcomes: &[RunOutcome], families: &[NormFamily]) -> String {
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for (idx, outcome) in outcomes.iter().enumerate() {
        for fam in families {
            let mut row: Vec<String> = Vec::with_capacity(CSV_COLUMNS.len());
            let params = match outcome {
                RunOutcome::Completed(r) => Some(&r.params),
                RunOutcome::Failed { params, .. } => params.as_ref(),
            };
            row.push(idx.to_string());
            match params {
                Some(p) => {
                    row.extend([p.n.to_string(), p.k.to_string(), num(p.s), num(p.sigma), num(p.delta)]);
                    row.extend([p.big_n.to_string(), num(p.r), num(p.t), p.a.to_string()]);
                }
                None => row.extend(std::iter::repeat_n(String::new(), 9)),
            }
            row.push(fam.to_string());
            match outcome {
                RunOutcome::Completed(r) => {
                    let m = r.family(*fam).expect("family measured");
                    let cond = |l: &str| r.ledger.condition(l).map_or(f64::NAN, |c| c.margin);
                    row.push(r.status.to_string());
                    row.extend(
                        [
                            m.perturbation,
                            m.xi1_phi,
                            r.ledger.xi1_lower_ratio,
                            m.solution,
                            m.tail_sum,
                            r.i1_norm,
                            r.i2_norm,
                            ratio(r.i2_norm, r.i1_norm),
                            cond("i"),
                            cond("ii"),
                            cond("iii"),
                            cond("iv"),
                            cond("v"),
                            cond("vi"),
                        ]
                        .map(num),
                    );
                    row.push(r.ledger.all_hold().to_string());
                    row.extend(
                        [
                            r.series_max_ratio(),
                            r.tail_residual,
                            r.fixed_point_distance.unwrap_or(f64::NAN),
                            r.sup_bound_ratio,
                            r.base_fl1,
                        ]
                        .map(num),
                    );
                    row.push(String::new());
                }
                RunOutcome::Failed { message, .. } => {
                    row.push("error".into());
                    row.extend(std::iter::repeat_n(String::new(), CSV_COLUMNS.len() - 13));
                    row.push(csv_escape(message));
                }
            }
            debug_assert_eq!(row.len(), CSV_COLUMNS.len());
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    out
}

/// SHA-256 over `blob <len>\0<bytes>`, hex encoded.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: SweepConfig,
    pub config_hash: String,
    pub runs: usize,
    pub rows: usize,
    pub runs_csv_hash: String,
}

pub fn sweep(config: &SweepConfig) -> Result<SweepOutput> {
    config.validate()?;
    let spec = config.run_spec();
    let outcomes: Vec<RunOutcome> = config
        .points()
        .into_par_iter()
        .map(|point| run_point(point, &spec))
        .collect();
    let csv = runs_csv(&outcomes, &config.families);
    let canonical = serde_json::to_string(config)?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        config_hash: content_hash(canonical.as_bytes()),
        runs: outcomes.len(),
        rows: outcomes.len() * config.families.len(),
        runs_csv_hash: content_hash(csv.as_bytes()),
    };
    Ok(SweepOutput {
        outcomes,
        csv,
        manifest: serde_json::to_string_pretty(&manifest)? + "\n",
    })
}

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| GibqError::Config(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes `runs.csv`, `manifest.json` and `reports.json` into `dir`.
pub fn write_sweep(output: &SweepOutput, dir: &Path) -> Result<()> {
    write_atomic(&dir.join("runs.csv"), output.csv.as_bytes())?;
    write_atomic(&dir.join("manifest.json"), output.manifest.as_bytes())?;
    let reports: Vec<&InflationReport> = output.outcomes.iter().filter_map(RunOutcome::report).collect();
    write_atomic(&dir.join("reports.json"), (serde_json::to_string_pretty(&reports)? + "\n").as_bytes())?;
    Ok(())
}
