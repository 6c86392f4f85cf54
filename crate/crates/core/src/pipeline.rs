//! End-to-end experiment: W-trick, large spectrum, Bohr smoothing, the
//! progression operator before and after smoothing, the L^{2k} table, level
//! sets and the final-inequality ledger. Sweeps reuse the prepared `a`.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bohr::{build_bohr_set, parse_decimal, smooth, BohrSet};
use crate::bounds::{
    choose_k, density_bound_table, dual_exponent, epsilon_delta_constraint, level_set_extract, prop32_lower_bound,
    sanders_lower_bound, ConstraintCheck, DensityTable, LevelSet,
};
use crate::error::{invalid, LabError, Result};
use crate::formats::read_integer_set;
use crate::prime_engine::{sieve_primes, PrimeTable};
use crate::sieve_bounds::prop21_bound;
use crate::threeap::{lambda_fourier, trivial_mass};
use crate::wtrick::{build_sieved_function, choose_residue, compute_parameters, WParameters, WTrickReport};
use crate::zp_fourier::{convolve, CyclicFunction};
use crate::Radius;

pub const SCHEMA: &str = "ap3lab-report/1";

/// Largest pipeline modulus P.
pub const DEFAULT_FFT_BUDGET: u64 = 1 << 23;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetSource {
    #[default]
    AllPrimes,
    File(PathBuf),
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    #[serde(rename = "C4", default = "one")]
    pub c4: f64,
    #[serde(default = "one")]
    pub c_sanders: f64,
    #[serde(default = "one")]
    pub c1: f64,
    #[serde(default = "one")]
    pub eta: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c4: 1.0,
            c_sanders: 1.0,
            c1: 1.0,
            eta: 1.0,
        }
    }
}

fn default_delta() -> String {
    "0.05".into()
}

fn default_epsilon() -> String {
    "0.1".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(default)]
    pub set_source: SetSource,
    #[serde(default)]
    pub z_override: Option<f64>,
    #[serde(default = "default_delta")]
    pub delta: String,
    #[serde(default = "default_epsilon")]
    pub epsilon: String,
    /// Defaults to choose_k(N).
    #[serde(default)]
    pub k: Option<u32>,
    #[serde(default)]
    pub constants: Constants,
    /// Defaults to [k].
    #[serde(default)]
    pub k_grid: Vec<u32>,
    /// Defaults to [delta].
    #[serde(default)]
    pub delta_grid: Vec<String>,
    /// Defaults to [epsilon].
    #[serde(default)]
    pub epsilon_grid: Vec<String>,
    #[serde(default)]
    pub force: bool,
}

impl PipelineConfig {
    pub fn new(n: u64) -> Self {
        PipelineConfig {
            n,
            set_source: SetSource::AllPrimes,
            z_override: None,
            delta: default_delta(),
            epsilon: default_epsilon(),
            k: None,
            constants: Constants::default(),
            k_grid: Vec::new(),
            delta_grid: Vec::new(),
            epsilon_grid: Vec::new(),
            force: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        parse_unit_rational(&self.delta, "delta")?;
        parse_unit_rational(&self.epsilon, "epsilon")?;
        for d in &self.delta_grid {
            parse_unit_rational(d, "delta")?;
        }
        for e in &self.epsilon_grid {
            parse_unit_rational(e, "epsilon")?;
        }
        if self.k == Some(0) || self.k_grid.contains(&0) {
            return invalid("k must be at least 1");
        }
        let c = &self.constants;
        if [c.c4, c.c_sanders, c.c1, c.eta].iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return invalid("constants must be positive and finite");
        }
        Ok(())
    }

    pub fn main_k(&self) -> Result<u32> {
        match self.k {
            Some(k) => Ok(k),
            None => choose_k(self.n),
        }
    }

    fn k_values(&self) -> Result<Vec<u32>> {
        Ok(if self.k_grid.is_empty() { vec![self.main_k()?] } else { self.k_grid.clone() })
    }

    fn grid(&self) -> Vec<(String, String)> {
        let deltas = if self.delta_grid.is_empty() { vec![self.delta.clone()] } else { self.delta_grid.clone() };
        let epsilons = if self.epsilon_grid.is_empty() {
            vec![self.epsilon.clone()]
        } else {
            self.epsilon_grid.clone()
        };
        deltas
            .iter()
            .flat_map(|d| epsilons.iter().map(move |e| (d.clone(), e.clone())))
            .collect()
    }
}

/// Decimal in the open interval (0, 1/2).
fn parse_unit_rational(text: &str, name: &str) -> Result<Radius> {
    let r = parse_decimal(text)?;
    if *r.numer() == 0 || r * 2 >= Radius::from_integer(1) {
        return invalid(format!("{name} must lie in (0, 1/2), got {text}"));
    }
    Ok(r)
}

fn ratio_f64(r: Radius) -> f64 {
    r.to_f64().expect("finite rational")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumStats {
    pub delta: f64,
    /// ||a^||_4^4
    pub fourth_moment: f64,
    /// ||a * a||_2^2, equal to the fourth moment
    pub convolution_l2_squared: f64,
    /// |Spec_delta(a)|
    pub large_spectrum_size: u64,
    /// |Spec_delta(a) u {1}|
    pub r_size: u64,
    /// ||a^||_4^4 delta^{-4}
    pub markov_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BohrStats {
    pub epsilon: f64,
    pub dimension: u64,
    pub size: u64,
    pub measure: f64,
    /// log10(P epsilon^d)
    pub pigeonhole_log10: f64,
    /// log10|B| - log10(P epsilon^d)
    pub pigeonhole_margin_log10: f64,
    pub pigeonhole_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothingStats {
    pub l1_a: f64,
    pub l1_h: f64,
    pub l1_relative_gap: f64,
    pub min_h: f64,
    pub sup_a: f64,
    pub sup_h: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaStats {
    pub lambda_a: f64,
    pub lambda_h: f64,
    /// |lambda_a - lambda_h|
    pub gap: f64,
    /// d = 0 part of lambda_a
    pub trivial_a: f64,
    pub nontrivial_a: f64,
    /// epsilon + delta^{3/5}
    pub error_scale: f64,
    pub gap_ratio: f64,
    /// (1/P) (ln N / ln z)^2
    pub trivial_term: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelSetRow {
    #[serde(flatten)]
    pub set: LevelSet,
    /// Lambda(1_L, 1_L, 1_L)
    pub lambda_indicator: f64,
    /// Sanders bound at xi = mu(L), when mu(L) < 1
    pub sanders: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormRow {
    pub k: u32,
    /// ||h||_{2k}
    pub norm: f64,
    pub prop21_bound: f64,
    pub ratio: f64,
    pub in_range: bool,
    /// Level set {h >= alpha/20} at exponent p = 2k; absent when ||h||_1 < alpha/10.
    pub level_set: Option<LevelSetRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FinalLedger {
    pub k: u32,
    pub q: f64,
    pub trivial_term: f64,
    pub epsilon: f64,
    pub delta_power: f64,
    /// trivial_term + epsilon + delta^{3/5}
    pub lhs: f64,
    /// exp(-c1 (alpha/k)^{-q} (ln 1/alpha)^5); absent for alpha = 1
    pub rhs: Option<f64>,
    /// eta * rhs, the epsilon = delta^{3/5} the argument would choose
    pub epsilon_star: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Flags {
    pub exploratory: bool,
    pub alpha_threshold: bool,
    /// ||a||_1 >= alpha / 10
    pub mass_a: bool,
    /// ||h||_1 >= alpha / 10
    pub mass_h: bool,
    pub markov: bool,
    pub pigeonhole: bool,
    pub smoothing_nonnegative: bool,
    pub smoothing_sup: bool,
    pub bohr_trivial: bool,
    pub constraint: bool,
    pub lambda_zero: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub schema: &'static str,
    pub config: PipelineConfig,
    pub k: u32,
    pub wtrick: WTrickReport,
    pub spectrum: SpectrumStats,
    pub bohr: BohrStats,
    pub smoothing: SmoothingStats,
    pub lambda: LambdaStats,
    pub norms: Vec<NormRow>,
    pub constraint: ConstraintCheck,
    pub final_ledger: FinalLedger,
    pub density: DensityTable,
    pub flags: Flags,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// W-trick output and every delta/epsilon-independent quantity.
pub struct PreparedBase {
    pub config: PipelineConfig,
    pub params: WParameters,
    pub wtrick: WTrickReport,
    pub a: CyclicFunction<f64>,
    pub alpha: f64,
    pub scale: f64,
    pub fourth_moment: f64,
    pub convolution_l2_squared: f64,
    pub lambda_a: f64,
    pub trivial_a: f64,
}

fn load_set(source: &SetSource, n: u64, table: &PrimeTable) -> Result<Vec<u64>> {
    match source {
        SetSource::AllPrimes => Ok(table.primes_up_to(n).collect()),
        SetSource::File(path) => read_integer_set(BufReader::new(File::open(path)?)),
    }
}

pub fn prepare(config: &PipelineConfig) -> Result<PreparedBase> {
    prepare_with_budget(config, DEFAULT_FFT_BUDGET)
}

pub fn prepare_with_budget(config: &PipelineConfig, fft_budget: u64) -> Result<PreparedBase> {
    config.validate()?;
    let params = compute_parameters(config.n, config.z_override)?;
    if params.p > fft_budget {
        return Err(LabError::ResourceLimit(format!(
            "P = {} exceeds the transform budget {fft_budget}",
            params.p
        )));
    }
    let table = sieve_primes(config.n)?;
    let set = load_set(&config.set_source, config.n, &table)?;
    let choice = choose_residue(&set, params.w)?;
    let sieved = build_sieved_function::<f64>(&set, &params, choice.b, table.prime_count(config.n)?)?;
    let wtrick = sieved.report(&params, &choice);
    let a = sieved.a;
    let fourth_moment = a.spectrum().fourth_moment();
    let convolution_l2_squared = convolve(&a, &a)?.moment(2);
    let lambda_a = lambda_fourier(&a, &a, &a)?;
    let trivial_a = trivial_mass(&a, &a, &a)?;
    Ok(PreparedBase {
        config: config.clone(),
        params,
        wtrick,
        alpha: sieved.alpha,
        scale: sieved.context.scale,
        a,
        fourth_moment,
        convolution_l2_squared,
        lambda_a,
        trivial_a,
    })
}

/// Everything that depends on one (delta, epsilon) point.
struct Smoothed {
    delta: f64,
    epsilon: f64,
    spectrum: SpectrumStats,
    bohr: BohrSet,
    h: CyclicFunction<f64>,
    lambda: LambdaStats,
}

impl PreparedBase {
    pub fn modulus(&self) -> u64 {
        self.a.modulus()
    }

    fn smooth_at(&self, delta_text: &str, epsilon_text: &str) -> Result<Smoothed> {
        let delta_r = parse_unit_rational(delta_text, "delta")?;
        let epsilon_r = parse_unit_rational(epsilon_text, "epsilon")?;
        let (delta, epsilon) = (ratio_f64(delta_r), ratio_f64(epsilon_r));
        let spec = self.a.spectrum();
        let large = spec.large_spectrum(delta)?;
        let r = spec.threshold_spectrum(delta)?;
        let spectrum = SpectrumStats {
            delta,
            fourth_moment: self.fourth_moment,
            convolution_l2_squared: self.convolution_l2_squared,
            large_spectrum_size: large.len() as u64,
            r_size: r.len() as u64,
            markov_bound: self.fourth_moment * delta.powi(-4),
        };
        let bohr = build_bohr_set(self.modulus(), &r, epsilon_r)?;
        let h = if bohr.size() == 1 { self.a.clone() } else { smooth(&self.a, &bohr)? };
        let lambda_h = lambda_fourier(&h, &h, &h)?;
        let error_scale = epsilon + delta.powf(0.6);
        let gap = (self.lambda_a - lambda_h).abs();
        let lambda = LambdaStats {
            lambda_a: self.lambda_a,
            lambda_h,
            gap,
            trivial_a: self.trivial_a,
            nontrivial_a: self.lambda_a - self.trivial_a,
            error_scale,
            gap_ratio: gap / error_scale,
            trivial_term: self.scale * self.scale / self.modulus() as f64,
        };
        Ok(Smoothed {
            delta,
            epsilon,
            spectrum,
            bohr,
            h,
            lambda,
        })
    }

    fn norm_row(&self, s: &Smoothed, k: u32) -> Result<NormRow> {
        let p = 2.0 * k as f64;
        let norm = s.h.lp_norm(p)?;
        let bound = prop21_bound(k, self.config.n as f64, self.params.z, s.bohr.size(), true)?;
        let level_alpha = self.alpha / 10.0;
        let level_set = if s.h.mean() >= level_alpha {
            let set = level_set_extract(&s.h, level_alpha, p)?;
            let indicator = CyclicFunction::<f64>::indicator(self.modulus(), &set.members)?;
            let lambda_indicator = lambda_fourier(&indicator, &indicator, &indicator)?;
            let sanders = (set.measure > 0.0 && set.measure < 1.0)
                .then(|| sanders_lower_bound(set.measure, self.config.constants.c_sanders))
                .transpose()?;
            Some(LevelSetRow {
                set,
                lambda_indicator,
                sanders,
            })
        } else {
            None
        };
        Ok(NormRow {
            k,
            norm,
            prop21_bound: bound.value,
            ratio: norm / bound.value,
            in_range: bound.in_range,
            level_set,
        })
    }

    /// Full report at the configured delta and epsilon.
    pub fn report(&self) -> Result<ExperimentReport> {
        let cfg = &self.config;
        let k = cfg.main_k()?;
        let s = self.smooth_at(&cfg.delta, &cfg.epsilon)?;
        let norms = cfg
            .k_values()?
            .into_iter()
            .map(|k| self.norm_row(&s, k))
            .collect::<Result<Vec<_>>>()?;
        let constraint = epsilon_delta_constraint(s.delta, s.epsilon, cfg.n, cfg.constants.c4)?;
        let rhs = (self.alpha < 1.0)
            .then(|| prop32_lower_bound(self.alpha, k, cfg.constants.c1))
            .transpose()?;
        let final_ledger = FinalLedger {
            k,
            q: dual_exponent(k),
            trivial_term: s.lambda.trivial_term,
            epsilon: s.epsilon,
            delta_power: s.delta.powf(0.6),
            lhs: s.lambda.trivial_term + s.lambda.error_scale,
            rhs,
            epsilon_star: rhs.map(|r| cfg.constants.eta * r),
        };
        let l1_a = self.a.mean();
        let l1_h = s.h.mean();
        let smoothing = SmoothingStats {
            l1_a,
            l1_h,
            l1_relative_gap: (l1_h - l1_a).abs() / l1_a,
            min_h: s.h.min_value(),
            sup_a: self.a.sup_norm(),
            sup_h: s.h.sup_norm(),
        };
        let bohr = bohr_stats(&s.bohr, s.epsilon);
        let flags = Flags {
            exploratory: cfg.force || norms.iter().any(|r| !r.in_range),
            alpha_threshold: self.wtrick.bounds_hold.alpha_threshold,
            mass_a: self.wtrick.bounds_hold.mass,
            mass_h: l1_h >= self.alpha / 10.0,
            markov: s.spectrum.large_spectrum_size as f64 <= s.spectrum.markov_bound,
            pigeonhole: bohr.pigeonhole_holds,
            smoothing_nonnegative: smoothing.min_h >= 0.0,
            smoothing_sup: smoothing.sup_h <= smoothing.sup_a,
            bohr_trivial: bohr.size == 1,
            constraint: constraint.holds,
            lambda_zero: self.lambda_a == 0.0,
        };
        Ok(ExperimentReport {
            schema: SCHEMA,
            config: cfg.clone(),
            k,
            wtrick: self.wtrick.clone(),
            spectrum: s.spectrum,
            bohr,
            smoothing,
            lambda: s.lambda,
            norms,
            constraint,
            final_ledger,
            density: density_bound_table(cfg.n),
            flags,
        })
    }

    /// One row per k in the grid, at the configured delta and epsilon.
    pub fn norm_sweep(&self) -> Result<Vec<NormSweepRow>> {
        let cfg = &self.config;
        let s = self.smooth_at(&cfg.delta, &cfg.epsilon)?;
        let ks = cfg.k_values()?;
        let rows = ks
            .par_iter()
            .map(|&k| self.norm_row(&s, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(rows
            .into_iter()
            .map(|r| NormSweepRow {
                delta: s.delta,
                epsilon: s.epsilon,
                bohr_size: s.bohr.size(),
                k: r.k,
                norm: r.norm,
                prop21_bound: r.prop21_bound,
                ratio: r.ratio,
                in_range: r.in_range,
                level_set_measure: r.level_set.as_ref().map(|l| l.set.measure),
                holder_bound: r.level_set.as_ref().map(|l| l.set.bound),
                holder_margin: r.level_set.as_ref().map(|l| l.set.margin),
            })
            .collect())
    }

    /// One row per (delta, epsilon), delta-major in grid order.
    pub fn delta_sweep(&self) -> Result<Vec<DeltaSweepRow>> {
        let cfg = &self.config;
        self.config
            .grid()
            .par_iter()
            .map(|(d, e)| {
                let s = self.smooth_at(d, e)?;
                let c = epsilon_delta_constraint(s.delta, s.epsilon, cfg.n, cfg.constants.c4)?;
                Ok(DeltaSweepRow {
                    delta: s.delta,
                    epsilon: s.epsilon,
                    large_spectrum_size: s.spectrum.large_spectrum_size,
                    r_size: s.spectrum.r_size,
                    bohr_size: s.bohr.size(),
                    lambda_a: s.lambda.lambda_a,
                    lambda_h: s.lambda.lambda_h,
                    gap: s.lambda.gap,
                    error_scale: s.lambda.error_scale,
                    gap_ratio: s.lambda.gap_ratio,
                    constraint_lhs: c.lhs,
                    constraint_slack: c.slack,
                    constraint_holds: c.holds,
                    lambda_zero: s.lambda.lambda_a == 0.0,
                })
            })
            .collect()
    }
}

fn bohr_stats(b: &BohrSet, epsilon: f64) -> BohrStats {
    let pigeonhole_log10 = b.pigeonhole_log10();
    BohrStats {
        epsilon,
        dimension: b.frequencies().len() as u64,
        size: b.size(),
        measure: b.measure(),
        pigeonhole_log10,
        pigeonhole_margin_log10: (b.size() as f64).log10() - pigeonhole_log10,
        pigeonhole_holds: b.pigeonhole_holds(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormSweepRow {
    pub delta: f64,
    pub epsilon: f64,
    pub bohr_size: u64,
    pub k: u32,
    pub norm: f64,
    pub prop21_bound: f64,
    pub ratio: f64,
    pub in_range: bool,
    pub level_set_measure: Option<f64>,
    pub holder_bound: Option<f64>,
    pub holder_margin: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaSweepRow {
    pub delta: f64,
    pub epsilon: f64,
    pub large_spectrum_size: u64,
    pub r_size: u64,
    pub bohr_size: u64,
    pub lambda_a: f64,
    pub lambda_h: f64,
    pub gap: f64,
    pub error_scale: f64,
    pub gap_ratio: f64,
    pub constraint_lhs: f64,
    pub constraint_slack: f64,
    pub constraint_holds: bool,
    pub lambda_zero: bool,
}

pub fn run_pipeline(config: &PipelineConfig) -> Result<ExperimentReport> {
    prepare(config)?.report()
}

pub fn norm_sweep(config: &PipelineConfig) -> Result<Vec<NormSweepRow>> {
    prepare(config)?.norm_sweep()
}

pub fn delta_sweep(config: &PipelineConfig) -> Result<Vec<DeltaSweepRow>> {
    prepare(config)?.delta_sweep()
}

/// RFC 4180 CSV with a header row taken from the field names.
pub fn write_csv<R: Serialize>(out: impl Write, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
