//! Mamdani air-quality classifier and the crisp threshold baseline.
//!
//! Inference uses min for AND and implication, max for aggregation and a
//! discrete centroid over uniform samples of the [0, 100] pollution index.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{apply_noise, Channel, NoiseConfig, SensorFrame};

/// Output universe of the pollution index.
pub const OUTPUT_MIN: f64 = 0.0;
pub const OUTPUT_MAX: f64 = 100.0;

const DEFAULT_CONFIG: &str = include_str!("../data/default-fuzzy.toml");

#[derive(Debug, Error, PartialEq)]
pub enum FuzzyError {
    #[error("no rule fired; the aggregate output is zero everywhere")]
    NoRuleFired,
    #[error("aggregate needs at least 2 samples")]
    TooFewSamples,
    #[error("invalid fuzzy config: {0}")]
    Config(String),
    #[error("experiment needs at least 100 trials, got {0}")]
    TooFewTrials(usize),
}

/// Piecewise-linear membership function. Serialized as its breakpoints:
/// three for a triangle, four for a trapezoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub enum MembershipFunction {
    Triangular { l: f64, m: f64, r: f64 },
    Trapezoidal { l: f64, m1: f64, m2: f64, r: f64 },
}

impl TryFrom<Vec<f64>> for MembershipFunction {
    type Error = String;

    fn try_from(v: Vec<f64>) -> Result<Self, String> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err("membership breakpoints must be finite".into());
        }
        if v.windows(2).any(|w| w[1] < w[0]) {
            return Err(format!("membership breakpoints must be non-decreasing: {v:?}"));
        }
        match v[..] {
            [l, m, r] => Ok(Self::Triangular { l, m, r }),
            [l, m1, m2, r] => Ok(Self::Trapezoidal { l, m1, m2, r }),
            _ => Err(format!("membership function needs 3 or 4 breakpoints, got {}", v.len())),
        }
    }
}

impl From<MembershipFunction> for Vec<f64> {
    fn from(mf: MembershipFunction) -> Self {
        match mf {
            MembershipFunction::Triangular { l, m, r } => vec![l, m, r],
            MembershipFunction::Trapezoidal { l, m1, m2, r } => vec![l, m1, m2, r],
        }
    }
}

impl MembershipFunction {
    pub fn tri(l: f64, m: f64, r: f64) -> Self {
        Self::Triangular { l, m, r }
    }

    pub fn trap(l: f64, m1: f64, m2: f64, r: f64) -> Self {
        Self::Trapezoidal { l, m1, m2, r }
    }

    fn corners(&self) -> (f64, f64, f64, f64) {
        match *self {
            Self::Triangular { l, m, r } => (l, m, m, r),
            Self::Trapezoidal { l, m1, m2, r } => (l, m1, m2, r),
        }
    }

    pub fn degree(&self, x: f64) -> f64 {
        let (l, m1, m2, r) = self.corners();
        if x < l || x > r {
            0.0
        } else if x >= m1 && x <= m2 {
            1.0
        } else if x < m1 {
            (x - l) / (m1 - l)
        } else {
            (r - x) / (r - m2)
        }
    }

    pub fn support(&self) -> (f64, f64) {
        let (l, _, _, r) = self.corners();
        (l, r)
    }

    /// Where the falling edge crosses 0.5.
    pub fn falling_half(&self) -> f64 {
        let (_, _, m2, r) = self.corners();
        0.5 * (m2 + r)
    }

    /// Where the rising edge crosses 0.5.
    pub fn rising_half(&self) -> f64 {
        let (l, m1, _, _) = self.corners();
        0.5 * (l + m1)
    }
}

pub fn membership(x: f64, mf: &MembershipFunction) -> f64 {
    mf.degree(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputVar {
    Voc,
    Co2,
    Smoke,
    Temperature,
    Humidity,
}

impl InputVar {
    pub const ALL: [InputVar; 5] =
        [InputVar::Voc, InputVar::Co2, InputVar::Smoke, InputVar::Temperature, InputVar::Humidity];

    pub fn channel(self) -> Channel {
        match self {
            InputVar::Voc => Channel::Voc,
            InputVar::Co2 => Channel::Co2,
            InputVar::Smoke => Channel::Smoke,
            InputVar::Temperature => Channel::Temperature,
            InputVar::Humidity => Channel::Humidity,
        }
    }

    pub fn read(self, f: &SensorFrame) -> f64 {
        match self {
            InputVar::Voc => f.voc,
            InputVar::Co2 => f.co2,
            InputVar::Smoke => f.smoke,
            InputVar::Temperature => f.temperature,
            InputVar::Humidity => f.humidity,
        }
    }

    pub fn write(self, f: &mut SensorFrame, v: f64) {
        match self {
            InputVar::Voc => f.voc = v,
            InputVar::Co2 => f.co2 = v,
            InputVar::Smoke => f.smoke = v,
            InputVar::Temperature => f.temperature = v,
            InputVar::Humidity => f.humidity = v,
        }
    }

    pub fn name(self) -> &'static str {
        self.channel().name()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputTerm {
    Low,
    Medium,
    High,
}

/// Output labels, ordered by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IaqClass {
    #[serde(alias = "good")]
    Good,
    #[serde(alias = "moderate")]
    Moderate,
    #[serde(alias = "poor")]
    Poor,
}

impl IaqClass {
    pub const ALL: [IaqClass; 3] = [IaqClass::Good, IaqClass::Moderate, IaqClass::Poor];

    /// Band of the pollution index containing `score`; lower bounds inclusive.
    pub fn from_score(score: f64) -> Self {
        if score < 100.0 / 3.0 {
            IaqClass::Good
        } else if score < 200.0 / 3.0 {
            IaqClass::Moderate
        } else {
            IaqClass::Poor
        }
    }
}

impl fmt::Display for IaqClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputTerms {
    pub low: MembershipFunction,
    pub medium: MembershipFunction,
    pub high: MembershipFunction,
}

impl InputTerms {
    pub fn get(&self, t: InputTerm) -> &MembershipFunction {
        match t {
            InputTerm::Low => &self.low,
            InputTerm::Medium => &self.medium,
            InputTerm::High => &self.high,
        }
    }

    /// Smallest interval covering every term's support.
    pub fn universe(&self) -> (f64, f64) {
        [self.low, self.medium, self.high]
            .iter()
            .map(|m| m.support())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |a, s| (a.0.min(s.0), a.1.max(s.1)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputTerms {
    pub good: MembershipFunction,
    pub moderate: MembershipFunction,
    pub poor: MembershipFunction,
}

impl OutputTerms {
    pub fn get(&self, c: IaqClass) -> &MembershipFunction {
        match c {
            IaqClass::Good => &self.good,
            IaqClass::Moderate => &self.moderate,
            IaqClass::Poor => &self.poor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    /// Antecedents joined by AND.
    pub when: BTreeMap<InputVar, InputTerm>,
    pub then: IaqClass,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyConfig {
    pub inputs: BTreeMap<InputVar, InputTerms>,
    pub output: OutputTerms,
    pub rules: Vec<Rule>,
    #[serde(default = "default_resolution")]
    pub centroid_resolution: usize,
}

fn default_resolution() -> usize {
    1001
}

impl Default for FuzzyConfig {
    fn default() -> Self {
        Self::from_toml(DEFAULT_CONFIG).expect("embedded fuzzy config is valid")
    }
}

impl FuzzyConfig {
    pub fn from_toml(text: &str) -> Result<Self, FuzzyError> {
        let cfg: FuzzyConfig = toml::from_str(text).map_err(|e| FuzzyError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("fuzzy config serializes")
    }

    pub fn validate(&self) -> Result<(), FuzzyError> {
        for v in InputVar::ALL {
            if !self.inputs.contains_key(&v) {
                return Err(FuzzyError::Config(format!("missing input variable {}", v.name())));
            }
        }
        if self.centroid_resolution < 2 {
            return Err(FuzzyError::Config("centroid_resolution must be at least 2".into()));
        }
        for c in IaqClass::ALL {
            let (l, r) = self.output.get(c).support();
            if l < OUTPUT_MIN || r > OUTPUT_MAX {
                return Err(FuzzyError::Config(format!("output term {c} leaves [0, 100]")));
            }
        }
        if self.rules.is_empty() {
            return Err(FuzzyError::Config("rulebase is empty".into()));
        }
        for (i, r) in self.rules.iter().enumerate() {
            if r.when.is_empty() {
                return Err(FuzzyError::Config(format!("rule {i} has no antecedent")));
            }
            if !(0.0..=1.0).contains(&r.weight) {
                return Err(FuzzyError::Config(format!("rule {i} weight must be in [0, 1]")));
            }
        }
        Ok(())
    }

    /// Output sample abscissae.
    pub fn samples(&self) -> impl Iterator<Item = f64> + '_ {
        sample_points(self.centroid_resolution)
    }
}

fn sample_points(n: usize) -> impl Iterator<Item = f64> {
    let step = (OUTPUT_MAX - OUTPUT_MIN) / (n - 1) as f64;
    (0..n).map(move |i| OUTPUT_MIN + i as f64 * step)
}

/// Result of fuzzification and rule evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    /// Aggregated output membership at each sample of [0, 100].
    pub aggregate: Vec<f64>,
    pub rule_strengths: Vec<f64>,
    /// Strongest firing per output term.
    pub term_strengths: BTreeMap<IaqClass, f64>,
    /// Inputs outside their universe, clamped before fuzzification.
    pub clamped: Vec<InputVar>,
}

pub fn infer(frame: &SensorFrame, cfg: &FuzzyConfig) -> Inference {
    let mut clamped = Vec::new();
    let mut values = BTreeMap::new();
    for (&var, terms) in &cfg.inputs {
        let (lo, hi) = terms.universe();
        let raw = var.read(frame);
        let v = raw.clamp(lo, hi);
        if v != raw || raw.is_nan() {
            clamped.push(var);
        }
        values.insert(var, if raw.is_nan() { lo } else { v });
    }
    let rule_strengths: Vec<f64> = cfg
        .rules
        .iter()
        .map(|r| {
            r.when
                .iter()
                .map(|(var, term)| cfg.inputs[var].get(*term).degree(values[var]))
                .fold(1.0, f64::min)
                * r.weight
        })
        .collect();
    let mut term_strengths: BTreeMap<IaqClass, f64> = IaqClass::ALL.iter().map(|&c| (c, 0.0)).collect();
    for (r, s) in cfg.rules.iter().zip(&rule_strengths) {
        let e = term_strengths.get_mut(&r.then).expect("all classes present");
        *e = e.max(*s);
    }
    let aggregate = cfg
        .samples()
        .map(|z| {
            term_strengths
                .iter()
                .map(|(c, s)| s.min(cfg.output.get(*c).degree(z)))
                .fold(0.0, f64::max)
        })
        .collect();
    Inference { aggregate, rule_strengths, term_strengths, clamped }
}

/// Discrete centroid of an aggregate sampled uniformly over [0, 100].
pub fn defuzzify_centroid(aggregate: &[f64]) -> Result<f64, FuzzyError> {
    if aggregate.len() < 2 {
        return Err(FuzzyError::TooFewSamples);
    }
    // moments about the midpoint, pairing mirrored samples so symmetric
    // aggregates land exactly on the centre
    let n = aggregate.len();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let k = (j - i) as f64;
        num += k * (aggregate[j] - aggregate[i]);
        den += aggregate[i] + aggregate[j];
    }
    if n % 2 == 1 {
        den += aggregate[n / 2];
    }
    if !(den > 0.0) {
        return Err(FuzzyError::NoRuleFired);
    }
    let half_step = 0.5 * (OUTPUT_MAX - OUTPUT_MIN) / (n - 1) as f64;
    Ok(0.5 * (OUTPUT_MIN + OUTPUT_MAX) + half_step * num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub crisp_score: f64,
    pub class: IaqClass,
    pub term_strengths: BTreeMap<IaqClass, f64>,
    #[serde(default)]
    pub clamped: Vec<InputVar>,
}

pub fn classify(frame: &SensorFrame, cfg: &FuzzyConfig) -> Result<Classification, FuzzyError> {
    let inf = infer(frame, cfg);
    let crisp_score = defuzzify_centroid(&inf.aggregate)?;
    Ok(Classification {
        crisp_score,
        class: IaqClass::from_score(crisp_score),
        term_strengths: inf.term_strengths,
        clamped: inf.clamped,
    })
}

/// Two cut points per variable: below the first is Good, below the second
/// Moderate, otherwise Poor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrispThresholds(pub BTreeMap<InputVar, (f64, f64)>);

impl CrispThresholds {
    /// Cut points at the 0.5 crossings of each variable's `low` and `high`
    /// terms.
    pub fn from_config(cfg: &FuzzyConfig) -> Self {
        Self(
            cfg.inputs
                .iter()
                .map(|(v, t)| (*v, (t.low.falling_half(), t.high.rising_half())))
                .collect(),
        )
    }

    pub fn get(&self, v: InputVar) -> (f64, f64) {
        self.0[&v]
    }

    pub fn classify_value(&self, v: InputVar, x: f64) -> IaqClass {
        let (t1, t2) = self.get(v);
        if x < t1 {
            IaqClass::Good
        } else if x < t2 {
            IaqClass::Moderate
        } else {
            IaqClass::Poor
        }
    }
}

/// Worst class across variables.
pub fn crisp_classify(frame: &SensorFrame, thresholds: &CrispThresholds) -> IaqClass {
    thresholds
        .0
        .keys()
        .map(|&v| thresholds.classify_value(v, v.read(frame)))
        .max()
        .unwrap_or(IaqClass::Good)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub trials: usize,
    /// Noisy crisp class differs from the clean crisp class.
    pub crisp_error_rate: f64,
    /// Noisy fuzzy class differs from the clean fuzzy class.
    pub fuzzy_error_rate: f64,
    /// Noisy crisp class differs from the clean fuzzy class.
    pub crisp_vs_fuzzy_rate: f64,
    /// Frames where no rule fired and the crisp class stood in.
    pub fallbacks: usize,
}

/// Clean frames near the crisp cut points: each variable sits within
/// ±`width` (relative) of one of its two thresholds, chosen at random.
pub fn boundary_frames<R: Rng + ?Sized>(
    thresholds: &CrispThresholds,
    n: usize,
    width: f64,
    rng: &mut R,
) -> Vec<SensorFrame> {
    (0..n)
        .map(|i| {
            let mut f = SensorFrame {
                timestamp: i as u64,
                voc: 0.0,
                co2: 0.0,
                smoke: 0.0,
                temperature: 0.0,
                humidity: 0.0,
                battery: 12.0,
            };
            for v in InputVar::ALL {
                let (t1, t2) = thresholds.get(v);
                let t = if rng.random_bool(0.5) { t1 } else { t2 };
                let x = t * (1.0 + rng.random_range(-width..=width));
                v.write(&mut f, x);
            }
            f
        })
        .collect()
}

fn fuzzy_or_crisp(frame: &SensorFrame, cfg: &FuzzyConfig, thr: &CrispThresholds) -> (IaqClass, bool) {
    match classify(frame, cfg) {
        Ok(c) => (c.class, false),
        Err(_) => (crisp_classify(frame, thr), true),
    }
}

/// Applies `noise` to the classifier inputs of `frame`.
pub fn noisy_frame<R: Rng + ?Sized>(frame: &SensorFrame, noise: &NoiseConfig, rng: &mut R) -> SensorFrame {
    let mut out = *frame;
    for v in InputVar::ALL {
        let c = v.channel();
        v.write(&mut out, apply_noise(v.read(frame), noise.get(c), c.physical_range(), rng));
    }
    out
}

/// Classifies each clean frame and one noisy re-reading of it, counting how
/// often each classifier's noisy answer departs from its own clean answer.
pub fn evaluate_trials<R: Rng + ?Sized>(
    clean: &[SensorFrame],
    cfg: &FuzzyConfig,
    thresholds: &CrispThresholds,
    noise: &NoiseConfig,
    rng: &mut R,
) -> ExperimentResult {
    let (mut crisp_err, mut fuzzy_err, mut cross_err, mut fallbacks) = (0, 0, 0, 0);
    for f in clean {
        let (truth, fb0) = fuzzy_or_crisp(f, cfg, thresholds);
        let crisp_clean = crisp_classify(f, thresholds);
        let noisy = noisy_frame(f, noise, rng);
        let (fuzzy, fb1) = fuzzy_or_crisp(&noisy, cfg, thresholds);
        let crisp = crisp_classify(&noisy, thresholds);
        fallbacks += fb0 as usize + fb1 as usize;
        crisp_err += (crisp != crisp_clean) as usize;
        fuzzy_err += (fuzzy != truth) as usize;
        cross_err += (crisp != truth) as usize;
    }
    let n = clean.len().max(1) as f64;
    ExperimentResult {
        trials: clean.len(),
        crisp_error_rate: crisp_err as f64 / n,
        fuzzy_error_rate: fuzzy_err as f64 / n,
        crisp_vs_fuzzy_rate: cross_err as f64 / n,
        fallbacks,
    }
}

/// Relative half-width of the boundary-weighted frame distribution.
pub const BOUNDARY_WIDTH: f64 = 0.3;

pub fn robustness_experiment<R: Rng + ?Sized>(
    cfg: &FuzzyConfig,
    thresholds: &CrispThresholds,
    noise: &NoiseConfig,
    n_trials: usize,
    rng: &mut R,
) -> Result<ExperimentResult, FuzzyError> {
    if n_trials < 100 {
        return Err(FuzzyError::TooFewTrials(n_trials));
    }
    let clean = boundary_frames(thresholds, n_trials, BOUNDARY_WIDTH, rng);
    Ok(evaluate_trials(&clean, cfg, thresholds, noise, rng))
}

/// The experiment repeated with noise on one input channel at a time.
pub fn ablation<R: Rng + ?Sized>(
    cfg: &FuzzyConfig,
    thresholds: &CrispThresholds,
    noise: &NoiseConfig,
    n_trials: usize,
    channels: &[InputVar],
    rng: &mut R,
) -> Result<Vec<(InputVar, ExperimentResult)>, FuzzyError> {
    if n_trials < 100 {
        return Err(FuzzyError::TooFewTrials(n_trials));
    }
    let clean = boundary_frames(thresholds, n_trials, BOUNDARY_WIDTH, rng);
    Ok(channels
        .iter()
        .map(|&v| (v, evaluate_trials(&clean, cfg, thresholds, &noise.only(v.channel()), rng)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frame(voc: f64, co2: f64, smoke: f64, temperature: f64, humidity: f64) -> SensorFrame {
        SensorFrame { timestamp: 0, voc, co2, smoke, temperature, humidity, battery: 12.0 }
    }

    fn all_low() -> SensorFrame {
        frame(100.0, 400.0, 20.0, 10.0, 20.0)
    }

    #[test]
    fn membership_examples() {
        let tri = MembershipFunction::tri(600.0, 1000.0, 1400.0);
        assert_eq!(membership(1000.0, &tri), 1.0);
        assert_eq!(membership(800.0, &tri), 0.5);
        assert_eq!(membership(1200.0, &MembershipFunction::trap(0.0, 0.0, 600.0, 1000.0)), 0.0);
        assert_eq!(membership(0.0, &MembershipFunction::trap(0.0, 0.0, 600.0, 1000.0)), 1.0);
        assert_eq!(membership(0.0, &MembershipFunction::tri(0.0, 0.0, 50.0)), 1.0);
    }

    #[test]
    fn default_config_shape() {
        let cfg = FuzzyConfig::default();
        assert_eq!(cfg.rules.len(), 15);
        assert_eq!(cfg.centroid_resolution, 1001);
        assert_eq!(cfg.inputs[&InputVar::Co2].high, MembershipFunction::trap(1000.0, 1400.0, 5000.0, 5000.0));
        assert_eq!(FuzzyConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn crisp_thresholds_from_half_points() {
        let t = CrispThresholds::from_config(&FuzzyConfig::default());
        assert_eq!(t.get(InputVar::Co2), (800.0, 1200.0));
        assert_eq!(t.get(InputVar::Voc), (440.0, 1430.0));
        assert_eq!(t.get(InputVar::Smoke), (100.0, 200.0));
        assert_eq!(t.get(InputVar::Temperature), (20.0, 28.0));
        assert_eq!(t.get(InputVar::Humidity), (35.0, 65.0));
    }

    #[test]
    fn all_low_aggregate_is_good_term() {
        let cfg = FuzzyConfig::default();
        let inf = infer(&all_low(), &cfg);
        for (z, mu) in cfg.samples().zip(&inf.aggregate) {
            assert_eq!(*mu, cfg.output.good.degree(z));
        }
        let c = classify(&all_low(), &cfg).unwrap();
        assert_eq!(c.class, IaqClass::Good);
        assert_abs_diff_eq!(c.crisp_score, 16.6333, epsilon = 1e-4);
    }

    #[test]
    fn all_high_is_poor() {
        let c = classify(&frame(10000.0, 3000.0, 500.0, 40.0, 90.0), &FuzzyConfig::default()).unwrap();
        assert_eq!(c.class, IaqClass::Poor);
    }

    #[test]
    fn single_rule_at_half() {
        let mut cfg = FuzzyConfig::default();
        cfg.rules = vec![Rule {
            when: [(InputVar::Co2, InputTerm::Medium)].into(),
            then: IaqClass::Moderate,
            weight: 1.0,
        }];
        let inf = infer(&frame(0.0, 800.0, 0.0, 0.0, 0.0), &cfg);
        for (z, mu) in cfg.samples().zip(&inf.aggregate) {
            assert_eq!(*mu, cfg.output.moderate.degree(z).min(0.5));
        }
    }

    #[test]
    fn band_edges() {
        assert_eq!(IaqClass::from_score(100.0 / 3.0), IaqClass::Moderate);
        assert_eq!(IaqClass::from_score(33.333), IaqClass::Good);
        assert_eq!(IaqClass::from_score(200.0 / 3.0), IaqClass::Poor);
        assert_eq!(IaqClass::from_score(100.0), IaqClass::Poor);
    }

    #[test]
    fn centroid_shapes() {
        let tri: Vec<f64> = sample_points(1001).map(|z| MembershipFunction::tri(0.0, 50.0, 100.0).degree(z)).collect();
        assert_eq!(defuzzify_centroid(&tri).unwrap(), 50.0);
        for h in [0.1, 0.5, 1.0] {
            let rect: Vec<f64> = sample_points(1001).map(|z| if (20.0..=60.0).contains(&z) { h } else { 0.0 }).collect();
            assert_abs_diff_eq!(defuzzify_centroid(&rect).unwrap(), 40.0, epsilon = 1e-9);
        }
        let clipped: Vec<f64> = sample_points(1001)
            .map(|z| MembershipFunction::tri(0.0, 20.0, 80.0).degree(z).min(0.6))
            .collect();
        assert_abs_diff_eq!(defuzzify_centroid(&clipped).unwrap(), 34.857142857, epsilon = 0.05);
        assert_eq!(defuzzify_centroid(&[0.0; 11]), Err(FuzzyError::NoRuleFired));
        assert_eq!(defuzzify_centroid(&[1.0]), Err(FuzzyError::TooFewSamples));
    }

    #[test]
    fn crisp_examples() {
        let t = CrispThresholds::from_config(&FuzzyConfig::default());
        assert_eq!(crisp_classify(&all_low(), &t), IaqClass::Good);
        let mut f = all_low();
        f.smoke = 250.0;
        assert_eq!(crisp_classify(&f, &t), IaqClass::Poor);
        let mut f = all_low();
        f.co2 = 1000.0;
        assert_eq!(crisp_classify(&f, &t), IaqClass::Moderate);
    }

    #[test]
    fn out_of_universe_is_clamped() {
        let c = classify(&frame(100.0, 9000.0, 20.0, 10.0, 20.0), &FuzzyConfig::default()).unwrap();
        assert_eq!(c.clamped, vec![InputVar::Co2]);
    }

    #[test]
    fn noiseless_experiment_is_error_free() {
        let cfg = FuzzyConfig::default();
        let t = CrispThresholds::from_config(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = robustness_experiment(&cfg, &t, &NoiseConfig::zero(), 200, &mut rng).unwrap();
        assert_eq!(r.fuzzy_error_rate, 0.0);
        assert_eq!(r.crisp_error_rate, 0.0);
        assert_eq!(robustness_experiment(&cfg, &t, &NoiseConfig::zero(), 99, &mut rng), Err(FuzzyError::TooFewTrials(99)));
    }
}
