//! Seeded Monte Carlo runs over families of projectively real degree-3
//! divisors, with histograms of real member counts and the trichotomy
//! verdict for a (curve type, determinant type) cell.
//!
//! Trial `i` draws from a ChaCha8 stream keyed by `(seed, recipe)` and
//! positioned at stream `i`, so results do not depend on thread count or
//! scheduling. `REAL_SUBBUNDLE_LAB_THREADS` caps the worker pool.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atiyah::{analyze, matches_determinant, OrbitCase};
use crate::curve::{iota, RealHyperellipticCurve, Region, TopologicalType};
use crate::divisors::{CircleBits, Divisor, LineBundleTopType, PointLiteral};
use crate::error::{LabError, Result};
use crate::subbundles::real_fiber_configs;

pub const THREADS_ENV: &str = "REAL_SUBBUNDLE_LAB_THREADS";
/// Nondegenerate trials a cell needs before a verdict is issued.
pub const MIN_NONDEGENERATE: usize = 1000;
/// Example divisors kept per observed count.
pub const EXAMPLES_PER_COUNT: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    /// `A, B, C` on fixed circles, spread by a random admissible assignment.
    AllReal,
    /// `A` on the odd circle, `B` generic, `C = tau(B)`.
    RealPlusConjugatePair,
    /// `A` on the odd circle, `B, C` on anti-real arcs.
    AntirealPair,
    /// `A` on the odd circle, `B` generic, `C = iota(tau(B))`.
    IotaTauPair,
    /// Each trial picks one of the available recipes above.
    UniformProjectivelyReal,
}

impl Recipe {
    pub const ALL: [Recipe; 5] = [
        Recipe::AllReal,
        Recipe::RealPlusConjugatePair,
        Recipe::AntirealPair,
        Recipe::IotaTauPair,
        Recipe::UniformProjectivelyReal,
    ];
    /// Recipes making up the standard battery for a cell.
    pub const BATTERY: [Recipe; 4] = [
        Recipe::AllReal,
        Recipe::RealPlusConjugatePair,
        Recipe::AntirealPair,
        Recipe::IotaTauPair,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Recipe::AllReal => "all_real",
            Recipe::RealPlusConjugatePair => "real_plus_conjugate_pair",
            Recipe::AntirealPair => "antireal_pair",
            Recipe::IotaTauPair => "iota_tau_pair",
            Recipe::UniformProjectivelyReal => "uniform_projectively_real",
        }
    }

    fn salt(self) -> u64 {
        match self {
            Recipe::AllReal => 0x11,
            Recipe::RealPlusConjugatePair => 0x22,
            Recipe::AntirealPair => 0x33,
            Recipe::IotaTauPair => 0x44,
            Recipe::UniformProjectivelyReal => 0x55,
        }
    }

    /// Whether the recipe can produce divisors compatible with `lambda`.
    pub fn check_available(
        self,
        curve: &RealHyperellipticCurve,
        lambda: &LineBundleTopType,
    ) -> Result<()> {
        let unavailable = |reason: &str| {
            Err(LabError::RecipeUnavailable {
                recipe: self.name().into(),
                reason: reason.into(),
            })
        };
        let k = lambda.odd_circles.weight();
        match self {
            Recipe::AllReal => Ok(()),
            Recipe::RealPlusConjugatePair | Recipe::IotaTauPair if k != 1 => {
                unavailable("needs a determinant with exactly one odd circle")
            }
            Recipe::RealPlusConjugatePair | Recipe::IotaTauPair => Ok(()),
            Recipe::AntirealPair if k != 1 => {
                unavailable("needs a determinant with exactly one odd circle")
            }
            Recipe::AntirealPair if curve.antireal_components().is_empty() => {
                unavailable("the curve has no anti-real locus")
            }
            Recipe::AntirealPair => Ok(()),
            Recipe::UniformProjectivelyReal => Ok(()),
        }
    }

    /// Concrete recipes a trial of `self` may draw from.
    pub fn components(
        self,
        curve: &RealHyperellipticCurve,
        lambda: &LineBundleTopType,
    ) -> Vec<Recipe> {
        match self {
            Recipe::UniformProjectivelyReal => Recipe::BATTERY
                .into_iter()
                .filter(|r| r.check_available(curve, lambda).is_ok())
                .collect(),
            r => vec![r],
        }
    }

    /// Draw one divisor; `lambda` is assumed validated.
    fn generate(
        self,
        curve: &RealHyperellipticCurve,
        lambda: &LineBundleTopType,
        rng: &mut ChaCha8Rng,
    ) -> Result<Divisor> {
        let odd = || {
            lambda
                .odd_circles
                .ones()
                .next()
                .expect("degree-1 type has an odd circle")
        };
        let pts = match self {
            Recipe::AllReal => {
                let configs: Vec<_> =
                    real_fiber_configs(lambda.odd_circles.len(), &lambda.odd_circles)?
                        .into_iter()
                        .filter(|a| a.real_points() == 3)
                        .collect();
                let config = &configs[rng.random_range(0..configs.len())];
                config
                    .circles()
                    .into_iter()
                    .map(|c| curve.sample(Region::FixedCircle(c), rng))
                    .collect::<Result<Vec<_>>>()?
            }
            Recipe::RealPlusConjugatePair => {
                let a = curve.sample(Region::FixedCircle(odd()), rng)?;
                let b = curve.sample(Region::Generic, rng)?;
                vec![a, b, curve.tau(&b)]
            }
            Recipe::AntirealPair => {
                let arcs = curve.antireal_components().len();
                let a = curve.sample(Region::FixedCircle(odd()), rng)?;
                let b = curve.sample(Region::AntiReal(rng.random_range(0..arcs)), rng)?;
                let c = curve.sample(Region::AntiReal(rng.random_range(0..arcs)), rng)?;
                vec![a, b, c]
            }
            Recipe::IotaTauPair => {
                let a = curve.sample(Region::FixedCircle(odd()), rng)?;
                let b = curve.sample(Region::Generic, rng)?;
                vec![a, b, iota(&curve.tau(&b))]
            }
            Recipe::UniformProjectivelyReal => unreachable!("resolved through components"),
        };
        Divisor::from_points(curve, &pts)
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Recipe {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        Recipe::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| LabError::Invalid(format!("unknown recipe {s:?}")))
    }
}

/// Why a trial was left out of the histogram.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardReason {
    Degenerate,
    AmbiguousMatch,
    DeterminantMismatch,
    IllConditioned,
    SignatureDisagreement,
}

impl DiscardReason {
    fn name(self) -> &'static str {
        match self {
            DiscardReason::Degenerate => "degenerate",
            DiscardReason::AmbiguousMatch => "ambiguous_match",
            DiscardReason::DeterminantMismatch => "determinant_mismatch",
            DiscardReason::IllConditioned => "ill_conditioned",
            DiscardReason::SignatureDisagreement => "signature_disagreement",
        }
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub recipe: Recipe,
    pub count: Option<usize>,
    pub flags: String,
    pub signature: String,
}

#[derive(Clone, Debug)]
struct Trial {
    record: TrialRecord,
    discard: Option<DiscardReason>,
    projectively_real: bool,
    divisor: Divisor,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurveyResult {
    pub recipe: Recipe,
    pub lambda: CircleBits,
    pub seed: u64,
    pub trial_count: usize,
    /// Real member count to frequency, nondegenerate trials only.
    pub histogram: BTreeMap<usize, usize>,
    pub degenerate_discard_count: usize,
    pub discards: BTreeMap<DiscardReason, usize>,
    /// Trials whose divisor failed the projectively-real test.
    pub not_projectively_real: usize,
    pub examples: BTreeMap<usize, Vec<Vec<PointLiteral>>>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

impl SurveyResult {
    pub fn nondegenerate(&self) -> usize {
        self.histogram.values().sum()
    }

    pub fn support(&self) -> Vec<usize> {
        self.histogram.keys().copied().collect()
    }

    /// CSV with columns `trial, recipe, count, flags, signature`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r)
                .map_err(|e| LabError::Invalid(e.to_string()))?;
        }
        w.flush().map_err(|e| LabError::Invalid(e.to_string()))
    }
}

pub fn validate_lambda(curve: &RealHyperellipticCurve, lambda: &LineBundleTopType) -> Result<()> {
    let n = curve.fixed_circles().len();
    if n == 0 {
        return Err(LabError::EmptyRealLocus);
    }
    if lambda.odd_circles.len() != n {
        return Err(LabError::SignatureLength {
            expected: n,
            got: lambda.odd_circles.len(),
        });
    }
    if lambda.degree != 1 || !lambda.is_consistent() {
        return Err(LabError::BadParity);
    }
    Ok(())
}

fn thread_pool() -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        builder = builder.num_threads(n.max(1));
    }
    builder.build().expect("thread pool")
}

fn trial_rng(seed: u64, recipe: Recipe, index: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&recipe.salt().to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index as u64);
    rng
}

fn run_trial(
    curve: &RealHyperellipticCurve,
    lambda: &LineBundleTopType,
    recipe: Recipe,
    components: &[Recipe],
    seed: u64,
    index: usize,
) -> Result<Trial> {
    let mut rng = trial_rng(seed, recipe, index);
    let chosen = components[rng.random_range(0..components.len())];
    let divisor = chosen.generate(curve, lambda, &mut rng)?;
    let record = |count, flags: String, signature: String| TrialRecord {
        trial: index,
        recipe: chosen,
        count,
        flags,
        signature,
    };
    let discard = |reason: DiscardReason, divisor: Divisor| Trial {
        record: record(None, reason.name().into(), String::new()),
        discard: Some(reason),
        projectively_real: false,
        divisor,
    };
    let report = match analyze(curve, &divisor) {
        Ok(r) => r,
        Err(LabError::AmbiguousMatch) => {
            return Ok(discard(DiscardReason::AmbiguousMatch, divisor))
        }
        Err(LabError::IllConditioned { .. }) => {
            return Ok(discard(DiscardReason::IllConditioned, divisor))
        }
        Err(LabError::SignatureDisagreement) => {
            return Ok(discard(DiscardReason::SignatureDisagreement, divisor))
        }
        Err(e) => return Err(e),
    };
    let flags = report
        .degeneracy_flags
        .iter()
        .map(|f| {
            serde_json::to_value(f)
                .expect("flag")
                .as_str()
                .expect("string")
                .to_owned()
        })
        .collect::<Vec<_>>()
        .join("|");
    if report.is_degenerate() {
        let mut t = discard(DiscardReason::Degenerate, divisor);
        t.record.flags = flags;
        return Ok(t);
    }
    let compatible = if report.case_label == OrbitCase::RealBase {
        matches_determinant(curve, &divisor, lambda)?
    } else {
        report
            .common_signature
            .as_ref()
            .is_none_or(|s| s.odd_circles == lambda.odd_circles)
    };
    if !compatible {
        return Ok(discard(DiscardReason::DeterminantMismatch, divisor));
    }
    let signature = report
        .signature_bits()
        .map(|b| b.to_string())
        .unwrap_or_default();
    Ok(Trial {
        record: record(Some(report.real_member_count), flags, signature),
        discard: None,
        projectively_real: report.projectively_real,
        divisor,
    })
}

pub fn run_survey(
    curve: &RealHyperellipticCurve,
    lambda: &LineBundleTopType,
    recipe: Recipe,
    trials: usize,
    seed: u64,
) -> Result<SurveyResult> {
    validate_lambda(curve, lambda)?;
    if trials == 0 {
        return Err(LabError::Invalid("at least one trial is required".into()));
    }
    recipe.check_available(curve, lambda)?;
    let components = recipe.components(curve, lambda);
    let outcomes: Vec<Trial> = thread_pool().install(|| {
        (0..trials)
            .into_par_iter()
            .map(|i| run_trial(curve, lambda, recipe, &components, seed, i))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut histogram = BTreeMap::new();
    let mut discards = BTreeMap::new();
    let mut examples: BTreeMap<usize, Vec<Vec<PointLiteral>>> = BTreeMap::new();
    let mut not_projectively_real = 0;
    let mut records = Vec::with_capacity(trials);
    for t in outcomes {
        match (t.discard, t.record.count) {
            (Some(reason), _) => *discards.entry(reason).or_insert(0) += 1,
            (None, Some(count)) => {
                *histogram.entry(count).or_insert(0) += 1;
                let kept = examples.entry(count).or_default();
                if kept.len() < EXAMPLES_PER_COUNT {
                    kept.push(t.divisor.to_literal());
                }
                if !t.projectively_real {
                    not_projectively_real += 1;
                }
            }
            (None, None) => unreachable!("counted trials carry a count"),
        }
        records.push(t.record);
    }
    if histogram.is_empty() {
        return Err(LabError::AllTrialsDegenerate(trials));
    }
    let mut notes = Vec::new();
    if histogram.contains_key(&0) {
        notes.push(
            "count-0 orbits carry no real divisor; they are keyed by recipe and the determinant type is \
             checked at the divisor level only"
                .into(),
        );
    }
    Ok(SurveyResult {
        recipe,
        lambda: lambda.odd_circles.clone(),
        seed,
        trial_count: trials,
        histogram,
        degenerate_discard_count: discards.values().sum(),
        discards,
        not_projectively_real,
        examples,
        notes,
        records,
    })
}

/// Runs every available battery recipe with `trials_per_recipe` trials.
pub fn run_battery(
    curve: &RealHyperellipticCurve,
    lambda: &LineBundleTopType,
    trials_per_recipe: usize,
    seed: u64,
) -> Result<Vec<SurveyResult>> {
    validate_lambda(curve, lambda)?;
    Recipe::BATTERY
        .into_iter()
        .filter(|r| r.check_available(curve, lambda).is_ok())
        .map(|r| run_survey(curve, lambda, r, trials_per_recipe, seed))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    /// Counts exactly `{2, 4}`.
    Case1,
    /// Counts exactly `{4}`.
    Case2,
    /// Counts exactly `{0, 2, 4}`.
    Case3,
    Violation,
}

impl Case {
    pub fn expected(curve_type: &TopologicalType, lambda: &LineBundleTopType) -> Case {
        let k = lambda.odd_circles.weight();
        if k == 3 {
            Case::Case2
        } else if (curve_type.n, curve_type.a) == (1, 0) {
            Case::Case1
        } else {
            Case::Case3
        }
    }

    fn from_support(support: &[usize]) -> Case {
        match support {
            [2, 4] => Case::Case1,
            [4] => Case::Case2,
            [0, 2, 4] => Case::Case3,
            _ => Case::Violation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrichotomyVerdict {
    pub curve_type: TopologicalType,
    pub lambda: CircleBits,
    pub expected: Case,
    pub observed: Case,
    pub verdict: Case,
    pub support: Vec<usize>,
    pub histogram: BTreeMap<usize, usize>,
    pub nondegenerate: usize,
    pub signature_disagreements: usize,
    /// Example divisors whose count falls outside the expected support.
    pub offending: Vec<Vec<PointLiteral>>,
}

impl TrichotomyVerdict {
    pub fn is_violation(&self) -> bool {
        self.verdict == Case::Violation
    }
}

pub fn trichotomy_verdict(
    curve_type: &TopologicalType,
    lambda: &LineBundleTopType,
    results: &[SurveyResult],
) -> Result<TrichotomyVerdict> {
    let mut histogram = BTreeMap::new();
    let mut disagreements = 0;
    for r in results {
        for (&count, &freq) in &r.histogram {
            *histogram.entry(count).or_insert(0) += freq;
        }
        disagreements += r
            .discards
            .get(&DiscardReason::SignatureDisagreement)
            .copied()
            .unwrap_or(0);
    }
    let nondegenerate: usize = histogram.values().sum();
    if nondegenerate < MIN_NONDEGENERATE {
        return Err(LabError::InsufficientData {
            got: nondegenerate as u64,
            needed: MIN_NONDEGENERATE as u64,
        });
    }
    let support: Vec<usize> = histogram.keys().copied().collect();
    let expected = Case::expected(curve_type, lambda);
    let observed = Case::from_support(&support);
    let verdict = if observed == expected && disagreements == 0 {
        observed
    } else {
        Case::Violation
    };
    let allowed: &[usize] = match expected {
        Case::Case1 => &[2, 4],
        Case::Case2 => &[4],
        _ => &[0, 2, 4],
    };
    let offending = results
        .iter()
        .flat_map(|r| r.examples.iter())
        .filter(|(count, _)| !allowed.contains(count))
        .flat_map(|(_, ex)| ex.iter().cloned())
        .collect();
    Ok(TrichotomyVerdict {
        curve_type: *curve_type,
        lambda: lambda.odd_circles.clone(),
        expected,
        observed,
        verdict,
        support,
        histogram,
        nondegenerate,
        signature_disagreements: disagreements,
        offending,
    })
}
