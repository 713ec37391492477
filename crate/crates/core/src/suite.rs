//! Seeded verification suite: every module contributes a few invariant
//! checks, each reported with a measured value, a tolerance and an anchor
//! naming the statement it exercises.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    hermitian_apply, schatten_p_power, singular_profile, word_trace, ComplexMatrix, StarWord,
};
use crate::binomial::{alpha_count, coefficient_root_report, moment_coefficient};
use crate::corner;
use crate::distribution::{self, SpanMap};
use crate::error::{Error, Result};
use crate::evenp;
use crate::gadget::{self, GadgetKind, VerifyMode};
use crate::reconstruct::{self, PlanTemplate};
use crate::rng::{self, trial_rng, DEFAULT_SEED};

pub const MODULES: [&str; 7] = [
    "core-algebra",
    "gadget-matrices",
    "binomial-combinatorics",
    "moment-reconstruction",
    "star-distribution",
    "corner-norms",
    "even-p-expansion",
];

/// Statement labels a record may cite.
pub const ANCHORS: [&str; 20] = [
    "enonce_lemme_combinatoire",
    "propriete_combinatoire_des_eij",
    "lemme_coeff_binomial_non_nul",
    "egalite_entre_normeP_et_trace_avec_adjoint",
    "lemme_combinatoire",
    "equirepartition",
    "thm_principal",
    "hypothese_p_c.isometrie",
    "norme_de_u-u2",
    "isometrie_preserve_adjoint",
    "dse_psi",
    "equa_diff_de_psi",
    "positivite_psi",
    "def_de_Pm",
    "lemme_somme_de_puiss_a_i",
    "ineg_a_quatre_termes",
    "pour_calculer_norme_2n_de_a",
    "convergence_en_mesure_cas_NC",
    "decomp_de_norme_2m_comme_somme",
    "p=2m_m_isometrie_implique_c.isom",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(Error::Parse(format!("unknown format {other:?} (json|csv)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Overrides keyed by check name.
    pub tolerances: BTreeMap<String, f64>,
    pub p_grid: Vec<f64>,
    /// Size caps keyed by module name.
    pub dim_caps: BTreeMap<String, usize>,
    /// Empty selects every module.
    pub modules: Vec<String>,
    pub trials: usize,
    pub output: OutputConfig,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            tolerances: BTreeMap::new(),
            p_grid: vec![1.0, 1.5, 3.0, std::f64::consts::PI],
            dim_caps: BTreeMap::new(),
            modules: Vec::new(),
            trials: 5,
            output: OutputConfig::default(),
        }
    }
}

fn default_cap(module: &str) -> usize {
    match module {
        "gadget-matrices" => 7,
        "core-algebra" => 4,
        "moment-reconstruction" | "star-distribution" => 2,
        _ => 3,
    }
}

fn max_cap(module: &str) -> usize {
    match module {
        "gadget-matrices" => gadget::EXHAUSTIVE_CAP,
        "moment-reconstruction" | "even-p-expansion" | "star-distribution" => 3,
        _ => 8,
    }
}

impl SuiteConfig {
    /// TOML unless the path ends in `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let cfg = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)?
        } else {
            Self::from_toml(&text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_grid.is_empty() {
            return Err(Error::Parse("p_grid must not be empty".into()));
        }
        if let Some(p) = self.p_grid.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidExponent(*p));
        }
        for (name, tol) in &self.tolerances {
            if !(tol.is_finite() && *tol >= 0.0) {
                return Err(Error::Parse(format!("tolerance for {name} must be a non-negative number")));
            }
        }
        for m in self.modules.iter().chain(self.dim_caps.keys()) {
            if !MODULES.contains(&m.as_str()) {
                return Err(Error::Parse(format!("unknown module {m:?}")));
            }
        }
        for (m, &cap) in &self.dim_caps {
            if cap == 0 || cap > max_cap(m) {
                return Err(Error::Parse(format!("dim cap {cap} for {m} outside 1..={}", max_cap(m))));
            }
        }
        if self.trials == 0 {
            return Err(Error::Parse("trials must be at least 1".into()));
        }
        Ok(())
    }

    pub fn cap(&self, module: &str) -> usize {
        self.dim_caps.get(module).copied().unwrap_or_else(|| default_cap(module))
    }

    fn selected(&self, module: &str) -> bool {
        self.modules.is_empty() || self.modules.iter().any(|m| m == module)
    }
}

/// How the measured value is compared with the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub module: String,
    pub anchor: String,
    pub pass: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub runtime_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDocument {
    pub config: SuiteConfig,
    pub records: Vec<CheckRecord>,
    pub summary: Summary,
}

impl ReportDocument {
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn failing(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.pass)
    }

    /// 0 when every check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        i32::from(!self.all_passed())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "module", "anchor", "pass", "measured", "comparison", "tolerance", "runtime_ms", "error"])
            .expect("in-memory write");
        for r in &self.records {
            let cmp = match r.comparison {
                Comparison::AtMost => "<=",
                Comparison::AtLeast => ">=",
            };
            w.write_record([
                r.name.clone(),
                r.module.clone(),
                r.anchor.clone(),
                r.pass.to_string(),
                format!("{:e}", r.measured),
                cmp.to_string(),
                format!("{:e}", r.tolerance),
                format!("{:.3}", r.runtime_ms),
                r.error.clone().unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }
}

type CheckFn = fn(&SuiteConfig, u64) -> Result<f64>;

struct Check {
    name: &'static str,
    module: &'static str,
    anchor: &'static str,
    tolerance: f64,
    comparison: Comparison,
    run: CheckFn,
}

const fn at_most(name: &'static str, module: &'static str, anchor: &'static str, tolerance: f64, run: CheckFn) -> Check {
    Check {
        name,
        module,
        anchor,
        tolerance,
        comparison: Comparison::AtMost,
        run,
    }
}

const fn at_least(name: &'static str, module: &'static str, anchor: &'static str, tolerance: f64, run: CheckFn) -> Check {
    Check {
        name,
        module,
        anchor,
        tolerance,
        comparison: Comparison::AtLeast,
        run,
    }
}

fn checks() -> Vec<Check> {
    vec![
        at_most("algebra.trace_cyclicity", "core-algebra", "enonce_lemme_combinatoire", 1e-12, trace_cyclicity),
        at_most("algebra.profile_integral", "core-algebra", "convergence_en_mesure_cas_NC", 1e-10, profile_integral),
        at_most("algebra.functional_calculus", "core-algebra", "convergence_en_mesure_cas_NC", 1e-10, functional_calculus),
        at_most("gadget.full_cycle", "gadget-matrices", "propriete_combinatoire_des_eij", 1e-9, gadget_full),
        at_most("gadget.compact", "gadget-matrices", "propriete_combinatoire_des_eij", 1e-9, gadget_compact),
        at_most("binomial.closed_forms", "binomial-combinatorics", "egalite_entre_normeP_et_trace_avec_adjoint", 1e-12, closed_forms),
        at_most("binomial.root_reports", "binomial-combinatorics", "lemme_coeff_binomial_non_nul", 1e-8, root_reports),
        at_least("binomial.nonvanishing", "binomial-combinatorics", "lemme_coeff_binomial_non_nul", 1e-12, nonvanishing),
        at_most("reconstruct.gram_lemma", "moment-reconstruction", "lemme_combinatoire", 1e-9, gram_lemma),
        at_most("reconstruct.moments", "moment-reconstruction", "egalite_entre_normeP_et_trace_avec_adjoint", 1e-4, reconstruct_moments),
        at_most("distribution.conjugation_tables", "star-distribution", "equirepartition", 1e-10, conjugation_tables),
        at_most("distribution.reconstructed_tables", "star-distribution", "thm_principal", 5e-4, reconstructed_tables),
        at_most("distribution.transposition_level1", "star-distribution", "hypothese_p_c.isometrie", 1e-10, transposition_level1),
        at_least("distribution.transposition_level2", "star-distribution", "hypothese_p_c.isometrie", 1e-3, transposition_level2),
        at_most("distribution.multiplicativity", "star-distribution", "norme_de_u-u2", 1e-8, multiplicativity),
        at_most("distribution.adjoint", "star-distribution", "isometrie_preserve_adjoint", 1e-8, adjoint),
        at_most("corner.psi_ode", "corner-norms", "equa_diff_de_psi", 1e-7, psi_ode),
        at_most("corner.psi_series", "corner-norms", "dse_psi", 1e-10, psi_series_agreement),
        at_most("corner.psi_sign", "corner-norms", "positivite_psi", 1e-12, psi_sign),
        at_most("corner.cycle_polynomial", "corner-norms", "def_de_Pm", 1e-8, cycle_polynomial),
        at_most("corner.sum_of_powers", "corner-norms", "lemme_somme_de_puiss_a_i", 1e-9, sum_of_powers),
        at_most("corner.four_term", "corner-norms", "ineg_a_quatre_termes", 1e-10, four_term),
        at_most("corner.even_norm_recovery", "corner-norms", "pour_calculer_norme_2n_de_a", 1e-3, even_norm_recovery),
        at_most("corner.truncation_ratio", "corner-norms", "convergence_en_mesure_cas_NC", 0.6, truncation_ratio),
        at_most("evenp.expansion", "even-p-expansion", "decomp_de_norme_2m_comme_somme", 1e-9, evenp_expansion),
        at_most("evenp.conjugation_transfer", "even-p-expansion", "p=2m_m_isometrie_implique_c.isom", 1e-8, evenp_transfer),
        at_least("evenp.transpose_precondition", "even-p-expansion", "p=2m_m_isometrie_implique_c.isom", 1e-9, evenp_transpose),
    ]
}

/// Names of all checks belonging to `module`.
pub fn check_names(module: &str) -> Vec<&'static str> {
    checks().into_iter().filter(|c| c.module == module).map(|c| c.name).collect()
}

/// Runs the selected checks. Randomized checks draw from a stream derived
/// from the check's position in the fixed list, so results depend only on
/// the configuration.
pub fn run_suite(config: &SuiteConfig) -> Result<ReportDocument> {
    config.validate()?;
    let all = checks();
    let mut records: Vec<CheckRecord> = all
        .par_iter()
        .enumerate()
        .filter(|(_, c)| config.selected(c.module))
        .map(|(i, c)| {
            let tolerance = config.tolerances.get(c.name).copied().unwrap_or(c.tolerance);
            let start = Instant::now();
            let outcome = (c.run)(config, i as u64);
            let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
            let (measured, error) = match outcome {
                Ok(v) => (v, None),
                Err(e) => (f64::NAN, Some(e.to_string())),
            };
            let pass = match c.comparison {
                Comparison::AtMost => measured <= tolerance,
                Comparison::AtLeast => measured >= tolerance,
            };
            CheckRecord {
                name: c.name.to_string(),
                module: c.module.to_string(),
                anchor: c.anchor.to_string(),
                pass,
                measured,
                tolerance,
                comparison: c.comparison,
                runtime_ms,
                error,
            }
        })
        .collect();
    records.sort_by(|a, b| a.name.cmp(&b.name));
    let passed = records.iter().filter(|r| r.pass).count();
    Ok(ReportDocument {
        config: config.clone(),
        summary: Summary {
            total: records.len(),
            passed,
            failed: records.len() - passed,
        },
        records,
    })
}

fn max_of(values: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    values.into_iter().try_fold(0.0f64, |acc, v| Ok(acc.max(v?)))
}

fn rng_for(cfg: &SuiteConfig, stream: u64) -> rand_chacha::ChaCha8Rng {
    trial_rng(cfg.seed, stream)
}

// core-algebra

fn trace_cyclicity(cfg: &SuiteConfig, stream: u64) -> Result<f64> {
    let mut rng = rng_for(cfg, stream);
    let d = cfg.cap("core-algebra");
    max_of((0..cfg.trials).map(|_| {
        let fam: Vec<ComplexMatrix> = (0..3).map(|_| rng::disk_matrix(&mut rng, d)).collect();
        let pairs: Vec<(usize, bool)> = (0..5).map(|_| (rng.gen_range(0..3), rng.gen())).collect();
        let w = StarWord::from_pairs(&pairs);
        let mut rotated = pairs.clone();
        rotated.rotate_left(2);
        Ok((word_trace(&fam, &w)? - word_trace(&fam, &StarWord::from_pairs(&rotated))?).norm())
    }))
}

fn profile_integral(cfg: &SuiteConfig, stream: u64) -> Result<f64> {
    let mut rng = rng_for(cfg, stream);
    let d = cfg.cap("core-algebra");
    max_of((0..cfg.trials).flat_map(|_| {
        let m = rng::ginibre(&mut rng, d);
        let profile = singular_profile(&m);
        cfg.p_grid
            .iter()
            .map(|&p| {
                let direct = schatten_p_power(&m, p)?;
                Ok((profile.power_integral(p) - direct).abs() / direct.max(1e-300))
            })
            .collect::<Vec<_>>()
    }))
}

fn functional_calculus(cfg: &SuiteConfig, stream: u64) -> Result<f64> {
    let mut rng = rng_for(cfg, stream);
    let d = cfg.cap("core-algebra");
    max_of((0..cfg.trials).map(|_| {
        let h = rng::hermitian(&mut rng, d);
        let sq = hermitian_apply(&h, |x| x * x)?;
        Ok(sq.max_abs_diff(&h.matmul(&h)) / h.operator_norm().powi(2).max(1e-300))
    }))
}

// gadget-matrices

fn gadget_max(cfg: &SuiteConfig, kind: GadgetKind) -> Result<f64> {
    max_of((1..=cfg.cap("gadget-matrices")).map(|n| {
        let fam = gadget::GadgetFamily::build(kind, n)?;
        Ok(gadget::verify_cyclic_trace(&fam, VerifyMode::Exhaustive, gadget::DEFAULT_TOLERANCE)?.max_deviation)
    }))
}

fn gadget_full(cfg: &SuiteConfig, _: u64) -> Result<f64> {
    gadget_max(cfg, GadgetKind::Full)
}

fn gadget_compact(cfg: &SuiteConfig, _: u64) -> Result<f64> {
    gadget_max(cfg, GadgetKind::Compact)
}

// binomial-combinatorics

fn closed_forms(_: &SuiteConfig, _: u64) -> Result<f64> {
    max_of((1..=100).map(|i| {
        let p = 0.08 * i as f64;
        let two = (moment_coefficient(p, 2, 1)? - p * p / 4.0).abs();
        let four = (moment_coefficient(p, 4, 1)? - p * p * (p / 2.0 - 1.0) * (p / 2.0 - 2.0) / 24.0).abs();
        Ok(two.max(four))
    }))
}

fn root_reports(cfg: &SuiteConfig, _: u64) -> Result<f64> {
    let top = 2 * cfg.cap("binomial-combinatorics") + 2;
    max_of((1..=top.min(12)).flat_map(|n| {
        (0..=n / 2).map(move |alpha| {
            let r = coefficient_root_report(n, alpha)?;
            Ok(r.evaluations.iter().map(|e| e.1).fold(0.0, f64::max))
        })
    }))
}

fn nonvanishing(cfg: &SuiteConfig, _: u64) -> Result<f64> {
    let ps: Vec<f64> = cfg.p_grid.iter().copied().filter(|p| (p / 2.0).fract() != 0.0).collect();
    let mut min = f64::INFINITY;
    for p in ps {
        for n in 1..=6 {
            for alpha in 0..=n / 2 {
                min = min.min(moment_coefficient(p, n, alpha)?.abs());
            }
        }
    }
    Ok(min)
}

// moment-reconstruction

fn gram_lemma(cfg: &SuiteConfig, stream: u64) -> Result<f64> {
    let mut rng = rng_for(cfg, stream);
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.trials {
        let fam: Vec<ComplexMatrix> = (0..3).map(|_| rng::disk_matrix(&mut rng, 2)).collect();
        for n in 1..=3 {
            let gadget = gadget::compact_family(n)?;
            for bits in 0..1usize << n {
                let pairs: Vec<(usize, bool)> = (0..n).map(|j| (rng.gen_range(0..3), bits >> j & 1 == 1)).collect();
                let w = StarWord::from_pairs(&pairs);
                let alpha = alpha_count(&w.pattern())?;
                let tau = word_trace(&fam, &w)?;
                for k in 0..=n {
                    let c = reconstruct::gram_deviation_coefficient(&gadget, &fam, &w, k)?;
                    let want = tau * reconstruct::gram_trace_multiplier(n, alpha, k);
                    worst = worst.max((c.normalized_trace() - want).norm());
                }
            }
        }
    }
    Ok(worst)
}

fn reconstruct_moments(cfg: &SuiteConfig, stream: u64) -> Result<f64> {
    let mut rng = rng_for(cfg, stream);
    let d = cfg.cap("moment-reconstruction");
    let words: Vec<StarWord> = ["1*,1", "1,2*", "1*,2,1"].iter().map(|s| s.parse().expect("literal word")).collect();
    let fam: Vec<ComplexMatrix> = (0..2).map(|_| rng::matrix_with_norm(&mut rng, d, 1.0)).collect();
    max_of(cfg.p_grid.iter().flat_map(|&p| {
        let fam = &fam;
        words.iter().map(move |w| {
            let est = reconstruct::estimate_word_moment(fam, w, p, &PlanTemplate::default())?;
            Ok((est.value - word_trace(fam, w)?).norm())
        })
    }))
}

// star-distribution

fn conjugated_span(cfg: &SuiteConfig, stream: u64) -> Result<(SpanMap, Vec<ComplexMatrix>)> {
    let mut rng = rng_for(cfg, stream);
    let d = cfg.cap("star-distribution");
    let fam: Vec<ComplexMatrix> = (0..2).map(|_| rng::matrix_with_norm(&mut rng, d, 1.0)).collect();
    let u = rng::unitary(&mut rng, d);
    let mut basis = vec![ComplexMatrix::identity(d)];
    basis.extend(fam.iter().cloned());
    Ok((SpanMap::conjugation(basis, &u, true)?, fam))
}

fn conjugation_tables(cfg: &SuiteConfig, stream: u64) -> Result<f64> {
    let (map, fam) = conjugated_span(cfg, stream)?;
    let images = &map.images()[1..];
    let a = distribution::star_moments(&fam, 4)?;
    let b = distribution::star_moments(images, 4)?;
    Ok(distribution::distributions_match(&a, &b, 1e-10)?.worst_gap)
}

fn reconstructed_tables(cfg: &SuiteConfig, stream: u64) -> Result<f64> {
    let (map, fam) = conjugated_span(cfg, stream)?;
    let images = &map.images()[1..];
    let p = cfg.p_grid[0];
    let template = PlanTemplate::default();
    let a = distribution::reconstructed_moments(&fam, 2, p, &template)?;
    let b = distribution::reconstructed_moments(images, 2, p, &template)?;
    Ok(distribution::distributions_match(&a, &b, 5e-4)?.worst_gap)
}

fn transposition_level1(cfg: &SuiteConfig, _: u64) -> Result<f64> {
    let t = SpanMap::transposition(2)?;
    Ok(distribution::complete_isometry_probe(&t, 1, 3.0, 20 * cfg.trials, cfg.seed)?.max_gap)
}

fn transposition_level2(cfg: &SuiteConfig, _: u64) -> Result<f64> {
    let t = SpanMap::transposition(2)?;
    Ok(distribution::complete_isometry_probe(&t, 2, 3.0, 20 * cfg.trials, cfg.seed)?.max_gap)
}

fn multiplicativity(cfg: &SuiteConfig, stream: u64) -> Result<f64> {
    let mut rng = rng_for(cfg, stream);
    let d = cfg.cap("star-distribution");
    let u = rng::unitary(&mut rng, d);
    let units: Vec<ComplexMatrix> = (0..d * d).map(|k| ComplexMatrix::unit(d, k / d, k % d)).collect();
    let map = SpanMap::conjugation(units, &u, true)?;
    let k = map.basis().len();
    max_of((0..k).flat_map(|a| {
        let map = &map;
        (0..k).map(move |b| distribution::multiplicativity_defect(map, a, b, 2.0, false))
    }))
}

fn adjoint(cfg: &SuiteConfig, stream: u64) -> Result<f64> {
    let mut rng = rng_for(cfg, stream);
    let d = cfg.cap("star-distribution");
    let u = rng::unitary(&mut rng, d);
    let units: Vec<ComplexMatrix> = (0..d * d).map(|k| ComplexMatrix::unit(d, k / d, k % d)).collect();
    let map = SpanMap::conjugation(units, &u, true)?;
    max_of((0..map.basis().len()).map(|i| distribution::adjoint_defect(&map, i)))
}

// corner-norms

fn log_grid(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    (0..points).map(move |i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64))
}

fn psi_ode(cfg: &SuiteConfig, _: u64) -> Result<f64> {
    max_of(cfg.p_grid.iter().flat_map(|&p| {
        log_grid(1e-3, 50.0, 60).map(move |t| {
            let scale = corner::psi_eval(t, p)?.max(1.0);
            Ok(corner::psi_ode_residual(t, p)?.abs() / scale)
        })
    }))
}

fn psi_series_agreement(cfg: &SuiteConfig, _: u64) -> Result<f64> {
    max_of(cfg.p_grid.iter().flat_map(|&p| {
        (0..=35).map(move |i| {
            let t = 0.1 * i as f64;
            Ok((corner::psi_series_adaptive(t, p)? - corner::psi_eval(t, p)?).abs())
        })
    }))
}

fn psi_sign(cfg: &SuiteConfig, _: u64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &p in &cfg.p_grid {
        for n in 1..=4 {
            let nonneg = corner::psi_tail_nonnegative(p, n);
            for i in 1..=200 {
                let t = 0.5 * i as f64;
                let v = corner::psi_tail_sign(t, p, n)?;
                let violation = if nonneg { -v } else { v };
                let scale = corner::psi_eval(t, p)?.max(1.0);
                worst = worst.max(violation / scale);
            }
        }
    }
    Ok(worst)
}

fn cycle_polynomial(_: &SuiteConfig, _: u64) -> Result<f64> {
    max_of((1..=12).flat_map(|m| {
        (0..20).map(move |i| {
            let x = -4.0 + 0.5 * i as f64;
            let coeffs = corner::cycle_polynomial(m)?;
            let rec = corner::eval_polynomial(&coeffs, x);
            let closed = corner::cycle_polynomial_closed(m, x);
            Ok((rec - closed).abs() / rec.abs().max(1.0))
        })
    }))
}

fn sum_of_powers(cfg: &SuiteConfig, stream: u64) -> Result<f64> {
    let mut rng = rng_for(cfg, stream);
    let d = cfg.cap("corner-norms");
    max_of((0..cfg.trials).flat_map(|_| {
        let a = corner::corner_embed(&rng::matrix_with_norm(&mut rng, d, 0.5));
        (1..=6).map(move |m| corner::sum_of_powers_gap(&a, m))
    }))
}

fn four_term(cfg: &SuiteConfig, stream: u64) -> Result<f64> {
    let mut rng = rng_for(cfg, stream);
    let d = cfg.cap("corner-norms");
    let ps: Vec<f64> = cfg.p_grid.iter().copied().filter(|&p| p >= 1.0).collect();
    max_of((0..cfg.trials).flat_map(|_| {
        let a = rng::ginibre(&mut rng, d);
        ps.iter().map(move |&p| Ok(-corner::four_term_defect(&a, p)?)).collect::<Vec<_>>()
    }))
}

fn even_norm_recovery(cfg: &SuiteConfig, stream: u64) -> Result<f64> {
    let mut rng = rng_for(cfg, stream);
    let d = cfg.cap("corner-norms");
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.trials {
        let a = corner::corner_embed(&rng::disk_matrix(&mut rng, d));
        for p in [1.0, 3.0] {
            let mut lower = Vec::new();
            for n in 1..=2 {
                let exact = corner::even_norm_power(&a, n);
                let est = corner::recover_even_norm(&a, p, n, &lower)?;
                worst = worst.max((est.value - exact).abs() / exact);
                lower.push(exact);
            }
        }
    }
    Ok(worst)
}

fn truncation_ratio(cfg: &SuiteConfig, stream: u64) -> Result<f64> {
    let mut rng = rng_for(cfg, stream);
    max_of((0..cfg.trials).flat_map(|_| {
        let x = rng::disk_matrix(&mut rng, 2);
        [1e-2, 5e-3].map(move |r| {
            let full = corner::truncation_remainder(&x, 3.0, 2, r)?;
            let half = corner::truncation_remainder(&x, 3.0, 2, r / 2.0)?;
            Ok(half / full)
        })
    }))
}

// even-p-expansion

fn evenp_expansion(cfg: &SuiteConfig, stream: u64) -> Result<f64> {
    let mut rng = rng_for(cfg, stream);
    let d = cfg.cap("even-p-expansion");
    max_of((0..cfg.trials).flat_map(|_| {
        let coeffs: Vec<ComplexMatrix> = (0..2).map(|_| rng::matrix_with_norm(&mut rng, 2, 0.7)).collect();
        let elems: Vec<ComplexMatrix> = (0..2).map(|_| rng::matrix_with_norm(&mut rng, d, 0.7)).collect();
        (1..=3).map(move |m| {
            let direct = evenp::direct_norm_power(&coeffs, &elems, 2.0 * m as f64, true)?;
            Ok((evenp::expand_even_norm(&coeffs, &elems, m)? - direct).abs() / direct.max(1.0))
        })
    }))
}

fn evenp_transfer(cfg: &SuiteConfig, stream: u64) -> Result<f64> {
    let mut rng = rng_for(cfg, stream);
    let d = cfg.cap("even-p-expansion");
    let x: Vec<ComplexMatrix> = (0..2).map(|_| rng::disk_matrix(&mut rng, d)).collect();
    let u = rng::unitary(&mut rng, d);
    let y: Vec<ComplexMatrix> = x.iter().map(|a| u.matmul(a).matmul(&u.adjoint())).collect();
    let r = evenp::even_p_transfer_check(&x, &y, 2, &[1, 2, 3, 4], cfg.trials, cfg.seed)?;
    Ok(r.levels.iter().map(|l| l.max_gap).fold(r.max_moment_gap, f64::max))
}

fn evenp_transpose(cfg: &SuiteConfig, _: u64) -> Result<f64> {
    let x = vec![
        ComplexMatrix::unit(2, 0, 0),
        &ComplexMatrix::unit(2, 0, 1) + &ComplexMatrix::unit(2, 1, 0).scale_real(2.0),
    ];
    let y: Vec<ComplexMatrix> = x.iter().map(ComplexMatrix::transpose).collect();
    match evenp::even_p_transfer_check(&x, &y, 2, &[1], cfg.trials, cfg.seed) {
        Err(Error::PreconditionFailed { gap, .. }) => Ok(gap),
        Err(e) => Err(e),
        Ok(_) => Ok(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors_and_modules_are_known() {
        for c in checks() {
            assert!(ANCHORS.contains(&c.anchor), "{}", c.anchor);
            assert!(MODULES.contains(&c.module), "{}", c.module);
        }
        for m in MODULES {
            assert!(!check_names(m).is_empty(), "{m}");
        }
    }

    #[test]
    fn config_validation() {
        let cfg = SuiteConfig::from_toml("seed = 3\np_grid = []").unwrap();
        assert!(cfg.validate().is_err());
        assert!(SuiteConfig::from_toml("bogus = 1").is_err());
        let cfg = SuiteConfig::from_toml("modules = [\"nope\"]").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = SuiteConfig::from_toml("[dim_caps]\n\"gadget-matrices\" = 12").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = SuiteConfig::from_json(r#"{"seed": 5, "output": {"format": "csv"}}"#).unwrap();
        assert_eq!(cfg.output.format, Format::Csv);
        cfg.validate().unwrap();
    }

    #[test]
    fn module_selection_and_forced_failure() {
        let mut cfg = SuiteConfig {
            modules: vec!["gadget-matrices".into()],
            ..Default::default()
        };
        cfg.dim_caps.insert("gadget-matrices".into(), 5);
        let report = run_suite(&cfg).unwrap();
        assert!(report.records.iter().all(|r| r.module == "gadget-matrices"));
        assert!(report.all_passed(), "{report:?}");
        assert_eq!(report.exit_code(), 0);

        cfg.tolerances.insert("gadget.full_cycle".into(), 0.0);
        cfg.dim_caps.insert("gadget-matrices".into(), 4);
        let report = run_suite(&cfg).unwrap();
        // n = 4 uses 4^{1/4} scaling, which cannot be exact in floating point
        let failed: Vec<_> = report.failing().map(|r| r.name.as_str()).collect();
        assert_eq!(failed, ["gadget.full_cycle"]);
        assert_eq!(report.exit_code(), 1);
        assert!(report.to_csv().lines().count() == 3);
    }
}
