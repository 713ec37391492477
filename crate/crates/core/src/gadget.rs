//! Cyclic-trace gadget families.
//!
//! A family `a_1..a_n` has the cyclic-trace property when
//! `tr(a_{σ(1)}···a_{σ(n)})` is 1 for circular permutations `σ` and 0 for all
//! others. Inside the expansion of `‖1 + Σ z_j a_j ⊗ x_j‖_p^p` this kills
//! every ordering of the `x_j` except the cyclic ones.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{check_family, ComplexMatrix};
use crate::error::{Error, Result};
use crate::rng::trial_rng;

/// Largest `n` verified exhaustively (`n!` products).
pub const EXHAUSTIVE_CAP: usize = 9;
pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GadgetKind {
    Full,
    Compact,
    Custom,
}

impl std::str::FromStr for GadgetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "compact" => Ok(Self::Compact),
            other => Err(Error::Parse(format!("unknown gadget kind {other:?} (full|compact)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GadgetFamily {
    kind: GadgetKind,
    matrices: Vec<ComplexMatrix>,
}

impl GadgetFamily {
    /// Wraps an arbitrary family; the cyclic-trace property is not checked.
    pub fn custom(matrices: Vec<ComplexMatrix>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::InvalidArgument("a gadget family needs at least one matrix".into()));
        }
        check_family(&matrices)?;
        Ok(Self {
            kind: GadgetKind::Custom,
            matrices,
        })
    }

    pub fn build(kind: GadgetKind, n: usize) -> Result<Self> {
        match kind {
            GadgetKind::Full => full_cycle_family(n),
            GadgetKind::Compact => compact_family(n),
            GadgetKind::Custom => Err(Error::InvalidArgument("custom families are built from matrices".into())),
        }
    }

    pub fn kind(&self) -> GadgetKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.matrices.len()
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].dim()
    }

    pub fn matrices(&self) -> &[ComplexMatrix] {
        &self.matrices
    }

    pub fn get(&self, j: usize) -> &ComplexMatrix {
        &self.matrices[j]
    }
}

fn require_positive(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("gadget size n must be at least 1".into()));
    }
    Ok(())
}

/// `a_j = n^{1/n} e_{j, j+1 mod n}` in `M_n`.
pub fn full_cycle_family(n: usize) -> Result<GadgetFamily> {
    require_positive(n)?;
    let scale = (n as f64).powf(1.0 / n as f64);
    let matrices = (0..n)
        .map(|j| ComplexMatrix::unit(n, j, (j + 1) % n).scale_real(scale))
        .collect();
    Ok(GadgetFamily {
        kind: GadgetKind::Full,
        matrices,
    })
}

/// Family of `n` matrices of size `m = ⌈n/2⌉`: diagonal units `e_{jj}`
/// interleaved with the shifts `e_{j,j+1}`, closed by `m·e_{m,1}`.
pub fn compact_family(n: usize) -> Result<GadgetFamily> {
    require_positive(n)?;
    let m = n.div_ceil(2);
    let mut matrices = Vec::with_capacity(n);
    for j in 0..m {
        matrices.push(ComplexMatrix::unit(m, j, j));
        if j + 1 < m {
            matrices.push(ComplexMatrix::unit(m, j, j + 1));
        }
    }
    // n even: one more letter after e_{mm}; n odd: e_{mm} is replaced
    if n % 2 == 0 {
        matrices.push(ComplexMatrix::unit(m, m - 1, 0).scale_real(m as f64));
    } else {
        *matrices.last_mut().expect("m >= 1") = ComplexMatrix::unit(m, m - 1, 0).scale_real(m as f64);
    }
    debug_assert_eq!(matrices.len(), n);
    Ok(GadgetFamily {
        kind: GadgetKind::Compact,
        matrices,
    })
}

/// Whether `perm` (0-based) is a cyclic shift of the identity.
pub fn is_circular(perm: &[usize]) -> bool {
    let n = perm.len();
    n == 0 || perm.iter().enumerate().all(|(j, &s)| s == (perm[0] + j) % n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VerifyMode {
    Exhaustive,
    Sampled { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CyclicTraceReport {
    pub n: usize,
    pub dim: usize,
    pub pass: bool,
    pub max_deviation: f64,
    /// 1-based permutation attaining the maximum deviation.
    pub worst_permutation: Vec<usize>,
    pub checked: usize,
    pub tolerance: f64,
}

#[derive(Clone)]
struct Worst {
    dev: f64,
    perm: Vec<usize>,
    checked: usize,
}

impl Worst {
    fn none() -> Self {
        Self {
            dev: -1.0,
            perm: Vec::new(),
            checked: 0,
        }
    }

    fn record(&mut self, dev: f64, perm: &[usize]) {
        self.checked += 1;
        if dev > self.dev || dev.is_nan() {
            self.dev = if dev.is_nan() { f64::INFINITY } else { dev };
            self.perm = perm.to_vec();
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.checked += other.checked;
        if other.dev > self.dev {
            self.dev = other.dev;
            self.perm = other.perm;
        }
        self
    }
}

fn deviation(trace: Complex64, perm: &[usize]) -> f64 {
    let target = if is_circular(perm) { 1.0 } else { 0.0 };
    (trace - target).norm()
}

/// `tr_d(P·a)` without forming the product.
fn trace_of_product(p: &ComplexMatrix, a: &ComplexMatrix) -> Complex64 {
    let d = p.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            acc += p[(i, k)] * a[(k, i)];
        }
    }
    acc / d as f64
}

fn dfs(mats: &[ComplexMatrix], prefix: &ComplexMatrix, perm: &mut Vec<usize>, used: &mut [bool], worst: &mut Worst) {
    let n = mats.len();
    if perm.len() + 1 == n {
        let last = (0..n).find(|&j| !used[j]).expect("one index left");
        perm.push(last);
        worst.record(deviation(trace_of_product(prefix, &mats[last]), perm), perm);
        perm.pop();
        return;
    }
    for j in 0..n {
        if used[j] {
            continue;
        }
        used[j] = true;
        perm.push(j);
        let next = prefix.matmul(&mats[j]);
        dfs(mats, &next, perm, used, worst);
        perm.pop();
        used[j] = false;
    }
}

/// Checks the cyclic-trace property for every permutation (exhaustive, `n ≤ 9`)
/// or for a seeded sample that always includes the `n` circular shifts.
pub fn verify_cyclic_trace(fam: &GadgetFamily, mode: VerifyMode, tolerance: f64) -> Result<CyclicTraceReport> {
    let mats = fam.matrices();
    let n = mats.len();
    let dim = fam.dim();
    let worst = match mode {
        VerifyMode::Exhaustive => {
            if n > EXHAUSTIVE_CAP {
                return Err(Error::ExhaustiveCap { n, cap: EXHAUSTIVE_CAP });
            }
            (0..n)
                .into_par_iter()
                .map(|first| {
                    let mut worst = Worst::none();
                    let mut used = vec![false; n];
                    used[first] = true;
                    let mut perm = vec![first];
                    if n == 1 {
                        worst.record(deviation(mats[0].normalized_trace(), &perm), &perm);
                    } else {
                        dfs(mats, &mats[first], &mut perm, &mut used, &mut worst);
                    }
                    worst
                })
                .reduce(Worst::none, Worst::merge)
        }
        VerifyMode::Sampled { samples, seed } => {
            let shifts: Vec<Vec<usize>> = (0..n).map(|k| (0..n).map(|j| (j + k) % n).collect()).collect();
            let product_dev = |perm: &[usize]| {
                let mut acc = mats[perm[0]].clone();
                for &j in &perm[1..n - 1] {
                    acc = acc.matmul(&mats[j]);
                }
                let tr = if n == 1 {
                    acc.normalized_trace()
                } else {
                    trace_of_product(&acc, &mats[perm[n - 1]])
                };
                deviation(tr, perm)
            };
            let sampled = (0..samples as u64)
                .into_par_iter()
                .map(|s| {
                    let mut rng = trial_rng(seed, s);
                    let mut perm: Vec<usize> = (0..n).collect();
                    perm.shuffle(&mut rng);
                    let mut w = Worst::none();
                    w.record(product_dev(&perm), &perm);
                    w
                })
                .reduce(Worst::none, Worst::merge);
            let mut fixed = Worst::none();
            for perm in &shifts {
                fixed.record(product_dev(perm), perm);
            }
            fixed.merge(sampled)
        }
    };
    Ok(CyclicTraceReport {
        n,
        dim,
        pass: worst.dev <= tolerance,
        max_deviation: worst.dev.max(0.0),
        worst_permutation: worst.perm.iter().map(|j| j + 1).collect(),
        checked: worst.checked,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tr(fam: &GadgetFamily, order: &[usize]) -> Complex64 {
        let mut acc = ComplexMatrix::identity(fam.dim());
        for &j in order {
            acc = acc.matmul(fam.get(j));
        }
        acc.normalized_trace()
    }

    #[test]
    fn full_cycle_small_cases() {
        let f1 = full_cycle_family(1).unwrap();
        assert_eq!(f1.get(0), &ComplexMatrix::identity(1));
        let f2 = full_cycle_family(2).unwrap();
        assert!((tr(&f2, &[0, 1]).re - 1.0).abs() < 1e-15);
        assert_eq!(tr(&f2, &[0, 0]).norm(), 0.0);
        assert_eq!(f2.dim(), 2);
    }

    #[test]
    fn compact_small_cases() {
        let c2 = compact_family(2).unwrap();
        assert_eq!(c2.dim(), 1);
        assert_eq!(c2.matrices(), &[ComplexMatrix::identity(1), ComplexMatrix::identity(1)]);
        let c3 = compact_family(3).unwrap();
        assert_eq!(c3.get(0), &ComplexMatrix::unit(2, 0, 0));
        assert_eq!(c3.get(1), &ComplexMatrix::unit(2, 0, 1));
        assert_eq!(c3.get(2), &ComplexMatrix::unit(2, 1, 0).scale_real(2.0));
        assert_eq!(tr(&c3, &[0, 1, 2]).re, 1.0);
        assert_eq!(tr(&c3, &[0, 2, 1]).norm(), 0.0);
    }

    #[test]
    fn circularity_predicate() {
        assert!(is_circular(&[2, 0, 1]));
        assert!(!is_circular(&[0, 2, 1]));
        assert!(is_circular(&[0]));
    }

    #[test]
    fn bad_family_fails() {
        let e12 = ComplexMatrix::unit(2, 0, 1);
        let fam = GadgetFamily::custom(vec![e12.clone(), e12]).unwrap();
        let rep = verify_cyclic_trace(&fam, VerifyMode::Exhaustive, DEFAULT_TOLERANCE).unwrap();
        assert!(!rep.pass);
        assert_eq!(rep.max_deviation, 1.0);
        assert_eq!(rep.checked, 2);
    }

    #[test]
    fn cap_enforced() {
        let fam = compact_family(10).unwrap();
        assert_eq!(
            verify_cyclic_trace(&fam, VerifyMode::Exhaustive, DEFAULT_TOLERANCE),
            Err(Error::ExhaustiveCap { n: 10, cap: 9 })
        );
        let rep = verify_cyclic_trace(&fam, VerifyMode::Sampled { samples: 2000, seed: 3 }, DEFAULT_TOLERANCE).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.checked, 2010);
    }
}
