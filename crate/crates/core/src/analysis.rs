//! Norms, Cesàro averages of stage solutions, convergence tables and the
//! windowed Cauchy diagnostics.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::str::FromStr;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::femsolve::{self, LoadRule, StageSolution};
use crate::forcing::{ExampleId, FieldParams, ForcingField, GridFunction};
use crate::quadrature::{GAUSS3_NODES, GAUSS3_WEIGHTS};
use crate::stargraph::{angle_of, build_stage, CoefficientSource};
use crate::upscale::{self, UpscaledProblem};

/// What the `h1_error` column measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormKind {
    /// `‖(f - g)'‖_{L²}`.
    #[default]
    Seminorm,
    /// `(‖f - g‖²_{L²} + ‖(f - g)'‖²_{L²})^{1/2}`.
    Full,
}

impl NormKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::Seminorm => "seminorm",
            NormKind::Full => "full",
        }
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "seminorm" => Ok(NormKind::Seminorm),
            "full" => Ok(NormKind::Full),
            _ => Err(Error::invalid(format!("unknown norm `{s}`"))),
        }
    }
}

/// Composite Simpson weights on `m` uniform elements of `[0, 1]`. Odd `m`
/// closes with the 3/8 rule on the last three elements.
fn simpson_weights(m: usize) -> Vec<f64> {
    let h = 1.0 / m as f64;
    let mut w = vec![0.0; m + 1];
    let simpson_end = if m % 2 == 0 { m } else { m - 3 };
    for j in (0..simpson_end).step_by(2) {
        w[j] += h / 3.0;
        w[j + 1] += 4.0 * h / 3.0;
        w[j + 2] += h / 3.0;
    }
    if m % 2 == 1 {
        let j = m - 3;
        for (k, c) in [1.0, 3.0, 3.0, 1.0].into_iter().enumerate() {
            w[j + k] += 3.0 * h / 8.0 * c;
        }
    }
    w
}

/// `(‖f - g‖_{L²}, ‖f - g‖_{H¹})` on a common grid.
///
/// The `L²` part uses composite Simpson on the nodal values of `(f - g)²`;
/// the `H¹` part is built from the elementwise slopes.
pub fn grid_norms_with(f: &GridFunction, g: &GridFunction, kind: NormKind) -> Result<(f64, f64)> {
    let d = f.sub(g)?;
    let v = d.values();
    let m = d.m();
    let l2 = simpson_weights(m)
        .iter()
        .zip(v)
        .map(|(w, x)| w * x * x)
        .sum::<f64>()
        .sqrt();
    let mf = m as f64;
    let semi = (v.windows(2).map(|w| ((w[1] - w[0]) * mf).powi(2)).sum::<f64>() / mf).sqrt();
    let h1 = match kind {
        NormKind::Seminorm => semi,
        NormKind::Full => l2.hypot(semi),
    };
    Ok((l2, h1))
}

/// [`grid_norms_with`] using the `H¹` seminorm.
pub fn grid_norms(f: &GridFunction, g: &GridFunction) -> Result<(f64, f64)> {
    grid_norms_with(f, g, NormKind::Seminorm)
}

/// `(‖u - f‖_{L²}, |u - f|_{H¹})` where `u` is the piecewise linear
/// interpolant of `grid` and `f`, `df` are a function and its derivative,
/// integrated elementwise with three-point Gauss.
pub fn fe_error<F, D>(grid: &GridFunction, f: F, df: D) -> (f64, f64)
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let v = grid.values();
    let h = 1.0 / grid.m() as f64;
    let (mut l2, mut semi) = (0.0, 0.0);
    for (j, w) in v.windows(2).enumerate() {
        let a = j as f64 * h;
        let slope = (w[1] - w[0]) / h;
        for (x, wt) in GAUSS3_NODES.iter().zip(GAUSS3_WEIGHTS.iter()) {
            let t = a + x * h;
            let u = w[0] + slope * x * h;
            l2 += wt * h * (u - f(t)).powi(2);
            semi += wt * h * (slope - df(t)).powi(2);
        }
    }
    (l2.sqrt(), semi.sqrt())
}

/// Nodewise mean of the edge solutions in `group`.
pub fn cesaro_solution_average(solution: &StageSolution, group: usize) -> Result<GridFunction> {
    let stage = solution.stage();
    let mut acc = vec![0.0; solution.m() + 1];
    let mut count = 0usize;
    for edge in stage.edges_in_group(group) {
        count += 1;
        for (a, v) in acc.iter_mut().zip(solution.edge(edge).values()) {
            *a += v;
        }
    }
    if count == 0 {
        return Err(Error::EmptyGroup {
            group: group + 1,
            n: stage.n(),
        });
    }
    acc.iter_mut().for_each(|a| *a /= count as f64);
    // node 0 is shared by every edge
    acc[0] = solution.center_value();
    GridFunction::new(acc)
}

/// Center datum `hⁿ` as a function of the stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CenterDatum {
    /// `hⁿ = c` for every `n`; `h̄ = 0`.
    Constant(f64),
    /// `hⁿ = c·n`; `h̄ = c`.
    PerEdge(f64),
}

impl Default for CenterDatum {
    fn default() -> Self {
        CenterDatum::Constant(0.0)
    }
}

impl CenterDatum {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            CenterDatum::Constant(c) => c,
            CenterDatum::PerEdge(c) => c * n as f64,
        }
    }

    /// `lim hⁿ / n`.
    pub fn limit(&self) -> f64 {
        match *self {
            CenterDatum::Constant(_) => 0.0,
            CenterDatum::PerEdge(c) => c,
        }
    }
}

type GroupAverages = Arc<Vec<GridFunction>>;

/// A fully specified sequence of stage problems.
///
/// Group averages of stage solutions are cached per `n`; every other part
/// of the cache key (example, mesh, seed, load rule) is fixed by the
/// experiment itself.
#[derive(Debug)]
pub struct Experiment {
    pub field: ForcingField,
    pub coefficients: CoefficientSource,
    pub center: CenterDatum,
    pub m: usize,
    pub rule: LoadRule,
    cache: Mutex<HashMap<usize, GroupAverages>>,
}

impl Clone for Experiment {
    fn clone(&self) -> Self {
        Experiment::new(
            self.field.clone(),
            self.coefficients.clone(),
            self.center,
            self.m,
            self.rule,
        )
    }
}

impl Experiment {
    pub fn new(
        field: ForcingField,
        coefficients: CoefficientSource,
        center: CenterDatum,
        m: usize,
        rule: LoadRule,
    ) -> Self {
        Experiment {
            field,
            coefficients,
            center,
            m,
            rule,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// A built-in example with deterministic coefficients, `h = 0` and the
    /// default load rule.
    pub fn builtin(id: ExampleId, m: usize) -> Result<Self> {
        Ok(Self::new(
            ForcingField::builtin(id, FieldParams::default(), 0)?,
            CoefficientSource::Deterministic,
            CenterDatum::default(),
            m,
            LoadRule::default(),
        ))
    }

    pub fn seed(&self) -> Option<u64> {
        self.coefficients.seed().or(self.field.seed())
    }

    pub fn stage_solution(&self, n: usize) -> Result<StageSolution> {
        let stage = build_stage(n, &self.coefficients)?;
        femsolve::solve_stage(&stage, &self.field, self.center.at(n), self.m, self.rule).map_err(
            |e| match e {
                Error::NumericalBreakdown(msg) => {
                    Error::NumericalBreakdown(format!("stage n = {n}: {msg}"))
                }
                other => other,
            },
        )
    }

    /// Cesàro averages `p̄ⁿ_i` for every group.
    pub fn group_averages(&self, n: usize) -> Result<GroupAverages> {
        if let Some(hit) = self.cache.lock().expect("cache poisoned").get(&n) {
            return Ok(hit.clone());
        }
        let sol = self.stage_solution(n)?;
        let avgs: Vec<GridFunction> = (0..sol.stage().group_count())
            .map(|g| cesaro_solution_average(&sol, g))
            .collect::<Result<_>>()?;
        let avgs = Arc::new(avgs);
        self.cache
            .lock()
            .expect("cache poisoned")
            .insert(n, avgs.clone());
        Ok(avgs)
    }

    pub fn upscaled_problem(&self) -> Result<UpscaledProblem> {
        UpscaledProblem::from_field(&self.coefficients, &self.field, self.center.limit())
    }
}

/// What stage averages are compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    /// The registered closed form (its corrected version if the registered
    /// one fails the vertex conditions).
    Oracle,
    /// The registered closed form exactly as recorded.
    Printed,
    /// The discrete upscaled solution on `m` elements, restricted to the
    /// stage grid.
    Upscaled { m: usize },
}

impl Reference {
    pub fn label(&self) -> String {
        match self {
            Reference::Oracle => "oracle".into(),
            Reference::Printed => "printed".into(),
            Reference::Upscaled { m } => format!("upscaled-m{m}"),
        }
    }
}

/// Reference profiles on the experiment's grid, one per group.
pub fn reference_profiles(exp: &Experiment, reference: Reference) -> Result<Vec<GridFunction>> {
    match reference {
        Reference::Oracle | Reference::Printed => {
            let id = exp
                .field
                .example()
                .ok_or_else(|| Error::invalid("custom fields have no registered oracle"))?;
            let oracle = upscale::analytic_oracle(id, exp.field.params())
                .ok_or_else(|| Error::invalid(format!("no analytic oracle registered for {id}")))?;
            let profiles = if reference == Reference::Oracle {
                oracle.best()
            } else {
                &oracle.reference
            };
            profiles.iter().map(|p| p.sample(exp.m)).collect()
        }
        Reference::Upscaled { m } => {
            let sol = upscale::solve_upscaled(&exp.upscaled_problem()?, m, exp.rule)?;
            sol.groups().iter().map(|g| g.restrict(exp.m)).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    /// One-based group index.
    pub group: usize,
    pub l2_error: f64,
    pub h1_error: f64,
    pub center_value: f64,
    pub reference: String,
    pub m: usize,
    pub wall_ms: f64,
    pub seed: Option<u64>,
}

fn check_increasing(stages: &[usize]) -> Result<()> {
    if stages.is_empty() {
        return Err(Error::invalid("at least one stage is required"));
    }
    if stages.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("stages must be strictly increasing"));
    }
    Ok(())
}

/// Errors of the group averages against `reference`, one row per
/// `(n, group)` ordered by `n` then group.
pub fn convergence_table(
    exp: &Experiment,
    stages: &[usize],
    reference: Reference,
    norm: NormKind,
) -> Result<Vec<ConvergenceRow>> {
    check_increasing(stages)?;
    let refs = reference_profiles(exp, reference)?;
    let label = reference.label();
    let per_stage: Vec<Vec<ConvergenceRow>> = stages
        .par_iter()
        .map(|&n| {
            let start = Instant::now();
            let sol = exp.stage_solution(n)?;
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            if sol.stage().group_count() != refs.len() {
                return Err(Error::invalid("reference and stage group counts differ"));
            }
            (0..refs.len())
                .map(|g| {
                    let avg = cesaro_solution_average(&sol, g)?;
                    let (l2, h1) = grid_norms_with(&avg, &refs[g], norm)?;
                    Ok(ConvergenceRow {
                        n,
                        group: g + 1,
                        l2_error: l2,
                        h1_error: h1,
                        center_value: sol.center_value(),
                        reference: label.clone(),
                        m: exp.m,
                        wall_ms,
                        seed: exp.seed(),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per_stage.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CauchyRow {
    /// Window center.
    pub n: usize,
    /// One-based group index.
    pub group: usize,
    /// Windowed mean of `‖p̄ʲ - p̄ʲ⁻¹‖_{L²}`.
    pub epsilon: f64,
    /// Windowed mean of the `H¹` differences.
    pub delta: f64,
    pub window: usize,
}

/// Stages `j` whose differences `p̄ʲ - p̄ʲ⁻¹` enter the window around `n`:
/// `n - (w/2 - 1) ..= n + w/2`, i.e. `n - 4 ..= n + 5` for `w = 10`.
pub fn cauchy_window(n: usize, window: usize) -> Result<std::ops::RangeInclusive<usize>> {
    if window < 2 || window % 2 != 0 {
        return Err(Error::invalid(format!("window must be even and >= 2, got {window}")));
    }
    let below = window / 2 - 1;
    // the oldest stage used is n - below - 1, and stages need n >= 2
    if n < below + 3 {
        return Err(Error::invalid(format!(
            "window of {window} around n = {n} reaches stages below 2"
        )));
    }
    Ok(n - below..=n + window / 2)
}

pub fn cauchy_diagnostics(
    exp: &Experiment,
    centers: &[usize],
    window: usize,
    norm: NormKind,
) -> Result<Vec<CauchyRow>> {
    check_increasing(centers)?;
    let ranges: Vec<_> = centers
        .iter()
        .map(|&n| cauchy_window(n, window))
        .collect::<Result<_>>()?;
    let mut needed: Vec<usize> = ranges
        .iter()
        .flat_map(|r| (*r.start() - 1)..=*r.end())
        .collect();
    needed.sort_unstable();
    needed.dedup();
    needed
        .par_iter()
        .map(|&j| exp.group_averages(j).map(|_| ()))
        .collect::<Result<()>>()?;

    let mut rows = Vec::new();
    for (&n, range) in centers.iter().zip(ranges) {
        let groups = exp.group_averages(n)?.len();
        let mut eps = vec![0.0; groups];
        let mut del = vec![0.0; groups];
        for j in range {
            let cur = exp.group_averages(j)?;
            let prev = exp.group_averages(j - 1)?;
            for g in 0..groups {
                let (l2, h1) = grid_norms_with(&cur[g], &prev[g], norm)?;
                eps[g] += l2;
                del[g] += h1;
            }
        }
        for g in 0..groups {
            rows.push(CauchyRow {
                n,
                group: g + 1,
                epsilon: eps[g] / window as f64,
                delta: del[g] / window as f64,
                window,
            });
        }
    }
    Ok(rows)
}

/// Order estimate `α = (log d₊ - log d₀) / (log d₀ - log d₋)` from three
/// successive difference magnitudes.
pub fn rate_estimate(d_prev: f64, d_mid: f64, d_next: f64) -> Result<f64> {
    if [d_prev, d_mid, d_next].iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
        return Err(Error::UndefinedRate(
            "difference magnitudes must be finite and > 0".into(),
        ));
    }
    let denom = d_mid.ln() - d_prev.ln();
    if denom == 0.0 {
        return Err(Error::UndefinedRate("equal successive gaps".into()));
    }
    Ok((d_next.ln() - d_mid.ln()) / denom)
}

/// [`rate_estimate`] on the gaps of four successive values.
pub fn rate_from_values(values: [f64; 4]) -> Result<f64> {
    let gap = |i: usize| (values[i + 1] - values[i]).abs();
    rate_estimate(gap(0), gap(1), gap(2))
}

/// Per-group `α` at stage `n` from `‖p̄ⁿ⁻¹ - p̄ⁿ⁻²‖`, `‖p̄ⁿ - p̄ⁿ⁻¹‖` and
/// `‖p̄ⁿ⁺¹ - p̄ⁿ‖`, in the `L²` and `H¹` norms.
pub fn rate_at(exp: &Experiment, n: usize, norm: NormKind) -> Result<Vec<(Result<f64>, Result<f64>)>> {
    if n < 4 {
        return Err(Error::invalid("rate needs n >= 4"));
    }
    let avgs: Vec<_> = (n - 2..=n + 1)
        .map(|j| exp.group_averages(j))
        .collect::<Result<_>>()?;
    let groups = avgs[0].len();
    (0..groups)
        .map(|g| {
            let diffs: Vec<(f64, f64)> = avgs
                .windows(2)
                .map(|w| grid_norms_with(&w[1][g], &w[0][g], norm))
                .collect::<Result<_>>()?;
            Ok((
                rate_estimate(diffs[0].0, diffs[1].0, diffs[2].0),
                rate_estimate(diffs[0].1, diffs[1].1, diffs[2].1),
            ))
        })
        .collect()
}

/// Share of `ℓ mod 2π`, `ℓ = 1..=n`, that falls in `[lo, hi]`.
pub fn weyl_fraction(n: usize, lo: f64, hi: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("weyl_fraction needs n >= 1"));
    }
    if !(0.0 <= lo && lo < hi && hi <= TAU) {
        return Err(Error::invalid(format!("invalid interval [{lo}, {hi}]")));
    }
    let hits = (1..=n)
        .filter(|&l| {
            let a = angle_of(l);
            lo <= a && a <= hi
        })
        .count();
    Ok(hits as f64 / n as f64)
}

/// `(1/n) Σ_{ℓ ≤ n} cos ℓ`.
pub fn cos_mean(n: usize) -> f64 {
    (1..=n).map(|l| (l as f64).cos()).sum::<f64>() / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn fe_error_against_closed_forms() {
        // zero grid against sin(πt): ‖·‖ = 1/√2, |·| = π/√2
        let z = GridFunction::zeros(200).unwrap();
        let (l2, h1) = fe_error(&z, |t| (PI * t).sin(), |t| PI * (PI * t).cos());
        assert!((l2 - 0.5f64.sqrt()).abs() < 1e-6, "{l2}");
        assert!((h1 - PI * 0.5f64.sqrt()).abs() < 1e-6, "{h1}");
        // linear functions are reproduced exactly
        let lin = GridFunction::sample(5, |t| 2.0 - 3.0 * t).unwrap();
        let (l2, h1) = fe_error(&lin, |t| 2.0 - 3.0 * t, |_| -3.0);
        assert!(l2 < 1e-15 && h1 < 1e-14);
        // interpolating t² on elements of width h: h⁵/30 and h³/3 per element
        let q = GridFunction::sample(2, |t| t * t).unwrap();
        let (l2, h1) = fe_error(&q, |t| t * t, |t| 2.0 * t);
        assert!((l2 - (1.0f64 / 480.0).sqrt()).abs() < 1e-14, "{l2}");
        assert!((h1 - (1.0f64 / 12.0).sqrt()).abs() < 1e-14, "{h1}");
    }

    #[test]
    fn analytic_norms() {
        let z = GridFunction::zeros(1000).unwrap();
        let s = GridFunction::sample(1000, |t| (PI * t).sin()).unwrap();
        let (l2, h1) = grid_norms(&s, &z).unwrap();
        assert!((l2 - 0.70711).abs() < 1e-5, "{l2}");
        assert!((h1 - 2.2214).abs() < 1e-4, "{h1}");
        let lin = GridFunction::sample(7, |t| 1.0 - t).unwrap();
        let (l2, h1) = grid_norms(&lin, &GridFunction::zeros(7).unwrap()).unwrap();
        assert!((l2 - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        assert!((h1 - 1.0).abs() < 1e-14);
        assert_eq!(grid_norms(&s, &s).unwrap(), (0.0, 0.0));
        assert!(grid_norms(&s, &lin).is_err());
        let (_, full) = grid_norms_with(&lin, &GridFunction::zeros(7).unwrap(), NormKind::Full).unwrap();
        assert!((full - (4.0f64 / 3.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn simpson_weights_integrate_cubics() {
        for m in [2, 3, 5, 10, 11] {
            let w = simpson_weights(m);
            let v: f64 = w.iter().enumerate().map(|(j, w)| w * (j as f64 / m as f64).powi(3)).sum();
            assert!((v - 0.25).abs() < 1e-14, "m={m}");
        }
    }

    #[test]
    fn averages() {
        let s = crate::stargraph::StarStage::from_groups(vec![0, 0, 1], vec![1.0, 2.0]).unwrap();
        let f = ForcingField::per_edge_constant(vec![1.0, 3.0, 0.0]);
        let sol = femsolve::solve_stage(&s, &f, 0.0, 10, LoadRule::Gauss3).unwrap();
        let avg = cesaro_solution_average(&sol, 0).unwrap();
        for j in 0..=10 {
            let mean = 0.5 * (sol.edge(1).values()[j] + sol.edge(2).values()[j]);
            assert!((avg.values()[j] - mean).abs() < 1e-15);
        }
        assert_eq!(avg.values()[0], sol.center_value());
        let single = cesaro_solution_average(&sol, 1).unwrap();
        assert_eq!(single.values(), sol.edge(3).values());

        let tiny = crate::stargraph::StarStage::from_groups(vec![1, 1], vec![1.0, 2.0]).unwrap();
        let sol = femsolve::solve_stage(&tiny, &f, 0.0, 4, LoadRule::Gauss3).unwrap();
        assert!(matches!(cesaro_solution_average(&sol, 0), Err(Error::EmptyGroup { .. })));
    }

    #[test]
    fn zero_forcing_table() {
        let mut exp = Experiment::builtin(ExampleId::Constant, 20).unwrap();
        exp.field = ForcingField::builtin(
            ExampleId::Constant,
            FieldParams {
                constant: 0.0,
                ..Default::default()
            },
            0,
        )
        .unwrap();
        let rows = convergence_table(&exp, &[5, 10], Reference::Oracle, NormKind::Seminorm).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.l2_error == 0.0 && r.h1_error == 0.0));
        assert!(convergence_table(&exp, &[10, 5], Reference::Oracle, NormKind::Seminorm).is_err());
    }

    #[test]
    fn ex1_table_shape_and_trend() {
        let exp = Experiment::builtin(ExampleId::Ex1, 100).unwrap();
        let rows = convergence_table(&exp, &[10, 20, 100, 1000], Reference::Oracle, NormKind::Seminorm).unwrap();
        assert_eq!(rows.len(), 8);
        let at = |n, g| rows.iter().find(|r| r.n == n && r.group == g).unwrap();
        assert!((at(1000, 1).l2_error - 5.8352e-4).abs() / 5.8352e-4 < 0.25);
        for g in 1..=2 {
            assert!(at(1000, g).l2_error < at(10, g).l2_error);
            assert!(at(1000, g).h1_error < at(10, g).h1_error);
        }
    }

    #[test]
    fn ex3_upscaled_errors_decrease() {
        let exp = Experiment::builtin(ExampleId::Ex3, 100).unwrap();
        let rows = convergence_table(&exp, &[10, 100, 1000], Reference::Upscaled { m: 400 }, NormKind::Seminorm).unwrap();
        for g in 1..=2 {
            let errs: Vec<f64> = rows.iter().filter(|r| r.group == g).map(|r| r.l2_error).collect();
            assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        }
    }

    #[test]
    fn window_bounds() {
        assert_eq!(cauchy_window(10, 10).unwrap(), 6..=15);
        assert!(cauchy_window(6, 10).is_err());
        assert!(cauchy_window(7, 10).is_ok());
        assert!(cauchy_window(10, 3).is_err());
    }

    #[test]
    fn symmetric_constant_family_is_stationary() {
        // One coefficient value and an ℓ-independent load: every stage has the
        // same symmetric solution.
        let field = ForcingField::builtin(ExampleId::Constant, FieldParams { constant: 2.0, ..Default::default() }, 0).unwrap();
        let single = Experiment::new(
            field,
            CoefficientSource::Random { seed: 1, probs: vec![1.0], values: vec![2.0] },
            CenterDatum::default(),
            20,
            LoadRule::Gauss3,
        );
        let (a, b) = (single.group_averages(10).unwrap(), single.group_averages(11).unwrap());
        let (l2, h1) = grid_norms(&a[0], &b[0]).unwrap();
        assert!(l2 < 1e-14 && h1 < 1e-13, "{l2} {h1}");
        let rows = cauchy_diagnostics(&single, &[10, 20], 10, NormKind::Seminorm).unwrap();
        assert!(rows.iter().all(|r| r.epsilon < 1e-14 && r.delta < 1e-13), "{rows:?}");
    }

    #[test]
    fn cauchy_scales_linearly_with_forcing() {
        let base = Experiment::builtin(ExampleId::Ex4, 40).unwrap();
        let lambda = -2.5;
        let scaled = Experiment::new(
            ForcingField::builtin(ExampleId::Ex4, FieldParams { scale: lambda, ..Default::default() }, 0).unwrap(),
            CoefficientSource::Deterministic,
            CenterDatum::default(),
            40,
            LoadRule::Gauss3,
        );
        let a = cauchy_diagnostics(&base, &[10, 30], 10, NormKind::Seminorm).unwrap();
        let b = cauchy_diagnostics(&scaled, &[10, 30], 10, NormKind::Seminorm).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((y.epsilon - lambda.abs() * x.epsilon).abs() <= 1e-10 * (1.0 + y.epsilon));
            assert!((y.delta - lambda.abs() * x.delta).abs() <= 1e-10 * (1.0 + y.delta));
        }
    }

    #[test]
    fn ex4_cauchy_decreases() {
        let exp = Experiment::builtin(ExampleId::Ex4, 100).unwrap();
        let rows = cauchy_diagnostics(&exp, &[10, 1000], 10, NormKind::Seminorm).unwrap();
        for g in 1..=2 {
            let e: Vec<f64> = rows.iter().filter(|r| r.group == g).map(|r| r.epsilon).collect();
            assert!(e[1] * 10.0 <= e[0], "{e:?}");
        }
    }

    #[test]
    fn rates() {
        let a = rate_from_values([1e-1, 1e-2, 1e-4, 1e-8]).unwrap();
        assert!((a - 2.08).abs() < 0.005, "{a}");
        let r: f64 = 0.3;
        let g = rate_from_values([r, r * r, r.powi(3), r.powi(4)]).unwrap();
        assert!((g - 1.0).abs() < 1e-12);
        assert!(matches!(rate_from_values([1.0, 2.0, 3.0, 4.0]), Err(Error::UndefinedRate(_))));
        assert!(matches!(rate_estimate(0.0, 1.0, 2.0), Err(Error::UndefinedRate(_))));
    }

    #[test]
    fn weyl() {
        let f = weyl_fraction(100_000, 0.0, PI).unwrap();
        assert!((f - 0.5).abs() <= 0.01);
        for n in [1, 10, 333] {
            assert_eq!(weyl_fraction(n, 0.0, TAU).unwrap(), 1.0);
        }
        assert!(cos_mean(1000).abs() <= 2.09 / 1000.0);
        assert!(weyl_fraction(10, 2.0, 1.0).is_err());
        assert!(weyl_fraction(10, 0.0, 7.0).is_err());
    }

    fn grid(values: &[f64]) -> GridFunction {
        GridFunction::new(values.to_vec()).unwrap()
    }

    proptest! {
        #[test]
        fn norms_form_a_metric(
            a in proptest::collection::vec(-10.0f64..10.0, 9),
            b in proptest::collection::vec(-10.0f64..10.0, 9),
            c in proptest::collection::vec(-10.0f64..10.0, 9),
        ) {
            let (fa, fb, fc) = (grid(&a), grid(&b), grid(&c));
            for kind in [NormKind::Seminorm, NormKind::Full] {
                let ab = grid_norms_with(&fa, &fb, kind).unwrap();
                let ba = grid_norms_with(&fb, &fa, kind).unwrap();
                prop_assert!((ab.0 - ba.0).abs() < 1e-12 && (ab.1 - ba.1).abs() < 1e-12);
                let ac = grid_norms_with(&fa, &fc, kind).unwrap();
                let cb = grid_norms_with(&fc, &fb, kind).unwrap();
                prop_assert!(ab.0 <= ac.0 + cb.0 + 1e-12);
                prop_assert!(ab.1 <= ac.1 + cb.1 + 1e-12);
            }
            let zero = grid_norms(&fa, &fa).unwrap();
            prop_assert_eq!(zero, (0.0, 0.0));
            if a != b {
                prop_assert!(grid_norms(&fa, &fb).unwrap().0 > 0.0);
            }
        }
    }
}
