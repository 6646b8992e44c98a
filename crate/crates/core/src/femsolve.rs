//! P1 finite elements on every edge of a star, coupled through the single
//! center unknown.
//!
//! Each edge has `m` uniform elements. Node 0 is the center and node `m`
//! the rim; the rim value is zero and is not an unknown. The interior nodes
//! of one edge form a tridiagonal block, and all blocks share one column
//! and row for the center value, so the global matrix is an arrowhead:
//!
//! ```text
//! [ A_1            c_1 ] [x_1]   [b_1]
//! [      ...       ... ] [...] = [...]
//! [           A_n  c_n ] [x_n]   [b_n]
//! [ c_1ᵀ ... c_nᵀ   d  ] [ p ]   [ r ]
//! ```
//!
//! The solve eliminates every block with the Thomas algorithm, reduces the
//! center to a scalar Schur complement and back-substitutes.

use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forcing::{ForcingField, GridFunction};
use crate::quadrature::{GAUSS3_NODES, GAUSS3_WEIGHTS};
use crate::stargraph::StarStage;

/// How element loads `∫ F φ_j` are integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadRule {
    /// Three-point Gauss–Legendre per element.
    #[default]
    Gauss3,
    /// Trapezoid rule on element end points, i.e. `F` sampled at the nodes.
    Nodal,
}

impl LoadRule {
    pub fn as_str(self) -> &'static str {
        match self {
            LoadRule::Gauss3 => "gauss3",
            LoadRule::Nodal => "nodal",
        }
    }
}

impl FromStr for LoadRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauss3" => Ok(LoadRule::Gauss3),
            "nodal" => Ok(LoadRule::Nodal),
            _ => Err(Error::invalid(format!("unknown load rule `{s}`"))),
        }
    }
}

/// Nodal load vector `b_j = ∫ F_ℓ φ_j`, `j = 0..=m`, on one edge.
pub fn edge_loads(field: &ForcingField, edge: usize, m: usize, rule: LoadRule) -> Vec<f64> {
    let h = 1.0 / m as f64;
    let mut b = vec![0.0; m + 1];
    match rule {
        LoadRule::Gauss3 => {
            for j in 0..m {
                let left = j as f64 * h;
                let (mut lo, mut hi) = (0.0, 0.0);
                for (x, w) in GAUSS3_NODES.iter().zip(GAUSS3_WEIGHTS.iter()) {
                    let f = w * field.eval(edge, left + x * h);
                    lo += f * (1.0 - x);
                    hi += f * x;
                }
                b[j] += lo * h;
                b[j + 1] += hi * h;
            }
        }
        LoadRule::Nodal => {
            for (j, bj) in b.iter_mut().enumerate() {
                let w = if j == 0 || j == m { 0.5 } else { 1.0 };
                *bj = w * h * field.eval(edge, j as f64 * h);
            }
        }
    }
    b
}

/// Load tested against the P1 hat that is one at the center and zero at the
/// rim, integrated exactly as the assembly does.
pub fn mesh_load_moment(field: &ForcingField, edge: usize, m: usize, rule: LoadRule) -> f64 {
    edge_loads(field, edge, m, rule)
        .iter()
        .enumerate()
        .map(|(j, b)| (1.0 - j as f64 / m as f64) * b)
        .sum()
}

/// One edge's share of the arrowhead system.
///
/// On a uniform mesh the block is the constant tridiagonal
/// `k·m·tridiag(-1, 2, -1)` of size `m - 1`, and the coupling column has the
/// single entry `-k·m` in the first row.
#[derive(Debug, Clone)]
pub struct EdgeBlock {
    pub coeff: f64,
    /// Loads at nodes `0..=m`. Entry 0 feeds the center row; entry `m`
    /// belongs to the eliminated rim node.
    pub loads: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ArrowheadSystem {
    stage: StarStage,
    m: usize,
    center_datum: f64,
    rule: LoadRule,
    blocks: Vec<EdgeBlock>,
}

impl ArrowheadSystem {
    pub fn stage(&self) -> &StarStage {
        &self.stage
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn blocks(&self) -> &[EdgeBlock] {
        &self.blocks
    }

    pub fn center_datum(&self) -> f64 {
        self.center_datum
    }

    pub fn unknowns(&self) -> usize {
        self.blocks.len() * (self.m - 1) + 1
    }

    pub fn block_diag(&self, edge: usize) -> f64 {
        2.0 * self.blocks[edge - 1].coeff * self.m as f64
    }

    pub fn block_off_diag(&self, edge: usize) -> f64 {
        -self.blocks[edge - 1].coeff * self.m as f64
    }

    pub fn center_diag(&self) -> f64 {
        self.blocks.iter().map(|b| b.coeff).sum::<f64>() * self.m as f64
    }

    pub fn center_rhs(&self) -> f64 {
        self.center_datum + self.blocks.iter().map(|b| b.loads[0]).sum::<f64>()
    }

    /// `‖A x - b‖∞ / ‖b‖∞` for the unknowns held by `solution` (the plain
    /// `‖A x - b‖∞` when `b = 0`).
    pub fn relative_residual(&self, solution: &StageSolution) -> f64 {
        let m = self.m;
        let mf = m as f64;
        let c = solution.center_value;
        let mut worst = 0f64;
        let mut scale = self.center_rhs().abs();
        let mut center_row = self.center_diag() * c;
        for (block, grid) in self.blocks.iter().zip(&solution.edges) {
            let km = block.coeff * mf;
            let p = grid.values();
            center_row -= km * p[1];
            for j in 1..m {
                let ax = km * (2.0 * p[j] - p[j - 1] - p[j + 1]);
                worst = worst.max((ax - block.loads[j]).abs());
                scale = scale.max(block.loads[j].abs());
            }
        }
        worst = worst.max((center_row - self.center_rhs()).abs());
        if scale > 0.0 {
            worst / scale
        } else {
            worst
        }
    }
}

/// Assembles stage `n`'s system with center datum `h` and `m` elements per
/// edge.
pub fn assemble(
    stage: &StarStage,
    field: &ForcingField,
    h: f64,
    m: usize,
    rule: LoadRule,
) -> Result<ArrowheadSystem> {
    if m < 2 {
        return Err(Error::invalid(format!("need m >= 2 elements per edge, got {m}")));
    }
    if !h.is_finite() {
        return Err(Error::invalid("center datum must be finite"));
    }
    let blocks = (1..=stage.n())
        .into_par_iter()
        .map(|edge| EdgeBlock {
            coeff: stage.coeff(edge),
            loads: edge_loads(field, edge, m, rule),
        })
        .collect();
    Ok(ArrowheadSystem {
        stage: stage.clone(),
        m,
        center_datum: h,
        rule,
        blocks,
    })
}

/// Partial solution of one block: `A⁻¹ b` and `A⁻¹ (k m e₁)`.
struct BlockSweep {
    particular: Vec<f64>,
    response: Vec<f64>,
}

fn thomas_sweep(edge: usize, block: &EdgeBlock, m: usize) -> Result<BlockSweep> {
    let size = m - 1;
    let km = block.coeff * m as f64;
    let diag = 2.0 * km;
    let off = -km;
    let mut pivots: Vec<f64> = Vec::with_capacity(size);
    let mut d1: Vec<f64> = Vec::with_capacity(size);
    let mut d2: Vec<f64> = Vec::with_capacity(size);
    for i in 0..size {
        let (pivot, r1, r2) = if i == 0 {
            (diag, block.loads[1], km)
        } else {
            let l = off / pivots[i - 1];
            (diag - l * off, block.loads[i + 1] - l * d1[i - 1], -l * d2[i - 1])
        };
        if !(pivot > 0.0) {
            return Err(Error::NumericalBreakdown(format!(
                "non-positive pivot {pivot} at node {} of edge {edge}",
                i + 1
            )));
        }
        pivots.push(pivot);
        d1.push(r1);
        d2.push(r2);
    }
    for i in (0..size).rev() {
        if i + 1 < size {
            d1[i] -= off * d1[i + 1];
            d2[i] -= off * d2[i + 1];
        }
        d1[i] /= pivots[i];
        d2[i] /= pivots[i];
    }
    Ok(BlockSweep {
        particular: d1,
        response: d2,
    })
}

/// Solves an assembled system by block elimination and a scalar Schur
/// complement on the center.
///
/// Per-edge sweeps may run on any number of threads; the Schur reduction
/// sums in edge order, so the result does not depend on the thread count.
pub fn solve(system: &ArrowheadSystem) -> Result<StageSolution> {
    let m = system.m;
    let mf = m as f64;
    let sweeps: Vec<BlockSweep> = system
        .blocks
        .par_iter()
        .enumerate()
        .map(|(i, b)| thomas_sweep(i + 1, b, m))
        .collect::<Result<_>>()?;

    let mut schur = system.center_diag();
    let mut rhs = system.center_rhs();
    for (block, sweep) in system.blocks.iter().zip(&sweeps) {
        let km = block.coeff * mf;
        schur -= km * sweep.response[0];
        rhs += km * sweep.particular[0];
    }
    if !(schur > 0.0) {
        return Err(Error::NumericalBreakdown(format!(
            "non-positive center Schur complement {schur} at stage n = {}",
            system.stage.n()
        )));
    }
    let center = rhs / schur;

    let edges = sweeps
        .into_par_iter()
        .map(|sweep| {
            let mut values = Vec::with_capacity(m + 1);
            values.push(center);
            values.extend(
                sweep
                    .particular
                    .iter()
                    .zip(&sweep.response)
                    .map(|(w, y)| w + center * y),
            );
            values.push(0.0);
            GridFunction::new(values)
        })
        .collect::<Result<_>>()?;

    Ok(StageSolution {
        stage: system.stage.clone(),
        m,
        center_value: center,
        rule: system.rule,
        edges,
        center_loads: system.blocks.iter().map(|b| b.loads[0]).collect(),
    })
}

/// Assembles and solves in one call.
pub fn solve_stage(
    stage: &StarStage,
    field: &ForcingField,
    h: f64,
    m: usize,
    rule: LoadRule,
) -> Result<StageSolution> {
    solve(&assemble(stage, field, h, m, rule)?)
}

/// The discrete stage solution `pⁿ`.
#[derive(Debug, Clone)]
pub struct StageSolution {
    stage: StarStage,
    m: usize,
    center_value: f64,
    rule: LoadRule,
    edges: Vec<GridFunction>,
    /// Load `b_0` of each edge at the center node.
    center_loads: Vec<f64>,
}

impl StageSolution {
    pub fn stage(&self) -> &StarStage {
        &self.stage
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn center_value(&self) -> f64 {
        self.center_value
    }

    pub fn load_rule(&self) -> LoadRule {
        self.rule
    }

    pub fn edges(&self) -> &[GridFunction] {
        &self.edges
    }

    /// Nodal values on edge `ℓ` (one-based), node 0 at the center.
    pub fn edge(&self, edge: usize) -> &GridFunction {
        &self.edges[edge - 1]
    }

    /// `K(e) ∂p(0)` from the first element's slope.
    pub fn edge_flux_at_center(&self, edge: usize) -> f64 {
        let p = self.edges[edge - 1].values();
        self.stage.coeff(edge) * (p[1] - p[0]) * self.m as f64
    }

    /// The slope flux corrected by the edge's load at the center node.
    /// These sum to `-h` up to rounding, and each satisfies the edge
    /// identity with the mesh moment exactly.
    pub fn load_consistent_flux_at_center(&self, edge: usize) -> f64 {
        self.edge_flux_at_center(edge) + self.center_loads[edge - 1]
    }

    pub fn total_center_flux(&self) -> f64 {
        (1..=self.stage.n())
            .map(|e| self.edge_flux_at_center(e))
            .sum()
    }
}

/// Relative defect of `p(0) Σ K(e) = h + Σ_e ∫ (1 - t) F_e dt`, with the
/// moments integrated by the solution's own load rule. The identity holds
/// exactly for the discrete solution because the test function is in the
/// P1 space.
pub fn center_identity_residual(solution: &StageSolution, field: &ForcingField, h: f64) -> f64 {
    let stage = solution.stage();
    let (mut sum_moments, mut abs_moments) = (0.0, 0.0);
    for edge in 1..=stage.n() {
        let mom = mesh_load_moment(field, edge, solution.m(), solution.load_rule());
        sum_moments += mom;
        abs_moments += mom.abs();
    }
    let sum_k: f64 = stage.coeffs().iter().sum();
    (solution.center_value() * sum_k - h - sum_moments).abs() / (1.0 + h.abs() + abs_moments)
}

/// Defect of `K p(0) + K ∂p(0) = ∫ (1 - t) F_ℓ dt` on one edge. The slope
/// is first-order accurate, so this is `O(1/m)`.
pub fn edge_identity_residual(solution: &StageSolution, field: &ForcingField, edge: usize) -> f64 {
    let k = solution.stage().coeff(edge);
    let moment = crate::forcing::edge_load_moment(field, edge);
    (k * solution.center_value() + solution.edge_flux_at_center(edge) - moment).abs()
}
