//! Per-edge radial forcing terms and their averages.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::quadrature;
use crate::stargraph::StarStage;

/// Built-in forcing families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExampleId {
    /// `π² sin(πt) cos ℓ`.
    Ex1,
    /// Ex1 plus a uniform random offset `Z(ℓ) ∈ [-A, A]` per edge.
    Ex2,
    /// Group-dependent sine profile plus a bounded alternating angular term.
    Ex3,
    /// Ex3's radial part plus the unbounded `(-1)^ℓ √ℓ`.
    Ex4,
    /// Sine profiles whose frequency grows with `ℓ`.
    Ex5,
    /// The same constant `c` on every edge.
    Constant,
    /// `F = k (π² sin(πt)(1 - t) + 2π cos(πt))`, i.e. `-k p''` for
    /// `p(t) = sin(πt)(1 - t)`.
    Manufactured,
}

impl ExampleId {
    pub const ALL: [ExampleId; 7] = [
        ExampleId::Ex1,
        ExampleId::Ex2,
        ExampleId::Ex3,
        ExampleId::Ex4,
        ExampleId::Ex5,
        ExampleId::Constant,
        ExampleId::Manufactured,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExampleId::Ex1 => "ex1",
            ExampleId::Ex2 => "ex2",
            ExampleId::Ex3 => "ex3",
            ExampleId::Ex4 => "ex4",
            ExampleId::Ex5 => "ex5",
            ExampleId::Constant => "constant",
            ExampleId::Manufactured => "manufactured",
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExampleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExampleId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown example id `{s}`")))
    }
}

/// Which end of an edge the radial profile measures `t` from.
///
/// The solver always places `t = 0` at the center. With [`Orientation::Rim`]
/// the radial part of a built-in profile is evaluated at `1 - t`; the
/// edge-index dependent (angular) part is unaffected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    #[default]
    Center,
    Rim,
}

impl Orientation {
    #[inline]
    pub fn apply(self, t: f64) -> f64 {
        match self {
            Orientation::Center => t,
            Orientation::Rim => 1.0 - t,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::Center => "center",
            Orientation::Rim => "rim",
        }
    }
}

impl FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "center" => Ok(Orientation::Center),
            "rim" => Ok(Orientation::Rim),
            _ => Err(Error::invalid(format!("unknown orientation `{s}`"))),
        }
    }
}

/// Parameters of the built-in families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldParams {
    /// Value of the constant family.
    pub constant: f64,
    /// Bound `A` of the Ex2 offsets `Z ~ U[-A, A]`.
    pub amplitude: f64,
    /// Coefficient `k` baked into the manufactured family.
    pub manufactured_k: f64,
    /// Overall multiplier applied to every value.
    pub scale: f64,
    pub orientation: Orientation,
}

impl Default for FieldParams {
    fn default() -> Self {
        FieldParams {
            constant: 1.0,
            amplitude: 100.0,
            manufactured_k: 1.0,
            scale: 1.0,
            orientation: Orientation::Center,
        }
    }
}

/// Closed-form Cesàro limit of the forcing over one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitProfile {
    /// `amp · sin(freq · π · τ) + offset` with `τ` the oriented coordinate.
    Sine {
        amp: f64,
        freq: f64,
        offset: f64,
        orientation: Orientation,
    },
    /// The manufactured load with coefficient `k`, times `scale`.
    Manufactured { k: f64, scale: f64 },
}

impl LimitProfile {
    pub const ZERO: LimitProfile = LimitProfile::Sine {
        amp: 0.0,
        freq: 0.0,
        offset: 0.0,
        orientation: Orientation::Center,
    };

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            LimitProfile::Sine {
                amp,
                freq,
                offset,
                orientation,
            } => amp * (freq * PI * orientation.apply(t)).sin() + offset,
            LimitProfile::Manufactured { k, scale } => scale * manufactured_load(k, t),
        }
    }
}

fn manufactured_load(k: f64, t: f64) -> f64 {
    k * (PI * PI * (PI * t).sin() * (1.0 - t) + TAU * (PI * t).cos())
}

type EdgeFn = dyn Fn(usize, f64) -> f64 + Send + Sync;

#[derive(Clone)]
enum Family {
    Builtin(ExampleId),
    Custom { name: String, f: Arc<EdgeFn> },
}

/// Number of Ex2 offsets drawn eagerly at construction.
const OFFSET_CACHE: usize = 4096;

/// A forcing term `F_ℓ(t)` on every edge of every stage.
#[derive(Clone)]
pub struct ForcingField {
    family: Family,
    params: FieldParams,
    seed: Option<u64>,
    offsets: Arc<Vec<f64>>,
    bounded_l2: Option<f64>,
    limits: Option<Vec<LimitProfile>>,
}

impl fmt::Debug for ForcingField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ForcingField")
            .field("family", &self.family_name())
            .field("params", &self.params)
            .field("seed", &self.seed)
            .finish()
    }
}

/// Offset `Z(ℓ)` from the forcing stream of `seed`.
///
/// Each edge consumes one `u64` (two 32-bit words), so edge `ℓ` can be
/// reached directly by seeking. Stream 1 keeps the offsets independent of
/// the coefficient draws, which use stream 0.
fn draw_offset(seed: u64, edge: usize, amplitude: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng.set_word_pos(2 * (edge as u128 - 1));
    let u: f64 = rng.gen();
    amplitude * (2.0 * u - 1.0)
}

fn draw_offsets(seed: u64, count: usize, amplitude: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    (0..count)
        .map(|_| {
            let u: f64 = rng.gen();
            amplitude * (2.0 * u - 1.0)
        })
        .collect()
}

#[inline]
fn ex3_radial(edge: usize, tau: f64) -> f64 {
    if edge % 3 == 0 {
        4.0 * PI * PI * (TAU * tau).sin()
    } else {
        PI * PI * (PI * tau).sin()
    }
}

/// Ex3 angular term: alternating in blocks of six edges, magnitude
/// `10 · (ℓ mod 2π)`.
#[inline]
pub fn ex3_angular(edge: usize) -> f64 {
    let sign = if (edge / 6) % 2 == 0 { 1.0 } else { -1.0 };
    sign * 10.0 * (edge as f64).rem_euclid(TAU)
}

#[inline]
fn ex4_angular(edge: usize) -> f64 {
    let sign = if edge % 2 == 0 { 1.0 } else { -1.0 };
    sign * (edge as f64).sqrt()
}

impl ForcingField {
    /// One of the built-in families. `seed` is used only by Ex2.
    pub fn builtin(id: ExampleId, params: FieldParams, seed: u64) -> Result<Self> {
        if !params.scale.is_finite() {
            return Err(Error::invalid("forcing scale must be finite"));
        }
        if id == ExampleId::Ex2 && !(params.amplitude.is_finite() && params.amplitude >= 0.0) {
            return Err(Error::invalid("Ex2 amplitude must be finite and >= 0"));
        }
        if id == ExampleId::Constant && !params.constant.is_finite() {
            return Err(Error::invalid("constant forcing must be finite"));
        }
        let s = params.scale;
        let o = params.orientation;
        let sine = |amp: f64, freq: f64| LimitProfile::Sine {
            amp: s * amp,
            freq,
            offset: 0.0,
            orientation: o,
        };
        let pi2 = PI * PI;
        let sup_sine = pi2 / 2f64.sqrt();
        let (bounded_l2, limits) = match id {
            ExampleId::Ex1 => (Some(sup_sine), Some(vec![LimitProfile::ZERO; 2])),
            ExampleId::Ex2 => (
                Some(sup_sine + params.amplitude),
                Some(vec![LimitProfile::ZERO; 2]),
            ),
            ExampleId::Ex3 => (
                Some(4.0 * sup_sine + 10.0 * TAU),
                Some(vec![sine(4.0 * pi2, 2.0), sine(pi2, 1.0)]),
            ),
            ExampleId::Ex4 => (None, None),
            ExampleId::Ex5 => (Some(4.0 * sup_sine), None),
            ExampleId::Constant => (
                Some(params.constant.abs()),
                Some(vec![
                    LimitProfile::Sine {
                        amp: 0.0,
                        freq: 0.0,
                        offset: s * params.constant,
                        orientation: o,
                    };
                    2
                ]),
            ),
            ExampleId::Manufactured => (
                None,
                Some(vec![
                    LimitProfile::Manufactured {
                        k: params.manufactured_k,
                        scale: s,
                    };
                    2
                ]),
            ),
        };
        let bounded_l2 = bounded_l2.map(|m| m * s.abs());
        let (seed, offsets) = if id == ExampleId::Ex2 {
            (
                Some(seed),
                Arc::new(draw_offsets(seed, OFFSET_CACHE, params.amplitude)),
            )
        } else {
            (None, Arc::new(Vec::new()))
        };
        Ok(ForcingField {
            family: Family::Builtin(id),
            params,
            seed,
            offsets,
            bounded_l2,
            limits,
        })
    }

    /// A field from an arbitrary function of `(ℓ, t)`.
    pub fn from_fn<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(usize, f64) -> f64 + Send + Sync + 'static,
    {
        ForcingField {
            family: Family::Custom {
                name: name.into(),
                f: Arc::new(f),
            },
            params: FieldParams::default(),
            seed: None,
            offsets: Arc::new(Vec::new()),
            bounded_l2: None,
            limits: None,
        }
    }

    /// Constant `values[ℓ - 1]` on edge `ℓ`.
    pub fn per_edge_constant(values: Vec<f64>) -> Self {
        Self::from_fn("per-edge-constant", move |l, _| values[l - 1])
    }

    pub fn with_bounded_l2(mut self, bound: Option<f64>) -> Self {
        self.bounded_l2 = bound;
        self
    }

    pub fn with_group_limits(mut self, limits: Option<Vec<LimitProfile>>) -> Self {
        self.limits = limits;
        self
    }

    pub fn example(&self) -> Option<ExampleId> {
        match self.family {
            Family::Builtin(id) => Some(id),
            Family::Custom { .. } => None,
        }
    }

    pub fn family_name(&self) -> &str {
        match &self.family {
            Family::Builtin(id) => id.as_str(),
            Family::Custom { name, .. } => name,
        }
    }

    pub fn params(&self) -> &FieldParams {
        &self.params
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Uniform bound `M` on `‖F_e‖_{L²(e)}`, when one exists.
    pub fn bounded_l2(&self) -> Option<f64> {
        self.bounded_l2
    }

    /// Closed-form group limits `F̄_i` for the experiment grouping.
    pub fn known_group_limit(&self) -> Option<&[LimitProfile]> {
        self.limits.as_deref()
    }

    fn offset(&self, edge: usize) -> f64 {
        self.offsets
            .get(edge - 1)
            .copied()
            .unwrap_or_else(|| draw_offset(self.seed.unwrap_or(0), edge, self.params.amplitude))
    }

    /// `F_ℓ(t)` for one-based edge `ℓ` and `t ∈ [0, 1]` measured from the
    /// center.
    pub fn eval(&self, edge: usize, t: f64) -> f64 {
        let id = match &self.family {
            Family::Builtin(id) => *id,
            Family::Custom { f, .. } => return f(edge, t),
        };
        let tau = self.params.orientation.apply(t);
        let raw = match id {
            ExampleId::Ex1 => PI * PI * (PI * tau).sin() * (edge as f64).cos(),
            ExampleId::Ex2 => {
                PI * PI * (PI * tau).sin() * (edge as f64).cos() + self.offset(edge)
            }
            ExampleId::Ex3 => ex3_radial(edge, tau) + ex3_angular(edge),
            ExampleId::Ex4 => ex3_radial(edge, tau) + ex4_angular(edge),
            ExampleId::Ex5 => {
                let l = edge as f64;
                if edge % 3 == 0 {
                    4.0 * PI * PI * (TAU * tau * l).sin()
                } else {
                    PI * PI * (PI * tau * l).sin()
                }
            }
            ExampleId::Constant => self.params.constant,
            ExampleId::Manufactured => manufactured_load(self.params.manufactured_k, tau),
        };
        self.params.scale * raw
    }
}

/// `∫₀¹ (1 - t) F_ℓ(t) dt`: the load tested against the hat function that
/// is one at the center and zero at the rim.
pub fn edge_load_moment(field: &ForcingField, edge: usize) -> f64 {
    quadrature::integrate(|t| (1.0 - t) * field.eval(edge, t))
}

/// Values on the uniform grid `t_j = j/m`, `j = 0..=m`, with `t = 0` at the
/// center.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::invalid(format!(
                "grid function needs at least 2 elements, got {}",
                values.len().saturating_sub(1)
            )));
        }
        Ok(GridFunction { values })
    }

    pub fn zeros(m: usize) -> Result<Self> {
        Self::new(vec![0.0; m + 1])
    }

    pub fn sample<F: Fn(f64) -> f64>(m: usize, f: F) -> Result<Self> {
        Self::new((0..=m).map(|j| f(j as f64 / m as f64)).collect())
    }

    /// Element count.
    pub fn m(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.m() as f64
    }

    /// Piecewise-linear interpolation at `t ∈ [0, 1]`.
    pub fn eval(&self, t: f64) -> f64 {
        let m = self.m();
        let x = (t.clamp(0.0, 1.0) * m as f64).min(m as f64);
        let j = (x.floor() as usize).min(m - 1);
        let w = x - j as f64;
        (1.0 - w) * self.values[j] + w * self.values[j + 1]
    }

    /// Nodal values on a coarser grid whose nodes are a subset of ours.
    pub fn restrict(&self, m: usize) -> Result<Self> {
        if m == 0 || self.m() % m != 0 {
            return Err(Error::invalid(format!(
                "cannot restrict a grid of {} elements to {m}",
                self.m()
            )));
        }
        let stride = self.m() / m;
        Self::new(self.values.iter().step_by(stride).copied().collect())
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        if self.m() != other.m() {
            return Err(Error::invalid(format!(
                "mesh mismatch: {} vs {} elements",
                self.m(),
                other.m()
            )));
        }
        Self::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }
}

/// Nodewise mean of `F_ℓ` over the edges of `group` at this stage.
pub fn cesaro_forcing_average(
    field: &ForcingField,
    stage: &StarStage,
    group: usize,
    m: usize,
) -> Result<GridFunction> {
    if m < 2 {
        return Err(Error::invalid("grid needs m >= 2"));
    }
    let mut acc = vec![0.0; m + 1];
    let mut count = 0usize;
    for edge in stage.edges_in_group(group) {
        count += 1;
        for (j, a) in acc.iter_mut().enumerate() {
            *a += field.eval(edge, j as f64 / m as f64);
        }
    }
    if count == 0 {
        return Err(Error::EmptyGroup {
            group: group + 1,
            n: stage.n(),
        });
    }
    acc.iter_mut().for_each(|a| *a /= count as f64);
    GridFunction::new(acc)
}

/// Mean of a planar function over the circle of radius `t`, by the
/// trapezoid rule with `points` nodes.
pub fn angular_average<F: Fn(f64, f64) -> f64>(f: F, t: f64, points: usize) -> Result<f64> {
    if points < 4 {
        return Err(Error::invalid("angular average needs at least 4 points"));
    }
    if !(0.0..1.0).contains(&t) {
        return Err(Error::invalid(format!("radius {t} outside [0, 1)")));
    }
    let sum: f64 = (0..points)
        .map(|k| {
            let theta = TAU * k as f64 / points as f64;
            f(t * theta.cos(), t * theta.sin())
        })
        .sum();
    Ok(sum / points as f64)
}
