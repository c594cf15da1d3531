//! Numeric checks of candidate solutions against the loaded mKdV equation
//!
//! ```text
//! q_t − 6q²q_x + q_xxx − L(t)·q_x = 0,      L(t) = γ(t)·q(0,t)
//! ```
//!
//! * [`residual`] applies fourth-order central stencils to a sampled field.
//! * [`convergence_order`] repeats it under dyadic refinement and fits the
//!   observed order.
//! * [`simulate_mol`] integrates the equation forward by the method of lines
//!   and compares against the analytic field.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::solutions::{LoadedWave, SolutionError};

/// Extra cells excluded on each side of a pole, beyond the stencil reach.
pub const POLE_HALO: usize = 5;
/// Reach of the widest stencil in x.
const X_REACH: usize = 3;
/// Reach of the time stencil.
const T_REACH: usize = 2;
/// Residual aborts when more than this fraction of cells is pole-excluded.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.10;
/// Default explicit step factor: `ht = factor·hx³`.
pub const DEFAULT_STABILITY_FACTOR: f64 = 0.2;
/// MoL values beyond this magnitude count as blow-up.
pub const BLOWUP_LIMIT: f64 = 1e6;

/// Fourth-order central stencils.
pub mod stencil {
    /// First derivative from `f(x−2h) .. f(x+2h)`.
    #[inline]
    pub fn d1(f: &[f64; 5], h: f64) -> f64 {
        (f[0] - 8.0 * f[1] + 8.0 * f[3] - f[4]) / (12.0 * h)
    }

    /// Third derivative from `f(x−3h) .. f(x+3h)`.
    #[inline]
    pub fn d3(f: &[f64; 7], h: f64) -> f64 {
        (f[0] - 8.0 * f[1] + 13.0 * f[2] - 13.0 * f[4] + 8.0 * f[5] - f[6]) / (8.0 * h * h * h)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{0}")]
pub struct EvalFailure(pub String);

impl From<SolutionError> for EvalFailure {
    fn from(e: SolutionError) -> Self {
        EvalFailure(e.to_string())
    }
}

/// A field `q(x,t)` that can be sampled on a grid.
pub trait Field: Sync {
    /// `Ok(None)` marks a pole-guarded point.
    fn value(&self, x: f64, t: f64) -> Result<Option<f64>, EvalFailure>;

    /// Samples along one time row. Points closer than `guard` (in x) to a
    /// singularity may also come back as `None`.
    fn row(&self, t: f64, xs: &[f64], guard: f64) -> Result<Vec<Option<f64>>, EvalFailure> {
        let _ = guard;
        xs.par_iter().map(|&x| self.value(x, t)).collect()
    }
}

impl<F> Field for F
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    fn value(&self, x: f64, t: f64) -> Result<Option<f64>, EvalFailure> {
        Ok(Some(self(x, t)))
    }
}

impl Field for LoadedWave {
    fn value(&self, x: f64, t: f64) -> Result<Option<f64>, EvalFailure> {
        match LoadedWave::value(self, x, t) {
            Ok(v) => Ok(Some(v)),
            Err(SolutionError::PoleProximity { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn row(&self, t: f64, xs: &[f64], guard: f64) -> Result<Vec<Option<f64>>, EvalFailure> {
        let phase = self.phase(t)?;
        xs.par_iter()
            .map(|&x| {
                if self.pole_distance_x(x, phase).is_some_and(|d| d < guard) {
                    return Ok(None);
                }
                match self.value_at_phase(x, phase) {
                    Ok(v) => Ok(Some(v)),
                    Err(SolutionError::PoleProximity { .. }) => Ok(None),
                    Err(e) => Err(e.into()),
                }
            })
            .collect()
    }
}

/// A field shifted by a constant, for sensitivity checks.
pub struct Perturbed<'a, F: Field + ?Sized> {
    pub inner: &'a F,
    pub offset: f64,
}

impl<F: Field + ?Sized> Field for Perturbed<'_, F> {
    fn value(&self, x: f64, t: f64) -> Result<Option<f64>, EvalFailure> {
        Ok(self.inner.value(x, t)?.map(|v| v + self.offset))
    }

    fn row(&self, t: f64, xs: &[f64], guard: f64) -> Result<Vec<Option<f64>>, EvalFailure> {
        Ok(self
            .inner
            .row(t, xs, guard)?
            .into_iter()
            .map(|v| v.map(|v| v + self.offset))
            .collect())
    }
}

/// The load coefficient `L(t)` multiplying `q_x`.
pub trait Loading: Sync {
    fn value(&self, t: f64) -> Result<f64, EvalFailure>;
}

impl<F> Loading for F
where
    F: Fn(f64) -> f64 + Sync,
{
    fn value(&self, t: f64) -> Result<f64, EvalFailure> {
        Ok(self(t))
    }
}

/// Which load coefficient to pair with a wave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadingModel {
    /// `γ(t)·q(0,t)` with the analytic trace.
    Derived,
    /// Alternative closed form: `k³` trigonometric term, no `1/k` in the rational case.
    Printed,
}

pub struct WaveLoading<'a> {
    pub wave: &'a LoadedWave,
    pub model: LoadingModel,
}

impl<'a> WaveLoading<'a> {
    pub fn derived(wave: &'a LoadedWave) -> Self {
        WaveLoading {
            wave,
            model: LoadingModel::Derived,
        }
    }

    pub fn printed(wave: &'a LoadedWave) -> Self {
        WaveLoading {
            wave,
            model: LoadingModel::Printed,
        }
    }
}

impl Loading for WaveLoading<'_> {
    fn value(&self, t: f64) -> Result<f64, EvalFailure> {
        Ok(match self.model {
            LoadingModel::Derived => self.wave.loading(t)?,
            LoadingModel::Printed => self.wave.printed_loading(t)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("TooManyPoles: {excluded} of {total} cells excluded")]
    TooManyPoles { excluded: usize, total: usize },
    #[error("EvaluationFailure at x = {x}, t = {t}: {message}")]
    EvaluationFailure { x: f64, t: f64, message: String },
    #[error("need at least 3 refinement levels, got {0}")]
    InsufficientRefinements(usize),
    #[error("residual vanished at level {level}; no slope to fit")]
    DegenerateResidual { level: usize },
    #[error("PoleInWindow at x = {x}, t = {t}")]
    PoleInWindow { x: f64, t: f64 },
    #[error("Instability: |q| exceeded {limit:e} at t = {t}")]
    Instability { t: f64, limit: f64 },
    #[error("time step {ht:e} exceeds the stability bound {bound:e}")]
    StabilityViolation { ht: f64, bound: f64 },
}

/// Uniform space-time grid; both end points included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub x0: f64,
    pub x1: f64,
    pub nx: usize,
    pub t0: f64,
    pub t1: f64,
    pub nt: usize,
}

impl Grid {
    pub const MIN_POINTS: usize = 16;

    pub fn new(x0: f64, x1: f64, nx: usize, t0: f64, t1: f64, nt: usize) -> Result<Self, VerifyError> {
        let g = Grid {
            x0,
            x1,
            nx,
            t0,
            t1,
            nt,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), VerifyError> {
        let finite = [self.x0, self.x1, self.t0, self.t1].iter().all(|v| v.is_finite());
        if !finite || self.x1 <= self.x0 || self.t1 <= self.t0 {
            return Err(VerifyError::InvalidGrid("need x1 > x0 and t1 > t0".into()));
        }
        if self.nx < Self::MIN_POINTS || self.nt < Self::MIN_POINTS {
            return Err(VerifyError::InvalidGrid(format!(
                "need at least {} points per axis",
                Self::MIN_POINTS
            )));
        }
        Ok(())
    }

    pub fn hx(&self) -> f64 {
        (self.x1 - self.x0) / (self.nx - 1) as f64
    }

    pub fn ht(&self) -> f64 {
        (self.t1 - self.t0) / (self.nt - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx()
    }

    pub fn t(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.ht()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ts(&self) -> Vec<f64> {
        (0..self.nt).map(|j| self.t(j)).collect()
    }

    /// Halve both spacings over the same window.
    pub fn refine(&self) -> Grid {
        Grid {
            nx: 2 * (self.nx - 1) + 1,
            nt: 2 * (self.nt - 1) + 1,
            ..*self
        }
    }

    /// Same window shifted by `dx` in x.
    pub fn shifted(&self, dx: f64) -> Grid {
        Grid {
            x0: self.x0 + dx,
            x1: self.x1 + dx,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualCell {
    pub x: f64,
    pub t: f64,
    pub q: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub max_abs: f64,
    /// Grid-weighted L2 norm `sqrt(hx·ht·Σ r²)` over included cells.
    pub l2: f64,
    pub excluded_pole_cells: usize,
    pub included_cells: usize,
    #[serde(skip)]
    pub cells: Option<Vec<ResidualCell>>,
}

impl ResidualReport {
    /// CSV with header `x,t,q,residual`; `None` if cells were not kept.
    pub fn to_csv(&self) -> Option<String> {
        let cells = self.cells.as_ref()?;
        let mut out = String::from("x,t,q,residual\n");
        for c in cells {
            out.push_str(&format!("{},{},{},{}\n", c.x, c.t, c.q, c.residual));
        }
        Some(out)
    }
}

/// Mark every column within `radius` of a `None` entry.
fn dilate_poles(row: &[Option<f64>], radius: usize) -> Vec<bool> {
    let n = row.len();
    let mut mask = vec![false; n];
    for (i, v) in row.iter().enumerate() {
        if v.is_none() {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(n - 1);
            mask[lo..=hi].iter_mut().for_each(|m| *m = true);
        }
    }
    mask
}

struct Row {
    t: f64,
    values: Vec<Option<f64>>,
    near_pole: Vec<bool>,
}

/// Residual of the loaded equation over the interior of `grid`.
///
/// Keeps a slab of five time rows. A cell is excluded when any point of its
/// stencil footprint, widened by [`POLE_HALO`] cells in x, is pole-guarded.
pub fn residual(q: &dyn Field, loading: &dyn Loading, grid: &Grid) -> Result<ResidualReport, VerifyError> {
    residual_impl(q, loading, grid, false)
}

/// Like [`residual`] but also keeps every included cell for dumping.
pub fn residual_with_cells(
    q: &dyn Field,
    loading: &dyn Loading,
    grid: &Grid,
) -> Result<ResidualReport, VerifyError> {
    residual_impl(q, loading, grid, true)
}

fn residual_impl(
    q: &dyn Field,
    loading: &dyn Loading,
    grid: &Grid,
    keep: bool,
) -> Result<ResidualReport, VerifyError> {
    grid.validate()?;
    let (hx, ht) = (grid.hx(), grid.ht());
    let xs = grid.xs();
    let slab_len = 2 * T_REACH + 1;
    let radius = X_REACH + POLE_HALO;

    let mut slab: VecDeque<Row> = VecDeque::with_capacity(slab_len);
    let mut max_abs = 0.0f64;
    let mut sum_sq = 0.0f64;
    let (mut included, mut excluded) = (0usize, 0usize);
    let mut cells = keep.then(Vec::new);

    for j in 0..grid.nt {
        let t = grid.t(j);
        let values = q.row(t, &xs, hx / 2.0).map_err(|e| VerifyError::EvaluationFailure {
            x: f64::NAN,
            t,
            message: e.0,
        })?;
        let near_pole = dilate_poles(&values, radius);
        if slab.len() == slab_len {
            slab.pop_front();
        }
        slab.push_back(Row { t, values, near_pole });
        if slab.len() < slab_len {
            continue;
        }

        let centre = &slab[T_REACH];
        let tc = centre.t;
        let load = loading.value(tc).map_err(|e| VerifyError::EvaluationFailure {
            x: f64::NAN,
            t: tc,
            message: e.0,
        })?;

        for i in X_REACH..grid.nx - X_REACH {
            if slab.iter().any(|r| r.near_pole[i]) {
                excluded += 1;
                continue;
            }
            // No None within the dilated footprint, so unwrap is safe.
            let at = |r: &Row, c: usize| r.values[c].unwrap();
            let qx_pts: [f64; 5] = std::array::from_fn(|s| at(centre, i + s - 2));
            let qxxx_pts: [f64; 7] = std::array::from_fn(|s| at(centre, i + s - 3));
            let qt_pts: [f64; 5] = std::array::from_fn(|s| at(&slab[s], i));
            let qv = qx_pts[2];
            let q_x = stencil::d1(&qx_pts, hx);
            let q_xxx = stencil::d3(&qxxx_pts, hx);
            let q_t = stencil::d1(&qt_pts, ht);
            let r = q_t - 6.0 * qv * qv * q_x + q_xxx - load * q_x;
            if !r.is_finite() {
                return Err(VerifyError::EvaluationFailure {
                    x: xs[i],
                    t: tc,
                    message: "non-finite residual".into(),
                });
            }
            max_abs = max_abs.max(r.abs());
            sum_sq += r * r;
            included += 1;
            if let Some(cells) = cells.as_mut() {
                cells.push(ResidualCell {
                    x: xs[i],
                    t: tc,
                    q: qv,
                    residual: r,
                });
            }
        }
    }

    let total = included + excluded;
    if excluded as f64 > MAX_EXCLUDED_FRACTION * total as f64 {
        return Err(VerifyError::TooManyPoles { excluded, total });
    }
    Ok(ResidualReport {
        max_abs,
        l2: (sum_sq * hx * ht).sqrt(),
        excluded_pole_cells: excluded,
        included_cells: included,
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementLevel {
    pub nx: usize,
    pub nt: usize,
    pub hx: f64,
    pub ht: f64,
    pub max_abs: f64,
    pub l2: f64,
    pub excluded_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    /// Least-squares slope of `ln(max_abs)` against `ln(hx)`.
    pub order: f64,
    /// Coarsest first.
    pub levels: Vec<RefinementLevel>,
}

impl ConvergenceStudy {
    pub fn finest(&self) -> &RefinementLevel {
        self.levels.last().unwrap()
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Residuals on `refinements` dyadically refined grids starting at `grid`.
pub fn convergence_order(
    q: &dyn Field,
    loading: &dyn Loading,
    grid: &Grid,
    refinements: usize,
) -> Result<ConvergenceStudy, VerifyError> {
    if refinements < 3 {
        return Err(VerifyError::InsufficientRefinements(refinements));
    }
    let mut levels = Vec::with_capacity(refinements);
    let mut g = *grid;
    for level in 0..refinements {
        let rep = residual(q, loading, &g)?;
        if rep.max_abs == 0.0 {
            return Err(VerifyError::DegenerateResidual { level });
        }
        levels.push(RefinementLevel {
            nx: g.nx,
            nt: g.nt,
            hx: g.hx(),
            ht: g.ht(),
            max_abs: rep.max_abs,
            l2: rep.l2,
            excluded_cells: rep.excluded_pole_cells,
        });
        g = g.refine();
    }
    let lx: Vec<f64> = levels.iter().map(|l| l.hx.ln()).collect();
    let ly: Vec<f64> = levels.iter().map(|l| l.max_abs.ln()).collect();
    Ok(ConvergenceStudy {
        order: fit_slope(&lx, &ly),
        levels,
    })
}

/// Spatial window and time interval for a method-of-lines run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MolWindow {
    pub x0: f64,
    pub x1: f64,
    pub nx: usize,
    pub t0: f64,
    pub t1: f64,
}

impl MolWindow {
    pub fn validate(&self) -> Result<(), VerifyError> {
        let finite = [self.x0, self.x1, self.t0, self.t1].iter().all(|v| v.is_finite());
        if !finite || self.x1 <= self.x0 || self.t1 < self.t0 {
            return Err(VerifyError::InvalidGrid("need x1 > x0 and t1 >= t0".into()));
        }
        if self.nx < Grid::MIN_POINTS {
            return Err(VerifyError::InvalidGrid(format!(
                "need at least {} points in x",
                Grid::MIN_POINTS
            )));
        }
        Ok(())
    }

    pub fn hx(&self) -> f64 {
        (self.x1 - self.x0) / (self.nx - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MolConfig {
    /// `ht ≤ factor·hx³`.
    pub stability_factor: f64,
    /// Requested step; defaults to the stability bound.
    pub ht: Option<f64>,
    /// Refuse (rather than shrink) a step above the bound.
    pub strict: bool,
}

impl Default for MolConfig {
    fn default() -> Self {
        MolConfig {
            stability_factor: DEFAULT_STABILITY_FACTOR,
            ht: None,
            strict: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MolState {
    pub t: f64,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MolReport {
    #[serde(skip)]
    pub state: MolState,
    pub linf: f64,
    /// `sqrt(hx·Σ e²)`.
    pub l2: f64,
    pub steps: usize,
    pub ht: f64,
    /// Whether the requested step was reduced to the stability bound.
    pub shrunk: bool,
}

/// Exact values along a row; any point within `guard` of a pole is an error.
fn sample(field: &dyn Field, xs: &[f64], t: f64, guard: f64) -> Result<Vec<f64>, VerifyError> {
    let row = field.row(t, xs, guard).map_err(|e| VerifyError::EvaluationFailure {
        x: f64::NAN,
        t,
        message: e.0,
    })?;
    row.into_iter()
        .zip(xs)
        .map(|(v, &x)| v.ok_or(VerifyError::PoleInWindow { x, t }))
        .collect()
}

struct MolRhs<'a> {
    exact: &'a dyn Field,
    loading: &'a dyn Loading,
    hx: f64,
    left_ghosts: [f64; X_REACH],
    right_ghosts: [f64; X_REACH],
}

impl MolRhs<'_> {
    /// `q_t = 6q²q_x − q_xxx + L(t)q_x` with ghost cells from the exact field.
    fn eval(&self, t: f64, q: &[f64], out: &mut [f64], padded: &mut Vec<f64>) -> Result<(), VerifyError> {
        let left = sample(self.exact, &self.left_ghosts, t, self.hx)?;
        let right = sample(self.exact, &self.right_ghosts, t, self.hx)?;
        let load = self.loading.value(t).map_err(|e| VerifyError::EvaluationFailure {
            x: 0.0,
            t,
            message: e.0,
        })?;
        padded.clear();
        padded.extend_from_slice(&left);
        padded.extend_from_slice(q);
        padded.extend_from_slice(&right);
        let h = self.hx;
        for (i, o) in out.iter_mut().enumerate() {
            let c = i + X_REACH;
            let p = &padded[c - 3..=c + 3];
            let qx = stencil::d1(&[p[1], p[2], p[3], p[4], p[5]], h);
            let qxxx = stencil::d3(&[p[0], p[1], p[2], p[3], p[4], p[5], p[6]], h);
            let qv = p[3];
            *o = 6.0 * qv * qv * qx - qxxx + load * qx;
        }
        Ok(())
    }
}

/// Method-of-lines integration from the exact field at `t0` to `t1`.
///
/// Fourth-order stencils in x, classic RK4 in t with
/// `ht = stability_factor·hx³`. Ghost cells and the load coefficient come
/// from the exact solution at each stage time. The exact field is also
/// sampled once per step; a pole within one x-step is `PoleInWindow`.
pub fn simulate_mol(
    exact: &dyn Field,
    loading: &dyn Loading,
    window: &MolWindow,
    cfg: &MolConfig,
) -> Result<MolReport, VerifyError> {
    window.validate()?;
    let hx = window.hx();
    let xs: Vec<f64> = (0..window.nx).map(|i| window.x0 + i as f64 * hx).collect();
    let bound = cfg.stability_factor * hx.powi(3);
    let (mut ht, mut shrunk) = (bound, false);
    if let Some(req) = cfg.ht {
        if !(req > 0.0 && req.is_finite()) {
            return Err(VerifyError::InvalidGrid(format!("ht must be positive, got {req}")));
        }
        if req > bound {
            if cfg.strict {
                return Err(VerifyError::StabilityViolation { ht: req, bound });
            }
            log::warn!("time step {req:e} exceeds stability bound {bound:e}; shrinking");
            shrunk = true;
        } else {
            ht = req;
        }
    }

    let span = window.t1 - window.t0;
    let steps = if span == 0.0 { 0 } else { (span / ht).ceil() as usize };
    let h = if steps == 0 { 0.0 } else { span / steps as f64 };

    let rhs = MolRhs {
        exact,
        loading,
        hx,
        left_ghosts: std::array::from_fn(|g| window.x0 - (X_REACH - g) as f64 * hx),
        right_ghosts: std::array::from_fn(|g| window.x1 + (g + 1) as f64 * hx),
    };

    let n = xs.len();
    let mut q = sample(exact, &xs, window.t0, hx)?;
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut stage = vec![0.0; n];
    let mut padded = Vec::with_capacity(n + 2 * X_REACH);

    for s in 0..steps {
        let t = window.t0 + s as f64 * h;
        if s > 0 {
            sample(exact, &xs, t, hx)?;
        }
        rhs.eval(t, &q, &mut k1, &mut padded)?;
        axpy(&mut stage, &q, h / 2.0, &k1);
        rhs.eval(t + h / 2.0, &stage, &mut k2, &mut padded)?;
        axpy(&mut stage, &q, h / 2.0, &k2);
        rhs.eval(t + h / 2.0, &stage, &mut k3, &mut padded)?;
        axpy(&mut stage, &q, h, &k3);
        rhs.eval(t + h, &stage, &mut k4, &mut padded)?;
        let mut blown = false;
        for i in 0..n {
            q[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            blown |= !(q[i].abs() <= BLOWUP_LIMIT);
        }
        if blown {
            return Err(VerifyError::Instability {
                t: t + h,
                limit: BLOWUP_LIMIT,
            });
        }
    }

    let t_end = window.t0 + steps as f64 * h;
    let reference = sample(exact, &xs, t_end, hx)?;
    let (mut linf, mut sum_sq) = (0.0f64, 0.0);
    for (a, b) in q.iter().zip(&reference) {
        let e = (a - b).abs();
        linf = linf.max(e);
        sum_sq += e * e;
    }
    Ok(MolReport {
        state: MolState {
            t: t_end,
            x: xs,
            values: q,
        },
        linf,
        l2: (sum_sq * hx).sqrt(),
        steps,
        ht: h,
        shrunk,
    })
}

fn axpy(out: &mut [f64], base: &[f64], a: f64, dir: &[f64]) {
    for ((o, b), d) in out.iter_mut().zip(base).zip(dir) {
        *o = b + a * d;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_exact_on_low_degree_monomials() {
        let h = 0.1;
        let x0 = 0.3;
        for p in 0..=4i32 {
            let f: [f64; 5] = std::array::from_fn(|s| (x0 + (s as f64 - 2.0) * h).powi(p));
            let exact = if p == 0 { 0.0 } else { p as f64 * x0.powi(p - 1) };
            assert!((stencil::d1(&f, h) - exact).abs() < 1e-12, "p = {p}");
        }
        for p in 0..=6i32 {
            let f: [f64; 7] = std::array::from_fn(|s| (x0 + (s as f64 - 3.0) * h).powi(p));
            let exact = if p < 3 {
                0.0
            } else {
                (p * (p - 1) * (p - 2)) as f64 * x0.powi(p - 3)
            };
            assert!((stencil::d3(&f, h) - exact).abs() < 1e-10, "p = {p}");
        }
    }

    #[test]
    fn grid_checks() {
        assert!(Grid::new(0.0, 1.0, 15, 0.0, 1.0, 16).is_err());
        assert!(Grid::new(1.0, 1.0, 16, 0.0, 1.0, 16).is_err());
        assert!(Grid::new(0.0, 1.0, 16, 0.0, -1.0, 16).is_err());
        let g = Grid::new(0.0, 1.0, 17, 0.0, 2.0, 33).unwrap();
        let r = g.refine();
        assert_eq!((r.nx, r.nt), (33, 65));
        assert_eq!(r.hx(), g.hx() / 2.0);
    }

    #[test]
    fn zero_field_has_zero_residual() {
        let g = Grid::new(-1.0, 1.0, 32, 0.0, 1.0, 20).unwrap();
        let rep = residual(&|_x: f64, _t: f64| 0.0, &|t: f64| 3.0 + t.sin(), &g).unwrap();
        assert_eq!(rep.max_abs, 0.0);
        assert_eq!(rep.l2, 0.0);
        assert_eq!(rep.included_cells, (32 - 6) * (20 - 4));
    }

    #[test]
    fn refinement_precondition() {
        let g = Grid::new(-1.0, 1.0, 32, 0.0, 1.0, 20).unwrap();
        let f = |x: f64, t: f64| (x - t).sin();
        assert_eq!(
            convergence_order(&f, &|_t: f64| 0.0, &g, 2),
            Err(VerifyError::InsufficientRefinements(2))
        );
        assert!(matches!(
            convergence_order(&|_x: f64, _t: f64| 0.0, &|_t: f64| 0.0, &g, 3),
            Err(VerifyError::DegenerateResidual { level: 0 })
        ));
    }

    #[test]
    fn affine_field_residual_is_exact() {
        // Every stencil is exact on q = a + b·x + c·t, so the residual is
        // c − 6q²b − L·b to rounding.
        let f = |x: f64, t: f64| 0.5 + 0.25 * x - 0.1 * t;
        let g = Grid::new(0.0, 1.0, 20, 0.0, 1.0, 20).unwrap();
        let rep = residual_with_cells(&f, &|_t: f64| 2.0, &g).unwrap();
        for c in rep.cells.unwrap() {
            let expected = -0.1 - 6.0 * c.q * c.q * 0.25 - 2.0 * 0.25;
            assert!((c.residual - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn dilation_marks_halo() {
        let row = vec![Some(1.0), Some(1.0), None, Some(1.0), Some(1.0), Some(1.0)];
        assert_eq!(dilate_poles(&row, 1), vec![false, true, true, true, false, false]);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let xs: Vec<f64> = [0.1f64, 0.05, 0.025].iter().map(|h| h.ln()).collect();
        let ys: Vec<f64> = [0.1f64, 0.05, 0.025].iter().map(|h| (3.0 * h.powi(4)).ln()).collect();
        assert!((fit_slope(&xs, &ys) - 4.0).abs() < 1e-12);
    }
}
