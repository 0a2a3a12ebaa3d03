//! Iterative beam synthesis under sidelobe, EIRP and null constraints.
//!
//! A candidate design is a centered block of `g x v` active elements with a
//! separable Chebyshev taper (one setpoint per array axis), a progressive
//! phase toward the pointing direction, and null steering by projection.
//! PPE follows in closed form from the EIRP target. The taper setpoints are
//! searched with a damped Gauss-Newton iteration on the measured cut SLLs;
//! smaller apertures are tried only when the full array stalls.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::cut::{sll_from_powers, CutPair, SllReading};
use super::nulling::NullProjector;
use super::{chebyshev_taper, BeamWeights, DirectionTable};
use crate::error::{Error, Result};
use crate::geometry::{ArrayConfig, DirectionAngles, RotationAngles};
use crate::{from_db, to_db};

pub const DEFAULT_ETA: f64 = 0.05;
pub const DEFAULT_COUNTER_MAX: usize = 200;
/// Table limit on radiated EIRP, dBm.
pub const DEFAULT_EIRP_MAX_DBM: f64 = 37.0;

const SETPOINT_MIN_DB: f64 = 5.0;
const SETPOINT_MAX_DB: f64 = 80.0;
const FD_STEP_DB: f64 = 1.0;
const MAX_STEP_DB: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisRequest {
    /// Main-beam direction, world frame.
    pub pointing: DirectionAngles,
    pub sll_min_az_db: f64,
    pub sll_min_el_db: f64,
    pub eirp_target_dbm: f64,
    pub eirp_max_dbm: f64,
    pub nulls: Vec<DirectionAngles>,
    pub k1: f64,
    pub k2: f64,
    pub eta: f64,
    pub counter_max: usize,
}

impl SynthesisRequest {
    pub fn new(pointing: DirectionAngles, sll_min_az_db: f64, sll_min_el_db: f64, eirp_target_dbm: f64) -> Self {
        Self {
            pointing,
            sll_min_az_db,
            sll_min_el_db,
            eirp_target_dbm,
            eirp_max_dbm: DEFAULT_EIRP_MAX_DBM,
            nulls: Vec::new(),
            k1: 1.0,
            k2: 1.0,
            eta: DEFAULT_ETA,
            counter_max: DEFAULT_COUNTER_MAX,
        }
    }

    pub fn with_nulls(mut self, nulls: Vec<DirectionAngles>) -> Self {
        self.nulls = nulls;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sll_min_az_db > 0.0 && self.sll_min_el_db > 0.0)
            || !self.sll_min_az_db.is_finite()
            || !self.sll_min_el_db.is_finite()
        {
            return Err(Error::InvalidArgument("SLL minima must be positive dB values"));
        }
        if !self.eirp_target_dbm.is_finite() {
            return Err(Error::InvalidArgument("EIRP target must be finite"));
        }
        if self.eirp_target_dbm > self.eirp_max_dbm {
            return Err(Error::InvalidArgument("EIRP target exceeds the EIRP limit"));
        }
        if !(self.k1 >= 0.0 && self.k2 >= 0.0 && self.eta > 0.0) {
            return Err(Error::InvalidArgument("cost weights must be non-negative and eta positive"));
        }
        if self.counter_max == 0 {
            return Err(Error::InvalidArgument("counter_max must be at least 1"));
        }
        if !(self.pointing.theta.is_finite() && self.pointing.phi.is_finite()) {
            return Err(Error::InvalidArgument("pointing must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    pub weights: BeamWeights,
    /// `+inf` when the cut has no sidelobe.
    pub achieved_sll_az_db: f64,
    pub achieved_sll_el_db: f64,
    pub achieved_eirp_dbm: f64,
    pub active_rows: usize,
    pub active_cols: usize,
    pub iterations: usize,
    pub cost: f64,
    pub converged: bool,
    /// Chebyshev setpoints along the row (x) and column (z) axes.
    pub taper_sll_x_db: f64,
    pub taper_sll_z_db: f64,
}

impl SynthesisResult {
    /// The worse of the two planes.
    pub fn achieved_sll_db(&self) -> f64 {
        self.achieved_sll_az_db.min(self.achieved_sll_el_db)
    }

    pub fn active_elements(&self) -> usize {
        self.active_rows * self.active_cols
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    rows: usize,
    cols: usize,
    lx: f64,
    lz: f64,
    entries: Vec<Complex64>,
    ppe: f64,
    sll_az: SllReading,
    sll_el: SllReading,
    eirp_dbm: f64,
    cost: f64,
    feasible: bool,
}

impl Candidate {
    fn better_than(&self, other: &Candidate) -> bool {
        match (self.feasible, other.feasible) {
            (true, false) => true,
            (false, true) => false,
            _ => self.cost < other.cost,
        }
    }
}

/// Per-aperture null projector plus the cut responses of its basis vectors.
struct Aperture {
    rows: usize,
    cols: usize,
    projector: NullProjector,
    az_basis: Vec<Vec<Complex64>>,
    el_basis: Vec<Vec<Complex64>>,
}

struct Search<'a> {
    req: &'a SynthesisRequest,
    config: &'a ArrayConfig,
    orientation: RotationAngles,
    cuts: CutPair,
    pointing_table: DirectionTable,
    null_table: DirectionTable,
    apertures: Vec<Aperture>,
    target_az: f64,
    target_el: f64,
    counter: usize,
    best: Option<Candidate>,
    buf: Vec<f64>,
}

fn active_range(side: usize, n: usize) -> core::ops::Range<usize> {
    let s = (side - n) / 2;
    s..s + n
}

impl<'a> Search<'a> {
    fn exhausted(&self) -> bool {
        self.counter >= self.req.counter_max
    }

    fn done(&self) -> bool {
        self.best
            .as_ref()
            .is_some_and(|b| b.feasible && b.cost < self.req.eta)
    }

    fn aperture(&mut self, rows: usize, cols: usize) -> Result<usize> {
        if let Some(i) = self.apertures.iter().position(|a| (a.rows, a.cols) == (rows, cols)) {
            return Ok(i);
        }
        let side = self.config.side();
        let (rr, cr) = (active_range(side, rows), active_range(side, cols));
        let mut mask = vec![false; side * side];
        for r in rr.clone() {
            for c in cr.clone() {
                mask[r * side + c] = true;
            }
        }
        let projector = NullProjector::new(self.config, self.orientation, self.req.pointing, &self.req.nulls, &mask)?;
        // Masked null steering vectors are separable, so their cut responses are cheap.
        let factors: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..self.null_table.len())
            .map(|j| {
                let x = masked_conj(self.null_table.row_phasors(j), &rr);
                let z = masked_conj(self.null_table.col_phasors(j), &cr);
                (x, z)
            })
            .collect();
        let basis_response = |table: &DirectionTable| -> Vec<Vec<Complex64>> {
            projector
                .coeffs()
                .iter()
                .map(|cv| {
                    (0..table.len())
                        .map(|s| {
                            cv.iter()
                                .zip(&factors)
                                .map(|(k, (x, z))| k * table.separable_response(s, x, z))
                                .sum()
                        })
                        .collect()
                })
                .collect()
        };
        let az_basis = basis_response(&self.cuts.az);
        let el_basis = basis_response(&self.cuts.el);
        self.apertures.push(Aperture {
            rows,
            cols,
            projector,
            az_basis,
            el_basis,
        });
        Ok(self.apertures.len() - 1)
    }

    fn evaluate(&mut self, rows: usize, cols: usize, lx: f64, lz: f64) -> Result<Candidate> {
        self.counter += 1;
        let side = self.config.side();
        let (rr, cr) = (active_range(side, rows), active_range(side, cols));
        let mut x = masked_conj(self.pointing_table.row_phasors(0), &rr);
        let mut z = masked_conj(self.pointing_table.col_phasors(0), &cr);
        for (v, t) in x[rr.clone()].iter_mut().zip(taper(rows, lx)?) {
            *v *= t;
        }
        for (v, t) in z[cr.clone()].iter_mut().zip(taper(cols, lz)?) {
            *v *= t;
        }
        let a = self.aperture(rows, cols)?;
        let ap = &self.apertures[a];
        let mut w: Vec<Complex64> = x.iter().flat_map(|xr| z.iter().map(move |zc| xr * zc)).collect();
        let comps = ap.projector.components(&w);
        ap.projector.apply(&mut w);
        let peak = w.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut cand = Candidate {
            rows,
            cols,
            lx,
            lz,
            entries: w,
            ppe: 0.0,
            sll_az: SllReading::NONE,
            sll_el: SllReading::NONE,
            eirp_dbm: f64::NEG_INFINITY,
            cost: f64::INFINITY,
            feasible: false,
        };
        if !(peak > 0.0) {
            self.record(&cand);
            return Ok(cand);
        }
        for v in &mut cand.entries {
            *v /= peak;
        }
        let gain = self.pointing_table.power(0, &cand.entries);
        if !(gain > 0.0) {
            self.record(&cand);
            return Ok(cand);
        }
        cand.ppe = from_db(self.req.eirp_target_dbm) / gain;
        cand.eirp_dbm = to_db(cand.ppe * gain);
        let cut_sll = |table: &DirectionTable, closed: bool, basis: &[Vec<Complex64>], buf: &mut Vec<f64>| {
            buf.clear();
            buf.extend((0..table.len()).map(|s| {
                let mut r = table.separable_response(s, &x, &z);
                for (c, q) in comps.iter().zip(basis) {
                    r -= c * q[s];
                }
                r.norm_sqr() * table.element_gain(s)
            }));
            sll_from_powers(buf, closed)
        };
        let mut buf = core::mem::take(&mut self.buf);
        let az = cut_sll(&self.cuts.az, self.cuts.az_closed, &ap.az_basis, &mut buf);
        let el = cut_sll(&self.cuts.el, self.cuts.el_closed, &ap.el_basis, &mut buf);
        self.buf = buf;
        cand.sll_az = az;
        cand.sll_el = el;
        // Only a shortfall below the minimum counts; any SLL above it is acceptable.
        let plane_term = |r: SllReading, o: f64| if r.sidelobe_found { (o - r.sll_db).max(0.0) / o } else { 0.0 };
        let z1 = self.req.k1 * (plane_term(az, self.req.sll_min_az_db) + plane_term(el, self.req.sll_min_el_db));
        let scale = self.req.eirp_target_dbm.abs();
        let gap = (cand.eirp_dbm - self.req.eirp_target_dbm).abs();
        let z2 = self.req.k2 * if scale > 1e-9 { gap / scale } else { gap };
        cand.cost = z1 + z2;
        cand.feasible = az.sll_db >= self.req.sll_min_az_db && el.sll_db >= self.req.sll_min_el_db;
        self.record(&cand);
        Ok(cand)
    }

    fn record(&mut self, cand: &Candidate) {
        let replace = match &self.best {
            None => true,
            Some(b) => cand.better_than(b),
        };
        if replace {
            self.best = Some(cand.clone());
        }
    }

    fn residual(&self, c: &Candidate) -> [f64; 2] {
        let r = |s: SllReading, t: f64| if s.sidelobe_found { (s.sll_db - t).min(0.0) } else { 0.0 };
        [r(c.sll_az, self.target_az), r(c.sll_el, self.target_el)]
    }

    /// Damped Gauss-Newton on `(lx, lz)` for a fixed aperture.
    fn refine(&mut self, rows: usize, cols: usize, lx: f64, lz: f64) -> Result<()> {
        let mut cur = self.evaluate(rows, cols, lx, lz)?;
        let mut lambda = 1e-3;
        while !self.done() && !self.exhausted() {
            let r0 = self.residual(&cur);
            let hx = if cur.lx + FD_STEP_DB <= SETPOINT_MAX_DB { FD_STEP_DB } else { -FD_STEP_DB };
            let hz = if cur.lz + FD_STEP_DB <= SETPOINT_MAX_DB { FD_STEP_DB } else { -FD_STEP_DB };
            let cx = self.evaluate(rows, cols, cur.lx + hx, cur.lz)?;
            if self.done() || self.exhausted() {
                break;
            }
            let cz = self.evaluate(rows, cols, cur.lx, cur.lz + hz)?;
            if self.done() || self.exhausted() {
                break;
            }
            let rx = self.residual(&cx);
            let rz = self.residual(&cz);
            let j = [
                [(rx[0] - r0[0]) / hx, (rz[0] - r0[0]) / hz],
                [(rx[1] - r0[1]) / hx, (rz[1] - r0[1]) / hz],
            ];
            let base = sq(r0);
            let mut improved = false;
            let mut tries = 0;
            while !self.exhausted() && tries < 3 {
                tries += 1;
                let Some((dx, dz)) = damped_step(&j, r0, lambda) else {
                    lambda *= 10.0;
                    continue;
                };
                let nx = (cur.lx + dx.clamp(-MAX_STEP_DB, MAX_STEP_DB)).clamp(SETPOINT_MIN_DB, SETPOINT_MAX_DB);
                let nz = (cur.lz + dz.clamp(-MAX_STEP_DB, MAX_STEP_DB)).clamp(SETPOINT_MIN_DB, SETPOINT_MAX_DB);
                if (nx - cur.lx).abs() < 1e-4 && (nz - cur.lz).abs() < 1e-4 {
                    break;
                }
                let cand = self.evaluate(rows, cols, nx, nz)?;
                if self.done() {
                    return Ok(());
                }
                if sq(self.residual(&cand)) < base {
                    cur = cand;
                    lambda = (lambda / 10.0).max(1e-6);
                    improved = true;
                    break;
                }
                lambda *= 10.0;
            }
            if !improved {
                break;
            }
        }
        Ok(())
    }
}

/// `conj(p)` on the active range, zero elsewhere.
fn masked_conj(p: &[Complex64], active: &core::ops::Range<usize>) -> Vec<Complex64> {
    p.iter()
        .enumerate()
        .map(|(i, v)| if active.contains(&i) { v.conj() } else { Complex64::new(0.0, 0.0) })
        .collect()
}

fn sq(r: [f64; 2]) -> f64 {
    r[0] * r[0] + r[1] * r[1]
}

/// Solves `(J^T J + lambda diag(J^T J)) d = -J^T r` for the 2x2 case.
fn damped_step(j: &[[f64; 2]; 2], r: [f64; 2], lambda: f64) -> Option<(f64, f64)> {
    let a00 = j[0][0] * j[0][0] + j[1][0] * j[1][0];
    let a01 = j[0][0] * j[0][1] + j[1][0] * j[1][1];
    let a11 = j[0][1] * j[0][1] + j[1][1] * j[1][1];
    let g0 = -(j[0][0] * r[0] + j[1][0] * r[1]);
    let g1 = -(j[0][1] * r[0] + j[1][1] * r[1]);
    let m00 = a00 * (1.0 + lambda) + 1e-9;
    let m11 = a11 * (1.0 + lambda) + 1e-9;
    let det = m00 * m11 - a01 * a01;
    if !(det.abs() > 1e-18) || !det.is_finite() {
        return None;
    }
    Some(((m11 * g0 - a01 * g1) / det, (m00 * g1 - a01 * g0) / det))
}

fn taper(n: usize, sll_db: f64) -> Result<Vec<f64>> {
    if n == 1 {
        Ok(vec![1.0])
    } else {
        chebyshev_taper(n, sll_db)
    }
}

/// Runs the synthesis loop for one beam.
///
/// Each candidate evaluation counts as one iteration. The search stops at
/// the first feasible candidate with cost below `eta`; otherwise the best
/// candidate seen is returned with `converged = false`.
pub fn synthesize(
    request: &SynthesisRequest,
    config: &ArrayConfig,
    orientation: RotationAngles,
) -> Result<SynthesisResult> {
    request.validate()?;
    let side = config.side();
    let pointing_table =
        DirectionTable::from_world(config, orientation, core::iter::once(request.pointing.unit_vector()));
    let null_table = DirectionTable::from_world(config, orientation, request.nulls.iter().map(|n| n.unit_vector()));
    let margin = 1.0 + request.eta / (4.0 * request.k1.max(1e-12));
    let mut search = Search {
        req: request,
        config,
        orientation,
        cuts: CutPair::new(config, orientation, request.pointing),
        pointing_table,
        null_table,
        apertures: Vec::new(),
        target_az: request.sll_min_az_db * margin,
        target_el: request.sll_min_el_db * margin,
        counter: 0,
        best: None,
        buf: Vec::new(),
    };
    let start = (
        search.target_az.clamp(SETPOINT_MIN_DB, SETPOINT_MAX_DB),
        search.target_el.clamp(SETPOINT_MIN_DB, SETPOINT_MAX_DB),
    );
    search.refine(side, side, start.0, start.1)?;

    let mut apertures = Vec::new();
    for drop_total in 1..=4usize {
        for dr in 0..=drop_total.min(2) {
            let dc = drop_total - dr;
            if dc <= 2 && dr < side && dc < side {
                apertures.push((side - dr, side - dc));
            }
        }
    }
    for (rows, cols) in apertures {
        if search.done() || search.exhausted() {
            break;
        }
        let (lx, lz) = search
            .best
            .as_ref()
            .map(|b| (b.lx, b.lz))
            .unwrap_or(start);
        search.refine(rows, cols, lx, lz)?;
    }

    let converged = search.done();
    let iterations = search.counter;
    let best = search
        .best
        .ok_or(Error::InvalidArgument("synthesis evaluated no candidates"))?;
    Ok(SynthesisResult {
        weights: BeamWeights::new(best.entries, best.ppe)?,
        achieved_sll_az_db: best.sll_az.sll_db,
        achieved_sll_el_db: best.sll_el.sll_db,
        achieved_eirp_dbm: best.eirp_dbm,
        active_rows: best.rows,
        active_cols: best.cols,
        iterations,
        cost: best.cost,
        converged,
        taper_sll_x_db: best.lx,
        taper_sll_z_db: best.lz,
    })
}
