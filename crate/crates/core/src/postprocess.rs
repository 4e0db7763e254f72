//! Physics post-processing shared by the classical and hybrid paths.
//!
//! Everything here is a pure function of a design vector and a set of
//! [`IntermediateMeasures`]; the two evaluation paths differ only in where
//! the measures come from.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::design_space::{
    derive_from_params, geometry_check, DesignVector, GeometryLimits, MachineParams,
    END_WINDING_FACTOR, K_FILL,
};
use crate::error::PostprocessError;
use crate::machine_model::{current_limit_from, IntermediateMeasures, GRID_N};

/// DC link voltage, V.
pub const U_DC: f64 = 400.0;
/// Copper resistivity, Ω·m.
pub const RHO_CU: f64 = 2.0e-8;
/// Required torque at base speed, N·m.
pub const T_REQ: f64 = 180.0;
pub const BASE_SPEED_RPM: f64 = 4000.0;
pub const N_ANGLES: usize = 91;
pub const BISECTION_STEPS: usize = 40;
/// Golden-section steps refining the best grid angle.
pub const ANGLE_REFINE_STEPS: usize = 30;
/// Speed grid of the torque-speed curve, rpm.
pub const SPEED_MIN_RPM: f64 = 500.0;
pub const SPEED_MAX_RPM: f64 = 16000.0;
pub const N_SPEEDS: usize = 33;

/// Material densities (kg/m³) and prices (per kg).
pub const RHO_MAGNET: f64 = 7500.0;
pub const RHO_COPPER: f64 = 8960.0;
pub const RHO_IRON: f64 = 7650.0;
pub const PRICE_MAGNET: f64 = 60.0;
pub const PRICE_COPPER: f64 = 10.0;
pub const PRICE_IRON: f64 = 2.0;

/// Coarse current samples used when the zero-current point already
/// violates the voltage limit.
const FIELD_WEAKENING_SCAN: usize = 64;

pub fn rpm_to_rad_s(rpm: f64) -> f64 {
    rpm * 2.0 * PI / 60.0
}

/// The fixed mechanical speed grid in rad/s.
pub fn speed_grid() -> Vec<f64> {
    (0..N_SPEEDS)
        .map(|k| {
            let rpm = SPEED_MIN_RPM
                + (SPEED_MAX_RPM - SPEED_MIN_RPM) * k as f64 / (N_SPEEDS - 1) as f64;
            rpm_to_rad_s(rpm)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub omega_m: f64,
    pub i_d: f64,
    pub i_q: f64,
    pub psi_d: f64,
    pub psi_q: f64,
    pub torque: f64,
    pub u_mag: f64,
    pub p_fe: f64,
    pub p_cu: f64,
    pub p_shaft: f64,
    /// False for the zero-torque placeholder of an infeasible speed.
    pub feasible: bool,
}

impl OperatingPoint {
    pub fn infeasible(omega_m: f64) -> Self {
        Self {
            omega_m,
            i_d: 0.0,
            i_q: 0.0,
            psi_d: 0.0,
            psi_q: 0.0,
            torque: 0.0,
            u_mag: 0.0,
            p_fe: 0.0,
            p_cu: 0.0,
            p_shaft: 0.0,
            feasible: false,
        }
    }
}

/// Objective values. Both are minimized by the optimizer through
/// [`KpiVector::objectives`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpiVector {
    pub max_power_w: f64,
    pub cost: f64,
}

impl KpiVector {
    /// `[k1, k2] = [-P_max, cost]`.
    pub fn objectives(&self) -> [f64; 2] {
        [-self.max_power_w, self.cost]
    }

    pub fn from_objectives(k: &[f64]) -> Self {
        Self {
            max_power_w: -k[0],
            cost: k[1],
        }
    }
}

pub const N_CONSTRAINTS: usize = 6;

/// `c1 = T_req - T_max(base speed)` followed by the geometry values G1..G5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintVector(pub [f64; N_CONSTRAINTS]);

impl ConstraintVector {
    pub fn total_violation(&self) -> f64 {
        self.0.iter().map(|c| c.max(0.0)).sum()
    }
}

/// Current and voltage limits plus the electrical data the solver needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams {
    pub p_pairs: u32,
    pub r_s: f64,
    pub i_max: f64,
    pub u_max: f64,
}

impl DriveParams {
    pub fn for_design(v: &DesignVector) -> Self {
        let m = MachineParams::from_vector(v);
        let g = derive_from_params(&m);
        Self {
            p_pairs: m.p_pairs,
            r_s: stator_resistance(v),
            i_max: current_limit_from(g.slot_area, m.n_t),
            u_max: U_DC / 3f64.sqrt(),
        }
    }
}

/// Bilinear interpolation of the normalized flux grids at physical currents.
pub fn interp_flux(
    m: &IntermediateMeasures,
    i_max: f64,
    i_d: f64,
    i_q: f64,
) -> Result<(f64, f64), PostprocessError> {
    const TOL: f64 = 1e-12;
    let out = PostprocessError::OutOfQuadrant { i_d, i_q, i_max };
    let (u, w) = if i_max > 0.0 {
        (i_d / i_max, i_q / i_max)
    } else if i_d == 0.0 && i_q == 0.0 {
        (0.0, 0.0)
    } else {
        return Err(out);
    };
    if !((-1.0 - TOL..=TOL).contains(&u) && (-TOL..=1.0 + TOL).contains(&w)) {
        return Err(out);
    }
    let last = (GRID_N - 1) as f64;
    let x = ((u + 1.0) * last).clamp(0.0, last);
    let y = (w * last).clamp(0.0, last);
    let ix = (x.floor() as usize).min(GRID_N - 2);
    let iy = (y.floor() as usize).min(GRID_N - 2);
    let (fx, fy) = (x - ix as f64, y - iy as f64);
    let bilinear = |g: &[f64]| {
        let at = |r: usize, c: usize| g[r * GRID_N + c];
        let lo = at(iy, ix) + fx * (at(iy, ix + 1) - at(iy, ix));
        let hi = at(iy + 1, ix) + fx * (at(iy + 1, ix + 1) - at(iy + 1, ix));
        lo + fy * (hi - lo)
    };
    Ok((bilinear(&m.psi_d), bilinear(&m.psi_q)))
}

pub fn torque(psi_d: f64, psi_q: f64, i_d: f64, i_q: f64, p_pairs: u32) -> f64 {
    1.5 * p_pairs as f64 * (psi_d * i_q - psi_q * i_d)
}

/// Steady-state dq phase voltage magnitude.
pub fn voltage_magnitude(psi_d: f64, psi_q: f64, i_d: f64, i_q: f64, omega_e: f64, r_s: f64) -> f64 {
    let u_d = r_s * i_d - omega_e * psi_q;
    let u_q = r_s * i_q + omega_e * psi_d;
    u_d.hypot(u_q)
}

/// Phase resistance in Ω.
pub fn stator_resistance(v: &DesignVector) -> f64 {
    let m = MachineParams::from_vector(v);
    let g = derive_from_params(&m);
    let n_ph = m.n_t as f64 * 2.0 * m.p_pairs as f64;
    let l_turn = 2.0 * (m.l_stk + END_WINDING_FACTOR * g.pole_pitch) * 1e-3;
    let a_cond = g.slot_area * 1e-6 * K_FILL / (2.0 * m.n_t as f64);
    RHO_CU * n_ph * l_turn / a_cond
}

/// `(p_fe, p_cu)` in W.
#[allow(clippy::too_many_arguments)]
pub fn losses(
    m: &IntermediateMeasures,
    omega_e: f64,
    psi_d: f64,
    psi_q: f64,
    i_d: f64,
    i_q: f64,
    r_s: f64,
) -> (f64, f64) {
    let f = omega_e / (2.0 * PI);
    let flux_ratio = (psi_d * psi_d + psi_q * psi_q) / (m.psi_ref * m.psi_ref);
    let p_fe = (m.c_hy * f + m.c_ed * f * f) * flux_ratio;
    let p_cu = 1.5 * r_s * (i_d * i_d + i_q * i_q);
    (p_fe, p_cu)
}

/// Maximum torque at one mechanical speed under the design's own limits.
pub fn max_torque_at_speed(
    m: &IntermediateMeasures,
    v: &DesignVector,
    omega_m: f64,
) -> Result<OperatingPoint, PostprocessError> {
    max_torque_with(m, &DriveParams::for_design(v), omega_m)
}

/// Maximum torque over current angles 90°..180°.
///
/// The angle range is swept in 91 steps and the best step is then refined
/// by golden-section search over its two neighbouring cells. For each
/// angle the largest current amplitude meeting the voltage limit is used: `I_max` when it is admissible, otherwise a 40-step bisection
/// against the voltage limit. When even zero current violates the limit the
/// admissible amplitudes, if any, lie in a field-weakening band away from
/// zero; a coarse downward scan locates the band's upper edge before the
/// bisection.
pub fn max_torque_with(
    m: &IntermediateMeasures,
    drive: &DriveParams,
    omega_m: f64,
) -> Result<OperatingPoint, PostprocessError> {
    let omega_e = drive.p_pairs as f64 * omega_m;
    let currents = |amp: f64, gamma: f64| ((amp * gamma.cos()).min(0.0), (amp * gamma.sin()).max(0.0));
    let flux_at = |i_d: f64, i_q: f64| {
        interp_flux(m, drive.i_max, i_d, i_q).expect("currents stay inside the quadrant")
    };
    let admissible = |amp: f64, gamma: f64| {
        let (i_d, i_q) = currents(amp, gamma);
        let (pd, pq) = flux_at(i_d, i_q);
        voltage_magnitude(pd, pq, i_d, i_q, omega_e, drive.r_s) <= drive.u_max
    };
    let bisect = |mut lo: f64, mut hi: f64, gamma: f64| {
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if admissible(mid, gamma) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let zero_ok = admissible(0.0, PI / 2.0);
    let at_angle = |gamma: f64| {
        let amp = if admissible(drive.i_max, gamma) {
            Some(drive.i_max)
        } else if zero_ok {
            Some(bisect(0.0, drive.i_max, gamma))
        } else {
            (1..FIELD_WEAKENING_SCAN).rev().find_map(|s| {
                let a = drive.i_max * s as f64 / FIELD_WEAKENING_SCAN as f64;
                let above = drive.i_max * (s + 1) as f64 / FIELD_WEAKENING_SCAN as f64;
                admissible(a, gamma).then(|| bisect(a, above, gamma))
            })
        }?;
        let (i_d, i_q) = currents(amp, gamma);
        let (pd, pq) = flux_at(i_d, i_q);
        Some((torque(pd, pq, i_d, i_q, drive.p_pairs), i_d, i_q))
    };

    let step = PI / 2.0 / (N_ANGLES - 1) as f64;
    let mut best: Option<(f64, f64, f64)> = None;
    let mut best_k = 0;
    for k in 0..N_ANGLES {
        if let Some(cand) = at_angle(PI / 2.0 + step * k as f64) {
            if best.is_none_or(|(bt, _, _)| cand.0 > bt) {
                best = Some(cand);
                best_k = k;
            }
        }
    }
    // At high speed the admissible angle band is narrow and the optimum sits
    // between grid angles; refine inside the neighbouring grid cells.
    if best.is_some() {
        let score = |g: f64| at_angle(g).map_or(f64::NEG_INFINITY, |c| c.0);
        let mut lo = PI / 2.0 + step * best_k.saturating_sub(1) as f64;
        let mut hi = (PI / 2.0 + step * (best_k + 1) as f64).min(PI);
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        let (mut f1, mut f2) = (score(x1), score(x2));
        for _ in 0..ANGLE_REFINE_STEPS {
            if f1 >= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = score(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = score(x2);
            }
        }
        let g = if f1 >= f2 { x1 } else { x2 };
        if let Some(cand) = at_angle(g) {
            // rounding-level gains do not displace a grid angle
            if best.is_none_or(|(bt, _, _)| cand.0 > bt + 1e-12 * bt.abs()) {
                best = Some(cand);
            }
        }
    }
    let (t, i_d, i_q) = best.ok_or(PostprocessError::NoFeasiblePoint { omega_m })?;
    let (psi_d, psi_q) = flux_at(i_d, i_q);
    let (p_fe, p_cu) = losses(m, omega_e, psi_d, psi_q, i_d, i_q, drive.r_s);
    Ok(OperatingPoint {
        omega_m,
        i_d,
        i_q,
        psi_d,
        psi_q,
        torque: t,
        u_mag: voltage_magnitude(psi_d, psi_q, i_d, i_q, omega_e, drive.r_s),
        p_fe,
        p_cu,
        p_shaft: t * omega_m - p_fe,
        feasible: true,
    })
}

/// Maximum-torque operating points over the fixed speed grid. Speeds
/// without an admissible point yield zero-torque placeholders.
pub fn torque_speed_curve(m: &IntermediateMeasures, v: &DesignVector) -> Vec<OperatingPoint> {
    curve_with(m, &DriveParams::for_design(v), &speed_grid())
}

pub fn curve_with(m: &IntermediateMeasures, drive: &DriveParams, speeds: &[f64]) -> Vec<OperatingPoint> {
    speeds
        .iter()
        .map(|&w| max_torque_with(m, drive, w).unwrap_or_else(|_| OperatingPoint::infeasible(w)))
        .collect()
}

/// Material cost from geometry: magnets, copper and iron.
pub fn material_cost(v: &DesignVector) -> f64 {
    let g = derive_from_params(&MachineParams::from_vector(v));
    cost_from_volumes(g.magnet_volume * 1e-9, g.copper_volume * 1e-9, g.iron_volume * 1e-9)
}

/// Cost of the given volumes in m³.
pub fn cost_from_volumes(v_mag: f64, v_cu: f64, v_fe: f64) -> f64 {
    PRICE_MAGNET * RHO_MAGNET * v_mag + PRICE_COPPER * RHO_COPPER * v_cu + PRICE_IRON * RHO_IRON * v_fe
}

/// KPIs and constraint values of a geometry-feasible design.
pub fn evaluate_kpis(
    v: &DesignVector,
    m: &IntermediateMeasures,
    limits: &GeometryLimits,
) -> (KpiVector, ConstraintVector) {
    let drive = DriveParams::for_design(v);
    let max_power_w = curve_with(m, &drive, &speed_grid())
        .iter()
        .map(|op| op.p_shaft)
        .fold(f64::NEG_INFINITY, f64::max);
    let t_base = max_torque_with(m, &drive, rpm_to_rad_s(BASE_SPEED_RPM))
        .map(|op| op.torque)
        .unwrap_or(0.0);
    let geo = geometry_check(v, limits);
    let mut c = [0.0; N_CONSTRAINTS];
    c[0] = T_REQ - t_base;
    c[1..].copy_from_slice(&geo.values);
    (
        KpiVector {
            max_power_w,
            cost: material_cost(v),
        },
        ConstraintVector(c),
    )
}
