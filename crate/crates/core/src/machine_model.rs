//! Analytical reference evaluator.
//!
//! A saturating dq flux-linkage model with closed-form iron-loss
//! coefficients. It is the ground truth the surrogate learns and the
//! measure source of the classical evaluation path.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::design_space::{derive_from_params, DerivedGeometry, DesignVector, MachineParams, K_FILL};

pub const GRID_N: usize = 9;
pub const GRID_LEN: usize = GRID_N * GRID_N;
/// psi_d grid, psi_q grid and the three scalars.
pub const MEASURE_LEN: usize = 2 * GRID_LEN + 3;

/// Peak current density, A/mm².
pub const J_MAX: f64 = 12.0;
pub const WINDING_FACTOR: f64 = 0.933;
/// Magnet remanence, T.
pub const B_REM: f64 = 1.2;
pub const K_LEAK: f64 = 0.9;
/// Saturation flux density, T.
pub const B_SAT: f64 = 1.8;
pub const MU_R: f64 = 1.05;
pub const MU_0: f64 = 4.0e-7 * PI;
/// Iron density, kg/m³.
pub const RHO_FE: f64 = 7650.0;
/// Hysteresis coefficient, W/(kg·Hz·T²).
pub const K_HYST: f64 = 2.0e-2;
/// Eddy-current coefficient, W/(kg·Hz²·T²).
pub const K_EDDY: f64 = 5.0e-5;

const MM: f64 = 1e-3;

/// Normalized d-axis current of grid column `iu`, in [-1, 0].
pub fn grid_u(iu: usize) -> f64 {
    -1.0 + iu as f64 / (GRID_N - 1) as f64
}

/// Normalized q-axis current of grid row `iw`, in [0, 1].
pub fn grid_w(iw: usize) -> f64 {
    iw as f64 / (GRID_N - 1) as f64
}

/// Flat index of grid node (row `iw`, column `iu`).
#[inline]
pub fn grid_index(iw: usize, iu: usize) -> usize {
    iw * GRID_N + iu
}

/// What a field solver would hand to post-processing.
///
/// Both flux grids are stored row-major with rows indexed by the normalized
/// q-current `w = i_q / I_max` (0 to 1) and columns by the normalized
/// d-current `u = i_d / I_max` (-1 to 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntermediateMeasures {
    pub psi_d: Vec<f64>,
    pub psi_q: Vec<f64>,
    /// Hysteresis loss coefficient, W/Hz.
    pub c_hy: f64,
    /// Eddy loss coefficient, W/Hz².
    pub c_ed: f64,
    /// Open-circuit flux linkage, V·s.
    pub psi_ref: f64,
}

impl IntermediateMeasures {
    /// Build grids from a flux map over normalized currents `(u, w)`.
    pub fn from_flux_fn<F>(flux: F, c_hy: f64, c_ed: f64) -> Self
    where
        F: Fn(f64, f64) -> (f64, f64),
    {
        let mut psi_d = vec![0.0; GRID_LEN];
        let mut psi_q = vec![0.0; GRID_LEN];
        for iw in 0..GRID_N {
            for iu in 0..GRID_N {
                let (d, q) = flux(grid_u(iu), grid_w(iw));
                psi_d[grid_index(iw, iu)] = d;
                psi_q[grid_index(iw, iu)] = q;
            }
        }
        let psi_ref = psi_d[grid_index(0, GRID_N - 1)];
        Self {
            psi_d,
            psi_q,
            c_hy,
            c_ed,
            psi_ref,
        }
    }

    /// psi_d grid, psi_q grid, c_hy, c_ed, psi_ref.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(MEASURE_LEN);
        out.extend_from_slice(&self.psi_d);
        out.extend_from_slice(&self.psi_q);
        out.extend_from_slice(&[self.c_hy, self.c_ed, self.psi_ref]);
        out
    }

    pub fn from_flat(flat: &[f64]) -> Self {
        assert_eq!(flat.len(), MEASURE_LEN);
        Self {
            psi_d: flat[..GRID_LEN].to_vec(),
            psi_q: flat[GRID_LEN..2 * GRID_LEN].to_vec(),
            c_hy: flat[2 * GRID_LEN],
            c_ed: flat[2 * GRID_LEN + 1],
            psi_ref: flat[2 * GRID_LEN + 2],
        }
    }

    /// Checks the structural invariants; returns the first broken one.
    pub fn check_invariants(&self) -> Result<(), String> {
        for iw in 0..GRID_N {
            for iu in 1..GRID_N {
                if self.psi_d[grid_index(iw, iu)] < self.psi_d[grid_index(iw, iu - 1)] {
                    return Err(format!("psi_d decreases along u at row {iw}, column {iu}"));
                }
            }
        }
        for iu in 0..GRID_N {
            if self.psi_q[grid_index(0, iu)] != 0.0 {
                return Err(format!("psi_q nonzero on the w = 0 row at column {iu}"));
            }
            for iw in 1..GRID_N {
                if self.psi_q[grid_index(iw, iu)] < self.psi_q[grid_index(iw - 1, iu)] {
                    return Err(format!("psi_q decreases along w at row {iw}, column {iu}"));
                }
            }
        }
        if self.psi_d[grid_index(0, GRID_N - 1)] != self.psi_ref {
            return Err("psi_d at zero current differs from psi_ref".into());
        }
        if !(self.c_hy >= 0.0 && self.c_ed >= 0.0 && self.psi_ref > 0.0) {
            return Err("negative loss coefficient or non-positive psi_ref".into());
        }
        Ok(())
    }
}

/// Lumped electrical constants of one design, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineConstants {
    pub p_pairs: u32,
    /// Series turns per phase.
    pub n_ph: f64,
    pub psi_pm: f64,
    pub psi_sat: f64,
    pub l_d: f64,
    pub l_q: f64,
}

impl MachineConstants {
    pub fn of(v: &DesignVector) -> Self {
        let m = MachineParams::from_vector(v);
        Self::from_parts(&m, &derive_from_params(&m))
    }

    pub fn from_parts(m: &MachineParams, g: &DerivedGeometry) -> Self {
        let p = m.p_pairs as f64;
        let n_ph = m.n_t as f64 * 2.0 * p;
        let turns = WINDING_FACTOR * n_ph;
        let tau = g.pole_pitch * MM;
        let l = m.l_stk * MM;
        let flux_pm = B_REM * K_LEAK * g.beta * tau * l * (2.0 / PI);
        let psi_pm = turns * flux_pm;
        let c_l = 3.0 / PI * MU_0;
        let magnets = (m.m1_t + m.m2_t) * MM / MU_R;
        let g_d = m.g_air * MM + magnets;
        let g_q = m.g_air * MM + 0.3 * magnets;
        let base = c_l * turns * turns * m.r_rotor * MM * l / (p * p);
        let psi_sat = turns * B_SAT * tau * l * (2.0 / PI);
        Self {
            p_pairs: m.p_pairs,
            n_ph,
            psi_pm,
            psi_sat,
            l_d: base / g_d,
            l_q: base / g_q,
        }
    }

    /// (psi_d, psi_q) at physical currents in A.
    #[inline]
    pub fn flux(&self, i_d: f64, i_q: f64) -> (f64, f64) {
        let s = self.psi_sat;
        (
            self.psi_pm + s * (self.l_d * i_d / s).tanh(),
            s * (self.l_q * i_q / s).tanh(),
        )
    }
}

/// Peak phase current limit in A.
pub fn current_limit(v: &DesignVector) -> f64 {
    let m = MachineParams::from_vector(v);
    current_limit_from(derive_from_params(&m).slot_area, m.n_t)
}

pub fn current_limit_from(slot_area_mm2: f64, n_t: u32) -> f64 {
    J_MAX * slot_area_mm2.max(0.0) * K_FILL / n_t as f64
}

/// d/q flux linkage at physical currents `i_d`, `i_q` in A.
pub fn flux_linkage(v: &DesignVector, i_d: f64, i_q: f64) -> (f64, f64) {
    MachineConstants::of(v).flux(i_d, i_q)
}

/// Hysteresis and eddy loss coefficients `(c_hy, c_ed)`.
pub fn loss_coefficients(v: &DesignVector) -> (f64, f64) {
    let g = derive_from_params(&MachineParams::from_vector(v));
    loss_coefficients_from(g.iron_volume * 1e-9 * RHO_FE, g.beta)
}

pub fn loss_coefficients_from(iron_mass_kg: f64, beta: f64) -> (f64, f64) {
    let b0 = B_REM * K_LEAK * beta;
    let scale = iron_mass_kg * b0 * b0;
    (K_HYST * scale, K_EDDY * scale)
}

/// Ground-truth measures of one design.
pub fn evaluate_measures(v: &DesignVector) -> IntermediateMeasures {
    let i_max = current_limit(v);
    let (c_hy, c_ed) = loss_coefficients(v);
    let mut psi_d = vec![0.0; GRID_LEN];
    let mut psi_q = vec![0.0; GRID_LEN];
    for iw in 0..GRID_N {
        for iu in 0..GRID_N {
            let (d, q) = flux_linkage(v, grid_u(iu) * i_max, grid_w(iw) * i_max);
            psi_d[grid_index(iw, iu)] = d;
            psi_q[grid_index(iw, iu)] = q;
        }
    }
    let psi_ref = flux_linkage(v, 0.0, 0.0).0;
    IntermediateMeasures {
        psi_d,
        psi_q,
        c_hy,
        c_ed,
        psi_ref,
    }
}
