//! Double-V interior PM machine parameterization.
//!
//! A design is a vector of 14 real values inside box bounds. Two of the
//! slots (pole pairs and turns per coil) are integer-valued and stored as
//! exact integers in their `f64` slot. All lengths are millimetres and all
//! angles degrees unless a name says otherwise.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::SpecError;

/// Number of design parameters of the double-V machine.
pub const N_PARAMS: usize = 14;

/// Slot positions inside a [`DesignVector`].
pub mod idx {
    pub const P_PAIRS: usize = 0;
    pub const R_ROTOR: usize = 1;
    pub const G_AIR: usize = 2;
    pub const SLOT_DEPTH: usize = 3;
    pub const YOKE_H: usize = 4;
    pub const TOOTH_W: usize = 5;
    pub const M1_W: usize = 6;
    pub const M1_T: usize = 7;
    pub const A1_DEG: usize = 8;
    pub const M2_W: usize = 9;
    pub const M2_T: usize = 10;
    pub const A2_DEG: usize = 11;
    pub const L_STK: usize = 12;
    pub const N_T: usize = 13;
}

/// Copper slot fill factor.
pub const K_FILL: f64 = 0.45;
/// End-winding length per side, as a multiple of the pole pitch.
pub const END_WINDING_FACTOR: f64 = 2.2;
/// Radial thickness removed for the shaft, mm.
pub const SHAFT_ANNULUS: f64 = 25.0;
/// Anchor radius of magnet layer 1 as a fraction of the rotor radius.
pub const ANCHOR_1: f64 = 0.60;
/// Anchor radius of magnet layer 2 as a fraction of the rotor radius.
pub const ANCHOR_2: f64 = 0.78;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Continuous,
    Integer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: ParamKind,
}

impl ParamSpec {
    pub fn continuous(name: &str, lower: f64, upper: f64) -> Self {
        Self {
            name: name.to_string(),
            lower,
            upper,
            kind: ParamKind::Continuous,
        }
    }

    pub fn integer(name: &str, lower: i64, upper: i64) -> Self {
        Self {
            name: name.to_string(),
            lower: lower as f64,
            upper: upper as f64,
            kind: ParamKind::Integer,
        }
    }

    pub fn range(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn is_integer(&self) -> bool {
        self.kind == ParamKind::Integer
    }

    /// Clip into bounds; integer slots are rounded half away from zero first.
    pub fn clamp(&self, x: f64) -> f64 {
        let x = if self.is_integer() { x.round() } else { x };
        x.clamp(self.lower, self.upper)
    }
}

/// Minimum clearances used by [`geometry_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeometryLimits {
    /// Minimum iron bridge between magnet and rotor surface, mm.
    pub t_bridge_min: f64,
    /// Web width between the two legs of a V, mm.
    pub w_web: f64,
    /// Minimum iron between magnet layers, mm.
    pub t_iron_min: f64,
    /// Minimum slot opening, mm.
    pub w_slot_min: f64,
    /// Maximum stator outer radius, mm.
    pub r_max: f64,
}

impl Default for GeometryLimits {
    fn default() -> Self {
        Self {
            t_bridge_min: 1.5,
            w_web: 3.0,
            t_iron_min: 2.0,
            w_slot_min: 2.0,
            r_max: 120.0,
        }
    }
}

/// Parameter bounds plus the geometric clearances that gate feasibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub params: Vec<ParamSpec>,
    #[serde(default)]
    pub limits: GeometryLimits,
}

impl Default for DesignSpec {
    fn default() -> Self {
        Self::double_v()
    }
}

impl DesignSpec {
    /// The 14-parameter double-V machine.
    pub fn double_v() -> Self {
        let params = vec![
            ParamSpec::integer("p_pairs", 3, 4),
            ParamSpec::continuous("r_rotor", 50.0, 80.0),
            ParamSpec::continuous("g_air", 0.6, 1.2),
            ParamSpec::continuous("slot_depth", 15.0, 30.0),
            ParamSpec::continuous("yoke_h", 8.0, 20.0),
            ParamSpec::continuous("tooth_w", 4.0, 10.0),
            ParamSpec::continuous("m1_w", 10.0, 40.0),
            ParamSpec::continuous("m1_t", 3.0, 8.0),
            ParamSpec::continuous("a1_deg", 20.0, 70.0),
            ParamSpec::continuous("m2_w", 8.0, 30.0),
            ParamSpec::continuous("m2_t", 3.0, 8.0),
            ParamSpec::continuous("a2_deg", 20.0, 70.0),
            ParamSpec::continuous("l_stk", 60.0, 120.0),
            ParamSpec::integer("n_t", 4, 12),
        ];
        Self {
            params,
            limits: GeometryLimits::default(),
        }
    }

    /// A box of `n` continuous parameters, used by the analytic benchmarks.
    pub fn unit_box(n: usize) -> Self {
        Self {
            params: (0..n)
                .map(|i| ParamSpec::continuous(&format!("x{i}"), 0.0, 1.0))
                .collect(),
            limits: GeometryLimits::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.params.is_empty() {
            return Err(SpecError::Empty);
        }
        for p in &self.params {
            if !(p.lower.is_finite() && p.upper.is_finite()) || p.lower >= p.upper {
                return Err(SpecError::InvalidBounds {
                    name: p.name.clone(),
                    lower: p.lower,
                    upper: p.upper,
                });
            }
            if p.is_integer() && (p.lower.fract() != 0.0 || p.upper.fract() != 0.0) {
                return Err(SpecError::NonIntegerBounds(p.name.clone()));
            }
        }
        Ok(())
    }

    /// Whether `v` satisfies the box bounds and integrality of every slot.
    pub fn contains(&self, v: &DesignVector) -> bool {
        v.len() == self.dim()
            && v.iter().zip(&self.params).all(|(&x, p)| {
                x >= p.lower && x <= p.upper && (!p.is_integer() || x.fract() == 0.0)
            })
    }

    /// Hex SHA-256 of the canonical JSON form. Used to tie artifacts to the
    /// design space they were produced for.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("design spec serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// One candidate design, ordered as the parameters of its [`DesignSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DesignVector(pub Vec<f64>);

impl DesignVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }
}

impl std::ops::Index<usize> for DesignVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for DesignVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl fmt::Display for DesignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "]")
    }
}

/// Clip every coordinate into its bounds. Integer slots are rounded half
/// away from zero before clipping.
pub fn clamp_to_bounds(raw: &[f64], spec: &DesignSpec) -> DesignVector {
    debug_assert_eq!(raw.len(), spec.dim());
    DesignVector(
        raw.iter()
            .zip(&spec.params)
            .map(|(&x, p)| p.clamp(x))
            .collect(),
    )
}

/// Named view of a double-V design vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineParams {
    pub p_pairs: u32,
    pub r_rotor: f64,
    pub g_air: f64,
    pub slot_depth: f64,
    pub yoke_h: f64,
    pub tooth_w: f64,
    pub m1_w: f64,
    pub m1_t: f64,
    pub a1_deg: f64,
    pub m2_w: f64,
    pub m2_t: f64,
    pub a2_deg: f64,
    pub l_stk: f64,
    pub n_t: u32,
}

impl MachineParams {
    pub fn from_vector(v: &DesignVector) -> Self {
        assert_eq!(v.len(), N_PARAMS, "double-V design has {N_PARAMS} slots");
        Self {
            p_pairs: v[idx::P_PAIRS] as u32,
            r_rotor: v[idx::R_ROTOR],
            g_air: v[idx::G_AIR],
            slot_depth: v[idx::SLOT_DEPTH],
            yoke_h: v[idx::YOKE_H],
            tooth_w: v[idx::TOOTH_W],
            m1_w: v[idx::M1_W],
            m1_t: v[idx::M1_T],
            a1_deg: v[idx::A1_DEG],
            m2_w: v[idx::M2_W],
            m2_t: v[idx::M2_T],
            a2_deg: v[idx::A2_DEG],
            l_stk: v[idx::L_STK],
            n_t: v[idx::N_T] as u32,
        }
    }

    pub fn to_vector(&self) -> DesignVector {
        DesignVector(vec![
            self.p_pairs as f64,
            self.r_rotor,
            self.g_air,
            self.slot_depth,
            self.yoke_h,
            self.tooth_w,
            self.m1_w,
            self.m1_t,
            self.a1_deg,
            self.m2_w,
            self.m2_t,
            self.a2_deg,
            self.l_stk,
            self.n_t as f64,
        ])
    }

    pub fn a1(&self) -> f64 {
        self.a1_deg.to_radians()
    }

    pub fn a2(&self) -> f64 {
        self.a2_deg.to_radians()
    }
}

/// Quantities computed from a design vector. Lengths mm, areas mm²,
/// volumes mm³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedGeometry {
    pub n_slots: u32,
    pub pole_pitch: f64,
    pub d1: f64,
    pub d2: f64,
    pub r_out: f64,
    /// Slot pitch at mid-slot depth.
    pub slot_pitch: f64,
    pub slot_area: f64,
    pub magnet_volume: f64,
    pub copper_volume: f64,
    pub iron_volume: f64,
    /// Pole-arc coverage ratio in [0, 1].
    pub beta: f64,
}

pub fn derive_geometry(v: &DesignVector) -> DerivedGeometry {
    derive_from_params(&MachineParams::from_vector(v))
}

pub fn derive_from_params(m: &MachineParams) -> DerivedGeometry {
    let p = m.p_pairs as f64;
    let n_slots = 6 * m.p_pairs;
    let ns = n_slots as f64;
    let pole_pitch = PI * m.r_rotor / p;
    let d1 = ANCHOR_1 * m.r_rotor;
    let d2 = ANCHOR_2 * m.r_rotor;
    let r_out = m.r_rotor + m.g_air + m.slot_depth + m.yoke_h;
    let slot_pitch = 2.0 * PI * (m.r_rotor + m.g_air + m.slot_depth / 2.0) / ns;
    let slot_area = m.slot_depth * (slot_pitch - m.tooth_w);
    let beta = ((m.m1_w * m.a1().cos() + m.m2_w * m.a2().cos()) / pole_pitch).clamp(0.0, 1.0);
    // two legs per V, two layers, per pole
    let magnet_volume = 2.0 * p * (m.m1_w * m.m1_t + m.m2_w * m.m2_t) * m.l_stk;
    let l_end = END_WINDING_FACTOR * pole_pitch;
    let copper_volume = ns * slot_area * K_FILL * (m.l_stk + l_end);
    let r_in = m.r_rotor - SHAFT_ANNULUS;
    let iron_volume = PI * (r_out * r_out - r_in * r_in) * m.l_stk
        - ns * slot_area * m.l_stk
        - magnet_volume;
    DerivedGeometry {
        n_slots,
        pole_pitch,
        d1,
        d2,
        r_out,
        slot_pitch,
        slot_area,
        magnet_volume,
        copper_volume,
        iron_volume,
        beta,
    }
}

/// The five geometric feasibility checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CheckId {
    /// Magnet fits radially under the rotor surface.
    RadialFit,
    /// V legs fit tangentially inside the pole.
    TangentialFit,
    /// Iron left between the two magnet layers.
    InterLayerIron,
    /// Slot opening wide enough.
    SlotOpening,
    /// Stator fits the packaging envelope.
    Packaging,
}

impl CheckId {
    pub const ALL: [CheckId; 5] = [
        CheckId::RadialFit,
        CheckId::TangentialFit,
        CheckId::InterLayerIron,
        CheckId::SlotOpening,
        CheckId::Packaging,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CheckId::RadialFit => "G1",
            CheckId::TangentialFit => "G2",
            CheckId::InterLayerIron => "G3",
            CheckId::SlotOpening => "G4",
            CheckId::Packaging => "G5",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryReport {
    /// Signed constraint values G1..G5; positive means violated.
    pub values: [f64; 5],
    /// `(check, max(0, value))` for each check in order.
    pub violations: [(CheckId, f64); 5],
    pub total_violation: f64,
    pub feasible: bool,
}

impl GeometryReport {
    fn from_values(values: [f64; 5]) -> Self {
        let mut violations = [(CheckId::RadialFit, 0.0); 5];
        for (slot, (&id, &g)) in violations.iter_mut().zip(CheckId::ALL.iter().zip(&values)) {
            *slot = (id, g.max(0.0));
        }
        let total_violation: f64 = violations.iter().map(|(_, m)| m).sum();
        Self {
            values,
            violations,
            total_violation,
            feasible: total_violation == 0.0,
        }
    }
}

/// Evaluate the G1..G5 inequalities. A check is violated when its value is
/// strictly positive.
pub fn geometry_check(v: &DesignVector, limits: &GeometryLimits) -> GeometryReport {
    let m = MachineParams::from_vector(v);
    let g = derive_from_params(&m);
    let layers = [
        (g.d1, m.m1_w, m.m1_t, m.a1()),
        (g.d2, m.m2_w, m.m2_t, m.a2()),
    ];
    let half_pole = (PI / (2.0 * m.p_pairs as f64)).sin();

    let radial = layers
        .iter()
        .map(|&(d, w, t, a)| d + 0.5 * w * a.sin() + t + limits.t_bridge_min - m.r_rotor)
        .fold(f64::NEG_INFINITY, f64::max);
    let tangential = layers
        .iter()
        .map(|&(d, w, _, a)| w * a.cos() + limits.w_web - 2.0 * d * half_pole)
        .fold(f64::NEG_INFINITY, f64::max);
    let inter_layer = g.d1 + 0.5 * m.m1_w * m.a1().sin() + m.m1_t + limits.t_iron_min - g.d2;
    let slot_opening = limits.w_slot_min - (g.slot_pitch - m.tooth_w);
    let packaging = g.r_out - limits.r_max;

    GeometryReport::from_values([radial, tangential, inter_layer, slot_opening, packaging])
}
