//! Uniform 1D mesh and the P1 finite-element forms of the weak
//! concentration equation.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::linalg::BandedMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscretizationError {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("field has {got} entries, mesh has {expected} nodes")]
    SizeMismatch { expected: usize, got: usize },
    #[error("boundary influx is not square integrable on [0, {t_end}]")]
    InfluxNotSquareIntegrable { t_end: f64 },
}

/// Uniform mesh of `[0, L]` with `N` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    length: f64,
    cells: usize,
    h: f64,
    nodes: Vec<f64>,
}

/// Outward normal signs at the left and right boundary nodes.
pub const BOUNDARY_NORMALS: [f64; 2] = [-1.0, 1.0];

impl Mesh {
    pub fn new(length: f64, cells: usize) -> Result<Self, DiscretizationError> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(DiscretizationError::InvalidMesh(format!("length must be positive, got {length}")));
        }
        if cells < 2 {
            return Err(DiscretizationError::InvalidMesh(format!("need at least 2 cells, got {cells}")));
        }
        let h = length / cells as f64;
        let mut nodes: Vec<f64> = (0..=cells).map(|i| i as f64 * h).collect();
        nodes[cells] = length;
        Ok(Self { length, cells, h, nodes })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn node_count(&self) -> usize {
        self.cells + 1
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Indices of the two boundary nodes.
    pub fn boundary(&self) -> [usize; 2] {
        [0, self.cells]
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn check_field(&self, field: &[f64]) -> Result<(), DiscretizationError> {
        if field.len() == self.node_count() {
            Ok(())
        } else {
            Err(DiscretizationError::SizeMismatch { expected: self.node_count(), got: field.len() })
        }
    }
}

/// Alias matching the construction vocabulary of the rest of the crate.
pub fn build_mesh(length: f64, cells: usize) -> Result<Mesh, DiscretizationError> {
    Mesh::new(length, cells)
}

/// Prescribed influx through one end of the interval.
#[derive(Clone)]
pub enum Influx {
    Zero,
    Constant(f64),
    /// `offset + amplitude·sin(omega·t + phase)`
    Sinusoid { offset: f64, amplitude: f64, omega: f64, phase: f64 },
    /// `value` on `[t_on, t_off)`, zero elsewhere.
    Pulse { value: f64, t_on: f64, t_off: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Influx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Influx::Zero => write!(f, "Zero"),
            Influx::Constant(v) => write!(f, "Constant({v})"),
            Influx::Sinusoid { offset, amplitude, omega, phase } => {
                write!(f, "Sinusoid {{ offset: {offset}, amplitude: {amplitude}, omega: {omega}, phase: {phase} }}")
            }
            Influx::Pulse { value, t_on, t_off } => write!(f, "Pulse {{ value: {value}, t_on: {t_on}, t_off: {t_off} }}"),
            Influx::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl PartialEq for Influx {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Influx::Zero, Influx::Zero) => true,
            (Influx::Constant(a), Influx::Constant(b)) => a == b,
            (
                Influx::Sinusoid { offset: a, amplitude: b, omega: c, phase: d },
                Influx::Sinusoid { offset: e, amplitude: f, omega: g, phase: h },
            ) => (a, b, c, d) == (e, f, g, h),
            (Influx::Pulse { value: a, t_on: b, t_off: c }, Influx::Pulse { value: d, t_on: e, t_off: f }) => {
                (a, b, c) == (d, e, f)
            }
            (Influx::Custom(a), Influx::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl Influx {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Influx::Zero => 0.0,
            Influx::Constant(v) => *v,
            Influx::Sinusoid { offset, amplitude, omega, phase } => offset + amplitude * (omega * t + phase).sin(),
            Influx::Pulse { value, t_on, t_off } => {
                if t >= *t_on && t < *t_off {
                    *value
                } else {
                    0.0
                }
            }
            Influx::Custom(f) => f(t),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Influx::Zero => true,
            Influx::Constant(v) => *v == 0.0,
            Influx::Sinusoid { offset, amplitude, .. } => *offset == 0.0 && *amplitude == 0.0,
            Influx::Pulse { value, .. } => *value == 0.0,
            Influx::Custom(_) => false,
        }
    }
}

/// Influx at both ends of the interval.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub phi_left: Influx,
    pub phi_right: Influx,
}

impl BoundaryData {
    pub fn zero() -> Self {
        Self { phi_left: Influx::Zero, phi_right: Influx::Zero }
    }

    pub fn new(phi_left: Influx, phi_right: Influx) -> Self {
        Self { phi_left, phi_right }
    }

    /// Net influx `φ_L(t) + φ_R(t)`.
    pub fn total(&self, t: f64) -> f64 {
        self.phi_left.at(t) + self.phi_right.at(t)
    }

    pub fn is_zero(&self) -> bool {
        self.phi_left.is_zero() && self.phi_right.is_zero()
    }

    /// `∫₀ᵀ (φ_L² + φ_R²) dt` by composite Simpson quadrature; errors if the
    /// data are not finite on `[0, T]`.
    pub fn l2_norm_squared(&self, t_end: f64) -> Result<f64, DiscretizationError> {
        let panels = 2048;
        let h = t_end / panels as f64;
        let g = |t: f64| {
            let (a, b) = (self.phi_left.at(t), self.phi_right.at(t));
            a * a + b * b
        };
        let mut acc = g(0.0) + g(t_end);
        for k in 1..panels {
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * g(k as f64 * h);
        }
        let value = acc * h / 3.0;
        if value.is_finite() {
            Ok(value)
        } else {
            Err(DiscretizationError::InfluxNotSquareIntegrable { t_end })
        }
    }
}

/// P1 consistent mass matrix.
pub fn assemble_mass(mesh: &Mesh) -> BandedMatrix {
    let n = mesh.node_count();
    let h = mesh.h();
    let mut m = BandedMatrix::zeros(n, 1);
    for e in 0..mesh.cells() {
        m.add(e, e, h / 3.0);
        m.add(e + 1, e + 1, h / 3.0);
        m.add(e, e + 1, h / 6.0);
        m.add(e + 1, e, h / 6.0);
    }
    m
}

/// Row-sum lumped mass: `h/2` at the ends, `h` inside.
pub fn lumped_mass(mesh: &Mesh) -> Vec<f64> {
    let mut m = vec![mesh.h(); mesh.node_count()];
    m[0] = 0.5 * mesh.h();
    m[mesh.cells()] = 0.5 * mesh.h();
    m
}

/// Stiffness form `∫ ā u′φ′` with `ā` the element average of nodal `a`.
pub fn assemble_stiffness(mesh: &Mesh, a: &[f64]) -> Result<BandedMatrix, DiscretizationError> {
    mesh.check_field(a)?;
    let n = mesh.node_count();
    let inv_h = 1.0 / mesh.h();
    let mut k = BandedMatrix::zeros(n, 1);
    for e in 0..mesh.cells() {
        let w = 0.5 * (a[e] + a[e + 1]) * inv_h;
        k.add(e, e, w);
        k.add(e + 1, e + 1, w);
        k.add(e, e + 1, -w);
        k.add(e + 1, e, -w);
    }
    Ok(k)
}

/// Load vector `bᵢ = ∫ w̄ φᵢ′` with element-averaged `w`; `Σ bᵢ = 0`.
pub fn assemble_flux_vector(mesh: &Mesh, w: &[f64]) -> Result<Vec<f64>, DiscretizationError> {
    mesh.check_field(w)?;
    let mut b = vec![0.0; mesh.node_count()];
    for e in 0..mesh.cells() {
        // φ′ = ∓1/h on the element, times its length h
        let avg = 0.5 * (w[e] + w[e + 1]);
        b[e] -= avg;
        b[e + 1] += avg;
    }
    Ok(b)
}

/// Boundary functional `ψ(t)`: in 1D the boundary integral is the influx
/// at the two end nodes.
pub fn boundary_functional(mesh: &Mesh, bd: &BoundaryData, t: f64) -> Vec<f64> {
    let mut psi = vec![0.0; mesh.node_count()];
    psi[0] = bd.phi_left.at(t);
    psi[mesh.cells()] += bd.phi_right.at(t);
    psi
}

/// Lumped Neumann Laplacian `L_h = M_L⁻¹ K(1)` (positive semidefinite
/// sign convention, `L_h·1 = 0`).
pub fn neumann_laplacian(mesh: &Mesh) -> BandedMatrix {
    let ones = vec![1.0; mesh.node_count()];
    let k = assemble_stiffness(mesh, &ones).expect("sizes match");
    let inv: Vec<f64> = lumped_mass(mesh).iter().map(|m| 1.0 / m).collect();
    k.scale_rows(&inv)
}

/// Discrete `(I + L_h)²`, pentadiagonal. It is self-adjoint in the
/// lumped-mass inner product; [`regularization_form`] is its symmetric
/// weak form.
pub fn neumann_bilaplacian(mesh: &Mesh) -> BandedMatrix {
    let shifted = BandedMatrix::identity(mesh.node_count()).add_scaled(&neumann_laplacian(mesh), 1.0);
    shifted.mul(&shifted)
}

/// `M_L (I + L_h)² = M_L + 2K + K M_L⁻¹ K`: symmetric positive definite.
pub fn regularization_form(mesh: &Mesh) -> BandedMatrix {
    let ones = vec![1.0; mesh.node_count()];
    let k = assemble_stiffness(mesh, &ones).expect("sizes match");
    let ml = lumped_mass(mesh);
    let inv: Vec<f64> = ml.iter().map(|m| 1.0 / m).collect();
    let kmk = k.mul(&k.scale_rows(&inv));
    BandedMatrix::from_diagonal(&ml).add_scaled(&k, 2.0).add_scaled(&kmk, 1.0)
}

/// `M_L + K(1)`, the discrete form of `I − Δ` with Neumann data.
pub fn helmholtz_form(mesh: &Mesh) -> BandedMatrix {
    let ones = vec![1.0; mesh.node_count()];
    let k = assemble_stiffness(mesh, &ones).expect("sizes match");
    BandedMatrix::from_diagonal(&lumped_mass(mesh)).add_scaled(&k, 1.0)
}

/// The fixed operators of a mesh.
#[derive(Debug, Clone)]
pub struct DiscreteOperators {
    pub mass: BandedMatrix,
    pub lumped_mass: Vec<f64>,
    /// `K(1)`: zero row sums.
    pub laplacian_n: BandedMatrix,
}

impl DiscreteOperators {
    pub fn new(mesh: &Mesh) -> Self {
        let ones = vec![1.0; mesh.node_count()];
        Self {
            mass: assemble_mass(mesh),
            lumped_mass: lumped_mass(mesh),
            laplacian_n: assemble_stiffness(mesh, &ones).expect("sizes match"),
        }
    }
}

/// Nodal interpolant of `amplitude·cos(kπx/L)`.
pub fn cosine_mode(mesh: &Mesh, k: u32, amplitude: f64) -> Vec<f64> {
    mesh.nodes().iter().map(|&x| amplitude * (k as f64 * PI * x / mesh.length()).cos()).collect()
}
