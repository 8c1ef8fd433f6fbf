use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;

use super::SpinSystem;
use crate::constants::MU_B_OVER_H_MHZ_PER_G;
use crate::Vec3;

pub type CMatrix = DMatrix<Complex64>;

/// Cartesian spin operators `(S_x, S_y, S_z)` for spin `2S = half_count`,
/// basis ordered `m = S, S−1, …, −S`.
pub struct SpinOperators {
    pub x: CMatrix,
    pub y: CMatrix,
    pub z: CMatrix,
}

pub fn spin_operators(half_count: u32) -> SpinOperators {
    let n = half_count as usize + 1;
    let s = 0.5 * half_count as f64;
    let m = |i: usize| s - i as f64;
    let mut plus = CMatrix::zeros(n, n);
    for i in 1..n {
        // S+ |m> = sqrt(S(S+1) − m(m+1)) |m+1>
        let mi = m(i);
        plus[(i - 1, i)] = Complex64::new((s * (s + 1.0) - mi * (mi + 1.0)).sqrt(), 0.0);
    }
    let minus = plus.adjoint();
    let half = Complex64::new(0.5, 0.0);
    let half_i = Complex64::new(0.0, -0.5);
    SpinOperators {
        x: (&plus + &minus) * half,
        y: (&plus - &minus) * half_i,
        z: CMatrix::from_fn(n, n, |r, c| if r == c { Complex64::new(m(r), 0.0) } else { Complex64::new(0.0, 0.0) }),
    }
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Rotation matrix for ZYZ Euler angles in degrees.
pub fn euler_rotation(euler_deg: [f64; 3]) -> Matrix3<f64> {
    let [a, b, g] = euler_deg.map(f64::to_radians);
    let rz = |t: f64| Matrix3::new(t.cos(), -t.sin(), 0.0, t.sin(), t.cos(), 0.0, 0.0, 0.0, 1.0);
    let ry = |t: f64| Matrix3::new(t.cos(), 0.0, t.sin(), 0.0, 1.0, 0.0, -t.sin(), 0.0, t.cos());
    rz(a) * ry(b) * rz(g)
}

fn tensor(principal: [f64; 3], euler_deg: [f64; 3]) -> Matrix3<f64> {
    let r = euler_rotation(euler_deg);
    r * Matrix3::from_diagonal(&principal.into()) * r.transpose()
}

/// Electron operators lifted into the full product basis, plus the
/// nuclear operators of every hyperfine nucleus.
pub(crate) struct ProductOperators {
    pub electron: [CMatrix; 3],
    pub nuclei: Vec<[CMatrix; 3]>,
}

pub(crate) fn product_operators(sys: &SpinSystem) -> ProductOperators {
    let dims: Vec<usize> = std::iter::once(sys.spin_half_count as usize + 1)
        .chain(sys.hyperfine.iter().map(|h| h.nuclear_spin_half_count as usize + 1))
        .collect();
    let lift = |slot: usize, op: &CMatrix| -> CMatrix {
        let mut acc = if slot == 0 { op.clone() } else { identity(dims[0]) };
        for (k, &d) in dims.iter().enumerate().skip(1) {
            let factor = if k == slot { op.clone() } else { identity(d) };
            acc = kron(&acc, &factor);
        }
        acc
    };
    let e = spin_operators(sys.spin_half_count);
    let electron = [lift(0, &e.x), lift(0, &e.y), lift(0, &e.z)];
    let nuclei = sys
        .hyperfine
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let n = spin_operators(h.nuclear_spin_half_count);
            [lift(k + 1, &n.x), lift(k + 1, &n.y), lift(k + 1, &n.z)]
        })
        .collect();
    ProductOperators { electron, nuclei }
}

/// Field-independent part and the three Zeeman generators, so that
/// `H(B) = H0 + Σ_i B_i·Z_i` (MHz, B in gauss).
pub(crate) struct HamiltonianParts {
    pub static_part: CMatrix,
    pub zeeman: [CMatrix; 3],
}

pub(crate) fn hamiltonian_parts(sys: &SpinSystem, d_mhz: f64) -> HamiltonianParts {
    let ops = product_operators(sys);
    let dim = sys.dimension();
    let g = tensor(sys.g_factor, sys.euler_deg);
    let zfs = tensor(
        [-d_mhz / 3.0 + sys.e_mhz, -d_mhz / 3.0 - sys.e_mhz, 2.0 * d_mhz / 3.0],
        sys.euler_deg,
    );
    let c = |v: f64| Complex64::new(v, 0.0);

    let mut static_part = CMatrix::zeros(dim, dim);
    for i in 0..3 {
        for j in 0..3 {
            if zfs[(i, j)] != 0.0 {
                static_part += (&ops.electron[i] * &ops.electron[j]) * c(zfs[(i, j)]);
            }
        }
    }
    for (h, nuc) in sys.hyperfine.iter().zip(&ops.nuclei) {
        let a = tensor(h.a_mhz, h.euler_deg);
        for i in 0..3 {
            for j in 0..3 {
                if a[(i, j)] != 0.0 {
                    static_part += (&ops.electron[i] * &nuc[j]) * c(a[(i, j)]);
                }
            }
        }
    }

    let zeeman = std::array::from_fn(|i| {
        let mut z = CMatrix::zeros(dim, dim);
        for j in 0..3 {
            if g[(i, j)] != 0.0 {
                z += &ops.electron[j] * c(MU_B_OVER_H_MHZ_PER_G * g[(i, j)]);
            }
        }
        z
    });
    HamiltonianParts { static_part, zeeman }
}

impl HamiltonianParts {
    pub fn at(&self, b: Vec3) -> CMatrix {
        let mut h = self.static_part.clone();
        for i in 0..3 {
            if b[i] != 0.0 {
                h += &self.zeeman[i] * Complex64::new(b[i], 0.0);
            }
        }
        h
    }
}

/// Spin Hamiltonian in MHz for a field `b_g` (gauss) given in the system
/// frame: Zeeman + `D(S_z² − S(S+1)/3) + E(S_x² − S_y²)` + `S·A·I`.
pub fn build_hamiltonian(sys: &SpinSystem, b_g: Vec3) -> CMatrix {
    hamiltonian_parts(sys, sys.d_mhz).at(b_g)
}
