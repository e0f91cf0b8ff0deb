//! Equilibria, linearisation and threshold quantities of the rescaled model.
//!
//! Jacobians are reported in the infective-first ordering
//! `(I_h, I_v, S_h, S_v, D)`, obtained from the canonical state layout by
//! [`REARRANGED`].

mod level_set;

pub use level_set::{
    comparison_bound_check, level_set_bounds, metzler_comparison, ComparisonReport, LevelSetBounds,
    MetzlerComparison, DECAY_LEVEL,
};

use nalgebra::{Complex, Matrix2, Matrix5, Schur};
use serde::Serialize;

use crate::model::{DimensionlessParams, SystemState, I_H, I_V, PRED, S_H, S_V};

/// `REARRANGED[i]` is the canonical index of the i-th rearranged variable.
pub const REARRANGED: [usize; 5] = [I_H, I_V, S_H, S_V, PRED];

/// Relative tolerance (times the spectral radius) below which a real part
/// counts as zero.
pub const ZERO_REAL_PART_REL: f64 = 1e-6;

pub fn basic_reproduction_number(p: &DimensionlessParams) -> f64 {
    (p.b_h * p.b_v / p.removal()).sqrt()
}

/// Trivial (`E1`) and vector-predator coexistence (`E2`) disease-free states.
pub fn disease_free_equilibria() -> (SystemState, SystemState) {
    (SystemState::new(1.0, 0.0, 0.0, 0.0, 0.0), SystemState::new(1.0, 0.0, 1.0, 0.0, 1.0))
}

/// Closed-form endemic equilibrium, present iff `B_h B_v >= gamma + mu_h`.
pub fn endemic_equilibrium(p: &DimensionlessParams) -> Option<SystemState> {
    let (bh, bv, mh, g) = (p.b_h, p.b_v, p.mu_h, p.gamma);
    let excess = bh * bv - g - mh;
    if excess < 0.0 {
        return None;
    }
    let host_den = bv * (bh + mh);
    let vec_den = bh * (bv * mh + g + mh);
    Some(SystemState {
        s_h: (bv * mh + g + mh) / host_den,
        i_h: mh * excess / (host_den * (g + mh)),
        s_v: (bh + mh) * (g + mh) / vec_den,
        i_v: mh * excess / vec_den,
        d: 1.0,
    })
}

/// Analytic Jacobian of the free rescaled model in canonical order.
pub fn jacobian_canonical(s: &SystemState, p: &DimensionlessParams) -> Matrix5<f64> {
    let (bh, bv, md) = (p.b_h, p.b_v, p.mu_d);
    let SystemState { s_h, i_h, s_v, i_v, d } = *s;
    #[rustfmt::skip]
    let j = Matrix5::new(
        -p.mu_h - bh * i_v, 0.0,           0.0,                    -bh * s_h,        0.0,
        bh * i_v,           -p.removal(),  0.0,                    bh * s_h,         0.0,
        0.0,                -bv * s_v,     1.0 - bv * i_h - d,     1.0,              -s_v,
        0.0,                bv * s_v,      bv * i_h,               -d,               -i_v,
        0.0,                0.0,           md * d,                 md * d,           md * (s_v + i_v - 1.0),
    );
    j
}

/// Jacobian in the rearranged order `(I_h, I_v, S_h, S_v, D)`.
pub fn jacobian(s: &SystemState, p: &DimensionlessParams) -> Matrix5<f64> {
    let j = jacobian_canonical(s, p);
    Matrix5::from_fn(|r, c| j[(REARRANGED[r], REARRANGED[c])])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex<f64>> for Eigenvalue {
    fn from(z: Complex<f64>) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// Spectrum of a 5×5 real matrix via Hessenberg reduction and shifted QR,
/// sorted by real part then imaginary part.
pub fn eigenvalues5(m: &Matrix5<f64>) -> Vec<Eigenvalue> {
    let schur = Schur::try_new(*m, f64::EPSILON, 10_000).expect("Schur iteration did not converge");
    let mut eig: Vec<Eigenvalue> = schur.complex_eigenvalues().iter().map(|&z| z.into()).collect();
    eig.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    eig
}

/// Eigenvalues of a real 2×2 matrix from its trace and determinant.
pub fn eigenvalues2(m: &Matrix2<f64>) -> [Eigenvalue; 2] {
    let half_tr = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = half_tr * half_tr - det;
    if disc >= 0.0 {
        let r = disc.sqrt();
        // avoid cancellation in the smaller root
        let big = if half_tr >= 0.0 { half_tr + r } else { half_tr - r };
        let small = if big != 0.0 { det / big } else { 0.0 };
        let (lo, hi) = if big < small { (big, small) } else { (small, big) };
        [Eigenvalue { re: lo, im: 0.0 }, Eigenvalue { re: hi, im: 0.0 }]
    } else {
        let w = (-disc).sqrt();
        [Eigenvalue { re: half_tr, im: -w }, Eigenvalue { re: half_tr, im: w }]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InfectiveBlock {
    /// `F - V = [[-(gamma+mu_h), B_h], [B_v, -1]]`.
    pub matrix: [[f64; 2]; 2],
    pub eigenvalues: [Eigenvalue; 2],
    pub spectral_abscissa: f64,
}

/// Linearised infective dynamics at `E2`.
pub fn infective_block(p: &DimensionlessParams) -> InfectiveBlock {
    let m = Matrix2::new(-p.removal(), p.b_h, p.b_v, -1.0);
    let eigenvalues = eigenvalues2(&m);
    InfectiveBlock {
        matrix: [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]],
        spectral_abscissa: eigenvalues[1].re.max(eigenvalues[0].re),
        eigenvalues,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EquilibriumLabel {
    E1,
    E2,
    Ee,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub label: EquilibriumLabel,
    pub state: SystemState,
    /// Rows and columns in the order `(I_h, I_v, S_h, S_v, D)`.
    pub jacobian: [[f64; 5]; 5],
    pub eigenvalues: Vec<Eigenvalue>,
    pub classification: String,
    pub n_negative: usize,
    pub n_zero_real: usize,
    pub n_positive: usize,
}

fn report(label: EquilibriumLabel, state: SystemState, p: &DimensionlessParams, r0: f64) -> EquilibriumReport {
    let j = jacobian(&state, p);
    let eigenvalues = eigenvalues5(&j);
    let radius = eigenvalues.iter().map(|e| e.re.hypot(e.im)).fold(0.0, f64::max);
    let tol = ZERO_REAL_PART_REL * radius.max(f64::MIN_POSITIVE);
    let n_positive = eigenvalues.iter().filter(|e| e.re > tol).count();
    let n_negative = eigenvalues.iter().filter(|e| e.re < -tol).count();
    let n_zero_real = eigenvalues.len() - n_positive - n_negative;

    let classification = match label {
        EquilibriumLabel::E1 => "unstable (non-hyperbolic)".to_string(),
        EquilibriumLabel::E2 if r0 > 1.0 => "unstable".to_string(),
        EquilibriumLabel::E2 if r0 < 1.0 => "infectives locally decaying (non-hyperbolic)".to_string(),
        EquilibriumLabel::E2 => "non-hyperbolic (threshold R0 = 1)".to_string(),
        EquilibriumLabel::Ee => match (n_positive, n_zero_real) {
            (0, 0) => "asymptotically stable".to_string(),
            (0, _) => format!("non-hyperbolic ({n_zero_real} eigenvalues with zero real part, none positive)"),
            _ => "unstable".to_string(),
        },
    };

    EquilibriumReport {
        label,
        state,
        jacobian: std::array::from_fn(|r| std::array::from_fn(|c| j[(r, c)])),
        eigenvalues,
        classification,
        n_negative,
        n_zero_real,
        n_positive,
    }
}

/// Reports for `E1`, `E2` and, when it exists, the endemic equilibrium.
pub fn classify_equilibria(p: &DimensionlessParams) -> Vec<EquilibriumReport> {
    let r0 = basic_reproduction_number(p);
    let (e1, e2) = disease_free_equilibria();
    let mut out = vec![report(EquilibriumLabel::E1, e1, p, r0), report(EquilibriumLabel::E2, e2, p, r0)];
    if let Some(ee) = endemic_equilibrium(p) {
        out.push(report(EquilibriumLabel::Ee, ee, p, r0));
    }
    out
}
