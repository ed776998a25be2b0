//! Linear aircraft lateral dynamics: continuous-time model assembly, RK4
//! integration, first-order Euler discretization, and an exact-propagation
//! oracle used to verify the integrators.
//!
//! State order is `[phi, p, beta, r]` (bank angle, roll rate, sideslip angle,
//! yaw rate), input order `[delta_a, delta_r]` (aileron, rudder). Angles and
//! rates are radians / radians per second throughout.

use serde::{Deserialize, Serialize};

use crate::math::{self, Mat4, Mat4x2, Vec2, Vec4};
use crate::{Error, Result};

/// Dimensional stability and control derivatives of the lateral model.
///
/// Field names mirror the conventional primed/starred coefficient symbols;
/// the serialized form uses spelled-out keys (`Lp_prime`, `Yphi_star`, ...).
/// `Nda_prime` and `Ndr_prime` have no tabulated value for the reference
/// aircraft and default to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AeroParams {
    #[serde(rename = "Lp_prime")]
    pub lp_prime: f64,
    #[serde(rename = "Lr_prime")]
    pub lr_prime: f64,
    #[serde(rename = "Lbeta_prime")]
    pub lbeta_prime: f64,
    #[serde(rename = "Lda_prime")]
    pub lda_prime: f64,
    #[serde(rename = "Ldr_prime")]
    pub ldr_prime: f64,
    #[serde(rename = "Np_prime")]
    pub np_prime: f64,
    #[serde(rename = "Nr_prime")]
    pub nr_prime: f64,
    #[serde(rename = "Nbeta_prime")]
    pub nbeta_prime: f64,
    #[serde(rename = "Nda_prime")]
    pub nda_prime: f64,
    #[serde(rename = "Ndr_prime")]
    pub ndr_prime: f64,
    #[serde(rename = "Yp_star")]
    pub yp_star: f64,
    #[serde(rename = "Yphi_star")]
    pub yphi_star: f64,
    #[serde(rename = "Yr_star")]
    pub yr_star: f64,
    #[serde(rename = "Ybeta")]
    pub ybeta: f64,
    #[serde(rename = "Yda_star")]
    pub yda_star: f64,
    #[serde(rename = "Ydr_star")]
    pub ydr_star: f64,
}

impl Default for AeroParams {
    fn default() -> Self {
        Self {
            lp_prime: -1.699,
            lr_prime: 0.172,
            lbeta_prime: -4.546,
            lda_prime: 27.276,
            ldr_prime: 0.576,
            np_prime: -0.0654,
            nr_prime: -0.0893,
            nbeta_prime: 3.382,
            nda_prime: 0.0,
            ndr_prime: 0.0,
            yp_star: 0.0,
            yphi_star: 0.0488,
            yr_star: 0.0,
            ybeta: -0.0829,
            yda_star: 0.0,
            ydr_star: 0.116,
        }
    }
}

impl AeroParams {
    pub fn is_finite(&self) -> bool {
        [
            self.lp_prime,
            self.lr_prime,
            self.lbeta_prime,
            self.lda_prime,
            self.ldr_prime,
            self.np_prime,
            self.nr_prime,
            self.nbeta_prime,
            self.nda_prime,
            self.ndr_prime,
            self.yp_star,
            self.yphi_star,
            self.yr_star,
            self.ybeta,
            self.yda_star,
            self.ydr_star,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Aircraft lateral state `[phi, p, beta, r]` in radians / rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LateralState {
    /// Bank angle (rad).
    pub phi: f64,
    /// Roll rate (rad/s).
    pub p: f64,
    /// Sideslip angle (rad).
    pub beta: f64,
    /// Yaw rate (rad/s).
    pub r: f64,
}

impl LateralState {
    pub fn new(phi: f64, p: f64, beta: f64, r: f64) -> Self {
        Self { phi, p, beta, r }
    }

    pub fn from_array(v: Vec4) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn to_array(self) -> Vec4 {
        [self.phi, self.p, self.beta, self.r]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Actuator deflections `[delta_a, delta_r]` in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    /// Aileron deflection (rad).
    pub delta_a: f64,
    /// Rudder deflection (rad).
    pub delta_r: f64,
}

impl ControlInput {
    pub fn new(delta_a: f64, delta_r: f64) -> Self {
        Self { delta_a, delta_r }
    }

    pub fn from_array(v: Vec2) -> Self {
        Self::new(v[0], v[1])
    }

    pub fn to_array(self) -> Vec2 {
        [self.delta_a, self.delta_r]
    }

    /// Componentwise clamp to `[-bound, bound]`.
    pub fn clamped(self, bound: f64) -> Self {
        Self::new(
            self.delta_a.clamp(-bound, bound),
            self.delta_r.clamp(-bound, bound),
        )
    }
}

/// Continuous-time model `x_dot = Ac x + Bc u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousModel {
    pub ac: Mat4,
    pub bc: Mat4x2,
}

/// Discrete-time model `x_next = F x + G u` obtained by first-order Euler,
/// so `F = I + Ac*dt` and `G = Bc*dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteModel {
    pub f: Mat4,
    pub g: Mat4x2,
    pub dt: f64,
}

/// Assembles the continuous lateral model from the aero derivatives.
///
/// Rows follow the state order: the `phi` row is exactly `[0, 1, 0, 0]`
/// with no input coupling (phi_dot = p), and the `beta` row carries
/// `(Yr* - 1)` on the yaw rate.
pub fn build_continuous(params: &AeroParams) -> ContinuousModel {
    let ac = [
        [0.0, 1.0, 0.0, 0.0],
        [0.0, params.lp_prime, params.lbeta_prime, params.lr_prime],
        [params.yphi_star, params.yp_star, params.ybeta, params.yr_star - 1.0],
        [0.0, params.np_prime, params.nbeta_prime, params.nr_prime],
    ];
    let bc = [
        [0.0, 0.0],
        [params.lda_prime, params.ldr_prime],
        [params.yda_star, params.ydr_star],
        [params.nda_prime, params.ndr_prime],
    ];
    ContinuousModel { ac, bc }
}

fn derivative(model: &ContinuousModel, x: &Vec4, u: &Vec2) -> Vec4 {
    math::add4(&math::mat4_vec(&model.ac, x), &math::mat4x2_vec(&model.bc, u))
}

/// Classical fourth-order Runge-Kutta step with the input held constant.
pub fn rk4_step(model: &ContinuousModel, x: LateralState, u: ControlInput, dt: f64) -> LateralState {
    let xv = x.to_array();
    let uv = u.to_array();
    let k1 = derivative(model, &xv, &uv);
    let k2 = derivative(model, &math::add4(&xv, &math::scale4(&k1, dt / 2.0)), &uv);
    let k3 = derivative(model, &math::add4(&xv, &math::scale4(&k2, dt / 2.0)), &uv);
    let k4 = derivative(model, &math::add4(&xv, &math::scale4(&k3, dt)), &uv);
    let mut out = xv;
    for i in 0..4 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    LateralState::from_array(out)
}

/// First-order Euler discretization: `F = I + Ac*dt`, `G = Bc*dt`.
pub fn euler_discretize(params: &AeroParams, dt: f64) -> DiscreteModel {
    let model = build_continuous(params);
    let mut f = math::identity4();
    for (frow, arow) in f.iter_mut().zip(model.ac.iter()) {
        for (fij, aij) in frow.iter_mut().zip(arow.iter()) {
            *fij += aij * dt;
        }
    }
    let mut g = [[0.0; 2]; 4];
    for (grow, brow) in g.iter_mut().zip(model.bc.iter()) {
        for (gij, bij) in grow.iter_mut().zip(brow.iter()) {
            *gij = bij * dt;
        }
    }
    DiscreteModel { f, g, dt }
}

/// One step of the discrete model: `F x + G u`.
pub fn discrete_step(model: &DiscreteModel, x: LateralState, u: ControlInput) -> LateralState {
    let fx = math::mat4_vec(&model.f, &x.to_array());
    let gu = math::mat4x2_vec(&model.g, &u.to_array());
    LateralState::from_array(math::add4(&fx, &gu))
}

const EXPM_DIM: usize = 6;
const EXPM_MAX_TERMS: usize = 80;
/// Stopping tolerance for the scaled Taylor series; the scaled matrix has
/// infinity norm at most 0.5, so the neglected tail is below `term * 2` and
/// the unscaled truncation error stays under 1e-12 with wide margin.
const EXPM_TOL: f64 = 1e-12;

type Mat6 = [[f64; EXPM_DIM]; EXPM_DIM];

fn mat6_mul(a: &Mat6, b: &Mat6) -> Mat6 {
    let mut out = [[0.0; EXPM_DIM]; EXPM_DIM];
    for i in 0..EXPM_DIM {
        for k in 0..EXPM_DIM {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..EXPM_DIM {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn mat6_inf_norm(a: &Mat6) -> f64 {
    a.iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max)
}

/// Matrix exponential by scaling-and-squaring with a Taylor series.
fn expm6(m: &Mat6) -> Result<Mat6> {
    let norm = mat6_inf_norm(m);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scale = (2.0_f64).powi(squarings as i32).recip();
    let mut scaled = *m;
    for row in scaled.iter_mut() {
        for v in row.iter_mut() {
            *v *= scale;
        }
    }

    let mut sum = [[0.0; EXPM_DIM]; EXPM_DIM];
    for (i, row) in sum.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let mut term = sum;
    // Extra headroom below the target: each squaring can roughly double the
    // accumulated error.
    let tol = EXPM_TOL / (2.0_f64).powi(squarings as i32 + 2);
    let mut converged = false;
    for k in 1..=EXPM_MAX_TERMS {
        term = mat6_mul(&term, &scaled);
        let inv_k = 1.0 / k as f64;
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v *= inv_k;
            }
        }
        for (srow, trow) in sum.iter_mut().zip(term.iter()) {
            for (s, t) in srow.iter_mut().zip(trow.iter()) {
                *s += t;
            }
        }
        if mat6_inf_norm(&term) < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SeriesDivergence {
            tol: EXPM_TOL,
            max_terms: EXPM_MAX_TERMS,
        });
    }
    for _ in 0..squarings {
        sum = mat6_mul(&sum, &sum);
    }
    Ok(sum)
}

/// Exact one-step propagation of the linear model with the input held
/// constant:
///
/// `x_next = exp(Ac*dt) x + (integral_0^dt exp(Ac*s) ds) Bc u`
///
/// evaluated through the exponential of the augmented matrix
/// `[[Ac*dt, Bc*dt], [0, 0]]`, whose top blocks are exactly the state and
/// input propagators. Serves as the accuracy oracle for `rk4_step`.
pub fn exact_step_oracle(
    model: &ContinuousModel,
    x: LateralState,
    u: ControlInput,
    dt: f64,
) -> Result<LateralState> {
    let (f, g) = exact_propagators(model, dt)?;
    let fx = math::mat4_vec(&f, &x.to_array());
    let gu = math::mat4x2_vec(&g, &u.to_array());
    Ok(LateralState::from_array(math::add4(&fx, &gu)))
}

/// Exact discrete propagators `(F, G)` over one step of length `dt`.
pub fn exact_propagators(model: &ContinuousModel, dt: f64) -> Result<(Mat4, Mat4x2)> {
    let mut aug = [[0.0; EXPM_DIM]; EXPM_DIM];
    for i in 0..4 {
        for j in 0..4 {
            aug[i][j] = model.ac[i][j] * dt;
        }
        for j in 0..2 {
            aug[i][4 + j] = model.bc[i][j] * dt;
        }
    }
    let e = expm6(&aug)?;
    let mut f = [[0.0; 4]; 4];
    let mut g = [[0.0; 2]; 4];
    for i in 0..4 {
        for j in 0..4 {
            f[i][j] = e[i][j];
        }
        for j in 0..2 {
            g[i][j] = e[i][4 + j];
        }
    }
    Ok((f, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table_model() -> ContinuousModel {
        build_continuous(&AeroParams::default())
    }

    #[test]
    fn continuous_model_matches_tabulated_coefficients() {
        let m = table_model();
        assert_eq!(m.ac[1][1], -1.699);
        assert_eq!(m.ac[0], [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(m.bc[0], [0.0, 0.0]);
        // beta row uses (Yr* - 1) on the yaw rate, with Yr* = 0.
        assert_eq!(m.ac[2][3], -1.0);
        assert_eq!(m.bc[1][0], 27.276);
    }

    #[test]
    fn euler_discretization_entries() {
        let d = euler_discretize(&AeroParams::default(), 0.1);
        assert_eq!(d.f[0][1], 0.1);
        assert!((d.f[1][1] - 0.8301).abs() < 1e-12);
        assert!((d.g[1][0] - 2.7276).abs() < 1e-12);
        assert_eq!(d.f[0][0], 1.0);
        assert_eq!(d.g[0], [0.0, 0.0]);
    }

    #[test]
    fn origin_is_fixed_point() {
        let m = table_model();
        let zero = LateralState::default();
        let u = ControlInput::default();
        assert_eq!(rk4_step(&m, zero, u, 0.1), zero);
        let d = euler_discretize(&AeroParams::default(), 0.1);
        assert_eq!(discrete_step(&d, zero, u), zero);
        assert_eq!(exact_step_oracle(&m, zero, u, 0.1).unwrap(), zero);
    }

    #[test]
    fn rk4_matches_exponential_on_basis_state() {
        let m = table_model();
        let x = LateralState::new(1.0, 0.0, 0.0, 0.0);
        let u = ControlInput::default();
        let rk = rk4_step(&m, x, u, 0.1);
        let exact = exact_step_oracle(&m, x, u, 0.1).unwrap();
        for (a, b) in rk.to_array().iter().zip(exact.to_array().iter()) {
            assert!((a - b).abs() <= 1e-6, "component error {}", (a - b).abs());
        }
    }

    #[test]
    fn rk4_step_halving_is_fifth_order() {
        let m = table_model();
        let x = LateralState::new(0.3, -0.1, 0.2, 0.05);
        let u = ControlInput::new(0.4, -0.2);
        let diff = |h: f64| {
            let full = rk4_step(&m, x, u, h);
            let half = rk4_step(&m, rk4_step(&m, x, u, h / 2.0), u, h / 2.0);
            math::inf_norm4(&math::add4(
                &full.to_array(),
                &math::neg4(&half.to_array()),
            ))
        };
        let d1 = diff(0.1);
        let d2 = diff(0.05);
        let ratio = d1 / d2;
        // one-step-vs-two-half-steps differences shrink ~2^5 per halving
        assert!(ratio > 20.0 && ratio < 45.0, "ratio {ratio}");
    }

    #[test]
    fn rk4_error_vs_oracle_shrinks_at_order_four() {
        let m = table_model();
        let x = LateralState::new(0.2, 0.1, -0.15, 0.08);
        let u = ControlInput::new(0.3, -0.5);
        let err = |h: f64, steps: usize| {
            let mut cur = x;
            for _ in 0..steps {
                cur = rk4_step(&m, cur, u, h);
            }
            let exact = exact_step_oracle(&m, x, u, h * steps as f64).unwrap();
            math::inf_norm4(&math::add4(
                &cur.to_array(),
                &math::neg4(&exact.to_array()),
            ))
        };
        let ratio = err(0.1, 1) / err(0.05, 2);
        assert!(ratio >= 12.0 && ratio <= 20.0, "ratio {ratio}");
    }

    #[test]
    fn rk4_negation_equivariance_exact() {
        let m = table_model();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let x = LateralState::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let u = ControlInput::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let pos = rk4_step(&m, x, u, 0.1).to_array();
            let neg = rk4_step(
                &m,
                LateralState::from_array(math::neg4(&x.to_array())),
                ControlInput::new(-u.delta_a, -u.delta_r),
                0.1,
            )
            .to_array();
            for i in 0..4 {
                assert_eq!(pos[i], -neg[i]);
            }
        }
    }

    #[test]
    fn discrete_step_matches_naive_matmul() {
        let d = euler_discretize(&AeroParams::default(), 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let x: Vec4 = core::array::from_fn(|_| rng.random_range(-2.0..2.0));
            let u: Vec2 = core::array::from_fn(|_| rng.random_range(-1.0..1.0));
            // independent naive triple-loop
            let mut expect = [0.0_f64; 4];
            for i in 0..4 {
                for j in 0..4 {
                    expect[i] += d.f[i][j] * x[j];
                }
                for j in 0..2 {
                    expect[i] += d.g[i][j] * u[j];
                }
            }
            let got = discrete_step(
                &d,
                LateralState::from_array(x),
                ControlInput::from_array(u),
            )
            .to_array();
            for i in 0..4 {
                assert!((got[i] - expect[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn euler_vs_rk4_consistency_second_order() {
        // The worst-case gap over the unit infinity-ball at dt = 0.1 is
        // ~0.30 (dominated by the aileron->roll column through A*B*dt^2/2);
        // check the measured bound and the O(dt^2) shrink rate.
        let m = table_model();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let gap = |h: f64, rng: &mut ChaCha8Rng| {
            let params = AeroParams::default();
            let d = euler_discretize(&params, h);
            let mut worst = 0.0_f64;
            for _ in 0..500 {
                let x = LateralState::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                let u =
                    ControlInput::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let de = discrete_step(&d, x, u).to_array();
                let rk = rk4_step(&m, x, u, h).to_array();
                let scale = x
                    .to_array()
                    .iter()
                    .chain(u.to_array().iter())
                    .fold(0.0_f64, |a, v| a.max(v.abs()));
                let diff = math::inf_norm4(&math::add4(&de, &math::neg4(&rk)));
                worst = worst.max(diff / scale);
            }
            worst
        };
        let g1 = gap(0.1, &mut rng);
        let g2 = gap(0.05, &mut rng);
        assert!(g1 <= 0.35, "gap at dt=0.1 was {g1}");
        // O(dt^2): halving dt shrinks the gap by roughly 4
        assert!(g1 / g2 > 2.5 && g1 / g2 < 6.0, "ratio {}", g1 / g2);
    }

    #[test]
    fn oracle_with_zero_dynamics_reduces_to_euler() {
        let params = AeroParams::default();
        let mut model = build_continuous(&params);
        model.ac = [[0.0; 4]; 4];
        let x = LateralState::new(0.4, -0.2, 0.1, 0.3);
        let u = ControlInput::new(0.5, -0.25);
        let got = exact_step_oracle(&model, x, u, 0.1).unwrap().to_array();
        let gu = math::mat4x2_vec(&model.bc, &u.to_array());
        let expect = math::add4(&x.to_array(), &math::scale4(&gu, 0.1));
        for i in 0..4 {
            assert!((got[i] - expect[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn aero_params_toml_round_trip() {
        let toml_src = r#"
            Lp_prime = -1.699
            Nbeta_prime = 3.382
        "#;
        let parsed: AeroParams = toml::from_str(toml_src).unwrap();
        assert_eq!(parsed, AeroParams::default());
        let unknown = toml::from_str::<AeroParams>("Lq_prime = 1.0");
        assert!(unknown.is_err());
    }
}
