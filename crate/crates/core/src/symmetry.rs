//! Symmetric data augmentation: mirroring one-step transitions through a
//! reference point, checking when the mirrored transition is dynamically
//! valid, and measuring how well a pair of transitions matches the mirror
//! condition.

use serde::{Deserialize, Serialize};

use crate::dynamics::{discrete_step, ControlInput, DiscreteModel, LateralState};
use crate::math::{self, Vec2, Vec4};
use crate::networks::Mlp;
use crate::{Error, Result};

/// One Markov sample in the agent's observation coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub x: Vec4,
    pub a: Vec2,
    pub r: f64,
    pub x_next: Vec4,
    pub done: bool,
}

impl Transition {
    pub fn is_finite(&self) -> bool {
        self.x.iter().all(|v| v.is_finite())
            && self.a.iter().all(|v| v.is_finite())
            && self.r.is_finite()
            && self.x_next.iter().all(|v| v.is_finite())
    }
}

/// How the mirrored sample's reward relates to the original.
///
/// `Preserve` keeps `r' = r`, which is the choice consistent with an even
/// reward function; `Negate` flips the sign and is retained for ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    #[default]
    Preserve,
    Negate,
}

/// Mirror transform for transitions: states reflect through `x_star`,
/// actions negate, the done flag carries over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentationMap {
    pub x_star: Vec4,
    pub reward_mode: RewardMode,
}

impl Default for AugmentationMap {
    fn default() -> Self {
        Self {
            x_star: [0.0; 4],
            reward_mode: RewardMode::Preserve,
        }
    }
}

fn mirror(v: &Vec4, x_star: &Vec4) -> Vec4 {
    core::array::from_fn(|i| 2.0 * x_star[i] - v[i])
}

/// Produces the mirrored transition. The transform is blockwise:
/// `x' = 2 x* - x`, `a' = -a`, `x_next' = 2 x* - x_next`, `done' = done`,
/// and the reward follows the map's [`RewardMode`]. With `x* = 0` all
/// operations are exact sign flips, so applying the map twice restores the
/// input bit for bit.
pub fn augment(s: &Transition, map: &AugmentationMap) -> Transition {
    Transition {
        x: mirror(&s.x, &map.x_star),
        a: [-s.a[0], -s.a[1]],
        r: match map.reward_mode {
            RewardMode::Preserve => s.r,
            RewardMode::Negate => -s.r,
        },
        x_next: mirror(&s.x_next, &map.x_star),
        done: s.done,
    }
}

/// Which mirror-validity condition a `(model, x_star)` pair satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryCase {
    /// `x* = 0` with state-independent `F`, `G` (always true for the
    /// linear model).
    Case1,
    /// `x* != 0` requires `F` to be the identity as well.
    Case2,
    /// No condition holds; mirrored transitions are not guaranteed valid.
    None,
}

/// Classifies the reference point against the discrete model. The linear
/// model has constant `F` and `G`, so `x* = 0` always qualifies; a nonzero
/// reference additionally needs `F = I`.
pub fn check_theorem1(model: &DiscreteModel, x_star: &Vec4) -> SymmetryCase {
    let zero_ref = x_star.iter().all(|v| *v == 0.0);
    if zero_ref {
        return SymmetryCase::Case1;
    }
    if model.f == math::identity4() {
        return SymmetryCase::Case2;
    }
    SymmetryCase::None
}

/// Steps `(x, a)` and its mirror `(2 x* - x, -a)` through the model and
/// returns the infinity-norm deviation of the next-state midpoint from
/// `x_star`. Errors when no symmetry case applies.
pub fn verify_symmetric_pair(
    model: &DiscreteModel,
    x: &Vec4,
    a: &Vec2,
    x_star: &Vec4,
) -> Result<f64> {
    if check_theorem1(model, x_star) == SymmetryCase::None {
        return Err(Error::NoSymmetryCase);
    }
    let next = discrete_step(
        model,
        LateralState::from_array(*x),
        ControlInput::from_array(*a),
    )
    .to_array();
    let mirrored = discrete_step(
        model,
        LateralState::from_array(mirror(x, x_star)),
        ControlInput::new(-a[0], -a[1]),
    )
    .to_array();
    let midpoint: Vec4 = core::array::from_fn(|i| (next[i] + mirrored[i]) / 2.0 - x_star[i]);
    Ok(math::inf_norm4(&midpoint))
}

/// Diagnostic for critic symmetry: mean `|Q(x, a) - Q(-x, -a)|` over a
/// probe set. This is a property of converged critics and is only monitored,
/// never asserted during training.
pub fn q_symmetry_gap(critic: &Mlp, probes: &[(Vec4, Vec2)]) -> f64 {
    if probes.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    let mut input = [0.0_f64; 6];
    let mut mirrored = [0.0_f64; 6];
    for (x, a) in probes {
        input[..4].copy_from_slice(x);
        input[4..].copy_from_slice(a);
        for (m, v) in mirrored.iter_mut().zip(input.iter()) {
            *m = -v;
        }
        let q = critic.forward(&input)[0];
        let q_m = critic.forward(&mirrored)[0];
        total += (q - q_m).abs();
    }
    total / probes.len() as f64
}
