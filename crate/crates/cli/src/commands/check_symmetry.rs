//! Mirror-symmetry verification: classifies the configured reference point
//! against the Euler-discretized model, then sweeps random state/action
//! pairs and reports the worst next-state midpoint deviation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use symrl_core::dynamics::euler_discretize;
use symrl_core::math::{identity4, Vec2, Vec4};
use symrl_core::symmetry::{check_theorem1, verify_symmetric_pair, SymmetryCase};

use crate::config::EffectiveConfig;

/// Returns whether the check passed (caller maps this to the exit code).
pub fn run_check(cfg: &EffectiveConfig) -> anyhow::Result<bool> {
    let mut model = euler_discretize(&cfg.aero, cfg.env.dt);
    if cfg.symmetry.identity_f {
        model.f = identity4();
    }
    let x_star: Vec4 = cfg.symmetry.x_star_deg.map(f64::to_radians);

    let case = check_theorem1(&model, &x_star);
    match case {
        SymmetryCase::None => {
            println!("no symmetry case applies (x* != 0 and F != I): FAIL");
            return Ok(false);
        }
        SymmetryCase::Case1 => println!("symmetry case 1: x* = 0 with state-independent F, G"),
        SymmetryCase::Case2 => println!("symmetry case 2: F = I with x* != 0"),
    }

    let env = cfg.env_config();
    let seed = cfg.run.seeds.first().copied().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0xC0);
    let mut worst = 0.0_f64;
    for _ in 0..cfg.symmetry.pairs {
        let x: Vec4 = [
            rng.random_range(-env.init_phi..=env.init_phi),
            rng.random_range(-env.init_p..=env.init_p),
            rng.random_range(-env.init_beta..=env.init_beta),
            rng.random_range(-env.init_r..=env.init_r),
        ];
        let a: Vec2 =
            core::array::from_fn(|_| rng.random_range(-env.action_bound..=env.action_bound));
        let deviation = verify_symmetric_pair(&model, &x, &a, &x_star)?;
        worst = worst.max(deviation);
    }
    let passed = worst <= cfg.symmetry.tolerance;
    println!(
        "max midpoint deviation over {} pairs: {:e} (tolerance {:e}): {}",
        cfg.symmetry.pairs,
        worst,
        cfg.symmetry.tolerance,
        if passed { "PASS" } else { "FAIL" }
    );
    Ok(passed)
}
