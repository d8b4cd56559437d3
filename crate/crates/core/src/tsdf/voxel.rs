use serde::{Deserialize, Serialize};

/// Fused signed distance and weight of one voxel. `omega == 0` means unobserved.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TsdfVoxel {
    pub phi: f64,
    pub omega: f64,
}

impl TsdfVoxel {
    #[inline]
    pub fn is_observed(&self) -> bool {
        self.omega > 0.0
    }
}

/// How the voxel weight evolves when a new observation arrives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    /// `min(Ω + ω, Ω_max)`
    Accumulate,
    /// `min((Ω + ω) / 2, Ω_max)`
    Average,
}

/// Folds one observation `(rho, omega_new)` into `voxel`.
///
/// The incoming distance is clamped to `[-truncation, truncation]`. A zero
/// weight leaves the voxel untouched.
#[inline]
pub fn update_voxel(
    voxel: TsdfVoxel,
    rho: f64,
    omega_new: f64,
    mode: UpdateMode,
    omega_max: f64,
    truncation: f64,
) -> TsdfVoxel {
    if !(omega_new > 0.0) {
        return voxel;
    }
    let rho = rho.clamp(-truncation, truncation);
    let total = voxel.omega + omega_new;
    // the mean is a convex combination; the clamp only absorbs rounding
    let phi = ((voxel.omega * voxel.phi + omega_new * rho) / total).clamp(-truncation, truncation);
    let omega = match mode {
        UpdateMode::Accumulate => total.min(omega_max),
        UpdateMode::Average => (total / 2.0).min(omega_max),
    };
    TsdfVoxel { phi, omega }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TAU: f64 = 0.4;

    #[test]
    fn accumulate_example() {
        let v = TsdfVoxel { phi: 0.2, omega: 1.0 };
        let u = update_voxel(v, 0.4, 1.0, UpdateMode::Accumulate, 10.0, TAU);
        assert!((u.phi - 0.3).abs() < 1e-12);
        assert_eq!(u.omega, 2.0);
    }

    #[test]
    fn average_example() {
        let v = TsdfVoxel { phi: 0.0, omega: 0.4 };
        let u = update_voxel(v, 0.0, 0.8, UpdateMode::Average, 10.0, TAU);
        assert!((u.omega - 0.6).abs() < 1e-12);
    }

    #[test]
    fn first_observation_takes_rho() {
        for mode in [UpdateMode::Accumulate, UpdateMode::Average] {
            let u = update_voxel(TsdfVoxel::default(), 0.15, 0.37, mode, 10.0, TAU);
            assert_eq!(u.phi, 0.15);
        }
    }

    #[test]
    fn cap_applies() {
        let v = TsdfVoxel { phi: 0.0, omega: 9.8 };
        let u = update_voxel(v, 0.0, 0.5, UpdateMode::Accumulate, 10.0, TAU);
        assert_eq!(u.omega, 10.0);
    }

    #[test]
    fn zero_weight_is_noop_and_rho_is_clamped() {
        let v = TsdfVoxel { phi: 0.1, omega: 2.0 };
        assert_eq!(update_voxel(v, 5.0, 0.0, UpdateMode::Average, 10.0, TAU), v);
        let u = update_voxel(TsdfVoxel::default(), 5.0, 1.0, UpdateMode::Average, 10.0, TAU);
        assert_eq!(u.phi, TAU);
    }

    proptest! {
        #[test]
        fn bounds_hold(obs in proptest::collection::vec((-2.0f64..2.0, 0.0f64..3.0), 1..40), avg in any::<bool>()) {
            let mode = if avg { UpdateMode::Average } else { UpdateMode::Accumulate };
            let mut v = TsdfVoxel::default();
            for (rho, w) in obs {
                let before = v.omega;
                v = update_voxel(v, rho, w, mode, 5.0, TAU);
                prop_assert!(v.omega >= 0.0 && v.omega <= 5.0);
                prop_assert!(v.phi.abs() <= TAU);
                if mode == UpdateMode::Accumulate {
                    prop_assert!(v.omega >= before);
                }
            }
        }

        #[test]
        fn average_halves_error(target in 0.01f64..1.0, start in 0.0f64..1.0, steps in 1usize..30) {
            let mut v = TsdfVoxel { phi: 0.0, omega: start };
            for _ in 0..steps {
                let before = (v.omega - target).abs();
                v = update_voxel(v, 0.0, target, UpdateMode::Average, 10.0, TAU);
                let after = (v.omega - target).abs();
                prop_assert!((after - before / 2.0).abs() <= 1e-15);
            }
        }
    }
}
