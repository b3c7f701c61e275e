use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::derive_rng;

/// Class-incremental protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// Learn from half: a first phase with half the classes, then `N` phases.
    Lfh,
    /// Learn from scratch: `N` phases of (nearly) equal size.
    Lfs,
}

impl std::str::FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lfh" => Ok(Protocol::Lfh),
            "lfs" => Ok(Protocol::Lfs),
            other => Err(format!("unknown protocol {other:?} (expected lfh or lfs)")),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhasePlan {
    pub protocol: Protocol,
    pub phases_param: usize,
    pub classes_per_phase: Vec<Vec<u32>>,
}

impl PhasePlan {
    pub fn phase_count(&self) -> usize {
        self.classes_per_phase.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.classes_per_phase.iter().map(Vec::len).collect()
    }
}

/// `total` split into `groups` sizes differing by at most one, larger first.
fn even_split(total: usize, groups: usize) -> Vec<usize> {
    let (base, extra) = (total / groups, total % groups);
    (0..groups).map(|g| base + usize::from(g < extra)).collect()
}

pub fn make_phase_plan(
    classes: usize,
    phases: usize,
    protocol: Protocol,
    seed: u64,
) -> Result<PhasePlan, PlanError> {
    if phases == 0 {
        return Err(PlanError::Invalid(
            "phase count N must be at least 1".into(),
        ));
    }
    let sizes = match protocol {
        Protocol::Lfs => {
            if classes < phases {
                return Err(PlanError::Invalid(format!(
                    "LFS needs C >= N, got C={classes}, N={phases}"
                )));
            }
            even_split(classes, phases)
        }
        Protocol::Lfh => {
            if classes < 2 {
                return Err(PlanError::Invalid(format!(
                    "LFH needs at least 2 classes, got {classes}"
                )));
            }
            let first = classes.div_ceil(2);
            let rest = classes - first;
            if rest < phases {
                return Err(PlanError::Invalid(format!(
                    "LFH with C={classes} leaves {rest} classes for N={phases} incremental phases"
                )));
            }
            std::iter::once(first)
                .chain(even_split(rest, phases))
                .collect()
        }
    };
    let mut order: Vec<u32> = (0..classes as u32).collect();
    order.shuffle(&mut derive_rng(seed, "phase-plan"));
    let mut classes_per_phase = Vec::with_capacity(sizes.len());
    let mut rest = order.as_slice();
    for n in sizes {
        let (head, tail) = rest.split_at(n);
        classes_per_phase.push(head.to_vec());
        rest = tail;
    }
    Ok(PhasePlan {
        protocol,
        phases_param: phases,
        classes_per_phase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_sizes() {
        assert_eq!(
            make_phase_plan(100, 5, Protocol::Lfs, 0).unwrap().sizes(),
            vec![20; 5]
        );
        assert_eq!(
            make_phase_plan(256, 10, Protocol::Lfh, 0).unwrap().sizes(),
            vec![128, 13, 13, 13, 13, 13, 13, 13, 13, 12, 12]
        );
        assert_eq!(
            make_phase_plan(101, 2, Protocol::Lfh, 0).unwrap().sizes(),
            vec![51, 25, 25]
        );
        assert_eq!(
            make_phase_plan(10, 4, Protocol::Lfh, 0).unwrap().sizes(),
            vec![5, 2, 1, 1, 1]
        );
    }

    #[test]
    fn partition_of_all_classes() {
        for (c, n, p) in [
            (10, 4, Protocol::Lfh),
            (37, 6, Protocol::Lfs),
            (2, 1, Protocol::Lfh),
        ] {
            let plan = make_phase_plan(c, n, p, 9).unwrap();
            let mut all: Vec<u32> = plan.classes_per_phase.concat();
            all.sort();
            assert_eq!(all, (0..c as u32).collect::<Vec<_>>());
        }
    }

    #[test]
    fn seed_controls_order() {
        let a = make_phase_plan(20, 4, Protocol::Lfs, 1).unwrap();
        assert_eq!(a, make_phase_plan(20, 4, Protocol::Lfs, 1).unwrap());
        assert_ne!(a, make_phase_plan(20, 4, Protocol::Lfs, 2).unwrap());
    }

    #[test]
    fn invalid_phase_counts() {
        assert!(make_phase_plan(10, 0, Protocol::Lfs, 0).is_err());
        assert!(make_phase_plan(3, 4, Protocol::Lfs, 0).is_err());
        assert!(make_phase_plan(1, 1, Protocol::Lfh, 0).is_err());
        assert!(make_phase_plan(10, 6, Protocol::Lfh, 0).is_err());
    }
}
