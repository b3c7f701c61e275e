use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LedgerError {
    #[error("units per class must be at least 1")]
    NoUnits,
    #[error("compressed proportion {0} outside [0, 1]")]
    Proportion(f64),
    #[error("capacity per unit {0} must be a finite value >= 1")]
    Capacity(f64),
}

/// Per-class memory budget split between real images and edge-map prompts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryLedger {
    /// Budget `b`, in units of one original RGB image.
    pub units_per_class: u32,
    /// Whole units spent on prompts: `round(alpha * b)`.
    pub compressed_units: u32,
    /// Edge maps that fit in one unit (24 for size-preserving prompts).
    pub capacity_per_unit: f64,
    /// Real-image slots `R`.
    pub real_slots: u32,
    /// Prompt slots `S`.
    pub synthetic_slots: u32,
}

impl MemoryLedger {
    /// Effective compressed proportion after rounding to whole units.
    pub fn alpha(&self) -> f64 {
        f64::from(self.compressed_units) / f64::from(self.units_per_class)
    }

    pub fn slots(&self) -> (u32, u32) {
        (self.real_slots, self.synthetic_slots)
    }

    /// Rechecks the derived fields, e.g. after deserialization.
    pub fn is_consistent(&self) -> bool {
        allocate(self.units_per_class, self.alpha(), self.capacity_per_unit)
            .is_ok_and(|l| l == *self)
    }
}

pub fn allocate(
    units_per_class: u32,
    alpha: f64,
    capacity_per_unit: f64,
) -> Result<MemoryLedger, LedgerError> {
    if units_per_class == 0 {
        return Err(LedgerError::NoUnits);
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(LedgerError::Proportion(alpha));
    }
    if !(capacity_per_unit.is_finite() && capacity_per_unit >= 1.0) {
        return Err(LedgerError::Capacity(capacity_per_unit));
    }
    let b = f64::from(units_per_class);
    let compressed_units = (alpha * b).round().clamp(0.0, b) as u32;
    let synthetic_slots = (f64::from(compressed_units) * capacity_per_unit).floor() as u32;
    Ok(MemoryLedger {
        units_per_class,
        compressed_units,
        capacity_per_unit,
        real_slots: units_per_class - compressed_units,
        synthetic_slots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_allocations() {
        assert_eq!(allocate(5, 0.2, 18.838).unwrap().slots(), (4, 18));
        assert_eq!(allocate(5, 0.4, 18.838).unwrap().slots(), (3, 37));
        assert_eq!(allocate(20, 0.1, 24.0).unwrap().slots(), (18, 48));
        assert_eq!(allocate(5, 0.0, 18.838).unwrap().slots(), (5, 0));
    }

    #[test]
    fn invalid_inputs() {
        assert_eq!(allocate(0, 0.1, 24.0), Err(LedgerError::NoUnits));
        assert_eq!(allocate(5, 1.5, 24.0), Err(LedgerError::Proportion(1.5)));
        assert_eq!(allocate(5, -0.1, 24.0), Err(LedgerError::Proportion(-0.1)));
        assert_eq!(allocate(5, 0.1, 0.5), Err(LedgerError::Capacity(0.5)));
        assert!(allocate(5, f64::NAN, 24.0).is_err());
    }

    #[test]
    fn effective_alpha_is_unit_fraction() {
        let l = allocate(4, 0.3, 24.0).unwrap();
        assert_eq!(l.compressed_units, 1);
        assert_eq!(l.alpha(), 0.25);
        assert!(l.is_consistent());
    }

    proptest! {
        #[test]
        fn monotone_in_alpha(b in 1u32..64, a1 in 0.0f64..=1.0, a2 in 0.0f64..=1.0, cap in 1.0f64..30.0) {
            let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
            let l = allocate(b, lo, cap).unwrap();
            let h = allocate(b, hi, cap).unwrap();
            prop_assert!(h.real_slots <= l.real_slots);
            prop_assert!(h.synthetic_slots >= l.synthetic_slots);
            prop_assert!(l.compressed_units <= b);
            prop_assert_eq!(l.real_slots + l.compressed_units, b);
        }
    }
}
