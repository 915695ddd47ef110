use std::sync::atomic::{AtomicU8, Ordering};

use serde::{Deserialize, Serialize};

/// Working precision for real-place quantities that are not exact rationals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchPrecision {
    /// IEEE double, unit roundoff 2^-53.
    #[default]
    Double,
    /// Double-double, unit roundoff about 2^-106.
    Extended,
}

impl ArchPrecision {
    /// Relative unit roundoff; real-place tolerances are multiples of this.
    pub fn epsilon(self) -> f64 {
        match self {
            ArchPrecision::Double => f64::EPSILON,
            ArchPrecision::Extended => f64::EPSILON * f64::EPSILON,
        }
    }
}

static PRECISION: AtomicU8 = AtomicU8::new(0);

pub fn set_arch_precision(p: ArchPrecision) {
    PRECISION.store(p as u8, Ordering::Relaxed);
}

pub fn arch_precision() -> ArchPrecision {
    match PRECISION.load(Ordering::Relaxed) {
        0 => ArchPrecision::Double,
        _ => ArchPrecision::Extended,
    }
}
