//! Runtime bit-width audit for the integer scoring datapath.
//!
//! When enabled, every score, step count and product on the scoring path is
//! checked against the register width it would occupy in hardware. Disabled,
//! each check is a single relaxed load.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

#[derive(Debug, Default)]
pub struct DatapathAudit {
    enabled: AtomicBool,
    checks: AtomicU64,
    violations: AtomicU64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct AuditReport {
    pub checks: u64,
    pub violations: u64,
}

static GLOBAL: DatapathAudit = DatapathAudit::new();

/// The process-wide audit used by the scoring path.
pub fn global() -> &'static DatapathAudit {
    &GLOBAL
}

impl DatapathAudit {
    pub const fn new() -> Self {
        Self {
            enabled: AtomicBool::new(false),
            checks: AtomicU64::new(0),
            violations: AtomicU64::new(0),
        }
    }

    pub fn set_enabled(&self, on: bool) {
        self.enabled.store(on, Ordering::Relaxed);
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled.load(Ordering::Relaxed)
    }

    /// Records whether `value` fits in an unsigned register of `width` bits.
    /// Returns false on a violation. No-op (returns true) when disabled.
    #[inline]
    pub fn record(&self, value: u32, width: u32) -> bool {
        if !self.is_enabled() {
            return true;
        }
        self.checks.fetch_add(1, Ordering::Relaxed);
        let fits = width >= 32 || value >> width == 0;
        if !fits {
            self.violations.fetch_add(1, Ordering::Relaxed);
        }
        fits
    }

    pub fn report(&self) -> AuditReport {
        AuditReport {
            checks: self.checks.load(Ordering::Relaxed),
            violations: self.violations.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        self.checks.store(0, Ordering::Relaxed);
        self.violations.store(0, Ordering::Relaxed);
    }
}

/// Checks `value` against `width` on the global audit.
#[inline]
pub(crate) fn check_width(value: u32, width: u32) {
    let ok = GLOBAL.record(value, width);
    debug_assert!(ok, "datapath width violation: {value} does not fit in {width} bits");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disabled_audit_records_nothing() {
        let a = DatapathAudit::new();
        assert!(a.record(1000, 2));
        assert_eq!(a.report(), AuditReport::default());
    }

    #[test]
    fn counts_violations() {
        let a = DatapathAudit::new();
        a.set_enabled(true);
        assert!(a.record(31, 5));
        assert!(!a.record(32, 5));
        assert!(a.record(255, 8));
        assert!(!a.record(256, 8));
        assert_eq!(a.report(), AuditReport { checks: 4, violations: 2 });
        a.reset();
        assert_eq!(a.report().checks, 0);
    }
}
