//! Host-side conversions. Nothing here is part of the integer datapath.

/// Converts a jump in pixels per bin into pixels per second.
pub fn jump_to_velocity(j: i32, delta_t_us: u64) -> f64 {
    assert!(delta_t_us > 0, "bin duration must be positive");
    f64::from(j) * 1e6 / delta_t_us as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converts_jumps() {
        assert_eq!(jump_to_velocity(3, 40_000), 75.0);
        assert_eq!(jump_to_velocity(0, 40_000), 0.0);
        assert_eq!(jump_to_velocity(-4, 40_000), -100.0);
    }
}
