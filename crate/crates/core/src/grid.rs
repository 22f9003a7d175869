//! The `N x L` one-bit occupancy history.
//!
//! Layout: one `L`-bit shift register per pixel, stored in a `u64`. Bit `h`
//! of pixel `x`'s register holds the occupancy from `h` bins ago, so slot
//! `l` (0 = oldest, `L-1` = newest) lives at bit `L-1-l`. Insertion is a
//! shift-left-and-or on every register. A hypothesis trace reads bit `h` of
//! register `x0 - j*h`: one strided gather across registers.

use thiserror::Error;

use crate::binning::OccupancyVector;

/// Largest supported temporal depth (bits per register).
pub const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("grid dimensions {width}x{depth} unsupported (width >= 1, 1 <= depth <= 64)")]
    Dimensions { width: usize, depth: usize },
    #[error("occupancy vector has {got} bits, grid expects {expected}")]
    Mismatch { expected: usize, got: usize },
    #[error("cell ({x}, {slot}) outside {width}x{depth} grid")]
    OutOfRange {
        x: usize,
        slot: usize,
        width: usize,
        depth: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OccupancyGrid {
    regs: Vec<u64>,
    depth: usize,
    mask: u64,
    filled: usize,
}

impl OccupancyGrid {
    pub fn new(width: usize, depth: usize) -> Result<Self, GridError> {
        if width == 0 || depth == 0 || depth > MAX_DEPTH {
            return Err(GridError::Dimensions { width, depth });
        }
        let mask = if depth == MAX_DEPTH { u64::MAX } else { (1u64 << depth) - 1 };
        Ok(Self {
            regs: vec![0; width],
            depth,
            mask,
            filled: 0,
        })
    }

    pub fn width(&self) -> usize {
        self.regs.len()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Slots written since the last reset, saturating at `depth`.
    pub fn filled(&self) -> usize {
        self.filled
    }

    pub fn is_full(&self) -> bool {
        self.filled == self.depth
    }

    /// Shifts every register one slot toward the past and writes `vec` into
    /// the newest slot.
    pub fn shift_insert(&mut self, vec: &OccupancyVector) -> Result<(), GridError> {
        if vec.len() != self.width() {
            return Err(GridError::Mismatch {
                expected: self.width(),
                got: vec.len(),
            });
        }
        let mask = self.mask;
        for (x, reg) in self.regs.iter_mut().enumerate() {
            *reg = ((*reg << 1) | u64::from(vec.get(x))) & mask;
        }
        self.filled = (self.filled + 1).min(self.depth);
        Ok(())
    }

    /// `G[x, slot]`.
    pub fn read_cell(&self, x: usize, slot: usize) -> Result<bool, GridError> {
        if x >= self.width() || slot >= self.depth {
            return Err(GridError::OutOfRange {
                x,
                slot,
                width: self.width(),
                depth: self.depth,
            });
        }
        Ok(self.bit_at(x, self.depth - 1 - slot))
    }

    /// Occupancy of pixel `x` from `age` bins ago (0 = newest slot).
    /// Callers guarantee `x < width` and `age < depth`.
    #[inline]
    pub fn bit_at(&self, x: usize, age: usize) -> bool {
        (self.regs[x] >> age) & 1 == 1
    }

    /// Pixel `x`'s register: bit `h` is the occupancy `h` bins ago.
    #[inline]
    pub fn history(&self, x: usize) -> u64 {
        self.regs[x]
    }

    pub fn reset(&mut self) {
        self.regs.fill(0);
        self.filled = 0;
    }

    /// Payload size in bits.
    pub fn storage_bits(&self) -> usize {
        self.width() * self.depth
    }

    /// `L` rows of `N` `0`/`1` characters, oldest slot first.
    pub fn dump(&self) -> String {
        let mut out = String::with_capacity((self.width() + 1) * self.depth);
        for slot in 0..self.depth {
            let age = self.depth - 1 - slot;
            for x in 0..self.width() {
                out.push(if self.bit_at(x, age) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }
}
