//! Energy grids and multi-channel states on them.

mod grid;
mod state;

pub use grid::{EnergyGrid, Spacing, MIN_NODES};
pub use state::{
    energy_to_momentum, inner_product, momentum_to_energy, ChannelState, MomentumState,
    ALIASING_TOLERANCE, MINUS, NORMALIZATION_TOLERANCE, PLUS,
};
