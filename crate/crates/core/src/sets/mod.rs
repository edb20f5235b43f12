//! Interval and zonotope set representations.
//!
//! `Interval` works on bounds, `IntervalBox` on per-dimension center/radius
//! pairs (the encoding the learned operator consumes), and `Zonotope` on a
//! center plus generator columns. Conversions between them are explicit.

mod interval;
mod interval_box;
mod zonotope;

pub use interval::Interval;
pub use interval_box::IntervalBox;
pub use zonotope::{box_to_zonotope, support, zonotope_to_box, Zonotope};
