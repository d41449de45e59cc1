//! Desk-scale version of the intersection argument for shrinkers: connecting segment,
//! obstacle region between two disjoint surfaces, discrete F-minimizer and its certificate.

mod distance;
mod intersect;
mod obstacle;
mod verdict;

pub use distance::{Closest, SignedDistance};
pub use intersect::{intersection_test, segment_segment, segment_simplex, segment_triangle, simplex_pair, triangle_triangle, Witness};
pub use obstacle::{minimize_f_obstacle, Chain, Contact, MinimizeOptions, ObstacleMinimizer, ObstacleRegion};
pub use verdict::{find_segment, frankel_verdict, ConnectingSegment, FrankelOptions, FrankelVerdict, SegmentSearch};
