//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use gptcast::space::{make_classical, make_polygon, make_square_gbit};
use gptcast::StateSpace;

pub fn square() -> Arc<StateSpace> {
    Arc::new(make_square_gbit())
}

pub fn pentagon() -> Arc<StateSpace> {
    Arc::new(make_polygon(5).expect("pentagon is constructible"))
}

pub fn classical(n: usize) -> Arc<StateSpace> {
    Arc::new(make_classical(n).expect("classical simplex is constructible"))
}
