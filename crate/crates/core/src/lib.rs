//! Software twin of a pair of tangible cubes: one carries six sensors, the
//! other six actuators, and whichever face is on top is live. The sensor cube
//! reduces its reading to an intermediate value in `0..=24` and sends it over
//! a lossy link; the actuator cube maps that value onto its output.
//!
//! - [`model`]: kinds, faces, orientation, commands
//! - [`sensor`] / [`actuator`]: the stock mapping tables
//! - [`dsl`]: textual mapping programs that can replace any stock mapping
//! - [`link`]: the ten-byte frame and the simulated radio
//! - [`sim`]: the discrete-event engine, scenarios and traces
//! - [`batch`]: parallel sweeps over inputs and seeds

pub mod actuator;
pub mod batch;
pub mod dsl;
pub mod link;
pub mod model;
pub mod sensor;
pub mod sim;
pub mod sweep;
