//! Deterministic simulator of a robot painter that finances itself.
//!
//! The crate covers the whole loop: choosing a trending topic, rendering and
//! thinning its glyphs into strokes, planning a timed brush trajectory,
//! auctioning the painting through escrowed contracts, and spending the
//! proceeds on supplies and investor repayments inside a discrete-event
//! scenario engine.

pub mod ledger;
pub mod contracts;
pub mod raster;
pub mod strokes;
pub mod topic;
pub mod canvas;
pub mod motion;
pub mod pipeline;
pub mod agent;
