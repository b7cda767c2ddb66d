// SPDX-License-Identifier: Apache-2.0

//! Gate-level simulation and design-space exploration for imprecise and
//! relaxed fault-tolerant arithmetic blocks.
//!
//! * [`netlist`]: gate-level IR, evaluation, fault injection, cost, TMR.
//! * [`blocks`]: precise, imprecise (LOA, BAM) and relaxed-TMR (RRCA, RAM,
//!   sectioned RFT adder) block generators with closed-form models.
//! * [`metrics`]: exhaustive and Monte-Carlo error statistics, fault studies,
//!   improvement percentages.
//! * [`apps`]: fixed-point MLP and weighted-plateau-average defuzzifier over
//!   pluggable arithmetic.
//! * [`explorer`]: parameter sweeps, Pareto filtering, table rendering.

pub mod apps;
pub mod blocks;
pub mod explorer;
pub mod metrics;
pub mod netlist;
pub mod rng;
