//! A simulated robot arm that follows language-model plans through
//! dynamical-system actions and accepts physical corrections from a human.
//!
//! The layers, bottom up: [`pose`] math, [`ds`] actions, the
//! confidence-scheduled impedance [`controller`], the particle-filter
//! intent [`estimator`], the [`scene`] and its action dictionary, the
//! [`llm`] planner, the [`sim`] engine and the WebSocket [`gateway`].

pub mod approach;
pub mod controller;
pub mod ds;
pub mod estimator;
pub mod gateway;
pub mod llm;
pub mod pose;
pub mod scene;
pub mod sim;
