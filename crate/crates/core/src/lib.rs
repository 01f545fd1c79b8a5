//! Crossratios, hyperbolicity and annulus systems on finite sets, trees and
//! their boundaries.

pub mod annulus;
pub mod cli;
pub mod crossratio;
pub mod finite_sharp;
pub mod fit;
pub mod metric_tree;
pub mod padic;
pub mod padic_projective;
pub mod quasimetric;
pub mod rational;
mod simplex;
pub mod suites;
pub mod tree_boundary;

pub use crossratio::{CrValue, CrossratioTable};
pub use fit::{fit_tree, TreeEmbedding};
pub use metric_tree::{MetricTree, NodeId};
pub use quasimetric::QuasimetricSpace;
pub use rational::Rational;
