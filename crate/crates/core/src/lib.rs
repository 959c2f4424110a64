//! Agreement between two sequences observed on the same areal units.
//!
//! The pair is modelled as a bivariate GMCAR process on a lattice. The
//! spatial concordance coefficient is a function of the model parameters, so
//! its posterior follows from evaluating it at every MCMC draw.
//!
//! * [`lattice`]: adjacency, contiguity of any neighbor order, degrees.
//! * [`gmcar`]: covariance blocks, exact log-density, sampling.
//! * [`concordance`]: Lin, weighted multivariate and spatial coefficients.
//! * [`bayes`]: priors, random-walk Metropolis, HPD intervals, DIC.
//! * [`survey`]: Horvitz-Thompson and composite small-area estimators.
//! * [`cli`]: data files, result bundles and the commands behind the `latcon` CLI.

pub mod bayes;
pub mod cli;
pub mod concordance;
pub mod error;
pub mod gmcar;
pub mod lattice;
pub mod survey;

pub use error::{Error, Result};
