//! Shared computation for the data-producing commands: evolve once per
//! squeeze value, then condition and measure once per subtraction count.

use num_complex::Complex64;
use rayon::prelude::*;

use trisub::analysis::{mean_total_photons, moment_matrix, participation_ratio};
use trisub::detect::{
    conditional_pure_state, joint_distribution, JointDistribution, PnrPovm, SourceInfo,
};
use trisub::evolve::{evolve_multinomial, prepare_input, SqueezeSource};
use trisub::fock::ThreeModeState;
use trisub::trimer::TrimerUnitary;

use crate::config::RunConfig;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Observable {
    /// Total mean photon number 2<n>
    Meanphoton,
    /// Determinant of the second-order matrix of moments
    #[value(name = "detM", alias = "detm")]
    DetM,
    /// Schmidt-spectrum participation ratio (requires ideal detectors)
    Xi,
}

impl Observable {
    pub fn name(&self) -> &'static str {
        match self {
            Observable::Meanphoton => "meanphoton",
            Observable::DetM => "detM",
            Observable::Xi => "xi",
        }
    }
}

/// Propagated state for one squeeze value, reusable across N.
pub struct EvolvedPoint {
    pub r: f64,
    pub l_max: u32,
    pub state: ThreeModeState,
}

/// Evolve every configured squeeze value through the coupler, in parallel,
/// preserving input order.
pub fn evolve_grid(config: &RunConfig) -> Result<Vec<EvolvedPoint>, CliError> {
    let unitary = TrimerUnitary::from_theta(config.theta);
    run_in_pool(config.jobs, || {
        config
            .r_values
            .par_iter()
            .map(|&r| {
                let l_max = config.l_max_for(r);
                let source = SqueezeSource::new(Complex64::new(r, 0.0), l_max)
                    .map_err(CliError::from_core)?;
                let state = evolve_multinomial(&prepare_input(&source), &unitary)
                    .map_err(CliError::from_core)?;
                Ok(EvolvedPoint { r, l_max, state })
            })
            .collect()
    })
}

pub fn distribution_for(
    config: &RunConfig,
    point: &EvolvedPoint,
    subtracted: u32,
) -> Result<JointDistribution, trisub::Error> {
    let povm = PnrPovm::new(subtracted, config.eta_b)?;
    joint_distribution(
        &point.state,
        &povm,
        config.eta_outer,
        SourceInfo {
            r: Complex64::new(point.r, 0.0),
            theta: config.theta,
        },
    )
}

/// Observable value at one grid point. Herald-impossible points surface as
/// `Err` with the core error message; callers report them per-row.
pub fn observable_for(
    config: &RunConfig,
    point: &EvolvedPoint,
    subtracted: u32,
    observable: Observable,
) -> Result<f64, trisub::Error> {
    match observable {
        Observable::Meanphoton => mean_total_photons(&distribution_for(config, point, subtracted)?),
        Observable::DetM => {
            Ok(moment_matrix(&distribution_for(config, point, subtracted)?)?.determinant())
        }
        Observable::Xi => {
            let heralded = conditional_pure_state(&point.state, subtracted)?;
            Ok(participation_ratio(&heralded.state)?.participation_ratio())
        }
    }
}

/// Run a closure inside a rayon pool sized by --jobs (or the default pool).
pub fn run_in_pool<T, F>(jobs: Option<usize>, work: F) -> T
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    match jobs {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("failed to build worker pool")
            .install(work),
        None => work(),
    }
}
