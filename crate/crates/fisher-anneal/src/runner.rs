use fisher_anneal_core::integrate::{advance_particle, Ensemble, InitialLaw, StepPlan, StepWindow};
use fisher_anneal_core::model::DynamicsSpec;
use rayon::prelude::*;

use crate::AppError;

const MIN_PARTICLES_PER_TASK: usize = 256;

/// Data-parallel ensemble stepping on a private thread pool.
///
/// Each particle draws from its own counter-based stream, so the states
/// after any number of steps are bit-identical to the sequential
/// [`fisher_anneal_core::integrate::run_trajectory`] for every thread count.
pub struct Runner {
    pool: rayon::ThreadPool,
}

impl Runner {
    /// `threads = None` uses rayon's default worker count.
    pub fn new(threads: Option<usize>) -> Result<Self, AppError> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            if n == 0 {
                return Err(AppError::Config("--threads must be at least 1".into()));
            }
            builder = builder.num_threads(n);
        }
        Ok(Runner { pool: builder.build()? })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Advances every particle by `n` steps. On failure the error of the
    /// lowest-indexed failing particle is returned, independent of
    /// scheduling.
    pub fn advance(&self, ens: &mut Ensemble, spec: &DynamicsSpec, n: u64) -> Result<(), AppError> {
        let window = StepWindow::new(spec, ens.t0, ens.h, ens.step_index, n)?;
        let (seed, noise) = (ens.seed, ens.noise);
        let failure = self.pool.install(|| {
            ens.states
                .par_iter_mut()
                .with_min_len(MIN_PARTICLES_PER_TASK)
                .enumerate()
                .find_map_first(|(p, x)| advance_particle(spec, &window, seed, p, x, noise).err())
        });
        if let Some(e) = failure {
            return Err(e.into());
        }
        ens.step_index += n;
        Ok(())
    }

    /// Samples the initial ensemble, steps it through `plan`, and calls
    /// `observe` at each recorded step.
    pub fn run<T>(
        &self,
        spec: &DynamicsSpec,
        plan: &StepPlan,
        m: usize,
        init: &InitialLaw,
        seed: u64,
        mut observe: impl FnMut(&Ensemble) -> Result<T, AppError>,
    ) -> Result<Vec<T>, AppError> {
        spec.validate()?;
        plan.validate_for(spec)?;
        let mut ens = Ensemble::sample(spec.state_dim(), m, init, plan, seed)?;
        let mut out = Vec::new();
        for target in plan.record_steps() {
            let n = target - ens.step_index;
            self.advance(&mut ens, spec, n)?;
            out.push(observe(&ens)?);
        }
        Ok(out)
    }
}
