//! Fan-out of independent runs. With the `parallel` feature (default) work
//! is spread over the rayon pool; without it, or with
//! [`ExecMode::Sequential`], items are processed in order on the caller's
//! thread. Results always come back in input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::Result;
use crate::simulator::{integrate, IntegratorConfig, Network, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

pub fn map<T, R, F>(mode: ExecMode, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}

/// One integration per gain, sharing the network and initial state.
pub fn integrate_gains(
    mode: ExecMode,
    network: &Network,
    gains: &[f64],
    x0: &[f64],
    cfg: &IntegratorConfig,
) -> Vec<Result<Trajectory>> {
    map(mode, gains, |&k| integrate(network, k, x0, cfg))
}

/// One integration per initial state.
pub fn integrate_initial_states(
    mode: ExecMode,
    network: &Network,
    gain: f64,
    x0s: &[Vec<f64>],
    cfg: &IntegratorConfig,
) -> Vec<Result<Trajectory>> {
    map(mode, x0s, |x0| integrate(network, gain, x0, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_keep_order() {
        let items: Vec<u64> = (0..100).collect();
        let seq = map(ExecMode::Sequential, &items, |v| v * v);
        let par = map(ExecMode::Parallel, &items, |v| v * v);
        assert_eq!(seq, par);
        assert_eq!(seq[7], 49);
    }
}
