//! Wall-clock comparison of the closed-form generator against the
//! fixed-budget charge relaxation, cell by cell over (k, n) grids.
//!
//! The iterative side always runs its full iteration budget (the stop
//! threshold is set to the smallest positive float), so the work performed
//! per cell is deterministic and timings compare like for like.

use std::time::Instant;

use pedcc::generator::{run_charge_model, ChargeSimConfig};
use pedcc::linalg::RandomSeed;
use pedcc::{generate_pedcc, Error};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMethod {
    Analytic,
    Iterative,
}

impl BenchMethod {
    pub fn name(self) -> &'static str {
        match self {
            BenchMethod::Analytic => "analytic",
            BenchMethod::Iterative => "iterative",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchRecord {
    pub method: BenchMethod,
    pub k: usize,
    pub n: usize,
    pub wall_time_seconds: f64,
    pub max_cosine_deviation: f64,
    /// Only the iterative method reports an iteration count.
    pub iterations_used: Option<usize>,
}

/// Both methods measured on one (k, n) instance.
#[derive(Debug, Clone)]
pub struct BenchCell {
    pub analytic: BenchRecord,
    pub iterative: BenchRecord,
}

impl BenchCell {
    pub fn k(&self) -> usize {
        self.analytic.k
    }

    pub fn n(&self) -> usize {
        self.analytic.n
    }

    /// iterative time / analytic time
    pub fn speedup(&self) -> f64 {
        self.iterative.wall_time_seconds / self.analytic.wall_time_seconds
    }
}

fn run_cell(k: usize, n: usize, seed: u64, iters: usize) -> Result<BenchCell, Error> {
    let start = Instant::now();
    let analytic_set = generate_pedcc(k, n, RandomSeed(seed))?;
    let analytic = BenchRecord {
        method: BenchMethod::Analytic,
        k,
        n,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        max_cosine_deviation: analytic_set.max_pairwise_cosine_deviation(),
        iterations_used: None,
    };

    let cfg = ChargeSimConfig {
        max_iters: iters,
        stop_displacement: f64::MIN_POSITIVE,
        seed: RandomSeed(seed),
        ..ChargeSimConfig::default()
    };
    let start = Instant::now();
    let run = run_charge_model(k, n, &cfg)?;
    let iterative = BenchRecord {
        method: BenchMethod::Iterative,
        k,
        n,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        max_cosine_deviation: run.set.max_pairwise_cosine_deviation(),
        iterations_used: Some(run.iterations),
    };

    Ok(BenchCell {
        analytic,
        iterative,
    })
}

/// Runs every (k, n) cell of the grid. With `parallel` set, cells run on
/// independent threads (each cell is pure); output order stays the input
/// order either way. Note that parallel timings contend for cores.
pub fn run_bench(
    ks: &[usize],
    dims: &[usize],
    seed: u64,
    iters: usize,
    parallel: bool,
) -> Result<Vec<BenchCell>, Error> {
    let mut cells: Vec<(usize, usize)> = Vec::new();
    for &n in dims {
        for &k in ks {
            cells.push((k, n));
        }
    }
    if parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = cells
                .iter()
                .map(|&(k, n)| scope.spawn(move || run_cell(k, n, seed, iters)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("bench cell thread panicked"))
                .collect()
        })
    } else {
        cells
            .into_iter()
            .map(|(k, n)| run_cell(k, n, seed, iters))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shape_and_speedup_sign() {
        let cells = run_bench(&[3, 4], &[5], 1, 25, false).unwrap();
        assert_eq!(cells.len(), 2);
        for cell in &cells {
            assert_eq!(cell.iterative.iterations_used, Some(25));
            assert!(cell.speedup() > 0.0);
            assert!(cell.analytic.max_cosine_deviation <= 1e-10);
            assert!(cell.analytic.wall_time_seconds >= 0.0);
        }
        assert_eq!((cells[0].k(), cells[0].n()), (3, 5));
        assert_eq!((cells[1].k(), cells[1].n()), (4, 5));
    }

    #[test]
    fn parallel_and_serial_agree_on_everything_but_time() {
        let serial = run_bench(&[3], &[4, 6], 2, 20, false).unwrap();
        let parallel = run_bench(&[3], &[4, 6], 2, 20, true).unwrap();
        assert_eq!(serial.len(), parallel.len());
        for (a, b) in serial.iter().zip(&parallel) {
            assert_eq!(a.k(), b.k());
            assert_eq!(a.n(), b.n());
            assert_eq!(
                a.iterative.max_cosine_deviation,
                b.iterative.max_cosine_deviation
            );
        }
    }

    #[test]
    fn invalid_cells_fail() {
        assert!(run_bench(&[9], &[4], 0, 10, false).is_err());
    }
}
