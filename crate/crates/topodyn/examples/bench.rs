use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;
use topodyn::dynamics::{integrate, SimConfig};
use topodyn::topology::OpinionState;

fn main() {
    for (n, k, tmax) in [(11usize, 5usize, 40.0), (30, 3, 100.0), (7, 3, 40.0), (20, 1, 80.0)] {
        let mut rng = ChaCha8Rng::seed_from_u64(8500);
        let st = OpinionState::new((0..n).map(|_| rng.gen::<f64>()).collect(), k).unwrap();
        let cfg = SimConfig { t_max: tmax, ..SimConfig::default() };
        let start = Instant::now();
        let traj = integrate(&st, &cfg).unwrap();
        println!(
            "n={n} k={k}: {:?} status={:?} t_final={:.2} events={} samples={}",
            start.elapsed(),
            traj.status,
            traj.final_time(),
            traj.events.len(),
            traj.samples.len()
        );
    }
}
