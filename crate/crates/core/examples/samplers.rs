//! The duration and arrival samplers on their own: triangular moments and
//! the Low/Moderate/High shift of a mode, plus hourly Poisson counts.

use storesim::engine::{stream_rng, StreamId};
use storesim::population::{
    adjust_delay, adjust_probability, next_arrival_gap, sample_triangular, FootfallTable, LikelihoodClass,
    TriangularSpec,
};

fn main() {
    let browse = TriangularSpec::new(2.0, 6.0, 15.0).unwrap();
    let mut rng = stream_rng(1, StreamId::Delays);
    for class in [LikelihoodClass::Low, LikelihoodClass::Moderate, LikelihoodClass::High] {
        let spec = adjust_delay(browse, class);
        let n = 200_000;
        let mean = (0..n).map(|_| sample_triangular(&spec, &mut rng)).sum::<f64>() / n as f64;
        println!(
            "{class:?}: mode {:.2}, sample mean {mean:.3} (exact {:.3}), buy probability at 0.6 -> {:.2}",
            spec.mode,
            spec.mean(),
            adjust_probability(0.6, class).unwrap()
        );
    }

    let mut table = FootfallTable::zeros();
    table.rate[0][12] = 45.0;
    let mut rng = stream_rng(1, StreamId::Arrivals);
    let mut counts = vec![];
    for _ in 0..1000 {
        let (mut t, mut k) = (0.0, 0);
        while let Some(gap) = next_arrival_gap(0, 12, &table, &mut rng) {
            t += gap;
            if t >= 60.0 {
                break;
            }
            k += 1;
        }
        counts.push(f64::from(k));
    }
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (counts.len() - 1) as f64;
    println!("arrivals in a 45/h hour: mean {mean:.2}, variance {var:.2}");
}
