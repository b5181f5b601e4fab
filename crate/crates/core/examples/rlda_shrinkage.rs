// Shrinkage intensity and test accuracy of regularized LDA as the
// training set shrinks relative to the feature dimension.

use fbcsp::metrics::balanced_accuracy;
use fbcsp::rlda::{estimate_shrinkage, fit, Shrinkage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn sample(rng: &mut ChaCha8Rng, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<u8>) {
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % 2) as u8;
        // correlated features with the class difference on the first axis
        let common: f64 = rng.sample(StandardNormal);
        let row = (0..d)
            .map(|j| {
                let shift = if j == 0 && label == 1 { 1.5 } else { 0.0 };
                shift + 0.5 * common + rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        x.push(row);
        y.push(label);
    }
    (x, y)
}

pub fn run_example() -> fbcsp::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d = 40;
    let (test_x, test_y) = sample(&mut rng, 4000, d);
    println!("{:>6} {:>7} {:>10} {:>10}", "n", "gamma", "acc auto", "acc none");
    for n in [30, 60, 120, 480, 2000] {
        let (x, y) = sample(&mut rng, n, d);
        let gamma = estimate_shrinkage(&x, &y)?;
        let acc = |s| -> fbcsp::Result<f64> {
            let model = fit(&x, &y, s)?;
            let pred: Vec<u8> = model.predict(&test_x)?.iter().map(|p| p.label).collect();
            balanced_accuracy(&pred, &test_y)
        };
        let plain = match acc(Shrinkage::Fixed(0.0)) {
            Ok(a) => format!("{a:.3}"),
            Err(_) => "singular".into(),
        };
        println!("{n:>6} {gamma:>7.3} {:>10.3} {plain:>10}", acc(Shrinkage::Auto)?);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
