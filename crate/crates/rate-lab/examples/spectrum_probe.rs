use specfda::filter::Filter;
use specfda::kernel::Kernel1;
use specfda::mean::{fit_mean, mean_system, oracle_lambda_mean};
use specfda::numerics::{l2_norm_grid, Grid1D};
use specfda::synth::*;
use std::sync::Arc;

fn main() {
    specfda::set_compute_threads(1);
    let grid = Grid1D::uniform(513).unwrap();
    let mercer = Arc::new(specfda::kernel::mercer_system(&Kernel1::BrownianMin, 200, &grid).unwrap());
    let sm = make_source_mean(mercer, 0.5, HRule::FixedUnit).unwrap();
    let spec = make_process(sm, XiRule::Finite(vec![]), 0, 0.75, MScheme::Constant).unwrap();
    let truth = spec.true_mean_on(&grid);

    for n in [25usize, 50, 100, 200, 400] {
        let m = 5.0;
        let lambda = oracle_lambda_mean(n, m, 0.5, 2.0, f64::INFINITY).unwrap();
        let d = draw(&spec, n, m, 20240801).unwrap();
        let sys = mean_system(&d.samples, &Kernel1::BrownianMin).unwrap();
        let kept = sys.spectrum().iter().filter(|&&s| s >= lambda).count();
        let (est, _) = sys.fit(Filter::SpectralCutoff, lambda).unwrap();
        let fitted = est.evaluate_on(&grid);
        let diff: Vec<f64> = fitted.iter().zip(&truth).map(|(a, b)| a - b).collect();
        let err = l2_norm_grid(&diff, &grid).unwrap();
        println!(
            "n={n:>4} N={:>5} lambda={lambda:.5} kept={kept:>3} top5={:?} err={err:.5}",
            n * 5,
            sys.spectrum().iter().take(5).map(|s| (s * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
        );
        // also due diligence: tikhonov arm
        let (est_t, _) = fit_mean(&d.samples, &Kernel1::BrownianMin, Filter::Tikhonov, lambda).unwrap();
        let fitted_t = est_t.evaluate_on(&grid);
        let diff_t: Vec<f64> = fitted_t.iter().zip(&truth).map(|(a, b)| a - b).collect();
        println!("        tikhonov err={:.5}", l2_norm_grid(&diff_t, &grid).unwrap());
    }
}
