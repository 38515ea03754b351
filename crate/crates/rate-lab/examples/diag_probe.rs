use rate_lab::config::ExperimentConfig;
use rate_lab::runner::diagonal_exclusion_study;
use std::time::Instant;

fn main() {
    specfda::set_compute_threads(1);
    let text = "\
task = covariance\n\
kernel = brownian\n\
kernel2 = product:brownian\n\
filter = cutoff\n\
alpha = 0.5\n\
alpha1 = 0.5\n\
b = 2\n\
b1 = 2\n\
n_list = 200\n\
m = 8\n\
reps = 9\n\
xi = poly:2\n\
h_rule = unit\n\
seed = 88200805\n";
    for (xi, lam, band, modes) in [
        ("poly:4:0.3", "oracle", 0.08, 1000usize),
        ("poly:4:0.3", "fixed:5e-4", 0.08, 1000),
        ("poly:4:0.3", "fixed:1e-6", 0.08, 1000),
        ("poly:4:0.35", "fixed:1e-6", 0.1, 1000),
    ] {
        let t = text.replace("xi = poly:2", &format!("xi = {xi}"))
            + &format!("lambda = {lam}\ntensor_modes = {modes}\n");
        let cfg = ExperimentConfig::parse(&t).unwrap();
        let t0 = Instant::now();
        let study = diagonal_exclusion_study(&cfg, 200, 0.5, band).unwrap();
        let noise_ex = (study.excluded_noisy.powi(2) - study.excluded_quiet.powi(2)).max(0.0).sqrt();
        let ridge = (study.inclusive_near_noisy.powi(2) - study.inclusive_near_quiet.powi(2)).max(0.0).sqrt();
        println!(
            "xi={xi:<12} band={band}: excl q={:.4} ratio {:.3} (noise add {:.4}) | incl q={:.4} ratio {:.3} (ridge {:.4})  ({:.0}s)",
            study.excluded_quiet,
            study.excluded_ratio(),
            noise_ex,
            study.inclusive_near_quiet,
            study.inclusive_near_ratio(),
            ridge,
            t0.elapsed().as_secs_f64(),
        );
    }
}
