use tmmc::classifier::{Mode, TmmcConfig};
use tmmc::eval::evaluate;
use tmmc::features::gen_synthetic;
use tmmc::sampler::ProtocolConfig;

fn cell(dim: usize, classes: usize, sep: f64, q: usize, episodes: usize, dseed: u64, pseed: u64) -> (f64, f64, f64, f64) {
    let d = gen_synthetic(classes, 60, dim, sep, dseed).unwrap();
    let proto = ProtocolConfig::new(5, 1, q, episodes, pseed).unwrap();
    let t = TmmcConfig::default();
    let m = TmmcConfig { mode: Mode::Inductive, ..TmmcConfig::default() };
    let rt = evaluate(&d, &proto, &t).unwrap();
    let rm = evaluate(&d, &proto, &m).unwrap();
    let diffs: Vec<f64> = rt.per_episode_accuracy.iter().zip(&rm.per_episode_accuracy).map(|(a, b)| a - b).collect();
    let n = diffs.len() as f64;
    let mean: f64 = diffs.iter().sum::<f64>() / n;
    let sd = (diffs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    (rt.mean_accuracy, rm.mean_accuracy, mean, 1.96 * sd / n.sqrt())
}

#[test]
fn probe_2d() {
    for (classes, sep, q) in [
        (5usize, 2.0f64, 15usize), (5, 2.5, 15), (5, 3.0, 15), (5, 3.5, 15),
        (5, 3.0, 30), (6, 2.5, 15), (6, 3.0, 15), (6, 3.0, 30),
    ] {
        let (ta, ma, diff, ci) = cell(2, classes, sep, q, 200, 42, 7);
        eprintln!("classes={classes} sep={sep} q={q}: tmmc={ta:.4} mmc={ma:.4} diff={diff:+.4}±{ci:.4}");
    }
}
