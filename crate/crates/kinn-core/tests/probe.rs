use kinn_core::corpus;
use kinn_core::forward::{train_forward, ForwardProblem, Stage, StageSchedule};

fn run2(name: &str, ic: usize, lrs: [f64; 3], split: [usize; 3], seed: u64) {
    let bundle = corpus::bundled(name).unwrap();
    let net = bundle.network();
    let ics = [corpus::IC1, corpus::IC2];
    let mut problem = ForwardProblem::new(
        net.clone(),
        bundle.parameters(),
        corpus::initial_state(&net, ics[ic]),
        bundle.horizons[ic],
        bundle.hidden,
        bundle.kappa_hidden,
    );
    problem.schedule = StageSchedule {
        stages: (0..3)
            .map(|i| Stage { lr: lrs[i], epochs: split[i], iters_per_epoch: 100 })
            .collect(),
    };
    let start = std::time::Instant::now();
    match train_forward(&problem, seed) {
        Ok((_, report)) => {
            let lat = report
                .latent_derivs
                .map(|m| format!("{:.6}", m.r2))
                .unwrap_or_else(|| "-".into());
            println!(
                "{name} IC{} lrs{:?} split{:?}: {:?} loss={:.3e} obs_deriv_r2={:.6} latent={lat}",
                ic + 1, lrs, split,
                start.elapsed(),
                report.final_loss,
                report.observed_derivs.r2,
            );
        }
        Err(e) => println!("{name} IC{} lrs{:?}: FAILED {e}", ic + 1, lrs),
    }
}

#[test]
fn probe_a() { run2("dc", 0, [1e-3, 1e-4, 1e-5], [1500, 1500, 1500], 17); }
#[test]
fn probe_b() { run2("dc", 0, [1e-3, 1e-4, 1e-5], [1500, 1500, 1500], 3); }
